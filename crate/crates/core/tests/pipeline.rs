use komohe::inference::{detect_variant_mappings, infer_pivot, promote};
use komohe::query::{expand_query, parse_query, ExpansionConfig};
use komohe::skos::{export_skos, import_skos};
use komohe::store::LookupFilter;
use komohe::{CrosswalkId, RelationType, Store};

const TAB1: &str = "#komohe-tsv v1
A\thacker\t=\tB\thacking\thigh
A\thacker\t^\tB\tcomputers + crime\tmedium
A\thacker\t^\tB\tinternet + security\tmedium
A\tisdn device\t0\t\t\t
A\tisdn\t<\tB\ttelecommunications\thigh
A\tdocumentation system\t>\tB\tabstracting services\tmedium
";

fn tab1() -> Store {
    let mut store = Store::new();
    let report = store.import_tsv(TAB1.as_bytes()).unwrap();
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(report.mappings_added, 6);
    store
}

fn targets(store: &Store, term: &str) -> Vec<String> {
    store
        .mappings_from(term, &LookupFilter::default())
        .iter()
        .map(|r| {
            let target = r.mapping.target_members().join(" + ");
            format!("{} {}", r.mapping.relation.symbol(), target)
        })
        .collect()
}

#[test]
fn lookup_after_import() {
    let store = tab1();
    assert_eq!(
        targets(&store, "Hacker"),
        ["= hacking", "^ computers + crime", "^ internet + security"]
    );
    assert_eq!(targets(&store, "isdn  device"), ["0 "]);
    assert!(targets(&store, "hacking").is_empty());
    let reverse = store.mappings_to("telecommunications", Some("B"));
    assert_eq!(reverse.len(), 1);
    assert_eq!(reverse[0].mapping.source, "isdn");
}

#[test]
fn expansion_keeps_operators() {
    let store = tab1();
    let ast = parse_query("hacker AND NOT isdn").unwrap();
    let (expanded, trace) = expand_query(&store, &ast, &ExpansionConfig::default());
    assert_eq!(
        expanded.render(),
        r#"(("hacker" OR "hacking") AND (NOT "isdn"))"#
    );
    assert_eq!(trace.leaves.len(), 1);

    let cfg = ExpansionConfig::default()
        .with_relations(RelationType::parse_set("=,^").unwrap())
        .unwrap();
    let (expanded, _) = expand_query(&store, &parse_query("hacker").unwrap(), &cfg);
    assert_eq!(
        expanded.render(),
        r#"("hacker" OR "hacking" OR ("computers" AND "crime") OR ("internet" AND "security"))"#
    );
}

#[test]
fn snapshot_and_export_round_trip() {
    let store = tab1();
    let mut snapshot = Vec::new();
    store.write_snapshot(&mut snapshot).unwrap();
    let mut reloaded = Store::new();
    reloaded.import_tsv(snapshot.as_slice()).unwrap();
    let mut again = Vec::new();
    reloaded.write_snapshot(&mut again).unwrap();
    assert_eq!(
        String::from_utf8(snapshot).unwrap(),
        String::from_utf8(again).unwrap()
    );

    let id = CrosswalkId::new("A", "B");
    let mut export = Vec::new();
    store
        .export_tsv(std::slice::from_ref(&id), &mut export)
        .unwrap();
    let mut from_export = Store::new();
    from_export.import_tsv(export.as_slice()).unwrap();
    assert_eq!(from_export.len(), store.len());
    assert_eq!(targets(&from_export, "hacker"), targets(&store, "hacker"));
}

#[test]
fn skos_carries_single_targets_only() {
    let store = tab1();
    let id = CrosswalkId::new("A", "B");
    let mut nt = Vec::new();
    let report = export_skos(&store, &[id], &mut nt).unwrap();
    assert_eq!(report.triples, 3);
    assert_eq!(report.skipped_null, 1);
    assert_eq!(report.skipped_combination, 2);

    let mut back = Store::new();
    let imported = import_skos(&mut back, nt.as_slice(), "A", "B").unwrap();
    assert!(imported.errors.is_empty());
    assert_eq!(imported.mappings_added, 3);
    assert_eq!(targets(&back, "isdn"), ["< telecommunications"]);
}

#[test]
fn pivot_then_promote() {
    let mut store = tab1();
    store
        .import_tsv(
            "#komohe-tsv v1\nB\thacking\t=\tC\tcomputer crime\tmedium\n\
             B\ttelecommunications\t<\tC\tcommunication\thigh\n"
                .as_bytes(),
        )
        .unwrap();
    let inferred = infer_pivot(&store, "A", "C", "B").unwrap();
    let lines: Vec<String> = inferred
        .iter()
        .map(|m| {
            format!(
                "{} {} {} {}",
                m.source,
                m.relation.symbol(),
                m.target,
                m.confidence.name()
            )
        })
        .collect();
    assert_eq!(
        lines,
        ["hacker = computer crime low", "isdn < communication medium"]
    );

    let first = promote(&mut store, &inferred).unwrap();
    assert_eq!((first.added, first.duplicates), (2, 0));
    let second = promote(&mut store, &inferred).unwrap();
    assert_eq!((second.added, second.duplicates), (0, 2));
    assert_eq!(
        store
            .mappings_from("hacker", &LookupFilter::default().target_vocab("C"))
            .len(),
        1
    );
}

#[test]
fn variants_between_source_vocabularies() {
    let mut store = Store::new();
    store
        .import_tsv(
            "#komohe-tsv v1\nA\tyouth\t=\tT\tyoung people\thigh\n\
             B\tyouth\t=\tT\tadolescents\thigh\n\
             A\tlabour\t=\tT\twork\thigh\n\
             B\tlabour\t=\tT\twork\thigh\n"
                .as_bytes(),
        )
        .unwrap();
    let conflicts = detect_variant_mappings(&store, "T");
    assert_eq!(conflicts.len(), 1, "{conflicts:?}");
    assert_eq!(conflicts[0].term, "youth");
}
