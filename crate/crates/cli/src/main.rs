mod data;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use komohe::assessment::{load_corpus, sample_assessment};
use komohe::inference::{detect_variant_mappings, export_inferred, infer_pivot, promote};
use komohe::query::{expand_query, parse_query, ExpansionConfig};
use komohe::skos::{export_skos, import_skos};
use komohe::store::{format_mapping_line, LookupFilter};
use komohe::translate::translate;
use komohe::{CrosswalkId, Language, RelationType, RelevanceRating, Store, Vocabulary};
use komohe_service::ServiceConfig;

use data::DataDir;

/// Cross-concordance store: import, look up, expand and infer term mappings
/// between controlled vocabularies.
#[derive(Parser)]
#[command(name = "komohe", version)]
struct Cli {
    /// Data directory holding the store snapshot.
    #[arg(
        long,
        global = true,
        env = "KOMOHE_DATA",
        default_value = "komohe-data"
    )]
    data: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import crosswalk TSV files into the store.
    Import {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Refuse to save anything if a line is rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Write crosswalks as TSV (all of them by default).
    Export(CrosswalkArgs),
    /// Add terms to a vocabulary from a term-list file.
    Terms {
        vocab: String,
        file: PathBuf,
        /// Declare the vocabulary language (ISO 639-1).
        #[arg(long)]
        lang: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        discipline: Option<String>,
    },
    /// Mappings whose source is TERM, as TSV rows.
    Lookup {
        term: String,
        /// Source vocabulary.
        #[arg(long)]
        vocab: Option<String>,
        /// Target vocabulary.
        #[arg(long)]
        target: Option<String>,
        /// Comma-separated relation symbols, e.g. "=,^".
        #[arg(long)]
        relation: Option<String>,
        #[arg(long)]
        min_rating: Option<RelevanceRating>,
    },
    /// Expand a Boolean query and print it in canonical form.
    Expand {
        query: String,
        /// Comma-separated relation symbols (default "=").
        #[arg(long)]
        relations: Option<String>,
        /// Comma-separated target vocabularies.
        #[arg(long)]
        vocabs: Option<String>,
        /// Maximum terms added per leaf.
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        min_rating: Option<RelevanceRating>,
        /// Also expand leaves under NOT.
        #[arg(long)]
        expand_not: bool,
        /// Print the expansion trace to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Equivalent terms in vocabularies of another language.
    Translate {
        term: String,
        #[arg(long)]
        to: Language,
        #[arg(long)]
        from: Option<Language>,
    },
    /// Infer FROM→TO mappings through the VIA vocabulary.
    Infer {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        via: String,
        /// Write the inferred mappings into the store.
        #[arg(long)]
        promote: bool,
    },
    /// Terms mapped by equivalence to different concepts of TARGET from
    /// different source vocabularies.
    Variants { target: String },
    /// Spot-check a sample of a crosswalk against a document corpus.
    Check {
        #[arg(long)]
        crosswalk: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 20)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write crosswalks as SKOS N-Triples.
    SkosExport(CrosswalkArgs),
    /// Read SKOS mapping triples into the SOURCE-TARGET crosswalk.
    SkosImport {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
    },
    /// Per-crosswalk counts by relation and rating.
    Stats,
    /// Run the HTTP lookup service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct CrosswalkArgs {
    /// Crosswalk id SOURCE-TARGET; repeatable.
    #[arg(long = "crosswalk")]
    crosswalks: Vec<String>,
}

#[derive(Args)]
struct ServeArgs {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    port: Option<String>,
    /// Extra crosswalk TSV file; repeatable.
    #[arg(long = "crosswalks")]
    crosswalks: Vec<PathBuf>,
    /// Extra term-list file; repeatable.
    #[arg(long = "term-lists")]
    term_lists: Vec<PathBuf>,
    #[arg(long)]
    read_timeout_ms: Option<String>,
    #[arg(long)]
    max_expansion_terms: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("komohe: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let data = DataDir::new(cli.data);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Import { files, strict } => import(&data, &files, strict)?,
        Command::Export(args) => {
            let store = data.load()?;
            let ids = crosswalk_ids(&store, &args.crosswalks)?;
            store.export_tsv(&ids, &mut out)?;
        }
        Command::Terms {
            vocab,
            file,
            lang,
            name,
            discipline,
        } => terms(&data, &vocab, &file, lang, name, discipline)?,
        Command::Lookup {
            term,
            vocab,
            target,
            relation,
            min_rating,
        } => {
            let store = data.load()?;
            let mut filter = LookupFilter::default();
            if let Some(vocab) = &vocab {
                require_vocab(&store, vocab)?;
                filter = filter.source_vocab(vocab);
            }
            if let Some(target) = &target {
                require_vocab(&store, target)?;
                filter = filter.target_vocab(target);
            }
            if let Some(relation) = &relation {
                filter = filter.relations(RelationType::parse_set(relation)?);
            }
            if let Some(rating) = min_rating {
                filter = filter.min_rating(rating);
            }
            komohe::normalize_term(&term)?;
            for record in store.mappings_from(&term, &filter) {
                writeln!(out, "{}", format_mapping_line(&store, record))?;
            }
        }
        Command::Expand {
            query,
            relations,
            vocabs,
            max,
            min_rating,
            expand_not,
            trace,
        } => {
            let store = data.load()?;
            let ast = parse_query(&query)?;
            let mut cfg = ExpansionConfig::default().with_expand_under_not(expand_not);
            if let Some(relations) = &relations {
                cfg = cfg.with_relations(RelationType::parse_set(relations)?)?;
            }
            if let Some(vocabs) = &vocabs {
                cfg = cfg.with_target_vocabs(split_list(vocabs));
            }
            if let Some(max) = max {
                cfg = cfg.with_max_terms(max)?;
            }
            if let Some(rating) = min_rating {
                cfg = cfg.with_min_rating(rating);
            }
            let (expanded, expansion) = expand_query(&store, &ast, &cfg);
            writeln!(out, "{}", expanded.render())?;
            if trace {
                for leaf in &expansion.leaves {
                    for e in &leaf.added {
                        eprintln!(
                            "{}\t{}\t{}\t{}\t{}\t{}",
                            leaf.leaf,
                            e.relation,
                            e.term,
                            e.source_vocab,
                            e.target_vocab,
                            e.rating.name()
                        );
                    }
                }
            }
        }
        Command::Translate { term, to, from } => {
            let store = data.load()?;
            komohe::normalize_term(&term)?;
            for t in translate(&store, &term, from.as_ref(), &to)? {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    t.term,
                    t.vocab,
                    t.rating.name(),
                    t.crosswalk
                )?;
            }
        }
        Command::Infer {
            from,
            to,
            via,
            promote: write,
        } => {
            let mut store = data.load()?;
            let inferred = infer_pivot(&store, &from, &to, &via)?;
            export_inferred(&store, &inferred, &mut out)?;
            if write {
                let report = promote(&mut store, &inferred)?;
                data.save(&store)?;
                eprintln!(
                    "promoted {} mappings into {from}-{to} ({} already present)",
                    report.added, report.duplicates
                );
            }
        }
        Command::Variants { target } => {
            let store = data.load()?;
            require_vocab(&store, &target)?;
            for c in detect_variant_mappings(&store, &target) {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    c.term,
                    c.vocab_pair.0,
                    c.targets.0,
                    c.vocab_pair.1,
                    c.targets.1,
                    c.target_vocab
                )?;
            }
        }
        Command::Check {
            crosswalk,
            corpus,
            sample,
            seed,
        } => {
            let store = data.load()?;
            let id = store.resolve_crosswalk(&crosswalk)?;
            let file =
                File::open(&corpus).with_context(|| format!("opening {}", corpus.display()))?;
            let (corpus_data, errors) = load_corpus(BufReader::new(file))?;
            for err in &errors {
                eprintln!("{}:{}: {}", corpus.display(), err.line, err.reason);
            }
            sample_assessment(&store, &id, &corpus_data, sample, seed)?.write_tsv(&mut out)?;
        }
        Command::SkosExport(args) => {
            let store = data.load()?;
            let ids = crosswalk_ids(&store, &args.crosswalks)?;
            let report = export_skos(&store, &ids, &mut out)?;
            eprintln!(
                "{} triples; skipped {} null and {} combination mappings",
                report.triples, report.skipped_null, report.skipped_combination
            );
        }
        Command::SkosImport {
            file,
            source,
            target,
        } => {
            let mut store = data.load()?;
            let reader = BufReader::new(
                File::open(&file).with_context(|| format!("opening {}", file.display()))?,
            );
            let report = import_skos(&mut store, reader, &source, &target)?;
            for w in &report.warnings {
                eprintln!("{}:{}: warning: {}", file.display(), w.line, w.reason);
            }
            for e in &report.errors {
                eprintln!("{}:{}: {}", file.display(), e.line, e.reason);
            }
            data.save(&store)?;
            eprintln!(
                "imported {} mappings into {source}-{target}",
                report.mappings_added
            );
        }
        Command::Stats => write_stats(&data.load()?, &mut out)?,
        Command::Serve(args) => {
            out.flush()?;
            return serve(&data, args);
        }
    }
    out.flush()?;
    Ok(())
}

fn split_list(list: &str) -> impl Iterator<Item = &str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn require_vocab(store: &Store, vocab: &str) -> Result<()> {
    if !store.registry().contains(vocab) {
        bail!("unknown vocabulary {vocab:?}");
    }
    Ok(())
}

fn crosswalk_ids(store: &Store, names: &[String]) -> Result<Vec<CrosswalkId>> {
    if names.is_empty() {
        return Ok(store.crosswalks().cloned().collect());
    }
    names
        .iter()
        .map(|n| store.resolve_crosswalk(n).map_err(Into::into))
        .collect()
}

fn import(data: &DataDir, files: &[PathBuf], strict: bool) -> Result<()> {
    let mut store = data.load()?;
    let mut rejected = 0;
    for path in files {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let report = store
            .import_tsv(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        for err in &report.errors {
            eprintln!("{}:{}: {}", path.display(), err.line, err.reason);
        }
        rejected += report.errors.len();
        eprintln!(
            "{}: {} mappings added, {} crosswalks created, {} lines rejected",
            path.display(),
            report.mappings_added,
            report.crosswalks_created,
            report.errors.len()
        );
    }
    if strict && rejected > 0 {
        bail!("{rejected} lines rejected; nothing saved");
    }
    data.save(&store)
}

fn terms(
    data: &DataDir,
    vocab: &str,
    file: &Path,
    lang: Option<String>,
    name: Option<String>,
    discipline: Option<String>,
) -> Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mut store = data.load()?;
    if let Some(lang) = lang {
        let mut v = Vocabulary::new(vocab, &lang)?;
        if let Some(name) = name {
            v = v.with_name(name);
        }
        if let Some(discipline) = discipline {
            v = v.with_discipline(discipline);
        }
        store.registry_mut().declare_vocabulary(v)?;
    } else if name.is_some() || discipline.is_some() {
        bail!("--name and --discipline need --lang");
    }
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let list = if first.starts_with("#terms") {
        match first.split_whitespace().nth(1) {
            Some(id) if id == vocab => text,
            other => bail!(
                "{} declares vocabulary {:?}, not {vocab:?}",
                file.display(),
                other.unwrap_or("")
            ),
        }
    } else {
        format!("#terms {vocab}\n{text}")
    };
    let (_, added) = store.registry_mut().import_term_list(list.as_bytes())?;
    data.save(&store)?;
    eprintln!("{vocab}: {added} terms added");
    Ok(())
}

fn write_stats<W: Write>(store: &Store, out: &mut W) -> Result<()> {
    write!(out, "#crosswalk\tmappings")?;
    for r in RelationType::ALL {
        write!(out, "\t{}", r.symbol())?;
    }
    for r in RelevanceRating::ALL.iter().rev() {
        write!(out, "\t{}", r.name())?;
    }
    writeln!(out)?;
    for (id, s) in store.stats() {
        write!(out, "{id}\t{}", s.mapping_count)?;
        for r in RelationType::ALL {
            write!(out, "\t{}", s.relation(r))?;
        }
        for r in RelevanceRating::ALL.iter().rev() {
            write!(out, "\t{}", s.rating(*r))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn serve(data: &DataDir, args: ServeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    let overrides = [
        ("bind", args.bind),
        ("port", args.port),
        ("read_timeout_ms", args.read_timeout_ms),
        ("max_expansion_terms", args.max_expansion_terms),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            config.set(key, &value).map_err(anyhow::Error::msg)?;
        }
    }
    config.crosswalks.extend(args.crosswalks);
    config.term_lists.extend(args.term_lists);
    if config.crosswalks.is_empty() && config.term_lists.is_empty() {
        let snapshot = data.snapshot_path();
        if snapshot.exists() {
            config.crosswalks.push(snapshot);
        } else {
            bail!(
                "no data files configured and no store in {}",
                data.root().display()
            );
        }
    }

    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let handle = komohe_service::serve(&config).await?;
        handle.run_until_signal().await?;
        Ok(())
    })
}
