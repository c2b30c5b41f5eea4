use std::fs;
use std::io::Read;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use tempfile::TempDir;

const TAB1: &str = "#komohe-tsv v1
A\thacker\t=\tB\thacking\thigh
A\thacker\t^\tB\tcomputers + crime\tmedium
A\thacker\t^\tB\tinternet + security\tmedium
A\tisdn device\t0\t\t\t
A\tisdn\t<\tB\ttelecommunications\thigh
A\tdocumentation system\t>\tB\tabstracting services\tmedium
";

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        Env {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn with_tab1() -> Self {
        let env = Env::new();
        let file = env.file("tab1.tsv", TAB1);
        env.ok(&["import", file.to_str().unwrap()]);
        env
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn cmd(&self) -> Command {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_komohe"));
        cmd.env("KOMOHE_DATA", self.dir.path().join("data"));
        cmd
    }

    fn run(&self, args: &[&str]) -> Output {
        self.cmd().args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "komohe {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn code(&self, args: &[&str]) -> i32 {
        self.run(args).status.code().unwrap()
    }
}

#[test]
fn lookup_prints_tsv_rows() {
    let env = Env::with_tab1();
    let rows: Vec<&str> = TAB1.lines().skip(1).collect();
    assert_eq!(
        env.ok(&["lookup", "hacker"]).lines().collect::<Vec<_>>(),
        rows[..3]
    );
    assert_eq!(
        env.ok(&["lookup", "HACKER", "--relation", "^"])
            .lines()
            .count(),
        2
    );
    assert_eq!(
        env.ok(&["lookup", "hacker", "--min-rating", "high"]),
        format!("{}\n", rows[0])
    );
    assert_eq!(env.ok(&["lookup", "isdn device"]), format!("{}\n", rows[3]));
    assert_eq!(env.ok(&["lookup", "nothing here"]), "");
}

#[test]
fn exit_codes() {
    let env = Env::with_tab1();
    assert_eq!(env.code(&["lookup"]), 2);
    assert_eq!(env.code(&["frobnicate"]), 2);
    assert_eq!(env.code(&["lookup", "hacker", "--colour"]), 2);
    assert_eq!(env.code(&["lookup", "hacker", "--min-rating", "great"]), 2);
    assert_eq!(env.code(&["translate", "x", "--to", "xx"]), 2);
    assert_eq!(env.code(&[]), 2);
    assert_eq!(env.code(&["lookup", "hacker", "--vocab", "Z"]), 1);
    assert_eq!(env.code(&["lookup", "hacker", "--relation", "?"]), 1);
    assert_eq!(env.code(&["expand", "hacker AND"]), 1);
    assert_eq!(env.code(&["export", "--crosswalk", "B-A"]), 1);
    assert_eq!(env.code(&["import", "/nonexistent.tsv"]), 1);
    assert_eq!(env.code(&["--help"]), 0);

    let out = env.run(&["expand", "(hacker"]);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("position"));
}

#[test]
fn expand_outputs_canonical_query() {
    let env = Env::with_tab1();
    assert_eq!(
        env.ok(&["expand", "hacker AND security"]),
        "((\"hacker\" OR \"hacking\") AND \"security\")\n"
    );
    assert_eq!(
        env.ok(&[
            "expand",
            "hacker security",
            "--relations",
            "=,^",
            "--max",
            "2"
        ]),
        "((\"hacker\" OR \"hacking\" OR (\"computers\" AND \"crime\")) AND \"security\")\n"
    );
    assert_eq!(env.ok(&["expand", "NOT hacker"]), "(NOT \"hacker\")\n");
    assert_eq!(
        env.ok(&["expand", "NOT hacker", "--expand-not"]),
        "(NOT (\"hacker\" OR \"hacking\"))\n"
    );
    let out = env.run(&["expand", "hacker", "--trace"]);
    assert_eq!(
        String::from_utf8_lossy(&out.stderr),
        "hacker\t=\thacking\tA\tB\thigh\n"
    );
}

#[test]
fn import_reports_rejected_lines() {
    let env = Env::new();
    let file = env.file(
        "bad.tsv",
        "#komohe-tsv v1\nA\thacker\t=\tB\thacking\thigh\nA\tbroken line\n",
    );
    let strict = env.run(&["import", "--strict", file.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("bad.tsv:3:"));
    assert_eq!(
        env.ok(&["stats"]).lines().count(),
        1,
        "strict import saved data"
    );

    env.ok(&["import", file.to_str().unwrap()]);
    assert_eq!(
        env.ok(&["lookup", "hacker"]),
        "A\thacker\t=\tB\thacking\thigh\n"
    );
    let header_only = env.file("nohdr.tsv", "A\tx\t=\tB\ty\thigh\n");
    assert_eq!(env.code(&["import", header_only.to_str().unwrap()]), 1);
}

#[test]
fn export_round_trips_through_another_data_dir() {
    let env = Env::with_tab1();
    let exported = env.ok(&["export", "--crosswalk", "A-B"]);
    assert_eq!(exported, env.ok(&["export"]));
    let copy = Env::new();
    let file = copy.file("copy.tsv", &exported);
    copy.ok(&["import", "--strict", file.to_str().unwrap()]);
    assert_eq!(copy.ok(&["export"]), exported);
    assert_eq!(copy.ok(&["stats"]), env.ok(&["stats"]));
}

#[test]
fn data_flag_overrides_environment() {
    let env = Env::with_tab1();
    let other = env.dir.path().join("elsewhere");
    let out = env.ok(&["--data", other.to_str().unwrap(), "lookup", "hacker"]);
    assert_eq!(out, "");
    assert_eq!(env.ok(&["lookup", "hacker"]).lines().count(), 3);
}

#[test]
fn stats_columns() {
    let env = Env::with_tab1();
    assert_eq!(
        env.ok(&["stats"]),
        "#crosswalk\tmappings\t=\t<\t>\t^\t0\thigh\tmedium\tlow\tunrated\n\
         A-B\t6\t1\t1\t1\t2\t1\t2\t3\t0\t1\n"
    );
}

#[test]
fn terms_and_translate() {
    let env = Env::new();
    let de = env.file("de.txt", "Jugend\nArbeitsmarkt\n");
    let en = env.file(
        "en.txt",
        "#terms en-vocab en social-sciences English Thesaurus\nYouth\nLabour market\n",
    );
    env.ok(&["terms", "de-vocab", de.to_str().unwrap(), "--lang", "de"]);
    env.ok(&["terms", "en-vocab", en.to_str().unwrap()]);
    assert_eq!(env.code(&["terms", "other", en.to_str().unwrap()]), 1);

    let map = env.file(
        "map.tsv",
        "#komohe-tsv v1\nde-vocab\tJugend\t=\ten-vocab\tYouth\thigh\n\
         de-vocab\tArbeitsmarkt\t=\ten-vocab\tLabour market\tmedium\n",
    );
    env.ok(&["import", "--strict", map.to_str().unwrap()]);
    assert_eq!(
        env.ok(&["translate", "jugend", "--from", "de", "--to", "en"]),
        "youth\ten-vocab\thigh\tde-vocab-en-vocab\n"
    );
    assert_eq!(
        env.ok(&["translate", "jugend", "--from", "en", "--to", "en"]),
        ""
    );
    assert_eq!(env.code(&["translate", "jugend", "--to", "fr"]), 1);

    // term lists survive in the snapshot
    let snapshot = fs::read_to_string(env.dir.path().join("data/store.tsv")).unwrap();
    assert!(snapshot.contains("#vocab\ten-vocab\ten\tsocial-sciences\tEnglish Thesaurus"));
    assert!(snapshot.contains("#term\tde-vocab\tArbeitsmarkt"));
}

#[test]
fn infer_prints_and_promotes_on_request() {
    let env = Env::new();
    let file = env.file(
        "chain.tsv",
        "#komohe-tsv v1\nA\thacker\t=\tB\thacking\thigh\nB\thacking\t=\tC\tcomputer crime\thigh\n\
         B\thacking\t<\tC\tcrime\tmedium\n",
    );
    env.ok(&["import", "--strict", file.to_str().unwrap()]);
    let expected = "#komohe-tsv v1\n\
                    A\thacker\t=\tC\tcomputer crime\tmedium\t# via:B\n\
                    A\thacker\t<\tC\tcrime\tlow\t# via:B\n";
    let args = ["infer", "--from", "A", "--to", "C", "--via", "B"];
    assert_eq!(env.ok(&args), expected);
    assert_eq!(
        env.ok(&["lookup", "hacker", "--target", "C"]),
        "",
        "plain infer must not write"
    );

    let mut promote = args.to_vec();
    promote.push("--promote");
    assert_eq!(env.ok(&promote), expected);
    assert_eq!(
        env.ok(&["lookup", "hacker", "--target", "C"])
            .lines()
            .count(),
        2
    );
    let again = env.run(&promote);
    assert!(String::from_utf8_lossy(&again.stderr).contains("promoted 0 mappings"));
    assert_eq!(
        env.code(&["infer", "--from", "A", "--to", "D", "--via", "B"]),
        1
    );
}

#[test]
fn variants_lists_conflicts() {
    let env = Env::new();
    let file = env.file(
        "variants.tsv",
        "#komohe-tsv v1\nV1\tterm a\t=\tV3\tterm b\thigh\nV2\tterm a\t=\tV3\tterm c\thigh\n",
    );
    env.ok(&["import", "--strict", file.to_str().unwrap()]);
    let out = env.ok(&["variants", "V3"]);
    assert!(
        out.lines()
            .any(|l| l == "term a\tV1\tterm b\tV2\tterm c\tV3"),
        "{out}"
    );
}

#[test]
fn skos_export_import() {
    let env = Env::with_tab1();
    let nt = env.ok(&["skos-export", "--crosswalk", "A-B"]);
    assert_eq!(nt.lines().count(), 3);
    let copy = Env::new();
    let file = copy.file("tab1.nt", &nt);
    copy.ok(&[
        "skos-import",
        file.to_str().unwrap(),
        "--source",
        "A",
        "--target",
        "B",
    ]);
    assert_eq!(
        copy.ok(&["lookup", "hacker"]),
        "A\thacker\t=\tB\thacking\t\n",
        "single targets come back unrated"
    );
    assert_eq!(copy.ok(&["skos-export"]), nt);
}

#[test]
fn check_is_reproducible() {
    let env = Env::with_tab1();
    let corpus = env.file(
        "corpus.tsv",
        "#corpus v1\nd1\tA\thacker\nd1\tB\thacking\nd2\tB\tcomputers\nd3\tB\tcomputers\nd3\tB\tcrime\n",
    );
    let args = [
        "check",
        "--crosswalk",
        "A-B",
        "--corpus",
        corpus.to_str().unwrap(),
        "--sample",
        "2",
        "--seed",
        "7",
    ];
    let first = env.ok(&args);
    assert_eq!(first.lines().count(), 4);
    for _ in 0..3 {
        assert_eq!(env.ok(&args), first);
    }
    let all = env.ok(&[
        "check",
        "--crosswalk",
        "A-B",
        "--corpus",
        corpus.to_str().unwrap(),
        "--sample",
        "50",
        "--seed",
        "1",
    ]);
    assert!(
        all.contains("hacker ^ computers + crime\t1\t1\tOK\n"),
        "{all}"
    );
    assert!(all.ends_with("# empty_target_rate\t3/5\t0.6000\n"), "{all}");
    assert_eq!(
        env.code(&[
            "check",
            "--crosswalk",
            "A-B",
            "--corpus",
            corpus.to_str().unwrap(),
            "--sample",
            "0"
        ]),
        1
    );
}

#[test]
fn serve_answers_and_stops_on_signal() {
    let env = Env::with_tab1();
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let config = env.file(
        "svc.conf",
        "# no data paths: falls back to the store\nmax_expansion_terms = 8\n",
    );
    let mut child = env
        .cmd()
        .args([
            "serve",
            "--config",
            config.to_str().unwrap(),
            "--port",
            &port.to_string(),
        ])
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let url = format!("http://127.0.0.1:{port}/terms/A/hacker/mappings");
    let start = Instant::now();
    let mut resp = loop {
        match agent.get(&url).call() {
            Ok(resp) => break resp,
            Err(_) if start.elapsed() < Duration::from_secs(10) => {
                thread::sleep(Duration::from_millis(20))
            }
            Err(e) => panic!("service did not start: {e}"),
        }
    };
    let mut body = String::new();
    resp.body_mut()
        .as_reader()
        .read_to_string(&mut body)
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(json["mappings"].as_array().unwrap().len(), 3);

    #[cfg(unix)]
    {
        let status = Command::new("kill")
            .args(["-INT", &child.id().to_string()])
            .status()
            .unwrap();
        assert!(status.success());
        let exit = child.wait().unwrap();
        assert!(exit.success(), "{exit}");
        let mut log = String::new();
        child
            .stderr
            .take()
            .unwrap()
            .read_to_string(&mut log)
            .unwrap();
        assert!(log.contains("store ready"), "{log}");
        assert!(log.contains("mappings=6"), "{log}");
    }
    #[cfg(not(unix))]
    {
        child.kill().unwrap();
        child.wait().unwrap();
    }
}

#[test]
fn serve_startup_errors_exit_1() {
    let env = Env::new();
    let missing = env.file("missing.conf", "crosswalks = does-not-exist.tsv\n");
    assert_eq!(
        env.code(&["serve", "--config", missing.to_str().unwrap()]),
        1
    );
    let no_data = env.file("empty.conf", "port = 8080\n");
    assert_eq!(
        env.code(&["serve", "--config", no_data.to_str().unwrap()]),
        1
    );
    let bad_port = env.file("port.conf", "port = 0\ncrosswalks = x.tsv\n");
    assert_eq!(
        env.code(&["serve", "--config", bad_port.to_str().unwrap()]),
        1
    );
}
