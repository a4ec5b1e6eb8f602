use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conbrowse"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn ok(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));
    assert!(out.stderr.is_empty(), "success wrote to stderr: {}", text(&out.stderr));
    text(&out.stdout)
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fetch_analyze_tree_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    let tree = dir.path().join("tree.json");

    let out = ok(&run(&["fetch", "--config", s(&fixture("sources.json")), "--out", s(&corpus)]));
    for name in ["NM1", "NM2", "NM3"] {
        assert!(out.contains(&format!("{name}: 10 articles, 0 dropped")), "{out}");
    }
    assert!(out.contains("wrote 30 articles"));

    ok(&run(&["analyze", "--in", s(&corpus), "--out", s(&tree)]));
    let rendered = ok(&run(&["tree", "--in", s(&tree)]));
    let lines: Vec<&str> = rendered.lines().collect();
    assert!(!lines.is_empty() && !lines[0].starts_with(' '));
    assert!(lines.iter().all(|l| l.trim_end().ends_with(')')));
    assert!(lines[1..].iter().all(|l| l.starts_with("  ")));

    let json = ok(&run(&["tree", "--in", s(&tree), "--format", "json"]));
    assert_eq!(json, fs::read_to_string(&tree).unwrap());
}

#[test]
fn fetch_with_bad_path_warns_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    let out = run(&["fetch", "--config", s(&fixture("sources-bad-path.json")), "--out", s(&corpus)]);
    assert_eq!(code(&out), 0);
    assert!(text(&out.stderr).contains("warning: source NM2 failed"));
    assert!(text(&out.stdout).contains("wrote 20 articles"));
}

#[test]
fn fetch_with_every_source_failing_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sources.json");
    let mut sources: Vec<serde_json::Value> =
        serde_json::from_slice(&fs::read(fixture("sources.json")).unwrap()).unwrap();
    for src in &mut sources {
        src["endpoint"] = "absent.json".into();
    }
    fs::write(&config, serde_json::to_vec(&sources).unwrap()).unwrap();
    let out = run(&["fetch", "--config", s(&config), "--out", s(&dir.path().join("c.json"))]);
    assert_eq!(code(&out), 2);
    let err = text(&out.stderr);
    assert!(["NM1", "NM2", "NM3"].iter().all(|n| err.contains(n)), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["fetch", "--out", "x.json"])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&[])), 1);
    let tree = fixture("k1.json");
    assert_eq!(code(&run(&["tree", "--in", s(&tree), "--format", "xml"])), 1);
    let corpus = fixture("corpus.json");
    let out = run(&["analyze", "--in", s(&corpus), "--out", "/dev/null", "--arity", "1"]);
    assert_eq!(code(&out), 1);
    assert!(text(&out.stderr).contains("arity"));
    assert_eq!(code(&run(&["oracle", "--context", s(&tree)])), 1);

    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(text(&help.stdout).contains("oracle"));
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn analyze_reports_parse_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[\n  {\"source\": \"NM1\",,}\n]").unwrap();
    let out = run(&["analyze", "--in", s(&bad), "--out", s(&dir.path().join("t.json"))]);
    assert_eq!(code(&out), 2);
    let err = text(&out.stderr);
    assert!(err.contains("byte 21") && err.contains("line 2 column 20"), "{err}");
}

#[test]
fn empty_corpus_renders_empty() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.json");
    let tree = dir.path().join("tree.json");
    fs::write(&corpus, "[]").unwrap();
    ok(&run(&["analyze", "--in", s(&corpus), "--out", s(&tree)]));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&tree).unwrap()).unwrap();
    assert_eq!(parsed["nodes"], serde_json::json!([]));
    assert_eq!(ok(&run(&["tree", "--in", s(&tree)])), "(empty)\n");
}

#[test]
fn three_node_tree_text_layout() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let node = |id: &str, label: &str, w: f64, arts: &[&str], kids: &[&str]| {
        serde_json::json!({"id": id, "label": label, "weight": w, "count": arts.len(), "articles": arts, "children": kids})
    };
    let doc = serde_json::json!({
        "arity": 3,
        "root": "n0",
        "nodes": [
            node("n0", "bush", 0.5, &["a", "b"], &["n1", "n2"]),
            node("n1", "iraq", 0.3, &["c"], &[]),
            node("n2", "oil", 0.2, &["d", "e"], &[]),
        ]
    });
    fs::write(&tree, serde_json::to_vec(&doc).unwrap()).unwrap();
    assert_eq!(ok(&run(&["tree", "--in", s(&tree)])), "bush (2)\n  iraq (1)\n  oil (2)\n");
}

#[test]
fn oracle_on_k1() {
    let k1 = fixture("k1.json");
    let out = ok(&run(&["oracle", "--context", s(&k1), "--element", "O3,P3"]));
    assert!(out.contains("O3,P3: agrees ({O3},{P2,P3})"), "{out}");
    let by_index = ok(&run(&["oracle", "--context", s(&k1), "--element", "2,2"]));
    assert_eq!(by_index, out);

    let all = ok(&run(&["oracle", "--context", s(&k1), "--all"]));
    assert!(all.ends_with("6/6 agree (all-rectangles)\n"), "{all}");
    let all = ok(&run(&["oracle", "--context", s(&k1), "--all", "--mode", "concepts"]));
    assert!(all.ends_with("6/6 agree (all-concepts)\n"), "{all}");

    let out = run(&["oracle", "--context", s(&k1), "--element", "O1,P3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn oracle_bounds_name_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = dir.path().join("six.json");
    let names = |p: &str| (1..=6).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let incidence: Vec<[usize; 2]> = (0..6).map(|i| [i, i]).collect();
    let doc = serde_json::json!({"objects": names("o"), "attributes": names("p"), "incidence": incidence});
    fs::write(&ctx, serde_json::to_vec(&doc).unwrap()).unwrap();

    let out = run(&["oracle", "--context", s(&ctx), "--all"]);
    assert_eq!(code(&out), 1);
    assert!(text(&out.stderr).contains("5×5"), "{}", text(&out.stderr));
    ok(&run(&["oracle", "--context", s(&ctx), "--all", "--mode", "concepts"]));
}

#[test]
fn serve_answers_health_and_tree() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = bin()
        .args(["serve", "--snapshot-dir", s(dir.path()), "--port", "0"])
        .args(["--config", s(&fixture("sources.json"))])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();

    let request = |method: &str, path: &str| {
        let mut stream = TcpStream::connect(&addr).unwrap();
        write!(stream, "{method} {path} HTTP/1.1\r\nhost: x\r\ncontent-length: 0\r\nconnection: close\r\n\r\n").unwrap();
        let mut out = String::new();
        stream.read_to_string(&mut out).unwrap();
        out
    };
    assert!(request("GET", "/v1/health").ends_with(r#"{"status":"ok","snapshot_id":null}"#));
    let refreshed = request("POST", "/v1/refresh");
    assert!(refreshed.starts_with("HTTP/1.1 200"), "{refreshed}");
    assert!(request("GET", "/v1/tree").contains(r#""label":"bush""#));

    child.kill().unwrap();
    child.wait().unwrap();
    assert!(dir.path().join("latest").exists());
}

#[test]
fn serve_missing_directory_is_usage_error() {
    let out = run(&["serve", "--snapshot-dir", "/nonexistent/snapshots", "--port", "0"]);
    assert_eq!(code(&out), 1);
}
