use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use readorder_core::adaptation::{LineBox, LineOrder};
use readorder_core::jsonl::{read_jsonl, write_jsonl};
use readorder_core::metrics::{DatasetStats, EvalReport};
use readorder_core::{OrderPrediction, Page};
use tempfile::TempDir;

fn readorder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_readorder")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = readorder(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

struct Work(TempDir);

impl Work {
    fn new() -> Self {
        Work(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn gen_is_deterministic_and_independent_of_jobs() {
    let w = Work::new();
    ok(&["gen", "--kind", "mixed", "--count", "12", "--seed", "4", "-o", &w.s("a.jsonl"), "--lines-out", &w.s("la.jsonl")]);
    ok(&["gen", "--kind", "mixed", "--count", "12", "--seed", "4", "--jobs", "3", "-o", &w.s("b.jsonl"), "--lines-out", &w.s("lb.jsonl")]);
    assert_eq!(read(&w.path("a.jsonl")), read(&w.path("b.jsonl")));
    assert_eq!(read(&w.path("la.jsonl")), read(&w.path("lb.jsonl")));
    ok(&["gen", "--kind", "mixed", "--count", "12", "--seed", "5", "-o", &w.s("c.jsonl")]);
    assert_ne!(read(&w.path("a.jsonl")), read(&w.path("c.jsonl")));
    let pages: Vec<Page> = read_jsonl(w.path("a.jsonl")).unwrap();
    assert_eq!(pages.len(), 12);
}

#[test]
fn stats_buckets_partition_the_pages() {
    let w = Work::new();
    ok(&["gen", "--kind", "mixed", "--count", "30", "-o", &w.s("p.jsonl")]);
    ok(&["stats", "-i", &w.s("p.jsonl"), "-o", &w.s("s.json")]);
    let stats: DatasetStats = serde_json::from_slice(&read(&w.path("s.json"))).unwrap();
    assert_eq!(stats.pages, 30);
    assert_eq!(stats.buckets.iter().map(|b| b.count).sum::<usize>(), 30);
    // stdout variant prints the same report
    let out = ok(&["stats", "-i", &w.s("p.jsonl")]);
    assert_eq!(out.stdout, read(&w.path("s.json")));
}

#[test]
fn align_rebuilds_generated_pages() {
    let w = Work::new();
    ok(&[
        "gen", "--count", "8", "--seed", "2", "-o", &w.s("p.jsonl"),
        "--sequence-out", &w.s("seq.jsonl"), "--layout-out", &w.s("lay.jsonl"),
    ]);
    ok(&["align", "--sequence", &w.s("seq.jsonl"), "--layout", &w.s("lay.jsonl"), "-o", &w.s("aligned.jsonl")]);
    assert_eq!(read(&w.path("p.jsonl")), read(&w.path("aligned.jsonl")));
}

#[test]
fn eval_of_gold_against_itself_is_perfect() {
    let w = Work::new();
    ok(&["gen", "--count", "5", "-o", &w.s("p.jsonl")]);
    let pages: Vec<Page> = read_jsonl(w.path("p.jsonl")).unwrap();
    let gold: Vec<OrderPrediction> = pages.iter().map(|p| OrderPrediction::new(p.id.clone(), (0..p.len()).collect())).collect();
    write_jsonl(w.path("gold.jsonl"), &gold).unwrap();
    ok(&["eval", "--gold", &w.s("p.jsonl"), "--pred", &w.s("gold.jsonl"), "-o", &w.s("r.json")]);
    let report: EvalReport = serde_json::from_slice(&read(&w.path("r.json"))).unwrap();
    assert_eq!(report.avg_bleu, 1.0);
    assert_eq!(report.avg_ard, 0.0);
    assert_eq!(report.per_page.len(), 5);
}

#[test]
fn heuristic_predictions_and_kind_filter() {
    let w = Work::new();
    ok(&["gen", "--kind", "mixed", "--count", "20", "-o", &w.s("p.jsonl")]);
    ok(&["predict", "--heuristic", "-i", &w.s("p.jsonl"), "-o", &w.s("h.jsonl")]);
    ok(&["eval", "--gold", &w.s("p.jsonl"), "--pred", &w.s("h.jsonl"), "--kind", "single_column", "-o", &w.s("r.json")]);
    let report: EvalReport = serde_json::from_slice(&read(&w.path("r.json"))).unwrap();
    assert!(report.per_page.iter().all(|s| s.page_id.starts_with("single_column-")));
    assert_eq!(report.avg_bleu, 1.0);
}

#[test]
fn train_predict_eval_pipeline() {
    let w = Work::new();
    std::fs::write(
        w.path("cfg.json"),
        r#"{"seed": 3, "model": {"hidden_dim": 16, "heads": 2, "ffn_dim": 32, "layers": 1}, "train": {"epochs": 5, "batch_size": 8}}"#,
    )
    .unwrap();
    ok(&["gen", "--count", "50", "--tokens-min", "10", "--tokens-max", "20", "-o", &w.s("p.jsonl")]);
    let cfg = w.s("cfg.json");
    // the flag wins over the file's epoch count
    ok(&[
        "train", "--config", &cfg, "-i", &w.s("p.jsonl"), "-o", &w.s("m.bin"), "--epochs", "2",
        "--report-out", &w.s("train.json"),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&read(&w.path("train.json"))).unwrap();
    assert_eq!(report["epoch_losses"].as_array().unwrap().len(), 2);

    ok(&["predict", "--config", &cfg, "--model", &w.s("m.bin"), "-i", &w.s("p.jsonl"), "-o", &w.s("pred.jsonl")]);
    ok(&["predict", "--config", &cfg, "--jobs", "2", "--model", &w.s("m.bin"), "-i", &w.s("p.jsonl"), "-o", &w.s("pred2.jsonl")]);
    assert_eq!(read(&w.path("pred.jsonl")), read(&w.path("pred2.jsonl")));
    let preds: Vec<OrderPrediction> = read_jsonl(w.path("pred.jsonl")).unwrap();
    let pages: Vec<Page> = read_jsonl(w.path("p.jsonl")).unwrap();
    for (p, page) in preds.iter().zip(&pages) {
        assert!(p.is_permutation(page.len()));
    }
    ok(&[
        "predict", "--model", &w.s("m.bin"), "--beam", "3", "--unconstrained", "--shuffle-rate", "0.5",
        "-i", &w.s("p.jsonl"), "-o", &w.s("pred3.jsonl"),
    ]);
    ok(&["eval", "--gold", &w.s("p.jsonl"), "--pred", &w.s("pred.jsonl"), "-o", &w.s("r.json")]);
    let report: EvalReport = serde_json::from_slice(&read(&w.path("r.json"))).unwrap();
    assert_eq!(report.per_page.len(), 50);
    assert!((0.0..=1.0).contains(&report.avg_bleu));
}

#[test]
fn adapt_lines_follows_the_token_order() {
    let w = Work::new();
    ok(&["gen", "--kind", "two_column", "--count", "4", "-o", &w.s("p.jsonl"), "--lines-out", &w.s("l.jsonl")]);
    ok(&["adapt-lines", "-i", &w.s("p.jsonl"), "--lines", &w.s("l.jsonl"), "-o", &w.s("o.jsonl")]);
    let lines: Vec<LineBox> = read_jsonl(w.path("l.jsonl")).unwrap();
    let orders: Vec<LineOrder> = read_jsonl(w.path("o.jsonl")).unwrap();
    assert_eq!(orders.len(), 4);
    for o in &orders {
        let expected: Vec<String> = lines.iter().filter(|l| l.page_id == o.page_id).map(|l| l.line_id.clone()).collect();
        assert_eq!(o.line_ids, expected);
    }
}

#[test]
fn render_colors_and_arrows() {
    let w = Work::new();
    ok(&["gen", "--kind", "two_column", "--count", "2", "-o", &w.s("p.jsonl")]);
    ok(&["predict", "--heuristic", "-i", &w.s("p.jsonl"), "-o", &w.s("h.jsonl")]);
    let pages: Vec<Page> = read_jsonl(w.path("p.jsonl")).unwrap();
    let id = pages[1].id.clone();
    ok(&["render", "-i", &w.s("p.jsonl"), "--pred", &w.s("h.jsonl"), "--page-id", &id, "-o", &w.s("h.svg")]);
    let svg = String::from_utf8(read(&w.path("h.svg"))).unwrap();
    let red = svg.matches(r#"class="wrong""#).count();
    let green = svg.matches(r#"class="correct""#).count();
    assert_eq!(red + green, pages[1].len());
    assert!(red > 0, "heuristic order on two columns should misplace tokens");
    ok(&["render", "-i", &w.s("p.jsonl"), "-o", &w.s("g.svg")]);
    let svg = String::from_utf8(read(&w.path("g.svg"))).unwrap();
    assert_eq!(svg.matches(r#"class="order""#).count(), pages[0].len() - 1);
}

#[test]
fn usage_errors_exit_with_one() {
    let out = readorder(&["gen", "--count", "3", "--bogus", "-o", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
    let w = Work::new();
    let out = readorder(&["gen", "--kind", "five_column", "--count", "3", "-o", &w.s("p.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
    let out = readorder(&["predict", "-i", "x", "-o", "y"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_two() {
    let w = Work::new();
    let out = readorder(&["stats", "-i", &w.s("missing.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "data");
    std::fs::write(w.path("bad.jsonl"), "{\"id\": \"p\"}\n").unwrap();
    let out = readorder(&["stats", "-i", &w.s("bad.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("line 1"));
}

#[test]
fn divergence_exits_with_three() {
    let w = Work::new();
    ok(&["gen", "--count", "4", "--tokens-min", "10", "--tokens-max", "12", "-o", &w.s("p.jsonl")]);
    let out = readorder(&[
        "train", "-i", &w.s("p.jsonl"), "-o", &w.s("m.bin"), "--epochs", "3", "--hidden-dim", "16", "--heads", "2",
        "--ffn-dim", "16", "--lr", "1e30", "--warmup", "0", "--clip-norm", "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_json(&out)["error"]["kind"], "numeric");
}
