//! End-to-end tests of the `spn` binary: exit codes, golden output and
//! determinism.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn spn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spn"))
}

const EXAMPLE_DSL: &str = "\
0.4 * Categorical(p=[0.2, 0.8], scope=0) *
      (0.3 * Categorical(p=[0.3, 0.7], scope=1) * Categorical(p=[0.4, 0.6], scope=2)
     + 0.7 * Categorical(p=[0.5, 0.5], scope=1) * Categorical(p=[0.6, 0.4], scope=2))
+ 0.6 * Categorical(p=[0.2, 0.8], scope=0) *
        Categorical(p=[0.3, 0.7], scope=1) *
        Categorical(p=[0.4, 0.6], scope=2)
";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run_with_stdin(cmd: &mut Command, input: &str) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

#[test]
fn eval_prints_the_expected_log_likelihood() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let data = fx.write("row.csv", "1.0,0.0,1.0\n1,0,nan\n");
    let out = spn().arg("eval").arg(&model).arg("--data").arg(&data).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "-1.907305\n-1.255968\n");
}

#[test]
fn eval_reads_standard_input() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let out = run_with_stdin(
        spn().arg("eval").arg(&model).arg("--data").arg("-"),
        "nan,nan,nan\n",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "0.000000\n");
}

#[test]
fn precision_flag_controls_decimals() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let data = fx.write("row.csv", "1.0,0.0,1.0\n");
    let out = spn()
        .arg("eval")
        .arg(&model)
        .arg("--data")
        .arg(&data)
        .arg("--precision")
        .arg("10")
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "-1.9073050099\n");
}

#[test]
fn stats_prints_key_value_lines() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let out = spn().arg("stats").arg(&model).output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "sum=2\nproduct=4\nleaf=8\nedges=13\ndepth=4\nparams=10\n"
    );
}

#[test]
fn validate_reports_violations_with_exit_2() {
    let fx = Fixture::new();
    let good = fx.write("example.spn", EXAMPLE_DSL);
    let out = spn().arg("validate").arg(&good).output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "ok\n");

    // overlapping product scopes
    let bad = fx.write(
        "bad.spn",
        "1.0 * Categorical(p=[0.2, 0.8], scope=0) * Categorical(p=[0.5, 0.5], scope=0)\n",
    );
    let out = spn().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("decomposability"), "{}", stdout(&out));
}

#[test]
fn invalid_models_never_run_queries() {
    let fx = Fixture::new();
    let bad = fx.write(
        "bad.spn",
        "0.5 * Categorical(p=[0.2, 0.8], scope=0) + 0.5 * Categorical(p=[0.3, 0.7], scope=1)\n",
    );
    let data = fx.write("row.csv", "1,0\n");
    let out = spn().arg("eval").arg(&bad).arg("--data").arg(&data).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("completeness"), "{}", stderr(&out));
}

#[test]
fn exit_codes_distinguish_usage_model_and_data_errors() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);

    // usage: missing required --data
    let out = spn().arg("eval").arg(&model).output().unwrap();
    assert_eq!(code(&out), 1);

    // usage: unsupported model extension
    let txt = fx.write("model.txt", EXAMPLE_DSL);
    let data = fx.write("row.csv", "1,0,1\n");
    let out = spn().arg("eval").arg(&txt).arg("--data").arg(&data).output().unwrap();
    assert_eq!(code(&out), 1);

    // model: unparseable file
    let broken = fx.write("broken.spn", "0.4 * Categorical(p=[0.2,");
    let out = spn().arg("eval").arg(&broken).arg("--data").arg(&data).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parse error"), "{}", stderr(&out));

    // data: non-numeric cell
    let bad_data = fx.write("bad.csv", "1,frog,1\n");
    let out = spn().arg("eval").arg(&model).arg("--data").arg(&bad_data).output().unwrap();
    assert_eq!(code(&out), 3);

    // data: out-of-domain categorical value
    let oob = fx.write("oob.csv", "1,7,1\n");
    let out = spn().arg("eval").arg(&model).arg("--data").arg(&oob).output().unwrap();
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("row 0"), "{}", stderr(&out));
}

#[test]
fn mpe_completes_missing_cells() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let out = run_with_stdin(
        spn().arg("mpe").arg(&model).arg("--data").arg("-"),
        "nan,nan,nan\n1.0,0.0,1.0\n",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "1.000000,1.000000,1.000000\n1.000000,0.000000,1.000000\n"
    );
}

#[test]
fn sampling_is_deterministic_and_preserves_evidence() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let template = fx.write("template.csv", "nan,0,0\n");
    let run = || {
        let out = spn()
            .arg("sample")
            .arg(&model)
            .arg("--data")
            .arg(&template)
            .arg("--seed")
            .arg("42")
            .arg("-n")
            .arg("50")
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        stdout(&out)
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "same invocation must be byte-identical");
    assert_eq!(a.lines().count(), 50);
    for line in a.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[0] == "0.000000" || cells[0] == "1.000000");
        assert_eq!(cells[1], "0.000000");
        assert_eq!(cells[2], "0.000000");
    }
}

fn write_training_csv(path: &Path) {
    // two separated clusters with labels, compact but learnable
    let mut text = String::new();
    let mut state = 88172645463325252u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for i in 0..300 {
        let (center, label) = if i < 150 { (5.0, 0) } else { (15.0, 1) };
        // sum of uniforms as a crude bell shape
        let x = center + (next() + next() + next() - 1.5);
        let y = center + (next() + next() + next() - 1.5);
        text.push_str(&format!("{x:.6},{y:.6},{label}\n"));
    }
    std::fs::write(path, text).unwrap();
}

const CONTEXT_JSON: &str = r#"[
  {"family": "gaussian", "range": [0.0, 20.0]},
  {"family": "gaussian", "range": [0.0, 20.0]},
  {"family": "categorical", "cardinality": 2}
]"#;

#[test]
fn learn_classifier_pipeline_via_cli() {
    let fx = Fixture::new();
    let data = fx.path("train.csv");
    write_training_csv(&data);
    let context = fx.write("context.json", CONTEXT_JSON);
    let model = fx.path("model.json");

    let out = spn()
        .arg("learn")
        .arg("--data")
        .arg(&data)
        .arg("--context")
        .arg(&context)
        .arg("--classifier-label")
        .arg("2")
        .arg("--min-instances")
        .arg("50")
        .arg("--seed")
        .arg("7")
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // identical invocation produces a byte-identical model file
    let first = std::fs::read(&model).unwrap();
    let out = spn()
        .arg("learn")
        .arg("--data")
        .arg(&data)
        .arg("--context")
        .arg(&context)
        .arg("--classifier-label")
        .arg("2")
        .arg("--min-instances")
        .arg("50")
        .arg("--seed")
        .arg("7")
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(&model).unwrap(), first);

    // the learned model classifies the two canonical queries
    let completed = run_with_stdin(
        spn().arg("mpe").arg(&model).arg("--data").arg("-"),
        "3.0,4.0,nan\n12.0,18.0,nan\n",
    );
    assert_eq!(code(&completed), 0, "{}", stderr(&completed));
    let lines: Vec<String> = stdout(&completed).lines().map(String::from).collect();
    assert!(lines[0].ends_with(",0.000000"), "{}", lines[0]);
    assert!(lines[1].ends_with(",1.000000"), "{}", lines[1]);
}

#[test]
fn optimize_writes_an_improved_model() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let data = fx.write("train.csv", "1.0,0.0,1.0\n1.0,1.0,1.0\n");
    let tuned = fx.path("tuned.spn");
    let out = spn()
        .arg("optimize")
        .arg(&model)
        .arg("--data")
        .arg(&data)
        .arg("--epochs")
        .arg("50")
        .arg("--lr")
        .arg("0.1")
        .arg("--out")
        .arg(&tuned)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let mean = |model_path: &Path| -> f64 {
        let out = spn()
            .arg("eval")
            .arg(model_path)
            .arg("--data")
            .arg(&data)
            .arg("--precision")
            .arg("12")
            .output()
            .unwrap();
        let values: Vec<f64> = stdout(&out)
            .lines()
            .map(|l| l.parse::<f64>().unwrap())
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    assert!(mean(&tuned) >= mean(&model));
}

#[test]
fn compile_and_plot_write_files() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let c_file = fx.path("example.c");
    let out = spn()
        .arg("compile")
        .arg(&model)
        .arg("--out")
        .arg(&c_file)
        .arg("--main")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let source = std::fs::read_to_string(&c_file).unwrap();
    assert!(source.contains("double spn_loglik(const double *x)"));
    assert!(source.contains("int main(void)"));

    let dot_file = fx.path("example.dot");
    let out = spn().arg("plot").arg(&model).arg("--out").arg(&dot_file).output().unwrap();
    assert_eq!(code(&out), 0);
    let dot = std::fs::read_to_string(&dot_file).unwrap();
    assert!(dot.starts_with("digraph spn {"));
}

#[test]
fn model_roundtrip_through_cli_formats() {
    let fx = Fixture::new();
    let model = fx.write("example.spn", EXAMPLE_DSL);
    let data = fx.write("row.csv", "1.0,0.0,1.0\n");

    // .spn -> .json via optimize with zero epochs (parameters unchanged)
    let json_model = fx.path("example.json");
    let out = spn()
        .arg("optimize")
        .arg(&model)
        .arg("--data")
        .arg(&data)
        .arg("--epochs")
        .arg("0")
        .arg("--out")
        .arg(&json_model)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let a = spn().arg("eval").arg(&model).arg("--data").arg(&data).output().unwrap();
    let b = spn().arg("eval").arg(&json_model).arg("--data").arg(&data).output().unwrap();
    assert_eq!(stdout(&a), stdout(&b));
}
