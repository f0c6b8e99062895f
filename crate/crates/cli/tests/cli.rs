use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
name = "two-tasks"
alpha = 0.1
timing = false

[suite]
family = "explicit-quadratic"
curvatures = [[1.0], [2.0]]
centers = [[0.0], [3.0]]

[outer]
method = "fo-maml"
beta = 0.5
tau = 2
iterations = 40

[repetitions]
count = 2
base_seed = 7

[checks]
thm41 = true
"#;

fn moreau(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moreau"))
        .env("MOREAU_OUTPUT_DIR", out)
        .env("MOREAU_GIT_REVISION", "test")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_the_experiment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("out");
    let o = moreau(&out, &["run", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let exp = out.join("two-tasks");
    for f in ["run_0000.csv", "run_0001.csv", "summary.csv", "metadata.json"] {
        assert!(exp.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(exp.join("run_0000.csv")).unwrap();
    assert!(csv.starts_with("run_id,k,dist_sq,F_val,grad_norm_sq,mean_cert_err,wall_ns"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(exp.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["schema"], "v1");
    assert_eq!(meta["git_revision"], "test");
}

#[test]
fn unsatisfied_precondition_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, CONFIG.replace("alpha = 0.1", "alpha = 0.9")).unwrap();
    let o = moreau(dir.path(), &["run", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("precondition-unsatisfied, skipped"));
}

#[test]
fn sweep_over_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let o = moreau(dir.path(), &["sweep", "--param", "alpha", "--values", "0.05,0.1", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("two-tasks/sweep-alpha/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn counterexample_prints_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = moreau(dir.path(), &["counterexample", "nonconvex", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"verdict\": \"nonconvex\""));
    assert!(dir.path().join("counterexample-nonconvex-alpha1.csv").exists());
}

#[test]
fn verify_envelope_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = moreau(dir.path(), &["verify", "envelope"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("envelope: pass"));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(moreau(dir.path(), &["verify", "thm99"]).status.code(), Some(1));
    assert_eq!(moreau(dir.path(), &["run", "missing.toml"]).status.code(), Some(1));
    assert_eq!(moreau(dir.path(), &["sweep", "--param", "gamma", "--values", "1", "x.toml"]).status.code(), Some(1));
}
