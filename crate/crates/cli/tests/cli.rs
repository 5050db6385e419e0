use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dmcalc::conditional::cond_full;
use dmcalc::io::{to_string, MatrixJson};
use dmcalc::sample;
use dmcalc::tensor::{marginal, Factor};
use serde_json::Value;
use tempfile::TempDir;

fn dmcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmcalc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v["rows"].clone()).unwrap()
}

#[test]
fn odot_of_diagonals_is_elementwise() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", r#"{"dim":3,"rows":[[2,0,0],[0,3,0],[0,0,0]]}"#);
    let b = write(&dir, "b.json", "[5, 7, 11]");
    let o = dmcalc(&["odot", s(&a), s(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want = [[10.0, 0.0, 0.0], [0.0, 21.0, 0.0], [0.0, 0.0, 0.0]];
    for (r, w) in rows(&v).iter().zip(want) {
        for (x, y) in r.iter().zip(w) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn odot_limit_residual_is_small() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", r#"{"dim":2,"rows":[[0.35,0.15],[0.15,0.65]]}"#);
    let b = write(&dir, "b.json", r#"{"dim":2,"rows":[[2,0],[0,3]]}"#);
    let o = dmcalc(&["odot", s(&a), s(&b), "--limit-n", "4096"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["limit_n"], 4096);
    assert!(v["limit_residual"].as_f64().unwrap() < 1e-3);
}

#[test]
fn validation_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let asym = write(&dir, "asym.json", r#"{"dim":2,"rows":[[1,1],[0,1]]}"#);
    let ok = write(&dir, "ok.json", r#"{"dim":2,"rows":[[1,0],[0,1]]}"#);
    let o = dmcalc(&["odot", s(&asym), s(&ok)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ODOT"), "{}", stderr(&o));

    let o = dmcalc(&["odot", s(&ok), s(&ok), "--limit-n", "3"]);
    assert_eq!(o.status.code(), Some(1));

    let o = dmcalc(&["odot", "/nonexistent.json", s(&ok)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent.json"));

    assert_eq!(dmcalc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dmcalc(&[]).status.code(), Some(1));
    assert_eq!(dmcalc(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_evidence_exits_two() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", "[1, 0]");
    let l = write(&dir, "l.json", "[0, 1]");
    for extra in [&["--conventional"][..], &[][..]] {
        let mut args = vec!["bayes-iterate", "--prior", s(&p), "--likelihood", s(&l), "--steps", "1"];
        args.extend_from_slice(extra);
        let o = dmcalc(&args);
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
        assert!(stderr(&o).contains("zero evidence"));
    }
}

#[test]
fn conventional_iteration_csv() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", "[0.29, 0.4, 0.3, 0.01]");
    let l = write(&dir, "l.json", r#"{"dim":4,"entries":[0.7,0.84,0.85,0.9]}"#);
    let o = dmcalc(&["bayes-iterate", "--prior", s(&p), "--likelihood", s(&l), "--steps", "500", "--conventional"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,proj_1,proj_2,proj_3,proj_4,evidence");
    assert_eq!(lines.len(), 502);
    assert!(lines[1].starts_with("0,") && lines[1].ends_with(','));
    let first: Vec<f64> = lines[2].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!((first[4] - 0.803).abs() < 1e-12);
    assert!((first[0] - 0.203 / 0.803).abs() < 1e-12);
    let last: Vec<f64> = lines[501].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(last[3] > 1.0 - 1e-6);
    // 17 significant digits
    let cell = lines[2].split(',').nth(1).unwrap();
    assert_eq!(cell.split('e').next().unwrap().replace('.', "").len(), 17);
}

#[test]
fn generalized_iteration_orders_by_likelihood_eigenvalue() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", "[0.29, 0.4, 0.3, 0.01]");
    let l = write(&dir, "l.json", "[0.7, 0.84, 0.85, 0.9]");
    let o = dmcalc(&["bayes-iterate", "--prior", s(&p), "--likelihood", s(&l), "--steps", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').skip(1).take(4).map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, vec![0.01, 0.3, 0.4, 0.29]);
}

#[test]
fn bayes_iterate_rejects_non_diagonal_conventional_input() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"dim":2,"rows":[[0.5,0.1],[0.1,0.5]]}"#);
    let l = write(&dir, "l.json", "[0.5, 0.5]");
    let o = dmcalc(&["bayes-iterate", "--prior", s(&p), "--likelihood", s(&l), "--steps", "1", "--conventional"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not diagonal"));
}

fn joint_file(dir: &TempDir) -> (PathBuf, dmcalc::tensor::JointDensity) {
    let j = sample::generic_joint(&mut sample::rng(3), 2, 3);
    (write(dir, "j.json", &to_string(&MatrixJson::from_joint(&j))), j)
}

#[test]
fn condition_rules() {
    let dir = TempDir::new().unwrap();
    let (jp, j) = joint_file(&dir);
    let a = write(&dir, "a.json", "[0.6, 0.8]");
    let b = write(&dir, "b.json", "[0, 1, 0]");

    let o = dmcalc(&["condition", s(&jp), "--dims", "2,3", "--rule", "CP1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rule"], "CP1");
    assert_eq!(v["dims"], serde_json::json!([2, 3]));
    let want = cond_full(&j).unwrap();
    let got = rows(&v);
    for i in 0..6 {
        for k in 0..6 {
            assert!((got[i][k] - want.matrix()[(i, k)]).abs() < 1e-14);
        }
    }

    let o = dmcalc(&["condition", s(&jp), "--dims", "2,3", "--rule", "CP2", "--b", s(&b)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dim"], 2);
    let tr: f64 = rows(&v).iter().enumerate().map(|(i, r)| r[i]).sum();
    assert!((tr - 1.0).abs() < 1e-12);

    let o = dmcalc(&["condition", s(&jp), "--dims", "2,3", "--rule", "CP3", "--a", s(&a)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["rule"].as_str(), v["dim"].as_u64()), (Some("CP3"), Some(3)));

    let o = dmcalc(&["condition", s(&jp), "--dims", "2,3", "--rule", "CP4", "--a", s(&a), "--b", s(&b)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let x = v["value"].as_f64().unwrap();
    assert!(x > 0.0 && x < 1.0);
}

#[test]
fn condition_argument_errors_name_the_rule() {
    let dir = TempDir::new().unwrap();
    let (jp, _) = joint_file(&dir);
    let o = dmcalc(&["condition", s(&jp), "--dims", "2,3", "--rule", "CP2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CP2: --b is required"));
    let o = dmcalc(&["condition", s(&jp), "--dims", "3,2", "--rule", "CP1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CP1"));
    let o = dmcalc(&["condition", s(&jp), "--dims", "2x3", "--rule", "CP1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn conditioning_on_a_null_dyad_exits_two() {
    let dir = TempDir::new().unwrap();
    let jp = write(&dir, "j.json", r#"{"dim":4,"rows":[[0.5,0,0,0],[0,0,0,0],[0,0,0.5,0],[0,0,0,0]]}"#);
    let b = write(&dir, "b.json", "[0, 1]");
    let o = dmcalc(&["condition", s(&jp), "--dims", "2,2", "--rule", "CP2", "--b", s(&b)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("CP2"));
}

#[test]
fn em_recover_finds_the_marginal() {
    let dir = TempDir::new().unwrap();
    let j = sample::generic_joint(&mut sample::rng(11), 2, 2);
    let c = cond_full(&j).unwrap();
    let cp = write(&dir, "c.json", &to_string(&MatrixJson::from_matrix(c.matrix())));
    let o = dmcalc(&["em-recover", s(&cp), "--dims", "2,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let got = rows(&v["marginal"]);
    let want = marginal(&j, Factor::B);
    let err: f64 =
        (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| (got[i][k] - want.matrix()[(i, k)]).powi(2)).sum();
    assert!(err.sqrt() < 1e-6);
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len() as u64, v["iterations"].as_u64().unwrap());
}

#[test]
fn em_recover_out_of_iterations_exits_two() {
    let dir = TempDir::new().unwrap();
    let j = sample::generic_joint(&mut sample::rng(11), 2, 2);
    let c = cond_full(&j).unwrap();
    let cp = write(&dir, "c.json", &to_string(&MatrixJson::from_matrix(c.matrix())));
    let o = dmcalc(&["em-recover", s(&cp), "--dims", "2,2", "--max-iter", "1", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("EM"));
}

#[test]
fn em_recover_rejects_decoupled_conditionals() {
    let dir = TempDir::new().unwrap();
    let j = sample::decoupled_joint(&mut sample::rng(5), 2, 2);
    let c = cond_full(&j).unwrap();
    let cp = write(&dir, "c.json", &to_string(&MatrixJson::from_matrix(c.matrix())));
    let o = dmcalc(&["em-recover", s(&cp), "--dims", "2,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("EM"));
}

#[test]
fn verify_op_suite_passes_with_seed_seven() {
    let o = dmcalc(&["verify", "--suite", "OP", "--trials", "100", "--seed", "7"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    for k in 1..=16 {
        let id = format!("OP{k} ");
        let line = text.lines().find(|l| l.starts_with(&id)).unwrap_or_else(|| panic!("no line for OP{k}"));
        assert!(line.contains(" PASS ") && line.contains("seed=7"), "{line}");
    }
    assert!(text.lines().last().unwrap().starts_with("summary "));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--suite", "cp", "--trials", "20", "--seed", "42", "--dim-max", "4"];
    assert_eq!(stdout(&dmcalc(&args)), stdout(&dmcalc(&args)));
}

#[test]
fn verify_rejects_bad_config() {
    assert_eq!(dmcalc(&["verify", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(dmcalc(&["verify", "--dim-max", "1"]).status.code(), Some(1));
    assert_eq!(dmcalc(&["verify", "--suite", "XX"]).status.code(), Some(1));
}

#[test]
fn figure_eight_csv() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.json", r#"{"dim":2,"rows":[[0.35,0.15],[0.15,0.65]]}"#);
    let o = dmcalc(&["figure-eight", s(&w), "--samples", "360"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,prob,x,y");
    assert_eq!(lines.len(), 361);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((first[1] - 0.35).abs() < 1e-15);
    let probs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let max = probs.iter().copied().fold(0.0, f64::max);
    let min = probs.iter().copied().fold(1.0, f64::min);
    let half_gap = 0.045f64.sqrt();
    assert!((max - (0.5 + half_gap)).abs() < 1e-4 && (min - (0.5 - half_gap)).abs() < 1e-4, "{min} {max}");

    let bad = write(&dir, "w3.json", r#"{"dim":3,"rows":[[1,0,0],[0,0,0],[0,0,0]]}"#);
    assert_eq!(dmcalc(&["figure-eight", s(&bad)]).status.code(), Some(1));
}
