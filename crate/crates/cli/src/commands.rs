use std::f64::consts::TAU;
use std::io::{self, Write};
use std::path::Path;

use dmcalc::bayes::{iterate_conventional, iterate_generalized};
use dmcalc::conditional::{
    cond_A_given_b, cond_a_given_B, cond_full, cond_scalar, em_recover_marginal, ConditionalKind, ConditionalMatrix,
};
use dmcalc::density::{prob_dyad, DensityMatrix};
use dmcalc::io::{self as json, MatrixJson, VectorJson};
use dmcalc::odot::symmetrized;
use dmcalc::verify::{self, Config, Suite};
use dmcalc::{Error, PsdMatrix, UnitVector};
use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

/// An exit code and the message printed with it.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn validation(rule: &str, message: impl std::fmt::Display) -> Self {
        Self { code: 1, message: format!("{rule}: {message}") }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self { code: 1, message: format!("output: {e}") }
    }
}

/// Numerical errors already name their rule.
fn fail(rule: &'static str) -> impl Fn(Error) -> Failure {
    move |e| {
        if e.is_numerical() {
            Failure { code: 2, message: e.to_string() }
        } else {
            Failure::validation(rule, e)
        }
    }
}

/// A matrix file, or a vector file read as a diagonal matrix.
#[derive(Deserialize)]
#[serde(untagged)]
enum Operand {
    Matrix(MatrixJson),
    Vector(VectorJson),
}

impl Operand {
    fn read(path: &Path) -> dmcalc::Result<Self> {
        json::read(path)
    }

    fn matrix(&self) -> dmcalc::Result<DMatrix<f64>> {
        match self {
            Operand::Matrix(m) => m.to_matrix(),
            Operand::Vector(v) => Ok(DMatrix::from_diagonal(&v.to_vector()?)),
        }
    }

    fn diagonal(&self, name: &str) -> dmcalc::Result<Vec<f64>> {
        let m = self.matrix()?;
        let off = (&m - DMatrix::from_diagonal(&m.diagonal())).amax();
        if off > 0.0 {
            return Err(Error::InvalidInput(format!("{name} is not diagonal (off-diagonal entry {off:e})")));
        }
        Ok(m.diagonal().iter().copied().collect())
    }

    fn psd(&self) -> dmcalc::Result<PsdMatrix> {
        PsdMatrix::from_matrix(self.matrix()?)
    }
}

fn unit(path: Option<&Path>, flag: &str, rule: &'static str) -> Result<UnitVector, Failure> {
    let path = path.ok_or_else(|| Failure::validation(rule, format!("{flag} is required")))?;
    json::read::<VectorJson>(path).and_then(|v| v.to_unit()).map_err(fail(rule))
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("plain numbers")
}

/// 17 significant digits, enough to round-trip an f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn odot(a: &Path, b: &Path, limit_n: Option<u64>, out: &mut impl Write) -> Result<(), Failure> {
    let f = fail("ODOT");
    let a = Operand::read(a).and_then(|o| o.psd()).map_err(&f)?;
    let b = Operand::read(b).and_then(|o| o.psd()).map_err(&f)?;
    let c = dmcalc::odot(&a, &b).map_err(&f)?;
    let mut value = matrix_value(c.matrix());
    if let Some(n) = limit_n {
        let limit = symmetrized(&dmcalc::odot_limit(&a, &b, n).map_err(&f)?);
        let scale = c.matrix().norm();
        let diff = (&limit - c.matrix()).norm();
        value["limit_n"] = json!(n);
        value["limit_residual"] = json!(if scale > 0.0 { diff / scale } else { diff });
    }
    writeln!(out, "{value}")?;
    Ok(())
}

pub fn bayes_iterate(
    prior: &Path,
    likelihood: &Path,
    steps: usize,
    conventional: bool,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let f = fail("BAYES");
    let prior = Operand::read(prior).map_err(&f)?;
    let likelihood = Operand::read(likelihood).map_err(&f)?;
    let (rows, evidences): (Vec<Vec<f64>>, Vec<f64>) = if conventional {
        let p = prior.diagonal("prior").map_err(&f)?;
        let l = likelihood.diagonal("likelihood").map_err(&f)?;
        let t = iterate_conventional(&p, &l, steps).map_err(&f)?;
        (t.states, t.evidences)
    } else {
        let p = DensityMatrix::new(prior.psd().map_err(&f)?).map_err(&f)?;
        let l = likelihood.psd().map_err(&f)?;
        let t = iterate_generalized(&p, &l, steps).map_err(&f)?;
        let basis = l.eigvecs();
        let rows = t
            .states
            .iter()
            .map(|w| basis.iter().map(|u| prob_dyad(w, &u)).collect::<dmcalc::Result<Vec<f64>>>())
            .collect::<dmcalc::Result<_>>()
            .map_err(&f)?;
        (rows, t.evidences)
    };
    let k = rows[0].len();
    let header: Vec<String> = (1..=k).map(|i| format!("proj_{i}")).collect();
    writeln!(out, "step,{},evidence", header.join(","))?;
    for (step, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| num(*x)).collect();
        let evidence = step.checked_sub(1).map(|i| num(evidences[i])).unwrap_or_default();
        writeln!(out, "{step},{},{evidence}", cells.join(","))?;
    }
    Ok(())
}

pub fn condition(
    joint: &Path,
    dims: (usize, usize),
    rule: &'static str,
    a: Option<&Path>,
    b: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let f = fail(rule);
    let j = json::read::<MatrixJson>(joint).and_then(|m| m.to_joint(Some(dims))).map_err(&f)?;
    let value = match rule {
        "CP1" => {
            let c = cond_full(&j).map_err(&f)?;
            let mut v = serde_json::to_value(MatrixJson {
                dims: Some([dims.0, dims.1]),
                ..MatrixJson::from_matrix(c.matrix())
            })
            .expect("plain numbers");
            v["kind"] = json!("D(A|B)");
            v
        }
        "CP2" => {
            let b = unit(b, "--b", rule)?;
            let mut v = matrix_value(cond_A_given_b(&j, &b).map_err(&f)?.matrix());
            v["kind"] = json!("D(A|b)");
            v
        }
        "CP3" => {
            let a = unit(a, "--a", rule)?;
            let mut v = matrix_value(cond_a_given_B(&j, &a).map_err(&f)?.matrix());
            v["kind"] = json!("D(a|B)");
            v
        }
        _ => {
            let a = unit(a, "--a", rule)?;
            let b = unit(b, "--b", rule)?;
            json!({ "kind": "D(a|b)", "value": cond_scalar(&j, &a, &b).map_err(&f)? })
        }
    };
    let mut value = value;
    value["rule"] = json!(rule);
    writeln!(out, "{value}")?;
    Ok(())
}

pub fn em_recover(
    conditional: &Path,
    dims: (usize, usize),
    tol: f64,
    max_iter: usize,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let f = fail("EM");
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::validation("EM", format!("tolerance {tol} must be finite and nonnegative")));
    }
    let c = json::read::<MatrixJson>(conditional)
        .and_then(|m| m.to_psd())
        .and_then(|p| ConditionalMatrix::new(p, dims, ConditionalKind::AGivenB))
        .map_err(&f)?;
    let outcome = em_recover_marginal(&c, max_iter, tol).map_err(&f)?;
    let value = json!({
        "rule": "EM",
        "marginal": matrix_value(outcome.marginal.matrix()),
        "iterations": outcome.iterations,
        "reconstruction_error": outcome.reconstruction_error,
        "steps": outcome.steps,
    });
    writeln!(out, "{value}")?;
    Ok(())
}

pub fn verify(suite: Option<Suite>, cfg: &Config, out: &mut impl Write) -> Result<(), Failure> {
    let suites = suite.map_or_else(|| Suite::ALL.to_vec(), |s| vec![s]);
    let reports = verify::run(&suites, cfg).map_err(fail("VERIFY"))?;
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.id).collect();
    writeln!(
        out,
        "summary rules={} passed={} failed={} trials={} seed={} dims={}..={}",
        reports.len(),
        reports.len() - failed.len(),
        failed.len(),
        cfg.trials,
        cfg.seed,
        cfg.dim_min,
        cfg.dim_max
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::validation("VERIFY", format!("failed rules: {}", failed.join(" "))))
    }
}

pub fn figure_eight(w: &Path, samples: usize, out: &mut impl Write) -> Result<(), Failure> {
    let f = fail("PROB");
    if samples == 0 {
        return Err(Failure::validation("PROB", "--samples must be positive"));
    }
    let w = Operand::read(w).and_then(|o| o.psd()).and_then(DensityMatrix::new).map_err(&f)?;
    if w.dim() != 2 {
        return Err(Failure::validation("PROB", format!("W is {0}x{0}, expected 2x2", w.dim())));
    }
    writeln!(out, "theta,prob,x,y")?;
    for i in 0..samples {
        let theta = TAU * i as f64 / samples as f64;
        let (s, c) = theta.sin_cos();
        let u = UnitVector::normalize(nalgebra::DVector::from_vec(vec![c, s])).map_err(&f)?;
        let p = prob_dyad(&w, &u).map_err(&f)?;
        writeln!(out, "{},{},{},{}", num(theta), num(p), num(p * c), num(p * s))?;
    }
    Ok(())
}
