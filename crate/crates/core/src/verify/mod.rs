//! Seeded property suites: every algebraic rule of the calculus checked on
//! random instances, one report per rule.
//!
//! Trial `t` of rule `id` draws from its own generator seeded by
//! `(seed, id, t)`, so reports do not depend on which rules run, in what
//! order, or on how many threads.

mod bounds;
mod conditionals;
mod joint;
mod ops;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Op,
    Kp,
    Pt,
    Mj,
    Cp,
    Mc,
    Tp,
    Br,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Op,
        Suite::Kp,
        Suite::Pt,
        Suite::Mj,
        Suite::Cp,
        Suite::Mc,
        Suite::Tp,
        Suite::Br,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Op => "OP",
            Suite::Kp => "KP",
            Suite::Pt => "PT",
            Suite::Mj => "MJ",
            Suite::Cp => "CP",
            Suite::Mc => "MC",
            Suite::Tp => "TP",
            Suite::Br => "BR",
            Suite::Bounds => "bounds",
        }
    }

    fn rules(self) -> Vec<Rule> {
        match self {
            Suite::Op => ops::rules(),
            Suite::Kp => joint::kp_rules(),
            Suite::Pt => joint::pt_rules(),
            Suite::Mj => joint::mj_rules(),
            Suite::Cp => conditionals::cp_rules(),
            Suite::Mc => conditionals::mc_rules(),
            Suite::Tp => bounds::tp_rules(),
            Suite::Br => bounds::br_rules(),
            Suite::Bounds => bounds::bound_rules(),
        }
    }

    /// Rule IDs of this suite, in report order.
    pub fn rule_ids(self) -> Vec<&'static str> {
        self.rules().iter().map(|r| r.id).collect()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub trials: usize,
    pub seed: u64,
    pub dim_min: usize,
    pub dim_max: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            dim_min: 2,
            dim_max: 6,
        }
    }
}

impl Config {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trial count must be positive"));
        }
        if self.dim_min < 2 || self.dim_max < self.dim_min {
            return Err(Error::invalid(format!(
                "dimension range {}..={} must satisfy 2 <= min <= max",
                self.dim_min, self.dim_max
            )));
        }
        Ok(())
    }
}

/// How a rule's per-trial measure is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every trial's error must be at most the tolerance.
    Forall,
    /// At least one trial must exceed the tolerance: a search for a
    /// counterexample to a property that does not hold in general.
    Exists,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleReport {
    pub id: &'static str,
    pub suite: Suite,
    pub mode: Mode,
    pub trials: usize,
    /// Forall: trials over tolerance or erroring. Exists: trials without a witness.
    pub failures: usize,
    /// Largest measure seen (the error, or the best witness margin).
    pub max_error: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// First error raised by a trial, if any.
    pub first_error: Option<String>,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        match self.mode {
            Mode::Forall => self.failures == 0,
            Mode::Exists => self.failures < self.trials,
        }
    }
}

impl fmt::Display for RuleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        match self.mode {
            Mode::Forall => write!(
                f,
                "{:<12} {verdict} trials={} failures={} max_error={:.3e} tol={:.0e} seed={}",
                self.id, self.trials, self.failures, self.max_error, self.tolerance, self.seed
            )?,
            Mode::Exists => write!(
                f,
                "{:<12} {verdict} trials={} witnesses={} best_margin={:.3e} threshold={:.0e} seed={}",
                self.id,
                self.trials,
                self.trials - self.failures,
                self.max_error,
                self.tolerance,
                self.seed
            )?,
        }
        if let Some(e) = &self.first_error {
            write!(f, " error=\"{e}\"")?;
        }
        Ok(())
    }
}

/// Random source and dimension of one trial.
pub(crate) struct Trial {
    pub rng: ChaCha8Rng,
    pub n: usize,
    joint_cap: usize,
}

impl Trial {
    /// Factor dimensions `(n_A, n_B)`, each at least 2, with
    /// `n_A · n_B ≤ max(dim_max, 4)`.
    pub fn joint_dims(&mut self) -> (usize, usize) {
        let pairs: Vec<(usize, usize)> = (2..=self.joint_cap)
            .flat_map(|a| (2..=self.joint_cap).map(move |b| (a, b)))
            .filter(|(a, b)| a * b <= self.joint_cap)
            .collect();
        pairs[self.rng.random_range(0..pairs.len())]
    }
}

pub(crate) type Check = fn(&mut Trial) -> Result<f64>;

pub(crate) struct Rule {
    pub id: &'static str,
    pub tol: f64,
    pub mode: Mode,
    pub check: Check,
}

pub(crate) fn forall(id: &'static str, tol: f64, check: Check) -> Rule {
    Rule { id, tol, mode: Mode::Forall, check }
}

pub(crate) fn exists(id: &'static str, threshold: f64, check: Check) -> Rule {
    Rule { id, tol: threshold, mode: Mode::Exists, check }
}

/// Default relative tolerance of the suites.
pub const DEFAULT_TOL: f64 = 1e-8;

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn trial_rng(seed: u64, id: &str, trial: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(id).to_le_bytes());
    key[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn run_rule(rule: &Rule, suite: Suite, cfg: &Config) -> RuleReport {
    let span = cfg.dim_max - cfg.dim_min + 1;
    let mut report = RuleReport {
        id: rule.id,
        suite,
        mode: rule.mode,
        trials: cfg.trials,
        failures: 0,
        max_error: 0.0,
        tolerance: rule.tol,
        seed: cfg.seed,
        first_error: None,
    };
    for t in 0..cfg.trials {
        let mut trial = Trial {
            rng: trial_rng(cfg.seed, rule.id, t),
            n: cfg.dim_min + t % span,
            joint_cap: cfg.dim_max.max(4),
        };
        match (rule.check)(&mut trial) {
            Ok(e) if e.is_nan() => {
                report.failures += 1;
                report.first_error.get_or_insert_with(|| format!("trial {t}: NaN measure"));
            }
            Ok(e) => {
                report.max_error = report.max_error.max(e);
                let bad = match rule.mode {
                    Mode::Forall => e > rule.tol,
                    Mode::Exists => e <= rule.tol,
                };
                report.failures += bad as usize;
            }
            Err(err) => {
                report.failures += 1;
                report.first_error.get_or_insert_with(|| format!("trial {t}: {err}"));
            }
        }
    }
    report
}

/// Runs the given suites; rules run on worker threads, reports come back
/// in suite and rule order.
pub fn run(suites: &[Suite], cfg: &Config) -> Result<Vec<RuleReport>> {
    cfg.validate()?;
    let jobs: Vec<(Suite, Rule)> = suites
        .iter()
        .flat_map(|&s| s.rules().into_iter().map(move |r| (s, r)))
        .collect();
    let slots: Mutex<Vec<Option<RuleReport>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((suite, rule)) = jobs.get(i) else { break };
                let report = run_rule(rule, *suite, cfg);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(report);
            });
        }
    });
    Ok(slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect())
}

pub fn run_all(cfg: &Config) -> Result<Vec<RuleReport>> {
    run(&Suite::ALL, cfg)
}

// Error measures shared by the suites.

/// ‖x − y‖_F / max(1, ‖y‖_F)
pub(crate) fn rel(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

/// |x − y| / max(1, |y|)
pub(crate) fn rel_s(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

/// Amount by which `lhs ≤ rhs` fails, relative to `max(1, |rhs|)`.
pub(crate) fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).max(0.0) / rhs.abs().max(1.0)
}

// Oracles computed straight from nalgebra, independent of the crate's
// spectral code.

/// V f(Λ) Vᵀ with `f` applied to every eigenvalue.
pub(crate) fn spectral(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let e = SymmetricEigen::new((m + m.transpose()) / 2.0);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Log on eigenvalues above `1e-9 · max(1, λ_max)`, zero elsewhere.
pub(crate) fn log_plus(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cut = cutoff(m);
    spectral(m, |x| if x > cut { x.ln() } else { 0.0 })
}

fn cutoff(m: &DMatrix<f64>) -> f64 {
    1e-9 * m.norm().max(1.0)
}

/// Orthonormal basis of `range(m)` from a QR of `m` times a Gaussian block.
pub(crate) fn range_basis(m: &DMatrix<f64>, rng: &mut impl Rng) -> DMatrix<f64> {
    let cut = cutoff(m);
    let rank = SymmetricEigen::new(m.clone()).eigenvalues.iter().filter(|x| **x > cut).count();
    if rank == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let g = DMatrix::from_fn(m.ncols(), rank, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    (m * g).qr().q()
}

/// Projector onto `range(Pa) ∩ range(Pb)`: the null space of `2I − Pa − Pb`.
pub(crate) fn intersection_basis(pa: &DMatrix<f64>, pb: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pa.nrows();
    let e = SymmetricEigen::new(DMatrix::identity(n, n) * 2.0 - pa - pb);
    let keep: Vec<usize> = (0..n).filter(|&i| e.eigenvalues[i] < 1e-9).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| e.eigenvectors[(r, keep[c])])
}

/// `A ⊙ B` by the compressed formula over an independently computed
/// intersection basis.
pub(crate) fn odot_oracle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (pa, pb) = (spectral(a, |x| proj(x, a)), spectral(b, |x| proj(x, b)));
    let r = intersection_basis(&pa, &pb);
    if r.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), a.nrows());
    }
    let inner = r.transpose() * (log_plus(a) + log_plus(b)) * &r;
    &r * spectral(&inner, f64::exp) * r.transpose()
}

fn proj(x: f64, m: &DMatrix<f64>) -> f64 {
    if x > cutoff(m) {
        1.0
    } else {
        0.0
    }
}

/// Entrywise sum of `J_{(i,k),(j,l)} b_k b_l`: D(𝔸, b) by index loops.
pub(crate) fn slice_by_loops(j: &DMatrix<f64>, dims: (usize, usize), b: &[f64]) -> DMatrix<f64> {
    let (na, nb) = dims;
    DMatrix::from_fn(na, na, |i, jj| {
        let mut s = 0.0;
        for k in 0..nb {
            for l in 0..nb {
                s += j[(i * nb + k, jj * nb + l)] * b[k] * b[l];
            }
        }
        s
    })
}

/// Entrywise sum of `J_{(i,k),(j,l)} a_i a_j`: D(a, 𝔹) by index loops.
pub(crate) fn slice_a_by_loops(j: &DMatrix<f64>, dims: (usize, usize), a: &[f64]) -> DMatrix<f64> {
    let (na, nb) = dims;
    DMatrix::from_fn(nb, nb, |k, l| {
        let mut s = 0.0;
        for i in 0..na {
            for jj in 0..na {
                s += j[(i * nb + k, jj * nb + l)] * a[i] * a[jj];
            }
        }
        s
    })
}
