//! Bayes rules: the conventional rule on probability vectors, its density
//! matrix generalization `posterior ∝ prior ⊙ likelihood`, the
//! total probability rules, reversal rules, chaining and bounds.
#![allow(non_snake_case)]

use nalgebra::DMatrix;

use crate::conditional::{ConditionalKind, ConditionalMatrix};
use crate::density::{relative_entropy, remote_pinching, trace_of_product, DensityMatrix};
use crate::error::{check_dim, Error, Result};
use crate::odot::odot;
use crate::symlin::{
    eigendecompose, expm, logm, logm_plus, pseudoinverse, tol, OrthonormalBasis, PsdMatrix, SymmetricMatrix,
    UnitVector,
};
use crate::tensor::{kron, marginal, partial_trace, Factor, JointDensity};

/// Accepted deviation of a probability vector's sum from one.
pub const PROB_SUM_TOL: f64 = 1e-9;

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid(format!("{what} has negative or non-finite entries")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!("{what} sums to {s}, expected 1")));
    }
    Ok(())
}

/// `P(Mᵢ|y) = P(Mᵢ) P(y|Mᵢ) / P(y)`; returns the posterior and `P(y)`.
pub fn conventional_bayes(prior: &[f64], likelihood: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_probability_vector(prior, "prior")?;
    check_dim(prior.len(), likelihood.len())?;
    if likelihood.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid("likelihood has negative or non-finite entries"));
    }
    let joint: Vec<f64> = prior.iter().zip(likelihood).map(|(p, l)| p * l).collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 {
        return Err(Error::ZeroEvidence { rule: "Bayes" });
    }
    Ok((joint.iter().map(|x| x / evidence).collect(), evidence))
}

/// `Σ γᵢ ln(γᵢ/P(Mᵢ)) − Σ γᵢ ln P(y|Mᵢ)`, minimized by the conventional
/// posterior with value `−ln P(y)`.
pub fn conventional_objective(gamma: &[f64], prior: &[f64], likelihood: &[f64]) -> Result<f64> {
    check_dim(prior.len(), gamma.len())?;
    check_dim(prior.len(), likelihood.len())?;
    let mut total = 0.0;
    for ((&g, &p), &l) in gamma.iter().zip(prior).zip(likelihood) {
        if g == 0.0 {
            continue;
        }
        if p == 0.0 || l == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += g * (g / p).ln() - g * l.ln();
    }
    Ok(total)
}

/// `P(Mᵢ|t) ∝ P(Mᵢ) P(y|Mᵢ)^t`
pub fn conventional_bayes_flow(prior: &[f64], likelihood: &[f64], t: f64) -> Result<Vec<f64>> {
    let powered: Vec<f64> = likelihood.iter().map(|l| l.powf(t)).collect();
    Ok(conventional_bayes(prior, &powered)?.0)
}

/// A prior density over the model space and a data likelihood matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesProblem {
    pub prior: DensityMatrix,
    pub likelihood: PsdMatrix,
}

impl BayesProblem {
    pub fn new(prior: DensityMatrix, likelihood: PsdMatrix) -> Result<Self> {
        check_dim(prior.dim(), likelihood.dim())?;
        Ok(Self { prior, likelihood })
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesUpdate {
    pub posterior: DensityMatrix,
    pub evidence: f64,
}

/// `posterior = prior ⊙ likelihood / evidence`, `evidence = tr(prior ⊙ likelihood)`.
pub fn generalized_bayes(p: &BayesProblem) -> Result<BayesUpdate> {
    let joint = odot(p.prior.psd(), &p.likelihood)?;
    if joint.rank() == 0 {
        return Err(Error::ZeroEvidence { rule: "Bayes" });
    }
    let evidence = joint.trace();
    Ok(BayesUpdate {
        posterior: DensityMatrix::normalize(&joint)?,
        evidence,
    })
}

/// `Δ(W, prior) − tr(W logm likelihood)`, or +∞ when `W` leaves the range
/// of the prior or the likelihood. Minimized by the generalized posterior,
/// with value `−ln evidence`.
pub fn bayes_objective(w: &DensityMatrix, p: &BayesProblem) -> Result<f64> {
    check_dim(p.dim(), w.dim())?;
    if !w.psd().range_within(&p.likelihood) {
        return Ok(f64::INFINITY);
    }
    let rel = relative_entropy(w, &p.prior)?;
    if rel.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(rel - trace_of_product(w.matrix(), logm_plus(&p.likelihood).matrix()))
}

/// Posteriors after each of `steps` repeated conventional updates with the
/// same likelihood; entry 0 is the prior, `evidences[t]` produced entry `t+1`.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub evidences: Vec<f64>,
}

pub fn iterate_conventional(prior: &[f64], likelihood: &[f64], steps: usize) -> Result<Trajectory<Vec<f64>>> {
    let mut states = vec![prior.to_vec()];
    let mut evidences = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (post, ev) = conventional_bayes(states.last().expect("nonempty"), likelihood)?;
        // keep the iterate exactly normalized so later steps pass the sum check
        let s: f64 = post.iter().sum();
        states.push(post.iter().map(|x| x / s).collect());
        evidences.push(ev);
    }
    Ok(Trajectory { states, evidences })
}

/// Repeated generalized updates with the same likelihood. For strictly
/// positive definite inputs step `t` is computed directly as
/// `normalize(expm(logm prior + t logm likelihood))`, which equals the
/// sequential result but never truncates eigenvalues that decay below the
/// rank cutoff; otherwise the updates are applied one at a time.
pub fn iterate_generalized(prior: &DensityMatrix, likelihood: &PsdMatrix, steps: usize) -> Result<Trajectory<DensityMatrix>> {
    check_dim(prior.dim(), likelihood.dim())?;
    let mut states = vec![prior.clone()];
    let mut evidences = Vec::with_capacity(steps);
    if prior.psd().is_full_rank() && likelihood.is_full_rank() {
        let log_p = logm(prior.psd().as_symmetric())?;
        let log_l = logm(likelihood.as_symmetric())?;
        let mut log_z = 0.0;
        for t in 1..=steps {
            let (w, next) = exp_normalized(&log_p.add(&log_l.scaled(t as f64))?)?;
            states.push(w);
            evidences.push((next - log_z).exp());
            log_z = next;
        }
        return Ok(Trajectory { states, evidences });
    }
    for _ in 0..steps {
        let p = BayesProblem::new(states.last().expect("nonempty").clone(), likelihood.clone())?;
        let up = generalized_bayes(&p)?;
        states.push(up.posterior);
        evidences.push(up.evidence);
    }
    Ok(Trajectory { states, evidences })
}

/// `expm(s) / tr expm(s)` and `ln tr expm(s)`, evaluated after shifting `s`
/// by its top eigenvalue.
fn exp_normalized(s: &SymmetricMatrix) -> Result<(DensityMatrix, f64)> {
    let top = eigendecompose(s)?.values[0];
    let e = expm(&s.add(&SymmetricMatrix::identity(s.dim()).scaled(-top))?)?;
    let tr = e.trace();
    Ok((DensityMatrix::normalize(&PsdMatrix::new(e)?)?, top + tr.ln()))
}

/// D(a) = Σᵢ D(a|bᵢ) D(bᵢ) over an orthonormal system of 𝔹.
pub fn tp1(j: &JointDensity, a: &UnitVector, basis: &OrthonormalBasis) -> Result<f64> {
    check_dim(j.dims().1, basis.ambient_dim())?;
    let db = marginal(j, Factor::B);
    let mut total = 0.0;
    for b in basis.iter() {
        let pb = db.psd().as_symmetric().quadratic_form(&b)?;
        if pb > tol::PROB {
            total += crate::conditional::cond_scalar(j, a, &b)? * pb;
        }
    }
    Ok(total)
}

/// D(𝔸) = Σᵢ D(𝔸, bᵢ) over an orthonormal system of 𝔹.
pub fn tp2(j: &JointDensity, basis: &OrthonormalBasis) -> Result<DensityMatrix> {
    check_dim(j.dims().1, basis.ambient_dim())?;
    let na = j.dims().0;
    let mut total = DMatrix::zeros(na, na);
    for b in basis.iter() {
        total += crate::tensor::joint_slice(j, &b)?.matrix();
    }
    DensityMatrix::new(PsdMatrix::new(SymmetricMatrix::symmetrize(total))?)
}

/// D(a) = tr(D(a|𝔹) ⊙ D(𝔹))
pub fn tp2_trace(a_given_B: &PsdMatrix, db: &DensityMatrix) -> Result<f64> {
    Ok(odot(a_given_B, db.psd())?.trace())
}

/// Rebuilds the other marginal from a full conditional: `D(𝔸) =
/// tr_B(D(𝔸|𝔹) ⊙ (I ⊗ D(𝔹)))` or `D(𝔹) = tr_A(D(𝔹|𝔸) ⊙ (D(𝔸) ⊗ I))`.
pub fn marginal_from_conditional(c: &ConditionalMatrix, given: &DensityMatrix) -> Result<DensityMatrix> {
    let (na, nb) = c.dims();
    let (lifted, traced) = match c.kind() {
        ConditionalKind::AGivenB => {
            check_dim(nb, given.dim())?;
            (kron(&DMatrix::identity(na, na), given.matrix()), Factor::B)
        }
        ConditionalKind::BGivenA => {
            check_dim(na, given.dim())?;
            (kron(given.matrix(), &DMatrix::identity(nb, nb)), Factor::A)
        }
        k => return Err(Error::invalid(format!("{k:?} is not a full conditional"))),
    };
    let joint = odot(c.psd(), &PsdMatrix::new(SymmetricMatrix::symmetrize(lifted))?)?;
    let m = partial_trace(joint.matrix(), c.dims(), traced)?;
    DensityMatrix::new(PsdMatrix::new(SymmetricMatrix::symmetrize(m))?)
}

/// D(𝔸) = tr_B(D(𝔸|𝔹) ⊙ (I ⊗ D(𝔹)))
pub fn tp3(c: &ConditionalMatrix, db: &DensityMatrix) -> Result<DensityMatrix> {
    if c.kind() != ConditionalKind::AGivenB {
        return Err(Error::invalid("TP3 needs a D(A|B) conditional"));
    }
    marginal_from_conditional(c, db)
}

/// `tr(D(a|𝔹) ⊙ D(𝔹))` and its upper bound `tr(D(a|𝔹) D(𝔹))` expanded in
/// either eigensystem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedVariance {
    pub exact: f64,
    /// Σᵢ ωᵢ wᵢᵀ D(a|𝔹) wᵢ over the eigensystem of D(𝔹).
    pub expected_variance: f64,
    /// Σᵢ (uᵢᵀ D(𝔹) uᵢ) λᵢ over the eigensystem of D(a|𝔹).
    pub expected_measurement: f64,
}

pub fn expected_variance_bounds(a_given_B: &PsdMatrix, db: &DensityMatrix) -> Result<ExpectedVariance> {
    check_dim(db.dim(), a_given_B.dim())?;
    let exact = tp2_trace(a_given_B, db)?;
    let variance = db
        .psd()
        .eigvals()
        .iter()
        .zip(db.psd().eigvecs().iter())
        .map(|(w, u)| Ok(w * a_given_B.as_symmetric().quadratic_form(&u)?))
        .sum::<Result<f64>>()?;
    let measurement = a_given_B
        .eigvals()
        .iter()
        .zip(a_given_B.eigvecs().iter())
        .map(|(l, u)| Ok(l * db.psd().as_symmetric().quadratic_form(&u)?))
        .sum::<Result<f64>>()?;
    Ok(ExpectedVariance {
        exact,
        expected_variance: variance,
        expected_measurement: measurement,
    })
}

fn full_inverse(rule: &'static str, m: &PsdMatrix) -> Result<PsdMatrix> {
    if !m.is_full_rank() {
        return Err(Error::ConditioningOnNull {
            rule,
            probability: m.eigvals()[m.dim() - 1],
        });
    }
    Ok(pseudoinverse(m))
}

/// D(𝔹|𝔸) = (I ⊗ D(𝔹)) ⊙ D(𝔸|𝔹) ⊙ (D(𝔸) ⊗ I)⁻¹ with
/// D(𝔸) = tr_B((I ⊗ D(𝔹)) ⊙ D(𝔸|𝔹)).
pub fn br1(c: &ConditionalMatrix, db: &DensityMatrix) -> Result<ConditionalMatrix> {
    if c.kind() != ConditionalKind::AGivenB {
        return Err(Error::invalid("BR1 needs a D(A|B) conditional"));
    }
    let (na, nb) = c.dims();
    check_dim(nb, db.dim())?;
    let da = marginal_from_conditional(c, db)?;
    let lifted_b = PsdMatrix::new(SymmetricMatrix::symmetrize(kron(&DMatrix::identity(na, na), db.matrix())))?;
    let inv_a = full_inverse("BR1", da.psd())?;
    let lifted_inv_a = PsdMatrix::new(SymmetricMatrix::symmetrize(kron(inv_a.matrix(), &DMatrix::identity(nb, nb))))?;
    let out = odot(&odot(&lifted_b, c.psd())?, &lifted_inv_a)?;
    ConditionalMatrix::new(out, c.dims(), ConditionalKind::BGivenA)
}

/// D(a|𝔹) = D(a) · D(𝔹|a) ⊙ D(𝔹)⁻¹
pub fn br2(da: f64, b_given_a: &DensityMatrix, db: &DensityMatrix) -> Result<PsdMatrix> {
    check_dim(db.dim(), b_given_a.dim())?;
    let inv = full_inverse("BR2", db.psd())?;
    if da <= tol::PROB {
        return Err(Error::ConditioningOnNull { rule: "BR2", probability: da });
    }
    odot(&b_given_a.psd().scaled(da)?, &inv)
}

/// D(𝔹|a) = D(𝔹) ⊙ D(a|𝔹) / D(a) with D(a) = tr(D(𝔹) ⊙ D(a|𝔹)); returns
/// the conditional and D(a).
pub fn br3(db: &DensityMatrix, a_given_B: &PsdMatrix) -> Result<(DensityMatrix, f64)> {
    check_dim(db.dim(), a_given_B.dim())?;
    let joint = odot(db.psd(), a_given_B)?;
    let da = joint.trace();
    if da <= tol::PROB || joint.rank() == 0 {
        return Err(Error::ConditioningOnNull { rule: "BR3", probability: da });
    }
    Ok((DensityMatrix::normalize(&joint)?, da))
}

/// D(bₖ|a) = D(a|bₖ) D(bₖ) / Σᵢ D(a|bᵢ) D(bᵢ), from the pairs
/// `(D(a|bᵢ), D(bᵢ))` over an orthonormal system.
pub fn br4(pairs: &[(f64, f64)], k: usize) -> Result<f64> {
    let (c, p) = *pairs
        .get(k)
        .ok_or_else(|| Error::invalid(format!("index {k} out of {} pairs", pairs.len())))?;
    let da: f64 = pairs.iter().map(|(c, p)| c * p).sum();
    if da <= tol::PROB {
        return Err(Error::ConditioningOnNull { rule: "BR4", probability: da });
    }
    Ok(c * p / da)
}

/// D(a|bᵢ) and D(bᵢ) for every direction of `basis`, skipping nothing:
/// null directions contribute a zero pair.
pub fn br4_pairs(j: &JointDensity, a: &UnitVector, basis: &OrthonormalBasis) -> Result<Vec<(f64, f64)>> {
    let db = marginal(j, Factor::B);
    basis
        .iter()
        .map(|b| {
            let pb = db.psd().as_symmetric().quadratic_form(&b)?;
            if pb <= tol::PROB {
                Ok((0.0, 0.0))
            } else {
                Ok((crate::conditional::cond_scalar(j, a, &b)?, pb))
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub posterior: DensityMatrix,
    pub step_evidences: Vec<f64>,
    /// Product of the stepwise evidences.
    pub total_evidence: f64,
    /// tr(prior ⊙ L₁ ⊙ L₂ ⊙ …) in one expression.
    pub chained_evidence: f64,
    /// Πₜ tr(D(𝕄|y₁..y_{t−1}) Lₜ), the plain-product upper bound.
    pub plain_product_bound: f64,
}

/// Sequential generalized Bayes over `likelihoods`.
pub fn chain_update(prior: &DensityMatrix, likelihoods: &[PsdMatrix]) -> Result<ChainOutcome> {
    if likelihoods.is_empty() {
        return Err(Error::invalid("chain of zero likelihoods"));
    }
    let mut current = prior.clone();
    let mut steps = Vec::with_capacity(likelihoods.len());
    let mut bound = 1.0;
    let mut joint = prior.psd().clone();
    for l in likelihoods {
        bound *= trace_of_product(current.matrix(), l.matrix());
        let up = generalized_bayes(&BayesProblem::new(current, l.clone())?)?;
        steps.push(up.evidence);
        current = up.posterior;
        joint = odot(&joint, l)?;
    }
    Ok(ChainOutcome {
        posterior: current,
        total_evidence: steps.iter().product(),
        step_evidences: steps,
        chained_evidence: joint.trace(),
        plain_product_bound: bound,
    })
}

/// `−ln D(y)` and the minima over candidate directions `m` of
/// `−ln mᵀ(L⊙P)m`, `−mᵀ logm(L⊙P) m` and `−mᵀ logm L m − mᵀ logm P m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapBound {
    pub neg_log_evidence: f64,
    pub chain: [f64; 3],
}

impl MapBound {
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.neg_log_evidence <= self.chain[0] + slack
            && self.chain[0] <= self.chain[1] + slack
            && self.chain[1] <= self.chain[2] + slack
    }
}

/// −mᵀ logm(A) m with the convention that directions outside the range
/// of `A` give +∞.
fn neg_log_form(a: &PsdMatrix, log_a: &SymmetricMatrix, m: &UnitVector) -> Result<f64> {
    if !a.range().contains(m.as_vector()) {
        return Ok(f64::INFINITY);
    }
    Ok(-log_a.quadratic_form(m)?)
}

/// Evaluates the MAP chain over the eigenvectors of the prior, the
/// likelihood and their ⊙ product, plus `extra` directions.
pub fn map_bound(p: &BayesProblem, extra: &[UnitVector]) -> Result<MapBound> {
    let post = odot(p.prior.psd(), &p.likelihood)?;
    if post.rank() == 0 {
        return Err(Error::ZeroEvidence { rule: "MAP bound" });
    }
    let candidates: Vec<UnitVector> = p
        .prior
        .psd()
        .eigvecs()
        .iter()
        .chain(p.likelihood.eigvecs().iter())
        .chain(post.eigvecs().iter())
        .chain(extra.iter().cloned())
        .collect();
    let (log_post, log_l, log_p) = (logm_plus(&post), logm_plus(&p.likelihood), logm_plus(p.prior.psd()));
    let mut chain = [f64::INFINITY; 3];
    for m in &candidates {
        check_dim(p.dim(), m.dim())?;
        let q = post.as_symmetric().quadratic_form(m)?;
        let v0 = if q > 0.0 { -q.ln() } else { f64::INFINITY };
        let v1 = neg_log_form(&post, &log_post, m)?;
        let v2 = neg_log_form(&p.likelihood, &log_l, m)? + neg_log_form(p.prior.psd(), &log_p, m)?;
        chain[0] = chain[0].min(v0);
        chain[1] = chain[1].min(v1);
        chain[2] = chain[2].min(v2);
    }
    Ok(MapBound {
        neg_log_evidence: -post.trace().ln(),
        chain,
    })
}

/// `D(y) ≤ tr(L P) = Σᵢ μᵢ mᵢᵀ L mᵢ ≤ maxᵢ mᵢᵀ L mᵢ ≤ λ_max(L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodBound {
    pub evidence: f64,
    pub plain_trace: f64,
    pub prior_eigen_mixture: f64,
    pub max_over_prior_eigvecs: f64,
    pub lambda_max: f64,
}

impl LikelihoodBound {
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.evidence <= self.plain_trace + slack
            && (self.plain_trace - self.prior_eigen_mixture).abs() <= slack
            && self.prior_eigen_mixture <= self.max_over_prior_eigvecs + slack
            && self.max_over_prior_eigvecs <= self.lambda_max + slack
    }
}

pub fn max_likelihood_bound(p: &BayesProblem) -> Result<LikelihoodBound> {
    let evidence = odot(p.prior.psd(), &p.likelihood)?.trace();
    let l = p.likelihood.as_symmetric();
    let mut mixture = 0.0;
    let mut best = f64::NEG_INFINITY;
    for (mu, m) in p.prior.psd().eigvals().iter().zip(p.prior.psd().eigvecs().iter()) {
        let v = l.quadratic_form(&m)?;
        mixture += mu * v;
        best = best.max(v);
    }
    Ok(LikelihoodBound {
        evidence,
        plain_trace: trace_of_product(p.prior.matrix(), p.likelihood.matrix()),
        prior_eigen_mixture: mixture,
        max_over_prior_eigvecs: best,
        lambda_max: p.likelihood.lambda_max(),
    })
}

/// D(𝕄|t) ∝ expm(logm prior + t logm likelihood); both must be strictly
/// positive definite.
pub fn bayes_flow(p: &BayesProblem, t: f64) -> Result<DensityMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("flow time {t} must be a nonnegative number")));
    }
    if !p.prior.psd().is_full_rank() || !p.likelihood.is_full_rank() {
        return Err(Error::invalid("Bayes flow needs strictly positive definite prior and likelihood"));
    }
    let s = logm(p.prior.psd().as_symmetric())?.add(&logm(p.likelihood.as_symmetric())?.scaled(t))?;
    Ok(exp_normalized(&s)?.0)
}

/// Right-hand side of the flow's differential equation:
/// `logm L − tr(D(𝕄|t) logm L) · I`.
pub fn bayes_flow_derivative(p: &BayesProblem, t: f64) -> Result<SymmetricMatrix> {
    let w = bayes_flow(p, t)?;
    let log_l = logm(p.likelihood.as_symmetric())?;
    let shift = trace_of_product(w.matrix(), log_l.matrix());
    log_l.add(&SymmetricMatrix::identity(p.dim()).scaled(-shift))
}

/// `−ln Σᵢ tr(P ⊙ wᵢwᵢᵀ) tr(L ⊙ wᵢwᵢᵀ)` over `basis`, and its floor
/// `−ln tr(P ⊙ L)`; they meet when `basis` diagonalizes `P ⊙ L`.
pub fn pinched_bayes_check(p: &BayesProblem, basis: &OrthonormalBasis) -> Result<(f64, f64)> {
    let prior = remote_pinching(p.prior.psd(), basis)?;
    let lik = remote_pinching(&p.likelihood, basis)?;
    let value = -prior.dot(&lik).ln();
    let floor = -odot(p.prior.psd(), &p.likelihood)?.trace().ln();
    Ok((value, floor))
}

/// Eigenbasis of `prior ⊙ likelihood`, the optimal basis for
/// [`pinched_bayes_check`].
pub fn optimal_pinching_basis(p: &BayesProblem) -> Result<OrthonormalBasis> {
    let joint = odot(p.prior.psd(), &p.likelihood)?;
    Ok(eigendecompose(joint.as_symmetric())?.vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PRIOR: [f64; 4] = [0.29, 0.4, 0.3, 0.01];
    const LIK: [f64; 4] = [0.7, 0.84, 0.85, 0.9];

    #[test]
    fn conventional_rule_by_hand() {
        // independent oracle: explicit products
        let ev = 0.29 * 0.7 + 0.4 * 0.84 + 0.3 * 0.85 + 0.01 * 0.9;
        assert_relative_eq!(ev, 0.803, epsilon = 1e-15);
        let (post, e) = conventional_bayes(&PRIOR, &LIK).unwrap();
        assert_relative_eq!(e, 0.803, epsilon = 1e-15);
        let expect = [0.203 / 0.803, 0.336 / 0.803, 0.255 / 0.803, 0.009 / 0.803];
        for (p, x) in post.iter().zip(expect) {
            assert_relative_eq!(*p, x, epsilon = 1e-15);
        }
        assert_relative_eq!(post[0], 0.2528, epsilon = 5e-4);
        assert_relative_eq!(post[1], 0.4184, epsilon = 5e-4);
    }

    #[test]
    fn uniform_prior_follows_likelihood() {
        let (post, _) = conventional_bayes(&[0.25; 4], &LIK).unwrap();
        let s: f64 = LIK.iter().sum();
        for (p, l) in post.iter().zip(LIK) {
            assert_relative_eq!(*p, l / s, epsilon = 1e-15);
        }
        assert!(matches!(
            conventional_bayes(&[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::ZeroEvidence { .. })
        ));
        assert!(conventional_bayes(&[0.5, 0.6], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn conventional_objective_minimum() {
        let (post, ev) = conventional_bayes(&PRIOR, &LIK).unwrap();
        assert_relative_eq!(conventional_objective(&post, &PRIOR, &LIK).unwrap(), -ev.ln(), epsilon = 1e-14);
        assert!(conventional_objective(&PRIOR, &PRIOR, &LIK).unwrap() > -ev.ln());
    }

    #[test]
    fn diagonal_generalized_rule_is_conventional() {
        let p = BayesProblem::new(
            DensityMatrix::from_diagonal(&PRIOR).unwrap(),
            PsdMatrix::from_diagonal(&LIK).unwrap(),
        )
        .unwrap();
        let up = generalized_bayes(&p).unwrap();
        let (post, ev) = conventional_bayes(&PRIOR, &LIK).unwrap();
        assert_relative_eq!(up.evidence, ev, epsilon = 1e-12);
        for i in 0..4 {
            assert_relative_eq!(up.posterior.matrix()[(i, i)], post[i], epsilon = 1e-12);
        }
        assert_relative_eq!(bayes_objective(&up.posterior, &p).unwrap(), -ev.ln(), epsilon = 1e-12);
        let gamma: Vec<f64> = (0..4).map(|i| up.posterior.matrix()[(i, i)]).collect();
        assert_relative_eq!(
            bayes_objective(&up.posterior, &p).unwrap(),
            conventional_objective(&gamma, &PRIOR, &LIK).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn uniform_prior_normalizes_likelihood() {
        let l = PsdMatrix::from_rows(&[vec![0.9, 0.2], vec![0.2, 0.4]]).unwrap();
        let up = generalized_bayes(&BayesProblem::new(DensityMatrix::uniform(2), l.clone()).unwrap()).unwrap();
        assert!((up.posterior.matrix() - l.matrix() / l.trace()).norm() < 1e-14);
    }

    #[test]
    fn disjoint_ranges_have_zero_evidence() {
        let prior = DensityMatrix::pure(&UnitVector::basis(2, 0).unwrap());
        let l = PsdMatrix::dyad(&UnitVector::basis(2, 1).unwrap());
        let p = BayesProblem::new(prior, l).unwrap();
        assert!(matches!(generalized_bayes(&p), Err(Error::ZeroEvidence { .. })));
        assert_eq!(bayes_objective(&DensityMatrix::uniform(2), &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn iterated_conventional_concentrates() {
        let tr = iterate_conventional(&PRIOR, &LIK, 500).unwrap();
        assert_eq!(tr.states.len(), 501);
        assert_eq!(tr.evidences.len(), 500);
        assert!(tr.states[500][3] > 1.0 - 1e-6);
    }

    #[test]
    fn flow_endpoints_and_derivative() {
        let prior = DensityMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.4]]).unwrap();
        let l = PsdMatrix::from_rows(&[vec![0.5, -0.2], vec![-0.2, 0.9]]).unwrap();
        let p = BayesProblem::new(prior.clone(), l).unwrap();
        assert!((bayes_flow(&p, 0.0).unwrap().matrix() - prior.matrix()).norm() < 1e-14);
        let one = bayes_flow(&p, 1.0).unwrap();
        assert!((one.matrix() - generalized_bayes(&p).unwrap().posterior.matrix()).norm() < 1e-10);
        let h = 1e-4;
        let fd = (logm(bayes_flow(&p, 0.5 + h).unwrap().psd().as_symmetric()).unwrap().matrix()
            - logm(bayes_flow(&p, 0.5 - h).unwrap().psd().as_symmetric()).unwrap().matrix())
            / (2.0 * h);
        assert!((fd - bayes_flow_derivative(&p, 0.5).unwrap().matrix()).norm() < 1e-5);
        let diag = conventional_bayes_flow(&[0.5, 0.5], &[0.2, 0.8], 2.0).unwrap();
        assert_relative_eq!(diag[1], 0.64 / 0.68, epsilon = 1e-15);
    }

    #[test]
    fn flow_at_large_times_concentrates() {
        let prior = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let p = BayesProblem::new(prior, PsdMatrix::from_diagonal(&[0.5, 0.4]).unwrap()).unwrap();
        let w = bayes_flow(&p, 1e5).unwrap();
        assert!((w.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        let steps = iterate_generalized(&p.prior, &p.likelihood, 20).unwrap();
        assert!((bayes_flow(&p, 20.0).unwrap().matrix() - steps.states[20].matrix()).norm() < 1e-12);
    }

    #[test]
    fn direct_iteration_matches_sequential_updates() {
        let prior = DensityMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.4]]).unwrap();
        let l = PsdMatrix::from_rows(&[vec![0.5, -0.2], vec![-0.2, 0.9]]).unwrap();
        let direct = iterate_generalized(&prior, &l, 15).unwrap();
        let mut w = prior;
        for t in 0..15 {
            let up = generalized_bayes(&BayesProblem::new(w, l.clone()).unwrap()).unwrap();
            assert!((up.posterior.matrix() - direct.states[t + 1].matrix()).norm() < 1e-12);
            assert_relative_eq!(up.evidence, direct.evidences[t], max_relative = 1e-12);
            w = up.posterior;
        }
    }

    #[test]
    fn iteration_keeps_converging_past_the_rank_cutoff() {
        let prior = DensityMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.4]]).unwrap();
        let l = PsdMatrix::from_rows(&[vec![0.5, 0.2], vec![0.2, 0.9]]).unwrap();
        let top = l.eigvecs().column(0);
        let tr = iterate_generalized(&prior, &l, 4000).unwrap();
        let miss = |t: usize| 1.0 - crate::density::prob_dyad(&tr.states[t], &top).unwrap();
        // the complementary eigenvalue is far below 1e-10 after a few hundred steps
        assert!(tr.states[1000].psd().rank() == 1);
        assert!(miss(4000) < miss(1000) / 10.0);
    }

    #[test]
    fn likelihood_scale_leaves_posterior() {
        let prior = DensityMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.4]]).unwrap();
        let l = PsdMatrix::from_rows(&[vec![0.5, -0.2], vec![-0.2, 0.9]]).unwrap();
        let a = generalized_bayes(&BayesProblem::new(prior.clone(), l.clone()).unwrap()).unwrap();
        let b = generalized_bayes(&BayesProblem::new(prior, l.scaled(7.0).unwrap()).unwrap()).unwrap();
        assert!((a.posterior.matrix() - b.posterior.matrix()).norm() < 1e-14);
        assert_relative_eq!(b.evidence, 7.0 * a.evidence, epsilon = 1e-13);
    }

    #[test]
    fn chaining_diagonal_matches_products() {
        let prior = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let l1 = PsdMatrix::from_diagonal(&[0.2, 0.5, 0.9]).unwrap();
        let l2 = PsdMatrix::from_diagonal(&[0.6, 0.1, 0.3]).unwrap();
        let out = chain_update(&prior, &[l1, l2]).unwrap();
        let joint: f64 = 0.5 * 0.2 * 0.6 + 0.3 * 0.5 * 0.1 + 0.2 * 0.9 * 0.3;
        assert_relative_eq!(out.total_evidence, joint, epsilon = 1e-14);
        assert_relative_eq!(out.chained_evidence, joint, epsilon = 1e-14);
        assert_relative_eq!(out.plain_product_bound, joint, epsilon = 1e-14);
    }

    #[test]
    fn ml_bound_tight_on_top_eigendyad() {
        let l = PsdMatrix::from_rows(&[vec![0.7, 0.2], vec![0.2, 0.3]]).unwrap();
        let prior = DensityMatrix::pure(&l.eigvecs().column(0));
        let b = max_likelihood_bound(&BayesProblem::new(prior, l.clone()).unwrap()).unwrap();
        assert_relative_eq!(b.evidence, l.lambda_max(), epsilon = 1e-12);
        assert!(b.is_ordered(1e-12));
    }

    #[test]
    fn map_bound_diagonal_reduces() {
        let p = BayesProblem::new(
            DensityMatrix::from_diagonal(&PRIOR).unwrap(),
            PsdMatrix::from_diagonal(&LIK).unwrap(),
        )
        .unwrap();
        let b = map_bound(&p, &[]).unwrap();
        let conventional = PRIOR
            .iter()
            .zip(LIK)
            .map(|(p, l)| -l.ln() - p.ln())
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(b.chain[2], conventional, epsilon = 1e-12);
        assert_relative_eq!(b.chain[0], b.chain[2], epsilon = 1e-12);
        assert!(b.is_ordered(1e-12));
    }

    #[test]
    fn pinched_objective_tight_on_eigensystem() {
        let prior = DensityMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.4]]).unwrap();
        let l = PsdMatrix::from_rows(&[vec![0.5, -0.2], vec![-0.2, 0.9]]).unwrap();
        let p = BayesProblem::new(prior, l).unwrap();
        let (v, f) = pinched_bayes_check(&p, &optimal_pinching_basis(&p).unwrap()).unwrap();
        assert_relative_eq!(v, f, epsilon = 1e-12);
        let (v, f) = pinched_bayes_check(&p, &OrthonormalBasis::standard(2)).unwrap();
        assert!(v > f);
    }

    #[test]
    fn expected_variance_equal_when_commuting() {
        let a_given_b = PsdMatrix::from_diagonal(&[0.3, 0.8]).unwrap();
        let db = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
        let ev = expected_variance_bounds(&a_given_b, &db).unwrap();
        assert_relative_eq!(ev.exact, 0.12 + 0.48, epsilon = 1e-14);
        assert_relative_eq!(ev.expected_variance, ev.exact, epsilon = 1e-14);
        assert_relative_eq!(ev.expected_measurement, ev.exact, epsilon = 1e-14);
    }

    #[test]
    fn br4_is_conventional_on_tables() {
        let pairs = [(0.2, 0.5), (0.6, 0.3), (0.9, 0.2)];
        let da = 0.1 + 0.18 + 0.18;
        assert_relative_eq!(br4(&pairs, 1).unwrap(), 0.18 / da, epsilon = 1e-15);
        assert!(br4(&[(0.0, 0.5)], 0).is_err());
    }
}
