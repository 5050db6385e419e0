//! Total probability (TP1–TP3), Bayes rule round trips (BR1–BR4), and the
//! Bayes-side identities and bounds.
#![allow(non_snake_case)]

use rand::Rng;

use super::{excess, forall, rel, rel_s, Rule, Trial, DEFAULT_TOL};
use crate::bayes::{
    bayes_flow, bayes_flow_derivative, bayes_objective, br1, br2, br3, br4, br4_pairs, chain_update,
    conventional_bayes, conventional_objective, expected_variance_bounds, generalized_bayes, map_bound,
    max_likelihood_bound, optimal_pinching_basis, pinched_bayes_check, tp1, tp2, tp2_trace, tp3, BayesProblem,
};
use crate::conditional::{cond_B_given_a, cond_a_given_B, cond_full, cond_full_reverse, cond_scalar_reverse};
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::sample;
use crate::symlin::{logm, PsdMatrix};
use crate::tensor::{marginal, Factor, JointDensity};

pub(super) fn tp_rules() -> Vec<Rule> {
    vec![
        forall("TP1", 1e-9, tp1_rule),
        forall("TP2", 1e-9, tp2_rule),
        forall("TP2-TRACE", 1e-9, tp2_trace_rule),
        forall("TP3", DEFAULT_TOL, tp3_rule),
        forall("TP-DIAG", 1e-12, tp_diagonal),
    ]
}

pub(super) fn br_rules() -> Vec<Rule> {
    vec![
        forall("BR1", DEFAULT_TOL, br1_rule),
        forall("BR2", DEFAULT_TOL, br2_rule),
        forall("BR3", DEFAULT_TOL, br3_rule),
        forall("BR4", DEFAULT_TOL, br4_rule),
        forall("BR4-DIAG", 1e-12, br4_diagonal),
    ]
}

pub(super) fn bound_rules() -> Vec<Rule> {
    vec![
        forall("BAYES-DIAG", 1e-12, bayes_diagonal),
        forall("CHAIN", DEFAULT_TOL, chain),
        forall("CHAIN-BOUND", 1e-10, chain_bound),
        forall("EXPVAR", 1e-10, expected_variance),
        forall("MAP", 1e-9, map_chain),
        forall("ML", 1e-10, max_likelihood),
        forall("BAYES-OPT", DEFAULT_TOL, conventional_optimality),
        forall("GBAYES-OPT", DEFAULT_TOL, generalized_optimality),
        forall("PINCH", DEFAULT_TOL, pinch),
        forall("FLOW-ENDPOINT", 1e-10, flow_endpoint),
        forall("FLOW-ODE", 1e-5, flow_ode),
    ]
}

fn joint(t: &mut Trial) -> JointDensity {
    let (na, nb) = t.joint_dims();
    sample::generic_joint(&mut t.rng, na, nb)
}

fn da_of(j: &JointDensity, a: &crate::UnitVector) -> Result<f64> {
    marginal(j, Factor::A).psd().as_symmetric().quadratic_form(a)
}

fn tp1_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let basis = sample::basis(&mut t.rng, j.dims().1);
    Ok(rel_s(tp1(&j, &a, &basis)?, da_of(&j, &a)?))
}

fn tp2_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let basis = sample::basis(&mut t.rng, j.dims().1);
    Ok(rel(tp2(&j, &basis)?.matrix(), marginal(&j, Factor::A).matrix()))
}

fn tp2_trace_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let got = tp2_trace(&cond_a_given_B(&j, &a)?, &marginal(&j, Factor::B))?;
    Ok(rel_s(got, da_of(&j, &a)?))
}

fn tp3_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let got = tp3(&cond_full(&j)?, &marginal(&j, Factor::B))?;
    Ok(rel(got.matrix(), marginal(&j, Factor::A).matrix()))
}

/// Σ_k P(i|k) P(k) over the standard basis of a diagonal joint.
fn tp_diagonal(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let j = sample::diagonal_joint(&mut t.rng, na, nb);
    let p = |i: usize, k: usize| j.matrix()[(i * nb + k, i * nb + k)];
    let basis = crate::OrthonormalBasis::standard(nb);
    let mut worst = 0.0f64;
    for i in 0..na {
        let a = crate::UnitVector::basis(na, i)?;
        let conventional: f64 = (0..nb)
            .map(|k| {
                let pk: f64 = (0..na).map(|r| p(r, k)).sum();
                p(i, k) / pk * pk
            })
            .sum();
        worst = worst.max((tp1(&j, &a, &basis)? - conventional).abs());
    }
    Ok(worst)
}

fn br1_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let got = br1(&cond_full(&j)?, &marginal(&j, Factor::B))?;
    Ok(rel(got.matrix(), cond_full_reverse(&j)?.matrix()))
}

fn br2_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let got = br2(da_of(&j, &a)?, &cond_B_given_a(&j, &a)?, &marginal(&j, Factor::B))?;
    Ok(rel(got.matrix(), cond_a_given_B(&j, &a)?.matrix()))
}

fn br3_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let (got, da) = br3(&marginal(&j, Factor::B), &cond_a_given_B(&j, &a)?)?;
    Ok(rel(got.matrix(), cond_B_given_a(&j, &a)?.matrix()).max(rel_s(da, da_of(&j, &a)?)))
}

fn br4_rule(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let basis = sample::basis(&mut t.rng, j.dims().1);
    let pairs = br4_pairs(&j, &a, &basis)?;
    let mut worst = 0.0f64;
    for (k, b) in basis.iter().enumerate() {
        worst = worst.max(rel_s(br4(&pairs, k)?, cond_scalar_reverse(&j, &a, &b)?));
    }
    Ok(worst)
}

fn br4_diagonal(t: &mut Trial) -> Result<f64> {
    let n = t.n;
    let prior = sample::probability_vector(&mut t.rng, n);
    let lik: Vec<f64> = (0..n).map(|_| t.rng.random_range(0.05..1.0)).collect();
    let pairs: Vec<(f64, f64)> = lik.iter().copied().zip(prior.iter().copied()).collect();
    let (post, _) = conventional_bayes(&prior, &lik)?;
    let mut worst = 0.0f64;
    for (k, p) in post.iter().enumerate() {
        worst = worst.max((br4(&pairs, k)? - p).abs());
    }
    Ok(worst)
}

fn problem(t: &mut Trial) -> Result<BayesProblem> {
    let prior = sample::density(&mut t.rng, t.n);
    let scale = t.rng.random_range(0.2..5.0);
    let lik = sample::psd_full(&mut t.rng, t.n).scaled(scale)?;
    BayesProblem::new(prior, lik)
}

fn bayes_diagonal(t: &mut Trial) -> Result<f64> {
    let n = t.n;
    let prior = sample::probability_vector(&mut t.rng, n);
    let lik: Vec<f64> = (0..n).map(|_| t.rng.random_range(0.05..1.0)).collect();
    let p = BayesProblem::new(DensityMatrix::from_diagonal(&prior)?, PsdMatrix::from_diagonal(&lik)?)?;
    let up = generalized_bayes(&p)?;
    let (post, ev) = conventional_bayes(&prior, &lik)?;
    let mut worst = (up.evidence - ev).abs();
    for (i, q) in post.iter().enumerate() {
        worst = worst.max((up.posterior.matrix()[(i, i)] - q).abs());
    }
    Ok(worst.max(rel(up.posterior.matrix(), &nalgebra::DMatrix::from_diagonal(&up.posterior.matrix().diagonal()))))
}

fn likelihoods(t: &mut Trial) -> Result<Vec<PsdMatrix>> {
    let steps = t.rng.random_range(1..=3);
    (0..steps).map(|_| sample::psd_full(&mut t.rng, t.n).scaled(t.rng.random_range(0.5..2.0))).collect()
}

fn chain(t: &mut Trial) -> Result<f64> {
    let prior = sample::density(&mut t.rng, t.n);
    let ls = likelihoods(t)?;
    let out = chain_update(&prior, &ls)?;
    let identity = (out.total_evidence - out.chained_evidence).abs() / out.chained_evidence;
    let single = generalized_bayes(&BayesProblem::new(prior, ls[0].clone())?)?;
    Ok(identity.max((out.step_evidences[0] - single.evidence).abs() / single.evidence))
}

fn chain_bound(t: &mut Trial) -> Result<f64> {
    let prior = sample::density(&mut t.rng, t.n);
    let ls = likelihoods(t)?;
    let out = chain_update(&prior, &ls)?;
    Ok(excess(out.chained_evidence, out.plain_product_bound))
}

fn expected_variance(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let a = sample::unit_vector(&mut t.rng, j.dims().0);
    let ev = expected_variance_bounds(&cond_a_given_B(&j, &a)?, &marginal(&j, Factor::B))?;
    let forms = (ev.expected_variance - ev.expected_measurement).abs();
    Ok(forms.max(excess(ev.exact, ev.expected_variance)))
}

fn map_chain(t: &mut Trial) -> Result<f64> {
    let p = problem(t)?;
    let extra: Vec<_> = (0..8).map(|_| sample::unit_vector(&mut t.rng, t.n)).collect();
    let b = map_bound(&p, &extra)?;
    Ok(excess(b.neg_log_evidence, b.chain[0])
        .max(excess(b.chain[0], b.chain[1]))
        .max(excess(b.chain[1], b.chain[2])))
}

fn max_likelihood(t: &mut Trial) -> Result<f64> {
    let b = max_likelihood_bound(&problem(t)?)?;
    Ok(excess(b.evidence, b.plain_trace)
        .max(rel_s(b.prior_eigen_mixture, b.plain_trace))
        .max(excess(b.prior_eigen_mixture, b.max_over_prior_eigvecs))
        .max(excess(b.max_over_prior_eigvecs, b.lambda_max)))
}

fn conventional_optimality(t: &mut Trial) -> Result<f64> {
    let n = t.n;
    let prior = sample::probability_vector(&mut t.rng, n);
    let lik: Vec<f64> = (0..n).map(|_| t.rng.random_range(0.05..1.0)).collect();
    let (post, ev) = conventional_bayes(&prior, &lik)?;
    let floor = -ev.ln();
    let mut worst = rel_s(conventional_objective(&post, &prior, &lik)?, floor);
    for _ in 0..3 {
        let gamma = sample::probability_vector(&mut t.rng, n);
        worst = worst.max(excess(floor, conventional_objective(&gamma, &prior, &lik)?));
    }
    Ok(worst)
}

fn generalized_optimality(t: &mut Trial) -> Result<f64> {
    let p = problem(t)?;
    let up = generalized_bayes(&p)?;
    let floor = -up.evidence.ln();
    let mut worst = rel_s(bayes_objective(&up.posterior, &p)?, floor);
    for _ in 0..2 {
        let s = t.rng.random_range(0.01..1.0);
        let other = sample::density(&mut t.rng, t.n);
        let w = DensityMatrix::from_matrix(up.posterior.matrix() * (1.0 - s) + other.matrix() * s)?;
        worst = worst.max(excess(floor, bayes_objective(&w, &p)?));
    }
    Ok(worst)
}

fn pinch(t: &mut Trial) -> Result<f64> {
    let p = problem(t)?;
    let (v, f) = pinched_bayes_check(&p, &optimal_pinching_basis(&p)?)?;
    let basis = sample::basis(&mut t.rng, t.n);
    let (rv, rf) = pinched_bayes_check(&p, &basis)?;
    Ok(rel_s(v, f).max(excess(rf, rv)))
}

fn flow_endpoint(t: &mut Trial) -> Result<f64> {
    let p = problem(t)?;
    let e0 = rel(bayes_flow(&p, 0.0)?.matrix(), p.prior.matrix());
    let e1 = rel(bayes_flow(&p, 1.0)?.matrix(), generalized_bayes(&p)?.posterior.matrix());
    Ok(e0.max(e1))
}

fn flow_ode(t: &mut Trial) -> Result<f64> {
    let p = problem(t)?;
    let h = 1e-4;
    let mut worst = 0.0f64;
    for time in [0.25, 0.5, 0.75] {
        let up = logm(bayes_flow(&p, time + h)?.psd().as_symmetric())?;
        let down = logm(bayes_flow(&p, time - h)?.psd().as_symmetric())?;
        let fd = (up.matrix() - down.matrix()) / (2.0 * h);
        worst = worst.max(rel(&fd, bayes_flow_derivative(&p, time)?.matrix()));
    }
    Ok(worst)
}
