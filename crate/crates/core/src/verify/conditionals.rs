//! Conditionals CP1–CP4 and their primed forms, the decoupling checks, the
//! two-measurement reading, and MC1–MC5.
#![allow(non_snake_case)]

use nalgebra::DMatrix;

use super::{exists, forall, odot_oracle, rel, rel_s, slice_a_by_loops, slice_by_loops, Rule, Trial, DEFAULT_TOL};
use crate::conditional::{
    cond_A_given_b, cond_a_given_B, cond_full, cond_scalar, decoupling_gap, marginalize, odot_conditional_identity,
    two_measurement_conditional, unified, DECOUPLED_GAP, TRACE_BOUND_SLACK,
};
use crate::error::Result;
use crate::odot::odot;
use crate::sample;
use crate::symlin::{PsdMatrix, SymmetricMatrix, UnitVector};
use crate::tensor::{kron, marginal, partial_trace, Factor, JointDensity};

pub(super) fn cp_rules() -> Vec<Rule> {
    vec![
        forall("CP1", DEFAULT_TOL, cp1),
        forall("CP2", DEFAULT_TOL, cp2),
        forall("CP3", DEFAULT_TOL, cp3),
        forall("CP4", DEFAULT_TOL, cp4),
        forall("CP'2", DEFAULT_TOL, cp2_primed),
        forall("CP'3", DEFAULT_TOL, cp3_primed),
        forall("CP'4", DEFAULT_TOL, cp4_primed),
        forall("CP-TABLE", 1e-12, cp_table),
        forall("ODOT-ID", 1e-9, odot_identity),
        forall("DECOUPLED-TRACE", DEFAULT_TOL, decoupled_trace),
        forall("COUPLED-GAP", 0.0, coupled_gap),
        forall("DECOUPLED-SLICE", 1e-9, decoupled_slice),
        exists("DECOUPLED-SLICE-NONID", 1e-6, decoupled_slice_non_identity),
        forall("TWO-MEASUREMENT", 1e-10, two_measurement),
    ]
}

pub(super) fn mc_rules() -> Vec<Rule> {
    vec![
        forall("MC1", 1e-9, mc1),
        forall("MC2", DEFAULT_TOL, mc2),
        forall("MC3", DEFAULT_TOL, mc3),
        forall("MC4", 1e-9, mc4),
        forall("MC5", 1e-9, mc5),
    ]
}

struct Setup {
    j: JointDensity,
    a: UnitVector,
    b: UnitVector,
}

fn setup(t: &mut Trial, make: fn(&mut rand_chacha::ChaCha8Rng, usize, usize) -> JointDensity) -> Setup {
    let (na, nb) = t.joint_dims();
    let j = make(&mut t.rng, na, nb);
    let a = sample::unit_vector(&mut t.rng, na);
    let b = sample::unit_vector(&mut t.rng, nb);
    Setup { j, a, b }
}

fn generic(t: &mut Trial) -> Setup {
    setup(t, sample::generic_joint)
}

fn db_of(j: &JointDensity, b: &UnitVector) -> Result<f64> {
    marginal(j, Factor::B).psd().as_symmetric().quadratic_form(b)
}

fn cp1(t: &mut Trial) -> Result<f64> {
    let Setup { j, .. } = generic(t);
    let (na, nb) = j.dims();
    let c = cond_full(&j)?;
    let lifted = PsdMatrix::new(SymmetricMatrix::symmetrize(kron(
        &DMatrix::identity(na, na),
        marginal(&j, Factor::B).matrix(),
    )))?;
    let rejoined = rel(odot(c.psd(), &lifted)?.matrix(), j.matrix());
    Ok(rejoined.max((c.trace() - nb as f64 - TRACE_BOUND_SLACK).max(0.0)))
}

fn cp2(t: &mut Trial) -> Result<f64> {
    let Setup { j, b, .. } = generic(t);
    let want = slice_by_loops(j.matrix(), j.dims(), b.as_slice()) / db_of(&j, &b)?;
    Ok(rel(cond_A_given_b(&j, &b)?.matrix(), &want))
}

fn cp3(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, .. } = generic(t);
    let slice = slice_a_by_loops(j.matrix(), j.dims(), a.as_slice());
    let inv = marginal(&j, Factor::B).matrix().clone().try_inverse().expect("full-rank marginal");
    let want = odot_oracle(&slice, &((&inv + inv.transpose()) / 2.0));
    Ok(rel(cond_a_given_B(&j, &a)?.matrix(), &want))
}

fn cp4(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    let ab = a.kron(&b);
    let num = (ab.as_vector().transpose() * j.matrix() * ab.as_vector())[(0, 0)];
    Ok(rel_s(cond_scalar(&j, &a, &b)?, num / db_of(&j, &b)?))
}

fn cp2_primed(t: &mut Trial) -> Result<f64> {
    let Setup { j, b, .. } = generic(t);
    Ok(rel(unified::cond_A_given_b(&j, &b)?.matrix(), cond_A_given_b(&j, &b)?.matrix()))
}

fn cp3_primed(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, .. } = generic(t);
    Ok(rel(unified::cond_a_given_B(&j, &a)?.matrix(), cond_a_given_B(&j, &a)?.matrix()))
}

fn cp4_primed(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    Ok(rel_s(unified::cond_scalar(&j, &a, &b)?, cond_scalar(&j, &a, &b)?))
}

/// Diagonal joints give the conventional column-stochastic table P(i|k).
fn cp_table(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let j = sample::diagonal_joint(&mut t.rng, na, nb);
    let c = cond_full(&j)?;
    let p = |i: usize, k: usize| j.matrix()[(i * nb + k, i * nb + k)];
    let mut worst = 0.0f64;
    for k in 0..nb {
        let pk: f64 = (0..na).map(|i| p(i, k)).sum();
        let mut column = 0.0;
        for i in 0..na {
            let entry = c.matrix()[(i * nb + k, i * nb + k)];
            worst = worst.max((entry - p(i, k) / pk).abs());
            column += entry;
        }
        worst = worst.max((column - 1.0).abs());
    }
    let off_diagonal = c.matrix() - DMatrix::from_diagonal(&c.matrix().diagonal());
    Ok(worst.max(off_diagonal.norm()))
}

fn odot_identity(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    let (lhs, rhs) = odot_conditional_identity(&j, &a, &b)?;
    Ok(rel_s(lhs, rhs))
}

fn decoupled_trace(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let dec = sample::decoupled_joint(&mut t.rng, na, nb);
    let prod = sample::product_joint(&mut t.rng, na, nb);
    Ok(decoupling_gap(&dec)?.abs().max(decoupling_gap(&prod)?.abs()))
}

/// Zero when the generic joint's gap exceeds the decoupling threshold.
fn coupled_gap(t: &mut Trial) -> Result<f64> {
    let Setup { j, .. } = generic(t);
    Ok((DECOUPLED_GAP - decoupling_gap(&j)?).max(0.0))
}

fn decoupled_slice(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, .. } = setup(t, sample::decoupled_joint);
    let (na, nb) = j.dims();
    let c = cond_full(&j)?;
    let want = partial_trace(&(c.matrix() * kron(&a.outer(), &DMatrix::identity(nb, nb))), (na, nb), Factor::A)?;
    Ok(rel(cond_a_given_B(&j, &a)?.matrix(), &want))
}

/// Decoupled joints where `tr(D(𝔸|𝔹)(aaᵀ⊗bbᵀ))` differs from D(a|b).
fn decoupled_slice_non_identity(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = setup(t, sample::decoupled_joint);
    let c = cond_full(&j)?;
    let plain = (c.matrix() * kron(&a.outer(), &b.outer())).trace();
    Ok((plain - cond_scalar(&j, &a, &b)?).abs())
}

fn two_measurement(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    Ok(rel_s(two_measurement_conditional(&j, &a, &b)?, cond_scalar(&j, &a, &b)?))
}

fn mc1(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    let got = marginalize::mc1(&cond_full(&j)?, &marginal(&j, Factor::B), &a, &b)?;
    Ok(rel_s(got, cond_scalar(&j, &a, &b)?))
}

fn mc2(t: &mut Trial) -> Result<f64> {
    let Setup { j, b, .. } = generic(t);
    let got = marginalize::mc2(&cond_full(&j)?, &marginal(&j, Factor::B), &b)?;
    Ok(rel(got.matrix(), cond_A_given_b(&j, &b)?.matrix()))
}

fn mc3(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, .. } = generic(t);
    let got = marginalize::mc3(&cond_full(&j)?, &marginal(&j, Factor::B), &a)?;
    Ok(rel(got.matrix(), cond_a_given_B(&j, &a)?.matrix()))
}

fn mc4(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    Ok(rel_s(marginalize::mc4(&cond_A_given_b(&j, &b)?, &a)?, cond_scalar(&j, &a, &b)?))
}

fn mc5(t: &mut Trial) -> Result<f64> {
    let Setup { j, a, b } = generic(t);
    let got = marginalize::mc5(&cond_a_given_B(&j, &a)?, &marginal(&j, Factor::B), &b)?;
    Ok(rel_s(got, cond_scalar(&j, &a, &b)?))
}
