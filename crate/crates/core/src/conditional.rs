//! Conditional density matrices, their marginalization rules, and the
//! fixed-point recovery of a marginal from a conditional.
#![allow(non_snake_case)]

use nalgebra::DMatrix;

use crate::density::{remote_pinch, trace_of_product, DensityMatrix};
use crate::error::{check_dim, Error, Result};
use crate::odot::odot;
use crate::symlin::{pseudoinverse, tol, PsdMatrix, SymmetricMatrix, UnitVector};
use crate::tensor::{joint_prob, joint_slice, joint_slice_a, kron, marginal, partial_trace, Factor, JointDensity};

/// `n_B − tr D(𝔸|𝔹)` below this counts as decoupled.
pub const DECOUPLED_GAP: f64 = 1e-6;
/// Slack on the trace bound `tr D(𝔸|𝔹) ≤ n_B`.
pub const TRACE_BOUND_SLACK: f64 = 1e-9;
pub const EM_TOL: f64 = 1e-9;
pub const EM_MAX_ITER: usize = 10_000;

/// Which conditional a [`ConditionalMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionalKind {
    /// D(𝔸|𝔹), over the joint space.
    AGivenB,
    /// D(𝔹|𝔸), over the joint space in `A ⊗ B` layout.
    BGivenA,
    /// D(𝔸|b), a density over 𝔸.
    AGivenDyad,
    /// D(a|𝔹), a PSD matrix over 𝔹.
    DyadGivenB,
}

impl ConditionalKind {
    pub fn rule(self) -> &'static str {
        match self {
            ConditionalKind::AGivenB | ConditionalKind::BGivenA => "CP1",
            ConditionalKind::AGivenDyad => "CP2",
            ConditionalKind::DyadGivenB => "CP3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    psd: PsdMatrix,
    dims: (usize, usize),
    kind: ConditionalKind,
}

impl ConditionalMatrix {
    pub fn new(psd: PsdMatrix, dims: (usize, usize), kind: ConditionalKind) -> Result<Self> {
        let (na, nb) = dims;
        let tr = psd.trace();
        match kind {
            ConditionalKind::AGivenB | ConditionalKind::BGivenA => {
                check_dim(na * nb, psd.dim())?;
                let bound = if kind == ConditionalKind::AGivenB { nb } else { na } as f64;
                if tr > bound + TRACE_BOUND_SLACK {
                    return Err(Error::invalid(format!("conditional trace {tr} exceeds {bound}")));
                }
            }
            ConditionalKind::AGivenDyad => {
                check_dim(na, psd.dim())?;
                DensityMatrix::new(psd.clone())?;
            }
            ConditionalKind::DyadGivenB => check_dim(nb, psd.dim())?,
        }
        Ok(Self { psd, dims, kind })
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.psd
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.psd.matrix()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn kind(&self) -> ConditionalKind {
        self.kind
    }

    pub fn trace(&self) -> f64 {
        self.psd.trace()
    }
}

fn psd_of(m: DMatrix<f64>) -> Result<PsdMatrix> {
    PsdMatrix::new(SymmetricMatrix::symmetrize(m))
}

fn inverse_for(rule: &'static str, m: &PsdMatrix) -> Result<PsdMatrix> {
    if !m.is_full_rank() {
        return Err(Error::ConditioningOnNull {
            rule,
            probability: m.eigvals()[m.dim() - 1],
        });
    }
    Ok(pseudoinverse(m))
}

fn nonnull(rule: &'static str, p: f64) -> Result<f64> {
    if p <= tol::PROB {
        Err(Error::ConditioningOnNull { rule, probability: p })
    } else {
        Ok(p)
    }
}

fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// D(𝔸|𝔹) = J ⊙ (I_A ⊗ D(𝔹))⁻¹
pub fn cond_full(j: &JointDensity) -> Result<ConditionalMatrix> {
    let (na, _) = j.dims();
    let inv = inverse_for("CP1", marginal(j, Factor::B).psd())?;
    let lifted = psd_of(kron(&identity(na), inv.matrix()))?;
    ConditionalMatrix::new(odot(j.psd(), &lifted)?, j.dims(), ConditionalKind::AGivenB)
}

/// D(𝔹|𝔸) = J ⊙ (D(𝔸) ⊗ I_B)⁻¹, kept in `A ⊗ B` layout.
pub fn cond_full_reverse(j: &JointDensity) -> Result<ConditionalMatrix> {
    let (_, nb) = j.dims();
    let inv = inverse_for("CP1", marginal(j, Factor::A).psd())?;
    let lifted = psd_of(kron(inv.matrix(), &identity(nb)))?;
    ConditionalMatrix::new(odot(j.psd(), &lifted)?, j.dims(), ConditionalKind::BGivenA)
}

/// D(𝔸|b) = D(𝔸,b) / D(b)
pub fn cond_A_given_b(j: &JointDensity, b: &UnitVector) -> Result<DensityMatrix> {
    let slice = joint_slice(j, b)?;
    let db = nonnull("CP2", slice.trace())?;
    DensityMatrix::new(slice.scaled(1.0 / db)?)
}

/// D(𝔹|a) = D(a,𝔹) / D(a)
pub fn cond_B_given_a(j: &JointDensity, a: &UnitVector) -> Result<DensityMatrix> {
    let slice = joint_slice_a(j, a)?;
    let da = nonnull("CP2", slice.trace())?;
    DensityMatrix::new(slice.scaled(1.0 / da)?)
}

/// D(a|𝔹) = D(a,𝔹) ⊙ D(𝔹)⁻¹
pub fn cond_a_given_B(j: &JointDensity, a: &UnitVector) -> Result<PsdMatrix> {
    let inv = inverse_for("CP3", marginal(j, Factor::B).psd())?;
    odot(&joint_slice_a(j, a)?, &inv)
}

/// D(b|𝔸) = D(𝔸,b) ⊙ D(𝔸)⁻¹
pub fn cond_b_given_A(j: &JointDensity, b: &UnitVector) -> Result<PsdMatrix> {
    let inv = inverse_for("CP3", marginal(j, Factor::A).psd())?;
    odot(&joint_slice(j, b)?, &inv)
}

/// D(a|b) = D(a,b) / D(b)
pub fn cond_scalar(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<f64> {
    let db = nonnull("CP4", marginal(j, Factor::B).psd().as_symmetric().quadratic_form(b)?)?;
    Ok(joint_prob(j, a, b)? / db)
}

/// D(b|a) = D(a,b) / D(a)
pub fn cond_scalar_reverse(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<f64> {
    let da = nonnull("CP4", marginal(j, Factor::A).psd().as_symmetric().quadratic_form(a)?)?;
    Ok(joint_prob(j, a, b)? / da)
}

/// The conditionals written as "joint quantity ⊙ inverse normalization",
/// with the normalization computed from `I_A ⊗ D(𝔹)` rather than from the
/// marginal directly.
pub mod unified {
    use super::*;

    fn lifted_marginal(j: &JointDensity) -> DMatrix<f64> {
        kron(&identity(j.dims().0), marginal(j, Factor::B).matrix())
    }

    /// tr_B(J (I⊗bbᵀ)) ⊙ tr_B((I⊗D(𝔹))(I⊗bbᵀ))⁻¹
    pub fn cond_A_given_b(j: &JointDensity, b: &UnitVector) -> Result<PsdMatrix> {
        check_dim(j.dims().1, b.dim())?;
        let event = kron(&identity(j.dims().0), &b.outer());
        let num = psd_of(partial_trace(&(j.matrix() * &event), j.dims(), Factor::B)?)?;
        let norm = psd_of(partial_trace(&(lifted_marginal(j) * event), j.dims(), Factor::B)?)?;
        odot(&num, &inverse_for("CP'2", &norm)?)
    }

    /// tr_A(J (aaᵀ⊗I)) ⊙ tr_A((I⊗D(𝔹))(aaᵀ⊗I))⁻¹
    pub fn cond_a_given_B(j: &JointDensity, a: &UnitVector) -> Result<PsdMatrix> {
        check_dim(j.dims().0, a.dim())?;
        let event = kron(&a.outer(), &identity(j.dims().1));
        let num = psd_of(partial_trace(&(j.matrix() * &event), j.dims(), Factor::A)?)?;
        let norm = psd_of(partial_trace(&(lifted_marginal(j) * event), j.dims(), Factor::A)?)?;
        odot(&num, &inverse_for("CP'3", &norm)?)
    }

    /// tr(J (aaᵀ⊗bbᵀ)) · tr((I⊗D(𝔹))(aaᵀ⊗bbᵀ))⁻¹
    pub fn cond_scalar(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<f64> {
        check_dim(j.dims().0, a.dim())?;
        check_dim(j.dims().1, b.dim())?;
        let event = kron(&a.outer(), &b.outer());
        let num = trace_of_product(j.matrix(), &event);
        let norm = nonnull("CP'4", trace_of_product(&lifted_marginal(j), &event))?;
        Ok(num / norm)
    }
}

/// Marginalization rules recovering the smaller conditionals from
/// D(𝔸|𝔹) and D(𝔹).
pub mod marginalize {
    use super::*;

    fn require(c: &ConditionalMatrix, kind: ConditionalKind) -> Result<()> {
        if c.kind() != kind {
            return Err(Error::invalid(format!("expected a {kind:?} conditional, got {:?}", c.kind())));
        }
        Ok(())
    }

    /// D(𝔸|𝔹) ⊙ (I ⊗ D(𝔹)), which is the joint.
    fn rejoin(c: &ConditionalMatrix, db: &DensityMatrix) -> Result<PsdMatrix> {
        require(c, ConditionalKind::AGivenB)?;
        let (na, nb) = c.dims();
        check_dim(nb, db.dim())?;
        odot(c.psd(), &psd_of(kron(&identity(na), db.matrix()))?)
    }

    /// D(a|b) = tr((D(𝔸|𝔹) ⊙ (I⊗D(𝔹))) (aaᵀ⊗bbᵀ)) / tr(D(𝔹) bbᵀ)
    pub fn mc1(c: &ConditionalMatrix, db: &DensityMatrix, a: &UnitVector, b: &UnitVector) -> Result<f64> {
        let joint = rejoin(c, db)?;
        check_dim(c.dims().0, a.dim())?;
        let num = joint.as_symmetric().quadratic_form(&a.kron(b))?;
        let den = nonnull("MC1", db.psd().as_symmetric().quadratic_form(b)?)?;
        Ok(num / den)
    }

    /// D(𝔸|b) = tr_B((D(𝔸|𝔹) ⊙ (I⊗D(𝔹))) (I⊗bbᵀ)) / tr(D(𝔹) bbᵀ)
    pub fn mc2(c: &ConditionalMatrix, db: &DensityMatrix, b: &UnitVector) -> Result<DensityMatrix> {
        let joint = rejoin(c, db)?;
        check_dim(c.dims().1, b.dim())?;
        let event = kron(&identity(c.dims().0), &b.outer());
        let num = psd_of(partial_trace(&(joint.matrix() * event), c.dims(), Factor::B)?)?;
        let den = nonnull("MC2", db.psd().as_symmetric().quadratic_form(b)?)?;
        DensityMatrix::new(num.scaled(1.0 / den)?)
    }

    /// D(a|𝔹) = tr_A((D(𝔸|𝔹) ⊙ (I⊗D(𝔹))) (aaᵀ⊗I)) ⊙ D(𝔹)⁻¹
    pub fn mc3(c: &ConditionalMatrix, db: &DensityMatrix, a: &UnitVector) -> Result<PsdMatrix> {
        let joint = rejoin(c, db)?;
        check_dim(c.dims().0, a.dim())?;
        let event = kron(&a.outer(), &identity(c.dims().1));
        let num = psd_of(partial_trace(&(joint.matrix() * event), c.dims(), Factor::A)?)?;
        odot(&num, &inverse_for("MC3", db.psd())?)
    }

    /// D(a|b) = tr(D(𝔸|b) aaᵀ)
    pub fn mc4(a_given_b: &DensityMatrix, a: &UnitVector) -> Result<f64> {
        a_given_b.psd().as_symmetric().quadratic_form(a)
    }

    /// D(a|b) = tr((D(a|𝔹) ⊙ D(𝔹)) bbᵀ) / tr(D(𝔹) bbᵀ)
    pub fn mc5(a_given_B: &PsdMatrix, db: &DensityMatrix, b: &UnitVector) -> Result<f64> {
        let num = odot(a_given_B, db.psd())?.as_symmetric().quadratic_form(b)?;
        let den = nonnull("MC5", db.psd().as_symmetric().quadratic_form(b)?)?;
        Ok(num / den)
    }
}

/// `n_B − tr D(𝔸|𝔹)`: zero exactly for decoupled joints, positive otherwise.
pub fn decoupling_gap(j: &JointDensity) -> Result<f64> {
    Ok(j.dims().1 as f64 - cond_full(j)?.trace())
}

pub fn is_decoupled(j: &JointDensity) -> Result<bool> {
    Ok(decoupling_gap(j)? < DECOUPLED_GAP)
}

/// Both sides of `tr(D(𝔸|𝔹) ⊙ (aaᵀ⊗bbᵀ)) = tr(J ⊙ (aaᵀ⊗bbᵀ)) / tr(D(𝔹) ⊙ bbᵀ)`.
pub fn odot_conditional_identity(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<(f64, f64)> {
    check_dim(j.dims().0, a.dim())?;
    check_dim(j.dims().1, b.dim())?;
    let ab = a.kron(b);
    let lhs = remote_pinch(cond_full(j)?.psd(), &ab)?;
    let den = nonnull("CP1", remote_pinch(marginal(j, Factor::B).psd(), b)?)?;
    Ok((lhs, remote_pinch(j.psd(), &ab)? / den))
}

/// Result of [`em_recover_marginal`].
#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub marginal: DensityMatrix,
    pub iterations: usize,
    /// ‖W_{t+1} − W_t‖_F of every step, in order.
    pub steps: Vec<f64>,
    /// ‖D(𝔸|𝔹) of the rebuilt joint − C‖_F / ‖C‖_F.
    pub reconstruction_error: f64,
}

/// Recovers D(𝔹) from C = D(𝔸|𝔹) by iterating
/// `W ← tr_A(C ⊙ (I⊗W)) / tr(C ⊙ (I⊗W))` from `W = I/n_B`.
pub fn em_recover_marginal(c: &ConditionalMatrix, max_iter: usize, tol: f64) -> Result<EmOutcome> {
    if c.kind() != ConditionalKind::AGivenB {
        return Err(Error::invalid("marginal recovery needs a D(A|B) conditional"));
    }
    let (na, nb) = c.dims();
    if c.trace() >= nb as f64 - DECOUPLED_GAP {
        return Err(Error::invalid(format!(
            "conditional is decoupled (trace {} vs {nb}); the marginal is not identifiable",
            c.trace()
        )));
    }
    let rejoin = |w: &DensityMatrix| -> Result<PsdMatrix> { odot(c.psd(), &psd_of(kron(&identity(na), w.matrix()))?) };
    let mut w = DensityMatrix::uniform(nb);
    let mut steps = Vec::new();
    for it in 1..=max_iter {
        let joint = rejoin(&w)?;
        let next = psd_of(partial_trace(joint.matrix(), (na, nb), Factor::A)?)?;
        if next.rank() == 0 {
            return Err(Error::NotConverged { rule: "EM", iterations: it, residual: f64::NAN });
        }
        let next = DensityMatrix::normalize(&next)?;
        let step = (next.matrix() - w.matrix()).norm();
        steps.push(step);
        w = next;
        if step <= tol {
            let rebuilt = JointDensity::new(DensityMatrix::normalize(&rejoin(&w)?)?, (na, nb))?;
            let again = cond_full(&rebuilt)?;
            let reconstruction_error = (again.matrix() - c.matrix()).norm() / c.matrix().norm();
            return Ok(EmOutcome { marginal: w, iterations: it, steps, reconstruction_error });
        }
    }
    Err(Error::NotConverged {
        rule: "EM",
        iterations: max_iter,
        residual: steps.last().copied().unwrap_or(f64::NAN),
    })
}

/// D(a|b) read as two measurements: collapse J onto the event `I ⊗ bbᵀ`,
/// then measure `aaᵀ ⊗ I` in the collapsed state.
pub fn two_measurement_conditional(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<f64> {
    let (na, nb) = j.dims();
    check_dim(na, a.dim())?;
    check_dim(nb, b.dim())?;
    let e = kron(&identity(na), &b.outer());
    let db = nonnull("CP4", trace_of_product(j.matrix(), &e))?;
    let collapsed = &e * j.matrix() * &e / db;
    Ok(trace_of_product(&collapsed, &kron(&a.outer(), &identity(nb))))
}
