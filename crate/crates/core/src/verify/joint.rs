//! Kronecker products (KP1–KP5), partial traces (PT1–PT4) and the joint and
//! marginal rules (MJ1–MJ5, plus marginals being densities).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{forall, rel, rel_s, slice_by_loops, Rule, Trial, DEFAULT_TOL};
use crate::density::prob_dyad;
use crate::error::Result;
use crate::odot::odot;
use crate::sample;
use crate::tensor::{joint_prob, joint_slice, kron, marginal, partial_trace, Factor, JointDensity};

pub(super) fn kp_rules() -> Vec<Rule> {
    vec![
        forall("KP1", DEFAULT_TOL, kp1),
        forall("KP2", DEFAULT_TOL, kp2),
        forall("KP3", DEFAULT_TOL, kp3),
        forall("KP4", DEFAULT_TOL, kp4),
        forall("KP5", DEFAULT_TOL, kp5),
    ]
}

pub(super) fn pt_rules() -> Vec<Rule> {
    vec![
        forall("PT1", DEFAULT_TOL, pt1),
        forall("PT2", DEFAULT_TOL, pt2),
        forall("PT3", DEFAULT_TOL, pt3),
        forall("PT4", DEFAULT_TOL, pt4),
    ]
}

pub(super) fn mj_rules() -> Vec<Rule> {
    vec![
        forall("MJ1", 1e-9, mj1),
        forall("MJ2", DEFAULT_TOL, mj2),
        forall("MJ3", DEFAULT_TOL, mj3),
        forall("MJ4", DEFAULT_TOL, mj4),
        forall("MJ5", 1e-10, mj5),
        forall("PT-DENSITY", 1e-9, partial_traces_are_densities),
    ]
}

fn gaussian(t: &mut Trial, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| t.rng.sample(StandardNormal))
}

fn square(t: &mut Trial, n: usize) -> DMatrix<f64> {
    gaussian(t, n, n)
}

fn kp1(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let (e, f) = (gaussian(t, na, nb), gaussian(t, nb, na));
    Ok(rel(&kron(&e, &f).transpose(), &kron(&e.transpose(), &f.transpose())))
}

fn kp2(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let (e, g) = (gaussian(t, na, nb), gaussian(t, nb, na));
    let (f, h) = (gaussian(t, nb, na), gaussian(t, na, nb));
    Ok(rel(&(kron(&e, &f) * kron(&g, &h)), &kron(&(&e * &g), &(&f * &h))))
}

fn kp3(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let (e, f) = (square(t, na), square(t, nb));
    Ok(rel_s(kron(&e, &f).trace(), e.trace() * f.trace()))
}

fn kp4(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let s = sample::symmetric(&mut t.rng, na, 2.0).into_matrix();
    let r = sample::symmetric(&mut t.rng, nb, 2.0).into_matrix();
    let (es, er) = (SymmetricEigen::new(s.clone()), SymmetricEigen::new(r.clone()));
    let st = kron(&s, &r);
    let mut want = Vec::new();
    let mut residual = 0.0f64;
    for i in 0..na {
        for j in 0..nb {
            let lambda = es.eigenvalues[i] * er.eigenvalues[j];
            want.push(lambda);
            let v = es.eigenvectors.column(i).kronecker(&er.eigenvectors.column(j));
            residual = residual.max((&st * &v - v * lambda).norm());
        }
    }
    let mut got: Vec<f64> = SymmetricEigen::new(st).eigenvalues.iter().copied().collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let spectrum = got.iter().zip(&want).map(|(g, w)| rel_s(*g, *w)).fold(0.0, f64::max);
    Ok(spectrum.max(residual))
}

fn kp5(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let a = sample::psd_full(&mut t.rng, na);
    let c = sample::psd_full(&mut t.rng, na);
    let b = sample::psd_full(&mut t.rng, nb);
    let d = sample::psd_full(&mut t.rng, nb);
    let lhs = odot(&psd(kron(a.matrix(), b.matrix()))?, &psd(kron(c.matrix(), d.matrix()))?)?;
    let rhs = kron(odot(&a, &c)?.matrix(), odot(&b, &d)?.matrix());
    Ok(rel(lhs.matrix(), &rhs))
}

fn psd(m: DMatrix<f64>) -> Result<crate::symlin::PsdMatrix> {
    crate::symlin::PsdMatrix::new(crate::symlin::SymmetricMatrix::symmetrize(m))
}

fn pt1(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let (e, f) = (square(t, na), square(t, nb));
    let g = kron(&e, &f);
    let ea = rel(&partial_trace(&g, (na, nb), Factor::A)?, &(&f * e.trace()));
    let eb = rel(&partial_trace(&g, (na, nb), Factor::B)?, &(&e * f.trace()));
    Ok(ea.max(eb))
}

fn pt2(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let g = square(t, na * nb);
    let ea = rel_s(partial_trace(&g, (na, nb), Factor::A)?.trace(), g.trace());
    let eb = rel_s(partial_trace(&g, (na, nb), Factor::B)?.trace(), g.trace());
    Ok(ea.max(eb))
}

fn pt3(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let g = square(t, na * nb);
    let f = square(t, nb);
    let lifted = kron(&DMatrix::identity(na, na), &f);
    let ta = partial_trace(&g, (na, nb), Factor::A)?;
    let right = rel(&partial_trace(&(&g * &lifted), (na, nb), Factor::A)?, &(&ta * &f));
    let left = rel(&partial_trace(&(&lifted * &g), (na, nb), Factor::A)?, &(&f * &ta));
    Ok(right.max(left))
}

fn pt4(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let g = square(t, na * nb);
    let (e, f) = (square(t, na), square(t, nb));
    let lhs = (&g * kron(&e, &f)).trace();
    let inner = partial_trace(&(&g * kron(&DMatrix::identity(na, na), &f)), (na, nb), Factor::B)?;
    Ok(rel_s((inner * e).trace(), lhs))
}

fn joint(t: &mut Trial) -> JointDensity {
    let (na, nb) = t.joint_dims();
    sample::generic_joint(&mut t.rng, na, nb)
}

fn mj1(t: &mut Trial) -> Result<f64> {
    let w = sample::density(&mut t.rng, t.n);
    let basis = sample::basis(&mut t.rng, t.n);
    let mut total = 0.0;
    let mut outside = 0.0f64;
    for u in basis.iter() {
        let p = prob_dyad(&w, &u)?;
        outside = outside.max((-p).max(p - 1.0).max(0.0));
        total += p;
    }
    Ok((total - 1.0).abs().max(outside))
}

fn mj2(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let (na, nb) = j.dims();
    let a = sample::unit_vector(&mut t.rng, na);
    let b = sample::unit_vector(&mut t.rng, nb);
    let (ba, bb) = (sample::basis(&mut t.rng, na), sample::basis(&mut t.rng, nb));
    let da: f64 = bb.iter().map(|b| joint_prob(&j, &a, &b)).sum::<Result<f64>>()?;
    let db: f64 = ba.iter().map(|a| joint_prob(&j, &a, &b)).sum::<Result<f64>>()?;
    let ea = rel_s(marginal(&j, Factor::A).psd().as_symmetric().quadratic_form(&a)?, da);
    let eb = rel_s(marginal(&j, Factor::B).psd().as_symmetric().quadratic_form(&b)?, db);
    Ok(ea.max(eb))
}

fn mj3(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let (na, nb) = j.dims();
    let a = sample::unit_vector(&mut t.rng, na);
    let b = sample::unit_vector(&mut t.rng, nb);
    let p = joint_prob(&j, &a, &b)?;
    let explicit = (j.matrix() * kron(&a.outer(), &b.outer())).trace();
    Ok(rel_s(p, explicit).max(rel_s(p, prob_dyad(j.density(), &a.kron(&b))?)))
}

fn mj4(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let b = sample::unit_vector(&mut t.rng, j.dims().1);
    let slice = joint_slice(&j, &b)?;
    let e1 = rel(slice.matrix(), &slice_by_loops(j.matrix(), j.dims(), b.as_slice()));
    let db = marginal(&j, Factor::B).psd().as_symmetric().quadratic_form(&b)?;
    Ok(e1.max(rel_s(slice.trace(), db)))
}

fn mj5(t: &mut Trial) -> Result<f64> {
    let j = joint(t);
    let (na, nb) = j.dims();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a = sample::unit_vector(&mut t.rng, na);
        let b = sample::unit_vector(&mut t.rng, nb);
        let lhs = joint_slice(&j, &b)?.as_symmetric().quadratic_form(&a)?;
        worst = worst.max(rel_s(lhs, joint_prob(&j, &a, &b)?));
    }
    Ok(worst)
}

fn partial_traces_are_densities(t: &mut Trial) -> Result<f64> {
    let (na, nb) = t.joint_dims();
    let rank = t.rng.random_range(1..=na * nb);
    let j = JointDensity::new(sample::density_of_rank(&mut t.rng, na * nb, rank), (na, nb))?;
    let mut worst = 0.0f64;
    for side in [Factor::A, Factor::B] {
        let m = partial_trace(j.matrix(), j.dims(), side)?;
        let asym = (&m - m.transpose()).norm();
        let low = SymmetricEigen::new(m.clone()).eigenvalues.min();
        worst = worst.max(asym).max((-low).max(0.0)).max((m.trace() - 1.0).abs());
        let d = marginal(&j, if side == Factor::A { Factor::B } else { Factor::A });
        worst = worst.max((d.psd().trace() - 1.0).abs());
    }
    Ok(worst)
}
