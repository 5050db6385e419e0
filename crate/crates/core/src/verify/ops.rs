//! OP1–OP16, the Golden-Thompson inequality and the log-sum bridge.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::{
    excess, exists, forall, intersection_basis, log_plus, odot_oracle, range_basis, rel, rel_s, spectral, Rule,
    Trial, DEFAULT_TOL,
};
use crate::density::remote_pinch;
use crate::error::Result;
use crate::odot::{odot, odot_all};
use crate::sample;
use crate::symlin::{expm, logm, logm_plus, pseudoinverse, PsdMatrix, SymmetricMatrix};

pub(super) fn rules() -> Vec<Rule> {
    vec![
        forall("OP1", DEFAULT_TOL, op1),
        forall("OP2", DEFAULT_TOL, op2),
        forall("OP3", DEFAULT_TOL, op3),
        forall("OP4", DEFAULT_TOL, op4),
        forall("OP5", DEFAULT_TOL, op5),
        forall("OP6", DEFAULT_TOL, op6),
        forall("OP7", DEFAULT_TOL, op7),
        forall("OP8", DEFAULT_TOL, op8),
        forall("OP9", 1e-10, op9),
        forall("OP10", 1e-9, op10),
        exists("OP10-TRIPLE", 1e-6, op10_triple),
        forall("OP11", DEFAULT_TOL, op11),
        forall("OP12", DEFAULT_TOL, op12),
        forall("OP13", 1e-6, op13),
        forall("OP14", DEFAULT_TOL, op14),
        forall("OP15", DEFAULT_TOL, op15),
        forall("OP16", DEFAULT_TOL, op16),
        forall("GT", DEFAULT_TOL, golden_thompson),
        forall("LOG-SUM", DEFAULT_TOL, log_sum),
    ]
}

/// Full rank half the time, otherwise any rank in `0..n`.
fn any_rank(t: &mut Trial) -> PsdMatrix {
    let n = t.n;
    let rank = if t.rng.random_bool(0.5) { n } else { t.rng.random_range(0..n) };
    sample::psd(&mut t.rng, n, rank)
}

fn nonzero(t: &mut Trial) -> PsdMatrix {
    let n = t.n;
    let rank = t.rng.random_range(1..=n);
    sample::psd(&mut t.rng, n, rank)
}

fn full(t: &mut Trial) -> PsdMatrix {
    sample::psd_full(&mut t.rng, t.n)
}

fn psd(m: DMatrix<f64>) -> Result<PsdMatrix> {
    PsdMatrix::new(SymmetricMatrix::symmetrize(m))
}

fn op1(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let c = odot(&a, &b)?;
    let r = intersection_basis(&a.range().projector_matrix(), &b.range().projector_matrix());
    Ok((c.range().projector_matrix() - &r * r.transpose()).norm())
}

fn op2(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let r = range_basis(a.matrix(), &mut t.rng);
    let compressed = if r.ncols() == 0 {
        DMatrix::zeros(t.n, t.n)
    } else {
        &r * spectral(&(r.transpose() * a.matrix() * &r), f64::ln) * r.transpose()
    };
    let e1 = rel(logm_plus(&a).matrix(), &compressed);
    let e2 = rel(odot(&a, &b)?.matrix(), &odot_oracle(a.matrix(), b.matrix()));
    Ok(e1.max(e2))
}

fn op3(t: &mut Trial) -> Result<f64> {
    let n = t.n;
    let q = sample::orthogonal(&mut t.rng, n);
    let diag = |t: &mut Trial| {
        let rank = if t.rng.random_bool(0.5) { n } else { t.rng.random_range(0..n) };
        let mut v = sample::spectrum(&mut t.rng, n, rank);
        // spread the zeros over the shared eigenbasis
        for i in (1..n).rev() {
            v.swap(i, t.rng.random_range(0..=i));
        }
        &q * DMatrix::from_diagonal(&DVector::from_vec(v)) * q.transpose()
    };
    let (a, b) = (diag(t), diag(t));
    let got = odot(&psd(a.clone())?, &psd(b.clone())?)?;
    Ok(rel(got.matrix(), &(a * b)))
}

fn op4(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    Ok(rel(odot(&a, &b)?.matrix(), odot(&b, &a)?.matrix()))
}

fn op5(t: &mut Trial) -> Result<f64> {
    let a = any_rank(t);
    Ok(rel(odot(&a, &PsdMatrix::identity(t.n))?.matrix(), a.matrix()))
}

fn op6(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let c = t.rng.random_range(0.1..10.0);
    let lhs = odot(&a.scaled(c)?, &b)?;
    Ok(rel(lhs.matrix(), &(odot(&a, &b)?.matrix() * c)))
}

fn op7(t: &mut Trial) -> Result<f64> {
    let a = any_rank(t);
    let got = odot(&a, &pseudoinverse(&a))?;
    let r = range_basis(a.matrix(), &mut t.rng);
    Ok(rel(got.matrix(), &(&r * r.transpose())))
}

fn op8(t: &mut Trial) -> Result<f64> {
    let (a, b, c) = (any_rank(t), any_rank(t), any_rank(t));
    let left = odot(&odot(&a, &b)?, &c)?;
    let right = odot(&a, &odot(&b, &c)?)?;
    Ok(rel(left.matrix(), right.matrix()).max(rel(odot_all(&[&a, &b, &c])?.matrix(), right.matrix())))
}

fn mat_pow(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    (1..k).fold(m.clone(), |acc, _| acc * m)
}

fn op9(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let root = |m: &DMatrix<f64>, k: usize| spectral(m, |x| x.max(0.0).powf(1.0 / k as f64));
    let traces: Vec<f64> = (1..=16)
        .map(|k| mat_pow(&(root(a.matrix(), k) * root(b.matrix(), k)), k).trace())
        .collect();
    let scale = traces[0].abs().max(1.0);
    Ok(traces.windows(2).map(|w| (w[1] - w[0]).max(0.0) / scale).fold(0.0, f64::max))
}

fn op10(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let bound = excess(odot(&a, &b)?.trace(), (a.matrix() * b.matrix()).trace());
    let q = sample::orthogonal(&mut t.rng, t.n);
    let mut commuting = || {
        let v = sample::spectrum(&mut t.rng, t.n, t.n);
        psd(&q * DMatrix::from_diagonal(&DVector::from_vec(v)) * q.transpose())
    };
    let (c, d) = (commuting()?, commuting()?);
    let equality = rel_s(odot(&c, &d)?.trace(), (c.matrix() * d.matrix()).trace());
    Ok(bound.max(equality))
}

fn op10_triple(t: &mut Trial) -> Result<f64> {
    let mut spread = || {
        let values = sample::spread_spectrum(&mut t.rng, t.n, sample::GENERIC_SPREAD);
        psd(sample::rotated(&mut t.rng, &values))
    };
    let (a, b, c) = (spread()?, spread()?, spread()?);
    Ok(odot_all(&[&a, &b, &c])?.trace() - (a.matrix() * b.matrix() * c.matrix()).trace())
}

fn op11(t: &mut Trial) -> Result<f64> {
    let a = nonzero(t);
    let u = sample::unit_in(&mut t.rng, a.range())?;
    let got = odot(&a, &PsdMatrix::dyad(&u))?;
    let v = u.as_vector();
    let want = u.outer() * (v.transpose() * log_plus(a.matrix()) * v)[(0, 0)].exp();
    Ok(rel(got.matrix(), &want))
}

fn op12(t: &mut Trial) -> Result<f64> {
    let a = full(t);
    let u = sample::unit_vector(&mut t.rng, t.n);
    let e = SymmetricEigen::new(a.matrix().clone());
    let w: Vec<f64> = e.eigenvectors.column_iter().map(|c| c.dot(u.as_vector()).powi(2)).collect();
    let arith: f64 = w.iter().zip(e.eigenvalues.iter()).map(|(w, l)| w * l).sum();
    let geom: f64 = w.iter().zip(e.eigenvalues.iter()).map(|(w, l)| l.powf(*w)).product();
    let e1 = rel_s(a.as_symmetric().quadratic_form(&u)?, arith);
    let e2 = rel_s(remote_pinch(&a, &u)?, geom);
    Ok(e1.max(e2))
}

fn op13(t: &mut Trial) -> Result<f64> {
    let (a, b) = (full(t), full(t));
    let want = a.matrix().determinant() * b.matrix().determinant();
    Ok((odot(&a, &b)?.matrix().determinant() - want).abs() / want.abs())
}

fn op14(t: &mut Trial) -> Result<f64> {
    let a = full(t);
    let basis = sample::basis(&mut t.rng, t.n);
    let prod: f64 = basis.iter().map(|u| remote_pinch(&a, &u)).product::<Result<f64>>()?;
    let det = a.matrix().determinant();
    Ok((prod - det).abs() / det.abs())
}

fn op15(t: &mut Trial) -> Result<f64> {
    let (a, b) = (any_rank(t), any_rank(t));
    let u = sample::unit_vector(&mut t.rng, t.n);
    let lhs = remote_pinch(&odot(&a, &b)?, &u)?;
    Ok(rel_s(lhs, remote_pinch(&a, &u)? * remote_pinch(&b, &u)?))
}

fn op16(t: &mut Trial) -> Result<f64> {
    let a = nonzero(t);
    let u = sample::unit_in(&mut t.rng, a.range())?;
    Ok(rel_s(remote_pinch(&pseudoinverse(&a), &u)?, 1.0 / remote_pinch(&a, &u)?))
}

fn golden_thompson(t: &mut Trial) -> Result<f64> {
    let s = sample::symmetric(&mut t.rng, t.n, 2.0);
    let r = sample::symmetric(&mut t.rng, t.n, 2.0);
    let lhs = (expm(&s)?.matrix() * expm(&r)?.matrix()).trace();
    let rhs = expm(&s.add(&r)?)?.trace();
    Ok((rhs - lhs).max(0.0) / lhs)
}

fn log_sum(t: &mut Trial) -> Result<f64> {
    let s = sample::symmetric(&mut t.rng, t.n, 2.0);
    let r = sample::symmetric(&mut t.rng, t.n, 2.0);
    let prod = odot(&PsdMatrix::new(expm(&s)?)?, &PsdMatrix::new(expm(&r)?)?)?;
    Ok(rel(logm(prod.as_symmetric())?.matrix(), s.add(&r)?.matrix()))
}
