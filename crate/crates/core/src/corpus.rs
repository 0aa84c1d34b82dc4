//! Seeded random generators for operators, states, POVMs and point measures.
//!
//! Random POVMs come from frame scaling: draw states `Q_s` and weights `w_s`,
//! set `S = Σ w_s Q_s`, and rescale by `S^{-1/2}` so the family resolves the
//! identity exactly.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::donaldson::{iterate_to_balance, balanced_povm, PointMeasure, PositiveProduct};
use crate::error::{Error, Result};
use crate::operator::{
    hermitian_eig, projector_onto, vec_norm, CMatrix, DensityOperator, HermitianOperator, C64,
};
use crate::povm::FinitePovm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PovmKind {
    /// Rank-one states.
    Pure,
    /// States of random rank.
    Mixed,
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian_c64(rng)).collect()
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = vec_norm(&v);
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// GUE-like random Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianOperator {
    let g = CMatrix::from_fn(n, |_, _| gaussian_c64(rng));
    HermitianOperator::new(g.hermitian_part()).expect("symmetrized matrix is Hermitian")
}

/// `G G* / tr(G G*)` with `G` an `n x rank` Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DensityOperator {
    let cols: Vec<Vec<C64>> = (0..rank).map(|_| gaussian_vector(rng, n)).collect();
    let mut m = CMatrix::zeros(n);
    for c in &cols {
        m.add_scaled(1.0, &CMatrix::outer(c, c));
    }
    let tr = m.trace().re;
    let op = HermitianOperator::new(m.scale(1.0 / tr).hermitian_part()).expect("Hermitian");
    DensityOperator::new(op).expect("Gram matrices are positive")
}

/// Random positive definite matrix with eigenvalues in `[1/spread, spread]`.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> PositiveProduct {
    let u = random_unitary(rng, n);
    let diag: Vec<f64> = (0..n).map(|_| spread.powf(rng.gen_range(-1.0..1.0))).collect();
    let d = HermitianOperator::from_real_diag(&diag);
    PositiveProduct::new(d.conjugate_by(&u)).expect("conjugate of a positive diagonal")
}

/// Unitary from the eigenvectors of a random Hermitian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let h = random_hermitian(rng, n);
    hermitian_eig(&h).expect("small Hermitian eigenproblem").eigenvectors
}

/// `exp(i ε H)` for Hermitian `H`.
pub fn unitary_exp(h: &HermitianOperator, eps: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let n = h.dim();
    let mut u = CMatrix::zeros(n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvector(k);
        let phase = C64::from_polar(1.0, eps * lambda);
        u = &u + &CMatrix::outer(&v, &v).scale_complex(phase);
    }
    Ok(u)
}

/// Random POVM with `n_points` points in dimension `n` (requires `n_points >= n`).
pub fn random_povm<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    n_points: usize,
    kind: PovmKind,
) -> Result<FinitePovm> {
    if n == 0 || n_points < n {
        return Err(Error::InvalidArgument(format!(
            "need at least {n} points in dimension {n}, got {n_points}"
        )));
    }
    loop {
        let raw: Vec<DensityOperator> = (0..n_points)
            .map(|_| match kind {
                PovmKind::Pure => projector_onto(&gaussian_vector(rng, n)).expect("nonzero"),
                PovmKind::Mixed => {
                    let rank = rng.gen_range(1..=n);
                    random_density(rng, n, rank)
                }
            })
            .collect();
        let w: Vec<f64> = (0..n_points).map(|_| rng.gen_range(0.2..1.0)).collect();
        let mut s = HermitianOperator::zeros(n);
        for (q, &wi) in raw.iter().zip(&w) {
            s.add_scaled(wi, q.operator());
        }
        let eig = hermitian_eig(&s)?;
        if eig.eigenvalues[0] < 1e-3 * eig.eigenvalues[n - 1] {
            continue;
        }
        let s_inv_half = s.apply_spectral(|x| x.powf(-0.5))?;
        let mut states = Vec::with_capacity(n_points);
        let mut weights = Vec::with_capacity(n_points);
        for (q, &wi) in raw.iter().zip(&w) {
            let r = q.operator().conjugate_by(s_inv_half.matrix());
            let tr = r.trace();
            weights.push(wi * tr / n as f64);
            let f = r.scale(1.0 / tr);
            states.push(match kind {
                // Rank one stays rank one; rebuild from the vector to keep it exact.
                PovmKind::Pure => {
                    let eig = hermitian_eig(&f)?;
                    projector_onto(&eig.eigenvector(n - 1))?
                }
                PovmKind::Mixed => DensityOperator::new(f)?,
            });
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        return FinitePovm::new(FinitePovm::default_labels(n_points), states, weights);
    }
}

/// Gaussian points with masses drawn from `[0.5, 1.5]`.
pub fn random_point_measure<R: Rng + ?Sized>(rng: &mut R, n: usize, n_points: usize) -> PointMeasure {
    let points = (0..n_points).map(|_| gaussian_vector(rng, n)).collect();
    let masses = (0..n_points).map(|_| rng.gen_range(0.5..1.5)).collect();
    PointMeasure::new(n, points, masses).expect("Gaussian points are nonzero")
}

/// Pure POVM with uniform weights, obtained by balancing `points` with equal masses.
pub fn balanced_uniform_povm(n: usize, points: Vec<Vec<C64>>) -> Result<FinitePovm> {
    let masses = vec![1.0; points.len()];
    let nu = PointMeasure::new(n, points, masses)?;
    let trace = iterate_to_balance(&nu, &PositiveProduct::identity(n), 1e-13, 20_000)?;
    if !trace.converged {
        return Err(Error::NoConvergence {
            iterations: trace.step_distances.len(),
            residual: trace.step_distances.last().copied().unwrap_or(f64::NAN),
        });
    }
    balanced_povm(&nu, trace.limit())
}

/// A uniform-weight pure POVM and a perturbation of it with the same weights:
/// the generating points are moved by relative size `eps` and rebalanced.
pub fn perturbed_pair<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    n_points: usize,
    eps: f64,
) -> Result<(FinitePovm, FinitePovm)> {
    let points: Vec<Vec<C64>> = (0..n_points).map(|_| random_unit_vector(rng, n)).collect();
    let moved: Vec<Vec<C64>> = points
        .iter()
        .map(|z| {
            let d = gaussian_vector(rng, n);
            z.iter().zip(&d).map(|(a, b)| a + b * eps).collect()
        })
        .collect();
    Ok((
        balanced_uniform_povm(n, points)?,
        balanced_uniform_povm(n, moved)?,
    ))
}
