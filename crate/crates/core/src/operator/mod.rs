//! Complex Hermitian linear algebra: operators, states, eigendecompositions
//! and the Hilbert-Schmidt geometry everything else is measured in.

mod basis;
mod matrix;
mod real;
pub mod symeig;

pub use basis::HermitianBasis;
pub use real::RealMatrix;
pub use matrix::{
    cholesky, cholesky_solve, orthonormal_span, rank_of, vec_inner, vec_norm, CMatrix, C64,
};

use crate::error::{Error, Result};
use symeig::{sym_eig, sym_eigvals};

/// Absolute Hermiticity tolerance, scaled by the largest entry when that exceeds one.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on trace and eigenvalue sign for density operators.
pub const DENSITY_TOL: f64 = 1e-10;
/// Relative gap under which eigenvalues are treated as one cluster.
pub const CLUSTER_REL_TOL: f64 = 1e-8;

/// Self-adjoint `n x n` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Checks Hermiticity; inputs outside tolerance are rejected, never symmetrized.
    pub fn new(m: CMatrix) -> Result<Self> {
        m.check_finite()?;
        let n = m.dim();
        let scale = m.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = HERMITIAN_TOL * scale;
        for i in 0..n {
            if m[(i, i)].im.abs() > tol {
                return Err(Error::NotHermitian {
                    row: i,
                    col: i,
                    defect: 2.0 * m[(i, i)].im.abs(),
                });
            }
            for j in (i + 1)..n {
                let defect = (m[(i, j)] - m[(j, i)].conj()).norm();
                if defect > tol {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        defect,
                    });
                }
            }
        }
        Ok(HermitianOperator { m })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        Self::new(CMatrix::from_rows(rows)?)
    }

    /// For results that are Hermitian by construction; removes rounding asymmetry.
    pub(crate) fn from_computed(m: CMatrix) -> Self {
        let mut h = m.hermitian_part();
        for i in 0..h.dim() {
            h[(i, i)].im = 0.0;
        }
        HermitianOperator { m: h }
    }

    pub fn identity(n: usize) -> Self {
        HermitianOperator {
            m: CMatrix::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianOperator { m: CMatrix::zeros(n) }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        HermitianOperator {
            m: CMatrix::from_real_diag(diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn hs_norm(&self) -> f64 {
        self.m.hs_norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianOperator { m: self.m.scale(c) }
    }

    pub fn add(&self, other: &Self) -> Self {
        HermitianOperator {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianOperator {
            m: &self.m - &other.m,
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        self.m.add_scaled(c, &other.m);
    }

    pub fn square(&self) -> Self {
        Self::from_computed(&self.m * &self.m)
    }

    /// `U self U*` for a unitary (or any) `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_computed(&(u * &self.m) * &u.adjoint())
    }

    /// `f(A) = V f(Λ) V*`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = hermitian_eig(self)?;
        let n = self.dim();
        let mut out = CMatrix::zeros(n);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvector(k);
            out.add_scaled(f(lambda), &CMatrix::outer(&v, &v));
        }
        Ok(Self::from_computed(out))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigvals(self)?.first().copied().unwrap_or(0.0))
    }
}

/// Positive trace-one Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotDensity(format!("trace {tr} differs from 1")));
        }
        let min = op.min_eigenvalue()?;
        if min < -DENSITY_TOL {
            return Err(Error::NotDensity(format!("eigenvalue {min:e} is negative")));
        }
        Ok(DensityOperator { op })
    }

    /// Positivity and trace guaranteed by the caller.
    pub(crate) fn from_trusted(op: HermitianOperator) -> Self {
        DensityOperator { op }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityOperator {
            op: HermitianOperator::identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.op
    }
}

impl AsRef<HermitianOperator> for DensityOperator {
    fn as_ref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as matrix columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(λ) V*`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut out = CMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvector(k);
            out.add_scaled(lambda, &CMatrix::outer(&v, &v));
        }
        out
    }
}

/// Hilbert-Schmidt scalar product `tr(AB)`.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.m.trace_product(&b.m).re)
}

fn real_embedding(a: &HermitianOperator) -> Vec<f64> {
    let n = a.dim();
    let m = 2 * n;
    let mut out = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            out[i * m + j] = z.re;
            out[(i + n) * m + (j + n)] = z.re;
            out[i * m + (j + n)] = -z.im;
            out[(i + n) * m + j] = z.im;
        }
    }
    out
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn hermitian_eigvals(a: &HermitianOperator) -> Result<Vec<f64>> {
    let n = a.dim();
    let doubled = sym_eigvals(&real_embedding(a), 2 * n)?;
    Ok(doubled.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Full eigendecomposition through the real symmetric embedding
/// `A + iB -> [[A, -B], [B, A]]`, whose spectrum is that of `A + iB` doubled.
///
/// Each eigenvalue cluster of the embedding has even size `2k`; its real
/// eigenvectors `[x; y]` map to complex vectors `x + iy` spanning the
/// `k`-dimensional complex eigenspace, which is re-orthonormalized by pivoted
/// Gram-Schmidt.
pub fn hermitian_eig(a: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = a.dim();
    let big = sym_eig(&real_embedding(a), 2 * n)?;
    let scale = big
        .values
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut eigenvalues = Vec::with_capacity(n);
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 1;
        while end < 2 * n && big.values[end] - big.values[end - 1] <= CLUSTER_REL_TOL * scale {
            end += 1;
        }
        let size = end - start;
        if size % 2 != 0 {
            let residual = big.values[end - 1] - big.values[start];
            return Err(Error::NoConvergence {
                iterations: 0,
                residual,
            });
        }
        let k = size / 2;
        let candidates: Vec<Vec<C64>> = big.vectors[start..end]
            .iter()
            .map(|v| (0..n).map(|i| C64::new(v[i], v[i + n])).collect())
            .collect();
        let mut basis = orthonormal_span(&candidates, 1e-6);
        basis.truncate(k);
        if basis.len() != k {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: (k - basis.len()) as f64,
            });
        }
        // Order vectors inside the cluster by Rayleigh quotient.
        let mut with_rq: Vec<(f64, Vec<C64>)> = basis
            .into_iter()
            .map(|v| (vec_inner(&a.m.matvec(&v), &v).re, v))
            .collect();
        with_rq.sort_by(|x, y| x.0.total_cmp(&y.0));
        let pair_values: Vec<f64> = big.values[start..end]
            .chunks(2)
            .map(|p| 0.5 * (p[0] + p[1]))
            .collect();
        for (value, (_, v)) in pair_values.into_iter().zip(with_rq) {
            eigenvalues.push(value);
            columns.push(v);
        }
        start = end;
    }

    let eigenvectors = CMatrix::from_fn(n, |i, j| columns[j][i]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Orthogonal projector `v v* / |v|^2` onto the line through `v`.
pub fn projector_onto(v: &[C64]) -> Result<DensityOperator> {
    let norm = vec_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let u: Vec<C64> = v.iter().map(|z| z / norm).collect();
    let mut m = CMatrix::outer(&u, &u);
    for i in 0..m.dim() {
        m[(i, i)].im = 0.0;
    }
    Ok(DensityOperator::from_trusted(HermitianOperator { m }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, entries: &[f64]) -> HermitianOperator {
        let mut m = CMatrix::zeros(n);
        let mut it = entries.iter().cycle();
        for i in 0..n {
            m[(i, i)] = c(*it.next().unwrap(), 0.0);
            for j in (i + 1)..n {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    /// Cofactor expansion along the first row.
    fn det_cofactor(m: &CMatrix) -> C64 {
        let n = m.dim();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = c(0.0, 0.0);
        for j in 0..n {
            let minor = CMatrix::from_fn(n - 1, |r, s| m[(r + 1, if s < j { s } else { s + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += m[(0, j)] * det_cofactor(&minor) * sign;
        }
        acc
    }

    #[test]
    fn hs_inner_examples() {
        let id = HermitianOperator::identity(4);
        assert!((hs_inner(&id, &id).unwrap() - 4.0).abs() < 1e-15);
        let p = projector_onto(&[c(0.3, 0.1), c(-1.0, 2.0)]).unwrap();
        assert!((hs_inner(p.operator(), p.operator()).unwrap() - 1.0).abs() < 1e-14);
        let px = projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let py = projector_onto(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        assert!((hs_inner(px.operator(), py.operator()).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            hs_inner(&id, &HermitianOperator::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_diagonal_and_pauli() {
        let d = HermitianOperator::from_real_diag(&[3.0, 1.0, 2.0]);
        let eig = hermitian_eig(&d).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let x = HermitianOperator::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        let eig = hermitian_eig(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_degenerate_complex() {
        // Pauli-Y ⊕ Pauli-Y has eigenvalues ±1, each twice, with complex eigenvectors.
        let mut m = CMatrix::zeros(4);
        for b in [0, 2] {
            m[(b, b + 1)] = c(0.0, -1.0);
            m[(b + 1, b)] = c(0.0, 1.0);
        }
        let h = HermitianOperator::new(m).unwrap();
        let eig = hermitian_eig(&h).unwrap();
        assert!(eig.reconstruct().max_abs_diff(h.matrix()) < 1e-13);
        let v = &eig.eigenvectors;
        assert!((&v.adjoint() * v).max_abs_diff(&CMatrix::identity(4)) < 1e-13);
    }

    #[test]
    fn projector_examples() {
        let p = projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(p.operator(), &HermitianOperator::from_real_diag(&[1.0, 0.0]));
        let p = projector_onto(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.operator().get(i, j) - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
        assert!(matches!(projector_onto(&[c(0.0, 0.0); 3]), Err(Error::ZeroVector)));
    }

    #[test]
    fn rejects_non_hermitian_without_symmetrizing() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0 + 1e-9, 0.0), c(1.0, 0.0)]])
            .unwrap();
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        let m = CMatrix::from_rows(&[vec![c(1.0, 1e-6)]]).unwrap();
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn density_checks() {
        assert!(DensityOperator::new(HermitianOperator::from_real_diag(&[0.5, 0.5])).is_ok());
        assert!(DensityOperator::new(HermitianOperator::from_real_diag(&[0.6, 0.6])).is_err());
        assert!(DensityOperator::new(HermitianOperator::from_real_diag(&[1.5, -0.5])).is_err());
    }

    proptest! {
        #[test]
        fn eig_reconstructs(n in 1usize..6, entries in proptest::collection::vec(-3.0f64..3.0, 40)) {
            let h = random_hermitian(n, &entries);
            let eig = hermitian_eig(&h).unwrap();
            let norm = h.hs_norm().max(1.0);
            prop_assert!(eig.reconstruct().max_abs_diff(h.matrix()) <= 1e-9 * norm);
            let v = &eig.eigenvectors;
            prop_assert!((&v.adjoint() * v).max_abs_diff(&CMatrix::identity(n)) <= 1e-10);
            for k in 0..n {
                let vk = eig.eigenvector(k);
                let av = h.matrix().matvec(&vk);
                let res: f64 = av.iter().zip(&vk).map(|(a, b)| (a - b * eig.eigenvalues[k]).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(res <= 1e-9 * norm);
            }
            let sum: f64 = eig.eigenvalues.iter().sum();
            prop_assert!((sum - h.trace()).abs() <= 1e-9 * norm);
            prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            if n <= 4 {
                let prod: f64 = eig.eigenvalues.iter().product();
                let det = det_cofactor(h.matrix());
                prop_assert!((prod - det.re).abs() <= 1e-9 * norm.powi(n as i32));
            }
        }

        #[test]
        fn hs_inner_symmetric_and_positive(n in 1usize..5, e1 in proptest::collection::vec(-2.0f64..2.0, 30), e2 in proptest::collection::vec(-2.0f64..2.0, 30)) {
            let a = random_hermitian(n, &e1);
            let b = random_hermitian(n, &e2);
            let ab = hs_inner(&a, &b).unwrap();
            let ba = hs_inner(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            let aa = hs_inner(&a, &a).unwrap();
            prop_assert!(aa >= 0.0);
            prop_assert!((aa - a.hs_norm().powi(2)).abs() < 1e-10);
        }

        #[test]
        fn projector_scale_and_phase_invariant(
            v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5),
            scale in 0.1f64..10.0,
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            let v: Vec<C64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
            prop_assume!(vec_norm(&v) > 1e-3);
            let p = projector_onto(&v).unwrap();
            let w: Vec<C64> = v.iter().map(|z| z * C64::from_polar(scale, phase)).collect();
            let q = projector_onto(&w).unwrap();
            prop_assert!(p.operator().matrix().max_abs_diff(q.operator().matrix()) < 1e-12);
            let sq = p.operator().square();
            prop_assert!(sq.matrix().max_abs_diff(p.operator().matrix()) < 1e-12);
            prop_assert!((p.operator().trace() - 1.0).abs() < 1e-12);
        }
    }
}
