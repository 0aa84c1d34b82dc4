use super::{CMatrix, HermitianOperator, C64};
use std::f64::consts::SQRT_2;

/// Orthonormal basis of the real space of `n x n` Hermitian matrices under `tr(AB)`.
///
/// Order: the `n` diagonal units, then for each `i < j` the symmetric element
/// `(E_ij + E_ji)/√2` followed by the antisymmetric element `i(E_ij - E_ji)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermitianBasis {
    n: usize,
}

impl HermitianBasis {
    pub fn new(n: usize) -> Self {
        HermitianBasis { n }
    }

    /// Real dimension `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
    }

    /// Coordinates `tr(A B_k)`; reads only the upper triangle.
    pub fn coords(&self, a: &CMatrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n {
            out.push(a[(i, i)].re);
        }
        for (i, j) in self.pairs() {
            out.push(SQRT_2 * a[(i, j)].re);
            out.push(SQRT_2 * a[(i, j)].im);
        }
        out
    }

    pub fn from_coords(&self, x: &[f64]) -> HermitianOperator {
        assert_eq!(x.len(), self.len(), "coordinate vector has wrong length");
        let mut m = CMatrix::zeros(self.n);
        for i in 0..self.n {
            m[(i, i)] = C64::new(x[i], 0.0);
        }
        for (k, (i, j)) in self.pairs().enumerate() {
            let z = C64::new(x[self.n + 2 * k], x[self.n + 2 * k + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        HermitianOperator::from_computed(m)
    }

    pub fn element(&self, k: usize) -> HermitianOperator {
        let mut x = vec![0.0; self.len()];
        x[k] = 1.0;
        self.from_coords(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::hs_inner;

    #[test]
    fn basis_is_orthonormal() {
        for n in 1..5 {
            let b = HermitianBasis::new(n);
            for k in 0..b.len() {
                for l in 0..b.len() {
                    let ip = hs_inner(&b.element(k), &b.element(l)).unwrap();
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn coords_round_trip() {
        let b = HermitianBasis::new(3);
        let x: Vec<f64> = (0..9).map(|k| (k as f64 * 0.7).sin()).collect();
        let a = b.from_coords(&x);
        let y = b.coords(a.matrix());
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-15);
        }
        for (k, xk) in x.iter().enumerate() {
            assert!((hs_inner(&a, &b.element(k)).unwrap() - xk).abs() < 1e-14);
        }
    }
}
