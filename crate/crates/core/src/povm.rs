//! Finite POVMs `dW = n F dα` and the maps between functions on the index set
//! and operators: quantization `T`, dequantization `T*`, channel `ℰ`, Berezin `ℬ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_eigvals, CMatrix, DensityOperator, HermitianBasis, HermitianOperator,
    RealMatrix,
};

/// Default bound on the resolution-of-identity defect.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-8;
/// Weights must sum to one within this.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Purity and injectivity thresholds.
pub const PURITY_TOL: f64 = 1e-8;

/// A real function on the index set, stored by point position.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ObservableFunction(Vec<f64>);

impl ObservableFunction {
    pub fn new(values: Vec<f64>) -> Self {
        ObservableFunction(values)
    }

    pub fn constant(n_points: usize, c: f64) -> Self {
        ObservableFunction(vec![c; n_points])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ObservableFunction(self.0.iter().map(|&x| f(x)).collect())
    }
}

impl From<Vec<f64>> for ObservableFunction {
    fn from(v: Vec<f64>) -> Self {
        ObservableFunction(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub resolution_defect: f64,
    pub min_state_eigenvalue: f64,
    pub weight_sum: f64,
}

impl ValidationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.resolution_defect <= tol
            && self.min_state_eigenvalue >= -crate::operator::DENSITY_TOL
            && (self.weight_sum - 1.0).abs() <= WEIGHT_SUM_TOL
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PurityReport {
    pub is_pure: bool,
    /// Largest second eigenvalue among the states.
    pub max_rank_excess: f64,
    /// Distinct points carry distinct states.
    pub injective: bool,
}

/// Finite POVM: labelled points `s`, states `F(s)` and probability weights `α(s) > 0`.
#[derive(Clone, Debug)]
pub struct FinitePovm {
    dim: usize,
    labels: Vec<String>,
    states: Vec<DensityOperator>,
    weights: Vec<f64>,
    /// `coords[s]` are the coordinates of `F(s)` in `HermitianBasis::new(dim)`.
    coords: Vec<Vec<f64>>,
}

impl FinitePovm {
    /// Builds and validates at [`DEFAULT_VALIDATION_TOL`].
    pub fn new(labels: Vec<String>, states: Vec<DensityOperator>, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(labels, states, weights, DEFAULT_VALIDATION_TOL)
    }

    pub fn with_tolerance(
        labels: Vec<String>,
        states: Vec<DensityOperator>,
        weights: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let povm = Self::unvalidated(labels, states, weights)?;
        let report = povm.validate();
        if !report.passes(tol) {
            return Err(Error::InvalidPovm(format!(
                "resolution defect {:e} (tolerance {tol:e}), weight sum {}",
                report.resolution_defect, report.weight_sum
            )));
        }
        Ok(povm)
    }

    /// Structural checks only; the resolution of identity is not enforced.
    pub fn unvalidated(labels: Vec<String>, states: Vec<DensityOperator>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidPovm("no points".into()));
        }
        if labels.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: states.len(),
                found: labels.len(),
            });
        }
        if weights.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        let dim = states[0].dim();
        if dim == 0 {
            return Err(Error::InvalidPovm("zero-dimensional Hilbert space".into()));
        }
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonPositiveWeight { index, weight: w });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidPovm(format!("duplicate point label `{l}`")));
            }
        }
        let basis = HermitianBasis::new(dim);
        let coords = states
            .iter()
            .map(|s| basis.coords(s.operator().matrix()))
            .collect();
        Ok(FinitePovm {
            dim,
            labels,
            states,
            weights,
            coords,
        })
    }

    /// Labels `0..N-1`.
    pub fn default_labels(n_points: usize) -> Vec<String> {
        (0..n_points).map(|i| i.to_string()).collect()
    }

    /// One point with `F = 𝟙/n`.
    pub fn single_point(n: usize) -> Self {
        Self::new(
            vec!["0".into()],
            vec![DensityOperator::maximally_mixed(n)],
            vec![1.0],
        )
        .expect("single-point POVM is valid")
    }

    /// Projective measurement in the standard basis with uniform weights.
    pub fn projective_basis(n: usize) -> Self {
        let states = (0..n)
            .map(|i| {
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                DensityOperator::from_trusted(HermitianOperator::from_real_diag(&d))
            })
            .collect();
        Self::new(Self::default_labels(n), states, vec![1.0 / n as f64; n])
            .expect("basis POVM is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &HermitianOperator {
        self.states[s].operator()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn basis(&self) -> HermitianBasis {
        HermitianBasis::new(self.dim)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// `((F(s), F(t)))`, nonnegative since both states are positive.
    pub fn overlap(&self, s: usize, t: usize) -> f64 {
        dot(&self.coords[s], &self.coords[t]).max(0.0)
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.dim as f64;
        let mut sum = HermitianOperator::zeros(self.dim);
        for (f, &a) in self.states.iter().zip(&self.weights) {
            sum.add_scaled(n * a, f.operator());
        }
        let resolution_defect = sum.sub(&HermitianOperator::identity(self.dim)).hs_norm();
        let min_state_eigenvalue = self
            .states
            .par_iter()
            .map(|f| {
                hermitian_eigvals(f.operator())
                    .map(|v| v[0])
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .reduce(|| f64::INFINITY, f64::min);
        ValidationReport {
            resolution_defect,
            min_state_eigenvalue,
            weight_sum: self.weights.iter().sum(),
        }
    }

    pub fn purity(&self) -> Result<PurityReport> {
        let seconds: Vec<f64> = self
            .states
            .par_iter()
            .map(|f| {
                let v = hermitian_eigvals(f.operator())?;
                Ok(if v.len() >= 2 { v[v.len() - 2] } else { 0.0 })
            })
            .collect::<Result<_>>()?;
        let max_rank_excess = seconds.iter().copied().fold(0.0, f64::max);
        let n_pts = self.len();
        let injective = (0..n_pts).into_par_iter().all(|s| {
            ((s + 1)..n_pts).all(|t| {
                let d: f64 = self.coords[s]
                    .iter()
                    .zip(&self.coords[t])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d.sqrt() > PURITY_TOL
            })
        });
        Ok(PurityReport {
            is_pure: max_rank_excess <= PURITY_TOL && injective,
            max_rank_excess,
            injective,
        })
    }

    fn check_len(&self, phi: &ObservableFunction) -> Result<()> {
        if phi.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: phi.len(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, a: &HermitianOperator) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        Ok(())
    }

    /// `T(φ) = Σ φ(s) n α(s) F(s)`.
    pub fn quantize(&self, phi: &ObservableFunction) -> Result<HermitianOperator> {
        self.check_len(phi)?;
        let n = self.dim as f64;
        let x: Vec<f64> = (0..self.len())
            .map(|s| phi.values()[s] * n * self.weights[s])
            .collect();
        Ok(self.combine(&x))
    }

    /// `Σ x_s F(s)` assembled in coordinates.
    fn combine(&self, x: &[f64]) -> HermitianOperator {
        let mut c = vec![0.0; self.dim * self.dim];
        for (xs, cs) in x.iter().zip(&self.coords) {
            for (ci, v) in c.iter_mut().zip(cs) {
                *ci += xs * v;
            }
        }
        self.basis().from_coords(&c)
    }

    /// `T*(A)(s) = n ((F(s), A))`.
    pub fn dequantize(&self, a: &HermitianOperator) -> Result<ObservableFunction> {
        self.check_dim(a)?;
        let n = self.dim as f64;
        let ca = self.basis().coords(a.matrix());
        Ok(ObservableFunction(
            self.coords.iter().map(|c| n * dot(c, &ca)).collect(),
        ))
    }

    /// `ℰ(A) = n Σ ((F(s), A)) α(s) F(s)`.
    pub fn channel(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_dim(a)?;
        let n = self.dim as f64;
        let ca = self.basis().coords(a.matrix());
        let x: Vec<f64> = self
            .coords
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| n * w * dot(c, &ca))
            .collect();
        Ok(self.combine(&x))
    }

    /// `ℰ` as a symmetric `n² x n²` matrix in the orthonormal Hermitian basis.
    pub fn channel_matrix(&self) -> RealMatrix {
        let d = self.dim * self.dim;
        let n = self.dim as f64;
        let mut e = RealMatrix::zeros(d);
        for (c, &w) in self.coords.iter().zip(&self.weights) {
            let f = n * w;
            for k in 0..d {
                let ck = f * c[k];
                if ck == 0.0 {
                    continue;
                }
                for l in 0..d {
                    e[(k, l)] += ck * c[l];
                }
            }
        }
        e
    }

    /// `M[t][s] = n ((F(s), F(t))) α(s)`; `(ℬφ)(t) = Σ_s M[t][s] φ(s)`.
    pub fn berezin_matrix(&self) -> RealMatrix {
        let n = self.dim as f64;
        let big_n = self.len();
        let data: Vec<f64> = (0..big_n)
            .into_par_iter()
            .flat_map_iter(|t| {
                (0..big_n).map(move |s| n * self.overlap(s, t) * self.weights[s])
            })
            .collect();
        RealMatrix::from_vec(big_n, data)
    }

    /// `S = D^{1/2} M D^{-1/2}`, `S[t][s] = n sqrt(α_t α_s) ((F(s), F(t)))`.
    pub fn symmetrized_berezin(&self) -> RealMatrix {
        let n = self.dim as f64;
        let big_n = self.len();
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let sq = &sq;
        let data: Vec<f64> = (0..big_n)
            .into_par_iter()
            .flat_map_iter(|t| {
                (0..big_n).map(move |s| n * sq[t] * sq[s] * self.overlap(s, t))
            })
            .collect();
        RealMatrix::from_vec(big_n, data)
    }

    /// `(ℬφ)(t)`.
    pub fn berezin_apply(&self, phi: &ObservableFunction) -> Result<ObservableFunction> {
        self.check_len(phi)?;
        let n = self.dim as f64;
        let x: Vec<f64> = (0..self.len())
            .map(|s| phi.values()[s] * n * self.weights[s])
            .collect();
        // ℬφ = (1/n) T*(T(φ)), evaluated in coordinates.
        let mut c = vec![0.0; self.dim * self.dim];
        for (xs, cs) in x.iter().zip(&self.coords) {
            for (ci, v) in c.iter_mut().zip(cs) {
                *ci += xs * v;
            }
        }
        Ok(ObservableFunction(
            self.coords.iter().map(|cs| dot(cs, &c)).collect(),
        ))
    }

    /// Normalized Choi state `(1/n) Σ E_ij ⊗ ℰ(E_ij) = Σ α(s) F(s)^T ⊗ F(s)`.
    pub fn choi_matrix(&self) -> HermitianOperator {
        let d = self.dim * self.dim;
        let mut c = CMatrix::zeros(d);
        for (f, &w) in self.states.iter().zip(&self.weights) {
            let m = f.operator().matrix();
            c.add_scaled(w, &m.transpose().kron(m));
        }
        HermitianOperator::from_computed(c)
    }

    /// `(φ, ψ)_α`.
    pub fn inner_alpha(&self, phi: &ObservableFunction, psi: &ObservableFunction) -> Result<f64> {
        self.check_len(phi)?;
        self.check_len(psi)?;
        Ok(self
            .weights
            .iter()
            .zip(phi.values().iter().zip(psi.values()))
            .map(|(a, (x, y))| a * x * y)
            .sum())
    }

    pub fn norm_alpha(&self, phi: &ObservableFunction) -> Result<f64> {
        Ok(self.inner_alpha(phi, phi)?.sqrt())
    }
}

/// Trace over the second (output) factor of an operator on `ℂ^a ⊗ ℂ^b`.
pub fn partial_trace_output(m: &HermitianOperator, a: usize, b: usize) -> Result<HermitianOperator> {
    if m.dim() != a * b {
        return Err(Error::DimensionMismatch {
            expected: a * b,
            found: m.dim(),
        });
    }
    let out = CMatrix::from_fn(a, |i, j| (0..b).map(|k| m.get(i * b + k, j * b + k)).sum());
    Ok(HermitianOperator::from_computed(out))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
