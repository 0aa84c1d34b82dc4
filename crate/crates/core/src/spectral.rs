//! Spectrum of the Berezin transform, moment geometry of the push-forward
//! measure, diffusion distances and L∞-Wasserstein bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{HermitianBasis, HermitianOperator, RealMatrix};
use crate::povm::{dot, FinitePovm, ObservableFunction};

/// Bin width (relative to the top eigenvalue) for multiplicity clusters.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Eigenvalues at or below this are skipped in diffusion sums.
pub const DIFFUSION_CUTOFF: f64 = 1e-10;
/// Below this `I - J` the best-fit line is undefined.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpectrumMethod {
    /// Diagonalize the `N x N` symmetrized Berezin matrix.
    Direct,
    /// Diagonalize the `n² x n²` channel matrix and map eigenvectors back.
    Dual,
    /// Whichever side is smaller.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    /// `γ₀ ≥ γ₁ ≥ …`, length `N`.
    pub eigenvalues: Vec<f64>,
    /// `1 - γ₁`.
    pub gap: f64,
    /// α-orthonormal eigenfunctions paired with the leading eigenvalues.
    /// The dual route only returns those with nonzero eigenvalue.
    #[serde(skip)]
    pub eigenfunctions: Vec<ObservableFunction>,
    pub clusters: Vec<Cluster>,
}

impl SpectralReport {
    pub fn gamma1(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// Index range of cluster `k` in `eigenvalues`.
    pub fn cluster_range(&self, k: usize) -> Option<std::ops::Range<usize>> {
        let start: usize = self.clusters.iter().take(k).map(|c| c.count).sum();
        self.clusters.get(k).map(|c| start..start + c.count)
    }
}

/// Groups a descending list into clusters whose neighbours differ by at most
/// `CLUSTER_TOL` times the spectral radius.
pub fn cluster_values(desc: &[f64]) -> Vec<Cluster> {
    let scale = desc.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 1..=desc.len() {
        if i == desc.len() || desc[i - 1] - desc[i] > CLUSTER_TOL * scale {
            let part = &desc[start..i];
            out.push(Cluster {
                value: part.iter().sum::<f64>() / part.len() as f64,
                count: part.len(),
            });
            start = i;
        }
    }
    out
}

/// Descending eigenvalues of `ℬ` without eigenvectors, from the smaller side.
pub fn berezin_eigenvalues(povm: &FinitePovm) -> Result<Vec<f64>> {
    let big_n = povm.len();
    let d = povm.dim() * povm.dim();
    let mut vals = if big_n <= d {
        povm.symmetrized_berezin().sym_eigvals()?
    } else {
        povm.channel_matrix().sym_eigvals()?
    };
    vals.reverse();
    vals.resize(big_n, 0.0);
    Ok(vals)
}

pub fn berezin_spectrum(povm: &FinitePovm) -> Result<SpectralReport> {
    berezin_spectrum_with(povm, SpectrumMethod::Auto)
}

pub fn berezin_spectrum_with(povm: &FinitePovm, method: SpectrumMethod) -> Result<SpectralReport> {
    let big_n = povm.len();
    let d = povm.dim() * povm.dim();
    let dual = match method {
        SpectrumMethod::Direct => false,
        SpectrumMethod::Dual => true,
        SpectrumMethod::Auto => big_n > d,
    };
    let sqrt_alpha: Vec<f64> = povm.weights().iter().map(|a| a.sqrt()).collect();
    // Eigenpairs of S in descending order; vectors live on the S side (length N).
    let (mut values, mut vectors) = if dual {
        dual_eigenpairs(povm)?
    } else {
        let eig = povm.symmetrized_berezin().sym_eig()?;
        let values: Vec<f64> = eig.values.into_iter().rev().collect();
        let vectors: Vec<Vec<f64>> = eig.vectors.into_iter().rev().collect();
        (values, vectors)
    };
    values.resize(big_n, 0.0);
    let clusters = cluster_values(&values);
    if let Some(top) = clusters.first() {
        if top.count > 1 && top.count <= vectors.len() {
            rebase_top(&mut vectors[..top.count], &sqrt_alpha);
        }
    }
    let eigenfunctions = vectors
        .into_iter()
        .map(|v| {
            let mut psi: Vec<f64> = v.iter().zip(&sqrt_alpha).map(|(x, s)| x / s).collect();
            fix_sign(&mut psi);
            ObservableFunction::new(psi)
        })
        .collect();
    let gap = if big_n >= 2 { 1.0 - values[1] } else { 1.0 };
    Ok(SpectralReport {
        eigenvalues: values,
        gap,
        eigenfunctions,
        clusters,
    })
}

/// Rows `x_s = sqrt(n α_s) c_s`: `S = X Xᵀ` and the channel matrix is `Xᵀ X`.
fn dual_eigenpairs(povm: &FinitePovm) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = povm.dim() as f64;
    let e = povm.channel_matrix();
    let eig = e.sym_eig()?;
    let scale = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for (lambda, w) in eig.values.iter().zip(&eig.vectors).rev() {
        if *lambda <= 1e-12 * scale.max(1.0) {
            values.push(lambda.max(0.0));
            continue;
        }
        let v: Vec<f64> = povm
            .coords()
            .iter()
            .zip(povm.weights())
            .map(|(c, a)| (n * a).sqrt() * dot(c, w) / lambda.sqrt())
            .collect();
        values.push(*lambda);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Replaces the top cluster's basis by one starting with the normalized `sqrt(α)`.
fn rebase_top(vectors: &mut [Vec<f64>], sqrt_alpha: &[f64]) {
    let k = vectors.len();
    let mut proj = vec![0.0; sqrt_alpha.len()];
    for v in vectors.iter() {
        let c = dot(v, sqrt_alpha);
        for (p, x) in proj.iter_mut().zip(v) {
            *p += c * x;
        }
    }
    let norm = dot(&proj, &proj).sqrt();
    if norm < 0.5 {
        return;
    }
    let mut basis: Vec<Vec<f64>> = vec![proj.iter().map(|x| x / norm).collect()];
    // Gram-Schmidt the old vectors against it, keeping the k-1 largest residuals.
    let mut residuals: Vec<Vec<f64>> = vectors.to_vec();
    while basis.len() < k {
        for r in residuals.iter_mut() {
            for b in &basis {
                let c = dot(r, b);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
        }
        let (best, bn) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, dot(r, r).sqrt()))
            .fold((0, -1.0), |a, x| if x.1 > a.1 { x } else { a });
        let b: Vec<f64> = residuals[best].iter().map(|x| x / bn).collect();
        residuals.swap_remove(best);
        basis.push(b);
    }
    for (v, b) in vectors.iter_mut().zip(basis) {
        *v = b;
    }
}

/// First component above `1e-12` in magnitude made positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max.max(1e-300)) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentData {
    /// `C = Σ α F`.
    pub center: HermitianOperator,
    /// `Σ α ‖F - C‖²`.
    pub i: f64,
    /// `I - K`, `K` the top covariance eigenvalue over traceless directions.
    pub j: f64,
    /// Unit traceless maximizer; `None` in dimension one.
    pub bestfit_direction: Option<HermitianOperator>,
}

impl MomentData {
    /// `1 - n (I - J)`.
    pub fn gap_geometric(&self) -> f64 {
        1.0 - self.center.dim() as f64 * (self.i - self.j)
    }
}

pub fn moments(povm: &FinitePovm) -> Result<MomentData> {
    let n = povm.dim();
    let d = n * n;
    let basis = HermitianBasis::new(n);
    let mut c = vec![0.0; d];
    for (cs, &a) in povm.coords().iter().zip(povm.weights()) {
        for (ci, v) in c.iter_mut().zip(cs) {
            *ci += a * v;
        }
    }
    let mut cov = RealMatrix::zeros(d);
    let mut i_moment = 0.0;
    for (cs, &a) in povm.coords().iter().zip(povm.weights()) {
        let dev: Vec<f64> = cs.iter().zip(&c).map(|(x, y)| x - y).collect();
        i_moment += a * dot(&dev, &dev);
        for k in 0..d {
            let f = a * dev[k];
            for l in 0..d {
                cov[(k, l)] += f * dev[l];
            }
        }
    }
    // Project out the identity direction so the maximizer is traceless.
    let e: Vec<f64> = (0..d).map(|k| if k < n { 1.0 / (n as f64).sqrt() } else { 0.0 }).collect();
    let pe = project_out(&cov, &e);
    let eig = pe.sym_eig()?;
    let k_top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let direction = if n < 2 {
        None
    } else {
        let mut a = if k_top > DEGENERATE_TOL {
            eig.vectors.last().cloned().unwrap()
        } else {
            let mut a = vec![0.0; d];
            a[0] = std::f64::consts::FRAC_1_SQRT_2;
            a[1] = -std::f64::consts::FRAC_1_SQRT_2;
            a
        };
        let t = dot(&a, &e);
        for (x, y) in a.iter_mut().zip(&e) {
            *x -= t * y;
        }
        let norm = dot(&a, &a).sqrt();
        for x in a.iter_mut() {
            *x /= norm;
        }
        fix_sign(&mut a);
        Some(basis.from_coords(&a))
    };
    Ok(MomentData {
        center: basis.from_coords(&c),
        i: i_moment,
        j: i_moment - k_top,
        bestfit_direction: direction,
    })
}

/// `(𝟙 - e eᵀ) M (𝟙 - e eᵀ)` for unit `e`.
fn project_out(m: &RealMatrix, e: &[f64]) -> RealMatrix {
    let d = m.n();
    let me = m.matvec(e);
    let em = m.vecmat(e);
    let eme = dot(e, &me);
    RealMatrix::from_fn(d, |k, l| m[(k, l)] - e[k] * em[l] - me[k] * e[l] + eme * e[k] * e[l])
}

pub fn gap_via_geometry(povm: &FinitePovm) -> Result<f64> {
    Ok(moments(povm)?.gap_geometric())
}

/// `ψ₁(s) = ((F(s), A)) / sqrt(I - J)` with `A` the best-fit direction.
pub fn first_eigenfunction(povm: &FinitePovm) -> Result<ObservableFunction> {
    let m = moments(povm)?;
    let k = m.i - m.j;
    let a = match (&m.bestfit_direction, k > DEGENERATE_TOL) {
        (Some(a), true) => a,
        _ => {
            return Err(Error::Degenerate(format!(
                "push-forward measure has no spread along any line (I - J = {k:e})"
            )))
        }
    };
    let ca = povm.basis().coords(a.matrix());
    let s = k.sqrt();
    Ok(ObservableFunction::new(
        povm.coords().iter().map(|c| dot(c, &ca) / s).collect(),
    ))
}

/// Pairwise diffusion distances from a spectral report.
#[derive(Clone, Debug)]
pub struct DiffusionMap {
    /// `γ_k` and `ψ_k` for `k ≥ 1` with `γ_k > DIFFUSION_CUTOFF`.
    terms: Vec<(f64, Vec<f64>)>,
}

impl DiffusionMap {
    pub fn new(report: &SpectralReport) -> Self {
        let terms = report
            .eigenvalues
            .iter()
            .zip(&report.eigenfunctions)
            .skip(1)
            .filter(|(g, _)| **g > DIFFUSION_CUTOFF)
            .map(|(g, psi)| (*g, psi.values().to_vec()))
            .collect();
        DiffusionMap { terms }
    }

    pub fn distance(&self, tau: f64, s: usize, t: usize) -> f64 {
        self.terms
            .iter()
            .map(|(g, psi)| g.powf(2.0 * tau) * (psi[s] - psi[t]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `D_τ(s, t)` for labelled points.
pub fn diffusion_distance(povm: &FinitePovm, tau: f64, s: &str, t: &str) -> Result<f64> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument(format!("diffusion time {tau} must be positive")));
    }
    let i = povm.index_of(s)?;
    let j = povm.index_of(t)?;
    let report = berezin_spectrum(povm)?;
    Ok(DiffusionMap::new(&report).distance(tau, i, j))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CouplingMode {
    /// Same labels and weights; couple point `s` with point `s`.
    Identity,
    /// Uniform weights on equally many points; optimal bottleneck matching.
    Assignment,
    /// Assignment when weights are uniform, identity otherwise.
    #[default]
    Auto,
}

fn state_distance(a: &FinitePovm, s: usize, b: &FinitePovm, t: usize) -> f64 {
    a.coords()[s]
        .iter()
        .zip(&b.coords()[t])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn uniform(p: &FinitePovm) -> bool {
    let u = 1.0 / p.len() as f64;
    p.weights().iter().all(|w| (w - u).abs() <= 1e-12)
}

/// Upper bound for the L∞-Wasserstein distance between push-forward measures.
pub fn wasserstein_inf_bound(p1: &FinitePovm, p2: &FinitePovm, mode: CouplingMode) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            found: p2.dim(),
        });
    }
    let same_n = p1.len() == p2.len();
    let assignment_ok = same_n && uniform(p1) && uniform(p2);
    let identity_ok = same_n
        && p1.labels() == p2.labels()
        && p1
            .weights()
            .iter()
            .zip(p2.weights())
            .all(|(a, b)| (a - b).abs() <= 1e-12);
    let mode = match mode {
        CouplingMode::Auto if assignment_ok => CouplingMode::Assignment,
        CouplingMode::Auto => CouplingMode::Identity,
        m => m,
    };
    match mode {
        CouplingMode::Identity if identity_ok => Ok((0..p1.len())
            .map(|s| state_distance(p1, s, p2, s))
            .fold(0.0, f64::max)),
        CouplingMode::Assignment if assignment_ok => {
            let n = p1.len();
            let cost: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|s| (0..n).map(|t| state_distance(p1, s, p2, t)).collect())
                .collect();
            Ok(bottleneck_assignment(&cost))
        }
        CouplingMode::Identity => Err(Error::IncompatibleCoupling(
            "identity coupling needs identical labels and weights".into(),
        )),
        _ => Err(Error::IncompatibleCoupling(
            "assignment needs uniform weights on equally many points".into(),
        )),
    }
}

/// Smallest `c` such that a perfect matching uses only entries `≤ c`.
pub fn bottleneck_assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n == 0 {
        return 0.0;
    }
    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(cost, levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels[lo]
}

fn has_perfect_matching(cost: &[Vec<f64>], threshold: f64) -> bool {
    let n = cost.len();
    let mut match_of_col: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(cost, threshold, row, &mut seen, &mut match_of_col) {
            return false;
        }
    }
    true
}

fn augment(
    cost: &[Vec<f64>],
    threshold: f64,
    row: usize,
    seen: &mut [bool],
    match_of_col: &mut [Option<usize>],
) -> bool {
    for col in 0..cost.len() {
        if cost[row][col] <= threshold && !seen[col] {
            seen[col] = true;
            let free = match match_of_col[col] {
                None => true,
                Some(other) => augment(cost, threshold, other, seen, match_of_col),
            };
            if free {
                match_of_col[col] = Some(row);
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturbed_pair, random_hermitian, random_povm, unitary_exp, PovmKind};
    use crate::operator::{hs_inner, projector_onto, C64};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn corpus(seed: u64) -> FinitePovm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let big_n = rng.gen_range(n.max(2)..=25);
        let kind = if rng.gen_bool(0.5) { PovmKind::Pure } else { PovmKind::Mixed };
        random_povm(&mut rng, n, big_n, kind).unwrap()
    }

    #[test]
    fn projective_measurement_has_no_gap() {
        let r = berezin_spectrum(&FinitePovm::projective_basis(4)).unwrap();
        assert!(r.eigenvalues.iter().all(|g| (g - 1.0).abs() < 1e-12));
        assert!(r.gap.abs() < 1e-12);
        assert_eq!(r.clusters, vec![Cluster { value: 1.0, count: 4 }]);
        // Rebased so the constant comes first.
        assert!(r.eigenfunctions[0].values().iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_point_has_full_gap() {
        let r = berezin_spectrum(&FinitePovm::single_point(3)).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert_eq!(r.gap, 1.0);
        let m = moments(&FinitePovm::single_point(3)).unwrap();
        assert!(m.i.abs() < 1e-15 && m.j.abs() < 1e-15);
        assert!((m.gap_geometric() - 1.0).abs() < 1e-15);
        assert!(matches!(
            first_eigenfunction(&FinitePovm::single_point(3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn direct_and_dual_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_povm(&mut rng, 2, 12, PovmKind::Mixed).unwrap();
        let a = berezin_spectrum_with(&p, SpectrumMethod::Direct).unwrap();
        let b = berezin_spectrum_with(&p, SpectrumMethod::Dual).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        assert_eq!(b.eigenfunctions.len(), 4);
        for k in 0..4 {
            let dot: f64 = (0..p.len())
                .map(|s| p.weights()[s] * a.eigenfunctions[k].values()[s] * b.eigenfunctions[k].values()[s])
                .sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
        assert_eq!(berezin_eigenvalues(&p).unwrap().len(), 12);
    }

    #[test]
    fn wasserstein_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_povm(&mut rng, 3, 6, PovmKind::Pure).unwrap();
        assert_eq!(wasserstein_inf_bound(&p, &p, CouplingMode::Identity).unwrap(), 0.0);
        let (a, _) = perturbed_pair(&mut rng, 3, 6, 0.0).unwrap();
        let mut order: Vec<usize> = (0..6).collect();
        order.shuffle(&mut rng);
        let permuted = FinitePovm::new(
            FinitePovm::default_labels(6),
            order.iter().map(|&i| a.states()[i].clone()).collect(),
            vec![1.0 / 6.0; 6],
        )
        .unwrap();
        assert!(wasserstein_inf_bound(&a, &permuted, CouplingMode::Assignment).unwrap() < 1e-15);
        assert!(wasserstein_inf_bound(&a, &permuted, CouplingMode::Identity).unwrap() > 0.0);
        assert!(matches!(
            wasserstein_inf_bound(&a, &p, CouplingMode::Assignment),
            Err(Error::IncompatibleCoupling(_))
        ));
    }

    #[test]
    fn unitary_perturbation_is_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_povm(&mut rng, 3, 7, PovmKind::Pure).unwrap();
        let h = random_hermitian(&mut rng, 3);
        let mut ratios = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let u = unitary_exp(&h, eps).unwrap();
            let states = p
                .states()
                .iter()
                .map(|f| crate::operator::DensityOperator::new(f.operator().conjugate_by(&u)).unwrap())
                .collect();
            let q = FinitePovm::new(p.labels().to_vec(), states, p.weights().to_vec()).unwrap();
            ratios.push(wasserstein_inf_bound(&p, &q, CouplingMode::Identity).unwrap() / eps);
        }
        assert!((ratios[1] - ratios[2]).abs() < 1e-2 * ratios[2]);
        assert!((ratios[0] - ratios[2]).abs() < 1e-1 * ratios[2]);
    }

    #[test]
    fn bottleneck_small() {
        let cost = vec![vec![1.0, 5.0], vec![2.0, 3.0]];
        assert_eq!(bottleneck_assignment(&cost), 3.0);
        let cost = vec![vec![4.0, 1.0], vec![1.0, 4.0]];
        assert_eq!(bottleneck_assignment(&cost), 1.0);
    }

    #[test]
    fn diffusion_labels() {
        let p = corpus(3);
        assert!(matches!(diffusion_distance(&p, 1.0, "0", "nope"), Err(Error::UnknownLabel(_))));
        assert_eq!(diffusion_distance(&p, 1.0, "1", "1").unwrap(), 0.0);
    }

    #[test]
    fn projector_difference_lemma() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let p = projector_onto(&crate::corpus::gaussian_vector(&mut rng, n)).unwrap();
            let q = projector_onto(&crate::corpus::gaussian_vector(&mut rng, n)).unwrap();
            let a = random_hermitian(&mut rng, n);
            let d = p.operator().sub(q.operator());
            let lhs = hs_inner(&a, &d).unwrap().abs();
            let a2 = a.square();
            let rhs = 2f64.sqrt() * d.hs_norm() * hs_inner(&a2, &p.operator().add(q.operator())).unwrap().sqrt();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn degenerate_gamma1_eigenfunction_in_eigenspace() {
        // Three mutually unbiased-ish directions in ℂ²: the six Pauli eigenstates.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |a: f64, b: f64| C64::new(a, b);
        let vecs = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(0.0, -s)],
        ];
        let states = vecs.iter().map(|v| projector_onto(v).unwrap()).collect();
        let p = FinitePovm::new(FinitePovm::default_labels(6), states, vec![1.0 / 6.0; 6]).unwrap();
        let r = berezin_spectrum(&p).unwrap();
        assert_eq!(r.clusters[1].count, 3);
        let psi = first_eigenfunction(&p).unwrap();
        let bpsi = p.berezin_apply(&psi).unwrap();
        let res: Vec<f64> = bpsi.values().iter().zip(psi.values()).map(|(b, x)| b - r.gamma1() * x).collect();
        assert!(p.norm_alpha(&ObservableFunction::new(res)).unwrap() < 1e-12);
        // Projection onto the reported γ₁ eigenspace reproduces ψ₁.
        let range = r.cluster_range(1).unwrap();
        let mut proj = [0.0; 6];
        for k in range {
            let e = &r.eigenfunctions[k];
            let c = p.inner_alpha(e, &psi).unwrap();
            for (x, y) in proj.iter_mut().zip(e.values()) {
                *x += c * y;
            }
        }
        for (x, y) in proj.iter().zip(psi.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn report_invariants(seed in any::<u64>()) {
            let p = corpus(seed);
            let r = berezin_spectrum_with(&p, SpectrumMethod::Direct).unwrap();
            prop_assert!((r.eigenvalues[0] - 1.0).abs() < 1e-9);
            prop_assert!(r.eigenfunctions[0].values().iter().all(|x| (x - 1.0).abs() < 1e-8));
            prop_assert!(r.eigenvalues.iter().all(|g| *g >= -1e-9 && *g <= 1.0 + 1e-9));
            let d = p.dim() * p.dim();
            prop_assert!(r.eigenvalues.iter().filter(|g| **g > 1e-8).count() <= d);
            for j in 0..r.eigenfunctions.len() {
                for k in 0..=j {
                    let ip = p.inner_alpha(&r.eigenfunctions[j], &r.eigenfunctions[k]).unwrap();
                    let want = if j == k { 1.0 } else { 0.0 };
                    prop_assert!((ip - want).abs() < 1e-8);
                }
            }
        }

        #[test]
        fn geometry_matches_spectrum(seed in any::<u64>()) {
            let p = corpus(seed);
            let r = berezin_spectrum(&p).unwrap();
            let m = moments(&p).unwrap();
            prop_assert!(m.center.sub(&HermitianOperator::identity(p.dim()).scale(1.0 / p.dim() as f64)).hs_norm() < 1e-9);
            prop_assert!(m.j >= -1e-12 && m.j <= m.i + 1e-12);
            prop_assert!((m.gap_geometric() - r.gap).abs() < 1e-9);
            if let Some(a) = &m.bestfit_direction {
                prop_assert!(a.trace().abs() < 1e-10);
                prop_assert!((hs_inner(a, a).unwrap() - 1.0).abs() < 1e-10);
                let ea = p.channel(a).unwrap();
                prop_assert!(ea.sub(&a.scale(r.gamma1())).hs_norm() < 1e-8);
            }
        }

        #[test]
        fn diffusion_metric(seed in any::<u64>(), tau in 0.5f64..4.0) {
            let p = corpus(seed);
            let r = berezin_spectrum(&p).unwrap();
            let map = DiffusionMap::new(&r);
            let n = p.len();
            for s in 0..n.min(6) {
                for t in 0..n.min(6) {
                    let d = map.distance(tau, s, t);
                    prop_assert!((d - map.distance(tau, t, s)).abs() < 1e-14);
                    if r.gap > 0.0 {
                        let al = p.weights();
                        let bound = (1.0 / al[s] + 1.0 / al[t]).sqrt();
                        prop_assert!(d <= r.gamma1().powf(tau) * bound + 1e-12);
                    }
                    for u in 0..n.min(6) {
                        prop_assert!(d <= map.distance(tau, s, u) + map.distance(tau, u, t) + 1e-12);
                    }
                }
                prop_assert_eq!(map.distance(tau, s, s), 0.0);
            }
        }
    }
}
