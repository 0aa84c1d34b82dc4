//! Berezin-Toeplitz quantization of the round sphere `CP¹` (area one) at level `p`.
//!
//! The coherent-state POVM is discretized by a product rule: Gauss-Legendre in
//! `cos θ` with `p + 1` nodes times `2p + 2` equispaced azimuths. Every entry of a
//! coherent projector is a polynomial of degree `p` in `cos θ` times an azimuthal
//! mode of order at most `p`, so the rule reproduces the continuum resolution of
//! the identity exactly.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{projector_onto, C64, RealMatrix};
use crate::povm::{FinitePovm, ObservableFunction};
use crate::spectral::{berezin_eigenvalues, berezin_spectrum, cluster_values, Cluster};

/// Validation tolerance for quadrature-built POVMs.
pub const CP1_VALIDATION_TOL: f64 = 1e-10;
/// Default cap on the level.
pub const MAX_LEVEL: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cp1Level(usize);

impl Cp1Level {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("level p must be at least 1".into()));
        }
        Ok(Cp1Level(p))
    }

    pub fn p(self) -> usize {
        self.0
    }

    /// `n_p = p + 1`.
    pub fn quantum_dim(self) -> usize {
        self.0 + 1
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, m as f64 * (x * p1 - p0) / (x * x - 1.0))
}

#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    /// `(θ, φ)` pairs.
    pub nodes: Vec<(f64, f64)>,
    /// Probability weights.
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl SphereQuadrature {
    /// Average of `f(x, y, z)` over the unit sphere.
    pub fn integrate(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&(t, ph), w)| w * f(t.sin() * ph.cos(), t.sin() * ph.sin(), t.cos()))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product rule with `p + 1` Gauss-Legendre nodes in `cos θ` and `2p + 2` azimuths.
pub fn build_sphere_quadrature(p: usize) -> Result<SphereQuadrature> {
    let level = Cp1Level::new(p)?;
    let m = level.quantum_dim();
    let k = 2 * p + 2;
    let (xs, ws) = gauss_legendre(m);
    let mut nodes = Vec::with_capacity(m * k);
    let mut weights = Vec::with_capacity(m * k);
    for (x, w) in xs.iter().zip(&ws) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for j in 0..k {
            nodes.push((theta, 2.0 * PI * j as f64 / k as f64));
            weights.push(w / 2.0 / k as f64);
        }
    }
    Ok(SphereQuadrature {
        nodes,
        weights,
        exactness_degree: 2 * p + 1,
    })
}

/// Unit spinor `(cos θ/2, e^{iφ} sin θ/2)`.
pub fn spinor(theta: f64, phi: f64) -> [C64; 2] {
    [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// `(a, b)^{⊗p}` in the orthonormal monomial basis: `sqrt(C(p,k)) a^{p-k} b^k`.
pub fn coherent_vector(p: usize, u: [C64; 2]) -> Vec<C64> {
    let mut binom = 1.0f64;
    (0..=p)
        .map(|k| {
            if k > 0 {
                binom = binom * (p - k + 1) as f64 / k as f64;
            }
            u[0].powi((p - k) as i32) * u[1].powi(k as i32) * binom.sqrt()
        })
        .collect()
}

/// `|⟨u, v⟩|^{2p}`, the overlap of the coherent projectors.
pub fn spinor_overlap(p: usize, u: [C64; 2], v: [C64; 2]) -> f64 {
    let ip = u[0].conj() * v[0] + u[1].conj() * v[1];
    ip.norm_sqr().powi(p as i32)
}

/// Coherent-state POVM on explicit spinors and weights, validated at [`CP1_VALIDATION_TOL`].
pub fn cp1_povm_from_spinors(p: usize, spinors: &[[C64; 2]], weights: Vec<f64>, labels: Vec<String>) -> Result<FinitePovm> {
    Cp1Level::new(p)?;
    let states = spinors
        .iter()
        .map(|&u| projector_onto(&coherent_vector(p, u)))
        .collect::<Result<Vec<_>>>()?;
    FinitePovm::with_tolerance(labels, states, weights, CP1_VALIDATION_TOL)
}

pub fn build_cp1_povm(p: usize) -> Result<FinitePovm> {
    let (quad, spinors) = quadrature_spinors(p)?;
    let labels = (0..quad.len()).map(|i| format!("x{i}")).collect();
    cp1_povm_from_spinors(p, &spinors, quad.weights, labels)
}

fn quadrature_spinors(p: usize) -> Result<(SphereQuadrature, Vec<[C64; 2]>)> {
    let quad = build_sphere_quadrature(p)?;
    let spinors = quad.nodes.iter().map(|&(t, ph)| spinor(t, ph)).collect();
    Ok((quad, spinors))
}

/// `2 / (p + 2)`.
pub fn gap_reference(p: usize) -> f64 {
    2.0 / (p as f64 + 2.0)
}

/// Laplace eigenvalue and multiplicity of degree `l` on the area-one round sphere.
pub fn laplace_reference(l: usize) -> (f64, usize) {
    (4.0 * PI * (l * (l + 1)) as f64, 2 * l + 1)
}

/// `γ_{l,p} = Π_{j=1..l} (p - j + 1)/(p + 1 + j)`, zero for `l > p`.
pub fn exact_eigenvalue(p: usize, l: usize) -> f64 {
    if l > p {
        return 0.0;
    }
    (1..=l).map(|j| (p - j + 1) as f64 / (p + 1 + j) as f64).product()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticsRow {
    pub p: usize,
    pub l: usize,
    /// Cluster mean `γ_{l,p}`.
    pub gamma: f64,
    pub multiplicity: usize,
    /// `p (1 - γ_{l,p})`.
    pub p_times_defect: f64,
    /// `l (l + 1)`.
    pub target: f64,
    pub residual: f64,
}

/// Clusters of the level-`p` spectrum with the expected `2l+1` sizes checked for `l ≤ k_max`.
pub fn level_clusters(p: usize, k_max: usize) -> Result<Vec<Cluster>> {
    if k_max > p {
        return Err(Error::InvalidArgument(format!(
            "degree {k_max} is not resolved at level {p} (need l ≤ p)"
        )));
    }
    let povm = build_cp1_povm(p)?;
    let clusters = cluster_values(&berezin_eigenvalues(&povm)?);
    for l in 0..=k_max {
        let want = 2 * l + 1;
        match clusters.get(l) {
            Some(c) if c.count == want => {}
            Some(c) => {
                return Err(Error::ClusterMismatch(format!(
                    "p = {p}, l = {l}: cluster of size {} (expected {want})",
                    c.count
                )))
            }
            None => return Err(Error::ClusterMismatch(format!("p = {p}: no cluster for l = {l}"))),
        }
    }
    Ok(clusters)
}

/// One row per `(p, l)` with `1 ≤ l ≤ k_max`, sorted by `p` then `l`.
pub fn verify_gap_asymptotics(p_list: &[usize], k_max: usize) -> Result<Vec<AsymptoticsRow>> {
    use rayon::prelude::*;
    let mut ps = p_list.to_vec();
    ps.sort_unstable();
    ps.dedup();
    let per_p: Vec<Vec<AsymptoticsRow>> = ps
        .par_iter()
        .map(|&p| {
            let clusters = level_clusters(p, k_max)?;
            Ok((1..=k_max)
                .map(|l| {
                    let c = clusters[l];
                    let p_times_defect = p as f64 * (1.0 - c.value);
                    let target = (l * (l + 1)) as f64;
                    AsymptoticsRow {
                        p,
                        l,
                        gamma: c.value,
                        multiplicity: c.count,
                        p_times_defect,
                        target,
                        residual: (p_times_defect - target).abs(),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_p.into_iter().flatten().collect())
}

/// Real spherical harmonics of degree `l` at `(θ, φ)`, unnormalized, `2l + 1` values.
pub fn real_harmonics(l: usize, theta: f64, phi: f64) -> Vec<f64> {
    let x = theta.cos();
    let s = theta.sin();
    let mut out = Vec::with_capacity(2 * l + 1);
    for m in 0..=l {
        // P_m^m, P_{m+1}^m, … up to P_l^m.
        let mut pmm = 1.0;
        for k in 1..=m {
            pmm *= (2 * k - 1) as f64 * s;
        }
        let plm = if l == m {
            pmm
        } else {
            let mut p0 = pmm;
            let mut p1 = x * (2 * m + 1) as f64 * pmm;
            for ll in m + 2..=l {
                let p2 = ((2 * ll - 1) as f64 * x * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        };
        out.push(plm * (m as f64 * phi).cos());
        if m > 0 {
            out.push(plm * (m as f64 * phi).sin());
        }
    }
    out
}

/// Modified Gram-Schmidt (two passes) in the weighted inner product.
fn orthonormalize(cols: &mut [Vec<f64>], w: &[f64]) -> Result<()> {
    let ip = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum() };
    for k in 0..cols.len() {
        for _ in 0..2 {
            for j in 0..k {
                let c = ip(&cols[k], &cols[j]);
                let (head, tail) = cols.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= c * y;
                }
            }
        }
        let norm = ip(&cols[k], &cols[k]).sqrt();
        if norm < 1e-12 {
            return Err(Error::Degenerate("harmonics are linearly dependent on the nodes".into()));
        }
        for x in cols[k].iter_mut() {
            *x /= norm;
        }
    }
    Ok(())
}

/// Largest principal angle between two `w`-orthonormal families of equal size.
/// Computed as `asin` of the largest singular value of the residual `Q₂ - Q₁ C`.
pub fn largest_principal_angle(q1: &[Vec<f64>], q2: &[Vec<f64>], w: &[f64]) -> Result<f64> {
    let ip = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum() };
    let k = q2.len();
    let residuals: Vec<Vec<f64>> = q2
        .iter()
        .map(|v| {
            let mut r = v.clone();
            for u in q1 {
                let c = ip(u, v);
                for (x, y) in r.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
            r
        })
        .collect();
    let gram = RealMatrix::from_fn(k, |a, b| ip(&residuals[a], &residuals[b]));
    let top = gram.sym_eigvals()?.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt().min(1.0).asin())
}

/// Largest principal angle between the cluster-`l` eigenspace of `ℬ_p` and the
/// degree-`l` harmonics sampled at the nodes.
pub fn eigenfunction_vs_harmonics(p: usize, l: usize) -> Result<f64> {
    let (quad, spinors) = quadrature_spinors(p)?;
    let labels = (0..quad.len()).map(|i| format!("x{i}")).collect();
    let povm = cp1_povm_from_spinors(p, &spinors, quad.weights.clone(), labels)?;
    let report = berezin_spectrum(&povm)?;
    let range = report
        .cluster_range(l)
        .filter(|r| r.len() == 2 * l + 1 && l <= p && r.end <= report.eigenfunctions.len())
        .ok_or_else(|| Error::ClusterMismatch(format!("cluster l = {l} is not resolved at p = {p}")))?;
    let eig: Vec<Vec<f64>> = report.eigenfunctions[range]
        .iter()
        .map(ObservableFunction::values)
        .map(<[f64]>::to_vec)
        .collect();
    let mut harm: Vec<Vec<f64>> = vec![Vec::with_capacity(quad.len()); 2 * l + 1];
    for &(t, ph) in &quad.nodes {
        for (col, y) in harm.iter_mut().zip(real_harmonics(l, t, ph)) {
            col.push(y);
        }
    }
    orthonormalize(&mut harm, &quad.weights)?;
    largest_principal_angle(&eig, &harm, &quad.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::random_unitary;
    use crate::spectral::{berezin_spectrum_with, moments, SpectrumMethod};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_legendre_exactness() {
        for m in 1..=12 {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..2 * m {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn sphere_moments() {
        let q = build_sphere_quadrature(1).unwrap();
        assert_eq!(q.len(), 8);
        assert!((q.integrate(|_, _, _| 1.0) - 1.0).abs() < 1e-15);
        assert!((q.integrate(|_, _, z| z * z) - 1.0 / 3.0).abs() < 1e-14);
        let q = build_sphere_quadrature(4).unwrap();
        assert!((q.integrate(|x, y, z| x * x * y * y * z * z) - 1.0 / 105.0).abs() < 1e-14);
        assert!(q.integrate(|x, _, z| x * z * z).abs() < 1e-14);
        // Brute-force midpoint oracle for z⁴.
        let m = 400;
        let fine: f64 = (0..m)
            .map(|i| {
                let z = -1.0 + (i as f64 + 0.5) * 2.0 / m as f64;
                z.powi(4) / m as f64
            })
            .sum();
        assert!((q.integrate(|_, _, z| z.powi(4)) - fine).abs() < 1e-5);
    }

    #[test]
    fn povm_resolves_identity() {
        for p in [1, 2, 5, 13, 30] {
            let povm = build_cp1_povm(p).unwrap();
            let defect = povm.validate().resolution_defect;
            assert!(defect < if p == 1 { 1e-12 } else { 1e-10 }, "p={p}: {defect:e}");
            assert!(povm.purity().unwrap().is_pure);
        }
    }

    #[test]
    fn kernel_identity() {
        let p = 5;
        let povm = build_cp1_povm(p).unwrap();
        let (_, sp) = quadrature_spinors(p).unwrap();
        for (s, t) in [(0, 1), (3, 17), (20, 59), (7, 7)] {
            let direct = povm.overlap(s, t);
            assert!((direct - spinor_overlap(p, sp[s], sp[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_gap_small_levels() {
        for p in 1..=8 {
            let r = berezin_spectrum(&build_cp1_povm(p).unwrap()).unwrap();
            assert!((r.gap - gap_reference(p)).abs() < 1e-8);
        }
        assert!((gap_reference(10) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exact_eigenvalues_match_clusters() {
        let p = 7;
        let clusters = level_clusters(p, p).unwrap();
        for (l, c) in clusters.iter().enumerate() {
            assert!((c.value - exact_eigenvalue(p, l)).abs() < 1e-10);
        }
        assert!((exact_eigenvalue(12, 2) - 12.0 * 11.0 / (14.0 * 15.0)).abs() < 1e-15);
    }

    #[test]
    fn laplace_values() {
        assert_eq!(laplace_reference(0), (0.0, 1));
        assert_eq!(laplace_reference(1), (8.0 * PI, 3));
        assert_eq!(laplace_reference(2), (24.0 * PI, 5));
    }

    #[test]
    fn multiplicities_at_sixteen() {
        let rows = verify_gap_asymptotics(&[16], 3).unwrap();
        for r in &rows {
            assert_eq!(r.multiplicity, 2 * r.l + 1);
        }
        let l1 = rows[0];
        assert!((l1.residual - 4.0 / 18.0).abs() < 1e-8);
        assert!(matches!(level_clusters(2, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn su2_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = 4;
        let u = random_unitary(&mut rng, 2);
        let (quad, sp) = quadrature_spinors(p).unwrap();
        let rotated: Vec<[C64; 2]> = sp
            .iter()
            .map(|s| {
                let v = u.matvec(s);
                [v[0], v[1]]
            })
            .collect();
        let labels = FinitePovm::default_labels(quad.len());
        let a = cp1_povm_from_spinors(p, &sp, quad.weights.clone(), labels.clone()).unwrap();
        let b = cp1_povm_from_spinors(p, &rotated, quad.weights.clone(), labels).unwrap();
        let ea = berezin_eigenvalues(&a).unwrap();
        let eb = berezin_eigenvalues(&b).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn moment_identities() {
        for p in [2, 5] {
            let m = moments(&build_cp1_povm(p).unwrap()).unwrap();
            let n = (p + 1) as f64;
            assert!((m.i - (1.0 - 1.0 / n)).abs() < 1e-8);
            assert!((m.j - (1.0 - 2.0 / (p as f64 + 2.0))).abs() < 1e-8);
        }
    }

    #[test]
    fn simple_top_eigenvalue_and_gap_bound() {
        for p in 1..=10 {
            let e = berezin_eigenvalues(&build_cp1_povm(p).unwrap()).unwrap();
            assert!(e[1] < 1.0 - 1e-6);
            let gap = 1.0 - e[1];
            // 2/(p+2) ≤ 2/p, so the bound holds with C = 0.
            assert!(gap <= 2.0 / p as f64 + 1e-12);
        }
    }

    #[test]
    fn harmonics_span_eigenspaces() {
        assert!(eigenfunction_vs_harmonics(6, 0).unwrap() < 1e-8);
        assert!(eigenfunction_vs_harmonics(8, 1).unwrap() < 0.05);
        assert!(eigenfunction_vs_harmonics(8, 2).unwrap() < 0.05);
        assert!(matches!(eigenfunction_vs_harmonics(2, 3), Err(Error::ClusterMismatch(_))));
    }

    #[test]
    fn direct_and_dual_agree() {
        let povm = build_cp1_povm(3).unwrap();
        let a = berezin_spectrum_with(&povm, SpectrumMethod::Direct).unwrap();
        let b = berezin_spectrum_with(&povm, SpectrumMethod::Dual).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
