//! Measurement noise, the minimal-noise identity and the Lüders repeated-measurement chain.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::donaldson::least_squares_slope;
use crate::error::{Error, Result};
use crate::operator::{hs_inner, DensityOperator, HermitianOperator, RealMatrix};
use crate::povm::{FinitePovm, ObservableFunction};
use crate::spectral::{berezin_eigenvalues, berezin_spectrum};

/// Norms below this are treated as converged when fitting rates.
pub const NORM_FLOOR: f64 = 1e-13;
/// Fraction of the power sequence dropped as transient.
pub const TRANSIENT_FRACTION: f64 = 0.2;
/// Gaps below this count as zero.
pub const ZERO_GAP_TOL: f64 = 1e-8;

/// `Δ(φ) = T(φ²) - T(φ)²`.
pub fn noise_operator(povm: &FinitePovm, phi: &ObservableFunction) -> Result<HermitianOperator> {
    let t_sq = povm.quantize(&phi.map(|x| x * x))?;
    let t = povm.quantize(phi)?;
    Ok(t_sq.sub(&t.square()))
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseReport {
    pub minimal_noise: f64,
    pub argmin_function: ObservableFunction,
    pub gap_crosscheck: f64,
}

/// `1 - γ₁` from the symmetrized Berezin matrix with the constant mode deflated.
pub fn minimal_noise(povm: &FinitePovm) -> Result<NoiseReport> {
    let big_n = povm.len();
    if big_n < 2 {
        return Err(Error::Degenerate("minimal noise needs at least two points".into()));
    }
    let first = povm.state(0);
    if (1..big_n).all(|s| povm.state(s).matrix().max_abs_diff(first.matrix()) < 1e-12) {
        return Err(Error::Degenerate("all states coincide; every observable quantizes to a constant".into()));
    }
    let sqrt_alpha: Vec<f64> = povm.weights().iter().map(|a| a.sqrt()).collect();
    let s = povm.symmetrized_berezin();
    let deflated = RealMatrix::from_fn(big_n, |i, j| s[(i, j)] - sqrt_alpha[i] * sqrt_alpha[j]);
    let eig = deflated.sym_eig()?;
    let top = big_n - 1;
    let v = &eig.vectors[top];
    let phi: Vec<f64> = v.iter().zip(&sqrt_alpha).map(|(x, a)| x / a).collect();
    let gap_crosscheck = berezin_spectrum(povm)?.gap;
    Ok(NoiseReport {
        minimal_noise: 1.0 - eig.values[top],
        argmin_function: ObservableFunction::new(phi),
        gap_crosscheck,
    })
}

/// Rayleigh quotient `((1-ℬ)φ, φ)_α / Var_α(φ)` for a nonconstant `φ`.
pub fn noise_ratio(povm: &FinitePovm, phi: &ObservableFunction) -> Result<f64> {
    let b_phi = povm.berezin_apply(phi)?;
    let num = povm.inner_alpha(phi, phi)? - povm.inner_alpha(&b_phi, phi)?;
    let mean = povm.inner_alpha(phi, &ObservableFunction::constant(povm.len(), 1.0))?;
    let var = povm.inner_alpha(phi, phi)? - mean * mean;
    if var <= 1e-14 * povm.inner_alpha(phi, phi)?.max(1e-300) {
        return Err(Error::Degenerate("observable is constant".into()));
    }
    Ok(num / var)
}

/// `μ_ρ(s) = n α_s tr(F_s ρ)`.
pub fn outcome_distribution(povm: &FinitePovm, rho: &DensityOperator) -> Result<Vec<f64>> {
    let n = povm.dim() as f64;
    (0..povm.len())
        .map(|s| Ok(n * povm.weights()[s] * hs_inner(povm.state(s), rho.operator())?))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VarianceDecomposition {
    /// `Var(φ, μ_ρ)`.
    pub classical: f64,
    /// `Var(T(φ), ρ)`.
    pub quantum: f64,
    /// `((Δ(φ), ρ))`.
    pub noise: f64,
    /// `E_{μ_ρ}(φ)`.
    pub mean: f64,
    /// `((T(φ), ρ))`.
    pub quantum_mean: f64,
}

pub fn variance_decomposition(
    povm: &FinitePovm,
    phi: &ObservableFunction,
    rho: &DensityOperator,
) -> Result<VarianceDecomposition> {
    let mu = outcome_distribution(povm, rho)?;
    if phi.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            found: phi.len(),
        });
    }
    let mean: f64 = mu.iter().zip(phi.values()).map(|(m, x)| m * x).sum();
    let second: f64 = mu.iter().zip(phi.values()).map(|(m, x)| m * x * x).sum();
    let a = povm.quantize(phi)?;
    let quantum_mean = hs_inner(&a, rho.operator())?;
    let quantum = hs_inner(&a.square(), rho.operator())? - quantum_mean * quantum_mean;
    let noise = hs_inner(&noise_operator(povm, phi)?, rho.operator())?;
    Ok(VarianceDecomposition {
        classical: second - mean * mean,
        quantum,
        noise,
        mean,
        quantum_mean,
    })
}

/// Repeated Lüders measurement as a Markov chain on the outcomes.
#[derive(Clone, Debug)]
pub struct MeasurementChain {
    transition: RealMatrix,
    stationary: Vec<f64>,
}

impl MeasurementChain {
    pub fn transition(&self) -> &RealMatrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn len(&self) -> usize {
        self.stationary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stationary.is_empty()
    }

    pub fn max_row_sum_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.transition.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_balance_defect(&self) -> f64 {
        let a = &self.stationary;
        let p = &self.transition;
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                worst = worst.max((a[i] * p[(i, j)] - a[j] * p[(j, i)]).abs());
            }
        }
        worst
    }

    /// Descending spectrum via the symmetrization `D^{1/2} P D^{-1/2}`.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let s: Vec<f64> = self.stationary.iter().map(|a| a.sqrt()).collect();
        let sym = RealMatrix::from_fn(self.len(), |i, j| {
            0.5 * (s[i] * self.transition[(i, j)] / s[j] + s[j] * self.transition[(j, i)] / s[i])
        });
        let mut v = sym.sym_eigvals()?;
        v.reverse();
        Ok(v)
    }

    /// Distribution after `k` steps from `start`.
    pub fn distribution_after(&self, start: usize, k: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        d[start] = 1.0;
        for _ in 0..k {
            d = self.transition.vecmat(&d);
        }
        d
    }
}

/// `P[i][j] = n α_j ((F_i, F_j))`; requires a pure POVM.
pub fn lueders_chain(povm: &FinitePovm) -> Result<MeasurementChain> {
    let purity = povm.purity()?;
    if !purity.is_pure {
        return Err(Error::NotPure(format!("rank excess {:e}", purity.max_rank_excess)));
    }
    let n = povm.dim() as f64;
    let alpha = povm.weights();
    let transition = RealMatrix::from_fn(povm.len(), |i, j| n * alpha[j] * povm.overlap(i, j));
    Ok(MeasurementChain {
        transition,
        stationary: alpha.to_vec(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerConvergence {
    /// `‖ℰ^k(ρ₀) - 𝟙/n‖₂` for `k = 0..=k_max`.
    pub norms: Vec<f64>,
    pub fitted_rate: Option<f64>,
    pub gamma1: f64,
}

/// Geometric rate of a decaying sequence: drops the first 20% and everything after
/// the values reach [`NORM_FLOOR`].
pub fn fit_geometric_rate(norms: &[f64]) -> Option<f64> {
    let end = norms.iter().position(|&v| v < NORM_FLOOR).unwrap_or(norms.len());
    let start = (norms.len() as f64 * TRANSIENT_FRACTION).ceil() as usize;
    if end <= start {
        return None;
    }
    let pts: Vec<(f64, f64)> = (start..end).map(|k| (k as f64, norms[k].ln())).collect();
    least_squares_slope(&pts).map(f64::exp)
}

pub fn channel_power_convergence(
    povm: &FinitePovm,
    rho0: &DensityOperator,
    k_max: usize,
) -> Result<PowerConvergence> {
    if rho0.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho0.dim(),
        });
    }
    let eigs = berezin_eigenvalues(povm)?;
    let gamma1 = eigs.get(1).copied().unwrap_or(0.0);
    if 1.0 - gamma1 < ZERO_GAP_TOL {
        return Err(Error::ZeroGap(format!("gap {:e}; no convergence to the maximally mixed state", 1.0 - gamma1)));
    }
    let mixed = DensityOperator::maximally_mixed(povm.dim());
    let mut a = rho0.operator().clone();
    let mut norms = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            a = povm.channel(&a)?;
        }
        norms.push(a.sub(mixed.operator()).hs_norm());
    }
    Ok(PowerConvergence {
        fitted_rate: fit_geometric_rate(&norms),
        norms,
        gamma1,
    })
}

/// Single trajectory of `steps` transitions from `start`; the start is included.
pub fn simulate_trajectory(chain: &MeasurementChain, start: usize, steps: usize, seed: u64) -> Result<Vec<usize>> {
    let samplers = row_samplers(chain)?;
    check_start(chain, start)?;
    Ok(run(&samplers, start, steps, seed))
}

fn check_start(chain: &MeasurementChain, start: usize) -> Result<()> {
    if start >= chain.len() {
        return Err(Error::InvalidArgument(format!(
            "start state {start} out of range (chain has {} states)",
            chain.len()
        )));
    }
    Ok(())
}

fn row_samplers(chain: &MeasurementChain) -> Result<Vec<WeightedIndex<f64>>> {
    (0..chain.len())
        .map(|i| {
            let row: Vec<f64> = chain.transition.row(i).iter().map(|x| x.max(0.0)).collect();
            WeightedIndex::new(row).map_err(|e| Error::InvalidArgument(format!("row {i}: {e}")))
        })
        .collect()
}

fn run(samplers: &[WeightedIndex<f64>], start: usize, steps: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = start;
    path.push(x);
    for _ in 0..steps {
        x = samplers[x].sample(&mut rng);
        path.push(x);
    }
    path
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleReport {
    pub seed: u64,
    pub runs: usize,
    pub steps: usize,
    pub start: usize,
    /// `counts[k][j]`: trajectories in state `j` after `k` steps.
    pub counts: Vec<Vec<u64>>,
    /// Total variation between the empirical distribution at step `k` and `α`.
    pub tv_to_stationary: Vec<f64>,
    /// Same for the exact distribution `δ_start P^k`.
    pub exact_tv_to_stationary: Vec<f64>,
}

/// `runs` independent trajectories; trajectory `i` uses seed `seed ^ i`.
pub fn simulate_ensemble(
    chain: &MeasurementChain,
    start: usize,
    steps: usize,
    runs: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    check_start(chain, start)?;
    let samplers = row_samplers(chain)?;
    let m = chain.len();
    let empty = || vec![vec![0u64; m]; steps + 1];
    let counts = (0..runs)
        .into_par_iter()
        .fold(empty, |mut acc, i| {
            for (k, &x) in run(&samplers, start, steps, seed ^ i as u64).iter().enumerate() {
                acc[k][x] += 1;
            }
            acc
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(&b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    let tv = |d: &[f64]| 0.5 * d.iter().zip(&chain.stationary).map(|(x, a)| (x - a).abs()).sum::<f64>();
    let tv_to_stationary = counts
        .iter()
        .map(|row| {
            let d: Vec<f64> = row.iter().map(|&c| c as f64 / runs.max(1) as f64).collect();
            tv(&d)
        })
        .collect();
    let mut exact = vec![0.0; m];
    exact[start] = 1.0;
    let mut exact_tv = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        if k > 0 {
            exact = chain.transition.vecmat(&exact);
        }
        exact_tv.push(tv(&exact));
    }
    Ok(EnsembleReport {
        seed,
        runs,
        steps,
        start,
        counts,
        tv_to_stationary,
        exact_tv_to_stationary: exact_tv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_density, random_povm, random_unit_vector, PovmKind};
    use crate::cp1::build_cp1_povm;
    use crate::operator::projector_onto;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_phi(rng: &mut ChaCha8Rng, len: usize) -> ObservableFunction {
        ObservableFunction::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn noise_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = random_povm(&mut rng, 3, 9, PovmKind::Pure).unwrap();
        let c = noise_operator(&p, &ObservableFunction::constant(9, 2.5)).unwrap();
        assert!(c.hs_norm() < 1e-12);
        let proj = FinitePovm::projective_basis(4);
        let d = noise_operator(&proj, &random_phi(&mut rng, 4)).unwrap();
        assert!(d.hs_norm() < 1e-12);
        let d = noise_operator(&p, &random_phi(&mut rng, 9)).unwrap();
        assert!(d.min_eigenvalue().unwrap() >= -1e-9);
    }

    #[test]
    fn minimal_noise_examples() {
        let r = minimal_noise(&build_cp1_povm(2).unwrap()).unwrap();
        assert!((r.minimal_noise - 0.5).abs() < 1e-9);
        let r = minimal_noise(&FinitePovm::projective_basis(3)).unwrap();
        assert!(r.minimal_noise.abs() < 1e-10);
        assert!(minimal_noise(&FinitePovm::single_point(3)).is_err());
    }

    #[test]
    fn minimal_noise_matches_gap_and_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..30 {
            let n = rng.gen_range(2..=4);
            let big_n = rng.gen_range(n + 1..=3 * n + 3);
            let p = random_povm(&mut rng, n, big_n, PovmKind::Mixed).unwrap();
            let r = minimal_noise(&p).unwrap();
            assert!((r.minimal_noise - r.gap_crosscheck).abs() < 1e-9);
            assert!(r.minimal_noise >= -1e-10);
            let at_min = noise_ratio(&p, &r.argmin_function).unwrap();
            assert!((at_min - r.minimal_noise).abs() < 1e-8);
            let other = noise_ratio(&p, &random_phi(&mut rng, big_n)).unwrap();
            assert!(other >= r.minimal_noise - 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn variance_decomposition_holds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=4);
            let p = random_povm(&mut rng, n, n + 5, PovmKind::Pure).unwrap();
            let rho = projector_onto(&random_unit_vector(&mut rng, n)).unwrap();
            let phi = random_phi(&mut rng, n + 5);
            let v = variance_decomposition(&p, &phi, &rho).unwrap();
            prop_assert!((v.classical - v.quantum - v.noise).abs() < 1e-9);
            prop_assert!((v.mean - v.quantum_mean).abs() < 1e-10);
        }

        #[test]
        fn chain_is_reversible_with_berezin_spectrum(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=4);
            let p = random_povm(&mut rng, n, n + 4, PovmKind::Pure).unwrap();
            let chain = lueders_chain(&p).unwrap();
            prop_assert!(chain.max_row_sum_defect() < 1e-10);
            prop_assert!(chain.max_balance_defect() < 1e-10);
            let a = chain.spectrum().unwrap();
            let b = berezin_eigenvalues(&p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn outcome_distribution_is_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = random_povm(&mut rng, 3, 7, PovmKind::Mixed).unwrap();
        let rho = random_density(&mut rng, 3, 2);
        let mu = outcome_distribution(&p, &rho).unwrap();
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(mu.iter().all(|&x| x >= -1e-14));
    }

    #[test]
    fn lueders_requires_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut mixed = random_povm(&mut rng, 3, 6, PovmKind::Mixed).unwrap();
        while mixed.purity().unwrap().is_pure {
            mixed = random_povm(&mut rng, 3, 6, PovmKind::Mixed).unwrap();
        }
        assert!(matches!(lueders_chain(&mixed), Err(Error::NotPure(_))));
        let chain = lueders_chain(&FinitePovm::projective_basis(3)).unwrap();
        assert!(chain.transition().max_abs_diff(&RealMatrix::identity(3)) < 1e-14);
        assert_eq!(simulate_trajectory(&chain, 1, 20, 5).unwrap(), vec![1; 21]);
    }

    #[test]
    fn power_convergence() {
        let p = build_cp1_povm(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let rho = projector_onto(&random_unit_vector(&mut rng, 5)).unwrap();
        let r = channel_power_convergence(&p, &rho, 60).unwrap();
        let rate = r.fitted_rate.unwrap();
        assert!((rate - 2.0 / 3.0).abs() < 0.1 * 2.0 / 3.0);
        let fixed = channel_power_convergence(&p, &DensityOperator::maximally_mixed(5), 10).unwrap();
        assert!(fixed.norms.iter().all(|&x| x < 1e-14));
        assert!(fixed.fitted_rate.is_none());
        let single = channel_power_convergence(&FinitePovm::single_point(3), &random_density(&mut rng, 3, 1), 3).unwrap();
        assert!(single.norms[1] < 1e-14);
        let proj = FinitePovm::projective_basis(2);
        assert!(matches!(
            channel_power_convergence(&proj, &random_density(&mut rng, 2, 1), 3),
            Err(Error::ZeroGap(_))
        ));
    }

    #[test]
    fn ensemble_matches_exact_distribution() {
        let chain = lueders_chain(&build_cp1_povm(2).unwrap()).unwrap();
        let runs = 10_000;
        let steps = 30;
        let r = simulate_ensemble(&chain, 0, steps, runs, 42).unwrap();
        for k in [1, 2, 5, 30] {
            let exact = chain.distribution_after(0, k);
            for (j, &c) in r.counts[k].iter().enumerate() {
                let p = exact[j];
                let sigma = (p * (1.0 - p) / runs as f64).sqrt();
                assert!((c as f64 / runs as f64 - p).abs() <= 4.0 * sigma + 1e-12, "k={k} j={j}");
            }
        }
        // Reversible chain with nonnegative spectrum: TV ≤ ½ sqrt(1/α_start) γ₁^k.
        let bound = 0.5 / chain.stationary()[0].sqrt();
        for k in 1..=steps {
            assert!(r.exact_tv_to_stationary[k] <= bound * 0.5f64.powi(k as i32) + 1e-12);
        }
        let again = simulate_ensemble(&chain, 0, steps, runs, 42).unwrap();
        assert_eq!(again.counts, r.counts);
        assert_eq!(
            simulate_trajectory(&chain, 3, 50, 9).unwrap(),
            simulate_trajectory(&chain, 3, 50, 9).unwrap()
        );
    }
}
