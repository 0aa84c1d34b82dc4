//! Donaldson's map `T_ν` on positive Hermitian matrices, its Lyapunov
//! functional `Ψ_ν`, the iteration to a balanced product, and the
//! finite-difference linearization at a fixed point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{
    cholesky, cholesky_solve, orthonormal_span, projector_onto, rank_of, vec_inner, vec_norm,
    CMatrix, HermitianBasis, HermitianOperator, RealMatrix, C64,
};
use crate::povm::FinitePovm;

/// Relative defect `‖T(G) - G‖/‖G‖` accepted as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Relative tolerance for rank decisions on point sets.
pub const RANK_TOL: f64 = 1e-10;
/// Largest allowed disagreement between step `h` and `h/2` derivatives.
pub const RICHARDSON_TOL: f64 = 1e-3;
/// Size caps for the exhaustive subspace check.
pub const SPADE_MAX_DIM: usize = 4;
pub const SPADE_MAX_POINTS: usize = 12;

/// Finite atomic measure `ν = Σ ν_i δ_{z_i}` on `ℂⁿ \ {0}`.
#[derive(Clone, Debug)]
pub struct PointMeasure {
    dim: usize,
    points: Vec<Vec<C64>>,
    masses: Vec<f64>,
}

impl PointMeasure {
    pub fn new(dim: usize, points: Vec<Vec<C64>>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point measure has no points".into()));
        }
        if points.len() != masses.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                found: masses.len(),
            });
        }
        for (i, z) in points.iter().enumerate() {
            if z.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: z.len(),
                });
            }
            if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
            if vec_norm(z) == 0.0 {
                return Err(Error::ZeroVector);
            }
        }
        for (index, &m) in masses.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::NonPositiveWeight { index, weight: m });
            }
        }
        Ok(PointMeasure {
            dim,
            points,
            masses,
        })
    }

    /// Unit masses on the standard basis lines.
    pub fn basis_lines(n: usize) -> Self {
        let points = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        Self::new(n, points, vec![1.0; n]).expect("basis lines are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<C64>] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|ν|`.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn rank(&self) -> usize {
        rank_of(&self.points, RANK_TOL)
    }

    fn check_spanning(&self) -> Result<()> {
        let rank = self.rank();
        if rank < self.dim {
            return Err(Error::NotSpanning {
                rank,
                dim: self.dim,
            });
        }
        Ok(())
    }
}

/// Strictly positive definite Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveProduct(HermitianOperator);

impl PositiveProduct {
    pub fn new(g: HermitianOperator) -> Result<Self> {
        cholesky(g.matrix())?;
        Ok(PositiveProduct(g))
    }

    pub fn identity(n: usize) -> Self {
        PositiveProduct(HermitianOperator::identity(n))
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn det(&self) -> f64 {
        log_det(self.0.matrix()).map(f64::exp).unwrap_or(f64::NAN)
    }

    /// Rescaled to determinant one.
    pub fn normalize_det(&self) -> Result<Self> {
        let ld = log_det(self.0.matrix())?;
        let c = (-ld / self.dim() as f64).exp();
        Ok(PositiveProduct(self.0.scale(c)))
    }
}

fn log_det(g: &CMatrix) -> Result<f64> {
    let l = cholesky(g)?;
    Ok((0..g.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

fn check_dims(g: &PositiveProduct, nu: &PointMeasure) -> Result<()> {
    if g.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            found: g.dim(),
        });
    }
    Ok(())
}

/// `T_ν` on an arbitrary Hermitian `G`, without positivity checks on the output.
fn t_nu_raw(g: &CMatrix, nu: &PointMeasure) -> Result<CMatrix> {
    let n = nu.dim();
    let l = cholesky(g)?;
    let r = n as f64 / nu.total_mass();
    let mut out = CMatrix::zeros(n);
    for (z, &m) in nu.points.iter().zip(&nu.masses) {
        let q = vec_inner(&cholesky_solve(&l, z), z).re;
        out.add_scaled(r * m / q, &CMatrix::outer(z, z));
    }
    Ok(out)
}

/// `T_ν(G) = R_ν Σ ν_i z_i z_i* / ⟨G⁻¹ z_i, z_i⟩`, `R_ν = n/|ν|`.
pub fn t_nu_step(g: &PositiveProduct, nu: &PointMeasure) -> Result<PositiveProduct> {
    check_dims(g, nu)?;
    let out = HermitianOperator::from_computed(t_nu_raw(g.0.matrix(), nu)?);
    match cholesky(out.matrix()) {
        Ok(_) => Ok(PositiveProduct(out)),
        Err(_) => Err(Error::NotSpanning {
            rank: nu.rank(),
            dim: nu.dim(),
        }),
    }
}

/// `Ψ_ν(G) = Σ ν_i log⟨G⁻¹ẑ_i, ẑ_i⟩ + (|ν|/n) log det G`.
pub fn psi_functional(g: &PositiveProduct, nu: &PointMeasure) -> Result<f64> {
    check_dims(g, nu)?;
    let l = cholesky(g.0.matrix())?;
    let mut acc = 0.0;
    for (z, &m) in nu.points.iter().zip(&nu.masses) {
        let norm2 = vec_norm(z).powi(2);
        let q = vec_inner(&cholesky_solve(&l, z), z).re / norm2;
        acc += m * q.ln();
    }
    let ld: f64 = (0..g.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    Ok(acc + nu.total_mass() / g.dim() as f64 * ld)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationTrace {
    /// `G_0, G_1, …`, all with determinant one.
    #[serde(skip)]
    pub iterates: Vec<PositiveProduct>,
    /// `Ψ_ν(G_r)`.
    pub psi_values: Vec<f64>,
    /// `‖T(G_r) - G_r‖₂`.
    pub step_distances: Vec<f64>,
    /// `det T(G_r)` before renormalization.
    pub det_before_norm: Vec<f64>,
    pub converged: bool,
    /// `exp` of the least-squares slope of `log step_distances` over the final third.
    pub fitted_rate: Option<f64>,
}

impl IterationTrace {
    pub fn limit(&self) -> &PositiveProduct {
        self.iterates.last().expect("trace holds the starting point")
    }

    /// Largest increase of `Ψ` between consecutive iterates.
    pub fn max_psi_increase(&self) -> f64 {
        self.psi_values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares slope of `log y` against the index, over the final third.
pub fn fit_rate_final_third(values: &[f64]) -> Option<f64> {
    let positive: Vec<f64> = values.iter().copied().take_while(|&v| v > 0.0).collect();
    let start = positive.len() - positive.len() / 3;
    let tail: Vec<(f64, f64)> = positive[start.min(positive.len())..]
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64, v.ln()))
        .collect();
    least_squares_slope(&tail).map(f64::exp)
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Iterates `G_{r+1} = normalize_det(T(G_r))` until `‖T(G_r) - G_r‖/‖G_r‖ < tol`.
pub fn iterate_to_balance(
    nu: &PointMeasure,
    g0: &PositiveProduct,
    tol: f64,
    max_iter: usize,
) -> Result<IterationTrace> {
    check_dims(g0, nu)?;
    nu.check_spanning()?;
    let mut g = g0.normalize_det()?;
    let mut trace = IterationTrace {
        iterates: vec![g.clone()],
        psi_values: Vec::new(),
        step_distances: Vec::new(),
        det_before_norm: Vec::new(),
        converged: false,
        fitted_rate: None,
    };
    for _ in 0..max_iter {
        let t = t_nu_step(&g, nu)?;
        let dist = t.0.sub(&g.0).hs_norm();
        trace.psi_values.push(psi_functional(&g, nu)?);
        trace.step_distances.push(dist);
        trace.det_before_norm.push(t.det());
        if dist / g.0.hs_norm() < tol {
            trace.converged = true;
            break;
        }
        g = t.normalize_det()?;
        trace.iterates.push(g.clone());
    }
    trace.fitted_rate = fit_rate_final_third(&trace.step_distances);
    Ok(trace)
}

/// `‖T(G) - G‖/‖G‖`.
pub fn fixed_point_defect(nu: &PointMeasure, g: &PositiveProduct) -> Result<f64> {
    let t = t_nu_step(g, nu)?;
    Ok(t.0.sub(&g.0).hs_norm() / g.0.hs_norm())
}

/// POVM with states `Π_{w_i}`, `w_i = G^{-1/2} z_i`, and weights `ν_i/|ν|`.
pub fn balanced_povm(nu: &PointMeasure, g: &PositiveProduct) -> Result<FinitePovm> {
    check_dims(g, nu)?;
    let defect = fixed_point_defect(nu, g)?;
    if defect > FIXED_POINT_TOL {
        return Err(Error::NotFixedPoint {
            defect,
            tolerance: FIXED_POINT_TOL,
        });
    }
    let g_inv_half = g.0.apply_spectral(|x| x.powf(-0.5))?;
    let states = nu
        .points
        .iter()
        .map(|z| projector_onto(&g_inv_half.matrix().matvec(z)))
        .collect::<Result<Vec<_>>>()?;
    let total = nu.total_mass();
    let weights = nu.masses.iter().map(|m| m / total).collect();
    FinitePovm::new(FinitePovm::default_labels(nu.len()), states, weights)
}

/// Central-difference derivative of `T_ν` at `G` along `H_b = G^{1/2} B_b G^{1/2}`,
/// read back in the frame `G^{-1/2} · G^{-1/2}`, for each Hermitian basis element `B_b`.
///
/// At a fixed point this equals the channel matrix of [`balanced_povm`].
pub fn linearization_fd(nu: &PointMeasure, g: &PositiveProduct, h: f64) -> Result<RealMatrix> {
    check_dims(g, nu)?;
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h:e} outside [1e-6, 1e-4]"
        )));
    }
    let coarse = fd_matrix(nu, g, h)?;
    let fine = fd_matrix(nu, g, h / 2.0)?;
    let disagreement = coarse.max_abs_diff(&fine);
    if disagreement > RICHARDSON_TOL {
        return Err(Error::FiniteDifference(format!(
            "steps {h:e} and {:e} disagree by {disagreement:e}",
            h / 2.0
        )));
    }
    Ok(coarse)
}

fn fd_matrix(nu: &PointMeasure, g: &PositiveProduct, h: f64) -> Result<RealMatrix> {
    let n = nu.dim();
    let basis = HermitianBasis::new(n);
    let g_half = g.0.apply_spectral(f64::sqrt)?;
    let g_inv_half = g.0.apply_spectral(|x| 1.0 / x.sqrt())?;
    let d = basis.len();
    let mut out = RealMatrix::zeros(d);
    for b in 0..d {
        let dir = basis.element(b).conjugate_by(g_half.matrix());
        let plus = g.0.matrix() + &dir.matrix().scale(h);
        let minus = g.0.matrix() - &dir.matrix().scale(h);
        let tp = t_nu_raw(&plus, nu)?;
        let tm = t_nu_raw(&minus, nu)?;
        let deriv = (&tp - &tm).scale(0.5 / h);
        let framed = &(g_inv_half.matrix() * &deriv) * g_inv_half.matrix();
        let col = basis.coords(&framed);
        for (k, v) in col.into_iter().enumerate() {
            out[(k, b)] = v;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpadeReport {
    pub spanning: bool,
    /// Strict inequality `ν(Σ)/dim Σ < |ν|/n` over every proper subspace spanned by points.
    pub exact: Option<bool>,
}

/// Spanning test, and optionally the exhaustive subspace inequality.
pub fn check_spade(nu: &PointMeasure, exact: bool) -> Result<SpadeReport> {
    let spanning = nu.rank() == nu.dim();
    if !exact {
        return Ok(SpadeReport {
            spanning,
            exact: None,
        });
    }
    if nu.dim() > SPADE_MAX_DIM || nu.len() > SPADE_MAX_POINTS {
        return Err(Error::SizeCap(format!(
            "exact subspace check limited to n <= {SPADE_MAX_DIM}, N <= {SPADE_MAX_POINTS} (got n = {}, N = {})",
            nu.dim(),
            nu.len()
        )));
    }
    let n = nu.dim();
    let big_n = nu.len();
    let bound = nu.total_mass() / n as f64;
    let mut ok = true;
    'subsets: for mask in 1u32..(1u32 << big_n) {
        let subset: Vec<Vec<C64>> = (0..big_n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| nu.points[i].clone())
            .collect();
        let span = orthonormal_span(&subset, RANK_TOL);
        let k = span.len();
        if k == 0 || k >= n {
            continue;
        }
        // Mass of every point lying in the span, not only those in the subset.
        let mut mass = 0.0;
        for (z, &m) in nu.points.iter().zip(&nu.masses) {
            let mut r = z.clone();
            for q in &span {
                let c = vec_inner(&r, q);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
            if vec_norm(&r) <= 1e-9 * vec_norm(z) {
                mass += m;
            }
        }
        if mass / k as f64 >= bound {
            ok = false;
            break 'subsets;
        }
    }
    Ok(SpadeReport {
        spanning,
        exact: Some(spanning && ok),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{random_point_measure, random_positive};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn spanning_instance(seed: u64, n: usize, n_points: usize) -> PointMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let nu = random_point_measure(&mut rng, n, n_points);
            if check_spade(&nu, true).unwrap().exact == Some(true) {
                return nu;
            }
        }
    }

    #[test]
    fn basis_lines_identity_is_fixed() {
        let nu = PointMeasure::basis_lines(3);
        let t = t_nu_step(&PositiveProduct::identity(3), &nu).unwrap();
        assert!(t.operator().sub(&HermitianOperator::identity(3)).hs_norm() < 1e-15);
        let p = balanced_povm(&nu, &PositiveProduct::identity(3)).unwrap();
        assert_eq!(p.berezin_matrix(), RealMatrix::identity(3));
    }

    #[test]
    fn basis_lines_fix_every_diagonal_product() {
        let nu = PointMeasure::basis_lines(3);
        let g0 = PositiveProduct::new(HermitianOperator::from_real_diag(&[2.0, 1.0, 1.0])).unwrap();
        let trace = iterate_to_balance(&nu, &g0, 1e-12, 100).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.step_distances.len(), 1);
        let want = HermitianOperator::from_real_diag(&[2.0, 1.0, 1.0]).scale(2f64.powf(-1.0 / 3.0));
        assert!(trace.limit().operator().sub(&want).hs_norm() < 1e-14);
    }

    #[test]
    fn psi_minimized_at_identity_on_diagonal_scan() {
        let nu = PointMeasure::basis_lines(2);
        let at_one = psi_functional(&PositiveProduct::identity(2), &nu).unwrap();
        for k in 1..40 {
            let t = -2.0 + 0.1 * k as f64;
            if t.abs() < 1e-12 {
                continue;
            }
            let g = PositiveProduct::new(HermitianOperator::from_real_diag(&[t.exp(), (-t).exp()])).unwrap();
            assert!(psi_functional(&g, &nu).unwrap() >= at_one - 1e-14);
        }
    }

    #[test]
    fn linearization_on_basis_lines_projects_to_diagonal() {
        let nu = PointMeasure::basis_lines(3);
        let l = linearization_fd(&nu, &PositiveProduct::identity(3), 1e-5).unwrap();
        let mut want = RealMatrix::zeros(9);
        for i in 0..3 {
            want[(i, i)] = 1.0;
        }
        assert!(l.max_abs_diff(&want) < 1e-8);
        assert!(linearization_fd(&nu, &PositiveProduct::identity(3), 1e-8).is_err());
    }

    #[test]
    fn spade_examples() {
        let r = check_spade(&PointMeasure::basis_lines(3), true).unwrap();
        assert!(r.spanning);
        // Each basis line carries exactly the critical mass |ν|/n: equality, not strict.
        assert_eq!(r.exact, Some(false));

        let p = vec![c(1.0), c(2.0), c(-1.0)];
        let line = PointMeasure::new(3, vec![p.clone(), p.iter().map(|z| z * 3.0).collect()], vec![1.0, 1.0]).unwrap();
        assert!(!check_spade(&line, false).unwrap().spanning);

        let two = PointMeasure::new(2, vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]], vec![3.0, 1.0]).unwrap();
        assert_eq!(check_spade(&two, true).unwrap().exact, Some(false));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let big = random_point_measure(&mut rng, 5, 8);
        assert!(matches!(check_spade(&big, true), Err(Error::SizeCap(_))));
    }

    #[test]
    fn non_spanning_rejected() {
        let p = vec![c(1.0), c(0.0), c(0.0)];
        let q = vec![c(0.0), c(1.0), c(0.0)];
        let nu = PointMeasure::new(3, vec![p, q], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            iterate_to_balance(&nu, &PositiveProduct::identity(3), 1e-12, 10),
            Err(Error::NotSpanning { rank: 2, dim: 3 })
        ));
        assert!(t_nu_step(&PositiveProduct::identity(3), &nu).is_err());
    }

    #[test]
    fn random_instance_converges_and_balances() {
        let nu = spanning_instance(21, 3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let trace = iterate_to_balance(&nu, &random_positive(&mut rng, 3, 4.0), 1e-12, 500).unwrap();
        assert!(trace.converged);
        assert!(trace.max_psi_increase() <= 1e-10);
        let p = balanced_povm(&nu, trace.limit()).unwrap();
        assert!(p.validate().resolution_defect <= 1e-9);
        assert!(p.purity().unwrap().is_pure);
        let fd = linearization_fd(&nu, trace.limit(), 1e-5).unwrap();
        assert!(fd.max_abs_diff(&p.channel_matrix()) < 1e-5);
    }

    #[test]
    fn fixed_point_unique_up_to_scale() {
        let nu = spanning_instance(31, 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = iterate_to_balance(&nu, &random_positive(&mut rng, 3, 5.0), 1e-13, 2000).unwrap();
        let b = iterate_to_balance(&nu, &random_positive(&mut rng, 3, 5.0), 1e-13, 2000).unwrap();
        assert!(a.converged && b.converged);
        assert!(a.limit().operator().sub(b.limit().operator()).hs_norm() < 1e-8);
    }

    #[test]
    fn not_fixed_point_rejected() {
        let nu = spanning_instance(41, 2, 5);
        let g = PositiveProduct::new(HermitianOperator::from_real_diag(&[3.0, 1.0])).unwrap();
        assert!(matches!(balanced_povm(&nu, &g), Err(Error::NotFixedPoint { .. })));
    }

    #[test]
    fn homogeneity_direction_has_eigenvalue_one() {
        let nu = spanning_instance(51, 2, 6);
        let trace = iterate_to_balance(&nu, &PositiveProduct::identity(2), 1e-13, 2000).unwrap();
        let fd = linearization_fd(&nu, trace.limit(), 1e-5).unwrap();
        // 𝟙 in basis coordinates.
        let one = [1.0, 1.0, 0.0, 0.0];
        let image = fd.matvec(&one);
        for (x, y) in image.iter().zip(one) {
            assert!((x - y).abs() < 1e-7);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn step_identities(seed in any::<u64>(), n in 1usize..=4, extra in 0usize..6, scale in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nu = random_point_measure(&mut rng, n, n + extra);
            let g = random_positive(&mut rng, n, 3.0);
            let t = t_nu_step(&g, &nu).unwrap();
            // Homogeneity.
            let cg = PositiveProduct::new(g.operator().scale(scale)).unwrap();
            let tc = t_nu_step(&cg, &nu).unwrap();
            prop_assert!(tc.operator().sub(&t.operator().scale(scale)).hs_norm() < 1e-9 * t.operator().hs_norm() * scale);
            // tr(T(G) G⁻¹) = n.
            let ginv = g.operator().apply_spectral(|x| 1.0 / x).unwrap();
            let tr = (t.operator().matrix() * ginv.matrix()).trace().re;
            prop_assert!((tr - n as f64).abs() < 1e-9);
            // Ψ scale invariance and descent.
            let psi = psi_functional(&g, &nu).unwrap();
            prop_assert!((psi_functional(&cg, &nu).unwrap() - psi).abs() < 1e-9 * (1.0 + psi.abs()));
            prop_assert!(psi_functional(&t, &nu).unwrap() <= psi + 1e-10);
        }
    }
}
