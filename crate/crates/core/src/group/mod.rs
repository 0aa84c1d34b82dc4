//! POVMs built from irreducible unitary representations of finite groups,
//! their Berezin spectra via characters, and vanishing-off subgroups.

pub mod catalog;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{projector_onto, CMatrix, RealMatrix, C64};
use crate::povm::FinitePovm;

/// Tolerance for homomorphism and unitarity checks.
pub const REP_TOL: f64 = 1e-10;
/// Tolerance for character orthogonality.
pub const TABLE_TOL: f64 = 1e-8;
/// `|χ(s)|` above this counts as nonvanishing.
pub const SUPPORT_TOL: f64 = 1e-9;
/// `gap < GAP_ZERO_TOL` is reported as a zero gap.
pub const GAP_ZERO_TOL: f64 = 1e-8;
/// Coinciding eigenvalues from different irreps are merged within this.
pub const MERGE_TOL: f64 = 1e-8;

/// Finite group given by its multiplication table; element 0 need not be the identity.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    mult: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
    classes: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl FiniteGroup {
    /// Validates the table and computes inverses and conjugacy classes.
    pub fn new(mult: Vec<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let m = mult.len();
        if m == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        for row in &mult {
            if row.len() != m || row.iter().any(|&x| x >= m) {
                return Err(Error::InvalidGroup("table is not an m x m table over 0..m".into()));
            }
        }
        let identity = (0..m)
            .find(|&e| (0..m).all(|x| mult[e][x] == x && mult[x][e] == x))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![0; m];
        for (x, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..m)
                .find(|&y| mult[x][y] == identity && mult[y][x] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {x} has no inverse")))?;
        }
        // Full associativity check; m ≤ 64 keeps this under 300k products.
        let check_all = m <= 64;
        let step = if check_all { 1 } else { (m / 16).max(1) };
        for a in (0..m).step_by(step) {
            for b in (0..m).step_by(step) {
                for c in (0..m).step_by(step) {
                    if mult[mult[a][b]][c] != mult[a][mult[b][c]] {
                        return Err(Error::InvalidGroup(format!("({a}{b}){c} != {a}({b}{c})")));
                    }
                }
            }
        }
        let mut class_of = vec![usize::MAX; m];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for x in 0..m {
            if class_of[x] != usize::MAX {
                continue;
            }
            let mut class: Vec<usize> = (0..m).map(|g| mult[mult[g][x]][inverse[g]]).collect();
            class.sort_unstable();
            class.dedup();
            for &y in &class {
                class_of[y] = classes.len();
            }
            classes.push(class);
        }
        let labels = match labels {
            Some(l) if l.len() == m => l,
            Some(l) => {
                return Err(Error::LengthMismatch {
                    expected: m,
                    found: l.len(),
                })
            }
            None => (0..m).map(|i| i.to_string()).collect(),
        };
        Ok(FiniteGroup {
            mult,
            inverse,
            identity,
            classes,
            labels,
        })
    }

    /// Like [`FiniteGroup::new`], additionally checking supplied classes against conjugacy.
    pub fn with_classes(mult: Vec<Vec<usize>>, classes: &[Vec<usize>]) -> Result<Self> {
        let g = Self::new(mult, None)?;
        let mut want: Vec<Vec<usize>> = g.classes.clone();
        let mut got: Vec<Vec<usize>> = classes
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        want.sort();
        got.sort();
        if want != got {
            return Err(Error::InvalidGroup("supplied classes are not the conjugacy classes".into()));
        }
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mult_table(&self) -> &[Vec<usize>] {
        &self.mult
    }

    /// Smallest subgroup containing `gens`.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.order()];
        inside[self.identity] = true;
        let mut members = vec![self.identity];
        for &g in gens {
            if !inside[g] {
                inside[g] = true;
                members.push(g);
            }
        }
        let mut frontier = members.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &a in &frontier {
                for k in 0..members.len() {
                    let b = members[k];
                    for p in [self.mul(a, b), self.mul(b, a)] {
                        if !inside[p] {
                            inside[p] = true;
                            members.push(p);
                            next.push(p);
                        }
                    }
                }
            }
            frontier = next;
        }
        members.sort_unstable();
        members
    }

    pub fn is_normal(&self, subgroup: &[usize]) -> bool {
        let mut inside = vec![false; self.order()];
        for &h in subgroup {
            inside[h] = true;
        }
        (0..self.order()).all(|g| subgroup.iter().all(|&h| inside[self.mul(self.mul(g, h), self.inv(g))]))
    }
}

/// Unitary representation `s ↦ ρ(s)`.
#[derive(Clone, Debug)]
pub struct UnitaryRep {
    degree: usize,
    matrices: Vec<CMatrix>,
}

impl UnitaryRep {
    pub fn new(group: &FiniteGroup, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() != group.order() {
            return Err(Error::LengthMismatch {
                expected: group.order(),
                found: matrices.len(),
            });
        }
        let d = matrices[0].dim();
        if d == 0 {
            return Err(Error::InvalidRepresentation("degree zero".into()));
        }
        for m in &matrices {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.dim(),
                });
            }
            m.check_finite()?;
            let defect = (m * &m.adjoint()).max_abs_diff(&CMatrix::identity(d));
            if defect > REP_TOL {
                return Err(Error::InvalidRepresentation(format!("matrix not unitary (defect {defect:e})")));
            }
        }
        for a in 0..group.order() {
            for b in 0..group.order() {
                let defect = (&matrices[a] * &matrices[b]).max_abs_diff(&matrices[group.mul(a, b)]);
                if defect > REP_TOL {
                    return Err(Error::InvalidRepresentation(format!(
                        "ρ({a})ρ({b}) differs from ρ({a}·{b}) by {defect:e}"
                    )));
                }
            }
        }
        Ok(UnitaryRep { degree: d, matrices })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// `χ(s) = tr ρ(s)` for every element.
    pub fn character(&self) -> Vec<C64> {
        self.matrices.iter().map(|m| m.trace()).collect()
    }

    /// `(1/|G|) Σ |χ(s)|²`, equal to one exactly for irreducible reps.
    pub fn character_norm(&self) -> f64 {
        let chi = self.character();
        chi.iter().map(|z| z.norm_sqr()).sum::<f64>() / chi.len() as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterTable {
    pub labels: Vec<String>,
    pub degrees: Vec<usize>,
    /// `values[φ][c]` is `χ_φ` on class `c`.
    #[serde(skip)]
    pub values: Vec<Vec<C64>>,
    pub class_sizes: Vec<usize>,
}

impl CharacterTable {
    /// Table of the given irreps; rejects it unless rows are orthonormal and `Σ d² = |G|`.
    pub fn from_irreps(group: &FiniteGroup, irreps: &[(String, UnitaryRep)]) -> Result<Self> {
        let values: Vec<Vec<C64>> = irreps
            .iter()
            .map(|(_, r)| {
                let chi = r.character();
                group.classes().iter().map(|c| chi[c[0]]).collect()
            })
            .collect();
        let table = CharacterTable {
            labels: irreps.iter().map(|(l, _)| l.clone()).collect(),
            degrees: irreps.iter().map(|(_, r)| r.degree()).collect(),
            values,
            class_sizes: group.classes().iter().map(Vec::len).collect(),
        };
        table.check(group.order())?;
        Ok(table)
    }

    pub fn check(&self, order: usize) -> Result<()> {
        let sum_sq: usize = self.degrees.iter().map(|d| d * d).sum();
        if sum_sq != order {
            return Err(Error::InvalidGroup(format!("sum of squared degrees {sum_sq} != |G| = {order}")));
        }
        for a in 0..self.values.len() {
            for b in 0..self.values.len() {
                let ip: C64 = (0..self.class_sizes.len())
                    .map(|c| self.values[a][c] * self.values[b][c].conj() * self.class_sizes[c] as f64)
                    .sum();
                let want = if a == b { order as f64 } else { 0.0 };
                if (ip - C64::new(want, 0.0)).norm() > TABLE_TOL * order as f64 {
                    return Err(Error::InvalidGroup(format!(
                        "characters {} and {} violate orthogonality",
                        self.labels[a], self.labels[b]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_irreducible(rep: &UnitaryRep) -> Result<()> {
    let norm = rep.character_norm();
    if (norm - 1.0).abs() > TABLE_TOL {
        return Err(Error::InvalidRepresentation(format!(
            "representation is reducible: (1/|G|) Σ|χ|² = {norm}"
        )));
    }
    Ok(())
}

/// `f_s = vec(ρ(s))/sqrt(d)` in `End(V) ≅ ℂ^{d²}`, states `Π_{f_s}`, weights `1/|G|`.
pub fn rep_povm(group: &FiniteGroup, rep: &UnitaryRep) -> Result<FinitePovm> {
    check_irreducible(rep)?;
    let scale = 1.0 / (rep.degree() as f64).sqrt();
    let states = rep
        .matrices()
        .iter()
        .map(|m| {
            let f: Vec<C64> = m.to_vec_rowmajor().into_iter().map(|z| z * scale).collect();
            projector_onto(&f)
        })
        .collect::<Result<Vec<_>>>()?;
    let w = 1.0 / group.order() as f64;
    FinitePovm::new(group.labels().to_vec(), states, vec![w; group.order()])
}

/// `M[t][s] = |χ(s t⁻¹)|² / |G|`; `chi` is indexed by element.
pub fn berezin_from_character(group: &FiniteGroup, chi: &[C64]) -> Result<RealMatrix> {
    if chi.len() != group.order() {
        return Err(Error::LengthMismatch {
            expected: group.order(),
            found: chi.len(),
        });
    }
    let m = group.order();
    Ok(RealMatrix::from_fn(m, |t, s| {
        chi[group.mul(s, group.inv(t))].norm_sqr() / m as f64
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterEigenvalue {
    pub value: f64,
    /// Sum of `d_φ²` over contributing irreps.
    pub multiplicity: usize,
    pub irreps: Vec<String>,
}

/// `λ_φ = (1/(d_φ |G|)) Σ_s |χ_ρ(s)|² χ_φ(s)`, per irrep in table order.
pub fn irrep_eigenvalues(table: &CharacterTable, group: &FiniteGroup, chi: &[C64]) -> Result<Vec<f64>> {
    if chi.len() != group.order() {
        return Err(Error::LengthMismatch {
            expected: group.order(),
            found: chi.len(),
        });
    }
    table.check(group.order())?;
    let order = group.order() as f64;
    Ok((0..table.labels.len())
        .map(|phi| {
            let sum: C64 = group
                .classes()
                .iter()
                .enumerate()
                .map(|(c, class)| table.values[phi][c] * chi[class[0]].norm_sqr() * class.len() as f64)
                .sum();
            sum.re / (table.degrees[phi] as f64 * order)
        })
        .collect())
}

/// Distinct eigenvalues of `ℬ` with multiplicities `d_φ²`, merged across irreps, descending.
pub fn eigenvalues_via_characters(
    table: &CharacterTable,
    group: &FiniteGroup,
    chi: &[C64],
) -> Result<Vec<CharacterEigenvalue>> {
    let lambdas = irrep_eigenvalues(table, group, chi)?;
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));
    let mut out: Vec<CharacterEigenvalue> = Vec::new();
    for phi in order {
        let d = table.degrees[phi];
        match out.last_mut() {
            Some(last) if (last.value - lambdas[phi]).abs() <= MERGE_TOL => {
                last.multiplicity += d * d;
                last.irreps.push(table.labels[phi].clone());
            }
            _ => out.push(CharacterEigenvalue {
                value: lambdas[phi],
                multiplicity: d * d,
                irreps: vec![table.labels[phi].clone()],
            }),
        }
    }
    Ok(out)
}

/// Expands merged eigenvalues into a descending multiset.
pub fn expand_multiset(eigs: &[CharacterEigenvalue]) -> Vec<f64> {
    let mut v: Vec<f64> = eigs
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Best rational approximation `p/q` with `q ≤ max_den` (continued fractions).
pub fn best_rational(x: f64, max_den: u64) -> (i64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    (p1, q1)
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingOff {
    pub elements: Vec<usize>,
    pub normal: bool,
    pub proper: bool,
}

/// Smallest subgroup containing every element where `χ` does not vanish.
pub fn vanishing_off_subgroup(group: &FiniteGroup, chi: &[C64]) -> Result<VanishingOff> {
    if chi.len() != group.order() {
        return Err(Error::LengthMismatch {
            expected: group.order(),
            found: chi.len(),
        });
    }
    let support: Vec<usize> = (0..group.order()).filter(|&s| chi[s].norm() > SUPPORT_TOL).collect();
    let elements = group.closure(&support);
    Ok(VanishingOff {
        normal: group.is_normal(&elements),
        proper: elements.len() < group.order(),
        elements,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapZeroReport {
    pub vanishing_off_proper: bool,
    pub gap_zero: bool,
    pub gap: f64,
}

/// Both sides of the zero-gap equivalence, the gap taken from the matrix route.
pub fn gap_zero_predicate(group: &FiniteGroup, rep: &UnitaryRep) -> Result<GapZeroReport> {
    check_irreducible(rep)?;
    let chi = rep.character();
    let v = vanishing_off_subgroup(group, &chi)?;
    let m = berezin_from_character(group, &chi)?;
    let mut vals = m.sym_eigvals()?;
    vals.reverse();
    let gap = if vals.len() >= 2 { 1.0 - vals[1] } else { 1.0 };
    Ok(GapZeroReport {
        vanishing_off_proper: v.proper,
        gap_zero: gap < GAP_ZERO_TOL,
        gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupDiffusion {
    pub tau: f64,
    /// `D_τ(s, t)` indexed by element.
    pub distances: Vec<Vec<f64>>,
    /// `K_p`: common kernel of the irreps in the first `p` eigenvalue levels.
    pub kernel_series: Vec<Vec<usize>>,
    /// Distinct eigenvalues `β_1 > β_2 > …` in `(0, 1)`.
    pub partition_scales: Vec<f64>,
    /// `scale_index[s][t] = j` when `s t⁻¹ ∈ K_{j-1} \ K_j`, so `D_τ(s,t) ~ β_j^τ`; `None` if no level separates.
    pub scale_index: Vec<Vec<Option<usize>>>,
}

/// Diffusion distance on `G` from characters, with its multi-scale structure.
pub fn group_diffusion(
    group: &FiniteGroup,
    rep: &UnitaryRep,
    table: &CharacterTable,
    tau: f64,
) -> Result<GroupDiffusion> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument(format!("diffusion time {tau} must be positive")));
    }
    let gz = gap_zero_predicate(group, rep)?;
    if gz.gap_zero {
        return Err(Error::ZeroGap(format!("gap {:e}; distances do not separate scales", gz.gap)));
    }
    let chi = rep.character();
    let lambdas = irrep_eigenvalues(table, group, &chi)?;
    let m = group.order();
    // Per-element characters of every irrep.
    let mut class_of = vec![0; m];
    for (c, class) in group.classes().iter().enumerate() {
        for &x in class {
            class_of[x] = c;
        }
    }
    let char_at = |phi: usize, x: usize| table.values[phi][class_of[x]];

    let mut scales: Vec<f64> = Vec::new();
    let mut sorted: Vec<f64> = lambdas
        .iter()
        .copied()
        .filter(|&l| l > GAP_ZERO_TOL && l < 1.0 - GAP_ZERO_TOL)
        .collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for l in sorted {
        if scales.last().is_none_or(|&b| (b - l).abs() > MERGE_TOL) {
            scales.push(l);
        }
    }
    let level_irreps: Vec<Vec<usize>> = scales
        .iter()
        .map(|&b| (0..lambdas.len()).filter(|&phi| (lambdas[phi] - b).abs() <= MERGE_TOL).collect())
        .collect();

    let mut kernel_series = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    for irreps in &level_irreps {
        current.retain(|&x| {
            irreps.iter().all(|&phi| {
                (char_at(phi, x) - C64::new(table.degrees[phi] as f64, 0.0)).norm() <= SUPPORT_TOL
            })
        });
        kernel_series.push(current.clone());
    }

    let mut distances = vec![vec![0.0; m]; m];
    let mut scale_index = vec![vec![None; m]; m];
    for s in 0..m {
        for t in 0..m {
            let x = group.mul(s, group.inv(t));
            let mut d2 = 0.0;
            for (b, irreps) in scales.iter().zip(&level_irreps) {
                for &phi in irreps {
                    let d = table.degrees[phi] as f64;
                    d2 += b.powf(2.0 * tau) * d * 2.0 * (d - char_at(phi, x).re);
                }
            }
            distances[s][t] = d2.max(0.0).sqrt();
            scale_index[s][t] = kernel_series.iter().position(|k| !k.contains(&x)).map(|j| j + 1);
        }
    }
    Ok(GroupDiffusion {
        tau,
        distances,
        kernel_series,
        partition_scales: scales,
        scale_index,
    })
}

#[cfg(test)]
mod tests {
    use super::catalog::{builtin, BuiltinGroup};
    use super::*;
    use crate::spectral::{berezin_spectrum_with, DiffusionMap, SpectrumMethod};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_builtins() -> Vec<BuiltinGroup> {
        let mut v: Vec<BuiltinGroup> = ["s3", "s4", "d4", "q8"].iter().map(|n| builtin(n).unwrap()).collect();
        for m in [1, 2, 5, 6, 12] {
            v.push(builtin(&format!("z{m}")).unwrap());
        }
        v
    }

    #[test]
    fn tables_and_character_norms() {
        for b in all_builtins() {
            let sum: usize = b.table.degrees.iter().map(|d| d * d).sum();
            assert_eq!(sum, b.group.order(), "{}", b.name);
            for (_, rep) in &b.irreps {
                assert!((rep.character_norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn matrix_and_character_routes_agree() {
        for b in all_builtins() {
            for (label, rep) in &b.irreps {
                let chi = rep.character();
                let m = berezin_from_character(&b.group, &chi).unwrap();
                let povm = rep_povm(&b.group, rep).unwrap();
                assert!(povm.validate().resolution_defect < 1e-10);
                assert!(m.max_abs_diff(&povm.berezin_matrix()) < 1e-10, "{} {label}", b.name);
                for t in 0..b.group.order() {
                    assert!((m.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    assert!(((0..b.group.order()).map(|s| m[(s, t)]).sum::<f64>() - 1.0).abs() < 1e-12);
                }
                let mut direct = m.sym_eigvals().unwrap();
                direct.reverse();
                let eigs = eigenvalues_via_characters(&b.table, &b.group, &chi).unwrap();
                let via = expand_multiset(&eigs);
                assert_eq!(via.len(), direct.len());
                for (x, y) in via.iter().zip(&direct) {
                    assert!((x - y).abs() < 1e-8, "{} {label}: {x} vs {y}", b.name);
                }
                let lambdas = irrep_eigenvalues(&b.table, &b.group, &chi).unwrap();
                let trivial = b.table.index_of("trivial").unwrap();
                assert!((lambdas[trivial] - 1.0).abs() < 1e-12);
                for (phi, l) in lambdas.iter().enumerate() {
                    let mult = l * b.table.degrees[phi] as f64;
                    assert!((mult - mult.round()).abs() < 1e-8 && mult.round() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for b in all_builtins() {
            let (_, rep) = b.irreps.last().unwrap();
            let m = berezin_from_character(&b.group, &rep.character()).unwrap();
            let order = b.group.order();
            for _ in 0..5 {
                let g = rng.gen_range(0..order);
                for t in 0..order {
                    for s in 0..order {
                        assert!((m[(b.group.mul(g, t), b.group.mul(g, s))] - m[(t, s)]).abs() < 1e-14);
                        assert!((m[(b.group.mul(t, g), b.group.mul(s, g))] - m[(t, s)]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn tight_frame_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for b in all_builtins() {
            for (_, rep) in &b.irreps {
                let d = rep.degree();
                let f: Vec<C64> = (0..d * d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let norm2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
                let sum: f64 = rep
                    .matrices()
                    .iter()
                    .map(|m| {
                        let fs: Vec<C64> = m.to_vec_rowmajor().into_iter().map(|z| z / (d as f64).sqrt()).collect();
                        crate::operator::vec_inner(&f, &fs).norm_sqr()
                    })
                    .sum();
                let a = b.group.order() as f64 / (d * d) as f64;
                assert!((a * norm2 - sum).abs() < 1e-10 * sum.max(1.0));
            }
        }
    }

    #[test]
    fn vanishing_off_examples() {
        let z = builtin("z7").unwrap();
        let chi = z.rep("k1").unwrap().character();
        assert_eq!(vanishing_off_subgroup(&z.group, &chi).unwrap().elements.len(), 7);

        let q = builtin("q8").unwrap();
        let v = vanishing_off_subgroup(&q.group, &q.rep("dim2").unwrap().character()).unwrap();
        assert_eq!(v.elements.len(), 2);
        assert!(v.normal && v.proper);

        let s = builtin("s4").unwrap();
        let v = vanishing_off_subgroup(&s.group, &s.rep("standard").unwrap().character()).unwrap();
        assert_eq!(v.elements.len(), 24);
    }

    #[test]
    fn gap_zero_equivalence_on_builtins() {
        for b in all_builtins() {
            for (label, rep) in &b.irreps {
                if label == "trivial" {
                    continue;
                }
                let r = gap_zero_predicate(&b.group, rep).unwrap();
                assert_eq!(r.vanishing_off_proper, r.gap_zero, "{} {label}", b.name);
            }
        }
        let q = builtin("q8").unwrap();
        assert!(gap_zero_predicate(&q.group, q.rep("dim2").unwrap()).unwrap().gap_zero);
        let s = builtin("s4").unwrap();
        let r = gap_zero_predicate(&s.group, s.rep("standard").unwrap()).unwrap();
        assert!(!r.gap_zero && (r.gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_rep_rejected() {
        let s = builtin("s3").unwrap();
        let chi_perm: Vec<CMatrix> = s
            .rep("standard")
            .unwrap()
            .matrices()
            .iter()
            .zip(s.rep("trivial").unwrap().matrices())
            .map(|(a, t)| CMatrix::from_fn(3, |i, j| match (i, j) {
                (0, 0) => t[(0, 0)],
                (0, _) | (_, 0) => C64::new(0.0, 0.0),
                _ => a[(i - 1, j - 1)],
            }))
            .collect();
        let rep = UnitaryRep::new(&s.group, chi_perm).unwrap();
        assert!(matches!(rep_povm(&s.group, &rep), Err(Error::InvalidRepresentation(_))));
    }

    #[test]
    fn s4_diffusion_scales() {
        let b = builtin("s4").unwrap();
        let rep = b.rep("standard").unwrap();
        let diff = group_diffusion(&b.group, rep, &b.table, 2.0).unwrap();
        assert_eq!(diff.partition_scales.len(), 2);
        assert!((diff.partition_scales[0] - 0.5).abs() < 1e-12);
        assert!((diff.partition_scales[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(diff.kernel_series[0].len(), 4);
        assert_eq!(diff.kernel_series[1], vec![b.group.identity()]);
        // Same distances through the POVM spectrum.
        let povm = rep_povm(&b.group, rep).unwrap();
        let report = berezin_spectrum_with(&povm, SpectrumMethod::Direct).unwrap();
        let map = DiffusionMap::new(&report);
        for s in 0..24 {
            for t in 0..24 {
                assert!((map.distance(2.0, s, t) - diff.distances[s][t]).abs() < 1e-8);
                assert_eq!(diff.distances[s][t] == 0.0, s == t);
            }
        }
        let q = builtin("q8").unwrap();
        assert!(matches!(
            group_diffusion(&q.group, q.rep("dim2").unwrap(), &q.table, 1.0),
            Err(Error::ZeroGap(_))
        ));
    }

    #[test]
    fn rational_gap() {
        assert_eq!(best_rational(0.5, 576), (1, 2));
        assert_eq!(best_rational(2.0 / 3.0, 576), (2, 3));
        assert_eq!(best_rational(1.0, 10), (1, 1));
    }

    #[test]
    fn invalid_tables() {
        assert!(FiniteGroup::new(vec![vec![0, 1], vec![1, 1]], None).is_err());
        let z3 = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]];
        assert!(FiniteGroup::with_classes(z3.clone(), &[vec![0], vec![1], vec![2]]).is_ok());
        assert!(FiniteGroup::with_classes(z3, &[vec![0], vec![1, 2]]).is_err());
    }
}
