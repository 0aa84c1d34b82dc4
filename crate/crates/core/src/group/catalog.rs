//! Built-in groups with explicit irreducible representations:
//! cyclic `z1`..`z24`, `s3`, `s4`, `d4` and `q8`.

use std::f64::consts::PI;

use super::{CharacterTable, FiniteGroup, UnitaryRep};
use crate::error::{Error, Result};
use crate::operator::{CMatrix, C64};

pub const MAX_CYCLIC_ORDER: usize = 24;

#[derive(Clone, Debug)]
pub struct BuiltinGroup {
    pub name: String,
    pub group: FiniteGroup,
    pub irreps: Vec<(String, UnitaryRep)>,
    pub table: CharacterTable,
    aliases: Vec<(String, String)>,
}

impl BuiltinGroup {
    pub fn rep(&self, label: &str) -> Result<&UnitaryRep> {
        let key = self
            .aliases
            .iter()
            .find(|(a, _)| a == label)
            .map(|(_, target)| target.as_str())
            .unwrap_or(label);
        self.irreps
            .iter()
            .find(|(l, _)| l == key)
            .map(|(_, r)| r)
            .ok_or_else(|| Error::UnknownLabel(format!("{} has no irrep '{label}'", self.name)))
    }

    pub fn rep_labels(&self) -> Vec<&str> {
        self.irreps.iter().map(|(l, _)| l.as_str()).collect()
    }
}

pub fn builtin_names() -> Vec<String> {
    let mut v: Vec<String> = ["s3", "s4", "d4", "q8"].iter().map(|s| s.to_string()).collect();
    v.push(format!("z1..z{MAX_CYCLIC_ORDER}"));
    v
}

pub fn builtin(name: &str) -> Result<BuiltinGroup> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "s3" => symmetric3(),
        "s4" => symmetric4(),
        "d4" => dihedral4(),
        "q8" => quaternion(),
        _ => match lower.strip_prefix('z').and_then(|m| m.parse::<usize>().ok()) {
            Some(m) if (1..=MAX_CYCLIC_ORDER).contains(&m) => cyclic(m),
            _ => Err(Error::UnknownLabel(format!(
                "unknown group '{name}' (built-ins: {})",
                builtin_names().join(", ")
            ))),
        },
    }
}

fn assemble(
    name: &str,
    group: FiniteGroup,
    irreps: Vec<(&str, Vec<CMatrix>)>,
    aliases: &[(&str, &str)],
) -> Result<BuiltinGroup> {
    let irreps = irreps
        .into_iter()
        .map(|(l, ms)| Ok((l.to_string(), UnitaryRep::new(&group, ms)?)))
        .collect::<Result<Vec<_>>>()?;
    let table = CharacterTable::from_irreps(&group, &irreps)?;
    Ok(BuiltinGroup {
        name: name.to_string(),
        group,
        irreps,
        table,
        aliases: aliases.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    })
}

fn table_from<E: PartialEq>(elems: &[E], mul: impl Fn(&E, &E) -> E) -> Vec<Vec<usize>> {
    elems
        .iter()
        .map(|a| {
            elems
                .iter()
                .map(|b| {
                    let p = mul(a, b);
                    elems.iter().position(|e| *e == p).expect("closed under multiplication")
                })
                .collect()
        })
        .collect()
}

fn scalar(z: C64) -> CMatrix {
    CMatrix::from_fn(1, |_, _| z)
}

fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    CMatrix::from_fn(rows.len(), |i, j| C64::new(rows[i][j], 0.0))
}

fn cyclic(m: usize) -> Result<BuiltinGroup> {
    let elems: Vec<usize> = (0..m).collect();
    let labels = elems.iter().map(|a| a.to_string()).collect();
    let group = FiniteGroup::new(table_from(&elems, |a, b| (a + b) % m), Some(labels))?;
    let names: Vec<String> = (0..m).map(|k| if k == 0 { "trivial".into() } else { format!("k{k}") }).collect();
    let irreps = (0..m)
        .map(|k| {
            let ms = elems
                .iter()
                .map(|&a| scalar(C64::from_polar(1.0, 2.0 * PI * (k * a % m) as f64 / m as f64)))
                .collect();
            (names[k].as_str(), ms)
        })
        .collect();
    let aliases: &[(&str, &str)] = if m > 1 { &[("faithful", "k1")] } else { &[] };
    assemble(&format!("z{m}"), group, irreps, aliases)
}

type Perm = Vec<usize>;

fn permutations(k: usize) -> Vec<Perm> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// `(p ∘ q)(i) = p(q(i))`.
fn compose(p: &Perm, q: &Perm) -> Perm {
    q.iter().map(|&i| p[i]).collect()
}

fn parity(p: &Perm) -> f64 {
    let mut sign = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn perm_label(p: &Perm) -> String {
    p.iter().map(|i| i.to_string()).collect()
}

/// Orthonormal basis of the sum-zero subspace of `R^k` (Helmert vectors), as columns.
fn sum_zero_basis(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let norm = ((j * (j + 1)) as f64).sqrt();
            (0..k)
                .map(|i| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(j as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Permutation representation restricted to the sum-zero subspace.
fn standard_matrix(p: &Perm) -> CMatrix {
    let basis = sum_zero_basis(p.len());
    CMatrix::from_fn(basis.len(), |a, b| {
        // <e_a, P e_b> with (P v)_{p(i)} = v_i.
        let v: f64 = (0..p.len()).map(|i| basis[a][p[i]] * basis[b][i]).sum();
        C64::new(v, 0.0)
    })
}

fn one_dim(values: impl Iterator<Item = f64>) -> Vec<CMatrix> {
    values.map(|x| scalar(C64::new(x, 0.0))).collect()
}

fn symmetric3() -> Result<BuiltinGroup> {
    let elems = permutations(3);
    let group = FiniteGroup::new(table_from(&elems, compose), Some(elems.iter().map(perm_label).collect()))?;
    let irreps = vec![
        ("trivial", one_dim(elems.iter().map(|_| 1.0))),
        ("sign", one_dim(elems.iter().map(parity))),
        ("standard", elems.iter().map(standard_matrix).collect()),
    ];
    assemble("s3", group, irreps, &[("dim2", "standard")])
}

/// Action of `S4` on the three pairings `{01|23, 02|13, 03|12}`, as a permutation of `{0,1,2}`.
fn pairing_action(p: &Perm) -> Perm {
    let pairing = |a: usize, b: usize| -> usize {
        let other = if a == 0 { b } else if b == 0 { a } else { 6 - a - b };
        other - 1
    };
    (0..3)
        .map(|k| {
            let partner = k + 1;
            pairing(p[0], p[partner])
        })
        .collect()
}

fn symmetric4() -> Result<BuiltinGroup> {
    let elems = permutations(4);
    let group = FiniteGroup::new(table_from(&elems, compose), Some(elems.iter().map(perm_label).collect()))?;
    let irreps = vec![
        ("trivial", one_dim(elems.iter().map(|_| 1.0))),
        ("sign", one_dim(elems.iter().map(parity))),
        ("dim2", elems.iter().map(|p| standard_matrix(&pairing_action(p))).collect()),
        ("standard", elems.iter().map(standard_matrix).collect()),
        (
            "sign_standard",
            elems.iter().map(|p| standard_matrix(p).scale(parity(p))).collect(),
        ),
    ];
    assemble("s4", group, irreps, &[])
}

/// Symmetries of the square as permutations of its vertices `0..4` (counterclockwise).
fn dihedral4() -> Result<BuiltinGroup> {
    let mut elems: Vec<Perm> = Vec::new();
    for reflect in [false, true] {
        for a in 0..4 {
            elems.push(
                (0..4)
                    .map(|i| if reflect { (a + 4 - i) % 4 } else { (a + i) % 4 })
                    .collect(),
            );
        }
    }
    let rot = |p: &Perm| p[0] as i32;
    let refl = |p: &Perm| i32::from((p[0] + 1) % 4 != p[1]);
    let labels = elems
        .iter()
        .map(|p| format!("r{}{}", rot(p), if refl(p) == 1 { "s" } else { "" }))
        .collect();
    let group = FiniteGroup::new(table_from(&elems, compose), Some(labels))?;
    let sign = |e: i32| if e % 2 == 0 { 1.0 } else { -1.0 };
    // Vertex k sits at angle k·π/2; columns are the images of vertices 0 and 1.
    let coords = |k: usize| -> (f64, f64) {
        match k {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    };
    let dim2 = elems
        .iter()
        .map(|p| {
            let (a0, b0) = coords(p[0]);
            let (a1, b1) = coords(p[1]);
            real_matrix(&[&[a0, a1], &[b0, b1]])
        })
        .collect();
    let irreps = vec![
        ("trivial", one_dim(elems.iter().map(|_| 1.0))),
        ("rot_sign", one_dim(elems.iter().map(|p| sign(rot(p))))),
        ("refl_sign", one_dim(elems.iter().map(|p| sign(refl(p))))),
        ("both_sign", one_dim(elems.iter().map(|p| sign(rot(p) + refl(p))))),
        ("dim2", dim2),
    ];
    assemble("d4", group, irreps, &[])
}

fn quaternion() -> Result<BuiltinGroup> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let one = CMatrix::identity(2);
    let qi = CMatrix::from_rows(&[vec![c(0.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, -1.0)]])?;
    let qj = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(-1.0, 0.0), c(0.0, 0.0)]])?;
    let qk = &qi * &qj;
    let units = [("1", one), ("i", qi), ("j", qj), ("k", qk)];
    let mut elems = Vec::new();
    let mut labels = Vec::new();
    // (index into {1,i,j,k}, matrix)
    for (idx, (name, m)) in units.iter().enumerate() {
        for (prefix, s) in [("", 1.0), ("-", -1.0)] {
            labels.push(format!("{prefix}{name}"));
            elems.push((idx, m.scale(s)));
        }
    }
    let mats: Vec<CMatrix> = elems.iter().map(|(_, m)| m.clone()).collect();
    let mult = table_from(&mats, |a, b| {
        // Round to kill roundoff so equality is exact on entries in {0, ±1, ±i}.
        let p = a * b;
        CMatrix::from_fn(2, |r, s| C64::new(p[(r, s)].re.round(), p[(r, s)].im.round()))
    });
    let group = FiniteGroup::new(mult, Some(labels))?;
    let kernel_sign = |keep: usize| {
        one_dim(elems.iter().map(move |(idx, _)| if *idx == 0 || *idx == keep { 1.0 } else { -1.0 }))
    };
    let irreps = vec![
        ("trivial", one_dim(elems.iter().map(|_| 1.0))),
        ("i_sign", kernel_sign(1)),
        ("j_sign", kernel_sign(2)),
        ("k_sign", kernel_sign(3)),
        ("dim2", mats),
    ];
    assemble("q8", group, irreps, &[])
}
