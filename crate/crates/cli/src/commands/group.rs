use berezin_core::group::catalog::{builtin, BuiltinGroup};
use berezin_core::group::{
    berezin_from_character, best_rational, eigenvalues_via_characters, expand_multiset, gap_zero_predicate,
    group_diffusion, vanishing_off_subgroup, CharacterTable, FiniteGroup, UnitaryRep, GAP_ZERO_TOL, MERGE_TOL,
    SUPPORT_TOL,
};
use berezin_core::io::{read_json, rep_from_json, GroupFile, RepFile};
use berezin_core::Error;
use serde_json::{json, Value};

use super::{parse_positive_list, Outcome, Verdict};
use crate::args::{GroupCommand, GroupInput};
use crate::output::{tolerances_json, Table};
use crate::Failure;

struct Loaded {
    name: String,
    group: FiniteGroup,
    rep_label: String,
    rep: UnitaryRep,
    table: Option<CharacterTable>,
}

fn load(input: &GroupInput) -> Result<Loaded, Failure> {
    if let Some(path) = &input.group_file {
        let group = read_json::<GroupFile>(path)?.into_group()?;
        let rep_path = input
            .rep_file
            .as_ref()
            .ok_or_else(|| Failure::Usage("--group-file needs --rep-file".into()))?;
        let rep = rep_from_json(&group, &read_json::<RepFile>(rep_path)?)?;
        return Ok(Loaded {
            name: path.display().to_string(),
            group,
            rep_label: rep_path.display().to_string(),
            rep,
            table: None,
        });
    }
    let name = input.group.as_deref().ok_or_else(|| Failure::Usage("--group is required".into()))?;
    let b: BuiltinGroup = builtin(name)?;
    let label = input
        .rep
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("--rep is required; {} has {}", b.name, b.rep_labels().join(", "))))?;
    let rep = b.rep(label)?.clone();
    Ok(Loaded {
        name: b.name.clone(),
        rep_label: label.to_string(),
        rep,
        table: Some(b.table),
        group: b.group,
    })
}

fn require_table(l: &Loaded) -> Result<&CharacterTable, Failure> {
    l.table
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("a character table is only available for built-in groups".into()).into())
}

fn matrix_spectrum(l: &Loaded) -> Result<Vec<f64>, Failure> {
    let mut v = berezin_from_character(&l.group, &l.rep.character())?.sym_eigvals()?;
    v.reverse();
    Ok(v)
}

fn tolerances() -> Value {
    tolerances_json(&[
        ("gap_zero", GAP_ZERO_TOL),
        ("character_support", SUPPORT_TOL),
        ("eigenvalue_merge", MERGE_TOL),
    ])
}

pub fn run(cmd: &GroupCommand) -> Result<Outcome, Failure> {
    match cmd {
        GroupCommand::Demo { input, tau } => {
            let taus = parse_positive_list(tau)?;
            let l = load(input)?;
            let chi = l.rep.character();
            let order = l.group.order();
            let gz = gap_zero_predicate(&l.group, &l.rep)?;
            let v = vanishing_off_subgroup(&l.group, &chi)?;
            let (num, den) = best_rational(gz.gap, (order * order) as u64);
            let labels = l.group.labels();
            let eigenvalues = match &l.table {
                Some(t) => serde_json::to_value(eigenvalues_via_characters(t, &l.group, &chi)?).map_err(Error::from)?,
                None => json!(matrix_spectrum(&l)?),
            };
            let diffusion = match &l.table {
                Some(t) if !gz.gap_zero => {
                    let rows: Vec<Value> = taus
                        .iter()
                        .map(|&tau| {
                            let d = group_diffusion(&l.group, &l.rep, t, tau)?;
                            let max_d = d.distances.iter().flatten().copied().fold(0.0, f64::max);
                            Ok(json!({
                                "tau": tau,
                                "partition_scales": d.partition_scales,
                                "kernel_orders": d.kernel_series.iter().map(Vec::len).collect::<Vec<_>>(),
                                "max_distance": max_d,
                            }))
                        })
                        .collect::<Result<_, Failure>>()?;
                    json!(rows)
                }
                Some(_) => json!("gap is zero; diffusion distances do not separate scales"),
                None => json!("needs a character table"),
            };
            let verdict = if gz.gap_zero == gz.vanishing_off_proper {
                Verdict::Ok
            } else {
                Verdict::Numerical(format!(
                    "gap_zero = {} but vanishing-off subgroup proper = {}",
                    gz.gap_zero, gz.vanishing_off_proper
                ))
            };
            Ok(Outcome::json(json!({
                "group": l.name,
                "order": order,
                "rep": l.rep_label,
                "degree": l.rep.degree(),
                "eigenvalues": eigenvalues,
                "gap": gz.gap,
                "gap_rational": format!("{num}/{den}"),
                "gap_zero": gz.gap_zero,
                "vanishing_off": {
                    "order": v.elements.len(),
                    "elements": v.elements.iter().map(|&e| labels[e].clone()).collect::<Vec<_>>(),
                    "normal": v.normal,
                    "proper": v.proper,
                },
                "diffusion": diffusion,
                "tolerances": tolerances(),
            }))
            .with_verdict(verdict))
        }
        GroupCommand::Spectrum { input } => {
            let l = load(input)?;
            let matrix = matrix_spectrum(&l)?;
            let mut value = json!({
                "group": l.name,
                "rep": l.rep_label,
                "matrix_route": matrix,
                "tolerances": tolerances(),
            });
            if let Some(t) = &l.table {
                let eigs = eigenvalues_via_characters(t, &l.group, &l.rep.character())?;
                let expanded = expand_multiset(&eigs);
                let deviation = expanded.iter().zip(&matrix).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                value["character_route"] = serde_json::to_value(&eigs).map_err(Error::from)?;
                value["max_route_deviation"] = json!(deviation);
            }
            Ok(Outcome::json(value))
        }
        GroupCommand::Diffusion { input, tau } => {
            let taus = parse_positive_list(tau)?;
            let l = load(input)?;
            let t = require_table(&l)?;
            let labels = l.group.labels();
            let mut table = Table::new(&["tau", "s", "t", "distance", "scale_index"])
                .tolerance("gap_zero_tol", GAP_ZERO_TOL)
                .tolerance("character_support_tol", SUPPORT_TOL);
            for &tau in &taus {
                let d = group_diffusion(&l.group, &l.rep, t, tau)?;
                table = table.meta("partition_scales", json!(d.partition_scales));
                for s in 0..l.group.order() {
                    for u in s + 1..l.group.order() {
                        table.push(vec![
                            tau.into(),
                            labels[s].as_str().into(),
                            labels[u].as_str().into(),
                            d.distances[s][u].into(),
                            d.scale_index[s][u].map(|j| j.to_string()).unwrap_or_default().into(),
                        ]);
                    }
                }
            }
            Ok(Outcome::table(table))
        }
    }
}
