use berezin_core::io::{matrix_to_json, read_json, PovmFile};
use berezin_core::spectral::{
    berezin_spectrum_with, moments, DiffusionMap, SpectrumMethod, CLUSTER_TOL, DIFFUSION_CUTOFF,
};
use serde_json::json;

use super::{load, parse_positive_list, Outcome, Verdict};
use crate::args::{Method, PovmCommand};
use crate::output::{tolerances_json, Table};
use crate::Failure;

pub fn run(cmd: &PovmCommand) -> Result<Outcome, Failure> {
    match cmd {
        PovmCommand::Validate(input) => {
            let povm = read_json::<PovmFile>(&input.input)?.into_povm(true, input.tol)?;
            let report = povm.validate();
            let purity = povm.purity()?;
            let passes = report.passes(input.tol);
            let value = json!({
                "dim": povm.dim(),
                "points": povm.len(),
                "resolution_defect": report.resolution_defect,
                "min_state_eigenvalue": report.min_state_eigenvalue,
                "weight_sum": report.weight_sum,
                "passes": passes,
                "purity": purity,
                "tolerances": tolerances_json(&[("validation", input.tol)]),
            });
            let verdict = if passes {
                Verdict::Ok
            } else {
                Verdict::Validation(format!(
                    "resolution defect {:e} exceeds tolerance {:e}",
                    report.resolution_defect, input.tol
                ))
            };
            Ok(Outcome::json(value).with_verdict(verdict))
        }
        PovmCommand::Spectrum { input, method } => {
            let povm = load(input)?;
            let method = match method {
                Method::Auto => SpectrumMethod::Auto,
                Method::Direct => SpectrumMethod::Direct,
                Method::Dual => SpectrumMethod::Dual,
            };
            let report = berezin_spectrum_with(&povm, method)?;
            Ok(Outcome::json(json!({
                "dim": povm.dim(),
                "points": povm.len(),
                "eigenvalues": report.eigenvalues,
                "gap": report.gap,
                "clusters": report.clusters,
                "tolerances": tolerances_json(&[("validation", input.tol), ("cluster_rel", CLUSTER_TOL)]),
            })))
        }
        PovmCommand::Geometry(input) => {
            let povm = load(input)?;
            let m = moments(&povm)?;
            let spectral = berezin_spectrum_with(&povm, SpectrumMethod::Auto)?.gap;
            let geometric = m.gap_geometric();
            Ok(Outcome::json(json!({
                "dim": povm.dim(),
                "points": povm.len(),
                "I": m.i,
                "J": m.j,
                "gap_geometric": geometric,
                "gap_spectral": spectral,
                "difference": (geometric - spectral).abs(),
                "center": matrix_to_json(m.center.matrix()),
                "bestfit_direction": m.bestfit_direction.as_ref().map(|a| matrix_to_json(a.matrix())),
                "tolerances": tolerances_json(&[("validation", input.tol), ("agreement", 1e-9)]),
            })))
        }
        PovmCommand::Diffusion { input, tau } => {
            let povm = load(input)?;
            let taus = parse_positive_list(tau)?;
            let report = berezin_spectrum_with(&povm, SpectrumMethod::Auto)?;
            let map = DiffusionMap::new(&report);
            let labels = povm.labels();
            let mut table = Table::new(&["tau", "s", "t", "distance"])
                .tolerance("validation_tol", input.tol)
                .tolerance("eigenvalue_cutoff", DIFFUSION_CUTOFF)
                .meta("gap", json!(report.gap));
            for &t in &taus {
                for a in 0..povm.len() {
                    for b in a + 1..povm.len() {
                        table.push(vec![
                            t.into(),
                            labels[a].as_str().into(),
                            labels[b].as_str().into(),
                            map.distance(t, a, b).into(),
                        ]);
                    }
                }
            }
            Ok(Outcome::table(table))
        }
    }
}
