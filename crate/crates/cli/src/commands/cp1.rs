use berezin_core::cp1::{
    build_cp1_povm, eigenfunction_vs_harmonics, exact_eigenvalue, verify_gap_asymptotics, CP1_VALIDATION_TOL, MAX_LEVEL,
};
use berezin_core::io::PovmFile;
use berezin_core::spectral::CLUSTER_TOL;
use berezin_core::Error;
use rayon::prelude::*;

use super::{parse_usize_list, Outcome};
use crate::args::Cp1Command;
use crate::output::Table;
use crate::Failure;

fn check_levels(ps: &[usize]) -> Result<(), Failure> {
    if let Some(&p) = ps.iter().find(|&&p| p == 0 || p > MAX_LEVEL) {
        return Err(Error::InvalidArgument(format!("level p = {p} outside 1..={MAX_LEVEL}")).into());
    }
    Ok(())
}

pub fn run(cmd: &Cp1Command) -> Result<Outcome, Failure> {
    match cmd {
        Cp1Command::Gap { p, kmax } => {
            let ps = parse_usize_list(p)?;
            check_levels(&ps)?;
            if *kmax == 0 {
                return Err(Failure::Usage("--kmax must be at least 1".into()));
            }
            let per_p: Vec<_> = ps
                .par_iter()
                .map(|&p| verify_gap_asymptotics(&[p], (*kmax).min(p)))
                .collect::<Result<_, _>>()?;
            let mut table = Table::new(&[
                "p",
                "l",
                "gamma",
                "multiplicity",
                "p_times_defect",
                "target",
                "residual",
                "gamma_closed_form",
            ])
            .tolerance("validation_tol", CP1_VALIDATION_TOL)
            .tolerance("cluster_rel_tol", CLUSTER_TOL);
            for r in per_p.into_iter().flatten() {
                table.push(vec![
                    r.p.into(),
                    r.l.into(),
                    r.gamma.into(),
                    r.multiplicity.into(),
                    r.p_times_defect.into(),
                    r.target.into(),
                    r.residual.into(),
                    exact_eigenvalue(r.p, r.l).into(),
                ]);
            }
            Ok(Outcome::table(table))
        }
        Cp1Command::Eigenfunctions { p, l } => {
            let ps = parse_usize_list(p)?;
            check_levels(&ps)?;
            let ls = parse_usize_list(l)?;
            let pairs: Vec<(usize, usize)> = ps.iter().flat_map(|&p| ls.iter().map(move |&l| (p, l))).collect();
            let angles: Vec<f64> = pairs
                .par_iter()
                .map(|&(p, l)| eigenfunction_vs_harmonics(p, l))
                .collect::<Result<_, _>>()?;
            let mut table = Table::new(&["p", "l", "principal_angle"])
                .tolerance("validation_tol", CP1_VALIDATION_TOL)
                .tolerance("cluster_rel_tol", CLUSTER_TOL);
            for (&(p, l), a) in pairs.iter().zip(angles) {
                table.push(vec![p.into(), l.into(), a.into()]);
            }
            Ok(Outcome::table(table))
        }
        Cp1Command::Export { p } => {
            check_levels(&[*p])?;
            let povm = build_cp1_povm(*p)?;
            let value = serde_json::to_value(PovmFile::from_povm(&povm)).map_err(Error::from)?;
            Ok(Outcome::json(value))
        }
    }
}
