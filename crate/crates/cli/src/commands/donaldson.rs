use berezin_core::donaldson::{
    balanced_povm, check_spade, iterate_to_balance, linearization_fd, PositiveProduct, FIXED_POINT_TOL,
    RICHARDSON_TOL,
};
use berezin_core::io::load_point_measure;
use serde_json::json;

use super::{Outcome, Verdict};
use crate::args::DonaldsonCommand;
use crate::output::{tolerances_json, Table};
use crate::Failure;

/// Entrywise agreement required between the finite-difference differential and the channel.
const LINEARIZATION_TOL: f64 = 1e-5;
const BALANCE_TOL: f64 = 1e-12;
const BALANCE_MAX_ITER: usize = 2000;

pub fn run(cmd: &DonaldsonCommand) -> Result<Outcome, Failure> {
    match cmd {
        DonaldsonCommand::Run { input, tol, max_iter } => {
            if tol.is_nan() || *tol <= 0.0 {
                return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
            }
            let nu = load_point_measure(&input.input)?;
            let trace = iterate_to_balance(&nu, &PositiveProduct::identity(nu.dim()), *tol, *max_iter)?;
            let mut table = Table::new(&["iter", "psi", "step_distance", "det_before_norm"])
                .tolerance("convergence_tol", *tol)
                .meta("converged", json!(trace.converged))
                .meta("fitted_rate", json!(trace.fitted_rate))
                .meta("steps", json!(trace.step_distances.len()));
            for (k, ((psi, step), det)) in trace
                .psi_values
                .iter()
                .zip(&trace.step_distances)
                .zip(&trace.det_before_norm)
                .enumerate()
            {
                table.push(vec![k.into(), (*psi).into(), (*step).into(), (*det).into()]);
            }
            let verdict = if trace.converged {
                Verdict::Ok
            } else {
                Verdict::Numerical(format!("no convergence within {max_iter} iterations"))
            };
            Ok(Outcome::table(table).with_verdict(verdict))
        }
        DonaldsonCommand::Linearize { input, h } => {
            let nu = load_point_measure(&input.input)?;
            let trace = iterate_to_balance(&nu, &PositiveProduct::identity(nu.dim()), BALANCE_TOL, BALANCE_MAX_ITER)?;
            let g = trace.limit();
            let povm = balanced_povm(&nu, g)?;
            let channel = povm.channel_matrix();
            let fd = linearization_fd(&nu, g, *h)?;
            let deviation = fd.max_abs_diff(&channel);
            let mut eigs = channel.sym_eigvals()?;
            eigs.reverse();
            let beta = eigs.iter().copied().filter(|&x| x > 1e-12 && x < 1.0 - 1e-9).fold(0.0, f64::max);
            let verdict = if deviation <= LINEARIZATION_TOL {
                Verdict::Ok
            } else {
                Verdict::Numerical(format!("finite-difference differential differs from the channel by {deviation:e}"))
            };
            Ok(Outcome::json(json!({
                "dim": nu.dim(),
                "points": nu.len(),
                "h": h,
                "max_abs_deviation": deviation,
                "channel_eigenvalues": eigs,
                "largest_subunit_eigenvalue": beta,
                "fitted_rate": trace.fitted_rate,
                "converged": trace.converged,
                "tolerances": tolerances_json(&[
                    ("linearization", LINEARIZATION_TOL),
                    ("richardson", RICHARDSON_TOL),
                    ("fixed_point", FIXED_POINT_TOL),
                    ("balance", BALANCE_TOL),
                ]),
            }))
            .with_verdict(verdict))
        }
        DonaldsonCommand::Check { input, exact } => {
            let nu = load_point_measure(&input.input)?;
            let report = check_spade(&nu, *exact)?;
            Ok(Outcome::json(json!({
                "dim": nu.dim(),
                "points": nu.len(),
                "rank": nu.rank(),
                "total_mass": nu.total_mass(),
                "spanning": report.spanning,
                "exact": report.exact,
            })))
        }
    }
}
