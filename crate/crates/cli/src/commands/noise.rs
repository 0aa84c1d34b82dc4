use berezin_core::corpus::random_unit_vector;
use berezin_core::noise::{
    channel_power_convergence, lueders_chain, minimal_noise, simulate_ensemble, NORM_FLOOR, TRANSIENT_FRACTION,
};
use berezin_core::operator::projector_onto;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{load, Outcome, Verdict};
use crate::args::{ChainCommand, NoiseCommand};
use crate::output::{tolerances_json, Table};
use crate::Failure;

const AGREEMENT_TOL: f64 = 1e-9;

pub fn run_noise(cmd: &NoiseCommand) -> Result<Outcome, Failure> {
    match cmd {
        NoiseCommand::GapVsNoise(input) => {
            let povm = load(input)?;
            let r = minimal_noise(&povm)?;
            let diff = (r.minimal_noise - r.gap_crosscheck).abs();
            let verdict = if diff <= AGREEMENT_TOL {
                Verdict::Ok
            } else {
                Verdict::Numerical(format!("minimal noise and spectral gap differ by {diff:e}"))
            };
            Ok(Outcome::json(json!({
                "minimal_noise": r.minimal_noise,
                "gap": r.gap_crosscheck,
                "difference": diff,
                "argmin_function": r.argmin_function,
                "tolerances": tolerances_json(&[("validation", input.tol), ("agreement", AGREEMENT_TOL)]),
            }))
            .with_verdict(verdict))
        }
    }
}

pub fn run_chain(cmd: &ChainCommand) -> Result<Outcome, Failure> {
    match cmd {
        ChainCommand::Simulate {
            input,
            steps,
            runs,
            seed,
            start,
        } => {
            let povm = load(input)?;
            let chain = lueders_chain(&povm)?;
            let r = simulate_ensemble(&chain, *start, *steps, *runs, *seed)?;
            let mut table = Table::new(&["seed", "runs", "step", "tv_empirical", "tv_exact"])
                .tolerance("validation_tol", input.tol)
                .meta("start", json!(povm.labels()[*start]));
            for k in 0..=*steps {
                table.push(vec![
                    (*seed).into(),
                    (*runs).into(),
                    k.into(),
                    r.tv_to_stationary[k].into(),
                    r.exact_tv_to_stationary[k].into(),
                ]);
            }
            Ok(Outcome::table(table))
        }
        ChainCommand::Power { input, k_max, seed } => {
            let povm = load(input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let rho = projector_onto(&random_unit_vector(&mut rng, povm.dim()))?;
            let r = channel_power_convergence(&povm, &rho, *k_max)?;
            let mut table = Table::new(&["seed", "k", "distance_to_mixed"])
                .tolerance("validation_tol", input.tol)
                .tolerance("norm_floor", NORM_FLOOR)
                .tolerance("transient_fraction", TRANSIENT_FRACTION)
                .meta("fitted_rate", json!(r.fitted_rate))
                .meta("gamma1", json!(r.gamma1));
            for (k, d) in r.norms.iter().enumerate() {
                table.push(vec![(*seed).into(), k.into(), (*d).into()]);
            }
            Ok(Outcome::table(table))
        }
    }
}
