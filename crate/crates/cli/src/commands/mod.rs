mod cp1;
mod donaldson;
mod group;
mod noise;
mod povm;

use berezin_core::io::load_povm_with_tolerance;
use berezin_core::FinitePovm;

use crate::args::{Cli, Command, Format, PovmInput};
use crate::output::{emit, Report};
use crate::Failure;

pub enum Status {
    Ok,
    /// Output was written but a checked property failed on the input data.
    CheckFailed(String),
    /// Output was written but a numerical invariant failed.
    NumericalFailure(String),
}

/// A report plus the verdict of any checks it carries.
pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    pub verdict: Verdict,
}

pub enum Verdict {
    Ok,
    Validation(String),
    Numerical(String),
}

impl Outcome {
    pub fn json(value: serde_json::Value) -> Self {
        Outcome {
            report: Report::Document(value),
            default_format: Format::Json,
            verdict: Verdict::Ok,
        }
    }

    pub fn table(table: crate::output::Table) -> Self {
        Outcome {
            report: Report::Table(table),
            default_format: Format::Csv,
            verdict: Verdict::Ok,
        }
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }
}

pub fn dispatch(cli: &Cli) -> Result<Status, Failure> {
    let outcome = match &cli.command {
        Command::Povm(c) => povm::run(c)?,
        Command::Cp1(c) => cp1::run(c)?,
        Command::Group(c) => group::run(c)?,
        Command::Donaldson(c) => donaldson::run(c)?,
        Command::Noise(c) => noise::run_noise(c)?,
        Command::Chain(c) => noise::run_chain(c)?,
    };
    emit(&outcome.report, &cli.output, outcome.default_format)?;
    match outcome.verdict {
        Verdict::Ok => Ok(Status::Ok),
        Verdict::Validation(msg) => Ok(Status::CheckFailed(msg)),
        Verdict::Numerical(msg) => Ok(Status::NumericalFailure(msg)),
    }
}

pub fn load(input: &PovmInput) -> Result<FinitePovm, Failure> {
    if input.tol.is_nan() || input.tol <= 0.0 {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", input.tol)));
    }
    Ok(load_povm_with_tolerance(&input.input, input.force, input.tol)?)
}

/// `8`, `2,4,8` or an inclusive range `2..24`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("expected a number, list or range a..b, got '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_positive_list(s: &str) -> Result<Vec<f64>, Failure> {
    let values: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("expected comma-separated numbers, got '{s}'")))?;
    if values.is_empty() || values.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Failure::Usage(format!("values must be positive and finite, got '{s}'")));
    }
    Ok(values)
}
