//! Command implementations.

use std::process::ExitCode;

use anyhow::{bail, Result};
use serde::Serialize;

use gmconc::bounds::{certified_interval, optimize_lower, optimize_upper, BoundQuery};
use gmconc::estimator::{EstimatorReport, EstimatorState, Interval};
use gmconc::moments::{exact_moment_euclidean, exact_moment_weighted, MomentResult};
use gmconc::sampling::{run_experiment, SimulationPlan, SphereSpec};
use gmconc::special::euclidean_center;
use gmconc::weights::WeightFamily;

use crate::config::{Cli, Command, OutputFormat, WeightSpec};
use crate::output::{csv_record, emit, fmt_sig, CSV_SIG_DIGITS};
use crate::verify;

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Moment {
            n,
            weights,
            s,
            format,
            out,
        } => {
            let text = cmd_moment(*n, weights, *s, *format)?;
            emit(out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound {
            weights,
            k,
            eps,
            n,
            format,
            out,
        } => {
            let text = cmd_bound(weights, *k, *eps, *n, *format)?;
            emit(out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            n,
            weights,
            samples,
            seed,
            eps,
            format,
            out,
        } => {
            let text = cmd_simulate(*n, weights, *samples, *seed, *eps, *format)?;
            emit(out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            samples,
            n,
            seed,
            weights,
        } => verify::cmd_verify(*samples, *n, *seed, weights.as_ref()),
        Command::Table {
            weights,
            n,
            samples,
            seed,
            format,
            out,
        } => {
            let text = cmd_table(weights, *n, *samples, *seed, *format)?;
            emit(out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct MomentOutput {
    sphere: String,
    n: usize,
    s: f64,
    log_moment: f64,
    moment: Option<f64>,
    normalized_root: Option<f64>,
}

fn moment_output(sphere: String, n: usize, s: f64, result: MomentResult) -> MomentOutput {
    // exp(log_moment) is representable only below ~709.
    let moment = (result.log_moment.abs() < 700.0).then(|| result.log_moment.exp());
    MomentOutput {
        sphere,
        n,
        s,
        log_moment: result.log_moment,
        moment,
        normalized_root: result.normalized_root,
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| fmt_sig(x, CSV_SIG_DIGITS)).unwrap_or_default()
}

fn cmd_moment(n: usize, weights: &WeightSpec, s: f64, format: OutputFormat) -> Result<String> {
    let output = match weights.resolve(n)? {
        SphereSpec::Euclidean(n) => {
            moment_output("euclidean".into(), n, s, exact_moment_euclidean(n, s)?)
        }
        SphereSpec::Weighted(w) => moment_output(
            w.family().to_string(),
            w.n(),
            s,
            exact_moment_weighted(&w, s)?,
        ),
    };
    Ok(match format {
        OutputFormat::Json => to_json(&output)?,
        OutputFormat::Csv => {
            let header = "sphere,n,s,log_moment,moment,normalized_root";
            let row = csv_record(vec![
                output.sphere.clone(),
                output.n.to_string(),
                fmt_sig(output.s, CSV_SIG_DIGITS),
                fmt_sig(output.log_moment, CSV_SIG_DIGITS),
                opt_field(output.moment),
                opt_field(output.normalized_root),
            ]);
            format!("{header}\n{row}\n")
        }
    })
}

fn weight_family_of(weights: &WeightSpec) -> Result<WeightFamily> {
    match weights {
        WeightSpec::Family(family) => Ok(*family),
        WeightSpec::Euclidean => {
            bail!("the bound machinery applies to weighted l1 spheres, not euclidean")
        }
        WeightSpec::CustomFile(_) => {
            bail!("bound optimization requires a scalable weight family (equal, two-level, diverging)")
        }
    }
}

fn cmd_bound(
    weights: &WeightSpec,
    k: f64,
    eps: f64,
    n: Option<usize>,
    format: OutputFormat,
) -> Result<String> {
    let family = weight_family_of(weights)?;
    let query = BoundQuery::new(family, k, eps)?;
    let upper = optimize_upper(&query)?;
    let lower = optimize_lower(&query)?;
    let n_spec = n.unwrap_or(upper.n_min.max(lower.n_min) as usize);
    let w = family.instantiate(n_spec)?;
    let cert = certified_interval(&w, n_spec, k, eps)?;
    Ok(match format {
        OutputFormat::Json => to_json(&cert)?,
        OutputFormat::Csv => {
            let header = "family,n,k,epsilon,s_upper,s_lower,n_min,lower_threshold,\
                          upper_threshold,probability_floor,predicted_center,theorem_matching";
            let row = csv_record(vec![
                cert.family.clone(),
                cert.n.to_string(),
                fmt_sig(cert.k, CSV_SIG_DIGITS),
                fmt_sig(cert.epsilon, CSV_SIG_DIGITS),
                fmt_sig(cert.s_upper, CSV_SIG_DIGITS),
                fmt_sig(cert.s_lower, CSV_SIG_DIGITS),
                cert.n_min.to_string(),
                fmt_sig(cert.lower_threshold, CSV_SIG_DIGITS),
                fmt_sig(cert.upper_threshold, CSV_SIG_DIGITS),
                fmt_sig(cert.probability_floor, CSV_SIG_DIGITS),
                fmt_sig(cert.predicted_center, CSV_SIG_DIGITS),
                cert.theorem_matching.to_string(),
            ]);
            format!("{header}\n{row}\n")
        }
    })
}

#[derive(Serialize)]
struct SimulateOutput {
    sphere: String,
    n: usize,
    samples: u64,
    seed: u64,
    eps: f64,
    predicted_center: f64,
    report: EstimatorReport,
}

pub(crate) fn predicted_center_of(sphere: &SphereSpec) -> f64 {
    match sphere {
        SphereSpec::Weighted(w) => w.stats().predicted_center,
        SphereSpec::Euclidean(_) => euclidean_center(),
    }
}

pub(crate) fn simulate_state(
    sphere: SphereSpec,
    samples: u64,
    seed: u64,
    eps: f64,
) -> Result<(EstimatorState, f64)> {
    let center = predicted_center_of(&sphere);
    // Two standing intervals: the relative band around the predicted center,
    // and the collapse event {ratio < eps}.
    let intervals = vec![
        Interval::new((1.0 - eps) * center, (1.0 + eps) * center),
        Interval::new(0.0, eps),
    ];
    let plan = SimulationPlan::new(sphere, samples, seed, intervals);
    Ok((run_experiment(&plan)?, center))
}

fn cmd_simulate(
    n: usize,
    weights: &WeightSpec,
    samples: u64,
    seed: u64,
    eps: f64,
    format: OutputFormat,
) -> Result<String> {
    let sphere = weights.resolve(n)?;
    let sphere_name = match &sphere {
        SphereSpec::Weighted(w) => w.family().to_string(),
        SphereSpec::Euclidean(_) => "euclidean".to_string(),
    };
    let (state, center) = simulate_state(sphere, samples, seed, eps)?;
    let output = SimulateOutput {
        sphere: sphere_name,
        n,
        samples,
        seed,
        eps,
        predicted_center: center,
        report: state.to_report(),
    };
    Ok(match format {
        OutputFormat::Json => to_json(&output)?,
        OutputFormat::Csv => {
            let header = "sphere,n,samples,seed,eps,predicted_center,count,mean,sd,median,\
                          p_center_band,p_below_eps";
            let row = csv_record(vec![
                output.sphere.clone(),
                output.n.to_string(),
                output.samples.to_string(),
                output.seed.to_string(),
                fmt_sig(output.eps, CSV_SIG_DIGITS),
                fmt_sig(output.predicted_center, CSV_SIG_DIGITS),
                output.report.count.to_string(),
                fmt_sig(output.report.mean, CSV_SIG_DIGITS),
                fmt_sig(output.report.sd, CSV_SIG_DIGITS),
                opt_field(output.report.median),
                fmt_sig(output.report.intervals[0].probability, CSV_SIG_DIGITS),
                fmt_sig(output.report.intervals[1].probability, CSV_SIG_DIGITS),
            ]);
            format!("{header}\n{row}\n")
        }
    })
}

#[derive(Serialize)]
struct TableRow {
    family: String,
    n: usize,
    samples: u64,
    seed: u64,
    predicted_center: f64,
    mean: f64,
    sd: f64,
    median: f64,
    p_center_band: f64,
}

/// The canonical sweep for each family. A `--n` override pins the dimension
/// (single row for n-sweeps; fixed dimension for the two-level M-sweep).
fn sweep_points(weights: &WeightSpec) -> Vec<WeightSpec> {
    match weights {
        WeightSpec::Family(WeightFamily::TwoLevel { .. }) => [1.0, 2.0, 4.0, 8.0]
            .into_iter()
            .map(|m| WeightSpec::Family(WeightFamily::TwoLevel { m }))
            .collect(),
        other => vec![other.clone()],
    }
}

fn sweep_dimensions(weights: &WeightSpec, n: Option<usize>) -> Vec<usize> {
    if let Some(n) = n {
        return vec![n];
    }
    match weights {
        WeightSpec::Family(WeightFamily::TwoLevel { .. }) => vec![10_000],
        WeightSpec::Family(WeightFamily::Diverging { .. }) => vec![1_000, 10_000],
        _ => vec![100, 1_000, 10_000],
    }
}

fn cmd_table(
    weights: &WeightSpec,
    n: Option<usize>,
    samples: u64,
    seed: u64,
    format: OutputFormat,
) -> Result<String> {
    const TABLE_EPS: f64 = 0.05;
    let mut rows = Vec::new();
    for spec in sweep_points(weights) {
        for dim in sweep_dimensions(weights, n) {
            let sphere = spec.resolve(dim)?;
            let family = match &sphere {
                SphereSpec::Weighted(w) => w.family().to_string(),
                SphereSpec::Euclidean(_) => "euclidean".to_string(),
            };
            let (state, center) = simulate_state(sphere, samples, seed, TABLE_EPS)?;
            rows.push(TableRow {
                family,
                n: dim,
                samples,
                seed,
                predicted_center: center,
                mean: state.mean(),
                sd: state.sd(),
                median: state.median().unwrap_or(f64::NAN),
                p_center_band: state.interval_probability(0),
            });
        }
    }
    Ok(match format {
        OutputFormat::Json => to_json(&rows)?,
        OutputFormat::Csv => {
            let mut text = String::from(
                "family,n,samples,seed,predicted_center,mean,sd,median,p_center_band\n",
            );
            for r in rows {
                text.push_str(&csv_record(vec![
                    r.family.clone(),
                    r.n.to_string(),
                    r.samples.to_string(),
                    r.seed.to_string(),
                    fmt_sig(r.predicted_center, CSV_SIG_DIGITS),
                    fmt_sig(r.mean, CSV_SIG_DIGITS),
                    fmt_sig(r.sd, CSV_SIG_DIGITS),
                    fmt_sig(r.median, CSV_SIG_DIGITS),
                    fmt_sig(r.p_center_band, CSV_SIG_DIGITS),
                ]));
                text.push('\n');
            }
            text
        }
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

