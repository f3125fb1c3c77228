//! The six subcommands.
//!
//! Each command resolves its settings, computes a result table (sweep
//! points dispatched to a rayon pool sized by `--jobs`, results kept in
//! input order), and hands the table to the output layer.  Convergence
//! policy: a row whose certificate failed aborts the run with exit
//! code 3 unless `--allow-unconverged` was given, in which case the row
//! is emitted with `converged=false`.

use std::f64::consts::PI;

use num_complex::Complex64;
use qdchan_core::channels::{phase_average, phase_average_relaxed, scattering_fock_oracle, PhaseAverageOptions};
use qdchan_core::discord::{
    discord_dp_closed, discord_dp_from_variance, discord_numeric, discord_scattering,
    qd_variance_parametric, qvar_dp, SweepOptions, VarianceSweep,
};
use qdchan_core::fock::{fock_dim_for, schmidt_entropy_bits, HilbertSpec};
use qdchan_core::homodyne::{
    amid_ket, jqp_closed, mid_ket, quadrature_variance_numeric, QuadGrid,
};
use qdchan_core::quadrature::gauss_legendre_on;
use qdchan_core::states::{build_state_fock, pac_reduced_entropy_closed, ChannelKind};
use rayon::prelude::*;

use crate::config::{GridSpec, Settings, SweepAxis};
use crate::output::{emit, Field, Table, SWEEP_COLUMNS};
use crate::CliError;

type C64 = Complex64;

/// Build the worker pool sized by `--jobs` (0 = logical cores).
fn pool(settings: &Settings) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| CliError::runtime(format!("cannot build worker pool: {e}")))
}

fn kind_label(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::Dpc => "dpc",
        ChannelKind::Pac => "pac",
    }
}

fn pure_pair(kind: ChannelKind, alpha0: f64) -> Result<qdchan_core::fock::Ket, CliError> {
    let space = HilbertSpec::two_mode(fock_dim_for(alpha0))?;
    Ok(build_state_fock(kind, alpha0, &space)?)
}

/// Enforce the emission policy on a computed row's convergence flag.
fn gate_convergence(settings: &Settings, converged: bool, what: &str) -> Result<(), CliError> {
    if converged || settings.allow_unconverged {
        Ok(())
    } else {
        Err(CliError::non_convergence(format!(
            "{what} did not meet its convergence certificate \
             (re-run with --allow-unconverged to emit the row anyway)"
        )))
    }
}

/// Joint quadrature density P(X_A, X_B) of the pure pair on a square
/// grid, written as (x_a, x_b, p) rows.
pub fn cmd_jqp(settings: &Settings) -> Result<(), CliError> {
    let grid = settings.grid.unwrap_or({
        let reach = settings.alpha0 + 8.0;
        GridSpec {
            start: -reach,
            stop: reach,
            count: 161,
        }
    });
    let xs = grid.values();
    let mut rows = Vec::with_capacity(xs.len() * xs.len());
    let mut sum = 0.0;
    for &xa in &xs {
        for &xb in &xs {
            let p = jqp_closed(
                settings.kind,
                settings.alpha0,
                xa,
                xb,
                settings.lambda_a,
                settings.lambda_b,
            );
            sum += p;
            rows.push(vec![Field::Num(xa), Field::Num(xb), Field::Num(p)]);
        }
    }
    // Uniform-grid Riemann normalization check: the density decays as a
    // Gaussian, so on an adequate window the cell sum reproduces the unit
    // norm to quadrature accuracy.
    if grid.count > 1 {
        let step = (grid.stop - grid.start) / (grid.count - 1) as f64;
        let norm = sum * step * step;
        gate_convergence(
            settings,
            (norm - 1.0).abs() < 1e-6,
            &format!("density grid normalization (Σ·ΔAΔB = {norm:.9})"),
        )?;
    }
    emit(
        "jqp",
        settings,
        &Table {
            columns: &["x_a", "x_b", "p"],
            rows,
        },
    )
}

/// MID over the detector-phase square [0, π]², written as
/// (lambda_a, lambda_b, mid_bits) rows.
pub fn cmd_mid_map(settings: &Settings) -> Result<(), CliError> {
    let ket = pure_pair(settings.kind, settings.alpha0)?;
    let quad = QuadGrid::for_amplitude(settings.alpha0);
    let n = settings.resolution;
    let lambdas: Vec<f64> = (0..n).map(|k| PI * k as f64 / (n - 1) as f64).collect();
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&la| lambdas.iter().map(move |&lb| (la, lb)))
        .collect();
    let values: Vec<f64> = pool(settings)?.install(|| {
        points
            .par_iter()
            .map(|&(la, lb)| mid_ket(&ket, la, lb, &quad))
            .collect::<Result<_, _>>()
    })?;
    let rows = points
        .iter()
        .zip(&values)
        .map(|(&(la, lb), &mid)| vec![Field::Num(la), Field::Num(lb), Field::Num(mid)])
        .collect();
    emit(
        "mid-map",
        settings,
        &Table {
            columns: &["lambda_a", "lambda_b", "mid_bits"],
            rows,
        },
    )
}

/// AMID versus seed amplitude, full sweep-record rows.
pub fn cmd_amid_sweep(settings: &Settings) -> Result<(), CliError> {
    let grid = settings.grid.unwrap_or(GridSpec {
        start: 0.0,
        stop: 10.0,
        count: 11,
    });
    let alphas = grid.values();
    if let Some(bad) = alphas.iter().find(|a| **a < 0.0) {
        return Err(CliError::invalid(format!(
            "amid-sweep grid holds a negative amplitude {bad}"
        )));
    }
    let results: Vec<(f64, qdchan_core::homodyne::AmidResult)> = pool(settings)?.install(|| {
        alphas
            .par_iter()
            .map(|&alpha0| {
                let ket = pure_pair(settings.kind, alpha0)?;
                let quad = QuadGrid::for_amplitude(alpha0);
                Ok((alpha0, amid_ket(&ket, &quad)?))
            })
            .collect::<Result<_, CliError>>()
    })?;
    let kind = kind_label(settings.kind);
    let rows = results
        .iter()
        .map(|(alpha0, amid)| {
            vec![
                Field::Text(kind),
                Field::Num(*alpha0),
                Field::Num(alpha0 * alpha0),
                Field::Null,
                Field::Null,
                Field::Num(amid.lambda_a),
                Field::Num(amid.lambda_b),
                Field::Null,
                Field::Null,
                Field::Null,
                Field::Null,
                Field::Null,
                Field::Num(amid.bits),
                Field::Int(fock_dim_for(*alpha0) as u64),
                Field::Int(amid.nodes as u64),
                Field::Bool(true),
            ]
        })
        .collect();
    emit(
        "amid-sweep",
        settings,
        &Table {
            columns: SWEEP_COLUMNS,
            rows,
        },
    )
}

/// One computed discord point destined for a sweep row.
struct DiscordPoint {
    alpha0: f64,
    eta: f64,
    sigma: f64,
    theta: f64,
    phi: f64,
    discord: f64,
    truncation_dim: usize,
    nodes: usize,
    converged: bool,
}

fn discord_point(
    kind: ChannelKind,
    alpha0: f64,
    eta: f64,
    sigma: f64,
    allow_unconverged: bool,
) -> Result<DiscordPoint, CliError> {
    if sigma == 0.0 {
        let result = discord_scattering(kind, alpha0, eta)?;
        return Ok(DiscordPoint {
            alpha0,
            eta,
            sigma,
            theta: result.theta,
            phi: result.phi,
            discord: result.value,
            truncation_dim: 2,
            nodes: 1,
            converged: result.converged,
        });
    }
    let space = HilbertSpec::two_mode(fock_dim_for(alpha0))?;
    let scattered = scattering_fock_oracle(kind, alpha0, eta, &space)?;
    let options = PhaseAverageOptions::default();
    let averaged = if allow_unconverged {
        phase_average_relaxed(&scattered, sigma, &options)?
    } else {
        phase_average(&scattered, sigma, &options)?
    };
    let alpha = C64::new(alpha0 / 2.0_f64.sqrt(), 0.0);
    let result = discord_numeric(&averaged.rho, alpha)?;
    Ok(DiscordPoint {
        alpha0,
        eta,
        sigma,
        theta: result.theta,
        phi: result.phi,
        discord: result.value,
        truncation_dim: space.mode_dim(0),
        nodes: averaged.nodes,
        converged: averaged.converged && result.converged,
    })
}

/// Discord along one swept axis (η, σ, or n₀), full sweep-record rows.
pub fn cmd_discord_sweep(settings: &Settings) -> Result<(), CliError> {
    let (grid, points): (GridSpec, Vec<(f64, f64, f64)>) = match settings.sweep {
        SweepAxis::Eta => {
            let grid = settings.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 1.0,
                count: 11,
            });
            let points = grid
                .values()
                .into_iter()
                .map(|eta| (settings.alpha0, eta, settings.sigma))
                .collect();
            (grid, points)
        }
        SweepAxis::Sigma => {
            let grid = settings.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 1.96,
                count: 8,
            });
            let points = grid
                .values()
                .into_iter()
                .map(|sigma| (settings.alpha0, settings.eta, sigma))
                .collect();
            (grid, points)
        }
        SweepAxis::N0 => {
            let grid = settings.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 10.0,
                count: 11,
            });
            let points = grid
                .values()
                .into_iter()
                .map(|n0| (n0.sqrt(), settings.eta, settings.sigma))
                .collect();
            (grid, points)
        }
    };
    for &(alpha0, eta, sigma) in &points {
        if !(0.0..=1.0).contains(&eta) {
            return Err(CliError::invalid(format!(
                "swept transmittance {eta} outside [0, 1] (grid {grid})"
            )));
        }
        if sigma < 0.0 || alpha0.is_nan() {
            return Err(CliError::invalid(format!(
                "swept grid {grid} leaves the parameter domain (σ = {sigma}, α₀ = {alpha0})"
            )));
        }
    }
    let computed: Vec<DiscordPoint> = pool(settings)?.install(|| {
        points
            .par_iter()
            .map(|&(alpha0, eta, sigma)| {
                discord_point(settings.kind, alpha0, eta, sigma, settings.allow_unconverged)
            })
            .collect::<Result<_, _>>()
    })?;
    let kind = kind_label(settings.kind);
    let mut rows = Vec::with_capacity(computed.len());
    for point in &computed {
        gate_convergence(
            settings,
            point.converged,
            &format!("discord at (α₀={}, η={}, σ={})", point.alpha0, point.eta, point.sigma),
        )?;
        rows.push(vec![
            Field::Text(kind),
            Field::Num(point.alpha0),
            Field::Num(point.alpha0 * point.alpha0),
            Field::Num(point.eta),
            Field::Num(point.sigma),
            Field::Null,
            Field::Null,
            Field::Num(point.theta),
            Field::Num(point.phi),
            Field::Num(point.discord),
            Field::Null,
            Field::Null,
            Field::Null,
            Field::Int(point.truncation_dim as u64),
            Field::Int(point.nodes as u64),
            Field::Bool(point.converged),
        ]);
    }
    emit(
        "discord-sweep",
        settings,
        &Table {
            columns: SWEEP_COLUMNS,
            rows,
        },
    )
}

/// The (ΔX²_{λ_A}, D_B) relation along a swept axis, full sweep-record
/// rows carrying both coordinates.
pub fn cmd_qd_vs_variance(settings: &Settings) -> Result<(), CliError> {
    let values: Vec<(f64, f64)> = match settings.sweep {
        SweepAxis::Eta => {
            let grid = settings.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 1.0,
                count: 11,
            });
            grid.values()
                .into_iter()
                .map(|eta| (eta, settings.sigma))
                .collect()
        }
        SweepAxis::Sigma => {
            let grid = settings.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 1.96,
                count: 8,
            });
            grid.values()
                .into_iter()
                .map(|sigma| (settings.eta, sigma))
                .collect()
        }
        SweepAxis::N0 => {
            return Err(CliError::invalid(
                "qd-vs-variance sweeps eta or sigma; n0 is fixed per run",
            ));
        }
    };
    if let Some((eta, _)) = values.iter().find(|(eta, _)| !(0.0..=1.0).contains(eta)) {
        return Err(CliError::invalid(format!(
            "swept transmittance {eta} outside [0, 1]"
        )));
    }
    if let Some((_, sigma)) = values.iter().find(|(_, sigma)| *sigma < 0.0) {
        return Err(CliError::invalid(format!(
            "swept noise width must be ≥ 0, got {sigma}"
        )));
    }
    let options = SweepOptions {
        phase: PhaseAverageOptions::default(),
        allow_unconverged: settings.allow_unconverged,
    };
    let computed: Vec<qdchan_core::discord::QdVariancePoint> = pool(settings)?.install(|| {
        values
            .par_iter()
            .map(|&(eta, sigma)| {
                let sweep = VarianceSweep::Eta {
                    values: vec![eta],
                    sigma,
                };
                let mut points = qd_variance_parametric(
                    settings.kind,
                    settings.alpha0,
                    settings.lambda_a,
                    &sweep,
                    &options,
                )?;
                Ok(points.pop().expect("singleton sweep yields one point"))
            })
            .collect::<Result<_, CliError>>()
    })?;
    let kind = kind_label(settings.kind);
    let mut rows = Vec::with_capacity(computed.len());
    for point in &computed {
        let converged = point.phase_converged && point.discord.converged;
        gate_convergence(
            settings,
            converged,
            &format!("qd-vs-variance at (η={}, σ={})", point.eta, point.sigma),
        )?;
        rows.push(vec![
            Field::Text(kind),
            Field::Num(settings.alpha0),
            Field::Num(settings.alpha0 * settings.alpha0),
            Field::Num(point.eta),
            Field::Num(point.sigma),
            Field::Num(point.lambda_a),
            Field::Null,
            Field::Num(point.discord.theta),
            Field::Num(point.discord.phi),
            Field::Num(point.discord.value),
            Field::Num(point.variance),
            Field::Null,
            Field::Null,
            Field::Int(point.truncation_dim as u64),
            Field::Int(point.phase_nodes as u64),
            Field::Bool(converged),
        ]);
    }
    emit(
        "qd-vs-variance",
        settings,
        &Table {
            columns: SWEEP_COLUMNS,
            rows,
        },
    )
}

/// Fast internal consistency checks; failure exits with code 3.
pub fn cmd_selftest() -> Result<(), CliError> {
    let mut failures = 0_usize;
    let mut run = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("ok     {name}: {detail}");
        } else {
            println!("FAILED {name}: {detail}");
            failures += 1;
        }
    };

    let endpoints =
        discord_dp_closed(1.0).map(|d1| (d1, discord_dp_closed(0.0).unwrap_or(f64::NAN)));
    match endpoints {
        Ok((d1, d0)) => run(
            "closed-form endpoints",
            d1 == 1.0 && d0 == 0.0,
            format!("D(1) = {d1}, D(0) = {d0}"),
        ),
        Err(e) => run("closed-form endpoints", false, e.to_string()),
    }

    let identity: Result<f64, CliError> = (|| {
        let mut worst = 0.0_f64;
        for k in 1..=9 {
            let eta = 0.1 * k as f64;
            let gap =
                (discord_dp_from_variance(0.5 * (1.0 + eta))? - discord_dp_closed(eta)?).abs();
            worst = worst.max(gap);
        }
        Ok(worst)
    })();
    match identity {
        Ok(worst) => run(
            "variance/transmittance identity",
            worst < 1e-10,
            format!("max |Δ| = {worst:.2e}"),
        ),
        Err(e) => run("variance/transmittance identity", false, e.to_string()),
    }

    let numeric: Result<f64, CliError> = (|| {
        let value = discord_scattering(ChannelKind::Dpc, 1.0, 0.8)?.value;
        Ok((value - discord_dp_closed(0.8)?).abs())
    })();
    match numeric {
        Ok(gap) => run(
            "numeric discord vs closed form",
            gap < 1e-6,
            format!("|Δ| = {gap:.2e} at η = 0.8"),
        ),
        Err(e) => run("numeric discord vs closed form", false, e.to_string()),
    }

    let norm: Result<f64, CliError> = (|| {
        let rule = gauss_legendre_on(101, -9.0, 9.0)?;
        let integral: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&xa, &wa)| {
                wa * rule.integrate(|xb| jqp_closed(ChannelKind::Dpc, 1.0, xa, xb, 0.3, 1.1))
            })
            .sum();
        Ok(integral)
    })();
    match norm {
        Ok(integral) => run(
            "joint density normalization",
            (integral - 1.0).abs() < 1e-8,
            format!("∫∫P = {integral:.10}"),
        ),
        Err(e) => run("joint density normalization", false, e.to_string()),
    }

    let variance: Result<f64, CliError> = (|| {
        let space = HilbertSpec::two_mode(fock_dim_for(0.0))?;
        let scattered = scattering_fock_oracle(ChannelKind::Dpc, 0.0, 0.8, &space)?;
        let averaged = phase_average(&scattered, 0.5, &PhaseAverageOptions::default())?;
        let numeric = quadrature_variance_numeric(&averaged.rho, 0, 0.0)?;
        Ok((numeric - qvar_dp(0.0, 0.0, 0.8, 0.5)?).abs())
    })();
    match variance {
        Ok(gap) => run(
            "variance closed form vs Fock moment",
            gap < 1e-6,
            format!("|Δ| = {gap:.2e}"),
        ),
        Err(e) => run("variance closed form vs Fock moment", false, e.to_string()),
    }

    let entropy: Result<f64, CliError> = (|| {
        let ket = pure_pair(ChannelKind::Pac, 1.0)?;
        Ok((schmidt_entropy_bits(&ket)? - pac_reduced_entropy_closed(1.0)).abs())
    })();
    match entropy {
        Ok(gap) => run(
            "arm entropy vs closed form",
            gap < 1e-6,
            format!("|Δ| = {gap:.2e} at α₀ = 1"),
        ),
        Err(e) => run("arm entropy vs closed form", false, e.to_string()),
    }

    let amid: Result<(f64, f64), CliError> = (|| {
        let ket = pure_pair(ChannelKind::Pac, 1.0)?;
        let quad = QuadGrid::for_amplitude(1.0);
        let amid = amid_ket(&ket, &quad)?.bits;
        let mid = mid_ket(&ket, 0.4, 0.9, &quad)?;
        Ok((amid, mid))
    })();
    match amid {
        Ok((amid, mid)) => run(
            "amid lower-bounds mid",
            amid <= mid + 1e-9 && amid >= 0.0,
            format!("AMID = {amid:.6}, MID(0.4, 0.9) = {mid:.6}"),
        ),
        Err(e) => run("amid lower-bounds mid", false, e.to_string()),
    }

    if failures == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(CliError::non_convergence(format!(
            "selftest: {failures} check(s) failed"
        )))
    }
}
