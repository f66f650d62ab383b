//! Command-line front end.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{defaults, parse_config, ExperimentKind, RunConfig, S21Mode, SweepOver};
use super::output::{ErrorRecord, OutputDir, RunManifest, RunStatus, Table};
use crate::error::{Error, Result};
use crate::experiments::{
    add_transmission_noise, burst_delay, default_phase_grid, default_tau_grid, dispersive_warning, fit_s21, oat_rate_scan,
    run_oat, run_ramsey, run_superradiance, s21_model, OatRateScan, PhaseScan, RamseyOptions, S21Data, S21Fixed, S21Guess,
    ScanAxis, SuperradianceOptions, TraceMetadata,
};
use crate::fit::{fit_sech2_burst, ExponentialModel};
use crate::params::{derive_rates, DerivedRates};

#[derive(Debug, Parser)]
#[command(name = "cavspin", version, about = "Mean-field cavity-QED spin ensemble simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for tables and report.json; falls back to the
    /// config's `output_dir`, then `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the integrator relative tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print the derived rates.
    Params,
    /// Superradiant burst from a tilted collective state.
    Superradiance,
    /// Spin-echo readout of the one-axis-twisting phase.
    Oat,
    /// Ramsey coherence and T2* under gap protection.
    Ramsey,
    /// Cavity transmission model or fit.
    S21,
    /// Run an experiment over a grid of one parameter.
    Sweep,
}

impl Command {
    pub fn kind(self) -> ExperimentKind {
        match self {
            Command::Params => ExperimentKind::Params,
            Command::Superradiance => ExperimentKind::Superradiance,
            Command::Oat => ExperimentKind::Oat,
            Command::Ramsey => ExperimentKind::Ramsey,
            Command::S21 => ExperimentKind::S21,
            Command::Sweep => ExperimentKind::Sweep,
        }
    }
}

/// Result of [`run`]: the process exit code and the manifest written to disk.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
}

/// Headline numbers of one run, used for sweep summaries.
type Summary = Vec<(String, String, f64)>;

#[derive(Default)]
struct Output {
    results: Value,
    warnings: Vec<String>,
    rates: Option<DerivedRates>,
    summary: Summary,
    fit_failed: Option<String>,
}

fn metadata_warnings(meta: &TraceMetadata, warnings: &mut Vec<String>) {
    for w in &meta.warnings {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    if meta.truncated > 0 {
        warnings.push(format!(
            "{} random offsets beyond the lineshape truncation were redrawn",
            meta.truncated
        ));
    }
}

fn run_params(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.physical_params()?;
    let r = derive_rates(&p)?;
    println!("chi_hz = {:e}", r.chi);
    println!("gamma_sr_single_hz = {:e}", r.gamma_sr_single);
    println!("chi_n_hz = {:e}", r.chi_n);
    println!("gamma_c_hz = {:e}", r.gamma_c);
    println!("gap_hz = {:e}", r.gap);
    println!("g_coll_hz = {:e}", r.g_coll);
    println!("n0 = {:e}", p.n0);
    Ok(Output {
        results: json!({ "params": p }),
        warnings: dispersive_warning(&p).into_iter().collect(),
        rates: Some(r),
        summary: vec![
            ("chi_n".into(), "Hz".into(), r.chi_n),
            ("gamma_c".into(), "Hz".into(), r.gamma_c),
        ],
        ..Output::default()
    })
}

fn run_superradiance_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    let p = cfg.physical_params()?;
    let rates = derive_rates(&p)?;
    let theta = cfg
        .theta
        .ok_or_else(|| Error::Config {
            key: "theta".into(),
            reason: "superradiance needs the initial polar angle".into(),
        })?;
    let t_max = match cfg.t_max_s {
        Some(t) => t,
        None if rates.gamma_c > 0.0 => {
            let lifetime = 4.0 / (TAU * rates.gamma_c);
            burst_delay(rates.gamma_c, theta).max(0.0) + defaults::LIFETIMES * lifetime
        }
        None => {
            return Err(Error::Config {
                key: "t_max_s".into(),
                reason: "required when the collective rate vanishes".into(),
            })
        }
    };
    let opts = SuperradianceOptions {
        epsilon: cfg.epsilon.unwrap_or(defaults::EPSILON),
        n_points: cfg.n_points.unwrap_or(defaults::N_POINTS),
        integrator: cfg.integrator(),
    };
    let run = run_superradiance(&p, theta, t_max, &opts)?;
    let mut warnings = Vec::new();
    metadata_warnings(&run.intensity.metadata, &mut warnings);
    out.table(
        "superradiance.csv",
        &Table::new("superradiance")
            .column("t", "s", run.intensity.times.clone())
            .column("intensity", "1/s", run.intensity.values.clone())
            .column("intensity_normalized", "1", run.normalized.values.clone())
            .column("s_z", "1", run.s_z.values.clone()),
    )?;
    let mut fit_failed = None;
    let burst = match fit_sech2_burst(&run.intensity.times, &run.intensity.values, Some(p.n0)) {
        Ok(b) => {
            if !b.fit.converged {
                fit_failed = Some("sech2 burst fit did not converge".to_string());
            }
            warnings.extend(b.fit.warnings.iter().cloned());
            serde_json::to_value(&b).unwrap_or(Value::Null)
        }
        Err(e) => {
            fit_failed = Some(e.to_string());
            Value::Null
        }
    };
    let summary = vec![
        ("peak_time".into(), "s".into(), run.peak_time),
        ("peak_intensity".into(), "1/s".into(), run.peak_intensity),
        (
            "gamma_c_fit".into(),
            "Hz".into(),
            burst.pointer("/fit/params/0").and_then(Value::as_f64).unwrap_or(f64::NAN),
        ),
    ];
    Ok(Output {
        results: json!({
            "theta": theta,
            "t_max_s": t_max,
            "peak_time_s": run.peak_time,
            "peak_intensity_per_s": run.peak_intensity,
            "burst_delay_closed_form_s": if rates.gamma_c > 0.0 { burst_delay(rates.gamma_c, theta) } else { f64::NAN },
            "burst_fit": burst,
            "steps": run.stats.accepted,
        }),
        warnings,
        rates: Some(rates),
        summary,
        fit_failed,
    })
}

fn phase_tables(scans: &[PhaseScan], out: &mut OutputDir) -> Result<()> {
    let mut tau = Vec::new();
    let mut phi = Vec::new();
    let mut p_up = Vec::new();
    for s in scans {
        tau.extend(std::iter::repeat(s.tau).take(s.phi.len()));
        phi.extend(&s.phi);
        p_up.extend(&s.p_up);
    }
    out.table(
        "oat_phase.csv",
        &Table::new("oat readout phase scans")
            .column("tau", "s", tau)
            .column("phi", "rad", phi)
            .column("p_up", "1", p_up),
    )?;
    out.table(
        "oat_summary.csv",
        &Table::new("oat echo phase")
            .column("tau", "s", scans.iter().map(|s| s.tau).collect())
            .column("delta_phi", "rad", scans.iter().map(|s| s.delta_phi).collect())
            .column("delta_phi_sigma", "rad", scans.iter().map(|s| s.delta_phi_sigma).collect())
            .column("azimuth_shift", "rad", scans.iter().map(|s| s.azimuth_shift).collect())
            .column("contrast", "1", scans.iter().map(|s| s.contrast).collect()),
    )
}

fn run_oat_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    let p = cfg.physical_params()?;
    let rates = derive_rates(&p)?;
    let ens = cfg.ensemble(cfg.seed());
    let theta = cfg.theta.unwrap_or(defaults::THETA);
    let taus = cfg.tau_s.clone().unwrap_or_else(|| vec![defaults::TAU_S]);
    let phases = default_phase_grid(cfg.n_phi.unwrap_or(defaults::N_PHI));
    let (scans, line): (Vec<PhaseScan>, Option<OatRateScan>) = if taus.len() >= 4 {
        let mut scan = oat_rate_scan(&p, &ens, theta, &ScanAxis::Tau { values: taus }, &phases)?;
        let scans = std::mem::take(&mut scan.scans);
        (scans, Some(scan))
    } else {
        let scans = taus
            .par_iter()
            .map(|&tau| run_oat(&p, &ens, theta, tau, &phases))
            .collect::<Result<Vec<_>>>()?;
        (scans, None)
    };
    let mut warnings = Vec::new();
    let mut fit_failed = None;
    for s in &scans {
        metadata_warnings(&s.metadata, &mut warnings);
        if !s.fit.converged {
            fit_failed = Some(format!("readout sinusoid fit at tau = {:e} s did not converge", s.tau));
        }
    }
    phase_tables(&scans, out)?;
    let mut summary = vec![("delta_phi".into(), "rad".into(), scans[0].delta_phi)];
    let rate = line.as_ref().map(|l| {
        summary.push(("chi_n_fit".into(), "Hz".into(), l.rate));
        if !l.line.converged {
            fit_failed = Some("linear fit of delta_phi(tau) did not converge".into());
        }
        json!({ "chi_n_hz": l.rate, "chi_n_sigma_hz": l.rate_sigma, "line": l.line })
    });
    let per_tau: Vec<Value> = scans
        .iter()
        .map(|s| {
            json!({
                "tau_s": s.tau,
                "delta_phi_rad": s.delta_phi,
                "delta_phi_sigma_rad": s.delta_phi_sigma,
                "contrast": s.contrast,
                "fit": s.fit,
            })
        })
        .collect();
    Ok(Output {
        results: json!({ "theta": theta, "rate_fit": rate, "scans": per_tau, "chi_n_derived_hz": rates.chi_n }),
        warnings,
        rates: Some(rates),
        summary,
        fit_failed,
    })
}

/// Collective coupling producing `chi_n` at the configured `κ` and `Δ`.
fn g_coll_for_chi_n(chi_n: f64, kappa: f64, delta: f64) -> f64 {
    (chi_n * (4.0 * delta * delta + kappa * kappa) / (4.0 * delta)).sqrt()
}

fn run_ramsey_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    let base = cfg.physical_params()?;
    let points: Vec<Option<f64>> = match &cfg.chi_n_hz {
        Some(list) => list.iter().map(|&c| Some(c)).collect(),
        None => vec![None],
    };
    let params = points
        .iter()
        .map(|c| match c {
            Some(chi) => cfg.physical_params_with(Some(g_coll_for_chi_n(*chi, base.kappa, base.delta))),
            None => Ok(base),
        })
        .collect::<Result<Vec<_>>>()?;
    let tau = cfg.ramsey_tau_s.clone().unwrap_or_else(default_tau_grid);
    let ens = cfg.ensemble(cfg.seed());
    let opts = RamseyOptions {
        fit: true,
        allow_double: cfg.allow_double.unwrap_or(true),
        convergence_check: cfg.convergence_check.unwrap_or(false),
    };
    let runs = params
        .par_iter()
        .map(|p| run_ramsey(p, &ens, &tau, &opts))
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    let mut fit_failed = None;
    let mut entries = Vec::new();
    let mut chi = Vec::new();
    let mut t2 = Vec::new();
    let mut t2_sigma = Vec::new();
    let mut double = Vec::new();
    let mut dominant = Vec::new();
    for (k, (run, p)) in runs.iter().zip(&params).enumerate() {
        metadata_warnings(&run.coherence.metadata, &mut warnings);
        let fit = run.fit.as_ref().expect("fit requested");
        if !fit.selected_fit().converged {
            fit_failed = Some(format!("exponential fit {k} did not converge"));
        }
        warnings.extend(fit.warnings.iter().map(|w| format!("point {k}: {w}")));
        let rates = derive_rates(p)?;
        out.table(
            &format!("ramsey_{k:02}.csv"),
            &Table::new(&format!("ramsey coherence, chi_n = {:e} Hz", rates.chi_n))
                .column("tau", "s", run.coherence.times.clone())
                .column("coherence", "1", run.coherence.values.clone())
                .column("fit", "1", run.coherence.times.iter().map(|&t| fit.evaluate(t)).collect()),
        )?;
        chi.push(rates.chi_n);
        t2.push(fit.t2_star);
        t2_sigma.push(fit.t2_star_sigma);
        double.push(if fit.selected == ExponentialModel::Double { 1.0 } else { 0.0 });
        dominant.push(fit.dominant_time.unwrap_or(fit.t2_star));
        entries.push(json!({ "chi_n_hz": rates.chi_n, "g_coll_hz": rates.g_coll, "fit": fit, "steps": run.stats.accepted }));
    }
    out.table(
        "ramsey_summary.csv",
        &Table::new("ramsey coherence times")
            .column("chi_n", "Hz", chi)
            .column("t2_star", "s", t2.clone())
            .column("t2_star_sigma", "s", t2_sigma)
            .column("double_selected", "1", double)
            .column("dominant_time", "s", dominant),
    )?;
    Ok(Output {
        results: json!({ "points": entries }),
        warnings,
        rates: Some(derive_rates(&params[0])?),
        summary: vec![("t2_star".into(), "s".into(), t2[0])],
        fit_failed,
    })
}

fn run_s21_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    let p = cfg.physical_params()?;
    let f_c = cfg.f_c_hz.unwrap_or(0.0);
    let f_s = f_c - p.delta;
    let span = cfg.span_hz.unwrap_or(defaults::S21_SPAN_HZ);
    let n = cfg.n_points.unwrap_or(defaults::S21_POINTS);
    if n < 8 {
        return Err(Error::Config {
            key: "n_points".into(),
            reason: "s21 needs at least 8 frequencies".into(),
        });
    }
    // Centred on the dispersively shifted spin line.
    let centre = f_s - p.g_coll().powi(2) / p.delta;
    let freqs: Vec<f64> = (0..n).map(|k| centre - span / 2.0 + span * k as f64 / (n - 1) as f64).collect();
    let clean = s21_model(&freqs, &p, f_c, f_s);
    let data = match cfg.noise_snr_db {
        Some(snr) => add_transmission_noise(&clean, snr, cfg.seed()),
        None => clean,
    };
    let mut table = Table::new("cavity transmission")
        .column("f", "Hz", freqs.clone())
        .column("s21_re", "1", data.iter().map(|z| z.re).collect())
        .column("s21_im", "1", data.iter().map(|z| z.im).collect())
        .column("s21_power", "1", data.iter().map(|z| z.norm_sqr()).collect());
    let mut results = json!({ "f_c_hz": f_c, "f_s_hz": f_s, "mode": "model" });
    let mut summary = vec![];
    let mut warnings: Vec<String> = dispersive_warning(&p).into_iter().collect();
    let mut fit_failed = None;
    if cfg.s21_mode == Some(S21Mode::Fit) {
        let fixed = S21Fixed {
            kappa: p.kappa,
            delta: p.delta,
            f_c,
        };
        let guess = S21Guess {
            g_coll: cfg.guess_g_coll_hz.unwrap_or(p.g_coll()),
            gamma_inh: cfg.guess_gamma_inh_hz.unwrap_or(p.gamma_inh),
            amplitude: 2.0 * p.kappa_out / p.kappa,
            baseline: 0.0,
        };
        let fit = fit_s21(&freqs, &S21Data::Complex(data.clone()), &fixed, &guess)?;
        if !fit.fit.converged {
            fit_failed = Some("s21 fit did not converge".into());
        }
        warnings.extend(fit.fit.warnings.iter().cloned());
        let mut fp = p;
        fp.n0 = (fit.fit.params[0] / p.g).powi(2);
        fp.gamma_inh = fit.fit.params[1];
        let model: Vec<_> = s21_model(&freqs, &fp, f_c, f_s)
            .iter()
            .map(|z| z * (fit.fit.params[2] * p.kappa / (2.0 * p.kappa_out).max(f64::MIN_POSITIVE)) + fit.fit.params[3])
            .collect();
        table = table
            .column("fit_re", "1", model.iter().map(|z| z.re).collect())
            .column("fit_im", "1", model.iter().map(|z| z.im).collect());
        summary.push(("g_coll_fit".into(), "Hz".into(), fit.fit.params[0]));
        results = json!({ "f_c_hz": f_c, "f_s_hz": f_s, "mode": "fit", "fit": fit });
    }
    out.table("s21.csv", &table)?;
    Ok(Output {
        results,
        warnings,
        rates: Some(derive_rates(&p)?),
        summary,
        fit_failed,
    })
}

fn sweep_point(base: &RunConfig, over: SweepOver, value: f64) -> RunConfig {
    let mut c = base.clone();
    c.experiment = None;
    match over {
        SweepOver::Theta => c.theta = Some(value),
        SweepOver::TauS => c.tau_s = Some(vec![value]),
        SweepOver::N0 => {
            c.n0 = Some(value);
            c.g_coll_hz = None;
        }
        SweepOver::ChiNHz => c.chi_n_hz = Some(vec![value]),
    }
    c
}

fn run_sweep_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    let inner = cfg.sweep_experiment.expect("validated");
    let over = cfg.sweep_over.expect("validated");
    let values = cfg.values.clone().expect("validated");
    let unit = match over {
        SweepOver::Theta => "rad",
        SweepOver::TauS => "s",
        SweepOver::N0 => "1",
        SweepOver::ChiNHz => "Hz",
    };
    let mut columns: Vec<(String, String, Vec<f64>)> = Vec::new();
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    let mut fit_failed = None;
    for (k, &v) in values.iter().enumerate() {
        let point = sweep_point(cfg, over, v);
        point.validate()?;
        let mut sub = OutputDir::create(&out.root.join(format!("point_{k:03}")))?;
        let res = dispatch(inner, &point, &mut sub)?;
        out.written.extend(sub.written.iter().map(|f| format!("point_{k:03}/{f}")));
        if columns.is_empty() {
            columns = res.summary.iter().map(|(n, u, _)| (n.clone(), u.clone(), Vec::new())).collect();
        }
        for (col, (_, _, x)) in columns.iter_mut().zip(&res.summary) {
            col.2.push(*x);
        }
        warnings.extend(res.warnings.iter().map(|w| format!("point {k}: {w}")));
        if let Some(f) = res.fit_failed {
            fit_failed = Some(format!("point {k}: {f}"));
        }
        points.push(json!({ "value": v, "results": res.results }));
    }
    let mut table = Table::new(&format!("{} sweep", inner.name())).column(
        match over {
            SweepOver::Theta => "theta",
            SweepOver::TauS => "tau",
            SweepOver::N0 => "n0",
            SweepOver::ChiNHz => "chi_n",
        },
        unit,
        values,
    );
    for (name, unit, vals) in columns {
        table = table.column(&name, &unit, vals);
    }
    out.table("sweep_summary.csv", &table)?;
    Ok(Output {
        results: json!({ "experiment": inner.name(), "points": points }),
        warnings,
        rates: None,
        summary: Vec::new(),
        fit_failed,
    })
}

fn dispatch(kind: ExperimentKind, cfg: &RunConfig, out: &mut OutputDir) -> Result<Output> {
    match kind {
        ExperimentKind::Params => run_params(cfg),
        ExperimentKind::Superradiance => run_superradiance_cmd(cfg, out),
        ExperimentKind::Oat => run_oat_cmd(cfg, out),
        ExperimentKind::Ramsey => run_ramsey_cmd(cfg, out),
        ExperimentKind::S21 => run_s21_cmd(cfg, out),
        ExperimentKind::Sweep => run_sweep_cmd(cfg, out),
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub tol: Option<f64>,
}

/// Run one experiment and write its tables and `report.json` into `out_dir`.
///
/// The report is written on failure too; data tables depend only on the
/// config and seed.
pub fn run(kind: ExperimentKind, config: Result<RunConfig>, out_dir: &Path, overrides: &Overrides) -> RunOutcome {
    let clock = Instant::now();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let threads = overrides.threads.unwrap_or_else(rayon::current_num_threads);
    let mut config = config;
    if let Ok(cfg) = config.as_mut() {
        if let Some(s) = overrides.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = overrides.tol {
            cfg.rel_tol = Some(t);
        }
    }
    let config = config.and_then(|c| {
        c.validate()?;
        c.validate_for(kind)?;
        Ok(c)
    });
    let snapshot = config.as_ref().ok().and_then(|c| serde_json::to_value(c).ok()).unwrap_or(Value::Null);
    let seed = config.as_ref().map(|c| c.seed()).unwrap_or(defaults::SEED);

    let mut written = Vec::new();
    let result = OutputDir::create(out_dir).and_then(|mut dir| {
        let cfg = config?;
        if overrides.threads == Some(0) {
            return Err(Error::Config {
                key: "--threads".into(),
                reason: "must be >= 1".into(),
            });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        let res = pool.install(|| dispatch(kind, &cfg, &mut dir));
        written = dir.written;
        res
    });

    let (status, exit_code, error, output) = match result {
        Ok(o) => match &o.fit_failed {
            Some(reason) => {
                let e = Error::Fit {
                    model: kind.name().to_string(),
                    reason: reason.clone(),
                };
                (RunStatus::Failed, 4, Some(ErrorRecord::from(&e)), o)
            }
            None => (RunStatus::Ok, 0, None, o),
        },
        Err(e) => (RunStatus::Failed, e.exit_code(), Some(ErrorRecord::from(&e)), Output::default()),
    };
    let manifest = RunManifest {
        tool: "cavspin".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: kind.name().into(),
        status,
        started_unix_s: started,
        wall_clock_s: clock.elapsed().as_secs_f64(),
        threads,
        seed,
        config: snapshot,
        derived_rates: output.rates,
        warnings: output.warnings,
        tables: written,
        results: output.results,
        error,
    };
    let _ = std::fs::create_dir_all(out_dir);
    let mut exit_code = exit_code;
    if let Err(e) = manifest.write(&out_dir.join("report.json")) {
        eprintln!("cavspin: cannot write report: {e}");
        if exit_code == 0 {
            exit_code = e.exit_code();
        }
    }
    if let Some(err) = &manifest.error {
        eprintln!("{}", serde_json::to_string(err).unwrap_or_default());
    }
    RunOutcome { exit_code, manifest }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let kind = cli.command.kind();
    let config = match &cli.config {
        Some(path) => parse_config(path),
        None => Err(Error::Config {
            key: "--config".into(),
            reason: "a configuration file is required".into(),
        }),
    };
    let overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
        tol: cli.tol,
    };
    let out = cli.out.clone().unwrap_or_else(|| {
        let from_config = config.as_ref().ok().and_then(|c| c.output_dir.clone());
        PathBuf::from(from_config.unwrap_or_else(|| "out".to_string()))
    });
    run(kind, config, &out, &overrides).exit_code
}
