//! Experiment orchestration behind the CLI subcommands. Each command writes
//! an [`OutputBundle`] into the configured output directory and returns it.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    coefficient_of_variation, early_slope, first_crossing, linearize_values, Scaling, SlopeWindow,
};
use crate::config::{LinearizeSource, RunConfig};
use crate::dynamics::{
    time_grid, AnalyticModel, CoherenceSeries, Model, NumericalModel, PhaseAssignment,
    ReducedDensity,
};
use crate::electrostatics::{flip_coefficients, FlipCoefficients};
use crate::error::{Error, Result};
use crate::geometry::{build_scene, scene_to_text, Scene, SceneConfig};
use crate::measures::{s_bm_generic, s_bprv_closed, s_chsh_fixed, Measure, MeasurementSettings};
use crate::output::{fmt_f64, OutputBundle, Table};
use crate::rng::derive_seed;
use crate::spectra::{
    default_bin_count, enumerate_flip_energies, gaussian_fit_amplitude, histogram, Moments,
};
use crate::timescales::{config_for_ratio, scatter_ensemble, timescales, TimescaleReport};

/// Largest allowed `|c_numerical − c_exact|`.
pub const CROSS_MODEL_TOLERANCE: f64 = 1e-9;

/// Everything computed for one scene.
#[derive(Debug, Clone)]
pub struct SceneRun {
    pub scene: Scene,
    pub coeffs: FlipCoefficients,
    pub report: TimescaleReport,
    /// fs
    pub times: Vec<f64>,
    pub exact: CoherenceSeries,
    pub gaussian: CoherenceSeries,
    pub numerical: Option<CoherenceSeries>,
    /// One column per (model, measure), in config order.
    pub correlations: Vec<(Model, Measure, Vec<f64>)>,
}

impl SceneRun {
    pub fn series(&self, model: Model) -> Option<&CoherenceSeries> {
        match model {
            Model::Exact => Some(&self.exact),
            Model::Gaussian => Some(&self.gaussian),
            Model::Numerical => self.numerical.as_ref(),
        }
    }

    pub fn correlation(&self, model: Model, measure: Measure) -> Option<&[f64]> {
        self.correlations
            .iter()
            .find(|(mo, me, _)| *mo == model && *me == measure)
            .map(|(_, _, v)| v.as_slice())
    }
}

fn measure_row(
    rho: &ReducedDensity,
    c: f64,
    measures: &[Measure],
    settings: &MeasurementSettings,
) -> Vec<f64> {
    measures
        .iter()
        .map(|m| match m {
            Measure::Bm => s_bm_generic(rho, settings).value,
            Measure::Chsh => s_chsh_fixed(rho, settings).value,
            Measure::Bprv => s_bprv_closed(c).value,
        })
        .collect()
}

fn transpose(rows: Vec<Vec<f64>>, width: usize) -> Vec<Vec<f64>> {
    (0..width)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// Build the scene and evaluate every requested model on the time grid.
pub fn run_scene(cfg: &RunConfig, scene_cfg: &SceneConfig, models: &[Model]) -> Result<SceneRun> {
    let constants = cfg.constants;
    let hbar = constants.hbar;
    let scene = build_scene(scene_cfg, constants)?;
    let coeffs = flip_coefficients(&scene)?;
    let report = timescales(&coeffs, hbar);
    let times = time_grid(cfg.time_grid.t_max_fs(report.tau_e)?, cfg.time_grid.n_steps);
    let exact = CoherenceSeries::analytic(&coeffs, &times, hbar, AnalyticModel::Exact);
    let gaussian = CoherenceSeries::analytic(&coeffs, &times, hbar, AnalyticModel::Gaussian);
    let settings = cfg.measurement_settings();
    let measures = &cfg.measures;

    let mut numerical = None;
    let mut correlations = Vec::new();
    for &model in models {
        let rows: Vec<Vec<f64>> = match model {
            Model::Numerical => {
                let phases = PhaseAssignment::draw(scene_cfg.seed, scene.n_env());
                let nm = NumericalModel::with_options(
                    &scene,
                    &phases,
                    cfg.limits.state_vector_cap,
                    cfg.limits.include_env_env,
                )?;
                let mut c = Vec::with_capacity(times.len());
                let mut rows = Vec::with_capacity(times.len());
                for (i, &t) in times.iter().enumerate() {
                    let rho = nm.rho_at(t)?;
                    rho.check()?;
                    let ci = 2.0 * rho.coherence().re;
                    let diff = (ci - exact.c[i]).abs();
                    if diff.is_nan() || diff > CROSS_MODEL_TOLERANCE {
                        return Err(Error::Invariant(format!(
                            "numerical and exact coherence differ by {diff:e} at t = {t} fs"
                        )));
                    }
                    rows.push(measure_row(&rho, ci, measures, &settings));
                    c.push(ci);
                }
                numerical = Some(CoherenceSeries::from_values(times.clone(), c));
                rows
            }
            Model::Exact | Model::Gaussian => {
                let s = if model == Model::Exact {
                    &exact
                } else {
                    &gaussian
                };
                s.c.par_iter()
                    .map(|&c| {
                        let rho = ReducedDensity::bell_family(Complex64::new(c, 0.0));
                        measure_row(&rho, c, measures, &settings)
                    })
                    .collect()
            }
        };
        for (measure, col) in measures.iter().zip(transpose(rows, measures.len())) {
            correlations.push((model, *measure, col));
        }
    }
    Ok(SceneRun {
        scene,
        coeffs,
        report,
        times,
        exact,
        gaussian,
        numerical,
        correlations,
    })
}

fn scaled(t: f64, tau: f64) -> f64 {
    if tau.is_finite() {
        t / tau
    } else {
        0.0
    }
}

/// coherence.csv, correlations.csv, timescales.toml and scene.txt under `prefix`.
pub fn write_scene_run(bundle: &mut OutputBundle, prefix: &str, run: &SceneRun) -> Result<()> {
    let tau = run.report.tau_e;
    let mut header = vec!["t_fs", "t_over_tauE", "c_exact", "c_gauss", "f"];
    if run.numerical.is_some() {
        header.push("c_numerical");
    }
    let mut coh = Table::new(header);
    for (i, &t) in run.times.iter().enumerate() {
        let mut row = vec![
            t,
            scaled(t, tau),
            run.exact.c[i],
            run.gaussian.c[i],
            run.exact.f[i],
        ];
        if let Some(n) = &run.numerical {
            row.push(n.c[i]);
        }
        coh.push_f64(&row);
    }
    bundle.write_table(&format!("{prefix}coherence.csv"), &coh)?;

    let mut header = vec!["t_fs".to_string(), "t_over_tauE".to_string()];
    header.extend(
        run.correlations
            .iter()
            .map(|(model, measure, _)| format!("{}_{}", measure.column(), model.name())),
    );
    let mut corr = Table::new(header);
    for (i, &t) in run.times.iter().enumerate() {
        let mut row = vec![t, scaled(t, tau)];
        row.extend(run.correlations.iter().map(|(_, _, v)| v[i]));
        corr.push_f64(&row);
    }
    bundle.write_table(&format!("{prefix}correlations.csv"), &corr)?;
    bundle.write_toml(&format!("{prefix}timescales.toml"), &run.report)?;
    bundle.write(
        &format!("{prefix}scene.txt"),
        scene_to_text(&run.scene).as_bytes(),
    )
}

fn finish(
    bundle: &mut OutputBundle,
    command: &str,
    seeds: &[u64],
    cfg: &RunConfig,
    start: Instant,
) -> Result<()> {
    bundle.finish(
        command,
        seeds,
        &cfg.echo(),
        start.elapsed(),
        rayon::current_num_threads(),
    )
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    cfg.validate()?;
    let run = run_scene(cfg, &cfg.scene, &cfg.models)?;
    let mut bundle = OutputBundle::create(&cfg.output_dir())?;
    write_scene_run(&mut bundle, "", &run)?;
    info!(
        "simulate: N = {}, tau_E = {} fs, tau_geo = {} fs",
        run.scene.n_env(),
        run.report.tau_e,
        run.report.tau_geo
    );
    finish(&mut bundle, "simulate", &[cfg.scene.seed], cfg, start)?;
    Ok(bundle)
}

#[derive(Debug, Clone, Serialize)]
struct CurveInfo {
    curve_id: usize,
    dir: String,
    ratio: f64,
    /// Decimal string; TOML integers stop at 2^63 − 1.
    seed: String,
    tau_e_fs: f64,
    tau_geo_fs: f64,
    crossing_fs: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Failure {
    curve_id: usize,
    ratio: f64,
    seed: String,
    error: String,
}

#[derive(Debug, Clone, Serialize)]
struct Dispersion {
    fs: f64,
    tau_e: f64,
    tau_geo: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CollapseSummary {
    model: Model,
    measure: Measure,
    threshold: f64,
    headline_scaling: Scaling,
    headline_dispersion: f64,
    n_curves: usize,
    n_crossing: usize,
    dispersion: Dispersion,
    curves: Vec<CurveInfo>,
    failures: Vec<Failure>,
}

/// Errors that abort the whole ensemble rather than a single member.
fn is_fatal(e: &Error) -> bool {
    matches!(
        e,
        Error::Invariant(_) | Error::CapExceeded { .. } | Error::Config { .. } | Error::Io { .. }
    )
}

/// `n_runs` scenes per radius ratio; member `j·n_runs + i` uses
/// `derive_seed(seed, j·n_runs + i)`. Each member's files go to
/// `runs/<curve_id>/`, followed by first-crossing tables in fs, `t/τ_E` and
/// `t/τ_geo`.
pub fn cmd_ensemble(cfg: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    cfg.validate()?;
    let ens = &cfg.ensemble;
    let base = cfg.scene;
    let ratios: Vec<Option<f64>> = if ens.radius_ratios.is_empty() {
        vec![None]
    } else {
        ens.radius_ratios.iter().map(|&r| Some(r)).collect()
    };
    let mut models = cfg.models.clone();
    if !models.contains(&ens.model) {
        models.push(ens.model);
    }
    let measure = ens.collapse_measure;
    let threshold = ens.collapse_threshold.unwrap_or(measure.threshold());
    let mut measure_cfg = cfg.clone();
    if !measure_cfg.measures.contains(&measure) {
        measure_cfg.measures.push(measure);
    }

    let jobs: Vec<(usize, Option<f64>, SceneConfig)> = ratios
        .iter()
        .enumerate()
        .flat_map(|(j, &ratio)| {
            (0..ens.n_runs).map(move |i| {
                let id = j * ens.n_runs + i;
                let seed = derive_seed(base.seed, id as u64);
                let sc = match ratio {
                    Some(r) => config_for_ratio(&base, r, seed),
                    None => SceneConfig { seed, ..base },
                };
                (id, ratio, sc)
            })
        })
        .collect();
    let results: Vec<Result<SceneRun>> = jobs
        .par_iter()
        .map(|(_, _, sc)| run_scene(&measure_cfg, sc, &models))
        .collect();

    let mut bundle = OutputBundle::create(&cfg.output_dir())?;
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    let mut crossings: Vec<(usize, f64, f64, f64)> = Vec::new();
    for ((id, ratio, sc), res) in jobs.iter().zip(results) {
        let ratio = ratio.unwrap_or(sc.r_a / sc.r_b);
        let run = match res {
            Ok(run) => run,
            Err(e) if is_fatal(&e) => return Err(e),
            Err(e) => {
                warn!("ensemble member {id} failed: {e}");
                failures.push(Failure {
                    curve_id: *id,
                    ratio,
                    seed: sc.seed.to_string(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        let dir = format!("runs/{id:04}");
        // Only the configured measures go to disk; the collapse measure may be extra.
        let mut on_disk = run.clone();
        on_disk
            .correlations
            .retain(|(mo, me, _)| cfg.models.contains(mo) && cfg.measures.contains(me));
        write_scene_run(&mut bundle, &format!("{dir}/"), &on_disk)?;
        let values = run
            .correlation(ens.model, measure)
            .expect("collapse measure evaluated");
        let crossing = first_crossing(&run.times, values, threshold);
        let (tau_e, tau_geo) = (run.report.tau_e, run.report.tau_geo);
        match crossing {
            Some(t) if tau_e.is_finite() && tau_geo.is_finite() => {
                crossings.push((*id, t, t / tau_e, t / tau_geo))
            }
            _ => failures.push(Failure {
                curve_id: *id,
                ratio,
                seed: sc.seed.to_string(),
                error: Error::NonCrossing {
                    index: *id,
                    threshold,
                }
                .to_string(),
            }),
        }
        curves.push(CurveInfo {
            curve_id: *id,
            dir,
            ratio,
            seed: sc.seed.to_string(),
            tau_e_fs: tau_e,
            tau_geo_fs: tau_geo,
            crossing_fs: crossing,
        });
    }
    if curves.is_empty() {
        return Err(Error::Other(format!(
            "every ensemble member failed; first error: {}",
            failures.first().map(|f| f.error.as_str()).unwrap_or("none")
        )));
    }

    let mut dispersion = Dispersion {
        fs: f64::NAN,
        tau_e: f64::NAN,
        tau_geo: f64::NAN,
    };
    for (name, col) in [("fs", 1usize), ("tau_e", 2), ("tau_geo", 3)] {
        let mut table = Table::new(["curve_id", "crossing_scaled_time"]);
        let mut vals = Vec::with_capacity(crossings.len());
        for c in &crossings {
            let v = [c.1, c.2, c.3][col - 1];
            vals.push(v);
            table.push(vec![c.0.to_string(), fmt_f64(v)]);
        }
        bundle.write_table(&format!("collapse_{name}.csv"), &table)?;
        let cv = if vals.is_empty() {
            f64::NAN
        } else {
            coefficient_of_variation(&vals)
        };
        match name {
            "fs" => dispersion.fs = cv,
            "tau_e" => dispersion.tau_e = cv,
            _ => dispersion.tau_geo = cv,
        }
    }
    let headline_dispersion = match cfg.collapse_scaling {
        Scaling::TauE => dispersion.tau_e,
        Scaling::TauGeo => dispersion.tau_geo,
    };
    info!(
        "ensemble: {} curves, {} crossing; CV(t/tau_E) = {}, CV(t/tau_geo) = {}",
        curves.len(),
        crossings.len(),
        dispersion.tau_e,
        dispersion.tau_geo
    );
    let summary = CollapseSummary {
        model: ens.model,
        measure,
        threshold,
        headline_scaling: cfg.collapse_scaling,
        headline_dispersion,
        n_curves: curves.len(),
        n_crossing: crossings.len(),
        dispersion,
        curves,
        failures,
    };
    bundle.write_toml("collapse_summary.toml", &summary)?;
    let seeds: Vec<u64> = jobs.iter().map(|(_, _, sc)| sc.seed).collect();
    finish(&mut bundle, "ensemble", &seeds, cfg, start)?;
    Ok(bundle)
}

#[derive(Debug, Clone, Serialize)]
struct RatioSummary {
    ratio: f64,
    n: usize,
    mean_tau_e_over_tau_geo: f64,
    max_tau_e_over_tau_geo: f64,
    /// Fraction of rows with `τ_E` within ±15% of `τ_geo/√2`.
    within_15pct: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ScatterSummary {
    ratios: Vec<RatioSummary>,
}

pub fn cmd_scatter(cfg: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    cfg.validate()?;
    let sc = &cfg.scatter;
    let rows = scatter_ensemble(&cfg.scene, &sc.ratios, sc.n_per_ratio, cfg.constants)?;
    let mut table = Table::new(["ratio", "seed", "tau_geo_fs", "tau_e_fs"]);
    for r in &rows {
        if r.tau_geo.is_finite() && r.tau_e / r.tau_geo > FRAC_1_SQRT_2 + 1e-12 {
            return Err(Error::Invariant(format!(
                "tau_E/tau_geo = {} exceeds 1/sqrt(2) for seed {}",
                r.tau_e / r.tau_geo,
                r.seed
            )));
        }
        table.push(vec![
            fmt_f64(r.ratio),
            r.seed.to_string(),
            fmt_f64(r.tau_geo),
            fmt_f64(r.tau_e),
        ]);
    }
    let mut bundle = OutputBundle::create(&cfg.output_dir())?;
    bundle.write_table("scatter.csv", &table)?;

    let t_hi = rows
        .iter()
        .map(|r| r.tau_geo)
        .filter(|t| t.is_finite())
        .fold(0.0, f64::max);
    let mut line = Table::new(["tau_geo_fs", "tau_e_fs"]);
    for t in time_grid(1.05 * t_hi, sc.reference_points.max(2)) {
        line.push_f64(&[t, t * FRAC_1_SQRT_2]);
    }
    bundle.write_table("reference_line.csv", &line)?;

    let summary = ScatterSummary {
        ratios: sc
            .ratios
            .iter()
            .map(|&ratio| {
                let q: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.ratio == ratio && r.tau_geo.is_finite())
                    .map(|r| r.tau_e / r.tau_geo)
                    .collect();
                let n = q.len();
                let within = q
                    .iter()
                    .filter(|&&x| (x / FRAC_1_SQRT_2 - 1.0).abs() <= 0.15)
                    .count();
                RatioSummary {
                    ratio,
                    n,
                    mean_tau_e_over_tau_geo: q.iter().sum::<f64>() / n as f64,
                    max_tau_e_over_tau_geo: q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    within_15pct: within as f64 / n as f64,
                }
            })
            .collect(),
    };
    bundle.write_toml("scatter_summary.toml", &summary)?;
    finish(&mut bundle, "scatter", &[cfg.scene.seed], cfg, start)?;
    Ok(bundle)
}

#[derive(Debug, Clone, Serialize)]
struct HistogramRecord {
    source: crate::spectra::FlipSource,
    moments: Moments,
    fit: crate::spectra::GaussianFit,
    n_bins: usize,
    bin_width_ev: f64,
    total_count: u64,
    /// Sum of the fitted curve over bin centers.
    fit_integral: f64,
}

pub fn cmd_histogram(cfg: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    cfg.validate()?;
    let scene = build_scene(&cfg.scene, cfg.constants)?;
    let coeffs = flip_coefficients(&scene)?;
    let source = cfg.histogram.source;
    let ms = enumerate_flip_energies(&coeffs, source, cfg.limits.enumeration_cap)?;
    let moments = Moments::of(&ms);
    if moments.mean.abs() > 1e-12 * moments.rms {
        return Err(Error::Invariant(format!(
            "flip-energy mean {} is not zero relative to rms {}",
            moments.mean, moments.rms
        )));
    }
    let n_bins = cfg
        .histogram
        .n_bins
        .unwrap_or_else(|| default_bin_count(ms.values.len()));
    let h = histogram(&ms.values, n_bins)?;
    let fit = gaussian_fit_amplitude(&h, moments.mean, moments.rms)?;
    let centers = h.centers();
    let mut table = Table::new(["bin_center_eV", "count", "fit_value"]);
    let mut fit_integral = 0.0;
    for (c, &n) in centers.iter().zip(&h.counts) {
        let v = fit.eval(*c);
        fit_integral += v;
        table.push(vec![fmt_f64(*c), n.to_string(), fmt_f64(v)]);
    }
    let mut bundle = OutputBundle::create(&cfg.output_dir())?;
    bundle.write_table("histogram.csv", &table)?;
    bundle.write_toml(
        "moments.toml",
        &HistogramRecord {
            source,
            moments,
            fit,
            n_bins: h.counts.len(),
            bin_width_ev: h.bin_edges[1] - h.bin_edges[0],
            total_count: h.total(),
            fit_integral,
        },
    )?;
    finish(&mut bundle, "histogram", &[cfg.scene.seed], cfg, start)?;
    Ok(bundle)
}

#[derive(Debug, Clone, Serialize)]
struct SlopeRecord {
    source: LinearizeSource,
    slope: f64,
    intercept: f64,
    window_first: usize,
    window_last: usize,
    n_points: usize,
    tau_e_fs: f64,
    reference_slope: f64,
    reference_x0: f64,
    reference_y0: f64,
}

/// `f(t)` from the configured source on the run's time grid.
pub fn linearize_input(
    cfg: &RunConfig,
    source: LinearizeSource,
) -> Result<(TimescaleReport, CoherenceSeries)> {
    match source {
        LinearizeSource::Exponential => {
            let scene = build_scene(&cfg.scene, cfg.constants)?;
            let report = timescales(&flip_coefficients(&scene)?, cfg.constants.hbar);
            let times = time_grid(cfg.time_grid.t_max_fs(report.tau_e)?, cfg.time_grid.n_steps);
            let c = times.iter().map(|t| (-t / report.tau_e).exp()).collect();
            Ok((report, CoherenceSeries::from_values(times, c)))
        }
        other => {
            let model = match other {
                LinearizeSource::Numerical => Model::Numerical,
                LinearizeSource::Gaussian => Model::Gaussian,
                _ => Model::Exact,
            };
            let run = run_scene(cfg, &cfg.scene, &[model])?;
            let series = run.series(model).expect("model evaluated").clone();
            Ok((run.report, series))
        }
    }
}

pub fn cmd_linearize(cfg: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    cfg.validate()?;
    let lin = &cfg.linearize;
    let (report, series) = linearize_input(cfg, lin.source)?;
    let ls = linearize_values(&series.times, &series.f)?;
    let window = match lin.window_fraction {
        Some(f) => SlopeWindow::Fraction(f),
        None => SlopeWindow::MaxTime(lin.window_tau_e * report.tau_e),
    };
    let fit = early_slope(&ls, window)?;
    let i0 = ls.first_valid().expect("nonempty valid set");
    let (x0, y0) = (ls.x[i0], ls.y[i0]);

    let mut table = Table::new(["ln_t", "ln_neg_ln_f", "valid", "t_fs", "f", "reference_y"]);
    for i in 0..ls.x.len() {
        let reference = if ls.times[i] > 0.0 {
            y0 + 2.0 * (ls.times[i].ln() - x0)
        } else {
            f64::NAN
        };
        table.push(vec![
            fmt_f64(ls.x[i]),
            fmt_f64(ls.y[i]),
            u8::from(ls.valid[i]).to_string(),
            fmt_f64(ls.times[i]),
            fmt_f64(series.f[i]),
            fmt_f64(reference),
        ]);
    }
    let mut bundle = OutputBundle::create(&cfg.output_dir())?;
    bundle.write_table("linearization.csv", &table)?;
    bundle.write_toml(
        "slope_fit.toml",
        &SlopeRecord {
            source: lin.source,
            slope: fit.slope,
            intercept: fit.intercept,
            window_first: fit.window[0],
            window_last: *fit.window.last().expect("window has >= 2 points"),
            n_points: fit.window.len(),
            tau_e_fs: report.tau_e,
            reference_slope: 2.0,
            reference_x0: x0,
            reference_y0: y0,
        },
    )?;
    info!(
        "linearize: slope {} over {} points",
        fit.slope,
        fit.window.len()
    );
    finish(&mut bundle, "linearize", &[cfg.scene.seed], cfg, start)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TimeUnit;
    use crate::output::{read_table, MANIFEST_FILE};

    fn small(dir: &std::path::Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.scene.m = 3;
        cfg.time_grid.n_steps = 21;
        cfg.output = Some(dir.to_path_buf());
        cfg
    }

    #[test]
    fn simulate_writes_expected_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.models = vec![Model::Numerical, Model::Exact];
        let b = cmd_simulate(&cfg).unwrap();
        let coh = read_table(&b.path("coherence.csv")).unwrap();
        assert_eq!(
            coh.header,
            [
                "t_fs",
                "t_over_tauE",
                "c_exact",
                "c_gauss",
                "f",
                "c_numerical"
            ]
        );
        assert_eq!(coh.rows.len(), 21);
        let corr = read_table(&b.path("correlations.csv")).unwrap();
        assert_eq!(corr.header[2], "S_BM_numerical");
        assert_eq!(corr.header.len(), 2 + 6);
        assert!(b.path(MANIFEST_FILE).exists());
        assert!(b.path("scene.txt").exists());
    }

    #[test]
    fn empty_environment_is_constant() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.scene.m = 0;
        assert!(matches!(cmd_simulate(&cfg), Err(Error::Config { .. })));
        cfg.time_grid.unit = TimeUnit::Fs;
        cfg.time_grid.t_max = 50.0;
        let run = run_scene(&cfg, &cfg.scene, &[Model::Exact]).unwrap();
        for m in Measure::ALL {
            let expect = m.closed(1.0).value;
            assert!(run
                .correlation(Model::Exact, m)
                .unwrap()
                .iter()
                .all(|&v| v == expect));
        }
    }

    #[test]
    fn histogram_record() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let b = cmd_histogram(&cfg).unwrap();
        let h = read_table(&b.path("histogram.csv")).unwrap();
        let total: u64 = h.rows.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
        assert_eq!(total, 64);
    }

    #[test]
    fn exponential_linearizes_to_one() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.linearize.source = LinearizeSource::Exponential;
        let (_, s) = linearize_input(&cfg, cfg.linearize.source).unwrap();
        let ls = linearize_values(&s.times, &s.f).unwrap();
        let fit = early_slope(&ls, SlopeWindow::Fraction(0.5)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9);
    }
}
