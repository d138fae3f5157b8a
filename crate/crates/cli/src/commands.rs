use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use scarlab::analysis::{fit_lifetime, shot_average, CutoffRule, LifetimeFit, ScanPoint, ScanResult};
use scarlab::dynamics::{
    evolve_observables, floquet_evolve, series_csv, FloquetSampling, FloquetSchedule, KrylovOptions, Observable, ObservableSpec,
    Propagator, QuantumState, RunStats, TimeSeries,
};
use scarlab::models::dipolar::{solve_zigzag_geometry, ZigzagGeometry};
use scarlab::models::disorder::DisorderModel;
use scarlab::spectral::{
    fractional_energy_width, full_diagonalize, histogram, lanczos_measure, level_spacing_stats, overlap_spectrum, SpectralDecomposition,
};
use scarlab::symmetry::ReducedBasis;
use scarlab::Error;

use crate::config::{EvolutionConfig, ExperimentConfig, Format, ModelConfig};
use crate::model::{self, Built};
use crate::output::{run_id, RunWriter, TIME};

pub enum CliError {
    Config(String),
    Infeasible(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Invalid(_) | Error::Mismatch(_) => CliError::Config(m),
            Error::Numerical(_) => CliError::Numerical(m),
            _ => CliError::Infeasible(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub struct Globals {
    pub outdir: Option<PathBuf>,
    pub workers: usize,
    pub seed: Option<u64>,
    pub dense_cap: usize,
}

impl Globals {
    fn outdir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.outdir.clone().unwrap_or_else(|| PathBuf::from(cfg.map_or("runs", |c| c.output.dir.as_str())))
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| CliError::Io(e.to_string()))
    }
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn resolved(cfg: &ExperimentConfig, g: &Globals) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let (Some(seed), Some(d)) = (g.seed, c.disorder.as_mut()) {
        d.seed = seed;
    }
    c
}

fn observables(cfg: &ExperimentConfig) -> Vec<ObservableSpec> {
    if cfg.observables.is_empty() {
        vec![ObservableSpec::Fidelity, ObservableSpec::GeneralizedImbalance]
    } else {
        cfg.observables.clone()
    }
}

fn resolve_observables(built: &Built, psi0: &[scarlab::C64], specs: &[ObservableSpec]) -> CliResult<Vec<(String, Observable)>> {
    let tower = if specs.contains(&ObservableSpec::ScarSubspaceWeight) { Some(built.tower()?) } else { None };
    specs
        .iter()
        .map(|s| Ok((s.name(), s.resolve(&built.basis, psi0, tower.as_ref())?)))
        .collect()
}

fn run_dynamics(built: &Built, ev: &EvolutionConfig, specs: &[ObservableSpec]) -> CliResult<(Vec<TimeSeries>, RunStats)> {
    let psi0 = QuantumState::from_word(&built.basis, &built.word)?;
    let obs = resolve_observables(built, &psi0.amps, specs)?;
    if let Some(f) = &ev.floquet {
        let n_rungs = scarlab::spectral::rung_sites(&built.basis)?.len();
        let mut schedule = FloquetSchedule::four_rung(f.period, n_rungs);
        if f.palindrome {
            schedule = schedule.palindrome(n_rungs);
        }
        schedule.pulse_duration = f.pulse_duration;
        let sampling = if f.samples_per_period <= 1 { FloquetSampling::Stroboscopic } else { FloquetSampling::PerPeriod(f.samples_per_period) };
        return Ok(floquet_evolve(&built.h, &built.basis, &schedule, &psi0.amps, f.n_periods, sampling, ev.method, &obs)?);
    }
    let t_max = ev.t_max.ok_or_else(|| CliError::Config("[evolution] needs `t_max` or a `floquet` table".into()))?;
    if !(ev.dt > 0.0 && t_max > 0.0) {
        return Err(CliError::Config("[evolution] needs positive `t_max` and `dt`".into()));
    }
    let n = (t_max / ev.dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * ev.dt).collect();
    let prop = Propagator::new(&built.h, ev.method, KrylovOptions::default())?;
    Ok(evolve_observables(&prop, &psi0.amps, &times, &obs)?)
}

fn series_columns(series: &[TimeSeries]) -> Vec<(String, String)> {
    let mut c = vec![(TIME.0.to_string(), TIME.1.to_string())];
    c.extend(series.iter().map(|s| (s.name.clone(), format!("expectation value of {}", s.name))));
    c
}

fn write_series(w: &mut RunWriter, cfg: &ExperimentConfig, name: &str, description: &str, series: &[TimeSeries]) -> CliResult<()> {
    let refs: Vec<&TimeSeries> = series.iter().collect();
    let cols = series_columns(series);
    let cols: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    w.csv(&format!("{name}.csv"), description, &cols, &series_csv(&refs))?;
    if cfg.output.formats.contains(&Format::Json) {
        w.json(&format!("{name}.json"), description, &json!(series))?;
    }
    Ok(())
}

fn config_value(cfg: &ExperimentConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn evolve(cfg: &ExperimentConfig, g: &Globals) -> CliResult<PathBuf> {
    let cfg = resolved(cfg, g);
    let ev = cfg.evolution.clone().ok_or_else(|| CliError::Config("`evolve` needs an [evolution] table".into()))?;
    let specs = observables(&cfg);
    let value = config_value(&cfg);
    let id = run_id("evolve", &value);
    let mut seeds = json!(null);

    let outcome: Vec<(Vec<TimeSeries>, RunStats)> = match &cfg.disorder {
        None => vec![run_dynamics(&model::build(&cfg.model, &cfg.initial_state, None)?, &ev, &specs)?],
        Some(d) => {
            let dm = DisorderModel { kind: d.model, seed: d.seed };
            dm.validate()?;
            seeds = json!({"base": d.seed, "shot_streams": (0..d.shots).collect::<Vec<_>>()});
            let pool = g.pool()?;
            pool.install(|| {
                (0..d.shots)
                    .into_par_iter()
                    .map(|shot| run_dynamics(&model::build(&cfg.model, &cfg.initial_state, Some((&dm, shot as u64)))?, &ev, &specs))
                    .collect::<CliResult<Vec<_>>>()
            })?
        }
    };

    let mut w = RunWriter::create(&g.outdir(Some(&cfg)), &id)?;
    let stats: Vec<&RunStats> = outcome.iter().map(|o| &o.1).collect();
    if cfg.disorder.is_none() {
        write_series(&mut w, &cfg, "observables", "observables along the trajectory", &outcome[0].0)?;
    } else {
        for (k, (s, _)) in outcome.iter().enumerate() {
            write_series(&mut w, &cfg, &format!("shot_{k:03}"), &format!("observables for disorder shot {k}"), s)?;
        }
        let mut mean = vec![];
        let mut spread = vec![];
        for j in 0..specs.len() {
            let shots: Vec<TimeSeries> = outcome.iter().map(|o| o.0[j].clone()).collect();
            let a = shot_average(&shots)?;
            mean.push(TimeSeries::new(&specs[j].name(), a.mean.times, a.mean.values));
            spread.push(TimeSeries::new(&specs[j].name(), a.spread.times, a.spread.values));
        }
        write_series(&mut w, &cfg, "observables", "shot-averaged observables", &mean)?;
        write_series(&mut w, &cfg, "observables_std", "sample standard deviation across shots", &spread)?;
    }
    w.json("run_stats.json", "propagation statistics per trajectory", &json!(stats))?;
    w.csv("config.toml", "resolved config; rerun with --config", &[], &cfg.to_toml())?;
    Ok(w.finish("evolve", &value, &seeds)?)
}

fn spectral_measure(built: &Built, steps: usize, cap: usize) -> CliResult<SpectralDecomposition> {
    let psi = QuantumState::from_word(&built.basis, &built.word)?;
    if built.basis.dim() <= scarlab::dynamics::evolve::EIGEN_MAX_DIM.min(cap) {
        let d = full_diagonalize(&built.h, true, cap)?;
        Ok(overlap_spectrum(&psi.amps, &d, scarlab::spectral::overlap::DEFAULT_WEIGHT_FLOOR, "dense")?)
    } else {
        Ok(lanczos_measure(&built.h, &psi.amps, steps, scarlab::spectral::overlap::DEFAULT_WEIGHT_FLOOR, "lanczos")?)
    }
}

fn sector_operator(cfg: &ExperimentConfig, built: &Built) -> CliResult<Option<(scarlab::SparseOperator, usize)>> {
    let ModelConfig::Ladder(m) = &cfg.model else { return Ok(None) };
    let Some(sector) = m.sector else { return Ok(None) };
    let p = model::ladder_params(m);
    let rb = ReducedBasis::new(&built.basis, sector, &p.symmetry_tags())?;
    let h = rb.project(&built.basis, &built.terms)?;
    Ok(Some((h, rb.dim())))
}

pub fn spectrum(cfg: &ExperimentConfig, g: &Globals) -> CliResult<PathBuf> {
    let cfg = resolved(cfg, g);
    let sc = cfg.spectrum.clone().ok_or_else(|| CliError::Config("`spectrum` needs a [spectrum] table".into()))?;
    let mut value = config_value(&cfg);
    value["dense_cap"] = json!(g.dense_cap);
    let id = run_id("spectrum", &value);
    let built = model::build(&cfg.model, &cfg.initial_state, None)?;

    let sector = sector_operator(&cfg, &built)?;
    let (h_levels, dim) = match &sector {
        Some((h, d)) => (h, *d),
        None => (&built.h, built.basis.dim()),
    };
    let eig = full_diagonalize(h_levels, false, g.dense_cap)?;
    let stats = level_spacing_stats(&eig.values, sc.window)?;

    let mut w = RunWriter::create(&g.outdir(Some(&cfg)), &id)?;
    let mut levels = String::from("index,energy\n");
    for (k, e) in eig.values.iter().enumerate() {
        levels.push_str(&format!("{k},{e:.16e}\n"));
    }
    w.csv("levels.csv", "eigenvalues of the (sector) Hamiltonian", &[("index", "level index"), ("energy", "eigenvalue")], &levels)?;
    let mut r = String::from("r\n");
    for x in &stats.r_values {
        r.push_str(&format!("{x:.16e}\n"));
    }
    w.csv("r_values.csv", "consecutive-gap ratios in the central window", &[("r", "min/max of consecutive spacings")], &r)?;
    let mut hist = String::from("center,density\n");
    for b in histogram(&stats.r_values, sc.bins, 0.0, 1.0) {
        hist.push_str(&format!("{:.16e},{:.16e}\n", b.center, b.density));
    }
    w.csv("r_histogram.csv", "normalized histogram of r", &[("center", "bin centre"), ("density", "probability density")], &hist)?;

    let mut summary = json!({
        "family": cfg.model.family(),
        "full_dimension": built.basis.dim(),
        "sector_dimension": dim,
        "level_stats": stats,
        "model": built.details,
    });
    if sc.overlap {
        let m = spectral_measure(&built, sc.lanczos_steps, g.dense_cap)?;
        w.csv("overlap.csv", "overlap of the initial state with eigenstates", &[("energy", "eigenvalue or quadrature node"), ("weight", "|<E|psi>|^2")], &m.to_csv())?;
        summary["overlap_source"] = json!(m.source);
        summary["overlap_dropped_mass"] = json!(m.dropped_mass);
        if let (Some(de), Some(anchor)) = (sc.delta_e.or(built.delta_e), built.anchor) {
            let f = fractional_energy_width(&m, de, anchor, sc.anchor)?;
            w.csv(
                "fractional.csv",
                "distance of each level to the nearest scar-comb point",
                &[("signed_distance", "E - nearest comb point"), ("fractional_energy", "absolute distance"), ("weight", "overlap weight")],
                &f.to_csv(),
            )?;
            summary["sigma"] = json!(f.sigma);
            summary["delta_e"] = json!(de);
            summary["anchor"] = json!(f.anchor);
            summary["anchor_mode"] = json!(f.anchor_mode);
        }
    }
    w.json("spectrum.json", "summary of the spectral run", &summary)?;
    w.csv("config.toml", "resolved config; rerun with --config", &[], &cfg.to_toml())?;
    Ok(w.finish("spectrum", &value, &json!(null))?)
}

struct PointOutcome {
    point: ScanPoint,
    fit: LifetimeFit,
    series: TimeSeries,
}

fn sweep_point(cfg: &ExperimentConfig, k: usize, value: f64, g: &Globals) -> CliResult<PointOutcome> {
    let sw = cfg.sweep.as_ref().expect("sweep table");
    let ev = cfg.evolution.as_ref().ok_or_else(|| CliError::Config("`sweep` needs an [evolution] table".into()))?;
    let pc = cfg.with_model_value(&sw.parameter, value).map_err(CliError::Config)?;
    let built = model::build(&pc.model, &pc.initial_state, None)?;
    let (series, _) = run_dynamics(&built, ev, std::slice::from_ref(&sw.observable))?;
    let series = series.into_iter().next().expect("one observable");
    let fit = fit_lifetime(&series, sw.cutoff.0).map_err(|e| CliError::from(e).with_context(&format!("point {k} ({} = {value})", sw.parameter)))?;
    let delta_v = built.delta_v;
    let sigma = if sw.sigma {
        let sm = match sw.sigma_l {
            Some(l) => model::build(&pc.model.with_l(l), &pc.initial_state, None)?,
            None => built,
        };
        let de = sw.delta_e.or(sm.delta_e).ok_or_else(|| CliError::Config("σ needs `delta_e` for this model".into()))?;
        let m = spectral_measure(&sm, sw.lanczos_steps, g.dense_cap)?;
        Some(fractional_energy_width(&m, de, sm.anchor.unwrap_or(0.0), sw.anchor)?.sigma)
    } else {
        None
    };
    Ok(PointOutcome {
        point: ScanPoint {
            parameter: sw.parameter.clone(),
            value,
            tau: fit.tau,
            tau_stderr: fit.std_errors[3],
            sigma,
            delta_v,
            seed: g.seed.unwrap_or(0),
            config_hash: run_id("point", &config_value(&pc)),
        },
        fit,
        series,
    })
}

impl CliError {
    fn with_context(self, ctx: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::Infeasible(m) => CliError::Infeasible(format!("{ctx}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{ctx}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{ctx}: {m}")),
        }
    }
}

pub fn sweep(cfg: &ExperimentConfig, g: &Globals) -> CliResult<PathBuf> {
    let cfg = resolved(cfg, g);
    let sw = cfg.sweep.clone().ok_or_else(|| CliError::Config("`sweep` needs a [sweep] table".into()))?;
    if cfg.disorder.is_some() {
        return Err(CliError::Config("`sweep` does not combine with [disorder]; run `evolve` per point".into()));
    }
    let mut value = config_value(&cfg);
    value["dense_cap"] = json!(g.dense_cap);
    value["seed"] = json!(g.seed.unwrap_or(0));
    let id = run_id("sweep", &value);
    let pool = g.pool()?;
    let outcomes = pool.install(|| {
        sw.values
            .par_iter()
            .enumerate()
            .map(|(k, &v)| sweep_point(&cfg, k, v, g))
            .collect::<CliResult<Vec<_>>>()
    })?;

    let mut w = RunWriter::create(&g.outdir(Some(&cfg)), &id)?;
    for (k, o) in outcomes.iter().enumerate() {
        let model_curve = TimeSeries::new("fit", o.series.times.clone(), o.series.times.iter().map(|&t| o.fit.model(t)).collect());
        let csv = series_csv(&[&o.series, &model_curve]);
        w.csv(
            &format!("series_{k:03}.csv"),
            &format!("{} = {} trajectory with its lifetime fit", sw.parameter, o.point.value),
            &[TIME, ("<observable>", "observable named in [sweep]"), ("fit", "fitted A cos(Ωt+φ) exp(-t/τ)")],
            &csv,
        )?;
    }
    let fits: Vec<&LifetimeFit> = outcomes.iter().map(|o| &o.fit).collect();
    let result = ScanResult::from_points(outcomes.iter().map(|o| o.point.clone()).collect());
    w.csv(
        "scan.csv",
        "one row per sweep point",
        &[
            ("parameter", "swept model field"),
            ("value", "field value"),
            ("tau", "fitted lifetime (inf when undamped)"),
            ("tau_stderr", "standard error of tau"),
            ("sigma", "fractional-energy width"),
            ("inv_sigma", "1/sigma"),
            ("delta_v", "perturbation strength"),
            ("seed", "base seed"),
            ("config_hash", "hash of the point's resolved config"),
        ],
        &result.to_csv(),
    )?;
    w.json("scan.json", "regressions over the sweep and per-point fits", &json!({"tau_sigma": result.tau_sigma, "exponent": result.exponent, "fits": fits}))?;
    w.csv("config.toml", "resolved config; rerun with --config", &[], &cfg.to_toml())?;
    Ok(w.finish("sweep", &value, &json!({"base": g.seed.unwrap_or(0)}))?)
}

/// "a:b:n" (n evenly spaced values) or "a,b,c".
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}` in `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| format!("bad count in `{s}`"))?;
            if n < 2 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("grid `{s}` is neither a:b:n nor a comma list")),
    }
}

pub fn geometry(ratios: &[f64], tilts: &[f64], ratio_tol: f64, n_sites: usize, g: &Globals) -> CliResult<PathBuf> {
    let value = json!({"ratios": ratios, "tilts_deg": tilts, "ratio_tol": ratio_tol, "n_sites": n_sites});
    let id = run_id("geometry", &value);
    let mut csv = String::from(
        "tilt_deg,target_ratio,alpha_deg,beta_deg,branch,achieved_ratio,j01,j02,j13,j03,j04,j05,j14,long_range_ratio,magic_residual,frustration_residual,at_fold,status\n",
    );
    let mut feasible = 0;
    for &tilt in tilts {
        for &ratio in ratios {
            match solve_zigzag_geometry(ratio, tilt.to_radians(), ratio_tol, n_sites) {
                Ok(sol) => {
                    feasible += 1;
                    let gm: &ZigzagGeometry = &sol.geometry;
                    let u = gm.unit_couplings();
                    csv.push_str(&format!(
                        "{tilt:.6},{ratio:.6},{:.10},{:.10},{},{:.10},{:.10},{:.10},{:.10},{:.3e},{:.10},{:.10},{:.10},{:.10},{:.3e},{:.3e},{},ok\n",
                        gm.alpha.to_degrees(),
                        gm.beta.to_degrees(),
                        gm.branch,
                        sol.achieved_ratio,
                        u.j01,
                        u.j02,
                        u.j13,
                        u.j03,
                        u.j04,
                        u.j05,
                        u.j14,
                        u.long_range_ratio(),
                        u.magic_residual(),
                        u.frustration_residual(),
                        sol.at_fold
                    ));
                }
                Err(e) => {
                    log::warn!("tilt {tilt}°, ratio {ratio}: {e}");
                    csv.push_str(&format!("{tilt:.6},{ratio:.6},,,,,,,,,,,,,,,,infeasible\n"));
                }
            }
        }
    }
    if feasible == 0 {
        return Err(CliError::Infeasible("no requested geometry is attainable".into()));
    }
    let mut w = RunWriter::create(&g.outdir(None), &id)?;
    w.csv(
        "geometry.csv",
        "zig-zag solutions: couplings in units of |J01|, angles in degrees",
        &[
            ("tilt_deg", "axis tilt out of the plane"),
            ("target_ratio", "requested |J02/J01|"),
            ("alpha_deg", "bond angle alpha"),
            ("beta_deg", "bond angle beta"),
            ("branch", "sign of the axis azimuth"),
            ("achieved_ratio", "attained |J02/J01|"),
            ("j01..j14", "couplings of the first two rungs"),
            ("long_range_ratio", "(|J05|+|J14|)/|J02|"),
            ("magic_residual", "|J03/J01|"),
            ("frustration_residual", "|(J02+J13)/J01|"),
            ("at_fold", "target beyond the attainable maximum; closest point returned"),
            ("status", "ok or infeasible"),
        ],
        &csv,
    )?;
    Ok(w.finish("geometry", &value, &json!(null))?)
}

pub fn fit(input: &Path, column: Option<&str>, cutoff: CutoffRule, g: &Globals) -> CliResult<(PathBuf, LifetimeFit)> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let series = TimeSeries::from_csv(&text, column)?;
    let f = fit_lifetime(&series, cutoff)?;
    let value = json!({"input_sha256": run_id("input", &json!(text)), "column": series.name, "cutoff": cutoff});
    let id = run_id("fit", &value);
    let mut w = RunWriter::create(&g.outdir(None), &id)?;
    let curve = TimeSeries::new("fit", series.times.clone(), series.times.iter().map(|&t| f.model(t)).collect());
    w.csv(
        "fit_curve.csv",
        "input series and fitted curve",
        &[TIME, ("<column>", "input values"), ("fit", "fitted A cos(Ωt+φ) exp(-t/τ)")],
        &series_csv(&[&series, &curve]),
    )?;
    w.json("fit.json", "lifetime fit", &json!(f))?;
    Ok((w.finish("fit", &value, &json!(null))?, f))
}
