//! Command dispatch and artifact writing.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use whitham_core::analysis::{
    compare_linear_groups, compare_whitham_kdv, detect_breakdown, fit_spectrum, stability_map, BreakdownReport,
    SingularityFit,
};
use whitham_core::evolve::{evolve, Trajectory};
use whitham_core::io::{self, Manifest};
use whitham_core::models::{Family, ModelSpec, State, TimeScale};
use whitham_core::spectral::{Grid, SpectralField};
use whitham_core::travel::{kdv_soliton, solve_traveling_wave, NewtonOpts, NonConvergence, TravelingWave};
use whitham_core::Error;

use crate::config::{Command, DeltaTol, RunConfig};
use crate::initial::Expr;
use crate::plot::{line_plot, Series};
use crate::CliError;

pub const MANIFEST: &str = "manifest.txt";

/// Output directory plus the manifest that references every file in it.
struct Out {
    dir: PathBuf,
    manifest: Manifest,
    plots: bool,
    count: usize,
}

impl Out {
    fn new(dir: &Path, plots: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), manifest: Manifest::new(), plots, count: 0 })
    }

    fn write(&mut self, role: &str, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.set(&format!("artifact.{role}"), name);
        self.count += 1;
        Ok(())
    }

    fn plot(&mut self, role: &str, name: &str, svg: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.plots {
            self.write(&format!("plot.{role}"), name, &svg())?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: impl ToString) {
        self.manifest.set(key, value);
    }

    fn num(&mut self, key: &str, value: f64) {
        self.manifest.set_num(key, value);
    }

    fn finish(mut self, status: &str) -> Result<PathBuf, CliError> {
        self.manifest.set("status", status);
        let path = self.dir.join(MANIFEST);
        fs::write(&path, self.manifest.to_string())
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Run `cfg`, writing every artifact and the manifest to its output
/// directory. The manifest is written even when the command fails.
pub fn run(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let mut out = Out::new(&cfg.out_dir, cfg.plots)?;
    out.set("command", cfg.command);
    out.set("version", env!("CARGO_PKG_VERSION"));
    for (k, v) in &cfg.resolved {
        out.set(&format!("config.{k}"), v);
    }
    describe_model(&mut out, &cfg.model);
    let result = match cfg.command {
        Command::SolveTw => solve_tw(cfg, &mut out),
        Command::SweepBranch => sweep_branch(cfg, &mut out),
        Command::Evolve => evolve_cmd(cfg, &mut out),
        Command::SweepCriticalTimes => sweep_critical_times(cfg, &mut out),
        Command::CompareKdv => compare_kdv(cfg, &mut out),
        Command::FitSpectrum => fit_cmd(cfg, &mut out),
        Command::StabilityMap => stability_cmd(cfg, &mut out),
    };
    match result {
        Ok(()) => out.finish("ok"),
        Err(e) => {
            out.set("error", &e);
            out.finish(e.status())?;
            Err(e)
        }
    }
}

fn describe_model(out: &mut Out, m: &ModelSpec) {
    let family = match m.family {
        Family::Whitham => "whitham",
        Family::Kdv => "kdv",
        Family::Boussinesq => "boussinesq",
    };
    out.set("model.family", family);
    out.num("model.eps", m.eps);
    out.num("model.beta", m.beta);
    out.num("model.c", m.c);
    out.set("model.time_scale", if m.time_scale == TimeScale::Tau { "tau" } else { "t" });
}

fn describe_grid(out: &mut Out, grid: &Grid) {
    out.set("grid.n", grid.n());
    out.num("grid.l", grid.l());
    out.num("grid.dx", grid.dx());
    out.num("grid.kmax", grid.kmax());
}

fn grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Ok(Grid::new(cfg.n, cfg.l)?)
}

/// Traveling-wave model for `cfg.model`: same family, eps and beta, lab frame.
fn wave_model(m: &ModelSpec) -> ModelSpec {
    ModelSpec::new(m.family, m.eps).with_beta(m.beta)
}

fn write_failure(out: &mut Out, fail: &NonConvergence, prefix: &str) -> Result<(), CliError> {
    out.write(
        &format!("{prefix}residual_history"),
        &format!("{prefix}residual_history.csv"),
        &io::residual_history_csv(&fail.residual_history),
    )?;
    out.write(
        &format!("{prefix}last_iterate"),
        &format!("{prefix}last_iterate.csv"),
        &io::snapshot_csv(&State::scalar(fail.last_iterate.clone())),
    )?;
    out.num(&format!("{prefix}failed_c"), fail.c);
    out.set(&format!("{prefix}failure"), &fail.reason);
    Ok(())
}

/// Solve for speed `c`. Without `start`, a direct solve from the KdV profile
/// is tried first and continuation from near `c = 1` is the fallback.
fn solve_wave(
    model: &ModelSpec,
    c: f64,
    grid: &Grid,
    opts: &NewtonOpts,
    start: Option<f64>,
    step: f64,
) -> Result<TravelingWave, Error> {
    let seed_at = |s: f64| kdv_soliton(model.family, model.eps, model.beta, (s - 1.0) / model.eps, grid);
    if start.is_none() {
        let direct = solve_traveling_wave(model, c, &seed_at(c)?.u, opts);
        if !matches!(direct, Err(Error::NonConvergence(_))) {
            return direct;
        }
    }
    let sign = if c >= 1.0 { 1.0 } else { -1.0 };
    let c0 = start.unwrap_or(1.0 + sign * step);
    let steps = ((c - c0).abs() / step - 1e-9).ceil().max(0.0) as usize;
    let mut wave = solve_traveling_wave(model, c0, &seed_at(c0)?.u, opts)?;
    for i in 1..=steps {
        let ci = if i == steps { c } else { c0 + (c - c0).signum() * step * i as f64 };
        wave = solve_traveling_wave(model, ci, &wave.u, opts)?;
    }
    Ok(wave)
}

fn initial_state(cfg: &RunConfig, model: &ModelSpec, grid: Option<&Grid>) -> Result<State, CliError> {
    if let Some(path) = &cfg.input {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let state = io::read_snapshot(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if state.eta.is_some() != (model.family == Family::Boussinesq) {
            return Err(CliError::Config(format!(
                "{}: snapshot components do not match the {:?} model",
                path.display(),
                model.family
            )));
        }
        return Ok(state);
    }
    let grid = grid.expect("grid is required without a snapshot input");
    let tw_model = wave_model(model);
    let mut cache: HashMap<u64, TravelingWave> = HashMap::new();
    let mut field = |expr: &Option<Expr>, eta: bool| -> Result<SpectralField, CliError> {
        let Some(expr) = expr else { return Ok(SpectralField::zeros(grid)) };
        let mut resolve = |c: f64| -> Result<SpectralField, CliError> {
            if !cache.contains_key(&c.to_bits()) {
                let w = solve_wave(&tw_model, c, grid, &cfg.newton, None, cfg.travel.continuation_step)?;
                cache.insert(c.to_bits(), w);
            }
            let w = &cache[&c.to_bits()];
            Ok(if eta { w.n.clone().expect("system wave has N") } else { w.u.clone() })
        };
        expr.eval(grid, &mut resolve)
    };
    Ok(match model.family {
        Family::Boussinesq => {
            let eta = field(&cfg.initial_eta, true)?;
            State::system(eta, field(&cfg.initial_u, false)?)
        }
        _ => State::scalar(field(&cfg.initial_u, false)?),
    })
}

fn delta_tol(cfg: &RunConfig) -> Option<f64> {
    match cfg.analysis.delta_tol {
        DeltaTol::GridSpacing => None,
        DeltaTol::Value(v) => Some(v),
    }
}

fn solve_tw(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let grid = grid(cfg)?;
    describe_grid(out, &grid);
    let model = wave_model(&cfg.model);
    let c = cfg.travel.c.expect("checked");
    let wave = match solve_wave(&model, c, &grid, &cfg.newton, cfg.travel.continuation_start, cfg.travel.continuation_step) {
        Ok(w) => w,
        Err(Error::NonConvergence(fail)) => {
            write_failure(out, &fail, "")?;
            return Err(CliError::NonConvergence(fail.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    out.num("wave.c", wave.c);
    out.num("wave.offset", (wave.c - 1.0) / model.eps);
    out.num("wave.residual", wave.residual);
    out.num("wave.mass", wave.mass);
    out.num("wave.energy", wave.energy);
    out.num("wave.max_u", wave.max_u());
    out.num("wave.peak", wave.peak());
    out.write("profile", "profile.csv", &io::snapshot_csv(&wave.state()))?;
    out.write("spectrum", "spectrum.csv", &io::spectrum_csv(&wave.u))?;
    let x = grid.x().to_vec();
    out.plot("profile", "profile.svg", || {
        let mut series = vec![Series::new("U", x.iter().copied().zip(wave.u.to_values()).collect())];
        if let Some(n) = &wave.n {
            series.push(Series::new("N", x.iter().copied().zip(n.to_values()).collect()));
        }
        line_plot(&format!("solitary wave c = {c}"), "x", "U", &series, false)
    })
}

fn sweep_branch(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let grid = grid(cfg)?;
    describe_grid(out, &grid);
    let model = wave_model(&cfg.model);
    let branch = match whitham_core::travel::continuation_sweep(&model, &cfg.branch_c, &grid, &cfg.newton) {
        Ok(b) => b,
        Err(Error::NonConvergence(fail)) => {
            write_failure(out, &fail, "")?;
            return Err(CliError::NonConvergence(fail.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let table = branch.table();
    out.write("branch", "branch.csv", &io::branch_csv(&table))?;
    for (i, w) in branch.waves.iter().enumerate() {
        out.write(&format!("profile.{i}"), &format!("profile_{i:03}.csv"), &io::snapshot_csv(&w.state()))?;
    }
    out.set("branch.converged", branch.waves.len());
    out.num("branch.last_converged", branch.waves.last().map(|w| w.c).unwrap_or(f64::NAN));
    match &branch.edge {
        Some(edge) => {
            out.num("branch.edge_failed_at", edge.failed_at);
            write_failure(out, &edge.failure, "edge_")?;
        }
        None => out.set("branch.edge_failed_at", "none"),
    }
    out.plot("mass", "mass.svg", || {
        let p = table.iter().map(|r| (r.c, r.mass)).collect();
        line_plot("solitary-wave mass", "c", "mass", &[Series::new("mass", p)], false)
    })?;
    out.plot("max_u", "max_u.svg", || {
        let p = table.iter().map(|r| (r.c, r.max_u)).collect();
        line_plot("solitary-wave height", "c", "max U", &[Series::new("max U", p)], false)
    })
}

fn record_trajectory(out: &mut Out, traj: &Trajectory, tag: &str) -> Result<(), CliError> {
    out.write(&format!("{tag}diagnostics"), &format!("{tag}diagnostics.csv"), &io::diagnostics_csv(&traj.diagnostics))?;
    out.set(&format!("{tag}stop"), traj.stop.as_str());
    out.num(&format!("{tag}stop_time"), traj.stop_time);
    if let Some(msg) = &traj.stop_message {
        out.set(&format!("{tag}stop_message"), msg);
    }
    out.set(&format!("{tag}stage_iterations"), traj.stage_iterations);
    Ok(())
}

fn record_breakdown(out: &mut Out, rep: &BreakdownReport, tag: &str) -> Result<(), CliError> {
    out.write(&format!("{tag}fits"), &format!("{tag}fits.csv"), &io::fit_series_csv(&rep.series))?;
    for (k, v) in io::breakdown_manifest(rep).entries() {
        out.set(&format!("{tag}breakdown.{k}"), v);
    }
    Ok(())
}

fn evolve_cmd(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let g = if cfg.input.is_none() { Some(grid(cfg)?) } else { None };
    let state = initial_state(cfg, &cfg.model, g.as_ref())?;
    let grid = state.grid().clone();
    describe_grid(out, &grid);
    out.num("evolve.dt", cfg.evolve.dt());
    let traj = evolve(&cfg.model, &state, &cfg.evolve)?;
    record_trajectory(out, &traj, "")?;
    out.write("initial", "initial.csv", &io::snapshot_csv(&state))?;
    for (i, s) in traj.snapshots.iter().enumerate() {
        out.write(&format!("snapshot.{i}"), &format!("snapshot_{i:04}.csv"), &io::snapshot_csv(s))?;
        out.num(&format!("snapshot.{i}.t"), s.time);
    }
    out.write("final", "final.csv", &io::snapshot_csv(&traj.final_state))?;
    out.write("final_spectrum", "final_spectrum.csv", &io::spectrum_csv(&traj.final_state.u))?;
    if let Some(eta) = &traj.final_state.eta {
        out.write("final_spectrum_eta", "final_spectrum_eta.csv", &io::spectrum_csv(eta))?;
    }
    let report = if traj.spectra.len() >= 3 {
        let rep = detect_breakdown(&traj, delta_tol(cfg))?;
        record_breakdown(out, &rep, "")?;
        Some(rep)
    } else {
        out.set("breakdown.classification", "not-analysed");
        None
    };

    let d = &traj.diagnostics;
    let series = |f: fn(&whitham_core::evolve::Diagnostics) -> f64| d.iter().map(|p| (p.t, f(p))).collect::<Vec<_>>();
    out.plot("linf", "linf.svg", || line_plot("sup norm", "t", "Linf", &[Series::new("Linf", series(|p| p.linf))], false))?;
    out.plot("energy_drift", "energy_drift.svg", || {
        line_plot("relative energy drift", "t", "|drift|", &[Series::new("energy", series(|p| p.energy_drift))], true)
    })?;
    out.plot("floor", "floor.svg", || {
        line_plot("spectral floor", "t", "floor", &[Series::new("floor", series(|p| p.floor))], true)
    })?;
    if let Some(rep) = report {
        let fits: Vec<_> = rep.series.iter().filter(|p| p.residual <= whitham_core::analysis::FIT_REPORT_THRESHOLD).collect();
        out.plot("delta", "delta.svg", || {
            let p = fits.iter().map(|p| (p.t, p.delta)).collect();
            line_plot("singularity distance (reliable fits)", "t", "delta", &[Series::new("delta", p)], false)
        })?;
        out.plot("mu", "mu.svg", || {
            let p = fits.iter().map(|p| (p.t, p.mu)).collect();
            line_plot("singularity exponent (reliable fits)", "t", "mu", &[Series::new("mu", p)], false)
        })?;
    }
    Ok(())
}

fn sweep_critical_times(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let grid = grid(cfg)?;
    describe_grid(out, &grid);
    let eps_values = &cfg.analysis.eps_values;
    let model_for = |eps: f64| {
        let mut m = ModelSpec::new(cfg.model.family, eps).with_beta(cfg.model.beta).with_speed(cfg.model.c);
        if cfg.model.time_scale == TimeScale::Tau {
            m = m.with_tau();
        }
        m
    };
    let point = |eps: f64| -> Result<(Trajectory, BreakdownReport), CliError> {
        let model = model_for(eps);
        let state = initial_state(cfg, &model, Some(&grid))?;
        let traj = evolve(&model, &state, &cfg.evolve)?;
        let rep = detect_breakdown(&traj, delta_tol(cfg))?;
        Ok((traj, rep))
    };
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(eps_values.len()).max(1);
    let mut results: Vec<Option<Result<(Trajectory, BreakdownReport), CliError>>> = (0..eps_values.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for (w, chunk) in results.chunks_mut(eps_values.len().div_ceil(workers)).enumerate() {
            let point = &point;
            let base = w * eps_values.len().div_ceil(workers);
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(point(eps_values[base + i]));
                }
            });
        }
    });
    let mut rows = Vec::new();
    for (i, (eps, res)) in eps_values.iter().zip(results).enumerate() {
        let (traj, rep) = res.expect("every point ran")?;
        let tag = format!("point{i:02}_");
        out.num(&format!("{tag}eps"), *eps);
        record_trajectory(out, &traj, &tag)?;
        record_breakdown(out, &rep, &tag)?;
        rows.push([*eps, rep.critical_time.unwrap_or(f64::NAN), rep.mu_at_critical.unwrap_or(f64::NAN)]);
    }
    out.write("critical_times", "critical_times.csv", &io::csv(&["eps", "critical_time", "mu"], &rows))?;
    out.plot("critical_times", "critical_times.svg", || {
        let p = rows.iter().map(|r| (r[0], r[1])).collect();
        line_plot("critical time", "eps", "tau_c", &[Series::new("tau_c", p)], false)
    })?;
    out.plot("critical_mu", "critical_mu.svg", || {
        let p = rows.iter().map(|r| (r[0], r[2])).collect();
        line_plot("exponent at the critical time", "eps", "mu", &[Series::new("mu", p)], false)
    })
}

fn compare_kdv(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let grid = grid(cfg)?;
    describe_grid(out, &grid);
    let state = initial_state(cfg, &cfg.model, Some(&grid))?;
    let eps = cfg.model.eps;
    let a = &cfg.analysis;
    let cmp = compare_whitham_kdv(&state.u, eps, a.j, a.horizon, cfg.evolve.nt, cfg.evolve.record_every)?;
    let times: Vec<f64> = cmp.series.iter().map(|p| p.t).collect();
    let lin = compare_linear_groups(&state.u, eps, a.j, &times)?;
    let n_j = lin.iter().map(|p| p.hj_diff / p.bound).fold(0.0, f64::max);
    out.set("comparison.j", a.j);
    out.num("comparison.t_final", a.horizon / eps);
    out.num("comparison.m_j", cmp.m_j);
    out.set("comparison.partial", cmp.partial);
    out.num("comparison.linear_n_j", n_j);
    out.write("comparison", "comparison.csv", &io::comparison_csv(&cmp.series))?;
    out.write("linear_comparison", "linear_comparison.csv", &io::comparison_csv(&lin))?;
    out.plot("comparison", "comparison.svg", || {
        let d = cmp.series.iter().map(|p| (p.t, p.hj_diff)).collect();
        let b = cmp.series.iter().map(|p| (p.t, cmp.m_j * p.bound)).collect();
        let l = lin.iter().map(|p| (p.t, p.hj_diff)).collect();
        line_plot(
            "Whitham minus KdV",
            "t",
            "difference",
            &[Series::new("nonlinear", d), Series::new("M eps^2 t", b), Series::new("linear", l)],
            false,
        )
    })
}

fn fit_cmd(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let g = if cfg.input.is_none() { Some(grid(cfg)?) } else { None };
    let state = initial_state(cfg, &cfg.model, g.as_ref())?;
    describe_grid(out, state.grid());
    let field = match (&state.eta, cfg.analysis.component.as_str()) {
        (Some(eta), "eta") => eta,
        (None, "eta") => return Err(CliError::Config("analysis.component = eta needs a system state".into())),
        _ => &state.u,
    };
    out.write("spectrum", "spectrum.csv", &io::spectrum_csv(field))?;
    let fit = fit_spectrum(field, cfg.analysis.window)?;
    let text = io::fit_manifest(&fit).to_string();
    out.write("fit", "fit.txt", &text)?;
    for (k, v) in io::fit_manifest(&fit).entries() {
        out.set(&format!("fit.{k}"), v);
    }
    out.plot("spectrum", "spectrum.svg", || spectrum_plot(field, &fit))
}

fn spectrum_plot(field: &SpectralField, fit: &SingularityFit) -> String {
    let k = field.grid().k();
    let m = field.grid().nyquist_index();
    let data = (1..m).map(|i| (k[i], field.coeffs()[i].norm())).collect();
    let model = (1..m)
        .filter(|&i| k[i] >= fit.window.0 && k[i] <= fit.window.1)
        .map(|i| (k[i], fit.amplitude * k[i].powf(-(fit.mu + 1.0)) * (-fit.delta * k[i]).exp()))
        .collect();
    line_plot("Fourier coefficients", "k", "|u_k|", &[Series::new("data", data), Series::new("fit", model)], true)
}

fn stability_cmd(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let s = &cfg.stability;
    let c = s.c.expect("checked");
    let ks: Vec<f64> = (1..=s.k_count).map(|i| s.k_max * i as f64 / s.k_count as f64).collect();
    let map = stability_map(c, cfg.model.eps, cfg.model.beta, &ks)?;
    let rows: Vec<[f64; 3]> = map.modes.iter().map(|m| [m.k, m.discriminant, if m.unstable { 1.0 } else { 0.0 }]).collect();
    out.write("stability", "stability.csv", &io::csv(&["k", "discriminant", "unstable"], &rows))?;
    out.num("stability.c", c);
    match map.boundary {
        Some(x) => {
            out.num("stability.boundary_x", x);
            out.num("stability.boundary_k", x / cfg.model.eps.sqrt());
        }
        None => out.set("stability.boundary_x", "none"),
    }
    match map.unstable_interval {
        Some((lo, hi)) => {
            out.num("stability.unstable_k_min", lo);
            out.num("stability.unstable_k_max", hi);
        }
        None => out.set("stability.unstable_k_min", "none"),
    }
    out.set("stability.unstable_modes", map.modes.iter().filter(|m| m.unstable).count());
    out.plot("discriminant", "discriminant.svg", || {
        let p = map.modes.iter().map(|m| (m.k, m.discriminant)).collect();
        line_plot("stability discriminant (negative: unstable)", "k", "discriminant", &[Series::new("", p)], false)
    })
}
