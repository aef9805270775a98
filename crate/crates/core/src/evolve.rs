//! Time integration with the two-stage Gauss-Legendre implicit Runge-Kutta
//! method (order 4, symmetric, conserves quadratic invariants).
//!
//! Stage increments `Z_i = dt sum_j a_ij f(y + Z_j)` are found either by
//! fixed-point iteration or by a simplified Newton iteration whose Jacobian
//! is the linear part of the model, inverted exactly mode by mode.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{conserved, Discretization, Family, LinearPart, ModelSpec, State};
use crate::spectral::krasny_in_place;
use crate::spectral::{norms, Grid, SpectralField};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const A11: f64 = 0.25;
const A12: f64 = 0.25 - SQRT3 / 6.0;
const A21: f64 = 0.25 + SQRT3 / 6.0;
const A22: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageSolver {
    FixedPoint,
    SimplifiedNewton,
}

impl StageSolver {
    /// Fixed point everywhere except KdV, whose cubic symbol is too stiff for it.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Kdv => StageSolver::SimplifiedNewton,
            _ => StageSolver::FixedPoint,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOpts {
    pub t_final: f64,
    pub nt: usize,
    /// `None` selects [`StageSolver::default_for`] the model family.
    pub stage_solver: Option<StageSolver>,
    pub stage_tol: f64,
    pub stage_max_iter: usize,
    /// Krasny filter threshold; 0 disables filtering.
    pub krasny: f64,
    pub record_every: usize,
    /// Keep a full snapshot every this many records (0: first and last only).
    pub snapshot_every: usize,
    /// Stop when the spectral-floor indicator exceeds this value.
    pub floor_stop: f64,
}

impl EvolveOpts {
    pub fn new(t_final: f64, nt: usize) -> Self {
        Self {
            t_final,
            nt,
            stage_solver: None,
            stage_tol: 1e-12,
            stage_max_iter: 100,
            krasny: 0.0,
            record_every: 1,
            snapshot_every: 0,
            floor_stop: 1e-2,
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time {} must be positive", self.t_final)));
        }
        if self.nt == 0 || self.record_every == 0 || self.stage_max_iter == 0 {
            return Err(Error::Config("Nt, record-every and stage-max-iter must be positive".into()));
        }
        if !(self.stage_tol > 0.0) {
            return Err(Error::Config("stage tolerance must be positive".into()));
        }
        if !(self.krasny >= 0.0) {
            return Err(Error::Config("Krasny threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCause {
    Completed,
    StageDivergence,
    NonFinite,
    ResolutionLoss,
}

impl StopCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopCause::Completed => "completed",
            StopCause::StageDivergence => "stage-divergence",
            StopCause::NonFinite => "non-finite",
            StopCause::ResolutionLoss => "resolution-loss",
        }
    }

    pub fn is_breakdown(&self) -> bool {
        !matches!(self, StopCause::Completed)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    pub dx_l2: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    /// `(E(t) - E(0)) / |E(0)|`, or the absolute drift when `E(0) = 0`.
    pub energy_drift: f64,
    pub floor: f64,
}

/// Moduli of the positive-wavenumber coefficients of each component at one time.
#[derive(Clone, Debug)]
pub struct RecordedSpectrum {
    pub t: f64,
    pub components: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: ModelSpec,
    pub grid: Grid,
    pub opts: EvolveOpts,
    pub diagnostics: Vec<Diagnostics>,
    pub spectra: Vec<RecordedSpectrum>,
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub stop: StopCause,
    pub stop_time: f64,
    pub stop_message: Option<String>,
    /// Stage iterations summed over all steps.
    pub stage_iterations: usize,
}

/// Largest coefficient modulus among the top 10% of wavenumbers, relative
/// to the largest modulus overall.
pub fn spectral_floor(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let kcut = 0.9 * grid.kmax();
    let mut top = 0.0f64;
    let mut all = 0.0f64;
    for (c, &k) in field.coeffs().iter().zip(grid.k()) {
        let a = c.norm();
        all = all.max(a);
        if k.abs() >= kcut {
            top = top.max(a);
        }
    }
    if all == 0.0 {
        0.0
    } else {
        top / all
    }
}

enum Inverse {
    Scalar(Vec<[Complex64; 4]>),
    System(Vec<[Complex64; 16]>),
}

/// Gauss-Legendre stepper for one model, grid and step size.
pub struct Integrator {
    disc: Discretization,
    dt: f64,
    solver: StageSolver,
    tol: f64,
    max_iter: usize,
    krasny: f64,
    inverse: Option<Inverse>,
    last_iterations: usize,
}

fn invert2(m: [Complex64; 4]) -> [Complex64; 4] {
    let det = m[0] * m[3] - m[1] * m[2];
    [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]
}

fn invert4(mut m: [Complex64; 16]) -> [Complex64; 16] {
    let mut inv = [Complex64::new(0.0, 0.0); 16];
    for i in 0..4 {
        inv[i * 4 + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| m[a * 4 + col].norm().total_cmp(&m[b * 4 + col].norm()))
            .expect("nonempty");
        if pivot != col {
            for j in 0..4 {
                m.swap(pivot * 4 + j, col * 4 + j);
                inv.swap(pivot * 4 + j, col * 4 + j);
            }
        }
        let p = m[col * 4 + col];
        for j in 0..4 {
            m[col * 4 + j] /= p;
            inv[col * 4 + j] /= p;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row * 4 + col];
                for j in 0..4 {
                    let mv = m[col * 4 + j];
                    let iv = inv[col * 4 + j];
                    m[row * 4 + j] -= f * mv;
                    inv[row * 4 + j] -= f * iv;
                }
            }
        }
    }
    inv
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl Integrator {
    pub fn new(model: &ModelSpec, grid: &Grid, dt: f64, opts: &EvolveOpts) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::Contract(format!("time step {dt} must be finite and nonzero")));
        }
        let disc = Discretization::new(*model, grid)?;
        let solver = opts.stage_solver.unwrap_or(StageSolver::default_for(model.family));
        let inverse = match solver {
            StageSolver::FixedPoint => None,
            StageSolver::SimplifiedNewton => Some(Self::stage_inverse(&disc, dt)),
        };
        Ok(Self {
            disc,
            dt,
            solver,
            tol: opts.stage_tol,
            max_iter: opts.stage_max_iter,
            krasny: opts.krasny,
            inverse,
            last_iterations: 0,
        })
    }

    /// Per-mode inverse of `I - dt A (x) L`.
    fn stage_inverse(disc: &Discretization, dt: f64) -> Inverse {
        let a = [[A11, A12], [A21, A22]];
        match disc.linear() {
            LinearPart::Scalar(lam) => Inverse::Scalar(
                lam.iter()
                    .map(|&l| {
                        invert2([
                            1.0 - dt * A11 * l,
                            -dt * A12 * l,
                            -dt * A21 * l,
                            1.0 - dt * A22 * l,
                        ])
                    })
                    .collect(),
            ),
            LinearPart::System(blocks) => Inverse::System(
                blocks
                    .iter()
                    .map(|b| {
                        let mut m = [Complex64::new(0.0, 0.0); 16];
                        // unknown ordering: (stage, component)
                        for si in 0..2 {
                            for sj in 0..2 {
                                for ci in 0..2 {
                                    for cj in 0..2 {
                                        let id = if si == sj && ci == cj { 1.0 } else { 0.0 };
                                        m[(si * 2 + ci) * 4 + sj * 2 + cj] =
                                            id - dt * a[si][sj] * b[ci * 2 + cj];
                                    }
                                }
                            }
                        }
                        invert4(m)
                    })
                    .collect(),
            ),
        }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Stage iterations used by the most recent step.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    fn apply_inverse(&self, g1: &mut [Complex64], g2: &mut [Complex64]) {
        let n = self.disc.grid().n();
        match self.inverse.as_ref().expect("simplified Newton") {
            Inverse::Scalar(inv) => {
                for ((a, b), m) in g1.iter_mut().zip(g2.iter_mut()).zip(inv) {
                    let (x, y) = (*a, *b);
                    *a = m[0] * x + m[1] * y;
                    *b = m[2] * x + m[3] * y;
                }
            }
            Inverse::System(inv) => {
                for j in 0..n {
                    let v = [g1[j], g1[n + j], g2[j], g2[n + j]];
                    let m = &inv[j];
                    let mut out = [Complex64::new(0.0, 0.0); 4];
                    for (r, o) in out.iter_mut().enumerate() {
                        *o = m[r * 4] * v[0] + m[r * 4 + 1] * v[1] + m[r * 4 + 2] * v[2] + m[r * 4 + 3] * v[3];
                    }
                    g1[j] = out[0];
                    g1[n + j] = out[1];
                    g2[j] = out[2];
                    g2[n + j] = out[3];
                }
            }
        }
    }

    /// Advance packed coefficients `y` by one step in place.
    pub fn advance(&mut self, y: &mut [Complex64]) -> Result<()> {
        let m = y.len();
        let dt = self.dt;
        let zero = Complex64::new(0.0, 0.0);
        let mut z1 = vec![zero; m];
        let mut z2 = vec![zero; m];
        let mut f1 = vec![zero; m];
        let mut f2 = vec![zero; m];
        let mut work = vec![zero; m];
        let scale = l2(y).max(1e-300);
        let mut prev_inc = f64::INFINITY;
        let mut stalls = 0;
        let mut converged = false;
        let mut iterations = 0;
        let mut inc = f64::INFINITY;
        while iterations < self.max_iter {
            iterations += 1;
            for (w, (a, b)) in work.iter_mut().zip(y.iter().zip(&z1)) {
                *w = a + b;
            }
            self.disc.rhs(&work, &mut f1);
            for (w, (a, b)) in work.iter_mut().zip(y.iter().zip(&z2)) {
                *w = a + b;
            }
            self.disc.rhs(&work, &mut f2);
            // residual G_i = dt sum_j a_ij F_j - Z_i, i.e. the fixed-point increment
            let mut g1: Vec<Complex64> = (0..m).map(|j| dt * (A11 * f1[j] + A12 * f2[j]) - z1[j]).collect();
            let mut g2: Vec<Complex64> = (0..m).map(|j| dt * (A21 * f1[j] + A22 * f2[j]) - z2[j]).collect();
            if self.solver == StageSolver::SimplifiedNewton {
                self.apply_inverse(&mut g1, &mut g2);
            }
            inc = (l2(&g1).powi(2) + l2(&g2).powi(2)).sqrt();
            if !inc.is_finite() {
                return Err(Error::StageDivergence { iterations, increment: inc });
            }
            for j in 0..m {
                z1[j] += g1[j];
                z2[j] += g2[j];
            }
            if inc <= self.tol * scale {
                converged = true;
                break;
            }
            // round-off plateau slightly above the tolerance
            if inc <= 1e3 * self.tol * scale && inc > 0.9 * prev_inc {
                stalls += 1;
                if stalls >= 2 {
                    converged = true;
                    break;
                }
            }
            prev_inc = inc;
        }
        self.last_iterations = iterations;
        if !converged {
            return Err(Error::StageDivergence { iterations, increment: inc / scale });
        }
        for j in 0..m {
            y[j] += SQRT3 * (z2[j] - z1[j]);
        }
        if self.krasny > 0.0 {
            krasny_in_place(y, self.krasny);
        }
        Ok(())
    }
}

/// One Gauss-Legendre step of size `dt` (negative steps integrate backwards).
pub fn step(model: &ModelSpec, state: &State, dt: f64, opts: &EvolveOpts) -> Result<State> {
    let mut integ = Integrator::new(model, state.grid(), dt, opts)?;
    let mut y = integ.disc.pack(state)?;
    integ.advance(&mut y)?;
    Ok(integ.disc.unpack(&y, state.time + dt))
}

fn diagnostics(model: &ModelSpec, state: &State, e0: Option<f64>) -> Result<Diagnostics> {
    let primary = norms(state.primary(), 0);
    let cons = conserved(model, state)?;
    let floor = match &state.eta {
        Some(eta) => spectral_floor(eta).max(spectral_floor(&state.u)),
        None => spectral_floor(&state.u),
    };
    let e0 = e0.unwrap_or(cons.energy);
    let drift = if e0 != 0.0 { (cons.energy - e0) / e0.abs() } else { cons.energy - e0 };
    Ok(Diagnostics {
        t: state.time,
        linf: primary.linf,
        l2: primary.l2,
        dx_l2: primary.dx_l2,
        mass: cons.mass,
        momentum: cons.momentum,
        energy: cons.energy,
        energy_drift: drift,
        floor,
    })
}

fn spectrum_of(state: &State) -> RecordedSpectrum {
    let mut components = Vec::new();
    if let Some(eta) = &state.eta {
        components.push(eta.positive_spectrum());
    }
    components.push(state.u.positive_spectrum());
    RecordedSpectrum { t: state.time, components }
}

/// Integrate `initial` for `opts.nt` uniform steps, stopping early on
/// breakdown (stage divergence, non-finite values, or loss of resolution).
pub fn evolve(model: &ModelSpec, initial: &State, opts: &EvolveOpts) -> Result<Trajectory> {
    opts.validate()?;
    initial.check(model)?;
    let grid = initial.grid().clone();
    let dt = opts.dt();
    let mut integ = Integrator::new(model, &grid, dt, opts)?;
    let disc = integ.disc.clone();
    let mut y = disc.pack(initial)?;
    let t0 = initial.time;

    let first = diagnostics(model, initial, None)?;
    let e0 = first.energy;
    let mut traj = Trajectory {
        model: *model,
        grid: grid.clone(),
        opts: opts.clone(),
        diagnostics: vec![first],
        spectra: vec![spectrum_of(initial)],
        snapshots: vec![initial.clone()],
        final_state: initial.clone(),
        stop: StopCause::Completed,
        stop_time: t0,
        stop_message: None,
        stage_iterations: 0,
    };
    let mut records = 0usize;
    let mut last_good = initial.clone();
    for n in 1..=opts.nt {
        let t = t0 + n as f64 * dt;
        if let Err(e) = integ.advance(&mut y) {
            traj.stop = StopCause::StageDivergence;
            traj.stop_message = Some(e.to_string());
            traj.stop_time = t - dt;
            break;
        }
        traj.stage_iterations += integ.last_iterations();
        if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            traj.stop = StopCause::NonFinite;
            traj.stop_time = t - dt;
            break;
        }
        let state = disc.unpack(&y, t);
        let floor = match &state.eta {
            Some(eta) => spectral_floor(eta).max(spectral_floor(&state.u)),
            None => spectral_floor(&state.u),
        };
        let is_record = n % opts.record_every == 0 || n == opts.nt;
        if is_record || floor > opts.floor_stop {
            traj.diagnostics.push(diagnostics(model, &state, Some(e0))?);
            traj.spectra.push(spectrum_of(&state));
            records += 1;
            if opts.snapshot_every > 0 && records % opts.snapshot_every == 0 {
                traj.snapshots.push(state.clone());
            }
        }
        traj.stop_time = t;
        last_good = state;
        if floor > opts.floor_stop {
            traj.stop = StopCause::ResolutionLoss;
            traj.stop_message = Some(format!("spectral floor {floor:.3e} above {:.1e}", opts.floor_stop));
            break;
        }
    }
    if traj.snapshots.last().map(|s| s.time) != Some(last_good.time) {
        traj.snapshots.push(last_good.clone());
    }
    traj.final_state = last_good;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::linear_group;

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.to_values().iter().zip(b.to_values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn butcher_rows_sum_to_nodes() {
        assert!((A11 + A12 - (0.5 - SQRT3 / 6.0)).abs() < 1e-16);
        assert!((A21 + A22 - (0.5 + SQRT3 / 6.0)).abs() < 1e-16);
    }

    #[test]
    fn invert4_matches_identity() {
        let mut m = [Complex64::new(0.0, 0.0); 16];
        for i in 0..16 {
            m[i] = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 0.2);
        }
        for i in 0..4 {
            m[i * 5] += Complex64::new(3.0, 0.0);
        }
        let inv = invert4(m);
        for r in 0..4 {
            for c in 0..4 {
                let s: Complex64 = (0..4).map(|k| m[r * 4 + k] * inv[k * 4 + c]).sum();
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((s - e).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_step_matches_exact_group() {
        let g = Grid::new(256, 5.0).unwrap();
        let phi = SpectralField::from_fn(&g, |x| (-x * x).exp());
        for (model, solver) in [
            (ModelSpec::whitham(0.1).linear(), StageSolver::FixedPoint),
            (ModelSpec::kdv(0.1).linear(), StageSolver::SimplifiedNewton),
        ] {
            let mut opts = EvolveOpts::new(1.0, 1);
            opts.stage_solver = Some(solver);
            let s = step(&model, &State::scalar(phi.clone()), 1e-2, &opts).unwrap();
            let exact = linear_group(&model, &phi, 1e-2).unwrap();
            assert!(max_diff(&s.u, &exact) < 1e-9);
            let l0 = norms(&phi, 0).l2;
            assert!((norms(&s.u, 0).l2 - l0).abs() < 1e-13 * l0);
        }
    }

    #[test]
    fn system_solvers_agree() {
        let g = Grid::new(128, 3.0).unwrap();
        let eta = SpectralField::from_fn(&g, |x| 0.5 * (-x * x).exp());
        let u = SpectralField::zeros(&g);
        let state = State::system(eta, u);
        let model = ModelSpec::boussinesq(0.5).with_speed(0.3);
        let mut fp = EvolveOpts::new(1.0, 1);
        fp.stage_solver = Some(StageSolver::FixedPoint);
        let mut sn = fp.clone();
        sn.stage_solver = Some(StageSolver::SimplifiedNewton);
        let a = step(&model, &state, 1e-3, &fp).unwrap();
        let b = step(&model, &state, 1e-3, &sn).unwrap();
        assert!(max_diff(&a.u, &b.u) < 1e-13);
        assert!(max_diff(a.eta.as_ref().unwrap(), b.eta.as_ref().unwrap()) < 1e-13);
    }

    #[test]
    fn time_reversal() {
        let g = Grid::new(256, 5.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| 2.0 * (-x * x).exp());
        let model = ModelSpec::whitham(0.1).with_speed(1.0);
        let opts = EvolveOpts::new(1.0, 1);
        let fwd = step(&model, &State::scalar(u.clone()), 1e-2, &opts).unwrap();
        let back = step(&model, &fwd, -1e-2, &opts).unwrap();
        assert!(max_diff(&back.u, &u) < 1e-10);
    }

    #[test]
    fn stage_divergence_is_reported() {
        let g = Grid::new(256, 5.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| 10.0 * (-x * x).exp());
        let mut opts = EvolveOpts::new(1.0, 1);
        opts.stage_max_iter = 3;
        opts.stage_solver = Some(StageSolver::FixedPoint);
        let err = step(&ModelSpec::whitham(1.0), &State::scalar(u), 0.05, &opts).unwrap_err();
        assert!(matches!(err, Error::StageDivergence { .. }));
    }

    fn run(model: &ModelSpec, u: &SpectralField, t: f64, nt: usize) -> Trajectory {
        let mut opts = EvolveOpts::new(t, nt);
        opts.record_every = nt;
        evolve(model, &State::scalar(u.clone()), &opts).unwrap()
    }

    #[test]
    fn fourth_order_convergence() {
        let g = Grid::new(128, 4.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| 2.0 * (-x * x).exp());
        let model = ModelSpec::whitham(0.2);
        let reference = run(&model, &u, 2.0, 320).final_state.u;
        let err = |nt| max_diff(&run(&model, &u, 2.0, nt).final_state.u, &reference);
        let (e1, e2, e3) = (err(10), err(20), err(40));
        for ratio in [e1 / e2, e2 / e3] {
            assert!(ratio > 12.0 && ratio < 20.0, "{e1:e} {e2:e} {e3:e}");
        }
    }

    #[test]
    fn invariants_along_smooth_run() {
        let g = Grid::new(256, 5.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| 2.0 * (-x * x).exp() + 0.3);
        let model = ModelSpec::whitham(0.1);
        let mut opts = EvolveOpts::new(5.0, 500);
        opts.record_every = 50;
        let traj = evolve(&model, &State::scalar(u.clone()), &opts).unwrap();
        assert_eq!(traj.stop, StopCause::Completed);
        assert_eq!(traj.diagnostics.len(), 11);
        assert_eq!(traj.diagnostics[0].energy_drift, 0.0);
        let d0 = traj.diagnostics[0];
        for d in &traj.diagnostics {
            assert!((d.mass - d0.mass).abs() <= 1e-13 * d0.mass.abs());
            assert!(((d.momentum - d0.momentum) / d0.momentum).abs() <= 1e-10);
            assert!(d.energy_drift.abs() <= 1e-10);
        }
        let mean0 = u.coeffs()[0];
        assert!((traj.final_state.u.coeffs()[0] - mean0).norm() <= 1e-13 * mean0.norm());
    }

    #[test]
    fn system_invariants() {
        let g = Grid::new(256, 5.0).unwrap();
        let eta = SpectralField::from_fn(&g, |x| (-x * x).exp());
        let u = SpectralField::from_fn(&g, |x| 0.5 * (-(x - 1.0) * (x - 1.0)).exp());
        let model = ModelSpec::boussinesq(0.1);
        let mut opts = EvolveOpts::new(2.0, 400);
        opts.record_every = 100;
        let traj = evolve(&model, &State::system(eta, u), &opts).unwrap();
        assert_eq!(traj.stop, StopCause::Completed);
        let d0 = traj.diagnostics[0];
        for d in &traj.diagnostics {
            assert!((d.mass - d0.mass).abs() <= 1e-13 * d0.mass.abs());
            assert!((d.momentum - d0.momentum).abs() <= 1e-10 * d0.momentum.abs());
            assert!(d.energy_drift.abs() <= 1e-10);
        }
        assert_eq!(traj.spectra[0].components.len(), 2);
    }

    #[test]
    fn resolution_loss_stops_early() {
        let g = Grid::new(64, 5.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| 10.0 * (-x * x).exp());
        let model = ModelSpec::whitham(1.0).with_tau();
        let traj = run(&model, &u, 0.2, 2000);
        assert_eq!(traj.stop, StopCause::ResolutionLoss);
        assert!(traj.stop_time < 0.2);
        assert!(traj.diagnostics.last().unwrap().floor > 1e-2);
        assert_eq!(traj.final_state.time, traj.stop_time);
    }

    #[test]
    fn deterministic() {
        let g = Grid::new(64, 3.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| (-x * x).exp());
        let model = ModelSpec::whitham(0.3);
        let a = run(&model, &u, 1.0, 50).final_state.u;
        let b = run(&model, &u, 1.0, 50).final_state.u;
        assert_eq!(a.coeffs(), b.coeffs());
    }

    #[test]
    fn zero_dt_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        let s = State::scalar(SpectralField::zeros(&g));
        assert!(step(&ModelSpec::whitham(0.1), &s, 0.0, &EvolveOpts::new(1.0, 1)).is_err());
        assert!(EvolveOpts::new(0.0, 1).validate().is_err());
        assert!(EvolveOpts::new(1.0, 0).validate().is_err());
    }
}
