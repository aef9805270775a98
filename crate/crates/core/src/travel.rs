//! Solitary waves: closed-form KdV profiles and Newton-Krylov solutions of
//! the Fourier-discretized traveling-wave equations.
//!
//! Scalar equations solve `F(U) = (m(D) - c) U + (eps/2) U^2 = 0`; the
//! Boussinesq system is reduced to
//! `F(U) = (m2(D) - c^2) U + (3 eps c / 2) U^2 - (eps^2 / 2) U^3 = 0` with
//! `N = c U - (eps/2) U^2`. Unknowns are the real cosine coefficients of
//! `U`, which removes the translation mode from the Jacobian.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::models::{conserved, Family, ModelSpec, State};
use crate::spectral::field::{to_physical, to_spectral};
use crate::spectral::{norms, Grid, SpectralField};

#[derive(Clone, Debug)]
pub struct TravelingWave {
    /// Model in the frame commoving with the wave (`model.c == c`).
    pub model: ModelSpec,
    pub c: f64,
    pub u: SpectralField,
    /// `N = c U - (eps/2) U^2`, Boussinesq only.
    pub n: Option<SpectralField>,
    /// Coefficient l2 norm of the discretized equation.
    pub residual: f64,
    /// `int U^2`.
    pub mass: f64,
    /// Conserved energy in the commoving frame.
    pub energy: f64,
}

impl TravelingWave {
    pub fn state(&self) -> State {
        match &self.n {
            Some(n) => State::system(n.clone(), self.u.clone()),
            None => State::scalar(self.u.clone()),
        }
    }

    pub fn max_u(&self) -> f64 {
        self.u.to_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest value of `|U|`, signed (negative for depression waves).
    pub fn peak(&self) -> f64 {
        self.u
            .to_values()
            .into_iter()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOpts {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    /// Maximal number of step halvings when the residual grows.
    pub max_halvings: usize,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            max_newton: 50,
            gmres_tol: 1e-3,
            gmres_restart: 30,
            max_halvings: 8,
        }
    }
}

/// Failure of the Newton iteration; keeps the last iterate for inspection.
#[derive(Clone)]
pub struct NonConvergence {
    pub c: f64,
    pub reason: String,
    pub last_iterate: SpectralField,
    pub residual_history: Vec<f64>,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Newton iteration for c = {} did not converge: {} (last residual {:.3e} after {} steps)",
            self.c,
            self.reason,
            self.residual_history.last().copied().unwrap_or(f64::NAN),
            self.residual_history.len().saturating_sub(1)
        )
    }
}

impl fmt::Debug for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn sech2(x: f64) -> f64 {
    let s = 1.0 / x.cosh();
    s * s
}

/// KdV soliton used as the initial Newton iterate.
///
/// The speed offset is `delta = (c - 1)/eps` for scalar models
/// (`3 delta sech^2(sqrt(3 delta / (2 (1 - 3 beta))) x)`) and
/// `alpha = (c - 1)/eps` for the system (`2 alpha sech^2(sqrt(3 alpha / 2) x)`).
pub fn kdv_soliton(family: Family, eps: f64, beta: f64, offset: f64, grid: &Grid) -> Result<TravelingWave> {
    let c = 1.0 + offset * eps;
    let model = ModelSpec::new(family, eps).with_beta(beta).with_speed(c);
    model.validate()?;
    let (amplitude, width) = match family {
        Family::Whitham | Family::Kdv => {
            if (1.0 - 3.0 * beta).abs() < 1e-14 {
                return Err(Error::Config("beta = 1/3 has no KdV soliton".into()));
            }
            let arg = 3.0 * offset / (2.0 * (1.0 - 3.0 * beta));
            if !(arg > 0.0) {
                let need = if beta > 1.0 / 3.0 { "negative (depression waves)" } else { "positive" };
                return Err(Error::Config(format!(
                    "speed offset {offset} incompatible with beta = {beta}: the offset must be {need}"
                )));
            }
            (3.0 * offset, arg.sqrt())
        }
        Family::Boussinesq => {
            if !(offset > 0.0) {
                return Err(Error::Config(format!(
                    "speed offset {offset} must be positive for the Boussinesq soliton"
                )));
            }
            (2.0 * offset, (1.5 * offset).sqrt())
        }
    };
    let u = SpectralField::from_fn(grid, |x| amplitude * sech2(width * x));
    finish_wave(model, u, None)
}

fn companion_n(model: &ModelSpec, u: &SpectralField) -> SpectralField {
    let c = model.c;
    let eps = model.eps;
    let values: Vec<f64> = u.to_values().iter().map(|v| c * v - 0.5 * eps * v * v).collect();
    SpectralField::from_values(u.grid(), &values).expect("grid length")
}

fn finish_wave(model: ModelSpec, u: SpectralField, residual: Option<f64>) -> Result<TravelingWave> {
    let problem = Problem::new(model, u.grid())?;
    let residual = match residual {
        Some(r) => r,
        None => {
            let a = problem.restrict(u.coeffs());
            full_norm(&problem.residual(&a))
        }
    };
    let n = (model.family == Family::Boussinesq).then(|| companion_n(&model, &u));
    let state = match &n {
        Some(n) => State::system(n.clone(), u.clone()),
        None => State::scalar(u.clone()),
    };
    let energy = conserved(&model, &state)?.energy;
    let l2 = norms(&u, 0).l2;
    Ok(TravelingWave {
        model,
        c: model.c,
        u,
        n,
        residual,
        mass: l2 * l2,
        energy,
    })
}

/// Coefficient l2 norm of a cosine-coefficient vector `a_0..a_{N/2}`.
fn full_norm(a: &[f64]) -> f64 {
    let last = a.len() - 1;
    let mut s = a[0] * a[0] + a[last] * a[last];
    for v in &a[1..last] {
        s += 2.0 * v * v;
    }
    s.sqrt()
}

struct Problem {
    model: ModelSpec,
    grid: Grid,
    /// Linear diagonal `m - c` (scalar) or `m2 - c^2` (system) on `k = j/L`.
    diag: Vec<f64>,
}

impl Problem {
    fn new(model: ModelSpec, grid: &Grid) -> Result<Self> {
        model.validate()?;
        let c = model.c;
        let diag = (0..=grid.n() / 2)
            .map(|j| {
                let m = model.multiplier(j as f64 / grid.l());
                match model.family {
                    Family::Boussinesq => m - c * c,
                    _ => m - c,
                }
            })
            .collect();
        Ok(Self { model, grid: grid.clone(), diag })
    }

    fn restrict(&self, coeffs: &[Complex64]) -> Vec<f64> {
        coeffs[..=self.grid.n() / 2].iter().map(|z| z.re).collect()
    }

    fn extend(&self, a: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut full = vec![Complex64::new(0.0, 0.0); n];
        for (j, &v) in a.iter().enumerate() {
            full[j] = Complex64::new(v, 0.0);
            if j > 0 && j < n / 2 {
                full[n - j] = Complex64::new(v, 0.0);
            }
        }
        full
    }

    fn physical(&self, a: &[f64]) -> Vec<f64> {
        to_physical(&self.grid, &self.extend(a)).into_iter().map(|z| z.re).collect()
    }

    fn transform(&self, values: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        to_spectral(&self.grid, &mut buf);
        self.restrict(&buf)
    }

    /// Nonlinear part evaluated pointwise, and its derivative.
    fn nonlinearity(&self, u: f64) -> (f64, f64) {
        let eps = self.model.eps;
        match self.model.family {
            Family::Boussinesq => {
                let c = self.model.c;
                (
                    1.5 * eps * c * u * u - 0.5 * eps * eps * u * u * u,
                    3.0 * eps * c * u - 1.5 * eps * eps * u * u,
                )
            }
            _ => (0.5 * eps * u * u, eps * u),
        }
    }

    fn residual(&self, a: &[f64]) -> Vec<f64> {
        let u = self.physical(a);
        let nl: Vec<f64> = u.iter().map(|&v| self.nonlinearity(v).0).collect();
        let mut r = self.transform(&nl);
        for ((r, d), a) in r.iter_mut().zip(&self.diag).zip(a) {
            *r += d * a;
        }
        r
    }

    /// Pointwise weights of the linearized nonlinearity at `a`.
    fn jacobian_weights(&self, a: &[f64]) -> Vec<f64> {
        self.physical(a).iter().map(|&v| self.nonlinearity(v).1).collect()
    }

    fn apply_jacobian(&self, weights: &[f64], v: &[f64], out: &mut [f64]) {
        let pv = self.physical(v);
        let prod: Vec<f64> = pv.iter().zip(weights).map(|(x, w)| x * w).collect();
        let t = self.transform(&prod);
        for (((o, t), d), v) in out.iter_mut().zip(&t).zip(&self.diag).zip(v) {
            *o = t + d * v;
        }
    }

    fn precondition(&self, v: &[f64], out: &mut [f64]) {
        for ((o, v), d) in out.iter_mut().zip(v).zip(&self.diag) {
            *o = if d.abs() > 1e-8 { v / d } else { *v };
        }
    }
}

/// Solve the traveling-wave equation for speed `c` starting from `initial`.
///
/// `model.c` is ignored; the returned wave's model carries `c`.
pub fn solve_traveling_wave(
    model: &ModelSpec,
    c: f64,
    initial: &SpectralField,
    opts: &NewtonOpts,
) -> Result<TravelingWave> {
    let model = model.with_speed(c);
    let problem = Problem::new(model, initial.grid())?;
    let init_sym = initial.symmetry_defect();
    let scale = initial.max_coeff().max(1e-300);
    let odd_part = initial.coeffs()[1..initial.grid().n() / 2]
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    if init_sym > 1e-8 * scale || odd_part > 1e-8 * scale {
        return Err(Error::Contract("initial iterate must be real and even".into()));
    }

    let mut a = problem.restrict(initial.coeffs());
    let mut r = problem.residual(&a);
    let mut res = full_norm(&r);
    let mut history = vec![res];
    let fail = |a: &[f64], history: Vec<f64>, reason: &str| {
        let last = SpectralField::from_coeffs(&problem.grid, problem.extend(a)).expect("grid");
        Error::NonConvergence(Box::new(NonConvergence {
            c,
            reason: reason.to_string(),
            last_iterate: last,
            residual_history: history,
        }))
    };

    let dim = a.len();
    let mut step = vec![0.0; dim];
    for _ in 0..opts.max_newton {
        if !res.is_finite() {
            return Err(fail(&a, history, "residual is not finite"));
        }
        if res <= opts.newton_tol {
            break;
        }
        let weights = problem.jacobian_weights(&a);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        step.iter_mut().for_each(|s| *s = 0.0);
        gmres(
            |v, out| problem.apply_jacobian(&weights, v, out),
            |v, out| problem.precondition(v, out),
            &rhs,
            &mut step,
            opts.gmres_tol,
            opts.gmres_restart,
            20 * opts.gmres_restart,
        );
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = a.iter().zip(&step).map(|(x, s)| x + lambda * s).collect();
            let tr = problem.residual(&trial);
            let tres = full_norm(&tr);
            if tres.is_finite() && tres < res {
                accepted = Some((trial, tr, tres));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((na, nr, nres)) => {
                a = na;
                r = nr;
                res = nres;
            }
            None => {
                // residual at round-off level: accept the current iterate
                if res <= 10.0 * opts.newton_tol {
                    break;
                }
                return Err(fail(&a, history, "no descent along the Newton direction"));
            }
        }
        history.push(res);
        let len = history.len();
        if len > 5 && res > 0.9 * history[len - 6] && res > opts.newton_tol {
            return Err(fail(&a, history, "residual reduction below 10% over 5 steps"));
        }
    }
    if res > opts.newton_tol && res > 10.0 * opts.newton_tol {
        return Err(fail(&a, history, "maximal number of Newton steps exceeded"));
    }
    let u = SpectralField::from_coeffs(&problem.grid, problem.extend(&a))?;
    let amp = u.max_coeff();
    if amp < 1e-8 * scale {
        return Err(fail(&a, history, "iteration collapsed to the trivial solution"));
    }
    finish_wave(model, u, Some(res))
}

/// Residual of the full Boussinesq traveling-wave system for `(N, U)` at
/// speed `c`: coefficient l2 norm of
/// `(-c N + m2 U + eps N U, -c U + N + (eps/2) U^2)`.
pub fn system_residual(model: &ModelSpec, c: f64, n: &SpectralField, u: &SpectralField) -> Result<f64> {
    if model.family != Family::Boussinesq {
        return Err(Error::Contract("system residual needs the Boussinesq family".into()));
    }
    let grid = u.grid();
    let nv = n.to_values();
    let uv = u.to_values();
    let nu: Vec<f64> = nv.iter().zip(&uv).map(|(a, b)| a * b).collect();
    let uu: Vec<f64> = uv.iter().map(|b| b * b).collect();
    let nu = SpectralField::from_values(grid, &nu)?;
    let uu = SpectralField::from_values(grid, &uu)?;
    let eps = model.eps;
    let mut total = 0.0;
    for j in 0..grid.n() {
        let k = grid.k()[j];
        let r1 = -c * n.coeffs()[j] + model.multiplier(k) * u.coeffs()[j] + eps * nu.coeffs()[j];
        let r2 = -c * u.coeffs()[j] + n.coeffs()[j] + 0.5 * eps * uu.coeffs()[j];
        total += r1.norm_sqr() + r2.norm_sqr();
    }
    Ok(total.sqrt())
}

#[derive(Clone, Debug)]
pub struct BranchEdge {
    pub last_converged: f64,
    pub failed_at: f64,
    pub failure: NonConvergence,
}

#[derive(Clone, Debug)]
pub struct BranchRow {
    pub c: f64,
    pub max_u: f64,
    pub mass: f64,
    pub energy: f64,
    pub residual: f64,
    pub n_modes: usize,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub waves: Vec<TravelingWave>,
    pub edge: Option<BranchEdge>,
}

impl Branch {
    pub fn table(&self) -> Vec<BranchRow> {
        self.waves
            .iter()
            .map(|w| BranchRow {
                c: w.c,
                max_u: w.max_u(),
                mass: w.mass,
                energy: w.energy,
                residual: w.residual,
                n_modes: w.u.grid().n(),
            })
            .collect()
    }
}

/// Continue a solitary-wave branch through ascending speeds; each converged
/// wave seeds the next solve. The first point starts from the KdV soliton.
pub fn continuation_sweep(model: &ModelSpec, c_values: &[f64], grid: &Grid, opts: &NewtonOpts) -> Result<Branch> {
    if c_values.is_empty() {
        return Err(Error::Config("continuation needs at least one speed".into()));
    }
    if c_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("continuation speeds must be strictly ascending".into()));
    }
    let offset = (c_values[0] - 1.0) / model.eps;
    let seed = kdv_soliton(model.family, model.eps, model.beta, offset, grid)?;
    let mut waves: Vec<TravelingWave> = Vec::new();
    let mut edge = None;
    for &c in c_values {
        let initial = waves.last().map(|w| &w.u).unwrap_or(&seed.u);
        match solve_traveling_wave(model, c, initial, opts) {
            Ok(w) => waves.push(w),
            Err(Error::NonConvergence(fail)) if !waves.is_empty() => {
                edge = Some(BranchEdge {
                    last_converged: waves.last().expect("nonempty").c,
                    failed_at: c,
                    failure: *fail,
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Branch { waves, edge })
}
