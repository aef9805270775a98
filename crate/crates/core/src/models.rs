//! Right-hand sides of the supported PDEs in Fourier space.
//!
//! Scalar equations (`Whitham`, `Kdv`) are evolved as
//! `u_t + (m(D) - c) u_x + eps u u_x = 0`, where `m` is the Whitham
//! multiplier (capillary when `beta > 0`) or the KdV multiplier
//! `1 - (eps/2)(1/3 - beta) k^2`. The Boussinesq-Whitham system is
//! `eta_t + m2(D) u_x + eps (eta u)_x = 0`, `u_t + eta_x + (eps/2)(u^2)_x = 0`
//! with the frame shift `-c d/dx` applied to both components. With the
//! rescaled time `tau = eps t` every right-hand side is divided by `eps`;
//! choosing `c = 1` gives `u_tau + u u_x + (1/eps)(m - 1) u_x = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::field::{to_physical, to_spectral};
use crate::spectral::{norms, Grid, SpectralField, SymbolKind, SymbolSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Whitham,
    Kdv,
    Boussinesq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScale {
    T,
    Tau,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub eps: f64,
    /// Surface tension; 0 disables it.
    pub beta: f64,
    /// Speed of the commoving frame.
    pub c: f64,
    pub time_scale: TimeScale,
    /// Multiplies every nonlinear term; 0 gives the linear equation.
    pub nonlinearity: f64,
}

impl ModelSpec {
    pub fn new(family: Family, eps: f64) -> Self {
        Self {
            family,
            eps,
            beta: 0.0,
            c: 0.0,
            time_scale: TimeScale::T,
            nonlinearity: 1.0,
        }
    }

    pub fn whitham(eps: f64) -> Self {
        Self::new(Family::Whitham, eps)
    }

    pub fn kdv(eps: f64) -> Self {
        Self::new(Family::Kdv, eps)
    }

    pub fn boussinesq(eps: f64) -> Self {
        Self::new(Family::Boussinesq, eps)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_tau(mut self) -> Self {
        self.time_scale = TimeScale::Tau;
        self
    }

    pub fn linear(mut self) -> Self {
        self.nonlinearity = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta = {} must be nonnegative", self.beta)));
        }
        if !self.c.is_finite() || !self.nonlinearity.is_finite() {
            return Err(Error::Config("frame speed and nonlinearity must be finite".into()));
        }
        if self.time_scale == TimeScale::Tau && self.family == Family::Boussinesq {
            return Err(Error::Config(
                "the rescaled time tau = eps t is only available for scalar equations".into(),
            ));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        match self.family {
            Family::Boussinesq => 2,
            _ => 1,
        }
    }

    /// Factor converting `d/dt` into the evolution variable's derivative.
    pub fn time_factor(&self) -> f64 {
        match self.time_scale {
            TimeScale::T => 1.0,
            TimeScale::Tau => 1.0 / self.eps,
        }
    }

    /// Fourier symbol of the dispersive multiplier. For the system this is
    /// the operator acting on `u_x` in the mass equation.
    pub fn symbol(&self) -> SymbolSpec {
        let kind = match (self.family, self.beta > 0.0) {
            (Family::Whitham, false) => SymbolKind::Whitham,
            (Family::Whitham, true) => SymbolKind::WhithamSt,
            (Family::Boussinesq, false) => SymbolKind::BoussinesqT2,
            (Family::Boussinesq, true) => SymbolKind::BoussinesqP,
            (Family::Kdv, _) => SymbolKind::KdvCubic,
        };
        SymbolSpec::new(kind, self.eps, self.beta)
    }

    /// Phase speed multiplier `m(k)`; the linear flux is `m(D) u_x`.
    pub fn multiplier(&self, k: f64) -> f64 {
        match self.family {
            Family::Kdv => 1.0 - 0.5 * self.eps * (1.0 / 3.0 - self.beta) * k * k,
            _ => self.symbol().eval(k),
        }
    }
}

/// Solution state. `eta` is present exactly for the Boussinesq system.
#[derive(Clone, Debug)]
pub struct State {
    pub u: SpectralField,
    pub eta: Option<SpectralField>,
    pub time: f64,
}

impl State {
    pub fn scalar(u: SpectralField) -> Self {
        Self { u, eta: None, time: 0.0 }
    }

    pub fn system(eta: SpectralField, u: SpectralField) -> Self {
        Self { u, eta: Some(eta), time: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn check(&self, model: &ModelSpec) -> Result<()> {
        match (model.family, &self.eta) {
            (Family::Boussinesq, None) => {
                Err(Error::Contract("the Boussinesq system needs both eta and u".into()))
            }
            (Family::Boussinesq, Some(eta)) if !eta.grid().same_as(self.u.grid()) => {
                Err(Error::Contract("eta and u live on different grids".into()))
            }
            (Family::Whitham | Family::Kdv, Some(_)) => {
                Err(Error::Contract("scalar model given a two-component state".into()))
            }
            _ => Ok(()),
        }
    }

    /// The field used for amplitude diagnostics: `eta` for the system, `u` otherwise.
    pub fn primary(&self) -> &SpectralField {
        self.eta.as_ref().unwrap_or(&self.u)
    }
}

#[derive(Clone, Debug)]
pub struct StateDerivative {
    pub du: Vec<Complex64>,
    pub deta: Option<Vec<Complex64>>,
}

/// Per-mode linear operator of a model on a fixed grid.
#[derive(Clone, Debug)]
pub(crate) enum LinearPart {
    Scalar(Vec<Complex64>),
    /// Row-major 2x2 blocks acting on `(eta, u)`.
    System(Vec<[Complex64; 4]>),
}

/// A model discretized on a grid: cached linear symbols plus the
/// pseudospectral nonlinear terms. States are packed as `[u]` or `[eta, u]`.
#[derive(Clone, Debug)]
pub struct Discretization {
    model: ModelSpec,
    grid: Grid,
    linear: LinearPart,
    ik: Vec<Complex64>,
}

impl Discretization {
    pub fn new(model: ModelSpec, grid: &Grid) -> Result<Self> {
        model.validate()?;
        let nyq = grid.nyquist_index();
        let tf = model.time_factor();
        let ik: Vec<Complex64> = grid
            .k()
            .iter()
            .enumerate()
            .map(|(j, &k)| if j == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) })
            .collect();
        let linear = match model.family {
            Family::Whitham | Family::Kdv => LinearPart::Scalar(
                grid.k()
                    .iter()
                    .zip(&ik)
                    .map(|(&k, &ik)| -ik * (model.multiplier(k) - model.c) * tf)
                    .collect(),
            ),
            Family::Boussinesq => LinearPart::System(
                grid.k()
                    .iter()
                    .zip(&ik)
                    .map(|(&k, &ik)| {
                        let m2 = model.multiplier(k);
                        [ik * model.c, -ik * m2, -ik, ik * model.c]
                    })
                    .collect(),
            ),
        };
        Ok(Self { model, grid: grid.clone(), linear, ik })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.n() * self.model.components()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn linear(&self) -> &LinearPart {
        &self.linear
    }

    pub fn pack(&self, state: &State) -> Result<Vec<Complex64>> {
        state.check(&self.model)?;
        if !state.grid().same_as(&self.grid) {
            return Err(Error::Contract("state grid differs from the model grid".into()));
        }
        let mut y = Vec::with_capacity(self.len());
        if let Some(eta) = &state.eta {
            y.extend_from_slice(eta.coeffs());
        }
        y.extend_from_slice(state.u.coeffs());
        Ok(y)
    }

    pub fn unpack(&self, y: &[Complex64], time: f64) -> State {
        let n = self.grid.n();
        let field = |s: &[Complex64]| SpectralField::from_coeffs(&self.grid, s.to_vec()).expect("length");
        match self.model.family {
            Family::Boussinesq => State {
                eta: Some(field(&y[..n])),
                u: field(&y[n..]),
                time,
            },
            _ => State { u: field(y), eta: None, time },
        }
    }

    /// Linear part only: `out = L y`.
    pub fn apply_linear(&self, y: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n();
        match &self.linear {
            LinearPart::Scalar(lam) => {
                for ((o, &v), &l) in out.iter_mut().zip(y).zip(lam) {
                    *o = l * v;
                }
            }
            LinearPart::System(blocks) => {
                let (eta, u) = y.split_at(n);
                let (oe, ou) = out.split_at_mut(n);
                for j in 0..n {
                    let b = &blocks[j];
                    oe[j] = b[0] * eta[j] + b[1] * u[j];
                    ou[j] = b[2] * eta[j] + b[3] * u[j];
                }
            }
        }
    }

    /// Full right-hand side `out = L y + N(y)`.
    pub fn rhs(&self, y: &[Complex64], out: &mut [Complex64]) {
        self.apply_linear(y, out);
        let nu = self.model.nonlinearity;
        if nu == 0.0 {
            return;
        }
        let n = self.grid.n();
        let eps = self.model.eps;
        let tf = self.model.time_factor();
        match self.model.family {
            Family::Whitham | Family::Kdv => {
                let mut sq = to_physical(&self.grid, y);
                for z in sq.iter_mut() {
                    *z = Complex64::new(z.re * z.re, 0.0);
                }
                to_spectral(&self.grid, &mut sq);
                let coef = -0.5 * nu * eps * tf;
                for ((o, s), ik) in out.iter_mut().zip(&sq).zip(&self.ik) {
                    *o += ik * s * coef;
                }
            }
            Family::Boussinesq => {
                let eta = to_physical(&self.grid, &y[..n]);
                let u = to_physical(&self.grid, &y[n..]);
                let mut flux_eta: Vec<Complex64> =
                    eta.iter().zip(&u).map(|(e, v)| Complex64::new(e.re * v.re, 0.0)).collect();
                let mut flux_u: Vec<Complex64> =
                    u.iter().map(|v| Complex64::new(v.re * v.re, 0.0)).collect();
                to_spectral(&self.grid, &mut flux_eta);
                to_spectral(&self.grid, &mut flux_u);
                let (oe, ou) = out.split_at_mut(n);
                for j in 0..n {
                    oe[j] -= self.ik[j] * flux_eta[j] * (nu * eps);
                    ou[j] -= self.ik[j] * flux_u[j] * (0.5 * nu * eps);
                }
            }
        }
    }
}

/// Time derivative of `state` under `model`.
pub fn rhs(model: &ModelSpec, state: &State) -> Result<StateDerivative> {
    let disc = Discretization::new(*model, state.grid())?;
    let y = disc.pack(state)?;
    let mut out = vec![Complex64::new(0.0, 0.0); y.len()];
    disc.rhs(&y, &mut out);
    let n = state.grid().n();
    Ok(match model.family {
        Family::Boussinesq => StateDerivative {
            deta: Some(out[..n].to_vec()),
            du: out[n..].to_vec(),
        },
        _ => StateDerivative { du: out, deta: None },
    })
}

/// Exact solution of the linear scalar equation after time `t`:
/// `c(k) -> exp(-i t k (m(k) - c)) c(k)` in the model's time variable.
pub fn linear_group(model: &ModelSpec, phi: &SpectralField, t: f64) -> Result<SpectralField> {
    model.validate()?;
    if model.family == Family::Boussinesq {
        return Err(Error::Unsupported(
            "no closed-form linear group for the Boussinesq system".into(),
        ));
    }
    let grid = phi.grid();
    let tf = model.time_factor();
    let nyq = grid.nyquist_index();
    let coeffs = phi
        .coeffs()
        .iter()
        .zip(grid.k())
        .enumerate()
        .map(|(j, (&c, &k))| {
            if j == nyq {
                return c;
            }
            let omega = k * (model.multiplier(k) - model.c) * tf;
            c * Complex64::from_polar(1.0, -omega * t)
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Conserved {
    /// `int u` for scalar equations, `int eta` for the system.
    pub mass: f64,
    /// `int u` for the system.
    pub mass_u: Option<f64>,
    /// `int u^2` for scalar equations, `int eta u` for the system.
    pub momentum: f64,
    pub energy: f64,
}

/// Mass, momentum and Hamiltonian of a state.
///
/// Scalar energy: `1/2 int u (m - c) u + (eps/6) int u^3`.
/// System energy: `1/2 int (|L u|^2 + eta^2 + eps u^2 eta)` with `L^2 = m2`.
pub fn conserved(model: &ModelSpec, state: &State) -> Result<Conserved> {
    model.validate()?;
    state.check(model)?;
    let grid = state.grid();
    let period = grid.period();
    let eps = model.eps;
    let quad = |f: &SpectralField, w: &dyn Fn(f64) -> f64| -> f64 {
        f.coeffs()
            .iter()
            .zip(grid.k())
            .map(|(c, &k)| w(k) * c.norm_sqr())
            .sum::<f64>()
            * period
    };
    match model.family {
        Family::Whitham | Family::Kdv => {
            let u = &state.u;
            let nu = norms(u, 0);
            let quadratic = quad(u, &|k| model.multiplier(k) - model.c);
            Ok(Conserved {
                mass: nu.mass,
                mass_u: None,
                momentum: nu.l2 * nu.l2,
                energy: 0.5 * quadratic + model.nonlinearity * eps / 6.0 * nu.cubic,
            })
        }
        Family::Boussinesq => {
            let eta = state.eta.as_ref().expect("checked");
            let u = &state.u;
            let ev = eta.to_values();
            let uv = u.to_values();
            let dx = grid.dx();
            let cross: f64 = ev.iter().zip(&uv).map(|(e, v)| e * v).sum::<f64>() * dx;
            let cubic: f64 = ev.iter().zip(&uv).map(|(e, v)| e * v * v).sum::<f64>() * dx;
            let lu = quad(u, &|k| model.multiplier(k));
            let ee = quad(eta, &|_| 1.0);
            Ok(Conserved {
                mass: eta.coeffs()[0].re * period,
                mass_u: Some(u.coeffs()[0].re * period),
                momentum: cross,
                energy: 0.5 * (lu + ee + model.nonlinearity * eps * cubic),
            })
        }
    }
}
