//! Singularity tracking from Fourier asymptotics, the Whitham-KdV
//! comparison harness, the dispersion-expansion check, and linear
//! stability maps of the Boussinesq system.

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolveOpts, StopCause, Trajectory};
use crate::models::{linear_group, ModelSpec, State};
use crate::spectral::{norms, tanh_ratio, whitham_remainder, SpectralField};

/// Fewest modes accepted by a spectral fit.
pub const MIN_FIT_MODES: usize = 16;
/// Absolute noise floor for coefficient moduli when no filter is active.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Fits with an rms log-residual above this are not of the algebraic-exponential form.
pub const FIT_REPORT_THRESHOLD: f64 = 0.01;
/// Modes per block when fitting the upper envelope of an oscillating tail.
pub const ENVELOPE_BLOCK: usize = 8;

/// `|u(k)| ~ A k^{-(mu+1)} exp(-delta k)` fitted on positive wavenumbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularityFit {
    pub delta: f64,
    pub mu: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub modes: usize,
}

impl SingularityFit {
    pub fn is_reliable(&self) -> bool {
        self.rms_residual <= FIT_REPORT_THRESHOLD
    }
}

/// Least squares for `y ~ X b` with three columns, by modified Gram-Schmidt.
fn lstsq3(cols: [Vec<f64>; 3], y: &[f64]) -> Option<[f64; 3]> {
    let m = y.len();
    let mut q = cols;
    let mut r = [[0.0f64; 3]; 3];
    for j in 0..3 {
        for i in 0..j {
            let d: f64 = (0..m).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = d;
            for t in 0..m {
                q[j][t] -= d * q[i][t];
            }
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm > 0.0) {
            return None;
        }
        r[j][j] = nrm;
        for v in q[j].iter_mut() {
            *v /= nrm;
        }
    }
    let mut qty = [0.0f64; 3];
    for j in 0..3 {
        qty[j] = (0..m).map(|t| q[j][t] * y[t]).sum();
    }
    let mut b = [0.0f64; 3];
    for j in (0..3).rev() {
        let s: f64 = (j + 1..3).map(|i| r[j][i] * b[i]).sum();
        b[j] = (qty[j] - s) / r[j][j];
    }
    Some(b)
}

/// Fit the tail form to moduli `amp` sampled at positive wavenumbers `k`.
///
/// `floor` is the filter or noise floor; modes within a factor 10 of it are
/// excluded. Without a window the fit uses `[0.1 kmax, min(k*, kmax / 2)]`,
/// `k*` being the largest wavenumber whose modulus is above ten times the
/// floor. The upper half of the spectrum is left out because aliasing of
/// the quadratic terms pollutes it first as a singularity approaches; a
/// default window spanning less than a factor 2 in `k` is rejected.
///
/// Singularities off `x = 0` come in mirror pairs for even data and make
/// `|u(k)|` oscillate, so the fit runs on block maxima (blocks of
/// [`ENVELOPE_BLOCK`] modes, fewer if that would leave under
/// [`MIN_FIT_MODES`] points).
pub fn fit_modulus(k: &[f64], amp: &[f64], window: Option<(f64, f64)>, floor: f64) -> Result<SingularityFit> {
    if k.len() != amp.len() {
        return Err(Error::Contract("wavenumber and modulus arrays differ in length".into()));
    }
    let cut = 10.0 * floor.max(NOISE_FLOOR);
    let (lo, hi) = match window {
        Some((a, b)) => {
            if !(a < b) {
                return Err(Error::Contract(format!("empty fit window ({a}, {b})")));
            }
            (a, b)
        }
        None => {
            let kmax = k.iter().cloned().fold(0.0, f64::max);
            let kstar = k
                .iter()
                .zip(amp)
                .filter(|(_, a)| **a > cut)
                .map(|(k, _)| *k)
                .fold(0.0, f64::max);
            let (lo, hi) = (0.1 * kmax, kstar.min(0.5 * kmax));
            if hi < 2.0 * lo {
                return Err(Error::InsufficientResolution(format!(
                    "spectrum above the floor only up to k = {kstar:.4}"
                )));
            }
            (lo, hi)
        }
    };
    let raw: Vec<(f64, f64)> = k
        .iter()
        .zip(amp)
        .filter(|(k, a)| **k > 0.0 && **k >= lo && **k <= hi && **a > cut && a.is_finite())
        .map(|(k, a)| (*k, *a))
        .collect();
    if raw.len() < MIN_FIT_MODES {
        return Err(Error::InsufficientResolution(format!(
            "{} usable modes in [{lo:.4}, {hi:.4}], need {MIN_FIT_MODES}",
            raw.len()
        )));
    }
    let block = ENVELOPE_BLOCK.min(raw.len() / MIN_FIT_MODES).max(1);
    let pts: Vec<(f64, f64)> = raw
        .chunks_exact(block)
        .map(|c| {
            let top = c.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty block");
            (top.0, top.1.ln())
        })
        .collect();
    if pts.len() < MIN_FIT_MODES {
        return Err(Error::InsufficientResolution(format!(
            "{} usable modes in [{lo:.4}, {hi:.4}], need {MIN_FIT_MODES}",
            pts.len()
        )));
    }
    // scaled columns keep the system well conditioned
    let kscale = hi;
    let ones = vec![1.0; pts.len()];
    let logk: Vec<f64> = pts.iter().map(|p| (p.0 / kscale).ln()).collect();
    let kk: Vec<f64> = pts.iter().map(|p| p.0 / kscale).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let b = lstsq3([ones, logk.clone(), kk.clone()], &y)
        .ok_or_else(|| Error::InsufficientResolution("degenerate fit window".into()))?;
    let rss: f64 = (0..y.len())
        .map(|t| {
            let r = y[t] - (b[0] + b[1] * logk[t] + b[2] * kk[t]);
            r * r
        })
        .sum();
    let slope_log = b[1];
    let delta = -b[2] / kscale;
    Ok(SingularityFit {
        delta,
        mu: -slope_log - 1.0,
        amplitude: (b[0] - slope_log * kscale.ln()).exp(),
        window: (lo, hi),
        rms_residual: (rss / y.len() as f64).sqrt(),
        modes: y.len(),
    })
}

/// Fit the spectrum of `field` (noise floor [`NOISE_FLOOR`]).
pub fn fit_spectrum(field: &SpectralField, window: Option<(f64, f64)>) -> Result<SingularityFit> {
    fit_spectrum_with_floor(field, window, 0.0)
}

pub fn fit_spectrum_with_floor(field: &SpectralField, window: Option<(f64, f64)>, floor: f64) -> Result<SingularityFit> {
    let amp = field.positive_spectrum();
    let k: Vec<f64> = field.grid().k()[..amp.len()].to_vec();
    fit_modulus(&k, &amp, window, floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Cusp,
    LinfBlowup,
    ResolutionLoss,
    None,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Cusp => "cusp",
            Classification::LinfBlowup => "linf-blowup",
            Classification::ResolutionLoss => "resolution-loss",
            Classification::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitPoint {
    pub t: f64,
    pub delta: f64,
    pub mu: f64,
    pub residual: f64,
    /// Component the point was taken from (0 for scalar models; 0 = eta, 1 = u for systems).
    pub component: usize,
}

#[derive(Clone, Debug)]
pub struct BreakdownReport {
    pub critical_time: Option<f64>,
    pub mu_at_critical: Option<f64>,
    pub classification: Classification,
    pub delta_tol: f64,
    pub series: Vec<FitPoint>,
    pub stop: StopCause,
    pub stop_time: f64,
}

/// Fit every recorded spectrum and locate the first time the singularity
/// distance drops below `delta_tol` (default: one grid spacing). For
/// systems the component with the smaller distance is used at each time.
///
/// Only fits with rms residual at most [`FIT_REPORT_THRESHOLD`] take part in
/// the detection. If the run lost resolution before any such crossing, the
/// stop time is reported with the exponent of the closest approach.
pub fn detect_breakdown(traj: &Trajectory, delta_tol: Option<f64>) -> Result<BreakdownReport> {
    if traj.spectra.len() < 3 {
        return Err(Error::Contract(format!(
            "breakdown detection needs at least 3 recorded spectra, got {}",
            traj.spectra.len()
        )));
    }
    let grid = &traj.grid;
    let tol = delta_tol.unwrap_or(grid.dx());
    let m = grid.nyquist_index();
    let k: Vec<f64> = grid.k()[..m].to_vec();
    let floor = traj.opts.krasny;
    let mut series = Vec::new();
    for rec in &traj.spectra {
        let best = rec
            .components
            .iter()
            .enumerate()
            .filter_map(|(i, amp)| fit_modulus(&k, amp, None, floor).ok().map(|f| (i, f)))
            .min_by(|a, b| a.1.delta.total_cmp(&b.1.delta));
        if let Some((component, f)) = best {
            series.push(FitPoint { t: rec.t, delta: f.delta, mu: f.mu, residual: f.rms_residual, component });
        }
    }
    let reliable = || series.iter().filter(|p| p.residual <= FIT_REPORT_THRESHOLD);
    let hit = reliable().find(|p| p.delta < tol);
    let (critical_time, mu_at_critical, classification) = match hit {
        Some(p) => (
            Some(p.t),
            Some(p.mu),
            if p.mu > 0.0 { Classification::Cusp } else { Classification::LinfBlowup },
        ),
        None if traj.stop.is_breakdown() => {
            let closest = reliable().min_by(|a, b| a.delta.total_cmp(&b.delta));
            (Some(traj.stop_time), closest.map(|p| p.mu), Classification::ResolutionLoss)
        }
        None => (None, None, Classification::None),
    };
    Ok(BreakdownReport {
        critical_time,
        mu_at_critical,
        classification,
        delta_tol: tol,
        series,
        stop: traj.stop,
        stop_time: traj.stop_time,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonPoint {
    pub t: f64,
    pub hj_diff: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub series: Vec<ComparisonPoint>,
    /// `max ||u - v||_{H^j} / (eps^2 t)` over recorded times past `10 dt`.
    pub m_j: f64,
    /// Set when either evolution stopped before the horizon.
    pub partial: bool,
}

/// Evolve Whitham and KdV from `phi` to `t = horizon / eps` with `nt`
/// steps and compare them in `H^j`. Both run in the frame moving at unit
/// speed, which leaves the difference unchanged.
pub fn compare_whitham_kdv(
    phi: &SpectralField,
    eps: f64,
    j: u32,
    horizon: f64,
    nt: usize,
    record_every: usize,
) -> Result<Comparison> {
    compare_models(
        &ModelSpec::whitham(eps).with_speed(1.0),
        &ModelSpec::kdv(eps).with_speed(1.0),
        phi,
        j,
        horizon / eps,
        nt,
        record_every,
    )
}

/// Same harness for an arbitrary pair of scalar models.
pub fn compare_models(
    a: &ModelSpec,
    b: &ModelSpec,
    phi: &SpectralField,
    j: u32,
    t_final: f64,
    nt: usize,
    record_every: usize,
) -> Result<Comparison> {
    if j > 2 {
        return Err(Error::Unsupported(format!("H^{j} comparison (j must be 0, 1 or 2)")));
    }
    let mut opts = EvolveOpts::new(t_final, nt);
    opts.record_every = record_every;
    opts.snapshot_every = 1;
    let init = State::scalar(phi.clone());
    let ta = evolve(a, &init, &opts)?;
    let tb = evolve(b, &init, &opts)?;
    let eps2 = a.eps * a.eps;
    let dt = opts.dt();
    let mut series = Vec::new();
    let mut m_j = 0.0f64;
    for (sa, sb) in ta.snapshots.iter().zip(&tb.snapshots) {
        if (sa.time - sb.time).abs() > 0.5 * dt {
            break;
        }
        let d = norms(&sa.u.sub(&sb.u)?, j).hj;
        let bound = eps2 * sa.time;
        if sa.time > 10.0 * dt {
            m_j = m_j.max(d / bound);
        }
        series.push(ComparisonPoint { t: sa.time, hj_diff: d, bound });
    }
    Ok(Comparison { series, m_j, partial: ta.stop.is_breakdown() || tb.stop.is_breakdown() })
}

/// Linear analogue: exact Whitham and Airy groups compared in `H^j` at the
/// given times; returns `(t, ||difference||, eps^2 (1 + t))`.
pub fn compare_linear_groups(phi: &SpectralField, eps: f64, j: u32, times: &[f64]) -> Result<Vec<ComparisonPoint>> {
    let w = ModelSpec::whitham(eps).linear();
    let k = ModelSpec::kdv(eps).linear();
    times
        .iter()
        .map(|&t| {
            let d = linear_group(&w, phi, t)?.sub(&linear_group(&k, phi, t)?)?;
            Ok(ComparisonPoint { t, hj_diff: norms(&d, j).hj, bound: eps * eps * (1.0 + t) })
        })
        .collect()
}

/// `max |l(sqrt(eps) k) k - (k - eps k^3 / 6)| / (eps^2 |k|^5)` over `ks`.
pub fn symbol_expansion_check(eps: f64, ks: &[f64]) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Contract(format!("eps = {eps} must be positive")));
    }
    let mut worst = 0.0f64;
    for &k in ks {
        let s = eps.sqrt() * k.abs();
        if k == 0.0 || s > 1.0 || !s.is_finite() {
            return Err(Error::Contract(format!("sample k = {k} outside 0 < sqrt(eps)|k| <= 1")));
        }
        // |k| r(s) / (eps^2 k^5) = r(s) / s^4, free of cancellation
        worst = worst.max(whitham_remainder(s).abs() / s.powi(4));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeStability {
    pub k: f64,
    /// `(1 + beta eps k^2) tanh(sqrt(eps) k) / (sqrt(eps) k) - c eps`; negative means unstable.
    pub discriminant: f64,
    pub unstable: bool,
}

#[derive(Clone, Debug)]
pub struct StabilityMap {
    pub c: f64,
    pub eps: f64,
    pub beta: f64,
    pub modes: Vec<ModeStability>,
    /// Scaled boundary `x_{c,eps}` for `beta = 0`: modes with `sqrt(eps)|k| >= x` are unstable.
    pub boundary: Option<f64>,
    /// Unstable wavenumber interval `[k_lo, k_hi]` for `beta > 0`, if any.
    pub unstable_interval: Option<(f64, f64)>,
}

fn discriminant_s(s: f64, beta: f64, ce: f64) -> f64 {
    (1.0 + beta * s * s) * tanh_ratio(s) - ce
}

/// Bisection for a sign change of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Unique positive root of `tanh x / x = ce`; 0 when `ce >= 1`.
pub fn instability_threshold(ce: f64) -> Result<f64> {
    if !(ce > 0.0) {
        return Err(Error::Contract(format!("c eps = {ce} must be positive")));
    }
    if ce >= 1.0 {
        return Ok(0.0);
    }
    // tanh x / x < 1/x, so the root lies below 1/ce
    let hi = 1.0 / ce + 1.0;
    Ok(bisect(|x| tanh_ratio(x) - ce, 0.0, hi, 1e-14))
}

/// Per-mode linear stability of the Boussinesq system around the state
/// with velocity `c`.
pub fn stability_map(c: f64, eps: f64, beta: f64, ks: &[f64]) -> Result<StabilityMap> {
    if !(c > 0.0 && eps > 0.0 && beta >= 0.0) {
        return Err(Error::Contract(format!("need c > 0, eps > 0, beta >= 0 (got {c}, {eps}, {beta})")));
    }
    let ce = c * eps;
    let se = eps.sqrt();
    let modes = ks
        .iter()
        .map(|&k| {
            let d = discriminant_s(se * k.abs(), beta, ce);
            ModeStability { k, discriminant: d, unstable: d < 0.0 }
        })
        .collect();
    let (boundary, unstable_interval) = if beta == 0.0 {
        (Some(instability_threshold(ce)?), None)
    } else {
        (None, unstable_band(beta, ce).map(|(a, b)| (a / se, b / se)))
    };
    Ok(StabilityMap { c, eps, beta, modes, boundary, unstable_interval })
}

/// Interval in `s = sqrt(eps) k` where `(1 + beta s^2) tanh s / s < ce`.
fn unstable_band(beta: f64, ce: f64) -> Option<(f64, f64)> {
    let g = |s: f64| discriminant_s(s, beta, ce);
    // g grows like beta s; beyond s_max it is positive
    let s_max = (ce + 1.0) / (beta * 0.5) + 2.0;
    let samples = 20_000;
    let h = s_max / samples as f64;
    let (mut smin, mut gmin) = (0.0, g(0.0));
    for i in 1..=samples {
        let s = i as f64 * h;
        let v = g(s);
        if v < gmin {
            gmin = v;
            smin = s;
        }
    }
    if gmin >= 0.0 {
        return None;
    }
    let lo = if g(0.0) < 0.0 { 0.0 } else { bisect(g, 0.0, smin, 1e-14) };
    let hi = bisect(g, smin, s_max, 1e-14);
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    fn synthetic(grid: &Grid, f: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = grid
            .k()
            .iter()
            .map(|&k| if k == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(f(k.abs()), 0.0) })
            .collect();
        SpectralField::from_coeffs(grid, coeffs).unwrap()
    }

    #[test]
    fn recovers_synthetic_tail() {
        let g = Grid::new(256, 1.0).unwrap();
        let f = synthetic(&g, |k| k.powf(-1.5) * (-0.3 * k).exp());
        let fit = fit_spectrum(&f, None).unwrap();
        assert!((fit.mu - 0.5).abs() < 1e-3 * 0.5, "{fit:?}");
        assert!((fit.delta - 0.3).abs() < 1e-3 * 0.3);
        assert!(fit.rms_residual < 1e-10);
        assert!((fit.amplitude - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sech_squared_pole_distance() {
        // sech^2(x / w) has poles at x = +-i pi w / 2
        let w = 0.5;
        let g = Grid::new(1024, 4.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (1.0 / (x / w).cosh()).powi(2));
        let fit = fit_spectrum(&f, None).unwrap();
        let delta = std::f64::consts::PI * w / 2.0;
        assert!((fit.delta - delta).abs() < 0.02 * delta, "{fit:?}");
        assert!((fit.mu + 2.0).abs() < 0.1);
    }

    #[test]
    fn gaussian_is_flagged() {
        let g = Grid::new(256, 5.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (-x * x).exp());
        let fit = fit_spectrum(&f, None).unwrap();
        assert!(!fit.is_reliable(), "{fit:?}");
    }

    #[test]
    fn too_few_modes() {
        let g = Grid::new(64, 1.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| x.cos());
        assert!(matches!(fit_spectrum(&f, None), Err(Error::InsufficientResolution(_))));
    }

    #[test]
    fn expansion_ratio_values() {
        // high-precision reference values of r(s) / s^4
        let r1 = 0.039_360_287_564_496_358;
        assert!((symbol_expansion_check(1.0, &[1.0]).unwrap() - r1).abs() < 1e-13);
        assert!((symbol_expansion_check(0.01, &[10.0]).unwrap() - r1).abs() < 1e-12);
        let r05 = 0.048_603_622_626_569_324;
        assert!((symbol_expansion_check(0.25, &[1.0]).unwrap() - r05).abs() < 1e-13);
        let small = symbol_expansion_check(1.0, &[1e-3]).unwrap();
        assert!((small - 19.0 / 360.0).abs() < 1e-6);
        assert!(symbol_expansion_check(1.0, &[1.5]).is_err());
        assert!(symbol_expansion_check(1.0, &[0.0]).is_err());
    }

    #[test]
    fn threshold_roots() {
        let x = instability_threshold(0.5).unwrap();
        assert!((x - 1.915_008_048_154_537_5).abs() < 1e-12);
        assert!((instability_threshold(0.9).unwrap() - 0.583_810_569_620_009_7).abs() < 1e-12);
        assert!((instability_threshold(0.1).unwrap() - 9.999_999_958_776_924).abs() < 1e-11);
        assert_eq!(instability_threshold(1.0).unwrap(), 0.0);
    }

    #[test]
    fn all_modes_unstable_for_large_c_eps() {
        let ks: Vec<f64> = (1..50).map(|i| i as f64 * 0.5).collect();
        let m = stability_map(2.0, 0.6, 0.0, &ks).unwrap();
        assert!(m.modes.iter().all(|m| m.unstable));
        assert_eq!(m.boundary, Some(0.0));
    }

    #[test]
    fn surface_tension_bounds_unstable_band() {
        let ks: Vec<f64> = (1..2000).map(|i| i as f64 * 0.1).collect();
        let m = stability_map(0.9, 0.5, 1.0, &ks).unwrap();
        let unstable: Vec<_> = m.modes.iter().filter(|m| m.unstable).collect();
        assert!(unstable.iter().all(|m| m.k < 10.0));
        assert!(m.modes.last().unwrap().discriminant > 0.0);
        // beta = 1 raises the dispersion above 1 for all s, so c eps < 1 is stable
        assert!(m.unstable_interval.is_none());
        let hot = stability_map(3.0, 0.5, 1.0, &ks).unwrap();
        let (lo, hi) = hot.unstable_interval.unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi.is_finite() && hi > 0.0);
        for md in &hot.modes {
            assert_eq!(md.unstable, md.k <= hi, "k = {}", md.k);
        }
    }
}
