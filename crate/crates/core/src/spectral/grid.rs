use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L*pi, L*pi)` with `N` collocation points.
///
/// Cloning is cheap; the FFT plans and coordinate arrays are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    l: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size N={n} must be a power of two and at least 4"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Config(format!("domain scale L={l} must be positive")));
        }
        let x = (0..n)
            .map(|j| -l * PI + 2.0 * PI * l * j as f64 / n as f64)
            .collect();
        let k = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m / l
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                l,
                x,
                k,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Domain scale: the period is `2*pi*L`.
    pub fn l(&self) -> f64 {
        self.inner.l
    }

    pub fn x(&self) -> &[f64] {
        &self.inner.x
    }

    /// Wavenumbers in standard FFT ordering.
    pub fn k(&self) -> &[f64] {
        &self.inner.k
    }

    pub fn period(&self) -> f64 {
        2.0 * PI * self.inner.l
    }

    pub fn dx(&self) -> f64 {
        self.period() / self.inner.n as f64
    }

    /// Largest resolved |k|, attained by the Nyquist mode.
    pub fn kmax(&self) -> f64 {
        self.inner.n as f64 / (2.0 * self.inner.l)
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    pub(crate) fn forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.forward
    }

    pub(crate) fn inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.inverse
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.l == other.inner.l)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("l", &self.inner.l)
            .finish()
    }
}
