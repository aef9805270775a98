use num_complex::Complex64;

use super::Grid;
use crate::error::{Error, Result};

/// A real periodic field stored through its Fourier coefficients.
///
/// Coefficients are taken relative to the physical coordinate `x`, so
/// `cos(x)` has coefficient `1/2` at `k = +-1`. The mean mode holds the
/// field average.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

/// `(-1)^m` for FFT index `j`; shifts the FFT origin from `x_0 = -L*pi` to `x = 0`.
#[inline]
fn origin_sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    /// Forward transform of physical values sampled on `grid.x()`.
    pub fn from_values(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Contract(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.n()
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward().process(&mut buf);
        let scale = 1.0 / grid.n() as f64;
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= scale * origin_sign(j);
        }
        Ok(Self { grid: grid.clone(), coeffs: buf })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.x().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, &values).expect("length matches grid")
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::Contract(format!(
                "coefficient array has length {}, grid has {} modes",
                coeffs.len(),
                grid.n()
            )));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Inverse transform including the imaginary residue.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        to_physical(&self.grid, &self.coeffs)
    }

    /// Physical values on `grid.x()`; the imaginary residue is dropped.
    pub fn to_values(&self) -> Vec<f64> {
        self.to_complex_values().into_iter().map(|z| z.re).collect()
    }

    /// Largest deviation from conjugate symmetry `c(-k) = conj(c(k))`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for j in 1..n / 2 {
            worst = worst.max((self.coeffs[j] - self.coeffs[n - j].conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Contract("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Largest modulus over all coefficients.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Moduli `|c(k)|` for `k = 0, 1/L, ..., (N/2 - 1)/L`.
    pub fn positive_spectrum(&self) -> Vec<f64> {
        self.coeffs[..self.coeffs.len() / 2].iter().map(|c| c.norm()).collect()
    }
}

pub(crate) fn to_physical(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| c * origin_sign(j))
        .collect();
    grid.inverse().process(&mut buf);
    buf
}

pub(crate) fn to_spectral(grid: &Grid, values: &mut [Complex64]) {
    grid.forward().process(values);
    let scale = 1.0 / grid.n() as f64;
    for (j, c) in values.iter_mut().enumerate() {
        *c *= scale * origin_sign(j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn constant_field_is_mean_mode() {
        let g = Grid::new(16, 1.0).unwrap();
        let f = SpectralField::from_fn(&g, |_| 1.0);
        assert!((f.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_coefficients() {
        let g = Grid::new(16, 1.0).unwrap();
        let f = SpectralField::from_fn(&g, f64::cos);
        for (j, c) in f.coeffs().iter().enumerate() {
            let k = g.k()[j];
            let expected = if k.abs() == 1.0 { 0.5 } else { 0.0 };
            assert!((c - Complex64::new(expected, 0.0)).norm() < 1e-15, "k={k} c={c}");
        }
    }

    #[test]
    fn gaussian_round_trip_and_parseval() {
        let g = Grid::new(1 << 10, 5.0).unwrap();
        let values: Vec<f64> = g.x().iter().map(|x| (-x * x).exp()).collect();
        let f = SpectralField::from_values(&g, &values).unwrap();
        assert!(rel_err(&f.to_values(), &values) < 1e-13);
        let phys: f64 = values.iter().map(|v| v * v).sum::<f64>() * g.dx();
        let spec: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.period();
        assert!((phys - spec).abs() / phys < 1e-13);
        assert!(f.symmetry_defect() < 1e-16);
        // closed form of the integral of exp(-2x^2)
        assert!((phys - (PI / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_contract_violation() {
        let g = Grid::new(8, 1.0).unwrap();
        assert!(matches!(
            SpectralField::from_values(&g, &[0.0; 7]),
            Err(Error::Contract(_))
        ));
    }
}
