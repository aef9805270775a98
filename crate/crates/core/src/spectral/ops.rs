use num_complex::Complex64;

use super::{SpectralField, SymbolSpec};

/// Multiply by `m(k) (ik)^order`. Odd phase symbols are applied as `i m(k)`
/// so that the result stays real.
///
/// The Nyquist coefficient of an odd-order operator is set to zero; its
/// derivative has no real representation on the grid.
pub fn apply_multiplier(field: &SpectralField, spec: &SymbolSpec, order: u32) -> SpectralField {
    let grid = field.grid();
    let nyq = grid.nyquist_index();
    let odd = (order % 2 == 1) ^ spec.is_odd();
    let coeffs = field
        .coeffs()
        .iter()
        .zip(grid.k())
        .enumerate()
        .map(|(j, (&c, &k))| {
            if odd && j == nyq {
                return Complex64::new(0.0, 0.0);
            }
            let mut factor = Complex64::new(spec.eval(k), 0.0);
            if spec.is_odd() {
                factor *= Complex64::i();
            }
            for _ in 0..order {
                factor *= Complex64::new(0.0, k);
            }
            c * factor
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs).expect("same grid")
}

/// Zero every coefficient whose modulus is below `threshold`.
pub fn krasny_filter(field: &SpectralField, threshold: f64) -> SpectralField {
    let mut out = field.clone();
    krasny_in_place(out.coeffs_mut(), threshold);
    out
}

pub(crate) fn krasny_in_place(coeffs: &mut [Complex64], threshold: f64) {
    for c in coeffs.iter_mut() {
        if c.norm() < threshold {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Shift the field to the right by `x0`: `c(k) -> exp(-i k x0) c(k)`.
pub fn translate_field(field: &SpectralField, x0: f64) -> SpectralField {
    let grid = field.grid();
    let coeffs = field
        .coeffs()
        .iter()
        .zip(grid.k())
        .map(|(&c, &k)| c * Complex64::from_polar(1.0, -k * x0))
        .collect();
    let mut out = SpectralField::from_coeffs(grid, coeffs).expect("same grid");
    // keep the Nyquist coefficient real
    let nyq = grid.nyquist_index();
    let c = field.coeffs()[nyq];
    out.coeffs_mut()[nyq] = c * (grid.k()[nyq] * x0).cos();
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    /// Integral of the field over one period.
    pub mass: f64,
    pub l2: f64,
    pub linf: f64,
    /// Spectral `H^j` norm with weight `(1 + k^2)^{j/2}`.
    pub hj: f64,
    pub dx_l2: f64,
    /// Integral of the cube of the field.
    pub cubic: f64,
}

pub fn norms(field: &SpectralField, j: u32) -> Norms {
    let grid = field.grid();
    let period = grid.period();
    let nyq = grid.nyquist_index();
    let mut l2 = 0.0;
    let mut hj = 0.0;
    let mut dx = 0.0;
    for (i, (c, &k)) in field.coeffs().iter().zip(grid.k()).enumerate() {
        let p = c.norm_sqr();
        l2 += p;
        hj += (1.0 + k * k).powi(j as i32) * p;
        if i != nyq {
            dx += k * k * p;
        }
    }
    let values = field.to_values();
    let linf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cubic = values.iter().map(|v| v * v * v).sum::<f64>() * grid.dx();
    Norms {
        mass: field.coeffs()[0].re * period,
        l2: (l2 * period).sqrt(),
        linf,
        hj: (hj * period).sqrt(),
        dx_l2: (dx * period).sqrt(),
        cubic,
    }
}
