//! Periodic grids, FFT-backed spectral fields, Fourier multipliers and the
//! quadratures shared by every model.
//!
//! Coefficients use the unitary-mean convention: `coeff(0)` is the average
//! of the field over the period, so `coeff(k) = (1/N) sum_j u_j e^{-i k x_j}`
//! up to the phase fixed by the grid origin.

pub(crate) mod field;
mod grid;
mod ops;
mod symbol;

pub use field::SpectralField;
pub use grid::Grid;
pub use ops::{apply_multiplier, krasny_filter, norms, translate_field, Norms};
pub(crate) use ops::krasny_in_place;
pub use symbol::{tanh_ratio, whitham_remainder, SymbolKind, SymbolSpec};
