//! Plain-text artifact formats: CSV series with a `# ` header line and
//! `key=value` manifests. Numbers are written with 17 significant digits so
//! files round-trip exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::analysis::{BreakdownReport, ComparisonPoint, FitPoint, SingularityFit};
use crate::error::{Error, Result};
use crate::evolve::Diagnostics;
use crate::models::State;
use crate::spectral::{Grid, SpectralField};
use crate::travel::BranchRow;

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: header line `# a,b,...` then one row per entry of `rows`.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = format!("# {}\n", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Field snapshot, `# x,u` or `# x,eta,u` for the system.
pub fn snapshot_csv(state: &State) -> String {
    let x = state.grid().x();
    let u = state.u.to_values();
    match &state.eta {
        Some(eta) => {
            let e = eta.to_values();
            csv(&["x", "eta", "u"], (0..x.len()).map(|i| [x[i], e[i], u[i]]))
        }
        None => csv(&["x", "u"], (0..x.len()).map(|i| [x[i], u[i]])),
    }
}

/// Moduli of the coefficients at nonnegative wavenumbers, `# k,abs_coeff`.
pub fn spectrum_csv(field: &SpectralField) -> String {
    let k = field.grid().k();
    let m = field.grid().nyquist_index();
    csv(&["k", "abs_coeff"], (0..m).map(|i| [k[i], field.coeffs()[i].norm()]))
}

pub fn diagnostics_csv(diag: &[Diagnostics]) -> String {
    csv(
        &["t", "linf", "l2", "dxl2", "mass", "momentum", "energy", "edrift", "floor"],
        diag.iter()
            .map(|d| [d.t, d.linf, d.l2, d.dx_l2, d.mass, d.momentum, d.energy, d.energy_drift, d.floor]),
    )
}

pub fn branch_csv(rows: &[BranchRow]) -> String {
    csv(
        &["c", "maxU", "mass", "energy", "residual", "N_modes"],
        rows.iter().map(|r| [r.c, r.max_u, r.mass, r.energy, r.residual, r.n_modes as f64]),
    )
}

pub fn fit_series_csv(series: &[FitPoint]) -> String {
    csv(&["t", "delta", "mu", "residual"], series.iter().map(|p| [p.t, p.delta, p.mu, p.residual]))
}

pub fn comparison_csv(series: &[ComparisonPoint]) -> String {
    csv(&["t", "hj_diff", "bound_eps2_t"], series.iter().map(|p| [p.t, p.hj_diff, p.bound]))
}

/// Ordered `key=value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn set_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, num(value))
    }

    pub fn set_opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.set_num(key, v),
            None => self.set(key, "none"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }
}

impl std::fmt::Display for Manifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn fit_manifest(fit: &SingularityFit) -> Manifest {
    let mut m = Manifest::new();
    m.set_num("delta", fit.delta)
        .set_num("mu", fit.mu)
        .set_num("amplitude", fit.amplitude)
        .set_num("window_min", fit.window.0)
        .set_num("window_max", fit.window.1)
        .set_num("rms_residual", fit.rms_residual)
        .set("modes", fit.modes)
        .set("reliable", fit.is_reliable());
    m
}

pub fn breakdown_manifest(rep: &BreakdownReport) -> Manifest {
    let mut m = Manifest::new();
    m.set_opt("critical_time", rep.critical_time)
        .set_opt("mu_at_critical", rep.mu_at_critical)
        .set("classification", rep.classification.as_str())
        .set_num("delta_tol", rep.delta_tol)
        .set("stop", rep.stop.as_str())
        .set_num("stop_time", rep.stop_time)
        .set("fits", rep.series.len());
    m
}

/// Parse a snapshot written by [`snapshot_csv`]. The grid is recovered
/// from the row count and the first abscissa `x_0 = -L pi`.
pub fn read_snapshot(text: &str) -> Result<State> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    let cols: Vec<&str> = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("snapshot header must start with '#'".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let system = match cols.as_slice() {
        ["x", "u"] => false,
        ["x", "eta", "u"] => true,
        _ => return Err(Error::Parse(format!("unknown snapshot header '{header}'"))),
    };
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::Parse(format!("row {}: expected {} columns", i + 1, cols.len())));
        }
        for (col, cell) in data.iter_mut().zip(cells) {
            col.push(
                cell.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number '{cell}'", i + 1)))?,
            );
        }
    }
    let n = data[0].len();
    let x0 = *data[0].first().ok_or_else(|| Error::Parse("snapshot has no rows".into()))?;
    let grid = Grid::new(n, -x0 / PI)?;
    let mismatch = data[0].iter().zip(grid.x()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if mismatch > 1e-9 * grid.period() {
        return Err(Error::Parse("snapshot abscissae are not a periodic grid x_j = -L pi + j dx".into()));
    }
    let u = SpectralField::from_values(&grid, &data[cols.len() - 1])?;
    Ok(if system {
        State::system(SpectralField::from_values(&grid, &data[1])?, u)
    } else {
        State::scalar(u)
    })
}

/// Residual history of a failed Newton solve, `# iteration,residual`.
pub fn residual_history_csv(history: &[f64]) -> String {
    let mut out = String::from("# iteration,residual\n");
    for (i, r) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", num(*r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let grid = Grid::new(64, 2.0).unwrap();
        let eta = SpectralField::from_fn(&grid, |x| (-x * x).exp());
        let u = SpectralField::from_fn(&grid, |x| x.sin() * 0.3);
        for state in [State::scalar(u.clone()), State::system(eta, u)] {
            let text = snapshot_csv(&state);
            let back = read_snapshot(&text).unwrap();
            assert_eq!(back.grid().n(), 64);
            assert!((back.grid().l() - 2.0).abs() < 1e-14);
            let d = back.u.sub(&state.u).unwrap().to_values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(d < 1e-14, "{d}");
            assert_eq!(back.eta.is_some(), state.eta.is_some());
        }
    }

    #[test]
    fn snapshot_header() {
        let grid = Grid::new(8, 1.0).unwrap();
        let text = snapshot_csv(&State::scalar(SpectralField::zeros(&grid)));
        assert!(text.starts_with("# x,u\n"));
        assert_eq!(text.lines().count(), 9);
        assert!(read_snapshot("# x,v\n0,1\n").is_err());
    }

    #[test]
    fn manifest_parse_and_overwrite() {
        let mut m = Manifest::new();
        m.set("a", 1).set("b", "two").set("a", 3);
        let text = m.to_string();
        assert_eq!(text, "a=3\nb=two\n");
        assert_eq!(Manifest::parse(&text).unwrap(), m);
    }
}
