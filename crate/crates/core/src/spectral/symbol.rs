/// Fourier symbols used by the models.
///
/// The multiplier kinds (`Whitham`, `WhithamSt`, `BoussinesqT2`,
/// `BoussinesqP`, `Identity`) are even in `k` and equal 1 at `k = 0`.
/// `KdvCubic` and `AiryPhase` are the odd linear phase `k - (eps/6) k^3`
/// of the Airy group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Whitham,
    WhithamSt,
    BoussinesqT2,
    BoussinesqP,
    KdvCubic,
    AiryPhase,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    pub eps: f64,
    pub beta: f64,
}

impl SymbolSpec {
    pub fn new(kind: SymbolKind, eps: f64, beta: f64) -> Self {
        Self { kind, eps, beta }
    }

    pub fn whitham(eps: f64) -> Self {
        Self::new(SymbolKind::Whitham, eps, 0.0)
    }

    pub fn identity() -> Self {
        Self::new(SymbolKind::Identity, 1.0, 0.0)
    }

    pub fn is_odd(&self) -> bool {
        matches!(self.kind, SymbolKind::KdvCubic | SymbolKind::AiryPhase)
    }

    pub fn eval(&self, k: f64) -> f64 {
        let s = self.eps.sqrt() * k.abs();
        match self.kind {
            SymbolKind::Whitham => tanh_ratio(s).sqrt(),
            SymbolKind::WhithamSt => ((1.0 + self.beta * self.eps * k * k) * tanh_ratio(s)).sqrt(),
            SymbolKind::BoussinesqT2 => tanh_ratio(s),
            SymbolKind::BoussinesqP => (1.0 + self.beta * self.eps * k * k) * tanh_ratio(s),
            SymbolKind::KdvCubic | SymbolKind::AiryPhase => k - self.eps / 6.0 * k * k * k,
            SymbolKind::Identity => 1.0,
        }
    }
}

/// `tanh(s)/s` with its limit 1 at the origin.
#[inline]
pub fn tanh_ratio(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s.tanh() / s
    }
}

// Taylor coefficients of sqrt(tanh(s)/s) in powers of s^2, starting at s^4.
const REMAINDER_SERIES: [f64; 10] = [
    19.0 / 360.0,
    -55.0 / 3024.0,
    11813.0 / 1814400.0,
    -2117.0 / 887040.0,
    64604977.0 / 72648576000.0,
    -263101079.0 / 784604620800.0,
    1768132943.0 / 13857951744000.0,
    -9606907803497.0 / 196503623737344000.0,
    158812278992229461.0 / 8430005458332057600000.0,
    -9112944418860287.0 / 1249560422395084800000.0,
];

/// `sqrt(tanh(s)/s) - (1 - s^2/6)`, evaluated without cancellation for small `s`.
pub fn whitham_remainder(s: f64) -> f64 {
    let s = s.abs();
    if s < 0.25 {
        let s2 = s * s;
        let mut acc = 0.0;
        for c in REMAINDER_SERIES.iter().rev() {
            acc = acc * s2 + c;
        }
        acc * s2 * s2
    } else {
        tanh_ratio(s).sqrt() - 1.0 + s * s / 6.0
    }
}
