//! Initial-data expressions:
//! `gaussian(A, w)`, `sine-gaussian(A, m)`, `soliton(c)`, `sum(e, e, ...)`,
//! `scale(s, e)`, `shift(x0, e)` and plain constants.

use whitham_core::spectral::{translate_field, Grid, SpectralField};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// `A exp(-(x/w)^2)`
    Gaussian { a: f64, w: f64 },
    /// `A sin(m x) exp(-x^2)`
    SineGaussian { a: f64, m: f64 },
    Soliton { c: f64 },
    Sum(Vec<Expr>),
    Scale(f64, Box<Expr>),
    Shift(f64, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Open,
    Close,
    Comma,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let start = i;
        match ch {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => {
                out.push((start, Tok::Open));
                i += 1;
            }
            ')' => {
                out.push((start, Tok::Close));
                i += 1;
            }
            ',' => {
                out.push((start, Tok::Comma));
                i += 1;
            }
            c if c.is_ascii_alphabetic() => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '-' || chars[i] == '_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(chars[start..i].iter().collect())));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| format!("column {}: bad number '{text}'", start + 1))?;
                out.push((start, Tok::Num(v)));
            }
            other => return Err(format!("column {}: unexpected character '{other}'", start + 1)),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.len) + 1
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), String> {
        let col = self.col();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(format!("column {col}: expected {what}")),
        }
    }

    fn number(&mut self) -> Result<f64, String> {
        let col = self.col();
        match self.next() {
            Some(Tok::Num(v)) => Ok(v),
            _ => Err(format!("column {col}: expected a number")),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let col = self.col();
        let name = match self.next() {
            Some(Tok::Num(v)) => return Ok(Expr::Const(v)),
            Some(Tok::Ident(name)) => name,
            _ => return Err(format!("column {col}: expected an expression")),
        };
        self.expect(Tok::Open, "'('")?;
        let e = match name.as_str() {
            "gaussian" => {
                let a = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let wcol = self.col();
                let w = self.number()?;
                if !(w > 0.0) {
                    return Err(format!("column {wcol}: gaussian width must be positive"));
                }
                Expr::Gaussian { a, w }
            }
            "sine-gaussian" => {
                let a = self.number()?;
                self.expect(Tok::Comma, "','")?;
                Expr::SineGaussian { a, m: self.number()? }
            }
            "soliton" => Expr::Soliton { c: self.number()? },
            "sum" => {
                let mut terms = vec![self.expr()?];
                while self.toks.get(self.pos).map(|t| &t.1) == Some(&Tok::Comma) {
                    self.pos += 1;
                    terms.push(self.expr()?);
                }
                Expr::Sum(terms)
            }
            "scale" | "shift" => {
                let v = self.number()?;
                self.expect(Tok::Comma, "','")?;
                let inner = Box::new(self.expr()?);
                if name == "scale" {
                    Expr::Scale(v, inner)
                } else {
                    Expr::Shift(v, inner)
                }
            }
            other => {
                return Err(format!(
                    "column {col}: unknown function '{other}' (gaussian, sine-gaussian, soliton, sum, scale, shift)"
                ))
            }
        };
        self.expect(Tok::Close, "')'")?;
        Ok(e)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, String> {
        let mut p = Parser { toks: lex(src)?, pos: 0, len: src.chars().count() };
        let e = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(format!("column {}: trailing input", p.col()));
        }
        Ok(e)
    }

    /// Speeds of all solitons referenced, in order of appearance.
    pub fn soliton_speeds(&self) -> Vec<f64> {
        match self {
            Expr::Soliton { c } => vec![*c],
            Expr::Sum(terms) => terms.iter().flat_map(Expr::soliton_speeds).collect(),
            Expr::Scale(_, e) | Expr::Shift(_, e) => e.soliton_speeds(),
            _ => Vec::new(),
        }
    }

    /// Sample on `grid`; `soliton(c)` profiles come from `soliton`.
    pub fn eval<E>(
        &self,
        grid: &Grid,
        soliton: &mut dyn FnMut(f64) -> Result<SpectralField, E>,
    ) -> Result<SpectralField, E> {
        Ok(match self {
            Expr::Const(v) => SpectralField::from_fn(grid, |_| *v),
            Expr::Gaussian { a, w } => SpectralField::from_fn(grid, |x| a * (-(x / w) * (x / w)).exp()),
            Expr::SineGaussian { a, m } => SpectralField::from_fn(grid, |x| a * (m * x).sin() * (-x * x).exp()),
            Expr::Soliton { c } => soliton(*c)?,
            Expr::Sum(terms) => {
                let mut acc = SpectralField::zeros(grid);
                for t in terms {
                    acc = acc.add(&t.eval(grid, soliton)?).expect("same grid");
                }
                acc
            }
            Expr::Scale(s, e) => e.eval(grid, soliton)?.scaled(*s),
            Expr::Shift(x0, e) => translate_field(&e.eval(grid, soliton)?, *x0),
        })
    }
}
