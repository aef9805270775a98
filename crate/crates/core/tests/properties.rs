use num_complex::Complex64;
use proptest::prelude::*;
use whitham_core::analysis::fit_modulus;
use whitham_core::models::{conserved, linear_group, rhs, Family, ModelSpec, State};
use whitham_core::spectral::{krasny_filter, norms, translate_field, Grid, SpectralField, SymbolKind, SymbolSpec};

const N: usize = 64;

/// A few low Fourier modes plus a periodic bump, real and smooth.
fn smooth_field() -> impl Strategy<Value = (f64, Vec<(f64, f64)>, f64)> {
    (0.5f64..3.0, prop::collection::vec((-1.0f64..1.0, 0.0f64..6.3), 1..6), -1.0f64..1.0)
}

fn build(l: f64, modes: &[(f64, f64)], bump: f64) -> SpectralField {
    let grid = Grid::new(N, l).unwrap();
    SpectralField::from_fn(&grid, |x| {
        let mut v = bump * ((x / l).cos() - 1.0).exp();
        for (m, (a, ph)) in modes.iter().enumerate() {
            v += a * ((m + 1) as f64 * x / l + ph).cos();
        }
        v
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn conjugate_defect(c: &[Complex64]) -> f64 {
    let n = c.len();
    (1..n / 2).map(|j| (c[j] - c[n - j].conj()).norm()).fold(c[0].im.abs(), f64::max)
}

fn model(family: Family, eps: f64, beta: f64, c: f64) -> ModelSpec {
    ModelSpec::new(family, eps).with_beta(beta).with_speed(c)
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Whitham), Just(Family::Kdv), Just(Family::Boussinesq)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip((l, modes, bump) in smooth_field()) {
        let f = build(l, &modes, bump);
        let v = f.to_values();
        let back = SpectralField::from_values(f.grid(), &v).unwrap();
        let d: Vec<f64> = back.to_values().iter().zip(&v).map(|(a, b)| a - b).collect();
        prop_assert!(max_abs(&d) <= 1e-13 * (1.0 + max_abs(&v)));
        prop_assert!(f.symmetry_defect() <= 1e-14 * (1.0 + f.max_coeff()));
    }

    #[test]
    fn parseval((l, modes, bump) in smooth_field()) {
        let f = build(l, &modes, bump);
        let dx = f.grid().dx();
        let direct: f64 = f.to_values().iter().map(|v| v * v).sum::<f64>() * dx;
        let n = norms(&f, 0);
        prop_assert!((n.l2 * n.l2 - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!((n.hj - n.l2).abs() <= 1e-12 * (1.0 + n.l2));
    }

    #[test]
    fn translation_keeps_norms((l, modes, bump) in smooth_field(), x0 in -10.0f64..10.0) {
        let f = build(l, &modes, bump);
        let a = norms(&f, 1);
        let b = norms(&translate_field(&f, x0), 1);
        for (p, q) in [(a.mass, b.mass), (a.l2, b.l2), (a.hj, b.hj), (a.dx_l2, b.dx_l2)] {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn krasny_is_idempotent((l, modes, bump) in smooth_field(), t in 1e-6f64..1e-1) {
        let f = build(l, &modes, bump);
        let once = krasny_filter(&f, t);
        let twice = krasny_filter(&once, t);
        prop_assert_eq!(once.coeffs(), twice.coeffs());
        prop_assert!(once.coeffs().iter().all(|c| *c == Complex64::new(0.0, 0.0) || c.norm() >= t));
    }

    #[test]
    fn multipliers_are_even(k in 0.0f64..500.0, eps in 1e-3f64..2.0, beta in 0.0f64..2.0) {
        for kind in [SymbolKind::Whitham, SymbolKind::WhithamSt, SymbolKind::BoussinesqT2, SymbolKind::BoussinesqP, SymbolKind::Identity] {
            let s = SymbolSpec::new(kind, eps, beta);
            prop_assert_eq!(s.eval(k), s.eval(-k));
            prop_assert!(s.eval(k) > 0.0);
        }
        let odd = SymbolSpec::new(SymbolKind::AiryPhase, eps, 0.0);
        prop_assert_eq!(odd.eval(k), -odd.eval(-k));
    }

    #[test]
    fn rhs_is_real_and_mean_free(
        (l, modes, bump) in smooth_field(),
        fam in family(),
        eps in 0.01f64..1.0,
        beta in 0.0f64..1.0,
        c in -1.5f64..1.5,
    ) {
        let m = model(fam, eps, beta, c);
        let u = build(l, &modes, bump);
        let state = match fam {
            Family::Boussinesq => State::system(translate_field(&u, 0.7).scaled(0.5), u),
            _ => State::scalar(u),
        };
        let d = rhs(&m, &state).unwrap();
        let scale = 1.0 + d.du.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(conjugate_defect(&d.du) <= 1e-12 * scale);
        prop_assert_eq!(d.du[0], Complex64::new(0.0, 0.0));
        if let Some(de) = &d.deta {
            prop_assert!(conjugate_defect(de) <= 1e-12 * scale);
            prop_assert_eq!(de[0], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn linear_group_is_a_unitary_group(
        (l, modes, bump) in smooth_field(),
        kdv in any::<bool>(),
        eps in 0.01f64..1.0,
        t1 in -5.0f64..5.0,
        t2 in -5.0f64..5.0,
    ) {
        let m = if kdv { ModelSpec::kdv(eps) } else { ModelSpec::whitham(eps) };
        let phi = build(l, &modes, bump);
        let a = linear_group(&m, &linear_group(&m, &phi, t1).unwrap(), t2).unwrap();
        let b = linear_group(&m, &phi, t1 + t2).unwrap();
        let err = norms(&a.sub(&b).unwrap(), 0).l2;
        let n0 = norms(&phi, 0).l2;
        prop_assert!(err <= 1e-12 * (1.0 + n0));
        prop_assert!((norms(&b, 0).l2 - n0).abs() <= 1e-12 * (1.0 + n0));
        prop_assert!((norms(&b, 0).mass - norms(&phi, 0).mass).abs() <= 1e-12 * (1.0 + n0));
    }

    #[test]
    fn fit_is_exact_on_model_spectra(mu in -0.9f64..2.0, delta in 0.01f64..0.05, amp in 1e-3f64..1e3) {
        // k = 1..=512, so delta * kmax lies in (5, 26)
        let k: Vec<f64> = (1..=512).map(f64::from).collect();
        let a: Vec<f64> = k.iter().map(|&k| amp * k.powf(-(mu + 1.0)) * (-delta * k).exp()).collect();
        let f = fit_modulus(&k, &a, Some((10.0, 200.0)), 0.0).unwrap();
        prop_assert!(f.rms_residual < 1e-10);
        prop_assert!((f.mu - mu).abs() <= 1e-3 * mu.abs().max(1.0));
        prop_assert!((f.delta - delta).abs() <= 1e-3 * delta);
        prop_assert!((f.amplitude / amp - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn energy_is_translation_invariant(
        (l, modes, bump) in smooth_field(),
        fam in family(),
        eps in 0.01f64..1.0,
        x0 in -3.0f64..3.0,
    ) {
        let m = model(fam, eps, 0.0, 0.3);
        let u = build(l, &modes, bump);
        let st = |f: &SpectralField| match fam {
            Family::Boussinesq => State::system(f.scaled(0.5), f.clone()),
            _ => State::scalar(f.clone()),
        };
        let a = conserved(&m, &st(&u)).unwrap();
        let b = conserved(&m, &st(&translate_field(&u, x0))).unwrap();
        prop_assert!((a.energy - b.energy).abs() <= 1e-10 * (1.0 + a.energy.abs()));
        prop_assert!((a.momentum - b.momentum).abs() <= 1e-10 * (1.0 + a.momentum.abs()));
    }
}
