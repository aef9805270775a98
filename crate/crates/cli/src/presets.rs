//! Shipped run configurations, selected with `preset = NAME` or
//! `--config preset:NAME`.

const PRESETS: &[(&str, &str)] = &[
    ("whitham-gauss-eps1", include_str!("../presets/whitham-gauss-eps1.ini")),
    ("whitham-critical-times", include_str!("../presets/whitham-critical-times.ini")),
    ("whitham-soliton", include_str!("../presets/whitham-soliton.ini")),
    ("whitham-branch", include_str!("../presets/whitham-branch.ini")),
    ("whitham-soliton-stationary", include_str!("../presets/whitham-soliton-stationary.ini")),
    ("whitham-soliton-perturbed", include_str!("../presets/whitham-soliton-perturbed.ini")),
    ("whitham-kdv-comparison", include_str!("../presets/whitham-kdv-comparison.ini")),
    ("capillary-gauss", include_str!("../presets/capillary-gauss.ini")),
    ("capillary-soliton-below", include_str!("../presets/capillary-soliton-below.ini")),
    ("capillary-soliton-above", include_str!("../presets/capillary-soliton-above.ini")),
    ("boussinesq-gauss-eps1", include_str!("../presets/boussinesq-gauss-eps1.ini")),
    ("boussinesq-gauss-negative", include_str!("../presets/boussinesq-gauss-negative.ini")),
    ("boussinesq-two-solitons", include_str!("../presets/boussinesq-two-solitons.ini")),
    ("boussinesq-branch", include_str!("../presets/boussinesq-branch.ini")),
    ("boussinesq-stability", include_str!("../presets/boussinesq-stability.ini")),
    ("soliton-fit", include_str!("../presets/soliton-fit.ini")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, body)| *body)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
