//! Experiment presets shipped with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig1-pathology1",
        include_str!("../presets/fig1-pathology1.toml"),
    ),
    (
        "fig2-pathology2",
        include_str!("../presets/fig2-pathology2.toml"),
    ),
    (
        "fig4-exact-mixtures",
        include_str!("../presets/fig4-exact-mixtures.toml"),
    ),
    (
        "fig6-banana-mala",
        include_str!("../presets/fig6-banana-mala.toml"),
    ),
    ("fig6-gm-mala", include_str!("../presets/fig6-gm-mala.toml")),
    (
        "appA1-weight-sweep",
        include_str!("../presets/appA1-weight-sweep.toml"),
    ),
    (
        "table1-logistic",
        include_str!("../presets/table1-logistic.toml"),
    ),
];

pub fn preset_toml(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
