//! Built-in experiment configurations, shipped as config text.

use crate::config::{Assignments, ConfigError, ExperimentConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a_LD", include_str!("../presets/fig3a_LD.cfg")),
    ("fig3a_LL", include_str!("../presets/fig3a_LL.cfg")),
    ("fig3a_LDbar", include_str!("../presets/fig3a_LDbar.cfg")),
    ("fig3a_LR", include_str!("../presets/fig3a_LR.cfg")),
    ("fig3a_VH", include_str!("../presets/fig3a_VH.cfg")),
    ("fig3b", include_str!("../presets/fig3b.cfg")),
    ("fig3c", include_str!("../presets/fig3c.cfg")),
    ("fig4a_phi_D", include_str!("../presets/fig4a_phi_D.cfg")),
    ("fig4a_phi_V", include_str!("../presets/fig4a_phi_V.cfg")),
    (
        "fig4b_theta_V",
        include_str!("../presets/fig4b_theta_V.cfg"),
    ),
    (
        "fig4b_theta_D",
        include_str!("../presets/fig4b_theta_D.cfg"),
    ),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// A preset with command-line overrides applied on top.
pub fn load_preset(name: &str, overrides: Assignments) -> Result<ExperimentConfig, ConfigError> {
    let text = preset_text(name).ok_or_else(|| ConfigError {
        line: None,
        key: String::new(),
        msg: format!(
            "unknown preset `{name}`; available: {}",
            preset_names().collect::<Vec<_>>().join(", ")
        ),
    })?;
    let mut a = Assignments::parse(text)?;
    a.merge(overrides);
    a.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_parses_and_round_trips() {
        for (name, text) in PRESETS {
            let c = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.output.name, *name);
            assert_eq!(parse_config(&c.to_config_string()).unwrap(), c);
        }
    }
}
