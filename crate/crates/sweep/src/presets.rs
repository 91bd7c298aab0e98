//! Built-in configs reproducing the reference figures.

use crate::config::{parse_config, ExperimentConfig};
use crate::error::SweepError;

pub const PRESET_NAMES: [&str; 7] = [
    "figure2", "figure3a", "figure3b", "figure3c", "figure3d", "figure4a", "figure4b",
];

const SHIFT_RABI_MHZ: &str =
    "[0, 1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 35, 40, 50, 60, 80, 100, 125, 150, 175, 200]";
const SENSITIVITY_RABI_MHZ: &str = "[1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16, 18, 20, 25, 30]";

fn pump_grid_mw() -> String {
    let v: Vec<String> = (0..=120).map(|i| (5 * i).to_string()).collect();
    format!("[{}]", v.join(", "))
}

/// Preset config as JSON text.
pub fn preset_json(name: &str) -> Result<String, SweepError> {
    let text = match name {
        "figure2" => format!(
            r#"{{
  "sweep": "laser_curve",
  "drive": {{
    "rabi": {{"values": [0, 18], "unit": "MHz"}},
    "detuning": {{"values": [0, 10, 20, 30, 40, 50, 75, 100, 150, 200], "unit": "MHz"}},
    "dephasing": {{"value": 1, "unit": "MHz"}}
  }},
  "kappa_r": {{"value": 75, "unit": "MHz"}},
  "pump": {{"grid": {{"values": {}, "unit": "mW"}}}},
  "output": {{"stem": "figure2"}}
}}"#,
            pump_grid_mw()
        ),
        "figure3a" => format!(
            r#"{{
  "sweep": "threshold_shift",
  "drive": {{
    "rabi": {{"values": {SHIFT_RABI_MHZ}, "unit": "MHz"}},
    "dephasing": {{"value": 1, "unit": "MHz"}}
  }},
  "kappa_r": {{"values": [75, 110, 145, 180, 215, 250], "unit": "MHz"}},
  "shift_detuning": {{"value": 200, "unit": "MHz"}},
  "output": {{"stem": "figure3a"}}
}}"#
        ),
        "figure3b" => r#"{
  "sweep": "response",
  "drive": {
    "rabi": {"values": [2, 5, 10, 18, 30, 50], "unit": "MHz"},
    "dephasing": {"value": 1, "unit": "MHz"}
  },
  "kappa_r": {"value": 75, "unit": "MHz"},
  "pump": {"rule": "mw_off_threshold"},
  "output": {"stem": "figure3b"}
}"#
        .to_string(),
        "figure3c" => format!(
            r#"{{
  "sweep": "threshold_shift",
  "drive": {{
    "rabi": {{"values": {SHIFT_RABI_MHZ}, "unit": "MHz"}},
    "dephasing": {{"values": [0.1, 1, 10], "unit": "MHz"}}
  }},
  "kappa_r": {{"value": 75, "unit": "MHz"}},
  "shift_detuning": {{"value": 200, "unit": "MHz"}},
  "output": {{"stem": "figure3c"}}
}}"#
        ),
        "figure3d" => r#"{
  "sweep": "response",
  "drive": {
    "rabi": {"value": 18, "unit": "MHz"},
    "dephasing": {"values": [0.1, 1, 10], "unit": "MHz"}
  },
  "kappa_r": {"value": 75, "unit": "MHz"},
  "pump": {"rule": "mw_off_threshold"},
  "output": {"stem": "figure3d"}
}"#
        .to_string(),
        "figure4a" => r#"{
  "sweep": "sensitivity",
  "drive": {
    "rabi": {"value": 18, "unit": "MHz"},
    "dephasing": {"value": 1, "unit": "MHz"}
  },
  "kappa_r": {"value": 75, "unit": "MHz"},
  "pump": {"rule": "mw_off_threshold"},
  "output": {"stem": "figure4a"}
}"#
        .to_string(),
        "figure4b" => format!(
            r#"{{
  "sweep": "sensitivity",
  "drive": {{
    "rabi": {{"values": {SENSITIVITY_RABI_MHZ}, "unit": "MHz"}},
    "dephasing": {{"values": [0.1, 1, 10], "unit": "MHz"}}
  }},
  "kappa_r": {{"value": 75, "unit": "MHz"}},
  "pump": {{"rule": "mw_off_threshold"}},
  "output": {{"stem": "figure4b"}}
}}"#
        ),
        other => return Err(SweepError::UnknownPreset(other.to_string())),
    };
    Ok(text)
}

pub fn preset(name: &str) -> Result<ExperimentConfig, SweepError> {
    parse_config(&preset_json(name)?)
}
