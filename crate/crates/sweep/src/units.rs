//! Unit-tagged quantities in config files.

use ramanmag_core::constants::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Frequency or rate, stored in s⁻¹ (Hz).
    Rate,
    Length,
    Power,
    /// Raman gain coefficient, stored in m/W.
    Gain,
    Area,
    Density,
    /// Optical line: either a frequency or a vacuum wavelength, stored in Hz.
    Optical,
}

impl Dimension {
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Rate => "s^-1",
            Dimension::Length => "m",
            Dimension::Power => "W",
            Dimension::Gain => "m/W",
            Dimension::Area => "m^2",
            Dimension::Density => "m^-3",
            Dimension::Optical => "Hz",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Rate => "a frequency/rate",
            Dimension::Length => "a length",
            Dimension::Power => "a power",
            Dimension::Gain => "a gain coefficient",
            Dimension::Area => "an area",
            Dimension::Density => "a number density",
            Dimension::Optical => "an optical frequency or wavelength",
        }
    }
}

fn rate_factor(unit: &str) -> Option<f64> {
    Some(match unit {
        "Hz" | "s^-1" | "1/s" => 1.0,
        "kHz" | "ms^-1" => 1e3,
        "MHz" | "us^-1" | "µs^-1" => 1e6,
        "GHz" | "ns^-1" => 1e9,
        "THz" => 1e12,
        _ => return None,
    })
}

fn length_factor(unit: &str) -> Option<f64> {
    Some(match unit {
        "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "µm" => 1e-6,
        "nm" => 1e-9,
        _ => return None,
    })
}

// Dividing by the exact reciprocal keeps e.g. 341.74 mW at exactly 0.34174 W.
fn scale(value: f64, factor: f64) -> f64 {
    if factor < 1.0 {
        value / (1.0 / factor).round()
    } else {
        value * factor
    }
}

/// Convert `value` in `unit` to SI for the given dimension.
pub fn to_si(value: f64, unit: &str, dim: Dimension) -> Result<f64, String> {
    let factor = match dim {
        Dimension::Rate => rate_factor(unit),
        Dimension::Length => length_factor(unit),
        Dimension::Power => match unit {
            "W" => Some(1.0),
            "mW" => Some(1e-3),
            "uW" | "µW" => Some(1e-6),
            "kW" => Some(1e3),
            _ => None,
        },
        Dimension::Gain => match unit {
            "m/W" => Some(1.0),
            "cm/GW" => Some(1e-11),
            "cm/MW" => Some(1e-8),
            _ => None,
        },
        Dimension::Area => match unit {
            "m^2" => Some(1.0),
            "cm^2" => Some(1e-4),
            _ => None,
        },
        Dimension::Density => match unit {
            "m^-3" => Some(1.0),
            "cm^-3" => Some(1e6),
            _ => None,
        },
        Dimension::Optical => {
            if let Some(f) = rate_factor(unit) {
                Some(f)
            } else if let Some(f) = length_factor(unit) {
                return Ok(SPEED_OF_LIGHT / scale(value, f));
            } else {
                None
            }
        }
    };
    factor
        .map(|f| scale(value, f))
        .ok_or_else(|| format!("unit '{unit}' is not {}", dim.name()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn si(value: f64, dim: Dimension) -> Self {
        Self {
            value,
            unit: dim.si_unit().to_string(),
        }
    }
}

/// A unit-tagged list; a single `value` is accepted as a one-element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityList {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub unit: String,
}

impl QuantityList {
    pub fn si(values: &[f64], dim: Dimension) -> Self {
        Self {
            value: None,
            values: Some(values.to_vec()),
            unit: dim.si_unit().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(to_si(75.0, "MHz", Dimension::Rate).unwrap(), 7.5e7);
        assert_eq!(to_si(66.16, "us^-1", Dimension::Rate).unwrap(), 66.16e6);
        assert_eq!(to_si(341.74, "mW", Dimension::Power).unwrap(), 0.34174);
        assert_eq!(to_si(14.75, "cm/GW", Dimension::Gain).unwrap(), 14.75e-11);
        assert!(
            (to_si(620.0, "nm", Dimension::Optical).unwrap() - SPEED_OF_LIGHT / 620e-9).abs() < 1.0
        );
        assert_eq!(to_si(4.8e14, "Hz", Dimension::Optical).unwrap(), 4.8e14);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let err = to_si(1.0, "MHz", Dimension::Length).unwrap_err();
        assert!(err.contains("not a length"), "{err}");
        assert!(to_si(1.0, "furlong", Dimension::Length).is_err());
    }
}
