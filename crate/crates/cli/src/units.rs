//! Unit-suffixed quantities ("0.4pF", "5 GHz", "200mK") converted to SI.
//!
//! Cyclic frequencies (Hz, kHz, MHz, GHz) are converted to angular
//! frequency, so every frequency leaving this module is in rad/s.

use std::f64::consts::TAU;
use std::fmt;

use anyhow::{bail, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Capacitance,
    Inductance,
    Current,
    AngularFrequency,
    Temperature,
    Time,
    Length,
    Energy,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Capacitance => &[("fF", 1e-15), ("pF", 1e-12), ("nF", 1e-9), ("uF", 1e-6), ("F", 1.0)],
            Dim::Inductance => &[("pH", 1e-12), ("nH", 1e-9), ("uH", 1e-6), ("mH", 1e-3), ("H", 1.0)],
            Dim::Current => &[
                ("nA", 1e-9),
                ("uA", 1e-6),
                ("μA", 1e-6),
                ("µA", 1e-6),
                ("mA", 1e-3),
                ("A", 1.0),
            ],
            Dim::AngularFrequency => &[
                ("rad/s", 1.0),
                ("GHz", TAU * 1e9),
                ("MHz", TAU * 1e6),
                ("kHz", TAU * 1e3),
                ("Hz", TAU),
            ],
            Dim::Temperature => &[("uK", 1e-6), ("μK", 1e-6), ("mK", 1e-3), ("K", 1.0)],
            Dim::Time => &[
                ("fs", 1e-15),
                ("ps", 1e-12),
                ("ns", 1e-9),
                ("us", 1e-6),
                ("μs", 1e-6),
                ("ms", 1e-3),
                ("s", 1.0),
            ],
            Dim::Length => &[("um", 1e-6), ("μm", 1e-6), ("mm", 1e-3), ("cm", 1e-2), ("m", 1.0)],
            Dim::Energy => &[("J", 1.0)],
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dim::Capacitance => "capacitance",
            Dim::Inductance => "inductance",
            Dim::Current => "current",
            Dim::AngularFrequency => "frequency",
            Dim::Temperature => "temperature",
            Dim::Time => "time",
            Dim::Length => "length",
            Dim::Energy => "energy",
        };
        f.write_str(name)
    }
}

/// A config value: a bare number (already SI) or a number with a unit suffix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn si(&self, dim: Dim) -> Result<f64> {
        match self {
            Quantity::Number(x) => finite(*x, dim),
            Quantity::Text(s) => parse(s, dim),
        }
    }
}

fn finite(x: f64, dim: Dim) -> Result<f64> {
    if !x.is_finite() {
        bail!("{dim} must be finite, got {x}");
    }
    Ok(x)
}

/// Parses `"<number>[ ]<unit>"`; a bare number is taken as SI.
pub fn parse(text: &str, dim: Dim) -> Result<f64> {
    let s = text.trim();
    // longest suffix first so "mK" wins over "K" and "rad/s" over "s"
    let mut units: Vec<_> = dim.units().to_vec();
    units.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    for (unit, factor) in units {
        if let Some(num) = s.strip_suffix(unit) {
            if let Ok(x) = num.trim_end().parse::<f64>() {
                return finite(x * factor, dim);
            }
        }
    }
    if let Ok(x) = s.parse::<f64>() {
        return finite(x, dim);
    }
    let allowed: Vec<&str> = dim.units().iter().map(|(u, _)| *u).collect();
    bail!("cannot read {text:?} as a {dim}; expected a number with one of {}", allowed.join(", "))
}
