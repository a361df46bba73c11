use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported single-crank leg topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    FourBar,
    #[serde(rename = "watt1")]
    WattI,
    #[serde(rename = "stephenson1")]
    StephensonI,
    #[serde(rename = "stephenson3")]
    StephensonIII,
    #[serde(rename = "rtclm7")]
    RtclmSevenBar,
}

/// Physical meaning of one parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Phase or orientation angle in radians.
    Angle,
    /// Absolute pivot coordinate in millimetres.
    Coordinate,
    /// Link length; must be strictly positive.
    Length,
    /// Signed offset along or across a link axis.
    Offset,
}

const FOUR_BAR: [&str; 10] = ["b", "g", "x_a", "y_a", "r1", "r2", "r3", "r4", "r5", "r6"];
const SIX_BAR: [&str; 16] = [
    "b", "g", "x_a", "y_a", "r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8", "r9", "r10", "r11",
    "r12",
];
const RTCLM: [&str; 13] = [
    "r1", "r2", "r3", "r4", "r5", "r6", "x_d", "y_d", "a1", "b1", "a3", "b3", "dx_eh",
];

/// Search box of the seven-bar design vector.
const RTCLM_LB: [f64; 13] = [
    30., 50., 50., 50., 50., 20., -150., -150., 50., 50., 50., 50., 100.,
];
const RTCLM_UB: [f64; 13] = [
    100., 250., 250., 250., 250., 100., 150., 150., 350., 350., 300., 300., 300.,
];

impl Topology {
    pub const ALL: [Topology; 5] = [
        Topology::FourBar,
        Topology::WattI,
        Topology::StephensonI,
        Topology::StephensonIII,
        Topology::RtclmSevenBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::FourBar => "four_bar",
            Topology::WattI => "watt1",
            Topology::StephensonI => "stephenson1",
            Topology::StephensonIII => "stephenson3",
            Topology::RtclmSevenBar => "rtclm7",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Topology::FourBar => &FOUR_BAR,
            Topology::WattI | Topology::StephensonI | Topology::StephensonIII => &SIX_BAR,
            Topology::RtclmSevenBar => &RTCLM,
        }
    }

    pub fn arity(self) -> usize {
        self.param_names().len()
    }

    pub fn is_six_bar(self) -> bool {
        matches!(
            self,
            Topology::WattI | Topology::StephensonI | Topology::StephensonIII
        )
    }

    /// Number of RRR dyads solved per pose (= number of branch flags).
    pub fn dyad_count(self) -> usize {
        match self {
            Topology::FourBar => 1,
            _ => 2,
        }
    }

    pub fn param_kind(self, index: usize) -> ParamKind {
        let name = self.param_names()[index];
        match (self, name) {
            (Topology::RtclmSevenBar, "x_d" | "y_d" | "dx_eh") => ParamKind::Coordinate,
            (Topology::RtclmSevenBar, _) => ParamKind::Length,
            (_, "b" | "g") => ParamKind::Angle,
            (_, "x_a" | "y_a") => ParamKind::Coordinate,
            (Topology::FourBar, "r5" | "r6") => ParamKind::Offset,
            (Topology::StephensonIII, "r12") => ParamKind::Offset,
            (_, "r6" | "r8" | "r11") if self.is_six_bar() => ParamKind::Offset,
            _ => ParamKind::Length,
        }
    }

    /// Default full search box, one `(lo, hi)` pair per parameter.
    pub fn default_bounds(self) -> Vec<(f64, f64)> {
        if self == Topology::RtclmSevenBar {
            return RTCLM_LB
                .iter()
                .copied()
                .zip(RTCLM_UB.iter().copied())
                .collect();
        }
        (0..self.arity())
            .map(|i| match self.param_kind(i) {
                ParamKind::Angle => (-PI, PI),
                ParamKind::Coordinate | ParamKind::Offset => (-500.0, 500.0),
                ParamKind::Length => (30.0, 500.0),
            })
            .collect()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "four_bar" | "fourbar" => Topology::FourBar,
            "watt1" | "watt_i" | "watti" => Topology::WattI,
            "stephenson1" | "stephenson_i" | "stephensoni" => Topology::StephensonI,
            "stephenson3" | "stephenson_iii" | "stephensoniii" => Topology::StephensonIII,
            "rtclm7" | "rtclm" | "rtclm_seven_bar" | "rtclmsevenbar" => Topology::RtclmSevenBar,
            _ => return Err(Error::InvalidParams(format!("unknown topology {s:?}"))),
        })
    }
}

/// Dimensional parameters of one mechanism (mm, rad), ordered per [`Topology::param_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub topology: Topology,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(topology: Topology, values: Vec<f64>) -> Result<Self> {
        if values.len() != topology.arity() {
            return Err(Error::InvalidParams(format!(
                "{topology} expects {} parameters, got {}",
                topology.arity(),
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{} is not finite",
                    topology.param_names()[i]
                )));
            }
            if topology.param_kind(i) == ParamKind::Length && *v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{} must be positive, got {v}",
                    topology.param_names()[i]
                )));
            }
        }
        Ok(Self { topology, values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let i = self
            .topology
            .param_names()
            .iter()
            .position(|n| *n == name)?;
        Some(self.values[i])
    }

    /// Same mechanism with every length-like parameter multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if self.topology.param_kind(i) == ParamKind::Angle {
                    *v
                } else {
                    v * s
                }
            })
            .collect();
        Self::new(self.topology, values)
    }

    /// Rigid translation through the fixed crank pivot `(x_a, y_a)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        let names = self.topology.param_names();
        let ix = names.iter().position(|n| *n == "x_a");
        let iy = names.iter().position(|n| *n == "y_a");
        match (ix, iy) {
            (Some(ix), Some(iy)) => {
                let mut values = self.values.clone();
                values[ix] += dx;
                values[iy] += dy;
                Self::new(self.topology, values)
            }
            _ => Err(Error::InvalidParams(format!(
                "{} has its crank pivot at the origin",
                self.topology
            ))),
        }
    }

    /// Rigid rotation by `angle` about the origin combined with uniform scaling by `s`.
    pub fn similarity(&self, s: f64, angle: f64, dx: f64, dy: f64) -> Result<Self> {
        let names = self.topology.param_names();
        if !names.contains(&"x_a") {
            return Err(Error::InvalidParams(format!(
                "{} cannot be re-posed",
                self.topology
            )));
        }
        let mut out = self.scaled(s)?;
        let ix = names.iter().position(|n| *n == "x_a").unwrap();
        let (x, y) = (out.values[ix], out.values[ix + 1]);
        let (sn, cs) = angle.sin_cos();
        out.values[ix] = cs * x - sn * y + dx;
        out.values[ix + 1] = sn * x + cs * y + dy;
        for name in ["b", "g"] {
            let i = names.iter().position(|n| *n == name).unwrap();
            out.values[i] = wrap_angle(out.values[i] + angle);
        }
        Ok(out)
    }

    /// Largest absolute length-like parameter, used as the mechanism's size.
    pub fn scale(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                matches!(
                    self.topology.param_kind(*i),
                    ParamKind::Length | ParamKind::Offset
                )
            })
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
