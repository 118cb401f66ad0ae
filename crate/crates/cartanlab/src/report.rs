//! JSON reports. Field order is fixed by the structs and maps are sorted,
//! so identical inputs serialize to identical bytes.

use cartanlab_core::quadrature::{CLOSURE_CONSTANT, SPHERE_MEASURE};
use cartanlab_core::C64;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

/// A float that serializes non-finite values as strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&format!("{}", self.0))
        }
    }
}

pub fn num(x: f64) -> Value {
    serde_json::to_value(Num(x)).expect("numbers serialize")
}

pub fn complex(z: C64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Num,
    pub tolerance: Num,
    pub pass: bool,
    pub sampled_on: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub name: String,
    pub value: Value,
    pub sampled_on: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceInfo {
    pub name: String,
    pub rho: String,
    pub center: [Num; 4],
}

/// Conventions every number in a report depends on.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    /// Sign `s` in `theta = s (i/2)(d rho - dbar rho)` chosen by the
    /// orientation audit.
    pub theta_sign: Num,
    /// `c` in `I_2 = c I_1`.
    pub closure_constant: Value,
    /// `int theta ^ d theta` over the unit sphere.
    pub measure_baseline: Num,
    pub potential: &'static str,
}

impl Conventions {
    pub fn new(theta_sign: f64) -> Self {
        Conventions {
            theta_sign: Num(theta_sign),
            closure_constant: complex(CLOSURE_CONSTANT),
            measure_baseline: Num(SPHERE_MEASURE),
            potential: "u = conj(x0) for X = x0 xi + x1 Z_1, xi the (1,0) part of T",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: &'static str,
    pub surface: SurfaceInfo,
    pub conventions: Conventions,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub values: Vec<Entry>,
}

impl Report {
    pub fn new(command: &str, surface: SurfaceInfo, conventions: Conventions) -> Self {
        Report {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            surface,
            conventions,
            pass: true,
            checks: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Records `value <= tolerance` (NaN fails).
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64, sampled_on: &str) -> bool {
        self.record(name, value, tolerance, value <= tolerance, sampled_on)
    }

    /// Records `value >= tolerance` (NaN fails).
    pub fn at_least(&mut self, name: &str, value: f64, tolerance: f64, sampled_on: &str) -> bool {
        self.record(name, value, tolerance, value >= tolerance, sampled_on)
    }

    pub fn record(&mut self, name: &str, value: f64, tolerance: f64, pass: bool, sampled_on: &str) -> bool {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            value: Num(value),
            tolerance: Num(tolerance),
            pass,
            sampled_on: sampled_on.into(),
        });
        pass
    }

    pub fn value(&mut self, name: &str, value: Value, sampled_on: &str) {
        self.values.push(Entry {
            name: name.into(),
            value,
            sampled_on: sampled_on.into(),
        });
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|e| e.name == name).map(|e| &e.value)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
