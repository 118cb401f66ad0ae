//! Named test surfaces and the holomorphic field battery.

use alloc::string::String;

use crate::expr::{parse, ExprPool, ParseError, C64};
use crate::geometry::Hypersurface;

pub const SPHERE: &str = "z1*zb1 + z2*zb2 - 1";
/// `|z1|^2 + 2|z2|^2 = 1`; a complex-linear image of the sphere.
pub const ELLIPSOID: &str = "z1*zb1 + 2*z2*zb2 - 1";
/// Real ellipsoid, not locally spherical.
pub const REAL_ELLIPSOID: &str = "z1*zb1 + z2*zb2 + 0.15*(z1^2 + zb1^2) - 1";
/// `|z|^2 - 1 + 0.05 Re(z1^2 zb2)`.
pub const PERTURBED_SPHERE: &str = "z1*zb1 + z2*zb2 - 1 + 0.025*(z1^2*zb2 + zb1^2*z2)";

/// `(name, a1, a2)` for `i Euler, d/dz1, z2 d/dz1, z1 d/dz2, z1^2 d/dz1`.
pub const FIELD_BATTERY: [(&str, &str, &str); 5] = [
    ("i_euler", "i*z1", "i*z2"),
    ("d1", "1", "0"),
    ("z2_d1", "z2", "0"),
    ("z1_d2", "0", "z1"),
    ("z1sq_d1", "z1^2", "0"),
];

impl Hypersurface {
    /// Parses `rho`, star-shaped about the origin.
    pub fn parse(pool: &mut ExprPool, name: &str, rho: &str) -> Result<Self, ParseError> {
        Self::parse_centered(pool, name, rho, [C64::new(0.0, 0.0); 2])
    }

    pub fn parse_centered(
        pool: &mut ExprPool,
        name: &str,
        rho: &str,
        center: [C64; 2],
    ) -> Result<Self, ParseError> {
        Ok(Hypersurface {
            rho: parse(pool, rho)?,
            center,
            name: String::from(name),
        })
    }
}
