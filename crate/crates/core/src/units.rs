//! Physical constants, dimension-checked quantities and the model's
//! characteristic scales.
//!
//! Everything is SI internally. Dimensions are tracked as rational exponents
//! of (mass, length, time) in sixths so that the fractional powers appearing in
//! the reduction time (`M^{-5/3} rho^{-1/3}`) stay exact.

use std::fmt;
use std::ops::{Div, Mul};

use crate::error::{Error, Result};

/// Fundamental constants (CODATA 2018).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Gravitational constant, m^3 kg^-1 s^-2.
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Proton mass, kg.
    pub m_p: f64,
    /// Speed of light, m/s.
    pub c: f64,
}

impl PhysConstants {
    pub const CODATA: PhysConstants = PhysConstants {
        g: 6.674_30e-11,
        hbar: 1.054_571_817e-34,
        m_p: 1.672_621_923_69e-27,
        c: 299_792_458.0,
    };

    /// Copy with a rescaled gravitational constant. Only test harnesses and
    /// "switch gravity off" comparisons use this.
    pub fn with_gravity(self, g: f64) -> Self {
        PhysConstants { g, ..self }
    }

    pub fn gravity(&self) -> Quantity {
        Quantity::new(self.g, Dimension::new(-6, 18, -12))
    }

    pub fn hbar(&self) -> Quantity {
        Quantity::new(self.hbar, ENERGY.mul(TIME))
    }

    pub fn proton_mass(&self) -> Quantity {
        Quantity::new(self.m_p, MASS)
    }
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Default localization threshold in proton masses (inclusive).
pub const LOCALIZATION_THRESHOLD_MP: f64 = 1e11;

/// Mass-independent spreading time quoted for localized states, seconds.
/// Reported next to reduction times; never computed.
pub const SPREADING_TIME_S: f64 = 1e3;

/// Exponents of mass, length and time, in units of 1/6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension {
    mass: i32,
    length: i32,
    time: i32,
}

pub const DIMENSIONLESS: Dimension = Dimension::new(0, 0, 0);
pub const MASS: Dimension = Dimension::new(6, 0, 0);
pub const LENGTH: Dimension = Dimension::new(0, 6, 0);
pub const TIME: Dimension = Dimension::new(0, 0, 6);
pub const DENSITY: Dimension = Dimension::new(6, -18, 0);
pub const ENERGY: Dimension = Dimension::new(6, 12, -12);
pub const INVERSE_LENGTH: Dimension = Dimension::new(0, -6, 0);

impl Dimension {
    /// Exponents given in sixths: `Dimension::new(6, 0, 0)` is mass.
    pub const fn new(mass: i32, length: i32, time: i32) -> Self {
        Dimension { mass, length, time }
    }

    pub const fn mul(self, other: Dimension) -> Dimension {
        Dimension::new(
            self.mass + other.mass,
            self.length + other.length,
            self.time + other.time,
        )
    }

    pub const fn div(self, other: Dimension) -> Dimension {
        Dimension::new(
            self.mass - other.mass,
            self.length - other.length,
            self.time - other.time,
        )
    }

    /// Raise to `num/den`. Fails when the result is not a whole number of
    /// sixths.
    pub fn pow(self, num: i32, den: i32) -> Option<Dimension> {
        let scale = |e: i32| {
            let p = e * num;
            (p % den == 0).then_some(p / den)
        };
        Some(Dimension::new(
            scale(self.mass)?,
            scale(self.length)?,
            scale(self.time)?,
        ))
    }

    pub fn name(&self) -> Option<&'static str> {
        match *self {
            DIMENSIONLESS => Some("dimensionless"),
            MASS => Some("mass"),
            LENGTH => Some("length"),
            TIME => Some("time"),
            DENSITY => Some("density"),
            ENERGY => Some("energy"),
            INVERSE_LENGTH => Some("inverse length"),
            _ => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.name() {
            return f.write_str(n);
        }
        let part = |sym: &str, e: i32| -> String {
            match e {
                0 => String::new(),
                e if e % 6 == 0 => format!("{sym}^{}", e / 6),
                e => format!("{sym}^({e}/6)"),
            }
        };
        let parts: Vec<String> = [
            part("kg", self.mass),
            part("m", self.length),
            part("s", self.time),
        ]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
        f.write_str(&parts.join(" "))
    }
}

/// A value in SI base units tagged with its dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dimension,
}

impl Quantity {
    pub const fn new(value: f64, dim: Dimension) -> Self {
        Quantity { value, dim }
    }

    pub const fn mass(kg: f64) -> Self {
        Quantity::new(kg, MASS)
    }

    pub const fn length(m: f64) -> Self {
        Quantity::new(m, LENGTH)
    }

    pub const fn time(s: f64) -> Self {
        Quantity::new(s, TIME)
    }

    pub const fn density(kg_per_m3: f64) -> Self {
        Quantity::new(kg_per_m3, DENSITY)
    }

    pub const fn scalar(x: f64) -> Self {
        Quantity::new(x, DIMENSIONLESS)
    }

    pub fn try_add(self, rhs: Quantity) -> Result<Quantity> {
        self.same_dim(rhs)?;
        Ok(Quantity::new(self.value + rhs.value, self.dim))
    }

    pub fn try_sub(self, rhs: Quantity) -> Result<Quantity> {
        self.same_dim(rhs)?;
        Ok(Quantity::new(self.value - rhs.value, self.dim))
    }

    /// `self^(num/den)`.
    pub fn powr(self, num: i32, den: i32) -> Result<Quantity> {
        let dim = self
            .dim
            .pow(num, den)
            .ok_or_else(|| Error::param("exponent", format!("{num}/{den} of {}", self.dim)))?;
        Ok(Quantity::new(
            self.value.powf(f64::from(num) / f64::from(den)),
            dim,
        ))
    }

    /// Returns the SI value if the dimension is `expected`.
    pub fn expect(self, expected: Dimension) -> Result<f64> {
        if self.dim == expected {
            Ok(self.value)
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim,
            })
        }
    }

    fn same_dim(self, rhs: Quantity) -> Result<()> {
        if self.dim == rhs.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            })
        }
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value * rhs.value, self.dim.mul(rhs.dim))
    }
}

impl Div for Quantity {
    type Output = Quantity;
    fn div(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value / rhs.value, self.dim.div(rhs.dim))
    }
}

impl Mul<f64> for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: f64) -> Quantity {
        Quantity::new(self.value * rhs, self.dim)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} [{}]", self.value, self.dim)
    }
}

/// Parse `"<number><unit>"`, e.g. `1e-6g`, `2g/cm3`, `1e12mp`, `3.5 cm`.
///
/// Proton masses (`mp`) are resolved with the supplied constants. A bare
/// number is dimensionless.
pub fn parse_quantity(text: &str, consts: &PhysConstants) -> Result<Quantity> {
    let s = text.trim();
    let split = numeric_prefix_len(s);
    if split == 0 {
        return Err(Error::BadQuantity(text.to_string()));
    }
    let value: f64 = s[..split]
        .parse()
        .map_err(|_| Error::BadQuantity(text.to_string()))?;
    if !value.is_finite() {
        return Err(Error::BadQuantity(text.to_string()));
    }
    let unit = s[split..].trim();
    let (scale, dim) = unit_factor(unit, consts)?;
    Ok(Quantity::new(value * scale, dim))
}

fn numeric_prefix_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    // exponent only if followed by digits, so `1e12mp` works but `2e` does not
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

fn unit_factor(unit: &str, consts: &PhysConstants) -> Result<(f64, Dimension)> {
    let u = match unit {
        "" => (1.0, DIMENSIONLESS),
        "kg" => (1.0, MASS),
        "g" => (1e-3, MASS),
        "mg" => (1e-6, MASS),
        "mp" | "m_p" => (consts.m_p, MASS),
        "m" => (1.0, LENGTH),
        "cm" => (1e-2, LENGTH),
        "mm" => (1e-3, LENGTH),
        "um" => (1e-6, LENGTH),
        "nm" => (1e-9, LENGTH),
        "s" => (1.0, TIME),
        "ms" => (1e-3, TIME),
        "us" => (1e-6, TIME),
        "ns" => (1e-9, TIME),
        "kg/m3" => (1.0, DENSITY),
        "g/cm3" => (1e3, DENSITY),
        "J" => (1.0, ENERGY),
        other => return Err(Error::UnknownUnit(other.to_string())),
    };
    Ok(u)
}

fn positive(q: Quantity, expected: Dimension, name: &'static str) -> Result<f64> {
    let v = q.expect(expected)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be positive, got {v:e}")))
    }
}

/// Reduction time `hbar G^-1 M^-5/3 rho^-1/3`.
pub fn tau_g(consts: &PhysConstants, mass: Quantity, density: Quantity) -> Result<Quantity> {
    positive(mass, MASS, "mass")?;
    positive(density, DENSITY, "density")?;
    let t = consts.hbar() / consts.gravity() * mass.powr(-5, 3)? * density.powr(-1, 3)?;
    t.expect(TIME)?;
    Ok(t)
}

/// [`tau_g`] on raw SI values.
pub fn tau_g_si(consts: &PhysConstants, mass_kg: f64, density: f64) -> Result<f64> {
    tau_g(consts, Quantity::mass(mass_kg), Quantity::density(density)).map(|q| q.value)
}

/// Width `(m_p/M)^{1/2}` cm of the localized states a body of mass `M`
/// reduces to.
pub fn localization_width(consts: &PhysConstants, mass: Quantity) -> Result<Quantity> {
    positive(mass, MASS, "mass")?;
    let ratio = consts.proton_mass() / mass;
    let w = ratio.powr(1, 2)? * Quantity::length(1e-2);
    w.expect(LENGTH)?;
    Ok(w)
}

pub fn localization_width_si(consts: &PhysConstants, mass_kg: f64) -> Result<f64> {
    localization_width(consts, Quantity::mass(mass_kg)).map(|q| q.value)
}

/// `M >= 1e11 m_p`.
pub fn above_threshold(consts: &PhysConstants, mass: Quantity) -> Result<bool> {
    above_threshold_with(consts, mass, LOCALIZATION_THRESHOLD_MP)
}

pub fn above_threshold_with(
    consts: &PhysConstants,
    mass: Quantity,
    threshold_mp: f64,
) -> Result<bool> {
    let m = positive(mass, MASS, "mass")?;
    Ok(m >= threshold_mp * consts.m_p)
}

/// Radius of a homogeneous sphere of mass `M` and density `rho`.
pub fn sphere_radius(mass_kg: f64, density: f64) -> f64 {
    (3.0 * mass_kg / (4.0 * std::f64::consts::PI * density)).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: PhysConstants = PhysConstants::CODATA;

    #[test]
    fn sand_grain_reduction_time() {
        let t = tau_g_si(&C, 1e-9, 2000.0).unwrap();
        assert!(t > 1e-10 && t < 1.3e-10, "{t:e}");
    }

    #[test]
    fn tau_g_mass_exponent() {
        let t1 = tau_g_si(&C, 1e-12, 1000.0).unwrap();
        let t2 = tau_g_si(&C, 1e-12 * 2f64.powf(-0.6), 1000.0).unwrap();
        assert!((t2 / t1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tau_g_two_unit_systems() {
        // SI: hbar/G * M^-5/3 rho^-1/3
        let m = 1e11 * C.m_p;
        let si = tau_g_si(&C, m, 1000.0).unwrap();
        // cgs by hand: hbar = 1.054571817e-27 erg s, G = 6.6743e-8 cm^3 g^-1 s^-2,
        // M in g, rho = 1 g/cm^3
        let m_g = m * 1e3;
        let cgs = 1.054_571_817e-27 / 6.674_30e-8 * m_g.powf(-5.0 / 3.0) * 1.0f64.powf(-1.0 / 3.0);
        assert!((si / cgs - 1.0).abs() < 1e-12, "{si:e} vs {cgs:e}");
        // frozen regression value
        assert!((si / 31.117_698_044 - 1.0).abs() < 1e-6, "{si:e}");
    }

    #[test]
    fn tau_g_rejects_bad_inputs() {
        assert!(tau_g_si(&C, 0.0, 1.0).is_err());
        assert!(tau_g_si(&C, 1.0, -1.0).is_err());
        let err = tau_g(&C, Quantity::length(1.0), Quantity::density(1.0)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn tau_g_monotone() {
        let a = tau_g_si(&C, 1e-10, 1000.0).unwrap();
        assert!(tau_g_si(&C, 2e-10, 1000.0).unwrap() < a);
        assert!(tau_g_si(&C, 1e-10, 2000.0).unwrap() < a);
    }

    #[test]
    fn localization_widths() {
        let w = |mp: f64| localization_width_si(&C, mp * C.m_p).unwrap();
        assert!((w(1.0) - 1e-2).abs() < 1e-15);
        assert!((w(1e12) / 1e-8 - 1.0).abs() < 1e-12);
        assert!((w(4.0) - 0.5e-2).abs() < 1e-15);
        assert!(w(10.0) < w(1.0));
        assert!(localization_width_si(&C, 0.0).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        let q = |mp: f64| Quantity::mass(mp * C.m_p);
        assert!(above_threshold(&C, q(1e12)).unwrap());
        assert!(!above_threshold(&C, q(1.0)).unwrap());
        assert!(above_threshold(&C, q(1e11)).unwrap());
        assert!(!above_threshold_with(&C, q(1e11), 1e12).unwrap());
    }

    #[test]
    fn mismatched_addition_rejected() {
        let e = Quantity::mass(1.0).try_add(Quantity::length(1.0));
        assert!(e.is_err());
        assert_eq!(
            Quantity::time(1.0).try_sub(Quantity::time(0.5)).unwrap(),
            Quantity::time(0.5)
        );
    }

    #[test]
    fn parses_mixed_units() {
        let q = parse_quantity("1e-6g", &C).unwrap();
        assert_eq!(q.dim, MASS);
        assert!((q.value - 1e-9).abs() < 1e-24);
        let r = parse_quantity("2g/cm3", &C).unwrap();
        assert_eq!(r, Quantity::density(2000.0));
        let p = parse_quantity("1e12mp", &C).unwrap();
        assert!((p.value / (1e12 * C.m_p) - 1.0).abs() < 1e-15);
        assert_eq!(parse_quantity("3 cm", &C).unwrap(), Quantity::length(0.03));
        assert_eq!(parse_quantity("10", &C).unwrap(), Quantity::scalar(10.0));
        assert!(matches!(parse_quantity("2 furlong", &C), Err(Error::UnknownUnit(_))));
        assert!(parse_quantity("kg", &C).is_err());
    }

    #[test]
    fn dimension_display() {
        assert_eq!(TIME.to_string(), "time");
        assert_eq!(Dimension::new(-5, 0, 0).to_string(), "kg^(-5/6)");
        assert_eq!(MASS.pow(-5, 3).unwrap(), Dimension::new(-10, 0, 0));
        assert!(Dimension::new(1, 0, 0).pow(1, 2).is_none());
    }
}
