//! Two-qubit correlation functions: Bell–Mermin, CHSH and BPRV.
//!
//! For the family `ρ(c) = ½(|00⟩⟨00| + |11⟩⟨11|) + ½c(|00⟩⟨11| + h.c.)` the
//! three functions reduce to `9/8 − 3c/8`, `√2·|1 + c|` and `6 + 3c/2`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::ReducedDensity;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Bm,
    Chsh,
    Bprv,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Bm, Measure::Chsh, Measure::Bprv];

    pub fn column(self) -> &'static str {
        match self {
            Measure::Bm => "S_BM",
            Measure::Chsh => "S_CHSH",
            Measure::Bprv => "S_BPRV",
        }
    }

    /// Closed form for the Bell-diagonal family with coherence factor `c`.
    pub fn closed(self, c: f64) -> CorrelationValue {
        match self {
            Measure::Bm => s_bm_closed(c),
            Measure::Chsh => s_chsh_closed(c),
            Measure::Bprv => s_bprv_closed(c),
        }
    }

    pub fn violated(self, value: f64) -> bool {
        match self {
            Measure::Bm => value <= 1.0,
            Measure::Chsh => value > 2.0,
            Measure::Bprv => value > 7.0,
        }
    }

    /// The classical boundary of each measure.
    pub fn threshold(self) -> f64 {
        match self {
            Measure::Bm => 1.0,
            Measure::Chsh => 2.0,
            Measure::Bprv => 7.0,
        }
    }

    /// Coherence factor at which the closed form reaches its threshold.
    pub fn boundary_coherence(self) -> f64 {
        match self {
            Measure::Bm => 1.0 / 3.0,
            Measure::Chsh => SQRT_2 - 1.0,
            Measure::Bprv => 2.0 / 3.0,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Bm => "bm",
            Measure::Chsh => "chsh",
            Measure::Bprv => "bprv",
        })
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bm" => Ok(Measure::Bm),
            "chsh" => Ok(Measure::Chsh),
            "bprv" => Ok(Measure::Bprv),
            other => Err(Error::config(
                "measures",
                format!("unknown measure {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationValue {
    pub value: f64,
    pub violated: bool,
}

impl CorrelationValue {
    fn new(measure: Measure, value: f64) -> Self {
        CorrelationValue {
            value,
            violated: measure.violated(value),
        }
    }
}

/// Which angle pairs enter the Bell–Mermin "same outcome" operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSummation {
    /// The three pairs `i < j`.
    #[default]
    Unordered,
    /// All six pairs `i ≠ j`; exactly twice the unordered value.
    Ordered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshDirections {
    pub a: Vec3,
    pub a_prime: Vec3,
    pub b: Vec3,
    pub b_prime: Vec3,
}

impl Default for ChshDirections {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ChshDirections {
            a: Vec3::Z,
            a_prime: Vec3::X,
            b: Vec3::new(h, 0.0, h),
            b_prime: Vec3::new(-h, 0.0, h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSettings {
    pub bm_angles: [f64; 3],
    pub bm_pairs: PairSummation,
    pub chsh: ChshDirections,
}

impl Default for MeasurementSettings {
    fn default() -> Self {
        MeasurementSettings {
            bm_angles: [0.0, PI / 3.0, 2.0 * PI / 3.0],
            bm_pairs: PairSummation::Unordered,
            chsh: ChshDirections::default(),
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `cos θ·I + sin θ·(|0⟩⟨1| − |1⟩⟨0|)`.
fn rotation(theta: f64) -> Matrix2<Complex64> {
    let (s, co) = theta.sin_cos();
    Matrix2::new(c(co), c(s), c(-s), c(co))
}

/// `R(θ)|m⟩⟨m|R(−θ)`.
fn rotated_projector(theta: f64, m: usize) -> Matrix2<Complex64> {
    let mut proj = Matrix2::zeros();
    proj[(m, m)] = c(1.0);
    rotation(theta) * proj * rotation(-theta)
}

/// The "same outcome" operator summed over the configured angle pairs.
pub fn p_same(settings: &MeasurementSettings) -> Matrix4<Complex64> {
    let th = settings.bm_angles;
    let mut op = Matrix4::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let take = match settings.bm_pairs {
                PairSummation::Unordered => i < j,
                PairSummation::Ordered => i != j,
            };
            if !take {
                continue;
            }
            for m in 0..2 {
                let k = rotated_projector(th[i], m).kronecker(&rotated_projector(th[j], m));
                op += k;
            }
        }
    }
    op
}

/// `Tr(ρ P_same)`.
pub fn s_bm_generic(rho: &ReducedDensity, settings: &MeasurementSettings) -> CorrelationValue {
    let v = (rho.rho * p_same(settings)).trace().re;
    CorrelationValue::new(Measure::Bm, v)
}

pub fn s_bm_closed(c: f64) -> CorrelationValue {
    CorrelationValue::new(Measure::Bm, 9.0 / 8.0 - 3.0 / 8.0 * c)
}

fn sigma_dot(u: Vec3) -> Matrix2<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    Matrix2::new(c(u.z), c(u.x) - i * u.y, c(u.x) + i * u.y, c(-u.z))
}

/// `Tr(ρ (u·σ)⊗(v·σ))`.
pub fn correlator(rho: &ReducedDensity, u: Vec3, v: Vec3) -> f64 {
    (rho.rho * sigma_dot(u).kronecker(&sigma_dot(v))).trace().re
}

/// `|E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)|` at the fixed settings.
pub fn s_chsh_fixed(rho: &ReducedDensity, settings: &MeasurementSettings) -> CorrelationValue {
    let d = &settings.chsh;
    let v = correlator(rho, d.a, d.b)
        + correlator(rho, d.a, d.b_prime)
        + correlator(rho, d.a_prime, d.b)
        - correlator(rho, d.a_prime, d.b_prime);
    CorrelationValue::new(Measure::Chsh, v.abs())
}

pub fn s_chsh_closed(c: f64) -> CorrelationValue {
    CorrelationValue::new(Measure::Chsh, SQRT_2 * (1.0 + c).abs())
}

pub fn s_bprv_closed(c: f64) -> CorrelationValue {
    CorrelationValue::new(Measure::Bprv, 6.0 + 1.5 * c)
}

/// `|⟨00|ρ(t)|11⟩| / |⟨00|ρ(0)|11⟩|`.
pub fn coherence_ratio(rho_t: &ReducedDensity, rho_0: &ReducedDensity) -> Result<f64> {
    let c0 = rho_0.coherence().norm();
    if c0 == 0.0 {
        return Err(Error::Domain(
            "initial state has no |00⟩⟨11| coherence".into(),
        ));
    }
    Ok(rho_t.coherence().norm() / c0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(c: f64) -> ReducedDensity {
        ReducedDensity::bell_family(Complex64::new(c, 0.0))
    }

    #[test]
    fn bell_mermin_endpoints() {
        let s = MeasurementSettings::default();
        assert!((s_bm_generic(&rho(1.0), &s).value - 0.75).abs() < 1e-15);
        assert!((s_bm_generic(&rho(0.0), &s).value - 1.125).abs() < 1e-15);
        assert!((s_bm_generic(&rho(0.5), &s).value - 0.9375).abs() < 1e-15);
        assert!(s_bm_generic(&rho(1.0), &s).violated);
        assert!(!s_bm_generic(&rho(0.0), &s).violated);
        assert_eq!(s_bm_closed(1.0).value, 0.75);
        assert_eq!(s_bm_closed(0.0).value, 1.125);
    }

    #[test]
    fn ordered_pairs_double() {
        let ord = MeasurementSettings {
            bm_pairs: PairSummation::Ordered,
            ..Default::default()
        };
        for c in [-1.0, 0.0, 0.3, 1.0] {
            let u = s_bm_generic(&rho(c), &MeasurementSettings::default()).value;
            assert!((s_bm_generic(&rho(c), &ord).value - 2.0 * u).abs() < 1e-14);
        }
    }

    #[test]
    fn chsh_endpoints() {
        let s = MeasurementSettings::default();
        assert!((s_chsh_fixed(&rho(1.0), &s).value - 2.0 * SQRT_2).abs() < 1e-15);
        assert!((s_chsh_fixed(&rho(0.0), &s).value - SQRT_2).abs() < 1e-15);
        assert_eq!(s_chsh_closed(-1.0).value, 0.0);
        for c in [-0.8, -0.2, 0.4, 0.77] {
            assert!((s_chsh_fixed(&rho(c), &s).value - SQRT_2 * (1.0 + c).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn bprv_values() {
        assert_eq!(s_bprv_closed(1.0).value, 7.5);
        assert_eq!(s_bprv_closed(0.0).value, 6.0);
        assert!(!s_bprv_closed(2.0 / 3.0).violated);
        assert!(s_bprv_closed(2.0 / 3.0 + 1e-9).violated);
    }

    #[test]
    fn boundaries_solve_closed_forms() {
        for m in Measure::ALL {
            let v = m.closed(m.boundary_coherence()).value;
            assert!((v - m.threshold()).abs() < 1e-15, "{m}");
        }
    }

    #[test]
    fn ratio() {
        let r0 = rho(1.0);
        assert_eq!(coherence_ratio(&r0, &r0).unwrap(), 1.0);
        assert!((coherence_ratio(&rho(-0.4), &r0).unwrap() - 0.4).abs() < 1e-15);
        assert!(coherence_ratio(&r0, &rho(0.0)).is_err());
    }
}
