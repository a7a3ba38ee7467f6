//! Disentanglement time scales: the single-qubit `τ_A`, `τ_B`, their
//! geometric mean `τ = √(τ_A τ_B)`, and `τ_E = πħ/E^flip_rms`.
//!
//! Because A and B do not interact, `E^flip_rms² = E_rms(A)² + E_rms(B)²`,
//! which gives `τ_E/τ = √(E_A E_B)/√(E_A² + E_B²) ≤ 1/√2` with equality
//! exactly when the two single-qubit energies coincide.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::electrostatics::{flip_coefficients, FlipCoefficients};
use crate::error::{Error, Result};
use crate::geometry::{build_scene, SceneConfig};
use crate::rng::derive_seed;
use crate::spectra::{rms_from_coefficients, FlipSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleReport {
    /// fs
    pub tau_a: f64,
    /// fs
    pub tau_b: f64,
    /// `√(τ_A τ_B)`, fs
    pub tau_geo: f64,
    /// fs
    pub tau_e: f64,
    /// eV
    pub e_rms_a: f64,
    /// eV
    pub e_rms_b: f64,
    /// eV
    pub e_rms_flip: f64,
    /// Set when some RMS energy is exactly zero and its time scale infinite.
    pub degenerate: bool,
}

impl TimescaleReport {
    /// `τ_E/τ`, computed from the energies; `None` when either side is infinite.
    pub fn ratio(&self) -> Option<f64> {
        if self.e_rms_a > 0.0 && self.e_rms_b > 0.0 && self.e_rms_flip > 0.0 {
            Some((self.e_rms_a * self.e_rms_b).sqrt() / self.e_rms_flip)
        } else {
            None
        }
    }
}

/// `πħ/E`, or an explicit infinity for `E = 0`.
pub fn time_scale(e_rms: f64, hbar: f64) -> f64 {
    if e_rms == 0.0 {
        f64::INFINITY
    } else {
        PI * hbar / e_rms
    }
}

pub fn timescales(coeffs: &FlipCoefficients, hbar: f64) -> TimescaleReport {
    let e_rms_a = rms_from_coefficients(coeffs, FlipSource::SingleFlipA);
    let e_rms_b = rms_from_coefficients(coeffs, FlipSource::SingleFlipB);
    let e_rms_flip = rms_from_coefficients(coeffs, FlipSource::DoubleFlip);
    let tau_a = time_scale(e_rms_a, hbar);
    let tau_b = time_scale(e_rms_b, hbar);
    let tau_geo = if e_rms_a > 0.0 && e_rms_b > 0.0 {
        PI * hbar / (e_rms_a * e_rms_b).sqrt()
    } else {
        f64::INFINITY
    };
    TimescaleReport {
        tau_a,
        tau_b,
        tau_geo,
        tau_e: time_scale(e_rms_flip, hbar),
        e_rms_a,
        e_rms_b,
        e_rms_flip,
        degenerate: e_rms_a == 0.0 || e_rms_b == 0.0 || e_rms_flip == 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    /// `R_A/R_B`
    pub ratio: f64,
    pub seed: u64,
    pub tau_geo: f64,
    pub tau_e: f64,
}

/// `R_B` for a given `R_A/R_B` ratio, keeping `R_A` fixed.
pub fn config_for_ratio(base: &SceneConfig, ratio: f64, seed: u64) -> SceneConfig {
    SceneConfig {
        r_b: base.r_a / ratio,
        seed,
        ..*base
    }
}

/// `n_per_ratio` scenes per radius ratio. Scene `i` of ratio `j` uses
/// `derive_seed(base.seed, j·n_per_ratio + i)`.
pub fn scatter_ensemble(
    base: &SceneConfig,
    ratios: &[f64],
    n_per_ratio: usize,
    constants: PhysicalConstants,
) -> Result<Vec<ScatterRow>> {
    if n_per_ratio == 0 {
        return Err(Error::config("scatter.n_per_ratio", "must be >= 1"));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::config(
            "scatter.ratios",
            format!("ratio {r} must be finite and > 0"),
        ));
    }
    let jobs: Vec<(f64, u64)> = ratios
        .iter()
        .enumerate()
        .flat_map(|(j, &r)| (0..n_per_ratio).map(move |i| (r, (j * n_per_ratio + i) as u64)))
        .collect();
    jobs.par_iter()
        .map(|&(ratio, idx)| {
            let seed = derive_seed(base.seed, idx);
            let scene = build_scene(&config_for_ratio(base, ratio, seed), constants)?;
            let report = timescales(&flip_coefficients(&scene)?, constants.hbar);
            Ok(ScatterRow {
                ratio,
                seed,
                tau_geo: report.tau_geo,
                tau_e: report.tau_e,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::default_constants;
    use crate::spectra::enumerate_flip_energies;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn tau_e_arithmetic() {
        let hbar = default_constants().hbar;
        assert!((time_scale(0.2, hbar) - 10.339169).abs() < 1e-6);
        assert_eq!(time_scale(0.0, hbar), f64::INFINITY);
    }

    #[test]
    fn pythagorean_example() {
        let fc = FlipCoefficients::from_local(&[3.0], &[4.0]);
        let r = timescales(&fc, 1.0);
        assert_eq!(r.e_rms_flip, 5.0);
        assert!((r.tau_e - PI / 5.0).abs() < 1e-15);
        assert!((r.tau_geo - PI / 12f64.sqrt()).abs() < 1e-15);
        assert!((r.ratio().unwrap() - 12f64.sqrt() / 5.0).abs() < 1e-14);
        assert!((r.tau_e / r.tau_geo - 0.69282032).abs() < 1e-8);
    }

    #[test]
    fn mirrored_coefficients_hit_the_limit() {
        let half = [0.031, -0.012, 0.0047, 0.02, -0.009];
        let fc = FlipCoefficients::from_local(&half, &half);
        let r = timescales(&fc, default_constants().hbar);
        assert!((r.tau_e / r.tau_geo - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_reports_infinity() {
        let r = timescales(&FlipCoefficients::from_local(&[0.0], &[0.0]), 1.0);
        assert!(r.degenerate);
        assert_eq!(r.tau_e, f64::INFINITY);
        assert_eq!(r.tau_geo, f64::INFINITY);
        assert!(r.ratio().is_none());
        let r = timescales(&FlipCoefficients::from_local(&[0.2], &[]), 1.0);
        assert!(r.degenerate);
        assert!(r.tau_e.is_finite());
        assert_eq!(r.tau_b, f64::INFINITY);
    }

    #[test]
    fn scaling_law() {
        let fc = FlipCoefficients::from_local(&[0.03, 0.01], &[-0.05, 0.002]);
        let r = timescales(&fc, 0.658);
        let s = timescales(&fc.scaled(3.0), 0.658);
        for (x, y) in [
            (r.tau_a, s.tau_a),
            (r.tau_b, s.tau_b),
            (r.tau_geo, s.tau_geo),
            (r.tau_e, s.tau_e),
        ] {
            assert!((x / 3.0 - y).abs() < 1e-12 * x);
        }
    }

    /// Complement pairing view: sort the single-flip energies from most
    /// positive down and keep the non-negative first half.
    fn ordered_half_rms(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let half = &v[..v.len() / 2];
        assert!(half.iter().all(|&e| e >= 0.0));
        let m_minus_1 = (values.len() / 2) as f64;
        (half.iter().map(|e| e * e).sum::<f64>() / m_minus_1).sqrt()
    }

    #[test]
    fn ordered_half_matches_full_rms() {
        let scene = build_scene(
            &SceneConfig {
                m: 6,
                seed: 14,
                ..Default::default()
            },
            default_constants(),
        )
        .unwrap();
        let fc = flip_coefficients(&scene).unwrap();
        let hbar = scene.constants.hbar;
        let ms_a = enumerate_flip_energies(&fc, FlipSource::SingleFlipA, 24).unwrap();
        let ms_b = enumerate_flip_energies(&fc, FlipSource::SingleFlipB, 24).unwrap();
        let ea = ordered_half_rms(&ms_a.values);
        let eb = ordered_half_rms(&ms_b.values);
        let r = timescales(&fc, hbar);
        assert!((ea - r.e_rms_a).abs() < 1e-12 * ea);
        assert!((eb - r.e_rms_b).abs() < 1e-12 * eb);

        // tau and tau_E written in terms of the ordered halves
        let mut sa: Vec<f64> = ms_a.values.clone();
        let mut sb: Vec<f64> = ms_b.values.clone();
        sa.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sb.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let h = sa.len() / 2;
        let sum_a: f64 = sa[..h].iter().map(|e| e * e).sum();
        let sum_b: f64 = sb[..h].iter().map(|e| e * e).sum();
        let pref = PI * hbar * (h as f64).sqrt();
        let tau = pref / (sum_a.sqrt() * sum_b.sqrt()).sqrt();
        let tau_e = pref / (sum_a + sum_b).sqrt();
        assert!((tau - r.tau_geo).abs() < 1e-10 * tau);
        assert!((tau_e - r.tau_e).abs() < 1e-10 * tau_e);
    }

    #[test]
    fn scatter_is_deterministic_and_bounded() {
        let base = SceneConfig {
            m: 5,
            seed: 99,
            ..Default::default()
        };
        let rows = scatter_ensemble(&base, &[0.5, 1.0, 2.0], 20, default_constants()).unwrap();
        assert_eq!(rows.len(), 60);
        assert_eq!(
            rows,
            scatter_ensemble(&base, &[0.5, 1.0, 2.0], 20, default_constants()).unwrap()
        );
        for r in &rows {
            assert!(r.tau_e / r.tau_geo <= FRAC_1_SQRT_2 + 1e-12);
        }
        assert!(scatter_ensemble(&base, &[1.0], 0, default_constants()).is_err());
    }

    fn mean_ratio(rows: &[ScatterRow], ratio: f64) -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.ratio == ratio)
            .map(|r| r.tau_e / r.tau_geo)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn equal_radii_sit_near_the_limit() {
        let base = SceneConfig {
            m: 5,
            seed: 5,
            ..Default::default()
        };
        let rows = scatter_ensemble(&base, &[1.0, 0.5], 100, default_constants()).unwrap();
        let equal = mean_ratio(&rows, 1.0);
        assert!((0.6..=0.75).contains(&equal), "{equal}");
        assert!(mean_ratio(&rows, 0.5) < equal);
    }
}
