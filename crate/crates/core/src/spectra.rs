//! Bit-flip energy multisets and their statistics.

use std::fmt;

use rayon::prelude::*;

use crate::electrostatics::{bit_polarization, FlipCoefficients};
use crate::error::{Error, Result};
use crate::geometry::Group;
use crate::reduce::tree_sum_by;
use serde::{Deserialize, Serialize};

/// Largest word width that may be enumerated explicitly.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

const MAX_DEFAULT_BINS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipSource {
    SingleFlipA,
    SingleFlipB,
    DoubleFlip,
}

impl fmt::Display for FlipSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlipSource::SingleFlipA => "single-flip-A",
            FlipSource::SingleFlipB => "single-flip-B",
            FlipSource::DoubleFlip => "double-flip",
        })
    }
}

/// The coefficient list that generates a given multiset.
pub fn coefficients_for(coeffs: &FlipCoefficients, which: FlipSource) -> &[f64] {
    match which {
        FlipSource::SingleFlipA => coeffs.local(Group::A),
        FlipSource::SingleFlipB => coeffs.local(Group::B),
        FlipSource::DoubleFlip => &coeffs.eta,
    }
}

/// Fully enumerated energies; `values[p]` belongs to word `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMultiset {
    pub values: Vec<f64>,
    pub source: FlipSource,
}

/// Signed sums `Σ_k P(bit k of x)·eta[k]` for every `x < 2^len`, each
/// accumulated in index order.
fn signed_sums(eta: &[f64]) -> Vec<f64> {
    (0..1usize << eta.len())
        .map(|x| {
            eta.iter()
                .enumerate()
                .map(|(k, e)| bit_polarization(x, k) * e)
                .sum()
        })
        .collect()
}

/// Enumerate `Σ_k P(bit k of p)·η[k]` over all `2^W` words. The low and
/// high halves of each word are summed separately in a fixed order and then
/// added, so the value of the bitwise complement of `p` is exactly the
/// negation of the value of `p`.
pub fn enumerate_flip_energies(
    coeffs: &FlipCoefficients,
    which: FlipSource,
    cap: usize,
) -> Result<EnergyMultiset> {
    let eta = coefficients_for(coeffs, which);
    enumerate_signed_sums(eta, cap).map(|values| EnergyMultiset {
        values,
        source: which,
    })
}

pub fn enumerate_signed_sums(eta: &[f64], cap: usize) -> Result<Vec<f64>> {
    let w = eta.len();
    if w > cap {
        return Err(Error::CapExceeded {
            what: "word width for explicit enumeration",
            requested: w,
            limit: cap,
        });
    }
    let lo_bits = w / 2;
    let lo = signed_sums(&eta[..lo_bits]);
    let hi = signed_sums(&eta[lo_bits..]);
    let mut values = vec![0.0; 1usize << w];
    values
        .par_chunks_mut(lo.len())
        .zip(hi.par_iter())
        .for_each(|(chunk, &h)| {
            for (v, &l) in chunk.iter_mut().zip(&lo) {
                *v = l + h;
            }
        });
    Ok(values)
}

/// Exact RMS of the full `2^W` multiset: the cross terms average to zero.
pub fn rms_from_coefficients(coeffs: &FlipCoefficients, which: FlipSource) -> f64 {
    rms_of(coefficients_for(coeffs, which))
}

pub fn rms_of(eta: &[f64]) -> f64 {
    eta.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Raw moment `⟨E^k⟩` of an explicit multiset.
pub fn moments(ms: &EnergyMultiset, k: u32) -> f64 {
    raw_moment(&ms.values, k)
}

pub fn raw_moment(values: &[f64], k: u32) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let k = k as i32;
    tree_sum_by(values.len(), |i| values[i].powi(k)) / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub rms: f64,
    pub third: f64,
    pub count: usize,
}

impl Moments {
    pub fn of(ms: &EnergyMultiset) -> Self {
        let second = moments(ms, 2);
        Moments {
            mean: moments(ms, 1),
            rms: second.sqrt(),
            third: moments(ms, 3),
            count: ms.values.len(),
        }
    }

    pub fn raw_moment(&self, ms: &EnergyMultiset, k: u32) -> f64 {
        moments(ms, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `⌈√n⌉` bins, at most 101.
pub fn default_bin_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, MAX_DEFAULT_BINS)
}

/// Equal-width bins over `[min, max]`; the last bin includes `max`. An
/// all-equal multiset lands in one bin of unit width around its value.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if values.is_empty() {
        return Err(Error::Domain("histogram of an empty multiset".into()));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if min == max {
        return Ok(Histogram {
            bin_edges: vec![min - 0.5, min + 0.5],
            counts: vec![values.len() as u64],
        });
    }
    let width = (max - min) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins)
        .map(|i| {
            if i == n_bins {
                max
            } else {
                min + width * i as f64
            }
        })
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let i = (((v - min) / width).floor() as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { bin_edges, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl GaussianFit {
    pub fn eval(&self, e: f64) -> f64 {
        self.amplitude * (-(e - self.mean).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Least-squares amplitude of `A·exp(−(E − mean)²/2σ²)` against the bin
/// counts, with mean and width held fixed.
pub fn gaussian_fit_amplitude(h: &Histogram, mean: f64, sigma: f64) -> Result<GaussianFit> {
    let weights: Vec<f64> = h.counts.iter().map(|&n| n as f64).collect();
    let amplitude = least_squares_amplitude(&h.centers(), &weights, mean, sigma)?;
    Ok(GaussianFit {
        amplitude,
        mean,
        sigma,
    })
}

/// `A = Σ wᵢuᵢ / Σ uᵢ²` with `uᵢ = exp(−(xᵢ − mean)²/2σ²)`; zero when every
/// `uᵢ` underflows.
pub fn least_squares_amplitude(x: &[f64], w: &[f64], mean: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "gaussian width must be > 0, got {sigma}"
        )));
    }
    let (num, den) = x.iter().zip(w).fold((0.0, 0.0), |(num, den), (&c, &n)| {
        let u = (-(c - mean).powi(2) / (2.0 * sigma * sigma)).exp();
        (num + n * u, den + u * u)
    });
    Ok(if den > 0.0 { (num / den).max(0.0) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(eta: &[f64]) -> FlipCoefficients {
        FlipCoefficients::from_local(eta, &[])
    }

    #[test]
    fn hand_enumeration() {
        let ms = enumerate_flip_energies(&coeffs(&[3.0, 4.0]), FlipSource::DoubleFlip, 24).unwrap();
        // word 0: -3-4, word 1: +3-4, word 2: -3+4, word 3: +3+4
        assert_eq!(ms.values, vec![-7.0, -1.0, 1.0, 7.0]);
        let ms = enumerate_flip_energies(&coeffs(&[]), FlipSource::DoubleFlip, 24).unwrap();
        assert_eq!(ms.values, vec![0.0]);
    }

    #[test]
    fn cap_is_enforced() {
        let eta = vec![1.0; 5];
        match enumerate_flip_energies(&coeffs(&eta), FlipSource::DoubleFlip, 4) {
            Err(Error::CapExceeded {
                limit: 4,
                requested: 5,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complement_is_exact_negation() {
        let eta: Vec<f64> = (0..13)
            .map(|k| ((k as f64) * 1.7).sin() * 0.03 + 1e-3)
            .collect();
        let v = enumerate_signed_sums(&eta, 24).unwrap();
        let full = v.len() - 1;
        for p in 0..v.len() {
            assert_eq!(v[full ^ p], -v[p]);
        }
    }

    #[test]
    fn rms_closed_form() {
        let c = coeffs(&[3.0, 4.0]);
        assert_eq!(rms_from_coefficients(&c, FlipSource::DoubleFlip), 5.0);
        let ms = enumerate_flip_energies(&c, FlipSource::DoubleFlip, 24).unwrap();
        assert!(
            (moments(&ms, 2).sqrt() - ((49.0 + 49.0 + 1.0 + 1.0) / 4.0f64).sqrt()).abs() < 1e-15
        );
        assert_eq!(
            rms_from_coefficients(&coeffs(&[-2.5]), FlipSource::DoubleFlip),
            2.5
        );
    }

    #[test]
    fn small_moments() {
        let ms = |v: Vec<f64>| EnergyMultiset {
            values: v,
            source: FlipSource::DoubleFlip,
        };
        assert_eq!(moments(&ms(vec![1.0, -1.0]), 2), 1.0);
        assert_eq!(moments(&ms(vec![1.0, -1.0]), 3), 0.0);
        assert_eq!(moments(&ms(vec![7.0, -7.0, 1.0, -1.0]), 2), 25.0);
    }

    #[test]
    fn binning() {
        let h = histogram(&[0.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(h.counts, vec![3]);
        let h = histogram(&[0.0, 0.0, 0.0], 5).unwrap();
        assert_eq!(h.counts, vec![3]);
        let h = histogram(&[-7.0, -1.0, 1.0, 7.0], 2).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        let v: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0)
            .collect();
        let h = histogram(&v, 17).unwrap();
        assert_eq!(h.total(), 1000);
        assert!(h.bin_edges.windows(2).all(|w| w[1] > w[0]));
        assert!(histogram(&v, 0).is_err());
    }

    #[test]
    fn default_bins() {
        assert_eq!(default_bin_count(1), 1);
        assert_eq!(default_bin_count(100), 10);
        assert_eq!(default_bin_count(101), 11);
        assert_eq!(default_bin_count(1 << 20), 101);
    }

    fn centers_hist(counts: Vec<u64>) -> Histogram {
        let n = counts.len();
        Histogram {
            bin_edges: (0..=n).map(|i| -3.0 + 6.0 * i as f64 / n as f64).collect(),
            counts,
        }
    }

    #[test]
    fn fit_recovers_exact_amplitude() {
        let x: Vec<f64> = (0..12).map(|i| -3.0 + 0.5 * i as f64).collect();
        let a0 = 1234.5;
        let w: Vec<f64> = x
            .iter()
            .map(|c| a0 * (-(c - 0.2f64).powi(2) / (2.0 * 0.8 * 0.8)).exp())
            .collect();
        let a = least_squares_amplitude(&x, &w, 0.2, 0.8).unwrap();
        assert!((a - a0).abs() / a0 < 1e-12);

        let zero = gaussian_fit_amplitude(&centers_hist(vec![0; 12]), 0.0, 1.0).unwrap();
        assert_eq!(zero.amplitude, 0.0);
        assert!(gaussian_fit_amplitude(&centers_hist(vec![0; 3]), 0.0, 0.0).is_err());
        // mean far outside the range underflows every basis value
        let far = gaussian_fit_amplitude(&centers_hist(vec![5; 12]), 1e6, 1.0).unwrap();
        assert_eq!(far.amplitude, 0.0);
    }

    #[test]
    fn fit_minimizes_squared_error() {
        let h = centers_hist(vec![3, 9, 20, 41, 70, 88, 95, 72, 44, 25, 8, 2]);
        let (mean, sigma) = (0.1, 1.1);
        let fit = gaussian_fit_amplitude(&h, mean, sigma).unwrap();
        let cost = |a: f64| -> f64 {
            h.centers()
                .iter()
                .zip(&h.counts)
                .map(|(&c, &n)| {
                    let u = (-(c - mean).powi(2) / (2.0 * sigma * sigma)).exp();
                    (n as f64 - a * u).powi(2)
                })
                .sum()
        };
        // golden-section search on [0, 500]
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0f64, 500.0f64);
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if cost(x1) < cost(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!(
            (fit.amplitude - oracle).abs() < 1e-9 * oracle.max(1.0),
            "{} vs {oracle}",
            fit.amplitude
        );
    }
}
