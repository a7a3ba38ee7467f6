//! The three models of the two-qubit reduced density matrix.
//!
//! * numerical: the full `4·2^N` state vector evolved under the diagonal
//!   Hamiltonian and traced over the environment;
//! * exact: the coherence factor `c(t) = 2^{-N} Σ_p exp(−i E^flip(p) t/ħ)`,
//!   evaluated as the product `Π_k cos(η_k t/ħ)`;
//! * gaussian: `c(t) = exp(−ω_rms² t²/2)`.
//!
//! All three share the same block structure: populations stay at ½ on
//! |00⟩ and |11⟩ and only the |00⟩⟨11| coherence evolves.

use std::fmt;
use std::ops::Range;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electrostatics::{EnergyTable, FlipCoefficients};
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::reduce::tree_reduce;
use crate::rng::phase_rng;
use crate::spectra::{enumerate_signed_sums, rms_from_coefficients, FlipSource};

/// Largest environment the state-vector model accepts by default.
pub const DEFAULT_STATE_VECTOR_CAP: usize = 22;

const IMAG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Numerical,
    Exact,
    Gaussian,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Numerical => "numerical",
            Model::Exact => "exact",
            Model::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numerical" => Ok(Model::Numerical),
            "exact" => Ok(Model::Exact),
            "gaussian" => Ok(Model::Gaussian),
            other => Err(Error::config("models", format!("unknown model {other:?}"))),
        }
    }
}

/// Closed-form models that need only the flip coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticModel {
    Exact,
    Gaussian,
}

/// Relative phases `φ_k ∈ [0, 2π)` of the environment's initial superposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAssignment {
    pub phases: Vec<f64>,
}

impl PhaseAssignment {
    /// Phases drawn from the scene seed's phase stream.
    pub fn draw(seed: u64, n_env: usize) -> Self {
        Self::draw_from(&mut phase_rng(seed), n_env)
    }

    pub fn draw_from<R: Rng + ?Sized>(rng: &mut R, n_env: usize) -> Self {
        let tau = std::f64::consts::TAU;
        PhaseAssignment {
            phases: (0..n_env).map(|_| rng.random::<f64>() * tau).collect(),
        }
    }

    pub fn zeros(n_env: usize) -> Self {
        PhaseAssignment {
            phases: vec![0.0; n_env],
        }
    }

    /// `Φ(p) = Σ_k [p]_k·φ_k`.
    pub fn total_phase(&self, p: usize) -> f64 {
        self.phases
            .iter()
            .enumerate()
            .filter(|(k, _)| (p >> k) & 1 == 1)
            .map(|(_, phi)| phi)
            .sum()
    }
}

/// Global state vector indexed by `s = p + 2^N·(2·m_A + m_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    pub amplitudes: Vec<Complex64>,
    pub n_env: usize,
}

impl GlobalState {
    pub fn index(&self, m_a: u8, m_b: u8, p: usize) -> usize {
        p + (1usize << self.n_env) * (2 * m_a as usize + m_b as usize)
    }

    pub fn amplitude(&self, m_a: u8, m_b: u8, p: usize) -> Complex64 {
        self.amplitudes[self.index(m_a, m_b, p)]
    }

    pub fn norm_sqr(&self) -> f64 {
        let a = &self.amplitudes;
        tree_reduce(
            a.len(),
            0.0,
            &|r: Range<usize>| a[r].iter().map(|z| z.norm_sqr()).sum::<f64>(),
            &|x, y| x + y,
        )
    }
}

/// Bell pair times the environment's product of equal superpositions.
pub fn init_global_state(
    scene: &Scene,
    phases: &PhaseAssignment,
    cap: usize,
) -> Result<GlobalState> {
    init_state(scene.n_env(), phases, cap)
}

pub fn init_state(n_env: usize, phases: &PhaseAssignment, cap: usize) -> Result<GlobalState> {
    if n_env > cap {
        return Err(Error::CapExceeded {
            what: "environment size for the state vector",
            requested: n_env,
            limit: cap,
        });
    }
    if phases.phases.len() != n_env {
        return Err(Error::Domain(format!(
            "{} phases supplied for {n_env} environment molecules",
            phases.phases.len()
        )));
    }
    let size = 1usize << n_env;
    let scale = std::f64::consts::FRAC_1_SQRT_2 / (size as f64).sqrt();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 4 * size];
    let env: Vec<Complex64> = (0..size)
        .into_par_iter()
        .map(|p| Complex64::from_polar(scale, phases.total_phase(p)))
        .collect();
    amplitudes[..size].copy_from_slice(&env);
    amplitudes[3 * size..].copy_from_slice(&env);
    Ok(GlobalState { amplitudes, n_env })
}

/// Multiply every amplitude by `exp(−i E t/ħ)`, with `E` from the energy table.
pub fn evolve_numerical(
    state: &GlobalState,
    table: &EnergyTable,
    t: f64,
    hbar: f64,
) -> Result<GlobalState> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!(
            "evolution time must be >= 0, got {t}"
        )));
    }
    if table.n_env() != state.n_env {
        return Err(Error::Domain("energy table and state disagree on N".into()));
    }
    let amplitudes = state
        .amplitudes
        .par_iter()
        .zip(table.energies().par_iter())
        .map(|(&a, &e)| {
            if a == Complex64::new(0.0, 0.0) {
                a
            } else {
                a * Complex64::from_polar(1.0, -e * t / hbar)
            }
        })
        .collect();
    Ok(GlobalState {
        amplitudes,
        n_env: state.n_env,
    })
}

/// Partial trace over the environment.
pub fn reduce_to_ab(state: &GlobalState) -> ReducedDensity {
    let size = 1usize << state.n_env;
    let amps = &state.amplitudes;
    let zero = [Complex64::new(0.0, 0.0); 16];
    let acc = tree_reduce(
        size,
        zero,
        &|r: Range<usize>| {
            let mut acc = zero;
            for p in r {
                let col = [
                    amps[p],
                    amps[p + size],
                    amps[p + 2 * size],
                    amps[p + 3 * size],
                ];
                for i in 0..4 {
                    for j in 0..4 {
                        acc[4 * i + j] += col[i] * col[j].conj();
                    }
                }
            }
            acc
        },
        &|mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    ReducedDensity {
        rho: Matrix4::from_row_slice(&acc),
    }
}

/// Density matrix of the target pair in the basis |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    pub rho: Matrix4<Complex64>,
}

impl ReducedDensity {
    /// `½(|00⟩⟨00| + |11⟩⟨11|) + ½(c|00⟩⟨11| + c*|11⟩⟨00|)`.
    pub fn bell_family(c: Complex64) -> Self {
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(3, 3)] = Complex64::new(0.5, 0.0);
        rho[(0, 3)] = 0.5 * c;
        rho[(3, 0)] = 0.5 * c.conj();
        ReducedDensity { rho }
    }

    pub fn bell_projector() -> Self {
        Self::bell_family(Complex64::new(1.0, 0.0))
    }

    /// `⟨00|ρ|11⟩`.
    pub fn coherence(&self) -> Complex64 {
        self.rho[(0, 3)]
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn max_abs_diff(&self, other: &ReducedDensity) -> f64 {
        (self.rho - other.rho)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Hermitian, unit trace and positive semidefinite.
    pub fn check(&self) -> Result<()> {
        let herm = (self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::Invariant(format!(
                "ρ_AB not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Invariant(format!("Tr ρ_AB = {tr}")));
        }
        let min_eig = self
            .rho
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::Invariant(format!("ρ_AB has eigenvalue {min_eig:e}")));
        }
        Ok(())
    }
}

/// `2^{-N} Σ_p exp(−i E^flip(p) t/ħ)` by explicit enumeration; fails if the
/// imaginary part exceeds 1e-10.
pub fn coherence_brute(coeffs: &FlipCoefficients, t: f64, hbar: f64, cap: usize) -> Result<f64> {
    let energies = enumerate_signed_sums(&coeffs.eta, cap)?;
    let zero = Complex64::new(0.0, 0.0);
    let sum = tree_reduce(
        energies.len(),
        zero,
        &|r: Range<usize>| {
            energies[r]
                .iter()
                .map(|e| Complex64::from_polar(1.0, -e * t / hbar))
                .fold(zero, |a, b| a + b)
        },
        &|a, b| a + b,
    ) / energies.len() as f64;
    if sum.im.abs() > IMAG_TOLERANCE {
        return Err(Error::Invariant(format!(
            "coherence sum has imaginary part {:e} at t = {t}",
            sum.im
        )));
    }
    Ok(sum.re)
}

/// `Π_k cos(η_k t/ħ)`.
pub fn coherence_factorized(coeffs: &FlipCoefficients, t: f64, hbar: f64) -> f64 {
    coeffs.eta.iter().map(|e| (e * t / hbar).cos()).product()
}

/// `ω_rms = E^flip_rms/ħ`.
pub fn omega_rms(coeffs: &FlipCoefficients, hbar: f64) -> f64 {
    rms_from_coefficients(coeffs, FlipSource::DoubleFlip) / hbar
}

/// `exp(−ω_rms² t²/2)`.
pub fn coherence_gaussian(coeffs: &FlipCoefficients, t: f64, hbar: f64) -> f64 {
    let w = omega_rms(coeffs, hbar);
    (-(w * t).powi(2) / 2.0).exp()
}

pub fn coherence(coeffs: &FlipCoefficients, t: f64, hbar: f64, model: AnalyticModel) -> f64 {
    match model {
        AnalyticModel::Exact => coherence_factorized(coeffs, t, hbar),
        AnalyticModel::Gaussian => coherence_gaussian(coeffs, t, hbar),
    }
}

pub fn rho_ab(
    coeffs: &FlipCoefficients,
    t: f64,
    hbar: f64,
    model: AnalyticModel,
) -> ReducedDensity {
    ReducedDensity::bell_family(Complex64::new(coherence(coeffs, t, hbar, model), 0.0))
}

/// The state-vector model prepared once and sampled at arbitrary times.
#[derive(Debug, Clone)]
pub struct NumericalModel {
    pub initial: GlobalState,
    pub table: EnergyTable,
    hbar: f64,
}

impl NumericalModel {
    pub fn new(scene: &Scene, phases: &PhaseAssignment, cap: usize) -> Result<Self> {
        Self::with_options(scene, phases, cap, true)
    }

    /// `include_env_env = false` drops environment–environment pair energies.
    pub fn with_options(
        scene: &Scene,
        phases: &PhaseAssignment,
        cap: usize,
        include_env_env: bool,
    ) -> Result<Self> {
        let initial = init_global_state(scene, phases, cap)?;
        let table = EnergyTable::build(scene, include_env_env, cap)?;
        Ok(NumericalModel {
            initial,
            table,
            hbar: scene.constants.hbar,
        })
    }

    pub fn rho_at(&self, t: f64) -> Result<ReducedDensity> {
        Ok(reduce_to_ab(&evolve_numerical(
            &self.initial,
            &self.table,
            t,
            self.hbar,
        )?))
    }
}

/// Coherence factor sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSeries {
    /// fs
    pub times: Vec<f64>,
    pub c: Vec<f64>,
    /// `|c|`
    pub f: Vec<f64>,
}

impl CoherenceSeries {
    pub fn from_values(times: Vec<f64>, c: Vec<f64>) -> Self {
        let f = c.iter().map(|x| x.abs()).collect();
        CoherenceSeries { times, c, f }
    }

    pub fn analytic(
        coeffs: &FlipCoefficients,
        times: &[f64],
        hbar: f64,
        model: AnalyticModel,
    ) -> Self {
        let c = times
            .par_iter()
            .map(|&t| coherence(coeffs, t, hbar, model))
            .collect();
        Self::from_values(times.to_vec(), c)
    }

    /// Coherences from the state-vector model; every ρ_AB is checked.
    pub fn numerical(model: &NumericalModel, times: &[f64]) -> Result<Self> {
        let mut c = Vec::with_capacity(times.len());
        for &t in times {
            let rho = model.rho_at(t)?;
            rho.check()?;
            c.push(2.0 * rho.coherence().re);
        }
        Ok(Self::from_values(times.to_vec(), c))
    }
}

/// `n` equally spaced points on `[0, t_max]`.
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}
