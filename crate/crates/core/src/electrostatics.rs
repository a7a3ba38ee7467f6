//! Coulomb energies between charge-neutral DQDs and the per-molecule flip
//! coefficients from which every bit-flip energy is built.
//!
//! Each dot carries a fixed +e/2 and the mobile electron sits on one dot, so
//! a DQD in state `m` is a dipole of polarization `P(m) = ±1`. The energy of
//! a pair factors as `P(m_j)·P(m_k)·J_jk` where `J_jk` depends only on
//! geometry.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::geometry::{dot_position, DqdSpec, Group, Scene};

/// Distances below this (nm) are treated as coincident dots.
pub const MIN_DISTANCE_NM: f64 = 1e-9;

/// `P(1) = +1`, `P(0) = -1`.
#[inline]
pub fn polarization(m: u8) -> f64 {
    if m == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Polarization of environment molecule `k` (0-based) in word `p`.
#[inline]
pub fn bit_polarization(p: usize, k: usize) -> f64 {
    if (p >> k) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Geometric coupling `J_jk`: the pair energy with both molecules in state 1.
pub fn pair_coupling(j: &DqdSpec, k: &DqdSpec, constants: &PhysicalConstants) -> Result<f64> {
    let mut bracket = 0.0;
    for (mj, mk, sign) in [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)] {
        let r = dot_position(j, mj).distance(dot_position(k, mk));
        if r.is_nan() || r < MIN_DISTANCE_NM {
            return Err(Error::Geometry(format!(
                "dots {mj} and {mk} of two molecules are {r:e} nm apart"
            )));
        }
        bracket += sign / r;
    }
    Ok(constants.pair_prefactor() * bracket)
}

/// Electrostatic energy (eV) of molecule `j` in state `m_j` with molecule
/// `k` in state `m_k`.
pub fn pair_energy(
    j: &DqdSpec,
    m_j: u8,
    k: &DqdSpec,
    m_k: u8,
    constants: &PhysicalConstants,
) -> Result<f64> {
    Ok(polarization(m_j) * polarization(m_k) * pair_coupling(j, k, constants)?)
}

/// Total energy of the global basis state `|m_A m_B⟩ ⊗ |p⟩`, summed over
/// every unordered pair of interacting molecules. Bit `k` of `env_word`
/// holds environment molecule `k + 1`.
pub fn total_energy(scene: &Scene, m_a: u8, m_b: u8, env_word: usize) -> Result<f64> {
    let n = scene.n_env();
    if n < usize::BITS as usize && env_word >> n != 0 {
        return Err(Error::Domain(format!(
            "environment word {env_word} has bits beyond N = {n}"
        )));
    }
    let state = |j: usize| -> u8 {
        match j {
            0 => m_a,
            1 => m_b,
            k => ((env_word >> (k - 2)) & 1) as u8,
        }
    };
    let mut e = 0.0;
    for j in 0..scene.n_molecules() {
        for k in (j + 1)..scene.n_molecules() {
            if scene.interacts(j, k) {
                e += pair_energy(
                    scene.molecule(j),
                    state(j),
                    scene.molecule(k),
                    state(k),
                    &scene.constants,
                )?;
            }
        }
    }
    Ok(e)
}

/// Symmetric matrix of geometric couplings over all `N + 2` molecules
/// (0 = A, 1 = B, 2.. = environment); non-interacting pairs hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    j: Vec<f64>,
}

impl CouplingMatrix {
    pub fn from_scene(scene: &Scene) -> Result<Self> {
        let n = scene.n_molecules();
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                if scene.interacts(a, b) {
                    let c = pair_coupling(scene.molecule(a), scene.molecule(b), &scene.constants)?;
                    j[a * n + b] = c;
                    j[b * n + a] = c;
                }
            }
        }
        Ok(CouplingMatrix { n, j })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.n + b]
    }

    pub fn n_molecules(&self) -> usize {
        self.n
    }
}

/// Signed per-molecule energies `η` such that the double-bit-flip energy in
/// environment word `p` is `Σ_k P(bit k of p)·η[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipCoefficients {
    /// `2·U^{A,k}_{1,1}` for every environment molecule.
    pub eta_a: Vec<f64>,
    /// `2·U^{B,k}_{1,1}` for every environment molecule.
    pub eta_b: Vec<f64>,
    /// `eta_a + eta_b`.
    pub eta: Vec<f64>,
    /// Molecules `0..split` belong to A's shell, the rest to B's.
    pub split: usize,
}

impl FlipCoefficients {
    /// Coefficients of two decoupled shells: `local_a` for A's molecules and
    /// `local_b` for B's.
    pub fn from_local(local_a: &[f64], local_b: &[f64]) -> Self {
        let split = local_a.len();
        let n = split + local_b.len();
        let mut eta_a = vec![0.0; n];
        let mut eta_b = vec![0.0; n];
        eta_a[..split].copy_from_slice(local_a);
        eta_b[split..].copy_from_slice(local_b);
        let eta = eta_a.iter().zip(&eta_b).map(|(x, y)| x + y).collect();
        FlipCoefficients {
            eta_a,
            eta_b,
            eta,
            split,
        }
    }

    pub fn n_env(&self) -> usize {
        self.eta.len()
    }

    /// Single-flip coefficients of target `g` restricted to its own shell.
    pub fn local(&self, g: Group) -> &[f64] {
        match g {
            Group::A => &self.eta_a[..self.split],
            Group::B => &self.eta_b[self.split..],
        }
    }

    /// Every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sc = |v: &[f64]| v.iter().map(|x| x * s).collect::<Vec<_>>();
        FlipCoefficients {
            eta_a: sc(&self.eta_a),
            eta_b: sc(&self.eta_b),
            eta: sc(&self.eta),
            split: self.split,
        }
    }

    /// `E^flip(p) = Σ_k P(bit k)·η[k]`, summed in index order.
    pub fn flip_energy(&self, p: usize) -> f64 {
        self.eta
            .iter()
            .enumerate()
            .map(|(k, e)| bit_polarization(p, k) * e)
            .sum()
    }
}

/// Flip coefficients of a scene. Environment–environment terms and the A–B
/// term drop out of `E_11 − E_00` exactly, leaving only target–environment
/// couplings.
pub fn flip_coefficients(scene: &Scene) -> Result<FlipCoefficients> {
    let n = scene.n_env();
    let mut eta_a = vec![0.0; n];
    let mut eta_b = vec![0.0; n];
    for k in 0..n {
        let mol = k + 2;
        if scene.interacts(0, mol) {
            eta_a[k] = 2.0 * pair_energy(&scene.target_a, 1, &scene.env[k], 1, &scene.constants)?;
        }
        if scene.interacts(1, mol) {
            eta_b[k] = 2.0 * pair_energy(&scene.target_b, 1, &scene.env[k], 1, &scene.constants)?;
        }
    }
    let eta = eta_a.iter().zip(&eta_b).map(|(x, y)| x + y).collect();
    Ok(FlipCoefficients {
        eta_a,
        eta_b,
        eta,
        split: scene.m,
    })
}

/// Energies of every global basis state, indexed like the state vector:
/// `s = p + 2^N·(2·m_A + m_B)`.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    n_env: usize,
    energies: Vec<f64>,
}

impl EnergyTable {
    /// Builds the table in `O(N·2^N)`. With `include_env_env = false` the
    /// environment–environment pair energies are left out.
    pub fn build(scene: &Scene, include_env_env: bool, cap: usize) -> Result<Self> {
        let n = scene.n_env();
        if n > cap {
            return Err(Error::CapExceeded {
                what: "environment size for the state vector",
                requested: n,
                limit: cap,
            });
        }
        let cm = CouplingMatrix::from_scene(scene)?;
        let size = 1usize << n;
        let env = |k: usize| k + 2;

        // Walk words by highest set bit: p = q | (1 << k) with bit k clear in q.
        let mut e_env = vec![0.0; size];
        let mut h_a = vec![0.0; size];
        let mut h_b = vec![0.0; size];
        if include_env_env {
            let mut e0 = 0.0;
            for k in 0..n {
                for l in (k + 1)..n {
                    e0 += cm.get(env(k), env(l));
                }
            }
            e_env[0] = e0;
        }
        h_a[0] = -(0..n).map(|k| cm.get(0, env(k))).sum::<f64>();
        h_b[0] = -(0..n).map(|k| cm.get(1, env(k))).sum::<f64>();
        for p in 1..size {
            let k = (usize::BITS - 1 - p.leading_zeros()) as usize;
            let q = p ^ (1 << k);
            if include_env_env {
                let field: f64 = (0..n)
                    .filter(|&l| l != k)
                    .map(|l| bit_polarization(q, l) * cm.get(env(k), env(l)))
                    .sum();
                e_env[p] = e_env[q] + 2.0 * field;
            }
            h_a[p] = h_a[q] + 2.0 * cm.get(0, env(k));
            h_b[p] = h_b[q] + 2.0 * cm.get(1, env(k));
        }

        let j_ab = cm.get(0, 1);
        let mut energies = vec![0.0; 4 * size];
        for (block, chunk) in energies.chunks_mut(size).enumerate() {
            let s_a = polarization((block >> 1) as u8);
            let s_b = polarization((block & 1) as u8);
            for (p, e) in chunk.iter_mut().enumerate() {
                *e = e_env[p] + s_a * h_a[p] + s_b * h_b[p] + s_a * s_b * j_ab;
            }
        }
        Ok(EnergyTable { n_env: n, energies })
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, m_a: u8, m_b: u8, p: usize) -> f64 {
        self.energies[p + (1usize << self.n_env) * (2 * m_a as usize + m_b as usize)]
    }
}
