//! Scene construction: the two target DQDs and their spherical shells of
//! randomly placed, randomly oriented environment DQDs.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::rng;

/// Where target B sits along +x when the A–B separation is infinite.
pub const FAR_POINT_NM: f64 = 1.0e3;

/// Dots of different molecules closer than this fraction of `a` force a re-draw.
pub const MIN_DOT_GAP_FRACTION: f64 = 0.05;

const MAX_REDRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A rigid double quantum dot. Dot 0 sits at `center - (a/2)·orientation`,
/// dot 1 at `center + (a/2)·orientation`; state |1⟩ puts the mobile electron
/// on dot 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqdSpec {
    pub center: Vec3,
    pub orientation: Vec3,
    pub a: f64,
}

impl DqdSpec {
    pub fn new(center: Vec3, orientation: Vec3, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Geometry(format!(
                "dot separation must be > 0, got {a}"
            )));
        }
        if !center.is_finite() || !orientation.is_finite() {
            return Err(Error::Geometry(
                "non-finite DQD center or orientation".into(),
            ));
        }
        if (orientation.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Geometry(format!(
                "orientation must be a unit vector, |o| = {}",
                orientation.norm()
            )));
        }
        Ok(DqdSpec {
            center,
            orientation,
            a,
        })
    }

    /// The same molecule with its dot labels swapped.
    pub fn flipped(&self) -> DqdSpec {
        DqdSpec {
            orientation: -self.orientation,
            ..*self
        }
    }
}

/// Position of dot `m` (0 or 1) of a DQD.
pub fn dot_position(dqd: &DqdSpec, m: u8) -> Vec3 {
    debug_assert!(m <= 1);
    dqd.center + dqd.orientation * ((f64::from(m) - 0.5) * dqd.a)
}

/// Distance between the two target molecules.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Separation {
    /// No interaction at all between A's group and B's group.
    #[default]
    Infinite,
    Finite(f64),
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separation::Infinite => write!(f, "infinite"),
            Separation::Finite(d) => write!(f, "{d}"),
        }
    }
}

impl Serialize for Separation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Separation::Infinite => s.serialize_str("infinite"),
            Separation::Finite(d) => s.serialize_f64(*d),
        }
    }
}

impl<'de> Deserialize<'de> for Separation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct SepVisitor;
        impl Visitor<'_> for SepVisitor {
            type Value = Separation;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a distance in nm or the string \"infinite\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Separation, E> {
                Ok(Separation::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Separation, E> {
                Ok(Separation::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Separation, E> {
                Ok(Separation::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Separation, E> {
                match v {
                    "infinite" | "inf" => Ok(Separation::Infinite),
                    other => other
                        .parse::<f64>()
                        .map(Separation::Finite)
                        .map_err(|_| E::custom(format!("invalid separation {other:?}"))),
                }
            }
        }
        d.deserialize_any(SepVisitor)
    }
}

/// Seeds above `i64::MAX` do not fit a TOML integer and are written as
/// decimal strings; both forms are read back.
mod seed_serde {
    use super::*;

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        struct SeedVisitor;
        impl Visitor<'_> for SeedVisitor {
            type Value = u64;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or its decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom("seed must be >= 0"))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<u64, E> {
                Ok(v)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<u64, E> {
                v.parse()
                    .map_err(|_| E::custom(format!("invalid seed {v:?}")))
            }
        }
        d.deserialize_any(SeedVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// Dot separation (nm).
    pub a: f64,
    /// Shell radius around A (nm).
    pub r_a: f64,
    /// Shell radius around B (nm).
    pub r_b: f64,
    /// Environment molecules per shell.
    pub m: usize,
    pub d: Separation,
    #[serde(with = "seed_serde")]
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            a: 1.0,
            r_a: 4.0,
            r_b: 2.0,
            m: 10,
            d: Separation::Infinite,
            seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::config("scene.a", "must be finite and > 0"));
        }
        for (name, r) in [("scene.r_a", self.r_a), ("scene.r_b", self.r_b)] {
            if !r.is_finite() || r <= self.a {
                return Err(Error::config(
                    name,
                    format!(
                        "shell radius {r} must exceed the dot separation a = {}",
                        self.a
                    ),
                ));
            }
        }
        if let Separation::Finite(d) = self.d {
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::config("scene.d", "must be > 0 or \"infinite\""));
            }
        }
        Ok(())
    }

    pub fn n_env(&self) -> usize {
        2 * self.m
    }
}

/// Which target a molecule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    A,
    B,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::A => "A",
            Group::B => "B",
        })
    }
}

/// Two target DQDs plus `2M` environment DQDs. Environment indices `0..M`
/// surround A and `M..2M` surround B.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub target_a: DqdSpec,
    pub target_b: DqdSpec,
    pub env: Vec<DqdSpec>,
    pub m: usize,
    pub separation: Separation,
    pub constants: PhysicalConstants,
}

impl Scene {
    pub fn n_env(&self) -> usize {
        self.env.len()
    }

    /// Group of environment molecule `k` (0-based).
    pub fn group_of(&self, k: usize) -> Group {
        if k < self.m {
            Group::A
        } else {
            Group::B
        }
    }

    pub fn target(&self, g: Group) -> &DqdSpec {
        match g {
            Group::A => &self.target_a,
            Group::B => &self.target_b,
        }
    }

    /// Molecules are indexed 0 = A, 1 = B, 2.. = environment.
    pub fn molecule(&self, j: usize) -> &DqdSpec {
        match j {
            0 => &self.target_a,
            1 => &self.target_b,
            k => &self.env[k - 2],
        }
    }

    pub fn molecule_group(&self, j: usize) -> Group {
        match j {
            0 => Group::A,
            1 => Group::B,
            k => self.group_of(k - 2),
        }
    }

    pub fn n_molecules(&self) -> usize {
        self.env.len() + 2
    }

    /// Whether molecules `j` and `k` interact at all. With an infinite
    /// separation the two groups are decoupled.
    pub fn interacts(&self, j: usize, k: usize) -> bool {
        j != k
            && (matches!(self.separation, Separation::Finite(_))
                || self.molecule_group(j) == self.molecule_group(k))
    }

    /// Every molecule with its dot labels swapped.
    pub fn flipped(&self) -> Scene {
        Scene {
            target_a: self.target_a.flipped(),
            target_b: self.target_b.flipped(),
            env: self.env.iter().map(DqdSpec::flipped).collect(),
            ..self.clone()
        }
    }
}

/// Uniform direction on the unit sphere from three standard normals.
pub fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            return v * (1.0 / n);
        }
    }
}

fn min_dot_distance(p: &DqdSpec, q: &DqdSpec) -> f64 {
    let mut best = f64::INFINITY;
    for mp in 0..2 {
        for mq in 0..2 {
            best = best.min(dot_position(p, mp).distance(dot_position(q, mq)));
        }
    }
    best
}

/// Build a scene from its configuration. Target A sits at the origin and B
/// on the +x axis, both oriented along +x. For each environment molecule in
/// index order the generator yields its direction from the shell center and
/// then its orientation; a candidate with a dot closer than `0.05·a` to a dot
/// of an interacting, already placed molecule is discarded and drawn again.
pub fn build_scene(cfg: &SceneConfig, constants: PhysicalConstants) -> Result<Scene> {
    cfg.validate()?;
    constants.validate()?;

    let b_x = match cfg.d {
        Separation::Infinite => FAR_POINT_NM,
        Separation::Finite(d) => d,
    };
    let target_a = DqdSpec::new(Vec3::default(), Vec3::X, cfg.a)?;
    let target_b = DqdSpec::new(Vec3::new(b_x, 0.0, 0.0), Vec3::X, cfg.a)?;
    if let Separation::Finite(_) = cfg.d {
        if min_dot_distance(&target_a, &target_b) < MIN_DOT_GAP_FRACTION * cfg.a {
            return Err(Error::config("scene.d", "targets overlap"));
        }
    }

    let mut rng = rng::geometry_rng(cfg.seed);
    let gap = MIN_DOT_GAP_FRACTION * cfg.a;
    let n = cfg.n_env();
    let mut env: Vec<DqdSpec> = Vec::with_capacity(n);
    let mut groups: Vec<Group> = Vec::with_capacity(n);

    for k in 0..n {
        let (group, target, radius) = if k < cfg.m {
            (Group::A, &target_a, cfg.r_a)
        } else {
            (Group::B, &target_b, cfg.r_b)
        };
        let mut redraws = 0usize;
        let dqd = loop {
            let direction = sample_unit_vector(&mut rng);
            let orientation = sample_unit_vector(&mut rng);
            let candidate = DqdSpec {
                center: target.center + direction * radius,
                orientation,
                a: cfg.a,
            };
            let finite = matches!(cfg.d, Separation::Finite(_));
            let clash = [(&target_a, Group::A), (&target_b, Group::B)]
                .into_iter()
                .chain(env.iter().zip(groups.iter().copied()))
                .filter(|(_, g)| finite || *g == group)
                .any(|(other, _)| min_dot_distance(&candidate, other) < gap);
            if !clash {
                break candidate;
            }
            redraws += 1;
            if redraws >= MAX_REDRAWS {
                return Err(Error::Geometry(format!(
                    "could not place environment molecule {} after {MAX_REDRAWS} draws; shell too crowded",
                    k + 1
                )));
            }
        };
        if redraws > 0 {
            log::warn!(
                "environment molecule {} re-drawn {redraws} time(s) to keep dots at least {gap} nm apart",
                k + 1
            );
        }
        env.push(dqd);
        groups.push(group);
    }

    Ok(Scene {
        target_a,
        target_b,
        env,
        m: cfg.m,
        separation: cfg.d,
        constants,
    })
}

// ---------------------------------------------------------------------------
// Replay text format
// ---------------------------------------------------------------------------

const REPLAY_HEADER: &str = "# mcqsim scene v1";

/// Render the scene as text, one molecule per record. Floats use the
/// shortest round-trip representation, so parsing the text back yields a
/// bit-identical scene.
pub fn scene_to_text(scene: &Scene) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let c = &scene.constants;
    writeln!(s, "{REPLAY_HEADER}").unwrap();
    writeln!(s, "a {:?}", scene.target_a.a).unwrap();
    writeln!(s, "m {}", scene.m).unwrap();
    match scene.separation {
        Separation::Infinite => writeln!(s, "d infinite").unwrap(),
        Separation::Finite(d) => writeln!(s, "d {d:?}").unwrap(),
    }
    writeln!(s, "hbar {:?}", c.hbar).unwrap();
    writeln!(s, "coulomb_ke2 {:?}", c.coulomb_ke2).unwrap();
    writeln!(s, "# index group cx cy cz ox oy oz").unwrap();
    let rec = |s: &mut String, idx: &str, g: Group, q: &DqdSpec| {
        writeln!(
            s,
            "{idx} {g} {:?} {:?} {:?} {:?} {:?} {:?}",
            q.center.x, q.center.y, q.center.z, q.orientation.x, q.orientation.y, q.orientation.z
        )
        .unwrap();
    };
    rec(&mut s, "target", Group::A, &scene.target_a);
    rec(&mut s, "target", Group::B, &scene.target_b);
    for (k, q) in scene.env.iter().enumerate() {
        rec(&mut s, &(k + 1).to_string(), scene.group_of(k), q);
    }
    s
}

pub fn scene_from_text(text: &str) -> Result<Scene> {
    let err = |line: usize, message: String| Error::Replay { line, message };
    let mut a = None;
    let mut m = None;
    let mut d = None;
    let mut hbar = None;
    let mut ke2 = None;
    let mut targets: Vec<(Group, Vec3, Vec3)> = Vec::new();
    let mut env: Vec<(usize, Group, Vec3, Vec3)> = Vec::new();

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == REPLAY_HEADER => {}
        _ => return Err(err(1, "missing header".into())),
    }
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(line_no, format!("bad number {s:?}: {e}")))
        };
        match fields[0] {
            "a" if fields.len() == 2 => a = Some(num(fields[1])?),
            "m" if fields.len() == 2 => {
                m = Some(
                    fields[1]
                        .parse::<usize>()
                        .map_err(|e| err(line_no, e.to_string()))?,
                )
            }
            "d" if fields.len() == 2 => {
                d = Some(if fields[1] == "infinite" {
                    Separation::Infinite
                } else {
                    Separation::Finite(num(fields[1])?)
                })
            }
            "hbar" if fields.len() == 2 => hbar = Some(num(fields[1])?),
            "coulomb_ke2" if fields.len() == 2 => ke2 = Some(num(fields[1])?),
            _ if fields.len() == 8 => {
                let group = match fields[1] {
                    "A" => Group::A,
                    "B" => Group::B,
                    g => return Err(err(line_no, format!("unknown group {g:?}"))),
                };
                let c = Vec3::new(num(fields[2])?, num(fields[3])?, num(fields[4])?);
                let o = Vec3::new(num(fields[5])?, num(fields[6])?, num(fields[7])?);
                if fields[0] == "target" {
                    targets.push((group, c, o));
                } else {
                    let idx = fields[0]
                        .parse::<usize>()
                        .map_err(|e| err(line_no, format!("bad index: {e}")))?;
                    env.push((idx, group, c, o));
                }
            }
            _ => return Err(err(line_no, format!("unrecognized record {line:?}"))),
        }
    }

    let missing = |what: &str| err(0, format!("missing {what} record"));
    let a = a.ok_or_else(|| missing("a"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let constants = PhysicalConstants::new(
        hbar.ok_or_else(|| missing("hbar"))?,
        ke2.ok_or_else(|| missing("coulomb_ke2"))?,
    )?;
    let find_target = |g: Group| {
        targets
            .iter()
            .find(|t| t.0 == g)
            .ok_or_else(|| missing(&format!("target {g}")))
            .and_then(|&(_, c, o)| DqdSpec::new(c, o, a))
    };
    let target_a = find_target(Group::A)?;
    let target_b = find_target(Group::B)?;
    if env.len() != 2 * m {
        return Err(err(
            0,
            format!(
                "expected {} environment records, found {}",
                2 * m,
                env.len()
            ),
        ));
    }
    let mut molecules = Vec::with_capacity(env.len());
    for (k, (idx, g, c, o)) in env.into_iter().enumerate() {
        let expected_group = if k < m { Group::A } else { Group::B };
        if idx != k + 1 || g != expected_group {
            return Err(err(0, format!("environment record {} out of order", k + 1)));
        }
        molecules.push(DqdSpec::new(c, o, a)?);
    }
    Ok(Scene {
        target_a,
        target_b,
        env: molecules,
        m,
        separation: d.ok_or_else(|| missing("d"))?,
        constants,
    })
}
