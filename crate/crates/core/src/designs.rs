// SPDX-License-Identifier: Apache-2.0

//! Bundled example designs, their closed-form float references, and seeded
//! stimulus generators.
//!
//! Widths, ranges and table floors of the two fitters are defaults chosen
//! here, not published values. Coordinates are in arbitrary length units.
//! Equal per-hit resolutions cancel out of both fitters, so they do not
//! appear in the designs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::FixedPointFormat;
use crate::graph::{Design, DesignBuilder, NodeId};
use crate::lut::LutOptions;
use crate::sim::InputVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    PipelinedAdd,
    LineFit,
    CircleFit,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::PipelinedAdd, Example::LineFit, Example::CircleFit];

    pub fn name(self) -> &'static str {
        match self {
            Example::PipelinedAdd => "pipelined_add",
            Example::LineFit => "line_fit",
            Example::CircleFit => "circle_fit",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                format!("unknown example `{s}` (expected pipelined_add, line_fit or circle_fit)")
            })
    }
}

/// Width and float range of one input. Negative minimum selects a signed
/// format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub bits: u32,
    pub min: f64,
    pub max: f64,
}

impl InputSpec {
    pub fn format(&self) -> Result<FixedPointFormat> {
        if self.min < 0.0 {
            FixedPointFormat::signed(self.bits, self.min, self.max)
        } else {
            FixedPointFormat::unsigned(self.bits, self.max)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelinedAddConfig {
    pub phi: InputSpec,
}

impl Default for PipelinedAddConfig {
    fn default() -> Self {
        PipelinedAddConfig {
            phi: InputSpec {
                bits: 10,
                min: -3.14,
                max: 3.14,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineFitConfig {
    /// Arc length of each hit.
    pub s: InputSpec,
    /// Longitudinal position of each hit.
    pub z: InputSpec,
    pub recip_bits: u32,
    /// Denominators below this are clamped before the reciprocal.
    pub recip_floor: f64,
    pub lut_budget: u64,
}

impl Default for LineFitConfig {
    fn default() -> Self {
        LineFitConfig {
            s: InputSpec {
                bits: 12,
                min: 0.0,
                max: 8.0,
            },
            z: InputSpec {
                bits: 12,
                min: -16.0,
                max: 16.0,
            },
            recip_bits: 17,
            recip_floor: 8.0,
            lut_budget: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleFitConfig {
    pub phi: InputSpec,
    pub r: InputSpec,
    pub trig_bits: u32,
    pub recip_bits: u32,
    pub recip_floor: f64,
    pub lut_budget: u64,
}

impl Default for CircleFitConfig {
    fn default() -> Self {
        CircleFitConfig {
            phi: InputSpec {
                bits: 10,
                min: -PI,
                max: PI,
            },
            r: InputSpec {
                bits: 12,
                min: -64.0,
                max: 64.0,
            },
            trig_bits: 16,
            recip_bits: 17,
            recip_floor: 0.5,
            lut_budget: 1 << 16,
        }
    }
}

fn sum(b: &mut DesignBuilder, terms: &[NodeId]) -> Result<NodeId> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = b.add(acc, t)?;
    }
    Ok(acc)
}

/// Smallest right shift that brings `x`'s range within `budget` entries.
fn table_shift(b: &DesignBuilder, x: NodeId, budget: u64) -> Result<u32> {
    let range = b.node(x)?.range;
    Ok((0..63).find(|&k| range.shr(k).span() <= budget).unwrap_or(63))
}

/// Right shift that leaves a conversion constant of at least `min_cc`.
fn requantize(b: &mut DesignBuilder, x: NodeId, min_cc: f64) -> Result<NodeId> {
    let cc = b.node(x)?.cc();
    let k = (cc / min_cc).log2().floor().max(0.0) as u32;
    b.shr(x, k)
}

/// Three inputs, two chained clocked additions, latency 2.
pub fn pipelined_add(cfg: &PipelinedAddConfig) -> Result<Design> {
    let fmt = cfg.phi.format()?;
    let mut b = DesignBuilder::new("pipelined_add")?;
    let phi_0 = b.input("phi_0", fmt)?;
    let phi_1 = b.input("phi_1", fmt)?;
    let phi_2 = b.input("phi_2", fmt)?;
    let e = b.add(phi_0, phi_1)?;
    let phi_add = b.clocked_assign("phiAdd", e)?;
    let e = b.add(phi_add, phi_2)?;
    let phi_add2 = b.clocked_assign("phiAdd2", e)?;
    b.output("phiAdd2", phi_add2)?;
    b.finish()
}

/// Straight-line fit `z = cot * s + z0` through four hits.
///
/// The denominator `4 S_ss - S_s^2` is computed as the sum of squared
/// pairwise differences, which is algebraically equal and never negative.
pub fn line_fit(cfg: &LineFitConfig) -> Result<Design> {
    let s_fmt = cfg.s.format()?;
    let z_fmt = cfg.z.format()?;
    let mut b = DesignBuilder::new("line_fit")?.with_lut_budget(cfg.lut_budget);
    let s: Vec<NodeId> = (1..=4)
        .map(|i| b.input(&format!("s{i}"), s_fmt))
        .collect::<Result<_>>()?;
    let z: Vec<NodeId> = (1..=4)
        .map(|i| b.input(&format!("z{i}"), z_fmt))
        .collect::<Result<_>>()?;

    let e = sum(&mut b, &s)?;
    let sum_s = b.clocked_assign("sum_s", e)?;
    let e = sum(&mut b, &z)?;
    let sum_z = b.clocked_assign("sum_z", e)?;
    let mut sz = Vec::new();
    let mut ss = Vec::new();
    for i in 0..4 {
        let e = b.mul(s[i], z[i])?;
        sz.push(b.clocked_assign(&format!("sz{}", i + 1), e)?);
        let e = b.mul(s[i], s[i])?;
        ss.push(b.clocked_assign(&format!("ss{}", i + 1), e)?);
    }
    let mut sq = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let e = b.sub(s[i], s[j])?;
            let d = b.clocked_assign(&format!("d{}{}", i + 1, j + 1), e)?;
            let e = b.mul(d, d)?;
            sq.push(b.clocked_assign(&format!("dd{}{}", i + 1, j + 1), e)?);
        }
    }

    let e = sum(&mut b, &sz)?;
    let sum_sz = b.clocked_assign("sum_sz", e)?;
    let e = sum(&mut b, &ss)?;
    let sum_ss = b.clocked_assign("sum_ss", e)?;
    let e = b.mul(sum_s, sum_z)?;
    let s_z = b.clocked_assign("s_z", e)?;

    let e = sum(&mut b, &sq)?;
    let den = b.clocked_assign("den", e)?;
    let twice = b.add(sum_sz, sum_sz)?;
    let four = b.add(twice, twice)?;
    let e = b.sub(four, s_z)?;
    let num_cot = b.clocked_assign("num_cot", e)?;
    let e = b.mul(sum_ss, sum_z)?;
    let ss_z = b.clocked_assign("ss_z", e)?;
    let e = b.mul(sum_s, sum_sz)?;
    let s_sz = b.clocked_assign("s_sz", e)?;
    let e = b.sub(ss_z, s_sz)?;
    let num_z0 = b.clocked_assign("num_z0", e)?;

    let k = table_shift(&b, den, b.lut_budget())?;
    let den_q = b.shr(den, k)?;
    let floor = cfg.recip_floor;
    let (_, recip) = b.lut(
        "recip",
        move |x: f64| 1.0 / x.max(floor),
        den_q,
        cfg.recip_bits,
        (0.0, 1.0 / floor),
        LutOptions::default(),
    )?;

    let z_cc = z_fmt.conversion_constant;
    let e = b.mul(num_cot, recip)?;
    let e = requantize(&mut b, e, 4.0 * z_cc / cfg.s.max.max(1.0))?;
    let cot = b.clocked_assign("cot", e)?;
    let e = b.mul(num_z0, recip)?;
    let e = requantize(&mut b, e, z_cc)?;
    let z0 = b.clocked_assign("z0", e)?;
    b.output("cot", cot)?;
    b.output("z0", z0)?;
    b.finish()
}

/// Circle through the origin, `r = 2 (a cos(phi) + b sin(phi))`, fitted to
/// five hits.
pub fn circle_fit(cfg: &CircleFitConfig) -> Result<Design> {
    let phi_fmt = cfg.phi.format()?;
    let r_fmt = cfg.r.format()?;
    let mut b = DesignBuilder::new("circle_fit")?.with_lut_budget(cfg.lut_budget);
    let phi: Vec<NodeId> = (1..=5)
        .map(|i| b.input(&format!("phi{i}"), phi_fmt))
        .collect::<Result<_>>()?;
    let r: Vec<NodeId> = (1..=5)
        .map(|i| b.input(&format!("r{i}"), r_fmt))
        .collect::<Result<_>>()?;

    let mut cos = Vec::new();
    let mut sin = Vec::new();
    for (i, &p) in phi.iter().enumerate() {
        let range = (-1.0, 1.0);
        let opts = LutOptions::default();
        cos.push(b.lut(&format!("cos{}", i + 1), f64::cos, p, cfg.trig_bits, range, opts)?.1);
        sin.push(b.lut(&format!("sin{}", i + 1), f64::sin, p, cfg.trig_bits, range, opts)?.1);
    }

    let terms = |b: &mut DesignBuilder, x: &[NodeId], y: &[NodeId]| -> Result<NodeId> {
        let prods = x
            .iter()
            .zip(y)
            .map(|(&p, &q)| b.mul(p, q))
            .collect::<Result<Vec<_>>>()?;
        sum(b, &prods)
    };
    let e = terms(&mut b, &cos, &cos)?;
    let scc = b.clocked_assign("scc", e)?;
    let e = terms(&mut b, &sin, &sin)?;
    let sss = b.clocked_assign("sss", e)?;
    let e = terms(&mut b, &sin, &cos)?;
    let ssc = b.clocked_assign("ssc", e)?;
    let e = terms(&mut b, &r, &cos)?;
    let src = b.clocked_assign("src", e)?;
    let e = terms(&mut b, &r, &sin)?;
    let srs = b.clocked_assign("srs", e)?;

    let p = b.mul(scc, sss)?;
    let q = b.mul(ssc, ssc)?;
    let e = b.sub(p, q)?;
    let den = b.clocked_assign("den", e)?;
    let p = b.mul(sss, src)?;
    let q = b.mul(ssc, srs)?;
    let e = b.sub(p, q)?;
    let num_a = b.clocked_assign("num_a", e)?;
    let p = b.mul(scc, srs)?;
    let q = b.mul(ssc, src)?;
    let e = b.sub(p, q)?;
    let num_b = b.clocked_assign("num_b", e)?;

    let k = table_shift(&b, den, b.lut_budget())?;
    let den_q = b.shr(den, k)?;
    let floor = cfg.recip_floor;
    let (_, recip) = b.lut(
        "recip",
        move |x: f64| 1.0 / (2.0 * x.max(floor)),
        den_q,
        cfg.recip_bits,
        (0.0, 0.5 / floor),
        LutOptions::default(),
    )?;

    let r_cc = r_fmt.conversion_constant;
    let e = b.mul(num_a, recip)?;
    let e = requantize(&mut b, e, r_cc)?;
    let a = b.clocked_assign("a", e)?;
    let e = b.mul(num_b, recip)?;
    let e = requantize(&mut b, e, r_cc)?;
    let bb = b.clocked_assign("b", e)?;
    b.output("a", a)?;
    b.output("b", bb)?;
    b.finish()
}

/// Build an example with its default configuration.
pub fn build(example: Example) -> Result<Design> {
    match example {
        Example::PipelinedAdd => pipelined_add(&PipelinedAddConfig::default()),
        Example::LineFit => line_fit(&LineFitConfig::default()),
        Example::CircleFit => circle_fit(&CircleFitConfig::default()),
    }
}

/// Least-squares `(cot, z0)` for four equally weighted hits.
pub fn line_fit_reference(s: &[f64; 4], z: &[f64; 4]) -> (f64, f64) {
    let n = 4.0;
    let ss: f64 = s.iter().sum();
    let sz: f64 = z.iter().sum();
    let sss: f64 = s.iter().map(|v| v * v).sum();
    let ssz: f64 = s.iter().zip(z).map(|(a, b)| a * b).sum();
    let den = n * sss - ss * ss;
    ((n * ssz - ss * sz) / den, (sss * sz - ss * ssz) / den)
}

/// Least-squares `(a, b)` for five equally weighted hits.
pub fn circle_fit_reference(phi: &[f64; 5], r: &[f64; 5]) -> (f64, f64) {
    let (mut scc, mut sss, mut ssc, mut src, mut srs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, r) in phi.iter().zip(r) {
        let (s, c) = p.sin_cos();
        scc += c * c;
        sss += s * s;
        ssc += s * c;
        src += r * c;
        srs += r * s;
    }
    let den = 2.0 * (scc * sss - ssc * ssc);
    ((sss * src - ssc * srs) / den, (scc * srs - ssc * src) / den)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn input_formats(design: &Design) -> Vec<(String, FixedPointFormat)> {
    design
        .inputs()
        .iter()
        .map(|&i| {
            let n = design.node(i);
            (n.name.clone(), n.fmt)
        })
        .collect()
}

/// Inputs drawn uniformly from their declared float ranges.
pub fn uniform_vectors(design: &Design, n: usize, seed: u64) -> Vec<InputVector> {
    let mut rng = rng(seed);
    let fmts = input_formats(design);
    (0..n)
        .map(|_| {
            fmts.iter()
                .map(|(name, f)| (name.clone(), rng.gen_range(f.float_min..=f.float_max)))
                .collect()
        })
        .collect()
}

/// Inputs that favour the extremes: half the draws sit on or within one
/// count of a range boundary, a few at zero, the rest uniform.
pub fn boundary_vectors(design: &Design, n: usize, seed: u64) -> Vec<InputVector> {
    let mut rng = rng(seed);
    let fmts = input_formats(design);
    (0..n)
        .map(|_| {
            fmts.iter()
                .map(|(name, f)| {
                    let lsb = 1.0 / f.conversion_constant;
                    let x = match rng.gen_range(0..8) {
                        0 | 1 => f.float_min,
                        2 | 3 => f.float_max,
                        4 => (f.float_min + rng.gen_range(0.0..lsb)).min(f.float_max),
                        5 => (f.float_max - rng.gen_range(0.0..lsb)).max(f.float_min),
                        6 => 0.0f64.clamp(f.float_min, f.float_max),
                        _ => rng.gen_range(f.float_min..=f.float_max),
                    };
                    (name.clone(), x)
                })
                .collect()
        })
        .collect()
}

/// One straight-line track: true parameters and the noisy hits.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub cot: f64,
    pub z0: f64,
    pub s: [f64; 4],
    pub z: [f64; 4],
}

impl Track {
    pub fn vector(&self) -> InputVector {
        let mut v = InputVector::new();
        for i in 0..4 {
            v.insert(format!("s{}", i + 1), self.s[i]);
            v.insert(format!("z{}", i + 1), self.z[i]);
        }
        v
    }
}

/// Tracks `z = cot * s + z0 + noise` with one hit in each of four separated
/// bands of `s`, sized for the default line-fit ranges.
pub fn line_fit_tracks(n: usize, seed: u64, noise: f64) -> Vec<Track> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let cot = rng.gen_range(-1.5..=1.5);
            let z0 = rng.gen_range(-4.0..=4.0);
            let mut s = [0.0; 4];
            let mut z = [0.0; 4];
            for i in 0..4 {
                s[i] = 1.0 + 1.75 * i as f64 + rng.gen_range(0.0..=1.0);
                let jitter = if noise > 0.0 {
                    rng.gen_range(-noise..=noise)
                } else {
                    0.0
                };
                z[i] = cot * s[i] + z0 + jitter;
            }
            Track { cot, z0, s, z }
        })
        .collect()
}

/// One circle instance: true parameters and the hits on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub a: f64,
    pub b: f64,
    pub phi: [f64; 5],
    pub r: [f64; 5],
}

impl Arc {
    pub fn vector(&self) -> InputVector {
        let mut v = InputVector::new();
        for i in 0..5 {
            v.insert(format!("phi{}", i + 1), self.phi[i]);
            v.insert(format!("r{}", i + 1), self.r[i]);
        }
        v
    }
}

/// Exact circles `r = 2 (a cos(phi) + b sin(phi))` sampled at five angles
/// spread over 1.2 to 2.4 radians, sized for the default circle-fit ranges.
pub fn circle_fit_arcs(n: usize, seed: u64) -> Vec<Arc> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let radius = rng.gen_range(0.0..=30.0);
            let dir = rng.gen_range(-PI..PI);
            let (a, b) = (radius * dir.cos(), radius * dir.sin());
            let step = rng.gen_range(0.3..=0.6);
            let start = rng.gen_range(-3.0..=3.0 - 4.0 * step);
            let mut phi = [0.0; 5];
            let mut r = [0.0; 5];
            for i in 0..5 {
                phi[i] = start + step * i as f64 + rng.gen_range(-0.05..=0.05);
                r[i] = 2.0 * (a * phi[i].cos() + b * phi[i].sin());
            }
            Arc { a, b, phi, r }
        })
        .collect()
}

/// Inputs of the pipelined addition used as the reference example.
pub fn pipelined_add_reference_vector() -> InputVector {
    [("phi_0", 1.57), ("phi_1", -0.785), ("phi_2", 0.785)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// Stimulus for an example: the reference vector followed by uniform
/// draws for the addition, synthetic tracks and arcs for the fitters.
pub fn example_vectors(example: Example, design: &Design, n: usize, seed: u64) -> Vec<InputVector> {
    match example {
        Example::PipelinedAdd => {
            let mut v = vec![pipelined_add_reference_vector()];
            v.extend(uniform_vectors(design, n.saturating_sub(1), seed));
            v.truncate(n);
            v
        }
        Example::LineFit => line_fit_tracks(n, seed, 0.05).iter().map(Track::vector).collect(),
        Example::CircleFit => circle_fit_arcs(n, seed).iter().map(Arc::vector).collect(),
    }
}

/// Reject configurations outside the supported width range.
pub fn check_width(bits: u32) -> Result<()> {
    if (2..=48).contains(&bits) {
        Ok(())
    } else {
        Err(Error::BitWidth {
            width: bits,
            min: 2,
            max: 48,
        })
    }
}
