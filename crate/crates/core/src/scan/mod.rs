//! Scans over Diophantine frequency grids: configuration, the per-point
//! pipeline, verification by direct integration, and output files.

mod emit;
mod verify;

pub use emit::{read_csv, read_lines_csv, write_csv, write_json, write_lines_csv, write_outputs};
pub use verify::{verify_integration, Verification};

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{invert_frequency, pv_alpha, seq_1d, seq_2d, Resonance, Resonance2, Side};
use crate::error::{Error, Result};
use crate::estimate::{optimize_full, resonance_halfwidth, singularity_distance, OptControls, StabilityRecord, Status};
use crate::models::Model;
use crate::normalize::{back_transform, step, Controls, CoordinateMap, Fate, Region, Split};
use crate::pseries::{index, Ball, Index, PoissonSeries, MAX_DIM};

/// A 1D sequence: frequencies converging to `resonance` at scale `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sequence {
    pub resonance: Resonance,
    pub s: f64,
}

/// Where the initial frequencies come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Grid {
    /// z ↦ center ∓ s/(z + γ) for every sequence and side.
    OneD {
        sequences: Vec<Sequence>,
        #[serde(default = "both_sides")]
        sides: Vec<Side>,
        z_min: i64,
        z_max: i64,
    },
    /// Rays around the intersection of two resonances. Ray i of a quadrant has
    /// angle θ = (i + ½)π/(2·rays) and ã = (radius·cos θ/α, 0, 0, radius·sin θ/α²)
    /// rounded to multiples of 10⁻⁶, so that ω sits at distance ≈ radius/z from
    /// the intersection.
    TwoD {
        resonances: Resonance2,
        rays: usize,
        radius: f64,
        z_min: i64,
        z_max: i64,
    },
}

fn both_sides() -> Vec<Side> {
    vec![Side::Below, Side::Above]
}

/// One initial frequency of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub z: i64,
    pub omega: Vec<f64>,
}

const ATILDE_DEN: f64 = 1e6;

impl Grid {
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        match self {
            Grid::OneD { sequences, sides, z_min, z_max } => {
                for seq in sequences {
                    for &side in sides {
                        for z in *z_min..=*z_max {
                            out.push(GridPoint {
                                z,
                                omega: seq_1d(&seq.resonance, seq.s, z, side)?.to_vec(),
                            });
                        }
                    }
                }
            }
            Grid::TwoD { resonances, rays, radius, z_min, z_max } => {
                let al = pv_alpha();
                let quadrants = [
                    [Side::Above, Side::Above],
                    [Side::Below, Side::Above],
                    [Side::Below, Side::Below],
                    [Side::Above, Side::Below],
                ];
                for signs in quadrants {
                    for i in 0..*rays {
                        let th = (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / *rays as f64;
                        // Rational ã keep (1, ω₁, ω₂) independent over Q.
                        let rat = |x: f64| (x * ATILDE_DEN).round() / ATILDE_DEN;
                        let a = [rat(radius * th.cos() / al), 0.0, 0.0, rat(radius * th.sin() / (al * al))];
                        for z in *z_min..=*z_max {
                            out.push(GridPoint {
                                z,
                                omega: seq_2d(resonances, a, z, signs)?.to_vec(),
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// An empty z range is valid and yields no points.
    fn validate(&self) -> Result<()> {
        match self {
            Grid::OneD { sequences, z_min, z_max, .. } => {
                if sequences.iter().any(|s| !(s.s > 0.0)) {
                    return Err(Error::Config("sequence scale s must be positive".into()));
                }
                if *z_min <= 0 && *z_max >= 0 {
                    return Err(Error::Config("1D z range must not contain 0".into()));
                }
            }
            Grid::TwoD { rays, radius, z_min, .. } => {
                if *rays == 0 || !(*radius > 0.0) {
                    return Err(Error::Config("2D grid needs rays > 0 and radius > 0".into()));
                }
                if *z_min <= 0 {
                    return Err(Error::Config("2D grid needs z_min > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Whether each point gets its own normalization or all points share one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    PerPoint,
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Successful points integrated per scan.
    pub samples: usize,
    /// Integration horizon cap in time units.
    pub budget: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { samples: 3, budget: 1e6 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub lines: Option<PathBuf>,
    pub verify: Option<PathBuf>,
    /// Run metadata, including the timestamp.
    pub meta: Option<PathBuf>,
}

/// A whole scan, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub model: Model,
    pub grid: Grid,
    /// Normalization steps.
    pub j: usize,
    /// Analyticity radius; defaults to half the distance to the nearest denominator zero.
    #[serde(default)]
    pub r0: Option<f64>,
    /// Radius of the ball on which normalization prunes, around each initial action.
    #[serde(default = "default_ball")]
    pub ball_radius: f64,
    #[serde(default)]
    pub normalization: Normalization,
    /// Largest action displacement of the back transformation, as a fraction of `ball_radius`.
    #[serde(default = "default_identity_cap")]
    pub identity_cap: f64,
    /// Secondary lines with a smaller harmonic amplitude are not listed.
    #[serde(default = "default_line_floor")]
    pub line_floor: f64,
    #[serde(default)]
    pub controls: Option<Controls>,
    #[serde(default)]
    pub optimize: OptControls,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_ball() -> f64 {
    0.05
}

fn default_identity_cap() -> f64 {
    0.1
}

fn default_line_floor() -> f64 {
    1e-12
}

impl ScanConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScanConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0) {
                return Err(Error::Config("r0 must be positive".into()));
            }
        }
        if !(self.ball_radius > 0.0) || !(self.identity_cap > 0.0) {
            return Err(Error::Config("ball_radius and identity_cap must be positive".into()));
        }
        let n = self.model.n();
        match (&self.grid, n) {
            (Grid::OneD { .. }, 2) | (Grid::TwoD { .. }, 3) => Ok(()),
            _ => Err(Error::Config("grid dimension does not match the model".into())),
        }
    }

    /// Normalization controls with the model's ε-degree cap filled in.
    pub fn normalize_controls(&self) -> Controls {
        let mut c = self.controls.clone().unwrap_or_default();
        if self.controls.is_none() {
            c.eps_cap = self.model.eps_cap();
        }
        c
    }
}

/// Order class of a resonance line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineClass {
    #[serde(rename = "main")]
    Main,
    #[serde(rename = "secondary-1")]
    Secondary1,
    #[serde(rename = "secondary-2")]
    Secondary2,
    #[serde(rename = "secondary-3")]
    Secondary3,
}

impl LineClass {
    fn secondary(j: usize) -> Option<Self> {
        match j {
            1 => Some(LineClass::Secondary1),
            2 => Some(LineClass::Secondary2),
            3 => Some(LineClass::Secondary3),
            _ => None,
        }
    }
}

impl std::fmt::Display for LineClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LineClass::Main => "main",
            LineClass::Secondary1 => "secondary-1",
            LineClass::Secondary2 => "secondary-2",
            LineClass::Secondary3 => "secondary-3",
        })
    }
}

impl std::str::FromStr for LineClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "main" => LineClass::Main,
            "secondary-1" => LineClass::Secondary1,
            "secondary-2" => LineClass::Secondary2,
            "secondary-3" => LineClass::Secondary3,
            _ => return Err(Error::Config(format!("unknown line class {s}"))),
        })
    }
}

/// A resonance k·ω(p) = 0 near the scanned region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonanceLine {
    pub k: Vec<i32>,
    /// The resonant action reached from the scan along k.
    pub action: Vec<f64>,
    pub halfwidth: f64,
    pub class: LineClass,
    #[serde(skip)]
    amplitude: f64,
}

impl PartialEq for ResonanceLine {
    fn eq(&self, o: &Self) -> bool {
        self.k == o.k && self.action == o.action && self.halfwidth == o.halfwidth && self.class == o.class
    }
}

impl ResonanceLine {
    pub fn new(k: Vec<i32>, action: Vec<f64>, halfwidth: f64, class: LineClass) -> Self {
        Self { k, action, halfwidth, class, amplitude: f64::NAN }
    }
}

/// Outcome of integrating one successful point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiedPoint {
    /// Position in the record list.
    pub index: usize,
    pub z: i64,
    pub bound: f64,
    pub horizon: f64,
    #[serde(flatten)]
    pub result: Verification,
}

#[derive(Clone, Debug, Default)]
pub struct ScanOutput {
    pub records: Vec<StabilityRecord>,
    pub lines: Vec<ResonanceLine>,
    pub verified: Vec<VerifiedPoint>,
    /// Initial condition in the original coordinates, for success records.
    pub origins: Vec<Option<(Vec<f64>, Vec<f64>)>>,
}

struct PointResult {
    rec: StabilityRecord,
    origin: Option<(Vec<f64>, Vec<f64>)>,
    lines: Vec<ResonanceLine>,
}

/// Initial guess for the actions: ∇N(p) = ω on the free actions, 0 in the time slot.
fn guess(split: &Split, omega: &[f64]) -> Vec<f64> {
    let h = &split.h;
    (0..h.n())
        .map(|j| if h.quadratic[j] != 0.0 { (omega[j] - h.linear[j]) / h.quadratic[j] } else { 0.0 })
        .collect()
}

fn ball_at(p: &[f64], radius: f64) -> Ball {
    let mut center = [0.0; MAX_DIM];
    center[..p.len()].copy_from_slice(p);
    Ball { center, radius }
}

/// Splits, generating functions and region after every step, up to the
/// last step that could be computed.
struct Normal {
    splits: Vec<Split>,
    chis: Vec<PoissonSeries>,
    /// regions[j] is the region after step j.
    regions: Vec<Region>,
    /// First step that failed, and why.
    error: Option<(usize, String)>,
}

impl Normal {
    /// Why the output of step j is unusable on `ball`, if it is.
    fn stop(&self, j: usize, ball: usize) -> Option<String> {
        if let Some((s, note)) = &self.error {
            if *s <= j {
                return Some(note.clone());
            }
        }
        let f = self.regions.last().expect("nonempty").fate[ball];
        (f.last_good() < j).then(|| format!("ball {}", fate_note(&f)))
    }
}

/// Runs up to `j` steps. With `single`, stops once the only ball is lost.
fn normalize_steps(base: &Split, j: usize, c: &Controls, region: Region, single: bool) -> Normal {
    let mut n = Normal {
        splits: vec![base.clone()],
        chis: Vec::new(),
        regions: vec![region],
        error: None,
    };
    for s in 1..=j {
        let mut region = n.regions.last().expect("nonempty").clone();
        match step(n.splits.last().expect("nonempty"), c, &mut region) {
            Ok((split, chi, _)) => {
                n.splits.push(split);
                n.chis.push(chi);
                n.regions.push(region);
            }
            Err(e) => {
                n.error = Some((s, format!("normalize: {e}")));
                break;
            }
        }
        if single && n.regions.last().expect("nonempty").fate[0] != Fate::Active {
            break;
        }
    }
    n
}

fn fate_note(f: &Fate) -> String {
    match f {
        Fate::Active => "active".into(),
        Fate::Singular { step } => format!("singular at step {step}"),
        Fate::Diverged { step } => format!("diverged at step {step}"),
        Fate::Grew { step } => format!("grew at step {step}"),
    }
}

/// Sup-norm of the action displacement of the back transformation, sampled
/// on the ball of radius `r` around `p0` over an angle grid.
fn displacement(maps: &[CoordinateMap], p0: &[f64], free: &[usize], r: f64, cap: f64) -> Result<f64> {
    let n = p0.len();
    let per: usize = if n == 2 { 16 } else { 8 };
    let mut ps = vec![p0.to_vec()];
    for &j in free {
        for s in [-1.0, 1.0] {
            let mut p = p0.to_vec();
            p[j] += s * r;
            ps.push(p);
        }
    }
    let mut worst = 0.0f64;
    let total = per.pow(n as u32);
    for p in &ps {
        for flat in 0..total {
            let mut rem = flat;
            let q: Vec<f64> = (0..n)
                .map(|_| {
                    let i = rem % per;
                    rem /= per;
                    std::f64::consts::TAU * i as f64 / per as f64
                })
                .collect();
            let (pb, _) = back_transform(p, &q, maps, cap)?;
            for &j in free {
                worst = worst.max((pb[j] - p[j]).abs());
            }
        }
    }
    Ok(worst)
}

/// Estimate, back transformation and lines for one point, given its normalization.
fn finish_point(cfg: &ScanConfig, c: &Controls, pt: &GridPoint, j: usize, normal: &Normal, ball: usize) -> PointResult {
    let stop = normal.stop(j, ball);
    let top = j.min(normal.splits.len() - 1);
    let splits = &normal.splits[..=top];
    let chis = &normal.chis[..top];
    let region = &normal.regions[top];
    let base = &splits[0];
    let p_guess = guess(base, &pt.omega);
    let fail = |status: Status, p0: Vec<f64>, notes: String| PointResult {
        rec: StabilityRecord::failed(pt.z, pt.omega.clone(), p0, j, status, notes),
        origin: None,
        lines: Vec::new(),
    };
    let lines = point_lines(cfg, splits, &region.balls[ball]);
    if let Some(note) = stop {
        return PointResult { lines, ..fail(Status::FailNorm, p_guess, note) };
    }
    let split = &splits[j];
    let p0 = match invert_frequency(&split.h, &pt.omega, &p_guess, 1e-14) {
        Ok(p) => p,
        Err(e) => return PointResult { lines, ..fail(Status::FailInversion, p_guess, e.to_string()) },
    };
    let b = &region.balls[ball];
    let off = (0..p0.len()).map(|i| (p0[i] - b.center[i]).powi(2)).sum::<f64>().sqrt();
    let r_s = singularity_distance(split, &p0);
    let r0 = (b.radius - off).min(cfg.r0.unwrap_or(0.5 * r_s));
    if !(r0 > 0.0) {
        return PointResult { lines, ..fail(Status::FailNorm, p0, "initial action outside the ball".into()) };
    }
    let mut rec = match optimize_full(split, &p0, r0, &cfg.optimize) {
        Ok(r) => r,
        Err(e) => return PointResult { lines, ..fail(Status::FailNorm, p0, e.to_string()) },
    };
    rec.z = pt.z;
    rec.omega = pt.omega.clone();
    rec.j = j;
    let mut origin = None;
    if rec.status == Status::Success {
        let cap = cfg.identity_cap * cfg.ball_radius;
        let free: Vec<usize> = (0..p0.len()).filter(|&j| split.h.quadratic[j] != 0.0).collect();
        let mut reg = region.clone();
        let maps: Result<Vec<CoordinateMap>> = chis.iter().map(|chi| CoordinateMap::new(chi, false, c, &mut reg)).collect();
        let moved = maps.and_then(|maps| {
            let d = displacement(&maps, &p0, &free, rec.r, cap)?;
            let q0 = vec![0.0; p0.len()];
            Ok((d, back_transform(&p0, &q0, &maps, cap)?))
        });
        match moved {
            Ok((d, o)) => {
                rec.r_backtransformed = rec.r + 2.0 * d;
                origin = Some(o);
            }
            Err(e) => {
                rec.status = Status::FailResonant;
                rec.t = f64::NAN;
                push_note(&mut rec.notes, &format!("back-transform: {e}"));
            }
        }
    }
    PointResult { rec, origin, lines }
}

fn push_note(notes: &mut String, s: &str) {
    if !notes.is_empty() {
        notes.push(';');
    }
    notes.push_str(s);
}

/// Upper-half representative of ±k.
fn upper(k: &Index) -> Index {
    if index::is_upper(k) {
        *k
    } else {
        index::neg(k)
    }
}

/// Harmonics first present after step j, with their resonant actions inside the ball.
fn point_lines(cfg: &ScanConfig, splits: &[Split], ball: &Ball) -> Vec<ResonanceLine> {
    let mut seen: std::collections::BTreeSet<Index> = splits[0].r.entries().keys().map(upper).collect();
    let mut out = Vec::new();
    let n = splits[0].h.n();
    let near = &ball.center[..n];
    for (j, split) in splits.iter().enumerate().skip(1) {
        let Some(class) = LineClass::secondary(j) else { break };
        let fresh: Vec<Index> = split.r.entries().keys().map(upper).filter(|k| !seen.contains(k)).collect();
        for k in fresh {
            seen.insert(k);
            let Ok((p, hw)) = resonance_halfwidth(&split.h, &split.r, &k, near) else { continue };
            let dist = (0..n).map(|i| (p[i] - near[i]).powi(2)).sum::<f64>().sqrt();
            if !(dist <= ball.radius) || !hw.is_finite() {
                continue;
            }
            let amp = split.r.get(&k).and_then(|c| c.eval(&p).ok()).map_or(0.0, |v| 2.0 * v.norm());
            if amp < cfg.line_floor {
                continue;
            }
            out.push(ResonanceLine {
                k: k[..n].to_vec(),
                action: p,
                halfwidth: hw,
                class,
                amplitude: amp,
            });
        }
    }
    out
}

/// Main lines from the harmonics of the model's remainder, reached from `near`.
pub fn main_lines(model: &Model, near: &[f64]) -> Result<Vec<ResonanceLine>> {
    let (h, r) = model.build()?;
    let split = Split::new(h, r);
    let n = split.h.n();
    let mut out = Vec::new();
    let ks: std::collections::BTreeSet<Index> = split.r.entries().keys().map(upper).collect();
    for k in ks {
        if let Ok((p, hw)) = resonance_halfwidth(&split.h, &split.r, &k, near) {
            out.push(ResonanceLine::new(k[..n].to_vec(), p, hw, LineClass::Main));
        }
    }
    Ok(out)
}

/// Merges per-point lines: one line per harmonic, the largest amplitude wins.
fn merge_lines(main: Vec<ResonanceLine>, per_point: impl Iterator<Item = ResonanceLine>) -> Vec<ResonanceLine> {
    let mut best: BTreeMap<Vec<i32>, ResonanceLine> = BTreeMap::new();
    for l in per_point {
        match best.get(&l.k) {
            Some(b) if !(l.amplitude > b.amplitude) => {}
            _ => {
                best.insert(l.k.clone(), l);
            }
        }
    }
    let main_ks: std::collections::BTreeSet<Vec<i32>> = main.iter().map(|l| l.k.clone()).collect();
    let mut out = main;
    let mut sec: Vec<ResonanceLine> = best.into_values().filter(|l| !main_ks.contains(&l.k)).collect();
    sec.sort_by(|a, b| a.class.cmp(&b.class).then_with(|| a.k.cmp(&b.k)));
    out.extend(sec);
    out
}

/// The per-point pipeline over the whole grid, then sampled verification.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanOutput> {
    Ok(run_scan_steps(cfg, &[cfg.j])?.pop().expect("one output per J"))
}

/// One scan per entry of `js`, sharing the normalization: each point is
/// normalized once up to the largest J.
pub fn run_scan_steps(cfg: &ScanConfig, js: &[usize]) -> Result<Vec<ScanOutput>> {
    cfg.validate()?;
    let (h, r) = cfg.model.build()?;
    let base = Split::new(h, r);
    let c = cfg.normalize_controls();
    let points = cfg.grid.points()?;
    let jmax = js.iter().copied().max().unwrap_or(0);
    let results: Vec<Vec<PointResult>> = match cfg.normalization {
        Normalization::PerPoint => points
            .par_iter()
            .map(|pt| {
                let region = Region::new(vec![ball_at(&guess(&base, &pt.omega), cfg.ball_radius)]);
                let normal = normalize_steps(&base, jmax, &c, region, true);
                js.iter().map(|&j| finish_point(cfg, &c, pt, j, &normal, 0)).collect()
            })
            .collect(),
        Normalization::Global => {
            let balls = points.iter().map(|pt| ball_at(&guess(&base, &pt.omega), cfg.ball_radius)).collect();
            let normal = normalize_steps(&base, jmax, &c, Region::new(balls), false);
            points
                .par_iter()
                .enumerate()
                .map(|(i, pt)| js.iter().map(|&j| finish_point(cfg, &c, pt, j, &normal, i)).collect())
                .collect()
        }
    };
    let near = points.first().map(|pt| guess(&base, &pt.omega)).unwrap_or_else(|| vec![0.0; base.h.n()]);
    let main = main_lines(&cfg.model, &near)?;
    let mut outs = vec![ScanOutput::default(); js.len()];
    let mut per_point = vec![Vec::new(); js.len()];
    for point in results {
        for (i, pr) in point.into_iter().enumerate() {
            outs[i].records.push(pr.rec);
            outs[i].origins.push(pr.origin);
            per_point[i].extend(pr.lines);
        }
    }
    for (out, lines) in outs.iter_mut().zip(per_point) {
        out.lines = merge_lines(main.clone(), lines.into_iter());
        out.verified = verify_sample(cfg, out)?;
    }
    Ok(outs)
}

/// Main lines plus the secondary lines found by normalizing around every grid
/// point, without running the estimate.
pub fn resonance_lines(cfg: &ScanConfig) -> Result<Vec<ResonanceLine>> {
    cfg.validate()?;
    let (h, r) = cfg.model.build()?;
    let base = Split::new(h, r);
    let c = cfg.normalize_controls();
    let points = cfg.grid.points()?;
    let per_point: Vec<Vec<ResonanceLine>> = points
        .par_iter()
        .map(|pt| {
            let region = Region::new(vec![ball_at(&guess(&base, &pt.omega), cfg.ball_radius)]);
            let normal = normalize_steps(&base, cfg.j, &c, region, true);
            let top = normal.splits.len() - 1;
            point_lines(cfg, &normal.splits, &normal.regions[top].balls[0])
        })
        .collect();
    let near = points.first().map(|pt| guess(&base, &pt.omega)).unwrap_or_else(|| vec![0.0; base.h.n()]);
    Ok(merge_lines(main_lines(&cfg.model, &near)?, per_point.into_iter().flatten()))
}

/// Successful points spread evenly over the record list, integrated in the
/// original coordinates from their back-transformed initial condition.
fn verify_sample(cfg: &ScanConfig, out: &ScanOutput) -> Result<Vec<VerifiedPoint>> {
    let ok: Vec<usize> = (0..out.records.len())
        .filter(|&i| out.records[i].status == Status::Success && out.origins[i].is_some())
        .collect();
    let m = cfg.verify.samples.min(ok.len());
    let picks: Vec<usize> = (0..m).map(|i| ok[i * ok.len() / m]).collect();
    picks
        .par_iter()
        .map(|&i| {
            let rec = &out.records[i];
            let (p, q) = out.origins[i].as_ref().expect("filtered");
            let horizon = rec.t.min(cfg.verify.budget);
            let result = verify_integration(&cfg.model, p, q, rec.r_backtransformed, horizon)?;
            Ok(VerifiedPoint { index: i, z: rec.z, bound: rec.r_backtransformed, horizon, result })
        })
        .collect()
}
