//! Lie-series normalization around a fixed quadratic normal form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::IntegrableHamiltonian;
use crate::pseries::{index, ActionRational, Affine, Ball, Domain, Index, PoissonSeries, Selector};

/// Truncation controls shared by every Lie series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// Highest power of L_χ kept.
    pub max_order: usize,
    /// Terms whose bound on the domain falls below this are dropped.
    pub mag: f64,
    /// Terms below this fraction of a series' leading order on every ball are dropped.
    pub rel_mag: f64,
    /// Terms of total ε-degree at least this are dropped.
    pub eps_cap: Option<u32>,
    /// Harmonics with ‖k‖₁ above this are dropped.
    pub fourier_cap: i32,
    pub term_budget: usize,
    /// Ball radius as a fraction of the distance to the nearest denominator zero.
    pub shrink: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            max_order: 12,
            mag: 1e-20,
            rel_mag: 1e-10,
            eps_cap: None,
            fourier_cap: 100,
            term_budget: 2_000_000,
            shrink: 0.5,
        }
    }
}

/// Why a ball stopped taking part in pruning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    Active,
    /// Center lies on a denominator zero.
    Singular { step: usize },
    /// A Lie series stopped decreasing on the ball.
    Diverged { step: usize },
    /// The remainder grew on the ball.
    Grew { step: usize },
}

impl Fate {
    /// Last step whose output is usable on the ball.
    pub fn last_good(&self) -> usize {
        match *self {
            Fate::Active => usize::MAX,
            Fate::Singular { step } | Fate::Diverged { step } | Fate::Grew { step } => step.saturating_sub(1),
        }
    }
}

/// The balls on which magnitudes are measured. With no balls at all nothing is
/// pruned by magnitude.
#[derive(Clone, Debug, Default)]
pub struct Region {
    pub balls: Vec<Ball>,
    pub fate: Vec<Fate>,
}

impl Region {
    pub fn new(balls: Vec<Ball>) -> Self {
        let fate = vec![Fate::Active; balls.len()];
        Self { balls, fate }
    }

    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn active(&self) -> Domain {
        Domain {
            balls: self.active_ids().into_iter().map(|i| self.balls[i].clone()).collect(),
        }
    }

    fn active_ids(&self) -> Vec<usize> {
        (0..self.balls.len()).filter(|&i| self.fate[i] == Fate::Active).collect()
    }

    fn shrink(&mut self, forms: &[Affine], frac: f64, step: usize) {
        for (b, fate) in self.balls.iter_mut().zip(self.fate.iter_mut()) {
            if *fate != Fate::Active {
                continue;
            }
            for f in forms {
                b.radius = b.radius.min(frac * f.distance(&b.center));
            }
            if !(b.radius > 0.0) {
                *fate = Fate::Singular { step };
            }
        }
    }

    /// Drops harmonics above the cap and terms below `max(mag, floor_b)/scale` on every active ball.
    fn prune(&self, s: &PoissonSeries, c: &Controls, floor: Option<&[f64]>, scale: f64) -> Result<PoissonSeries> {
        let s = s.filter(|k| index::order(k) <= c.fourier_cap);
        let out = if self.balls.is_empty() {
            s.prune_balls(&Domain::default(), None, c.eps_cap)?
        } else {
            let ids = self.active_ids();
            let fl: Vec<f64> = ids
                .iter()
                .map(|&i| floor.map_or(c.mag, |f| f[i].max(c.mag)) / scale.abs())
                .collect();
            s.prune_balls(&self.active(), Some(&fl), c.eps_cap)?
        };
        if out.term_count() > c.term_budget {
            return Err(Error::TermBudget(out.term_count()));
        }
        Ok(out)
    }

    /// {s, χ} with products below the floors skipped, then pruned.
    fn bracket(
        &self,
        s: &PoissonSeries,
        chi: &PoissonSeries,
        c: &Controls,
        floor: Option<&[f64]>,
        scale: f64,
    ) -> Result<PoissonSeries> {
        if self.balls.is_empty() {
            return self.prune(&s.bracket(chi)?, c, None, scale);
        }
        let ids = self.active_ids();
        let fl: Vec<f64> = ids
            .iter()
            .map(|&i| floor.map_or(c.mag, |f| f[i].max(c.mag)) / scale.abs())
            .collect();
        let raw = s.bracket_pruned(chi, &self.active(), &fl, c.eps_cap, c.term_budget)?;
        self.prune(&raw, c, floor, scale)
    }

    /// Norms on every ball; NaN for inactive balls.
    fn norms(&self, s: &PoissonSeries) -> Result<Vec<f64>> {
        let mut out = vec![f64::NAN; self.balls.len()];
        let ids = self.active_ids();
        if ids.is_empty() {
            return Ok(out);
        }
        for (id, v) in ids.iter().zip(s.ball_norms(&self.active())?) {
            out[*id] = v;
        }
        Ok(out)
    }

    fn floors(&self, s: &PoissonSeries, c: &Controls) -> Result<Vec<f64>> {
        Ok(self
            .norms(s)?
            .into_iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { (c.rel_mag * v).max(c.mag) })
            .collect())
    }
}

/// N + Z + R with a resonant module Λ.
#[derive(Clone, Debug)]
pub struct Split {
    pub h: IntegrableHamiltonian,
    pub r: PoissonSeries,
    pub lambda: Vec<Index>,
    pub step: usize,
}

impl Split {
    /// Moves the mean of `r` into Z.
    pub fn new(h: IntegrableHamiltonian, r: PoissonSeries) -> Self {
        let mean = r.mean();
        let r = r.filter(|k| !index::is_zero(k));
        let z = h.z.add(&mean);
        Self {
            h: h.with_z(z),
            r,
            lambda: Vec::new(),
            step: 0,
        }
    }

    pub fn energy(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        Ok(self.h.energy(p)? + self.r.evaluate_real(p, q)?)
    }
}

/// χ_k = R_k/(i k·∇N) for every k of `r`.
pub fn solve_homological(h: &IntegrableHamiltonian, r: &PoissonSeries) -> Result<PoissonSeries> {
    for k in r.entries().keys() {
        let (b, c) = h.k_dot_omega(k);
        if b == 0.0 && c.iter().all(|x| *x == 0.0) {
            return Err(Error::IdenticallyResonant(*k));
        }
    }
    Ok(r.map_coeffs(|k, c| {
        let (b, cc) = h.k_dot_omega(k);
        let inv = ActionRational::inverse_affine(Complex64::new(0.0, -1.0), b, cc, [0, 0]).expect("checked nonzero");
        c.mul(&inv)
    }))
}

/// {f, N} evaluated at a point: Σ i k·∇N(p) f_k(p) e^{ik·q}.
pub fn eval_normal_bracket(h: &IntegrableHamiltonian, f: &PoissonSeries, p: &[f64], q: &[f64]) -> Result<f64> {
    let w = h.normal_frequency(p);
    let mut s = Complex64::new(0.0, 0.0);
    for (k, c) in f.entries() {
        let kw = index::dot(k, &w);
        let ph = index::dot(k, q);
        s += Complex64::new(0.0, kw) * c.eval(p)? * Complex64::from_polar(1.0, ph);
    }
    Ok(s.re)
}

/// {N, χ} computed in closed form; cancels every denominator that χ added.
pub fn normal_bracket_closed(h: &IntegrableHamiltonian, chi: &PoissonSeries) -> Option<PoissonSeries> {
    let mut entries = std::collections::BTreeMap::new();
    for (k, c) in chi.entries() {
        let (b, cc) = h.k_dot_omega(k);
        let v = c.mul_affine(b, cc)?.scale(Complex64::new(0.0, -1.0));
        if !v.is_zero() {
            entries.insert(*k, v);
        }
    }
    PoissonSeries::from_entries(chi.n_angles(), entries).ok()
}

/// Per-order norms (maximum over balls), the pruning floors used, and the
/// balls on which the orders stopped decreasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LieReport {
    pub order_norms: Vec<f64>,
    pub floors: Vec<f64>,
    pub diverged: Vec<usize>,
}

/// Σ_{j≥1} coef(j) L_χ^j g, with L_χ f = {f, χ}. Without `floors`, they are
/// taken relative to the first order.
pub fn lie_sum(
    g: &PoissonSeries,
    chi: &PoissonSeries,
    coef: impl Fn(usize) -> f64,
    controls: &Controls,
    region: &mut Region,
    step: usize,
    floors: Option<Vec<f64>>,
) -> Result<(PoissonSeries, LieReport)> {
    let mut report = LieReport::default();
    let mut acc = PoissonSeries::zero(g.n_angles());
    if chi.is_zero() || g.is_zero() {
        report.floors = floors.unwrap_or_default();
        return Ok((acc, report));
    }
    let bounded = !region.balls.is_empty();
    let mut floors = floors;
    let mut cur = g.clone();
    let mut history: Vec<Vec<f64>> = Vec::new();
    for j in 1..=controls.max_order {
        let cj = coef(j);
        if floors.is_none() && bounded {
            let first = region.bracket(&cur, chi, controls, None, cj)?;
            floors = Some(region.floors(&first.scale(cj), controls)?);
        }
        cur = region.bracket(&cur, chi, controls, floors.as_deref(), cj)?;
        if cur.is_zero() {
            break;
        }
        let term = cur.scale(cj);
        acc = acc.add(&term)?;
        if !bounded {
            report.order_norms.push(f64::NAN);
            continue;
        }
        let norms = region.norms(&term)?;
        report.order_norms.push(norms.iter().cloned().filter(|v| !v.is_nan()).fold(0.0, f64::max));
        let fl = floors.as_deref().expect("set on the first order");
        if history.len() >= 3 {
            let mut dead = Vec::new();
            for id in region.active_ids() {
                let h = |back: usize| history[history.len() - back][id];
                if norms[id] >= fl[id] && norms[id] >= h(1) && h(1) >= h(2) && h(2) >= h(3) {
                    dead.push(id);
                }
            }
            for &id in &dead {
                region.fate[id] = Fate::Diverged { step };
            }
            report.diverged.extend(dead);
        }
        history.push(norms.clone());
        if region.active_ids().iter().all(|&id| norms[id] < fl[id]) {
            break;
        }
    }
    report.floors = floors.unwrap_or_default();
    let acc = region.prune(&acc, controls, Some(&report.floors).filter(|f| !f.is_empty()).map(|f| f.as_slice()), 1.0)?;
    Ok((acc, report))
}

/// exp(±L_χ) f.
pub fn lie_apply(
    f: &PoissonSeries,
    chi: &PoissonSeries,
    inverse: bool,
    controls: &Controls,
    region: &mut Region,
) -> Result<(PoissonSeries, LieReport)> {
    let sign: f64 = if inverse { -1.0 } else { 1.0 };
    let (s, rep) = lie_sum(f, chi, |j| sign.powi(j as i32) / factorial(j), controls, region, 0, None)?;
    Ok((f.add(&s)?, rep))
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|x| x as f64).product()
}

/// What one step did.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub lie: Vec<LieReport>,
    /// Remainder norm per ball before and after; NaN for inactive balls.
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

/// One normalization step; returns the new split and the generating function.
pub fn step(split: &Split, controls: &Controls, region: &mut Region) -> Result<(Split, PoissonSeries, StepReport)> {
    let n = split.r.n_angles();
    let next = split.step + 1;
    let cap = Selector::OrderAtMost(controls.fourier_cap);
    let rn = split.r.project(&Selector::Nonresonant(&split.lambda)).project(&cap);
    let rl = split.r.project(&Selector::Resonant(&split.lambda));
    let chi = solve_homological(&split.h, &rn)?;
    region.shrink(&chi.forms(), controls.shrink, next);
    let chi_floor = if region.balls.is_empty() { None } else { Some(region.floors(&chi, controls)?) };
    let chi = region.prune(&chi, controls, chi_floor.as_deref(), 1.0)?;
    let mut rep = StepReport {
        before: region.norms(&split.r)?,
        ..Default::default()
    };

    let (u, lu) = lie_sum(&rn, &chi, |j| j as f64 / factorial(j + 1), controls, region, next, None)?;
    let floors = if lu.floors.is_empty() { None } else { Some(lu.floors.clone()) };
    let zr = PoissonSeries::constant(n, split.h.z.clone()).add(&rl)?;
    let (v, lv) = lie_sum(&zr, &chi, |j| 1.0 / factorial(j), controls, region, next, floors.clone())?;
    rep.lie = vec![lu, lv];
    let rp = u.add(&v)?;
    let z = split.h.z.add(&rp.mean());
    let r = rl.add(&rp.filter(|k| !index::is_zero(k)))?;
    let r = region.prune(&r, controls, floors.as_deref(), 1.0)?;

    rep.after = region.norms(&r)?;
    for (id, (b, a)) in rep.before.iter().zip(&rep.after).enumerate() {
        if a > b && region.fate[id] == Fate::Active {
            region.fate[id] = Fate::Grew { step: next };
        }
    }
    let out = Split {
        h: split.h.with_z(z),
        r,
        lambda: split.lambda.clone(),
        step: next,
    };
    Ok((out, chi, rep))
}

/// The result of J successive steps.
#[derive(Clone, Debug)]
pub struct Normalized {
    /// splits[j] is the Hamiltonian after j steps.
    pub splits: Vec<Split>,
    pub chis: Vec<PoissonSeries>,
    pub reports: Vec<StepReport>,
}

impl Normalized {
    pub fn last(&self) -> &Split {
        self.splits.last().expect("at least the input split")
    }
}

/// J steps with the same N in every homological equation.
pub fn normalize_many(split: Split, j: usize, controls: &Controls, region: &mut Region) -> Result<Normalized> {
    let mut out = Normalized {
        splits: vec![split],
        chis: Vec::new(),
        reports: Vec::new(),
    };
    for _ in 0..j {
        let (s, chi, rep) = step(out.last(), controls, region)?;
        out.splits.push(s);
        out.chis.push(chi);
        out.reports.push(rep);
    }
    Ok(out)
}

/// The displacements exp(±L_χ)x − x of every coordinate.
#[derive(Clone, Debug)]
pub struct CoordinateMap {
    pub dp: Vec<PoissonSeries>,
    pub dq: Vec<PoissonSeries>,
}

impl CoordinateMap {
    pub fn new(chi: &PoissonSeries, inverse: bool, controls: &Controls, region: &mut Region) -> Result<Self> {
        let n = chi.n_angles();
        let sign: f64 = if inverse { -1.0 } else { 1.0 };
        let coef = |j: usize| sign.powi(j as i32 + 1) / factorial(j + 1);
        let series = |g: PoissonSeries, region: &mut Region| -> Result<PoissonSeries> {
            let floors = if region.balls.is_empty() { None } else { Some(region.floors(&g, controls)?) };
            let g = region.prune(&g, controls, floors.as_deref(), 1.0)?;
            let (rest, _) = lie_sum(&g, chi, coef, controls, region, 0, floors)?;
            g.scale(sign).add(&rest)
        };
        let mut dp = Vec::with_capacity(n);
        let mut dq = Vec::with_capacity(n);
        for j in 0..n {
            dp.push(series(chi.deriv_angle(j).scale(-1.0), region)?);
            dq.push(series(chi.deriv_action(j), region)?);
        }
        Ok(Self { dp, dq })
    }

    fn apply(&self, p: &mut [f64], q: &mut [f64]) -> Result<f64> {
        let (p0, q0) = (p.to_vec(), q.to_vec());
        let mut disp = 0.0f64;
        for j in 0..p.len() {
            let d = self.dp[j].evaluate_real(&p0, &q0)?;
            p[j] += d;
            disp = disp.max(d.abs());
            q[j] += self.dq[j].evaluate_real(&p0, &q0)?;
        }
        Ok(disp)
    }
}

/// Maps normalized coordinates to original ones: the last transform acts first.
/// Fails if any action moves by more than `cap`.
pub fn back_transform(p: &[f64], q: &[f64], maps: &[CoordinateMap], cap: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut p, mut q) = (p.to_vec(), q.to_vec());
    for m in maps.iter().rev() {
        let d = m.apply(&mut p, &mut q)?;
        if d > cap {
            return Err(Error::NotNearIdentity(d));
        }
    }
    Ok((p, q))
}

/// Maps original coordinates to normalized ones with the inverse maps, first transform first.
pub fn forward_transform(p: &[f64], q: &[f64], inverse_maps: &[CoordinateMap]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut p, mut q) = (p.to_vec(), q.to_vec());
    for m in inverse_maps {
        m.apply(&mut p, &mut q)?;
    }
    Ok((p, q))
}
