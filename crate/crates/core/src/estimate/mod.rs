//! Non-resonant stability estimates: the theorem's quantities and the
//! optimization of K, ℓ and s₀.

mod norm;

pub use norm::{coeff_sup, hessian_bound, imaginary_max_check, weighted_norm, ClassSums, Sup};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::IntegrableHamiltonian;
use crate::normalize::Split;
use crate::pseries::{index, Index, PoissonSeries, MAX_DIM};

/// Upper end of the s₀ search.
pub const S0_CAP: f64 = 10.0;

/// Parameters entering the theorem.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremInputs {
    pub p0: Vec<f64>,
    pub r0: f64,
    pub k: f64,
    pub s0: f64,
    pub ell: f64,
    pub alpha: f64,
    pub m: f64,
    pub e: f64,
}

/// Output of [`theorem_bounds`]. `ln_t` stays finite when `t` overflows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub r: f64,
    pub cal_e: f64,
    pub t: f64,
    pub ln_t: f64,
    pub applicable: bool,
}

/// ln T for T = s₀ r/(5E)·exp(K s₀/6).
pub fn ln_time(s0: f64, r: f64, e: f64, k: f64) -> f64 {
    s0.ln() + r.ln() - 5f64.ln() - e.ln() + k * s0 / 6.0
}

/// r = min(r_analytic, α/(MK)(1 − 1/ℓ)), ℰ = α r/(2⁷ ℓ K) and T.
pub fn theorem_bounds(inp: &TheoremInputs, r_analytic: f64) -> Bounds {
    let r = r_analytic.min(inp.alpha / (inp.m * inp.k) * (1.0 - 1.0 / inp.ell));
    let cal_e = inp.alpha * r / (128.0 * inp.ell * inp.k);
    let ln_t = ln_time(inp.s0, r, inp.e, inp.k);
    Bounds {
        r,
        cal_e,
        t: ln_t.exp(),
        ln_t,
        applicable: inp.e <= cal_e,
    }
}

/// min |k·ω| over nonzero integer k with ‖k‖₁ ≤ K. Fails below `tol`.
pub fn alpha_max(omega: &[f64], k_cut: f64, tol: f64) -> Result<f64> {
    let a = lattice_min(omega, k_cut.floor() as i64)?;
    if a <= tol {
        return Err(Error::Resonant(a));
    }
    Ok(a)
}

/// For each choice of all but the last component, the nearest admissible last one.
fn lattice_min(omega: &[f64], kk: i64) -> Result<f64> {
    let n = omega.len();
    if !(2..=3).contains(&n) || kk < 1 {
        return Err(Error::InvalidParam(format!("lattice of dimension {n} with K = {kk}")));
    }
    let last = omega[n - 1];
    let mut best = f64::INFINITY;
    let mut visit = |head: &[i64]| {
        let used: i64 = head.iter().map(|x| x.abs()).sum();
        let budget = kk - used;
        let s: f64 = head.iter().zip(omega).map(|(k, w)| *k as f64 * w).sum();
        let all_zero = head.iter().all(|&x| x == 0);
        let mut cands = vec![];
        if last != 0.0 {
            let t = -s / last;
            cands.push(t.floor());
            cands.push(t.ceil());
        }
        cands.push(budget as f64);
        cands.push(-(budget as f64));
        cands.push(0.0);
        for c in cands {
            let c = c.clamp(-(budget as f64), budget as f64);
            if all_zero && c == 0.0 {
                continue;
            }
            best = best.min((s + c * last).abs());
        }
    };
    // Half-lattice: the first nonzero head component is positive.
    match n {
        2 => {
            for k1 in 0..=kk {
                visit(&[k1]);
            }
        }
        _ => {
            for k1 in 0..=kk {
                let rest = kk - k1;
                let lo = if k1 == 0 { 0 } else { -rest };
                for k2 in lo..=rest {
                    visit(&[k1, k2]);
                }
            }
        }
    }
    Ok(best)
}

/// ℓ maximizing ℰ(ℓ) ∝ (1/ℓ)·min(r_d, ρ(1 − 1/ℓ)), ρ = α/(MK).
pub fn optimize_ell(alpha: f64, k: f64, m: f64, r_d: f64) -> f64 {
    let rho = alpha / (m * k);
    if r_d >= rho / 2.0 {
        2.0
    } else {
        rho / (rho - r_d)
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 * hi.abs().max(1e-300) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Root of E(s₀) = ℰ by bisection, then the maximum of ln T on (0, s_max].
/// Returns (s₀*, ln T*), or `None` when E(0⁺) ≥ ℰ.
pub fn optimize_s0(norm_fn: impl Fn(f64) -> f64, cal_e: f64, r: f64, k: f64) -> Option<(f64, f64)> {
    if !(norm_fn(0.0) < cal_e) {
        return None;
    }
    let s_max = if norm_fn(S0_CAP) <= cal_e {
        S0_CAP
    } else {
        let (mut lo, mut hi) = (0.0, S0_CAP);
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if norm_fn(mid) <= cal_e {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if s_max <= 0.0 {
        return None;
    }
    let obj = |s: f64| ln_time(s, r, norm_fn(s), k);
    let mut best = (s_max, obj(s_max));
    for (a, b) in [(0.0, 0.3), (0.3, 0.7), (0.7, 1.0)] {
        let c = golden_max(&obj, a * s_max, b * s_max);
        if c.1 > best.1 {
            best = c;
        }
    }
    Some(best)
}

/// Pendulum estimate of a resonance: the resonant action p* reached from `near`
/// along k, and the half-width 2√(A/M*) with A the cosine amplitude of the k
/// harmonic at p* and M* the Hessian along k.
pub fn resonance_halfwidth(h: &IntegrableHamiltonian, r: &PoissonSeries, k: &Index, near: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = h.n();
    let kf: Vec<f64> = (0..n)
        .map(|j| if h.quadratic[j] != 0.0 { k[j] as f64 } else { 0.0 })
        .collect();
    let kn = kf.iter().map(|x| x * x).sum::<f64>().sqrt();
    if kn == 0.0 {
        return Err(Error::InvalidParam("harmonic has no free-action component".into()));
    }
    let u: Vec<f64> = kf.iter().map(|x| x / kn).collect();
    let kw = |p: &[f64]| -> Result<f64> {
        let w = h.frequency(p)?;
        Ok((0..n).map(|j| k[j] as f64 * w[j]).sum())
    };
    let along = |p: &[f64]| -> Result<f64> {
        let hs = h.hessian(p)?;
        Ok((0..n).map(|i| (0..n).map(|j| k[i] as f64 * hs[i][j] * u[j]).sum::<f64>()).sum())
    };
    let mut p = near.to_vec();
    let mut done = false;
    for _ in 0..50 {
        let g = kw(&p)?;
        let d = along(&p)?;
        if d == 0.0 || !g.is_finite() {
            return Err(Error::NoConvergence);
        }
        let t = g / d;
        for j in 0..n {
            p[j] -= t * u[j];
        }
        if t.abs() < 1e-14 * (1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::NoConvergence);
    }
    let amp = match r.get(k) {
        Some(c) => 2.0 * c.eval(&p)?.norm(),
        None => 0.0,
    };
    let m_star = (along(&p)? / kn).abs();
    if amp == 0.0 {
        return Ok((p, 0.0));
    }
    Ok((p, 2.0 * (amp / m_star).sqrt()))
}

/// Outcome of the estimate at one initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    FailNorm,
    FailResonant,
    FailInversion,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "success",
            Status::FailNorm => "fail-norm",
            Status::FailResonant => "fail-resonant",
            Status::FailInversion => "fail-inversion",
        })
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "success" => Status::Success,
            "fail-norm" => Status::FailNorm,
            "fail-resonant" => Status::FailResonant,
            "fail-inversion" => Status::FailInversion,
            _ => return Err(Error::Config(format!("unknown status {s}"))),
        })
    }
}

/// One row of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub z: i64,
    pub omega: Vec<f64>,
    pub p0: Vec<f64>,
    pub status: Status,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub s0: f64,
    pub ell: f64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "calE")]
    pub cal_e: f64,
    pub r: f64,
    pub r_backtransformed: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub notes: String,
}

impl StabilityRecord {
    pub fn failed(z: i64, omega: Vec<f64>, p0: Vec<f64>, j: usize, status: Status, notes: String) -> Self {
        Self {
            z,
            omega,
            p0,
            status,
            j,
            k: f64::NAN,
            s0: f64::NAN,
            ell: f64::NAN,
            alpha: f64::NAN,
            m: f64::NAN,
            e: f64::NAN,
            cal_e: f64::NAN,
            r: f64::NAN,
            r_backtransformed: f64::NAN,
            t: f64::NAN,
            notes,
        }
    }

    /// log₁₀ T, recomputed from the stored parameters when T overflows.
    pub fn log10_t(&self) -> f64 {
        if self.t.is_finite() {
            self.t.log10()
        } else {
            ln_time(self.s0, self.r, self.e, self.k) / std::f64::consts::LN_10
        }
    }
}

/// Constants of the K search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptControls {
    pub dk_initial: f64,
    pub dk_control: f64,
    pub n_control: usize,
    pub c_control: f64,
    /// Defaults to 10⁵ with one free action and 150 with two.
    pub k_control: Option<f64>,
    /// Defaults to ∞ with one free action and 10¹⁰⁰ with two.
    pub t_control: Option<f64>,
    pub tol: f64,
    pub safety: f64,
}

impl Default for OptControls {
    fn default() -> Self {
        Self {
            dk_initial: 10.0,
            dk_control: 0.1,
            n_control: 20,
            c_control: 1.0 / 3.0,
            k_control: None,
            t_control: None,
            tol: 1e-8,
            safety: 0.99,
        }
    }
}

/// Distance from p0 to the nearest zero of a denominator of Z or R.
pub fn singularity_distance(split: &Split, p0: &[f64]) -> f64 {
    let mut p = p0.to_vec();
    p.resize(MAX_DIM, 0.0);
    split
        .r
        .forms()
        .iter()
        .chain(split.h.z.forms())
        .map(|f| f.distance(&p))
        .fold(f64::INFINITY, f64::min)
}

struct Attempt {
    k: f64,
    s0: f64,
    ell: f64,
    alpha: f64,
    e: f64,
    cal_e: f64,
    r: f64,
    ln_t: f64,
}

/// The K search with inner optimization of ℓ and s₀, at one initial condition.
/// The record's z, J and back-transformed radius are left for the caller.
pub fn optimize_full(split: &Split, p0: &[f64], r0: f64, controls: &OptControls) -> Result<StabilityRecord> {
    let h = &split.h;
    let omega = h.frequency(p0)?;
    let mut rec = StabilityRecord::failed(0, omega.clone(), p0.to_vec(), split.step, Status::FailNorm, String::new());
    let r_s = singularity_distance(split, p0);
    let r_d = (controls.safety * r_s).min(r0);
    let m = hessian_bound(h, p0, r_d)?;
    rec.m = m;
    let sums = ClassSums::new(&split.r, p0, r_d)?;
    let mut notes = Vec::new();
    if sums.fallbacks > 0 {
        notes.push(format!("sup-fallback={}", sums.fallbacks));
    }
    let k_min = split.r.max_order() as f64;
    if sums.is_zero() {
        rec.status = Status::Success;
        rec.k = k_min;
        rec.e = 0.0;
        rec.r = r_d;
        rec.t = f64::INFINITY;
        notes.push("integrable".into());
        rec.notes = notes.join(";");
        return Ok(rec);
    }
    let free = h.n_free();
    let k_control = controls.k_control.unwrap_or(if free <= 1 { 1e5 } else { 150.0 });
    let ln_t_control = controls.t_control.unwrap_or(if free <= 1 { f64::INFINITY } else { 1e100 }).ln();
    // Lattice over the angles that carry a frequency: the free actions and the time slot.
    let w: Vec<f64> = omega.clone();

    let inner = |kk: f64| -> std::result::Result<Attempt, (Status, Option<Attempt>)> {
        let alpha = alpha_max(&w, kk, controls.tol).map_err(|_| (Status::FailResonant, None))?;
        let ell = optimize_ell(alpha, kk, m, r_d);
        let inp = TheoremInputs {
            p0: p0.to_vec(),
            r0: r_d,
            k: kk,
            s0: 0.0,
            ell,
            alpha,
            m,
            e: 0.0,
        };
        let b = theorem_bounds(&inp, r_d);
        let mut at = Attempt {
            k: kk,
            s0: 0.0,
            ell,
            alpha,
            e: sums.eval(0.0),
            cal_e: b.cal_e,
            r: b.r,
            ln_t: f64::NEG_INFINITY,
        };
        match optimize_s0(|s| sums.eval(s), b.cal_e, b.r, kk) {
            Some((s0, ln_t)) => {
                at.s0 = s0;
                at.e = sums.eval(s0);
                at.ln_t = ln_t;
                Ok(at)
            }
            None => Err((Status::FailNorm, Some(at))),
        }
    };

    let (mut ln_tmax, mut ln_t1, mut ln_t2) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut kk, mut dk, mut steps) = (k_min, controls.dk_initial, 0usize);
    let mut best: Option<Attempt> = None;
    let mut closest: Option<Attempt> = None;
    let mut all_resonant = true;
    while dk > controls.dk_control && kk < k_control && steps < controls.n_control && ln_tmax < ln_t_control {
        kk += dk;
        let ln_t = match inner(kk) {
            Ok(at) => {
                all_resonant = false;
                let lt = at.ln_t;
                if lt > ln_tmax {
                    ln_tmax = lt;
                    best = Some(at);
                }
                lt
            }
            Err((st, at)) => {
                if st != Status::FailResonant {
                    all_resonant = false;
                }
                if let Some(at) = at {
                    let ratio = at.cal_e / at.e;
                    if closest.as_ref().is_none_or(|c| ratio > c.cal_e / c.e) {
                        closest = Some(at);
                    }
                }
                f64::NEG_INFINITY
            }
        };
        if ln_t > ln_t1 {
            ln_t2 = ln_t1;
            ln_t1 = ln_t;
        } else {
            ln_t1 = ln_t2;
            kk = (kk - 2.0 * dk).max(k_min);
            dk *= controls.c_control;
        }
        steps += 1;
    }

    let (status, at) = match best {
        Some(at) => (Status::Success, Some(at)),
        None if all_resonant => (Status::FailResonant, None),
        None => (Status::FailNorm, closest),
    };
    rec.status = status;
    if let Some(at) = at {
        rec.k = at.k;
        rec.s0 = at.s0;
        rec.ell = at.ell;
        rec.alpha = at.alpha;
        rec.e = at.e;
        rec.cal_e = at.cal_e;
        rec.r = at.r;
        if status == Status::Success {
            rec.t = at.ln_t.exp();
            if !rec.t.is_finite() {
                notes.push(format!("log10T={:.6}", at.ln_t / std::f64::consts::LN_10));
            }
        }
    }
    rec.notes = notes.join(";");
    Ok(rec)
}

/// Independent recheck of the theorem's conditions for a success record.
/// Returns the list of violated conditions.
pub fn recheck(rec: &StabilityRecord, split: &Split, r_d: f64) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    if rec.status != Status::Success {
        return Ok(vec!["not a success record".into()]);
    }
    if rec.e == 0.0 {
        return Ok(bad);
    }
    // α: enumerate over the first component and take the nearest integer for the second-to-last.
    let kk = rec.k.floor() as i64;
    let w = &rec.omega;
    let mut amin = f64::INFINITY;
    let n = w.len();
    let pivot = n - 2;
    let others: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
    let mut heads: Vec<Vec<i64>> = vec![vec![]];
    for _ in &others {
        let mut next = Vec::new();
        for hd in &heads {
            let used: i64 = hd.iter().map(|x: &i64| x.abs()).sum();
            for v in -(kk - used)..=(kk - used) {
                let mut e = hd.clone();
                e.push(v);
                next.push(e);
            }
        }
        heads = next;
        if heads.len() > 50_000_000 {
            return Err(Error::InvalidParam("lattice too large to recheck".into()));
        }
    }
    for hd in heads {
        let used: i64 = hd.iter().map(|x| x.abs()).sum();
        let b = kk - used;
        let s: f64 = others.iter().zip(&hd).map(|(&j, &v)| v as f64 * w[j]).sum();
        let t = if w[pivot] != 0.0 { (-s / w[pivot]).round() } else { 0.0 };
        for c in [t.clamp(-(b as f64), b as f64), b as f64, -(b as f64)] {
            if c == 0.0 && hd.iter().all(|&v| v == 0) {
                continue;
            }
            amin = amin.min((s + c * w[pivot]).abs());
        }
    }
    if rec.alpha > amin * (1.0 + 1e-12) {
        bad.push(format!("alpha {} exceeds lattice minimum {}", rec.alpha, amin));
    }
    // M against a dense grid of the real ball.
    let h = &split.h;
    let free: Vec<usize> = (0..h.n()).filter(|&j| h.quadratic[j] != 0.0).collect();
    let mut hmax = 0.0f64;
    let steps = if free.len() == 1 { 400 } else { 60 };
    let mut pts = vec![];
    if free.len() == 1 {
        for i in 0..=steps {
            let mut p = rec.p0.clone();
            p[free[0]] += r_d * (2.0 * i as f64 / steps as f64 - 1.0);
            pts.push(p);
        }
    } else {
        for i in 0..=steps {
            for j in 0..=steps {
                let (x, y) = (2.0 * i as f64 / steps as f64 - 1.0, 2.0 * j as f64 / steps as f64 - 1.0);
                if x * x + y * y <= 1.0 {
                    let mut p = rec.p0.clone();
                    p[free[0]] += r_d * x;
                    p[free[1]] += r_d * y;
                    pts.push(p);
                }
            }
        }
    }
    for p in pts {
        let hs = h.hessian(&p)?;
        let mat = nalgebra::DMatrix::from_fn(h.n(), h.n(), |i, j| hs[i][j]);
        hmax = hmax.max(mat.symmetric_eigenvalues().iter().map(|x| x.abs()).fold(0.0, f64::max));
    }
    if rec.m < hmax * (1.0 - 1e-12) {
        bad.push(format!("M {} below Hessian sup {}", rec.m, hmax));
    }
    let r_max = (rec.alpha / (rec.m * rec.k) * (1.0 - 1.0 / rec.ell)).min(r_d);
    if rec.r > r_max * (1.0 + 1e-12) {
        bad.push(format!("r {} exceeds r_max {}", rec.r, r_max));
    }
    let k_tilde = split.r.max_order() as f64;
    if rec.k < k_tilde {
        bad.push(format!("K {} below max order {}", rec.k, k_tilde));
    }
    let e = weighted_norm(&split.r, &rec.p0, r_d, rec.s0)?;
    let cal_e = rec.alpha * rec.r / (128.0 * rec.ell * rec.k);
    if e > cal_e * (1.0 + 1e-9) {
        bad.push(format!("E {e} exceeds calE {cal_e}"));
    }
    let ln_t = ln_time(rec.s0, rec.r, rec.e, rec.k);
    if rec.t.is_finite() && (rec.t.ln() - ln_t).abs() > 1e-9 * ln_t.abs().max(1.0) {
        bad.push(format!("T {} inconsistent with formula", rec.t));
    }
    Ok(bad)
}

/// Indices of R whose harmonic crosses a resonance in the free actions.
pub fn harmonics(r: &PoissonSeries) -> Vec<Index> {
    r.entries().keys().filter(|k| index::is_upper(k) && !index::is_zero(k)).copied().collect()
}
