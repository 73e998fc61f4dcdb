//! Suprema of action coefficients and the weighted Fourier norm.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::IntegrableHamiltonian;
use crate::pseries::{index, ActionRational, PoissonSeries, Term, MAX_DIM};

/// Angular samples on the real boundary circle.
const CIRCLE_SAMPLES: usize = 720;
/// Samples of the complex 3-sphere in the 2D fallback, per angle.
const SPHERE_GRID: [usize; 3] = [24, 48, 48];
const GOLDEN_ITERS: usize = 60;

/// A supremum together with whether the real-boundary reduction was accepted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sup {
    pub value: f64,
    pub fallback: bool,
}

/// Coordinates on which some denominator of `c` depends.
fn active_dims(c: &ActionRational) -> Vec<usize> {
    (0..MAX_DIM)
        .filter(|&j| c.forms().any(|f| f.c[j] != 0.0))
        .collect()
}

/// Value, gradient and Hessian (in the listed coordinates) of `c` at a real point.
fn jet(c: &ActionRational, p: &[f64], dims: &[usize]) -> (Complex64, Vec<Complex64>, Vec<Vec<Complex64>>) {
    let d = dims.len();
    let mut v = Complex64::new(0.0, 0.0);
    let mut g = vec![Complex64::new(0.0, 0.0); d];
    let mut h = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for t in c.terms() {
        let tv = term_value(t, p);
        let mut lg = vec![0.0; d];
        let mut q = vec![vec![0.0; d]; d];
        for f in &t.factors {
            let l = f.form.eval(p);
            let dp = f.pow as f64;
            for (a, &ja) in dims.iter().enumerate() {
                lg[a] -= dp * f.form.c[ja] / l;
                for (b, &jb) in dims.iter().enumerate() {
                    q[a][b] += dp * f.form.c[ja] * f.form.c[jb] / (l * l);
                }
            }
        }
        v += tv;
        for a in 0..d {
            g[a] += tv * lg[a];
            for b in 0..d {
                h[a][b] += tv * (lg[a] * lg[b] + q[a][b]);
            }
        }
    }
    (v, g, h)
}

fn term_value(t: &Term, p: &[f64]) -> Complex64 {
    let mut v = t.amp;
    for f in &t.factors {
        v /= f.form.eval(p).powi(f.pow as i32);
    }
    v
}

fn abs_at(c: &ActionRational, p: &[Complex64]) -> f64 {
    c.terms()
        .iter()
        .map(|t| {
            let mut v = t.amp;
            for f in &t.factors {
                v /= f.form.eval_c(p).powi(f.pow as i32);
            }
            v
        })
        .sum::<Complex64>()
        .norm()
}

/// Whether b = 0 is a local maximum of |c(a + ib)|² at the real point `a`:
/// vanishing gradient and negative semidefinite Hessian, nonzero trace.
pub fn imaginary_max_check(c: &ActionRational, a: &[f64], dims: &[usize]) -> bool {
    let (v, g, h) = jet(c, a, dims);
    let d = dims.len();
    if v.norm() == 0.0 {
        return false;
    }
    let scale = v.norm() * g.iter().map(|x| x.norm()).fold(0.0, f64::max) + f64::MIN_POSITIVE;
    for x in &g {
        if (x * v.conj()).im.abs() > 1e-9 * scale {
            return false;
        }
    }
    let hm = DMatrix::from_fn(d, d, |i, j| 2.0 * (g[i] * g[j].conj()).re - 2.0 * (h[i][j] * v.conj()).re);
    let hm = (&hm + hm.transpose()) * 0.5;
    let tr = hm.trace();
    if tr >= 0.0 {
        return false;
    }
    let eig = hm.symmetric_eigenvalues();
    eig.iter().all(|&e| e <= 1e-12 * tr.abs())
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
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

/// Maximum of a periodic function: dense sampling, then golden-section around the best samples.
fn circle_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let h = std::f64::consts::TAU / CIRCLE_SAMPLES as f64;
    let vals: Vec<f64> = (0..CIRCLE_SAMPLES).map(|i| f(i as f64 * h)).collect();
    let mut order: Vec<usize> = (0..CIRCLE_SAMPLES).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut best = (order[0] as f64 * h, vals[order[0]]);
    for &i in order.iter().take(3) {
        let th = i as f64 * h;
        let r = golden_max(&f, th - h, th + h);
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

fn shifted(p0: &[f64], dims: &[usize], du: &[f64]) -> Vec<f64> {
    let mut p = p0.to_vec();
    p.resize(MAX_DIM, 0.0);
    for (&j, d) in dims.iter().zip(du) {
        p[j] += d;
    }
    p
}

/// Supremum of |c| over the complex ball of radius `r0` about the real point `p0`.
///
/// The maximum is searched on the real boundary (two endpoints in 1D, the circle
/// in 2D). If b = 0 is not confirmed as a local maximum in the imaginary
/// directions at the maximizer, the full complex boundary is sampled as well.
pub fn coeff_sup(c: &ActionRational, p0: &[f64], r0: f64) -> Result<Sup> {
    if c.is_zero() {
        return Ok(Sup { value: 0.0, fallback: false });
    }
    let mut pc = p0.to_vec();
    pc.resize(MAX_DIM, 0.0);
    for f in c.forms() {
        if f.eval(&pc).abs() - r0 * f.c_norm() <= 0.0 {
            return Err(Error::SingularDomain);
        }
    }
    let dims = active_dims(c);
    let real_abs = |p: &[f64]| c.terms().iter().map(|t| term_value(t, p)).sum::<Complex64>().norm();
    match dims.len() {
        0 => Ok(Sup { value: real_abs(&pc), fallback: false }),
        1 => {
            let (a, b) = (shifted(&pc, &dims, &[r0]), shifted(&pc, &dims, &[-r0]));
            let (va, vb) = (real_abs(&a), real_abs(&b));
            let (arg, value) = if va >= vb { (a, va) } else { (b, vb) };
            if imaginary_max_check(c, &arg, &dims) {
                return Ok(Sup { value, fallback: false });
            }
            let j = dims[0];
            let (_, v) = circle_max(|th| {
                let mut p: Vec<Complex64> = pc.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                p[j] += Complex64::from_polar(r0, th);
                abs_at(c, &p)
            });
            Ok(Sup { value: value.max(v), fallback: true })
        }
        2 => {
            let at = |th: f64| shifted(&pc, &dims, &[r0 * th.cos(), r0 * th.sin()]);
            let (th, value) = circle_max(|th| real_abs(&at(th)));
            if imaginary_max_check(c, &at(th), &dims) {
                return Ok(Sup { value, fallback: false });
            }
            Ok(Sup { value: value.max(sphere_max(c, &pc, &dims, r0)), fallback: true })
        }
        d => Err(Error::InvalidParam(format!("coefficient depends on {d} actions"))),
    }
}

/// Grid maximum of |c| on the boundary of the complex 2-ball.
fn sphere_max(c: &ActionRational, pc: &[f64], dims: &[usize], r0: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let [ne, n1, n2] = SPHERE_GRID;
    let mut best = 0.0f64;
    for ie in 0..=ne {
        let eta = FRAC_PI_2 * ie as f64 / ne as f64;
        for i1 in 0..n1 {
            let u1 = Complex64::from_polar(r0 * eta.cos(), TAU * i1 as f64 / n1 as f64);
            for i2 in 0..n2 {
                let u2 = Complex64::from_polar(r0 * eta.sin(), TAU * i2 as f64 / n2 as f64);
                let mut p: Vec<Complex64> = pc.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                p[dims[0]] += u1;
                p[dims[1]] += u2;
                best = best.max(abs_at(c, &p));
            }
        }
    }
    best
}

/// Per-class sums S_z = Σ_{‖k‖₁ = z} sup|R_k| on a ball, so that ‖R‖_{r0,s0} = Σ S_z e^{z s0}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassSums {
    pub classes: Vec<(i32, f64)>,
    /// Coefficients for which the real-boundary reduction was rejected.
    pub fallbacks: usize,
}

impl ClassSums {
    pub fn new(r: &PoissonSeries, p0: &[f64], r0: f64) -> Result<Self> {
        let upper: Vec<_> = r.entries().iter().filter(|(k, _)| index::is_upper(k)).collect();
        let sups: Vec<Result<(i32, Sup, f64)>> = upper
            .par_iter()
            .map(|(k, c)| {
                let w = if index::is_zero(k) { 1.0 } else { 2.0 };
                Ok((index::order(k), coeff_sup(c, p0, r0)?, w))
            })
            .collect();
        let mut classes: Vec<(i32, f64)> = Vec::new();
        let mut fallbacks = 0;
        let mut sorted = Vec::with_capacity(sups.len());
        for s in sups {
            sorted.push(s?);
        }
        sorted.sort_by_key(|x| x.0);
        for (z, s, w) in sorted {
            fallbacks += s.fallback as usize;
            match classes.last_mut() {
                Some(last) if last.0 == z => last.1 += w * s.value,
                _ => classes.push((z, w * s.value)),
            }
        }
        Ok(Self { classes, fallbacks })
    }

    /// E(s0).
    pub fn eval(&self, s0: f64) -> f64 {
        self.classes.iter().map(|(z, s)| s * (*z as f64 * s0).exp()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.classes.iter().all(|c| c.1 == 0.0)
    }
}

/// ‖R‖_{r0,s0} = Σ_k sup|R_k| e^{‖k‖₁ s0}.
pub fn weighted_norm(r: &PoissonSeries, p0: &[f64], r0: f64, s0: f64) -> Result<f64> {
    Ok(ClassSums::new(r, p0, r0)?.eval(s0))
}

/// Upper bound on the spectral norm of the Hessian of N + Z over the ball: the
/// largest eigenvalue of the entrywise majorant |∂²N| + sup|∂²Z|.
pub fn hessian_bound(h: &IntegrableHamiltonian, p0: &[f64], r0: f64) -> Result<f64> {
    let n = h.n();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        b[(j, j)] = h.quadratic[j].abs();
    }
    if !h.z.is_zero() {
        for i in 0..n {
            let di = h.z.deriv(i);
            if di.is_zero() {
                continue;
            }
            for j in i..n {
                let s = coeff_sup(&di.deriv(j), p0, r0)?.value;
                b[(i, j)] += s;
                if i != j {
                    b[(j, i)] += s;
                }
            }
        }
    }
    Ok(b.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max))
}
