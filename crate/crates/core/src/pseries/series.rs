//! Poisson series in the complex-exponential basis.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use num_complex::Complex64;
use rayon::prelude::*;

use super::coeff::{ActionRational, Affine, Term};
use super::index::{self, Index, MAX_DIM};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const COMPACT: usize = 1 << 14;

/// A term with its suprema on each ball and its largest ratio sup/√floor.
struct Bounded {
    term: Term,
    u: f64,
    sups: Vec<f64>,
}

/// A real ball in action space.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: [f64; MAX_DIM],
    pub radius: f64,
}

/// Union of balls on which magnitudes are measured.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Domain {
    pub balls: Vec<Ball>,
}

impl Domain {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..center.len()].copy_from_slice(center);
        Domain {
            balls: vec![Ball { center: c, radius }],
        }
    }

    /// Upper bound of |term| over the whole domain.
    pub fn term_sup(&self, t: &Term) -> Result<f64> {
        let mut best = 0.0f64;
        for b in &self.balls {
            best = best.max(t.sup_on_ball(&b.center, b.radius)?);
        }
        Ok(best)
    }

    /// Shrinks every ball to at most `frac` times its distance to each form.
    pub fn shrink_for<'a>(&mut self, forms: impl Iterator<Item = &'a Affine>, frac: f64) {
        let forms: Vec<&Affine> = forms.collect();
        for b in &mut self.balls {
            for f in &forms {
                b.radius = b.radius.min(frac * f.distance(&b.center));
            }
        }
    }
}

/// Projection selectors.
#[derive(Clone, Debug)]
pub enum Selector<'a> {
    /// k = 0.
    Mean,
    /// k ∈ ±Λ.
    Resonant(&'a [Index]),
    /// k ∉ ±Λ and k ≠ 0.
    Nonresonant(&'a [Index]),
    /// ‖k‖₁ ≤ K.
    OrderAtMost(i32),
}

impl Selector<'_> {
    pub fn keeps(&self, k: &Index) -> bool {
        let in_lambda = |lam: &[Index]| lam.iter().any(|l| l == k || index::neg(l) == *k);
        match self {
            Selector::Mean => index::is_zero(k),
            Selector::Resonant(lam) => in_lambda(lam),
            Selector::Nonresonant(lam) => !index::is_zero(k) && !in_lambda(lam),
            Selector::OrderAtMost(kk) => index::order(k) <= *kk,
        }
    }
}

/// A finite trigonometric series Σ c_k(p) e^{i k·q} with c_{−k} = conj(c_k).
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSeries {
    n: usize,
    entries: BTreeMap<Index, ActionRational>,
}

impl PoissonSeries {
    pub fn zero(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n));
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: ActionRational) -> Self {
        let mut s = Self::zero(n);
        let mut c = c;
        c.map_amps(|a| Complex64::new(a.re, 0.0));
        if !c.is_zero() {
            s.entries.insert([0; MAX_DIM], c);
        }
        s
    }

    /// c(p)·cos(k·q) for a coefficient with real amplitudes.
    pub fn cos(n: usize, k: Index, c: &ActionRational) -> Self {
        Self::harmonic(n, k, c, Complex64::new(0.5, 0.0))
    }

    /// c(p)·sin(k·q) for a coefficient with real amplitudes.
    pub fn sin(n: usize, k: Index, c: &ActionRational) -> Self {
        Self::harmonic(n, k, c, Complex64::new(0.0, -0.5))
    }

    fn harmonic(n: usize, k: Index, c: &ActionRational, w: Complex64) -> Self {
        if index::is_zero(&k) {
            let s = c.scale(w + w.conj());
            return Self::constant(n, s);
        }
        let mut s = Self::zero(n);
        let ck = c.scale(w);
        if ck.is_zero() {
            return s;
        }
        s.entries.insert(index::neg(&k), ck.conj());
        s.entries.insert(k, ck);
        s
    }

    /// Builds a series from explicit entries, checking hermitian symmetry.
    pub fn from_entries(n: usize, entries: BTreeMap<Index, ActionRational>) -> Result<Self> {
        let entries: BTreeMap<_, _> = entries.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        for (k, c) in &entries {
            if k[n..].iter().any(|&x| x != 0) {
                return Err(Error::DimensionMismatch(n, MAX_DIM));
            }
            let mirror = entries.get(&index::neg(k)).ok_or(Error::NotHermitian(*k))?;
            let diff = mirror.sub(&c.conj());
            let scale: f64 = c.terms().iter().map(|t| t.amp.norm()).sum();
            if diff.terms().iter().map(|t| t.amp.norm()).sum::<f64>() > 1e-12 * scale {
                return Err(Error::NotHermitian(*k));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n_angles(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &BTreeMap<Index, ActionRational> {
        &self.entries
    }

    pub fn get(&self, k: &Index) -> Option<&ActionRational> {
        self.entries.get(k)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.entries.values().map(|c| c.len()).sum()
    }

    pub fn max_order(&self) -> i32 {
        self.entries.keys().map(index::order).max().unwrap_or(0)
    }

    /// The angle-independent part.
    pub fn mean(&self) -> ActionRational {
        self.entries.get(&[0; MAX_DIM]).cloned().unwrap_or_default()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// Assembles a hermitian series from upper-half accumulators.
    fn from_upper(n: usize, acc: BTreeMap<Index, Vec<Term>>) -> Self {
        let built: Vec<(Index, ActionRational)> = acc
            .into_par_iter()
            .map(|(k, terms)| {
                let mut c = ActionRational::from_terms(terms);
                if index::is_zero(&k) {
                    c.map_amps(|a| Complex64::new(a.re, 0.0));
                    c.retain(|t| t.amp.re != 0.0);
                }
                (k, c)
            })
            .collect();
        let mut entries = BTreeMap::new();
        for (k, c) in built {
            if c.is_zero() {
                continue;
            }
            if !index::is_zero(&k) {
                entries.insert(index::neg(&k), c.conj());
            }
            entries.insert(k, c);
        }
        Self { n, entries }
    }

    fn upper_terms(&self) -> BTreeMap<Index, Vec<Term>> {
        self.entries
            .iter()
            .filter(|(k, _)| index::is_upper(k))
            .map(|(k, c)| (*k, c.terms().to_vec()))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut acc = self.upper_terms();
        for (k, t) in other.upper_terms() {
            acc.entry(k).or_default().extend(t);
        }
        Ok(Self::from_upper(self.n, acc))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let s = Complex64::new(s, 0.0);
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(k, c)| (*k, c.scale(s)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Fourier convolution.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let one = Complex64::new(1.0, 0.0);
        let acc = self.convolve(other, |k, a, l, b, out| {
            let _ = (k, l);
            a.mul_into(b, one, out);
        });
        Ok(Self::from_upper(self.n, acc))
    }

    /// Runs `f` on every pair whose index sum lies in the upper half, grouped by sum.
    fn convolve<F>(&self, other: &Self, f: F) -> BTreeMap<Index, Vec<Term>>
    where
        F: Fn(&Index, &ActionRational, &Index, &ActionRational, &mut Vec<Term>) + Sync,
    {
        let left: Vec<(&Index, &ActionRational)> = self.entries.iter().collect();
        let right: Vec<(&Index, &ActionRational)> = other.entries.iter().collect();
        let parts: Vec<BTreeMap<Index, Vec<Term>>> = left
            .par_iter()
            .map(|(k, a)| {
                let mut acc: BTreeMap<Index, Vec<Term>> = BTreeMap::new();
                for (l, b) in &right {
                    let s = index::add(k, l);
                    if !index::is_upper(&s) {
                        continue;
                    }
                    let out = acc.entry(s).or_default();
                    f(k, a, l, b, out);
                }
                acc
            })
            .collect();
        let mut acc: BTreeMap<Index, Vec<Term>> = BTreeMap::new();
        for part in parts {
            for (k, t) in part {
                acc.entry(k).or_default().extend(t);
            }
        }
        acc
    }

    /// ∂/∂q_j.
    pub fn deriv_angle(&self, j: usize) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| k[j] != 0)
                .map(|(k, c)| (*k, c.scale(I * k[j] as f64)))
                .collect(),
        }
    }

    /// ∂/∂p_j.
    pub fn deriv_action(&self, j: usize) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(k, c)| (*k, c.deriv(j)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// {f,g} = ∇_q f·∇_p g − ∇_p f·∇_q g.
    pub fn bracket(&self, g: &Self) -> Result<Self> {
        self.check(g)?;
        let n = self.n;
        let df: Vec<BTreeMap<Index, ActionRational>> =
            (0..n).map(|j| self.deriv_action(j).entries).collect();
        let dg: Vec<BTreeMap<Index, ActionRational>> =
            (0..n).map(|j| g.deriv_action(j).entries).collect();
        let acc = self.convolve(g, |k, a, l, b, out| {
            for j in 0..n {
                if k[j] != 0 {
                    if let Some(dgl) = dg[j].get(l) {
                        a.mul_into(dgl, I * k[j] as f64, out);
                    }
                }
                if l[j] != 0 {
                    if let Some(dfk) = df[j].get(k) {
                        dfk.mul_into(b, -I * l[j] as f64, out);
                    }
                }
            }
        });
        Ok(Self::from_upper(n, acc))
    }

    /// The bracket with every product skipped whose bound falls below the
    /// floor of each ball (sup of a product ≤ product of sups), and products of
    /// ε-degree at least `eps_cap`. Fails once more than `budget` products are held.
    pub fn bracket_pruned(
        &self,
        g: &Self,
        domain: &Domain,
        floors: &[f64],
        eps_cap: Option<u32>,
        budget: usize,
    ) -> Result<Self> {
        self.check(g)?;
        let n = self.n;
        let nb = domain.balls.len();
        if nb == 0 {
            return Ok(Self::zero(n));
        }
        let roots: Vec<f64> = floors.iter().map(|f| f.sqrt()).collect();
        let annotate = |m: &BTreeMap<Index, ActionRational>| -> Result<BTreeMap<Index, Vec<Bounded>>> {
            let mut out = BTreeMap::new();
            for (k, c) in m {
                let mut v = Vec::with_capacity(c.len());
                for t in c.terms() {
                    let mut sups = Vec::with_capacity(nb);
                    let mut u = 0.0f64;
                    for (b, r) in domain.balls.iter().zip(&roots) {
                        let s = t.sup_on_ball(&b.center, b.radius)?;
                        u = u.max(s / r);
                        sups.push(s);
                    }
                    v.push(Bounded { term: t.clone(), u, sups });
                }
                v.sort_by(|a, b| b.u.total_cmp(&a.u));
                out.insert(*k, v);
            }
            Ok(out)
        };
        let f0 = annotate(&self.entries)?;
        let g0 = annotate(&g.entries)?;
        let mut df = Vec::with_capacity(n);
        let mut dg = Vec::with_capacity(n);
        for j in 0..n {
            df.push(annotate(&self.deriv_action(j).entries)?);
            dg.push(annotate(&g.deriv_action(j).entries)?);
        }
        let pair = |a: &[Bounded], b: &[Bounded], s: Complex64, out: &mut Vec<Term>| {
            let sa = s.norm();
            let Some(top) = b.first() else { return };
            for ta in a {
                if ta.u * top.u * sa < 1.0 {
                    break;
                }
                for tb in b {
                    if ta.u * tb.u * sa < 1.0 {
                        break;
                    }
                    if eps_cap.is_some_and(|c| ta.term.total_deg() + tb.term.total_deg() >= c) {
                        continue;
                    }
                    if (0..nb).any(|x| ta.sups[x] * tb.sups[x] * sa >= floors[x]) {
                        out.push(ta.term.mul(&tb.term, s));
                    }
                }
            }
        };
        let left: Vec<&Index> = self.entries.keys().collect();
        let live = AtomicUsize::new(0);
        let parts: Result<Vec<BTreeMap<Index, Vec<Term>>>> = left
            .par_iter()
            .map(|k| {
                let mut acc: BTreeMap<Index, Vec<Term>> = BTreeMap::new();
                let mut held = 0usize;
                for l in g.entries.keys() {
                    let sum = index::add(k, l);
                    if !index::is_upper(&sum) {
                        continue;
                    }
                    let out = acc.entry(sum).or_default();
                    held -= out.len();
                    for j in 0..n {
                        if k[j] != 0 {
                            if let (Some(a), Some(b)) = (f0.get(*k), dg[j].get(l)) {
                                pair(a, b, I * k[j] as f64, out);
                            }
                        }
                        if l[j] != 0 {
                            if let (Some(a), Some(b)) = (df[j].get(*k), g0.get(l)) {
                                pair(a, b, -I * l[j] as f64, out);
                            }
                        }
                    }
                    if out.len() > COMPACT {
                        *out = ActionRational::from_terms(std::mem::take(out)).into_terms();
                    }
                    held += out.len();
                    if held + live.load(AtomicOrdering::Relaxed) > budget {
                        return Err(Error::TermBudget(held + live.load(AtomicOrdering::Relaxed)));
                    }
                }
                live.fetch_add(held, AtomicOrdering::Relaxed);
                Ok(acc)
            })
            .collect();
        let mut acc: BTreeMap<Index, Vec<Term>> = BTreeMap::new();
        for part in parts? {
            for (k, t) in part {
                let out = acc.entry(k).or_default();
                out.extend(t);
                if out.len() > COMPACT {
                    *out = ActionRational::from_terms(std::mem::take(out)).into_terms();
                }
            }
        }
        Ok(Self::from_upper(n, acc))
    }

    pub fn project(&self, sel: &Selector) -> Self {
        self.filter(|k| sel.keeps(k))
    }

    /// Keeps the entries whose index satisfies `keep`; `keep` must be symmetric under k ↦ −k.
    pub fn filter(&self, keep: impl Fn(&Index) -> bool) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    pub fn evaluate(&self, p: &[Complex64], q: &[Complex64]) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in &self.entries {
            let phase: Complex64 = (0..self.n).map(|j| q[j] * k[j] as f64).sum();
            s += c.eval_c(p)? * (I * phase).exp();
        }
        Ok(s)
    }

    /// Evaluation at real arguments (the imaginary part vanishes up to round-off).
    pub fn evaluate_real(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for (k, c) in &self.entries {
            let phase = index::dot(k, q);
            s += (c.eval(p)? * Complex64::from_polar(1.0, phase)).re;
        }
        Ok(s)
    }

    /// Removes terms whose domain supremum is below `mag` and terms of total
    /// ε-degree at least `eps_cap`.
    pub fn prune(&self, mag: f64, domain: &Domain, eps_cap: Option<u32>) -> Result<Self> {
        if mag <= 0.0 {
            return self.prune_balls(domain, None, eps_cap);
        }
        let floors = vec![mag; domain.balls.len()];
        self.prune_balls(domain, Some(&floors), eps_cap)
    }

    /// Keeps a term when its supremum reaches the floor of at least one ball.
    /// With no floors only the ε-degree cap applies.
    pub fn prune_balls(&self, domain: &Domain, floors: Option<&[f64]>, eps_cap: Option<u32>) -> Result<Self> {
        if floors.is_none() && eps_cap.is_none() {
            return Ok(self.clone());
        }
        let upper: Vec<(Index, &ActionRational)> = self
            .entries
            .iter()
            .filter(|(k, _)| index::is_upper(k))
            .map(|(k, c)| (*k, c))
            .collect();
        let keep = |t: &Term| -> Result<bool> {
            if eps_cap.is_some_and(|cap| t.total_deg() >= cap) {
                return Ok(false);
            }
            let Some(fl) = floors else { return Ok(true) };
            for (b, f) in domain.balls.iter().zip(fl) {
                if t.sup_on_ball(&b.center, b.radius)? >= *f {
                    return Ok(true);
                }
            }
            Ok(false)
        };
        let kept: Result<Vec<(Index, ActionRational)>> = upper
            .par_iter()
            .map(|(k, c)| {
                let mut terms = Vec::with_capacity(c.len());
                for t in c.terms() {
                    if keep(t)? {
                        terms.push(t.clone());
                    }
                }
                Ok((*k, ActionRational::from_terms(terms)))
            })
            .collect();
        let mut entries = BTreeMap::new();
        for (k, c) in kept? {
            if c.is_zero() {
                continue;
            }
            if !index::is_zero(&k) {
                entries.insert(index::neg(&k), c.conj());
            }
            entries.insert(k, c);
        }
        Ok(Self { n: self.n, entries })
    }

    /// Σ over terms of their domain suprema (a bound on the s₀ = 0 norm).
    pub fn sup_bound(&self, domain: &Domain) -> Result<f64> {
        let mut s = 0.0;
        for c in self.entries.values() {
            for t in c.terms() {
                s += domain.term_sup(t)?;
            }
        }
        Ok(s)
    }

    /// Per-ball sums of term suprema.
    pub fn ball_norms(&self, domain: &Domain) -> Result<Vec<f64>> {
        domain
            .balls
            .iter()
            .map(|b| {
                let mut s = 0.0;
                for c in self.entries.values() {
                    s += c.sup_bound(&b.center, b.radius)?;
                }
                Ok(s)
            })
            .collect()
    }

    /// Every distinct affine form appearing in a denominator.
    pub fn forms(&self) -> Vec<Affine> {
        let mut v: Vec<Affine> = self
            .entries
            .iter()
            .filter(|(k, _)| index::is_upper(k))
            .flat_map(|(_, c)| c.forms().copied())
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup_by(|a, b| a.total_cmp(b).is_eq());
        v
    }

    /// Applies `f` to every coefficient; `f` must map conjugate pairs to conjugate pairs.
    pub fn map_coeffs(&self, f: impl Fn(&Index, &ActionRational) -> ActionRational) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(k, c)| (*k, f(k, c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }
}

impl fmt::Display for PoissonSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in &self.entries {
            writeln!(f, "k={} : {}", index::fmt(k, self.n), c)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c0(x: f64) -> ActionRational {
        ActionRational::constant(x, [0, 0])
    }

    fn inv(b: f64, c1: f64) -> ActionRational {
        ActionRational::inverse_affine(Complex64::new(1.0, 0.0), b, [c1, 0.0, 0.0], [0, 0]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn add_identity_and_doubling() {
        let f = PoissonSeries::cos(2, [2, -2, 0], &c0(1.0));
        assert_eq!(f.add(&PoissonSeries::zero(2)).unwrap(), f);
        let g = f.add(&f).unwrap();
        assert_eq!(g, PoissonSeries::cos(2, [2, -2, 0], &c0(2.0)));
    }

    #[test]
    fn add_assembles_eccentricity_coefficient() {
        let e = 0.1f64;
        let a = PoissonSeries::cos(2, [2, -1, 0], &c0(e / 4.0));
        let b = PoissonSeries::cos(2, [2, -1, 0], &c0(-e.powi(3) / 32.0));
        let s = a.add(&b).unwrap();
        let v = s.evaluate_real(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(close(v, e / 4.0 - e.powi(3) / 32.0, 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = PoissonSeries::zero(2);
        let b = PoissonSeries::zero(3);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn product_to_sum() {
        let f = PoissonSeries::cos(1, [1, 0, 0], &c0(1.0));
        let sq = f.mul(&f).unwrap();
        let expect = PoissonSeries::constant(1, c0(0.5))
            .add(&PoissonSeries::cos(1, [2, 0, 0], &c0(0.5)))
            .unwrap();
        assert_eq!(sq, expect);
        assert_eq!(f.mul(&PoissonSeries::constant(1, c0(1.0))).unwrap(), f);
    }

    #[test]
    fn product_with_action_denominators() {
        // [1/(2p-2)] cos θ squared
        let f = PoissonSeries::cos(1, [1, 0, 0], &inv(-2.0, 2.0));
        let sq = f.mul(&f).unwrap();
        let d2 = inv(-2.0, 2.0).mul(&inv(-2.0, 2.0));
        let expect = PoissonSeries::constant(1, d2.scale(Complex64::new(0.5, 0.0)))
            .add(&PoissonSeries::cos(1, [2, 0, 0], &d2.scale(Complex64::new(0.5, 0.0))))
            .unwrap();
        assert_eq!(sq, expect);
    }

    #[test]
    fn angle_derivative() {
        let f = PoissonSeries::cos(2, [2, -2, 0], &c0(1.0));
        let d = f.deriv_angle(0);
        assert_eq!(d, PoissonSeries::sin(2, [2, -2, 0], &c0(-2.0)));
        assert!(f.deriv_action(0).is_zero());
    }

    #[test]
    fn action_derivative() {
        let f = PoissonSeries::sin(1, [1, 0, 0], &inv(-2.0, 2.0));
        let d = f.deriv_action(0);
        let p = 1.2;
        let v = d
            .evaluate_real(&[p], &[PI / 2.0])
            .unwrap();
        assert!(close(v, -2.0 / (2.0 * p - 2.0).powi(2), 1e-13));
    }

    #[test]
    fn bracket_with_action_dependent_coefficient() {
        // {cos q, cos q / p} = sin q cos q / p²
        let f = PoissonSeries::cos(1, [1, 0, 0], &c0(1.0));
        let g = PoissonSeries::cos(1, [1, 0, 0], &inv(0.0, 1.0));
        let b = f.bracket(&g).unwrap();
        let (p, q) = (1.3, 0.4);
        let v = b.evaluate_real(&[p], &[q]).unwrap();
        assert!(close(v, q.sin() * q.cos() / (p * p), 1e-13));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let f = PoissonSeries::cos(2, [2, -2, 0], &inv(-2.0, 2.0));
        let g = PoissonSeries::sin(2, [2, -1, 0], &inv(-1.0, 2.0));
        let fg = f.bracket(&g).unwrap();
        let gf = g.bracket(&f).unwrap();
        assert!(fg.add(&gf).unwrap().prune(1e-14, &Domain::ball(&[1.6, 0.0], 0.05), None).unwrap().is_zero());
        assert!(f.bracket(&f).unwrap().prune(1e-14, &Domain::ball(&[1.6, 0.0], 0.05), None).unwrap().is_zero());
    }

    #[test]
    fn projections() {
        let f = PoissonSeries::constant(1, c0(0.5)).add(&PoissonSeries::cos(1, [2, 0, 0], &c0(0.5))).unwrap();
        assert_eq!(f.project(&Selector::Mean), PoissonSeries::constant(1, c0(0.5)));
        assert!(f.project(&Selector::Resonant(&[])).is_zero());
        assert_eq!(f.project(&Selector::Nonresonant(&[])), PoissonSeries::cos(1, [2, 0, 0], &c0(0.5)));
        assert_eq!(f.project(&Selector::OrderAtMost(1)).len(), 1);
    }

    #[test]
    fn evaluation_examples() {
        let f = PoissonSeries::constant(2, c0(3.5));
        assert!(close(f.evaluate_real(&[0.3, 0.0], &[1.0, 2.0]).unwrap(), 3.5, 1e-15));
        let g = PoissonSeries::cos(2, [2, -2, 0], &c0(1.0));
        assert!(close(g.evaluate_real(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0, 1e-15));
        let h = PoissonSeries::sin(1, [2, 0, 0], &inv(-2.0, 2.0));
        let v = h
            .evaluate(&[Complex64::new(1.5, 0.0)], &[Complex64::new(PI / 4.0, 0.0)])
            .unwrap();
        assert!(close(v.re, 1.0, 1e-14) && v.im.abs() < 1e-14);
        assert!(matches!(h.evaluate_real(&[1.0], &[0.1]), Err(Error::Singular)));
    }

    #[test]
    fn prune_drops_tiny_terms() {
        let f = PoissonSeries::cos(1, [1, 0, 0], &inv(-2.0, 2.0).scale(Complex64::new(1e-25, 0.0)))
            .add(&PoissonSeries::cos(1, [2, 0, 0], &c0(1.0)))
            .unwrap();
        let dom = Domain::ball(&[1.5], 0.2);
        assert_eq!(f.prune(0.0, &dom, None).unwrap(), f);
        let p = f.prune(1e-20, &dom, None).unwrap();
        assert_eq!(p, PoissonSeries::cos(1, [2, 0, 0], &c0(1.0)));
        assert!(matches!(f.prune(1e-20, &Domain::ball(&[1.5], 0.6), None), Err(Error::SingularDomain)));
    }

    #[test]
    fn prune_by_degree() {
        let a = PoissonSeries::cos(1, [1, 0, 0], &ActionRational::constant(1.0, [3, 2]));
        let b = PoissonSeries::cos(1, [1, 0, 0], &ActionRational::constant(1.0, [2, 2]));
        let f = a.add(&b).unwrap();
        assert_eq!(f.prune(0.0, &Domain::default(), Some(5)).unwrap(), b);
    }

    #[test]
    fn non_hermitian_entries_are_rejected() {
        let mut m = BTreeMap::new();
        m.insert([1, 0, 0], c0(1.0));
        assert!(PoissonSeries::from_entries(1, m.clone()).is_err());
        m.insert([-1, 0, 0], c0(1.0));
        assert!(PoissonSeries::from_entries(1, m).is_ok());
    }

    #[test]
    fn dump_is_line_per_index() {
        let f = PoissonSeries::cos(2, [2, -2, 0], &inv(-2.0, 2.0));
        let s = f.to_string();
        assert_eq!(s.lines().count(), 2);
        assert!(s.starts_with("k=(-2,2) : "));
        assert!(s.contains("[deg=(0,0)]"));
    }
}
