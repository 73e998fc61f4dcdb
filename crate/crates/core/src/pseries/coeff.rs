//! Coefficients of the form Σ A·Π(B+C·p)^(−D).

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use smallvec::SmallVec;

use super::index::MAX_DIM;
use crate::error::{Error, Result};

/// An affine form B + C·p, normalized so the first nonzero entry of C is 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub b: f64,
    pub c: [f64; MAX_DIM],
}

impl Affine {
    /// Canonicalizes B + C·p. Returns the normalized form and the factor it was
    /// divided by, or `None` when C vanishes.
    pub fn canonical(b: f64, c: [f64; MAX_DIM]) -> Option<(Affine, f64)> {
        let lead = *c.iter().find(|x| **x != 0.0)?;
        let mut cc = [0.0; MAX_DIM];
        for (o, x) in cc.iter_mut().zip(c) {
            *o = x / lead + 0.0;
        }
        Some((Affine { b: b / lead + 0.0, c: cc }, lead))
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.b + self.c.iter().zip(p).map(|(c, x)| c * x).sum::<f64>()
    }

    pub fn eval_c(&self, p: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(self.b, 0.0);
        for (c, x) in self.c.iter().zip(p) {
            if *c != 0.0 {
                s += x * *c;
            }
        }
        s
    }

    pub fn c_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Euclidean distance from a real point to the zero set.
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.eval(p).abs() / self.c_norm()
    }

    pub fn total_cmp(&self, other: &Affine) -> Ordering {
        self.b.total_cmp(&other.b).then_with(|| {
            for (x, y) in self.c.iter().zip(&other.c) {
                match x.total_cmp(y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e}", self.b)?;
        for (j, c) in self.c.iter().enumerate() {
            if *c != 0.0 {
                write!(f, "{:+e}*p{}", c, j + 1)?;
            }
        }
        write!(f, ")")
    }
}

/// A factor (B+C·p)^(−D).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub form: Affine,
    pub pow: u32,
}

impl Factor {
    fn total_cmp(&self, other: &Factor) -> Ordering {
        self.form
            .total_cmp(&other.form)
            .then(self.pow.cmp(&other.pow))
    }
}

pub type Factors = SmallVec<[Factor; 4]>;

/// One term A·Π(B+C·p)^(−D) with its formal degree in (ε₁, ε₂).
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub amp: Complex64,
    pub factors: Factors,
    pub deg: [u8; 2],
}

impl Term {
    pub fn constant(amp: Complex64, deg: [u8; 2]) -> Term {
        Term {
            amp,
            factors: Factors::new(),
            deg,
        }
    }

    /// Ordering of the merge key (factor list, then degree).
    pub fn key_cmp(&self, other: &Term) -> Ordering {
        for (a, b) in self.factors.iter().zip(&other.factors) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.factors
            .len()
            .cmp(&other.factors.len())
            .then(self.deg.cmp(&other.deg))
    }

    pub fn mul(&self, other: &Term, scale: Complex64) -> Term {
        let mut factors = Factors::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].form.total_cmp(&b[j].form) {
                Ordering::Less => {
                    factors.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    factors.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    factors.push(Factor {
                        form: a[i].form,
                        pow: a[i].pow + b[j].pow,
                    });
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&a[i..]);
        factors.extend_from_slice(&b[j..]);
        Term {
            amp: self.amp * other.amp * scale,
            factors,
            deg: [self.deg[0] + other.deg[0], self.deg[1] + other.deg[1]],
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Complex64> {
        let mut v = self.amp;
        for f in &self.factors {
            let l = f.form.eval(p);
            if l == 0.0 {
                return Err(Error::Singular);
            }
            v /= l.powi(f.pow as i32);
        }
        Ok(v)
    }

    pub fn eval_c(&self, p: &[Complex64]) -> Result<Complex64> {
        let mut v = self.amp;
        for f in &self.factors {
            let l = f.form.eval_c(p);
            if l.norm() == 0.0 {
                return Err(Error::Singular);
            }
            v /= l.powi(f.pow as i32);
        }
        Ok(v)
    }

    /// Upper bound of |term| on the complex ball of radius `r` about a real center.
    pub fn sup_on_ball(&self, center: &[f64], r: f64) -> Result<f64> {
        let mut v = self.amp.norm();
        for f in &self.factors {
            let m = f.form.eval(center).abs() - r * f.form.c_norm();
            if m <= 0.0 {
                return Err(Error::SingularDomain);
            }
            v /= m.powi(f.pow as i32);
        }
        Ok(v)
    }

    pub fn total_deg(&self) -> u32 {
        self.deg[0] as u32 + self.deg[1] as u32
    }
}

/// A finite sum of terms, kept sorted by merge key with no duplicates and no zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActionRational {
    terms: Vec<Term>,
}

impl ActionRational {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64, deg: [u8; 2]) -> Self {
        Self::from_terms(vec![Term::constant(Complex64::new(c, 0.0), deg)])
    }

    /// The term `amp·(b + c·p)^(−1)`, with any common scale absorbed into the amplitude.
    pub fn inverse_affine(amp: Complex64, b: f64, c: [f64; MAX_DIM], deg: [u8; 2]) -> Result<Self> {
        match Affine::canonical(b, c) {
            Some((form, lead)) => {
                let mut factors = Factors::new();
                factors.push(Factor { form, pow: 1 });
                Ok(Self::from_terms(vec![Term {
                    amp: amp / lead,
                    factors,
                    deg,
                }]))
            }
            None if b != 0.0 => Ok(Self::from_terms(vec![Term::constant(amp / b, deg)])),
            None => Err(Error::Singular),
        }
    }

    /// Sorts, merges equal keys and drops exact zeros.
    pub fn from_terms(mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.key_cmp(b));
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.key_cmp(&t) == Ordering::Equal => last.amp += t.amp,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.amp != Complex64::new(0.0, 0.0));
        Self { terms: out }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Self::from_terms(t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Term {
                    amp: t.amp * s,
                    ..t.clone()
                })
                .collect(),
        )
    }

    pub fn conj(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    amp: t.amp.conj(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Appends the products of all term pairs, times `scale`, without merging.
    pub fn mul_into(&self, other: &Self, scale: Complex64, out: &mut Vec<Term>) {
        out.reserve(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.mul(b, scale));
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        self.mul_into(other, Complex64::new(1.0, 0.0), &mut out);
        Self::from_terms(out)
    }

    /// Multiplies by b + c·p, cancelling one power of that form in every term.
    /// Returns `None` if some term does not carry the form.
    pub fn mul_affine(&self, b: f64, c: [f64; MAX_DIM]) -> Option<Self> {
        let Some((form, lead)) = Affine::canonical(b, c) else {
            return Some(self.scale(Complex64::new(b, 0.0)));
        };
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let i = t.factors.iter().position(|f| f.form.total_cmp(&form).is_eq())?;
            let mut nt = t.clone();
            nt.amp *= lead;
            if nt.factors[i].pow == 1 {
                nt.factors.remove(i);
            } else {
                nt.factors[i].pow -= 1;
            }
            out.push(nt);
        }
        Some(Self::from_terms(out))
    }

    /// ∂/∂p_j by the product rule.
    pub fn deriv(&self, j: usize) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            for (i, f) in t.factors.iter().enumerate() {
                let cj = f.form.c[j];
                if cj == 0.0 {
                    continue;
                }
                let mut nt = t.clone();
                nt.amp *= -(f.pow as f64) * cj;
                nt.factors[i].pow += 1;
                out.push(nt);
            }
        }
        Self::from_terms(out)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            s += t.eval(p)?;
        }
        Ok(s)
    }

    pub fn eval_c(&self, p: &[Complex64]) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            s += t.eval_c(p)?;
        }
        Ok(s)
    }

    /// Σ over terms of the ball bound of each term.
    pub fn sup_bound(&self, center: &[f64], r: f64) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.sup_on_ball(center, r)?;
        }
        Ok(s)
    }

    pub fn forms(&self) -> impl Iterator<Item = &Affine> {
        self.terms.iter().flat_map(|t| t.factors.iter().map(|f| &f.form))
    }

    pub fn retain(&mut self, f: impl FnMut(&Term) -> bool) {
        self.terms.retain(f);
    }

    pub fn map_amps(&mut self, f: impl Fn(Complex64) -> Complex64) {
        for t in &mut self.terms {
            t.amp = f(t.amp);
        }
    }
}

impl fmt::Display for ActionRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:e}{:+e}i)", t.amp.re, t.amp.im)?;
            for fac in &t.factors {
                write!(f, "·")?;
                fac.form.write(f)?;
                write!(f, "^-{}", fac.pow)?;
            }
            write!(f, " [deg=({},{})]", t.deg[0], t.deg[1])?;
        }
        Ok(())
    }
}
