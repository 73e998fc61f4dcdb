//! Diophantine frequencies converging to resonances, and the inverse frequency map.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::IntegrableHamiltonian;

/// (√5 − 1)/2.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// A resonance ω = num/den written "num:den", stored as the order (k₁, k₂) = (den, −num)
/// so that k₁ω + k₂ = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Resonance {
    pub k1: i64,
    pub k2: i64,
}

impl Resonance {
    /// The "num:den" resonance, gcd-reduced.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParam("resonance denominator must be nonzero".into()));
        }
        let g = num.gcd(&den).max(1);
        let s = den.signum();
        Ok(Self {
            k1: s * den / g,
            k2: -s * num / g,
        })
    }

    pub fn center(&self) -> f64 {
        -(self.k2 as f64) / self.k1 as f64
    }
}

impl fmt::Display for Resonance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", -self.k2, self.k1)
    }
}

impl FromStr for Resonance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad resonance label {s:?}, expected num:den"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let num = a.trim().parse().map_err(|_| bad())?;
        let den = b.trim().parse().map_err(|_| bad())?;
        Self::new(num, den)
    }
}

impl TryFrom<String> for Resonance {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Resonance> for String {
    fn from(r: Resonance) -> String {
        r.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Below => -1.0,
            Side::Above => 1.0,
        }
    }
}

/// Γ (below) or Δ (above): center ∓ s/(z + γ), with time frequency 1.
pub fn seq_1d(res: &Resonance, s: f64, z: i64, side: Side) -> Result<[f64; 2]> {
    if z == 0 {
        return Err(Error::InvalidParam("z must be nonzero".into()));
    }
    Ok([res.center() + side.sign() * s / (z as f64 + golden()), 1.0])
}

/// Integer quadratic with the sequence value as a root, plus an effective Liouville constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub a2: BigInt,
    pub a1: BigInt,
    pub a0: BigInt,
    pub c_bound: f64,
}

impl Certificate {
    /// The root of the quadratic closest to `x`.
    pub fn root_near(&self, x: f64) -> f64 {
        let (a, b, c) = (f(&self.a2), f(&self.a1), f(&self.a0));
        let d = f(&(&self.a1 * &self.a1 - BigInt::from(4) * &self.a2 * &self.a0)).sqrt();
        let q = -0.5 * (b + b.signum() * d);
        let (r1, r2) = (q / a, c / q);
        if (r1 - x).abs() < (r2 - x).abs() {
            r1
        } else {
            r2
        }
    }
}

fn f(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Writes the sequence value as (I₁ + I₂√5)/I₃ and returns the quadratic
/// I₃²x² − 2I₁I₃x + I₁² − 5I₂². For integers (k₁,k₂) not at a root,
/// k₁²|Q(−k₂/k₁)| ≥ 1 in the gcd-reduced form, which gives
/// |k₁ω + k₂| ≥ min(1, 1/(A₂(1 + |Γ − Γ'|)))/|k₁|.
pub fn liouville_certificate(res: &Resonance, d: i64, w: i64, z: i64, side: Side) -> Result<Certificate> {
    if z == 0 || d == 0 || w == 0 {
        return Err(Error::InvalidParam("d, w and z must be nonzero".into()));
    }
    let b = BigInt::from;
    let (k1, k2) = (b(res.k1), b(res.k2));
    let zz = b(z) * b(z) - b(z) - b(1);
    let dd = match side {
        Side::Below => b(d),
        Side::Above => -b(d),
    };
    let i1 = b(2) * &zz * (-&k2) * b(w) + (b(1) - b(2) * b(z)) * &k1 * &dd;
    let i2 = &k1 * &dd;
    let i3 = b(2) * &zz * &k1 * b(w);
    if i2.is_zero() || i3.is_zero() {
        return Err(Error::DegenerateQuadratic);
    }
    let a2 = &i3 * &i3;
    let a1 = b(-2) * &i1 * &i3;
    let a0 = &i1 * &i1 - b(5) * &i2 * &i2;
    let g = a2.gcd(&a1).gcd(&a0);
    let red = &a2 / &g;
    let spread = 2.0 * 5f64.sqrt() * f(&i2.abs()) / f(&i3.abs());
    let c_bound = (1.0 / (f(&red) * (1.0 + spread))).min(1.0);
    Ok(Certificate { a2, a1, a0, c_bound })
}

/// min over 1 ≤ k₁ ≤ k_cap of |k₁ω₁ + k₂|·k₁ with k₂ the nearest integer to −k₁ω₁.
pub fn check_strong_diophantine(omega1: f64, c: f64, k_cap: u32) -> (f64, bool) {
    let min = (1..=k_cap.max(1))
        .map(|k| {
            let x = k as f64 * omega1;
            (x - x.round()).abs() * k as f64
        })
        .fold(f64::INFINITY, f64::min);
    (min, min >= c)
}

/// Real root of α³ + α² − 1 = 0.
pub fn pv_alpha() -> f64 {
    let mut a = 0.75f64;
    for _ in 0..50 {
        let d = (a * a * a + a * a - 1.0) / (3.0 * a * a + 2.0 * a);
        a -= d;
        if d.abs() < 1e-17 {
            break;
        }
    }
    a
}

/// Intersection of ω₁ = num₁/den₁ and ω₂ = num₂/den₂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resonance2 {
    pub first: Resonance,
    pub second: Resonance,
}

/// ω_j = center_j ± (ã₁α + ã₂α²)/z with the α of [`pv_alpha`].
pub fn seq_2d(res: &Resonance2, a_tilde: [f64; 4], z: i64, signs: [Side; 2]) -> Result<[f64; 3]> {
    if z <= 0 {
        return Err(Error::InvalidParam("z must be positive".into()));
    }
    let det = a_tilde[0] * a_tilde[3] - a_tilde[1] * a_tilde[2];
    if det == 0.0 {
        return Err(Error::InvalidParam("singular coefficient matrix".into()));
    }
    let al = pv_alpha();
    let z = z as f64;
    Ok([
        res.first.center() + signs[0].sign() * (a_tilde[0] * al + a_tilde[1] * al * al) / z,
        res.second.center() + signs[1].sign() * (a_tilde[2] * al + a_tilde[3] * al * al) / z,
        1.0,
    ])
}

/// Newton iteration on ∇(N+Z)(p) = ω over the actions with nonzero quadratic part.
pub fn invert_frequency(h: &IntegrableHamiltonian, omega: &[f64], p_guess: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = h.n();
    if omega.len() != n || p_guess.len() != n {
        return Err(Error::DimensionMismatch(n, omega.len()));
    }
    let free: Vec<usize> = (0..n).filter(|&j| h.quadratic[j] != 0.0).collect();
    let mut p = p_guess.to_vec();
    for _ in 0..50 {
        let w = h.frequency(&p).map_err(|_| Error::NoConvergence)?;
        let res = DVector::from_iterator(free.len(), free.iter().map(|&j| w[j] - omega[j]));
        if !res.iter().all(|x| x.is_finite()) {
            return Err(Error::NoConvergence);
        }
        if res.amax() < tol {
            return Ok(p);
        }
        let hess = h.hessian(&p).map_err(|_| Error::NoConvergence)?;
        let jac = DMatrix::from_fn(free.len(), free.len(), |a, b| hess[free[a]][free[b]]);
        let step = jac.lu().solve(&res).ok_or(Error::NoConvergence)?;
        for (a, &j) in free.iter().enumerate() {
            p[j] -= step[a];
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseries::ActionRational;
    use num_complex::Complex64;

    fn one_one() -> Resonance {
        "1:1".parse().unwrap()
    }

    #[test]
    fn labels() {
        let r: Resonance = "3:2".parse().unwrap();
        assert_eq!((r.k1, r.k2), (2, -3));
        assert_eq!(r.center(), 1.5);
        assert_eq!(r.to_string(), "3:2");
        assert_eq!(Resonance::new(2, 4).unwrap(), Resonance::new(1, 2).unwrap());
        assert!("3/2".parse::<Resonance>().is_err());
    }

    #[test]
    fn sequence_values() {
        let w = seq_1d(&one_one(), 1.6, 2, Side::Below).unwrap();
        assert!((w[0] - 0.3888544).abs() < 1e-7);
        assert_eq!(w[1], 1.0);
        let w = seq_1d(&"3:2".parse().unwrap(), 0.6, 2, Side::Below).unwrap();
        assert!((w[0] - 1.2708204).abs() < 1e-7);
        assert!(seq_1d(&one_one(), 1.6, 0, Side::Below).is_err());
        let far = seq_1d(&one_one(), 1.6, 1_000_000, Side::Above).unwrap();
        assert!((far[0] - 1.0).abs() < 2e-6 && far[0] > 1.0);
    }

    #[test]
    fn certificate_example() {
        let c = liouville_certificate(&one_one(), 8, 5, 2, Side::Below).unwrap();
        assert_eq!(c.a2, BigInt::from(100));
        let w = seq_1d(&one_one(), 1.6, 2, Side::Below).unwrap()[0];
        assert!((c.root_near(w) - w).abs() < 1e-12);
        let q = f(&c.a2) * w * w + f(&c.a1) * w + f(&c.a0);
        assert!(q.abs() < 1e-12 * f(&c.a2));
    }

    #[test]
    fn certificate_sweep() {
        for side in [Side::Below, Side::Above] {
            for z in 2..=100 {
                let c = liouville_certificate(&one_one(), 8, 5, z, side).unwrap();
                assert!(c.c_bound > 0.0);
                let w = seq_1d(&one_one(), 1.6, z, side).unwrap()[0];
                assert!((c.root_near(w) - w).abs() < 1e-12);
                assert!(check_strong_diophantine(w, c.c_bound, 1000).1, "z={z}");
            }
        }
    }

    #[test]
    fn degenerate_certificate() {
        let r = Resonance { k1: 0, k2: 1 };
        assert!(matches!(liouville_certificate(&r, 8, 5, 2, Side::Below), Err(Error::DegenerateQuadratic)));
    }

    #[test]
    fn strong_diophantine() {
        let (m, ok) = check_strong_diophantine(golden(), 0.38, 1000);
        assert!(ok && m >= 0.38, "{m}");
        assert!(!check_strong_diophantine(0.5, 1e-300, 10).1);
    }

    #[test]
    fn pisot() {
        let a = pv_alpha();
        assert!((a * a * a + a * a - 1.0).abs() < 1e-14);
        assert!((1.0 / a - 1.324716).abs() < 3e-6);
        assert!((a - 0.7548777).abs() < 1e-7);
    }

    #[test]
    fn two_dimensional() {
        let res = Resonance2 {
            first: one_one(),
            second: "3:2".parse().unwrap(),
        };
        let w = seq_2d(&res, [1.0, 0.0, 0.0, 1.0], 10, [Side::Above, Side::Above]).unwrap();
        assert!((w[0] - 1.0754878).abs() < 1e-7);
        assert!((w[1] - 1.5569840).abs() < 1e-7);
        assert_eq!(w[2], 1.0);
        let far = seq_2d(&res, [1.0, 0.0, 0.0, 1.0], 1 << 40, [Side::Below, Side::Above]).unwrap();
        assert!((far[0] - 1.0).abs() < 1e-11 && (far[1] - 1.5).abs() < 1e-11);
        assert!(seq_2d(&res, [1.0, 2.0, 2.0, 4.0], 10, [Side::Above; 2]).is_err());
    }

    #[test]
    fn invert_without_correction() {
        let h = IntegrableHamiltonian::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        let p = invert_frequency(&h, &[0.7, 1.0], &[0.3, 0.0], 1e-14).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-15);
    }

    fn corrected() -> IntegrableHamiltonian {
        let z = ActionRational::inverse_affine(Complex64::new(0.01, 0.0), -2.0, [2.0, 0.0, 0.0], [2, 0]).unwrap();
        IntegrableHamiltonian::new(vec![1.0, 0.0], vec![0.0, 1.0]).with_z(z)
    }

    #[test]
    fn invert_matches_bisection() {
        let h = corrected();
        let target = 0.6;
        let p = invert_frequency(&h, &[target, 1.0], &[target, 0.0], 1e-13).unwrap();
        let g = |x: f64| h.frequency(&[x, 0.0]).unwrap()[0] - target;
        let (mut lo, mut hi) = (0.3, 0.9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((p[0] - 0.5 * (lo + hi)).abs() < 1e-12);
    }

    #[test]
    fn invert_at_singularity() {
        let h = corrected();
        assert!(matches!(
            invert_frequency(&h, &[1.0, 1.0], &[1.0, 0.0], 1e-12),
            Err(Error::NoConvergence)
        ));
    }
}
