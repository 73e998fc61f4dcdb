//! Spin-orbit and spin-spin-orbit Hamiltonians expanded in the eccentricity.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseries::{index, ActionRational, Index, PoissonSeries, MAX_DIM};

/// N(p) = Σ quadratic_j p_j²/2 + linear_j p_j, plus a correction Z(p) and a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrableHamiltonian {
    pub quadratic: Vec<f64>,
    pub linear: Vec<f64>,
    pub z: ActionRational,
    pub offset: f64,
}

impl IntegrableHamiltonian {
    pub fn new(quadratic: Vec<f64>, linear: Vec<f64>) -> Self {
        assert_eq!(quadratic.len(), linear.len());
        Self {
            quadratic,
            linear,
            z: ActionRational::zero(),
            offset: 0.0,
        }
    }

    pub fn with_z(&self, z: ActionRational) -> Self {
        Self { z, ..self.clone() }
    }

    /// Number of actions, time slot included.
    pub fn n(&self) -> usize {
        self.quadratic.len()
    }

    /// Actions that enter quadratically (all but the time slot).
    pub fn n_free(&self) -> usize {
        self.quadratic.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn normal_form(&self, p: &[f64]) -> f64 {
        (0..self.n())
            .map(|j| 0.5 * self.quadratic[j] * p[j] * p[j] + self.linear[j] * p[j])
            .sum()
    }

    pub fn energy(&self, p: &[f64]) -> Result<f64> {
        Ok(self.normal_form(p) + self.z.eval(p)?.re + self.offset)
    }

    /// ∇_p N.
    pub fn normal_frequency(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|j| self.quadratic[j] * p[j] + self.linear[j])
            .collect()
    }

    /// ∇_p (N + Z).
    pub fn frequency(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut w = self.normal_frequency(p);
        if !self.z.is_zero() {
            for (j, wj) in w.iter_mut().enumerate() {
                *wj += self.z.deriv(j).eval(p)?.re;
            }
        }
        Ok(w)
    }

    /// Hessian of N + Z, full n × n.
    pub fn hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n();
        let mut h = vec![vec![0.0; n]; n];
        for j in 0..n {
            h[j][j] = self.quadratic[j];
        }
        if !self.z.is_zero() {
            for i in 0..n {
                let di = self.z.deriv(i);
                if di.is_zero() {
                    continue;
                }
                for j in i..n {
                    let v = di.deriv(j).eval(p)?.re;
                    h[i][j] += v;
                    if i != j {
                        h[j][i] += v;
                    }
                }
            }
        }
        Ok(h)
    }

    /// The affine form k·∇N(p) = b + c·p.
    pub fn k_dot_omega(&self, k: &Index) -> (f64, [f64; MAX_DIM]) {
        let mut c = [0.0; MAX_DIM];
        let mut b = 0.0;
        for j in 0..self.n() {
            c[j] = k[j] as f64 * self.quadratic[j];
            b += k[j] as f64 * self.linear[j];
        }
        (b, c)
    }
}

/// Physical parameters of the spin-spin-orbit model in normalized units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub eps1: f64,
    pub eps2: f64,
    pub e: f64,
    pub ic1: f64,
    pub ic2: f64,
    pub m1: f64,
    pub m2: f64,
    pub a: f64,
    pub m: f64,
}

impl ModelParams {
    /// Equal split of moments and masses, a = 1, m = M₁M₂a³.
    pub fn symmetric(eps1: f64, eps2: f64, e: f64) -> Self {
        Self {
            eps1,
            eps2,
            e,
            ic1: 0.5,
            ic2: 0.5,
            m1: 0.5,
            m2: 0.5,
            a: 1.0,
            m: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidParam(s.to_string()));
        if !(0.0..1.0).contains(&self.e) {
            return bad("eccentricity must lie in [0, 1)");
        }
        if self.eps1 < 0.0 || self.eps2 < 0.0 {
            return bad("oblateness parameters must be non-negative");
        }
        if (self.ic1 + self.ic2 - 1.0).abs() > 1e-12 || self.ic1 <= 0.0 || self.ic2 <= 0.0 {
            return bad("moments must be positive and sum to 1");
        }
        if (self.m1 + self.m2 - 1.0).abs() > 1e-12 || self.m1 <= 0.0 || self.m2 <= 0.0 {
            return bad("masses must be positive and sum to 1");
        }
        if self.a <= 0.0 {
            return bad("semi-major axis must be positive");
        }
        Ok(())
    }
}

/// Eccentricity polynomial Σ num/den·e^pow.
type Poly = &'static [(i64, i64, i32)];

/// cos(2q + m·q_t) coefficients for the (a/r)³ term.
const SPIN_ORBIT: [(i32, Poly); 10] = [
    (-2, &[(-13, 32, 4), (5, 4, 2), (-1, 2, 0)]),
    (-4, &[(115, 12, 4), (-17, 4, 2)]),
    (1, &[(-11, 1536, 5), (-1, 96, 3)]),
    (-1, &[(5, 768, 5), (-1, 32, 3), (1, 4, 1)]),
    (-3, &[(-489, 256, 5), (123, 32, 3), (-7, 4, 1)]),
    (-5, &[(32525, 1536, 5), (-845, 96, 3)]),
    (2, &[(-1, 48, 4)]),
    (-6, &[(-533, 32, 4)]),
    (3, &[(-81, 2560, 5)]),
    (-7, &[(-228347, 7680, 5)]),
];

/// cos(4q_k + m·q_t) coefficients of the quartic self-coupling.
const QUARTIC: [(i32, Poly); 10] = [
    (-9, &[(-1045005, 4096, 5)]),
    (1, &[(-5, 36864, 5)]),
    (-8, &[(-123575, 1152, 4)]),
    (-7, &[(8822975, 36864, 5), (-93775, 2304, 3)]),
    (-6, &[(2675, 32, 4), (-425, 32, 2)]),
    (-5, &[(-948125, 18432, 5), (6375, 256, 3), (-325, 96, 1)]),
    (-4, &[(-4975, 384, 4), (275, 48, 2), (-25, 48, 0)]),
    (-3, &[(3275, 2048, 5), (-625, 256, 3), (25, 32, 1)]),
    (-2, &[(25, 144, 4), (-25, 96, 2)]),
    (-1, &[(175, 36864, 5), (25, 2304, 3)]),
];

/// cos(2q₁ + s·2q₂ + m·q_t) coefficients of the mixed coupling, keyed by (s, m).
const MIXED: [((i32, i32), Poly); 21] = [
    ((1, -9), &[(-1463007, 2048, 5)]),
    ((1, 1), &[(-7, 18432, 5)]),
    ((-1, -5), &[(-19669, 6144, 5)]),
    ((-1, 5), &[(-19669, 6144, 5)]),
    ((1, -8), &[(-173005, 576, 4)]),
    ((-1, 0), &[(-105, 64, 4), (-5, 8, 2), (-1, 8, 0)]),
    ((-1, -4), &[(-745, 384, 4)]),
    ((-1, 4), &[(-745, 384, 4)]),
    ((1, -7), &[(12352165, 18432, 5), (-131285, 1152, 3)]),
    ((1, -6), &[(3745, 16, 4), (-595, 16, 2)]),
    ((1, -5), &[(-1327375, 9216, 5), (8925, 128, 3), (-455, 48, 1)]),
    ((1, -4), &[(-6965, 192, 4), (385, 24, 2), (-35, 24, 0)]),
    ((-1, -3), &[(-4715, 2048, 5), (-145, 128, 3)]),
    ((-1, 3), &[(-4715, 2048, 5), (-145, 128, 3)]),
    ((1, -3), &[(4585, 1024, 5), (-875, 128, 3), (35, 16, 1)]),
    ((-1, -2), &[(-155, 96, 4), (-5, 8, 2)]),
    ((-1, 2), &[(-155, 96, 4), (-5, 8, 2)]),
    ((-1, -1), &[(-7285, 3072, 5), (-135, 128, 3), (-5, 16, 1)]),
    ((-1, 1), &[(-7285, 3072, 5), (-135, 128, 3), (-5, 16, 1)]),
    ((1, -1), &[(245, 18432, 5), (35, 1152, 3)]),
    ((1, -2), &[(35, 72, 4), (-35, 48, 2)]),
];

fn poly(p: Poly, e: f64) -> f64 {
    p.iter()
        .map(|&(num, den, pow)| num as f64 / den as f64 * e.powi(pow))
        .sum()
}

fn add_cos(r: &mut PoissonSeries, k: Index, amp: f64, deg: [u8; 2]) -> Result<()> {
    if amp == 0.0 {
        return Ok(());
    }
    let h = PoissonSeries::cos(r.n_angles(), k, &ActionRational::constant(amp, deg));
    *r = r.add(&h)?;
    Ok(())
}

/// N = p₁²/2 + p₃ and R = ε Σ P_m(e) cos(2q₁ + m q₃) over the ten harmonics of the
/// degree-5 expansion. Angles are (q₁, q₃).
pub fn spin_orbit_hamiltonian(eps: f64, e: f64) -> Result<(IntegrableHamiltonian, PoissonSeries)> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidParam("eccentricity must lie in [0, 1)".into()));
    }
    let h = IntegrableHamiltonian::new(vec![1.0, 0.0], vec![0.0, 1.0]);
    let mut r = PoissonSeries::zero(2);
    for (m, p) in SPIN_ORBIT {
        add_cos(&mut r, [2, m, 0], eps * poly(p, e), [1, 0])?;
    }
    Ok((h, r))
}

/// N = p₁²/(2Ic₁) + p₂²/(2Ic₂) + p₃; R holds the single-spin, quartic and mixed
/// families. Angles are (q₁, q₂, q₃). The constant potential term goes to `offset`.
pub fn spin_spin_hamiltonian(params: &ModelParams) -> Result<(IntegrableHamiltonian, PoissonSeries)> {
    params.validate()?;
    let ModelParams { eps1, eps2, e, ic1, ic2, m1, m2, a, m } = *params;
    let x = [ic1 * eps1 / m1, ic2 * eps2 / m2];
    let mut h = IntegrableHamiltonian::new(vec![1.0 / ic1, 1.0 / ic2, 0.0], vec![0.0, 0.0, 1.0]);
    h.offset = -m * 5.0 / 112.0 * (x[0] * x[0] + x[1] * x[1]);
    let mut r = PoissonSeries::zero(3);
    let a3 = m / a.powi(3);
    let a5 = m / a.powi(5);
    for k in 0..2 {
        let deg1 = if k == 0 { [1, 0] } else { [0, 1] };
        let deg2 = if k == 0 { [2, 0] } else { [0, 2] };
        for (mm, p) in SPIN_ORBIT {
            let mut idx = [0, 0, mm];
            idx[k] = 2;
            add_cos(&mut r, idx, a3 * x[k] * poly(p, e), deg1)?;
        }
        for (mm, p) in QUARTIC {
            let mut idx = [0, 0, mm];
            idx[k] = 4;
            add_cos(&mut r, idx, a5 * x[k] * x[k] * poly(p, e), deg2)?;
        }
    }
    for ((s, mm), p) in MIXED {
        add_cos(&mut r, [2, 2 * s, mm], a5 * x[0] * x[1] * poly(p, e), [1, 1])?;
    }
    Ok((h, r))
}

/// The coupling constants C^{l₁,l₂}_{m₁,m₂} of the multipole expansion.
pub fn coupling_constant(l1: i64, l2: i64, m1: i64, m2: i64) -> Result<f64> {
    if l1 < 0 || l2 < 0 || m1.abs() > l1 || m2.abs() > l2 {
        return Err(Error::InvalidParam(format!(
            "coupling indices out of range: ({l1},{l2},{m1},{m2})"
        )));
    }
    let fact = |n: i64| -> BigUint { (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k) };
    let (l, mm) = (l1 + l2, m1 + m2);
    let num = fact(2 * l - 2 * mm) * fact(2 * l + 2 * mm);
    let den = fact(l - mm) * fact(l + mm) * BigUint::from(4u32).pow(l as u32);
    let rad = fact(2 * l1 - 2 * m1) * fact(2 * l2 - 2 * m2) * fact(2 * l1 + 2 * m1) * fact(2 * l2 + 2 * m2);
    let sign = if (l - mm).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let ratio = num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY);
    Ok(sign * ratio / rad.to_f64().unwrap_or(f64::INFINITY).sqrt())
}

/// Which model a scan uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Model {
    SpinOrbit { eps: f64, e: f64 },
    SpinSpinOrbit(ModelParams),
}

impl Model {
    pub fn build(&self) -> Result<(IntegrableHamiltonian, PoissonSeries)> {
        match self {
            Model::SpinOrbit { eps, e } => spin_orbit_hamiltonian(*eps, *e),
            Model::SpinSpinOrbit(p) => spin_spin_hamiltonian(p),
        }
    }

    /// Number of angles in the extended phase space.
    pub fn n(&self) -> usize {
        match self {
            Model::SpinOrbit { .. } => 2,
            Model::SpinSpinOrbit(_) => 3,
        }
    }

    /// Default cap on total ε-degree kept during normalization.
    pub fn eps_cap(&self) -> Option<u32> {
        match self {
            Model::SpinOrbit { .. } => None,
            Model::SpinSpinOrbit(_) => Some(5),
        }
    }
}

/// The real amplitude of cos(k·q) in a series with constant coefficients.
pub fn cos_amplitude(r: &PoissonSeries, k: &Index) -> f64 {
    let c = |k: &Index| -> Complex64 {
        r.get(k)
            .map(|c| c.terms().iter().map(|t| t.amp).sum())
            .unwrap_or_default()
    };
    (c(k) + c(&index::neg(k))).re
}
