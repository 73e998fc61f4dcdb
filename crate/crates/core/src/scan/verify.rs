use num_complex::Complex64;
use ode_solvers::{DVector, Dop853, OutputType, System};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{IntegrableHamiltonian, Model};
use crate::normalize::Split;

const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-12;
const CHUNK: f64 = 1e4;
const DRIFT_LIMIT: f64 = 1e-6;

/// Result of a direct integration of the original Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// max_t ‖p(t) − p(0)‖∞ over the free actions.
    pub max_deviation: f64,
    pub within_bound: bool,
    /// max_t |H(t) − H(0)|/|H(0)|.
    pub energy_drift: f64,
    /// False when the drift exceeds 10⁻⁶.
    pub reliable: bool,
}

/// N(p) + Z + Σ c_k e^{ik·q} with constant c_k.
#[derive(Clone)]
struct Flow {
    h: IntegrableHamiltonian,
    harmonics: Vec<(Vec<i32>, Complex64)>,
    kmax: Vec<i32>,
    n: usize,
}

impl Flow {
    fn new(model: &Model) -> Result<Self> {
        let (h, r) = model.build()?;
        let split = Split::new(h, r);
        let n = split.h.n();
        let mut harmonics = Vec::new();
        let mut kmax = vec![0; n];
        for (k, c) in split.r.entries() {
            if c.terms().iter().any(|t| !t.factors.is_empty()) {
                return Err(Error::InvalidParam("integration needs action-independent coefficients".into()));
            }
            let amp: Complex64 = c.terms().iter().map(|t| t.amp).sum();
            for j in 0..n {
                kmax[j] = kmax[j].max(k[j].abs());
            }
            harmonics.push((k[..n].to_vec(), amp));
        }
        Ok(Self { h: split.h, harmonics, kmax, n })
    }

    /// e^{ik·q} for every harmonic.
    fn phases(&self, q: &[f64]) -> Vec<Complex64> {
        let pw: Vec<Vec<Complex64>> = (0..self.n)
            .map(|j| {
                let km = self.kmax[j] as usize;
                let z = Complex64::from_polar(1.0, q[j]);
                let mut v = vec![Complex64::new(1.0, 0.0); 2 * km + 1];
                for i in 1..=km {
                    v[km + i] = v[km + i - 1] * z;
                    v[km - i] = v[km - i + 1] * z.conj();
                }
                v
            })
            .collect();
        self.harmonics
            .iter()
            .map(|(k, _)| (0..self.n).map(|j| pw[j][(k[j] + self.kmax[j]) as usize]).product())
            .collect()
    }

    fn energy(&self, y: &DVector<f64>) -> Result<f64> {
        let (p, q) = (&y.as_slice()[..self.n], &y.as_slice()[self.n..]);
        let ph = self.phases(q);
        let r: f64 = self.harmonics.iter().zip(&ph).map(|((_, c), e)| (c * e).re).sum();
        Ok(self.h.energy(p)? + r)
    }
}

impl System<f64, DVector<f64>> for Flow {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let n = self.n;
        let (p, q) = (&y.as_slice()[..n], &y.as_slice()[n..]);
        let w = self.h.frequency(p).unwrap_or_else(|_| vec![f64::NAN; n]);
        for j in 0..n {
            dy[n + j] = w[j];
            dy[j] = 0.0;
        }
        for ((k, c), e) in self.harmonics.iter().zip(self.phases(q)) {
            let im = (c * e).im;
            for j in 0..n {
                dy[j] += k[j] as f64 * im;
            }
        }
    }
}

/// Integrates Hamilton's equations of the original model from (p0, q0) up to
/// `horizon` and compares the largest excursion of the free actions with `bound`.
pub fn verify_integration(model: &Model, p0: &[f64], q0: &[f64], bound: f64, horizon: f64) -> Result<Verification> {
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidParam("integration horizon must be finite and nonnegative".into()));
    }
    let flow = Flow::new(model)?;
    let n = flow.n;
    if p0.len() != n || q0.len() != n {
        return Err(Error::DimensionMismatch(n, p0.len()));
    }
    let free: Vec<usize> = (0..n).filter(|&j| flow.h.quadratic[j] != 0.0).collect();
    let mut y = DVector::from_iterator(2 * n, p0.iter().chain(q0).copied());
    let e0 = flow.energy(&y)?;
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    let (mut dev, mut drift) = (0.0f64, 0.0f64);
    let mut t = 0.0;
    while t < horizon {
        let t1 = (t + CHUNK).min(horizon);
        let mut solver = Dop853::from_param(
            flow.clone(), t, t1, 0.0, y.clone(), RTOL, ATOL, 0.9, 0.0, 0.333, 6.0, t1 - t, 0.0, u32::MAX, 1000, OutputType::Sparse,
        );
        solver
            .integrate()
            .map_err(|e| Error::InvalidParam(format!("integration failed: {e}")))?;
        for s in solver.y_out() {
            for &j in &free {
                dev = dev.max((s[j] - p0[j]).abs());
            }
        }
        y = solver.y_out().last().cloned().unwrap_or(y);
        drift = drift.max((flow.energy(&y)? - e0).abs() / scale);
        t = t1;
    }
    Ok(Verification {
        max_deviation: dev,
        within_bound: dev <= bound,
        energy_drift: drift,
        reliable: drift <= DRIFT_LIMIT,
    })
}
