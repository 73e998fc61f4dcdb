#![allow(dead_code)]

use effstab::pseries::{ActionRational, Affine, Factor, Factors, PoissonSeries, Term};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random affine form with |B + C·p| ≥ 0.4 for p in [-1, 1]^n_act.
pub fn form(r: &mut ChaCha8Rng, n_act: usize) -> Affine {
    let mut c = [0.0; 3];
    c[0] = r.random_range(0.1..0.3);
    for x in c.iter_mut().take(n_act).skip(1) {
        *x = r.random_range(-0.3..0.3);
    }
    let b = r.random_range(1.0..2.0);
    Affine::canonical(b, c).unwrap().0
}

pub fn coeff(r: &mut ChaCha8Rng, n_act: usize, forms: &[Affine]) -> ActionRational {
    let n_terms = r.random_range(1..=2);
    let terms = (0..n_terms)
        .map(|_| {
            let mut factors = Factors::new();
            let n_fac = r.random_range(0..=2);
            let mut picked: Vec<Affine> = (0..n_fac).map(|_| forms[r.random_range(0..forms.len())]).collect();
            picked.sort_by(|a, b| a.total_cmp(b));
            picked.dedup_by(|a, b| a.total_cmp(b).is_eq());
            for f in picked {
                factors.push(Factor { form: f, pow: r.random_range(1..=2) });
            }
            let _ = n_act;
            Term {
                amp: Complex64::new(r.random_range(-1.0..1.0), 0.0),
                factors,
                deg: [1, 0],
            }
        })
        .collect();
    ActionRational::from_terms(terms)
}

/// Random real series with a handful of cos/sin harmonics of order ≤ 4.
pub fn series(r: &mut ChaCha8Rng, n: usize) -> PoissonSeries {
    let n_act = n - 1;
    let forms: Vec<Affine> = (0..3).map(|_| form(r, n_act.max(1))).collect();
    let mut s = PoissonSeries::zero(n);
    for _ in 0..r.random_range(1..=4) {
        let mut k = [0i32; 3];
        for x in k.iter_mut().take(n) {
            *x = r.random_range(-2..=2);
        }
        let c = coeff(r, n_act, &forms);
        let h = if r.random_bool(0.5) {
            PoissonSeries::cos(n, k, &c)
        } else {
            PoissonSeries::sin(n, k, &c)
        };
        s = s.add(&h).unwrap();
    }
    s
}

/// Random real action vector in [-1, 1]^(n-1), last slot arbitrary.
pub fn point(r: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let p = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let q = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
    (p, q)
}

/// Central finite-difference Poisson bracket of two real series at a point.
pub fn fd_bracket(f: &PoissonSeries, g: &PoissonSeries, p: &[f64], q: &[f64], h: f64) -> f64 {
    let n = p.len();
    let d = |s: &PoissonSeries, j: usize, action: bool| {
        let (mut pp, mut qq, mut pm, mut qm) = (p.to_vec(), q.to_vec(), p.to_vec(), q.to_vec());
        if action {
            pp[j] += h;
            pm[j] -= h;
        } else {
            qq[j] += h;
            qm[j] -= h;
        }
        (s.evaluate_real(&pp, &qq).unwrap() - s.evaluate_real(&pm, &qm).unwrap()) / (2.0 * h)
    };
    (0..n)
        .map(|j| d(f, j, false) * d(g, j, true) - d(f, j, true) * d(g, j, false))
        .sum()
}
