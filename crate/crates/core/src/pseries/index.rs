//! Integer Fourier indices.

/// Largest number of angles handled (two spins plus the time angle).
pub const MAX_DIM: usize = 3;

/// A Fourier index. Slots beyond the series dimension are zero.
pub type Index = [i32; MAX_DIM];

/// Builds an index from a slice, padding with zeros.
pub fn from_slice(v: &[i32]) -> Index {
    let mut k = [0; MAX_DIM];
    k[..v.len()].copy_from_slice(v);
    k
}

/// The 1-norm |k₁|+…+|k_n|.
pub fn order(k: &Index) -> i32 {
    k.iter().map(|x| x.abs()).sum()
}

pub fn neg(k: &Index) -> Index {
    [-k[0], -k[1], -k[2]]
}

pub fn add(a: &Index, b: &Index) -> Index {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn is_zero(k: &Index) -> bool {
    k.iter().all(|&x| x == 0)
}

/// True for zero and for indices whose first nonzero entry is positive.
pub fn is_upper(k: &Index) -> bool {
    match k.iter().find(|&&x| x != 0) {
        None => true,
        Some(&x) => x > 0,
    }
}

pub fn dot(k: &Index, v: &[f64]) -> f64 {
    k.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum()
}

pub(crate) fn fmt(k: &Index, n: usize) -> String {
    let parts: Vec<String> = k[..n].iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}
