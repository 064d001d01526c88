//! Linear algebra over `Z/p^e`: Smith normal form by valuation pivoting and
//! cokernel extraction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::prime::Prime;

/// A dense `rows × cols` matrix with entries in `Z/p^e`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixModPE {
    p: Prime,
    e: u32,
    modulus: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl MatrixModPE {
    /// Entries are reduced mod `p^e`. Fails if `p^e ≥ 2^63` or `e = 0`.
    pub fn new(p: Prime, e: u32, rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self> {
        let modulus = modulus(p, e)?;
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let data = entries.into_iter().map(|x| x % modulus).collect();
        Ok(MatrixModPE { p, e, modulus, rows, cols, data })
    }

    /// Reduces signed integer entries mod `p^e`.
    pub fn from_signed(p: Prime, e: u32, rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        let m = modulus(p, e)? as i128;
        let reduced = entries.iter().map(|&x| (x as i128).rem_euclid(m) as u64).collect();
        Self::new(p, e, rows, cols, reduced)
    }

    pub fn zeros(p: Prime, e: u32, rows: usize, cols: usize) -> Result<Self> {
        Self::new(p, e, rows, cols, vec![0; rows * cols])
    }

    pub fn identity(p: Prime, e: u32, n: usize) -> Result<Self> {
        let mut m = Self::zeros(p, e, n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn prime(&self) -> Prime {
        self.p
    }
    pub fn precision(&self) -> u32 {
        self.e
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn entries(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    /// `self · other` mod `p^e`.
    pub fn mul(&self, other: &MatrixModPE) -> Result<MatrixModPE> {
        if self.cols != other.rows || self.modulus != other.modulus {
            return Err(Error::InvalidMatrix("incompatible product".into()));
        }
        let m = self.modulus;
        let mut out = vec![0u64; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc = add_mod(acc, mul_mod(self.get(i, k), other.get(k, j), m), m);
                }
                out[i * other.cols + j] = acc;
            }
        }
        MatrixModPE::new(self.p, self.e, self.rows, other.cols, out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    fn scale_row(&mut self, r: usize, k: u64) {
        for c in 0..self.cols {
            let v = mul_mod(self.get(r, c), k, self.modulus);
            self.set(r, c, v);
        }
    }

    /// row[dst] -= k · row[src]
    fn sub_row(&mut self, dst: usize, src: usize, k: u64, from_col: usize) {
        let m = self.modulus;
        for c in from_col..self.cols {
            let v = sub_mod(self.get(dst, c), mul_mod(k, self.get(src, c), m), m);
            self.set(dst, c, v);
        }
    }

    /// col[dst] -= k · col[src]
    fn sub_col(&mut self, dst: usize, src: usize, k: u64, from_row: usize) {
        let m = self.modulus;
        for r in from_row..self.rows {
            let v = sub_mod(self.get(r, dst), mul_mod(k, self.get(r, src), m), m);
            self.set(r, dst, v);
        }
    }
}

pub(crate) fn modulus(p: Prime, e: u32) -> Result<u64> {
    if e == 0 {
        return Err(Error::InvalidConfig("precision e must be at least 1".into()));
    }
    p.checked_pow(e).ok_or(Error::ModulusTooLarge { p: p.get(), e })
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b; // both < 2^63
    if s >= m { s - m } else { s }
}

#[inline]
fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b { a - b } else { a + m - b }
}

/// Inverse of a unit mod `m` by extended Euclid.
pub fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

/// Largest `v ≤ e` with `p^v | x`; `valuation(0) = e`.
pub fn valuation(x: u64, p: Prime, e: u32) -> u32 {
    if x == 0 {
        return e;
    }
    let mut x = x;
    let mut v = 0;
    while v < e && x % p.get() == 0 {
        x /= p.get();
        v += 1;
    }
    v
}

/// Diagonal valuations plus optional transforms with `U · M · V = D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    /// `min(rows, cols)` valuations, nondecreasing, each in `[0, e]`.
    pub valuations: Vec<u32>,
    pub transforms: Option<(MatrixModPE, MatrixModPE)>,
}

/// Smith normal form over `Z/p^e`.
///
/// At each step the entry of least valuation in the remaining block (first
/// in row-major order on ties) is moved to the pivot, normalized to exactly
/// `p^v`, and used to clear its row and column. Every other entry of the
/// block is divisible by `p^v`, so the clearing multipliers are exact
/// quotients.
pub fn smith_normal_form(m: &MatrixModPE, with_transforms: bool) -> SmithForm {
    let (rows, cols) = (m.rows, m.cols);
    let (p, e, md) = (m.p, m.e, m.modulus);
    let mut a = m.clone();
    let mut transforms = with_transforms.then(|| {
        (
            MatrixModPE::identity(p, e, rows).expect("modulus already checked"),
            MatrixModPE::identity(p, e, cols).expect("modulus already checked"),
        )
    });
    let steps = rows.min(cols);
    let mut valuations = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut best = (e, k, k);
        'search: for r in k..rows {
            for c in k..cols {
                let v = valuation(a.get(r, c), p, e);
                if v < best.0 {
                    best = (v, r, c);
                    if v == 0 {
                        break 'search;
                    }
                }
            }
        }
        let (v, pr, pc) = best;
        if v == e {
            valuations.resize(steps, e);
            break;
        }
        a.swap_rows(k, pr);
        a.swap_cols(k, pc);
        let pv = p.checked_pow(v).expect("v < e");
        let unit = a.get(k, k) / pv;
        let inv = inverse_mod(unit, md).expect("unit part is invertible");
        a.scale_row(k, inv);
        if let Some((u, w)) = transforms.as_mut() {
            u.swap_rows(k, pr);
            w.swap_cols(k, pc);
            u.scale_row(k, inv);
        }
        for r in k + 1..rows {
            let x = a.get(r, k);
            if x != 0 {
                let q = x / pv;
                a.sub_row(r, k, q, k);
                if let Some((u, _)) = transforms.as_mut() {
                    u.sub_row(r, k, q, 0);
                }
            }
        }
        for c in k + 1..cols {
            let x = a.get(k, c);
            if x != 0 {
                let q = x / pv;
                a.sub_col(c, k, q, k);
                if let Some((_, w)) = transforms.as_mut() {
                    w.sub_col(c, k, q, 0);
                }
            }
        }
        valuations.push(v);
    }
    SmithForm { valuations, transforms }
}

/// Isomorphism type of the cokernel of one sampled matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CokernelObservation {
    /// Nonzero diagonal valuations, nonincreasing. Saturated parts equal `e`.
    pub torsion: Partition,
    pub free_rank: u32,
    /// Some valuation reached the working precision.
    pub saturated: bool,
}

pub fn observe_cokernel(m: &MatrixModPE) -> CokernelObservation {
    let snf = smith_normal_form(m, false);
    let saturated = snf.valuations.iter().any(|&d| d == m.e);
    CokernelObservation {
        torsion: Partition::from_unsorted(snf.valuations),
        free_rank: m.rows.saturating_sub(m.cols) as u32,
        saturated,
    }
}

/// Invariant factors `d_1 | d_2 | …` of an integer matrix (given row-major),
/// `min(rows, cols)` of them, nonnegative, zeros last.
pub fn integer_snf_oracle(rows: usize, cols: usize, entries: &[i64]) -> Vec<BigInt> {
    assert_eq!(entries.len(), rows * cols);
    let mut a: Vec<Vec<BigInt>> = (0..rows)
        .map(|r| (0..cols).map(|c| BigInt::from(entries[r * cols + c])).collect())
        .collect();
    let steps = rows.min(cols);
    let mut diag = Vec::with_capacity(steps);
    for k in 0..steps {
        loop {
            // smallest nonzero |entry| in the block
            let pivot = (k..rows)
                .flat_map(|r| (k..cols).map(move |c| (r, c)))
                .filter(|&(r, c)| !a[r][c].is_zero())
                .min_by(|&(r1, c1), &(r2, c2)| a[r1][c1].abs().cmp(&a[r2][c2].abs()));
            let Some((pr, pc)) = pivot else {
                diag.resize(steps, BigInt::zero());
                return diag;
            };
            a.swap(k, pr);
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            let piv = a[k][k].clone();
            let mut clean = true;
            for r in k + 1..rows {
                let q = a[r][k].div_floor(&piv);
                if !q.is_zero() {
                    for c in k..cols {
                        let t = &q * &a[k][c];
                        a[r][c] -= t;
                    }
                }
                clean &= a[r][k].is_zero();
            }
            for c in k + 1..cols {
                let q = a[k][c].div_floor(&piv);
                if !q.is_zero() {
                    for r in k..rows {
                        let t = &q * &a[r][k];
                        a[r][c] -= t;
                    }
                }
                clean &= a[k][c].is_zero();
            }
            if !clean {
                continue;
            }
            // pivot must divide the rest of the block; otherwise fold the
            // offending row into the pivot row and repeat
            let bad = (k + 1..rows).find(|&r| (k + 1..cols).any(|c| !a[r][c].is_multiple_of(&piv)));
            match bad {
                Some(r) => {
                    for c in k..cols {
                        let t = a[r][c].clone();
                        a[k][c] += t;
                    }
                }
                None => break,
            }
        }
        diag.push(a[k][k].abs());
    }
    diag
}
