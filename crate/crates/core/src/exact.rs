//! Exact rational linear algebra for the small dense systems that show up in
//! polytope combinatorics (vertex solves, ranks, null spaces, unimodular
//! inverses).

use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, ToricError};

/// Exact rational scalar.
pub type Rational = Ratio<i128>;

pub fn rat(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-1/2"`, `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || ToricError::invalid("offset", format!("cannot parse {s:?} as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n = i128::from_str(n.trim()).map_err(|_| bad())?;
        let d = i128::from_str(d.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(ToricError::invalid("offset", "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac_part.len() > 18 {
            return Err(bad());
        }
        let negative = int_part.trim_start().starts_with('-');
        let whole = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            0
        } else {
            i128::from_str(int_part).map_err(|_| bad())?.abs()
        };
        let denom = 10i128.pow(frac_part.len() as u32);
        let frac = i128::from_str(frac_part).map_err(|_| bad())?;
        let magnitude = Rational::new(whole * denom + frac, denom);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    i128::from_str(s).map(rat).map_err(|_| bad())
}

/// Renders a rational as `"n"` or `"n/d"`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Reduced row echelon form. Returns the reduced matrix and its pivot columns.
pub fn rref(rows: &[Vec<Rational>], ncols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(pivot_row) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pivot_row);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c];
                for j in 0..ncols {
                    let delta = factor * m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank(rows: &[Vec<Rational>], ncols: usize) -> usize {
    rref(rows, ncols).1.len()
}

/// Basis of the right null space `{u : rows·u = 0}`.
pub fn null_space(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let (m, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut u = vec![Rational::zero(); ncols];
            u[f] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                u[pc] = -m[r][f];
            }
            u
        })
        .collect()
}

/// Solves the square system `a·x = b`; `None` when `a` is singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let augmented: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let (m, pivots) = rref(&augmented, n + 1);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(m.iter().map(|row| row[n]).collect())
}

/// Determinant by fraction-free elimination over the rationals.
pub fn det(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let pivot = m[c][c];
        d *= pivot;
        for i in (c + 1)..n {
            if m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c] / pivot;
            for j in c..n {
                let delta = factor * m[c][j];
                m[i][j] -= delta;
            }
        }
    }
    d
}

pub fn int_matrix_to_rational(a: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    a.iter()
        .map(|row| row.iter().map(|&v| rat(v as i128)).collect())
        .collect()
}

pub fn int_det(a: &[Vec<i64>]) -> i64 {
    let d = det(&int_matrix_to_rational(a));
    debug_assert!(d.is_integer());
    d.to_integer() as i64
}

/// Inverse of an integer matrix with determinant ±1.
pub fn unimodular_inverse(a: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let n = a.len();
    let d = int_det(a);
    if d.abs() != 1 {
        return Err(ToricError::InvalidFrameChange { det: d });
    }
    let q = int_matrix_to_rational(a);
    let mut inv = vec![vec![0i64; n]; n];
    for col in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[col] = Rational::one();
        let x = solve(&q, &e).ok_or(ToricError::InvalidFrameChange { det: d })?;
        for (row, v) in x.iter().enumerate() {
            inv[row][col] = v.to_integer() as i64;
        }
    }
    Ok(inv)
}

pub fn gcd_of(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_nonnegative(q: &Rational) -> bool {
    !q.is_negative()
}
