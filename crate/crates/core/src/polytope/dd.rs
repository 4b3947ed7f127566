//! Double description method over primitive integer ray vectors.
//!
//! `{ y : A y ≤ c }` is homogenized to the cone `{ (y, t) : A y − c t ≤ 0,
//! t ≥ 0 }`. Extreme rays with `t > 0` are vertices, those with `t = 0`
//! are recession directions.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{PolytopeError, RowBasis};
use crate::rational::Rational;

pub const DEFAULT_MAX_BITS: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DdOptions {
    /// Cap on the bit length of any ray coordinate.
    pub max_bits: u64,
}

impl Default for DdOptions {
    fn default() -> Self {
        DdOptions { max_bits: DEFAULT_MAX_BITS }
    }
}

impl DdOptions {
    /// Reads `CAUSALBOUND_MAX_BITS`, falling back to the default.
    pub fn from_env() -> Self {
        let max_bits = std::env::var("CAUSALBOUND_MAX_BITS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_BITS);
        DdOptions { max_bits }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polyhedron {
    pub vertices: Vec<Vec<Rational>>,
    pub rays: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn contains(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }
}

struct Ray {
    v: Vec<BigInt>,
    zeros: Bits,
}

fn dot(row: &[BigInt], v: &[BigInt]) -> BigInt {
    row.iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum()
}

/// Scales a rational vector to the primitive integer vector with the same direction.
fn primitive_from_rational(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    primitive(ints)
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in &mut v {
            *x /= &g;
        }
    }
    v
}

fn bits_of(v: &[BigInt]) -> u64 {
    v.iter().map(|x| x.bits()).max().unwrap_or(0)
}

/// Enumerates the vertices and extreme rays of `{ y : a y ≤ c }`, which
/// must contain no line.
pub fn enumerate_polyhedron(
    a: &[Vec<Rational>],
    c: &[Rational],
    options: &DdOptions,
) -> Result<Polyhedron, PolytopeError> {
    let d = a.first().map_or(0, Vec::len);
    let dim = d + 1;
    let mut rows: Vec<Vec<BigInt>> = a
        .iter()
        .zip(c)
        .map(|(row, ci)| {
            let mut h = row.clone();
            h.push(-ci.clone());
            primitive_from_rational(&h)
        })
        .collect();
    let mut t_row = vec![BigInt::zero(); dim];
    t_row[d] = -BigInt::one();
    rows.push(t_row);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| {
        let nz = |r: &Vec<BigInt>| r.iter().filter(|x| !x.is_zero()).count();
        nz(&rows[i]).cmp(&nz(&rows[j])).then_with(|| lex(&rows[i], &rows[j])).then(i.cmp(&j))
    });
    let rows: Vec<Vec<BigInt>> = order.iter().map(|&i| rows[i].clone()).collect();
    let m = rows.len();

    // Initial simplicial cone from the first `dim` independent rows.
    let mut basis = RowBasis::new(dim);
    let mut initial = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let as_rational: Vec<Rational> = row.iter().map(|x| Rational::from_integer(x.clone())).collect();
        if basis.insert(&as_rational) {
            initial.push(i);
            if initial.len() == dim {
                break;
            }
        }
    }
    if initial.len() < dim {
        return Err(PolytopeError::NotPointed);
    }
    let a0: Vec<Vec<Rational>> = initial
        .iter()
        .map(|&i| rows[i].iter().map(|x| Rational::from_integer(x.clone())).collect())
        .collect();
    let inverse = invert(&a0);
    let mut rays: Vec<Ray> = (0..dim)
        .map(|j| {
            let column: Vec<Rational> = (0..dim).map(|i| -inverse[i][j].clone()).collect();
            let mut zeros = Bits::new(m);
            for (k, &i) in initial.iter().enumerate() {
                if k != j {
                    zeros.set(i);
                }
            }
            Ray { v: primitive_from_rational(&column), zeros }
        })
        .collect();

    let mut done = vec![false; m];
    for &i in &initial {
        done[i] = true;
    }
    for i in 0..m {
        if done[i] {
            continue;
        }
        let row = &rows[i];
        let values: Vec<BigInt> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| values[k].sign() == Sign::Plus).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| values[k].sign() == Sign::Minus).collect();
        for k in 0..rays.len() {
            if values[k].is_zero() {
                rays[k].zeros.set(i);
            }
        }
        if pos.is_empty() {
            continue;
        }
        let mut fresh = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if common.count() + 2 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == p || k == n || !r.zeros.contains(&common));
                if !adjacent {
                    continue;
                }
                let v: Vec<BigInt> = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(xn, xp)| &values[p] * xn - &values[n] * xp)
                    .collect();
                let v = primitive(v);
                let bits = bits_of(&v);
                if bits > options.max_bits {
                    return Err(PolytopeError::NumericOverflow { bits, cap: options.max_bits });
                }
                let mut zeros = common;
                zeros.set(i);
                fresh.push(Ray { v, zeros });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() - pos.len() + fresh.len());
        for (k, r) in rays.into_iter().enumerate() {
            if values[k].sign() != Sign::Plus {
                kept.push(r);
            }
        }
        kept.extend(fresh);
        rays = kept;
    }

    let mut out = Polyhedron::default();
    for r in rays {
        let t = &r.v[d];
        if t.is_positive() {
            out.vertices.push(r.v[..d].iter().map(|x| Rational::new(x.clone(), t.clone())).collect());
        } else if t.is_zero() {
            out.rays.push(r.v[..d].iter().map(|x| Rational::from_integer(x.clone())).collect());
        }
    }
    out.vertices.sort();
    out.vertices.dedup();
    out.rays.sort();
    out.rays.dedup();
    Ok(out)
}

fn lex(a: &[BigInt], b: &[BigInt]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
}

/// Gauss-Jordan inverse of a nonsingular square matrix.
fn invert(m: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = m.len();
    let mut aug: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero()).expect("nonsingular");
        aug.swap(col, pivot);
        let inv = Rational::one() / &aug[col][col];
        for x in &mut aug[col] {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                let pivot_row = aug[col].clone();
                for (x, p) in aug[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn system(rows: &[(&[i64], i64)]) -> (Vec<Vec<Rational>>, Vec<Rational>) {
        (
            rows.iter().map(|(r, _)| r.iter().map(|&x| int(x)).collect()).collect(),
            rows.iter().map(|(_, c)| int(*c)).collect(),
        )
    }

    #[test]
    fn unit_square() {
        let (a, c) = system(&[(&[1, 0], 1), (&[0, 1], 1), (&[-1, 0], 0), (&[0, -1], 0)]);
        let p = enumerate_polyhedron(&a, &c, &DdOptions::default()).unwrap();
        assert_eq!(p.vertices.len(), 4);
        assert!(p.rays.is_empty());
        assert!(p.vertices.contains(&vec![int(1), int(1)]));
    }

    #[test]
    fn cube_and_simplex() {
        let (a, c) = system(&[
            (&[1, 0, 0], 1),
            (&[0, 1, 0], 1),
            (&[0, 0, 1], 1),
            (&[-1, 0, 0], 0),
            (&[0, -1, 0], 0),
            (&[0, 0, -1], 0),
        ]);
        assert_eq!(enumerate_polyhedron(&a, &c, &DdOptions::default()).unwrap().vertices.len(), 8);
        let (a, c) = system(&[(&[1, 1, 1], 1), (&[-1, 0, 0], 0), (&[0, -1, 0], 0), (&[0, 0, -1], 0)]);
        assert_eq!(enumerate_polyhedron(&a, &c, &DdOptions::default()).unwrap().vertices.len(), 4);
    }

    #[test]
    fn unbounded_quadrant_has_rays() {
        let (a, c) = system(&[(&[-1, 0], 0), (&[0, -1], 0)]);
        let p = enumerate_polyhedron(&a, &c, &DdOptions::default()).unwrap();
        assert_eq!(p.vertices, vec![vec![int(0), int(0)]]);
        assert_eq!(p.rays.len(), 2);
    }

    #[test]
    fn empty_and_lines() {
        let (a, c) = system(&[(&[1], -1), (&[-1], 0)]);
        assert!(enumerate_polyhedron(&a, &c, &DdOptions::default()).unwrap().vertices.is_empty());
        let (a, c) = system(&[(&[1, 0], 1)]);
        assert_eq!(enumerate_polyhedron(&a, &c, &DdOptions::default()), Err(PolytopeError::NotPointed));
    }

    #[test]
    fn bit_cap() {
        let (a, c) = system(&[(&[3, 1], 7), (&[1, 5], 11), (&[-1, 0], 0), (&[0, -1], 0)]);
        assert!(matches!(
            enumerate_polyhedron(&a, &c, &DdOptions { max_bits: 2 }),
            Err(PolytopeError::NumericOverflow { .. })
        ));
    }
}
