//! Dense two-phase simplex over exact rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::querylang::Relation;
use crate::rational::Rational;

/// `coefficients · x  relation  rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRow {
    pub coefficients: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    /// Row multipliers `u` with `uᵀA ≤ 0`, `u·b > 0` and the sign of each
    /// inequality multiplier matching its direction.
    Infeasible { certificate: Vec<Rational> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    objective: Vec<Rational>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let inv = Rational::one() / &self.rows[r][col];
        for x in &mut self.rows[r] {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.objective[col].is_zero() {
            let f = self.objective[col].clone();
            for &j in &nz {
                self.objective[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = col;
    }

    fn price(&mut self, cost: &[Rational]) {
        let mut obj: Vec<Rational> = cost.to_vec();
        obj.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for j in 0..=self.width {
                if !self.rows[i][j].is_zero() {
                    obj[j] -= &cost[b] * &self.rows[i][j];
                }
            }
        }
        self.objective = obj;
    }

    /// Bland's rule; `false` when unbounded.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let Some(col) = (0..self.width).find(|&j| allowed(j) && self.objective[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[self.rhs()] / &row[col];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

/// Minimizes `cost · x` over `x ≥ 0` subject to `rows`.
pub fn solve_lp(cost: &[Rational], rows: &[LpRow]) -> LpOutcome {
    let n = cost.len();
    let m = rows.len();
    let slack_cols: Vec<Option<usize>> = {
        let mut next = n;
        rows.iter()
            .map(|r| match r.relation {
                Relation::Eq => None,
                _ => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let structural = n + slack_cols.iter().flatten().count();
    let width = structural + m;
    let mut signs = Vec::with_capacity(m);
    let mut t_rows = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        let mut t = vec![Rational::zero(); width + 1];
        t[..n].clone_from_slice(&row.coefficients);
        if let Some(s) = slack_cols[i] {
            t[s] = match row.relation {
                Relation::Ge => -Rational::one(),
                _ => Rational::one(),
            };
        }
        t[width] = row.rhs.clone();
        let sign = if row.rhs.is_negative() { -Rational::one() } else { Rational::one() };
        if sign.is_negative() {
            for x in &mut t {
                *x = -x.clone();
            }
        }
        t[structural + i] = Rational::one();
        signs.push(sign);
        t_rows.push(t);
    }
    let mut tab = Tableau {
        rows: t_rows,
        basis: (structural..width).collect(),
        objective: Vec::new(),
        width,
    };

    let mut phase1 = vec![Rational::zero(); width];
    for c in &mut phase1[structural..] {
        *c = Rational::one();
    }
    tab.price(&phase1);
    tab.run(&|_| true);
    let infeasibility = -tab.objective[width].clone();
    if infeasibility.is_positive() {
        let certificate = (0..m)
            .map(|i| (Rational::one() - &tab.objective[structural + i]) * &signs[i])
            .collect();
        return LpOutcome::Infeasible { certificate };
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= structural {
            match (0..structural).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(col) => tab.pivot(i, col),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = vec![Rational::zero(); width];
    phase2[..n].clone_from_slice(cost);
    tab.price(&phase2);
    if !tab.run(&|j| j < structural) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][width].clone();
        }
    }
    LpOutcome::Optimal { value: -tab.objective[width].clone(), x }
}

/// Checks a Farkas certificate against the original rows.
pub fn verify_certificate(rows: &[LpRow], n: usize, u: &[Rational]) -> bool {
    let signs_ok = rows.iter().zip(u).all(|(r, ui)| match r.relation {
        Relation::Eq => true,
        Relation::Ge => !ui.is_negative(),
        Relation::Le => !ui.is_positive(),
    });
    let columns_ok = (0..n).all(|j| {
        let s: Rational = rows.iter().zip(u).map(|(r, ui)| &r.coefficients[j] * ui).sum();
        !s.is_positive()
    });
    let b: Rational = rows.iter().zip(u).map(|(r, ui)| &r.rhs * ui).sum();
    signs_ok && columns_ok && b.is_positive()
}
