//! Primal LP assembly, dualization, and exact vertex enumeration of the
//! dual polyhedron.

mod dd;

pub use dd::{enumerate_polyhedron, DdOptions, Polyhedron};

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{ConstraintSystem, ExtraRow};
use crate::evaluator::ObjectiveVector;
use crate::querylang::Relation;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolytopeError {
    #[error("objective has length {found}, constraint system has {expected} columns")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rational entries grew to {bits} bits, above the cap of {cap}")]
    NumericOverflow { bits: u64, cap: u64 },
    #[error("the dual polyhedron is empty; the constraint set is contradictory")]
    EmptyPolytope,
    #[error("the dual polyhedron contains a line")]
    NotPointed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Min,
    Max,
}

/// `min / max α·q` subject to `P q = p`, the extra rows, `1·q = 1`, `q ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub alpha: Vec<Rational>,
    pub p_rows: Vec<Vec<usize>>,
    pub extra_rows: Vec<ExtraRow>,
    pub aleph: usize,
}

impl LinearProgram {
    pub fn equality_rows(&self) -> usize {
        self.p_rows.len() + 1 + self.extra_rows.iter().filter(|r| r.relation == Relation::Eq).count()
    }
}

pub fn assemble_primal(
    cs: &ConstraintSystem,
    obj: &ObjectiveVector,
    sense: Sense,
) -> Result<LinearProgram, PolytopeError> {
    if obj.alpha.len() != cs.aleph() {
        return Err(PolytopeError::DimensionMismatch { expected: cs.aleph(), found: obj.alpha.len() });
    }
    for row in &cs.extra_rows {
        if row.coefficients.len() != cs.aleph() {
            return Err(PolytopeError::DimensionMismatch {
                expected: cs.aleph(),
                found: row.coefficients.len(),
            });
        }
    }
    Ok(LinearProgram {
        sense,
        alpha: obj.alpha.clone(),
        p_rows: cs.rows().to_vec(),
        extra_rows: cs.extra_rows.clone(),
        aleph: cs.aleph(),
    })
}

/// One dual coordinate, in the order extra rows, normalization, `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DualVar {
    Extra(usize),
    Normalization,
    P(usize),
}

/// `{ y : A y ≤ c }` over the kept dual coordinates. Dual coordinates whose
/// primal rows are linear combinations of earlier equality rows are fixed
/// at zero, which removes the lineality space without changing any bound.
#[derive(Clone, Debug)]
pub struct DualSystem {
    pub sense: Sense,
    pub vars: Vec<DualVar>,
    pub kept: Vec<usize>,
    pub a: Vec<Vec<Rational>>,
    pub c: Vec<Rational>,
    /// Right-hand sides of the extra rows, used by the objective template.
    pub extra_rhs: Vec<Rational>,
}

impl DualSystem {
    pub fn dimension(&self) -> usize {
        self.kept.len()
    }

    /// Extends a point over kept coordinates with zeros.
    pub fn expand(&self, y: &[Rational]) -> Vec<Rational> {
        let mut full = vec![Rational::zero(); self.vars.len()];
        for (k, &i) in self.kept.iter().enumerate() {
            full[i] = y[k].clone();
        }
        full
    }

    /// Constant term and `p` coefficients of `(d, 1, p)·y`, negated for Max.
    pub fn objective_template(&self, y_full: &[Rational]) -> (Rational, Vec<(usize, Rational)>) {
        objective_template(self.sense, &self.vars, &self.extra_rhs, y_full)
    }

    /// Residuals `c − A y` (all must be ≥ 0 for a feasible `y`).
    pub fn slack(&self, y: &[Rational]) -> Vec<Rational> {
        self.a
            .iter()
            .zip(&self.c)
            .map(|(row, c)| c - row.iter().zip(y).map(|(a, x)| a * x).sum::<Rational>())
            .collect()
    }

    /// Plain-text H-representation: `a_1 ... a_d <= c` per line.
    pub fn h_representation(&self) -> String {
        let mut out = format!("H {} {}\n", self.a.len(), self.dimension());
        for (row, c) in self.a.iter().zip(&self.c) {
            let cells: Vec<String> = row.iter().map(format_rational).collect();
            let _ = writeln!(out, "{} <= {}", cells.join(" "), format_rational(c));
        }
        out
    }
}

fn objective_template(
    sense: Sense,
    vars: &[DualVar],
    extra_rhs: &[Rational],
    y_full: &[Rational],
) -> (Rational, Vec<(usize, Rational)>) {
    let mut constant = Rational::zero();
    let mut coefs = Vec::new();
    for (v, y) in vars.iter().zip(y_full) {
        if y.is_zero() {
            continue;
        }
        match v {
            DualVar::Extra(e) => constant += &extra_rhs[*e] * y,
            DualVar::Normalization => constant += y,
            DualVar::P(b) => coefs.push((*b, y.clone())),
        }
    }
    if sense == Sense::Max {
        constant = -constant;
        for (_, c) in &mut coefs {
            *c = -c.clone();
        }
    }
    (constant, coefs)
}

pub fn dualize(lp: &LinearProgram) -> DualSystem {
    let n = lp.aleph;
    let mut vars = Vec::new();
    let mut primal_rows: Vec<Vec<Rational>> = Vec::new();
    for (e, row) in lp.extra_rows.iter().enumerate() {
        vars.push(DualVar::Extra(e));
        primal_rows.push(row.coefficients.clone());
    }
    vars.push(DualVar::Normalization);
    primal_rows.push(vec![Rational::one(); n]);
    for (b, cols) in lp.p_rows.iter().enumerate() {
        vars.push(DualVar::P(b));
        let mut row = vec![Rational::zero(); n];
        for &gamma in cols {
            row[gamma] = Rational::one();
        }
        primal_rows.push(row);
    }

    // Greedy independent subset: normalization, equality extra rows, then p.
    let norm = lp.extra_rows.len();
    let mut order = vec![norm];
    order.extend((0..lp.extra_rows.len()).filter(|&e| lp.extra_rows[e].relation == Relation::Eq));
    order.extend(norm + 1..vars.len());
    let mut basis = RowBasis::new(n);
    let mut kept_flags = vec![false; vars.len()];
    for i in order {
        if basis.insert(&primal_rows[i]) {
            kept_flags[i] = true;
        }
    }
    for (e, row) in lp.extra_rows.iter().enumerate() {
        if row.relation != Relation::Eq {
            kept_flags[e] = true;
        }
    }
    let kept: Vec<usize> = (0..vars.len()).filter(|&i| kept_flags[i]).collect();

    let sign = match lp.sense {
        Sense::Min => Rational::one(),
        Sense::Max => -Rational::one(),
    };
    let mut a = Vec::new();
    let mut c = Vec::new();
    for gamma in 0..n {
        a.push(kept.iter().map(|&i| primal_rows[i][gamma].clone()).collect());
        c.push(&sign * &lp.alpha[gamma]);
    }
    for (k, &i) in kept.iter().enumerate() {
        if let DualVar::Extra(e) = vars[i] {
            let s = match lp.extra_rows[e].relation {
                Relation::Ge => -Rational::one(),
                Relation::Le => Rational::one(),
                Relation::Eq => continue,
            };
            let mut row = vec![Rational::zero(); kept.len()];
            row[k] = s;
            a.push(row);
            c.push(Rational::zero());
        }
    }
    DualSystem {
        sense: lp.sense,
        vars,
        kept,
        a,
        c,
        extra_rhs: lp.extra_rows.iter().map(|r| r.rhs.clone()).collect(),
    }
}

/// Incremental row-echelon basis for rank tests.
struct RowBasis {
    rows: Vec<(usize, Vec<Rational>)>,
    width: usize,
}

impl RowBasis {
    fn new(width: usize) -> Self {
        RowBasis { rows: Vec::new(), width }
    }

    fn insert(&mut self, v: &[Rational]) -> bool {
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            if !v[*pivot].is_zero() {
                let f = v[*pivot].clone() / &row[*pivot];
                for j in 0..self.width {
                    if !row[j].is_zero() {
                        v[j] -= &f * &row[j];
                    }
                }
            }
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(pivot) => {
                self.rows.push((pivot, v));
                true
            }
            None => false,
        }
    }
}

pub(crate) fn rank(rows: &[Vec<Rational>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut basis = RowBasis::new(first.len());
    rows.iter().filter(|r| basis.insert(r)).count()
}

/// Vertices (over all dual coordinates, dropped ones zero) and extreme rays.
#[derive(Clone, Debug)]
pub struct DualVertexSet {
    pub sense: Sense,
    pub vars: Vec<DualVar>,
    pub extra_rhs: Vec<Rational>,
    pub vertices: Vec<Vec<Rational>>,
    pub rays: Vec<Vec<Rational>>,
}

impl DualVertexSet {
    /// Constant term and `p` coefficients of the bound expression of `y`.
    pub fn objective_template(&self, y_full: &[Rational]) -> (Rational, Vec<(usize, Rational)>) {
        objective_template(self.sense, &self.vars, &self.extra_rhs, y_full)
    }

    /// Plain-text V-representation with one vertex or ray per line.
    pub fn v_representation(&self) -> String {
        let mut out = format!("V {} {}\n", self.vertices.len(), self.vars.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{}", v.iter().map(format_rational).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(out, "R {}", self.rays.len());
        for r in &self.rays {
            let _ = writeln!(out, "{}", r.iter().map(format_rational).collect::<Vec<_>>().join(" "));
        }
        out
    }

    /// Rays along which the dual objective can grow for some `p`.
    pub fn has_rays(&self) -> bool {
        !self.rays.is_empty()
    }
}

pub fn enumerate_vertices(dual: &DualSystem, options: &DdOptions) -> Result<DualVertexSet, PolytopeError> {
    let poly = enumerate_polyhedron(&dual.a, &dual.c, options)?;
    if poly.vertices.is_empty() {
        return Err(PolytopeError::EmptyPolytope);
    }
    Ok(DualVertexSet {
        sense: dual.sense,
        vars: dual.vars.clone(),
        extra_rhs: dual.extra_rhs.clone(),
        vertices: poly.vertices.iter().map(|v| dual.expand(v)).collect(),
        rays: poly.rays.iter().map(|r| dual.expand(r)).collect(),
    })
}

/// Checks feasibility and that the tight rows at each vertex have full rank.
pub fn verify_vertices(dual: &DualSystem, set: &DualVertexSet) -> bool {
    set.vertices.iter().all(|full| {
        let y: Vec<Rational> = dual.kept.iter().map(|&i| full[i].clone()).collect();
        let slack = dual.slack(&y);
        if slack.iter().any(|s| s.is_negative()) {
            return false;
        }
        let tight: Vec<Vec<Rational>> =
            dual.a.iter().zip(&slack).filter(|(_, s)| s.is_zero()).map(|(r, _)| r.clone()).collect();
        rank(&tight) == dual.dimension()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_response_space, DEFAULT_MAX_ROWS};
    use crate::constraints::{build_constraint_system, DEFAULT_MAX_CELLS};
    use crate::evaluator::build_objective;
    use crate::model::parse_graph;
    use crate::querylang::parse_query;

    fn lp(graph: &str, query: &str, sense: Sense) -> LinearProgram {
        let g = parse_graph(graph).unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let cs = build_constraint_system(&g, &s, DEFAULT_MAX_CELLS).unwrap();
        let obj = build_objective(&g, &s, &parse_query(query, &g).unwrap()).unwrap();
        assemble_primal(&cs, &obj, sense).unwrap()
    }

    #[test]
    fn ternary_exposure_dual_shape() {
        let lp = lp("var X:3\nvar Y:2\nedge X->Y\nconfound U {X, Y}", "P{Y(X=1)=1} - P{Y(X=0)=1}", Sense::Min);
        assert_eq!(lp.equality_rows(), 7);
        assert_eq!(lp.aleph, 24);
        let d = dualize(&lp);
        assert_eq!(d.vars.len(), 7);
        assert_eq!(d.a.len(), 24);
        assert_eq!(d.dimension(), 6);
        assert_eq!(d.vars[0], DualVar::Normalization);
        let set = enumerate_vertices(&d, &DdOptions::default()).unwrap();
        // Every ray lowers the dual objective on every distribution.
        for r in &set.rays {
            let (c, coefs) = set.objective_template(r);
            let best = coefs.iter().map(|(_, x)| x.clone()).fold(Rational::zero(), |a, b| a.max(b));
            assert!(!(c + best).is_positive());
        }
        assert!(verify_vertices(&d, &set));
    }

    #[test]
    fn two_instrument_dual_shape() {
        let lp = lp(
            "var Z1:2 left\nvar Z2:2 left\nvar X:2\nvar Y:2\nedge Z2->Z1\nedge Z1->X\nedge Z2->X\nedge X->Y\nconfound left\nconfound right",
            "P{Y(X=1)=1} - P{Y(X=0)=1}",
            Sense::Max,
        );
        let d = dualize(&lp);
        assert_eq!(d.vars.len(), 17);
        assert_eq!(d.a.len(), 64);
        assert_eq!(d.dimension(), 13);
    }

    #[test]
    fn dimension_mismatch() {
        let g = parse_graph("var X:2\nvar Y:2\nedge X->Y").unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let cs = build_constraint_system(&g, &s, DEFAULT_MAX_CELLS).unwrap();
        let obj = ObjectiveVector { alpha: vec![Rational::zero(); 3], support: 0 };
        assert!(matches!(assemble_primal(&cs, &obj, Sense::Min), Err(PolytopeError::DimensionMismatch { .. })));
    }
}
