//! Interventional evaluation `h` over intervention matrices and the
//! conversion of a query into its objective vector over `q`.

use std::collections::HashSet;

use num_traits::Zero;

use crate::canonical::{relation_holds, ResponseSpace};
use crate::constraints::ExtraRow;
use crate::model::{CausalGraph, VarId};
use crate::querylang::{
    build_intervention_matrix, AtomicQuery, CounterfactualOperand, EventKind, InterventionMatrix,
    LinearForm, OutcomeTerm, QueryError, QueryExpr, Relation, UserConstraint,
};
use crate::rational::Rational;

/// `α` over the right response index, with its number of nonzero entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectiveVector {
    pub alpha: Vec<Rational>,
    pub support: usize,
}

impl ObjectiveVector {
    fn new(alpha: Vec<Rational>) -> Self {
        let support = alpha.iter().filter(|a| !a.is_zero()).count();
        ObjectiveVector { alpha, support }
    }

    pub fn dot(&self, q: &[Rational]) -> Rational {
        self.alpha.iter().zip(q).map(|(a, x)| a * x).sum()
    }
}

/// An intervention matrix with the set of path suffixes that some
/// intervention lies behind. Paths outside that set evaluate naturally.
#[derive(Clone, Debug)]
pub struct CompiledTerm {
    pub matrix: InterventionMatrix,
    active: HashSet<Vec<VarId>>,
}

impl CompiledTerm {
    pub fn new(term: &OutcomeTerm, g: &CausalGraph) -> Result<Self, QueryError> {
        let matrix = build_intervention_matrix(term, g)?;
        let mut active = HashSet::new();
        for (c, path) in matrix.paths().iter().enumerate() {
            if matrix.value_at(c).is_some() {
                for start in 0..path.len() {
                    active.insert(path[start..].to_vec());
                }
            }
        }
        Ok(CompiledTerm { matrix, active })
    }
}

/// One full response vector (entries for every variable) with lazily
/// computed natural values.
pub struct Unit<'a> {
    g: &'a CausalGraph,
    space: &'a ResponseSpace,
    r: &'a [u64],
    natural: Vec<Option<u32>>,
    scratch: Vec<u32>,
}

impl<'a> Unit<'a> {
    pub fn new(g: &'a CausalGraph, space: &'a ResponseSpace, r: &'a [u64]) -> Self {
        Unit { g, space, r, natural: vec![None; g.len()], scratch: Vec::new() }
    }

    /// `g*_W(r)`: the value with no intervention anywhere.
    pub fn natural(&mut self, v: VarId) -> u32 {
        if let Some(x) = self.natural[v] {
            return x;
        }
        let parents = self.g.parents(v);
        let mut args = Vec::with_capacity(parents.len());
        for &p in parents {
            args.push(self.natural(p));
        }
        let t = self.space.table(v);
        let x = t.value(self.r[v], t.assignment_index(&args));
        self.natural[v] = Some(x);
        x
    }

    /// `h^A(r, path)`: the matrix entry when set, otherwise the response
    /// function applied to the parents evaluated along the extended paths.
    pub fn interventional(&mut self, term: &CompiledTerm, path: &mut Vec<VarId>) -> u32 {
        let head = path[0];
        if let Some(x) = term.matrix.entry(head, path) {
            return x;
        }
        if !term.active.contains(path.as_slice()) {
            return self.natural(head);
        }
        let parents = self.g.parents(head);
        let mut args = Vec::with_capacity(parents.len());
        for &p in parents {
            path.insert(0, p);
            args.push(self.interventional(term, path));
            path.remove(0);
        }
        self.scratch = args;
        let t = self.space.table(head);
        t.value(self.r[head], t.assignment_index(&self.scratch))
    }

    pub fn evaluate(&mut self, term: &CompiledTerm) -> u32 {
        self.interventional(term, &mut vec![term.matrix.outcome()])
    }
}

/// `h` for a single path, as a free function.
pub fn evaluate_interventional(
    g: &CausalGraph,
    space: &ResponseSpace,
    term: &CompiledTerm,
    r: &[u64],
    path: &[VarId],
) -> u32 {
    Unit::new(g, space, r).interventional(term, &mut path.to_vec())
}

enum CompiledEvent {
    Potential(CompiledTerm, u32),
    Factual(VarId, u32),
}

struct CompiledAtomic {
    coefficient: Rational,
    events: Vec<CompiledEvent>,
}

fn compile_terms(
    g: &CausalGraph,
    terms: &[(Rational, AtomicQuery)],
) -> Result<Vec<CompiledAtomic>, QueryError> {
    terms
        .iter()
        .map(|(c, a)| {
            let events = a
                .events
                .iter()
                .map(|e| match &e.kind {
                    EventKind::Potential(t) => Ok(CompiledEvent::Potential(CompiledTerm::new(t, g)?, e.value)),
                    EventKind::Factual => Ok(CompiledEvent::Factual(e.variable, e.value)),
                })
                .collect::<Result<Vec<_>, QueryError>>()?;
            Ok(CompiledAtomic { coefficient: c.clone(), events })
        })
        .collect()
}

fn holds(unit: &mut Unit<'_>, atomic: &CompiledAtomic) -> bool {
    atomic.events.iter().all(|e| match e {
        CompiledEvent::Potential(t, v) => unit.evaluate(t) == *v,
        CompiledEvent::Factual(var, v) => unit.natural(*var) == *v,
    })
}

fn objective_with_left(
    g: &CausalGraph,
    space: &ResponseSpace,
    terms: &[(Rational, AtomicQuery)],
    left: Option<u64>,
) -> Result<ObjectiveVector, QueryError> {
    let compiled = compile_terms(g, terms)?;
    let mut alpha = vec![Rational::zero(); space.aleph()];
    let mut r = vec![0u64; g.len()];
    if let Some(index) = left {
        space.fill_left(g, index, &mut r);
    }
    for (gamma, a) in alpha.iter_mut().enumerate() {
        space.fill_right(gamma, &mut r);
        let mut unit = Unit::new(g, space, &r);
        for atomic in &compiled {
            if holds(&mut unit, atomic) {
                *a += &atomic.coefficient;
            }
        }
    }
    Ok(ObjectiveVector::new(alpha))
}

/// The objective `α` over the right response index. Left responses are never
/// consulted for queries that pass validation.
pub fn build_objective(
    g: &CausalGraph,
    space: &ResponseSpace,
    q: &QueryExpr,
) -> Result<ObjectiveVector, QueryError> {
    objective_with_left(g, space, &q.terms, None)
}

/// The objective computed with the left responses fixed to the
/// `left_index`-th joint left response value.
pub fn build_objective_with_left(
    g: &CausalGraph,
    space: &ResponseSpace,
    q: &QueryExpr,
    left_index: u64,
) -> Result<ObjectiveVector, QueryError> {
    objective_with_left(g, space, &q.terms, Some(left_index))
}

fn linear_alpha(g: &CausalGraph, space: &ResponseSpace, f: &LinearForm) -> Result<Vec<Rational>, QueryError> {
    if f.terms.is_empty() {
        return Ok(vec![Rational::zero(); space.aleph()]);
    }
    Ok(objective_with_left(g, space, &f.terms, None)?.alpha)
}

/// Compiles the constraints that did not become exclusions into LP rows.
/// A unit-level inequality forbids every right response value that breaks
/// it for some left response value.
pub fn compile_extra_rows(
    g: &CausalGraph,
    space: &ResponseSpace,
    constraints: &[UserConstraint],
) -> Result<Vec<ExtraRow>, QueryError> {
    let mut rows = Vec::new();
    for c in constraints {
        match c {
            UserConstraint::Linear { lhs, relation, rhs } => {
                let a = linear_alpha(g, space, lhs)?;
                let b = linear_alpha(g, space, rhs)?;
                rows.push(ExtraRow {
                    coefficients: a.iter().zip(&b).map(|(x, y)| x - y).collect(),
                    relation: *relation,
                    rhs: &rhs.constant - &lhs.constant,
                });
            }
            UserConstraint::Counterfactual { lhs, relation, rhs } => {
                let left = CompiledTerm::new(lhs, g)?;
                let right = match rhs {
                    CounterfactualOperand::Term(t) => Some(CompiledTerm::new(t, g)?),
                    CounterfactualOperand::Constant(_) => None,
                };
                let mut coefficients = vec![Rational::zero(); space.aleph()];
                let mut any = false;
                let mut r = vec![0u64; g.len()];
                for (gamma, slot) in coefficients.iter_mut().enumerate() {
                    space.fill_right(gamma, &mut r);
                    let broken = (0..space.left_response_count(g)).any(|li| {
                        space.fill_left(g, li, &mut r);
                        let mut unit = Unit::new(g, space, &r);
                        let a = unit.evaluate(&left);
                        let b = match (&right, rhs) {
                            (Some(t), _) => unit.evaluate(t),
                            (None, CounterfactualOperand::Constant(x)) => *x,
                            (None, CounterfactualOperand::Term(_)) => unreachable!(),
                        };
                        !relation_holds(*relation, a, b)
                    });
                    if broken {
                        *slot = Rational::from_integer(1.into());
                        any = true;
                    }
                }
                if any {
                    rows.push(ExtraRow { coefficients, relation: Relation::Eq, rhs: Rational::zero() });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_response_space, DEFAULT_MAX_ROWS};
    use crate::model::parse_graph;
    use crate::querylang::{parse_constraint, parse_query};
    use crate::rational::int;

    fn fig3() -> (CausalGraph, ResponseSpace) {
        let g = parse_graph("var W1:2\nvar W2:2\nvar W3:2\nedge W1->W2->W3\nedge W1->W3\nconfound U {W2, W3}")
            .unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        (g, s)
    }

    fn term(g: &CausalGraph, text: &str) -> CompiledTerm {
        let q = parse_query(text, g).unwrap();
        let EventKind::Potential(t) = &q.terms[0].1.events[0].kind else { panic!() };
        CompiledTerm::new(t, g).unwrap()
    }

    #[test]
    fn nested_evaluation_matches_formula() {
        let (g, s) = fig3();
        let t = term(&g, "P{W3(W2(W1=0), W1=1)=1}");
        for r1 in 0..2 {
            for r2 in 0..4 {
                for r3 in 0..16 {
                    let r = [r1, r2, r3];
                    let w2 = s.table(1).value(r2, 0);
                    let expected = s.table(2).value(r3, s.table(2).assignment_index(&[1, w2]));
                    assert_eq!(evaluate_interventional(&g, &s, &t, &r, &[2]), expected);
                }
            }
        }
    }

    #[test]
    fn controlled_evaluation_matches_formula() {
        let (g, s) = fig3();
        let t = term(&g, "P{W3(W2=0, W1=1)=1}");
        for r3 in 0..16 {
            let expected = s.table(2).value(r3, s.table(2).assignment_index(&[1, 0]));
            assert_eq!(evaluate_interventional(&g, &s, &t, &[0, 3, r3], &[2]), expected);
        }
    }

    #[test]
    fn empty_matrix_is_natural() {
        let (g, s) = fig3();
        let t = CompiledTerm::new(&OutcomeTerm::natural(2), &g).unwrap();
        for r2 in 0..4 {
            for r3 in 0..16 {
                let r = [1, r2, r3];
                let natural = crate::constraints::evaluate_factual(&g, &s, &[], &r, 2);
                assert_eq!(evaluate_interventional(&g, &s, &t, &r, &[2]), natural);
            }
        }
    }

    #[test]
    fn ternary_exposure_objectives() {
        let g = parse_graph("var X:3\nvar Y:2\nedge X->Y\nconfound U {X, Y}").unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let a = build_objective(&g, &s, &parse_query("P{Y(X=0)=1}", &g).unwrap()).unwrap();
        assert_eq!(a.support, 12);
        for gamma in 0..24 {
            let j = s.right_response(gamma)[1];
            assert_eq!(a.alpha[gamma], int((j % 2) as i64));
        }
        let rd = build_objective(&g, &s, &parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap()).unwrap();
        for gamma in 0..24 {
            let expected = match s.right_response(gamma)[1] {
                2 | 6 => 1,
                1 | 5 => -1,
                _ => 0,
            };
            assert_eq!(rd.alpha[gamma], int(expected));
        }
    }

    #[test]
    fn two_instrument_support() {
        let g = parse_graph(
            "var Z1:2 left\nvar Z2:2 left\nvar X:2\nvar Y:2\nedge Z2->Z1\nedge Z1->X\nedge Z2->X\nedge X->Y",
        )
        .unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let q = parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap();
        assert_eq!(build_objective(&g, &s, &q).unwrap().support, 32);
    }

    #[test]
    fn deferred_constraint_rows() {
        let g = parse_graph("var X:2\nvar Y:2\nedge X->Y").unwrap();
        let c = parse_constraint("P{Y(X=1)=1} >= P{Y(X=0)=1}", &g).unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let rows = compile_extra_rows(&g, &s, &[c]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rhs, int(0));
        assert_eq!(rows[0].coefficients.iter().filter(|c| !c.is_zero()).count(), 4);

        let g = parse_graph("var X:2\nvar Y:2\nvar Z:2\nedge X->Y->Z").unwrap();
        let c = parse_constraint("Z(X=1) >= Z(X=0)", &g).unwrap();
        let s = build_response_space(&g, std::slice::from_ref(&c), DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(s.deferred().len(), 1);
        let rows = compile_extra_rows(&g, &s, &[c]).unwrap();
        assert_eq!(rows[0].relation, Relation::Eq);
        // Broken iff Y responds to X and Z reverses that response: two (rY, rZ) pairs per rX.
        let broken = rows[0].coefficients.iter().filter(|c| !c.is_zero()).count();
        assert_eq!(broken, 4);
    }
}
