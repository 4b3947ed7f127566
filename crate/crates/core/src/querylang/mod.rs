//! Counterfactual query language: linear combinations of atomic queries,
//! each a conjunction of (possibly nested) potential-outcome and factual events.

mod intervention;
mod parser;

pub use intervention::{build_intervention_matrix, InterventionMatrix};
pub use parser::{parse_constraint, parse_query};

use std::fmt;

use thiserror::Error;

use crate::model::{CausalGraph, VarId};
use crate::rational::{format_rational, Rational};
use num_traits::{One, Signed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("`{target}` has no directed path to `{outcome}`")]
    PathNotInGraph { target: String, outcome: String },
    #[error("query has no terms")]
    Empty,
    #[error("constraint involves left variable `{0}`")]
    ConstraintOnLeft(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum InterventionValue {
    Fixed(u32),
    Nested(OutcomeTerm),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Intervention {
    pub target: VarId,
    pub value: InterventionValue,
}

/// `variable(interventions...)`; nested terms bottom out at fixed values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeTerm {
    pub variable: VarId,
    pub interventions: Vec<Intervention>,
}

impl OutcomeTerm {
    pub fn natural(variable: VarId) -> Self {
        OutcomeTerm { variable, interventions: Vec::new() }
    }

    pub fn fixed(variable: VarId, interventions: &[(VarId, u32)]) -> Self {
        OutcomeTerm {
            variable,
            interventions: interventions
                .iter()
                .map(|&(target, v)| Intervention { target, value: InterventionValue::Fixed(v) })
                .collect(),
        }
    }

    /// Every variable mentioned in this term, outcome included.
    pub fn variables(&self) -> Vec<VarId> {
        let mut out = vec![self.variable];
        for i in &self.interventions {
            match &i.value {
                InterventionValue::Fixed(_) => out.push(i.target),
                InterventionValue::Nested(t) => out.extend(t.variables()),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Potential(OutcomeTerm),
    Factual,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeEvent {
    pub variable: VarId,
    pub value: u32,
    pub kind: EventKind,
}

/// Conjunction of events: `P{e1, e2, ...}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomicQuery {
    pub events: Vec<OutcomeEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryExpr {
    pub terms: Vec<(Rational, AtomicQuery)>,
}

impl QueryExpr {
    pub fn outcome_variables(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> =
            self.terms.iter().flat_map(|(_, a)| a.events.iter().map(|e| e.variable)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn display<'a>(&'a self, g: &'a CausalGraph) -> QueryDisplay<'a> {
        QueryDisplay { query: self, graph: g }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        })
    }
}

/// One side of a counterfactual inequality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CounterfactualOperand {
    Term(OutcomeTerm),
    Constant(u32),
}

/// Linear combination of atomic queries plus a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub terms: Vec<(Rational, AtomicQuery)>,
    pub constant: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UserConstraint {
    /// `Y2(Y=1) >= Y2(Y=0)`: holds for every unit.
    Counterfactual {
        lhs: OutcomeTerm,
        relation: Relation,
        rhs: CounterfactualOperand,
    },
    /// `P{...} - P{...} >= 1/10`: a linear row over q.
    Linear {
        lhs: LinearForm,
        relation: Relation,
        rhs: LinearForm,
    },
}

pub struct QueryDisplay<'a> {
    query: &'a QueryExpr,
    graph: &'a CausalGraph,
}

pub(crate) fn write_term(f: &mut impl fmt::Write, g: &CausalGraph, t: &OutcomeTerm) -> fmt::Result {
    write!(f, "{}(", g.name(t.variable))?;
    for (k, i) in t.interventions.iter().enumerate() {
        if k > 0 {
            f.write_str(", ")?;
        }
        match &i.value {
            InterventionValue::Fixed(v) => write!(f, "{}={}", g.name(i.target), v)?,
            InterventionValue::Nested(inner) => write_term(f, g, inner)?,
        }
    }
    f.write_str(")")
}

pub(crate) fn write_atomic(f: &mut impl fmt::Write, g: &CausalGraph, a: &AtomicQuery) -> fmt::Result {
    f.write_str("P{")?;
    for (k, e) in a.events.iter().enumerate() {
        if k > 0 {
            f.write_str(", ")?;
        }
        match &e.kind {
            EventKind::Factual => write!(f, "{}={}", g.name(e.variable), e.value)?,
            EventKind::Potential(t) => {
                write_term(f, g, t)?;
                write!(f, "={}", e.value)?;
            }
        }
    }
    f.write_str("}")
}

pub(crate) fn write_linear(
    f: &mut impl fmt::Write,
    g: &CausalGraph,
    terms: &[(Rational, AtomicQuery)],
) -> fmt::Result {
    for (k, (c, a)) in terms.iter().enumerate() {
        let magnitude = c.abs();
        match (k, c.is_negative()) {
            (0, true) => f.write_str("-")?,
            (0, false) => {}
            (_, true) => f.write_str(" - ")?,
            (_, false) => f.write_str(" + ")?,
        }
        if !magnitude.is_one() {
            write!(f, "{}*", format_rational(&magnitude))?;
        }
        write_atomic(f, g, a)?;
    }
    Ok(())
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_linear(f, self.graph, &self.query.terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;

    #[test]
    fn prints_nested_terms() {
        let g = parse_graph("var W1:2\nvar W2:2\nvar W3:2\nedge W1->W2->W3\nedge W1->W3").unwrap();
        let q = parse_query("P{W3(W2(W1=0), W1=1)=1}", &g).unwrap();
        assert_eq!(q.display(&g).to_string(), "P{W3(W2(W1=0), W1=1)=1}");
    }
}
