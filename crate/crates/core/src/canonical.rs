//! Canonical response-function variables.
//!
//! A response index `r` of a variable `W` is read as a number in base `c_W`:
//! digit `k` is the value `W` takes under the `k`-th parent assignment, with
//! parent assignments enumerated in mixed radix and the first parent varying
//! fastest.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{CausalGraph, Side, VarId};
use crate::querylang::{CounterfactualOperand, InterventionValue, OutcomeTerm, Relation, UserConstraint};

pub const DEFAULT_MAX_ROWS: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("response table for `{variable}` would need more than {cap} rows")]
    Overflow { variable: String, cap: u64 },
    #[error("constraints exclude every response function of `{0}`")]
    EmptyResponseSpace(String),
    #[error("right response space has more than {0} joint values")]
    SpaceOverflow(u64),
}

/// Every function from parent assignments to values of one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseFunctionTable {
    variable: VarId,
    cardinality: u32,
    parents: Vec<VarId>,
    parent_cards: Vec<u32>,
    assignments: u64,
    rows: u64,
}

impl ResponseFunctionTable {
    pub fn variable(&self) -> VarId {
        self.variable
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    /// Number of parent assignments, `|ν(Pa_W)|`.
    pub fn assignment_count(&self) -> u64 {
        self.assignments
    }

    pub fn row_count(&self) -> u64 {
        self.rows
    }

    /// Output of response function `r` under parent assignment index `k`.
    pub fn value(&self, r: u64, k: u64) -> u32 {
        debug_assert!(r < self.rows && k < self.assignments);
        let c = self.cardinality as u64;
        ((r / c.pow(k as u32)) % c) as u32
    }

    /// Mixed-radix index of a parent assignment, first parent least significant.
    pub fn assignment_index(&self, parent_values: &[u32]) -> u64 {
        let mut index = 0u64;
        let mut weight = 1u64;
        for (v, c) in parent_values.iter().zip(&self.parent_cards) {
            index += *v as u64 * weight;
            weight *= *c as u64;
        }
        index
    }

    /// Inverse of [`assignment_index`](Self::assignment_index).
    pub fn assignment(&self, mut k: u64) -> Vec<u32> {
        self.parent_cards
            .iter()
            .map(|&c| {
                let v = (k % c as u64) as u32;
                k /= c as u64;
                v
            })
            .collect()
    }

    /// The function table of row `r`, one output per parent assignment.
    pub fn decode(&self, r: u64) -> Vec<u32> {
        (0..self.assignments).map(|k| self.value(r, k)).collect()
    }

    pub fn encode(&self, outputs: &[u32]) -> u64 {
        let c = self.cardinality as u64;
        outputs.iter().rev().fold(0u64, |acc, &v| acc * c + v as u64)
    }

    /// `rowIndex<TAB>parentAssignment<TAB>value`, one line per entry.
    pub fn to_tsv(&self, g: &CausalGraph) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.parents.iter().map(|&p| g.name(p)).collect();
        let _ = writeln!(out, "# {} | {}", g.name(self.variable), header.join(","));
        for r in 0..self.rows {
            for k in 0..self.assignments {
                let a: Vec<String> = self.assignment(k).iter().map(u32::to_string).collect();
                let _ = writeln!(out, "{}\t{}\t{}", r, a.join(","), self.value(r, k));
            }
        }
        out
    }
}

/// Builds the table for `variable`, refusing tables with more than `cap` rows.
pub fn enumerate_response_table(
    g: &CausalGraph,
    variable: VarId,
    cap: u64,
) -> Result<ResponseFunctionTable, CanonicalError> {
    let overflow = || CanonicalError::Overflow { variable: g.name(variable).to_string(), cap };
    let parents = g.parents(variable).to_vec();
    let parent_cards: Vec<u32> = parents.iter().map(|&p| g.cardinality(p)).collect();
    let assignments = parent_cards
        .iter()
        .try_fold(1u64, |acc, &c| acc.checked_mul(c as u64))
        .ok_or_else(overflow)?;
    let exponent = u32::try_from(assignments).map_err(|_| overflow())?;
    let rows = (g.cardinality(variable) as u64).checked_pow(exponent).ok_or_else(overflow)?;
    if rows > cap {
        return Err(overflow());
    }
    Ok(ResponseFunctionTable {
        variable,
        cardinality: g.cardinality(variable),
        parents,
        parent_cards,
        assignments,
        rows,
    })
}

/// Response tables for every variable plus the flattened index over the
/// right side's joint response values.
#[derive(Clone, Debug)]
pub struct ResponseSpace {
    tables: Vec<ResponseFunctionTable>,
    /// Surviving response indices per variable, ascending.
    allowed: Vec<Vec<u64>>,
    right: Vec<VarId>,
    /// Mixed-radix weights over `right`, first variable slowest.
    strides: Vec<u64>,
    aleph: u64,
    exclusions: BTreeSet<(VarId, u64)>,
    deferred: Vec<UserConstraint>,
}

impl ResponseSpace {
    pub fn tables(&self) -> &[ResponseFunctionTable] {
        &self.tables
    }

    pub fn table(&self, v: VarId) -> &ResponseFunctionTable {
        &self.tables[v]
    }

    pub fn allowed(&self, v: VarId) -> &[u64] {
        &self.allowed[v]
    }

    /// `ℵ_ℛ`, the number of joint right response values.
    pub fn aleph(&self) -> usize {
        self.aleph as usize
    }

    pub fn right_variables(&self) -> &[VarId] {
        &self.right
    }

    pub fn exclusions(&self) -> &BTreeSet<(VarId, u64)> {
        &self.exclusions
    }

    /// User constraints that did not compile to exclusions.
    pub fn deferred(&self) -> &[UserConstraint] {
        &self.deferred
    }

    /// Writes the response index of each right variable for `gamma` into `r`
    /// (a vector over all variables; left entries are left untouched).
    pub fn fill_right(&self, gamma: usize, r: &mut [u64]) {
        let mut rest = gamma as u64;
        for (i, &v) in self.right.iter().enumerate() {
            let digit = rest / self.strides[i];
            rest %= self.strides[i];
            r[v] = self.allowed[v][digit as usize];
        }
    }

    /// Response indices of the right variables for `gamma`, in right order.
    pub fn right_response(&self, gamma: usize) -> Vec<u64> {
        let mut full = vec![0u64; self.tables.len()];
        self.fill_right(gamma, &mut full);
        self.right.iter().map(|&v| full[v]).collect()
    }

    /// Inverse of [`right_response`](Self::right_response).
    pub fn gamma_of(&self, response: &[u64]) -> Option<usize> {
        let mut gamma = 0u64;
        for (i, &v) in self.right.iter().enumerate() {
            let pos = self.allowed[v].binary_search(&response[i]).ok()?;
            gamma += pos as u64 * self.strides[i];
        }
        Some(gamma as usize)
    }

    /// Number of joint left response values, used by the full-R checks.
    pub fn left_response_count(&self, g: &CausalGraph) -> u64 {
        g.left_ids().map(|v| self.allowed[v].len() as u64).product()
    }

    /// Writes the `index`-th joint left response value into `r`.
    pub fn fill_left(&self, g: &CausalGraph, mut index: u64, r: &mut [u64]) {
        for v in g.left_ids().rev() {
            let n = self.allowed[v].len() as u64;
            r[v] = self.allowed[v][(index % n) as usize];
            index /= n;
        }
    }

    /// Label such as `q_{3,5}` listing each right variable's response index.
    pub fn q_label(&self, gamma: usize) -> String {
        let parts: Vec<String> = self.right_response(gamma).iter().map(u64::to_string).collect();
        format!("q_{}", parts.join(","))
    }
}

/// Enumerates all tables and compiles per-variable counterfactual
/// constraints into exclusions; every other constraint is deferred.
pub fn build_response_space(
    g: &CausalGraph,
    constraints: &[UserConstraint],
    max_rows: u64,
) -> Result<ResponseSpace, CanonicalError> {
    let tables = (0..g.len())
        .map(|v| enumerate_response_table(g, v, max_rows))
        .collect::<Result<Vec<_>, _>>()?;
    let mut exclusions = BTreeSet::new();
    let mut deferred = Vec::new();
    for c in constraints {
        match functional_target(g, c) {
            Some(v) => {
                for r in 0..tables[v].rows {
                    if violates(&tables[v], c, r) {
                        exclusions.insert((v, r));
                    }
                }
            }
            None => deferred.push(c.clone()),
        }
    }
    let allowed: Vec<Vec<u64>> = tables
        .iter()
        .map(|t| (0..t.rows).filter(|&r| !exclusions.contains(&(t.variable, r))).collect())
        .collect();
    for (v, rows) in allowed.iter().enumerate() {
        if rows.is_empty() {
            return Err(CanonicalError::EmptyResponseSpace(g.name(v).to_string()));
        }
    }
    let right: Vec<VarId> = g.right_ids().collect();
    let mut strides = vec![1u64; right.len()];
    let mut aleph = 1u64;
    for (i, &v) in right.iter().enumerate().rev() {
        strides[i] = aleph;
        aleph = aleph
            .checked_mul(allowed[v].len() as u64)
            .filter(|&a| a <= max_rows)
            .ok_or(CanonicalError::SpaceOverflow(max_rows))?;
    }
    Ok(ResponseSpace { tables, allowed, right, strides, aleph, exclusions, deferred })
}

/// The variable a counterfactual constraint restricts, when it only fixes
/// parents of that variable and therefore depends on its response row alone.
fn functional_target(g: &CausalGraph, c: &UserConstraint) -> Option<VarId> {
    let UserConstraint::Counterfactual { lhs, rhs, .. } = c else {
        return None;
    };
    let v = lhs.variable;
    let local = |t: &OutcomeTerm| {
        t.variable == v
            && t.interventions.iter().all(|i| {
                matches!(i.value, InterventionValue::Fixed(_)) && g.parents(v).contains(&i.target)
            })
    };
    let rhs_ok = match rhs {
        CounterfactualOperand::Term(t) => local(t),
        CounterfactualOperand::Constant(_) => true,
    };
    (g.side(v) == Side::Right && local(lhs) && rhs_ok).then_some(v)
}

/// Whether row `r` breaks the constraint for some assignment of the parents
/// the constraint leaves free.
fn violates(table: &ResponseFunctionTable, c: &UserConstraint, r: u64) -> bool {
    let UserConstraint::Counterfactual { lhs, relation, rhs } = c else {
        return false;
    };
    let output = |t: &OutcomeTerm, base: &[u32]| {
        let mut a = base.to_vec();
        for i in &t.interventions {
            if let InterventionValue::Fixed(x) = i.value {
                let pos = table.parents.iter().position(|&p| p == i.target).expect("parent");
                a[pos] = x;
            }
        }
        table.value(r, table.assignment_index(&a))
    };
    (0..table.assignments).any(|k| {
        let base = table.assignment(k);
        let left = output(lhs, &base);
        let right = match rhs {
            CounterfactualOperand::Term(t) => output(t, &base),
            CounterfactualOperand::Constant(x) => *x,
        };
        !relation_holds(*relation, left, right)
    })
}

pub(crate) fn relation_holds(rel: Relation, a: u32, b: u32) -> bool {
    match rel {
        Relation::Ge => a >= b,
        Relation::Le => a <= b,
        Relation::Eq => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;
    use crate::querylang::parse_constraint;

    #[test]
    fn ternary_parent_table() {
        let g = parse_graph("var X:3\nvar Y:2\nedge X->Y").unwrap();
        let t = enumerate_response_table(&g, 1, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(t.row_count(), 8);
        assert_eq!(t.decode(5), vec![1, 0, 1]);
        let x = enumerate_response_table(&g, 0, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(x.row_count(), 3);
        assert!((0..3).all(|r| x.value(r, 0) == r as u32));
    }

    #[test]
    fn two_binary_parents() {
        let g = parse_graph("var W1:2\nvar W2:2\nvar W3:2\nedge W1->W2->W3\nedge W1->W3").unwrap();
        let t = enumerate_response_table(&g, 2, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(t.row_count(), 16);
        assert_eq!(t.assignment_index(&[1, 0]), 1);
        assert_eq!(t.assignment_index(&[0, 1]), 2);
    }

    #[test]
    fn overflow_cap() {
        let g = parse_graph("var A:4\nvar B:4\nvar C:3\nedge A->C\nedge B->C").unwrap();
        assert!(matches!(enumerate_response_table(&g, 2, 1 << 20), Err(CanonicalError::Overflow { .. })));
    }

    #[test]
    fn monotonicity_excludes_one_row() {
        let g = parse_graph("var X:2 left\nvar Y:2\nvar Y2:2\nedge X->Y->Y2\nunobserved Y").unwrap();
        let c = parse_constraint("Y2(Y=1) >= Y2(Y=0)", &g).unwrap();
        let s = build_response_space(&g, &[c], DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(s.allowed(2).len(), 3);
        assert_eq!(s.aleph(), 12);
        assert!(s.exclusions().contains(&(2, 1)));
        assert!(s.deferred().is_empty());
    }

    #[test]
    fn unconstrained_sizes() {
        let g = parse_graph(
            "var Z1:2 left\nvar Z2:2 left\nvar X:2\nvar Y:2\nedge Z2->Z1\nedge Z1->X\nedge Z2->X\nedge X->Y",
        )
        .unwrap();
        assert_eq!(build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap().aleph(), 64);
        let g = parse_graph("var X:3\nvar Y:2\nedge X->Y").unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(s.aleph(), 24);
        assert_eq!(s.right_response(9), vec![1, 1]);
        assert_eq!(s.gamma_of(&[2, 7]), Some(23));
    }

    #[test]
    fn empty_space() {
        let g = parse_graph("var X:2\nvar Y:2\nedge X->Y").unwrap();
        let cs = [
            parse_constraint("Y(X=1) >= 1", &g).unwrap(),
            parse_constraint("Y(X=1) <= 0", &g).unwrap(),
        ];
        assert!(matches!(
            build_response_space(&g, &cs, DEFAULT_MAX_ROWS),
            Err(CanonicalError::EmptyResponseSpace(_))
        ));
    }
}
