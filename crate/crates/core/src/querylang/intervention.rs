use std::collections::{BTreeSet, HashMap};

use super::{InterventionValue, OutcomeTerm, QueryError};
use crate::model::{CausalGraph, VarId};

/// Path-indexed intervention table for one outcome term.
///
/// Columns are every directed path ending at the outcome (the trivial path
/// included). An entry `a[l][j]` can only be set when path `j` starts at `l`,
/// so each column carries at most one value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterventionMatrix {
    outcome: VarId,
    paths: Vec<Vec<VarId>>,
    column_of: HashMap<Vec<VarId>, usize>,
    values: Vec<Option<u32>>,
}

impl InterventionMatrix {
    pub fn outcome(&self) -> VarId {
        self.outcome
    }

    pub fn paths(&self) -> &[Vec<VarId>] {
        &self.paths
    }

    pub fn column(&self, path: &[VarId]) -> Option<usize> {
        self.column_of.get(path).copied()
    }

    /// Entry for row `var` at the column keyed by `path`.
    pub fn entry(&self, var: VarId, path: &[VarId]) -> Option<u32> {
        if path.first() != Some(&var) {
            return None;
        }
        self.column(path).and_then(|c| self.values[c])
    }

    pub fn value_at(&self, column: usize) -> Option<u32> {
        self.values[column]
    }

    /// Variables with at least one non-empty entry.
    pub fn intervened(&self) -> BTreeSet<VarId> {
        self.paths
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.is_some())
            .map(|(p, _)| p[0])
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    /// Whether any column extending `path` (i.e. `... -> path`) is set.
    pub fn any_set_through(&self, path: &[VarId]) -> bool {
        self.paths
            .iter()
            .zip(&self.values)
            .any(|(p, v)| v.is_some() && p.len() >= path.len() && p.ends_with(path))
    }

    /// Rows = variables of `g`, columns = path labels; `-` marks empty entries.
    pub fn render(&self, g: &CausalGraph) -> String {
        let labels: Vec<String> = self.paths.iter().map(|p| g.path_label(p)).collect();
        let mut out = format!("\t{}\n", labels.join("\t"));
        for v in 0..g.len() {
            out.push_str(g.name(v));
            for (c, p) in self.paths.iter().enumerate() {
                let cell = match (p[0] == v, self.values[c]) {
                    (true, Some(x)) => x.to_string(),
                    _ => "-".to_string(),
                };
                out.push('\t');
                out.push_str(&cell);
            }
            out.push('\n');
        }
        out
    }
}

/// Builds `A` for `term`. A fixed intervention `V=v` applies to every path
/// from `V` into the term's variable that does not pass through another
/// fixed variable of the same term; a nested term then overrides the
/// columns that run through its own variable.
pub fn build_intervention_matrix(
    term: &OutcomeTerm,
    g: &CausalGraph,
) -> Result<InterventionMatrix, QueryError> {
    let paths = g.paths_to(term.variable);
    let column_of: HashMap<Vec<VarId>, usize> =
        paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut m = InterventionMatrix {
        outcome: term.variable,
        values: vec![None; paths.len()],
        paths,
        column_of,
    };
    fill(&mut m, g, term, &[term.variable])?;
    Ok(m)
}

fn fill(
    m: &mut InterventionMatrix,
    g: &CausalGraph,
    term: &OutcomeTerm,
    suffix: &[VarId],
) -> Result<(), QueryError> {
    let ancestors = g.ancestors(term.variable);
    let fixed: BTreeSet<VarId> = term
        .interventions
        .iter()
        .filter(|i| matches!(i.value, InterventionValue::Fixed(_)))
        .map(|i| i.target)
        .collect();
    for i in &term.interventions {
        if !ancestors.contains(&i.target) {
            return Err(QueryError::PathNotInGraph {
                target: g.name(i.target).to_string(),
                outcome: g.name(term.variable).to_string(),
            });
        }
    }
    let unblocked = |start: VarId| -> Vec<Vec<VarId>> {
        g.paths_to(term.variable)
            .into_iter()
            .filter(|p| p[0] == start && !p[1..p.len() - 1].iter().any(|v| fixed.contains(v)))
            .map(|p| p.iter().chain(&suffix[1..]).copied().collect())
            .collect()
    };
    for i in &term.interventions {
        if let InterventionValue::Fixed(v) = i.value {
            for full in unblocked(i.target) {
                let col = m.column_of[&full];
                m.values[col] = Some(v);
            }
        }
    }
    for i in &term.interventions {
        if let InterventionValue::Nested(inner) = &i.value {
            for context in unblocked(i.target) {
                fill(m, g, inner, &context)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;
    use crate::querylang::{parse_query, EventKind};

    fn term(g: &CausalGraph, q: &str) -> OutcomeTerm {
        let q = parse_query(q, g).unwrap();
        match &q.terms[0].1.events[0].kind {
            EventKind::Potential(t) => t.clone(),
            EventKind::Factual => OutcomeTerm::natural(q.terms[0].1.events[0].variable),
        }
    }

    fn fig3() -> CausalGraph {
        parse_graph("var W1:2\nvar W2:2\nvar W3:2\nedge W1->W2->W3\nedge W1->W3\nconfound U {W2, W3}")
            .unwrap()
    }

    fn cells(m: &InterventionMatrix, g: &CausalGraph) -> Vec<(String, Option<u32>)> {
        m.paths().iter().enumerate().map(|(c, p)| (g.path_label(p), m.value_at(c))).collect()
    }

    #[test]
    fn natural_direct_effect_matrix() {
        let g = fig3();
        let m = build_intervention_matrix(&term(&g, "P{W3(W2(W1=0), W1=1)=1}"), &g).unwrap();
        assert_eq!(
            cells(&m, &g),
            vec![
                ("W1->W2->W3".into(), Some(0)),
                ("W1->W3".into(), Some(1)),
                ("W2->W3".into(), None),
                ("W3".into(), None),
            ]
        );
    }

    #[test]
    fn controlled_direct_effect_matrix() {
        let g = fig3();
        let m = build_intervention_matrix(&term(&g, "P{W3(W2=0, W1=1)=1}"), &g).unwrap();
        assert_eq!(
            cells(&m, &g),
            vec![
                ("W1->W2->W3".into(), None),
                ("W1->W3".into(), Some(1)),
                ("W2->W3".into(), Some(0)),
                ("W3".into(), None),
            ]
        );
        assert_eq!(m.entry(0, &[0, 2]), Some(1));
        assert_eq!(m.entry(1, &[0, 2]), None);
    }

    #[test]
    fn empty_matrix_for_natural_term() {
        let g = fig3();
        let m = build_intervention_matrix(&OutcomeTerm::natural(2), &g).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.paths().len(), 4);
    }

    #[test]
    fn rejects_non_ancestor() {
        let g = fig3();
        let t = OutcomeTerm::fixed(0, &[(2, 1)]);
        assert!(matches!(
            build_intervention_matrix(&t, &g),
            Err(QueryError::PathNotInGraph { .. })
        ));
    }
}
