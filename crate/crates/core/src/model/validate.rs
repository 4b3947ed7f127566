use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CausalGraph, ModelError, Side, VarId};
use crate::querylang::{build_intervention_matrix, EventKind, InterventionMatrix, QueryError, QueryExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tightness {
    /// Every nonempty side has a confounder covering it: bounds are tight.
    Tight,
    /// Bounds are valid but may not be the narrowest possible.
    ValidOnly,
}

/// Soft findings never block compilation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Finding {
    SideNotFullyConfounded { side: Side },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::SideNotFullyConfounded { side } => write!(
                f,
                "no declared confounder spans the whole {side} side; bounds are valid but not guaranteed tight"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<ModelError>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn tightness(&self) -> Tightness {
        if self.findings.is_empty() {
            Tightness::Tight
        } else {
            Tightness::ValidOnly
        }
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.findings.extend(other.findings);
    }
}

/// Hard checks: acyclicity, unobserved left variables, no right-to-left
/// edge, no confounder spanning both sides. Soft check: each side with two
/// or more variables is covered by a single declared confounder.
pub fn validate_graph(g: &CausalGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(cycle) = g.topological_order() {
        report.errors.push(ModelError::Cycle(cycle.iter().map(|&v| g.name(v).to_string()).collect()));
    }
    for v in g.left_ids() {
        if !g.variable(v).observed {
            report.errors.push(ModelError::UnobservedLeft(g.name(v).to_string()));
        }
    }
    for (a, b) in g.edges() {
        if g.side(a) == Side::Right && g.side(b) == Side::Left {
            report.errors.push(ModelError::CrossSideEdge {
                from: g.name(a).to_string(),
                to: g.name(b).to_string(),
            });
        }
    }
    for c in g.confounders() {
        let sides: BTreeSet<Side> = c.children.iter().map(|&v| g.side(v)).collect();
        if sides.len() > 1 {
            report.errors.push(ModelError::CrossSideConfounder(c.name.clone()));
        }
    }
    for (side, ids) in [(Side::Left, g.left_ids()), (Side::Right, g.right_ids())] {
        // A lone variable's own response variable already spans its side.
        if ids.len() <= 1 {
            continue;
        }
        let whole: BTreeSet<VarId> = ids.collect();
        if !g.confounders().iter().any(|c| c.children == whole) {
            report.findings.push(Finding::SideNotFullyConfounded { side });
        }
    }
    report
}

/// Checks that every outcome is on the right side, and when the left side is
/// nonempty that interventions shield every outcome from the left side.
pub fn validate_query_against_graph(
    g: &CausalGraph,
    q: &QueryExpr,
) -> Result<ValidationReport, QueryError> {
    let mut report = ValidationReport::default();
    if q.terms.is_empty() {
        return Err(QueryError::Empty);
    }
    let mut matrices: Vec<InterventionMatrix> = Vec::new();
    let mut has_factual = Vec::new();
    for (_, atomic) in &q.terms {
        for e in &atomic.events {
            if g.side(e.variable) == Side::Left {
                push_unique(&mut report.errors, ModelError::OutcomeOnLeft(g.name(e.variable).to_string()));
            }
            match &e.kind {
                EventKind::Potential(t) => matrices.push(build_intervention_matrix(t, g)?),
                EventKind::Factual => has_factual.push(e.variable),
            }
        }
    }
    if g.left_count() == 0 {
        return Ok(report);
    }

    for v in has_factual {
        push_unique(&mut report.errors, ModelError::ObservationWithLeftSide(g.name(v).to_string()));
    }
    let intervened: BTreeSet<VarId> = matrices.iter().flat_map(|m| m.intervened()).collect();
    for &v in intervened.iter().filter(|&&v| g.side(v) == Side::Left) {
        if let Some(&child) = g.children(v).iter().find(|&&c| g.side(c) == Side::Left) {
            push_unique(
                &mut report.errors,
                ModelError::LeftInterventionHasLeftChild {
                    var: g.name(v).to_string(),
                    child: g.name(child).to_string(),
                },
            );
        }
    }
    let covered: BTreeSet<VarId> = intervened
        .iter()
        .flat_map(|&v| g.ancestors(v).into_iter().chain(std::iter::once(v)))
        .collect();
    for v in g.left_ids() {
        if !covered.contains(&v) {
            push_unique(&mut report.errors, ModelError::LeftNotAncestorOfIntervention(g.name(v).to_string()));
        }
    }
    for m in &matrices {
        if let Some(path) = unshielded_left_path(g, m, &mut vec![m.outcome()]) {
            push_unique(
                &mut report.errors,
                ModelError::UninterventedLeftPath {
                    outcome: g.name(m.outcome()).to_string(),
                    path: g.path_label(&path),
                },
            );
        }
    }
    Ok(report)
}

/// Follows the evaluation recursion symbolically and returns the first path
/// that reaches a left variable without hitting an intervention.
fn unshielded_left_path(g: &CausalGraph, m: &InterventionMatrix, path: &mut Vec<VarId>) -> Option<Vec<VarId>> {
    let head = path[0];
    if m.entry(head, path).is_some() {
        return None;
    }
    if g.side(head) == Side::Left {
        return Some(path.clone());
    }
    for &p in g.parents(head) {
        path.insert(0, p);
        let found = unshielded_left_path(g, m, path);
        path.remove(0);
        if found.is_some() {
            return found;
        }
    }
    None
}

fn push_unique(errors: &mut Vec<ModelError>, e: ModelError) {
    if !errors.contains(&e) {
        errors.push(e);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LintWarning {
    pub outcomes: Vec<String>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub warnings: Vec<LintWarning>,
}

/// Warns when no outcome of the query, nor any descendant of one, is
/// observed: the bounds then carry no information beyond user constraints.
pub fn informativeness_lint(g: &CausalGraph, q: &QueryExpr) -> LintReport {
    let outcomes = q.outcome_variables();
    let informative = outcomes.iter().any(|&v| {
        g.variable(v).observed || g.descendants(v).iter().any(|&d| g.variable(d).observed)
    });
    let mut report = LintReport::default();
    if !informative {
        let names: Vec<String> = outcomes.iter().map(|&v| g.name(v).to_string()).collect();
        report.warnings.push(LintWarning {
            message: format!(
                "no outcome ({}) nor any of its descendants is observed; bounds will be vacuous absent constraints",
                names.join(", ")
            ),
            outcomes: names,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_graph;
    use crate::querylang::parse_query;

    const TWO_IV: &str = "var Z1:2 left\nvar Z2:2 left\nvar X:2\nvar Y:2\n\
        edge Z2->Z1\nedge Z1->X\nedge Z2->X\nedge X->Y\n\
        confound U_l {Z1, Z2}\nconfound U_r {X, Y}";

    const MEASUREMENT: &str = "var X:2 left\nvar Y:2\nvar Y2:2\nedge X->Y->Y2\n\
        confound U_l {X}\nconfound U_r {Y, Y2}\nunobserved Y";

    #[test]
    fn two_instrument_graph_is_tight() {
        let g = parse_graph(TWO_IV).unwrap();
        let r = validate_graph(&g);
        assert!(r.passed());
        assert_eq!(r.tightness(), Tightness::Tight);
    }

    #[test]
    fn single_right_variable() {
        let g = parse_graph("var Y:2\nconfound U {Y}").unwrap();
        let r = validate_graph(&g);
        assert!(r.passed());
        assert_eq!(r.tightness(), Tightness::Tight);
    }

    #[test]
    fn right_to_left_edge_fails() {
        let g = parse_graph(&format!("{TWO_IV}\nedge X->Z1")).unwrap();
        let r = validate_graph(&g);
        assert!(r.errors.iter().any(|e| matches!(e, ModelError::CrossSideEdge { .. })));
    }

    #[test]
    fn cross_side_confounder_and_cycle() {
        let g = parse_graph("var Z:2 left\nvar X:2\nedge Z->X\nconfound U {Z, X}").unwrap();
        assert!(validate_graph(&g).errors.iter().any(|e| e.kind() == "CrossSideConfounderError"));
        let g = parse_graph("var A:2\nvar B:2\nedge A->B\nedge B->A").unwrap();
        assert!(validate_graph(&g).errors.iter().any(|e| e.kind() == "CycleError"));
    }

    #[test]
    fn partial_confounding_downgrades() {
        let g = parse_graph("var X:2\nvar Y:2\nvar Z:2\nedge X->Y->Z\nconfound U {X, Y}").unwrap();
        let r = validate_graph(&g);
        assert!(r.passed());
        assert_eq!(r.tightness(), Tightness::ValidOnly);
    }

    #[test]
    fn unobserved_left_rejected() {
        let g = parse_graph("var Z:2 left\nvar X:2\nedge Z->X\nunobserved Z").unwrap();
        assert!(validate_graph(&g).errors.contains(&ModelError::UnobservedLeft("Z".into())));
    }

    #[test]
    fn query_conditions() {
        let g = parse_graph(TWO_IV).unwrap();
        let q = parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap();
        assert!(validate_query_against_graph(&g, &q).unwrap().passed());

        let q = parse_query("P{Z1(Z2=1)=1}", &g).unwrap();
        let r = validate_query_against_graph(&g, &q).unwrap();
        assert!(r.errors.iter().any(|e| e.kind() == "OutcomeOnLeftError"));

        let q = parse_query("P{Y=1}", &g).unwrap();
        let r = validate_query_against_graph(&g, &q).unwrap();
        assert!(r.errors.iter().any(|e| e.kind() == "ObservationWithLeftSideError"));
        assert!(r.errors.iter().any(|e| e.kind() == "LeftNotAncestorOfInterventionError"));
    }

    #[test]
    fn left_intervention_with_left_child() {
        let g = parse_graph("var W1:2 left\nvar W0:2 left\nvar W3:2\nedge W1->W0\nedge W1->W3\nedge W0->W3\nconfound left\nconfound right").unwrap();
        let q = parse_query("P{W3(W1=1, W0=0)=1}", &g).unwrap();
        let r = validate_query_against_graph(&g, &q).unwrap();
        assert!(r.errors.iter().any(|e| e.kind() == "LeftInterventionHasLeftChildError"));
    }

    #[test]
    fn direct_left_path_is_caught() {
        let g = parse_graph("var Z:2 left\nvar X:2\nvar Y:2\nedge Z->X->Y\nedge Z->Y\nconfound right").unwrap();
        let q = parse_query("P{Y(X=1)=1}", &g).unwrap();
        let r = validate_query_against_graph(&g, &q).unwrap();
        assert!(r.errors.iter().any(|e| e.kind() == "UninterventedLeftPathError"));
    }

    #[test]
    fn lint() {
        let g = parse_graph(MEASUREMENT).unwrap();
        let q = parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap();
        assert!(informative(&g, &q));
        let g2 = parse_graph(&format!("{MEASUREMENT}\nunobserved Y2")).unwrap();
        assert!(!informative(&g2, &q));
        let g3 = parse_graph(TWO_IV).unwrap();
        let q3 = parse_query("P{Y(X=1)=1}", &g3).unwrap();
        assert!(informative(&g3, &q3));
    }

    fn informative(g: &CausalGraph, q: &QueryExpr) -> bool {
        informativeness_lint(g, q).warnings.is_empty()
    }
}
