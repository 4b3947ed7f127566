//! Causal graph data model: categorical variables split into a left and a
//! right side, directed edges, and explicitly declared latent confounders.

mod dsl;
mod validate;

pub use dsl::parse_graph;
pub use validate::{
    informativeness_lint, validate_graph, validate_query_against_graph, Finding, LintReport,
    LintWarning, Tightness, ValidationReport,
};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// A categorical variable with values `0..cardinality`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cardinality: u32,
    pub side: Side,
    pub observed: bool,
}

/// A latent common cause of `children`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confounder {
    pub name: String,
    pub children: BTreeSet<VarId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("variable `{name}` has cardinality {cardinality}; at least 2 required")]
    InvalidCardinality { name: String, cardinality: u32 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("confounder `{0}` declared twice")]
    DuplicateConfounder(String),
    #[error("confounder `{0}` has no children")]
    EmptyConfounder(String),
    #[error("graph has a directed cycle through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("edge {from} -> {to} points from the right side to the left side")]
    CrossSideEdge { from: String, to: String },
    #[error("confounder `{0}` has children on both sides")]
    CrossSideConfounder(String),
    #[error("left variable `{0}` is unobserved; every left variable must be observed")]
    UnobservedLeft(String),
    #[error("outcome `{0}` is on the left side")]
    OutcomeOnLeft(String),
    #[error("intervened left variable `{var}` has left child `{child}`")]
    LeftInterventionHasLeftChild { var: String, child: String },
    #[error("left variable `{0}` is neither intervened upon nor an ancestor of an intervened variable")]
    LeftNotAncestorOfIntervention(String),
    #[error("factual event on `{0}` is not allowed when the left side is nonempty")]
    ObservationWithLeftSide(String),
    #[error("outcome `{outcome}` depends on left variable through the unintervened path {path}")]
    UninterventedLeftPath { outcome: String, path: String },
}

impl ModelError {
    /// Hard failures refuse compilation; everything produced by validation is hard.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Cycle(_) => "CycleError",
            ModelError::CrossSideEdge { .. } => "CrossSideEdgeError",
            ModelError::CrossSideConfounder(_) => "CrossSideConfounderError",
            ModelError::UnobservedLeft(_) => "UnobservedLeftError",
            ModelError::OutcomeOnLeft(_) => "OutcomeOnLeftError",
            ModelError::LeftInterventionHasLeftChild { .. } => "LeftInterventionHasLeftChildError",
            ModelError::LeftNotAncestorOfIntervention(_) => "LeftNotAncestorOfInterventionError",
            ModelError::ObservationWithLeftSide(_) => "ObservationWithLeftSideError",
            ModelError::UninterventedLeftPath { .. } => "UninterventedLeftPathError",
            _ => "StructureError",
        }
    }
}

/// Immutable causal DAG. Left variables always precede right variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    variables: Vec<Variable>,
    edges: BTreeSet<(VarId, VarId)>,
    confounders: Vec<Confounder>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    left_count: usize,
    index: HashMap<String, VarId>,
}

impl CausalGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn confounders(&self) -> &[Confounder] {
        &self.confounders
    }

    pub fn left_count(&self) -> usize {
        self.left_count
    }

    pub fn left_ids(&self) -> std::ops::Range<VarId> {
        0..self.left_count
    }

    pub fn right_ids(&self) -> std::ops::Range<VarId> {
        self.left_count..self.variables.len()
    }

    pub fn side(&self, id: VarId) -> Side {
        self.variables[id].side
    }

    pub fn cardinality(&self, id: VarId) -> u32 {
        self.variables[id].cardinality
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id].name
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    /// Parents in declaration order.
    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id]
    }

    pub fn has_edge(&self, from: VarId, to: VarId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn ancestors(&self, id: VarId) -> BTreeSet<VarId> {
        self.closure(id, |v| &self.parents[v])
    }

    pub fn descendants(&self, id: VarId) -> BTreeSet<VarId> {
        self.closure(id, |v| &self.children[v])
    }

    fn closure<'a>(&'a self, id: VarId, next: impl Fn(VarId) -> &'a [VarId]) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = next(id).to_vec();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend_from_slice(next(v));
            }
        }
        seen
    }

    /// A topological order, or the variables on some cycle.
    pub fn topological_order(&self) -> Result<Vec<VarId>, Vec<VarId>> {
        let n = self.variables.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        // Walk parents among the unresolved vertices until a repeat closes a cycle.
        let mut current = (0..n).find(|&v| indegree[v] > 0).expect("unresolved vertex");
        let mut trail = Vec::new();
        loop {
            if let Some(pos) = trail.iter().position(|&v| v == current) {
                let mut cycle: Vec<VarId> = trail[pos..].to_vec();
                cycle.reverse();
                return Err(cycle);
            }
            trail.push(current);
            current = *self.parents[current]
                .iter()
                .find(|&&p| indegree[p] > 0)
                .expect("unresolved vertex has an unresolved parent");
        }
    }

    /// All directed paths ending at `target`, including the trivial path,
    /// ordered lexicographically by their variable sequence.
    pub fn paths_to(&self, target: VarId) -> Vec<Vec<VarId>> {
        let mut out = Vec::new();
        let mut suffix = vec![target];
        self.collect_paths(&mut suffix, &mut out);
        for p in &mut out {
            p.reverse();
        }
        out.sort();
        out
    }

    fn collect_paths(&self, reversed: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        out.push(reversed.clone());
        let head = *reversed.last().expect("nonempty path");
        for &p in &self.parents[head] {
            reversed.push(p);
            self.collect_paths(reversed, out);
            reversed.pop();
        }
    }

    pub fn path_label(&self, path: &[VarId]) -> String {
        path.iter().map(|&v| self.name(v)).collect::<Vec<_>>().join("->")
    }

    /// Re-emits the graph in the text DSL.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for v in &self.variables {
            out.push_str(&format!("var {} : {} {}\n", v.name, v.cardinality, v.side));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("edge {} -> {}\n", self.name(a), self.name(b)));
        }
        for c in &self.confounders {
            let names: Vec<&str> = c.children.iter().map(|&v| self.name(v)).collect();
            out.push_str(&format!("confound {} {{ {} }}\n", c.name, names.join(", ")));
        }
        for v in self.variables.iter().filter(|v| !v.observed) {
            out.push_str(&format!("unobserved {}\n", v.name));
        }
        out
    }

    /// Copy of this graph with the edge `from -> to` reversed.
    pub fn with_reversed_edge(&self, from: VarId, to: VarId) -> Result<CausalGraph, ModelError> {
        let mut b = GraphBuilder::default();
        for v in &self.variables {
            b.variable(&v.name, v.cardinality, v.side);
            if !v.observed {
                b.unobserved(&v.name);
            }
        }
        for &(a, c) in &self.edges {
            if (a, c) == (from, to) {
                b.edge(self.name(c), self.name(a));
            } else {
                b.edge(self.name(a), self.name(c));
            }
        }
        for c in &self.confounders {
            let names: Vec<&str> = c.children.iter().map(|&v| self.name(v)).collect();
            b.confounder(&c.name, &names);
        }
        b.build()
    }
}

#[derive(Clone, Debug)]
enum PendingConfounder {
    Named(String, Vec<String>),
    WholeSide(Side),
}

/// Collects declarations by name and resolves them in [`GraphBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    confounders: Vec<PendingConfounder>,
    unobserved: Vec<String>,
}

impl GraphBuilder {
    pub fn variable(&mut self, name: &str, cardinality: u32, side: Side) -> &mut Self {
        self.variables.push(Variable { name: name.to_string(), cardinality, side, observed: true });
        self
    }

    pub fn edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn confounder(&mut self, name: &str, children: &[&str]) -> &mut Self {
        self.confounders.push(PendingConfounder::Named(
            name.to_string(),
            children.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    /// One confounder spanning every variable on `side`.
    pub fn confound_side(&mut self, side: Side) -> &mut Self {
        self.confounders.push(PendingConfounder::WholeSide(side));
        self
    }

    pub fn unobserved(&mut self, name: &str) -> &mut Self {
        self.unobserved.push(name.to_string());
        self
    }

    pub fn build(&self) -> Result<CausalGraph, ModelError> {
        // Stable partition: left variables first, declaration order kept within each side.
        let mut variables: Vec<Variable> =
            self.variables.iter().filter(|v| v.side == Side::Left).cloned().collect();
        variables.extend(self.variables.iter().filter(|v| v.side == Side::Right).cloned());
        let left_count = variables.iter().filter(|v| v.side == Side::Left).count();

        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if v.cardinality < 2 {
                return Err(ModelError::InvalidCardinality {
                    name: v.name.clone(),
                    cardinality: v.cardinality,
                });
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
        }
        let resolve = |name: &str| {
            index.get(name).copied().ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
        };

        for name in &self.unobserved {
            let id = resolve(name)?;
            variables[id].observed = false;
        }

        let mut edges = BTreeSet::new();
        for (a, b) in &self.edges {
            let (a, b) = (resolve(a)?, resolve(b)?);
            if a == b {
                return Err(ModelError::SelfLoop(variables[a].name.clone()));
            }
            edges.insert((a, b));
        }

        let mut confounders: Vec<Confounder> = Vec::new();
        for pending in &self.confounders {
            let (name, children) = match pending {
                PendingConfounder::Named(name, kids) => {
                    let children = kids.iter().map(|k| resolve(k)).collect::<Result<_, _>>()?;
                    (name.clone(), children)
                }
                PendingConfounder::WholeSide(side) => {
                    let name = match side {
                        Side::Left => "U_left",
                        Side::Right => "U_right",
                    };
                    let children: BTreeSet<VarId> =
                        (0..variables.len()).filter(|&i| variables[i].side == *side).collect();
                    (name.to_string(), children)
                }
            };
            if children.is_empty() {
                return Err(ModelError::EmptyConfounder(name));
            }
            if confounders.iter().any(|c| c.name == name) || index.contains_key(&name) {
                return Err(ModelError::DuplicateConfounder(name));
            }
            confounders.push(Confounder { name, children });
        }

        let n = variables.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &edges {
            parents[b].push(a);
            children[a].push(b);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        Ok(CausalGraph { variables, edges, confounders, parents, children, left_count, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> CausalGraph {
        let mut b = CausalGraph::builder();
        b.variable("W1", 2, Side::Right)
            .variable("W2", 2, Side::Right)
            .variable("W3", 2, Side::Right)
            .edge("W1", "W2")
            .edge("W1", "W3")
            .edge("W2", "W3");
        b.build().unwrap()
    }

    #[test]
    fn paths_are_lexicographic() {
        let g = fig3();
        let labels: Vec<String> = g.paths_to(2).iter().map(|p| g.path_label(p)).collect();
        assert_eq!(labels, ["W1->W2->W3", "W1->W3", "W2->W3", "W3"]);
    }

    #[test]
    fn left_variables_are_moved_first() {
        let mut b = CausalGraph::builder();
        b.variable("X", 2, Side::Right).variable("Z", 2, Side::Left).edge("Z", "X");
        let g = b.build().unwrap();
        assert_eq!(g.name(0), "Z");
        assert_eq!(g.left_count(), 1);
        assert_eq!(g.parents(1), &[0]);
    }

    #[test]
    fn rejects_structural_problems() {
        let mut b = CausalGraph::builder();
        b.variable("X", 1, Side::Right);
        assert!(matches!(b.build(), Err(ModelError::InvalidCardinality { .. })));

        let mut b = CausalGraph::builder();
        b.variable("X", 2, Side::Right).variable("X", 2, Side::Right);
        assert!(matches!(b.build(), Err(ModelError::DuplicateVariable(_))));

        let mut b = CausalGraph::builder();
        b.variable("X", 2, Side::Right).edge("X", "Y");
        assert!(matches!(b.build(), Err(ModelError::UnknownVariable(_))));
    }

    #[test]
    fn cycle_is_reported() {
        let mut b = CausalGraph::builder();
        b.variable("A", 2, Side::Right)
            .variable("B", 2, Side::Right)
            .variable("C", 2, Side::Right)
            .edge("A", "B")
            .edge("B", "C")
            .edge("C", "A");
        let g = b.build().unwrap();
        let cycle = g.topological_order().unwrap_err();
        assert_eq!(cycle.len(), 3);
    }

    #[test]
    fn ancestors_and_descendants() {
        let g = fig3();
        assert_eq!(g.ancestors(2), BTreeSet::from([0, 1]));
        assert_eq!(g.descendants(0), BTreeSet::from([1, 2]));
        assert!(g.descendants(2).is_empty());
    }
}
