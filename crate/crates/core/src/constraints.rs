//! Observable index maps and the 0/1 matrix `P` linking conditional
//! observable probabilities to the right response distribution `q`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::ResponseSpace;
use crate::model::{CausalGraph, VarId};
use crate::querylang::Relation;
use crate::rational::{format_rational, Rational};
use num_traits::Zero;

pub const DEFAULT_MAX_CELLS: u64 = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("constraint matrix would have {rows} x {columns} cells, above the cap of {cap}")]
    DimensionOverflow { rows: u64, columns: u64, cap: u64 },
}

/// Enumerates pairs (left assignment, observed right assignment). Left
/// assignments form contiguous blocks; inside a block, and inside the left
/// assignment itself, the first declared variable varies fastest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableIndexer {
    pub left: Vec<String>,
    pub left_cards: Vec<u32>,
    pub right: Vec<String>,
    pub right_cards: Vec<u32>,
    #[serde(skip)]
    left_ids: Vec<VarId>,
    #[serde(skip)]
    right_ids: Vec<VarId>,
}

impl PartialEq for ObservableIndexer {
    fn eq(&self, other: &Self) -> bool {
        self.left == other.left
            && self.left_cards == other.left_cards
            && self.right == other.right
            && self.right_cards == other.right_cards
    }
}

impl Eq for ObservableIndexer {}

impl ObservableIndexer {
    /// A legend without graph ids, as read back from a file.
    pub fn from_parts(left: Vec<(String, u32)>, right: Vec<(String, u32)>) -> Self {
        ObservableIndexer {
            left_cards: left.iter().map(|(_, c)| *c).collect(),
            left: left.into_iter().map(|(n, _)| n).collect(),
            right_cards: right.iter().map(|(_, c)| *c).collect(),
            right: right.into_iter().map(|(n, _)| n).collect(),
            left_ids: Vec::new(),
            right_ids: Vec::new(),
        }
    }

    pub fn new(g: &CausalGraph) -> Self {
        let left_ids: Vec<VarId> = g.left_ids().collect();
        let right_ids: Vec<VarId> = g.right_ids().filter(|&v| g.variable(v).observed).collect();
        ObservableIndexer {
            left: left_ids.iter().map(|&v| g.name(v).to_string()).collect(),
            left_cards: left_ids.iter().map(|&v| g.cardinality(v)).collect(),
            right: right_ids.iter().map(|&v| g.name(v).to_string()).collect(),
            right_cards: right_ids.iter().map(|&v| g.cardinality(v)).collect(),
            left_ids,
            right_ids,
        }
    }

    /// Graph ids of the left variables, when built from a graph.
    pub fn left_ids(&self) -> &[VarId] {
        &self.left_ids
    }

    /// Graph ids of the observed right variables, when built from a graph.
    pub fn right_ids(&self) -> &[VarId] {
        &self.right_ids
    }

    pub fn block_count(&self) -> usize {
        self.left_cards.iter().map(|&c| c as usize).product()
    }

    pub fn block_size(&self) -> usize {
        self.right_cards.iter().map(|&c| c as usize).product()
    }

    /// `B`, the length of `p`.
    pub fn len(&self) -> usize {
        self.block_count() * self.block_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_of(&self, b: usize) -> usize {
        b / self.block_size()
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let s = self.block_size();
        block * s..(block + 1) * s
    }

    pub fn index(&self, block: usize, right_index: usize) -> usize {
        block * self.block_size() + right_index
    }

    pub fn left_assignment(&self, block: usize) -> Vec<u32> {
        decode(block, &self.left_cards)
    }

    pub fn right_assignment(&self, b: usize) -> Vec<u32> {
        decode(b % self.block_size(), &self.right_cards)
    }

    pub fn left_index(&self, values: &[u32]) -> usize {
        encode(values, &self.left_cards)
    }

    pub fn right_index(&self, values: &[u32]) -> usize {
        encode(values, &self.right_cards)
    }

    /// `p{wR}_{wL}` with value digits in declaration order; just `p{wR}`
    /// when the left side is empty.
    pub fn symbol(&self, b: usize) -> String {
        let right = digits(&self.right_assignment(b), &self.right_cards);
        if self.left.is_empty() {
            format!("p{right}")
        } else {
            let left = digits(&self.left_assignment(self.block_of(b)), &self.left_cards);
            format!("p{right}_{left}")
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        (0..self.len()).map(|b| self.symbol(b)).collect()
    }

    pub fn lookup(&self, symbol: &str) -> Option<usize> {
        (0..self.len()).find(|&b| self.symbol(b) == symbol)
    }

    /// `P{X=0, Y=1 | Z=1}` for entry `b`.
    pub fn describe(&self, b: usize) -> String {
        let r = self.right_assignment(b);
        let rhs: Vec<String> = self.right.iter().zip(&r).map(|(n, v)| format!("{n}={v}")).collect();
        if self.left.is_empty() {
            return format!("P{{{}}}", rhs.join(", "));
        }
        format!("P{{{} | {}}}", rhs.join(", "), self.left_marginal(self.block_of(b)).inner(self))
    }

    pub fn left_marginal(&self, block: usize) -> LeftMarginal {
        LeftMarginal(block)
    }
}

fn decode(mut index: usize, cards: &[u32]) -> Vec<u32> {
    cards
        .iter()
        .map(|&c| {
            let v = (index % c as usize) as u32;
            index /= c as usize;
            v
        })
        .collect()
}

fn encode(values: &[u32], cards: &[u32]) -> usize {
    let mut index = 0;
    let mut weight = 1;
    for (&v, &c) in values.iter().zip(cards) {
        index += v as usize * weight;
        weight *= c as usize;
    }
    index
}

fn digits(values: &[u32], cards: &[u32]) -> String {
    let sep = if cards.iter().any(|&c| c > 10) { "." } else { "" };
    values.iter().map(u32::to_string).collect::<Vec<_>>().join(sep)
}

/// Placeholder symbol for `P{W_L = w_L}` of one left block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeftMarginal(pub usize);

impl LeftMarginal {
    fn inner(&self, ix: &ObservableIndexer) -> String {
        let a = ix.left_assignment(self.0);
        ix.left.iter().zip(&a).map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
    }

    pub fn render(&self, ix: &ObservableIndexer) -> String {
        if ix.left.is_empty() {
            "1".to_string()
        } else {
            format!("P{{{}}}", self.inner(ix))
        }
    }
}

/// A user constraint compiled to a row over `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraRow {
    pub coefficients: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub indexer: ObservableIndexer,
    aleph: usize,
    /// Sparse `P`: the q-columns set to 1 in each row.
    rows: Vec<Vec<usize>>,
    lambda: Vec<LeftMarginal>,
    pstar: Vec<Vec<(usize, LeftMarginal)>>,
    pub extra_rows: Vec<ExtraRow>,
}

impl ConstraintSystem {
    pub fn aleph(&self) -> usize {
        self.aleph
    }

    pub fn p_len(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, b: usize) -> &[usize] {
        &self.rows[b]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn entry(&self, b: usize, gamma: usize) -> bool {
        self.rows[b].binary_search(&gamma).is_ok()
    }

    /// Diagonal of `Λ`.
    pub fn lambda(&self) -> &[LeftMarginal] {
        &self.lambda
    }

    /// Nonzero entries of `P*` per row, each the left marginal times 1.
    pub fn pstar(&self) -> &[Vec<(usize, LeftMarginal)>] {
        &self.pstar
    }

    /// `Λ P` computed symbolically from `Λ` and `P`.
    pub fn lambda_times_p(&self) -> Vec<Vec<(usize, LeftMarginal)>> {
        self.rows
            .iter()
            .zip(&self.lambda)
            .map(|(cols, &m)| cols.iter().map(|&gamma| (gamma, m)).collect())
            .collect()
    }

    /// `p = P q`.
    pub fn apply<T>(&self, q: &[T]) -> Vec<T>
    where
        T: Clone + Zero + for<'a> std::ops::AddAssign<&'a T>,
    {
        self.rows
            .iter()
            .map(|cols| {
                let mut s = T::zero();
                for &gamma in cols {
                    s += &q[gamma];
                }
                s
            })
            .collect()
    }

    /// Plain-text tableau, one `p = q + ...` line per observable.
    pub fn tableau(&self, space: &ResponseSpace) -> String {
        let mut out = String::new();
        for (b, cols) in self.rows.iter().enumerate() {
            let qs: Vec<String> = cols.iter().map(|&gamma| space.q_label(gamma)).collect();
            let rhs = if qs.is_empty() { "0".to_string() } else { qs.join(" + ") };
            let _ = writeln!(out, "{} = {}", self.indexer.symbol(b), rhs);
        }
        for row in &self.extra_rows {
            let _ = writeln!(out, "{}", ExtraRowDisplay { row, space });
        }
        out
    }
}

struct ExtraRowDisplay<'a> {
    row: &'a ExtraRow,
    space: &'a ResponseSpace,
}

impl fmt::Display for ExtraRowDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (gamma, c) in self.row.coefficients.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{}*{}", format_rational(c), self.space.q_label(gamma))?;
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " {} {}", self.row.relation, format_rational(&self.row.rhs))
    }
}

/// Values of every variable given left values `w_left` (indexed like
/// `g.left_ids()`) and response indices `r` for the right variables.
pub fn factual_values(g: &CausalGraph, space: &ResponseSpace, w_left: &[u32], r: &[u64]) -> Vec<u32> {
    let order = g.topological_order().expect("validated graph is acyclic");
    let mut values = vec![0u32; g.len()];
    let mut scratch = Vec::new();
    for v in order {
        if v < g.left_count() {
            values[v] = w_left[v];
            continue;
        }
        let t = space.table(v);
        scratch.clear();
        scratch.extend(t.parents().iter().map(|&p| values[p]));
        values[v] = t.value(r[v], t.assignment_index(&scratch));
    }
    values
}

/// `g_W(w_L, r_R)`: the value of the right variable `target`.
pub fn evaluate_factual(
    g: &CausalGraph,
    space: &ResponseSpace,
    w_left: &[u32],
    r: &[u64],
    target: VarId,
) -> u32 {
    factual_values(g, space, w_left, r)[target]
}

/// Builds `P`, `Λ` and `P*` by evaluating each response value under every
/// left assignment. Only observed right coordinates are matched, so that
/// unobserved right variables are marginalized.
pub fn build_constraint_system(
    g: &CausalGraph,
    space: &ResponseSpace,
    max_cells: u64,
) -> Result<ConstraintSystem, ConstraintError> {
    let indexer = ObservableIndexer::new(g);
    let aleph = space.aleph();
    let cells = (indexer.len() as u64).saturating_mul(aleph as u64);
    if cells > max_cells {
        return Err(ConstraintError::DimensionOverflow {
            rows: indexer.len() as u64,
            columns: aleph as u64,
            cap: max_cells,
        });
    }
    let mut rows = vec![Vec::new(); indexer.len()];
    let mut r = vec![0u64; g.len()];
    for block in 0..indexer.block_count() {
        let w_left = indexer.left_assignment(block);
        for gamma in 0..aleph {
            space.fill_right(gamma, &mut r);
            let values = factual_values(g, space, &w_left, &r);
            let observed: Vec<u32> = indexer.right_ids().iter().map(|&v| values[v]).collect();
            rows[indexer.index(block, indexer.right_index(&observed))].push(gamma);
        }
    }
    let lambda: Vec<LeftMarginal> =
        (0..indexer.len()).map(|b| indexer.left_marginal(indexer.block_of(b))).collect();
    let pstar = rows
        .iter()
        .enumerate()
        .map(|(b, cols)| {
            let m = indexer.left_marginal(indexer.block_of(b));
            cols.iter().map(|&gamma| (gamma, m)).collect()
        })
        .collect();
    Ok(ConstraintSystem { indexer, aleph, rows, lambda, pstar, extra_rows: Vec::new() })
}
