//! Independent verification: an exact primal simplex, samplers for
//! achievable distributions, and the probit simulation model.

mod probit;
mod simplex;

pub use probit::{
    marginalize_instrument, probit_to_distribution, relabel_as_four_level, InstrumentWeights, ProbitScm,
};
pub use simplex::{solve_lp, verify_certificate, LpOutcome, LpRow};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraints::{ConstraintSystem, ObservableIndexer};
use crate::error::ParseError;
use crate::polytope::{LinearProgram, Sense};
use crate::querylang::Relation;
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("the distribution is not compatible with the model")]
    Infeasible { certificate: Vec<Rational> },
    #[error("the primal LP is unbounded")]
    Unbounded,
    #[error("instrument weights for block {block} sum to {sum}, not 1")]
    WeightSum { block: usize, sum: String },
    #[error("P{{{block}}} = {value:e} is too small to condition on")]
    DegenerateConditioning { block: String, value: f64 },
    #[error("could not sample a response distribution satisfying the extra rows")]
    SamplingFailed,
}

/// Conditional probabilities `p_b`, one per entry of the legend.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDistribution<T = Rational> {
    pub legend: ObservableIndexer,
    pub values: Vec<T>,
}

impl<T> ObservedDistribution<T> {
    pub fn new(legend: ObservableIndexer, values: Vec<T>) -> Self {
        debug_assert_eq!(legend.len(), values.len());
        ObservedDistribution { legend, values }
    }

    /// `wL<TAB>wR<TAB>prob` rows under `# left` / `# right` legend lines.
    pub fn to_tsv(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut out = legend_header(&self.legend);
        for (b, v) in self.values.iter().enumerate() {
            let (wr, wl) = split_symbol(&self.legend.symbol(b));
            let _ = writeln!(out, "{wl}\t{wr}\t{v}");
        }
        out
    }
}

impl ObservedDistribution<Rational> {
    pub fn to_f64(&self) -> ObservedDistribution<f64> {
        ObservedDistribution {
            legend: self.legend.clone(),
            values: self.values.iter().map(crate::rational::to_f64).collect(),
        }
    }

    pub fn to_rational_tsv(&self) -> String {
        let mut out = legend_header(&self.legend);
        for (b, v) in self.values.iter().enumerate() {
            let (wr, wl) = split_symbol(&self.legend.symbol(b));
            let _ = writeln!(out, "{wl}\t{wr}\t{}", format_rational(v));
        }
        out
    }
}

fn legend_header(legend: &ObservableIndexer) -> String {
    let fmt = |names: &[String], cards: &[u32]| {
        names.iter().zip(cards).map(|(n, c)| format!("{n}:{c}")).collect::<Vec<_>>().join(" ")
    };
    format!(
        "# left {}\n# right {}\n",
        fmt(&legend.left, &legend.left_cards),
        fmt(&legend.right, &legend.right_cards)
    )
}

/// Splits `p01_10` into (`01`, `10`); the left part is `-` when empty.
fn split_symbol(symbol: &str) -> (String, String) {
    let body = &symbol[1..];
    match body.split_once('_') {
        Some((r, l)) => (r.to_string(), l.to_string()),
        None => (body.to_string(), "-".to_string()),
    }
}

/// A distribution file as read: the legend from its header and the
/// probabilities it lists, keyed by `p`-symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionFile {
    pub legend: Option<ObservableIndexer>,
    pub entries: BTreeMap<String, Rational>,
}

pub fn parse_distribution_tsv(text: &str) -> Result<DistributionFile, ParseError> {
    let mut left = None;
    let mut right = None;
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let parse_vars = |s: &str| -> Result<Vec<(String, u32)>, ParseError> {
                s.split_whitespace()
                    .map(|tok| {
                        let (n, c) = tok
                            .split_once(':')
                            .ok_or_else(|| ParseError::syntax(line_no, 1, "expected NAME:CARD"))?;
                        let c = c.parse().map_err(|_| ParseError::syntax(line_no, 1, "bad cardinality"))?;
                        Ok((n.to_string(), c))
                    })
                    .collect()
            };
            if let Some(s) = rest.strip_prefix("left") {
                left = Some(parse_vars(s)?);
            } else if let Some(s) = rest.strip_prefix("right") {
                right = Some(parse_vars(s)?);
            }
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(ParseError::syntax(line_no, 1, "expected wL<TAB>wR<TAB>prob"));
        }
        let value = parse_rational(cells[2])
            .ok_or_else(|| ParseError::syntax(line_no, cells[0].len() + cells[1].len() + 3, "bad probability"))?;
        let symbol = if cells[0] == "-" || cells[0].is_empty() {
            format!("p{}", cells[1])
        } else {
            format!("p{}_{}", cells[1], cells[0])
        };
        entries.insert(symbol, value);
    }
    let legend = match (left, right) {
        (Some(l), Some(r)) => Some(ObservableIndexer::from_parts(l, r)),
        _ => None,
    };
    Ok(DistributionFile { legend, entries })
}

/// Exact optimum of the primal LP at the observed distribution `p`.
pub fn solve_primal(lp: &LinearProgram, p: &[Rational]) -> Result<Rational, OracleError> {
    let rows = primal_rows(lp, p);
    let cost: Vec<Rational> = match lp.sense {
        Sense::Min => lp.alpha.clone(),
        Sense::Max => lp.alpha.iter().map(|a| -a.clone()).collect(),
    };
    match solve_lp(&cost, &rows) {
        LpOutcome::Optimal { value, .. } => Ok(match lp.sense {
            Sense::Min => value,
            Sense::Max => -value,
        }),
        LpOutcome::Infeasible { certificate } => Err(OracleError::Infeasible { certificate }),
        LpOutcome::Unbounded => Err(OracleError::Unbounded),
    }
}

/// `P q = p`, `1·q = 1` and the extra rows, in that order.
pub fn primal_rows(lp: &LinearProgram, p: &[Rational]) -> Vec<LpRow> {
    let mut rows = Vec::new();
    for (b, cols) in lp.p_rows.iter().enumerate() {
        let mut c = vec![Rational::zero(); lp.aleph];
        for &gamma in cols {
            c[gamma] = Rational::one();
        }
        rows.push(LpRow { coefficients: c, relation: Relation::Eq, rhs: p[b].clone() });
    }
    rows.push(LpRow { coefficients: vec![Rational::one(); lp.aleph], relation: Relation::Eq, rhs: Rational::one() });
    for r in &lp.extra_rows {
        rows.push(LpRow { coefficients: r.coefficients.clone(), relation: r.relation, rhs: r.rhs.clone() });
    }
    rows
}

fn satisfies(cs: &ConstraintSystem, q: &[Rational]) -> bool {
    cs.extra_rows.iter().all(|r| {
        let lhs: Rational = r.coefficients.iter().zip(q).map(|(a, x)| a * x).sum();
        match r.relation {
            Relation::Eq => lhs == r.rhs,
            Relation::Ge => lhs >= r.rhs,
            Relation::Le => lhs <= r.rhs,
        }
    })
}

/// Random rational `q` on the simplex (normalized random integers) that
/// satisfies the extra rows, and `p = P q`. Columns forced to zero by a
/// nonnegative equality row are zeroed up front; other rows use rejection.
pub fn sample_achievable(
    cs: &ConstraintSystem,
    seed: u64,
) -> Result<(Vec<Rational>, ObservedDistribution), OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forced = vec![false; cs.aleph()];
    for r in &cs.extra_rows {
        if r.relation == Relation::Eq && r.rhs.is_zero() && r.coefficients.iter().all(|c| !c.is_negative()) {
            for (gamma, c) in r.coefficients.iter().enumerate() {
                if c.is_positive() {
                    forced[gamma] = true;
                }
            }
        }
    }
    for _ in 0..10_000 {
        let sparse = rng.random_bool(0.5);
        let weights: Vec<u64> = (0..cs.aleph())
            .map(|gamma| {
                if forced[gamma] || (sparse && rng.random_bool(0.6)) {
                    0
                } else {
                    rng.random_range(0..=20)
                }
            })
            .collect();
        let total: u64 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        let q: Vec<Rational> =
            weights.iter().map(|&w| Rational::new(BigInt::from(w), BigInt::from(total))).collect();
        if satisfies(cs, &q) {
            let p = cs.apply(&q);
            return Ok((q, ObservedDistribution::new(cs.indexer.clone(), p)));
        }
    }
    Err(OracleError::SamplingFailed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_response_space, DEFAULT_MAX_ROWS};
    use crate::constraints::{build_constraint_system, DEFAULT_MAX_CELLS};
    use crate::evaluator::build_objective;
    use crate::model::parse_graph;
    use crate::polytope::assemble_primal;
    use crate::querylang::parse_query;
    use crate::rational::ratio;

    fn ternary() -> (ConstraintSystem, LinearProgram, LinearProgram) {
        let g = parse_graph("var X:3\nvar Y:2\nedge X->Y\nconfound U {X, Y}").unwrap();
        let s = build_response_space(&g, &[], DEFAULT_MAX_ROWS).unwrap();
        let cs = build_constraint_system(&g, &s, DEFAULT_MAX_CELLS).unwrap();
        let obj = build_objective(&g, &s, &parse_query("P{Y(X=1)=1} - P{Y(X=0)=1}", &g).unwrap()).unwrap();
        let min = assemble_primal(&cs, &obj, Sense::Min).unwrap();
        let max = assemble_primal(&cs, &obj, Sense::Max).unwrap();
        (cs, min, max)
    }

    #[test]
    fn ternary_exposure_optimum() {
        let (_, min, max) = ternary();
        // p00, p10, p20, p01, p11, p21
        let p = [ratio(3, 10), ratio(1, 5), int0(), ratio(1, 10), ratio(2, 5), int0()];
        assert_eq!(solve_primal(&min, &p).unwrap(), ratio(-3, 10));
        assert_eq!(solve_primal(&max, &p).unwrap(), ratio(7, 10));
    }

    fn int0() -> Rational {
        Rational::zero()
    }

    #[test]
    fn incompatible_distribution_has_certificate() {
        let (_, min, _) = ternary();
        let p = [ratio(1, 2), ratio(1, 2), ratio(1, 2), int0(), int0(), int0()];
        match solve_primal(&min, &p) {
            Err(OracleError::Infeasible { certificate }) => {
                assert!(verify_certificate(&primal_rows(&min, &p), min.aleph, &certificate))
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let (cs, _, _) = ternary();
        let (q1, p1) = sample_achievable(&cs, 7).unwrap();
        let (q2, p2) = sample_achievable(&cs, 7).unwrap();
        assert_eq!(q1, q2);
        assert_eq!(p1, p2);
        assert_eq!(q1.iter().sum::<Rational>(), Rational::one());
        let uniform = vec![ratio(1, 24); 24];
        let p = cs.apply(&uniform);
        assert_eq!(p[0], ratio(4, 24));
    }

    #[test]
    fn tsv_round_trip() {
        let (cs, _, _) = ternary();
        let (_, p) = sample_achievable(&cs, 3).unwrap();
        let file = parse_distribution_tsv(&p.to_rational_tsv()).unwrap();
        assert_eq!(file.legend.as_ref(), Some(&cs.indexer));
        for (b, v) in p.values.iter().enumerate() {
            assert_eq!(&file.entries[&cs.indexer.symbol(b)], v);
        }
    }
}
