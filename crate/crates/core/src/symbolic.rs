//! Symbolic bounds: affine expressions in the observable symbols, combined
//! by max (lower bound) and min (upper bound).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ConstraintSystem, ObservableIndexer};
use crate::error::ParseError;
use crate::model::Tightness;
use crate::oracle::{sample_achievable, solve_lp, DistributionFile, LpOutcome, LpRow, ObservedDistribution};
use crate::polytope::{DualVertexSet, Sense};
use crate::querylang::Relation;
use crate::rational::{format_rational, parse_rational, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("no probability given for `{0}`")]
    MissingProbability(String),
    #[error("not a distribution: {0}")]
    NotADistribution(String),
    #[error("distribution legend does not match the bound legend")]
    LegendMismatch,
    #[error("malformed bounds file: {0}")]
    Format(String),
}

/// `constant + Σ coefficient · p_b`, zero coefficients omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineExpression {
    pub constant: Rational,
    pub coefficients: BTreeMap<usize, Rational>,
}

impl AffineExpression {
    pub fn new(constant: Rational, terms: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut e = AffineExpression { constant, coefficients: BTreeMap::new() };
        for (b, c) in terms {
            e.add_term(b, &c);
        }
        e
    }

    pub fn constant(c: Rational) -> Self {
        AffineExpression { constant: c, coefficients: BTreeMap::new() }
    }

    fn add_term(&mut self, b: usize, c: &Rational) {
        let slot = self.coefficients.entry(b).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coefficients.remove(&b);
        }
    }

    pub fn coefficient(&self, b: usize) -> Rational {
        self.coefficients.get(&b).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn evaluate(&self, p: &[Rational]) -> Rational {
        let mut v = self.constant.clone();
        for (b, c) in &self.coefficients {
            v += c * &p[*b];
        }
        v
    }

    /// Largest value over all distributions (every block on its simplex),
    /// achievable or not.
    pub fn sup_over_distributions(&self, legend: &ObservableIndexer) -> Rational {
        let mut v = self.constant.clone();
        for block in 0..legend.block_count() {
            let best = legend.block_range(block).map(|b| self.coefficient(b)).max().expect("nonempty block");
            v += best;
        }
        v
    }

    pub fn evaluate_f64(&self, p: &[f64]) -> f64 {
        self.coefficients.iter().fold(to_f64(&self.constant), |acc, (b, c)| acc + to_f64(c) * p[*b])
    }

    /// Adds `t · (Σ_{b in block} p_b − 1)`, which is zero on every distribution.
    fn shift_block(&mut self, legend: &ObservableIndexer, block: usize, t: &Rational) {
        if t.is_zero() {
            return;
        }
        for b in legend.block_range(block) {
            self.add_term(b, t);
        }
        self.constant -= t;
    }

    /// Unique representative modulo the block identities: the last symbol
    /// of every block is eliminated.
    pub fn canonical(&self, legend: &ObservableIndexer) -> Self {
        let mut e = self.clone();
        for block in 0..legend.block_count() {
            let last = legend.block_range(block).end - 1;
            let t = -e.coefficient(last);
            e.shift_block(legend, block, &t);
        }
        e
    }

    /// An equivalent expression with as few terms as the block identities
    /// allow, preferring the unshifted form on ties.
    pub fn simplified(&self, legend: &ObservableIndexer) -> Self {
        let mut e = self.clone();
        for block in 0..legend.block_count() {
            let mut counts: BTreeMap<Rational, usize> = BTreeMap::new();
            for b in legend.block_range(block) {
                *counts.entry(e.coefficient(b)).or_default() += 1;
            }
            let zeros = counts.get(&Rational::zero()).copied().unwrap_or(0);
            let best = counts.iter().filter(|(c, _)| !c.is_zero()).max_by_key(|(_, n)| **n);
            if let Some((c, n)) = best {
                // Shifting trades `n` terms for the `zeros` currently absent ones.
                if *n > zeros {
                    let t = -c.clone();
                    e.shift_block(legend, block, &t);
                }
            }
        }
        e
    }

    /// Text such as `p00_00 + 2 p11_01 - 2`, terms ordered by the
    /// right assignment first and the left block second.
    pub fn render(&self, legend: &ObservableIndexer) -> String {
        let size = legend.block_size();
        let mut terms: Vec<(&usize, &Rational)> = self.coefficients.iter().collect();
        terms.sort_by_key(|(b, _)| (**b % size, **b / size));
        let mut out = String::new();
        for (b, c) in terms {
            let magnitude = c.abs();
            push_sign(&mut out, c.is_negative());
            if !magnitude.is_one() {
                out.push_str(&format_rational(&magnitude));
                out.push(' ');
            }
            out.push_str(&legend.symbol(*b));
        }
        if !self.constant.is_zero() || out.is_empty() {
            push_sign(&mut out, self.constant.is_negative());
            out.push_str(&format_rational(&self.constant.abs()));
        }
        out
    }

    pub fn parse(text: &str, legend: &ObservableIndexer) -> Result<Self, ParseError> {
        parse_expression(text, legend)
    }
}

fn push_sign(out: &mut String, negative: bool) {
    match (out.is_empty(), negative) {
        (true, true) => out.push_str("- "),
        (true, false) => {}
        (false, true) => out.push_str(" - "),
        (false, false) => out.push_str(" + "),
    }
}

fn parse_expression(text: &str, legend: &ObservableIndexer) -> Result<AffineExpression, ParseError> {
    let symbols = legend.symbols();
    let mut e = AffineExpression::default();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut sign = Rational::one();
    let mut coef: Option<Rational> = None;
    let mut expect_term = true;
    let err = |col: usize, msg: &str| ParseError::syntax(1, col + 1, msg);
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '*' {
            i += 1;
            continue;
        }
        if c == '+' || c == '-' {
            if !expect_term && coef.is_some() {
                return Err(err(i, "dangling coefficient"));
            }
            if c == '-' {
                sign = -sign;
            }
            expect_term = true;
            i += 1;
            continue;
        }
        if !expect_term {
            return Err(err(i, "expected `+` or `-`"));
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = parse_rational(&s).ok_or_else(|| err(start, "bad number"))?;
            if coef.is_some() {
                return Err(err(start, "two numbers in a row"));
            }
            coef = Some(v);
            // A bare number followed by a sign or the end is the constant term.
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j == chars.len() || chars[j] == '+' || chars[j] == '-' {
                e.constant += &sign * coef.take().expect("set");
                sign = Rational::one();
                expect_term = false;
            }
            continue;
        }
        if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let b = symbols.iter().position(|s| *s == name).ok_or_else(|| err(start, "unknown symbol"))?;
            let k = coef.take().unwrap_or_else(Rational::one);
            e.add_term(b, &(&sign * k));
            sign = Rational::one();
            expect_term = false;
            continue;
        }
        return Err(err(i, "unexpected character"));
    }
    if expect_term {
        if text.trim().is_empty() {
            return Err(err(0, "empty expression"));
        }
        return Err(err(chars.len(), "expression ends with an operator"));
    }
    Ok(e)
}

/// `max(lower) ≤ Q ≤ min(upper)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicBound {
    pub query: String,
    pub lower: Vec<AffineExpression>,
    pub upper: Vec<AffineExpression>,
    pub tightness: Tightness,
    pub legend: ObservableIndexer,
    pub lower_vertex_count: usize,
    pub upper_vertex_count: usize,
    /// Some extreme ray of a dual raises its objective at some distribution;
    /// the bounds then hold only for distributions compatible with the model.
    pub conditional: bool,
}

fn vertex_expressions(set: &DualVertexSet) -> Vec<AffineExpression> {
    set.vertices
        .iter()
        .map(|y| {
            let (constant, coefs) = set.objective_template(y);
            AffineExpression::new(constant, coefs)
        })
        .collect()
}

fn dedup_canonical(exprs: Vec<AffineExpression>, legend: &ObservableIndexer) -> Vec<AffineExpression> {
    let mut seen = std::collections::BTreeSet::new();
    exprs.into_iter().filter(|e| seen.insert(e.canonical(legend))).collect()
}

/// One expression per dual vertex; duplicates under the block identities merged.
pub fn vertices_to_bound(
    vs_min: &DualVertexSet,
    vs_max: &DualVertexSet,
    legend: &ObservableIndexer,
    query: &str,
    tightness: Tightness,
) -> SymbolicBound {
    let ray_matters = |set: &DualVertexSet| {
        set.rays.iter().any(|r| {
            // The template is the bound expression; for Max it is the
            // negated dual objective.
            let (c, coefs) = set.objective_template(r);
            let e = match set.sense {
                Sense::Min => AffineExpression::new(c, coefs),
                Sense::Max => AffineExpression::new(-c, coefs.into_iter().map(|(b, x)| (b, -x))),
            };
            e.sup_over_distributions(legend).is_positive()
        })
    };
    SymbolicBound {
        query: query.to_string(),
        lower: dedup_canonical(vertex_expressions(vs_min), legend),
        upper: dedup_canonical(vertex_expressions(vs_max), legend),
        tightness,
        legend: legend.clone(),
        lower_vertex_count: vs_min.vertices.len(),
        upper_vertex_count: vs_max.vertices.len(),
        conditional: ray_matters(vs_min) || ray_matters(vs_max),
    }
}

/// Checks the block sums and signs of a rational distribution.
pub fn check_distribution(d: &ObservedDistribution) -> Result<(), SymbolicError> {
    if let Some(b) = d.values.iter().position(|v| v.is_negative()) {
        return Err(SymbolicError::NotADistribution(format!("{} is negative", d.legend.symbol(b))));
    }
    for block in 0..d.legend.block_count() {
        let s: Rational = d.legend.block_range(block).map(|b| d.values[b].clone()).sum();
        if !s.is_one() {
            return Err(SymbolicError::NotADistribution(format!(
                "block {} sums to {}",
                block,
                format_rational(&s)
            )));
        }
    }
    Ok(())
}

/// Orders a parsed distribution file by `legend`.
pub fn complete_distribution(
    legend: &ObservableIndexer,
    file: &DistributionFile,
) -> Result<ObservedDistribution, SymbolicError> {
    if let Some(l) = &file.legend {
        if l != legend {
            return Err(SymbolicError::LegendMismatch);
        }
    }
    let values = legend
        .symbols()
        .into_iter()
        .map(|s| file.entries.get(&s).cloned().ok_or(SymbolicError::MissingProbability(s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObservedDistribution::new(legend.clone(), values))
}

fn max_of(exprs: &[AffineExpression], p: &[Rational]) -> Rational {
    exprs.iter().map(|e| e.evaluate(p)).max().expect("nonempty")
}

fn min_of(exprs: &[AffineExpression], p: &[Rational]) -> Rational {
    exprs.iter().map(|e| e.evaluate(p)).min().expect("nonempty")
}

/// Exact `(max lower, min upper)` at `dist`.
pub fn evaluate_bound(b: &SymbolicBound, dist: &ObservedDistribution) -> Result<(Rational, Rational), SymbolicError> {
    if dist.legend != b.legend {
        return Err(SymbolicError::LegendMismatch);
    }
    check_distribution(dist)?;
    Ok((max_of(&b.lower, &dist.values), min_of(&b.upper, &dist.values)))
}

/// Floating-point evaluation, with block sums checked to 1e-9.
pub fn evaluate_bound_f64(b: &SymbolicBound, dist: &ObservedDistribution<f64>) -> Result<(f64, f64), SymbolicError> {
    if dist.legend != b.legend {
        return Err(SymbolicError::LegendMismatch);
    }
    for block in 0..dist.legend.block_count() {
        let s: f64 = dist.legend.block_range(block).map(|i| dist.values[i]).sum();
        if (s - 1.0).abs() > 1e-9 || dist.legend.block_range(block).any(|i| dist.values[i] < -1e-12) {
            return Err(SymbolicError::NotADistribution(format!("block {block} sums to {s}")));
        }
    }
    let lo = b.lower.iter().map(|e| e.evaluate_f64(&dist.values)).fold(f64::NEG_INFINITY, f64::max);
    let hi = b.upper.iter().map(|e| e.evaluate_f64(&dist.values)).fold(f64::INFINITY, f64::min);
    Ok((lo, hi))
}

fn canonical_set(exprs: &[AffineExpression], legend: &ObservableIndexer) -> std::collections::BTreeSet<AffineExpression> {
    exprs.iter().map(|e| e.canonical(legend)).collect()
}

/// True when both bounds have the same canonical expression sets, or else
/// when max-lower and min-upper agree exactly at `trials` achievable points.
pub fn equivalent_bounds(a: &SymbolicBound, b: &SymbolicBound, cs: &ConstraintSystem, trials: usize, seed: u64) -> bool {
    if a.legend != b.legend {
        return false;
    }
    if canonical_set(&a.lower, &a.legend) == canonical_set(&b.lower, &b.legend)
        && canonical_set(&a.upper, &a.legend) == canonical_set(&b.upper, &b.legend)
    {
        return true;
    }
    (0..trials as u64).all(|t| {
        let Ok((_, p)) = sample_achievable(cs, seed.wrapping_add(t)) else { return false };
        max_of(&a.lower, &p.values) == max_of(&b.lower, &p.values)
            && min_of(&a.upper, &p.values) == min_of(&b.upper, &p.values)
    })
}

/// `e(P q)` as a row over `q`, with its constant.
fn pulled_back(e: &AffineExpression, cs: &ConstraintSystem) -> (Vec<Rational>, Rational) {
    let mut row = vec![Rational::zero(); cs.aleph()];
    for (b, c) in &e.coefficients {
        for &gamma in cs.row(*b) {
            row[gamma] += c;
        }
    }
    (row, e.constant.clone())
}

/// Whether `candidate` strictly exceeds every expression of `others` at some
/// achievable distribution (`maximize` selects the lower-bound direction).
fn ever_active(candidate: &AffineExpression, others: &[AffineExpression], cs: &ConstraintSystem, maximize: bool) -> bool {
    if others.is_empty() {
        return true;
    }
    let n = cs.aleph();
    // Variables: q (n entries), then s = s_plus - s_minus.
    let (cand_row, cand_const) = pulled_back(candidate, cs);
    let mut rows = Vec::new();
    let mut norm = vec![Rational::one(); n];
    norm.extend([Rational::zero(), Rational::zero()]);
    rows.push(LpRow { coefficients: norm, relation: Relation::Eq, rhs: Rational::one() });
    for r in &cs.extra_rows {
        let mut c = r.coefficients.clone();
        c.extend([Rational::zero(), Rational::zero()]);
        rows.push(LpRow { coefficients: c, relation: r.relation, rhs: r.rhs.clone() });
    }
    for o in others {
        let (row, constant) = pulled_back(o, cs);
        // maximize: cand − o ≥ s.  minimize: o − cand ≥ s.
        let mut coefs: Vec<Rational> = if maximize {
            cand_row.iter().zip(&row).map(|(a, b)| a - b).collect()
        } else {
            row.iter().zip(&cand_row).map(|(a, b)| a - b).collect()
        };
        coefs.extend([-Rational::one(), Rational::one()]);
        let rhs = if maximize { &constant - &cand_const } else { &cand_const - &constant };
        rows.push(LpRow { coefficients: coefs, relation: Relation::Ge, rhs });
    }
    let mut cost = vec![Rational::zero(); n];
    cost.extend([-Rational::one(), Rational::one()]);
    // Cap s so the LP stays bounded when `others` are parallel.
    let mut cap = vec![Rational::zero(); n];
    cap.extend([Rational::one(), -Rational::one()]);
    rows.push(LpRow { coefficients: cap, relation: Relation::Le, rhs: Rational::one() });
    match solve_lp(&cost, &rows) {
        LpOutcome::Optimal { value, .. } => value.is_negative(),
        _ => false,
    }
}

/// Drops expressions that never strictly determine the bound at any
/// achievable distribution, one at a time.
pub fn prune_dominated(bound: &SymbolicBound, cs: &ConstraintSystem) -> SymbolicBound {
    let prune = |exprs: &[AffineExpression], maximize: bool| {
        let mut kept: Vec<AffineExpression> = exprs.to_vec();
        let mut i = 0;
        while i < kept.len() && kept.len() > 1 {
            let others: Vec<AffineExpression> =
                kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, e)| e.clone()).collect();
            if ever_active(&kept[i], &others, cs, maximize) {
                i += 1;
            } else {
                kept.remove(i);
            }
        }
        kept
    };
    SymbolicBound { lower: prune(&bound.lower, true), upper: prune(&bound.upper, false), ..bound.clone() }
}

impl SymbolicBound {
    /// Human-readable layout: one expression per line inside `max { }` and `min { }`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# query: {}", self.query);
        let _ = writeln!(
            out,
            "# tightness: {}",
            match self.tightness {
                Tightness::Tight => "tight",
                Tightness::ValidOnly => "valid, not guaranteed tight",
            }
        );
        let _ = writeln!(out, "# vertices: lower {}, upper {}", self.lower_vertex_count, self.upper_vertex_count);
        if self.conditional {
            let _ = writeln!(out, "# conditional on distribution compatibility");
        }
        for (b, s) in self.legend.symbols().iter().enumerate() {
            let _ = writeln!(out, "# {} = {}", s, self.legend.describe(b));
        }
        out.push_str("\nlower bound:\nmax {\n");
        for e in &self.lower {
            let _ = writeln!(out, "{}", e.simplified(&self.legend).render(&self.legend));
        }
        out.push_str("}\n\nupper bound:\nmin {\n");
        for e in &self.upper {
            let _ = writeln!(out, "{}", e.simplified(&self.legend).render(&self.legend));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, SymbolicError> {
        let doc: BoundJson = serde_json::from_str(text).map_err(|e| SymbolicError::Format(e.to_string()))?;
        Self::from_doc(doc)
    }

    fn to_doc(&self) -> BoundJson {
        let expr = |e: &AffineExpression| ExpressionJson {
            text: e.simplified(&self.legend).render(&self.legend),
            constant: format_rational(&e.constant),
            coefficients: (0..self.legend.len()).map(|b| format_rational(&e.coefficient(b))).collect(),
        };
        BoundJson {
            query: self.query.clone(),
            tightness: self.tightness,
            conditional: self.conditional,
            legend: self.legend.clone(),
            symbols: self.legend.symbols(),
            lower_vertex_count: self.lower_vertex_count,
            upper_vertex_count: self.upper_vertex_count,
            lower: self.lower.iter().map(expr).collect(),
            upper: self.upper.iter().map(expr).collect(),
        }
    }

    fn from_doc(doc: BoundJson) -> Result<Self, SymbolicError> {
        let n = doc.legend.len();
        let expr = |e: &ExpressionJson| -> Result<AffineExpression, SymbolicError> {
            if e.coefficients.len() != n {
                return Err(SymbolicError::Format(format!("expected {n} coefficients")));
            }
            let num = |s: &str| parse_rational(s).ok_or_else(|| SymbolicError::Format(format!("bad number `{s}`")));
            let terms = e.coefficients.iter().enumerate().map(|(b, s)| Ok((b, num(s)?))).collect::<Result<Vec<_>, SymbolicError>>()?;
            Ok(AffineExpression::new(num(&e.constant)?, terms))
        };
        let lower = doc.lower.iter().map(expr).collect::<Result<Vec<_>, _>>()?;
        let upper = doc.upper.iter().map(expr).collect::<Result<Vec<_>, _>>()?;
        if lower.is_empty() || upper.is_empty() {
            return Err(SymbolicError::Format("empty expression list".into()));
        }
        Ok(SymbolicBound {
            query: doc.query,
            lower,
            upper,
            tightness: doc.tightness,
            legend: doc.legend,
            lower_vertex_count: doc.lower_vertex_count,
            upper_vertex_count: doc.upper_vertex_count,
            conditional: doc.conditional,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BoundsFileJson {
    problem_sha256: Option<String>,
    bounds: Vec<BoundJson>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyBoundsJson {
    File(BoundsFileJson),
    Single(Box<BoundJson>),
}

/// JSON document holding every bound of a problem and the hash of the
/// problem text it was compiled from.
pub fn write_bounds_file(problem_sha256: Option<&str>, bounds: &[SymbolicBound]) -> String {
    let doc = BoundsFileJson {
        problem_sha256: problem_sha256.map(str::to_string),
        bounds: bounds.iter().map(SymbolicBound::to_doc).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Reads a bounds file, or a single bound object.
pub fn read_bounds_file(text: &str) -> Result<(Option<String>, Vec<SymbolicBound>), SymbolicError> {
    match serde_json::from_str(text).map_err(|e| SymbolicError::Format(e.to_string()))? {
        AnyBoundsJson::File(f) => {
            let bounds = f.bounds.into_iter().map(SymbolicBound::from_doc).collect::<Result<Vec<_>, _>>()?;
            Ok((f.problem_sha256, bounds))
        }
        AnyBoundsJson::Single(b) => Ok((None, vec![SymbolicBound::from_doc(*b)?])),
    }
}

#[derive(Serialize, Deserialize)]
struct ExpressionJson {
    text: String,
    constant: String,
    coefficients: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct BoundJson {
    query: String,
    tightness: Tightness,
    conditional: bool,
    legend: ObservableIndexer,
    symbols: Vec<String>,
    lower_vertex_count: usize,
    upper_vertex_count: usize,
    lower: Vec<ExpressionJson>,
    upper: Vec<ExpressionJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn xy() -> ObservableIndexer {
        ObservableIndexer::from_parts(vec![], vec![("X".into(), 3), ("Y".into(), 2)])
    }

    #[test]
    fn parse_render_round_trip() {
        let legend = xy();
        for text in ["p00 + p11 - 1", "1 - p10 - p01", "- p10 - p20 - p01 - p11", "2 p00 - 1/2 p21 + 3", "0"] {
            let e = AffineExpression::parse(text, &legend).unwrap();
            let again = AffineExpression::parse(&e.render(&legend), &legend).unwrap();
            assert_eq!(e, again, "{text}");
        }
        let e = AffineExpression::parse("1 - p10 - p01", &legend).unwrap();
        assert_eq!(e.render(&legend), "- p10 - p01 + 1");
        assert!(AffineExpression::parse("p00 +", &legend).is_err());
        assert!(AffineExpression::parse("p99", &legend).is_err());
        assert!(AffineExpression::parse("2*p00 - 1", &legend).is_ok());
    }

    #[test]
    fn canonical_form() {
        let legend = xy();
        let a = AffineExpression::parse("p00 + p11 - 1", &legend).unwrap();
        let b = AffineExpression::parse("- p10 - p20 - p01 - p21", &legend).unwrap();
        assert_eq!(a.canonical(&legend), b.canonical(&legend));
        let c = a.canonical(&legend);
        assert_eq!(c.canonical(&legend), c);
        assert_eq!(b.simplified(&legend), a.simplified(&legend));
    }

    #[test]
    fn evaluation_and_distribution_checks() {
        let legend = xy();
        let bound = SymbolicBound {
            query: "q".into(),
            lower: vec![
                AffineExpression::parse("p00 + p11 - 1", &legend).unwrap(),
                AffineExpression::constant(int(-1)),
            ],
            upper: vec![AffineExpression::parse("1 - p10 - p01", &legend).unwrap()],
            tightness: Tightness::Tight,
            legend: legend.clone(),
            lower_vertex_count: 2,
            upper_vertex_count: 1,
            conditional: false,
        };
        let d = ObservedDistribution::new(
            legend.clone(),
            vec![ratio(3, 10), ratio(1, 5), int(0), ratio(1, 10), ratio(2, 5), int(0)],
        );
        assert_eq!(evaluate_bound(&bound, &d).unwrap(), (ratio(-3, 10), ratio(7, 10)));
        let bad = ObservedDistribution::new(legend.clone(), vec![int(1); 6]);
        assert!(matches!(evaluate_bound(&bound, &bad), Err(SymbolicError::NotADistribution(_))));
        let back = SymbolicBound::from_json(&bound.to_json()).unwrap();
        assert_eq!(back, bound);
        let file = write_bounds_file(Some("abc"), std::slice::from_ref(&bound));
        assert_eq!(read_bounds_file(&file).unwrap(), (Some("abc".to_string()), vec![bound.clone()]));
        assert_eq!(read_bounds_file(&bound.to_json()).unwrap().1, vec![bound.clone()]);
        let file = DistributionFile { legend: None, entries: BTreeMap::from([("p00".to_string(), int(1))]) };
        assert!(matches!(complete_distribution(&legend, &file), Err(SymbolicError::MissingProbability(_))));
    }
}
