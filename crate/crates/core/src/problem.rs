//! Problem files and the end-to-end compilation pipeline.
//!
//! A problem file has up to three sections separated by `%%` lines: the
//! graph DSL, one or more `query:` lines, and zero or more `constraint:`
//! lines.
//!
//! ```text
//! var X : 2 left
//! var Y : 2
//! var Y2 : 2
//! edge X -> Y -> Y2
//! confound right
//! unobserved Y
//! %%
//! query: P{Y(X=1)=1} - P{Y(X=0)=1}
//! %%
//! constraint: Y2(Y=1) >= Y2(Y=0)
//! ```

use crate::canonical::{build_response_space, ResponseSpace, DEFAULT_MAX_ROWS};
use crate::constraints::{build_constraint_system, ConstraintSystem, DEFAULT_MAX_CELLS};
use crate::error::{Error, ParseError, Result};
use crate::evaluator::{build_objective, compile_extra_rows, ObjectiveVector};
use crate::model::{
    informativeness_lint, parse_graph, validate_graph, validate_query_against_graph, CausalGraph, LintReport,
    ValidationReport,
};
use crate::polytope::{assemble_primal, dualize, enumerate_vertices, DdOptions, DualVertexSet, LinearProgram, Sense};
use crate::oracle::{sample_achievable, solve_primal, ObservedDistribution};
use crate::querylang::{parse_constraint, parse_query, QueryExpr, UserConstraint};
use crate::rational::Rational;
use crate::symbolic::{evaluate_bound, vertices_to_bound, SymbolicBound};

#[derive(Clone, Debug)]
pub struct Problem {
    pub graph: CausalGraph,
    pub queries: Vec<(String, QueryExpr)>,
    pub constraints: Vec<(String, UserConstraint)>,
}

/// Splits on `%%` lines, keeping the first line number of each section.
fn sections(text: &str) -> Vec<(usize, String)> {
    let mut out = vec![(1, String::new())];
    for (i, line) in text.lines().enumerate() {
        if line.trim() == "%%" {
            out.push((i + 2, String::new()));
        } else {
            let last = out.last_mut().expect("nonempty");
            last.1.push_str(line);
            last.1.push('\n');
        }
    }
    out
}

/// `keyword: body` lines of a section, comments and blank lines skipped.
fn keyed_lines<'a>(
    section: &'a str,
    first_line: usize,
    keyword: &str,
) -> Result<Vec<(usize, usize, &'a str)>, ParseError> {
    let mut out = Vec::new();
    for (offset, raw) in section.lines().enumerate() {
        let line_no = first_line + offset;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(body) = trimmed.strip_prefix(keyword).and_then(|r| r.trim_start().strip_prefix(':')) else {
            return Err(ParseError::syntax(line_no, raw.len() - trimmed.len() + 1, format!("expected `{keyword}:`")));
        };
        let column = raw.len() - body.len() + 1;
        out.push((line_no, column, body.trim()));
    }
    Ok(out)
}

fn shift(e: ParseError, line: usize, column: usize) -> ParseError {
    match e {
        ParseError::Syntax { column: c, message, .. } => {
            ParseError::Syntax { line, column: c + column - 1, message }
        }
        ParseError::UnknownVariable { name, column: c, .. } => {
            ParseError::UnknownVariable { name, line, column: c + column - 1 }
        }
        other => other,
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let parts = sections(text);
    if parts.len() < 2 || parts.len() > 3 {
        return Err(ParseError::syntax(
            1,
            1,
            "a problem needs a graph section and a query section separated by `%%`",
        ));
    }
    let graph = parse_graph(&parts[0].1).map_err(|e| e.at_line(parts[0].0))?;
    let mut queries = Vec::new();
    for (line, column, body) in keyed_lines(&parts[1].1, parts[1].0, "query")? {
        let q = parse_query(body, &graph).map_err(|e| shift(e, line, column))?;
        queries.push((body.to_string(), q));
    }
    if queries.is_empty() {
        return Err(ParseError::syntax(parts[1].0, 1, "no `query:` line"));
    }
    let mut constraints = Vec::new();
    if let Some((first, section)) = parts.get(2) {
        for (line, column, body) in keyed_lines(section, *first, "constraint")? {
            let c = parse_constraint(body, &graph).map_err(|e| shift(e, line, column))?;
            constraints.push((body.to_string(), c));
        }
    }
    Ok(Problem { graph, queries, constraints })
}

#[derive(Clone, Copy, Debug)]
pub struct CompileOptions {
    pub max_rows: u64,
    pub max_cells: u64,
    pub dd: DdOptions,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { max_rows: DEFAULT_MAX_ROWS, max_cells: DEFAULT_MAX_CELLS, dd: DdOptions::default() }
    }
}

/// Validation outcome of a whole problem.
#[derive(Clone, Debug, Default)]
pub struct ProblemReport {
    pub validation: ValidationReport,
    pub lint: LintReport,
}

pub fn check_problem(p: &Problem) -> Result<ProblemReport> {
    let mut validation = validate_graph(&p.graph);
    let mut lint = LintReport::default();
    if validation.passed() {
        for (_, q) in &p.queries {
            let r = validate_query_against_graph(&p.graph, q)?;
            validation.errors.extend(r.errors);
            lint.warnings.extend(informativeness_lint(&p.graph, q).warnings);
        }
    }
    Ok(ProblemReport { validation, lint })
}

/// One query's objective and its two primal LPs.
#[derive(Clone, Debug)]
pub struct PreparedQuery {
    pub text: String,
    pub query: QueryExpr,
    pub objective: ObjectiveVector,
    pub min_lp: LinearProgram,
    pub max_lp: LinearProgram,
}

/// Everything up to (not including) dualization.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    pub problem: Problem,
    pub report: ProblemReport,
    pub space: ResponseSpace,
    pub system: ConstraintSystem,
    pub queries: Vec<PreparedQuery>,
}

pub fn prepare(problem: &Problem, opts: &CompileOptions) -> Result<PreparedProblem> {
    let report = check_problem(problem)?;
    if !report.validation.passed() {
        return Err(Error::Validation(report.validation.errors));
    }
    let g = &problem.graph;
    let constraints: Vec<UserConstraint> = problem.constraints.iter().map(|(_, c)| c.clone()).collect();
    let space = build_response_space(g, &constraints, opts.max_rows)?;
    let mut system = build_constraint_system(g, &space, opts.max_cells)?;
    system.extra_rows = compile_extra_rows(g, &space, space.deferred())?;
    let mut queries = Vec::new();
    for (text, q) in &problem.queries {
        let objective = build_objective(g, &space, q)?;
        queries.push(PreparedQuery {
            text: text.clone(),
            query: q.clone(),
            min_lp: assemble_primal(&system, &objective, Sense::Min)?,
            max_lp: assemble_primal(&system, &objective, Sense::Max)?,
            objective,
        });
    }
    Ok(PreparedProblem { problem: problem.clone(), report, space, system, queries })
}

/// Dual vertex sets of one query, Min (lower bound) then Max (upper bound).
pub fn dual_vertices(q: &PreparedQuery, opts: &CompileOptions) -> Result<(DualVertexSet, DualVertexSet)> {
    let lower = enumerate_vertices(&dualize(&q.min_lp), &opts.dd)?;
    let upper = enumerate_vertices(&dualize(&q.max_lp), &opts.dd)?;
    Ok((lower, upper))
}

/// A prepared problem together with one symbolic bound per query.
#[derive(Clone, Debug)]
pub struct CompiledProblem {
    pub prepared: PreparedProblem,
    pub bounds: Vec<SymbolicBound>,
}

pub fn compile(problem: &Problem, opts: &CompileOptions) -> Result<CompiledProblem> {
    let prepared = prepare(problem, opts)?;
    let tightness = prepared.report.validation.tightness();
    let mut bounds = Vec::new();
    for q in &prepared.queries {
        let (lower, upper) = dual_vertices(q, opts)?;
        bounds.push(vertices_to_bound(&lower, &upper, &prepared.system.indexer, &q.text, tightness));
    }
    Ok(CompiledProblem { prepared, bounds })
}

/// A sampled `q` at which the symbolic bound disagrees with the oracle.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub trial: usize,
    pub q: Vec<Rational>,
    pub p: ObservedDistribution,
    pub symbolic: (Rational, Rational),
    pub oracle: (Rational, Rational),
    pub truth: Rational,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub trials: usize,
    pub failures: Vec<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares `bound` with the exact primal optima at `trials` achievable
/// distributions `p = P q`, and checks that `α·q` lies inside the bound.
pub fn verify_query(
    bound: &SymbolicBound,
    q: &PreparedQuery,
    system: &ConstraintSystem,
    trials: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mut report = VerifyReport { trials, failures: Vec::new() };
    for trial in 0..trials {
        let (qv, p) = sample_achievable(system, seed.wrapping_add(trial as u64))?;
        let symbolic = evaluate_bound(bound, &p)?;
        let oracle = (solve_primal(&q.min_lp, &p.values)?, solve_primal(&q.max_lp, &p.values)?);
        let truth = q.objective.dot(&qv);
        if symbolic != oracle || truth < symbolic.0 || truth > symbolic.1 {
            report.failures.push(Counterexample { trial, q: qv, p, symbolic, oracle, truth });
        }
    }
    Ok(report)
}

pub fn compile_text(text: &str, opts: &CompileOptions) -> Result<CompiledProblem> {
    compile(&parse_problem(text)?, opts)
}

/// Built-in problems from the worked examples.
pub mod builtin {
    /// Ternary exposure and binary outcome sharing a latent cause; three
    /// risk differences.
    pub const CONFOUNDED_TERNARY: &str = "\
# Confounded ternary exposure X and binary outcome Y
var X : 3
var Y : 2
edge X -> Y
confound U { X, Y }
%%
query: P{Y(X=1)=1} - P{Y(X=0)=1}
query: P{Y(X=2)=1} - P{Y(X=0)=1}
query: P{Y(X=2)=1} - P{Y(X=1)=1}
";

    /// Outcome observed only through a confounded measurement `Y2`, under
    /// monotone measurement.
    pub const MEASUREMENT_ERROR: &str = "\
# X affects the unobserved Y, measured with error as Y2
var X : 2 left
var Y : 2
var Y2 : 2
edge X -> Y -> Y2
confound left
confound U_r { Y, Y2 }
unobserved Y
%%
query: P{Y(X=1)=1} - P{Y(X=0)=1}
%%
constraint: Y2(Y=1) >= Y2(Y=0)
";

    /// Two associated binary instruments.
    pub const TWO_INSTRUMENTS: &str = "\
# Two binary instruments Z1, Z2 for the effect of X on Y
var Z1 : 2 left
var Z2 : 2 left
var X : 2
var Y : 2
edge Z2 -> Z1
edge Z1 -> X
edge Z2 -> X
edge X -> Y
confound U_l { Z1, Z2 }
confound U_r { X, Y }
%%
query: P{Y(X=1)=1} - P{Y(X=0)=1}
";

    /// The classic binary instrument.
    pub const SINGLE_INSTRUMENT: &str = "\
# One binary instrument Z1
var Z1 : 2 left
var X : 2
var Y : 2
edge Z1 -> X -> Y
confound U_r { X, Y }
%%
query: P{Y(X=1)=1} - P{Y(X=0)=1}
";

    /// One instrument with four levels.
    pub const FOUR_LEVEL_INSTRUMENT: &str = "\
# One four-level instrument Z3
var Z3 : 4 left
var X : 2
var Y : 2
edge Z3 -> X -> Y
confound U_r { X, Y }
%%
query: P{Y(X=1)=1} - P{Y(X=0)=1}
";

    /// `(file name, text)` for every built-in problem.
    pub const ALL: [(&str, &str); 5] = [
        ("confounded_ternary.cb", CONFOUNDED_TERNARY),
        ("measurement_error.cb", MEASUREMENT_ERROR),
        ("two_instruments.cb", TWO_INSTRUMENTS),
        ("single_instrument.cb", SINGLE_INSTRUMENT),
        ("four_level_instrument.cb", FOUR_LEVEL_INSTRUMENT),
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let p = parse_problem(builtin::MEASUREMENT_ERROR).unwrap();
        assert_eq!(p.queries.len(), 1);
        assert_eq!(p.constraints.len(), 1);
        let p = parse_problem(builtin::CONFOUNDED_TERNARY).unwrap();
        assert_eq!(p.queries.len(), 3);
        assert!(p.constraints.is_empty());
    }

    #[test]
    fn errors_point_into_the_file() {
        let text = "var X : 2\nvar Y : 2\nedge X -> Y\n%%\nquery: P{Y(X=1)=1} - P{Q=1}\n";
        match parse_problem(text).unwrap_err() {
            ParseError::UnknownVariable { line, column, .. } => {
                assert_eq!(line, 5);
                assert_eq!(column, 23);
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(parse_problem("var X : 2\n").unwrap_err(), ParseError::Syntax { .. }));
        let e = parse_problem("var X : 2\nvar Y:2\n%%\nquery: P{Y=1}\n%%\nconstrain: x\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 6, .. }));
    }

    #[test]
    fn pipeline_on_measurement_error() {
        let c = compile_text(builtin::MEASUREMENT_ERROR, &CompileOptions::default()).unwrap();
        assert_eq!(c.prepared.space.aleph(), 12);
        assert_eq!(c.prepared.system.p_len(), 4);
        assert_eq!(c.bounds[0].lower.len(), 2);
        assert_eq!(c.bounds[0].upper.len(), 2);
        let r = verify_query(&c.bounds[0], &c.prepared.queries[0], &c.prepared.system, 20, 1).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn refuses_invalid_graphs() {
        let text = "var Z : 2 left\nvar X : 2\nedge X -> Z\n%%\nquery: P{X(Z=1)=1}\n";
        assert!(matches!(compile_text(text, &CompileOptions::default()), Err(Error::Validation(_))));
    }
}
