mod common;

use causalbound::oracle::{parse_distribution_tsv, relabel_as_four_level, sample_achievable, solve_primal};
use causalbound::problem::{builtin, compile_text, CompileOptions};
use causalbound::rational::ratio;
use causalbound::symbolic::{
    complete_distribution, equivalent_bounds, evaluate_bound, prune_dominated, read_bounds_file, write_bounds_file,
    AffineExpression, SymbolicError,
};
use causalbound::{parse_problem, Error, ParseError, Rational, SymbolicBound};

fn compile(text: &str) -> causalbound::CompiledProblem {
    compile_text(text, &CompileOptions::default()).unwrap()
}

const TERNARY_EXAMPLE: &str = "# left\n# right X:3 Y:2\n-\t00\t3/10\n-\t11\t2/5\n-\t10\t1/5\n-\t01\t1/10\n-\t20\t0\n-\t21\t0\n";

#[test]
fn ternary_example_distribution() {
    let c = compile(builtin::CONFOUNDED_TERNARY);
    let b = &c.bounds[0];
    let d = complete_distribution(&b.legend, &parse_distribution_tsv(TERNARY_EXAMPLE).unwrap()).unwrap();
    assert_eq!(evaluate_bound(b, &d).unwrap(), (ratio(-3, 10), ratio(7, 10)));
    let q = &c.prepared.queries[0];
    assert_eq!(solve_primal(&q.min_lp, &d.values).unwrap(), ratio(-3, 10));
    assert_eq!(solve_primal(&q.max_lp, &d.values).unwrap(), ratio(7, 10));
}

#[test]
fn measurement_error_uninformative_at_equal_conditionals() {
    let c = compile(builtin::MEASUREMENT_ERROR);
    let b = &c.bounds[0];
    let tsv = "0\t0\t1/3\n0\t1\t2/3\n1\t0\t1/3\n1\t1\t2/3\n";
    let d = complete_distribution(&b.legend, &parse_distribution_tsv(tsv).unwrap()).unwrap();
    assert_eq!(evaluate_bound(b, &d).unwrap(), (ratio(-1, 1), ratio(1, 1)));
    let tsv = "0\t0\t3/4\n0\t1\t1/4\n1\t0\t1/4\n1\t1\t3/4\n";
    let d = complete_distribution(&b.legend, &parse_distribution_tsv(tsv).unwrap()).unwrap();
    assert_eq!(evaluate_bound(b, &d).unwrap(), (ratio(0, 1), ratio(1, 1)));
}

#[test]
fn distribution_errors() {
    let c = compile(builtin::CONFOUNDED_TERNARY);
    let b = &c.bounds[0];
    let missing = parse_distribution_tsv("-\t00\t1\n").unwrap();
    assert!(matches!(complete_distribution(&b.legend, &missing), Err(SymbolicError::MissingProbability(_))));

    let short = TERNARY_EXAMPLE.replace("3/10", "1/10");
    let d = complete_distribution(&b.legend, &parse_distribution_tsv(&short).unwrap()).unwrap();
    assert!(matches!(evaluate_bound(b, &d), Err(SymbolicError::NotADistribution(_))));

    let negative = TERNARY_EXAMPLE.replace("-\t20\t0", "-\t20\t-1/10").replace("3/10", "2/5");
    let d = complete_distribution(&b.legend, &parse_distribution_tsv(&negative).unwrap()).unwrap();
    assert!(matches!(evaluate_bound(b, &d), Err(SymbolicError::NotADistribution(_))));

    let wrong = TERNARY_EXAMPLE.replace("X:3", "X:2");
    assert_eq!(
        complete_distribution(&b.legend, &parse_distribution_tsv(&wrong).unwrap()),
        Err(SymbolicError::LegendMismatch)
    );
}

#[test]
fn four_level_instrument_matches_two_instruments_exactly() {
    let two = compile(builtin::TWO_INSTRUMENTS);
    let four = compile(builtin::FOUR_LEVEL_INSTRUMENT);
    for seed in 0..200 {
        let (_, p) = sample_achievable(&two.prepared.system, seed).unwrap();
        let relabelled = relabel_as_four_level(&p);
        assert_eq!(evaluate_bound(&two.bounds[0], &p).unwrap(), evaluate_bound(&four.bounds[0], &relabelled).unwrap());
    }
}

#[test]
fn single_instrument_has_eight_expressions_per_side() {
    let b = &compile(builtin::SINGLE_INSTRUMENT).bounds[0];
    assert_eq!((b.lower.len(), b.upper.len()), (8, 8));
    assert!(b.conditional);
    assert!(!compile(builtin::CONFOUNDED_TERNARY).bounds.iter().any(|b| b.conditional));
}

#[test]
fn pruning_preserves_values() {
    let c = compile(builtin::SINGLE_INSTRUMENT);
    let b = &c.bounds[0];
    let pruned = prune_dominated(b, &c.prepared.system);
    assert!(pruned.lower.len() <= b.lower.len() && pruned.upper.len() <= b.upper.len());
    for seed in 0..100 {
        let (_, p) = sample_achievable(&c.prepared.system, seed).unwrap();
        assert_eq!(evaluate_bound(b, &p).unwrap(), evaluate_bound(&pruned, &p).unwrap());
    }
    assert!(equivalent_bounds(b, &pruned, &c.prepared.system, 200, 9));
}

#[test]
fn differing_bounds_are_not_equivalent() {
    let c = compile(builtin::CONFOUNDED_TERNARY);
    let b = &c.bounds[0];
    let mut other = b.clone();
    other.upper.push(AffineExpression::parse("1/2", &b.legend).unwrap());
    assert!(!equivalent_bounds(b, &other, &c.prepared.system, 200, 0));
    let mut reordered = b.clone();
    reordered.lower.reverse();
    assert!(equivalent_bounds(b, &reordered, &c.prepared.system, 0, 0));
}

#[test]
fn bounds_file_round_trip() {
    let c = compile(builtin::CONFOUNDED_TERNARY);
    let text = write_bounds_file(Some("abc"), &c.bounds);
    let (sha, back) = read_bounds_file(&text).unwrap();
    assert_eq!(sha.as_deref(), Some("abc"));
    assert_eq!(back, c.bounds);
    let single = SymbolicBound::from_json(&c.bounds[1].to_json()).unwrap();
    assert_eq!(single, c.bounds[1]);
    assert!(matches!(read_bounds_file("{"), Err(SymbolicError::Format(_))));
}

#[test]
fn text_layout() {
    let b = &compile(builtin::MEASUREMENT_ERROR).bounds[0];
    let text = b.to_text();
    assert!(text.contains("lower bound:\nmax {\n"));
    assert!(text.contains("upper bound:\nmin {\n"));
    assert!(text.contains("# tightness"));
}

#[test]
fn problem_errors() {
    let cross = "var Z:2 left\nvar X:2\nedge X -> Z\n%%\nquery: P{X(Z=1)=1}\n";
    assert!(matches!(compile_text(cross, &CompileOptions::default()), Err(Error::Validation(_))));

    let unknown = "var X:2\nvar Y:2\nedge X -> Y\n%%\nquery: P{Y(W=1)=1}\n";
    match parse_problem(unknown) {
        Err(ParseError::UnknownVariable { name, line, .. }) => assert_eq!((name.as_str(), line), ("W", 5)),
        other => panic!("{other:?}"),
    }

    let left_outcome = "var Z:2 left\nvar X:2\nedge Z -> X\n%%\nquery: P{Z=1}\n";
    assert!(matches!(compile_text(left_outcome, &CompileOptions::default()), Err(Error::Validation(_))));

    let tiny = CompileOptions { max_cells: 4, ..CompileOptions::default() };
    assert!(compile_text(builtin::TWO_INSTRUMENTS, &tiny).is_err());
}

#[test]
fn monotonicity_constraint_narrows_bounds() {
    let free = builtin::MEASUREMENT_ERROR.replace("constraint: Y2(Y=1) >= Y2(Y=0)", "");
    let free = compile(&free);
    let constrained = compile(builtin::MEASUREMENT_ERROR);
    let (_, p) = sample_achievable(&constrained.prepared.system, 4).unwrap();
    let (lo_c, hi_c) = evaluate_bound(&constrained.bounds[0], &p).unwrap();
    let (lo_f, hi_f) = evaluate_bound(&free.bounds[0], &p).unwrap();
    assert!(lo_f <= lo_c && hi_c <= hi_f);
    assert_eq!((lo_f, hi_f), (Rational::from_integer((-1).into()), Rational::from_integer(1.into())));
}
