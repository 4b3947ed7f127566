//! Symbolic bounds on counterfactual queries over categorical causal graphs.
//!
//! The pipeline turns a graph and a query into response-function variables,
//! a linear program over their distribution, the dual of that program, and
//! finally the vertices of the dual polyhedron. Each vertex is an affine
//! expression in the observed conditional probabilities; the lower bound is
//! the maximum of the Min-dual expressions and the upper bound the minimum
//! of the Max-dual expressions.
//!
//! ```
//! use causalbound::problem::{builtin, compile_text, CompileOptions};
//!
//! let compiled = compile_text(builtin::MEASUREMENT_ERROR, &CompileOptions::default()).unwrap();
//! println!("{}", compiled.bounds[0].to_text());
//! ```

pub mod canonical;
pub mod constraints;
pub mod error;
pub mod evaluator;
pub mod model;
pub mod oracle;
pub mod polytope;
pub mod problem;
pub mod querylang;
pub mod rational;
pub mod simulation;
pub mod symbolic;

pub use canonical::{build_response_space, ResponseFunctionTable, ResponseSpace};
pub use constraints::{build_constraint_system, ConstraintSystem, ObservableIndexer};
pub use error::{Error, ParseError, Result};
pub use evaluator::{build_objective, ObjectiveVector};
pub use model::{parse_graph, CausalGraph, Side, Tightness, ValidationReport};
pub use oracle::ObservedDistribution;
pub use problem::{compile, compile_text, parse_problem, CompileOptions, CompiledProblem, Problem};
pub use querylang::{parse_constraint, parse_query, QueryExpr, UserConstraint};
pub use rational::Rational;
pub use symbolic::{AffineExpression, SymbolicBound};
