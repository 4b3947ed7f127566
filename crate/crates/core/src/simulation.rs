//! Simulation study comparing one binary instrument, two binary instruments
//! and one four-level instrument on distributions drawn from the probit model.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::oracle::{marginalize_instrument, probit_to_distribution, relabel_as_four_level, ProbitScm};
use crate::problem::{builtin, compile_text, CompileOptions};
use crate::symbolic::{evaluate_bound_f64, SymbolicBound};

pub const TOLERANCE: f64 = 1e-9;

/// The three compiled risk-difference bounds.
#[derive(Clone, Debug)]
pub struct StudyBounds {
    pub single: SymbolicBound,
    pub two: SymbolicBound,
    pub four: SymbolicBound,
}

pub fn study_bounds(opts: &CompileOptions) -> Result<StudyBounds> {
    let first = |text: &str| -> Result<SymbolicBound> { Ok(compile_text(text, opts)?.bounds.remove(0)) };
    Ok(StudyBounds {
        single: first(builtin::SINGLE_INSTRUMENT)?,
        two: first(builtin::TWO_INSTRUMENTS)?,
        four: first(builtin::FOUR_LEVEL_INSTRUMENT)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn within(&self, outer: &Interval, tol: f64) -> bool {
        self.lower >= outer.lower - tol && self.upper <= outer.upper + tol
    }

    pub fn matches(&self, other: &Interval, tol: f64) -> bool {
        (self.lower - other.lower).abs() <= tol && (self.upper - other.upper).abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replicate {
    pub rep: usize,
    pub single: Interval,
    pub two: Interval,
    pub four: Interval,
}

impl Replicate {
    pub fn contained(&self) -> bool {
        self.two.within(&self.single, TOLERANCE)
    }

    pub fn four_level_equal(&self) -> bool {
        self.two.matches(&self.four, TOLERANCE)
    }
}

#[derive(Clone, Debug, Default)]
pub struct StudyReport {
    pub replicates: Vec<Replicate>,
    /// Replicates skipped because an instrument cell had vanishing probability.
    pub degenerate: usize,
}

impl StudyReport {
    pub fn containment_failures(&self) -> Vec<&Replicate> {
        self.replicates.iter().filter(|r| !r.contained()).collect()
    }

    pub fn equality_failures(&self) -> Vec<&Replicate> {
        self.replicates.iter().filter(|r| !r.four_level_equal()).collect()
    }

    pub fn passed(&self) -> bool {
        self.containment_failures().is_empty() && self.equality_failures().is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "rep,single_lower,single_upper,single_width,two_lower,two_upper,two_width,four_lower,four_upper,four_width\n",
        );
        for r in &self.replicates {
            let _ = write!(out, "{}", r.rep);
            for i in [r.single, r.two, r.four] {
                let _ = write!(out, ",{},{},{}", i.lower, i.upper, i.width());
            }
            out.push('\n');
        }
        out
    }
}

fn interval(b: &SymbolicBound, d: &crate::oracle::ObservedDistribution<f64>) -> Result<Interval> {
    let (lower, upper) = evaluate_bound_f64(b, d)?;
    Ok(Interval { lower, upper })
}

/// `reps` replicates from one seeded stream.
pub fn run_study(bounds: &StudyBounds, reps: usize, seed: u64) -> Result<StudyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = StudyReport::default();
    for rep in 0..reps {
        let scm = ProbitScm::sample(&mut rng);
        match run_replicate(bounds, &scm, rep) {
            Ok(r) => report.replicates.push(r),
            Err(crate::error::Error::Oracle(crate::oracle::OracleError::DegenerateConditioning { .. })) => {
                report.degenerate += 1
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

pub fn run_replicate(bounds: &StudyBounds, scm: &ProbitScm, rep: usize) -> Result<Replicate> {
    let d = probit_to_distribution(scm)?;
    let single = marginalize_instrument(&d, &scm.instrument_weights())?;
    let four = relabel_as_four_level(&d);
    Ok(Replicate {
        rep,
        single: interval(&bounds.single, &single)?,
        two: interval(&bounds.two, &d)?,
        four: interval(&bounds.four, &four)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_gives_equal_widths() {
        let bounds = study_bounds(&CompileOptions::default()).unwrap();
        let r = run_replicate(&bounds, &ProbitScm::zero(), 0).unwrap();
        assert!(r.single.matches(&r.two, TOLERANCE));
        assert!(r.four_level_equal());
    }

    #[test]
    fn small_study() {
        let bounds = study_bounds(&CompileOptions::default()).unwrap();
        let a = run_study(&bounds, 25, 3).unwrap();
        assert!(a.passed(), "{:?}", a.containment_failures());
        let b = run_study(&bounds, 25, 3).unwrap();
        assert_eq!(a.replicates, b.replicates);
        assert_eq!(a.to_csv().lines().count(), 26);
    }
}
