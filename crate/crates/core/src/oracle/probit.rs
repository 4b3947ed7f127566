//! The two-instrument probit simulation model and the instrument
//! marginalization/relabeling used to compare bounds across designs.

use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ObservedDistribution, OracleError};
use crate::constraints::ObservableIndexer;
use crate::rational::{format_rational, Rational};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Binary latent `U_l`, `U_r` with probit links:
/// `Z2 ~ Φ(α1 + α2 U_l)`, `Z1 ~ Φ(α3 + α4 U_l + α5 Z2)`,
/// `X ~ Φ(β1 + β2 U_r + β3 Z1 + β4 Z2)`, `Y ~ Φ(γ1 + γ2 U_r + γ3 X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbitScm {
    pub pu_l: f64,
    pub pu_r: f64,
    pub alpha: [f64; 5],
    pub beta: [f64; 4],
    pub gamma: [f64; 3],
}

impl ProbitScm {
    /// Latent probabilities uniform on (0, 1); coefficients normal with sd 2.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 2.0).expect("valid normal");
        let pu_l = rng.random::<f64>();
        let pu_r = rng.random::<f64>();
        let mut draw = || normal.sample(rng);
        let alpha = [draw(), draw(), draw(), draw(), draw()];
        let beta = [draw(), draw(), draw(), draw()];
        let gamma = [draw(), draw(), draw()];
        ProbitScm { pu_l, pu_r, alpha, beta, gamma }
    }

    pub fn zero() -> Self {
        ProbitScm { pu_l: 0.5, pu_r: 0.5, alpha: [0.0; 5], beta: [0.0; 4], gamma: [0.0; 3] }
    }

    fn bernoulli(p1: f64, v: u32) -> f64 {
        if v == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    fn p_u(p: f64, u: u32) -> f64 {
        Self::bernoulli(p, u)
    }

    /// `P{Z1 = z1, Z2 = z2, U_l = ul}`.
    fn instrument_joint(&self, z1: u32, z2: u32, ul: u32) -> f64 {
        let a = &self.alpha;
        let pz2 = phi(a[0] + a[1] * ul as f64);
        let pz1 = phi(a[2] + a[3] * ul as f64 + a[4] * z2 as f64);
        Self::p_u(self.pu_l, ul) * Self::bernoulli(pz2, z2) * Self::bernoulli(pz1, z1)
    }

    /// `P{X = x, Y = y | Z1, Z2, U_r = ur}` times `P{U_r = ur}`.
    fn outcome_joint(&self, x: u32, y: u32, z1: u32, z2: u32, ur: u32) -> f64 {
        let b = &self.beta;
        let g = &self.gamma;
        let px = phi(b[0] + b[1] * ur as f64 + b[2] * z1 as f64 + b[3] * z2 as f64);
        let py = phi(g[0] + g[1] * ur as f64 + g[2] * x as f64);
        Self::p_u(self.pu_r, ur) * Self::bernoulli(px, x) * Self::bernoulli(py, y)
    }

    /// `P{Z1 = z1, Z2 = z2}`, indexed `[z1][z2]`.
    pub fn instrument_marginal(&self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (z1, row) in m.iter_mut().enumerate() {
            for (z2, cell) in row.iter_mut().enumerate() {
                *cell = (0..2).map(|ul| self.instrument_joint(z1 as u32, z2 as u32, ul)).sum();
            }
        }
        m
    }

    /// `P{Z2 = z2 | Z1 = z1}`.
    pub fn instrument_weights(&self) -> InstrumentWeights<f64> {
        let m = self.instrument_marginal();
        InstrumentWeights {
            weights: m
                .iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    row.iter().map(|v| v / total).collect()
                })
                .collect(),
        }
    }
}

/// Legend of `P{X, Y | Z1, Z2}`.
pub fn two_instrument_legend() -> ObservableIndexer {
    ObservableIndexer::from_parts(
        vec![("Z1".into(), 2), ("Z2".into(), 2)],
        vec![("X".into(), 2), ("Y".into(), 2)],
    )
}

/// `P{X, Y | Z1, Z2}` from the full joint over `(U_l, U_r, Z1, Z2, X, Y)`.
pub fn probit_to_distribution(m: &ProbitScm) -> Result<ObservedDistribution<f64>, OracleError> {
    let legend = two_instrument_legend();
    let mut values = vec![0.0; legend.len()];
    let marginal = m.instrument_marginal();
    for block in 0..legend.block_count() {
        let z = legend.left_assignment(block);
        let (z1, z2) = (z[0], z[1]);
        let pz = marginal[z1 as usize][z2 as usize];
        if pz.is_nan() || pz <= 1e-300 {
            return Err(OracleError::DegenerateConditioning { block: format!("Z1={z1}, Z2={z2}"), value: pz });
        }
        for b in legend.block_range(block) {
            let w = legend.right_assignment(b);
            let (x, y) = (w[0], w[1]);
            let mut joint = 0.0;
            for ul in 0..2 {
                let zpart = m.instrument_joint(z1, z2, ul);
                for ur in 0..2 {
                    joint += zpart * m.outcome_joint(x, y, z1, z2, ur);
                }
            }
            values[b] = joint / pz;
        }
    }
    Ok(ObservedDistribution::new(legend, values))
}

/// Probability arithmetic used by marginalization, exact for rationals.
pub trait Probability: Clone + Zero + One + std::ops::Mul<Output = Self> + std::ops::Add<Output = Self> {
    fn is_unit_sum(&self) -> bool;
    fn describe(&self) -> String;
}

impl Probability for f64 {
    fn is_unit_sum(&self) -> bool {
        (self - 1.0).abs() <= 1e-9
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl Probability for Rational {
    fn is_unit_sum(&self) -> bool {
        self.is_one()
    }

    fn describe(&self) -> String {
        format_rational(self)
    }
}

/// `weights[rest][z]`: the probability of value `z` of the last left
/// variable given the block `rest` of the remaining left variables.
#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentWeights<T> {
    pub weights: Vec<Vec<T>>,
}

/// Averages out the last left variable, weighting its blocks by `w`.
pub fn marginalize_instrument<T: Probability>(
    d: &ObservedDistribution<T>,
    w: &InstrumentWeights<T>,
) -> Result<ObservedDistribution<T>, OracleError> {
    let legend = &d.legend;
    let k = legend.left.len();
    assert!(k >= 1, "marginalization needs a left variable");
    let last_card = legend.left_cards[k - 1] as usize;
    let kept: Vec<(String, u32)> =
        legend.left[..k - 1].iter().cloned().zip(legend.left_cards[..k - 1].iter().copied()).collect();
    let right: Vec<(String, u32)> = legend.right.iter().cloned().zip(legend.right_cards.iter().copied()).collect();
    let out_legend = ObservableIndexer::from_parts(kept, right);
    let rest_blocks = out_legend.block_count();
    for rest in 0..rest_blocks {
        let row = w.weights.get(rest).filter(|r| r.len() == last_card);
        let sum = row.map(|r| r.iter().cloned().fold(T::zero(), |a, b| a + b));
        match sum {
            Some(s) if s.is_unit_sum() => {}
            Some(s) => return Err(OracleError::WeightSum { block: rest, sum: s.describe() }),
            None => return Err(OracleError::WeightSum { block: rest, sum: "missing".into() }),
        }
    }
    let size = legend.block_size();
    let mut values = vec![T::zero(); out_legend.len()];
    for rest in 0..rest_blocks {
        for z in 0..last_card {
            let block = rest + z * rest_blocks;
            for i in 0..size {
                let v = values[rest * size + i].clone();
                values[rest * size + i] = v + w.weights[rest][z].clone() * d.values[block * size + i].clone();
            }
        }
    }
    Ok(ObservedDistribution::new(out_legend, values))
}

/// Recodes all left variables as one instrument `Z3` whose value is the
/// block index, so `(z1, z2)` becomes `z1 + 2·z2` for binary instruments.
pub fn relabel_as_four_level<T: Clone>(d: &ObservedDistribution<T>) -> ObservedDistribution<T> {
    let right: Vec<(String, u32)> =
        d.legend.right.iter().cloned().zip(d.legend.right_cards.iter().copied()).collect();
    let legend = ObservableIndexer::from_parts(vec![("Z3".into(), d.legend.block_count() as u32)], right);
    ObservedDistribution::new(legend, d.values.clone())
}
