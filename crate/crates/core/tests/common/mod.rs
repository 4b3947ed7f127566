//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use causalbound::canonical::ResponseSpace;
use causalbound::model::{CausalGraph, VarId};
use causalbound::querylang::{EventKind, InterventionValue, OutcomeTerm, QueryExpr};
use causalbound::symbolic::AffineExpression;
use causalbound::{ObservableIndexer, Rational};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f_V(parents, r)` decoded straight from the digit encoding: parent
/// assignment `k` (first parent fastest) selects base-`c_V` digit `k` of `r`.
pub fn response_value(g: &CausalGraph, v: VarId, parent_values: &[u32], r: u64) -> u32 {
    let mut k = 0u64;
    let mut radix = 1u64;
    for (i, &p) in g.parents(v).iter().enumerate() {
        k += parent_values[i] as u64 * radix;
        radix *= g.cardinality(p) as u64;
    }
    let c = g.cardinality(v) as u64;
    ((r / c.pow(k as u32)) % c) as u32
}

/// One world of the twin network: every variable computed in topological
/// order, with intervened variables replaced by their forced values and
/// nested interventions resolved in their own worlds.
pub fn twin_world(g: &CausalGraph, r: &[u64], forced: &[Option<u32>]) -> Vec<u32> {
    let order = g.topological_order().expect("acyclic");
    let mut w = vec![0u32; g.len()];
    for v in order {
        w[v] = match forced[v] {
            Some(x) => x,
            None => {
                let pv: Vec<u32> = g.parents(v).iter().map(|&p| w[p]).collect();
                response_value(g, v, &pv, r[v])
            }
        };
    }
    w
}

pub fn twin_value(g: &CausalGraph, r: &[u64], term: &OutcomeTerm) -> u32 {
    let mut forced = vec![None; g.len()];
    for i in &term.interventions {
        forced[i.target] = Some(match &i.value {
            InterventionValue::Fixed(x) => *x,
            InterventionValue::Nested(inner) => twin_value(g, r, inner),
        });
    }
    twin_world(g, r, &forced)[term.variable]
}

/// α by direct simulation of every unit; left responses set to `left`.
pub fn twin_alpha(g: &CausalGraph, space: &ResponseSpace, q: &QueryExpr, left: &[u64]) -> Vec<Rational> {
    let mut alpha = vec![Rational::zero(); space.aleph()];
    let mut r = vec![0u64; g.len()];
    for v in g.left_ids() {
        r[v] = left[v];
    }
    for (gamma, a) in alpha.iter_mut().enumerate() {
        space.fill_right(gamma, &mut r);
        let natural = twin_world(g, &r, &vec![None; g.len()]);
        for (coef, atomic) in &q.terms {
            let holds = atomic.events.iter().all(|e| match &e.kind {
                EventKind::Factual => natural[e.variable] == e.value,
                EventKind::Potential(t) => twin_value(g, &r, t) == e.value,
            });
            if holds {
                *a += coef;
            }
        }
    }
    alpha
}

/// Rows of `P` rebuilt by simulation: left variables forced to each
/// block's assignment, observed right variables read off the natural world.
pub fn simulated_rows(g: &CausalGraph, space: &ResponseSpace, ix: &ObservableIndexer) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); ix.len()];
    let mut r = vec![0u64; g.len()];
    for block in 0..ix.block_count() {
        let wl = ix.left_assignment(block);
        let mut forced = vec![None; g.len()];
        for (i, &v) in ix.left_ids().iter().enumerate() {
            forced[v] = Some(wl[i]);
        }
        for gamma in 0..space.aleph() {
            space.fill_right(gamma, &mut r);
            let w = twin_world(g, &r, &forced);
            let obs: Vec<u32> = ix.right_ids().iter().map(|&v| w[v]).collect();
            rows[ix.index(block, ix.right_index(&obs))].push(gamma);
        }
    }
    rows
}

/// The two expression lists of the reference bounds file.
pub fn reference_lists(legend: &ObservableIndexer) -> (Vec<AffineExpression>, Vec<AffineExpression>) {
    let text = include_str!("../data/two_iv_reference_bounds.txt");
    let mut lists: Vec<Vec<AffineExpression>> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') || line == "}" {
            continue;
        }
        if line.ends_with('{') {
            lists.push(Vec::new());
            continue;
        }
        let e = AffineExpression::parse(line, legend).unwrap_or_else(|e| panic!("{line}: {e}"));
        lists.last_mut().expect("list opened").push(e);
    }
    assert_eq!(lists.len(), 2);
    let upper = lists.pop().unwrap();
    (lists.pop().unwrap(), upper)
}

pub fn canonical_set(exprs: &[AffineExpression], legend: &ObservableIndexer) -> BTreeSet<AffineExpression> {
    exprs.iter().map(|e| e.canonical(legend)).collect()
}

/// A random small problem: 2 or 3 right variables (binary, or one ternary),
/// an optional binary instrument, random forward edges, and a query mixing
/// fixed, nested and factual events. Returns the problem text.
pub fn random_problem(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_right = rng.random_range(2..=3usize);
    let with_left = rng.random_bool(0.5);
    let names = ["A", "B", "C"];
    let mut cards = vec![2u32; n_right];
    if n_right == 2 && rng.random_bool(0.3) {
        cards[0] = 3;
    }
    let mut text = String::new();
    if with_left {
        text.push_str("var Z : 2 left\n");
    }
    for i in 0..n_right {
        text.push_str(&format!("var {} : {}\n", names[i], cards[i]));
    }
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n_right];
    for j in 1..n_right {
        for i in 0..j {
            if i + 1 == j || rng.random_bool(0.5) {
                parents[j].push(i);
                text.push_str(&format!("edge {} -> {}\n", names[i], names[j]));
            }
        }
    }
    if with_left {
        text.push_str("edge Z -> A\n");
    }
    let right: Vec<&str> = names[..n_right].to_vec();
    text.push_str(&format!("confound U {{ {} }}\n", right.join(", ")));
    if rng.random_bool(0.2) && n_right == 3 {
        text.push_str("unobserved B\n");
    }
    let y = n_right - 1;
    let x = parents[y][0];
    let y_card = cards[y];
    let x_card = cards[x];
    let v1 = rng.random_range(0..x_card);
    let v0 = rng.random_range(0..x_card);
    let yv = rng.random_range(0..y_card);
    let first = match (n_right, rng.random_range(0..3)) {
        (3, 0) if parents[2].contains(&0) && parents[1].contains(&0) => {
            format!("P{{C(B(A={v0}), A={v1})={yv}}}")
        }
        (3, 1) => format!("P{{C(A={v1})={yv}, B(A={v0})=1}}"),
        _ => format!("P{{{}({}={v1})={yv}}}", names[y], names[x]),
    };
    let second = if with_left {
        format!("P{{{}({}={v0})={yv}}}", names[y], names[x])
    } else {
        format!("P{{{}({}={v0})={yv}, {}={}}}", names[y], names[x], names[x], rng.random_range(0..x_card))
    };
    text.push_str(&format!("%%\nquery: {first} - {second}\n"));
    text
}
