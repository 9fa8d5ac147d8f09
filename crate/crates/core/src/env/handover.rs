//! Handover target weighting and multinomial UE partitioning.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::config::HandoverWeighting;
use crate::topology::Point;

/// Inverse-square proximity weight of a candidate site.
pub fn proximity_weight(shut: Point, candidate: Point, epsilon: f64) -> f64 {
    1.0 / (shut.distance_squared(candidate) + epsilon)
}

/// A candidate target cell as seen by the weighting rule.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub cell: usize,
    pub position: Point,
    pub used_prbs: u32,
}

/// Normalized handover probabilities over `candidates`, in input order.
///
/// Each weight is the candidate's load term times its proximity weight.
/// When every load term is zero the proximity weights are used alone.
pub fn weights(
    shut: Point,
    candidates: &[Candidate],
    epsilon: f64,
    weighting: HandoverWeighting,
    user_capacity: u32,
) -> Vec<(usize, f64)> {
    let lambdas: Vec<f64> = candidates
        .iter()
        .map(|c| proximity_weight(shut, c.position, epsilon))
        .collect();
    let mut xi: Vec<f64> = candidates
        .iter()
        .zip(&lambdas)
        .map(|(c, &l)| {
            let load = match weighting {
                HandoverWeighting::Load => c.used_prbs,
                HandoverWeighting::AvailablePrbs => user_capacity.saturating_sub(c.used_prbs),
            };
            f64::from(load) * l
        })
        .collect();
    if xi.iter().all(|&w| w == 0.0) {
        xi = lambdas;
    }
    let total: f64 = xi.iter().sum();
    candidates
        .iter()
        .zip(xi)
        .map(|(c, w)| (c.cell, w / total))
        .collect()
}

/// Draws category counts for `n` trials with the given probabilities.
pub fn multinomial<R: Rng + ?Sized>(n: usize, probs: &[f64], rng: &mut R) -> Vec<usize> {
    let mut counts = vec![0; probs.len()];
    match probs.len() {
        0 => return counts,
        1 => {
            counts[0] = n;
            return counts;
        }
        _ => {}
    }
    let dist = WeightedIndex::new(probs).expect("probabilities are finite and not all zero");
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    counts
}
