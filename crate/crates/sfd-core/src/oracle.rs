//! Brute-force references: exhaustive MAP enumeration on tiny grids and
//! exact chain dynamic programming. Both share `labeling_energy` with the
//! BP engine so a disagreement isolates an inference bug rather than a
//! drift in the objective definition.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bp::{labeling_energy, pairwise_cost, LabelMap, PriorParams};
use crate::cost::CostVolume;
use crate::error::{Error, Result};

/// A grid instance small enough for exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    costs: CostVolume,
    prior: PriorParams,
}

impl TinyInstance {
    /// Requires `width * height <= 16`, `label_count <= 8`, and
    /// `label_count ^ (width * height) <= 2^32`.
    pub fn new(costs: CostVolume, prior: PriorParams) -> Result<Self> {
        let nodes = costs.width() * costs.height();
        let l = costs.label_count();
        if nodes == 0 || nodes > 16 {
            return Err(Error::Usage(format!(
                "tiny instance must have 1..=16 nodes, got {nodes}"
            )));
        }
        if l == 0 || l > 8 {
            return Err(Error::Usage(format!(
                "tiny instance must have 1..=8 labels, got {l}"
            )));
        }
        let mut count: u64 = 1;
        for _ in 0..nodes {
            count = count.saturating_mul(l as u64);
            if count > 1u64 << 32 {
                return Err(Error::Usage(format!(
                    "enumeration bound exceeded: {l}^{nodes} > 2^32"
                )));
            }
        }
        Ok(Self { costs, prior })
    }

    pub fn costs(&self) -> &CostVolume {
        &self.costs
    }

    pub fn prior(&self) -> &PriorParams {
        &self.prior
    }
}

/// Enumerates every labeling in lexicographic order and returns the
/// minimum-energy one; ties keep the lexicographically first labeling.
pub fn exhaustive_map(inst: &TinyInstance) -> (LabelMap, f64) {
    let (w, h) = (inst.costs.width(), inst.costs.height());
    let nodes = w * h;
    let l = inst.costs.label_count();
    let mut current = vec![0usize; nodes];
    let mut best = current.clone();
    let mut best_energy = f64::INFINITY;
    loop {
        let map = LabelMap::new(w, h, current.clone()).expect("enumeration labeling is valid");
        let e = labeling_energy(&map, &inst.costs, &inst.prior)
            .expect("enumeration labeling matches the instance");
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&current);
        }
        // odometer increment, last node fastest (lexicographic order)
        let mut i = nodes;
        loop {
            if i == 0 {
                let map = LabelMap::new(w, h, best).expect("best labeling is valid");
                return (map, best_energy);
            }
            i -= 1;
            current[i] += 1;
            if current[i] < l {
                break;
            }
            current[i] = 0;
        }
    }
}

/// Exact MAP on a 1xN (or Nx1) chain via a Viterbi-style forward pass
/// with backtracking. The returned energy is recomputed with
/// `labeling_energy` so it is bit-comparable with the BP engine's.
pub fn chain_dp(costs: &CostVolume, prior: &PriorParams) -> Result<(LabelMap, f64)> {
    let (w, h) = (costs.width(), costs.height());
    if w != 1 && h != 1 {
        return Err(Error::Usage(format!(
            "chain_dp expects a 1xN or Nx1 volume, got {w}x{h}"
        )));
    }
    let n = w * h;
    let l = costs.label_count();
    let node = |i: usize| -> &[f64] {
        if h == 1 {
            costs.costs_at(i, 0)
        } else {
            costs.costs_at(0, i)
        }
    };
    // cum[i][li] = best energy of the prefix ending at node i with label li
    let mut cum: Vec<f64> = node(0).to_vec();
    let mut back: Vec<usize> = Vec::with_capacity(n.saturating_sub(1) * l);
    for i in 1..n {
        let d = node(i);
        let mut next = vec![0.0f64; l];
        for li in 0..l {
            let mut best_prev = 0usize;
            let mut best_cost = f64::INFINITY;
            for (lp, c) in cum.iter().enumerate() {
                let cost = c + pairwise_cost(lp, li, prior);
                if cost < best_cost {
                    best_cost = cost;
                    best_prev = lp;
                }
            }
            next[li] = best_cost + d[li];
            back.push(best_prev);
        }
        cum = next;
    }
    let mut labels = vec![0usize; n];
    let mut best = 0usize;
    let mut best_cost = f64::INFINITY;
    for (li, c) in cum.iter().enumerate() {
        if *c < best_cost {
            best_cost = *c;
            best = li;
        }
    }
    labels[n - 1] = best;
    for i in (1..n).rev() {
        labels[i - 1] = back[(i - 1) * l + labels[i]];
    }
    let map = LabelMap::new(w, h, labels)?;
    let energy = labeling_energy(&map, costs, prior)?;
    Ok((map, energy))
}
