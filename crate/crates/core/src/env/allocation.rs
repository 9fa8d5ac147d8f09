//! Per-cell PRB allocation under a capacity limit.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub prbs: Vec<u32>,
    /// More UEs than PRBs: only the first `capacity` UEs got one PRB each.
    pub overloaded: bool,
}

/// Fits per-UE PRB demands into `capacity`.
///
/// Under capacity the demands are granted as-is. Otherwise each demand is
/// scaled by `capacity / total` and floored, with at least one PRB for any
/// UE that asked for some. If the one-PRB minimum pushes the sum past the
/// capacity, the largest grants are trimmed until it fits.
pub fn allocate_prbs(demands: &[u32], capacity: u32) -> Allocation {
    let total: u64 = demands.iter().map(|&d| u64::from(d)).sum();
    if total <= u64::from(capacity) {
        return Allocation {
            prbs: demands.to_vec(),
            overloaded: false,
        };
    }

    let requesting = demands.iter().filter(|&&d| d > 0).count();
    if requesting > capacity as usize {
        let mut left = capacity;
        let prbs = demands
            .iter()
            .map(|&d| {
                if d > 0 && left > 0 {
                    left -= 1;
                    1
                } else {
                    0
                }
            })
            .collect();
        return Allocation {
            prbs,
            overloaded: true,
        };
    }

    let cap = u64::from(capacity);
    let mut prbs: Vec<u32> = demands
        .iter()
        .map(|&d| {
            if d == 0 {
                0
            } else {
                ((u64::from(d) * cap / total) as u32).max(1)
            }
        })
        .collect();
    let mut sum: u64 = prbs.iter().map(|&p| u64::from(p)).sum();
    while sum > cap {
        // largest grant, lowest index on ties
        let (idx, _) = prbs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty when over capacity");
        prbs[idx] -= 1;
        sum -= 1;
    }
    Allocation {
        prbs,
        overloaded: false,
    }
}
