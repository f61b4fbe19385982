#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srr::numeric::{ratio, Rational};
use srr::storage::{NodeId, NodeKind, StorageSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform multiple of `1/denom` in `[0, hi]`.
pub fn rational_in(rng: &mut ChaCha8Rng, hi: &Rational, denom: i64) -> Rational {
    let steps = (hi * ratio(denom, 1)).floor().to_integer();
    let steps: i64 = steps.try_into().unwrap_or(0);
    ratio(rng.gen_range(0..=steps), denom)
}

/// `dims` nonnegative values with sum at most `total`, on a `1/denom` grid.
pub fn point_under_sum(rng: &mut ChaCha8Rng, dims: usize, total: &Rational, denom: i64) -> Vec<Rational> {
    let mut left = total.clone();
    let mut out = Vec::with_capacity(dims);
    for _ in 0..dims {
        let v = rational_in(rng, &left, denom);
        left -= &v;
        out.push(v);
    }
    out
}

/// Whether the node set `mask` gives access to `file`.
fn recovers(kinds: &[NodeKind], files: usize, file: usize, mask: u32) -> bool {
    let mut seen = vec![false; files];
    let mut coded = 0;
    for (j, kind) in kinds.iter().enumerate() {
        if mask & (1 << j) == 0 {
            continue;
        }
        match kind {
            NodeKind::Systematic(f) => seen[*f] = true,
            NodeKind::Coded => coded += 1,
        }
    }
    seen[file] || seen.iter().filter(|s| **s).count() + coded >= files
}

/// Minimal recovering sets of every file by exhaustive search over all
/// `2^N` node subsets. Each list is sorted.
pub fn brute_force_groups(system: &StorageSystem) -> Vec<Vec<Vec<NodeId>>> {
    let kinds = system.nodes();
    let n = kinds.len();
    assert!(n <= 16);
    let k = system.files();
    (0..k)
        .map(|file| {
            let rec: Vec<bool> = (0u32..(1 << n)).map(|mask| recovers(kinds, k, file, mask)).collect();
            let mut groups: Vec<Vec<NodeId>> = (1u32..(1 << n))
                .filter(|&mask| rec[mask as usize] && (0..n).all(|j| mask & (1 << j) == 0 || !rec[(mask & !(1 << j)) as usize]))
                .map(|mask| (0..n).filter(|j| mask & (1 << j) != 0).map(NodeId).collect())
                .collect();
            groups.sort();
            groups
        })
        .collect()
}

/// Every `(N_1, ..., N_K, C)` with `K >= 1` and `sum N + C <= max_nodes`.
pub fn all_systems(max_nodes: usize) -> Vec<(Vec<usize>, usize)> {
    fn compositions(len: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=budget {
            prefix.push(v);
            compositions(len, budget - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=max_nodes {
        let mut counts = Vec::new();
        compositions(k + 1, max_nodes, &mut Vec::new(), &mut counts);
        for mut c in counts {
            let coded = c.pop().unwrap();
            out.push((c, coded));
        }
    }
    out
}
