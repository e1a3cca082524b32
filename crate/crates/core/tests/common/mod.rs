#![allow(dead_code)]

use infoflow_core::{Pattern, TreeSpec};

/// `Pr(∂ | root = i)` by summing over every assignment of the internal
/// nodes. Exponential; only for small trees.
pub fn brute_force_rho(tree: &TreeSpec, pattern: &Pattern) -> Vec<f64> {
    let k = tree.alphabet_size();
    let n = tree.node_count();
    let mut fixed: Vec<Option<usize>> = vec![None; n];
    for (slot, &leaf) in tree.leaves().iter().enumerate() {
        fixed[leaf] = Some(pattern.states()[slot]);
    }
    let free: Vec<usize> = (0..n)
        .filter(|&v| fixed[v].is_none() && v != tree.root())
        .collect();
    let mut rho = vec![0.0; k];
    let mut assign = vec![0usize; n];
    for (root_state, out) in rho.iter_mut().enumerate() {
        let combos = k.pow(free.len() as u32);
        for mut code in 0..combos {
            for &v in &free {
                assign[v] = code % k;
                code /= k;
            }
            for v in 0..n {
                if let Some(s) = fixed[v] {
                    assign[v] = s;
                }
            }
            assign[tree.root()] = root_state;
            let mut w = 1.0;
            for v in 0..n {
                for e in tree.children(v) {
                    w *= tree.channel(e).entry(assign[v], assign[e.child]);
                }
            }
            *out += w;
        }
    }
    rho
}

/// Same marginal as `brute_force_rho`, by an unnormalized recursion that
/// shares no code with the library's pruning.
pub fn raw_rho(tree: &TreeSpec, pattern: &Pattern, node: usize) -> Vec<f64> {
    let k = tree.alphabet_size();
    if let Some(slot) = tree.leaf_slot(node) {
        let mut e = vec![0.0; k];
        e[pattern.states()[slot]] = 1.0;
        return e;
    }
    let mut out = vec![1.0; k];
    for edge in tree.children(node) {
        let child = raw_rho(tree, pattern, edge.child);
        let ch = tree.channel(edge);
        for (i, o) in out.iter_mut().enumerate() {
            *o *= (0..k).map(|j| ch.entry(i, j) * child[j]).sum::<f64>();
        }
    }
    out
}

/// Stationary distribution by repeated left multiplication.
pub fn power_iteration_pi(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += v[i] * rows[i][j];
            }
        }
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < 1e-15 {
            break;
        }
    }
    v
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
