//! Random channels and trees for property tests, benchmarks and sweeps.

use rand::Rng;

use crate::channel::Channel;
use crate::error::Result;
use crate::tree::TreeSpec;

/// Random strictly positive distribution with entries bounded away from 0.
pub fn random_distribution<R: Rng + ?Sized>(states: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..states).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Random reversible channel with equilibrium `pi`.
///
/// Off-diagonal entries are `b_ij π_j / c` for a symmetric positive `b`, so
/// detailed balance holds by construction; the diagonal takes the remaining
/// mass and stays positive.
pub fn random_reversible_channel<R: Rng + ?Sized>(pi: &[f64], rng: &mut R) -> Result<Channel> {
    let n = pi.len();
    let mut b = vec![vec![0.0; n]; n];
    #[allow(clippy::needless_range_loop)] // symmetric fill
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(0.05..1.0);
            b[i][j] = v;
            b[j][i] = v;
        }
    }
    let widest = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| b[i][j] * pi[j])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let scale = widest / rng.gen_range(0.2..0.95);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|j| if i == j { 0.0 } else { b[i][j] * pi[j] / scale })
                .collect();
            let off: f64 = row.iter().sum();
            row[i] = 1.0 - off;
            row
        })
        .collect();
    Channel::with_equilibrium(&rows, pi)
}

/// Random channel with every entry positive. Almost surely not reversible
/// for three or more states.
pub fn random_primitive_channel<R: Rng + ?Sized>(states: usize, rng: &mut R) -> Result<Channel> {
    let rows: Vec<Vec<f64>> = (0..states)
        .map(|_| {
            let raw: Vec<f64> = (0..states).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.into_iter().map(|v| v / total).collect();
            // push the rounding error into the largest entry
            let fix = 1.0 - row.iter().sum::<f64>();
            let k = (0..states)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap_or(0);
            row[k] += fix;
            row
        })
        .collect();
    Channel::new(&rows)
}

/// Random tree with at most `max_levels` levels and `max_children` children
/// per node, every edge an independent random reversible channel sharing `pi`.
pub fn random_tree<R: Rng + ?Sized>(
    pi: &[f64],
    max_levels: usize,
    max_children: usize,
    rng: &mut R,
) -> Result<TreeSpec> {
    let mut edges = Vec::new();
    let mut channels = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1;
    for level in 0..max_levels {
        let mut next = Vec::new();
        for &parent in &frontier {
            let lo = usize::from(level == 0);
            let k = rng.gen_range(lo..=max_children);
            for _ in 0..k {
                channels.push(random_reversible_channel(pi, rng)?);
                edges.push((parent, next_id, channels.len() - 1));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    TreeSpec::from_edges(next_id, &edges, channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reversible_channels_keep_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let pi = random_distribution(n, &mut rng);
            let c = random_reversible_channel(&pi, &mut rng).unwrap();
            assert!(c.is_reversible());
            // the solved equilibrium agrees with the construction
            let solved = crate::channel::stationary_distribution(&c.rows()).unwrap();
            for (a, b) in solved.iter().zip(&pi) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pi = random_distribution(3, &mut rng);
            let t = random_tree(&pi, 3, 3, &mut rng).unwrap();
            assert!(t.levels() <= 3 && t.max_arity() <= 3);
            assert!(t.leaf_count() >= 1);
        }
    }
}
