//! The pruning recursion: root likelihoods of observed leaf patterns,
//! posteriors, and forward simulation of the broadcasting process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{dot, memory_of, norm_unchecked};
use crate::tree::{Pattern, TreeSpec};

/// Sum-to-one tolerance for priors.
pub const PRIOR_TOL: f64 = 1e-12;

/// Likelihood information at one node for one observed (sub)pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodState {
    /// Raw likelihoods `Pr(∂ | node = i)`. May underflow to zero on deep trees;
    /// `rho_tilde` and `log_pr_pi` carry the information without loss.
    pub rho: Vec<f64>,
    /// `ρ / (ρ·π)`.
    pub rho_tilde: Vec<f64>,
    /// `ρ̃ − 1`.
    pub memory: Vec<f64>,
    /// `ln Pr_π(∂) = ln(ρ·π)`.
    pub log_pr_pi: f64,
}

impl LikelihoodState {
    fn from_normalized(rho_tilde: Vec<f64>, log_pr_pi: f64) -> Self {
        let scale = log_pr_pi.exp();
        let rho = rho_tilde.iter().map(|v| v * scale).collect();
        let memory = memory_of(&rho_tilde);
        Self {
            rho,
            rho_tilde,
            memory,
            log_pr_pi,
        }
    }

    pub fn pr_pi(&self) -> f64 {
        self.log_pr_pi.exp()
    }

    pub fn memory_norm(&self, pi: &[f64]) -> f64 {
        norm_unchecked(&self.memory, pi)
    }
}

/// A strictly positive root distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if let Some(v) = mu.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::BadPrior(format!("entry {v} is not positive")));
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > PRIOR_TOL {
            return Err(Error::BadPrior(format!("entries sum to {sum}")));
        }
        Ok(Self(mu))
    }

    pub fn uniform(states: usize) -> Self {
        Self(vec![1.0 / states as f64; states])
    }

    /// The stationary prior `μ = π`.
    pub fn stationary(tree: &TreeSpec) -> Self {
        Self(tree.pi().to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::BadPrior(format!(
                "prior has {} entries, alphabet has {n}",
                self.0.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub prior: Vec<f64>,
    pub r: Vec<f64>,
    /// Ties go to the lowest state index.
    pub map_state: usize,
    pub map_prob: f64,
}

/// Canonical vector `e_state` of length `K + 1`.
pub fn leaf_likelihood(state: usize, k: usize) -> Result<Vec<f64>> {
    if state > k {
        return Err(Error::StateOutOfRange { state, max: k });
    }
    let mut e = vec![0.0; k + 1];
    e[state] = 1.0;
    Ok(e)
}

/// Runs the pruning recursion and returns the state at every node, indexed
/// like [`TreeSpec::nodes`].
///
/// Each internal node forms `⨀_c P_c α̃_c` from its children's normalized
/// vectors and divides by the π-mean of that product (the dependence factor);
/// the logs of those factors accumulate into `log_pr_pi`.
pub fn prune_nodes(tree: &TreeSpec, pattern: &Pattern) -> Result<Vec<LikelihoodState>> {
    tree.check_pattern(pattern)?;
    let pi = tree.pi();
    let n = tree.alphabet_size();
    let mut states: Vec<Option<LikelihoodState>> = vec![None; tree.node_count()];

    for &node in tree.postorder() {
        let children = tree.children(node);
        let state = if children.is_empty() {
            let slot = tree.leaf_slot(node).expect("childless node is a leaf");
            let s = pattern.states()[slot];
            let mut rho_tilde = vec![0.0; n];
            rho_tilde[s] = 1.0 / pi[s];
            LikelihoodState::from_normalized(rho_tilde, pi[s].ln())
        } else {
            let mut product = vec![1.0; n];
            let mut log_pr = 0.0;
            for edge in children {
                let child = states[edge.child]
                    .as_ref()
                    .expect("postorder visits children first");
                let mapped = tree.channel(edge).apply(&child.rho_tilde);
                for (p, m) in product.iter_mut().zip(&mapped) {
                    *p *= m;
                }
                log_pr += child.log_pr_pi;
            }
            let factor = dot(&product, pi);
            if factor.is_nan() || factor <= 0.0 {
                return Err(Error::PatternImpossible);
            }
            product.iter_mut().for_each(|p| *p /= factor);
            LikelihoodState::from_normalized(product, log_pr + factor.ln())
        };
        states[node] = Some(state);
    }
    Ok(states
        .into_iter()
        .map(|s| s.expect("every node visited"))
        .collect())
}

/// Likelihood state at the root.
pub fn prune(tree: &TreeSpec, pattern: &Pattern) -> Result<LikelihoodState> {
    let mut all = prune_nodes(tree, pattern)?;
    Ok(all.swap_remove(tree.root()))
}

/// `Pr(∂) = μ·ρ`.
pub fn pattern_probability(state: &LikelihoodState, mu: &Prior) -> Result<f64> {
    Ok(log_pattern_probability(state, mu)?.exp())
}

pub fn log_pattern_probability(state: &LikelihoodState, mu: &Prior) -> Result<f64> {
    mu.check_len(state.rho_tilde.len())?;
    Ok(state.log_pr_pi + dot(mu.as_slice(), &state.rho_tilde).ln())
}

/// Bayes posterior of the root state, `r = ρ∘μ / (ρ·μ)`.
pub fn posterior(state: &LikelihoodState, mu: &Prior) -> Result<Posterior> {
    mu.check_len(state.rho_tilde.len())?;
    let weights: Vec<f64> = state
        .rho_tilde
        .iter()
        .zip(mu.as_slice())
        .map(|(a, b)| a * b)
        .collect();
    let total: f64 = weights.iter().sum();
    let r: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut map_state = 0;
    for (i, &v) in r.iter().enumerate() {
        if v > r[map_state] {
            map_state = i;
        }
    }
    Ok(Posterior {
        prior: mu.as_slice().to_vec(),
        map_prob: r[map_state],
        r,
        map_state,
    })
}

fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draws a root state from `mu` and pushes it down every edge.
pub fn forward_sample_with<R: Rng + ?Sized>(
    tree: &TreeSpec,
    mu: &Prior,
    rng: &mut R,
) -> Result<(usize, Pattern)> {
    mu.check_len(tree.alphabet_size())?;
    let root_state = sample_categorical(mu.as_slice(), rng);
    let mut leaves = vec![0; tree.leaf_count()];
    let mut stack = vec![(tree.root(), root_state)];
    while let Some((node, s)) = stack.pop() {
        let children = tree.children(node);
        if children.is_empty() {
            leaves[tree.leaf_slot(node).expect("leaf")] = s;
        }
        for edge in children.iter().rev() {
            let next = sample_categorical(tree.channel(edge).row(s), rng);
            stack.push((edge.child, next));
        }
    }
    Ok((root_state, Pattern::new(leaves)))
}

/// Deterministic in `seed`.
pub fn forward_sample(tree: &TreeSpec, mu: &Prior, seed: u64) -> Result<(usize, Pattern)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    forward_sample_with(tree, mu, &mut rng)
}
