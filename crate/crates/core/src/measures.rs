//! L2(π) geometry for likelihood vectors.
//!
//! All vectors here are indexed by alphabet state. The π-inner product is
//! `<x, y>_π = Σ_i π_i x_i y_i`; the memory vector of a normalized
//! likelihood vector `ρ̃` is `ρ̃ − 1`.

use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::pruning::LikelihoodState;

/// Largest child count for which [`expand_products`] also evaluates the
/// full subset expansion.
pub const MAX_EXPANSION_ARITY: usize = 12;

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn inner_unchecked(x: &[f64], y: &[f64], pi: &[f64]) -> f64 {
    pi.iter().zip(x).zip(y).map(|((p, a), b)| p * a * b).sum()
}

pub(crate) fn norm_unchecked(x: &[f64], pi: &[f64]) -> f64 {
    inner_unchecked(x, x, pi).max(0.0).sqrt()
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `<x, y>_π`.
pub fn pi_inner(x: &[f64], y: &[f64], pi: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len(), "x and y")?;
    check_len(x.len(), pi.len(), "x and pi")?;
    Ok(inner_unchecked(x, y, pi))
}

/// `‖x‖_π`.
pub fn pi_norm(x: &[f64], pi: &[f64]) -> Result<f64> {
    check_len(x.len(), pi.len(), "x and pi")?;
    Ok(norm_unchecked(x, pi))
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn uniform_norm(x: &[f64]) -> f64 {
    sup_norm(x)
}

/// The three norms of one vector. They always satisfy
/// `uniform ≤ euclidean ≤ pi / sqrt(min π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub pi: f64,
    pub euclidean: f64,
    pub uniform: f64,
}

pub fn norms(x: &[f64], pi: &[f64]) -> Result<Norms> {
    Ok(Norms {
        pi: pi_norm(x, pi)?,
        euclidean: euclidean_norm(x),
        uniform: uniform_norm(x),
    })
}

/// Returns `x − 1·<x, 1>_π`, the π-centered part of `x`.
pub fn centralize(x: &[f64], pi: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), pi.len(), "x and pi")?;
    let mean = dot(x, pi);
    Ok(x.iter().map(|v| v - mean).collect())
}

/// Memory vector `x − 1`.
pub fn memory_of(normalized: &[f64]) -> Vec<f64> {
    normalized.iter().map(|v| v - 1.0).collect()
}

/// Result of multiplying out `⨀_c (1 + m_c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductExpansion {
    /// Entrywise product `⨀_c (1 + m_c)`, computed directly.
    pub product: Vec<f64>,
    /// π-mean of `product`; this is the dependence factor.
    pub dependence: f64,
    /// `1 + Σ_{∅≠C⊆[d]} ⨀_{c∈C} m_c`, only for `d ≤ MAX_EXPANSION_ARITY`.
    pub expanded_product: Option<Vec<f64>>,
    /// `1 + Σ_{|C|≥2} π·⨀_{c∈C} m_c`; singleton subsets are dropped because
    /// memory vectors have π-mean zero.
    pub expanded_dependence: Option<f64>,
}

pub fn expand_products(memories: &[Vec<f64>], pi: &[f64]) -> Result<ProductExpansion> {
    if memories.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one memory vector".into(),
        ));
    }
    let n = pi.len();
    for m in memories {
        check_len(m.len(), n, "memory vector and pi")?;
    }

    let mut product = vec![1.0; n];
    for m in memories {
        for (p, v) in product.iter_mut().zip(m) {
            *p *= 1.0 + v;
        }
    }
    let dependence = dot(&product, pi);

    let (expanded_product, expanded_dependence) = if memories.len() <= MAX_EXPANSION_ARITY {
        let d = memories.len();
        let mut full = vec![1.0; n];
        let mut dep = 1.0;
        let mut term = vec![0.0; n];
        for mask in 1u32..(1u32 << d) {
            term.iter_mut().for_each(|t| *t = 1.0);
            for (c, m) in memories.iter().enumerate() {
                if mask & (1 << c) != 0 {
                    for (t, v) in term.iter_mut().zip(m) {
                        *t *= v;
                    }
                }
            }
            for (f, t) in full.iter_mut().zip(&term) {
                *f += t;
            }
            if mask.count_ones() >= 2 {
                dep += dot(&term, pi);
            }
        }
        (Some(full), Some(dep))
    } else {
        (None, None)
    };

    Ok(ProductExpansion {
        product,
        dependence,
        expanded_product,
        expanded_dependence,
    })
}

/// Norms of the memory vector `P_c α̃_c − 1` seen by the parent through one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChildMemoryNorm {
    pub pi: f64,
    pub uniform: f64,
}

/// Decomposition `Pr_π(∂) = D(∂)·Pr_IND(∂)` at one parent node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub d_factor: f64,
    pub pr_independent: f64,
    pub pr_pi: f64,
    pub log_pr_independent: f64,
    pub log_pr_pi: f64,
    pub child_memory_norms: Vec<ChildMemoryNorm>,
    /// Memory vectors `P_c α̃_c − 1`, in child order.
    pub child_memories: Vec<Vec<f64>>,
    /// `|Pr_π − D·Pr_IND| / Pr_π` against the supplied parent state, if any.
    pub parent_relative_error: Option<f64>,
}

/// Builds the dependence factor from the child likelihood states and their
/// edge channels. When `parent` is given the identity against the parent's
/// pruned probability is checked and recorded.
pub fn dependence_report(
    children: &[(&LikelihoodState, &Channel)],
    pi: &[f64],
    parent: Option<&LikelihoodState>,
) -> Result<DependenceReport> {
    if children.is_empty() {
        return Err(Error::InvalidArgument(
            "dependence factor needs at least one child".into(),
        ));
    }
    let n = pi.len();
    let mut memories = Vec::with_capacity(children.len());
    let mut log_ind = 0.0;
    for (state, channel) in children {
        check_len(state.rho_tilde.len(), n, "child likelihood and pi")?;
        check_len(channel.size(), n, "channel and pi")?;
        if channel
            .pi()
            .iter()
            .zip(pi)
            .any(|(a, b)| (a - b).abs() > crate::tree::SHARED_PI_TOL)
        {
            return Err(Error::MixedEquilibria(
                "edge channel equilibrium differs from the supplied pi".into(),
            ));
        }
        let mapped = channel.apply(&state.rho_tilde);
        memories.push(memory_of(&mapped));
        log_ind += state.log_pr_pi;
    }
    let expansion = expand_products(&memories, pi)?;
    let d_factor = expansion.dependence;
    if d_factor <= 0.0 {
        return Err(Error::PatternImpossible);
    }
    let log_pr_pi = log_ind + d_factor.ln();
    let child_memory_norms = memories
        .iter()
        .map(|m| ChildMemoryNorm {
            pi: norm_unchecked(m, pi),
            uniform: sup_norm(m),
        })
        .collect();
    let parent_relative_error = parent.map(|p| {
        // compare in log space to stay meaningful when probabilities underflow
        let diff = (p.log_pr_pi - log_pr_pi).exp_m1();
        diff.abs()
    });
    Ok(DependenceReport {
        d_factor,
        pr_independent: log_ind.exp(),
        pr_pi: log_pr_pi.exp(),
        log_pr_independent: log_ind,
        log_pr_pi,
        child_memory_norms,
        child_memories: memories,
        parent_relative_error,
    })
}
