//! Certificates for the information-flow inequalities and the
//! unsolvability conditions built on them.
//!
//! A certificate first evaluates a precondition. Only when it is met are the
//! conclusions evaluated and asserted; otherwise the verdict is
//! `PreconditionUnmet` and nothing is claimed.
//!
//! The dependence floor `1 − 4ε²/(1 + 2ε)` is positive exactly when
//! `4ε² < 1 + 2ε`, i.e. `ε < (1 + √5)/4`. Past that ceiling the patternwise
//! level factor is undefined and is not reported.

use serde::Serialize;

use crate::channel::{Channel, ContractionMode};
use crate::error::{Error, Result};
use crate::measures::{expand_products, sup_norm};
use crate::pruning::LikelihoodState;

/// `|lhs − rhs|` below this is reported as a boundary case.
pub const BOUNDARY_TOL: f64 = 1e-12;
pub const DEFAULT_PATTERNWISE_EPSILON: f64 = 0.5;
pub const DEFAULT_EXPECTATION_EPSILON: f64 = 2.0;

/// `(1 + √5)/4`: the largest ε for which `1 − 4ε²/(1 + 2ε) > 0`.
pub fn epsilon_ceiling() -> f64 {
    (1.0 + 5f64.sqrt()) / 4.0
}

/// `4ε / (1 + 2ε)`.
pub fn mixing_threshold(epsilon: f64) -> f64 {
    4.0 * epsilon / (1.0 + 2.0 * epsilon)
}

/// `1 − 4ε²/(1 + 2ε)`, the lower bound on the dependence factor.
pub fn dependence_floor(epsilon: f64) -> f64 {
    1.0 - 4.0 * epsilon * epsilon / (1.0 + 2.0 * epsilon)
}

/// `(1 + ε) / (1 − 4ε²/(1 + 2ε))`.
pub fn level_factor(epsilon: f64) -> f64 {
    (1.0 + epsilon) / dependence_floor(epsilon)
}

/// `min π / √(1 − min π)`.
pub fn equilibrium_margin(min_pi: f64) -> f64 {
    min_pi / (1.0 - min_pi).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// `(1 + S/d)^d < 1 + (1 + ε)S`.
    PolynomialInequality,
    /// `|D − 1| < ε Σ‖m_c‖_∞`.
    DependenceMixing,
    /// Hadamard-product bound on the root memory vector.
    HadamardBound,
    /// Root memory vector bounded by the children's through `C_c`.
    RootChildrenBound,
    /// Expected root memory norm bounded by the children's.
    ExpectationRootChildren,
    /// `C d < min{1/3, min π/√(1 − min π)}`.
    Unsolvable,
    /// Same with `C = σ_1 max√π / min√π`.
    UnsolvableSingular,
    /// Same with `C = |θ_1|`.
    UnsolvableReversible,
    /// Same with the L2(π) operator norm.
    UnsolvableTight,
    /// `C d < min{1/3, (8/5) min π/√(1 − min π)}`.
    UnsolvableInExpectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    PreconditionUnmet,
    Violated,
}

/// One evaluated inequality `lhs < rhs` (or `≤`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub holds: bool,
    pub boundary: bool,
}

impl Check {
    /// Conclusions: equality within `BOUNDARY_TOL` counts as holding and is
    /// flagged as boundary (the all-zero-memory case gives `0 < 0`).
    fn conclusion(name: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let boundary = (lhs - rhs).abs() < BOUNDARY_TOL;
        Self {
            name,
            lhs,
            rhs,
            strict,
            holds: lhs < rhs || boundary,
            boundary,
        }
    }

    /// Preconditions: at the boundary a strict condition is unmet and a
    /// non-strict one is met.
    fn precondition(name: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let boundary = (lhs - rhs).abs() < BOUNDARY_TOL;
        let holds = if boundary { !strict } else { lhs < rhs };
        Self {
            name,
            lhs,
            rhs,
            strict,
            holds,
            boundary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateInputs {
    /// `C` or the per-child `C_c`, when the condition uses them.
    pub constants: Vec<f64>,
    pub d: Option<usize>,
    pub min_pi: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub condition_id: ConditionId,
    pub inputs: CertificateInputs,
    pub threshold_lhs: f64,
    pub threshold_rhs: f64,
    pub strict: bool,
    pub boundary: bool,
    pub satisfied: bool,
    /// Evaluated only when the precondition is met.
    pub conclusions: Vec<Check>,
    pub verdict: Verdict,
    /// Per-level contraction factor implied by a satisfied condition.
    pub decay_factor: Option<f64>,
}

impl BoundCertificate {
    fn build(
        condition_id: ConditionId,
        inputs: CertificateInputs,
        pre: Check,
        conclusions: impl FnOnce() -> Vec<Check>,
        decay_factor: impl FnOnce() -> Option<f64>,
    ) -> Self {
        let (conclusions, decay_factor, verdict) = if pre.holds {
            let c = conclusions();
            let verdict = if c.iter().all(|c| c.holds) {
                Verdict::Certified
            } else {
                Verdict::Violated
            };
            (c, decay_factor(), verdict)
        } else {
            (Vec::new(), None, Verdict::PreconditionUnmet)
        };
        Self {
            condition_id,
            inputs,
            threshold_lhs: pre.lhs,
            threshold_rhs: pre.rhs,
            strict: pre.strict,
            boundary: pre.boundary,
            satisfied: pre.holds,
            conclusions,
            verdict,
            decay_factor,
        }
    }

    pub fn conclusion(&self, name: &str) -> Option<&Check> {
        self.conclusions.iter().find(|c| c.name == name)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

fn check_memories(memories: &[Vec<f64>], pi: &[f64]) -> Result<()> {
    if memories.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one memory vector".into(),
        ));
    }
    if let Some(m) = memories.iter().find(|m| m.len() != pi.len()) {
        return Err(Error::DimensionMismatch(format!(
            "memory vector of length {} against pi of length {}",
            m.len(),
            pi.len()
        )));
    }
    Ok(())
}

/// `(1 + S/d)^d < 1 + (1 + ε)S` under `S ≤ 4ε/(1 + 2ε)`, for `S ∈ (0, 2)`.
pub fn lemma_poly_check(d: usize, s: f64, epsilon: f64) -> Result<BoundCertificate> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "d must be at least 2, got {d}"
        )));
    }
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::SOutOfRange(s));
    }
    check_epsilon(epsilon)?;
    let pre = Check::precondition("s_within_threshold", s, mixing_threshold(epsilon), false);
    Ok(BoundCertificate::build(
        ConditionId::PolynomialInequality,
        CertificateInputs {
            constants: vec![s],
            d: Some(d),
            min_pi: None,
            epsilon,
        },
        pre,
        || {
            vec![Check::conclusion(
                "polynomial",
                (1.0 + s / d as f64).powi(d as i32),
                1.0 + (1.0 + epsilon) * s,
                true,
            )]
        },
        || None,
    ))
}

/// Dependence factor of the memory vectors `m_c = P_c α̃_c − 1` stays near 1.
pub fn mixing_check(memories: &[Vec<f64>], pi: &[f64], epsilon: f64) -> Result<BoundCertificate> {
    check_memories(memories, pi)?;
    check_epsilon(epsilon)?;
    let sum_sup: f64 = memories.iter().map(|m| sup_norm(m)).sum();
    let d_factor = expand_products(memories, pi)?.dependence;
    let deviation = (d_factor - 1.0).abs();
    let pre = Check::precondition("sup_norm_sum", sum_sup, mixing_threshold(epsilon), false);
    Ok(BoundCertificate::build(
        ConditionId::DependenceMixing,
        CertificateInputs {
            constants: Vec::new(),
            d: Some(memories.len()),
            min_pi: Some(pi.iter().copied().fold(f64::INFINITY, f64::min)),
            epsilon,
        },
        pre,
        || {
            vec![
                Check::conclusion("deviation_vs_sup_sum", deviation, epsilon * sum_sup, true),
                Check::conclusion(
                    "deviation_vs_ceiling",
                    deviation,
                    4.0 * epsilon * epsilon / (1.0 + 2.0 * epsilon),
                    false,
                ),
            ]
        },
        || None,
    ))
}

/// Bounds the root memory norm by the sum of the mapped child memory norms.
///
/// `memories` are `m_c = P_c α̃_c − 1`; `root` is the parent's pruned state
/// and `d_factor` its dependence factor.
pub fn hadamard_check(
    memories: &[Vec<f64>],
    pi: &[f64],
    epsilon: f64,
    root: &LikelihoodState,
    d_factor: f64,
) -> Result<BoundCertificate> {
    check_memories(memories, pi)?;
    check_epsilon(epsilon)?;
    if root.rho_tilde.len() != pi.len() {
        return Err(Error::DimensionMismatch("root state and pi".into()));
    }
    let sum_sup: f64 = memories.iter().map(|m| sup_norm(m)).sum();
    let sum_pi: f64 = memories
        .iter()
        .map(|m| crate::measures::norm_unchecked(m, pi))
        .sum();
    let root_norm = root.memory_norm(pi);
    let pre = Check::precondition("sup_norm_sum", sum_sup, mixing_threshold(epsilon), false);
    Ok(BoundCertificate::build(
        ConditionId::HadamardBound,
        CertificateInputs {
            constants: Vec::new(),
            d: Some(memories.len()),
            min_pi: Some(pi.iter().copied().fold(f64::INFINITY, f64::min)),
            epsilon,
        },
        pre,
        || {
            let mut checks = vec![Check::conclusion(
                "weighted_root_norm",
                d_factor * root_norm,
                (1.0 + epsilon) * sum_pi,
                true,
            )];
            if epsilon < epsilon_ceiling() {
                checks.push(Check::conclusion(
                    "root_norm",
                    root_norm,
                    level_factor(epsilon) * sum_pi,
                    true,
                ));
            }
            checks
        },
        || (epsilon < epsilon_ceiling()).then(|| level_factor(epsilon)),
    ))
}

/// Bounds the root memory norm by the children's `‖α̃_c − 1‖_π` given
/// per-edge contraction constants `C_c`.
pub fn root_children_check(
    constants: &[f64],
    min_pi: f64,
    epsilon: f64,
    child_memory_norms: &[f64],
    root_memory_norm: f64,
    d_factor: f64,
) -> Result<BoundCertificate> {
    if constants.is_empty() || constants.len() != child_memory_norms.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} constants for {} children",
            constants.len(),
            child_memory_norms.len()
        )));
    }
    if let Some(c) = constants.iter().find(|c| c.is_nan() || **c <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contraction constants must be positive, got {c}"
        )));
    }
    if !(min_pi > 0.0 && min_pi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min pi {min_pi} outside (0, 1)"
        )));
    }
    check_epsilon(epsilon)?;
    let sum_c: f64 = constants.iter().sum();
    let weighted: f64 = constants
        .iter()
        .zip(child_memory_norms)
        .map(|(c, n)| c * n)
        .sum();
    let pre = Check::precondition(
        "constant_sum",
        sum_c,
        equilibrium_margin(min_pi) * mixing_threshold(epsilon),
        false,
    );
    Ok(BoundCertificate::build(
        ConditionId::RootChildrenBound,
        CertificateInputs {
            constants: constants.to_vec(),
            d: Some(constants.len()),
            min_pi: Some(min_pi),
            epsilon,
        },
        pre,
        || {
            let mut checks = vec![Check::conclusion(
                "weighted_root_norm",
                d_factor * root_memory_norm,
                (1.0 + epsilon) * weighted,
                true,
            )];
            if epsilon < epsilon_ceiling() {
                checks.push(Check::conclusion(
                    "root_norm",
                    root_memory_norm,
                    level_factor(epsilon) * weighted,
                    true,
                ));
            }
            checks
        },
        || (epsilon < epsilon_ceiling()).then(|| level_factor(epsilon) * sum_c),
    ))
}

/// Expected root memory norm under `μ = π` against the children's
/// expectations. The precondition is the same as [`root_children_check`].
pub fn expectation_root_children_check(
    constants: &[f64],
    min_pi: f64,
    epsilon: f64,
    child_expectations: &[f64],
    root_expectation: f64,
) -> Result<BoundCertificate> {
    let mut cert = root_children_check(
        constants,
        min_pi,
        epsilon,
        child_expectations,
        root_expectation,
        1.0,
    )?;
    cert.condition_id = ConditionId::ExpectationRootChildren;
    if cert.satisfied {
        let weighted: f64 = constants
            .iter()
            .zip(child_expectations)
            .map(|(c, n)| c * n)
            .sum();
        cert.conclusions = vec![Check::conclusion(
            "expected_root_norm",
            root_expectation,
            (1.0 + epsilon) * weighted,
            true,
        )];
        cert.verdict = if cert.conclusions[0].holds {
            Verdict::Certified
        } else {
            Verdict::Violated
        };
        cert.decay_factor = Some((1.0 + epsilon) * constants.iter().sum::<f64>());
    }
    Ok(cert)
}

fn unsolvability(
    condition_id: ConditionId,
    constant: f64,
    lhs_scale: f64,
    d: usize,
    min_pi: f64,
    epsilon: f64,
    expectation: bool,
) -> Result<BoundCertificate> {
    if !constant.is_finite() || constant < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "contraction constant {constant} is invalid"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    if !(min_pi > 0.0 && min_pi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min pi {min_pi} outside (0, 1)"
        )));
    }
    check_epsilon(epsilon)?;
    let margin = equilibrium_margin(min_pi) * mixing_threshold(epsilon);
    let rate_cap = if expectation {
        1.0 / (1.0 + epsilon)
    } else {
        dependence_floor(epsilon) / (1.0 + epsilon)
    };
    let rhs = rate_cap.min(margin);
    let lhs = constant * d as f64;
    // lhs_scale turns C·d back into σ_1·d for the singular-value corollary
    let pre = Check::precondition(
        "contraction_times_arity",
        lhs * lhs_scale,
        rhs * lhs_scale,
        true,
    );
    let factor = if expectation {
        Some((1.0 + epsilon) * lhs)
    } else {
        (epsilon < epsilon_ceiling()).then(|| level_factor(epsilon) * lhs)
    };
    Ok(BoundCertificate::build(
        condition_id,
        CertificateInputs {
            constants: vec![constant],
            d: Some(d),
            min_pi: Some(min_pi),
            epsilon,
        },
        pre,
        Vec::new,
        || factor,
    ))
}

/// Patternwise unsolvability for a given contraction constant `C`.
pub fn unsolvability_condition(
    constant: f64,
    d: usize,
    min_pi: f64,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    unsolvability(
        ConditionId::Unsolvable,
        constant,
        1.0,
        d,
        min_pi,
        epsilon.unwrap_or(DEFAULT_PATTERNWISE_EPSILON),
        false,
    )
}

/// Unsolvability in expectation for a given contraction constant `C`.
pub fn unsolvability_in_expectation(
    constant: f64,
    d: usize,
    min_pi: f64,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    unsolvability(
        ConditionId::UnsolvableInExpectation,
        constant,
        1.0,
        d,
        min_pi,
        epsilon.unwrap_or(DEFAULT_EXPECTATION_EPSILON),
        true,
    )
}

/// `|θ_1| d < min{1/3, min π/√(1 − min π)}`.
pub fn unsolvable_reversible(
    channel: &Channel,
    d: usize,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    let c = channel.contraction_constant(ContractionMode::ReversibleEig)?;
    unsolvability(
        ConditionId::UnsolvableReversible,
        c,
        1.0,
        d,
        channel.min_pi(),
        epsilon.unwrap_or(DEFAULT_PATTERNWISE_EPSILON),
        false,
    )
}

/// `σ_1 d < (min√π / max√π) min{1/3, min π/√(1 − min π)}`.
pub fn unsolvable_singular(
    channel: &Channel,
    d: usize,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    let profile = channel.profile();
    let ratio = if profile.c_general > 0.0 {
        profile.sigma1 / profile.c_general
    } else {
        let max = channel.pi().iter().copied().fold(0.0, f64::max).sqrt();
        channel.min_pi().sqrt() / max
    };
    unsolvability(
        ConditionId::UnsolvableSingular,
        profile.c_general,
        ratio,
        d,
        channel.min_pi(),
        epsilon.unwrap_or(DEFAULT_PATTERNWISE_EPSILON),
        false,
    )
}

/// Unsolvability with the tight L2(π) operator norm as `C`.
pub fn unsolvable_tight(
    channel: &Channel,
    d: usize,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    unsolvability(
        ConditionId::UnsolvableTight,
        channel.profile().c_tight,
        1.0,
        d,
        channel.min_pi(),
        epsilon.unwrap_or(DEFAULT_PATTERNWISE_EPSILON),
        false,
    )
}

/// Certifies a channel on a `d`-ary tree. Without a mode the smallest
/// available constant is used.
pub fn certify_channel(
    channel: &Channel,
    d: usize,
    mode: Option<ContractionMode>,
    expectation: bool,
    epsilon: Option<f64>,
) -> Result<BoundCertificate> {
    let mode = mode.unwrap_or_else(|| channel.best_contraction().0);
    if expectation {
        let c = channel.contraction_constant(mode)?;
        return unsolvability_in_expectation(c, d, channel.min_pi(), epsilon);
    }
    match mode {
        ContractionMode::ReversibleEig => unsolvable_reversible(channel, d, epsilon),
        ContractionMode::GeneralSingular => unsolvable_singular(channel, d, epsilon),
        ContractionMode::TightPiOperator => unsolvable_tight(channel, d, epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_check_examples() {
        let c = lemma_poly_check(2, 1.0, 0.5).unwrap();
        assert!(c.satisfied && c.boundary);
        let concl = &c.conclusions[0];
        assert_eq!((concl.lhs, concl.rhs), (2.25, 2.5));
        assert_eq!(c.verdict, Verdict::Certified);

        let c = lemma_poly_check(2, 1.5, 0.5).unwrap();
        assert!(!c.satisfied);
        assert!(c.conclusions.is_empty());
        assert_eq!(c.verdict, Verdict::PreconditionUnmet);

        assert_eq!(lemma_poly_check(2, 0.0, 0.5), Err(Error::SOutOfRange(0.0)));
        assert_eq!(lemma_poly_check(2, 2.0, 0.5), Err(Error::SOutOfRange(2.0)));
        assert!(lemma_poly_check(1, 1.0, 0.5).is_err());
    }

    #[test]
    fn mixing_examples() {
        let pi = [0.5, 0.5];
        let zero = vec![vec![0.0, 0.0]; 2];
        let c = mixing_check(&zero, &pi, 0.5).unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
        assert!(c.conclusions.iter().all(|k| k.boundary || k.lhs == 0.0));

        // star d=2 BSC(0.25), pattern 00
        let m = vec![vec![0.5, -0.5]; 2];
        let c = mixing_check(&m, &pi, 0.5).unwrap();
        assert!(c.satisfied && c.boundary);
        assert_eq!(c.verdict, Verdict::Certified);
        let k = c.conclusion("deviation_vs_sup_sum").unwrap();
        assert_eq!((k.lhs, k.rhs), (0.25, 0.5));
    }

    #[test]
    fn threshold_arithmetic() {
        assert!((epsilon_ceiling() - 0.809_016_994_374_947_4).abs() < 1e-15);
        assert_eq!(level_factor(0.5), 3.0);
        assert_eq!(mixing_threshold(0.5), 1.0);
        assert!((equilibrium_margin(0.5) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn root_children_examples() {
        let c = root_children_check(&[0.1, 0.1], 0.5, 0.5, &[1.0, 1.0], 0.1, 1.0).unwrap();
        assert!(c.satisfied);
        assert!((c.threshold_rhs - 0.5f64.sqrt()).abs() < 1e-15);
        let c = root_children_check(&[0.5, 0.5], 0.5, 0.5, &[1.0, 1.0], 0.8, 1.25).unwrap();
        assert!(!c.satisfied);
        assert_eq!(c.verdict, Verdict::PreconditionUnmet);
        assert!(root_children_check(&[0.0], 0.5, 0.5, &[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn unsolvability_examples() {
        let c = certify_channel(
            &Channel::bsc(0.45).unwrap(),
            2,
            Some(ContractionMode::ReversibleEig),
            false,
            None,
        )
        .unwrap();
        assert!(c.satisfied);
        assert!((c.threshold_lhs - 0.2).abs() < 1e-12);
        assert!((c.threshold_rhs - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.decay_factor.unwrap() - 0.6).abs() < 1e-12);

        let c = certify_channel(&Channel::bsc(0.25).unwrap(), 2, None, false, None).unwrap();
        assert!(!c.satisfied);
        assert_eq!(c.verdict, Verdict::PreconditionUnmet);

        for d in 1..6 {
            let c = certify_channel(&Channel::bsc(0.5).unwrap(), d, None, false, None).unwrap();
            assert!(c.satisfied);
            assert!(c.inputs.constants[0] < 1e-15);
        }
    }

    #[test]
    fn expectation_threshold_uses_eight_fifths() {
        let c = unsolvability_in_expectation(0.01, 2, 0.1, None).unwrap();
        let x = equilibrium_margin(0.1);
        assert!((c.threshold_rhs - (1.0f64 / 3.0).min(1.6 * x)).abs() < 1e-15);
    }

    #[test]
    fn singular_corollary_scales_both_sides() {
        let ch = Channel::new(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let c = unsolvable_singular(&ch, 1, None).unwrap();
        let p = ch.profile();
        assert!((c.threshold_lhs - p.sigma1).abs() < 1e-15);
        let ratio = (0.25f64 / 0.75).sqrt();
        let expected = ratio * (1.0f64 / 3.0).min(equilibrium_margin(0.25));
        assert!((c.threshold_rhs - expected).abs() < 1e-12);
    }

    #[test]
    fn strict_boundary_is_unmet() {
        // C d exactly 1/3 with a large margin
        let c = unsolvability_condition(1.0 / 6.0, 2, 0.5, None).unwrap();
        assert!(c.boundary);
        assert!(!c.satisfied);
    }
}
