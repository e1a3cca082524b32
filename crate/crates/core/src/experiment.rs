//! Exhaustive and Monte Carlo experiments over trees, plus CSV reports.
//!
//! Work is split into fixed-size index chunks that do not depend on the
//! worker count; partial results are merged in chunk order, so serial and
//! parallel runs give bit-identical numbers.

use std::io::Write;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{self, BoundCertificate};
use crate::channel::{Channel, ContractionMode};
use crate::error::{Error, Result};
use crate::measures::{dot, norm_unchecked};
use crate::pruning::{forward_sample_with, posterior, prune, prune_nodes, Prior};
use crate::tree::{TreeLimits, TreeSpec};

pub const PATTERN_CHUNK: u64 = 4096;
pub const SAMPLE_CHUNK: u64 = 1024;
pub const CSV_SCHEMA_VERSION: u32 = 1;
/// Tolerance for the per-pattern inequality families.
pub const CHAIN_TOL: f64 = 1e-10;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn run_chunks<T, F>(total: u64, chunk: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let ranges: Vec<Range<u64>> = (0..total.div_ceil(chunk))
        .map(|k| k * chunk..((k + 1) * chunk).min(total))
        .collect();
    if workers <= 1 {
        return ranges.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| ranges.into_par_iter().map(&f).collect()),
        Err(_) => ranges.into_iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvSum {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyEstimate {
    pub samples: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub standard_error: f64,
}

/// One depth's worth of statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub g: usize,
    pub pattern_count: u64,
    /// Patterns with zero probability; excluded from the norm statistics.
    pub impossible_count: u64,
    pub max_memory_norm: f64,
    pub expected_memory_norm_pi: f64,
    pub expected_memory_norm_mu: f64,
    /// `Σ_∂ |ρ^i_∂ − ρ^j_∂|` for every `i < j`.
    pub tv_sums: Vec<TvSum>,
    /// Sanity sums; both should be 1.
    pub total_probability_pi: f64,
    pub total_probability_mu: f64,
    pub decay_ratio: Option<f64>,
    pub map_accuracy: Option<AccuracyEstimate>,
}

#[derive(Debug, Clone)]
struct StatsPartial {
    impossible: u64,
    max_norm: f64,
    e_pi: CompensatedSum,
    e_mu: CompensatedSum,
    p_pi: CompensatedSum,
    p_mu: CompensatedSum,
    tv: Vec<CompensatedSum>,
}

fn state_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Exact statistics over every leaf pattern of `tree`.
pub fn exhaustive_stats(tree: &TreeSpec, mu: &Prior, workers: usize) -> Result<ExperimentRow> {
    let count = tree.pattern_count()?;
    if mu.len() != tree.alphabet_size() {
        return Err(Error::BadPrior(format!(
            "prior has {} entries, alphabet has {}",
            mu.len(),
            tree.alphabet_size()
        )));
    }
    let pi = tree.pi();
    let pairs = state_pairs(tree.alphabet_size());

    let partials = run_chunks(
        count,
        PATTERN_CHUNK,
        workers,
        |range| -> Result<StatsPartial> {
            let mut part = StatsPartial {
                impossible: 0,
                max_norm: 0.0,
                e_pi: CompensatedSum::default(),
                e_mu: CompensatedSum::default(),
                p_pi: CompensatedSum::default(),
                p_mu: CompensatedSum::default(),
                tv: vec![CompensatedSum::default(); pairs.len()],
            };
            for index in range {
                let state = match prune(tree, &tree.pattern_at(index)) {
                    Ok(s) => s,
                    Err(Error::PatternImpossible) => {
                        part.impossible += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let w_pi = state.log_pr_pi.exp();
                let w_mu = w_pi * dot(mu.as_slice(), &state.rho_tilde);
                let norm = norm_unchecked(&state.memory, pi);
                part.max_norm = part.max_norm.max(norm);
                part.e_pi.add(w_pi * norm);
                part.e_mu.add(w_mu * norm);
                part.p_pi.add(w_pi);
                part.p_mu.add(w_mu);
                for (acc, &(i, j)) in part.tv.iter_mut().zip(&pairs) {
                    acc.add(w_pi * (state.rho_tilde[i] - state.rho_tilde[j]).abs());
                }
            }
            Ok(part)
        },
    );

    let mut impossible = 0;
    let mut max_norm = 0.0_f64;
    let mut e_pi = CompensatedSum::default();
    let mut e_mu = CompensatedSum::default();
    let mut p_pi = CompensatedSum::default();
    let mut p_mu = CompensatedSum::default();
    let mut tv = vec![CompensatedSum::default(); pairs.len()];
    for part in partials {
        let part = part?;
        impossible += part.impossible;
        max_norm = max_norm.max(part.max_norm);
        e_pi.merge(&part.e_pi);
        e_mu.merge(&part.e_mu);
        p_pi.merge(&part.p_pi);
        p_mu.merge(&part.p_mu);
        for (a, b) in tv.iter_mut().zip(&part.tv) {
            a.merge(b);
        }
    }

    Ok(ExperimentRow {
        g: tree.levels(),
        pattern_count: count,
        impossible_count: impossible,
        max_memory_norm: max_norm,
        expected_memory_norm_pi: e_pi.value(),
        expected_memory_norm_mu: e_mu.value(),
        tv_sums: pairs
            .iter()
            .zip(&tv)
            .map(|(&(i, j), s)| TvSum {
                i,
                j,
                value: s.value(),
            })
            .collect(),
        total_probability_pi: p_pi.value(),
        total_probability_mu: p_mu.value(),
        decay_ratio: None,
        map_accuracy: None,
    })
}

/// Outcome of one family of inequalities checked over all patterns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityFamily {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    /// Largest `lhs − rhs` seen; non-positive when every instance holds.
    pub worst_slack: f64,
}

impl InequalityFamily {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: 0,
            worst_slack: f64::NEG_INFINITY,
        }
    }

    /// `lhs ≤ rhs` up to `tol` scaled by `scale`.
    fn record(&mut self, lhs: f64, rhs: f64, scale: f64) {
        self.checked += 1;
        let slack = lhs - rhs;
        self.worst_slack = self.worst_slack.max(slack);
        if slack > CHAIN_TOL * scale {
            self.violations += 1;
        }
    }

    fn merge(&mut self, other: &InequalityFamily) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst_slack = self.worst_slack.max(other.worst_slack);
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Numerical check of the equivalence between unsolvability in expectation
/// (under any positive prior or under π) and TV-unsolvability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub patterns: u64,
    pub min_pi: f64,
    pub min_mu: f64,
    /// `Pr(∂)·min π ≤ Pr_π(∂) ≤ Pr(∂)/min μ`, per pattern.
    pub probability_chain: InequalityFamily,
    /// `|ρ̃^i − ρ̃^j| ≤ |ρ̃^i − 1| + |ρ̃^j − 1|`, per pattern and pair.
    pub tv_triangle: InequalityFamily,
    /// `|ρ̃^i − 1| ≤ Σ_{j≠i} π_j |ρ̃^i − ρ̃^j|`, per pattern and state.
    pub tv_reverse: InequalityFamily,
    /// `min π·E_μ ≤ E^π ≤ E_μ/min μ` for the L1 memory norm.
    pub expectation_chain: InequalityFamily,
    pub expected_l1_mu: f64,
    pub expected_l1_pi: f64,
    /// Largest `|Σ|ρ^i − ρ^j| − E^π|ρ̃^i − ρ̃^j||` over pairs.
    pub tv_identity_error: f64,
}

impl EquivalenceReport {
    pub fn all_hold(&self) -> bool {
        self.probability_chain.holds()
            && self.tv_triangle.holds()
            && self.tv_reverse.holds()
            && self.expectation_chain.holds()
    }
}

#[derive(Debug, Clone)]
struct EquivPartial {
    patterns: u64,
    prob: InequalityFamily,
    tri: InequalityFamily,
    rev: InequalityFamily,
    l1_mu: CompensatedSum,
    l1_pi: CompensatedSum,
    tv_raw: Vec<CompensatedSum>,
    tv_weighted: Vec<CompensatedSum>,
}

pub fn equivalence_check(tree: &TreeSpec, mu: &Prior, workers: usize) -> Result<EquivalenceReport> {
    let count = tree.pattern_count()?;
    if mu.len() != tree.alphabet_size() {
        return Err(Error::BadPrior(
            "prior length does not match alphabet".into(),
        ));
    }
    let pi = tree.pi();
    let n = tree.alphabet_size();
    let pairs = state_pairs(n);
    let min_pi = tree.min_pi();
    let min_mu = mu.min();

    let partials = run_chunks(
        count,
        PATTERN_CHUNK,
        workers,
        |range| -> Result<EquivPartial> {
            let mut part = EquivPartial {
                patterns: 0,
                prob: InequalityFamily::new("probability_chain"),
                tri: InequalityFamily::new("tv_triangle"),
                rev: InequalityFamily::new("tv_reverse"),
                l1_mu: CompensatedSum::default(),
                l1_pi: CompensatedSum::default(),
                tv_raw: vec![CompensatedSum::default(); pairs.len()],
                tv_weighted: vec![CompensatedSum::default(); pairs.len()],
            };
            for index in range {
                let state = match prune(tree, &tree.pattern_at(index)) {
                    Ok(s) => s,
                    Err(Error::PatternImpossible) => continue,
                    Err(e) => return Err(e),
                };
                part.patterns += 1;
                let rt = &state.rho_tilde;
                let pr_pi = state.log_pr_pi.exp();
                let pr_mu = dot(mu.as_slice(), &state.rho);
                part.prob.record(pr_mu * min_pi, pr_pi, pr_pi);
                part.prob.record(pr_pi, pr_mu / min_mu, pr_pi);

                let l1: f64 = rt.iter().map(|v| (v - 1.0).abs()).sum();
                part.l1_mu.add(pr_mu * l1);
                part.l1_pi.add(pr_pi * l1);

                for (k, &(i, j)) in pairs.iter().enumerate() {
                    let diff = (rt[i] - rt[j]).abs();
                    part.tri
                        .record(diff, (rt[i] - 1.0).abs() + (rt[j] - 1.0).abs(), 1.0 + diff);
                    part.tv_raw[k].add((state.rho[i] - state.rho[j]).abs());
                    part.tv_weighted[k].add(pr_pi * diff);
                }
                for i in 0..n {
                    let rhs: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| pi[j] * (rt[i] - rt[j]).abs())
                        .sum();
                    part.rev.record((rt[i] - 1.0).abs(), rhs, 1.0 + rhs);
                }
            }
            Ok(part)
        },
    );

    let mut patterns = 0;
    let mut prob = InequalityFamily::new("probability_chain");
    let mut tri = InequalityFamily::new("tv_triangle");
    let mut rev = InequalityFamily::new("tv_reverse");
    let mut l1_mu = CompensatedSum::default();
    let mut l1_pi = CompensatedSum::default();
    let mut tv_raw = vec![CompensatedSum::default(); pairs.len()];
    let mut tv_weighted = vec![CompensatedSum::default(); pairs.len()];
    for part in partials {
        let part = part?;
        patterns += part.patterns;
        prob.merge(&part.prob);
        tri.merge(&part.tri);
        rev.merge(&part.rev);
        l1_mu.merge(&part.l1_mu);
        l1_pi.merge(&part.l1_pi);
        for k in 0..pairs.len() {
            tv_raw[k].merge(&part.tv_raw[k]);
            tv_weighted[k].merge(&part.tv_weighted[k]);
        }
    }
    let (e_mu, e_pi) = (l1_mu.value(), l1_pi.value());
    let mut expectation_chain = InequalityFamily::new("expectation_chain");
    expectation_chain.record(min_pi * e_mu, e_pi, 1.0 + e_pi);
    expectation_chain.record(e_pi, e_mu / min_mu, 1.0 + e_pi);
    let tv_identity_error = tv_raw
        .iter()
        .zip(&tv_weighted)
        .map(|(a, b)| (a.value() - b.value()).abs())
        .fold(0.0, f64::max);

    Ok(EquivalenceReport {
        patterns,
        min_pi,
        min_mu,
        probability_chain: prob,
        tv_triangle: tri,
        tv_reverse: rev,
        expectation_chain,
        expected_l1_mu: e_mu,
        expected_l1_pi: e_pi,
        tv_identity_error,
    })
}

/// Exhaustive rows for `g` in `levels` on complete `d`-ary trees with one
/// channel everywhere, compared against the certified per-level factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub d: usize,
    pub mode: ContractionMode,
    pub contraction: f64,
    pub certificate: BoundCertificate,
    /// `3·C·d` at ε = 1/2, present when the certificate is satisfied.
    pub per_level_factor: Option<f64>,
    pub rows: Vec<ExperimentRow>,
    /// `factor^g · √(1/min π − 1)` per row, when a factor is available.
    pub norm_bounds: Vec<Option<f64>>,
}

impl SweepReport {
    /// Rows whose max memory norm or decay ratio exceeds the certified bound.
    pub fn bound_violations(&self) -> Vec<usize> {
        let Some(factor) = self.per_level_factor else {
            return Vec::new();
        };
        self.rows
            .iter()
            .zip(&self.norm_bounds)
            .filter(|(row, bound)| {
                let over_ratio = row.decay_ratio.is_some_and(|r| r > factor + 1e-9);
                let over_norm = bound.is_some_and(|b| row.max_memory_norm > b + 1e-12);
                over_ratio || over_norm
            })
            .map(|(row, _)| row.g)
            .collect()
    }
}

pub fn decay_sweep(
    channel: &Channel,
    d: usize,
    levels: std::ops::RangeInclusive<usize>,
    mode: Option<ContractionMode>,
    mu: Option<&Prior>,
    workers: usize,
) -> Result<SweepReport> {
    decay_sweep_with_limits(channel, d, levels, mode, mu, workers, TreeLimits::default())
}

pub fn decay_sweep_with_limits(
    channel: &Channel,
    d: usize,
    levels: std::ops::RangeInclusive<usize>,
    mode: Option<ContractionMode>,
    mu: Option<&Prior>,
    workers: usize,
    limits: TreeLimits,
) -> Result<SweepReport> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level range".into()));
    }
    let mode = mode.unwrap_or_else(|| channel.best_contraction().0);
    let contraction = channel.contraction_constant(mode)?;
    let certificate = certify::certify_channel(channel, d, Some(mode), false, None)?;
    let per_level_factor = certificate.satisfied.then(|| {
        certify::level_factor(certify::DEFAULT_PATTERNWISE_EPSILON) * contraction * d as f64
    });
    let stationary = Prior::new(channel.pi().to_vec())?;
    let mu = mu.unwrap_or(&stationary);

    let (start, end) = (*levels.start(), *levels.end());
    let first = start.saturating_sub(1);
    let mut previous: Option<f64> = None;
    let mut rows = Vec::new();
    let mut norm_bounds = Vec::new();
    let ceiling = (1.0 / channel.min_pi() - 1.0).sqrt();
    for g in first..=end {
        let tree = TreeSpec::complete_dary_with_limits(d, g, channel.clone(), limits)?;
        let mut row = exhaustive_stats(&tree, mu, workers)?;
        row.decay_ratio = previous.and_then(|p| (p > 0.0).then(|| row.max_memory_norm / p));
        previous = Some(row.max_memory_norm);
        if g >= start {
            norm_bounds.push(per_level_factor.map(|f| f.powi(g as i32) * ceiling));
            rows.push(row);
        }
    }
    Ok(SweepReport {
        d,
        mode,
        contraction,
        certificate,
        per_level_factor,
        rows,
        norm_bounds,
    })
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// MAP reconstruction accuracy of the root state. Sample `i` uses its own
/// stream derived from `seed`, so the result does not depend on `workers`.
pub fn monte_carlo_reconstruction(
    tree: &TreeSpec,
    mu: &Prior,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<AccuracyEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if mu.len() != tree.alphabet_size() {
        return Err(Error::BadPrior(
            "prior length does not match alphabet".into(),
        ));
    }
    let partials = run_chunks(n_samples, SAMPLE_CHUNK, workers, |range| -> Result<u64> {
        let mut correct = 0;
        for i in range {
            let mut rng = sample_rng(seed, i);
            let (root, pattern) = forward_sample_with(tree, mu, &mut rng)?;
            let state = prune(tree, &pattern)?;
            if posterior(&state, mu)?.map_state == root {
                correct += 1;
            }
        }
        Ok(correct)
    });
    let correct = partials.into_iter().sum::<Result<u64>>()?;
    let accuracy = correct as f64 / n_samples as f64;
    Ok(AccuracyEstimate {
        samples: n_samples,
        correct,
        accuracy,
        standard_error: (accuracy * (1.0 - accuracy) / n_samples as f64).sqrt(),
    })
}

/// Expected memory norms under `μ = π` at the root and at each child, with
/// the certificate comparing them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationFlow {
    pub root_expectation: f64,
    pub child_expectations: Vec<f64>,
    pub constants: Vec<f64>,
    pub certificate: BoundCertificate,
}

pub fn expectation_flow(
    tree: &TreeSpec,
    mode: Option<ContractionMode>,
    epsilon: Option<f64>,
    workers: usize,
) -> Result<ExpectationFlow> {
    let root = tree.root();
    let edges = tree.children(root).to_vec();
    if edges.is_empty() {
        return Err(Error::InvalidArgument("root has no children".into()));
    }
    let constants = edges
        .iter()
        .map(|e| {
            let ch = tree.channel(e);
            match mode {
                Some(m) => ch.contraction_constant(m),
                None => Ok(ch.best_contraction().1),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let count = tree.pattern_count()?;
    let pi = tree.pi();

    let partials = run_chunks(
        count,
        PATTERN_CHUNK,
        workers,
        |range| -> Result<Vec<CompensatedSum>> {
            let mut sums = vec![CompensatedSum::default(); edges.len() + 1];
            for index in range {
                let states = match prune_nodes(tree, &tree.pattern_at(index)) {
                    Ok(s) => s,
                    Err(Error::PatternImpossible) => continue,
                    Err(e) => return Err(e),
                };
                let w = states[root].log_pr_pi.exp();
                sums[0].add(w * states[root].memory_norm(pi));
                for (k, e) in edges.iter().enumerate() {
                    sums[k + 1].add(w * states[e.child].memory_norm(pi));
                }
            }
            Ok(sums)
        },
    );
    let mut sums = vec![CompensatedSum::default(); edges.len() + 1];
    for part in partials {
        for (a, b) in sums.iter_mut().zip(&part?) {
            a.merge(b);
        }
    }
    let root_expectation = sums[0].value();
    let child_expectations: Vec<f64> = sums[1..].iter().map(|s| s.value()).collect();
    let epsilon = epsilon.unwrap_or(certify::DEFAULT_PATTERNWISE_EPSILON);
    let certificate = certify::expectation_root_children_check(
        &constants,
        tree.min_pi(),
        epsilon,
        &child_expectations,
        root_expectation,
    )?;
    Ok(ExpectationFlow {
        root_expectation,
        child_expectations,
        constants,
        certificate,
    })
}

/// CSV column names for an alphabet of `states` symbols.
pub fn csv_header(states: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "g",
        "pattern_count",
        "max_mem_norm",
        "exp_mem_norm_pi",
        "exp_mem_norm_mu",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(
        state_pairs(states)
            .into_iter()
            .map(|(i, j)| format!("tv_{i}_{j}")),
    );
    cols.extend(
        ["decay_ratio", "map_acc", "map_se"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

/// Writes a `# infoflow-report schema=N` line, the header, then one line
/// per row. Missing optional values are left empty.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], states: usize, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    writeln!(out, "# infoflow-report schema={CSV_SCHEMA_VERSION}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    w.write_record(csv_header(states)).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for row in rows {
        let mut rec = vec![
            row.g.to_string(),
            row.pattern_count.to_string(),
            format!("{:e}", row.max_memory_norm),
            format!("{:e}", row.expected_memory_norm_pi),
            format!("{:e}", row.expected_memory_norm_mu),
        ];
        rec.extend(row.tv_sums.iter().map(|t| format!("{:e}", t.value)));
        rec.push(opt(row.decay_ratio));
        rec.push(opt(row.map_accuracy.map(|a| a.accuracy)));
        rec.push(opt(row.map_accuracy.map(|a| a.standard_error)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
