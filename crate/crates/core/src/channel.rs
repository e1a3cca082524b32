//! Noisy channels: validated Markov matrices, their equilibrium distribution
//! and the constants bounding how fast they contract memory vectors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::dot;

/// Row sums and non-negativity are checked against this.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Required accuracy of `πᵀP = πᵀ`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Default absolute tolerance on detailed-balance residuals.
pub const DEFAULT_REVERSIBILITY_TOL: f64 = 1e-10;
/// Required accuracy of `π·x = 1` for normalized likelihood vectors.
pub const NORMALIZED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptions {
    pub reversibility_tol: f64,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self {
            reversibility_tol: DEFAULT_REVERSIBILITY_TOL,
        }
    }
}

/// On-disk channel document: `{"matrix": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub matrix: Vec<Vec<f64>>,
}

/// Spectral decomposition of a reversible channel,
/// `P = Σ_k θ_k v_k h_kᵀ` with `h_k = π ∘ v_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversibleEigen {
    /// `θ_0 = 1` first, then ordered by decreasing absolute value.
    pub eigenvalues: Vec<f64>,
    /// Right eigenvectors `v_k`, orthonormal in L2(π); `v_0 = 1`.
    pub right: Vec<Vec<f64>>,
    /// Left eigenvectors `h_k = π ∘ v_k`; `h_0 = π`.
    pub left: Vec<Vec<f64>>,
}

impl ReversibleEigen {
    /// Rebuilds the transition matrix from the eigenpairs.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.eigenvalues.len();
        let mut out = vec![vec![0.0; n]; n];
        for ((theta, v), h) in self.eigenvalues.iter().zip(&self.right).zip(&self.left) {
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += theta * v[i] * h[j];
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile {
    /// `|θ_1|`, only for reversible channels.
    pub theta1_abs: Option<f64>,
    /// Largest singular value of `P − 1πᵀ`.
    pub sigma1: f64,
    /// `σ_1 · max √π / min √π`.
    pub c_general: f64,
    /// Operator norm of `P − 1πᵀ` in L2(π), i.e. the largest singular value
    /// of `Ψ^{1/2}(P − Π)Ψ^{−1/2}`.
    pub c_tight: f64,
    pub eigen: Option<ReversibleEigen>,
}

/// Which constant to use for `‖Pα̃ − 1‖_π ≤ C‖α̃ − 1‖_π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionMode {
    ReversibleEig,
    GeneralSingular,
    TightPiOperator,
}

impl ContractionMode {
    pub const ALL: [ContractionMode; 3] = [
        ContractionMode::ReversibleEig,
        ContractionMode::GeneralSingular,
        ContractionMode::TightPiOperator,
    ];
}

impl fmt::Display for ContractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContractionMode::ReversibleEig => "theta1",
            ContractionMode::GeneralSingular => "sigma1",
            ContractionMode::TightPiOperator => "tight",
        })
    }
}

impl FromStr for ContractionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta1" | "reversible_eig" => Ok(ContractionMode::ReversibleEig),
            "sigma1" | "general_singular" => Ok(ContractionMode::GeneralSingular),
            "tight" | "tight_pi_operator" => Ok(ContractionMode::TightPiOperator),
            other => Err(Error::InvalidArgument(format!(
                "unknown contraction mode `{other}`"
            ))),
        }
    }
}

/// A validated noisy channel. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    size: usize,
    /// Row-major `size × size`.
    matrix: Vec<f64>,
    pi: Vec<f64>,
    reversible: bool,
    profile: SpectralProfile,
}

impl Channel {
    /// Validates `rows` as an irreducible aperiodic Markov matrix.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        Self::with_options(rows, ChannelOptions::default())
    }

    pub fn with_options(rows: &[Vec<f64>], options: ChannelOptions) -> Result<Self> {
        let (size, matrix) = check_stochastic(rows)?;
        if !is_primitive(size, &matrix) {
            return Err(Error::NotPrimitive);
        }
        let pi = solve_stationary(size, &matrix)?;
        Ok(Self::assemble(size, matrix, pi, options))
    }

    /// Builds a channel whose equilibrium is supplied rather than solved for,
    /// skipping the primitivity test. Meant for degenerate channels such as
    /// the noiseless identity, whose equilibrium is not unique.
    pub fn with_equilibrium(rows: &[Vec<f64>], pi: &[f64]) -> Result<Self> {
        let (size, matrix) = check_stochastic(rows)?;
        if pi.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "pi has length {}, matrix has size {size}",
                pi.len()
            )));
        }
        if pi.iter().any(|&p| p.is_nan() || p <= 0.0)
            || (pi.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL
        {
            return Err(Error::InvalidArgument(
                "pi must be positive and sum to 1".into(),
            ));
        }
        if stationary_residual(size, &matrix, pi) > STATIONARY_TOL {
            return Err(Error::InvalidArgument(
                "pi is not stationary for the matrix".into(),
            ));
        }
        Ok(Self::assemble(
            size,
            matrix,
            pi.to_vec(),
            ChannelOptions::default(),
        ))
    }

    /// Binary symmetric channel with flip probability `p`. `p = 0` yields the
    /// noiseless identity channel with uniform equilibrium.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "flip probability {p} outside [0, 1]"
            )));
        }
        let rows = vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
        if p == 0.0 {
            Self::with_equilibrium(&rows, &[0.5, 0.5])
        } else {
            Self::new(&rows)
        }
    }

    /// Symmetric channel on `states` symbols that keeps its input with
    /// probability `1 − p` and otherwise moves uniformly to another symbol.
    pub fn symmetric(states: usize, p: f64) -> Result<Self> {
        if states < 2 {
            return Err(Error::DimensionMismatch("need at least 2 states".into()));
        }
        let off = p / (states - 1) as f64;
        let rows: Vec<Vec<f64>> = (0..states)
            .map(|i| {
                (0..states)
                    .map(|j| if i == j { 1.0 - p } else { off })
                    .collect()
            })
            .collect();
        Self::new(&rows)
    }

    pub fn from_document(doc: &ChannelDocument) -> Result<Self> {
        Self::new(&doc.matrix)
    }

    fn assemble(size: usize, matrix: Vec<f64>, pi: Vec<f64>, options: ChannelOptions) -> Self {
        let reversible = (0..size).all(|i| {
            (0..size).all(|j| {
                (pi[i] * matrix[i * size + j] - pi[j] * matrix[j * size + i]).abs()
                    <= options.reversibility_tol
            })
        });
        let profile = compute_profile(size, &matrix, &pi, reversible);
        Self {
            size,
            matrix,
            pi,
            reversible,
            profile,
        }
    }

    /// Alphabet cardinality `K + 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn min_pi(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.matrix[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn profile(&self) -> &SpectralProfile {
        &self.profile
    }

    /// `P·x`, no normalization checks.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size).map(|i| dot(self.row(i), x)).collect()
    }

    /// `P·ρ̃` for a normalized likelihood vector; the result is again normalized.
    pub fn apply_to_normalized(&self, rho_tilde: &[f64]) -> Result<Vec<f64>> {
        if rho_tilde.len() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, channel has size {}",
                rho_tilde.len(),
                self.size
            )));
        }
        if rho_tilde.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "likelihood entries must be finite and >= 0".into(),
            ));
        }
        let mean = dot(&self.pi, rho_tilde);
        if (mean - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized(mean));
        }
        Ok(self.apply(rho_tilde))
    }

    /// A constant `C` with `‖Pα̃ − 1‖_π ≤ C‖α̃ − 1‖_π`.
    pub fn contraction_constant(&self, mode: ContractionMode) -> Result<f64> {
        match mode {
            ContractionMode::ReversibleEig => self.profile.theta1_abs.ok_or_else(|| {
                Error::ModeUnavailable("theta1 requires a reversible channel".into())
            }),
            ContractionMode::GeneralSingular => Ok(self.profile.c_general),
            ContractionMode::TightPiOperator => Ok(self.profile.c_tight),
        }
    }

    /// Smallest constant among the modes available for this channel. Values
    /// within rounding of each other keep the earlier mode in `ALL`.
    pub fn best_contraction(&self) -> (ContractionMode, f64) {
        ContractionMode::ALL
            .iter()
            .filter_map(|&m| self.contraction_constant(m).ok().map(|c| (m, c)))
            .fold(
                None,
                |best: Option<(ContractionMode, f64)>, cur| match best {
                    Some(b) if b.1 <= cur.1 + 1e-12 => Some(b),
                    _ => Some(cur),
                },
            )
            .expect("general_singular is always available")
    }
}

pub fn validate_channel(rows: &[Vec<f64>]) -> Result<Channel> {
    Channel::new(rows)
}

pub fn spectral_profile(channel: &Channel) -> &SpectralProfile {
    channel.profile()
}

/// Equilibrium distribution of a primitive stochastic matrix.
pub fn stationary_distribution(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (size, matrix) = check_stochastic(rows)?;
    solve_stationary(size, &matrix)
}

fn check_stochastic(rows: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "matrix must be at least 2x2, got {n} rows"
        )));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotStochastic(format!("row {i} has entry {v}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
        }
        flat.extend_from_slice(row);
    }
    Ok((n, flat))
}

fn bool_mul(n: usize, a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= b[k * n + j];
                }
            }
        }
    }
    out
}

/// Wielandt: a nonnegative `n × n` matrix is primitive iff `A^{n²−2n+2} > 0`.
/// Works on the zero pattern so no power can underflow.
fn is_primitive(n: usize, matrix: &[f64]) -> bool {
    let mut base: Vec<bool> = matrix.iter().map(|&v| v > 0.0).collect();
    let mut exp = n * n - 2 * n + 2;
    let mut acc: Option<Vec<bool>> = None;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => bool_mul(n, &a, &base),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = bool_mul(n, &base, &base);
        }
    }
    acc.is_some_and(|a| a.iter().all(|&b| b))
}

fn stationary_residual(n: usize, matrix: &[f64], pi: &[f64]) -> f64 {
    (0..n)
        .map(|j| ((0..n).map(|i| pi[i] * matrix[i * n + j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

/// Solves `(Pᵀ − I)π = 0` with the last equation replaced by `Σπ = 1`.
fn solve_stationary(n: usize, matrix: &[f64]) -> Result<Vec<f64>> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for r in 0..n - 1 {
        for c in 0..n {
            a[(r, c)] = matrix[c * n + r] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSolve("augmented system has no unique solution".into()))?;
    let pi: Vec<f64> = pi.iter().copied().collect();
    if pi.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::SingularSolve(
            "solution is not strictly positive".into(),
        ));
    }
    let residual = stationary_residual(n, matrix, &pi);
    if residual >= STATIONARY_TOL {
        return Err(Error::SingularSolve(format!("residual {residual:e}")));
    }
    Ok(pi)
}

fn largest_singular_value(m: DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

fn compute_profile(n: usize, matrix: &[f64], pi: &[f64], reversible: bool) -> SpectralProfile {
    let p = DMatrix::from_row_slice(n, n, matrix);
    let centered = DMatrix::from_fn(n, n, |i, j| p[(i, j)] - pi[j]);
    let sqrt_pi: Vec<f64> = pi.iter().map(|v| v.sqrt()).collect();
    let max_sqrt = sqrt_pi.iter().copied().fold(0.0, f64::max);
    let min_sqrt = sqrt_pi.iter().copied().fold(f64::INFINITY, f64::min);

    let sigma1 = largest_singular_value(centered.clone());
    let c_general = sigma1 * max_sqrt / min_sqrt;
    let weighted = DMatrix::from_fn(n, n, |i, j| sqrt_pi[i] * centered[(i, j)] / sqrt_pi[j]);
    let c_tight = largest_singular_value(weighted);

    let eigen = reversible.then(|| reversible_eigen(&p, pi, &sqrt_pi));
    let theta1_abs = eigen
        .as_ref()
        .map(|e| e.eigenvalues.get(1).map_or(0.0, |t| t.abs()));

    SpectralProfile {
        theta1_abs,
        sigma1,
        c_general,
        c_tight,
        eigen,
    }
}

/// Diagonalizes the symmetric matrix `Ψ^{1/2} P Ψ^{−1/2}` and maps its
/// orthonormal eigenvectors back to π-orthonormal right/left eigenvectors.
fn reversible_eigen(p: &DMatrix<f64>, pi: &[f64], sqrt_pi: &[f64]) -> ReversibleEigen {
    let n = pi.len();
    let s = DMatrix::from_fn(n, n, |i, j| sqrt_pi[i] * p[(i, j)] / sqrt_pi[j]);
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);

    let mut order: Vec<usize> = (0..n).collect();
    // the unit eigenvalue goes first, the rest by decreasing modulus
    let unit = (0..n)
        .min_by(|&a, &b| {
            let da = (eig.eigenvalues[a] - 1.0).abs();
            let db = (eig.eigenvalues[b] - 1.0).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    order.retain(|&k| k != unit);
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
    });
    order.insert(0, unit);

    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for (rank, &k) in order.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        let mut v: Vec<f64> = (0..n).map(|i| u[i] / sqrt_pi[i]).collect();
        if rank == 0 {
            eigenvalues.push(1.0);
            // fix sign and scale so v_0 = 1 exactly up to rounding
            let mean = dot(&v, pi);
            v.iter_mut().for_each(|x| *x /= mean);
        } else {
            eigenvalues.push(eig.eigenvalues[k]);
        }
        let h: Vec<f64> = v.iter().zip(pi).map(|(a, b)| a * b).collect();
        right.push(v);
        left.push(h);
    }
    ReversibleEigen {
        eigenvalues,
        right,
        left,
    }
}
