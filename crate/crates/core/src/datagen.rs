//! Synthetic instances and sample covariances.
//!
//! Random streams come from xoshiro256** seeded by SplitMix64 expansion of a
//! 64-bit seed. The draw order is part of the reproducibility contract:
//!
//! * uniforms on `[0, 1)` use the top 53 bits of one output, `(x >> 11) · 2⁻⁵³`;
//!   uniforms on `(0, 1]` add one before scaling;
//! * the sparse factor is filled row-major; each entry draws one `[0, 1)`
//!   uniform, and only when it falls below the density a second one picks the
//!   sign (`< 0.5` → −1, otherwise +1);
//! * standard normals come from Box–Muller in pairs: `u₁, u₂ ∈ (0, 1]` drawn in
//!   that order give `√(−2 ln u₁) cos 2πu₂` followed by `√(−2 ln u₁) sin 2πu₂`;
//! * samples are drawn one at a time, coordinates in index order.

use nalgebra::{DMatrix, DVector};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky, sym_eig, SymmetricMatrix};

/// Default nonzero fraction of the sparse factor.
pub const DEFAULT_DENSITY: f64 = 0.10;

/// Default number of samples per observed variable.
pub const SAMPLES_PER_VARIABLE: usize = 5;

const RIDGE: f64 = 1e-3;
const SINGULAR_RATIO: f64 = 1e-8;

/// Seeded generator for the synthetic data.
pub struct Rng {
    inner: Xoshiro256StarStar,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform_open_closed();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// How the joint matrix `K` is built from the sparse factor `U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointMode {
    /// `K = (U Uᵀ)⁻¹`.
    #[default]
    Verbatim,
    /// `K = U Uᵀ`, so the observed block of `K` inherits the sparsity of `U`.
    Direct,
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// Observed block `K₁₁`.
    pub s_true: SymmetricMatrix,
    /// `K₁₂ K₂₂⁻¹ K₂₁`, rank at most `p_h`.
    pub l_true: SymmetricMatrix,
    /// `s_true − l_true`, the marginal precision of the observed variables.
    pub precision_x: SymmetricMatrix,
    pub p: usize,
    pub p_h: usize,
    /// Whether `U Uᵀ` needed the ridge before use.
    pub ridged: bool,
}

/// Random `dim × dim` matrix whose entries are independently ±1 with
/// probability `density` and zero otherwise.
pub fn sparse_factor(dim: usize, density: f64, rng: &mut Rng) -> DMatrix<f64> {
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            if rng.uniform() < density {
                u[(i, j)] = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            }
        }
    }
    u
}

pub fn generate_ground_truth(p: usize, p_h: usize, density: f64, seed: u64) -> Result<GroundTruth> {
    generate_ground_truth_with(p, p_h, density, seed, JointMode::Verbatim)
}

pub fn generate_ground_truth_with(
    p: usize,
    p_h: usize,
    density: f64,
    seed: u64,
    mode: JointMode,
) -> Result<GroundTruth> {
    if p == 0 || p_h == 0 {
        return Err(Error::invalid("p and p_h must both be at least 1"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = Rng::new(seed);
    let u = sparse_factor(p + p_h, density, &mut rng);
    ground_truth_from_factor(&u, p, mode)
}

/// Builds the ground truth from an explicit factor `U` of size
/// `(p + p_h) × (p + p_h)`.
///
/// When `U Uᵀ` has smallest eigenvalue below `1e-8 · max(1, λ_max)` a ridge
/// `1e-3 · I` is added before it is used.
pub fn ground_truth_from_factor(u: &DMatrix<f64>, p: usize, mode: JointMode) -> Result<GroundTruth> {
    let n = u.nrows();
    if u.ncols() != n || p == 0 || p >= n {
        return Err(Error::invalid(format!(
            "factor must be square with more than p = {p} rows, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let p_h = n - p;
    let gram = SymmetricMatrix::new(u * u.transpose())?;
    let eig = sym_eig(&gram)?;
    let ridged = eig.min_value() < SINGULAR_RATIO * eig.max_value().max(1.0);
    let shift = if ridged { RIDGE } else { 0.0 };
    let k = match mode {
        JointMode::Verbatim => eig.reconstruct_with(|s| 1.0 / (s + shift)),
        JointMode::Direct => eig.reconstruct_with(|s| s + shift),
    };
    let k = k.as_matrix();

    let s_true = SymmetricMatrix::new(k.view((0, 0), (p, p)).into_owned())?;
    let k_xy = k.view((0, p), (p, p_h)).into_owned();
    let k_yy = SymmetricMatrix::new(k.view((p, p), (p_h, p_h)).into_owned())?;
    let g = cholesky(&k_yy)?;
    // K₁₂ K₂₂⁻¹ K₂₁ = Bᵀ B with B = G⁻¹ K₂₁
    let b = g
        .solve_lower_triangular(&k_xy.transpose())
        .ok_or_else(|| Error::NumericalFailure("singular hidden block".into()))?;
    let l_true = SymmetricMatrix::new(b.transpose() * &b)?;
    let precision_x = &s_true - &l_true;
    Ok(GroundTruth {
        s_true,
        l_true,
        precision_x,
        p,
        p_h,
        ridged,
    })
}

#[derive(Clone, Debug)]
pub struct Dataset {
    /// `N × p`, one sample per row.
    pub samples: DMatrix<f64>,
    /// `(1/N) Σ Yᵢ Yᵢᵀ`, uncentered.
    pub sigma_hat: SymmetricMatrix,
}

/// Draws `n` samples from `N(0, precision⁻¹)` as `Y = G⁻ᵀ z` with
/// `G Gᵀ = precision`.
pub fn sample_mvn(precision: &SymmetricMatrix, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let p = precision.dim();
    let g = cholesky(precision)?;
    let gt = g.transpose();
    let mut rng = Rng::new(seed);
    let mut samples = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        let z = DVector::from_fn(p, |_, _| rng.standard_normal());
        let y = gt
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
        samples.set_row(i, &y.transpose());
    }
    let sigma_hat = SymmetricMatrix::new(samples.transpose() * &samples / n as f64)?;
    Ok(Dataset { samples, sigma_hat })
}

/// Sample covariance (mean-centered, denominator `N`) of the `p` columns
/// of `raw` with the largest variance. Ties go to the lower column index;
/// the selected columns keep their original order.
pub fn top_variance_covariance(raw: &DMatrix<f64>, p: usize) -> Result<SymmetricMatrix> {
    Ok(top_variance_selection(raw, p)?.1)
}

/// As [`top_variance_covariance`], also returning the selected column
/// indices.
pub fn top_variance_selection(raw: &DMatrix<f64>, p: usize) -> Result<(Vec<usize>, SymmetricMatrix)> {
    let (n, m) = raw.shape();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
    }
    if p == 0 || p > m {
        return Err(Error::invalid(format!(
            "cannot select {p} variables from {m} columns"
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("raw data contains non-finite values"));
    }
    let means: Vec<f64> = raw.column_iter().map(|c| c.sum() / n as f64).collect();
    let variances: Vec<f64> = raw
        .column_iter()
        .zip(&means)
        .map(|(c, mean)| c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64)
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let mut selected = order[..p].to_vec();
    selected.sort_unstable();

    let centered = DMatrix::from_fn(n, p, |i, j| raw[(i, selected[j])] - means[selected[j]]);
    let cov = SymmetricMatrix::new(centered.transpose() * &centered / n as f64)?;
    Ok((selected, cov))
}

/// Reads a raw data CSV (one sample per row). A first row containing any
/// non-numeric field is treated as a header and skipped.
pub fn read_raw_csv(path: impl AsRef<std::path::Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_raw_csv(&text, &path.display().to_string())
}

pub fn parse_raw_csv(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut skip = 0;
    if let Some((_, first)) = lines.peek() {
        if first.split(',').any(|f| f.trim().parse::<f64>().is_err()) {
            skip = 1;
        }
    }
    let body: String = lines
        .skip(skip)
        .map(|(_, l)| format!("{l}\n"))
        .collect();
    let rows = crate::matrix::parse_numeric_rows(body.as_bytes(), origin)?;
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Parse {
            location: format!("{origin}: data row {}", i + 1),
            message: format!("expected {width} fields, found {}", rows[i].len()),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}
