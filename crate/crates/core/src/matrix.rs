//! Dense symmetric matrices and the handful of factorizations the solvers need.
//!
//! Every iterate of the solvers (sample covariance, `R`, `S`, `L`, the
//! multiplier) is carried as a [`SymmetricMatrix`]. Symmetry is exact: the
//! constructor averages `(A + Aᵀ)/2`, and the arithmetic operators below only
//! perform entrywise operations that preserve it bit for bit.

use std::fmt::Write as _;
use std::io::Read;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A dense `p × p` real symmetric matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Builds a symmetric matrix from a square dense matrix, replacing it by
    /// `(A + Aᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows == 0 {
            return Err(Error::invalid("matrix must have dimension at least 1"));
        }
        if rows != cols {
            return Err(Error::invalid(format!(
                "matrix must be square, got {rows}x{cols}"
            )));
        }
        if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos % rows,
                pos / rows
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::invalid(format!(
                "row {i} has {} entries, expected {p}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    pub fn identity(p: usize) -> Self {
        Self::scaled_identity(p, 1.0)
    }

    pub fn scaled_identity(p: usize, scale: f64) -> Self {
        assert!(p > 0, "dimension must be positive");
        Self {
            data: DMatrix::from_diagonal_element(p, p, scale),
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self::scaled_identity(p, 0.0)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Averages `m` with its transpose. The caller guarantees `m` is square
    /// and finite.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let p = m.nrows();
        for j in 0..p {
            for i in (j + 1)..p {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self { data: m }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    /// Applies `f` to every entry. `f` must map finite values to finite
    /// values; symmetry is preserved because `f` sees `A_ij == A_ji`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.map(f),
        }
    }

    /// Entrywise map that also receives the position.
    pub fn map_indexed(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let p = self.dim();
        Self {
            data: DMatrix::from_fn(p, p, |i, j| f(i, j, self.data[(i, j)])),
        }
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Frobenius inner product `⟨A, B⟩ = Σ A_ij B_ij`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn norms(&self) -> Norms {
        norms(self)
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        check_same_dim(self, other).expect("dimension mismatch in add_scaled");
        Self {
            data: &self.data + &other.data * scale,
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Largest absolute entry difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

pub(crate) fn check_same_dim(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<()> {
    b.check_dim(a.dim())
}

impl Add for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn add(self, rhs: Self) -> SymmetricMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in add");
        SymmetricMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn sub(self, rhs: Self) -> SymmetricMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sub");
        SymmetricMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn mul(self, rhs: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            data: &self.data * rhs,
        }
    }
}

impl Neg for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn neg(self) -> SymmetricMatrix {
        SymmetricMatrix { data: -&self.data }
    }
}

/// The four scalar summaries used throughout the solvers and reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    /// `Σ |A_ij|`, diagonal included.
    pub entrywise_l1: f64,
    /// `max |A_ij|`.
    pub entrywise_linf: f64,
    pub trace: f64,
}

pub fn norms(a: &SymmetricMatrix) -> Norms {
    let (l1, linf) = a
        .iter()
        .fold((0.0f64, 0.0f64), |(s, m), v| (s + v.abs(), m.max(v.abs())));
    Norms {
        frobenius: a.frobenius_norm(),
        entrywise_l1: l1,
        entrywise_linf: linf,
        trace: a.trace(),
    }
}

/// `A = U diag(σ) Uᵀ` with `σ` sorted non-decreasing.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl EigenDecomposition {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Reassembles `U diag(f(σ)) Uᵀ`. Columns whose mapped eigenvalue is
    /// exactly zero are skipped, which makes low-rank results cheap.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let p = self.values.len();
        let mapped: Vec<(usize, f64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, f(s)))
            .filter(|&(_, g)| g != 0.0)
            .collect();
        if mapped.is_empty() {
            return SymmetricMatrix::zeros(p);
        }
        let mut scaled = DMatrix::<f64>::zeros(p, mapped.len());
        let mut basis = DMatrix::<f64>::zeros(p, mapped.len());
        for (c, &(k, g)) in mapped.iter().enumerate() {
            let col = self.vectors.column(k);
            basis.set_column(c, &col);
            scaled.set_column(c, &(col * g));
        }
        SymmetricMatrix::symmetrized(scaled * basis.transpose())
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|s| s)
    }
}

/// Symmetric eigendecomposition with eigenvalues in non-decreasing order.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let p = a.dim();
    let m = a.as_matrix();
    let dense = faer::Mat::<f64>::from_fn(p, p, |i, j| m[(i, j)]);
    let evd = dense
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("symmetric eigensolver failed: {e:?}")))?;
    let (u, s) = (evd.U(), evd.S().column_vector());
    let values = DVector::from_fn(p, |i, _| s[i]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "eigensolver produced non-finite eigenvalues".into(),
        ));
    }
    let vectors = DMatrix::from_fn(p, p, |i, j| u[(i, j)]);
    Ok(EigenDecomposition { vectors, values })
}

/// Number of threads the eigensolver may use; `None` or `Some(1)` keeps it
/// sequential. Results are bit-reproducible only for a fixed setting.
pub fn set_linear_algebra_threads(threads: Option<usize>) {
    let par = match threads.and_then(std::num::NonZeroUsize::new) {
        Some(n) if n.get() > 1 => faer::Par::Rayon(n),
        _ => faer::Par::Seq,
    };
    faer::set_global_parallelism(par);
}

/// Lower-triangular `G` with `G Gᵀ = A`.
///
/// A pivot at or below `1e-12 · trace(A)/p` is reported as not positive
/// definite.
pub fn cholesky(a: &SymmetricMatrix) -> Result<DMatrix<f64>> {
    let p = a.dim();
    let threshold = 1e-12 * (a.trace() / p as f64).abs();
    let m = a.as_matrix();
    let mut g = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= g[(j, k)] * g[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite(format!(
                "Cholesky pivot {pivot:e} at column {j}"
            )));
        }
        let d = pivot.sqrt();
        g[(j, j)] = d;
        for i in (j + 1)..p {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= g[(i, k)] * g[(j, k)];
            }
            g[(i, j)] = s / d;
        }
    }
    Ok(g)
}

fn check_pd(eig: &EigenDecomposition) -> Result<()> {
    let threshold = 1e-12 * eig.max_value().max(1.0);
    if eig.min_value() <= threshold {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {:e}",
            eig.min_value()
        )));
    }
    Ok(())
}

/// `log det A` for positive definite `A`.
pub fn log_det_pd(a: &SymmetricMatrix) -> Result<f64> {
    let eig = sym_eig(a)?;
    check_pd(&eig)?;
    Ok(eig.values.iter().map(|s| s.ln()).sum())
}

/// Inverse of a positive definite matrix via its eigendecomposition.
pub fn inverse_pd(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = sym_eig(a)?;
    check_pd(&eig)?;
    Ok(eig.reconstruct_with(|s| 1.0 / s))
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(a: &SymmetricMatrix) -> Result<f64> {
    Ok(sym_eig(a)?.min_value())
}

/// Renders the matrix as CSV: one row per line, 17 significant digits.
pub fn to_csv_string(a: &SymmetricMatrix) -> String {
    let p = a.dim();
    let mut out = String::with_capacity(p * p * 24);
    for i in 0..p {
        for j in 0..p {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", a.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(a: &SymmetricMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(a)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a headerless numeric CSV into rows.
pub(crate) fn parse_numeric_rows(reader: impl Read, origin: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            location: format!("{origin}:{}", line + 1),
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    location: format!("{origin}:{}:{}", line + 1, col + 1),
                    message: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a square CSV matrix and symmetrizes it.
pub fn parse_csv(text: &str) -> Result<SymmetricMatrix> {
    let rows = parse_numeric_rows(text.as_bytes(), "<input>")?;
    SymmetricMatrix::from_rows(&rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<SymmetricMatrix> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: origin.clone(),
        source,
    })?;
    let rows = parse_numeric_rows(std::io::BufReader::new(file), &origin)?;
    SymmetricMatrix::from_rows(&rows).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{origin}: {msg}")),
        other => other,
    })
}
