//! Reference implementations used as test oracles. None of these call the
//! library's linear algebra; they work on plain `DMatrix` arithmetic.

#![allow(dead_code)]

use lvglasso::SymmetricMatrix;
use nalgebra::DMatrix;

/// Small deterministic generator so test inputs do not depend on the
/// generator under test.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed ^ 0x9E37_79B9_7F4A_7C15)
    }

    pub fn next_u64(&mut self) -> u64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn symmetric(&mut self, p: usize, scale: f64) -> SymmetricMatrix {
        let mut m = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = self.range(-scale, scale);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymmetricMatrix::new(m).unwrap()
    }

    /// `AAᵀ/k` for a random `p × k` matrix `A`.
    pub fn covariance(&mut self, p: usize, k: usize) -> SymmetricMatrix {
        let a = DMatrix::from_fn(p, k, |_, _| self.range(-1.0, 1.0));
        SymmetricMatrix::new(&a * a.transpose() / k as f64).unwrap()
    }
}

pub fn sym(m: DMatrix<f64>) -> SymmetricMatrix {
    SymmetricMatrix::new(m).unwrap()
}

pub fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Cyclic Jacobi eigenvalue iteration. Returns ascending eigenvalues and
/// the matching eigenvectors as columns.
pub fn jacobi_eig(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// `V diag(f(λ)) Vᵀ` from a Jacobi decomposition.
pub fn spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, v) = jacobi_eig(a);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| f(x)),
    ));
    let m = &v * d * v.transpose();
    (&m + m.transpose()) * 0.5
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn gj_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        assert!(m[(pivot, col)].abs() > 1e-300, "singular matrix");
        m.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let d = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[(r, col)];
                if f != 0.0 {
                    for k in 0..n {
                        m[(r, k)] -= f * m[(col, k)];
                        inv[(r, k)] -= f * inv[(col, k)];
                    }
                }
            }
        }
    }
    inv
}

/// `log det` by Gaussian elimination; `None` unless every pivot is positive.
pub fn ge_logdet(a: &DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut total = 0.0;
    for col in 0..n {
        let d = m[(col, col)];
        if !(d > 0.0) {
            return None;
        }
        total += d.ln();
        for r in col + 1..n {
            let f = m[(r, col)] / d;
            for k in col..n {
                m[(r, k)] -= f * m[(col, k)];
            }
        }
    }
    Some(total)
}

/// Golden-section minimizer of a convex function on `[lo, hi]`.
pub fn minimize_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    // Zero is where the nonsmooth minimizers of |x|-type terms sit.
    let mid = 0.5 * (lo + hi);
    if lo <= 0.0 && 0.0 <= hi && f(0.0) <= f(mid) {
        0.0
    } else {
        mid
    }
}

/// Entrywise minimizer of `w_ij |x| + (x − z_ij)² / 2` by 1-D search.
pub fn shrink_oracle(z: &DMatrix<f64>, weight: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| {
        let (zij, w) = (z[(i, j)], weight(i, j));
        let r = zij.abs() + 1.0;
        minimize_1d(|x| w * x.abs() + 0.5 * (x - zij) * (x - zij), -r, r)
    })
}

/// `argmin θ Tr X + ½‖X − Z‖²` over `X ⪰ 0`, via Jacobi.
pub fn psd_trace_oracle(z: &DMatrix<f64>, theta: f64) -> DMatrix<f64> {
    spectral_map(z, |s| (s - theta).max(0.0))
}

/// Violation of the optimality conditions of the PSD trace prox at `x`:
/// `W = X + θI − Z ⪰ 0`, `X ⪰ 0`, `⟨W, X⟩ = 0`.
pub fn psd_trace_kkt(z: &DMatrix<f64>, theta: f64, x: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    let w = x + DMatrix::<f64>::identity(n, n) * theta - z;
    let wmin = jacobi_eig(&w).0[0];
    let xmin = jacobi_eig(x).0[0];
    let comp = w.component_mul(x).sum();
    (-wmin).max(0.0).max((-xmin).max(0.0)).max(comp.abs())
}

/// Least-squares projection of `(t_r, t_s, t_l)` onto `{X_R − X_S + X_L = 0}`,
/// solving the 4×4 KKT system of every entry separately.
pub fn consensus_oracle(
    t_r: &DMatrix<f64>,
    t_s: &DMatrix<f64>,
    t_l: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = t_r.nrows();
    let kkt = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 1.0, //
            0.0, 1.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 1.0, //
            1.0, -1.0, 1.0, 0.0,
        ],
    );
    let kinv = gj_inverse(&kkt);
    let mut xr = DMatrix::zeros(p, p);
    let mut xs = DMatrix::zeros(p, p);
    let mut xl = DMatrix::zeros(p, p);
    for j in 0..p {
        for i in 0..p {
            let rhs = nalgebra::DVector::from_vec(vec![t_r[(i, j)], t_s[(i, j)], t_l[(i, j)], 0.0]);
            let sol = &kinv * rhs;
            xr[(i, j)] = sol[0];
            xs[(i, j)] = sol[1];
            xl[(i, j)] = sol[2];
        }
    }
    (xr, xs, xl)
}

/// Augmented Lagrangian of the split problem with Full ℓ1 penalty, or
/// `None` when `R` is not positive definite.
#[allow(clippy::too_many_arguments)]
pub fn augmented_lagrangian(
    sigma: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    r: &DMatrix<f64>,
    s: &DMatrix<f64>,
    l: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    mu: f64,
) -> Option<f64> {
    let gap = r - s + l;
    let f = r.component_mul(sigma).sum() - ge_logdet(r)?;
    let g = alpha * s.iter().map(|v| v.abs()).sum::<f64>();
    let h = beta * l.trace();
    Some(f + g + h - lambda.component_mul(&gap).sum() + gap.norm_squared() / (2.0 * mu))
}

/// Central-difference derivative of `f` at `x` along the symmetric
/// direction `d`.
pub fn directional_derivative(
    f: impl Fn(&DMatrix<f64>) -> f64,
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    h: f64,
) -> f64 {
    (f(&(x + d * h)) - f(&(x - d * h))) / (2.0 * h)
}

/// Covariance of the given columns computed in two passes with explicit
/// loops, denominator `n`.
pub fn two_pass_covariance(raw: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let n = raw.nrows();
    let means: Vec<f64> = cols
        .iter()
        .map(|&c| (0..n).map(|i| raw[(i, c)]).sum::<f64>() / n as f64)
        .collect();
    DMatrix::from_fn(cols.len(), cols.len(), |a, b| {
        (0..n)
            .map(|i| (raw[(i, cols[a])] - means[a]) * (raw[(i, cols[b])] - means[b]))
            .sum::<f64>()
            / n as f64
    })
}

/// Number of eigenvalues above `rel · max(1, λ_max)`.
pub fn numerical_rank(a: &DMatrix<f64>, rel: f64) -> usize {
    let values = jacobi_eig(a).0;
    let top = values.last().copied().unwrap_or(0.0).abs().max(1.0);
    values.iter().filter(|v| v.abs() > rel * top).count()
}
