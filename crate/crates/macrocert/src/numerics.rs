//! Shared numerical kernels: log-factorials, the complementary error
//! function, compensated summation, 1-D minimization and quadrature, a
//! dense matrix exponential, and small symmetric-eigenvalue helpers.

use nalgebra::{DMatrix, DVector};

/// Cumulative table of ln(k!) for k = 0..=n_max.
///
/// Built in one pass; callers that scan a contiguous window should build the
/// table once for the whole window.
pub fn ln_factorial_table(n_max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n_max + 1);
    table.push(0.0);
    let mut acc = NeumaierSum::new();
    for k in 1..=n_max {
        acc.add((k as f64).ln());
        table.push(acc.value());
    }
    table
}

/// Neumaier-compensated accumulator. Deterministic for a fixed add order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1_f64;

/// Complementary error function.
///
/// Series for the lower incomplete gamma below x = 1.5, Lentz continued
/// fraction for the upper incomplete gamma above; absolute error is at the
/// few-ulp level across the range used here.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x == 0.0 {
        return 1.0;
    }
    let x2 = x * x;
    if x2 > 745.0 {
        return 0.0; // underflows f64
    }
    if x < 1.5 {
        1.0 - gamma_p_half(x2)
    } else {
        gamma_q_half(x2)
    }
}

pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

/// Regularized lower incomplete gamma P(1/2, x) by series.
fn gamma_p_half(x: f64) -> f64 {
    let a = 0.5;
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln() - LN_SQRT_PI).exp()
}

/// Regularized upper incomplete gamma Q(1/2, x) by modified Lentz.
fn gamma_q_half(x: f64) -> f64 {
    let a = 0.5;
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x + a * x.ln() - LN_SQRT_PI).exp() * h
}

/// Golden-section search for the minimum of a unimodal function on [a, b].
///
/// Shrinks the bracket below `tol` and returns the better of the interior
/// estimate and the two endpoints, so boundary minimizers are exact.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let candidates = [(xm, f(xm)), (a, f(a)), (b, f(b))];
    candidates
        .into_iter()
        .min_by(|l, r| l.1.total_cmp(&r.1))
        .unwrap()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

/// Matrix exponential by 13th-order diagonal Padé with scaling and squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    // 1-norm
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    const THETA_13: f64 = 5.371_920_351_148_152;
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2.0_f64.powi(-s);

    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (B[13] * &a6 + B[11] * &a4 + B[9] * &a2)
        + B[7] * &a6
        + B[5] * &a4
        + B[3] * &a2
        + B[1] * &id;
    let u = &a * u_inner;
    let v = &a6 * (B[12] * &a6 + B[10] * &a4 + B[8] * &a2)
        + B[6] * &a6
        + B[4] * &a4
        + B[2] * &a2
        + B[0] * &id;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is singular; input norm out of range");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Trace norm (sum of absolute eigenvalues) of a real symmetric matrix.
pub fn trace_norm_symmetric(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|l| l.abs())
        .sum()
}

/// Eigen-decomposition of a real symmetric matrix with eigenvalues descending.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Mean of an index distribution: weights w_k at quantum numbers offset + k.
pub fn indexed_mean(offset: i64, weights: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for (k, w) in weights.iter().enumerate() {
        acc.add(w * (offset + k as i64) as f64);
    }
    acc.value()
}

/// Variance of an index distribution; weights are assumed normalized.
pub fn indexed_variance(offset: i64, weights: &[f64]) -> f64 {
    let mean = indexed_mean(offset, weights);
    let mut acc = NeumaierSum::new();
    for (k, w) in weights.iter().enumerate() {
        let d = (offset + k as i64) as f64 - mean;
        acc.add(w * d * d);
    }
    acc.value()
}

/// Outer product v vᵀ.
pub fn outer(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_reference_values() {
        // Frozen from an independent high-precision evaluation.
        let cases: [(f64, f64); 12] = [
            (0.00, 1.000_000_000_000_000_00e0),
            (0.25, 7.236_736_098_317_630_98e-1),
            (0.50, 4.795_001_221_869_534_81e-1),
            (1.00, 1.572_992_070_502_851_61e-1),
            (1.50, 3.389_485_352_468_926_68e-2),
            (2.00, 4.677_734_981_047_266_23e-3),
            (3.00, 2.209_049_699_858_544_46e-5),
            (5.00, 1.537_459_794_428_034_73e-12),
            (10.00, 2.088_487_583_762_544_57e-45),
            (26.00, 5.663_192_408_856_145_36e-296),
            (-0.70, 1.677_801_193_837_418_21e0),
            (-3.00, 1.999_977_909_503_001_47e0),
        ];
        for (x, want) in cases {
            let got = erfc(x);
            let scale = want.abs().max(1e-300);
            assert!(
                ((got - want) / scale).abs() < 1e-13,
                "erfc({x}) = {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn golden_section_finds_interior_and_boundary_minima() {
        let (x, _) = golden_section_min(|s| (s - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        let (x, f) = golden_section_min(|s| s, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn simpson_gaussian_integral() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let got = adaptive_simpson(&f, -40.0, 40.0, 1e-13);
        assert!((got - 1.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn expm_matches_closed_forms() {
        // exp of zero is identity
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(expm(&z), DMatrix::identity(3, 3));
        // 2x2 rotation generator
        let theta: f64 = 0.7;
        let g = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        let r = expm(&g);
        assert!((r[(0, 0)] - theta.cos()).abs() < 1e-14);
        assert!((r[(1, 0)] - theta.sin()).abs() < 1e-14);
        // scaling branch: large diagonal
        let d = DMatrix::from_row_slice(2, 2, &[12.0, 0.0, 0.0, -3.0]);
        let e = expm(&d);
        assert!((e[(0, 0)] - 12.0_f64.exp()).abs() / 12.0_f64.exp() < 1e-13);
        assert!((e[(1, 1)] - (-3.0_f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn ln_factorial_values() {
        let t = ln_factorial_table(20);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 0.0);
        // 20! = 2432902008176640000
        assert!((t[20] - 2_432_902_008_176_640_000.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn indexed_stats() {
        // uniform over {-1, 0, 1}
        let w = [1.0 / 3.0; 3];
        assert!(indexed_mean(-1, &w).abs() < 1e-15);
        assert!((indexed_variance(-1, &w) - 2.0 / 3.0).abs() < 1e-15);
    }
}
