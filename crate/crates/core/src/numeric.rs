//! Floating-point kernels: balanced companion roots, matrix exponential,
//! spectral multiset comparison. Eigenvalues and SVDs go through faer.

use nalgebra::{Complex, DMatrix};

use crate::polymat::RatPoly;

pub type C64 = Complex<f64>;

/// Parlett-Reinsch diagonal balancing with power-of-two scalings.
pub fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let radix = 2.0f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Eigenvalues of a real square matrix after balancing; NaN entries when the
/// input is not finite or the iteration fails.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if !all_finite(m) {
        return vec![C64::new(f64::NAN, f64::NAN); n];
    }
    match to_faer(&balance(m)).eigenvalues() {
        Ok(v) => v,
        Err(_) => vec![C64::new(f64::NAN, f64::NAN); n],
    }
}

/// Companion matrix of a monic polynomial given ascending coefficients
/// `c_0 .. c_{n-1}` (the leading 1 omitted); last row holds `-c`.
pub fn companion(lower: &[f64]) -> DMatrix<f64> {
    let n = lower.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        c[(i, i + 1)] = 1.0;
    }
    for (j, v) in lower.iter().enumerate() {
        c[(n - 1, j)] = -v;
    }
    c
}

/// Roots of a square-free polynomial: companion eigenvalues refined by Newton.
pub fn simple_roots(p: &RatPoly) -> Vec<C64> {
    if p.is_constant() {
        return Vec::new();
    }
    let monic = p.monic();
    let coeffs = monic.to_f64_coeffs();
    let n = coeffs.len() - 1;
    let roots = eigenvalues(&companion(&coeffs[..n]));
    let dp = monic.derivative();
    roots
        .into_iter()
        .map(|z0| {
            let mut z = z0;
            let mut best = z0;
            let mut best_res = monic.eval_complex(z0).norm();
            for _ in 0..8 {
                let f = monic.eval_complex(z);
                let df = dp.eval_complex(z);
                if df.norm() == 0.0 {
                    break;
                }
                z -= f / df;
                let res = monic.eval_complex(z).norm();
                if res < best_res {
                    best = z;
                    best_res = res;
                } else {
                    break;
                }
            }
            // conjugate-symmetric cleanup for nearly real roots
            if best.im.abs() <= 1e-14 * best.norm().max(1.0) {
                best.im = 0.0;
            }
            best
        })
        .collect()
}

/// Roots with multiplicities from the square-free decomposition.
pub fn roots_with_multiplicity(p: &RatPoly) -> Vec<(C64, usize)> {
    p.square_free_decomposition()
        .into_iter()
        .flat_map(|(s, mult)| simple_roots(&s).into_iter().map(move |z| (z, mult)))
        .collect()
}

/// Monic real polynomial with the given roots (conjugates must be present);
/// ascending coefficients including the leading 1.
pub fn real_poly_from_roots(roots: &[C64]) -> Vec<f64> {
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs.iter().map(|c| c.re).collect()
}

/// Greedy nearest matching between two spectra; `INFINITY` for unequal sizes.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        worst = worst.max(d);
        matched += 1;
        if matched == a.len() {
            break;
        }
    }
    worst
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values sorted in decreasing order; NaN when the input is not finite.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let k = m.nrows().min(m.ncols());
    if !all_finite(m) {
        return vec![f64::NAN; k];
    }
    to_faer(m).singular_values().unwrap_or_else(|_| vec![f64::NAN; k])
}

/// Two-norm condition number; `1` for the empty matrix, `INFINITY` when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Thin orthonormal basis for the column space of a full-column-rank matrix,
/// with the triangular factor (`m = q r`).
pub fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    if m.ncols() == 0 {
        return (DMatrix::zeros(m.nrows(), 0), DMatrix::zeros(0, 0));
    }
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Full SVD `m = U diag(s) V^T` with square orthogonal `U`, `V` and singular
/// values in decreasing order. Non-finite input gives identity factors and NaN
/// singular values.
pub fn full_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    let failed = || (DMatrix::identity(r, r), vec![f64::NAN; r.min(c)], DMatrix::identity(c, c));
    if r == 0 || c == 0 {
        return (DMatrix::identity(r, r), Vec::new(), DMatrix::identity(c, c));
    }
    if !all_finite(m) {
        return failed();
    }
    let Ok(svd) = to_faer(m).svd() else {
        return failed();
    };
    let (u, v, sd) = (svd.U(), svd.V(), svd.S().column_vector());
    (
        DMatrix::from_fn(r, r, |i, j| u[(i, j)]),
        (0..r.min(c)).map(|i| sd[i]).collect(),
        DMatrix::from_fn(c, c, |i, j| v[(i, j)]),
    )
}

/// Numerical rank with singular values below `rel_tol * s_max` treated as zero.
pub fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant (Higham 2005), accurate to roughly unit roundoff.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + b.abs())
        }
    }

    #[test]
    fn quartic_roots_on_unit_circle() {
        let roots = simple_roots(&RatPoly::from_i64(&[1, 0, 0, 0, 1]));
        assert_eq!(roots.len(), 4);
        for r in &roots {
            assert!(close(r.norm(), 1.0, 1e-14));
            assert!(close(r.re.abs(), std::f64::consts::FRAC_1_SQRT_2, 1e-14));
        }
    }

    #[test]
    fn multiplicities_from_yun() {
        // (D^2 - 1)^2 (D + 3)
        let p = &RatPoly::from_i64(&[-1, 0, 1]).pow(2) * &RatPoly::from_i64(&[3, 1]);
        let mut r = roots_with_multiplicity(&p);
        r.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].1, 1);
        assert!(close(r[0].0.re, -3.0, 1e-14));
        assert_eq!(r[1].1, 2);
        assert_eq!(r[2].1, 2);
    }

    #[test]
    fn expm_of_rotation_and_diagonal() {
        let t = 0.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&a);
        assert!(close(e[(0, 0)], t.cos(), 1e-14));
        assert!(close(e[(0, 1)], t.sin(), 1e-14));
        let d = DMatrix::from_row_slice(2, 2, &[-30.0, 0.0, 0.0, 2.5]);
        let e = expm(&d);
        assert!(close(e[(0, 0)], (-30f64).exp(), 1e-12));
        assert!(close(e[(1, 1)], 2.5f64.exp(), 1e-13));
    }

    #[test]
    fn expm_jordan_block() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]) * 12.0;
        let e = expm(&a);
        let decay = (-12f64).exp();
        assert!(close(e[(0, 0)], decay, 1e-12));
        assert!(close(e[(0, 1)], 12.0 * decay, 1e-12));
    }

    #[test]
    fn multiset_matching() {
        let a = vec![C64::new(1.0, 1.0), C64::new(1.0, -1.0), C64::new(-2.0, 0.0)];
        let b = vec![C64::new(-2.0, 1e-12), C64::new(1.0, -1.0), C64::new(1.0, 1.0)];
        assert!(multiset_distance(&a, &b) < 1e-11);
        assert_eq!(multiset_distance(&a, &b[..2]), f64::INFINITY);
    }

    #[test]
    fn real_poly_reconstruction() {
        let roots = [C64::new(-1.0, 2.0), C64::new(-1.0, -2.0), C64::new(3.0, 0.0)];
        // (l^2 + 2l + 5)(l - 3) = l^3 - l^2 - l - 15
        let c = real_poly_from_roots(&roots);
        let expected = [-15.0, -1.0, -1.0, 1.0];
        for (x, y) in c.iter().zip(expected) {
            assert!(close(*x, y, 1e-14));
        }
    }

    #[test]
    fn full_svd_bases() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 1.0]);
        let (u, s, v) = full_svd(&m);
        assert_eq!((u.shape(), v.shape(), s.len()), ((3, 3), (2, 2), 2));
        assert!(s[0] >= s[1]);
        let mut sig = DMatrix::zeros(3, 2);
        sig[(0, 0)] = s[0];
        sig[(1, 1)] = s[1];
        assert!((&u * sig * v.transpose() - &m).norm() < 1e-12);
        assert!((u.transpose() * &u - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
        // left null vector of m
        assert!((u.column(2).transpose() * &m).norm() < 1e-12);
        assert_eq!(numerical_rank(&s, 1e-10), 2);
        assert_eq!(numerical_rank(&[3.0, 1e-12], 1e-10), 1);
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e5, 0.0, 1e-5, 3.0]);
        let b = balance(&m);
        let mut e1: Vec<f64> = eigenvalues(&m).iter().map(|z| z.re).collect();
        let mut e2: Vec<f64> = eigenvalues(&b).iter().map(|z| z.re).collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (x, y) in e1.iter().zip(&e2) {
            assert!(close(*x, *y, 1e-10));
        }
    }

    #[test]
    fn even_octic_companion_converges() {
        // 2 D^8 - 89 D^6 + 455 D^4 - 2087 D^2 + 3028
        let p = RatPoly::from_i64(&[3028, 0, -2087, 0, 455, 0, -89, 0, 2]);
        let roots = simple_roots(&p);
        assert_eq!(roots.len(), 8);
        let monic = p.monic();
        for z in &roots {
            assert!(z.re.is_finite() && z.im.is_finite());
            assert!(monic.eval_complex(*z).norm() <= 1e-9 * (1.0 + z.norm().powi(8)));
        }
    }

    #[test]
    fn non_finite_input_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(eigenvalues(&m).iter().all(|z| z.re.is_nan()));
        assert!(singular_values(&m).iter().all(|s| s.is_nan()));
        let (_, s, _) = full_svd(&m);
        assert!(s.iter().all(|x| x.is_nan()));
    }
}
