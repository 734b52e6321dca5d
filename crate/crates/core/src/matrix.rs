//! Small dense complex matrices: Hermitian spectral calculus and Schatten norms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 1 {
        return (vec![h[(0, 0)].re], identity(1));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn eigvalsh(h: &CMatrix) -> Vec<f64> {
    eigh(h).0
}

pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    eigvalsh(h)[0]
}

pub fn max_eigenvalue(h: &CMatrix) -> f64 {
    *eigvalsh(h).last().expect("nonempty matrix")
}

/// `V diag(f(lambda)) V*` for the Hermitian part of `h`.
pub fn hermitian_apply(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    from_spectrum(&values.iter().map(|&v| f(v)).collect::<Vec<_>>(), &vectors)
}

pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= v;
        }
    }
    scaled * vectors.adjoint()
}

pub fn positive_part(h: &CMatrix) -> CMatrix {
    hermitian_apply(h, |v| v.max(0.0))
}

pub fn negative_part(h: &CMatrix) -> CMatrix {
    hermitian_apply(h, |v| (-v).max(0.0))
}

/// Square root of the positive part of `h`.
pub fn psd_sqrt(h: &CMatrix) -> CMatrix {
    hermitian_apply(h, |v| v.max(0.0).sqrt())
}

pub fn is_hermitian(x: &CMatrix, tol: f64) -> bool {
    (x - x.adjoint()).iter().all(|z| z.norm() <= tol)
}

/// Hermitian with every eigenvalue at least `-tol`.
pub fn is_psd(x: &CMatrix, tol: f64) -> bool {
    is_hermitian(x, tol.max(1e-12) * (1.0 + frobenius_norm(x))) && min_eigenvalue(x) >= -tol
}

pub fn frobenius_norm(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(x: &CMatrix) -> Complex64 {
    x.diagonal().iter().sum()
}

/// `Re tr(x y)` without forming the product.
pub fn trace_product_re(x: &CMatrix, y: &CMatrix) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x[(i, j)] * y[(j, i)]).re;
        }
    }
    acc
}

pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    if x.nrows() == 1 && x.ncols() == 1 {
        return vec![x[(0, 0)].norm()];
    }
    x.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// `l_p` norm of a nonnegative vector, `p = inf` allowed.
pub fn lp_of(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    }
    let scale = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * values.iter().map(|&v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

pub(crate) fn check_p(p: f64, min: f64) -> Result<()> {
    if p.is_nan() || p < min {
        return Err(invalid("p", format!("must be in [{min}, inf], got {p}")));
    }
    Ok(())
}

/// `(sum s_i^p)^{1/p}` over singular values; `p = inf` gives the operator norm.
pub fn schatten_norm(x: &CMatrix, p: f64) -> Result<f64> {
    check_p(p, 1.0)?;
    if x.nrows() != x.ncols() {
        return Err(Error::Shape {
            expected: "square matrix".into(),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(lp_of(&singular_values(x), p))
}

/// Schatten norm of a Hermitian matrix through its eigenvalues.
pub fn schatten_norm_hermitian(h: &CMatrix, p: f64) -> f64 {
    let values: Vec<f64> = eigvalsh(h).into_iter().map(f64::abs).collect();
    lp_of(&values, p)
}

pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// `G* G` for a Ginibre matrix `G`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, rng);
    let x = g.adjoint() * g;
    hermitian_part(&x)
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&ginibre(n, rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// diag(R) moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Lower-triangular `L` with `L L* = h` (Hermitian part), or `None` unless
/// every pivot is strictly positive.
pub fn cholesky_hermitian(h: &CMatrix) -> Option<CMatrix> {
    let n = h.nrows();
    let a = hermitian_part(h);
    let mut l = zeros(n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) {
            return None;
        }
        let root = pivot.sqrt();
        l[(j, j)] = Complex64::new(root, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / root;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
fn lower_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = zeros(n);
    for j in 0..n {
        inv[(j, j)] = Complex64::new(1.0, 0.0) / l[(j, j)];
        for i in j + 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j..i {
                acc += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc / l[(i, i)];
        }
    }
    inv
}

/// Strict positive definiteness of the Hermitian part.
pub fn is_positive_definite(h: &CMatrix) -> bool {
    cholesky_hermitian(h).is_some()
}

/// `(log det h, h^{-1})` for positive definite `h`.
pub fn logdet_and_inverse(h: &CMatrix) -> Option<(f64, CMatrix)> {
    let l = cholesky_hermitian(h)?;
    let log_det = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    let li = lower_inverse(&l);
    Some((log_det, hermitian_part(&(li.adjoint() * li))))
}

pub fn inverse_hermitian(h: &CMatrix) -> Option<CMatrix> {
    logdet_and_inverse(h).map(|(_, inv)| inv)
}
