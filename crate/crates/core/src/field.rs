//! Matrix-valued functions on Z_{m+1}^d, i.e. elements of L_p(l_inf(group) ⊗ M_n)
//! with the counting measure tensored with the standard trace.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::matrix::{self, check_p, CMatrix};

/// Budget on `(m+1)^d n^2` complex entries for a single dense field.
pub const MEMORY_BUDGET_ENTRIES: u128 = 1 << 27;

pub fn check_memory(spec: &GroupSpec, n: usize) -> Result<()> {
    let entries = spec.size() as u128 * (n * n) as u128;
    if entries > MEMORY_BUDGET_ENTRIES {
        return Err(Error::MemoryGuard {
            entries,
            budget: MEMORY_BUDGET_ENTRIES,
        });
    }
    Ok(())
}

/// Dense storage: point-major, each value an `n x n` block in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorField {
    spec: GroupSpec,
    n: usize,
    data: Vec<Complex64>,
}

impl OperatorField {
    pub fn zeros(spec: GroupSpec, n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        OperatorField {
            spec,
            n,
            data: vec![Complex64::new(0.0, 0.0); spec.size() * n * n],
        }
    }

    pub fn from_fn(spec: GroupSpec, n: usize, mut f: impl FnMut(usize) -> CMatrix) -> Self {
        let mut field = Self::zeros(spec, n);
        for s in 0..spec.size() {
            field.set(s, &f(s));
        }
        field
    }

    pub fn constant(spec: GroupSpec, x: &CMatrix) -> Self {
        Self::from_fn(spec, x.nrows(), |_| x.clone())
    }

    /// `x` at the origin, zero elsewhere.
    pub fn delta(spec: GroupSpec, x: &CMatrix) -> Self {
        let mut field = Self::zeros(spec, x.nrows());
        field.set(0, x);
        field
    }

    /// A scalar (`n = 1`) field from its values.
    pub fn scalar(spec: GroupSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.size() {
            return Err(Error::Shape {
                expected: format!("{} values", spec.size()),
                found: values.len().to_string(),
            });
        }
        Ok(OperatorField {
            spec,
            n: 1,
            data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    pub fn from_raw(spec: GroupSpec, n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != spec.size() * n * n {
            return Err(Error::Shape {
                expected: format!("{} entries", spec.size() * n * n),
                found: data.len().to_string(),
            });
        }
        Ok(OperatorField { spec, n, data })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_len(&self) -> usize {
        self.n * self.n
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn block(&self, s: usize) -> &[Complex64] {
        let b = self.block_len();
        &self.data[s * b..(s + 1) * b]
    }

    pub fn block_mut(&mut self, s: usize) -> &mut [Complex64] {
        let b = self.block_len();
        &mut self.data[s * b..(s + 1) * b]
    }

    pub fn get(&self, s: usize) -> CMatrix {
        CMatrix::from_row_slice(self.n, self.n, self.block(s))
    }

    pub fn set(&mut self, s: usize, x: &CMatrix) {
        assert_eq!(x.nrows(), self.n);
        assert_eq!(x.ncols(), self.n);
        let n = self.n;
        let block = self.block_mut(s);
        for i in 0..n {
            for j in 0..n {
                block[i * n + j] = x[(i, j)];
            }
        }
    }

    pub fn values(&self) -> impl Iterator<Item = CMatrix> + '_ {
        (0..self.spec.size()).map(move |s| self.get(s))
    }

    pub fn same_shape(&self, other: &OperatorField) -> Result<()> {
        if self.spec != other.spec || self.n != other.n {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &OperatorField) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> OperatorField {
        OperatorField {
            spec: self.spec,
            n: self.n,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn sub(&self, other: &OperatorField) -> Result<OperatorField> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn adjoint(&self) -> OperatorField {
        let mut out = self.clone();
        let n = self.n;
        for s in 0..self.spec.size() {
            let src = self.block(s);
            let dst = out.block_mut(s);
            for i in 0..n {
                for j in 0..n {
                    dst[i * n + j] = src[j * n + i].conj();
                }
            }
        }
        out
    }

    /// The L2 (Hilbert-Schmidt) norm, `sqrt(sum_s Tr f(s)* f(s))`.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &OperatorField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Every value Hermitian PSD with eigenvalues at least `-tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        (0..self.spec.size()).all(|s| matrix::is_psd(&self.get(s), tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.spec.size())
            .map(|s| matrix::min_eigenvalue(&self.get(s)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every value is diagonal up to `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.n;
        (0..self.spec.size()).all(|s| {
            let b = self.block(s);
            (0..n).all(|i| (0..n).all(|j| i == j || b[i * n + j].norm() <= tol))
        })
    }

    pub fn to_file(&self) -> FieldFile {
        FieldFile {
            m: self.spec.m(),
            d: self.spec.d(),
            n: self.n,
            values: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_file(file: &FieldFile) -> Result<Self> {
        let spec = GroupSpec::new(file.m, file.d)?;
        let data = file.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Self::from_raw(spec, file.n, data)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("field serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FieldFile = serde_json::from_str(text).map_err(|e| Error::InvalidParameter {
            what: "field json",
            reason: e.to_string(),
        })?;
        Self::from_file(&file)
    }
}

/// Flat container for experiment replay: group, matrix size and the
/// point-major, row-major complex entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    pub values: Vec<[f64; 2]>,
}

/// `(sum_s ||f(s)||_{S_p}^p)^{1/p}`; `p = inf` gives the largest operator norm.
pub fn field_norm(f: &OperatorField, p: f64) -> Result<f64> {
    check_p(p, 1.0)?;
    let norms: Vec<f64> = (0..f.spec().size())
        .into_par_iter()
        .map(|s| matrix::schatten_norm(&f.get(s), p).expect("p checked"))
        .collect();
    Ok(matrix::lp_of(&norms, p))
}

/// `f = f1 - f2 + i (f3 - f4)` with each part positive.
#[derive(Debug, Clone)]
pub struct PositiveDecomposition {
    pub parts: [OperatorField; 4],
}

impl PositiveDecomposition {
    pub fn reconstruct(&self) -> OperatorField {
        let [f1, f2, f3, f4] = &self.parts;
        let mut out = f1.clone();
        let i = Complex64::new(0.0, 1.0);
        out.axpy(Complex64::new(-1.0, 0.0), f2).expect("same shape");
        out.axpy(i, f3).expect("same shape");
        out.axpy(-i, f4).expect("same shape");
        out
    }
}

/// Pointwise split into Hermitian and anti-Hermitian parts, each cut into
/// its positive and negative spectral parts.
pub fn positivity_decompose(f: &OperatorField) -> PositiveDecomposition {
    let spec = *f.spec();
    let n = f.n();
    let mut parts = [
        OperatorField::zeros(spec, n),
        OperatorField::zeros(spec, n),
        OperatorField::zeros(spec, n),
        OperatorField::zeros(spec, n),
    ];
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);
    for s in 0..spec.size() {
        let x = f.get(s);
        let re = (&x + x.adjoint()) * half;
        let im = (&x - x.adjoint()) * minus_half_i;
        parts[0].set(s, &matrix::positive_part(&re));
        parts[1].set(s, &matrix::negative_part(&re));
        parts[2].set(s, &matrix::positive_part(&im));
        parts[3].set(s, &matrix::negative_part(&im));
    }
    PositiveDecomposition { parts }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::matrix::{identity, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_field(spec: GroupSpec, n: usize, seed: u64) -> OperatorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        OperatorField::from_fn(spec, n, |_| matrix::ginibre(n, &mut rng))
    }

    #[test]
    fn norm_examples() {
        let spec = GroupSpec::new(2, 3).unwrap();
        for n in 1..=3 {
            let f = OperatorField::delta(spec, &identity(n));
            for p in [1.0, 1.5, 2.0, 4.0] {
                let v = field_norm(&f, p).unwrap();
                assert!((v - (n as f64).powf(1.0 / p)).abs() < 1e-12);
            }
            assert!((field_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        }
        let c = OperatorField::constant(spec, &(identity(1) * Complex64::new(2.5, 0.0)));
        assert!((field_norm(&c, 1.0).unwrap() - 2.5 * 27.0).abs() < 1e-12);
        assert!(field_norm(&c, 0.9).is_err());
    }

    #[test]
    fn norm_matches_direct_formula() {
        let spec = GroupSpec::new(1, 3).unwrap();
        let f = random_field(spec, 3, 5);
        for p in [1.0, 1.5, 3.0] {
            let direct: f64 = (0..spec.size())
                .map(|s| {
                    let sv = matrix::singular_values(&f.get(s));
                    sv.iter().map(|v| v.powf(p)).sum::<f64>()
                })
                .sum::<f64>()
                .powf(1.0 / p);
            assert!((field_norm(&f, p).unwrap() - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn decomposition_examples() {
        let spec = GroupSpec::new(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pos = OperatorField::from_fn(spec, 2, |_| random_psd(2, &mut rng));
        let dec = positivity_decompose(&pos);
        assert!(dec.parts[0].max_abs_diff(&pos) < 1e-12);
        for part in &dec.parts[1..] {
            assert!(part.l2_norm() < 1e-12);
        }

        let mut proj = CMatrix::zeros(2, 2);
        proj[(0, 0)] = Complex64::new(1.0, 0.0);
        let neg = OperatorField::constant(spec, &(-proj.clone()));
        let dec = positivity_decompose(&neg);
        assert!(dec.parts[1].max_abs_diff(&OperatorField::constant(spec, &proj)) < 1e-12);
        assert!(dec.parts[0].l2_norm() < 1e-12);
        assert!(dec.parts[2].l2_norm() < 1e-12 && dec.parts[3].l2_norm() < 1e-12);
    }

    #[test]
    fn decomposition_of_random_fields() {
        let spec = GroupSpec::new(2, 2).unwrap();
        let f = random_field(spec, 3, 21);
        let dec = positivity_decompose(&f);
        assert!(dec.reconstruct().max_abs_diff(&f) < 1e-10);
        for part in &dec.parts {
            assert!(part.is_positive(1e-10));
            for p in [1.0, 2.0, 3.0, f64::INFINITY] {
                assert!(field_norm(part, p).unwrap() <= field_norm(&f, p).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let spec = GroupSpec::new(2, 2).unwrap();
        let f = random_field(spec, 2, 1);
        let back = OperatorField::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(OperatorField::from_json("{\"m\":1,\"d\":2,\"n\":1,\"values\":[]}").is_err());
    }

    #[test]
    fn memory_guard() {
        let spec = GroupSpec::new(1, 27).unwrap();
        assert!(check_memory(&spec, 1).is_ok());
        assert!(check_memory(&spec, 2).is_err());
    }
}
