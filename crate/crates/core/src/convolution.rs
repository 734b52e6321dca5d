//! Convolution of operator fields against radial kernels.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::OperatorField;
use crate::fourier::{forward_transform, inverse_transform, scale_by_weight};
use crate::kernels::{KrawtchoukTable, MultiplierProfile, RadialKernel};

/// Group order above which [`convolve`] switches to the transform route.
pub const DIRECT_ROUTE_MAX_SIZE: usize = 512;

fn check_kernel(g_spec: &crate::group::RadialSpec, f: &OperatorField) -> Result<()> {
    if f.spec() != g_spec {
        return Err(Error::SpecMismatch);
    }
    Ok(())
}

/// `(g * f)(s) = sum_u g(u) f(s - u)`.
pub fn convolve(g: &RadialKernel, f: &OperatorField) -> Result<OperatorField> {
    if f.spec().size() > DIRECT_ROUTE_MAX_SIZE {
        convolve_transform(g, f)
    } else {
        convolve_direct(g, f)
    }
}

/// Sum over the spheres in the support of `g`.
pub fn convolve_direct(g: &RadialKernel, f: &OperatorField) -> Result<OperatorField> {
    check_kernel(g.spec(), f)?;
    let spec = *f.spec();
    let shells: Vec<(f64, Vec<usize>)> = g
        .support()
        .map(|k| Ok((g.weight(k), spec.sphere_indices(k)?)))
        .collect::<Result<_>>()?;
    let block = f.block_len();
    let mut out = OperatorField::zeros(spec, f.n());
    out.raw_mut()
        .par_chunks_mut(block)
        .enumerate()
        .for_each(|(s, target)| {
            for (c, points) in &shells {
                let mut shell = vec![Complex64::new(0.0, 0.0); block];
                for &u in points {
                    for (acc, z) in shell.iter_mut().zip(f.block(spec.sub_index(s, u))) {
                        *acc += z;
                    }
                }
                for (t, z) in target.iter_mut().zip(&shell) {
                    *t += z * c;
                }
            }
        });
    Ok(out)
}

/// Multiply `f_hat` by the kernel's symbol and synthesize.
pub fn convolve_transform(g: &RadialKernel, f: &OperatorField) -> Result<OperatorField> {
    check_kernel(g.spec(), f)?;
    let profile = KrawtchoukTable::new(*g.spec()).profile(g)?;
    apply_multiplier(&profile, f)
}

/// `f_hat(S) -> lambda_{|S|} f_hat(S)`, then the inverse transform.
pub fn apply_multiplier(profile: &MultiplierProfile, f: &OperatorField) -> Result<OperatorField> {
    let symbol: Vec<Complex64> = profile.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    apply_symbol(&symbol, f)
}

/// Complex-valued radial multiplier, `symbol[j]` acting on frequencies of weight `j`.
pub fn apply_symbol(symbol: &[Complex64], f: &OperatorField) -> Result<OperatorField> {
    if symbol.len() != f.spec().d() + 1 {
        return Err(Error::Shape {
            expected: format!("{} symbol values", f.spec().d() + 1),
            found: symbol.len().to_string(),
        });
    }
    let mut hat = forward_transform(f);
    scale_by_weight(&mut hat, symbol);
    Ok(inverse_transform(&hat))
}

/// Several radial multipliers sharing one forward transform.
pub fn apply_symbols(symbols: &[Vec<Complex64>], f: &OperatorField) -> Result<Vec<OperatorField>> {
    let d = f.spec().d();
    if let Some(bad) = symbols.iter().find(|s| s.len() != d + 1) {
        return Err(Error::Shape {
            expected: format!("{} symbol values", d + 1),
            found: bad.len().to_string(),
        });
    }
    let hat = forward_transform(f);
    Ok(symbols
        .iter()
        .map(|symbol| {
            let mut g = hat.clone();
            scale_by_weight(&mut g, symbol);
            inverse_transform(&g)
        })
        .collect())
}

/// `T_k f = sigma_k * f` for `k = 0..=d`.
pub fn sphere_means(f: &OperatorField) -> Vec<OperatorField> {
    let table = KrawtchoukTable::new(*f.spec());
    let symbols: Vec<Vec<Complex64>> = (0..=f.spec().d())
        .map(|k| {
            (0..=f.spec().d())
                .map(|j| Complex64::new(table.sphere_symbol(k, j), 0.0))
                .collect()
        })
        .collect();
    apply_symbols(&symbols, f).expect("symbol lengths match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{field_norm, tests::random_field};
    use crate::group::GroupSpec;
    use crate::kernels::{eta_kernel, multiplier_profile, radial_convolve, sphere_kernel};
    use crate::matrix::{identity, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &OperatorField, b: &OperatorField) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn identity_and_antipode() {
        let spec = GroupSpec::new(1, 2).unwrap();
        let f = random_field(spec, 2, 3);
        let delta = RadialKernel::delta(spec);
        assert!(rel(&convolve_direct(&delta, &f).unwrap(), &f) < 1e-15);
        let impulse = OperatorField::delta(spec, &identity(2));
        let out = convolve(&sphere_kernel(spec, 2).unwrap(), &impulse).unwrap();
        let far = spec.index_of(&spec.point(vec![1, 1]).unwrap());
        for s in 0..spec.size() {
            let expect = if s == far { identity(2) } else { identity(2) * Complex64::new(0.0, 0.0) };
            assert!((out.get(s) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn routes_agree() {
        for (m, d, n) in [(1, 6, 2), (2, 4, 3), (3, 3, 1), (1, 9, 1)] {
            let spec = GroupSpec::new(m, d).unwrap();
            let f = random_field(spec, n, (m * 31 + d) as u64);
            for k in 0..=d {
                let g = sphere_kernel(spec, k).unwrap();
                let a = convolve_direct(&g, &f).unwrap();
                let b = convolve_transform(&g, &f).unwrap();
                assert!(rel(&a, &b) < 1e-9, "m={m} d={d} k={k}");
            }
            let g = eta_kernel(spec, 0.2).unwrap();
            assert!(rel(&convolve_direct(&g, &f).unwrap(), &convolve_transform(&g, &f).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn associativity_and_sphere_means() {
        let spec = GroupSpec::new(2, 4).unwrap();
        let f = random_field(spec, 2, 8);
        let g = sphere_kernel(spec, 1).unwrap();
        let h = eta_kernel(spec, 0.35).unwrap();
        let left = convolve_direct(&g, &convolve_direct(&h, &f).unwrap()).unwrap();
        let right = convolve_direct(&radial_convolve(&g, &h).unwrap(), &f).unwrap();
        assert!(rel(&left, &right) < 1e-9);
        let means = sphere_means(&f);
        for (k, mean) in means.iter().enumerate() {
            let direct = convolve_direct(&sphere_kernel(spec, k).unwrap(), &f).unwrap();
            assert!(rel(mean, &direct) < 1e-10);
        }
    }

    #[test]
    fn multiplier_edge_cases() {
        let spec = GroupSpec::new(1, 5).unwrap();
        let f = random_field(spec, 2, 4);
        let ones = MultiplierProfile::from_fn(spec, |_| 1.0);
        assert!(rel(&apply_multiplier(&ones, &f).unwrap(), &f) < 1e-12);
        let zero = MultiplierProfile::from_fn(spec, |_| 0.0);
        assert_eq!(apply_multiplier(&zero, &f).unwrap().l2_norm(), 0.0);
        let k3 = sphere_kernel(spec, 3).unwrap();
        let a = apply_multiplier(&multiplier_profile(&k3), &f).unwrap();
        assert!(rel(&a, &convolve_direct(&k3, &f).unwrap()) < 1e-9);
        let other = GroupSpec::new(2, 5).unwrap();
        assert!(convolve(&sphere_kernel(other, 1).unwrap(), &f).is_err());
    }

    #[test]
    fn positivity_and_young() {
        let spec = GroupSpec::new(1, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = OperatorField::from_fn(spec, 3, |_| random_psd(3, &mut rng));
        for k in 0..=5 {
            let out = convolve(&sphere_kernel(spec, k).unwrap(), &f).unwrap();
            assert!(out.min_eigenvalue() >= -1e-10);
            for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
                assert!(field_norm(&out, p).unwrap() <= field_norm(&f, p).unwrap() * (1.0 + 1e-10));
            }
        }
    }
}
