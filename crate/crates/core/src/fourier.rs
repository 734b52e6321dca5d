//! Unitary Fourier transform on Z_{m+1}^d applied entrywise to matrix values.
//!
//! `f_hat(S) = sum_u f(u) conj(chi_S(u))` and `f(u) = sum_S f_hat(S) chi_S(u)`
//! with the L2-normalized characters, evaluated as `d` passes of a
//! length-`(m+1)` DFT along each coordinate axis.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::OperatorField;
use crate::group::GroupSpec;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn axis_passes(field: &mut OperatorField, direction: Direction) {
    let spec: GroupSpec = *field.spec();
    let radix = spec.radix();
    let block = field.block_len();
    let roots = spec.roots_of_unity();
    // twiddle[j * radix + k] = xi^{-+ jk}
    let twiddle: Vec<Complex64> = (0..radix * radix)
        .map(|jk| {
            let e = (jk / radix) * (jk % radix) % radix;
            match direction {
                Direction::Forward => roots[e].conj(),
                Direction::Inverse => roots[e],
            }
        })
        .collect();

    let mut stride = 1;
    for _ in 0..spec.d() {
        let span = stride * radix * block;
        field.raw_mut().par_chunks_mut(span).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); radix];
            let mut out = vec![Complex64::new(0.0, 0.0); radix];
            for lo in 0..stride {
                for e in 0..block {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = chunk[(lo + j * stride) * block + e];
                    }
                    for (k, o) in out.iter_mut().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (j, v) in line.iter().enumerate() {
                            acc += v * twiddle[j * radix + k];
                        }
                        *o = acc;
                    }
                    for (k, v) in out.iter().enumerate() {
                        chunk[(lo + k * stride) * block + e] = *v;
                    }
                }
            }
        });
        stride *= radix;
    }

    let norm = spec.normalization();
    field.raw_mut().par_iter_mut().for_each(|z| *z *= norm);
}

/// Fourier coefficients `f_hat(S)`, indexed by the frequency's mixed-radix index.
pub fn forward_transform(f: &OperatorField) -> OperatorField {
    let mut out = f.clone();
    axis_passes(&mut out, Direction::Forward);
    out
}

/// Synthesis `f(u) = sum_S g(S) chi_S(u)`; inverse of [`forward_transform`].
pub fn inverse_transform(g: &OperatorField) -> OperatorField {
    let mut out = g.clone();
    axis_passes(&mut out, Direction::Inverse);
    out
}

/// Multiply each frequency block `S` by `symbol[|S|]` in place.
pub(crate) fn scale_by_weight(g: &mut OperatorField, symbol: &[Complex64]) {
    let spec = *g.spec();
    let weights = spec.weight_table();
    let block = g.block_len();
    g.raw_mut()
        .par_chunks_mut(block)
        .zip(weights.par_iter())
        .for_each(|(chunk, &w)| {
            let c = symbol[w];
            for z in chunk.iter_mut() {
                *z *= c;
            }
        });
}
