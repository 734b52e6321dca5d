//! The group Z_{m+1}^d with the Hamming weight.
//!
//! Points are stored as mixed-radix integers: coordinate `i` carries the
//! stride `(m+1)^i`, so coordinate 0 varies fastest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Error, Result};

/// Largest admissible group order.
pub const MAX_GROUP_SIZE: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct GroupSpec {
    m: usize,
    d: usize,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    m: usize,
    d: usize,
}

impl TryFrom<RawSpec> for GroupSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        GroupSpec::new(raw.m, raw.d)
    }
}

impl From<GroupSpec> for RawSpec {
    fn from(spec: GroupSpec) -> Self {
        RawSpec {
            m: spec.m,
            d: spec.d,
        }
    }
}

impl GroupSpec {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        if d < 1 {
            return Err(invalid("d", "must be at least 1"));
        }
        let radix = m + 1;
        let mut size: usize = 1;
        for _ in 0..d {
            size = size
                .checked_mul(radix)
                .filter(|&s| s <= MAX_GROUP_SIZE)
                .ok_or(Error::GroupTooLarge { m_plus_one: radix, d })?;
        }
        Ok(GroupSpec { m, d, size })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Order of the cyclic factor, `m + 1`.
    pub fn radix(&self) -> usize {
        self.m + 1
    }

    /// `(m+1)^d`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn point(&self, coords: Vec<u32>) -> Result<GroupPoint> {
        if coords.len() != self.d {
            return Err(Error::Shape {
                expected: format!("{} coordinates", self.d),
                found: format!("{}", coords.len()),
            });
        }
        if let Some(&c) = coords.iter().find(|&&c| c as usize > self.m) {
            return Err(Error::Range {
                what: "coordinate",
                value: c as i64,
                lo: 0,
                hi: self.m as i64,
            });
        }
        Ok(GroupPoint { coords })
    }

    pub fn zero(&self) -> GroupPoint {
        GroupPoint {
            coords: vec![0; self.d],
        }
    }

    pub fn index_of(&self, u: &GroupPoint) -> usize {
        let radix = self.radix();
        u.coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * radix + c as usize)
    }

    pub fn point_at(&self, mut index: usize) -> GroupPoint {
        let radix = self.radix();
        let mut coords = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            coords.push((index % radix) as u32);
            index /= radix;
        }
        GroupPoint { coords }
    }

    /// Hamming weight of the point with mixed-radix index `index`.
    pub fn weight_of_index(&self, mut index: usize) -> usize {
        let radix = self.radix();
        let mut w = 0;
        for _ in 0..self.d {
            if index % radix != 0 {
                w += 1;
            }
            index /= radix;
        }
        w
    }

    /// Hamming weights of every point, indexed like the points.
    pub fn weight_table(&self) -> Vec<usize> {
        let radix = self.radix();
        let mut table = vec![0usize; self.size];
        let mut stride = 1;
        for _ in 0..self.d {
            for (idx, w) in table.iter_mut().enumerate() {
                if (idx / stride) % radix != 0 {
                    *w += 1;
                }
            }
            stride *= radix;
        }
        table
    }

    /// Index of `a - b`.
    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        let radix = self.radix();
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.d {
            let digit = (a % radix + radix - b % radix) % radix;
            out += digit * stride;
            a /= radix;
            b /= radix;
            stride *= radix;
        }
        out
    }

    /// Index of `-a`.
    pub fn neg_index(&self, a: usize) -> usize {
        self.sub_index(0, a)
    }

    /// Index of `a + b`.
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        self.sub_index(a, self.neg_index(b))
    }

    /// `C(d, k) m^k`, the number of points of weight `k`.
    pub fn sphere_size(&self, k: usize) -> Result<u128> {
        check_range("k", k as i64, 0, self.d as i64)?;
        Ok(binomial(self.d, k) * (self.m as u128).pow(k as u32))
    }

    /// `sphere_size` as a float; exact up to 2^53 and finite far beyond
    /// the range where the integer version overflows.
    pub fn sphere_size_f64(&self, k: usize) -> f64 {
        binomial_f64(self.d, k) * (self.m as f64).powi(k as i32)
    }

    pub fn enumerate_sphere(&self, k: usize) -> Result<SphereIter> {
        check_range("k", k as i64, 0, self.d as i64)?;
        Ok(SphereIter::new(*self, k))
    }

    /// Mixed-radix indices of the points of weight `k`, in enumeration order.
    pub fn sphere_indices(&self, k: usize) -> Result<Vec<usize>> {
        Ok(self.enumerate_sphere(k)?.map(|u| self.index_of(&u)).collect())
    }

    /// `(m+1)^{-d/2}`.
    pub fn normalization(&self) -> f64 {
        (self.radix() as f64).powf(-(self.d as f64) / 2.0)
    }

    /// The `(m+1)`-th roots of unity `xi^j`, `j = 0..=m`.
    pub fn roots_of_unity(&self) -> Vec<Complex64> {
        let r = self.radix();
        (0..r)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / r as f64;
                let (s, c) = angle.sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// `S·u mod (m+1)`.
    pub fn pairing(&self, s: &GroupPoint, u: &GroupPoint) -> usize {
        let r = self.radix();
        s.coords
            .iter()
            .zip(&u.coords)
            .fold(0usize, |acc, (&a, &b)| (acc + a as usize * b as usize) % r)
    }

    /// The L2-normalized character `chi_S(u) = (m+1)^{-d/2} xi^{S·u}`.
    pub fn character(&self, s: &FrequencyPoint, u: &GroupPoint) -> Complex64 {
        let r = self.radix();
        let angle = 2.0 * std::f64::consts::PI * self.pairing(s, u) as f64 / r as f64;
        let (sn, cs) = angle.sin_cos();
        Complex64::new(cs, sn) * self.normalization()
    }
}

/// `(m, d)` without the group-order guard: enough for radial kernels and
/// multiplier profiles, which never enumerate the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadialSpec {
    m: usize,
    d: usize,
}

/// Largest dimension accepted on the kernel side.
pub const MAX_RADIAL_D: usize = 4096;

impl RadialSpec {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        check_range("d", d as i64, 1, MAX_RADIAL_D as i64)?;
        Ok(RadialSpec { m, d })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sphere_size(&self, k: usize) -> Result<u128> {
        check_range("k", k as i64, 0, self.d as i64)?;
        (self.m as u128)
            .checked_pow(k as u32)
            .zip(checked_binomial(self.d, k))
            .and_then(|(p, b)| p.checked_mul(b))
            .ok_or(invalid("k", "sphere size overflows u128"))
    }

    pub fn sphere_size_f64(&self, k: usize) -> f64 {
        binomial_f64(self.d, k) * (self.m as f64).powi(k as i32)
    }
}

impl From<GroupSpec> for RadialSpec {
    fn from(spec: GroupSpec) -> Self {
        RadialSpec { m: spec.m, d: spec.d }
    }
}

impl From<&GroupSpec> for RadialSpec {
    fn from(spec: &GroupSpec) -> Self {
        RadialSpec { m: spec.m, d: spec.d }
    }
}

impl PartialEq<RadialSpec> for GroupSpec {
    fn eq(&self, other: &RadialSpec) -> bool {
        self.m == other.m && self.d == other.d
    }
}

impl PartialEq<GroupSpec> for RadialSpec {
    fn eq(&self, other: &GroupSpec) -> bool {
        other == self
    }
}

/// A point of Z_{m+1}^d given by its coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<u32>,
}

/// Frequencies live in the (self-dual) group itself.
pub type FrequencyPoint = GroupPoint;

impl GroupPoint {
    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn hamming_weight(&self) -> usize {
        self.coords.iter().filter(|&&c| c != 0).count()
    }

    pub fn add(&self, other: &GroupPoint, spec: &GroupSpec) -> GroupPoint {
        let r = spec.radix() as u32;
        GroupPoint {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| (a + b) % r)
                .collect(),
        }
    }

    pub fn neg(&self, spec: &GroupSpec) -> GroupPoint {
        let r = spec.radix() as u32;
        GroupPoint {
            coords: self.coords.iter().map(|&a| (r - a) % r).collect(),
        }
    }
}

pub fn hamming_weight(u: &GroupPoint) -> usize {
    u.hamming_weight()
}

/// Points of a fixed Hamming weight: support sets in lexicographic order,
/// and for each support every assignment of nonzero residues.
pub struct SphereIter {
    spec: GroupSpec,
    support: Vec<usize>,
    values: Vec<u32>,
    done: bool,
}

impl SphereIter {
    fn new(spec: GroupSpec, k: usize) -> Self {
        SphereIter {
            spec,
            support: (0..k).collect(),
            values: vec![1; k],
            done: false,
        }
    }

    fn advance(&mut self) {
        let m = self.spec.m() as u32;
        for v in self.values.iter_mut() {
            if *v < m {
                *v += 1;
                return;
            }
            *v = 1;
        }
        // all residue patterns exhausted: next support set
        let k = self.support.len();
        let d = self.spec.d();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.support[i] < d - k + i {
                self.support[i] += 1;
                for j in i + 1..k {
                    self.support[j] = self.support[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for SphereIter {
    type Item = GroupPoint;

    fn next(&mut self) -> Option<GroupPoint> {
        if self.done {
            return None;
        }
        let mut coords = vec![0u32; self.spec.d()];
        for (&pos, &v) in self.support.iter().zip(&self.values) {
            coords[pos] = v;
        }
        self.advance();
        Some(GroupPoint { coords })
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn checked_binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n-i) is divisible by i+1; divide first by the gcd to delay overflow
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        acc = (acc / g).checked_mul(num / (den / g))?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
