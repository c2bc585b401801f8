//! Smooth-number divisor lattices and their chain decompositions.
//!
//! `M_l(x)` is the set of positive integers at most `x` whose prime factors
//! all lie among the first `l` primes, partially ordered by divisibility.
//! Its size is polylogarithmic in `x` (at most `(1 + log2 x)^l`), so elements
//! are produced by bounded product enumeration over exponent vectors rather
//! than by sieving.
//!
//! Grouping elements by largest odd divisor splits the lattice into chains
//! `u, 2u, 4u, ...`; the number of chains equals the number of odd elements
//! and is exactly the maximum antichain size. All antichain counting in
//! [`crate::counting`] runs over this chain structure.
//!
//! The module also provides [`breakpoints`]: the partition of an index range
//! `[1, K]` into segments on which both the element set of `M_l(i)` and the
//! truncation cut `{m : m*q > i}` are constant. Counts and sizes only ever
//! need to be evaluated once per segment, which is what makes `K` up to 10^9
//! affordable.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::primes::PrimeBasis;
use crate::{Error, Result};

/// One chain of a smooth lattice: the elements `odd_part * 2^a` for
/// `0 <= a <= max_exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub odd_part: u64,
    pub max_exp: u32,
}

impl Chain {
    /// Number of elements in the chain.
    pub fn len(&self) -> usize {
        self.max_exp as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The divisor lattice `M_l(x)` with exponent vectors and chain
/// decomposition. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SmoothLattice {
    basis: PrimeBasis,
    limit: u64,
    elements: Vec<u64>,
    exponents: Vec<Vec<u32>>,
    chains: Vec<Chain>,
}

impl SmoothLattice {
    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All elements, sorted ascending.
    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    /// Exponent vector of `elements()[k]` over the basis primes.
    pub fn exponents(&self, k: usize) -> &[u32] {
        &self.exponents[k]
    }

    /// Chains sorted by odd part.
    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Generates `M_l(x)`: all `l`-smooth numbers up to `x`, with exponent
/// vectors and the chain decomposition by odd part.
pub fn generate_lattice(basis: &PrimeBasis, x: u64) -> Result<SmoothLattice> {
    if x == 0 {
        return Err(Error::invalid("lattice limit x must be at least 1"));
    }
    let mut items: Vec<(u64, Vec<u32>)> = Vec::new();
    let mut exps = vec![0u32; basis.l()];
    enumerate(basis.primes(), 0, 1, x, &mut exps, &mut items);
    items.sort_unstable_by_key(|(v, _)| *v);

    let mut chains: Vec<Chain> = Vec::new();
    for (v, _) in &items {
        let odd = v >> v.trailing_zeros();
        let exp = v.trailing_zeros();
        match chains.iter_mut().find(|c| c.odd_part == odd) {
            Some(c) => c.max_exp = c.max_exp.max(exp),
            None => chains.push(Chain {
                odd_part: odd,
                max_exp: exp,
            }),
        }
    }
    chains.sort_unstable_by_key(|c| c.odd_part);

    let (elements, exponents) = items.into_iter().unzip();
    Ok(SmoothLattice {
        basis: basis.clone(),
        limit: x,
        elements,
        exponents,
        chains,
    })
}

fn enumerate(
    primes: &[u64],
    j: usize,
    value: u64,
    x: u64,
    exps: &mut Vec<u32>,
    out: &mut Vec<(u64, Vec<u32>)>,
) {
    if j == primes.len() {
        out.push((value, exps.clone()));
        return;
    }
    let mut v = value;
    let mut e = 0u32;
    loop {
        exps[j] = e;
        enumerate(primes, j + 1, v, x, exps, out);
        match v.checked_mul(primes[j]) {
            Some(next) if next <= x => {
                v = next;
                e += 1;
            }
            _ => break,
        }
    }
    exps[j] = 0;
}

/// Maximum antichain size of the lattice: the number of odd elements, which
/// equals the number of chains.
pub fn max_antichain_size(lat: &SmoothLattice) -> usize {
    lat.chains.len()
}

/// Sorted values of `M_l(x)` without the full lattice bookkeeping.
pub fn smooth_values(basis: &PrimeBasis, x: u64) -> Vec<u64> {
    let mut values = Vec::new();
    enumerate_values(basis.primes(), 0, 1, x, &mut values);
    values.sort_unstable();
    values
}

fn enumerate_values(primes: &[u64], j: usize, value: u64, x: u64, out: &mut Vec<u64>) {
    if j == primes.len() {
        out.push(value);
        return;
    }
    let mut v = value;
    loop {
        enumerate_values(primes, j + 1, v, x, out);
        match v.checked_mul(primes[j]) {
            Some(next) if next <= x => v = next,
            _ => break,
        }
    }
}

/// A partition of `[1, K]` into maximal segments on which both the element
/// set of `M_l(i)` and the cut `{m in M_l(i) : m*q > i}` are constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakpointPartition {
    basis: PrimeBasis,
    k: u64,
    segments: Vec<(u64, u64)>,
}

impl BreakpointPartition {
    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Inclusive `(i_lo, i_hi)` ranges, contiguous and covering `[1, K]`.
    pub fn segments(&self) -> &[(u64, u64)] {
        &self.segments
    }
}

/// Computes the breakpoint partition of `[1, K]` for a basis.
///
/// Boundaries occur exactly where `M_l(i)` gains an element (at `i = m`,
/// `m` smooth) or where the truncation cut loses one (at `i = m*q`).
pub fn breakpoints(basis: &PrimeBasis, k: u64) -> Result<BreakpointPartition> {
    if k == 0 {
        return Err(Error::invalid("breakpoint range K must be at least 1"));
    }
    let q = basis.q();
    let mut bounds = smooth_values(basis, k);
    for m in smooth_values(basis, k / q) {
        if let Some(mq) = m.checked_mul(q) {
            if mq <= k {
                bounds.push(mq);
            }
        }
    }
    bounds.sort_unstable();
    bounds.dedup();
    debug_assert_eq!(bounds.first(), Some(&1));

    let mut segments = Vec::with_capacity(bounds.len());
    for (idx, &lo) in bounds.iter().enumerate() {
        let hi = bounds.get(idx + 1).map_or(k, |next| next - 1);
        segments.push((lo, hi));
    }
    Ok(BreakpointPartition {
        basis: basis.clone(),
        k,
        segments,
    })
}

/// Exact value of `sum_{i=a}^{b} 1/(i(i+1)) = 1/a - 1/(b+1)`.
pub fn telescoped_weight_sum(a: u64, b: u64) -> BigRational {
    assert!(a >= 1 && a <= b, "telescoped_weight_sum needs 1 <= a <= b");
    let one = BigRational::from_integer(BigInt::from(1));
    one.clone() / BigRational::from_integer(BigInt::from(a))
        - one / BigRational::from_integer(BigInt::from(b + 1))
}

/// `|M_l(i)|` for `i` in `[1, K]`, reported per breakpoint segment as
/// `(i_lo, i_hi, size, truncated_size)` where `truncated_size` counts the
/// elements `m` of `M_l(i)` with `m*q > i`.
pub fn size_rows(basis: &PrimeBasis, k: u64) -> Result<Vec<(u64, u64, u64, u64)>> {
    let parts = breakpoints(basis, k)?;
    let values = smooth_values(basis, k);
    let q = basis.q();
    let rows = parts
        .segments()
        .iter()
        .map(|&(lo, hi)| {
            let size = values.partition_point(|&m| m <= lo) as u64;
            let small = values.partition_point(|&m| m <= lo / q) as u64;
            (lo, hi, size, size - small)
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::first_primes;

    #[test]
    fn powers_of_two_up_to_eight() {
        let lat = generate_lattice(&first_primes(1), 8).unwrap();
        assert_eq!(lat.elements(), &[1, 2, 4, 8]);
        assert_eq!(lat.chains().len(), 1);
        assert_eq!(max_antichain_size(&lat), 1);
    }

    #[test]
    fn two_smooth_numbers_up_to_six() {
        let lat = generate_lattice(&first_primes(2), 6).unwrap();
        assert_eq!(lat.elements(), &[1, 2, 3, 4, 6]);
        let chains = lat.chains();
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0], Chain { odd_part: 1, max_exp: 2 });
        assert_eq!(chains[1], Chain { odd_part: 3, max_exp: 1 });
        assert_eq!(max_antichain_size(&lat), 2);
    }

    #[test]
    fn empty_basis_gives_singleton() {
        let lat = generate_lattice(&first_primes(0), 5).unwrap();
        assert_eq!(lat.elements(), &[1]);
        assert_eq!(lat.chains(), &[Chain { odd_part: 1, max_exp: 0 }]);
    }

    #[test]
    fn rejects_zero_limit() {
        assert!(generate_lattice(&first_primes(1), 0).is_err());
    }

    #[test]
    fn odd_count_of_m3_30() {
        let lat = generate_lattice(&first_primes(3), 30).unwrap();
        // odd 15-smooth numbers up to 30: 1, 3, 5, 9, 15, 25, 27
        assert_eq!(max_antichain_size(&lat), 7);
    }

    #[test]
    fn exponent_vectors_multiply_out() {
        let basis = first_primes(3);
        let lat = generate_lattice(&basis, 100).unwrap();
        for (k, &v) in lat.elements().iter().enumerate() {
            let prod: u64 = basis
                .primes()
                .iter()
                .zip(lat.exponents(k))
                .map(|(&p, &e)| p.pow(e))
                .product();
            assert_eq!(prod, v);
        }
    }

    #[test]
    fn breakpoints_l1_k5() {
        let parts = breakpoints(&first_primes(1), 5).unwrap();
        assert_eq!(parts.segments(), &[(1, 1), (2, 2), (3, 3), (4, 5)]);
    }

    #[test]
    fn breakpoints_l0_k10() {
        let parts = breakpoints(&first_primes(0), 10).unwrap();
        assert_eq!(parts.segments(), &[(1, 1), (2, 10)]);
    }

    #[test]
    fn breakpoints_k1_single_segment() {
        for l in 0..4 {
            let parts = breakpoints(&first_primes(l), 1).unwrap();
            assert_eq!(parts.segments(), &[(1, 1)]);
        }
    }

    #[test]
    fn telescoped_examples() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(telescoped_weight_sum(2, 5), r(1, 3));
        assert_eq!(telescoped_weight_sum(1, 1), r(1, 2));
        let big = telescoped_weight_sum(1, 1_000_000);
        assert_eq!(big, r(1, 1) - r(1, 1_000_001));
    }

    #[test]
    fn size_rows_match_direct_counts() {
        let basis = first_primes(2);
        for &(lo, hi, size, trunc) in size_rows(&basis, 40).unwrap().iter() {
            for i in lo..=hi {
                let values = smooth_values(&basis, i);
                assert_eq!(values.len() as u64, size, "size at i={i}");
                let t = values.iter().filter(|&&m| m * basis.q() > i).count() as u64;
                assert_eq!(t, trunc, "truncated size at i={i}");
            }
        }
    }
}
