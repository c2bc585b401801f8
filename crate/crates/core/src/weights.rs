//! Exact rational weights for the staged lower bounds.
//!
//! Step `S - l` of the staged decomposition attaches to each index `i_l` a
//! weight measuring the density of `l`-dimensional lattices that survived
//! all earlier steps. The weight is
//!
//! ```text
//! w(l, i) = lead * prod_{j<=S}(1 - 1/p_j) / (i(i+1))
//!           * sum over exponents a_{l+1}..a_S >= 0 of
//!             prod_{v=l+1}^{S} I(i * p_{l+1}^{a_{l+1}} ... p_v^{a_v} > K_v) / p_v^{a_v}
//! ```
//!
//! with `lead = 2` for the `[2n]` target and `lead = 1` for the `[n]`
//! target. Every indicator is monotone in its exponent, so each inner sum is
//! a finite prefix of zeros followed by a geometric tail with a closed form;
//! the whole weight is an exact rational with no truncation error.
//!
//! When the `K` vector is non-increasing the nested sum collapses to a
//! single geometric tail over `p_{l+1}`:
//!
//! ```text
//! w(l, i) = lead * prod_{j<=l}(1 - 1/p_j) * p_{l+1}^{-A(i)} / (i(i+1)),
//! A(i) = min { a >= 0 : i * p_{l+1}^a > K_{l+1} }.
//! ```
//!
//! Both forms are implemented; their exact equality on non-increasing `K`
//! vectors is a tested identity. The factor `w(l, i) * i(i+1)` is piecewise
//! constant in `i` with breakpoints where `i` times a prime product crosses
//! some `K_v`, which is what lets the bound engine telescope over huge
//! ranges.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `prod_{j<=m} (1 - 1/p_j)` over the given primes.
pub fn odd_density(primes: &[u64], m: usize) -> BigRational {
    (0..m).map(|j| ratio(primes[j] - 1, primes[j])).product()
}

fn validate(primes: &[u64], ks: &[u64], l: usize) -> Result<()> {
    let s = primes.len();
    if ks.len() != s {
        return Err(Error::invalid(format!(
            "expected {s} K values to match the prime list, got {}",
            ks.len()
        )));
    }
    if l >= s {
        return Err(Error::invalid(format!("weight step l = {l} needs l < S = {s}")));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::invalid("all K values must be positive"));
    }
    Ok(())
}

pub fn ks_non_increasing(ks: &[u64]) -> bool {
    ks.windows(2).all(|w| w[0] >= w[1])
}

/// The weight by the fully nested sum; valid for any positive `K` vector.
pub fn weight_nested(lead: u64, primes: &[u64], ks: &[u64], l: usize, i: u64) -> Result<BigRational> {
    Ok(weight_profile_nested(lead, primes, ks, l, i)? / BigRational::from_integer(BigInt::from(i) * BigInt::from(i + 1)))
}

/// The weight by the collapsed single sum; requires non-increasing `K`s.
pub fn weight_single_sum(
    lead: u64,
    primes: &[u64],
    ks: &[u64],
    l: usize,
    i: u64,
) -> Result<BigRational> {
    Ok(weight_profile_single_sum(lead, primes, ks, l, i)?
        / BigRational::from_integer(BigInt::from(i) * BigInt::from(i + 1)))
}

/// The weight `w(l, i)`, dispatching to the single-sum form when the `K`
/// vector allows it.
pub fn weight(lead: u64, primes: &[u64], ks: &[u64], l: usize, i: u64) -> Result<BigRational> {
    if ks_non_increasing(ks) {
        weight_single_sum(lead, primes, ks, l, i)
    } else {
        weight_nested(lead, primes, ks, l, i)
    }
}

/// `w(l, i) * i(i+1)` by the nested sum: piecewise constant in `i`.
pub fn weight_profile_nested(
    lead: u64,
    primes: &[u64],
    ks: &[u64],
    l: usize,
    i: u64,
) -> Result<BigRational> {
    validate(primes, ks, l)?;
    if i == 0 {
        return Err(Error::invalid("weight index i must be positive"));
    }
    let s = primes.len();
    // tail_product[v] = prod_{w=v..S} p_w/(p_w - 1), 1-indexed by v
    let mut tail_product = vec![BigRational::one(); s + 2];
    for v in (1..=s).rev() {
        tail_product[v] = &tail_product[v + 1] * ratio(primes[v - 1], primes[v - 1] - 1);
    }
    // k_max[v] = max(K_v..K_S)
    let mut k_max = vec![0u64; s + 1];
    for v in (l + 1..=s).rev() {
        k_max[v] = if v == s { ks[v - 1] } else { ks[v - 1].max(k_max[v + 1]) };
    }

    fn nested(
        v: usize,
        prefix: u128,
        primes: &[u64],
        ks: &[u64],
        k_max: &[u64],
        tail_product: &[BigRational],
    ) -> BigRational {
        let s = primes.len();
        if v > s {
            return BigRational::one();
        }
        let p = primes[v - 1];
        let mut sum = BigRational::zero();
        let mut val = prefix;
        let mut p_pow = BigInt::one();
        loop {
            if val > k_max[v] as u128 {
                // every remaining indicator is forced to 1: geometric tail
                let tail = BigRational::new(BigInt::one(), p_pow.clone()) * &tail_product[v];
                sum += tail;
                break;
            }
            if val > ks[v - 1] as u128 {
                let term = nested(v + 1, val, primes, ks, k_max, tail_product)
                    / BigRational::from_integer(p_pow.clone());
                sum += term;
            }
            val *= p as u128;
            p_pow *= BigInt::from(p);
        }
        sum
    }

    let inner = nested(l + 1, i as u128, primes, ks, &k_max, &tail_product);
    Ok(BigRational::from_integer(BigInt::from(lead)) * odd_density(primes, s) * inner)
}

/// `w(l, i) * i(i+1)` by the single-sum form.
pub fn weight_profile_single_sum(
    lead: u64,
    primes: &[u64],
    ks: &[u64],
    l: usize,
    i: u64,
) -> Result<BigRational> {
    validate(primes, ks, l)?;
    if i == 0 {
        return Err(Error::invalid("weight index i must be positive"));
    }
    if !ks_non_increasing(ks) {
        return Err(Error::invalid(
            "single-sum weight needs a non-increasing K vector",
        ));
    }
    let p = primes[l];
    let a = forced_exponent(i, p, ks[l]);
    let scale = BigRational::new(BigInt::one(), BigInt::from(p).pow(a));
    Ok(BigRational::from_integer(BigInt::from(lead)) * odd_density(primes, l) * scale)
}

/// `A(i) = min { a >= 0 : i * p^a > k }`.
fn forced_exponent(i: u64, p: u64, k: u64) -> u32 {
    let mut a = 0u32;
    let mut val = i as u128;
    while val <= k as u128 {
        val *= p as u128;
        a += 1;
    }
    a
}

/// Indices where `w(l, i) * i(i+1)` can change under the single-sum form:
/// the points `floor(K_{l+1} / p^a) + 1`.
pub fn split_points_single_sum(primes: &[u64], ks: &[u64], l: usize) -> Vec<u64> {
    let p = primes[l];
    let k = ks[l];
    let mut points = Vec::new();
    let mut power = 1u128;
    loop {
        let t = (k as u128 / power) as u64 + 1;
        if t >= 2 {
            points.push(t);
        }
        if power > k as u128 {
            break;
        }
        power *= p as u128;
    }
    points.sort_unstable();
    points.dedup();
    points
}

/// Indices where the nested-sum profile can change: every point
/// `floor(K_v / m) + 1` with `m` a product of `p_{l+1}..p_v` powers.
pub fn split_points_nested(primes: &[u64], ks: &[u64], l: usize) -> Vec<u64> {
    let s = primes.len();
    let mut points = Vec::new();
    for v in l + 1..=s {
        let k = ks[v - 1];
        // enumerate products of p_{l+1}..p_v up to K_v
        let mut products = vec![1u128];
        for &p in &primes[l..v] {
            let mut extended = Vec::new();
            for &m in &products {
                let mut val = m;
                while val <= k as u128 {
                    extended.push(val);
                    val *= p as u128;
                }
            }
            products = extended;
        }
        for m in products {
            points.push((k as u128 / m) as u64 + 1);
        }
    }
    points.retain(|&t| t >= 2);
    points.sort_unstable();
    points.dedup();
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRIMES5: [u64; 5] = [2, 3, 5, 7, 11];

    #[test]
    fn spec_example_one_eighteenth() {
        // alpha target, S = 2, l = 1, K_2 = 3, i = 2
        let w = weight(2, &[2, 3], &[10, 3], 1, 2).unwrap();
        assert_eq!(w, ratio(1, 18));
        let nested = weight_nested(2, &[2, 3], &[10, 3], 1, 2).unwrap();
        assert_eq!(nested, ratio(1, 18));
    }

    #[test]
    fn forced_indicators_cancel_tails() {
        // i > K_{l+1} >= ... >= K_S forces every indicator to 1 and the
        // geometric tails cancel the (1 - 1/p_v) factors beyond level l
        let ks = [100u64, 50, 20, 10, 5];
        for l in 0..5usize {
            let i = 200; // above every K
            let w = weight_nested(2, &PRIMES5, &ks, l, i).unwrap();
            let expect = BigRational::from_integer(2.into()) * odd_density(&PRIMES5, l)
                / BigRational::from_integer(BigInt::from(i) * BigInt::from(i + 1));
            assert_eq!(w, expect, "l = {l}");
        }
    }

    #[test]
    fn nested_equals_single_sum_on_monotone_ks() {
        let ks = [400u64, 400, 50, 11, 7];
        for lead in [1u64, 2] {
            for l in 0..5usize {
                for i in 1..=60u64 {
                    let a = weight_nested(lead, &PRIMES5, &ks, l, i).unwrap();
                    let b = weight_single_sum(lead, &PRIMES5, &ks, l, i).unwrap();
                    assert_eq!(a, b, "lead={lead} l={l} i={i}");
                }
            }
        }
    }

    #[test]
    fn profile_constant_between_split_points() {
        let ks = [300u64, 120, 40];
        let primes = [2u64, 3, 5];
        for l in 0..3usize {
            let splits = split_points_nested(&primes, &ks, l);
            let mut boundaries = vec![1u64];
            boundaries.extend(splits.iter().copied().filter(|&t| t <= 350));
            boundaries.push(351);
            for w in boundaries.windows(2) {
                let (a, b) = (w[0], w[1] - 1);
                if a > b {
                    continue;
                }
                let at_a = weight_profile_nested(1, &primes, &ks, l, a).unwrap();
                for i in [a + (b - a) / 2, b] {
                    let at_i = weight_profile_nested(1, &primes, &ks, l, i).unwrap();
                    assert_eq!(at_a, at_i, "profile moved inside [{a}, {b}] at {i}");
                }
            }
        }
    }

    #[test]
    fn beta_step_zero_weight() {
        // l = 0 with K_1 = 2^20: the only contribution left is the dyadic
        // tail above K_1, of mass 2^-22 at i = 1
        let ks = [1u64 << 20, 1 << 20, 960, 196, 98];
        let w = weight(1, &PRIMES5, &ks, 0, 1).unwrap();
        assert_eq!(w, BigRational::new(BigInt::one(), BigInt::from(1u64 << 22)));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(weight(2, &[2, 3], &[5], 1, 1).is_err());
        assert!(weight(2, &[2, 3], &[5, 5], 2, 1).is_err());
        assert!(weight(2, &[2, 3], &[5, 0], 1, 1).is_err());
        assert!(weight(2, &[2, 3], &[5, 5], 1, 0).is_err());
        assert!(weight_single_sum(2, &[2, 3], &[3, 5], 1, 1).is_err());
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
}
