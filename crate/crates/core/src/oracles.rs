//! Exact brute-force ground truth for small instances.
//!
//! Nothing here is asymptotic: these operations count the real objects —
//! maximum primitive subsets of `[2n]`, all primitive subsets of `[n]`,
//! pairwise-coprime subsets — by exhaustive search, and exist to validate
//! the bound machinery and to pin down small fixtures such as
//! `f(7) = 12 > f(8) = 10`.
//!
//! Each counter comes in two independent methods where feasible (chain
//! backtracking vs. naive subset filtering, mask DP vs. naive pair-gcd);
//! agreement between methods is asserted by tests.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::primes::{sieve, PrimeBasis};
use crate::{Error, Result};

pub use crate::primes::prime_count;

/// How an exact count was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    ChainBacktracking,
    NaiveSubsets,
    MaskDp,
}

/// An exactly counted quantity with its method and wall time.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub n: u64,
    pub value: BigUint,
    pub method: OracleMethod,
    pub elapsed: Duration,
}

/// True iff no element of the set divides a distinct element.
pub fn primitive_check(set: &[u64]) -> bool {
    let mut xs: Vec<u64> = set.to_vec();
    xs.sort_unstable();
    xs.dedup();
    for (i, &a) in xs.iter().enumerate() {
        for &b in &xs[i + 1..] {
            if b % a == 0 {
                return false;
            }
        }
    }
    true
}

/// Chains `C(u) = {u, 2u, 4u, ...}` restricted to `[limit]`, for odd `u`,
/// ordered by decreasing odd part so that forced singleton chains are
/// placed first during backtracking.
fn chains_of(limit: u64) -> Vec<Vec<u64>> {
    let mut chains = Vec::new();
    let mut u = if limit % 2 == 0 { limit - 1 } else { limit };
    loop {
        let mut chain = Vec::new();
        let mut x = u;
        while x <= limit {
            chain.push(x);
            match x.checked_mul(2) {
                Some(next) => x = next,
                None => break,
            }
        }
        chains.push(chain);
        if u == 1 {
            break;
        }
        u -= 2;
    }
    chains
}

/// Backtracking count of primitive sets built by taking per-chain choices.
/// `required` decides whether every chain must contribute an element
/// (maximum-size sets) or may stay empty (all primitive sets); `accept`
/// filters candidate elements.
fn count_per_chain(
    chains: &[Vec<u64>],
    required: bool,
    accept: &dyn Fn(u64) -> bool,
) -> BigUint {
    fn rec(
        chains: &[Vec<u64>],
        idx: usize,
        chosen: &mut Vec<u64>,
        required: bool,
        accept: &dyn Fn(u64) -> bool,
        total: &mut BigUint,
    ) {
        if idx == chains.len() {
            *total += 1u32;
            return;
        }
        if !required {
            rec(chains, idx + 1, chosen, required, accept, total);
        }
        for &x in &chains[idx] {
            if !accept(x) {
                continue;
            }
            if chosen.iter().any(|&y| x % y == 0 || y % x == 0) {
                continue;
            }
            chosen.push(x);
            rec(chains, idx + 1, chosen, required, accept, total);
            chosen.pop();
        }
    }
    let mut total = BigUint::zero();
    rec(chains, 0, &mut Vec::new(), required, accept, &mut total);
    total
}

/// Naive count over all subsets of `[limit]`, keeping those that are
/// primitive, pass `accept` elementwise, and match `size` when given.
fn count_naive(limit: u64, size: Option<u32>, accept: &dyn Fn(u64) -> bool) -> BigUint {
    assert!(limit <= 24, "naive subset enumeration capped at 2^24");
    let n = limit as usize;
    // divisor_mask[k] marks the proper divisors of k+1 within [limit]
    let mut divisor_mask = vec![0u32; n];
    for k in 1..=n {
        for d in 1..k {
            if k % d == 0 {
                divisor_mask[k - 1] |= 1 << (d - 1);
            }
        }
    }
    let allowed: u32 = (1..=limit).filter(|&x| accept(x)).map(|x| 1u32 << (x - 1)).sum();
    let mut total = BigUint::zero();
    for mask in 0u32..(1u32 << n) {
        if mask & !allowed != 0 {
            continue;
        }
        if let Some(s) = size {
            if mask.count_ones() != s {
                continue;
            }
        }
        let mut rest = mask;
        let mut ok = true;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if divisor_mask[k] & mask != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            total += 1u32;
        }
    }
    total
}

/// `f(n)`: the number of `n`-element primitive subsets of `[2n]`.
pub fn f_exact(n: u64, method: OracleMethod) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("f(n) needs n >= 1"));
    }
    let start = Instant::now();
    let value = match method {
        OracleMethod::ChainBacktracking => {
            if n > 24 {
                return Err(Error::ResourceCeiling(format!(
                    "f backtracking capped at n = 24, got {n}"
                )));
            }
            count_per_chain(&chains_of(2 * n), true, &|_| true)
        }
        OracleMethod::NaiveSubsets => {
            if n > 10 {
                return Err(Error::ResourceCeiling(format!(
                    "naive f capped at n = 10, got {n}"
                )));
            }
            count_naive(2 * n, Some(n as u32), &|_| true)
        }
        OracleMethod::MaskDp => {
            return Err(Error::invalid("mask DP does not apply to f(n)"));
        }
    };
    Ok(OracleResult {
        n,
        value,
        method,
        elapsed: start.elapsed(),
    })
}

/// `g(n)`: the number of primitive subsets of `[n]`, the empty set included.
pub fn g_exact(n: u64, method: OracleMethod) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("g(n) needs n >= 1"));
    }
    let start = Instant::now();
    let value = match method {
        OracleMethod::ChainBacktracking => {
            if n > 40 {
                return Err(Error::ResourceCeiling(format!(
                    "g backtracking capped at n = 40, got {n}"
                )));
            }
            count_per_chain(&chains_of(n), false, &|_| true)
        }
        OracleMethod::NaiveSubsets => {
            if n > 20 {
                return Err(Error::ResourceCeiling(format!(
                    "naive g capped at n = 20, got {n}"
                )));
            }
            count_naive(n, None, &|_| true)
        }
        OracleMethod::MaskDp => return Err(Error::invalid("mask DP does not apply to g(n)")),
    };
    Ok(OracleResult {
        n,
        value,
        method,
        elapsed: start.elapsed(),
    })
}

/// `f_q(n)`: the number of `n`-element primitive subsets of `[2n]` whose
/// elements `m` all satisfy `m*q > 2n`, i.e. lie in `(2n/q, 2n]`.
pub fn fq_exact(n: u64, basis: &PrimeBasis) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("f_q(n) needs n >= 1"));
    }
    if n > 20 {
        return Err(Error::ResourceCeiling(format!(
            "f_q backtracking capped at n = 20, got {n}"
        )));
    }
    let q = basis.q();
    let start = Instant::now();
    let value = count_per_chain(&chains_of(2 * n), true, &move |m| {
        m.checked_mul(q).is_some_and(|mq| mq > 2 * n)
    });
    Ok(OracleResult {
        n,
        value,
        method: OracleMethod::ChainBacktracking,
        elapsed: start.elapsed(),
    })
}

/// The number of subsets of `[n]` (including the empty set) whose elements
/// are pairwise coprime.
pub fn coprime_count_exact(n: u64, method: OracleMethod) -> Result<OracleResult> {
    if n == 0 {
        return Err(Error::invalid("coprime count needs n >= 1"));
    }
    let start = Instant::now();
    let value = match method {
        OracleMethod::MaskDp => {
            if n > 36 {
                return Err(Error::ResourceCeiling(format!(
                    "coprime mask DP capped at n = 36, got {n}"
                )));
            }
            coprime_mask_dp(n)
        }
        OracleMethod::NaiveSubsets => {
            if n > 20 {
                return Err(Error::ResourceCeiling(format!(
                    "naive coprime capped at n = 20, got {n}"
                )));
            }
            coprime_naive(n)
        }
        OracleMethod::ChainBacktracking => {
            return Err(Error::invalid("chain backtracking does not apply to coprime counts"));
        }
    };
    Ok(OracleResult {
        n,
        value,
        method,
        elapsed: start.elapsed(),
    })
}

fn coprime_mask_dp(n: u64) -> BigUint {
    let primes = sieve(n);
    let signature = |x: u64| -> u32 {
        primes
            .iter()
            .enumerate()
            .filter(|(_, &p)| x % p == 0)
            .fold(0u32, |m, (i, _)| m | (1 << i))
    };
    // dp over sets of used primes; element 1 doubles the total at the end
    let mut dp = vec![BigUint::zero(); 1 << primes.len()];
    dp[0] = BigUint::from(1u32);
    for x in 2..=n {
        let sig = signature(x) as usize;
        for mask in (0..dp.len()).rev() {
            if mask & sig == 0 && !dp[mask].is_zero() {
                let add = dp[mask].clone();
                dp[mask | sig] += add;
            }
        }
    }
    let subsets: BigUint = dp.into_iter().sum();
    subsets * 2u32
}

fn coprime_naive(n: u64) -> BigUint {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let n = n as usize;
    let mut conflict = vec![0u32; n];
    for a in 1..=n {
        for b in 1..a {
            if gcd(a as u64, b as u64) > 1 {
                conflict[a - 1] |= 1 << (b - 1);
                conflict[b - 1] |= 1 << (a - 1);
            }
        }
    }
    let mut total = BigUint::zero();
    for mask in 0u32..(1u32 << n) {
        let mut rest = mask;
        let mut ok = true;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if conflict[k] & mask != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            total += 1u32;
        }
    }
    total
}

/// The reference expressions `2^pi(n) * e^{c*sqrt(n)}` for
/// `c = 1/2, 1, 2`, reported in natural-log form.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoprimeBoundEval {
    pub n: u64,
    pub pi: usize,
    pub log_lower: f64,
    pub log_mid: f64,
    pub log_upper: f64,
}

/// Evaluates the coprime-count reference expressions at `n`.
pub fn coprime_bound_eval(n: u64) -> Result<CoprimeBoundEval> {
    if n < 2 {
        return Err(Error::invalid("coprime bound evaluation needs n >= 2"));
    }
    let pi = prime_count(n);
    let base = pi as f64 * std::f64::consts::LN_2;
    let root = (n as f64).sqrt();
    Ok(CoprimeBoundEval {
        n,
        pi,
        log_lower: base + 0.5 * root,
        log_mid: base + root,
        log_upper: base + 2.0 * root,
    })
}

/// The residual exponent `log(count / 2^pi(n)) / sqrt(n)`; the constant the
/// reference expressions bracket.
pub fn coprime_residual_exponent(count: &BigUint, n: u64) -> f64 {
    let ln_count = crate::dd::ln_biguint(count).hi();
    let pi = prime_count(n);
    (ln_count - pi as f64 * std::f64::consts::LN_2) / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::first_primes;

    fn f(n: u64, m: OracleMethod) -> u64 {
        use num_traits::ToPrimitive;
        f_exact(n, m).unwrap().value.to_u64().unwrap()
    }

    #[test]
    fn primitive_check_examples() {
        assert!(primitive_check(&[]));
        assert!(primitive_check(&[2, 3, 5]));
        assert!(!primitive_check(&[3, 6]));
        assert!(!primitive_check(&[1, 7]));
        assert!(primitive_check(&[1]));
    }

    #[test]
    fn f_small_values() {
        assert_eq!(f(1, OracleMethod::NaiveSubsets), 2);
        assert_eq!(f(2, OracleMethod::NaiveSubsets), 2);
        assert_eq!(f(3, OracleMethod::NaiveSubsets), 3);
        assert_eq!(f(7, OracleMethod::ChainBacktracking), 12);
        assert_eq!(f(8, OracleMethod::ChainBacktracking), 10);
    }

    #[test]
    fn f_methods_agree_up_to_ten() {
        for n in 1..=10 {
            assert_eq!(
                f(n, OracleMethod::ChainBacktracking),
                f(n, OracleMethod::NaiveSubsets),
                "f({n})"
            );
        }
    }

    #[test]
    fn g_small_values_and_monotonicity() {
        use num_traits::ToPrimitive;
        let g = |n, m| g_exact(n, m).unwrap().value.to_u64().unwrap();
        assert_eq!(g(1, OracleMethod::NaiveSubsets), 2);
        assert_eq!(g(3, OracleMethod::NaiveSubsets), 5);
        let mut prev = 0;
        for n in 1..=18 {
            let bt = g(n, OracleMethod::ChainBacktracking);
            assert_eq!(bt, g(n, OracleMethod::NaiveSubsets), "g({n})");
            assert!(bt >= prev, "g not monotone at {n}");
            prev = bt;
        }
    }

    #[test]
    fn fq_examples() {
        use num_traits::ToPrimitive;
        let basis = first_primes(2); // q = 5
        let v = |n| fq_exact(n, &basis).unwrap().value.to_u64().unwrap();
        assert_eq!(v(3), 3);
        assert_eq!(v(2), 2);
        for n in 1..=9 {
            let fq = v(n);
            let fn_ = f(n, OracleMethod::ChainBacktracking);
            assert!(fq <= fn_, "f_q({n}) = {fq} > f({n}) = {fn_}");
        }
    }

    #[test]
    fn coprime_counts() {
        use num_traits::ToPrimitive;
        let c = |n, m| coprime_count_exact(n, m).unwrap().value.to_u64().unwrap();
        assert_eq!(c(3, OracleMethod::NaiveSubsets), 8);
        assert_eq!(c(4, OracleMethod::NaiveSubsets), 12);
        for n in 1..=20 {
            assert_eq!(
                c(n, OracleMethod::MaskDp),
                c(n, OracleMethod::NaiveSubsets),
                "coprime({n})"
            );
        }
        for n in 2..=36u64 {
            let exact = coprime_count_exact(n, OracleMethod::MaskDp).unwrap().value;
            let floor = BigUint::from(2u32).pow(prime_count(n) as u32 + 1);
            assert!(exact >= floor, "coprime({n}) below 2^(pi+1)");
        }
    }

    #[test]
    fn coprime_bound_eval_n4() {
        let eval = coprime_bound_eval(4).unwrap();
        assert_eq!(eval.pi, 2);
        assert!((eval.log_lower - (2.0 * std::f64::consts::LN_2 + 1.0)).abs() < 1e-12);
        assert!((eval.log_mid - (2.0 * std::f64::consts::LN_2 + 2.0)).abs() < 1e-12);
        assert!((eval.log_upper - (2.0 * std::f64::consts::LN_2 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn f_witnesses_hit_every_chain() {
        // Re-enumerate maximum primitive subsets of [2n] naively and check
        // the one-element-per-chain structure for a few small n.
        for n in 1u64..=6 {
            let limit = 2 * n;
            let mut count = 0u64;
            for mask in 0u32..(1u32 << limit) {
                if mask.count_ones() != n as u32 {
                    continue;
                }
                let set: Vec<u64> = (1..=limit).filter(|&x| mask & (1 << (x - 1)) != 0).collect();
                if !primitive_check(&set) {
                    continue;
                }
                count += 1;
                for chain in chains_of(limit) {
                    let hits = chain.iter().filter(|&&x| set.contains(&x)).count();
                    assert_eq!(hits, 1, "chain {chain:?} of [2*{n}] not hit exactly once");
                }
            }
            assert_eq!(count, f(n, OracleMethod::ChainBacktracking));
        }
    }
}
