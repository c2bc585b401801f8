//! Prime bases and small prime utilities.
//!
//! Every lattice in this crate is indexed by a [`PrimeBasis`]: the first `l`
//! primes together with the next prime `q`. The truncation thresholds in the
//! count families are expressed through `q`, so the basis carries it
//! explicitly.

use crate::Result;

/// The first `l` primes plus the next prime `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    q: u64,
}

impl PrimeBasis {
    /// Number of primes in the basis.
    pub fn l(&self) -> usize {
        self.primes.len()
    }

    /// The first `l` primes, in increasing order.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// The `(l+1)`st prime (2 when the basis is empty).
    pub fn q(&self) -> u64 {
        self.q
    }

    /// The `j`-th basis prime, 1-indexed as `p_1 = 2, p_2 = 3, ...`.
    pub fn prime(&self, j: usize) -> u64 {
        self.primes[j - 1]
    }
}

/// Returns the basis of the first `l` primes and `q = p_{l+1}`.
pub fn first_primes(l: usize) -> PrimeBasis {
    let primes = first_n_primes(l + 1);
    PrimeBasis {
        q: primes[l],
        primes: primes[..l].to_vec(),
    }
}

/// First `count` primes by trial division; `count` stays tiny here.
fn first_n_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut n = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            primes.push(n);
        }
        n += 1;
    }
    primes
}

/// π(n): the number of primes at most `n`, via a sieve of Eratosthenes.
pub fn prime_count(n: u64) -> usize {
    sieve(n).len()
}

/// All primes up to and including `n`.
pub fn sieve(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut is_prime = vec![true; n + 1];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if is_prime[p] {
            let mut m = p * p;
            while m <= n {
                is_prime[m] = false;
                m += p;
            }
        }
        p += 1;
    }
    (2..=n).filter(|&i| is_prime[i]).map(|i| i as u64).collect()
}

/// Parses a basis from an explicit prime list, validating that it really is
/// the list of first primes. Used when restoring cached tables.
pub fn basis_from_primes(primes: &[u64]) -> Result<PrimeBasis> {
    let expect = first_primes(primes.len());
    if expect.primes() != primes {
        return Err(crate::Error::invalid(format!(
            "prime list {:?} is not the first {} primes",
            primes,
            primes.len()
        )));
    }
    Ok(expect)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_basis_has_q_two() {
        let b = first_primes(0);
        assert!(b.primes().is_empty());
        assert_eq!(b.q(), 2);
    }

    #[test]
    fn first_two_primes() {
        let b = first_primes(2);
        assert_eq!(b.primes(), &[2, 3]);
        assert_eq!(b.q(), 5);
    }

    #[test]
    fn first_five_primes() {
        let b = first_primes(5);
        assert_eq!(b.primes(), &[2, 3, 5, 7, 11]);
        assert_eq!(b.q(), 13);
    }

    #[test]
    fn pi_values() {
        assert_eq!(prime_count(0), 0);
        assert_eq!(prime_count(1), 0);
        assert_eq!(prime_count(10), 4);
        assert_eq!(prime_count(100), 25);
    }

    #[test]
    fn basis_from_primes_rejects_wrong_list() {
        assert!(basis_from_primes(&[2, 5]).is_err());
        assert!(basis_from_primes(&[2, 3, 5]).is_ok());
    }
}
