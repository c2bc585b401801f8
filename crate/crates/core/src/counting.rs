//! The four antichain-count families and their dynamic programming.
//!
//! For a lattice `M_l(i)` with truncation prime `q`, the bound formulas need:
//!
//! - `r(i)`   — max-size antichains ([`CountKind::MaxAll`]),
//! - `r'(i)`  — max-size antichains with all elements `m` satisfying
//!   `m*q > i` ([`CountKind::MaxTruncated`]),
//! - `R(i)`   — all antichains, the empty one included ([`CountKind::AllAll`]),
//! - `R'(i)`  — all antichains with all elements above the cut
//!   ([`CountKind::AllTruncated`]).
//!
//! Everything runs over the chain decomposition. An antichain picks at most
//! one element per chain, and an element `u*2^a` divides `v*2^b` exactly when
//! `u | v` and `a <= b`. A *maximum* antichain picks exactly one element per
//! chain, so it is a map from odd parts to exponents that strictly decreases
//! along divisibility of the odd parts; the truncation cut turns into a
//! per-chain exponent window. Such maps are counted by sweeping the exponent
//! level `t` upward while tracking the set `D_t` of chains whose pick is at
//! least `t` — a small family of bitmask states.
//!
//! For all-antichain counts we use that antichains of a poset biject with its
//! down-sets (an antichain is the set of maximal elements of its down
//! closure), and the truncated variant counts antichains of the induced
//! subposet above the cut. Down-sets of these chain-window posets are counted
//! by a similar level sweep over the per-level slices `S_t` of included
//! elements.
//!
//! Counts are exact big integers throughout. A brute-force subset oracle
//! validates the DP on small lattices.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::lattice::{breakpoints, generate_lattice, SmoothLattice};
use crate::primes::PrimeBasis;
use crate::{Error, Result};

/// Hard ceiling on lattice size for a single DP evaluation.
pub const DP_ELEMENT_CEILING: usize = 400;
/// The DP states are chain bitmasks, so the chain count is capped too.
pub const DP_CHAIN_CEILING: usize = 128;
/// The brute-force oracle enumerates all subsets and is capped accordingly.
pub const BRUTE_FORCE_CEILING: usize = 25;

/// Which of the four count families to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    MaxAll,
    MaxTruncated,
    AllAll,
    AllTruncated,
}

impl CountKind {
    pub fn is_truncated(self) -> bool {
        matches!(self, CountKind::MaxTruncated | CountKind::AllTruncated)
    }

    pub fn is_max(self) -> bool {
        matches!(self, CountKind::MaxAll | CountKind::MaxTruncated)
    }

    /// Stable lowercase name used in cache files and reports.
    pub fn name(self) -> &'static str {
        match self {
            CountKind::MaxAll => "max_all",
            CountKind::MaxTruncated => "max_truncated",
            CountKind::AllAll => "all_all",
            CountKind::AllTruncated => "all_truncated",
        }
    }

    pub fn parse(s: &str) -> Result<CountKind> {
        match s {
            "max_all" => Ok(CountKind::MaxAll),
            "max_truncated" => Ok(CountKind::MaxTruncated),
            "all_all" => Ok(CountKind::AllAll),
            "all_truncated" => Ok(CountKind::AllTruncated),
            other => Err(Error::invalid(format!("unknown count kind {other:?}"))),
        }
    }
}

/// One row of a piecewise-constant count table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub i_lo: u64,
    pub i_hi: u64,
    pub count: BigUint,
}

/// A piecewise-constant table of counts over `[1, K]`, aligned to the
/// breakpoint partition of the basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    basis: PrimeBasis,
    kind: CountKind,
    k: u64,
    rows: Vec<CountRow>,
}

impl CountTable {
    pub fn new(basis: PrimeBasis, kind: CountKind, k: u64, rows: Vec<CountRow>) -> Result<CountTable> {
        let mut expect = 1u64;
        for row in &rows {
            if row.i_lo != expect || row.i_hi < row.i_lo {
                return Err(Error::TableMismatch(format!(
                    "rows do not tile [1, {k}] contiguously at i = {expect}"
                )));
            }
            expect = row.i_hi + 1;
        }
        if expect != k + 1 {
            return Err(Error::TableMismatch(format!(
                "rows end at {} but table claims K = {k}",
                expect - 1
            )));
        }
        Ok(CountTable { basis, kind, k, rows })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn kind(&self) -> CountKind {
        self.kind
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn rows(&self) -> &[CountRow] {
        &self.rows
    }

    /// The count at index `i`.
    pub fn lookup(&self, i: u64) -> Result<&BigUint> {
        if i == 0 || i > self.k {
            return Err(Error::TableMismatch(format!(
                "index {i} outside table range [1, {}]",
                self.k
            )));
        }
        let pos = self.rows.partition_point(|row| row.i_hi < i);
        Ok(&self.rows[pos].count)
    }

    /// Restricts the table to `[1, k]`.
    pub fn truncate(&self, k: u64) -> Result<CountTable> {
        if k == 0 || k > self.k {
            return Err(Error::TableMismatch(format!(
                "cannot truncate table over [1, {}] to K = {k}",
                self.k
            )));
        }
        let mut rows = Vec::new();
        for row in &self.rows {
            if row.i_lo > k {
                break;
            }
            rows.push(CountRow {
                i_lo: row.i_lo,
                i_hi: row.i_hi.min(k),
                count: row.count.clone(),
            });
        }
        CountTable::new(self.basis.clone(), self.kind, k, rows)
    }
}

/// Per-chain exponent windows `[lo, hi]` for a lattice, with `lo` raised by
/// the truncation cut `m*q > i` when requested.
fn chain_windows(lat: &SmoothLattice, truncated: bool) -> Vec<(u32, u32)> {
    let q = lat.basis().q() as u128;
    let i = lat.limit() as u128;
    lat.chains()
        .iter()
        .map(|chain| {
            let hi = chain.max_exp;
            let lo = if truncated {
                let mut a = 0u32;
                while (chain.odd_part as u128) * q * (1u128 << a) <= i {
                    a += 1;
                }
                a
            } else {
                0
            };
            (lo, hi)
        })
        .collect()
}

/// For each chain, the bitmask of chains whose odd part strictly divides its
/// own. Strict divisors, not just covers: closure checks must hold across
/// chains that are inactive at the current level.
fn strict_divisor_masks(lat: &SmoothLattice) -> Result<Vec<u128>> {
    let chains = lat.chains();
    if chains.len() > DP_CHAIN_CEILING {
        return Err(Error::ResourceCeiling(format!(
            "lattice at limit {} has {} chains (ceiling {DP_CHAIN_CEILING})",
            lat.limit(),
            chains.len()
        )));
    }
    if lat.len() > DP_ELEMENT_CEILING {
        return Err(Error::ResourceCeiling(format!(
            "lattice at limit {} has {} elements (ceiling {DP_ELEMENT_CEILING})",
            lat.limit(),
            lat.len()
        )));
    }
    let masks = chains
        .iter()
        .map(|c| {
            let mut mask = 0u128;
            for (j, d) in chains.iter().enumerate() {
                if d.odd_part != c.odd_part && c.odd_part % d.odd_part == 0 {
                    mask |= 1u128 << j;
                }
            }
            mask
        })
        .collect();
    Ok(masks)
}

fn add_to(map: &mut HashMap<u128, BigUint>, key: u128, value: &BigUint) {
    map.entry(key)
        .and_modify(|v| *v += value)
        .or_insert_with(|| value.clone());
}

/// Counts maps assigning each chain an exponent in its window such that the
/// exponent strictly decreases whenever one odd part divides another. These
/// are exactly the maximum antichains (restricted to the windows).
///
/// The sweep tracks `D_t`, the set of chains whose exponent is at least `t`.
/// Valid successor sets sit between the strict divisors of `D_t` (plus the
/// chains whose window forces them higher) and `D_t` itself.
fn count_strict_maps(windows: &[(u32, u32)], sdiv: &[u128]) -> BigUint {
    let n = windows.len();
    if windows.iter().any(|&(lo, hi)| lo > hi) {
        return BigUint::zero();
    }
    let max_hi = windows.iter().map(|&(_, hi)| hi).max().unwrap_or(0);
    let full: u128 = if n == 128 { !0 } else { (1u128 << n) - 1 };

    let mut states: HashMap<u128, BigUint> = HashMap::new();
    states.insert(full, BigUint::one());
    let mut answer = BigUint::zero();

    for t in 0..=max_hi {
        let mut must = 0u128;
        let mut may = 0u128;
        for (c, &(lo, hi)) in windows.iter().enumerate() {
            if lo >= t + 1 {
                must |= 1 << c;
            }
            if hi >= t + 1 {
                may |= 1 << c;
            }
        }
        let mut next: HashMap<u128, BigUint> = HashMap::new();
        for (d, v) in &states {
            let mut sdown = 0u128;
            let mut rest = *d;
            while rest != 0 {
                let c = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                sdown |= sdiv[c];
            }
            let base = sdown | must;
            let cap = d & may;
            if base & !cap != 0 {
                continue;
            }
            let free = cap & !base;
            let mut sub = free;
            loop {
                let d2 = base | sub;
                if d2 == 0 {
                    answer += v;
                } else {
                    add_to(&mut next, d2, v);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
        }
        states = next;
        if states.is_empty() {
            break;
        }
    }
    answer
}

/// Counts down-sets of the poset of elements `odd*2^a` with `a` inside the
/// chain's window. By the antichain/down-set bijection this is the number of
/// antichains of the induced subposet.
///
/// The sweep goes from the top exponent level down; `S_t` is the slice of
/// chains whose level-`t` element is included. A slice must contain the
/// carried-down elements of the previous slice and be closed under taking
/// divisors among the chains active at the level.
fn count_down_sets(windows: &[(u32, u32)], sdiv: &[u128]) -> BigUint {
    let max_hi = windows
        .iter()
        .filter(|&&(lo, hi)| lo <= hi)
        .map(|&(_, hi)| hi)
        .max();
    let Some(max_hi) = max_hi else {
        return BigUint::one(); // empty poset: only the empty down-set
    };

    let mut states: HashMap<u128, BigUint> = HashMap::new();
    states.insert(0, BigUint::one());

    for t in (0..=max_hi).rev() {
        let mut active = 0u128;
        for (c, &(lo, hi)) in windows.iter().enumerate() {
            if lo <= t && t <= hi {
                active |= 1 << c;
            }
        }

        // bucket by carried slice first: many states share a carry; a chain
        // in the previous slice carries down exactly when its window covers
        // this level too, i.e. when it is still active
        let mut buckets: HashMap<u128, BigUint> = HashMap::new();
        for (s, v) in &states {
            add_to(&mut buckets, s & active, v);
        }

        let mut next: HashMap<u128, BigUint> = HashMap::new();
        for (carry, v) in &buckets {
            // divisors of carried elements are mandatory
            let mut required = 0u128;
            let mut rest = *carry;
            while rest != 0 {
                let c = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                required |= sdiv[c] & active;
            }
            let seed = carry | required;
            enumerate_closed_supersets(seed, active, sdiv, &mut |s| {
                add_to(&mut next, s, v);
            });
        }
        states = next;
    }
    states.values().sum()
}

/// Calls `emit` for every superset of `seed` within `active` that is closed
/// under taking strict divisors (restricted to `active`). Candidates are
/// visited in increasing odd-part order so each inclusion check is final.
fn enumerate_closed_supersets(
    seed: u128,
    active: u128,
    sdiv: &[u128],
    emit: &mut dyn FnMut(u128),
) {
    let mut candidates: Vec<usize> = Vec::new();
    let mut rest = active & !seed;
    while rest != 0 {
        let c = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        candidates.push(c);
    }
    fn rec(
        current: u128,
        idx: usize,
        candidates: &[usize],
        active: u128,
        sdiv: &[u128],
        emit: &mut dyn FnMut(u128),
    ) {
        if idx == candidates.len() {
            emit(current);
            return;
        }
        let c = candidates[idx];
        rec(current, idx + 1, candidates, active, sdiv, emit);
        if sdiv[c] & active & !current == 0 {
            rec(current | (1 << c), idx + 1, candidates, active, sdiv, emit);
        }
    }
    rec(seed, 0, &candidates, active, sdiv, emit);
}

fn validate_limit(lat: &SmoothLattice, i: u64) -> Result<()> {
    if i != lat.limit() {
        return Err(Error::invalid(format!(
            "truncated count needs i = lattice limit, got i = {i} for limit {}",
            lat.limit()
        )));
    }
    Ok(())
}

/// `R(i)`: the number of antichains of the lattice, including the empty one.
pub fn count_all_antichains(lat: &SmoothLattice) -> Result<BigUint> {
    let sdiv = strict_divisor_masks(lat)?;
    Ok(count_down_sets(&chain_windows(lat, false), &sdiv))
}

/// `R'(i)`: antichains whose elements `m` all satisfy `m*q > i`.
pub fn count_truncated_antichains(lat: &SmoothLattice, i: u64) -> Result<BigUint> {
    validate_limit(lat, i)?;
    let sdiv = strict_divisor_masks(lat)?;
    Ok(count_down_sets(&chain_windows(lat, true), &sdiv))
}

/// `r(i)`: the number of antichains of maximum size.
pub fn count_max_antichains(lat: &SmoothLattice) -> Result<BigUint> {
    let sdiv = strict_divisor_masks(lat)?;
    Ok(count_strict_maps(&chain_windows(lat, false), &sdiv))
}

/// `r'(i)`: antichains of maximum size (the lattice's own maximum, not the
/// truncated subposet's) whose elements all satisfy `m*q > i`.
pub fn count_truncated_max_antichains(lat: &SmoothLattice, i: u64) -> Result<BigUint> {
    validate_limit(lat, i)?;
    let sdiv = strict_divisor_masks(lat)?;
    Ok(count_strict_maps(&chain_windows(lat, true), &sdiv))
}

/// Computes one count by the requested DP.
pub fn count(lat: &SmoothLattice, kind: CountKind) -> Result<BigUint> {
    match kind {
        CountKind::MaxAll => count_max_antichains(lat),
        CountKind::MaxTruncated => count_truncated_max_antichains(lat, lat.limit()),
        CountKind::AllAll => count_all_antichains(lat),
        CountKind::AllTruncated => count_truncated_antichains(lat, lat.limit()),
    }
}

/// Validation oracle: enumerates all `2^|elements|` subsets and tests the
/// antichain, size, and threshold predicates directly.
pub fn brute_force_count(lat: &SmoothLattice, kind: CountKind, i: u64) -> Result<BigUint> {
    if lat.len() > BRUTE_FORCE_CEILING {
        return Err(Error::ResourceCeiling(format!(
            "brute force capped at {BRUTE_FORCE_CEILING} elements, lattice has {}",
            lat.len()
        )));
    }
    if kind.is_truncated() {
        validate_limit(lat, i)?;
    }
    let elems = lat.elements();
    let n = elems.len();
    let comparable: Vec<u32> = (0..n)
        .map(|j| {
            let mut mask = 0u32;
            for k in 0..n {
                if k != j && (elems[j] % elems[k] == 0 || elems[k] % elems[j] == 0) {
                    mask |= 1 << k;
                }
            }
            mask
        })
        .collect();
    let allowed: u32 = if kind.is_truncated() {
        let q = lat.basis().q() as u128;
        (0..n)
            .filter(|&j| (elems[j] as u128) * q > i as u128)
            .map(|j| 1u32 << j)
            .sum()
    } else if n == 32 {
        !0
    } else {
        (1u32 << n) - 1
    };
    let target = crate::lattice::max_antichain_size(lat) as u32;

    let mut total = BigUint::zero();
    for mask in 0u32..(1u32 << n) {
        if mask & !allowed != 0 {
            continue;
        }
        if kind.is_max() && mask.count_ones() != target {
            continue;
        }
        let mut rest = mask;
        let mut ok = true;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if comparable[j] & mask != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            total += 1u32;
        }
    }
    Ok(total)
}

/// Builds the piecewise-constant table of a count family over `[1, K]`,
/// evaluating the DP once per breakpoint segment. Segments are computed in
/// parallel; the assembled table does not depend on scheduling.
pub fn build_table(basis: &PrimeBasis, kind: CountKind, k: u64) -> Result<CountTable> {
    let parts = breakpoints(basis, k)?;
    let rows: Result<Vec<CountRow>> = parts
        .segments()
        .par_iter()
        .map(|&(i_lo, i_hi)| {
            let lat = generate_lattice(basis, i_lo)?;
            let count = count(&lat, kind)?;
            Ok(CountRow { i_lo, i_hi, count })
        })
        .collect();
    CountTable::new(basis.clone(), kind, k, rows?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::first_primes;

    fn lat(l: usize, x: u64) -> SmoothLattice {
        generate_lattice(&first_primes(l), x).unwrap()
    }

    fn as_u64(v: BigUint) -> u64 {
        use num_traits::ToPrimitive;
        v.to_u64().unwrap()
    }

    #[test]
    fn all_antichains_examples() {
        assert_eq!(as_u64(count_all_antichains(&lat(1, 8)).unwrap()), 5);
        assert_eq!(as_u64(count_all_antichains(&lat(2, 6)).unwrap()), 9);
        assert_eq!(as_u64(count_all_antichains(&lat(0, 7)).unwrap()), 2);
    }

    #[test]
    fn truncated_antichains_examples() {
        assert_eq!(as_u64(count_truncated_antichains(&lat(2, 6), 6).unwrap()), 8);
        assert_eq!(as_u64(count_truncated_antichains(&lat(1, 1), 1).unwrap()), 2);
        let m2_12 = lat(2, 12);
        let dp = count_truncated_antichains(&m2_12, 12).unwrap();
        let brute = brute_force_count(&m2_12, CountKind::AllTruncated, 12).unwrap();
        assert_eq!(dp, brute);
        assert!(count_truncated_antichains(&m2_12, 11).is_err());
    }

    #[test]
    fn max_antichains_examples() {
        for i in 1..=32 {
            let m1 = lat(1, i);
            assert_eq!(
                count_max_antichains(&m1).unwrap(),
                BigUint::from(m1.len()),
                "r_1({i})"
            );
        }
        assert_eq!(as_u64(count_max_antichains(&lat(2, 6)).unwrap()), 3);
        assert_eq!(as_u64(count_max_antichains(&lat(0, 9)).unwrap()), 1);
    }

    #[test]
    fn truncated_max_antichains_examples() {
        assert_eq!(
            as_u64(count_truncated_max_antichains(&lat(2, 6), 6).unwrap()),
            3
        );
        assert_eq!(
            as_u64(count_truncated_max_antichains(&lat(1, 3), 3).unwrap()),
            1
        );
        assert_eq!(
            as_u64(count_truncated_max_antichains(&lat(1, 2), 2).unwrap()),
            2
        );
    }

    #[test]
    fn brute_force_matches_spec_examples() {
        assert_eq!(
            as_u64(brute_force_count(&lat(2, 6), CountKind::AllAll, 6).unwrap()),
            9
        );
        assert_eq!(
            as_u64(brute_force_count(&lat(2, 6), CountKind::MaxTruncated, 6).unwrap()),
            3
        );
        assert_eq!(
            as_u64(brute_force_count(&lat(1, 8), CountKind::AllAll, 8).unwrap()),
            5
        );
    }

    #[test]
    fn brute_force_rejects_large_lattices() {
        let big = lat(3, 60); // 26 elements
        assert_eq!(big.len(), 26);
        assert!(brute_force_count(&big, CountKind::AllAll, 60).is_err());
    }

    #[test]
    fn dp_equals_brute_force_on_small_lattices() {
        for l in 0..=3 {
            for i in 1..=40 {
                let lattice = lat(l, i);
                if lattice.len() > BRUTE_FORCE_CEILING {
                    continue;
                }
                for kind in [
                    CountKind::MaxAll,
                    CountKind::MaxTruncated,
                    CountKind::AllAll,
                    CountKind::AllTruncated,
                ] {
                    let dp = count(&lattice, kind).unwrap();
                    let brute = brute_force_count(&lattice, kind, i).unwrap();
                    assert_eq!(dp, brute, "l={l} i={i} kind={kind:?}");
                }
            }
        }
    }

    #[test]
    fn table_l1_max_all_k8() {
        let table = build_table(&first_primes(1), CountKind::MaxAll, 8).unwrap();
        let per_i: Vec<u64> = (1..=8).map(|i| as_u64(table.lookup(i).unwrap().clone())).collect();
        assert_eq!(per_i, vec![1, 2, 2, 3, 3, 3, 3, 4]);
    }

    #[test]
    fn table_l0_all_truncated_k3() {
        let table = build_table(&first_primes(0), CountKind::AllTruncated, 3).unwrap();
        assert_eq!(as_u64(table.lookup(1).unwrap().clone()), 2);
        assert_eq!(as_u64(table.lookup(2).unwrap().clone()), 1);
        assert_eq!(as_u64(table.lookup(3).unwrap().clone()), 1);
    }

    #[test]
    fn table_l2_max_truncated_k6() {
        let table = build_table(&first_primes(2), CountKind::MaxTruncated, 6).unwrap();
        assert_eq!(as_u64(table.lookup(6).unwrap().clone()), 3);
    }

    #[test]
    fn table_lookup_rejects_out_of_range() {
        let table = build_table(&first_primes(1), CountKind::MaxAll, 8).unwrap();
        assert!(table.lookup(0).is_err());
        assert!(table.lookup(9).is_err());
    }

    #[test]
    fn truncate_keeps_counts() {
        let table = build_table(&first_primes(2), CountKind::AllAll, 50).unwrap();
        let cut = table.truncate(17).unwrap();
        for i in 1..=17 {
            assert_eq!(table.lookup(i).unwrap(), cut.lookup(i).unwrap());
        }
        assert_eq!(cut.k(), 17);
    }

    #[test]
    fn chain_closed_forms() {
        let basis = first_primes(1);
        for i in (1..200).chain([999, 4096, 9999]) {
            let m1 = lat(1, i);
            let size = BigUint::from(m1.len());
            assert_eq!(count_max_antichains(&m1).unwrap(), size);
            assert_eq!(count_all_antichains(&m1).unwrap(), size + 1u32);
        }
        let _ = basis;
    }
}
