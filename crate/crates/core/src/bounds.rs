//! The bound formulas for the two growth constants.
//!
//! Both targets follow the same scheme. Partition the ambient interval into
//! divisor lattices `L_l(t)`, group the lattice shapes by the index
//! `i = floor(2n/t)` (resp. `n/t`), and multiply one antichain count per
//! shape, raised to the density of `t` values producing that shape. The
//! density of indices in `[a, b]` telescopes to `1/a - 1/(b+1)` times an
//! exact rational prefactor, so a product over `K` up to 10^9 collapses to
//! one term per breakpoint segment.
//!
//! Flavors:
//! - `basic_lower`: truncated counts only, one prime set of size `l`.
//! - `basic_upper`: untruncated counts plus the `2^eta` correction for
//!   left-over elements.
//! - `crude_upper_alpha`: truncated counts, truncated `eta'`, and the
//!   `2^((s+2)/2^s)` chain-completion factor with `s = floor(log2 q)`.
//! - `improved_lower`: the staged decomposition over `l = S..1` (plus the
//!   `l = 0` step for the all-primitive target) with exact rational weights
//!   from [`crate::weights`].
//! - `improved_upper`: the staged merge starting from the trivial bound,
//!   multiplying ratio factors `r_l(i) / (r_{l-1}(i) * r_l(i/p_l))`, each of
//!   which is at most 1; a ratio above 1 means a counting bug and is a hard
//!   failure.
//!
//! All products are accumulated as sums of logarithms in double-double
//! precision, in ascending `(step, segment)` order, so reports are
//! bit-identical across runs and worker counts.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::counting::{build_table, CountKind, CountTable};
use crate::dd::{ln_biguint, Dd, LogAccumulator, LN_2};
use crate::lattice::{size_rows, telescoped_weight_sum};
use crate::primes::{first_primes, PrimeBasis};
use crate::weights;
use crate::{Error, Result};

/// Which growth constant is being bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTarget {
    /// `alpha`: maximum-size primitive subsets of `[2n]`.
    Alpha,
    /// `beta`: all primitive subsets of `[n]`.
    Beta,
}

impl BoundTarget {
    /// The interval-density lead constant: 2 for `[2n]`, 1 for `[n]`.
    pub fn lead(self) -> u64 {
        match self {
            BoundTarget::Alpha => 2,
            BoundTarget::Beta => 1,
        }
    }

    /// Count family for lower bounds (truncated).
    pub fn truncated_kind(self) -> CountKind {
        match self {
            BoundTarget::Alpha => CountKind::MaxTruncated,
            BoundTarget::Beta => CountKind::AllTruncated,
        }
    }

    /// Count family for upper bounds (untruncated).
    pub fn untruncated_kind(self) -> CountKind {
        match self {
            BoundTarget::Alpha => CountKind::MaxAll,
            BoundTarget::Beta => CountKind::AllAll,
        }
    }

    /// Log of the trivial upper bound the staged merge starts from:
    /// `4` for alpha, `2` for beta.
    fn trivial_upper_log(self) -> Dd {
        match self {
            BoundTarget::Alpha => LN_2.mul_i64(2),
            BoundTarget::Beta => LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundTarget::Alpha => "alpha",
            BoundTarget::Beta => "beta",
        }
    }
}

/// Which bound formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFlavor {
    BasicLower,
    BasicUpper,
    CrudeUpper,
    ImprovedLower,
    ImprovedUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Lower,
    Upper,
}

/// Echo of the evaluated configuration, embedded in reports.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BoundConfig {
    pub target: BoundTarget,
    pub flavor: BoundFlavor,
    /// Prime count for basic flavors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Index range for basic flavors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// `K_1..K_S` for improved flavors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<u64>>,
    /// Whether the `l = 0` step is included (beta improved lower).
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub include_step0: bool,
}

/// One multiplicative step of a bound, as a log contribution.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StepContribution {
    pub label: String,
    pub log_value: f64,
}

/// Provenance of a count table consumed by a bound.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TableRef {
    pub l: usize,
    pub kind: CountKind,
    pub k: u64,
}

/// A computed bound with per-step contributions and table provenance.
///
/// Values are numerical, not certified-rounded: coefficients are exact
/// rationals and the log sum is double-double, but each `ln` of a count
/// carries about one ulp of f64 error.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundReport {
    pub config: BoundConfig,
    /// Decimal string with 12 significant digits; `exp(log_bound)`.
    pub bound: String,
    pub log_bound: f64,
    /// Low word of the double-double log value.
    pub log_compensation: f64,
    pub direction: Direction,
    pub step_contributions: Vec<StepContribution>,
    pub tables_used: Vec<TableRef>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn bound_f64(&self) -> f64 {
        Dd::new(self.log_bound, self.log_compensation).exp_f64()
    }
}

/// Formats with the given number of significant decimal digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Supplies count tables to the bound evaluators; implementations may cache.
pub trait TableSource: Sync {
    fn table(&self, l: usize, kind: CountKind, k: u64) -> Result<Arc<CountTable>>;
}

/// Plain table source that recomputes on every request.
pub struct ComputeTables;

impl TableSource for ComputeTables {
    fn table(&self, l: usize, kind: CountKind, k: u64) -> Result<Arc<CountTable>> {
        Ok(Arc::new(build_table(&first_primes(l), kind, k)?))
    }
}

fn rational_u64(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_table(table: &CountTable, basis: &PrimeBasis, kind: CountKind, k: u64) -> Result<()> {
    if table.kind() != kind {
        return Err(Error::TableMismatch(format!(
            "need a {} table, got {}",
            kind.name(),
            table.kind().name()
        )));
    }
    if table.basis() != basis {
        return Err(Error::TableMismatch(format!(
            "table basis has l = {}, expected l = {}",
            table.basis().l(),
            basis.l()
        )));
    }
    if table.k() < k {
        return Err(Error::TableMismatch(format!(
            "table covers [1, {}] but K = {k} requested",
            table.k()
        )));
    }
    Ok(())
}

/// Iterates table rows clipped to `[lo, hi]`.
fn clipped_rows<'t>(
    table: &'t CountTable,
    lo: u64,
    hi: u64,
) -> impl Iterator<Item = (u64, u64, &'t num_bigint::BigUint)> {
    table
        .rows()
        .iter()
        .filter(move |row| row.i_hi >= lo && row.i_lo <= hi)
        .map(move |row| (row.i_lo.max(lo), row.i_hi.min(hi), &row.count))
}

/// `sum over [1, k] of lead * density_l / (i(i+1)) * ln count(i)`: the log of
/// `c'_{l,K}` (truncated table) or of the product part of `c_{l,K}`.
fn log_count_product(lead: u64, basis: &PrimeBasis, table: &CountTable, k: u64) -> Result<Dd> {
    let density = rational_u64(lead) * weights::odd_density(basis.primes(), basis.l());
    let mut acc = LogAccumulator::new();
    for (a, b, count) in clipped_rows(table, 1, k) {
        if count.is_zero() {
            return Err(Error::invalid(format!(
                "count is zero at i = {a}; the product degenerates to zero \
                 (truncated max counts vanish for l = 0 beyond i = 1)"
            )));
        }
        if count.is_one() {
            continue;
        }
        let coefficient = &density * telescoped_weight_sum(a, b);
        acc.add_scaled(&coefficient, ln_biguint(count));
    }
    Ok(acc.value())
}

/// Which of the two left-over corrections to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaVariant {
    /// `eta_{l,K}`: counts all lattice elements as left-over-covered.
    Untruncated,
    /// `eta'_{l,K}`: counts only elements above the cut, and starts from
    /// `lead * (1 - 1/q)`.
    Truncated,
}

/// The left-over correction exponent, as an exact rational.
///
/// `eta = lead - sum_{i<=K} lead/(i(i+1)) * density * |M(i)|` for the
/// untruncated variant; the truncated variant starts from
/// `lead * (1 - 1/q)` and counts `|M(i)| - |M(i/q)|` per index.
pub fn eta(target: BoundTarget, basis: &PrimeBasis, k: u64, variant: EtaVariant) -> Result<BigRational> {
    let lead = rational_u64(target.lead());
    let density = weights::odd_density(basis.primes(), basis.l());
    let mut sum = BigRational::zero();
    for &(a, b, size, trunc_size) in size_rows(basis, k)?.iter() {
        let covered = match variant {
            EtaVariant::Untruncated => size,
            EtaVariant::Truncated => trunc_size,
        };
        sum += telescoped_weight_sum(a, b) * rational_u64(covered);
    }
    let head = match variant {
        EtaVariant::Untruncated => lead.clone(),
        EtaVariant::Truncated => {
            &lead * (BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(basis.q())))
        }
    };
    Ok(head - lead * density * sum)
}

fn config_basic(target: BoundTarget, flavor: BoundFlavor, l: usize, k: u64) -> BoundConfig {
    BoundConfig {
        target,
        flavor,
        l: Some(l),
        k: Some(k),
        ks: None,
        include_step0: false,
    }
}

fn make_report(
    config: BoundConfig,
    direction: Direction,
    log: Dd,
    steps: Vec<StepContribution>,
    tables: Vec<TableRef>,
    notes: Vec<String>,
) -> BoundReport {
    BoundReport {
        config,
        bound: format_significant(log.exp_f64(), 12),
        log_bound: log.hi(),
        log_compensation: log.lo(),
        direction: Direction::from(direction),
        step_contributions: steps,
        tables_used: tables,
        notes,
    }
}

/// `c'_{l,K}`: the basic lower bound from truncated counts.
pub fn basic_lower(
    target: BoundTarget,
    basis: &PrimeBasis,
    k: u64,
    table: &CountTable,
) -> Result<BoundReport> {
    check_table(table, basis, target.truncated_kind(), k)?;
    let log = log_count_product(target.lead(), basis, table, k)?;
    Ok(make_report(
        config_basic(target, BoundFlavor::BasicLower, basis.l(), k),
        Direction::Lower,
        log,
        vec![StepContribution {
            label: "truncated_product".into(),
            log_value: log.to_f64(),
        }],
        vec![TableRef {
            l: basis.l(),
            kind: table.kind(),
            k,
        }],
        Vec::new(),
    ))
}

/// `c_{l,K} * 2^{eta_{l,K}}`: the basic upper bound from untruncated counts
/// plus the left-over correction.
pub fn basic_upper(
    target: BoundTarget,
    basis: &PrimeBasis,
    k: u64,
    table: &CountTable,
) -> Result<BoundReport> {
    check_table(table, basis, target.untruncated_kind(), k)?;
    let product = log_count_product(target.lead(), basis, table, k)?;
    let eta_value = eta(target, basis, k, EtaVariant::Untruncated)?;
    if eta_value.is_negative() {
        return Err(Error::InvariantViolation(format!(
            "eta_{{{},{k}}} is negative: {eta_value}",
            basis.l()
        )));
    }
    let eta_log = Dd::from_rational(&eta_value).mul(LN_2);
    let log = product.add(eta_log);
    Ok(make_report(
        config_basic(target, BoundFlavor::BasicUpper, basis.l(), k),
        Direction::Upper,
        log,
        vec![
            StepContribution {
                label: "count_product".into(),
                log_value: product.to_f64(),
            },
            StepContribution {
                label: "eta_correction".into(),
                log_value: eta_log.to_f64(),
            },
        ],
        vec![TableRef {
            l: basis.l(),
            kind: table.kind(),
            k,
        }],
        Vec::new(),
    ))
}

/// `c'_{l,K} * 2^{eta'_{l,K}} * 2^{(s+2)/2^s}` with `s = floor(log2 q)`:
/// the crude upper bound for alpha obtained by completing truncated
/// primitive sets to full ones.
pub fn crude_upper_alpha(basis: &PrimeBasis, k: u64, table: &CountTable) -> Result<BoundReport> {
    let target = BoundTarget::Alpha;
    check_table(table, basis, target.truncated_kind(), k)?;
    let product = log_count_product(target.lead(), basis, table, k)?;
    let eta_value = eta(target, basis, k, EtaVariant::Truncated)?;
    let eta_log = Dd::from_rational(&eta_value).mul(LN_2);
    let s = basis.q().ilog2() as u64;
    let chain_exp = BigRational::new(BigInt::from(s + 2), BigInt::from(1u64 << s));
    let chain_log = Dd::from_rational(&chain_exp).mul(LN_2);
    let log = product.add(eta_log).add(chain_log);
    Ok(make_report(
        config_basic(target, BoundFlavor::CrudeUpper, basis.l(), k),
        Direction::Upper,
        log,
        vec![
            StepContribution {
                label: "truncated_product".into(),
                log_value: product.to_f64(),
            },
            StepContribution {
                label: "eta_correction".into(),
                log_value: eta_log.to_f64(),
            },
            StepContribution {
                label: "chain_completion".into(),
                log_value: chain_log.to_f64(),
            },
        ],
        vec![TableRef {
            l: basis.l(),
            kind: table.kind(),
            k,
        }],
        Vec::new(),
    ))
}

/// The parameter schedule reaching a `(1 + eps)` multiplicative error:
/// `l = ceil(10 ln(1/eps) / eps)` and `K = l^(10 l ln ln l)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpsilonSchedule {
    pub eps: f64,
    pub l: u64,
    pub k: KSchedule,
}

/// `K(l)` grows super-exponentially and overflows any practical range
/// almost immediately; the schedule reports the magnitude instead of
/// computing it when it does.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KSchedule {
    Exact(u64),
    Overflow { log2: f64 },
}

pub fn epsilon_schedule(eps: f64) -> Result<EpsilonSchedule> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon must lie strictly between 0 and 1, got {eps}"
        )));
    }
    let l = (10.0 * (1.0 / eps).ln() / eps).ceil() as u64;
    let k = if l <= 2 {
        // ln ln l is zero or undefined; the schedule bottoms out at K = 1
        KSchedule::Exact(1)
    } else {
        let exponent = 10.0 * l as f64 * (l as f64).ln().ln();
        let log2 = exponent * (l as f64).log2();
        if log2 > 62.0 {
            KSchedule::Overflow { log2 }
        } else {
            KSchedule::Exact(2f64.powf(log2).ceil() as u64)
        }
    };
    Ok(EpsilonSchedule { eps, l, k })
}

/// The staged lower bound `prod_l lambda_l(K)`.
///
/// `lambda_S` is the basic truncated product at `(S, K_S)`; each earlier
/// step multiplies truncated counts raised to the exact weights of
/// [`crate::weights`]. For the beta target the `l = 0` step contributes
/// `2^{w(0,1)}`. Weight profiles are piecewise constant between their own
/// split points, so segments are subdivided accordingly and telescoped.
pub fn improved_lower(
    target: BoundTarget,
    ks: &[u64],
    include_step0: bool,
    source: &dyn TableSource,
) -> Result<BoundReport> {
    let s = ks.len();
    if s == 0 {
        return Err(Error::invalid("improved bounds need at least one K"));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::invalid("all K values must be positive"));
    }
    let primes_s = first_primes(s);
    let primes = primes_s.primes();
    let monotone = weights::ks_non_increasing(ks);
    let mut notes = Vec::new();
    if !monotone {
        notes.push(
            "K vector is not non-increasing; weights use the general nested-sum form".into(),
        );
    }

    let kind = target.truncated_kind();
    let mut steps = Vec::new();
    let mut tables = Vec::new();
    let mut total = Dd::ZERO;

    let step0 = include_step0 && target == BoundTarget::Beta;
    if include_step0 && target == BoundTarget::Alpha {
        notes.push("step 0 contributes a factor of exactly 1 for alpha; skipped".into());
    }
    let first_step = if step0 { 0 } else { 1 };

    for l in first_step..=s {
        let k_l = ks[l.max(1) - 1]; // step 0 ranges over [1, K_1]
        let basis_l = first_primes(l);
        let table = source.table(l, kind, k_l)?;
        check_table(&table, &basis_l, kind, k_l)?;
        tables.push(TableRef { l, kind, k: k_l });

        let log_step = if l == s {
            log_count_product(target.lead(), &basis_l, &table, k_l)?
        } else {
            log_weighted_product(target.lead(), primes, ks, l, &table, k_l, monotone)?
        };
        steps.push(StepContribution {
            label: format!("lambda_{l}"),
            log_value: log_step.to_f64(),
        });
        total = total.add(log_step);
    }

    Ok(make_report(
        BoundConfig {
            target,
            flavor: BoundFlavor::ImprovedLower,
            l: None,
            k: None,
            ks: Some(ks.to_vec()),
            include_step0: step0,
        },
        Direction::Lower,
        total,
        steps,
        tables,
        notes,
    ))
}

/// `log lambda_l` for an intermediate step: truncated counts raised to
/// `w(l, i)` over `[1, K_l]`.
fn log_weighted_product(
    lead: u64,
    primes: &[u64],
    ks: &[u64],
    l: usize,
    table: &CountTable,
    k_l: u64,
    monotone: bool,
) -> Result<Dd> {
    let splits = if monotone {
        weights::split_points_single_sum(primes, ks, l)
    } else {
        weights::split_points_nested(primes, ks, l)
    };
    let mut acc = LogAccumulator::new();
    for (row_lo, row_hi, count) in clipped_rows(table, 1, k_l) {
        if count.is_zero() {
            return Err(Error::invalid(format!(
                "count is zero at i = {row_lo}; the product degenerates to zero"
            )));
        }
        if count.is_one() {
            continue;
        }
        let ln_count = ln_biguint(count);
        // subdivide the row at weight split points
        let mut a = row_lo;
        let inner = splits
            .iter()
            .copied()
            .filter(|&t| t > row_lo && t <= row_hi)
            .chain(std::iter::once(row_hi + 1));
        for t in inner {
            let b = t - 1;
            if a > b {
                a = t;
                continue;
            }
            let profile = if monotone {
                weights::weight_profile_single_sum(lead, primes, ks, l, a)?
            } else {
                weights::weight_profile_nested(lead, primes, ks, l, a)?
            };
            if !profile.is_zero() {
                let coefficient = profile * telescoped_weight_sum(a, b);
                acc.add_scaled(&coefficient, ln_count);
            }
            a = t;
        }
    }
    Ok(acc.value())
}

/// The staged merge upper bound.
///
/// Starts from the trivial bound (4 for alpha, 2 for beta) and multiplies
/// the per-merge ratio factors. For alpha the first step replaces crude
/// per-element freedom with chain counts, contributing
/// `(|M_1(i)| / 2^{|M_1(i)|})^{1/(i(i+1))}`; later steps contribute
/// `(r_l(i) / (r_{l-1}(i) r_l(i/p_l)))` raised to the coprime density of
/// the merged chains. Every ratio must be at most 1; anything larger is a
/// counting bug and fails hard.
pub fn improved_upper(
    target: BoundTarget,
    ks: &[u64],
    source: &dyn TableSource,
) -> Result<BoundReport> {
    let s = ks.len();
    if s == 0 {
        return Err(Error::invalid("improved bounds need at least one K"));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::invalid("all K values must be positive"));
    }
    if !weights::ks_non_increasing(ks) {
        return Err(Error::invalid(
            "the staged merge requires a non-increasing K vector",
        ));
    }
    let primes_s = first_primes(s);
    let primes = primes_s.primes();
    let kind = target.untruncated_kind();

    let mut steps = Vec::new();
    let mut tables = Vec::new();
    let mut total = target.trivial_upper_log();
    steps.push(StepContribution {
        label: "trivial_bound".into(),
        log_value: total.to_f64(),
    });

    for l in 1..=s {
        let k_l = ks[l - 1];
        let p_l = primes[l - 1];
        let log_step = if target == BoundTarget::Alpha && l == 1 {
            let table = source.table(1, kind, k_l)?;
            check_table(&table, &first_primes(1), kind, k_l)?;
            tables.push(TableRef { l: 1, kind, k: k_l });
            log_alpha_first_merge(&table, k_l)?
        } else {
            let table_l = source.table(l, kind, k_l)?;
            let table_prev = source.table(l - 1, kind, k_l)?;
            check_table(&table_l, &first_primes(l), kind, k_l)?;
            check_table(&table_prev, &first_primes(l - 1), kind, k_l)?;
            tables.push(TableRef { l, kind, k: k_l });
            tables.push(TableRef { l: l - 1, kind, k: k_l });
            log_merge_step(target, primes, l, p_l, k_l, &table_l, &table_prev)?
        };
        steps.push(StepContribution {
            label: format!("merge_step_{l}"),
            log_value: log_step.to_f64(),
        });
        total = total.add(log_step);
    }

    Ok(make_report(
        BoundConfig {
            target,
            flavor: BoundFlavor::ImprovedUpper,
            l: None,
            k: None,
            ks: Some(ks.to_vec()),
            include_step0: false,
        },
        Direction::Upper,
        total,
        steps,
        tables,
        Vec::new(),
    ))
}

/// Alpha step 1: `sum over i in [2, K_1] of (ln|M_1(i)| - |M_1(i)| ln 2) / (i(i+1))`.
fn log_alpha_first_merge(table: &CountTable, k: u64) -> Result<Dd> {
    let mut acc = LogAccumulator::new();
    for (a, b, count) in clipped_rows(table, 2, k) {
        let size = count
            .to_i64()
            .ok_or_else(|| Error::InvariantViolation("chain count outside i64".into()))?;
        let ln_factor = ln_biguint(count).sub(LN_2.mul_i64(size));
        let coefficient = telescoped_weight_sum(a, b);
        acc.add_scaled(&coefficient, ln_factor);
    }
    Ok(acc.value())
}

/// Merge step `l`: ratio factors over `i in [p_l, K_l]`, subdivided so that
/// all three table lookups are constant per atom.
fn log_merge_step(
    target: BoundTarget,
    primes: &[u64],
    l: usize,
    p_l: u64,
    k_l: u64,
    table_l: &CountTable,
    table_prev: &CountTable,
) -> Result<Dd> {
    if k_l < p_l {
        return Ok(Dd::ZERO); // empty index range
    }
    let density = rational_u64(target.lead()) * weights::odd_density(primes, l - 1);

    // atom boundaries: rows of both tables plus points where floor(i/p_l)
    // crosses a row of table_l
    let mut bounds: Vec<u64> = Vec::new();
    for row in table_l.rows() {
        bounds.push(row.i_lo);
        if let Some(scaled) = row.i_lo.checked_mul(p_l) {
            bounds.push(scaled);
        }
    }
    for row in table_prev.rows() {
        bounds.push(row.i_lo);
    }
    bounds.retain(|&t| t >= p_l && t <= k_l);
    bounds.push(p_l);
    bounds.sort_unstable();
    bounds.dedup();

    let mut acc = LogAccumulator::new();
    for (idx, &a) in bounds.iter().enumerate() {
        let b = bounds.get(idx + 1).map_or(k_l, |next| next - 1);
        let merged = table_l.lookup(a)?;
        let left = table_prev.lookup(a)?;
        let right = table_l.lookup(a / p_l)?;
        let split_product = left * right;
        if *merged > split_product {
            return Err(Error::InvariantViolation(format!(
                "merge ratio exceeds 1 at l = {l}, i = {a}: {merged} > {left} * {right}"
            )));
        }
        if *merged != split_product {
            let ln_ratio = ln_biguint(merged).sub(ln_biguint(&split_product));
            let coefficient = &density * telescoped_weight_sum(a, b);
            acc.add_scaled(&coefficient, ln_ratio);
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::build_table;

    fn table(l: usize, kind: CountKind, k: u64) -> CountTable {
        build_table(&first_primes(l), kind, k).unwrap()
    }

    #[test]
    fn basic_lower_alpha_l1_k2() {
        let basis = first_primes(1);
        let t = table(1, CountKind::MaxTruncated, 2);
        let report = basic_lower(BoundTarget::Alpha, &basis, 2, &t).unwrap();
        // 1^(1/2) * 2^(1/6)
        let expect = (std::f64::consts::LN_2 / 6.0).exp();
        assert!((report.bound_f64() - expect).abs() < 1e-12);
        assert!((report.bound_f64() - 1.122462).abs() < 1e-6);
    }

    #[test]
    fn eta_monotone_in_k() {
        let basis = first_primes(2);
        let mut prev = eta(BoundTarget::Alpha, &basis, 1, EtaVariant::Untruncated).unwrap();
        for k in 2..=40 {
            let next = eta(BoundTarget::Alpha, &basis, k, EtaVariant::Untruncated).unwrap();
            assert!(next <= prev, "eta increased at K = {k}");
            prev = next;
        }
    }

    #[test]
    fn eta_matches_term_by_term() {
        use crate::lattice::smooth_values;
        let basis = first_primes(2);
        let k = 10;
        for (variant, head) in [
            (EtaVariant::Untruncated, rational_u64(2)),
            (
                EtaVariant::Truncated,
                rational_u64(2) * BigRational::new(BigInt::from(4), BigInt::from(5)),
            ),
        ] {
            let grouped = eta(BoundTarget::Alpha, &basis, k, variant).unwrap();
            let density = weights::odd_density(basis.primes(), 2);
            let mut by_term = head;
            for i in 1..=k {
                let values = smooth_values(&basis, i);
                let covered = match variant {
                    EtaVariant::Untruncated => values.len() as u64,
                    EtaVariant::Truncated => {
                        values.iter().filter(|&&m| m * basis.q() > i).count() as u64
                    }
                };
                by_term -= rational_u64(2)
                    * BigRational::new(BigInt::one(), BigInt::from(i) * BigInt::from(i + 1))
                    * &density
                    * rational_u64(covered);
            }
            assert_eq!(grouped, by_term, "{variant:?}");
        }
    }

    #[test]
    fn crude_upper_chain_factor_exponents() {
        // l = 2 gives q = 5, s = 2, factor 2^(4/4) = 2; l = 5 gives q = 13,
        // s = 3, factor 2^(5/8)
        assert_eq!(first_primes(2).q().ilog2(), 2);
        assert_eq!(first_primes(5).q().ilog2(), 3);
        let basis = first_primes(2);
        let t = table(2, CountKind::MaxTruncated, 50);
        let crude = crude_upper_alpha(&basis, 50, &t).unwrap();
        let lower = basic_lower(BoundTarget::Alpha, &basis, 50, &t).unwrap();
        assert!(crude.bound_f64() >= lower.bound_f64());
    }

    #[test]
    fn basic_upper_at_least_basic_lower() {
        for target in [BoundTarget::Alpha, BoundTarget::Beta] {
            let basis = first_primes(2);
            let lower_table = table(2, target.truncated_kind(), 200);
            let upper_table = table(2, target.untruncated_kind(), 200);
            let lo = basic_lower(target, &basis, 200, &lower_table).unwrap();
            let hi = basic_upper(target, &basis, 200, &upper_table).unwrap();
            assert!(lo.bound_f64() <= hi.bound_f64(), "{target:?}");
        }
    }

    #[test]
    fn epsilon_schedule_examples() {
        let s = epsilon_schedule(0.5).unwrap();
        assert_eq!(s.l, 14);
        assert!(matches!(s.k, KSchedule::Overflow { .. }));

        let s = epsilon_schedule(0.999_999).unwrap();
        assert_eq!(s.l, 1);
        assert!(matches!(s.k, KSchedule::Exact(1)));

        let s = epsilon_schedule(1e-3).unwrap();
        assert!(matches!(s.k, KSchedule::Overflow { .. }));

        assert!(epsilon_schedule(0.0).is_err());
        assert!(epsilon_schedule(1.0).is_err());
    }

    #[test]
    fn improved_lower_degenerates_to_basic() {
        let k = 500u64;
        let basis = first_primes(1);
        let t = table(1, CountKind::MaxTruncated, k);
        let basic = basic_lower(BoundTarget::Alpha, &basis, k, &t).unwrap();
        let improved = improved_lower(BoundTarget::Alpha, &[k], false, &ComputeTables).unwrap();
        assert!(
            (basic.log_bound - improved.log_bound).abs() < 1e-12,
            "degeneracy: {} vs {}",
            basic.log_bound,
            improved.log_bound
        );
    }

    #[test]
    fn improved_beta_upper_s1_k4_closed_form() {
        let report = improved_upper(BoundTarget::Beta, &[4], &ComputeTables).unwrap();
        // 2 * (3/4)^(1/6) * (3/4)^(1/12) * (4/6)^(1/20)
        let expect = 2f64.ln()
            + (0.75f64).ln() * (1.0 / 6.0 + 1.0 / 12.0)
            + (4f64 / 6.0).ln() / 20.0;
        assert!(
            (report.log_bound - expect).abs() < 1e-12,
            "got {} want {expect}",
            report.log_bound
        );
    }

    #[test]
    fn improved_sandwich_small_config() {
        for target in [BoundTarget::Alpha, BoundTarget::Beta] {
            let ks = [300u64, 120, 40];
            let lo = improved_lower(target, &ks, true, &ComputeTables).unwrap();
            let hi = improved_upper(target, &ks, &ComputeTables).unwrap();
            assert!(lo.bound_f64() <= hi.bound_f64(), "{target:?}");
        }
    }

    #[test]
    fn improved_upper_rejects_increasing_ks() {
        assert!(improved_upper(BoundTarget::Beta, &[10, 20], &ComputeTables).is_err());
    }

    #[test]
    fn format_significant_digits() {
        assert_eq!(format_significant(1.3146412345678901, 12), "1.31464123457");
        assert_eq!(format_significant(0.5, 3), "0.500");
    }
}
