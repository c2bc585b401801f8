use primitive_growth::bounds::*;
use primitive_growth::counting::{build_table, CountKind};
use primitive_growth::primes::first_primes;
use std::time::Instant;

fn main() {
    let basis = first_primes(2);
    let k = 1_000_000u64;
    for (target, lo_kind, hi_kind) in [
        (BoundTarget::Alpha, CountKind::MaxTruncated, CountKind::MaxAll),
        (BoundTarget::Beta, CountKind::AllTruncated, CountKind::AllAll),
    ] {
        let t0 = Instant::now();
        let lo_table = build_table(&basis, lo_kind, k).unwrap();
        let lo = basic_lower(target, &basis, k, &lo_table).unwrap();
        let t1 = Instant::now();
        let hi_table = build_table(&basis, hi_kind, k).unwrap();
        let hi = basic_upper(target, &basis, k, &hi_table).unwrap();
        println!(
            "{:?}: lower = {} ({:?})  upper = {} ({:?})",
            target, lo.bound, t1 - t0, hi.bound, t1.elapsed()
        );
    }
    // crude upper for alpha
    let lo_table = build_table(&basis, CountKind::MaxTruncated, k).unwrap();
    let crude = crude_upper_alpha(&basis, k, &lo_table).unwrap();
    println!("alpha crude upper = {}", crude.bound);
}
