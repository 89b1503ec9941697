//! Reductions whose result does not depend on the rayon thread count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Fixed partition size; partial sums are combined in index order.
pub const CHUNK: usize = 4096;

pub fn sum_f64(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum())
        .collect();
    partials.iter().sum()
}

pub fn sum_c64(len: usize, f: impl Fn(usize) -> Complex64 + Sync) -> Complex64 {
    let partials: Vec<Complex64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum())
        .collect();
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_of_pool_size() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sum_f64(100_003, f));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sum_f64(100_003, f));
        assert_eq!(one.to_bits(), many.to_bits());
    }
}
