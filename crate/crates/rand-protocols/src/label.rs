//! Labels: a device gets label `k >= d_1` with probability `2^(−k/2)`, or none.

use rand::Rng;

/// `Σ_{k>=d1} 2^(−k/2)`.
pub fn label_mass(d1: u64) -> f64 {
    2f64.powf(-(d1 as f64) / 2.0) / (1.0 - 2f64.powf(-0.5))
}

/// Map `u ∈ [0, 1)` to a label: consecutive intervals of length `2^(−k/2)` from `k = d1`.
pub fn label_for(u: f64, d1: u64) -> Option<u64> {
    if u >= label_mass(d1) {
        return None;
    }
    let mut acc = 0.0;
    let mut k = d1;
    loop {
        let w = 2f64.powf(-(k as f64) / 2.0);
        acc += w;
        // rounding can leave u a hair above the running sum deep in the tail
        if u < acc || w < f64::EPSILON * acc {
            return Some(k);
        }
        k += 1;
    }
}

pub fn draw_label<R: Rng + ?Sized>(rng: &mut R, d1: u64) -> Option<u64> {
    label_for(rng.random::<f64>(), d1)
}
