//! The functions `a_i(j)` and `b_i(j)` that bound group sizes and ID-space
//! shrinkage of `DenseAlgo_i`. They outgrow any machine word almost at once, so
//! they are evaluated with saturation at a cap and only compared against
//! smaller numbers.

use std::fmt;

pub const DEFAULT_CAP: u64 = i64::MAX as u64;

/// A non-negative integer, or a marker that it exceeds `cap`.
///
/// A saturated value compares as larger than every number, which is exact
/// for numbers up to the cap.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CappedMagnitude {
    value: Option<u64>,
    cap: u64,
}

impl fmt::Debug for CappedMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{v}"),
            None => write!(f, ">{}", self.cap),
        }
    }
}

impl CappedMagnitude {
    pub fn new(v: u128, cap: u64) -> Self {
        CappedMagnitude {
            value: (v <= cap as u128).then_some(v as u64),
            cap,
        }
    }

    pub fn saturated(cap: u64) -> Self {
        CappedMagnitude { value: None, cap }
    }

    pub fn value(&self) -> Option<u64> {
        self.value
    }

    pub fn is_saturated(&self) -> bool {
        self.value.is_none()
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// `self >= m`.
    pub fn at_least(&self, m: u128) -> bool {
        self.value.is_none_or(|v| v as u128 >= m)
    }

    pub fn mul(self, o: CappedMagnitude) -> Self {
        match (self.value, o.value) {
            (Some(0), _) | (_, Some(0)) => CappedMagnitude::new(0, self.cap),
            (Some(a), Some(b)) => CappedMagnitude::new(a as u128 * b as u128, self.cap),
            _ => CappedMagnitude::saturated(self.cap),
        }
    }

    pub fn pow(self, e: u32) -> Self {
        let mut acc = CappedMagnitude::new(1, self.cap);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `2^self`.
    pub fn exp2(self) -> Self {
        match self.value {
            Some(v) if v < 127 => CappedMagnitude::new(1u128 << v, self.cap),
            _ => CappedMagnitude::saturated(self.cap),
        }
    }

    /// `⌊n / self⌋`; a saturated divisor gives 0.
    pub fn div_floor(self, n: u64) -> u64 {
        match self.value {
            Some(v) => n / v.max(1),
            None => 0,
        }
    }

    /// `⌈n / self⌉` for `n >= 1`; a saturated divisor gives 1.
    pub fn div_ceil(self, n: u64) -> u64 {
        match self.value {
            Some(v) => n.div_ceil(v.max(1)),
            None => n.min(1),
        }
    }
}

pub(crate) fn a_capped(i: u32, x: CappedMagnitude) -> CappedMagnitude {
    let Some(xv) = x.value() else { return x };
    if i == 0 {
        return x.pow(5);
    }
    let mut y = x.pow(4);
    for _ in 0..xv {
        if y.is_saturated() {
            break;
        }
        y = a_capped(i - 1, y);
    }
    y
}

pub(crate) fn b_capped(i: u32, x: CappedMagnitude) -> CappedMagnitude {
    let Some(xv) = x.value() else { return x };
    let mut prod = x.exp2();
    if i == 0 {
        return prod;
    }
    let mut y = x.pow(4);
    for _ in 0..xv {
        if prod.is_saturated() {
            break;
        }
        prod = prod.mul(b_capped(i - 1, y));
        y = a_capped(i - 1, y);
    }
    prod
}

/// `a_0(j) = j^5`, `a_i(j) = a_{i−1}` applied `j` times to `j^4`.
pub fn a_func(i: u32, j: u64, cap: u64) -> CappedMagnitude {
    a_capped(i, CappedMagnitude::new(j as u128, cap))
}

/// `b_0(j) = 2^j`, `b_i(j) = 2^j · ∏_{r=1..j} b_{i−1}(a_{i−1}^{(r−1)}(j^4))`.
pub fn b_func(i: u32, j: u64, cap: u64) -> CappedMagnitude {
    b_capped(i, CappedMagnitude::new(j as u128, cap))
}

/// Smallest `i` with `b_i(j) >= m`, for `j >= 2`.
pub fn min_depth(m: u128, j: u64, cap: u64) -> u32 {
    assert!(j >= 2, "min_depth needs j >= 2");
    (0..)
        .find(|&i| b_func(i, j, cap).at_least(m))
        .expect("b saturates")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_is_sticky() {
        let big = CappedMagnitude::new(1 << 40, DEFAULT_CAP);
        assert!(big.mul(big).is_saturated());
        assert!(
            big.mul(big)
                .mul(CappedMagnitude::new(0, DEFAULT_CAP))
                .value()
                == Some(0)
        );
        assert_eq!(
            CappedMagnitude::new(62, DEFAULT_CAP).exp2().value(),
            Some(1 << 62)
        );
        assert!(CappedMagnitude::new(63, DEFAULT_CAP).exp2().is_saturated());
    }
}
