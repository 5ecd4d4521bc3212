//! Order-independent reductions.
//!
//! Global sums (CG dot products, mass totals, shape integrals) go through a
//! fixed-point accumulator: every term is scaled by the same power of two,
//! rounded to an `i128`, and summed with integer arithmetic. Integer addition
//! is associative, so the result depends only on the multiset of terms and not
//! on the traversal order. That is what makes a rotated or tiled problem
//! reproduce the original bit for bit.
//!
//! Terms smaller than roughly `2^-100` of the largest term are lost, which is
//! far below anything the solvers care about.

/// Headroom reserved above the largest term, in bits of the `i128` accumulator.
const TOP_BIT: i32 = 100;

fn exponent(x: f64) -> i32 {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // subnormal
        -1074 + (64 - (bits & ((1u64 << 52) - 1)).leading_zeros() as i32)
    } else {
        biased - 1023
    }
}

/// `x ↦ x·2^s` as two exact multiplications, so `s` may exceed the exponent
/// range of a single factor.
#[derive(Clone, Copy)]
struct Pow2(f64, f64);

impl Pow2 {
    fn new(s: i32) -> Self {
        let half = s / 2;
        Pow2(2f64.powi(half), 2f64.powi(s - half))
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        x * self.0 * self.1
    }
}

/// Sum `len` terms produced by `term(i)`; `term` is evaluated twice per index.
pub fn sum_by(len: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut max_abs = 0.0f64;
    for i in 0..len {
        let v = term(i).abs();
        if !v.is_finite() {
            return (0..len).map(&term).sum();
        }
        if v > max_abs {
            max_abs = v;
        }
    }
    if max_abs == 0.0 {
        return 0.0;
    }
    let len_bits = usize::BITS as i32 - len.leading_zeros() as i32;
    let shift = TOP_BIT - len_bits - exponent(max_abs);
    let up = Pow2::new(shift);
    // Each rounded term is split exactly at 2^SPLIT into two halves that fit
    // i64, which converts far faster than f64 -> i128. The integer total is
    // unchanged.
    const SPLIT: i32 = 40;
    let down = Pow2::new(-SPLIT);
    let back = Pow2::new(SPLIT);
    let (mut hi_acc, mut lo_acc) = (0i64, 0i128);
    for i in 0..len {
        let x = up.apply(term(i)).round();
        let hi = down.apply(x).trunc();
        let lo = x - back.apply(hi);
        hi_acc += hi as i64;
        lo_acc += lo as i64 as i128;
    }
    let acc = ((hi_acc as i128) << SPLIT) + lo_acc;
    Pow2::new(-shift).apply(acc as f64)
}

pub fn sum(values: &[f64]) -> f64 {
    sum_by(values.len(), |i| values[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}

/// Sum of a handful of values in ascending order, so the result does not
/// depend on which neighbour each value came from.
pub fn sorted_sum<const N: usize>(mut values: [f64; N]) -> f64 {
    // insertion sort: N is tiny, and equal keys (0.0 and -0.0 included) sum
    // the same in either order
    for i in 1..N {
        let mut j = i;
        while j > 0 && values[j - 1] > values[j] {
            values.swap(j - 1, j);
            j -= 1;
        }
    }
    values.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_closely() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 1e-3 - 0.04).collect();
        let naive: f64 = v.iter().sum();
        assert!((sum(&v) - naive).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariant_bitwise() {
        let v: Vec<f64> = (0..500).map(|i| (i as f64 * 0.731).sin() * 10f64.powi(i % 7)).collect();
        let mut w = v.clone();
        w.reverse();
        w.swap(3, 400);
        assert_eq!(sum(&v).to_bits(), sum(&w).to_bits());
    }

    #[test]
    fn doubling_a_set_doubles_the_sum_exactly() {
        let v: Vec<f64> = (0..300).map(|i| (i as f64).sqrt() - 7.3).collect();
        let mut twice = v.clone();
        twice.extend_from_slice(&v);
        assert_eq!(sum(&twice), 2.0 * sum(&v));
    }

    #[test]
    fn empty_and_zero() {
        assert_eq!(sum(&[]), 0.0);
        assert_eq!(sum(&[0.0, -0.0]), 0.0);
    }

    #[test]
    fn tiny_values() {
        let v = [1e-300, 2e-300, -5e-301];
        assert!((sum(&v) - 2.5e-300).abs() < 1e-310);
        let sub = [f64::MIN_POSITIVE / 8.0, f64::MIN_POSITIVE / 8.0];
        assert_eq!(sum(&sub), f64::MIN_POSITIVE / 4.0);
    }

    #[test]
    fn sorted_sum_is_order_free() {
        let a = sorted_sum([0.1, 1e16, -1e16, 0.3]);
        let b = sorted_sum([-1e16, 0.3, 0.1, 1e16]);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
