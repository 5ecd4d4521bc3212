//! Interrogation-window filter: drop examples whose imprint has a locally
//! saturated film anywhere.

use super::DatasetPartition;

pub const DEFAULT_WINDOW: usize = 72;
pub const DEFAULT_MAX_COVERAGE: f64 = 0.90;

/// Largest On count of any `window×window` square lying fully inside the
/// `side×side` image, stride 1.
pub fn max_window_count(on: &[u32], side: usize, window: usize) -> usize {
    if window == 0 || window > side {
        return 0;
    }
    // summed-area table with a zero border row and column
    let w = side + 1;
    let mut sat = vec![0u32; w * w];
    let mut mask = vec![0u32; side * side];
    for &i in on {
        mask[i as usize] = 1;
    }
    for r in 0..side {
        let mut row = 0;
        for c in 0..side {
            row += mask[r * side + c];
            sat[(r + 1) * w + c + 1] = sat[r * w + c + 1] + row;
        }
    }
    let mut best = 0;
    for r in 0..=side - window {
        for c in 0..=side - window {
            let (r1, c1) = (r + window, c + window);
            let count = sat[r1 * w + c1] + sat[r * w + c] - sat[r * w + c1] - sat[r1 * w + c];
            best = best.max(count as usize);
        }
    }
    best
}

/// Keep only examples where no window's On-fraction exceeds
/// `max_local_coverage`.
pub fn coverage_filter(p: &DatasetPartition, window: usize, max_local_coverage: f64) -> DatasetPartition {
    let side = p.shape.vof_side;
    let area = (window * window) as f64;
    p.select(|i| {
        let count = max_window_count(&p.vof[i], side, window);
        count as f64 <= max_local_coverage * area
    })
}
