//! Crude inverse model and pixel-classification metrics.
//!
//! The crude model maps a 160×160 imprint to 20×20 nozzle scores with three
//! 2×2 stride-2 max-pools and no trainable weights. Metrics pool every pixel
//! of every example (micro-averaging).

use std::cmp::Ordering;
use std::fmt;

use crate::dataset::DatasetPartition;
use crate::error::{Error, Result};
use crate::grid::{DropPattern, Grid, ImprintImage};

/// Per-nozzle likelihood in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelScores {
    pub scores: Grid<f64>,
}

impl PixelScores {
    pub fn new(scores: Grid<f64>) -> Result<Self> {
        if let Some(bad) = scores.as_slice().iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Metrics(format!("score {bad} outside [0, 1]")));
        }
        Ok(PixelScores { scores })
    }
}

pub fn max_pool2x2(g: &Grid<f64>) -> Result<Grid<f64>> {
    let n = g.side();
    if n % 2 != 0 {
        return Err(Error::Shape(format!("cannot 2x2-pool an odd side {n}")));
    }
    let m = n / 2;
    let mut out = Grid::filled(m, 0.0);
    for r in 0..m {
        for c in 0..m {
            let v = g
                .get(2 * r, 2 * c)
                .max(g.get(2 * r, 2 * c + 1))
                .max(g.get(2 * r + 1, 2 * c))
                .max(g.get(2 * r + 1, 2 * c + 1));
            out.set(r, c, v);
        }
    }
    Ok(out)
}

pub fn crude_predict(img: &ImprintImage) -> Result<PixelScores> {
    if img.side() != 160 {
        return Err(Error::Shape(format!("expected a 160x160 imprint, got {0}x{0}", img.side())));
    }
    let mut g = img.wet.map(|b| if b { 1.0 } else { 0.0 });
    for _ in 0..3 {
        g = max_pool2x2(&g)?;
    }
    PixelScores::new(g)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_pr: Option<f64>,
    pub counts: Counts,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl MetricsReport {
    /// Precision is 0 when nothing is predicted On, recall 0 when nothing is
    /// truly On; F1 is 0 when both are.
    pub fn from_counts(threshold: f64, counts: Counts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricsReport {
            threshold,
            precision,
            recall,
            f1,
            auc_pr: None,
            counts,
        }
    }

    pub const CSV_HEADER: &'static str = "threshold,precision,recall,f1,auc_pr,tp,fp,fn,tn";

    pub fn csv_row(&self) -> String {
        let c = self.counts;
        format!(
            "{},{:.6},{:.6},{:.6},{},{},{},{},{}",
            self.threshold,
            self.precision,
            self.recall,
            self.f1,
            self.auc_pr.map_or(String::new(), |a| format!("{a:.6}")),
            c.tp,
            c.fp,
            c.fn_,
            c.tn
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold = {}", self.threshold)?;
        if let Some(a) = self.auc_pr {
            writeln!(f, "auc_pr = {a:.6}")?;
        }
        writeln!(f, "precision = {:.6}", self.precision)?;
        writeln!(f, "recall = {:.6}", self.recall)?;
        writeln!(f, "f1 = {:.6}", self.f1)?;
        let c = self.counts;
        writeln!(f, "tp = {}\nfp = {}\nfn = {}\ntn = {}", c.tp, c.fp, c.fn_, c.tn)
    }
}

fn check_aligned(preds: &[PixelScores], truths: &[DropPattern]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!("{} predictions for {} patterns", preds.len(), truths.len())));
    }
    for (p, t) in preds.iter().zip(truths) {
        if p.scores.side() != t.side() {
            return Err(Error::Shape(format!("scores {} vs pattern {}", p.scores.side(), t.side())));
        }
    }
    Ok(())
}

/// Pooled confusion counts with `score ≥ threshold` as predicted On.
pub fn confusion(preds: &[PixelScores], truths: &[DropPattern], threshold: f64) -> Result<MetricsReport> {
    check_aligned(preds, truths)?;
    let mut c = Counts::default();
    for (p, t) in preds.iter().zip(truths) {
        for (&s, &on) in p.scores.as_slice().iter().zip(t.grid().as_slice()) {
            match (s >= threshold, on) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(MetricsReport::from_counts(threshold, c))
}

/// Area under the pooled precision-recall curve.
///
/// Thresholds sweep every distinct score from high to low; pixels sharing a
/// score flip to predicted-On together. The area is the step sum
/// `Σ (Rₖ − Rₖ₋₁)·Pₖ` with `R₀ = 0`.
pub fn auc_pr(preds: &[PixelScores], truths: &[DropPattern]) -> Result<f64> {
    check_aligned(preds, truths)?;
    let mut pix: Vec<(f64, bool)> = preds
        .iter()
        .zip(truths)
        .flat_map(|(p, t)| p.scores.as_slice().iter().copied().zip(t.grid().as_slice().iter().copied()))
        .collect();
    if pix.is_empty() {
        return Err(Error::Metrics("no pixels".into()));
    }
    let positives = pix.iter().filter(|p| p.1).count() as u64;
    if positives == 0 {
        return Err(Error::Metrics("no positive pixels".into()));
    }
    pix.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < pix.len() {
        let s = pix[i].0;
        while i < pix.len() && pix[i].0 == s {
            if pix[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// One report per threshold of `grid`.
pub fn threshold_sweep(preds: &[PixelScores], truths: &[DropPattern], grid: &[f64]) -> Result<Vec<MetricsReport>> {
    grid.iter().map(|&t| confusion(preds, truths, t)).collect()
}

/// Crude-model predictions and ground-truth patterns for every row.
pub fn predict_partition(p: &DatasetPartition) -> Result<(Vec<PixelScores>, Vec<DropPattern>)> {
    let mut preds = Vec::with_capacity(p.len());
    let mut truths = Vec::with_capacity(p.len());
    for (dp, vof) in p.dp.iter().zip(&p.vof) {
        preds.push(crude_predict(&ImprintImage::from_indices(p.shape.vof_side, vof)?)?);
        truths.push(DropPattern::from_indices(p.shape.dp_side, dp)?);
    }
    Ok((preds, truths))
}

/// Crude baseline at `threshold` with AUC-PR attached.
pub fn evaluate_partition(p: &DatasetPartition, threshold: f64) -> Result<MetricsReport> {
    let (preds, truths) = predict_partition(p)?;
    let mut report = confusion(&preds, &truths, threshold)?;
    report.auc_pr = Some(auc_pr(&preds, &truths)?);
    Ok(report)
}
