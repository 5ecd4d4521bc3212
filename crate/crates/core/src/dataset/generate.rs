//! Seeded batch generation of one category: `<out>/<category>/<sim_id>/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{write_partition, DatasetPartition};
use crate::error::{Error, Result};
use crate::grid::{make_pattern_random, DropPattern};
use crate::params::SimParams;
use crate::sim::{run, RunOutput, SnapshotSchedule, TerminationStatus};

/// One partition row per snapshot of `out`.
pub fn partition_from_run(dp: &DropPattern, out: &RunOutput) -> Result<DatasetPartition> {
    let mut p = DatasetPartition::default();
    p.shape.dp_side = dp.side();
    if let Some(s) = out.snapshots.first() {
        p.shape.vof_side = s.imprint.side();
    }
    let dp_idx = dp.indices();
    for s in &out.snapshots {
        p.push(s.t, s.h, dp_idx.clone(), s.imprint.indices())?;
    }
    Ok(p)
}

/// Seed of simulation `sim` in a batch seeded with `seed`: word 0 of ChaCha8
/// stream `sim`. Independent of how the batch is scheduled.
pub fn sim_seed(seed: u64, sim: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sim as u64);
    rng.next_u64()
}

pub fn sim_dir(out: &Path, category: usize, sim: usize) -> PathBuf {
    out.join(category.to_string()).join(format!("{sim:04}"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub sim: usize,
    pub examples: usize,
    pub on_pixels: usize,
    pub status: TerminationStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateSummary {
    pub category: usize,
    pub outcomes: Vec<SimOutcome>,
    pub failed: Vec<(usize, String)>,
}

impl GenerateSummary {
    pub fn simulations(&self) -> usize {
        self.outcomes.len()
    }

    pub fn examples(&self) -> usize {
        self.outcomes.iter().map(|o| o.examples).sum()
    }

    /// Mean On-pixel count over examples.
    pub fn mean_dp(&self) -> f64 {
        let n = self.examples();
        if n == 0 {
            return 0.0;
        }
        let on: usize = self.outcomes.iter().map(|o| o.examples * o.on_pixels).sum();
        on as f64 / n as f64
    }

    /// Table-style one-liner followed by one line per simulation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "category {}: simulations {} examples {} mean_dp {:.2} failed {}",
            self.category,
            self.simulations(),
            self.examples(),
            self.mean_dp(),
            self.failed.len()
        );
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "sim {:04}: examples {} on {} end {} t {:.6e} h {:.6e}",
                o.sim, o.examples, o.on_pixels, o.status.reason, o.status.final_t, o.status.final_h
            );
        }
        for (sim, msg) in &self.failed {
            let _ = writeln!(s, "sim {sim:04}: FAILED {msg}");
        }
        s
    }
}

fn one_sim(category: usize, sim: usize, seed: u64, params: &SimParams, out: &Path) -> Result<SimOutcome> {
    let dp = make_pattern_random(category, sim_seed(seed, sim), params)?;
    let run = run(&dp, params, &SnapshotSchedule::default())?;
    let part = partition_from_run(&dp, &run)?;
    write_partition(&part, &sim_dir(out, category, sim))?;
    Ok(SimOutcome {
        sim,
        examples: part.len(),
        on_pixels: dp.count(),
        status: run.status,
    })
}

/// Run `n_sims` seeded simulations of `category` on `jobs` threads and write
/// one partition each plus `<out>/<category>/summary.txt`. Failed
/// simulations are listed in the summary rather than aborting the batch.
pub fn generate_category(
    category: usize,
    n_sims: usize,
    seed: u64,
    params: &SimParams,
    out: &Path,
    jobs: usize,
) -> Result<GenerateSummary> {
    params.validate()?;
    let total = params.nozzle_n * params.nozzle_n;
    if category == 0 || category > total {
        return Err(Error::CategoryOutOfRange(category, total));
    }
    let dir = out.join(category.to_string());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<SimOutcome>)> = pool.install(|| {
        (0..n_sims)
            .into_par_iter()
            .map(|sim| (sim, one_sim(category, sim, seed, params, out)))
            .collect()
    });
    let mut summary = GenerateSummary {
        category,
        outcomes: Vec::new(),
        failed: Vec::new(),
    };
    for (sim, r) in results {
        match r {
            Ok(o) => summary.outcomes.push(o),
            Err(e) => summary.failed.push((sim, e.to_string())),
        }
    }
    let path = dir.join("summary.txt");
    fs::write(&path, summary.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
