//! Single centred droplet against the closed-form similarity law.
//!
//! `cargo run --release --example single_droplet [cell_centered|subcell] [donor_cell|donor_acceptor]`

use std::time::Instant;

use sqflow::sim::{analytic_single_droplet_h, run, time_to_reach, SnapshotSchedule};
use sqflow::{DropPattern, SimParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut params = SimParams::default();
    if let Some(model) = std::env::args().nth(1) {
        params.interface_model = model.parse()?;
    }
    if let Some(scheme) = std::env::args().nth(2) {
        params.advection_scheme = scheme.parse()?;
    }
    let dp = DropPattern::from_indices(20, &[10 * 20 + 10])?;
    let start = Instant::now();
    let out = run(&dp, &params, &SnapshotSchedule::default())?;
    println!(
        "{} steps, {} snapshots, end: {} at t={:.4e} s h={:.4e} m ({:.1?})",
        out.history.len(),
        out.snapshots.len(),
        out.status.reason,
        out.status.final_t,
        out.status.final_h,
        start.elapsed()
    );
    println!("{:>12} {:>12} {:>12} {:>9}", "t [s]", "h [m]", "oracle [m]", "rel err");
    for s in &out.snapshots {
        let oracle = analytic_single_droplet_h(s.t, &params);
        println!("{:12.4e} {:12.4e} {:12.4e} {:9.4}", s.t, s.h, oracle, s.h / oracle - 1.0);
    }
    for target in [140e-9, 54e-9] {
        let t = time_to_reach(&out.history, params.initial_gap, target);
        println!("time to {:.0} nm: {:?}", target * 1e9, t);
    }
    Ok(())
}
