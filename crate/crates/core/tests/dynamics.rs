use sqflow::grid::init_state;
use sqflow::sim::{analytic_single_droplet_h, run, Integrator, SnapshotSchedule};
use sqflow::{DropPattern, SimParams, SimState};

fn steps(dp: &DropPattern, params: &SimParams, n: usize) -> (SimState, Vec<f64>) {
    let mut it = Integrator::new(init_state(dp, params).unwrap(), params.clone()).unwrap();
    let rates = (0..n).map(|_| it.step().unwrap().gap_rate).collect();
    (it.into_state(), rates)
}

#[test]
fn quarter_turn_commutes_with_stepping() {
    let p = SimParams::default();
    let dp = DropPattern::from_indices(20, &[23, 47, 48, 210, 333]).unwrap();
    let (a, ra) = steps(&dp.rotate90(), &p, 25);
    let (b, rb) = steps(&dp, &p, 25);
    assert_eq!(ra, rb);
    assert_eq!(a.h, b.h);
    assert_eq!(a.vof.f_star, b.vof.f_star.rotate90());
    assert_eq!(a.outflow_volume, b.outflow_volume);
}

#[test]
fn separated_droplets_superpose() {
    // nine pitches apart: the fronts stay more than 40 cells apart here
    let p = SimParams::default();
    let (a, _) = steps(&DropPattern::from_indices(20, &[5 * 20 + 5]).unwrap(), &p, 40);
    let (b, _) = steps(&DropPattern::from_indices(20, &[14 * 20 + 14]).unwrap(), &p, 40);
    let (both, _) = steps(&DropPattern::from_indices(20, &[5 * 20 + 5, 14 * 20 + 14]).unwrap(), &p, 40);
    assert!((both.h / a.h - 1.0).abs() < 1e-6, "{} vs {}", both.h, a.h);
    assert!((a.h / b.h - 1.0).abs() < 1e-6);
    let worst = both
        .vof
        .f_star
        .as_slice()
        .iter()
        .zip(a.vof.f_star.as_slice().iter().zip(b.vof.f_star.as_slice()))
        .map(|(&s, (&x, &y))| (s - (x + y)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn squeeze_slows_and_snapshots_follow_milestones() {
    let p = SimParams {
        term_h_min: 1e-7,
        ..SimParams::default()
    };
    let dp = DropPattern::from_indices(20, &[0, 44, 46, 88, 250, 255]).unwrap();
    let schedule = SnapshotSchedule::default();
    let out = run(&dp, &p, &schedule).unwrap();
    assert!(out.history.windows(2).all(|w| w[1].gap_rate.abs() <= w[0].gap_rate.abs()));
    assert!(out.snapshots.windows(2).all(|w| w[1].t > w[0].t && w[1].h < w[0].h));
    assert_eq!(out.snapshots[0].h, p.initial_gap);
    // snapshot k is the first state at or below h₀·0.9ᵏ; a step moves h by at most 1%
    for (k, s) in out.snapshots.iter().enumerate().skip(1) {
        let milestone = schedule.milestone(k as u32, &p);
        assert!(s.h <= milestone && s.h >= 0.99 * milestone * (1.0 - 1e-12), "snapshot {k}: {}", s.h);
    }
    assert_eq!(out.snapshots.len(), 22); // milestones 0.9^1 … 0.9^21 lie above 100 nm
    assert!(out.final_state.volume_drift(&p) < 1e-12);
}

#[test]
fn single_droplet_follows_the_closed_form_early_on() {
    let p = SimParams {
        term_h_min: 3e-7,
        ..SimParams::default()
    };
    let out = run(&DropPattern::from_indices(20, &[210]).unwrap(), &p, &SnapshotSchedule::default()).unwrap();
    for s in &out.snapshots {
        let oracle = analytic_single_droplet_h(s.t, &p);
        assert!((s.h / oracle - 1.0).abs() < 0.02, "t {} h {} oracle {}", s.t, s.h, oracle);
    }
}
