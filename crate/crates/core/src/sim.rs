//! Time integration, termination, snapshot scheduling and the closed-form
//! single-droplet law.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{binarize_imprint, init_state, DropPattern, Grid, ImprintImage, SimState};
use crate::params::SimParams;
use crate::pressure::{classify_cells, solve_pressure};
use crate::vof::{advect, apply_gap_change_and_redistribute, face_velocities, stable_timestep};

/// Recorded example: one (t, h, imprint) triple for the run's pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    pub imprint: ImprintImage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    Coverage,
    Time,
    Thickness,
    Stalled,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::Coverage => "coverage",
            TerminationReason::Time => "time",
            TerminationReason::Thickness => "thickness",
            TerminationReason::Stalled => "stalled",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminationStatus {
    pub reason: TerminationReason,
    pub final_t: f64,
    pub final_h: f64,
}

/// Snapshots at the first state with `h ≤ h₀·ratioᵏ`, `k = 1, 2, …`, plus the
/// initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotSchedule {
    pub ratio: f64,
    /// Time stamped on the initial snapshot. Kept positive so `ln t` exists.
    pub initial_time: f64,
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        SnapshotSchedule {
            ratio: 0.90,
            initial_time: 1e-12,
        }
    }
}

impl SnapshotSchedule {
    pub fn milestone(&self, k: u32, params: &SimParams) -> f64 {
        params.initial_gap * self.ratio.powi(k as i32)
    }

    /// Number of snapshots a run that reaches the thickness floor records.
    pub fn count_to_floor(&self, params: &SimParams) -> usize {
        let mut k = 0;
        while self.milestone(k + 1, params) >= params.term_h_min {
            k += 1;
        }
        k as usize + 1
    }
}

/// Diagnostics of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    /// Time and gap after the step.
    pub t: f64,
    pub h: f64,
    /// `∂h/∂t` evaluated at the start of the step.
    pub gap_rate: f64,
    pub dt: f64,
    pub wet_cells: usize,
    pub cg_iterations: usize,
    /// Liquid that left the domain during this step, m³.
    pub outflow: f64,
    /// `|Σf*_before − Σf*_after − outflow| / Σf*_before` for the advection.
    pub advect_balance: f64,
}

/// Owns a state and steps it forward, reusing the previous shape field as the
/// solver's starting guess.
#[derive(Clone, Debug)]
pub struct Integrator {
    params: SimParams,
    state: SimState,
    phi_guess: Option<Grid<f64>>,
}

impl Integrator {
    pub fn new(state: SimState, params: SimParams) -> Result<Self> {
        params.validate()?;
        Ok(Integrator {
            params,
            state,
            phi_guess: None,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    pub fn step(&mut self) -> Result<StepRecord> {
        let (next, rec, phi) = step_inner(&self.state, &self.params, self.phi_guess.as_ref())?;
        self.state = next;
        self.phi_guess = Some(phi);
        Ok(rec)
    }
}

fn step_inner(
    state: &SimState,
    params: &SimParams,
    guess: Option<&Grid<f64>>,
) -> Result<(SimState, StepRecord, Grid<f64>)> {
    if state.h <= params.term_h_min {
        return Err(Error::AlreadyTerminated(format!(
            "gap {:.3e} m at or below the floor {:.3e} m",
            state.h, params.term_h_min
        )));
    }
    let h = state.h;
    let mask = classify_cells(&state.vof, h, params);
    let wet_cells = mask.wet_count();
    if wet_cells == 0 {
        return Err(Error::Stalled("no wet cells left".into()));
    }
    let (shape, pressure) = solve_pressure(&mask, h, params, guess)?;
    let vel = face_velocities(&pressure, &mask, h, params);
    let dt = stable_timestep(&vel, pressure.gap_rate, h, params)?;
    if state.t + dt == state.t {
        return Err(Error::Stalled(format!("time step {dt:e} s underflows")));
    }
    let before = state.vof.total();
    let adv = advect(&state.vof.f_star, &vel, dt, h, params)?;
    let after = crate::numerics::sum(adv.f_star.as_slice());
    let out_fstar = adv.outflow / (params.cell_area() * params.h_ref);
    let advect_balance = ((before - after - out_fstar) / before).abs();

    let mut next = state.clone();
    next.vof.f_star = adv.f_star;
    next.outflow_volume += adv.outflow;
    let next = apply_gap_change_and_redistribute(next, pressure.gap_rate, dt, params)?;
    let rec = StepRecord {
        t: next.t,
        h: next.h,
        gap_rate: pressure.gap_rate,
        dt,
        wet_cells,
        cg_iterations: shape.iterations,
        outflow: adv.outflow,
        advect_balance,
    };
    Ok((next, rec, shape.phi))
}

/// One full cycle: classify, solve, balance, velocities, Δt, advect, squeeze.
pub fn step(state: &SimState, params: &SimParams) -> Result<(SimState, StepRecord)> {
    let (s, r, _) = step_inner(state, params, None)?;
    Ok((s, r))
}

pub fn check_termination(state: &SimState, params: &SimParams) -> Option<TerminationStatus> {
    let reason = if state.coverage(params) > params.term_coverage_max {
        TerminationReason::Coverage
    } else if state.t > params.term_time_max {
        TerminationReason::Time
    } else if state.h < params.term_h_min {
        TerminationReason::Thickness
    } else {
        return None;
    };
    Some(TerminationStatus {
        reason,
        final_t: state.t,
        final_h: state.h,
    })
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub status: TerminationStatus,
    pub history: Vec<StepRecord>,
    pub final_state: SimState,
}

/// Integrate until a termination criterion fires. A state that meets a
/// criterion is not recorded.
pub fn run(dp: &DropPattern, params: &SimParams, schedule: &SnapshotSchedule) -> Result<RunOutput> {
    let state = init_state(dp, params)?;
    run_from(state, params, schedule)
}

pub fn run_from(state: SimState, params: &SimParams, schedule: &SnapshotSchedule) -> Result<RunOutput> {
    if !(schedule.ratio > 0.0 && schedule.ratio < 1.0) {
        return Err(Error::InvalidParams(format!("snapshot ratio {} must lie in (0, 1)", schedule.ratio)));
    }
    let mut integ = Integrator::new(state, params.clone())?;
    let mut snapshots = Vec::new();
    let mut history = Vec::new();
    if let Some(status) = check_termination(integ.state(), params) {
        return Ok(RunOutput {
            snapshots,
            status,
            history,
            final_state: integ.into_state(),
        });
    }
    {
        let s = integ.state();
        snapshots.push(Snapshot {
            t: s.t.max(schedule.initial_time),
            h: s.h,
            imprint: binarize_imprint(&s.vof, s.h, params),
        });
    }
    let mut next_k = 1u32;
    let status = loop {
        match integ.step() {
            Ok(rec) => history.push(rec),
            Err(Error::Stalled(_)) => {
                let s = integ.state();
                break TerminationStatus {
                    reason: TerminationReason::Stalled,
                    final_t: s.t,
                    final_h: s.h,
                };
            }
            Err(e) => return Err(e),
        }
        let s = integ.state();
        if let Some(status) = check_termination(s, params) {
            break status;
        }
        let mut crossed = false;
        while s.h <= schedule.milestone(next_k, params) {
            crossed = true;
            next_k += 1;
        }
        if crossed {
            snapshots.push(Snapshot {
                t: s.t,
                h: s.h,
                imprint: binarize_imprint(&s.vof, s.h, params),
            });
        }
    };
    Ok(RunOutput {
        snapshots,
        status,
        history,
        final_state: integ.into_state(),
    })
}

/// `h(t) = h₀·(1 + K·h₀²·t)^(−1/2)` with `K = 4πσ(cosθ₁+cosθ₂)/(3μV)`.
///
/// An isolated cylindrical droplet squeezed under capillary suction: the disk
/// solution `φ = (r²−R²)/4` integrates to `−πR⁴/8`, and with `R² = V/(πh)`
/// the force balance gives `ḣ = −(K/2)·h³`.
pub fn analytic_single_droplet_h(t: f64, params: &SimParams) -> f64 {
    let h0 = params.initial_gap;
    h0 / (1.0 + params.similarity_constant() * h0 * h0 * t).sqrt()
}

/// Inverse of [`analytic_single_droplet_h`].
pub fn analytic_single_droplet_t(h: f64, params: &SimParams) -> f64 {
    let h0 = params.initial_gap;
    ((h0 / h).powi(2) - 1.0) / (params.similarity_constant() * h0 * h0)
}

/// Time at which a recorded gap history first reaches `h`, by linear
/// interpolation in `ln h` between steps.
pub fn time_to_reach(history: &[StepRecord], h0: f64, h: f64) -> Option<f64> {
    let mut prev = (0.0, h0);
    for rec in history {
        if rec.h <= h {
            let (t0, ha) = prev;
            let w = (ha.ln() - h.ln()) / (ha.ln() - rec.h.ln());
            return Some(t0 + w * (rec.t - t0));
        }
        prev = (rec.t, rec.h);
    }
    None
}

/// Gap at time `t` from a recorded history, interpolating in `ln h`.
pub fn gap_at(history: &[StepRecord], h0: f64, t: f64) -> Option<f64> {
    let mut prev = (0.0, h0);
    for rec in history {
        if rec.t >= t {
            let (t0, ha) = prev;
            let w = (t - t0) / (rec.t - t0);
            return Some((ha.ln() + w * (rec.h.ln() - ha.ln())).exp());
        }
        prev = (rec.t, rec.h);
    }
    None
}
