//! Transport of the modified volume fraction with the lubrication velocity.
//!
//! `∂f*/∂t + ∇·(f* V) = 0` with `V = −(h²/12μ)∇p̂`. First-order upwind
//! fluxes on a staggered grid (plain donor-cell or Hirt–Nichols
//! donor–acceptor), open domain edges and a conservative overfill
//! redistribution after the gap update.

use crate::error::{Error, Result};
use crate::grid::{Grid, SimState};
use crate::numerics;
use crate::params::{AdvectionScheme, SimParams};
use crate::pressure::{PressureSolution, WetMask};

/// Face-normal velocities on a staggered grid, m/s.
///
/// `u[r·(n+1) + c]` is the x-velocity on the face left of cell `(r, c)`;
/// `v[r·n + c]` is the y-velocity on the face above cell `(r, c)`. Positive
/// values point towards increasing column / row index.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVelocities {
    side: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FaceVelocities {
    pub fn zeros(side: usize) -> Self {
        FaceVelocities {
            side,
            u: vec![0.0; (side + 1) * side],
            v: vec![0.0; side * (side + 1)],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn u_at(&self, r: usize, c_face: usize) -> f64 {
        self.u[r * (self.side + 1) + c_face]
    }

    #[inline]
    pub fn v_at(&self, r_face: usize, c: usize) -> f64 {
        self.v[r_face * self.side + c]
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Lubrication velocity `−(h²/12μ)·∇p̂` on every face.
///
/// The capillary part of the pressure is uniform at fixed `h`, so the gradient
/// of `p̂` is the gradient of `p`. Across the wet edge the gradient uses the
/// interface distance the pressure solve used, which keeps the discrete
/// divergence equal to `−ḣ/h` on every wet cell.
pub fn face_velocities(p: &PressureSolution, mask: &WetMask, h: f64, params: &SimParams) -> FaceVelocities {
    let n = mask.side();
    let k = h * h / (12.0 * params.viscosity * params.cell_size());
    let ph = &p.p_hat;
    let mut out = FaceVelocities::zeros(n);
    for r in 0..n {
        for cf in 0..=n {
            // face between (r, cf-1) and (r, cf)
            let w = if cf < n {
                mask.face_weight(r, cf, (0, -1))
            } else {
                mask.face_weight(r, n - 1, (0, 1))
            };
            if w == 0.0 {
                continue;
            }
            let left = if cf > 0 { ph.get(r, cf - 1) } else { 0.0 };
            let right = if cf < n { ph.get(r, cf) } else { 0.0 };
            out.u[r * (n + 1) + cf] = -k * w * (right - left);
        }
    }
    for rf in 0..=n {
        for c in 0..n {
            let w = if rf < n {
                mask.face_weight(rf, c, (-1, 0))
            } else {
                mask.face_weight(n - 1, c, (1, 0))
            };
            if w == 0.0 {
                continue;
            }
            let up = if rf > 0 { ph.get(rf - 1, c) } else { 0.0 };
            let down = if rf < n { ph.get(rf, c) } else { 0.0 };
            out.v[rf * n + c] = -k * w * (down - up);
        }
    }
    out
}

/// `min(cfl·Δx/max|V|, gap_change·h/|ḣ|)`.
pub fn stable_timestep(vel: &FaceVelocities, gap_rate: f64, h: f64, params: &SimParams) -> Result<f64> {
    let vmax = vel.max_abs();
    let mut dt = f64::INFINITY;
    if vmax > 0.0 {
        dt = params.cfl_number * params.cell_size() / vmax;
    }
    if gap_rate != 0.0 {
        dt = dt.min(params.gap_change_per_step_max * h / gap_rate.abs());
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Stalled(format!("no admissible time step (max |V| = {vmax:e}, dh/dt = {gap_rate:e})")));
    }
    Ok(dt)
}

/// Result of one advection step.
#[derive(Clone, Debug, PartialEq)]
pub struct Advected {
    pub f_star: Grid<f64>,
    /// Liquid carried out through the domain edges, m³.
    pub outflow: f64,
}

/// Flux of `f*` across one face in units of the donor's cell content.
///
/// `donor` and `acceptor` are plain fills (acceptor `0` outside the domain),
/// `courant` is `|V|·Δt/Δx`.
#[inline]
pub fn face_fraction(scheme: AdvectionScheme, donor: f64, acceptor: f64, courant: f64) -> f64 {
    match scheme {
        AdvectionScheme::DonorCell => donor * courant,
        AdvectionScheme::DonorAcceptor => {
            let fd = donor.clamp(0.0, 1.0);
            let fa = acceptor.clamp(0.0, 1.0);
            let spill = ((1.0 - fa) * courant - (1.0 - fd)).max(0.0);
            (fa * courant + spill).min(fd)
        }
    }
}

/// Update of `f*` over `dt` at gap `h`.
///
/// Face fluxes follow `params.advection_scheme`; a donor never exports more
/// than it holds, and a wet donor keeps `wet_threshold` of fill, so the wet
/// set never shrinks. Boundary faces are outflow-only: nothing enters from
/// outside. Errors if the outgoing Courant numbers of a cell sum above 1.
pub fn advect(f_star: &Grid<f64>, vel: &FaceVelocities, dt: f64, h: f64, params: &SimParams) -> Result<Advected> {
    let n = f_star.side();
    let c = dt / params.cell_size();
    let cap = h / params.h_ref;
    let scheme = params.advection_scheme;
    let fs = f_star.as_slice();
    let fill = |i: Option<usize>| i.map_or(0.0, |i| fs[i] / cap);

    // magnitude of the flux through each face, f* units, and its donor
    let mut fx = vec![0.0; (n + 1) * n];
    let mut fy = vec![0.0; n * (n + 1)];
    // per donor, indexed like `DIRS`: what leaves through its E, W, S, N faces
    let mut exported = vec![[0.0f64; 4]; n * n];
    let mut courant = vec![[0.0f64; 4]; n * n];
    // `slots` = (slot of the face seen from lo, slot seen from hi)
    let mut face = |flux: &mut f64, vel: f64, lo: Option<usize>, hi: Option<usize>, slots: (usize, usize)| {
        let (donor, acceptor, slot) = if vel > 0.0 { (lo, hi, slots.0) } else { (hi, lo, slots.1) };
        let Some(d) = donor else { return };
        if vel == 0.0 {
            return;
        }
        let cr = vel.abs() * c;
        courant[d][slot] = cr;
        let amount = cap * face_fraction(scheme, fs[d] / cap, fill(acceptor), cr);
        exported[d][slot] = amount;
        *flux = amount;
    };
    for r in 0..n {
        for cf in 0..=n {
            let lo = (cf > 0).then(|| r * n + cf - 1);
            let hi = (cf < n).then(|| r * n + cf);
            let k = r * (n + 1) + cf;
            face(&mut fx[k], vel.u[k], lo, hi, (0, 1));
        }
    }
    for rf in 0..=n {
        for col in 0..n {
            let lo = (rf > 0).then(|| (rf - 1) * n + col);
            let hi = (rf < n).then(|| rf * n + col);
            let k = rf * n + col;
            face(&mut fy[k], vel.v[k], lo, hi, (2, 3));
        }
    }
    let worst = courant.iter().fold(0.0f64, |m, &x| m.max(numerics::sorted_sum(x)));
    if worst > 1.0 + 1e-12 {
        return Err(Error::CflViolation(worst));
    }
    // scale down donors that would go negative or, if wet, dry out
    let hold = params.wet_threshold * cap;
    let limit: Vec<f64> = exported
        .iter()
        .zip(fs)
        .map(|(&e, &have)| {
            let e = numerics::sorted_sum(e);
            let keep = if have >= hold { hold } else { 0.0 };
            let have = have - keep;
            if e > have {
                have / e
            } else {
                1.0
            }
        })
        .collect();
    let donor_of = |velocity: f64, lo: Option<usize>, hi: Option<usize>| if velocity > 0.0 { lo } else { hi };
    for r in 0..n {
        for cf in 0..=n {
            let k = r * (n + 1) + cf;
            if let Some(d) = donor_of(vel.u[k], (cf > 0).then(|| r * n + cf - 1), (cf < n).then(|| r * n + cf)) {
                fx[k] *= limit[d] * vel.u[k].signum();
            }
        }
    }
    for rf in 0..=n {
        for col in 0..n {
            let k = rf * n + col;
            if let Some(d) = donor_of(vel.v[k], (rf > 0).then(|| (rf - 1) * n + col), (rf < n).then(|| rf * n + col)) {
                fy[k] *= limit[d] * vel.v[k].signum();
            }
        }
    }

    let mut out = Grid::filled(n, 0.0);
    for r in 0..n {
        for col in 0..n {
            let net = numerics::sorted_sum([
                fx[r * (n + 1) + col],
                -fx[r * (n + 1) + col + 1],
                fy[r * n + col],
                -fy[(r + 1) * n + col],
            ]);
            out.set(r, col, (f_star.get(r, col) + net).max(0.0));
        }
    }

    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(-fx[i * (n + 1)]);
        boundary.push(fx[i * (n + 1) + n]);
        boundary.push(-fy[i]);
        boundary.push(fy[n * n + i]);
    }
    let outflow = numerics::sum(&boundary) * params.cell_area() * params.h_ref;
    Ok(Advected { f_star: out, outflow })
}

/// Push the excess of every cell with `f > 1` to its face neighbours.
///
/// Each sweep is a Jacobi update: donors split their excess equally among
/// neighbours below `f = 1` and every cell gathers its incoming shares. A
/// donor boxed in by full cells passes its excess to the neighbours one step
/// closer (breadth-first, 4-connected) to a cell with room. Sweeps repeat
/// until `max f ≤ 1 + 1e-9`. Returns the number of sweeps.
pub fn redistribute_overfill(f_star: &mut Grid<f64>, h: f64, params: &SimParams) -> Result<usize> {
    let n = f_star.side();
    let cap = h / params.h_ref;
    let limit = cap * (1.0 + 1e-9);
    let max_sweeps = 10 * n;
    let neighbours = |i: usize| {
        let (r, c) = (i / n, i % n);
        let mut out = [None; 4];
        for (k, &(dr, dc)) in crate::pressure::DIRS.iter().enumerate() {
            let (a, b) = (r as isize + dr, c as isize + dc);
            if a >= 0 && a < n as isize && b >= 0 && b < n as isize {
                out[k] = Some(a as usize * n + b as usize);
            }
        }
        out
    };
    let data = f_star.as_mut_slice();
    // incoming[j][k]: share arriving at j from its neighbour in direction k
    let mut incoming = vec![[0.0f64; 4]; n * n];
    let mut touched: Vec<usize> = Vec::new();
    let mut dist: Vec<usize> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut donors: Vec<(usize, f64, [bool; 4])> = Vec::new();
    let mut shed: Vec<usize> = Vec::new();
    let mut stale = false;
    for sweep in 0..=max_sweeps {
        if !data.iter().any(|&v| v > limit) {
            return Ok(sweep);
        }
        if sweep == max_sweeps {
            break;
        }
        donors.clear();
        let mut boxed = false;
        for (i, &v) in data.iter().enumerate() {
            // excess within tolerance stays put
            if v <= limit {
                continue;
            }
            let mut to = [false; 4];
            for (k, nb) in neighbours(i).into_iter().enumerate() {
                to[k] = nb.is_some_and(|j| data[j] < cap);
            }
            boxed |= !to.iter().any(|&b| b);
            donors.push((i, v - cap, to));
        }
        // distances are refreshed only when stale: first use, or a boxed
        // donor found no neighbour closer to room
        if boxed && (dist.is_empty() || stale) {
            stale = false;
            dist.clear();
            dist.resize(n * n, usize::MAX);
            queue.clear();
            for (i, &v) in data.iter().enumerate() {
                if v < cap {
                    dist[i] = 0;
                    queue.push_back(i);
                }
            }
            if queue.is_empty() {
                break;
            }
            while let Some(i) = queue.pop_front() {
                for j in neighbours(i).into_iter().flatten() {
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        touched.clear();
        shed.clear();
        for &(i, excess, mut to) in &donors {
            let nb = neighbours(i);
            if !to.iter().any(|&b| b) {
                for k in 0..4 {
                    to[k] = nb[k].is_some_and(|j| dist[j] < dist[i]);
                }
            }
            let count = to.iter().filter(|&&b| b).count();
            if count == 0 {
                stale = true;
                continue;
            }
            shed.push(i);
            let share = excess / count as f64;
            for k in 0..4 {
                if let (true, Some(j)) = (to[k], nb[k]) {
                    // j receives from i, which lies in j's direction k ^ 1
                    incoming[j][k ^ 1] = share;
                    touched.push(j);
                }
            }
        }
        if touched.is_empty() && !stale {
            break;
        }
        for &i in &shed {
            data[i] = cap;
        }
        touched.sort_unstable();
        touched.dedup();
        for &j in &touched {
            data[j] += numerics::sorted_sum(incoming[j]);
            incoming[j] = [0.0; 4];
        }
    }
    Err(Error::RedistributionFailed(max_sweeps))
}

/// Advance `h` and `t` by `dt`, then settle any cell pushed past `f = 1`.
pub fn apply_gap_change_and_redistribute(
    mut state: SimState,
    gap_rate: f64,
    dt: f64,
    params: &SimParams,
) -> Result<SimState> {
    let h_new = state.h + gap_rate * dt;
    if !(h_new >= params.term_h_min / 2.0) {
        return Err(Error::GapUnderflow { h_new });
    }
    state.h = h_new;
    state.t += dt;
    redistribute_overfill(&mut state.vof.f_star, state.h, params)?;
    Ok(state)
}
