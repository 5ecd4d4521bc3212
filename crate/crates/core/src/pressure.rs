//! Interior elliptic problem and the force balance that closes it.
//!
//! With a uniform gap the reduced pressure obeys `∇²p̂ = 12μḣ/h³` on the wet
//! region with `p̂ = 0` at the interface. The right side is constant, so one
//! solve of `∇²φ = 1` gives the shape of the field and the force balance on
//! the upper plate fixes the scale `12μḣ/h³`.

use crate::error::{Error, Result};
use crate::grid::{fill_scale, Grid, VofField};
use crate::multigrid::{Hierarchy, Level};
use crate::numerics;
use crate::params::{InterfaceModel, SimParams};

/// Smallest admissible wet-cell-centre to interface distance, in cells.
pub const MIN_INTERFACE_DISTANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct WetMask {
    /// `f ≥ wet_threshold`.
    pub wet: Grid<bool>,
    /// `0 < f < wet_threshold`.
    pub interface: Grid<bool>,
    /// Plain volume fraction `f` at the current gap.
    pub fill: Grid<f64>,
    model: InterfaceModel,
}

/// Direction offsets: east, west, south, north.
pub(crate) const DIRS: [(isize, isize); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];

impl WetMask {
    pub fn side(&self) -> usize {
        self.wet.side()
    }

    pub fn wet_count(&self) -> usize {
        self.wet.as_slice().iter().filter(|&&b| b).count()
    }

    pub fn model(&self) -> InterfaceModel {
        self.model
    }

    pub fn rotate90(&self) -> Self {
        WetMask {
            wet: self.wet.rotate90(),
            interface: self.interface.rotate90(),
            fill: self.fill.rotate90(),
            model: self.model,
        }
    }

    #[inline]
    pub(crate) fn neighbour(&self, r: usize, c: usize, d: (isize, isize)) -> Option<(usize, usize)> {
        let n = self.side() as isize;
        let (nr, nc) = (r as isize + d.0, c as isize + d.1);
        (nr >= 0 && nr < n && nc >= 0 && nc < n).then_some((nr as usize, nc as usize))
    }

    /// Conductance of the face between wet cell `(r, c)` and a non-wet
    /// neighbour, or the domain outside when `nb` is `None`: the reciprocal
    /// of the distance, in cells, from the cell centre to where `p̂ = 0`.
    #[inline]
    pub(crate) fn boundary_weight(&self, r: usize, c: usize, nb: Option<(usize, usize)>) -> f64 {
        match self.model {
            InterfaceModel::CellCentered => 1.0,
            InterfaceModel::Subcell => {
                let f_nb = nb.map_or(0.0, |(a, b)| self.fill.get(a, b));
                let theta = (self.fill.get(r, c) - 0.5 + f_nb).clamp(MIN_INTERFACE_DISTANCE, 1.0);
                1.0 / theta
            }
        }
    }

    /// Conductance between cell `(r, c)` and its neighbour in direction `d`:
    /// 1 between wet cells, the interface weight across the wet edge, and 0
    /// where neither side is wet.
    #[inline]
    pub(crate) fn face_weight(&self, r: usize, c: usize, d: (isize, isize)) -> f64 {
        let nb = self.neighbour(r, c, d);
        let here = self.wet.get(r, c);
        let there = nb.is_some_and(|(a, b)| self.wet.get(a, b));
        match (here, there) {
            (true, true) => 1.0,
            (true, false) => self.boundary_weight(r, c, nb),
            (false, true) => {
                let (a, b) = nb.expect("wet neighbour is inside the domain");
                self.boundary_weight(a, b, Some((r, c)))
            }
            (false, false) => 0.0,
        }
    }
}

pub fn classify_cells(vof: &VofField, h: f64, params: &SimParams) -> WetMask {
    let scale = fill_scale(h, params);
    let fill = vof.f_star.map(|fs| fs * scale);
    let thr = params.wet_threshold;
    WetMask {
        wet: fill.map(|f| f >= thr),
        interface: fill.map(|f| f > 0.0 && f < thr),
        fill,
        model: params.interface_model,
    }
}

/// Solution of `∇²φ = 1` on the wet cells, `φ = 0` elsewhere. Units m².
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeField {
    pub phi: Grid<f64>,
    pub iterations: usize,
    /// `‖b − Aψ‖ / ‖b‖` of the returned solution.
    pub residual: f64,
}

impl ShapeField {
    /// `Σ φ·cell_area`, m⁴.
    pub fn integral(&self, params: &SimParams) -> f64 {
        numerics::sum(self.phi.as_slice()) * params.cell_area()
    }
}

const NONE: u32 = u32::MAX;

/// Compressed SPD system over the wet cells for `ψ = −φ/Δx²`:
/// `diag·ψᵢ − Σ ψ_nb = 1`.
struct WetSystem {
    cells: Vec<u32>,
    nbrs: Vec<[u32; 4]>,
    diag: Vec<f64>,
}

impl WetSystem {
    fn build(mask: &WetMask) -> Self {
        let n = mask.side();
        let mut slot = vec![NONE; n * n];
        let mut cells = Vec::new();
        for (i, &w) in mask.wet.as_slice().iter().enumerate() {
            if w {
                slot[i] = cells.len() as u32;
                cells.push(i as u32);
            }
        }
        let mut nbrs = Vec::with_capacity(cells.len());
        let mut diag = Vec::with_capacity(cells.len());
        for &ci in &cells {
            let (r, c) = (ci as usize / n, ci as usize % n);
            let mut nb = [NONE; 4];
            let mut weights = [0.0; 4];
            for (k, &d) in DIRS.iter().enumerate() {
                match mask.neighbour(r, c, d) {
                    Some((a, b)) if mask.wet.get(a, b) => {
                        nb[k] = slot[a * n + b];
                        weights[k] = 1.0;
                    }
                    other => weights[k] = mask.boundary_weight(r, c, other),
                }
            }
            nbrs.push(nb);
            diag.push(numerics::sorted_sum(weights));
        }
        WetSystem { cells, nbrs, diag }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, nb) in self.nbrs.iter().enumerate() {
            let mut terms = [0.0; 4];
            for (k, &j) in nb.iter().enumerate() {
                if j != NONE {
                    terms[k] = x[j as usize];
                }
            }
            out[i] = self.diag[i] * x[i] - numerics::sorted_sum(terms);
        }
    }
}

/// Conjugate gradient for `∇²φ = 1` on the wet cells, preconditioned by one
/// aggregation multigrid V-cycle.
///
/// `guess`, when given, seeds the iteration (values on newly wet cells start
/// from zero). Convergence is judged on the true residual.
pub fn solve_shape(mask: &WetMask, params: &SimParams, guess: Option<&Grid<f64>>) -> Result<ShapeField> {
    let sys = WetSystem::build(mask);
    let m = sys.cells.len();
    if m == 0 {
        return Err(Error::EmptyWetSet);
    }
    let n = mask.side();
    let dx2 = params.cell_area();
    let tol = params.solver_tol;
    let max_iter = params.max_iterations();

    let mut x: Vec<f64> = match guess {
        Some(g) if g.side() == n => sys.cells.iter().map(|&ci| (-g.as_slice()[ci as usize] / dx2).max(0.0)).collect(),
        _ => vec![0.0; m],
    };
    // ‖b‖ with b ≡ 1
    let b_norm = (m as f64).sqrt();
    let mut r = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut p = vec![0.0; m];
    let mut ap = vec![0.0; m];
    let mut iterations = 0;
    let weights = sys
        .nbrs
        .iter()
        .map(|nb| nb.map(|j| if j == NONE { 0.0 } else { 1.0 }))
        .collect();
    let mut mg = Hierarchy::new(Level::new(n, sys.cells.clone(), sys.nbrs.clone(), weights, sys.diag.clone()));

    let residual_of = |x: &[f64], r: &mut [f64], scratch: &mut [f64]| -> f64 {
        sys.apply(x, scratch);
        for i in 0..m {
            r[i] = 1.0 - scratch[i];
        }
        numerics::dot(r, r).sqrt() / b_norm
    };

    let mut rel = residual_of(&x, &mut r, &mut ap);
    'outer: while rel > tol {
        mg.apply(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = numerics::dot(&r, &z);
        loop {
            if iterations >= max_iter {
                break 'outer;
            }
            iterations += 1;
            sys.apply(&p, &mut ap);
            let pap = numerics::dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let est = numerics::dot(&r, &r).sqrt() / b_norm;
            if est <= tol {
                break;
            }
            mg.apply(&r, &mut z);
            let rz_new = numerics::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        // recompute from scratch; restart if the recursive residual drifted
        rel = residual_of(&x, &mut r, &mut ap);
    }
    if rel > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: rel,
        });
    }

    let mut phi = Grid::filled(n, 0.0);
    for (k, &ci) in sys.cells.iter().enumerate() {
        phi.as_mut_slice()[ci as usize] = -x[k] * dx2;
    }
    Ok(ShapeField {
        phi,
        iterations,
        residual: rel,
    })
}

/// Area the capillary pressure acts on: `Σ f·cell_area` over every cell that
/// holds liquid, m².
pub fn liquid_area(mask: &WetMask, params: &SimParams) -> f64 {
    numerics::sum(mask.fill.as_slice()) * params.cell_area()
}

/// Gap rate that makes the gauge pressure integrate to the external force:
/// `(12μḣ/h³)·Σφ·ΔA = (cosθ₁+cosθ₂)·σ·A/h + F_ext`.
pub fn gap_rate_from_balance(phi: &ShapeField, mask: &WetMask, h: f64, params: &SimParams) -> Result<f64> {
    let area = liquid_area(mask, params);
    if mask.wet_count() == 0 || area <= 0.0 {
        return Err(Error::EmptyWetSet);
    }
    let integral = phi.integral(params);
    if !(integral < 0.0) {
        return Err(Error::DegenerateBalance(integral));
    }
    let load = params.contact_angle_cos_sum * params.surface_tension * area / h + params.external_force;
    Ok(load * h * h * h / (12.0 * params.viscosity * integral))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureSolution {
    /// Reduced pressure `p̂`, Pa.
    pub p_hat: Grid<f64>,
    /// `∂h/∂t`, m/s.
    pub gap_rate: f64,
    /// m².
    pub wet_area: f64,
}

pub fn pressure_field(phi: &ShapeField, gap_rate: f64, h: f64, wet_area: f64, params: &SimParams) -> PressureSolution {
    let scale = 12.0 * params.viscosity * gap_rate / (h * h * h);
    PressureSolution {
        p_hat: phi.phi.map(|v| scale * v),
        gap_rate,
        wet_area,
    }
}

/// All three steps in sequence.
pub fn solve_pressure(
    mask: &WetMask,
    h: f64,
    params: &SimParams,
    guess: Option<&Grid<f64>>,
) -> Result<(ShapeField, PressureSolution)> {
    let shape = solve_shape(mask, params, guess)?;
    let rate = gap_rate_from_balance(&shape, mask, h, params)?;
    let area = liquid_area(mask, params);
    let p = pressure_field(&shape, rate, h, area, params);
    Ok((shape, p))
}
