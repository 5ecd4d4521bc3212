//! Physical and numerical constants of a run, plus the flat `key = value`
//! parameter file that overrides them.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the `p̂ = 0` interface condition is placed between a wet cell and a
/// non-wet neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterfaceModel {
    /// Dirichlet value sits at the centre of the first non-wet cell.
    CellCentered,
    /// Dirichlet value sits at the sub-cell front position estimated from the
    /// fill fractions of the two cells (ghost-fluid style, keeps the operator
    /// symmetric).
    Subcell,
}

impl FromStr for InterfaceModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cell_centered" => Ok(InterfaceModel::CellCentered),
            "subcell" => Ok(InterfaceModel::Subcell),
            other => Err(format!("unknown interface model '{other}'")),
        }
    }
}

/// Face flux rule for the volume-fraction transport.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvectionScheme {
    /// Plain upwind: flux `f*_donor·V·Δt/Δx`.
    DonorCell,
    /// Hirt–Nichols donor–acceptor: a partially filled donor only spills
    /// into a less filled acceptor once its liquid reaches the face.
    DonorAcceptor,
}

impl FromStr for AdvectionScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "donor_cell" => Ok(AdvectionScheme::DonorCell),
            "donor_acceptor" => Ok(AdvectionScheme::DonorAcceptor),
            other => Err(format!("unknown advection scheme '{other}'")),
        }
    }
}

impl AdvectionScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            AdvectionScheme::DonorCell => "donor_cell",
            AdvectionScheme::DonorAcceptor => "donor_acceptor",
        }
    }
}

impl InterfaceModel {
    pub fn as_str(self) -> &'static str {
        match self {
            InterfaceModel::CellCentered => "cell_centered",
            InterfaceModel::Subcell => "subcell",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    /// Liquid viscosity, Pa·s.
    pub viscosity: f64,
    /// Surface tension, N/m.
    pub surface_tension: f64,
    /// cos θ₁ + cos θ₂ for the two plates.
    pub contact_angle_cos_sum: f64,
    /// Volume of one dispensed droplet, m³.
    pub droplet_volume: f64,
    /// Plate separation at first contact, m.
    pub initial_gap: f64,
    /// Reference gap used to define the modified volume fraction, m.
    pub h_ref: f64,
    /// External force pressing the plates together, N.
    pub external_force: f64,
    pub nozzle_n: usize,
    /// Nozzle pitch, m.
    pub nozzle_pitch: f64,
    pub cells_per_pitch: usize,
    /// Ambient pressure, Pa. Only gauge pressure enters the dynamics.
    pub ambient_pressure: f64,
    pub term_coverage_max: f64,
    pub term_time_max: f64,
    pub term_h_min: f64,
    pub cfl_number: f64,
    pub gap_change_per_step_max: f64,
    pub wet_threshold: f64,
    pub solver_tol: f64,
    /// `None` means `20 * grid_n`.
    pub solver_max_iter: Option<usize>,
    pub interface_model: InterfaceModel,
    pub advection_scheme: AdvectionScheme,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            viscosity: 1e-3,
            surface_tension: 0.032,
            contact_angle_cos_sum: 1.76,
            droplet_volume: 6e-15,
            initial_gap: 1e-6,
            h_ref: 1e-6,
            external_force: 0.0,
            nozzle_n: 20,
            nozzle_pitch: 84.5e-6,
            cells_per_pitch: 8,
            ambient_pressure: 101_325.0,
            term_coverage_max: 0.90,
            term_time_max: 1.0,
            term_h_min: 5e-9,
            cfl_number: 0.25,
            gap_change_per_step_max: 0.01,
            wet_threshold: 0.5,
            solver_tol: 1e-8,
            solver_max_iter: None,
            interface_model: InterfaceModel::Subcell,
            advection_scheme: AdvectionScheme::DonorAcceptor,
        }
    }
}

impl SimParams {
    pub fn grid_n(&self) -> usize {
        self.nozzle_n * self.cells_per_pitch
    }

    pub fn cell_size(&self) -> f64 {
        self.nozzle_pitch / self.cells_per_pitch as f64
    }

    pub fn cell_area(&self) -> f64 {
        let dx = self.cell_size();
        dx * dx
    }

    pub fn max_iterations(&self) -> usize {
        self.solver_max_iter.unwrap_or(20 * self.grid_n())
    }

    /// Coefficient of the single-droplet similarity law
    /// `h(t) = h₀ (1 + K h₀² t)^(-1/2)`, in m⁻² s⁻¹.
    pub fn similarity_constant(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.surface_tension * self.contact_angle_cos_sum
            / (3.0 * self.viscosity * self.droplet_volume)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("viscosity", self.viscosity),
            ("surface_tension", self.surface_tension),
            ("droplet_volume", self.droplet_volume),
            ("initial_gap", self.initial_gap),
            ("h_ref", self.h_ref),
            ("nozzle_pitch", self.nozzle_pitch),
            ("ambient_pressure", self.ambient_pressure),
            ("term_coverage_max", self.term_coverage_max),
            ("term_time_max", self.term_time_max),
            ("term_h_min", self.term_h_min),
            ("cfl_number", self.cfl_number),
            ("gap_change_per_step_max", self.gap_change_per_step_max),
            ("solver_tol", self.solver_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.contact_angle_cos_sum > 0.0 && self.contact_angle_cos_sum <= 2.0) {
            return Err(Error::InvalidParams(format!(
                "contact_angle_cos_sum must lie in (0, 2], got {}",
                self.contact_angle_cos_sum
            )));
        }
        if !(self.wet_threshold > 0.0 && self.wet_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "wet_threshold must lie in (0, 1), got {}",
                self.wet_threshold
            )));
        }
        if !(self.external_force.is_finite() && self.external_force >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "external_force must be finite and non-negative, got {}",
                self.external_force
            )));
        }
        if self.nozzle_n == 0 || self.cells_per_pitch == 0 {
            return Err(Error::InvalidParams("nozzle_n and cells_per_pitch must be positive".into()));
        }
        if self.term_coverage_max > 1.0 {
            return Err(Error::InvalidParams("term_coverage_max must not exceed 1".into()));
        }
        if self.cfl_number > 0.25 {
            return Err(Error::InvalidParams(format!(
                "cfl_number {} above 0.25 cannot guarantee positivity of the 2D donor-cell update",
                self.cfl_number
            )));
        }
        if self.solver_max_iter == Some(0) {
            return Err(Error::InvalidParams("solver_max_iter must be positive".into()));
        }
        if self.term_h_min >= self.initial_gap {
            return Err(Error::InvalidParams("term_h_min must be below initial_gap".into()));
        }
        Ok(())
    }

    /// Parse a parameter file: one `key = value` per line, `#` comments,
    /// keys named after the struct fields. Unlisted keys keep their defaults.
    pub fn from_kv_str(text: &str, origin: &Path) -> Result<Self> {
        let mut p = SimParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(origin, lineno + 1, "expected key = value"));
            };
            let (key, value) = (key.trim(), value.trim());
            p.set(key, value)
                .map_err(|msg| Error::parse(origin, lineno + 1, msg))?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text, path)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for {key}"))
        }
        match key {
            "viscosity" => self.viscosity = num(key, value)?,
            "surface_tension" => self.surface_tension = num(key, value)?,
            "contact_angle_cos_sum" => self.contact_angle_cos_sum = num(key, value)?,
            "droplet_volume" => self.droplet_volume = num(key, value)?,
            "initial_gap" => self.initial_gap = num(key, value)?,
            "h_ref" => self.h_ref = num(key, value)?,
            "external_force" => self.external_force = num(key, value)?,
            "nozzle_n" => self.nozzle_n = num(key, value)?,
            "nozzle_pitch" => self.nozzle_pitch = num(key, value)?,
            "cells_per_pitch" => self.cells_per_pitch = num(key, value)?,
            "ambient_pressure" => self.ambient_pressure = num(key, value)?,
            "term_coverage_max" => self.term_coverage_max = num(key, value)?,
            "term_time_max" => self.term_time_max = num(key, value)?,
            "term_h_min" => self.term_h_min = num(key, value)?,
            "cfl_number" => self.cfl_number = num(key, value)?,
            "gap_change_per_step_max" => self.gap_change_per_step_max = num(key, value)?,
            "wet_threshold" => self.wet_threshold = num(key, value)?,
            "solver_tol" => self.solver_tol = num(key, value)?,
            "solver_max_iter" => self.solver_max_iter = Some(num(key, value)?),
            "interface_model" => self.interface_model = value.parse()?,
            "advection_scheme" => self.advection_scheme = value.parse()?,
            "grid_n" | "cell_size" => {
                return Err(format!("{key} is derived from nozzle_n, nozzle_pitch and cells_per_pitch"))
            }
            other => return Err(format!("unknown parameter '{other}'")),
        }
        Ok(())
    }

    /// Render every field as a parameter file that [`SimParams::from_kv_str`]
    /// reads back unchanged.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("viscosity", format!("{:e}", self.viscosity));
        put("surface_tension", format!("{:e}", self.surface_tension));
        put("contact_angle_cos_sum", format!("{}", self.contact_angle_cos_sum));
        put("droplet_volume", format!("{:e}", self.droplet_volume));
        put("initial_gap", format!("{:e}", self.initial_gap));
        put("h_ref", format!("{:e}", self.h_ref));
        put("external_force", format!("{:e}", self.external_force));
        put("nozzle_n", self.nozzle_n.to_string());
        put("nozzle_pitch", format!("{:e}", self.nozzle_pitch));
        put("cells_per_pitch", self.cells_per_pitch.to_string());
        put("ambient_pressure", format!("{}", self.ambient_pressure));
        put("term_coverage_max", format!("{}", self.term_coverage_max));
        put("term_time_max", format!("{}", self.term_time_max));
        put("term_h_min", format!("{:e}", self.term_h_min));
        put("cfl_number", format!("{}", self.cfl_number));
        put("gap_change_per_step_max", format!("{}", self.gap_change_per_step_max));
        put("wet_threshold", format!("{}", self.wet_threshold));
        put("solver_tol", format!("{:e}", self.solver_tol));
        if let Some(it) = self.solver_max_iter {
            put("solver_max_iter", it.to_string());
        }
        put("interface_model", self.interface_model.as_str().to_string());
        put("advection_scheme", self.advection_scheme.as_str().to_string());
        s
    }
}
