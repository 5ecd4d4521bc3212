//! Grid geometry, droplet patterns, liquid fields and droplet deposition.
//!
//! All grids are square and stored row-major. Cell `(r, c)` covers
//! `[r, r+1) × [c, c+1)` in cell units; nozzle `(i, j)` owns the cell block
//! `[k·i, k·i+k) × [k·j, k·j+k)` with `k = cells_per_pitch`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::SimParams;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    side: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(side: usize, value: T) -> Self {
        Grid {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn from_vec(side: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::Shape(format!(
                "expected {} values for a {side}x{side} grid, got {}",
                side * side,
                data.len()
            )));
        }
        Ok(Grid { side, data })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, r: usize, c: usize) -> usize {
        r * self.side + c
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.side + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        let i = r * self.side + c;
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            side: self.side,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Quarter turn clockwise: `out[r][c] = self[n-1-c][r]`.
    pub fn rotate90(&self) -> Self {
        let n = self.side;
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..n {
            for c in 0..n {
                data.push(self.get(n - 1 - c, r));
            }
        }
        Grid { side: n, data }
    }
}

/// Which nozzles fire: the low-resolution image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropPattern {
    on: Grid<bool>,
}

impl DropPattern {
    pub fn new(on: Grid<bool>) -> Result<Self> {
        if !on.as_slice().iter().any(|&b| b) {
            return Err(Error::InvalidPattern("pattern has no On pixels".into()));
        }
        Ok(DropPattern { on })
    }

    /// Build from 0-based row-major indices.
    pub fn from_indices(side: usize, indices: &[u32]) -> Result<Self> {
        let mut on = Grid::filled(side, false);
        for &i in indices {
            let i = i as usize;
            if i >= side * side {
                return Err(Error::InvalidPattern(format!("index {i} outside {side}x{side} pattern")));
            }
            on.as_mut_slice()[i] = true;
        }
        DropPattern::new(on)
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.on
    }

    pub fn side(&self) -> usize {
        self.on.side()
    }

    pub fn count(&self) -> usize {
        self.on.as_slice().iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<u32> {
        on_indices(&self.on)
    }

    pub fn is_on(&self, i: usize, j: usize) -> bool {
        self.on.get(i, j)
    }

    pub fn rotate90(&self) -> Self {
        DropPattern { on: self.on.rotate90() }
    }

    /// Pattern file: `side` lines of `side` characters in `{0,1}`.
    pub fn parse_text(text: &str, side: usize) -> Result<Self> {
        let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        if rows.len() != side {
            return Err(Error::InvalidPattern(format!("expected {side} rows, found {}", rows.len())));
        }
        let mut on = Grid::filled(side, false);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != side {
                return Err(Error::InvalidPattern(format!(
                    "row {} has {} characters, expected {side}",
                    r + 1,
                    row.len()
                )));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => on.set(r, c, true),
                    other => {
                        return Err(Error::InvalidPattern(format!(
                            "row {} column {}: unexpected character '{other}'",
                            r + 1,
                            c + 1
                        )))
                    }
                }
            }
        }
        DropPattern::new(on)
    }

    pub fn to_text(&self) -> String {
        let n = self.side();
        let mut s = String::with_capacity(n * (n + 1));
        for r in 0..n {
            for c in 0..n {
                s.push(if self.on.get(r, c) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn on_indices(g: &Grid<bool>) -> Vec<u32> {
    g.as_slice()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u32))
        .collect()
}

/// Modified volume fraction `f* = f·h/h_ref` per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VofField {
    pub f_star: Grid<f64>,
}

impl VofField {
    pub fn zeros(side: usize) -> Self {
        VofField {
            f_star: Grid::filled(side, 0.0),
        }
    }

    /// `Σ f*`, order independent.
    pub fn total(&self) -> f64 {
        crate::numerics::sum(self.f_star.as_slice())
    }

    /// Liquid volume held on the grid, m³.
    pub fn volume(&self, params: &SimParams) -> f64 {
        self.total() * params.cell_area() * params.h_ref
    }
}

/// Converts `f*` to the plain volume fraction at gap `h`.
#[inline]
pub fn fill_scale(h: f64, params: &SimParams) -> f64 {
    params.h_ref / h
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Spread time, s.
    pub t: f64,
    /// Gap, m.
    pub h: f64,
    pub vof: VofField,
    /// Liquid that has left through the open domain edges, m³.
    pub outflow_volume: f64,
    /// Liquid volume at deposition, m³.
    pub initial_volume: f64,
}

impl SimState {
    /// Fraction of cells with `f ≥ wet_threshold`.
    pub fn coverage(&self, params: &SimParams) -> f64 {
        let scale = fill_scale(self.h, params);
        let wet = self
            .vof
            .f_star
            .as_slice()
            .iter()
            .filter(|&&fs| fs * scale >= params.wet_threshold)
            .count();
        wet as f64 / self.vof.f_star.len() as f64
    }

    /// `|initial − (grid + outflow)| / initial`.
    pub fn volume_drift(&self, params: &SimParams) -> f64 {
        let now = self.vof.volume(params) + self.outflow_volume;
        (self.initial_volume - now).abs() / self.initial_volume
    }

    pub fn max_fill(&self, params: &SimParams) -> f64 {
        let scale = fill_scale(self.h, params);
        self.vof
            .f_star
            .as_slice()
            .iter()
            .fold(0.0f64, |m, &fs| m.max(fs * scale))
    }
}

/// Wet/dry map: the high-resolution image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImprintImage {
    pub wet: Grid<bool>,
}

impl ImprintImage {
    pub fn side(&self) -> usize {
        self.wet.side()
    }

    pub fn wet_fraction(&self) -> f64 {
        let n = self.wet.as_slice().iter().filter(|&&b| b).count();
        n as f64 / self.wet.len() as f64
    }

    pub fn indices(&self) -> Vec<u32> {
        on_indices(&self.wet)
    }

    pub fn from_indices(side: usize, indices: &[u32]) -> Result<Self> {
        let mut wet = Grid::filled(side, false);
        for &i in indices {
            let i = i as usize;
            if i >= side * side {
                return Err(Error::Shape(format!("index {i} outside {side}x{side} image")));
            }
            wet.as_mut_slice()[i] = true;
        }
        Ok(ImprintImage { wet })
    }
}

/// Draw `category` distinct nozzles uniformly without replacement.
pub fn make_pattern_random(category: usize, seed: u64, params: &SimParams) -> Result<DropPattern> {
    let n = params.nozzle_n;
    let total = n * n;
    if category == 0 || category > total {
        return Err(Error::CategoryOutOfRange(category, total));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, total, category);
    let mut on = Grid::filled(n, false);
    for i in picks.iter() {
        on.as_mut_slice()[i] = true;
    }
    DropPattern::new(on)
}

const SUBSAMPLES: i64 = 16;

/// Cell fractions of one disk, in units of `1/SUBSAMPLES²`, or `None` for a
/// cell whose four corners all lie inside (exactly full).
///
/// Everything is computed in integer multiples of `1/(2·SUBSAMPLES)` so that
/// mirrored and rotated placements produce identical counts.
fn rasterize_disk(
    center_r2: i64,
    center_c2: i64,
    radius: f64,
    side: usize,
    out: &mut Vec<(usize, usize, Option<u32>)>,
) {
    // center_*2 are centre coordinates in half-cell units.
    let unit = 2 * SUBSAMPLES; // subdivisions per cell
    let r_units = radius * unit as f64;
    let r2 = r_units * r_units;
    let cr = center_r2 * SUBSAMPLES; // centre in 1/unit cell units
    let cc = center_c2 * SUBSAMPLES;
    let reach = radius.ceil() as i64 + 1;
    let (cr_cell, cc_cell) = (center_r2 / 2, center_c2 / 2);
    let inside = |dr: i64, dc: i64| ((dr * dr + dc * dc) as f64) <= r2;
    for r in (cr_cell - reach).max(0)..=(cr_cell + reach).min(side as i64 - 1) {
        for c in (cc_cell - reach).max(0)..=(cc_cell + reach).min(side as i64 - 1) {
            let top = r * unit - cr;
            let left = c * unit - cc;
            let corners = [
                (top, left),
                (top + unit, left),
                (top, left + unit),
                (top + unit, left + unit),
            ];
            if corners.iter().all(|&(a, b)| inside(a, b)) {
                out.push((r as usize, c as usize, None));
                continue;
            }
            let mut count = 0u32;
            for a in 0..SUBSAMPLES {
                let dr = top + 2 * a + 1;
                for b in 0..SUBSAMPLES {
                    let dc = left + 2 * b + 1;
                    if inside(dr, dc) {
                        count += 1;
                    }
                }
            }
            if count > 0 {
                out.push((r as usize, c as usize, Some(count)));
            }
        }
    }
}

/// Deposit one cylinder of volume `V` per firing nozzle at gap `h₀`.
///
/// Partial cells come from 16×16 supersampling; their fractions are then
/// rescaled so each droplet deposits exactly `V/(cell_area·h_ref)` of `f*`
/// inside the domain. Overlaps are settled by the overfill redistribution.
pub fn init_state(dp: &DropPattern, params: &SimParams) -> Result<SimState> {
    params.validate()?;
    if dp.side() != params.nozzle_n {
        return Err(Error::Shape(format!(
            "pattern is {0}x{0}, parameters expect {1}x{1}",
            dp.side(),
            params.nozzle_n
        )));
    }
    let side = params.grid_n();
    let h0 = params.initial_gap;
    let radius = (params.droplet_volume / (std::f64::consts::PI * h0)).sqrt() / params.cell_size();
    if radius > side as f64 / 2.0 {
        return Err(Error::DropletTooLarge {
            radius_cells: radius,
            half: side / 2,
        });
    }
    let k = params.cells_per_pitch as i64;
    let target_fill = params.droplet_volume / (h0 * params.cell_area());
    let to_fstar = h0 / params.h_ref;
    let full_weight = (SUBSAMPLES * SUBSAMPLES) as f64;

    let mut vof = VofField::zeros(side);
    let mut cells = Vec::new();
    for i in 0..params.nozzle_n {
        for j in 0..params.nozzle_n {
            if !dp.is_on(i, j) {
                continue;
            }
            cells.clear();
            // block centre in half-cell units: 2·(k·i) + k
            rasterize_disk(2 * k * i as i64 + k, 2 * k * j as i64 + k, radius, side, &mut cells);
            let n_full = cells.iter().filter(|c| c.2.is_none()).count() as f64;
            let partial: u64 = cells.iter().filter_map(|c| c.2).map(u64::from).sum();
            let lambda = if partial > 0 {
                (target_fill - n_full) * full_weight / partial as f64
            } else {
                1.0
            };
            for &(r, c, w) in &cells {
                let f = match w {
                    None => 1.0,
                    Some(cnt) => lambda * cnt as f64 / full_weight,
                };
                let cur = vof.f_star.get(r, c);
                vof.f_star.set(r, c, cur + f * to_fstar);
            }
        }
    }
    let initial_volume = dp.count() as f64 * params.droplet_volume;
    crate::vof::redistribute_overfill(&mut vof.f_star, h0, params)?;
    Ok(SimState {
        t: 0.0,
        h: h0,
        vof,
        outflow_volume: 0.0,
        initial_volume,
    })
}

/// A cell is wet iff `f = f*·h_ref/h ≥ wet_threshold`.
pub fn binarize_imprint(vof: &VofField, h: f64, params: &SimParams) -> ImprintImage {
    binarize_with_threshold(vof, h, params, params.wet_threshold)
}

pub fn binarize_with_threshold(vof: &VofField, h: f64, params: &SimParams, threshold: f64) -> ImprintImage {
    let scale = fill_scale(h, params);
    ImprintImage {
        wet: vof.f_star.map(|fs| fs * scale >= threshold),
    }
}
