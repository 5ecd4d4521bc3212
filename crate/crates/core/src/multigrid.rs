//! Aggregation multigrid V-cycle used to precondition the wet-cell CG solve.
//!
//! A coarse unknown is the union of the fine unknowns in one 2×2 block of
//! the grid. On an even-sided grid a 90° rotation maps blocks onto blocks,
//! and every stencil or block sum below is sorted, so the preconditioner
//! commutes with rotation exactly. Coarse operators are Galerkin products
//! `PᵀAP` with piecewise-constant `P`. Smoothing is damped Jacobi with the
//! same sweeps before and after the coarse correction, which keeps the cycle
//! symmetric positive definite as CG requires.

use crate::numerics::sorted_sum;
use crate::pressure::DIRS;

const NONE: u32 = u32::MAX;
/// Jacobi damping.
const OMEGA: f64 = 0.8;
/// Sweeps before and after each coarse correction.
const SMOOTH: usize = 2;
/// Coarsen while a level has more unknowns than this.
const COARSEST: usize = 32;

/// `A x = diag·x − Σ_k w_k·x_{nb_k}` over the unknowns of one level.
#[derive(Clone, Debug)]
pub(crate) struct Level {
    side: usize,
    /// Grid index of each unknown.
    cells: Vec<u32>,
    nbrs: Vec<[u32; 4]>,
    weights: Vec<[f64; 4]>,
    diag: Vec<f64>,
}

impl Level {
    pub(crate) fn new(side: usize, cells: Vec<u32>, nbrs: Vec<[u32; 4]>, weights: Vec<[f64; 4]>, diag: Vec<f64>) -> Self {
        Level {
            side,
            cells,
            nbrs,
            weights,
            diag,
        }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    fn row(&self, i: usize, x: &[f64]) -> f64 {
        let nb = &self.nbrs[i];
        let w = &self.weights[i];
        let mut t = [0.0; 4];
        for k in 0..4 {
            if nb[k] != NONE {
                t[k] = w[k] * x[nb[k] as usize];
            }
        }
        self.diag[i] * x[i] - sorted_sum(t)
    }

    /// Block-aggregated level, and for each coarse unknown its up to four
    /// fine unknowns.
    fn coarsen(&self) -> Option<(Level, Vec<u32>)> {
        let n = self.side;
        if n % 2 != 0 || self.len() <= COARSEST {
            return None;
        }
        let m = n / 2;
        let block_of = |cell: u32| {
            let (r, c) = (cell as usize / n, cell as usize % n);
            (r / 2) * m + c / 2
        };
        let mut slot = vec![NONE; m * m];
        let mut parent = Vec::with_capacity(self.len());
        let mut coarse_cells = Vec::new();
        let mut children: Vec<[u32; 4]> = Vec::new();
        for (i, &cell) in self.cells.iter().enumerate() {
            let b = block_of(cell);
            if slot[b] == NONE {
                slot[b] = coarse_cells.len() as u32;
                coarse_cells.push(b as u32);
                children.push([NONE; 4]);
            }
            let (r, c) = (cell as usize / n, cell as usize % n);
            children[slot[b] as usize][(r % 2) * 2 + c % 2] = i as u32;
            parent.push(slot[b]);
        }
        let mut nbrs = Vec::with_capacity(coarse_cells.len());
        let mut weights = Vec::with_capacity(coarse_cells.len());
        let mut diag = Vec::with_capacity(coarse_cells.len());
        for (ci, &b) in coarse_cells.iter().enumerate() {
            let (br, bc) = (b as usize / m, b as usize % m);
            let mut dsum = [0.0; 4];
            let mut internal = [0.0; 16];
            // per direction, per child slot
            let mut across = [[0.0; 4]; 4];
            for (s, &i) in children[ci].iter().enumerate() {
                if i == NONE {
                    continue;
                }
                let i = i as usize;
                dsum[s] = self.diag[i];
                for k in 0..4 {
                    let j = self.nbrs[i][k];
                    if j == NONE {
                        continue;
                    }
                    if parent[j as usize] as usize == ci {
                        internal[s * 4 + k] = self.weights[i][k];
                    } else {
                        across[k][s] = self.weights[i][k];
                    }
                }
            }
            let mut nb = [NONE; 4];
            let mut w = [0.0; 4];
            for (k, &(dr, dc)) in DIRS.iter().enumerate() {
                let wk = sorted_sum(across[k]);
                if wk == 0.0 {
                    continue;
                }
                let (a, c) = (br as isize + dr, bc as isize + dc);
                let nbk = slot[a as usize * m + c as usize];
                debug_assert!(nbk != NONE);
                nb[k] = nbk;
                w[k] = wk;
            }
            nbrs.push(nb);
            weights.push(w);
            diag.push(sorted_sum(dsum) - sorted_sum(internal));
        }
        Some((Level::new(m, coarse_cells, nbrs, weights, diag), parent))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Hierarchy {
    levels: Vec<Level>,
    /// `parents[l][i]`: the level-`l+1` unknown holding unknown `i` of level `l`.
    parents: Vec<Vec<u32>>,
    // per-level work vectors: right-hand side, solution, residual
    b: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl Hierarchy {
    pub(crate) fn new(fine: Level) -> Self {
        let mut levels = vec![fine];
        let mut parents = Vec::new();
        while let Some((coarse, parent)) = levels.last().unwrap().coarsen() {
            levels.push(coarse);
            parents.push(parent);
        }
        let b = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        let x = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        let r = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        Hierarchy {
            levels,
            parents,
            b,
            x,
            r,
        }
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        self.levels.len()
    }

    fn jacobi(&mut self, l: usize, sweeps: usize) {
        let lev = &self.levels[l];
        let (x, r, b) = (&mut self.x[l], &mut self.r[l], &self.b[l]);
        for _ in 0..sweeps {
            for i in 0..lev.len() {
                r[i] = b[i] - lev.row(i, x);
            }
            for i in 0..lev.len() {
                x[i] += OMEGA * r[i] / lev.diag[i];
            }
        }
    }

    fn cycle(&mut self, l: usize) {
        self.x[l].fill(0.0);
        if l + 1 == self.levels.len() {
            // a fixed number of sweeps keeps the coarsest solve linear
            let sweeps = 4 * self.levels[l].side.max(1);
            self.jacobi(l, sweeps);
            return;
        }
        self.jacobi(l, SMOOTH);
        {
            let lev = &self.levels[l];
            let (x, r, b) = (&self.x[l], &mut self.r[l], &self.b[l]);
            for i in 0..lev.len() {
                r[i] = b[i] - lev.row(i, x);
            }
        }
        // restriction: block sums over up to four children
        let nc = self.levels[l + 1].len();
        let mut parts = vec![[0.0f64; 4]; nc];
        for (i, &p) in self.parents[l].iter().enumerate() {
            let cell = self.levels[l].cells[i] as usize;
            let n = self.levels[l].side;
            parts[p as usize][(cell / n % 2) * 2 + cell % n % 2] = self.r[l][i];
        }
        for (bc, part) in self.b[l + 1].iter_mut().zip(&parts) {
            *bc = sorted_sum(*part);
        }
        self.cycle(l + 1);
        for (i, &p) in self.parents[l].iter().enumerate() {
            self.x[l][i] += self.x[l + 1][p as usize];
        }
        self.jacobi(l, SMOOTH);
    }

    /// `z ≈ A⁻¹ r` by one V-cycle.
    pub(crate) fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        self.b[0].copy_from_slice(r);
        self.cycle(0);
        z.copy_from_slice(&self.x[0]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    /// Cell-centred Dirichlet Laplacian on the `true` cells of `wet`.
    fn level_of(wet: &Grid<bool>) -> Level {
        let n = wet.side();
        let mut slot = vec![NONE; n * n];
        let mut cells = Vec::new();
        for (i, &w) in wet.as_slice().iter().enumerate() {
            if w {
                slot[i] = cells.len() as u32;
                cells.push(i as u32);
            }
        }
        let mut nbrs = Vec::new();
        let mut weights = Vec::new();
        for &ci in &cells {
            let (r, c) = (ci as usize / n, ci as usize % n);
            let mut nb = [NONE; 4];
            let mut w = [0.0; 4];
            for (k, &(dr, dc)) in DIRS.iter().enumerate() {
                let (a, b) = (r as isize + dr, c as isize + dc);
                if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n && wet.get(a as usize, b as usize) {
                    nb[k] = slot[a as usize * n + b as usize];
                    w[k] = 1.0;
                }
            }
            nbrs.push(nb);
            weights.push(w);
        }
        let diag = vec![4.0; cells.len()];
        Level::new(n, cells, nbrs, weights, diag)
    }

    fn blob(n: usize) -> Grid<bool> {
        let mut g = Grid::filled(n, false);
        for r in 0..n {
            for c in 0..n {
                let (y, x) = (r as f64 - 13.2, c as f64 - 17.9);
                let lobe = (r as f64 - 22.0).powi(2) + (c as f64 - 8.0).powi(2) < 30.0;
                g.set(r, c, y * y + x * x < 110.0 || lobe);
            }
        }
        g
    }

    fn vector(len: usize, seed: f64) -> Vec<f64> {
        (0..len).map(|i| ((i as f64 + seed) * 0.618).sin()).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn cycle_is_symmetric_positive_definite() {
        let lev = level_of(&blob(32));
        let m = lev.len();
        let mut h = Hierarchy::new(lev);
        assert!(h.depth() >= 3);
        let (x, y) = (vector(m, 0.3), vector(m, 7.1));
        let (mut mx, mut my) = (vec![0.0; m], vec![0.0; m]);
        h.apply(&x, &mut mx);
        h.apply(&y, &mut my);
        let (a, b) = (dot(&mx, &y), dot(&x, &my));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
        assert!(dot(&mx, &x) > 0.0 && dot(&my, &y) > 0.0);
    }

    #[test]
    fn galerkin_coarse_operator() {
        let lev = level_of(&blob(32));
        let (coarse, parent) = lev.coarsen().unwrap();
        let (m, mc) = (lev.len(), coarse.len());
        // column J of A·P is A applied to the indicator of block J
        for j in 0..mc {
            let e: Vec<f64> = parent.iter().map(|&p| if p as usize == j { 1.0 } else { 0.0 }).collect();
            let ae: Vec<f64> = (0..m).map(|i| lev.row(i, &e)).collect();
            let mut col = vec![0.0; mc];
            for i in 0..m {
                col[parent[i] as usize] += ae[i];
            }
            let ec: Vec<f64> = (0..mc).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            for i in 0..mc {
                assert_eq!(coarse.row(i, &ec), col[i], "A_c[{i}][{j}]");
            }
        }
    }

    #[test]
    fn commutes_with_rotation_exactly() {
        let wet = blob(32);
        let n = wet.side();
        let lev = level_of(&wet);
        let rot = level_of(&wet.rotate90());
        let field: Vec<f64> = (0..n * n).map(|i| ((i * 7919 % 1000) as f64 * 1e-3).cos()).collect();
        let take = |cells: &[u32], g: &Grid<f64>| cells.iter().map(|&c| g.as_slice()[c as usize]).collect::<Vec<_>>();
        let g = Grid::from_vec(n, field).unwrap();
        let (x, xr) = (take(&lev.cells, &g), take(&rot.cells, &g.rotate90()));
        let cells = lev.cells.clone();
        let rcells = rot.cells.clone();
        let (mut z, mut zr) = (vec![0.0; x.len()], vec![0.0; xr.len()]);
        Hierarchy::new(lev).apply(&x, &mut z);
        Hierarchy::new(rot).apply(&xr, &mut zr);
        let mut out = Grid::filled(n, 0.0);
        for (k, &c) in cells.iter().enumerate() {
            out.as_mut_slice()[c as usize] = z[k];
        }
        let out = out.rotate90();
        for (k, &c) in rcells.iter().enumerate() {
            assert_eq!(out.as_slice()[c as usize].to_bits(), zr[k].to_bits());
        }
    }
}
