use serde::{Deserialize, Serialize};

use super::geometry::ElectrodeGeometry2D;
use crate::error::{invalid, Error, Result};

/// Node potentials on a uniform vertex grid, row-major with x fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// Cell counts; there are `nx + 1` by `nz + 1` nodes.
    pub nx: usize,
    pub nz: usize,
    pub spacing: f64,
    pub x_min: f64,
    pub z_min: f64,
    pub potential: Vec<f64>,
    /// Largest distance any conductor edge moved when snapped to the grid.
    pub snap_distance: f64,
    /// Snapped height of the highest conductor surface.
    pub top_surface: f64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

impl Grid2D {
    pub fn row_len(&self) -> usize {
        self.nx + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.spacing
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx)
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.nz)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.potential[j * (self.nx + 1) + i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Red-black Gauss-Seidel sweeps before and after each coarse correction.
    pub smoothing_sweeps: usize,
    pub coarse_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 400,
            smoothing_sweeps: 2,
            coarse_sweeps: 40,
        }
    }
}

pub const MIN_TOLERANCE: f64 = 1e-10;

pub fn solve_laplace(geom: &ElectrodeGeometry2D, spacing: f64, tol: f64) -> Result<Grid2D> {
    solve_laplace_with(geom, spacing, tol, &SolverOptions::default())
}

/// Conjugate gradients on the finite-volume Laplacian, preconditioned by one
/// multigrid V-cycle with symmetric red-black Gauss-Seidel smoothing.
/// Stops when both the largest update and the largest node residual,
/// expressed in volts and divided by the largest conductor potential, fall
/// below `tol`.
pub fn solve_laplace_with(
    geom: &ElectrodeGeometry2D,
    spacing: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<Grid2D> {
    geom.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid("spacing", format!("must be positive, got {spacing}")));
    }
    if !(MIN_TOLERANCE..1.0).contains(&tol) {
        return Err(invalid("tolerance", format!("must lie in [1e-10, 1), got {tol}")));
    }
    let layout = Layout::new(geom, spacing)?;
    let mut u = layout.dirichlet.clone();
    let vscale = geom
        .conductors
        .iter()
        .map(|c| c.potential.abs())
        .fold(0.0, f64::max);
    let mut grid = Grid2D {
        nx: layout.nx,
        nz: layout.nz,
        spacing,
        x_min: layout.x_min,
        z_min: layout.z_min,
        potential: Vec::new(),
        snap_distance: layout.snap_distance,
        top_surface: layout.top_surface,
        iterations: 0,
        residual: 0.0,
        residual_history: Vec::new(),
    };
    if vscale == 0.0 {
        grid.potential = u;
        return Ok(grid);
    }

    let mut mg = Multigrid::new(layout.level0(geom), *opts);
    let fine = &mg.levels[0];
    let n = u.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];

    fine.residual_of(&u, &mut r);
    mg.apply(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();

    for it in 1..=opts.max_iterations {
        let fine = &mg.levels[0];
        fine.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        let mut update = 0.0f64;
        for k in 0..n {
            let du = alpha * p[k];
            u[k] += du;
            r[k] -= alpha * q[k];
            update = update.max(du.abs());
        }
        let update = update / vscale;
        let res = fine.scaled_residual(&r) / vscale;
        history.push(res);
        if update < tol && res < tol {
            // Confirm against the true residual, not the recurrence.
            fine.residual_of(&u, &mut r);
            let true_res = fine.scaled_residual(&r) / vscale;
            if true_res < tol {
                grid.potential = u;
                grid.iterations = it;
                grid.residual = true_res;
                grid.residual_history = history;
                return Ok(grid);
            }
            mg.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        mg.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NotConverged {
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest count >= `needed` of the form m * 2^k with m <= `max_coarse`,
/// for a fixed `k`.
fn round_up(needed: usize, k: u32) -> usize {
    let step = 1usize << k;
    needed.div_ceil(step) * step
}

struct Layout {
    nx: usize,
    nz: usize,
    x_min: f64,
    z_min: f64,
    /// Row index of the substrate surface.
    interface: usize,
    dirichlet: Vec<f64>,
    fixed: Vec<bool>,
    snap_distance: f64,
    top_surface: f64,
}

impl Layout {
    fn new(geom: &ElectrodeGeometry2D, h: f64) -> Result<Self> {
        let d = &geom.domain;
        let eps = 1e-9;
        let need_x = ((d.x_max - d.x_min) / h - eps).ceil().max(4.0) as usize;
        let below = (-d.z_min / h - eps).ceil().max(1.0) as usize;
        let above = (d.z_max / h - eps).ceil().max(1.0) as usize;
        let need_z = below + above;
        // Coarsen both directions together down to a few cells.
        let k = ((need_x.min(need_z) as f64 / 4.0).log2().floor().max(1.0)) as u32;
        let nx = round_up(need_x, k);
        let nz = round_up(need_z, k);
        let x_c = (0.5 * (d.x_min + d.x_max) / h).round() * h;
        let x_min = x_c - (nx / 2) as f64 * h;
        let z_min = -(below as f64) * h;
        let row = nx + 1;

        let mut dirichlet = vec![0.0; row * (nz + 1)];
        let mut fixed = vec![false; row * (nz + 1)];
        let mut owner: Vec<Option<f64>> = vec![None; row * (nz + 1)];
        for i in 0..=nx {
            fixed[i] = true;
            fixed[nz * row + i] = true;
        }
        for j in 0..=nz {
            fixed[j * row] = true;
            fixed[j * row + nx] = true;
        }
        let mut snap: f64 = 0.0;
        let mut top = f64::NEG_INFINITY;
        for (ci, c) in geom.conductors.iter().enumerate() {
            let sx = |x: f64| ((x - x_min) / h).round();
            let sz = |z: f64| ((z - z_min) / h).round();
            let (i0, i1, j0, j1) = (sx(c.x0), sx(c.x1), sz(c.z0), sz(c.z1));
            snap = snap
                .max((x_min + i0 * h - c.x0).abs())
                .max((x_min + i1 * h - c.x1).abs())
                .max((z_min + j0 * h - c.z0).abs())
                .max((z_min + j1 * h - c.z1).abs());
            top = top.max(z_min + j1 * h);
            let (i0, i1, j0, j1) = (i0 as usize, i1 as usize, j0 as usize, j1 as usize);
            if i0 == 0 || j0 == 0 || i1 >= nx || j1 >= nz {
                return Err(invalid("conductors", format!("conductor {ci} reaches the boundary")));
            }
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let k = j * row + i;
                    if let Some(v) = owner[k] {
                        if v != c.potential {
                            return Err(invalid(
                                "conductors",
                                format!("conductor {ci} touches another conductor on the grid"),
                            ));
                        }
                    }
                    owner[k] = Some(c.potential);
                    fixed[k] = true;
                    dirichlet[k] = c.potential;
                }
            }
        }
        Ok(Layout {
            nx,
            nz,
            x_min,
            z_min,
            interface: below,
            dirichlet,
            fixed,
            snap_distance: snap,
            top_surface: if top.is_finite() { top } else { 0.0 },
        })
    }

    fn level0(&self, geom: &ElectrodeGeometry2D) -> Level {
        let mut eps = vec![1.0; self.nx * self.nz];
        for j in 0..self.interface {
            for i in 0..self.nx {
                eps[j * self.nx + i] = geom.substrate_permittivity;
            }
        }
        Level::new(self.nx, self.nz, eps, self.fixed.clone())
    }
}

struct Level {
    nx: usize,
    nz: usize,
    /// Cell permittivities, nx * nz.
    eps: Vec<f64>,
    fixed: Vec<bool>,
    /// Coefficient of the edge from node k to k + 1 and to k + row.
    ae: Vec<f64>,
    an: Vec<f64>,
    diag: Vec<f64>,
    colors: [Vec<usize>; 2],
}

impl Level {
    fn new(nx: usize, nz: usize, eps: Vec<f64>, fixed: Vec<bool>) -> Level {
        let row = nx + 1;
        let n = row * (nz + 1);
        let cell = |i: isize, j: isize| -> Option<f64> {
            if i < 0 || j < 0 || i >= nx as isize || j >= nz as isize {
                None
            } else {
                Some(eps[j as usize * nx + i as usize])
            }
        };
        let pair = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0.0,
        };
        let mut ae = vec![0.0; n];
        let mut an = vec![0.0; n];
        for j in 0..=nz {
            for i in 0..=nx {
                let (ii, jj) = (i as isize, j as isize);
                let k = j * row + i;
                if i < nx {
                    ae[k] = pair(cell(ii, jj - 1), cell(ii, jj));
                }
                if j < nz {
                    an[k] = pair(cell(ii - 1, jj), cell(ii, jj));
                }
            }
        }
        let mut diag = vec![0.0; n];
        let mut colors = [Vec::new(), Vec::new()];
        for j in 1..nz {
            for i in 1..nx {
                let k = j * row + i;
                diag[k] = ae[k] + ae[k - 1] + an[k] + an[k - row];
                if !fixed[k] {
                    colors[(i + j) % 2].push(k);
                }
            }
        }
        Level {
            nx,
            nz,
            eps,
            fixed,
            ae,
            an,
            diag,
            colors,
        }
    }

    fn row(&self) -> usize {
        self.nx + 1
    }

    fn len(&self) -> usize {
        (self.nx + 1) * (self.nz + 1)
    }

    fn coarsen(&self) -> Option<Level> {
        if self.nx % 2 != 0 || self.nz % 2 != 0 || self.nx < 8 || self.nz < 8 {
            return None;
        }
        let (cx, cz) = (self.nx / 2, self.nz / 2);
        let mut eps = vec![0.0; cx * cz];
        for j in 0..cz {
            for i in 0..cx {
                let f = |a: usize, b: usize| self.eps[(2 * j + b) * self.nx + 2 * i + a];
                eps[j * cx + i] = 0.25 * (f(0, 0) + f(1, 0) + f(0, 1) + f(1, 1));
            }
        }
        let crow = cx + 1;
        let mut fixed = vec![false; crow * (cz + 1)];
        for j in 0..=cz {
            for i in 0..=cx {
                fixed[j * crow + i] = self.fixed[2 * j * self.row() + 2 * i];
            }
        }
        Some(Level::new(cx, cz, eps, fixed))
    }

    #[inline]
    fn neighbors(&self, x: &[f64], k: usize) -> f64 {
        let row = self.row();
        self.ae[k] * x[k + 1] + self.ae[k - 1] * x[k - 1] + self.an[k] * x[k + row]
            + self.an[k - row] * x[k - row]
    }

    /// out = A x on free nodes, zero elsewhere. `x` must vanish on fixed nodes.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for c in &self.colors {
            for &k in c {
                out[k] = self.diag[k] * x[k] - self.neighbors(x, k);
            }
        }
    }

    /// r = -A u on free nodes for a full potential including Dirichlet values.
    fn residual_of(&self, u: &[f64], r: &mut [f64]) {
        r.iter_mut().for_each(|v| *v = 0.0);
        for c in &self.colors {
            for &k in c {
                r[k] = self.neighbors(u, k) - self.diag[k] * u[k];
            }
        }
    }

    fn scaled_residual(&self, r: &[f64]) -> f64 {
        self.colors
            .iter()
            .flatten()
            .map(|&k| (r[k] / self.diag[k]).abs())
            .fold(0.0, f64::max)
    }

    fn sweep(&self, color: usize, e: &mut [f64], rhs: &[f64]) {
        for &k in &self.colors[color] {
            e[k] = (rhs[k] + self.neighbors(e, k)) / self.diag[k];
        }
    }
}

struct Work {
    e: Vec<f64>,
    rhs: Vec<f64>,
    tmp: Vec<f64>,
}

struct Multigrid {
    levels: Vec<Level>,
    work: Vec<Work>,
    opts: SolverOptions,
}

impl Multigrid {
    fn new(fine: Level, opts: SolverOptions) -> Self {
        let mut levels = vec![fine];
        while let Some(c) = levels.last().unwrap().coarsen() {
            levels.push(c);
        }
        let work = levels
            .iter()
            .map(|l| Work {
                e: vec![0.0; l.len()],
                rhs: vec![0.0; l.len()],
                tmp: vec![0.0; l.len()],
            })
            .collect();
        Multigrid {
            levels,
            work,
            opts,
        }
    }

    /// z = M^-1 r, a symmetric positive definite approximation of A^-1.
    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        self.work[0].rhs.copy_from_slice(r);
        self.vcycle(0);
        z.copy_from_slice(&self.work[0].e);
    }

    fn vcycle(&mut self, l: usize) {
        let last = l + 1 == self.levels.len();
        let sweeps = if last {
            self.opts.coarse_sweeps
        } else {
            self.opts.smoothing_sweeps
        };
        {
            let lev = &self.levels[l];
            let w = &mut self.work[l];
            w.e.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..sweeps {
                lev.sweep(0, &mut w.e, &w.rhs);
                lev.sweep(1, &mut w.e, &w.rhs);
            }
        }
        if !last {
            {
                let (head, tail) = self.work.split_at_mut(l + 1);
                let w = &mut head[l];
                let lev = &self.levels[l];
                lev.apply(&w.e, &mut w.tmp);
                for &k in lev.colors.iter().flatten() {
                    w.tmp[k] = w.rhs[k] - w.tmp[k];
                }
                restrict(lev, &self.levels[l + 1], &w.tmp, &mut tail[0].rhs);
            }
            self.vcycle(l + 1);
            let (head, tail) = self.work.split_at_mut(l + 1);
            prolong_add(&self.levels[l], &self.levels[l + 1], &tail[0].e, &mut head[l].e);
        }
        let lev = &self.levels[l];
        let w = &mut self.work[l];
        for _ in 0..sweeps {
            lev.sweep(1, &mut w.e, &w.rhs);
            lev.sweep(0, &mut w.e, &w.rhs);
        }
    }
}

const W: [f64; 3] = [0.5, 1.0, 0.5];

/// Transpose of bilinear prolongation.
fn restrict(fine: &Level, coarse: &Level, rf: &[f64], rc: &mut [f64]) {
    let frow = fine.row();
    let crow = coarse.row();
    rc.iter_mut().for_each(|v| *v = 0.0);
    for c in &coarse.colors {
        for &kc in c {
            let (ic, jc) = (kc % crow, kc / crow);
            let (i, j) = (2 * ic, 2 * jc);
            let mut s = 0.0;
            for (b, wz) in W.iter().enumerate() {
                let base = (j + b - 1) * frow + i - 1;
                for (a, wx) in W.iter().enumerate() {
                    s += wx * wz * rf[base + a];
                }
            }
            rc[kc] = s;
        }
    }
}

fn prolong_add(fine: &Level, coarse: &Level, ec: &[f64], ef: &mut [f64]) {
    let frow = fine.row();
    let crow = coarse.row();
    for c in &fine.colors {
        for &k in c {
            let (i, j) = (k % frow, k / frow);
            let (ic, jc) = (i / 2, j / 2);
            let v = match (i % 2, j % 2) {
                (0, 0) => ec[jc * crow + ic],
                (1, 0) => 0.5 * (ec[jc * crow + ic] + ec[jc * crow + ic + 1]),
                (0, 1) => 0.5 * (ec[jc * crow + ic] + ec[(jc + 1) * crow + ic]),
                _ => {
                    0.25 * (ec[jc * crow + ic]
                        + ec[jc * crow + ic + 1]
                        + ec[(jc + 1) * crow + ic]
                        + ec[(jc + 1) * crow + ic + 1])
                }
            };
            ef[k] += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::geometry::{Conductor, DeviceLayout, Domain};

    fn plates(v: f64, d: f64) -> ElectrodeGeometry2D {
        let plate = |z0: f64, potential| Conductor {
            x0: -4.0,
            x1: 4.0,
            z0,
            z1: z0 + 0.1,
            potential,
        };
        ElectrodeGeometry2D {
            conductors: vec![plate(-0.1 - 0.5 * d, 0.0), plate(0.5 * d, v)],
            substrate_permittivity: 1.0,
            domain: Domain {
                x_min: -4.5,
                x_max: 4.5,
                z_min: -1.0,
                z_max: 1.0,
            },
        }
    }

    #[test]
    fn parallel_plate_potential_is_linear() {
        let g = solve_laplace(&plates(2.0, 0.4), 0.025, 1e-10).unwrap();
        assert!(g.residual < 1e-10);
        let i = g.nx / 2;
        let j0 = ((-0.2 - g.z_min) / g.spacing).round() as usize;
        for j in j0..=j0 + 16 {
            let expect = 2.0 * (g.z(j) + 0.2) / 0.4;
            assert!((g.value(i, j) - expect).abs() < 1e-6, "{} {}", g.value(i, j), expect);
        }
    }

    #[test]
    fn mirror_symmetry_of_default_device() {
        let geom = DeviceLayout::default().geometry().unwrap();
        let g = solve_laplace(&geom, 0.05, 1e-10).unwrap();
        assert!(g.snap_distance < 1e-12);
        assert!(g.x(g.nx / 2).abs() < 1e-12);
        for j in 0..=g.nz {
            for i in 0..=g.nx / 2 {
                let a = g.value(i, j);
                let b = g.value(g.nx - i, j);
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_tiny_tolerance() {
        let geom = DeviceLayout::default().geometry().unwrap();
        assert!(solve_laplace(&geom, 0.05, 1e-12).is_err());
    }

    #[test]
    fn iteration_cap_reports_history() {
        let geom = DeviceLayout::default().geometry().unwrap();
        let opts = SolverOptions {
            max_iterations: 2,
            ..Default::default()
        };
        match solve_laplace_with(&geom, 0.05, 1e-10, &opts) {
            Err(Error::NotConverged { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
