use serde::{Deserialize, Serialize};

use super::solver::Grid2D;
use crate::error::{invalid, Error, Result};

/// E_x, E_z (V/um) along a horizontal line `height` above the top conductor
/// surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub x: Vec<f64>,
    pub ex: Vec<f64>,
    pub ez: Vec<f64>,
    pub height: f64,
    pub spacing: f64,
    pub residual: f64,
}

/// Direction of maximum electric coupling: azimuth `phi`, zenith `theta` (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionAxis {
    pub phi: f64,
    pub theta: f64,
}

impl Default for ProjectionAxis {
    fn default() -> Self {
        ProjectionAxis {
            phi: 20f64.to_radians(),
            theta: 45f64.to_radians(),
        }
    }
}

impl ProjectionAxis {
    /// Weights (w_x, w_z) with E_zeta = w_x E_x + w_z E_z when E_y = 0.
    pub fn weights(&self) -> (f64, f64) {
        (self.phi.cos() * self.theta.sin(), self.theta.cos())
    }
}

/// Samples E = -grad V by central differences on the two grid rows that
/// bracket `top_surface + h`, interpolated linearly in z. Covers all interior
/// columns.
pub fn field_at_height(g: &Grid2D, h: f64) -> Result<FieldProfile> {
    let z = g.top_surface + h;
    let max = g.z_max() - 2.0 * g.spacing - g.top_surface;
    if !(h > 0.0 && h <= max) {
        return Err(Error::HeightOutOfDomain { h, min: 0.0, max });
    }
    let s = (z - g.z_min) / g.spacing;
    let j0 = (s.floor() as usize).min(g.nz - 2);
    let w = s - j0 as f64;
    let inv = 0.5 / g.spacing;
    let e_at = |i: usize, j: usize| {
        let ex = -(g.value(i + 1, j) - g.value(i - 1, j)) * inv;
        let ez = -(g.value(i, j + 1) - g.value(i, j - 1)) * inv;
        (ex, ez)
    };
    let n = g.nx - 1;
    let mut p = FieldProfile {
        x: Vec::with_capacity(n),
        ex: Vec::with_capacity(n),
        ez: Vec::with_capacity(n),
        height: h,
        spacing: g.spacing,
        residual: g.residual,
    };
    for i in 1..g.nx {
        let (ex0, ez0) = e_at(i, j0);
        let (ex1, ez1) = e_at(i, j0 + 1);
        p.x.push(g.x(i));
        p.ex.push(ex0 * (1.0 - w) + ex1 * w);
        p.ez.push(ez0 * (1.0 - w) + ez1 * w);
    }
    Ok(p)
}

impl FieldProfile {
    /// Restricts to samples with `lo <= x <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> FieldProfile {
        let keep: Vec<usize> = (0..self.x.len())
            .filter(|&i| self.x[i] >= lo && self.x[i] <= hi)
            .collect();
        FieldProfile {
            x: keep.iter().map(|&i| self.x[i]).collect(),
            ex: keep.iter().map(|&i| self.ex[i]).collect(),
            ez: keep.iter().map(|&i| self.ez[i]).collect(),
            height: self.height,
            spacing: self.spacing,
            residual: self.residual,
        }
    }

    pub fn scaled(&self, k: f64) -> FieldProfile {
        FieldProfile {
            ex: self.ex.iter().map(|v| v * k).collect(),
            ez: self.ez.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// E_zeta on the profile's x samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaProfile {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn project_zeta(p: &FieldProfile, axis: &ProjectionAxis) -> ZetaProfile {
    let (wx, wz) = axis.weights();
    ZetaProfile {
        x: p.x.clone(),
        values: p.ex.iter().zip(&p.ez).map(|(ex, ez)| wx * ex + wz * ez).collect(),
    }
}

/// d/dx by central differences, one-sided at the ends, after an optional
/// centered moving average of `window` samples (1 disables smoothing).
pub fn gradient_x(x: &[f64], values: &[f64], window: usize) -> Result<Vec<f64>> {
    if x.len() != values.len() || x.len() < 2 {
        return Err(invalid("profile", "need >= 2 matching samples"));
    }
    if window == 0 || window % 2 == 0 {
        return Err(invalid("smoothing_window", "must be an odd count >= 1"));
    }
    let v = smooth(values, window);
    let n = v.len();
    let mut g = Vec::with_capacity(n);
    g.push((v[1] - v[0]) / (x[1] - x[0]));
    for i in 1..n - 1 {
        g.push((v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]));
    }
    g.push((v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]));
    Ok(g)
}

fn smooth(v: &[f64], window: usize) -> Vec<f64> {
    if window == 1 {
        return v.to_vec();
    }
    let half = window / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(v.len() - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

impl ZetaProfile {
    pub fn gradient(&self, window: usize) -> Result<ZetaProfile> {
        Ok(ZetaProfile {
            x: self.x.clone(),
            values: gradient_x(&self.x, &self.values, window)?,
        })
    }

    /// Cubic (Catmull-Rom) interpolation on uniformly spaced samples.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        catmull_rom(&self.x, &self.values, x)
    }

    pub fn scaled(&self, k: f64) -> ZetaProfile {
        ZetaProfile {
            x: self.x.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }
}

/// Catmull-Rom interpolation on a uniform grid; falls back to the nearest
/// available stencil at the ends.
pub fn catmull_rom(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n < 4 {
        return Err(invalid("profile", "need >= 4 samples to interpolate"));
    }
    let (lo, hi) = (xs[0], xs[n - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::HeightOutOfDomain {
            h: x,
            min: lo,
            max: hi,
        });
    }
    let dx = (hi - lo) / (n - 1) as f64;
    let s = (x - lo) / dx;
    let k = (s.floor() as usize).clamp(1, n - 3);
    let t = s - k as f64;
    let (p0, p1, p2, p3) = (ys[k - 1], ys[k], ys[k + 1], ys[k + 2]);
    Ok(p1
        + 0.5
            * t
            * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn projection_weights() {
        let (wx, wz) = ProjectionAxis::default().weights();
        assert!((wx - 0.6645).abs() < 1e-4);
        assert!((wz - 0.7071).abs() < 1e-4);
        let z = ProjectionAxis { phi: 0.3, theta: 0.0 }.weights();
        assert_eq!(z, (0.0, 1.0));
    }

    #[test]
    fn gradient_of_polynomials() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let lin: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        for g in gradient_x(&x, &lin, 1).unwrap() {
            assert!((g - 3.0).abs() < 1e-12);
        }
        let quad: Vec<f64> = x.iter().map(|v| v * v).collect();
        let g = gradient_x(&x, &quad, 1).unwrap();
        for i in 1..10 {
            assert!((g[i] - 2.0 * x[i]).abs() < 1e-12);
        }
        assert!(gradient_x(&x, &quad, 2).is_err());
    }

    #[test]
    fn catmull_rom_is_exact_for_quadratics_and_hits_nodes() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + v - 0.3 * v * v).collect();
        for &t in &[0.5, 1.2, 2.25, 3.0] {
            let expect = 1.0 + t - 0.3 * t * t;
            assert!((catmull_rom(&x, &y, t).unwrap() - expect).abs() < 1e-12);
        }
        assert!(catmull_rom(&x, &y, 3.6).is_err());
    }
}
