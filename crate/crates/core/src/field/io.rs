use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::profile::{FieldProfile, ZetaProfile};
use super::solver::Grid2D;
use crate::error::{invalid, Result};

/// Writes node potentials as little-endian f64, row-major with x fastest,
/// plus a `key=value` text sidecar describing the layout.
pub fn write_grid(g: &Grid2D, bin: &Path, sidecar: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(g.potential.len() * 8);
    for v in &g.potential {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(bin, bytes)?;
    fs::write(sidecar, grid_sidecar(g))?;
    Ok(())
}

pub fn grid_sidecar(g: &Grid2D) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format=f64-le-row-major-x-fastest");
    let _ = writeln!(s, "nx_nodes={}", g.nx + 1);
    let _ = writeln!(s, "nz_nodes={}", g.nz + 1);
    let _ = writeln!(s, "spacing={}", g.spacing);
    let _ = writeln!(s, "x_min={}", g.x_min);
    let _ = writeln!(s, "z_min={}", g.z_min);
    let _ = writeln!(s, "top_surface={}", g.top_surface);
    let _ = writeln!(s, "snap_distance={}", g.snap_distance);
    let _ = writeln!(s, "iterations={}", g.iterations);
    let _ = writeln!(s, "residual={}", g.residual);
    s
}

pub fn read_grid(bin: &Path, sidecar: &Path) -> Result<Grid2D> {
    let text = fs::read_to_string(sidecar)?;
    let get = |key: &'static str| -> Result<&str> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| invalid(key, "missing from grid sidecar"))
    };
    let num = |key: &'static str| -> Result<f64> {
        get(key)?
            .trim()
            .parse()
            .map_err(|_| invalid(key, "not a number"))
    };
    let int = |key: &'static str| -> Result<usize> {
        get(key)?
            .trim()
            .parse()
            .map_err(|_| invalid(key, "not an integer"))
    };
    let (nxn, nzn) = (int("nx_nodes")?, int("nz_nodes")?);
    let bytes = fs::read(bin)?;
    if nxn < 2 || nzn < 2 || bytes.len() != nxn * nzn * 8 {
        return Err(invalid("grid", "binary size does not match the sidecar"));
    }
    let potential = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Grid2D {
        nx: nxn - 1,
        nz: nzn - 1,
        spacing: num("spacing")?,
        x_min: num("x_min")?,
        z_min: num("z_min")?,
        potential,
        snap_distance: num("snap_distance")?,
        top_surface: num("top_surface")?,
        iterations: int("iterations")?,
        residual: num("residual")?,
        residual_history: Vec::new(),
    })
}

/// Tab-separated profile with `#` header lines for height, spacing and
/// residual. Columns: x, E_x, E_z and, when given, E_zeta.
pub fn write_profile(p: &FieldProfile, zeta: Option<&ZetaProfile>, path: &Path) -> Result<()> {
    if let Some(z) = zeta {
        if z.values.len() != p.x.len() {
            return Err(invalid("zeta profile", "length differs from the field profile"));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# height={}", p.height);
    let _ = writeln!(s, "# spacing={}", p.spacing);
    let _ = writeln!(s, "# residual={}", p.residual);
    s.push_str(if zeta.is_some() {
        "x\tex\tez\te_zeta\n"
    } else {
        "x\tex\tez\n"
    });
    for i in 0..p.x.len() {
        let _ = write!(s, "{}\t{}\t{}", p.x[i], p.ex[i], p.ez[i]);
        if let Some(z) = zeta {
            let _ = write!(s, "\t{}", z.values[i]);
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_is_bit_exact() {
        let g = Grid2D {
            nx: 2,
            nz: 1,
            spacing: 0.1,
            x_min: -0.1,
            z_min: -0.05,
            potential: vec![0.0, 1.0 / 3.0, -2.5, 1e-300, 7.0, f64::MIN_POSITIVE],
            snap_distance: 0.0,
            top_surface: 0.05,
            iterations: 3,
            residual: 1.5e-11,
            residual_history: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let (b, m) = (dir.path().join("g.bin"), dir.path().join("g.txt"));
        write_grid(&g, &b, &m).unwrap();
        let back = read_grid(&b, &m).unwrap();
        assert_eq!(back, g);
    }
}
