use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis-aligned conductor cross-section held at a fixed potential (V).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conductor {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub potential: f64,
}

impl Conductor {
    fn overlaps(&self, o: &Conductor) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.z0 < o.z1 && o.z0 < self.z1
    }
}

/// Rectangular solution domain (um); the solver may enlarge it to a
/// multigrid-friendly cell count but never shrinks it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

/// 2-D cross-section: conductors in a medium of permittivity 1 above z = 0
/// and `substrate_permittivity` below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeGeometry2D {
    pub conductors: Vec<Conductor>,
    pub substrate_permittivity: f64,
    pub domain: Domain,
}

/// Coplanar three-electrode layout: grounded | gap | biased | gap | grounded,
/// centered on x = 0 and sitting on the substrate at z = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceLayout {
    pub center_width: f64,
    pub outer_width: f64,
    pub gap: f64,
    pub thickness: f64,
    pub bias: f64,
    pub substrate_permittivity: f64,
    /// Distance from the device to the grounded far boundary.
    pub padding: f64,
}

impl Default for DeviceLayout {
    fn default() -> Self {
        DeviceLayout {
            center_width: 2.0,
            outer_width: 2.0,
            gap: 0.5,
            thickness: 0.15,
            bias: 1.0,
            substrate_permittivity: 3.8,
            padding: 10.0,
        }
    }
}

impl DeviceLayout {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("center_width", self.center_width),
            ("outer_width", self.outer_width),
            ("gap", self.gap),
            ("thickness", self.thickness),
            ("substrate_permittivity", self.substrate_permittivity),
            ("padding", self.padding),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.bias.is_finite() {
            return Err(invalid("bias", "must be finite"));
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.center_width + self.gap + self.outer_width
    }

    /// Inner edges of the gap on the positive side: (center edge, outer edge).
    pub fn gap_edges(&self) -> (f64, f64) {
        let c = 0.5 * self.center_width;
        (c, c + self.gap)
    }

    pub fn geometry(&self) -> Result<ElectrodeGeometry2D> {
        self.validate()?;
        let c = 0.5 * self.center_width;
        let o = c + self.gap;
        let w = self.half_width();
        let t = self.thickness;
        let rect = |x0, x1, potential| Conductor {
            x0,
            x1,
            z0: 0.0,
            z1: t,
            potential,
        };
        let geom = ElectrodeGeometry2D {
            conductors: vec![rect(-w, -o, 0.0), rect(-c, c, self.bias), rect(o, w, 0.0)],
            substrate_permittivity: self.substrate_permittivity,
            domain: Domain {
                x_min: -w - self.padding,
                x_max: w + self.padding,
                z_min: -self.padding,
                z_max: t + self.padding,
            },
        };
        geom.validate()?;
        Ok(geom)
    }
}

impl ElectrodeGeometry2D {
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.x_max > d.x_min && d.z_max > d.z_min) {
            return Err(invalid("domain", "extent must be positive"));
        }
        if !(d.z_min < 0.0 && d.z_max > 0.0) {
            return Err(invalid("domain", "must contain the substrate surface z = 0"));
        }
        if !(self.substrate_permittivity > 0.0 && self.substrate_permittivity.is_finite()) {
            return Err(invalid("substrate_permittivity", "must be positive"));
        }
        for (k, c) in self.conductors.iter().enumerate() {
            let coords = [c.x0, c.x1, c.z0, c.z1, c.potential];
            if !coords.iter().all(|v| v.is_finite()) {
                return Err(invalid("conductors", format!("conductor {k} has a non-finite value")));
            }
            if !(c.x1 >= c.x0 && c.z1 >= c.z0) {
                return Err(invalid("conductors", format!("conductor {k} has negative extent")));
            }
            if c.x0 <= d.x_min || c.x1 >= d.x_max || c.z0 <= d.z_min || c.z1 >= d.z_max {
                return Err(invalid("conductors", format!("conductor {k} touches the domain edge")));
            }
            for (m, o) in self.conductors.iter().enumerate().skip(k + 1) {
                if c.overlaps(o) {
                    return Err(invalid("conductors", format!("conductors {k} and {m} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Highest conductor surface, the reference for probe heights.
    pub fn top_surface(&self) -> f64 {
        self.conductors
            .iter()
            .map(|c| c.z1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_potentials(&self, potentials: &[f64]) -> Result<Self> {
        if potentials.len() != self.conductors.len() {
            return Err(invalid("potentials", "one value per conductor"));
        }
        let mut g = self.clone();
        for (c, &v) in g.conductors.iter_mut().zip(potentials) {
            c.potential = v;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_device_is_symmetric() {
        let g = DeviceLayout::default().geometry().unwrap();
        assert_eq!(g.conductors.len(), 3);
        assert_eq!(g.conductors[0].x1, -g.conductors[2].x0);
        assert_eq!(g.conductors[1].x1 - g.conductors[1].x0, 2.0);
        assert_eq!(g.top_surface(), 0.15);
        assert_eq!(g.domain.x_max, 13.5);
    }

    #[test]
    fn overlap_rejected() {
        let mut g = DeviceLayout::default().geometry().unwrap();
        g.conductors[1].x1 = g.conductors[2].x0 + 0.1;
        assert!(g.validate().is_err());
    }
}
