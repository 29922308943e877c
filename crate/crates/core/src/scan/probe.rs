use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multi-pillar diamond probe. Pillars sit in a row; tilting the probe about
/// the contact pillar lifts the others off the sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Center-to-center pillar spacing (um).
    pub pillar_spacing: f64,
    /// End-face diameter of each pillar (um), in row order.
    pub pillar_diameters: Vec<f64>,
    pub nv_depth: f64,
    /// Tilt about the row's normal (rad); raises pillars with a higher index
    /// than the contact pillar.
    pub tilt_angle: f64,
    pub contact_pillar: usize,
    pub sensing_pillar: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            pillar_spacing: 7.0,
            pillar_diameters: vec![0.8, 0.3, 0.3, 0.3, 0.3, 0.3, 0.8],
            nv_depth: 0.04,
            tilt_angle: 0.0,
            contact_pillar: 0,
            sensing_pillar: 1,
        }
    }
}

impl ProbeConfig {
    pub fn pillar_count(&self) -> usize {
        self.pillar_diameters.len()
    }

    /// Height of pillar `k`'s lowest end-face edge above the sample.
    fn clearance(&self, k: usize) -> f64 {
        let c = self.contact_pillar;
        let lever = (k as f64 - c as f64) * self.pillar_spacing;
        let dc = self.pillar_diameters[c];
        let dk = self.pillar_diameters[k];
        (lever + 0.5 * (dc - dk)) * self.tilt_angle.tan()
    }
}

/// NV-to-sample distance (um) for `which_pillar`: the geometric standoff of
/// its end face plus the NV depth below that face.
pub fn nv_sample_distance(probe: &ProbeConfig, which_pillar: usize) -> Result<f64> {
    let n = probe.pillar_count();
    let c = probe.contact_pillar;
    if c >= n || which_pillar >= n {
        return Err(Error::ProbeGeometry(format!(
            "pillar index out of range (probe has {n} pillars)"
        )));
    }
    if which_pillar == c {
        return Err(Error::ProbeGeometry(
            "sensing pillar must differ from the contact pillar".into(),
        ));
    }
    let t = probe.tilt_angle;
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&t) {
        return Err(Error::ProbeGeometry(format!("tilt angle {t} rad outside [0, pi/2)")));
    }
    if !(probe.nv_depth >= 0.0 && probe.pillar_spacing > 0.0)
        || probe.pillar_diameters.iter().any(|&d| !(d > 0.0))
    {
        return Err(Error::ProbeGeometry(
            "spacing and diameters must be positive, depth non-negative".into(),
        ));
    }
    for k in 0..n {
        if k != c && probe.clearance(k) < 0.0 {
            return Err(Error::ProbeGeometry(format!(
                "pillar {k} would pass through the sample at this tilt"
            )));
        }
    }
    Ok(probe.clearance(which_pillar) + probe.nv_depth)
}
