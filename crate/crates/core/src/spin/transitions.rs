use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{diagonalize, EigenSystem};
use super::hamiltonian::{build_hamiltonian, spin_operators, CMatrix, SpinModel};
use super::species::{FieldEnvironment, NvSpecies};
use crate::error::{invalid, Result};

/// Electron manifold of a level when the |+-> splitting exceeds the
/// hyperfine structure: the lowest `n` levels are |0>, the next `n` are |->
/// and the top `n` are |+>, with `n` the nuclear dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    Zero,
    Minus,
    Plus,
}

impl Manifold {
    pub fn of_level(level: usize, nuclear_dim: usize) -> Manifold {
        match level / nuclear_dim {
            0 => Manifold::Zero,
            1 => Manifold::Minus,
            _ => Manifold::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    /// |E_upper - E_lower| in MHz.
    pub frequency: f64,
    /// |<lower| B1.S |upper>|^2 relative to the strongest pair.
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable {
    pub nuclear_dim: usize,
    pub mw_direction: [f64; 3],
    pub entries: Vec<Transition>,
}

impl TransitionTable {
    pub fn between(&self, from: Manifold, to: Manifold) -> Vec<Transition> {
        let n = self.nuclear_dim;
        self.entries
            .iter()
            .copied()
            .filter(|t| {
                let a = Manifold::of_level(t.lower, n);
                let b = Manifold::of_level(t.upper, n);
                (a == from && b == to) || (a == to && b == from)
            })
            .collect()
    }

    /// Strongest transition out of each level of `from` into `to`.
    pub fn dominant_per_sublevel(&self, from: Manifold, to: Manifold) -> Vec<Transition> {
        let subset = self.between(from, to);
        let n = self.nuclear_dim;
        let mut out: Vec<Transition> = Vec::new();
        for t in subset {
            let origin = if Manifold::of_level(t.lower, n) == from {
                t.lower
            } else {
                t.upper
            };
            let key = |x: &Transition| {
                if Manifold::of_level(x.lower, n) == from {
                    x.lower
                } else {
                    x.upper
                }
            };
            match out.iter_mut().find(|x| key(x) == origin) {
                Some(best) if best.efficiency >= t.efficiency => {}
                Some(best) => *best = t,
                None => out.push(t),
            }
        }
        out
    }
}

/// Magnetic-dipole transition strengths for a linearly polarized MW field
/// along `mw_direction` (NV frame). The drive acts on the electron only.
pub fn transition_elements(eig: &EigenSystem, mw_direction: [f64; 3]) -> Result<TransitionTable> {
    let norm = mw_direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(invalid("mw_direction", "must be a non-zero finite vector"));
    }
    let dir = mw_direction.map(|v| v / norm);
    let n = eig.nuclear_dim;
    if eig.dim() != 3 * n {
        return Err(invalid("eigen system", "electron dimension must be 3"));
    }

    let [sx, sy, sz] = spin_operators(2);
    let drive_e = sx.map(|z| z * dir[0]) + sy.map(|z| z * dir[1]) + sz.map(|z| z * dir[2]);
    let drive = drive_e.kronecker(&CMatrix::identity(n, n));
    let coupled = eig.states.adjoint() * drive * &eig.states;

    let dim = eig.dim();
    let mut entries = Vec::with_capacity(dim * (dim - 1) / 2);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let amp: Complex64 = coupled[(i, j)];
            entries.push(Transition {
                lower: i,
                upper: j,
                frequency: (eig.energies[j] - eig.energies[i]).abs(),
                efficiency: amp.norm_sqr(),
            });
        }
    }
    let max = entries.iter().map(|t| t.efficiency).fold(0.0, f64::max);
    if max > 0.0 {
        for t in &mut entries {
            t.efficiency /= max;
        }
    }
    Ok(TransitionTable {
        nuclear_dim: n,
        mw_direction: dir,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdmrPoint {
    pub frequency: f64,
    /// Summed Lorentzian dip depth, in units of the strongest transition.
    pub contrast: f64,
}

/// Pulsed-ODMR spectrum on `frequencies` (MHz): Lorentzian dips of FWHM
/// `line_width` at every transition out of the |0> manifold, weighted by
/// efficiency.
pub fn odmr_spectrum(
    species: &NvSpecies,
    env: &FieldEnvironment,
    model: SpinModel,
    mw_direction: [f64; 3],
    line_width: f64,
    frequencies: &[f64],
) -> Result<Vec<OdmrPoint>> {
    if !(line_width > 0.0) {
        return Err(invalid("line_width", "must be positive"));
    }
    let h = build_hamiltonian(species, env, model)?;
    let eig = diagonalize(&h)?;
    let table = transition_elements(&eig, mw_direction)?;
    let n = table.nuclear_dim;
    let lines: Vec<(f64, f64)> = table
        .entries
        .iter()
        .filter(|t| Manifold::of_level(t.lower, n) == Manifold::Zero)
        .filter(|t| Manifold::of_level(t.upper, n) != Manifold::Zero)
        .filter(|t| t.efficiency > 0.0)
        .map(|t| (t.frequency, t.efficiency))
        .collect();
    let hw2 = (line_width / 2.0).powi(2);
    Ok(frequencies
        .iter()
        .map(|&f| OdmrPoint {
            frequency: f,
            contrast: lines
                .iter()
                .map(|&(f0, w)| w * hw2 / ((f - f0).powi(2) + hw2))
                .sum(),
        })
        .collect())
}

/// Local maxima of dip depth, strongest first.
pub fn odmr_dips(spectrum: &[OdmrPoint], min_contrast: f64) -> Vec<OdmrPoint> {
    let mut dips: Vec<OdmrPoint> = spectrum
        .windows(3)
        .filter(|w| w[1].contrast > w[0].contrast && w[1].contrast >= w[2].contrast)
        .map(|w| w[1])
        .filter(|p| p.contrast >= min_contrast)
        .collect();
    dips.sort_by(|a, b| b.contrast.total_cmp(&a.contrast));
    dips
}
