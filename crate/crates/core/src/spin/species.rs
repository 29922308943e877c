use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};

/// Nitrogen isotope of the NV center; fixes the nuclear spin (I = 1 or 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Isotope {
    N14,
    N15,
}

impl Isotope {
    /// Nuclear Hilbert-space dimension, 2I + 1.
    pub fn nuclear_dim(self) -> usize {
        match self {
            Isotope::N14 => 3,
            Isotope::N15 => 2,
        }
    }

    /// Twice the nuclear spin quantum number.
    pub fn twice_spin(self) -> usize {
        self.nuclear_dim() - 1
    }
}

/// Ground-state constants of an NV center.
///
/// Units: MHz for energies, MHz/G for gyromagnetic ratios and MHz·um/V for
/// the Stark couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvSpecies {
    pub isotope: Isotope,
    /// Zero-field splitting D_gs.
    pub zero_field_splitting: f64,
    /// Electron gyromagnetic ratio.
    pub gamma_e: f64,
    /// Nuclear gyromagnetic ratio. Not a measured quantity of this device;
    /// the defaults are tabulated nuclear values.
    pub gamma_n: f64,
    pub a_par: f64,
    pub a_perp: f64,
    /// Quadrupole splitting; ignored for 15N.
    pub quadrupole: f64,
    pub d_perp: f64,
    pub d_par: f64,
}

impl NvSpecies {
    pub const D_GS: f64 = 2870.0;
    pub const GAMMA_E: f64 = 2.8;
    pub const D_PERP: f64 = 0.17;
    pub const D_PAR: f64 = 0.0035;
    /// 15N nuclear gyromagnetic ratio, -0.4316 kHz/G.
    pub const GAMMA_N15: f64 = -0.4316e-3;
    /// 14N nuclear gyromagnetic ratio, +0.3077 kHz/G.
    pub const GAMMA_N14: f64 = 0.3077e-3;

    pub fn n15() -> Self {
        Self {
            isotope: Isotope::N15,
            zero_field_splitting: Self::D_GS,
            gamma_e: Self::GAMMA_E,
            gamma_n: Self::GAMMA_N15,
            a_par: 3.65,
            a_perp: 3.03,
            quadrupole: 0.0,
            d_perp: Self::D_PERP,
            d_par: Self::D_PAR,
        }
    }

    pub fn n14() -> Self {
        Self {
            isotope: Isotope::N14,
            zero_field_splitting: Self::D_GS,
            gamma_e: Self::GAMMA_E,
            gamma_n: Self::GAMMA_N14,
            a_par: 2.2,
            a_perp: 2.2,
            quadrupole: -5.01,
            d_perp: Self::D_PERP,
            d_par: Self::D_PAR,
        }
    }

    pub fn for_isotope(isotope: Isotope) -> Self {
        match isotope {
            Isotope::N14 => Self::n14(),
            Isotope::N15 => Self::n15(),
        }
    }

    pub fn nuclear_dim(&self) -> usize {
        self.isotope.nuclear_dim()
    }

    /// Quadrupole term actually entering the Hamiltonian.
    pub fn effective_quadrupole(&self) -> f64 {
        match self.isotope {
            Isotope::N14 => self.quadrupole,
            Isotope::N15 => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(
            "species",
            &[
                self.zero_field_splitting,
                self.gamma_e,
                self.gamma_n,
                self.a_par,
                self.a_perp,
                self.quadrupole,
                self.d_perp,
                self.d_par,
            ],
        )
    }
}

impl Default for NvSpecies {
    fn default() -> Self {
        Self::n15()
    }
}

/// Static magnetic (G) and electric (V/um) fields in the NV frame, z along
/// the NV axis and x along the projection of one carbon bond.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldEnvironment {
    pub b: [f64; 3],
    pub e: [f64; 3],
}

impl FieldEnvironment {
    pub fn new(b: [f64; 3], e: [f64; 3]) -> Self {
        Self { b, e }
    }

    /// Fields given by their transverse magnitudes and azimuths, with no
    /// axial components.
    pub fn transverse(b_perp: f64, phi_b: f64, e_perp: f64, phi_e: f64) -> Self {
        Self {
            b: [b_perp * phi_b.cos(), b_perp * phi_b.sin(), 0.0],
            e: [e_perp * phi_e.cos(), e_perp * phi_e.sin(), 0.0],
        }
    }

    /// Magnetic field of magnitude `b` at polar angle `theta_b` from the NV
    /// axis and azimuth `phi_b`.
    pub fn from_polar_b(b: f64, theta_b: f64, phi_b: f64) -> Self {
        Self {
            b: [
                b * theta_b.sin() * phi_b.cos(),
                b * theta_b.sin() * phi_b.sin(),
                b * theta_b.cos(),
            ],
            e: [0.0; 3],
        }
    }

    pub fn with_e(mut self, e: [f64; 3]) -> Self {
        self.e = e;
        self
    }

    pub fn b_perp(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    pub fn phi_b(&self) -> f64 {
        self.b[1].atan2(self.b[0])
    }

    pub fn e_perp(&self) -> f64 {
        self.e[0].hypot(self.e[1])
    }

    pub fn phi_e(&self) -> f64 {
        self.e[1].atan2(self.e[0])
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("field environment", &[self.b[0], self.b[1], self.b[2]])?;
        ensure_finite("field environment", &[self.e[0], self.e[1], self.e[2]])
    }
}
