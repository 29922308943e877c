//! NV ground-state spin Hamiltonian: construction, diagonalization,
//! transition strengths and pulsed-ODMR spectra.

mod eigen;
mod hamiltonian;
mod species;
mod transitions;

pub use eigen::{diagonalize, EigenSystem, HERMITIAN_TOL, RESIDUAL_TOL};
pub use hamiltonian::{
    analytic_trace, build_hamiltonian, perturbative_splitting, spin_operators, CMatrix,
    SpinHamiltonian, SpinModel,
};
pub use species::{FieldEnvironment, Isotope, NvSpecies};
pub use transitions::{
    odmr_dips, odmr_spectrum, transition_elements, Manifold, OdmrPoint, Transition,
    TransitionTable,
};

use crate::error::Result;

/// |+>/|-> splitting from exact diagonalization: the difference of the mean
/// energies of the two upper manifolds (MHz).
pub fn exact_splitting(species: &NvSpecies, env: &FieldEnvironment, model: SpinModel) -> Result<f64> {
    let eig = diagonalize(&build_hamiltonian(species, env, model)?)?;
    let n = eig.nuclear_dim;
    let mean = |m: usize| eig.energies[m * n..(m + 1) * n].iter().sum::<f64>() / n as f64;
    Ok(mean(2) - mean(1))
}

/// d(splitting)/dE_perp by central differences along the azimuth `phi_e`,
/// with `step` in V/um.
pub fn stark_slope(
    species: &NvSpecies,
    env: &FieldEnvironment,
    model: SpinModel,
    phi_e: f64,
    step: f64,
) -> Result<f64> {
    let shifted = |sign: f64| {
        let mut e = *env;
        e.e[0] += sign * step * phi_e.cos();
        e.e[1] += sign * step * phi_e.sin();
        exact_splitting(species, &e, model)
    };
    Ok((shifted(1.0)? - shifted(-1.0)?) / (2.0 * step))
}

/// Per-level Stark slopes dE_k/dE_perp (MHz per V/um), all levels ascending.
pub fn level_stark_slopes(
    species: &NvSpecies,
    env: &FieldEnvironment,
    model: SpinModel,
    phi_e: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let levels = |sign: f64| -> Result<Vec<f64>> {
        let mut e = *env;
        e.e[0] += sign * step * phi_e.cos();
        e.e[1] += sign * step * phi_e.sin();
        Ok(diagonalize(&build_hamiltonian(species, &e, model)?)?.energies)
    };
    let up = levels(1.0)?;
    let down = levels(-1.0)?;
    Ok(up
        .iter()
        .zip(&down)
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect())
}
