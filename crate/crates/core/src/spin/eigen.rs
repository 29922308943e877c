use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use super::hamiltonian::{CMatrix, SpinHamiltonian};
use crate::error::{Error, Result};

/// Relative bound on |H - H^dagger| accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative bound on the per-pair residual ||Hv - lambda v|| / ||H||.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Eigenvalues in ascending order (MHz) with orthonormal eigenvectors as
/// columns. Each vector's largest-modulus component is real and positive.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub nuclear_dim: usize,
    pub energies: Vec<f64>,
    pub states: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> nalgebra::DVector<Complex64> {
        self.states.column(k).into_owned()
    }

    /// Largest residual ||Hv - lambda v|| over all pairs.
    pub fn max_residual(&self, h: &CMatrix) -> f64 {
        (0..self.dim())
            .map(|k| {
                let v = self.states.column(k);
                let r = h * v - v.map(|z| z * self.energies[k]);
                r.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of V^dagger V from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.states.adjoint() * &self.states;
        let mut err: f64 = 0.0;
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                let want = if r == c { 1.0 } else { 0.0 };
                err = err.max((g[(r, c)] - Complex64::new(want, 0.0)).norm());
            }
        }
        err
    }
}

/// Dense Hermitian eigendecomposition with deterministic ordering and phase.
///
/// Levels whose energies agree to within `1e-9 * ||H||` are treated as
/// degenerate and ordered by the basis index of their largest component.
pub fn diagonalize(h: &SpinHamiltonian) -> Result<EigenSystem> {
    let norm = h.frobenius_norm();
    let scale = norm.max(f64::MIN_POSITIVE);
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    if !h.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("hamiltonian"));
    }

    // Symmetrize so rounding-level asymmetry does not leak into the solver.
    let sym = (&h.matrix + h.matrix.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(sym.clone());

    let dim = h.dim();
    let dominant = |k: usize| -> usize {
        let col = eig.eigenvectors.column(k);
        let mut best = 0;
        for i in 1..dim {
            if col[i].norm() > col[best].norm() + 1e-12 {
                best = i;
            }
        }
        best
    };

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let tie = RESIDUAL_TOL * norm.max(1.0);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= tie {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| dominant(k));
        start = end;
    }

    let mut states = CMatrix::zeros(dim, dim);
    let mut energies = Vec::with_capacity(dim);
    for (slot, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let pivot = col[dominant(k)];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            states[(i, slot)] = col[i] * phase;
        }
        energies.push(eig.eigenvalues[k]);
    }

    let system = EigenSystem {
        nuclear_dim: h.nuclear_dim,
        energies,
        states,
    };
    let residual = system.max_residual(&sym);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::EigenResidual { residual });
    }
    Ok(system)
}
