use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::species::{FieldEnvironment, NvSpecies};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which degrees of freedom enter the Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinModel {
    /// S = 1 electron only; nuclear terms dropped.
    ElectronOnly,
    /// Electron tensor nuclear spin of the species' isotope.
    #[default]
    WithNucleus,
}

/// Spin operators (Sx, Sy, Sz) for spin `twice_s / 2` in the basis ordered
/// by descending m.
pub fn spin_operators(twice_s: usize) -> [CMatrix; 3] {
    let dim = twice_s + 1;
    let s = twice_s as f64 / 2.0;
    let mut sp = CMatrix::zeros(dim, dim);
    for col in 1..dim {
        // column `col` holds m = s - col; S+ raises to row col - 1.
        let m = s - col as f64;
        sp[(col - 1, col)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm).map(|z| z * 0.5);
    let sy = (&sp - &sm).map(|z| z * Complex64::new(0.0, -0.5));
    let sz = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(s - r as f64, 0.0)
        } else {
            ZERO
        }
    });
    [sx, sy, sz]
}

/// A Hermitian spin Hamiltonian in MHz. Basis: electron m_S = (+1, 0, -1)
/// tensor nuclear m_I descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    pub nuclear_dim: usize,
    pub matrix: CMatrix,
}

impl SpinHamiltonian {
    pub const ELECTRON_DIM: usize = 3;

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest |H - H^dagger| element.
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut dev: f64 = 0.0;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Plain-text dump, one matrix row per line as `re im` pairs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dim={} nuclear_dim={}", self.dim(), self.nuclear_dim);
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.matrix[(r, c)];
                    format!("{:.17e} {:.17e}", z.re, z.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join("  "));
        }
        out
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.dump().as_bytes())
    }
}

/// Assembles the ground-state Hamiltonian: zero-field splitting, electron and
/// nuclear Zeeman terms, axial hyperfine tensor, quadrupole (14N) and the
/// axial and transverse Stark terms.
pub fn build_hamiltonian(
    species: &NvSpecies,
    env: &FieldEnvironment,
    model: SpinModel,
) -> Result<SpinHamiltonian> {
    species.validate()?;
    env.validate()?;

    let [sx, sy, sz] = spin_operators(2);
    let sz2 = &sz * &sz;
    let [b_x, b_y, b_z] = env.b;
    let [e_x, e_y, e_z] = env.e;

    let scale = |m: &CMatrix, k: f64| m.map(|z| z * k);

    let mut electron = scale(&sz2, species.zero_field_splitting + species.d_par * e_z);
    electron += scale(&sx, species.gamma_e * b_x);
    electron += scale(&sy, species.gamma_e * b_y);
    electron += scale(&sz, species.gamma_e * b_z);
    electron += scale(&(&sy * &sy - &sx * &sx), species.d_perp * e_x);
    electron += scale(&(&sx * &sy + &sy * &sx), species.d_perp * e_y);

    let nuclear_dim = match model {
        SpinModel::ElectronOnly => 1,
        SpinModel::WithNucleus => species.nuclear_dim(),
    };
    if nuclear_dim == 1 {
        return Ok(SpinHamiltonian {
            nuclear_dim,
            matrix: electron,
        });
    }

    let [ix, iy, iz] = spin_operators(species.isotope.twice_spin());
    let id_n = CMatrix::identity(nuclear_dim, nuclear_dim);
    let id_e = CMatrix::identity(3, 3);

    let mut matrix = electron.kronecker(&id_n);
    matrix += scale(&sz.kronecker(&iz), species.a_par);
    matrix += scale(&(sx.kronecker(&ix) + sy.kronecker(&iy)), species.a_perp);

    let mut nuclear = scale(&ix, species.gamma_n * b_x);
    nuclear += scale(&iy, species.gamma_n * b_y);
    nuclear += scale(&iz, species.gamma_n * b_z);
    nuclear += scale(&(&iz * &iz), species.effective_quadrupole());
    matrix += id_e.kronecker(&nuclear);

    Ok(SpinHamiltonian {
        nuclear_dim,
        matrix,
    })
}

/// Trace of the Hamiltonian from the constituent terms alone: only the
/// S_z^2 and I_z^2 terms carry trace.
pub fn analytic_trace(species: &NvSpecies, env: &FieldEnvironment, model: SpinModel) -> f64 {
    let n = match model {
        SpinModel::ElectronOnly => 1,
        SpinModel::WithNucleus => species.nuclear_dim(),
    };
    let electron = 2.0 * (species.zero_field_splitting + species.d_par * env.e[2]) * n as f64;
    let quad = if n > 1 {
        let s = species.isotope.twice_spin() as f64 / 2.0;
        let iz2: f64 = (0..n).map(|k| (s - k as f64).powi(2)).sum();
        3.0 * species.effective_quadrupole() * iz2
    } else {
        0.0
    };
    electron + quad
}

/// Second-order splitting of the |+-> pair under a transverse field:
/// gamma^2 B_perp^2 / D - 2 d_perp E_perp cos(2 phi_B + phi_E).
pub fn perturbative_splitting(
    species: &NvSpecies,
    b_perp: f64,
    phi_b: f64,
    e_perp: f64,
    phi_e: f64,
) -> Result<f64> {
    if !(b_perp >= 0.0) || !(e_perp >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "b_perp/e_perp",
            reason: "transverse magnitudes must be non-negative".into(),
        });
    }
    let zeeman = (species.gamma_e * b_perp).powi(2) / species.zero_field_splitting;
    Ok(zeeman - 2.0 * species.d_perp * e_perp * (2.0 * phi_b + phi_e).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn spin_one_operators_satisfy_commutation() {
        let [sx, sy, sz] = spin_operators(2);
        let comm = &sx * &sy - &sy * &sx;
        let i_sz = sz.map(|z| z * Complex64::new(0.0, 1.0));
        for (a, b) in comm.iter().zip(i_sz.iter()) {
            assert!(close(*a, *b));
        }
        let s2 = &sx * &sx + &sy * &sy + &sz * &sz;
        for r in 0..3 {
            assert!(close(s2[(r, r)], Complex64::new(2.0, 0.0)));
        }
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let [sx, _, sz] = spin_operators(1);
        assert!(close(sx[(0, 1)], Complex64::new(0.5, 0.0)));
        assert!(close(sz[(0, 0)], Complex64::new(0.5, 0.0)));
        assert!(close(sz[(1, 1)], Complex64::new(-0.5, 0.0)));
    }

    #[test]
    fn zero_field_electron_hamiltonian_is_diag_d_0_d() {
        let h = build_hamiltonian(
            &NvSpecies::n15(),
            &FieldEnvironment::default(),
            SpinModel::ElectronOnly,
        )
        .unwrap();
        let expected = [2870.0, 0.0, 2870.0];
        for (r, &diag) in expected.iter().enumerate() {
            for c in 0..3 {
                let want = if r == c { diag } else { 0.0 };
                assert!(close(h.matrix[(r, c)], Complex64::new(want, 0.0)));
            }
        }
    }

    #[test]
    fn dimensions_follow_isotope() {
        let env = FieldEnvironment::transverse(73.0, 0.0, 0.0, 0.0);
        let h15 = build_hamiltonian(&NvSpecies::n15(), &env, SpinModel::WithNucleus).unwrap();
        let h14 = build_hamiltonian(&NvSpecies::n14(), &env, SpinModel::WithNucleus).unwrap();
        assert_eq!(h15.dim(), 6);
        assert_eq!(h14.dim(), 9);
    }

    #[test]
    fn trace_matches_constituent_terms() {
        let env = FieldEnvironment::new([10.0, -40.0, 3.0], [0.5, 2.0, 7.0]);
        for species in [NvSpecies::n14(), NvSpecies::n15()] {
            for model in [SpinModel::ElectronOnly, SpinModel::WithNucleus] {
                let h = build_hamiltonian(&species, &env, model).unwrap();
                let tr = h.trace();
                let want = analytic_trace(&species, &env, model);
                assert!((tr.re - want).abs() < 1e-9 * want.abs());
                assert!(tr.im.abs() < 1e-12);
                assert!(h.hermitian_deviation() <= 1e-12 * h.frobenius_norm());
            }
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let env = FieldEnvironment::new([0.0, f64::INFINITY, 0.0], [0.0; 3]);
        assert!(build_hamiltonian(&NvSpecies::n15(), &env, SpinModel::WithNucleus).is_err());
    }

    #[test]
    fn perturbative_splitting_values() {
        let s = NvSpecies::n15();
        let d0 = perturbative_splitting(&s, 73.0, 0.0, 0.0, 0.0).unwrap();
        assert!((d0 - 41779.36 / 2870.0).abs() < 1e-12);
        let d1 = perturbative_splitting(&s, 73.0, 0.0, 1.0, 0.0).unwrap();
        assert!((d0 - d1 - 0.34).abs() < 1e-12);
        // 2 phi_B + phi_E = pi/2 removes the Stark term
        let a = perturbative_splitting(&s, 73.0, 0.3, 0.0, std::f64::consts::FRAC_PI_2 - 0.6)
            .unwrap();
        let b = perturbative_splitting(&s, 73.0, 0.3, 9.0, std::f64::consts::FRAC_PI_2 - 0.6)
            .unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(perturbative_splitting(&s, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn dump_has_one_line_per_row() {
        let h = build_hamiltonian(
            &NvSpecies::n15(),
            &FieldEnvironment::transverse(50.0, 0.1, 0.0, 0.0),
            SpinModel::WithNucleus,
        )
        .unwrap();
        let text = h.dump();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().nth(1).unwrap().split_whitespace().count(), 12);
    }
}
