//! 2-D electrostatics of coplanar electrodes and field profiles above them.

mod geometry;
mod io;
mod profile;
mod solver;

pub use io::grid_sidecar;
pub use geometry::{Conductor, DeviceLayout, Domain, ElectrodeGeometry2D};
pub use io::{read_grid, write_grid, write_profile};
pub use profile::{
    catmull_rom, field_at_height, gradient_x, project_zeta, FieldProfile, ProjectionAxis,
    ZetaProfile,
};
pub use solver::{solve_laplace, solve_laplace_with, Grid2D, SolverOptions, MIN_TOLERANCE};
