//! Discretised volume integral equation for the total field inside the
//! scatterer and the Rayleigh coefficients of the scattered field.

mod data;
mod grid;
mod incident;
mod operator;
mod solve;

pub use data::{
    build_data_matrix, extract_rayleigh_from_trace, rayleigh_data, scattered_field,
    third_component_vector, trace_points, DataBuild, RayleighDataMatrix, RayleighProjector,
    SidePair,
};
pub use grid::{GridResolution, VoxelGrid};
pub use incident::incident_on_grid;
pub use operator::{ls_apply, LsOperator};
pub use solve::{solve_total_field, solve_with, SolveReport, SolverSpec};

use crate::CVec3;

/// Field values at the cell centres of a [`VoxelGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    values: Vec<CVec3>,
}

impl InteriorField {
    pub fn new(values: Vec<CVec3>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[CVec3] {
        &self.values
    }

    pub fn into_values(self) -> Vec<CVec3> {
        self.values
    }
}
