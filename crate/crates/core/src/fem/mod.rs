//! Lagrange finite elements on a structured triangulation of the unit square.

pub mod assembly;
pub mod export;
pub mod mesh;
pub mod quadrature;
pub mod space;

pub use assembly::{
    assemble_coupling, assemble_elasticity, assemble_load, assemble_scalar_stiffness, assemble_scaled_mass,
};
pub use mesh::Mesh;
pub use space::FeSpace;
