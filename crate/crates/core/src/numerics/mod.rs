//! Small dense complex linear algebra, quadrature and RK4.

pub mod eigen;
pub mod grid;
pub mod matrix;
pub mod ode;
pub mod quadrature;

pub use eigen::{hermitian_eigensystem, EigenSystem};
pub use grid::TimeGrid;
pub use matrix::{random_hermitian, CVector, ComplexMatrix, StateVector, C64};
pub use ode::{integrate, rk4_step};
pub use quadrature::{cumulative_trapezoid, cumulative_trapezoid_rows, trapezoid};
