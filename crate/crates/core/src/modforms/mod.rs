//! Exact level-one modular forms: q-expansions, the Miller basis, Hecke
//! operators, eigenforms and their sign statistics.

pub mod basis;
pub mod eigen;
pub mod linalg;
pub mod qseries;
pub mod roots;
pub mod stats;

pub use basis::{delta_form, dim_cusp_forms, eisenstein, miller_basis};
pub use eigen::{eigenforms, hecke_matrix, theta_angle, EigenOptions, Eigenform, WeightSpectrum};
pub use qseries::QSeries;
pub use stats::{least_negative, LeastNegative, SignStatistics};
