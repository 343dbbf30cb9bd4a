//! Scalar, topological and simplified topological ε-algorithms for
//! accelerating sequences of scalars, vectors and matrices.
//!
//! The algorithms are generic over [`Field`] (`f32`, `f64` and their
//! complex counterparts). The aliases below fix the common `f64` case.

pub mod dense;
pub mod field;
pub mod harness;
pub mod linspace;
pub mod oracle;
pub mod scalar_eps;
pub mod sequences;
pub mod topo_eps;

pub use field::{Field, Real};
pub use linspace::{DualElement, Element, Functional, LinalgError, Shape};
pub use scalar_eps::{EpsEntry, ScalarEpsConfig, ScalarEpsTable, TestLevels};
pub use topo_eps::{Form, TeaTable, TeaVariant, TopoConfig, TopoEpsTable, TopoOutput, Variant};

pub type Element64 = Element<f64>;
pub type Functional64 = Functional<f64>;
pub type ScalarTable64 = ScalarEpsTable<f64>;
pub type TopoTable64 = TopoEpsTable<f64>;
pub type TeaTable64 = TeaTable<f64>;
pub type ComplexElement64 = Element<num_complex::Complex64>;
pub type ComplexTopoTable64 = TopoEpsTable<num_complex::Complex64>;
