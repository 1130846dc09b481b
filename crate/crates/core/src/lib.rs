//! Squared orthonormal tensorized circuits.
//!
//! A [`Circuit`] is a DAG of input, sum, Hadamard and Kronecker layers over a
//! set of variables. Squaring a circuit gives a distribution `|c(x)|²`; when
//! every sum layer is semi-unitary and every input layer is an orthonormal
//! basis, that distribution integrates to one and marginals can skip the
//! subcircuits over marginalized variables entirely.

pub mod bases;
pub mod circuit;
pub mod error;
pub mod generator;
pub mod io;
pub mod linalg;
pub mod marginalize;
pub mod oracle;
pub mod orthonormalize;
pub mod samples;
pub mod squaring;

pub use bases::{BasisSpec, QuadratureRule};
pub use circuit::{
    Assignment, Circuit, Domain, Evaluation, Layer, LayerId, Scope, Support, ValidationReport,
    VariableId,
};
pub use error::{Error, Result};
pub use generator::{GenSpec, ParamMode, ProductKind, Shape, VTree};
pub use io::{read_circuit, write_circuit};
pub use linalg::{ComplexMatrix, ComplexVector, Permutation, C64};
pub use marginalize::{MarginalCostReport, Method, ScopePartition};
pub use oracle::OracleBudget;
pub use orthonormalize::OrthonormalizeResult;
pub use squaring::SquaredCircuit;
