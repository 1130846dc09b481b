//! Rewrites a structured-decomposable circuit into an orthonormal one that
//! computes the same function up to a positive scale.
//!
//! Layers are visited in topological order. Every rewritten layer `ℓ'` comes
//! with a matrix `R` such that the original output is `ℓ = R ℓ'`: inputs
//! carry the identity, a sum `W` over `R1` is refactored through the thin QR
//! of `(W R1)†`, Kronecker products carry `R1 ⊗ R2`, and Hadamard products
//! become Kronecker products carrying the face-splitting product `R1 • R2`.
//! At the root `R` is the scalar `√Z`.

use crate::circuit::{Circuit, Layer, LayerId};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

#[derive(Debug, Clone)]
pub struct OrthonormalizeResult {
    /// Orthonormal circuit with `circuit(x) = beta · c(x)`.
    pub circuit: Circuit,
    /// `Z^{-1/2}`, where `Z = ∫ |c(x)|² dx`.
    pub beta: f64,
    /// For each layer of `circuit`, the layer of `c` it was rewritten from.
    pub origin: Vec<LayerId>,
    /// Complex multiply-adds spent on matrix products and QR factorizations.
    pub ops: u64,
}

impl OrthonormalizeResult {
    /// `Z = beta^{-2}`.
    pub fn partition_function(&self) -> f64 {
        (self.beta * self.beta).recip()
    }
}

pub fn orthonormalize(c: &Circuit) -> Result<OrthonormalizeResult> {
    let report = c.validate();
    if !report.structured_decomposable {
        let why = report
            .violations
            .first()
            .map(|(id, r)| format!(" (layer {id}: {r})"))
            .unwrap_or_default();
        return Err(Error::Precondition(format!(
            "orthonormalization needs a structured-decomposable circuit{why}"
        )));
    }
    let root = c.root();
    if !matches!(c.layer(root), Layer::Sum { .. }) {
        return Err(Error::Precondition(format!(
            "the root must be a sum layer, found a {} layer",
            c.layer(root).kind()
        )));
    }

    let n = c.len();
    let mut new_id = vec![LayerId(usize::MAX); n];
    let mut carried: Vec<Option<ComplexMatrix>> = vec![None; n];
    let mut layers: Vec<Layer> = Vec::with_capacity(n);
    let mut origin = Vec::with_capacity(n);
    let mut ops = 0u64;

    for &id in c.topological_order() {
        let (layer, r) = match c.layer(id) {
            Layer::Input { var, basis } => {
                if !basis.is_orthonormal() {
                    return Err(Error::Precondition(format!(
                        "input layer {id} is not an orthonormal basis"
                    )));
                }
                (
                    Layer::Input {
                        var: *var,
                        basis: *basis,
                    },
                    ComplexMatrix::identity(basis.width()),
                )
            }
            Layer::SquaredInput { .. } => {
                return Err(Error::Precondition(format!(
                    "squared input layer {id} is not an orthonormal basis"
                )))
            }
            Layer::Sum { input, weights } => {
                let r1 = carried[input.0].as_ref().expect("inputs come first");
                let v = weights.matmul(r1)?;
                ops += (weights.rows() * weights.cols() * r1.cols()) as u64;
                if v.rows() > v.cols() {
                    return Err(Error::Shape(format!(
                        "sum layer {id} maps width {} to {}: more rows than its rewritten input is wide",
                        v.cols(),
                        v.rows()
                    )));
                }
                let qr = linalg::qr_thin_counted(&v.adjoint())?;
                ops += qr.ops;
                (
                    Layer::Sum {
                        input: new_id[input.0],
                        weights: qr.q.adjoint(),
                    },
                    qr.r.adjoint(),
                )
            }
            Layer::Kronecker { inputs } => {
                let (r1, r2) = two(&carried, inputs);
                let r = linalg::kron(r1, r2);
                ops += (r.rows() * r.cols()) as u64;
                (
                    Layer::Kronecker {
                        inputs: inputs.iter().map(|i| new_id[i.0]).collect(),
                    },
                    r,
                )
            }
            Layer::Hadamard { inputs } => {
                let (r1, r2) = two(&carried, inputs);
                let r = linalg::face_split(r1, r2)?;
                ops += (r.rows() * r.cols()) as u64;
                (
                    Layer::Kronecker {
                        inputs: inputs.iter().map(|i| new_id[i.0]).collect(),
                    },
                    r,
                )
            }
        };
        layers.push(layer);
        origin.push(id);
        new_id[id.0] = LayerId(layers.len() - 1);
        carried[id.0] = Some(r);
    }

    // The root R is the 1x1 factor r11 = ‖V‖ > 0, so c = r11 · c'.
    let r11 = carried[root.0].as_ref().expect("root visited")[(0, 0)].re;
    let circuit = Circuit::new(c.domains().to_vec(), layers, new_id[root.0])?;
    Ok(OrthonormalizeResult {
        circuit,
        beta: r11.recip(),
        origin,
        ops,
    })
}

/// `Z = ∫ |c(x)|² dx`, read off the root of the orthonormalized circuit.
pub fn partition_function_via_orthonormalize(c: &Circuit) -> Result<f64> {
    orthonormalize(c).map(|r| r.partition_function())
}

fn two<'a>(
    carried: &'a [Option<ComplexMatrix>],
    inputs: &[LayerId],
) -> (&'a ComplexMatrix, &'a ComplexMatrix) {
    let get = |i: LayerId| carried[i.0].as_ref().expect("inputs come first");
    (get(inputs[0]), get(inputs[1]))
}
