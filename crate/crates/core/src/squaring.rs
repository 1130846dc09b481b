//! The squared circuit `c²` computing `|c(x)|²`, layer by layer.

use crate::bases::{eval_basis, BasisSpec};
use crate::circuit::{Assignment, Circuit, Layer, LayerId, Scope, VariableId};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, Permutation, C64};

/// Imaginary residue (relative to `max(|value|, 1)`) that is clamped away;
/// anything larger means the squared circuit is not Hermitian.
pub const IMAG_HARD_LIMIT: f64 = 1e-6;
/// Negative real parts down to this (relative) size are treated as zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SquaredLayer {
    /// `f(x) ⊗ f(x)*`.
    Input {
        var: VariableId,
        basis: BasisSpec,
    },
    /// Applies `W ⊗ W*`; only `W` is stored.
    Sum {
        input: LayerId,
        weights: ComplexMatrix,
    },
    Hadamard {
        inputs: [LayerId; 2],
    },
    /// `P (o1 ⊗ o2)` with `P` regrouping the factors into `(a⊗b) ⊗ (a⊗b)*`.
    Kronecker {
        inputs: [LayerId; 2],
        perm: Permutation,
    },
}

/// `c²` with one layer per layer of `c`, sharing its ids.
#[derive(Debug, Clone)]
pub struct SquaredCircuit {
    source: Circuit,
    layers: Vec<SquaredLayer>,
}

/// Squares a structured-decomposable circuit.
pub fn square_circuit(c: &Circuit) -> Result<SquaredCircuit> {
    let report = c.validate();
    if !report.structured_decomposable {
        let why = report
            .violations
            .first()
            .map(|(id, r)| format!(" (layer {id}: {r})"))
            .unwrap_or_default();
        return Err(Error::Precondition(format!(
            "squaring needs a structured-decomposable circuit{why}"
        )));
    }
    let layers = c
        .ids()
        .map(|id| match c.layer(id) {
            Layer::Input { var, basis } => Ok(SquaredLayer::Input {
                var: *var,
                basis: *basis,
            }),
            Layer::SquaredInput { .. } => Err(Error::Precondition(format!(
                "layer {id} is already squared"
            ))),
            Layer::Sum { input, weights } => Ok(SquaredLayer::Sum {
                input: *input,
                weights: weights.clone(),
            }),
            Layer::Hadamard { inputs } => Ok(SquaredLayer::Hadamard {
                inputs: [inputs[0], inputs[1]],
            }),
            Layer::Kronecker { inputs } => Ok(SquaredLayer::Kronecker {
                inputs: [inputs[0], inputs[1]],
                perm: linalg::kron_square_perm(c.width(inputs[0]), c.width(inputs[1])),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SquaredCircuit {
        source: c.clone(),
        layers,
    })
}

impl SquaredCircuit {
    pub fn source(&self) -> &Circuit {
        &self.source
    }

    pub fn layers(&self) -> &[SquaredLayer] {
        &self.layers
    }

    pub fn layer(&self, id: LayerId) -> &SquaredLayer {
        &self.layers[id.0]
    }

    /// The layer of `c` a squared layer was built from. Squaring keeps ids.
    pub fn origin(&self, id: LayerId) -> LayerId {
        id
    }

    pub fn root(&self) -> LayerId {
        self.source.root()
    }

    pub fn width(&self, id: LayerId) -> usize {
        let k = self.source.width(id);
        k * k
    }

    pub fn layer_size(&self, id: LayerId) -> usize {
        match &self.layers[id.0] {
            SquaredLayer::Input { .. } => self.width(id),
            SquaredLayer::Sum { weights, .. } => {
                let s = weights.rows() * weights.cols();
                s * s
            }
            SquaredLayer::Hadamard { .. } | SquaredLayer::Kronecker { .. } => 2 * self.width(id),
        }
    }

    /// `|c(x)|²` at a complete assignment.
    pub fn evaluate(&self, x: &Assignment) -> Result<f64> {
        self.evaluate_integrated(x, &Scope::empty(self.source.num_variables()))
    }

    /// `∫ |c(y, z)|² dz`, with every input over `Z` replaced by the flattened
    /// Gram matrix of its basis.
    pub fn evaluate_integrated(&self, y: &Assignment, z: &Scope) -> Result<f64> {
        self.integrate_counted(y, z).map(|(v, _)| v)
    }

    /// As [`Self::evaluate_integrated`], also returning the multiply-adds
    /// spent at each layer.
    pub fn integrate_counted(&self, y: &Assignment, z: &Scope) -> Result<(f64, Vec<u64>)> {
        check_evidence(&self.source, y, z)?;
        let n = self.layers.len();
        let mut outs: Vec<ComplexVector> = vec![Vec::new(); n];
        let mut macs = vec![0u64; n];
        for &id in self.source.topological_order() {
            let (out, cost) = match &self.layers[id.0] {
                SquaredLayer::Input { var, basis } => {
                    if z.contains(*var) {
                        (linalg::vec_identity(basis.width()), 0)
                    } else {
                        let k = basis.width() as u64;
                        let f = eval_basis(basis, y.get(*var).expect("evidence checked"))?;
                        (linalg::self_conjugate_kron(&f), k + k * k)
                    }
                }
                SquaredLayer::Sum { input, weights } => {
                    let s = (weights.rows() * weights.cols()) as u64;
                    (linalg::apply_kron_conj(weights, &outs[input.0]), s * s)
                }
                SquaredLayer::Hadamard { inputs: [a, b] } => {
                    let out: ComplexVector = outs[a.0]
                        .iter()
                        .zip(&outs[b.0])
                        .map(|(x, y)| x * y)
                        .collect();
                    let cost = out.len() as u64;
                    (out, cost)
                }
                SquaredLayer::Kronecker {
                    inputs: [a, b],
                    perm,
                } => {
                    let out = perm.apply(&linalg::kron_vec(&outs[a.0], &outs[b.0]));
                    let cost = out.len() as u64;
                    (out, cost)
                }
            };
            outs[id.0] = out;
            macs[id.0] = cost;
        }
        let value = real_density(outs[self.root().0][0])?;
        Ok((value, macs))
    }

    /// Exports `c²` as an ordinary circuit: squared inputs become
    /// [`Layer::SquaredInput`], sums carry `W ⊗ W*`, and each regrouping
    /// permutation becomes an explicit sum layer holding the permutation
    /// matrix (omitted when it is the identity).
    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut layers: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut new_id = vec![LayerId(usize::MAX); self.layers.len()];
        for &id in self.source.topological_order() {
            let layer = match &self.layers[id.0] {
                SquaredLayer::Input { var, basis } => Layer::SquaredInput {
                    var: *var,
                    basis: *basis,
                },
                SquaredLayer::Sum { input, weights } => Layer::Sum {
                    input: new_id[input.0],
                    weights: linalg::kron(weights, &weights.conj()),
                },
                SquaredLayer::Hadamard { inputs: [a, b] } => Layer::Hadamard {
                    inputs: vec![new_id[a.0], new_id[b.0]],
                },
                SquaredLayer::Kronecker {
                    inputs: [a, b],
                    perm,
                } => {
                    let kron = Layer::Kronecker {
                        inputs: vec![new_id[a.0], new_id[b.0]],
                    };
                    if perm.is_identity() {
                        kron
                    } else {
                        layers.push(kron);
                        Layer::Sum {
                            input: LayerId(layers.len() - 1),
                            weights: perm.to_matrix(),
                        }
                    }
                }
            };
            layers.push(layer);
            new_id[id.0] = LayerId(layers.len() - 1);
        }
        Circuit::new(
            self.source.domains().to_vec(),
            layers,
            new_id[self.root().0],
        )
    }
}

/// Checks that `y` assigns exactly the variables outside `z`.
pub(crate) fn check_evidence(c: &Circuit, y: &Assignment, z: &Scope) -> Result<()> {
    let d = c.num_variables();
    if let Some(v) = z.vars().find(|v| v.0 >= d) {
        return Err(Error::Input(format!(
            "{v} is not a variable of the circuit"
        )));
    }
    if let Some((v, _)) = y.assigned().find(|(v, _)| v.0 >= d) {
        return Err(Error::Input(format!(
            "{v} is not a variable of the circuit"
        )));
    }
    for v in (0..d).map(VariableId) {
        match (z.contains(v), y.get(v).is_some()) {
            (true, true) => {
                return Err(Error::Input(format!(
                    "{v} is both observed and marginalized"
                )))
            }
            (false, false) => return Err(Error::Input(format!("no value for variable {v}"))),
            _ => {}
        }
    }
    Ok(())
}

/// Turns the root of a squared circuit into a density value, clamping
/// roundoff in the imaginary part and tiny negative real parts.
pub(crate) fn real_density(v: C64) -> Result<f64> {
    let scale = v.norm().max(1.0);
    if v.im.abs() > IMAG_HARD_LIMIT * scale {
        return Err(Error::Numerical(format!(
            "squared value {v} has a non-negligible imaginary part"
        )));
    }
    if v.re < -NEGATIVE_SLACK * scale {
        return Err(Error::Numerical(format!(
            "squared value {} is negative",
            v.re
        )));
    }
    Ok(v.re.max(0.0))
}
