//! Marginals `∫ |c(y, z)|² dz`, either through the full squared circuit or
//! by skipping every layer over marginalized variables only, which is exact
//! when the circuit is orthonormal.

use std::fmt;

use crate::circuit::{Assignment, Circuit, Layer, LayerId, Scope};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexVector};
use crate::squaring::{self, check_evidence, real_density};

/// Constant `C` in the fast-path bound `MAC ≤ C·(|φ_Y|·S + |φ_YZ|·S²)`.
///
/// A mixed product pays its own squared width plus at most one
/// self-conjugate Kronecker per input, each bounded by `S²`.
pub const FAST_BOUND_CONSTANT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Evaluate the whole squared circuit.
    Naive,
    /// Skip marginalized subcircuits; needs an orthonormal circuit.
    Fast,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Fast => "fast",
        })
    }
}

/// Which variables a layer depends on, relative to the split `X = Y ∪ Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Only kept variables.
    Kept,
    /// Only marginalized variables.
    Marginalized,
    /// Both.
    Mixed,
}

/// Layers grouped by [`Region`]; each list is in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopePartition {
    pub phi_y: Vec<LayerId>,
    pub phi_z: Vec<LayerId>,
    pub phi_yz: Vec<LayerId>,
    regions: Vec<Region>,
}

impl ScopePartition {
    pub fn region(&self, id: LayerId) -> Region {
        self.regions[id.0]
    }
}

pub fn classify_scopes(c: &Circuit, z: &Scope) -> Result<ScopePartition> {
    if let Some(v) = z.vars().find(|v| v.0 >= c.num_variables()) {
        return Err(Error::Input(format!(
            "{v} is not a variable of the circuit"
        )));
    }
    let mut part = ScopePartition {
        phi_y: Vec::new(),
        phi_z: Vec::new(),
        phi_yz: Vec::new(),
        regions: Vec::with_capacity(c.len()),
    };
    for id in c.ids() {
        let scope = c.scope(id);
        let region = if scope.is_disjoint(z) {
            part.phi_y.push(id);
            Region::Kept
        } else if scope.is_subset(z) {
            part.phi_z.push(id);
            Region::Marginalized
        } else {
            part.phi_yz.push(id);
            Region::Mixed
        };
        part.regions.push(region);
    }
    Ok(part)
}

/// Exact multiply-add counts of one marginal query.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCostReport {
    pub method: Method,
    /// `L`, the number of layers.
    pub layer_count: usize,
    /// `S`, the largest layer size of the circuit being marginalized.
    pub max_layer_size: usize,
    pub phi_y: usize,
    pub phi_z: usize,
    pub phi_yz: usize,
    /// Layers evaluated at squared width.
    pub squared_evaluations: usize,
    /// Total complex multiply-adds; permutations are free.
    pub macs: u64,
    /// Multiply-adds per layer, in topological order.
    pub per_layer: Vec<(LayerId, u64)>,
    /// `C` such that `macs ≤ C·(|φ_Y|·S + |φ_YZ|·S²)` for the fast method.
    pub bound_constant: u64,
}

impl MarginalCostReport {
    /// `C·(|φ_Y|·S + |φ_YZ|·S²)`.
    pub fn fast_bound(&self) -> u64 {
        let s = self.max_layer_size as u64;
        self.bound_constant * (self.phi_y as u64 * s + self.phi_yz as u64 * s * s)
    }
}

/// `∫ |c(y, z)|² dz` through the full squared circuit.
pub fn marginal_naive(c: &Circuit, y: &Assignment, z: &Scope) -> Result<f64> {
    marginal_with_report(c, y, z, Method::Naive).map(|(v, _)| v)
}

/// `∫ |c(y, z)|² dz` evaluating only layers that touch `Y`; exact for
/// orthonormal circuits and refused otherwise.
pub fn marginal_fast(c: &Circuit, y: &Assignment, z: &Scope) -> Result<f64> {
    marginal_with_report(c, y, z, Method::Fast).map(|(v, _)| v)
}

pub fn cost_report(
    c: &Circuit,
    y: &Assignment,
    z: &Scope,
    method: Method,
) -> Result<MarginalCostReport> {
    marginal_with_report(c, y, z, method).map(|(_, r)| r)
}

pub fn marginal_with_report(
    c: &Circuit,
    y: &Assignment,
    z: &Scope,
    method: Method,
) -> Result<(f64, MarginalCostReport)> {
    let part = classify_scopes(c, z)?;
    let (value, macs, squared) = match method {
        Method::Naive => {
            let c2 = squaring::square_circuit(c)?;
            let (value, macs) = c2.integrate_counted(y, z)?;
            (value, macs, c.len())
        }
        Method::Fast => fast(c, y, z, &part)?,
    };
    let per_layer: Vec<(LayerId, u64)> = c
        .topological_order()
        .iter()
        .map(|&id| (id, macs[id.0]))
        .collect();
    let report = MarginalCostReport {
        method,
        layer_count: c.len(),
        max_layer_size: c.max_layer_size(),
        phi_y: part.phi_y.len(),
        phi_z: part.phi_z.len(),
        phi_yz: part.phi_yz.len(),
        squared_evaluations: squared,
        macs: macs.iter().sum(),
        per_layer,
        bound_constant: FAST_BOUND_CONSTANT,
    };
    Ok((value, report))
}

fn fast(
    c: &Circuit,
    y: &Assignment,
    z: &Scope,
    part: &ScopePartition,
) -> Result<(f64, Vec<u64>, usize)> {
    let report = c.validate();
    if !(report.orthonormal && report.structured_decomposable) {
        let why = report
            .violations
            .first()
            .map(|(id, r)| format!(" (layer {id}: {r})"))
            .unwrap_or_default();
        return Err(Error::Precondition(format!(
            "the fast marginal needs an orthonormal, structured-decomposable circuit{why}"
        )));
    }
    check_evidence(c, y, z)?;

    let n = c.len();
    // Kept layers hold plain outputs, mixed layers hold squared outputs.
    let mut plain: Vec<ComplexVector> = vec![Vec::new(); n];
    let mut squared: Vec<ComplexVector> = vec![Vec::new(); n];
    let mut macs = vec![0u64; n];
    let mut squared_evaluations = 0;

    // The squared output of a product input, whatever its region.
    let lift =
        |id: LayerId, plain: &[ComplexVector], squared: &[ComplexVector]| -> (ComplexVector, u64) {
            match part.region(id) {
                Region::Mixed => (squared[id.0].clone(), 0),
                Region::Kept => {
                    let k = plain[id.0].len() as u64;
                    (linalg::self_conjugate_kron(&plain[id.0]), k * k)
                }
                Region::Marginalized => (linalg::vec_identity(c.width(id)), 0),
            }
        };

    for &id in c.topological_order() {
        match part.region(id) {
            Region::Marginalized => {}
            Region::Kept => {
                let (out, cost) = evaluate_plain(c, id, y, &plain)?;
                plain[id.0] = out;
                macs[id.0] = cost;
            }
            Region::Mixed => {
                squared_evaluations += 1;
                let (out, cost) = match c.layer(id) {
                    Layer::Sum { input, weights } => {
                        let s = (weights.rows() * weights.cols()) as u64;
                        (linalg::apply_kron_conj(weights, &squared[input.0]), s * s)
                    }
                    Layer::Hadamard { inputs } => {
                        let (a, ca) = lift(inputs[0], &plain, &squared);
                        let (b, cb) = lift(inputs[1], &plain, &squared);
                        let out: ComplexVector = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                        let cost = out.len() as u64 + ca + cb;
                        (out, cost)
                    }
                    Layer::Kronecker { inputs } => {
                        let (a, ca) = lift(inputs[0], &plain, &squared);
                        let (b, cb) = lift(inputs[1], &plain, &squared);
                        let perm = linalg::kron_square_perm(c.width(inputs[0]), c.width(inputs[1]));
                        let out = perm.apply(&linalg::kron_vec(&a, &b));
                        let cost = out.len() as u64 + ca + cb;
                        (out, cost)
                    }
                    Layer::Input { .. } | Layer::SquaredInput { .. } => {
                        unreachable!("input layers have singleton scopes")
                    }
                };
                squared[id.0] = out;
                macs[id.0] = cost;
            }
        }
    }

    let root = c.root();
    let value = match part.region(root) {
        // Z = X: an orthonormal circuit integrates to one.
        Region::Marginalized => 1.0,
        // Z = ∅: the plain value, squared.
        Region::Kept => {
            macs[root.0] += 1;
            plain[root.0][0].norm_sqr()
        }
        Region::Mixed => real_density(squared[root.0][0])?,
    };
    Ok((value, macs, squared_evaluations))
}

/// One unsquared layer; the multiply-add count matches the layer size.
fn evaluate_plain(
    c: &Circuit,
    id: LayerId,
    y: &Assignment,
    plain: &[ComplexVector],
) -> Result<(ComplexVector, u64)> {
    Ok(match c.layer(id) {
        Layer::Input { var, basis } => {
            let out = crate::bases::eval_basis(basis, y.get(*var).expect("evidence checked"))?;
            let cost = out.len() as u64;
            (out, cost)
        }
        Layer::SquaredInput { .. } => {
            return Err(Error::Precondition(format!(
                "layer {id} is a squared input; marginalize the source circuit instead"
            )))
        }
        Layer::Sum { input, weights } => (
            weights.mul_vec(&plain[input.0]),
            (weights.rows() * weights.cols()) as u64,
        ),
        Layer::Hadamard { inputs } => {
            let out: ComplexVector = plain[inputs[0].0]
                .iter()
                .zip(&plain[inputs[1].0])
                .map(|(a, b)| a * b)
                .collect();
            let cost = out.len() as u64;
            (out, cost)
        }
        Layer::Kronecker { inputs } => {
            let out = linalg::kron_vec(&plain[inputs[0].0], &plain[inputs[1].0]);
            let cost = out.len() as u64;
            (out, cost)
        }
    })
}
