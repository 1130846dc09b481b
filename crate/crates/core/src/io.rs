//! JSON circuit documents.
//!
//! The canonical form puts one compact object per line for each variable
//! and layer, lists layers in topological order with ids `0..n`, and writes
//! floats as the shortest decimal that round-trips.
//!
//! ```text
//! {
//!   "format_version": "1",
//!   "variables": [
//!     {"id":0,"domain":{"kind":"finite","v":2}}
//!   ],
//!   "layers": [
//!     {"kind":"input","id":0,"var":0,"basis":{"name":"indicator","v":2},"k":2},
//!     {"kind":"sum","id":1,"input":0,"rows":1,"cols":2,"weights":[[0.5,0.0],[0.0,-0.5]]}
//!   ],
//!   "root": 1
//! }
//! ```
//!
//! Domains are `finite` (with `v`), `real_line`, `unit_periodic` or
//! `interval` (with `lo`, `hi`). Bases are `indicator` (with `v`) or
//! `fourier`, `hermite`, `legendre` (with `k`). Layer kinds are `input`,
//! `squared_input`, `sum`, `hadamard` and `kronecker`; weights are row-major
//! `[re, im]` pairs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bases::BasisSpec;
use crate::circuit::{Circuit, Domain, Layer, LayerId, Support, VariableId};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub const FORMAT_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    id: usize,
    domain: DomainDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DomainDoc {
    Finite { v: usize },
    RealLine,
    UnitPeriodic,
    Interval { lo: f64, hi: f64 },
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
enum BasisDoc {
    Indicator { v: usize },
    Fourier { k: usize },
    Hermite { k: usize },
    Legendre { k: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LayerDoc {
    Input {
        id: usize,
        var: usize,
        basis: BasisDoc,
        k: usize,
    },
    SquaredInput {
        id: usize,
        var: usize,
        basis: BasisDoc,
        k: usize,
    },
    Sum {
        id: usize,
        input: usize,
        rows: usize,
        cols: usize,
        weights: Vec<[f64; 2]>,
    },
    Hadamard {
        id: usize,
        inputs: Vec<usize>,
    },
    Kronecker {
        id: usize,
        inputs: Vec<usize>,
    },
}

impl LayerDoc {
    fn id(&self) -> usize {
        match *self {
            LayerDoc::Input { id, .. }
            | LayerDoc::SquaredInput { id, .. }
            | LayerDoc::Sum { id, .. }
            | LayerDoc::Hadamard { id, .. }
            | LayerDoc::Kronecker { id, .. } => id,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[allow(dead_code)]
    format_version: String,
    variables: Vec<VariableDoc>,
    layers: Vec<LayerDoc>,
    root: usize,
}

impl From<BasisSpec> for BasisDoc {
    fn from(b: BasisSpec) -> Self {
        match b {
            BasisSpec::Indicator { v } => BasisDoc::Indicator { v },
            BasisSpec::Fourier { k } => BasisDoc::Fourier { k },
            BasisSpec::Hermite { k } => BasisDoc::Hermite { k },
            BasisSpec::Legendre { k } => BasisDoc::Legendre { k },
        }
    }
}

impl From<BasisDoc> for BasisSpec {
    fn from(b: BasisDoc) -> Self {
        match b {
            BasisDoc::Indicator { v } => BasisSpec::Indicator { v },
            BasisDoc::Fourier { k } => BasisSpec::Fourier { k },
            BasisDoc::Hermite { k } => BasisSpec::Hermite { k },
            BasisDoc::Legendre { k } => BasisSpec::Legendre { k },
        }
    }
}

fn domain_doc(d: &Domain) -> DomainDoc {
    match *d {
        Domain::Finite(v) => DomainDoc::Finite { v },
        Domain::Continuous(Support::RealLine) => DomainDoc::RealLine,
        Domain::Continuous(Support::UnitPeriodic) => DomainDoc::UnitPeriodic,
        Domain::Continuous(Support::Interval(lo, hi)) => DomainDoc::Interval { lo, hi },
    }
}

fn domain_from(d: &DomainDoc) -> Domain {
    match *d {
        DomainDoc::Finite { v } => Domain::Finite(v),
        DomainDoc::RealLine => Domain::Continuous(Support::RealLine),
        DomainDoc::UnitPeriodic => Domain::Continuous(Support::UnitPeriodic),
        DomainDoc::Interval { lo, hi } => Domain::Continuous(Support::Interval(lo, hi)),
    }
}

/// Parses a circuit document and builds the circuit it describes. Layer ids
/// in the document may be any distinct integers; the circuit numbers layers
/// in document order.
pub fn read_circuit(text: &str) -> Result<Circuit> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: ".".into(),
        message: e.to_string(),
    })?;
    match value.get("format_version") {
        Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
        Some(serde_json::Value::String(v)) => {
            return Err(Error::Version {
                found: v.clone(),
                expected: FORMAT_VERSION.into(),
            })
        }
        Some(other) => {
            return Err(Error::Version {
                found: other.to_string(),
                expected: FORMAT_VERSION.into(),
            })
        }
        None => {
            return Err(Error::Parse {
                path: "format_version".into(),
                message: "missing field".into(),
            })
        }
    }
    let doc: Document = serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let d = doc.variables.len();
    let mut domains: Vec<Option<Domain>> = vec![None; d];
    for (i, var) in doc.variables.iter().enumerate() {
        let slot = domains.get_mut(var.id).ok_or_else(|| Error::Parse {
            path: format!("variables[{i}].id"),
            message: format!("variable ids must be 0..{d}, found {}", var.id),
        })?;
        if slot.replace(domain_from(&var.domain)).is_some() {
            return Err(Error::Parse {
                path: format!("variables[{i}].id"),
                message: format!("duplicate variable id {}", var.id),
            });
        }
    }
    let domains: Vec<Domain> = domains
        .into_iter()
        .map(|d| d.expect("ids are dense"))
        .collect();

    let mut index: HashMap<usize, usize> = HashMap::with_capacity(doc.layers.len());
    for (i, layer) in doc.layers.iter().enumerate() {
        if index.insert(layer.id(), i).is_some() {
            return Err(Error::Parse {
                path: format!("layers[{i}].id"),
                message: format!("duplicate layer id {}", layer.id()),
            });
        }
    }
    let resolve = |from: String, to: usize| -> Result<LayerId> {
        index
            .get(&to)
            .map(|&i| LayerId(i))
            .ok_or(Error::DanglingReference {
                from,
                to: format!("layer {to}"),
            })
    };
    let variable = |i: usize, var: usize| -> Result<VariableId> {
        if var < d {
            Ok(VariableId(var))
        } else {
            Err(Error::Parse {
                path: format!("layers[{i}].var"),
                message: format!("unknown variable id {var}"),
            })
        }
    };
    let check_k = |i: usize, basis: &BasisSpec, k: usize| -> Result<()> {
        if basis.width() == k {
            Ok(())
        } else {
            Err(Error::Parse {
                path: format!("layers[{i}].k"),
                message: format!(
                    "{} basis has {} functions, not {k}",
                    basis.name(),
                    basis.width()
                ),
            })
        }
    };

    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, layer) in doc.layers.iter().enumerate() {
        let from = format!("layer {}", layer.id());
        layers.push(match layer {
            LayerDoc::Input { var, basis, k, .. } => {
                let basis = BasisSpec::from(*basis);
                check_k(i, &basis, *k)?;
                Layer::Input {
                    var: variable(i, *var)?,
                    basis,
                }
            }
            LayerDoc::SquaredInput { var, basis, k, .. } => {
                let basis = BasisSpec::from(*basis);
                check_k(i, &basis, *k)?;
                Layer::SquaredInput {
                    var: variable(i, *var)?,
                    basis,
                }
            }
            LayerDoc::Sum {
                input,
                rows,
                cols,
                weights,
                ..
            } => {
                if rows * cols != weights.len() {
                    return Err(Error::Parse {
                        path: format!("layers[{i}].weights"),
                        message: format!(
                            "expected {rows}x{cols} = {} entries, found {}",
                            rows * cols,
                            weights.len()
                        ),
                    });
                }
                let data = weights.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                Layer::Sum {
                    input: resolve(from, *input)?,
                    weights: ComplexMatrix::new(*rows, *cols, data)?,
                }
            }
            LayerDoc::Hadamard { inputs, .. } => Layer::Hadamard {
                inputs: inputs
                    .iter()
                    .map(|&j| resolve(from.clone(), j))
                    .collect::<Result<_>>()?,
            },
            LayerDoc::Kronecker { inputs, .. } => Layer::Kronecker {
                inputs: inputs
                    .iter()
                    .map(|&j| resolve(from.clone(), j))
                    .collect::<Result<_>>()?,
            },
        });
    }
    let root = resolve("root".into(), doc.root)?;
    Circuit::new(domains, layers, root)
}

/// Canonical text of a circuit; `read_circuit` of the result is a fixed
/// point of `write_circuit`.
pub fn write_circuit(c: &Circuit) -> String {
    let order = c.topological_order();
    let mut new_id = vec![0usize; c.len()];
    for (i, id) in order.iter().enumerate() {
        new_id[id.0] = i;
    }

    let variables: Vec<String> = c
        .domains()
        .iter()
        .enumerate()
        .map(|(id, d)| {
            line(&VariableDoc {
                id,
                domain: domain_doc(d),
            })
        })
        .collect();
    let layers: Vec<String> = order
        .iter()
        .map(|&old| {
            let id = new_id[old.0];
            let doc = match c.layer(old) {
                Layer::Input { var, basis } => LayerDoc::Input {
                    id,
                    var: var.0,
                    basis: (*basis).into(),
                    k: basis.width(),
                },
                Layer::SquaredInput { var, basis } => LayerDoc::SquaredInput {
                    id,
                    var: var.0,
                    basis: (*basis).into(),
                    k: basis.width(),
                },
                Layer::Sum { input, weights } => LayerDoc::Sum {
                    id,
                    input: new_id[input.0],
                    rows: weights.rows(),
                    cols: weights.cols(),
                    weights: weights.data().iter().map(|w| [w.re, w.im]).collect(),
                },
                Layer::Hadamard { inputs } => LayerDoc::Hadamard {
                    id,
                    inputs: inputs.iter().map(|i| new_id[i.0]).collect(),
                },
                Layer::Kronecker { inputs } => LayerDoc::Kronecker {
                    id,
                    inputs: inputs.iter().map(|i| new_id[i.0]).collect(),
                },
            };
            line(&doc)
        })
        .collect();

    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"format_version\": \"{FORMAT_VERSION}\",\n"));
    push_list(&mut out, "variables", &variables);
    out.push_str(",\n");
    push_list(&mut out, "layers", &layers);
    out.push_str(",\n");
    out.push_str(&format!("  \"root\": {}\n", new_id[c.root().0]));
    out.push_str("}\n");
    out
}

fn push_list(out: &mut String, key: &str, items: &[String]) {
    out.push_str(&format!("  \"{key}\": ["));
    if items.is_empty() {
        out.push(']');
        return;
    }
    out.push('\n');
    for (i, item) in items.iter().enumerate() {
        out.push_str("    ");
        out.push_str(item);
        if i + 1 < items.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]");
}

fn line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("documents contain only finite numbers")
}
