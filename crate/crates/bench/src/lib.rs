//! Benchmark fixtures: seeded circuits and marginal queries.

use orthocirc::bases::BasisSpec;
use orthocirc::generator::{self, GenSpec, ParamMode, ProductKind, Shape, VTree};
use orthocirc::{Assignment, Circuit, Scope, VariableId};

/// An orthonormal Kronecker chain over `kept + marginalized` binary
/// variables, with the marginalized ones at the deep end.
pub fn chain(kept: usize, marginalized: usize, width: usize) -> Circuit {
    let vars: Vec<VariableId> = (0..kept + marginalized).map(VariableId).collect();
    let spec = GenSpec {
        shape: Shape::Chain,
        width,
        product_kind: ProductKind::Kronecker,
        param_mode: ParamMode::Unitary,
        seed: 7,
    };
    let bases = vec![BasisSpec::Indicator { v: 2 }; vars.len()];
    generator::build_random_circuit(&VTree::chain(&vars), &bases, &spec).expect("valid chain")
}

/// Observe the first `kept` variables (alternating 0/1), integrate the rest.
pub fn tail_query(kept: usize, marginalized: usize) -> (Assignment, Scope) {
    let d = kept + marginalized;
    let mut y = Assignment::new(d);
    for v in 0..kept {
        y.set(VariableId(v), (v % 2) as f64);
    }
    let z = Scope::from_vars(d, (kept..d).map(VariableId)).expect("in range");
    (y, z)
}

/// A seeded circuit with unnormalized weights, for the transforms.
pub fn generic(vars: usize, width: usize) -> Circuit {
    let spec = GenSpec {
        shape: Shape::Balanced,
        width,
        product_kind: ProductKind::Mixed,
        param_mode: ParamMode::Generic,
        seed: 11,
    };
    generator::generate(vars, 2, &spec).expect("valid circuit")
}
