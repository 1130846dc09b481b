//! Small hand-built circuits used by tests, benches and the docs.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::bases::BasisSpec;
use crate::circuit::{Circuit, Domain, Layer, LayerId, VariableId};
use crate::linalg::{ComplexMatrix, C64};

fn indicator(var: usize, v: usize) -> Layer {
    Layer::Input {
        var: VariableId(var),
        basis: BasisSpec::Indicator { v },
    }
}

/// One binary variable read by an indicator, summed by a single row `w`.
pub fn single_sum(w: &[C64]) -> Circuit {
    let weights = ComplexMatrix::new(1, w.len(), w.to_vec()).expect("row vector");
    Circuit::new(
        vec![Domain::Finite(w.len())],
        vec![
            indicator(0, w.len()),
            Layer::Sum {
                input: LayerId(0),
                weights,
            },
        ],
        LayerId(1),
    )
    .expect("well-formed")
}

/// The four-variable tree: Hadamard products over {X1,X2} and {X3,X4}, a
/// sum above each, a Hadamard over both and a scalar root sum. All weights
/// are unitary, so the circuit is orthonormal.
///
/// Layer ids: inputs 0..4, products 4 and 5, sums 6 and 7, top product 8,
/// root 9.
pub fn figure_one() -> Circuit {
    let h = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    let left = ComplexMatrix::from_rows(&[vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]])
        .unwrap();
    let right = ComplexMatrix::from_rows(&[vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]])
        .unwrap();
    let root = ComplexMatrix::from_rows(&[vec![c(0.6, 0.0), c(0.0, 0.8)]]).unwrap();
    figure_one_with(left, right, root)
}

/// The four-variable tree with caller-chosen weights (2x2, 2x2, 1x2).
pub fn figure_one_with(left: ComplexMatrix, right: ComplexMatrix, root: ComplexMatrix) -> Circuit {
    let layers = vec![
        indicator(0, 2),
        indicator(1, 2),
        indicator(2, 2),
        indicator(3, 2),
        Layer::Hadamard {
            inputs: vec![LayerId(0), LayerId(1)],
        },
        Layer::Hadamard {
            inputs: vec![LayerId(2), LayerId(3)],
        },
        Layer::Sum {
            input: LayerId(4),
            weights: left,
        },
        Layer::Sum {
            input: LayerId(5),
            weights: right,
        },
        Layer::Hadamard {
            inputs: vec![LayerId(6), LayerId(7)],
        },
        Layer::Sum {
            input: LayerId(8),
            weights: root,
        },
    ];
    Circuit::new(vec![Domain::Finite(2); 4], layers, LayerId(9)).expect("well-formed")
}

/// Indicator over two states followed by the root row `[2, 0]`; its squared
/// partition function is 4.
pub fn two_zero() -> Circuit {
    single_sum(&[C64::new(2.0, 0.0), C64::new(0.0, 0.0)])
}
