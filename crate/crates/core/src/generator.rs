//! Seeded random structured-decomposable circuits.
//!
//! A variable tree fixes how scopes split; the circuit gets one input layer
//! per leaf, one product per internal node and a sum above every product
//! (scalar at the root).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bases::BasisSpec;
use crate::circuit::{Circuit, Layer, LayerId, VariableId};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64};

/// Binary tree over variables; internal nodes split their scope in two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VTree {
    Leaf(VariableId),
    Node(Box<VTree>, Box<VTree>),
}

impl VTree {
    pub fn node(left: VTree, right: VTree) -> Self {
        VTree::Node(Box::new(left), Box::new(right))
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            VTree::Leaf(_) => 0,
            VTree::Node(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<VariableId> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<VariableId>) {
        match self {
            VTree::Leaf(v) => out.push(*v),
            VTree::Node(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    /// Left-to-right caterpillar `v0 | (v1 | (v2 | ...))`.
    pub fn chain(vars: &[VariableId]) -> Self {
        match vars {
            [] => panic!("a variable tree needs at least one variable"),
            [v] => VTree::Leaf(*v),
            [v, rest @ ..] => VTree::node(VTree::Leaf(*v), VTree::chain(rest)),
        }
    }

    /// Minimal-depth tree; the left half takes the extra variable.
    pub fn balanced(vars: &[VariableId]) -> Self {
        match vars {
            [] => panic!("a variable tree needs at least one variable"),
            [v] => VTree::Leaf(*v),
            _ => {
                let (l, r) = vars.split_at(vars.len().div_ceil(2));
                VTree::node(VTree::balanced(l), VTree::balanced(r))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Random,
    Balanced,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Hadamard,
    Kronecker,
    /// A seeded coin flip per node.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    /// Every sum is semi-unitary.
    Unitary,
    /// Raw complex Gaussian weights.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub shape: Shape,
    /// Output width `K` of inner sum layers.
    pub width: usize,
    pub product_kind: ProductKind,
    pub param_mode: ParamMode,
    pub seed: u64,
}

pub fn random_vtree(vars: &[VariableId], shape: Shape, seed: u64) -> Result<VTree> {
    if vars.is_empty() {
        return Err(Error::Input(
            "a variable tree needs at least one variable".into(),
        ));
    }
    Ok(match shape {
        Shape::Balanced => VTree::balanced(vars),
        Shape::Chain => VTree::chain(vars),
        Shape::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = vars.to_vec();
            shuffled.shuffle(&mut rng);
            random_split(&shuffled, &mut rng)
        }
    })
}

fn random_split(vars: &[VariableId], rng: &mut ChaCha8Rng) -> VTree {
    if vars.len() == 1 {
        return VTree::Leaf(vars[0]);
    }
    let (l, r) = vars.split_at(rng.random_range(1..vars.len()));
    VTree::node(random_split(l, rng), random_split(r, rng))
}

/// Kept variables `0..kept` on a chain, joined at the root with a balanced
/// tree over the marginalized variables `kept..kept + marginalized`.
pub fn split_vtree(kept: usize, marginalized: usize) -> Result<VTree> {
    if kept == 0 || marginalized == 0 {
        return Err(Error::Input(
            "both sides of the split need variables".into(),
        ));
    }
    let ys: Vec<VariableId> = (0..kept).map(VariableId).collect();
    let zs: Vec<VariableId> = (kept..kept + marginalized).map(VariableId).collect();
    Ok(VTree::node(VTree::chain(&ys), VTree::balanced(&zs)))
}

/// Builds a circuit over `vtree`; `bases[i]` is the input basis of variable
/// `i` and fixes its domain.
pub fn build_random_circuit(vtree: &VTree, bases: &[BasisSpec], spec: &GenSpec) -> Result<Circuit> {
    if spec.width == 0 {
        return Err(Error::Input("width must be at least 1".into()));
    }
    let mut leaves = vtree.leaves();
    leaves.sort();
    if leaves != (0..bases.len()).map(VariableId).collect::<Vec<_>>() {
        return Err(Error::Input(format!(
            "the variable tree must cover each of the {} variables exactly once",
            bases.len()
        )));
    }
    for b in bases {
        b.validate()?;
    }
    let mut builder = Builder {
        layers: Vec::new(),
        bases,
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed ^ 0x243F_6A88_85A3_08D3),
    };
    let (top, width) = builder.subtree(vtree)?;
    let root = builder.sum(top, 1, width);
    let domains = bases.iter().map(|b| b.domain()).collect();
    Circuit::new(domains, builder.layers, root)
}

/// `vars` variables with `Finite(domain)` domains read by indicators.
pub fn generate(vars: usize, domain: usize, spec: &GenSpec) -> Result<Circuit> {
    generate_with_bases(&vec![BasisSpec::Indicator { v: domain }; vars], spec)
}

/// One variable per basis, over a tree of the requested shape.
pub fn generate_with_bases(bases: &[BasisSpec], spec: &GenSpec) -> Result<Circuit> {
    let vars: Vec<VariableId> = (0..bases.len()).map(VariableId).collect();
    let vtree = random_vtree(&vars, spec.shape, spec.seed)?;
    build_random_circuit(&vtree, bases, spec)
}

struct Builder<'a> {
    layers: Vec<Layer>,
    bases: &'a [BasisSpec],
    spec: &'a GenSpec,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn push(&mut self, layer: Layer) -> LayerId {
        self.layers.push(layer);
        LayerId(self.layers.len() - 1)
    }

    fn subtree(&mut self, node: &VTree) -> Result<(LayerId, usize)> {
        match node {
            VTree::Leaf(v) => {
                let basis = self.bases[v.0];
                Ok((self.push(Layer::Input { var: *v, basis }), basis.width()))
            }
            VTree::Node(l, r) => {
                let (a, ka) = self.subtree(l)?;
                let (b, kb) = self.subtree(r)?;
                let hadamard = match self.spec.product_kind {
                    ProductKind::Hadamard => true,
                    ProductKind::Kronecker => false,
                    ProductKind::Mixed => self.rng.random_bool(0.5),
                };
                let (product, width) = if hadamard {
                    let k = ka.min(kb);
                    let a = if ka > k { self.sum(a, k, ka) } else { a };
                    let b = if kb > k { self.sum(b, k, kb) } else { b };
                    (self.push(Layer::Hadamard { inputs: vec![a, b] }), k)
                } else {
                    (self.push(Layer::Kronecker { inputs: vec![a, b] }), ka * kb)
                };
                let k = self.spec.width.min(width);
                Ok((self.sum(product, k, width), k))
            }
        }
    }

    fn sum(&mut self, input: LayerId, rows: usize, cols: usize) -> LayerId {
        let weights = match self.spec.param_mode {
            ParamMode::Generic => gaussian(&mut self.rng, rows, cols),
            ParamMode::Unitary => semi_unitary(&mut self.rng, rows, cols),
        };
        self.push(Layer::Sum { input, weights })
    }
}

/// Entries with independent `N(0, ½)` real and imaginary parts.
fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// `Q†` from the thin QR of a tall complex Gaussian matrix.
fn semi_unitary(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    loop {
        let g = gaussian(rng, cols, rows);
        // A Gaussian draw is rank deficient with probability zero.
        if let Ok((q, _)) = linalg::qr_thin(&g) {
            return q.adjoint();
        }
    }
}
