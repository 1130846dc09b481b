//! Tensorized circuits: a DAG of input, sum, Hadamard and Kronecker layers
//! with a single scalar root.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::bases::{eval_basis, BasisSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64};

/// Default bound on `‖W W† − I‖_max` for a sum layer to count as semi-unitary.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-10;

/// Dense variable index in `[0, d)`. Displayed one-based, `X1` for index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerId(pub usize);

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    RealLine,
    Interval(f64, f64),
    UnitPeriodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(usize),
    Continuous(Support),
}

impl Domain {
    pub fn is_finite(&self) -> bool {
        matches!(self, Domain::Finite(_))
    }

    pub fn cardinality(&self) -> Option<usize> {
        match *self {
            Domain::Finite(v) => Some(v),
            Domain::Continuous(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Finite(0) => Err(Error::Input(
                "finite domains need at least one value".into(),
            )),
            Domain::Continuous(Support::Interval(lo, hi))
                if lo.is_nan() || hi.is_nan() || lo >= hi =>
            {
                Err(Error::Input(format!("empty interval [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Finite(v) => x.fract() == 0.0 && x >= 0.0 && x < v as f64,
            Domain::Continuous(Support::RealLine) => x.is_finite(),
            Domain::Continuous(Support::Interval(lo, hi)) => (lo..=hi).contains(&x),
            Domain::Continuous(Support::UnitPeriodic) => (0.0..=1.0).contains(&x),
        }
    }
}

/// A set of variables, stored as a bitset over variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scope(FixedBitSet);

impl Scope {
    pub fn empty(num_vars: usize) -> Self {
        Scope(FixedBitSet::with_capacity(num_vars))
    }

    pub fn full(num_vars: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(num_vars);
        bits.insert_range(..);
        Scope(bits)
    }

    pub fn from_vars(num_vars: usize, vars: impl IntoIterator<Item = VariableId>) -> Result<Self> {
        let mut s = Self::empty(num_vars);
        for v in vars {
            if v.0 >= num_vars {
                return Err(Error::Input(format!("unknown variable {v}")));
            }
            s.0.insert(v.0);
        }
        Ok(s)
    }

    pub fn insert(&mut self, v: VariableId) {
        self.0.grow(v.0 + 1);
        self.0.insert(v.0);
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.0.contains(v.0)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn union_with(&mut self, other: &Scope) {
        self.0.union_with(&other.0);
    }

    pub fn is_subset(&self, other: &Scope) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.0.ones().map(VariableId)
    }

    pub fn capacity(&self) -> usize {
        self.0.len()
    }

    /// Sorted variable indices; a canonical key independent of capacity.
    pub fn key(&self) -> Vec<usize> {
        self.0.ones().collect()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.vars().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `K` basis functions of one variable.
    Input { var: VariableId, basis: BasisSpec },
    /// `f(x) ⊗ f(x)*` for a basis `f`; only produced by squaring.
    SquaredInput { var: VariableId, basis: BasisSpec },
    /// `W x` with `W` of shape `K1 x K2`.
    Sum {
        input: LayerId,
        weights: ComplexMatrix,
    },
    /// Elementwise product of equal-width inputs.
    Hadamard { inputs: Vec<LayerId> },
    /// Kronecker product of the inputs, in input order.
    Kronecker { inputs: Vec<LayerId> },
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Input { .. } => "input",
            Layer::SquaredInput { .. } => "squared_input",
            Layer::Sum { .. } => "sum",
            Layer::Hadamard { .. } => "hadamard",
            Layer::Kronecker { .. } => "kronecker",
        }
    }

    pub fn inputs(&self) -> &[LayerId] {
        match self {
            Layer::Input { .. } | Layer::SquaredInput { .. } => &[],
            Layer::Sum { input, .. } => std::slice::from_ref(input),
            Layer::Hadamard { inputs } | Layer::Kronecker { inputs } => inputs,
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, Layer::Hadamard { .. } | Layer::Kronecker { .. })
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Layer::Input { .. } | Layer::SquaredInput { .. })
    }
}

/// Values for some or all variables of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    values: Vec<Option<f64>>,
}

impl Assignment {
    pub fn new(num_vars: usize) -> Self {
        Self {
            values: vec![None; num_vars],
        }
    }

    /// A complete assignment, `values[i]` for variable `i`.
    pub fn full(values: &[f64]) -> Self {
        Self {
            values: values.iter().copied().map(Some).collect(),
        }
    }

    pub fn with(mut self, var: VariableId, x: f64) -> Self {
        self.set(var, x);
        self
    }

    pub fn set(&mut self, var: VariableId, x: f64) {
        if var.0 >= self.values.len() {
            self.values.resize(var.0 + 1, None);
        }
        self.values[var.0] = Some(x);
    }

    pub fn unset(&mut self, var: VariableId) {
        if let Some(slot) = self.values.get_mut(var.0) {
            *slot = None;
        }
    }

    pub fn get(&self, var: VariableId) -> Option<f64> {
        self.values.get(var.0).copied().flatten()
    }

    pub fn assigned(&self) -> impl Iterator<Item = (VariableId, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (VariableId(i), x)))
    }
}

/// Output of [`Circuit::evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: C64,
    /// Per-layer outputs, indexed by `LayerId`.
    pub outputs: Vec<ComplexVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub decomposable: bool,
    pub structured_decomposable: bool,
    pub orthonormal: bool,
    pub violations: Vec<(LayerId, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    variables: Vec<Domain>,
    layers: Vec<Layer>,
    root: LayerId,
    widths: Vec<usize>,
    scopes: Vec<Scope>,
    order: Vec<LayerId>,
}

impl Circuit {
    /// Builds a circuit and checks that it is a well-formed DAG: references
    /// resolve, no cycles, widths agree, every layer feeds the root, every
    /// variable is read by some input layer and the root is scalar.
    pub fn new(variables: Vec<Domain>, layers: Vec<Layer>, root: LayerId) -> Result<Self> {
        for d in &variables {
            d.validate()?;
        }
        let n = layers.len();
        if root.0 >= n {
            return Err(Error::DanglingReference {
                from: "root".into(),
                to: root.to_string(),
            });
        }
        for (i, layer) in layers.iter().enumerate() {
            let id = LayerId(i);
            for &input in layer.inputs() {
                if input.0 >= n {
                    return Err(Error::DanglingReference {
                        from: id.to_string(),
                        to: input.to_string(),
                    });
                }
            }
            match layer {
                Layer::Input { var, basis } | Layer::SquaredInput { var, basis } => {
                    let domain = variables
                        .get(var.0)
                        .ok_or_else(|| Error::structural(id, format!("unknown variable {var}")))?;
                    basis.validate()?;
                    if !basis.is_compatible(domain) {
                        return Err(Error::structural(
                            id,
                            format!(
                                "{} basis does not fit the domain {domain:?} of {var}",
                                basis.name()
                            ),
                        ));
                    }
                }
                Layer::Sum { weights, .. }
                    if weights
                        .data()
                        .iter()
                        .any(|w| !(w.re.is_finite() && w.im.is_finite())) =>
                {
                    return Err(Error::structural(id, "weights must be finite"));
                }
                Layer::Hadamard { inputs } | Layer::Kronecker { inputs } if inputs.len() < 2 => {
                    return Err(Error::structural(
                        id,
                        "product layers need at least two inputs",
                    ));
                }
                _ => {}
            }
        }

        let order = kahn_order(&layers)?;

        let mut widths = vec![0usize; n];
        let mut scopes: Vec<Scope> = vec![Scope::empty(variables.len()); n];
        for &id in &order {
            let layer = &layers[id.0];
            widths[id.0] = match layer {
                Layer::Input { basis, .. } => basis.width(),
                Layer::SquaredInput { basis, .. } => basis.width() * basis.width(),
                Layer::Sum { input, weights } => {
                    if weights.cols() != widths[input.0] {
                        return Err(Error::structural(
                            id,
                            format!(
                                "weights have {} columns but input {input} has width {}",
                                weights.cols(),
                                widths[input.0]
                            ),
                        ));
                    }
                    weights.rows()
                }
                Layer::Hadamard { inputs } => {
                    let w = widths[inputs[0].0];
                    if inputs.iter().any(|i| widths[i.0] != w) {
                        return Err(Error::structural(
                            id,
                            "Hadamard inputs must share one width",
                        ));
                    }
                    w
                }
                Layer::Kronecker { inputs } => inputs.iter().map(|i| widths[i.0]).product(),
            };
            let mut scope = Scope::empty(variables.len());
            match layer {
                Layer::Input { var, .. } | Layer::SquaredInput { var, .. } => scope.insert(*var),
                _ => {
                    for i in layer.inputs() {
                        scope.union_with(&scopes[i.0]);
                    }
                }
            }
            scopes[id.0] = scope;
        }

        if widths[root.0] != 1 {
            return Err(Error::structural(
                root,
                format!("root must output a scalar, found width {}", widths[root.0]),
            ));
        }

        let mut reachable = vec![false; n];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut reachable[id.0], true) {
                continue;
            }
            stack.extend(layers[id.0].inputs().iter().copied());
        }
        if let Some(i) = reachable.iter().position(|r| !r) {
            return Err(Error::structural(
                LayerId(i),
                "layer is unreachable from the root",
            ));
        }
        if let Some(v) = (0..variables.len()).find(|&v| !scopes[root.0].contains(VariableId(v))) {
            return Err(Error::structural(
                root,
                format!("variable {} is not read by any input layer", VariableId(v)),
            ));
        }

        Ok(Self {
            variables,
            layers,
            root,
            widths,
            scopes,
            order,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn domains(&self) -> &[Domain] {
        &self.variables
    }

    pub fn domain(&self, var: VariableId) -> Domain {
        self.variables[var.0]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, id: LayerId) -> &Layer {
        &self.layers[id.0]
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn root(&self) -> LayerId {
        self.root
    }

    /// Output width `K` of a layer.
    pub fn width(&self, id: LayerId) -> usize {
        self.widths[id.0]
    }

    pub fn scope(&self, id: LayerId) -> &Scope {
        &self.scopes[id.0]
    }

    pub fn all_variables(&self) -> Scope {
        Scope::full(self.variables.len())
    }

    /// Every layer after all of its inputs; ties broken by ascending id.
    pub fn topological_order(&self) -> &[LayerId] {
        &self.order
    }

    pub fn ids(&self) -> impl Iterator<Item = LayerId> {
        (0..self.layers.len()).map(LayerId)
    }

    /// Number of scalar inputs feeding the scalar outputs of a layer:
    /// `N·K` for Hadamard, `N·ΠK_i` for Kronecker, `K1·K2` for sums, `K`
    /// for inputs.
    pub fn layer_size(&self, id: LayerId) -> usize {
        let layer = &self.layers[id.0];
        match layer {
            Layer::Input { .. } | Layer::SquaredInput { .. } => self.widths[id.0],
            Layer::Sum { weights, .. } => weights.rows() * weights.cols(),
            Layer::Hadamard { inputs } => inputs.len() * self.widths[id.0],
            Layer::Kronecker { inputs } => inputs.len() * self.widths[id.0],
        }
    }

    /// `S`, the largest layer size.
    pub fn max_layer_size(&self) -> usize {
        self.ids().map(|id| self.layer_size(id)).max().unwrap_or(0)
    }

    /// The largest layer output width.
    pub fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with_tolerance(DEFAULT_UNITARITY_TOL)
    }

    pub fn validate_with_tolerance(&self, unitarity_tol: f64) -> ValidationReport {
        let mut violations = Vec::new();
        let mut decomposable = true;
        let mut binary = true;
        let mut consistent = true;
        let mut orthonormal = true;
        let mut splits = SplitIndex::default();

        for &id in &self.order {
            match &self.layers[id.0] {
                Layer::Hadamard { inputs } | Layer::Kronecker { inputs } => {
                    if inputs.len() != 2 {
                        binary = false;
                        violations.push((
                            id,
                            format!(
                                "product layer has {} inputs; only binary products are supported",
                                inputs.len()
                            ),
                        ));
                    }
                    for (a, &ia) in inputs.iter().enumerate() {
                        for &ib in &inputs[a + 1..] {
                            if !self.scopes[ia.0].is_disjoint(&self.scopes[ib.0]) {
                                decomposable = false;
                                violations.push((
                                    id,
                                    format!("inputs {ia} and {ib} have overlapping scopes"),
                                ));
                            }
                        }
                    }
                    let children: Vec<&Scope> = inputs.iter().map(|i| &self.scopes[i.0]).collect();
                    if let Some(other) = splits.record(id, &self.scopes[id.0], &children) {
                        consistent = false;
                        violations.push((
                            id,
                            format!(
                                "scope {} is split differently than by layer {other}",
                                self.scopes[id.0]
                            ),
                        ));
                    }
                }
                Layer::Sum { weights, .. } => {
                    if weights.rows() > weights.cols() {
                        orthonormal = false;
                        violations.push((
                            id,
                            format!(
                                "{}x{} weights cannot be semi-unitary (more rows than columns)",
                                weights.rows(),
                                weights.cols()
                            ),
                        ));
                    } else {
                        let defect = linalg::unitarity_defect(weights);
                        if defect > unitarity_tol {
                            orthonormal = false;
                            violations.push((
                                id,
                                format!("weights are not semi-unitary (‖WW†−I‖ = {defect:.3e})"),
                            ));
                        }
                    }
                }
                Layer::Input { basis, .. } => {
                    if !basis.is_orthonormal() {
                        orthonormal = false;
                        violations.push((id, "input basis is not orthonormal".into()));
                    }
                }
                Layer::SquaredInput { .. } => {
                    orthonormal = false;
                    violations.push((
                        id,
                        "squared input layers are not an orthonormal family".into(),
                    ));
                }
            }
        }

        ValidationReport {
            decomposable,
            structured_decomposable: decomposable && binary && consistent,
            orthonormal,
            violations,
        }
    }

    /// Feed-forward evaluation. The assignment must cover every variable.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<Evaluation> {
        for v in 0..self.variables.len() {
            if assignment.get(VariableId(v)).is_none() {
                return Err(Error::Input(format!(
                    "no value for variable {}",
                    VariableId(v)
                )));
            }
        }
        let mut outputs: Vec<ComplexVector> = vec![Vec::new(); self.layers.len()];
        for &id in &self.order {
            let out = match &self.layers[id.0] {
                Layer::Input { var, basis } => {
                    eval_basis(basis, assignment.get(*var).expect("checked above"))?
                }
                Layer::SquaredInput { var, basis } => {
                    let f = eval_basis(basis, assignment.get(*var).expect("checked above"))?;
                    linalg::self_conjugate_kron(&f)
                }
                Layer::Sum { input, weights } => weights.mul_vec(&outputs[input.0]),
                Layer::Hadamard { inputs } => {
                    let mut acc = outputs[inputs[0].0].clone();
                    for i in &inputs[1..] {
                        for (a, b) in acc.iter_mut().zip(&outputs[i.0]) {
                            *a *= b;
                        }
                    }
                    acc
                }
                Layer::Kronecker { inputs } => {
                    let mut acc = outputs[inputs[0].0].clone();
                    for i in &inputs[1..] {
                        acc = linalg::kron_vec(&acc, &outputs[i.0]);
                    }
                    acc
                }
            };
            outputs[id.0] = out;
        }
        Ok(Evaluation {
            value: outputs[self.root.0][0],
            outputs,
        })
    }

    /// The root value `c(x)`.
    pub fn value(&self, assignment: &Assignment) -> Result<C64> {
        self.evaluate(assignment).map(|e| e.value)
    }

    /// Replaces the weights of one sum layer, keeping everything else.
    pub fn with_weights(&self, id: LayerId, weights: ComplexMatrix) -> Result<Self> {
        let mut layers = self.layers.clone();
        match &mut layers[id.0] {
            Layer::Sum { weights: w, .. } => *w = weights,
            other => {
                return Err(Error::Input(format!(
                    "layer {id} is a {} layer, not a sum",
                    other.kind()
                )))
            }
        }
        Self::new(self.variables.clone(), layers, self.root)
    }

    /// Counts of layers per kind, in the order input, squared input, sum,
    /// Hadamard, Kronecker.
    pub fn kind_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for layer in &self.layers {
            let slot = match layer {
                Layer::Input { .. } => 0,
                Layer::SquaredInput { .. } => 1,
                Layer::Sum { .. } => 2,
                Layer::Hadamard { .. } => 3,
                Layer::Kronecker { .. } => 4,
            };
            counts[slot] += 1;
        }
        counts
    }
}

/// Remembers how each product scope was split; a second, different split of
/// the same scope breaks structured decomposability.
#[derive(Default)]
struct SplitIndex {
    seen: HashMap<Vec<usize>, (LayerId, Vec<Vec<usize>>)>,
}

impl SplitIndex {
    /// Records a split and returns the earlier layer it disagrees with, if any.
    fn record(&mut self, id: LayerId, scope: &Scope, children: &[&Scope]) -> Option<LayerId> {
        let mut parts: Vec<Vec<usize>> = children.iter().map(|c| c.key()).collect();
        parts.sort();
        match self.seen.get(&scope.key()) {
            Some((other, seen)) if *seen != parts => Some(*other),
            Some(_) => None,
            None => {
                self.seen.insert(scope.key(), (id, parts));
                None
            }
        }
    }
}

/// Kahn's algorithm with a min-heap, so ties go to the smallest id.
fn kahn_order(layers: &[Layer]) -> Result<Vec<LayerId>> {
    let n = layers.len();
    let mut pending = vec![0usize; n];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, layer) in layers.iter().enumerate() {
        for input in layer.inputs() {
            pending[i] += 1;
            consumers[input.0].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(LayerId(i));
        for &c in &consumers[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n)
            .find(|&i| pending[i] > 0)
            .expect("some layer is on a cycle");
        return Err(Error::structural(LayerId(stuck), "cycle detected"));
    }
    Ok(order)
}
