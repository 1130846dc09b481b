//! Reference values by direct enumeration of `|c(x)|²`.
//!
//! Nothing here goes through squaring or marginalization: every number is a
//! (weighted) sum of plain circuit evaluations. Finite variables contribute
//! every state with weight one; continuous variables contribute the nodes of
//! a quadrature rule matched to their basis.

use rayon::prelude::*;

use crate::bases::{self, QuadratureRule};
use crate::circuit::{Assignment, Circuit, Domain, Layer, Scope, Support, VariableId};
use crate::error::{Error, Result};

/// Sums with more terms than this use compensated summation.
const KAHAN_THRESHOLD: usize = 1 << 12;
/// Fixed chunk length of the parallel reduction, so results do not depend on
/// the thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_joint_states: usize,
    pub max_quadrature_points_per_var: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_joint_states: 1 << 16,
            max_quadrature_points_per_var: 64,
        }
    }
}

/// Order in which joint states are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// The last variable changes fastest.
    Forward,
    /// The first variable changes fastest.
    Reversed,
}

/// `Σ_x |c(x)|²` over all joint states of a circuit with finite domains.
pub fn brute_force_z(c: &Circuit, budget: &OracleBudget) -> Result<f64> {
    brute_force_z_with(c, budget, Sweep::Forward)
}

pub fn brute_force_z_with(c: &Circuit, budget: &OracleBudget, sweep: Sweep) -> Result<f64> {
    let rules = finite_rules(c, &c.all_variables())?;
    let vars: Vec<VariableId> = (0..c.num_variables()).map(VariableId).collect();
    weighted_sum(
        c,
        &Assignment::new(c.num_variables()),
        &vars,
        &rules,
        budget,
        sweep,
    )
}

/// `Σ_z |c(y, z)|²` over the finite variables in `z`.
pub fn brute_force_marginal(
    c: &Circuit,
    y: &Assignment,
    z: &Scope,
    budget: &OracleBudget,
) -> Result<f64> {
    let d = c.num_variables();
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
    if let Some(v) = z.vars().find(|v| v.0 >= d) {
        return Err(Error::Input(format!(
            "{v} is not a variable of the circuit"
        )));
    }
    let rules = finite_rules(c, z)?;
    let vars: Vec<VariableId> = z.vars().collect();
    weighted_sum(c, y, &vars, &rules, budget, Sweep::Forward)
}

/// `∫ |c(x)|² dx` by a product rule: exact sums over finite variables and
/// default-order quadrature over continuous ones.
pub fn quadrature_z(c: &Circuit, budget: &OracleBudget) -> Result<f64> {
    quadrature_z_with_order(c, budget, None)
}

/// As [`quadrature_z`], with every continuous variable using `order` nodes
/// when given.
pub fn quadrature_z_with_order(
    c: &Circuit,
    budget: &OracleBudget,
    order: Option<usize>,
) -> Result<f64> {
    let mut rules = Vec::with_capacity(c.num_variables());
    for v in (0..c.num_variables()).map(VariableId) {
        let rule = match c.domain(v) {
            Domain::Finite(k) => QuadratureRule::finite(k),
            Domain::Continuous(support) => {
                let basis = widest_basis(c, v).expect("every variable has an input layer");
                let n = order.unwrap_or_else(|| bases::default_order(&basis));
                if n > budget.max_quadrature_points_per_var {
                    return Err(Error::Budget(format!(
                        "{n} quadrature points for {v} exceed the budget of {}",
                        budget.max_quadrature_points_per_var
                    )));
                }
                match support {
                    Support::Interval(lo, hi) if (lo, hi) != (-1.0, 1.0) => {
                        affine(&bases::quadrature_rule(&basis, n)?, lo, hi)
                    }
                    _ => bases::quadrature_rule(&basis, n)?,
                }
            }
        };
        rules.push(rule);
    }
    let vars: Vec<VariableId> = (0..c.num_variables()).map(VariableId).collect();
    weighted_sum(
        c,
        &Assignment::new(c.num_variables()),
        &vars,
        &rules,
        budget,
        Sweep::Forward,
    )
}

fn finite_rules(c: &Circuit, vars: &Scope) -> Result<Vec<QuadratureRule>> {
    vars.vars()
        .map(|v| match c.domain(v) {
            Domain::Finite(k) => Ok(QuadratureRule::finite(k)),
            Domain::Continuous(_) => Err(Error::Input(format!(
                "{v} is continuous; enumerate it with quadrature instead"
            ))),
        })
        .collect()
}

/// The input basis with the most functions reading `v`.
fn widest_basis(c: &Circuit, v: VariableId) -> Option<bases::BasisSpec> {
    c.layers()
        .iter()
        .filter_map(|l| match l {
            Layer::Input { var, basis } | Layer::SquaredInput { var, basis } if *var == v => {
                Some(*basis)
            }
            _ => None,
        })
        .max_by_key(|b| b.width())
}

/// Maps a rule on `[-1, 1]` onto `[lo, hi]`.
fn affine(rule: &QuadratureRule, lo: f64, hi: f64) -> QuadratureRule {
    let half = 0.5 * (hi - lo);
    QuadratureRule {
        nodes: rule.nodes.iter().map(|x| lo + half * (x + 1.0)).collect(),
        weights: rule.weights.iter().map(|w| w * half).collect(),
        exact_degree: rule.exact_degree,
    }
}

fn weighted_sum(
    c: &Circuit,
    base: &Assignment,
    vars: &[VariableId],
    rules: &[QuadratureRule],
    budget: &OracleBudget,
    sweep: Sweep,
) -> Result<f64> {
    let mut total: usize = 1;
    for (v, rule) in vars.iter().zip(rules) {
        total = total
            .checked_mul(rule.len())
            .filter(|&t| t <= budget.max_joint_states)
            .ok_or_else(|| {
                Error::Budget(format!(
                    "enumerating through {v} exceeds {} joint states",
                    budget.max_joint_states
                ))
            })?;
    }

    let term = |index: usize| -> Result<f64> {
        let mut x = base.clone();
        let mut weight = 1.0;
        let mut rest = index;
        let mut place = |slot: usize| {
            let rule = &rules[slot];
            let k = rest % rule.len();
            rest /= rule.len();
            x.set(vars[slot], rule.nodes[k]);
            weight *= rule.weights[k];
        };
        match sweep {
            Sweep::Forward => (0..vars.len()).rev().for_each(&mut place),
            Sweep::Reversed => (0..vars.len()).for_each(&mut place),
        }
        Ok(weight * c.value(&x)?.norm_sqr())
    };

    if total <= KAHAN_THRESHOLD {
        let mut sum = 0.0;
        for i in 0..total {
            sum += term(i)?;
        }
        return Ok(sum);
    }

    let partials: Vec<f64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let mut acc = Kahan::default();
            for i in start..(start + CHUNK).min(total) {
                acc.add(term(i)?);
            }
            Ok(acc.sum())
        })
        .collect::<Result<_>>()?;
    let mut acc = Kahan::default();
    partials.into_iter().for_each(|p| acc.add(p));
    Ok(acc.sum())
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::BasisSpec;
    use crate::circuit::LayerId;
    use crate::generator::{self, GenSpec, ParamMode, ProductKind, Shape};
    use crate::linalg::{ComplexMatrix, C64};
    use crate::samples;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    fn spec(seed: u64, mode: ParamMode) -> GenSpec {
        GenSpec {
            shape: Shape::Random,
            width: 3,
            product_kind: ProductKind::Mixed,
            param_mode: mode,
            seed,
        }
    }

    #[test]
    fn orthonormal_three_binary() {
        let c = generator::generate(3, 2, &spec(2, ParamMode::Unitary)).unwrap();
        assert!((brute_force_z(&c, &budget()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn two_zero_row() {
        assert_eq!(brute_force_z(&samples::two_zero(), &budget()).unwrap(), 4.0);
    }

    #[test]
    fn both_sweeps_agree() {
        for seed in 0..5 {
            let c = generator::generate(5, 3, &spec(seed, ParamMode::Generic)).unwrap();
            let a = brute_force_z_with(&c, &budget(), Sweep::Forward).unwrap();
            let b = brute_force_z_with(&c, &budget(), Sweep::Reversed).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn compensated_path_agrees_and_is_deterministic() {
        // 3^8 = 6561 states crosses the compensated-summation threshold.
        let c = generator::generate(8, 3, &spec(9, ParamMode::Generic)).unwrap();
        let a = brute_force_z_with(&c, &budget(), Sweep::Forward).unwrap();
        let b = brute_force_z_with(&c, &budget(), Sweep::Reversed).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        assert_eq!(a.to_bits(), brute_force_z(&c, &budget()).unwrap().to_bits());
        let u = generator::generate(8, 3, &spec(9, ParamMode::Unitary)).unwrap();
        assert!((brute_force_z(&u, &budget()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let c = generator::generate(6, 4, &spec(1, ParamMode::Unitary)).unwrap();
        let small = OracleBudget {
            max_joint_states: 1000,
            ..budget()
        };
        assert!(matches!(brute_force_z(&c, &small), Err(Error::Budget(_))));
    }

    #[test]
    fn marginals() {
        let c = samples::figure_one();
        let x = Assignment::full(&[0.0, 1.0, 1.0, 0.0]);
        let none = brute_force_marginal(&c, &x, &Scope::empty(4), &budget()).unwrap();
        assert!((none - c.value(&x).unwrap().norm_sqr()).abs() < 1e-15);
        let all =
            brute_force_marginal(&c, &Assignment::new(4), &c.all_variables(), &budget()).unwrap();
        assert!((all - 1.0).abs() < 1e-12);

        let z = Scope::from_vars(4, [VariableId(2), VariableId(3)]).unwrap();
        let y = Assignment::new(4)
            .with(VariableId(0), 1.0)
            .with(VariableId(1), 1.0);
        let mut want = 0.0;
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            want += c
                .value(&Assignment::full(&[1.0, 1.0, a, b]))
                .unwrap()
                .norm_sqr();
        }
        assert_eq!(brute_force_marginal(&c, &y, &z, &budget()).unwrap(), want);
    }

    #[test]
    fn marginals_sum_to_the_partition_function() {
        let c = generator::generate(4, 3, &spec(4, ParamMode::Generic)).unwrap();
        let z = Scope::from_vars(4, [VariableId(1), VariableId(3)]).unwrap();
        let mut total = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let y = Assignment::new(4)
                    .with(VariableId(0), a as f64)
                    .with(VariableId(2), b as f64);
                total += brute_force_marginal(&c, &y, &z, &budget()).unwrap();
            }
        }
        let full = brute_force_z(&c, &budget()).unwrap();
        assert!((total - full).abs() <= 1e-10 * full);
    }

    fn continuous(bases: &[BasisSpec], seed: u64) -> Circuit {
        generator::generate_with_bases(bases, &spec(seed, ParamMode::Unitary)).unwrap()
    }

    #[test]
    fn hermite_pair_at_order_32() {
        let c = continuous(
            &[BasisSpec::Hermite { k: 3 }, BasisSpec::Hermite { k: 3 }],
            1,
        );
        let z = quadrature_z_with_order(&c, &budget(), Some(32)).unwrap();
        assert!((z - 1.0).abs() <= 1e-6, "{z}");
    }

    #[test]
    fn single_fourier() {
        let layers = vec![
            Layer::Input {
                var: VariableId(0),
                basis: BasisSpec::Fourier { k: 2 },
            },
            Layer::Sum {
                input: LayerId(0),
                weights: ComplexMatrix::from_rows(&[vec![
                    C64::new(FRAC_1_SQRT_2, 0.0),
                    C64::new(0.0, FRAC_1_SQRT_2),
                ]])
                .unwrap(),
            },
        ];
        let c = Circuit::new(
            vec![Domain::Continuous(Support::UnitPeriodic)],
            layers,
            LayerId(1),
        )
        .unwrap();
        assert!((quadrature_z(&c, &budget()).unwrap() - 1.0).abs() <= 1e-10);
        assert!(matches!(brute_force_z(&c, &budget()), Err(Error::Input(_))));
    }

    #[test]
    fn indicator_and_legendre() {
        let c = continuous(
            &[BasisSpec::Indicator { v: 2 }, BasisSpec::Legendre { k: 3 }],
            3,
        );
        assert!((quadrature_z(&c, &budget()).unwrap() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn quadrature_budget() {
        let c = continuous(&[BasisSpec::Hermite { k: 20 }], 0);
        assert!(matches!(quadrature_z(&c, &budget()), Err(Error::Budget(_))));
    }
}
