//! Orthonormal function families for input layers, plus the quadrature
//! rules used to check their orthonormality numerically.
//!
//! | family    | support          | `f_k(x)`                                   |
//! |-----------|------------------|--------------------------------------------|
//! | indicator | `{0, .., v-1}`   | `δ(x, k)`                                  |
//! | fourier   | `[0, 1)` periodic| `exp(2πi k x)`                             |
//! | hermite   | real line        | `(2^k k! √π)^{-1/2} H_k(x) exp(-x²/2)`     |
//! | legendre  | `[-1, 1]`        | `√((2k+1)/2) P_k(x)`                       |

use std::f64::consts::PI;

use crate::circuit::{Domain, Support};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisSpec {
    Indicator { v: usize },
    Fourier { k: usize },
    Hermite { k: usize },
    Legendre { k: usize },
}

impl BasisSpec {
    /// Number of functions `K`.
    pub fn width(&self) -> usize {
        match *self {
            BasisSpec::Indicator { v } => v,
            BasisSpec::Fourier { k } | BasisSpec::Hermite { k } | BasisSpec::Legendre { k } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisSpec::Indicator { .. } => "indicator",
            BasisSpec::Fourier { .. } => "fourier",
            BasisSpec::Hermite { .. } => "hermite",
            BasisSpec::Legendre { .. } => "legendre",
        }
    }

    /// The domain a variable must have to carry this basis.
    pub fn domain(&self) -> Domain {
        match *self {
            BasisSpec::Indicator { v } => Domain::Finite(v),
            BasisSpec::Fourier { .. } => Domain::Continuous(Support::UnitPeriodic),
            BasisSpec::Hermite { .. } => Domain::Continuous(Support::RealLine),
            BasisSpec::Legendre { .. } => Domain::Continuous(Support::Interval(-1.0, 1.0)),
        }
    }

    pub fn is_compatible(&self, domain: &Domain) -> bool {
        self.domain() == *domain
    }

    pub fn validate(&self) -> Result<()> {
        if self.width() == 0 {
            return Err(Error::Input(format!(
                "{} basis needs at least one function",
                self.name()
            )));
        }
        Ok(())
    }

    /// Every family here integrates to the identity Gram matrix.
    pub fn is_orthonormal(&self) -> bool {
        true
    }
}

fn check_in_domain(spec: &BasisSpec, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Input(format!("{x} is not a finite value")));
    }
    let ok = match *spec {
        BasisSpec::Indicator { v } => x.fract() == 0.0 && x >= 0.0 && (x as usize) < v,
        BasisSpec::Fourier { .. } => (0.0..=1.0).contains(&x),
        BasisSpec::Hermite { .. } => true,
        BasisSpec::Legendre { .. } => (-1.0..=1.0).contains(&x),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "value {x} is outside the domain of the {} basis",
            spec.name()
        )))
    }
}

/// Evaluates all `K` basis functions at `x`.
pub fn eval_basis(spec: &BasisSpec, x: f64) -> Result<ComplexVector> {
    check_in_domain(spec, x)?;
    Ok(match *spec {
        BasisSpec::Indicator { v } => {
            let mut out = vec![ZERO; v];
            out[x as usize] = ONE;
            out
        }
        BasisSpec::Fourier { k } => (0..k)
            .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 * x))
            .collect(),
        BasisSpec::Hermite { k } => hermite_functions(k, x).into_iter().map(C64::from).collect(),
        BasisSpec::Legendre { k } => legendre_normalized(k, x)
            .into_iter()
            .map(C64::from)
            .collect(),
    })
}

/// `ψ_0..ψ_{k-1}` at `x` through the normalized three-term recurrence
/// `ψ_{n+1} = √(2/(n+1)) x ψ_n − √(n/(n+1)) ψ_{n−1}`.
pub fn hermite_functions(k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    if k == 0 {
        return out;
    }
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if k == 1 {
        return out;
    }
    out.push(2f64.sqrt() * x * psi0);
    for n in 1..k - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `√((2n+1)/2) P_n(x)` for `n < k`, via Bonnet's recurrence.
pub fn legendre_normalized(k: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(k);
    for n in 0..k {
        let value = match n {
            0 => 1.0,
            1 => x,
            _ => {
                let m = (n - 1) as f64;
                ((2.0 * m + 1.0) * x * p[n - 1] - m * p[n - 2]) / (m + 1.0)
            }
        };
        p.push(value);
    }
    p.iter()
        .enumerate()
        .map(|(n, v)| ((2.0 * n as f64 + 1.0) / 2.0).sqrt() * v)
        .collect()
}

/// `ln(2^k k! √π) / 2`, the log of the Hermite-function normalizer.
pub fn hermite_log_norm(k: usize) -> f64 {
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    0.5 * (k as f64 * 2f64.ln() + ln_fact + 0.5 * PI.ln())
}

/// The analytic Gram matrix `∫ f_i f_j* dx`, which is `I_K` for every family.
pub fn gram(spec: &BasisSpec) -> ComplexMatrix {
    ComplexMatrix::identity(spec.width())
}

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Largest polynomial (or trigonometric) degree integrated exactly.
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unit weights over `{0, .., v-1}`.
    pub fn finite(v: usize) -> Self {
        Self {
            nodes: (0..v).map(|i| i as f64).collect(),
            weights: vec![1.0; v],
            exact_degree: usize::MAX,
        }
    }

    /// Trapezoid rule on the unit period; exact for frequencies below `n`.
    pub fn periodic_trapezoid(n: usize) -> Self {
        assert!(n > 0);
        Self {
            nodes: (0..n).map(|j| j as f64 / n as f64).collect(),
            weights: vec![1.0 / n as f64; n],
            exact_degree: n - 1,
        }
    }

    /// Gauss–Legendre on `[-1, 1]`, exact up to degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp = 1.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes,
            weights,
            exact_degree: 2 * n - 1,
        }
    }

    /// Gauss–Hermite nodes with the `e^{-x²}` weight folded back in, so that
    /// `Σ w_i g(x_i) ≈ ∫ g(x) dx` for `g = p(x) e^{-x²}` with `deg p ≤ 2n − 1`.
    /// This is the right rule for products of Hermite functions.
    pub fn gauss_hermite_functions(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[n - 1],
                3 => 1.91 * z - 0.91 * nodes[n - 2],
                _ => 2.0 * z - nodes[n - 1 - (i - 2)],
            };
            let mut pp = 1.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (PI.powf(-0.25), 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 * z1.abs().max(1.0) {
                    break;
                }
            }
            let w = 2.0 / (pp * pp) * (z * z).exp();
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes,
            weights,
            exact_degree: 2 * n - 1,
        }
    }
}

/// Smallest order for which [`gram_numeric`] is exact for `spec`.
pub fn minimum_order(spec: &BasisSpec) -> usize {
    match *spec {
        BasisSpec::Indicator { v } => v,
        BasisSpec::Fourier { k } => 2 * k,
        BasisSpec::Hermite { k } | BasisSpec::Legendre { k } => k,
    }
}

/// Documented default orders: `2K` trapezoid nodes, `4K` Gauss–Hermite nodes,
/// `2K` Gauss–Legendre nodes.
pub fn default_order(spec: &BasisSpec) -> usize {
    match *spec {
        BasisSpec::Indicator { v } => v,
        BasisSpec::Fourier { k } => 2 * k,
        BasisSpec::Hermite { k } => 4 * k,
        BasisSpec::Legendre { k } => 2 * k,
    }
}

/// The quadrature rule of the given order matching the basis' support.
pub fn quadrature_rule(spec: &BasisSpec, order: usize) -> Result<QuadratureRule> {
    let required = minimum_order(spec);
    if order < required {
        return Err(Error::Precision {
            basis: spec.name().into(),
            order,
            required,
        });
    }
    Ok(match *spec {
        BasisSpec::Indicator { v } => QuadratureRule::finite(v),
        BasisSpec::Fourier { .. } => QuadratureRule::periodic_trapezoid(order),
        BasisSpec::Hermite { .. } => QuadratureRule::gauss_hermite_functions(order),
        BasisSpec::Legendre { .. } => QuadratureRule::gauss_legendre(order),
    })
}

/// `∫ f_i f_j* dx` by quadrature of the given order.
pub fn gram_numeric(spec: &BasisSpec, order: usize) -> Result<ComplexMatrix> {
    let rule = quadrature_rule(spec, order)?;
    let k = spec.width();
    let mut g = ComplexMatrix::zeros(k, k);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let f = eval_basis(spec, x)?;
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] += w * f[i] * f[j].conj();
            }
        }
    }
    Ok(g)
}
