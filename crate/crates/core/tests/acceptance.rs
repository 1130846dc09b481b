//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p orthocirc --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use orthocirc::bases::{self, BasisSpec};
use orthocirc::generator::{self, GenSpec, ParamMode, ProductKind, Shape, VTree};
use orthocirc::linalg::{self, kron_square_perm, C64};
use orthocirc::marginalize::{self, Method};
use orthocirc::oracle::{self, OracleBudget};
use orthocirc::orthonormalize::{orthonormalize, partition_function_via_orthonormalize};
use orthocirc::squaring::{square_circuit, SquaredLayer};
use orthocirc::{read_circuit, write_circuit, Assignment, Circuit, Layer, Scope, VariableId};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SHAPES: [Shape; 3] = [Shape::Random, Shape::Balanced, Shape::Chain];

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 unitary circuits integrate to one", ac1_normalized),
        ("AC2 fast = naive = oracle marginals", ac2_marginals),
        ("AC3 fast marginal cost on chains", ac3_complexity),
        (
            "AC4 orthonormalization of generic circuits",
            ac4_orthonormalize,
        ),
        ("AC5 squaring", ac5_squaring),
        ("AC6 the [2, 0] example", ac6_micro),
        ("AC7 numeric Gram matrices", ac7_bases),
        ("AC8 document round trips", ac8_io),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn first_failure(failures: Vec<String>, total: usize, what: &str) -> Outcome {
    if failures.is_empty() {
        Ok(format!("{total} {what}"))
    } else {
        Err(format!(
            "{} of {total} {what} failed; first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// The seeded unitary circuits shared by the first two criteria.
fn unitary_suite() -> Vec<(u64, Circuit)> {
    (0..200u64)
        .map(|seed| {
            let d = 4 + (seed % 5) as usize;
            let v = 2 + ((seed / 5) % 3) as usize;
            let spec = GenSpec {
                shape: SHAPES[(seed % 3) as usize],
                width: 1 + ((seed / 3) % 4) as usize,
                product_kind: ProductKind::Mixed,
                param_mode: ParamMode::Unitary,
                seed,
            };
            (
                seed,
                generator::generate(d, v, &spec).expect("generator output is valid"),
            )
        })
        .collect()
}

fn ac1_normalized() -> Outcome {
    let budget = OracleBudget::default();
    let finite: Vec<String> = unitary_suite()
        .par_iter()
        .filter_map(|(seed, c)| match oracle::brute_force_z(c, &budget) {
            Ok(z) if (z - 1.0).abs() <= 1e-9 => None,
            Ok(z) => Some(format!("seed {seed}: Z = {z}")),
            Err(e) => Some(format!("seed {seed}: {e}")),
        })
        .collect();
    if !finite.is_empty() {
        return first_failure(finite, 200, "finite circuits");
    }

    let families = |k: usize| {
        [
            BasisSpec::Hermite { k },
            BasisSpec::Fourier { k },
            BasisSpec::Legendre { k },
            BasisSpec::Indicator { v: k.max(2) },
        ]
    };
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = 2 + (seed % 2) as usize;
        let bases: Vec<BasisSpec> = (0..d)
            .map(|i| {
                let k = rng.random_range(1..=4);
                // The first variable is always continuous.
                let pick = if i == 0 {
                    rng.random_range(0..3)
                } else {
                    rng.random_range(0..4)
                };
                families(k)[pick]
            })
            .collect();
        let spec = GenSpec {
            shape: SHAPES[(seed % 3) as usize],
            width: rng.random_range(1..=4),
            product_kind: ProductKind::Mixed,
            param_mode: ParamMode::Unitary,
            seed,
        };
        let c = generator::generate_with_bases(&bases, &spec).map_err(|e| e.to_string())?;
        match oracle::quadrature_z(&c, &OracleBudget::default()) {
            Ok(z) => {
                worst = worst.max((z - 1.0).abs());
                if (z - 1.0).abs() > 1e-6 {
                    failures.push(format!("seed {seed} {bases:?}: Z = {z}"));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    first_failure(failures, 20, "continuous circuits").map(|_| {
        format!("200 finite circuits within 1e-9, 20 continuous within 1e-6 (worst {worst:.1e})")
    })
}

fn ac2_marginals() -> Outcome {
    let budget = OracleBudget::default();
    let suite = unitary_suite();
    let results: Vec<Result<usize, String>> = suite
        .par_iter()
        .map(|(seed, c)| {
            let d = c.num_variables();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xAC2);
            let mut sets = vec![Scope::empty(d), c.all_variables()];
            while sets.len() < 12 {
                let mask: u32 = rng.random_range(1..(1u32 << d) - 1);
                sets.push(
                    Scope::from_vars(d, (0..d).filter(|v| (mask >> v) & 1 == 1).map(VariableId))
                        .unwrap(),
                );
            }
            for z in &sets {
                let mut y = Assignment::new(d);
                for v in (0..d).map(VariableId) {
                    if !z.contains(v) {
                        let card = c.domain(v).cardinality().unwrap();
                        y.set(v, rng.random_range(0..card) as f64);
                    }
                }
                let run = || -> orthocirc::Result<(f64, f64, f64)> {
                    Ok((
                        marginalize::marginal_fast(c, &y, z)?,
                        marginalize::marginal_naive(c, &y, z)?,
                        oracle::brute_force_marginal(c, &y, z, &budget)?,
                    ))
                };
                let (fast, naive, truth) =
                    run().map_err(|e| format!("seed {seed}, Z = {z}: {e}"))?;
                if rel_err(fast, truth) > 1e-9 || rel_err(naive, truth) > 1e-9 {
                    return Err(format!(
                        "seed {seed}, Z = {z}: fast {fast}, naive {naive}, oracle {truth}"
                    ));
                }
            }
            Ok(sets.len())
        })
        .collect();
    let mut queries = 0;
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(n) => queries += n,
            Err(e) => failures.push(e),
        }
    }
    first_failure(failures, 200, "circuits")
        .map(|_| format!("{queries} queries over 200 circuits agree within 1e-9"))
}

fn chain_circuit(kept: usize, marginalized: usize, seed: u64) -> Circuit {
    let vars: Vec<VariableId> = (0..kept + marginalized).map(VariableId).collect();
    let spec = GenSpec {
        shape: Shape::Chain,
        width: 4,
        product_kind: ProductKind::Kronecker,
        param_mode: ParamMode::Unitary,
        seed,
    };
    generator::build_random_circuit(
        &VTree::chain(&vars),
        &vec![BasisSpec::Indicator { v: 2 }; vars.len()],
        &spec,
    )
    .expect("chain circuit")
}

fn tail_query(kept: usize, marginalized: usize) -> (Assignment, Scope) {
    let d = kept + marginalized;
    let z = Scope::from_vars(d, (kept..d).map(VariableId)).unwrap();
    let mut y = Assignment::new(d);
    for v in 0..kept {
        y.set(VariableId(v), (v % 2) as f64);
    }
    (y, z)
}

fn ac3_complexity() -> Outcome {
    let mut ratios = Vec::new();
    let mut notes = Vec::new();
    for d in [8usize, 16, 32] {
        let half = d / 2;
        let c = chain_circuit(half, half, d as u64);
        let (y, z) = tail_query(half, half);
        let fast = marginalize::cost_report(&c, &y, &z, Method::Fast).map_err(|e| e.to_string())?;
        let naive =
            marginalize::cost_report(&c, &y, &z, Method::Naive).map_err(|e| e.to_string())?;
        if fast.squared_evaluations != fast.phi_yz {
            return Err(format!(
                "d = {d}: {} squared evaluations but |phi_YZ| = {}",
                fast.squared_evaluations, fast.phi_yz
            ));
        }
        let squared_layers = fast.per_layer.iter().filter(|(id, _)| {
            let scope = c.scope(*id);
            !scope.is_disjoint(&z) && !scope.is_subset(&z)
        });
        if squared_layers.count() != fast.phi_yz {
            return Err(format!("d = {d}: partition and per-layer counts disagree"));
        }

        // Deepen the marginalized tail; the fast count must not move.
        for extra in [half, 2 * d] {
            let deeper = chain_circuit(half, extra, d as u64);
            let (y2, z2) = tail_query(half, extra);
            let r = marginalize::cost_report(&deeper, &y2, &z2, Method::Fast)
                .map_err(|e| e.to_string())?;
            if r.macs != fast.macs {
                return Err(format!(
                    "d = {d}: fast MACs {} with {half} marginalized variables but {} with {extra}",
                    fast.macs, r.macs
                ));
            }
        }
        let ratio = naive.macs as f64 / fast.macs as f64;
        notes.push(format!("d={d}: {}/{} = {ratio:.3}", naive.macs, fast.macs));
        ratios.push(ratio);
    }
    if ratios.windows(2).all(|w| w[1] > w[0]) && ratios[0] > 1.0 {
        Ok(notes.join(", "))
    } else {
        Err(format!(
            "naive/fast ratios do not increase: {}",
            notes.join(", ")
        ))
    }
}

/// Every joint state of a small finite circuit.
fn sweep(c: &Circuit) -> Vec<Assignment> {
    let cards: Vec<usize> = c
        .domains()
        .iter()
        .map(|d| d.cardinality().unwrap())
        .collect();
    let total: usize = cards.iter().product();
    (0..total)
        .map(|mut s| {
            let mut x = vec![0.0; cards.len()];
            for (slot, &k) in x.iter_mut().zip(&cards).rev() {
                *slot = (s % k) as f64;
                s /= k;
            }
            Assignment::full(&x)
        })
        .collect()
}

fn ac4_orthonormalize() -> Outcome {
    let budget = OracleBudget::default();
    let failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|seed| {
            let v = 2 + (seed % 2) as usize;
            let d = if v == 2 {
                4 + (seed / 2 % 3) as usize
            } else {
                4 + (seed / 2 % 3).min(2) as usize
            };
            let spec = GenSpec {
                shape: SHAPES[(seed % 3) as usize],
                width: 1 + ((seed / 3) % 4) as usize,
                product_kind: ProductKind::Mixed,
                param_mode: ParamMode::Generic,
                seed,
            };
            let check = || -> Result<(), String> {
                let c = generator::generate(d, v, &spec).map_err(|e| e.to_string())?;
                let r = orthonormalize(&c).map_err(|e| e.to_string())?;
                for (i, layer) in r.circuit.layers().iter().enumerate() {
                    match layer {
                        Layer::Sum { weights, .. } if linalg::unitarity_defect(weights) > 1e-10 => {
                            return Err(format!(
                                "(i) layer {i} defect {:e}",
                                linalg::unitarity_defect(weights)
                            ))
                        }
                        Layer::Hadamard { .. } => {
                            return Err(format!("(iv) layer {i} is a Hadamard"))
                        }
                        _ => {}
                    }
                }
                for x in sweep(&c) {
                    let want = c.value(&x).unwrap() * r.beta;
                    let got = r.circuit.value(&x).unwrap();
                    if (got - want).norm() > 1e-9 * (1.0 + want.norm()) {
                        return Err(format!("(ii) {got} vs {want}"));
                    }
                }
                let z = oracle::brute_force_z(&c, &budget).map_err(|e| e.to_string())?;
                if (r.beta * r.beta * z - 1.0).abs() > 1e-9 {
                    return Err(format!("(iii) beta² Z = {}", r.beta * r.beta * z));
                }
                let again = orthonormalize(&r.circuit).map_err(|e| e.to_string())?;
                if (again.beta - 1.0).abs() > 1e-9 {
                    return Err(format!("(v) second beta = {}", again.beta));
                }
                Ok(())
            };
            check().err().map(|e| format!("seed {seed}: {e}"))
        })
        .collect();
    first_failure(failures, 100, "generic circuits satisfy (i)-(v)")
}

fn ac5_squaring() -> Outcome {
    let failures: Vec<String> = (0..50u64)
        .into_par_iter()
        .filter_map(|seed| {
            let spec = GenSpec {
                shape: SHAPES[(seed % 3) as usize],
                width: 1 + (seed % 4) as usize,
                product_kind: ProductKind::Mixed,
                param_mode: if seed % 2 == 0 {
                    ParamMode::Generic
                } else {
                    ParamMode::Unitary
                },
                seed,
            };
            let c = generator::generate(4 + (seed % 3) as usize, 2, &spec).unwrap();
            let c2 = square_circuit(&c).unwrap();
            for id in c.ids() {
                if let SquaredLayer::Sum { .. } = c2.layer(id) {
                    if c2.layer_size(id) != c.layer_size(id).pow(2) {
                        return Some(format!("seed {seed}: size law broken at {id}"));
                    }
                }
            }
            for x in sweep(&c) {
                let want = c.value(&x).unwrap().norm_sqr();
                let got = c2.evaluate(&x).unwrap();
                if rel_err(got, want) > 1e-10 {
                    return Some(format!("seed {seed}: {got} vs {want}"));
                }
            }
            None
        })
        .collect();
    if !failures.is_empty() {
        return first_failure(failures, 50, "circuits");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draw = |n: usize| -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let mut worst: f64 = 0.0;
    for k1 in 1..=3 {
        for k2 in 1..=3 {
            let p = kron_square_perm(k1, k2);
            for _ in 0..10 {
                let (a, b) = (draw(k1), draw(k2));
                let lhs = p.apply(&linalg::kron_vec(
                    &linalg::self_conjugate_kron(&a),
                    &linalg::self_conjugate_kron(&b),
                ));
                let rhs = linalg::self_conjugate_kron(&linalg::kron_vec(&a, &b));
                for (l, r) in lhs.iter().zip(&rhs) {
                    worst = worst.max((l - r).norm());
                }
            }
        }
    }
    if worst > 1e-15 {
        return Err(format!("regrouping permutation off by {worst:e}"));
    }
    Ok("50 circuits within 1e-10, size law exact, regrouping exact for K1, K2 in 1..=3".into())
}

fn ac6_micro() -> Outcome {
    let c = orthocirc::samples::two_zero();
    let z = oracle::brute_force_z(&c, &OracleBudget::default()).map_err(|e| e.to_string())?;
    let beta = orthonormalize(&c).map_err(|e| e.to_string())?.beta;
    let via = partition_function_via_orthonormalize(&c).map_err(|e| e.to_string())?;
    if (z - 4.0).abs() <= 1e-12 && (beta - 0.5).abs() <= 1e-12 && (via - 4.0).abs() <= 1e-12 {
        Ok(format!(
            "Z = {z}, beta = {beta}, Z via orthonormalization = {via}"
        ))
    } else {
        Err(format!(
            "Z = {z}, beta = {beta}, Z via orthonormalization = {via}"
        ))
    }
}

fn ac7_bases() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        for spec in [
            BasisSpec::Indicator { v: k },
            BasisSpec::Fourier { k },
            BasisSpec::Hermite { k },
            BasisSpec::Legendre { k },
        ] {
            let g = bases::gram_numeric(&spec, bases::default_order(&spec))
                .map_err(|e| e.to_string())?;
            let defect = g.max_abs_diff(&linalg::ComplexMatrix::identity(k));
            if defect > 1e-8 {
                return Err(format!("{spec:?}: ‖G − I‖ = {defect:e}"));
            }
            worst = worst.max(defect);
        }
    }
    Ok(format!("all families, K <= 8, worst deviation {worst:.1e}"))
}

fn ac8_io() -> Outcome {
    for name in ["minimal.json", "fig1.json"] {
        let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
        let c = read_circuit(&text).map_err(|e| format!("{name}: {e}"))?;
        if write_circuit(&c) != text {
            return Err(format!("{name} is not byte-stable"));
        }
    }
    let mut checked = 0;
    for seed in 0..20u64 {
        let spec = GenSpec {
            shape: SHAPES[(seed % 3) as usize],
            width: 1 + (seed % 4) as usize,
            product_kind: ProductKind::Mixed,
            param_mode: if seed % 2 == 0 {
                ParamMode::Generic
            } else {
                ParamMode::Unitary
            },
            seed,
        };
        let c = generator::generate(4, 2 + (seed % 2) as usize, &spec).unwrap();
        let mut circuits = vec![c.clone(), square_circuit(&c).unwrap().to_circuit().unwrap()];
        if let Ok(r) = orthonormalize(&c) {
            circuits.push(r.circuit);
        }
        for c in circuits {
            let text = write_circuit(&c);
            let back = read_circuit(&text).map_err(|e| e.to_string())?;
            if write_circuit(&back) != text {
                return Err(format!("seed {seed}: canonical text is not a fixed point"));
            }
            for x in sweep(&c) {
                let (a, b) = (c.value(&x).unwrap(), back.value(&x).unwrap());
                if a.re.to_bits() != b.re.to_bits() || a.im.to_bits() != b.im.to_bits() {
                    return Err(format!("seed {seed}: {a} became {b}"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!(
        "golden files byte-stable, {checked} circuits evaluate bit-identically after a round trip"
    ))
}
