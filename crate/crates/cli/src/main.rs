//! `orthocirc`: validate, evaluate, square, marginalize and orthonormalize
//! circuit files from the command line.
//!
//! Every subcommand prints one JSON record on stdout. Diagnostics go to
//! stderr. Exit status is 0 on success, 1 for bad input or unmet
//! preconditions and 2 for numerical breakdown.
//!
//! Variables are named `X1, X2, ...` (one-based) or by their zero-based
//! index.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use orthocirc::generator::{self, GenSpec, ParamMode, ProductKind, Shape};
use orthocirc::marginalize::{self, MarginalCostReport, Method};
use orthocirc::oracle::{self, OracleBudget};
use orthocirc::orthonormalize::{orthonormalize, partition_function_via_orthonormalize};
use orthocirc::squaring::square_circuit;
use orthocirc::{read_circuit, write_circuit, Assignment, Circuit, Error, Scope, VariableId};

#[derive(Parser)]
#[command(
    name = "orthocirc",
    version,
    about = "Squared orthonormal tensorized circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report decomposability, structured decomposability and orthonormality.
    Validate {
        file: PathBuf,
        /// Bound on ‖WW† − I‖ for a sum layer to count as semi-unitary.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Evaluate c(x) at a complete assignment.
    Eval {
        file: PathBuf,
        /// Comma-separated `name=value` pairs, e.g. `X1=0,X2=1`.
        #[arg(long)]
        assign: String,
    },
    /// Write the squared circuit.
    Square {
        file: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Compute ∫ |c(y, z)|² dz.
    Marginalize {
        file: PathBuf,
        /// Observed values `name=value,...`.
        #[arg(long, default_value = "")]
        keep: String,
        /// Variables to integrate out; defaults to every unobserved variable.
        #[arg(long)]
        marg: Option<String>,
        #[arg(long, value_enum, default_value_t = MarginalMethod::Fast)]
        method: MarginalMethod,
    },
    /// Write an orthonormal circuit equal to beta · c.
    Orthonormalize {
        file: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Compute Z = ∫ |c(x)|² dx.
    Partition {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PartitionMethod::Oracle)]
        method: PartitionMethod,
    },
    /// Generate a seeded random circuit.
    Gen {
        #[arg(long)]
        vars: usize,
        /// Domain size of every variable (indicator inputs).
        #[arg(long, default_value_t = 2)]
        domain: usize,
        #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
        shape: ShapeArg,
        /// Width of inner sum layers.
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Mixed)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = ParamsArg::Unitary)]
        params: ParamsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; without it the circuit document is the record.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
    /// Compare fast and naive marginals: multiply-add counts and wall time.
    Bench {
        file: PathBuf,
        #[arg(long)]
        marg: String,
        /// Observed values; unobserved kept variables are set to 0.
        #[arg(long, default_value = "")]
        keep: String,
        #[arg(long, default_value_t = 10)]
        repeat: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginalMethod {
    Fast,
    Naive,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionMethod {
    Naive,
    Oracle,
    Orthonormalize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Random,
    Balanced,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Hadamard,
    Kronecker,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamsArg {
    Unitary,
    Generic,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(record) => {
            let text = serde_json::to_string_pretty(&record).expect("records serialize");
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<Value, Failure> {
    match command {
        Command::Validate { file, tol } => {
            let c = load(&file)?;
            let r = c.validate_with_tolerance(tol);
            let violations: Vec<Value> = r
                .violations
                .iter()
                .map(|(id, why)| json!({"layer": id.0, "reason": why}))
                .collect();
            Ok(json!({
                "decomposable": r.decomposable,
                "structured_decomposable": r.structured_decomposable,
                "orthonormal": r.orthonormal,
                "violations": violations,
            }))
        }
        Command::Eval { file, assign } => {
            let c = load(&file)?;
            let x = parse_assignment(&c, &assign)?;
            let v = c.value(&x)?;
            Ok(json!({"re": v.re, "im": v.im, "abs2": v.norm_sqr()}))
        }
        Command::Square { file, out } => {
            let c = load(&file)?;
            let squared = square_circuit(&c)?.to_circuit()?;
            save(&out, &write_circuit(&squared))?;
            Ok(json!({"layers": squared.len(), "out": out.display().to_string()}))
        }
        Command::Marginalize {
            file,
            keep,
            marg,
            method,
        } => {
            let c = load(&file)?;
            let y = parse_assignment(&c, &keep)?;
            let z = match marg {
                Some(list) => parse_scope(&c, &list)?,
                None => complement(&c, &y),
            };
            match method {
                MarginalMethod::Oracle => {
                    let p = oracle::brute_force_marginal(&c, &y, &z, &OracleBudget::default())?;
                    Ok(json!({"method": "oracle", "probability": p}))
                }
                MarginalMethod::Fast | MarginalMethod::Naive => {
                    let m = if matches!(method, MarginalMethod::Fast) {
                        Method::Fast
                    } else {
                        Method::Naive
                    };
                    let (p, report) = marginalize::marginal_with_report(&c, &y, &z, m)?;
                    Ok(
                        json!({"method": m.to_string(), "probability": p, "cost": cost_record(&report)}),
                    )
                }
            }
        }
        Command::Orthonormalize { file, out } => {
            let c = load(&file)?;
            let r = orthonormalize(&c)?;
            save(&out, &write_circuit(&r.circuit))?;
            Ok(json!({
                "beta": r.beta,
                "z": r.partition_function(),
                "ops": r.ops,
                "out": out.display().to_string(),
            }))
        }
        Command::Partition { file, method } => {
            let c = load(&file)?;
            let (name, z) = match method {
                PartitionMethod::Naive => (
                    "naive",
                    marginalize::marginal_naive(
                        &c,
                        &Assignment::new(c.num_variables()),
                        &c.all_variables(),
                    )?,
                ),
                PartitionMethod::Oracle => {
                    let budget = OracleBudget::default();
                    let z = if c.domains().iter().all(|d| d.is_finite()) {
                        oracle::brute_force_z(&c, &budget)?
                    } else {
                        oracle::quadrature_z(&c, &budget)?
                    };
                    ("oracle", z)
                }
                PartitionMethod::Orthonormalize => {
                    ("orthonormalize", partition_function_via_orthonormalize(&c)?)
                }
            };
            Ok(json!({"method": name, "z": z}))
        }
        Command::Gen {
            vars,
            domain,
            shape,
            k,
            kind,
            params,
            seed,
            out,
        } => {
            let spec = GenSpec {
                shape: match shape {
                    ShapeArg::Random => Shape::Random,
                    ShapeArg::Balanced => Shape::Balanced,
                    ShapeArg::Chain => Shape::Chain,
                },
                width: k,
                product_kind: match kind {
                    KindArg::Hadamard => ProductKind::Hadamard,
                    KindArg::Kronecker => ProductKind::Kronecker,
                    KindArg::Mixed => ProductKind::Mixed,
                },
                param_mode: match params {
                    ParamsArg::Unitary => ParamMode::Unitary,
                    ParamsArg::Generic => ParamMode::Generic,
                },
                seed,
            };
            let c = generator::generate(vars, domain, &spec)?;
            let text = write_circuit(&c);
            match out {
                Some(path) => {
                    save(&path, &text)?;
                    Ok(
                        json!({"layers": c.len(), "variables": vars, "out": path.display().to_string()}),
                    )
                }
                None => serde_json::from_str(&text).map_err(|e| usage(e.to_string())),
            }
        }
        Command::Bench {
            file,
            marg,
            keep,
            repeat,
        } => {
            let c = load(&file)?;
            let z = parse_scope(&c, &marg)?;
            let mut y = parse_assignment(&c, &keep)?;
            for v in (0..c.num_variables()).map(VariableId) {
                if !z.contains(v) && y.get(v).is_none() {
                    y.set(v, 0.0);
                }
            }
            let repeat = repeat.max(1);
            let mut runs = Vec::new();
            for method in [Method::Fast, Method::Naive] {
                let (p, report) = marginalize::marginal_with_report(&c, &y, &z, method)?;
                let start = Instant::now();
                for _ in 0..repeat {
                    std::hint::black_box(marginalize::marginal_with_report(&c, &y, &z, method)?);
                }
                let seconds = start.elapsed().as_secs_f64() / repeat as f64;
                runs.push((p, report, seconds));
            }
            let (fast, naive) = (&runs[0], &runs[1]);
            Ok(json!({
                "probability": fast.0,
                "fast": {"macs": fast.1.macs, "squared_evaluations": fast.1.squared_evaluations, "mean_seconds": fast.2},
                "naive": {"macs": naive.1.macs, "squared_evaluations": naive.1.squared_evaluations, "mean_seconds": naive.2},
                "mac_ratio": naive.1.macs as f64 / fast.1.macs.max(1) as f64,
                "repeat": repeat,
            }))
        }
    }
}

fn load(path: &Path) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_circuit(&text)?)
}

fn save(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// `X3` is the third variable; a bare `2` is the variable with index 2.
fn parse_variable(c: &Circuit, name: &str) -> Result<VariableId, Failure> {
    let name = name.trim();
    let id = match name.strip_prefix(['X', 'x']) {
        Some(n) => n.parse::<usize>().ok().filter(|&n| n >= 1).map(|n| n - 1),
        None => name.parse::<usize>().ok(),
    };
    match id {
        Some(i) if i < c.num_variables() => Ok(VariableId(i)),
        _ => Err(usage(format!(
            "unknown variable `{name}` (the circuit has X1..X{})",
            c.num_variables()
        ))),
    }
}

fn parse_assignment(c: &Circuit, text: &str) -> Result<Assignment, Failure> {
    let mut x = Assignment::new(c.num_variables());
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("expected name=value, found `{pair}`")))?;
        let var = parse_variable(c, name)?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("`{value}` is not a number")))?;
        if x.get(var).is_some() {
            return Err(usage(format!("{var} is assigned twice")));
        }
        x.set(var, value);
    }
    Ok(x)
}

fn parse_scope(c: &Circuit, text: &str) -> Result<Scope, Failure> {
    let vars = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|name| parse_variable(c, name))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Scope::from_vars(c.num_variables(), vars)?)
}

fn complement(c: &Circuit, y: &Assignment) -> Scope {
    let free = (0..c.num_variables())
        .map(VariableId)
        .filter(|&v| y.get(v).is_none());
    Scope::from_vars(c.num_variables(), free).expect("ids are in range")
}

fn cost_record(r: &MarginalCostReport) -> Value {
    let mut record = json!({
        "layers": r.layer_count,
        "max_layer_size": r.max_layer_size,
        "phi_y": r.phi_y,
        "phi_z": r.phi_z,
        "phi_yz": r.phi_yz,
        "squared_evaluations": r.squared_evaluations,
        "macs": r.macs,
    });
    if r.method == Method::Fast {
        record["bound_constant"] = json!(r.bound_constant);
        record["bound"] = json!(r.fast_bound());
    }
    record
}
