use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardy_ladder::behavior::{hardy_relation_constant, ANALYSIS_TOL};
use hardy_ladder::bounds::{fig1_csv, FIG1_CSV_HEADER};
use hardy_ladder::quantum::ladder_identity_relative_residual;
use hardy_ladder::{
    born_behavior, derive_cere2, estimate_report, fig1_dataset, lr_max_chsh, p_k_qm,
    sample_counts, Behavior, BoundsRecord, Error,
};
use serde_json::{json, Map, Value};

const EXIT_FAIL: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "hardy-ladder", version, about = "Hardy ladder nonlocality toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format; `fig1` defaults to csv, everything else to json.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Decimal places for CSV numbers.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    /// Omit the timestamp field from JSON output.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn k_value(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if k == 0 {
        return Err("K must be at least 1".into());
    }
    Ok(k)
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound table (LR, Tsirelson, algebraic, L_K, quantum maximum) for K = 1..k-max.
    Bounds {
        #[arg(long, value_parser = k_value)]
        k_max: usize,
    },
    /// Data behind the Hardy-fraction versus K plot.
    Fig1 {
        #[arg(long, value_parser = k_value)]
        k_max: usize,
    },
    /// Born-rule behavior of the ladder measurements on the Schmidt state.
    Quantum {
        #[arg(long, value_parser = finite)]
        x: f64,
        #[arg(long, value_parser = k_value)]
        k: usize,
        /// Include the full probability table.
        #[arg(long)]
        full_table: bool,
    },
    /// Check non-signaling, the Hardy zeros and the chained relations.
    Verify {
        /// Behavior JSON file as written by `quantum --full-table --format json`
        /// or any `{k, order, table}` object.
        #[arg(long, conflicts_with_all = ["x", "k"], required_unless_present_all = ["x", "k"])]
        input: Option<PathBuf>,
        #[arg(long, value_parser = finite, requires = "k")]
        x: Option<f64>,
        #[arg(long, value_parser = k_value, requires = "x")]
        k: Option<usize>,
    },
    /// Exact certificate for the all-minus probability balance.
    Prove {
        #[arg(long, value_parser = k_value)]
        k: usize,
    },
    /// Exhaustive local-realistic maximum of the chained CHSH sum.
    Lr {
        #[arg(long, value_parser = k_value)]
        k: usize,
    },
    /// Finite-shot simulation of the ladder experiment.
    Simulate {
        #[arg(long, value_parser = finite)]
        x: f64,
        #[arg(long, value_parser = k_value)]
        k: usize,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        shots: u64,
        #[arg(long)]
        seed: u64,
    },
}

struct Output {
    body: String,
    passed: bool,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, passed: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("HARDY_CHAIN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli.global, &out.body) {
                eprintln!("{}", error_object("IoError", &e.to_string()));
                return ExitCode::from(EXIT_FAIL);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("{}", error_object(e.kind(), &e.to_string()));
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn error_object(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn emit(g: &Global, body: &str) -> std::io::Result<()> {
    match &g.output {
        Some(path) => fs::write(path, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    }
}

fn json_doc(g: &Global, command: &str, payload: Value) -> String {
    let mut doc = Map::new();
    doc.insert("command".into(), command.into());
    if let Value::Object(fields) = payload {
        doc.extend(fields);
    }
    if !g.no_timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        doc.insert("timestamp".into(), secs.into());
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json value");
    text.push('\n');
    text
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let g = &cli.global;
    let format = g.format.unwrap_or(match cli.command {
        Command::Fig1 { .. } => Format::Csv,
        _ => Format::Json,
    });
    let p = g.precision;
    match &cli.command {
        Command::Bounds { k_max } => {
            let rows = fig1_dataset(*k_max)?;
            Ok(Output::ok(match format {
                Format::Csv => bounds_csv(&rows, p),
                Format::Json => json_doc(g, "bounds", json!({ "records": rows })),
            }))
        }
        Command::Fig1 { k_max } => {
            let rows = fig1_dataset(*k_max)?;
            Ok(Output::ok(match format {
                Format::Csv => fig1_csv(&rows, p),
                Format::Json => json_doc(
                    g,
                    "fig1",
                    json!({ "columns": FIG1_CSV_HEADER.split(',').collect::<Vec<_>>(), "records": rows }),
                ),
            }))
        }
        Command::Quantum { x, k, full_table } => {
            let b = born_behavior(*x, *k)?;
            let mut fields = behavior_summary(&b);
            fields.insert("x".into(), (*x).into());
            fields.insert("p_k_closed_form".into(), p_k_qm(*x, *k)?.into());
            Ok(Output::ok(match format {
                Format::Csv => {
                    let mut out = quantity_csv(&fields, p);
                    if *full_table {
                        out.push('\n');
                        out.push_str(&b.to_csv(p));
                    }
                    out
                }
                Format::Json => {
                    if *full_table {
                        fields.insert("behavior".into(), serde_json::to_value(b.to_json_value())?);
                    }
                    json_doc(g, "quantum", Value::Object(fields))
                }
            }))
        }
        Command::Verify { input, x, k } => {
            let (b, quantum) = match (input, x, k) {
                (Some(path), _, _) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
                    (read_behavior(&text)?, None)
                }
                (None, Some(x), Some(k)) => (born_behavior(*x, *k)?, Some(*x)),
                _ => unreachable!("clap enforces the argument groups"),
            };
            let checks = verify_checks(&b, quantum)?;
            let passed = checks.iter().all(|c| c.pass);
            let body = match format {
                Format::Csv => {
                    let mut out = String::from("check,value,tolerance,pass\n");
                    for c in &checks {
                        let _ = writeln!(out, "{},{:.p$e},{:e},{}", c.name, c.value, c.tolerance, c.pass);
                    }
                    out
                }
                Format::Json => {
                    let list: Vec<Value> = checks
                        .iter()
                        .map(|c| json!({ "name": c.name, "value": c.value, "tolerance": c.tolerance, "pass": c.pass }))
                        .collect();
                    json_doc(g, "verify", json!({ "k": b.k(), "checks": list, "pass": passed }))
                }
            };
            Ok(Output { body, passed })
        }
        Command::Prove { k } => {
            let cert = derive_cere2(*k)?;
            let passed = cert.verified();
            let doc = cert.to_json();
            let body = match format {
                Format::Csv => {
                    let mut out = String::from("equality,multiplier\n");
                    for t in &doc.terms {
                        let _ = writeln!(out, "{},{}", t.equality, t.multiplier);
                    }
                    out
                }
                Format::Json => json_doc(g, "prove", serde_json::to_value(&doc)?),
            };
            Ok(Output { body, passed })
        }
        Command::Lr { k } => {
            let r = lr_max_chsh(*k)?;
            let w = r.witness;
            Ok(Output::ok(match format {
                Format::Csv => format!(
                    "k,max_value,a_bits,b_bits,encoding\n{},{:.p$},{},{},{}\n",
                    k,
                    r.max_value,
                    w.a_bits,
                    w.b_bits,
                    w.encoding()
                ),
                Format::Json => json_doc(
                    g,
                    "lr",
                    json!({
                        "k": k,
                        "max_value": r.max_value,
                        "lr_bound": 2.0 * *k as f64,
                        "strategies": 1u64 << (2 * (k + 1)),
                        "witness": { "a_bits": w.a_bits, "b_bits": w.b_bits, "encoding": w.encoding() },
                    }),
                ),
            }))
        }
        Command::Simulate { x, k, shots, seed } => {
            let b = born_behavior(*x, *k)?;
            let counts = sample_counts(&b, *shots, *seed)?;
            let report = estimate_report(&counts)?;
            Ok(Output::ok(match format {
                Format::Csv => report.to_csv(p),
                Format::Json => {
                    let mut fields = match serde_json::to_value(&report)? {
                        Value::Object(m) => m,
                        _ => Map::new(),
                    };
                    let zeros: Vec<Value> = report
                        .zero_terms
                        .iter()
                        .map(|(z, e)| json!({ "name": z.to_string(), "value": e.value, "std_error": e.std_error }))
                        .collect();
                    fields.insert("zero_terms".into(), zeros.into());
                    fields.insert("x".into(), (*x).into());
                    fields.insert("chsh_exact".into(), b.chsh_k().into());
                    fields.insert("counts".into(), serde_json::to_value(&counts)?);
                    json_doc(g, "simulate", Value::Object(fields))
                }
            }))
        }
    }
}

fn read_behavior(text: &str) -> Result<Behavior, Error> {
    let v: Value = serde_json::from_str(text)?;
    // accept a bare behavior object or a `quantum` document that embeds one
    let inner = match v.get("behavior") {
        Some(b) => b.clone(),
        None => v,
    };
    Behavior::from_json(&inner.to_string())
}

fn bounds_csv(rows: &[BoundsRecord], p: usize) -> String {
    let mut out = String::from("K,LR,Tsirelson,Algebraic,L_K,Pmax_QM,x_star\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$}",
            r.k, r.lr_bound, r.tsirelson, r.algebraic, r.l_k, r.p_max_qm, r.x_star
        );
    }
    out
}

fn behavior_summary(b: &Behavior) -> Map<String, Value> {
    let hardy = b.hardy_report();
    let ch = b.ch_values();
    let rel = b.relation_residuals();
    let zeros: Vec<Value> = hardy
        .zero_terms
        .iter()
        .map(|(z, v)| json!({ "name": z.to_string(), "value": v }))
        .collect();
    let mut m = Map::new();
    m.insert("k".into(), b.k().into());
    m.insert("chsh_k".into(), b.chsh_k().into());
    m.insert("ch_plus".into(), ch.ch_plus.into());
    m.insert("ch_minus".into(), ch.ch_minus.into());
    m.insert("p_k".into(), hardy.p_k.into());
    m.insert("max_zero_violation".into(), hardy.max_zero_violation.into());
    m.insert("hardy_zeros".into(), zeros.into());
    m.insert("ns_residual".into(), b.ns_residual().max_residual.into());
    m.insert("cere3_residual".into(), rel.cere3_residual.into());
    m.insert("cere2_residual".into(), rel.cere2_residual.into());
    m
}

fn quantity_csv(fields: &Map<String, Value>, p: usize) -> String {
    let mut out = String::from("quantity,value\n");
    for (name, v) in fields {
        if let Some(f) = v.as_f64() {
            let _ = writeln!(out, "{name},{f:.p$}");
        } else if let Some(list) = v.as_array() {
            for item in list {
                if let (Some(n), Some(f)) = (item["name"].as_str(), item["value"].as_f64()) {
                    let _ = writeln!(out, "{n},{f:.p$}");
                }
            }
        }
    }
    out
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn verify_checks(b: &Behavior, quantum: Option<f64>) -> Result<Vec<Check>, Error> {
    let k = b.k();
    let hardy = b.hardy_report();
    let rel = b.relation_residuals();
    let ns = b.ns_residual().max_residual;
    let eps = ns.max(hardy.max_zero_violation);
    let eq8 = (b.chsh_k() - 2.0 * k as f64 - 4.0 * hardy.p_k).abs();
    let mut checks = vec![
        check("ns_residual", ns, ANALYSIS_TOL),
        check("hardy_zeros", hardy.max_zero_violation, ANALYSIS_TOL),
        check("cere3_residual", rel.cere3_residual, ANALYSIS_TOL),
        check("cere2_residual", rel.cere2_residual, ANALYSIS_TOL),
        check("chsh_minus_2k_minus_4pk", eq8, ANALYSIS_TOL),
        check(
            "chsh_minus_2k_minus_4pk_bound",
            eq8,
            ANALYSIS_TOL.max(hardy_relation_constant(k) * eps),
        ),
    ];
    if let Some(x) = quantum {
        checks.push(check(
            "p_k_closed_form",
            (hardy.p_k - p_k_qm(x, k)?).abs(),
            ANALYSIS_TOL,
        ));
        checks.push(check(
            "ladder_identity",
            ladder_identity_relative_residual(x, k)?,
            1e-12,
        ));
    }
    Ok(checks)
}
