//! Command-line front end for the MBQC pattern optimizer.
//!
//! Subcommands expose the pipeline stages individually (`gflow`,
//! `shift`, `extend`, `compactify`) and composed (`optimize`,
//! `verify`), plus a `bench` complexity smoke test. Inputs are JSON:
//! a circuit (`wires`/`gates`), a pattern (`space`/`commands`), or an
//! open graph (`vertices`/`edges`/`inputs`/`outputs`, with optional
//! per-vertex `angles`). Exit codes: 0 ok, 1 verification failure,
//! 2 input error, 3 internal invariant violation.

use std::collections::BTreeMap;
use std::fs;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mbqc_opt::circuit::{circuit_stats, extended_translation, Circuit, SlicedCircuit};
use mbqc_opt::compactify::{chain_end, compactify_with, j_depth, CompactifyTrace};
use mbqc_opt::flow::{find_flow, max_delayed_gflow, ssf_from_flow, Flow, GFlow};
use mbqc_opt::gen;
use mbqc_opt::graph::{OpenGraph, Vertex};
use mbqc_opt::pattern::{
    flow_pattern, pattern_from_circuit, pauli_simplify, signal_shift, Angle, MeasurementPattern,
};
use mbqc_opt::sim::{
    circuit_unitary, circuit_unitary_with_order, equivalent_up_to_phase,
    extended_matches_rewritten, pattern_unitary, UnitaryMatrix,
};

const TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "mbqc-opt", about = "Optimizes small circuits through MBQC signal shifting")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct IoArgs {
    /// Input file (circuit, pattern, or graph JSON)
    #[arg(long = "in")]
    input: String,
    /// Output file for the resulting JSON artifact
    #[arg(long)]
    out: Option<String>,
    /// Check semantic equivalence with the brute-force simulator
    #[arg(long)]
    verify: bool,
    /// Write the compactification trace as JSON to this file
    #[arg(long = "emit-trace")]
    emit_trace: Option<String>,
    /// Apply the Pauli measurement rules where possible
    #[arg(long)]
    pauli: bool,
    /// Report format
    #[arg(long, value_enum, default_value = "text")]
    report: ReportFormat,
    /// Print the amplitudes of the resulting unitary
    #[arg(long = "dump-state")]
    dump_state: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline and report optimization statistics
    Optimize(IoArgs),
    /// Print flow, signal-shifted flow, and maximally delayed gflow of a graph
    Gflow {
        #[arg(long = "in")]
        input: String,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportFormat,
    },
    /// Signal-shift the flow pattern and print it
    Shift(IoArgs),
    /// Translate the shifted pattern into its extended circuit
    Extend(IoArgs),
    /// Run the full pipeline, emitting only the compact circuit
    Compactify(IoArgs),
    /// Verify pipeline equivalences on an input or on random circuits
    Verify {
        #[arg(long = "in")]
        input: Option<String>,
        /// Seed for randomized verification (used when no input is given)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random circuits to check
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Time ssf_from_flow on growing path graphs and fit a power law
    Bench {
        /// Path lengths to time
        #[arg(long, value_delimiter = ',', default_values_t = vec![50usize, 100, 200, 400])]
        sizes: Vec<usize>,
        /// Reject fitted exponents above this bound
        #[arg(long, default_value_t = 3.5)]
        max_exponent: f64,
    },
}

enum Failure {
    Input(String),
    Verify(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Verify(m) | Failure::Internal(m) => m,
        }
    }
}

fn input_err(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

fn internal_err(e: impl ToString) -> Failure {
    Failure::Internal(e.to_string())
}

/// A parsed input file.
enum Input {
    Circuit(Circuit),
    Pattern(MeasurementPattern),
    Graph(OpenGraph, BTreeMap<Vertex, Angle>),
}

fn load_input(path: &str) -> Result<Input, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("{path}: {e}")))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| input_err(format!("{path}: bad JSON: {e}")))?;
    if v.get("gates").is_some() {
        return Ok(Input::Circuit(Circuit::from_json(&v).map_err(input_err)?));
    }
    if v.get("commands").is_some() {
        return Ok(Input::Pattern(
            MeasurementPattern::from_json(&v).map_err(input_err)?,
        ));
    }
    if v.get("vertices").is_some() {
        let g = OpenGraph::from_json(&v).map_err(input_err)?;
        let mut angles = BTreeMap::new();
        if let Some(map) = v.get("angles").and_then(Value::as_object) {
            for (k, a) in map {
                let vert: Vertex = k
                    .parse()
                    .map_err(|_| input_err(format!("bad angle key {k:?}")))?;
                angles.insert(vert, Angle::from_json(a).map_err(input_err)?);
            }
        }
        // Measured vertices without a given angle default to π/4.
        for i in g.non_outputs().iter() {
            angles
                .entry(i)
                .or_insert_with(|| Angle::new(1, 4).expect("π/4"));
        }
        return Ok(Input::Graph(g, angles));
    }
    Err(input_err(format!(
        "{path}: unrecognized input (expected circuit, pattern, or graph JSON)"
    )))
}

/// The pipeline state shared by the composed subcommands.
struct Pipeline {
    orig: Option<Circuit>,
    graph: OpenGraph,
    flow: Flow,
    pattern: MeasurementPattern,
    shifted: MeasurementPattern,
    ssf: GFlow,
}

impl Pipeline {
    fn build(input: Input) -> Result<Self, Failure> {
        let (orig, pattern) = match input {
            Input::Circuit(c) => {
                let p = pattern_from_circuit(&c).map_err(input_err)?;
                (Some(c), p)
            }
            Input::Pattern(p) => (None, p),
            Input::Graph(g, angles) => {
                let fl = find_flow(&g)
                    .ok_or_else(|| input_err("graph has no causal flow".to_string()))?;
                (None, flow_pattern(&fl, &g, &angles).map_err(input_err)?)
            }
        };
        let graph = pattern.space.clone();
        let flow = find_flow(&graph)
            .ok_or_else(|| input_err("underlying graph has no causal flow".to_string()))?;
        let shifted = match signal_shift(&pattern, &flow) {
            Ok(s) => s,
            // A pattern that is not in flow form is taken as already shifted.
            Err(_) if orig.is_none() => pattern.clone(),
            Err(e) => return Err(internal_err(e)),
        };
        let ssf = ssf_from_flow(&flow, &graph).map_err(internal_err)?;
        Ok(Pipeline {
            orig,
            graph,
            flow,
            pattern,
            shifted,
            ssf,
        })
    }

    fn extend(&self) -> Result<SlicedCircuit, Failure> {
        extended_translation(&self.shifted, &self.ssf).map_err(internal_err)
    }

    fn compactify(
        &self,
        allow_partial: bool,
    ) -> Result<(SlicedCircuit, Circuit, CompactifyTrace), Failure> {
        let ext = self.extend()?;
        let (c, trace) =
            compactify_with(&ext, &self.flow, &self.ssf, allow_partial).map_err(internal_err)?;
        Ok((ext, c, trace))
    }

    /// Checks the compact circuit against the original semantics: the
    /// input circuit's unitary when one was given, the flow pattern's
    /// unitary otherwise.
    fn check(&self, compact: &Circuit) -> Result<(), Failure> {
        let ok = if let Some(orig) = &self.orig {
            let ends: Vec<_> = orig
                .wires()
                .iter()
                .map(|&w| chain_end(&self.flow.f, w))
                .collect();
            let u = circuit_unitary_with_order(compact, &ends).map_err(internal_err)?;
            let uo = circuit_unitary(orig).map_err(internal_err)?;
            equivalent_up_to_phase(&u, &uo, TOL).map_err(internal_err)?
        } else {
            let u = circuit_unitary_with_order(compact, self.graph.outputs())
                .map_err(internal_err)?;
            let up = pattern_unitary(&self.pattern).map_err(internal_err)?;
            equivalent_up_to_phase(&u, &up, TOL).map_err(internal_err)?
        };
        if ok {
            Ok(())
        } else {
            Err(Failure::Verify(
                "compact circuit is not equivalent to the input".into(),
            ))
        }
    }
}

fn write_or_print(out: &Option<String>, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("JSON serializes");
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| input_err(format!("{path}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn dump_unitary(u: &UnitaryMatrix) {
    for i in 0..u.dim() {
        let row: Vec<String> = (0..u.dim())
            .map(|j| {
                let z = u.get(i, j);
                format!("{:+.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        println!("  [{}]", row.join(", "));
    }
}

fn layer_string(partition: &[mbqc_opt::graph::VertexSet]) -> String {
    partition
        .iter()
        .map(|l| {
            let vs: Vec<String> = l.iter().map(|v| v.to_string()).collect();
            format!("{{{}}}", vs.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_optimize(io: &IoArgs, emit_report: bool) -> Result<(), Failure> {
    let pipe = Pipeline::build(load_input(&io.input)?)?;
    let (ext, compact, trace) = pipe.compactify(io.pauli)?;
    let verified = if io.verify {
        pipe.check(&compact)?;
        Some(true)
    } else {
        None
    };
    if let Some(path) = &io.emit_trace {
        write_or_print(&Some(path.clone()), &trace.to_json())?;
    }
    let stats = circuit_stats(&ext);
    let report = json!({
        "wires_before": pipe.graph.n(),
        "wires_after": compact.wires().len(),
        "flow_depth": pipe.flow.depth(),
        "ssf_depth": pipe.ssf.depth(),
        "extended_depth": stats.depth,
        "compact_depth": compact.depth(),
        "jlayers": j_depth(&compact),
        "degree": pipe.graph.max_degree(),
        "verified": verified,
    });
    if emit_report {
        match io.report {
            ReportFormat::Json => println!("{report}"),
            ReportFormat::Text => {
                println!(
                    "flow depth {}, SSF depth {}, wires {}→{}",
                    pipe.flow.depth(),
                    pipe.ssf.depth(),
                    pipe.graph.n(),
                    compact.wires().len()
                );
                println!(
                    "J layers {}, circuit depth {}, deg(G) {}",
                    j_depth(&compact),
                    compact.depth(),
                    pipe.graph.max_degree()
                );
                if let Some(true) = verified {
                    println!("verified: equivalent within {TOL:e}");
                }
            }
        }
    }
    if io.out.is_some() || !emit_report {
        write_or_print(&io.out, &compact.to_json())?;
    }
    if io.dump_state {
        let mut outs = compact.outputs();
        outs.sort_unstable();
        let u = circuit_unitary_with_order(&compact, &outs).map_err(internal_err)?;
        dump_unitary(&u);
    }
    Ok(())
}

fn cmd_gflow(input: &str, report: ReportFormat) -> Result<(), Failure> {
    let g = match load_input(input)? {
        Input::Graph(g, _) => g,
        _ => return Err(input_err("gflow expects a graph JSON input")),
    };
    let flow = find_flow(&g);
    let ssf = match &flow {
        Some(fl) => Some(ssf_from_flow(fl, &g).map_err(internal_err)?),
        None => None,
    };
    let delayed = max_delayed_gflow(&g);
    let optimal = match (&ssf, &delayed) {
        (Some(s), Some(d)) => Some(s.measured_partition() == d.measured_partition()),
        _ => None,
    };
    if report == ReportFormat::Json {
        println!(
            "{}",
            json!({
                "flow": flow.as_ref().map(|f| f.to_json()),
                "ssf": ssf.as_ref().map(|s| s.to_json()),
                "max_delayed": delayed.as_ref().map(|d| d.to_json()),
                "optimal": optimal,
            })
        );
        return Ok(());
    }
    match (&flow, &delayed) {
        (Some(fl), _) => {
            let f: Vec<String> = fl.f.iter().map(|(i, fi)| format!("f({i})={fi}")).collect();
            println!("flow: {} (depth {})", f.join(" "), fl.depth());
            let ssf = ssf.as_ref().expect("flow implies ssf");
            let s: Vec<String> = ssf
                .g
                .iter()
                .map(|(i, si)| {
                    let vs: Vec<String> = si.iter().map(|v| v.to_string()).collect();
                    format!("s({i})={{{}}}", vs.join(","))
                })
                .collect();
            println!("SSF: {}", s.join(" "));
            println!("SSF layers: {}", layer_string(&ssf.measured_partition()));
            let d = delayed.as_ref().expect("flow implies gflow");
            println!(
                "max-delayed gflow layers: {}",
                layer_string(&d.measured_partition())
            );
            println!(
                "optimal: {}",
                if optimal == Some(true) { "yes" } else { "no" }
            );
        }
        (None, Some(d)) => {
            println!(
                "no flow; gflow layers: {}",
                layer_string(&d.measured_partition())
            );
        }
        (None, None) => println!("no flow, no gflow"),
    }
    Ok(())
}

fn cmd_shift(io: &IoArgs) -> Result<(), Failure> {
    let pipe = Pipeline::build(load_input(&io.input)?)?;
    let out = if io.pauli {
        pauli_simplify(&pipe.shifted).map_err(internal_err)?
    } else {
        pipe.shifted.clone()
    };
    write_or_print(&io.out, &out.to_json())
}

fn cmd_extend(io: &IoArgs) -> Result<(), Failure> {
    let pipe = Pipeline::build(load_input(&io.input)?)?;
    let ext = pipe.extend()?;
    let stats = circuit_stats(&ext);
    let flat = ext.flatten();
    let v = json!({
        "circuit": flat.to_json(),
        "jlayers": stats.jlayers,
        "depth": stats.depth,
    });
    write_or_print(&io.out, &v)?;
    if io.dump_state {
        let mut order = flat.wires().to_vec();
        order.sort_unstable();
        let u = circuit_unitary_with_order(&flat, &order).map_err(internal_err)?;
        dump_unitary(&u);
    }
    Ok(())
}

fn verify_one(pipe: &Pipeline) -> Result<(), Failure> {
    let (ext, compact, _) = pipe.compactify(false)?;
    pipe.check(&compact)?;
    let big = ext.flatten();
    let inputs = pipe.graph.inputs().to_vec();
    // Input i ends up on the output wire at the end of its flow chain.
    let outs: Vec<_> = inputs
        .iter()
        .map(|&i| chain_end(&pipe.flow.f, i))
        .collect();
    let ok = extended_matches_rewritten(&big, &inputs, &compact, &outs, TOL)
        .map_err(internal_err)?;
    if !ok {
        return Err(Failure::Verify(
            "extended and compact circuits disagree".into(),
        ));
    }
    Ok(())
}

fn cmd_verify(input: &Option<String>, seed: u64, count: usize) -> Result<(), Failure> {
    match input {
        Some(path) => {
            let pipe = Pipeline::build(load_input(path)?)?;
            verify_one(&pipe)?;
            println!("PASS: compact circuit equivalent within {TOL:e}");
        }
        None => {
            let mut r = gen::rng(seed);
            for case in 0..count {
                let wires = (case % 3) + 1;
                let c = gen::random_circuit(&mut r, wires, 1 + case % 6, case % 5);
                let pipe = Pipeline::build(Input::Circuit(c))?;
                verify_one(&pipe)
                    .map_err(|f| Failure::Verify(format!("case {case}: {}", f.message())))?;
            }
            println!("PASS: {count} random circuits equivalent within {TOL:e}");
        }
    }
    Ok(())
}

fn cmd_bench(sizes: &[usize], max_exponent: f64) -> Result<(), Failure> {
    let mut points = Vec::new();
    for &n in sizes {
        if n < 2 {
            return Err(input_err("bench sizes must be at least 2"));
        }
        let g = OpenGraph::path(1..=n, [1], [n]).map_err(internal_err)?;
        let fl = find_flow(&g).ok_or_else(|| internal_err("path graph lost its flow"))?;
        let start = Instant::now();
        let mut reps = 0u32;
        while start.elapsed().as_secs_f64() < 0.05 || reps < 3 {
            std::hint::black_box(ssf_from_flow(&fl, &g).map_err(internal_err)?);
            reps += 1;
        }
        let t = start.elapsed().as_secs_f64() / reps as f64;
        println!("n={n}: {:.3} ms ({reps} reps)", t * 1e3);
        points.push(((n as f64).ln(), t.ln()));
    }
    // Least-squares slope of log t against log n.
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    println!("fitted exponent: {slope:.2}");
    if slope <= max_exponent {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "fitted exponent {slope:.2} exceeds bound {max_exponent}"
        )))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Optimize(io) => cmd_optimize(io, true),
        Cmd::Compactify(io) => cmd_optimize(io, false),
        Cmd::Gflow { input, report } => cmd_gflow(input, *report),
        Cmd::Shift(io) => cmd_shift(io),
        Cmd::Extend(io) => cmd_extend(io),
        Cmd::Verify { input, seed, count } => cmd_verify(input, *seed, *count),
        Cmd::Bench {
            sizes,
            max_exponent,
        } => cmd_bench(sizes, *max_exponent),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = run(&cli) {
        eprintln!("error: {}", f.message());
        std::process::exit(f.code());
    }
}
