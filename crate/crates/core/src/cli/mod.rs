//! Command-line front end: `flatsteer <synth|simulate|verify|study|classify>`.

pub mod config;
pub mod pipeline;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::run_loss_study;
use crate::error::Error;
use crate::flatness::ControlSignal;
use crate::real::Prec;
use crate::target::{classify_reachability, Geometry};
use config::{ExperimentConfig, Format, SchemaError};
use pipeline::{Synthesis, TerminalState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "flatsteer", version, about = "Boundary steering of the 1D heat equation by flat outputs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build flat outputs and boundary controls.
    Synth(Common),
    /// Replay controls (synthesized or read from --controls) through Crank–Nicolson.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Directory with control_left.csv / control_right.csv from `synth`.
        #[arg(long)]
        controls: Option<PathBuf>,
    },
    /// Full pipeline; exits 0 iff the relative terminal error is within tolerance.
    Verify(Common),
    /// Finite-Laplace loss study tables.
    Study(Common),
    /// Reachability verdict for the configured target and setting.
    Classify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides outputs.directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Working precision in bits (overrides the config).
    #[arg(long, env = "FLATSTEER_PRECISION")]
    pub precision: Option<u32>,
    /// Verification tolerance (overrides verify.tolerance).
    #[arg(long)]
    pub tol: Option<f64>,
}

enum Failure {
    Schema(String),
    Numeric(Error),
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Schema(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

struct Run {
    cfg: ExperimentConfig,
    out: PathBuf,
    precision: Prec,
    tol: f64,
}

impl Run {
    fn prepare(c: &Common) -> Result<Self, Failure> {
        let mut cfg = ExperimentConfig::load(&c.config)?;
        if let Some(bits) = c.precision {
            if !(53..=4096).contains(&bits) {
                return Err(Failure::Schema(format!("precision {bits} must lie in [53, 4096]")));
            }
            if let Some(s) = cfg.synthesis.as_mut() {
                s.precision_bits = bits;
            }
        }
        if let Some(t) = c.tol {
            if !(t > 0.0) {
                return Err(Failure::Schema("--tol must be positive".into()));
            }
            cfg.verify.tolerance = t;
        }
        let out = c
            .out
            .clone()
            .or_else(|| cfg.outputs.directory.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let precision = Prec(cfg.synthesis.as_ref().map_or(256, |s| s.precision_bits));
        let tol = cfg.verify.tolerance;
        Ok(Run { cfg, out, precision, tol })
    }

    fn dir(&self) -> Result<&Path, Error> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        Ok(&self.out)
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<(), Error> {
        let path = self.dir()?.join(name);
        let text = serde_json::to_string_pretty(v).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, Error> {
        let path = self.dir()?.join(name);
        Ok(BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?))
    }

    fn write_controls(&self, syn: &Synthesis) -> Result<(), Error> {
        if !self.cfg.outputs.wants(Format::Csv) {
            return Ok(());
        }
        let write = |name: &str, c: &ControlSignal| -> Result<(), Error> { c.write_csv(self.create(name)?) };
        if let Some(c) = &syn.controls.0 {
            write("control_left.csv", c)?;
        }
        if let Some(c) = &syn.controls.1 {
            write("control_right.csv", c)?;
        }
        Ok(())
    }

    fn write_field(&self, field: &crate::heatsim::HeatField, terminal: &TerminalState) -> Result<(), Error> {
        if self.cfg.outputs.wants(Format::Csv) {
            let mut w = csv::Writer::from_writer(self.create("terminal.csv")?);
            let cs = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
            w.write_record(["x", "value", "target", "error"]).map_err(cs)?;
            for (x, u) in field.xs.iter().zip(field.last_row()) {
                let t = terminal.value(*x);
                w.write_record([x.to_string(), u.to_string(), t.to_string(), (u - t).to_string()]).map_err(cs)?;
            }
            w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
            if field.ts.len() > 2 {
                field.write_csv(self.create("field.csv")?)?;
            }
        }
        if self.cfg.outputs.wants(Format::Binary) {
            let mut w = self.create("field.bin")?;
            field.write_binary(&mut w)?;
            w.flush().map_err(|e| io_err(&self.out, e))?;
        }
        Ok(())
    }

    fn report(&self, command: &str, body: Value) -> Result<(), Error> {
        if !self.cfg.outputs.wants(Format::Json) {
            return Ok(());
        }
        let mut v = json!({ "command": command, "schema_version": config::SCHEMA_VERSION });
        if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
            m.extend(b);
        }
        self.write_json("report.json", &v)
    }
}

fn synth_json(syn: &Synthesis) -> Value {
    json!({ "synthesis": syn.report })
}

fn cmd_synth(run: &Run) -> Result<i32, Failure> {
    run.cfg.validate_pipeline()?;
    let steps = run.cfg.simulation.as_ref().map_or(1000, |s| 2 * s.nt);
    let syn = pipeline::synthesize(&run.cfg, run.precision, steps)?;
    run.write_controls(&syn)?;
    run.report("synth", synth_json(&syn))?;
    Ok(EXIT_OK)
}

fn read_controls(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let get = |i: usize| -> Result<f64, Error> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| io_err(path, format!("bad row {:?}", rec)))
        };
        out.push((get(0)?, get(1)?));
    }
    Ok(out)
}

fn cmd_simulate(run: &Run, controls: Option<&Path>) -> Result<i32, Failure> {
    run.cfg.validate_pipeline()?;
    let sim = run.cfg.simulation()?.clone();
    let Some(dir) = controls else {
        let syn = pipeline::synthesize(&run.cfg, run.precision, 2 * sim.nt)?;
        let (field, rep) = pipeline::simulate(
            &syn.problem,
            (syn.controls.0.as_ref(), syn.controls.1.as_ref()),
            &syn.terminal,
            sim.nx,
            sim.nt,
            sim.store_every,
        )?;
        run.write_controls(&syn)?;
        run.write_field(&field, &syn.terminal)?;
        let mut body = synth_json(&syn);
        body["simulation"] = json!(rep);
        run.report("simulate", body)?;
        return Ok(EXIT_OK);
    };
    // Replay of stored controls: the series field is rebuilt only as a carrier.
    let problem = run.cfg.problem()?.clone();
    let terminal = pipeline::terminal_state(&run.cfg)?;
    let load = |name: &str| -> Result<Option<Vec<(f64, f64)>>, Error> {
        let p = dir.join(name);
        if p.exists() {
            read_controls(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    let (l, r) = (load("control_left.csv")?, load("control_right.csv")?);
    let left = match l {
        Some(s) => crate::heatsim::BoundarySpec::new(problem.left_kind(), pipeline::half_step_data(&s, problem.horizon, sim.nt)?)?,
        None => crate::heatsim::BoundarySpec::homogeneous(problem.left_kind())?,
    };
    let right = match r {
        Some(s) => crate::heatsim::BoundarySpec::new(problem.right_kind(), pipeline::half_step_data(&s, problem.horizon, sim.nt)?)?,
        None => crate::heatsim::BoundarySpec::homogeneous(problem.right_kind())?,
    };
    let init = vec![0.0; sim.nx + 1];
    let opts = crate::heatsim::SolveOptions { store_every: sim.store_every.unwrap_or(sim.nt) };
    let field = crate::heatsim::solve_heat(&left, &right, &init, problem.domain(), problem.horizon, sim.nx, sim.nt, opts)?;
    let err = crate::heatsim::terminal_error(&field, &terminal.sample(&field.xs))?;
    run.write_field(&field, &terminal)?;
    run.report(
        "simulate",
        json!({ "simulation": { "nx": sim.nx, "nt": sim.nt, "domain": problem.domain(), "terminal": err },
                "controls": dir }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(run: &Run) -> Result<i32, Failure> {
    run.cfg.validate_pipeline()?;
    run.cfg.simulation()?;
    let v = pipeline::verify(&run.cfg, run.precision, run.tol)?;
    run.write_controls(&v.synthesis)?;
    run.write_field(&v.field, &v.synthesis.terminal)?;
    let mut body = synth_json(&v.synthesis);
    body["simulation"] = json!(v.sim);
    body["verdict"] = json!({ "pass": v.pass, "tolerance": v.tolerance, "rel_linf": v.sim.terminal.rel_linf });
    run.report("verify", body)?;
    Ok(if v.pass { EXIT_OK } else { EXIT_NUMERIC })
}

fn cmd_study(run: &Run) -> Result<i32, Failure> {
    let mut study = run.cfg.study.clone().unwrap_or_default();
    if run.cfg.synthesis.is_some() {
        study.precision = run.precision;
    }
    let rep = run_loss_study(&study)?;
    rep.write(run.dir()?)?;
    Ok(EXIT_OK)
}

fn cmd_classify(run: &Run) -> Result<i32, Failure> {
    let p = run.cfg.problem()?;
    let f = run.cfg.analytic_target()?;
    let (a, b) = p.domain.map_or(p.domain(), |d| (d[0], d[1]));
    let v = classify_reachability(&f, p.setting.reachability(), Geometry { left: a, right: b })?;
    let body = json!({ "setting": p.setting, "reachability": v });
    run.write_json("classification.json", &body)?;
    println!("{}", serde_json::to_string(&v.verdict).unwrap_or_default().trim_matches('"'));
    Ok(EXIT_OK)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (common, name) = match &cli.command {
        Command::Synth(c) => (c, "synth"),
        Command::Simulate { common, .. } => (common, "simulate"),
        Command::Verify(c) => (c, "verify"),
        Command::Study(c) => (c, "study"),
        Command::Classify(c) => (c, "classify"),
    };
    if let Some(j) = common.jobs {
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let run = match Run::prepare(common) {
        Ok(r) => r,
        Err(f) => return fail(name, None, f),
    };
    let res = match &cli.command {
        Command::Synth(_) => cmd_synth(&run),
        Command::Simulate { controls, .. } => cmd_simulate(&run, controls.as_deref()),
        Command::Verify(_) => cmd_verify(&run),
        Command::Study(_) => cmd_study(&run),
        Command::Classify(_) => cmd_classify(&run),
    };
    match res {
        Ok(code) => code,
        Err(f) => fail(name, Some(&run), f),
    }
}

fn fail(name: &str, run: Option<&Run>, f: Failure) -> i32 {
    match f {
        Failure::Schema(msg) => {
            eprintln!("flatsteer {name}: config error: {msg}");
            EXIT_SCHEMA
        }
        Failure::Numeric(e) => {
            let diag = json!({ "command": name, "error": e.to_string(), "kind": format!("{e:?}").split('(').next() });
            eprintln!("{diag}");
            if let Some(run) = run {
                if let Err(w) = run.write_json("report.json", &diag) {
                    eprintln!("flatsteer {name}: could not write diagnostics: {w}");
                }
            }
            EXIT_NUMERIC
        }
    }
}
