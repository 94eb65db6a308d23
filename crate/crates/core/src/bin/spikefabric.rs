// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Failures exit nonzero and print one JSON object
//! `{"error": <kind>, "message": <text>}` on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spikefabric::engine::{run, SimConfig};
use spikefabric::harness::{
    barrier_bench, bench_throughput, latency_sweep, BarrierBenchSpec, BarrierScenario, Lane, SweepSpec,
};
use spikefabric::io::{
    load_config, load_program, parse_connectivity, read_bytes, read_text, resolve_program, store_program, store_report,
    write_file, IoError,
};
use spikefabric::netcompiler::{compile, verify};
use spikefabric::{Error, Result};

#[derive(Parser)]
#[command(name = "spikefabric", version, about = "Cycle-level multi-chip spike interconnect simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Simulation config (TOML). Experiments without one use the default calibration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config override `key=value`; keys without a top-level section are calibration keys.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a connectivity file into a FabricProgram.
    Compile {
        connectivity: PathBuf,
        #[arg(long)]
        nodes: usize,
        /// Program file to write.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Check that a program realizes a connectivity file.
    Verify { program: PathBuf, connectivity: PathBuf },
    /// Run one simulation and store its report.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Latency sweep over source rates on a fan-in topology.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        fan_in: usize,
        /// Comma-separated rates in MHz.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1 << 15)]
        spikes: u64,
        #[arg(long, default_value_t = 0)]
        stagger_ticks: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Sustained throughput of a saturated lane.
    BenchThroughput {
        #[command(flatten)]
        common: Common,
        /// Lanes to measure; all when omitted.
        #[arg(long, value_enum)]
        lane: Vec<Lane>,
        #[arg(long, default_value_t = 1_000_000)]
        words: u64,
    },
    /// Barrier start-up scenario with randomized request offsets.
    BenchBarrier {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all-request")]
        scenario: BarrierScenario,
        #[arg(long, default_value_t = 12)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        spread_cycles: u64,
        #[arg(long, default_value_t = 5000)]
        straggler_delay_cycles: u64,
    },
}

impl Common {
    /// Loaded config with overrides applied, and the directory relative paths resolve against.
    fn config(&self, required: bool) -> Result<(SimConfig, PathBuf)> {
        let (mut cfg, base) = match &self.config {
            Some(path) => {
                let cfg = load_config(&read_text(path)?)?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None if required => return Err(Error::Usage("--config is required".into())),
            None => (SimConfig::new(1, 1), PathBuf::from(".")),
        };
        for o in &self.overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Usage(format!("override `{o}` is not key=value")))?;
            cfg.apply_override(k.trim(), v.trim()).map_err(Error::Usage)?;
        }
        Ok((cfg, base))
    }

    fn out_dir(&self) -> Result<Option<&Path>> {
        if let Some(d) = &self.out {
            std::fs::create_dir_all(d).map_err(|e| IoError::fs(d, e))?;
        }
        Ok(self.out.as_deref())
    }
}

fn write_json(dir: Option<&Path>, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json(e.to_string()))?;
    text.push('\n');
    match dir {
        Some(d) => write_file(&d.join(name), text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Compile { connectivity, nodes, output } => {
            let parsed = parse_connectivity(&read_text(&connectivity)?)?;
            warn(&parsed.warnings);
            let program = compile(&parsed.connections, nodes)?;
            write_file(&output, &store_program(&program))?;
            print!("{}", program.summary());
        }
        Command::Verify { program, connectivity } => {
            let program = load_program(&read_bytes(&program)?)?;
            let parsed = parse_connectivity(&read_text(&connectivity)?)?;
            warn(&parsed.warnings);
            let report = verify(&program, &parsed.connections);
            if !report.is_empty() {
                return Err(Error::Verify(report));
            }
            println!("{}", json!({ "ok": true, "connections": parsed.connections.len() }));
        }
        Command::Run { common } => {
            let (cfg, base) = common.config(true)?;
            let resolved = resolve_program(&cfg, &base)?;
            warn(&resolved.warnings);
            let report = run(&cfg, &resolved.program)?;
            if let Some(dir) = common.out_dir()? {
                store_report(&report, dir)?;
            }
            let p = report.latency.percentiles;
            println!(
                "{}",
                json!({
                    "end_tick": report.end_tick,
                    "quiescent": report.quiescent,
                    "generated": report.conservation.generated,
                    "traced": report.conservation.traced,
                    "dropped": report.total_dropped(),
                    "p50_ns": p.map(|p| p.p50_ns),
                    "p99_ns": p.map(|p| p.p99_ns),
                })
            );
        }
        Command::Sweep { common, fan_in, rates, spikes, stagger_ticks, workers } => {
            let (cfg, _) = common.config(false)?;
            let mut spec = SweepSpec { fan_in, spikes_per_point: spikes, stagger_ticks, ..SweepSpec::default() };
            if let Some(r) = rates {
                spec.rates_mhz = r;
            }
            let result = latency_sweep(&cfg, &spec, workers)?;
            let dir = common.out_dir()?;
            if let Some(d) = dir {
                let hist = result.histogram_csv()?;
                write_file(&d.join("histogram.csv"), hist.as_bytes())?;
                write_file(&d.join("percentiles.csv"), result.percentiles_csv()?.as_bytes())?;
                write_json(dir, "sweep.json", &result)?;
            }
            print!("{}", result.percentiles_csv()?);
        }
        Command::BenchThroughput { common, lane, words } => {
            let (cfg, _) = common.config(false)?;
            let lanes = if lane.is_empty() { vec![Lane::Mgt, Lane::Chip, Lane::EndToEnd] } else { lane };
            let results = lanes.into_iter().map(|l| bench_throughput(&cfg, l, words)).collect::<Result<Vec<_>, _>>()?;
            write_json(common.out_dir()?, "throughput.json", &results)?;
        }
        Command::BenchBarrier { common, scenario, nodes, seed, spread_cycles, straggler_delay_cycles } => {
            let (cfg, _) = common.config(false)?;
            let spec = BarrierBenchSpec { scenario, node_count: nodes, seed, spread_cycles, straggler_delay_cycles };
            let report = barrier_bench(&cfg, &spec)?;
            write_json(common.out_dir()?, "barrier.json", &report)?;
        }
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprint!("{msg}");
            return fail("usage", msg.lines().next().unwrap_or_default().trim_start_matches("error: "));
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let detail = match &e {
                Error::Verify(report) => serde_json::to_string(report).ok(),
                _ => None,
            };
            if let Some(d) = detail {
                eprintln!("{d}");
            }
            fail(e.kind(), &e.to_string())
        }
    }
}
