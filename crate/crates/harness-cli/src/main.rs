use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harness_cli::{
    aggregate, preset, read_jsonl, run_circuit, run_scenario, write_csv, write_jsonl,
    CircuitScenario, Execution, HarnessError, InputSpec, Population, Protocol, ResultRecord,
    Scenario, PRESETS,
};
use radio_core::ModelKind;
use rand_protocols::ScheduleKind;

#[derive(Parser)]
#[command(
    name = "radionet",
    version,
    about = "Monte-Carlo runs of single-hop radio network protocols"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the trials of one scenario and write JSONL records.
    Simulate(SimArgs),
    /// Summarise a JSONL file: success rate and p50/p95/max of energy and slots.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Simulate a boolean circuit over the channel.
    Circuit(CircuitArgs),
    /// Run a built-in sweep, one JSONL file per scenario.
    Preset {
        /// Preset name; `--list` prints them.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    protocol: Protocol,
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    big_n: u64,
    #[arg(long, conflicts_with = "density", required_unless_present = "density")]
    n: Option<u64>,
    /// Active fraction c; n = ⌈c·N⌉.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: u64,
    /// geometric:<γ>, poly:<ε>, exp:<b> or double-exp:<ε>.
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    /// First checkpoint d_1.
    #[arg(long, default_value_t = rand_protocols::MIN_D1)]
    d1: u64,
    #[arg(long)]
    slot_limit: Option<u64>,
    /// Estimate for test_network_size; defaults to n.
    #[arg(long)]
    n_tilde: Option<f64>,
    #[arg(long)]
    c_id: Option<f64>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    tns_c: Option<f64>,
    /// Density constant of the dense protocols.
    #[arg(long)]
    dense_c: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write a CSV copy.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CircuitArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    n_tilde: f64,
    #[arg(long)]
    model: ModelKind,
    /// Devices; defaults to ñ rounded.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// `random` or one bit per input, e.g. `0110`.
    #[arg(long, default_value = "random")]
    inputs: InputSpec,
    #[arg(long, default_value_t = 3.0)]
    c_m: f64,
    /// JSONL destination; stdout if unset.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn write_to(path: &PathBuf, records: &[ResultRecord]) -> Result<(), HarnessError> {
    write_jsonl(BufWriter::new(File::create(path)?), records)
}

fn simulate(a: SimArgs) -> Result<(), HarnessError> {
    let pop = match (a.n, a.density) {
        (Some(n), _) => Population::Count(n),
        (None, Some(c)) => Population::Density(c),
        (None, None) => return Err(HarnessError::config("n", "give --n or --density")),
    };
    let mut s = Scenario::new(a.protocol, a.model, a.big_n, pop, a.seed, a.trials);
    if a.schedule.is_some() {
        s.schedule = a.schedule;
    }
    s.d1 = a.d1;
    s.slot_limit = a.slot_limit;
    s.n_tilde = a.n_tilde;
    s.c_id = a.c_id.unwrap_or(s.c_id);
    s.beta = a.beta.unwrap_or(s.beta);
    s.tns_c = a.tns_c.unwrap_or(s.tns_c);
    s.dense_c = a.dense_c;
    let records = run_scenario(&s, exec(a.sequential))?;
    write_to(&a.out, &records)?;
    if let Some(p) = &a.csv {
        write_csv(BufWriter::new(File::create(p)?), &records)?;
    }
    eprintln!("{} records written to {}", records.len(), a.out.display());
    Ok(())
}

fn circuit(a: CircuitArgs) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(&a.file)?;
    let c = circuit_sim::Circuit::parse(&text).map_err(|e| HarnessError::config("file", e))?;
    let n = a.n.unwrap_or(a.n_tilde.round().max(0.0) as u64);
    let mut s = CircuitScenario::new(
        a.file.display().to_string(),
        a.model,
        n,
        a.n_tilde,
        a.seed,
        a.trials,
    );
    s.inputs = a.inputs;
    s.c_m = a.c_m;
    let records = run_circuit(&c, &s, exec(a.sequential))?;
    match &a.out {
        Some(p) => write_to(p, &records),
        None => write_jsonl(io::stdout().lock(), &records),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match cli.cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Aggregate { input } => File::open(&input)
            .map_err(HarnessError::from)
            .and_then(|f| read_jsonl(BufReader::new(f)))
            .and_then(|r| aggregate(&r))
            .and_then(|s| {
                let mut out = io::stdout().lock();
                serde_json::to_writer_pretty(&mut out, &s).map_err(io::Error::from)?;
                writeln!(out)?;
                Ok(())
            }),
        Cmd::Circuit(a) => circuit(a),
        Cmd::Preset { list: true, .. } | Cmd::Preset { name: None, .. } => {
            for (n, d) in PRESETS {
                println!("{n:<22} {d}");
            }
            Ok(())
        }
        Cmd::Preset {
            name: Some(name),
            trials,
            out_dir,
            ..
        } => match preset(&name, trials) {
            None => Err(HarnessError::config(
                "preset",
                format!("unknown preset `{name}`"),
            )),
            Some(list) => list.iter().try_for_each(|s| {
                let path =
                    out_dir.join(format!("{name}-{}-{}-n{}.jsonl", s.protocol, s.model, s.n));
                let records = run_scenario(s, Execution::default())?;
                write_to(&path, &records)?;
                eprintln!("{}", path.display());
                Ok(())
            }),
        },
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radionet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
