use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vcube::enumerate::{map_crash_timings, DEFAULT_CAP};
use vcube::metrics::{broadcasts, deliveries, latency_of};
use vcube::scenario::{Scenario, TimingSpec};
use vcube::suite::{run_suite, SuiteName, SuiteSpec};
use vcube::verify::{check, VerifyOptions, CRITERIA};
use vcube::{
    AppBroadcast, MessageId, ProcessId, ProtocolName, RunOptions, SimTime, SystemConfig, TraceLevel,
};

#[derive(Parser)]
#[command(name = "vcube-sim", version, about = "VCube broadcast simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and report latency and message counts.
    Run(RunArgs),
    /// Run a named sweep and write one TSV per protocol.
    Suite(SuiteArgs),
    /// Try every crash timing of a crash set and check delivery.
    Enumerate(EnumerateArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Overrides {
    /// Override the scenario's protocol.
    #[arg(long)]
    protocol: Option<ProtocolName>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of random crashes.
    #[arg(long)]
    crashes: Option<usize>,
    /// Send, receive and transmit costs, e.g. `0.1,0.1,0.8`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    timing: Option<Vec<f64>>,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Write the full trace here, one record per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// `fault-free-sweep`, `fault-sweep`, or a suite TOML file.
    suite: String,
    /// Comma-separated protocol names.
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<ProtocolName>>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios per crash count.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', num_args = 3)]
    timing: Option<Vec<f64>>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value = "atree-b")]
    protocol: ProtocolName,
    /// Process to crash; repeat for several.
    #[arg(long = "crash", required = true)]
    crash: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    source: u32,
    #[arg(long, default_value_t = 1)]
    messages: u32,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Property to check; defaults to agreement for reliable protocols and
    /// validity otherwise.
    #[arg(long, value_enum)]
    property: Option<Property>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Property {
    /// Every correct process delivers each message of a correct source.
    Validity,
    /// Correct processes deliver the same set of messages.
    Agreement,
}

#[derive(Args)]
struct VerifyArgs {
    /// Only these criteria; repeatable.
    #[arg(long)]
    criterion: Vec<u8>,
    /// Scenarios per crash count in the fault sweep.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
}

enum Failure {
    Config(vcube::Error),
    Violation(String),
}

impl From<vcube::Error> for Failure {
    fn from(e: vcube::Error) -> Self {
        Failure::Config(e)
    }
}

fn timing_spec(v: &Option<Vec<f64>>) -> Option<TimingSpec> {
    v.as_ref().map(|t| TimingSpec {
        send: t[0],
        receive: t[1],
        transmit: t[2],
    })
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut s = Scenario::load(&args.scenario)?;
    let o = args.overrides;
    if let Some(p) = o.protocol {
        s.protocol = p;
    }
    if let Some(seed) = o.seed {
        s.seed = seed;
    }
    if let Some(n) = o.n {
        s.n = n;
    }
    if let Some(c) = o.crashes {
        s.crashes.count = c;
        s.crashes.explicit.clear();
    }
    if o.timing.is_some() {
        s.timing = timing_spec(&o.timing);
    }
    s.validate()?;
    let level = if args.trace.is_some() {
        TraceLevel::Full
    } else {
        TraceLevel::Summary
    };
    let trace = s.run(RunOptions {
        level,
        ..RunOptions::default()
    })?;
    if let Some(path) = &args.trace {
        trace
            .write_text(std::io::BufWriter::new(
                std::fs::File::create(path).map_err(vcube::Error::from)?,
            ))
            .map_err(vcube::Error::from)?;
    }
    println!("protocol {} n {} seed {}", s.protocol, s.n, s.seed);
    for (p, t) in trace.crashes.iter() {
        println!("crash {p} at {t}");
    }
    let c = trace.counts;
    println!(
        "messages TREE {} ACK {} NACK {} total {}",
        c.tree,
        c.ack,
        c.nack,
        c.total()
    );
    let mut violations = Vec::new();
    for id in broadcasts(&trace) {
        match latency_of(&trace, id) {
            Ok(l) => println!("latency {id} {l}"),
            Err(e) if trace.crashes.is_correct(id.source) => violations.push(e.to_string()),
            Err(_) => println!("latency {id} - (source crashed)"),
        }
    }
    println!("end {}", trace.end_time);
    if trace.truncated {
        violations.push("run truncated".into());
    }
    match violations.is_empty() {
        true => Ok(()),
        false => Err(Failure::Violation(violations.join("; "))),
    }
}

fn cmd_suite(args: SuiteArgs) -> Result<(), Failure> {
    let mut spec = match args.suite.parse::<SuiteName>() {
        Ok(SuiteName::FaultFreeSweep) => {
            SuiteSpec::fault_free_sweep(vec![ProtocolName::AtreeB, ProtocolName::AllB])
        }
        Ok(SuiteName::FaultSweep) => SuiteSpec::fault_sweep(vec![
            ProtocolName::AtreeB,
            ProtocolName::AllB,
            ProtocolName::NatreeB,
        ]),
        Err(_) => SuiteSpec::load(std::path::Path::new(&args.suite))?,
    };
    if let Some(p) = args.protocols {
        spec.protocols = p;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(k) = args.seeds {
        spec.seeds = k;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if args.timing.is_some() {
        spec.timing = timing_spec(&args.timing);
    }
    let out = run_suite(&spec)?;
    for path in out.write(&args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<(), Failure> {
    let config = SystemConfig::new(args.n);
    config.validate()?;
    let source = ProcessId(args.source);
    let workload: Vec<_> = (0..args.messages)
        .map(|_| AppBroadcast::new(SimTime::ZERO, source))
        .collect();
    let crash: Vec<ProcessId> = args.crash.iter().copied().map(ProcessId).collect();
    let property = args.property.unwrap_or(if args.protocol.is_reliable() {
        Property::Agreement
    } else {
        Property::Validity
    });
    let results = map_crash_timings(
        &config,
        &workload,
        args.protocol,
        &crash,
        args.cap,
        |sched, trace| {
            let per = deliveries(&trace);
            let survivors: Vec<usize> = (0..trace.n)
                .filter(|&i| trace.crashes.is_correct(ProcessId(i as u32)))
                .collect();
            let dup_free = per.iter().all(|d| {
                let mut v = d.clone();
                v.sort();
                v.dedup();
                v.len() == d.len()
            });
            let ok = if property == Property::Agreement {
                let first: Vec<MessageId> = sorted(&per[survivors[0]]);
                survivors.iter().all(|&i| sorted(&per[i]) == first)
            } else if sched.is_correct(source) {
                broadcasts(&trace)
                    .iter()
                    .all(|&id| latency_of(&trace, id).is_ok())
            } else {
                true
            };
            (ok && dup_free && !trace.truncated, sched.clone())
        },
    )?;
    let bad: Vec<_> = results.iter().filter(|(ok, _)| !ok).collect();
    println!("{} runs, {} violations", results.len(), bad.len());
    for (_, s) in bad.iter().take(10) {
        let entries: Vec<String> = s.iter().map(|(p, t)| format!("{p}@{t}")).collect();
        println!("violation: {}", entries.join(" "));
    }
    match bad.is_empty() {
        true => Ok(()),
        false => Err(Failure::Violation(format!(
            "{} violating schedules",
            bad.len()
        ))),
    }
}

fn sorted(v: &[MessageId]) -> Vec<MessageId> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions {
        fault_sweep_seeds: args.seeds,
    };
    let ids: Vec<u8> = if args.criterion.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        args.criterion
    };
    let mut failed = 0;
    for id in ids {
        let outcome = check(id, &opts);
        println!("{outcome}");
        failed += usize::from(!outcome.passed);
    }
    match failed {
        0 => Ok(()),
        k => Err(Failure::Violation(format!("{k} criteria failed"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(v)) => {
            eprintln!("violation: {v}");
            ExitCode::from(2)
        }
    }
}
