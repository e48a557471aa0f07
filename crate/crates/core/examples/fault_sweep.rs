//! A reduced fault sweep: 64 processes, up to four crashes, five seeds.
//! The command-line `suite` subcommand runs the full-size version.

use vcube::suite::{run_suite, SuiteSpec};
use vcube::ProtocolName;

fn main() -> vcube::Result<()> {
    let mut spec = SuiteSpec::fault_sweep(vec![
        ProtocolName::AtreeB,
        ProtocolName::AllB,
        ProtocolName::NatreeB,
    ]);
    spec.n = 64;
    spec.max_crashes = 4;
    spec.seeds = 5;
    let out = run_suite(&spec)?;
    for p in &spec.protocols {
        println!("# {p}");
        print!("{}", out.table(*p).expect("table per protocol").to_tsv());
    }
    Ok(())
}
