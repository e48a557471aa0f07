//! Fault-free latency and throughput of ATREE and ALL as n grows.

use vcube::suite::{run_suite, SuiteSpec};
use vcube::ProtocolName;

fn main() -> vcube::Result<()> {
    let spec = SuiteSpec::fault_free_sweep(vec![ProtocolName::AtreeB, ProtocolName::AllB]);
    let out = run_suite(&spec)?;
    for p in &spec.protocols {
        println!("# {p}");
        print!("{}", out.table(*p).expect("table per protocol").to_tsv());
    }
    Ok(())
}
