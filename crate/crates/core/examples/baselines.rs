//! ATREE against the two baselines on the same crash pattern.

use vcube::metrics::latency_of;
use vcube::scenario::Scenario;
use vcube::{ProtocolName, RunOptions};

fn main() -> vcube::Result<()> {
    println!("protocol\tlatency\tTREE\tACK\tNACK");
    for protocol in [
        ProtocolName::AtreeB,
        ProtocolName::AllB,
        ProtocolName::NatreeB,
    ] {
        let mut s = Scenario::new(64, protocol, vec![0], 5);
        s.seed = 11;
        s.crashes.count = 4;
        let trace = s.run(RunOptions::summary())?;
        let ids = vcube::metrics::broadcasts(&trace);
        let lat: Vec<f64> = ids
            .iter()
            .filter_map(|&id| latency_of(&trace, id).ok())
            .map(|t| t.as_units())
            .collect();
        let mean = lat.iter().sum::<f64>() / lat.len().max(1) as f64;
        let c = trace.counts;
        println!("{protocol}\t{mean:.3}\t{}\t{}\t{}", c.tree, c.ack, c.nack);
    }
    Ok(())
}
