//! Extracts the dissemination tree from ATREE traces, with and without a
//! crashed inner node.

use vcube::metrics::{tree_edges, TreeShape};
use vcube::{
    run, AppBroadcast, CrashSchedule, ProcessId, ProtocolName, RunOptions, SimTime, SystemConfig,
};

fn main() -> vcube::Result<()> {
    let config = SystemConfig::new(16);
    let workload = [AppBroadcast::new(SimTime::ZERO, ProcessId(0))];

    let clean = run(
        &config,
        &CrashSchedule::new(),
        &workload,
        ProtocolName::AtreeB,
        RunOptions::default(),
    )?;
    print_tree("fault-free", &clean)?;

    let mut crashes = CrashSchedule::new();
    crashes.add(ProcessId(8), SimTime::ZERO)?;
    let faulty = run(
        &config,
        &crashes,
        &workload,
        ProtocolName::AtreeB,
        RunOptions::default(),
    )?;
    print_tree("p8 crashed at 0", &faulty)?;
    Ok(())
}

fn print_tree(label: &str, trace: &vcube::Trace) -> vcube::Result<()> {
    let edges = tree_edges(trace);
    let shape = TreeShape::from_edges(ProcessId(0), &edges)?;
    println!(
        "{label}: {} edges, max out-degree {}",
        edges.len(),
        shape.max_out_degree()
    );
    print_subtree(&shape, ProcessId(0), 0);
    Ok(())
}

fn print_subtree(shape: &TreeShape, p: ProcessId, depth: usize) {
    println!("{}p{}", "  ".repeat(depth + 1), p.0);
    if let Some(children) = shape.children.get(&p) {
        for &c in children {
            print_subtree(shape, c, depth + 1);
        }
    }
}
