//! Loads a scenario from TOML, runs it and writes the trace next to it.

use vcube::scenario::Scenario;
use vcube::RunOptions;

const SCENARIO: &str = r#"
n = 32
protocol = "atree-r"
seed = 7

[workload]
sources = [0, 5]
messages = 2

[crashes]
count = 2
include_sources = true
"#;

fn main() -> vcube::Result<()> {
    let scenario = match std::env::args().nth(1) {
        Some(path) => Scenario::load(path.as_ref())?,
        None => Scenario::from_toml(SCENARIO)?,
    };
    let schedule = scenario.schedule()?;
    for (p, t) in schedule.iter() {
        println!("crash {p} at {t}");
    }
    let trace = scenario.run(RunOptions::default())?;
    let path = std::env::temp_dir().join("vcube-trace.tsv");
    trace.write_text(std::fs::File::create(&path)?)?;
    println!(
        "{} records written to {}",
        trace.records.len(),
        path.display()
    );
    Ok(())
}
