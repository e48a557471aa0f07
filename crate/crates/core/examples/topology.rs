//! Prints the cluster tables of a small VCube and the neighborhoods seen by
//! one process before and after a crash.

use vcube::{ProcessId, Topology, View};

fn main() -> vcube::Result<()> {
    let topo = Topology::new(8)?;
    println!("n = {}, d = {}", topo.n(), topo.dim());

    for i in 0..topo.n() as u32 {
        let rows: Vec<String> = (1..=topo.dim())
            .map(|s| {
                let members = topo.cluster_members(ProcessId(i), s).unwrap();
                let ids: Vec<String> = members.iter().map(|p| p.0.to_string()).collect();
                format!("s{s}=[{}]", ids.join(","))
            })
            .collect();
        println!("p{i}: {}", rows.join(" "));
    }

    let me = ProcessId(0);
    let mut view = View::all_correct(me, topo.n());
    show(&topo, &view)?;
    view.remove(ProcessId(4));
    println!("after p4 crashes:");
    show(&topo, &view)?;
    Ok(())
}

fn show(topo: &Topology, view: &View) -> vcube::Result<()> {
    for s in 1..=topo.dim() {
        let ff = topo.ff_neighbor(view, s)?;
        let hood = topo.neighborhood(view, s)?;
        println!(
            "  cluster {s}: ff = {:?}, neighborhood({s}) = {:?}",
            ff.map(|p| p.0),
            hood.iter().map(|p| p.0).collect::<Vec<_>>()
        );
    }
    Ok(())
}
