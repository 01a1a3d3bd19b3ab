//! Plain-text rendering of analysis reports and reach decompositions.

use netdetect::digraph::ReachDecomposition;
use netdetect::network::{DetectabilityReport, NetworkReport, Verdict};
use std::fmt::Write;

fn yesno(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Detectable => "DETECTABLE",
        Verdict::NotDetectable => "NOT DETECTABLE",
        Verdict::Inconsistent => "INCONSISTENT",
    }
}

pub fn render_report(report: &NetworkReport) -> String {
    let mut out = String::new();
    if report.decoupled {
        let _ = writeln!(
            out,
            "graph is disconnected: {} components analyzed independently",
            report.components.len()
        );
    }
    for comp in &report.components {
        render_component(&mut out, comp, report.components.len() > 1);
    }
    let _ = writeln!(out, "overall verdict: {}", verdict_text(report.verdict));
    out
}

fn render_component(out: &mut String, c: &DetectabilityReport, labeled: bool) {
    if labeled {
        let _ = writeln!(out, "component with nodes {:?}:", c.vertices);
    }
    let _ = writeln!(
        out,
        "system: n={} states, N={} nodes, {} communication",
        c.state_dim,
        c.num_nodes,
        if c.shared_comm { "shared" } else { "per-node" }
    );
    let _ = writeln!(out, "verdict: {}", verdict_text(c.verdict));
    let _ = writeln!(
        out,
        "  PBH oracle: {}",
        if c.oracle_detectable {
            "detectable"
        } else {
            "not detectable"
        }
    );
    let _ = writeln!(
        out,
        "  geometric criterion: {} (intersection dim {})",
        if c.geometric_holds { "holds" } else { "fails" },
        c.geometric_intersection_dim
    );
    let _ = writeln!(
        out,
        "  joint unobservable dim {}; Laplacian kernel dim {}; antistable dim {}",
        c.joint_unobservable_dim, c.laplacian_kernel_dim, c.antistable_dim
    );
    let nec = &c.necessary;
    let _ = writeln!(
        out,
        "  necessary: (i) joint undetectable trivial: {}; (ii) comm covers all nodes: {}; (iii) rank bound: {}",
        yesno(nec.joint_undetectable_trivial),
        yesno(nec.comm_covers_all_nodes),
        yesno(nec.comm_rank_sufficient)
    );
    for node in &nec.nodes {
        let _ = writeln!(
            out,
            "    node {}: undetectable dim {}, comm unobservable dim {}, comm rank {}, covered: {}",
            node.node,
            node.undetectable_dim,
            node.comm_unobservable_dim,
            node.comm_rank,
            yesno(node.comm_covers_undetectable)
        );
    }
    let _ = writeln!(out, "  spanning tree: {}", yesno(c.spanning_tree));
    if c.tree_sufficiency.applicable {
        let _ = writeln!(
            out,
            "  tree sufficiency: verdict {}, leaderless route {}, rooted route {}",
            yesno(c.tree_sufficiency.verdict.unwrap_or(false)),
            yesno(c.tree_sufficiency.leaderless.unwrap_or(false)),
            yesno(c.tree_sufficiency.rooted.unwrap_or(false))
        );
    }
    for r in &c.reaches {
        let _ = writeln!(
            out,
            "  reach {} {:?}: joint undetectable dim {} (trivial: {}), nodes covered: {}",
            r.reach,
            r.vertices,
            r.joint_undetectable_dim,
            yesno(r.joint_trivial),
            yesno(r.nodes_covered)
        );
    }
    if let Some(verdict) = c.reach_sufficiency_verdict {
        let _ = writeln!(
            out,
            "  reach sufficiency (comm pair observable): {}",
            yesno(verdict)
        );
    }
    if c.theorem_checks_advisory {
        let _ = writeln!(
            out,
            "  note: per-node communication matrices; theorem-level checks are advisory"
        );
    }
    if let Some(w) = &c.witness {
        let formatted: Vec<String> = w.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(out, "  witness: [{}]", formatted.join(", "));
    }
    for flag in &c.consistency {
        let _ = writeln!(out, "  consistency violation: {flag}");
    }
}

pub fn render_reaches(d: &ReachDecomposition, n_vertices: usize) -> String {
    let mut out = String::new();
    if d.decoupled {
        let _ = writeln!(
            out,
            "graph is disconnected: estimation decouples over {} components",
            d.components.len()
        );
    }
    for (ci, comp) in d.components.iter().enumerate() {
        let labels: Vec<usize> = comp.iter().map(|v| v + 1).collect();
        let reaches_here: Vec<usize> = d
            .reaches
            .iter()
            .enumerate()
            .filter(|(_, r)| comp.contains(&r.vertices[0]))
            .map(|(s, _)| s)
            .collect();
        let _ = writeln!(
            out,
            "component {} (nodes {:?}): {} reach(es), spanning tree: {}",
            ci + 1,
            labels,
            reaches_here.len(),
            yesno(reaches_here.len() == 1)
        );
        for s in reaches_here {
            let r = &d.reaches[s];
            let up = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
            let _ = writeln!(
                out,
                "  reach {}: vertices {:?}, exclusive {:?}, common {:?}",
                s + 1,
                up(&r.vertices),
                up(&r.exclusive),
                up(&r.common)
            );
            let entries: Vec<String> = (0..n_vertices)
                .map(|v| format!("{:.6}", d.kernel_basis[s][v]))
                .collect();
            let _ = writeln!(out, "    kernel vector: [{}]", entries.join(", "));
        }
    }
    let _ = writeln!(
        out,
        "overall: {} reach(es); spanning tree: {}",
        d.reaches.len(),
        yesno(d.reaches.len() == 1)
    );
    out
}
