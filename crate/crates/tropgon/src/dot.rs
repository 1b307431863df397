//! DOT rendering. A gluing datum is drawn the way the figures draw it: d
//! copies of the base tree stacked, one node per copy of each tree vertex,
//! with glued copies sharing a color and dangling edges dashed.

use std::fmt::Write as _;

use crate::datum::GluingDatum;
use crate::error::Result;
use crate::graph::Graph;
use crate::util::block_of;

const PALETTE: [&str; 8] = [
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf", "#999999",
];

fn esc(s: &str) -> String {
    s.replace('"', "\\\"")
}

/// Plain multigraph as undirected DOT.
pub fn graph_to_dot(g: &Graph, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph \"{}\" {{", esc(name));
    let _ = writeln!(out, "  node [shape=circle, fontsize=10];");
    for v in g.vertices() {
        let _ = writeln!(out, "  \"{}\";", esc(v));
    }
    for e in g.edges() {
        let [a, b] = g.ends(e).unwrap();
        let _ = writeln!(
            out,
            "  \"{}\" -- \"{}\" [label=\"{}\"];",
            esc(a),
            esc(b),
            esc(e)
        );
    }
    let _ = writeln!(out, "}}");
    out
}

/// A datum as d stacked copies of the base tree. Nodes are `(vertex, copy)`;
/// copies glued at a vertex share a color, and each non-trivially glued class
/// is annotated. Dangling parts of the quotient are dashed.
pub fn datum_to_dot(datum: &GluingDatum, name: &str) -> Result<String> {
    let qt = datum.quotient()?;
    let mut out = String::new();
    let _ = writeln!(out, "graph \"{}\" {{", esc(name));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=point, width=0.12];");
    // color per nontrivial class, keyed by class id
    let mut color_of: std::collections::BTreeMap<String, &str> = Default::default();
    let mut next = 0usize;
    for (cid, &m) in qt.index.iter() {
        if m >= 2 {
            color_of.insert(cid.clone(), PALETTE[next % PALETTE.len()]);
            next += 1;
        }
    }
    for copy in 0..datum.degree {
        let _ = writeln!(out, "  subgraph \"cluster_copy_{}\" {{", copy + 1);
        let _ = writeln!(out, "    label=\"copy {}\"; color=lightgrey;", copy + 1);
        for v in datum.tree.vertices() {
            let pv = datum.rel_of(v);
            let cid = crate::datum::class_id(v, block_of(&pv, copy));
            let color = color_of.get(&cid).copied().unwrap_or("#000000");
            let _ = writeln!(
                out,
                "    \"{}@{}\" [color=\"{}\", tooltip=\"{}\"];",
                esc(v),
                copy + 1,
                color,
                esc(&cid)
            );
        }
        for t in datum.tree.edges() {
            let [a, b] = datum.tree.ends(t)?;
            let pt = datum.rel_of(t);
            let cid = crate::datum::class_id(t, block_of(&pt, copy));
            let dangling = qt.dangling_edges.contains(&cid);
            let color = color_of.get(&cid).copied().unwrap_or("#000000");
            let style = if dangling { "dashed" } else { "solid" };
            let _ = writeln!(
                out,
                "    \"{}@{}\" -- \"{}@{}\" [label=\"{}\", style={}, color=\"{}\"];",
                esc(a),
                copy + 1,
                esc(b),
                copy + 1,
                esc(t),
                style,
                color
            );
        }
        let _ = writeln!(out, "  }}");
    }
    let _ = writeln!(out, "}}");
    Ok(out)
}

/// A shallow well-formedness check used by tests: balanced braces, one graph
/// header, and every edge statement inside the body.
pub fn looks_like_dot(s: &str) -> bool {
    let opens = s.matches('{').count();
    let closes = s.matches('}').count();
    opens == closes && opens >= 1 && (s.starts_with("graph") || s.starts_with("digraph"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::test_fixtures::m1;

    #[test]
    fn m1_renders_to_dot() {
        let dot = datum_to_dot(&m1(), "m1").unwrap();
        assert!(looks_like_dot(&dot));
        assert!(dot.contains("style=dashed"), "dangling edges are dashed");
        assert!(dot.contains("cluster_copy_3"), "three stacked copies");
    }
}
