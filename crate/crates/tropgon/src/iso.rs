//! Canonical forms and isomorphism for small colored structures.
//!
//! Multigraphs, gluing datums and morphisms are all encoded as colored graphs
//! (nodes with integer colors, undirected edges with multiplicity) and run
//! through one individualize-refine canonicalizer. Instances here are tiny, so
//! exhaustive branching inside a refined cell is acceptable.

use std::collections::BTreeMap;

use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct Structure {
    pub n: usize,
    pub colors: Vec<u64>,
    pub edges: Vec<(usize, usize)>,
}

impl Structure {
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            if a != b {
                adj[b].push(a);
            }
        }
        adj
    }
}

/// Stable partition refinement: colors split by multisets of neighbor colors.
fn refine(colors: &mut Vec<u64>, adj: &[Vec<usize>]) {
    loop {
        let mut sigs: Vec<(u64, Vec<u64>)> = Vec::with_capacity(colors.len());
        for v in 0..colors.len() {
            let mut ns: Vec<u64> = adj[v].iter().map(|&w| colors[w]).collect();
            ns.sort();
            sigs.push((colors[v], ns));
        }
        let mut order: BTreeMap<&(u64, Vec<u64>), u64> = BTreeMap::new();
        for s in &sigs {
            let next = order.len() as u64;
            order.entry(s).or_insert(next);
        }
        // re-index by sorted signature order for stability
        let mut sorted: Vec<&(u64, Vec<u64>)> = order.keys().cloned().collect();
        sorted.sort();
        let rank: BTreeMap<&(u64, Vec<u64>), u64> =
            sorted.into_iter().enumerate().map(|(i, s)| (s, i as u64)).collect();
        let new: Vec<u64> = sigs.iter().map(|s| rank[s]).collect();
        let old_classes = distinct(colors);
        let new_classes = distinct(&new);
        *colors = new;
        if new_classes == old_classes {
            return;
        }
    }
}

fn distinct(colors: &[u64]) -> usize {
    let mut c: Vec<u64> = colors.to_vec();
    c.sort();
    c.dedup();
    c.len()
}

fn encode(s: &Structure, pos: &[usize]) -> Vec<u8> {
    // pos[v] = new index of node v
    let mut colors_by_new: Vec<u64> = vec![0; s.n];
    for v in 0..s.n {
        colors_by_new[pos[v]] = s.colors[v];
    }
    let mut edges: Vec<(usize, usize)> = s
        .edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (pos[a], pos[b]);
            (x.min(y), x.max(y))
        })
        .collect();
    edges.sort();
    let mut out = Vec::with_capacity(8 + 8 * s.n + 16 * edges.len());
    out.extend((s.n as u64).to_be_bytes());
    for c in colors_by_new {
        out.extend(c.to_be_bytes());
    }
    for (a, b) in edges {
        out.extend((a as u64).to_be_bytes());
        out.extend((b as u64).to_be_bytes());
    }
    out
}

fn search(
    s: &Structure,
    adj: &[Vec<usize>],
    colors: Vec<u64>,
    best: &mut Option<(Vec<u8>, Vec<usize>)>,
) {
    // cells keyed by color
    let mut cells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colors.iter().enumerate() {
        cells.entry(c).or_default().push(v);
    }
    let target = cells.iter().find(|(_, m)| m.len() > 1).map(|(c, m)| (*c, m.clone()));
    match target {
        None => {
            // discrete: colors give the total order
            let mut nodes: Vec<usize> = (0..s.n).collect();
            nodes.sort_by_key(|&v| colors[v]);
            let mut pos = vec![0; s.n];
            for (i, &v) in nodes.iter().enumerate() {
                pos[v] = i;
            }
            let enc = encode(s, &pos);
            if best.as_ref().map_or(true, |(b, _)| enc < *b) {
                *best = Some((enc, pos));
            }
        }
        Some((_, members)) => {
            for &v in &members {
                let mut next = colors.clone();
                // individualize v just below its cell
                for w in 0..s.n {
                    if next[w] >= next[v] && w != v {
                        next[w] += 1;
                    }
                }
                refine(&mut next, adj);
                search(s, adj, next, best);
            }
        }
    }
}

/// Canonical relabeling (node -> position) and canonical byte encoding.
pub fn canonical(s: &Structure) -> (Vec<usize>, Vec<u8>) {
    let adj = s.adjacency();
    let mut colors = s.colors.clone();
    refine(&mut colors, &adj);
    let mut best = None;
    search(s, &adj, colors, &mut best);
    let (enc, pos) = best.expect("nonempty search");
    (pos, enc)
}

/// Isomorphism witness between two colored structures, if any.
pub fn isomorphism(s1: &Structure, s2: &Structure) -> Option<Vec<usize>> {
    if s1.n != s2.n || s1.edges.len() != s2.edges.len() {
        return None;
    }
    let (p1, e1) = canonical(s1);
    let (p2, e2) = canonical(s2);
    if e1 != e2 {
        return None;
    }
    // map: node v of s1 -> node w of s2 with p2[w] = p1[v]
    let mut inv2 = vec![0; s2.n];
    for (w, &pos) in p2.iter().enumerate() {
        inv2[pos] = w;
    }
    Some(p1.iter().map(|&pos| inv2[pos]).collect())
}

const COLOR_VERTEX: u64 = 1;
const COLOR_EDGE: u64 = 2;
const COLOR_LOOP: u64 = 3;

/// Encode a multigraph: one node per vertex, one per edge; loops colored apart.
fn graph_structure(g: &Graph) -> Structure {
    let nv = g.n_vertices();
    let ne = g.n_edges();
    let mut colors = vec![COLOR_VERTEX; nv];
    let mut edges = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let is_loop = g.is_loop(e).unwrap();
        colors.push(if is_loop { COLOR_LOOP } else { COLOR_EDGE });
        let [a, b] = g.ends(e).unwrap();
        let ai = g.vertex_index(a).unwrap();
        edges.push((nv + i, ai));
        if !is_loop {
            let bi = g.vertex_index(b).unwrap();
            edges.push((nv + i, bi));
        }
    }
    Structure { n: nv + ne, colors, edges }
}

pub fn graph_canonical_key(g: &Graph) -> Vec<u8> {
    canonical(&graph_structure(g)).1
}

/// Vertex and edge bijections realizing an isomorphism, or None.
pub fn graph_isomorphism(
    g1: &Graph,
    g2: &Graph,
) -> Option<(BTreeMap<String, String>, BTreeMap<String, String>)> {
    if g1.n_vertices() != g2.n_vertices() || g1.n_edges() != g2.n_edges() {
        return None;
    }
    let map = isomorphism(&graph_structure(g1), &graph_structure(g2))?;
    let nv = g1.n_vertices();
    let vmap: BTreeMap<String, String> = (0..nv)
        .map(|i| (g1.vertices()[i].clone(), g2.vertices()[map[i]].clone()))
        .collect();
    let emap: BTreeMap<String, String> = (0..g1.n_edges())
        .map(|i| (g1.edges()[i].clone(), g2.edges()[map[nv + i] - nv].clone()))
        .collect();
    Some((vmap, emap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn g(vs: &[&str], es: &[(&str, &str, &str)]) -> Graph {
        Graph::new(
            vs.iter().map(|s| s.to_string()),
            es.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn self_isomorphism_is_found() {
        let t = g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")]);
        let (vmap, emap) = graph_isomorphism(&t, &t).unwrap();
        // a valid bijection preserving incidence
        for e in t.edges() {
            let [x, y] = t.ends(e).unwrap();
            let [x2, y2] = t.ends(&emap[e]).unwrap();
            let ix = vmap[x].clone();
            let iy = vmap[y].clone();
            assert!(
                (ix == x2 && iy == y2) || (ix == y2 && iy == x2),
                "incidence must be preserved"
            );
        }
    }

    #[test]
    fn theta_vs_dumbbell() {
        let theta = g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")]);
        let dumb = g(&["a", "b"], &[("l1", "a", "a"), ("br", "a", "b"), ("l2", "b", "b")]);
        assert!(graph_isomorphism(&theta, &dumb).is_none());
    }

    #[test]
    fn relabelled_graphs_match() {
        let g1 = g(
            &["a", "b", "c"],
            &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a"), ("e4", "a", "b")],
        );
        let g2 = g(
            &["x", "y", "z"],
            &[("f1", "z", "y"), ("f2", "x", "z"), ("f3", "y", "x"), ("f4", "y", "z")],
        );
        let (vmap, emap) = graph_isomorphism(&g1, &g2).unwrap();
        for e in g1.edges() {
            let [x, y] = g1.ends(e).unwrap();
            let [x2, y2] = g2.ends(&emap[e]).unwrap();
            let (ix, iy) = (vmap[x].clone(), vmap[y].clone());
            assert!((ix == x2 && iy == y2) || (ix == y2 && iy == x2));
        }
        assert_eq!(graph_canonical_key(&g1), graph_canonical_key(&g2));
    }

    /// brute-force isomorphism over all vertex bijections, for cross-checking
    pub fn brute_force_isomorphic(g1: &Graph, g2: &Graph) -> bool {
        if g1.n_vertices() != g2.n_vertices() || g1.n_edges() != g2.n_edges() {
            return false;
        }
        let n = g1.n_vertices();
        let mut perm: Vec<usize> = (0..n).collect();
        fn heaps(k: usize, perm: &mut Vec<usize>, g1: &Graph, g2: &Graph, found: &mut bool) {
            if *found {
                return;
            }
            if k == 1 {
                // multiset of vertex-index pairs must match
                let pairs = |g: &Graph, id: &dyn Fn(usize) -> usize| {
                    let mut v: Vec<(usize, usize)> = g
                        .edges()
                        .iter()
                        .map(|e| {
                            let [a, b] = g.ends(e).unwrap();
                            let (x, y) = (id(g.vertex_index(a).unwrap()), id(g.vertex_index(b).unwrap()));
                            (x.min(y), x.max(y))
                        })
                        .collect();
                    v.sort();
                    v
                };
                let p = perm.clone();
                if pairs(g1, &|i| p[i]) == pairs(g2, &|i| i) {
                    *found = true;
                }
                return;
            }
            for i in 0..k {
                heaps(k - 1, perm, g1, g2, found);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        let mut found = false;
        heaps(n, &mut perm, g1, g2, &mut found);
        found
    }

    #[test]
    fn agrees_with_brute_force_on_small_graphs() {
        // a pile of small graphs, pairwise compared both ways
        let zoo = vec![
            g(&["a"], &[]),
            g(&["a"], &[("l", "a", "a")]),
            g(&["a", "b"], &[("e", "a", "b")]),
            g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b")]),
            g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")]),
            g(&["a", "b"], &[("l1", "a", "a"), ("br", "a", "b"), ("l2", "b", "b")]),
            g(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a")]),
            g(&["x", "y", "z"], &[("f1", "x", "y"), ("f2", "y", "z"), ("f3", "z", "x")]),
            g(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a"), ("e4", "a", "b")]),
            g(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a"), ("e4", "b", "c")]),
            g(&["a", "b", "c", "d"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "d"), ("e4", "d", "a")]),
            g(&["a", "b", "c", "d"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "d"), ("e4", "d", "a"), ("e5", "a", "c")]),
        ];
        for (i, a) in zoo.iter().enumerate() {
            for (j, b) in zoo.iter().enumerate() {
                let fast = graph_isomorphism(a, b).is_some();
                let brute = brute_force_isomorphic(a, b);
                assert_eq!(fast, brute, "mismatch on zoo[{i}] vs zoo[{j}]");
            }
        }
    }
}
