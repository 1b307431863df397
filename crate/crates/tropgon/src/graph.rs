//! Finite multigraphs with loops, stored as incidence pairs over opaque string ids.
//!
//! All values are immutable after construction; operations return new graphs.
//! Determinism everywhere comes from sorted id order, never from hash order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vids: Vec<String>,
    eids: Vec<String>,
    /// per edge, indices into `vids`; loops repeat the index
    ends: Vec<[usize; 2]>,
}

impl Graph {
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Graph>
    where
        V: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String, String)>,
    {
        let mut vids: Vec<String> = vertices.into_iter().collect();
        vids.sort();
        for w in vids.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateId(w[0].clone()));
            }
        }
        let vindex: BTreeMap<&str, usize> =
            vids.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut named: Vec<(String, String, String)> = edges.into_iter().collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        let mut eids = Vec::with_capacity(named.len());
        let mut ends = Vec::with_capacity(named.len());
        for (id, a, b) in named {
            if eids.last() == Some(&id) {
                return Err(Error::DuplicateId(id));
            }
            let ia = *vindex.get(a.as_str()).ok_or_else(|| Error::UnknownVertex(a.clone()))?;
            let ib = *vindex.get(b.as_str()).ok_or_else(|| Error::UnknownVertex(b.clone()))?;
            eids.push(id);
            ends.push(if ia <= ib { [ia, ib] } else { [ib, ia] });
        }
        Ok(Graph { vids, eids, ends })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vids
    }

    pub fn edges(&self) -> &[String] {
        &self.eids
    }

    pub fn n_vertices(&self) -> usize {
        self.vids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.eids.len()
    }

    pub fn vertex_index(&self, v: &str) -> Result<usize> {
        self.vids
            .binary_search_by(|x| x.as_str().cmp(v))
            .map_err(|_| Error::UnknownVertex(v.to_string()))
    }

    pub fn edge_index(&self, e: &str) -> Result<usize> {
        self.eids
            .binary_search_by(|x| x.as_str().cmp(e))
            .map_err(|_| Error::UnknownEdge(e.to_string()))
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.vertex_index(v).is_ok()
    }

    pub fn has_edge(&self, e: &str) -> bool {
        self.edge_index(e).is_ok()
    }

    /// Endpoint ids of an edge (loop repeats the vertex).
    pub fn ends(&self, e: &str) -> Result<[&str; 2]> {
        let i = self.edge_index(e)?;
        let [a, b] = self.ends[i];
        Ok([&self.vids[a], &self.vids[b]])
    }

    pub fn is_loop(&self, e: &str) -> Result<bool> {
        let i = self.edge_index(e)?;
        Ok(self.ends[i][0] == self.ends[i][1])
    }

    /// Edges incident to `v`, with loops listed once.
    pub fn edges_at(&self, v: &str) -> Result<Vec<&str>> {
        let vi = self.vertex_index(v)?;
        Ok(self
            .eids
            .iter()
            .zip(&self.ends)
            .filter(|(_, ends)| ends[0] == vi || ends[1] == vi)
            .map(|(id, _)| id.as_str())
            .collect())
    }

    /// Valency, with loops counting twice.
    pub fn valency(&self, v: &str) -> Result<usize> {
        let vi = self.vertex_index(v)?;
        Ok(self
            .ends
            .iter()
            .map(|ends| (ends[0] == vi) as usize + (ends[1] == vi) as usize)
            .sum())
    }

    /// The other end of a non-loop edge; for a loop returns the same vertex.
    pub fn other_end<'a>(&'a self, e: &str, v: &str) -> Result<&'a str> {
        let [a, b] = self.ends(e)?;
        if a == v {
            Ok(b)
        } else if b == v {
            Ok(a)
        } else {
            Err(Error::UnknownVertex(format!("{v} is not an end of {e}")))
        }
    }

    /// Connected components as sorted vertex-index sets.
    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vids.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for ends in &self.ends {
            adj[ends[0]].push(ends[1]);
            adj[ends[1]].push(ends[0]);
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n_vertices() <= 1 || self.components().len() == 1
    }

    /// First Betti number |E| - |V| + 1 of a connected graph.
    pub fn genus(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        Ok(self.n_edges() + 1 - self.n_vertices())
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.n_edges() + 1 == self.n_vertices()
    }

    /// Restriction to the given vertex/edge id sets (caller keeps them incidence-closed).
    fn restrict(&self, keep_v: &BTreeSet<usize>, keep_e: &BTreeSet<usize>) -> Graph {
        let vids: Vec<String> = keep_v.iter().map(|&i| self.vids[i].clone()).collect();
        let edges: Vec<(String, String, String)> = keep_e
            .iter()
            .map(|&i| {
                (
                    self.eids[i].clone(),
                    self.vids[self.ends[i][0]].clone(),
                    self.vids[self.ends[i][1]].clone(),
                )
            })
            .collect();
        Graph::new(vids, edges).expect("restriction is well formed")
    }

    /// An edge is dangling when deleting it leaves two components, one a tree.
    pub fn is_dangling_edge(&self, e: &str) -> Result<bool> {
        if !self.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        let ei = self.edge_index(e)?;
        if self.ends[ei][0] == self.ends[ei][1] {
            return Ok(false);
        }
        let keep_e: BTreeSet<usize> = (0..self.n_edges()).filter(|&i| i != ei).collect();
        let keep_v: BTreeSet<usize> = (0..self.n_vertices()).collect();
        let rest = self.restrict(&keep_v, &keep_e);
        let comps = rest.components();
        if comps.len() != 2 {
            return Ok(false);
        }
        for comp in comps {
            let vset: BTreeSet<usize> = comp.into_iter().collect();
            let e_in: usize = (0..rest.n_edges())
                .filter(|&i| vset.contains(&rest.ends[i][0]) && vset.contains(&rest.ends[i][1]))
                .count();
            if e_in + 1 == vset.len() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn is_dangling_vertex(&self, v: &str) -> Result<bool> {
        let incident = self.edges_at(v)?;
        if incident.is_empty() {
            return Ok(true);
        }
        for e in incident {
            if !self.is_dangling_edge(e)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Ids of all dangling edges and vertices, by iterative leaf stripping:
    /// an edge hangs in a pendant tree exactly when repeatedly deleting
    /// monovalent vertices eventually removes it.
    pub fn dangling_elements(&self) -> Result<(BTreeSet<String>, BTreeSet<String>)> {
        if !self.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        if self.genus()? == 0 {
            // every edge of a tree is dangling, and with it every vertex
            let de: BTreeSet<String> = self.eids.iter().cloned().collect();
            let dv: BTreeSet<String> = self
                .vids
                .iter()
                .filter(|v| self.valency(v).unwrap() > 0)
                .cloned()
                .collect();
            return Ok((de, dv));
        }
        let nv = self.n_vertices();
        let mut deg = vec![0usize; nv];
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (i, ends) in self.ends.iter().enumerate() {
            deg[ends[0]] += 1;
            deg[ends[1]] += 1;
            incident[ends[0]].push(i);
            if ends[0] != ends[1] {
                incident[ends[1]].push(i);
            }
        }
        let mut removed_e = vec![false; self.n_edges()];
        let mut removed_v = vec![false; nv];
        let mut stack: Vec<usize> = (0..nv).filter(|&v| deg[v] == 1).collect();
        while let Some(v) = stack.pop() {
            if removed_v[v] || deg[v] != 1 {
                continue;
            }
            removed_v[v] = true;
            for &ei in &incident[v] {
                if removed_e[ei] {
                    continue;
                }
                removed_e[ei] = true;
                let [a, b] = self.ends[ei];
                deg[a] -= 1;
                deg[b] -= 1;
                let other = if a == v { b } else { a };
                if !removed_v[other] && deg[other] == 1 {
                    stack.push(other);
                }
            }
        }
        let de: BTreeSet<String> = self
            .eids
            .iter()
            .enumerate()
            .filter(|(i, _)| removed_e[*i])
            .map(|(_, e)| e.clone())
            .collect();
        let dv: BTreeSet<String> = self
            .vids
            .iter()
            .enumerate()
            .filter(|(i, _)| removed_v[*i] && !incident[*i].is_empty())
            .map(|(_, v)| v.clone())
            .collect();
        Ok((de, dv))
    }

    /// Delete all dangling elements; genus is preserved.
    pub fn delete_dangling(&self) -> Result<Graph> {
        if self.genus()? == 0 {
            return Err(Error::GenusZero("deleting dangling elements of a tree leaves nothing".into()));
        }
        let (de, dv) = self.dangling_elements()?;
        let keep_v: BTreeSet<usize> = self
            .vids
            .iter()
            .enumerate()
            .filter(|(_, v)| !dv.contains(*v))
            .map(|(i, _)| i)
            .collect();
        let keep_e: BTreeSet<usize> = self
            .eids
            .iter()
            .enumerate()
            .filter(|(_, e)| !de.contains(*e))
            .map(|(i, _)| i)
            .collect();
        Ok(self.restrict(&keep_v, &keep_e))
    }

    /// Contract an edge set; loops may not be contracted. Merged vertices take
    /// the lexicographically least member id.
    pub fn contract_edges(&self, s: &BTreeSet<String>) -> Result<Graph> {
        let mut sidx = BTreeSet::new();
        for e in s {
            let i = self.edge_index(e)?;
            if self.ends[i][0] == self.ends[i][1] {
                return Err(Error::LoopContraction(e.clone()));
            }
            sidx.insert(i);
        }
        let mut parent: Vec<usize> = (0..self.n_vertices()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for &i in &sidx {
            let a = find(&mut parent, self.ends[i][0]);
            let b = find(&mut parent, self.ends[i][1]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut class_name: BTreeMap<usize, String> = BTreeMap::new();
        for i in 0..self.n_vertices() {
            let r = find(&mut parent, i);
            let entry = class_name.entry(r).or_insert_with(|| self.vids[i].clone());
            if self.vids[i] < *entry {
                *entry = self.vids[i].clone();
            }
        }
        let vertices: Vec<String> = class_name.values().cloned().collect();
        let mut parent2 = parent.clone();
        let edges: Vec<(String, String, String)> = (0..self.n_edges())
            .filter(|i| !sidx.contains(i))
            .map(|i| {
                let a = find(&mut parent2, self.ends[i][0]);
                let b = find(&mut parent2, self.ends[i][1]);
                (self.eids[i].clone(), class_name[&a].clone(), class_name[&b].clone())
            })
            .collect();
        Graph::new(vertices, edges)
    }

    /// Subdivide edge `e` with a new vertex, replacing it by two edges.
    pub fn subdivide(&self, e: &str, mid: &str, e1: &str, e2: &str) -> Result<Graph> {
        let [a, b] = self.ends(e)?;
        let (a, b) = (a.to_string(), b.to_string());
        let mut vertices: Vec<String> = self.vids.clone();
        vertices.push(mid.to_string());
        let mut edges: Vec<(String, String, String)> = Vec::new();
        for (i, id) in self.eids.iter().enumerate() {
            if id == e {
                continue;
            }
            edges.push((
                id.clone(),
                self.vids[self.ends[i][0]].clone(),
                self.vids[self.ends[i][1]].clone(),
            ));
        }
        edges.push((e1.to_string(), a, mid.to_string()));
        edges.push((e2.to_string(), mid.to_string(), b));
        Graph::new(vertices, edges)
    }

    /// Maximal chains through divalent vertices. Each result is
    /// `(new edge id, end vertices, old edges in chain order)`; the new id is the
    /// lexicographically least old edge id in the chain.
    pub fn divalent_chains(&self) -> Result<Vec<(String, [String; 2], Vec<String>)>> {
        if !self.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        let nv = self.n_vertices();
        let mut deg = vec![0usize; nv];
        // slots[v] = (edge index, other end) with loops listed twice
        let mut slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for (i, ends) in self.ends.iter().enumerate() {
            deg[ends[0]] += 1;
            deg[ends[1]] += 1;
            slots[ends[0]].push((i, ends[1]));
            if ends[0] != ends[1] {
                slots[ends[1]].push((i, ends[0]));
            } else {
                slots[ends[0]].push((i, ends[0]));
            }
        }
        let keep: Vec<bool> = (0..nv).map(|v| deg[v] != 2).collect();
        if !keep.iter().any(|&k| k) {
            return Err(Error::MetricLoop);
        }
        let mut used = vec![false; self.n_edges()];
        let mut out = Vec::new();
        for start in 0..nv {
            if !keep[start] {
                continue;
            }
            for &(e0, mut cur_v) in &slots[start] {
                if used[e0] {
                    continue;
                }
                used[e0] = true;
                let mut chain = vec![e0];
                let mut cur_e = e0;
                while !keep[cur_v] {
                    let (next, next_v) = slots[cur_v]
                        .iter()
                        .copied()
                        .find(|&(ei, _)| ei != cur_e)
                        .ok_or(Error::MetricLoop)?;
                    used[next] = true;
                    chain.push(next);
                    cur_e = next;
                    cur_v = next_v;
                }
                let ids: Vec<String> = chain.iter().map(|&i| self.eids[i].clone()).collect();
                let new_id = ids.iter().min().unwrap().clone();
                out.push((new_id, [self.vids[start].clone(), self.vids[cur_v].clone()], ids));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Suppress all divalent vertices, merging their edge pairs.
    pub fn essential_model(&self) -> Result<Graph> {
        let chains = self.divalent_chains()?;
        let keep: Vec<String> = self
            .vids
            .iter()
            .filter(|v| self.valency(v).unwrap() != 2)
            .cloned()
            .collect();
        let edges: Vec<(String, String, String)> = chains
            .into_iter()
            .map(|(id, [a, b], _)| (id, a, b))
            .collect();
        Graph::new(keep, edges)
    }

    /// Delete dangling elements, then suppress divalent vertices.
    pub fn combinatorial_type(&self) -> Result<Graph> {
        if self.genus()? < 2 {
            return Err(Error::GenusTooSmall(
                "combinatorial type needs genus at least 2".into(),
            ));
        }
        let trimmed = self.delete_dangling()?;
        if trimmed.vids.iter().all(|v| trimmed.valency(v).unwrap() == 2) {
            return Err(Error::MetricLoop);
        }
        trimmed.essential_model()
    }

    /// Minimum valency over all vertices.
    pub fn min_valency(&self) -> usize {
        self.vids
            .iter()
            .map(|v| self.valency(v).unwrap())
            .min()
            .unwrap_or(0)
    }

    pub fn is_trivalent(&self) -> bool {
        self.vids.iter().all(|v| self.valency(v).unwrap() == 3)
    }

    pub fn leaves(&self) -> Vec<&str> {
        self.vids
            .iter()
            .filter(|v| self.valency(v).unwrap() == 1)
            .map(|v| v.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn g(vs: &[&str], es: &[(&str, &str, &str)]) -> Graph {
        Graph::new(
            vs.iter().map(|s| s.to_string()),
            es.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())),
        )
        .unwrap()
    }

    pub fn theta() -> Graph {
        g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")])
    }

    pub fn dumbbell() -> Graph {
        g(&["a", "b"], &[("l1", "a", "a"), ("br", "a", "b"), ("l2", "b", "b")])
    }

    #[test]
    fn genus_basics() {
        assert_eq!(g(&["v"], &[]).genus().unwrap(), 0);
        assert_eq!(theta().genus().unwrap(), 2);
        let loop3 = g(
            &["a", "b", "c", "d", "e", "f"],
            &[
                ("y1", "a", "b"),
                ("y2", "c", "d"),
                ("y3", "e", "f"),
                ("y4", "b", "c"),
                ("y5", "b", "c"),
                ("y6", "d", "e"),
                ("y7", "d", "e"),
                ("y8", "f", "a"),
                ("y9", "f", "a"),
            ],
        );
        assert_eq!(loop3.genus().unwrap(), 4);
        for v in loop3.vertices() {
            assert_eq!(loop3.valency(v).unwrap(), 3);
        }
    }

    #[test]
    fn valency_counts_loops_twice() {
        let d = dumbbell();
        assert_eq!(d.valency("a").unwrap(), 3);
        let iso = g(&["x"], &[]);
        assert_eq!(iso.valency("x").unwrap(), 0);
        let one_loop = g(&["x"], &[("l", "x", "x")]);
        assert_eq!(one_loop.valency("x").unwrap(), 2);
    }

    #[test]
    fn dangling_detection() {
        // cycle with a pendant path of two edges
        let gr = g(
            &["a", "b", "c", "p", "q"],
            &[("c1", "a", "b"), ("c2", "b", "c"), ("c3", "c", "a"), ("d1", "a", "p"), ("d2", "p", "q")],
        );
        assert!(!gr.is_dangling_edge("c1").unwrap());
        assert!(gr.is_dangling_edge("d1").unwrap());
        assert!(gr.is_dangling_edge("d2").unwrap());
        assert!(gr.is_dangling_vertex("p").unwrap());
        assert!(!gr.is_dangling_vertex("a").unwrap());
        let trimmed = gr.delete_dangling().unwrap();
        assert_eq!(trimmed.n_vertices(), 3);
        assert_eq!(trimmed.n_edges(), 3);
        assert_eq!(trimmed.genus().unwrap(), gr.genus().unwrap());
        // idempotent
        assert_eq!(trimmed.delete_dangling().unwrap(), trimmed);
    }

    #[test]
    fn contract_theta_edge() {
        let t = theta();
        let s: BTreeSet<String> = ["e1".to_string()].into_iter().collect();
        let c = t.contract_edges(&s).unwrap();
        assert_eq!(c.n_vertices(), 1);
        assert_eq!(c.n_edges(), 2);
        assert!(c.is_loop("e2").unwrap() && c.is_loop("e3").unwrap());
        // empty contraction is identity
        assert_eq!(t.contract_edges(&BTreeSet::new()).unwrap(), t);
        // loops cannot be contracted
        assert!(matches!(
            c.contract_edges(&["e2".to_string()].into_iter().collect()),
            Err(Error::LoopContraction(_))
        ));
    }

    #[test]
    fn essential_model_suppresses_divalent() {
        let path = g(&["a", "b", "c", "d"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "d")]);
        let m = path.essential_model().unwrap();
        assert_eq!(m.n_edges(), 1);
        assert_eq!(m.n_vertices(), 2);
        let sub = theta().subdivide("e1", "m", "e1a", "e1b").unwrap();
        let m2 = sub.essential_model().unwrap();
        assert!(crate::iso::graph_isomorphism(&m2, &theta()).is_some());
        // pure cycle has no essential model
        let cyc = g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b")]);
        assert!(matches!(cyc.essential_model(), Err(Error::MetricLoop)));
    }

    #[test]
    fn combinatorial_type_dumbbell() {
        let mut gr = dumbbell().subdivide("br", "m", "br1", "br2").unwrap();
        // attach a pendant
        gr = Graph::new(
            gr.vertices().iter().cloned().chain(["p".to_string()]),
            gr.edges()
                .iter()
                .map(|e| {
                    let [a, b] = gr.ends(e).unwrap();
                    (e.clone(), a.to_string(), b.to_string())
                })
                .collect::<Vec<_>>()
                .into_iter()
                .chain([("pd".to_string(), "m".to_string(), "p".to_string())]),
        )
        .unwrap();
        let ct = gr.combinatorial_type().unwrap();
        assert!(crate::iso::graph_isomorphism(&ct, &dumbbell()).is_some());
        let ct2 = dumbbell().combinatorial_type().unwrap();
        assert_eq!(ct2, dumbbell());
    }
}
