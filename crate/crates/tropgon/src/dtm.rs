//! Discrete tropical morphisms: loopless graph morphisms with an index map
//! satisfying balancing and the Riemann-Hurwitz condition.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::util::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtm {
    pub source: Graph,
    pub target: Graph,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
    /// index of every source vertex and edge; >= 1 everywhere (no contracted edges)
    pub index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct DtmReport {
    pub morphism_failures: Vec<String>,
    pub nondegeneracy_failures: Vec<String>,
    pub balancing_failures: Vec<String>,
    pub rh_failures: Vec<String>,
}

impl DtmReport {
    pub fn is_valid(&self) -> bool {
        self.morphism_failures.is_empty()
            && self.nondegeneracy_failures.is_empty()
            && self.balancing_failures.is_empty()
            && self.rh_failures.is_empty()
    }
}

/// A tropical morphism: a model plus target edge lengths; source lengths are
/// always derived as `l(phi(e)) / m(e)`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub model: Dtm,
    pub target_lengths: BTreeMap<String, Q>,
    pub source_lengths: BTreeMap<String, Q>,
}

impl Dtm {
    pub fn identity(g: &Graph) -> Dtm {
        let vertex_map = g.vertices().iter().map(|v| (v.clone(), v.clone())).collect();
        let edge_map = g.edges().iter().map(|e| (e.clone(), e.clone())).collect();
        let index = g
            .vertices()
            .iter()
            .chain(g.edges().iter())
            .map(|x| (x.clone(), 1))
            .collect();
        Dtm { source: g.clone(), target: g.clone(), vertex_map, edge_map, index }
    }

    pub fn check(&self) -> Result<DtmReport> {
        let mut rep = DtmReport::default();
        for g in [&self.source, &self.target] {
            for e in g.edges() {
                if g.is_loop(e)? {
                    rep.morphism_failures.push(format!("loop {e} not allowed"));
                }
            }
        }
        for v in self.source.vertices() {
            match self.vertex_map.get(v) {
                None => rep.morphism_failures.push(format!("vertex {v} unmapped")),
                Some(img) => {
                    if !self.target.has_vertex(img) {
                        rep.morphism_failures.push(format!("vertex {v} maps to unknown {img}"));
                    }
                }
            }
        }
        for e in self.source.edges() {
            match self.edge_map.get(e) {
                None => rep.morphism_failures.push(format!("edge {e} unmapped")),
                Some(img) => {
                    if !self.target.has_edge(img) {
                        rep.morphism_failures.push(format!("edge {e} maps to unknown {img}"));
                        continue;
                    }
                    let [a, b] = self.source.ends(e)?;
                    let mut want: Vec<&str> = self.target.ends(img)?.to_vec();
                    let mut got = vec![self.vertex_map[a].as_str(), self.vertex_map[b].as_str()];
                    want.sort();
                    got.sort();
                    if want != got {
                        rep.morphism_failures.push(format!("ends of {e} do not map to ends of {img}"));
                    }
                }
            }
        }
        if !rep.morphism_failures.is_empty() {
            return Ok(rep);
        }
        for x in self.source.vertices().iter().chain(self.source.edges().iter()) {
            if self.index.get(x).copied().unwrap_or(0) < 1 {
                rep.nondegeneracy_failures.push(format!("index of {x} is not >= 1"));
            }
        }
        if !rep.nondegeneracy_failures.is_empty() {
            return Ok(rep);
        }
        // balancing: m(A) = sum of m(e) over e in E(A) with phi(e) = e', per e'
        for a in self.source.vertices() {
            let img = &self.vertex_map[a];
            for eprime in self.target.edges_at(img)? {
                let mut s = 0usize;
                for e in self.source.edges_at(a)? {
                    if self.edge_map[e] == eprime {
                        s += self.index[e];
                    }
                }
                if s != self.index[a] {
                    rep.balancing_failures.push(format!("({a}, {eprime})"));
                }
            }
        }
        for a in self.source.vertices() {
            if self.r_phi_defining(a)? < 0 {
                rep.rh_failures.push(a.clone());
            }
        }
        Ok(rep)
    }

    /// r_phi by the defining formula `(val A - 2) - (val phi(A) - 2) m(A)`.
    fn r_phi_defining(&self, a: &str) -> Result<i64> {
        let va = self.source.valency(a)? as i64;
        let vb = self.target.valency(&self.vertex_map[a])? as i64;
        Ok((va - 2) - (vb - 2) * self.index[a] as i64)
    }

    /// r_phi, computed by both formulas and cross-asserted.
    pub fn r_phi(&self, a: &str) -> Result<i64> {
        let defining = self.r_phi_defining(a)?;
        let mut alt = 2 * (self.index[a] as i64 - 1);
        for e in self.source.edges_at(a)? {
            alt -= self.index[e] as i64 - 1;
        }
        assert_eq!(defining, alt, "the two r_phi formulas must agree at {a}");
        Ok(defining)
    }

    /// Fibre index-sum over any target vertex; asserted constant.
    pub fn degree(&self) -> Result<usize> {
        let mut per: BTreeMap<&str, usize> =
            self.target.vertices().iter().map(|v| (v.as_str(), 0)).collect();
        for (v, img) in &self.vertex_map {
            *per.get_mut(img.as_str()).unwrap() += self.index[v];
        }
        let mut values: Vec<usize> = per.values().copied().collect();
        values.dedup();
        if values.len() != 1 {
            return Err(Error::InconsistentDegree(format!("{per:?}")));
        }
        Ok(values[0])
    }

    pub fn riemann_hurwitz_check(&self) -> Result<bool> {
        let g = self.source.genus()? as i64;
        let gp = self.target.genus()? as i64;
        let d = self.degree()? as i64;
        let mut ram = 0i64;
        for a in self.source.vertices() {
            ram += self.r_phi(a)?;
        }
        Ok(2 * g - 2 == d * (2 * gp - 2) + ram)
    }

    /// Change at a target vertex: total ramification over its fibre.
    pub fn change(&self, v: &str) -> Result<i64> {
        let mut s = 0;
        for a in self.source.vertices() {
            if self.vertex_map[a] == v {
                s += self.r_phi(a)?;
            }
        }
        Ok(s)
    }

    /// Both sides of `|E(G')| + sum_v (ch v + val v - 3) = 2g - g'(2d-3) + 2d - 5`.
    pub fn dimension_formula(&self) -> Result<(i64, i64)> {
        let mut lhs = self.target.n_edges() as i64;
        for v in self.target.vertices() {
            lhs += self.change(v)? + self.target.valency(v)? as i64 - 3;
        }
        let g = self.source.genus()? as i64;
        let gp = self.target.genus()? as i64;
        let d = self.degree()? as i64;
        let rhs = 2 * g - gp * (2 * d - 3) + 2 * d - 5;
        assert_eq!(lhs, rhs, "dimension formula must hold for valid morphisms");
        Ok((lhs, rhs))
    }

    /// Total change `sum_v ch(v) = 2g - 2g'd + 2d - 2`.
    pub fn total_change(&self) -> Result<i64> {
        let mut s = 0;
        for v in self.target.vertices() {
            s += self.change(v)?;
        }
        Ok(s)
    }

    /// Attach target lengths; source lengths are `l(phi(e)) / m(e)`.
    pub fn tropicalize(&self, target_lengths: &BTreeMap<String, Q>) -> Result<Realization> {
        if !self.target.is_tree() {
            return Err(Error::TargetNotTree);
        }
        for e in self.target.edges() {
            let l = target_lengths
                .get(e)
                .ok_or_else(|| Error::NonPositiveLength(e.clone()))?;
            if *l <= Q::zero() {
                return Err(Error::NonPositiveLength(e.clone()));
            }
        }
        let source_lengths = self
            .source
            .edges()
            .iter()
            .map(|e| {
                let img = &self.edge_map[e];
                let l = &target_lengths[img];
                (e.clone(), l / Q::from(num_bigint::BigInt::from(self.index[e] as i64)))
            })
            .collect();
        Ok(Realization {
            model: self.clone(),
            target_lengths: target_lengths.clone(),
            source_lengths,
        })
    }

    /// Delete target edges whose fibres are entirely dangling, keep the unique
    /// positive-genus source component, and restrict the morphism.
    pub fn delete_dangling_fibres(&self) -> Result<Dtm> {
        if self.source.genus()? < 2 {
            return Err(Error::GenusTooSmall("need source genus >= 2".into()));
        }
        let (dangling_src, _) = self.source.dangling_elements()?;
        let mut dangling_targets: BTreeSet<String> = BTreeSet::new();
        for t in self.target.edges() {
            let all_dangling = self
                .edge_map
                .iter()
                .filter(|(_, img)| img.as_str() == t.as_str())
                .all(|(e, _)| dangling_src.contains(e));
            if all_dangling {
                dangling_targets.insert(t.clone());
            }
        }
        if dangling_targets.is_empty() {
            return Ok(self.clone());
        }
        // target subgraph induced by the surviving edges
        let kept_edges: Vec<String> = self
            .target
            .edges()
            .iter()
            .filter(|t| !dangling_targets.contains(*t))
            .cloned()
            .collect();
        let kept_tv: BTreeSet<String> = kept_edges
            .iter()
            .flat_map(|t| {
                let [a, b] = self.target.ends(t).unwrap();
                [a.to_string(), b.to_string()]
            })
            .collect();
        // source: drop everything above deleted target edges, then keep the
        // positive-genus component
        let kept_se: Vec<String> = self
            .source
            .edges()
            .iter()
            .filter(|e| !dangling_targets.contains(&self.edge_map[*e]))
            .cloned()
            .collect();
        let kept_sv: BTreeSet<String> = self
            .source
            .vertices()
            .iter()
            .filter(|v| kept_tv.contains(&self.vertex_map[*v]))
            .cloned()
            .collect();
        let sub = Graph::new(
            kept_sv.iter().cloned(),
            kept_se
                .iter()
                .map(|e| {
                    let [a, b] = self.source.ends(e).unwrap();
                    (e.clone(), a.to_string(), b.to_string())
                })
                .collect::<Vec<_>>(),
        )?;
        // component with positive genus
        let mut comp_graph = None;
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for start in sub.vertices() {
            if seen.contains(start) {
                continue;
            }
            let mut comp: BTreeSet<String> = BTreeSet::new();
            let mut stack = vec![start.clone()];
            while let Some(v) = stack.pop() {
                if !comp.insert(v.clone()) {
                    continue;
                }
                for e in sub.edges_at(&v)? {
                    stack.push(sub.other_end(e, &v)?.to_string());
                }
            }
            seen.extend(comp.iter().cloned());
            let es: Vec<(String, String, String)> = sub
                .edges()
                .iter()
                .filter(|e| {
                    let [a, _] = sub.ends(e).unwrap();
                    comp.contains(a)
                })
                .map(|e| {
                    let [a, b] = sub.ends(e).unwrap();
                    (e.clone(), a.to_string(), b.to_string())
                })
                .collect();
            let cg = Graph::new(comp.iter().cloned(), es)?;
            if cg.genus().unwrap_or(0) >= 1 {
                comp_graph = Some(cg);
                break;
            }
        }
        let cg =
            comp_graph.ok_or_else(|| Error::GenusTooSmall("no positive-genus component".into()))?;
        // restrict target to the image component containing the image
        let new_target = Graph::new(
            kept_tv.iter().cloned(),
            kept_edges
                .iter()
                .map(|t| {
                    let [a, b] = self.target.ends(t).unwrap();
                    (t.clone(), a.to_string(), b.to_string())
                })
                .collect::<Vec<_>>(),
        )?;
        // the image of cg is one component of new_target
        let img_v: BTreeSet<String> =
            cg.vertices().iter().map(|v| self.vertex_map[v].clone()).collect();
        let timg_edges: Vec<(String, String, String)> = new_target
            .edges()
            .iter()
            .filter(|t| {
                let [a, _] = new_target.ends(t).unwrap();
                img_v.contains(a)
            })
            .map(|t| {
                let [a, b] = new_target.ends(t).unwrap();
                (t.clone(), a.to_string(), b.to_string())
            })
            .collect();
        let timg = Graph::new(img_v.iter().cloned(), timg_edges)?;
        let vertex_map = cg
            .vertices()
            .iter()
            .map(|v| (v.clone(), self.vertex_map[v].clone()))
            .collect();
        let edge_map = cg
            .edges()
            .iter()
            .map(|e| (e.clone(), self.edge_map[e].clone()))
            .collect();
        let index = cg
            .vertices()
            .iter()
            .chain(cg.edges().iter())
            .map(|x| (x.clone(), self.index[x]))
            .collect();
        Ok(Dtm { source: cg, target: timg, vertex_map, edge_map, index })
    }

    /// No dangling fibres and change >= 1 at every divalent target vertex;
    /// also asserts `ch(v) + val(v) >= 3` everywhere.
    pub fn is_combinatorial_type(&self) -> Result<bool> {
        let trimmed = self.delete_dangling_fibres()?;
        if trimmed.target.n_edges() != self.target.n_edges() {
            return Ok(false);
        }
        let mut ok = true;
        for v in self.target.vertices() {
            let val = self.target.valency(v)?;
            let ch = self.change(v)?;
            if val == 2 && ch < 1 {
                ok = false;
            }
            if ok {
                assert!(
                    ch + val as i64 >= 3,
                    "combinatorial types satisfy ch + val >= 3 at {v}"
                );
            }
        }
        Ok(ok)
    }
}

impl Realization {
    /// Count fibre points with multiplicity over a target vertex or over the
    /// interior of a target edge; both equal the degree.
    pub fn fibre_count_vertex(&self, v: &str) -> usize {
        self.model
            .vertex_map
            .iter()
            .filter(|(_, img)| img.as_str() == v)
            .map(|(a, _)| self.model.index[a])
            .sum()
    }

    pub fn fibre_count_edge_interior(&self, t: &str) -> usize {
        self.model
            .edge_map
            .iter()
            .filter(|(_, img)| img.as_str() == t)
            .map(|(e, _)| self.model.index[e])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::util::{parse_q, qi};

    fn g(vs: &[&str], es: &[(&str, &str, &str)]) -> Graph {
        Graph::new(
            vs.iter().map(|s| s.to_string()),
            es.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())),
        )
        .unwrap()
    }

    fn theta() -> Graph {
        g(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")])
    }

    #[test]
    fn identity_is_valid_and_degree_one() {
        let id = Dtm::identity(&theta());
        assert!(id.check().unwrap().is_valid());
        assert_eq!(id.degree().unwrap(), 1);
        assert!(id.riemann_hurwitz_check().unwrap());
        for v in id.target.vertices() {
            assert_eq!(id.change(v).unwrap(), 0);
        }
        let (lhs, rhs) = id.dimension_formula().unwrap();
        assert_eq!(lhs, rhs);
        assert!(id.is_combinatorial_type().unwrap());
    }

    #[test]
    fn balancing_breaks_with_one_raised_index() {
        let mut phi = Dtm::identity(&theta());
        phi.index.insert("e1".to_string(), 2);
        let rep = phi.check().unwrap();
        assert!(!rep.is_valid());
        assert!(!rep.balancing_failures.is_empty());
    }

    #[test]
    fn tropicalize_divides_by_index() {
        // two-vertex tree, double cover with an index-2 edge
        let target = g(&["u", "v"], &[("t", "u", "v")]);
        let source = g(&["a1", "b1"], &[("e", "a1", "b1")]);
        let phi = Dtm {
            source,
            target,
            vertex_map: [("a1", "u"), ("b1", "v")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            edge_map: [("e", "t")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            index: [("a1", 2), ("b1", 2), ("e", 2)]
                .iter()
                .map(|(a, b)| (a.to_string(), *b))
                .collect(),
        };
        assert!(phi.check().unwrap().is_valid());
        let lengths = [("t".to_string(), qi(3))].into_iter().collect();
        let r = phi.tropicalize(&lengths).unwrap();
        assert_eq!(r.source_lengths["e"], parse_q("3/2").unwrap());
        assert!(phi.tropicalize(&[("t".to_string(), qi(0))].into_iter().collect()).is_err());
    }
}
