//! Exhaustive enumeration of free trees and of gluing datums over a tree,
//! one representative per isomorphism class. Used both as the search engine
//! for initial datums and as the oracle for property tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::datum::GluingDatum;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::iso::graph_canonical_key;
use crate::util::{coarsenings, refinements, Partition};

/// All free trees with `n_edges` edges up to isomorphism, optionally capped at
/// a maximum valency. Vertices are `v1..`, edges `t1..`.
pub fn free_trees(n_edges: usize, max_valency: Option<usize>) -> Vec<Graph> {
    let single = Graph::new(vec!["v1".to_string()], Vec::new()).unwrap();
    let mut level = vec![single];
    for k in 0..n_edges {
        let mut next: Vec<Graph> = Vec::new();
        let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
        for t in &level {
            for v in t.vertices() {
                if let Some(cap) = max_valency {
                    if t.valency(v).unwrap() + 1 > cap {
                        continue;
                    }
                }
                let new_v = format!("v{}", k + 2);
                let new_e = format!("t{}", k + 1);
                let grown = Graph::new(
                    t.vertices().iter().cloned().chain([new_v.clone()]),
                    t.edges()
                        .iter()
                        .map(|e| {
                            let [a, b] = t.ends(e).unwrap();
                            (e.clone(), a.to_string(), b.to_string())
                        })
                        .chain([(new_e.clone(), v.clone(), new_v.clone())])
                        .collect::<Vec<_>>(),
                )
                .unwrap();
                let key = graph_canonical_key(&grown);
                if seen.insert(key) {
                    next.push(grown);
                }
            }
        }
        // leaf count also caps valency-1 leaves; with max_valency they may die out
        level = next;
    }
    level.sort_by_key(graph_canonical_key);
    level
}

#[derive(Debug, Clone, Default)]
pub struct EnumerateOptions {
    /// prune to change-minimal datums (ch + val = 3 at every closed vertex)
    pub change_minimal: bool,
    /// lift the tractability guard on degree and tree size
    pub override_guard: bool,
    /// final quotient genus filter
    pub target_genus: Option<usize>,
    /// stop after this many matches
    pub stop_after: Option<usize>,
}

struct Search<'a> {
    tree: &'a Graph,
    degree: usize,
    order: Vec<(bool, String)>, // (is_edge, id) in assignment order
    parent_edge: BTreeMap<String, String>,
    incident: BTreeMap<String, Vec<String>>,
    opts: &'a EnumerateOptions,
    rel: BTreeMap<String, Partition>,
    out: Vec<GluingDatum>,
    seen: BTreeSet<Vec<u8>>,
    filter: Box<dyn Fn(&GluingDatum, &crate::datum::Quotient) -> bool + 'a>,
}

impl<'a> Search<'a> {
    /// Interval pruning at a vertex whose relation is assigned: each
    /// unassigned incident edge splits a class into between 1 and |A| blocks,
    /// so both the RH condition and (optionally) change-minimality confine the
    /// achievable change to an interval.
    fn vertex_bounds_ok(&self, v: &str) -> bool {
        let pv = match self.rel.get(v) {
            Some(p) => p,
            None => return true,
        };
        let incident = &self.incident[v];
        let l = incident.len() as i64;
        let mut lo = 0i64;
        let mut hi = 0i64;
        for &a in pv {
            let card = a.count_ones() as i64;
            let mut k_known = 0i64;
            let mut unassigned = 0i64;
            for t in incident {
                match self.rel.get(t) {
                    Some(pt) => k_known += pt.iter().filter(|&&b| b & a != 0).count() as i64,
                    None => unassigned += 1,
                }
            }
            let r_lo = (k_known + unassigned) - 2 - card * (l - 2);
            let r_hi = (k_known + unassigned * card) - 2 - card * (l - 2);
            if r_hi < 0 {
                return false; // the RH axiom cannot be met any more
            }
            lo += r_lo.max(0);
            hi += r_hi;
        }
        if lo > hi {
            return false; // some class is forced below r = 0
        }
        if self.opts.change_minimal {
            let target = 3 - l;
            return lo <= target && target <= hi;
        }
        true
    }

    /// Interval pruning on the quotient genus.
    fn genus_bounds_ok(&self) -> bool {
        let gt = match self.opts.target_genus {
            Some(g) => g as i64,
            None => return true,
        };
        let mut lo = 1i64;
        let mut hi = 1i64;
        let d = self.degree as i64;
        for (is_edge, id) in &self.order {
            match self.rel.get(id) {
                Some(p) => {
                    let c = p.len() as i64;
                    if *is_edge {
                        lo += c;
                        hi += c;
                    } else {
                        lo -= c;
                        hi -= c;
                    }
                }
                None => {
                    if *is_edge {
                        lo += 1;
                        hi += d;
                    } else {
                        lo -= d;
                        hi -= 1;
                    }
                }
            }
        }
        lo <= gt && gt <= hi
    }

    fn assign(&mut self, pos: usize, stab: &[Vec<usize>]) {
        if let Some(cap) = self.opts.stop_after {
            if self.out.len() >= cap {
                return;
            }
        }
        if pos == self.order.len() {
            // refinement and RH hold by construction; connectivity and the
            // genus filter come from the quotient, built once
            let datum = GluingDatum::new(self.tree.clone(), self.degree, self.rel.clone());
            let qt = match datum.quotient_unchecked() {
                Ok(q) => q,
                Err(_) => return,
            };
            if let Some(g) = self.opts.target_genus {
                if qt.graph.genus().ok() != Some(g) {
                    return;
                }
            }
            if !(self.filter)(&datum, &qt) {
                return;
            }
            if let Ok(key) = datum.canonical_key() {
                if self.seen.insert(key) {
                    self.out.push(datum);
                }
            }
            return;
        }
        let (is_edge, id) = self.order[pos].clone();
        let candidates: Vec<Partition> = if is_edge {
            // refine the already-assigned end(s)
            let [a, b] = self.tree.ends(&id).unwrap();
            let assigned: Vec<&Partition> =
                [a, b].iter().filter_map(|v| self.rel.get(*v)).collect();
            match assigned.len() {
                0 => crate::util::all_partitions(self.degree),
                _ => {
                    let base = refinements(assigned[0]);
                    base.into_iter()
                        .filter(|p| assigned.iter().all(|q| crate::util::refines(p, q)))
                        .collect()
                }
            }
        } else {
            match self.parent_edge.get(&id) {
                None => crate::util::all_partitions(self.degree),
                Some(pe) => coarsenings(&self.rel[pe], self.degree),
            }
        };
        for p in candidates {
            // break the global copy-relabelling symmetry: only keep
            // assignments minimal under the remaining stabilizer
            if stab.len() > 1 {
                let key = crate::util::partition_sort_key(&p);
                let minimal = stab.iter().all(|s| {
                    crate::util::partition_sort_key(&crate::util::perm_partition(&p, s)) >= key
                });
                if !minimal {
                    continue;
                }
            }
            let next_stab: Vec<Vec<usize>> = stab
                .iter()
                .filter(|s| crate::util::perm_partition(&p, s) == p)
                .cloned()
                .collect();
            self.rel.insert(id.clone(), p);
            let ok = if is_edge {
                let [a, b] = self.tree.ends(&id).unwrap();
                let (a, b) = (a.to_string(), b.to_string());
                self.vertex_bounds_ok(&a) && self.vertex_bounds_ok(&b) && self.genus_bounds_ok()
            } else {
                self.vertex_bounds_ok(&id) && self.genus_bounds_ok()
            };
            if ok {
                self.assign(pos + 1, &next_stab);
            }
        }
        self.rel.remove(&id);
    }
}

/// Enumerate valid gluing datums over `tree` with the given degree, one per
/// isomorphism class, filtered by `filter`.
pub fn enumerate_datums<'a, F>(
    tree: &Graph,
    degree: usize,
    opts: &EnumerateOptions,
    filter: F,
) -> Result<Vec<GluingDatum>>
where
    F: Fn(&GluingDatum, &crate::datum::Quotient) -> bool + 'a,
{
    if !tree.is_tree() {
        return Err(Error::TargetNotTree);
    }
    if !opts.override_guard && (degree > 4 || tree.n_edges() > 9) {
        return Err(Error::SearchSpaceTooLarge(format!(
            "degree {degree} over {} edges; pass override to proceed",
            tree.n_edges()
        )));
    }
    // BFS order from the least leaf, alternating vertex then its edges
    let start = tree
        .leaves()
        .iter()
        .min()
        .map(|s| s.to_string())
        .unwrap_or_else(|| tree.vertices()[0].clone());
    let mut order: Vec<(bool, String)> = vec![(false, start.clone())];
    let mut parent_edge = BTreeMap::new();
    let mut seen_v: BTreeSet<String> = [start.clone()].into_iter().collect();
    let mut seen_e: BTreeSet<String> = BTreeSet::new();
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for e in tree.edges_at(&v)? {
            if seen_e.insert(e.to_string()) {
                order.push((true, e.to_string()));
                let w = tree.other_end(e, &v)?.to_string();
                if seen_v.insert(w.clone()) {
                    parent_edge.insert(w.clone(), e.to_string());
                    order.push((false, w.clone()));
                    queue.push_back(w);
                }
            }
        }
    }
    let incident: BTreeMap<String, Vec<String>> = tree
        .vertices()
        .iter()
        .map(|v| {
            (
                v.clone(),
                tree.edges_at(v).unwrap().into_iter().map(|s| s.to_string()).collect(),
            )
        })
        .collect();
    let mut search = Search {
        tree,
        degree,
        order,
        parent_edge,
        incident,
        opts,
        rel: BTreeMap::new(),
        out: Vec::new(),
        seen: BTreeSet::new(),
        filter: Box::new(filter),
    };
    let stab = crate::util::all_perms(degree);
    search.assign(0, &stab);
    let mut out = search.out;
    out.sort_by_cached_key(|d| d.canonical_key().unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts_match_oeis() {
        // numbers of free trees with n edges: 1, 1, 1, 2, 3, 6, 11
        assert_eq!(free_trees(0, None).len(), 1);
        assert_eq!(free_trees(1, None).len(), 1);
        assert_eq!(free_trees(2, None).len(), 1);
        assert_eq!(free_trees(3, None).len(), 2);
        assert_eq!(free_trees(4, None).len(), 3);
        assert_eq!(free_trees(5, None).len(), 6);
        assert_eq!(free_trees(6, None).len(), 11);
        // max-valency 3 kills the 4-star
        assert_eq!(free_trees(4, Some(3)).len(), 2);
    }

    #[test]
    fn degree_one_gives_only_the_trivial_datum() {
        for tree in free_trees(3, None) {
            let out =
                enumerate_datums(&tree, 1, &EnumerateOptions::default(), |_, _| true).unwrap();
            assert_eq!(out.len(), 1);
            assert!(out[0].rel.is_empty());
        }
    }

    #[test]
    fn degree_two_over_three_edge_trees_contains_theta_and_dumbbell() {
        let mut found_theta = false;
        let mut found_dumbbell = false;
        let theta = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")],
        );
        let dumbbell = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("l1", "a", "a"), ("br", "a", "b"), ("l2", "b", "b")],
        );
        for tree in free_trees(3, None) {
            let opts = EnumerateOptions { target_genus: Some(2), ..Default::default() };
            for d in enumerate_datums(&tree, 2, &opts, |_, _| true).unwrap() {
                let qt = d.quotient().unwrap();
                if let Ok(h) = qt.skeleton() {
                    if crate::iso::graph_isomorphism(h, &theta).is_some() {
                        found_theta = true;
                    }
                    if crate::iso::graph_isomorphism(h, &dumbbell).is_some() {
                        found_dumbbell = true;
                    }
                }
            }
        }
        assert!(found_theta, "a theta-skeleton datum must exist");
        assert!(found_dumbbell, "a dumbbell-skeleton datum must exist");
    }

    #[test]
    fn guard_fires_without_override() {
        let tree = free_trees(4, None).pop().unwrap();
        assert!(matches!(
            enumerate_datums(&tree, 5, &EnumerateOptions::default(), |_, _| true),
            Err(Error::SearchSpaceTooLarge(_))
        ));
    }
}
