//! The deformation engine: find an initial full-dimensional datum for a
//! trivalent even-genus type by pruned search, then walk a straight segment
//! towards the target lengths, switching datums at each limit by regrowing
//! with the opposite determinant sign. Odd genus reduces to even genus by
//! attaching a loop via a bridge and deleting its fibre afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use num_traits::{Signed, Zero};
use once_cell::sync::Lazy;
use rand::Rng;

use crate::datum::{GluingDatum, Labelling};
use crate::dtm::Realization;
use crate::elmap::{self, QMatrix};
use crate::enumerate::{enumerate_datums, free_trees, EnumerateOptions};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::iso::graph_canonical_key;
use crate::limits::limit_at;
use crate::metric::{isometric, MetricGraph, ModuliPoint};
use crate::regrow::{regrow, verify_balancing};
use crate::util::{format_q, sign, Q};

#[derive(Debug, Clone)]
pub struct WalkOptions {
    pub seed: u64,
    pub max_steps: usize,
    /// initial-datum search is guarded to this genus
    pub max_genus: usize,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions { seed: 0, max_steps: 256, max_genus: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct LimitEvent {
    pub edge: String,
    pub edge_label: usize,
    pub limit: GluingDatum,
    pub incumbent_det: Q,
    pub successor_det: Q,
    pub case_tags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TraceStep {
    pub datum: GluingDatum,
    pub labelling: Labelling,
    pub entry: Vec<Q>,
    pub exit: Vec<Q>,
    pub event: Option<LimitEvent>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub start: Vec<Q>,
    pub target: Vec<Q>,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct WalkResult {
    pub datum: GluingDatum,
    pub labelling: Labelling,
    /// exact preimage of the target under the edge-length map
    pub tree_lengths: BTreeMap<String, Q>,
    /// skeleton edge of the final datum -> edge of the input type graph
    pub skel_to_h: BTreeMap<String, String>,
    pub trace: Trace,
}

static INITIAL_CACHE: Lazy<Mutex<BTreeMap<Vec<u8>, (GluingDatum, Labelling)>>> =
    Lazy::new(|| Mutex::new(BTreeMap::new()));

/// First full-dimensional datum with skeleton isomorphic to `h`, in canonical
/// enumeration order over max-valency-3 trees with 3g-3 edges.
pub fn initial_datum(h: &Graph, opts: &WalkOptions) -> Result<(GluingDatum, Labelling)> {
    let g = h.genus()?;
    if g < 2 || g % 2 != 0 {
        return Err(Error::GenusTooSmall(format!(
            "initial datum needs even genus >= 2, got {g}"
        )));
    }
    if !h.is_trivalent() {
        return Err(Error::BadInput("initial datum needs a trivalent type".into()));
    }
    if g > opts.max_genus {
        return Err(Error::SearchExhausted(format!(
            "genus {g} beyond the search guard {}",
            opts.max_genus
        )));
    }
    let key = graph_canonical_key(h);
    if let Some(hit) = INITIAL_CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let d = g / 2 + 1;
    let n = 3 * g - 3;
    let eopts = EnumerateOptions {
        change_minimal: true,
        override_guard: true,
        target_genus: Some(g),
        stop_after: Some(1),
    };
    let h_key = graph_canonical_key(h);
    let search_tree = |tree: &Graph| -> Option<GluingDatum> {
        enumerate_datums(tree, d, &eopts, |datum, qt| {
            let skel = match qt.skeleton() {
                Ok(s) => s,
                Err(_) => return false,
            };
            if skel.n_edges() != n || !skel.is_trivalent() {
                return false;
            }
            // the determinant test is cheap; run the isomorphism check last
            let lab = match datum.canonical_labelling(qt) {
                Ok(l) => l,
                Err(_) => return false,
            };
            let full = match elmap::edge_length_matrix_of(qt, &lab) {
                Ok(m) => m.is_square() && !m.determinant().map(|d| d.is_zero()).unwrap_or(true),
                Err(_) => false,
            };
            full && graph_canonical_key(skel) == h_key
        })
        .ok()
        .and_then(|found| found.into_iter().next())
    };
    let mut trees = free_trees(n, Some(3));
    // full-dimensional datums want leaf-rich base trees (every leaf feeds a
    // doubled column), so try those first
    trees.sort_by_cached_key(|t| (usize::MAX - t.leaves().len(), graph_canonical_key(t)));
    // scan trees across two workers; the answer is the hit with the least
    // tree index, so the outcome does not depend on scheduling
    let best: Mutex<Option<(usize, GluingDatum)>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for worker in 0..2usize {
            let trees = &trees;
            let best = &best;
            let search_tree = &search_tree;
            scope.spawn(move || {
                for (i, tree) in trees.iter().enumerate() {
                    if i % 2 != worker {
                        continue;
                    }
                    {
                        let b = best.lock().unwrap();
                        if let Some((bi, _)) = &*b {
                            if *bi < i {
                                break;
                            }
                        }
                    }
                    if let Some(datum) = search_tree(tree) {
                        let mut b = best.lock().unwrap();
                        match &*b {
                            Some((bi, _)) if *bi < i => {}
                            _ => *b = Some((i, datum)),
                        }
                    }
                }
            });
        }
    });
    let found = best.into_inner().unwrap();
    if let Some((_, datum)) = found {
        let qt = datum.quotient()?;
        let lab = datum.canonical_labelling(&qt)?;
        INITIAL_CACHE.lock().unwrap().insert(key, (datum.clone(), lab.clone()));
        return Ok((datum, lab));
    }
    Err(Error::SearchExhausted(
        "no full-dimensional datum found for the given type".into(),
    ))
}

/// Deterministic wiggle: retry 0 returns `y` itself; later retries add
/// pseudo-random offsets of shrinking magnitude, keeping the point inside the
/// cone of the matrix `a`.
pub fn perturb_start(a: &QMatrix, y: &[Q], seed: u64, retry: usize) -> Result<Vec<Q>> {
    if retry == 0 {
        return Ok(y.to_vec());
    }
    let min_pos = y
        .iter()
        .filter(|x| x.is_positive())
        .min()
        .cloned()
        .ok_or_else(|| Error::BadInput("start point must have positive entries".into()))?;
    let mut rng = crate::util::rng_from_seed(seed.wrapping_add(retry as u64));
    for shrink in 0..16u32 {
        let denom_pow = (4 + retry as u32 + shrink).min(50);
        let scale = min_pos.clone() / Q::from(num_bigint::BigInt::from(1i64 << denom_pow));
        let y_star: Vec<Q> = y
            .iter()
            .map(|x| {
                let jitter = rng.gen_range(-4096i64..=4096);
                x + &scale * crate::util::q(jitter, 4096)
            })
            .collect();
        if let Ok(z) = a.solve(&y_star) {
            if z.iter().all(|c| c.is_positive()) {
                return Ok(y_star);
            }
        }
    }
    Err(Error::PerturbationFailed(retry))
}

fn labels_in_order(lab: &BTreeMap<String, usize>) -> Vec<String> {
    let mut v: Vec<(usize, String)> = lab.iter().map(|(id, &l)| (l, id.clone())).collect();
    v.sort();
    v.into_iter().map(|(_, id)| id).collect()
}

enum Attempt {
    Done(Box<WalkResult>),
    Degenerate,
}

/// Walk from a concrete start datum whose cone contains `y_start` towards
/// `y_target`, both in skeleton-label order.
pub fn walk_from(
    start: &GluingDatum,
    start_lab: &Labelling,
    y_start: &[Q],
    y_target: &[Q],
    opts: &WalkOptions,
) -> Result<WalkResult> {
    let a0 = elmap::edge_length_matrix(start, start_lab)?;
    for retry in 0..64 {
        let y_star = perturb_start(&a0, y_start, opts.seed, retry)?;
        match walk_attempt(start, start_lab, &y_star, y_target, opts)? {
            Attempt::Done(r) => return Ok(*r),
            Attempt::Degenerate => continue,
        }
    }
    Err(Error::PerturbationFailed(64))
}

fn walk_attempt(
    start: &GluingDatum,
    start_lab: &Labelling,
    y_star: &[Q],
    y_target: &[Q],
    opts: &WalkOptions,
) -> Result<Attempt> {
    let mut datum = start.clone();
    let mut lab = start_lab.clone();
    let mut a = elmap::edge_length_matrix(&datum, &lab)?;
    let mut det = a.determinant()?;
    if det.is_zero() {
        return Err(Error::BadInput("start datum must be full-dimensional".into()));
    }
    let mut s_cur = Q::zero();
    let mut z_cur = a.solve(y_star)?;
    if !z_cur.iter().all(|c| c.is_positive()) {
        return Ok(Attempt::Degenerate);
    }
    let mut steps: Vec<TraceStep> = Vec::new();
    let dy: Vec<Q> = y_target.iter().zip(y_star).map(|(t, s)| t - s).collect();
    let y_at =
        |s: &Q| -> Vec<Q> { y_star.iter().zip(&dy).map(|(y0, d)| y0 + d * s).collect() };
    let one = crate::util::qi(1);
    for _step in 0..opts.max_steps {
        let dz = a.solve(&dy)?;
        // next event: smallest s > s_cur where a coordinate of l_T hits zero
        let mut best: Option<(Q, usize)> = None;
        let mut tie = false;
        for (j, (zj, dj)) in z_cur.iter().zip(&dz).enumerate() {
            if zj.is_zero() {
                // the just-regrown coordinate must strictly increase
                if !dj.is_positive() {
                    return Ok(Attempt::Degenerate);
                }
                continue;
            }
            if dj.is_negative() {
                let s_hit = &s_cur + zj / (-dj.clone());
                match &mut best {
                    Some((s_best, jb)) => {
                        if s_hit == *s_best {
                            tie = true;
                        } else if s_hit < *s_best {
                            *s_best = s_hit;
                            *jb = j;
                            tie = false;
                        }
                    }
                    None => best = Some((s_hit, j)),
                }
            }
        }
        match best {
            Some((s_e, j)) if s_e < one => {
                if tie {
                    return Ok(Attempt::Degenerate);
                }
                let tree_order = labels_in_order(&lab.tree);
                let t_edge = tree_order[j].clone();
                let t_label = lab.tree[&t_edge];
                let entry = y_at(&s_cur);
                let event_y = y_at(&s_e);
                let l = limit_at(&datum, &lab, &t_edge)?;
                let cands = regrow(&l)?;
                verify_balancing(&l, &cands)?;
                let succ = cands
                    .iter()
                    .filter(|c| !c.det.is_zero() && sign(&c.det) != sign(&det))
                    .min_by_key(|c| {
                        c.datum
                            .canonical_key_labelled(&c.labelling)
                            .expect("candidate canonical key")
                    })
                    .ok_or_else(|| {
                        Error::BalancingViolation("no opposite-sign candidate at a limit".into())
                    })?;
                steps.push(TraceStep {
                    datum: datum.clone(),
                    labelling: lab.clone(),
                    entry,
                    exit: event_y.clone(),
                    event: Some(LimitEvent {
                        edge: t_edge.clone(),
                        edge_label: t_label,
                        limit: l.datum.clone(),
                        incumbent_det: det.clone(),
                        successor_det: succ.det.clone(),
                        case_tags: cands.iter().map(|c| c.case_tag.clone()).collect(),
                    }),
                });
                datum = succ.datum.clone();
                lab = succ.labelling.clone();
                a = elmap::edge_length_matrix(&datum, &lab)?;
                det = succ.det.clone();
                z_cur = a.solve(&event_y)?;
                // exactly one zero at the regrown edge, all else positive
                let regrown_pos = labels_in_order(&lab.tree)
                    .iter()
                    .position(|e| lab.tree[e] == l.missing_label)
                    .expect("regrown label present");
                for (jj, zj) in z_cur.iter().enumerate() {
                    if jj == regrown_pos {
                        assert!(
                            zj.is_zero(),
                            "regrown coordinate is {} at the event",
                            format_q(zj)
                        );
                    } else if zj.is_zero() {
                        return Ok(Attempt::Degenerate);
                    } else {
                        assert!(
                            zj.is_positive(),
                            "coordinate {jj} negative after a cone switch"
                        );
                    }
                }
                s_cur = s_e;
            }
            _ => {
                let z_end: Vec<Q> =
                    z_cur.iter().zip(&dz).map(|(z, d)| z + d * (&one - &s_cur)).collect();
                let entry = y_at(&s_cur);
                steps.push(TraceStep {
                    datum: datum.clone(),
                    labelling: lab.clone(),
                    entry,
                    exit: y_target.to_vec(),
                    event: None,
                });
                let tree_order = labels_in_order(&lab.tree);
                let tree_lengths: BTreeMap<String, Q> =
                    tree_order.into_iter().zip(z_end.iter().cloned()).collect();
                let skel_to_h = labels_in_order(&lab.skel)
                    .into_iter()
                    .map(|h| (h.clone(), h))
                    .collect();
                return Ok(Attempt::Done(Box::new(WalkResult {
                    datum,
                    labelling: lab,
                    tree_lengths,
                    skel_to_h,
                    trace: Trace {
                        start: y_star.to_vec(),
                        target: y_target.to_vec(),
                        steps,
                    },
                })));
            }
        }
    }
    Err(Error::StepLimitExceeded(opts.max_steps))
}

/// Realize target lengths on a trivalent even-genus type: search an initial
/// datum, then walk. The result's tree lengths satisfy `A . l_T = y` exactly.
pub fn walk(h: &Graph, y1: &BTreeMap<String, Q>, opts: &WalkOptions) -> Result<WalkResult> {
    for e in h.edges() {
        let l = y1.get(e).ok_or_else(|| Error::UnknownEdge(e.clone()))?;
        if !l.is_positive() {
            return Err(Error::NonPositiveLength(e.clone()));
        }
    }
    let (datum, lab) = initial_datum(h, opts)?;
    let qt = datum.quotient()?;
    let (_, emap) = crate::iso::graph_isomorphism(qt.skeleton()?, h)
        .ok_or_else(|| Error::BadInput("initial datum skeleton mismatch".into()))?;
    let skel_order = labels_in_order(&lab.skel);
    let y_target: Vec<Q> = skel_order.iter().map(|s| y1[&emap[s]].clone()).collect();
    // start from the all-ones tree lengths, interior to the initial cone
    let a = elmap::edge_length_matrix(&datum, &lab)?;
    let ones = vec![crate::util::qi(1); a.n_cols()];
    let y_start = a.mul_vec(&ones);
    let mut res = walk_from(&datum, &lab, &y_start, &y_target, opts)?;
    // skeleton labels stay compatible along the walk, so label positions
    // transport the identification with h's edges
    let final_order = labels_in_order(&res.labelling.skel);
    res.skel_to_h = final_order
        .iter()
        .zip(skel_order.iter())
        .map(|(hf, h0)| (hf.clone(), emap[h0].clone()))
        .collect();
    Ok(res)
}

#[derive(Debug, Clone)]
pub struct RealizeOutcome {
    pub realization: Realization,
    pub target: ModuliPoint,
    pub trace: Trace,
    /// for odd genus: the deleted loop and bridge tree edges
    pub lollipop_deleted: Option<(String, String)>,
}

/// Realize a metric graph by a tropical morphism of degree `ceil(g/2) + 1`
/// to a metric tree.
pub fn realize(m: &MetricGraph, opts: &WalkOptions) -> Result<RealizeOutcome> {
    let g = m.genus()?;
    if g < 2 {
        return Err(Error::GenusTooSmall("realization needs genus >= 2".into()));
    }
    let p = m.canonicalize()?;
    if g % 2 == 0 {
        let res = walk(&p.type_graph, &p.lengths, opts)?;
        let realization = build_realization(&res)?;
        return Ok(RealizeOutcome {
            realization,
            target: p,
            trace: res.trace,
            lollipop_deleted: None,
        });
    }
    // odd genus: attach a loop via a bridge at the midpoint of the least edge
    let e0 = p.type_graph.edges()[0].clone();
    let [a, b] = p.type_graph.ends(&e0)?;
    let (a, b) = (a.to_string(), b.to_string());
    let mut vertices: Vec<String> = p.type_graph.vertices().to_vec();
    vertices.push("lp.x".into());
    vertices.push("lp.w".into());
    let mut edges: Vec<(String, String, String)> = p
        .type_graph
        .edges()
        .iter()
        .filter(|e| **e != e0)
        .map(|e| {
            let [x, y] = p.type_graph.ends(e).unwrap();
            (e.clone(), x.to_string(), y.to_string())
        })
        .collect();
    edges.push((format!("{e0}.a"), a, "lp.x".into()));
    edges.push((format!("{e0}.b"), "lp.x".into(), b));
    edges.push(("lp.bridge".into(), "lp.x".into(), "lp.w".into()));
    edges.push(("lp.loop".into(), "lp.w".into(), "lp.w".into()));
    let h_b = Graph::new(vertices, edges)?;
    let mut y_b = p.lengths.clone();
    let half = &y_b[&e0] / crate::util::qi(2);
    y_b.remove(&e0);
    y_b.insert(format!("{e0}.a"), half.clone());
    y_b.insert(format!("{e0}.b"), half);
    y_b.insert("lp.bridge".into(), crate::util::qi(1));
    y_b.insert("lp.loop".into(), crate::util::qi(1));
    let res = walk(&h_b, &y_b, opts)?;
    let (datum, _lab) = (&res.datum, &res.labelling);
    let qt = datum.quotient()?;
    let h_loop = res
        .skel_to_h
        .iter()
        .find(|(_, h)| h.as_str() == "lp.loop")
        .map(|(s, _)| s.clone())
        .ok_or_else(|| Error::LollipopViolation("loop edge not found".into()))?;
    let h_bridge = res
        .skel_to_h
        .iter()
        .find(|(_, h)| h.as_str() == "lp.bridge")
        .map(|(s, _)| s.clone())
        .ok_or_else(|| Error::LollipopViolation("bridge edge not found".into()))?;
    // the loop sits above exactly one tree edge, a leaf edge of a 2-path
    let loop_bases: BTreeSet<String> = qt
        .membership
        .iter()
        .filter(|(_, h)| **h == h_loop)
        .map(|(e, _)| qt.to_base[e].clone())
        .collect();
    if loop_bases.len() != 1 {
        return Err(Error::LollipopViolation("loop spans several tree edges".into()));
    }
    let t_loop = loop_bases.into_iter().next().unwrap();
    let [la, lb] = datum.tree.ends(&t_loop)?;
    let (leaf, mid) = if datum.tree.valency(la)? == 1 {
        (la.to_string(), lb.to_string())
    } else if datum.tree.valency(lb)? == 1 {
        (lb.to_string(), la.to_string())
    } else {
        return Err(Error::LollipopViolation("loop edge is not a leaf edge".into()));
    };
    if datum.tree.valency(&mid)? != 2 {
        return Err(Error::LollipopViolation(
            "inner vertex of the lollipop path is not divalent".into(),
        ));
    }
    let t_bridge = datum
        .tree
        .edges_at(&mid)?
        .into_iter()
        .find(|e| **e != *t_loop)
        .ok_or_else(|| Error::LollipopViolation("no second path edge".into()))?
        .to_string();
    for (e, h) in &qt.membership {
        let base = &qt.to_base[e];
        if *base == t_loop && *h != h_loop {
            return Err(Error::LollipopViolation(format!("{h} also passes above {t_loop}")));
        }
        if *base == t_bridge && *h != h_bridge {
            return Err(Error::LollipopViolation(format!("{h} also passes above {t_bridge}")));
        }
    }
    // delete the 2-path and everything above it
    let keep_edges: Vec<String> = datum
        .tree
        .edges()
        .iter()
        .filter(|e| **e != t_loop && **e != t_bridge)
        .cloned()
        .collect();
    let keep_vertices: Vec<String> = datum
        .tree
        .vertices()
        .iter()
        .filter(|v| **v != leaf && **v != mid)
        .cloned()
        .collect();
    let tree2 = Graph::new(
        keep_vertices.iter().cloned(),
        keep_edges
            .iter()
            .map(|e| {
                let [x, y] = datum.tree.ends(e).unwrap();
                (e.clone(), x.to_string(), y.to_string())
            })
            .collect::<Vec<_>>(),
    )?;
    let rel2: BTreeMap<String, crate::util::Partition> = datum
        .rel
        .iter()
        .filter(|(x, _)| tree2.has_vertex(x) || tree2.has_edge(x))
        .map(|(x, p)| (x.clone(), p.clone()))
        .collect();
    let datum2 = GluingDatum::new(tree2, datum.degree, rel2);
    let report = datum2.validate()?;
    if !report.is_valid() {
        return Err(Error::LollipopViolation(format!(
            "restricted datum invalid: {report:?}"
        )));
    }
    let lengths2: BTreeMap<String, Q> = res
        .tree_lengths
        .iter()
        .filter(|(e, _)| datum2.tree.has_edge(e))
        .map(|(e, l)| (e.clone(), l.clone()))
        .collect();
    let phi = datum2.to_dtm()?;
    let realization = phi.tropicalize(&lengths2)?;
    Ok(RealizeOutcome {
        realization,
        target: p,
        trace: res.trace,
        lollipop_deleted: Some((t_loop, t_bridge)),
    })
}

pub fn build_realization(res: &WalkResult) -> Result<Realization> {
    for (e, l) in &res.tree_lengths {
        if !l.is_positive() {
            return Err(Error::NonPositiveLength(e.clone()));
        }
    }
    let phi = res.datum.to_dtm()?;
    phi.tropicalize(&res.tree_lengths)
}

/// Re-validate a realization end to end: the morphism checks pass and the
/// canonicalized source is isometric to the target point.
pub fn verify_realization(r: &Realization, target: &ModuliPoint) -> Result<bool> {
    let report = r.model.check()?;
    if !report.is_valid() {
        return Ok(false);
    }
    let source = MetricGraph::new(r.model.source.clone(), r.source_lengths.clone())?;
    let canon = source.canonicalize()?;
    Ok(isometric(&canon, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::test_fixtures::{loop_of_3_loops, m1, m1_labelling};
    use crate::util::{q, qi};

    #[test]
    fn genus_two_initial_datums_exist() {
        let theta = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")],
        );
        let opts = WalkOptions::default();
        let (datum, lab) = initial_datum(&theta, &opts).unwrap();
        assert!(elmap::is_full_dimensional(&datum).unwrap());
        let a = elmap::edge_length_matrix(&datum, &lab).unwrap();
        assert_eq!(a.n_rows(), 3);
        let dumbbell = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("l1", "a", "a"), ("br", "a", "b"), ("l2", "b", "b")],
        );
        let (datum2, _) = initial_datum(&dumbbell, &opts).unwrap();
        assert!(elmap::is_full_dimensional(&datum2).unwrap());
    }

    #[test]
    fn walk_theta_already_in_cone() {
        let theta = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")],
        );
        let opts = WalkOptions::default();
        let y: BTreeMap<String, Q> = [("e1", qi(2)), ("e2", qi(2)), ("e3", qi(2))]
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        let res = walk(&theta, &y, &opts).unwrap();
        let a = elmap::edge_length_matrix(&res.datum, &res.labelling).unwrap();
        let z: Vec<Q> = super::labels_in_order(&res.labelling.tree)
            .iter()
            .map(|e| res.tree_lengths[e].clone())
            .collect();
        let y_vec = a.mul_vec(&z);
        let skel_order = super::labels_in_order(&res.labelling.skel);
        for (i, h) in skel_order.iter().enumerate() {
            assert_eq!(y_vec[i], y[&res.skel_to_h[h]]);
        }
        assert!(z.iter().all(|c| c.is_positive()));
    }

    #[test]
    fn golden_chain_walk_visits_the_nine_cases() {
        let m1 = m1();
        let lab = m1_labelling(&m1);
        // y in skeleton-label order y1..y9: the monotone-y3 family
        let y_start: Vec<Q> =
            vec![qi(3), qi(2), qi(4), qi(1), q(5, 4), qi(1), q(5, 4), qi(1), q(5, 4)];
        let y_target: Vec<Q> =
            vec![qi(3), qi(2), qi(10), qi(1), q(5, 4), qi(1), q(5, 4), qi(1), q(5, 4)];
        let opts = WalkOptions::default();
        let res = walk_from(&m1, &lab, &y_start, &y_target, &opts).unwrap();
        assert_eq!(res.trace.steps.len(), 5, "five cones: M1, M3, M5, M7, M9");
        let labels: Vec<usize> = res
            .trace
            .steps
            .iter()
            .filter_map(|s| s.event.as_ref().map(|e| e.edge_label))
            .collect();
        assert_eq!(labels, vec![1, 4, 2, 6], "limit edges z1, z4, z2, z6");
        let dets: Vec<Q> = res
            .trace
            .steps
            .iter()
            .filter_map(|s| s.event.as_ref().map(|e| e.successor_det.clone()))
            .collect();
        assert_eq!(dets, vec![qi(-64), qi(16), qi(-16), qi(16)]);
        let a = elmap::edge_length_matrix(&res.datum, &res.labelling).unwrap();
        let z: Vec<Q> = super::labels_in_order(&res.labelling.tree)
            .iter()
            .map(|e| res.tree_lengths[e].clone())
            .collect();
        assert_eq!(a.mul_vec(&z), y_target);
        assert!(z.iter().all(|x| x.is_positive()));
    }

    #[test]
    fn realize_loop_of_3_loops_and_verify() {
        let h = loop_of_3_loops();
        let lengths: BTreeMap<String, Q> = h
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), q(3 + i as i64, 2)))
            .collect();
        let m = MetricGraph::new(h, lengths).unwrap();
        let out = realize(&m, &WalkOptions::default()).unwrap();
        assert_eq!(out.realization.model.degree().unwrap(), 3);
        assert!(verify_realization(&out.realization, &out.target).unwrap());
    }
}
