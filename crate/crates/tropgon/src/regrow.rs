//! Regrowing a limit: construct every possibly-full-dimensional datum whose
//! limit at the regrown edge is the given one, each with a compatible
//! labelling and a case multiplicity, and verify the balancing condition
//! `sum K_q det(A_q) = 0`.
//!
//! Case dispatch is driven by the valency of the merged vertex and by the
//! ramification and non-dangling valency of the classes above it. A
//! brute-force local enumerator over the relations at the two regrown ends
//! doubles as the completeness oracle in tests.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::datum::{class_id, GluingDatum, Labelling, Quotient};
use crate::elmap;
use crate::error::{Error, Result};
use crate::limits::{base_trees, limit_at, BaseTreeSplit, LimitDatum};
use crate::props;
use crate::util::{join_partitions, Partition, Q};

#[derive(Debug, Clone)]
pub struct RegrowCandidate {
    pub datum: GluingDatum,
    pub labelling: Labelling,
    pub multiplicity: u64,
    pub case_tag: String,
    pub det: Q,
}

/// A local lift of one class above the merged vertex: how its copies split
/// above `u`, `v` and the regrown edge, plus branch realignments
/// `(branch edge, class mask in the limit, target mask in the candidate)`.
#[derive(Debug, Clone, Default)]
struct Lift {
    u: Vec<u32>,
    v: Vec<u32>,
    t1: Vec<u32>,
    aligns: Vec<(String, u32, u32)>,
}

impl Lift {
    fn pass(mask: u32) -> Lift {
        Lift { u: vec![mask], v: vec![mask], t1: vec![mask], aligns: Vec::new() }
    }
}

fn singles(mask: u32) -> Vec<u32> {
    (0..32).filter(|i| mask & (1 << i) != 0).map(|i| 1 << i).collect()
}

fn lowest_bit(mask: u32) -> u32 {
    mask & mask.wrapping_neg()
}

/// A mask of `size` bits inside `superset`, overlapping `original` as much as
/// possible, deterministic.
fn fit_mask(original: u32, superset: u32, size: usize) -> u32 {
    let mut m = original & superset;
    while m.count_ones() as usize > size {
        let h = 31 - m.leading_zeros();
        m &= !(1 << h);
    }
    let mut free = superset & !m;
    while (m.count_ones() as usize) < size {
        let b = lowest_bit(free);
        assert!(b != 0, "fit_mask needs a large enough superset");
        m |= b;
        free &= !b;
    }
    m
}

#[derive(Debug, Clone)]
struct EdgeAbove {
    base: String,
    mask: u32,
    card: usize,
    dangling: bool,
}

#[derive(Debug, Clone)]
struct VertexAbove {
    id: String,
    mask: u32,
    card: usize,
    r: i64,
    dangling: bool,
    edges: Vec<EdgeAbove>,
}

fn vertices_above(l: &LimitDatum, qt0: &Quotient) -> Result<Vec<VertexAbove>> {
    let w0 = &l.merged_vertex;
    let mut out = Vec::new();
    for vid in qt0.graph.vertices() {
        if qt0.to_base[vid] != *w0 {
            continue;
        }
        let mut edges = Vec::new();
        for e in qt0.graph.edges_at(vid)? {
            edges.push(EdgeAbove {
                base: qt0.to_base[e].clone(),
                mask: qt0.class_mask[e],
                card: qt0.index[e],
                dangling: qt0.dangling_edges.contains(e),
            });
        }
        edges.sort_by(|a, b| (a.base.clone(), a.mask).cmp(&(b.base.clone(), b.mask)));
        out.push(VertexAbove {
            id: vid.clone(),
            mask: qt0.class_mask[vid],
            card: qt0.index[vid],
            r: qt0.r_phi(vid)?,
            dangling: qt0.dangling_vertices.contains(vid),
            edges,
        });
    }
    Ok(out)
}

/// The forced lift of a class with no ramification, given the split.
fn forced_lift(c: &VertexAbove, split: &BaseTreeSplit) -> Result<Lift> {
    let mask = c.mask;
    if c.dangling {
        if c.card != 1 {
            return Err(Error::InvalidLimit(format!(
                "dangling class {} has cardinality {}",
                c.id, c.card
            )));
        }
        return Ok(Lift::pass(mask));
    }
    let nd: Vec<&EdgeAbove> = c.edges.iter().filter(|e| !e.dangling).collect();
    match nd.len() {
        2 => {
            let (a, b) = (nd[0], nd[1]);
            for e in [a, b] {
                if e.mask != mask {
                    return Err(Error::InvalidLimit(format!(
                        "(r0-nd2) class above {} must fill {}",
                        e.base, c.id
                    )));
                }
            }
            let a_u = split.s.contains(&a.base);
            let b_u = split.s.contains(&b.base);
            Ok(match (a_u, b_u) {
                (true, true) => {
                    Lift { u: vec![mask], v: singles(mask), t1: singles(mask), aligns: vec![] }
                }
                (false, false) => {
                    Lift { u: singles(mask), v: vec![mask], t1: singles(mask), aligns: vec![] }
                }
                _ => Lift::pass(mask),
            })
        }
        3 => {
            let on_u: Vec<&&EdgeAbove> =
                nd.iter().filter(|e| split.s.contains(&e.base)).collect();
            let on_v: Vec<&&EdgeAbove> =
                nd.iter().filter(|e| !split.s.contains(&e.base)).collect();
            let (lone, lone_on_u) = match (on_u.len(), on_v.len()) {
                (1, 2) => (*on_u[0], true),
                (2, 1) => (*on_v[0], false),
                _ => {
                    return Err(Error::InvalidLimit(format!(
                        "(r0-nd3) class {} sits {}|{} across the split",
                        c.id,
                        on_u.len(),
                        on_v.len()
                    )))
                }
            };
            let mut lone_side = vec![lone.mask];
            lone_side.extend(singles(mask & !lone.mask));
            let mut t1 = vec![lone.mask];
            t1.extend(singles(mask & !lone.mask));
            Ok(if lone_on_u {
                Lift { u: lone_side, v: vec![mask], t1, aligns: vec![] }
            } else {
                Lift { u: vec![mask], v: lone_side, t1, aligns: vec![] }
            })
        }
        n => Err(Error::InvalidLimit(format!(
            "class {} with r = 0 has non-dangling valency {n}",
            c.id
        ))),
    }
}

/// One case-generated choice at the ramified vertices.
#[derive(Debug, Clone)]
struct CaseChoice {
    lifts: BTreeMap<String, Lift>,
    k: u64,
    tag: String,
}

fn orient(
    side_blocks: Vec<u32>,
    far_blocks: Vec<u32>,
    t1: Vec<u32>,
    aligns: Vec<(String, u32, u32)>,
    side_is_u: bool,
) -> Lift {
    if side_is_u {
        Lift { u: side_blocks, v: far_blocks, t1, aligns }
    } else {
        Lift { u: far_blocks, v: side_blocks, t1, aligns }
    }
}

/// Case {w3}: the unique ramified class has r = 1; one construction per
/// admissible position over the given split.
fn w3_choices(a0: &VertexAbove, split: &BaseTreeSplit) -> Result<Vec<CaseChoice>> {
    let mask = a0.mask;
    let card = a0.card;
    let nd: Vec<&EdgeAbove> = a0.edges.iter().filter(|e| !e.dangling).collect();
    let alpha = split
        .s
        .iter()
        .next()
        .ok_or_else(|| Error::CaseDispatchFailure("w3 split must have |S| = 1".into()))?
        .clone();
    let mut out = Vec::new();
    match nd.len() {
        3 => {
            let mut images: Vec<&str> = nd.iter().map(|e| e.base.as_str()).collect();
            images.sort();
            images.dedup();
            if images.len() == 3 {
                // {w3-r1-nd3-t2}: edges above three distinct base edges
                let k_max = nd.iter().map(|e| e.card).max().unwrap();
                let flavor = if k_max == card { "(a=k4)" } else { "(a>k4)" };
                let e_alpha = match nd.iter().find(|e| e.base == alpha) {
                    Some(e) => *e,
                    None => return Ok(out),
                };
                let others: Vec<&&EdgeAbove> = nd.iter().filter(|e| e.base != alpha).collect();
                let (eb, eg) = (*others[0], *others[1]);
                // Position I: the trivalent lift vertex sits on the S side
                if e_alpha.card == card {
                    assert_eq!(eb.card + eg.card, card, "position I cardinalities");
                    let (bb, bg) = if eb.mask & eg.mask == 0 {
                        (eb.mask, eg.mask)
                    } else {
                        let bb = fit_mask(eb.mask, mask, eb.card);
                        (bb, mask & !bb)
                    };
                    let mut aligns = Vec::new();
                    if bb != eb.mask {
                        aligns.push((eb.base.clone(), eb.mask, bb));
                    }
                    if bg != eg.mask {
                        aligns.push((eg.base.clone(), eg.mask, bg));
                    }
                    out.push(CaseChoice {
                        lifts: [(
                            a0.id.clone(),
                            orient(vec![mask], vec![bb, bg], vec![bb, bg], aligns, true),
                        )]
                        .into_iter()
                        .collect(),
                        k: 1,
                        tag: format!("w3-r1-nd3-t2-{flavor}-I"),
                    });
                }
                // Position II.a: glue one extra copy onto the S-side class
                if card > e_alpha.card {
                    let w = lowest_bit(mask & !e_alpha.mask);
                    let block = e_alpha.mask | w;
                    let mut side = vec![block];
                    side.extend(singles(mask & !block));
                    let mut t1 = vec![block];
                    t1.extend(singles(mask & !block));
                    out.push(CaseChoice {
                        lifts: [(a0.id.clone(), orient(side, vec![mask], t1, Vec::new(), true))]
                            .into_iter()
                            .collect(),
                        k: e_alpha.card as u64 + 1,
                        tag: format!("w3-r1-nd3-t2-{flavor}-IIa"),
                    });
                }
                // Position II.b: peel one copy off the S-side class
                if card > eb.card.max(eg.card) {
                    assert!(e_alpha.card >= 2, "II.b needs a splittable class");
                    let xfree = e_alpha.mask & !(eb.mask | eg.mask);
                    let xp =
                        if xfree != 0 { lowest_bit(xfree) } else { lowest_bit(e_alpha.mask) };
                    let rest = mask & !xp;
                    let mut aligns = Vec::new();
                    for e in [eb, eg] {
                        let tgt = fit_mask(e.mask, rest, e.card);
                        if tgt != e.mask {
                            aligns.push((e.base.clone(), e.mask, tgt));
                        }
                    }
                    let mut side = vec![e_alpha.mask];
                    side.extend(singles(mask & !e_alpha.mask));
                    let eprime = e_alpha.mask & !xp;
                    let mut t1 = vec![eprime];
                    t1.extend(singles(mask & !eprime));
                    out.push(CaseChoice {
                        lifts: [(
                            a0.id.clone(),
                            orient(side, vec![rest, xp], t1, aligns, true),
                        )]
                        .into_iter()
                        .collect(),
                        k: e_alpha.card as u64 - 1,
                        tag: format!("w3-r1-nd3-t2-{flavor}-IIb"),
                    });
                }
            } else if images.len() == 2 {
                // {w3-r1-nd3-t3}: a pair above one base edge, a lone full class above another
                let mut by_img: BTreeMap<&str, Vec<&EdgeAbove>> = BTreeMap::new();
                for e in &nd {
                    by_img.entry(e.base.as_str()).or_default().push(e);
                }
                let (pair_base, pair) = by_img
                    .iter()
                    .find(|(_, v)| v.len() == 2)
                    .map(|(k, v)| (*k, v.clone()))
                    .unwrap();
                let (lone_base, lone) = by_img
                    .iter()
                    .find(|(_, v)| v.len() == 1)
                    .map(|(k, v)| (*k, v[0]))
                    .unwrap();
                assert_eq!(lone.card, card, "(t3) lone class fills the vertex");
                assert_eq!(pair[0].card + pair[1].card, card, "(t3) pair sums to the vertex");
                if alpha == pair_base {
                    out.push(CaseChoice {
                        lifts: [(a0.id.clone(), Lift::pass(mask))].into_iter().collect(),
                        k: 1,
                        tag: "w3-r1-nd3-t3".into(),
                    });
                } else if alpha == lone_base {
                    let blocks = vec![pair[0].mask, pair[1].mask];
                    out.push(CaseChoice {
                        lifts: [(
                            a0.id.clone(),
                            orient(vec![mask], blocks.clone(), blocks, Vec::new(), true),
                        )]
                        .into_iter()
                        .collect(),
                        k: 1,
                        tag: "w3-r1-nd3-t3".into(),
                    });
                }
            } else {
                return Err(Error::InvalidLimit(format!("class {} breaks no-return", a0.id)));
            }
        }
        2 => {
            // {w3-r1-nd2}
            let (small, big) =
                if nd[0].card <= nd[1].card { (nd[0], nd[1]) } else { (nd[1], nd[0]) };
            assert_eq!(big.card, card, "(r1-nd2) big class fills the vertex");
            assert_eq!(small.card + 1, card, "(r1-nd2) small class is one short");
            if alpha == small.base {
                out.push(CaseChoice {
                    lifts: [(a0.id.clone(), Lift::pass(mask))].into_iter().collect(),
                    k: 1,
                    tag: "w3-r1-nd2".into(),
                });
            } else if alpha == big.base {
                let far = {
                    let mut v = vec![small.mask];
                    v.extend(singles(mask & !small.mask));
                    v
                };
                out.push(CaseChoice {
                    lifts: [(
                        a0.id.clone(),
                        orient(vec![mask], far.clone(), far, Vec::new(), true),
                    )]
                    .into_iter()
                    .collect(),
                    k: 1,
                    tag: "w3-r1-nd2".into(),
                });
            }
        }
        n => {
            return Err(Error::InvalidLimit(format!(
                "r = 1 class {} with non-dangling valency {n}",
                a0.id
            )))
        }
    }
    Ok(out)
}

/// Case {w2-r2}: one class with r = 2 above a divalent merged vertex.
fn w2_r2_choices(a0: &VertexAbove, split: &BaseTreeSplit) -> Result<Vec<CaseChoice>> {
    let mask = a0.mask;
    let card = a0.card;
    let nd: Vec<&EdgeAbove> = a0.edges.iter().filter(|e| !e.dangling).collect();
    let dangling: Vec<&EdgeAbove> = a0.edges.iter().filter(|e| e.dangling).collect();
    let mut out = Vec::new();
    let is_leaf_split = split.s.is_empty();
    match nd.len() {
        3 => {
            let mut by_img: BTreeMap<&str, Vec<&EdgeAbove>> = BTreeMap::new();
            for e in &nd {
                by_img.entry(e.base.as_str()).or_default().push(e);
            }
            if by_img.len() != 2 {
                return Err(Error::InvalidLimit(format!("class {} breaks no-return", a0.id)));
            }
            let (tx, fs) = by_img
                .iter()
                .find(|(_, v)| v.len() == 2)
                .map(|(k, v)| (*k, v.clone()))
                .ok_or_else(|| {
                    Error::InvalidLimit(format!("(w2-r2-nd3) {} has no doubled side", a0.id))
                })?;
            let (ty, e3) = by_img
                .iter()
                .find(|(_, v)| v.len() == 1)
                .map(|(k, v)| (*k, v[0]))
                .unwrap();
            assert_eq!(dangling.len(), 1, "(w2-r2-nd3) exactly one dangling edge");
            let e4 = dangling[0];
            let (f1, f2) = (fs[0].clone(), fs[1].clone());
            let (k1, k2) = (f1.card, f2.card);
            let dbl: u64 = if k1.min(k2) == 1 { 2 } else { 1 };
            if e4.base == ty {
                // Cardinality M: the dangling class shares the lone side
                assert_eq!(k1 + k2, card);
                assert_eq!(e3.card + 1, card);
                let sub = if k1 == 1 && k2 == 1 {
                    "M-11"
                } else if k1.min(k2) == 1 {
                    "M-1k"
                } else {
                    "M-kk"
                };
                if is_leaf_split {
                    // Base I: pair each doubled-side class with a lone-side class
                    for (g1, g2) in [(e3, e4), (e4, e3)] {
                        let ok1 = g1.dangling || g1.card == f1.card;
                        let ok2 = g2.dangling || g2.card == f2.card;
                        if !(ok1 && ok2) {
                            continue;
                        }
                        let (a1, a2) = (f1.mask, f2.mask);
                        let mut aligns = Vec::new();
                        for (g, a) in [(g1, a1), (g2, a2)] {
                            let tgt = if g.dangling { lowest_bit(a) } else { a };
                            if tgt != g.mask {
                                aligns.push((g.base.clone(), g.mask, tgt));
                            }
                        }
                        let i = lowest_bit(a1);
                        let j = lowest_bit(a2);
                        let mut u_side = vec![i | j];
                        u_side.extend(singles(mask & !(i | j)));
                        let mut t1 = vec![i, j];
                        t1.extend(singles(mask & !(i | j)));
                        out.push(CaseChoice {
                            lifts: [(
                                a0.id.clone(),
                                Lift { u: u_side, v: vec![a1, a2], t1, aligns },
                            )]
                            .into_iter()
                            .collect(),
                            k: 1,
                            tag: format!("w2-r2-nd3-{sub}-I"),
                        });
                    }
                } else {
                    let side_is_u = split.s.contains(tx);
                    // Base II.1
                    out.push(CaseChoice {
                        lifts: [(a0.id.clone(), Lift::pass(mask))].into_iter().collect(),
                        k: (k1 + k2) as u64 * dbl,
                        tag: format!("w2-r2-nd3-{sub}-II1"),
                    });
                    // Base II.2 on each splittable doubled-side class
                    for (f, o) in [(f1.clone(), f2.clone()), (f2, f1)] {
                        if f.card < 2 {
                            continue;
                        }
                        let xfree = f.mask & !e3.mask;
                        let x =
                            if xfree != 0 { lowest_bit(xfree) } else { lowest_bit(f.mask) };
                        let mut aligns = Vec::new();
                        let e3_tgt = mask & !x;
                        if e3_tgt != e3.mask {
                            aligns.push((e3.base.clone(), e3.mask, e3_tgt));
                        }
                        if x != e4.mask {
                            aligns.push((e4.base.clone(), e4.mask, x));
                        }
                        let tx_blocks = vec![f.mask, o.mask];
                        let ty_blocks = vec![mask & !x, x];
                        let t1 = vec![f.mask & !x, o.mask, x];
                        out.push(CaseChoice {
                            lifts: [(
                                a0.id.clone(),
                                orient(tx_blocks, ty_blocks, t1, aligns, side_is_u),
                            )]
                            .into_iter()
                            .collect(),
                            k: (f.card as u64 - 1) * dbl,
                            tag: format!("w2-r2-nd3-{sub}-II2"),
                        });
                    }
                }
            } else {
                // Cardinality P: the dangling class sits on the doubled side
                assert_eq!(e4.base, tx);
                assert_eq!(k1 + k2 + 1, card);
                assert_eq!(e3.card, card);
                if is_leaf_split {
                    return Ok(out);
                }
                let side_is_u = split.s.contains(tx);
                let aq = mask & !e4.mask;
                let tx_blocks = vec![aq, e4.mask];
                out.push(CaseChoice {
                    lifts: [(
                        a0.id.clone(),
                        orient(tx_blocks.clone(), vec![mask], tx_blocks, Vec::new(), side_is_u),
                    )]
                    .into_iter()
                    .collect(),
                    k: (k1 + k2) as u64,
                    tag: "w2-r2-nd3-P-II1".into(),
                });
                for (f, o) in [(f1.clone(), f2.clone()), (f2, f1)] {
                    let blocks = vec![f.mask | e4.mask, o.mask];
                    out.push(CaseChoice {
                        lifts: [(
                            a0.id.clone(),
                            orient(blocks.clone(), vec![mask], blocks, Vec::new(), side_is_u),
                        )]
                        .into_iter()
                        .collect(),
                        k: f.card as u64 + 1,
                        tag: "w2-r2-nd3-P-II2".into(),
                    });
                }
            }
        }
        2 => {
            assert_eq!(dangling.len(), 2, "(w2-r2-nd2) two dangling edges");
            let (e2, e3) = (nd[0], nd[1]);
            if e2.base == e3.base {
                return Err(Error::InvalidLimit(format!("class {} breaks no-return", a0.id)));
            }
            let same_side = dangling[0].base == dangling[1].base;
            if !same_side {
                return Err(Error::InvalidLimit(format!(
                    "(w2-r2-nd2-M) at {}: the parent could not have been full-rank",
                    a0.id
                )));
            }
            let (small, big) = if e2.card <= e3.card { (e2, e3) } else { (e3, e2) };
            assert_eq!(small.card + 2, card);
            assert_eq!(big.card, card);
            if is_leaf_split {
                return Ok(out);
            }
            let side_is_u = split.s.contains(small.base.as_str());
            let (d1, d2) = (dangling[0], dangling[1]);
            let (d1, d2) = if d1.mask < d2.mask { (d1, d2) } else { (d2, d1) };
            let blocks = vec![small.mask | d1.mask, d2.mask];
            out.push(CaseChoice {
                lifts: [(
                    a0.id.clone(),
                    orient(blocks.clone(), vec![mask], blocks, Vec::new(), side_is_u),
                )]
                .into_iter()
                .collect(),
                k: 1,
                tag: "w2-r2-nd2-P".into(),
            });
        }
        n => {
            return Err(Error::InvalidLimit(format!(
                "r = 2 class {} with non-dangling valency {n}",
                a0.id
            )))
        }
    }
    Ok(out)
}

/// The two lift variants of an r = 1 class above a divalent merged vertex,
/// keyed by the base edge whose side carries the ramified lift vertex.
fn w2_r1_variants(x0: &VertexAbove) -> Result<BTreeMap<String, Lift>> {
    let mask = x0.mask;
    let card = x0.card;
    let nd: Vec<&EdgeAbove> = x0.edges.iter().filter(|e| !e.dangling).collect();
    let mut out = BTreeMap::new();
    match nd.len() {
        3 => {
            let mut by_img: BTreeMap<&str, Vec<&EdgeAbove>> = BTreeMap::new();
            for e in &nd {
                by_img.entry(e.base.as_str()).or_default().push(e);
            }
            if by_img.len() != 2 {
                return Err(Error::InvalidLimit(format!("class {} breaks no-return", x0.id)));
            }
            let (pair_base, pair) = by_img
                .iter()
                .find(|(_, v)| v.len() == 2)
                .map(|(k, v)| (*k, v.clone()))
                .unwrap();
            let (lone_base, lone) = by_img
                .iter()
                .find(|(_, v)| v.len() == 1)
                .map(|(k, v)| (*k, v[0]))
                .unwrap();
            assert_eq!(lone.card, card);
            assert_eq!(pair[0].card + pair[1].card, card);
            out.insert(pair_base.to_string(), Lift::pass(mask));
            let blocks = vec![pair[0].mask, pair[1].mask];
            out.insert(
                lone_base.to_string(),
                Lift { u: blocks.clone(), v: blocks.clone(), t1: blocks, aligns: Vec::new() },
            );
            Ok(out)
        }
        2 => {
            let (small, big) =
                if nd[0].card <= nd[1].card { (nd[0], nd[1]) } else { (nd[1], nd[0]) };
            assert_eq!(big.card, card);
            assert_eq!(small.card + 1, card);
            out.insert(small.base.clone(), Lift::pass(mask));
            let far = {
                let mut v = vec![small.mask];
                v.extend(singles(mask & !small.mask));
                v
            };
            out.insert(
                big.base.clone(),
                Lift { u: far.clone(), v: far.clone(), t1: far, aligns: Vec::new() },
            );
            Ok(out)
        }
        n => Err(Error::InvalidLimit(format!(
            "r = 1 class {} with non-dangling valency {n}",
            x0.id
        ))),
    }
}

/// Reorient a two-sided variant: its `u` slot holds the blocks for the side
/// of `side_edge`, its `v` slot the far side.
fn orient_variant(lift: &Lift, side_edge: &str, split: &BaseTreeSplit) -> Lift {
    if split.s.contains(side_edge) {
        lift.clone()
    } else {
        Lift {
            u: lift.v.clone(),
            v: lift.u.clone(),
            t1: lift.t1.clone(),
            aligns: lift.aligns.clone(),
        }
    }
}

struct BranchMap {
    /// tree elements (edges and vertices) of each branch at the merged vertex
    elems: BTreeMap<String, Vec<String>>,
}

fn branch_map(l: &LimitDatum) -> Result<BranchMap> {
    let tree = &l.datum.tree;
    let w0 = &l.merged_vertex;
    let mut elems = BTreeMap::new();
    for t in tree.edges_at(w0)? {
        let mut list: Vec<String> = vec![t.to_string()];
        let mut seen_v: BTreeSet<String> = BTreeSet::new();
        let mut seen_e: BTreeSet<String> = [t.to_string()].into_iter().collect();
        let mut stack = vec![tree.other_end(t, w0)?.to_string()];
        while let Some(v) = stack.pop() {
            if v == *w0 || !seen_v.insert(v.clone()) {
                continue;
            }
            list.push(v.clone());
            for e in tree.edges_at(&v)? {
                if seen_e.insert(e.to_string()) {
                    list.push(e.to_string());
                    stack.push(tree.other_end(e, &v)?.to_string());
                }
            }
        }
        elems.insert(t.to_string(), list);
    }
    Ok(BranchMap { elems })
}

/// Permutation of the copies realizing the alignment constraints; it fixes
/// every class above the merged vertex setwise.
fn branch_perm(degree: usize, w0_classes: &[u32], constraints: &[(u32, u32)]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..degree).collect();
    for &class in w0_classes {
        let ours: Vec<&(u32, u32)> =
            constraints.iter().filter(|(f, _)| *f != 0 && f & class == *f).collect();
        if ours.is_empty() {
            continue;
        }
        let mut from_all = 0u32;
        let mut to_all = 0u32;
        for (f, t) in &ours {
            assert_eq!(f.count_ones(), t.count_ones(), "alignment preserves cardinality");
            assert!(t & class == *t, "alignment target stays inside the class");
            assert!(from_all & f == 0 && to_all & t == 0, "alignments must not clash");
            from_all |= f;
            to_all |= t;
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (f, t) in &ours {
            let fs: Vec<usize> = (0..degree).filter(|i| f & (1 << i) != 0).collect();
            let ts: Vec<usize> = (0..degree).filter(|i| t & (1 << i) != 0).collect();
            pairs.extend(fs.into_iter().zip(ts));
        }
        let rest_from =
            (0..degree).filter(|i| class & (1 << i) != 0 && from_all & (1 << i) == 0);
        let rest_to: Vec<usize> =
            (0..degree).filter(|i| class & (1 << i) != 0 && to_all & (1 << i) == 0).collect();
        pairs.extend(rest_from.zip(rest_to));
        for (f, t) in pairs {
            perm[f] = t;
        }
    }
    perm
}

fn apply_perm_to_partition(p: &Partition, perm: &[usize]) -> Partition {
    crate::util::normalize_partition(
        p.iter()
            .map(|&b| {
                let mut m = 0u32;
                for (i, &pi) in perm.iter().enumerate() {
                    if b & (1 << i) != 0 {
                        m |= 1 << pi;
                    }
                }
                m
            })
            .collect(),
    )
}

/// Assemble a candidate datum from per-class lifts.
fn assemble(
    l: &LimitDatum,
    split: &BaseTreeSplit,
    lifts: &BTreeMap<String, Lift>,
    branches: &BranchMap,
    qt0: &Quotient,
) -> (GluingDatum, BTreeMap<String, Vec<usize>>) {
    let d = l.datum.degree;
    let w0 = &l.merged_vertex;
    let w0_classes: Vec<u32> = qt0
        .graph
        .vertices()
        .iter()
        .filter(|v| qt0.to_base[*v] == *w0)
        .map(|v| qt0.class_mask[v])
        .collect();
    let mut per_branch: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    for lift in lifts.values() {
        for (t, f, to) in &lift.aligns {
            per_branch.entry(t.clone()).or_default().push((*f, *to));
        }
    }
    let perms: BTreeMap<String, Vec<usize>> = per_branch
        .iter()
        .map(|(t, cs)| (t.clone(), branch_perm(d, &w0_classes, cs)))
        .collect();
    let mut rel: BTreeMap<String, Partition> = BTreeMap::new();
    let mut u_blocks = Vec::new();
    let mut v_blocks = Vec::new();
    let mut t1_blocks = Vec::new();
    for lift in lifts.values() {
        u_blocks.extend(lift.u.iter().copied());
        v_blocks.extend(lift.v.iter().copied());
        t1_blocks.extend(lift.t1.iter().copied());
    }
    rel.insert(split.u.clone(), crate::util::normalize_partition(u_blocks));
    rel.insert(split.v.clone(), crate::util::normalize_partition(v_blocks));
    rel.insert(split.t1.clone(), crate::util::normalize_partition(t1_blocks));
    for (root, elems) in &branches.elems {
        let perm = perms.get(root);
        for x in elems {
            let p0 = l.datum.rel_of(x);
            let p = match perm {
                Some(pi) => apply_perm_to_partition(&p0, pi),
                None => p0,
            };
            rel.insert(x.clone(), p);
        }
    }
    (GluingDatum::new(split.tree.clone(), d, rel), perms)
}

/// Transport the limit's labelling to a candidate: the regrown edge takes the
/// missing label, everything else is read off through the branch permutations.
fn candidate_labelling(
    l: &LimitDatum,
    datum: &GluingDatum,
    t1: &str,
    perms: &BTreeMap<String, Vec<usize>>,
    branches: &BranchMap,
    qt0: &Quotient,
) -> Result<Labelling> {
    let mut tree: BTreeMap<String, usize> = l.labelling.tree.clone();
    tree.insert(t1.to_string(), l.missing_label);
    let qt = datum.quotient()?;
    let mut inv: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (t, p) in perms {
        let mut ip = vec![0; p.len()];
        for (i, &j) in p.iter().enumerate() {
            ip[j] = i;
        }
        inv.insert(t.as_str(), ip);
    }
    let root_of: BTreeMap<&str, &str> = branches
        .elems
        .iter()
        .flat_map(|(root, elems)| elems.iter().map(move |x| (x.as_str(), root.as_str())))
        .collect();
    let mut skel: BTreeMap<String, usize> = BTreeMap::new();
    for (e, h) in &qt.membership {
        let base = &qt.to_base[e];
        if base == t1 {
            continue;
        }
        let mask = qt.class_mask[e];
        let orig_mask = match root_of.get(base.as_str()).and_then(|r| inv.get(r)) {
            Some(ip) => {
                let mut m = 0u32;
                for (i, &ipi) in ip.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        m |= 1 << ipi;
                    }
                }
                m
            }
            None => mask,
        };
        let m0_edge = class_id(base, orig_mask);
        if let Some(h0) = qt0.membership.get(&m0_edge) {
            let label = l.labelling.skel[h0];
            if let Some(prev) = skel.insert(h.clone(), label) {
                if prev != label {
                    return Err(Error::CaseDispatchFailure(format!(
                        "inconsistent induced skeleton labels on {h}"
                    )));
                }
            }
        }
    }
    if skel.len() != qt.skeleton()?.n_edges() {
        return Err(Error::CaseDispatchFailure(
            "a candidate skeleton edge failed to inherit a label".into(),
        ));
    }
    Ok(Labelling { tree, skel })
}

fn validate_candidate(
    l: &LimitDatum,
    datum: &GluingDatum,
    lab: &Labelling,
    t1: &str,
) -> Result<()> {
    let report = datum.validate()?;
    if !report.is_valid() {
        return Err(Error::CaseDispatchFailure(format!("candidate invalid: {report:?}")));
    }
    if !props::possibly_full_dimensional(datum)? {
        return Err(Error::CaseDispatchFailure(
            "candidate not possibly-full-dimensional".into(),
        ));
    }
    let lim = limit_at(datum, lab, t1)?;
    if lim.missing_label != l.missing_label {
        return Err(Error::CaseDispatchFailure("wrong missing label".into()));
    }
    match lim.datum.is_isomorphic_labelled(&lim.labelling, &l.datum, &l.labelling)? {
        Some(_) => Ok(()),
        None => Err(Error::CaseDispatchFailure(
            "candidate limit is not label-isomorphic to the input".into(),
        )),
    }
}

/// Inherited-condition checks on the limit itself, including the change
/// balance `ch + val = 4` at the merged vertex.
fn check_limit_preconditions(l: &LimitDatum, qt0: &Quotient) -> Result<()> {
    let h0 = qt0.skeleton()?;
    if !h0.is_trivalent() {
        return Err(Error::NonTrivalentSkeleton);
    }
    if !props::dangling_no_glue(qt0)?.ok() || !props::no_return(&l.datum, qt0)?.ok() {
        return Err(Error::InvalidLimit(
            "limit does not inherit dangling-no-glue/no-return".into(),
        ));
    }
    for v in l.datum.tree.vertices() {
        let ch = qt0.change(v)?;
        let val = l.datum.tree.valency(v)? as i64;
        let want = if *v == l.merged_vertex { 4 } else { 3 };
        if ch + val != want {
            return Err(Error::InvalidLimit(format!(
                "change balance at {v}: ch {ch} + val {val} != {want}"
            )));
        }
    }
    Ok(())
}

/// The complete candidate list for a limit, each entry carrying a compatible
/// labelling, its case multiplicity and its determinant.
pub fn regrow(l: &LimitDatum) -> Result<Vec<RegrowCandidate>> {
    let qt0 = l.datum.quotient()?;
    check_limit_preconditions(l, &qt0)?;
    let w0 = &l.merged_vertex;
    let val = l.datum.tree.valency(w0)?;
    let above = vertices_above(l, &qt0)?;
    let ramified: Vec<&VertexAbove> = above.iter().filter(|c| c.r > 0).collect();
    let branches = branch_map(l)?;
    let splits = base_trees(l)?;
    let mut out: Vec<RegrowCandidate> = Vec::new();
    let emit = |split: &BaseTreeSplit,
                    choice: CaseChoice,
                    out: &mut Vec<RegrowCandidate>|
     -> Result<()> {
        let mut lifts = choice.lifts.clone();
        for c in &above {
            if !lifts.contains_key(&c.id) {
                lifts.insert(c.id.clone(), forced_lift(c, split)?);
            }
        }
        let (datum, perms) = assemble(l, split, &lifts, &branches, &qt0);
        let lab = candidate_labelling(l, &datum, &split.t1, &perms, &branches, &qt0)?;
        validate_candidate(l, &datum, &lab, &split.t1)?;
        let det = elmap::edge_length_matrix(&datum, &lab)?.determinant()?;
        out.push(RegrowCandidate {
            datum,
            labelling: lab,
            multiplicity: choice.k,
            case_tag: choice.tag,
            det,
        });
        Ok(())
    };
    match (val, ramified.len()) {
        (4, 0) => {
            for split in &splits {
                if split.s.len() != 2 {
                    continue;
                }
                emit(
                    split,
                    CaseChoice { lifts: BTreeMap::new(), k: 1, tag: "w4".into() },
                    &mut out,
                )?;
            }
        }
        (3, 1) => {
            let a0 = ramified[0];
            assert_eq!(a0.r, 1, "valency 3 forces change 1 at the merged vertex");
            for split in &splits {
                if split.s.len() != 1 {
                    continue;
                }
                for choice in w3_choices(a0, split)? {
                    emit(split, choice, &mut out)?;
                }
            }
        }
        (2, 1) => {
            let a0 = ramified[0];
            assert_eq!(a0.r, 2);
            for split in &splits {
                for choice in w2_r2_choices(a0, split)? {
                    emit(split, choice, &mut out)?;
                }
            }
        }
        (2, 2) => {
            let (a0, b0) = (ramified[0], ramified[1]);
            assert!(a0.r == 1 && b0.r == 1);
            let va = w2_r1_variants(a0)?;
            let vb = w2_r1_variants(b0)?;
            for split in &splits {
                if split.s.len() != 1 {
                    continue;
                }
                let t_u = split.s.iter().next().unwrap().clone();
                let t_v = split.s_prime.iter().next().unwrap().clone();
                for (side_a, side_b) in [(&t_u, &t_v), (&t_v, &t_u)] {
                    let (la, lb) = match (va.get(side_a.as_str()), vb.get(side_b.as_str())) {
                        (Some(x), Some(y)) => (x, y),
                        _ => continue,
                    };
                    let lifts: BTreeMap<String, Lift> = [
                        (a0.id.clone(), orient_variant(la, side_a, split)),
                        (b0.id.clone(), orient_variant(lb, side_b, split)),
                    ]
                    .into_iter()
                    .collect();
                    emit(split, CaseChoice { lifts, k: 1, tag: "w2-r1".into() }, &mut out)?;
                }
            }
        }
        (v, r) => {
            return Err(Error::InvalidLimit(format!(
                "merged valency {v} with {r} ramified classes has no regrow case"
            )))
        }
    }
    if out.is_empty() {
        return Err(Error::CaseDispatchFailure("no candidate produced".into()));
    }
    out.sort_by_cached_key(|c| {
        c.datum
            .canonical_key_labelled(&c.labelling)
            .expect("candidates have canonical keys")
    });
    Ok(out)
}

/// The exact balancing sum `sum K_q det A_q`; errors with
/// `BalancingViolation` when nonzero. Also asserts the limit-matrix lemma:
/// all candidates share their matrix columns away from the regrown edge.
pub fn verify_balancing(l: &LimitDatum, candidates: &[RegrowCandidate]) -> Result<Q> {
    let mut shared: Option<Vec<Vec<Q>>> = None;
    for c in candidates {
        let m = elmap::edge_length_matrix(&c.datum, &c.labelling)?;
        // columns of the matrix are ordered by label; drop the regrown one
        let mut labels: Vec<usize> = c.labelling.tree.values().copied().collect();
        labels.sort();
        let cols: Vec<Vec<Q>> = labels
            .iter()
            .enumerate()
            .filter(|(_, &lab)| lab != l.missing_label)
            .map(|(j, _)| (0..m.n_rows()).map(|i| m.entries[i][j].clone()).collect())
            .collect();
        match &shared {
            None => shared = Some(cols),
            Some(prev) => {
                if *prev != cols {
                    return Err(Error::BalancingViolation(
                        "candidates disagree away from the regrown edge".into(),
                    ));
                }
            }
        }
    }
    let sum: Q = candidates
        .iter()
        .map(|c| &c.det * Q::from(num_bigint::BigInt::from(c.multiplicity)))
        .sum();
    if !sum.is_zero() {
        return Err(Error::BalancingViolation(crate::util::format_q(&sum)));
    }
    Ok(sum)
}

/// Ground-truth regrow: enumerate all relations at the regrown ends with all
/// branch realignments; keep valid possibly-full-dimensional datums whose
/// labelled limit matches. One representative per labelled isomorphism class.
pub fn brute_force_regrow(l: &LimitDatum) -> Result<Vec<(GluingDatum, Labelling)>> {
    let qt0 = l.datum.quotient()?;
    check_limit_preconditions(l, &qt0)?;
    let above = vertices_above(l, &qt0)?;
    let branches = branch_map(l)?;
    let splits = base_trees(l)?;
    let mut out: Vec<(GluingDatum, Labelling)> = Vec::new();
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    for split in &splits {
        let per_class: Vec<Vec<Lift>> =
            above.iter().map(|c| all_lifts_of_class(c, split)).collect();
        if per_class.iter().any(|v| v.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; per_class.len()];
        loop {
            let lifts: BTreeMap<String, Lift> = above
                .iter()
                .enumerate()
                .map(|(i, c)| (c.id.clone(), per_class[i][idx[i]].clone()))
                .collect();
            let (datum, perms) = assemble(l, split, &lifts, &branches, &qt0);
            if datum.is_valid() && props::possibly_full_dimensional(&datum).unwrap_or(false) {
                if let Ok(lab) =
                    candidate_labelling(l, &datum, &split.t1, &perms, &branches, &qt0)
                {
                    if validate_candidate(l, &datum, &lab, &split.t1).is_ok() {
                        let key = datum.canonical_key_labelled(&lab)?;
                        if seen.insert(key) {
                            out.push((datum, lab));
                        }
                    }
                }
            }
            // odometer
            let mut i = 0;
            loop {
                if i == idx.len() {
                    break;
                }
                idx[i] += 1;
                if idx[i] < per_class[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Every local lift of a class: partitions above u and v whose join is the
/// whole class, a common refinement above the new edge, and every placement
/// of the branch classes into the side blocks.
fn all_lifts_of_class(c: &VertexAbove, split: &BaseTreeSplit) -> Vec<Lift> {
    let mask = c.mask;
    let parts = crate::util::partitions_of_mask(mask);
    let mut out = Vec::new();
    for pu in &parts {
        for pv in &parts {
            if join_partitions(pu, pv) != vec![mask] {
                continue;
            }
            for pt in &parts {
                if !crate::util::refines(pt, pu) || !crate::util::refines(pt, pv) {
                    continue;
                }
                let mut align_sets: Vec<Vec<(String, u32, u32)>> = vec![Vec::new()];
                let mut feasible = true;
                for e in &c.edges {
                    let side = if split.s.contains(&e.base) { pu } else { pv };
                    let mut placements: Vec<(String, u32, u32)> = Vec::new();
                    for &b in side {
                        if (e.card as u32) <= b.count_ones() {
                            for sub in submasks_with(b, e.card) {
                                placements.push((e.base.clone(), e.mask, sub));
                            }
                        }
                    }
                    if placements.is_empty() {
                        feasible = false;
                        break;
                    }
                    let mut next = Vec::new();
                    for prev in &align_sets {
                        for p in &placements {
                            let clash = prev.iter().any(|(t, f, to)| {
                                *t == p.0 && ((*f & p.1 != 0) || (*to & p.2 != 0))
                            });
                            if !clash {
                                let mut v = prev.clone();
                                v.push(p.clone());
                                next.push(v);
                            }
                        }
                    }
                    align_sets = next;
                    if align_sets.is_empty() {
                        feasible = false;
                        break;
                    }
                }
                if !feasible {
                    continue;
                }
                for aligns in align_sets {
                    let aligns: Vec<(String, u32, u32)> =
                        aligns.into_iter().filter(|(_, f, t)| f != t).collect();
                    out.push(Lift { u: pu.clone(), v: pv.clone(), t1: pt.clone(), aligns });
                }
            }
        }
    }
    out
}

fn submasks_with(mask: u32, bits: usize) -> Vec<u32> {
    let elems: Vec<u32> = (0..32).filter(|i| mask & (1 << i) != 0).collect();
    let n = elems.len();
    let mut out = Vec::new();
    for sel in 0u32..(1 << n) {
        if sel.count_ones() as usize != bits {
            continue;
        }
        let mut m = 0u32;
        for (j, &e) in elems.iter().enumerate() {
            if sel & (1 << j) != 0 {
                m |= 1 << e;
            }
        }
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::test_fixtures::{m1, m1_labelling};
    use crate::util::qi;

    #[test]
    fn regrow_of_m2_balances_as_in_the_worked_example() {
        let m1 = m1();
        let lab = m1_labelling(&m1);
        let l = limit_at(&m1, &lab, "z1").unwrap();
        let cands = regrow(&l).unwrap();
        assert_eq!(cands.len(), 3, "three base trees, one forced candidate each");
        let mut dets: Vec<Q> = cands.iter().map(|c| c.det.clone()).collect();
        dets.sort();
        assert_eq!(dets, vec![qi(-64), qi(-64), qi(128)]);
        assert!(cands.iter().all(|c| c.multiplicity == 1));
        assert!(cands.iter().all(|c| c.case_tag == "w4"));
        let sum = verify_balancing(&l, &cands).unwrap();
        assert!(sum.is_zero());
        // the parent reappears among the candidates, with its own labelling
        let found = cands.iter().any(|c| {
            m1.is_isomorphic_labelled(&lab, &c.datum, &c.labelling)
                .unwrap()
                .is_some()
        });
        assert!(found, "the parent must reappear among the regrown candidates");
    }

    #[test]
    fn regrow_of_m2_matches_brute_force() {
        let m1 = m1();
        let lab = m1_labelling(&m1);
        let l = limit_at(&m1, &lab, "z1").unwrap();
        let cands = regrow(&l).unwrap();
        let brute = brute_force_regrow(&l).unwrap();
        let keys_case: BTreeSet<Vec<u8>> = cands
            .iter()
            .map(|c| c.datum.canonical_key_labelled(&c.labelling).unwrap())
            .collect();
        let keys_brute: BTreeSet<Vec<u8>> = brute
            .iter()
            .map(|(d, lab)| d.canonical_key_labelled(lab).unwrap())
            .collect();
        assert_eq!(keys_case, keys_brute);
    }
}
