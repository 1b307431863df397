//! File formats. Graphs, metric graphs, gluing datums, morphisms, matrices,
//! regrow candidates and walk traces all round-trip through serde_json.
//! Rationals are `"p/q"` strings; relation blocks are 1-based, sorted
//! ascending, block lists sorted by least element; omitted relation keys mean
//! the discrete partition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datum::{GluingDatum, Labelling};
use crate::deform::{LimitEvent, Trace, TraceStep, WalkResult};
use crate::dtm::{Dtm, Realization};
use crate::elmap::QMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::limits::LimitDatum;
use crate::metric::MetricGraph;
use crate::regrow::RegrowCandidate;
use crate::util::{format_q, normalize_partition, parse_q, Partition, Q};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: String,
    pub ends: [String; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

impl GraphJson {
    pub fn from_graph(g: &Graph) -> GraphJson {
        GraphJson {
            vertices: g.vertices().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| {
                    let [a, b] = g.ends(e).unwrap();
                    EdgeJson { id: e.clone(), ends: [a.to_string(), b.to_string()] }
                })
                .collect(),
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        Graph::new(
            self.vertices.iter().cloned(),
            self.edges
                .iter()
                .map(|e| (e.id.clone(), e.ends[0].clone(), e.ends[1].clone())),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricGraphJson {
    pub graph: GraphJson,
    pub lengths: BTreeMap<String, String>,
}

impl MetricGraphJson {
    pub fn from_metric(m: &MetricGraph) -> MetricGraphJson {
        MetricGraphJson {
            graph: GraphJson::from_graph(&m.model),
            lengths: m.lengths.iter().map(|(k, v)| (k.clone(), format_q(v))).collect(),
        }
    }

    pub fn to_metric(&self) -> Result<MetricGraph> {
        let graph = self.graph.to_graph()?;
        let mut lengths = BTreeMap::new();
        for (k, v) in &self.lengths {
            lengths.insert(k.clone(), parse_q(v)?);
        }
        MetricGraph::new(graph, lengths)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabellingJson {
    /// tree edges in label order (position i has label i+1); limit datums put
    /// a placeholder "-" at the missing label
    pub tree_edge_order: Vec<String>,
    /// one representative quotient edge per skeleton edge, in label order
    pub skeleton_edge_reps: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumJson {
    pub tree: GraphJson,
    pub degree: usize,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labelling: Option<LabellingJson>,
}

fn partition_to_blocks(p: &Partition) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = p
        .iter()
        .map(|&b| (0..32).filter(|i| b & (1 << i) != 0).map(|i| i + 1).collect())
        .collect();
    blocks.sort_by_key(|b: &Vec<usize>| b[0]);
    blocks
}

fn blocks_to_partition(blocks: &[Vec<usize>], at: &str) -> Result<Partition> {
    let mut p = Vec::new();
    for b in blocks {
        let mut mask = 0u32;
        for &i in b {
            if i == 0 || i > 32 {
                return Err(Error::MalformedPartition(at.into(), format!("element {i}")));
            }
            mask |= 1 << (i - 1);
        }
        p.push(mask);
    }
    Ok(normalize_partition(p))
}

impl DatumJson {
    pub fn from_datum(d: &GluingDatum, lab: Option<&Labelling>) -> Result<DatumJson> {
        let labelling = match lab {
            None => None,
            Some(lab) => Some(labelling_to_json(d, lab)?),
        };
        Ok(DatumJson {
            tree: GraphJson::from_graph(&d.tree),
            degree: d.degree,
            relations: d
                .rel
                .iter()
                .map(|(k, p)| (k.clone(), partition_to_blocks(p)))
                .collect(),
            labelling,
        })
    }

    pub fn to_datum(&self) -> Result<(GluingDatum, Option<Labelling>)> {
        let tree = self.tree.to_graph()?;
        let mut rel = BTreeMap::new();
        for (k, blocks) in &self.relations {
            rel.insert(k.clone(), blocks_to_partition(blocks, k)?);
        }
        let datum = GluingDatum::new(tree, self.degree, rel);
        let lab = match &self.labelling {
            None => None,
            Some(lj) => Some(labelling_from_json(&datum, lj)?),
        };
        Ok((datum, lab))
    }
}

pub fn labelling_to_json(d: &GluingDatum, lab: &Labelling) -> Result<LabellingJson> {
    let qt = d.quotient()?;
    let max_tree = lab.tree.values().copied().max().unwrap_or(0);
    let mut tree_edge_order = vec!["-".to_string(); max_tree];
    for (e, &l) in &lab.tree {
        tree_edge_order[l - 1] = e.clone();
    }
    let max_skel = lab.skel.values().copied().max().unwrap_or(0);
    let mut skeleton_edge_reps = vec!["-".to_string(); max_skel];
    for (h, &l) in &lab.skel {
        let rep = qt
            .membership
            .iter()
            .filter(|(_, hid)| *hid == h)
            .map(|(e, _)| e.clone())
            .min()
            .ok_or_else(|| Error::BadInput(format!("empty skeleton edge {h}")))?;
        skeleton_edge_reps[l - 1] = rep;
    }
    Ok(LabellingJson { tree_edge_order, skeleton_edge_reps })
}

pub fn labelling_from_json(d: &GluingDatum, lj: &LabellingJson) -> Result<Labelling> {
    let qt = d.quotient()?;
    let mut tree = BTreeMap::new();
    for (i, e) in lj.tree_edge_order.iter().enumerate() {
        if e == "-" {
            continue;
        }
        if !d.tree.has_edge(e) {
            return Err(Error::UnknownEdge(e.clone()));
        }
        tree.insert(e.clone(), i + 1);
    }
    let mut skel = BTreeMap::new();
    for (i, rep) in lj.skeleton_edge_reps.iter().enumerate() {
        if rep == "-" {
            continue;
        }
        let h = qt
            .membership
            .get(rep)
            .ok_or_else(|| Error::BadInput(format!("{rep} is not a non-dangling quotient edge")))?;
        skel.insert(h.clone(), i + 1);
    }
    Ok(Labelling { tree, skel })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitJson {
    pub datum: DatumJson,
    pub merged_vertex: String,
    pub missing_label: usize,
}

impl LimitJson {
    pub fn from_limit(l: &LimitDatum) -> Result<LimitJson> {
        Ok(LimitJson {
            datum: DatumJson::from_datum(&l.datum, Some(&l.labelling))?,
            merged_vertex: l.merged_vertex.clone(),
            missing_label: l.missing_label,
        })
    }

    pub fn to_limit(&self) -> Result<LimitDatum> {
        let (datum, lab) = self.datum.to_datum()?;
        let labelling =
            lab.ok_or_else(|| Error::BadInput("limit datum needs a labelling".into()))?;
        if !datum.tree.has_vertex(&self.merged_vertex) {
            return Err(Error::UnknownVertex(self.merged_vertex.clone()));
        }
        Ok(LimitDatum {
            datum,
            merged_vertex: self.merged_vertex.clone(),
            missing_label: self.missing_label,
            labelling,
            provenance: None,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtmJson {
    pub source: GraphJson,
    pub target: GraphJson,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
    pub index: BTreeMap<String, usize>,
}

impl DtmJson {
    pub fn from_dtm(d: &Dtm) -> DtmJson {
        DtmJson {
            source: GraphJson::from_graph(&d.source),
            target: GraphJson::from_graph(&d.target),
            vertex_map: d.vertex_map.clone(),
            edge_map: d.edge_map.clone(),
            index: d.index.clone(),
        }
    }

    pub fn to_dtm(&self) -> Result<Dtm> {
        Ok(Dtm {
            source: self.source.to_graph()?,
            target: self.target.to_graph()?,
            vertex_map: self.vertex_map.clone(),
            edge_map: self.edge_map.clone(),
            index: self.index.clone(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<String>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &QMatrix) -> MatrixJson {
        MatrixJson {
            rows: m.row_labels.clone(),
            cols: m.col_labels.clone(),
            entries: m
                .entries
                .iter()
                .map(|row| row.iter().map(format_q).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateJson {
    pub datum: DatumJson,
    pub k: u64,
    pub case_tag: String,
    pub det: String,
}

impl CandidateJson {
    pub fn from_candidate(c: &RegrowCandidate) -> Result<CandidateJson> {
        Ok(CandidateJson {
            datum: DatumJson::from_datum(&c.datum, Some(&c.labelling))?,
            k: c.multiplicity,
            case_tag: c.case_tag.clone(),
            det: format_q(&c.det),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitEventJson {
    pub edge: String,
    pub edge_label: usize,
    pub limit: DatumJson,
    pub incumbent_det: String,
    pub successor_det: String,
    pub case_tags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStepJson {
    pub datum: DatumJson,
    pub entry: Vec<String>,
    pub exit: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<LimitEventJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceJson {
    pub start: Vec<String>,
    pub target: Vec<String>,
    pub steps: Vec<TraceStepJson>,
}

fn qs(v: &[Q]) -> Vec<String> {
    v.iter().map(format_q).collect()
}

impl TraceJson {
    pub fn from_trace(t: &Trace) -> Result<TraceJson> {
        let steps = t
            .steps
            .iter()
            .map(|s: &TraceStep| -> Result<TraceStepJson> {
                let event = match &s.event {
                    None => None,
                    Some(LimitEvent {
                        edge,
                        edge_label,
                        limit,
                        incumbent_det,
                        successor_det,
                        case_tags,
                    }) => Some(LimitEventJson {
                        edge: edge.clone(),
                        edge_label: *edge_label,
                        limit: DatumJson::from_datum(limit, None)?,
                        incumbent_det: format_q(incumbent_det),
                        successor_det: format_q(successor_det),
                        case_tags: case_tags.clone(),
                    }),
                };
                Ok(TraceStepJson {
                    datum: DatumJson::from_datum(&s.datum, Some(&s.labelling))?,
                    entry: qs(&s.entry),
                    exit: qs(&s.exit),
                    event,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceJson { start: qs(&t.start), target: qs(&t.target), steps })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationJson {
    pub morphism: DtmJson,
    pub target_lengths: BTreeMap<String, String>,
    pub source_lengths: BTreeMap<String, String>,
}

impl RealizationJson {
    pub fn from_realization(r: &Realization) -> RealizationJson {
        RealizationJson {
            morphism: DtmJson::from_dtm(&r.model),
            target_lengths: r
                .target_lengths
                .iter()
                .map(|(k, v)| (k.clone(), format_q(v)))
                .collect(),
            source_lengths: r
                .source_lengths
                .iter()
                .map(|(k, v)| (k.clone(), format_q(v)))
                .collect(),
        }
    }

    pub fn to_realization(&self) -> Result<Realization> {
        let model = self.morphism.to_dtm()?;
        let mut target_lengths = BTreeMap::new();
        for (k, v) in &self.target_lengths {
            target_lengths.insert(k.clone(), parse_q(v)?);
        }
        model.tropicalize(&target_lengths)
    }
}

/// The walk output written by `realize --out`.
pub fn walk_result_json(res: &WalkResult) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "datum": DatumJson::from_datum(&res.datum, Some(&res.labelling))?,
        "tree_lengths": res.tree_lengths.iter().map(|(k, v)| (k.clone(), format_q(v))).collect::<BTreeMap<_, _>>(),
        "skeleton_to_type": res.skel_to_h,
        "trace": TraceJson::from_trace(&res.trace)?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::test_fixtures::{m1, m1_labelling};

    #[test]
    fn datum_round_trip_with_labelling() {
        let d = m1();
        let lab = m1_labelling(&d);
        let j = DatumJson::from_datum(&d, Some(&lab)).unwrap();
        let text = serde_json::to_string_pretty(&j).unwrap();
        let back: DatumJson = serde_json::from_str(&text).unwrap();
        let (d2, lab2) = back.to_datum().unwrap();
        assert_eq!(d, d2);
        assert_eq!(Some(lab), lab2);
    }

    #[test]
    fn metric_round_trip() {
        let g = crate::datum::test_fixtures::graph(
            &["a", "b"],
            &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")],
        );
        let lengths: BTreeMap<String, Q> = [("e1", "1"), ("e2", "3/2"), ("e3", "2")]
            .iter()
            .map(|(k, v)| (k.to_string(), parse_q(v).unwrap()))
            .collect();
        let m = MetricGraph::new(g, lengths).unwrap();
        let j = MetricGraphJson::from_metric(&m);
        let back = serde_json::from_str::<MetricGraphJson>(&serde_json::to_string(&j).unwrap())
            .unwrap()
            .to_metric()
            .unwrap();
        assert_eq!(m, back);
    }
}
