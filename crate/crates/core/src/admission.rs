//! Clique-analytical call admission.
//!
//! Every admitted vertex `v` carries `K_v`, the maximal cliques containing it
//! among admitted vertices, and `m_v`, the largest of their sizes. A new
//! session is admitted only if no neighbor's `m` would exceed `C_max`.
//!
//! The update only touches neighbors of the new vertex. For a neighbor `u`
//! and each `C` in `K_u`: if `C` lies entirely inside the new vertex's
//! neighborhood it grows by the new vertex, otherwise `C` survives and
//! `(C ∩ E_new) ∪ {v_new}` joins the family. Pruning non-maximal sets then
//! yields exactly the maximal cliques of the grown graph containing `u`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::capacity::per_ap_capacity;
use crate::conflict::{edge_between, GraphMode, Session, VertexId};
use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::rng::{stream_rng, ARRIVAL_ORDER_STREAM};

/// A clique as a sorted, duplicate-free vertex list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clique(Vec<VertexId>);

impl Clique {
    pub fn new(vertices: impl IntoIterator<Item = VertexId>) -> Self {
        let mut v: Vec<_> = vertices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn singleton(v: VertexId) -> Self {
        Self(vec![v])
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// `self ⊆ other`, by merge over the sorted lists.
    pub fn is_subset_of(&self, other: &Clique) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        self.0.iter().all(|x| it.by_ref().any(|y| y == x))
    }

    fn with(&self, v: VertexId) -> Self {
        let mut out = self.0.clone();
        if let Err(pos) = out.binary_search(&v) {
            out.insert(pos, v);
        }
        Self(out)
    }

    fn intersect_with(&self, set: &BTreeSet<VertexId>, v: VertexId) -> Self {
        Self::new(self.0.iter().copied().filter(|x| set.contains(x)).chain([v]))
    }
}

/// Keeps only the inclusion-maximal sets; duplicates collapse to one.
/// Output is sorted.
pub fn no_redundancy(mut family: Vec<Clique>) -> Vec<Clique> {
    family.sort_unstable();
    family.dedup();
    // Longer sets first so a set can only be covered by something earlier.
    family.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<Clique> = Vec::with_capacity(family.len());
    for c in family {
        if !kept.iter().any(|k| k.len() > c.len() && c.is_subset_of(k)) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// `K_v` together with `m_v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueFamily {
    pub cliques: Vec<Clique>,
    pub max_size: usize,
}

impl CliqueFamily {
    fn from_cliques(cliques: Vec<Clique>) -> Self {
        let max_size = cliques.iter().map(Clique::len).max().unwrap_or(0);
        Self { cliques, max_size }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Admitted,
    Rejected,
}

/// Admitted vertices, the graph among them and their clique families.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissionState {
    neighbors: BTreeMap<VertexId, BTreeSet<VertexId>>,
    families: BTreeMap<VertexId, CliqueFamily>,
}

impl AdmissionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_admitted(&self, v: VertexId) -> bool {
        self.families.contains_key(&v)
    }

    pub fn admitted(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.families.keys().copied()
    }

    pub fn admitted_count(&self) -> usize {
        self.families.len()
    }

    pub fn family(&self, v: VertexId) -> Option<&CliqueFamily> {
        self.families.get(&v)
    }

    /// Neighbors of an admitted vertex among admitted vertices.
    pub fn neighbors(&self, v: VertexId) -> Option<&BTreeSet<VertexId>> {
        self.neighbors.get(&v)
    }

    /// `m_v` for an admitted vertex.
    pub fn max_clique_size_at(&self, v: VertexId) -> Result<usize> {
        self.families.get(&v).map(|f| f.max_size).ok_or(Error::UnknownVertex(v))
    }

    /// Largest `m_v` over all admitted vertices (0 when empty).
    pub fn max_clique_size(&self) -> usize {
        self.families.values().map(|f| f.max_size).max().unwrap_or(0)
    }

    /// Canonical serialization; equal states serialize to equal strings.
    pub fn serialize(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// Tries to admit `v` whose conflicts with admitted vertices are
    /// `neighbors`. On rejection `self` is left untouched.
    pub fn admit(&mut self, v: VertexId, neighbors: &[VertexId], c_max: usize) -> Result<Decision> {
        if c_max < 1 {
            return Err(Error::InvalidParameter("C_max must be >= 1".into()));
        }
        if self.is_admitted(v) {
            return Err(Error::DuplicateVertex(v));
        }
        let e_new: BTreeSet<VertexId> = neighbors.iter().copied().collect();
        if let Some(&bad) = e_new.iter().find(|&&u| u == v || !self.is_admitted(u)) {
            return Err(Error::UnknownNeighbor(bad));
        }

        // Prospective families are staged; nothing is written until every
        // neighbor has passed the cap.
        let mut staged: Vec<(VertexId, CliqueFamily)> = Vec::with_capacity(e_new.len());
        for &u in &e_new {
            let current = &self.families[&u];
            let mut next = Vec::with_capacity(current.cliques.len() * 2);
            for c in &current.cliques {
                if c.vertices().iter().all(|x| e_new.contains(x)) {
                    next.push(c.with(v));
                } else {
                    next.push(c.clone());
                    next.push(c.intersect_with(&e_new, v));
                }
            }
            let family = CliqueFamily::from_cliques(no_redundancy(next));
            if family.max_size > c_max {
                return Ok(Decision::Rejected);
            }
            staged.push((u, family));
        }

        let own = if e_new.is_empty() {
            vec![Clique::singleton(v)]
        } else {
            no_redundancy(
                staged.iter().flat_map(|(_, f)| f.cliques.iter()).filter(|c| c.contains(v)).cloned().collect(),
            )
        };
        let own = CliqueFamily::from_cliques(own);
        if own.max_size > c_max {
            return Ok(Decision::Rejected);
        }

        for (u, family) in staged {
            self.families.insert(u, family);
            self.neighbors.get_mut(&u).expect("admitted").insert(v);
        }
        self.families.insert(v, own);
        self.neighbors.insert(v, e_new);
        Ok(Decision::Admitted)
    }
}

/// One processed admission request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub request_index: usize,
    pub station_id: usize,
    pub cell_id: usize,
    pub decision: Decision,
    pub admitted_total: usize,
    pub max_m_after: usize,
}

#[derive(Debug, Clone)]
pub struct AdmissionReport {
    pub c_max: usize,
    pub cs_range: f64,
    pub dim: usize,
    pub records: Vec<AdmissionRecord>,
    /// Admitted sessions per cell id.
    pub per_ap: Vec<usize>,
    /// Wall time of each decision; kept out of the CSV/JSON bodies.
    pub decision_times: Vec<Duration>,
}

/// Aggregate view of a report, written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionSummary {
    pub c_max: usize,
    pub cs_range: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub candidates: usize,
    pub admitted_total: usize,
    pub per_ap_capacity: f64,
    pub per_ap: Vec<usize>,
    pub max_clique_size: usize,
}

impl AdmissionReport {
    pub fn admitted_total(&self) -> usize {
        self.records.last().map_or(0, |r| r.admitted_total)
    }

    pub fn summary(&self) -> AdmissionSummary {
        AdmissionSummary {
            c_max: self.c_max,
            cs_range: self.cs_range,
            dim: self.dim,
            candidates: self.records.len(),
            admitted_total: self.admitted_total(),
            per_ap_capacity: per_ap_capacity(self.admitted_total() as f64, self.dim),
            per_ap: self.per_ap.clone(),
            max_clique_size: self.records.last().map_or(0, |r| r.max_m_after),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("utf8 csv")
    }
}

/// All stations of the topology in a uniformly random arrival order.
pub fn shuffled_candidates(topology: &Topology, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..topology.stations.len()).collect();
    order.shuffle(&mut stream_rng(seed, ARRIVAL_ORDER_STREAM));
    order
}

/// Runs the admission controller over `candidates` (station ids) in order.
/// Conflicts are evaluated lazily against the already-admitted sessions;
/// rejected candidates are dropped for good.
pub fn run_admission_stream(
    topology: &Topology,
    cs_range: f64,
    candidates: &[usize],
    c_max: usize,
) -> Result<AdmissionReport> {
    let mut state = AdmissionState::new();
    let mut admitted: Vec<Session> = Vec::new();
    let mut per_ap = vec![0; topology.cells.len()];
    let mut records = Vec::with_capacity(candidates.len());
    let mut times = Vec::with_capacity(candidates.len());
    let mut max_m = 0;

    for (request_index, &station_id) in candidates.iter().enumerate() {
        if station_id >= topology.stations.len() {
            return Err(Error::InvalidParameter(format!("unknown station {station_id}")));
        }
        let started = Instant::now();
        let session = Session::from_station(topology, station_id);
        let neighbors: Vec<VertexId> = admitted
            .iter()
            .filter(|s| edge_between(GraphMode::Admission, topology, s, &session, cs_range).is_some())
            .map(|s| s.vertex_id)
            .collect();
        let decision = state.admit(session.vertex_id, &neighbors, c_max)?;
        if decision == Decision::Admitted {
            max_m = max_m.max(state.max_clique_size_at(session.vertex_id)?);
            for u in &neighbors {
                max_m = max_m.max(state.max_clique_size_at(*u)?);
            }
            per_ap[session.ap_cell_id] += 1;
            admitted.push(session.clone());
        }
        times.push(started.elapsed());
        records.push(AdmissionRecord {
            request_index,
            station_id,
            cell_id: session.ap_cell_id,
            decision,
            admitted_total: admitted.len(),
            max_m_after: max_m,
        });
    }

    Ok(AdmissionReport { c_max, cs_range, dim: topology.dim, records, per_ap, decision_times: times })
}
