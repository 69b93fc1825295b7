//! Conflict graphs over VoIP sessions.
//!
//! One vertex per bidirectional session (client station plus its AP). Two
//! graph flavours share the same cross-cell test:
//!
//! * [`GraphMode::Admission`]: same-cell sessions always conflict, since they
//!   share one AP's airtime.
//! * [`GraphMode::Coloring`]: same-cell sessions conflict only when the two
//!   clients are out of carrier-sense range of each other.
//!
//! Cross-cell edges are only drawn between cells that may share a channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{interference_range, Point, Topology, DIST_EPS};

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub vertex_id: VertexId,
    pub station_id: usize,
    pub ap_cell_id: usize,
    pub link_length: f64,
    pub client: Point,
    pub ap: Point,
}

impl Session {
    /// Session for station `station_id`, using the station id as vertex id.
    pub fn from_station(topology: &Topology, station_id: usize) -> Self {
        let st = &topology.stations[station_id];
        let ap = topology.ap_position(st.cell);
        Self {
            vertex_id: st.id,
            station_id: st.id,
            ap_cell_id: st.cell,
            link_length: st.position().distance(ap),
            client: st.position(),
            ap,
        }
    }
}

/// All sessions of a topology, indexed by station id.
pub fn sessions_of(topology: &Topology) -> Vec<Session> {
    (0..topology.stations.len()).map(|s| Session::from_station(topology, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLabel {
    SameCell,
    CsCoupled,
    HiddenNode,
    IntraCsGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conflict {
    None,
    CsCoupled,
    HiddenNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Admission,
    Coloring,
}

/// Cross-cell interference test between two sessions in different cells.
///
/// `CsCoupled` when any pair of their four nodes is within `cs_range`
/// (inclusive). Otherwise `HiddenNode` when some receiver lies strictly
/// inside the interference range of its own link with respect to a node of
/// the other session.
pub fn conflict_test(a: &Session, b: &Session, delta: f64, cs_range: f64) -> Result<Conflict> {
    if a.ap_cell_id == b.ap_cell_id {
        return Err(Error::SameCell(a.vertex_id, b.vertex_id));
    }
    Ok(classify(a, b, delta, cs_range))
}

fn classify(a: &Session, b: &Session, delta: f64, cs_range: f64) -> Conflict {
    let cc = a.client.distance(b.client);
    let ca = a.client.distance(b.ap);
    let ac = a.ap.distance(b.client);
    let aa = a.ap.distance(b.ap);

    if cs_range + DIST_EPS >= cc.min(ca).min(ac).min(aa) {
        return Conflict::CsCoupled;
    }

    let ir_a = interference_range(a.link_length, delta);
    let ir_b = interference_range(b.link_length, delta);
    // Both ends of a session share the link length, hence the same IR.
    let hidden = ir_a > cc.min(ca) + DIST_EPS
        || ir_a > ac.min(aa) + DIST_EPS
        || ir_b > cc.min(ac) + DIST_EPS
        || ir_b > ca.min(aa) + DIST_EPS;
    if hidden {
        Conflict::HiddenNode
    } else {
        Conflict::None
    }
}

/// Label of the edge between two sessions under `mode`, if any.
///
/// Cross-cell pairs in cells known to use different channels never conflict.
pub fn edge_between(
    mode: GraphMode,
    topology: &Topology,
    a: &Session,
    b: &Session,
    cs_range: f64,
) -> Option<EdgeLabel> {
    if a.ap_cell_id == b.ap_cell_id {
        return match mode {
            GraphMode::Admission => Some(EdgeLabel::SameCell),
            GraphMode::Coloring => (a.client.distance(b.client) > cs_range + DIST_EPS).then_some(EdgeLabel::IntraCsGap),
        };
    }
    if !topology.cells_share_channel(a.ap_cell_id, b.ap_cell_id) {
        return None;
    }
    match classify(a, b, topology.radio.delta, cs_range) {
        Conflict::None => None,
        Conflict::CsCoupled => Some(EdgeLabel::CsCoupled),
        Conflict::HiddenNode => Some(EdgeLabel::HiddenNode),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub label: EdgeLabel,
}

/// Immutable conflict graph with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    pub mode: GraphMode,
    pub cs_range: f64,
    sessions: Vec<Session>,
    neighbors: Vec<Vec<VertexId>>,
    /// Sorted by `(u, v)` with `u < v`.
    edges: Vec<Edge>,
}

impl ConflictGraph {
    /// Builds a graph over `sessions`, whose vertex ids must be `0..len`.
    pub fn build(mode: GraphMode, topology: &Topology, sessions: Vec<Session>, cs_range: f64) -> Self {
        debug_assert!(sessions.iter().enumerate().all(|(i, s)| s.vertex_id == i));
        let n = sessions.len();
        let edges: Vec<Edge> = (0..n)
            .into_par_iter()
            .flat_map_iter(|u| {
                let sessions = &sessions;
                ((u + 1)..n).filter_map(move |v| {
                    edge_between(mode, topology, &sessions[u], &sessions[v], cs_range).map(|label| Edge { u, v, label })
                })
            })
            .collect();
        Self::from_edges(mode, cs_range, sessions, edges)
    }

    fn from_edges(mode: GraphMode, cs_range: f64, sessions: Vec<Session>, mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        let mut neighbors = vec![Vec::new(); sessions.len()];
        for e in &edges {
            neighbors[e.u].push(e.v);
            neighbors[e.v].push(e.u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { mode, cs_range, sessions, neighbors, edges }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn session(&self, v: VertexId) -> &Session {
        &self.sessions[v]
    }

    /// Sorted neighbor set `E_v`.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors[v].len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, a: VertexId, b: VertexId) -> Option<EdgeLabel> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&(u, v))).ok().map(|i| self.edges[i].label)
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn to_json(&self) -> String {
        let export = GraphExport {
            mode: self.mode,
            cs_range: self.cs_range,
            vertices: self
                .sessions
                .iter()
                .map(|s| VertexExport { id: s.vertex_id, station: s.station_id, cell: s.ap_cell_id })
                .collect(),
            edges: self.edges.iter().map(|e| (e.u, e.v, e.label)).collect(),
        };
        serde_json::to_string_pretty(&export).expect("graph serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphExport {
    pub mode: GraphMode,
    pub cs_range: f64,
    pub vertices: Vec<VertexExport>,
    pub edges: Vec<(VertexId, VertexId, EdgeLabel)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VertexExport {
    pub id: VertexId,
    pub station: usize,
    pub cell: usize,
}

/// Admission-mode graph over every station of the topology.
pub fn build_admission_graph(topology: &Topology, cs_range: f64) -> ConflictGraph {
    ConflictGraph::build(GraphMode::Admission, topology, sessions_of(topology), cs_range)
}

/// Coloring-mode graph over every station of the topology.
pub fn build_coloring_graph(topology: &Topology, cs_range: f64) -> ConflictGraph {
    ConflictGraph::build(GraphMode::Coloring, topology, sessions_of(topology), cs_range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FrequencyScheme, RadioParams};
    use proptest::prelude::*;

    fn session(id: usize, cell: usize, client: Point, ap: Point) -> Session {
        Session { vertex_id: id, station_id: id, ap_cell_id: cell, link_length: client.distance(ap), client, ap }
    }

    #[test]
    fn far_sessions_do_not_conflict() {
        // Two cells' nearest points are 866 m apart; links at most 250 m.
        let a = session(0, 0, Point::new(250.0, 0.0), Point::new(0.0, 0.0));
        let b = session(1, 1, Point::new(1116.0, 0.0), Point::new(1366.0, 0.0));
        assert_eq!(conflict_test(&a, &b, 0.78, 550.0).unwrap(), Conflict::None);
    }

    #[test]
    fn co_located_clients_are_cs_coupled() {
        let a = session(0, 0, Point::new(200.0, 0.0), Point::new(0.0, 0.0));
        let b = session(1, 1, Point::new(200.0, 0.0), Point::new(400.0, 0.0));
        for cs in [0.0, 10.0, 550.0] {
            assert_eq!(conflict_test(&a, &b, 0.78, cs).unwrap(), Conflict::CsCoupled);
        }
    }

    #[test]
    fn hidden_node_without_carrier_sense() {
        // clients 300 m apart, APs on the far sides, IR = 445 > 300
        let a = session(0, 0, Point::new(0.0, 0.0), Point::new(-250.0, 0.0));
        let b = session(1, 1, Point::new(300.0, 0.0), Point::new(550.0, 0.0));
        assert_eq!(conflict_test(&a, &b, 0.78, 0.0).unwrap(), Conflict::HiddenNode);
    }

    #[test]
    fn same_cell_pair_is_rejected() {
        let a = session(0, 3, Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let b = session(1, 3, Point::new(5.0, 0.0), Point::new(10.0, 0.0));
        assert_eq!(conflict_test(&a, &b, 0.78, 550.0), Err(Error::SameCell(0, 1)));
    }

    #[test]
    fn eq5_is_inclusive_and_eq6_strict() {
        let a = session(0, 0, Point::new(0.0, 0.0), Point::new(-100.0, 0.0));
        let b = session(1, 1, Point::new(300.0, 0.0), Point::new(400.0, 0.0));
        // nearest node pair is exactly 300 m
        assert_eq!(conflict_test(&a, &b, 0.78, 300.0).unwrap(), Conflict::CsCoupled);
        // IR = 2 * 100 = 200 < 300 for delta = 1, and exactly 300 for delta = 2
        assert_eq!(conflict_test(&a, &b, 1.0, 299.0).unwrap(), Conflict::None);
        assert_eq!(conflict_test(&a, &b, 2.0, 299.0).unwrap(), Conflict::None);
        assert_eq!(conflict_test(&a, &b, 2.01, 299.0).unwrap(), Conflict::HiddenNode);
    }

    #[test]
    fn single_cell_admission_graph_is_complete() {
        let t = Topology::build(1, RadioParams::default(), 12, 7).unwrap();
        let g = build_admission_graph(&t, 550.0);
        assert_eq!(g.edge_count(), 66);
        assert!(g.edges().iter().all(|e| e.label == EdgeLabel::SameCell));
        assert!((0..12).all(|v| g.degree(v) == 11));
    }

    #[test]
    fn empty_topology_gives_empty_graph() {
        let t = Topology::build(3, RadioParams::default(), 0, 7).unwrap();
        let g = build_admission_graph(&t, 550.0);
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn distant_cells_of_four_by_four_stay_disconnected() {
        let t = Topology::build(4, RadioParams::default(), 12, 21).unwrap();
        // pick a set of cells whose hexagons are pairwise >= 866 m apart
        let mut chosen: Vec<usize> = Vec::new();
        for c in 0..16 {
            if chosen.iter().all(|&o| t.hexagon(c).distance_to(&t.hexagon(o)) >= 866.0) {
                chosen.push(c);
            }
        }
        assert!(chosen.len() >= 3, "{chosen:?}");
        let g = build_admission_graph(&t, 550.0);
        for e in g.edges() {
            let (cu, cv) = (g.session(e.u).ap_cell_id, g.session(e.v).ap_cell_id);
            if cu != cv {
                assert!(!(chosen.contains(&cu) && chosen.contains(&cv)), "edge {e:?}");
            }
        }
    }

    #[test]
    fn wide_cs_range_has_no_intra_cell_gaps() {
        let t = Topology::build(3, RadioParams::default(), 20, 2).unwrap();
        let g = build_coloring_graph(&t, 500.0);
        assert!(g.edges().iter().all(|e| e.label != EdgeLabel::IntraCsGap));
        let g = build_coloring_graph(&t, 100.0);
        assert!(g.edges().iter().any(|e| e.label == EdgeLabel::IntraCsGap));
    }

    #[test]
    fn different_channels_isolate_cells() {
        let t = Topology::build(4, RadioParams::default(), 6, 5)
            .unwrap()
            .assign_frequencies(&FrequencyScheme::ThreeChannel)
            .unwrap();
        for g in [build_admission_graph(&t, 550.0), build_coloring_graph(&t, 409.25)] {
            for e in g.edges() {
                let (cu, cv) = (g.session(e.u).ap_cell_id, g.session(e.v).ap_cell_id);
                assert_eq!(t.cells[cu].channel, t.cells[cv].channel);
            }
        }
    }

    #[test]
    fn json_export_is_sorted() {
        let t = Topology::build(2, RadioParams::default(), 3, 1).unwrap();
        let g = build_admission_graph(&t, 550.0);
        let v: GraphExport = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v.vertices.len(), 12);
        assert!(v.edges.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        assert!(v.edges.iter().all(|e| e.0 < e.1));
    }

    #[test]
    fn label_lookup_matches_neighbors() {
        let t = Topology::build(3, RadioParams::default(), 4, 9).unwrap();
        let g = build_coloring_graph(&t, 300.0);
        for u in 0..g.len() {
            for v in 0..g.len() {
                assert_eq!(g.has_edge(u, v), g.label(u, v).is_some());
            }
            assert!(!g.has_edge(u, u));
        }
    }

    fn arb_session(id: usize, cell: usize) -> impl Strategy<Value = Session> {
        (-600.0..600.0f64, -600.0..600.0f64, 0.0..250.0f64, 0.0..std::f64::consts::TAU).prop_map(
            move |(x, y, len, ang)| {
                let ap = Point::new(x, y);
                let client = Point::new(x + len * ang.cos(), y + len * ang.sin());
                session(id, cell, client, ap)
            },
        )
    }

    proptest! {
        #[test]
        fn conflict_test_is_symmetric(a in arb_session(0, 0), b in arb_session(1, 1), cs in 0.0..700.0f64) {
            prop_assert_eq!(conflict_test(&a, &b, 0.78, cs).unwrap(), conflict_test(&b, &a, 0.78, cs).unwrap());
        }

        #[test]
        fn larger_cs_range_keeps_coupling(a in arb_session(0, 0), b in arb_session(1, 1), cs in 0.0..600.0f64, extra in 0.0..300.0f64) {
            let small = conflict_test(&a, &b, 0.78, cs).unwrap();
            let large = conflict_test(&a, &b, 0.78, cs + extra).unwrap();
            if small == Conflict::CsCoupled {
                prop_assert_eq!(large, Conflict::CsCoupled);
            }
            // an edge never disappears as cs_range grows
            if small != Conflict::None {
                prop_assert_ne!(large, Conflict::None);
            }
        }
    }
}
