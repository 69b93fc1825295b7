//! Conflict graphs rebuilt pair by pair from raw coordinates.

use std::collections::BTreeMap;

use voipcell::conflict::EdgeLabel;
use voipcell::geometry::{FrequencyScheme, Point, RadioParams, Topology};
use voipcell::{build_admission_graph, build_coloring_graph, ConflictGraph, GraphMode};

const EPS: f64 = 1e-9;

fn d(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn oracle(topo: &Topology, mode: GraphMode, cs: f64) -> BTreeMap<(usize, usize), EdgeLabel> {
    let delta = topo.radio.delta;
    let side = topo.radio.d_max;
    let ap = |cell: usize| {
        let (row, col) = (cell / topo.dim, cell % topo.dim);
        Point::new(1.5 * side * col as f64, 3f64.sqrt() * side * (row as f64 + 0.5 * (col % 2) as f64))
    };
    let mut out = BTreeMap::new();
    let st = &topo.stations;
    for i in 0..st.len() {
        for j in (i + 1)..st.len() {
            let (ci, cj) = (st[i].cell, st[j].cell);
            let (vi, vj) = (Point::new(st[i].x, st[i].y), Point::new(st[j].x, st[j].y));
            let (ai, aj) = (ap(ci), ap(cj));
            let label = if ci == cj {
                match mode {
                    GraphMode::Admission => Some(EdgeLabel::SameCell),
                    GraphMode::Coloring => (d(vi, vj) > cs + EPS).then_some(EdgeLabel::IntraCsGap),
                }
            } else if topo.cells[ci].channel != topo.cells[cj].channel
                && topo.cells[ci].channel.is_some()
                && topo.cells[cj].channel.is_some()
            {
                None
            } else {
                let nearest = d(vi, vj).min(d(vi, aj)).min(d(ai, vj)).min(d(ai, aj));
                let (iri, irj) = ((1.0 + delta) * d(vi, ai), (1.0 + delta) * d(vj, aj));
                if cs + EPS >= nearest {
                    Some(EdgeLabel::CsCoupled)
                } else if iri > d(vi, vj).min(d(vi, aj)) + EPS
                    || iri > d(ai, vj).min(d(ai, aj)) + EPS
                    || irj > d(vi, vj).min(d(ai, vj)) + EPS
                    || irj > d(vi, aj).min(d(ai, aj)) + EPS
                {
                    Some(EdgeLabel::HiddenNode)
                } else {
                    None
                }
            };
            if let Some(l) = label {
                out.insert((i, j), l);
            }
        }
    }
    out
}

fn edges(g: &ConflictGraph) -> BTreeMap<(usize, usize), EdgeLabel> {
    g.edges().iter().map(|e| ((e.u, e.v), e.label)).collect()
}

#[test]
fn graphs_match_pairwise_reconstruction() {
    let schemes = [FrequencyScheme::Single, FrequencyScheme::ThreeChannel, FrequencyScheme::SevenChannel];
    let mut cases = 0;
    for seed in 0..40u64 {
        let dim = 2 + (seed % 3) as usize;
        let per_cell = 1 + (seed % 4) as usize;
        let scheme = &schemes[(seed % 3) as usize];
        let topo =
            Topology::build(dim, RadioParams::default(), per_cell, seed).unwrap().assign_frequencies(scheme).unwrap();
        if topo.stations.len() > 30 {
            continue;
        }
        for cs in [0.0, 180.0, 250.0, 409.25, 550.0, 800.0] {
            assert_eq!(
                edges(&build_admission_graph(&topo, cs)),
                oracle(&topo, GraphMode::Admission, cs),
                "seed {seed} cs {cs}"
            );
            assert_eq!(
                edges(&build_coloring_graph(&topo, cs)),
                oracle(&topo, GraphMode::Coloring, cs),
                "seed {seed} cs {cs}"
            );
            cases += 1;
        }
    }
    assert!(cases > 100);
}

#[test]
fn neighbor_lists_agree_with_edges() {
    let topo = Topology::build(4, RadioParams::default(), 6, 3)
        .unwrap()
        .assign_frequencies(&FrequencyScheme::ThreeChannel)
        .unwrap();
    let g = build_coloring_graph(&topo, 1.637 * 250.0);
    let mut degree = vec![0; g.len()];
    for e in g.edges() {
        assert!(e.u < e.v);
        degree[e.u] += 1;
        degree[e.v] += 1;
        assert!(g.neighbors(e.u).contains(&e.v) && g.neighbors(e.v).contains(&e.u));
    }
    for (v, &deg) in degree.iter().enumerate() {
        assert_eq!(g.degree(v), deg);
    }
}
