//! Two-layer (frequency, time slot) coloring of a coloring-mode conflict
//! graph.
//!
//! Rules enforced by [`color`] and checked by [`validate_assignment`]:
//!
//! 1. first-layer colors lie in `[0, m)`, second-layer colors in `[0, n)`;
//! 2. all vertices of a cell share the cell's first-layer color;
//! 3. a cell puts at most `k = floor(C_AP_1 / n)` vertices in any one slot, and
//!    same-cell vertices joined by a carrier-sense gap edge use different slots;
//! 4. endpoints of a cross-cell edge use different (frequency, slot) pairs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflict::{build_coloring_graph, ConflictGraph, EdgeLabel, GraphMode, VertexId};
use crate::error::{Error, Result};
use crate::geometry::{sector_cs_range, FrequencyScheme, RadioParams, Topology};
use crate::rng::trial_seed;

/// Sessions one cell may place in a single slot.
pub fn k_per_slot(c_ap_1: u32, n: u32) -> u32 {
    c_ap_1 / n.max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyPlan {
    /// Channel per cell id, taken from the topology.
    Fixed(Vec<Option<u32>>),
    /// Each cell picks its channel when its first vertex is colored.
    Free,
}

impl FrequencyPlan {
    pub fn from_topology(topology: &Topology) -> Self {
        Self::Fixed(topology.cells.iter().map(|c| c.channel).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoTdmaParams {
    /// First-layer colors (frequencies).
    pub m: u32,
    /// Second-layer colors (slots).
    pub n: u32,
    pub c_ap_1: u32,
    pub plan: FrequencyPlan,
}

impl CoTdmaParams {
    pub fn k(&self) -> u32 {
        k_per_slot(self.c_ap_1, self.n)
    }

    fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < 1 {
            return Err(Error::InvalidParameter(format!("need m >= 1 and n >= 1, got m = {}, n = {}", self.m, self.n)));
        }
        Ok(())
    }
}

/// Frequency per cell, slot per vertex, and per-(cell, slot) occupancy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorAssignment {
    pub cell_first_color: BTreeMap<usize, u32>,
    pub vertex_second_color: Vec<Option<u32>>,
    occupancy: BTreeMap<(usize, u32), u32>,
}

impl ColorAssignment {
    pub fn empty(vertices: usize) -> Self {
        Self {
            cell_first_color: BTreeMap::new(),
            vertex_second_color: vec![None; vertices],
            occupancy: BTreeMap::new(),
        }
    }

    pub fn occupancy(&self, cell: usize, slot: u32) -> u32 {
        self.occupancy.get(&(cell, slot)).copied().unwrap_or(0)
    }

    pub fn occupancies(&self) -> impl Iterator<Item = ((usize, u32), u32)> + '_ {
        self.occupancy.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_colored(&self, v: VertexId) -> bool {
        self.vertex_second_color[v].is_some()
    }

    /// `(frequency, slot)` of a colored vertex.
    pub fn combination(&self, graph: &ConflictGraph, v: VertexId) -> Option<(u32, u32)> {
        let slot = self.vertex_second_color[v]?;
        let cell = graph.session(v).ap_cell_id;
        self.cell_first_color.get(&cell).map(|&f| (f, slot))
    }

    /// Puts `v` (of `cell`) into `slot`, moving it out of its old slot.
    pub fn set_slot(&mut self, cell: usize, v: VertexId, slot: u32) {
        self.clear(cell, v);
        self.vertex_second_color[v] = Some(slot);
        *self.occupancy.entry((cell, slot)).or_default() += 1;
    }

    pub fn clear(&mut self, cell: usize, v: VertexId) {
        if let Some(old) = self.vertex_second_color[v].take() {
            let e = self.occupancy.get_mut(&(cell, old)).expect("occupancy tracks colored vertices");
            *e -= 1;
            if *e == 0 {
                self.occupancy.remove(&(cell, old));
            }
        }
    }

    pub fn colored_count(&self) -> usize {
        self.vertex_second_color.iter().filter(|c| c.is_some()).count()
    }

    /// Export as `{cells: {cell: f}, vertices: {v: {f, t}}}`.
    pub fn to_json(&self, graph: &ConflictGraph) -> String {
        let vertices: BTreeMap<VertexId, ComboExport> = (0..self.vertex_second_color.len())
            .filter_map(|v| self.combination(graph, v).map(|(f, t)| (v, ComboExport { f, t })))
            .collect();
        let export = AssignmentExport { cells: self.cell_first_color.clone(), vertices };
        serde_json::to_string_pretty(&export).expect("assignment serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComboExport {
    pub f: u32,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentExport {
    pub cells: BTreeMap<usize, u32>,
    pub vertices: BTreeMap<VertexId, ComboExport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColoringResult {
    pub assignment: ColorAssignment,
    pub colored_count: usize,
    pub total: usize,
    pub coverage: f64,
}

/// Vertices by non-increasing degree, ties by ascending id.
pub fn welsh_powell_order(graph: &ConflictGraph) -> Vec<VertexId> {
    let mut order: Vec<VertexId> = (0..graph.len()).collect();
    order.sort_by(|&a, &b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(&b)));
    order
}

/// Greedy two-layer coloring in Welsh–Powell order.
///
/// Each vertex takes the lowest feasible `(frequency, slot)` pair: with a
/// fixed plan the frequency is the cell's and slots are scanned upward; with
/// a free plan pairs are scanned lexicographically and the first colored
/// vertex of a cell fixes that cell's frequency. Vertices with no feasible
/// pair stay uncolored and consume no capacity.
pub fn color(graph: &ConflictGraph, params: &CoTdmaParams) -> Result<ColoringResult> {
    params.validate()?;
    if graph.mode != GraphMode::Coloring {
        return Err(Error::InvalidParameter("coloring needs a coloring-mode graph".into()));
    }
    let mut asg = ColorAssignment::empty(graph.len());

    if let FrequencyPlan::Fixed(channels) = &params.plan {
        let cells: BTreeSet<usize> = graph.sessions().iter().map(|s| s.ap_cell_id).collect();
        for cell in cells {
            let ch = channels.get(cell).copied().flatten().ok_or(Error::PlanMissing(cell))?;
            if ch >= params.m {
                return Err(Error::InvalidParameter(format!(
                    "cell {cell} carries channel {ch}, outside [0, {})",
                    params.m
                )));
            }
            asg.cell_first_color.insert(cell, ch);
        }
    }

    let k = params.k();
    let mut blocked: BTreeSet<(u32, u32)> = BTreeSet::new();
    for v in welsh_powell_order(graph) {
        let cell = graph.session(v).ap_cell_id;
        blocked.clear();
        blocked.extend(graph.neighbors(v).iter().filter_map(|&u| asg.combination(graph, u)));

        let frequencies: Vec<u32> = match asg.cell_first_color.get(&cell) {
            Some(&f) => vec![f],
            None => (0..params.m).collect(),
        };
        let choice = frequencies.iter().find_map(|&f| {
            (0..params.n).find(|&t| asg.occupancy(cell, t) < k && !blocked.contains(&(f, t))).map(|t| (f, t))
        });
        if let Some((f, t)) = choice {
            asg.cell_first_color.entry(cell).or_insert(f);
            asg.set_slot(cell, v, t);
        }
    }

    let colored_count = asg.colored_count();
    let total = graph.len();
    Ok(ColoringResult {
        assignment: asg,
        colored_count,
        total,
        coverage: if total > 0 { colored_count as f64 / total as f64 } else { 0.0 },
    })
}

/// A broken coloring rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    FirstColorOutOfRange { cell: usize, color: u32 },
    SecondColorOutOfRange { vertex: VertexId, color: u32 },
    MissingFirstColor { vertex: VertexId, cell: usize },
    PlanMismatch { cell: usize, planned: Option<u32>, assigned: u32 },
    SlotOverCapacity { cell: usize, slot: u32, count: u32, cap: u32, vertices: Vec<VertexId> },
    OccupancyMismatch { cell: usize, slot: u32, recorded: u32, actual: u32 },
    IntraCellSameSlot { u: VertexId, v: VertexId, slot: u32 },
    SharedCombination { u: VertexId, v: VertexId, first: u32, second: u32 },
}

impl Violation {
    /// Which of the four coloring rules is broken.
    pub fn constraint(&self) -> u8 {
        match self {
            Self::FirstColorOutOfRange { .. } | Self::SecondColorOutOfRange { .. } => 1,
            Self::MissingFirstColor { .. } | Self::PlanMismatch { .. } => 2,
            Self::SlotOverCapacity { .. } | Self::OccupancyMismatch { .. } | Self::IntraCellSameSlot { .. } => 3,
            Self::SharedCombination { .. } => 4,
        }
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        match self {
            Self::SecondColorOutOfRange { vertex, .. } | Self::MissingFirstColor { vertex, .. } => vec![*vertex],
            Self::SlotOverCapacity { vertices, .. } => vertices.clone(),
            Self::IntraCellSameSlot { u, v, .. } | Self::SharedCombination { u, v, .. } => vec![*u, *v],
            _ => Vec::new(),
        }
    }
}

/// Every rule violation in `asg`; empty iff the assignment is valid.
pub fn validate_assignment(graph: &ConflictGraph, asg: &ColorAssignment, params: &CoTdmaParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = params.k();

    for (&cell, &f) in &asg.cell_first_color {
        if f >= params.m {
            out.push(Violation::FirstColorOutOfRange { cell, color: f });
        }
        if let FrequencyPlan::Fixed(channels) = &params.plan {
            let planned = channels.get(cell).copied().flatten();
            if planned != Some(f) {
                out.push(Violation::PlanMismatch { cell, planned, assigned: f });
            }
        }
    }

    let mut members: BTreeMap<(usize, u32), Vec<VertexId>> = BTreeMap::new();
    for (v, slot) in asg.vertex_second_color.iter().enumerate() {
        let Some(t) = *slot else { continue };
        let cell = graph.session(v).ap_cell_id;
        if t >= params.n {
            out.push(Violation::SecondColorOutOfRange { vertex: v, color: t });
        }
        if !asg.cell_first_color.contains_key(&cell) {
            out.push(Violation::MissingFirstColor { vertex: v, cell });
        }
        members.entry((cell, t)).or_default().push(v);
    }

    for ((cell, slot), vs) in &members {
        let count = vs.len() as u32;
        if count > k {
            out.push(Violation::SlotOverCapacity { cell: *cell, slot: *slot, count, cap: k, vertices: vs.clone() });
        }
    }
    let keys: BTreeSet<(usize, u32)> = members.keys().copied().chain(asg.occupancies().map(|(key, _)| key)).collect();
    for (cell, slot) in keys {
        let actual = members.get(&(cell, slot)).map_or(0, |v| v.len() as u32);
        let recorded = asg.occupancy(cell, slot);
        if actual != recorded {
            out.push(Violation::OccupancyMismatch { cell, slot, recorded, actual });
        }
    }

    for e in graph.edges() {
        let (Some(a), Some(b)) = (asg.combination(graph, e.u), asg.combination(graph, e.v)) else {
            continue;
        };
        if a != b {
            continue;
        }
        if e.label == EdgeLabel::IntraCsGap || graph.session(e.u).ap_cell_id == graph.session(e.v).ap_cell_id {
            out.push(Violation::IntraCellSameSlot { u: e.u, v: e.v, slot: a.1 });
        } else {
            out.push(Violation::SharedCombination { u: e.u, v: e.v, first: a.0, second: a.1 });
        }
    }
    out
}

/// How the carrier-sense range of a sweep point is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsRangeRule {
    /// Fixed values, as multiples of `d_max`, crossed with every `n`.
    Fixed(Vec<f64>),
    /// Sector diameter for each `n`.
    Sector,
}

/// Sector-diameter carrier-sense range for `n` slots. The pure-TDMA case
/// `n = C_AP_1` (one session per slot) uses the zero range of `n = 12`.
pub fn sector_cs_range_for(n: u32, c_ap_1: u32, d_max: f64) -> Result<f64> {
    if n == c_ap_1 && n != 1 {
        return sector_cs_range(12, d_max);
    }
    sector_cs_range(n, d_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(rename = "D")]
    pub dim: usize,
    pub radio: RadioParams,
    pub stations_per_cell: usize,
    pub scheme: FrequencyScheme,
    pub m: u32,
    pub c_ap_1: u32,
    /// Use the topology's channels (`true`) or let the coloring choose.
    pub fixed_plan: bool,
    pub n_values: Vec<u32>,
    pub cs_range: CsRangeRule,
    pub trials: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub cs_range_over_dmax: f64,
    pub trial: u32,
    pub colored: usize,
    pub total: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u32,
    pub cs_range_over_dmax: f64,
    pub trials: u32,
    pub mean_coverage: f64,
    pub min_coverage: f64,
    pub max_coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Mean/min/max coverage per `(n, cs_range)`, in row order.
    pub fn summary(&self) -> Vec<SweepPoint> {
        let mut groups: Vec<SweepPoint> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        for r in &self.rows {
            match groups.last_mut() {
                Some(p) if p.n == r.n && p.cs_range_over_dmax == r.cs_range_over_dmax => {
                    p.trials += 1;
                    p.min_coverage = p.min_coverage.min(r.coverage);
                    p.max_coverage = p.max_coverage.max(r.coverage);
                    *sums.last_mut().expect("paired with groups") += r.coverage;
                }
                _ => {
                    groups.push(SweepPoint {
                        n: r.n,
                        cs_range_over_dmax: r.cs_range_over_dmax,
                        trials: 1,
                        mean_coverage: 0.0,
                        min_coverage: r.coverage,
                        max_coverage: r.coverage,
                    });
                    sums.push(r.coverage);
                }
            }
        }
        for (p, s) in groups.iter_mut().zip(sums) {
            p.mean_coverage = s / f64::from(p.trials);
        }
        groups
    }

    pub fn mean_coverage(&self, n: u32, cs_range_over_dmax: f64) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|p| p.n == n && (p.cs_range_over_dmax - cs_range_over_dmax).abs() < 1e-9)
            .map(|p| p.mean_coverage)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }
}

/// Coverage of the greedy coloring over `(n, cs_range)` pairs and trials.
/// Each trial draws fresh station placements, shared by every `(n, cs_range)`
/// of that trial.
pub fn cs_range_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let d_max = spec.radio.d_max;
    // (n, cs multiple) points in sweep order
    let mut points: Vec<(u32, f64)> = Vec::new();
    for &n in &spec.n_values {
        match &spec.cs_range {
            CsRangeRule::Fixed(values) => points.extend(values.iter().map(|&c| (n, c))),
            CsRangeRule::Sector => points.push((n, sector_cs_range_for(n, spec.c_ap_1, d_max)? / d_max)),
        }
    }

    let per_trial: Vec<Result<Vec<SweepRow>>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let topo =
                Topology::build(spec.dim, spec.radio, spec.stations_per_cell, trial_seed(spec.seed, u64::from(trial)))?
                    .assign_frequencies(&spec.scheme)?;
            let plan = if spec.fixed_plan { FrequencyPlan::from_topology(&topo) } else { FrequencyPlan::Free };
            let mut graphs: Vec<(f64, ConflictGraph)> = Vec::new();
            let mut rows = Vec::with_capacity(points.len());
            for &(n, cs) in &points {
                let idx = match graphs.iter().position(|(c, _)| *c == cs) {
                    Some(i) => i,
                    None => {
                        graphs.push((cs, build_coloring_graph(&topo, cs * d_max)));
                        graphs.len() - 1
                    }
                };
                let params = CoTdmaParams { m: spec.m, n, c_ap_1: spec.c_ap_1, plan: plan.clone() };
                let res = color(&graphs[idx].1, &params)?;
                rows.push(SweepRow {
                    n,
                    cs_range_over_dmax: cs,
                    trial,
                    colored: res.colored_count,
                    total: res.total,
                    coverage: res.coverage,
                });
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    // stable order: sweep point order, then trial
    let rank = |r: &SweepRow| {
        points.iter().position(|&(n, c)| n == r.n && c == r.cs_range_over_dmax).expect("row from a sweep point")
    };
    rows.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.trial.cmp(&b.trial)));
    Ok(SweepReport { rows })
}
