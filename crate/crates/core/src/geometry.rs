//! Multi-cell hexagonal topologies, station placement, virtual distances and
//! frequency plans.
//!
//! Cells are flat-top regular hexagons with side `d_max`, laid out on a
//! `D x D` odd-column offset grid. Cell `id = row * D + col`. An AP sits at
//! every cell center and every station associates with the cell whose
//! hexagon contains it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for distance comparisons, in meters.
pub const DIST_EPS: f64 = 1e-9;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Radio and cell-size parameters. Distances in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Center-to-corner cell radius, equal to the hexagon side.
    pub d_max: f64,
    pub tx_range: f64,
    pub cs_range: f64,
    /// Interference margin in `IR = (1 + delta) * link_length`.
    pub delta: f64,
    /// Reference path-loss exponent used to map power to virtual distance.
    pub path_loss_exponent: f64,
    /// Power scale in `P = constant / d^exponent`.
    pub path_loss_constant: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            d_max: 250.0,
            tx_range: 250.0,
            cs_range: 550.0,
            delta: 0.78,
            path_loss_exponent: 4.0,
            path_loss_constant: 1.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return fail(format!("d_max must be positive, got {}", self.d_max));
        }
        if !(self.cs_range >= 0.0) {
            return fail(format!("cs_range must be non-negative, got {}", self.cs_range));
        }
        if !(self.delta > -1.0) {
            return fail(format!("delta must exceed -1, got {}", self.delta));
        }
        if !(self.path_loss_exponent > 0.0) {
            return fail(format!("path_loss_exponent must be positive, got {}", self.path_loss_exponent));
        }
        if !(self.path_loss_constant > 0.0) {
            return fail(format!("path_loss_constant must be positive, got {}", self.path_loss_constant));
        }
        if self.tx_range + DIST_EPS < self.d_max {
            return fail(format!(
                "tx_range {} is shorter than d_max {}; edge stations could not reach their AP",
                self.tx_range, self.d_max
            ));
        }
        Ok(())
    }

    /// Received power at virtual distance `distance`.
    pub fn distance_to_power(&self, distance: f64) -> f64 {
        self.path_loss_constant / distance.powf(self.path_loss_exponent)
    }

    /// Virtual distance implied by a received power level.
    pub fn virtual_distance(&self, power_received: f64) -> Result<f64> {
        if !(power_received > 0.0) {
            return Err(Error::NonPositivePower(power_received));
        }
        Ok((self.path_loss_constant / power_received).powf(1.0 / self.path_loss_exponent))
    }
}

/// Radius around a receiver inside which a foreign transmission corrupts
/// reception of a link of length `link_length`.
pub fn interference_range(link_length: f64, delta: f64) -> f64 {
    (1.0 + delta) * link_length
}

/// Carrier-sense range equal to the diameter of one of `n` sectors of a cell.
///
/// Only the sector counts of the standard sectorization table are defined.
pub fn sector_cs_range(n: u32, d_max: f64) -> Result<f64> {
    let factor = match n {
        1 => 2.0,
        2 => 13f64.sqrt() / 2.0,
        3 => SQRT3,
        4 => 7f64.sqrt() / 2.0,
        6 => 1.0,
        12 => 0.0,
        other => return Err(Error::UnsupportedSectorCount(other)),
    };
    Ok(factor * d_max)
}

/// A flat-top regular hexagon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hexagon {
    pub center: Point,
    pub side: f64,
}

impl Hexagon {
    pub fn new(center: Point, side: f64) -> Self {
        Self { center, side }
    }

    /// Corners counter-clockwise starting at angle 0.
    pub fn vertices(&self) -> [Point; 6] {
        std::array::from_fn(|i| {
            let a = PI / 3.0 * i as f64;
            Point::new(self.center.x + self.side * a.cos(), self.center.y + self.side * a.sin())
        })
    }

    /// Closed containment test with tolerance [`DIST_EPS`].
    pub fn contains(&self, p: Point) -> bool {
        let dx = (p.x - self.center.x).abs();
        let dy = (p.y - self.center.y).abs();
        let h = SQRT3 / 2.0 * self.side;
        dy <= h + DIST_EPS && SQRT3 * dx + dy <= SQRT3 * self.side + 2.0 * DIST_EPS
    }

    /// Minimum distance between the two hexagonal regions (0 when they touch).
    pub fn distance_to(&self, other: &Hexagon) -> f64 {
        if self.contains(other.center) || other.contains(self.center) {
            return 0.0;
        }
        let a = self.vertices();
        let b = other.vertices();
        let mut best = f64::INFINITY;
        for i in 0..6 {
            for j in 0..6 {
                let d = segment_distance(a[i], a[(i + 1) % 6], b[j], b[(j + 1) % 6]);
                best = best.min(d);
            }
        }
        best
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * abx, a.y + t * aby))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub cx: f64,
    pub cy: f64,
    /// First-layer (frequency) color, once a plan has been applied.
    pub channel: Option<u32>,
}

impl Cell {
    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub cell: usize,
}

impl Station {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Frequency plan applied per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyScheme {
    Single,
    ThreeChannel,
    SevenChannel,
    /// Channel for every cell id.
    Explicit(BTreeMap<usize, i64>),
}

/// A `D x D` hexagonal multi-cell topology with placed stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    #[serde(rename = "D")]
    pub dim: usize,
    pub radio: RadioParams,
    pub cells: Vec<Cell>,
    pub stations: Vec<Station>,
    pub seed: u64,
}

impl Topology {
    /// Tiles `dim * dim` cells and drops `stations_per_cell` uniformly random
    /// stations into each one. Each cell draws from its own ChaCha stream
    /// keyed by `(seed, cell_id)`.
    pub fn build(dim: usize, radio: RadioParams, stations_per_cell: usize, seed: u64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParameter(format!("D must be >= 1, got {dim}")));
        }
        radio.validate()?;

        let d = radio.d_max;
        let cells: Vec<Cell> = (0..dim * dim)
            .map(|id| {
                let (row, col) = (id / dim, id % dim);
                Cell {
                    id,
                    cx: 1.5 * d * col as f64,
                    cy: SQRT3 * d * (row as f64 + 0.5 * (col & 1) as f64),
                    channel: None,
                }
            })
            .collect();

        let mut topo =
            Topology { dim, radio, cells, stations: Vec::with_capacity(dim * dim * stations_per_cell), seed };

        let half_h = SQRT3 / 2.0 * d;
        for cell in 0..topo.cells.len() {
            let mut rng = cell_rng(seed, cell);
            let c = topo.cells[cell].center();
            let hex = Hexagon::new(c, d);
            let mut placed = 0;
            while placed < stations_per_cell {
                let p = Point::new(rng.random_range(c.x - d..=c.x + d), rng.random_range(c.y - half_h..=c.y + half_h));
                if hex.contains(p) && topo.locate(p) == Some(cell) {
                    let id = topo.stations.len();
                    topo.stations.push(Station { id, x: p.x, y: p.y, cell });
                    placed += 1;
                }
            }
        }
        Ok(topo)
    }

    /// Builds a topology from explicit station positions; each station is
    /// associated with the cell containing it.
    pub fn with_stations(dim: usize, radio: RadioParams, positions: &[Point], seed: u64) -> Result<Self> {
        let mut topo = Self::build(dim, radio, 0, seed)?;
        for &p in positions {
            let cell = topo
                .locate(p)
                .ok_or_else(|| Error::InvalidParameter(format!("point ({}, {}) lies outside every cell", p.x, p.y)))?;
            let id = topo.stations.len();
            topo.stations.push(Station { id, x: p.x, y: p.y, cell });
        }
        Ok(topo)
    }

    pub fn hexagon(&self, cell: usize) -> Hexagon {
        Hexagon::new(self.cells[cell].center(), self.radio.d_max)
    }

    /// Lowest-id cell whose closed hexagon contains `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.hexagon(c).contains(p))
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.dim, cell % self.dim)
    }

    /// Axial hex coordinates `(q, r)` of a cell.
    pub fn axial(&self, cell: usize) -> (i64, i64) {
        let (row, col) = self.row_col(cell);
        let (row, col) = (row as i64, col as i64);
        (col, row - (col - (col & 1)) / 2)
    }

    /// Cells sharing an edge with `cell`.
    pub fn adjacent_cells(&self, cell: usize) -> Vec<usize> {
        let spacing = SQRT3 * self.radio.d_max;
        let c = self.cells[cell].center();
        self.cells
            .iter()
            .filter(|o| o.id != cell && (o.center().distance(c) - spacing).abs() < 1e-6)
            .map(|o| o.id)
            .collect()
    }

    pub fn ap_position(&self, cell: usize) -> Point {
        self.cells[cell].center()
    }

    /// Distance from a station to its own AP.
    pub fn link_length(&self, station: &Station) -> f64 {
        station.position().distance(self.ap_position(station.cell))
    }

    /// Channels of two cells may collide unless both are set and differ.
    pub fn cells_share_channel(&self, a: usize, b: usize) -> bool {
        match (self.cells[a].channel, self.cells[b].channel) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        }
    }

    pub fn assign_frequencies(mut self, scheme: &FrequencyScheme) -> Result<Self> {
        let channels: Vec<u32> = match scheme {
            FrequencyScheme::Single => vec![0; self.cells.len()],
            FrequencyScheme::ThreeChannel => (0..self.cells.len())
                .map(|c| {
                    let (q, r) = self.axial(c);
                    (q - r).rem_euclid(3) as u32
                })
                .collect(),
            FrequencyScheme::SevenChannel => (0..self.cells.len())
                .map(|c| {
                    let (q, r) = self.axial(c);
                    (q + 3 * r).rem_euclid(7) as u32
                })
                .collect(),
            FrequencyScheme::Explicit(map) => {
                let mut out = Vec::with_capacity(self.cells.len());
                for c in 0..self.cells.len() {
                    let ch = *map.get(&c).ok_or_else(|| Error::InvalidMap(format!("cell {c} has no channel")))?;
                    if ch < 0 || ch > i64::from(u32::MAX) {
                        return Err(Error::InvalidMap(format!("cell {c} has channel {ch}")));
                    }
                    out.push(ch as u32);
                }
                if let Some(extra) = map.keys().find(|&&k| k >= self.cells.len()) {
                    return Err(Error::InvalidMap(format!("cell {extra} does not exist")));
                }
                out
            }
        };
        for (cell, ch) in self.cells.iter_mut().zip(channels) {
            cell.channel = Some(ch);
        }
        Ok(self)
    }

    /// Index of the angular sector (of `n` equal sectors, counted
    /// counter-clockwise from angle 0) of `cell` that contains `p`.
    pub fn sector_index(&self, cell: usize, p: Point, n: u32) -> u32 {
        let c = self.cells[cell].center();
        let angle = (p.y - c.y).atan2(p.x - c.x).rem_euclid(2.0 * PI);
        ((angle / (2.0 * PI / n as f64)) as u32).min(n - 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Per-cell random stream derived from the topology seed.
fn cell_rng(seed: u64, cell: usize) -> ChaCha8Rng {
    crate::rng::stream_rng(seed, cell as u64)
}
