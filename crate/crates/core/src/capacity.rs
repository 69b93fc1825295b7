//! Closed-form VoIP capacity arithmetic: codec rates, per-AP capacity of a
//! multi-cell grid, and the guard-time and delay-budget limits of coarse
//! time slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IP/UDP/RTP header bytes added to every voice payload.
pub const HEADER_BYTES: f64 = 40.0;

/// Loss allowance assumed when deriving the loss-adjusted rate.
pub const LOSS_ALLOWANCE: f64 = 0.03;

/// Default separation between beacons, seconds.
pub const BEACON_SEPARATION_S: f64 = 0.1;

// Single-cell VoIP capacities.
pub const C_AP1_11B: u32 = 12;
pub const C_AP1_11G: u32 = 60;
pub const C_AP1_11G_MEASURED: u32 = 55;
pub const C_AP1_11B_PCF: u32 = 17;
pub const C_AP1_11G_PCF: u32 = 90;

/// Small slack so values like `10.0 - 1ulp` floor/ceil as intended.
const ROUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecProfile {
    pub name: String,
    pub payload_bytes: f64,
    /// Packets per second in each direction.
    pub packets_per_second: f64,
    /// One-direction rate including headers, kbps.
    pub one_way_rate: f64,
    /// One-way rate scaled by the tolerated loss, kbps.
    pub loss_adjusted_rate: f64,
}

impl CodecProfile {
    pub fn custom(name: &str, payload_bytes: f64, packets_per_second: f64) -> Result<Self> {
        if !(payload_bytes > 0.0) || !(packets_per_second > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "codec needs positive payload and rate, got {payload_bytes} B at {packets_per_second} pkt/s"
            )));
        }
        let one_way_rate = (payload_bytes + HEADER_BYTES) * 8.0 * packets_per_second / 1000.0;
        Ok(Self {
            name: name.to_owned(),
            payload_bytes,
            packets_per_second,
            one_way_rate,
            loss_adjusted_rate: one_way_rate * (1.0 - LOSS_ALLOWANCE),
        })
    }

    /// GSM 6.10: 33-byte payload at 50 packets per second.
    pub fn gsm_6_10() -> Self {
        Self::custom("gsm_6_10", 33.0, 50.0).expect("valid constants")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "gsm_6_10" | "gsm610" | "gsm" => Some(Self::gsm_6_10()),
            _ => None,
        }
    }
}

/// Per-AP capacity of a `dim x dim` grid supporting `total_sessions`.
pub fn per_ap_capacity(total_sessions: f64, dim: usize) -> f64 {
    total_sessions / (dim * dim) as f64
}

/// Maximum VoIP packets (both directions, all sessions of the slot) that fit
/// in one slot, for a given beacon separation in seconds.
pub fn packet_budget_with_separation(
    packets_per_second: f64,
    n: u32,
    frames: u32,
    c_ap_1: u32,
    beacon_separation_s: f64,
) -> f64 {
    2.0 * packets_per_second * beacon_separation_s * f64::from(c_ap_1) / (f64::from(n) * f64::from(frames))
}

/// [`packet_budget_with_separation`] at the default 0.1 s beacon separation.
pub fn packet_budget(packets_per_second: f64, n: u32, frames: u32, c_ap_1: u32) -> f64 {
    2.0 * packets_per_second * f64::from(c_ap_1) / (10.0 * f64::from(n) * f64::from(frames))
}

/// Smallest frame count per beacon interval meeting the delay budget.
pub fn min_frames(beacon_interval: f64, delay_budget: f64, beacon: f64) -> Result<u32> {
    if !(delay_budget > beacon) {
        return Err(Error::InfeasibleBudget { delay_budget, beacon });
    }
    let ratio = beacon_interval / (delay_budget - beacon);
    Ok(((ratio - ROUND_EPS).ceil()).max(1.0) as u32)
}

/// Fraction of a slot left after the one-packet guard time.
pub fn slot_efficiency(r_delta_t: f64) -> f64 {
    (r_delta_t - 1.0) / r_delta_t
}

/// Beacon-interval frame structure. Durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub beacon_interval: f64,
    pub beacon_duration: f64,
    pub delay_budget: f64,
    pub frames: u32,
    pub slots_per_frame: u32,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self { beacon_interval: 99.5, beacon_duration: 0.5, delay_budget: 30.0, frames: 4, slots_per_frame: 3 }
    }
}

impl TimingParams {
    pub fn frame_duration(&self) -> f64 {
        self.beacon_interval / f64::from(self.frames)
    }

    pub fn slot_duration(&self) -> f64 {
        self.frame_duration() / f64::from(self.slots_per_frame)
    }

    /// Worst-case packet delay, one frame plus the beacon.
    pub fn max_delay(&self) -> f64 {
        self.frame_duration() + self.beacon_duration
    }

    pub fn delay_ok(&self) -> bool {
        self.max_delay() <= self.delay_budget + ROUND_EPS
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 1 || self.slots_per_frame < 1 {
            return Err(Error::InvalidParameter(format!(
                "frames ({}) and slots per frame ({}) must be >= 1",
                self.frames, self.slots_per_frame
            )));
        }
        if !(self.beacon_interval > 0.0) || !(self.beacon_duration > 0.0) || !(self.delay_budget > 0.0) {
            return Err(Error::InvalidParameter("durations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub r_delta_t: f64,
    pub efficiency: f64,
    pub sessions_per_ap: u32,
}

/// Sessions per AP once the per-slot guard time is paid.
pub fn cotdma_capacity(codec: &CodecProfile, timing: &TimingParams, c_ap_1: u32) -> Result<CapacityResult> {
    timing.validate()?;
    let r = packet_budget(codec.packets_per_second, timing.slots_per_frame, timing.frames, c_ap_1);
    if r < 1.0 - ROUND_EPS {
        return Err(Error::SlotTooSmall(r));
    }
    let efficiency = slot_efficiency(r).max(0.0);
    let sessions_per_ap = (f64::from(c_ap_1) * efficiency + ROUND_EPS).floor() as u32;
    Ok(CapacityResult { r_delta_t: r, efficiency, sessions_per_ap })
}

/// Full capacity report, as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub codec: String,
    pub n: u32,
    #[serde(rename = "C")]
    pub frames: u32,
    #[serde(rename = "C_AP_1")]
    pub c_ap_1: u32,
    pub r_delta_t: f64,
    pub efficiency: f64,
    pub sessions_per_ap: u32,
    pub constraints: CapacityConstraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityConstraints {
    pub min_frames: u32,
    pub delay_ok: bool,
}

pub fn capacity_report(codec: &CodecProfile, timing: &TimingParams, c_ap_1: u32) -> Result<CapacityReport> {
    let result = cotdma_capacity(codec, timing, c_ap_1)?;
    Ok(CapacityReport {
        codec: codec.name.clone(),
        n: timing.slots_per_frame,
        frames: timing.frames,
        c_ap_1,
        r_delta_t: result.r_delta_t,
        efficiency: result.efficiency,
        sessions_per_ap: result.sessions_per_ap,
        constraints: CapacityConstraints {
            min_frames: min_frames(timing.beacon_interval, timing.delay_budget, timing.beacon_duration)?,
            delay_ok: timing.delay_ok(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn timing(n: u32, frames: u32) -> TimingParams {
        TimingParams { slots_per_frame: n, frames, ..TimingParams::default() }
    }

    #[test]
    fn gsm_rates() {
        let g = CodecProfile::gsm_6_10();
        assert_eq!(g.one_way_rate, 29.2);
        assert!((g.loss_adjusted_rate - 28.32).abs() < 0.005);
        let c = CodecProfile::custom("x", 33.0, 50.0).unwrap();
        assert_eq!(c.one_way_rate, g.one_way_rate);
        assert_eq!(c.loss_adjusted_rate, g.loss_adjusted_rate);
        assert!(CodecProfile::custom("x", 0.0, 50.0).is_err());
        assert!(CodecProfile::custom("x", 33.0, -1.0).is_err());
    }

    #[test]
    fn per_ap_values() {
        assert!((per_ap_capacity(40.8, 5) - 1.632).abs() < 1e-12);
        assert_eq!(per_ap_capacity(12.0, 1), 12.0);
        assert_eq!(per_ap_capacity(0.0, 4), 0.0);
    }

    #[test]
    fn packet_budget_values() {
        assert_eq!(packet_budget(50.0, 3, 4, 12), 10.0);
        assert_eq!(packet_budget(50.0, 3, 4, 60), 50.0);
        assert_eq!(packet_budget(50.0, 6, 4, 12), 5.0);
        assert_eq!(packet_budget_with_separation(50.0, 3, 4, 12, BEACON_SEPARATION_S), 10.0);
    }

    #[test]
    fn min_frames_values() {
        assert_eq!(min_frames(99.5, 30.0, 0.5).unwrap(), 4);
        assert_eq!(min_frames(99.5, 100.0, 0.5).unwrap(), 1);
        assert_eq!(min_frames(99.5, 20.0, 0.5).unwrap(), 6);
        assert!(matches!(min_frames(99.5, 0.5, 0.5), Err(Error::InfeasibleBudget { .. })));
        // exact division does not round up
        assert_eq!(min_frames(99.0, 33.5, 0.5).unwrap(), 3);
    }

    #[test]
    fn cotdma_capacity_values() {
        let g = CodecProfile::gsm_6_10();
        let b = cotdma_capacity(&g, &timing(3, 4), 12).unwrap();
        assert_eq!(b.r_delta_t, 10.0);
        assert!((b.efficiency - 0.9).abs() < 1e-12);
        assert_eq!(b.sessions_per_ap, 10);
        let gg = cotdma_capacity(&g, &timing(3, 4), 60).unwrap();
        assert_eq!(gg.r_delta_t, 50.0);
        assert_eq!(gg.sessions_per_ap, 58);
        assert!((gg.efficiency - 0.98).abs() < 1e-12);
    }

    #[test]
    fn guard_time_can_eat_the_slot() {
        // r = 2*50*12/(10*n*C) = 1 with n = 12, C = 10
        let r = cotdma_capacity(&CodecProfile::gsm_6_10(), &timing(12, 10), 12).unwrap();
        assert_eq!(r.r_delta_t, 1.0);
        assert_eq!(r.efficiency, 0.0);
        assert_eq!(r.sessions_per_ap, 0);
        assert!(matches!(cotdma_capacity(&CodecProfile::gsm_6_10(), &timing(12, 20), 12), Err(Error::SlotTooSmall(_))));
    }

    #[test]
    fn report_carries_constraints() {
        let rep = capacity_report(&CodecProfile::gsm_6_10(), &timing(3, 4), 12).unwrap();
        assert_eq!(rep.constraints.min_frames, 4);
        assert!(rep.constraints.delay_ok);
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["C"], 4);
        assert_eq!(v["C_AP_1"], 12);
        assert_eq!(v["sessions_per_ap"], 10);
        let slow = capacity_report(&CodecProfile::gsm_6_10(), &timing(3, 2), 12).unwrap();
        assert!(!slow.constraints.delay_ok);
    }

    #[test]
    fn timing_durations_close() {
        let t = timing(3, 4);
        assert!((t.frame_duration() * 4.0 - t.beacon_interval).abs() < 1e-12);
        assert!((t.slot_duration() * 3.0 - t.frame_duration()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn min_frames_is_tight(bi in 1.0..500.0f64, b in 0.0..5.0f64, slack in 0.1..200.0f64) {
            let db = b + slack;
            let c = min_frames(bi, db, b).unwrap() as f64;
            prop_assert!(c * (db - b) >= bi - 1e-6);
            if c > 1.0 {
                prop_assert!((c - 1.0) * (db - b) < bi + 1e-6);
            }
        }

        #[test]
        fn efficiency_increases_with_budget(r in 1.0..1000.0f64, d in 0.001..100.0f64) {
            prop_assert!(slot_efficiency(r + d) > slot_efficiency(r));
        }

        #[test]
        fn sessions_do_not_grow_with_n_or_frames(n in 1u32..8, frames in 1u32..8, c in 1u32..100) {
            let g = CodecProfile::gsm_6_10();
            let at = |n, f| cotdma_capacity(&g, &timing(n, f), c).map(|r| r.sessions_per_ap).unwrap_or(0);
            prop_assert!(at(n + 1, frames) <= at(n, frames));
            prop_assert!(at(n, frames + 1) <= at(n, frames));
        }

        #[test]
        fn per_ap_composes(x in 0.0..1000.0f64, d in 1usize..20) {
            let back = per_ap_capacity((d * d) as f64 * x, d);
            prop_assert!((back - x).abs() <= 1e-12 * x.max(1.0));
        }
    }
}
