//! Seeded experiments that compare tracker configurations on simulated
//! scenes: prediction quality after full occlusion, identity switches,
//! appearance-driven matches and parameter sweeps.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::iou;
use crate::metrics::{evaluate, MetricsReport, TrackRow, TrackTable};
use crate::motion::KalmanModel;
use crate::simulation::{generate, standard_suite, Simulation, Suite};
use crate::tracker::{coast, StepReport, Tracker, TrackerConfig, Tracklet, WarpMatrix};

/// Tracker output for one simulated sequence.
#[derive(Debug, Clone)]
pub struct Run {
    pub reports: Vec<StepReport<f64>>,
    pub tracks: Vec<Tracklet<f64>>,
    pub model: KalmanModel<f64>,
}

impl Run {
    /// Every history entry of every reported track, interpolated ones included.
    pub fn table(&self) -> TrackTable {
        results_table(&self.tracks)
    }
}

pub fn results_table(tracks: &[Tracklet<f64>]) -> TrackTable {
    let rows = tracks
        .iter()
        .flat_map(|t| {
            t.history.iter().map(move |h| TrackRow {
                frame: h.frame,
                id: t.id as i64,
                bbox: h.bbox,
            })
        })
        .collect();
    TrackTable::new(rows).expect("track histories are frame-unique")
}

/// Steps a fresh tracker through every frame of `sim`.
pub fn run(sim: &Simulation, cfg: &TrackerConfig<f64>, pixel_inputs: bool) -> Result<Run> {
    let mut tracker = Tracker::new(cfg.clone())?;
    let warp = WarpMatrix::identity();
    let mut reports = Vec::with_capacity(sim.frames.len());
    for f in &sim.frames {
        reports.push(tracker.step(f.frame, &f.tracker_detections(pixel_inputs), &warp)?);
    }
    Ok(Run {
        reports,
        tracks: tracker.results(),
        model: tracker.model().clone(),
    })
}

pub fn evaluate_run(sim: &Simulation, run: &Run) -> MetricsReport {
    evaluate(&sim.gt_table(), &run.table(), 0.5)
}

/// Agent whose detections a track matched most often (ties to the lower
/// agent index).
pub fn track_agents(sim: &Simulation, run: &Run) -> HashMap<u64, usize> {
    let mut votes: HashMap<u64, HashMap<usize, usize>> = HashMap::new();
    for (f, r) in sim.frames.iter().zip(&run.reports) {
        for m in &r.matches {
            *votes
                .entry(m.track_id)
                .or_default()
                .entry(f.detections[m.det_index].agent)
                .or_default() += 1;
        }
    }
    votes
        .into_iter()
        .map(|(id, v)| {
            let best = v
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(a, _)| a)
                .expect("non-empty votes");
            (id, best)
        })
        .collect()
}

/// IoU between ground truth and the Kalman prediction of the track that last
/// matched `agent` before its longest interior detection gap, taken on the
/// first frame the agent is detected again. A track the tracker already
/// dropped is coasted from its final state up to that frame. `None` if the
/// agent has no interior gap; `Some(0)` if no confirmed track followed it.
pub fn reappearance_iou(sim: &Simulation, run: &Run, agent: usize) -> Option<f64> {
    let last_frame = sim.frames.len() as u32;
    let (start, len) = sim
        .detection_gaps(agent)
        .into_iter()
        .filter(|&(s, n)| s > 1 && s + n <= last_frame)
        .max_by_key(|&(s, n)| (n, std::cmp::Reverse(s)))?;
    let reappear = start + len;
    let idx = |frame: u32| frame as usize - 1;
    let track = (1..start).rev().find_map(|f| {
        let frame = &sim.frames[idx(f)];
        run.reports[idx(f)]
            .matches
            .iter()
            .find(|m| frame.detections[m.det_index].agent == agent)
            .map(|m| m.track_id)
    });
    let Some(track) = track else { return Some(0.0) };
    let gt = sim.frames[idx(reappear)]
        .gt
        .iter()
        .find(|(a, _)| *a == agent)
        .map(|(_, b)| *b)?;
    if let Some(p) = run.reports[idx(reappear)]
        .predictions
        .iter()
        .find(|p| p.0 == track)
    {
        return Some(iou(&p.2, &gt));
    }
    let removed_at = (start..reappear).find(|&f| run.reports[idx(f)].removed.contains(&track));
    let (Some(removed_at), Some(t)) = (removed_at, run.tracks.iter().find(|t| t.id == track))
    else {
        return Some(0.0);
    };
    let mut st = t.kalman.clone();
    for _ in removed_at..reappear {
        st = coast(&st, &run.model);
    }
    Some(iou(&st.bbox(), &gt))
}

/// Stage-1 matches decided by appearance, as `(correct, total)`, where a
/// match is correct when the detection belongs to the track's agent.
pub fn appearance_matches(sim: &Simulation, run: &Run) -> (usize, usize) {
    let owners = track_agents(sim, run);
    let mut correct = 0;
    let mut total = 0;
    for (f, r) in sim.frames.iter().zip(&run.reports) {
        for m in r
            .matches
            .iter()
            .filter(|m| m.stage == 1 && m.appearance_used)
        {
            total += 1;
            if owners.get(&m.track_id) == Some(&f.detections[m.det_index].agent) {
                correct += 1;
            }
        }
    }
    (correct, total)
}

/// Generated scenarios for `seeds` of one suite.
pub fn suite_scenarios(suite: Suite, seeds: std::ops::Range<u64>) -> Result<Vec<Simulation>> {
    seeds.map(|s| generate(&standard_suite(suite, s))).collect()
}

/// All four suites for the given seeds, in suite order.
pub fn combined_scenarios(seeds: std::ops::Range<u64>) -> Result<Vec<Simulation>> {
    let mut out = Vec::new();
    for s in Suite::ALL {
        out.extend(suite_scenarios(s, seeds.clone())?);
    }
    Ok(out)
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha0,
    SpeedThreshold,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha0 => "alpha0",
            SweepParam::SpeedThreshold => "theta_v",
        }
    }

    pub fn apply(self, cfg: &TrackerConfig<f64>, v: f64) -> TrackerConfig<f64> {
        let mut c = cfg.clone();
        match self {
            SweepParam::Alpha0 => c.alpha0 = v,
            SweepParam::SpeedThreshold => c.speed_threshold = v,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub report: MetricsReport,
}

/// `0.0, 0.1, ..., 1.0`.
pub fn unit_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// Evaluates every value on every scenario, merging counts per value. Sweep
/// points run in parallel, each with its own trackers; rows keep the order
/// of `values`.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    base: &TrackerConfig<f64>,
    scenarios: &[Simulation],
) -> Result<Vec<SweepRow>> {
    values
        .par_iter()
        .map(|&v| {
            let cfg = param.apply(base, v);
            let reports = scenarios
                .iter()
                .map(|sim| run(sim, &cfg, false).map(|r| evaluate_run(sim, &r)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                value: v,
                report: MetricsReport::merge(&reports),
            })
        })
        .collect()
}
