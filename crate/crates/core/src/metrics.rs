//! CLEAR-style tracking accuracy (MOTA, identity switches) and IDF1.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::assignment::hungarian;
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::matrix::CostMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox<f64>,
}

/// Rows sorted by `(frame, id)`, each pair at most once.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackTable {
    rows: Vec<TrackRow>,
}

impl TrackTable {
    pub fn new(mut rows: Vec<TrackRow>) -> Result<Self> {
        rows.sort_by_key(|r| (r.frame, r.id));
        for w in rows.windows(2) {
            if (w[0].frame, w[0].id) == (w[1].frame, w[1].id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate row for frame {} id {}",
                    w[0].frame, w[0].id
                )));
            }
        }
        for r in &rows {
            r.bbox.validate()?;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TrackRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<i64> {
        let set: HashSet<i64> = self.rows.iter().map(|r| r.id).collect();
        let mut ids: Vec<_> = set.into_iter().collect();
        ids.sort_unstable();
        ids
    }

    pub fn by_frame(&self) -> BTreeMap<u32, Vec<(i64, BoundingBox<f64>)>> {
        let mut out: BTreeMap<u32, Vec<_>> = BTreeMap::new();
        for r in &self.rows {
            out.entry(r.frame).or_default().push((r.id, r.bbox));
        }
        out
    }
}

/// Correspondences found in one frame, as indices into the inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatch {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// Matches one frame. Pairs in `previous` (gt id to last matched pred id)
/// are kept first when they still reach `iou_thr`; the rest are assigned by
/// minimum IoU distance among pairs reaching the threshold.
pub fn match_frame(
    gt: &[(i64, BoundingBox<f64>)],
    pred: &[(i64, BoundingBox<f64>)],
    previous: &HashMap<i64, i64>,
    iou_thr: f64,
) -> FrameMatch {
    let mut pairs = Vec::new();
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (gi, (gid, gb)) in gt.iter().enumerate() {
        let Some(pid) = previous.get(gid) else {
            continue;
        };
        if let Some(pi) = pred.iter().position(|(id, _)| id == pid) {
            if !pred_used[pi] && iou(gb, &pred[pi].1) >= iou_thr {
                pairs.push((gi, pi));
                gt_used[gi] = true;
                pred_used[pi] = true;
            }
        }
    }
    let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let free_pred: Vec<usize> = (0..pred.len()).filter(|&i| !pred_used[i]).collect();
    // invalid pairs cost more than the gate, so they are never accepted
    let cost = CostMatrix::from_fn(free_gt.len(), free_pred.len(), |r, c| {
        let v = iou(&gt[free_gt[r]].1, &pred[free_pred[c]].1);
        if v >= iou_thr {
            1.0 - v
        } else {
            3.0
        }
    });
    let m = hungarian(&cost, Some(2.0));
    pairs.extend(m.matched.iter().map(|&(r, c)| (free_gt[r], free_pred[c])));
    pairs.sort_unstable();
    let matched_gt: HashSet<usize> = pairs.iter().map(|p| p.0).collect();
    let matched_pred: HashSet<usize> = pairs.iter().map(|p| p.1).collect();
    FrameMatch {
        unmatched_gt: (0..gt.len()).filter(|i| !matched_gt.contains(i)).collect(),
        unmatched_pred: (0..pred.len())
            .filter(|i| !matched_pred.contains(i))
            .collect(),
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    FalsePositive,
    Miss,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub frame: u32,
    pub kind: EventKind,
    pub gt_id: Option<i64>,
    pub pred_id: Option<i64>,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::FalsePositive => "FP",
            EventKind::Miss => "FN",
            EventKind::Switch => "IDSW",
        };
        let id = |v: Option<i64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        write!(
            f,
            "{},{},{},{}",
            self.frame,
            kind,
            id(self.gt_id),
            id(self.pred_id)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub gt: usize,
    pub predictions: usize,
    pub matches: usize,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub idtp: usize,
    pub mota: f64,
    pub idf1: f64,
}

impl MetricsReport {
    fn from_counts(
        gt: usize,
        predictions: usize,
        matches: usize,
        fp: usize,
        fn_: usize,
        idsw: usize,
        idtp: usize,
    ) -> Self {
        let mota = if gt > 0 {
            1.0 - (fp + fn_ + idsw) as f64 / gt as f64
        } else if fp + idsw == 0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        let idf1 = if gt + predictions > 0 {
            2.0 * idtp as f64 / (gt + predictions) as f64
        } else {
            1.0
        };
        Self {
            gt,
            predictions,
            matches,
            fp,
            fn_,
            idsw,
            idtp,
            mota,
            idf1,
        }
    }

    pub fn idfp(&self) -> usize {
        self.predictions - self.idtp
    }

    pub fn idfn(&self) -> usize {
        self.gt - self.idtp
    }

    /// Sums the counts of several sequences and recomputes the ratios.
    pub fn merge(reports: &[MetricsReport]) -> Self {
        let sum = |f: fn(&MetricsReport) -> usize| reports.iter().map(f).sum::<usize>();
        Self::from_counts(
            sum(|r| r.gt),
            sum(|r| r.predictions),
            sum(|r| r.matches),
            sum(|r| r.fp),
            sum(|r| r.fn_),
            sum(|r| r.idsw),
            sum(|r| r.idtp),
        )
    }

    /// `key=value` lines, one per field.
    pub fn to_kv(&self) -> String {
        format!(
            "mota={:.6}\nidf1={:.6}\nidsw={}\nfp={}\nfn={}\ngt={}\npredictions={}\nmatches={}\nidtp={}\nidfp={}\nidfn={}\n",
            self.mota,
            self.idf1,
            self.idsw,
            self.fp,
            self.fn_,
            self.gt,
            self.predictions,
            self.matches,
            self.idtp,
            self.idfp(),
            self.idfn()
        )
    }
}

/// Maximum number of frames over which gt and predicted ids can be paired
/// one-to-one, each pair counting frames where both overlap enough.
pub fn global_id_matches(gt: &TrackTable, pred: &TrackTable, iou_thr: f64) -> usize {
    let gt_ids = gt.ids();
    let pred_ids = pred.ids();
    if gt_ids.is_empty() || pred_ids.is_empty() {
        return 0;
    }
    let gi: HashMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let pi: HashMap<i64, usize> = pred_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let mut counts = CostMatrix::filled(gt_ids.len(), pred_ids.len(), 0i64);
    let pred_frames = pred.by_frame();
    for (frame, g_rows) in gt.by_frame() {
        let Some(p_rows) = pred_frames.get(&frame) else {
            continue;
        };
        for (gid, gb) in &g_rows {
            for (pid, pb) in p_rows {
                if iou(gb, pb) >= iou_thr {
                    counts[(gi[gid], pi[pid])] += 1;
                }
            }
        }
    }
    let negated = counts.map(|v| -v);
    let m = hungarian(&negated, None);
    m.matched
        .iter()
        .map(|&(r, c)| counts.get(r, c) as usize)
        .sum()
}

/// Evaluates a predicted table against ground truth, also returning the
/// per-frame error events.
pub fn evaluate_with_events(
    gt: &TrackTable,
    pred: &TrackTable,
    iou_thr: f64,
) -> (MetricsReport, Vec<Event>) {
    let gt_frames = gt.by_frame();
    let pred_frames = pred.by_frame();
    let frames: std::collections::BTreeSet<u32> = gt_frames
        .keys()
        .chain(pred_frames.keys())
        .copied()
        .collect();
    let empty = Vec::new();
    let mut last: HashMap<i64, i64> = HashMap::new();
    let (mut matches, mut fp, mut fn_, mut idsw) = (0, 0, 0, 0);
    let mut events = Vec::new();
    for frame in frames {
        let g = gt_frames.get(&frame).unwrap_or(&empty);
        let p = pred_frames.get(&frame).unwrap_or(&empty);
        let m = match_frame(g, p, &last, iou_thr);
        for &(gi, pi) in &m.pairs {
            let (gid, pid) = (g[gi].0, p[pi].0);
            if last.get(&gid).is_some_and(|&prev| prev != pid) {
                idsw += 1;
                events.push(Event {
                    frame,
                    kind: EventKind::Switch,
                    gt_id: Some(gid),
                    pred_id: Some(pid),
                });
            }
            last.insert(gid, pid);
        }
        for &gi in &m.unmatched_gt {
            events.push(Event {
                frame,
                kind: EventKind::Miss,
                gt_id: Some(g[gi].0),
                pred_id: None,
            });
        }
        for &pi in &m.unmatched_pred {
            events.push(Event {
                frame,
                kind: EventKind::FalsePositive,
                gt_id: None,
                pred_id: Some(p[pi].0),
            });
        }
        matches += m.pairs.len();
        fn_ += m.unmatched_gt.len();
        fp += m.unmatched_pred.len();
    }
    let idtp = global_id_matches(gt, pred, iou_thr);
    let report = MetricsReport::from_counts(gt.len(), pred.len(), matches, fp, fn_, idsw, idtp);
    if report.gt > 0 {
        debug_assert_eq!(
            report.mota,
            1.0 - (report.fp + report.fn_ + report.idsw) as f64 / report.gt as f64
        );
    }
    (report, events)
}

pub fn evaluate(gt: &TrackTable, pred: &TrackTable, iou_thr: f64) -> MetricsReport {
    evaluate_with_events(gt, pred, iou_thr).0
}
