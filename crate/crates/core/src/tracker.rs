//! Frame-by-frame tracking loop and trajectory post-processing.

use crate::appearance::{
    ema_update, pose_guided_embedding, Embedding, FeatureMap, FusionMode, KeypointHeatmaps,
    LocalProjection,
};
use crate::association::{
    associate_two_stage, AssocDetection, AssocTrack, AssociationParams, TrackVisibility,
};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::motion::{
    kf_init, kf_predict, kf_update, KalmanModel, KalmanTrackState, Matrix8, MotionSuppression,
    SpeedBuffer, SpeedFilter,
};
use crate::scalar::Real;

/// Pixel-level inputs for the pose-guided embedding of one detection.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceInput<T> {
    pub features: FeatureMap<T>,
    pub heatmaps: KeypointHeatmaps<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    pub bbox: BoundingBox<T>,
    pub score: T,
    /// Precomputed embedding, used when no pixel-level inputs are given.
    pub embedding: Option<Embedding<T>>,
    pub appearance: Option<AppearanceInput<T>>,
}

impl<T: Real> Detection<T> {
    pub fn new(bbox: BoundingBox<T>, score: T) -> Self {
        Self {
            bbox,
            score,
            embedding: None,
            appearance: None,
        }
    }

    pub fn with_embedding(mut self, e: Embedding<T>) -> Self {
        self.embedding = Some(e);
        self
    }
}

/// Splits detection indices into `score > threshold` and the rest.
pub fn split_detections<T: Real>(dets: &[Detection<T>], threshold: T) -> (Vec<usize>, Vec<usize>) {
    (0..dets.len()).partition(|&i| dets[i].score > threshold)
}

/// 2x3 affine camera-motion transform, `[a b tx; c d ty]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpMatrix<T> {
    pub m: [[T; 3]; 2],
}

impl<T: Real> Default for WarpMatrix<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> WarpMatrix<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z]],
        }
    }

    pub fn new(m: [[T; 3]; 2]) -> Result<Self> {
        if !m.iter().flatten().all(|v| v.finite()) {
            return Err(Error::InvalidConfig(
                "warp matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { m })
    }

    pub fn translation(dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, dx], [z, o, dy]],
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// Applies the warp to a predicted state: the linear part acts on every
/// (x, y)-like pair of the state, the translation on the center only.
pub fn motion_compensate<T: Real>(
    st: &KalmanTrackState<T>,
    w: &WarpMatrix<T>,
) -> KalmanTrackState<T> {
    let mut r8 = Matrix8::zeros();
    for block in 0..4 {
        let o = 2 * block;
        r8[(o, o)] = w.m[0][0];
        r8[(o, o + 1)] = w.m[0][1];
        r8[(o + 1, o)] = w.m[1][0];
        r8[(o + 1, o + 1)] = w.m[1][1];
    }
    let mut mean = r8 * st.mean;
    mean[0] += w.m[0][2];
    mean[1] += w.m[1][2];
    let covariance = r8 * st.covariance * r8.transpose();
    KalmanTrackState { mean, covariance }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    New,
    Tracked,
    Lost,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry<T> {
    pub frame: u32,
    pub bbox: BoundingBox<T>,
    pub observed: bool,
}

#[derive(Debug, Clone)]
pub struct Tracklet<T: Real> {
    pub id: u64,
    pub kalman: KalmanTrackState<T>,
    pub speed_buf: SpeedBuffer<T>,
    pub embedding: Option<Embedding<T>>,
    pub status: TrackStatus,
    pub frames_since_update: u32,
    /// Whether the track ever reached `Tracked`; only such tracks are reported.
    pub confirmed: bool,
    pub history: Vec<HistoryEntry<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig<T> {
    pub det_threshold: T,
    pub new_track_threshold: T,
    /// Gain scale applied to abnormal components.
    pub alpha0: T,
    /// Normalized speed difference above which a component is abnormal.
    pub speed_threshold: T,
    pub iou_threshold: T,
    pub occlusion_offset: T,
    pub embedding_threshold: T,
    pub ema_beta: T,
    pub buffer_span: usize,
    pub max_lost: u32,
    pub filter: SpeedFilter,
    /// Abnormal-motion suppression; off means every update uses the full gain.
    pub ams: bool,
    /// Use embeddings in stage 1 at all.
    pub appearance: bool,
    pub fusion: FusionMode,
    pub part_threshold: T,
    pub stage1_gate: T,
    pub stage2_gate: T,
    pub max_interp_gap: u32,
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            det_threshold: T::lit(0.6),
            new_track_threshold: T::lit(0.7),
            alpha0: T::lit(0.2),
            speed_threshold: T::lit(0.2),
            iou_threshold: T::lit(0.5),
            occlusion_offset: T::lit(0.2),
            embedding_threshold: T::lit(0.25),
            ema_beta: T::lit(0.9),
            buffer_span: 30,
            max_lost: 30,
            filter: SpeedFilter::default(),
            ams: true,
            appearance: true,
            fusion: FusionMode::Adaptive,
            part_threshold: T::lit(0.5),
            stage1_gate: T::lit(0.8),
            stage2_gate: T::lit(0.5),
            max_interp_gap: 20,
        }
    }
}

impl<T: Real> TrackerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("det_threshold", self.det_threshold),
            ("new_track_threshold", self.new_track_threshold),
            ("alpha0", self.alpha0),
            ("speed_threshold", self.speed_threshold),
            ("iou_threshold", self.iou_threshold),
            ("occlusion_offset", self.occlusion_offset),
            ("embedding_threshold", self.embedding_threshold),
            ("ema_beta", self.ema_beta),
            ("part_threshold", self.part_threshold),
            ("stage1_gate", self.stage1_gate),
            ("stage2_gate", self.stage2_gate),
        ];
        for (name, v) in unit {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {}",
                    v.as_f64()
                )));
            }
        }
        if self.max_lost < 1 {
            return Err(Error::InvalidConfig("max_lost must be at least 1".into()));
        }
        if self.buffer_span < 2 {
            return Err(Error::InvalidConfig(
                "buffer_span must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn association(&self) -> AssociationParams<T> {
        AssociationParams {
            iou_threshold: self.iou_threshold,
            occlusion_offset: self.occlusion_offset,
            embedding_threshold: self.embedding_threshold,
            stage1_gate: self.stage1_gate,
            stage2_gate: self.stage2_gate,
        }
    }

    fn suppression(&self) -> MotionSuppression<T> {
        MotionSuppression {
            alpha0: self.alpha0,
            threshold: self.speed_threshold,
            filter: self.filter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord<T> {
    pub track_id: u64,
    /// Index into the frame's detection list.
    pub det_index: usize,
    pub stage: u8,
    pub appearance_used: bool,
    pub alpha: T,
}

/// Diagnostics for one call to [`Tracker::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub frame: u32,
    /// Motion-compensated predictions of every track alive before matching.
    pub predictions: Vec<(u64, TrackStatus, BoundingBox<T>)>,
    pub matches: Vec<MatchRecord<T>>,
    pub created: Vec<u64>,
    pub removed: Vec<u64>,
    /// Confirmed, tracked boxes output for this frame.
    pub active: Vec<(u64, BoundingBox<T>)>,
}

#[derive(Debug, Clone)]
pub struct Tracker<T: Real> {
    cfg: TrackerConfig<T>,
    model: KalmanModel<T>,
    projection: Option<LocalProjection<T>>,
    tracks: Vec<Tracklet<T>>,
    finished: Vec<Tracklet<T>>,
    next_id: u64,
    last_frame: Option<u32>,
}

impl<T: Real> Tracker<T> {
    pub fn new(cfg: TrackerConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            model: KalmanModel::constant_velocity(),
            projection: None,
            tracks: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    /// Uses a fixed local projection instead of channel-wise part averaging.
    pub fn with_projection(mut self, proj: LocalProjection<T>) -> Self {
        self.projection = Some(proj);
        self
    }

    pub fn config(&self) -> &TrackerConfig<T> {
        &self.cfg
    }

    pub fn model(&self) -> &KalmanModel<T> {
        &self.model
    }

    /// Tracks still alive (New, Tracked or Lost).
    pub fn tracks(&self) -> &[Tracklet<T>] {
        &self.tracks
    }

    fn detection_embedding(&mut self, det: &Detection<T>) -> Option<Embedding<T>> {
        if !self.cfg.appearance {
            return None;
        }
        if let Some(a) = &det.appearance {
            let channels = a.features.0.dims().2;
            let proj = match self.projection.take() {
                Some(p) if p.in_dim() == 6 * channels => p,
                _ => LocalProjection::block_average(channels),
            };
            let e = pose_guided_embedding(
                &a.features,
                &a.heatmaps,
                &proj,
                self.cfg.part_threshold,
                self.cfg.fusion,
            )
            .ok();
            self.projection = Some(proj);
            return e;
        }
        det.embedding.as_ref().and_then(|e| e.normalized().ok())
    }

    /// Runs one frame. Frame indices must strictly increase between calls,
    /// and every frame of a sequence should be stepped (empty or not).
    pub fn step(
        &mut self,
        frame: u32,
        dets: &[Detection<T>],
        warp: &WarpMatrix<T>,
    ) -> Result<StepReport<T>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::NonMonotonicFrame { last, got: frame });
            }
        }
        for d in dets {
            d.bbox.validate()?;
        }
        self.last_frame = Some(frame);
        let cfg = self.cfg.clone();

        let (high, low) = split_detections(dets, cfg.det_threshold);
        let high_embs: Vec<Option<Embedding<T>>> = high
            .iter()
            .map(|&i| self.detection_embedding(&dets[i]))
            .collect();

        for t in &mut self.tracks {
            t.kalman = if t.status == TrackStatus::Tracked {
                kf_predict(&t.kalman, &self.model)
            } else {
                coast(&t.kalman, &self.model)
            };
            if !warp.is_identity() {
                t.kalman = motion_compensate(&t.kalman, warp);
            }
        }
        let predictions = self
            .tracks
            .iter()
            .map(|t| (t.id, t.status, t.kalman.bbox()))
            .collect();

        let assoc_tracks: Vec<AssocTrack<'_, T>> = self
            .tracks
            .iter()
            .map(|t| AssocTrack {
                bbox: t.kalman.bbox(),
                embedding: if cfg.appearance && t.status != TrackStatus::New {
                    t.embedding.as_ref()
                } else {
                    None
                },
                visibility: if t.status == TrackStatus::Lost {
                    TrackVisibility::Untracked
                } else {
                    TrackVisibility::Tracked
                },
                low_score_eligible: t.status == TrackStatus::Tracked,
            })
            .collect();
        let assoc_high: Vec<AssocDetection<'_, T>> = high
            .iter()
            .zip(&high_embs)
            .map(|(&i, e)| AssocDetection {
                bbox: dets[i].bbox,
                embedding: e.as_ref(),
            })
            .collect();
        let low_boxes: Vec<_> = low.iter().map(|&i| dets[i].bbox).collect();
        let result =
            associate_two_stage(&assoc_tracks, &assoc_high, &low_boxes, &cfg.association())?;
        let unmatched_tracks = result.unmatched_tracks();

        let suppression = cfg.suppression();
        let mut matches = Vec::new();
        let stage1 = result
            .stage1
            .matched
            .iter()
            .zip(&result.appearance_used)
            .map(|(&(r, c), &a)| (r, high[c], Some(c), 1u8, a));
        let stage2 = result
            .stage2
            .matched
            .iter()
            .map(|&(r, c)| (r, low[c], None, 2u8, false));
        for (r, det_index, high_col, stage, appearance_used) in stage1.chain(stage2) {
            let t = &mut self.tracks[r];
            let z = dets[det_index].bbox;
            if t.status == TrackStatus::Lost {
                t.speed_buf.clear();
            }
            let alpha = if cfg.ams {
                suppression.alpha(&t.speed_buf, &z)
            } else {
                T::one()
            };
            t.kalman = kf_update(&t.kalman, &z, alpha, &self.model)?;
            let state_box = t.kalman.bbox();
            t.speed_buf.push(frame, state_box)?;
            t.status = match t.status {
                TrackStatus::New => {
                    t.confirmed = true;
                    TrackStatus::Tracked
                }
                _ => TrackStatus::Tracked,
            };
            t.frames_since_update = 0;
            t.history.push(HistoryEntry {
                frame,
                bbox: state_box,
                observed: true,
            });
            if let Some(e) = high_col.and_then(|c| high_embs[c].as_ref()) {
                t.embedding = match &t.embedding {
                    Some(old) => ema_update(old, e, cfg.ema_beta)
                        .ok()
                        .or_else(|| Some(e.clone())),
                    None => Some(e.clone()),
                };
            }
            matches.push(MatchRecord {
                track_id: t.id,
                det_index,
                stage,
                appearance_used,
                alpha,
            });
        }

        let mut removed = Vec::new();
        for &r in &unmatched_tracks {
            let t = &mut self.tracks[r];
            match t.status {
                TrackStatus::New => t.status = TrackStatus::Removed,
                TrackStatus::Tracked => {
                    t.status = TrackStatus::Lost;
                    t.frames_since_update = 1;
                }
                TrackStatus::Lost => {
                    t.frames_since_update += 1;
                    if t.frames_since_update > cfg.max_lost {
                        t.status = TrackStatus::Removed;
                    }
                }
                TrackStatus::Removed => {}
            }
            if t.status == TrackStatus::Removed {
                removed.push(t.id);
            }
        }

        let mut created = Vec::new();
        for &c in &result.stage1.unmatched_cols {
            let det = &dets[high[c]];
            if det.score <= cfg.new_track_threshold {
                continue;
            }
            let kalman = kf_init(&det.bbox, &self.model);
            let mut speed_buf = SpeedBuffer::new(cfg.buffer_span);
            speed_buf.push(frame, kalman.bbox())?;
            let id = self.next_id;
            self.next_id += 1;
            created.push(id);
            self.tracks.push(Tracklet {
                id,
                embedding: high_embs[c].clone(),
                history: vec![HistoryEntry {
                    frame,
                    bbox: kalman.bbox(),
                    observed: true,
                }],
                kalman,
                speed_buf,
                status: TrackStatus::New,
                frames_since_update: 0,
                confirmed: false,
            });
        }

        let (gone, alive): (Vec<_>, Vec<_>) = self
            .tracks
            .drain(..)
            .partition(|t| t.status == TrackStatus::Removed);
        self.tracks = alive;
        self.finished
            .extend(gone.into_iter().filter(|t| t.confirmed));

        let mut active: Vec<_> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Tracked && t.frames_since_update == 0)
            .map(|t| (t.id, t.kalman.bbox()))
            .collect();
        active.sort_by_key(|a| a.0);
        Ok(StepReport {
            frame,
            predictions,
            matches,
            created,
            removed,
            active,
        })
    }

    /// Every confirmed track seen so far, ordered by id, histories gap-filled.
    pub fn results(&self) -> Vec<Tracklet<T>> {
        let mut all: Vec<_> = self
            .finished
            .iter()
            .chain(&self.tracks)
            .filter(|t| t.confirmed)
            .cloned()
            .collect();
        all.sort_by_key(|t| t.id);
        interpolate(&all, self.cfg.max_interp_gap)
    }
}

/// Prediction step for a track that was not matched on the previous frame:
/// the size velocity is dropped so unobserved boxes keep their last size.
pub fn coast<T: Real>(st: &KalmanTrackState<T>, model: &KalmanModel<T>) -> KalmanTrackState<T> {
    let mut st = st.clone();
    st.mean[6] = T::zero();
    st.mean[7] = T::zero();
    kf_predict(&st, model)
}

/// Linearly fills runs of at most `max_gap` missing frames between two
/// observed history entries. Filled entries are marked unobserved.
pub fn interpolate<T: Real>(tracks: &[Tracklet<T>], max_gap: u32) -> Vec<Tracklet<T>> {
    tracks
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.history = interpolate_history(&t.history, max_gap);
            t
        })
        .collect()
}

pub fn interpolate_history<T: Real>(
    history: &[HistoryEntry<T>],
    max_gap: u32,
) -> Vec<HistoryEntry<T>> {
    let mut out = Vec::with_capacity(history.len());
    for (i, e) in history.iter().enumerate() {
        if let Some(prev) = i.checked_sub(1).map(|p| &history[p]) {
            let missing = e.frame.saturating_sub(prev.frame).saturating_sub(1);
            if missing >= 1 && missing <= max_gap && prev.observed && e.observed {
                let span = T::lit(f64::from(e.frame - prev.frame));
                for f in prev.frame + 1..e.frame {
                    let s = T::lit(f64::from(f - prev.frame)) / span;
                    let lerp = |a: T, b: T| a + (b - a) * s;
                    let (a, b) = (prev.bbox, e.bbox);
                    let bbox = BoundingBox {
                        x: lerp(a.x, b.x),
                        y: lerp(a.y, b.y),
                        w: lerp(a.w, b.w),
                        h: lerp(a.h, b.h),
                    };
                    out.push(HistoryEntry {
                        frame: f,
                        bbox,
                        observed: false,
                    });
                }
            }
        }
        out.push(*e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox<f64> {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn det(x: f64, score: f64) -> Detection<f64> {
        Detection::new(bb(x, 100.0, 40.0, 100.0), score)
    }

    #[test]
    fn split_examples() {
        let (h, l) = split_detections(&[det(0.0, 0.9), det(0.0, 0.3)], 0.6);
        assert_eq!((h, l), (vec![0], vec![1]));
        let (h, l) = split_detections(&[det(0.0, 0.9), det(0.0, 0.7)], 0.6);
        assert_eq!((h, l), (vec![0, 1], vec![]));
        let (h, l) = split_detections(&[det(0.0, 0.6)], 0.6);
        assert_eq!((h, l), (vec![], vec![0]));
    }

    fn state(mean: [f64; 8]) -> KalmanTrackState<f64> {
        let covariance = Matrix8::from_fn(|r, c| if r == c { 1.0 + r as f64 } else { 0.1 });
        KalmanTrackState {
            mean: crate::motion::Vector8::from_column_slice(&mean),
            covariance,
        }
    }

    #[test]
    fn compensation_examples() {
        let st = state([5.0, 5.0, 10.0, 10.0, 1.0, 0.0, 0.0, 0.0]);
        let same = motion_compensate(&st, &WarpMatrix::identity());
        assert_eq!(same, st);
        let moved = motion_compensate(&st, &WarpMatrix::translation(3.0, -2.0));
        assert_eq!(
            moved.mean.as_slice(),
            &[8.0, 3.0, 10.0, 10.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(moved.covariance, st.covariance);
        let scaled = motion_compensate(
            &st,
            &WarpMatrix::new([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0]]).unwrap(),
        );
        assert_eq!(
            scaled.mean.as_slice(),
            &[10.0, 10.0, 20.0, 20.0, 2.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(scaled.covariance, st.covariance * 4.0);
    }

    #[test]
    fn compensation_agrees_with_warping_corners() {
        // scaling about the origin maps corners to corners; rebuild the box
        let st = state([5.0, 5.0, 10.0, 10.0, 1.0, 0.0, 0.0, 0.0]);
        let w = WarpMatrix::new([[2.0, 0.0, 4.0], [0.0, 2.0, 6.0]]).unwrap();
        let b = st.bbox();
        let map = |x: f64, y: f64| (2.0 * x + 4.0, 2.0 * y + 6.0);
        let (x1, y1) = map(b.x, b.y);
        let (x2, y2) = map(b.right(), b.bottom());
        let out = motion_compensate(&st, &w).bbox();
        assert_eq!((out.x, out.y, out.right(), out.bottom()), (x1, y1, x2, y2));
    }

    #[test]
    fn no_detections_no_tracks() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        let r = t.step(1, &[], &WarpMatrix::identity()).unwrap();
        assert!(r.created.is_empty());
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn nominal_track_is_confirmed_on_second_frame() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        let r1 = t
            .step(1, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        assert_eq!(r1.created, vec![1]);
        assert_eq!(t.tracks()[0].status, TrackStatus::New);
        assert!(r1.active.is_empty());
        let r2 = t
            .step(2, &[det(102.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        assert!(r2.created.is_empty());
        assert_eq!(t.tracks()[0].status, TrackStatus::Tracked);
        assert_eq!(r2.active.len(), 1);
        assert_eq!(r2.active[0].0, 1);
        let res = t.results();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0].history.len(), 2);
    }

    #[test]
    fn rejects_non_increasing_frames() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        t.step(5, &[], &WarpMatrix::identity()).unwrap();
        assert!(matches!(
            t.step(5, &[], &WarpMatrix::identity()),
            Err(Error::NonMonotonicFrame { last: 5, got: 5 })
        ));
        assert!(t.step(4, &[], &WarpMatrix::identity()).is_err());
    }

    #[test]
    fn low_score_detections_never_start_tracks() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        t.step(
            1,
            &[det(100.0, 0.65), det(400.0, 0.5)],
            &WarpMatrix::identity(),
        )
        .unwrap();
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn unconfirmed_tracks_die_after_one_miss() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        t.step(1, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        let r = t.step(2, &[], &WarpMatrix::identity()).unwrap();
        assert_eq!(r.removed, vec![1]);
        assert!(t.results().is_empty());
    }

    #[test]
    fn lost_tracks_expire_after_max_lost() {
        let cfg = TrackerConfig {
            max_lost: 3,
            ..TrackerConfig::<f64>::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        t.step(1, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        t.step(2, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        for f in 3..=5 {
            let r = t.step(f, &[], &WarpMatrix::identity()).unwrap();
            assert!(r.removed.is_empty(), "frame {f}");
            assert_eq!(t.tracks()[0].frames_since_update, f - 2);
        }
        let r = t.step(6, &[], &WarpMatrix::identity()).unwrap();
        assert_eq!(r.removed, vec![1]);
        assert_eq!(t.results().len(), 1);
    }

    #[test]
    fn lost_track_is_reactivated_with_same_id() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        for f in 1..=5 {
            t.step(f, &[det(100.0, 0.9)], &WarpMatrix::identity())
                .unwrap();
        }
        t.step(6, &[], &WarpMatrix::identity()).unwrap();
        assert_eq!(t.tracks()[0].status, TrackStatus::Lost);
        let r = t
            .step(7, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].track_id, 1);
        assert_eq!(t.tracks()[0].status, TrackStatus::Tracked);
        assert_eq!(t.tracks()[0].frames_since_update, 0);
        assert_eq!(t.tracks()[0].speed_buf.len(), 1);
        let hist = &t.results()[0].history;
        assert_eq!(hist.len(), 7);
        assert!(!hist[5].observed);
    }

    #[test]
    fn stage_two_keeps_track_alive_on_low_score() {
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        t.step(1, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        t.step(2, &[det(100.0, 0.9)], &WarpMatrix::identity())
            .unwrap();
        let r = t
            .step(3, &[det(101.0, 0.4)], &WarpMatrix::identity())
            .unwrap();
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].stage, 2);
        assert_eq!(t.tracks()[0].status, TrackStatus::Tracked);
    }

    #[test]
    fn abnormal_jump_is_suppressed() {
        let run = |ams: bool| {
            let cfg = TrackerConfig {
                ams,
                ..TrackerConfig::<f64>::default()
            };
            let mut t = Tracker::new(cfg).unwrap();
            for f in 1..=10u32 {
                t.step(
                    f,
                    &[det(100.0 + 2.0 * f64::from(f), 0.9)],
                    &WarpMatrix::identity(),
                )
                .unwrap();
            }
            // a sudden 15 px shift, still overlapping the prediction
            let r = t
                .step(11, &[det(137.0, 0.9)], &WarpMatrix::identity())
                .unwrap();
            (r.matches[0].alpha, t.tracks()[0].kalman.mean[0])
        };
        let (a_on, x_on) = run(true);
        let (a_off, x_off) = run(false);
        assert!(a_on < 1.0);
        assert_eq!(a_off, 1.0);
        assert!(x_on < x_off);
    }

    #[test]
    fn embeddings_follow_ema() {
        let e1 = Embedding(vec![1.0, 0.0]);
        let e2 = Embedding(vec![0.0, 1.0]);
        let mut t = Tracker::new(TrackerConfig::<f64>::default()).unwrap();
        t.step(
            1,
            &[det(100.0, 0.9).with_embedding(e1.clone())],
            &WarpMatrix::identity(),
        )
        .unwrap();
        t.step(
            2,
            &[det(100.0, 0.9).with_embedding(e2.clone())],
            &WarpMatrix::identity(),
        )
        .unwrap();
        let expect = ema_update(&e1, &e2, 0.9).unwrap();
        assert_eq!(t.tracks()[0].embedding.as_ref().unwrap(), &expect);
    }

    fn obs(frame: u32, x: f64) -> HistoryEntry<f64> {
        HistoryEntry {
            frame,
            bbox: bb(x, 0.0, 10.0, 10.0),
            observed: true,
        }
    }

    #[test]
    fn interpolation_examples() {
        let h = vec![obs(1, 0.0), obs(2, 1.0)];
        assert_eq!(interpolate_history(&h, 20), h);
        let filled = interpolate_history(&[obs(1, 0.0), obs(3, 2.0)], 20);
        assert_eq!(filled.len(), 3);
        assert_eq!(filled[1].frame, 2);
        assert_eq!(filled[1].bbox.x, 1.0);
        assert!(!filled[1].observed);
        let long = interpolate_history(&[obs(1, 0.0), obs(27, 2.0)], 20);
        assert_eq!(long.len(), 2);
        assert_eq!(
            interpolate_history(&[obs(1, 0.0), obs(22, 2.0)], 20).len(),
            22
        );
        assert_eq!(
            interpolate_history(&[obs(1, 0.0), obs(23, 2.0)], 20).len(),
            2
        );
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::<f64>::default().validate().is_ok());
        let bad = TrackerConfig {
            alpha0: 1.5,
            ..TrackerConfig::<f64>::default()
        };
        assert!(Tracker::new(bad).is_err());
        let bad = TrackerConfig {
            max_lost: 0,
            ..TrackerConfig::<f64>::default()
        };
        assert!(bad.validate().is_err());
    }
}
