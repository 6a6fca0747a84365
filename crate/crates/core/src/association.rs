//! Track-to-detection costs and the two-stage matching cascade.
//!
//! Appearance distances are trusted only inside a spatial gate whose width
//! depends on whether the track is currently visible: tracks that missed the
//! previous frame get a looser IoU gate so they can be recovered by
//! appearance after drifting behind an occluder.

use crate::appearance::{cosine_distance, Embedding};
use crate::assignment::{hungarian, MatchResult};
use crate::error::{Error, Result};
use crate::geometry::{iou_distance_matrix, BoundingBox};
use crate::matrix::CostMatrix;
use crate::scalar::Real;

/// Visibility class that selects a track's IoU gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackVisibility {
    Tracked,
    Untracked,
}

/// Per-track IoU distance thresholds for the appearance gate.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionThresholds<T> {
    pub base: T,
    pub offset: T,
    pub per_track: Vec<T>,
}

pub fn occlusion_thresholds<T: Real>(
    statuses: &[TrackVisibility],
    base: T,
    offset: T,
) -> Result<OcclusionThresholds<T>> {
    if !offset.finite() || offset < T::zero() {
        return Err(Error::InvalidConfig(format!(
            "occlusion offset must be >= 0, got {}",
            offset.as_f64()
        )));
    }
    let loose = (base + offset).min(T::one());
    let per_track = statuses
        .iter()
        .map(|s| match s {
            TrackVisibility::Tracked => base,
            TrackVisibility::Untracked => loose,
        })
        .collect();
    Ok(OcclusionThresholds {
        base,
        offset,
        per_track,
    })
}

fn same_shape<T>(a: &CostMatrix<T>, b: &CostMatrix<T>) -> Result<()>
where
    T: Copy,
{
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "cost matrices {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Keeps a cosine distance only when it is below `theta_emb` and the pair's
/// IoU distance is below the track's threshold; every other entry becomes 1.
pub fn gated_embedding_distance<T: Real>(
    d_cos: &CostMatrix<T>,
    d_iou: &CostMatrix<T>,
    theta_emb: T,
    thresholds: &OcclusionThresholds<T>,
) -> Result<CostMatrix<T>> {
    same_shape(d_cos, d_iou)?;
    if thresholds.per_track.len() != d_cos.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for {} tracks",
            thresholds.per_track.len(),
            d_cos.rows()
        )));
    }
    Ok(CostMatrix::from_fn(d_cos.rows(), d_cos.cols(), |r, c| {
        let dc = d_cos.get(r, c);
        if dc < theta_emb && d_iou.get(r, c) < thresholds.per_track[r] {
            dc
        } else {
            T::one()
        }
    }))
}

/// Entrywise minimum of the IoU distance and the gated appearance distance.
pub fn fused_distance<T: Real>(
    d_iou: &CostMatrix<T>,
    d_cos_hat: &CostMatrix<T>,
) -> Result<CostMatrix<T>> {
    same_shape(d_iou, d_cos_hat)?;
    Ok(CostMatrix::from_fn(d_iou.rows(), d_iou.cols(), |r, c| {
        d_iou.get(r, c).min(d_cos_hat.get(r, c))
    }))
}

/// Cosine distances; pairs lacking an embedding on either side (or with a
/// degenerate one) get the sentinel 1.
pub fn embedding_distance_matrix<T: Real>(
    tracks: &[Option<&Embedding<T>>],
    dets: &[Option<&Embedding<T>>],
) -> CostMatrix<T> {
    CostMatrix::from_fn(tracks.len(), dets.len(), |r, c| {
        match (tracks[r], dets[c]) {
            (Some(a), Some(b)) => cosine_distance(a, b).unwrap_or(T::one()),
            _ => T::one(),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationParams<T> {
    /// Base IoU distance threshold for the appearance gate.
    pub iou_threshold: T,
    /// Added to the IoU threshold for untracked tracks.
    pub occlusion_offset: T,
    pub embedding_threshold: T,
    /// Acceptance gate on the fused stage-1 cost.
    pub stage1_gate: T,
    /// Acceptance gate on the stage-2 IoU cost.
    pub stage2_gate: T,
}

impl<T: Real> Default for AssociationParams<T> {
    fn default() -> Self {
        Self {
            iou_threshold: T::lit(0.5),
            occlusion_offset: T::lit(0.2),
            embedding_threshold: T::lit(0.25),
            stage1_gate: T::lit(0.8),
            stage2_gate: T::lit(0.5),
        }
    }
}

/// A track as seen by the matcher.
#[derive(Debug, Clone, Copy)]
pub struct AssocTrack<'a, T> {
    /// Predicted box for the current frame.
    pub bbox: BoundingBox<T>,
    /// `None` restricts the track to IoU matching.
    pub embedding: Option<&'a Embedding<T>>,
    pub visibility: TrackVisibility,
    /// Whether the track may take a low-score detection in stage 2.
    pub low_score_eligible: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AssocDetection<'a, T> {
    pub bbox: BoundingBox<T>,
    pub embedding: Option<&'a Embedding<T>>,
}

/// Result of both stages. Row indices always refer to the full track list;
/// columns index the high (stage 1) or low (stage 2) detection list.
#[derive(Debug, Clone)]
pub struct TwoStageMatch<T> {
    pub stage1: MatchResult,
    pub stage2: MatchResult,
    /// Parallel to `stage1.matched`: the fused cost came from appearance.
    pub appearance_used: Vec<bool>,
    pub stage1_cost: CostMatrix<T>,
}

impl<T> TwoStageMatch<T> {
    /// Tracks matched in neither stage.
    pub fn unmatched_tracks(&self) -> Vec<usize> {
        self.stage1
            .unmatched_rows
            .iter()
            .copied()
            .filter(|r| !self.stage2.matched.iter().any(|(m, _)| m == r))
            .collect()
    }
}

/// Stage 1: every track against high-score detections on the fused cost.
/// Stage 2: remaining eligible tracks against low-score detections on IoU.
pub fn associate_two_stage<T: Real>(
    tracks: &[AssocTrack<'_, T>],
    high: &[AssocDetection<'_, T>],
    low: &[BoundingBox<T>],
    params: &AssociationParams<T>,
) -> Result<TwoStageMatch<T>> {
    let track_boxes: Vec<_> = tracks.iter().map(|t| t.bbox).collect();
    let high_boxes: Vec<_> = high.iter().map(|d| d.bbox).collect();
    let d_iou = iou_distance_matrix(&track_boxes, &high_boxes);
    let track_embs: Vec<_> = tracks.iter().map(|t| t.embedding).collect();
    let det_embs: Vec<_> = high.iter().map(|d| d.embedding).collect();
    let d_cos = embedding_distance_matrix(&track_embs, &det_embs);
    let statuses: Vec<_> = tracks.iter().map(|t| t.visibility).collect();
    let thresholds =
        occlusion_thresholds(&statuses, params.iou_threshold, params.occlusion_offset)?;
    let d_cos_hat =
        gated_embedding_distance(&d_cos, &d_iou, params.embedding_threshold, &thresholds)?;
    let fused = fused_distance(&d_iou, &d_cos_hat)?;
    let stage1 = hungarian(&fused, Some(params.stage1_gate));
    let appearance_used = stage1
        .matched
        .iter()
        .map(|&(r, c)| d_cos_hat.get(r, c) < d_iou.get(r, c))
        .collect();

    let remaining: Vec<usize> = stage1
        .unmatched_rows
        .iter()
        .copied()
        .filter(|&r| tracks[r].low_score_eligible)
        .collect();
    let remaining_boxes: Vec<_> = remaining.iter().map(|&r| tracks[r].bbox).collect();
    let local = hungarian(
        &iou_distance_matrix(&remaining_boxes, low),
        Some(params.stage2_gate),
    );
    let stage2 = MatchResult {
        matched: local
            .matched
            .iter()
            .map(|&(r, c)| (remaining[r], c))
            .collect(),
        unmatched_rows: local.unmatched_rows.iter().map(|&r| remaining[r]).collect(),
        unmatched_cols: local.unmatched_cols,
    };
    Ok(TwoStageMatch {
        stage1,
        stage2,
        appearance_used,
        stage1_cost: fused,
    })
}
