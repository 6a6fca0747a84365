//! Seeded synthetic pedestrian scenes with depth-ordered occlusion.
//!
//! Agents are rectangles moving under piecewise-constant velocities. Each
//! frame, an agent's visible fraction is computed against every nearer agent;
//! detections are dropped, clipped or kept according to the occlusion model,
//! and carry a score, an appearance embedding and optional feature maps whose
//! contamination follows the occluded fraction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::appearance::{
    Embedding, FeatureMap, KeypointHeatmaps, Tensor3, NUM_KEYPOINTS, NUM_PARTS,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, CenterBox};
use crate::metrics::{TrackRow, TrackTable};
use crate::tracker::{AppearanceInput, Detection};

/// Velocity in effect from `start_frame` until the next segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySegment {
    pub start_frame: u32,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    /// Box at frame 1.
    pub start: CenterBox<f64>,
    pub velocity: Vec<VelocitySegment>,
    /// Smaller is nearer the camera.
    pub depth: f64,
    /// Unit identity vector.
    pub latent: Vec<f64>,
}

impl AgentSpec {
    fn velocity_at(&self, frame: u32) -> (f64, f64) {
        self.velocity
            .iter()
            .rev()
            .find(|s| s.start_frame <= frame)
            .map_or((0.0, 0.0), |s| (s.vx, s.vy))
    }
}

/// How a partially occluded agent's detection box is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipMode {
    /// Always the bounding box of the visible region.
    Visible,
    /// The full box while the visible fraction stays at or above
    /// `snap_below`, the visible region's bounding box below it.
    Amodal { snap_below: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionModel {
    /// Agents less visible than this are not detected.
    pub v_full: f64,
    pub clip: ClipMode,
}

impl Default for OcclusionModel {
    fn default() -> Self {
        Self {
            v_full: 0.25,
            clip: ClipMode::Amodal { snap_below: 0.75 },
        }
    }
}

/// Grid size and noise of rendered per-detection feature maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMapSpec {
    pub grid_h: usize,
    pub grid_w: usize,
    pub noise_std: f64,
}

impl Default for FeatureMapSpec {
    fn default() -> Self {
        Self {
            grid_h: 16,
            grid_w: 8,
            noise_std: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub duration: u32,
    pub width: f64,
    pub height: f64,
    pub agents: Vec<AgentSpec>,
    /// Per-edge Gaussian noise on emitted boxes, pixels.
    pub det_noise_std: f64,
    pub occlusion: OcclusionModel,
    pub embedding_noise_std: f64,
    pub feature_maps: Option<FeatureMapSpec>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.duration < 1 {
            return bad("duration must be at least 1".into());
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("image size must be positive".into());
        }
        if !(self.det_noise_std >= 0.0 && self.embedding_noise_std >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.occlusion.v_full) {
            return bad("v_full must lie in [0, 1]".into());
        }
        let dim = self.agents.first().map_or(0, |a| a.latent.len());
        for (i, a) in self.agents.iter().enumerate() {
            a.start
                .to_tlwh()
                .validate()
                .map_err(|e| Error::InvalidScenario(format!("agent {i}: {e}")))?;
            if a.latent.len() != dim || dim == 0 {
                return bad(format!("agent {i}: latent dimension differs or is zero"));
            }
            let n: f64 = a.latent.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return bad(format!("agent {i}: latent is not unit length"));
            }
            if !a.depth.is_finite() || self.agents[..i].iter().any(|b| b.depth == a.depth) {
                return bad(format!("agent {i}: depth must be finite and unique"));
            }
            if a.velocity
                .windows(2)
                .any(|w| w[1].start_frame <= w[0].start_frame)
            {
                return bad(format!("agent {i}: velocity segments must be ordered"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDetection {
    pub agent: usize,
    pub bbox: BoundingBox<f64>,
    pub score: f64,
    /// Visible fraction of the agent's box.
    pub visibility: f64,
    pub embedding: Vec<f64>,
    pub part_visibility: [f64; NUM_PARTS],
    pub appearance: Option<AppearanceInput<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFrame {
    pub frame: u32,
    /// `(agent, full box)` for every agent inside the image.
    pub gt: Vec<(usize, BoundingBox<f64>)>,
    /// In shuffled order.
    pub detections: Vec<SimDetection>,
    /// Visible fraction per agent, `None` when outside the image.
    pub visibility: Vec<Option<f64>>,
}

impl SimulatedFrame {
    /// Detections in the tracker's input form; feature maps are passed only
    /// when `pixel_inputs` is set.
    pub fn tracker_detections(&self, pixel_inputs: bool) -> Vec<Detection<f64>> {
        self.detections
            .iter()
            .map(|d| Detection {
                bbox: d.bbox,
                score: d.score,
                embedding: Some(Embedding(d.embedding.clone())),
                appearance: if pixel_inputs {
                    d.appearance.clone()
                } else {
                    None
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub spec: ScenarioSpec,
    pub frames: Vec<SimulatedFrame>,
}

impl Simulation {
    /// Ground truth with agent `i` as id `i + 1`.
    pub fn gt_table(&self) -> TrackTable {
        let rows = self
            .frames
            .iter()
            .flat_map(|f| {
                f.gt.iter().map(move |(a, b)| TrackRow {
                    frame: f.frame,
                    id: *a as i64 + 1,
                    bbox: *b,
                })
            })
            .collect();
        TrackTable::new(rows).expect("generated ground truth is valid")
    }

    /// Number of times an agent's visible fraction drops from at least
    /// `threshold` to below it.
    pub fn occlusion_events(&self, threshold: f64) -> usize {
        let mut events = 0;
        for a in 0..self.spec.agents.len() {
            let mut prev: Option<f64> = None;
            for f in &self.frames {
                let v = f.visibility[a];
                if let (Some(p), Some(v)) = (prev, v) {
                    if p >= threshold && v < threshold {
                        events += 1;
                    }
                }
                prev = v;
            }
        }
        events
    }

    /// Runs of consecutive in-image frames without a detection, per agent,
    /// as `(first missing frame, length)`. Runs touching the sequence ends
    /// are included.
    pub fn detection_gaps(&self, agent: usize) -> Vec<(u32, u32)> {
        let mut gaps = Vec::new();
        let mut run: Option<(u32, u32)> = None;
        for f in &self.frames {
            let present = f.visibility[agent].is_some();
            let detected = f.detections.iter().any(|d| d.agent == agent);
            if present && !detected {
                run = Some(run.map_or((f.frame, 1), |(s, n)| (s, n + 1)));
            } else if let Some(r) = run.take() {
                gaps.push(r);
            }
        }
        gaps.extend(run);
        gaps
    }
}

/// Visible area of `target` not covered by any occluder, the bounding box of
/// that region, and the index of the occluder covering the most area.
///
/// Exact for rectangles: the target is cut along every occluder edge into
/// cells that are either fully covered or fully visible.
pub fn visible_region(
    target: &BoundingBox<f64>,
    occluders: &[BoundingBox<f64>],
) -> (f64, Option<BoundingBox<f64>>, Option<usize>) {
    let clip = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);
    let mut xs = vec![target.x, target.right()];
    let mut ys = vec![target.y, target.bottom()];
    for o in occluders {
        xs.extend([
            clip(o.x, target.x, target.right()),
            clip(o.right(), target.x, target.right()),
        ]);
        ys.extend([
            clip(o.y, target.y, target.bottom()),
            clip(o.bottom(), target.y, target.bottom()),
        ]);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut area = 0.0;
    let (mut x1, mut y1, mut x2, mut y2) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (mx, my) = ((xw[0] + xw[1]) * 0.5, (yw[0] + yw[1]) * 0.5);
            let covered = occluders
                .iter()
                .any(|o| mx > o.x && mx < o.right() && my > o.y && my < o.bottom());
            if !covered {
                area += (xw[1] - xw[0]) * (yw[1] - yw[0]);
                x1 = x1.min(xw[0]);
                y1 = y1.min(yw[0]);
                x2 = x2.max(xw[1]);
                y2 = y2.max(yw[1]);
            }
        }
    }
    let aabb = (area > 0.0).then_some(BoundingBox {
        x: x1,
        y: y1,
        w: x2 - x1,
        h: y2 - y1,
    });
    let main = occluders
        .iter()
        .enumerate()
        .map(|(i, o)| (i, target.intersection_area(o)))
        .filter(|(_, a)| *a > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    (area, aabb, main)
}

/// Part rectangles as `(x0, y0, x1, y1)` fractions of a frontal box, in
/// part order head, torso, left arm, right arm, left leg, right leg.
const PART_LAYOUT: [(f64, f64, f64, f64); NUM_PARTS] = [
    (0.30, 0.00, 0.70, 0.18),
    (0.25, 0.18, 0.75, 0.55),
    (0.00, 0.18, 0.25, 0.55),
    (0.75, 0.18, 1.00, 0.55),
    (0.25, 0.55, 0.50, 1.00),
    (0.50, 0.55, 0.75, 1.00),
];

/// Canonical keypoint positions as fractions of the box.
const KEYPOINT_LAYOUT: [(f64, f64); NUM_KEYPOINTS] = [
    (0.50, 0.08),
    (0.45, 0.06),
    (0.55, 0.06),
    (0.40, 0.08),
    (0.60, 0.08),
    (0.30, 0.22),
    (0.70, 0.22),
    (0.15, 0.38),
    (0.85, 0.38),
    (0.12, 0.52),
    (0.88, 0.52),
    (0.38, 0.55),
    (0.62, 0.55),
    (0.38, 0.76),
    (0.62, 0.76),
    (0.38, 0.95),
    (0.62, 0.95),
];

fn sub_box(b: &BoundingBox<f64>, (x0, y0, x1, y1): (f64, f64, f64, f64)) -> BoundingBox<f64> {
    BoundingBox {
        x: b.x + x0 * b.w,
        y: b.y + y0 * b.h,
        w: (x1 - x0) * b.w,
        h: (y1 - y0) * b.h,
    }
}

fn point_covered(x: f64, y: f64, occluders: &[BoundingBox<f64>]) -> bool {
    occluders
        .iter()
        .any(|o| x > o.x && x < o.right() && y > o.y && y < o.bottom())
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

/// Adds per-edge noise and clamps the result into `limit`; falls back to the
/// noiseless box if the noisy one collapses.
fn jitter(
    b: &BoundingBox<f64>,
    limit: &BoundingBox<f64>,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> BoundingBox<f64> {
    let mut e = [b.x, b.y, b.right(), b.bottom()];
    for v in &mut e {
        *v += noise.sample(rng);
    }
    let x1 = e[0].clamp(limit.x, limit.right());
    let x2 = e[2].clamp(limit.x, limit.right());
    let y1 = e[1].clamp(limit.y, limit.bottom());
    let y2 = e[3].clamp(limit.y, limit.bottom());
    if x2 - x1 >= 1.0 && y2 - y1 >= 1.0 {
        BoundingBox {
            x: x1,
            y: y1,
            w: x2 - x1,
            h: y2 - y1,
        }
    } else {
        *b
    }
}

struct Scene<'a> {
    spec: &'a ScenarioSpec,
    boxes: Vec<Option<BoundingBox<f64>>>,
}

impl Scene<'_> {
    fn occluders_of(&self, agent: usize) -> Vec<(usize, BoundingBox<f64>)> {
        let depth = self.spec.agents[agent].depth;
        self.boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                b.filter(|_| self.spec.agents[i].depth < depth)
                    .map(|b| (i, b))
            })
            .collect()
    }

    /// Nearest agent covering a point.
    fn owner_at(&self, x: f64, y: f64) -> Option<usize> {
        self.boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                b.is_some_and(|b| x > b.x && x < b.right() && y > b.y && y < b.bottom())
            })
            .min_by(|a, b| {
                self.spec.agents[a.0]
                    .depth
                    .total_cmp(&self.spec.agents[b.0].depth)
            })
            .map(|(i, _)| i)
    }

    fn render(
        &self,
        agent: usize,
        crop: &BoundingBox<f64>,
        fm: &FeatureMapSpec,
        rng: &mut ChaCha8Rng,
    ) -> AppearanceInput<f64> {
        let dim = self.spec.agents[agent].latent.len();
        let (gh, gw) = (fm.grid_h, fm.grid_w);
        let noise = Normal::new(0.0, fm.noise_std).expect("validated noise");
        let cell_center = |gy: usize, gx: usize| {
            (
                crop.x + (gx as f64 + 0.5) / gw as f64 * crop.w,
                crop.y + (gy as f64 + 0.5) / gh as f64 * crop.h,
            )
        };
        let mut data = Vec::with_capacity(gh * gw * dim);
        for gy in 0..gh {
            for gx in 0..gw {
                let (x, y) = cell_center(gy, gx);
                let owner = self.owner_at(x, y);
                for c in 0..dim {
                    let base = owner.map_or(0.0, |o| self.spec.agents[o].latent[c]);
                    data.push(base + noise.sample(rng));
                }
            }
        }
        let features = FeatureMap(Tensor3::new(gh, gw, dim, data).expect("sized above"));
        let full = self.boxes[agent].expect("rendered agents are present");
        let occluders: Vec<_> = self
            .occluders_of(agent)
            .into_iter()
            .map(|(_, b)| b)
            .collect();
        // visible keypoints become Gaussian blobs one cell wide
        let mut maps = Tensor3::zeros(gh, gw, NUM_KEYPOINTS);
        for (k, (fx, fy)) in KEYPOINT_LAYOUT.iter().enumerate() {
            let (x, y) = (full.x + fx * full.w, full.y + fy * full.h);
            if point_covered(x, y, &occluders)
                || !(x > crop.x && x < crop.right() && y > crop.y && y < crop.bottom())
            {
                continue;
            }
            let (u, v) = (
                (x - crop.x) / crop.w * gw as f64,
                (y - crop.y) / crop.h * gh as f64,
            );
            for gy in 0..gh {
                for gx in 0..gw {
                    let d2 = (gx as f64 + 0.5 - u).powi(2) + (gy as f64 + 0.5 - v).powi(2);
                    *maps.at_mut(gy, gx, k) = (-0.5 * d2).exp();
                }
            }
        }
        let heatmaps = KeypointHeatmaps::from_peaks(maps).expect("values in [0, 1]");
        AppearanceInput { features, heatmaps }
    }
}

/// Generates every frame of a scenario. Output depends only on `spec`.
pub fn generate(spec: &ScenarioSpec) -> Result<Simulation> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let det_noise =
        Normal::new(0.0, spec.det_noise_std).map_err(|e| Error::InvalidScenario(e.to_string()))?;
    let emb_noise = Normal::new(0.0, spec.embedding_noise_std)
        .map_err(|e| Error::InvalidScenario(e.to_string()))?;
    if let Some(fm) = &spec.feature_maps {
        if fm.grid_h == 0 || fm.grid_w == 0 || fm.noise_std.is_nan() || fm.noise_std < 0.0 {
            return Err(Error::InvalidScenario(
                "feature map grid must be non-empty with non-negative noise".into(),
            ));
        }
    }
    let image = BoundingBox {
        x: 0.0,
        y: 0.0,
        w: spec.width,
        h: spec.height,
    };
    let mut centers: Vec<CenterBox<f64>> = spec.agents.iter().map(|a| a.start).collect();
    let mut frames = Vec::with_capacity(spec.duration as usize);
    for frame in 1..=spec.duration {
        if frame > 1 {
            for (c, a) in centers.iter_mut().zip(&spec.agents) {
                let (vx, vy) = a.velocity_at(frame - 1);
                c.cx += vx;
                c.cy += vy;
            }
        }
        let boxes: Vec<Option<BoundingBox<f64>>> = centers
            .iter()
            .map(|c| c.to_tlwh())
            .map(|b| image.contains(&b).then_some(b))
            .collect();
        let scene = Scene { spec, boxes };
        let mut gt = Vec::new();
        let mut detections = Vec::new();
        let mut visibility = vec![None; spec.agents.len()];
        for (i, agent) in spec.agents.iter().enumerate() {
            let Some(full) = scene.boxes[i] else { continue };
            gt.push((i, full));
            let occ = scene.occluders_of(i);
            let occ_boxes: Vec<_> = occ.iter().map(|(_, b)| *b).collect();
            let (area, aabb, main) = visible_region(&full, &occ_boxes);
            let v = (area / full.area()).clamp(0.0, 1.0);
            visibility[i] = Some(v);
            // draw noise unconditionally so that one agent's fate does not
            // shift the random stream of the others
            let noise: Vec<f64> = (0..agent.latent.len())
                .map(|_| emb_noise.sample(&mut rng))
                .collect();
            let jittered_seed: u64 = rng.random();
            if v < spec.occlusion.v_full {
                continue;
            }
            let Some(aabb) = aabb else { continue };
            let clean = match spec.occlusion.clip {
                ClipMode::Visible => aabb,
                ClipMode::Amodal { snap_below } if v >= snap_below => full,
                ClipMode::Amodal { .. } => aabb,
            };
            let mut local = ChaCha8Rng::seed_from_u64(jittered_seed);
            let limit = full.intersection(&image).unwrap_or(full);
            let bbox = if spec.det_noise_std > 0.0 {
                jitter(&clean, &limit, &det_noise, &mut local)
            } else {
                clean
            };
            let occluder_latent = main.map(|m| &spec.agents[occ[m].0].latent);
            let embedding = normalize(
                (0..agent.latent.len())
                    .map(|c| {
                        v * agent.latent[c]
                            + occluder_latent.map_or(0.0, |o| (1.0 - v) * o[c])
                            + noise[c]
                    })
                    .collect(),
            );
            let part_visibility = std::array::from_fn(|p| {
                let part = sub_box(&full, PART_LAYOUT[p]);
                (visible_region(&part, &occ_boxes).0 / part.area()).clamp(0.0, 1.0)
            });
            let appearance = spec
                .feature_maps
                .as_ref()
                .map(|fm| scene.render(i, &clean, fm, &mut local));
            detections.push(SimDetection {
                agent: i,
                bbox,
                score: v.clamp(0.5, 0.99),
                visibility: v,
                embedding,
                part_visibility,
                appearance,
            });
        }
        detections.shuffle(&mut rng);
        frames.push(SimulatedFrame {
            frame,
            gt,
            detections,
            visibility,
        });
    }
    Ok(Simulation {
        spec: spec.clone(),
        frames,
    })
}

/// Scenario families used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Cross,
    Follow,
    Linger,
    Crowd,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Cross, Suite::Follow, Suite::Linger, Suite::Crowd];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cross => "cross",
            Suite::Follow => "follow",
            Suite::Linger => "linger",
            Suite::Crowd => "crowd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

pub const IMAGE_WIDTH: f64 = 1280.0;
pub const IMAGE_HEIGHT: f64 = 720.0;
pub const LATENT_DIM: usize = 32;

fn random_latent(rng: &mut ChaCha8Rng) -> Vec<f64> {
    normalize(
        (0..LATENT_DIM)
            .map(|_| StandardNormal.sample(rng))
            .collect(),
    )
}

fn constant(vx: f64, vy: f64) -> Vec<VelocitySegment> {
    vec![VelocitySegment {
        start_frame: 1,
        vx,
        vy,
    }]
}

fn base_spec(name: &str, seed: u64, duration: u32, agents: Vec<AgentSpec>) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        seed,
        duration,
        width: IMAGE_WIDTH,
        height: IMAGE_HEIGHT,
        agents,
        det_noise_std: 1.0,
        occlusion: OcclusionModel::default(),
        embedding_noise_std: 0.05,
        feature_maps: None,
    }
}

/// Two pedestrians crossing; the farther one is clipped for about two frames,
/// fully hidden for about ten and may change speed while hidden.
fn cross(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC055);
    let h_rear = rng.random_range(90.0..110.0);
    let w_rear = 0.4 * h_rear;
    // the detector clips the rear box while 25% to 75% of it is covered
    let clip_frames = rng.random_range(1.5..2.5);
    let rel = 0.5 * w_rear / clip_frames;
    let w_front = 0.5 * w_rear + 10.0 * rel;
    let h_front = w_front / 0.45;
    let share = rng.random_range(0.35..0.65);
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let (v_rear, v_front) = (dir * rel * share, -dir * rel * (1.0 - share));
    let t_cross = 60.0;
    let cy = rng.random_range(300.0..420.0);
    let slack = (h_front - h_rear) * 0.5;
    let cy_front = cy + rng.random_range(-0.8..0.8) * slack;
    let phase = rng.random_range(-0.5..0.5);
    let rear_speed_after = v_rear * rng.random_range(0.75..1.25);
    let rear = AgentSpec {
        start: CenterBox {
            cx: 640.0 - v_rear * (t_cross - 1.0 + phase),
            cy,
            w: w_rear,
            h: h_rear,
        },
        velocity: vec![
            VelocitySegment {
                start_frame: 1,
                vx: v_rear,
                vy: 0.0,
            },
            VelocitySegment {
                start_frame: t_cross as u32,
                vx: rear_speed_after,
                vy: 0.0,
            },
        ],
        depth: 2.0,
        latent: random_latent(&mut rng),
    };
    let front = AgentSpec {
        start: CenterBox {
            cx: 640.0 - v_front * (t_cross - 1.0),
            cy: cy_front,
            w: w_front,
            h: h_front,
        },
        velocity: constant(v_front, 0.0),
        depth: 1.0,
        latent: random_latent(&mut rng),
    };
    base_spec("cross", seed, 120, vec![rear, front])
}

/// One pedestrian walking just behind and beside another, partially hidden
/// most of the time.
fn follow(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF011);
    let h_rear = rng.random_range(90.0..105.0);
    let h_front = h_rear * rng.random_range(1.05..1.15);
    let (w_rear, w_front) = (0.4 * h_rear, 0.42 * h_front);
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let speed = dir * rng.random_range(1.5..2.5);
    let cy = rng.random_range(300.0..420.0);
    let x0 = if dir > 0.0 { 200.0 } else { 1080.0 };
    // the rear agent oscillates between 10% and 40% overlap with the front
    let lead = 0.5 * (w_front + w_rear);
    let offset_mid = lead - 0.25 * w_rear;
    let swing = 0.15 * w_rear;
    let period = rng.random_range(24u32..36);
    let rate = 2.0 * swing / f64::from(period);
    let mut velocity = Vec::new();
    let mut f = 1;
    let first = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut sign = first;
    while f < 200 {
        velocity.push(VelocitySegment {
            start_frame: f,
            vx: speed + sign * rate,
            vy: 0.0,
        });
        sign = -sign;
        f += period;
    }
    let rear = AgentSpec {
        start: CenterBox {
            cx: x0 - dir * (offset_mid + dir * first * swing),
            cy,
            w: w_rear,
            h: h_rear,
        },
        velocity,
        depth: 2.0,
        latent: random_latent(&mut rng),
    };
    let front = AgentSpec {
        start: CenterBox {
            cx: x0,
            cy: cy + rng.random_range(-0.3..0.3) * (h_front - h_rear),
            w: w_front,
            h: h_front,
        },
        velocity: constant(speed, 0.0),
        depth: 1.0,
        latent: random_latent(&mut rng),
    };
    base_spec("follow", seed, 120, vec![rear, front])
}

/// A pedestrian hurrying past a parked vehicle, hidden for exactly 30 frames.
fn linger(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1146);
    let h_rear = rng.random_range(90.0..110.0);
    let w_rear = 0.4 * h_rear;
    let clip_frames = rng.random_range(1.5..2.5);
    let speed = 0.5 * w_rear / clip_frames;
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let gap = 30.0;
    // covered beyond 75% for a displacement of w_front - w_rear / 2
    let w_front = gap * speed + 0.5 * w_rear;
    let h_front = h_rear * 1.4;
    let cy = rng.random_range(300.0..420.0);
    let cx_front = 640.0;
    let front_left = cx_front - 0.5 * w_front;
    let t_hide = 25.0;
    // place the rear agent so that the hidden interval starts half a frame
    // before `t_hide`, making the gap exactly `gap` frames long
    let rear_left_at_hide = if dir > 0.0 {
        front_left - 0.25 * w_rear
    } else {
        front_left + w_front - 0.75 * w_rear
    };
    let rear_left_start = rear_left_at_hide - dir * speed * (t_hide - 0.5 - 1.0);
    let rear = AgentSpec {
        start: CenterBox {
            cx: rear_left_start + 0.5 * w_rear,
            cy,
            w: w_rear,
            h: h_rear,
        },
        velocity: constant(dir * speed, 0.0),
        depth: 2.0,
        latent: random_latent(&mut rng),
    };
    let front = AgentSpec {
        start: CenterBox {
            cx: cx_front,
            cy: cy + rng.random_range(-0.3..0.3) * (h_front - h_rear),
            w: w_front,
            h: h_front,
        },
        velocity: constant(0.0, 0.0),
        depth: 1.0,
        latent: random_latent(&mut rng),
    };
    base_spec("linger", seed, 85, vec![rear, front])
}

/// Twelve pedestrians in four walking lanes, half in each direction, some
/// changing pace part way.
fn crowd(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FD);
    let duration = 150u32;
    let lanes = [300.0, 350.0, 400.0];
    let mut agents = Vec::new();
    for i in 0..12 {
        let lane = lanes[i % 3];
        let bottom = lane + rng.random_range(-8.0..8.0);
        let h = 70.0 + 0.15 * (bottom - 200.0) + rng.random_range(-5.0..5.0);
        let w = 0.4 * h;
        let dir = if i % 2 == 0 { 1.0 } else { -1.0 };
        let speed: f64 = rng.random_range(1.0..2.6);
        let change_at = rng.random_range(40u32..110);
        let speed2 = speed * rng.random_range(0.6..1.4);
        let travel = speed.max(speed2) * f64::from(duration);
        let margin = 0.5 * w + 5.0;
        let (lo, hi) = if dir > 0.0 {
            (margin, IMAGE_WIDTH - margin - travel)
        } else {
            (margin + travel, IMAGE_WIDTH - margin)
        };
        let cx = if hi > lo {
            rng.random_range(lo..hi)
        } else {
            0.5 * (lo + hi)
        };
        agents.push(AgentSpec {
            start: CenterBox {
                cx,
                cy: bottom - 0.5 * h,
                w,
                h,
            },
            velocity: vec![
                VelocitySegment {
                    start_frame: 1,
                    vx: dir * speed,
                    vy: rng.random_range(-0.1..0.1),
                },
                VelocitySegment {
                    start_frame: change_at,
                    vx: dir * speed2,
                    vy: 0.0,
                },
            ],
            depth: 1000.0 - bottom + i as f64 * 1e-3,
            latent: random_latent(&mut rng),
        });
    }
    base_spec("crowd", seed, duration, agents)
}

/// Canned scenario for a suite and seed.
pub fn standard_suite(suite: Suite, seed: u64) -> ScenarioSpec {
    match suite {
        Suite::Cross => cross(seed),
        Suite::Follow => follow(seed),
        Suite::Linger => linger(seed),
        Suite::Crowd => crowd(seed),
    }
}

/// Like [`standard_suite`] with the suite given by name.
pub fn standard_suite_named(name: &str, seed: u64) -> Result<ScenarioSpec> {
    Ok(standard_suite(Suite::parse(name)?, seed))
}
