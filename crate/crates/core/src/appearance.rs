//! Pose-guided appearance embeddings.
//!
//! Feature maps and keypoint heatmaps come from external models; this module
//! only does the deterministic math on top of them: grouping 17 COCO keypoint
//! heatmaps into six body parts, part-masked pooling, the local and global
//! necks, visibility-weighted fusion, EMA maintenance and cosine distances.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NUM_KEYPOINTS: usize = 17;
pub const NUM_PARTS: usize = 6;

/// Body parts in embedding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BodyPart {
    Head,
    Torso,
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
}

impl BodyPart {
    pub const ALL: [BodyPart; NUM_PARTS] = [
        BodyPart::Head,
        BodyPart::Torso,
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Part owning each COCO keypoint: nose, eyes, ears, shoulders, elbows,
/// wrists, hips, knees, ankles (left before right).
pub const KEYPOINT_PARTS: [BodyPart; NUM_KEYPOINTS] = [
    BodyPart::Head,
    BodyPart::Head,
    BodyPart::Head,
    BodyPart::Head,
    BodyPart::Head,
    BodyPart::Torso,
    BodyPart::Torso,
    BodyPart::LeftArm,
    BodyPart::RightArm,
    BodyPart::LeftArm,
    BodyPart::RightArm,
    BodyPart::Torso,
    BodyPart::Torso,
    BodyPart::LeftLeg,
    BodyPart::RightLeg,
    BodyPart::LeftLeg,
    BodyPart::RightLeg,
];

/// Row-major `H x W x C` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tensor dims must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "tensor {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.finite()) {
            return Err(Error::DimensionMismatch(
                "tensor holds non-finite values".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![T::zero(); height * width * channels],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn at(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn at_mut(&mut self, y: usize, x: usize, c: usize) -> &mut T {
        &mut self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    /// Values of one spatial cell across channels.
    pub fn cell(&self, y: usize, x: usize) -> &[T] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn channel_max(&self, c: usize) -> T {
        (0..self.height * self.width)
            .map(|i| self.data[i * self.channels + c])
            .fold(T::zero(), |m, v| m.max(v))
    }
}

/// Backbone appearance feature `H x W x C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T>(pub Tensor3<T>);

/// Keypoint heatmaps `H x W x 17` with per-keypoint confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointHeatmaps<T> {
    pub maps: Tensor3<T>,
    pub confidence: [T; NUM_KEYPOINTS],
}

/// Body-part heatmaps `H x W x 6` with per-part confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct PartHeatmaps<T> {
    pub maps: Tensor3<T>,
    pub confidence: [T; NUM_PARTS],
}

impl<T: Real> KeypointHeatmaps<T> {
    pub fn new(maps: Tensor3<T>, confidence: [T; NUM_KEYPOINTS]) -> Result<Self> {
        if maps.dims().2 != NUM_KEYPOINTS {
            return Err(Error::DimensionMismatch(format!(
                "keypoint heatmaps need {NUM_KEYPOINTS} channels, got {}",
                maps.dims().2
            )));
        }
        let unit = |v: &T| *v >= T::zero() && *v <= T::one();
        if !maps.values().iter().all(unit) || !confidence.iter().all(unit) {
            return Err(Error::DimensionMismatch(
                "heatmap values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { maps, confidence })
    }

    /// Heatmaps whose keypoint confidence is the peak of each channel.
    pub fn from_peaks(maps: Tensor3<T>) -> Result<Self> {
        let confidence = std::array::from_fn(|k| {
            if k < maps.dims().2 {
                maps.channel_max(k)
            } else {
                T::zero()
            }
        });
        Self::new(maps, confidence)
    }
}

/// An appearance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T>(pub Vec<T>);

impl<T: Real> Embedding<T> {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= T::zero() || !n.finite() {
            return Err(Error::DegenerateEmbedding(
                "cannot normalize a zero or non-finite embedding",
            ));
        }
        Ok(Self(self.0.iter().map(|v| *v / n).collect()))
    }

    pub fn cast<U: Real>(&self) -> Embedding<U> {
        Embedding(self.0.iter().map(|v| U::lit(v.as_f64())).collect())
    }
}

fn same_dim<T: Real>(a: &Embedding<T>, b: &Embedding<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "embedding dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Sum member keypoint channels per part and clamp to `[0, 1]`; a part's
/// confidence is the best confidence among its keypoints.
pub fn group_heatmaps<T: Real>(h: &KeypointHeatmaps<T>) -> PartHeatmaps<T> {
    let (height, width, _) = h.maps.dims();
    let mut maps = Tensor3::zeros(height, width, NUM_PARTS);
    for y in 0..height {
        for x in 0..width {
            for (k, part) in KEYPOINT_PARTS.iter().enumerate() {
                *maps.at_mut(y, x, part.index()) += h.maps.at(y, x, k);
            }
            for p in 0..NUM_PARTS {
                let v: &mut T = maps.at_mut(y, x, p);
                *v = v.min(T::one());
            }
        }
    }
    let mut confidence = [T::zero(); NUM_PARTS];
    for (k, part) in KEYPOINT_PARTS.iter().enumerate() {
        let c = &mut confidence[part.index()];
        *c = c.max(h.confidence[k]);
    }
    PartHeatmaps { maps, confidence }
}

/// Spatial sums of the feature map masked by each part heatmap.
pub fn part_embeddings<T: Real>(
    f: &FeatureMap<T>,
    p: &PartHeatmaps<T>,
) -> Result<[Embedding<T>; NUM_PARTS]> {
    let (fh, fw, channels) = f.0.dims();
    let (ph, pw, _) = p.maps.dims();
    if (fh, fw) != (ph, pw) {
        return Err(Error::DimensionMismatch(format!(
            "feature map {fh}x{fw} vs part heatmaps {ph}x{pw}"
        )));
    }
    let mut parts: [Embedding<T>; NUM_PARTS] = std::array::from_fn(|_| Embedding::zeros(channels));
    for y in 0..fh {
        for x in 0..fw {
            let feat = f.0.cell(y, x);
            for (i, part) in parts.iter_mut().enumerate() {
                let m = p.maps.at(y, x, i);
                if m == T::zero() {
                    continue;
                }
                for (acc, v) in part.0.iter_mut().zip(feat) {
                    *acc += *v * m;
                }
            }
        }
    }
    Ok(parts)
}

/// Linear map from the concatenated part embeddings (`6C`) to `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProjection<T> {
    out_dim: usize,
    in_dim: usize,
    weights: Vec<T>,
}

impl<T: Real> LocalProjection<T> {
    pub fn new(out_dim: usize, in_dim: usize, weights: Vec<T>) -> Result<Self> {
        if weights.len() != out_dim * in_dim || out_dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "projection {out_dim}x{in_dim} with {} weights",
                weights.len()
            )));
        }
        Ok(Self {
            out_dim,
            in_dim,
            weights,
        })
    }

    /// Averages the six part blocks channel by channel.
    pub fn block_average(channels: usize) -> Self {
        let in_dim = NUM_PARTS * channels;
        let w = T::one() / T::count(NUM_PARTS);
        let mut weights = vec![T::zero(); channels * in_dim];
        for c in 0..channels {
            for p in 0..NUM_PARTS {
                weights[c * in_dim + p * channels + c] = w;
            }
        }
        Self {
            out_dim: channels,
            in_dim,
            weights,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn apply(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "projection expects {} inputs, got {}",
                self.in_dim,
                input.len()
            )));
        }
        Ok(self
            .weights
            .chunks(self.in_dim)
            .map(|row| {
                row.iter()
                    .zip(input)
                    .fold(T::zero(), |acc, (w, v)| acc + *w * *v)
            })
            .collect())
    }
}

pub fn local_neck<T: Real>(
    parts: &[Embedding<T>; NUM_PARTS],
    proj: &LocalProjection<T>,
) -> Result<Embedding<T>> {
    let concat: Vec<T> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
    Ok(Embedding(proj.apply(&concat)?))
}

/// Global average pooling over the spatial grid.
pub fn global_neck<T: Real>(f: &FeatureMap<T>) -> Embedding<T> {
    let (h, w, c) = f.0.dims();
    let mut out = vec![T::zero(); c];
    for y in 0..h {
        for x in 0..w {
            for (acc, v) in out.iter_mut().zip(f.0.cell(y, x)) {
                *acc += *v;
            }
        }
    }
    let n = T::count(h * w);
    Embedding(out.into_iter().map(|v| v / n).collect())
}

pub fn count_confident_parts<T: Real>(p: &PartHeatmaps<T>, threshold: T) -> usize {
    p.confidence.iter().filter(|&&c| c > threshold).count()
}

/// `(n/6) E_local + ((6 - n)/6) E_global`.
pub fn adaptive_fuse<T: Real>(
    local: &Embedding<T>,
    global: &Embedding<T>,
    visible_parts: usize,
) -> Result<Embedding<T>> {
    same_dim(local, global)?;
    if visible_parts > NUM_PARTS {
        return Err(Error::DimensionMismatch(format!(
            "visible part count {visible_parts} exceeds {NUM_PARTS}"
        )));
    }
    match visible_parts {
        NUM_PARTS => return Ok(local.clone()),
        0 => return Ok(global.clone()),
        _ => {}
    }
    let wl = T::count(visible_parts) / T::count(NUM_PARTS);
    let wg = T::count(NUM_PARTS - visible_parts) / T::count(NUM_PARTS);
    Ok(Embedding(
        local
            .0
            .iter()
            .zip(&global.0)
            .map(|(l, g)| wl * *l + wg * *g)
            .collect(),
    ))
}

/// `(1 - beta) track + beta det`, renormalized to unit length.
pub fn ema_update<T: Real>(
    track: &Embedding<T>,
    det: &Embedding<T>,
    beta: T,
) -> Result<Embedding<T>> {
    same_dim(track, det)?;
    let keep = T::one() - beta;
    Embedding(
        track
            .0
            .iter()
            .zip(&det.0)
            .map(|(t, d)| keep * *t + beta * *d)
            .collect(),
    )
    .normalized()
    .map_err(|_| Error::DegenerateEmbedding("EMA update produced a zero vector"))
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance<T: Real>(a: &Embedding<T>, b: &Embedding<T>) -> Result<T> {
    same_dim(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na <= T::zero() || nb <= T::zero() {
        return Err(Error::DegenerateEmbedding(
            "cosine distance of a zero vector",
        ));
    }
    let cos = (a.dot(b) / (na * nb)).max(-T::one()).min(T::one());
    Ok(T::one() - cos)
}

/// How detection embeddings are formed from feature maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    /// Visibility-weighted mix of part-guided and global embeddings.
    #[default]
    Adaptive,
    /// Global average pooling only.
    Global,
}

/// Full pose-guided path: group, mask, necks, fuse, normalize.
pub fn pose_guided_embedding<T: Real>(
    f: &FeatureMap<T>,
    heatmaps: &KeypointHeatmaps<T>,
    proj: &LocalProjection<T>,
    part_threshold: T,
    mode: FusionMode,
) -> Result<Embedding<T>> {
    let global = global_neck(f);
    let fused = match mode {
        FusionMode::Global => global,
        FusionMode::Adaptive => {
            let parts = group_heatmaps(heatmaps);
            let local = local_neck(&part_embeddings(f, &parts)?, proj)?;
            adaptive_fuse(
                &local,
                &global,
                count_confident_parts(&parts, part_threshold),
            )?
        }
    };
    fused.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn heatmaps(h: usize, w: usize, set: &[(usize, usize, usize, f64)]) -> KeypointHeatmaps<f64> {
        let mut maps = Tensor3::zeros(h, w, NUM_KEYPOINTS);
        for &(y, x, k, v) in set {
            *maps.at_mut(y, x, k) = v;
        }
        KeypointHeatmaps::from_peaks(maps).unwrap()
    }

    fn parts_with(
        mask: impl Fn(usize, usize, usize) -> f64,
        h: usize,
        w: usize,
        conf: [f64; 6],
    ) -> PartHeatmaps<f64> {
        PartHeatmaps {
            maps: Tensor3::from_fn(h, w, NUM_PARTS, mask),
            confidence: conf,
        }
    }

    #[test]
    fn keypoints_partition_into_six_parts() {
        let mut counts = [0usize; NUM_PARTS];
        for p in KEYPOINT_PARTS {
            counts[p.index()] += 1;
        }
        assert_eq!(counts, [5, 4, 2, 2, 2, 2]);
        assert_eq!(counts.iter().sum::<usize>(), NUM_KEYPOINTS);
    }

    #[test]
    fn grouping_examples() {
        let zero = group_heatmaps(&heatmaps(2, 2, &[]));
        assert!(zero.maps.values().iter().all(|v| *v == 0.0));
        assert_eq!(zero.confidence, [0.0; 6]);

        // left knee (13) alone at one pixel
        let single = group_heatmaps(&heatmaps(3, 2, &[(1, 0, 13, 1.0)]));
        for y in 0..3 {
            for x in 0..2 {
                for p in 0..NUM_PARTS {
                    let expect = if (y, x, p) == (1, 0, BodyPart::LeftLeg.index()) {
                        1.0
                    } else {
                        0.0
                    };
                    assert_eq!(single.maps.at(y, x, p), expect);
                }
            }
        }
        assert_eq!(single.confidence[BodyPart::LeftLeg.index()], 1.0);

        // both eyes at the same pixel: 0.6 + 0.6 clamps to 1
        let eyes = group_heatmaps(&heatmaps(1, 1, &[(0, 0, 1, 0.6), (0, 0, 2, 0.6)]));
        assert_eq!(eyes.maps.at(0, 0, BodyPart::Head.index()), 1.0);
        assert_eq!(eyes.confidence[BodyPart::Head.index()], 0.6);
    }

    #[test]
    fn part_embedding_examples() {
        let f = FeatureMap(Tensor3::from_fn(2, 2, 3, |y, x, c| {
            (y * 6 + x * 3 + c) as f64
        }));
        let ones = parts_with(|_, _, _| 1.0, 2, 2, [1.0; 6]);
        let sums = part_embeddings(&f, &ones).unwrap();
        // spatial sum per channel: c + (0 + 3 + 6 + 9)
        for e in &sums {
            assert_eq!(e.0, vec![18.0, 22.0, 26.0]);
        }
        let zeros = parts_with(|_, _, _| 0.0, 2, 2, [0.0; 6]);
        assert!(part_embeddings(&f, &zeros)
            .unwrap()
            .iter()
            .all(|e| e.0 == vec![0.0; 3]));

        let flat = FeatureMap(Tensor3::from_fn(2, 2, 3, |_, _, _| 1.0));
        let mass = parts_with(|y, x, _| [[0.5, 0.25], [0.0, 1.0]][y][x], 2, 2, [1.0; 6]);
        for e in part_embeddings(&flat, &mass).unwrap() {
            assert_eq!(e.0, vec![1.75; 3]);
        }

        let wrong = parts_with(|_, _, _| 1.0, 3, 2, [1.0; 6]);
        assert!(matches!(
            part_embeddings(&f, &wrong),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn local_neck_examples() {
        let parts: [Embedding<f64>; 6] = std::array::from_fn(|i| Embedding(vec![i as f64, 1.0]));
        let avg = local_neck(&parts, &LocalProjection::block_average(2)).unwrap();
        assert!((avg.0[0] - 2.5).abs() < 1e-15);
        assert!((avg.0[1] - 1.0).abs() < 1e-15);

        let zero: [Embedding<f64>; 6] = std::array::from_fn(|_| Embedding::zeros(2));
        assert_eq!(
            local_neck(&zero, &LocalProjection::block_average(2))
                .unwrap()
                .0,
            vec![0.0, 0.0]
        );

        // weights that read only the first block distinguish part order
        let mut w = vec![0.0; 2 * 12];
        w[0] = 1.0;
        w[12 + 1] = 1.0;
        let first_block = LocalProjection::new(2, 12, w).unwrap();
        let mut swapped = parts.clone();
        swapped.swap(0, 5);
        assert_ne!(
            local_neck(&parts, &first_block).unwrap(),
            local_neck(&swapped, &first_block).unwrap()
        );

        let bad = LocalProjection::<f64>::block_average(3);
        assert!(local_neck(&parts, &bad).is_err());
    }

    #[test]
    fn global_neck_examples() {
        let f = FeatureMap(Tensor3::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        assert_eq!(global_neck(&f).0, vec![2.5]);
        let c = FeatureMap(Tensor3::from_fn(3, 2, 4, |_, _, _| 0.7f64));
        assert!(global_neck(&c).0.iter().all(|v| (v - 0.7).abs() < 1e-15));
        let scaled = FeatureMap(Tensor3::new(2, 2, 1, vec![3.0, 6.0, 9.0, 12.0]).unwrap());
        assert_eq!(global_neck(&scaled).0, vec![7.5]);
    }

    #[test]
    fn confident_part_examples() {
        let p = |conf| parts_with(|_, _, _| 0.0, 1, 1, conf);
        assert_eq!(count_confident_parts(&p([0.9; 6]), 0.5), 6);
        assert_eq!(count_confident_parts(&p([0.0; 6]), 0.5), 0);
        assert_eq!(
            count_confident_parts(&p([0.6, 0.6, 0.6, 0.4, 0.4, 0.4]), 0.5),
            3
        );
        assert_eq!(count_confident_parts(&p([0.5; 6]), 0.5), 0);
    }

    #[test]
    fn fusion_examples() {
        let l = Embedding(vec![1.0, 0.0]);
        let g = Embedding(vec![0.0, 1.0]);
        assert_eq!(adaptive_fuse(&l, &g, 6).unwrap(), l);
        assert_eq!(adaptive_fuse(&l, &g, 0).unwrap(), g);
        assert_eq!(adaptive_fuse(&l, &g, 3).unwrap().0, vec![0.5, 0.5]);
        assert!(adaptive_fuse(&l, &Embedding(vec![1.0]), 3).is_err());
        assert!(adaptive_fuse(&l, &g, 7).is_err());
    }

    #[test]
    fn ema_examples() {
        let t = Embedding(vec![1.0, 0.0]);
        let d = Embedding(vec![0.0, 2.0]);
        assert_eq!(ema_update(&t, &d, 1.0).unwrap().0, vec![0.0, 1.0]);
        assert_eq!(ema_update(&t, &d, 0.0).unwrap().0, vec![1.0, 0.0]);
        let e = ema_update(&t, &Embedding(vec![0.0, 1.0]), 0.1).unwrap();
        let n = (0.81f64 + 0.01).sqrt();
        assert!((e.0[0] - 0.9 / n).abs() < 1e-15 && (e.0[1] - 0.1 / n).abs() < 1e-15);
        let neg = Embedding(vec![-1.0, 0.0]);
        assert!(matches!(
            ema_update(&t, &neg, 0.5),
            Err(Error::DegenerateEmbedding(_))
        ));
    }

    #[test]
    fn cosine_examples() {
        let a = Embedding(vec![1.0f64, 2.0]);
        assert!(cosine_distance(&a, &a).unwrap().abs() < 1e-15);
        assert_eq!(
            cosine_distance(&Embedding(vec![1.0, 0.0]), &Embedding(vec![0.0, 3.0])).unwrap(),
            1.0
        );
        assert_eq!(
            cosine_distance(&Embedding(vec![1.0, 0.0]), &Embedding(vec![-2.0, 0.0])).unwrap(),
            2.0
        );
        assert!(cosine_distance(&a, &Embedding(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn pose_guided_path_recovers_visible_identity() {
        // top row belongs to the person, bottom row to an occluder
        let own = [1.0, 0.0, 0.0];
        let other = [0.0, 0.0, 1.0];
        let f = FeatureMap(Tensor3::from_fn(2, 2, 3, |y, _, c| {
            if y == 0 {
                own[c]
            } else {
                other[c]
            }
        }));
        let kp = heatmaps(2, 2, &[(0, 0, 0, 1.0), (0, 1, 5, 1.0)]);
        let proj = LocalProjection::block_average(3);
        let adaptive = pose_guided_embedding(&f, &kp, &proj, 0.5, FusionMode::Adaptive).unwrap();
        let global = pose_guided_embedding(&f, &kp, &proj, 0.5, FusionMode::Global).unwrap();
        let truth = Embedding(own.to_vec());
        assert!(
            cosine_distance(&adaptive, &truth).unwrap() < cosine_distance(&global, &truth).unwrap()
        );
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0..5.0f64, n)
    }

    proptest! {
        #[test]
        fn part_embeddings_are_linear(a in prop::collection::vec(0.0..3.0f64, 24), b in prop::collection::vec(0.0..3.0f64, 24), m in prop::collection::vec(0.0..1.0f64, 24)) {
            let f1 = FeatureMap(Tensor3::new(2, 3, 4, a.clone()).unwrap());
            let f2 = FeatureMap(Tensor3::new(2, 3, 4, b.clone()).unwrap());
            let sum = FeatureMap(Tensor3::new(2, 3, 4, a.iter().zip(&b).map(|(x, y)| x + y).collect()).unwrap());
            let parts = PartHeatmaps { maps: Tensor3::from_fn(2, 3, 6, |y, x, p| m[(y * 3 + x) * 4 % 24 + p % 4]), confidence: [1.0; 6] };
            let e1 = part_embeddings(&f1, &parts).unwrap();
            let e2 = part_embeddings(&f2, &parts).unwrap();
            let es = part_embeddings(&sum, &parts).unwrap();
            for p in 0..6 {
                for c in 0..4 {
                    prop_assert!((es[p].0[c] - e1[p].0[c] - e2[p].0[c]).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn fusion_is_a_convex_mix(l in arb_vec(5), g in arb_vec(5), n in 0usize..=6) {
            let (l, g) = (Embedding(l), Embedding(g));
            let a = adaptive_fuse(&l, &g, n).unwrap();
            let b = adaptive_fuse(&g, &l, 6 - n).unwrap();
            let t = n as f64 / 6.0;
            for i in 0..5 {
                prop_assert!((a.0[i] - b.0[i]).abs() < 1e-12);
                prop_assert!((a.0[i] - (t * l.0[i] + (1.0 - t) * g.0[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_ignores_positive_scale(a in arb_vec(6), b in arb_vec(6), s in 0.01..100.0f64) {
            let (a, b) = (Embedding(a), Embedding(b));
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let scaled = Embedding(a.0.iter().map(|v| v * s).collect());
            prop_assert!((cosine_distance(&a, &b).unwrap() - cosine_distance(&scaled, &b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn ema_output_is_unit(a in arb_vec(6), b in arb_vec(6), beta in 0.0..1.0f64) {
            let (a, b) = (Embedding(a), Embedding(b));
            if let Ok(e) = ema_update(&a, &b, beta) {
                prop_assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
