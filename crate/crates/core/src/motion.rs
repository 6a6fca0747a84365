//! Constant-velocity Kalman filter with abnormal-motion suppression.
//!
//! The state is `[cx, cy, w, h, vcx, vcy, vw, vh]` in pixels and pixels per
//! frame. Abnormal-motion suppression compares the current observation's
//! speed against a filtered speed of recently tracked boxes and, when a
//! component deviates by more than a threshold, shrinks the mean correction of
//! the update step.

use std::collections::VecDeque;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, CenterBox};
use crate::scalar::Real;

pub type Vector8<T> = SVector<T, 8>;
pub type Matrix8<T> = SMatrix<T, 8, 8>;
pub type Matrix4<T> = SMatrix<T, 4, 4>;
pub type Observation<T> = SMatrix<T, 4, 8>;

/// Source of the process, measurement and initial covariances.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel<T: Real> {
    /// Standard deviations proportional to the current box height.
    HeightScaled { position: T, velocity: T },
    /// Constant matrices, mainly for analysis and tests.
    Fixed {
        process: Matrix8<T>,
        measurement: Matrix4<T>,
        initial: Matrix8<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanModel<T: Real> {
    pub transition: Matrix8<T>,
    pub observation: Observation<T>,
    pub noise: NoiseModel<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrackState<T: Real> {
    pub mean: Vector8<T>,
    pub covariance: Matrix8<T>,
}

impl<T: Real> Default for KalmanModel<T> {
    fn default() -> Self {
        Self::constant_velocity()
    }
}

impl<T: Real> KalmanModel<T> {
    /// Unit-step constant-velocity model with height-scaled noise
    /// (position std `0.05 h`, velocity std `0.00625 h`).
    pub fn constant_velocity() -> Self {
        Self::with_noise(NoiseModel::HeightScaled {
            position: T::lit(0.05),
            velocity: T::lit(0.00625),
        })
    }

    pub fn with_noise(noise: NoiseModel<T>) -> Self {
        let mut transition = Matrix8::identity();
        for i in 0..4 {
            transition[(i, i + 4)] = T::one();
        }
        let mut observation = Observation::zeros();
        for i in 0..4 {
            observation[(i, i)] = T::one();
        }
        Self {
            transition,
            observation,
            noise,
        }
    }

    /// Model with constant noise matrices.
    pub fn fixed(process: Matrix8<T>, measurement: Matrix4<T>, initial: Matrix8<T>) -> Self {
        Self::with_noise(NoiseModel::Fixed {
            process,
            measurement,
            initial,
        })
    }

    fn height_of(mean: &Vector8<T>) -> T {
        mean[3].abs().max(T::one())
    }

    pub fn process_noise(&self, mean: &Vector8<T>) -> Matrix8<T> {
        match &self.noise {
            NoiseModel::HeightScaled { position, velocity } => {
                let h = Self::height_of(mean);
                let p = *position * h;
                let v = *velocity * h;
                Matrix8::from_diagonal(&Vector8::from_column_slice(&[
                    p * p,
                    p * p,
                    p * p,
                    p * p,
                    v * v,
                    v * v,
                    v * v,
                    v * v,
                ]))
            }
            NoiseModel::Fixed { process, .. } => *process,
        }
    }

    pub fn measurement_noise(&self, mean: &Vector8<T>) -> Matrix4<T> {
        match &self.noise {
            NoiseModel::HeightScaled { position, .. } => {
                let p = *position * Self::height_of(mean);
                Matrix4::from_diagonal_element(p * p)
            }
            NoiseModel::Fixed { measurement, .. } => *measurement,
        }
    }

    pub fn initial_covariance(&self, mean: &Vector8<T>) -> Matrix8<T> {
        match &self.noise {
            NoiseModel::HeightScaled { position, velocity } => {
                let h = Self::height_of(mean);
                let p = T::lit(2.0) * *position * h;
                let v = T::lit(10.0) * *velocity * h;
                Matrix8::from_diagonal(&Vector8::from_column_slice(&[
                    p * p,
                    p * p,
                    p * p,
                    p * p,
                    v * v,
                    v * v,
                    v * v,
                    v * v,
                ]))
            }
            NoiseModel::Fixed { initial, .. } => *initial,
        }
    }
}

impl<T: Real> KalmanTrackState<T> {
    pub fn center(&self) -> CenterBox<T> {
        CenterBox {
            cx: self.mean[0],
            cy: self.mean[1],
            w: self.mean[2],
            h: self.mean[3],
        }
    }

    /// Box of the current estimate. Width and height are floored at one
    /// pixel so that a diverged prediction still yields a valid box.
    pub fn bbox(&self) -> BoundingBox<T> {
        let floor = T::one();
        let mut c = self.center();
        c.w = c.w.max(floor);
        c.h = c.h.max(floor);
        c.to_tlwh()
    }
}

pub fn kf_init<T: Real>(b: &BoundingBox<T>, model: &KalmanModel<T>) -> KalmanTrackState<T> {
    let c = b.to_center();
    let mean = Vector8::from_column_slice(&[
        c.cx,
        c.cy,
        c.w,
        c.h,
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
    ]);
    let covariance = model.initial_covariance(&mean);
    KalmanTrackState { mean, covariance }
}

pub fn kf_predict<T: Real>(
    st: &KalmanTrackState<T>,
    model: &KalmanModel<T>,
) -> KalmanTrackState<T> {
    let a = &model.transition;
    let mean = a * st.mean;
    let covariance = a * st.covariance * a.transpose() + model.process_noise(&st.mean);
    KalmanTrackState { mean, covariance }
}

/// Measurement update with the mean correction scaled by `alpha`.
///
/// `alpha = 1` is the standard update. The covariance always contracts with
/// the unscaled gain; it is computed in Joseph form, which equals
/// `(I - G H) P` for the optimal gain and stays symmetric positive
/// semi-definite under rounding.
pub fn kf_update<T: Real>(
    st: &KalmanTrackState<T>,
    z: &BoundingBox<T>,
    alpha: T,
    model: &KalmanModel<T>,
) -> Result<KalmanTrackState<T>> {
    let h = &model.observation;
    let r = model.measurement_noise(&st.mean);
    let s = h * st.covariance * h.transpose() + r;
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    // G^T = S^-1 H P, since both S and P are symmetric.
    let gain = chol.solve(&(h * st.covariance)).transpose();
    let c = z.to_center();
    let z = SVector::<T, 4>::new(c.cx, c.cy, c.w, c.h);
    let innovation = z - h * st.mean;
    let mean = st.mean + gain * innovation * alpha;
    let i_gh = Matrix8::identity() - gain * h;
    let covariance = i_gh * st.covariance * i_gh.transpose() + gain * r * gain.transpose();
    let covariance = (covariance + covariance.transpose()) * T::lit(0.5);
    Ok(KalmanTrackState { mean, covariance })
}

/// Closed form of `A^tau e`: position components gain `tau` times the matching
/// velocity component; velocities are unchanged.
pub fn accumulated_error<T: Real>(e: &Vector8<T>, tau: u32) -> Vector8<T> {
    let t = T::lit(f64::from(tau));
    let mut out = *e;
    for i in 0..4 {
        out[i] = e[i] + t * e[i + 4];
    }
    out
}

/// Ring of the most recent tracked boxes with their frame indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedBuffer<T> {
    boxes: VecDeque<(u32, BoundingBox<T>)>,
    span: usize,
}

impl<T: Real> SpeedBuffer<T> {
    /// Buffer averaging over `span` boxes; it retains `span + 1` so that the
    /// newest box and its `span` predecessors are available.
    pub fn new(span: usize) -> Self {
        let span = span.max(2);
        Self {
            boxes: VecDeque::with_capacity(span + 1),
            span,
        }
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn capacity(&self) -> usize {
        self.span + 1
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn clear(&mut self) {
        self.boxes.clear();
    }

    pub fn push(&mut self, frame: u32, b: BoundingBox<T>) -> Result<()> {
        if let Some(&(last, _)) = self.boxes.back() {
            if frame <= last {
                return Err(Error::NonMonotonicBuffer { last, got: frame });
            }
        }
        if self.boxes.len() == self.capacity() {
            self.boxes.pop_front();
        }
        self.boxes.push_back((frame, b));
        Ok(())
    }

    pub fn last(&self) -> Option<&BoundingBox<T>> {
        self.boxes.back().map(|(_, b)| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(u32, BoundingBox<T>)> {
        self.boxes.iter()
    }

    /// First differences over the newest `span` boxes, oldest first.
    fn differences(&self) -> Vec<[T; 4]> {
        let skip = self.boxes.len().saturating_sub(self.span);
        let window: Vec<_> = self.boxes.iter().skip(skip).map(|(_, b)| *b).collect();
        window
            .windows(2)
            .map(|p| {
                [
                    p[1].x - p[0].x,
                    p[1].y - p[0].y,
                    p[1].w - p[0].w,
                    p[1].h - p[0].h,
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedFilter {
    #[default]
    Mean,
    Gaussian,
    Laplacian,
}

impl SpeedFilter {
    pub fn name(self) -> &'static str {
        match self {
            SpeedFilter::Mean => "mean",
            SpeedFilter::Gaussian => "gaussian",
            SpeedFilter::Laplacian => "laplacian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(SpeedFilter::Mean),
            "gaussian" => Some(SpeedFilter::Gaussian),
            "laplacian" => Some(SpeedFilter::Laplacian),
            _ => None,
        }
    }

    /// Normalized weights over `n` speeds, oldest first.
    pub fn weights<T: Real>(self, n: usize) -> Vec<T> {
        let raw: Vec<f64> = match self {
            SpeedFilter::Mean => vec![1.0; n],
            SpeedFilter::Gaussian => {
                let sigma = n as f64 / 4.0;
                (0..n)
                    .map(|j| {
                        let d = (n - 1 - j) as f64;
                        (-d * d / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
            SpeedFilter::Laplacian => (0..n)
                .map(|j| (-((n - 1 - j) as f64) / 2.0).exp())
                .collect(),
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| T::lit(w / total)).collect()
    }
}

/// Filtered `[x, y, w, h]` speed of the buffered boxes.
pub fn filter_speeds<T: Real>(buf: &SpeedBuffer<T>, kind: SpeedFilter) -> Result<[T; 4]> {
    if buf.len() < 2 {
        return Err(Error::InsufficientHistory {
            have: buf.len(),
            need: 2,
        });
    }
    let diffs = buf.differences();
    let mut out = [T::zero(); 4];
    if kind == SpeedFilter::Mean {
        // Plain average: exact for constant speeds up to one rounding.
        let n = T::count(diffs.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = diffs.iter().fold(T::zero(), |acc, d| acc + d[i]) / n;
        }
        return Ok(out);
    }
    let weights: Vec<T> = kind.weights(diffs.len());
    for (d, w) in diffs.iter().zip(&weights) {
        for i in 0..4 {
            out[i] += d[i] * *w;
        }
    }
    Ok(out)
}

/// Per-component deviation of the current speed from the filtered speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedDifference<T> {
    pub d: [T; 4],
}

/// Horizontal components are normalized by the last box width, vertical ones
/// by its height, so the result is unit-free.
pub fn speed_difference<T: Real>(
    buf: &SpeedBuffer<T>,
    current: &BoundingBox<T>,
    kind: SpeedFilter,
) -> Result<SpeedDifference<T>> {
    let avg = filter_speeds(buf, kind)?;
    let last = buf
        .last()
        .ok_or(Error::InsufficientHistory { have: 0, need: 2 })?;
    let v = [
        current.x - last.x,
        current.y - last.y,
        current.w - last.w,
        current.h - last.h,
    ];
    let norm = [last.w, last.h, last.w, last.h];
    let mut d = [T::zero(); 4];
    for i in 0..4 {
        d[i] = (v[i] / norm[i] - avg[i] / norm[i]).abs();
    }
    Ok(SpeedDifference { d })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionCoefficients<T> {
    pub components: [T; 4],
    pub alpha: T,
}

pub fn suppression_coefficients<T: Real>(
    d: &SpeedDifference<T>,
    threshold: T,
    alpha0: T,
) -> SuppressionCoefficients<T> {
    let components =
        d.d.map(|di| if di <= threshold { T::one() } else { alpha0 });
    let alpha = (components[0] + components[1] + components[2] + components[3]) / T::lit(4.0);
    SuppressionCoefficients { components, alpha }
}

/// Abnormal-motion-suppression settings bundled for the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSuppression<T> {
    pub alpha0: T,
    pub threshold: T,
    pub filter: SpeedFilter,
}

impl<T: Real> MotionSuppression<T> {
    /// Gain scale for `current`; `1` while the buffer is too short to judge.
    pub fn alpha(&self, buf: &SpeedBuffer<T>, current: &BoundingBox<T>) -> T {
        match speed_difference(buf, current, self.filter) {
            Ok(d) => suppression_coefficients(&d, self.threshold, self.alpha0).alpha,
            Err(_) => T::one(),
        }
    }
}
