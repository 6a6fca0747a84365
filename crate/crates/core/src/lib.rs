//! Online multi-pedestrian tracking under occlusion: a constant-velocity
//! Kalman filter with abnormal-motion suppression, pose-guided appearance
//! embeddings, occlusion-aware two-stage association, a seeded occlusion
//! simulator and CLEAR/IDF1 evaluation.
//!
//! The numeric core is generic over `f32`/`f64`; the aliases below fix it
//! to `f64`, with `*32` variants where single precision is useful.

pub mod appearance;
pub mod assignment;
pub mod association;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod motion;
pub mod scalar;
pub mod simulation;
pub mod tracker;

pub use error::{Error, Result};

pub type BoundingBox = geometry::BoundingBox<f64>;
pub type CenterBox = geometry::CenterBox<f64>;
pub type Embedding = appearance::Embedding<f64>;
pub type KalmanModel = motion::KalmanModel<f64>;
pub type KalmanTrackState = motion::KalmanTrackState<f64>;
pub type SpeedBuffer = motion::SpeedBuffer<f64>;
pub type Detection = tracker::Detection<f64>;
pub type Tracklet = tracker::Tracklet<f64>;
pub type TrackerConfig = tracker::TrackerConfig<f64>;
pub type Tracker = tracker::Tracker<f64>;
pub type WarpMatrix = tracker::WarpMatrix<f64>;

pub type BoundingBox32 = geometry::BoundingBox<f32>;
pub type Detection32 = tracker::Detection<f32>;
pub type TrackerConfig32 = tracker::TrackerConfig<f32>;
pub type Tracker32 = tracker::Tracker<f32>;
