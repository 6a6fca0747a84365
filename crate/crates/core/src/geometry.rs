//! Axis-aligned boxes in pixel coordinates.
//!
//! Boxes are continuous closed rectangles: no `+1` pixel convention, and a
//! zero-area intersection yields an IoU of exactly zero.

use crate::error::{Error, Result};
use crate::matrix::CostMatrix;
use crate::scalar::Real;

/// Top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

/// Center plus size; the Kalman state uses this parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterBox<T> {
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
}

impl<T: Real> BoundingBox<T> {
    /// Validating constructor: all fields finite, positive width and height.
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        let b = Self { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.finite() && self.y.finite() && self.w.finite() && self.h.finite()) {
            return Err(Error::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= T::zero() || self.h <= T::zero() {
            return Err(Error::InvalidBox(format!("non-positive size in {self:?}")));
        }
        Ok(())
    }

    pub fn from_corners(x1: T, y1: T, x2: T, y2: T) -> Result<Self> {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &Self) -> T {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= T::zero() || ih <= T::zero() {
            T::zero()
        } else {
            iw * ih
        }
    }

    /// Intersection rectangle, if it has positive area.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let x1 = self.x.max(other.x);
        let y1 = self.y.max(other.y);
        let x2 = self.right().min(other.right());
        let y2 = self.bottom().min(other.bottom());
        (x2 > x1 && y2 > y1).then(|| Self {
            x: x1,
            y: y1,
            w: x2 - x1,
            h: y2 - y1,
        })
    }

    pub fn contains(&self, other: &Self) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn to_center(&self) -> CenterBox<T> {
        tlwh_to_center(self)
    }

    pub fn cast<U: Real>(&self) -> BoundingBox<U> {
        BoundingBox {
            x: U::lit(self.x.as_f64()),
            y: U::lit(self.y.as_f64()),
            w: U::lit(self.w.as_f64()),
            h: U::lit(self.h.as_f64()),
        }
    }
}

impl<T: Real> CenterBox<T> {
    pub fn to_tlwh(&self) -> BoundingBox<T> {
        center_to_tlwh(self)
    }
}

pub fn tlwh_to_center<T: Real>(b: &BoundingBox<T>) -> CenterBox<T> {
    let half = T::lit(0.5);
    CenterBox {
        cx: b.x + b.w * half,
        cy: b.y + b.h * half,
        w: b.w,
        h: b.h,
    }
}

pub fn center_to_tlwh<T: Real>(c: &CenterBox<T>) -> BoundingBox<T> {
    let half = T::lit(0.5);
    BoundingBox {
        x: c.cx - c.w * half,
        y: c.cy - c.h * half,
        w: c.w,
        h: c.h,
    }
}

/// Intersection over union, in `[0, 1]` and symmetric.
pub fn iou<T: Real>(a: &BoundingBox<T>, b: &BoundingBox<T>) -> T {
    let inter = a.intersection_area(b);
    if inter <= T::zero() {
        return T::zero();
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(T::one())
}

/// `1 - iou` for every (row, col) pair.
pub fn iou_distance_matrix<T: Real>(
    rows: &[BoundingBox<T>],
    cols: &[BoundingBox<T>],
) -> CostMatrix<T> {
    CostMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        T::one() - iou(&rows[r], &cols[c])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox<f64> {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(20.0, 20.0, 5.0, 5.0)), 0.0);
        assert!((iou(&a, &bb(5.0, 0.0, 10.0, 10.0)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn touching_boxes_have_zero_iou() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        let b = bb(10.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn distance_matrix_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        let far = bb(50.0, 50.0, 3.0, 3.0);
        assert_eq!(iou_distance_matrix(&[a], &[a]).get(0, 0), 0.0);
        assert_eq!(iou_distance_matrix(&[a], &[far]).get(0, 0), 1.0);
        let d = iou_distance_matrix(&[a], &[bb(5.0, 0.0, 10.0, 10.0)]);
        assert!((d.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        let empty = iou_distance_matrix::<f64>(&[], &[a, far]);
        assert_eq!(empty.shape(), (0, 2));
        assert!(empty.is_empty());
    }

    #[test]
    fn center_conversion_examples() {
        let c = bb(0.0, 0.0, 10.0, 10.0).to_center();
        assert_eq!((c.cx, c.cy, c.w, c.h), (5.0, 5.0, 10.0, 10.0));
        let c = bb(3.0, 4.0, 2.0, 6.0).to_center();
        assert_eq!((c.cx, c.cy, c.w, c.h), (4.0, 7.0, 2.0, 6.0));
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, f64::INFINITY, 1.0, 1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = BoundingBox::<f32>::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = BoundingBox::<f32>::new(5.0, 0.0, 10.0, 10.0).unwrap();
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-6);
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox<f64>> {
        (
            -100.0..100.0f64,
            -100.0..100.0f64,
            0.1..80.0f64,
            0.1..80.0f64,
        )
            .prop_map(|(x, y, w, h)| bb(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn center_round_trip(a in arb_box()) {
            let back = a.to_center().to_tlwh();
            let scale = a.x.abs().max(a.y.abs()).max(a.w).max(a.h);
            prop_assert!((back.x - a.x).abs() <= 1e-12 * scale);
            prop_assert!((back.y - a.y).abs() <= 1e-12 * scale);
            prop_assert_eq!(back.w, a.w);
            prop_assert_eq!(back.h, a.h);
        }
    }
}
