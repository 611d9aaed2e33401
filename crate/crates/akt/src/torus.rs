//! Coordinate frames, the flat-torus metric on `Q^d = (-pi, pi]^d`, and the
//! periodization map that folds the real line onto `(-pi, pi]`.
//!
//! Three frames are carried explicitly on points and measures: the unit cube
//! `[0,1]^d`, its image `[0,pi]^d` under multiplication by `pi` (the
//! "half torus", where the torus and Euclidean metrics coincide), and the full
//! torus `(-pi, pi]^d`. Cross-frame operations are errors, never silent
//! conversions: the `pi`-rescaling is where all quantitative constants live.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Coordinate frame a point or measure is declared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Frame {
    /// `[0,1]^d`.
    UnitCube,
    /// `[0,pi]^d`, image of the unit cube under multiplication by `pi`.
    HalfTorus,
    /// `Q^d = (-pi, pi]^d`.
    FullTorus,
}

impl Frame {
    /// Range check for a single coordinate.
    pub fn contains(self, x: f64) -> bool {
        match self {
            Frame::UnitCube => (0.0..=1.0).contains(&x),
            Frame::HalfTorus => (0.0..=PI).contains(&x),
            Frame::FullTorus => -PI < x && x <= PI,
        }
    }

    /// Half-torus points are valid full-torus points; everything else is exact.
    pub fn is_torus_valued(self) -> bool {
        matches!(self, Frame::HalfTorus | Frame::FullTorus)
    }

    pub(crate) fn check(self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        if !self.contains(x) {
            return Err(Error::OutOfRange {
                value: x,
                frame: self,
            });
        }
        Ok(())
    }
}

/// A point with an explicit frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    frame: Frame,
}

impl Point {
    /// Builds a point, validating every coordinate against the frame's range.
    pub fn new(coords: Vec<f64>, frame: Frame) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        for &x in &coords {
            frame.check(x)?;
        }
        Ok(Point { coords, frame })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Multiplies a unit-cube point by `pi`. Distances scale by exactly `pi`.
    pub fn to_half_torus(&self) -> Result<Point> {
        if self.frame != Frame::UnitCube {
            return Err(Error::FrameMismatch {
                expected: Frame::UnitCube,
                got: self.frame,
            });
        }
        Ok(Point {
            coords: self.coords.iter().map(|x| x * PI).collect(),
            frame: Frame::HalfTorus,
        })
    }
}

/// Folds a real number into `(-pi, pi]` by subtracting the unique multiple of
/// `2*pi` with `pi*(2k-1) < y <= pi*(2k+1)`. Left boundaries move up:
/// `wrap(-pi) = pi`.
pub fn wrap(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::NonFinite(y));
    }
    let k = (y / (2.0 * PI) - 0.5).ceil();
    let mut r = y - 2.0 * PI * k;
    // Guard against rounding at the window edges for very large |y|.
    if r > PI {
        r -= 2.0 * PI;
    } else if r <= -PI {
        r += 2.0 * PI;
    }
    Ok(r)
}

/// Geodesic distance on the circle `(-pi, pi]`:
/// `min(|x - y|, 2*pi - |x - y|)`, always in `[0, pi]`.
pub fn circle_distance(x: f64, y: f64) -> Result<f64> {
    Frame::FullTorus.check(x)?;
    Frame::FullTorus.check(y)?;
    Ok(circle_distance_unchecked(x, y))
}

#[inline]
pub(crate) fn circle_distance_unchecked(x: f64, y: f64) -> f64 {
    let a = (x - y).abs();
    a.min(2.0 * PI - a)
}

/// Flat-torus metric: the Euclidean combination of per-coordinate circle
/// distances. Dominated by the Euclidean distance, with equality whenever
/// both points lie in `[0,pi]^d`.
pub fn torus_distance(x: &Point, y: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    for p in [x, y] {
        if !p.frame().is_torus_valued() {
            return Err(Error::FrameMismatch {
                expected: Frame::FullTorus,
                got: p.frame(),
            });
        }
    }
    Ok(torus_distance_slice(x.coords(), y.coords()))
}

#[inline]
pub(crate) fn torus_distance_slice(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = circle_distance_unchecked(a, b);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn euclidean_distance_slice(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(coords: &[f64], frame: Frame) -> Point {
        Point::new(coords.to_vec(), frame).unwrap()
    }

    #[test]
    fn wrap_fixed_point_and_windows() {
        assert_eq!(wrap(0.0).unwrap(), 0.0);
        assert!((wrap(4.0).unwrap() - (4.0 - 2.0 * PI)).abs() < 1e-15);
        // Left-open boundary: -pi belongs to the k = -1 window.
        assert_eq!(wrap(-PI).unwrap(), PI);
        assert_eq!(wrap(PI).unwrap(), PI);
        assert!(wrap(f64::NAN).is_err());
        assert!(wrap(f64::INFINITY).is_err());
    }

    #[test]
    fn circle_distance_examples() {
        assert!((circle_distance(3.0, -3.0).unwrap() - (2.0 * PI - 6.0)).abs() < 1e-15);
        assert_eq!(circle_distance(1.25, 1.25).unwrap(), 0.0);
        assert!((circle_distance(0.0, PI).unwrap() - PI).abs() < 1e-15);
        assert!(circle_distance(4.0, 0.0).is_err());
    }

    #[test]
    fn torus_distance_examples() {
        let d = torus_distance(
            &pt(&[0.0, 0.0], Frame::FullTorus),
            &pt(&[PI, PI], Frame::FullTorus),
        )
        .unwrap();
        assert!((d - PI * 2.0_f64.sqrt()).abs() < 1e-12);

        let x = pt(&[1.0, -2.0], Frame::FullTorus);
        assert_eq!(torus_distance(&x, &x).unwrap(), 0.0);

        let d = torus_distance(
            &pt(&[3.0, 0.0], Frame::FullTorus),
            &pt(&[-3.0, 0.0], Frame::FullTorus),
        )
        .unwrap();
        assert!((d - (2.0 * PI - 6.0)).abs() < 1e-15);

        assert!(torus_distance(
            &pt(&[0.0], Frame::FullTorus),
            &pt(&[0.0, 0.0], Frame::FullTorus)
        )
        .is_err());
        assert!(
            torus_distance(&pt(&[0.5], Frame::UnitCube), &pt(&[0.5], Frame::FullTorus)).is_err()
        );
    }

    #[test]
    fn half_torus_scaling() {
        let p = pt(&[0.0, 0.0], Frame::UnitCube).to_half_torus().unwrap();
        assert_eq!(p.coords(), &[0.0, 0.0]);
        let p = pt(&[1.0, 1.0], Frame::UnitCube).to_half_torus().unwrap();
        assert_eq!(p.coords(), &[PI, PI]);
        let p = pt(&[0.5], Frame::UnitCube).to_half_torus().unwrap();
        assert!((p.coords()[0] - PI / 2.0).abs() < 1e-15);
        assert!(pt(&[0.5], Frame::FullTorus).to_half_torus().is_err());
    }

    #[test]
    fn frame_ranges() {
        assert!(Point::new(vec![1.1], Frame::UnitCube).is_err());
        assert!(Point::new(vec![-0.1], Frame::UnitCube).is_err());
        assert!(Point::new(vec![PI + 0.1], Frame::HalfTorus).is_err());
        assert!(Point::new(vec![-PI], Frame::FullTorus).is_err());
        assert!(Point::new(vec![PI], Frame::FullTorus).is_ok());
        assert!(Point::new(vec![], Frame::UnitCube).is_err());
        assert!(Point::new(vec![f64::NAN], Frame::UnitCube).is_err());
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent_and_contracting(y in -1e6f64..1e6f64) {
            let w = wrap(y).unwrap();
            prop_assert!(-PI < w && w <= PI);
            prop_assert_eq!(wrap(w).unwrap(), w);
            prop_assert!(w.abs() <= y.abs() + 1e-9);
            // The fold only moves by multiples of 2*pi.
            let k = (y - w) / (2.0 * PI);
            prop_assert!((k - k.round()).abs() < 1e-6);
        }

        #[test]
        fn triangle_inequality_on_torus(
            a in proptest::collection::vec(-3.1f64..3.1, 3),
            b in proptest::collection::vec(-3.1f64..3.1, 3),
            c in proptest::collection::vec(-3.1f64..3.1, 3),
        ) {
            let pa = pt(&a, Frame::FullTorus);
            let pb = pt(&b, Frame::FullTorus);
            let pc = pt(&c, Frame::FullTorus);
            let ab = torus_distance(&pa, &pb).unwrap();
            let bc = torus_distance(&pb, &pc).unwrap();
            let ac = torus_distance(&pa, &pc).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn torus_equals_euclidean_on_half_torus(
            a in proptest::collection::vec(0.0f64..=PI, 2),
            b in proptest::collection::vec(0.0f64..=PI, 2),
        ) {
            let ta = pt(&a, Frame::HalfTorus);
            let tb = pt(&b, Frame::HalfTorus);
            let t = torus_distance(&ta, &tb).unwrap();
            let e = euclidean_distance_slice(&a, &b);
            prop_assert!((t - e).abs() <= 1e-15 * (1.0 + e));
        }

        #[test]
        fn scaling_multiplies_distances_by_pi(
            p in proptest::collection::vec(0.0f64..=1.0, 3),
            q in proptest::collection::vec(0.0f64..=1.0, 3),
        ) {
            let up = pt(&p, Frame::UnitCube);
            let uq = pt(&q, Frame::UnitCube);
            let t = torus_distance(&up.to_half_torus().unwrap(), &uq.to_half_torus().unwrap()).unwrap();
            let e = euclidean_distance_slice(&p, &q);
            prop_assert!((t - PI * e).abs() <= 1e-12 * (1.0 + e));
        }

        #[test]
        fn torus_dominated_by_euclidean(
            a in proptest::collection::vec(-3.1f64..3.1, 2),
            b in proptest::collection::vec(-3.1f64..3.1, 2),
        ) {
            let t = torus_distance_slice(&a, &b);
            let e = euclidean_distance_slice(&a, &b);
            prop_assert!(t <= e + 1e-12);
        }
    }
}
