//! The global unit-interval grid. Unit boundaries sit at integer multiples
//! of the unit length; a group's extent is its members' union span snapped
//! outward to that grid.

use crate::error::{Error, Result};
use crate::model::{Trajectory, TrajectorySegment, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitGrid {
    pub unit: f64,
    /// Global index of the first unit.
    pub first: i64,
    pub n_units: usize,
}

impl UnitGrid {
    pub fn covering<'a>(members: impl IntoIterator<Item = &'a Trajectory>, unit: f64) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in members {
            lo = lo.min(t.start());
            hi = hi.max(t.end());
        }
        if !lo.is_finite() {
            return Err(Error::EmptyGroup);
        }
        let first = (lo / unit + TIME_EPS).floor() as i64;
        let last = (hi / unit - TIME_EPS).ceil() as i64;
        Ok(UnitGrid { unit, first, n_units: (last - first).max(1) as usize })
    }

    /// Start time of local tick `k` (`0..=n_units`).
    pub fn tick_time(&self, k: usize) -> f64 {
        (self.first + k as i64) as f64 * self.unit
    }

    /// Local unit `k` spans `[tick_time(k), tick_time(k + 1)]`.
    pub fn unit_interval(&self, k: usize) -> (f64, f64) {
        (self.tick_time(k), self.tick_time(k + 1))
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.tick_time(0), self.tick_time(self.n_units))
    }

    /// Local tick index of a time stamp, if it lies on the grid within the
    /// extent.
    pub fn tick_of(&self, t: f64) -> Option<usize> {
        let g = t / self.unit;
        let r = g.round();
        if (g - r).abs() > 1e-6 {
            return None;
        }
        let k = r as i64 - self.first;
        (0..=self.n_units as i64).contains(&k).then_some(k as usize)
    }

    pub fn ticks_of(&self, interval: (f64, f64)) -> Result<(usize, usize)> {
        let unaligned = || Error::Unaligned { start: interval.0, end: interval.1, unit: self.unit };
        let a = self.tick_of(interval.0).ok_or_else(unaligned)?;
        let b = self.tick_of(interval.1).ok_or_else(unaligned)?;
        if b <= a {
            return Err(unaligned());
        }
        Ok((a, b))
    }
}

/// Segments of the given members inside one interval, paired with their
/// roles. Members with fewer than two points in the interval are absent.
pub fn unit_segments(
    members: &[&Trajectory],
    roles: &[usize],
    interval: (f64, f64),
    tick: f64,
) -> Vec<(TrajectorySegment, usize)> {
    members
        .iter()
        .zip(roles)
        .filter_map(|(t, &r)| t.window(interval.0, interval.1, tick).filter(|s| s.points.len() >= 2).map(|s| (s, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;

    fn traj(t0: f64, t1: f64) -> Trajectory {
        Trajectory::new("x", vec![Sample::new(t0, 0.0, 0.0), Sample::new(t1, 1.0, 0.0)], None).unwrap()
    }

    #[test]
    fn snaps_outward() {
        let (a, b) = (traj(1.0, 5.0), traj(3.0, 8.0));
        let g = UnitGrid::covering([&a, &b], 2.0).unwrap();
        assert_eq!(g.first, 0);
        assert_eq!(g.n_units, 4);
        assert_eq!(g.extent(), (0.0, 8.0));
        assert_eq!(g.unit_interval(1), (2.0, 4.0));
        assert_eq!(g.ticks_of((2.0, 6.0)).unwrap(), (1, 3));
        assert!(matches!(g.ticks_of((1.0, 6.0)), Err(Error::Unaligned { .. })));
    }

    #[test]
    fn unit_segments_drop_absent_members() {
        let (a, b) = (traj(0.0, 4.0), traj(2.0, 4.0));
        let segs = unit_segments(&[&a, &b], &[0, 1], (0.0, 2.0), 0.5);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].1, 0);
    }
}
