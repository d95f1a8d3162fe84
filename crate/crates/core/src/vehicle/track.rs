use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::VehicleError;

/// Geometry and speed law of the closed two-straight, two-turn course.
///
/// The course starts at the origin heading along +x, runs the first straight,
/// turns left on the first arc, runs the second straight and closes with the
/// second arc. With line-arc-line-arc and tangent transitions both straights
/// must have equal length, so unequal lengths are rejected as non-closing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackConfig {
    pub straight_lengths: [f64; 2],
    pub radii: [f64; 2],
    /// Straight-line reference speed in m/s.
    pub straight_speed: f64,
    pub lateral_accel_max: f64,
    /// Acceleration used for speed ramps between segments.
    pub longitudinal_accel: f64,
    /// Arc length along the first straight where the episode starts.
    pub start_offset: f64,
}

/// Straight length that gives a 120 s lap with the default speed law.
pub const DEFAULT_STRAIGHT_LENGTH: f64 = 743.904_044_852_667;

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            straight_lengths: [DEFAULT_STRAIGHT_LENGTH; 2],
            radii: [25.0, 40.0],
            straight_speed: 55.0 / 3.6,
            lateral_accel_max: 3.0,
            longitudinal_accel: 2.0,
            start_offset: 400.0,
        }
    }
}

impl TrackConfig {
    pub fn from_toml(s: &str) -> Result<Self, VehicleError> {
        toml::from_str(s).map_err(|e| VehicleError::Config(e.to_string()))
    }

    /// Same track with both straights resized so one lap takes `lap_time`.
    pub fn calibrated(&self, lap_time: f64) -> Result<Self, VehicleError> {
        let time_for = |len: f64| -> Result<f64, VehicleError> {
            let cfg = Self {
                straight_lengths: [len; 2],
                start_offset: 0.0,
                ..self.clone()
            };
            Ok(Track::build(&cfg)?.lap_time())
        };
        let min_len = (self.radii[1] - self.radii[0]).abs() + 1.0;
        let (mut lo, mut hi) = (min_len, 10_000.0);
        if time_for(lo)? > lap_time || time_for(hi)? < lap_time {
            return Err(VehicleError::Config(format!(
                "lap time {lap_time} s not reachable by resizing the straights"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if time_for(mid)? < lap_time {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            straight_lengths: [0.5 * (lo + hi); 2],
            ..self.clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Line { start: [f64; 2], heading: f64 },
    /// Left turn around `center`.
    Arc {
        center: [f64; 2],
        radius: f64,
        start_heading: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub shape: Shape,
    pub s_start: f64,
    pub length: f64,
    pub speed: f64,
}

impl Segment {
    pub fn curvature(&self) -> f64 {
        match self.shape {
            Shape::Line { .. } => 0.0,
            Shape::Arc { radius, .. } => 1.0 / radius,
        }
    }

    /// Position and heading at local arc length `t`.
    pub fn pose(&self, t: f64) -> ([f64; 2], f64) {
        match self.shape {
            Shape::Line { start, heading } => (
                [start[0] + t * heading.cos(), start[1] + t * heading.sin()],
                heading,
            ),
            Shape::Arc {
                center,
                radius,
                start_heading,
            } => {
                let psi = start_heading + t / radius;
                (
                    [center[0] + radius * psi.sin(), center[1] - radius * psi.cos()],
                    psi,
                )
            }
        }
    }

    /// Closest local arc length to `p`, clamped to the segment.
    fn closest(&self, p: [f64; 2]) -> f64 {
        match self.shape {
            Shape::Line { start, heading } => ((p[0] - start[0]) * heading.cos()
                + (p[1] - start[1]) * heading.sin())
            .clamp(0.0, self.length),
            Shape::Arc {
                center,
                radius,
                start_heading,
            } => {
                let psi = (p[1] - center[1]).atan2(p[0] - center[0]) + PI / 2.0;
                let t = radius * (psi - start_heading).rem_euclid(TAU);
                if t <= self.length {
                    t
                } else if t - self.length < radius * TAU - t {
                    self.length
                } else {
                    0.0
                }
            }
        }
    }
}

/// Reference point nearest to a query position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub point: [f64; 2],
    pub heading: f64,
    pub curvature: f64,
    /// Signed lateral offset, positive to the left of the path.
    pub lateral: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    config: TrackConfig,
    segments: Vec<Segment>,
    length: f64,
}

impl Track {
    pub fn build(cfg: &TrackConfig) -> Result<Self, VehicleError> {
        let finite = cfg
            .straight_lengths
            .iter()
            .chain(&cfg.radii)
            .chain([&cfg.straight_speed, &cfg.lateral_accel_max, &cfg.longitudinal_accel])
            .all(|v| v.is_finite() && *v > 0.0);
        if !finite {
            return Err(VehicleError::Config(
                "track lengths, radii, speeds and accelerations must be positive".into(),
            ));
        }
        let [s1, s2] = cfg.straight_lengths;
        let [r1, r2] = cfg.radii;
        // turn angle of the first arc for external tangents of the two circles
        let a1 = 2.0 * s1.atan2(r2 - r1);
        let a2 = TAU - a1;
        let corner = |r: f64| cfg.straight_speed.min((cfg.lateral_accel_max * r).sqrt());

        let mut segments = Vec::with_capacity(4);
        let mut pos = [0.0, 0.0];
        let mut heading = 0.0;
        let mut s = 0.0;
        let specs = [(None, s1), (Some(r1), r1 * a1), (None, s2), (Some(r2), r2 * a2)];
        for (radius, length) in specs {
            let (shape, speed) = match radius {
                None => (
                    Shape::Line {
                        start: pos,
                        heading,
                    },
                    cfg.straight_speed,
                ),
                Some(r) => (
                    Shape::Arc {
                        center: [pos[0] - r * heading.sin(), pos[1] + r * heading.cos()],
                        radius: r,
                        start_heading: heading,
                    },
                    corner(r),
                ),
            };
            let seg = Segment {
                shape,
                s_start: s,
                length,
                speed,
            };
            (pos, heading) = seg.pose(length);
            s += length;
            segments.push(seg);
        }
        let gap = pos[0].hypot(pos[1]);
        let turn = (heading - TAU).abs();
        if gap > 1e-6 || turn > 1e-9 {
            return Err(VehicleError::NonClosing { gap });
        }
        if !(0.0..s1).contains(&cfg.start_offset) {
            return Err(VehicleError::Config(format!(
                "start offset {} must lie on the first straight",
                cfg.start_offset
            )));
        }
        Ok(Self {
            config: cfg.clone(),
            segments,
            length: s,
        })
    }

    pub fn config(&self) -> &TrackConfig {
        &self.config
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn segment_at(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.length);
        for (i, seg) in self.segments.iter().enumerate() {
            if s < seg.s_start + seg.length {
                return (i, s - seg.s_start);
            }
        }
        let last = self.segments.len() - 1;
        (last, self.segments[last].length)
    }

    pub fn pose(&self, s: f64) -> ([f64; 2], f64) {
        let (i, t) = self.segment_at(s);
        self.segments[i].pose(t)
    }

    pub fn curvature(&self, s: f64) -> f64 {
        self.segments[self.segment_at(s).0].curvature()
    }

    /// Reference speed: each segment's speed, blended by constant-acceleration
    /// ramps so the profile is continuous.
    pub fn speed(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.length);
        let a = self.config.longitudinal_accel;
        self.segments
            .iter()
            .map(|seg| {
                let end = seg.s_start + seg.length;
                let d = if s < seg.s_start {
                    (seg.s_start - s).min(s + self.length - end)
                } else if s > end {
                    (s - end).min(seg.s_start + self.length - s)
                } else {
                    0.0
                };
                (seg.speed * seg.speed + 2.0 * a * d).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn project(&self, p: [f64; 2]) -> Projection {
        let mut best: Option<Projection> = None;
        for seg in &self.segments {
            let t = seg.closest(p);
            let (q, heading) = seg.pose(t);
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            let distance = dx.hypot(dy);
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(Projection {
                    s: seg.s_start + t,
                    point: q,
                    heading,
                    curvature: seg.curvature(),
                    lateral: -dx * heading.sin() + dy * heading.cos(),
                    distance,
                });
            }
        }
        best.expect("track has segments")
    }

    /// Time to drive one lap at the reference speed.
    pub fn lap_time(&self) -> f64 {
        let n = 200_000;
        let h = self.length / n as f64;
        // midpoint rule on 1/v
        (0..n)
            .map(|i| h / self.speed((i as f64 + 0.5) * h))
            .sum()
    }

    /// Axis-aligned bounding box `[min_x, min_y, max_x, max_y]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        let n = 4000;
        for i in 0..=n {
            let (p, _) = self.pose(self.length * i as f64 / n as f64);
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].min(p[1]);
            bb[2] = bb[2].max(p[0]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }
}
