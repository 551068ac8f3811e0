use std::f64::consts::PI;

use crate::preview::{Interpolation, PathMap};

/// Sample spacing of generated paths (m).
const DS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub curvature: f64,
}

/// Where a position sits relative to the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Station of the closest point.
    pub s: f64,
    /// Signed distance, positive when the position is left of the path.
    pub lateral: f64,
    /// Vehicle heading minus path heading, wrapped to (-pi, pi].
    pub heading_error: f64,
    pub index: usize,
}

/// A densely sampled planar reference path.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    points: Vec<PathPoint>,
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Piece of a path built from straights and circular arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Straight(f64),
    /// Radius and signed turn angle (positive turns left).
    Arc(f64, f64),
}

impl ReferencePath {
    pub fn from_points(points: Vec<PathPoint>) -> Self {
        assert!(points.len() >= 2, "a path needs at least two points");
        Self { points }
    }

    /// Chain of segments starting at `(x0, y0)` with heading `psi0`.
    pub fn from_segments(x0: f64, y0: f64, psi0: f64, segments: &[Segment]) -> Self {
        let mut pts = vec![];
        let (mut x, mut y, mut psi, mut s) = (x0, y0, psi0, 0.0);
        for seg in segments {
            let (len, k) = match *seg {
                Segment::Straight(l) => (l, 0.0),
                Segment::Arc(r, ang) => (r * ang.abs(), ang.signum() / r),
            };
            let n = (len / DS).ceil().max(1.0) as usize;
            let h = len / n as f64;
            for _ in 0..n {
                pts.push(PathPoint {
                    s,
                    x,
                    y,
                    heading: psi,
                    curvature: k,
                });
                if k == 0.0 {
                    x += h * psi.cos();
                    y += h * psi.sin();
                } else {
                    let psi1 = psi + k * h;
                    x += (psi1.sin() - psi.sin()) / k;
                    y -= (psi1.cos() - psi.cos()) / k;
                    psi = psi1;
                }
                s += h;
            }
        }
        let last_k = pts.last().map(|p| p.curvature).unwrap_or(0.0);
        pts.push(PathPoint {
            s,
            x,
            y,
            heading: psi,
            curvature: last_k,
        });
        Self::from_points(pts)
    }

    /// Path given as a lateral offset `y(x)` over `[x_start, x_end]`, with
    /// its first and second derivatives.
    pub fn from_lateral_profile(x_start: f64, x_end: f64, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let n = ((x_end - x_start) / (0.2 * DS)).ceil() as usize;
        let h = (x_end - x_start) / n as f64;
        let mut pts = Vec::with_capacity(n / 5 + 2);
        let mut s = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        let mut next_emit = 0.0;
        for i in 0..=n {
            let x = x_start + i as f64 * h;
            let (y, dy, ddy) = f(x);
            if let Some((px, py)) = prev {
                s += (x - px).hypot(y - py);
            }
            prev = Some((x, y));
            if s >= next_emit || i == n {
                pts.push(PathPoint {
                    s,
                    x,
                    y,
                    heading: dy.atan(),
                    curvature: ddy / (1.0 + dy * dy).powf(1.5),
                });
                next_emit = s + DS;
            }
        }
        Self::from_points(pts)
    }

    /// Two straights joined by a left-hand semicircle of `radius`.
    pub fn u_turn(straight: f64, radius: f64) -> Self {
        Self::from_segments(0.0, 0.0, 0.0, &[Segment::Straight(straight), Segment::Arc(radius, PI), Segment::Straight(straight)])
    }

    pub fn straight(x0: f64, length: f64) -> Self {
        Self::from_segments(x0, 0.0, 0.0, &[Segment::Straight(length)])
    }

    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points[self.points.len() - 1].s
    }

    pub fn start(&self) -> PathPoint {
        self.points[0]
    }

    /// Point at station `s`, linearly interpolated and clamped to the ends.
    pub fn at(&self, s: f64) -> PathPoint {
        let p = &self.points;
        let i = p.partition_point(|q| q.s <= s);
        if i == 0 {
            return p[0];
        }
        if i == p.len() {
            return p[p.len() - 1];
        }
        let (a, b) = (&p[i - 1], &p[i]);
        let w = (s - a.s) / (b.s - a.s);
        PathPoint {
            s,
            x: a.x + w * (b.x - a.x),
            y: a.y + w * (b.y - a.y),
            heading: a.heading + w * wrap_angle(b.heading - a.heading),
            curvature: a.curvature + w * (b.curvature - a.curvature),
        }
    }

    /// Closest point to `(x, y)`. With a `hint` index only a window around
    /// it is searched, which keeps the projection on the right leg of paths
    /// that come back close to themselves.
    pub fn project(&self, x: f64, y: f64, psi: f64, hint: Option<usize>) -> Projection {
        let p = &self.points;
        let (lo, hi) = match hint {
            Some(h) => (h.saturating_sub(200), (h + 400).min(p.len() - 1)),
            None => (0, p.len() - 1),
        };
        let mut best = lo;
        let mut best_d = f64::INFINITY;
        for (i, q) in p.iter().enumerate().take(hi + 1).skip(lo) {
            let d = (q.x - x).powi(2) + (q.y - y).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        // refine on whichever neighbouring segment is closer
        let on_segment = |seg: usize| -> (f64, f64) {
            let (a, b) = (&p[seg], &p[seg + 1]);
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let len2 = ex * ex + ey * ey;
            let mut w = if len2 > 0.0 { ((x - a.x) * ex + (y - a.y) * ey) / len2 } else { 0.0 };
            // only the two end segments extrapolate
            if seg > 0 {
                w = w.max(0.0);
            }
            if seg + 2 < p.len() {
                w = w.min(1.0);
            }
            let (qx, qy) = (a.x + w * ex, a.y + w * ey);
            (a.s + w * (b.s - a.s), (qx - x).powi(2) + (qy - y).powi(2))
        };
        let mut cands = vec![];
        if best > 0 {
            cands.push(on_segment(best - 1));
        }
        if best + 1 < p.len() {
            cands.push(on_segment(best));
        }
        let s = cands.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|c| c.0).unwrap_or(p[best].s);
        let here = self.at(s);
        let (dx, dy) = (x - here.x, y - here.y);
        let lateral = -dx * here.heading.sin() + dy * here.heading.cos();
        Projection {
            s,
            lateral,
            heading_error: wrap_angle(psi - here.heading),
            index: best,
        }
    }

    /// Curvature against station, sampled every `spacing` metres.
    pub fn curvature_map(&self, spacing: f64) -> PathMap {
        let n = (self.length() / spacing).ceil() as usize;
        let s: Vec<f64> = (0..=n).map(|i| (i as f64 * spacing).min(self.length())).collect();
        let mut bp = Vec::with_capacity(s.len());
        let mut vals = Vec::with_capacity(s.len());
        for si in s {
            if bp.last().is_some_and(|l: &f64| si <= *l) {
                continue;
            }
            bp.push(si);
            vals.push(self.at(si).curvature);
        }
        PathMap::new(bp, vals, Interpolation::Linear).expect("sampled stations increase")
    }
}

/// Lane of the obstacle-avoidance course between two cone rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub x_start: f64,
    pub x_end: f64,
    pub y_right: f64,
    pub y_left: f64,
}

/// Obstacle-avoidance (severe lane change) course after ISO 3888-2 for a
/// vehicle of width `w`: entry lane, lateral offset lane, exit lane. The
/// course starts at X = 0; the offset lane lies to the left.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneChangeCourse {
    pub gates: [Gate; 3],
    pub vehicle_width: f64,
}

impl LaneChangeCourse {
    pub fn iso3888_2(w: f64) -> Self {
        let w1 = 1.1 * w + 0.25;
        let w3 = w + 1.0;
        let w5 = (1.3 * w + 0.25).max(3.0);
        let right1 = -0.5 * w1;
        let left1 = 0.5 * w1;
        let right3 = left1 + 1.0;
        Self {
            gates: [
                Gate {
                    x_start: 0.0,
                    x_end: 12.0,
                    y_right: right1,
                    y_left: left1,
                },
                Gate {
                    x_start: 25.5,
                    x_end: 36.5,
                    y_right: right3,
                    y_left: right3 + w3,
                },
                Gate {
                    x_start: 49.0,
                    x_end: 61.0,
                    y_right: right1,
                    y_left: right1 + w5,
                },
            ],
            vehicle_width: w,
        }
    }

    /// Lateral offset of the centre line of the offset lane.
    pub fn offset(&self) -> f64 {
        0.5 * (self.gates[1].y_right + self.gates[1].y_left)
    }

    /// Centre-line reference path from `x_start` (negative, before the
    /// course) to `x_end`. The path holds each lane centre and moves
    /// between them on cosine ramps that begin `LEAD` metres before a lane
    /// ends and finish `LAG` metres into the next one.
    pub fn reference_path(&self, x_start: f64, x_end: f64) -> ReferencePath {
        const LEAD: f64 = 2.0;
        const LAG: f64 = 1.5;
        let g = &self.gates;
        let centre = |g: &Gate| 0.5 * (g.y_right + g.y_left);
        let (y1, y2, y3) = (centre(&g[0]), centre(&g[1]), centre(&g[2]));
        let ramps = [(g[0].x_end - LEAD, g[1].x_start + LAG, y2 - y1), (g[1].x_end - LAG, g[2].x_start + LEAD, y3 - y2)];
        ReferencePath::from_lateral_profile(x_start, x_end, move |x| {
            let mut out = (y1, 0.0, 0.0);
            for &(x0, x1, dy) in &ramps {
                if x >= x1 {
                    out.0 += dy;
                } else if x > x0 {
                    let k = PI / (x1 - x0);
                    let th = k * (x - x0);
                    out.0 += dy * 0.5 * (1.0 - th.cos());
                    out.1 += dy * 0.5 * k * th.sin();
                    out.2 += dy * 0.5 * k * k * th.cos();
                }
            }
            out
        })
    }

    /// Whether a vehicle footprint (length `len`, width as configured,
    /// centred at `(x, y)` with yaw `psi`) touches a cone row.
    pub fn hits_cone(&self, x: f64, y: f64, psi: f64, front: f64, rear: f64) -> bool {
        let half_w = 0.5 * self.vehicle_width;
        let (s, c) = psi.sin_cos();
        let corners = [(front, half_w), (front, -half_w), (-rear, half_w), (-rear, -half_w)];
        corners.iter().any(|&(lx, ly)| {
            let cx = x + lx * c - ly * s;
            let cy = y + lx * s + ly * c;
            self.gates
                .iter()
                .any(|g| cx >= g.x_start && cx <= g.x_end && (cy < g.y_right || cy > g.y_left))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_turn_geometry() {
        let p = ReferencePath::u_turn(40.0, 10.0);
        assert!((p.length() - (80.0 + 10.0 * PI)).abs() < 1e-9);
        let end = p.points().last().unwrap();
        assert!((end.x - 0.0).abs() < 1e-6, "{end:?}");
        assert!((end.y - 20.0).abs() < 1e-6);
        assert!((wrap_angle(end.heading - PI)).abs() < 1e-9);
        assert!((p.at(55.0).curvature - 0.1).abs() < 1e-12);
        assert_eq!(p.at(20.0).curvature, 0.0);
    }

    #[test]
    fn projection_sign_and_station() {
        let p = ReferencePath::straight(0.0, 50.0);
        let pr = p.project(10.3, 0.7, 0.1, None);
        assert!((pr.s - 10.3).abs() < 1e-9);
        assert!((pr.lateral - 0.7).abs() < 1e-9);
        assert!((pr.heading_error - 0.1).abs() < 1e-12);
        assert!(p.project(10.0, -0.4, 0.0, None).lateral < 0.0);
    }

    #[test]
    fn projection_on_arc() {
        let p = ReferencePath::u_turn(40.0, 10.0);
        // centre of the arc is (40, 10); a point at radius 9 is 1 m left
        let ang = 0.7f64;
        let (x, y) = (40.0 + 9.0 * ang.sin(), 10.0 - 9.0 * ang.cos());
        let pr = p.project(x, y, ang, Some(800));
        assert!((pr.lateral - 1.0).abs() < 1e-3, "{pr:?}");
        assert!((pr.s - (40.0 + 10.0 * ang)).abs() < 1e-2);
    }

    #[test]
    fn lane_change_path_stays_in_lanes() {
        let c = LaneChangeCourse::iso3888_2(1.24);
        let p = c.reference_path(-20.0, 80.0);
        for q in p.points() {
            for g in &c.gates {
                if q.x >= g.x_start && q.x <= g.x_end {
                    assert!(q.y > g.y_right + 0.3 && q.y < g.y_left - 0.3, "{q:?}");
                }
            }
        }
        assert!(!c.hits_cone(5.0, 0.0, 0.0, 1.2, 1.0));
        assert!(c.hits_cone(5.0, 0.5, 0.0, 1.2, 1.0));
    }
}
