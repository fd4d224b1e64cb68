use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use super::geometry::{segments_intersect, Vec2};
use crate::error::{Error, Result};

/// Names of the tracks shipped with the simulator.
pub const BUILTIN_TRACKS: [&str; 3] = ["straight", "oval", "scurve"];

/// A closed centerline (implicit edge from the last point back to the first)
/// with constant half-width.
///
/// Arc length increases along point order; "left" is to the left when facing
/// that direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackDefinition {
    name: String,
    half_width: f64,
    centerline: Vec<Vec2>,
    // cumulative[i] is the arc length at point i; the last entry closes the loop.
    cumulative: Vec<f64>,
    left: Vec<Vec2>,
    right: Vec<Vec2>,
}

/// Position of a point relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackFrame {
    /// Arc length of the closest centerline point, in [0, length).
    pub arc: f64,
    /// Signed distance from the centerline, positive to the left (m).
    pub lateral: f64,
    /// Heading of the closest centerline segment.
    pub tangent_heading: f64,
    pub segment: usize,
}

impl TrackDefinition {
    pub fn new(name: impl Into<String>, half_width: f64, centerline: Vec<Vec2>) -> Result<Self> {
        let name = name.into();
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::config(format!(
                "track `{name}`: half width {half_width} must be positive"
            )));
        }
        let n = centerline.len();
        if n < 3 {
            return Err(Error::config(format!(
                "track `{name}` needs at least 3 points, got {n}"
            )));
        }
        if let Some(i) = centerline.iter().position(|p| !p.is_finite()) {
            return Err(Error::config(format!("track `{name}`: point {i} is not finite")));
        }
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for i in 0..n {
            let len = (centerline[(i + 1) % n] - centerline[i]).length();
            if !(len > 0.0) {
                return Err(Error::config(format!(
                    "track `{name}`: segment {i} has zero length"
                )));
            }
            cumulative.push(cumulative[i] + len);
        }

        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for i in 0..n {
            let prev = centerline[(i + n - 1) % n];
            let here = centerline[i];
            let next = centerline[(i + 1) % n];
            let t_in = (here - prev).normalized();
            let t_out = (next - here).normalized();
            let bisector = t_in + t_out;
            if bisector.length() < 1e-9 {
                return Err(Error::config(format!(
                    "track `{name}` reverses direction at point {i}"
                )));
            }
            let normal = bisector.normalized().perp();
            let miter = half_width / normal.dot(t_out.perp());
            left.push(here + normal * miter);
            right.push(here - normal * miter);
        }

        let track = Self {
            name,
            half_width,
            centerline,
            cumulative,
            left,
            right,
        };
        track.check_boundaries()?;
        Ok(track)
    }

    fn check_boundaries(&self) -> Result<()> {
        let n = self.centerline.len();
        let adjacent = |i: usize, j: usize| i == j || (i + 1) % n == j || (j + 1) % n == i;
        let seg = |poly: &[Vec2], i: usize| (poly[i], poly[(i + 1) % n]);
        let polys = [("left", &self.left), ("right", &self.right)];
        for (name, poly) in polys {
            // An offset edge running against its centerline edge means the
            // half width exceeds the local radius of curvature.
            for i in 0..n {
                let (a, b) = seg(poly, i);
                let (c, d) = self.segment(i);
                if (b - a).dot(d - c) <= 0.0 {
                    return Err(Error::config(format!(
                        "track `{}`: {name} boundary folds back at segment {i}",
                        self.name
                    )));
                }
            }
            for i in 0..n {
                let (a, b) = seg(poly, i);
                for j in i + 1..n {
                    if adjacent(i, j) {
                        continue;
                    }
                    let (c, d) = seg(poly, j);
                    if segments_intersect(a, b, c, d) {
                        return Err(Error::config(format!(
                            "track `{}`: {name} boundary crosses itself (segments {i} and {j})",
                            self.name
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            let (a, b) = seg(&self.left, i);
            for j in 0..n {
                let (c, d) = seg(&self.right, j);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::config(format!(
                        "track `{}`: left and right boundaries cross (segments {i} and {j})",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn centerline(&self) -> &[Vec2] {
        &self.centerline
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.centerline.len()]
    }

    pub fn left_boundary(&self) -> &[Vec2] {
        &self.left
    }

    pub fn right_boundary(&self) -> &[Vec2] {
        &self.right
    }

    /// Boundary segments of both edges as point pairs.
    pub fn boundary_segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.centerline.len();
        [&self.left, &self.right]
            .into_iter()
            .flat_map(move |poly| (0..n).map(move |i| (poly[i], poly[(i + 1) % n])))
    }

    pub fn segment(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.centerline.len();
        (self.centerline[i], self.centerline[(i + 1) % n])
    }

    /// Closest point on the centerline and the signed offset from it.
    pub fn project(&self, p: Vec2) -> TrackFrame {
        let n = self.centerline.len();
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for i in 0..n {
            let (a, b) = self.segment(i);
            let e = b - a;
            let u = ((p - a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
            let d = (p - (a + e * u)).length();
            if d < best.0 {
                best = (d, i, u);
            }
        }
        let (dist, i, u) = best;
        let (a, b) = self.segment(i);
        let e = b - a;
        let foot = a + e * u;
        let side = e.cross(p - foot);
        let lateral = if side < 0.0 { -dist } else { dist };
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        TrackFrame {
            arc: (self.cumulative[i] + u * seg_len) % self.length(),
            lateral,
            tangent_heading: e.angle(),
            segment: i,
        }
    }

    /// Centerline point and tangent heading at arc length `arc` (wrapped).
    pub fn point_at(&self, arc: f64) -> (Vec2, f64) {
        let s = arc.rem_euclid(self.length());
        let n = self.centerline.len();
        let i = match self.cumulative[..=n].binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.segment(i);
        let u = (s - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i]);
        (a + (b - a) * u, (b - a).angle())
    }

    /// Signed arc-length change from `from` to `to`, taking the short way
    /// around the loop.
    pub fn arc_delta(&self, from: f64, to: f64) -> f64 {
        let len = self.length();
        let mut d = (to - from).rem_euclid(len);
        if d > len / 2.0 {
            d -= len;
        }
        d
    }

    /// Parses the plain-text track format: line 1 is the name, line 2 the
    /// half width in meters, every following line an `x y` centerline point.
    /// `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, name) = lines
            .next()
            .ok_or_else(|| Error::config("track file is empty"))?;
        let (ln, hw) = lines
            .next()
            .ok_or_else(|| Error::config("track file is missing the half width line"))?;
        let half_width: f64 = hw
            .parse()
            .map_err(|_| Error::config(format!("line {ln}: bad half width `{hw}`")))?;
        let mut points = Vec::new();
        for (ln, line) in lines {
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::config(format!("line {ln}: expected `x y`, got `{line}`")))
            };
            let x = parse(it.next())?;
            let y = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::config(format!("line {ln}: trailing values in `{line}`")));
            }
            points.push(Vec2::new(x, y));
        }
        Self::new(name, half_width, points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read track file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Serializes to the text format read by [`TrackDefinition::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n{}\n", self.name, self.half_width);
        for p in &self.centerline {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
        s
    }

    /// A built-in track by name, or a track file at that path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match builtin(name_or_path) {
            Some(t) => Ok(t),
            None => Self::load(Path::new(name_or_path)),
        }
    }
}

/// Built-in tracks, all driven counter-clockwise:
///
/// - `straight`: a 1 km straight returning through a parallel straight,
///   joined by 40 m hairpins; 12 m wide.
/// - `oval`: two 200 m straights and two 80 m-radius semicircles; 12 m wide.
/// - `scurve`: a loop whose radius oscillates four times per lap so the
///   curvature alternates sign; 10 m wide.
pub fn builtin(name: &str) -> Option<TrackDefinition> {
    let t = match name {
        "straight" => stadium("straight", 1000.0, 40.0, 6.0),
        "oval" => stadium("oval", 200.0, 80.0, 6.0),
        "scurve" => scurve(),
        _ => return None,
    };
    Some(t.expect("built-in tracks are valid"))
}

/// Two straights of `straight_len` joined by semicircles of `radius`,
/// starting 10 m into the lower straight heading +x.
pub fn stadium(name: &str, straight_len: f64, radius: f64, half_width: f64) -> Result<TrackDefinition> {
    const SPACING: f64 = 2.0;
    let n_straight = (straight_len / SPACING).ceil().max(1.0) as usize;
    let n_arc = ((PI * radius) / SPACING).ceil().max(4.0) as usize;
    let mut pts = Vec::with_capacity(2 * (n_straight + n_arc));
    for i in 0..n_straight {
        pts.push(Vec2::new(straight_len * i as f64 / n_straight as f64, -radius));
    }
    for i in 0..n_arc {
        let a = -PI / 2.0 + PI * i as f64 / n_arc as f64;
        pts.push(Vec2::new(straight_len, 0.0) + Vec2::from_angle(a) * radius);
    }
    for i in 0..n_straight {
        pts.push(Vec2::new(straight_len * (1.0 - i as f64 / n_straight as f64), radius));
    }
    for i in 0..n_arc {
        let a = PI / 2.0 + PI * i as f64 / n_arc as f64;
        pts.push(Vec2::from_angle(a) * radius);
    }
    pts.rotate_left(5.min(n_straight / 2));
    TrackDefinition::new(name, half_width, pts)
}

fn scurve() -> Result<TrackDefinition> {
    const POINTS: usize = 720;
    let (base, amp, lobes) = (150.0, 25.0, 4.0);
    let pts = (0..POINTS)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / POINTS as f64;
            Vec2::from_angle(phi) * (base + amp * (lobes * phi).sin())
        })
        .collect();
    TrackDefinition::new("scurve", 5.0, pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid_with_expected_geometry() {
        let straight = builtin("straight").unwrap();
        assert_eq!(straight.half_width(), 6.0);
        assert!((straight.length() - (2000.0 + 2.0 * PI * 40.0)).abs() < 1.0);
        let oval = builtin("oval").unwrap();
        assert!((oval.length() - (400.0 + 2.0 * PI * 80.0)).abs() < 1.0);
        let s = builtin("scurve").unwrap();
        assert_eq!(s.half_width(), 5.0);
        assert!(builtin("aalborg").is_none());
    }

    #[test]
    fn scurve_curvature_changes_sign() {
        let t = builtin("scurve").unwrap();
        let pts = t.centerline();
        let n = pts.len();
        let turns: Vec<f64> = (0..n)
            .map(|i| (pts[(i + 1) % n] - pts[i]).cross(pts[(i + 2) % n] - pts[(i + 1) % n]))
            .collect();
        assert!(turns.iter().any(|&c| c > 0.0));
        assert!(turns.iter().any(|&c| c < 0.0));
    }

    #[test]
    fn cumulative_arc_strictly_increases() {
        for name in BUILTIN_TRACKS {
            let t = builtin(name).unwrap();
            assert!(t.cumulative.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn projection_reports_signed_offset() {
        let t = builtin("oval").unwrap();
        let f = t.project(Vec2::new(50.0, -80.0 + 3.0));
        assert!((f.lateral - 3.0).abs() < 1e-9);
        assert!((f.arc - 40.0).abs() < 1e-9);
        assert!(f.tangent_heading.abs() < 1e-12);
        let g = t.project(Vec2::new(50.0, -80.0 - 2.0));
        assert!((g.lateral + 2.0).abs() < 1e-9);
    }

    #[test]
    fn point_at_round_trips_through_projection() {
        let t = builtin("scurve").unwrap();
        for k in 0..50 {
            let s = t.length() * k as f64 / 50.0 + 0.3;
            let (p, _) = t.point_at(s);
            let f = t.project(p);
            assert!(t.arc_delta(s, f.arc).abs() < 1e-6);
            assert!(f.lateral.abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let r = TrackDefinition::new("x", 5.0, vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_points_rejected() {
        let p = Vec2::new(0.0, 0.0);
        let r = TrackDefinition::new("x", 1.0, vec![p, p, Vec2::new(10.0, 0.0), Vec2::new(5.0, 10.0)]);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn too_wide_track_rejected() {
        // A 10 m square loop cannot carry a 6 m half width.
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
        ];
        assert!(TrackDefinition::new("sq", 1.0, pts.clone()).is_ok());
        assert!(matches!(TrackDefinition::new("sq", 6.0, pts), Err(Error::Config(_))));
    }

    #[test]
    fn figure_eight_rejected() {
        let pts: Vec<Vec2> = (0..200)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 200.0;
                Vec2::new(100.0 * t.sin(), 50.0 * (2.0 * t).sin())
            })
            .collect();
        assert!(matches!(TrackDefinition::new("eight", 2.0, pts), Err(Error::Config(_))));
    }

    #[test]
    fn parse_accepts_comments_and_round_trips() {
        let text = "# a square\nsquare\n1.5  # half width\n0 0\n\n10 0\n10 10 # corner\n0 10\n";
        let t = TrackDefinition::parse(text).unwrap();
        assert_eq!(t.name(), "square");
        assert_eq!(t.half_width(), 1.5);
        assert_eq!(t.centerline().len(), 4);
        assert_eq!(TrackDefinition::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(TrackDefinition::parse("").is_err());
        assert!(TrackDefinition::parse("x\nwide\n0 0\n1 0\n1 1\n").is_err());
        assert!(TrackDefinition::parse("x\n1\n0 0\n1\n1 1\n").is_err());
        assert!(TrackDefinition::parse("x\n1\n0 0 0\n10 0\n10 10\n").is_err());
    }
}
