//! Planar domains and their distance oracles.
//!
//! A [`DomainSpec`] is a Jordan domain given as a simple polygon or a disc,
//! normalized so that it contains the disc of radius 3/5 around the origin and
//! is contained in the disc of radius 4/5. Distances to the boundary are exact;
//! [`DomainSpec::oracle_distance`] perturbs them by a deterministic,
//! coordinate-hashed noise term to emulate an inexact distance oracle while
//! keeping the sandwich `(3/4)d < F < (5/4)d`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points closer to the boundary than this are treated as boundary points,
/// which keeps step radii bounded away from zero.
pub const BOUNDARY_EPS: f64 = 1e-14;

/// Fixed seed for the oracle noise hash, so the oracle is a function.
const ORACLE_SEED: u64 = 0x517c_c1b7_2722_0a95;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("query point ({}, {}) lies outside the open domain", .0.re, .0.im)]
    OutsideDomain(Point),
    #[error("oracle noise {0} outside [0, 1/4)")]
    NoiseOutOfRange(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("puncture center is too close to the boundary: d = {distance:.3e} <= 2^-{bits}")]
    PunctureTooClose { distance: f64, bits: u32 },
    #[error("puncture radius {radius:.3e} must be positive and below {limit:.3e}")]
    PunctureRadius { radius: f64, limit: f64 },
}

/// A point of the plane, used interchangeably as a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl Point {
    pub const ZERO: Point = Point { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Point { re, im }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Argument in (-pi, pi].
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.re * other.re + self.im * other.im
    }

    /// z-component of the cross product; positive when `other` is
    /// counterclockwise from `self`.
    pub fn cross(self, other: Point) -> f64 {
        self.re * other.im - self.im * other.re
    }

    /// Complex multiplication.
    pub fn mul_complex(self, other: Point) -> Point {
        Point::new(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )
    }

    /// Rotation by `angle` around the origin.
    pub fn rotate(self, angle: f64) -> Point {
        self.mul_complex(Point::from_polar(1.0, angle))
    }

    /// Principal complex power `self^exponent` computed in polar form.
    pub fn powf_complex(self, exponent: f64) -> Point {
        if self.norm_sq() == 0.0 {
            return Point::ZERO;
        }
        Point::from_polar(self.norm().powf(exponent), self.arg() * exponent)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.re * rhs, self.im * rhs)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.re, -self.im)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}

/// An open disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point, radius: f64) -> Self {
        assert!(radius > 0.0, "disc radius must be positive, got {radius}");
        Disc { center, radius }
    }

    pub fn contains(&self, z: Point) -> bool {
        z.dist(self.center) < self.radius
    }

    /// The concentric disc with `factor` times the radius.
    pub fn scaled(&self, factor: f64) -> Disc {
        Disc::new(self.center, self.radius * factor)
    }

    /// Point on the circle at the given angle.
    pub fn at_angle(&self, angle: f64) -> Point {
        self.center + Point::from_polar(self.radius, angle)
    }
}

/// The supported boundary shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Simple polygon, vertices in counterclockwise order.
    Polygon(Vec<Point>),
    Disc(Disc),
}

/// A Jordan domain together with the noise level of its distance oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    /// Relative perturbation bound of the distance oracle, in `[0, 1/4)`.
    pub oracle_noise: f64,
}

/// One failed domain check. Structural violations make the domain unusable for
/// the solvers; the metric (radius-bound) violations only break the normalized
/// scale contract.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainViolation {
    TooFewVertices { count: usize },
    NonFinite,
    SelfIntersecting { edge_a: usize, edge_b: usize },
    NotCounterClockwise,
    OriginOutside,
    InradiusTooSmall { observed: f64 },
    CircumradiusTooLarge { observed: f64 },
    OracleNoiseOutOfRange { value: f64 },
}

impl DomainViolation {
    pub fn is_structural(&self) -> bool {
        !matches!(
            self,
            DomainViolation::InradiusTooSmall { .. }
                | DomainViolation::CircumradiusTooLarge { .. }
        )
    }
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainViolation::TooFewVertices { count } => {
                write!(f, "polygon has {count} vertices, need at least 3")
            }
            DomainViolation::NonFinite => write!(f, "non-finite coordinate"),
            DomainViolation::SelfIntersecting { edge_a, edge_b } => {
                write!(f, "edges {edge_a} and {edge_b} intersect")
            }
            DomainViolation::NotCounterClockwise => {
                write!(f, "vertices are not in counterclockwise order")
            }
            DomainViolation::OriginOutside => write!(f, "origin is not an interior point"),
            DomainViolation::InradiusTooSmall { observed } => {
                write!(f, "boundary point at radius {observed:.6} < 3/5")
            }
            DomainViolation::CircumradiusTooLarge { observed } => {
                write!(f, "boundary point at radius {observed:.6} > 4/5")
            }
            DomainViolation::OracleNoiseOutOfRange { value } => {
                write!(f, "oracle noise {value} outside [0, 1/4)")
            }
        }
    }
}

/// Outcome of [`DomainSpec::validate`].
#[derive(Debug, Clone, Default)]
pub struct DomainReport {
    pub violations: Vec<DomainViolation>,
}

impl DomainReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when the domain is usable by the solvers, even if the normalized
    /// radius bounds are violated.
    pub fn is_structurally_ok(&self) -> bool {
        self.violations.iter().all(|v| !v.is_structural())
    }
}

impl fmt::Display for DomainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            Ok(())
        }
    }
}

const SAMPLE_COUNT: usize = 4096;

impl DomainSpec {
    pub fn polygon(vertices: Vec<Point>, oracle_noise: f64) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        check_noise(oracle_noise)?;
        Ok(DomainSpec {
            shape: Shape::Polygon(vertices),
            oracle_noise,
        })
    }

    pub fn disc(center: Point, radius: f64, oracle_noise: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        check_noise(oracle_noise)?;
        Ok(DomainSpec {
            shape: Shape::Disc(Disc::new(center, radius)),
            oracle_noise,
        })
    }

    /// The axis-aligned square with half-side `a` centered at the origin.
    pub fn square(half_side: f64, oracle_noise: f64) -> Result<Self, GeometryError> {
        DomainSpec::polygon(
            vec![
                Point::new(-half_side, -half_side),
                Point::new(half_side, -half_side),
                Point::new(half_side, half_side),
                Point::new(-half_side, half_side),
            ],
            oracle_noise,
        )
    }

    /// Exact Euclidean distance from `z` to the boundary, as seen from inside:
    /// points outside the closure report 0.
    pub fn distance_to_boundary(&self, z: Point) -> f64 {
        match &self.shape {
            Shape::Disc(d) => {
                let rho = z.dist(d.center);
                (d.radius - rho).max(0.0)
            }
            Shape::Polygon(vs) => {
                let d = polygon_boundary_distance(vs, z);
                if polygon_contains(vs, z) {
                    d
                } else {
                    0.0
                }
            }
        }
    }

    /// The deterministic noisy distance oracle. Satisfies
    /// `(1 - noise) d <= F <= (1 + noise) d` for interior queries.
    pub fn oracle_distance(&self, z: Point) -> Result<f64, GeometryError> {
        if !self.contains(z) {
            return Err(GeometryError::OutsideDomain(z));
        }
        let d = self.distance_to_boundary(z);
        Ok(d * (1.0 + self.oracle_noise * unit_noise(z)))
    }

    /// Walk step radius `R(z) = F(z)/2`; always in `(d/3, 2d/3)`.
    pub fn step_radius(&self, z: Point) -> Result<f64, GeometryError> {
        Ok(self.oracle_distance(z)? * 0.5)
    }

    /// Layout node radius `r(z) = F(z)/4`.
    pub fn node_radius(&self, z: Point) -> Result<f64, GeometryError> {
        Ok(self.oracle_distance(z)? * 0.25)
    }

    /// Exact nearest boundary point.
    pub fn nearest_boundary_point(&self, z: Point) -> Point {
        match &self.shape {
            Shape::Disc(d) => {
                let v = z - d.center;
                let rho = v.norm();
                if rho < BOUNDARY_EPS {
                    d.center + Point::new(d.radius, 0.0)
                } else {
                    d.center + v * (d.radius / rho)
                }
            }
            Shape::Polygon(vs) => {
                let mut best = vs[0];
                let mut best_d = f64::INFINITY;
                for (a, b) in polygon_edges(vs) {
                    let p = closest_point_on_segment(z, a, b);
                    let d = z.dist(p);
                    if d < best_d {
                        best_d = d;
                        best = p;
                    }
                }
                best
            }
        }
    }

    /// Strict interior test. Points within [`BOUNDARY_EPS`] of the boundary
    /// count as boundary, not interior.
    pub fn contains(&self, z: Point) -> bool {
        self.distance_to_boundary(z) > BOUNDARY_EPS
    }

    /// Checks the normalized-domain contract: simplicity and orientation for
    /// polygons, and `3/5 <= |p| <= 4/5` for boundary points via exact vertex
    /// checks plus 4096 boundary samples. Reports violations, never fails.
    pub fn validate(&self) -> DomainReport {
        let mut violations = Vec::new();
        if !(0.0..0.25).contains(&self.oracle_noise) {
            violations.push(DomainViolation::OracleNoiseOutOfRange {
                value: self.oracle_noise,
            });
        }
        match &self.shape {
            Shape::Disc(d) => {
                let inner = d.radius - d.center.norm();
                let outer = d.radius + d.center.norm();
                if inner < 0.6 - 1e-12 {
                    violations.push(DomainViolation::InradiusTooSmall { observed: inner });
                }
                if outer > 0.8 + 1e-12 {
                    violations.push(DomainViolation::CircumradiusTooLarge { observed: outer });
                }
            }
            Shape::Polygon(vs) => {
                if vs.len() < 3 {
                    violations.push(DomainViolation::TooFewVertices { count: vs.len() });
                    return DomainReport { violations };
                }
                if vs.iter().any(|v| !v.is_finite()) {
                    violations.push(DomainViolation::NonFinite);
                    return DomainReport { violations };
                }
                if let Some((i, j)) = polygon_self_intersection(vs) {
                    violations.push(DomainViolation::SelfIntersecting { edge_a: i, edge_b: j });
                }
                if polygon_signed_area(vs) <= 0.0 {
                    violations.push(DomainViolation::NotCounterClockwise);
                }
                if !polygon_contains(vs, Point::ZERO) {
                    violations.push(DomainViolation::OriginOutside);
                }
                let mut min_r = f64::INFINITY;
                let mut max_r: f64 = 0.0;
                for v in vs {
                    min_r = min_r.min(v.norm());
                    max_r = max_r.max(v.norm());
                }
                for p in self.boundary_samples(SAMPLE_COUNT) {
                    min_r = min_r.min(p.norm());
                    max_r = max_r.max(p.norm());
                }
                if min_r < 0.6 - 1e-12 {
                    violations.push(DomainViolation::InradiusTooSmall { observed: min_r });
                }
                if max_r > 0.8 + 1e-12 {
                    violations.push(DomainViolation::CircumradiusTooLarge { observed: max_r });
                }
            }
        }
        DomainReport { violations }
    }

    /// Total boundary arclength.
    pub fn boundary_length(&self) -> f64 {
        match &self.shape {
            Shape::Disc(d) => TAU * d.radius,
            Shape::Polygon(vs) => polygon_edges(vs).map(|(a, b)| a.dist(b)).sum(),
        }
    }

    /// Boundary point at cumulative arclength `s` (wrapped into `[0, L)`).
    /// Discs start at angle 0, polygons at vertex 0.
    pub fn boundary_point(&self, s: f64) -> Point {
        let len = self.boundary_length();
        let mut s = s.rem_euclid(len);
        match &self.shape {
            Shape::Disc(d) => d.at_angle(s / d.radius),
            Shape::Polygon(vs) => {
                for (a, b) in polygon_edges(vs) {
                    let e = a.dist(b);
                    if s <= e {
                        return a + (b - a) * (s / e);
                    }
                    s -= e;
                }
                vs[0]
            }
        }
    }

    /// Arclength coordinate of (the projection to the boundary of) `z`.
    pub fn boundary_arclength(&self, z: Point) -> f64 {
        match &self.shape {
            Shape::Disc(d) => {
                let theta = (z - d.center).arg().rem_euclid(TAU);
                theta * d.radius
            }
            Shape::Polygon(vs) => {
                let mut acc = 0.0;
                let mut best = (f64::INFINITY, 0.0);
                for (a, b) in polygon_edges(vs) {
                    let e = a.dist(b);
                    let p = closest_point_on_segment(z, a, b);
                    let d = z.dist(p);
                    if d < best.0 {
                        best = (d, acc + a.dist(p));
                    }
                    acc += e;
                }
                best.1
            }
        }
    }

    /// `count` equispaced boundary points.
    pub fn boundary_samples(&self, count: usize) -> Vec<Point> {
        let len = self.boundary_length();
        (0..count)
            .map(|k| self.boundary_point(len * k as f64 / count as f64))
            .collect()
    }

    /// Parses the domain JSON schema.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: DomainJson = serde_json::from_str(text)?;
        Ok(raw.into())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DomainJson::from(self)).expect("domain serialization")
    }
}

fn check_noise(noise: f64) -> Result<(), GeometryError> {
    if !(0.0..0.25).contains(&noise) {
        return Err(GeometryError::NoiseOutOfRange(noise));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DomainJson {
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        oracle_noise: f64,
    },
    Disc {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        oracle_noise: f64,
    },
}

impl From<DomainJson> for DomainSpec {
    fn from(raw: DomainJson) -> Self {
        match raw {
            DomainJson::Polygon {
                vertices,
                oracle_noise,
            } => DomainSpec {
                shape: Shape::Polygon(
                    vertices.iter().map(|v| Point::new(v[0], v[1])).collect(),
                ),
                oracle_noise,
            },
            DomainJson::Disc {
                center,
                radius,
                oracle_noise,
            } => DomainSpec {
                shape: Shape::Disc(Disc::new(Point::new(center[0], center[1]), radius)),
                oracle_noise,
            },
        }
    }
}

impl From<&DomainSpec> for DomainJson {
    fn from(spec: &DomainSpec) -> Self {
        match &spec.shape {
            Shape::Polygon(vs) => DomainJson::Polygon {
                vertices: vs.iter().map(|v| [v.re, v.im]).collect(),
                oracle_noise: spec.oracle_noise,
            },
            Shape::Disc(d) => DomainJson::Disc {
                center: [d.center.re, d.center.im],
                radius: d.radius,
                oracle_noise: spec.oracle_noise,
            },
        }
    }
}

/// The punctured domain used by the map construction: `base` minus the closed
/// disc of radius `inner_radius` around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuncturedDomain {
    pub base: DomainSpec,
    pub center: Point,
    pub inner_radius: f64,
    pub bits: u32,
}

impl PuncturedDomain {
    /// Standard puncture of radius `e^{-2n}` for precision `n` bits.
    pub fn new(base: DomainSpec, center: Point, bits: u32) -> Result<Self, GeometryError> {
        let radius = (-2.0 * bits as f64).exp();
        PuncturedDomain::with_inner_radius(base, center, bits, radius)
    }

    pub fn with_inner_radius(
        base: DomainSpec,
        center: Point,
        bits: u32,
        inner_radius: f64,
    ) -> Result<Self, GeometryError> {
        let d = base.distance_to_boundary(center);
        let min_clearance = 2f64.powi(-(bits as i32));
        if d <= min_clearance {
            return Err(GeometryError::PunctureTooClose { distance: d, bits });
        }
        let limit = 0.5 * min_clearance;
        if inner_radius <= 0.0 || inner_radius >= limit {
            return Err(GeometryError::PunctureRadius {
                radius: inner_radius,
                limit,
            });
        }
        Ok(PuncturedDomain {
            base,
            center,
            inner_radius,
            bits,
        })
    }

    /// Exact distance to the punctured-domain boundary (outer boundary or
    /// puncture circle), 0 inside the puncture.
    pub fn distance(&self, z: Point) -> f64 {
        let to_hole = (z.dist(self.center) - self.inner_radius).max(0.0);
        self.base.distance_to_boundary(z).min(to_hole)
    }

    /// Noisy oracle for the punctured domain; the puncture term is exact, so
    /// the sandwich bound is preserved.
    pub fn oracle_distance(&self, z: Point) -> Result<f64, GeometryError> {
        if !self.contains(z) {
            return Err(GeometryError::OutsideDomain(z));
        }
        let f = self.base.oracle_distance(z)?;
        Ok(f.min(z.dist(self.center) - self.inner_radius))
    }

    pub fn contains(&self, z: Point) -> bool {
        self.base.contains(z) && z.dist(self.center) - self.inner_radius > BOUNDARY_EPS
    }

    /// Nearest point on the punctured-domain boundary.
    pub fn nearest_boundary_point(&self, z: Point) -> Point {
        let to_hole = z.dist(self.center) - self.inner_radius;
        if to_hole.abs() < self.base.distance_to_boundary(z) {
            let v = z - self.center;
            let rho = v.norm();
            if rho < BOUNDARY_EPS {
                self.center + Point::new(self.inner_radius, 0.0)
            } else {
                self.center + v * (self.inner_radius / rho)
            }
        } else {
            self.base.nearest_boundary_point(z)
        }
    }

    /// True when the nearest boundary component is the puncture circle.
    pub fn absorbs_at_puncture(&self, z: Point) -> bool {
        (z.dist(self.center) - self.inner_radius).abs() < self.base.distance_to_boundary(z)
    }
}

fn polygon_edges(vs: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..vs.len()).map(move |i| (vs[i], vs[(i + 1) % vs.len()]))
}

fn closest_point_on_segment(z: Point, a: Point, b: Point) -> Point {
    let u = b - a;
    let len_sq = u.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((z - a).dot(u) / len_sq).clamp(0.0, 1.0);
    a + u * t
}

fn polygon_boundary_distance(vs: &[Point], z: Point) -> f64 {
    polygon_edges(vs)
        .map(|(a, b)| z.dist(closest_point_on_segment(z, a, b)))
        .fold(f64::INFINITY, f64::min)
}

/// Crossing-number test; boundary membership is resolved by the caller.
fn polygon_contains(vs: &[Point], z: Point) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(vs) {
        if (a.im > z.im) != (b.im > z.im) {
            let t = (z.im - a.im) / (b.im - a.im);
            let x = a.re + t * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_signed_area(vs: &[Point]) -> f64 {
    0.5 * polygon_edges(vs).map(|(a, b)| a.cross(b)).sum::<f64>()
}

/// Proper-intersection test between non-adjacent edges.
fn polygon_self_intersection(vs: &[Point]) -> Option<(usize, usize)> {
    let n = vs.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = (vs[i], vs[(i + 1) % n]);
            let (c, d) = (vs[j], vs[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic pseudo-random value in [-1, 1] from the rounded coordinates.
fn unit_noise(z: Point) -> f64 {
    let scale = (1u64 << 40) as f64;
    let qx = (z.re * scale).round() as i64 as u64;
    let qy = (z.im * scale).round() as i64 as u64;
    let h = splitmix64(splitmix64(ORACLE_SEED ^ qx).wrapping_add(qy.rotate_left(17)));
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc06() -> DomainSpec {
        DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap()
    }

    fn square055() -> DomainSpec {
        DomainSpec::square(0.55, 0.0).unwrap()
    }

    #[test]
    fn distance_disc_center_and_interior() {
        let g = disc06();
        assert_eq!(g.distance_to_boundary(Point::ZERO), 0.6);
        assert!((g.distance_to_boundary(Point::new(0.3, 0.0)) - 0.3).abs() < 1e-15);
        assert_eq!(g.distance_to_boundary(Point::new(0.7, 0.0)), 0.0);
    }

    #[test]
    fn distance_square_edge() {
        let g = square055();
        assert!((g.distance_to_boundary(Point::new(0.5, 0.0)) - 0.05).abs() < 1e-15);
        assert!((g.distance_to_boundary(Point::ZERO) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn oracle_exact_when_noise_zero() {
        let g = disc06();
        assert!((g.oracle_distance(Point::ZERO).unwrap() - 0.6).abs() < 1e-15);
        let sq = square055();
        assert!((sq.oracle_distance(Point::ZERO).unwrap() - 0.55).abs() < 1e-15);
    }

    #[test]
    fn oracle_sandwich_with_noise() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.2).unwrap();
        let f = g.oracle_distance(Point::ZERO).unwrap();
        assert!(f > 0.48 && f < 0.72, "oracle {f} outside sandwich");
    }

    #[test]
    fn oracle_is_deterministic() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.2).unwrap();
        let z = Point::new(0.123456, -0.234567);
        assert_eq!(g.oracle_distance(z).unwrap(), g.oracle_distance(z).unwrap());
    }

    #[test]
    fn oracle_outside_errors() {
        let g = disc06();
        assert!(g.oracle_distance(Point::new(0.7, 0.0)).is_err());
    }

    #[test]
    fn step_and_node_radius_arithmetic() {
        let g = disc06();
        let r_step = g.step_radius(Point::ZERO).unwrap();
        let r_node = g.node_radius(Point::ZERO).unwrap();
        assert!((r_step - 0.3).abs() < 1e-15);
        assert!((r_node - 0.15).abs() < 1e-15);
    }

    #[test]
    fn step_radius_sandwich_everywhere() {
        // Random interior points in both test domains; maximum noise.
        let domains = [
            DomainSpec::disc(Point::ZERO, 0.6, 0.24).unwrap(),
            DomainSpec::square(0.55, 0.24).unwrap(),
        ];
        let mut k = 0u64;
        for g in &domains {
            let mut checked = 0;
            while checked < 2000 {
                k += 1;
                let h = splitmix64(k);
                let x = ((h & 0xffff_ffff) as f64 / 2f64.powi(32) - 0.5) * 1.58;
                let y = ((h >> 32) as f64 / 2f64.powi(32) - 0.5) * 1.58;
                let z = Point::new(x, y);
                if !g.contains(z) {
                    continue;
                }
                checked += 1;
                let d = g.distance_to_boundary(z);
                let big_r = g.step_radius(z).unwrap();
                assert!(d / 3.0 < big_r && big_r < 2.0 * d / 3.0);
                // Node safety: the doubled node disc stays inside G.
                let r = g.node_radius(z).unwrap();
                assert!(2.0 * r < d);
            }
        }
    }

    #[test]
    fn nearest_boundary_point_cases() {
        let g = disc06();
        let p = g.nearest_boundary_point(Point::new(0.3, 0.0));
        assert!(p.dist(Point::new(0.6, 0.0)) < 1e-15);

        let sq = square055();
        let q = sq.nearest_boundary_point(Point::new(0.5, 0.1));
        assert!(q.dist(Point::new(0.55, 0.1)) < 1e-15);

        // A boundary point projects to itself.
        let on_edge = Point::new(0.55, 0.2);
        assert!(sq.nearest_boundary_point(on_edge).dist(on_edge) < 1e-15);
    }

    #[test]
    fn nearest_boundary_point_lies_on_boundary() {
        let domains = [disc06(), square055()];
        for g in &domains {
            for k in 0..500u64 {
                let h = splitmix64(k + 7777);
                let x = ((h & 0xffff_ffff) as f64 / 2f64.powi(32) - 0.5) * 1.5;
                let y = ((h >> 32) as f64 / 2f64.powi(32) - 0.5) * 1.5;
                let z = Point::new(x, y);
                let p = g.nearest_boundary_point(z);
                let residual = match &g.shape {
                    Shape::Disc(d) => (p.dist(d.center) - d.radius).abs(),
                    Shape::Polygon(vs) => polygon_boundary_distance(vs, p),
                };
                assert!(residual < 1e-12, "residual {residual}");
            }
        }
    }

    #[test]
    fn contains_excludes_boundary() {
        let g = disc06();
        assert!(g.contains(Point::ZERO));
        assert!(!g.contains(Point::new(0.7, 0.0)));
        let sq = square055();
        assert!(!sq.contains(Point::new(0.55, 0.55)));
        assert!(!sq.contains(Point::new(0.55, 0.0)));
    }

    #[test]
    fn validate_disc_cases() {
        assert!(disc06().validate().is_ok());
        let small = DomainSpec::disc(Point::ZERO, 0.5, 0.0).unwrap();
        let report = small.validate();
        assert!(!report.is_ok());
        assert!(matches!(
            report.violations[0],
            DomainViolation::InradiusTooSmall { .. }
        ));
    }

    #[test]
    fn validate_square_07_circumradius() {
        let sq = DomainSpec::square(0.7, 0.0).unwrap();
        let report = sq.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, DomainViolation::CircumradiusTooLarge { observed } if *observed > 0.98)));
    }

    #[test]
    fn validate_square_055_structurally_ok() {
        // No square fits the (3/5, 4/5) sandwich exactly; the standard test
        // square violates only the inradius bound and stays solver-usable.
        let report = square055().validate();
        assert!(!report.is_ok());
        assert!(report.is_structurally_ok());
        assert!(report
            .violations
            .iter()
            .all(|v| matches!(v, DomainViolation::InradiusTooSmall { .. })));
    }

    #[test]
    fn validate_rejects_clockwise_and_self_intersecting() {
        let cw = DomainSpec::polygon(
            vec![
                Point::new(-0.55, -0.55),
                Point::new(-0.55, 0.55),
                Point::new(0.55, 0.55),
                Point::new(0.55, -0.55),
            ],
            0.0,
        )
        .unwrap();
        assert!(cw
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, DomainViolation::NotCounterClockwise)));

        let bowtie = DomainSpec::polygon(
            vec![
                Point::new(-0.7, -0.7),
                Point::new(0.7, 0.7),
                Point::new(0.7, -0.7),
                Point::new(-0.7, 0.7),
            ],
            0.0,
        )
        .unwrap();
        assert!(bowtie
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, DomainViolation::SelfIntersecting { .. })));
    }

    #[test]
    fn distance_matches_brute_force_boundary_sampling() {
        let domains = [disc06(), square055()];
        for g in &domains {
            let samples = g.boundary_samples(10_000);
            let step = g.boundary_length() / 10_000.0;
            for k in 0..200u64 {
                let h = splitmix64(k + 31);
                let x = ((h & 0xffff_ffff) as f64 / 2f64.powi(32) - 0.5) * 1.2;
                let y = ((h >> 32) as f64 / 2f64.powi(32) - 0.5) * 1.2;
                let z = Point::new(x, y);
                if !g.contains(z) {
                    continue;
                }
                let brute = samples
                    .iter()
                    .map(|p| p.dist(z))
                    .fold(f64::INFINITY, f64::min);
                let exact = g.distance_to_boundary(z);
                assert!(
                    (brute - exact).abs() <= step,
                    "brute {brute} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn boundary_param_roundtrip() {
        let g = square055();
        let len = g.boundary_length();
        assert!((len - 4.4).abs() < 1e-12);
        let p = g.boundary_point(0.0);
        assert!(p.dist(Point::new(-0.55, -0.55)) < 1e-12);
        let s = g.boundary_arclength(Point::new(0.55, -0.55));
        assert!((s - 1.1).abs() < 1e-9, "arclength {s}");
    }

    #[test]
    fn punctured_domain_checks() {
        let g = disc06();
        let pd = PuncturedDomain::new(g.clone(), Point::ZERO, 4).unwrap();
        assert!(pd.inner_radius < 0.5 * 2f64.powi(-4));
        assert!((pd.inner_radius - (-8.0f64).exp()).abs() < 1e-18);
        // Distance switches between hole and outer boundary.
        let near_hole = Point::new(2.0 * pd.inner_radius, 0.0);
        assert!((pd.distance(near_hole) - pd.inner_radius).abs() < 1e-15);
        assert!(pd.absorbs_at_puncture(near_hole));
        assert!(!pd.absorbs_at_puncture(Point::new(0.55, 0.0)));
        // Too-close punctures are rejected.
        let close = PuncturedDomain::new(g, Point::new(0.6 - 1e-3, 0.0), 4);
        assert!(close.is_err());
    }

    #[test]
    fn domain_json_roundtrip() {
        let g = square055();
        let text = g.to_json();
        let back = DomainSpec::from_json(&text).unwrap();
        assert_eq!(g, back);

        let parsed = DomainSpec::from_json(
            r#"{"type":"disc","center":[0.0,0.0],"radius":0.6,"oracle_noise":0.0}"#,
        )
        .unwrap();
        assert_eq!(parsed, disc06());
    }
}
