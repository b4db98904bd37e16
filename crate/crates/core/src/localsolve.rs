//! Boundary neighborhoods with attached local Dirichlet solvers.
//!
//! Every boundary point of the domain is covered by the core of an admissible
//! neighborhood. For polygon domains each neighborhood points at a shared
//! vertex region: a sector at the vertex, straightened by the power map
//! `w -> i ((w - v) e^{-i beta})^{1/alpha}` onto the upper unit half-disc and
//! solved by odd reflection through the diameter (zero boundary data on the
//! polygon edges). Disc domains carry a single ring region along the outer
//! circle, solved as an annulus Dirichlet problem with zero outer data.
//!
//! Each region also carries a covering of its free boundary (the part away
//! from the domain boundary) by balls: interior balls whose doubles stay in
//! the domain, plus two end balls of diameter at most `2^{-3n}` where the free
//! boundary meets the domain boundary. The covering is how boundary data is
//! transported into the local solver: callers provide one harmonic patch per
//! covering ball and arc data is read through first-match patch evaluation.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::export::SvgBuilder;
use crate::geometry::{Disc, DomainSpec, GeometryError, Point, PuncturedDomain, Shape};
use crate::harmonic::{
    AnnulusHarmonic, BoundaryData, BoundaryProfile, HarmonicError, HarmonicPatch,
};

/// Maximum reach of a core-triggered node update, in units of the core radius.
/// A layout node touching the tripled core has its doubled disc within this
/// distance of the core anchor, so regions must extend at least this far.
pub const CORE_REACH_FACTOR: f64 = 7.2;

/// Ring band width in units of the ring core radius.
pub const RING_BAND_FACTOR: f64 = 8.0;

#[derive(Debug, Error)]
pub enum LocalSolveError {
    #[error("operation requires a polygon domain")]
    NotAPolygon,
    #[error("operation requires a disc domain")]
    NotADisc,
    #[error("domain failed validation: {0}")]
    InvalidDomain(String),
    #[error("degenerate polygon geometry: {0}; retry with a smaller core scale")]
    DegeneratePolygon(String),
    #[error(
        "region {region} spans {available:.4} but assigned cores need {required:.4}; retry with a smaller core scale"
    )]
    RegionTooSmall {
        region: usize,
        required: f64,
        available: f64,
    },
    #[error("arc quadrature node at angle {angle:.6} (point {point}) is not covered by any patch")]
    UncoveredArcNode { angle: f64, point: Point },
    #[error("evaluation point {point} lies outside the region")]
    OutsideRegion { point: Point },
    #[error("only identically-zero boundary data is supported by the local solvers")]
    UnsupportedBoundaryData,
    #[error("covering construction exceeded the ball budget")]
    CoveringBudget,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

/// Construction parameters for boundary neighborhoods.
#[derive(Debug, Clone)]
pub struct NeighborhoodConfig {
    /// Core radius is the local feature size divided by this.
    pub core_divisor: f64,
    /// Core spacing along edges, in units of the core radius.
    pub spacing_factor: f64,
    /// Vertex region radius as a fraction of the shortest adjacent edge.
    pub region_margin: f64,
    /// Quadrature nodes on the straightened unit circle.
    pub arc_quad: usize,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        NeighborhoodConfig {
            core_divisor: 20.0,
            spacing_factor: 1.4,
            region_margin: 0.95,
            arc_quad: 512,
        }
    }
}

/// A boundary core pointing at its shared region solver.
#[derive(Debug, Clone)]
pub struct AdmissibleNeighborhood {
    /// Boundary anchor point.
    pub anchor: Point,
    /// Core radius; the core is the disc of this radius at the anchor.
    pub core_radius: f64,
    /// Index into [`LocalSolution::regions`].
    pub region_id: usize,
}

impl AdmissibleNeighborhood {
    pub fn core(&self) -> Disc {
        Disc::new(self.anchor, self.core_radius)
    }
}

/// Geometry of a local solver domain.
#[derive(Debug, Clone)]
pub enum LocalRegion {
    /// Sector of the given radius at a polygon vertex. `alpha` is the interior
    /// angle divided by pi; `bisector` is the direction of the angle bisector.
    /// Edge neighborhoods are the special case `alpha = 1`.
    Wedge {
        vertex: Point,
        radius: f64,
        bisector: f64,
        alpha: f64,
    },
    /// Annulus band along a circular outer boundary with zero data on the
    /// outer circle.
    Ring { boundary: Disc, inner_radius: f64 },
}

impl LocalRegion {
    pub fn contains(&self, z: Point) -> bool {
        match self {
            LocalRegion::Wedge {
                vertex,
                radius,
                bisector,
                alpha,
            } => {
                let v = z - *vertex;
                let rho = v.norm();
                if rho <= 0.0 || rho >= *radius {
                    return false;
                }
                let phi = wrap_angle(v.arg() - bisector);
                phi.abs() < alpha * PI / 2.0
            }
            LocalRegion::Ring {
                boundary,
                inner_radius,
            } => {
                let rho = z.dist(boundary.center);
                rho > *inner_radius && rho < boundary.radius
            }
        }
    }

    /// Points on the free boundary (sector arc or ring inner circle).
    pub fn free_boundary_point(&self, t: f64) -> Point {
        match self {
            LocalRegion::Wedge {
                vertex,
                radius,
                bisector,
                alpha,
            } => {
                let phi = bisector + alpha * PI * (t - 0.5);
                *vertex + Point::from_polar(*radius, phi)
            }
            LocalRegion::Ring {
                boundary,
                inner_radius,
            } => boundary.center + Point::from_polar(*inner_radius, TAU * t),
        }
    }

    pub fn free_boundary_length(&self) -> f64 {
        match self {
            LocalRegion::Wedge { radius, alpha, .. } => radius * alpha * PI,
            LocalRegion::Ring { inner_radius, .. } => TAU * inner_radius,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Covering of a region's free boundary by balls.
#[derive(Debug, Clone, Default)]
pub struct Covering {
    /// Ordered along the free boundary. When `end_balls` is true the first and
    /// last entries are the small end balls touching the domain boundary.
    pub balls: Vec<Disc>,
    pub end_balls: bool,
}

impl Covering {
    pub fn interior_balls(&self) -> &[Disc] {
        if self.end_balls {
            &self.balls[1..self.balls.len() - 1]
        } else {
            &self.balls
        }
    }

    pub fn ends(&self) -> Option<(&Disc, &Disc)> {
        if self.end_balls {
            Some((&self.balls[0], &self.balls[self.balls.len() - 1]))
        } else {
            None
        }
    }
}

/// A shared region solver: geometry plus the covering of its free boundary.
#[derive(Debug, Clone)]
pub struct RegionSolver {
    pub region: LocalRegion,
    pub covering: Covering,
}

/// The boundary structure for one precision level: cores covering the domain
/// boundary, each attached to a shared region solver.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub neighborhoods: Vec<AdmissibleNeighborhood>,
    pub regions: Vec<RegionSolver>,
    pub bits: u32,
    pub config: NeighborhoodConfig,
}

impl LocalSolution {
    /// Builds wedge neighborhoods for a polygon domain: one region per vertex,
    /// cores along every edge, coverings per region.
    pub fn build_polygon(
        domain: &DomainSpec,
        bits: u32,
        config: NeighborhoodConfig,
    ) -> Result<Self, LocalSolveError> {
        let Shape::Polygon(vs) = &domain.shape else {
            return Err(LocalSolveError::NotAPolygon);
        };
        let report = domain.validate();
        if !report.is_structurally_ok() {
            return Err(LocalSolveError::InvalidDomain(report.to_string()));
        }
        let n_verts = vs.len();
        let edge_len: Vec<f64> = (0..n_verts)
            .map(|i| vs[i].dist(vs[(i + 1) % n_verts]))
            .collect();

        // Vertex regions.
        let mut regions = Vec::with_capacity(n_verts);
        let mut vertex_core_radius = Vec::with_capacity(n_verts);
        for i in 0..n_verts {
            let v = vs[i];
            let prev = vs[(i + n_verts - 1) % n_verts];
            let next = vs[(i + 1) % n_verts];
            let theta_out = (next - v).arg();
            let theta_in = (prev - v).arg();
            let alpha = (theta_in - theta_out).rem_euclid(TAU) / PI;
            let bisector = theta_out + alpha * PI / 2.0;
            let min_adj = edge_len[i].min(edge_len[(i + n_verts - 1) % n_verts]);
            let radius = config.region_margin * min_adj;
            let region = LocalRegion::Wedge {
                vertex: v,
                radius,
                bisector,
                alpha,
            };
            check_region_inside(domain, &region, i)?;
            regions.push(region);
            vertex_core_radius.push(min_adj / config.core_divisor);
        }

        // Cores: one per vertex plus chains along each edge, assigned to the
        // nearest vertex region.
        let mut neighborhoods = Vec::new();
        for i in 0..n_verts {
            neighborhoods.push(AdmissibleNeighborhood {
                anchor: vs[i],
                core_radius: vertex_core_radius[i],
                region_id: i,
            });
        }
        for i in 0..n_verts {
            let a = vs[i];
            let b = vs[(i + 1) % n_verts];
            let len = edge_len[i];
            let feature = edge_feature_size(vs, i, &edge_len)?;
            let r_e = feature / config.core_divisor;
            let start = 0.8 * vertex_core_radius[i];
            let end = len - 0.8 * vertex_core_radius[(i + 1) % n_verts];
            if end <= start {
                return Err(LocalSolveError::DegeneratePolygon(format!(
                    "edge {i} too short for its vertex cores"
                )));
            }
            let count = ((end - start) / (config.spacing_factor * r_e)).ceil() as usize + 1;
            let dir = (b - a) * (1.0 / len);
            for k in 0..count {
                let ell = start + (end - start) * k as f64 / (count - 1).max(1) as f64;
                let region_id = if ell <= len / 2.0 {
                    i
                } else {
                    (i + 1) % n_verts
                };
                neighborhoods.push(AdmissibleNeighborhood {
                    anchor: a + dir * ell,
                    core_radius: r_e,
                    region_id,
                });
            }
        }

        // Every region must reach past the update zone of its assigned cores.
        for (idx, region) in regions.iter().enumerate() {
            let LocalRegion::Wedge { vertex, radius, .. } = region else {
                unreachable!()
            };
            let required = neighborhoods
                .iter()
                .filter(|nb| nb.region_id == idx)
                .map(|nb| nb.anchor.dist(*vertex) + CORE_REACH_FACTOR * nb.core_radius)
                .fold(0.0, f64::max);
            if required > *radius {
                return Err(LocalSolveError::RegionTooSmall {
                    region: idx,
                    required,
                    available: *radius,
                });
            }
        }

        let regions = regions
            .into_iter()
            .map(|region| {
                let covering = build_covering(domain, &region, bits)?;
                Ok(RegionSolver { region, covering })
            })
            .collect::<Result<Vec<_>, LocalSolveError>>()?;

        Ok(LocalSolution {
            neighborhoods,
            regions,
            bits,
            config,
        })
    }

    /// Builds the ring structure for a disc domain: cores along the circle,
    /// all sharing one annulus band region.
    pub fn build_disc(
        domain: &DomainSpec,
        bits: u32,
        config: NeighborhoodConfig,
    ) -> Result<Self, LocalSolveError> {
        let Shape::Disc(disc) = &domain.shape else {
            return Err(LocalSolveError::NotADisc);
        };
        let r_core = disc.radius / config.core_divisor;
        let inner_radius = disc.radius - RING_BAND_FACTOR * r_core;
        let region = LocalRegion::Ring {
            boundary: *disc,
            inner_radius,
        };
        let count = (TAU * disc.radius / (config.spacing_factor * r_core)).ceil() as usize;
        let neighborhoods = (0..count)
            .map(|k| AdmissibleNeighborhood {
                anchor: disc.at_angle(TAU * k as f64 / count as f64),
                core_radius: r_core,
                region_id: 0,
            })
            .collect();
        let covering = build_covering(domain, &region, bits)?;
        Ok(LocalSolution {
            neighborhoods,
            regions: vec![RegionSolver { region, covering }],
            bits,
            config,
        })
    }

    /// Dispatch on the domain shape.
    pub fn build(
        domain: &DomainSpec,
        bits: u32,
        config: NeighborhoodConfig,
    ) -> Result<Self, LocalSolveError> {
        match domain.shape {
            Shape::Polygon(_) => LocalSolution::build_polygon(domain, bits, config),
            Shape::Disc(_) => LocalSolution::build_disc(domain, bits, config),
        }
    }

    pub fn region_of(&self, nb: &AdmissibleNeighborhood) -> &RegionSolver {
        &self.regions[nb.region_id]
    }

    /// Assembles the local solution of a region from covering-ball patches
    /// (first-match semantics along the free boundary) with zero data on the
    /// domain boundary.
    pub fn assemble(
        &self,
        region_id: usize,
        patches: &[HarmonicPatch],
    ) -> Result<AssembledLocal, LocalSolveError> {
        let solver = &self.regions[region_id];
        assemble_region(&solver.region, patches, self.config.arc_quad)
    }

    /// The identically-zero local solution, used as the starting state.
    pub fn assemble_zero(&self, region_id: usize) -> Result<AssembledLocal, LocalSolveError> {
        let solver = &self.regions[region_id];
        match &solver.region {
            LocalRegion::Wedge { .. } => Ok(AssembledLocal {
                region: solver.region.clone(),
                kind: AssembledKind::Wedge {
                    values: vec![0.0; self.config.arc_quad],
                },
            }),
            LocalRegion::Ring {
                boundary,
                inner_radius,
            } => {
                let zeros = vec![0.0; 128];
                let solved = AnnulusHarmonic::solve(
                    boundary.center,
                    *inner_radius,
                    boundary.radius,
                    &zeros,
                    &zeros,
                )?;
                Ok(AssembledLocal {
                    region: solver.region.clone(),
                    kind: AssembledKind::Ring(solved),
                })
            }
        }
    }

    /// Value at `z` of the local Dirichlet solution on the neighborhood's
    /// region with the given covering data and boundary values. Only
    /// identically-zero boundary data is supported.
    pub fn solve_local(
        &self,
        nb: &AdmissibleNeighborhood,
        boundary_patches: &[HarmonicPatch],
        phi_on_boundary: &BoundaryData,
        z: Point,
    ) -> Result<f64, LocalSolveError> {
        if !matches!(phi_on_boundary.profile, BoundaryProfile::Zero) {
            return Err(LocalSolveError::UnsupportedBoundaryData);
        }
        let assembled = self.assemble(nb.region_id, boundary_patches)?;
        assembled.eval(z)
    }

    /// SVG dump of cores, regions, and coverings.
    pub fn to_svg(&self, domain: &DomainSpec) -> String {
        let mut svg = SvgBuilder::new((-0.9, -0.9, 1.8, 1.8));
        match &domain.shape {
            Shape::Polygon(vs) => svg.polygon(vs, "black"),
            Shape::Disc(d) => svg.circle(d.center, d.radius, "black", "none"),
        }
        for solver in &self.regions {
            let samples: Vec<Point> = (0..=64)
                .map(|k| solver.region.free_boundary_point(k as f64 / 64.0))
                .collect();
            svg.polyline(&samples, "orange");
            for ball in &solver.covering.balls {
                svg.circle(ball.center, ball.radius, "gray", "none");
            }
        }
        for nb in &self.neighborhoods {
            svg.circle(nb.anchor, nb.core_radius, "red", "none");
        }
        svg.finish()
    }
}

/// Free function with the natural argument order; polygons only.
pub fn build_neighborhoods(
    domain: &DomainSpec,
    bits: u32,
) -> Result<LocalSolution, LocalSolveError> {
    LocalSolution::build_polygon(domain, bits, NeighborhoodConfig::default())
}

fn edge_feature_size(
    vs: &[Point],
    edge: usize,
    edge_len: &[f64],
) -> Result<f64, LocalSolveError> {
    let n = vs.len();
    let a = vs[edge];
    let b = vs[(edge + 1) % n];
    let mut feature = edge_len[edge]
        .min(edge_len[(edge + n - 1) % n])
        .min(edge_len[(edge + 1) % n]);
    for other in 0..n {
        if other == edge || other == (edge + 1) % n || (other + 1) % n == edge {
            continue;
        }
        let c = vs[other];
        let d = vs[(other + 1) % n];
        feature = feature.min(segment_distance(a, b, c, d));
    }
    if feature <= 0.0 {
        return Err(LocalSolveError::DegeneratePolygon(format!(
            "edge {edge} touches a non-adjacent edge"
        )));
    }
    Ok(feature)
}

fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    fn point_seg(z: Point, a: Point, b: Point) -> f64 {
        let u = b - a;
        let len_sq = u.norm_sq();
        if len_sq == 0.0 {
            return z.dist(a);
        }
        let t = ((z - a).dot(u) / len_sq).clamp(0.0, 1.0);
        z.dist(a + u * t)
    }
    point_seg(a, c, d)
        .min(point_seg(b, c, d))
        .min(point_seg(c, a, b))
        .min(point_seg(d, a, b))
}

/// The region must not leak out of the domain: its free boundary stays inside
/// G except at the two contact points.
fn check_region_inside(
    domain: &DomainSpec,
    region: &LocalRegion,
    index: usize,
) -> Result<(), LocalSolveError> {
    let samples = 128;
    for k in 1..samples {
        let t = k as f64 / samples as f64;
        let p = region.free_boundary_point(t);
        if !domain.contains(p) {
            return Err(LocalSolveError::DegeneratePolygon(format!(
                "region {index} free boundary exits the domain at {p}"
            )));
        }
    }
    Ok(())
}

/// Covers the free boundary of a region: end balls of diameter `2^{-3n}`
/// where it meets the domain boundary (wedges only), interior balls of radius
/// `F/8` marching along the rest with their doubles inside the domain.
fn build_covering(
    domain: &DomainSpec,
    region: &LocalRegion,
    bits: u32,
) -> Result<Covering, LocalSolveError> {
    const BUDGET: usize = 100_000;
    let total = region.free_boundary_length();
    match region {
        LocalRegion::Ring { .. } => {
            // Closed curve: uniform march, no end balls.
            let mut balls = Vec::new();
            let mut s = 0.0;
            while s < total {
                let p = region.free_boundary_point(s / total);
                let radius = domain.oracle_distance(p)? / 8.0;
                balls.push(Disc::new(p, radius));
                s += 0.9 * radius;
                if balls.len() > BUDGET {
                    return Err(LocalSolveError::CoveringBudget);
                }
            }
            Ok(Covering {
                balls,
                end_balls: false,
            })
        }
        LocalRegion::Wedge { .. } => {
            let end_radius = 2f64.powi(-(3 * bits as i32) - 1);
            if total < 8.0 * end_radius {
                return Err(LocalSolveError::DegeneratePolygon(
                    "free boundary shorter than its end balls".into(),
                ));
            }
            let mut balls = Vec::new();
            balls.push(Disc::new(
                region.free_boundary_point(end_radius / total),
                end_radius,
            ));
            let hi = total - 1.9 * end_radius;
            let mut s = 1.5 * end_radius;
            while s < hi {
                let p = region.free_boundary_point(s / total);
                let radius = domain.oracle_distance(p)? / 8.0;
                balls.push(Disc::new(p, radius));
                s += 0.9 * radius;
                if balls.len() > BUDGET {
                    return Err(LocalSolveError::CoveringBudget);
                }
            }
            balls.push(Disc::new(
                region.free_boundary_point(1.0 - end_radius / total),
                end_radius,
            ));
            Ok(Covering {
                balls,
                end_balls: true,
            })
        }
    }
}

/// A region solution assembled from concrete boundary data, ready for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct AssembledLocal {
    region: LocalRegion,
    kind: AssembledKind,
}

#[derive(Debug, Clone)]
enum AssembledKind {
    /// Odd-extended data at `arc_quad` offset angles on the unit circle of the
    /// straightened wedge.
    Wedge { values: Vec<f64> },
    Ring(AnnulusHarmonic),
}

fn assemble_region(
    region: &LocalRegion,
    patches: &[HarmonicPatch],
    arc_quad: usize,
) -> Result<AssembledLocal, LocalSolveError> {
    let eval_data = |p: Point| -> Option<f64> {
        patches
            .iter()
            .find(|patch| patch.owner().contains(p))
            .map(|patch| patch.eval_inside(p))
    };
    match region {
        LocalRegion::Wedge { .. } => {
            let m = arc_quad;
            let mut values = vec![0.0; m];
            for k in 0..m / 2 {
                // Offset nodes avoid the diameter endpoints where the data
                // jumps across the odd reflection.
                let theta = TAU * (k as f64 + 0.5) / m as f64;
                let w = wedge_arc_preimage(region, theta);
                let value = eval_data(w).ok_or(LocalSolveError::UncoveredArcNode {
                    angle: theta,
                    point: w,
                })?;
                values[k] = value;
                values[m - 1 - k] = -value;
            }
            Ok(AssembledLocal {
                region: region.clone(),
                kind: AssembledKind::Wedge { values },
            })
        }
        LocalRegion::Ring {
            boundary,
            inner_radius,
        } => {
            let m = 128;
            let mut inner = vec![0.0; m];
            for (k, value) in inner.iter_mut().enumerate() {
                let p = boundary.center + Point::from_polar(*inner_radius, TAU * k as f64 / m as f64);
                *value = eval_data(p).ok_or(LocalSolveError::UncoveredArcNode {
                    angle: TAU * k as f64 / m as f64,
                    point: p,
                })?;
            }
            let outer = vec![0.0; m];
            let solved =
                AnnulusHarmonic::solve(boundary.center, *inner_radius, boundary.radius, &inner, &outer)?;
            Ok(AssembledLocal {
                region: region.clone(),
                kind: AssembledKind::Ring(solved),
            })
        }
    }
}

/// Arc point of the wedge whose straightened image is `e^{i theta}`,
/// `theta` in `(0, pi)`.
fn wedge_arc_preimage(region: &LocalRegion, theta: f64) -> Point {
    let LocalRegion::Wedge {
        vertex,
        radius,
        bisector,
        alpha,
    } = region
    else {
        unreachable!()
    };
    *vertex + Point::from_polar(*radius, bisector + alpha * (theta - PI / 2.0))
}

/// Straightening map of a wedge onto the upper unit half-disc.
fn wedge_straighten(region: &LocalRegion, w: Point) -> Point {
    let LocalRegion::Wedge {
        vertex,
        radius,
        bisector,
        alpha,
    } = region
    else {
        unreachable!()
    };
    let s = (w - *vertex).rotate(-bisector);
    let rho = s.norm();
    if rho == 0.0 {
        return Point::ZERO;
    }
    Point::from_polar((rho / radius).powf(1.0 / alpha), s.arg() / alpha + PI / 2.0)
}

/// Derivative of the straightening map as a complex number.
fn wedge_straighten_deriv(region: &LocalRegion, w: Point) -> Point {
    let LocalRegion::Wedge {
        vertex,
        radius,
        bisector,
        alpha,
    } = region
    else {
        unreachable!()
    };
    let s = (w - *vertex).rotate(-bisector);
    let rho = s.norm();
    let phi = s.arg();
    let magnitude = (1.0 / alpha) * rho.powf(1.0 / alpha - 1.0) / radius.powf(1.0 / alpha);
    Point::from_polar(magnitude, PI / 2.0 + (1.0 / alpha - 1.0) * phi - bisector)
}

impl AssembledLocal {
    pub fn region(&self) -> &LocalRegion {
        &self.region
    }

    pub fn contains(&self, z: Point) -> bool {
        self.region.contains(z)
    }

    /// Value at `z`; errors when `z` is outside the region.
    pub fn eval(&self, z: Point) -> Result<f64, LocalSolveError> {
        if !self.region.contains(z) {
            return Err(LocalSolveError::OutsideRegion { point: z });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Value without the containment check, for callers that guarantee it.
    pub fn eval_unchecked(&self, z: Point) -> f64 {
        match &self.kind {
            AssembledKind::Wedge { values } => {
                let zeta = wedge_straighten(&self.region, z);
                disc_poisson_offset(values, zeta)
            }
            AssembledKind::Ring(sol) => sol.eval(z),
        }
    }

    /// Analytic gradient of the local solution.
    pub fn grad(&self, z: Point) -> Point {
        match &self.kind {
            AssembledKind::Wedge { values } => {
                let zeta = wedge_straighten(&self.region, z);
                let g = disc_poisson_offset_grad(values, zeta);
                let deriv = wedge_straighten_deriv(&self.region, z);
                // u = U(zeta(z)) with zeta holomorphic: chain rule via the
                // Cauchy-Riemann equations.
                Point::new(
                    g.re * deriv.re + g.im * deriv.im,
                    -g.re * deriv.im + g.im * deriv.re,
                )
            }
            AssembledKind::Ring(sol) => sol.grad(z),
        }
    }
}

/// Poisson sum over the unit circle with data at offset angles
/// `2 pi (k + 1/2) / m`.
fn disc_poisson_offset(values: &[f64], zeta: Point) -> f64 {
    let m = values.len();
    let weight = TAU / m as f64;
    let num = 1.0 - zeta.norm_sq();
    let mut acc = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let theta = TAU * (k as f64 + 0.5) / m as f64;
        let w = Point::new(theta.cos(), theta.sin());
        acc += v * num / ((w - zeta).norm_sq() * TAU) * weight;
    }
    acc
}

fn disc_poisson_offset_grad(values: &[f64], zeta: Point) -> Point {
    let m = values.len();
    let weight = TAU / m as f64;
    let a = 1.0 - zeta.norm_sq();
    let mut acc = Point::ZERO;
    for (k, &v) in values.iter().enumerate() {
        let theta = TAU * (k as f64 + 0.5) / m as f64;
        let w = Point::new(theta.cos(), theta.sin());
        let b = (w - zeta).norm_sq();
        let num = zeta * (-2.0 * b) - (zeta - w) * (2.0 * a);
        acc = acc + num * (v * weight / (TAU * b * b));
    }
    acc
}

/// The puncture node: an annulus around the map base point with unit data on
/// the puncture circle. This is the one boundary component that is not an
/// admissible neighborhood in the polygon sense; it is solved exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusNode {
    pub center: Point,
    pub r_in: f64,
    pub r_out: f64,
}

impl AnnulusNode {
    /// Node for the puncture of `pdomain`: annulus from the puncture radius to
    /// half of `2^{-n}`.
    pub fn for_puncture(pdomain: &PuncturedDomain) -> Self {
        AnnulusNode {
            center: pdomain.center,
            r_in: pdomain.inner_radius,
            r_out: 0.5 * 2f64.powi(-(pdomain.bits as i32)),
        }
    }

    /// Standalone constructor with the distance precondition.
    pub fn new(domain: &DomainSpec, center: Point, bits: u32) -> Result<Self, LocalSolveError> {
        let pd = PuncturedDomain::new(domain.clone(), center, bits)?;
        Ok(AnnulusNode::for_puncture(&pd))
    }

    pub fn contains(&self, z: Point) -> bool {
        let rho = z.dist(self.center);
        rho > self.r_in && rho < self.r_out
    }

    /// Solves the annulus problem with unit data on the puncture circle and
    /// the given outer-circle samples.
    pub fn solve(&self, outer_samples: &[f64]) -> Result<AnnulusHarmonic, LocalSolveError> {
        let inner = vec![1.0; outer_samples.len()];
        Ok(AnnulusHarmonic::solve(
            self.center,
            self.r_in,
            self.r_out,
            &inner,
            outer_samples,
        )?)
    }

    /// Variant solve used for comparing the alternative boundary convention:
    /// arbitrary data on both circles.
    pub fn solve_with(
        &self,
        inner_samples: &[f64],
        outer_samples: &[f64],
    ) -> Result<AnnulusHarmonic, LocalSolveError> {
        Ok(AnnulusHarmonic::solve(
            self.center,
            self.r_in,
            self.r_out,
            inner_samples,
            outer_samples,
        )?)
    }
}
