//! Adaptive disc layouts: interior nodes of radius `F(z)/4` covering the
//! domain away from the boundary cores and the puncture.
//!
//! Construction is greedy: starting from the covered set (tripled cores plus
//! the puncture working disc), repeatedly pick the uncovered grid candidate
//! closest to the covered set, add the node disc there, and enlarge the
//! covered set by the doubled node. Two completion passes follow: one that
//! plugs single-radius coverage gaps the doubled-disc greedy leaves behind,
//! and a demand pass that covers every circle the relaxation will actually
//! sample (node trace circles, covering-ball traces, the annulus and ring data
//! circles, and a polar mesh around the puncture used by map evaluation).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::export::SvgBuilder;
use crate::geometry::{Disc, DomainSpec, GeometryError, Point, PuncturedDomain, Shape};
use crate::localsolve::{AnnulusNode, LocalSolution};

/// Circle sample counts that the demand pass guarantees coverage for. The
/// relaxation must sample traces at counts dividing these.
pub const NODE_TRACE_DEMAND: usize = 256;
pub const BALL_TRACE_DEMAND: usize = 32;
pub const RING_DATA_DEMAND: usize = 128;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout construction exceeded the node budget of {0}; the boundary neighborhoods are probably mis-scaled")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Interior,
    BoundaryCore,
    PunctureAnnulus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutNode {
    pub disc: Disc,
    pub kind: NodeKind,
}

/// The constructed layout. Interior nodes carry the piecewise-harmonic field;
/// cores and the annulus node are recorded for verification and export.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub nodes: Vec<LayoutNode>,
    pub bits: u32,
    /// Number of interior nodes produced by the pure greedy phase; these
    /// satisfy the frontier-ordering property.
    pub greedy_len: usize,
}

impl Layout {
    pub fn interior(&self) -> impl Iterator<Item = &LayoutNode> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Interior)
    }

    /// Count of interior nodes.
    pub fn size(&self) -> usize {
        self.interior().count()
    }

    pub fn to_svg(&self, domain: &DomainSpec) -> String {
        let mut svg = SvgBuilder::new((-0.9, -0.9, 1.8, 1.8));
        match &domain.shape {
            Shape::Polygon(vs) => svg.polygon(vs, "black"),
            Shape::Disc(d) => svg.circle(d.center, d.radius, "black", "none"),
        }
        for node in &self.nodes {
            let color = match node.kind {
                NodeKind::Interior => "blue",
                NodeKind::BoundaryCore => "red",
                NodeKind::PunctureAnnulus => "green",
            };
            svg.circle(node.disc.center, node.disc.radius, color, "none");
        }
        svg.finish()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct NodeJson {
            center: [f64; 2],
            radius: f64,
            kind: NodeKind,
        }
        let nodes: Vec<NodeJson> = self
            .nodes
            .iter()
            .map(|n| NodeJson {
                center: [n.disc.center.re, n.disc.center.im],
                radius: n.disc.radius,
                kind: n.kind,
            })
            .collect();
        serde_json::to_string_pretty(&nodes).expect("layout serialization")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutViolation {
    NodeSafety { index: usize, excess: f64 },
    HoleSafety { index: usize },
    RadiusRule { index: usize, expected: f64, got: f64 },
    Coverage { point: Point, gap: f64 },
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutViolation::NodeSafety { index, excess } => {
                write!(f, "node {index}: doubled disc leaves the domain by {excess:.3e}")
            }
            LayoutViolation::HoleSafety { index } => {
                write!(f, "node {index}: doubled disc overlaps the puncture")
            }
            LayoutViolation::RadiusRule { index, expected, got } => {
                write!(f, "node {index}: radius {got:.6e}, oracle rule gives {expected:.6e}")
            }
            LayoutViolation::Coverage { point, gap } => {
                write!(f, "uncovered point {point} with gap {gap:.3e}")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LayoutReport {
    pub violations: Vec<LayoutViolation>,
}

impl LayoutReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for LayoutReport {
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

const BBOX: (f64, f64, f64, f64) = (-0.85, -0.85, 1.7, 1.7);
const NODE_BUDGET: usize = 1_000_000;

/// Uniform bucket index over discs for point-coverage queries.
struct DiscIndex {
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    discs: Vec<Disc>,
}

impl DiscIndex {
    fn new(cell: f64) -> Self {
        let nx = (BBOX.2 / cell).ceil() as usize + 1;
        let ny = (BBOX.3 / cell).ceil() as usize + 1;
        DiscIndex {
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
            discs: Vec::new(),
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = (((x - BBOX.0) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let j = (((y - BBOX.1) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        (i as usize, j as usize)
    }

    fn insert(&mut self, disc: Disc) {
        let id = self.discs.len() as u32;
        self.discs.push(disc);
        let (i0, j0) = self.cell_of(disc.center.re - disc.radius, disc.center.im - disc.radius);
        let (i1, j1) = self.cell_of(disc.center.re + disc.radius, disc.center.im + disc.radius);
        for j in j0..=j1 {
            for i in i0..=i1 {
                self.buckets[j * self.nx + i].push(id);
            }
        }
    }

    fn covers(&self, p: Point) -> bool {
        let (i, j) = self.cell_of(p.re, p.im);
        self.buckets[j * self.nx + i]
            .iter()
            .any(|&id| self.discs[id as usize].contains(p))
    }
}

/// Everything the relaxation treats as authoritative besides interior nodes:
/// the annulus working disc and the boundary regions.
struct FixedCover<'a> {
    nbs: &'a LocalSolution,
    annulus: AnnulusNode,
}

impl FixedCover<'_> {
    /// True when the point needs no interior-node coverage.
    fn covers(&self, p: Point) -> bool {
        if p.dist(self.annulus.center) < self.annulus.r_out {
            return true;
        }
        self.nbs
            .regions
            .iter()
            .any(|solver| solver.region.contains(p))
    }
}

/// Builds the layout for the punctured domain. The local solution provides the
/// cores whose tripled discs seed the covered set.
pub fn build_layout(
    domain: &DomainSpec,
    nbs: &LocalSolution,
    pdomain: &PuncturedDomain,
    bits: u32,
) -> Result<Layout, LayoutError> {
    let resolution = 2f64.powi(-(bits as i32) - 2);
    let annulus = AnnulusNode::for_puncture(pdomain);
    let fixed = FixedCover {
        nbs,
        annulus: annulus.clone(),
    };

    // Covered set for the greedy frontier: tripled cores, the puncture
    // working disc, then the doubled discs of placed nodes.
    let mut covered: Vec<Disc> = nbs
        .neighborhoods
        .iter()
        .map(|nb| Disc::new(nb.anchor, 3.0 * nb.core_radius))
        .collect();
    covered.push(Disc::new(pdomain.center, annulus.r_out));

    let in_duty_zone = |p: Point| -> bool {
        domain.contains(p)
            && p.dist(pdomain.center) >= annulus.r_out
            && !covered[..nbs.neighborhoods.len() + 1]
                .iter()
                .take(nbs.neighborhoods.len())
                .any(|c| c.contains(p))
    };

    // Grid candidates at the build resolution.
    let nx = (BBOX.2 / resolution).ceil() as usize;
    let ny = (BBOX.3 / resolution).ceil() as usize;
    let mut candidates: Vec<Point> = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point::new(
                BBOX.0 + i as f64 * resolution,
                BBOX.1 + j as f64 * resolution,
            );
            if in_duty_zone(p) {
                candidates.push(p);
            }
        }
    }
    let mut dist_to_covered: Vec<f64> = candidates
        .iter()
        .map(|&p| {
            covered
                .iter()
                .map(|c| p.dist(c.center) - c.radius)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut alive: Vec<bool> = dist_to_covered.iter().map(|&d| d > 0.0).collect();

    let mut nodes: Vec<LayoutNode> = Vec::new();
    let mut node_index = DiscIndex::new(0.02);
    let place_node = |center: Point,
                          nodes: &mut Vec<LayoutNode>,
                          node_index: &mut DiscIndex|
     -> Result<Disc, LayoutError> {
        let radius = pdomain.oracle_distance(center)? * 0.25;
        let disc = Disc::new(center, radius);
        nodes.push(LayoutNode {
            disc,
            kind: NodeKind::Interior,
        });
        node_index.insert(disc);
        if nodes.len() > NODE_BUDGET {
            return Err(LayoutError::BudgetExceeded(NODE_BUDGET));
        }
        Ok(disc)
    };

    // Greedy phase: always extend at the live candidate nearest to the
    // covered set; ties break lexicographically for determinism.
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (idx, &d) in dist_to_covered.iter().enumerate() {
            if !alive[idx] {
                continue;
            }
            if d <= 0.0 {
                alive[idx] = false;
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bidx)) => {
                    d < bd
                        || (d == bd
                            && (candidates[idx].re, candidates[idx].im)
                                < (candidates[bidx].re, candidates[bidx].im))
                }
            };
            if better {
                best = Some((d, idx));
            }
        }
        let Some((_, idx)) = best else {
            break;
        };
        alive[idx] = false;
        let disc = place_node(candidates[idx], &mut nodes, &mut node_index)?;
        let dilate = disc.scaled(2.0);
        covered.push(dilate);
        for (cidx, p) in candidates.iter().enumerate() {
            if alive[cidx] {
                let d = p.dist(dilate.center) - dilate.radius;
                if d < dist_to_covered[cidx] {
                    dist_to_covered[cidx] = d;
                    if d <= 0.0 {
                        alive[cidx] = false;
                    }
                }
            }
        }
    }
    let greedy_len = nodes.len();

    // Completion phase: the doubled-disc frontier leaves single-radius gaps;
    // plug every grid point not covered by a node disc proper.
    for k in 0..candidates.len() {
        let p = candidates[k];
        if !node_index.covers(p) {
            place_node(p, &mut nodes, &mut node_index)?;
        }
    }

    // Demand phase: cover every point the relaxation and the map evaluation
    // will read. New nodes add new trace circles, so iterate to a fixpoint.
    let mut demand_cursor = 0usize;
    loop {
        let mut demands: Vec<Point> = Vec::new();
        let need = |p: Point, demands: &mut Vec<Point>| {
            if domain.contains(p)
                && p.dist(pdomain.center) > pdomain.inner_radius
                && !fixed.covers(p)
                && !node_index.covers(p)
            {
                demands.push(p);
            }
        };
        if demand_cursor == 0 {
            // Static demands: annulus outer circle, ring data circles,
            // covering-ball traces, and the polar mesh around the puncture.
            for k in 0..RING_DATA_DEMAND {
                let angle = std::f64::consts::TAU * k as f64 / RING_DATA_DEMAND as f64;
                need(
                    pdomain.center + Point::from_polar(annulus.r_out, angle),
                    &mut demands,
                );
            }
            for solver in &nbs.regions {
                if let crate::localsolve::LocalRegion::Ring { boundary, inner_radius } =
                    solver.region
                {
                    for k in 0..RING_DATA_DEMAND {
                        let angle = std::f64::consts::TAU * k as f64 / RING_DATA_DEMAND as f64;
                        need(
                            boundary.center + Point::from_polar(inner_radius, angle),
                            &mut demands,
                        );
                    }
                }
                for ball in &solver.covering.balls {
                    for k in 0..BALL_TRACE_DEMAND {
                        let angle = std::f64::consts::TAU * k as f64 / BALL_TRACE_DEMAND as f64;
                        need(
                            ball.center + Point::from_polar(2.0 * ball.radius, angle),
                            &mut demands,
                        );
                    }
                }
            }
            for ring in 0..10 {
                let rho = annulus.r_out * (1.05 + 0.35 * ring as f64);
                for k in 0..64 {
                    let angle = std::f64::consts::TAU * k as f64 / 64.0;
                    need(pdomain.center + Point::from_polar(rho, angle), &mut demands);
                }
            }
        }
        // Trace circles of nodes added since the previous pass.
        for node in &nodes[demand_cursor..] {
            for k in 0..NODE_TRACE_DEMAND {
                let angle = std::f64::consts::TAU * k as f64 / NODE_TRACE_DEMAND as f64;
                need(
                    node.disc.center + Point::from_polar(2.0 * node.disc.radius, angle),
                    &mut demands,
                );
            }
        }
        demand_cursor = nodes.len();
        if demands.is_empty() {
            break;
        }
        for p in demands {
            if !node_index.covers(p) {
                place_node(p, &mut nodes, &mut node_index)?;
            }
        }
        if demand_cursor == nodes.len() {
            break;
        }
    }

    // Record cores and the annulus node for verification and export.
    for nb in &nbs.neighborhoods {
        nodes.push(LayoutNode {
            disc: nb.core(),
            kind: NodeKind::BoundaryCore,
        });
    }
    nodes.push(LayoutNode {
        disc: Disc::new(pdomain.center, annulus.r_out),
        kind: NodeKind::PunctureAnnulus,
    });

    Ok(Layout {
        nodes,
        bits,
        greedy_len,
    })
}

/// Re-checks the layout contract: node safety, the radius rule, and sampled
/// coverage of the zone away from cores and puncture. Gaps below the build
/// resolution are not violations.
pub fn verify_layout(
    layout: &Layout,
    domain: &DomainSpec,
    nbs: &LocalSolution,
    pdomain: &PuncturedDomain,
) -> LayoutReport {
    let mut violations = Vec::new();
    let resolution = 2f64.powi(-(layout.bits as i32) - 2);
    let interior: Vec<Disc> = layout.interior().map(|n| n.disc).collect();

    for (index, disc) in interior.iter().enumerate() {
        let d = domain.distance_to_boundary(disc.center);
        if 2.0 * disc.radius > d {
            violations.push(LayoutViolation::NodeSafety {
                index,
                excess: 2.0 * disc.radius - d,
            });
        }
        if disc.center.dist(pdomain.center) - pdomain.inner_radius < 2.0 * disc.radius {
            violations.push(LayoutViolation::HoleSafety { index });
        }
        match pdomain.oracle_distance(disc.center) {
            Ok(f) => {
                let expected = f * 0.25;
                if (disc.radius - expected).abs() > 1e-13 * expected.max(1e-300) {
                    violations.push(LayoutViolation::RadiusRule {
                        index,
                        expected,
                        got: disc.radius,
                    });
                }
            }
            Err(_) => violations.push(LayoutViolation::HoleSafety { index }),
        }
    }

    // Sampled coverage of the duty zone.
    let annulus = AnnulusNode::for_puncture(pdomain);
    let mut index = DiscIndex::new(0.02);
    for disc in &interior {
        index.insert(*disc);
    }
    let cores: Vec<Disc> = nbs
        .neighborhoods
        .iter()
        .map(|nb| Disc::new(nb.anchor, 3.0 * nb.core_radius))
        .collect();
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut rand01 = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut reported = 0;
    for _ in 0..100_000 {
        let p = Point::new(
            BBOX.0 + BBOX.2 * rand01(),
            BBOX.1 + BBOX.3 * rand01(),
        );
        if !domain.contains(p)
            || p.dist(pdomain.center) < annulus.r_out
            || cores.iter().any(|c| c.contains(p))
        {
            continue;
        }
        if !index.covers(p) {
            let gap = interior
                .iter()
                .map(|d| p.dist(d.center) - d.radius)
                .fold(f64::INFINITY, f64::min);
            if gap > resolution && reported < 8 {
                violations.push(LayoutViolation::Coverage { point: p, gap });
                reported += 1;
            }
        }
    }

    LayoutReport { violations }
}
