//! The deterministic relaxation solver for the punctured-domain Dirichlet
//! problem.
//!
//! The field is piecewise harmonic with a fixed authority order: the annulus
//! node around the puncture answers first, then the interior layout nodes
//! (first match in construction order), then the boundary regions, and zero
//! elsewhere. A round recomputes every piece from a snapshot of the previous
//! round (Jacobi semantics): the annulus and the region solvers refresh their
//! boundary data from the snapshot, interior nodes away from the cores replace
//! their trace with snapshot values on their doubled circle (the Poisson
//! update, since the trace radius equals the step radius), and nodes touching
//! a tripled core pull their trace from the owning region's fresh local
//! solution instead.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::export::{csv_line, fmt_f64};
use crate::geometry::{Disc, DomainSpec, GeometryError, Point, PuncturedDomain};
use crate::harmonic::{AnnulusHarmonic, HarmonicError, HarmonicField, HarmonicPatch};
use crate::layout::{
    build_layout, Layout, LayoutError, BALL_TRACE_DEMAND, NODE_TRACE_DEMAND, RING_DATA_DEMAND,
};
use crate::localsolve::{
    AnnulusNode, AssembledLocal, LocalSolution, LocalSolveError, NeighborhoodConfig,
};

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    LocalSolve(#[from] LocalSolveError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("trace point of node {node} at angle {angle:.6} is not covered by the field")]
    UncoveredTrace { node: usize, angle: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Which circle of the puncture annulus is held at one. The inner reading is
/// the consistent one; the outer reading exists for comparison because the
/// two conventions appear interchangeably in informal descriptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PunctureData {
    InnerOne,
    OuterOne,
}

#[derive(Debug, Clone)]
pub struct RelaxConfig {
    /// Round budget; the default is `ceil(k2 * bits^3)` with `k2 = 20`.
    pub rounds: u32,
    /// Trace sample count per interior node; this is also the Poisson
    /// quadrature count since trace and integration circles coincide.
    pub quad_m: usize,
    /// Trace sample count per covering ball.
    pub ball_samples: usize,
    /// Sample count on the annulus and ring data circles.
    pub data_samples: usize,
    /// Stop early once the probe residual drops below this.
    pub stop_residual: Option<f64>,
    pub puncture_data: PunctureData,
}

impl RelaxConfig {
    pub fn for_bits(bits: u32) -> Self {
        let k2 = 20.0;
        RelaxConfig {
            rounds: (k2 * (bits as f64).powi(3)).ceil() as u32,
            quad_m: 128,
            ball_samples: BALL_TRACE_DEMAND,
            data_samples: RING_DATA_DEMAND,
            stop_residual: None,
            puncture_data: PunctureData::InnerOne,
        }
    }

    pub fn with_rounds(mut self, rounds: u32) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_stop_residual(mut self, residual: f64) -> Self {
        self.stop_residual = Some(residual);
        self
    }

    fn validate(&self) -> Result<(), RelaxError> {
        if self.rounds == 0 {
            return Err(RelaxError::BadConfig("rounds must be at least 1".into()));
        }
        if !self.quad_m.is_power_of_two()
            || self.quad_m < 32
            || NODE_TRACE_DEMAND % self.quad_m != 0
        {
            return Err(RelaxError::BadConfig(format!(
                "quad_m {} must be a power of two in [32, {NODE_TRACE_DEMAND}]",
                self.quad_m
            )));
        }
        if self.ball_samples != BALL_TRACE_DEMAND {
            return Err(RelaxError::BadConfig(format!(
                "ball_samples must be {BALL_TRACE_DEMAND} to match the layout coverage contract"
            )));
        }
        if !self.data_samples.is_power_of_two() || RING_DATA_DEMAND % self.data_samples != 0 {
            return Err(RelaxError::BadConfig(format!(
                "data_samples {} must be a power of two dividing {RING_DATA_DEMAND}",
                self.data_samples
            )));
        }
        Ok(())
    }
}

/// Static field geometry shared across rounds.
#[derive(Debug)]
struct FieldStatics {
    annulus: AnnulusNode,
    node_discs: Vec<Disc>,
    index: NodeIndex,
    /// Update rule per node: the owning region for core-adjacent nodes.
    node_rule: Vec<Option<usize>>,
}

/// Bucket index preserving node order within each bucket.
#[derive(Debug)]
struct NodeIndex {
    cell: f64,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    buckets: Vec<Vec<u32>>,
}

impl NodeIndex {
    fn build(discs: &[Disc]) -> Self {
        let (x0, y0, w, h) = (-0.9f64, -0.9f64, 1.8f64, 1.8f64);
        let cell = 0.02f64;
        let nx = (w / cell).ceil() as usize + 1;
        let ny = (h / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let clampi = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
        for (id, disc) in discs.iter().enumerate() {
            let i0 = clampi(((disc.center.re - disc.radius - x0) / cell).floor() as isize, nx);
            let i1 = clampi(((disc.center.re + disc.radius - x0) / cell).floor() as isize, nx);
            let j0 = clampi(((disc.center.im - disc.radius - y0) / cell).floor() as isize, ny);
            let j1 = clampi(((disc.center.im + disc.radius - y0) / cell).floor() as isize, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(id as u32);
                }
            }
        }
        NodeIndex {
            cell,
            nx,
            ny,
            x0,
            y0,
            buckets,
        }
    }

    /// Lowest node id whose disc contains `p`.
    fn first_match(&self, discs: &[Disc], p: Point) -> Option<usize> {
        let i = (((p.re - self.x0) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let j = (((p.im - self.y0) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        self.buckets[j as usize * self.nx + i as usize]
            .iter()
            .find(|&&id| discs[id as usize].contains(p))
            .map(|&id| id as usize)
    }
}

/// The piecewise-harmonic field: annulus node, interior node patches, and
/// boundary region solutions, evaluated first-match in that order.
#[derive(Debug, Clone)]
pub struct RelaxField {
    statics: Arc<FieldStatics>,
    annulus_values: AnnulusHarmonic,
    node_patches: Vec<HarmonicPatch>,
    regions: Vec<AssembledLocal>,
}

impl RelaxField {
    pub fn annulus(&self) -> &AnnulusNode {
        &self.statics.annulus
    }

    pub fn node_count(&self) -> usize {
        self.statics.node_discs.len()
    }

    pub fn node_patch(&self, idx: usize) -> &HarmonicPatch {
        &self.node_patches[idx]
    }

    fn in_annulus(&self, z: Point) -> bool {
        z.dist(self.statics.annulus.center) < self.statics.annulus.r_out
    }
}

impl HarmonicField for RelaxField {
    fn eval(&self, z: Point) -> f64 {
        if self.in_annulus(z) {
            return self.annulus_values.eval(z);
        }
        if let Some(id) = self.statics.index.first_match(&self.statics.node_discs, z) {
            return self.node_patches[id].eval_inside(z);
        }
        for assembled in &self.regions {
            if assembled.contains(z) {
                return assembled.eval_unchecked(z);
            }
        }
        0.0
    }

    fn covers(&self, z: Point) -> bool {
        self.in_annulus(z)
            || self
                .statics
                .index
                .first_match(&self.statics.node_discs, z)
                .is_some()
            || self.regions.iter().any(|a| a.contains(z))
    }

    fn grad(&self, z: Point) -> Point {
        if self.in_annulus(z) {
            return self.annulus_values.grad(z);
        }
        if let Some(id) = self.statics.index.first_match(&self.statics.node_discs, z) {
            return self.node_patches[id].grad(z);
        }
        for assembled in &self.regions {
            if assembled.contains(z) {
                return assembled.grad(z);
            }
        }
        Point::ZERO
    }
}

/// Solver state after some number of rounds.
#[derive(Debug, Clone)]
pub struct RelaxState {
    pub round: u32,
    pub field: RelaxField,
    pub layout: Layout,
    pub nbs: LocalSolution,
    pub pdomain: PuncturedDomain,
    pub bits: u32,
}

impl RelaxState {
    /// The starting field: the annulus node carries the radial profile (one on
    /// the puncture circle, zero on its outer circle); every other piece is
    /// identically zero.
    pub fn initialize(
        layout: Layout,
        nbs: LocalSolution,
        pdomain: PuncturedDomain,
        bits: u32,
        cfg: &RelaxConfig,
    ) -> Result<Self, RelaxError> {
        cfg.validate()?;
        let annulus = AnnulusNode::for_puncture(&pdomain);
        let node_discs: Vec<Disc> = layout.interior().map(|n| n.disc).collect();
        let index = NodeIndex::build(&node_discs);

        // Core adjacency: a node touching a tripled core is updated from that
        // core's region solution; the most-overlapped core wins.
        let node_rule: Vec<Option<usize>> = node_discs
            .iter()
            .map(|disc| {
                let mut best: Option<(f64, usize)> = None;
                for nb in &nbs.neighborhoods {
                    let overlap = disc.center.dist(nb.anchor) - 3.0 * nb.core_radius;
                    if overlap < disc.radius {
                        let better = match best {
                            None => true,
                            Some((b, _)) => overlap < b,
                        };
                        if better {
                            best = Some((overlap, nb.region_id));
                        }
                    }
                }
                best.map(|(_, region)| region)
            })
            .collect();

        let statics = Arc::new(FieldStatics {
            annulus: annulus.clone(),
            node_discs,
            index,
            node_rule,
        });
        let annulus_values =
            AnnulusHarmonic::radial_profile(annulus.center, annulus.r_in, annulus.r_out);
        let node_patches = statics
            .node_discs
            .iter()
            .map(|disc| HarmonicPatch::constant(*disc, 0.0, cfg.quad_m))
            .collect::<Result<Vec<_>, HarmonicError>>()?;
        let regions = (0..nbs.regions.len())
            .map(|id| nbs.assemble_zero(id))
            .collect::<Result<Vec<_>, LocalSolveError>>()?;

        Ok(RelaxState {
            round: 0,
            field: RelaxField {
                statics,
                annulus_values,
                node_patches,
                regions,
            },
            layout,
            nbs,
            pdomain,
            bits,
        })
    }
}

fn sample_circle<F: HarmonicField>(field: &F, center: Point, radius: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let w = center + Point::from_polar(radius, TAU * k as f64 / m as f64);
            field.eval(w).clamp(0.0, 1.0)
        })
        .collect()
}

/// One Jacobi round: every piece is recomputed from the round-`t` snapshot.
pub fn relax_round(state: &RelaxState, cfg: &RelaxConfig) -> Result<RelaxState, RelaxError> {
    relax_round_ordered(state, cfg, None)
}

/// Round with an explicit node-update order. The result is independent of the
/// order because updates only read the snapshot; this entry point exists to
/// demonstrate exactly that.
pub fn relax_round_ordered(
    state: &RelaxState,
    cfg: &RelaxConfig,
    order: Option<&[usize]>,
) -> Result<RelaxState, RelaxError> {
    cfg.validate()?;
    let snapshot = &state.field;
    let statics = Arc::clone(&snapshot.statics);
    let annulus = &statics.annulus;

    // Annulus node refresh.
    let outer = sample_circle(snapshot, annulus.center, annulus.r_out, cfg.data_samples);
    let annulus_values = match cfg.puncture_data {
        PunctureData::InnerOne => annulus.solve(&outer)?,
        PunctureData::OuterOne => {
            let inner = sample_circle(snapshot, annulus.center, annulus.r_in, cfg.data_samples);
            annulus.solve_with(&inner, &vec![1.0; cfg.data_samples])?
        }
    };

    // Region refresh: covering-ball traces sampled from the snapshot, then the
    // local solves.
    let regions = (0..state.nbs.regions.len())
        .map(|region_id| {
            let balls = &state.nbs.regions[region_id].covering.balls;
            let patches = balls
                .par_iter()
                .map(|ball| {
                    let samples = sample_circle(
                        snapshot,
                        ball.center,
                        2.0 * ball.radius,
                        cfg.ball_samples,
                    );
                    HarmonicPatch::new(*ball, samples)
                })
                .collect::<Result<Vec<_>, HarmonicError>>()?;
            state.nbs.assemble(region_id, &patches).map_err(RelaxError::from)
        })
        .collect::<Result<Vec<_>, RelaxError>>()?;

    // Node updates.
    let update_node = |id: usize| -> Result<HarmonicPatch, RelaxError> {
        let disc = statics.node_discs[id];
        let trace_radius = 2.0 * disc.radius;
        let m = cfg.quad_m;
        let mut samples = Vec::with_capacity(m);
        match statics.node_rule[id] {
            None => {
                for k in 0..m {
                    let angle = TAU * k as f64 / m as f64;
                    let w = disc.center + Point::from_polar(trace_radius, angle);
                    if !snapshot.covers(w) {
                        return Err(RelaxError::UncoveredTrace { node: id, angle });
                    }
                    samples.push(snapshot.eval(w).clamp(0.0, 1.0));
                }
            }
            Some(region_id) => {
                let local = &regions[region_id];
                for k in 0..m {
                    let angle = TAU * k as f64 / m as f64;
                    let w = disc.center + Point::from_polar(trace_radius, angle);
                    // Trace points of core-adjacent nodes stay inside the
                    // region by construction, except where the annulus band
                    // takes priority.
                    let value = if snapshot.in_annulus(w) {
                        annulus_values.eval(w)
                    } else {
                        local.eval_unchecked(w)
                    };
                    samples.push(value.clamp(0.0, 1.0));
                }
            }
        }
        Ok(HarmonicPatch::new(disc, samples)?)
    };

    let node_patches = match order {
        None => (0..statics.node_discs.len())
            .into_par_iter()
            .map(update_node)
            .collect::<Result<Vec<_>, RelaxError>>()?,
        Some(order) => {
            let mut slots: Vec<Option<HarmonicPatch>> = vec![None; statics.node_discs.len()];
            for &id in order {
                slots[id] = Some(update_node(id)?);
            }
            slots
                .into_iter()
                .map(|p| p.expect("order must cover every node"))
                .collect()
        }
    };

    Ok(RelaxState {
        round: state.round + 1,
        field: RelaxField {
            statics,
            annulus_values,
            node_patches,
            regions,
        },
        layout: state.layout.clone(),
        nbs: state.nbs.clone(),
        pdomain: state.pdomain.clone(),
        bits: state.bits,
    })
}

/// Deterministic probe points with the validity margins `d(z, boundary) >
/// 2^{-n}` and `|z - z0| > 2^{-n}`.
pub fn default_probes(domain: &DomainSpec, pdomain: &PuncturedDomain, count: usize) -> Vec<Point> {
    let margin = 2f64.powi(-(pdomain.bits as i32));
    let mut probes = Vec::with_capacity(count);
    let mut state = 0x853C_49E6_748F_EA9Bu64;
    let mut rand01 = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut guard = 0;
    while probes.len() < count && guard < 1_000_000 {
        guard += 1;
        let p = Point::new(1.7 * rand01() - 0.85, 1.7 * rand01() - 0.85);
        if domain.distance_to_boundary(p) > margin && p.dist(pdomain.center) > margin {
            probes.push(p);
        }
    }
    probes
}

fn build_state(
    domain: &DomainSpec,
    z0: Point,
    bits: u32,
    cfg: &RelaxConfig,
) -> Result<RelaxState, RelaxError> {
    cfg.validate()?;
    let report = domain.validate();
    if !report.is_structurally_ok() {
        return Err(RelaxError::LocalSolve(LocalSolveError::InvalidDomain(
            report.to_string(),
        )));
    }
    let nbs = LocalSolution::build(domain, bits, NeighborhoodConfig::default())?;
    let pdomain = PuncturedDomain::new(domain.clone(), z0, bits)?;
    let layout = build_layout(domain, &nbs, &pdomain, bits)?;
    RelaxState::initialize(layout, nbs, pdomain, bits, cfg)
}

/// Full solve: builds neighborhoods, layout, and the initial field, then runs
/// rounds until the budget or the configured stop residual is reached.
pub fn solve_dirichlet(
    domain: &DomainSpec,
    z0: Point,
    bits: u32,
    cfg: &RelaxConfig,
) -> Result<RelaxState, RelaxError> {
    let (state, _) = run_traced(domain, z0, bits, cfg, &[])?;
    Ok(state)
}

/// Like [`solve_dirichlet`] but records the field values at `probes` after
/// every round (row 0 is the initial field). When `probes` is empty and a stop
/// residual is set, the default probe set is used for the stop decision.
pub fn run_traced(
    domain: &DomainSpec,
    z0: Point,
    bits: u32,
    cfg: &RelaxConfig,
    probes: &[Point],
) -> Result<(RelaxState, Vec<Vec<f64>>), RelaxError> {
    let mut state = build_state(domain, z0, bits, cfg)?;
    let stop_probes: Vec<Point> = if probes.is_empty() && cfg.stop_residual.is_some() {
        default_probes(domain, &state.pdomain, 100)
    } else {
        probes.to_vec()
    };
    let eval_probes = |state: &RelaxState| -> Vec<f64> {
        stop_probes.iter().map(|&p| state.field.eval(p)).collect()
    };
    let mut trace = vec![eval_probes(&state)];
    for _ in 0..cfg.rounds {
        state = relax_round(&state, cfg)?;
        let values = eval_probes(&state);
        let stop = cfg.stop_residual.is_some_and(|threshold| {
            let prev = trace.last().expect("trace is seeded");
            let residual = values
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            residual < threshold
        });
        trace.push(values);
        if stop {
            break;
        }
    }
    // Keep only the requested probes in the trace rows.
    if probes.is_empty() {
        trace = Vec::new();
    }
    Ok((state, trace))
}

/// Per-round residual table.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<(u32, f64)>,
    pub rounds_run: u32,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,residual\n");
        for (round, residual) in &self.rows {
            out.push_str(&csv_line(&[round.to_string(), fmt_f64(*residual)]));
        }
        out
    }

    /// First round whose residual is below `threshold`.
    pub fn rounds_to_reach(&self, threshold: f64) -> Option<u32> {
        self.rows
            .iter()
            .find(|(_, r)| *r < threshold)
            .map(|(round, _)| *round)
    }
}

/// Runs the solver and reports the per-round maximum probe movement.
pub fn convergence_report(
    domain: &DomainSpec,
    z0: Point,
    bits: u32,
    cfg: &RelaxConfig,
) -> Result<(RelaxState, ConvergenceReport), RelaxError> {
    let probes = {
        let pdomain = PuncturedDomain::new(domain.clone(), z0, bits)?;
        default_probes(domain, &pdomain, 100)
    };
    let (state, trace) = run_traced(domain, z0, bits, cfg, &probes)?;
    let rows = trace
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let residual = pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (i as u32 + 1, residual)
        })
        .collect();
    let rounds_run = state.round;
    Ok((state, ConvergenceReport { rows, rounds_run }))
}

/// CSV grid export `re,im,value` over a regular grid clipped to the valid
/// probe region.
pub fn grid_csv(state: &RelaxState, step: f64) -> String {
    let margin = 2f64.powi(-(state.bits as i32));
    let mut out = String::from("re,im,value\n");
    let n = (1.7 / step).ceil() as i64;
    for j in 0..=n {
        for i in 0..=n {
            let p = Point::new(-0.85 + i as f64 * step, -0.85 + j as f64 * step);
            if state.pdomain.base.distance_to_boundary(p) > margin
                && p.dist(state.pdomain.center) > margin
            {
                out.push_str(&csv_line(&[
                    fmt_f64(p.re),
                    fmt_f64(p.im),
                    fmt_f64(state.field.eval(p)),
                ]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::annulus_solution;

    fn disc_state(bits: u32, cfg: &RelaxConfig) -> RelaxState {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        build_state(&g, Point::ZERO, bits, cfg).unwrap()
    }

    #[test]
    fn initial_field_matches_annulus_profile() {
        let cfg = RelaxConfig::for_bits(4);
        let state = disc_state(4, &cfg);
        let annulus = state.field.annulus().clone();
        let rho = (annulus.r_in * annulus.r_out).sqrt();
        let v = state.field.eval(Point::from_polar(rho, 0.4));
        assert!((v - 0.5).abs() < 1e-10, "geometric-mean value {v}");
        // Far from the puncture the initial field vanishes.
        assert_eq!(state.field.eval(Point::new(0.4, 0.1)), 0.0);
        // Everywhere in [0, 1].
        for &rho in &[1.2 * annulus.r_in, 0.5 * annulus.r_out, 0.1, 0.3, 0.55] {
            let v = state.field.eval(Point::from_polar(rho, 1.0));
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn first_round_spreads_positivity_locally() {
        let cfg = RelaxConfig::for_bits(3);
        let state = disc_state(3, &cfg);
        let next = relax_round(&state, &cfg).unwrap();
        let r_out = state.field.annulus().r_out;
        let discs: Vec<Disc> = state.layout.interior().map(|n| n.disc).collect();
        let mut positive = 0;
        for (id, disc) in discs.iter().enumerate() {
            let overlaps = disc.center.dist(Point::ZERO) < r_out + 2.0 * disc.radius;
            let trace_max = next
                .field
                .node_patch(id)
                .samples()
                .iter()
                .cloned()
                .fold(0.0f64, f64::max);
            if overlaps && trace_max > 0.0 {
                positive += 1;
            }
            if !overlaps && disc.center.norm() > 3.0 * r_out {
                assert_eq!(trace_max, 0.0, "distant node {id} picked up mass");
            }
        }
        assert!(positive > 0, "no node near the annulus became positive");
    }

    #[test]
    fn deep_constant_node_stays_constant() {
        // A node whose trace circle reads only node patches keeps a constant
        // field constant (kernel normalization).
        let cfg = RelaxConfig::for_bits(3);
        let state = disc_state(3, &cfg);
        let c = 0.37;
        let mut doctored = state.clone();
        doctored.field.node_patches = doctored
            .field
            .statics
            .node_discs
            .iter()
            .map(|disc| HarmonicPatch::constant(*disc, c, cfg.quad_m).unwrap())
            .collect();
        let next = relax_round(&doctored, &cfg).unwrap();
        // Pick a node well inside: trace circle far from annulus and regions.
        let target = doctored
            .field
            .statics
            .node_discs
            .iter()
            .position(|d| {
                let rho = d.center.norm();
                rho > 0.15 && rho + 2.0 * d.radius < 0.3
            })
            .expect("a deep node exists");
        for &s in next.field.node_patch(target).samples() {
            assert!((s - c).abs() < 1e-9, "constant drifted to {s}");
        }
    }

    #[test]
    fn rounds_are_monotone_at_probes() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let cfg = RelaxConfig::for_bits(3).with_rounds(30);
        let pdomain = PuncturedDomain::new(g.clone(), Point::ZERO, 3).unwrap();
        let probes = default_probes(&g, &pdomain, 50);
        let (_, trace) = run_traced(&g, Point::ZERO, 3, &cfg, &probes).unwrap();
        assert_eq!(trace.len(), 31);
        for rounds in trace.windows(2) {
            for (a, b) in rounds[0].iter().zip(&rounds[1]) {
                assert!(b >= &(a - 1e-9), "monotonicity violated: {a} -> {b}");
            }
        }
    }

    #[test]
    fn update_order_does_not_change_results() {
        let cfg = RelaxConfig::for_bits(3);
        let state = disc_state(3, &cfg);
        let state = relax_round(&state, &cfg).unwrap();
        let forward = relax_round(&state, &cfg).unwrap();
        let order: Vec<usize> = (0..state.field.node_count()).rev().collect();
        let reversed = relax_round_ordered(&state, &cfg, Some(&order)).unwrap();
        for id in 0..state.field.node_count() {
            assert_eq!(
                forward.field.node_patch(id).samples(),
                reversed.field.node_patch(id).samples(),
                "node {id} differs under permuted update order"
            );
        }
    }

    #[test]
    fn missing_coverage_is_reported() {
        use crate::layout::NodeKind;
        let cfg = RelaxConfig::for_bits(3);
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let nbs = LocalSolution::build(&g, 3, NeighborhoodConfig::default()).unwrap();
        let pdomain = PuncturedDomain::new(g.clone(), Point::ZERO, 3).unwrap();
        let mut layout = build_layout(&g, &nbs, &pdomain, 3).unwrap();
        let probe = Point::new(0.3, 0.0);
        layout
            .nodes
            .retain(|n| n.kind != NodeKind::Interior || n.disc.center.dist(probe) > 0.15);
        let state = RelaxState::initialize(layout, nbs, pdomain, 3, &cfg).unwrap();
        let err = relax_round(&state, &cfg);
        assert!(
            matches!(err, Err(RelaxError::UncoveredTrace { .. })),
            "expected coverage error, got {err:?}"
        );
    }

    #[test]
    fn disc_solution_approaches_closed_form() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let cfg = RelaxConfig::for_bits(3)
            .with_rounds(400)
            .with_stop_residual(2f64.powi(-6));
        let state = solve_dirichlet(&g, Point::ZERO, 3, &cfg).unwrap();
        let eps = state.pdomain.inner_radius;
        for &rho in &[0.05, 0.15, 0.3, 0.45] {
            let z = Point::from_polar(rho, 0.9);
            let exact = annulus_solution(Point::ZERO, eps, 0.6, z).unwrap();
            let got = state.field.eval(z);
            assert!(
                (got - exact).abs() < 2f64.powi(-3),
                "rho {rho}: {got} vs {exact}"
            );
            // Upper bound: the relaxation approaches from below.
            assert!(got <= exact + 2f64.powi(-6), "rho {rho}: {got} > {exact}");
        }
    }

    #[test]
    fn puncture_variant_diverges_from_closed_form() {
        // The alternative data convention (one on the outer circle) drives the
        // annulus toward the constant and overshoots the true solution.
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let mut cfg = RelaxConfig::for_bits(3).with_rounds(20);
        cfg.puncture_data = PunctureData::OuterOne;
        let state = solve_dirichlet(&g, Point::ZERO, 3, &cfg).unwrap();
        let eps = state.pdomain.inner_radius;
        let z = Point::new(0.01, 0.0);
        let exact = annulus_solution(Point::ZERO, eps, 0.6, z).unwrap();
        let got = state.field.eval(z);
        assert!(
            got > exact + 0.05,
            "outer-one variant should overshoot: {got} vs {exact}"
        );
    }

    #[test]
    fn convergence_report_is_monotone_after_ramp() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let cfg = RelaxConfig::for_bits(3).with_rounds(60);
        let (_, report) = convergence_report(&g, Point::ZERO, 3, &cfg).unwrap();
        assert_eq!(report.rows.len(), 60);
        let csv = report.to_csv();
        assert!(csv.starts_with("round,residual\n"));
        // Residuals decay overall: the tail is below a tenth of the peak.
        let peak = report.rows.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let tail = report.rows.last().unwrap().1;
        assert!(tail < peak * 0.1, "peak {peak}, tail {tail}");
    }

    #[test]
    fn grid_export_has_fixed_format() {
        let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
        let cfg = RelaxConfig::for_bits(2).with_rounds(2);
        let state = solve_dirichlet(&g, Point::ZERO, 2, &cfg).unwrap();
        let csv = grid_csv(&state, 0.2);
        assert!(csv.starts_with("re,im,value\n"));
        assert!(csv.lines().count() > 3);
        assert_eq!(csv, grid_csv(&state, 0.2));
    }
}
