//! Truncated walk-on-spheres Monte Carlo estimator for Dirichlet problems.
//!
//! A walk jumps from `x` to a uniform point on the circle of radius
//! `R(x) = F(x)/2`, absorbs at the nearest boundary point once the exact
//! distance drops below the absorption threshold, and is truncated (with value
//! zero) after a step budget cubic in the precision bits. Randomness is a
//! counter-based stream keyed by `(seed, sample, step)`, so parallel execution
//! is reproducible without coordination and the estimator is bit-deterministic
//! for a fixed seed.

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::export::{csv_line, fmt_f64};
use crate::geometry::{DomainSpec, GeometryError, Point, PuncturedDomain};
use crate::harmonic::BoundaryData;

#[derive(Debug, Error)]
pub enum WosError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("estimator needs at least one sample")]
    NoSamples,
}

/// Deterministic counter-based random stream.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Uniform value in `[0, 1)` for the given (sample, step) counter pair.
    pub fn uniform(&self, sample: u64, step: u64) -> f64 {
        let mut x = self.seed ^ sample.wrapping_mul(0xA076_1D64_78BD_642F);
        x = mix(x);
        x ^= step.wrapping_mul(0xE703_7ED1_A0B4_28DB);
        x = mix(x);
        (x >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Walk parameters for precision `bits`.
#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub bits: u32,
    /// Absorb when the exact boundary distance drops below this
    /// (default `2^{-3 bits}`).
    pub absorption_threshold: f64,
    /// Truncation budget (default `ceil(k2 * bits^3)`).
    pub max_steps: u32,
    pub seed: u64,
    pub samples: usize,
}

impl WalkConfig {
    pub fn for_bits(bits: u32) -> Self {
        let k2 = 20.0;
        WalkConfig {
            bits,
            absorption_threshold: 2f64.powi(-3 * bits as i32),
            max_steps: (k2 * (bits as f64).powi(3)).ceil() as u32,
            seed: 0,
            samples: 10_000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.absorption_threshold = threshold;
        self
    }
}

/// Result of one truncated walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOutcome {
    pub terminal: Point,
    /// True when the walk stopped by the threshold rule within the budget; the
    /// terminal point then lies on the boundary.
    pub absorbed: bool,
    pub steps_taken: u32,
}

/// Monte Carlo estimate with its sampling error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub absorbed_fraction: f64,
}

impl Estimate {
    /// CSV row `z_re,z_im,mean,std_error,absorbed_fraction`.
    pub fn csv_row(&self, z: Point) -> String {
        csv_line(&[
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(self.mean),
            fmt_f64(self.std_error),
            fmt_f64(self.absorbed_fraction),
        ])
    }

    pub fn csv_header() -> &'static str {
        "z_re,z_im,mean,std_error,absorbed_fraction\n"
    }
}

/// The geometric queries a walk needs; shared between plain and punctured
/// domains.
trait WalkSpace: Sync {
    fn exact_distance(&self, z: Point) -> f64;
    fn step_radius(&self, z: Point) -> Result<f64, GeometryError>;
    fn nearest_boundary(&self, z: Point) -> Point;
    fn inside(&self, z: Point) -> bool;
}

impl WalkSpace for DomainSpec {
    fn exact_distance(&self, z: Point) -> f64 {
        self.distance_to_boundary(z)
    }
    fn step_radius(&self, z: Point) -> Result<f64, GeometryError> {
        self.step_radius(z)
    }
    fn nearest_boundary(&self, z: Point) -> Point {
        self.nearest_boundary_point(z)
    }
    fn inside(&self, z: Point) -> bool {
        self.contains(z)
    }
}

impl WalkSpace for PuncturedDomain {
    fn exact_distance(&self, z: Point) -> f64 {
        self.distance(z)
    }
    fn step_radius(&self, z: Point) -> Result<f64, GeometryError> {
        Ok(self.oracle_distance(z)? * 0.5)
    }
    fn nearest_boundary(&self, z: Point) -> Point {
        self.nearest_boundary_point(z)
    }
    fn inside(&self, z: Point) -> bool {
        self.contains(z)
    }
}

/// One jump of the walk: uniform direction on the step circle. The step
/// radius is below `2d/3`, so the image stays interior.
pub fn walk_step(domain: &DomainSpec, x: Point, theta: f64) -> Result<Point, GeometryError> {
    let radius = domain.step_radius(x)?;
    Ok(x + Point::from_polar(radius, TAU * theta))
}

fn run_walk_in<W: WalkSpace>(
    space: &W,
    z: Point,
    cfg: &WalkConfig,
    rng: &CounterRng,
    sample: u64,
) -> Result<WalkOutcome, GeometryError> {
    if !space.inside(z) && space.exact_distance(z) >= cfg.absorption_threshold {
        return Err(GeometryError::OutsideDomain(z));
    }
    let mut x = z;
    let mut moves = 0u32;
    loop {
        if space.exact_distance(x) < cfg.absorption_threshold {
            return Ok(WalkOutcome {
                terminal: space.nearest_boundary(x),
                absorbed: true,
                steps_taken: moves + 1,
            });
        }
        if moves >= cfg.max_steps {
            return Ok(WalkOutcome {
                terminal: x,
                absorbed: false,
                steps_taken: moves,
            });
        }
        let theta = rng.uniform(sample, moves as u64);
        let radius = space.step_radius(x)?;
        x = x + Point::from_polar(radius, TAU * theta);
        moves += 1;
    }
}

/// Runs one walk from `z`; the `stream` provides the step angles for the
/// given sample index.
pub fn run_walk(
    domain: &DomainSpec,
    z: Point,
    cfg: &WalkConfig,
    stream: &CounterRng,
    sample: u64,
) -> Result<WalkOutcome, GeometryError> {
    run_walk_in(domain, z, cfg, stream, sample)
}

fn reduce_estimate(values: Vec<(f64, bool)>) -> Estimate {
    let n = values.len();
    let scores: Vec<f64> = values.iter().map(|(v, _)| *v).collect();
    let absorbed = values.iter().filter(|(_, a)| *a).count();
    let mean = pairwise_sum(&scores) / n as f64;
    let sq: Vec<f64> = scores.iter().map(|v| (v - mean) * (v - mean)).collect();
    let std_error = if n > 1 {
        (pairwise_sum(&sq) / ((n - 1) as f64 * n as f64)).sqrt()
    } else {
        0.0
    };
    Estimate {
        mean,
        std_error,
        samples: n,
        absorbed_fraction: absorbed as f64 / n as f64,
    }
}

/// Fixed-order pairwise summation; independent of evaluation scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Monte Carlo solution of the Dirichlet problem at `z`: mean of the boundary
/// data at the walk terminals, zero for truncated walks.
pub fn estimate(
    domain: &DomainSpec,
    z: Point,
    phi: &BoundaryData,
    cfg: &WalkConfig,
) -> Result<Estimate, WosError> {
    if cfg.samples == 0 {
        return Err(WosError::NoSamples);
    }
    let rng = CounterRng::new(cfg.seed);
    let values = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let outcome = run_walk_in(domain, z, cfg, &rng, i as u64)?;
            let score = if outcome.absorbed {
                phi.eval(domain, outcome.terminal)
            } else {
                0.0
            };
            Ok((score, outcome.absorbed))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    Ok(reduce_estimate(values))
}

/// Estimate for the punctured-domain problem: data 1 on the puncture circle,
/// 0 on the outer boundary.
pub fn estimate_punctured(
    pdomain: &PuncturedDomain,
    z: Point,
    cfg: &WalkConfig,
) -> Result<Estimate, WosError> {
    if cfg.samples == 0 {
        return Err(WosError::NoSamples);
    }
    let rng = CounterRng::new(cfg.seed);
    let values = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let outcome = run_walk_in(pdomain, z, cfg, &rng, i as u64)?;
            let score = if outcome.absorbed
                && outcome.terminal.dist(pdomain.center) < 2.0 * pdomain.inner_radius
            {
                1.0
            } else {
                0.0
            };
            Ok((score, outcome.absorbed))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    Ok(reduce_estimate(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::annulus_solution;

    fn disc06() -> DomainSpec {
        DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap()
    }

    #[test]
    fn step_arithmetic() {
        let g = disc06();
        let p = walk_step(&g, Point::ZERO, 0.0).unwrap();
        assert!(p.dist(Point::new(0.3, 0.0)) < 1e-15);
        let p = walk_step(&g, Point::ZERO, 0.25).unwrap();
        assert!(p.dist(Point::new(0.0, 0.3)) < 1e-15);
        assert!(walk_step(&g, Point::new(0.7, 0.0), 0.0).is_err());
    }

    #[test]
    fn steps_stay_inside() {
        let g = DomainSpec::square(0.55, 0.2).unwrap();
        let rng = CounterRng::new(7);
        let cfg = WalkConfig::for_bits(4);
        for i in 0..10_000u64 {
            let mut x = Point::new(0.1, -0.2);
            for t in 0..20 {
                if g.distance_to_boundary(x) < cfg.absorption_threshold {
                    break;
                }
                x = walk_step(&g, x, rng.uniform(i, t)).unwrap();
                assert!(g.contains(x), "walk left the domain at {x}");
            }
        }
    }

    #[test]
    fn immediate_absorption_when_threshold_huge() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(4).with_threshold(2.0);
        let rng = CounterRng::new(1);
        let out = run_walk(&g, Point::new(0.1, 0.0), &cfg, &rng, 0).unwrap();
        assert!(out.absorbed);
        assert_eq!(out.steps_taken, 1);
        assert!((out.terminal.norm() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn truncation_reports_unabsorbed() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(4)
            .with_threshold(1e-300)
            .with_max_steps(1);
        let rng = CounterRng::new(1);
        let out = run_walk(&g, Point::ZERO, &cfg, &rng, 0).unwrap();
        assert!(!out.absorbed);
        assert_eq!(out.steps_taken, 1);
    }

    #[test]
    fn absorption_is_nearly_certain_at_defaults() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(4).with_samples(10_000);
        let est = estimate(&g, Point::ZERO, &BoundaryData::one(), &cfg).unwrap();
        assert!(
            est.absorbed_fraction > 0.99,
            "absorbed fraction {}",
            est.absorbed_fraction
        );
    }

    #[test]
    fn constant_data_estimates_exactly_one() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(2).with_threshold(2.0).with_samples(100);
        let est = estimate(&g, Point::ZERO, &BoundaryData::one(), &cfg).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.absorbed_fraction, 1.0);
    }

    #[test]
    fn harmonic_measure_symmetry_at_center() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(4).with_samples(20_000).with_seed(11);
        let est = estimate(&g, Point::ZERO, &BoundaryData::upper_half(), &cfg).unwrap();
        assert!(
            (est.mean - 0.5).abs() < 3.0 * est.std_error + 0.01,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn cosine_data_matches_closed_form() {
        // Harmonic extension of (1 + cos)/2 at (0.3, 0) in the 0.6-disc:
        // (1 + 0.3/0.6)/2 = 0.75.
        let g = disc06();
        let cfg = WalkConfig::for_bits(4).with_samples(30_000).with_seed(3);
        let est = estimate(&g, Point::new(0.3, 0.0), &BoundaryData::cosine_bump(), &cfg).unwrap();
        assert!(
            (est.mean - 0.75).abs() < 3.0 * est.std_error + 0.01,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn estimator_mean_respects_data_bounds() {
        let g = DomainSpec::square(0.55, 0.1).unwrap();
        let cfg = WalkConfig::for_bits(3).with_samples(2_000);
        let est = estimate(&g, Point::new(0.2, 0.3), &BoundaryData::upper_half(), &cfg).unwrap();
        assert!(est.mean >= 0.0 && est.mean <= 1.0);
    }

    #[test]
    fn punctured_estimate_matches_annulus_solution() {
        // The default threshold 2^{-3n} is nearly as thick as the puncture
        // radius e^{-2n}, which biases values on the log scale near the inner
        // circle; resolving the puncture needs a threshold well below it.
        let g = disc06();
        let pd = PuncturedDomain::new(g, Point::ZERO, 3).unwrap();
        let cfg = WalkConfig::for_bits(3)
            .with_samples(40_000)
            .with_seed(5)
            .with_threshold(pd.inner_radius / 8.0);
        for &rho in &[0.01, 0.1, 0.3] {
            let z = Point::new(rho, 0.0);
            let est = estimate_punctured(&pd, z, &cfg).unwrap();
            let exact = annulus_solution(Point::ZERO, pd.inner_radius, 0.6, z).unwrap();
            let tol = 3.0 * est.std_error + 2f64.powi(-6);
            assert!(
                (est.mean - exact).abs() < tol,
                "rho {rho}: {} vs {exact} (tol {tol})",
                est.mean
            );
        }
    }

    #[test]
    fn punctured_boundary_limits() {
        let g = disc06();
        let pd = PuncturedDomain::new(g, Point::ZERO, 3).unwrap();
        let cfg = WalkConfig::for_bits(3).with_samples(4_000).with_seed(5);
        // Next to the puncture circle the value tends to 1.
        let z = Point::new(pd.inner_radius * 1.05, 0.0);
        let est = estimate_punctured(&pd, z, &cfg).unwrap();
        assert!(est.mean > 0.9, "near-puncture mean {}", est.mean);
        // Next to the outer boundary it tends to 0.
        let z = Point::new(0.5999, 0.0);
        let est = estimate_punctured(&pd, z, &cfg).unwrap();
        assert!(est.mean < 0.05, "near-boundary mean {}", est.mean);
    }

    #[test]
    fn fixed_seed_is_bit_deterministic() {
        let g = disc06();
        let cfg = WalkConfig::for_bits(4).with_samples(5_000).with_seed(99);
        let a = estimate(&g, Point::new(0.2, 0.1), &BoundaryData::cosine_bump(), &cfg).unwrap();
        let b = estimate(&g, Point::new(0.2, 0.1), &BoundaryData::cosine_bump(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.csv_row(Point::new(0.2, 0.1)), b.csv_row(Point::new(0.2, 0.1)));
    }

    #[test]
    fn std_error_scales_as_inverse_sqrt() {
        let g = disc06();
        let z = Point::new(0.1, 0.2);
        let mut ses = Vec::new();
        for &n in &[1_000usize, 10_000, 100_000] {
            let cfg = WalkConfig::for_bits(4).with_samples(n).with_seed(17);
            let est = estimate(&g, z, &BoundaryData::upper_half(), &cfg).unwrap();
            ses.push(est.std_error);
        }
        for pair in ses.windows(2) {
            let ratio = pair[0] / pair[1];
            let expected = 10f64.sqrt();
            assert!(
                ratio > expected / 2.0 && ratio < expected * 2.0,
                "scaling ratio {ratio}"
            );
        }
    }

    #[test]
    fn median_steps_grow_polynomially() {
        // Median absorption step count on the square, slope of
        // log(median) vs log(n) must stay at most cubic.
        let g = DomainSpec::square(0.55, 0.0).unwrap();
        let rng = CounterRng::new(23);
        let mut medians = Vec::new();
        for bits in 2..=8u32 {
            let cfg = WalkConfig::for_bits(bits).with_samples(400);
            let mut steps: Vec<u32> = (0..400u64)
                .map(|i| {
                    run_walk(&g, Point::new(0.1, 0.05), &cfg, &rng, i)
                        .unwrap()
                        .steps_taken
                })
                .collect();
            steps.sort_unstable();
            medians.push(steps[steps.len() / 2] as f64);
        }
        let xs: Vec<f64> = (2..=8).map(|n| (n as f64).ln()).collect();
        let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
        let slope = regression_slope(&xs, &ys);
        assert!(slope <= 3.0, "median step growth slope {slope}, medians {medians:?}");
    }

    fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        cov / var
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = values.iter().sum();
        assert!((pairwise_sum(&values) - naive).abs() < 1e-9);
    }

    #[test]
    fn counter_rng_is_roughly_uniform() {
        let rng = CounterRng::new(42);
        let n = 20_000;
        let mean: f64 = (0..n).map(|i| rng.uniform(i, 0)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        // Distinct counters give distinct values.
        assert_ne!(rng.uniform(1, 2), rng.uniform(2, 1));
    }
}
