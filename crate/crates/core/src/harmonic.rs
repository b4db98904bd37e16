//! Poisson kernels, harmonic patches, and piecewise-harmonic fields.
//!
//! The representation of a harmonic patch is its boundary trace on a circle of
//! twice the owner radius: evaluation anywhere on the owner disc is the Poisson
//! integral of that trace, which is spectrally accurate because the evaluation
//! point stays at half the trace radius. A [`PiecewiseHarmonic`] function is an
//! ordered list of such patches with first-match semantics.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::export::{csv_line, fmt_f64};
use crate::geometry::{Disc, DomainSpec, Point};

/// Default trace sample count per patch.
pub const DEFAULT_TRACE_SAMPLES: usize = 128;
/// Default node count for circle quadrature.
pub const DEFAULT_QUAD_NODES: usize = 256;
/// Evaluation must stay this factor inside the trace circle.
pub const EVAL_RADIUS_FACTOR: f64 = 0.9;
/// Guard against quadrature circles below representable scale.
pub const DEFAULT_MIN_CIRCLE_RADIUS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error("evaluation point at distance {dist:.6e} is not inside the disc of radius {radius:.6e}")]
    PointNotInDisc { dist: f64, radius: f64 },
    #[error("kernel point at distance {dist:.6e} is not on the circle of radius {radius:.6e}")]
    PointNotOnCircle { dist: f64, radius: f64 },
    #[error(
        "evaluation point at distance {dist:.6e} from the center is too close to the trace circle (limit {limit:.6e})"
    )]
    TooCloseToCircle { dist: f64, limit: f64 },
    #[error("quadrature node at angle {angle:.6} is not covered by any patch")]
    UncoveredNode { angle: f64 },
    #[error("sample count {got} must be a power of two and at least 32")]
    SampleCount { got: usize },
    #[error("trace sample {value} outside [0, 1]")]
    SampleOutOfRange { value: f64 },
    #[error("inner and outer sample counts differ: {inner} vs {outer}")]
    ShapeMismatch { inner: usize, outer: usize },
    #[error("circle radius {radius:.3e} below the minimum-radius guard {guard:.3e}")]
    RadiusBelowGuard { radius: f64, guard: f64 },
    #[error("point at radius {rho:.6e} outside the annulus ({r_in:.6e}, {r_out:.6e})")]
    OutsideAnnulus { rho: f64, r_in: f64, r_out: f64 },
}

/// Poisson kernel of the disc `D_r(c)` with respect to arclength on the
/// circle: integrates to 1 over the circle for any interior evaluation point.
pub fn poisson_kernel(w: Point, z: Point, center: Point, radius: f64) -> Result<f64, HarmonicError> {
    let dz = z.dist(center);
    if dz >= radius {
        return Err(HarmonicError::PointNotInDisc {
            dist: dz,
            radius,
        });
    }
    let dw = w.dist(center);
    if (dw - radius).abs() > 1e-9 * radius.max(1.0) {
        return Err(HarmonicError::PointNotOnCircle { dist: dw, radius });
    }
    Ok(poisson_kernel_unchecked(w, z, center, radius))
}

#[inline]
fn poisson_kernel_unchecked(w: Point, z: Point, center: Point, radius: f64) -> f64 {
    let num = radius * radius - (z - center).norm_sq();
    let den = TAU * radius * (w - z).norm_sq();
    num / den
}

/// Gradient of the Poisson kernel with respect to the evaluation point.
#[inline]
fn poisson_kernel_grad(w: Point, z: Point, center: Point, radius: f64) -> Point {
    let a = radius * radius - (z - center).norm_sq();
    let b = (w - z).norm_sq();
    // d/dz [A/B] with A' = -2(z-c), B' = 2(z-w).
    let num = (z - center) * (-2.0 * b) - (z - w) * (2.0 * a);
    num * (1.0 / (TAU * radius * b * b))
}

/// Trapezoidal Poisson integral of `samples` given at equispaced angles
/// `2*pi*k/m` on the circle of `disc`. Spectrally accurate for traces of
/// functions harmonic on a strictly larger disc.
pub fn poisson_integral(samples: &[f64], disc: Disc, z: Point) -> Result<f64, HarmonicError> {
    let dz = z.dist(disc.center);
    let limit = EVAL_RADIUS_FACTOR * disc.radius;
    if dz > limit {
        return Err(HarmonicError::TooCloseToCircle { dist: dz, limit });
    }
    Ok(poisson_integral_unchecked(samples, disc, z))
}

fn poisson_integral_unchecked(samples: &[f64], disc: Disc, z: Point) -> f64 {
    let m = samples.len();
    let weight = TAU * disc.radius / m as f64;
    let mut acc = 0.0;
    for (k, &s) in samples.iter().enumerate() {
        let w = disc.at_angle(TAU * k as f64 / m as f64);
        acc += s * poisson_kernel_unchecked(w, z, disc.center, disc.radius) * weight;
    }
    acc
}

fn poisson_integral_grad(samples: &[f64], disc: Disc, z: Point) -> Point {
    let m = samples.len();
    let weight = TAU * disc.radius / m as f64;
    let mut acc = Point::ZERO;
    for (k, &s) in samples.iter().enumerate() {
        let w = disc.at_angle(TAU * k as f64 / m as f64);
        acc = acc + poisson_kernel_grad(w, z, disc.center, disc.radius) * (s * weight);
    }
    acc
}

/// A harmonic patch: authoritative on `owner`, represented by its trace on the
/// concentric circle of twice the radius.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPatch {
    owner: Disc,
    eval_circle: Disc,
    samples: Vec<f64>,
}

impl HarmonicPatch {
    /// Builds a patch from trace samples at equispaced angles on the circle of
    /// twice the owner radius. Samples may exceed [0, 1] by at most 1e-9
    /// (quadrature roundoff) and are clamped.
    pub fn new(owner: Disc, samples: Vec<f64>) -> Result<Self, HarmonicError> {
        let m = samples.len();
        if m < 32 || !m.is_power_of_two() {
            return Err(HarmonicError::SampleCount { got: m });
        }
        let mut clamped = samples;
        for s in &mut clamped {
            if *s < -1e-9 || *s > 1.0 + 1e-9 {
                return Err(HarmonicError::SampleOutOfRange { value: *s });
            }
            *s = s.clamp(0.0, 1.0);
        }
        Ok(HarmonicPatch {
            owner,
            eval_circle: owner.scaled(2.0),
            samples: clamped,
        })
    }

    /// Samples `f` at the trace circle.
    pub fn from_fn(
        owner: Disc,
        m: usize,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self, HarmonicError> {
        let circle = owner.scaled(2.0);
        let samples = (0..m)
            .map(|k| f(circle.at_angle(TAU * k as f64 / m as f64)))
            .collect();
        HarmonicPatch::new(owner, samples)
    }

    pub fn constant(owner: Disc, value: f64, m: usize) -> Result<Self, HarmonicError> {
        HarmonicPatch::new(owner, vec![value; m])
    }

    pub fn owner(&self) -> Disc {
        self.owner
    }

    pub fn eval_circle(&self) -> Disc {
        self.eval_circle
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Poisson evaluation of the trace; valid on the owner disc and up to 0.9
    /// of the trace radius.
    pub fn eval(&self, z: Point) -> Result<f64, HarmonicError> {
        poisson_integral(&self.samples, self.eval_circle, z)
    }

    /// Evaluation without the distance check, for callers that guarantee the
    /// owner-disc precondition.
    pub fn eval_inside(&self, z: Point) -> f64 {
        poisson_integral_unchecked(&self.samples, self.eval_circle, z)
    }

    /// Analytic gradient of the Poisson evaluation.
    pub fn grad(&self, z: Point) -> Point {
        poisson_integral_grad(&self.samples, self.eval_circle, z)
    }

    /// CSV dump of the trace, rows `angle,value`.
    pub fn trace_csv(&self) -> String {
        let m = self.samples.len();
        let mut out = String::from("angle,value\n");
        for (k, &s) in self.samples.iter().enumerate() {
            out.push_str(&csv_line(&[
                fmt_f64(TAU * k as f64 / m as f64),
                fmt_f64(s),
            ]));
        }
        out
    }
}

/// Anything that evaluates like a piecewise-harmonic field.
pub trait HarmonicField {
    fn eval(&self, z: Point) -> f64;
    /// True when some piece is authoritative at `z` (the default value is not
    /// used).
    fn covers(&self, z: Point) -> bool;
    fn grad(&self, z: Point) -> Point;
}

/// Ordered harmonic patches with first-match evaluation and a default value
/// outside every owner.
#[derive(Debug, Clone, Default)]
pub struct PiecewiseHarmonic {
    pub pieces: Vec<HarmonicPatch>,
    pub default_value: f64,
}

impl PiecewiseHarmonic {
    pub fn new(pieces: Vec<HarmonicPatch>, default_value: f64) -> Self {
        PiecewiseHarmonic {
            pieces,
            default_value,
        }
    }

    fn first_match(&self, z: Point) -> Option<&HarmonicPatch> {
        self.pieces.iter().find(|p| p.owner.contains(z))
    }
}

impl HarmonicField for PiecewiseHarmonic {
    fn eval(&self, z: Point) -> f64 {
        match self.first_match(z) {
            Some(p) => p.eval_inside(z),
            None => self.default_value,
        }
    }

    fn covers(&self, z: Point) -> bool {
        self.first_match(z).is_some()
    }

    fn grad(&self, z: Point) -> Point {
        match self.first_match(z) {
            Some(p) => p.grad(z),
            None => Point::ZERO,
        }
    }
}

/// First-match evaluation of a piecewise-harmonic function.
pub fn eval_piecewise(h: &PiecewiseHarmonic, z: Point) -> f64 {
    h.eval(z)
}

/// Poisson update integral over the circle of radius `radius` around
/// `center`: the trapezoid sum `sum_k h(w_k) P(w_k, center) (2 pi r / quad_m)`.
/// Every quadrature node must be covered by the field.
pub fn integrate_on_circle<F: HarmonicField + ?Sized>(
    field: &F,
    center: Point,
    radius: f64,
    quad_m: usize,
    min_radius: f64,
) -> Result<f64, HarmonicError> {
    if radius < min_radius {
        return Err(HarmonicError::RadiusBelowGuard {
            radius,
            guard: min_radius,
        });
    }
    let circle = Disc::new(center, radius);
    let weight = TAU * radius / quad_m as f64;
    let mut acc = 0.0;
    for k in 0..quad_m {
        let angle = TAU * k as f64 / quad_m as f64;
        let w = circle.at_angle(angle);
        if !field.covers(w) {
            return Err(HarmonicError::UncoveredNode { angle });
        }
        acc += field.eval(w) * poisson_kernel_unchecked(w, center, center, radius) * weight;
    }
    Ok(acc)
}

/// [`integrate_on_circle`] specialized to plain patch lists.
pub fn integrate_piecewise_on_circle(
    h: &PiecewiseHarmonic,
    center: Point,
    radius: f64,
    quad_m: usize,
) -> Result<f64, HarmonicError> {
    integrate_on_circle(h, center, radius, quad_m, DEFAULT_MIN_CIRCLE_RADIUS)
}

/// The radially symmetric harmonic function on the annulus
/// `r_in < |z - c| < r_out` with value 1 on the inner circle and 0 on the
/// outer circle.
pub fn annulus_solution(
    center: Point,
    r_in: f64,
    r_out: f64,
    z: Point,
) -> Result<f64, HarmonicError> {
    let rho = z.dist(center);
    if rho <= r_in || rho >= r_out {
        return Err(HarmonicError::OutsideAnnulus { rho, r_in, r_out });
    }
    Ok(annulus_profile(r_in, r_out, rho))
}

#[inline]
pub(crate) fn annulus_profile(r_in: f64, r_out: f64, rho: f64) -> f64 {
    (rho / r_out).ln() / (r_in / r_out).ln()
}

/// Harmonic function on an annulus determined by boundary traces on both
/// circles, expanded in Laurent modes
/// `a0 + b0 ln(rho) + sum_k (alpha_k rho^k + beta_k rho^-k) e^{i k theta}`.
/// The radial factors are normalized to the boundary radii so every stored
/// coefficient multiplies a factor in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusHarmonic {
    pub center: Point,
    pub r_in: f64,
    pub r_out: f64,
    a0: f64,
    b0: f64,
    // Per mode k >= 1: (cos_outer, cos_inner, sin_outer, sin_inner) where the
    // radial profile is c_out (rho/r_out)^k + c_in (r_in/rho)^k.
    modes: Vec<[f64; 4]>,
}

impl AnnulusHarmonic {
    /// Solves the annulus Dirichlet problem for traces sampled at equispaced
    /// angles on both circles. Sample counts must match and be a power of two.
    pub fn solve(
        center: Point,
        r_in: f64,
        r_out: f64,
        inner_samples: &[f64],
        outer_samples: &[f64],
    ) -> Result<Self, HarmonicError> {
        let m = inner_samples.len();
        if m != outer_samples.len() {
            return Err(HarmonicError::ShapeMismatch {
                inner: m,
                outer: outer_samples.len(),
            });
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(HarmonicError::SampleCount { got: m });
        }
        let (in_cos, in_sin) = real_dft(inner_samples);
        let (out_cos, out_sin) = real_dft(outer_samples);
        let q = r_in / r_out;
        let ln_ratio = (r_out / r_in).ln();
        let b0 = (out_cos[0] - in_cos[0]) / ln_ratio;
        let a0 = out_cos[0] - b0 * r_out.ln();
        let mut modes = Vec::with_capacity(m / 2);
        for k in 1..=m / 2 {
            let qk = q.powi(k as i32);
            let det = 1.0 - qk * qk;
            let solve_pair = |outer: f64, inner: f64| -> (f64, f64) {
                ((outer - inner * qk) / det, (inner - outer * qk) / det)
            };
            let (c_out, c_in) = solve_pair(out_cos[k], in_cos[k]);
            let (s_out, s_in) = solve_pair(out_sin[k], in_sin[k]);
            modes.push([c_out, c_in, s_out, s_in]);
        }
        Ok(AnnulusHarmonic {
            center,
            r_in,
            r_out,
            a0,
            b0,
            modes,
        })
    }

    /// The closed-form profile (1 on the inner circle, 0 on the outer one) as
    /// a pure k = 0 expansion.
    pub fn radial_profile(center: Point, r_in: f64, r_out: f64) -> Self {
        let ln_ratio = (r_in / r_out).ln();
        AnnulusHarmonic {
            center,
            r_in,
            r_out,
            a0: -r_out.ln() / ln_ratio,
            b0: 1.0 / ln_ratio,
            modes: Vec::new(),
        }
    }

    /// Evaluates the Laurent expansion. Defined for any positive radius; the
    /// expansion represents the solution on the closed annulus.
    pub fn eval(&self, z: Point) -> f64 {
        let v = z - self.center;
        let rho = v.norm().max(self.r_in.min(1e-300));
        let theta = v.arg();
        let mut acc = self.a0 + self.b0 * rho.ln();
        let (sin1, cos1) = theta.sin_cos();
        let (mut cos_k, mut sin_k) = (1.0, 0.0);
        let q_out = rho / self.r_out;
        let q_in = self.r_in / rho;
        let (mut pow_out, mut pow_in) = (1.0, 1.0);
        for mode in &self.modes {
            // Advance cos/sin(k theta) and the radial powers by one step.
            let (c, s) = (cos_k * cos1 - sin_k * sin1, sin_k * cos1 + cos_k * sin1);
            cos_k = c;
            sin_k = s;
            pow_out *= q_out;
            pow_in *= q_in;
            let radial_cos = mode[0] * pow_out + mode[1] * pow_in;
            let radial_sin = mode[2] * pow_out + mode[3] * pow_in;
            acc += radial_cos * cos_k + radial_sin * sin_k;
        }
        acc
    }

    /// Analytic gradient of the expansion.
    pub fn grad(&self, z: Point) -> Point {
        let v = z - self.center;
        let rho = v.norm().max(self.r_in.min(1e-300));
        let theta = v.arg();
        let mut du_drho = self.b0 / rho;
        let mut du_dtheta = 0.0;
        let (sin1, cos1) = theta.sin_cos();
        let (mut cos_k, mut sin_k) = (1.0, 0.0);
        let q_out = rho / self.r_out;
        let q_in = self.r_in / rho;
        let (mut pow_out, mut pow_in) = (1.0, 1.0);
        for (idx, mode) in self.modes.iter().enumerate() {
            let k = (idx + 1) as f64;
            let (c, s) = (cos_k * cos1 - sin_k * sin1, sin_k * cos1 + cos_k * sin1);
            cos_k = c;
            sin_k = s;
            pow_out *= q_out;
            pow_in *= q_in;
            let radial_cos = mode[0] * pow_out + mode[1] * pow_in;
            let radial_sin = mode[2] * pow_out + mode[3] * pow_in;
            let dradial_cos = (k / rho) * (mode[0] * pow_out - mode[1] * pow_in);
            let dradial_sin = (k / rho) * (mode[2] * pow_out - mode[3] * pow_in);
            du_drho += dradial_cos * cos_k + dradial_sin * sin_k;
            du_dtheta += k * (radial_sin * cos_k - radial_cos * sin_k);
        }
        let (sin_t, cos_t) = theta.sin_cos();
        let rho_hat = Point::new(cos_t, sin_t);
        let theta_hat = Point::new(-sin_t, cos_t);
        rho_hat * du_drho + theta_hat * (du_dtheta / rho)
    }
}

/// Real DFT returning cosine and sine coefficients `0..=m/2`, normalized so
/// the trigonometric interpolant reproduces the samples.
fn real_dft(samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = samples.len();
    let half = m / 2;
    let mut cos_coef = vec![0.0; half + 1];
    let mut sin_coef = vec![0.0; half + 1];
    for k in 0..=half {
        let mut c = 0.0;
        let mut s = 0.0;
        for (j, &f) in samples.iter().enumerate() {
            let angle = TAU * (k * j) as f64 / m as f64;
            c += f * angle.cos();
            s += f * angle.sin();
        }
        let norm = if k == 0 || k == half { 1.0 } else { 2.0 };
        cos_coef[k] = norm * c / m as f64;
        sin_coef[k] = norm * s / m as f64;
    }
    (cos_coef, sin_coef)
}

/// Boundary data for Dirichlet problems, evaluated at boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub profile: BoundaryProfile,
    /// Optional Hoelder constant `k1`: the data promises
    /// `|phi(x) - phi(y)| <= k1 |x - y|^{2/3}` within each smooth piece.
    pub holder_k1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryProfile {
    Zero,
    One,
    /// Indicator of the upper half plane `im > 0`.
    UpperHalf,
    /// `(1 + cos theta) / 2` where `theta` is the argument of the boundary
    /// point seen from the origin.
    CosineBump,
    /// Piecewise-constant values over arclength intervals `[start, end)`,
    /// `default` elsewhere.
    Arcs {
        pieces: Vec<ArcPiece>,
        default: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPiece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

#[derive(Debug, Error)]
#[error(
    "Hoelder bound violated: |phi(x)-phi(y)| = {diff:.3e} > k1 |x-y|^(2/3) = {bound:.3e} at s = {at:.6}"
)]
pub struct HolderViolation {
    pub diff: f64,
    pub bound: f64,
    pub at: f64,
}

impl BoundaryData {
    pub fn zero() -> Self {
        BoundaryProfile::Zero.into()
    }

    pub fn one() -> Self {
        BoundaryProfile::One.into()
    }

    pub fn upper_half() -> Self {
        BoundaryProfile::UpperHalf.into()
    }

    pub fn cosine_bump() -> Self {
        BoundaryProfile::CosineBump.into()
    }

    pub fn arc(start: f64, end: f64, value: f64) -> Self {
        BoundaryProfile::Arcs {
            pieces: vec![ArcPiece { start, end, value }],
            default: 0.0,
        }
        .into()
    }

    pub fn with_holder(mut self, k1: f64) -> Self {
        self.holder_k1 = Some(k1);
        self
    }

    /// Value at a boundary point of `domain`.
    pub fn eval(&self, domain: &DomainSpec, p: Point) -> f64 {
        match &self.profile {
            BoundaryProfile::Zero => 0.0,
            BoundaryProfile::One => 1.0,
            BoundaryProfile::UpperHalf => {
                if p.im > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BoundaryProfile::CosineBump => 0.5 * (1.0 + p.arg().cos()),
            BoundaryProfile::Arcs { pieces, default } => {
                let s = domain.boundary_arclength(p);
                pieces
                    .iter()
                    .find(|piece| s >= piece.start && s < piece.end)
                    .map(|piece| piece.value)
                    .unwrap_or(*default)
            }
        }
    }

    /// Checks the Hoelder bound on sampled pairs within each smooth piece.
    /// Piecewise-constant profiles hold trivially; the cosine profile is
    /// checked over the whole boundary.
    pub fn verify_holder(&self, domain: &DomainSpec, pairs: usize) -> Result<(), HolderViolation> {
        let Some(k1) = self.holder_k1 else {
            return Ok(());
        };
        if !matches!(self.profile, BoundaryProfile::CosineBump) {
            return Ok(());
        }
        let len = domain.boundary_length();
        for i in 0..pairs {
            let s = len * (i as f64 + 0.13) / pairs as f64;
            let t = len * ((i as f64 * 7.0) % pairs as f64 + 0.57) / pairs as f64;
            let x = domain.boundary_point(s);
            let y = domain.boundary_point(t);
            let diff = (self.eval(domain, x) - self.eval(domain, y)).abs();
            let bound = k1 * x.dist(y).powf(2.0 / 3.0);
            if diff > bound {
                return Err(HolderViolation { diff, bound, at: s });
            }
        }
        Ok(())
    }
}

impl From<BoundaryProfile> for BoundaryData {
    fn from(profile: BoundaryProfile) -> Self {
        BoundaryData {
            profile,
            holder_k1: None,
        }
    }
}
