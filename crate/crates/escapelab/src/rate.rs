//! The escape-rate function psi and its growth integral phi.
//!
//! For a volume growth law ln|B(r)| the growth integral is
//!
//! ```text
//! phi(R) = Integral_lower^R r dr / (max(ln|B(r)|, 0) + ln ln r) ,
//! ```
//!
//! a strictly increasing function of R whenever lower > e, and psi is its
//! inverse: psi(phi(R)) = R. Radial Brownian motion stays below a constant
//! multiple of psi(C t) for all large t, which is what the simulation side of
//! the crate checks empirically.
//!
//! phi is evaluated through a ladder of cached cumulative knots at radii
//! lower * 2^k, so repeated calls and the inversion pay one panel integral
//! past the nearest knot, and monotonicity of cached values holds by
//! construction. Laws whose phi saturates (volume growing like exp(r^2 ln r)
//! or faster) eventually exhaust the representable radius range; inversion
//! reports that as `RateError::Range` instead of looping.

use std::sync::RwLock;

use crate::models::{ModelError, VolumeGrowth};
use crate::quad::{self, QuadError};

pub const DEFAULT_LOWER: f64 = 6.0;
/// Radii beyond this are treated as numerically unreachable.
pub const MAX_RADIUS: f64 = 1e300;
/// Relative tolerance of the psi inversion.
pub const INVERT_REL_TOL: f64 = 1e-10;
/// Floor applied to ln|B| in the diagnostics' denominators.
const LOG_VOLUME_FLOOR: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum RateError {
    #[error("lower integration limit {lower} must exceed e so the denominator stays positive")]
    Lower { lower: f64 },
    #[error("radius {r} is below the integration range starting at {lower}")]
    BelowRange { r: f64, lower: f64 },
    #[error("time {t} is negative")]
    NegativeTime { t: f64 },
    #[error(
        "time {t} exceeds the growth integral's reachable range (phi <= {sup_phi} out to R = 1e300); \
         the law saturates"
    )]
    Range { t: f64, sup_phi: f64 },
    #[error("no solution: {reason} (t = {t})")]
    NoSolution { t: f64, reason: &'static str },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// phi and psi for one volume growth law, with cached cumulative knots.
#[derive(Debug)]
pub struct RateFunction {
    model: VolumeGrowth,
    lower: f64,
    knots: RwLock<Vec<f64>>,
}

impl Clone for RateFunction {
    fn clone(&self) -> Self {
        RateFunction {
            model: self.model.clone(),
            lower: self.lower,
            knots: RwLock::new(self.knots.read().unwrap().clone()),
        }
    }
}

impl RateFunction {
    pub fn new(model: VolumeGrowth, lower: f64) -> Result<Self, RateError> {
        if !(lower > std::f64::consts::E) || !lower.is_finite() {
            return Err(RateError::Lower { lower });
        }
        model.log_ball_volume(lower)?;
        Ok(RateFunction { model, lower, knots: RwLock::new(vec![0.0]) })
    }

    pub fn with_default_lower(model: VolumeGrowth) -> Result<Self, RateError> {
        Self::new(model, DEFAULT_LOWER)
    }

    pub fn model(&self) -> &VolumeGrowth {
        &self.model
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    fn integrand(&self, r: f64) -> f64 {
        match self.model.log_ball_volume(r) {
            Ok(log_volume) => r / (log_volume.max(0.0) + r.ln().ln()),
            Err(_) => f64::NAN,
        }
    }

    fn knot_radius(&self, k: usize) -> f64 {
        self.lower * (k as f64).exp2()
    }

    fn panel(&self, a: f64, b: f64) -> Result<f64, RateError> {
        Ok(quad::integrate_default(|r| self.integrand(r), a, b)?.value)
    }

    /// Index of the largest knot radius not exceeding r.
    fn knot_index(&self, r: f64) -> usize {
        (r / self.lower).log2().floor().max(0.0) as usize
    }

    /// Extend the cumulative ladder through knot index k.
    fn ensure_knots(&self, k: usize) -> Result<(), RateError> {
        {
            let knots = self.knots.read().unwrap();
            if knots.len() > k {
                return Ok(());
            }
        }
        let mut knots = self.knots.write().unwrap();
        while knots.len() <= k {
            let i = knots.len();
            let piece = self.panel(self.knot_radius(i - 1), self.knot_radius(i))?;
            let next = knots[i - 1] + piece;
            knots.push(next);
        }
        Ok(())
    }

    /// The growth integral phi(R).
    pub fn phi(&self, r_upper: f64) -> Result<f64, RateError> {
        if !r_upper.is_finite() || r_upper > MAX_RADIUS {
            return Err(RateError::Precondition(format!(
                "phi evaluated at unrepresentable radius {r_upper}"
            )));
        }
        if r_upper < self.lower {
            return Err(RateError::BelowRange { r: r_upper, lower: self.lower });
        }
        if r_upper == self.lower {
            return Ok(0.0);
        }
        let k = self.knot_index(r_upper);
        self.ensure_knots(k)?;
        let base = {
            let knots = self.knots.read().unwrap();
            knots[k]
        };
        Ok(base + self.panel(self.knot_radius(k), r_upper)?)
    }

    /// The escape-rate function psi(t): the unique R with phi(R) = t.
    pub fn psi(&self, t: f64) -> Result<f64, RateError> {
        if !(t >= 0.0) {
            return Err(RateError::NegativeTime { t });
        }
        if t == 0.0 {
            return Ok(self.lower);
        }
        // Geometric doubling until a knot's phi value reaches t.
        let mut k = {
            let knots = self.knots.read().unwrap();
            match knots.iter().position(|&v| v >= t) {
                Some(i) => i,
                None => knots.len(),
            }
        };
        loop {
            if self.knot_radius(k) > MAX_RADIUS {
                let sup_phi = *self.knots.read().unwrap().last().unwrap();
                return Err(RateError::Range { t, sup_phi });
            }
            self.ensure_knots(k)?;
            let value = self.knots.read().unwrap()[k];
            if value >= t {
                break;
            }
            k += 1;
        }
        if k == 0 {
            return Ok(self.lower);
        }
        let (mut a, mut b) = (self.knot_radius(k - 1), self.knot_radius(k));
        let knots = self.knots.read().unwrap();
        let (phi_a, phi_b) = (knots[k - 1], knots[k]);
        drop(knots);
        if phi_b == t {
            return Ok(b);
        }
        // Safeguarded secant on phi(x) - t, falling back to bisection whenever
        // the secant step leaves the bracket or stalls.
        let mut fa = phi_a - t;
        let mut fb = phi_b - t;
        for _ in 0..200 {
            if (b - a) <= INVERT_REL_TOL * b {
                break;
            }
            // Secant proposal, replaced by the midpoint whenever it leaves the
            // bracket or hugs an endpoint too closely to make progress.
            let mut x = b - fb * (b - a) / (fb - fa);
            if !x.is_finite() || (x - a).min(b - x) < 1e-3 * (b - a) {
                x = 0.5 * (a + b);
            }
            let fx = self.phi(x)? - t;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx < 0.0 {
                a = x;
                fa = fx;
            } else {
                b = x;
                fb = fx;
            }
        }
        Ok(0.5 * (a + b))
    }
}

// ---------------------------------------------------------------------------
// Closed-form escape rates.
// ---------------------------------------------------------------------------

/// The closed-form rate families, evaluated with unit internal constants; the
/// separate multiplier argument of [`closed_form_rate`] scales the output.
#[derive(Debug, Clone)]
pub enum RateCase {
    /// Polynomial volume growth: sqrt(t ln t).
    SqrtTLogT,
    /// Volume exp(C r^alpha) with alpha in (0, 2): t^(1/(2 - alpha)).
    StretchedExponential { alpha: f64 },
    /// Volume exp(C r^2): exp(t^2 ln t).
    QuadraticExponential,
    /// Volume exp(C r^2 ln r): exp(exp(t)).
    DoubleExponential,
    /// Finite total volume: sqrt(t ln ln t).
    FiniteVolume,
    /// Solve R^2 / ln|B(R)| = t on the increasing branch for a concrete law.
    VolumeQuotient(VolumeGrowth),
}

/// Evaluate a closed-form rate at time t, scaled by `multiplier`.
pub fn closed_form_rate(case: &RateCase, t: f64, multiplier: f64) -> Result<f64, RateError> {
    if !(multiplier > 0.0) {
        return Err(RateError::Precondition(format!(
            "rate multiplier must be positive, got {multiplier}"
        )));
    }
    let base = match case {
        RateCase::SqrtTLogT => {
            let log_t = t.ln();
            if !(log_t > 0.0) {
                return Err(RateError::NoSolution { t, reason: "needs t > 1 so ln t is positive" });
            }
            (t * log_t).sqrt()
        }
        RateCase::StretchedExponential { alpha } => {
            if !(*alpha > 0.0 && *alpha < 2.0) {
                return Err(RateError::Precondition(format!(
                    "stretched-exponential exponent must lie in (0, 2), got {alpha}"
                )));
            }
            if !(t > 0.0) {
                return Err(RateError::NoSolution { t, reason: "needs t > 0" });
            }
            t.powf(1.0 / (2.0 - alpha))
        }
        RateCase::QuadraticExponential => {
            let log_t = t.ln();
            if !(log_t > 0.0) {
                return Err(RateError::NoSolution { t, reason: "needs t > 1 so ln t is positive" });
            }
            (t * t * log_t).exp()
        }
        RateCase::DoubleExponential => t.exp().exp(),
        RateCase::FiniteVolume => {
            let loglog_t = t.ln().ln();
            if !(loglog_t > 0.0) {
                return Err(RateError::NoSolution { t, reason: "needs t > e so ln ln t is positive" });
            }
            (t * loglog_t).sqrt()
        }
        RateCase::VolumeQuotient(model) => solve_volume_quotient(model, t)?,
    };
    Ok(multiplier * base)
}

/// Solve R^2 / ln|B(R)| = t on the branch where the quotient increases.
fn solve_volume_quotient(model: &VolumeGrowth, t: f64) -> Result<f64, RateError> {
    if !(t > 0.0) {
        return Err(RateError::NoSolution { t, reason: "needs t > 0" });
    }
    // Start where ln|B| = 1: to the left the quotient blows up as the log
    // volume vanishes, so the increasing branch lives to the right.
    let start = radius_where_log_volume_is_one(model)?;
    let quotient = |r: f64| -> Result<f64, RateError> {
        let lv = model.log_ball_volume(r)?;
        Ok(if lv > 0.0 { r * r / lv } else { f64::INFINITY })
    };
    if quotient(start)? >= t {
        return Err(RateError::NoSolution {
            t,
            reason: "t lies below the increasing branch of R^2/ln|B(R)|",
        });
    }
    let mut lo = start;
    let mut hi = 2.0 * start;
    let mut guard = 0;
    while quotient(hi)? < t {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 1100 || hi > MAX_RADIUS {
            return Err(RateError::Range { t, sup_phi: f64::INFINITY });
        }
    }
    for _ in 0..200 {
        if hi - lo <= INVERT_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if quotient(mid)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn radius_where_log_volume_is_one(model: &VolumeGrowth) -> Result<f64, RateError> {
    let mut lo = model.domain_min().max(1e-6);
    if model.log_ball_volume(lo)? >= 1.0 {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    let mut guard = 0;
    while model.log_ball_volume(hi)? < 1.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(RateError::Precondition(
                "log volume never reaches 1; law too flat for the quotient solve".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if model.log_ball_volume(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Completeness diagnostic.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    DivergentComplete,
    Inconclusive,
}

impl std::fmt::Display for Completeness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Completeness::DivergentComplete => "Divergent-Complete",
            Completeness::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub verdict: Completeness,
    /// (R, I(R)) with I(R) = Integral_1^R r dr / max(ln|B(r)|, eps) at decade probes.
    pub partial_integrals: Vec<(f64, f64)>,
    /// True when the verdict came from the symbolic family table rather than
    /// the numeric increment test.
    pub symbolic: bool,
}

/// Sufficient-condition test for stochastic completeness: divergence of
/// Integral r dr / ln|B(r)|. Closed-form families are classified symbolically;
/// tabulated and manifold-backed laws fall back to checking that decade
/// increments of the partial integrals are nondecreasing. `Inconclusive`
/// never claims incompleteness.
pub fn completeness_diagnostic(
    model: &VolumeGrowth,
    r_max: f64,
) -> Result<CompletenessReport, RateError> {
    if !(r_max >= 100.0) {
        return Err(RateError::Precondition(format!(
            "completeness probe range must reach at least 100, got {r_max}"
        )));
    }
    if model.domain_min() > 1.0 {
        return Err(RateError::Model(ModelError::Domain { r: 1.0, min: model.domain_min() }));
    }
    let mut partials = Vec::new();
    let mut acc = 0.0;
    let mut r_lo = 1.0f64;
    let mut r_hi = 10.0f64;
    while r_hi <= r_max * (1.0 + 1e-12) {
        acc += floored_integral(model, r_lo, r_hi, false)?;
        partials.push((r_hi, acc));
        r_lo = r_hi;
        r_hi *= 10.0;
    }
    let symbolic_verdict = match model {
        VolumeGrowth::Power { .. }
        | VolumeGrowth::ExpPower { .. }
        | VolumeGrowth::ExpQuad { .. }
        | VolumeGrowth::ExpQuadLog { .. }
        | VolumeGrowth::FiniteVolume { .. } => Some(Completeness::DivergentComplete),
        VolumeGrowth::Tabulated(_) | VolumeGrowth::FromManifold(_) => None,
    };
    let (verdict, symbolic) = match symbolic_verdict {
        Some(v) => (v, true),
        None => {
            let verdict = if increments_nondecreasing(&partials) {
                Completeness::DivergentComplete
            } else {
                Completeness::Inconclusive
            };
            (verdict, false)
        }
    };
    Ok(CompletenessReport { verdict, partial_integrals: partials, symbolic })
}

fn increments_nondecreasing(partials: &[(f64, f64)]) -> bool {
    let mut prev_inc = 0.0;
    let mut start = 0.0;
    for &(_, value) in partials {
        let inc = value - start;
        if inc < prev_inc * (1.0 - 1e-6) {
            return false;
        }
        prev_inc = inc;
        start = value;
    }
    true
}

/// Integral of r / den(r) over [a, b] where den = max(ln|B|, eps), optionally
/// augmented by ln ln r. The max kink is located by bisection so each
/// quadrature piece is smooth.
fn floored_integral(
    model: &VolumeGrowth,
    a: f64,
    b: f64,
    augment: bool,
) -> Result<f64, RateError> {
    let eps = LOG_VOLUME_FLOOR;
    let den = |r: f64| -> f64 {
        let lv = match model.log_ball_volume(r) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let mut d = lv.max(eps);
        if augment {
            d += r.ln().ln();
        }
        d
    };
    let integrand = |r: f64| r / den(r);
    let below = |r: f64| model.log_ball_volume(r).map(|v| v < eps).unwrap_or(false);
    let split = if below(a) && !below(b) {
        let mut lo = a;
        let mut hi = b;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if below(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    } else {
        None
    };
    let total = match split {
        Some(s) => {
            quad::integrate_default(integrand, a, s)?.value
                + quad::integrate_default(integrand, s, b)?.value
        }
        None => quad::integrate_default(integrand, a, b)?.value,
    };
    Ok(total)
}

// ---------------------------------------------------------------------------
// Augmented divergence check.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DivergenceReport {
    pub probes: Vec<f64>,
    /// Partial integrals of r / f from the first probe, f = max(ln|B|, eps).
    pub unaugmented: Vec<f64>,
    /// Partial integrals of r / (f + ln ln r) over the same ranges.
    pub augmented: Vec<f64>,
    /// Heuristic flag: unaugmented increments never decreased, the numeric
    /// stand-in for "grows unboundedly".
    pub unaugmented_unbounded: bool,
    /// First probe radius where f already dominates ln ln r, if any; the
    /// increment comparison applies from here on.
    pub regime_onset: Option<f64>,
    /// The lower-bound factor 0.5 (n0 - 1)/(n0 + 1) with n0 the regime onset
    /// (first probe when the regime is never entered).
    pub comparison_factor: f64,
    /// Some(result) when the unbounded hypothesis fired: every augmented
    /// increment lying in the f >= ln ln r regime reached at least
    /// comparison_factor times the raw increment (vacuously true when no
    /// increment is in that regime). None when the hypothesis was not met.
    pub increments_dominated: Option<bool>,
}

/// Compares growth of the raw volume integral against its ln ln-augmented
/// counterpart over probe radii.
///
/// Where f >= ln ln r the augmented denominator is at most 2f, so each
/// augmented increment must reach at least 0.5 (n0 - 1)/(n0 + 1) times the raw
/// increment (n0 the onset probe). Where f < ln ln r the raw comparison says
/// nothing and divergence is witnessed directly by the augmented increments
/// staying positive. Both sequences are returned so callers can inspect
/// either regime.
pub fn augmented_divergence_check(
    model: &VolumeGrowth,
    probes: &[f64],
) -> Result<DivergenceReport, RateError> {
    if probes.len() < 2 {
        return Err(RateError::Precondition("need at least two probe radii".into()));
    }
    if !(probes[0] >= 3.0) {
        return Err(RateError::Precondition(format!(
            "first probe radius must be at least 3, got {}",
            probes[0]
        )));
    }
    for w in probes.windows(2) {
        if !(w[1] > w[0]) {
            return Err(RateError::Precondition("probe radii must be strictly increasing".into()));
        }
    }
    let mut unaug = Vec::with_capacity(probes.len());
    let mut aug = Vec::with_capacity(probes.len());
    let mut acc_u = 0.0;
    let mut acc_a = 0.0;
    unaug.push(0.0);
    aug.push(0.0);
    for w in probes.windows(2) {
        acc_u += floored_integral(model, w[0], w[1], false)?;
        acc_a += floored_integral(model, w[0], w[1], true)?;
        unaug.push(acc_u);
        aug.push(acc_a);
    }
    let floored_f = |r: f64| -> Result<f64, RateError> {
        Ok(model.log_ball_volume(r)?.max(LOG_VOLUME_FLOOR))
    };
    // An increment [p_k, p_{k+1}] sits in the dominating regime when f at its
    // left end already exceeds ln ln at its right end; monotone f keeps
    // f >= ln ln r across the whole increment then.
    let mut in_regime = Vec::with_capacity(probes.len() - 1);
    for w in probes.windows(2) {
        in_regime.push(floored_f(w[0])? >= w[1].ln().ln());
    }
    let mut regime_onset = None;
    for &p in probes {
        if floored_f(p)? >= p.ln().ln() {
            regime_onset = Some(p);
            break;
        }
    }
    let increments =
        |xs: &[f64]| -> Vec<f64> { xs.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>() };
    let inc_u = increments(&unaug);
    let inc_a = increments(&aug);
    let unbounded = inc_u.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6));
    let n0 = regime_onset.unwrap_or(probes[0]);
    let factor = 0.5 * (n0 - 1.0) / (n0 + 1.0);
    let dominated = if unbounded {
        Some(
            inc_u
                .iter()
                .zip(&inc_a)
                .zip(&in_regime)
                .filter(|&(_, &active)| active)
                .all(|((u, a), _)| *a >= factor * u - 1e-12),
        )
    } else {
        None
    };
    Ok(DivergenceReport {
        probes: probes.to_vec(),
        unaugmented: unaug,
        augmented: aug,
        unaugmented_unbounded: unbounded,
        regime_onset,
        comparison_factor: factor,
        increments_dominated: dominated,
    })
}
