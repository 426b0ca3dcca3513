//! Volume growth laws and rotationally symmetric model manifolds.
//!
//! A volume growth law assigns every radius the log volume `ln|B(r)|` of the
//! geodesic ball around a fixed pole. Laws come either as closed-form
//! families,
//!
//! ```text
//! power        |B(r)| = C r^D
//! exppower     |B(r)| = exp(C r^alpha),  0 < alpha < 2
//! expquad      |B(r)| = exp(C r^2)
//! expquadlog   |B(r)| = exp(C r^2 ln r)
//! finitevolume |B(r)| = V (1 - e^{-r})
//! ```
//!
//! as a tabulated grid of (r, |B(r)|) pairs, or induced by a model manifold
//! with metric dr^2 + f(r)^2 dtheta^2:
//!
//! ```text
//! |B(r)| = omega_{n-1} * Integral_0^r f(s)^{n-1} ds .
//! ```
//!
//! Warped volumes span thousands of orders of magnitude (sinh^{n-1} at large
//! radius), so every cumulative integral here is carried in log space. The
//! per-manifold cache holds `ln Integral_0^{2^k r_seed} f^{n-1}` on a doubling
//! grid; queries pay one panel integral past the nearest cached knot.

use std::fmt;
use std::sync::RwLock;

use crate::quad::{log_add_exp, log_integral_exp_gl32};

/// Largest log-exponent swing allowed inside a single Gauss-Legendre panel.
/// Panels varying more than this are bisected; 32 nodes resolve exp(g) with
/// |g| range 35 to about 1e-11 relative error.
const PANEL_SWING: f64 = 35.0;

/// First cached knot of the cumulative warp-volume grid.
const MASS_SEED_RADIUS: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("radius {r} is outside the law's domain (defined for r >= {min})")]
    Domain { r: f64, min: f64 },
    #[error("tabulated grid invalid at row {row}: {reason}")]
    Monotonicity { row: usize, reason: &'static str },
    #[error("parameter `{name}` = {value} rejected: {requirement}")]
    Parameter { name: &'static str, value: f64, requirement: &'static str },
    #[error("model spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
    #[error("could not read table `{path}`: {source}")]
    TableIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn check_param(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Parameter { name, value, requirement })
    }
}

/// Read a two-column numeric table. Columns may be separated by commas or
/// whitespace; `#` starts a comment.
fn read_table(path: &str) -> Result<Vec<(f64, f64)>, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ModelError::TableIo { path: path.to_string(), source })?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let parse = |field: Option<&str>| -> Result<f64, ModelError> {
            field.and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| ModelError::Spec {
                spec: path.to_string(),
                reason: format!("line {}: expected two numeric columns", lineno + 1),
            })
        };
        let r = parse(fields.next())?;
        let v = parse(fields.next())?;
        points.push((r, v));
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Monotone cubic (Fritsch-Carlson) interpolation on a strictly increasing grid.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    /// Fit node derivatives that preserve the shape of the data.
    fn fit(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        debug_assert!(n >= 2);
        let mut secants = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            secants.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        let mut ms = vec![0.0; n];
        ms[0] = secants[0];
        ms[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            if d0 * d1 <= 0.0 {
                ms[i] = 0.0;
            } else {
                let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                ms[i] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        // Fritsch-Carlson limiter keeps each segment monotone.
        for i in 0..n - 1 {
            let d = secants[i];
            if d == 0.0 {
                ms[i] = 0.0;
                ms[i + 1] = 0.0;
                continue;
            }
            let a = ms[i] / d;
            let b = ms[i + 1] / d;
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                ms[i] = tau * a * d;
                ms[i + 1] = tau * b * d;
            }
        }
        MonotoneCubic { xs, ys, ms }
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        self.ys[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * self.ms[i] * (t3 - 2.0 * t2 + t)
            + self.ys[i + 1] * (-2.0 * t3 + 3.0 * t2)
            + h * self.ms[i + 1] * (t3 - t2)
    }

    fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        (self.ys[i] * (6.0 * t2 - 6.0 * t)
            + h * self.ms[i] * (3.0 * t2 - 4.0 * t + 1.0)
            + self.ys[i + 1] * (-6.0 * t2 + 6.0 * t)
            + h * self.ms[i + 1] * (3.0 * t2 - 2.0 * t))
            / h
    }

    fn last_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn last_y(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    fn last_m(&self) -> f64 {
        *self.ms.last().unwrap()
    }
}

// ---------------------------------------------------------------------------
// Tabulated growth law: ln|B| interpolated monotonically in ln r.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TabulatedLaw {
    interp: MonotoneCubic,
    r_first: f64,
    r_last: f64,
    source: Option<String>,
}

impl TabulatedLaw {
    /// Build from strictly increasing radii with nondecreasing positive volumes.
    pub fn new(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::Monotonicity { row: points.len(), reason: "need at least two rows" });
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for (row, &(r, vol)) in points.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "radius must be positive and finite" });
            }
            if !(vol > 0.0) || !vol.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "volume must be positive and finite" });
            }
            if row > 0 {
                if r <= points[row - 1].0 {
                    return Err(ModelError::Monotonicity { row, reason: "radii must be strictly increasing" });
                }
                if vol < points[row - 1].1 {
                    return Err(ModelError::Monotonicity { row, reason: "volumes must be nondecreasing" });
                }
            }
            xs.push(r.ln());
            ys.push(vol.ln());
        }
        Ok(TabulatedLaw {
            interp: MonotoneCubic::fit(xs, ys),
            r_first: points[0].0,
            r_last: points[points.len() - 1].0,
            source: None,
        })
    }

    pub fn from_file(path: &str) -> Result<Self, ModelError> {
        let points = read_table(path)?;
        let mut law = Self::new(&points)?;
        law.source = Some(path.to_string());
        Ok(law)
    }

    /// Build from (r, ln|B(r)|) pairs, for volumes too large to store raw.
    pub fn from_log_points(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::Monotonicity { row: points.len(), reason: "need at least two rows" });
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for (row, &(r, log_vol)) in points.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "radius must be positive and finite" });
            }
            if !log_vol.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "log volume must be finite" });
            }
            if row > 0 {
                if r <= points[row - 1].0 {
                    return Err(ModelError::Monotonicity { row, reason: "radii must be strictly increasing" });
                }
                if log_vol < points[row - 1].1 {
                    return Err(ModelError::Monotonicity { row, reason: "volumes must be nondecreasing" });
                }
            }
            xs.push(r.ln());
            ys.push(log_vol);
        }
        Ok(TabulatedLaw {
            interp: MonotoneCubic::fit(xs, ys),
            r_first: points[0].0,
            r_last: points[points.len() - 1].0,
            source: None,
        })
    }

    fn log_volume(&self, r: f64) -> f64 {
        let x = r.ln();
        if r >= self.r_last {
            // Continue linearly in ln r using the final interior slope.
            self.interp.last_y() + self.interp.last_m() * (x - self.interp.last_x())
        } else {
            self.interp.value(x)
        }
    }

    pub fn extrapolates(&self, r: f64) -> bool {
        r > self.r_last
    }
}

// ---------------------------------------------------------------------------
// Warp functions f(r) of rotationally symmetric manifolds.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Warp {
    /// f(r) = r.
    Euclidean,
    /// f(r) = sinh(kappa r)/kappa.
    Hyperbolic { kappa: f64 },
    /// f(r) = exp(-a r) for r >= r0, capped near the pole by r exp(c1 r + c2 r^2)
    /// with value and slope matched at r0.
    Cusp { a: f64, r0: f64, c1: f64, c2: f64 },
    /// ln f interpolated from a grid; linear ray below the first knot keeps the
    /// profile pole-regular, linear ln f continuation above the last knot.
    Tabulated(TabulatedWarp),
}

#[derive(Debug, Clone)]
pub struct TabulatedWarp {
    interp: MonotoneCubic,
    r_first: f64,
    r_last: f64,
    ln_f_first: f64,
    source: Option<String>,
}

impl TabulatedWarp {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::Monotonicity { row: points.len(), reason: "need at least two rows" });
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for (row, &(r, f)) in points.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "radius must be positive and finite" });
            }
            if !(f > 0.0) || !f.is_finite() {
                return Err(ModelError::Monotonicity { row, reason: "warp value must be positive and finite" });
            }
            if row > 0 && r <= points[row - 1].0 {
                return Err(ModelError::Monotonicity { row, reason: "radii must be strictly increasing" });
            }
            xs.push(r);
            ys.push(f.ln());
        }
        Ok(TabulatedWarp {
            interp: MonotoneCubic::fit(xs, ys),
            r_first: points[0].0,
            r_last: points[points.len() - 1].0,
            ln_f_first: points[0].1.ln(),
            source: None,
        })
    }

    pub fn from_file(path: &str) -> Result<Self, ModelError> {
        let points = read_table(path)?;
        let mut warp = Self::new(&points)?;
        warp.source = Some(path.to_string());
        Ok(warp)
    }

    fn ln_f(&self, r: f64) -> f64 {
        if r <= self.r_first {
            self.ln_f_first + r.ln() - self.r_first.ln()
        } else if r >= self.r_last {
            self.interp.last_y() + self.interp.last_m() * (r - self.r_last)
        } else {
            self.interp.value(r)
        }
    }

    fn log_derivative(&self, r: f64) -> f64 {
        if r <= self.r_first {
            1.0 / r
        } else if r >= self.r_last {
            self.interp.last_m()
        } else {
            self.interp.derivative(r)
        }
    }
}

impl Warp {
    /// ln f(r), stable at radii where f itself overflows.
    pub fn ln_f(&self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => r.ln(),
            Warp::Hyperbolic { kappa } => {
                let x = kappa * r;
                // ln sinh(x) - ln kappa, written to survive x ~ 1e9.
                if x > 20.0 {
                    x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2 - kappa.ln()
                } else {
                    (x.sinh() / kappa).ln()
                }
            }
            Warp::Cusp { a, r0, c1, c2 } => {
                if r >= *r0 {
                    -a * r
                } else {
                    r.ln() + r * (c1 + c2 * r)
                }
            }
            Warp::Tabulated(t) => t.ln_f(r),
        }
    }

    /// f'(r)/f(r); the radial drift is (n-1)/2 times this.
    pub fn log_derivative(&self, r: f64) -> f64 {
        match self {
            Warp::Euclidean => 1.0 / r,
            Warp::Hyperbolic { kappa } => kappa / (kappa * r).tanh(),
            Warp::Cusp { a, r0, c1, c2 } => {
                if r >= *r0 {
                    -a
                } else {
                    1.0 / r + c1 + 2.0 * c2 * r
                }
            }
            Warp::Tabulated(t) => t.log_derivative(r),
        }
    }

    fn extrapolates(&self, r: f64) -> bool {
        match self {
            Warp::Tabulated(t) => r > t.r_last,
            _ => false,
        }
    }
}

/// Cap coefficients for the cusp profile: r exp(c1 r + c2 r^2) matches
/// exp(-a r) in value and slope at r0.
fn cusp_cap(a: f64, r0: f64) -> (f64, f64) {
    let g = -a * r0 - r0.ln();
    let gp = -a - 1.0 / r0;
    let c2 = (gp * r0 - g) / (r0 * r0);
    let c1 = gp - 2.0 * c2 * r0;
    (c1, c2)
}

// ---------------------------------------------------------------------------
// Model manifolds.
// ---------------------------------------------------------------------------

/// Rotationally symmetric manifold of dimension `dim` with warp `f`.
///
/// Carries a lazily extended cache of `ln Integral_0^r f^{n-1}` on a doubling
/// radius grid. The cache is behind an RwLock, so a manifold may be shared
/// across threads; values do not depend on query order.
#[derive(Debug)]
pub struct Manifold {
    pub dim: u32,
    pub warp: Warp,
    mass_knots: RwLock<Vec<f64>>,
}

impl Clone for Manifold {
    fn clone(&self) -> Self {
        Manifold {
            dim: self.dim,
            warp: self.warp.clone(),
            mass_knots: RwLock::new(self.mass_knots.read().unwrap().clone()),
        }
    }
}

impl Manifold {
    pub fn new(dim: u32, warp: Warp) -> Result<Self, ModelError> {
        check_param("n", dim as f64, (1..=64).contains(&dim), "dimension must be in 1..=64")?;
        if let Warp::Hyperbolic { kappa } = warp {
            check_param("kappa", kappa, kappa > 0.0, "curvature scale must be positive")?;
        }
        if let Warp::Cusp { a, r0, .. } = warp {
            check_param("a", a, a > 0.0, "cusp decay rate must be positive")?;
            check_param("r0", r0, r0 > 0.0, "cap radius must be positive")?;
        }
        Ok(Manifold { dim, warp, mass_knots: RwLock::new(Vec::new()) })
    }

    pub fn euclidean(dim: u32) -> Result<Self, ModelError> {
        Self::new(dim, Warp::Euclidean)
    }

    pub fn hyperbolic(dim: u32, kappa: f64) -> Result<Self, ModelError> {
        Self::new(dim, Warp::Hyperbolic { kappa })
    }

    pub fn cusp(dim: u32, a: f64, r0: f64) -> Result<Self, ModelError> {
        let (c1, c2) = cusp_cap(a, r0);
        Self::new(dim, Warp::Cusp { a, r0, c1, c2 })
    }

    /// Radial drift (n-1) f'(r) / (2 f(r)). Exactly zero in dimension one.
    pub fn radial_drift(&self, r: f64) -> f64 {
        if self.dim == 1 {
            0.0
        } else {
            0.5 * (self.dim - 1) as f64 * self.warp.log_derivative(r)
        }
    }

    /// Exponent driving the volume integrand: g(s) = (n-1) ln f(s).
    fn mass_exponent(&self, s: f64) -> f64 {
        if self.dim == 1 {
            0.0
        } else {
            (self.dim - 1) as f64 * self.warp.ln_f(s)
        }
    }

    /// ln Integral_0^r f(s)^{n-1} ds.
    pub fn log_radial_mass(&self, r: f64) -> Result<f64, ModelError> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(ModelError::Domain { r, min: f64::MIN_POSITIVE });
        }
        if r <= MASS_SEED_RADIUS {
            return Ok(self.log_panel_from_zero(r));
        }
        let idx = ((r / MASS_SEED_RADIUS).log2().floor() as usize).min(4000);
        {
            let knots = self.mass_knots.read().unwrap();
            if knots.len() > idx {
                let knot_r = MASS_SEED_RADIUS * (idx as f64).exp2();
                return Ok(log_add_exp(knots[idx], self.log_panel(knot_r, r, knots[idx])));
            }
        }
        let mut knots = self.mass_knots.write().unwrap();
        if knots.is_empty() {
            knots.push(self.log_panel_from_zero(MASS_SEED_RADIUS));
        }
        while knots.len() <= idx {
            let k = knots.len();
            let a = MASS_SEED_RADIUS * ((k - 1) as f64).exp2();
            let b = MASS_SEED_RADIUS * (k as f64).exp2();
            let acc = knots[k - 1];
            let next = log_add_exp(acc, self.log_panel(a, b, acc));
            knots.push(next);
        }
        let knot_r = MASS_SEED_RADIUS * (idx as f64).exp2();
        Ok(log_add_exp(knots[idx], self.log_panel(knot_r, r, knots[idx])))
    }

    /// ln Integral_a^b exp(g) with recursive bisection. `floor` is the log mass
    /// already accumulated elsewhere: panels provably negligible against it are
    /// returned as a crude upper bound instead of being refined.
    fn log_panel(&self, a: f64, b: f64, floor: f64) -> f64 {
        if b <= a {
            return f64::NEG_INFINITY;
        }
        let ga = self.mass_exponent(a);
        let gb = self.mass_exponent(b);
        let gm = self.mass_exponent(0.5 * (a + b));
        let top = ga.max(gb).max(gm);
        let swing = top - ga.min(gb).min(gm);
        if swing <= PANEL_SWING {
            return log_integral_exp_gl32(&|s| self.mass_exponent(s), a, b);
        }
        let bound = top + 2.0 + (b - a).ln();
        if bound < floor - 45.0 {
            return bound;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return log_integral_exp_gl32(&|s| self.mass_exponent(s), a, b);
        }
        if gb >= ga {
            let right = self.log_panel(mid, b, floor);
            let left = self.log_panel(a, mid, floor.max(right));
            log_add_exp(left, right)
        } else {
            let left = self.log_panel(a, mid, floor);
            let right = self.log_panel(mid, b, floor.max(left));
            log_add_exp(left, right)
        }
    }

    /// First panel [0, b]. The integrand is s^{n-1} exp(h(s)) with h finite at
    /// the pole for every supported warp, so the rule sees a polynomial times a
    /// mild factor and never needs endpoint values.
    fn log_panel_from_zero(&self, b: f64) -> f64 {
        let h = |s: f64| self.mass_exponent(s) - (self.dim - 1) as f64 * s.ln();
        let probes = [b * 1e-3, 0.5 * b, b * 0.999];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &s in &probes {
            let v = h(s);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo <= PANEL_SWING || b < 1e-300 {
            log_integral_exp_gl32(&|s| self.mass_exponent(s), 0.0, b)
        } else {
            let left = self.log_panel_from_zero(0.5 * b);
            let right = self.log_panel(0.5 * b, b, left);
            log_add_exp(left, right)
        }
    }

    /// ln |B(r)| = ln omega_{n-1} + ln Integral_0^r f^{n-1}.
    pub fn log_ball_volume(&self, r: f64) -> Result<f64, ModelError> {
        Ok(log_unit_sphere_area(self.dim) + self.log_radial_mass(r)?)
    }

    pub fn is_extrapolating(&self, r: f64) -> bool {
        self.warp.extrapolates(r)
    }

    pub fn spec_string(&self) -> String {
        match &self.warp {
            Warp::Euclidean => format!("manifold:euclidean,n={}", self.dim),
            Warp::Hyperbolic { kappa } => format!("manifold:hyperbolic,n={},kappa={}", self.dim, kappa),
            Warp::Cusp { a, r0, .. } => format!("manifold:cusp,n={},a={},r0={}", self.dim, a, r0),
            Warp::Tabulated(t) => match &t.source {
                Some(p) => format!("manifold:warpfile,n={},path={}", self.dim, p),
                None => format!("manifold:warpgrid,n={}", self.dim),
            },
        }
    }
}

/// ln of the surface area of the unit (n-1)-sphere, omega_{n-1} = 2 pi^{n/2} / Gamma(n/2).
pub fn log_unit_sphere_area(dim: u32) -> f64 {
    std::f64::consts::LN_2 + 0.5 * dim as f64 * std::f64::consts::PI.ln() - ln_gamma_half(dim)
}

/// ln Gamma(n/2) by recurrence from Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
fn ln_gamma_half(n: u32) -> f64 {
    let mut acc = if n % 2 == 0 { 0.0 } else { 0.5 * std::f64::consts::PI.ln() };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k + 2 <= n {
        acc += (0.5 * k as f64).ln();
        k += 2;
    }
    acc
}

// ---------------------------------------------------------------------------
// Volume growth laws.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum VolumeGrowth {
    Power { c: f64, d: f64 },
    ExpPower { c: f64, alpha: f64 },
    ExpQuad { c: f64 },
    ExpQuadLog { c: f64 },
    FiniteVolume { v_total: f64 },
    Tabulated(TabulatedLaw),
    FromManifold(Manifold),
}

impl VolumeGrowth {
    pub fn power(c: f64, d: f64) -> Result<Self, ModelError> {
        check_param("C", c, c > 0.0, "volume constant must be positive")?;
        check_param("D", d, d > 0.0, "degree must be positive")?;
        Ok(VolumeGrowth::Power { c, d })
    }

    pub fn exp_power(c: f64, alpha: f64) -> Result<Self, ModelError> {
        check_param("C", c, c > 0.0, "exponent scale must be positive")?;
        check_param("alpha", alpha, alpha > 0.0 && alpha < 2.0, "exponent must lie in (0, 2)")?;
        Ok(VolumeGrowth::ExpPower { c, alpha })
    }

    pub fn exp_quad(c: f64) -> Result<Self, ModelError> {
        check_param("C", c, c > 0.0, "exponent scale must be positive")?;
        Ok(VolumeGrowth::ExpQuad { c })
    }

    pub fn exp_quad_log(c: f64) -> Result<Self, ModelError> {
        check_param("C", c, c > 0.0, "exponent scale must be positive")?;
        Ok(VolumeGrowth::ExpQuadLog { c })
    }

    pub fn finite_volume(v_total: f64) -> Result<Self, ModelError> {
        check_param("V", v_total, v_total > 0.0, "total volume must be positive")?;
        Ok(VolumeGrowth::FiniteVolume { v_total })
    }

    /// Smallest radius at which the law is defined.
    pub fn domain_min(&self) -> f64 {
        match self {
            // r^2 ln r decreases below 1/sqrt(e); the family starts where it is monotone.
            VolumeGrowth::ExpQuadLog { .. } => 1.0,
            VolumeGrowth::Tabulated(t) => t.r_first,
            _ => 0.0,
        }
    }

    /// ln |B(r)|.
    pub fn log_ball_volume(&self, r: f64) -> Result<f64, ModelError> {
        let min = self.domain_min();
        if !r.is_finite() || r < min || r <= 0.0 {
            return Err(ModelError::Domain { r, min: if min > 0.0 { min } else { f64::MIN_POSITIVE } });
        }
        match self {
            VolumeGrowth::Power { c, d } => Ok(c.ln() + d * r.ln()),
            VolumeGrowth::ExpPower { c, alpha } => Ok(c * r.powf(*alpha)),
            VolumeGrowth::ExpQuad { c } => Ok(c * r * r),
            VolumeGrowth::ExpQuadLog { c } => Ok(c * r * r * r.ln()),
            VolumeGrowth::FiniteVolume { v_total } => Ok(v_total.ln() + (-(-r).exp_m1()).ln()),
            VolumeGrowth::Tabulated(t) => Ok(t.log_volume(r)),
            VolumeGrowth::FromManifold(m) => m.log_ball_volume(r),
        }
    }

    /// True when a tabulated law answers `r` by extrapolation beyond its grid.
    pub fn is_extrapolating(&self, r: f64) -> bool {
        match self {
            VolumeGrowth::Tabulated(t) => t.extrapolates(r),
            VolumeGrowth::FromManifold(m) => m.is_extrapolating(r),
            _ => false,
        }
    }

    /// Canonical spec string, parseable by `parse_model`.
    pub fn spec_string(&self) -> String {
        match self {
            VolumeGrowth::Power { c, d } => format!("power:C={c},D={d}"),
            VolumeGrowth::ExpPower { c, alpha } => format!("exppower:C={c},alpha={alpha}"),
            VolumeGrowth::ExpQuad { c } => format!("expquad:C={c}"),
            VolumeGrowth::ExpQuadLog { c } => format!("expquadlog:C={c}"),
            VolumeGrowth::FiniteVolume { v_total } => format!("finitevolume:V={v_total}"),
            VolumeGrowth::Tabulated(t) => match &t.source {
                Some(p) => format!("tabulated:path={p}"),
                None => "tabulated:grid".to_string(),
            },
            VolumeGrowth::FromManifold(m) => m.spec_string(),
        }
    }
}

impl fmt::Display for VolumeGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

// ---------------------------------------------------------------------------
// Model mini-language.
// ---------------------------------------------------------------------------

fn spec_err(spec: &str, reason: impl Into<String>) -> ModelError {
    ModelError::Spec { spec: spec.to_string(), reason: reason.into() }
}

fn parse_kv_args<'a>(spec: &str, args: &'a str) -> Result<Vec<(&'a str, &'a str)>, ModelError> {
    let mut out = Vec::new();
    for item in args.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| spec_err(spec, format!("expected key=value, found `{item}`")))?;
        out.push((k.trim(), v.trim()));
    }
    Ok(out)
}

struct Args<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
    used: Vec<bool>,
}

impl<'a> Args<'a> {
    fn new(spec: &'a str, args: &'a str) -> Result<Self, ModelError> {
        let pairs = parse_kv_args(spec, args)?;
        let used = vec![false; pairs.len()];
        Ok(Args { spec, pairs, used })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        for (i, (k, v)) in self.pairs.iter().enumerate() {
            if k.eq_ignore_ascii_case(key) && !self.used[i] {
                self.used[i] = true;
                return Some(v);
            }
        }
        None
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ModelError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| spec_err(self.spec, format!("`{key}` must be numeric, found `{v}`"))),
        }
    }

    fn require(&mut self, key: &str) -> Result<f64, ModelError> {
        self.number(key)?.ok_or_else(|| spec_err(self.spec, format!("missing required key `{key}`")))
    }

    fn finish(self) -> Result<(), ModelError> {
        for (i, (k, _)) in self.pairs.iter().enumerate() {
            if !self.used[i] {
                return Err(spec_err(self.spec, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

/// Parse a volume growth spec such as `power:C=1,D=2` or
/// `manifold:hyperbolic,n=3,kappa=1`.
pub fn parse_model(spec: &str) -> Result<VolumeGrowth, ModelError> {
    let trimmed = spec.trim();
    let (family, rest) = trimmed.split_once(':').unwrap_or((trimmed, ""));
    match family.to_ascii_lowercase().as_str() {
        "power" => {
            let mut args = Args::new(spec, rest)?;
            let c = args.number("C")?.unwrap_or(1.0);
            let d = args.require("D")?;
            args.finish()?;
            VolumeGrowth::power(c, d)
        }
        "exppower" => {
            let mut args = Args::new(spec, rest)?;
            let c = args.number("C")?.unwrap_or(1.0);
            let alpha = args.require("alpha")?;
            args.finish()?;
            VolumeGrowth::exp_power(c, alpha)
        }
        "expquad" => {
            let mut args = Args::new(spec, rest)?;
            let c = args.number("C")?.unwrap_or(1.0);
            args.finish()?;
            VolumeGrowth::exp_quad(c)
        }
        "expquadlog" => {
            let mut args = Args::new(spec, rest)?;
            let c = args.number("C")?.unwrap_or(1.0);
            args.finish()?;
            VolumeGrowth::exp_quad_log(c)
        }
        "finitevolume" => {
            let mut args = Args::new(spec, rest)?;
            let v = args.require("V")?;
            args.finish()?;
            VolumeGrowth::finite_volume(v)
        }
        "tabulated" => {
            let mut args = Args::new(spec, rest)?;
            let path = args
                .take("path")
                .ok_or_else(|| spec_err(spec, "tabulated law needs `path=<file>`"))?;
            args.finish()?;
            Ok(VolumeGrowth::Tabulated(TabulatedLaw::from_file(path)?))
        }
        "manifold" => Ok(VolumeGrowth::FromManifold(parse_manifold(rest)?)),
        other => Err(spec_err(
            spec,
            format!(
                "unknown family `{other}` (expected power, exppower, expquad, expquadlog, \
                 finitevolume, tabulated, or manifold)"
            ),
        )),
    }
}

/// Parse a manifold spec such as `euclidean,n=2` or `hyperbolic,n=3,kappa=1`.
/// A leading `manifold:` prefix is accepted.
pub fn parse_manifold(spec: &str) -> Result<Manifold, ModelError> {
    let trimmed = spec.trim().strip_prefix("manifold:").unwrap_or(spec.trim());
    let mut parts = trimmed.splitn(2, ',');
    let kind = parts.next().unwrap_or("").trim().to_ascii_lowercase();
    let rest = parts.next().unwrap_or("");
    let mut args = Args::new(spec, rest)?;
    let manifold = match kind.as_str() {
        "euclidean" => {
            let n = args.require("n")? as u32;
            Manifold::euclidean(n)
        }
        "hyperbolic" => {
            let n = args.require("n")? as u32;
            let kappa = args.number("kappa")?.unwrap_or(1.0);
            Manifold::hyperbolic(n, kappa)
        }
        "cusp" => {
            let n = args.require("n")? as u32;
            let a = args.require("a")?;
            let r0 = args.number("r0")?.unwrap_or(1.0);
            Manifold::cusp(n, a, r0)
        }
        "warpfile" => {
            let n = args.require("n")? as u32;
            let path = args
                .take("path")
                .ok_or_else(|| spec_err(spec, "warpfile manifold needs `path=<file>`"))?;
            let warp = TabulatedWarp::from_file(path)?;
            Manifold::new(n, Warp::Tabulated(warp))
        }
        other => Err(spec_err(
            spec,
            format!("unknown manifold kind `{other}` (expected euclidean, hyperbolic, cusp, or warpfile)"),
        ))?,
    }?;
    args.finish()?;
    Ok(manifold)
}

/// The closed-form and manifold-backed laws exercised by the standard test
/// batteries, with their canonical spec strings.
pub fn builtin_models() -> Vec<VolumeGrowth> {
    let mut list = vec![
        VolumeGrowth::power(1.0, 2.0).unwrap(),
        VolumeGrowth::power(1.0, 3.0).unwrap(),
        VolumeGrowth::power(1.0, 10.0).unwrap(),
        VolumeGrowth::exp_power(1.0, 0.5).unwrap(),
        VolumeGrowth::exp_power(1.0, 1.0).unwrap(),
        VolumeGrowth::exp_quad(1.0).unwrap(),
        VolumeGrowth::exp_quad_log(1.0).unwrap(),
        VolumeGrowth::finite_volume(100.0).unwrap(),
        VolumeGrowth::FromManifold(Manifold::euclidean(2).unwrap()),
        VolumeGrowth::FromManifold(Manifold::hyperbolic(3, 1.0).unwrap()),
        VolumeGrowth::FromManifold(Manifold::cusp(2, 1.0, 1.0).unwrap()),
    ];
    // A tabulated stand-in for the Euclidean plane, sampled on a geometric grid.
    let mut pts = Vec::new();
    let mut r = 1.0f64;
    while r <= 2.1e6 {
        pts.push((r, std::f64::consts::PI * r * r));
        r *= 1.6;
    }
    list.push(VolumeGrowth::Tabulated(TabulatedLaw::new(&pts).unwrap()));
    list
}
