//! Adaptive numerical integration on finite intervals.
//!
//! The workhorse is a globally adaptive Gauss–Kronrod scheme built on the
//! classic 7-point Gauss / 15-point Kronrod pair: each segment is scored by
//! `|K15 - G7|`, the worst segment is bisected, and the loop stops once the
//! summed error estimate clears the requested tolerance. Integrands here are
//! smooth away from the origin, so convergence is fast and the error estimate
//! is reliable.
//!
//! A fixed 32-point Gauss–Legendre rule is also exposed for panel integrals
//! whose magnitude is tracked in log space (see `models::Manifold`).

use std::collections::BinaryHeap;

/// Abscissae of the 15-point Kronrod rule on [-1, 1], positive half.
/// Even indices (0, 2, ...) are the Kronrod-only points; odd indices are the
/// embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Gauss weights for the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// 32-point Gauss–Legendre rule on [-1, 1], positive half (node, weight).
const GL32: [(f64, f64); 16] = [
    (4.83076656877383104e-02, 9.65400885147278121e-02),
    (1.44471961582796488e-01, 9.56387200792748332e-02),
    (2.39287362252137065e-01, 9.38443990808045664e-02),
    (3.31868602282127667e-01, 9.11738786957638631e-02),
    (4.21351276130635333e-01, 8.76520930044039082e-02),
    (5.06899908932229359e-01, 8.33119242269468457e-02),
    (5.87715757240762304e-01, 7.81938957870703111e-02),
    (6.63044266930215231e-01, 7.23457941088484491e-02),
    (7.32182118740289711e-01, 6.58222227763617523e-02),
    (7.94483795967942386e-01, 5.86840934785357038e-02),
    (8.49367613732569970e-01, 5.09980592623762441e-02),
    (8.96321155766052202e-01, 4.28358980222264263e-02),
    (9.34906075937739667e-01, 3.42738629130216257e-02),
    (9.64762255587506390e-01, 2.53920653092624266e-02),
    (9.85611511545268382e-01, 1.62743947309059653e-02),
    (9.97263861849481570e-01, 7.01861000946929839e-03),
];

/// Default relative tolerance for cumulative rate integrals.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor below which error control stops tightening.
pub const ABS_TOL: f64 = 1e-14;
/// Evaluation budget for a single adaptive integral.
pub const MAX_EVALS: u32 = 500_000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum QuadError {
    #[error("integrand returned a non-finite value near x = {x}")]
    NonFinite { x: f64 },
    #[error(
        "integral over [{a}, {b}] did not converge within {evals} evaluations \
         (error estimate {error:.3e})"
    )]
    BudgetExceeded { a: f64, b: f64, error: f64, evals: u32 },
    #[error("invalid integration bounds [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: mid });
    }
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;

    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let flo = f(mid - dx);
        let fhi = f(mid + dx);
        if !flo.is_finite() || !fhi.is_finite() {
            return Err(QuadError::NonFinite { x: if flo.is_finite() { mid + dx } else { mid - dx } });
        }
        let pair = flo + fhi;
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }

    let value = kron * half;
    // Standard Kronrod error heuristic: the raw difference, softened by the
    // 1.5-power rescaling so it is not wildly pessimistic on smooth integrands.
    let raw = ((kron - gauss) * half).abs();
    let scale = value.abs().max(1e-300);
    let error = if raw > 0.0 {
        (scale * (200.0 * raw / scale).powf(1.5)).min(raw.max(f64::EPSILON * scale))
    } else {
        0.0
    };
    Ok(Segment { a, b, value, error })
}

/// Integrate `f` over [a, b] to the requested tolerances.
///
/// Accepts `a == b` (zero integral). The accepted error is
/// `max(abs_tol, rel_tol * |result|)`, re-evaluated as the running estimate
/// changes.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature, QuadError> {
    if !a.is_finite() || !b.is_finite() || b < a {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }

    let mut evals: u32 = 15;
    let first = gauss_kronrod(&f, a, b)?;
    let mut total_value = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while total_error > abs_tol.max(rel_tol * total_value.abs()) {
        if evals >= MAX_EVALS {
            return Err(QuadError::BudgetExceeded { a, b, error: total_error, evals });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod(&f, worst.a, mid)?;
        let right = gauss_kronrod(&f, mid, worst.b)?;
        evals += 30;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    Ok(Quadrature { value: total_value, abs_error: total_error, evaluations: evals })
}

/// Convenience wrapper with the module default tolerances.
pub fn integrate_default<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Quadrature, QuadError> {
    integrate(f, a, b, REL_TOL, ABS_TOL)
}

/// 32-point Gauss–Legendre approximation of ∫_a^b f.
pub fn gauss_legendre_32<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for &(x, w) in GL32.iter() {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}

/// log(exp(x) + exp(y)) without overflow; tolerates -inf on either side.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln ∫_a^b exp(g(s)) ds by 32-point Gauss–Legendre after factoring out the
/// largest sampled exponent. Valid when g varies by no more than a few tens
/// of units over the panel; callers split panels until that holds.
pub fn log_integral_exp_gl32<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut vals = [0.0f64; 32];
    let mut gmax = f64::NEG_INFINITY;
    for (i, &(x, _)) in GL32.iter().enumerate() {
        let lo = g(mid - half * x);
        let hi = g(mid + half * x);
        vals[2 * i] = lo;
        vals[2 * i + 1] = hi;
        gmax = gmax.max(lo).max(hi);
    }
    if gmax == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for (i, &(_, w)) in GL32.iter().enumerate() {
        sum += w * ((vals[2 * i] - gmax).exp() + (vals[2 * i + 1] - gmax).exp());
    }
    gmax + (sum * half).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact() {
        let q = integrate_default(|x| x * x * x, 0.0, 2.0).unwrap();
        assert!((q.value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sine_over_half_period() {
        let q = integrate_default(f64::sin, 0.0, std::f64::consts::PI).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn logarithmic_integrand() {
        // ∫_1^e ln x dx = 1
        let q = integrate_default(f64::ln, 1.0, std::f64::consts::E).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand_converges() {
        // ∫_0^1 1/(x + 1e-4) dx = ln(1.0001/1e-4)
        let exact = (1.0001f64 / 1e-4).ln();
        let q = integrate_default(|x| 1.0 / (x + 1e-4), 0.0, 1.0).unwrap();
        assert!((q.value - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = integrate_default(|x| x, 3.0, 3.0).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn reversed_interval_rejected() {
        assert!(matches!(
            integrate_default(|x| x, 1.0, 0.0),
            Err(QuadError::BadInterval { .. })
        ));
    }

    #[test]
    fn non_finite_integrand_reported() {
        assert!(matches!(
            integrate_default(|x| 1.0 / x, -1.0, 1.0),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn gl32_matches_adaptive_on_smooth_function() {
        let f = |x: f64| (x * 0.7).cos() * (1.0 + x * x);
        let adaptive = integrate_default(f, 0.3, 2.9).unwrap().value;
        let fixed = gauss_legendre_32(&f, 0.3, 2.9);
        assert!((adaptive - fixed).abs() < 1e-12);
    }

    #[test]
    fn log_integral_matches_plain_integral() {
        // ∫_0^1 e^(3s) ds = (e^3 - 1)/3
        let exact = ((3.0f64).exp() - 1.0) / 3.0;
        let got = log_integral_exp_gl32(&|s| 3.0 * s, 0.0, 1.0);
        assert!((got - exact.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_add_exp_handles_extremes() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        let v = log_add_exp(-1000.0, -1000.0);
        assert!((v - (-1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        // Far-apart magnitudes: the small term vanishes at f64 resolution.
        assert_eq!(log_add_exp(0.0, -800.0), 0.0);
    }
}
