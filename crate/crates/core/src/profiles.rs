//! Scalar profile functions: the radial profile ρ, the vertical bump β and the
//! cut-off η that localizes the perturbation.
//!
//! All three are piecewise polynomials with at least C³ regularity. ρ is stored
//! through its derivative ρ′ on a handful of segments; each segment keeps ρ′ in a
//! local coordinate measured from its right end so that ρ itself is recovered
//! by exact polynomial integration without cancellation near the support edge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{smoothstep5, smoothstep7, Poly};
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("infeasible profile shape: {0}")]
    Infeasible(String),
}

/// Which structure a radial profile is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Contact,
    Symplectic,
}

/// A one-dimensional profile with an analytic first derivative.
pub trait Profile<T> {
    fn value_and_slope(&self, x: T) -> (T, T);
}

/// Free shape parameters of the radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoShape<T> {
    /// Exponent m of the rising ramp ρ′ = s·tᵐ(1 + m(1 − t)) on [0, a]. Larger
    /// values make the cap at r = a sharper.
    pub sharpness: u32,
    /// Depth of the negative plateau of ρ′ as a fraction of the slope cap.
    pub plateau_depth: T,
}

impl<T: Real> Default for RhoShape<T> {
    fn default() -> Self {
        Self {
            sharpness: 8,
            plateau_depth: lit(0.9),
        }
    }
}

#[derive(Debug, Clone)]
struct Segment<T> {
    start: T,
    end: T,
    // ρ′ as a polynomial in τ = (end − r)/(end − start)
    slope: Poly<T>,
    slope_dtau: Poly<T>,
    slope_integral: Poly<T>,
    rho_end: T,
}

impl<T: Real> Segment<T> {
    fn new(start: T, end: T, slope: Poly<T>, rho_end: T) -> Self {
        let slope_dtau = slope.derivative();
        let slope_integral = slope.integral();
        Self {
            start,
            end,
            slope,
            slope_dtau,
            slope_integral,
            rho_end,
        }
    }

    fn width(&self) -> T {
        self.end - self.start
    }

    fn rho_start(&self) -> T {
        self.rho_end - self.width() * self.slope_integral.eval(T::one())
    }

    fn eval(&self, r: T) -> (T, T, T) {
        let w = self.width();
        let tau = (self.end - r) / w;
        (
            self.rho_end - w * self.slope_integral.eval(tau),
            self.slope.eval(tau),
            -self.slope_dtau.eval(tau) / w,
        )
    }
}

/// The radial profile ρ of the Hamiltonian h = β(z)·ρ(e).
///
/// ρ′ rises on [0, a] to the cap π/(2k), touching it quadratically at r = a only,
/// then falls to a negative plateau and returns to zero at R²/2 where the
/// support ends. ρ(a) = (π/(2k))·a holds exactly.
#[derive(Debug, Clone)]
pub struct RhoProfile<T> {
    k: u32,
    radius: T,
    a: T,
    slope_cap: T,
    variant: Variant,
    shape: RhoShape<T>,
    knots: Vec<(T, T)>,
    segments: Vec<Segment<T>>,
}

/// Summary of a dense grid check of the radial profile invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoCertificate {
    pub samples: usize,
    pub max_slope_excess: f64,
    pub min_slope_margin: f64,
    pub near_cap_outside_window: usize,
    pub min_tangent_gap: f64,
    pub tangent_zeros_outside_window: usize,
    pub min_value: f64,
    pub value_at_a_error: f64,
    pub support_violation: f64,
    pub passed: bool,
}

/// Tolerance on slope-cap and tangent-gap inequalities.
pub const RHO_INEQUALITY_TOL: f64 = 1e-12;
/// Half-width of the window around r = a where equality may be attained.
pub const RHO_EQUALITY_WINDOW: f64 = 1e-6;

impl<T: Real> RhoProfile<T> {
    pub fn build(k: u32, radius: T, a: T, variant: Variant) -> Result<Self, ProfileError> {
        Self::build_with_shape(k, radius, a, variant, RhoShape::default())
    }

    pub fn build_with_shape(
        k: u32,
        radius: T,
        a: T,
        variant: Variant,
        shape: RhoShape<T>,
    ) -> Result<Self, ProfileError> {
        if k == 0 {
            return Err(ProfileError::Domain("k must be a positive integer".into()));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(ProfileError::Domain(format!(
                "R must be positive, got {radius}"
            )));
        }
        let support = radius * radius * lit(0.5);
        if !(a > T::zero() && a < support) {
            return Err(ProfileError::Domain(format!(
                "a must satisfy 0 < a < R²/2 = {support}, got {a}"
            )));
        }
        if shape.sharpness < 2 {
            return Err(ProfileError::Domain("sharpness must be at least 2".into()));
        }
        let q = shape.plateau_depth;
        if !(q > T::zero() && q < T::one()) {
            return Err(ProfileError::Domain(format!(
                "plateau depth must lie in (0, 1), got {q}"
            )));
        }

        let s = T::PI() / from_usize::<T>(2 * k as usize);
        let m = shape.sharpness as usize;
        let mf = from_usize::<T>(m);

        // rising ramp s·[(1+m)tᵐ − m tᵐ⁺¹], t = r/a
        let mut ramp = vec![T::zero(); m + 2];
        ramp[m] = s * (mf + T::one());
        ramp[m + 1] = -s * mf;
        let ramp = Poly::new(ramp).reflect();
        let jerk_at_a = -s * mf * (mf + T::one()) / (a * a);

        let p = q * s;
        let span = support - a;
        if !(p * span > s * a) {
            return Err(ProfileError::Infeasible(format!(
                "ρ(a) = πa/(2k) cannot be cancelled by a slope above −π/(2k) on [a, R²/2]; \
                 need a < {} for plateau depth {q}",
                to_display(q * support / (T::one() + q))
            )));
        }

        let descent = |w: T| {
            Poly::hermite5(
                [-p, T::zero(), T::zero()],
                [s, T::zero(), w * w * jerk_at_a],
            )
        };
        let ascent = smoothstep5::<T>().scale(-p);
        let ascent_integral = ascent.integral().eval(T::one());
        // ρ(a) reconstructed from ρ(R²/2) = 0 with equal descent/ascent widths w
        let rho_a_from_right = |w: T| {
            let plateau = span - w - w;
            -w * ascent_integral + p * plateau - w * descent(w).integral().eval(T::one())
        };
        let target = s * a;
        let mut lo = T::zero();
        let mut hi = span * lit(0.5);
        if rho_a_from_right(hi) > target {
            return Err(ProfileError::Infeasible(
                "no descent width balances the integral of ρ′".into(),
            ));
        }
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if rho_a_from_right(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (lo + hi) * lit(0.5);

        let mut segments = Vec::with_capacity(4);
        let tail = Segment::new(support - w, support, ascent, T::zero());
        let plateau_end = tail.rho_start();
        let plateau_start = a + w;
        let mut right = vec![tail];
        let mut rho_next = plateau_end;
        if support - w > plateau_start {
            let plateau = Segment::new(plateau_start, support - w, Poly::constant(-p), plateau_end);
            rho_next = plateau.rho_start();
            right.push(plateau);
        }
        right.push(Segment::new(a, plateau_start, descent(w), rho_next));
        right.reverse();
        segments.push(Segment::new(T::zero(), a, ramp, target));
        segments.extend(right);

        let mut knots: Vec<(T, T)> = segments
            .iter()
            .map(|seg| (seg.start, seg.rho_start()))
            .collect();
        knots.push((support, T::zero()));

        let profile = Self {
            k,
            radius,
            a,
            slope_cap: s,
            variant,
            shape,
            knots,
            segments,
        };
        let check = profile.certify(4001);
        if !check.passed {
            return Err(ProfileError::Infeasible(format!(
                "constructed profile fails its invariant check: {check:?}"
            )));
        }
        Ok(profile)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn slope_cap(&self) -> T {
        self.slope_cap
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn shape(&self) -> RhoShape<T> {
        self.shape
    }

    /// Right end of the support, R²/2.
    pub fn support_end(&self) -> T {
        self.radius * self.radius * lit(0.5)
    }

    /// (position, ρ(position)) at every segment boundary.
    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    /// Returns (ρ, ρ′, ρ″) at r.
    pub fn eval3(&self, r: T) -> (T, T, T) {
        if r >= self.support_end() {
            return (T::zero(), T::zero(), T::zero());
        }
        let seg = self
            .segments
            .iter()
            .find(|seg| r < seg.end)
            .unwrap_or(&self.segments[0]);
        seg.eval(r)
    }

    pub fn value(&self, r: T) -> T {
        self.eval3(r).0
    }

    pub fn slope(&self, r: T) -> T {
        self.eval3(r).1
    }

    /// Dense grid check of the profile invariants on [0, R²/2] (the grid always
    /// contains r = a).
    pub fn certify(&self, samples: usize) -> RhoCertificate {
        let support = self.support_end();
        let s = self.slope_cap;
        let (tol, window) = certification_tolerances::<T>();
        let n = samples.max(2);
        let mut max_slope_excess = T::neg_infinity();
        let mut min_slope_margin = T::infinity();
        let mut near_cap_outside = 0usize;
        let mut min_gap = T::infinity();
        let mut gap_zeros = 0usize;
        let mut min_value = T::infinity();
        let mut grid: Vec<T> = (0..n)
            .map(|i| support * from_usize::<T>(i) / from_usize::<T>(n - 1))
            .collect();
        grid.push(self.a);
        for &r in &grid {
            let (rho, slope, _) = self.eval3(r);
            max_slope_excess = max_slope_excess.max(slope - s);
            min_slope_margin = min_slope_margin.min(slope + s);
            let off_a = (r - self.a).abs() > window;
            if slope >= s - tol && off_a {
                near_cap_outside += 1;
            }
            let gap = rho - slope * r;
            min_gap = min_gap.min(gap);
            if off_a && r > T::zero() && r < support && gap <= T::zero() {
                gap_zeros += 1;
            }
            min_value = min_value.min(rho);
        }
        let value_at_a_error = match self.variant {
            Variant::Contact => (self.value(self.a) - s * self.a).abs(),
            Variant::Symplectic => T::zero(),
        };
        let (v_end, d_end, _) = self.eval3(support);
        let (v_in, d_in, dd_in) = self.segments.last().map(|seg| seg.eval(support)).unwrap();
        let support_violation = v_end
            .abs()
            .max(d_end.abs())
            .max(v_in.abs())
            .max(d_in.abs())
            .max(dd_in.abs());
        let passed = max_slope_excess <= tol
            && min_slope_margin > T::zero()
            && near_cap_outside == 0
            && min_gap >= -tol
            && gap_zeros == 0
            && min_value >= -tol
            && value_at_a_error <= tol
            && support_violation <= tol
            && (self.slope(self.a) - s).abs() <= tol;
        RhoCertificate {
            samples: grid.len(),
            max_slope_excess: to_display(max_slope_excess),
            min_slope_margin: to_display(min_slope_margin),
            near_cap_outside_window: near_cap_outside,
            min_tangent_gap: to_display(min_gap),
            tangent_zeros_outside_window: gap_zeros,
            min_value: to_display(min_value),
            value_at_a_error: to_display(value_at_a_error),
            support_violation: to_display(support_violation),
            passed,
        }
    }
}

impl<T: Real> Profile<T> for RhoProfile<T> {
    fn value_and_slope(&self, x: T) -> (T, T) {
        let (v, d, _) = self.eval3(x);
        (v, d)
    }
}

/// Inequality tolerance and equality window, widened for scalar types coarser than `f64`.
fn certification_tolerances<T: Real>() -> (T, T) {
    let tol = lit::<T>(RHO_INEQUALITY_TOL).max(T::epsilon() * lit(64.0));
    let window =
        lit::<T>(RHO_EQUALITY_WINDOW) * (tol / lit(RHO_INEQUALITY_TOL)).sqrt().max(T::one());
    (tol, window)
}

fn to_display<T: Real>(x: T) -> f64 {
    crate::scalar::to_f64(x)
}

/// Vertical bump β(z) = (1 − (z/w)²)⁴ on |z| < w = R/2, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaProfile<T> {
    half_width: T,
}

/// Summary of a dense grid check of the bump invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaCertificate {
    pub samples: usize,
    pub min_value: f64,
    pub max_value: f64,
    pub max_off_center: f64,
    pub sign_violations: usize,
    pub passed: bool,
}

const BETA_POWER: i32 = 4;

impl<T: Real> BetaProfile<T> {
    pub fn build(radius: T) -> Result<Self, ProfileError> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(ProfileError::Domain(format!(
                "R must be positive, got {radius}"
            )));
        }
        Ok(Self {
            half_width: radius * lit(0.5),
        })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn eval(&self, z: T) -> (T, T) {
        let w = self.half_width;
        if z.abs() >= w {
            return (T::zero(), T::zero());
        }
        let u = T::one() - (z / w) * (z / w);
        let value = u.powi(BETA_POWER);
        let slope =
            from_usize::<T>(BETA_POWER as usize) * u.powi(BETA_POWER - 1) * lit::<T>(-2.0) * z
                / (w * w);
        (value, slope)
    }

    /// Checks β ∈ [0, 1], β < 1 away from 0 and the sign pattern of β′ on a
    /// symmetric grid over [−w, w]; the off-center maximum is taken over
    /// |z| ≥ w/50.
    pub fn certify(&self, samples: usize) -> BetaCertificate {
        let w = self.half_width;
        let n = samples.max(3);
        let mut min_value = T::infinity();
        let mut max_value = T::neg_infinity();
        let mut max_off = T::neg_infinity();
        let mut sign_violations = 0usize;
        let inner = w * lit(0.02);
        for i in 0..n {
            let z = -w + (w + w) * from_usize::<T>(i) / from_usize::<T>(n - 1);
            let (v, d) = self.eval(z);
            min_value = min_value.min(v);
            max_value = max_value.max(v);
            if z.abs() >= inner {
                max_off = max_off.max(v);
            }
            let interior = z.abs() < w && z != T::zero();
            if interior
                && (v <= T::zero()
                    || (z < T::zero() && d <= T::zero())
                    || (z > T::zero() && d >= T::zero()))
            {
                sign_violations += 1;
            }
        }
        let (v0, d0) = self.eval(T::zero());
        let passed = min_value >= T::zero()
            && max_value <= T::one()
            && max_off < T::one()
            && sign_violations == 0
            && v0 == T::one()
            && d0 == T::zero();
        BetaCertificate {
            samples: n,
            min_value: to_display(min_value),
            max_value: to_display(max_value),
            max_off_center: to_display(max_off),
            sign_violations,
            passed,
        }
    }
}

impl<T: Real> Profile<T> for BetaProfile<T> {
    fn value_and_slope(&self, x: T) -> (T, T) {
        self.eval(x)
    }
}

/// Value and partial derivatives of η with respect to the weighted energy e,
/// the squared radius r₁² of the first plane and z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSample<T> {
    pub value: T,
    pub d_e: T,
    pub d_r1_sq: T,
    pub d_z: T,
}

/// Cut-off η = η_E(e)·η_R(r₁²)·η_Z(z), equal to 1 on
/// W₁ = {|e − a| ≤ δ_in, |z| ≤ δ_in, r₁² ≥ a − δ_out} and vanishing outside
/// W₂ = {|e − a| < δ_out, |z| < δ_out, r₁² > r_min²}.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaCutoff<T> {
    a: T,
    delta_inner: T,
    delta_outer: T,
    r_min: T,
    transition: Poly<T>,
    transition_slope: Poly<T>,
}

impl<T: Real> EtaCutoff<T> {
    pub fn build(a: T, delta_inner: T, delta_outer: T, r_min: T) -> Result<Self, ProfileError> {
        if !(delta_inner > T::zero() && delta_inner < delta_outer) {
            return Err(ProfileError::Domain(format!(
                "need 0 < δ_inner < δ_outer, got {delta_inner}, {delta_outer}"
            )));
        }
        if !(r_min > T::zero()) {
            return Err(ProfileError::Domain("r_min must be positive".into()));
        }
        if !(r_min * r_min < a - delta_outer) {
            return Err(ProfileError::Domain(format!(
                "W₂ reaches the axis: r_min² = {} must be below a − δ_outer = {}",
                r_min * r_min,
                a - delta_outer
            )));
        }
        let transition = smoothstep7::<T>();
        let transition_slope = transition.derivative();
        Ok(Self {
            a,
            delta_inner,
            delta_outer,
            r_min,
            transition,
            transition_slope,
        })
    }

    /// Default neighborhoods: δ_inner = 0.02, δ_outer = 0.05, r_min² = a/2.
    pub fn with_defaults(a: T) -> Result<Self, ProfileError> {
        Self::build(a, lit(0.02), lit(0.05), (a * lit(0.5)).sqrt())
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn delta_inner(&self) -> T {
        self.delta_inner
    }

    pub fn delta_outer(&self) -> T {
        self.delta_outer
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    fn step(&self, x: T) -> (T, T) {
        if x <= T::zero() {
            (T::zero(), T::zero())
        } else if x >= T::one() {
            (T::one(), T::zero())
        } else {
            (self.transition.eval(x), self.transition_slope.eval(x))
        }
    }

    // 1 for |u| ≤ δ_in, 0 for |u| ≥ δ_out
    fn band(&self, u: T) -> (T, T) {
        let width = self.delta_outer - self.delta_inner;
        let (v, d) = self.step((self.delta_outer - u.abs()) / width);
        let sign = if u > T::zero() { T::one() } else { -T::one() };
        (v, -d * sign / width)
    }

    fn r1_sq_upper(&self) -> T {
        self.a - self.delta_outer
    }

    /// η and its partials; `z` is `None` for the symplectic structure.
    pub fn eval(&self, e: T, r1_sq: T, z: Option<T>) -> EtaSample<T> {
        let zero = EtaSample {
            value: T::zero(),
            d_e: T::zero(),
            d_r1_sq: T::zero(),
            d_z: T::zero(),
        };
        let (ve, de) = self.band(e - self.a);
        if ve == T::zero() {
            return zero;
        }
        let (vz, dz) = match z {
            Some(z) => self.band(z),
            None => (T::one(), T::zero()),
        };
        if vz == T::zero() {
            return zero;
        }
        let floor = self.r_min * self.r_min;
        let (vr, dr) = self.step((r1_sq - floor) / (self.r1_sq_upper() - floor));
        let dr = dr / (self.r1_sq_upper() - floor);
        EtaSample {
            value: ve * vz * vr,
            d_e: de * vz * vr,
            d_r1_sq: ve * vz * dr,
            d_z: ve * dz * vr,
        }
    }

    /// True where η ≡ 1 (the closed region W₁).
    pub fn in_core(&self, e: T, r1_sq: T, z: Option<T>) -> bool {
        (e - self.a).abs() <= self.delta_inner
            && z.map_or(true, |z| z.abs() <= self.delta_inner)
            && r1_sq >= self.r1_sq_upper()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rho() -> RhoProfile<f64> {
        RhoProfile::build(2, 1.0, 0.2, Variant::Contact).unwrap()
    }

    #[test]
    fn rho_matches_tangent_line_at_a() {
        let p = rho();
        let (v, d) = p.value_and_slope(0.2);
        assert!((v - PI / 4.0 * 0.2).abs() < 1e-14);
        assert!((v - 0.15708).abs() < 1e-5);
        assert!((d - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn rho_vanishes_at_support_edge() {
        let p = rho();
        assert_eq!(p.value_and_slope(0.5), (0.0, 0.0));
        assert_eq!(p.value_and_slope(0.75), (0.0, 0.0));
        let (v, d, dd) = p.eval3(0.5 - 1e-9);
        assert!(v.abs() < 1e-20 && d.abs() < 1e-20 && dd.abs() < 1e-10);
    }

    #[test]
    fn rho_tangent_gap_positive_off_a() {
        // independent sampling oracle over (0, 0.5) \ {a}
        let p = rho();
        let mut min_gap = f64::INFINITY;
        for i in 1..10_000 {
            let r = 0.5 * i as f64 / 10_000.0;
            if (r - 0.2).abs() < 1e-9 {
                continue;
            }
            let (v, d) = p.value_and_slope(r);
            min_gap = min_gap.min(v - d * r);
        }
        assert!(min_gap > 0.0, "min gap {min_gap}");
    }

    #[test]
    fn rho_rejects_bad_a() {
        assert!(matches!(
            RhoProfile::<f64>::build(2, 1.0, 0.5, Variant::Contact),
            Err(ProfileError::Domain(_))
        ));
        assert!(matches!(
            RhoProfile::<f64>::build(2, 1.0, -0.1, Variant::Contact),
            Err(ProfileError::Domain(_))
        ));
        // inside (0, R²/2) but too close to the edge for the slope floor
        assert!(matches!(
            RhoProfile::<f64>::build(2, 1.0, 0.3, Variant::Contact),
            Err(ProfileError::Infeasible(_))
        ));
    }

    #[test]
    fn rho_knots_are_continuous() {
        let p = rho();
        for &(r, v) in p.knots() {
            let left = p.value(r - 1e-12);
            assert!((left - v).abs() < 1e-10, "jump at {r}: {left} vs {v}");
        }
    }

    #[test]
    fn rho_third_derivative_continuous_at_a() {
        let p = rho();
        let h = 1e-6;
        let curv = |r: f64| p.eval3(r).2;
        let left = (curv(0.2) - curv(0.2 - h)) / h;
        let right = (curv(0.2 + h) - curv(0.2)) / h;
        assert!((left - right).abs() / left.abs() < 1e-2, "{left} {right}");
    }

    #[test]
    fn beta_basics() {
        let b = BetaProfile::<f64>::build(1.0).unwrap();
        assert_eq!(b.eval(0.0), (1.0, 0.0));
        assert_eq!(b.eval(0.5), (0.0, 0.0));
        assert_eq!(b.eval(-0.5), (0.0, 0.0));
        let mut max = 0.0f64;
        for i in 0..10_000 {
            let z = 0.01 + 0.49 * i as f64 / 9_999.0;
            max = max.max(b.eval(z).0).max(b.eval(-z).0);
        }
        assert!(max < 1.0);
        assert!(BetaProfile::<f64>::build(0.0).is_err());
    }

    #[test]
    fn eta_regions() {
        let eta = EtaCutoff::<f64>::with_defaults(0.2).unwrap();
        assert_eq!(eta.eval(0.2, 0.2, Some(0.0)).value, 1.0);
        assert_eq!(eta.eval(0.2, 0.2, Some(0.1)).value, 0.0);
        assert_eq!(eta.eval(0.26, 0.26, Some(0.0)).value, 0.0);
        // monotone along the radial ray through the transition shell
        let mut prev = 1.0;
        for i in 0..=100 {
            let e = 0.22 + 0.03 * i as f64 / 100.0;
            let v = eta.eval(e, e, Some(0.0)).value;
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        let mid = eta.eval(0.235, 0.235, Some(0.0)).value;
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn eta_rejects_axis_contact() {
        assert!(EtaCutoff::<f64>::build(0.2, 0.02, 0.05, 0.4).is_err());
        assert!(EtaCutoff::<f64>::build(0.2, 0.05, 0.02, 0.1).is_err());
    }

    #[test]
    fn profiles_in_single_precision() {
        let p = RhoProfile::<f32>::build(2, 1.0, 0.2, Variant::Symplectic).unwrap();
        assert!((p.slope(0.2) - std::f32::consts::FRAC_PI_4).abs() < 1e-6);
        let b = BetaProfile::<f32>::build(1.0).unwrap();
        assert_eq!(b.eval(0.0), (1.0, 0.0));
    }
}
