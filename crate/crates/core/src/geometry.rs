//! The standard contact structure on ℝ²ⁿ⁺¹ and symplectic structure on ℝ²ⁿ, and
//! the Hamiltonian vector fields they assign to scalar functions.
//!
//! Coordinates are ordered (x₁, y₁, …, xₙ, yₙ) with a trailing z in the contact
//! case. The contact form is α₀ = ½Σ(xᵢdyᵢ − yᵢdxᵢ) + dz and the symplectic
//! form ω₀ = Σdxᵢ∧dyᵢ; note dα₀ = ω₀ on the first 2n coordinates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{BetaProfile, EtaCutoff, RhoProfile};
use crate::scalar::{lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("operation requires the {0} structure")]
    WrongStructure(&'static str),
}

/// Ambient structure of the phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Structure {
    Contact { n: usize },
    Symplectic { n: usize },
}

impl Structure {
    pub fn n(&self) -> usize {
        match *self {
            Structure::Contact { n } | Structure::Symplectic { n } => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Structure::Contact { n } => 2 * n + 1,
            Structure::Symplectic { n } => 2 * n,
        }
    }

    pub fn is_contact(&self) -> bool {
        matches!(self, Structure::Contact { .. })
    }

    /// Index of the z coordinate, if any.
    pub fn z_index(&self) -> Option<usize> {
        match *self {
            Structure::Contact { n } => Some(2 * n),
            Structure::Symplectic { .. } => None,
        }
    }

    pub fn check_len(&self, len: usize) -> Result<(), GeometryError> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Contact { n } => write!(f, "contact(n={n})"),
            Structure::Symplectic { n } => write!(f, "symplectic(n={n})"),
        }
    }
}

/// A point of ℝ²ⁿ⁺¹ or ℝ²ⁿ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint<T> {
    structure: Structure,
    coords: Vec<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(structure: Structure, coords: Vec<T>) -> Result<Self, GeometryError> {
        structure.check_len(coords.len())?;
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self { structure, coords })
    }

    pub fn origin(structure: Structure) -> Self {
        Self {
            structure,
            coords: vec![T::zero(); structure.dim()],
        }
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    pub fn z(&self) -> Option<T> {
        self.structure.z_index().map(|i| self.coords[i])
    }
}

/// A tangent vector, components in coordinate order.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T> {
    pub components: Vec<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(components: Vec<T>) -> Self {
        Self { components }
    }

    /// Unit vector along coordinate `i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut components = vec![T::zero(); dim];
        components[i] = T::one();
        Self { components }
    }
}

/// Weight Cᵢ of the i-th plane (0-based) in the quadric e.
pub fn plane_weight<T: Real>(i: usize) -> T {
    if i == 0 {
        T::one()
    } else {
        lit(0.5)
    }
}

/// e = x₁² + y₁² + Σ_{i≥2}(xᵢ² + yᵢ²)/2. A trailing z, if present, is ignored.
pub fn quadric_e<T: Real>(coords: &[T]) -> T {
    coords
        .chunks_exact(2)
        .enumerate()
        .fold(T::zero(), |acc, (i, w)| {
            acc + plane_weight::<T>(i) * (w[0] * w[0] + w[1] * w[1])
        })
}

/// α₀ evaluated at `p` on `v`.
pub fn alpha0<T: Real>(p: &[T], v: &[T]) -> Result<T, GeometryError> {
    if p.len() % 2 == 0 {
        return Err(GeometryError::WrongStructure("contact"));
    }
    if v.len() != p.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: p.len(),
            got: v.len(),
        });
    }
    let half = lit::<T>(0.5);
    let n = p.len() / 2;
    let mut acc = v[2 * n];
    for i in 0..n {
        acc = acc + half * (p[2 * i] * v[2 * i + 1] - p[2 * i + 1] * v[2 * i]);
    }
    Ok(acc)
}

/// dα₀(u, v) = Σ(u_{xᵢ}v_{yᵢ} − u_{yᵢ}v_{xᵢ}); this is also ω₀(u, v).
pub fn d_alpha0<T: Real>(u: &[T], v: &[T]) -> T {
    u.chunks_exact(2)
        .zip(v.chunks_exact(2))
        .fold(T::zero(), |acc, (a, b)| acc + a[0] * b[1] - a[1] * b[0])
}

/// Reeb field of α₀: ∂z everywhere.
pub fn reeb<T: Real>(p: &[T]) -> Result<TangentVector<T>, GeometryError> {
    if p.len() % 2 == 0 {
        return Err(GeometryError::WrongStructure("contact"));
    }
    Ok(TangentVector::unit(p.len(), p.len() - 1))
}

/// The basis {∂xᵢ + (yᵢ/2)∂z, ∂yᵢ − (xᵢ/2)∂z} of ξ = ker α₀ at `p`.
pub fn contact_plane_basis<T: Real>(p: &[T]) -> Vec<TangentVector<T>> {
    let dim = p.len();
    let n = dim / 2;
    let half = lit::<T>(0.5);
    let mut basis = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut u = vec![T::zero(); dim];
        u[2 * i] = T::one();
        u[dim - 1] = half * p[2 * i + 1];
        basis.push(TangentVector::new(u));
        let mut v = vec![T::zero(); dim];
        v[2 * i + 1] = T::one();
        v[dim - 1] = -half * p[2 * i];
        basis.push(TangentVector::new(v));
    }
    basis
}

/// Angular multiplier and shape of the perturbation Hamiltonian ε·G(θ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// G = ε(1 − cos(mθ)), the contact perturbation.
    OneMinusCos { multiplier: u32 },
    /// G = ε·cos(mθ), the symplectic perturbation.
    Cos { multiplier: u32 },
}

type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradientFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// A user-supplied Hamiltonian. Missing partials are taken by central
/// differences with step 1e−5.
#[derive(Clone)]
pub struct CustomHamiltonian<T> {
    value: ValueFn<T>,
    gradient: Option<GradientFn<T>>,
}

impl<T> fmt::Debug for CustomHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomHamiltonian")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// Finite-difference step for custom Hamiltonians without analytic partials.
pub const CUSTOM_FD_STEP: f64 = 1e-5;

/// Scalar Hamiltonians with analytic partials.
#[derive(Debug, Clone)]
pub enum ScalarHamiltonian<T> {
    /// h = β(z)·ρ(e); β is absent in the symplectic case.
    Radial {
        rho: RhoProfile<T>,
        beta: Option<BetaProfile<T>>,
        structure: Structure,
    },
    /// g_ε = η·G(θ) with θ the polar angle of (x₁, y₁).
    Perturbation {
        eta: EtaCutoff<T>,
        epsilon: T,
        kind: PerturbationKind,
        structure: Structure,
    },
    Custom(CustomHamiltonian<T>),
}

impl<T: Real> ScalarHamiltonian<T> {
    pub fn radial_contact(rho: RhoProfile<T>, beta: BetaProfile<T>, n: usize) -> Self {
        ScalarHamiltonian::Radial {
            rho,
            beta: Some(beta),
            structure: Structure::Contact { n },
        }
    }

    pub fn radial_symplectic(rho: RhoProfile<T>, n: usize) -> Self {
        ScalarHamiltonian::Radial {
            rho,
            beta: None,
            structure: Structure::Symplectic { n },
        }
    }

    /// g_ε = η·ε(1 − cos(mθ)) on ℝ²ⁿ⁺¹.
    pub fn contact_perturbation(eta: EtaCutoff<T>, epsilon: T, multiplier: u32, n: usize) -> Self {
        ScalarHamiltonian::Perturbation {
            eta,
            epsilon,
            kind: PerturbationKind::OneMinusCos { multiplier },
            structure: Structure::Contact { n },
        }
    }

    /// g_ε = η·ε·cos(kθ) on ℝ²ⁿ.
    pub fn symplectic_perturbation(eta: EtaCutoff<T>, epsilon: T, k: u32, n: usize) -> Self {
        ScalarHamiltonian::Perturbation {
            eta,
            epsilon,
            kind: PerturbationKind::Cos { multiplier: k },
            structure: Structure::Symplectic { n },
        }
    }

    pub fn custom(value: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        ScalarHamiltonian::Custom(CustomHamiltonian {
            value: Arc::new(value),
            gradient: None,
        })
    }

    pub fn custom_with_gradient(
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
    ) -> Self {
        ScalarHamiltonian::Custom(CustomHamiltonian {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        })
    }

    pub fn value(&self, p: &[T]) -> T {
        match self {
            ScalarHamiltonian::Custom(c) => (c.value)(p),
            _ => {
                let mut scratch = vec![T::zero(); p.len()];
                self.value_and_gradient(p, &mut scratch)
            }
        }
    }

    /// Writes all partial derivatives into `grad` and returns the value.
    pub fn value_and_gradient(&self, p: &[T], grad: &mut [T]) -> T {
        match self {
            ScalarHamiltonian::Radial { rho, beta, .. } => {
                let e = quadric_e(p);
                let (r, dr, _) = rho.eval3(e);
                let (b, db) = match beta {
                    Some(beta) => beta.eval(p[p.len() - 1]),
                    None => (T::one(), T::zero()),
                };
                let n = p.len() / 2;
                let two = lit::<T>(2.0);
                for i in 0..n {
                    let c = two * plane_weight::<T>(i) * b * dr;
                    grad[2 * i] = c * p[2 * i];
                    grad[2 * i + 1] = c * p[2 * i + 1];
                }
                if beta.is_some() {
                    grad[2 * n] = db * r;
                }
                b * r
            }
            ScalarHamiltonian::Perturbation {
                eta, epsilon, kind, ..
            } => perturbation_value_and_gradient(eta, *epsilon, *kind, p, grad),
            ScalarHamiltonian::Custom(c) => {
                let value = (c.value)(p);
                match &c.gradient {
                    Some(g) => g(p, grad),
                    None => {
                        let h = lit::<T>(CUSTOM_FD_STEP);
                        let mut q = p.to_vec();
                        for i in 0..p.len() {
                            q[i] = p[i] + h;
                            let fp = (c.value)(&q);
                            q[i] = p[i] - h;
                            let fm = (c.value)(&q);
                            q[i] = p[i];
                            grad[i] = (fp - fm) / (h + h);
                        }
                    }
                }
                value
            }
        }
    }
}

fn perturbation_value_and_gradient<T: Real>(
    eta: &EtaCutoff<T>,
    epsilon: T,
    kind: PerturbationKind,
    p: &[T],
    grad: &mut [T],
) -> T {
    grad.iter_mut().for_each(|g| *g = T::zero());
    let e = quadric_e(p);
    let (x, y) = (p[0], p[1]);
    let r_sq = x * x + y * y;
    let z = if p.len() % 2 == 1 {
        Some(p[p.len() - 1])
    } else {
        None
    };
    let cut = eta.eval(e, r_sq, z);
    if cut.value == T::zero() {
        return T::zero();
    }
    let theta = y.atan2(x);
    let (g, g_theta) = match kind {
        PerturbationKind::OneMinusCos { multiplier } => {
            let m = T::from_u32(multiplier).unwrap();
            let (sin, cos) = (m * theta).sin_cos();
            (epsilon * (T::one() - cos), epsilon * m * sin)
        }
        PerturbationKind::Cos { multiplier } => {
            let m = T::from_u32(multiplier).unwrap();
            let (sin, cos) = (m * theta).sin_cos();
            (epsilon * cos, -epsilon * m * sin)
        }
    };
    let two = lit::<T>(2.0);
    // ∂θ/∂x = −y/r², ∂θ/∂y = x/r²
    let radial = two * (cut.d_e + cut.d_r1_sq) * g;
    grad[0] = radial * x - cut.value * g_theta * y / r_sq;
    grad[1] = radial * y + cut.value * g_theta * x / r_sq;
    let n = p.len() / 2;
    for i in 1..n {
        let c = two * plane_weight::<T>(i) * cut.d_e * g;
        grad[2 * i] = c * p[2 * i];
        grad[2 * i + 1] = c * p[2 * i + 1];
    }
    if z.is_some() {
        grad[2 * n] = cut.d_z * g;
    }
    cut.value * g
}

/// X_f from the value and gradient of f at `p` (contact structure).
pub fn contact_field_from_gradient<T: Real>(p: &[T], value: T, grad: &[T], out: &mut [T]) {
    let half = lit::<T>(0.5);
    let n = p.len() / 2;
    let fz = grad[2 * n];
    let mut vertical = value;
    for i in 0..n {
        let (x, y) = (p[2 * i], p[2 * i + 1]);
        let (fx, fy) = (grad[2 * i], grad[2 * i + 1]);
        out[2 * i] = -fy + half * x * fz;
        out[2 * i + 1] = fx + half * y * fz;
        vertical = vertical - half * x * fx - half * y * fy;
    }
    out[2 * n] = vertical;
}

/// X_h = Σ(−h_{yᵢ}∂xᵢ + h_{xᵢ}∂yᵢ), solving ω₀(X_h, ·) = −dh.
pub fn symplectic_field_from_gradient<T: Real>(grad: &[T], out: &mut [T]) {
    for (o, g) in out.chunks_exact_mut(2).zip(grad.chunks_exact(2)) {
        o[0] = -g[1];
        o[1] = g[0];
    }
}

/// Contact Hamiltonian vector field of `h` at `p`.
pub fn contact_vector_field<T: Real>(
    h: &ScalarHamiltonian<T>,
    p: &PhasePoint<T>,
) -> Result<TangentVector<T>, GeometryError> {
    if !p.structure().is_contact() {
        return Err(GeometryError::WrongStructure("contact"));
    }
    let coords = p.coords();
    let mut grad = vec![T::zero(); coords.len()];
    let value = h.value_and_gradient(coords, &mut grad);
    let mut out = vec![T::zero(); coords.len()];
    contact_field_from_gradient(coords, value, &grad, &mut out);
    Ok(TangentVector::new(out))
}

/// Symplectic Hamiltonian vector field of `h` at `p`.
pub fn symplectic_vector_field<T: Real>(
    h: &ScalarHamiltonian<T>,
    p: &PhasePoint<T>,
) -> Result<TangentVector<T>, GeometryError> {
    if p.structure().is_contact() {
        return Err(GeometryError::WrongStructure("symplectic"));
    }
    let coords = p.coords();
    let mut grad = vec![T::zero(); coords.len()];
    h.value_and_gradient(coords, &mut grad);
    let mut out = vec![T::zero(); coords.len()];
    symplectic_field_from_gradient(&grad, &mut out);
    Ok(TangentVector::new(out))
}

/// Step of the five-point derivative stencil used by the invariance check.
pub const INVARIANCE_FD_STEP: f64 = 1e-5;

/// Directional derivative of h at p along u by the fourth-order central stencil.
fn directional_derivative<T: Real>(h: &ScalarHamiltonian<T>, p: &[T], u: &[T]) -> T {
    let step = lit::<T>(INVARIANCE_FD_STEP);
    let shifted = |t: T| -> T {
        let q: Vec<T> = p.iter().zip(u).map(|(a, b)| *a + t * *b).collect();
        h.value(&q)
    };
    let eight = lit::<T>(8.0);
    let two = lit::<T>(2.0);
    (shifted(-two * step) - eight * shifted(-step) + eight * shifted(step) - shifted(two * step))
        / (lit::<T>(12.0) * step)
}

/// Max over samples and ξ-basis vectors u of |dh(u) + dα₀(X_h, u)|.
///
/// dh(u) is differentiated numerically from the values of h while X_h is built
/// from h's partials, so inconsistent partials show up as a positive defect.
pub fn check_contact_invariance<T: Real>(
    h: &ScalarHamiltonian<T>,
    samples: &[PhasePoint<T>],
) -> Result<T, GeometryError> {
    let mut defect = T::zero();
    for p in samples {
        let field = contact_vector_field(h, p)?;
        for u in contact_plane_basis(p.coords()) {
            let dh = directional_derivative(h, p.coords(), &u.components);
            let lie = dh + d_alpha0(&field.components, &u.components);
            defect = defect.max(lie.abs());
        }
    }
    Ok(defect)
}

/// A smooth vector field on a coordinate space.
pub trait VectorField<T>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: &[T], out: &mut [T]);
}

/// The contact or symplectic Hamiltonian vector field of a scalar Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianField<T> {
    hamiltonian: Arc<ScalarHamiltonian<T>>,
    structure: Structure,
}

impl<T: Real> HamiltonianField<T> {
    pub fn new(hamiltonian: ScalarHamiltonian<T>, structure: Structure) -> Self {
        Self {
            hamiltonian: Arc::new(hamiltonian),
            structure,
        }
    }

    pub fn hamiltonian(&self) -> &ScalarHamiltonian<T> {
        &self.hamiltonian
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }
}

impl<T: Real> VectorField<T> for HamiltonianField<T> {
    fn dim(&self) -> usize {
        self.structure.dim()
    }

    fn eval(&self, p: &[T], out: &mut [T]) {
        // gradient is staged in `out` and overwritten by the field
        let mut grad = [T::zero(); 16];
        let mut heap;
        let grad: &mut [T] = if p.len() <= grad.len() {
            &mut grad[..p.len()]
        } else {
            heap = vec![T::zero(); p.len()];
            &mut heap
        };
        let value = self.hamiltonian.value_and_gradient(p, grad);
        if self.structure.is_contact() {
            contact_field_from_gradient(p, value, grad, out);
        } else {
            symplectic_field_from_gradient(grad, out);
        }
    }
}

/// A vector field given by a closure.
pub struct FnField<T> {
    dim: usize,
    f: Box<dyn Fn(&[T], &mut [T]) + Send + Sync>,
}

impl<T> FnField<T> {
    pub fn new(dim: usize, f: impl Fn(&[T], &mut [T]) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Box::new(f),
        }
    }
}

impl<T: Real> VectorField<T> for FnField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &[T], out: &mut [T]) {
        (self.f)(p, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Variant;
    use std::f64::consts::PI;

    fn contact(n: usize, c: Vec<f64>) -> PhasePoint<f64> {
        PhasePoint::new(Structure::Contact { n }, c).unwrap()
    }

    fn radial() -> ScalarHamiltonian<f64> {
        let rho = RhoProfile::build(2, 1.0, 0.2, Variant::Contact).unwrap();
        let beta = BetaProfile::build(1.0).unwrap();
        ScalarHamiltonian::radial_contact(rho, beta, 1)
    }

    #[test]
    fn quadric_examples() {
        assert!((quadric_e(&[0.3f64, 0.4, 7.0]) - 0.25).abs() < 1e-15);
        assert_eq!(quadric_e(&[1.0, 1.0, 1.0, 1.0, 0.0]), 3.0);
        assert_eq!(quadric_e(&[0.0, 0.0, -2.0]), 0.0);
    }

    #[test]
    fn alpha0_examples() {
        let p = [0.3, -0.2, 0.7];
        assert_eq!(alpha0(&p, &[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(alpha0(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(alpha0(&[0.0, 0.0, 0.0], &[0.4, 0.9, -1.5]).unwrap(), -1.5);
        assert!(matches!(
            alpha0(&p, &[1.0, 0.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
        assert!(alpha0(&[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn reeb_is_vertical() {
        let p = [0.1, 0.2, 0.3, 0.4, 0.5];
        let r = reeb(&p).unwrap();
        assert_eq!(r.components, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(alpha0(&p, &r.components).unwrap(), 1.0);
    }

    #[test]
    fn plane_basis_spans_kernel() {
        let p = [0.3f64, -0.7, 1.1, 0.2, 0.4];
        for u in contact_plane_basis(&p) {
            assert!(alpha0(&p, &u.components).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn constant_hamiltonian_is_reeb_multiple() {
        let h = ScalarHamiltonian::custom_with_gradient(|_| 2.5, |_, g| g.fill(0.0));
        let x = contact_vector_field(&h, &contact(1, vec![0.3, 0.1, 0.2])).unwrap();
        assert_eq!(x.components, vec![0.0, 0.0, 2.5]);
        let sym = PhasePoint::new(Structure::Symplectic { n: 1 }, vec![0.3, 0.1]).unwrap();
        let y = symplectic_vector_field(&h, &sym).unwrap();
        assert_eq!(y.components, vec![0.0, 0.0]);
    }

    #[test]
    fn linear_z_hamiltonian() {
        let h = ScalarHamiltonian::custom_with_gradient(
            |p: &[f64]| p[2],
            |_, g| g.copy_from_slice(&[0.0, 0.0, 1.0]),
        );
        let x = contact_vector_field(&h, &contact(1, vec![0.6, -0.4, 0.9])).unwrap();
        assert_eq!(x.components, vec![0.3, -0.2, 0.9]);
    }

    #[test]
    fn radial_vertical_component() {
        let h = radial();
        let rho = RhoProfile::build(2, 1.0, 0.2, Variant::Contact).unwrap();
        let beta = BetaProfile::build(1.0).unwrap();
        let p = contact(1, vec![0.31, -0.22, 0.07]);
        let x = contact_vector_field(&h, &p).unwrap();
        let e = quadric_e(p.coords());
        let (r, dr) = (rho.value(e), rho.slope(e));
        let want = beta.eval(0.07).0 * (r - dr * e);
        assert!((x.components[2] - want).abs() < 1e-15);
    }

    #[test]
    fn reeb_component_equals_hamiltonian() {
        let h = radial();
        for i in 0..200 {
            let t = i as f64 * 0.37;
            let p = contact(
                1,
                vec![0.5 * t.cos(), 0.5 * (1.3 * t).sin(), 0.3 * (0.7 * t).sin()],
            );
            let x = contact_vector_field(&h, &p).unwrap();
            let lhs = alpha0(p.coords(), &x.components).unwrap();
            let rhs = h.value(p.coords());
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-3));
        }
    }

    #[test]
    fn symplectic_rotation_speed_on_circle() {
        let rho = RhoProfile::build(2, 1.0, 0.2, Variant::Symplectic).unwrap();
        let h = ScalarHamiltonian::radial_symplectic(rho, 1);
        let r = 0.2f64.sqrt();
        let p = PhasePoint::new(Structure::Symplectic { n: 1 }, vec![r * 0.6, r * 0.8]).unwrap();
        let x = symplectic_vector_field(&h, &p).unwrap();
        let (px, py) = (p.coords()[0], p.coords()[1]);
        let omega = (px * x.components[1] - py * x.components[0]) / (r * r);
        assert!((omega - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn symplectic_cos_perturbation_is_radial() {
        let eta = EtaCutoff::with_defaults(0.2).unwrap();
        let eps = 1e-3;
        let h = ScalarHamiltonian::symplectic_perturbation(eta, eps, 2, 1);
        let r = 0.2f64.sqrt();
        for theta in [0.3, 1.1, 2.0, 4.4] {
            let p = PhasePoint::new(
                Structure::Symplectic { n: 1 },
                vec![r * f64::cos(theta), r * f64::sin(theta)],
            )
            .unwrap();
            let x = symplectic_vector_field(&h, &p).unwrap();
            let radial = x.components[0] * theta.cos() + x.components[1] * theta.sin();
            let angular = -x.components[0] * theta.sin() + x.components[1] * theta.cos();
            assert!((radial - eps * 2.0 / r * (2.0 * theta).sin()).abs() < 1e-15);
            assert!(angular.abs() < 1e-15);
        }
    }

    #[test]
    fn invariance_defect_small_and_detects_faults() {
        let h = radial();
        let samples: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64;
                contact(
                    1,
                    vec![
                        0.45 * (0.9 * t).cos(),
                        0.45 * (1.7 * t).sin(),
                        0.2 * (0.3 * t).cos(),
                    ],
                )
            })
            .collect();
        assert!(check_contact_invariance(&h, &samples).unwrap() < 1e-9);

        let one = ScalarHamiltonian::custom_with_gradient(|_| 1.0, |_, g| g.fill(0.0));
        assert_eq!(check_contact_invariance(&one, &samples).unwrap(), 0.0);

        let inner = radial();
        let corrupted = ScalarHamiltonian::custom_with_gradient(
            {
                let inner = inner.clone();
                move |p: &[f64]| inner.value(p)
            },
            move |p: &[f64], g: &mut [f64]| {
                inner.value_and_gradient(p, g);
                g[2] *= 1.1;
            },
        );
        assert!(check_contact_invariance(&corrupted, &samples).unwrap() > 1e-6);
    }

    #[test]
    fn single_precision_field() {
        let h = ScalarHamiltonian::<f32>::custom_with_gradient(
            |p: &[f32]| p[2],
            |_, g| g.copy_from_slice(&[0.0, 0.0, 1.0]),
        );
        let p = PhasePoint::new(Structure::Contact { n: 1 }, vec![0.6f32, -0.4, 0.9]).unwrap();
        assert_eq!(
            contact_vector_field(&h, &p).unwrap().components,
            vec![0.3, -0.2, 0.9]
        );
    }
}
