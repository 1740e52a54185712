//! Time-1 maps: fixed-step RK4 flows of vector fields, the closed-form
//! perturbation maps, and compositions of these.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    alpha0, contact_plane_basis, quadric_e, GeometryError, HamiltonianField, PhasePoint,
    ScalarHamiltonian, Structure, VectorField,
};
use crate::profiles::EtaCutoff;
use crate::scalar::{from_usize, lit, norm2, to_f64, Real};

/// Smallest admissible step count for a flow over unit time.
pub const MIN_STEPS: usize = 100;
/// Default RK4 step count for time-1 maps.
pub const DEFAULT_STEPS: usize = 1000;
/// Central-difference step for derivatives of maps.
pub const MAP_FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("at least {MIN_STEPS} integration steps are required, got {0}")]
    TooFewSteps(usize),
    #[error("non-finite state after {completed_steps} integration steps (last finite state {last_finite:?})")]
    NonFinite {
        completed_steps: usize,
        last_finite: Vec<f64>,
    },
    #[error("negative radicand {0} in the closed-form perturbation; ε is too large for the shell")]
    NegativeRadicand(f64),
    #[error("point is not inside the region where the cut-off is identically 1")]
    OutsideClosedForm,
    #[error("structure mismatch: {0} vs {1}")]
    StructureMismatch(Structure, Structure),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Reusable stage buffers for [`rk4_in_place`].
#[derive(Debug, Clone)]
pub struct Rk4Workspace<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    stage: Vec<T>,
    increment: Vec<T>,
}

impl<T: Real> Rk4Workspace<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            increment: z,
        }
    }
}

/// Advances `state` by time `duration` with `steps` classical RK4 steps.
///
/// `on_step` receives the state before each step and the increment applied.
pub fn rk4_in_place<T: Real>(
    field: &dyn VectorField<T>,
    state: &mut [T],
    duration: T,
    steps: usize,
    ws: &mut Rk4Workspace<T>,
    mut on_step: Option<&mut dyn FnMut(&[T], &[T])>,
) -> Result<(), FlowError> {
    let h = duration / from_usize::<T>(steps);
    let half = h * lit(0.5);
    let sixth = h / lit(6.0);
    let two = lit::<T>(2.0);
    for step in 0..steps {
        field.eval(state, &mut ws.k1);
        for i in 0..state.len() {
            ws.stage[i] = state[i] + half * ws.k1[i];
        }
        field.eval(&ws.stage, &mut ws.k2);
        for i in 0..state.len() {
            ws.stage[i] = state[i] + half * ws.k2[i];
        }
        field.eval(&ws.stage, &mut ws.k3);
        for i in 0..state.len() {
            ws.stage[i] = state[i] + h * ws.k3[i];
        }
        field.eval(&ws.stage, &mut ws.k4);
        for i in 0..state.len() {
            ws.increment[i] = sixth * (ws.k1[i] + two * (ws.k2[i] + ws.k3[i]) + ws.k4[i]);
        }
        if ws.increment.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite {
                completed_steps: step,
                last_finite: state.iter().map(|v| to_f64(*v)).collect(),
            });
        }
        if let Some(cb) = on_step.as_mut() {
            cb(state, &ws.increment);
        }
        for i in 0..state.len() {
            state[i] = state[i] + ws.increment[i];
        }
    }
    Ok(())
}

/// Flows `p` along `field` for time `duration` using `steps` RK4 steps.
pub fn integrate<T: Real>(
    field: &dyn VectorField<T>,
    p: &PhasePoint<T>,
    duration: T,
    steps: usize,
) -> Result<PhasePoint<T>, FlowError> {
    if steps < MIN_STEPS {
        return Err(FlowError::TooFewSteps(steps));
    }
    p.structure().check_len(field.dim())?;
    let mut state = p.coords().to_vec();
    let mut ws = Rk4Workspace::new(state.len());
    rk4_in_place(field, &mut state, duration, steps, &mut ws, None)?;
    Ok(PhasePoint::new(p.structure(), state)?)
}

type ExplicitFn<T> = Arc<dyn Fn(&[T], &mut [T]) -> Result<(), FlowError> + Send + Sync>;

/// How a [`TimeOneMap`] is evaluated.
#[derive(Clone)]
pub enum MapKind<T> {
    /// RK4 flow of a vector field over unit time.
    Integrated {
        field: Arc<dyn VectorField<T>>,
        steps: usize,
    },
    /// Time-1 map of g_ε = η·ε(1 − cos(mθ)): closed form on W₁, identity where
    /// η vanishes, RK4 in the transition shell.
    ContactPerturbation {
        epsilon: T,
        multiplier: u32,
        eta: EtaCutoff<T>,
        field: Arc<HamiltonianField<T>>,
        steps: usize,
    },
    /// Time-1 map of g_ε = η·ε·cos(kθ), handled like the contact case.
    SymplecticPerturbation {
        epsilon: T,
        multiplier: u32,
        eta: EtaCutoff<T>,
        field: Arc<HamiltonianField<T>>,
        steps: usize,
    },
    /// Members in mathematical order: the last one is applied first.
    Composition(Vec<TimeOneMap<T>>),
    /// A map given by a closure.
    Explicit(ExplicitFn<T>),
}

/// A time-1 map of a flow on a fixed structure.
#[derive(Clone)]
pub struct TimeOneMap<T> {
    kind: MapKind<T>,
    structure: Structure,
}

impl<T> fmt::Debug for TimeOneMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            MapKind::Integrated { steps, .. } => format!("integrated(steps={steps})"),
            MapKind::ContactPerturbation { multiplier, .. } => {
                format!("contact_perturbation(m={multiplier})")
            }
            MapKind::SymplecticPerturbation { multiplier, .. } => {
                format!("symplectic_perturbation(k={multiplier})")
            }
            MapKind::Composition(m) => format!("composition({m:?})"),
            MapKind::Explicit(_) => "explicit".to_string(),
        };
        write!(f, "TimeOneMap[{}; {kind}]", self.structure)
    }
}

impl<T: Real> TimeOneMap<T> {
    pub fn integrated(
        field: Arc<dyn VectorField<T>>,
        structure: Structure,
        steps: usize,
    ) -> Result<Self, FlowError> {
        if steps < MIN_STEPS {
            return Err(FlowError::TooFewSteps(steps));
        }
        structure.check_len(field.dim())?;
        Ok(Self {
            kind: MapKind::Integrated { field, steps },
            structure,
        })
    }

    /// φ_h for the contact or symplectic Hamiltonian field of `h`.
    pub fn hamiltonian_flow(
        h: ScalarHamiltonian<T>,
        structure: Structure,
        steps: usize,
    ) -> Result<Self, FlowError> {
        Self::integrated(
            Arc::new(HamiltonianField::new(h, structure)),
            structure,
            steps,
        )
    }

    pub fn contact_perturbation(
        epsilon: T,
        multiplier: u32,
        eta: EtaCutoff<T>,
        n: usize,
        steps: usize,
    ) -> Result<Self, FlowError> {
        if steps < MIN_STEPS {
            return Err(FlowError::TooFewSteps(steps));
        }
        let structure = Structure::Contact { n };
        let h = ScalarHamiltonian::contact_perturbation(eta.clone(), epsilon, multiplier, n);
        Ok(Self {
            kind: MapKind::ContactPerturbation {
                epsilon,
                multiplier,
                eta,
                field: Arc::new(HamiltonianField::new(h, structure)),
                steps,
            },
            structure,
        })
    }

    pub fn symplectic_perturbation(
        epsilon: T,
        k: u32,
        eta: EtaCutoff<T>,
        n: usize,
        steps: usize,
    ) -> Result<Self, FlowError> {
        if steps < MIN_STEPS {
            return Err(FlowError::TooFewSteps(steps));
        }
        let structure = Structure::Symplectic { n };
        let h = ScalarHamiltonian::symplectic_perturbation(eta.clone(), epsilon, k, n);
        Ok(Self {
            kind: MapKind::SymplecticPerturbation {
                epsilon,
                multiplier: k,
                eta,
                field: Arc::new(HamiltonianField::new(h, structure)),
                steps,
            },
            structure,
        })
    }

    pub fn identity(structure: Structure) -> Self {
        Self {
            kind: MapKind::Composition(Vec::new()),
            structure,
        }
    }

    pub fn explicit(
        structure: Structure,
        f: impl Fn(&[T], &mut [T]) -> Result<(), FlowError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: MapKind::Explicit(Arc::new(f)),
            structure,
        }
    }

    /// `compose(vec![f, g])` is f∘g.
    pub fn compose(maps: Vec<TimeOneMap<T>>) -> Result<Self, FlowError> {
        let structure = match maps.first() {
            Some(m) => m.structure,
            None => {
                return Err(FlowError::Geometry(GeometryError::DimensionMismatch {
                    expected: 1,
                    got: 0,
                }))
            }
        };
        if let Some(bad) = maps.iter().find(|m| m.structure != structure) {
            return Err(FlowError::StructureMismatch(structure, bad.structure));
        }
        Ok(Self {
            kind: MapKind::Composition(maps),
            structure,
        })
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn kind(&self) -> &MapKind<T> {
        &self.kind
    }

    /// Evaluates the map on raw coordinates.
    pub fn apply_into(&self, p: &[T], out: &mut [T]) -> Result<(), FlowError> {
        self.structure.check_len(p.len())?;
        match &self.kind {
            MapKind::Integrated { field, steps } => {
                out.copy_from_slice(p);
                let mut ws = Rk4Workspace::new(p.len());
                rk4_in_place(field.as_ref(), out, T::one(), *steps, &mut ws, None)
            }
            MapKind::ContactPerturbation {
                epsilon,
                multiplier,
                eta,
                field,
                steps,
            } => perturbation_step(p, out, eta, field.as_ref(), *steps, |q| {
                contact_closed_form(q, *epsilon, *multiplier, eta)
            }),
            MapKind::SymplecticPerturbation {
                epsilon,
                multiplier,
                eta,
                field,
                steps,
            } => perturbation_step(p, out, eta, field.as_ref(), *steps, |q| {
                symplectic_closed_form(q, *epsilon, *multiplier, eta)
            }),
            MapKind::Composition(maps) => {
                out.copy_from_slice(p);
                let mut buf = p.to_vec();
                for m in maps.iter().rev() {
                    m.apply_into(out, &mut buf)?;
                    out.copy_from_slice(&buf);
                }
                Ok(())
            }
            MapKind::Explicit(f) => f(p, out),
        }
    }

    pub fn apply(&self, p: &PhasePoint<T>) -> Result<PhasePoint<T>, FlowError> {
        if p.structure() != self.structure {
            return Err(FlowError::StructureMismatch(self.structure, p.structure()));
        }
        let mut out = vec![T::zero(); p.coords().len()];
        self.apply_into(p.coords(), &mut out)?;
        Ok(PhasePoint::new(self.structure, out)?)
    }

    /// (φ(p), φ²(p), …, φˡ(p)).
    pub fn apply_iterates(
        &self,
        p: &PhasePoint<T>,
        l: usize,
    ) -> Result<Vec<PhasePoint<T>>, FlowError> {
        let mut out = Vec::with_capacity(l);
        let mut cur = p.clone();
        for _ in 0..l {
            cur = self.apply(&cur)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// φˡ on raw coordinates.
    pub fn iterate_into(&self, p: &[T], l: usize, out: &mut [T]) -> Result<(), FlowError> {
        out.copy_from_slice(p);
        let mut buf = p.to_vec();
        for _ in 0..l {
            self.apply_into(out, &mut buf)?;
            out.copy_from_slice(&buf);
        }
        Ok(())
    }
}

fn perturbation_step<T: Real>(
    p: &[T],
    out: &mut [T],
    eta: &EtaCutoff<T>,
    field: &HamiltonianField<T>,
    steps: usize,
    closed_form: impl Fn(&[T]) -> Result<Option<Vec<T>>, FlowError>,
) -> Result<(), FlowError> {
    out.copy_from_slice(p);
    let (e, r1_sq, z) = cutoff_args(p);
    if eta.eval(e, r1_sq, z).value == T::zero() {
        return Ok(());
    }
    if let Some(q) = closed_form(p)? {
        out.copy_from_slice(&q);
        return Ok(());
    }
    let mut ws = Rk4Workspace::new(p.len());
    rk4_in_place(field, out, T::one(), steps, &mut ws, None)
}

fn cutoff_args<T: Real>(p: &[T]) -> (T, T, Option<T>) {
    let z = if p.len() % 2 == 1 {
        Some(p[p.len() - 1])
    } else {
        None
    };
    (quadric_e(p), p[0] * p[0] + p[1] * p[1], z)
}

fn in_core<T: Real>(eta: &EtaCutoff<T>, p: &[T]) -> bool {
    let (e, r1_sq, z) = cutoff_args(p);
    eta.in_core(e, r1_sq, z)
}

// Ok(None) when the start or end point leaves W₁.
fn contact_closed_form<T: Real>(
    p: &[T],
    epsilon: T,
    multiplier: u32,
    eta: &EtaCutoff<T>,
) -> Result<Option<Vec<T>>, FlowError> {
    if !in_core(eta, p) {
        return Ok(None);
    }
    let m = T::from_u32(multiplier).unwrap();
    let (x, y) = (p[0], p[1]);
    let r_sq = x * x + y * y;
    let (sin, cos) = (m * y.atan2(x)).sin_cos();
    let radicand = r_sq - lit::<T>(2.0) * epsilon * m * sin;
    if !(radicand > T::zero()) {
        return Err(FlowError::NegativeRadicand(to_f64(radicand)));
    }
    let scale = (radicand / r_sq).sqrt();
    let mut q = p.to_vec();
    q[0] = x * scale;
    q[1] = y * scale;
    let last = q.len() - 1;
    q[last] = q[last] + epsilon * (T::one() - cos);
    Ok(if in_core(eta, &q) { Some(q) } else { None })
}

fn symplectic_closed_form<T: Real>(
    p: &[T],
    epsilon: T,
    k: u32,
    eta: &EtaCutoff<T>,
) -> Result<Option<Vec<T>>, FlowError> {
    if !in_core(eta, p) {
        return Ok(None);
    }
    let kf = T::from_u32(k).unwrap();
    let (x, y) = (p[0], p[1]);
    let r_sq = x * x + y * y;
    let sin = (kf * y.atan2(x)).sin();
    let radicand = r_sq + lit::<T>(2.0) * epsilon * kf * sin;
    if !(radicand > T::zero()) {
        return Err(FlowError::NegativeRadicand(to_f64(radicand)));
    }
    let scale = (radicand / r_sq).sqrt();
    let mut q = p.to_vec();
    q[0] = x * scale;
    q[1] = y * scale;
    Ok(if in_core(eta, &q) { Some(q) } else { None })
}

/// (r, θ, …, z) ↦ (√(r² − 2εm·sin(mθ)), θ, …, z + ε(1 − cos(mθ))) where η ≡ 1,
/// identity where η = 0. Errors in the transition shell.
pub fn closed_form_contact_perturbation<T: Real>(
    p: &PhasePoint<T>,
    epsilon: T,
    multiplier: u32,
    eta: &EtaCutoff<T>,
) -> Result<PhasePoint<T>, FlowError> {
    if !p.structure().is_contact() {
        return Err(GeometryError::WrongStructure("contact").into());
    }
    let (e, r1_sq, z) = cutoff_args(p.coords());
    if eta.eval(e, r1_sq, z).value == T::zero() {
        return Ok(p.clone());
    }
    match contact_closed_form(p.coords(), epsilon, multiplier, eta)? {
        Some(q) => Ok(PhasePoint::new(p.structure(), q)?),
        None => Err(FlowError::OutsideClosedForm),
    }
}

/// (r, θ, …) ↦ (√(r² + 2εk·sin(kθ)), θ, …) where η ≡ 1, identity where η = 0.
pub fn closed_form_symplectic_perturbation<T: Real>(
    p: &PhasePoint<T>,
    epsilon: T,
    k: u32,
    eta: &EtaCutoff<T>,
) -> Result<PhasePoint<T>, FlowError> {
    if p.structure().is_contact() {
        return Err(GeometryError::WrongStructure("symplectic").into());
    }
    let (e, r1_sq, z) = cutoff_args(p.coords());
    if eta.eval(e, r1_sq, z).value == T::zero() {
        return Ok(p.clone());
    }
    match symplectic_closed_form(p.coords(), epsilon, k, eta)? {
        Some(q) => Ok(PhasePoint::new(p.structure(), q)?),
        None => Err(FlowError::OutsideClosedForm),
    }
}

/// Verification results attached to a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub z_min_drift: Option<f64>,
    pub energy_drift: Option<f64>,
    pub contact_defect: Option<f64>,
}

/// Minimum per-step z-increment over RK4 trajectories of `field` started at
/// `samples` and run for time `horizon`.
pub fn z_min_drift_flow<T: Real>(
    field: &dyn VectorField<T>,
    samples: &[PhasePoint<T>],
    horizon: T,
    steps: usize,
) -> Result<T, FlowError> {
    if steps < MIN_STEPS {
        return Err(FlowError::TooFewSteps(steps));
    }
    let mut min = T::infinity();
    for p in samples {
        let z = p
            .structure()
            .z_index()
            .ok_or(GeometryError::WrongStructure("contact"))?;
        let mut state = p.coords().to_vec();
        let mut ws = Rk4Workspace::new(state.len());
        let mut track = |_: &[T], inc: &[T]| min = min.min(inc[z]);
        rk4_in_place(field, &mut state, horizon, steps, &mut ws, Some(&mut track))?;
    }
    Ok(min)
}

/// Minimum of z(φ(q)) − z(q) along `iterations` iterates of the map from each sample.
pub fn z_min_drift_map<T: Real>(
    map: &TimeOneMap<T>,
    samples: &[PhasePoint<T>],
    iterations: usize,
) -> Result<T, FlowError> {
    let z = map
        .structure()
        .z_index()
        .ok_or(GeometryError::WrongStructure("contact"))?;
    let mut min = T::infinity();
    for p in samples {
        let mut cur = p.coords().to_vec();
        let mut next = cur.clone();
        for _ in 0..iterations {
            map.apply_into(&cur, &mut next)?;
            min = min.min(next[z] - cur[z]);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(min)
}

/// Max over samples p and ξ-basis vectors u of |α₀(φ(p), Dφ_p u)| / |Dφ_p u|,
/// with Dφ by central differences of step 1e−6.
pub fn verify_contactomorphism<T: Real>(
    map: &TimeOneMap<T>,
    samples: &[PhasePoint<T>],
) -> Result<T, FlowError> {
    if !map.structure().is_contact() {
        return Err(GeometryError::WrongStructure("contact").into());
    }
    let h = lit::<T>(MAP_FD_STEP);
    let dim = map.structure().dim();
    let mut image = vec![T::zero(); dim];
    let mut plus = vec![T::zero(); dim];
    let mut minus = vec![T::zero(); dim];
    let mut defect = T::zero();
    for p in samples {
        let base = p.coords();
        map.apply_into(base, &mut image)?;
        for u in contact_plane_basis(base) {
            let shifted = |sign: T, out: &mut [T]| {
                let q: Vec<T> = base
                    .iter()
                    .zip(&u.components)
                    .map(|(a, b)| *a + sign * h * *b)
                    .collect();
                map.apply_into(&q, out)
            };
            shifted(T::one(), &mut plus)?;
            shifted(-T::one(), &mut minus)?;
            let push: Vec<T> = plus
                .iter()
                .zip(&minus)
                .map(|(a, b)| (*a - *b) / (h + h))
                .collect();
            let value = alpha0(&image, &push)?.abs() / norm2(&push);
            defect = defect.max(value);
        }
    }
    Ok(defect)
}

/// Max over samples of |H(φ(p)) − H(p)|.
pub fn energy_drift<T: Real>(
    map: &TimeOneMap<T>,
    hamiltonian: &ScalarHamiltonian<T>,
    samples: &[PhasePoint<T>],
) -> Result<T, FlowError> {
    let mut drift = T::zero();
    for p in samples {
        let q = map.apply(p)?;
        drift = drift.max((hamiltonian.value(q.coords()) - hamiltonian.value(p.coords())).abs());
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FnField;
    use crate::profiles::{BetaProfile, RhoProfile, Variant};
    use std::f64::consts::PI;

    fn contact_pt(c: Vec<f64>) -> PhasePoint<f64> {
        PhasePoint::new(Structure::Contact { n: 1 }, c).unwrap()
    }

    fn phi_h(k: u32, steps: usize) -> TimeOneMap<f64> {
        let rho = RhoProfile::build(k, 1.0, 0.2, Variant::Contact).unwrap();
        let beta = BetaProfile::build(1.0).unwrap();
        TimeOneMap::hamiltonian_flow(
            ScalarHamiltonian::radial_contact(rho, beta, 1),
            Structure::Contact { n: 1 },
            steps,
        )
        .unwrap()
    }

    #[test]
    fn constant_field_is_exact() {
        let field = FnField::new(3, |_: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&[0.0, 0.0, 1.0])
        });
        let q = integrate(
            &field,
            &PhasePoint::origin(Structure::Contact { n: 1 }),
            1.0,
            100,
        )
        .unwrap();
        assert!((q.coords()[2] - 1.0).abs() < 1e-14);
        assert_eq!(&q.coords()[..2], &[0.0, 0.0]);
    }

    #[test]
    fn too_few_steps_rejected() {
        let field = FnField::new(3, |_: &[f64], out: &mut [f64]| out.fill(0.0));
        let p = PhasePoint::origin(Structure::Contact { n: 1 });
        assert_eq!(
            integrate(&field, &p, 1.0, 50),
            Err(FlowError::TooFewSteps(50))
        );
    }

    #[test]
    fn blow_up_reports_prefix() {
        let field = FnField::new(3, |p: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&[p[0] * p[0] * 1e6, 0.0, 0.0])
        });
        let p = contact_pt(vec![1.0, 0.0, 0.0]);
        match integrate(&field, &p, 1.0, 100) {
            Err(FlowError::NonFinite {
                completed_steps, ..
            }) => assert!(completed_steps < 100),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rotates_invariant_circle() {
        let map = phi_h(2, 1000);
        let r = 0.2f64.sqrt();
        let q = map.apply(&contact_pt(vec![r, 0.0, 0.0])).unwrap();
        let want = [r * (PI / 2.0).cos(), r * (PI / 2.0).sin(), 0.0];
        for (a, b) in q.coords().iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{q:?}");
        }
    }

    #[test]
    fn contact_closed_form_examples() {
        let eta = EtaCutoff::with_defaults(0.25).unwrap();
        let p = contact_pt(vec![0.0, 0.5, 0.0]);
        let q = closed_form_contact_perturbation(&p, 1e-3, 2, &eta).unwrap();
        assert!((q.coords()[0]).abs() < 1e-15);
        assert!((q.coords()[1] - 0.5).abs() < 1e-15);
        assert!((q.coords()[2] - 0.002).abs() < 1e-15);

        // m = 2k leaves every a_j fixed
        let eta = EtaCutoff::with_defaults(0.2).unwrap();
        let r = 0.2f64.sqrt();
        for j in 1..=4 {
            let th = j as f64 * PI / 2.0;
            let p = contact_pt(vec![r * th.cos(), r * th.sin(), 0.0]);
            let q = closed_form_contact_perturbation(&p, 1e-3, 4, &eta).unwrap();
            for (a, b) in q.coords().iter().zip(p.coords()) {
                assert!((a - b).abs() < 1e-15);
            }
        }

        let far = contact_pt(vec![0.0, 0.1, 0.3]);
        assert_eq!(
            closed_form_contact_perturbation(&far, 1e-3, 4, &eta).unwrap(),
            far
        );

        let shell = contact_pt(vec![0.235f64.sqrt(), 0.0, 0.0]);
        assert_eq!(
            closed_form_contact_perturbation(&shell, 1e-3, 4, &eta),
            Err(FlowError::OutsideClosedForm)
        );
    }

    #[test]
    fn symplectic_closed_form_examples() {
        let eta = EtaCutoff::with_defaults(1.0).unwrap();
        let th = PI / 4.0;
        let p = PhasePoint::new(Structure::Symplectic { n: 1 }, vec![th.cos(), th.sin()]).unwrap();
        let q = closed_form_symplectic_perturbation(&p, 1e-3, 2, &eta).unwrap();
        let r = (q.coords()[0].powi(2) + q.coords()[1].powi(2)).sqrt();
        assert!((r - 1.004f64.sqrt()).abs() < 1e-15);
        assert!((q.coords()[1].atan2(q.coords()[0]) - th).abs() < 1e-15);

        let eta = EtaCutoff::with_defaults(0.2).unwrap();
        let r = 0.2f64.sqrt();
        for j in 1..=4 {
            let th = j as f64 * PI / 2.0;
            let p = PhasePoint::new(
                Structure::Symplectic { n: 1 },
                vec![r * th.cos(), r * th.sin()],
            )
            .unwrap();
            let q = closed_form_symplectic_perturbation(&p, 1e-3, 2, &eta).unwrap();
            assert!(crate::scalar::dist_inf(q.coords(), p.coords()) < 1e-15);
        }
        let far = PhasePoint::new(Structure::Symplectic { n: 1 }, vec![0.05, 0.0]).unwrap();
        assert_eq!(
            closed_form_symplectic_perturbation(&far, 1e-3, 2, &eta).unwrap(),
            far
        );
    }

    #[test]
    fn shell_points_are_integrated() {
        let eta = EtaCutoff::with_defaults(0.2).unwrap();
        let map = TimeOneMap::contact_perturbation(1e-3, 4, eta.clone(), 1, 1000).unwrap();
        let p = contact_pt(vec![0.235f64.sqrt() * 0.6, 0.235f64.sqrt() * 0.8, 0.01]);
        let q = map.apply(&p).unwrap();
        let field = match map.kind() {
            MapKind::ContactPerturbation { field, .. } => field.clone(),
            _ => unreachable!(),
        };
        let direct = integrate(field.as_ref(), &p, 1.0, 1000).unwrap();
        assert_eq!(q, direct);
        assert!(crate::scalar::dist_inf(q.coords(), p.coords()) > 0.0);
    }

    #[test]
    fn closed_form_agrees_with_integration_in_core() {
        let eta = EtaCutoff::with_defaults(0.2).unwrap();
        let h = ScalarHamiltonian::contact_perturbation(eta.clone(), 1e-3, 4, 1);
        let field = HamiltonianField::new(h, Structure::Contact { n: 1 });
        let r = 0.205f64.sqrt();
        let p = contact_pt(vec![r * 0.3f64.cos(), r * 0.3f64.sin(), 0.004]);
        let exact = closed_form_contact_perturbation(&p, 1e-3, 4, &eta).unwrap();
        let numeric = integrate(&field, &p, 1.0, 1000).unwrap();
        assert!(crate::scalar::dist_inf(exact.coords(), numeric.coords()) < 1e-12);
    }

    #[test]
    fn composition_order_and_identity() {
        let s = Structure::Symplectic { n: 1 };
        let shift = TimeOneMap::explicit(s, |p: &[f64], o: &mut [f64]| {
            o.copy_from_slice(&[p[0] + 1.0, p[1]]);
            Ok(())
        });
        let double = TimeOneMap::explicit(s, |p: &[f64], o: &mut [f64]| {
            o.copy_from_slice(&[2.0 * p[0], 2.0 * p[1]]);
            Ok(())
        });
        let f = TimeOneMap::compose(vec![double.clone(), shift.clone()]).unwrap();
        let p = PhasePoint::new(s, vec![1.0, 1.0]).unwrap();
        assert_eq!(f.apply(&p).unwrap().coords(), &[4.0, 2.0]);
        let with_id = TimeOneMap::compose(vec![double.clone(), TimeOneMap::identity(s)]).unwrap();
        assert_eq!(with_id.apply(&p).unwrap(), double.apply(&p).unwrap());
        let iters = shift.apply_iterates(&p, 3).unwrap();
        assert_eq!(iters.last().unwrap().coords(), &[4.0, 1.0]);

        let c = TimeOneMap::<f64>::identity(Structure::Contact { n: 1 });
        assert!(matches!(
            TimeOneMap::compose(vec![shift, c]),
            Err(FlowError::StructureMismatch(..))
        ));
    }

    #[test]
    fn non_contact_map_has_defect() {
        let map = TimeOneMap::explicit(Structure::Contact { n: 1 }, |p: &[f64], o: &mut [f64]| {
            o.copy_from_slice(&[p[0], p[1], 2.0 * p[2]]);
            Ok(())
        });
        let samples = vec![contact_pt(vec![0.3, 0.4, 0.1])];
        assert!(verify_contactomorphism(&map, &samples).unwrap() > 0.1);
        let id = TimeOneMap::identity(Structure::Contact { n: 1 });
        assert!(verify_contactomorphism(&id, &samples).unwrap() < 1e-10);
    }
}
