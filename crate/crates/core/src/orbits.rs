//! Periodic orbit classes of a time-1 map: grid seeding, damped Newton on
//! φˡ(q) − q, minimal-period filtering, cyclic grouping and isolation tests.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{FlowError, TimeOneMap, MAP_FD_STEP};
use crate::geometry::{PhasePoint, Structure};
use crate::linalg::{svd, Matrix, Svd};
use crate::scalar::{dist_inf, lit, max_abs, norm2, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("period must be at least 2, got {0}")]
    PeriodTooSmall(usize),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("class is malformed: {0}")]
    MalformedClass(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Isolation {
    Isolated,
    Family,
    Undetermined,
}

impl fmt::Display for Isolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Isolation::Isolated => "isolated",
            Isolation::Family => "family",
            Isolation::Undetermined => "undetermined",
        })
    }
}

/// Polar seeding around the circle e = a: θ × e × z levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSeeds {
    pub a: f64,
    /// Half-width of the z range (contact only).
    pub z_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Coordinate ranges of the coarse global grid, one per axis.
    pub seed_box: Vec<(f64, f64)>,
    /// Angular points on the annulus grid.
    pub grid_density: usize,
    /// Points per axis of the coarse global grid.
    pub coarse_density: usize,
    pub annulus: Option<AnnulusSeeds>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub dedup_tol: f64,
    pub family_threshold: f64,
    /// Maximum number of Newton starts; exceeding it flags a partial result.
    pub max_newton_starts: usize,
    /// Offset of the hyperplanes used to probe near-null directions.
    pub probe_offset: f64,
    /// Largest Newton step (sup norm); longer steps are scaled down.
    pub newton_max_step: f64,
    /// Roots closer than this are merged when the residual stays below the
    /// acceptance level between them.
    pub merge_radius: f64,
}

impl SearchConfig {
    pub fn new(seed_box: Vec<(f64, f64)>) -> Self {
        Self {
            seed_box,
            grid_density: 40,
            coarse_density: 5,
            annulus: None,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            dedup_tol: 1e-6,
            family_threshold: 1e-4,
            max_newton_starts: 400,
            probe_offset: 1e-2,
            newton_max_step: 0.05,
            merge_radius: 1e-3,
        }
    }

    /// Annulus seeding around e = a plus a coarse grid over the support box.
    pub fn around_circle(structure: Structure, radius: f64, a: f64, z_half_width: f64) -> Self {
        let mut seed_box = vec![(-radius, radius); 2 * structure.n()];
        if structure.is_contact() {
            seed_box.push((-radius / 2.0, radius / 2.0));
        }
        Self {
            annulus: Some(AnnulusSeeds { a, z_half_width }),
            ..Self::new(seed_box)
        }
    }

    pub fn validate(&self, structure: Structure) -> Result<(), OrbitError> {
        let bad = |m: &str| Err(OrbitError::InvalidConfig(m.to_string()));
        if self.seed_box.len() != structure.dim() {
            return bad("seed_box needs one range per coordinate");
        }
        if self.seed_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return bad("seed_box ranges must satisfy lo <= hi");
        }
        let positive = [
            self.newton_tol,
            self.dedup_tol,
            self.family_threshold,
            self.probe_offset,
            self.newton_max_step,
            self.merge_radius,
        ];
        if positive.iter().any(|t| !(*t > 0.0)) {
            return bad("tolerances must be positive");
        }
        if self.dedup_tol <= self.newton_tol {
            return bad("dedup_tol must exceed newton_tol");
        }
        if self.newton_max_iter == 0 || self.grid_density == 0 {
            return bad("newton_max_iter and grid_density must be positive");
        }
        if let Some(an) = self.annulus {
            if !(an.a > 0.0) || an.z_half_width < 0.0 {
                return bad("annulus needs a > 0 and a nonnegative z half-width");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitClass<T> {
    pub period: usize,
    pub points: Vec<PhasePoint<T>>,
    pub residual: T,
    pub isolation: Isolation,
    pub min_condition: T,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub seeds: usize,
    pub non_finite_seeds: usize,
    pub newton_starts: usize,
    pub converged: usize,
    pub non_minimal: usize,
    pub duplicates: usize,
    /// More Newton candidates than the budget allowed; the class list may be incomplete.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSearch<T> {
    pub period: usize,
    pub classes: Vec<OrbitClass<T>>,
    pub diagnostics: SearchDiagnostics,
}

/// Tensor grid of seeds in its own coordinates, with the embedding into
/// phase space.
struct SeedGrid<T> {
    params: Vec<Vec<f64>>,
    points: Vec<Vec<T>>,
    shape: Vec<usize>,
    periodic: Vec<bool>,
    spacing: Vec<f64>,
    embed: Box<dyn Fn(&[f64]) -> Vec<T> + Send + Sync>,
}

impl<T: Real> SeedGrid<T> {
    fn neighbours(&self, flat: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.shape.len());
        let mut rest = flat;
        for &s in self.shape.iter().rev() {
            idx.push(rest % s);
            rest /= s;
        }
        idx.reverse();
        let d = self.shape.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut n = idx.clone();
            let mut valid = true;
            let mut moved = false;
            for axis in 0..d {
                let shift = c % 3;
                c /= 3;
                if shift == 1 {
                    continue;
                }
                moved = true;
                let s = self.shape[axis];
                let i = idx[axis];
                n[axis] = match (shift, self.periodic[axis]) {
                    (0, true) => (i + s - 1) % s,
                    (2, true) => (i + 1) % s,
                    (0, false) if i > 0 => i - 1,
                    (2, false) if i + 1 < s => i + 1,
                    _ => {
                        valid = false;
                        break;
                    }
                };
            }
            if valid && moved {
                let f = flatten(&n, &self.shape);
                if f != flat && !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, s)| acc * s + i)
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn annulus_grid<T: Real>(
    structure: Structure,
    cfg: &SearchConfig,
    an: AnnulusSeeds,
) -> SeedGrid<T> {
    let n_theta = cfg.grid_density;
    // odd, so that the middle level is the circle e = a itself
    let n_e = (cfg.grid_density / 4).max(3) | 1;
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| std::f64::consts::TAU * (i as f64 + 0.5) / n_theta as f64)
        .collect();
    let es = linspace(an.a / 2.0, 1.5 * an.a, n_e);
    let zs = if structure.is_contact() {
        let n_z = (cfg.grid_density / 8).max(3) | 1;
        linspace(-an.z_half_width, an.z_half_width, n_z)
    } else {
        vec![0.0]
    };
    let spacing = vec![
        std::f64::consts::TAU / n_theta as f64,
        es[1] - es[0],
        if zs.len() > 1 { zs[1] - zs[0] } else { 0.0 },
    ];
    let embed = move |q: &[f64]| {
        let r = q[1].max(0.0).sqrt();
        let mut p = vec![T::zero(); structure.dim()];
        p[0] = lit(r * q[0].cos());
        p[1] = lit(r * q[0].sin());
        if let Some(zi) = structure.z_index() {
            p[zi] = lit(q[2]);
        }
        p
    };
    let mut params = Vec::with_capacity(thetas.len() * es.len() * zs.len());
    for th in &thetas {
        for e in &es {
            for z in &zs {
                params.push(vec![*th, *e, *z]);
            }
        }
    }
    SeedGrid {
        points: params.iter().map(|q| embed(q)).collect(),
        params,
        shape: vec![thetas.len(), es.len(), zs.len()],
        periodic: vec![true, false, false],
        spacing,
        embed: Box::new(embed),
    }
}

fn box_grid<T: Real>(cfg: &SearchConfig) -> SeedGrid<T> {
    let d = cfg.coarse_density;
    let axes: Vec<Vec<f64>> = cfg
        .seed_box
        .iter()
        .map(|(lo, hi)| {
            (0..d)
                .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / d as f64)
                .collect()
        })
        .collect();
    let total = d.pow(axes.len() as u32);
    let shape = vec![d; axes.len()];
    let params: Vec<Vec<f64>> = (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut p = vec![0.0; axes.len()];
            for axis in (0..axes.len()).rev() {
                p[axis] = axes[axis][rest % d];
                rest /= d;
            }
            p
        })
        .collect();
    let embed = |q: &[f64]| q.iter().map(|v| lit::<T>(*v)).collect::<Vec<T>>();
    SeedGrid {
        points: params.iter().map(|q| embed(q)).collect(),
        params,
        periodic: vec![false; shape.len()],
        spacing: cfg
            .seed_box
            .iter()
            .map(|(lo, hi)| (hi - lo) / d as f64)
            .collect(),
        shape,
        embed: Box::new(embed),
    }
}

/// F(q) = φˡ(q) − q.
fn displacement<T: Real>(map: &TimeOneMap<T>, q: &[T], l: usize) -> Result<Vec<T>, FlowError> {
    let mut out = vec![T::zero(); q.len()];
    map.iterate_into(q, l, &mut out)?;
    for (o, x) in out.iter_mut().zip(q) {
        *o = *o - *x;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::NonFinite {
            completed_steps: 0,
            last_finite: q.iter().map(|v| to_f64(*v)).collect(),
        });
    }
    Ok(out)
}

/// Central-difference Jacobian of F(q) = φˡ(q) − q.
fn displacement_jacobian<T: Real>(
    map: &TimeOneMap<T>,
    q: &[T],
    l: usize,
) -> Result<Matrix<T>, FlowError> {
    let n = q.len();
    let h = lit::<T>(MAP_FD_STEP);
    let mut jac = Matrix::zeros(n, n);
    let mut shifted = q.to_vec();
    for j in 0..n {
        shifted[j] = q[j] + h;
        let plus = displacement(map, &shifted, l)?;
        shifted[j] = q[j] - h;
        let minus = displacement(map, &shifted, l)?;
        shifted[j] = q[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (h + h);
        }
    }
    Ok(jac)
}

const LINE_SEARCH_HALVINGS: usize = 20;
const PINV_RCOND: f64 = 1e-12;
// finite-difference noise level of D(φˡ) − I
const JACOBIAN_FLOOR: f64 = 1e-8;

struct NewtonOutcome<T> {
    point: Vec<T>,
    residual: T,
}

// consecutive slow iterations tolerated before Newton gives up, below and
// above the acceptance threshold
const STALL_CONVERGED: usize = 3;
const STALL_SEARCHING: usize = 8;

/// Damped Gauss–Newton with an SVD pseudo-inverse. Keeps polishing past
/// the tolerance until the residual stops halving, so that degenerate roots
/// are approached as closely as the step control allows.
fn newton<T: Real>(
    map: &TimeOneMap<T>,
    seed: &[T],
    l: usize,
    max_iter: usize,
    max_step: T,
    accept: T,
) -> Result<NewtonOutcome<T>, FlowError> {
    let mut x = seed.to_vec();
    let mut f = displacement(map, &x, l)?;
    let mut norm = norm2(&f);
    let tiny = lit::<T>(1e-15);
    let mut stalled = 0;
    for _ in 0..max_iter {
        if norm == T::zero() {
            break;
        }
        let jac = displacement_jacobian(map, &x, l)?;
        let mut step: Vec<T> = svd(&jac)
            .solve(&f, lit(PINV_RCOND), lit(JACOBIAN_FLOOR))
            .into_iter()
            .map(|v| -v)
            .collect();
        let length = max_abs(&step);
        if length > max_step {
            step.iter_mut().for_each(|v| *v = *v * max_step / length);
        }
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            let trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + lambda * *b).collect();
            if let Ok(ft) = displacement(map, &trial, l) {
                let nt = norm2(&ft);
                if nt < norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            lambda = lambda * lit(0.5);
        }
        let Some((trial, ft, nt)) = accepted else {
            break;
        };
        let moved = max_abs(&step) * lambda;
        if nt > norm * lit(0.5) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = trial;
        f = ft;
        norm = nt;
        let patience = if max_abs(&f) < accept {
            STALL_CONVERGED
        } else {
            STALL_SEARCHING
        };
        if moved <= tiny * (T::one() + max_abs(&x)) || stalled >= patience {
            break;
        }
    }
    Ok(NewtonOutcome {
        residual: max_abs(&f),
        point: x,
    })
}

fn proper_divisors(l: usize) -> Vec<usize> {
    (1..l).filter(|d| l % d == 0).collect()
}

/// Lexicographic order treating coordinates within `tol` as equal.
fn lex_cmp<T: Real>(a: &[T], b: &[T], tol: T) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (*x - *y).abs() > tol {
            return x.partial_cmp(y).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Index of the lexicographically smallest point of a cyclic sequence.
pub fn canonical_start<T: Real>(points: &[Vec<T>], tol: T) -> usize {
    let mut best = 0;
    for j in 1..points.len() {
        if lex_cmp(&points[j], &points[best], tol) == Ordering::Less {
            best = j;
        }
    }
    best
}

/// The rotation of `points` starting at its canonical representative.
pub fn canonical_rotation<T: Real>(points: &[Vec<T>], tol: T) -> Vec<Vec<T>> {
    let start = canonical_start(points, tol);
    points[start..]
        .iter()
        .chain(&points[..start])
        .cloned()
        .collect()
}

const PROBE_ITERATIONS: usize = 60;
const PROBE_ACCEPT: f64 = 1e-8;

/// Looks for another root of F on the hyperplane v·(y − x) = offset near x.
fn probe_direction<T: Real>(
    map: &TimeOneMap<T>,
    x: &[T],
    l: usize,
    direction: &[T],
    offset: T,
) -> Result<bool, FlowError> {
    let n = x.len();
    // orthonormal complement of `direction`
    let mut basis: Vec<Vec<T>> = Vec::new();
    for e in 0..n {
        let mut w = vec![T::zero(); n];
        w[e] = T::one();
        for b in std::iter::once(direction).chain(basis.iter().map(|b| b.as_slice())) {
            let dot = w.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + *p * *q);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi = *wi - dot * *bi;
            }
        }
        let norm = norm2(&w);
        if norm > lit(1e-8) {
            basis.push(w.iter().map(|v| *v / norm).collect());
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    let point = |t: &[T]| -> Vec<T> {
        (0..n)
            .map(|i| {
                x[i] + offset * direction[i]
                    + basis
                        .iter()
                        .zip(t)
                        .fold(T::zero(), |acc, (b, c)| acc + b[i] * *c)
            })
            .collect::<Vec<T>>()
    };
    let eval = |t: &[T]| displacement(map, &point(t), l);
    let mut t = vec![T::zero(); basis.len()];
    let mut f = eval(&t)?;
    let mut norm = norm2(&f);
    let h = lit::<T>(MAP_FD_STEP);
    let mut damping = lit::<T>(1e-6);
    for _ in 0..PROBE_ITERATIONS {
        if max_abs(&f) < lit(PROBE_ACCEPT) {
            break;
        }
        let m = basis.len();
        let mut jac = Matrix::zeros(n + m, m);
        for j in 0..m {
            let mut tp = t.clone();
            tp[j] = t[j] + h;
            let plus = eval(&tp)?;
            tp[j] = t[j] - h;
            let minus = eval(&tp)?;
            for i in 0..n {
                jac[(i, j)] = (plus[i] - minus[i]) / (h + h);
            }
        }
        let mut improved = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            for j in 0..m {
                jac[(n + j, j)] = damping.sqrt();
            }
            let mut rhs: Vec<T> = f.iter().map(|v| -*v).collect();
            rhs.extend(std::iter::repeat(T::zero()).take(m));
            let step = svd(&jac).solve(&rhs, lit(PINV_RCOND), T::zero());
            let trial: Vec<T> = t.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            if let Ok(ft) = eval(&trial) {
                let nt = norm2(&ft);
                if nt < norm {
                    t = trial;
                    f = ft;
                    norm = nt;
                    damping = (damping * lit(0.1)).max(lit(1e-12));
                    improved = true;
                    break;
                }
            }
            damping = damping * lit(10.0);
        }
        if !improved {
            break;
        }
    }
    let wander = max_abs(&t);
    Ok(max_abs(&f) < lit(PROBE_ACCEPT) && wander <= lit::<T>(10.0) * offset.abs())
}

/// Isolation of the root `x` of φˡ − id, with the smallest singular value of
/// D(φˡ) − I there. Near-null directions are probed for nearby roots.
pub fn classify_isolation<T: Real>(
    map: &TimeOneMap<T>,
    x: &[T],
    l: usize,
    family_threshold: f64,
    probe_offset: f64,
) -> (Isolation, T) {
    let jac = match displacement_jacobian(map, x, l) {
        Ok(j) => j,
        Err(_) => return (Isolation::Undetermined, T::nan()),
    };
    let dec: Svd<T> = svd(&jac);
    let min_condition = dec.min_singular_value();
    if !min_condition.is_finite() {
        return (Isolation::Undetermined, min_condition);
    }
    if min_condition >= lit(family_threshold) {
        return (Isolation::Isolated, min_condition);
    }
    for (j, s) in dec.sigma.iter().enumerate() {
        if *s >= lit(family_threshold) {
            continue;
        }
        let v = dec.v.column(j);
        for sign in [1.0, -1.0] {
            match probe_direction(map, x, l, &v, lit::<T>(sign * probe_offset)) {
                Ok(true) => return (Isolation::Family, min_condition),
                Ok(false) => {}
                Err(_) => return (Isolation::Undetermined, min_condition),
            }
        }
    }
    (Isolation::Isolated, min_condition)
}

// halvings of the zoom stencil, starting from half a grid cell
const ZOOM_LEVELS: u32 = 6;
const ZOOM_MAX_EVALS: usize = 300;

/// Derivative-free descent of |F| in grid coordinates, confined to the
/// cell around the seed. Degenerate roots have Newton basins far smaller
/// than a grid cell; this walks the seed into one.
fn zoom_seed<T: Real>(
    map: &TimeOneMap<T>,
    grid: &SeedGrid<T>,
    seed: usize,
    l: usize,
    accept: T,
) -> Vec<T> {
    let origin = &grid.params[seed];
    let active: Vec<usize> = (0..origin.len())
        .filter(|&i| grid.spacing[i] > 0.0)
        .collect();
    let objective = |q: &[f64]| -> f64 {
        displacement(map, &(grid.embed)(q), l)
            .map(|f| to_f64(norm2(&f)))
            .unwrap_or(f64::INFINITY)
    };
    let stencil: Vec<Vec<f64>> = if active.len() <= 3 {
        (0..3usize.pow(active.len() as u32))
            .map(|code| {
                let mut c = code;
                active
                    .iter()
                    .map(|_| {
                        let s = (c % 3) as f64 - 1.0;
                        c /= 3;
                        s
                    })
                    .collect::<Vec<f64>>()
            })
            .filter(|m| m.iter().any(|v| *v != 0.0))
            .collect()
    } else {
        (0..active.len())
            .flat_map(|j| {
                [1.0, -1.0].map(|s| {
                    let mut m = vec![0.0; active.len()];
                    m[j] = s;
                    m
                })
            })
            .collect()
    };
    let mut q = origin.clone();
    let mut best = objective(&q);
    let mut evals = 1;
    let mut scale = 0.5;
    let stop = to_f64(accept);
    while scale >= 0.5 / 2f64.powi(ZOOM_LEVELS as i32) && best > stop && evals < ZOOM_MAX_EVALS {
        let mut next: Option<(f64, Vec<f64>)> = None;
        for m in &stencil {
            let mut trial = q.clone();
            for (&axis, dir) in active.iter().zip(m) {
                trial[axis] += dir * scale * grid.spacing[axis];
            }
            let inside = active
                .iter()
                .all(|&a| (trial[a] - origin[a]).abs() <= grid.spacing[a] * (1.0 + 1e-12));
            if !inside {
                continue;
            }
            let value = objective(&trial);
            evals += 1;
            if value < next.as_ref().map_or(best, |n| n.0) {
                next = Some((value, trial));
            }
        }
        match next {
            Some((value, trial)) => {
                best = value;
                q = trial;
            }
            None => scale *= 0.5,
        }
    }
    (grid.embed)(&q)
}

const CHORD_ITERATIONS: usize = 8;
// initial stencil and resolution of the slow-manifold descent
const SETTLE_SPAN: f64 = 1e-4;
const SETTLE_RESOLUTION: f64 = 1e-10;
const SETTLE_MAX_EVALS: usize = 600;
const MERGE_SAMPLES: usize = 8;

/// Splitting of D(φˡ) − I at a degenerate root into strong and weak
/// singular directions. Points are pulled back onto the slow manifold
/// {F small} by chord steps along the strong directions only.
struct SlowChart<T> {
    strong: Vec<(Vec<T>, T, Vec<T>)>,
    weak: Vec<Vec<T>>,
}

impl<T: Real> SlowChart<T> {
    fn at(
        map: &TimeOneMap<T>,
        x: &[T],
        l: usize,
        threshold: f64,
    ) -> Result<Option<Self>, FlowError> {
        let dec = svd(&displacement_jacobian(map, x, l)?);
        let mut strong = Vec::new();
        let mut weak = Vec::new();
        for (j, s) in dec.sigma.iter().enumerate() {
            if *s >= lit(threshold) {
                strong.push((dec.u.column(j), *s, dec.v.column(j)));
            } else {
                weak.push(dec.v.column(j));
            }
        }
        Ok((!weak.is_empty() && !strong.is_empty()).then_some(Self { strong, weak }))
    }

    fn project(
        &self,
        map: &TimeOneMap<T>,
        y: Vec<T>,
        l: usize,
    ) -> Result<(Vec<T>, Vec<T>), FlowError> {
        let mut y = y;
        let mut f = displacement(map, &y, l)?;
        let mut norm = norm2(&f);
        for _ in 0..CHORD_ITERATIONS {
            let mut trial = y.clone();
            for (u, s, v) in &self.strong {
                let c = u
                    .iter()
                    .zip(&f)
                    .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
                    / *s;
                for (t, vi) in trial.iter_mut().zip(v) {
                    *t = *t - c * *vi;
                }
            }
            let ft = displacement(map, &trial, l)?;
            let nt = norm2(&ft);
            if !(nt < norm) {
                break;
            }
            y = trial;
            f = ft;
            norm = nt;
        }
        Ok((y, f))
    }
}

/// Moves a root to the minimum of |F| on the slow manifold. At a
/// degenerate root every point of a short arc meets the acceptance level;
/// the minimum is the reproducible representative.
fn settle<T: Real>(
    map: &TimeOneMap<T>,
    x: &[T],
    l: usize,
    threshold: f64,
) -> Result<Vec<T>, FlowError> {
    let Some(chart) = SlowChart::at(map, x, l, threshold)? else {
        return Ok(x.to_vec());
    };
    let w = chart.weak.len();
    let lift = |s: &[f64]| -> Vec<T> {
        let mut y = x.to_vec();
        for (dir, c) in chart.weak.iter().zip(s) {
            for (yi, di) in y.iter_mut().zip(dir) {
                *yi = *yi + lit::<T>(*c) * *di;
            }
        }
        y
    };
    let objective = |s: &[f64]| -> f64 {
        chart
            .project(map, lift(s), l)
            .map(|(_, f)| to_f64(norm2(&f)))
            .unwrap_or(f64::INFINITY)
    };
    let mut s = vec![0.0; w];
    let mut best = objective(&s);
    let mut h = SETTLE_SPAN;
    let mut evals = 1;
    while h >= SETTLE_RESOLUTION && evals < SETTLE_MAX_EVALS {
        let mut next: Option<(f64, Vec<f64>)> = None;
        for code in 0..3usize.pow(w as u32) {
            let mut c = code;
            let mut trial = s.clone();
            let mut moved = false;
            for t in trial.iter_mut() {
                let shift = (c % 3) as f64 - 1.0;
                c /= 3;
                moved |= shift != 0.0;
                *t += shift * h;
            }
            if !moved {
                continue;
            }
            let value = objective(&trial);
            evals += 1;
            if value < next.as_ref().map_or(best, |n| n.0) {
                next = Some((value, trial));
            }
        }
        match next {
            Some((value, trial)) => {
                best = value;
                s = trial;
            }
            None => h *= 0.5,
        }
    }
    Ok(chart.project(map, lift(&s), l)?.0)
}

/// True when the residual stays below `accept` on the slow-manifold path
/// from `from` to `to`.
fn connected<T: Real>(
    map: &TimeOneMap<T>,
    from: &[T],
    to: &[T],
    l: usize,
    accept: T,
    threshold: f64,
) -> bool {
    let Ok(chart) = SlowChart::at(map, to, l, threshold) else {
        return false;
    };
    (1..MERGE_SAMPLES).all(|i| {
        let t = lit::<T>(i as f64 / MERGE_SAMPLES as f64);
        let y: Vec<T> = to
            .iter()
            .zip(from)
            .map(|(q, p)| *q + t * (*p - *q))
            .collect();
        let residual = match &chart {
            Some(c) => c.project(map, y, l).map(|(_, f)| max_abs(&f)),
            None => displacement(map, &y, l).map(|f| max_abs(&f)),
        };
        residual.map_or(false, |r| r < accept)
    })
}

fn follow<T: Real>(map: &TimeOneMap<T>, x: Vec<T>, l: usize) -> Option<Vec<Vec<T>>> {
    let mut orbit = vec![x];
    let mut next = vec![T::zero(); orbit[0].len()];
    for _ in 1..l {
        map.apply_into(orbit.last().unwrap(), &mut next).ok()?;
        orbit.push(next.clone());
    }
    Some(orbit)
}

fn nearest_known<'a, T: Real>(orbits: &'a [Vec<Vec<T>>], x: &[T]) -> Option<(T, &'a [T])> {
    orbits
        .iter()
        .flat_map(|o| o.iter())
        .map(|q| (dist_inf(q, x), q.as_slice()))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal))
}

/// Finds l-periodic classes of `map` with minimal period l.
pub fn find_periodic_classes<T: Real>(
    map: &TimeOneMap<T>,
    l: usize,
    cfg: &SearchConfig,
) -> Result<OrbitSearch<T>, OrbitError> {
    if l < 2 {
        return Err(OrbitError::PeriodTooSmall(l));
    }
    let structure = map.structure();
    cfg.validate(structure)?;
    let mut grids = Vec::new();
    if let Some(an) = cfg.annulus {
        grids.push(annulus_grid::<T>(structure, cfg, an));
    }
    if cfg.coarse_density > 0 {
        grids.push(box_grid::<T>(cfg));
    }
    let mut diag = SearchDiagnostics::default();
    let accept = lit::<T>(10.0 * cfg.newton_tol);

    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    for (g, grid) in grids.iter().enumerate() {
        diag.seeds += grid.points.len();
        let residuals: Vec<Option<T>> = grid
            .points
            .par_iter()
            .map(|p| displacement(map, p, l).ok().map(|f| max_abs(&f)))
            .collect();
        diag.non_finite_seeds += residuals.iter().filter(|r| r.is_none()).count();
        for (i, r) in residuals.iter().enumerate() {
            let Some(r) = *r else { continue };
            let local_min = r < accept
                || grid
                    .neighbours(i)
                    .iter()
                    .all(|&j| residuals[j].map_or(true, |rj| r <= rj));
            if local_min {
                candidates.push((r, g, i));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| lex_cmp(&grids[a.1].points[a.2], &grids[b.1].points[b.2], T::zero()))
    });
    if candidates.len() > cfg.max_newton_starts {
        diag.partial = true;
        candidates.truncate(cfg.max_newton_starts);
    }
    diag.newton_starts = candidates.len();

    let mut roots: Vec<(T, Vec<T>)> = candidates
        .par_iter()
        .filter_map(|&(_, g, i)| {
            let start = zoom_seed(map, &grids[g], i, l, accept);
            match newton(
                map,
                &start,
                l,
                cfg.newton_max_iter,
                lit(cfg.newton_max_step),
                accept,
            ) {
                Ok(out) if out.residual < accept => Some((out.residual, out.point)),
                _ => None,
            }
        })
        .collect();
    roots.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| lex_cmp(&a.1, &b.1, T::zero()))
    });

    let dedup = lit::<T>(cfg.dedup_tol);
    let merge = lit::<T>(cfg.merge_radius);
    let mut orbits: Vec<Vec<Vec<T>>> = Vec::new();
    for (_, root) in roots {
        diag.converged += 1;
        let Some(orbit) = follow(map, root, l) else {
            diag.non_finite_seeds += 1;
            continue;
        };
        let minimal = proper_divisors(l)
            .iter()
            .all(|&d| dist_inf(&orbit[d % l], &orbit[0]) > dedup);
        if !minimal {
            diag.non_minimal += 1;
            continue;
        }
        if let Some((gap, q)) = nearest_known(&orbits, &orbit[0]) {
            if gap <= dedup
                || (gap <= merge && connected(map, &orbit[0], q, l, accept, cfg.family_threshold))
            {
                diag.duplicates += 1;
                continue;
            }
        }
        let settled = settle(map, &orbit[0], l, cfg.family_threshold)?;
        let Some(orbit) = follow(map, settled, l) else {
            diag.non_finite_seeds += 1;
            continue;
        };
        if nearest_known(&orbits, &orbit[0]).map_or(false, |(gap, _)| gap <= dedup) {
            diag.duplicates += 1;
            continue;
        }
        orbits.push(orbit);
    }

    let mut classes: Vec<OrbitClass<T>> = orbits
        .par_iter()
        .map(|orbit| build_class(map, orbit, l, cfg))
        .collect::<Result<_, _>>()?;
    classes.sort_by(|a, b| lex_cmp(a.points[0].coords(), b.points[0].coords(), T::zero()));
    Ok(OrbitSearch {
        period: l,
        classes,
        diagnostics: diag,
    })
}

fn build_class<T: Real>(
    map: &TimeOneMap<T>,
    orbit: &[Vec<T>],
    l: usize,
    cfg: &SearchConfig,
) -> Result<OrbitClass<T>, OrbitError> {
    let rotated = canonical_rotation(orbit, lit(cfg.dedup_tol));
    let first = &rotated[0];
    let residual = max_abs(&displacement(map, first, l)?);
    let (isolation, min_condition) =
        classify_isolation(map, first, l, cfg.family_threshold, cfg.probe_offset);
    let points = rotated
        .into_iter()
        .map(|p| PhasePoint::new(map.structure(), p))
        .collect::<Result<_, _>>()
        .map_err(FlowError::from)?;
    Ok(OrbitClass {
        period: l,
        points,
        residual,
        isolation,
        min_condition,
    })
}

/// The 2k points (√a·cos(iπ/k), √a·sin(iπ/k), 0, …, 0) for i = 1, …, 2k.
pub fn circle_targets<T: Real>(a: T, k: u32, structure: Structure) -> Vec<PhasePoint<T>> {
    let r = a.sqrt();
    (1..=2 * k)
        .map(|i| {
            let angle = T::PI() * T::from_u32(i).unwrap() / T::from_u32(k).unwrap();
            let mut c = vec![T::zero(); structure.dim()];
            c[0] = r * angle.cos();
            c[1] = r * angle.sin();
            PhasePoint::new(structure, c).expect("finite coordinates")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCheck {
    /// max_j |φ(x_j) − x_{j+1}|∞ for j < l.
    pub max_step_error: f64,
    /// |φ(x_l) − x₁|∞.
    pub closure_error: f64,
    pub distinctness_min_gap: f64,
}

impl ClassCheck {
    pub fn passes(&self, step_tol: f64, dedup_tol: f64) -> bool {
        self.max_step_error < step_tol
            && self.closure_error < step_tol
            && self.distinctness_min_gap > dedup_tol
    }
}

/// Recomputes the defining conditions of a class from the map alone.
pub fn verify_class<T: Real>(
    map: &TimeOneMap<T>,
    class: &OrbitClass<T>,
) -> Result<ClassCheck, OrbitError> {
    let pts = &class.points;
    if pts.is_empty() || pts.len() != class.period {
        return Err(OrbitError::MalformedClass(format!(
            "{} points for period {}",
            pts.len(),
            class.period
        )));
    }
    let mut step = 0.0f64;
    let mut closure = 0.0;
    for (j, p) in pts.iter().enumerate() {
        let image = map.apply(p)?;
        let target = &pts[(j + 1) % pts.len()];
        let err = to_f64(dist_inf(image.coords(), target.coords()));
        if j + 1 < pts.len() {
            step = step.max(err);
        } else {
            closure = err;
        }
    }
    let mut gap = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            gap = gap.min(to_f64(dist_inf(pts[i].coords(), pts[j].coords())));
        }
    }
    if pts.len() == 1 {
        gap = 0.0;
    }
    Ok(ClassCheck {
        max_step_error: step,
        closure_error: closure,
        distinctness_min_gap: gap,
    })
}

/// Writes `class_id,period,point_index,<coords>,residual,isolation` rows.
pub fn write_orbit_csv<T: Real, W: Write>(
    classes: &[OrbitClass<T>],
    structure: Structure,
    mut w: W,
) -> io::Result<()> {
    let mut header = vec![
        "class_id".to_string(),
        "period".into(),
        "point_index".into(),
    ];
    for i in 1..=structure.n() {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    if structure.is_contact() {
        header.push("z".into());
    }
    header.push("residual".into());
    header.push("isolation".into());
    writeln!(w, "{}", header.join(","))?;
    for (id, class) in classes.iter().enumerate() {
        for (j, p) in class.points.iter().enumerate() {
            let coords: Vec<String> = p
                .coords()
                .iter()
                .map(|c| format!("{:e}", to_f64(*c)))
                .collect();
            writeln!(
                w,
                "{id},{},{j},{},{:e},{}",
                class.period,
                coords.join(","),
                to_f64(class.residual),
                class.isolation
            )?;
        }
    }
    Ok(())
}
