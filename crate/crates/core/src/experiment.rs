//! Scenario configuration, the end-to-end run and its reports.
//!
//! Configs are flat `key = value` text with `scenario.`, `profiles.`,
//! `search.` and `output.` prefixes. `#` starts a comment.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flows::{
    energy_drift, verify_contactomorphism, z_min_drift_flow, FlowDiagnostics, FlowError,
    TimeOneMap, MIN_STEPS,
};
use crate::geometry::{HamiltonianField, PhasePoint, ScalarHamiltonian, Structure};
use crate::milnor::{parity_conclude, MilnorError, ParityReport};
use crate::orbits::{
    circle_targets, find_periodic_classes, verify_class, write_orbit_csv, ClassCheck, OrbitError,
    OrbitSearch, SearchConfig,
};
use crate::profiles::{
    BetaCertificate, BetaProfile, EtaCutoff, ProfileError, RhoCertificate, RhoProfile, RhoShape,
    Variant,
};
use crate::scalar::dist_inf;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Grid size of the profile certificates.
pub const CERTIFICATE_SAMPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("profile construction failed: {0}")]
    Profile(#[from] ProfileError),
    #[error("flow failed: {0}")]
    Flow(#[from] FlowError),
    #[error("orbit search failed: {0}")]
    Orbit(#[from] OrbitError),
    #[error("parity decision failed: {0}")]
    Milnor(#[from] MilnorError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which perturbation is composed with the radial flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PerturbationVariant {
    /// Contact, g = η·ε·(1 − cos kθ) as literally stated.
    #[serde(rename = "m_equals_k")]
    MEqualsK,
    /// Contact, g = η·ε·(1 − cos 2kθ), whose fixed points on the circle are
    /// all 2k target points.
    #[serde(rename = "m_equals_2k")]
    MEquals2k,
    /// Symplectic, g = η·ε·cos kθ.
    #[serde(rename = "symplectic_cos_k")]
    SymplecticCosK,
}

impl PerturbationVariant {
    pub const NAMES: [&'static str; 3] = ["m_equals_k", "m_equals_2k", "symplectic_cos_k"];

    pub fn name(&self) -> &'static str {
        match self {
            PerturbationVariant::MEqualsK => Self::NAMES[0],
            PerturbationVariant::MEquals2k => Self::NAMES[1],
            PerturbationVariant::SymplecticCosK => Self::NAMES[2],
        }
    }

    /// Angular multiplier of the perturbation for a given k.
    pub fn multiplier(&self, k: u32) -> u32 {
        match self {
            PerturbationVariant::MEquals2k => 2 * k,
            _ => k,
        }
    }

    pub fn is_contact(&self) -> bool {
        !matches!(self, PerturbationVariant::SymplecticCosK)
    }
}

impl fmt::Display for PerturbationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m_equals_k" => Ok(PerturbationVariant::MEqualsK),
            "m_equals_2k" => Ok(PerturbationVariant::MEquals2k),
            "symplectic_cos_k" => Ok(PerturbationVariant::SymplecticCosK),
            other => Err(format!(
                "unknown variant '{other}', expected one of {}",
                Self::NAMES.join(", ")
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffParams {
    pub delta_inner: f64,
    pub delta_outer: f64,
    /// Inner radius of the cut-off support in the first plane; defaults to √(a/2).
    pub r_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub report: String,
    pub orbits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub structure: Structure,
    pub k: u32,
    pub radius: f64,
    pub a: f64,
    pub epsilon: f64,
    pub variant: PerturbationVariant,
    pub rho_shape: RhoShape<f64>,
    pub cutoff: CutoffParams,
    pub search: SearchConfig,
    /// Period searched for; 2k unless overridden.
    pub period: usize,
    pub steps: usize,
    /// Random points used by the flow diagnostics.
    pub diagnostic_samples: usize,
    pub rng_seed: u64,
    pub output: OutputPaths,
    /// SHA-256 of the config text the scenario was parsed from.
    pub config_hash: Option<String>,
}

impl Scenario {
    /// n = 1, k = 2, R = 1, a = 0.2, ε = 1e−3, steps = 1000, contact with
    /// the m = 2k perturbation.
    pub fn desk_default() -> Self {
        let structure = Structure::Contact { n: 1 };
        let cutoff = CutoffParams {
            delta_inner: 0.02,
            delta_outer: 0.05,
            r_min: None,
        };
        Self {
            name: "desk".into(),
            structure,
            k: 2,
            radius: 1.0,
            a: 0.2,
            epsilon: 1e-3,
            variant: PerturbationVariant::MEquals2k,
            rho_shape: RhoShape::default(),
            cutoff,
            search: SearchConfig::around_circle(structure, 1.0, 0.2, cutoff.delta_outer),
            period: 4,
            steps: 1000,
            diagnostic_samples: 200,
            rng_seed: 7,
            output: OutputPaths {
                dir: PathBuf::from("out"),
                report: "report.json".into(),
                orbits: "orbits.csv".into(),
            },
            config_hash: None,
        }
    }

    /// Parses config text; keys not given keep their desk defaults.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut entries: HashMap<String, (usize, String)> = HashMap::new();
        let mut order = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(config_err(
                    line,
                    format!("expected 'key = value', found '{content}'"),
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(config_err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("missing value for '{key}'")));
            }
            if let Some((first, _)) = entries.get(&key) {
                return Err(config_err(
                    line,
                    format!("duplicate key '{key}' (first set on line {first})"),
                ));
            }
            order.push(key.clone());
            entries.insert(key, (line, value));
        }
        let mut s = Self::desk_default();
        let cfg = Entries { map: &entries };

        let n: usize = cfg.get("scenario.n")?.unwrap_or(1);
        if n == 0 {
            return Err(cfg.err("scenario.n", "n must be at least 1"));
        }
        s.structure = match cfg.raw("scenario.structure") {
            None | Some("contact") => Structure::Contact { n },
            Some("symplectic") => Structure::Symplectic { n },
            Some(other) => {
                return Err(cfg.err(
                    "scenario.structure",
                    &format!("unknown structure '{other}', expected contact or symplectic"),
                ))
            }
        };
        if let Some(name) = cfg.raw("scenario.name") {
            s.name = name.to_string();
        }
        s.k = cfg.get("scenario.k")?.unwrap_or(s.k);
        s.radius = cfg.get("scenario.radius")?.unwrap_or(s.radius);
        s.a = cfg.get("scenario.a")?.unwrap_or(s.a);
        s.epsilon = cfg.get("scenario.epsilon")?.unwrap_or(s.epsilon);
        s.variant = match cfg.get::<PerturbationVariant>("scenario.variant")? {
            Some(v) => v,
            None if s.structure.is_contact() => PerturbationVariant::MEquals2k,
            None => PerturbationVariant::SymplecticCosK,
        };
        s.steps = cfg.get("scenario.steps")?.unwrap_or(s.steps);
        s.diagnostic_samples = cfg
            .get("scenario.diagnostic_samples")?
            .unwrap_or(s.diagnostic_samples);
        s.rng_seed = cfg.get("scenario.seed")?.unwrap_or(s.rng_seed);

        s.rho_shape.sharpness = cfg
            .get("profiles.sharpness")?
            .unwrap_or(s.rho_shape.sharpness);
        s.rho_shape.plateau_depth = cfg
            .get("profiles.plateau_depth")?
            .unwrap_or(s.rho_shape.plateau_depth);
        s.cutoff.delta_inner = cfg
            .get("profiles.delta_inner")?
            .unwrap_or(s.cutoff.delta_inner);
        s.cutoff.delta_outer = cfg
            .get("profiles.delta_outer")?
            .unwrap_or(s.cutoff.delta_outer);
        s.cutoff.r_min = cfg.get("profiles.r_min")?.or(s.cutoff.r_min);

        let seed_radius: f64 = cfg.get("search.seed_radius")?.unwrap_or(s.radius);
        let z_half_width: f64 = cfg
            .get("search.z_half_width")?
            .unwrap_or(s.cutoff.delta_outer);
        let mut search = SearchConfig::around_circle(s.structure, seed_radius, s.a, z_half_width);
        if cfg.get::<bool>("search.annulus")? == Some(false) {
            search.annulus = None;
        }
        search.grid_density = cfg
            .get("search.grid_density")?
            .unwrap_or(search.grid_density);
        search.coarse_density = cfg
            .get("search.coarse_density")?
            .unwrap_or(search.coarse_density);
        search.newton_tol = cfg.get("search.newton_tol")?.unwrap_or(search.newton_tol);
        search.newton_max_iter = cfg
            .get("search.newton_max_iter")?
            .unwrap_or(search.newton_max_iter);
        search.dedup_tol = cfg.get("search.dedup_tol")?.unwrap_or(search.dedup_tol);
        search.family_threshold = cfg
            .get("search.family_threshold")?
            .unwrap_or(search.family_threshold);
        search.max_newton_starts = cfg
            .get("search.max_newton_starts")?
            .unwrap_or(search.max_newton_starts);
        search.probe_offset = cfg
            .get("search.probe_offset")?
            .unwrap_or(search.probe_offset);
        search.newton_max_step = cfg
            .get("search.newton_max_step")?
            .unwrap_or(search.newton_max_step);
        search.merge_radius = cfg
            .get("search.merge_radius")?
            .unwrap_or(search.merge_radius);
        s.search = search;
        s.period = cfg.get("search.period")?.unwrap_or(2 * s.k as usize);

        if let Some(dir) = cfg.raw("output.dir") {
            s.output.dir = PathBuf::from(dir);
        }
        if let Some(report) = cfg.raw("output.report") {
            s.output.report = report.to_string();
        }
        if let Some(orbits) = cfg.raw("output.orbits") {
            s.output.orbits = orbits.to_string();
        }
        s.config_hash = Some(config_hash(text));

        s.validate_with(|key| entries.get(key).map(|e| e.0))?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Checks the scenario invariants and that every profile can be built.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.validate_with(|_| None)
    }

    fn validate_with(
        &self,
        line_of: impl Fn(&str) -> Option<usize>,
    ) -> Result<(), ExperimentError> {
        let fail = |key: &str, message: String| match line_of(key) {
            Some(line) => ExperimentError::Config { line, message },
            None => ExperimentError::Invalid(message),
        };
        if self.k == 0 {
            return Err(fail("scenario.k", "k must be a positive integer".into()));
        }
        if !(self.radius > 0.0) {
            return Err(fail(
                "scenario.radius",
                format!("radius must be positive, got {}", self.radius),
            ));
        }
        let cap = self.radius * self.radius / 2.0;
        if !(self.a > 0.0 && self.a < cap) {
            return Err(fail(
                "scenario.a",
                format!(
                    "a = {} violates the constraint 0 < a < R²/2 = {cap} (R = {})",
                    self.a, self.radius
                ),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(fail(
                "scenario.epsilon",
                format!("epsilon must be positive, got {}", self.epsilon),
            ));
        }
        if self.variant.is_contact() != self.structure.is_contact() {
            return Err(fail(
                "scenario.variant",
                format!(
                    "variant {} does not match the {} structure",
                    self.variant,
                    if self.structure.is_contact() {
                        "contact"
                    } else {
                        "symplectic"
                    }
                ),
            ));
        }
        if self.steps < MIN_STEPS {
            return Err(fail(
                "scenario.steps",
                format!("steps must be at least {MIN_STEPS}, got {}", self.steps),
            ));
        }
        if self.period < 2 || self.period % 2 == 1 {
            return Err(fail(
                "search.period",
                format!("period must be even and at least 2, got {}", self.period),
            ));
        }
        let eta = self.cutoff()?;
        // the radial coordinate of the first plane moves by at most 2εm
        let floor = eta.r_min() * eta.r_min();
        let swing = 2.0 * self.epsilon * self.variant.multiplier(self.k) as f64;
        if !(floor - swing > 0.0) {
            return Err(fail(
                "scenario.epsilon",
                format!(
                    "epsilon = {} too large: radicand r² − 2εm can reach {:.3e} ≤ 0 on the cut-off support (r_min² = {floor})",
                    self.epsilon,
                    floor - swing
                ),
            ));
        }
        self.rho()?;
        if self.structure.is_contact() {
            BetaProfile::build(self.radius)?;
        }
        self.search.validate(self.structure)?;
        Ok(())
    }

    fn rho(&self) -> Result<RhoProfile<f64>, ExperimentError> {
        let variant = if self.structure.is_contact() {
            Variant::Contact
        } else {
            Variant::Symplectic
        };
        Ok(RhoProfile::build_with_shape(
            self.k,
            self.radius,
            self.a,
            variant,
            self.rho_shape,
        )?)
    }

    fn cutoff(&self) -> Result<EtaCutoff<f64>, ExperimentError> {
        let r_min = self.cutoff.r_min.unwrap_or((self.a / 2.0).sqrt());
        Ok(EtaCutoff::build(
            self.a,
            self.cutoff.delta_inner,
            self.cutoff.delta_outer,
            r_min,
        )?)
    }

    /// Builds profiles, Hamiltonians and the three maps.
    pub fn build(&self) -> Result<Construction, ExperimentError> {
        self.validate()?;
        let n = self.structure.n();
        let rho = self.rho()?;
        let eta = self.cutoff()?;
        let (beta, hamiltonian) = if self.structure.is_contact() {
            let beta = BetaProfile::build(self.radius)?;
            (
                Some(beta),
                ScalarHamiltonian::radial_contact(rho.clone(), beta, n),
            )
        } else {
            (None, ScalarHamiltonian::radial_symplectic(rho.clone(), n))
        };
        let radial = TimeOneMap::hamiltonian_flow(hamiltonian.clone(), self.structure, self.steps)?;
        let perturbation = match self.variant {
            PerturbationVariant::SymplecticCosK => TimeOneMap::symplectic_perturbation(
                self.epsilon,
                self.k,
                eta.clone(),
                n,
                self.steps,
            )?,
            v => TimeOneMap::contact_perturbation(
                self.epsilon,
                v.multiplier(self.k),
                eta.clone(),
                n,
                self.steps,
            )?,
        };
        let perturbed = TimeOneMap::compose(vec![perturbation.clone(), radial.clone()])?;
        Ok(Construction {
            rho,
            beta,
            eta,
            hamiltonian,
            radial,
            perturbation,
            perturbed,
        })
    }

    /// Uniform samples: half in the cut-off support, half in the support
    /// box of the radial Hamiltonian.
    pub fn diagnostic_points(&self) -> Vec<PhasePoint<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let dim = self.structure.dim();
        let d = self.cutoff.delta_outer;
        let reach = self.radius / std::f64::consts::SQRT_2;
        (0..self.diagnostic_samples)
            .map(|i| {
                let mut c = vec![0.0; dim];
                if i % 2 == 0 {
                    let e = rng.gen_range(self.a - d..self.a + d);
                    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                    c[0] = e.max(0.0).sqrt() * theta.cos();
                    c[1] = e.max(0.0).sqrt() * theta.sin();
                    if let Some(z) = self.structure.z_index() {
                        c[z] = rng.gen_range(-d..d);
                    }
                } else {
                    for v in c.iter_mut() {
                        *v = rng.gen_range(-reach..reach);
                    }
                    if let Some(z) = self.structure.z_index() {
                        c[z] = rng.gen_range(-self.radius / 2.0..self.radius / 2.0);
                    }
                }
                PhasePoint::new(self.structure, c).expect("finite sample")
            })
            .collect()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "scenario.name",
    "scenario.structure",
    "scenario.n",
    "scenario.k",
    "scenario.radius",
    "scenario.a",
    "scenario.epsilon",
    "scenario.variant",
    "scenario.steps",
    "scenario.diagnostic_samples",
    "scenario.seed",
    "profiles.sharpness",
    "profiles.plateau_depth",
    "profiles.delta_inner",
    "profiles.delta_outer",
    "profiles.r_min",
    "search.annulus",
    "search.seed_radius",
    "search.z_half_width",
    "search.grid_density",
    "search.coarse_density",
    "search.newton_tol",
    "search.newton_max_iter",
    "search.dedup_tol",
    "search.family_threshold",
    "search.max_newton_starts",
    "search.probe_offset",
    "search.newton_max_step",
    "search.merge_radius",
    "search.period",
    "output.dir",
    "output.report",
    "output.orbits",
];

fn config_err(line: usize, message: String) -> ExperimentError {
    ExperimentError::Config { line, message }
}

struct Entries<'a> {
    map: &'a HashMap<String, (usize, String)>,
}

impl Entries<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>, ExperimentError>
    where
        V::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<V>()
                .map(Some)
                .map_err(|e| config_err(*line, format!("bad value '{v}' for '{key}': {e}"))),
        }
    }

    fn err(&self, key: &str, message: &str) -> ExperimentError {
        match self.map.get(key) {
            Some((line, _)) => config_err(*line, message.to_string()),
            None => ExperimentError::Invalid(message.to_string()),
        }
    }
}

/// Hex SHA-256 of config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Everything built from a scenario.
pub struct Construction {
    pub rho: RhoProfile<f64>,
    pub beta: Option<BetaProfile<f64>>,
    pub eta: EtaCutoff<f64>,
    pub hamiltonian: ScalarHamiltonian<f64>,
    /// Time-one map of the radial Hamiltonian.
    pub radial: TimeOneMap<f64>,
    pub perturbation: TimeOneMap<f64>,
    /// Perturbation applied after the radial map.
    pub perturbed: TimeOneMap<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileChecks {
    pub rho: RhoCertificate,
    pub beta: Option<BetaCertificate>,
    pub passed: bool,
}

/// Grid certificates of the scenario's profiles.
pub fn check_profiles(s: &Scenario) -> Result<ProfileChecks, ExperimentError> {
    let c = s.build()?;
    let rho = c.rho.certify(CERTIFICATE_SAMPLES);
    let beta = c.beta.map(|b| b.certify(CERTIFICATE_SAMPLES));
    let passed = rho.passed && beta.as_ref().map_or(true, |b| b.passed);
    Ok(ProfileChecks { rho, beta, passed })
}

/// Vertical displacement of the perturbation at one target point.
#[derive(Debug, Clone, Serialize)]
pub struct PointShift {
    /// 1-based index i of the point at angle iπ/k.
    pub index: u32,
    pub z_shift: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub build_s: f64,
    pub diagnostics_s: f64,
    pub search_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: Option<String>,
    pub scenario: Scenario,
    pub profiles: ProfileChecks,
    pub flow: FlowDiagnostics,
    /// z(φ_g(p)) − z(p) at the 2k target points (contact only).
    pub perturbation_shifts: Vec<PointShift>,
    pub search: OrbitSearch<f64>,
    pub class_checks: Vec<ClassCheck>,
    /// Per class, the largest distance from one of its points to the
    /// nearest target point.
    pub target_distance: Vec<f64>,
    pub parity: ParityReport,
    /// The parity certificate holds and the search was complete.
    pub certified: bool,
    pub timing: Timing,
}

/// Runs the full pipeline: construction, diagnostics, orbit search and the
/// parity decision.
pub fn run_scenario(s: &Scenario) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let c = s.build()?;
    let profiles = check_profiles(s)?;
    let mut timing = Timing {
        build_s: start.elapsed().as_secs_f64(),
        ..Timing::default()
    };

    let t = Instant::now();
    let samples = s.diagnostic_points();
    let mut flow = FlowDiagnostics::default();
    if s.structure.is_contact() {
        let field = HamiltonianField::new(c.hamiltonian.clone(), s.structure);
        flow.z_min_drift = Some(z_min_drift_flow(&field, &samples, 1.0, s.steps)?);
        flow.contact_defect = Some(verify_contactomorphism(&c.perturbed, &samples)?);
    } else {
        flow.energy_drift = Some(energy_drift(&c.radial, &c.hamiltonian, &samples)?);
    }
    let targets = circle_targets(s.a, s.k, s.structure);
    let mut perturbation_shifts = Vec::new();
    if let Some(z) = s.structure.z_index() {
        for (i, p) in targets.iter().enumerate() {
            let q = c.perturbation.apply(p)?;
            perturbation_shifts.push(PointShift {
                index: i as u32 + 1,
                z_shift: q.coords()[z] - p.coords()[z],
            });
        }
    }
    timing.diagnostics_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let search = find_periodic_classes(&c.perturbed, s.period, &s.search)?;
    timing.search_s = t.elapsed().as_secs_f64();

    let class_checks = search
        .classes
        .iter()
        .map(|class| verify_class(&c.perturbed, class))
        .collect::<Result<Vec<_>, _>>()?;
    let target_distance = search
        .classes
        .iter()
        .map(|class| {
            class
                .points
                .iter()
                .map(|p| {
                    targets
                        .iter()
                        .map(|q| dist_inf(p.coords(), q.coords()))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let parity = parity_conclude(s.period, &search.classes)?;
    let step_tol = 10.0 * s.search.newton_tol;
    let certified = parity.certified()
        && !search.diagnostics.partial
        && class_checks
            .iter()
            .all(|k| k.passes(step_tol.max(1e-8), s.search.dedup_tol));
    timing.total_s = start.elapsed().as_secs_f64();
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config_hash: s.config_hash.clone(),
        scenario: s.clone(),
        profiles,
        flow,
        perturbation_shifts,
        search,
        class_checks,
        target_distance,
        parity,
        certified,
        timing,
    })
}

/// Writes the JSON report and the CSV orbit table into the output directory.
pub fn write_outputs(
    report: &RunReport,
    paths: &OutputPaths,
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    fs::create_dir_all(&paths.dir)?;
    let json_path = paths.dir.join(&paths.report);
    let csv_path = paths.dir.join(&paths.orbits);
    fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    let mut csv = Vec::new();
    write_orbit_csv(&report.search.classes, report.scenario.structure, &mut csv)?;
    fs::write(&csv_path, csv)?;
    Ok((json_path, csv_path))
}

/// Orbit search at an arbitrary period, without the parity decision.
pub fn orbit_table(s: &Scenario, l: usize) -> Result<OrbitSearch<f64>, ExperimentError> {
    let c = s.build()?;
    Ok(find_periodic_classes(&c.perturbed, l, &s.search)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_config() {
        let s = Scenario::parse("").unwrap();
        assert_eq!(s.k, 2);
        assert_eq!(s.period, 4);
        assert_eq!(s.variant, PerturbationVariant::MEquals2k);
        assert_eq!(s.config_hash.as_deref(), Some(config_hash("").as_str()));
    }

    #[test]
    fn errors_name_the_line() {
        let err = Scenario::parse("scenario.k = 2\n\nscenario.bogus = 1\n").unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 3, .. }),
            "{err}"
        );
        let err = Scenario::parse("# c\nscenario.k = two\n").unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 2, .. }),
            "{err}"
        );
        let err = Scenario::parse("scenario.k = 2\nscenario.k = 3\n").unwrap_err();
        assert!(err.to_string().contains("first set on line 1"), "{err}");
        let err = Scenario::parse("scenario.k\n").unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn level_must_sit_inside_the_support() {
        let err = Scenario::parse("scenario.radius = 1\nscenario.a = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains("0 < a < R²/2"), "{msg}");
    }

    #[test]
    fn large_epsilon_is_rejected() {
        let err = Scenario::parse("scenario.epsilon = 0.05\n").unwrap_err();
        assert!(err.to_string().contains("radicand"), "{err}");
    }

    #[test]
    fn variant_must_match_structure() {
        assert!(Scenario::parse(
            "scenario.structure = symplectic\nscenario.variant = m_equals_k\n"
        )
        .is_err());
        let s = Scenario::parse("scenario.structure = symplectic\n").unwrap();
        assert_eq!(s.variant, PerturbationVariant::SymplecticCosK);
    }

    #[test]
    fn diagnostic_points_are_reproducible() {
        let s = Scenario::desk_default();
        assert_eq!(s.diagnostic_points(), s.diagnostic_points());
        let mut other = s.clone();
        other.rng_seed += 1;
        assert_ne!(s.diagnostic_points(), other.diagnostic_points());
    }
}
