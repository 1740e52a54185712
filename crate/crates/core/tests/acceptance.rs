//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 5 8`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rootless::experiment::{run_scenario, PerturbationVariant, Scenario};
use rootless::flows::{integrate, verify_contactomorphism, z_min_drift_flow, TimeOneMap};
use rootless::geometry::{check_contact_invariance, HamiltonianField, PhasePoint, Structure};
use rootless::milnor::{parity_conclude, validate_milnor_on_sn, ValidationOptions};
use rootless::orbits::{
    circle_targets, classify_isolation, find_periodic_classes, Isolation, OrbitSearch,
};
use rootless::profiles::{BetaProfile, RhoProfile, Variant};
use rootless::scalar::dist_inf;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn scenario(structure: Structure, k: u32, variant: PerturbationVariant) -> Scenario {
    let mut s = Scenario::desk_default();
    s.structure = structure;
    s.k = k;
    s.variant = variant;
    s.period = 2 * k as usize;
    s.search =
        rootless::SearchConfig::around_circle(structure, s.radius, s.a, s.cutoff.delta_outer);
    s.validate().expect("valid acceptance scenario");
    s
}

fn contact(k: u32) -> Scenario {
    scenario(
        Structure::Contact { n: 1 },
        k,
        PerturbationVariant::MEquals2k,
    )
}

fn on_level(structure: Structure, e: f64, count: usize) -> Vec<PhasePoint<f64>> {
    (0..count)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / count as f64;
            let mut c = vec![0.0; structure.dim()];
            c[0] = e.sqrt() * theta.cos();
            c[1] = e.sqrt() * theta.sin();
            PhasePoint::new(structure, c).unwrap()
        })
        .collect()
}

fn closure(map: &TimeOneMap<f64>, p: &PhasePoint<f64>, l: usize) -> f64 {
    let mut out = vec![0.0; p.coords().len()];
    map.iterate_into(p.coords(), l, &mut out).unwrap();
    dist_inf(&out, p.coords())
}

/// Largest distance from a class point to the nearest target, and whether
/// every target is hit by some class point.
fn match_targets(search: &OrbitSearch<f64>, targets: &[PhasePoint<f64>]) -> (f64, bool) {
    let Some(class) = search.classes.first() else {
        return (f64::INFINITY, false);
    };
    let mut worst: f64 = 0.0;
    let mut hit = vec![false; targets.len()];
    for p in &class.points {
        let (j, d) = targets
            .iter()
            .enumerate()
            .map(|(j, q)| (j, dist_inf(p.coords(), q.coords())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        hit[j] = true;
    }
    (worst, hit.iter().all(|h| *h))
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let s = contact(2);
    let c = s.build().unwrap();
    let l = 4;
    let circle = on_level(s.structure, s.a, 16);
    let on = circle
        .iter()
        .map(|p| closure(&c.radial, p, l))
        .fold(0.0, f64::max);
    let mut off_min = f64::INFINITY;
    for factor in [0.9, 1.1] {
        for p in on_level(s.structure, s.a * factor, 16) {
            off_min = off_min.min(closure(&c.radial, &p, l));
        }
    }
    let (iso, sigma) = classify_isolation(
        &c.radial,
        circle[3].coords(),
        l,
        s.search.family_threshold,
        s.search.probe_offset,
    );
    let secs = t.elapsed().as_secs_f64();
    outcome(
        on < 1e-7 && off_min > 1e-3 && iso == Isolation::Family && secs < 60.0,
        format!(
            "closure on circle {on:.2e} (< 1e-7), min residual off circle {off_min:.2e} (> 1e-3), \
             isolation {iso} (σ_min {sigma:.1e}), {secs:.1}s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for k in 1..=3u32 {
        let t = Instant::now();
        let s = contact(k);
        let c = s.build().unwrap();
        let l = 2 * k as usize;
        let base = find_periodic_classes(&c.perturbed, l, &s.search).unwrap();
        let mut doubled_cfg = s.search.clone();
        doubled_cfg.grid_density *= 2;
        let doubled = find_periodic_classes(&c.perturbed, l, &doubled_cfg).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let targets = circle_targets(s.a, k, s.structure);
        let (dist, all_hit) = match_targets(&base, &targets);
        let isolated = base.classes.len() == 1 && base.classes[0].isolation == Isolation::Isolated;
        let certified = parity_conclude(l, &base.classes).map_or(false, |r| r.certified());
        let stable = doubled.classes.len() == base.classes.len();
        let ok = isolated && dist < 1e-6 && all_hit && certified && stable && secs < 300.0;
        passed &= ok;
        parts.push(format!(
            "k={k}: {} class(es) [{}], doubled grid {}, distance {dist:.1e}, certified {certified}, {secs:.0}s",
            base.classes.len(),
            base.classes.iter().map(|c| c.isolation.to_string()).collect::<Vec<_>>().join(","),
            doubled.classes.len(),
        ));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let s = scenario(
        Structure::Symplectic { n: 1 },
        2,
        PerturbationVariant::SymplecticCosK,
    );
    let c = s.build().unwrap();
    let search = find_periodic_classes(&c.perturbed, 4, &s.search).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let targets = circle_targets(s.a, 2, s.structure);
    let (dist, all_hit) = match_targets(&search, &targets);
    let ok = search.classes.len() == 1
        && search.classes[0].isolation == Isolation::Isolated
        && search.classes[0].points.len() == 4
        && all_hit
        && dist < 1e-6
        && secs < 120.0;
    outcome(
        ok,
        format!(
            "{} class(es), distance to targets {dist:.1e}, {secs:.0}s",
            search.classes.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let s = scenario(
        Structure::Contact { n: 1 },
        2,
        PerturbationVariant::MEqualsK,
    );
    let report = run_scenario(&s).unwrap();
    let shifts = &report.perturbation_shifts;
    let odd_error = shifts
        .iter()
        .filter(|p| p.index % 2 == 1)
        .map(|p| (p.z_shift - 2.0 * s.epsilon).abs())
        .fold(0.0, f64::max);
    let recorded = shifts.len() == 4 && report.search.period == 4;
    outcome(
        recorded && odd_error < 1e-10,
        format!(
            "odd-index z-shift error vs 2ε {odd_error:.1e} (< 1e-10); measured class count {} \
             (parity {:?}, {} Newton starts, {} converged)",
            report.parity.class_count,
            report.parity.parity,
            report.search.diagnostics.newton_starts,
            report.search.diagnostics.converged
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut checked = 0;
    let mut mismatches = 0;
    let mut violations = 0;
    for n in 1..=6 {
        let r = validate_milnor_on_sn(n, &[2, 4, 6], ValidationOptions::default()).unwrap();
        checked += r.permutations_checked;
        mismatches += r.criterion_mismatches.len();
        violations += r.violations.len();
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && violations == 0 && secs < 300.0,
        format!(
            "{checked} permutations over n ≤ 6: {mismatches} criterion mismatches, {violations} parity violations, {secs:.1}s"
        ),
    )
}

fn support_samples(s: &Scenario, count: usize, seed: u64) -> Vec<PhasePoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = s.cutoff.delta_outer;
    (0..count)
        .map(|i| {
            let c = if i % 2 == 0 {
                let e = rng.gen_range(s.a - d..s.a + d);
                let th = rng.gen_range(0.0..2.0 * PI);
                vec![
                    e.sqrt() * th.cos(),
                    e.sqrt() * th.sin(),
                    rng.gen_range(-d..d),
                ]
            } else {
                let reach = s.radius / 2f64.sqrt();
                vec![
                    rng.gen_range(-reach..reach),
                    rng.gen_range(-reach..reach),
                    rng.gen_range(-s.radius / 2.0..s.radius / 2.0),
                ]
            };
            PhasePoint::new(s.structure, c).unwrap()
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let s = contact(2);
    let c = s.build().unwrap();
    let defect = verify_contactomorphism(&c.perturbed, &support_samples(&s, 200, 11)).unwrap();
    let invariance =
        check_contact_invariance(&c.hamiltonian, &support_samples(&s, 1000, 12)).unwrap();
    outcome(
        defect < 1e-6 && invariance < 1e-9,
        format!("contact defect of the perturbed map {defect:.1e} (< 1e-6), Hamiltonian invariance {invariance:.1e} (< 1e-9)"),
    )
}

fn criterion_7() -> Outcome {
    let s = contact(2);
    let c = s.build().unwrap();
    let field = HamiltonianField::new(c.hamiltonian.clone(), s.structure);
    let drift = z_min_drift_flow(&field, &support_samples(&s, 1000, 13), 1.0, s.steps).unwrap();
    outcome(
        drift >= -1e-9,
        format!("minimum per-step z increment {drift:.2e} (≥ -1e-9)"),
    )
}

fn criterion_8() -> Outcome {
    let s = contact(2);
    let c = s.build().unwrap();
    let field = HamiltonianField::new(c.hamiltonian.clone(), s.structure);
    let start = &on_level(s.structure, s.a, 16)[1];
    let angle = 2.0 * PI / 16.0 + PI / s.k as f64;
    let exact = [s.a.sqrt() * angle.cos(), s.a.sqrt() * angle.sin(), 0.0];
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&steps| {
            let end = integrate(&field, start, 1.0, steps).unwrap();
            dist_inf(end.coords(), &exact)
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = orders.iter().all(|p| (3.7..=4.3).contains(p));
    outcome(
        ok,
        format!(
            "errors {:?} at 100/200/400 steps, observed orders {:?} (in [3.7, 4.3])",
            errors
                .iter()
                .map(|e| format!("{e:.2e}"))
                .collect::<Vec<_>>(),
            orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9() -> Outcome {
    let samples = 100_000;
    let mut built = 0;
    let mut failed = Vec::new();
    for k in 1..=3u32 {
        for variant in [Variant::Contact, Variant::Symplectic] {
            let rho = RhoProfile::<f64>::build(k, 1.0, 0.2, variant).unwrap();
            built += 1;
            if !rho.certify(samples).passed {
                failed.push(format!("rho k={k} {variant:?}"));
            }
        }
    }
    for radius in [1.0, 2.0] {
        built += 1;
        if !BetaProfile::<f64>::build(radius)
            .unwrap()
            .certify(samples)
            .passed
        {
            failed.push(format!("beta R={radius}"));
        }
    }
    outcome(
        failed.is_empty(),
        format!("{built} profiles certified on {samples}-point grids; failures: {failed:?}"),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("circle of periodic points of the radial map", criterion_1),
        (
            "single isolated class after the contact perturbation",
            criterion_2,
        ),
        (
            "single isolated class after the symplectic perturbation",
            criterion_3,
        ),
        ("perturbation with multiplier k", criterion_4),
        ("parity criterion on symmetric groups", criterion_5),
        ("contact structure preservation", criterion_6),
        ("z-monotonicity of the radial flow", criterion_7),
        ("RK4 convergence order", criterion_8),
        ("profile certificates", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {number} ({name}): {}", result.detail);
        failures += usize::from(!result.passed);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
