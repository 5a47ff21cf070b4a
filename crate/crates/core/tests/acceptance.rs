//! Acceptance checks, one PASS/FAIL line each. Exits nonzero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use futurecone::cones::{
    self, build_cone, build_cone_on_grid, cone_contains, leaf_contains, sampled_leaf,
    sampling_tolerance, LeafMethod, LeafShape, SamplingParams,
};
use futurecone::dynamics::{DynamicsModel, VehicleState};
use futurecone::engagement::{simulate, EngagementConfig, Outcome, Player};
use futurecone::sampling::directions;
use futurecone::strategies::StrategyKind;
use futurecone::validation::{
    self, AssignmentPolicy, DecoyScenario, ScenarioDistribution,
};
use futurecone::vector::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn origin() -> VehicleState {
    VehicleState::at(Vector::new2(0.0, 0.0), 0.0)
}

fn bs(v: f64) -> DynamicsModel {
    DynamicsModel::bounded_speed(v).unwrap()
}

fn ball_threshold() -> Check {
    let x = origin();
    let y = VehicleState::at(Vector::new2(1.0, 0.0), 0.0);

    let outer = build_cone(&bs(2.0), &x, 0.0, 2.0, 21, LeafMethod::analytic()).map_err(|e| e.to_string())?;
    let inner = build_cone(&bs(1.0), &y, 0.0, 2.0, 21, LeafMethod::analytic()).map_err(|e| e.to_string())?;
    let report = cone_contains(&outer, &inner, 0.0).map_err(|e| e.to_string())?;
    ensure(report.first_containment_time == Some(1.0), || {
        format!("analytic first containment {:?}", report.first_containment_time)
    })?;
    for v in &report.per_time {
        // R - (d + r) = 2t - (1 + t)
        let expected = v.time - 1.0;
        ensure((v.verdict.margin - expected).abs() <= 1e-12, || {
            format!("margin at t = {}: {} vs {expected}", v.time, v.verdict.margin)
        })?;
    }

    let n = 1000;
    let method = LeafMethod::Sampled(SamplingParams { n_controls: n, n_switches: 0 });
    let times: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
    let outer = build_cone_on_grid(&bs(2.0), &x, &times, method).map_err(|e| e.to_string())?;
    let inner = build_cone_on_grid(&bs(1.0), &y, &times, method).map_err(|e| e.to_string())?;
    let tol = sampling_tolerance(&bs(2.0), &x, 1.0, n, 0).map_err(|e| e.to_string())?;
    let report = cone_contains(&outer, &inner, tol).map_err(|e| e.to_string())?;
    let t = report.first_containment_time.ok_or("sampled: no containment")?;
    ensure((t - 1.0).abs() <= 0.02, || format!("sampled first containment {t}"))?;
    Ok(format!("analytic 1.0, sampled {t} (tol {tol:.2e})"))
}

fn directed_hausdorff_ball_to_leaf(center: Vector, radius: f64, leaf: &cones::Leaf) -> f64 {
    let n = if center.dim() == 2 { 4096 } else { 8192 };
    directions(center.dim(), n)
        .into_iter()
        .map(|d| (-leaf.signed_distance(center + d * radius)).max(0.0))
        .fold(0.0, f64::max)
}

fn analytic_sampled_agreement() -> Check {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let models = [
        bs(1.5),
        DynamicsModel::double_integrator(2.0, None).unwrap(),
    ];
    let vertices = [
        origin(),
        VehicleState::at(Vector::new2(1.0, -2.0), 0.5).with_velocity(Vector::new2(0.7, 0.3)),
        VehicleState::at(Vector::new3(0.0, 0.0, 0.0), 0.0),
        VehicleState::at(Vector::new3(1.0, 2.0, -1.0), 0.0).with_velocity(Vector::new3(-1.0, 0.0, 0.5)),
    ];
    for model in &models {
        for v in &vertices {
            for dt in [0.25, 1.0, 3.0] {
                let t = v.time + dt;
                let ball = cones::analytic_leaf(model, v, t).map_err(|e| e.to_string())?;
                let LeafShape::Ball { center, radius } = ball.shape else {
                    return Err("analytic leaf is not a ball".into());
                };
                let cloud = sampled_leaf(model, v, t, 1000, 0).map_err(|e| e.to_string())?;
                let LeafShape::PointCloud(pc) = &cloud.shape else {
                    return Err("sampled leaf is not a cloud".into());
                };
                for p in pc.points() {
                    let m = ball.signed_distance(*p);
                    ensure(m >= -1e-9, || format!("{model:?} t={t}: point outside ball by {}", -m))?;
                }
                let h = directed_hausdorff_ball_to_leaf(center, radius, &cloud) / radius;
                ensure(h <= 0.05, || format!("{model:?} dim {} t={t}: Hausdorff {h:.4} of radius", v.dim()))?;
                worst = worst.max(h);
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} leaf pairs, worst Hausdorff {:.2}% of radius", 100.0 * worst))
}

fn random_model(rng: &mut ChaCha8Rng, dim: usize) -> DynamicsModel {
    let k = rng.gen_range(0..if dim == 2 { 4 } else { 3 });
    match k {
        0 => bs(rng.gen_range(0.5..3.0)),
        1 => DynamicsModel::double_integrator(rng.gen_range(0.5..3.0), None).unwrap(),
        2 => DynamicsModel::double_integrator(rng.gen_range(0.5..3.0), Some(rng.gen_range(0.5..3.0))).unwrap(),
        _ => DynamicsModel::dubins(rng.gen_range(0.5..2.0), rng.gen_range(0.2..2.0)).unwrap(),
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..scale)).collect();
    Vector::from_slice(&c).unwrap()
}

fn cone_and_leaf_verdicts_agree() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let method = LeafMethod::analytic_or_sampled(SamplingParams { n_controls: 96, n_switches: 1 });
    let mut contained = 0;
    let mut total = 0;
    for pair in 0..50 {
        let dim = if pair % 3 == 2 { 3 } else { 2 };
        let mx = random_model(&mut rng, dim);
        let my = random_model(&mut rng, dim);
        let vx = VehicleState::at(random_vector(&mut rng, dim, 1.0), 0.0)
            .with_velocity(random_vector(&mut rng, dim, 0.5))
            .with_heading(rng.gen_range(-3.0..3.0));
        let vy = VehicleState::at(random_vector(&mut rng, dim, 2.0), 0.0)
            .with_velocity(random_vector(&mut rng, dim, 0.5))
            .with_heading(rng.gen_range(-3.0..3.0));
        let t_end = rng.gen_range(1.0..4.0);
        let tol = if rng.gen_bool(0.5) { 0.0 } else { 0.05 };
        let cx = build_cone(&mx, &vx, 0.0, t_end, 11, method).map_err(|e| e.to_string())?;
        let cy = build_cone(&my, &vy, 0.0, t_end, 11, method).map_err(|e| e.to_string())?;
        let report = cone_contains(&cx, &cy, tol).map_err(|e| e.to_string())?;
        ensure(report.per_time.len() == cx.leaves.len(), || format!("pair {pair}: grid size"))?;
        for (i, v) in report.per_time.iter().enumerate() {
            let direct = leaf_contains(&cx.leaves[i], &cy.leaves[i], tol).map_err(|e| e.to_string())?;
            ensure(v.verdict == direct && v.time == cx.leaves[i].time, || {
                format!("pair {pair} t = {}: {:?} vs {:?}", v.time, v.verdict, direct)
            })?;
            contained += v.verdict.contained as usize;
            total += 1;
        }
    }
    Ok(format!("50 pairs, {total} grid times agree ({contained} contained)"))
}

fn sufficiency_json(seed: u64) -> Result<(String, String), String> {
    let dist = ScenarioDistribution::faster_pursuer(seed);
    let r = validation::validate_sufficiency(&dist, 100, &validation::default_evasion_policies(seed))
        .map_err(|e| e.to_string())?;
    let summary = format!(
        "{} trials, success rate {:?}, {} failures",
        r.n_scenarios * r.n_policies_per_scenario,
        r.success_rate,
        r.failures.len()
    );
    ensure(r.n_policies_per_scenario == 5 && r.n_scenarios == 100, || "suite shape".into())?;
    ensure(r.success_rate == Some(1.0), || summary.clone())?;
    Ok((serde_json::to_string_pretty(&r).unwrap(), summary))
}

fn necessity_json(seed: u64) -> Result<(String, String), String> {
    let dist = ScenarioDistribution::faster_evader(seed);
    let r = validation::validate_necessity(&dist, 100, &validation::default_pursuit_policies())
        .map_err(|e| e.to_string())?;
    let summary = format!(
        "{} trials, escape rate {:?}, {} failures",
        r.n_scenarios * r.n_policies_per_scenario,
        r.success_rate,
        r.failures.len()
    );
    ensure(r.n_policies_per_scenario == 2 && r.robust_fraction == 0.05, || "suite shape".into())?;
    ensure(r.success_rate == Some(1.0), || summary.clone())?;
    Ok((serde_json::to_string_pretty(&r).unwrap(), summary))
}

fn collinear_chase() -> Check {
    let dt = 0.01;
    let cfg = EngagementConfig::new(dt, 5.0, 0.1);
    let p = Player::new(bs(2.0), origin(), StrategyKind::PurePursuit);
    let e = Player::new(
        bs(1.0),
        VehicleState::at(Vector::new2(1.0, 0.0), 0.0),
        StrategyKind::StraightLine { direction: Some(Vector::new2(1.0, 0.0)) },
    );
    let r = simulate(&cfg, &p, &e).map_err(|e| e.to_string())?;
    let Outcome::Intercept { t } = r.outcome else {
        return Err("no intercept".into());
    };
    let expected = (1.0 - 0.1) / (2.0 - 1.0);
    ensure((t - expected).abs() <= 2.0 * dt, || format!("capture at {t}, expected {expected}"))?;
    Ok(format!("capture at {t:.4}, closed form {expected}"))
}

fn dubins_turn_radius() -> Check {
    let t = std::f64::consts::PI;
    let (n, k) = (1000, 2);
    let tight = DynamicsModel::dubins(1.0, 1.0).unwrap();
    let wide = DynamicsModel::dubins(1.0, 2.0).unwrap();
    let v = origin();
    let inner = sampled_leaf(&tight, &v, t, n, k).map_err(|e| e.to_string())?;
    let outer_pts = sampled_leaf(&wide, &v, t, n, k).map_err(|e| e.to_string())?;
    let tol = sampling_tolerance(&tight, &v, t, n, k).map_err(|e| e.to_string())?;
    let LeafShape::PointCloud(pc) = &outer_pts.shape else {
        return Err("sampled leaf is not a cloud".into());
    };
    let margin = pc
        .points()
        .iter()
        .map(|p| inner.signed_distance(*p))
        .fold(f64::INFINITY, f64::min);
    ensure(margin >= -tol, || format!("margin {margin:.3e} below -tolerance {tol:.3e}"))?;
    Ok(format!("{} points, min margin {margin:.3e}, tolerance {tol:.3e}", pc.points().len()))
}

fn decoy_json(seed: u64) -> Result<(String, String), String> {
    let config = EngagementConfig::new(0.01, 5.0, 0.01);
    let single = validation::run_decoy(&DecoyScenario::single_interceptor(seed), &config, 300)
        .map_err(|e| e.to_string())?;
    let rate = single.real_target_hit_rate.ok_or("no hit rate")?;
    ensure(single.interception_rate == Some(1.0), || {
        format!("interception rate {:?}", single.interception_rate)
    })?;
    ensure((0.253..=0.413).contains(&rate), || format!("hit rate {rate} outside [0.253, 0.413]"))?;

    let covered = DecoyScenario {
        n_interceptors: 3,
        assignment: AssignmentPolicy::OnePerTarget,
        ..DecoyScenario::single_interceptor(seed)
    };
    let full = validation::run_decoy(&covered, &config, 300).map_err(|e| e.to_string())?;
    ensure(full.interception_rate == Some(1.0) && full.unengaged_trials == 0, || {
        format!("3 interceptors: rate {:?}, unengaged {}", full.interception_rate, full.unengaged_trials)
    })?;
    let json = format!(
        "{}\n{}",
        serde_json::to_string_pretty(&single).unwrap(),
        serde_json::to_string_pretty(&full).unwrap()
    );
    Ok((json, format!("hit rate {rate:.4}, all three targets intercepted in 300/300 trials")))
}

const SEED: u64 = 7;

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS {n} {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name}: {detail} [{elapsed:.2?}]");
            }
        }
    };

    let secs = Duration::from_secs;
    let mut jsons: Vec<(&str, String)> = Vec::new();
    report(1, "ball containment threshold", Some(secs(1)), &mut ball_threshold);
    report(2, "analytic and sampled leaves agree", Some(secs(10)), &mut analytic_sampled_agreement);
    report(3, "cone verdicts equal leaf verdicts", None, &mut cone_and_leaf_verdicts_agree);
    report(4, "sufficiency suite", Some(secs(120)), &mut || {
        sufficiency_json(SEED).map(|(j, s)| {
            jsons.push(("sufficiency", j));
            s
        })
    });
    report(5, "necessity suite", Some(secs(120)), &mut || {
        necessity_json(SEED).map(|(j, s)| {
            jsons.push(("necessity", j));
            s
        })
    });
    report(6, "collinear chase closed form", None, &mut collinear_chase);
    report(7, "Dubins turn-radius monotonicity", None, &mut dubins_turn_radius);
    report(8, "decoy statistics", None, &mut || {
        decoy_json(SEED).map(|(j, s)| {
            jsons.push(("decoy", j));
            s
        })
    });
    report(9, "determinism of suite reports", None, &mut || {
        let again = [
            ("sufficiency", sufficiency_json(SEED).map(|r| r.0)),
            ("necessity", necessity_json(SEED).map(|r| r.0)),
            ("decoy", decoy_json(SEED).map(|r| r.0)),
        ];
        for (name, json) in again {
            let json = json?;
            let first = jsons
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| format!("{name}: no first run to compare"))?;
            ensure(first.1.as_bytes() == json.as_bytes(), || format!("{name} report differs"))?;
        }
        Ok("sufficiency, necessity and decoy reports byte-identical".into())
    });

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
