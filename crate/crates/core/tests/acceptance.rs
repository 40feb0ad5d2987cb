//! Acceptance criteria. Runs as a plain binary (no libtest harness) so the
//! per-criterion report is always printed; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exo_design::energetics::{actuator_power, power_integrals, LEGS};
use exo_design::gait::{synth_gait, GRAVITY};
use exo_design::kinematics::{torque_map, velocity_map, PEAK_TORQUE_GRID};
use exo_design::overlay::{browning_mass_delta, location_factor, regen_adjust, InertiaSpec, SHANK_INERTIA_FIT, THIGH_INERTIA_FIT};
use exo_design::pareto::{non_dominated, sweep};
use exo_design::pipeline::{run_pipeline, RunConfig};
use exo_design::qp::{QpOptions, SeparableQp};
use exo_design::reactions::{newton_euler_reactions, newton_euler_reactions_with};
use exo_design::redundancy::{solve_cycle, solve_step, StepProblem};
use exo_design::{Condition, ExoDesign, ExoVariant, Joint, JointVec, MuscleSet, SolverWeights, Subject};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn synthetic_gaits() -> Vec<exo_design::GaitCycle> {
    Condition::ALL.iter().map(|&c| synth_gait(7, c)).collect()
}

fn brute_force_front(objs: &[(f64, f64)]) -> Vec<usize> {
    (0..objs.len())
        .filter(|&i| {
            let (ri, pi) = objs[i];
            !objs.iter().any(|&(rj, pj)| rj >= ri && pj <= pi && (rj > ri || pj < pi))
        })
        .collect()
}

fn dominance_filter_matches_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let objs: Vec<(f64, f64)> = (0..1000).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let start = Instant::now();
    let fast = non_dominated(&objs).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let oracle = brute_force_front(&objs);
    check(
        fast == oracle && elapsed < Duration::from_secs(1),
        format!("{} front points, oracle {}, {:?}", fast.len(), oracle.len(), elapsed),
    )
}

fn qp_stationarity() -> Outcome {
    // One joint, one muscle (capacity 100 N·m), unbounded exo with weight 1000, no reserve.
    let qp = SeparableQp {
        scales: vec![1.0, 1000.0],
        a: DMatrix::from_row_slice(1, 2, &[100.0, 1.0]),
        b: DVector::from_element(1, 50.0),
        lower: vec![0.0, f64::NEG_INFINITY],
        upper: vec![1.0, f64::INFINITY],
    };
    let sol = qp.solve(&QpOptions::default()).map_err(|e| e.to_string())?;
    let closed_err = (sol.x[1] - 5000.0 / 101.0).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c = [rng.gen_range(20.0..200.0), rng.gen_range(20.0..200.0)];
        let net = c[0] * rng.gen_range(0.0..1.0) + c[1] * rng.gen_range(0.0..1.0);
        let problem = StepProblem {
            net: vec![net],
            capacities: DMatrix::from_row_slice(1, 2, &c),
            exo_map: DMatrix::zeros(1, 0),
            exo_bounds: vec![],
            exo_weights: vec![],
            reserve_weights: None,
        };
        let s = solve_step(&problem).map_err(|e| e.to_string())?;
        // 1e-3 grid on the variable with the smaller capacity; the other is
        // fixed by the torque balance, so its error is at most 1e-3 as well.
        let (g, e) = if c[0] <= c[1] { (0, 1) } else { (1, 0) };
        let mut best = (f64::INFINITY, [0.0; 2]);
        for i in 0..=1000 {
            let mut a = [0.0; 2];
            a[g] = i as f64 * 1e-3;
            a[e] = (net - c[g] * a[g]) / c[e];
            if !(0.0..=1.0).contains(&a[e]) {
                continue;
            }
            let j = a[0] * a[0] + a[1] * a[1];
            if j < best.0 {
                best = (j, a);
            }
        }
        worst = worst.max((best.1[0] - s.activations[0]).abs()).max((best.1[1] - s.activations[1]).abs());
    }
    check(
        closed_err < 1e-6 && worst < 1e-2,
        format!("closed-form error {closed_err:.2e} N·m, worst grid deviation {worst:.2e}"),
    )
}

fn torque_balance_residual() -> Outcome {
    let subject = Subject::default();
    let gaits = synthetic_gaits();
    let muscles = MuscleSet::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for variant in [ExoVariant::Mono, ExoVariant::Bi] {
        for s in sweep(&gaits, &muscles, variant, &subject, &SolverWeights::default()).map_err(|e| e.to_string())? {
            for p in &s.points {
                worst = worst.max(p.max_residual);
                samples += p.objective.len();
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-8 && elapsed < Duration::from_secs(60) && samples == 2 * 2 * 25 * 101,
        format!("max residual {worst:.2e} N·m over {samples} samples, {elapsed:?}"),
    )
}

fn ideal_equivalence() -> Outcome {
    let subject = Subject::default();
    let weights = SolverWeights { exo: 1e6, reserve: 1.0 };
    let muscles = MuscleSet::default();
    let mut worst: f64 = 0.0;
    for gait in synthetic_gaits() {
        let mono = solve_cycle(&gait, &muscles, Some(&ExoDesign::ideal(ExoVariant::Mono, &subject)), &weights).map_err(|e| e.to_string())?;
        let bi = solve_cycle(&gait, &muscles, Some(&ExoDesign::ideal(ExoVariant::Bi, &subject)), &weights).map_err(|e| e.to_string())?;
        let (m, b) = (mono.exo_joint_moments(), bi.exo_joint_moments());
        for j in 0..2 {
            let peak = m.iter().map(|v| v.get(j).abs()).fold(0.0, f64::max);
            let ms: f64 = m.iter().zip(&b).map(|(x, y)| (x.get(j) - y.get(j)).powi(2)).sum::<f64>() / m.len() as f64;
            worst = worst.max(ms.sqrt() / peak);
        }
    }
    check(worst < 0.01, format!("worst RMS difference {:.3e} % of peak", 100.0 * worst))
}

fn power_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        let tau_mono = JointVec::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let omega_bi = JointVec::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let p_mono = tau_mono.dot(velocity_map(omega_bi));
        let p_bi = torque_map(tau_mono).dot(omega_bi);
        worst = worst.max((p_mono - p_bi).abs());
    }
    check(worst < 1e-12, format!("max |P_mono - P_bi| {worst:.2e} over 1e6 pairs"))
}

fn browning_constants() -> Outcome {
    // Effective (m, MC, I) per segment from inverting the location factor;
    // the inertia term includes the segment's device inertia, so it differs
    // by segment. Foot multiplier taken relative to the thigh.
    let subject = Subject::default();
    let subject_mass = subject.mass;
    let unassisted = solve_cycle(&synth_gait(7, Condition::NoLoad), &MuscleSet::default(), None, &SolverWeights::default())
        .map_err(|e| e.to_string())?;
    let mc_unloaded = exo_design::energetics::energy_report(&unassisted, None)
        .map_err(|e| e.to_string())?
        .gross_metabolic_rate;
    let targets = [("foot", 47.22, 47.22 / 125.07 * THIGH_INERTIA_FIT.1), ("shank", 27.78, SHANK_INERTIA_FIT.1), ("thigh", 125.07, THIGH_INERTIA_FIT.1)];
    let mut worst: f64 = 0.0;
    let mut inertias = Vec::new();
    for (_, gamma, a) in targets {
        let inertia = a * subject_mass * mc_unloaded / gamma;
        inertias.push(inertia);
        let got = location_factor(a, subject_mass, mc_unloaded, inertia).map_err(|e| e.to_string())?;
        worst = worst.max((got / gamma - 1.0).abs());
    }
    // Shank device inertia about the hip exceeds the thigh's.
    let ordered = inertias[1] > inertias[2];
    // A single shared inertia cannot fit thigh and shank together.
    let single_gap = (THIGH_INERTIA_FIT.1 / SHANK_INERTIA_FIT.1) / (125.07 / 27.78) - 1.0;
    let mut mass_err: f64 = 0.0;
    for (variant, waist, thigh, shank) in [(ExoVariant::Bi, 4.5, 1.0, 0.9), (ExoVariant::Mono, 3.0, 2.5, 0.9)] {
        let d = browning_mass_delta(&InertiaSpec::from_design(&ExoDesign::new(variant, 70.0, 70.0, &subject)));
        for (got, want) in [
            (d.waist, 0.045 * waist),
            (d.thigh, 0.075 * thigh),
            (d.shank, 0.076 * shank),
            (d.total, 0.045 * waist + 2.0 * (0.075 * thigh + 0.076 * shank)),
        ] {
            mass_err = mass_err.max((got - want).abs());
        }
    }
    check(
        worst < 0.005 && ordered && mass_err < 1e-12,
        format!(
            "MC {mc_unloaded:.3} W/kg, worst location-factor error {:.2e} %, effective inertias {:.3?} kg·m², single-inertia gap {:.2} %, mass-term error {mass_err:.1e}",
            100.0 * worst,
            inertias,
            100.0 * single_gap
        ),
    )
}

fn regeneration() -> Outcome {
    let subject = Subject::default();
    let gaits = synthetic_gaits();
    let muscles = MuscleSet::default();
    let mut identity_err: f64 = 0.0;
    let mut affine_err: f64 = 0.0;
    let mut exact_at_zero = true;
    let mut monotone = true;
    let mut series = 0;
    for variant in [ExoVariant::Mono, ExoVariant::Bi] {
        for gait in &gaits {
            for &h in &PEAK_TORQUE_GRID {
                for &k in &PEAK_TORQUE_GRID {
                    let design = ExoDesign::new(variant, h, k, &subject);
                    let sol = solve_cycle(gait, &muscles, Some(&design), &SolverWeights::default()).map_err(|e| e.to_string())?;
                    for p in actuator_power(&sol) {
                        let i = power_integrals(&sol.pct, &p);
                        identity_err = identity_err.max((i.absolute - (i.positive + i.negative)).abs());
                        series += 1;
                    }
                    let report = exo_design::energetics::energy_report(&sol, None).map_err(|e| e.to_string())?;
                    exact_at_zero &= regen_adjust(&report, 0.0).map_err(|e| e.to_string())? == report.total_abs_power;
                    let mut prev = f64::INFINITY;
                    for step in 0..=65 {
                        let eta = step as f64 / 100.0;
                        let adj = regen_adjust(&report, eta).map_err(|e| e.to_string())?;
                        monotone &= adj <= prev;
                        prev = adj;
                        let line = report.total_abs_power - eta * report.negative_power;
                        affine_err = affine_err.max((adj - line).abs());
                    }
                }
            }
        }
    }
    check(
        exact_at_zero && monotone && affine_err < 1e-12 && identity_err < 1e-12,
        format!(
            "identity error {identity_err:.1e} over {series} series (x{LEGS} legs), affine error {affine_err:.1e}, monotone {monotone}, exact at 0 {exact_at_zero}"
        ),
    )
}

fn feasible_set_monotonicity() -> Outcome {
    let subject = Subject::default();
    let muscles = MuscleSet::default();
    let mut violations = 0;
    let mut comparisons = 0;
    for variant in [ExoVariant::Mono, ExoVariant::Bi] {
        for s in sweep(&synthetic_gaits(), &muscles, variant, &subject, &SolverWeights::default()).map_err(|e| e.to_string())? {
            // Points are in label order: index 5 * hip + knee, limits descending.
            let at = |h: usize, k: usize| &s.points[5 * h + k].objective;
            for h in 0..5 {
                for k in 0..5 {
                    let mut larger = Vec::new();
                    if h > 0 {
                        larger.push(at(h - 1, k));
                    }
                    if k > 0 {
                        larger.push(at(h, k - 1));
                    }
                    for big in larger {
                        for (lo, hi) in big.iter().zip(at(h, k)) {
                            comparisons += 1;
                            if *lo > hi * (1.0 + 1e-12) {
                                violations += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    check(violations == 0, format!("{violations} violations in {comparisons} comparisons"))
}

fn newton_euler_statics() -> Outcome {
    let subject = Subject::default();
    let mut gait = synth_gait(1, Condition::NoLoad);
    for j in 0..3 {
        gait.angles[j].iter_mut().for_each(|v| *v = 0.0);
        gait.velocities[j].iter_mut().for_each(|v| *v = 0.0);
    }
    gait.grf_x.iter_mut().for_each(|v| *v = 0.0);
    gait.grf_y.iter_mut().for_each(|v| *v = GRAVITY);
    let standing = newton_euler_reactions(&gait, &subject, None).map_err(|e| e.to_string())?;
    let supported = (subject.mass - subject.leg_mass()) * GRAVITY / subject.mass;
    let hip_err = standing
        .loads
        .iter()
        .map(|l| (l[Joint::Hip.index()].fy - supported).abs().max(l[Joint::Hip.index()].fx.abs()))
        .fold(0.0, f64::max);

    gait.grf_y.iter_mut().for_each(|v| *v = 0.0);
    gait.moments.iter_mut().for_each(|m| m.iter_mut().for_each(|v| *v = 0.0));
    let zero = newton_euler_reactions_with(&gait, &subject, None, 0.0).map_err(|e| e.to_string())?;
    let bitwise_zero = zero.loads.iter().flatten().all(|l| [l.fx, l.fy, l.mz].iter().all(|v| v.to_bits() == 0));
    check(
        hip_err < 1e-9 && bitwise_zero,
        format!("standing hip error {hip_err:.1e} N/kg, zero case bitwise zero {bitwise_zero}"),
    )
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let config = RunConfig {
            out: dir.path().join(run),
            ..RunConfig::default()
        };
        let written = run_pipeline(&config).map_err(|e| e.to_string())?;
        let files: Vec<(String, Vec<u8>)> = written
            .files
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        outputs.push(files);
    }
    let n = outputs[0].len();
    check(n > 0 && outputs[0] == outputs[1], format!("{n} CSV files compared byte for byte"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("dominance filter equals brute force", dominance_filter_matches_brute_force),
        ("QP stationarity and grid oracle", qp_stationarity),
        ("torque-balance residual over full sweep", torque_balance_residual),
        ("ideal mono/bi assistance equivalence", ideal_equivalence),
        ("power conservation under joint maps", power_conservation),
        ("location factors and mass terms", browning_constants),
        ("regeneration adjustment", regeneration),
        ("feasible-set monotonicity", feasible_set_monotonicity),
        ("Newton-Euler statics", newton_euler_statics),
        ("pipeline determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
