//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits nonzero
//! when any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidmanip::config::ScenarioConfig;
use rigidmanip::grasp::{grasp_matrix, grasp_matrix_rate, grasp_matrix_from_arms, GraspConfiguration, GraspOffset, RightInverseKind};
use rigidmanip::linalg::{euler_to_rot, nullspace_basis, rot_exp, DEFAULT_PINV_TOL};
use rigidmanip::pose::{PoseSE3, Twist6};
use rigidmanip::rigidity::{rigidity_jacobian, rigidity_matrix_rate, Framework};
use rigidmanip::sim::{run_scenario, step, SimLog};
use rigidmanip::verify::{run_verification, Bound, CheckSummary, VerifyReport};

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) -> bool {
    println!("{} C{id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn check<'a>(r: &'a VerifyReport, name: &str) -> &'a CheckSummary {
    r.checks.iter().find(|c| c.name == name).expect("known check")
}

fn describe(c: &CheckSummary) -> String {
    match c.bound {
        Bound::Below(b) => format!("{} worst {:.3e} < {:.0e}", c.name, c.worst, b),
        Bound::Above(b) => format!("{} worst {:.3e} > {}", c.name, c.worst, b),
    }
}

fn battery_outcome(r: &VerifyReport, names: &[&str], extra: Option<(bool, String)>) -> Outcome {
    let cs: Vec<&CheckSummary> = names.iter().map(|n| check(r, n)).collect();
    let mut detail: Vec<String> = cs.iter().map(|c| describe(c)).collect();
    let mut pass = cs.iter().all(|c| c.passed);
    if let Some((ok, text)) = extra {
        pass &= ok;
        detail.push(text);
    }
    Outcome { pass, detail: format!("{} trials; {}", r.trials.len(), detail.join("; ")) }
}

fn converged(log: &SimLog) -> (bool, String) {
    let s = log.last();
    let ok = s.e_p_norm < 1e-3 && s.e_o < 1e-3 && s.e_v_norm < 1e-3;
    (ok, format!("terminal |e_p| {:.3e}, e_O {:.3e}, |e_v| {:.3e}", s.e_p_norm, s.e_o, s.e_v_norm))
}

fn scenario_runs() -> (SimLog, SimLog, SimLog, f64) {
    let weighted = ScenarioConfig::default();
    let mut moore_penrose = weighted.clone();
    moore_penrose.right_inverse = RightInverseKind::MoorePenrose;

    let mut injected = weighted.clone();
    let arms: Vec<Vector3<f64>> = weighted.agents.iter().map(|a| Vector3::from(a.grasp_position)).collect();
    let z = nullspace_basis(&grasp_matrix_from_arms(&arms), DEFAULT_PINV_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let coeffs = DVector::from_fn(z.dim(), |_, _| rng.random_range(-1.0..1.0));
    let h = z.matrix() * coeffs;
    injected.desired_internal_force = Some((5.0 * &h / h.norm()).as_slice().to_vec());

    let timed = |c: &ScenarioConfig| {
        let started = Instant::now();
        let log = run_scenario(&c.build().unwrap()).unwrap();
        (log, started.elapsed().as_secs_f64())
    };
    let (a, ta) = timed(&weighted);
    let (b, tb) = timed(&moore_penrose);
    let (c, _) = timed(&injected);
    (a, b, c, ta.max(tb))
}

fn criterion_scenario(weighted: &SimLog, moore_penrose: &SimLog, seconds: f64) -> Outcome {
    let (ok1, text1) = converged(weighted);
    let (ok2, text2) = converged(moore_penrose);
    let max_h1 = weighted.max_by(|s| s.h_int_norm);
    let max_u1 = weighted.max_by(|s| s.u_norm);
    let max_h2 = moore_penrose.max_by(|s| s.h_int_norm);
    let free = max_h1 < 1e-6 * (1.0 + max_u1);
    let factor = max_h2 >= 10.0 * max_h1;
    Outcome {
        pass: ok1 && ok2 && free && factor && seconds < 60.0,
        detail: format!(
            "inertia weighted: {text1}, max |h_int| {max_h1:.3e} vs 1e-6(1+{max_u1:.1}); \
             Moore-Penrose: {text2}, max |h_int| {max_h2:.3e}; slowest run {seconds:.1} s < 60 s"
        ),
    }
}

fn criterion_injection(log: &SimLog) -> Outcome {
    let worst = log.max_by(|s| s.h_int_d_error.expect("internal force injected"));
    let (ok, text) = converged(log);
    Outcome {
        pass: ok && worst < 1e-5 * 5.0,
        detail: format!("max |h_int - h_int_d| {worst:.3e} < 5e-5; {text}"),
    }
}

fn criterion_lyapunov(log: &SimLog, dt: f64) -> Outcome {
    let max_e_o = log.max_by(|s| s.e_o);
    let allowance = 1e-8 + 10.0 * dt.powi(4);
    let worst = log.samples.windows(2).map(|w| w[1].lyapunov - w[0].lyapunov).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: max_e_o < 2.0 && worst <= allowance,
        detail: format!("max e_O {max_e_o:.3e} < 2; largest V increase {worst:.3e} <= {allowance:.1e}"),
    }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn moved(pose: &PoseSE3, twist: &[f64], h: f64) -> PoseSE3 {
    let v = Vector3::new(twist[0], twist[1], twist[2]);
    let w = Vector3::new(twist[3], twist[4], twist[5]);
    PoseSE3 { position: pose.position + h * v, rotation: rot_exp(&w, h) * pose.rotation }
}

fn random_pose(rng: &mut ChaCha8Rng) -> PoseSE3 {
    let p = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let eta = Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-1.3..1.3), rng.random_range(-3.0..3.0));
    PoseSE3 { position: p, rotation: euler_to_rot(&eta) }
}

fn rate_fd_worst(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let h = 1e-5;
    let (mut worst_r, mut worst_g) = (0.0f64, 0.0f64);
    for n in [3usize, 4, 5] {
        for _ in 0..10 {
            let poses: Vec<PoseSE3> = (0..n).map(|_| random_pose(rng)).collect();
            let v = DVector::from_fn(6 * n, |_, _| rng.random_range(-1.0..1.0));
            let at = |s: f64| {
                let ps = poses.iter().enumerate().map(|(i, p)| moved(p, &v.as_slice()[6 * i..6 * i + 6], s)).collect();
                rigidity_jacobian(&Framework::new(ps).unwrap()).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let analytic = rigidity_matrix_rate(&Framework::new(poses.clone()).unwrap(), &v).unwrap();
            worst_r = worst_r.max(rel(&analytic, &fd));

            let offsets: Vec<GraspOffset> =
                (0..n).map(|_| GraspOffset { position: Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5)), rotation: random_pose(rng).rotation }).collect();
            let object = random_pose(rng);
            let v_o = Twist6::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let gc = GraspConfiguration::new(object, offsets).unwrap();
            let g_at = |s: f64| grasp_matrix(&gc.with_object(moved(&object, v_o.as_slice(), s)));
            let fd = (g_at(h) - g_at(-h)) / (2.0 * h);
            worst_g = worst_g.max(rel(&grasp_matrix_rate(&gc, &v_o), &fd));
        }
    }
    (worst_r, worst_g)
}

fn rk_order() -> f64 {
    let sc = ScenarioConfig::default().build().unwrap();
    let run = |dt: f64| {
        let mut s = sc.initial;
        for _ in 0..(1.0 / dt).round() as usize {
            s = step(&sc.system, &s, &sc.controller, dt).unwrap();
        }
        let mut x = s.pose.position.as_slice().to_vec();
        x.extend_from_slice(s.pose.rotation.as_slice());
        x.extend_from_slice(s.twist.as_slice());
        DVector::from_vec(x)
    };
    let (a, b, c) = std::thread::scope(|s| {
        let a = s.spawn(|| run(1e-3));
        let b = s.spawn(|| run(5e-4));
        let c = s.spawn(|| run(2.5e-4));
        (a.join().unwrap(), b.join().unwrap(), c.join().unwrap())
    });
    ((&a - &b).norm() / (&b - &c).norm()).log2()
}

fn criterion_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5eed);
    let (worst_r, worst_g) = rate_fd_worst(&mut rng);
    let order = rk_order();
    Outcome {
        pass: worst_r < 1e-5 && worst_g < 1e-5 && order >= 3.8,
        detail: format!(
            "rigidity rate vs FD {worst_r:.3e}, grasp rate vs FD {worst_g:.3e} (< 1e-5); \
             self-convergence order {order:.3} over the first second (dt 1e-3, 5e-4, 2.5e-4) >= 3.8"
        ),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let battery = run_verification(SEED, 50, &[3, 4, 5]).expect("verification battery");
    let battery_seconds = started.elapsed().as_secs_f64();

    let mut all = true;
    all &= report(
        1,
        "duality of range(R^T) and null(G)",
        &battery_outcome(&battery, &["rank", "duality"], Some((battery_seconds < 10.0, format!("battery wall {battery_seconds:.2} s < 10 s")))),
    );
    all &= report(2, "projection identity", &battery_outcome(&battery, &["projection_identity"], None));
    all &= report(3, "row-transform invariance", &battery_outcome(&battery, &["row_transform_invariance"], None));
    all &= report(4, "projected closed form equals Gauss forces", &battery_outcome(&battery, &["internal_force_equivalence"], None));
    all &= report(5, "optimal distribution", &battery_outcome(&battery, &["optimal_distribution", "moore_penrose_separation"], None));
    all &= report(6, "extended blocks and wrench consistency", &battery_outcome(&battery, &["extended_blocks", "wrench_consistency"], None));

    let (weighted, moore_penrose, injected, seconds) = scenario_runs();
    all &= report(7, "published scenario", &criterion_scenario(&weighted, &moore_penrose, seconds));
    all &= report(8, "desired internal force injection", &criterion_injection(&injected));
    all &= report(9, "orientation bound and Lyapunov decrease", &criterion_lyapunov(&weighted, ScenarioConfig::default().dt));
    all &= report(10, "rate derivatives and integrator order", &criterion_numerics());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
