//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use drcore::ambiguity::{
    aggregate_confidence, aggregate_confidence_bonferroni, beta_from_radius, radius_from_beta, BallSpec, TailParams,
};
use drcore::distributions::EmpiricalDistribution;
use drcore::experiment::{
    run_consistency_study, run_radius_sweep, run_sample_size_sweep, ConsistencyConfig, ExperimentConfig,
    RadiusSchedule, SweepAxis, SweepResult,
};
use drcore::game::{enumerate_subcoalitions, AffinePiece, BoxSupport, PiecewiseAffineValue};
use drcore::norm::NormTag;
use drcore::optim::{min_norm_point, solve_lp, LinearProgram, Polyhedron, Relation, Sense, SolveStatus};
use drcore::worst_case::{worst_case_closed_form_affine, worst_case_dual_lp, worst_case_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn confidences(result: &SweepResult) -> Vec<f64> {
    result.summaries.iter().map(|s| s.confidence).collect()
}

fn sample_size_sweep(ks: &[f64], eps: f64) -> SweepResult {
    let mut cfg = ExperimentConfig::reference(SweepAxis::SampleSize, ks.to_vec()).unwrap();
    cfg.fixed_ball = BallSpec::Radius(eps);
    cfg.workers = 4;
    run_sample_size_sweep(&cfg).unwrap()
}

fn radius_sweep(k: usize, radii: &[f64]) -> SweepResult {
    let mut cfg = ExperimentConfig::reference(SweepAxis::Radius, radii.to_vec()).unwrap();
    cfg.fixed_samples = k;
    cfg.workers = 4;
    run_radius_sweep(&cfg).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let ks = [10.0, 30.0, 50.0, 100.0, 200.0, 500.0];
    let conf = confidences(&sample_size_sweep(&ks, 0.3));
    let secs = start.elapsed().as_secs_f64();
    check(
        conf.iter().all(|c| *c >= 0.99) && secs < 120.0,
        format!("confidence {conf:?} at K {ks:?}, {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let conf = confidences(&sample_size_sweep(&[5.0, 50.0, 500.0], 0.03));
    check(
        conf[0] < conf[1] && conf[1] < conf[2] && conf[2] >= 0.8,
        format!("confidence {conf:?} at K [5, 50, 500]"),
    )
}

const RADII: [f64; 5] = [0.01, 0.03, 0.1, 0.3, 1.0];

fn criterion_3() -> Outcome {
    let conf = confidences(&radius_sweep(100, &RADII));
    let monotone = conf.windows(2).all(|w| w[0] <= w[1]);
    check(
        monotone && conf[3] == 1.0 && conf[4] == 1.0,
        format!("confidence {conf:?} at eps {RADII:?}"),
    )
}

fn criterion_4() -> Outcome {
    let small = radius_sweep(100, &RADII);
    let large = radius_sweep(250, &RADII);
    let widths = |r: &SweepResult| r.summaries.iter().map(|s| s.band_width).collect::<Vec<_>>();
    let (w100, w250) = (widths(&small), widths(&large));
    let smaller = w100.iter().zip(&w250).filter(|(a, b)| b < a).count();
    let share = smaller as f64 / RADII.len() as f64;
    check(
        share >= 0.8,
        format!("{smaller}/{} grid points narrower at K=250; widths K=100 {}, K=250 {}", RADII.len(), sci(&w100), sci(&w250)),
    )
}

/// Random one-dimensional instance: 1-3 pieces, up to 20 atoms, random box.
fn random_instance(rng: &mut ChaCha8Rng) -> (PiecewiseAffineValue, EmpiricalDistribution, BoxSupport, f64) {
    let lo = rng.random_range(-2.0..1.0);
    let hi = lo + rng.random_range(0.1..2.0);
    let pieces = (0..rng.random_range(1..=3))
        .map(|_| AffinePiece::new(vec![rng.random_range(-2.0..2.0)], rng.random_range(-2.0..2.0)))
        .collect();
    let k = rng.random_range(1..=20);
    let atoms = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
    (
        PiecewiseAffineValue::new(pieces).unwrap(),
        EmpiricalDistribution::from_scalars(atoms).unwrap(),
        BoxSupport::interval(lo, hi).unwrap(),
        rng.random_range(0.0..1.0),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_oracle, mut worst_closed, mut closed_cases) = (0.0f64, 0.0f64, 0);
    for _ in 0..200 {
        let (u, e, b, eps) = random_instance(&mut rng);
        let dual = worst_case_dual_lp(&u, &e, eps, &b, NormTag::OneNorm).unwrap().value;
        let oracle = worst_case_oracle(&u, &e, eps, &b, NormTag::OneNorm, 2001).unwrap();
        worst_oracle = worst_oracle.max((dual - oracle).abs());
        if u.pieces().len() == 1 {
            let closed = worst_case_closed_form_affine(&u, &e, eps, &b, NormTag::OneNorm).unwrap().value;
            worst_closed = worst_closed.max((dual - closed).abs());
            closed_cases += 1;
        }
    }
    check(
        worst_oracle <= 5e-3 && worst_closed <= 1e-8,
        format!("200 instances: max |dual-oracle| {worst_oracle:.2e}, max |dual-closed| {worst_closed:.2e} over {closed_cases}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut record = |u: &PiecewiseAffineValue, e: &EmpiricalDistribution, b: &BoxSupport, eps: f64, norm: NormTag| {
        let w = worst_case_dual_lp(u, e, eps, b, norm).unwrap().value;
        let mean = e.mean_of(u).unwrap();
        let upper = mean + u.lipschitz_constant(norm) * eps;
        worst = worst.max(mean - w).max(w - upper);
        count += 1;
    };
    for _ in 0..200 {
        let (u, e, b, eps) = random_instance(&mut rng);
        for norm in [NormTag::OneNorm, NormTag::MaxNorm, NormTag::Euclidean] {
            record(&u, &e, &b, eps, norm);
        }
    }
    for _ in 0..100 {
        let lo: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.2..1.5)).collect();
        let b = BoxSupport::new(lo.clone(), hi.clone()).unwrap();
        let pieces = (0..rng.random_range(1..=3))
            .map(|_| AffinePiece::new(vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)], rng.random_range(-1.0..1.0)))
            .collect();
        let u = PiecewiseAffineValue::new(pieces).unwrap();
        let k = rng.random_range(1..=10);
        let data = (0..k).flat_map(|_| (0..2).map(|j| rng.random_range(lo[j]..=hi[j])).collect::<Vec<_>>()).collect();
        let e = EmpiricalDistribution::new(2, data).unwrap();
        let eps = rng.random_range(0.0..1.0);
        for norm in [NormTag::OneNorm, NormTag::MaxNorm, NormTag::Euclidean] {
            record(&u, &e, &b, eps, norm);
        }
    }
    check(worst <= 1e-8, format!("{count} instances, largest sandwich violation {worst:.2e}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel = 0.0f64;
    let mut per_branch = [0usize; 2];
    for i in 0..1000 {
        let tail = TailParams {
            c: rng.random_range(0.5..3.0),
            q: rng.random_range(0.1..3.0),
            a: rng.random_range(1.1..4.0),
            p: if i % 2 == 0 { 1 } else { rng.random_range(3..6) },
            ..TailParams::default()
        };
        // Alternate the two branches of the radius formula.
        let (eps, k) = if i % 4 < 2 {
            (rng.random_range(0.01..1.0), rng.random_range(1..5000))
        } else {
            (rng.random_range(1.0..3.0), rng.random_range(1..=40))
        };
        let beta = beta_from_radius(eps, k, &tail).unwrap();
        // Outside this range β underflows or sits so close to c that a double
        // no longer pins ε down to 1e-12.
        if !(beta > 1e-300 && beta <= 0.999 * tail.c) {
            continue;
        }
        per_branch[usize::from(eps > 1.0)] += 1;
        let back = radius_from_beta(beta, k, &tail).unwrap();
        worst_rel = worst_rel.max((back - eps).abs() / eps);
    }
    let mut homogeneous = 0.0f64;
    for n in 2..=6 {
        let m = enumerate_subcoalitions(n).unwrap().len();
        for beta in [0.01, 0.1, 0.3] {
            let agg = aggregate_confidence(&vec![beta; m]).unwrap();
            homogeneous = homogeneous.max((agg - (1.0 - beta).powi((1 << n) - 2)).abs());
        }
    }
    let mut bonferroni_ok = true;
    for _ in 0..1000 {
        let betas: Vec<f64> = (0..rng.random_range(1..30)).map(|_| rng.random_range(1e-6..1.0 - 1e-6)).collect();
        bonferroni_ok &= aggregate_confidence_bonferroni(&betas).unwrap() <= aggregate_confidence(&betas).unwrap() + 1e-15;
    }
    check(
        worst_rel <= 1e-12 && per_branch.iter().all(|n| *n >= 100) && homogeneous <= 1e-15 && bonferroni_ok,
        format!("round-trip rel err {worst_rel:.2e} over {per_branch:?} cases per branch, homogeneous err {homogeneous:.1e}, Bonferroni <= product: {bonferroni_ok}"),
    )
}

fn criterion_8() -> Outcome {
    let ks = vec![10, 30, 100, 300, 1000, 3000, 10_000];
    let mut cfg = ConsistencyConfig::reference(ks.clone(), RadiusSchedule::InverseSquare).unwrap();
    cfg.workers = 4;
    let schedule = run_consistency_study(&cfg).unwrap();
    let gaps: Vec<f64> = schedule.rows.iter().map(|r| r.mean_gap()).collect();
    let (first, last) = (gaps[0], *gaps.last().unwrap());

    cfg.schedule = RadiusSchedule::Fixed(0.1);
    let fixed = run_consistency_study(&cfg).unwrap();
    let offset = fixed.rows.last().unwrap().mean_gap();
    // |a| min(ε, hi - E[ξ]) with slope 1, ε = 0.1 and E[ξ] ≈ 0.54.
    let predicted = 0.1f64.min(1.0 - cfg.distribution.truncated_mean());
    check(
        last <= 0.05 && last < first && (offset - predicted).abs() <= 1e-2,
        format!("gap K=10 {first:.4}, K=10^4 {last:.4}; fixed-radius gap {offset:.4} vs predicted {predicted:.4}"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut duality = 0.0f64;
    for _ in 0..200 {
        let (m, n) = (rng.random_range(1..8), rng.random_range(1..8));
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..5.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut primal = LinearProgram::new(Sense::Maximize, c.clone());
        for (row, rhs) in a.iter().zip(&b) {
            primal.add_constraint(row.clone(), Relation::Le, *rhs);
        }
        let mut dual = LinearProgram::new(Sense::Minimize, b.clone());
        for j in 0..n {
            dual.add_constraint(a.iter().map(|row| row[j]).collect(), Relation::Ge, c[j]);
        }
        let (p, d) = (solve_lp(&primal).unwrap(), solve_lp(&dual).unwrap());
        assert!(p.is_optimal() && d.is_optimal());
        duality = duality.max((p.objective - d.objective).abs());
    }

    // Random polyhedron around a known feasible point; feasible test points
    // are convex combinations of LP vertices.
    let dim = 4;
    let anchor: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..3.0)).collect();
    let mut poly = Polyhedron::new(dim).equal(vec![1.0; dim], anchor.iter().sum());
    for _ in 0..6 {
        let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = g.iter().zip(&anchor).map(|(x, y)| x * y).sum::<f64>() - rng.random_range(0.0..0.5);
        poly = poly.at_least(g, h);
    }
    let x = min_norm_point(&poly).unwrap();
    let mut vertices = vec![anchor.clone()];
    for _ in 0..200 {
        let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = solve_lp(&poly.linear_program(Sense::Minimize, d)).unwrap();
        if r.status == SolveStatus::Optimal {
            vertices.push(r.x);
        }
    }
    let mut vi = f64::INFINITY;
    for _ in 0..1000 {
        let (i, j) = (rng.random_range(0..vertices.len()), rng.random_range(0..vertices.len()));
        let t: f64 = rng.random();
        let y: Vec<f64> = vertices[i].iter().zip(&vertices[j]).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        vi = vi.min(y.iter().zip(&x).map(|(yi, xi)| (yi - xi) * xi).sum());
    }

    let p1 = Polyhedron::new(2)
        .equal(vec![1.0, 1.0], 4.0)
        .at_least(vec![1.0, 0.0], 1.0)
        .at_least(vec![0.0, 1.0], 2.0);
    let p2 = Polyhedron::new(2).equal(vec![1.0, 1.0], 4.0).at_least(vec![1.0, 0.0], 3.0);
    let (x1, x2) = (min_norm_point(&p1).unwrap(), min_norm_point(&p2).unwrap());
    let toy = (x1[0] - 2.0).abs().max((x1[1] - 2.0).abs()).max((x2[0] - 3.0).abs()).max((x2[1] - 1.0).abs());
    check(
        duality <= 1e-8 && vi >= -1e-8 && toy <= 1e-9,
        format!("duality gap {duality:.1e}, min variational term {vi:.2e}, toy error {toy:.1e}"),
    )
}

fn csv_of(result: &SweepResult) -> (Vec<u8>, Vec<u8>) {
    let (mut trials, mut summary) = (Vec::new(), Vec::new());
    result.write_trials_csv(&mut trials).unwrap();
    result.write_summary_csv(&mut summary).unwrap();
    (trials, summary)
}

fn criterion_10() -> Outcome {
    let mut outputs = BTreeMap::new();
    for workers in [1, 2, 8] {
        let mut k_cfg = ExperimentConfig::reference(SweepAxis::SampleSize, vec![5.0, 30.0]).unwrap();
        k_cfg.trials = 100;
        k_cfg.master_seed = 1234;
        k_cfg.workers = workers;
        let mut e_cfg = ExperimentConfig::reference(SweepAxis::Radius, vec![0.0, 0.05, 0.3]).unwrap();
        e_cfg.trials = 100;
        e_cfg.master_seed = 1234;
        e_cfg.workers = workers;
        e_cfg.engine = drcore::worst_case::Engine::DualLp;
        e_cfg.fixed_samples = 20;
        let mut c_cfg = ConsistencyConfig::reference(vec![10, 100, 1000], RadiusSchedule::InverseSquare).unwrap();
        c_cfg.trials = 20;
        c_cfg.workers = workers;
        let mut consistency = Vec::new();
        run_consistency_study(&c_cfg).unwrap().write_csv(&mut consistency).unwrap();
        outputs.insert(
            workers,
            (csv_of(&run_sample_size_sweep(&k_cfg).unwrap()), csv_of(&run_radius_sweep(&e_cfg).unwrap()), consistency),
        );
    }
    let reference = &outputs[&1];
    let identical = outputs.values().all(|o| o == reference);
    let bytes = reference.0 .0.len() + reference.1 .0.len() + reference.2.len();
    check(identical, format!("workers 1/2/8 give identical CSV ({bytes} bytes compared per run)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("sample-size sweep, eps=0.3: confidence >= 0.99 for K >= 10", criterion_1),
        ("sample-size sweep, eps=0.03: confidence increasing, >= 0.8 at K=500", criterion_2),
        ("radius sweep, K=100: confidence nondecreasing, 1 at eps 0.3 and 1.0", criterion_3),
        ("band width at K=250 below K=100 on >= 80% of radii", criterion_4),
        ("engine equivalence on 200 random instances", criterion_5),
        ("Lipschitz sandwich on every instance", criterion_6),
        ("radius/confidence calculus", criterion_7),
        ("consistency study and fixed-radius control", criterion_8),
        ("solver soundness", criterion_9),
        ("determinism across worker counts", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{detail}] ({secs:.1}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} [{detail}] ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
