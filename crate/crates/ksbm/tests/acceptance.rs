//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use ksbm::clustering::{agreement, block_clustering, tensor_block_metrics};
use ksbm::config::{Experiment, Preset};
use ksbm::dynamics::*;
use ksbm::graphgen::assortative_edge_probability;
use ksbm::pipeline::{run_experiment, simulate, Bundle, Regime};
use ksbm::signatures::*;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn sin_lead_tr(bundle: &Bundle) -> Option<f64> {
    bundle.estimate(Transform::Sin, Statistic::Lead, Regime::Transient).map(|e| e.agreement)
}

fn transition_times() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(1e-4, 10.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (kappa, n, expected) in [(100.0, 3, 0.281), (10.0, 3, 2.79), (100.0, 6, 0.558)] {
        let curve = integrate_variance_dominated_identical(kappa, n, PI * PI / 3.0, &grid).unwrap();
        let t = transition_time(&curve.times, &curve.values, 33, 0.0);
        let ok = t.is_some_and(|t| (t - expected).abs() <= 0.05 * expected);
        pass &= ok;
        parts.push(format!("κ={kappa} n={n}: {t:.4?} (expected {expected})"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 1.0;
    Outcome { pass, detail: format!("{}; {elapsed:.2} s", parts.join(", ")) }
}

fn exact_recovery() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [Preset::Standard, Preset::Collapsed, Preset::Large] {
        let start = Instant::now();
        let mut exact = 0;
        let mut first = None;
        let mut worst_c: f64 = 0.0;
        for seed in 0..10 {
            let bundle = run_experiment(&Experiment::from_preset(preset, seed).unwrap()).unwrap();
            let a = sin_lead_tr(&bundle).unwrap_or(0.0);
            if a == 1.0 {
                exact += 1;
            }
            if seed == 0 {
                first = Some(a);
                worst_c = bundle
                    .estimates
                    .iter()
                    .filter(|e| e.regime == Regime::Clusterization)
                    .map(|e| e.agreement)
                    .fold(0.0, f64::max);
            }
        }
        let recovered = first == Some(1.0) || exact >= 8;
        let ok = recovered && worst_c <= 0.6 && start.elapsed().as_secs_f64() < 60.0;
        pass &= ok;
        parts.push(format!(
            "{}: seed 0 TR {:.3}, exact {exact}/10, max C {worst_c:.3}",
            preset.name(),
            first.unwrap_or(0.0)
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn collapsed_steady_state() -> Outcome {
    let bundle = run_experiment(&Experiment::from_preset(Preset::Collapsed, 0).unwrap()).unwrap();
    let ss: Vec<String> = bundle
        .estimates
        .iter()
        .filter(|e| e.regime == Regime::SteadyState)
        .map(|e| format!("{}_{} {:.3}", e.transform.name(), e.statistic.name(), e.agreement))
        .collect();
    let pass = !ss.is_empty()
        && bundle
            .estimates
            .iter()
            .filter(|e| e.regime == Regime::SteadyState)
            .all(|e| e.agreement <= 1.0 / 3.0 + 0.1);
    Outcome { pass, detail: format!("SS agreement {}", ss.join(", ")) }
}

fn block_signal() -> Outcome {
    let bundle = run_experiment(&Experiment::from_preset(Preset::Standard, 0).unwrap()).unwrap();
    let truth = bundle.true_labels().to_vec();
    let g = |regime| {
        let m = &bundle.matrix(Transform::Sin, Statistic::Lead, regime).unwrap().matrix;
        block_clustering(m, &truth, 0.0).unwrap().g
    };
    let (tr, c) = (g(Regime::Transient), g(Regime::Clusterization));
    Outcome { pass: tr > 1.0 && c < 1.0, detail: format!("g(L^TR) = {tr:.3}, g(L^C) = {c:.3}") }
}

fn analytic_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_stated, mut worst_exact) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (a, b) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let omega = rng.random_range(0.5..3.0);
        let t = rng.random_range(10.0..40.0) / omega;
        let k = 10_000;
        let times: Vec<f64> = (0..=k).map(|s| t * s as f64 / k as f64).collect();
        let values = Array2::from_shape_fn((k + 1, 2), |(s, c)| (omega * times[s] + [a, b][c]).sin());
        let numeric = lead_matrix(&Path::new(times, values).unwrap())[[0, 1]];
        let stated = analytic_ss_lead_sin(a - b, omega, t);
        let exact = analytic_ss_lead_sin_exact(a - b, omega, t);
        worst_stated = worst_stated.max((numeric - stated).abs() / stated.abs());
        worst_exact = worst_exact.max((numeric - exact).abs() / exact.abs());
    }
    let mut worst_theta = 0.0f64;
    for _ in 0..20 {
        let omega = rng.random_range(0.1..3.0);
        let t = rng.random_range(0.5..10.0);
        let offsets = [rng.random_range(-PI..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        let times: Vec<f64> = (0..=50).map(|s| t * s as f64 / 50.0).collect();
        let values = Array2::from_shape_fn((51, 3), |(s, c)| omega * times[s] + offsets[c]);
        let sig = signature(&Path::new(times, values).unwrap(), 3, true).unwrap();
        for index in [vec![0], vec![1, 2], vec![2, 0, 1]] {
            let exact = analytic_ss_signature_theta(omega, t, index.len());
            worst_theta = worst_theta.max((sig.get(&index) - exact).abs() / exact);
        }
    }
    Outcome {
        pass: worst_stated < 1e-4 && worst_theta < 1e-6,
        detail: format!(
            "sinusoid lead vs (sin Δθ/2)(ωT + sin ωT): max rel {worst_stated:.2e}; vs exact (sin Δθ/2)(ωT − sin ωT): max rel {worst_exact:.2e}; Θ-signature max rel {worst_theta:.2e}"
        ),
    }
}

fn mean_field_tracking() -> Outcome {
    let e = Experiment::from_preset(Preset::Standard, 0).unwrap();
    let (graph, params, traj) = simulate(&e).unwrap();
    let comm = graph.communities();
    let st = community_stats(&traj.lift_aligned(comm, traj.len() - 1), comm).unwrap();
    let Some(t_trans) = transition_time(&st.times, &st.max_variance(), 33, 0.0) else {
        return Outcome { pass: false, detail: "no empirical transition time".into() };
    };
    let k0 = traj.index_at(t_trans);
    let grid = TimeGrid { t0: st.times[k0], dt: traj.step(), steps: traj.len() - 1 - k0, record_every: 1 };
    let q = assortative_edge_probability(3, 33).unwrap();
    let p = Array2::from_shape_fn((3, 3), |(r, s)| if r == s { 1.0 } else { q });
    let c = Array2::from_elem((3, 3), 100.0 / 99.0);
    let mf = integrate_mean_field(33, &p, &c, &params.community_omega_means(), &st.means.row(k0).to_vec(), &grid).unwrap();
    let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
    let mut sup = 0.0f64;
    for j in 0..=grid.steps {
        for r in 0..3 {
            sup = sup.max(wrap(mf.phases[[j, r]] - st.means[[k0 + j, r]]).abs());
        }
    }
    Outcome { pass: sup < 0.1, detail: format!("from t = {:.3} s, sup error {sup:.4} rad", st.times[k0]) }
}

fn random_path(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Path {
    let mut times = vec![0.0];
    for _ in 1..k {
        times.push(times.last().unwrap() + rng.random_range(0.01..1.0));
    }
    Path::new(times, Array2::from_shape_fn((k, dim), |_| rng.random_range(-2.0..2.0))).unwrap()
}

fn sig_gap(a: &SignatureTensor, b: &SignatureTensor) -> f64 {
    (1..=a.level())
        .flat_map(|l| a.level_entries(l).iter().zip(b.level_entries(l)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn brute_force(b: &ndarray::ArrayD<f64>, labels: &[usize], n: usize) -> (f64, f64) {
    let order = b.ndim();
    let blocks: Vec<Vec<usize>> = (0..n.pow(order as u32))
        .map(|mut k| {
            let mut digits = vec![0; order];
            for p in (0..order).rev() {
                digits[p] = k % n;
                k /= n;
            }
            digits
        })
        .collect();
    let stats = |block: &[usize]| {
        let xs: Vec<f64> = b
            .indexed_iter()
            .filter(|(idx, _)| (0..order).all(|p| labels[idx[p]] == block[p]))
            .map(|(_, &v)| v)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64)
    };
    let h = blocks.iter().map(|bl| stats(bl).1).sum::<f64>() / blocks.len() as f64;
    let d = blocks
        .iter()
        .map(|bl| bl.iter().map(|&r| (stats(bl).0 - stats(&vec![r; order]).0).powi(2)).sum::<f64>())
        .sum::<f64>()
        / blocks.len() as f64;
    (h, d)
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut antisym, mut shuffle, mut chen, mut reparam) = (true, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let k = rng.random_range(2..20);
        let p = random_path(&mut rng, k, 3);
        let l = lead_matrix(&p);
        antisym &= (0..3).all(|i| (0..3).all(|j| l[[i, j]] == -l[[j, i]]));
        let s = signature(&p, 3, false).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                shuffle = shuffle.max((s.get(&[i, j]) + s.get(&[j, i]) - s.get(&[i]) * s.get(&[j])).abs());
            }
        }
        let cut = rng.random_range(0..p.len());
        let first = Path::new(p.times[..=cut].to_vec(), p.values.slice(ndarray::s![..=cut, ..]).to_owned()).unwrap();
        let second = Path::new(p.times[cut..].to_vec(), p.values.slice(ndarray::s![cut.., ..]).to_owned()).unwrap();
        let joined = signature(&first, 3, false).unwrap().concat(&signature(&second, 3, false).unwrap());
        chen = chen.max(sig_gap(&s, &joined));
        let warped = Path::new(p.times.iter().map(|t| t.powi(3) + 0.5 * t).collect(), p.values.clone()).unwrap();
        reparam = reparam.max(sig_gap(&s, &signature(&warped, 3, false).unwrap()));
    }

    let params = {
        let e = Experiment::from_preset(Preset::Standard, 0).unwrap();
        simulate(&e).unwrap().1
    };
    let end = |steps: usize| {
        let traj = integrate_full(&params, &TimeGrid::with_output(0.5, steps, 1).unwrap()).unwrap();
        traj.phases.row(1).to_owned()
    };
    let (a, b, c) = (end(100), end(200), end(400));
    let e1 = (&a - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let e2 = (&b - &c).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slope = (e1 / e2).log2();

    let mut hdg = 0.0f64;
    for trial in 0..40 {
        let size = rng.random_range(3..=8);
        let n = rng.random_range(1..=3.min(size));
        let mut labels: Vec<usize> = (0..size).map(|i| i % n).collect();
        rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
        let b = if trial % 2 == 0 {
            Array2::from_shape_fn((size, size), |_| rng.random_range(-3.0..3.0)).into_dyn()
        } else {
            Array3::from_shape_fn((size, size, size), |_| rng.random_range(-1.0..1.0)).into_dyn()
        };
        let score = tensor_block_metrics(b.view(), &labels, 0.0).unwrap();
        let (h, d) = brute_force(&b, &labels, n);
        hdg = hdg.max((score.h - h).abs()).max((score.d - d).abs());
    }

    let size = 3000;
    let truth: Vec<usize> = (0..size).map(|i| i / 1000).collect();
    let exact = agreement(&truth, &truth.iter().map(|&l| (l + 1) % 3).collect::<Vec<_>>()).unwrap();
    let random = (0..1000)
        .map(|_| agreement(&truth, &(0..size).map(|_| rng.random_range(0..3)).collect::<Vec<_>>()).unwrap())
        .sum::<f64>()
        / 1000.0;

    let pass = antisym
        && shuffle <= 1e-10
        && chen <= 1e-10
        && reparam <= 1e-10
        && (slope - 4.0).abs() <= 0.3
        && hdg <= 1e-12
        && exact == 1.0
        && (random - 1.0 / 3.0).abs() < 0.02;
    Outcome {
        pass,
        detail: format!(
            "antisymmetry {antisym}, shuffle {shuffle:.1e}, Chen {chen:.1e}, reparametrization {reparam:.1e}, RK4 slope {slope:.3}, h/d brute force {hdg:.1e}, agreement exact {exact} random {random:.4}"
        ),
    }
}

fn stochastic_robustness() -> Outcome {
    let start = Instant::now();
    let mean_agreement = |b: f64| {
        (0..20)
            .map(|seed| {
                let mut e = Experiment::from_preset(Preset::Stochastic, seed).unwrap();
                e.model.brownian_b = b;
                e.transforms = vec![Transform::Sin];
                e.statistics = vec![Statistic::Lead];
                sin_lead_tr(&run_experiment(&e).unwrap()).unwrap_or(0.0)
            })
            .sum::<f64>()
            / 20.0
    };
    let (low, high) = (mean_agreement(0.1), mean_agreement(5.0));
    let elapsed = start.elapsed().as_secs_f64();
    Outcome {
        pass: low - high >= 0.2 && elapsed < 600.0,
        detail: format!("mean TR agreement b=0.1: {low:.3}, b=5: {high:.3}; {elapsed:.1} s"),
    }
}

fn hierarchical_pruning() -> Outcome {
    let bundle = run_experiment(&Experiment::from_preset(Preset::Hierarchical, 0).unwrap()).unwrap();
    let ss: Vec<_> = bundle
        .estimates
        .iter()
        .filter(|e| e.regime == Regime::SteadyState && e.transform == Transform::Sin)
        .collect();
    let parts: Vec<String> = ss
        .iter()
        .map(|e| {
            let p = e.pruned.as_ref();
            format!(
                "sin_{} k {} → {:?} ({}) agreement {:?}",
                e.statistic.name(),
                e.k,
                p.map(|p| p.k),
                p.map_or("none", |p| p.reference.as_str()),
                p.map(|p| p.agreement)
            )
        })
        .collect();
    let pass = !ss.is_empty()
        && ss.iter().all(|e| e.pruned.as_ref().is_some_and(|p| p.k == 3 && p.reference == "coarse" && p.agreement == 1.0));
    Outcome { pass, detail: parts.join("; ") }
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("transition times", transition_times),
        ("exact transient recovery", exact_recovery),
        ("collapsed steady state", collapsed_steady_state),
        ("block-clustering signal", block_signal),
        ("analytic oracles", analytic_oracles),
        ("mean-field tracking", mean_field_tracking),
        ("property suites", property_suites),
        ("stochastic robustness", stochastic_robustness),
        ("hierarchical pruning", hierarchical_pruning),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.pass {
            failed += 1;
        }
        println!("acceptance {} {name}: {} ({})", i + 1, if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
