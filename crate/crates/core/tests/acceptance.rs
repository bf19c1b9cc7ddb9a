//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::time::Instant;

use mcmc_perf::exec::Pool;
use mcmc_perf::glm::{
    loglike, loglike_grad, make_sharded, synthetic_logistic, synthetic_random, DesignMatrix, ExecPlan,
    GlmEvaluator, GlmWorkspace, Strategy,
};
use mcmc_perf::hb::{hb_benchmark, synthetic_hb, HbBenchConfig, HbSampler, MappingMode, MappingPolicy};
use mcmc_perf::ising::{
    add_flip_noise, color_lattice, denoise, gibbs_sweep, synthetic_two_region, DenoiseParams, IsingLattice,
    SweepScratch,
};
use mcmc_perf::perf::{compute_min_cpr, memory_min_cpr, HardwareDescriptor};
use mcmc_perf::rng::{
    rng_bench, DeviateBuffer, DeviateKind, DeviatePair, GammaParams, RngBenchMode, RngDist, Stream,
};
use mcmc_perf::sampler::{run_chain, ChainConfig, GaussianPrior};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn roofline() -> Outcome {
    let hw = HardwareDescriptor::default();
    let c = compute_min_cpr(&hw, 64);
    let m = memory_min_cpr(&hw, 50);
    check(
        (c - 1.0).abs() < 5e-4 && (m - 10.35).abs() <= 0.05,
        format!("compute_min(K=64) = {c:.3}, memory_min(K=50) = {m:.3}"),
    )
}

/// Central differences summed row by row, so cancellation stays per-row.
fn fd_gradient(data: &DesignMatrix, beta: &[f64], k: usize) -> f64 {
    let h = 1e-6 * beta[k].abs().max(1.0);
    let kk = data.n_cols();
    let term = |t: f64, y: f64| -((1.0 - y) * t + if t >= 0.0 { (-t).exp().ln_1p() } else { -t + t.exp().ln_1p() });
    (0..data.n_rows())
        .map(|n| {
            let row = &data.x()[n * kk..(n + 1) * kk];
            let t: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
            let y = data.y()[n];
            term(t + h * row[k], y) - term(t - h * row[k], y)
        })
        .sum::<f64>()
        / (2.0 * h)
}

fn strategy_equivalence() -> Outcome {
    let mut u = DeviateBuffer::uniform(2024, 4096);
    let (mut worst_f, mut worst_g, mut worst_fd) = (0.0f64, 0.0f64, 0.0f64);
    let instances = 200;
    for i in 0..instances {
        // Log-uniform sizes up to N = 1e5, K = 100.
        let n = (10f64.powf(5.0 * u.next()) as usize).clamp(1, 100_000);
        let k = (10f64.powf(2.0 * u.next()) as usize).clamp(1, 100);
        let (data, beta) = synthetic_random(n, k, 7000 + i).map_err(|e| e.to_string())?;
        let reference = loglike_grad(&data, &beta, &ExecPlan::sequential()).map_err(|e| e.to_string())?;
        for &s in &Strategy::ALL {
            for workers in [1, 2, 4] {
                let plan = ExecPlan::new(s, workers, 4).map_err(|e| e.to_string())?;
                let (f, r) = if s == Strategy::Sharded {
                    let eval = GlmEvaluator::new(plan).map_err(|e| e.to_string())?;
                    let sh = make_sharded(&data, workers.min(n)).map_err(|e| e.to_string())?;
                    (
                        eval.loglike_sharded(&sh, &beta).map_err(|e| e.to_string())?,
                        eval.loglike_grad_sharded(&sh, &beta).map_err(|e| e.to_string())?,
                    )
                } else {
                    (
                        loglike(&data, &beta, &plan).map_err(|e| e.to_string())?,
                        loglike_grad(&data, &beta, &plan).map_err(|e| e.to_string())?,
                    )
                };
                let scale = reference.f.abs();
                worst_f = worst_f.max((f - reference.f).abs() / scale).max((r.f - reference.f).abs() / scale);
                for (a, b) in r.g.iter().zip(&reference.g) {
                    worst_g = worst_g.max((a - b).abs() / b.abs().max(1.0));
                }
            }
        }
        for _ in 0..k.min(3) {
            let j = (u.next() * k as f64) as usize;
            let fd = fd_gradient(&data, &beta, j);
            worst_fd = worst_fd.max((fd - reference.g[j]).abs() / reference.g[j].abs().max(1.0));
        }
    }
    check(
        worst_f <= 1e-8 && worst_g <= 1e-8 && worst_fd < 1e-5,
        format!(
            "{instances} instances x 5 strategies x workers {{1,2,4}}: max rel diff f {worst_f:.2e}, g {worst_g:.2e}; finite differences {worst_fd:.2e}"
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn differential_update() -> Outcome {
    let (small, _) = synthetic_random(1000, 5, 31).map_err(|e| e.to_string())?;
    let prior = GaussianPrior::isotropic(5, 0.0, 2.0).map_err(|e| e.to_string())?;
    let mut cfg = ChainConfig::new(300, 50, 5);
    let plan = ExecPlan::sequential();
    let a = run_chain(&small, &prior, &cfg, &plan).map_err(|e| e.to_string())?;
    cfg.diff_update = false;
    let b = run_chain(&small, &prior, &cfg, &plan).map_err(|e| e.to_string())?;
    let draw_diff = a
        .draws
        .iter()
        .flatten()
        .zip(b.draws.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let (data, beta) = synthetic_random(200_000, 50, 32).map_err(|e| e.to_string())?;
    let eval = GlmEvaluator::new(ExecPlan::sequential()).map_err(|e| e.to_string())?;
    let ws = GlmWorkspace::new(&data, &beta, true).map_err(|e| e.to_string())?;
    let (mut full, mut diff) = (Vec::new(), Vec::new());
    for rep in 0..5 {
        let t = Instant::now();
        for _ in 0..4 {
            std::hint::black_box(eval.loglike(&data, &beta).map_err(|e| e.to_string())?);
        }
        full.push(t.elapsed().as_secs_f64() / 4.0);
        let t = Instant::now();
        for j in 0..20 {
            let k = (rep * 20 + j) % 50;
            std::hint::black_box(eval.diff_loglike(&ws, &data, k, 0.01).map_err(|e| e.to_string())?);
        }
        diff.push(t.elapsed().as_secs_f64() / 20.0);
    }
    let speedup = median(full) / median(diff);
    check(
        draw_diff <= 1e-6 && speedup >= 2.0,
        format!("max draw difference {draw_diff:.1e}; diff-update evaluation {speedup:.1}x faster at N=200K, K=50"),
    )
}

fn ising_exactness() -> Outcome {
    let (h, w) = (3, 3);
    let mut u = DeviateBuffer::uniform(90, 64);
    let b: Vec<f64> = (0..9).map(|_| 0.6 * (u.next() - 0.5)).collect();
    let coupling = 0.25;
    let spin = |state: usize, i: usize| if state >> i & 1 == 1 { 1.0 } else { -1.0 };
    let mut exact: Vec<f64> = (0..512usize)
        .map(|s| {
            let mut e = 0.0;
            for i in 0..9 {
                e += 0.5 * b[i] * spin(s, i);
                if i % w + 1 < w {
                    e += 0.5 * coupling * spin(s, i) * spin(s, i + 1);
                }
                if i / w + 1 < h {
                    e += 0.5 * coupling * spin(s, i) * spin(s, i + w);
                }
            }
            e.exp()
        })
        .collect();
    let z: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|p| *p /= z);

    let mut lat = IsingLattice::new(h, w, vec![1; 9], b, coupling).map_err(|e| e.to_string())?;
    let mut part = color_lattice(&lat);
    let mut rng = DeviateBuffer::uniform(91, 8192);
    let pool = Pool::new(1).map_err(|e| e.to_string())?;
    let mut scratch = SweepScratch::default();
    let sweeps = 1_000_000;
    let mut counts = vec![0u64; 512];
    for _ in 0..sweeps {
        gibbs_sweep(&mut lat, &mut part, &mut rng, &pool, &mut scratch).map_err(|e| e.to_string())?;
        let idx: usize = lat.spins().iter().enumerate().map(|(i, &s)| usize::from(s > 0) << i).sum();
        counts[idx] += 1;
    }
    let tv = counts.iter().zip(&exact).map(|(&c, &p)| (c as f64 / sweeps as f64 - p).abs()).sum::<f64>() / 2.0;
    check(tv < 0.05, format!("3x3 lattice, {sweeps} sweeps: TV distance {tv:.4}"))
}

fn denoising() -> Outcome {
    let clean = synthetic_two_region(128, 128);
    let noisy = add_flip_noise(&clean, 0.1, 55).map_err(|e| e.to_string())?;
    let input = noisy.error_rate(&clean).map_err(|e| e.to_string())?;
    let p = DenoiseParams { w: 1.0, bias_scale: 2.0, sweeps: 100, burnin: 20, seed: 56, diff_update: true };
    let out = denoise(&noisy, &p, &Pool::new(1).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let err = out.image.error_rate(&clean).map_err(|e| e.to_string())?;
    check(
        err < input,
        format!(
            "128x128, input error {:.2}%, restored {:.2}%, post-burn-in flip rate {:.2}%",
            100.0 * input,
            100.0 * err,
            100.0 * out.post_burnin_flip_rate()
        ),
    )
}

fn posterior_recovery() -> Outcome {
    let truth = [0.5, -1.0, 0.25, 1.5, -0.75];
    let data = synthetic_logistic(5000, 5, &truth, 61).map_err(|e| e.to_string())?;
    let prior = GaussianPrior::isotropic(5, 0.0, 5.0).map_err(|e| e.to_string())?;
    let out = run_chain(&data, &prior, &ChainConfig::new(20_000, 5_000, 62), &ExecPlan::sequential())
        .map_err(|e| e.to_string())?;
    let (mean, sd) = (out.posterior_mean(), out.posterior_sd());
    let z: Vec<f64> = (0..5).map(|k| (mean[k] - truth[k]) / sd[k]).collect();
    let worst = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    check(
        worst <= 3.0,
        format!("N=5000, K=5, 20K iterations: max |mean - truth| / sd = {worst:.2} ({:.1}s)", out.wall_time),
    )
}

fn batch_rng() -> Outcome {
    let mut invariant = true;
    for kind in [DeviateKind::Uniform01, DeviateKind::StdNormal] {
        let reference: Vec<u64> = {
            let mut b = DeviateBuffer::new(kind, Stream::new(71), 1);
            (0..100_000).map(|_| b.next().to_bits()).collect()
        };
        for cap in [7, 64, 4096, 8192] {
            let mut b = DeviateBuffer::new(kind, Stream::new(71), cap);
            invariant &= reference.iter().all(|&r| b.next().to_bits() == r);
        }
    }

    let p = GammaParams::new(2.0, 3.0).map_err(|e| e.to_string())?;
    let mut d = DeviatePair::from_seed(72);
    let n = 10_000_000;
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let x = d.gamma(&p).map_err(|e| e.to_string())?;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (n - 1) as f64;
    let mean_err = (mean - 2.0 / 3.0).abs() / (2.0 / 3.0);
    let var_err = (var - 2.0 / 9.0).abs() / (2.0 / 9.0);

    // Best of three per mode, as usual for timing on a shared machine.
    let best = |dist, mode| -> Result<f64, String> {
        (0..3)
            .map(|r| rng_bench(dist, mode, 2_000_000, 73 + r, 2.6).map(|x| x.cycles_per_sample))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
            .map_err(|e| e.to_string())
    };
    let su = best(RngDist::Uniform, RngBenchMode::OneAtATime)? / best(RngDist::Uniform, RngBenchMode::Batch)?;
    let sn = best(RngDist::Normal, RngBenchMode::OneAtATime)? / best(RngDist::Normal, RngBenchMode::Batch)?;
    check(
        invariant && mean_err < 0.01 && var_err < 0.02 && su > 1.5 && sn > 2.0,
        format!(
            "capacity invariance {}; Gamma(2,3) mean err {:.3}%, var err {:.3}%; batch speedup uniform {su:.2}x, normal {sn:.2}x",
            if invariant { "exact" } else { "BROKEN" },
            100.0 * mean_err,
            100.0 * var_err
        ),
    )
}

fn region_accounting() -> Outcome {
    let (data, beta) = synthetic_random(10_000, 20, 81).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut seen = Vec::new();
    for (s, want) in [(Strategy::Plf, 1), (Strategy::Som, 2)] {
        for workers in [1, 2, 4] {
            let eval = GlmEvaluator::new(ExecPlan::new(s, workers, 1).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            eval.loglike(&data, &beta).map_err(|e| e.to_string())?;
            let st = eval.stats();
            ok &= st.regions == want && st.merges == workers as u64;
            seen.push(format!("{s}x{workers}: {}r/{}m", st.regions, st.merges));
        }
    }
    check(ok, format!("N=10000 ({})", seen.join(", ")))
}

fn hb_mapping() -> Outcome {
    let prior = GaussianPrior::isotropic(5, 0.0, 1.0).map_err(|e| e.to_string())?;
    let (ds, _) = synthetic_hb(20, 5, 300, &prior, 91).map_err(|e| e.to_string())?;
    let run = |mode| -> Result<Vec<Vec<f64>>, String> {
        let policy = MappingPolicy::new(mode, 1, 2).map_err(|e| e.to_string())?;
        let mut s = HbSampler::new(&ds, prior.clone(), policy, 92).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            s.sweep().map_err(|e| e.to_string())?;
        }
        Ok(s.betas())
    };
    let identical = run(MappingMode::Coarse)? == run(MappingMode::Fine)?;

    let cfg = HbBenchConfig { reps: 1, ..HbBenchConfig::default() };
    let t = Instant::now();
    let records = hb_benchmark(&cfg, &HardwareDescriptor::default()).map_err(|e| e.to_string())?;
    let want = cfg.modes.len() * cfg.workers.len() * cfg.navgs.len() * cfg.nevals.len();
    let complete = records.len() == want
        && records
            .iter()
            .all(|r| r.error.is_none() && r.cpr.is_finite() && r.cpr > 0.0 && r.evals > 0);
    check(
        identical && complete,
        format!(
            "workers=1 coarse == fine: {identical}; grid M=20, K=50, Navg<=20K: {}/{want} complete records in {:.0}s",
            records.len(),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("roofline bounds", roofline),
        ("strategy equivalence", strategy_equivalence),
        ("differential update", differential_update),
        ("ising exactness", ising_exactness),
        ("denoising", denoising),
        ("posterior recovery", posterior_recovery),
        ("batch rng", batch_rng),
        ("parallel-region accounting", region_accounting),
        ("hb mapping", hb_mapping),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS [{}] {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
