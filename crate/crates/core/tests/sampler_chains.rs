use mcmc_perf::glm::{synthetic_logistic, synthetic_random, ExecPlan, Strategy};
use mcmc_perf::rng::DeviateBuffer;
use mcmc_perf::sampler::{run_chain, slice_step, ChainConfig, GaussianPrior, SliceParams};
use mcmc_perf::Error;

#[test]
fn slice_sampler_recovers_standard_normal() {
    let mut rng = DeviateBuffer::uniform(31, 8192);
    let params = SliceParams::default();
    let mut x = 3.0;
    let n = 100_000;
    let (mut s1, mut s2, mut below) = (0.0, 0.0, 0usize);
    for _ in 0..n {
        let (d, _) = slice_step(|d| Ok(-0.5 * (x + d) * (x + d)), &mut rng, &params).unwrap();
        x += d;
        s1 += x;
        s2 += x * x;
        below += usize::from(x < -1.0);
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!(mean.abs() < 0.03, "{mean}");
    assert!((var - 1.0).abs() < 0.05, "{var}");
    // P(Z < -1) = 0.158655
    assert!((below as f64 / n as f64 - 0.158655).abs() < 0.01);
}

#[test]
fn slice_sampler_handles_skewed_target() {
    // Exponential(1) on x > 0, mean 1.
    let mut rng = DeviateBuffer::uniform(32, 8192);
    let mut x = 1.0f64;
    let n = 100_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let (d, _) = slice_step(
            |d| Ok(if x + d > 0.0 { -(x + d) } else { f64::NEG_INFINITY }),
            &mut rng,
            &SliceParams::default(),
        )
        .unwrap();
        x += d;
        sum += x;
    }
    assert!((sum / n as f64 - 1.0).abs() < 0.03);
}

#[test]
fn flat_target_hits_widen_limit() {
    let mut rng = DeviateBuffer::uniform(1, 64);
    let r = slice_step(|_| Ok(0.0), &mut rng, &SliceParams::default());
    assert!(matches!(r, Err(Error::SliceWidenLimit(50))));
}

#[test]
fn diff_update_and_full_recompute_give_the_same_draws() {
    let (data, _) = synthetic_random(400, 4, 17).unwrap();
    let prior = GaussianPrior::isotropic(4, 0.0, 2.0).unwrap();
    let mut cfg = ChainConfig::new(300, 50, 99);
    let plan = ExecPlan::sequential();
    let fast = run_chain(&data, &prior, &cfg, &plan).unwrap();
    cfg.diff_update = false;
    let slow = run_chain(&data, &prior, &cfg, &plan).unwrap();
    assert_eq!(fast.draws.len(), 250);
    assert_eq!(fast.accept_evals, slow.accept_evals);
    for (a, b) in fast.draws.iter().zip(&slow.draws) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn chains_are_deterministic_and_nearly_worker_invariant() {
    let (data, _) = synthetic_random(2000, 3, 4).unwrap();
    let prior = GaussianPrior::isotropic(3, 0.0, 1.0).unwrap();
    let cfg = ChainConfig::new(100, 0, 5);
    let seq = ExecPlan::sequential();
    let a = run_chain(&data, &prior, &cfg, &seq).unwrap();
    let b = run_chain(&data, &prior, &cfg, &seq).unwrap();
    assert_eq!(a.draws, b.draws);
    let par = run_chain(&data, &prior, &cfg, &ExecPlan::new(Strategy::Plf, 4, 1).unwrap()).unwrap();
    for (x, y) in a.draws.iter().flatten().zip(par.draws.iter().flatten()) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn posterior_concentrates_near_truth() {
    let beta = [0.8, -1.2, 0.3];
    let data = synthetic_logistic(3000, 3, &beta, 8).unwrap();
    let prior = GaussianPrior::isotropic(3, 0.0, 5.0).unwrap();
    let out = run_chain(&data, &prior, &ChainConfig::new(3000, 500, 12), &ExecPlan::sequential()).unwrap();
    let mean = out.posterior_mean();
    let sd = out.posterior_sd();
    for k in 0..3 {
        assert!((mean[k] - beta[k]).abs() < 4.0 * sd[k], "k={k}: {} ± {} vs {}", mean[k], sd[k], beta[k]);
    }
}

#[test]
fn config_errors() {
    let (data, _) = synthetic_random(10, 2, 1).unwrap();
    let prior = GaussianPrior::isotropic(3, 0.0, 1.0).unwrap();
    assert!(run_chain(&data, &prior, &ChainConfig::new(10, 0, 1), &ExecPlan::sequential()).is_err());
    let prior = GaussianPrior::isotropic(2, 0.0, 1.0).unwrap();
    assert!(run_chain(&data, &prior, &ChainConfig::new(10, 10, 1), &ExecPlan::sequential()).is_err());
    assert!(GaussianPrior::isotropic(2, 0.0, 0.0).is_err());
}

#[test]
fn draws_csv_round_trips_exactly() {
    let (data, _) = synthetic_random(50, 2, 1).unwrap();
    let prior = GaussianPrior::isotropic(2, 0.0, 1.0).unwrap();
    let out = run_chain(&data, &prior, &ChainConfig::new(20, 5, 1), &ExecPlan::sequential()).unwrap();
    let mut buf = Vec::new();
    out.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta_0,beta_1"));
    for (line, draw) in lines.zip(&out.draws) {
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(&vals, draw);
    }
}
