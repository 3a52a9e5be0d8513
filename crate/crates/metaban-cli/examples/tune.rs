//! Scratch tuning probe (not part of the deliverable surface).

use metaban::env::synthetic::{RewardFamily, SyntheticEnv, SyntheticSpec};
use metaban::env::Environment;
use metaban::learners::{user_loss, MinibatchPolicy, Observation, TrainConfig, UserState};
use metaban::net::{NetworkConfig, NetworkParams};
use metaban::UserId;
use metaban_cli::config::{ExperimentConfig, PolicyConfig};
use metaban_cli::runner::{execute_run, EnvSource};

fn c4_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        users: 20,
        groups: 4,
        family: RewardFamily::Quadratic,
        noise: 0.1,
        gap: 0.5,
        dim: 10,
        arms: 10,
        seed,
    }
}

fn probe_user_convergence() {
    println!("== user convergence: m=100 L=2, 20 obs, J1<=2000 ==");
    for eta1 in [0.001, 0.005, 0.01, 0.05, 0.1] {
        let mut worst_iters = 0usize;
        let mut fails = 0;
        for seed in 0..10u64 {
            let mut env = SyntheticEnv::new(c4_spec(100 + seed)).unwrap();
            let round = env.step(1);
            // 20 observations for one user from env arms.
            let mut obs = Vec::new();
            let mut t = 1;
            while obs.len() < 20 {
                let r = env.step(t);
                let u = r.arms.serving;
                for (i, x) in r.arms.arms().iter().enumerate() {
                    if obs.len() < 20 && i % 3 == 0 {
                        obs.push(Observation::new(x.clone(), r.feedback.realized[i]));
                    }
                    let _ = u;
                }
                t += 1;
            }
            let net = NetworkConfig::new(10, 100, 2, seed).unwrap();
            let init = NetworkParams::init(net);
            let cfg = TrainConfig::new(eta1, 100, MinibatchPolicy::Full, 0.01, 0.1).unwrap();
            let mut st = UserState::new(UserId(0), init.clone(), seed);
            for o in &obs {
                st.push_observation(o.clone());
            }
            // run updates of 100 iters up to 2000 total, measuring when loss <= 1e-2
            let mut done = None;
            let mut theta = init.clone();
            for block in 1..=20 {
                // continue training from previous theta to emulate one long run
                let mut tmp = UserState::new(UserId(0), theta.clone(), seed);
                for o in &obs {
                    tmp.push_observation(o.clone());
                }
                tmp.update(&theta, &cfg).unwrap();
                theta = tmp.latest_snapshot().clone();
                let loss = user_loss(&theta, &obs).unwrap();
                if loss <= 1e-2 {
                    done = Some(block * 100);
                    break;
                }
            }
            match done {
                Some(iters) => worst_iters = worst_iters.max(iters),
                None => fails += 1,
            }
        }
        println!("eta1={eta1:<6} fails={fails}/10 worst_iters={worst_iters}");
    }
}

fn meta_ban_cfg(json: &str) -> PolicyConfig {
    serde_json::from_str(json).unwrap()
}

fn probe_bandit(label: &str, policy: &PolicyConfig, horizon: u64, seeds: usize, noise: f64) {
    let cfg_json = format!(
        r#"{{
            "environment": {{"type": "synthetic", "noise": {noise}}},
            "policies": [{}],
            "horizon": {horizon},
            "runs": {seeds},
            "seed": 1234
        }}"#,
        serde_json::to_string(policy).unwrap()
    );
    let cfg: ExperimentConfig = serde_json::from_str(&cfg_json).unwrap();
    let (source, _) = EnvSource::load(&cfg.environment, cfg.seed).unwrap();
    let start = std::time::Instant::now();
    let mut finals = Vec::new();
    let mut exact_rates = Vec::new();
    let mut early = Vec::new();
    let mut late = Vec::new();
    for run in 0..seeds {
        let out = match execute_run(&source, policy, horizon, cfg.seed, run) {
            Ok(o) => o,
            Err(e) => {
                println!("{label:<40} run {run}: ERROR {e}");
                continue;
            }
        };
        finals.push(out.final_cum_regret());
        let tail = 200.min(out.rows.len());
        let exact = out.rows[out.rows.len() - tail..]
            .iter()
            .filter(|r| r.group_exact == Some(true))
            .count() as f64
            / tail as f64;
        exact_rates.push(exact);
        let h = out.rows.len();
        if h >= 2000 {
            early.push(out.rows[..500].iter().map(|r| r.regret).sum::<f64>() / 500.0);
            late.push(
                out.rows[1499..2000].iter().map(|r| r.regret).sum::<f64>() / 501.0,
            );
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "{label:<40} final={:8.2}  exact_tail={:.3}  early={:.4} late={:.4}  ({:.1}s)",
        mean(&finals),
        mean(&exact_rates),
        if early.is_empty() { f64::NAN } else { mean(&early) },
        if late.is_empty() { f64::NAN } else { mean(&late) },
        start.elapsed().as_secs_f64()
    );
}

fn probe_ceiling() {
    println!("== offline fit ceiling: user net on own (x, h+noise) data ==");
    for (nobs, noise) in [(40usize, 0.1), (100, 0.1), (100, 0.05)] {
        for (eta, frac, iters) in [
            (0.05, Some(0.25), 2000usize),
            (0.02, Some(0.5), 2000),
            (0.01, None, 2000),
            (0.005, None, 2000),
        ] {
            let mut spec = c4_spec(500);
            spec.noise = noise;
            let mut env = SyntheticEnv::new(spec).unwrap();
            let mut obs = Vec::new();
            let mut t = 1;
            while obs.len() < nobs {
                let r = env.step(t);
                for (i, x) in r.arms.arms().iter().enumerate() {
                    if obs.len() < nobs && i % 2 == 0 {
                        let h = env.expected_reward(UserId(0), x);
                        let noisy = r.feedback.realized[i] - r.feedback.expected[i] + h;
                        obs.push(Observation::new(x.clone(), noisy.clamp(0.0, 1.0)));
                    }
                }
                t += 1;
            }
            let net = NetworkConfig::new(10, 100, 2, 3).unwrap();
            let init = NetworkParams::init(net);
            let minibatch = match frac {
                Some(f) => MinibatchPolicy::RandomFraction(f),
                None => MinibatchPolicy::Full,
            };
            let cfg = TrainConfig::new(eta, iters, minibatch, 0.01, 0.1).unwrap();
            let mut st = UserState::new(UserId(0), init.clone(), 1);
            for o in &obs {
                st.push_observation(o.clone());
            }
            st.update(&init, &cfg).unwrap();
            let theta = st.latest_snapshot();
            let train_loss = user_loss(theta, &obs).unwrap();
            let mut errs = Vec::new();
            for tt in 1000..1050 {
                let r = env.step(tt);
                for x in r.arms.arms() {
                    let h = env.expected_reward(UserId(0), x);
                    errs.push((theta.forward(x).unwrap() - h).abs());
                }
            }
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let frac_label = frac.map(|f| f.to_string()).unwrap_or_else(|| "full".into());
            let bad = errs.iter().filter(|e| **e > 0.09).count() as f64 / errs.len() as f64;
            println!(
                "nobs={nobs:<4} noise={noise:<5} eta={eta:<6} frac={frac_label:<5} \
                 train_loss={train_loss:9.4} mean|err|={mean:.4} frac>0.09={bad:.3}"
            );
        }
    }
}

fn probe_diag(policy_json: &str, horizon: u64, noise: f64) {
    use metaban::env::regret_of;
    use metaban_cli::runner::build_policy;
    use metaban_cli::seed;
    let policy_cfg: PolicyConfig = serde_json::from_str(policy_json).unwrap();
    let mut spec = c4_spec(seed::env_seed(1234, 0));
    spec.noise = noise;
    let mut env = SyntheticEnv::new(spec).unwrap();
    let rs = seed::run_seed(1234, &policy_cfg.name, 0);
    let mut policy = build_policy(&policy_cfg, env.num_users(), env.arm_dim(), rs).unwrap();
    policy.warm_start(&env.warm_start()).unwrap();
    let mut window: Vec<(f64, f64, f64, f64)> = Vec::new(); // (|exploit-h|, bonus_range, regret, corr)
    for t in 1..=horizon {
        let round = env.step(t);
        let d = policy.choose(&round.arms).unwrap();
        let reward = round.feedback.realized[d.chosen];
        let regret = regret_of(&round.feedback, d.chosen).unwrap();
        let h = &round.feedback.expected;
        let exploit: Vec<f64> = d.scores.iter().map(|s| s.exploit).collect();
        let mean_err = exploit
            .iter()
            .zip(h.iter())
            .map(|(e, hh)| (e - hh).abs())
            .sum::<f64>()
            / h.len() as f64;
        let bonus: Vec<f64> = d.scores.iter().map(|s| s.bonus).collect();
        let alpha = policy_cfg.alpha;
        let brange = alpha
            * (bonus.iter().cloned().fold(f64::MIN, f64::max)
                - bonus.iter().cloned().fold(f64::MAX, f64::min));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (me, mh) = (mean(&exploit), mean(h));
        let cov = exploit
            .iter()
            .zip(h.iter())
            .map(|(e, hh)| (e - me) * (hh - mh))
            .sum::<f64>();
        let (ve, vh) = (
            exploit.iter().map(|e| (e - me) * (e - me)).sum::<f64>(),
            h.iter().map(|hh| (hh - mh) * (hh - mh)).sum::<f64>(),
        );
        let corr = if ve > 0.0 && vh > 0.0 {
            cov / (ve * vh).sqrt()
        } else {
            0.0
        };
        window.push((mean_err, brange, regret, corr));
        policy.learn(round.arms.serving, d.chosen, reward).unwrap();
        if t % 200 == 0 {
            let m = |f: fn(&(f64, f64, f64, f64)) -> f64| {
                window.iter().map(f).sum::<f64>() / window.len() as f64
            };
            println!(
                "t={t:5} |exploit-h|={:.3} corr={:.3} bonus_range={:.4} regret/round={:.3}",
                m(|w| w.0),
                m(|w| w.3),
                m(|w| w.1),
                m(|w| w.2)
            );
            window.clear();
        }
    }
}

fn probe_pooled_fit_limit() {
    println!("== pooled-fit limit: net trained to convergence on a true cell's histories ==");
    let mut spec = c4_spec(900);
    spec.noise = 0.05;
    let mut env = SyntheticEnv::new(spec).unwrap();
    // Per-user histories: 50 observations each drawn from env arms.
    let n = 20usize;
    let mut histories: Vec<Vec<Observation>> = vec![Vec::new(); n];
    let mut t = 1;
    while histories.iter().any(|h| h.len() < 50) {
        let r = env.step(t);
        let u = r.arms.serving.0;
        if histories[u].len() < 50 {
            for (i, x) in r.arms.arms().iter().enumerate() {
                if histories[u].len() < 50 && i % 2 == 0 {
                    let h = env.expected_reward(metaban::UserId(u), x);
                    let noisy = (r.feedback.realized[i] - r.feedback.expected[i] + h)
                        .clamp(0.0, 1.0);
                    histories[u].push(Observation::new(x.clone(), noisy));
                }
            }
        }
        t += 1;
    }
    let mut errs_pool = Vec::new();
    let mut errs_own = Vec::new();
    for probe in 0..12 {
        let round = env.step(10_000 + probe);
        let serving = round.arms.serving;
        let x = round.arms.arm(0);
        let h_truth = env.expected_reward(serving, x);
        let cell = &round.true_groups.as_ref().unwrap()[0];
        // Pool the true cell's histories and fit from scratch.
        let pooled: Vec<Observation> = cell
            .iter()
            .flat_map(|u| histories[u.0].iter().cloned())
            .collect();
        let net = NetworkConfig::new(10, 100, 2, 77 + probe).unwrap();
        let init = NetworkParams::init(net);
        let cfg = TrainConfig::new(0.02, 3000, MinibatchPolicy::RandomFraction(0.1), 0.01, 0.1)
            .unwrap();
        let mut st = UserState::new(UserId(0), init.clone(), 5);
        for o in &pooled {
            st.push_observation(o.clone());
        }
        st.update(&init, &cfg).unwrap();
        let f_pool = st.latest_snapshot().forward(x).unwrap();
        errs_pool.push((f_pool - h_truth).abs());
        // Compare: fit only the serving user's own history.
        let mut st2 = UserState::new(UserId(0), init.clone(), 6);
        for o in &histories[serving.0] {
            st2.push_observation(o.clone());
        }
        let cfg2 = TrainConfig::new(0.02, 3000, MinibatchPolicy::RandomFraction(0.25), 0.01, 0.1)
            .unwrap();
        st2.update(&init, &cfg2).unwrap();
        let f_own = st2.latest_snapshot().forward(x).unwrap();
        errs_own.push((f_own - h_truth).abs());
        println!(
            "arm {probe:2}: cell size {:2} users, pooled err {:.3}, own err {:.3} (h={h_truth:.3})",
            cell.len(),
            (f_pool - h_truth).abs(),
            (f_own - h_truth).abs()
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "mean pooled err {:.4}  mean own err {:.4}",
        mean(&errs_pool),
        mean(&errs_own)
    );
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    if which == "pool" {
        probe_pooled_fit_limit();
    }
    if which == "ceiling" {
        probe_ceiling();
    }
    if which == "diag" {
        let json = std::env::args().nth(2).unwrap();
        let t: u64 = std::env::args()
            .nth(3)
            .and_then(|s| s.parse().ok())
            .unwrap_or(1000);
        let noise: f64 = std::env::args()
            .nth(4)
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.05);
        probe_diag(&json, t, noise);
    }
    if which == "conv" || which == "all" {
        probe_user_convergence();
    }
    if which == "bandit" || which == "all" {
        println!("== bandit probes: c4/c5 env (n=20 q=4 quad gap=.5 k=10 d=10) ==");
        let t: u64 = std::env::args()
            .nth(2)
            .and_then(|s| s.parse().ok())
            .unwrap_or(800);
        let seeds: usize = std::env::args()
            .nth(3)
            .and_then(|s| s.parse().ok())
            .unwrap_or(2);

        let noise: f64 = std::env::args()
            .nth(4)
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.05);
        probe_bandit(
            "linucb a=0.01 l=1",
            &meta_ban_cfg(r#"{"name":"linucb","alpha":0.01,"lambda":1.0}"#),
            t,
            seeds,
            noise,
        );
        probe_bandit(
            "neuucb-one a=0.01 l=1 e1=.05 steps=20",
            &meta_ban_cfg(
                r#"{"name":"neuucb-one","alpha":0.01,"lambda":1.0,"eta1":0.05,"train_steps":20,"batch_cap":64}"#,
            ),
            t,
            seeds,
            noise,
        );
        probe_bandit(
            "neuucb-ind a=0.01 l=1 e1=.05 steps=20",
            &meta_ban_cfg(
                r#"{"name":"neuucb-ind","alpha":0.01,"lambda":1.0,"eta1":0.05,"train_steps":20,"batch_cap":64}"#,
            ),
            t,
            seeds,
            noise,
        );
        probe_bandit(
            "mb capped e2=1e-2 J2=15 cnt6 J1=60",
            &meta_ban_cfg(
                r#"{"name":"meta-ban","alpha":0.01,"lambda":0.01,"eta1":0.05,"eta2":0.01,"j1":60,"j2":15,
                    "minibatch_fraction":0.25,"meta_minibatch_count":6,
                    "meta_grad_mode":"at_meta_iterate","snapshot_mode":"latest-only","group_cache":true,
                    "max_step_norm":0.25,"meta_max_step_norm":0.1}"#,
            ),
            t,
            seeds,
            noise,
        );
    }
}
