//! Minimal end-to-end run: the group-adaptive policy on a synthetic world.
//!
//! ```sh
//! cargo run --release --example synthetic_run -- [T]
//! ```

use metaban::env::synthetic::{RewardFamily, SyntheticEnv, SyntheticSpec};
use metaban::env::{regret_of, Environment};
use metaban::grouping::GroupConfig;
use metaban::learners::{
    MetaGradMode, MetaWarmStart, MinibatchPolicy, TrainConfig, UserWarmStart,
};
use metaban::net::NetworkConfig;
use metaban::policy::{MetaBan, MetaBanConfig, Policy, UcbConfig};

fn main() {
    let horizon: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);

    let mut env = SyntheticEnv::new(SyntheticSpec {
        users: 20,
        groups: 4,
        family: RewardFamily::Quadratic,
        noise: 0.1,
        gap: 0.5,
        dim: 10,
        arms: 10,
        seed: 7,
    })
    .unwrap();

    let cfg = MetaBanConfig {
        net: NetworkConfig::new(env.arm_dim(), 100, 2, 1).unwrap(),
        train: TrainConfig::new(0.01, 30, MinibatchPolicy::Full, 0.01, 0.1).unwrap(),
        group: GroupConfig::new(5.0, 0.4).unwrap(),
        ucb: UcbConfig {
            exploration_scale: 0.01,
            ..UcbConfig::default()
        },
        meta_step_size: 0.001,
        meta_iterations: 10,
        l1_weight: 0.1,
        meta_minibatch: MinibatchPolicy::Full,
        meta_max_step_norm: f64::INFINITY,
        meta_warm_start: MetaWarmStart::FromPrevious,
        group_cache: false,
        user_warm_start: UserWarmStart::FromMeta,
        grad_mode: MetaGradMode::AtUserSnapshots,
        seed: 99,
    };
    let mut policy = MetaBan::new(cfg, env.num_users()).unwrap();
    policy.warm_start(&env.warm_start()).unwrap();

    let start = std::time::Instant::now();
    let mut cum_regret = 0.0;
    let mut exact_hits = 0u64;
    for t in 1..=horizon {
        let round = env.step(t);
        let decision = policy.choose(&round.arms).unwrap();
        let reward = round.feedback.realized[decision.chosen];
        cum_regret += regret_of(&round.feedback, decision.chosen).unwrap();
        if let Some(truth) = &round.true_groups {
            if decision.groups[decision.chosen].members == truth[decision.chosen] {
                exact_hits += 1;
            }
        }
        policy
            .learn(round.arms.serving, decision.chosen, reward)
            .unwrap();
        if t % 100 == 0 {
            println!(
                "t={t:5}  cum_regret={cum_regret:8.3}  group_exact={:.3}  ({:.1} ms/round)",
                exact_hits as f64 / t as f64,
                start.elapsed().as_secs_f64() * 1000.0 / t as f64
            );
        }
    }
    println!(
        "done: T={horizon} cum_regret={cum_regret:.3} elapsed={:.1}s",
        start.elapsed().as_secs_f64()
    );
}
