//! Acceptance suite: one test per verification criterion. Each test
//! prints a single summary line on success; the harness line itself is
//! the pass/fail record for the criterion.

mod t_oracle;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use xrpo::{
    allocate_round, build_icl_prompt, group_advantage, half_width, novelty, run_experiment,
    sharpen, sharpen_group, t_quantile, uncertainty_reduction, AllocatorParams, Corpus,
    CorpusEntry, IclConfig, LocalHashEmbedder, Policy, PopulationSpec, PromptId, PromptSummary,
    Rollout, RunConfig, SharpenParams, SimPrompt,
};

#[test]
fn criterion_01_t_quantile_matches_integral_oracle() {
    let start = Instant::now();
    let dfs: Vec<u32> = (1..=30).chain([60, 120, 1000]).collect();
    let ps = [0.9, 0.95, 0.975, 0.995];

    // The oracle itself must agree with the df 1 and 2 closed forms.
    for df in [1_u32, 2] {
        for p in ps {
            let exact = t_oracle::closed_form(df, p).unwrap();
            assert!(
                (t_oracle::t_quantile(df, p) - exact).abs() <= 1e-8,
                "oracle self-check failed at df {df}, p {p}"
            );
        }
    }

    let mut max_err: f64 = 0.0;
    for &df in &dfs {
        for p in ps {
            let lib = t_quantile(p, df).unwrap();
            let oracle = t_oracle::t_quantile(df, p);
            assert!(
                (t_oracle::t_cdf(df, oracle) - p).abs() <= 1e-9,
                "oracle round trip failed at df {df}, p {p}"
            );
            max_err = max_err.max((lib - oracle).abs());
        }
    }
    assert!(max_err <= 1e-6, "max quantile error {max_err:.3e}");
    println!(
        "criterion 01 PASS: {} (df, p) pairs, max |library - oracle| = {max_err:.3e}, {:?}",
        dfs.len() * ps.len(),
        start.elapsed()
    );
}

#[test]
fn criterion_02_half_width_identities_hold_exactly() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6331);
    for _ in 0..10_000 {
        let s: f64 = rng.gen_range(0.0..10.0);
        let n: u32 = rng.gen_range(2..200);
        let alpha: f64 = rng.gen_range(0.001..0.5);

        let lhs = uncertainty_reduction(s, n, alpha).unwrap();
        let rhs = half_width(s, n, alpha).unwrap() - half_width(s, n + 1, alpha).unwrap();
        assert_eq!(lhs.to_bits(), rhs.to_bits(), "identity broke at s={s}, n={n}, alpha={alpha}");

        // Homogeneity in s: exact for power-of-two scale factors.
        let c = (2.0_f64).powi(rng.gen_range(-8..=8));
        let scaled = half_width(c * s, n, alpha).unwrap();
        let reference = c * half_width(s, n, alpha).unwrap();
        assert_eq!(scaled.to_bits(), reference.to_bits(), "homogeneity broke at s={s}, n={n}");
    }
    println!(
        "criterion 02 PASS: 10000 fuzz cases, both identities bitwise exact, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_03_allocation_conserves_and_commutes() {
    let start = Instant::now();
    let params = AllocatorParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6332);
    for case in 0..10_000 {
        let m = rng.gen_range(1..24_usize);
        let mut summaries: Vec<PromptSummary> = (0..m)
            .map(|i| PromptSummary {
                prompt_id: PromptId::new(format!("p{i:03}")),
                n: rng.gen_range(2..50),
                mean: rng.gen_range(0.0..1.0),
                std: rng.gen_range(0.0..1.0),
            })
            .collect();
        let budget: u32 = rng.gen_range(0..200);
        let t_total: u64 = rng.gen_range(0..100_000);

        let plan = allocate_round(&summaries, budget, t_total, &params, 1).unwrap();
        assert_eq!(plan.total(), budget, "case {case} lost budget");

        summaries.shuffle(&mut rng);
        let shuffled = allocate_round(&summaries, budget, t_total, &params, 1).unwrap();
        assert_eq!(plan.counts, shuffled.counts, "case {case} is order-sensitive");
    }
    // The reference configuration: batch 16, 4 base rollouts per prompt,
    // 128 total across 2 planned rounds.
    let cfg = RunConfig {
        batch_size: 16,
        population: PopulationSpec::Mixed {
            size: 16,
            frac_near_deterministic: 0.5,
            frac_zero: 0.0,
            icl_boost_zero: 0.0,
            p_mid: [0.3, 0.7],
        },
        ..RunConfig::default()
    };
    assert_eq!(cfg.phase_budgets().unwrap(), vec![64, 32, 32]);
    println!(
        "criterion 03 PASS: 10000 allocations conserve budget and ignore input order; \
         default phases [64, 32, 32], {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_04_advantages_standardize_and_degenerate_groups_are_silent() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6334);
    let mut checked = 0;
    while checked < 10_000 {
        let g = rng.gen_range(2..32_usize);
        let rewards: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..1.0)).collect();
        let spread = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - rewards.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread < 1e-9 {
            continue;
        }
        let a = group_advantage(&rewards);
        let mean = a.iter().sum::<f64>() / g as f64;
        let var = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / g as f64;
        assert!(mean.abs() <= 1e-9, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() <= 1e-9, "popstd {}", var.sqrt());
        checked += 1;
    }

    // Degenerate groups: zero advantages and zero bonus mass, for both
    // the all-failed and all-solved cases.
    let params = SharpenParams::default();
    for reward in [0.0, 1.0] {
        let group: Vec<Rollout> = (0..6)
            .map(|i| Rollout {
                prompt_id: PromptId::new("p"),
                length: 10 + i,
                logprob_sum: -1.0 - i as f64,
                reward,
                is_icl: false,
                phase: 1,
                complete: true,
            })
            .collect();
        let recs = sharpen_group(&group, &params).unwrap();
        assert!(recs.iter().all(|r| r.base_advantage == 0.0 && r.bonus == 0.0));
    }
    println!(
        "criterion 04 PASS: 10000 nondegenerate groups standardized to 1e-9; \
         degenerate groups contribute zero advantage and bonus mass, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_05_novelty_product_and_shift_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6335);
    for _ in 0..10_000 {
        let g = rng.gen_range(2..32_usize);
        let scores: Vec<f64> = (0..g).map(|_| rng.gen_range(-4.0..0.0)).collect();
        let etas = novelty(&scores);
        let log_product: f64 = etas.iter().map(|e| e.ln()).sum();
        assert!(log_product.abs() <= 1e-9, "product drifted: ln = {log_product}");

        let c: f64 = rng.gen_range(-2.0..2.0);
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        for (a, b) in etas.iter().zip(novelty(&shifted)) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "shift moved eta {a} -> {b}");
        }
    }
    println!(
        "criterion 05 PASS: 10000 groups, eta product = 1 within 1e-9, \
         shift invariance within 1e-12, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_06_bonus_clamp_bounds_on_exhaustive_grids() {
    let start = Instant::now();
    let mut cells = 0_u64;
    for lambda in [1.0, 2.5, 5.0] {
        for kappa in [0.5, 0.8] {
            let params = SharpenParams {
                lambda_novelty: lambda,
                kappa_clip: kappa,
                full_reward: 1.0,
            };
            for ai in -300..=300 {
                let advantage = ai as f64 / 100.0;
                for ei in 1..=200 {
                    let eta = ei as f64 / 100.0;
                    let (sharpened, bonus) = sharpen(advantage, eta, 1.0, &params);
                    assert!(bonus >= 0.0);
                    assert!(bonus <= kappa * advantage.max(0.0) + 1e-15);
                    assert_eq!(sharpened, advantage + bonus);
                    // Below the full reward nothing changes.
                    let (plain, zero) = sharpen(advantage, eta, 0.999, &params);
                    assert_eq!((plain, zero), (advantage, 0.0));
                    cells += 1;
                }
            }
        }
    }
    println!(
        "criterion 06 PASS: {cells} grid cells respect 0 <= bonus <= kappa * max(A, 0), {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_07_episode_conformance_on_100_seeded_episodes() {
    let start = Instant::now();
    let mut episodes_checked = 0;
    for seed in 0..25_u64 {
        let cfg = RunConfig {
            seed,
            batch_size: 8,
            replications: 1,
            episodes: 4,
            policy: Policy::Xrpo,
            allocator: AllocatorParams {
                n_base: 4,
                n_rounds: 2,
                total_budget: 64,
                ..AllocatorParams::default()
            },
            population: PopulationSpec::Mixed {
                size: 8,
                frac_near_deterministic: 0.25,
                frac_zero: 0.25,
                icl_boost_zero: 0.3,
                p_mid: [0.2, 0.8],
            },
            ..RunConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();

        for episode in 0..cfg.episodes {
            let rollouts: Vec<_> = out
                .rollouts
                .iter()
                .filter(|r| r.episode == episode)
                .collect();
            assert_eq!(
                rollouts.len() as u32,
                cfg.allocator.total_budget,
                "seed {seed} episode {episode} budget mismatch"
            );
            // is_icl must be set exactly for rollouts of prompts with no
            // success before their phase (seeding is decided per round).
            let mut success_round: std::collections::BTreeMap<String, u32> = Default::default();
            for r in &rollouts {
                if r.rollout.reward >= cfg.sharpen.full_reward {
                    let e = success_round
                        .entry(r.rollout.prompt_id.to_string())
                        .or_insert(u32::MAX);
                    *e = (*e).min(r.rollout.phase);
                }
            }
            for r in &rollouts {
                let first_success = success_round
                    .get(&r.rollout.prompt_id.to_string())
                    .copied()
                    .unwrap_or(u32::MAX);
                let expected = r.rollout.phase > 0 && first_success >= r.rollout.phase;
                assert_eq!(
                    r.rollout.is_icl, expected,
                    "seed {seed} episode {episode} prompt {} phase {}",
                    r.rollout.prompt_id, r.rollout.phase
                );
            }
            episodes_checked += 1;
        }
    }
    assert_eq!(episodes_checked, 100);

    // Corpus hygiene across sequential episodes sharing one corpus.
    let cfg = RunConfig {
        seed: 77,
        batch_size: 6,
        replications: 1,
        episodes: 1,
        policy: Policy::Xrpo,
        allocator: AllocatorParams {
            n_base: 4,
            n_rounds: 2,
            total_budget: 48,
            ..AllocatorParams::default()
        },
        population: PopulationSpec::Mixed {
            size: 6,
            frac_near_deterministic: 0.5,
            frac_zero: 0.0,
            icl_boost_zero: 0.0,
            p_mid: [0.3, 0.7],
        },
        ..RunConfig::default()
    };
    let mut prompts = cfg.population.materialize(cfg.seed).unwrap();
    let embedder = LocalHashEmbedder::new(cfg.icl.embedding_dim).unwrap();
    let mut corpus = Corpus::new();
    for episode in 0..10 {
        xrpo::run_episode(&mut prompts, &cfg, &mut corpus, &embedder, 0, episode).unwrap();
        corpus
            .audit(Some(cfg.icl.embedding_dim), cfg.sharpen.full_reward)
            .unwrap();
    }
    println!(
        "criterion 07 PASS: 100 seeded episodes spend their exact budget with correct \
         seeding flags; corpus audit clean after 10 shared-corpus episodes, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_08_template_golden_bytes() {
    let start = Instant::now();
    let cfg = IclConfig::default();
    let entry = |id: &str, problem: &str, solution: &str| CorpusEntry {
        entry_id: id.to_string(),
        problem_text: problem.to_string(),
        solution_text: solution.to_string(),
        embedding: vec![1.0],
        source_prompt_id: PromptId::new("src"),
        added_at_step: 0,
        source_is_icl: false,
        source_reward: 1.0,
    };
    let e1 = entry("e1", "Example problem 1", "Correct solution 1");
    let e2 = entry("e2", "Example problem 2", "Correct solution 2");
    let got = build_icl_prompt("Hard unsolved problem", &[&e1, &e2], &cfg);
    let want = "<task>\n  You are given several worked examples, each with a\n  <problem> and a <solution>. Extract a general strategy,\n  then think through the new problem, and finally provide\n  the detailed solution.\n</task>\n\n<examples>\n  <example id=\"1\">\n    <problem>Example problem 1</problem>\n    <solution>Correct solution 1</solution>\n  </example>\n\n  <example id=\"2\">\n    <problem>Example problem 2</problem>\n    <solution>Correct solution 2</solution>\n  </example>\n</examples>\n\n<new_problem>Hard unsolved problem</new_problem>";
    assert_eq!(got, want, "template diverged from the documented skeleton");
    assert_eq!(
        build_icl_prompt("plain problem", &[], &cfg),
        "plain problem",
        "zero-exemplar fallback broke"
    );
    println!("criterion 08 PASS: two-exemplar skeleton byte-identical; zero-exemplar fallback raw, {:?}", start.elapsed());
}

fn mixed_cfg(seed: u64, policy: Policy) -> RunConfig {
    RunConfig {
        seed,
        batch_size: 16,
        replications: 1,
        episodes: 1,
        policy,
        population: PopulationSpec::Mixed {
            size: 16,
            frac_near_deterministic: 0.5,
            frac_zero: 0.0,
            icl_boost_zero: 0.0,
            p_mid: [0.3, 0.7],
        },
        ..RunConfig::default()
    }
}

#[test]
fn criterion_09_priority_allocation_beats_uniform_on_half_width() {
    let start = Instant::now();
    let mut wins = 0;
    for seed in 0..200_u64 {
        let hw = |policy| {
            let out = run_experiment(&mixed_cfg(seed, policy)).unwrap();
            out.replications[0].final_round().unwrap().mean_half_width
        };
        if hw(Policy::Xrpo) < hw(Policy::Uniform) {
            wins += 1;
        }
    }
    assert!(wins >= 190, "priority allocation won only {wins}/200 paired replications");
    println!(
        "criterion 09 PASS: lower final mean half-width than uniform in {wins}/200 \
         paired replications (needed 190), {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_10_flip_rate_matches_the_boost_calibration() {
    let start = Instant::now();
    // All-zero prompts with boost 0.18 and exactly one seeded rollout
    // each (round budget equals the batch size), so each prompt flips
    // with probability 0.18 exactly.
    let cfg = RunConfig {
        seed: 2024,
        batch_size: 16,
        replications: 200,
        episodes: 1,
        policy: Policy::Xrpo,
        allocator: AllocatorParams {
            n_base: 4,
            n_rounds: 1,
            total_budget: 80,
            ..AllocatorParams::default()
        },
        population: PopulationSpec::Mixed {
            size: 16,
            frac_near_deterministic: 0.0,
            frac_zero: 1.0,
            icl_boost_zero: 0.18,
            p_mid: [0.3, 0.7],
        },
        ..RunConfig::default()
    };
    let out = run_experiment(&cfg).unwrap();
    let zeros: u32 = out
        .replications
        .iter()
        .flat_map(|r| &r.episodes)
        .map(|e| e.zero_after_base)
        .sum();
    assert_eq!(zeros, 16 * 200, "every prompt must start the round zero");
    let seeded: u32 = out
        .replications
        .iter()
        .flat_map(|r| &r.episodes)
        .map(|e| e.seeded_rollouts)
        .sum();
    assert_eq!(seeded, 16 * 200, "exactly one seeded rollout per prompt");

    let rate = out.summary.flip_rate.mean;
    let se = (0.18_f64 * 0.82 / f64::from(zeros)).sqrt();
    let (lo, hi) = (0.15 - 2.0 * se, 0.20 + 2.0 * se);
    assert!(
        rate >= lo && rate <= hi,
        "flip rate {rate:.4} outside [{lo:.4}, {hi:.4}]"
    );
    println!(
        "criterion 10 PASS: flip rate {rate:.4} within [{lo:.4}, {hi:.4}] over 200 \
         replications, {:?}",
        start.elapsed()
    );
}

fn ablation_cfg(seed: u64, policy: Policy) -> RunConfig {
    let mut prompts = Vec::new();
    for i in 0..6 {
        let mut p = SimPrompt::new(format!("hard{i:02}"), 0.02);
        p.icl_boost = 0.30;
        prompts.push(p);
    }
    for i in 0..6 {
        prompts.push(SimPrompt::new(format!("mid{i:02}"), 0.40));
    }
    RunConfig {
        seed,
        batch_size: 12,
        replications: 2,
        episodes: 30,
        policy,
        allocator: AllocatorParams {
            n_base: 4,
            n_rounds: 2,
            total_budget: 96,
            ..AllocatorParams::default()
        },
        learning_rate_toy: 0.15,
        success_target: Some(0.7),
        population: PopulationSpec::Explicit { prompts },
        ..RunConfig::default()
    }
}

#[test]
fn criterion_11_ablation_ordering_under_toy_learning() {
    let start = Instant::now();
    let arms = [
        Policy::Xrpo,
        Policy::XrpoNoIcl,
        Policy::XrpoNoSharpen,
        Policy::XrpoNoIclNoSharpen,
    ];
    let mut ordered = 0;
    let mut means = [0.0_f64; 4];
    for seed in 0..100_u64 {
        let mut m = [0.0_f64; 4];
        for (i, policy) in arms.iter().enumerate() {
            let out = run_experiment(&ablation_cfg(seed, *policy)).unwrap();
            m[i] = out.summary.rollouts_to_success_target.mean_rollouts_capped;
            means[i] += m[i] / 100.0;
        }
        // Full machinery first, both single ablations in the middle, the
        // double ablation last.
        if m[0] <= m[1] && m[0] <= m[2] && m[1] <= m[3] && m[2] <= m[3] {
            ordered += 1;
        }
    }
    assert!(ordered >= 80, "ordering held in only {ordered}/100 suites");
    println!(
        "criterion 11 PASS: ablation ordering held in {ordered}/100 suites \
         (mean capped rollouts to target: full {:.0}, no-seeding {:.0}, \
         no-sharpening {:.0}, neither {:.0}), {:?}",
        means[0], means[1], means[2], means[3],
        start.elapsed()
    );
}

fn xrpo_bin(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_xrpo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn xrpo");
    assert!(
        out.status.success(),
        "xrpo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn criterion_12_every_command_reruns_byte_identically() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let config_path = root.join("cfg.json");
    fs::write(
        &config_path,
        serde_json::json!({
            "seed": 9,
            "batch_size": 8,
            "replications": 2,
            "episodes": 2,
            "learning_rate_toy": 0.1,
            "success_target": 0.8,
            "allocator": {"n_base": 4, "n_rounds": 2, "total_budget": 64},
            "population": {"kind": "mixed", "size": 8, "frac_zero": 0.25, "icl_boost_zero": 0.3}
        })
        .to_string(),
    )
    .unwrap();

    // simulate twice into separate directories.
    for name in ["run_a", "run_b"] {
        xrpo_bin(
            &["simulate", "--config", config_path.to_str().unwrap(), "--output-dir", name],
            root,
        );
    }
    for file in ["manifest.json", "config.json", "metrics.json", "metrics.csv", "rollouts.jsonl"] {
        assert_eq!(
            fs::read(root.join("run_a").join(file)).unwrap(),
            fs::read(root.join("run_b").join(file)).unwrap(),
            "simulate artifact {file} differs across reruns"
        );
    }

    // allocate twice from the same stats.
    let stats = root.join("stats.jsonl");
    fs::write(
        &stats,
        "{\"prompt_id\":\"a\",\"n_q\":6,\"mean\":0.5,\"std\":0.5}\n\
         {\"prompt_id\":\"b\",\"n_q\":4,\"mean\":0.25,\"std\":0.43}\n\
         {\"prompt_id\":\"c\",\"n_q\":4,\"mean\":1.0,\"std\":0.0}\n",
    )
    .unwrap();
    let alloc_args = ["allocate", "--stats", "stats.jsonl", "--budget", "17"];
    assert_eq!(xrpo_bin(&alloc_args, root).stdout, xrpo_bin(&alloc_args, root).stdout);

    // advantage twice over the simulated log.
    let adv_args = ["advantage", "--log", "run_a/rollouts.jsonl"];
    assert_eq!(xrpo_bin(&adv_args, root).stdout, xrpo_bin(&adv_args, root).stdout);

    // corpus add into two fresh files, then audit and query.
    for name in ["c1.jsonl", "c2.jsonl"] {
        for (pid, problem) in [("a", "gcd of 12 and 18"), ("b", "sort the list")] {
            xrpo_bin(
                &[
                    "corpus", "add", "--corpus", name,
                    "--problem", problem, "--solution", "worked",
                    "--source-prompt", pid, "--dim", "64",
                ],
                root,
            );
        }
    }
    assert_eq!(
        fs::read(root.join("c1.jsonl")).unwrap(),
        fs::read(root.join("c2.jsonl")).unwrap(),
        "corpus files differ across identical add sequences"
    );
    let query_args = ["corpus", "query", "--corpus", "c1.jsonl", "--problem", "gcd of 9 and 12"];
    assert_eq!(xrpo_bin(&query_args, root).stdout, xrpo_bin(&query_args, root).stdout);
    let audit_args = ["corpus", "audit", "--corpus", "c1.jsonl"];
    assert_eq!(xrpo_bin(&audit_args, root).stdout, xrpo_bin(&audit_args, root).stdout);

    // report twice over both runs.
    let report_args = ["report", "--runs-dir", "."];
    assert_eq!(xrpo_bin(&report_args, root).stdout, xrpo_bin(&report_args, root).stdout);

    println!(
        "criterion 12 PASS: simulate, allocate, advantage, corpus, and report all rerun \
         byte-identically, {:?}",
        start.elapsed()
    );
}
