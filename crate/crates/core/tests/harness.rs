use std::fs;
use std::path::Path;
use std::process::Command;

use ddpg_racer::harness::{
    evaluate, train, Checkpoint, TrainConfig, Trainer, DIAGNOSTIC_CHECKPOINT, FINAL_CHECKPOINT,
    METRICS_FILE, METRICS_HEADER,
};
use ddpg_racer::sim::builtin;
use ddpg_racer::Error;

fn small_config(dir: &Path) -> TrainConfig {
    TrainConfig {
        track: "oval".into(),
        episodes: 3,
        max_steps: 150,
        buffer_capacity: 500,
        batch_size: 8,
        warmup: 40,
        checkpoint_interval: 2,
        seed: 5,
        output_dir: dir.to_path_buf(),
        actor_hidden: vec![12, 10],
        critic_state_hidden: 12,
        critic_merge_width: 10,
        critic_hidden: vec![8],
        ..TrainConfig::default()
    }
}

fn params(c: &Checkpoint) -> Vec<f64> {
    let a = &c.agent;
    a.actor
        .params()
        .chain(a.critic.params())
        .chain(a.target_actor.params())
        .chain(a.target_critic.params())
        .collect()
}

#[test]
fn zero_episodes_writes_header_and_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        episodes: 0,
        ..small_config(dir.path())
    };
    let initial = Trainer::new(cfg.clone()).unwrap().checkpoint();
    let out = train(Trainer::new(cfg).unwrap(), |_| {}).unwrap();
    assert_eq!(fs::read_to_string(&out.metrics).unwrap(), format!("{METRICS_HEADER}\n"));
    assert_eq!(fs::read(&out.final_checkpoint).unwrap(), initial.encode());
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 2);
}

#[test]
fn metrics_header_is_exact() {
    assert_eq!(
        METRICS_HEADER,
        "episode,steps,total_reward,total_distance_m,mean_speed_kmh,mean_step_gain,\
         var_dist_center_m2,epsilon"
    );
}

#[test]
fn warmup_beyond_run_leaves_networks_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        warmup: 1_000_000,
        ..small_config(dir.path())
    };
    let initial = Trainer::new(cfg.clone()).unwrap().checkpoint();
    let out = train(Trainer::new(cfg).unwrap(), |_| {}).unwrap();
    let last = Checkpoint::load(&out.final_checkpoint).unwrap();
    assert_eq!(params(&last), params(&initial));
    assert_eq!(last.agent.actor_optimizer, initial.agent.actor_optimizer);
    assert_eq!(out.records.len(), 3);
}

#[test]
fn identical_runs_produce_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    train(Trainer::new(small_config(a.path())).unwrap(), |_| {}).unwrap();
    train(Trainer::new(small_config(b.path())).unwrap(), |_| {}).unwrap();
    for f in [METRICS_FILE, FINAL_CHECKPOINT, "checkpoint_000002.ddpg"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let rows = fs::read_to_string(a.path().join(METRICS_FILE)).unwrap();
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn different_seeds_diverge() {
    let a = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        episodes: 1,
        ..small_config(a.path())
    };
    let x = Trainer::new(cfg.clone()).unwrap().checkpoint().encode();
    let y = Trainer::new(TrainConfig { seed: 6, ..cfg }).unwrap().checkpoint().encode();
    assert_ne!(x, y);
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(Trainer::new(small_config(dir.path())).unwrap(), |_| {}).unwrap();
    let bytes = fs::read(&out.final_checkpoint).unwrap();
    let ck = Checkpoint::decode(&bytes).unwrap();
    assert!(!ck.buffer.is_empty());
    assert_eq!(ck.encode(), bytes);
    let again = dir.path().join("again.ddpg");
    ck.save(&again).unwrap();
    assert_eq!(Checkpoint::load(&again).unwrap(), ck);
}

#[test]
fn corrupt_checkpoints_name_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        episodes: 1,
        ..small_config(dir.path())
    };
    let bytes = train(Trainer::new(cfg).unwrap(), |_| {})
        .map(|o| fs::read(o.final_checkpoint).unwrap())
        .unwrap();
    let field = |b: &[u8]| match Checkpoint::decode(b) {
        Err(Error::Format { field, .. }) => field,
        other => panic!("expected a format error, got {other:?}"),
    };
    for cut in [0, 3, 4, 7, 9, 100, bytes.len() / 2, bytes.len() - 1] {
        field(&bytes[..cut]);
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert_eq!(field(&bad), "magic");
    let mut bad = bytes.clone();
    bad[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert_eq!(field(&bad), "version");
    let mut bad = bytes.clone();
    bad.push(0);
    assert_eq!(field(&bad), "trailer");
    assert_eq!(field(&bytes[..bytes.len() - 1]), "replay.transitions");
}

#[test]
fn resuming_at_an_episode_boundary_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        episodes: 4,
        ..small_config(dir.path())
    };
    let mut straight = Trainer::new(cfg.clone()).unwrap();
    let mut rows = Vec::new();
    for _ in 0..4 {
        rows.push(straight.run_episode().unwrap());
    }

    for split in 1..4 {
        let mut first = Trainer::new(cfg.clone()).unwrap();
        let mut resumed_rows = Vec::new();
        for _ in 0..split {
            resumed_rows.push(first.run_episode().unwrap());
        }
        let restored = Checkpoint::decode(&first.checkpoint().encode()).unwrap();
        let mut second = Trainer::resume(restored, cfg.clone()).unwrap();
        for _ in split..4 {
            resumed_rows.push(second.run_episode().unwrap());
        }
        assert_eq!(resumed_rows, rows, "split at {split}");
        assert_eq!(second.checkpoint().encode(), straight.checkpoint().encode());
    }
}

#[test]
fn resume_through_files_appends_to_metrics() {
    let whole = tempfile::tempdir().unwrap();
    let parts = tempfile::tempdir().unwrap();
    let cfg = small_config(whole.path());
    train(Trainer::new(cfg.clone()).unwrap(), |_| {}).unwrap();

    let short = TrainConfig {
        episodes: 2,
        output_dir: parts.path().to_path_buf(),
        ..cfg.clone()
    };
    let out = train(Trainer::new(short).unwrap(), |_| {}).unwrap();
    let ck = Checkpoint::load(&out.final_checkpoint).unwrap();
    let rest = TrainConfig {
        output_dir: parts.path().to_path_buf(),
        ..cfg
    };
    train(Trainer::resume(ck, rest).unwrap(), |_| {}).unwrap();
    for f in [METRICS_FILE, FINAL_CHECKPOINT] {
        assert_eq!(
            fs::read(whole.path().join(f)).unwrap(),
            fs::read(parts.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn resume_rejects_a_different_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let ck = Trainer::new(cfg.clone()).unwrap().checkpoint();
    let wider = TrainConfig {
        actor_hidden: vec![12, 11],
        ..cfg
    };
    assert!(matches!(Trainer::resume(ck, wider), Err(Error::Config(_))));
}

#[test]
fn training_without_updates_equals_noisy_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut trainer = Trainer::new(cfg).unwrap();
    trainer.set_updates_enabled(false);
    let agent = trainer.agent().clone();
    let mut exploration = trainer.exploration().clone();
    let track = trainer.track().clone();
    let sim = *trainer.sim_config();

    let trained: Vec<_> = (0..3).map(|_| trainer.run_episode().unwrap()).collect();
    let evaluated = evaluate(&agent, &track, &sim, 3, Some(&mut exploration)).unwrap();
    assert_eq!(trained, evaluated);
    assert_eq!(trainer.agent(), &agent);
    assert_eq!(trainer.exploration(), &exploration);
}

#[test]
fn greedy_evaluation_is_repeatable_and_untrained_agent_goes_nowhere() {
    let dir = tempfile::tempdir().unwrap();
    let trainer = Trainer::new(TrainConfig {
        actor_hidden: vec![300, 600],
        critic_state_hidden: 300,
        critic_merge_width: 600,
        critic_hidden: vec![600],
        max_steps: 300,
        ..small_config(dir.path())
    })
    .unwrap();
    let t = builtin("straight").unwrap();
    let a = evaluate(trainer.agent(), &t, trainer.sim_config(), 2, None).unwrap();
    let b = evaluate(trainer.agent(), &t, trainer.sim_config(), 2, None).unwrap();
    assert_eq!(a, b);
    for r in &a {
        assert_eq!(r.epsilon, 0.0);
        assert!(r.metrics.episode_steps < 300 || r.metrics.mean_step_gain.abs() < 1.0, "{r:?}");
    }
}

#[test]
fn non_finite_loss_aborts_with_diagnostic_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        reward: ddpg_racer::sim::RewardWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma_w: 1e300,
        },
        ..small_config(dir.path())
    };
    let err = train(Trainer::new(cfg).unwrap(), |_| {}).unwrap_err();
    assert!(matches!(err, Error::Training { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
    let diag = Checkpoint::load(&dir.path().join(DIAGNOSTIC_CHECKPOINT)).unwrap();
    assert!(diag.total_steps > 0);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ddpg-racer"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (code, stdout, _) = cli(&["tracks", "list"]);
    assert_eq!(code, 0);
    for name in ["straight", "oval", "scurve"] {
        assert!(stdout.contains(name));
    }
    assert_eq!(cli(&["--help"]).0, 0);
    assert_eq!(cli(&[]).0, 1);
    assert_eq!(cli(&["train"]).0, 1);
    assert_eq!(cli(&["eval", "--checkpoint", "x"]).0, 1);

    let bad = d.join("bad.cfg");
    fs::write(&bad, "learning_rate = 0.1\n").unwrap();
    assert_eq!(cli(&["train", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(cli(&["train", "--config", d.join("missing.cfg").to_str().unwrap()]).0, 2);

    let cfg = small_config(&d.join("ignored"));
    let good = d.join("good.cfg");
    fs::write(&good, TrainConfig { episodes: 1, ..cfg }.to_text()).unwrap();
    let run = d.join("run");
    let (code, _, err) = cli(&[
        "train",
        "--config",
        good.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        run.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let ck = run.join(FINAL_CHECKPOINT);
    assert_eq!(Checkpoint::load(&ck).unwrap().config.seed, 9);

    let ev = d.join("ev");
    let (code, _, err) = cli(&[
        "eval",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--track",
        "scurve",
        "--episodes",
        "2",
        "--out",
        ev.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(ev.join("eval_metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);
    assert_eq!(text.lines().count(), 3);

    let junk = d.join("junk.ddpg");
    fs::write(&junk, b"DDPG\x01").unwrap();
    let args = ["eval", "--checkpoint", junk.to_str().unwrap(), "--track", "oval", "--episodes", "1"];
    assert_eq!(cli(&args).0, 3);
    let args = ["eval", "--checkpoint", ck.to_str().unwrap(), "--track", "nowhere", "--episodes", "1"];
    assert_eq!(cli(&args).0, 2);
}
