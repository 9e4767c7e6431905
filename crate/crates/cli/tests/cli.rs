use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use symmarl_cli::plots::{export_plots, read_metrics};
use symmarl_cli::verify::VerifyOptions;
use symmarl_cli::{cmd_verify, normalize, parse_config, seed_dir, CliError, CHECKPOINT_DIR, OUTPUT_ROOT_VAR, SUMMARY_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_symmarl");

fn config_text(arch: &str, seeds: &str, out: &str) -> String {
    format!(
        "env.name = navigation\nenv.num_agents = 3\narch.critic = {arch}\narch.actor = {arch}\nseeds = {seeds}\noutput.dir = {out}\n\
         training.episodes = 4\ntraining.eval_interval = 2\ntraining.eval_episodes = 3\ntraining.invariancy_samples = 3\n\
         training.batch_size = 8\ntraining.warmup_steps = 16\ntraining.update_every = 4\ntraining.segnn_hidden = 4x0e+2x1o\n\
         training.mlp_hidden = 8\n"
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn symmarl(root: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env(OUTPUT_ROOT_VAR, root)
        .env("RUST_LOG", "warn")
        .current_dir(root)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn train_writes_artifacts_under_the_output_root() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "exp.conf", &config_text("segnn", "0, 1, 2", "nav3"));
    let o = symmarl(root.path(), &["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = root.path().join("nav3");
    for seed in 0..3 {
        let d = seed_dir(&out, seed);
        assert!(d.join(CHECKPOINT_DIR).join("meta.json").is_file());
        assert_eq!(read_metrics(&d.join("metrics.csv")).unwrap().episodes, vec![2, 4]);
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["label"], "[SEGNN, SEGNN]");
    assert_eq!(summary["final_returns"].as_array().unwrap().len(), 3);
    assert!(summary["std_final_return"].as_f64().unwrap() >= 0.0);
    let stdout_summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stdout_summary["seeds"], summary["seeds"]);
}

#[test]
fn identical_configs_give_identical_metrics() {
    let root = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let cfg = write_config(root.path(), &format!("{name}.conf"), &config_text("segnn", "3", name));
        assert_eq!(symmarl(root.path(), &["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    }
    let read = |n: &str| std::fs::read(seed_dir(&root.path().join(n), 3).join("metrics.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn usage_errors_exit_with_one() {
    let root = tempfile::tempdir().unwrap();
    let text = config_text("segnn", "0", "x").replace("arch.actor = segnn\n", "");
    let cfg = write_config(root.path(), "bad.conf", &text);
    let o = symmarl(root.path(), &["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("arch.actor"));
    assert!(!root.path().join("x").exists());

    assert_eq!(symmarl(root.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(symmarl(root.path(), &["zero-shot", "--checkpoint", "missing", "--agents", "6"]).status.code(), Some(1));
    assert_eq!(symmarl(root.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes_and_catches_a_broken_reward() {
    let groups = cmd_verify(&VerifyOptions::default()).unwrap();
    assert_eq!(groups.len(), 3);
    for g in &groups {
        assert!(g.passed() && g.checks.iter().all(|c| c.count > 0), "{g:?}");
    }
    let err = cmd_verify(&VerifyOptions { perturb_reward: Some(0.5), seed: 0 }).unwrap_err();
    assert!(matches!(err, CliError::Verification(_)));
    assert_eq!(err.code(), 2);

    let root = tempfile::tempdir().unwrap();
    let o = symmarl(root.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS equivariance battery"));
    let o = symmarl(root.path(), &["verify", "--perturb-reward"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL value and policy invariance"));
}

#[test]
fn zero_shot_evaluate_transfer_and_plots() {
    let root = tempfile::tempdir().unwrap();
    for (arch, out) in [("segnn", "seg"), ("mlp", "mlp")] {
        let cfg = write_config(root.path(), &format!("{out}.conf"), &config_text(arch, "0, 1", out));
        assert_eq!(symmarl(root.path(), &["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    }
    let seg0 = seed_dir(&root.path().join("seg"), 0);
    let ckpt = seg0.join(CHECKPOINT_DIR);
    let ckpt_s = ckpt.to_str().unwrap();

    let o = symmarl(root.path(), &["zero-shot", "--checkpoint", ckpt_s, "--agents", "6", "--episodes", "4", "--reference", seg0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["num_agents"], 6);
    assert!(v["mean_return"].as_f64().unwrap().is_finite());
    assert!(v["normalized_score"].as_f64().unwrap().is_finite());

    let mlp_ckpt = seed_dir(&root.path().join("mlp"), 0).join(CHECKPOINT_DIR);
    let o = symmarl(root.path(), &["zero-shot", "--checkpoint", mlp_ckpt.to_str().unwrap(), "--agents", "6"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("architecture incompatible"));

    let o = symmarl(root.path(), &["evaluate", "--checkpoint", ckpt_s, "--episodes", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["actor_rotation_invariancy"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let bigger = config_text("segnn", "5", "transfer").replace("env.num_agents = 3", "env.num_agents = 4");
    let cfg = write_config(root.path(), "t.conf", &bigger);
    let o = symmarl(root.path(), &["transfer", "--checkpoint", ckpt_s, "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(seed_dir(&root.path().join("transfer"), 5).join("metrics.csv").is_file());

    let run = root.path().join("seg");
    let o = symmarl(root.path(), &["export-plots", "--run", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let curve = std::fs::read_to_string(run.join("plots/learning_curve.csv")).unwrap();
    assert!(curve.starts_with("episode,return_mean,return_std,"));
    assert_eq!(curve.lines().count(), 3);
    assert!(run.join("plots/invariancy.csv").is_file());

    // One seed: every std column is zero.
    let single = root.path().join("single");
    std::fs::create_dir_all(single.join("seed_0")).unwrap();
    std::fs::copy(seg0.join("metrics.csv"), single.join("seed_0/metrics.csv")).unwrap();
    export_plots(&single).unwrap();
    let text = std::fs::read_to_string(single.join("plots/learning_curve.csv")).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        for k in [2, 4, 6] {
            assert!(f[k] == "0" || f[k] == "NaN", "{line}");
        }
    }

    let empty = root.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(symmarl(root.path(), &["export-plots", "--run", empty.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn plot_aggregation_ignores_seed_order() {
    let root = tempfile::tempdir().unwrap();
    let rows = [
        "episode,return,critic_loss,actor_loss,rot_invariancy,transl_invariancy\n10,-3.25,0.5,0.1,1,1\n20,-1.5,0.25,0.2,1,1\n",
        "episode,return,critic_loss,actor_loss,rot_invariancy,transl_invariancy\n10,-7.125,0.5,0.3,0.5,1\n20,-2,0.125,0.1,1,0.75\n",
        "episode,return,critic_loss,actor_loss,rot_invariancy,transl_invariancy\n10,1e-3,0.2,0.3,0.9,1\n20,-9.5,0.1,0.2,0.8,1\n",
    ];
    let build = |name: &str, order: [usize; 3]| {
        let run = root.path().join(name);
        for (k, &i) in order.iter().enumerate() {
            std::fs::create_dir_all(run.join(format!("seed_{k}"))).unwrap();
            std::fs::write(run.join(format!("seed_{k}/metrics.csv")), rows[i]).unwrap();
        }
        export_plots(&run).unwrap();
        std::fs::read(run.join("plots/learning_curve.csv")).unwrap()
    };
    let a = build("a", [0, 1, 2]);
    assert_eq!(a, build("b", [2, 0, 1]));
    let text = String::from_utf8(a).unwrap();
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let returns = [-3.25, -7.125, 1e-3];
    let mean = returns.iter().sum::<f64>() / 3.0;
    let std = (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / 3.0).sqrt();
    assert!((first[1] - mean).abs() < 1e-12 && (first[2] - std).abs() < 1e-12);
}

#[test]
fn normalization_maps_reference_endpoints() {
    assert_eq!(normalize(-50.0, (-50.0, -30.0)), 0.0);
    assert_eq!(normalize(-30.0, (-50.0, -30.0)), 1.0);
    assert_eq!(normalize(-40.0, (-50.0, -30.0)), 0.5);
}

#[test]
fn config_paths_follow_the_output_root() {
    let c = parse_config(&config_text("mlp", "1", "runs/x")).unwrap();
    assert_eq!(c.output, PathBuf::from("runs/x"));
    assert_eq!(c.seeds, vec![1]);
}
