//! End-to-end runs of the `fop` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fop_cli::{pnm, posterior, report};
use fop_core::image::BinaryImage;

fn fop() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fop"));
    cmd.env_remove("FOP_SEED");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fop");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("spawn fop").status.code().unwrap_or(-1)
}

fn write_checker_pbm(path: &Path, size: usize) {
    let img = BinaryImage::from_fn(size, size, |i, j| (i / 2 + j / 2) % 2 == 0).unwrap();
    pnm::write_pbm(path, &img).unwrap();
}

#[test]
fn coarsen_writes_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pbm");
    write_checker_pbm(&input, 8);
    let out_dir = dir.path().join("pyr");
    run_ok(fop().args([
        "coarsen",
        "--input",
        input.to_str().unwrap(),
        "--levels",
        "4",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    let sizes: Vec<usize> = (0..4)
        .map(|k| {
            let img = pnm::read_pbm(&out_dir.join(format!("level_{k}.pbm"))).unwrap();
            assert_eq!(img.rows(), img.cols());
            img.rows()
        })
        .collect();
    assert_eq!(sizes, vec![8, 4, 2, 1]);
    assert!(out_dir.join("run.json").exists());

    // Requesting more levels than the image supports is a data error.
    assert_eq!(
        exit_code(fop().args([
            "coarsen",
            "--input",
            input.to_str().unwrap(),
            "--levels",
            "9",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ])),
        3
    );
}

#[test]
fn coarsen_single_level_copies_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pbm");
    write_checker_pbm(&input, 6);
    let out_dir = dir.path().join("pyr");
    run_ok(fop().args([
        "coarsen",
        "--input",
        input.to_str().unwrap(),
        "--levels",
        "1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(
        pnm::read_pbm(&out_dir.join("level_0.pbm")).unwrap(),
        pnm::read_pbm(&input).unwrap()
    );
}

#[test]
fn coarsen_dispatches_gray_to_average() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let img = fop_core::image::GrayImage::from_pixels(4, 4, 256, (0..16).map(|i| i * 16).collect())
        .unwrap();
    pnm::write_pgm(&input, &img).unwrap();
    let out_dir = dir.path().join("pyr");
    run_ok(fop().args([
        "coarsen",
        "--input",
        input.to_str().unwrap(),
        "--levels",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    let coarse = pnm::read_pgm(&out_dir.join("level_1.pgm")).unwrap();
    assert_eq!(coarse.get(0, 0), fop_core::pyramid::coarsen_avg(&img).get(0, 0));
}

fn synth_dataset(dir: &Path, count: usize, size: usize, seed: &str, extra: &[&str]) -> PathBuf {
    let out_dir = dir.join(format!("data_{seed}_{count}_{size}"));
    let mut args = vec![
        "synth".to_string(),
        "--kind".into(),
        "contours".into(),
        "--count".into(),
        count.to_string(),
        "--size".into(),
        size.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--out-dir".into(),
        out_dir.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run_ok(fop().args(&args));
    out_dir
}

#[test]
fn synth_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth_dataset(dir.path(), 3, 32, "5", &[]);
    assert!(a.join("manifest.txt").exists());
    assert!(a.join("run.json").exists());
    let entries = fop_cli::manifest::load_manifest(&a.join("manifest.txt")).unwrap();
    assert_eq!(entries.len(), 3);

    let b = dir.path().join("copy");
    fs::rename(&a, &b).unwrap();
    let c = synth_dataset(dir.path(), 3, 32, "5", &[]);
    for name in ["img000_mask.pbm", "img001_obs.pgm", "manifest.txt"] {
        assert_eq!(
            fs::read(b.join(name)).unwrap(),
            fs::read(c.join(name)).unwrap(),
            "file {name} differs between identical runs"
        );
    }
}

#[test]
fn synth_zero_noise_writes_class_means() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 1, 16, "9", &["--sigma-y", "0"]);
    let entries = fop_cli::manifest::load_manifest(&data.join("manifest.txt")).unwrap();
    let e = &entries[0];
    for i in 0..16 {
        for j in 0..16 {
            let expect = if e.mask.get(i, j) { 100 } else { 150 };
            assert_eq!(e.observation.get(i, j), expect);
        }
    }
}

#[test]
fn train_infer_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 2, 16, "11", &[]);
    let manifest = data.join("manifest.txt");
    let model = dir.path().join("m1.fop");
    run_ok(fop().args([
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--levels",
        "1",
        "--steps",
        "3",
        "--eta",
        "0.05",
        "--band-height",
        "2",
        "--proposals",
        "4",
        "--seed",
        "3",
        "--jobs",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]));
    assert!(model.exists());
    assert!(dir.path().join("m1.trace.csv").exists());
    assert!(dir.path().join("m1.run.json").exists());
    let loaded = fop_cli::modelfile::load_model(&model).unwrap();
    assert_eq!(loaded.model.levels(), 1);
    assert_eq!(loaded.lambda, Some(1e-3));

    let post_dir = dir.path().join("post");
    run_ok(fop().args([
        "infer",
        "--model",
        model.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        post_dir.to_str().unwrap(),
        "--burn-in",
        "3",
        "--sweeps",
        "6",
        "--band-height",
        "2",
        "--seed",
        "4",
        "--csv",
    ]));
    assert!(post_dir.join("img000_posterior.pgm").exists());
    assert!(post_dir.join("img000_posterior.csv").exists());
    let trace = fs::read_to_string(post_dir.join("img000_trace.csv")).unwrap();
    assert!(trace.starts_with("sweep,band_axis,accept_rate,energy\n"));
    assert_eq!(trace.lines().count(), 1 + 2 * 9);

    let pr = dir.path().join("pr.csv");
    run_ok(fop().args([
        "eval",
        "--posterior-dir",
        post_dir.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        pr.to_str().unwrap(),
    ]));
    let ap = report::read_pr_csv_ap(&pr).unwrap();
    assert!((0.0..=1.0).contains(&ap));
}

#[test]
fn perfect_posteriors_score_ap_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 2, 16, "13", &[]);
    let manifest = data.join("manifest.txt");
    let entries = fop_cli::manifest::load_manifest(&manifest).unwrap();
    let post_dir = dir.path().join("perfect");
    fs::create_dir_all(&post_dir).unwrap();
    for e in &entries {
        let probs = e.mask.bits().iter().map(|&b| b as f64).collect();
        let map = fop_core::eval::PosteriorMap::new(e.mask.rows(), e.mask.cols(), probs, 0).unwrap();
        pnm::write_pgm(
            &post_dir.join(format!("{}_posterior.pgm", e.name)),
            &posterior::to_gray(&map),
        )
        .unwrap();
    }
    let out = dir.path().join("pr.csv");
    run_ok(fop().args([
        "eval",
        "--posterior-dir",
        post_dir.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let ap = report::read_pr_csv_ap(&out).unwrap();
    assert!((ap - 1.0).abs() < 1e-9, "AP {ap}");
}

#[test]
fn eval_multi_dir_emits_one_csv_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 1, 16, "15", &[]);
    let manifest = data.join("manifest.txt");
    let entries = fop_cli::manifest::load_manifest(&manifest).unwrap();
    for sub in ["a", "b"] {
        let d = dir.path().join(sub);
        fs::create_dir_all(&d).unwrap();
        for e in &entries {
            let probs = vec![0.5; e.mask.rows() * e.mask.cols()];
            let map = fop_core::eval::PosteriorMap::new(e.mask.rows(), e.mask.cols(), probs, 0).unwrap();
            pnm::write_pgm(
                &d.join(format!("{}_posterior.pgm", e.name)),
                &posterior::to_gray(&map),
            )
            .unwrap();
        }
    }
    let out = dir.path().join("pr.csv");
    run_ok(fop().args([
        "eval",
        "--posterior-dir",
        dir.path().join("a").to_str().unwrap(),
        "--posterior-dir",
        dir.path().join("b").to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(dir.path().join("pr_a.csv").exists());
    assert!(dir.path().join("pr_b.csv").exists());
}

#[test]
fn grid_test_passes_on_enumerable_input() {
    let dir = tempfile::tempdir().unwrap();
    // Zero model: inferred marginals must sit near 0.5 = enumeration.
    let model_path = dir.path().join("zero.fop");
    fop_cli::modelfile::save_model(&model_path, &fop_core::model::FoPModel::zeros(1, 256, true), None, None)
        .unwrap();
    let y = fop_core::image::GrayImage::from_pixels(4, 4, 256, vec![120; 16]).unwrap();
    let input = dir.path().join("obs.pgm");
    pnm::write_pgm(&input, &y).unwrap();
    let out_dir = dir.path().join("post");
    let out = run_ok(fop().args([
        "infer",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--burn-in",
        "10",
        "--sweeps",
        "4000",
        "--band-height",
        "2",
        "--seed",
        "1",
        "--grid-test",
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("grid-test obs"), "stdout: {stdout}");
}

#[test]
fn sample_prior_is_seeded_and_near_half_density() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("zero.fop");
    fop_cli::modelfile::save_model(&model_path, &fop_core::model::FoPModel::zeros(1, 2, true), None, None)
        .unwrap();
    let out1 = dir.path().join("s1.pbm");
    let out2 = dir.path().join("s2.pbm");
    for out in [&out1, &out2] {
        run_ok(fop().args([
            "sample-prior",
            "--model",
            model_path.to_str().unwrap(),
            "--rows",
            "24",
            "--cols",
            "24",
            "--sweeps",
            "2",
            "--seed",
            "21",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
    let img = pnm::read_pbm(&out1).unwrap();
    let frac = img.on_count() as f64 / 576.0;
    assert!((frac - 0.5).abs() < 0.1, "density {frac}");
}

#[test]
fn env_seed_matches_explicit_flag() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("zero.fop");
    fop_cli::modelfile::save_model(&model_path, &fop_core::model::FoPModel::zeros(1, 2, true), None, None)
        .unwrap();
    let flag_out = dir.path().join("flag.pbm");
    run_ok(fop().args([
        "sample-prior",
        "--model",
        model_path.to_str().unwrap(),
        "--rows",
        "12",
        "--cols",
        "12",
        "--sweeps",
        "1",
        "--seed",
        "77",
        "--out",
        flag_out.to_str().unwrap(),
    ]));
    let env_out = dir.path().join("env.pbm");
    run_ok(
        fop()
            .env("FOP_SEED", "77")
            .args([
                "sample-prior",
                "--model",
                model_path.to_str().unwrap(),
                "--rows",
                "12",
                "--cols",
                "12",
                "--sweeps",
                "1",
                "--out",
                env_out.to_str().unwrap(),
            ]),
    );
    assert_eq!(fs::read(&flag_out).unwrap(), fs::read(&env_out).unwrap());

    // And --seed beats the environment.
    let both_out = dir.path().join("both.pbm");
    run_ok(
        fop()
            .env("FOP_SEED", "123456")
            .args([
                "sample-prior",
                "--model",
                model_path.to_str().unwrap(),
                "--rows",
                "12",
                "--cols",
                "12",
                "--sweeps",
                "1",
                "--seed",
                "77",
                "--out",
                both_out.to_str().unwrap(),
            ]),
    );
    assert_eq!(fs::read(&flag_out).unwrap(), fs::read(&both_out).unwrap());
}

#[test]
fn resume_from_checkpoint_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 2, 16, "17", &[]);
    let manifest = data.join("manifest.txt");
    let ck_model = dir.path().join("ck.fop");
    run_ok(fop().args([
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--levels",
        "1",
        "--steps",
        "4",
        "--eta",
        "0.05",
        "--band-height",
        "2",
        "--proposals",
        "4",
        "--checkpoint-every",
        "2",
        "--seed",
        "19",
        "--out",
        ck_model.to_str().unwrap(),
    ]));
    let checkpoint = dir.path().join("ck.step2.fop");
    assert!(checkpoint.exists());
    assert_eq!(
        fop_cli::modelfile::load_model(&checkpoint).unwrap().step,
        Some(2)
    );

    let resume = |out: &Path| {
        run_ok(fop().args([
            "train",
            "--manifest",
            manifest.to_str().unwrap(),
            "--levels",
            "1",
            "--steps",
            "4",
            "--eta",
            "0.05",
            "--band-height",
            "2",
            "--proposals",
            "4",
            "--resume",
            checkpoint.to_str().unwrap(),
            "--seed",
            "19",
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let r1 = dir.path().join("r1.fop");
    let r2 = dir.path().join("r2.fop");
    resume(&r1);
    resume(&r2);
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
}

#[test]
fn init_model_embeds_into_larger_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_dataset(dir.path(), 2, 16, "23", &[]);
    let manifest = data.join("manifest.txt");
    let m1 = dir.path().join("m1.fop");
    run_ok(fop().args([
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--levels",
        "1",
        "--steps",
        "2",
        "--band-height",
        "2",
        "--proposals",
        "2",
        "--seed",
        "25",
        "--out",
        m1.to_str().unwrap(),
    ]));
    // Zero steps: the output is exactly the initialized vector, i.e. the
    // 1-level model embedded in a 2-level layout with zero upper blocks.
    let m2 = dir.path().join("m2.fop");
    run_ok(fop().args([
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--levels",
        "2",
        "--steps",
        "0",
        "--init-model",
        m1.to_str().unwrap(),
        "--seed",
        "25",
        "--out",
        m2.to_str().unwrap(),
    ]));
    let small = fop_cli::modelfile::load_model(&m1).unwrap().model;
    let big = fop_cli::modelfile::load_model(&m2).unwrap().model;
    assert_eq!(big.levels(), 2);
    assert_eq!(big.potential(0).values(), small.potential(0).values());
    assert_eq!(big.data_cost(0).values(), small.data_cost(0).values());
    assert!(big.potential(1).values().iter().all(|&v| v == 0.0));

    // A 2-level init cannot embed into a 1-level layout.
    assert_eq!(
        exit_code(fop().args([
            "train",
            "--manifest",
            manifest.to_str().unwrap(),
            "--levels",
            "1",
            "--steps",
            "1",
            "--init-model",
            m2.to_str().unwrap(),
            "--out",
            dir.path().join("bad.fop").to_str().unwrap(),
        ])),
        2
    );
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: clap usage error.
    assert_eq!(exit_code(fop().args(["coarsen", "--nonsense"])), 2);
    // Missing input file: data error.
    assert_eq!(
        exit_code(fop().args([
            "coarsen",
            "--input",
            dir.path().join("absent.pbm").to_str().unwrap(),
            "--levels",
            "2",
            "--out-dir",
            dir.path().join("out").to_str().unwrap(),
        ])),
        3
    );
    // Mutually exclusive inference sources: usage error from the command.
    let model_path = dir.path().join("zero.fop");
    fop_cli::modelfile::save_model(&model_path, &fop_core::model::FoPModel::zeros(1, 2, true), None, None)
        .unwrap();
    assert_eq!(
        exit_code(fop().args([
            "infer",
            "--model",
            model_path.to_str().unwrap(),
            "--out-dir",
            dir.path().join("o").to_str().unwrap(),
        ])),
        2
    );
}
