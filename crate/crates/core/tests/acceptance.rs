//! Exit-gate checks. Prints one PASS/FAIL line per criterion and exits with
//! a non-zero status if any criterion fails.
//!
//! Criteria can be selected by number: `cargo test --test acceptance -- 2 7`.

use std::f64::consts::{E, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use halu_core::dataset::{denormalize, normalize, Dataset, ScanPair};
use halu_core::model::{self, gradient_check_model, Autoencoder, AutoencoderConfig, TrainingMeta};
use halu_core::neuralcore::{
    gamma_scale_forward, gradient_check, Batch3, GradCheckConfig, LayerKind,
};
use halu_core::optim::{rmsle, AdamConfig};
use halu_core::simulator::{
    cast_ray, generate_dataset, generate_layout, ground_truth_scan, laser_scan, LaserSpec,
    Obstacle, Pose, Scene, SceneKind, Vec2,
};
use halu_core::trainer::{
    emit_report, evaluate, run_ablation_with_progress, threads_from_env, train, AblationEntry,
    AblationGrid, AblationReport, AblationSetup, ConfigResult, ReportFormat, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{march, random_scene, FULL, MARCH_TOL};

// Criterion 1
const GRAD_TRIALS: usize = 10;
const GRAD_TOLERANCE: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
const GRAD_BUDGET_S: f64 = 60.0;
// Criterion 2
const CLOSED_FORM_TOL: f64 = 1e-12;
// Criterion 3
const GEOMETRY_SCENES: usize = 100;
const GEOMETRY_RAYS_PER_SCENE: usize = 100;
const GEOMETRY_BUDGET_S: f64 = 30.0;
// Criterion 4
const FUSION_PAIRS: usize = 2000;
// Criterion 5
const OVERFIT_PAIRS: usize = 32;
const OVERFIT_EPOCHS: usize = 2000;
const OVERFIT_LR: f64 = 1e-2;
const OVERFIT_TARGET: f64 = 0.01;
const OVERFIT_BUDGET_S: f64 = 300.0;
// Criterion 6
const ABLATION_TRAIN: usize = 2000;
const ABLATION_TEST: usize = 500;
const ABLATION_EPOCHS: usize = 200;
const ABLATION_REPEATS: usize = 5;
// Criterion 7
const PUBLISHED_BASELINE_MEAN: f64 = 2.865e-2;
const PUBLISHED_BASELINE_STD: f64 = 0.31e-3;
const PUBLISHED_NO_SKIP_MEAN: f64 = 3.059e-2;
const PUBLISHED_NO_SKIP_STD: f64 = 1.45e-3;
const PUBLISHED_NO_SKIP_DELTA_PCT: f64 = 6.79;
const DELTA_TOL_PP: f64 = 0.01;
// Criterion 8
const WIDE_SCAN: usize = 720;
// Criterion 9
const NORMALIZE_TOL: f64 = 1e-15;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn synthetic(n: usize, seed: u64) -> Dataset {
    let pairs =
        generate_dataset(n, &SceneKind::ALL, &LaserSpec::default(), seed).expect("generator");
    Dataset::from_pairs(pairs, 30.0, format!("synthetic, seed {seed}")).expect("valid pairs")
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let cfg = GradCheckConfig {
        trials: GRAD_TRIALS,
        step: GRAD_STEP,
        tolerance: GRAD_TOLERANCE,
        seed: 2024,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in LayerKind::ALL {
        let r = gradient_check(kind, &cfg).map_err(|e| e.to_string())?;
        ok &= r.passed();
        parts.push(format!("{kind} {:.1e}", r.worst()));
    }
    let r = gradient_check_model(&cfg).map_err(|e| e.to_string())?;
    ok &= r.passed();
    parts.push(format!("model {:.1e}", r.worst()));
    let secs = start.elapsed().as_secs_f64();
    check(
        ok && secs < GRAD_BUDGET_S,
        format!(
            "worst rel. error {} (< {GRAD_TOLERANCE:e}); {secs:.1} s",
            parts.join(", ")
        ),
    )
}

fn closed_forms() -> Outcome {
    let r = rmsle(&[E - 1.0], &[0.0]).map_err(|e| e.to_string())?;
    let half = Batch3::new(1, 1, 1, vec![0.5]).unwrap();
    let g = gamma_scale_forward(&half, 2.0, 30.0)
        .map_err(|e| e.to_string())?
        .data()[0];
    let us: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let lin = gamma_scale_forward(&Batch3::new(1, 1, us.len(), us.clone()).unwrap(), 1.0, 30.0)
        .map_err(|e| e.to_string())?;
    let dev = lin
        .data()
        .iter()
        .zip(&us)
        .map(|(y, u)| (y - 30.0 * u).abs())
        .fold(0.0, f64::max);
    check(
        (r - 1.0).abs() <= CLOSED_FORM_TOL && g == 7.5 && dev < CLOSED_FORM_TOL,
        format!(
            "rmsle = 1 {:+.1e}; head(0.5, γ=2) = {g}; γ=1 max deviation {dev:.1e}",
            r - 1.0
        ),
    )
}

fn geometry() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0_f64;
    for _ in 0..GEOMETRY_SCENES {
        let scene = random_scene(&mut rng, 20);
        for _ in 0..GEOMETRY_RAYS_PER_SCENE {
            let origin = Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
            let dir = Vec2::from_angle(rng.random_range(0.0..TAU));
            let a = cast_ray(&scene, origin, dir, 30.0, |_| true);
            worst = worst.max((a - march(&scene, origin, dir, 30.0)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= MARCH_TOL && secs < GEOMETRY_BUDGET_S,
        format!(
            "{} rays, worst |analytic − marched| = {:.2} mm; {secs:.1} s",
            GEOMETRY_SCENES * GEOMETRY_RAYS_PER_SCENE,
            worst * 1e3
        ),
    )
}

fn ground_truth_semantics() -> Outcome {
    let back = Obstacle::wall(
        "wall",
        Vec2::new(6.0, -20.0),
        Vec2::new(6.0, 20.0),
        FULL,
        true,
    );
    let mut table = vec![
        back.clone(),
        Obstacle::rect(
            "tabletop",
            Vec2::new(3.0, 0.0),
            Vec2::new(0.4, 0.8),
            0.0,
            [0.70, 0.75],
            true,
        ),
    ];
    for (x, y) in [(2.65, -0.75), (3.35, -0.75), (3.35, 0.75), (2.65, 0.75)] {
        table.push(Obstacle::rect(
            "leg",
            Vec2::new(x, y),
            Vec2::new(0.02, 0.02),
            0.0,
            [0.0, 0.75],
            true,
        ));
    }
    let glass = vec![
        back,
        Obstacle::wall(
            "glass",
            Vec2::new(2.0, -20.0),
            Vec2::new(2.0, 20.0),
            FULL,
            false,
        ),
    ];
    let spec = LaserSpec::default().with_pose(Pose::new(0.0, 0.0, 0.0));
    // Central ray: passes between the front legs, under the tabletop.
    let (tx, ty) = (
        laser_scan(&Scene::new(table.clone()), &spec),
        ground_truth_scan(&Scene::new(table), &spec),
    );
    let (gx, gy) = (
        laser_scan(&Scene::new(glass.clone()), &spec),
        ground_truth_scan(&Scene::new(glass), &spec),
    );
    let mid = spec.n_rays / 2;
    let table_ok = ty[mid] < 2.7 && tx[mid] > 5.9;
    let glass_ok =
        gy.iter().all(|&d| d < 2.0 / (PI / 4.0).cos() + 1e-9) && gx.iter().all(|&d| d > 5.9);

    let pairs = generate_dataset(FUSION_PAIRS, &SceneKind::ALL, &LaserSpec::default(), 404)
        .map_err(|e| e.to_string())?;
    let ordered = pairs
        .iter()
        .filter(|p| p.x.iter().zip(&p.y).all(|(x, y)| y <= x))
        .count();
    check(
        table_ok && glass_ok && ordered == pairs.len(),
        format!(
            "table: laser {:.2} m vs truth {:.2} m; glass: laser ≥ {:.2} m vs truth ≤ {:.2} m; y ≤ x in {ordered}/{} pairs",
            tx[mid],
            ty[mid],
            gx.iter().cloned().fold(f64::INFINITY, f64::min),
            gy.iter().cloned().fold(0.0, f64::max),
            pairs.len()
        ),
    )
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let data = synthetic(OVERFIT_PAIRS, 2);
    let mut m = Autoencoder::build(AutoencoderConfig::default(), 0).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: OVERFIT_EPOCHS,
        noise_sigma: 0.0,
        flip: false,
        adam: AdamConfig {
            learning_rate: OVERFIT_LR,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    train(&mut m, &data, &cfg).map_err(|e| e.to_string())?;
    let score = evaluate(&m, &data).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        score < OVERFIT_TARGET && secs < OVERFIT_BUDGET_S,
        format!("train RMSLE {score:.5} after {OVERFIT_EPOCHS} epochs (< {OVERFIT_TARGET}); {secs:.1} s"),
    )
}

fn ablation() -> Outcome {
    let start = Instant::now();
    let train_set = synthetic(ABLATION_TRAIN, 1000);
    let test_set = synthetic(ABLATION_TEST, 2000);
    let mut grid = AblationGrid::reference_grid();
    grid.repeats = ABLATION_REPEATS;
    let setup = AblationSetup {
        model: AutoencoderConfig::default(),
        train: TrainConfig {
            epochs: ABLATION_EPOCHS,
            ..TrainConfig::default()
        },
        threads: threads_from_env(),
    };
    let report = run_ablation_with_progress(&grid, &setup, &train_set, &test_set, 0, |r| {
        let res = r
            .result
            .as_ref()
            .map_or_else(|e| format!("error: {e}"), |v| format!("{v:.5}"));
        eprintln!(
            "  ablation n. {} repeat {}: {res} ({:.0} s)",
            r.config, r.repeat, r.seconds
        );
    })
    .map_err(|e| e.to_string())?;
    let md = emit_report(&report, ReportFormat::Markdown);
    eprintln!("{md}");
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ablation");
    let _ = std::fs::create_dir_all(&out);
    let _ = std::fs::write(out.join("report.md"), &md);
    let _ = std::fs::write(
        out.join("report.json"),
        emit_report(&report, ReportFormat::Json),
    );

    if let Some(r) = report.rows.iter().find(|r| r.failed()) {
        return Err(format!(
            "n. {} failed: {}",
            r.index,
            r.failure.as_deref().unwrap_or("")
        ));
    }
    let mean = |i: usize| report.rows[i].mean.expect("finished");
    let std = |i: usize| report.rows[i].std.expect("finished");
    let a = mean(1) > mean(0);
    let b = mean(0) <= mean(4);
    let c = std(0) <= std(2);
    let worst = (0..report.rows.len())
        .max_by(|&i, &j| mean(i).total_cmp(&mean(j)))
        .unwrap();
    let d = worst == 6;
    let mark = |ok: bool| if ok { "ok" } else { "NO" };
    check(
        a && b && c && d,
        format!(
            "(a) no skip worse {} {:+.2}%; (b) γ=2 ≤ γ=1 {} {:+.2}%; (c) noise std ≤ no-noise std {} ({:.2e} vs {:.2e}); (d) all-off worst {} (worst is n. {worst}); {:.0} s",
            mark(a),
            report.rows[1].rel_mean_pct.unwrap_or(f64::NAN),
            mark(b),
            report.rows[4].rel_mean_pct.unwrap_or(f64::NAN),
            mark(c),
            std(0),
            std(2),
            mark(d),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn published_delta() -> Outcome {
    let report = AblationReport {
        baseline: 0,
        repeats: 5,
        base_seed: 0,
        rows: vec![
            ConfigResult::from_stats(
                0,
                AblationEntry::new(true, 2.0, 0.02),
                PUBLISHED_BASELINE_MEAN,
                PUBLISHED_BASELINE_STD,
            ),
            ConfigResult::from_stats(
                1,
                AblationEntry::new(false, 2.0, 0.02),
                PUBLISHED_NO_SKIP_MEAN,
                PUBLISHED_NO_SKIP_STD,
            ),
        ],
    }
    .with_relative();
    let md = emit_report(&report, ReportFormat::Markdown);
    let row = md
        .lines()
        .find(|l| l.starts_with("| 1 |"))
        .ok_or("no row 1 in the markdown report")?;
    let cell = row.split('|').map(str::trim).nth(7).ok_or("short row")?;
    let printed: f64 = cell
        .trim_end_matches('%')
        .parse()
        .map_err(|_| format!("unparsable delta cell '{cell}'"))?;
    let diff = (printed - PUBLISHED_NO_SKIP_DELTA_PCT).abs();
    check(
        diff <= DELTA_TOL_PP + 1e-9,
        format!(
            "report prints {cell} for {PUBLISHED_NO_SKIP_MEAN:e} vs {PUBLISHED_BASELINE_MEAN:e}; expected +{PUBLISHED_NO_SKIP_DELTA_PCT}% ± {DELTA_TOL_PP} pp (off by {diff:.3} pp)"
        ),
    )
}

fn chunked() -> Outcome {
    let mut m = Autoencoder::build(AutoencoderConfig::default(), 8).map_err(|e| e.to_string())?;
    let quick = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    train(&mut m, &synthetic(256, 5), &quick).map_err(|e| e.to_string())?;
    let layout = generate_layout(SceneKind::Mixed, 77);
    let pose = layout
        .sample_pose(&mut ChaCha8Rng::seed_from_u64(1), TAU)
        .ok_or("no pose")?;
    let spec = LaserSpec {
        n_rays: WIDE_SCAN,
        fov: TAU,
        ..LaserSpec::default()
    }
    .with_pose(pose);
    let scan = laser_scan(&layout.scene, &spec);
    let out = m.infer_chunked(&scan).map_err(|e| e.to_string())?;
    let n = m.config().n_points;
    let mut identical = 0;
    for (k, window) in scan.chunks_exact(n).enumerate() {
        let alone = m.predict_scan(window).map_err(|e| e.to_string())?;
        if alone
            .iter()
            .zip(&out[k * n..(k + 1) * n])
            .all(|(a, b)| a.to_bits() == b.to_bits())
        {
            identical += 1;
        }
    }
    let full = WIDE_SCAN / n;
    let in_range = out.iter().all(|v| (0.0..=30.0).contains(v));
    check(
        out.len() == WIDE_SCAN && identical == full && in_range,
        format!(
            "{} → {} readings; {identical}/{full} full windows bit-identical; range [{:.3}, {:.3}] m",
            scan.len(),
            out.len(),
            out.iter().cloned().fold(f64::INFINITY, f64::min),
            out.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = synthetic(64, 9);
    let mut m = Autoencoder::build(AutoencoderConfig::default(), 4).map_err(|e| e.to_string())?;
    let h = train(
        &mut m,
        &data,
        &TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let ckpt = dir.path().join("model.halu");
    model::save(&m, &TrainingMeta::from_history(2, 0, &h.losses), &ckpt)
        .map_err(|e| e.to_string())?;
    let (loaded, _) = model::load(&ckpt).map_err(|e| e.to_string())?;
    let xs: Vec<&[f64]> = data.pairs.iter().map(|p| p.x.as_slice()).collect();
    let batch = Batch3::from_scans(&xs).unwrap();
    let before = m.predict(&batch).map_err(|e| e.to_string())?;
    let after = loaded.predict(&batch).map_err(|e| e.to_string())?;
    let ckpt_ok = before
        .data()
        .iter()
        .zip(after.data())
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let path = dir.path().join("pairs.hald");
    data.save(&path).map_err(|e| e.to_string())?;
    let data_ok = Dataset::load(&path).map_err(|e| e.to_string())? == data;

    let flip_ok = data
        .pairs
        .iter()
        .all(|p: &ScanPair| p.flipped().flipped() == *p);
    let norm_dev = data
        .pairs
        .iter()
        .flat_map(|p| {
            let back = denormalize(&normalize(&p.x, 30.0), 30.0);
            back.into_iter()
                .zip(p.x.clone())
                .map(|(a, b)| (a - b).abs() / 30.0)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    check(
        ckpt_ok && data_ok && flip_ok && norm_dev <= NORMALIZE_TOL,
        format!(
            "checkpoint bit-exact {ckpt_ok}; dataset lossless {data_ok}; flip∘flip identity {flip_ok}; normalize round trip {norm_dev:.1e} of range"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "gradient correctness", gradients),
        (2, "closed-form loss and head values", closed_forms),
        (3, "raycast vs marching oracle", geometry),
        (
            4,
            "ground-truth and fusion semantics",
            ground_truth_semantics,
        ),
        (5, "overfit smoke", overfit),
        (6, "ablation trends", ablation),
        (
            7,
            "relative-delta arithmetic on published means",
            published_delta,
        ),
        (8, "chunked wide-scan inference", chunked),
        (9, "round trips", round_trips),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
