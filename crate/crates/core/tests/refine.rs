mod support;

use support::{calibrated_log_sigma, scene};
use triview_core::losses::{Fields, LossConfig, LossWeights};
use triview_core::matcher::{build_cost_volume, wta_disparity};
use triview_core::metrics::epe;
use triview_core::refine::{refine, refine_fields, TraceEntry};
use triview_core::synth::{generate_scene, SceneConfig};
use triview_core::{Field, Mode, RefineConfig};

/// Moving averages of the total loss over `window` consecutive iterations,
/// one sequence per pyramid level.
fn moving_averages(trace: &[TraceEntry], window: usize) -> Vec<Vec<f64>> {
    let mut levels: Vec<Vec<f64>> = Vec::new();
    let mut current = usize::MAX;
    for t in trace {
        if t.level != current {
            levels.push(Vec::new());
            current = t.level;
        }
        levels.last_mut().unwrap().push(t.total);
    }
    levels
        .iter()
        .map(|totals| {
            totals
                .windows(window)
                .map(|w| w.iter().sum::<f64>() / window as f64)
                .collect()
        })
        .collect()
}

fn small_scene(seed: u64) -> triview_core::synth::Scene {
    // Default rig at half resolution.
    generate_scene(&SceneConfig {
        seed,
        width: 128,
        height: 96,
        focal: 100.0,
        d_max: 16.0,
        ..SceneConfig::default()
    })
    .unwrap()
}

fn matcher_init(frame: &triview_core::MultiscopicFrame, d_max: usize) -> Field {
    wta_disparity(&build_cost_volume(frame, d_max, &LossConfig::default()).unwrap())
}

#[test]
fn loss_moving_average_never_increases() {
    for seed in 0..3 {
        let s = small_scene(seed);
        let init = matcher_init(&s.frame, 16);
        let cfg = RefineConfig {
            d_max: 16.0,
            ..RefineConfig::default()
        };
        let r = refine(&s.frame, &init, &init, &cfg).unwrap();
        assert_eq!(r.loss_trace.len(), cfg.iterations * r.levels);
        for (level, ma) in moving_averages(&r.loss_trace, 25).iter().enumerate() {
            for (i, pair) in ma.windows(2).enumerate() {
                assert!(pair[1] <= pair[0], "seed {seed}, level {level}, step {i}: {} -> {}", pair[0], pair[1]);
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_results() {
    let s = small_scene(4);
    let init = matcher_init(&s.frame, 16);
    let cfg = RefineConfig {
        iterations: 40,
        d_max: 16.0,
        ..RefineConfig::default()
    };
    let a = refine(&s.frame, &init, &init, &cfg).unwrap();
    let b = refine(&s.frame, &init, &init, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn label_side_is_frozen_by_mutual_loss_alone() {
    // Left branch uncertain everywhere, right confident: the mutual loss may
    // only move d_l (towards d_r), never d_r.
    let s = small_scene(5);
    let (w, h) = s.frame.dims();
    let gt = s.frame.gt_disparity.clone().unwrap();
    let d_l = gt.map(|d| d + 1.5);
    let init = Fields {
        d_l: d_l.clone(),
        d_r: gt.clone(),
        s_l: Field::filled(w, h, 1.5),
        s_r: Field::zeros(w, h),
    };
    let cfg = RefineConfig {
        iterations: 30,
        pyramid_levels: 1,
        d_max: 16.0,
        weights: LossWeights {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 1.0,
            lambda4: 0.0,
        },
        ..RefineConfig::default()
    };
    let r = refine_fields(&s.frame, init, &cfg).unwrap();
    assert_eq!(r.d_r, gt);
    assert!(epe(&r.d_l, &gt, None).unwrap() < epe(&d_l, &gt, None).unwrap());
}

#[test]
fn ground_truth_with_calibrated_uncertainty_is_near_stationary() {
    for seed in 0..2 {
        let s = small_scene(seed);
        let gt = s.frame.gt_disparity.clone().unwrap();
        let visible = s.frame.non_occluded().unwrap();
        let (s_l, s_r) = calibrated_log_sigma(&s);
        let init = Fields {
            d_l: gt.clone(),
            d_r: gt.clone(),
            s_l,
            s_r,
        };
        let cfg = RefineConfig {
            d_max: 16.0,
            pyramid_levels: 1,
            ..RefineConfig::default()
        };
        let r = refine_fields(&s.frame, init, &cfg).unwrap();
        for d in [&r.d_l, &r.d_r] {
            let e = epe(d, &gt, Some(&visible)).unwrap();
            assert!(e <= 0.2, "seed {seed}: {e}");
        }
    }
}

#[test]
fn refinement_improves_matcher_initialization() {
    let s = scene(3, 256, 192);
    let gt = s.frame.gt_disparity.clone().unwrap();
    let visible = s.frame.non_occluded().unwrap();
    let init = matcher_init(&s.frame, 32);
    let r = refine(&s.frame, &init, &init, &RefineConfig::default()).unwrap();
    let before = epe(&init, &gt, Some(&visible)).unwrap();
    for d in [&r.d_l, &r.d_r] {
        let after = epe(d, &gt, Some(&visible)).unwrap();
        assert!(after < before, "{after} vs {before}");
    }
    assert!(r.loss_trace.iter().all(|t| t.total.is_finite()));
    assert!(r.d_r.data().iter().all(|d| (0.0..=32.0).contains(d)));
}

#[test]
fn stereo_mode_runs_without_mutual_term() {
    let s = small_scene(6);
    let init = matcher_init(&s.frame, 16);
    let cfg = RefineConfig {
        iterations: 20,
        d_max: 16.0,
        mode: Mode::Stereo,
        ..RefineConfig::default()
    };
    let r = refine(&s.frame, &init, &init, &cfg).unwrap();
    assert!(r.loss_trace.iter().all(|t| t.total.is_finite()));
    // With lambda3 forced to 0 the mutual value is still reported.
    let t = r.loss_trace.last().unwrap();
    let w = cfg.weights;
    assert_eq!(t.total, w.lambda1 * t.l_p + w.lambda2 * t.l_sigma + w.lambda4 * t.l_s);
}
