use triview::image_io::load_image;
use triview::viz::save_colorized;
use triview_core::Field;

/// Hue in degrees of an RGB triple, from the standard hexcone formula.
fn hue(rgb: [f64; 3]) -> f64 {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let delta = max - r.min(g).min(b);
    assert!(delta > 0.0, "gray pixel has no hue");
    let h = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    // Pure red wraps to 0, not 360.
    if h >= 359.999 { 0.0 } else { h }
}

fn pixel(img: &triview_core::Image, u: usize, v: usize) -> [f64; 3] {
    [img.get(u, v, 0), img.get(u, v, 1), img.get(u, v, 2)]
}

#[test]
fn constant_field_renders_uniformly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.png");
    save_colorized(&Field::filled(7, 5, 3.25), &path).unwrap();
    let img = load_image(&path).unwrap();
    assert_eq!((img.width(), img.height(), img.channels()), (7, 5, 3));
    let first = pixel(&img, 0, 0);
    for v in 0..5 {
        for u in 0..7 {
            assert_eq!(pixel(&img, u, v), first);
        }
    }
}

#[test]
fn horizontal_ramp_sweeps_hue_from_blue_to_red() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ramp.png");
    let w = 64;
    save_colorized(&Field::from_fn(w, 3, |u, _| -2.0 + 0.5 * u as f64), &path).unwrap();
    let img = load_image(&path).unwrap();
    let hues: Vec<f64> = (0..w).map(|u| hue(pixel(&img, u, 1))).collect();
    assert!((hues[0] - 240.0).abs() < 1e-9, "{}", hues[0]);
    assert!(hues[w - 1].abs() < 1e-9, "{}", hues[w - 1]);
    for pair in hues.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "{hues:?}");
    }
    // Rows are identical because the field only varies along u.
    for u in 0..w {
        assert_eq!(pixel(&img, u, 0), pixel(&img, u, 2));
    }
}

#[test]
fn unwritable_destination_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.png");
    assert!(save_colorized(&Field::zeros(2, 2), &path).is_err());
}
