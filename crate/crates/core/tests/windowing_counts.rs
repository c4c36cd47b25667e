use emgait_core::labeling::{LabelStream, PhaseLabel};
use emgait_core::windowing::{expected_window_count, make_windows, WindowConfig};

fn stream(mask: Vec<bool>) -> LabelStream {
    let n = mask.len();
    LabelStream { labels: vec![PhaseLabel::Stance; n], gait_percent: vec![0.0; n], valid_mask: mask, rate_hz: 500.0 }
}

fn ramp(n: usize) -> [Vec<f64>; 5] {
    std::array::from_fn(|c| (0..n).map(|i| (i * 10 + c) as f64).collect())
}

#[test]
fn counts_for_single_run() {
    for (len, expected) in [(40, 1), (56, 2), (104, 5), (10_000, 623)] {
        let t = make_windows(&ramp(len), &stream(vec![true; len]), "S", 0, &WindowConfig::default()).unwrap();
        assert_eq!(t.len(), expected, "L = {len}");
        assert_eq!(t.len(), (len - 40) / 16 + 1);
    }
}

#[test]
fn counts_per_run_and_overlap() {
    let mut mask = vec![true; 104];
    mask.extend(vec![false; 7]);
    mask.extend(vec![true; 56]);
    mask.extend(vec![false; 3]);
    mask.extend(vec![true; 39]);
    let n = mask.len();
    let t = make_windows(&ramp(n), &stream(mask.clone()), "S", 0, &WindowConfig::default()).unwrap();
    assert_eq!(t.len(), 5 + 2);
    assert_eq!(expected_window_count(&mask, 40, 16), 7);
    // consecutive windows in a run share 24 samples
    for i in 0..4 {
        assert_eq!(&t.window(i)[16 * 5..], &t.window(i + 1)[..24 * 5]);
    }
    // second run starts at its own first sample
    assert_eq!(t.window(5)[0], (111 * 10) as f64);
}
