use approx::assert_abs_diff_eq;
use preempt_core::preview::{curvature_preview, delay_advance, friction_preview, future_distances, speed_limit, PathMap, PreviewMode};
use proptest::prelude::*;

fn step_map() -> PathMap {
    PathMap::friction(vec![0.0, 30.0], vec![1.0, 0.2]).unwrap()
}

fn first_low(v: &[f64]) -> usize {
    v.iter().position(|m| *m < 0.5).unwrap()
}

#[test]
fn speed_limit_examples() {
    assert_abs_diff_eq!(speed_limit(1.0, 0.1, 1.0, 40.0), 9.904, epsilon = 1e-3);
    assert_abs_diff_eq!(speed_limit(0.9, 0.1, 0.9, 40.0), 8.914, epsilon = 1e-3);
    assert_eq!(speed_limit(0.9, 0.0, 0.9, 40.0), 40.0);
    assert_eq!(speed_limit(1.0, -0.1, 1.0, 40.0), speed_limit(1.0, 0.1, 1.0, 40.0));
    // 32 km/h on a 10 m radius is well under a 50 km/h target
    assert!(speed_limit(0.9, 0.1, 0.9, 40.0) * 3.6 < 50.0);
}

#[test]
fn future_distances_examples() {
    assert_eq!(future_distances(0.0, 10.0, 4, 0.1).values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(future_distances(12.5, 0.0, 3, 0.2).values, vec![12.5; 4]);
    assert_eq!(future_distances(0.0, 10.0, 17, 0.2).len(), 18);
}

#[test]
fn delay_advance_examples() {
    assert_eq!(delay_advance(0.0, 0.1), 0.0);
    assert_eq!(delay_advance(20.0, 0.0), 0.0);
    assert_abs_diff_eq!(delay_advance(20.0, 0.1), 2.0, epsilon = 1e-12);
}

#[test]
fn delay_advance_pulls_the_transition_forward() {
    let (v, ts) = (10.0, 0.1);
    let s_fut = future_distances(25.0, v, 10, ts);
    let plain = friction_preview(&step_map(), &s_fut, 0.0, PreviewMode::Preemptive);
    let shifted = friction_preview(&step_map(), &s_fut, 2.0, PreviewMode::Preemptive);
    let expected = (2.0 / (v * ts)).ceil() as usize;
    assert_eq!(first_low(&plain.values) - first_low(&shifted.values), expected);
}

#[test]
fn reactive_preview_holds_the_current_friction() {
    let s_fut = future_distances(25.0, 10.0, 10, 0.1);
    let r = friction_preview(&step_map(), &s_fut, 2.0, PreviewMode::Reactive);
    assert_eq!(r.values, vec![1.0; 11]);
}

#[test]
fn uniform_friction_gives_uniform_previews() {
    let map = PathMap::friction(vec![0.0], vec![0.6]).unwrap();
    let s_fut = future_distances(3.0, 12.0, 10, 0.025);
    for mode in [PreviewMode::Preemptive, PreviewMode::Reactive] {
        assert_eq!(friction_preview(&map, &s_fut, 1.2, mode).values, vec![0.6; 11]);
    }
}

#[test]
fn curvature_preview_examples() {
    let s_fut = future_distances(15.0, 5.0, 10, 0.2);
    let straight = PathMap::curvature(vec![0.0, 100.0], vec![0.0, 0.0]).unwrap();
    assert!(curvature_preview(&straight, &s_fut).values.iter().all(|k| *k == 0.0));

    let arc = PathMap::curvature(vec![0.0, 19.999, 20.0, 60.0], vec![0.0, 0.0, 0.1, 0.1]).unwrap();
    let k = curvature_preview(&arc, &s_fut);
    for (s, k) in s_fut.values.iter().zip(&k.values) {
        let want = if *s >= 20.0 { 0.1 } else { 0.0 };
        assert_abs_diff_eq!(*k, want, epsilon = 1e-12);
    }

    let constant = PathMap::curvature(vec![0.0, 50.0], vec![0.05, 0.05]).unwrap();
    assert_eq!(curvature_preview(&constant, &s_fut).values, vec![0.05; 11]);
}

proptest! {
    #[test]
    fn speed_limit_monotonicity(mu in 0.05f64..1.2, k in 1e-3f64..0.9, fs in 0.1f64..1.0, dk in 0.0f64..0.5, dmu in 0.0f64..0.5, dfs in 0.0f64..0.5) {
        let base = speed_limit(mu, k, fs, 40.0);
        prop_assert!(speed_limit(mu, k + dk, fs, 40.0) <= base);
        prop_assert!(speed_limit(mu, -(k + dk), fs, 40.0) <= base);
        prop_assert!(speed_limit(mu + dmu, k, fs, 40.0) >= base);
        prop_assert!(speed_limit(mu, k, (fs + dfs).min(1.0), 40.0) >= base);
    }

    #[test]
    fn shifting_the_preview_equals_shifting_the_distances(s in 0.0f64..60.0, v in 0.0f64..30.0, n in 1usize..60, ts in 0.005f64..0.2, d in 0.0f64..5.0) {
        let map = PathMap::friction(vec![0.0, 20.0, 30.0, 45.0], vec![1.0, 0.4, 0.2, 0.8]).unwrap();
        let s_fut = future_distances(s, v, n, ts);
        let mut moved = s_fut.clone();
        moved.values.iter_mut().for_each(|x| *x += d);
        prop_assert_eq!(
            friction_preview(&map, &s_fut, d, PreviewMode::Preemptive).values,
            friction_preview(&map, &moved, 0.0, PreviewMode::Preemptive).values
        );
    }

    #[test]
    fn reactive_entries_are_all_the_current_sample(s in 0.0f64..60.0, v in 0.0f64..30.0, n in 1usize..60, d in 0.0f64..5.0) {
        let map = step_map();
        let p = friction_preview(&map, &future_distances(s, v, n, 0.025), d, PreviewMode::Reactive);
        prop_assert!(p.values.iter().all(|m| *m == map.sample(s)));
    }

    #[test]
    fn every_preview_has_n_plus_one_entries(s in 0.0f64..60.0, v in 0.0f64..30.0, n in 1usize..80, ts in 0.005f64..0.25, d in 0.0f64..5.0) {
        let s_fut = future_distances(s, v, n, ts);
        let k = PathMap::curvature(vec![0.0, 40.0], vec![0.0, 0.1]).unwrap();
        prop_assert_eq!(s_fut.len(), n + 1);
        prop_assert_eq!(s_fut.horizon(), n);
        for mode in [PreviewMode::Preemptive, PreviewMode::Reactive] {
            prop_assert_eq!(friction_preview(&step_map(), &s_fut, d, mode).len(), n + 1);
        }
        prop_assert_eq!(curvature_preview(&k, &s_fut).len(), n + 1);
    }
}
