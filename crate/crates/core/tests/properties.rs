use std::collections::HashSet;

use blc_core::isotonic::project_non_increasing;
use blc_core::pipeline::{
    augment, grouped_split, make_folds, AugmentConfig, Manifest, ManifestRecord, Segment,
};
use blc_core::image::ReflectionImage;
use blc_core::surface::{blc_of_values, compute_blc, wasserstein1, Blc, DepthProfile};
use proptest::prelude::*;

/// Direct scan: the smallest pixel value `y` whose count of values `<= y`
/// reaches `(1 - k/(K+1)) N`, compared in integers.
fn brute_blc(values: &[f64], k: usize) -> Vec<f64> {
    let n = values.len();
    (1..=k)
        .map(|j| {
            let mut best: Option<f64> = None;
            for &y in values {
                let count = values.iter().filter(|&&a| a <= y).count();
                if count * (k + 1) >= (k + 1 - j) * n && best.is_none_or(|b| y < b) {
                    best = Some(y);
                }
            }
            best.unwrap()
        })
        .collect()
}

fn profile_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(prop_oneof![(-4i32..4).prop_map(f64::from), -5.0f64..5.0], r * c))
    })
}

fn curve_strategy(k: usize) -> impl Strategy<Value = Blc> {
    prop::collection::vec(-3.0f64..3.0, k).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        Blc::new(v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn blc_matches_brute_force((r, c, h) in profile_strategy(), k in 1usize..=16) {
        let p = DepthProfile::new(r, c, h.clone()).unwrap();
        let got = compute_blc(&p, k).unwrap();
        let want = brute_blc(&h, k);
        prop_assert_eq!(got.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            want.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn blc_is_non_increasing_and_from_the_data(h in prop::collection::vec(-10.0f64..10.0, 1..200), k in 1usize..64) {
        let b = blc_of_values(&h, k).unwrap();
        prop_assert!(b.values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(b.values().iter().all(|v| h.contains(v)));
    }

    #[test]
    fn blc_commutes_with_monotone_affine_maps(h in prop::collection::vec(-10.0f64..10.0, 1..100), k in 1usize..32,
        a in 0.1f64..10.0, s in -5.0f64..5.0) {
        let mapped: Vec<f64> = h.iter().map(|v| a * v + s).collect();
        let lhs = blc_of_values(&mapped, k).unwrap();
        let rhs: Vec<f64> = blc_of_values(&h, k).unwrap().values().iter().map(|v| a * v + s).collect();
        prop_assert_eq!(lhs.values(), &rhs[..]);
    }

    #[test]
    fn w1_is_a_pseudometric(a in curve_strategy(24), b in curve_strategy(24), c in curve_strategy(24)) {
        let ab = wasserstein1(&a, &b).unwrap();
        prop_assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, wasserstein1(&b, &a).unwrap());
        prop_assert!(wasserstein1(&a, &c).unwrap() <= ab + wasserstein1(&b, &c).unwrap() + 1e-12);
    }

    #[test]
    fn parameters_stay_in_bounds(b in curve_strategy(64)) {
        let kp = b.k_params().unwrap();
        prop_assert!(kp.sk >= 0.0 && kp.spk >= 0.0 && kp.svk >= 0.0);
        prop_assert!(0.0 <= kp.smr1 && kp.smr1 <= kp.smr2 && kp.smr2 <= 1.0);
        let v = b.volume_params().unwrap();
        prop_assert!(v.vmp >= 0.0 && v.vvv >= 0.0 && v.vmc >= 0.0 && v.vvc >= 0.0);
    }

    #[test]
    fn parameters_are_affine_equivariant(b in curve_strategy(128), a in 0.2f64..5.0, s in -2.0f64..2.0) {
        let (k0, v0) = (b.k_params().unwrap(), b.volume_params().unwrap());
        let m = b.affine(a, s).unwrap();
        let (k1, v1) = (m.k_params().unwrap(), m.volume_params().unwrap());
        let tol = 1e-9 * (1.0 + a);
        prop_assert!((k1.sk - a * k0.sk).abs() <= tol);
        prop_assert!((k1.spk - a * k0.spk).abs() <= tol);
        prop_assert!((k1.svk - a * k0.svk).abs() <= tol);
        prop_assert!((k1.smr1 - k0.smr1).abs() <= 1e-9);
        prop_assert!((k1.smr2 - k0.smr2).abs() <= 1e-9);
        for (x, y) in [(v1.vmp, v0.vmp), (v1.vvv, v0.vvv), (v1.vmc, v0.vmc), (v1.vvc, v0.vvc)] {
            prop_assert!((x - a * y).abs() <= tol);
        }
    }
}

/// Least-squares fit over every contiguous block partition whose block
/// means are non-increasing.
fn qp_oracle(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for i in 0..n {
            if i == n - 1 || mask & (1 << i) != 0 {
                let mean = v[start..=i].iter().sum::<f64>() / (i + 1 - start) as f64;
                fit.extend(std::iter::repeat_n(mean, i + 1 - start));
                start = i + 1;
            }
        }
        if fit.windows(2).any(|w| w[0] < w[1] - 1e-12) {
            continue;
        }
        let sse: f64 = fit.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((sse, fit));
        }
    }
    best.unwrap().1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn isotonic_projection_matches_qp(v in prop::collection::vec(-2.0f64..2.0, 1..=9)) {
        let got = project_non_increasing(&v);
        let want = qp_oracle(&v);
        prop_assert!(got.windows(2).all(|w| w[0] >= w[1]));
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9, "{:?} vs {:?}", got, want);
        }
    }

    #[test]
    fn isotonic_projection_is_idempotent(v in prop::collection::vec(-2.0f64..2.0, 1..64)) {
        let once = project_non_increasing(&v);
        prop_assert_eq!(project_non_increasing(&once), once);
    }
}

fn random_manifest(liner_sizes: &[usize], hours: &[f64]) -> Manifest {
    let mut records = Vec::new();
    for (l, &n) in liner_sizes.iter().enumerate() {
        for j in 0..n {
            let id = format!("r{l}_{j}");
            records.push(ManifestRecord {
                id: id.clone(),
                liner_id: format!("liner{l:03}"),
                segment: if j % 2 == 0 { Segment::ThreeOClock } else { Segment::SixOClock },
                operating_hours: hours[l],
                rgb_path: format!("{id}.png"),
                depth_path: format!("{id}.htdp"),
                blc_path: None,
            });
        }
    }
    Manifest::new(records, ".").unwrap()
}

fn liner_set(m: &Manifest) -> HashSet<String> {
    m.records.iter().map(|r| r.liner_id.clone()).collect()
}

fn manifest_strategy() -> impl Strategy<Value = Manifest> {
    (5usize..30).prop_flat_map(|n| {
        (prop::collection::vec(1usize..12, n), prop::collection::vec(0.0f64..60000.0, n))
            .prop_map(|(sizes, hours)| random_manifest(&sizes, &hours))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn splits_keep_liners_whole(m in manifest_strategy(), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let (train, eval) = grouped_split(&m, frac, seed).unwrap();
        prop_assert_eq!(train.len() + eval.len(), m.len());
        prop_assert!(!eval.is_empty() && !train.is_empty());
        prop_assert!(liner_set(&train).is_disjoint(&liner_set(&eval)));
    }

    #[test]
    fn folds_keep_liners_whole_and_balanced(m in manifest_strategy(), seed in any::<u64>()) {
        let plan = make_folds(&m, 5, seed).unwrap();
        let parts: Vec<HashSet<String>> = (0..5).map(|f| liner_set(&plan.split(&m, f).1)).collect();
        for i in 0..5 {
            for j in i + 1..5 {
                prop_assert!(parts[i].is_disjoint(&parts[j]));
            }
        }
        prop_assert_eq!(parts.iter().map(HashSet::len).sum::<usize>(), liner_set(&m).len());
        let liner_counts: Vec<usize> = parts.iter().map(HashSet::len).collect();
        prop_assert!(liner_counts.iter().max().unwrap() - liner_counts.iter().min().unwrap() <= 1);
        let records: Vec<usize> = (0..5).map(|f| plan.fold_ids(f).len()).collect();
        let largest = m.liners().iter().map(|l| m.records.iter().filter(|r| &r.liner_id == l).count()).max().unwrap();
        prop_assert!(records.iter().max().unwrap() - records.iter().min().unwrap() <= largest);
    }

    #[test]
    fn augmented_labels_are_identical(seed in any::<u8>(), compose in any::<bool>(), sigma in 0.0f64..3.0) {
        let data: Vec<u8> = (0..20 * 24 * 3).map(|i| ((i * 31 + seed as usize * 7) % 256) as u8).collect();
        let img = ReflectionImage::new(20, 24, data).unwrap();
        let label = Blc::new(vec![1.5, 0.25, -0.125 * seed as f64]).unwrap();
        let config = AugmentConfig { enabled: true, blur_sigma: sigma, compose };
        let out = augment(&img, &label, &config);
        prop_assert_eq!(out.len(), if compose { 4 } else { 3 });
        for (_, v, l) in &out {
            prop_assert_eq!((v.rows(), v.cols()), (20, 24));
            prop_assert_eq!(l.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                label.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
    }
}
