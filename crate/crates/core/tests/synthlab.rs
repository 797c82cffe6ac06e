use std::collections::HashSet;
use std::fs;

use blc_core::image::{psi_transform, to_grayscale};
use blc_core::pipeline::load_manifest;
use blc_core::surface::io::{load_blc, load_htdp};
use blc_core::surface::{blc_of_values, compute_blc, wasserstein1, Blc};
use blc_core::synth::{generate_dataset, generate_surface, render_reflection, synthesize_pairs, DatasetConfig, SurfaceRecipe};

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &t in &idx[i..=j] {
            r[t] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[test]
fn default_dataset_statistics() {
    let pairs = synthesize_pairs(&DatasetConfig::default()).unwrap();
    assert_eq!(pairs.len(), 200);
    let sk: Vec<f64> = pairs.iter().map(|p| compute_blc(&p.depth, 512).unwrap().k_params().unwrap().sk).collect();
    let wear: Vec<f64> = pairs.iter().map(|p| p.recipe.wear).collect();
    let (q1, q3) = (quantile(sk.clone(), 0.25), quantile(sk.clone(), 0.75));
    assert!((0.475..=1.425).contains(&q1), "Sk q25 {q1}");
    assert!((0.71..=2.13).contains(&q3), "Sk q75 {q3}");
    let rho = spearman(&wear, &sk);
    assert!(rho <= -0.8, "rank correlation {rho}");
    let liners: HashSet<&str> = pairs.iter().map(|p| p.liner_id.as_str()).collect();
    assert_eq!(liners.len(), 25);
    for p in &pairs {
        assert_eq!((p.depth.rows(), p.depth.cols()), (p.image.rows(), p.image.cols()));
        assert_eq!(p.operating_hours, 60000.0 * p.recipe.wear);
    }
}

#[test]
fn default_recipe_sk_over_seeds() {
    for seed in 0..100 {
        let r = SurfaceRecipe { seed, ..Default::default() };
        let sk = compute_blc(&generate_surface(&r).unwrap(), 512).unwrap().k_params().unwrap().sk;
        assert!((0.5..=2.8).contains(&sk), "seed {seed}: Sk {sk}");
    }
}

#[test]
fn high_pass_removes_illumination() {
    let base = SurfaceRecipe { noise_level: 0.0, seed: 11, ..Default::default() };
    let depth = generate_surface(&base).unwrap();
    let a = render_reflection(&depth, &SurfaceRecipe { illumination_amplitude: 0.1, ..base.clone() }).unwrap();
    let b = render_reflection(&depth, &SurfaceRecipe { illumination_amplitude: 0.35, ..base.clone() }).unwrap();
    let (sa, sb) = (psi_transform(&a, 128).unwrap(), psi_transform(&b, 128).unwrap());
    let raw = |img| blc_of_values(to_grayscale(img).values(), 128).unwrap();
    let spread = |b: &Blc| b.values()[0] - b.values()[b.k() - 1];
    let raw_rel = wasserstein1(&raw(&a), &raw(&b)).unwrap() / spread(&raw(&a));
    for i in 0..4 {
        let rel = wasserstein1(sa.column(i), sb.column(i)).unwrap() / spread(sa.column(i));
        assert!(rel < 0.1, "sigma column {i}: relative W1 {rel}");
        assert!(rel < raw_rel / 1.5, "sigma column {i}: {rel} vs unfiltered {raw_rel}");
    }
}

#[test]
fn written_dataset_is_aligned_and_reproducible() {
    let config = DatasetConfig { n: 20, liners: 5, rows: 48, cols: 48, k: 64, seed: 4, ..Default::default() };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let records = generate_dataset(&config, d1.path()).unwrap();
    generate_dataset(&config, d2.path()).unwrap();
    assert_eq!(records.len(), 20);
    assert_eq!(records.iter().map(|r| r.liner_id.as_str()).collect::<HashSet<_>>().len(), 5);
    let m1 = fs::read(d1.path().join("manifest.json")).unwrap();
    assert_eq!(m1, fs::read(d2.path().join("manifest.json")).unwrap());
    let manifest = load_manifest(&d1.path().join("manifest.json")).unwrap();
    for r in &manifest.records {
        let depth = load_htdp(manifest.resolve(&r.depth_path)).unwrap();
        let stored = load_blc(manifest.resolve(r.blc_path.as_ref().unwrap())).unwrap();
        assert_eq!(compute_blc(&depth, 64).unwrap(), stored);
        for f in [&r.rgb_path, &r.depth_path] {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap());
        }
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let config = DatasetConfig { n: 2, liners: 1, rows: 32, cols: 32, k: 16, ..Default::default() };
    assert!(matches!(generate_dataset(&config, &blocker.join("sub")), Err(blc_core::Error::Io(_))));
}
