use std::collections::HashSet;

use aesthete::data::{
    dataset_moments, parse_category_csv, parse_vote_file, parse_votes, split, synth_dataset, synthetic_distribution,
    truncated_normal_mean, write_votes, CategoryKind, DataError, ImageStats, LabeledImage, SplitSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Splits on single spaces by scanning bytes, independent of the parser.
fn hand_split(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    for ch in line.chars() {
        if ch == ' ' {
            out.push(String::new());
        } else {
            out.last_mut().unwrap().push(ch);
        }
    }
    out
}

#[test]
fn vote_line_matches_hand_split() {
    let line = "1 953619 0 1 5 17 38 36 15 6 5 1 1 22 1396";
    let fields = hand_split(line);
    let counts: Vec<u64> = fields[2..12].iter().map(|f| f.parse().unwrap()).collect();
    let rec = &parse_votes(line).unwrap()[0];
    assert_eq!(rec.gt_counts.to_vec(), counts);
    assert_eq!(rec.tags, [fields[12].parse::<u32>().unwrap(), fields[13].parse().unwrap()]);
    assert_eq!(rec.id, fields[1]);
    let total: u64 = counts.iter().sum();
    for (p, c) in rec.gt.probs().iter().zip(&counts) {
        assert_eq!(*p, *c as f64 / total as f64);
    }
}

#[test]
fn vote_file_errors_and_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("votes.txt");
    std::fs::write(&path, "").unwrap();
    assert!(parse_vote_file(&path).unwrap().is_empty());
    std::fs::write(&path, "1 a 1 1 1 1 1 1 1 1 1 1 0 0\n").unwrap();
    assert!(matches!(parse_vote_file(&path), Err(DataError::Parse { line: 1, .. })));
    std::fs::write(&path, "1 a 1 1 1 1 1 1 1 1 1 1 0 0 0\n\n3 b 0 1 5 17 38 36 15 6 5 0 0 0\n").unwrap();
    let err = parse_vote_file(&path).unwrap_err();
    assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    assert!(err.to_string().contains("line 3"));
}

fn arb_record() -> impl Strategy<Value = LabeledImage> {
    (any::<u32>(), "[a-z0-9_]{1,12}", prop::array::uniform10(0u64..5000), any::<[u32; 2]>(), any::<u32>())
        .prop_filter("needs a vote", |(_, _, c, _, _)| c.iter().any(|&v| v > 0))
        .prop_map(|(i, id, c, t, ch)| LabeledImage::new(i as u64, &id, c, t, ch).unwrap())
}

proptest! {
    #[test]
    fn votes_round_trip(records in prop::collection::vec(arb_record(), 0..20)) {
        let text = write_votes(&records);
        prop_assert_eq!(parse_votes(&text).unwrap(), records);
    }

    #[test]
    fn splits_partition_the_input(n in 1usize..300, seed in any::<u64>(), a in 1u32..10, b in 1u32..10, c in 1u32..10) {
        let total = (a + b + c) as f64;
        let spec = SplitSpec { seed, train: a as f64 / total, val: b as f64 / total, test: c as f64 / total };
        let items: Vec<usize> = (0..n).collect();
        let (tr, va, te) = split(&items, &spec).unwrap();
        let mut seen: Vec<usize> = tr.iter().chain(&va).chain(&te).copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(&seen, &items);
        prop_assert_eq!(va.len(), (spec.val * n as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(split(&items, &spec).unwrap(), (tr, va, te));
    }
}

#[test]
fn dataset_mean_matches_one_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let records: Vec<LabeledImage> = (0..500)
        .map(|i| {
            let counts = [(); 10].map(|_| rng.gen_range(0..300u64));
            LabeledImage::new(i, &format!("img{i}"), counts, [0, 0], 0).unwrap()
        })
        .collect();
    let text = write_votes(&records);
    // One pass over the text: per-line weighted mean from the raw counts.
    let mut sum = 0.0;
    let mut lines = 0.0;
    for line in text.lines() {
        let f = hand_split(line);
        let (mut num, mut den) = (0.0, 0.0);
        for (k, c) in f[2..12].iter().enumerate() {
            let c: f64 = c.parse().unwrap();
            num += (k + 1) as f64 * c;
            den += c;
        }
        sum += num / den;
        lines += 1.0;
    }
    let (mean, _) = dataset_moments(&parse_votes(&text).unwrap()).unwrap();
    assert!((mean - sum / lines).abs() < 1e-12);
    assert!(dataset_moments(&[]).is_none());
}

#[test]
fn synthetic_means_follow_the_truncated_normal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let stats = ImageStats { brightness: rng.gen(), edge_density: rng.gen(), contrast: rng.gen() };
        let mu = 1.0 + 9.0 * (0.5 * stats.brightness + 0.5 * stats.edge_density);
        let sigma = 0.5 + stats.contrast;
        let d = synthetic_distribution(&stats);
        worst = worst.max((d.mean() - truncated_normal_mean(mu, sigma)).abs());
    }
    assert!(worst < 0.06, "{worst}");
}

#[test]
fn synthetic_dataset_is_deterministic_and_varied() {
    let a = synth_dataset(200, 11, 32).unwrap();
    let b = synth_dataset(200, 11, 32).unwrap();
    assert_eq!(a, b);
    let c = synth_dataset(3, 12, 32).unwrap();
    assert_ne!(a[0].image, c[0].image);

    let mut ids = HashSet::new();
    let mut worst: f64 = 0.0;
    for s in &a {
        assert!(ids.insert(s.record.id.clone()));
        assert_eq!((s.image.width(), s.image.height(), s.image.channels()), (32, 32, 3));
        assert!((s.record.gt.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        worst = worst.max((s.record.gt.mean() - truncated_normal_mean(s.mu, s.sigma)).abs());
    }
    assert!(worst < 0.06, "{worst}");
    let means: Vec<f64> = a.iter().map(|s| s.record.gt.mean()).collect();
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    let spread = (means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
    assert!(spread > 0.5, "label spread {spread}");
    assert!(matches!(synth_dataset(0, 1, 32), Err(DataError::InvalidInput(_))));
}

#[test]
fn category_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eva.csv");
    std::fs::write(&path, "image_id,visual,composition,quality,semantic\n1,3,2,4,1\n2,1,1,1,1\n").unwrap();
    let t = parse_category_csv(&path, CategoryKind::Scored).unwrap();
    assert_eq!(t.category_names.len(), 4);
    assert_eq!(t.rows["1"], vec![3.0, 2.0, 4.0, 1.0]);
    std::fs::write(&path, "image_id,visual\n1,4.5\n").unwrap();
    assert!(matches!(parse_category_csv(&path, CategoryKind::Scored), Err(DataError::Range { .. })));
}
