mod common;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use txgraph::dataset::{
    apply_minmax, correlation_matrix, extract_table, feature_rank, fit_minmax, anova_f, split,
    summarize_by_label, FeatureRow, FeatureTable,
};
use txgraph::features::{LsiParams, FEATURE_LEN};
use txgraph::{synth_ledger, GkParams, Label, Strength, SynthConfig, TxGraph};

fn table(columns: &[&str], rows: &[(&[f64], u8)]) -> FeatureTable {
    let mut t = FeatureTable::new(columns.iter().map(|s| s.to_string()).collect());
    for (i, (values, label)) in rows.iter().enumerate() {
        t.push(FeatureRow {
            address: format!("r{i}"),
            values: values.to_vec(),
            label: Label::from_id(*label).unwrap(),
            strength: Strength::Strong,
        })
        .unwrap();
    }
    t
}

fn csv_bytes(t: &FeatureTable) -> Vec<u8> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn empty_labels_give_header_only() {
    let g = TxGraph::build(&[]).unwrap();
    let (t, report) = extract_table(&g, &g, &[], &GkParams::default(), &LsiParams::default(), 4).unwrap();
    assert!(t.is_empty());
    assert!(report.missing.is_empty());
    let text = String::from_utf8(csv_bytes(&t)).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(text.trim_end().split(',').count(), 3 + FEATURE_LEN);
}

#[test]
fn thirty_addresses_any_parallelism() {
    let config = SynthConfig {
        blocks: 30,
        ..SynthConfig::default()
    };
    let ledger = synth_ledger(&config, 6).unwrap();
    assert_eq!(ledger.labels.len(), 30);
    let g = TxGraph::build(&ledger.blocks).unwrap();
    let merged = g.merge_parallel_edges();
    let mut outputs = Vec::new();
    for jobs in [1, 2, 8, 1] {
        let (t, report) = extract_table(&g, &merged, &ledger.labels, &GkParams::default(), &LsiParams::default(), jobs).unwrap();
        assert!(report.missing.is_empty() && report.failures.is_empty());
        assert_eq!((t.len(), t.width()), (30, 148));
        let order: Vec<_> = t.rows.iter().map(|r| r.address.clone()).collect();
        let want: Vec<_> = ledger.labels.iter().map(|l| l.address.clone()).collect();
        assert_eq!(order, want);
        assert!(t.rows.iter().flat_map(|r| &r.values).all(|v| v.is_finite()));
        outputs.push(csv_bytes(&t));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let back = FeatureTable::read_csv(outputs[0].as_slice()).unwrap();
    assert_eq!(csv_bytes(&back), outputs[0]);
}

#[test]
fn missing_addresses_are_reported() {
    let ledger = synth_ledger(&SynthConfig { blocks: 3, ..SynthConfig::default() }, 1).unwrap();
    let g = TxGraph::build(&ledger.blocks).unwrap();
    let mut labels = ledger.labels.clone();
    labels[0].address = "nowhere".into();
    let (t, report) = extract_table(&g, &g.merge_parallel_edges(), &labels, &GkParams::default(), &LsiParams::default(), 1).unwrap();
    assert_eq!(report.missing, ["nowhere"]);
    assert_eq!(t.len(), labels.len() - 1);
}

#[test]
fn split_examples() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let t = table(&["x"], &rows.iter().map(|r| (r.as_slice(), 0)).collect::<Vec<_>>());
    let (train, test) = split(&t, 0.2, 9).unwrap();
    assert_eq!((train.len(), test.len()), (8, 2));
    assert_eq!(split(&t, 0.2, 9).unwrap(), (train, test));
    let one = table(&["x"], &[(&[1.0], 0)]);
    assert!(split(&one, 0.2, 9).is_err());
    assert!(split(&t, 1.0, 9).is_err());
}

#[test]
fn split_partitions_for_every_seed() {
    let rows: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64]).collect();
    let t = table(&["x"], &rows.iter().map(|r| (r.as_slice(), 0)).collect::<Vec<_>>());
    for seed in 0..200 {
        let (train, test) = split(&t, 0.3, seed).unwrap();
        let a: HashSet<_> = train.rows.iter().map(|r| r.address.clone()).collect();
        let b: HashSet<_> = test.rows.iter().map(|r| r.address.clone()).collect();
        assert!(a.is_disjoint(&b));
        assert_eq!(a.len() + b.len(), 37);
    }
}

#[test]
fn split_proportions_track_the_whole() {
    let mut rng = common::rng(31);
    let rows: Vec<(Vec<f64>, u8)> = (0..1000)
        .map(|i| (vec![i as f64], [0u8, 0, 0, 6, 6, 9][rng.gen_range(0..6)]))
        .collect();
    let t = table(&["x"], &rows.iter().map(|(v, l)| (v.as_slice(), *l)).collect::<Vec<_>>());
    let share = |t: &FeatureTable| {
        let mut m = BTreeMap::new();
        for l in t.labels() {
            *m.entry(l).or_insert(0.0) += 1.0 / t.len() as f64;
        }
        m
    };
    let overall = share(&t);
    for seed in [1, 9, 42] {
        let (_, test) = split(&t, 0.2, seed).unwrap();
        let part = share(&test);
        for (l, p) in &overall {
            let q = part.get(l).copied().unwrap_or(0.0);
            assert!((p - q).abs() <= 0.10, "label {l}: {p} vs {q}");
        }
    }
}

#[test]
fn minmax_examples() {
    let t = table(&["a", "c"], &[(&[0.0, 7.0], 0), (&[5.0, 7.0], 0), (&[10.0, 7.0], 0)]);
    let state = fit_minmax(&t).unwrap();
    let scaled = apply_minmax(&state, &t).unwrap();
    assert_eq!(scaled.column(0), [0.0, 0.5, 1.0]);
    assert_eq!(scaled.column(1), [0.0, 0.0, 0.0]);
    let outside = table(&["a", "c"], &[(&[20.0, 1.0], 0)]);
    assert_eq!(apply_minmax(&state, &outside).unwrap().column(0), [2.0]);
}

#[test]
fn minmax_round_trip_and_range() {
    let mut rng = common::rng(32);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| rng.gen_range(-1e6..1e6)).collect()).collect();
    let t = table(&["a", "b", "c", "d", "e", "f"], &rows.iter().map(|r| (r.as_slice(), 0)).collect::<Vec<_>>());
    let state = fit_minmax(&t).unwrap();
    let scaled = apply_minmax(&state, &t).unwrap();
    assert!(scaled.rows.iter().flat_map(|r| &r.values).all(|v| (0.0..=1.0).contains(v)));
    let back = state.invert(&scaled).unwrap();
    for (x, y) in t.rows.iter().flat_map(|r| &r.values).zip(back.rows.iter().flat_map(|r| &r.values)) {
        assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}

#[test]
fn correlation_examples_and_oracle() {
    let mut rng = common::rng(33);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let x: f64 = rng.gen_range(-5.0..5.0);
            vec![x, -x, 3.0, rng.gen_range(0.0..1.0), x * x]
        })
        .collect();
    let t = table(&["x", "neg", "const", "u", "sq"], &rows.iter().map(|r| (r.as_slice(), 0)).collect::<Vec<_>>());
    let c = correlation_matrix(&t).unwrap();
    assert!((c[0][0] - 1.0).abs() < 1e-12);
    assert!((c[0][1] + 1.0).abs() < 1e-12);
    assert_eq!(c[2], [0.0; 5]);
    let n = rows.len() as f64;
    for i in [0, 1, 3, 4] {
        for j in [0, 1, 3, 4] {
            let (xi, xj) = (t.column(i), t.column(j));
            let (mi, mj) = (xi.iter().sum::<f64>() / n, xj.iter().sum::<f64>() / n);
            let cov: f64 = xi.iter().zip(&xj).map(|(a, b)| (a - mi) * (b - mj)).sum();
            let vi: f64 = xi.iter().map(|a| (a - mi).powi(2)).sum();
            let vj: f64 = xj.iter().map(|b| (b - mj).powi(2)).sum();
            let want = cov / (vi * vj).sqrt();
            assert!((c[i][j] - want).abs() < 1e-9, "{i},{j}");
            assert_eq!(c[i][j], c[j][i]);
        }
    }
}

fn gaussian(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

#[test]
fn anova_matches_two_sample_closed_form() {
    let mut rng = common::rng(34);
    for trial in 0..20 {
        let (n1, n2) = (rng.gen_range(3..60), rng.gen_range(3..60));
        let shift = trial as f64 * 0.2;
        let a: Vec<f64> = (0..n1).map(|_| gaussian(&mut rng)).collect();
        let b: Vec<f64> = (0..n2).map(|_| shift + 2.0 * gaussian(&mut rng)).collect();
        let values: Vec<f64> = a.iter().chain(&b).copied().collect();
        let labels: Vec<u8> = std::iter::repeat_n(3, n1).chain(std::iter::repeat_n(11, n2)).collect();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let ss = |x: &[f64]| {
            let m = mean(x);
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        };
        let pooled = (ss(&a) + ss(&b)) / (n1 + n2 - 2) as f64;
        let t = (mean(&a) - mean(&b)) / (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        let f = anova_f(&values, &labels);
        assert!((f - t * t).abs() <= 1e-6 * (1.0 + t * t), "{f} vs {}", t * t);
    }
}

#[test]
fn rank_examples() {
    let t = table(
        &["same", "label", "noise"],
        &[(&[1.0, 0.0, 0.3], 0), (&[1.0, 0.0, 0.1], 0), (&[1.0, 2.0, 0.2], 2), (&[1.0, 2.0, 0.4], 2)],
    );
    let rank = feature_rank(&t).unwrap();
    assert_eq!(rank[0].0, "label");
    assert_eq!(rank.last().unwrap(), &("same".to_string(), 0.0));
    let single = table(&["x"], &[(&[1.0], 0), (&[2.0], 0)]);
    assert!(feature_rank(&single).is_err());
}

#[test]
fn summary_examples() {
    let t = table(&["x"], &[(&[4.0], 9), (&[1.0], 2), (&[3.0], 2), (&[2.0], 2), (&[10.0], 2)]);
    let s = summarize_by_label(&t, "x").unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!((s[0].label, s[0].count, s[0].avg, s[0].max, s[0].min, s[0].median), (2, 4, 4.0, 10.0, 1.0, 2.5));
    assert_eq!((s[1].avg, s[1].max, s[1].min, s[1].median), (4.0, 4.0, 4.0, 4.0));
    assert!(summarize_by_label(&t, "nope").is_err());
}
