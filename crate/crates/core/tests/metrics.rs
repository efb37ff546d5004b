use motion_flow::metrics::{
    ade_fde, diversity, diversity_of_pairs, fid, frechet_distance, label_centroids, mean_and_covariance, mm_dist,
    mmodality, pooled_statistics, r_precision_top3, repeat, FeatureExtractor, FeatureSet, MetricsReport, Provenance,
    Summary, EncoderConfig,
};
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, MotionSequence, Normalizer, PoseLayout, SyntheticDatasetSpec};
use motion_flow::numerics::DenseArray;
use motion_flow::pipeline::{balanced_labels, nfe_curve, Generator};
use motion_flow::sampler::{ConstantField, SamplerConfig, SinglePointField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_set(n: usize, mean: &[f64], seed: u64) -> FeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n)
        .flat_map(|_| mean.iter().map(|m| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect::<Vec<_>>())
        .collect();
    FeatureSet::new(DenseArray::new(vec![n, mean.len()], data).unwrap(), Provenance::Pred).unwrap()
}

fn one_hot(n: usize) -> FeatureSet {
    let mut data = vec![0.0; n * n];
    (0..n).for_each(|i| data[i * n + i] = 1.0);
    FeatureSet::new(DenseArray::new(vec![n, n], data).unwrap(), Provenance::Pred).unwrap()
}

fn mat2(a: f64, b: f64, c: f64) -> DenseArray {
    DenseArray::new(vec![2, 2], vec![a, b, b, c]).unwrap()
}

#[test]
fn fid_of_a_set_with_itself_is_zero() {
    let a = gaussian_set(500, &[1.0, -2.0, 0.5], 0);
    assert!(fid(&a, &a).unwrap() < 1e-9);
}

#[test]
fn fid_of_shifted_unit_gaussians() {
    let a = gaussian_set(100_000, &[0.0, 0.0], 1);
    let b = gaussian_set(100_000, &[3.0, 4.0], 2);
    let v = fid(&a, &b).unwrap();
    assert!((v - 25.0).abs() < 0.02 * 25.0, "fid {v}");
}

#[test]
fn frechet_closed_forms() {
    // Diagonal covariances: |mu_a - mu_b|^2 + sum (sqrt(a_i) - sqrt(b_i))^2.
    let v = frechet_distance(&[0.0, 0.0], &mat2(1.0, 0.0, 4.0), &[0.0, 0.0], &mat2(4.0, 0.0, 9.0)).unwrap();
    assert!((v - 2.0).abs() < 1e-10, "{v}");
    let v = frechet_distance(&[1.0, 2.0], &mat2(1.0, 0.0, 1.0), &[1.0, 0.0], &mat2(1.0, 0.0, 1.0)).unwrap();
    assert!((v - 4.0).abs() < 1e-10);

    // Non-commuting 2x2 case. For PSD A, B the eigenvalues of AB are real and
    // non-negative, so Tr((AB)^{1/2}) = sqrt(tr(AB) + 2 sqrt(det(AB))).
    let (a, b): ((f64, f64, f64), (f64, f64, f64)) = ((2.0, 0.5, 1.0), (1.0, -0.3, 3.0));
    let ab = [a.0 * b.0 + a.1 * b.1, a.0 * b.1 + a.1 * b.2, a.1 * b.0 + a.2 * b.1, a.1 * b.1 + a.2 * b.2];
    let (tr, det) = (ab[0] + ab[3], ab[0] * ab[3] - ab[1] * ab[2]);
    let cross = (tr + 2.0 * det.sqrt()).sqrt();
    let expected = 0.25 + (a.0 + a.2) + (b.0 + b.2) - 2.0 * cross;
    let v = frechet_distance(&[0.5, 0.0], &mat2(a.0, a.1, a.2), &[0.0, 0.0], &mat2(b.0, b.1, b.2)).unwrap();
    assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fid_is_symmetric_and_nonnegative(seed in 0u64..1000, shift in -3.0f64..3.0) {
        let a = gaussian_set(60, &[0.0, 1.0, 2.0], seed);
        let b = gaussian_set(80, &[shift, 0.0, -1.0], seed + 7);
        let (ab, ba) = (fid(&a, &b).unwrap(), fid(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-8 * (1.0 + ab));
    }
}

#[test]
fn covariance_uses_n_minus_one() {
    let f = FeatureSet::new(DenseArray::new(vec![3, 1], vec![1.0, 2.0, 3.0]).unwrap(), Provenance::Gt).unwrap();
    let (mu, cov) = mean_and_covariance(&f).unwrap();
    assert_eq!(mu, vec![2.0]);
    assert!((cov.data()[0] - 1.0).abs() < 1e-15);
    let single = FeatureSet::new(DenseArray::zeros(&[1, 2]), Provenance::Gt).unwrap();
    assert!(fid(&single, &single).is_err());
}

#[test]
fn diversity_pairs_are_disjoint() {
    // Distinct one-hot rows are all sqrt(2) apart, so any repeated row would show.
    let f = one_hot(40);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = diversity(&f, 20, &mut rng).unwrap();
    assert_eq!(r.pairs, 20);
    assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
    let small = diversity(&one_hot(7), 300, &mut rng).unwrap();
    assert_eq!(small.pairs, 3);
    assert!((small.value - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn diversity_examples() {
    let f = FeatureSet::new(DenseArray::new(vec![4, 1], vec![0.0, 1.0, 3.0, 7.0]).unwrap(), Provenance::Pred).unwrap();
    assert_eq!(diversity_of_pairs(&f, &[0, 1], &[2, 3]), (3.0 + 6.0) / 2.0);
    let two = FeatureSet::new(DenseArray::new(vec![2, 2], vec![0.0, 0.0, 3.0, 4.0]).unwrap(), Provenance::Pred).unwrap();
    let r = diversity(&two, 300, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!((r.value, r.pairs), (5.0, 1));
    let same = FeatureSet::new(DenseArray::full(&[10, 3], 2.0), Provenance::Pred).unwrap();
    assert_eq!(diversity(&same, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap().value, 0.0);
    assert!(diversity(&two, 0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn mm_dist_examples() {
    let p = FeatureSet::new(DenseArray::new(vec![2, 2], vec![0.0, 0.0, 1.0, 1.0]).unwrap(), Provenance::Pred).unwrap();
    let t = FeatureSet::new(DenseArray::new(vec![2, 2], vec![3.0, 4.0, 1.0, 1.0]).unwrap(), Provenance::Text).unwrap();
    assert_eq!(mm_dist(&p, &t).unwrap(), 2.5);
    assert_eq!(mm_dist(&p, &p).unwrap(), 0.0);
    let short = FeatureSet::new(DenseArray::zeros(&[1, 2]), Provenance::Text).unwrap();
    assert!(mm_dist(&p, &short).is_err());
}

#[test]
fn mmodality_uses_disjoint_subsets() {
    let groups = vec![one_hot(20), one_hot(30)];
    let v = mmodality(&groups, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert!((v - 2f64.sqrt()).abs() < 1e-12);
    let flat = vec![FeatureSet::new(DenseArray::full(&[20, 4], 1.0), Provenance::Pred).unwrap()];
    assert_eq!(mmodality(&flat, &mut ChaCha8Rng::seed_from_u64(3)).unwrap(), 0.0);
    assert!(mmodality(&[one_hot(19)], &mut ChaCha8Rng::seed_from_u64(3)).is_err());
}

#[test]
fn r_precision_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = gaussian_set(64, &[0.0; 5], 4);
    assert_eq!(r_precision_top3(&p, &p, &mut rng).unwrap(), 1.0);
    // All text rows equal: every distance ties, and the stable sort keeps the
    // first three batch positions, so exactly 3 of 32 match.
    let tied = FeatureSet::new(DenseArray::zeros(&[64, 5]), Provenance::Text).unwrap();
    assert_eq!(r_precision_top3(&p, &tied, &mut rng).unwrap(), 3.0 / 32.0);
    // A remainder below a full batch is dropped.
    let p70 = gaussian_set(70, &[0.0; 5], 5);
    assert_eq!(r_precision_top3(&p70, &p70, &mut rng).unwrap(), 1.0);
    let p31 = gaussian_set(31, &[0.0; 5], 5);
    assert!(r_precision_top3(&p31, &p31, &mut rng).is_err());
}

fn motion_with_offset(layout: PoseLayout, frames: usize, offset: impl Fn(usize) -> [f64; 3]) -> MotionSequence {
    let d = layout.dim();
    let mut data = vec![0.0; frames * d];
    for f in 0..frames {
        let o = offset(f);
        for j in 1..layout.joints() {
            let cols = layout.joint_position(j).unwrap();
            for (a, c) in cols.enumerate() {
                data[f * d + c] = o[a];
            }
        }
        // Root channels and velocities do not enter the displacement errors.
        data[f * d] = 100.0 * f as f64;
    }
    MotionSequence::new(layout, DenseArray::new(vec![frames, d], data).unwrap(), None).unwrap()
}

#[test]
fn ade_fde_example() {
    let layout = PoseLayout::new(4).unwrap();
    let gt = motion_with_offset(layout, 5, |_| [0.0; 3]);
    let pred = motion_with_offset(layout, 5, |f| [3.0 * f as f64, 4.0 * f as f64, 0.0]);
    let (ade, fde) = ade_fde(&pred, &gt, &[2, 3, 4]).unwrap();
    assert!((ade - 15.0).abs() < 1e-12);
    assert!((fde - 20.0).abs() < 1e-12);
    assert_eq!(ade_fde(&gt, &gt, &[0, 1, 2, 3, 4]).unwrap(), (0.0, 0.0));
    assert!(ade_fde(&pred, &gt, &[]).is_err());
    assert!(ade_fde(&pred, &gt, &[5]).is_err());
}

#[test]
fn summary_interval() {
    let s = Summary::from_values(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.mean, 2.5);
    let sd = (5.0f64 / 3.0).sqrt();
    assert!((s.ci95 - 1.96 * sd / 2.0).abs() < 1e-12);
    assert_eq!(s.n_reps, 4);
    let r = repeat(20, |i| Ok(i as f64)).unwrap();
    assert_eq!(r.n_reps, 20);
    assert_eq!(r.mean, 9.5);
    assert_eq!(Summary::from_values(&[7.0]).ci95, 0.0);
}

fn small_dataset() -> Vec<MotionSequence> {
    gen_synthetic_dataset(&SyntheticDatasetSpec::new(DatasetFamily::SineWalker, 3, 10, 2, 8, 1)).unwrap()
}

#[test]
fn extractors_are_deterministic() {
    let data = small_dataset();
    let d = data[0].dim();
    let a = FeatureExtractor::random_projection(d, 8, 1).unwrap();
    let b = FeatureExtractor::random_projection(d, 8, 1).unwrap();
    let c = FeatureExtractor::random_projection(d, 8, 2).unwrap();
    assert_eq!(a.extract(&data, Provenance::Gt).unwrap(), b.extract(&data, Provenance::Gt).unwrap());
    assert_ne!(a.extract(&data, Provenance::Gt).unwrap(), c.extract(&data, Provenance::Gt).unwrap());
    assert_eq!(a.info().dim, 8);
    assert!(!a.info().comparable_to_published);

    let cfg = EncoderConfig { steps: 20, ..EncoderConfig::default() };
    let e1 = FeatureExtractor::train_encoder(&data, &cfg).unwrap();
    let e2 = FeatureExtractor::train_encoder(&data, &cfg).unwrap();
    let f = e1.extract(&data, Provenance::Pred).unwrap();
    assert_eq!(f, e2.extract(&data, Provenance::Pred).unwrap());
    assert_eq!(f.dim(), 16);
    let other = gen_synthetic_dataset(&SyntheticDatasetSpec::new(DatasetFamily::SineWalker, 4, 10, 2, 2, 1)).unwrap();
    assert!(e1.extract(&other, Provenance::Pred).is_err());
}

#[test]
fn pooled_statistics_of_constant_motion() {
    let layout = PoseLayout::new(2).unwrap();
    let values = DenseArray::new(vec![1, 23], (0..23).map(|i| i as f64).collect()).unwrap();
    let row = values.data().to_vec();
    let m = MotionSequence::new(layout, DenseArray::stack(&vec![values.reshape(&[23]).unwrap(); 6]).unwrap(), None).unwrap();
    let s = pooled_statistics(&m);
    assert_eq!(s.len(), 46);
    assert_eq!(&s[..23], &row[..]);
    assert!(s[23..].iter().all(|&v| v == 0.0));
}

#[test]
fn centroids_are_label_means() {
    let f = FeatureSet::new(DenseArray::new(vec![4, 1], vec![1.0, 3.0, 10.0, 20.0]).unwrap(), Provenance::Gt).unwrap();
    let c = label_centroids(&f, &[0, 0, 1, 1], 2).unwrap();
    assert_eq!(c.data(), &[2.0, 15.0]);
    assert!(label_centroids(&f, &[0, 0, 0, 0], 2).is_err());
    assert!(label_centroids(&f, &[0, 0, 1, 2], 2).is_err());
}

#[test]
fn report_serializes_named_entries() {
    let mut r = MetricsReport::default();
    let info = FeatureExtractor::random_projection(23, 4, 0).unwrap().info();
    r.insert("fid", Summary::from_values(&[1.0, 3.0]), &info);
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(json["fid"]["mean"], 2.0);
    assert_eq!(json["fid"]["n_reps"], 2);
    assert_eq!(json["fid"]["extractor"]["kind"], "random_projection");
}

#[test]
fn nfe_curve_with_exact_and_null_fields() {
    // Point data: every ground-truth motion is the same sequence.
    let data = gen_synthetic_dataset(&SyntheticDatasetSpec::new(DatasetFamily::Point, 2, 4, 1, 64, 0)).unwrap();
    let norm = Normalizer::fit(&data).unwrap();
    let layout = data[0].layout();
    let extractor = FeatureExtractor::random_projection(layout.dim(), 6, 0).unwrap();
    let labels = balanced_labels(64, 1);
    let sampler = SamplerConfig { seed: 3, ..SamplerConfig::default() };
    let steps = [1, 2, 10, 50];

    let oracle = SinglePointField { target: norm.normalize(data[0].values()) };
    let zero = ConstantField { value: DenseArray::zeros(&[4, layout.dim()]) };
    let gen_oracle = Generator { field: &oracle, normalizer: &norm, layout, frames: 4 };
    let gen_zero = Generator { field: &zero, normalizer: &norm, layout, frames: 4 };
    let exact = nfe_curve(&gen_oracle, &data, &extractor, &steps, &labels, &sampler).unwrap();
    let null = nfe_curve(&gen_zero, &data, &extractor, &steps, &labels, &sampler).unwrap();
    for (e, z) in exact.iter().zip(&null) {
        assert!(e.fid < 1e-8, "oracle at N={}: {}", e.steps, e.fid);
        assert!(z.fid > 0.1 && z.fid > 1e6 * e.fid, "zero field at N={}: {} vs {}", z.steps, z.fid, e.fid);
        assert_eq!(e.nfe, e.steps);
    }
    // The zero field leaves the noise untouched, so FID does not depend on N.
    assert!(null.iter().all(|r| r.fid == null[0].fid));
}
