mod common;

use common::oracles::*;
use common::*;
use disco::signatures::*;
use disco::store::PredictionTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn anisotropic_rows(seed: u64, m: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            (0..d)
                .map(|j| rng.random_range(-1.0..1.0) * (d - j) as f64)
                .collect()
        })
        .collect()
}

#[test]
fn pca_matches_covariance_eigenvectors() {
    for seed in 0..5 {
        let rows = anisotropic_rows(seed, 30, 5);
        let pca = pca_fit(&rows, 3).unwrap();
        let eig = jacobi_eigen(covariance(&rows));
        for j in 0..3 {
            assert!(close(pca.explained_variance[j], eig[j].0, 1e-6 * eig[0].0));
            // Same direction up to sign.
            assert!(close(dot(pca.component(j), &eig[j].1).abs(), 1.0, 1e-6));
        }
        let total: f64 = eig.iter().map(|e| e.0).sum();
        assert!(close(pca.total_variance, total, 1e-9 * total));
    }
}

#[test]
fn components_are_orthonormal_with_sign_convention() {
    let rows = anisotropic_rows(9, 20, 6);
    let pca = pca_fit(&rows, 4).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(close(dot(pca.component(i), pca.component(j)), want, 1e-10));
        }
        let c = pca.component(i);
        let pivot = (0..c.len())
            .max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(b.cmp(&a)))
            .unwrap();
        assert!(c[pivot] > 0.0);
    }
}

#[test]
fn full_rank_projection_preserves_distances() {
    let rows = anisotropic_rows(1, 12, 4);
    let pca = pca_fit(&rows, 4).unwrap();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| pca.transform(r).unwrap()).collect();
    for i in 0..12 {
        for j in 0..12 {
            let dx: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let dz: f64 = z[i].iter().zip(&z[j]).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(close(dx, dz, 1e-9 * dx.max(1.0)));
        }
        let back = pca.inverse(&z[i]).unwrap();
        for (a, b) in back.iter().zip(&rows[i]) {
            assert!(close(*a, *b, 1e-9));
        }
    }
}

#[test]
fn projection_is_affine() {
    let rows = anisotropic_rows(2, 15, 5);
    let pca = pca_fit(&rows, 2).unwrap();
    let (a, b) = (&rows[0], &rows[1]);
    let t = 0.3;
    let mix: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| t * x + (1.0 - t) * y)
        .collect();
    let (za, zb, zm) = (
        pca.transform(a).unwrap(),
        pca.transform(b).unwrap(),
        pca.transform(&mix).unwrap(),
    );
    for j in 0..2 {
        assert!(close(zm[j], t * za[j] + (1.0 - t) * zb[j], 1e-12));
    }
    assert!(pca
        .transform(&pca.mean)
        .unwrap()
        .iter()
        .all(|v| v.abs() < 1e-12));
}

#[test]
fn pca_rejects_bad_inputs_and_caps_rank() {
    let rows = anisotropic_rows(3, 6, 4);
    assert!(pca_fit(&rows, 0).is_err());
    assert!(pca_fit(&rows, 5).is_err());
    assert!(pca_fit(&rows[..1], 1).is_err());
    // Rank-one data: every row is a multiple of one direction.
    let line: Vec<Vec<f64>> = (0..6)
        .map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)])
        .collect();
    assert_eq!(pca_fit(&line, 3).unwrap().output_dim(), 1);
    assert_eq!(default_pca_dims(500, 1000), 256);
    assert_eq!(default_pca_dims(40, 1000), 40);
    assert_eq!(default_pca_dims(40, 12), 12);
}

#[test]
fn pca_and_signatures_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let rows = anisotropic_rows(4, 10, 5);
    let pca = pca_fit(&rows, 3).unwrap();
    let (p, s) = (dir.path().join("pca.dten"), dir.path().join("pca.json"));
    pca.save(&p, &s).unwrap();
    assert_eq!(PcaProjection::load(&p, &s).unwrap(), pca);
    let set = SignatureSet {
        mode: SignatureMode::Onehot,
        model_ids: (0..10).map(|i| format!("m{i}")).collect(),
        rows,
    };
    let (p, s) = (dir.path().join("sig.dten"), dir.path().join("sig.json"));
    set.save(&p, &s).unwrap();
    assert_eq!(SignatureSet::load(&p, &s).unwrap(), set);
}

#[test]
fn signature_modes_follow_anchor_order() {
    let t = PredictionTensor::from_rows(
        "m",
        &[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.3, 0.6],
            vec![0.2, 0.5, 0.3],
        ],
    )
    .unwrap();
    let labels = [0, 1, 1];
    let idx = [2, 0];
    let probs = build_signature(&t, &idx, SignatureMode::Probs, &labels).unwrap();
    assert_eq!(probs.vector, [t.row(2), t.row(0)].concat());
    let onehot = build_signature(&t, &idx, SignatureMode::Onehot, &labels).unwrap();
    assert_eq!(onehot.vector, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    let corr = build_signature(&t, &[0, 1, 2], SignatureMode::Correctness, &labels).unwrap();
    assert_eq!(corr.vector, vec![1.0, 0.0, 1.0]);
    assert!(build_signature(&t, &[3], SignatureMode::Probs, &labels).is_err());
    assert_eq!(SignatureMode::Probs.width(7, 3), 21);
    assert_eq!(SignatureMode::Correctness.width(7, 3), 7);
}
