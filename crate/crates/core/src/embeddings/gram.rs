//! Synthesis of command vectors with prescribed pairwise cosines.
//!
//! The target Gram matrix is repaired to the nearest PSD matrix with unit
//! diagonal (eigenvalue clipping + diagonal renormalization), factorized, and
//! the factor rows are carried into the full embedding dimension through a
//! seeded orthonormal map so every coordinate is populated.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CommandVector, EmbedError, GramSpec, Provenance};

/// What the PSD repair changed. `max_abs_delta` is zero (to rounding) for
/// inputs that were already PSD.
#[derive(Debug, Clone, Copy)]
pub struct PsdRepair {
    pub min_eigenvalue_before: f64,
    pub max_abs_delta: f64,
}

/// Clips negative eigenvalues to zero and renormalizes the diagonal back to
/// one. Output is symmetric PSD with unit diagonal.
pub fn nearest_psd_repair(gram: &[Vec<f64>]) -> (Vec<Vec<f64>>, PsdRepair) {
    let n = gram.len();
    let a = DMatrix::from_fn(n, n, |i, j| gram[i][j]);
    let eig = a.clone().symmetric_eigen();
    let min_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let clipped = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0)));
    let q = &eig.eigenvectors;
    let repaired = q * DMatrix::from_diagonal(&clipped) * q.transpose();

    // D^{-1/2} A D^{-1/2}, then force exact symmetry and unit diagonal.
    let mut scale = vec![1.0f64; n];
    for i in 0..n {
        let d = repaired[(i, i)];
        scale[i] = if d > 1e-15 { d.sqrt() } else { 1.0 };
    }
    let mut out = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j {
                1.0
            } else {
                let v = repaired[(i, j)] / (scale[i] * scale[j]);
                let v = 0.5 * (v + repaired[(j, i)] / (scale[i] * scale[j]));
                v.clamp(-1.0, 1.0)
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }

    let mut max_abs_delta = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_abs_delta = max_abs_delta.max((out[i][j] - gram[i][j]).abs());
        }
    }
    (
        out,
        PsdRepair {
            min_eigenvalue_before: min_eig,
            max_abs_delta,
        },
    )
}

/// A `dim x n` matrix with orthonormal columns, drawn from `seed`.
fn orthonormal_map(dim: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, n, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}

/// Unit vectors in `R^dim` whose pairwise cosines equal the (repaired) Gram
/// entries. Returns the vectors together with the repair report.
pub fn synthesize_from_gram(
    spec: &GramSpec,
    dim: usize,
    seed: u64,
) -> Result<(Vec<CommandVector>, PsdRepair), EmbedError> {
    let n = spec.n();
    if dim < n {
        return Err(EmbedError::DimTooSmall { dim, n });
    }
    let (repaired, repair) = nearest_psd_repair(spec.entries());

    let a = DMatrix::from_fn(n, n, |i, j| repaired[i][j]);
    let eig = a.symmetric_eigen();
    let sqrt_eig = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    // Row i of `factors` holds word i's coordinates in the n-dim factor space.
    let factors = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_eig);

    let q = orthonormal_map(dim, n, seed);
    let mut out = Vec::with_capacity(n);
    for (i, label) in spec.labels().iter().enumerate() {
        let f = factors.row(i).transpose();
        let mut v = &q * f;
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        out.push(CommandVector::new(
            label.clone(),
            v.iter().cloned().collect(),
            Provenance::Synthesized,
        )?);
    }
    Ok((out, repair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::cosine;

    fn identity_gram(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    /// Independent eigen-clipping oracle: cyclic Jacobi rotations, no
    /// nalgebra involvement.
    mod jacobi {
        pub fn eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
            let n = a.len();
            let mut m: Vec<Vec<f64>> = a.to_vec();
            let mut v = vec![vec![0.0; n]; n];
            for (i, row) in v.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            for _sweep in 0..100 {
                let mut off = 0.0;
                for p in 0..n {
                    for q in (p + 1)..n {
                        off += m[p][q] * m[p][q];
                    }
                }
                if off < 1e-30 {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        if m[p][q].abs() < 1e-300 {
                            continue;
                        }
                        let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let c = 1.0 / (t * t + 1.0).sqrt();
                        let s = t * c;
                        for k in 0..n {
                            let (mkp, mkq) = (m[k][p], m[k][q]);
                            m[k][p] = c * mkp - s * mkq;
                            m[k][q] = s * mkp + c * mkq;
                        }
                        for k in 0..n {
                            let (mpk, mqk) = (m[p][k], m[q][k]);
                            m[p][k] = c * mpk - s * mqk;
                            m[q][k] = s * mpk + c * mqk;
                        }
                        for k in 0..n {
                            let (vkp, vkq) = (v[k][p], v[k][q]);
                            v[k][p] = c * vkp - s * vkq;
                            v[k][q] = s * vkp + c * vkq;
                        }
                    }
                }
            }
            let eigs: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
            (eigs, v)
        }

        /// Clip + renormalize, mirroring the contract under test but built
        /// on the Jacobi solver above.
        pub fn clip_repair(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
            let n = a.len();
            let (eigs, vecs) = eigen(a);
            let mut rep = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for (k, &e) in eigs.iter().enumerate() {
                        s += vecs[i][k] * e.max(0.0) * vecs[j][k];
                    }
                    rep[i][j] = s;
                }
            }
            let scale: Vec<f64> = (0..n).map(|i| rep[i][i].sqrt()).collect();
            let mut out = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    out[i][j] = if i == j {
                        1.0
                    } else {
                        rep[i][j] / (scale[i] * scale[j])
                    };
                }
            }
            out
        }
    }

    #[test]
    fn psd_input_is_a_fixed_point() {
        let g = vec![
            vec![1.0, 0.3, 0.1],
            vec![0.3, 1.0, -0.2],
            vec![0.1, -0.2, 1.0],
        ];
        let (out, rep) = nearest_psd_repair(&g);
        for i in 0..3 {
            for j in 0..3 {
                assert!((out[i][j] - g[i][j]).abs() < 1e-12);
            }
        }
        assert!(rep.max_abs_delta < 1e-12);
        assert!(rep.min_eigenvalue_before > 0.0);
    }

    #[test]
    fn identity_maps_to_identity() {
        let g = identity_gram(4);
        let (out, _) = nearest_psd_repair(&g);
        for i in 0..4 {
            for j in 0..4 {
                assert!((out[i][j] - g[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_input_becomes_psd_with_unit_diagonal() {
        let g = vec![vec![1.0, 1.2], vec![1.2, 1.0]];
        let (out, rep) = nearest_psd_repair(&g);
        assert!(rep.min_eigenvalue_before < 0.0);
        assert_eq!(out[0][0], 1.0);
        assert_eq!(out[1][1], 1.0);
        // 2x2 correlation matrix is PSD iff |off-diagonal| <= 1
        assert!(out[0][1].abs() <= 1.0);
        assert!((out[0][1] - out[1][0]).abs() < 1e-15);
        // oracle agreement
        let oracle = jacobi::clip_repair(&g);
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[i][j] - oracle[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn repair_delta_matches_jacobi_oracle() {
        // min eigenvalue -0.01: [[1, a], [a, 1]] has eigenvalues 1 +/- a
        let a = 1.01;
        let g = vec![vec![1.0, a], vec![a, 1.0]];
        let (out, rep) = nearest_psd_repair(&g);
        let oracle = jacobi::clip_repair(&g);
        let mut oracle_delta = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[i][j] - oracle[i][j]).abs() < 1e-9);
                oracle_delta = oracle_delta.max((oracle[i][j] - g[i][j]).abs());
            }
        }
        assert!((rep.max_abs_delta - oracle_delta).abs() < 1e-9);
        assert!((rep.min_eigenvalue_before - (1.0 - a)).abs() < 1e-9);
    }

    #[test]
    fn orthonormal_gram_gives_orthonormal_vectors() {
        let spec = GramSpec::new(vec!["a".into(), "b".into()], identity_gram(2)).unwrap();
        let (vs, _) = synthesize_from_gram(&spec, 4, 7).unwrap();
        assert_eq!(vs.len(), 2);
        for v in &vs {
            let norm: f64 = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert_eq!(v.dim(), 4);
        }
        let c = cosine(&vs[0].values, &vs[1].values).unwrap();
        assert!(c.abs() < 1e-9);
    }

    #[test]
    fn synthesized_cosines_match_gram() {
        let g = vec![
            vec![1.0, 0.42, 0.13],
            vec![0.42, 1.0, 0.17],
            vec![0.13, 0.17, 1.0],
        ];
        let spec = GramSpec::new(vec!["f".into(), "b".into(), "s".into()], g.clone()).unwrap();
        let (vs, rep) = synthesize_from_gram(&spec, 300, 11).unwrap();
        assert!(rep.max_abs_delta < 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                let c = cosine(&vs[i].values, &vs[j].values).unwrap();
                assert!(
                    (c - g[i][j]).abs() < 1e-6,
                    "pair ({i},{j}): {c} vs {}",
                    g[i][j]
                );
            }
        }
        // all coordinates populated
        for v in &vs {
            let nonzero = v.values.iter().filter(|x| x.abs() > 1e-12).count();
            assert!(nonzero > 290);
        }
    }

    #[test]
    fn synthesis_is_seed_deterministic() {
        let spec = GramSpec::new(vec!["a".into(), "b".into()], identity_gram(2)).unwrap();
        let (v1, _) = synthesize_from_gram(&spec, 16, 3).unwrap();
        let (v2, _) = synthesize_from_gram(&spec, 16, 3).unwrap();
        assert_eq!(v1, v2);
        let (v3, _) = synthesize_from_gram(&spec, 16, 4).unwrap();
        assert_ne!(v1, v3);
    }

    #[test]
    fn dim_smaller_than_n_errors() {
        let spec = GramSpec::new(vec!["a".into(), "b".into()], identity_gram(2)).unwrap();
        assert!(matches!(
            synthesize_from_gram(&spec, 1, 0),
            Err(EmbedError::DimTooSmall { .. })
        ));
    }
}
