//! Command-vector acquisition: word2vec binary I/O, Gram-constrained
//! synthesis, cosine similarity, and the permuted control treatment.

mod gram;
mod word2vec;

pub use gram::{nearest_psd_repair, synthesize_from_gram, PsdRepair};
pub use word2vec::{parse_word2vec_bin, write_word2vec_bin};

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("malformed header at byte {offset}: {detail}")]
    MalformedHeader { offset: usize, detail: String },
    #[error("truncated record for word index {word_index} at byte {offset}")]
    Truncated { word_index: usize, offset: usize },
    #[error(
        "vocab count mismatch at byte {offset}: header declared {declared}, stream holds {found}"
    )]
    CountMismatch {
        declared: usize,
        found: usize,
        offset: usize,
    },
    #[error("word {index} ({word:?}) duplicates an earlier entry")]
    DuplicateWord { word: String, index: usize },
    #[error("word {word:?} contains a byte reserved by the binary format")]
    InvalidWord { word: String },
    #[error("unknown word {word:?}")]
    UnknownWord { word: String },
    #[error("vector length {got} does not match table dimension {want}")]
    DimMismatch { want: usize, got: usize },
    #[error("cosine of zero-norm vector")]
    ZeroNorm,
    #[error("cosine length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("non-finite entry in vector {label:?}")]
    NonFinite { label: String },
    #[error("gram matrix invalid: {0}")]
    BadGram(String),
    #[error("embedding dimension {dim} is smaller than the {n} requested vectors")]
    DimTooSmall { dim: usize, n: usize },
}

/// How a command vector came to be; the control treatment requires every
/// vector to be `Permuted`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Loaded,
    Synthesized,
    Permuted,
}

/// A labeled command vector, fed serially into the controller's auditory
/// neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandVector {
    pub label: String,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl CommandVector {
    /// Builds a vector, rejecting NaN/inf entries.
    pub fn new(
        label: impl Into<String>,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, EmbedError> {
        let label = label.into();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { label });
        }
        Ok(Self {
            label,
            values,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A word → vector table. Vectors are stored in the file's single-precision
/// form so the binary format round-trips byte-exactly.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Appends an entry. Words must be unique and free of the format's
    /// delimiter bytes (space, newline).
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<(), EmbedError> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimMismatch {
                want: self.dim,
                got: vector.len(),
            });
        }
        if word.is_empty() || word.bytes().any(|b| b == b' ' || b == b'\n') {
            return Err(EmbedError::InvalidWord { word });
        }
        if self.index.contains_key(&word) {
            let index = self.words.len();
            return Err(EmbedError::DuplicateWord { word, index });
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn raw_vector(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn raw_vector_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// The stored vector for `word`, widened to f64, with `Loaded` provenance.
    pub fn lookup(&self, word: &str) -> Result<CommandVector, EmbedError> {
        let raw = self
            .raw_vector(word)
            .ok_or_else(|| EmbedError::UnknownWord {
                word: word.to_string(),
            })?;
        CommandVector::new(
            word,
            raw.iter().map(|&v| v as f64).collect(),
            Provenance::Loaded,
        )
    }
}

/// Cosine similarity dot(u,v) / (|u||v|).
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::LengthMismatch {
            a: u.len(),
            b: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(dot / (nu * nv))
}

/// A target cosine-similarity matrix: symmetric, unit diagonal, entries in
/// [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpec {
    labels: Vec<String>,
    gram: Vec<Vec<f64>>,
}

impl GramSpec {
    pub fn new(labels: Vec<String>, gram: Vec<Vec<f64>>) -> Result<Self, EmbedError> {
        let n = labels.len();
        if n == 0 {
            return Err(EmbedError::BadGram("empty label set".into()));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for l in &labels {
                if !seen.insert(l) {
                    return Err(EmbedError::BadGram(format!("duplicate label {l:?}")));
                }
            }
        }
        if gram.len() != n || gram.iter().any(|row| row.len() != n) {
            return Err(EmbedError::BadGram(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            if (gram[i][i] - 1.0).abs() > 1e-12 {
                return Err(EmbedError::BadGram(format!(
                    "diagonal entry [{i}][{i}] = {} is not 1",
                    gram[i][i]
                )));
            }
            for j in 0..n {
                let v = gram[i][j];
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(EmbedError::BadGram(format!(
                        "entry [{i}][{j}] = {v} out of [-1,1]"
                    )));
                }
                if (v - gram[j][i]).abs() > 1e-12 {
                    return Err(EmbedError::BadGram(format!(
                        "asymmetric at [{i}][{j}]: {v} vs {}",
                        gram[j][i]
                    )));
                }
            }
        }
        Ok(Self { labels, gram })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gram[i][j]
    }

    /// Parses the CSV form: one header line of comma-separated labels, then
    /// n rows of n comma-separated values.
    pub fn from_csv(text: &str) -> Result<Self, EmbedError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EmbedError::BadGram("empty gram file".into()))?;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut gram = Vec::with_capacity(labels.len());
        for (i, line) in lines.enumerate() {
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row =
                row.map_err(|e| EmbedError::BadGram(format!("row {i}: unparseable value: {e}")))?;
            gram.push(row);
        }
        Self::new(labels, gram)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        for row in &self.gram {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// The index permutation drawn for `seed`: a uniform Fisher-Yates shuffle of
/// `0..len`, fully determined by the seed.
pub fn permutation(seed: u64, len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Reorders the entries of `v` by the permutation drawn for `seed`. The value
/// multiset is untouched; only the ordering changes.
pub fn permute(v: &CommandVector, seed: u64) -> CommandVector {
    let perm = permutation(seed, v.values.len());
    let values = perm.iter().map(|&p| v.values[p]).collect();
    CommandVector {
        label: v.label.clone(),
        values,
        provenance: Provenance::Permuted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_of(vals: &[f64]) -> CommandVector {
        CommandVector::new("w", vals.to_vec(), Provenance::Synthesized).unwrap()
    }

    #[test]
    fn cosine_orthogonal() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_self_is_one() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_scale_invariant() {
        let u = [1.0, 2.0, -0.5];
        let double: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        assert!((cosine(&double, &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_rejects_zero_norm() {
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbedError::ZeroNorm)
        ));
    }

    #[test]
    fn cosine_rejects_length_mismatch() {
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(EmbedError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn lookup_returns_inserted_vector_exactly() {
        let mut t = EmbeddingTable::new(3);
        t.insert("go", &[0.5f32, -1.25, 3.0]).unwrap();
        let v = t.lookup("go").unwrap();
        assert_eq!(v.values, vec![0.5, -1.25, 3.0]);
        assert_eq!(v.provenance, Provenance::Loaded);
    }

    #[test]
    fn lookup_unknown_word_errors() {
        let t = EmbeddingTable::new(2);
        match t.lookup("qzx") {
            Err(EmbedError::UnknownWord { word }) => assert_eq!(word, "qzx"),
            other => panic!("expected unknown-word error, got {other:?}"),
        }
    }

    #[test]
    fn insert_rejects_duplicates_and_bad_words() {
        let mut t = EmbeddingTable::new(1);
        t.insert("a", &[1.0]).unwrap();
        assert!(matches!(
            t.insert("a", &[2.0]),
            Err(EmbedError::DuplicateWord { .. })
        ));
        assert!(matches!(
            t.insert("b c", &[1.0]),
            Err(EmbedError::InvalidWord { .. })
        ));
    }

    #[test]
    fn permute_preserves_multiset() {
        let v = vec_of(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let p = permute(&v, 99);
        let mut a = v.values.clone();
        let mut b = p.values.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert_eq!(p.provenance, Provenance::Permuted);
    }

    #[test]
    fn permute_is_deterministic() {
        let v = vec_of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(permute(&v, 7), permute(&v, 7));
    }

    #[test]
    fn inverse_permutation_recovers_input() {
        let v = vec_of(&[0.25, -1.5, 2.0, 7.0, -0.125]);
        let seed = 12345;
        let p = permute(&v, seed);
        let inv = invert_permutation(&permutation(seed, v.values.len()));
        let recovered: Vec<f64> = inv.iter().map(|&i| p.values[i]).collect();
        assert_eq!(recovered, v.values);
    }

    #[test]
    fn permutation_is_a_bijection() {
        let perm = permutation(5, 300);
        let mut seen = vec![false; 300];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
    }

    #[test]
    fn gram_spec_rejects_bad_input() {
        assert!(GramSpec::new(vec!["a".into()], vec![vec![0.9]]).is_err());
        assert!(GramSpec::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.5], vec![0.4, 1.0]],
        )
        .is_err());
        assert!(GramSpec::new(
            vec!["a".into(), "a".into()],
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        )
        .is_err());
    }

    #[test]
    fn gram_csv_round_trip() {
        let g = GramSpec::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 0.25], vec![0.25, 1.0]],
        )
        .unwrap();
        let parsed = GramSpec::from_csv(&g.to_csv()).unwrap();
        assert_eq!(parsed, g);
    }
}
