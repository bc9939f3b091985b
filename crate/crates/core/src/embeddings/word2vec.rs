//! word2vec binary format.
//!
//! Layout: ASCII header `"<vocab_count> <dim>\n"`, then per entry the word
//! bytes terminated by a single 0x20 space, followed by `dim` IEEE 754
//! single-precision little-endian values, optionally followed by 0x0A. The
//! writer always emits the trailing 0x0A, so parse ∘ write is the identity
//! on files in writer form.

use std::io::{Read, Write};

use super::{EmbedError, EmbeddingTable};

fn read_to_end(mut stream: impl Read) -> Result<Vec<u8>, EmbedError> {
    let mut buf = Vec::new();
    stream
        .read_to_end(&mut buf)
        .map_err(|e| EmbedError::MalformedHeader {
            offset: 0,
            detail: format!("read failed: {e}"),
        })?;
    Ok(buf)
}

fn parse_ascii_usize(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, EmbedError> {
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(EmbedError::MalformedHeader {
            offset: start,
            detail: format!("expected {what}"),
        });
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse::<usize>()
        .map_err(|e| EmbedError::MalformedHeader {
            offset: start,
            detail: format!("{what}: {e}"),
        })
}

/// Parses a word2vec binary stream into an [`EmbeddingTable`]. Errors carry
/// the byte offset at which parsing failed.
pub fn parse_word2vec_bin(stream: impl Read) -> Result<EmbeddingTable, EmbedError> {
    let bytes = read_to_end(stream)?;
    let mut pos = 0usize;

    let count = parse_ascii_usize(&bytes, &mut pos, "vocab count")?;
    if pos >= bytes.len() || bytes[pos] != b' ' {
        return Err(EmbedError::MalformedHeader {
            offset: pos,
            detail: "expected single space between vocab count and dimension".into(),
        });
    }
    pos += 1;
    let dim = parse_ascii_usize(&bytes, &mut pos, "dimension")?;
    if dim == 0 {
        return Err(EmbedError::MalformedHeader {
            offset: pos,
            detail: "dimension must be >= 1".into(),
        });
    }
    if pos >= bytes.len() || bytes[pos] != b'\n' {
        return Err(EmbedError::MalformedHeader {
            offset: pos,
            detail: "expected newline terminating the header".into(),
        });
    }
    pos += 1;

    let mut table = EmbeddingTable::new(dim);
    let mut vector = vec![0f32; dim];
    for word_index in 0..count {
        if pos >= bytes.len() {
            return Err(EmbedError::CountMismatch {
                declared: count,
                found: word_index,
                offset: pos,
            });
        }
        let word_start = pos;
        while pos < bytes.len() && bytes[pos] != b' ' {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(EmbedError::Truncated {
                word_index,
                offset: word_start,
            });
        }
        let word = String::from_utf8_lossy(&bytes[word_start..pos]).into_owned();
        pos += 1; // the 0x20 terminator

        if pos + 4 * dim > bytes.len() {
            return Err(EmbedError::Truncated {
                word_index,
                offset: pos,
            });
        }
        for v in vector.iter_mut() {
            *v = f32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
            pos += 4;
        }
        if pos < bytes.len() && bytes[pos] == b'\n' {
            pos += 1;
        }

        table.insert(word, &vector).map_err(|e| match e {
            EmbedError::DuplicateWord { word, .. } => EmbedError::DuplicateWord {
                word,
                index: word_index,
            },
            other => other,
        })?;
    }

    if pos != bytes.len() {
        return Err(EmbedError::CountMismatch {
            declared: count,
            found: count + 1, // at least one extra record begins here
            offset: pos,
        });
    }
    Ok(table)
}

/// Writes `table` in the binary format, trailing 0x0A included per entry.
pub fn write_word2vec_bin(table: &EmbeddingTable, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    for (i, word) in table.words().enumerate() {
        out.write_all(word.as_bytes())?;
        out.write_all(b" ")?;
        for v in table.raw_vector_at(i) {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds fixture bytes by hand, independent of the writer.
    fn fixture(words: &[(&str, Vec<f32>)], dim: usize) -> Vec<u8> {
        let mut bytes = format!("{} {}\n", words.len(), dim).into_bytes();
        for (w, v) in words {
            bytes.extend_from_slice(w.as_bytes());
            bytes.push(b' ');
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            bytes.push(b'\n');
        }
        bytes
    }

    #[test]
    fn parses_basic_header_and_records() {
        let words: Vec<(&str, Vec<f32>)> = vec![
            ("alpha", vec![1.0, 2.0, 3.0, 4.0]),
            ("beta", vec![-1.0, 0.5, 0.25, 0.0]),
            ("gamma", vec![9.0, 8.0, 7.0, 6.0]),
        ];
        let table = parse_word2vec_bin(fixture(&words, 4).as_slice()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.dim(), 4);
        assert_eq!(table.raw_vector("beta").unwrap(), &[-1.0, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn round_trips_byte_exactly() {
        let words: Vec<(String, Vec<f32>)> = (0..10)
            .map(|i| {
                let w = format!("word{i}");
                let v: Vec<f32> = (0..8).map(|j| (i * 8 + j) as f32 * 0.37 - 11.0).collect();
                (w, v)
            })
            .collect();
        let refs: Vec<(&str, Vec<f32>)> =
            words.iter().map(|(w, v)| (w.as_str(), v.clone())).collect();
        let bytes = fixture(&refs, 8);
        let table = parse_word2vec_bin(bytes.as_slice()).unwrap();
        let mut rewritten = Vec::new();
        write_word2vec_bin(&table, &mut rewritten).unwrap();
        assert_eq!(rewritten, bytes);
    }

    #[test]
    fn accepts_records_without_trailing_newline() {
        let mut bytes = b"1 2\nab ".to_vec();
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.5f32).to_le_bytes());
        let table = parse_word2vec_bin(bytes.as_slice()).unwrap();
        assert_eq!(table.raw_vector("ab").unwrap(), &[1.5, -2.5]);
    }

    #[test]
    fn truncated_mid_record_names_the_word_index() {
        let words: Vec<(&str, Vec<f32>)> = vec![("one", vec![1.0, 2.0]), ("two", vec![3.0, 4.0])];
        let mut bytes = fixture(&words, 2);
        bytes.truncate(bytes.len() - 5); // chop into the second record's floats
        match parse_word2vec_bin(bytes.as_slice()) {
            Err(EmbedError::Truncated { word_index, .. }) => assert_eq!(word_index, 1),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn declared_count_larger_than_stream_errors() {
        let words: Vec<(&str, Vec<f32>)> = vec![("solo", vec![1.0])];
        let mut bytes = fixture(&words, 1);
        bytes[0] = b'3'; // claim 3 entries
        match parse_word2vec_bin(bytes.as_slice()) {
            Err(EmbedError::CountMismatch {
                declared, found, ..
            }) => {
                assert_eq!(declared, 3);
                assert_eq!(found, 1);
            }
            other => panic!("expected count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_after_declared_count_error() {
        let words: Vec<(&str, Vec<f32>)> = vec![("one", vec![1.0]), ("two", vec![2.0])];
        let mut bytes = fixture(&words, 1);
        bytes[0] = b'1'; // claim 1 entry, leave the second in the stream
        assert!(matches!(
            parse_word2vec_bin(bytes.as_slice()),
            Err(EmbedError::CountMismatch { declared: 1, .. })
        ));
    }

    #[test]
    fn malformed_header_reports_offset() {
        match parse_word2vec_bin(b"x 4\n".as_slice()) {
            Err(EmbedError::MalformedHeader { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected header error, got {other:?}"),
        }
        assert!(matches!(
            parse_word2vec_bin(b"3 0\n".as_slice()),
            Err(EmbedError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_word2vec_bin(b"3 4".as_slice()),
            Err(EmbedError::MalformedHeader { .. })
        ));
    }
}
