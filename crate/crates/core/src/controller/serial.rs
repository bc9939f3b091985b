//! Genome text format: a self-describing document that round-trips f64
//! weights exactly (shortest-decimal form re-parses to the same bits).
//!
//! ```text
//! genome v1
//! morphology quadruped
//! hidden 5
//! w_ah 1 5
//! <5 values>
//! w_hh 5 5
//! <5 rows of 5 values>
//! w_sh 4 5
//! ...
//! w_hm 5 8
//! ...
//! ```

use thiserror::Error;

use super::{Genome, MorphologyId, HIDDEN};

#[derive(Debug, Error)]
pub enum GenomeParseError {
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("unknown morphology {0:?}")]
    UnknownMorphology(String),
    #[error("block {block}: expected {want_rows}x{want_cols}, got {got_rows}x{got_cols}")]
    ShapeMismatch {
        block: &'static str,
        want_rows: usize,
        want_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
}

fn write_block(out: &mut String, name: &str, rows: usize, cols: usize, data: &[f64]) {
    out.push_str(&format!("{name} {rows} {cols}\n"));
    for r in 0..rows {
        let row: Vec<String> = (0..cols)
            .map(|c| format!("{}", data[r * cols + c]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub fn write_genome(genome: &Genome) -> String {
    let mut out = String::new();
    out.push_str("genome v1\n");
    out.push_str(&format!("morphology {}\n", genome.morphology.as_str()));
    out.push_str(&format!("hidden {HIDDEN}\n"));
    write_block(&mut out, "w_ah", 1, HIDDEN, &genome.w_ah);
    write_block(&mut out, "w_hh", HIDDEN, HIDDEN, &genome.w_hh);
    write_block(&mut out, "w_sh", genome.n_sensors(), HIDDEN, &genome.w_sh);
    write_block(&mut out, "w_hm", HIDDEN, genome.n_motors(), &genome.w_hm);
    out
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, GenomeParseError> {
        loop {
            let line = self.iter.next().ok_or(GenomeParseError::Malformed {
                line: self.line_no,
                detail: "unexpected end of document".into(),
            })?;
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Ok(line.trim());
            }
        }
    }
}

fn read_block(
    lines: &mut Lines,
    name: &'static str,
    want_rows: usize,
    want_cols: usize,
) -> Result<Vec<f64>, GenomeParseError> {
    let header = lines.next()?;
    let mut parts = header.split_whitespace();
    let got_name = parts.next().unwrap_or("");
    let rows: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(usize::MAX);
    let cols: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(usize::MAX);
    if got_name != name {
        return Err(GenomeParseError::Malformed {
            line: lines.line_no,
            detail: format!("expected block {name:?}, found {got_name:?}"),
        });
    }
    if rows != want_rows || cols != want_cols {
        return Err(GenomeParseError::ShapeMismatch {
            block: name,
            want_rows,
            want_cols,
            got_rows: rows,
            got_cols: cols,
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line_no = lines.line_no + 1;
        let row = lines.next()?;
        let values: Result<Vec<f64>, _> =
            row.split_whitespace().map(|s| s.parse::<f64>()).collect();
        let values = values.map_err(|e| GenomeParseError::Malformed {
            line: line_no,
            detail: format!("bad weight value: {e}"),
        })?;
        if values.len() != cols {
            return Err(GenomeParseError::ShapeMismatch {
                block: name,
                want_rows: rows,
                want_cols: cols,
                got_rows: rows,
                got_cols: values.len(),
            });
        }
        data.extend(values);
    }
    Ok(data)
}

pub fn parse_genome(text: &str) -> Result<Genome, GenomeParseError> {
    let mut lines = Lines {
        iter: text.lines(),
        line_no: 0,
    };
    let magic = lines.next()?;
    if magic != "genome v1" {
        return Err(GenomeParseError::Malformed {
            line: lines.line_no,
            detail: format!("expected \"genome v1\", found {magic:?}"),
        });
    }
    let morph_line = lines.next()?;
    let morph_name = morph_line
        .strip_prefix("morphology ")
        .ok_or(GenomeParseError::Malformed {
            line: lines.line_no,
            detail: "expected morphology line".into(),
        })?;
    let morphology = MorphologyId::parse(morph_name)
        .ok_or_else(|| GenomeParseError::UnknownMorphology(morph_name.to_string()))?;
    let hidden_line = lines.next()?;
    if hidden_line != format!("hidden {HIDDEN}") {
        return Err(GenomeParseError::Malformed {
            line: lines.line_no,
            detail: format!("expected \"hidden {HIDDEN}\", found {hidden_line:?}"),
        });
    }
    let iface = morphology.interface();
    let w_ah = read_block(&mut lines, "w_ah", 1, HIDDEN)?;
    let w_hh = read_block(&mut lines, "w_hh", HIDDEN, HIDDEN)?;
    let w_sh = read_block(&mut lines, "w_sh", iface.n_sensors, HIDDEN)?;
    let w_hm = read_block(&mut lines, "w_hm", HIDDEN, iface.n_motors)?;
    Ok(Genome {
        morphology,
        w_ah,
        w_hh,
        w_sh,
        w_hm,
    })
}
