//! Versioned text checkpoints.
//!
//! ```text
//! llwlc-checkpoint v1
//! pool_k=10
//! <key=value config lines>
//! tensor block0.filter.w1 32 1
//! <rows*cols values, column-major, space separated>
//! ...
//! ```

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{NetError, Result};
use crate::model::{Block, FilterMlp, SpectralModel};

pub const CHECKPOINT_MAGIC: &str = "llwlc-checkpoint v1";

/// `header` is echoed verbatim; it must consist of `key=value` lines.
pub fn write_checkpoint(model: &SpectralModel, header: &str) -> String {
    let mut out = format!("{CHECKPOINT_MAGIC}\npool_k={}\n", model.pool_k);
    for line in header.lines().filter(|l| !l.trim().is_empty()) {
        let _ = writeln!(out, "{line}");
    }
    for (name, t) in model.tensors() {
        let _ = writeln!(out, "tensor {name} {} {}", t.nrows(), t.ncols());
        let vals: Vec<String> = t.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: SpectralModel,
    /// Header entries in file order, `pool_k` included.
    pub header: Vec<(String, String)>,
}

fn err(line: usize, msg: impl Into<String>) -> NetError {
    NetError::Checkpoint { line, msg: msg.into() }
}

pub fn read_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == CHECKPOINT_MAGIC => {}
        _ => return Err(err(1, format!("expected {CHECKPOINT_MAGIC:?}"))),
    }
    let mut header = Vec::new();
    let mut tensors: Vec<(String, DMatrix<f64>)> = Vec::new();
    while let Some((no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("tensor ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(err(no, "expected `tensor <name> <rows> <cols>`"));
            };
            let rows: usize = rows.parse().map_err(|_| err(no, "bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| err(no, "bad column count"))?;
            let (vno, vline) = lines.next().ok_or_else(|| err(no + 1, "missing tensor values"))?;
            let vals = vline
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| err(vno, format!("bad value {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != rows * cols {
                return Err(err(vno, format!("expected {} values, got {}", rows * cols, vals.len())));
            }
            tensors.push((name.to_string(), DMatrix::from_column_slice(rows, cols, &vals)));
        } else if let Some((k, v)) = line.split_once('=') {
            if !tensors.is_empty() {
                return Err(err(no, "header line after tensors"));
            }
            header.push((k.trim().to_string(), v.trim().to_string()));
        } else {
            return Err(err(no, format!("unrecognized line {line:?}")));
        }
    }
    let pool_k: usize = header
        .iter()
        .find(|(k, _)| k == "pool_k")
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| err(0, "missing pool_k"))?;
    let model = assemble_model(tensors, pool_k)?;
    Ok(Checkpoint { model, header })
}

fn assemble_model(tensors: Vec<(String, DMatrix<f64>)>, pool_k: usize) -> Result<SpectralModel> {
    let block_count = tensors
        .iter()
        .filter(|(n, _)| n.starts_with("block") && n.ends_with(".w") && !n.contains(".filter."))
        .count();
    if block_count == 0 {
        return Err(err(0, "no blocks"));
    }
    let mut it = tensors.into_iter();
    let mut take = |want: String| -> Result<DMatrix<f64>> {
        match it.next() {
            Some((name, t)) if name == want => Ok(t),
            Some((name, _)) => Err(err(0, format!("expected tensor {want}, found {name}"))),
            None => Err(err(0, format!("missing tensor {want}"))),
        }
    };
    let mut blocks = Vec::with_capacity(block_count);
    for i in 0..block_count {
        let filter = FilterMlp {
            w1: take(format!("block{i}.filter.w1"))?,
            b1: take(format!("block{i}.filter.b1"))?,
            w2: take(format!("block{i}.filter.w2"))?,
            b2: take(format!("block{i}.filter.b2"))?,
            w3: take(format!("block{i}.filter.w3"))?,
            b3: take(format!("block{i}.filter.b3"))?,
        };
        blocks.push(Block {
            filter,
            w: take(format!("block{i}.w"))?,
        });
    }
    let model = SpectralModel {
        blocks,
        head_w: take("head.w".into())?,
        head_b: take("head.b".into())?,
        pool_k,
    };
    if let Some((name, _)) = it.next() {
        return Err(err(0, format!("unexpected tensor {name}")));
    }
    validate_shapes(&model)?;
    Ok(model)
}

fn validate_shapes(m: &SpectralModel) -> Result<()> {
    let mut d_in = m.input_dim();
    for (i, b) in m.blocks.iter().enumerate() {
        let f = &b.filter;
        let h = f.w1.nrows();
        let ok = f.w1.ncols() == 1
            && f.b1.shape() == (h, 1)
            && f.w2.shape() == (h, h)
            && f.b2.shape() == (h, 1)
            && f.w3.shape() == (1, h)
            && f.b3.shape() == (1, 1)
            && b.w.nrows() == d_in;
        if !ok {
            return Err(err(0, format!("inconsistent shapes in block{i}")));
        }
        d_in = b.w.ncols();
    }
    if m.head_w.shape() != (1, m.pool_k * d_in) || m.head_b.shape() != (1, 1) {
        return Err(err(0, "head shape does not match pool_k and block width"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn round_trip_is_exact() {
        let m = SpectralModel::new(&ModelConfig::default(), 42).unwrap();
        let text = write_checkpoint(&m, "lr=0.001\nseed=42\n");
        let ck = read_checkpoint(&text).unwrap();
        assert_eq!(ck.model, m);
        assert_eq!(ck.header[1], ("lr".to_string(), "0.001".to_string()));
    }

    #[test]
    fn malformed_inputs() {
        let m = SpectralModel::new(
            &ModelConfig {
                widths: vec![3],
                filter_hidden: 2,
                pool_k: 2,
            },
            1,
        )
        .unwrap();
        let text = write_checkpoint(&m, "");
        assert!(read_checkpoint(&text.replacen("v1", "v9", 1)).is_err());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint(&truncated).is_err());
        assert!(read_checkpoint(&text.replace("head.b 1 1", "head.b 1 2")).is_err());
    }
}
