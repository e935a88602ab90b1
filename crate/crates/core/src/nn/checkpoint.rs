//! Text checkpoints for [`Mlp`].
//!
//! ```text
//! ot-distill-mlp 1
//! dims 2 64 64 4
//! weight 0 2 64
//! <row-major values, one row per line>
//! bias 0 64
//! <values>
//! ...
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so save → load is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Dense, Mlp, NnError, Scalar};

pub const CHECKPOINT_MAGIC: &str = "ot-distill-mlp";
const VERSION: u32 = 1;

pub fn write_mlp<F: Scalar>(net: &Mlp<F>) -> String {
    let mut s = String::new();
    let dims: Vec<String> = net.dims().iter().map(usize::to_string).collect();
    writeln!(s, "{CHECKPOINT_MAGIC} {VERSION}").unwrap();
    writeln!(s, "dims {}", dims.join(" ")).unwrap();
    for (i, l) in net.layers().iter().enumerate() {
        writeln!(s, "weight {i} {} {}", l.fan_in(), l.fan_out()).unwrap();
        for row in l.weight.rows() {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", vals.join(" ")).unwrap();
        }
        writeln!(s, "bias {i} {}", l.bias.len()).unwrap();
        let vals: Vec<String> = l.bias.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", vals.join(" ")).unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, NnError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> NnError {
        NnError::Checkpoint {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn header(&mut self, tag: &str, layer: usize, nums: usize) -> Result<Vec<usize>, NnError> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.err(format!("expected `{tag}` header")));
        }
        let vals = parts
            .map(|p| p.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.err(e.to_string()))?;
        if vals.len() != nums + 1 || vals[0] != layer {
            return Err(self.err(format!("malformed `{tag}` header for layer {layer}")));
        }
        Ok(vals[1..].to_vec())
    }

    fn values<F: Scalar>(&mut self, n: usize) -> Result<Vec<F>, NnError> {
        let line = self.next()?;
        let vals = line
            .split_whitespace()
            .map(|p| p.parse::<F>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| self.err("unparseable value"))?;
        if vals.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

pub fn read_mlp<F: Scalar>(text: &str) -> Result<Mlp<F>, NnError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let magic = lines.next()?;
    if magic.trim() != format!("{CHECKPOINT_MAGIC} {VERSION}") {
        return Err(lines.err(format!("expected `{CHECKPOINT_MAGIC} {VERSION}`")));
    }
    let dims_line = lines.next()?;
    let dims = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| lines.err("expected `dims` line"))?
        .split_whitespace()
        .map(|p| p.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| lines.err(e.to_string()))?;
    if dims.len() < 2 {
        return Err(lines.err("need at least two dims"));
    }
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (i, w) in dims.windows(2).enumerate() {
        let shape = lines.header("weight", i, 2)?;
        if shape != [w[0], w[1]] {
            return Err(lines.err(format!("weight {i} shape {shape:?} disagrees with dims")));
        }
        let mut flat = Vec::with_capacity(w[0] * w[1]);
        for _ in 0..w[0] {
            flat.extend(lines.values::<F>(w[1])?);
        }
        let weight = Array2::from_shape_vec((w[0], w[1]), flat).expect("shape checked");
        let len = lines.header("bias", i, 1)?;
        if len != [w[1]] {
            return Err(lines.err(format!("bias {i} length disagrees with dims")));
        }
        let bias = Array1::from_vec(lines.values::<F>(w[1])?);
        layers.push(Dense { weight, bias });
    }
    Mlp::from_layers(layers)
}

pub fn save_mlp<F: Scalar>(net: &Mlp<F>, path: &Path) -> Result<(), NnError> {
    fs::write(path, write_mlp(net))?;
    Ok(())
}

pub fn load_mlp<F: Scalar>(path: &Path) -> Result<Mlp<F>, NnError> {
    read_mlp(&fs::read_to_string(path)?)
}
