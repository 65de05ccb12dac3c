//! Plain-text parameter snapshots.
//!
//! ```text
//! rltestbench-mlp 1
//! sizes 2 256 128 128 4
//! output identity
//! params 50820
//! <one value per line: layer 0 weights row-major, layer 0 bias, layer 1 ...>
//! ```
//! Values use Rust's shortest round-trip formatting, so a snapshot reloads
//! bit-identically.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use super::mlp::{Dense, Mlp, OutputActivation};
use crate::{Error, Result};

pub const SNAPSHOT_MAGIC: &str = "rltestbench-mlp";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn to_snapshot(net: &Mlp) -> String {
    let mut out = String::new();
    let sizes: Vec<String> = net.layer_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}");
    let _ = writeln!(out, "sizes {}", sizes.join(" "));
    let _ = writeln!(out, "output {}", net.output_activation().as_str());
    let _ = writeln!(out, "params {}", net.num_params());
    for slice in net.param_slices() {
        for v in slice {
            let _ = writeln!(out, "{v:?}");
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn from_snapshot(text: &str) -> Result<Mlp> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
        let (no, line) = lines.next().ok_or_else(|| parse_err(0, "truncated header"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_err(no, format!("expected `{key}`")));
        }
        Ok((no, parts.map(str::to_string).collect()))
    };

    let (no, version) = header(SNAPSHOT_MAGIC)?;
    if version != [SNAPSHOT_VERSION.to_string()] {
        return Err(parse_err(no, format!("unsupported snapshot version {version:?}")));
    }
    let (no, sizes) = header("sizes")?;
    let sizes: Vec<usize> = sizes
        .iter()
        .map(|s| s.parse().map_err(|_| parse_err(no, format!("bad layer size {s}"))))
        .collect::<Result<_>>()?;
    let (no, output) = header("output")?;
    let output = OutputActivation::parse(output.first().map_or("", String::as_str))
        .map_err(|e| parse_err(no, e.to_string()))?;
    let (no, count) = header("params")?;
    let count: usize = count
        .first()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| parse_err(no, "bad parameter count"))?;

    let mut values = Vec::with_capacity(count);
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|_| parse_err(no, format!("bad parameter value {line}")))?,
        );
    }
    if values.len() != count {
        return Err(parse_err(0, format!("expected {count} parameters, found {}", values.len())));
    }

    let mut layers = Vec::with_capacity(sizes.len().saturating_sub(1));
    let mut offset = 0;
    for w in sizes.windows(2) {
        let (inp, out) = (w[0], w[1]);
        let take = |n: usize, offset: &mut usize| -> Result<Vec<f64>> {
            let chunk = values
                .get(*offset..*offset + n)
                .ok_or_else(|| parse_err(0, "parameter count does not match layer sizes"))?
                .to_vec();
            *offset += n;
            Ok(chunk)
        };
        let weight = Array2::from_shape_vec((out, inp), take(out * inp, &mut offset)?)
            .map_err(|e| parse_err(0, e.to_string()))?;
        let bias = Array1::from_vec(take(out, &mut offset)?);
        layers.push(Dense { weight, bias });
    }
    if offset != values.len() {
        return Err(parse_err(0, "parameter count does not match layer sizes"));
    }
    Mlp::from_layers(sizes, layers, output)
}
