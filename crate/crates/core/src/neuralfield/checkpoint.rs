use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use ndarray::Array2;

use super::NetworkParams;
use crate::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "DEMTO-NET-v1";

/// Writes parameters as plain text. Floats use Rust's shortest round-trip
/// formatting, so reading back reproduces every bit.
pub fn write_checkpoint<W: Write>(params: &NetworkParams, mut out: W) -> Result<()> {
    let mut s = String::new();
    let (lo, hi) = params.slope_range();
    writeln!(s, "{CHECKPOINT_HEADER}").unwrap();
    writeln!(s, "dim {}", params.dim()).unwrap();
    writeln!(s, "seed {}", params.seed()).unwrap();
    writeln!(s, "slopes {lo:?} {hi:?}").unwrap();
    let b = params.rff_matrix();
    writeln!(s, "rff {} {}", b.nrows(), b.ncols()).unwrap();
    push_values(&mut s, b.iter());
    writeln!(s, "layers {}", params.layer_shapes().len()).unwrap();
    for &(o, i) in params.layer_shapes() {
        writeln!(s, "{o} {i}").unwrap();
    }
    writeln!(s, "theta {}", params.theta().len()).unwrap();
    push_values(&mut s, params.theta().iter());
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn push_values<'a>(s: &mut String, values: impl Iterator<Item = &'a f64>) {
    for v in values {
        writeln!(s, "{v:?}").unwrap();
    }
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<NetworkParams> {
    let mut lines = BufReader::new(input).lines();
    let mut next = || -> Result<String> {
        match lines.next() {
            Some(l) => Ok(l?.trim().to_string()),
            None => Err(Error::Checkpoint("unexpected end of file".into())),
        }
    };
    if next()? != CHECKPOINT_HEADER {
        return Err(Error::Checkpoint("missing header".into()));
    }
    let dim: usize = keyed(&next()?, "dim")?[0];
    let seed: u64 = keyed(&next()?, "seed")?[0];
    let slopes: Vec<f64> = keyed(&next()?, "slopes")?;
    if slopes.len() != 2 {
        return Err(Error::Checkpoint("slopes needs two values".into()));
    }
    let rff_shape: Vec<usize> = keyed(&next()?, "rff")?;
    if rff_shape.len() != 2 {
        return Err(Error::Checkpoint("rff needs a shape".into()));
    }
    let mut rff_vals = Vec::with_capacity(rff_shape[0] * rff_shape[1]);
    for _ in 0..rff_shape[0] * rff_shape[1] {
        rff_vals.push(parse(&next()?)?);
    }
    let n_layers: usize = keyed(&next()?, "layers")?[0];
    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let v: Vec<usize> = values(&next()?)?;
        if v.len() != 2 {
            return Err(Error::Checkpoint("layer shape needs two values".into()));
        }
        shapes.push((v[0], v[1]));
    }
    let n_theta: usize = keyed(&next()?, "theta")?[0];
    let mut theta = Vec::with_capacity(n_theta);
    for _ in 0..n_theta {
        theta.push(parse(&next()?)?);
    }
    let rff = Array2::from_shape_vec((rff_shape[0], rff_shape[1]), rff_vals)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    NetworkParams::from_parts(dim, seed, rff, shapes, theta, (slopes[0], slopes[1]))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Checkpoint(format!("cannot parse `{s}`")))
}

fn values<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace().map(parse).collect()
}

fn keyed<T: std::str::FromStr>(line: &str, key: &str) -> Result<Vec<T>> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::Checkpoint(format!("expected `{key}`, found `{line}`")))?;
    let v: Vec<T> = values(rest)?;
    if v.is_empty() {
        return Err(Error::Checkpoint(format!("`{key}` has no value")));
    }
    Ok(v)
}
