use std::io::{BufRead, Write};

use super::{kernels, Coefficients, DesignMatrix};
use crate::rng::{DeviateBuffer, DeviateKind, Stream};
use crate::{Error, Result};

/// Logistic data with standard-normal covariates and responses drawn from
/// the model at `beta`.
pub fn synthetic_logistic(n: usize, k: usize, beta: &[f64], seed: u64) -> Result<DesignMatrix> {
    if beta.len() != k {
        return Err(Error::Dimension(format!("beta has length {}, K = {k}", beta.len())));
    }
    let stream = Stream::new(seed);
    let mut z = DeviateBuffer::new(DeviateKind::StdNormal, stream.split(10), 8192);
    let mut u = DeviateBuffer::new(DeviateKind::Uniform01, stream.split(11), 8192);
    let mut x = vec![0.0; n * k];
    z.fill(&mut x);
    let y = x
        .chunks_exact(k.max(1))
        .map(|row| f64::from(u8::from(u.next() < kernels::sigmoid(kernels::dot(row, beta)))))
        .collect();
    DesignMatrix::new(n, k, x, y)
}

/// Synthetic data together with the true coefficients, drawn as
/// `N(0, 1/K)` so that `x . beta` has unit variance.
pub fn synthetic_random(n: usize, k: usize, seed: u64) -> Result<(DesignMatrix, Coefficients)> {
    let stream = Stream::new(seed).split(0xB37A);
    let scale = 1.0 / (k.max(1) as f64).sqrt();
    let beta: Vec<f64> = (0..k as u64).map(|i| scale * stream.normal(i)).collect();
    let data = synthetic_logistic(n, k, &beta, seed)?;
    Ok((data, Coefficients::new(beta)?))
}

fn parse_err(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        msg: msg.into(),
    }
}

/// Reads CSV rows of `K` covariates followed by a 0/1 response.
///
/// Blank lines and `#` comments are skipped. A first line with no numeric
/// field is taken as a header. Line and column numbers in errors are 1-based.
pub fn read_csv<R: BufRead>(reader: R) -> Result<DesignMatrix> {
    let mut width: Option<usize> = None;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut seen_data = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_data && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() < 2 {
            return Err(parse_err(lineno, 1, "need at least one covariate and a response"));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(
                    lineno,
                    fields.len().min(w) + 1,
                    format!("expected {w} fields, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        let (resp, covs) = fields.split_last().expect("len >= 2");
        for (c, f) in covs.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(lineno, c + 1, format!("'{f}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, c + 1, "covariate is not finite"));
            }
            x.push(v);
        }
        let col = fields.len();
        let r: f64 = resp
            .parse()
            .map_err(|_| parse_err(lineno, col, format!("response '{resp}' is not a number")))?;
        if r != 0.0 && r != 1.0 {
            return Err(parse_err(lineno, col, format!("response {r} is not 0 or 1")));
        }
        y.push(r);
    }
    let w = width.ok_or_else(|| parse_err(0, 0, "no data rows"))?;
    DesignMatrix::new(y.len(), w - 1, x, y)
}

pub fn write_csv<W: Write>(data: &DesignMatrix, mut out: W) -> Result<()> {
    for (n, &yy) in data.y().iter().enumerate() {
        for v in data.row(n) {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", yy as u8)?;
    }
    Ok(())
}
