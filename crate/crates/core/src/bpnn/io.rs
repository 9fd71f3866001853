//! Text formats. Dataset: `n=<count> seed=<seed>` then one row per sample,
//! `r1 … r9 dmin idx`. Model: the layer sizes on one line, then per layer the
//! weight rows followed by one bias line.

use super::{BpnnError, Dataset, Mlp, Sample, SENSOR_COUNT};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;

fn parse_err(line: usize, message: impl Into<String>) -> BpnnError {
    BpnnError::Parse { line, message: message.into() }
}

fn parse_floats(line_no: usize, line: &str) -> Result<Vec<f64>, BpnnError> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| parse_err(line_no, format!("{t:?}: {e}"))))
        .collect()
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_dataset(data: &Dataset) -> String {
    let mut out = format!("n={} seed={}\n", data.samples.len(), data.seed);
    for s in &data.samples {
        let row = s.readings.iter().copied().chain([s.d_min, s.index]);
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

pub fn read_dataset(text: &str) -> Result<Dataset, BpnnError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut n = None;
    let mut seed = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|e| parse_err(1, format!("n: {e}")))?),
            Some(("seed", v)) => seed = Some(v.parse::<u64>().map_err(|e| parse_err(1, format!("seed: {e}")))?),
            _ => return Err(parse_err(1, format!("unexpected header field {field:?}"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(1, "header lacks n="))?;
    let seed = seed.ok_or_else(|| parse_err(1, "header lacks seed="))?;
    let mut samples = Vec::with_capacity(n);
    for (i, line) in lines {
        let v = parse_floats(i + 1, line)?;
        if v.len() != SENSOR_COUNT + 2 {
            return Err(parse_err(i + 1, format!("expected {} values, found {}", SENSOR_COUNT + 2, v.len())));
        }
        let mut readings = [0.0; SENSOR_COUNT];
        readings.copy_from_slice(&v[..SENSOR_COUNT]);
        samples.push(Sample { readings, d_min: v[SENSOR_COUNT], index: v[SENSOR_COUNT + 1] });
    }
    if samples.len() != n {
        return Err(parse_err(1, format!("header says n={n} but {} rows follow", samples.len())));
    }
    Ok(Dataset { seed, samples })
}

pub fn write_model(net: &Mlp) -> String {
    let mut out = net.layer_sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
    out.push('\n');
    for (w, b) in net.weights.iter().zip(&net.biases) {
        for r in 0..w.nrows() {
            let _ = writeln!(out, "{}", join(w.row(r).iter().copied()));
        }
        let _ = writeln!(out, "{}", join(b.iter().copied()));
    }
    out
}

pub fn read_model(text: &str) -> Result<Mlp, BpnnError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing layer sizes"))?;
    let sizes = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| parse_err(1, format!("{t:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = Mlp::zeros(&sizes)?;
    let mut next_row = |want: usize| -> Result<Vec<f64>, BpnnError> {
        let (i, line) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of model"))?;
        let v = parse_floats(i + 1, line)?;
        if v.len() != want {
            return Err(parse_err(i + 1, format!("expected {want} values, found {}", v.len())));
        }
        Ok(v)
    };
    for l in 0..net.weights.len() {
        let (rows, cols) = (sizes[l + 1], sizes[l]);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(next_row(cols)?);
        }
        net.weights[l] = DMatrix::from_row_slice(rows, cols, &data);
        net.biases[l] = DVector::from_vec(next_row(rows)?);
    }
    net.check_shapes()?;
    Ok(net)
}
