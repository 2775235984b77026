//! Plain-text channel dumps for cross-implementation regression tests.
//!
//! ```text
//! # aircomp channel dump v1
//! devices 2
//! subcarriers 4
//! noise_power 1.25e-1 1.25e-1 1.25e-1 1.25e-1
//! # device subcarrier h_re h_im h_est_re h_est_im
//! 0 0 -3.1e-1 8.2e-1 -3.1e-1 8.2e-1
//! ...
//! ```
//!
//! Values use the shortest exponent notation that parses back to the same
//! `f64`, so a dump round-trips bit-exactly.

use std::fmt::Write as _;

use aircomp_core::channel::NetworkRealization;
use aircomp_core::Complex64;
use thiserror::Error;

pub const MAGIC: &str = "# aircomp channel dump v1";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("channel dump line {line}: {message}")]
pub struct DumpError {
    pub line: usize,
    pub message: String,
}

fn fail(line: usize, message: impl Into<String>) -> DumpError {
    DumpError {
        line,
        message: message.into(),
    }
}

pub fn write_channel_dump(r: &NetworkRealization) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "devices {}", r.devices()).unwrap();
    writeln!(s, "subcarriers {}", r.subcarriers()).unwrap();
    let noise: Vec<String> = r.noise_powers().iter().map(|x| format!("{x:e}")).collect();
    writeln!(s, "noise_power {}", noise.join(" ")).unwrap();
    writeln!(s, "# device subcarrier h_re h_im h_est_re h_est_im").unwrap();
    for k in 0..r.devices() {
        for l in 0..r.subcarriers() {
            let (h, e) = (r.gain(k, l), r.estimate(k, l));
            writeln!(s, "{k} {l} {:e} {:e} {:e} {:e}", h.re, h.im, e.re, e.im).unwrap();
        }
    }
    s
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, Vec<&'a str>), DumpError> {
    let (n, line) = lines
        .next()
        .ok_or_else(|| fail(0, format!("missing `{key}` line")))?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some(key) {
        return Err(fail(n, format!("expected `{key}`")));
    }
    Ok((n, fields.collect()))
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, DumpError> {
    s.parse()
        .map_err(|_| fail(line, format!("invalid number `{s}`")))
}

pub fn read_channel_dump(text: &str) -> Result<NetworkRealization, DumpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, _)) => return Err(fail(n, "not an aircomp channel dump")),
        None => return Err(fail(0, "empty input")),
    }
    let mut lines = lines.filter(|(_, l)| !l.starts_with('#'));
    let (n, f) = header(&mut lines, "devices")?;
    let devices: usize = number(n, f.first().copied().unwrap_or(""))?;
    let (n, f) = header(&mut lines, "subcarriers")?;
    let subcarriers: usize = number(n, f.first().copied().unwrap_or(""))?;
    let (n, f) = header(&mut lines, "noise_power")?;
    let noise = f
        .iter()
        .map(|x| number(n, x))
        .collect::<Result<Vec<f64>, _>>()?;

    let cells = devices * subcarriers;
    let mut h = vec![None; cells];
    let mut h_est = vec![Complex64::new(0.0, 0.0); cells];
    for (n, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(fail(n, "expected 6 fields"));
        }
        let (k, l): (usize, usize) = (number(n, f[0])?, number(n, f[1])?);
        if k >= devices || l >= subcarriers {
            return Err(fail(n, "index out of range"));
        }
        let idx = k * subcarriers + l;
        if h[idx].is_some() {
            return Err(fail(n, format!("duplicate entry ({k}, {l})")));
        }
        h[idx] = Some(Complex64::new(number(n, f[2])?, number(n, f[3])?));
        h_est[idx] = Complex64::new(number(n, f[4])?, number(n, f[5])?);
    }
    let h = h
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| fail(0, "missing entries"))?;
    NetworkRealization::from_parts(devices, subcarriers, h, h_est, noise)
        .map_err(|e| fail(0, e.to_string()))
}
