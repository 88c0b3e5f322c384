//! File formats: PGM masks, run-length JSON masks, CSV fields and measures,
//! and a raw little-endian block format.
//!
//! Raw blocks start with one ASCII line of eight values,
//! `d nx ny x_lo x_hi y_lo y_hi sentinel`, followed by `nx·ny` little-endian
//! `f64`. `sentinel` is the hexadecimal bit pattern that stands for `+∞`
//! (infinite measure densities); it is `0x7ff0000000000000`, IEEE `+∞`.
//! One-dimensional grids store `ny = 1` and `y_lo = y_hi = 0`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capmeasure::CapacitaryMeasure;
use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarGridField, ShapeMask};

pub const RAW_SENTINEL: u64 = 0x7ff0_0000_0000_0000;

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Plain PGM (P2), 0 outside and 255 inside, top row first.
pub fn mask_to_pgm(mask: &ShapeMask) -> String {
    let d = mask.domain();
    let [nx, ny] = d.cells();
    let mut s = format!("P2\n{nx} {ny}\n255\n");
    for j in (0..ny).rev() {
        let row: Vec<&str> = (0..nx)
            .map(|i| if mask.contains(d.index(i, j)) { "255" } else { "0" })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Parses a plain PGM written by [`mask_to_pgm`] (any nonzero gray is inside).
pub fn mask_from_pgm(domain: GridDomain, text: &str) -> Result<ShapeMask> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(Error::Parse("not a plain PGM (P2) file".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("PGM ended before {what}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("PGM {what}: {e}")))
    };
    let (nx, ny, _max) = (num("width")?, num("height")?, num("maxval")?);
    if [nx, ny] != domain.cells() {
        return Err(Error::Parse(format!(
            "PGM is {nx}x{ny}, domain has {:?} cells",
            domain.cells()
        )));
    }
    let mut inside = vec![false; domain.len()];
    for j in (0..ny).rev() {
        for i in 0..nx {
            inside[domain.index(i, j)] = num("pixel")? > 0;
        }
    }
    ShapeMask::new(domain, inside)
}

/// `{domain, runs}`: alternating run lengths over the flat cell order,
/// starting with an outside run (possibly empty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskDescriptor {
    pub domain: GridDomain,
    pub runs: Vec<usize>,
}

impl MaskDescriptor {
    pub fn from_mask(mask: &ShapeMask) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0;
        for &c in mask.cells() {
            if c == current {
                len += 1;
            } else {
                runs.push(len);
                current = c;
                len = 1;
            }
        }
        runs.push(len);
        MaskDescriptor {
            domain: *mask.domain(),
            runs,
        }
    }

    pub fn to_mask(&self) -> Result<ShapeMask> {
        let mut inside = Vec::with_capacity(self.domain.len());
        let mut value = false;
        for &r in &self.runs {
            inside.extend(std::iter::repeat_n(value, r));
            value = !value;
        }
        if inside.len() != self.domain.len() {
            return Err(Error::Parse(format!(
                "runs cover {} cells, domain has {}",
                inside.len(),
                self.domain.len()
            )));
        }
        ShapeMask::new(self.domain, inside)
    }
}

fn csv_rows(domain: &GridDomain, header_value: &str, value: impl Fn(usize) -> String) -> String {
    let mut s = String::new();
    let two = domain.dim() == 2;
    s.push_str(if two { "x,y," } else { "x," });
    s.push_str(header_value);
    s.push('\n');
    for k in 0..domain.len() {
        let c = domain.center(k);
        if two {
            let _ = writeln!(s, "{},{},{}", c[0], c[1], value(k));
        } else {
            let _ = writeln!(s, "{},{}", c[0], value(k));
        }
    }
    s
}

/// `x,y,value` per cell (`x,value` in 1D).
pub fn field_to_csv(field: &ScalarGridField) -> String {
    csv_rows(field.domain(), "value", |k| field.get(k).to_string())
}

/// As [`field_to_csv`], with the literal `inf` for infinite densities.
pub fn measure_to_csv(mu: &CapacitaryMeasure) -> String {
    csv_rows(mu.domain(), "value", |k| match mu.get(k) {
        Some(v) => v.to_string(),
        None => "inf".into(),
    })
}

/// Parses the value column of a field or measure CSV; `inf` maps to `+∞`.
pub fn values_from_csv(domain: &GridDomain, text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let vals = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v = l.rsplit(',').next().unwrap_or("").trim();
            if v == "inf" {
                Ok(f64::INFINITY)
            } else {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("CSV value {v:?}: {e}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if vals.len() != domain.len() {
        return Err(Error::Parse(format!(
            "CSV has {} rows, domain has {} cells",
            vals.len(),
            domain.len()
        )));
    }
    Ok(vals)
}

fn raw_block(domain: &GridDomain, values: impl Iterator<Item = f64>) -> Vec<u8> {
    let [nx, ny] = domain.cells();
    let (lo, hi) = (domain.lower(), domain.upper());
    let (ylo, yhi) = if domain.dim() == 2 { (lo[1], hi[1]) } else { (0.0, 0.0) };
    let header = format!(
        "{} {} {} {} {} {} {} 0x{:016x}\n",
        domain.dim(),
        nx,
        ny,
        lo[0],
        hi[0],
        ylo,
        yhi,
        RAW_SENTINEL
    );
    let mut out = header.into_bytes();
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn field_to_raw(field: &ScalarGridField) -> Vec<u8> {
    raw_block(field.domain(), field.values().iter().copied())
}

/// Infinite densities are stored as the sentinel pattern.
pub fn measure_to_raw(mu: &CapacitaryMeasure) -> Vec<u8> {
    let d = *mu.domain();
    raw_block(
        &d,
        (0..d.len()).map(|k| mu.get(k).unwrap_or(f64::from_bits(RAW_SENTINEL))),
    )
}

/// Reads a raw block back into its domain and values.
pub fn raw_from_bytes(bytes: &[u8]) -> Result<(GridDomain, Vec<f64>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("raw block without header".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| Error::Parse(e.to_string()))?;
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 8 {
        return Err(Error::Parse(format!("raw header has {} values, expected 8", f.len())));
    }
    let p = |i: usize| -> Result<f64> {
        f[i].parse()
            .map_err(|e| Error::Parse(format!("raw header {}: {e}", f[i])))
    };
    let dim = p(0)? as usize;
    let (nx, ny) = (p(1)? as usize, p(2)? as usize);
    let sentinel = u64::from_str_radix(f[7].trim_start_matches("0x"), 16)
        .map_err(|e| Error::Parse(format!("raw sentinel: {e}")))?;
    let domain = match dim {
        1 => GridDomain::new(&[p(3)?], &[p(4)?], &[nx])?,
        2 => GridDomain::new(&[p(3)?, p(5)?], &[p(4)?, p(6)?], &[nx, ny])?,
        _ => return Err(Error::Parse(format!("raw dimension {dim}"))),
    };
    let body = &bytes[nl + 1..];
    if body.len() != 8 * domain.len() {
        return Err(Error::Parse(format!(
            "raw body has {} bytes, expected {}",
            body.len(),
            8 * domain.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| {
            let bits = u64::from_le_bytes(c.try_into().expect("chunks of eight"));
            if bits == sentinel {
                f64::INFINITY
            } else {
                f64::from_bits(bits)
            }
        })
        .collect();
    Ok((domain, values))
}
