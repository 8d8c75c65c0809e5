//! ESRI ASCII grid (`.asc`) reader and writer.
//!
//! The header gives `ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`
//! and optionally `NODATA_value`; the data follow north row first. Grid
//! values are treated as nodes: node `(i, j)` sits at
//! `(xllcorner + i * cellsize, yllcorner + j * cellsize)`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{ElevationField, NodataPolicy};
use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, Vec2};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<f64>,
    yll: Option<f64>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("not a finite number: {tok:?}"))),
    }
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("not a non-negative integer: {tok:?}")))
}

/// Opens and parses an `.asc` file.
pub fn load_esri_ascii(path: impl AsRef<Path>, policy: NodataPolicy) -> Result<ElevationField> {
    let file = File::open(path)?;
    read_esri_ascii(BufReader::new(file), policy)
}

/// Parses an ESRI ASCII grid from any buffered reader.
pub fn read_esri_ascii(reader: impl BufRead, policy: NodataPolicy) -> Result<ElevationField> {
    let mut header = Header::default();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut in_data = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut toks = line.split_whitespace().peekable();
        let Some(&first) = toks.peek() else {
            continue;
        };
        let is_key = first
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
            && first.parse::<f64>().is_err();
        if is_key && !in_data {
            let key = first.to_ascii_lowercase();
            toks.next();
            let value = toks
                .next()
                .ok_or_else(|| parse_err(lineno, format!("header key {first} has no value")))?;
            if toks.next().is_some() {
                return Err(parse_err(lineno, "trailing tokens after header value"));
            }
            match key.as_str() {
                "ncols" => header.ncols = Some(parse_count(value, lineno)?),
                "nrows" => header.nrows = Some(parse_count(value, lineno)?),
                "xllcorner" | "xllcenter" => header.xll = Some(parse_number(value, lineno)?),
                "yllcorner" | "yllcenter" => header.yll = Some(parse_number(value, lineno)?),
                "cellsize" => header.cellsize = Some(parse_number(value, lineno)?),
                "nodata_value" => header.nodata = Some(parse_number(value, lineno)?),
                _ => return Err(parse_err(lineno, format!("unknown header key {first}"))),
            }
            continue;
        }
        if is_key {
            return Err(parse_err(
                lineno,
                format!("unexpected token {first:?} in data"),
            ));
        }
        in_data = true;
        let values = toks
            .map(|t| parse_number(t, lineno))
            .collect::<Result<Vec<_>>>()?;
        rows.push((lineno, values));
    }

    let missing = |k: &str| parse_err(0, format!("missing header key {k}"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let xll = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let yll = header.yll.ok_or_else(|| missing("yllcorner"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    if cellsize <= 0.0 {
        return Err(parse_err(0, "cellsize must be positive"));
    }
    if rows.len() != nrows {
        return Err(parse_err(
            rows.last().map_or(0, |r| r.0),
            format!("expected {nrows} data rows, found {}", rows.len()),
        ));
    }
    for (lineno, r) in &rows {
        if r.len() != ncols {
            return Err(parse_err(
                *lineno,
                format!("expected {ncols} values, found {}", r.len()),
            ));
        }
    }

    let grid = GridSpec::new(Vec2::new(xll, yll), cellsize, cellsize, ncols, nrows)?;
    let mut heights = vec![0.0; grid.len()];
    let mut holes = vec![false; grid.len()];
    for (r, (_, values)) in rows.iter().enumerate() {
        // first data row is the northernmost
        let j = nrows - 1 - r;
        for (i, &v) in values.iter().enumerate() {
            let k = grid.index(i, j);
            heights[k] = v;
            holes[k] = header.nodata == Some(v);
        }
    }

    let count = holes.iter().filter(|&&h| h).count();
    if count > 0 {
        match policy {
            NodataPolicy::Reject => return Err(Error::Nodata { count }),
            NodataPolicy::Fill => fill_holes(&grid, &mut heights, &mut holes)?,
        }
    }
    Ok(ElevationField::from_heights(grid, heights)?.with_nodata(policy, header.nodata))
}

/// Repeated passes of 8-neighbour averaging. Each pass reads only values
/// valid at the start of that pass, so the result does not depend on
/// traversal order.
fn fill_holes(grid: &GridSpec, heights: &mut [f64], holes: &mut [bool]) -> Result<()> {
    let mut remaining = holes.iter().filter(|&&h| h).count();
    while remaining > 0 {
        let mut fills = Vec::new();
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                if !holes[grid.index(i, j)] {
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0usize);
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                            continue;
                        }
                        let k = grid.index(ni as usize, nj as usize);
                        if !holes[k] {
                            sum += heights[k];
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    fills.push((grid.index(i, j), sum / n as f64));
                }
            }
        }
        if fills.is_empty() {
            return Err(Error::NodataUnfillable { remaining });
        }
        for (k, v) in fills {
            heights[k] = v;
            holes[k] = false;
            remaining -= 1;
        }
    }
    Ok(())
}

/// Writes `field` as an ESRI ASCII grid. Requires square cells.
pub fn write_esri_ascii(field: &ElevationField, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    if g.dx != g.dy {
        return Err(invalid(format!(
            "ESRI grids need square cells, got dx = {} and dy = {}",
            g.dx, g.dy
        )));
    }
    writeln!(out, "ncols {}", g.nx)?;
    writeln!(out, "nrows {}", g.ny)?;
    writeln!(out, "xllcorner {}", g.origin.x)?;
    writeln!(out, "yllcorner {}", g.origin.y)?;
    writeln!(out, "cellsize {}", g.dx)?;
    if let Some(nd) = field.nodata_value() {
        writeln!(out, "NODATA_value {nd}")?;
    }
    let mut line = String::new();
    for j in (0..g.ny).rev() {
        line.clear();
        for i in 0..g.nx {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&field.height(i, j).to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
