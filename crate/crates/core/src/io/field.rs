//! Plain-text level-set files.
//!
//! ```text
//! # cellopt level set
//! n 4
//! <n values of row j = 0>
//! ...
//! <n values of row j = n-1>
//! ```
//!
//! Rows run bottom to top over the periodic nodes; values are written in the
//! shortest form that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "# cellopt level set";

pub fn format_levelset(n: usize, values: &[f64]) -> String {
    assert_eq!(values.len(), n * n, "level set size");
    let mut s = format!("{MAGIC}\nn {n}\n");
    for row in values.chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn parse_levelset(text: &str, path: &Path) -> Result<(usize, Vec<f64>)> {
    let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(bad(format!("missing header \"{MAGIC}\"")));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.trim().strip_prefix("n "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("second line must be \"n <size>\"".into()))?;
    let mut values = Vec::with_capacity(n * n);
    for (row, line) in lines.enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| bad(format!("row {row}: bad number \"{tok}\"")))?;
            values.push(v);
        }
    }
    if values.len() != n * n {
        return Err(bad(format!("expected {} values, found {}", n * n, values.len())));
    }
    Ok((n, values))
}

pub fn write_levelset(path: &Path, n: usize, values: &[f64]) -> Result<()> {
    super::write_atomic(path, format_levelset(n, values).as_bytes())
}

pub fn read_levelset(path: &Path) -> Result<(usize, Vec<f64>)> {
    parse_levelset(&super::read_to_string(path)?, path)
}
