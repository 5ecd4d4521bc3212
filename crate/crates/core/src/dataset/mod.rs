//! The four-file CSV dataset: `t.csv`, `h.csv`, `dp.csv`, `vof.csv`.
//!
//! Row `i` of every file describes the same example. `t` (seconds) and `h`
//! (meters) are one scientific-notation value per line with 9 significant
//! digits. `dp` and `vof` rows are comma-separated, strictly increasing,
//! 0-based row-major indices of the On pixels of the 20×20 pattern and the
//! 160×160 imprint; an empty row is an empty line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::{Error, Result};

pub mod filter;
pub mod generate;
pub mod split;
pub mod stats;

pub const FILES: [&str; 4] = ["t.csv", "h.csv", "dp.csv", "vof.csv"];

/// Side lengths of the two images, which bound the stored indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImageShape {
    pub dp_side: usize,
    pub vof_side: usize,
}

impl Default for ImageShape {
    fn default() -> Self {
        ImageShape {
            dp_side: 20,
            vof_side: 160,
        }
    }
}

/// Round to the 9 significant digits the files hold.
pub fn quantize(x: f64) -> f64 {
    format_value(x).parse().expect("formatted float parses")
}

fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetPartition {
    pub shape: ImageShape,
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub dp: Vec<Vec<u32>>,
    pub vof: Vec<Vec<u32>>,
}

impl Default for DatasetPartition {
    fn default() -> Self {
        DatasetPartition::empty(ImageShape::default())
    }
}

impl DatasetPartition {
    pub fn empty(shape: ImageShape) -> Self {
        DatasetPartition {
            shape,
            t: Vec::new(),
            h: Vec::new(),
            dp: Vec::new(),
            vof: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Append one example; `t` and `h` are quantized to what the files store.
    pub fn push(&mut self, t: f64, h: f64, dp: Vec<u32>, vof: Vec<u32>) -> Result<()> {
        check_row(&dp, self.shape.dp_side, "dp")?;
        check_row(&vof, self.shape.vof_side, "vof")?;
        self.t.push(quantize(t));
        self.h.push(quantize(h));
        self.dp.push(dp);
        self.vof.push(vof);
        Ok(())
    }

    pub fn extend(&mut self, other: &DatasetPartition) -> Result<()> {
        if other.shape != self.shape {
            return Err(Error::Dataset(format!(
                "cannot join image shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        self.t.extend_from_slice(&other.t);
        self.h.extend_from_slice(&other.h);
        self.dp.extend(other.dp.iter().cloned());
        self.vof.extend(other.vof.iter().cloned());
        Ok(())
    }

    /// Keep the rows for which `keep(i)` holds.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> DatasetPartition {
        let mut out = DatasetPartition::empty(self.shape);
        for i in 0..self.len() {
            if keep(i) {
                out.t.push(self.t[i]);
                out.h.push(self.h[i]);
                out.dp.push(self.dp[i].clone());
                out.vof.push(self.vof[i].clone());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.h.len() != n || self.dp.len() != n || self.vof.len() != n {
            return Err(Error::Dataset(format!(
                "column lengths differ: t {}, h {}, dp {}, vof {}",
                n,
                self.h.len(),
                self.dp.len(),
                self.vof.len()
            )));
        }
        for (i, (dp, vof)) in self.dp.iter().zip(&self.vof).enumerate() {
            check_row(dp, self.shape.dp_side, "dp").map_err(|e| Error::Dataset(format!("row {i}: {e}")))?;
            check_row(vof, self.shape.vof_side, "vof").map_err(|e| Error::Dataset(format!("row {i}: {e}")))?;
        }
        Ok(())
    }
}

fn check_row(row: &[u32], side: usize, what: &str) -> Result<()> {
    let limit = (side * side) as u32;
    for (k, &v) in row.iter().enumerate() {
        if v >= limit {
            return Err(Error::Dataset(format!("{what} index {v} out of range 0..{limit}")));
        }
        if k > 0 && row[k - 1] >= v {
            return Err(Error::Dataset(format!("{what} indices not strictly increasing at {v}")));
        }
    }
    Ok(())
}

fn write_file(path: &Path, body: String) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn write_partition(p: &DatasetPartition, dir: &Path) -> Result<()> {
    p.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let column = |xs: &[f64]| {
        let mut s = String::with_capacity(16 * xs.len());
        for &x in xs {
            s.push_str(&format_value(x));
            s.push('\n');
        }
        s
    };
    let rows = |rs: &[Vec<u32>]| {
        let mut s = String::new();
        for r in rs {
            let mut first = true;
            for v in r {
                if !first {
                    s.push(',');
                }
                first = false;
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    };
    write_file(&dir.join("t.csv"), column(&p.t))?;
    write_file(&dir.join("h.csv"), column(&p.h))?;
    write_file(&dir.join("dp.csv"), rows(&p.dp))?;
    write_file(&dir.join("vof.csv"), rows(&p.vof))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("not a number: {line:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, i + 1, "non-finite value"));
            }
            Ok(v)
        })
        .collect()
}

fn read_rows(path: &Path, side: usize) -> Result<Vec<Vec<u32>>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() {
                return Ok(Vec::new());
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::parse(path, i + 1, format!("not an index: {tok:?}")))
                })
                .collect::<Result<Vec<u32>>>()?;
            check_row(&row, side, "").map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            Ok(row)
        })
        .collect()
}

pub fn read_partition(dir: &Path) -> Result<DatasetPartition> {
    read_partition_with(dir, ImageShape::default())
}

pub fn read_partition_with(dir: &Path, shape: ImageShape) -> Result<DatasetPartition> {
    let p = DatasetPartition {
        shape,
        t: read_column(&dir.join("t.csv"))?,
        h: read_column(&dir.join("h.csv"))?,
        dp: read_rows(&dir.join("dp.csv"), shape.dp_side)?,
        vof: read_rows(&dir.join("vof.csv"), shape.vof_side)?,
    };
    p.validate().map_err(|e| Error::Dataset(format!("{}: {e}", dir.display())))?;
    Ok(p)
}

/// Directories under `root` (including `root`) that hold a partition, in
/// lexicographic order. A directory holding only some of the four files is
/// an error.
pub fn partition_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::Dataset(format!("{} is not a directory", root.display())));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Dataset(e.to_string()))?;
        if !entry.file_type().is_dir() {
            continue;
        }
        let dir = entry.path();
        let present = FILES.iter().filter(|f| dir.join(f).is_file()).count();
        match present {
            0 => {}
            4 => out.push(dir.to_path_buf()),
            _ => {
                return Err(Error::Dataset(format!(
                    "{}: incomplete partition ({present} of 4 files)",
                    dir.display()
                )))
            }
        }
    }
    Ok(out)
}

/// Concatenate every partition found under `root`.
pub fn compile_root(root: &Path) -> Result<DatasetPartition> {
    let mut all = DatasetPartition::default();
    for dir in partition_dirs(root)? {
        let p = read_partition(&dir)?;
        all.extend(&p)?;
    }
    Ok(all)
}

/// One droplet pattern found in more than one split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leak {
    pub dp: Vec<u32>,
    pub splits: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LeakageReport {
    pub leaks: Vec<Leak>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.leaks.is_empty()
    }
}

impl std::fmt::Display for LeakageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.leaks.is_empty() {
            return writeln!(f, "leakage: none");
        }
        for leak in &self.leaks {
            let dp: Vec<String> = leak.dp.iter().map(u32::to_string).collect();
            writeln!(f, "leakage: dp [{}] in {}", dp.join(","), leak.splits.join(", "))?;
        }
        Ok(())
    }
}

/// Report every dp row that occurs in two or more of the named splits.
/// Repeats inside a single split are expected (one pattern, many snapshots).
pub fn leakage_check(splits: &[(&str, &DatasetPartition)]) -> LeakageReport {
    let mut seen: BTreeMap<&[u32], Vec<usize>> = BTreeMap::new();
    for (k, (_, p)) in splits.iter().enumerate() {
        for row in &p.dp {
            let owners = seen.entry(row.as_slice()).or_default();
            if owners.last() != Some(&k) {
                owners.push(k);
            }
        }
    }
    let leaks = seen
        .into_iter()
        .filter(|(_, owners)| owners.len() > 1)
        .map(|(dp, owners)| Leak {
            dp: dp.to_vec(),
            splits: owners.iter().map(|&k| splits[k].0.to_string()).collect(),
        })
        .collect();
    LeakageReport { leaks }
}
