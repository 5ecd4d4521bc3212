//! Declarative split recipes: which fraction of each category's simulations
//! goes into which split.
//!
//! ```text
//! # <split>.<category> = <fraction of the category's simulations>
//! training.1 = 0.125
//! validation.1 = 0.125
//! training.4 = 1.0
//! ```
//!
//! Splits that draw on the same category receive disjoint, contiguous runs
//! of its simulation directories (in name order), allotted in the order the
//! splits first appear in the file. Whole simulations are assigned, so one
//! simulation's snapshots never straddle two splits.

use std::fs;
use std::path::Path;

use super::{partition_dirs, read_partition, DatasetPartition};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SplitSpec {
    pub name: String,
    /// `(category, fraction)` in file order.
    pub parts: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitRecipe {
    pub splits: Vec<SplitSpec>,
}

impl SplitRecipe {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut recipe = SplitRecipe::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse(path, i + 1, msg);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected <split>.<category> = <fraction>".into()))?;
            let (name, cat) = key
                .trim()
                .rsplit_once('.')
                .ok_or_else(|| err(format!("key {key:?} lacks a .<category> suffix")))?;
            let category: usize = cat.parse().map_err(|_| err(format!("bad category {cat:?}")))?;
            let fraction: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("bad fraction {:?}", value.trim())))?;
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(err(format!("fraction {fraction} outside (0, 1]")));
            }
            if name.is_empty() {
                return Err(err("empty split name".into()));
            }
            let idx = match recipe.splits.iter().position(|s| s.name == name) {
                Some(k) => k,
                None => {
                    recipe.splits.push(SplitSpec {
                        name: name.to_string(),
                        parts: Vec::new(),
                    });
                    recipe.splits.len() - 1
                }
            };
            let spec = &mut recipe.splits[idx];
            if spec.parts.iter().any(|&(c, _)| c == category) {
                return Err(err(format!("{name}.{category} given twice")));
            }
            spec.parts.push((category, fraction));
        }
        recipe.check()?;
        Ok(recipe)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn check(&self) -> Result<()> {
        let mut cats: Vec<usize> = self.splits.iter().flat_map(|s| s.parts.iter().map(|p| p.0)).collect();
        cats.sort_unstable();
        cats.dedup();
        for c in cats {
            let total: f64 = self.fractions_of(c).map(|(_, f)| f).sum();
            if total > 1.0 + 1e-9 {
                return Err(Error::Dataset(format!("category {c} is over-allotted ({total})")));
            }
        }
        Ok(())
    }

    /// `(split index, fraction)` for every split drawing on `category`.
    fn fractions_of(&self, category: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.splits.iter().enumerate().filter_map(move |(k, s)| {
            s.parts.iter().find(|p| p.0 == category).map(|p| (k, p.1))
        })
    }

    /// Simulation index ranges `[start, end)` of `category` per split, for a
    /// category holding `n_sims` simulations.
    pub fn allot(&self, category: usize, n_sims: usize) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut cum = 0.0;
        let mut out = Vec::new();
        for (k, f) in self.fractions_of(category) {
            let start = (cum * n_sims as f64).round() as usize;
            cum += f;
            let end = ((cum * n_sims as f64).round() as usize).min(n_sims);
            out.push((k, start..end));
        }
        out
    }
}

/// Assemble every split of `recipe` from `<root>/<category>/<sim_id>/`.
pub fn apply_recipe(root: &Path, recipe: &SplitRecipe) -> Result<Vec<(String, DatasetPartition)>> {
    let mut out: Vec<(String, DatasetPartition)> =
        recipe.splits.iter().map(|s| (s.name.clone(), DatasetPartition::default())).collect();
    let mut cats: Vec<usize> = recipe.splits.iter().flat_map(|s| s.parts.iter().map(|p| p.0)).collect();
    cats.sort_unstable();
    cats.dedup();
    for c in cats {
        let dir = root.join(c.to_string());
        let sims = partition_dirs(&dir)?;
        for (k, range) in recipe.allot(c, sims.len()) {
            for sim in &sims[range] {
                let p = read_partition(sim)?;
                out[k].1.extend(&p)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECIPE: &str = "\
# shared category 1, exclusive others
training.1 = 0.125
validation.1 = 0.125   # trailing comment
test.1 = 0.125
training.4 = 1.0
validation.5 = 1.0
";

    #[test]
    fn parses_in_first_appearance_order() {
        let r = SplitRecipe::parse(RECIPE, Path::new("r.conf")).unwrap();
        let names: Vec<&str> = r.splits.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["training", "validation", "test"]);
        assert_eq!(r.splits[0].parts, vec![(1, 0.125), (4, 1.0)]);
    }

    #[test]
    fn shared_category_gets_disjoint_ranges() {
        let r = SplitRecipe::parse(RECIPE, Path::new("r.conf")).unwrap();
        assert_eq!(r.allot(1, 400), vec![(0, 0..50), (1, 50..100), (2, 100..150)]);
        assert_eq!(r.allot(4, 100), vec![(0, 0..100)]);
        assert_eq!(r.allot(7, 100), vec![]);
    }

    #[test]
    fn rejects_bad_recipes() {
        let p = Path::new("r.conf");
        assert!(SplitRecipe::parse("training.1 = 0.7\ntest.1 = 0.4\n", p).is_err());
        assert!(SplitRecipe::parse("training = 1.0\n", p).is_err());
        assert!(SplitRecipe::parse("training.x = 1.0\n", p).is_err());
        assert!(SplitRecipe::parse("training.1 = 0\n", p).is_err());
        assert!(SplitRecipe::parse("training.1 = 0.5\ntraining.1 = 0.5\n", p).is_err());
    }
}
