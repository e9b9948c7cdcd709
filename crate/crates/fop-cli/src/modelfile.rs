//! The model file format.
//!
//! Line-oriented text: a `fop-model v1` magic line, `K`, `M` and `mode`
//! headers (plus optional `lambda` training metadata and a `step` line in
//! checkpoints), then for every scale k a `V <k>` block of pattern costs
//! and a `D <k>` block of observation costs, one decimal float per line.
//! Floats print in shortest round-trip form, so save followed by load
//! reproduces the parameters exactly.  Parsing accepts any whitespace
//! layout; writing is canonical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fop_core::model::{DataCostTable, FoPModel, PotentialTable};

#[derive(Debug)]
pub struct ModelFile {
    pub model: FoPModel,
    pub lambda: Option<f64>,
    pub step: Option<u64>,
}

pub fn save_model(path: &Path, model: &FoPModel, lambda: Option<f64>, step: Option<u64>) -> Result<()> {
    let mut out = String::new();
    out.push_str("fop-model v1\n");
    writeln!(out, "K {}", model.levels())?;
    writeln!(out, "M {}", model.gray_levels())?;
    writeln!(out, "mode {}", if model.invariant() { "invariant" } else { "raw" })?;
    if let Some(l) = lambda {
        writeln!(out, "lambda {l}")?;
    }
    if let Some(s) = step {
        writeln!(out, "step {s}")?;
    }
    for k in 0..model.levels() {
        writeln!(out, "V {k}")?;
        for v in model.potential(k).values() {
            writeln!(out, "{v}")?;
        }
        writeln!(out, "D {k}")?;
        for d in model.data_cost(k).values() {
            writeln!(out, "{d}")?;
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut tokens = text.split_whitespace();
    let mut next = || tokens.next().ok_or_else(|| anyhow::anyhow!("{}: truncated model file", path.display()));

    if next()? != "fop-model" || next()? != "v1" {
        bail!("{}: not a fop-model v1 file", path.display());
    }

    let mut levels: Option<usize> = None;
    let mut gray_levels: Option<usize> = None;
    let mut invariant: Option<bool> = None;
    let mut lambda = None;
    let mut step = None;

    // Header keys in any order until the first table marker.
    loop {
        let key = next()?;
        match key {
            "K" => levels = Some(next()?.parse().context("K")?),
            "M" => gray_levels = Some(next()?.parse().context("M")?),
            "mode" => {
                invariant = Some(match next()? {
                    "invariant" => true,
                    "raw" => false,
                    other => bail!("{}: unknown mode `{other}`", path.display()),
                })
            }
            "lambda" => lambda = Some(next()?.parse().context("lambda")?),
            "step" => step = Some(next()?.parse().context("step")?),
            "V" => break,
            other => bail!("{}: unexpected header `{other}`", path.display()),
        }
    }
    let levels = levels.ok_or_else(|| anyhow::anyhow!("{}: missing K header", path.display()))?;
    let gray_levels =
        gray_levels.ok_or_else(|| anyhow::anyhow!("{}: missing M header", path.display()))?;
    let invariant = invariant.ok_or_else(|| anyhow::anyhow!("{}: missing mode header", path.display()))?;
    if levels == 0 {
        bail!("{}: K must be at least 1", path.display());
    }
    let pattern_len = if invariant { 102 } else { 512 };

    let mut potentials = Vec::with_capacity(levels);
    let mut data_costs = Vec::with_capacity(levels);
    for k in 0..levels {
        // The "V" token for k = 0 was consumed by the header loop.
        if k > 0 && next()? != "V" {
            bail!("{}: expected `V {k}` block", path.display());
        }
        let idx: usize = next()?.parse().context("V index")?;
        if idx != k {
            bail!("{}: V block out of order: expected {k}, got {idx}", path.display());
        }
        let mut values = Vec::with_capacity(pattern_len);
        for _ in 0..pattern_len {
            values.push(next()?.parse::<f64>().context("potential value")?);
        }
        potentials.push(PotentialTable::new(values, invariant)?);

        if next()? != "D" {
            bail!("{}: expected `D {k}` block", path.display());
        }
        let idx: usize = next()?.parse().context("D index")?;
        if idx != k {
            bail!("{}: D block out of order: expected {k}, got {idx}", path.display());
        }
        let mut values = Vec::with_capacity(gray_levels);
        for _ in 0..gray_levels {
            values.push(next()?.parse::<f64>().context("data cost value")?);
        }
        data_costs.push(DataCostTable::new(values, gray_levels)?);
    }
    if tokens.next().is_some() {
        bail!("{}: trailing data after the last table", path.display());
    }
    Ok(ModelFile {
        model: FoPModel::new(potentials, data_costs, gray_levels, invariant)?,
        lambda,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fop_core::model::ModelLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_model(seed: u64, levels: usize, m: usize, invariant: bool) -> FoPModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = ModelLayout {
            levels,
            gray_levels: m,
            invariant,
        };
        let w: Vec<f64> = (0..layout.weight_len())
            .map(|_| rng.gen_range(-2.0..2.0) * rng.gen_range(1e-8..1e3))
            .collect();
        FoPModel::from_weights(layout, &w).unwrap()
    }

    #[test]
    fn save_load_round_trips_exactly() {
        let dir = tempdir().unwrap();
        for (seed, levels, m, invariant) in [(1, 1, 4, true), (2, 3, 16, false), (3, 4, 256, true)] {
            let model = random_model(seed, levels, m, invariant);
            let path = dir.path().join(format!("m{seed}.fop"));
            save_model(&path, &model, Some(1e-3), Some(42)).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.model.to_weights(), model.to_weights());
            assert_eq!(loaded.model.invariant(), invariant);
            assert_eq!(loaded.lambda, Some(1e-3));
            assert_eq!(loaded.step, Some(42));
        }
    }

    #[test]
    fn truncated_file_is_a_structured_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fop");
        let model = random_model(5, 1, 4, true);
        save_model(&path, &model, None, None).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        fs::write(&path, lines[..lines.len() / 2].join("\n")).unwrap();
        let err = load_model(&path).unwrap_err().to_string();
        assert!(err.contains("truncated"), "unexpected error: {err}");
    }

    #[test]
    fn header_errors_are_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fop");
        fs::write(&path, "not-a-model\n").unwrap();
        assert!(load_model(&path).is_err());
        fs::write(&path, "fop-model v1\nK 1\nM 4\nmode upside-down\n").unwrap();
        let err = load_model(&path).unwrap_err().to_string();
        assert!(err.contains("unknown mode"));
    }

    #[test]
    fn whitespace_tolerant_parse() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fop");
        let model = random_model(7, 1, 2, true);
        save_model(&path, &model, None, None).unwrap();
        let squashed = fs::read_to_string(&path).unwrap().replace('\n', " ");
        fs::write(&path, squashed).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.model.to_weights(), model.to_weights());
    }
}
