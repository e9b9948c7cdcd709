//! FoP model parameters and energy evaluation.
//!
//! The energy of a hidden binary image `x` with observation `y` is
//!
//! ```text
//! E(x, y) = sum_k sum_(i,j) V_k(x_k[i,j])  +  sum_k sum_(i,j) x_k(i,j) * D_k(y_k(i,j))
//! ```
//!
//! where `x_k`, `y_k` are pyramid levels, `x_k[i,j]` is the 3x3 window code
//! at `(i,j)` and the sums run over every pixel of every level, overlapping
//! windows included.  Energies are in nats and `p(x|y)` is proportional to
//! `exp(-E(x,y))`.  In invariant mode the `V_k` tables hold one cost per
//! symmetry class; in raw mode one cost per 9-bit code.
//!
//! The same energy is a dot product `w . phi(x,y)` between the flattened
//! parameter vector and per-scale counts of pattern and observation
//! occurrences; learning relies on this form.

use alloc::vec;
use alloc::vec::Vec;

use crate::edit;
use crate::pattern::{pattern_at, PatternCodec, CLASS_COUNT, PATTERN_COUNT};
use crate::pyramid::{BinaryPyramid, GrayPyramid};
use crate::{Error, Result};

fn check_table(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadTable {
            expected,
            got: values.len(),
        });
    }
    Ok(())
}

/// Per-scale pattern costs: 102 entries (invariant) or 512 (raw), in nats.
#[derive(Clone, PartialEq, Debug)]
pub struct PotentialTable {
    values: Vec<f64>,
}

impl PotentialTable {
    pub fn new(values: Vec<f64>, invariant: bool) -> Result<Self> {
        check_table(&values, if invariant { CLASS_COUNT } else { PATTERN_COUNT })?;
        Ok(Self { values })
    }

    pub fn zeros(invariant: bool) -> Self {
        Self {
            values: vec![0.0; if invariant { CLASS_COUNT } else { PATTERN_COUNT }],
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-scale observation costs, one entry per gray value, in nats.
#[derive(Clone, PartialEq, Debug)]
pub struct DataCostTable {
    values: Vec<f64>,
}

impl DataCostTable {
    pub fn new(values: Vec<f64>, gray_levels: usize) -> Result<Self> {
        check_table(&values, gray_levels)?;
        Ok(Self { values })
    }

    pub fn zeros(gray_levels: usize) -> Self {
        Self {
            values: vec![0.0; gray_levels],
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Shape of a model's parameter vector: scale count, gray levels, tying mode.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModelLayout {
    pub levels: usize,
    pub gray_levels: usize,
    pub invariant: bool,
}

impl ModelLayout {
    #[inline]
    pub fn pattern_len(&self) -> usize {
        if self.invariant {
            CLASS_COUNT
        } else {
            PATTERN_COUNT
        }
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.pattern_len() + self.gray_levels
    }

    /// Total length of the flattened parameter / feature vector.
    #[inline]
    pub fn weight_len(&self) -> usize {
        self.levels * self.block_len()
    }

    /// Flat index of the pattern entry `idx` at scale `k`.
    #[inline]
    pub fn pattern_index(&self, k: usize, idx: usize) -> usize {
        k * self.block_len() + idx
    }

    /// Flat index of the observation entry for gray value `v` at scale `k`.
    #[inline]
    pub fn data_index(&self, k: usize, v: usize) -> usize {
        k * self.block_len() + self.pattern_len() + v
    }
}

/// A complete FoP model: per-scale potentials and data costs.
#[derive(Clone, PartialEq, Debug)]
pub struct FoPModel {
    layout: ModelLayout,
    potentials: Vec<PotentialTable>,
    data_costs: Vec<DataCostTable>,
}

impl FoPModel {
    pub fn new(
        potentials: Vec<PotentialTable>,
        data_costs: Vec<DataCostTable>,
        gray_levels: usize,
        invariant: bool,
    ) -> Result<Self> {
        if potentials.is_empty() || potentials.len() != data_costs.len() {
            return Err(Error::LevelMismatch {
                expected: potentials.len().max(1),
                got: data_costs.len(),
            });
        }
        let layout = ModelLayout {
            levels: potentials.len(),
            gray_levels,
            invariant,
        };
        for p in &potentials {
            check_table(p.values(), layout.pattern_len())?;
        }
        for d in &data_costs {
            check_table(d.values(), gray_levels)?;
        }
        Ok(Self {
            layout,
            potentials,
            data_costs,
        })
    }

    pub fn zeros(levels: usize, gray_levels: usize, invariant: bool) -> Self {
        Self {
            layout: ModelLayout {
                levels,
                gray_levels,
                invariant,
            },
            potentials: (0..levels).map(|_| PotentialTable::zeros(invariant)).collect(),
            data_costs: (0..levels).map(|_| DataCostTable::zeros(gray_levels)).collect(),
        }
    }

    #[inline]
    pub fn layout(&self) -> ModelLayout {
        self.layout
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.layout.levels
    }

    #[inline]
    pub fn gray_levels(&self) -> usize {
        self.layout.gray_levels
    }

    #[inline]
    pub fn invariant(&self) -> bool {
        self.layout.invariant
    }

    pub fn potential(&self, k: usize) -> &PotentialTable {
        &self.potentials[k]
    }

    pub fn data_cost(&self, k: usize) -> &DataCostTable {
        &self.data_costs[k]
    }

    /// Flattens to `[V_0 | D_0 | V_1 | D_1 | ...]`.
    pub fn to_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.layout.weight_len());
        for k in 0..self.levels() {
            w.extend_from_slice(self.potentials[k].values());
            w.extend_from_slice(self.data_costs[k].values());
        }
        w
    }

    pub fn from_weights(layout: ModelLayout, weights: &[f64]) -> Result<Self> {
        if weights.len() != layout.weight_len() {
            return Err(Error::BadTable {
                expected: layout.weight_len(),
                got: weights.len(),
            });
        }
        let mut potentials = Vec::with_capacity(layout.levels);
        let mut data_costs = Vec::with_capacity(layout.levels);
        for k in 0..layout.levels {
            let base = k * layout.block_len();
            potentials.push(PotentialTable::new(
                weights[base..base + layout.pattern_len()].to_vec(),
                layout.invariant,
            )?);
            data_costs.push(DataCostTable::new(
                weights[base + layout.pattern_len()..base + layout.block_len()].to_vec(),
                layout.gray_levels,
            )?);
        }
        FoPModel::new(potentials, data_costs, layout.gray_levels, layout.invariant)
    }

    /// Single-scale restriction used as a band-sampler proposal.
    pub fn level_zero_slice(&self) -> FoPModel {
        FoPModel {
            layout: ModelLayout {
                levels: 1,
                ..self.layout
            },
            potentials: vec![self.potentials[0].clone()],
            data_costs: vec![self.data_costs[0].clone()],
        }
    }

    /// Expands the tables into per-code lookup form for the hot paths.
    pub fn cost_model(&self, codec: &PatternCodec) -> CostModel {
        let code_cost = self
            .potentials
            .iter()
            .map(|p| {
                let mut table = vec![0.0f64; PATTERN_COUNT];
                for (code, slot) in table.iter_mut().enumerate() {
                    let idx = if self.layout.invariant {
                        codec.class_of(crate::pattern::PatternCode::new(code as u16).unwrap())
                    } else {
                        code
                    };
                    *slot = p.values()[idx];
                }
                table
            })
            .collect();
        CostModel {
            levels: self.levels(),
            gray_levels: self.gray_levels(),
            code_cost,
            data_cost: self.data_costs.iter().map(|d| d.values().to_vec()).collect(),
        }
    }
}

/// Per-code expansion of a model: `code_cost[k][code]` and `data_cost[k][v]`.
///
/// This is what samplers evaluate against; it is read-only and cheap to
/// rebuild whenever the parameters change.
#[derive(Clone, Debug)]
pub struct CostModel {
    levels: usize,
    gray_levels: usize,
    code_cost: Vec<Vec<f64>>,
    data_cost: Vec<Vec<f64>>,
}

impl CostModel {
    #[inline]
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn gray_levels(&self) -> usize {
        self.gray_levels
    }

    #[inline]
    pub fn window_cost(&self, k: usize, code: u16) -> f64 {
        self.code_cost[k][code as usize]
    }

    #[inline]
    pub fn data_cost(&self, k: usize, v: u16) -> f64 {
        self.data_cost[k][v as usize]
    }

    #[inline]
    pub(crate) fn code_costs(&self, k: usize) -> &[f64] {
        &self.code_cost[k]
    }

    #[inline]
    pub(crate) fn data_costs(&self, k: usize) -> &[f64] {
        &self.data_cost[k]
    }

    /// Level-k code costs re-indexed for a transposed image.
    pub(crate) fn transposed_code_costs(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0f64; PATTERN_COUNT];
        for (code, slot) in out.iter_mut().enumerate() {
            *slot = self.code_cost[k][crate::pattern::transpose_code(code as u16) as usize];
        }
        out
    }
}

fn check_pyramids(levels: usize, px: &BinaryPyramid, py: Option<&GrayPyramid>) -> Result<()> {
    if px.levels() < levels {
        return Err(Error::LevelMismatch {
            expected: levels,
            got: px.levels(),
        });
    }
    if let Some(py) = py {
        if py.levels() < levels {
            return Err(Error::LevelMismatch {
                expected: levels,
                got: py.levels(),
            });
        }
        for k in 0..levels {
            let (bx, by) = (px.level(k), py.level(k));
            if bx.rows() != by.rows() || bx.cols() != by.cols() {
                return Err(Error::DimensionMismatch {
                    expected: (bx.rows(), bx.cols()),
                    got: (by.rows(), by.cols()),
                });
            }
        }
    }
    Ok(())
}

pub(crate) fn energy_fop_costs(costs: &CostModel, px: &BinaryPyramid) -> f64 {
    let mut total = 0.0;
    for k in 0..costs.levels() {
        let img = px.level(k);
        let table = costs.code_costs(k);
        for i in 0..img.rows() {
            for j in 0..img.cols() {
                total += table[pattern_at(img, i, j).value() as usize];
            }
        }
    }
    total
}

pub(crate) fn energy_data_costs(costs: &CostModel, px: &BinaryPyramid, py: &GrayPyramid) -> f64 {
    let mut total = 0.0;
    for k in 0..costs.levels() {
        let (bx, by) = (px.level(k), py.level(k));
        let table = costs.data_costs(k);
        for i in 0..bx.rows() {
            for j in 0..bx.cols() {
                if bx.get(i, j) {
                    total += table[by.get(i, j) as usize];
                }
            }
        }
    }
    total
}

/// Pattern energy: summed window costs over every level of the pyramid.
pub fn energy_fop(model: &FoPModel, codec: &PatternCodec, px: &BinaryPyramid) -> Result<f64> {
    check_pyramids(model.levels(), px, None)?;
    Ok(energy_fop_costs(&model.cost_model(codec), px))
}

/// Observation energy: `sum_k sum_(i,j) x_k(i,j) * D_k(y_k(i,j))`.
pub fn energy_data(model: &FoPModel, px: &BinaryPyramid, py: &GrayPyramid) -> Result<f64> {
    check_pyramids(model.levels(), px, Some(py))?;
    let costs = CostModel {
        levels: model.levels(),
        gray_levels: model.gray_levels(),
        code_cost: vec![],
        data_cost: model.data_costs.iter().map(|d| d.values().to_vec()).collect(),
    };
    Ok(energy_data_costs(&costs, px, py))
}

/// Total energy `E(x,y)`.
pub fn energy_total(
    model: &FoPModel,
    codec: &PatternCodec,
    px: &BinaryPyramid,
    py: &GrayPyramid,
) -> Result<f64> {
    check_pyramids(model.levels(), px, Some(py))?;
    let costs = model.cost_model(codec);
    Ok(energy_fop_costs(&costs, px) + energy_data_costs(&costs, px, py))
}

/// Per-scale counts of pattern classes and of on-pixel observation values.
#[derive(Clone, PartialEq, Debug)]
pub struct FeatureVector {
    layout: ModelLayout,
    values: Vec<f64>,
}

impl FeatureVector {
    #[inline]
    pub fn layout(&self) -> ModelLayout {
        self.layout
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.values.len());
        self.values.iter().zip(weights).map(|(a, b)| a * b).sum()
    }
}

/// Counts `phi(x, y)` so that `E(x,y) = w . phi(x,y)`.
pub fn features(
    layout: ModelLayout,
    codec: &PatternCodec,
    px: &BinaryPyramid,
    py: &GrayPyramid,
) -> Result<FeatureVector> {
    check_pyramids(layout.levels, px, Some(py))?;
    let mut values = vec![0.0f64; layout.weight_len()];
    for k in 0..layout.levels {
        let (bx, by) = (px.level(k), py.level(k));
        for i in 0..bx.rows() {
            for j in 0..bx.cols() {
                let code = pattern_at(bx, i, j);
                let idx = if layout.invariant {
                    codec.class_of(code)
                } else {
                    code.value() as usize
                };
                values[layout.pattern_index(k, idx)] += 1.0;
                if bx.get(i, j) {
                    let v = by.get(i, j) as usize;
                    if v >= layout.gray_levels {
                        return Err(Error::BadPixel { row: i, col: j });
                    }
                    values[layout.data_index(k, v)] += 1.0;
                }
            }
        }
    }
    Ok(FeatureVector { layout, values })
}

/// Energy difference from flipping the listed level-0 pixels.
///
/// Flips are XOR-toggles (a pixel listed twice is unchanged); the result
/// equals full recomputation of `E(x',y) - E(x,y)` up to the cost of only
/// the affected pyramid cells and windows.
pub fn delta_energy(
    model: &FoPModel,
    codec: &PatternCodec,
    px: &BinaryPyramid,
    py: Option<&GrayPyramid>,
    flips: &[(usize, usize)],
) -> Result<f64> {
    check_pyramids(model.levels(), px, py)?;
    let costs = model.cost_model(codec);
    let mut scratch = px.clone();
    let staged = edit::stage_flips(&mut scratch, py, &[&costs], flips)?;
    Ok(staged.deltas[0])
}
