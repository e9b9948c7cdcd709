//! Incremental pyramid updates.
//!
//! Flipping level-0 pixels changes at most one cell per level (per pixel),
//! and each changed cell affects at most the 9 windows centered on its
//! neighborhood.  An [`EditPlan`] lists exactly the cells whose value
//! changes; since cells are binary, applying and undoing a plan are the
//! same toggle operation.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::BinaryImage;
use crate::model::CostModel;
use crate::pattern::pattern_at;
use crate::pyramid::{BinaryPyramid, GrayPyramid};
use crate::{Error, Result};

/// Cells that change value, per level, sorted by coordinate.
#[derive(Clone, Debug, Default)]
pub(crate) struct EditPlan {
    /// `changes[k]` holds `(i, j, new_value)` for level k.
    pub changes: Vec<Vec<(u32, u32, bool)>>,
}

/// Simulates the OR-propagation of a flip set without touching the pyramid.
pub(crate) fn plan_flips(px: &BinaryPyramid, flips: &[(usize, usize)]) -> Result<EditPlan> {
    let base = px.level(0);
    for &(i, j) in flips {
        if i >= base.rows() || j >= base.cols() {
            return Err(Error::OutOfRange { row: i, col: j });
        }
    }

    // XOR semantics: only pixels listed an odd number of times flip.
    let mut sorted: Vec<(u32, u32)> = flips.iter().map(|&(i, j)| (i as u32, j as u32)).collect();
    sorted.sort_unstable();
    let mut level0 = Vec::new();
    let mut idx = 0;
    while idx < sorted.len() {
        let mut end = idx + 1;
        while end < sorted.len() && sorted[end] == sorted[idx] {
            end += 1;
        }
        if (end - idx) % 2 == 1 {
            let (i, j) = sorted[idx];
            level0.push((i, j, !base.get(i as usize, j as usize)));
        }
        idx = end;
    }

    let mut changes = Vec::with_capacity(px.levels());
    changes.push(level0);
    for k in 1..px.levels() {
        let prev = &changes[k - 1];
        if prev.is_empty() {
            changes.push(Vec::new());
            continue;
        }
        let child = px.level(k - 1);
        let parent = px.level(k);
        let mut parents: Vec<(u32, u32)> = prev.iter().map(|&(i, j, _)| (i / 2, j / 2)).collect();
        parents.sort_unstable();
        parents.dedup();
        let mut level = Vec::new();
        for (pi, pj) in parents {
            let mut on = false;
            for a in 0..2u32 {
                for b in 0..2u32 {
                    let (ci, cj) = (2 * pi + a, 2 * pj + b);
                    if (ci as usize) < child.rows() && (cj as usize) < child.cols() {
                        let v = match prev.binary_search_by(|&(x, y, _)| (x, y).cmp(&(ci, cj))) {
                            Ok(pos) => prev[pos].2,
                            Err(_) => child.get(ci as usize, cj as usize),
                        };
                        on |= v;
                    }
                }
            }
            if on != parent.get(pi as usize, pj as usize) {
                level.push((pi, pj, on));
            }
        }
        changes.push(level);
    }
    Ok(EditPlan { changes })
}

/// Applies (or, called again, undoes) a plan.
pub(crate) fn toggle(px: &mut BinaryPyramid, plan: &EditPlan) {
    for (k, level) in plan.changes.iter().enumerate() {
        let img = px.level_mut(k);
        for &(i, j, _) in level {
            img.toggle(i as usize, j as usize);
        }
    }
}

/// Window centers whose code can change when the listed cells do.
fn affected_centers(level: &[(u32, u32, bool)], rows: usize, cols: usize) -> Vec<(u32, u32)> {
    let mut centers = Vec::with_capacity(level.len() * 9);
    for &(i, j, _) in level {
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (ci, cj) = (i as i64 + di, j as i64 + dj);
                if ci >= 0 && cj >= 0 && (ci as usize) < rows && (cj as usize) < cols {
                    centers.push((ci as u32, cj as u32));
                }
            }
        }
    }
    centers.sort_unstable();
    centers.dedup();
    centers
}

fn window_sum(code_costs: &[f64], img: &BinaryImage, centers: &[(u32, u32)]) -> f64 {
    centers
        .iter()
        .map(|&(i, j)| code_costs[pattern_at(img, i as usize, j as usize).value() as usize])
        .sum()
}

/// A staged (already applied) edit, with one energy delta per cost model.
pub(crate) struct StagedEdit {
    pub plan: EditPlan,
    pub deltas: Vec<f64>,
}

/// Plans a flip set, measures `E(new) - E(old)` under each model, and leaves
/// the pyramid in the new state.  Call [`toggle`] with the plan to back out.
pub(crate) fn stage_flips(
    px: &mut BinaryPyramid,
    py: Option<&GrayPyramid>,
    models: &[&CostModel],
    flips: &[(usize, usize)],
) -> Result<StagedEdit> {
    let plan = plan_flips(px, flips)?;
    let mut deltas = vec![0.0f64; models.len()];

    let mut centers: Vec<Vec<(u32, u32)>> = Vec::with_capacity(px.levels());
    for k in 0..px.levels() {
        let img = px.level(k);
        centers.push(affected_centers(&plan.changes[k], img.rows(), img.cols()));
    }

    for (mi, model) in models.iter().enumerate() {
        debug_assert!(model.levels() <= px.levels());
        for k in 0..model.levels() {
            deltas[mi] -= window_sum(model.code_costs(k), px.level(k), &centers[k]);
        }
        if let Some(py) = py {
            for k in 0..model.levels() {
                for &(i, j, new) in &plan.changes[k] {
                    let d = model.data_cost(k, py.level(k).get(i as usize, j as usize));
                    deltas[mi] += if new { d } else { -d };
                }
            }
        }
    }

    toggle(px, &plan);

    for (mi, model) in models.iter().enumerate() {
        for k in 0..model.levels() {
            deltas[mi] += window_sum(model.code_costs(k), px.level(k), &centers[k]);
        }
    }

    Ok(StagedEdit { plan, deltas })
}
