//! Central finite-difference check of [`crate::gradients`].

use crate::data::LinkInstance;
use crate::error::Result;
use crate::model::{bce_loss, SpectralModel};
use crate::train::gradients;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub checked: usize,
    /// Coordinates that missed the tolerance at `h` with one-sided differences
    /// disagreeing by more than the miss, i.e. a ReLU or sort-order kink lies
    /// in `[θ-h, θ+h]`. These are re-checked at `h / 100`.
    pub kinks: usize,
    /// Largest `|fd - g| / max(1, |g|)`, kink coordinates at their smaller step.
    pub max_rel_error: f64,
}

fn batch_loss(model: &SpectralModel, batch: &[&LinkInstance]) -> Result<f64> {
    let mut total = 0.0;
    for inst in batch {
        total += bce_loss(model.forward(inst)?, inst.label);
    }
    Ok(total / batch.len() as f64)
}

fn central(
    m: &mut SpectralModel,
    p: &mut [f64],
    base: &[f64],
    idx: usize,
    h: f64,
    batch: &[&LinkInstance],
) -> Result<(f64, f64, f64)> {
    p[idx] = base[idx] + h;
    m.set_flat(p)?;
    let up = batch_loss(m, batch)?;
    p[idx] = base[idx] - h;
    m.set_flat(p)?;
    let down = batch_loss(m, batch)?;
    p[idx] = base[idx];
    Ok(((up - down) / (2.0 * h), up, down))
}

/// Compares every analytic gradient coordinate with `(ℓ(θ+h) − ℓ(θ−h)) / 2h`.
pub fn finite_difference_check(model: &SpectralModel, batch: &[&LinkInstance], h: f64) -> Result<Vec<GroupCheck>> {
    let (_, grad) = gradients(model, batch)?;
    let g = grad.to_flat();
    let base = model.to_flat();
    let l0 = batch_loss(model, batch)?;
    let mut m = model.clone();
    let mut p = base.clone();
    let mut out = Vec::new();
    for (name, range) in model.groups() {
        let mut check = GroupCheck {
            name,
            checked: 0,
            kinks: 0,
            max_rel_error: 0.0,
        };
        for idx in range {
            let scale = g[idx].abs().max(1.0);
            let (fd, up, down) = central(&mut m, &mut p, &base, idx, h, batch)?;
            let err = (fd - g[idx]).abs() / scale;
            check.checked += 1;
            if err <= 1e-4 {
                check.max_rel_error = check.max_rel_error.max(err);
                continue;
            }
            let one_sided_gap = ((up - l0) / h - (l0 - down) / h).abs();
            if one_sided_gap > (fd - g[idx]).abs() {
                check.kinks += 1;
                let (fd_small, _, _) = central(&mut m, &mut p, &base, idx, h / 100.0, batch)?;
                check.max_rel_error = check.max_rel_error.max((fd_small - g[idx]).abs() / scale);
            } else {
                check.max_rel_error = check.max_rel_error.max(err);
            }
        }
        m.set_flat(&p)?;
        out.push(check);
    }
    Ok(out)
}
