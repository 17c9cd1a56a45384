//! Maximization over the reversal strength and threshold crossing in p.

use crate::error::{Error, Result};
use crate::fidelity::{fidelity_closed, FidelityKind};
use crate::measures::{ln_block_eigenvalue, mw_global_entanglement};
use crate::params::{transmissivity, GhzParams, ProtocolParams};

/// Upper end of the search interval for r.
pub const R_MAX: f64 = 1.0 - 1e-9;
pub const GRID_POINTS: usize = 201;
pub const R_TOLERANCE: f64 = 1e-7;
pub const P_TOLERANCE: f64 = 1e-5;
/// Threshold below which an entanglement measure counts as dead.
pub const DEATH_THRESHOLD: f64 = 1e-3;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarOptimum {
    pub r: f64,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptResult {
    pub r_opt: f64,
    pub value_opt: f64,
    pub transmissivity_at_opt: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalResult {
    pub p_critical: f64,
    pub threshold_used: f64,
    pub bracket_width: f64,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(f64) -> Result<f64>> Counted<F> {
    fn eval(&mut self, r: f64) -> Result<f64> {
        self.calls += 1;
        let v = (self.f)(r)?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("objective is {v} at r = {r}")));
        }
        Ok(v)
    }
}

/// Grid search over [0, R_MAX] followed by golden-section refinement on the
/// two cells around the best grid point. Ties go to the smaller r.
pub fn maximize_over_r<F>(objective: F, tolerance: f64) -> Result<ScalarOptimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f = Counted { f: objective, calls: 0 };
    let step = R_MAX / (GRID_POINTS - 1) as f64;
    let mut best = (0.0, f.eval(0.0)?);
    let mut best_i = 0;
    for i in 1..GRID_POINTS {
        let r = i as f64 * step;
        let v = f.eval(r)?;
        if v > best.1 {
            best = (r, v);
            best_i = i;
        }
    }

    let mut lo = best_i.saturating_sub(1) as f64 * step;
    let mut hi = ((best_i + 1).min(GRID_POINTS - 1)) as f64 * step;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f.eval(x1)?;
    let mut f2 = f.eval(x2)?;
    while hi - lo > tolerance {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f.eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f.eval(x2)?;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 || (v == best.1 && x < best.0) {
            best = (x, v);
        }
    }
    Ok(ScalarOptimum { r: best.0, value: best.1, evaluations: f.calls })
}

/// Quantity maximized over r at fixed (θ, n, s, p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    Ln { gp: GhzParams, s: f64, p: f64, m: usize },
    Mw { gp: GhzParams, s: f64, p: f64 },
    Fidelity { kind: FidelityKind, n: usize, s: f64, p: f64 },
}

impl Objective {
    fn params(&self, r: f64) -> Result<(GhzParams, ProtocolParams)> {
        match *self {
            Objective::Ln { gp, s, p, m } => Ok((gp, ProtocolParams::new(s, p, r, m)?)),
            Objective::Mw { gp, s, p } => Ok((gp, ProtocolParams::new(s, p, r, 1)?)),
            Objective::Fidelity { n, s, p, .. } => Ok((GhzParams::symmetric(n)?, ProtocolParams::new(s, p, r, 1)?)),
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        match *self {
            Objective::Ln { .. } => {
                let (gp, pp) = self.params(r)?;
                Ok(ln_block_eigenvalue(&gp, &pp)?.e_ln)
            }
            Objective::Mw { .. } => {
                let (gp, pp) = self.params(r)?;
                Ok(mw_global_entanglement(&gp, &pp)?.e_mw)
            }
            Objective::Fidelity { kind, n, s, p } => fidelity_closed(kind, n, s, p, r),
        }
    }

    pub fn transmissivity(&self, r: f64) -> Result<f64> {
        let (gp, pp) = self.params(r)?;
        Ok(transmissivity(&gp, &pp))
    }

    pub fn with_p(self, p: f64) -> Self {
        match self {
            Objective::Ln { gp, s, m, .. } => Objective::Ln { gp, s, p, m },
            Objective::Mw { gp, s, .. } => Objective::Mw { gp, s, p },
            Objective::Fidelity { kind, n, s, .. } => Objective::Fidelity { kind, n, s, p },
        }
    }

    pub fn optimize(&self) -> Result<OptResult> {
        let opt = maximize_over_r(|r| self.eval(r), R_TOLERANCE)?;
        Ok(OptResult {
            r_opt: opt.r,
            value_opt: opt.value,
            transmissivity_at_opt: self.transmissivity(opt.r)?,
            evaluations: opt.evaluations,
        })
    }
}

/// Bisection for the damping strength where a decreasing curve drops to
/// `threshold`. Requires curve(lo) > threshold ≥ curve(hi).
pub fn find_critical_p<F>(mut curve: F, threshold: f64, p_lo: f64, p_hi: f64) -> Result<CriticalResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    find_critical_p_with_slack(&mut curve, threshold, p_lo, p_hi, 0.0)
}

/// As [`find_critical_p`], but accepts curve(hi) ≤ threshold + `slack` at the
/// upper end. Needed where the curve only touches the threshold at p_hi.
pub fn find_critical_p_with_slack<F>(
    mut curve: F,
    threshold: f64,
    p_lo: f64,
    p_hi: f64,
    slack: f64,
) -> Result<CriticalResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (p_lo, p_hi);
    if !(curve(lo)? > threshold && curve(hi)? <= threshold + slack) {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > P_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if curve(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalResult { p_critical: 0.5 * (lo + hi), threshold_used: threshold, bracket_width: hi - lo })
}
