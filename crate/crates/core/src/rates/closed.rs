//! Closed-form rates for three users, two files and the comparison between
//! the nonuniform scheme and the grouping baseline.
//!
//! File A has probability `p >= 1/2`, file B `1 - p`. All forms are available
//! as `f64` and, for rational `p`, as exact rationals.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::rates::{CurveRow, RateCurve};

fn q(n: i64, d: i64) -> Exact {
    Exact::new(BigInt::from(n), BigInt::from(d))
}

fn check_p(p: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::validation(format!(
            "p = {p} outside [1/2, 1]; relabel the files so that A is the more popular"
        )));
    }
    Ok(())
}

fn check_p_exact(p: &Exact) -> Result<()> {
    if p < &q(1, 2) || p > &Exact::one() {
        return Err(Error::validation(format!("p = {p} outside [1/2, 1]")));
    }
    Ok(())
}

fn cube(x: &Exact) -> Exact {
    x * x * x
}

/// `r = (2,1)`: `2/3 - p^3/3`.
pub fn rate_beta_nested(p: f64) -> f64 {
    2.0 / 3.0 - p.powi(3) / 3.0
}

/// `r = (3,0)` or the baseline with A fully cached: `1 - p^3`.
pub fn rate_full_a(p: f64) -> f64 {
    1.0 - p.powi(3)
}

/// Baseline with one group and memory-sharing between `t = 1` and `t = 2`:
/// `2/3 - (p^3 + (1-p)^3)/6`.
pub fn rate_alpha_single_group(p: f64) -> f64 {
    2.0 / 3.0 - (p.powi(3) + (1.0 - p).powi(3)) / 6.0
}

/// Nonuniform scheme at `M = 1`: `min{2/3 - p^3/3, 1 - p^3}`.
pub fn rate_beta_closed(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(rate_beta_nested(p).min(rate_full_a(p)))
}

/// Grouping baseline at `M = 1`: `min{2/3 - (p^3+(1-p)^3)/6, 1 - p^3}`.
pub fn rate_alpha_closed(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(rate_alpha_single_group(p).min(rate_full_a(p)))
}

pub fn rate_beta_closed_exact(p: &Exact) -> Result<Exact> {
    check_p_exact(p)?;
    let p3 = cube(p);
    let nested = q(2, 3) - &p3 / q(3, 1);
    let full = Exact::one() - p3;
    Ok(nested.min(full))
}

pub fn rate_alpha_single_group_exact(p: &Exact) -> Exact {
    let s = cube(p) + cube(&(Exact::one() - p));
    q(2, 3) - s / q(6, 1)
}

pub fn rate_full_a_exact(p: &Exact) -> Exact {
    Exact::one() - cube(p)
}

pub fn rate_alpha_closed_exact(p: &Exact) -> Result<Exact> {
    check_p_exact(p)?;
    Ok(rate_alpha_single_group_exact(p).min(rate_full_a_exact(p)))
}

/// The nine `(r_1, r_2)` rows of the three-user, two-file sweep.
pub const TABLE_ROWS: [(u32, u32); 9] = [
    (0, 0),
    (1, 0),
    (1, 1),
    (2, 1),
    (3, 0),
    (2, 2),
    (3, 1),
    (3, 2),
    (3, 3),
];

/// Closed-form expected rate of the nonuniform scheme for one row of
/// [`TABLE_ROWS`]; `None` for other r-vectors.
pub fn table_rate_exact(r: (u32, u32), p: &Exact) -> Option<Exact> {
    let a = cube(p);
    let b = cube(&(Exact::one() - p));
    let one = Exact::one();
    Some(match r {
        (0, 0) => q(2, 1) - a - b,
        (1, 0) => q(5, 3) - a - q(2, 3) * b,
        (1, 1) => one - q(1, 3) * a - q(1, 3) * b,
        (2, 1) => q(2, 3) - q(1, 3) * a,
        (3, 0) => one - a,
        (2, 2) => q(1, 3),
        (3, 1) => q(2, 3) - q(2, 3) * a,
        (3, 2) => q(1, 3) - q(1, 3) * a,
        (3, 3) => Exact::zero(),
        _ => return None,
    })
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::validation(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root-finding tolerance for the crossover points.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

/// Where the baseline switches from one group to caching A entirely.
pub fn alpha_branch_threshold() -> f64 {
    bisect(
        |p| rate_alpha_single_group(p) - rate_full_a(p),
        0.5,
        1.0,
        THRESHOLD_TOLERANCE,
    )
    .expect("branches cross inside [1/2, 1]")
}

/// Upper end of the interval where the nonuniform scheme is strictly better;
/// the root of `2/3 - p^3/3 = 1 - p^3`, i.e. `(1/2)^(1/3)`.
pub fn beta_advantage_threshold() -> f64 {
    bisect(
        |p| rate_beta_nested(p) - rate_full_a(p),
        0.5,
        1.0,
        THRESHOLD_TOLERANCE,
    )
    .expect("branches cross inside [1/2, 1]")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub alpha_branch: f64,
    pub beta_advantage_end: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxGain {
    pub p: f64,
    /// `R_beta / R_alpha` at `p`.
    pub ratio: f64,
    pub rate_alpha: f64,
    pub rate_beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub curve: RateCurve,
    pub thresholds: Thresholds,
    pub max_gain: MaxGain,
}

fn ratio(p: f64) -> f64 {
    let a = rate_alpha_single_group(p).min(rate_full_a(p));
    let b = rate_beta_nested(p).min(rate_full_a(p));
    if a > 0.0 {
        b / a
    } else {
        1.0
    }
}

/// Golden-section refinement of the minimum of `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Both `M = 1` curves over `grid`, the crossover points, and the largest
/// relative gain of the nonuniform scheme.
///
/// The gain is located on the grid and then refined by golden-section search
/// between the neighbouring grid points.
pub fn compare_strategies(grid: &[f64]) -> Result<StrategyComparison> {
    if grid.is_empty() {
        return Err(Error::validation("empty p grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("p grid must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &p in grid {
        rows.push(CurveRow {
            x: p,
            values: vec![rate_alpha_closed(p)?, rate_beta_closed(p)?],
        });
    }
    let best = (0..grid.len())
        .min_by(|&i, &j| ratio(grid[i]).total_cmp(&ratio(grid[j])))
        .expect("non-empty grid");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let p = if hi > lo {
        let refined = golden_min(ratio, lo, hi, 1e-10);
        if ratio(refined) <= ratio(grid[best]) {
            refined
        } else {
            grid[best]
        }
    } else {
        grid[best]
    };
    let max_gain = MaxGain {
        p,
        ratio: ratio(p),
        rate_alpha: rate_alpha_closed(p)?,
        rate_beta: rate_beta_closed(p)?,
    };
    let mut curve = RateCurve::new("p", vec!["R_alpha".into(), "R_beta".into()]);
    curve.rows = rows;
    curve.metadata.insert("K".into(), "3".into());
    curve.metadata.insert("N".into(), "2".into());
    curve.metadata.insert("M".into(), "1".into());
    Ok(StrategyComparison {
        curve,
        thresholds: Thresholds {
            alpha_branch: alpha_branch_threshold(),
            beta_advantage_end: beta_advantage_threshold(),
        },
        max_gain,
    })
}
