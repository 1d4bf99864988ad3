use alloc::format;

use crate::error::{Error, Result};

/// DA tolerance used for convergence and goal crossing.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-5;

/// Number of trailing baseline points used for the linear fit.
pub const FIT_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupEstimate {
    /// Baseline time to the goal divided by the target's convergence time;
    /// infinite when the baseline fit never reaches the goal.
    pub speedup: f64,
    pub goal_da: f64,
    pub target_time: f64,
    pub baseline_time: f64,
    /// The baseline time came from the linear fit rather than the data.
    pub extrapolated: bool,
    /// Set with `extrapolated`: a linear continuation favors the baseline.
    pub optimistic_for_baseline: bool,
    pub infinite: bool,
    /// Fit `da = intercept + slope·t` when extrapolated.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

fn check(points: &[(f64, f64)], what: &str) -> Result<()> {
    if points.iter().any(|(t, d)| !t.is_finite() || !d.is_finite()) {
        return Err(Error::Trajectory(format!("{what} trajectory has non-finite entries")));
    }
    if points.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::Trajectory(format!(
            "{what} trajectory times must be non-decreasing"
        )));
    }
    Ok(())
}

/// First time after which the trajectory stays within the tolerance of its
/// final value.
fn convergence_time(target: &[(f64, f64)]) -> Result<(f64, f64)> {
    let (_, last) = *target
        .last()
        .ok_or_else(|| Error::Trajectory("empty target trajectory".into()))?;
    if target.len() < 2 || (target[target.len() - 2].1 - last).abs() > CONVERGENCE_TOLERANCE {
        return Err(Error::Trajectory(format!(
            "target has not converged to within {CONVERGENCE_TOLERANCE:e} at its last two points"
        )));
    }
    let mut first = target.len() - 1;
    while first > 0 && (target[first - 1].1 - last).abs() <= CONVERGENCE_TOLERANCE {
        first -= 1;
    }
    Ok((target[first].0, last))
}

/// Time at which the piecewise-linear trajectory first reaches `level`.
fn first_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    if points.first()?.1 >= level {
        return Some(points[0].0);
    }
    points.windows(2).find_map(|w| {
        let ((t0, d0), (t1, d1)) = (w[0], w[1]);
        (d1 >= level).then(|| t0 + (t1 - t0) * (level - d0) / (d1 - d0))
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / m;
    let md = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - md)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (md - slope * mt, slope)
}

/// Estimated speedup of `target` over `baseline` (both `(seconds, da)`)
/// for reaching `fraction` of the target's final DA. When the baseline never
/// reaches the goal, its time is extrapolated from a least-squares line
/// through its last ten points.
pub fn estimate_speedup(baseline: &[(f64, f64)], target: &[(f64, f64)], fraction: f64) -> Result<SpeedupEstimate> {
    check(baseline, "baseline")?;
    check(target, "target")?;
    if baseline.len() < FIT_POINTS {
        return Err(Error::Trajectory(format!(
            "baseline needs at least {FIT_POINTS} points, got {}",
            baseline.len()
        )));
    }
    if !(fraction > 0.0) {
        return Err(Error::Trajectory(format!(
            "solution fraction must be positive, got {fraction}"
        )));
    }
    let (target_time, final_da) = convergence_time(target)?;
    if !(target_time > 0.0) {
        return Err(Error::Trajectory("target converged at time zero".into()));
    }
    let goal_da = fraction * final_da;
    let mut estimate = SpeedupEstimate {
        speedup: 0.0,
        goal_da,
        target_time,
        baseline_time: 0.0,
        extrapolated: false,
        optimistic_for_baseline: false,
        infinite: false,
        slope: None,
        intercept: None,
    };
    if let Some(t) = first_crossing(baseline, goal_da - CONVERGENCE_TOLERANCE) {
        estimate.baseline_time = t;
        estimate.speedup = t / target_time;
        return Ok(estimate);
    }
    let (intercept, slope) = least_squares(&baseline[baseline.len() - FIT_POINTS..]);
    estimate.extrapolated = true;
    estimate.optimistic_for_baseline = true;
    estimate.slope = Some(slope);
    estimate.intercept = Some(intercept);
    if slope <= 0.0 {
        estimate.infinite = true;
        estimate.baseline_time = f64::INFINITY;
        estimate.speedup = f64::INFINITY;
        return Ok(estimate);
    }
    estimate.baseline_time = (goal_da - intercept) / slope;
    estimate.speedup = estimate.baseline_time / target_time;
    Ok(estimate)
}
