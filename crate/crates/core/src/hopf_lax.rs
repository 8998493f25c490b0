//! Exact Hopf-Lax semigroup
//! `Q_t f(x) = min_y f(y) + d(x,y)^p / (p t^{p−1})` by enumeration, with
//! the extreme minimizer distances `D±(x, t)` and numerical checks of the
//! laws they satisfy.

use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::slopes::asymptotic_lip_estimate;
use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{par, Error, Result};

/// Two candidates whose objectives differ by at most this much are both
/// minimizers.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Points with `|D+ − D−|` above this are exceptional for the time
/// derivative law and are skipped.
pub const EXCEPTION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfLaxResult {
    pub t: f64,
    pub p: f64,
    /// Dual exponent `p/(p−1)`.
    pub q: f64,
    pub values: Vec<f64>,
    pub dplus: Vec<f64>,
    pub dminus: Vec<f64>,
    pub argmin_sets: Vec<Vec<usize>>,
}

impl HopfLaxResult {
    pub fn field(&self, space: &MetricMeasureSpace) -> Result<ScalarField> {
        ScalarField::new(space, self.values.clone())
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("exponent p must exceed 1, got {p}")))
    }
}

pub fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

pub fn hopf_lax(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
    t: f64,
) -> Result<HopfLaxResult> {
    f.belongs_to(space)?;
    check_p(p)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(format!(
            "time must be positive, got {t}; use hopf_lax_at_zero for t = 0"
        )));
    }
    let v = f.values();
    let scale = 1.0 / (p * t.powf(p - 1.0));
    let per_point = par::map_range(space.len(), |x| {
        let row = space.row(x);
        let objective: Vec<f64> = (0..space.len())
            .map(|y| v[y] + row[y].powf(p) * scale)
            .collect();
        let best = objective.iter().copied().fold(f64::INFINITY, f64::min);
        let argmin: Vec<usize> = (0..space.len())
            .filter(|&y| objective[y] <= best + TIE_TOLERANCE)
            .collect();
        let dmin = argmin.iter().map(|&y| row[y]).fold(f64::INFINITY, f64::min);
        let dmax = argmin.iter().map(|&y| row[y]).fold(0.0, f64::max);
        (best, dmin, dmax, argmin)
    });
    let mut out = HopfLaxResult {
        t,
        p,
        q: dual_exponent(p),
        values: Vec::with_capacity(space.len()),
        dplus: Vec::with_capacity(space.len()),
        dminus: Vec::with_capacity(space.len()),
        argmin_sets: Vec::with_capacity(space.len()),
    };
    for (best, dmin, dmax, argmin) in per_point {
        out.values.push(best);
        out.dminus.push(dmin);
        out.dplus.push(dmax);
        out.argmin_sets.push(argmin);
    }
    Ok(out)
}

/// The `t = 0` convention: `Q_0 f = f`, `D± = 0`, each point its own
/// minimizer.
pub fn hopf_lax_at_zero(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
) -> Result<HopfLaxResult> {
    f.belongs_to(space)?;
    check_p(p)?;
    let n = space.len();
    Ok(HopfLaxResult {
        t: 0.0,
        p,
        q: dual_exponent(p),
        values: f.values().to_vec(),
        dplus: vec![0.0; n],
        dminus: vec![0.0; n],
        argmin_sets: (0..n).map(|x| vec![x]).collect(),
    })
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Empty("time grid"));
    }
    if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "times must be positive and strictly increasing",
        ));
    }
    Ok(())
}

/// `D+(x, t) ≤ D−(x, s)` for consecutive grid times `t < s`; also checks
/// that `t ↦ Q_t f(x)` is nonincreasing.
pub fn check_monotonicity(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
    times: &[f64],
) -> Result<Report> {
    check_times(times)?;
    let runs = times
        .iter()
        .map(|&t| hopf_lax(space, f, p, t))
        .collect::<Result<Vec<_>>>()?;
    let mut worst_d = 0.0f64;
    let mut worst_q = 0.0f64;
    let mut per_step = Vec::new();
    for w in runs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mut step = 0.0f64;
        for x in 0..space.len() {
            step = step.max(a.dplus[x] - b.dminus[x]);
            worst_q = worst_q.max(b.values[x] - a.values[x]);
        }
        worst_d = worst_d.max(step);
        per_step.push(step.max(0.0));
    }
    let mut r = Report::new("hopf_lax_monotonicity");
    r.metric("p", p)
        .series("times", times.to_vec())
        .series("dplus_minus_dminus_next", per_step)
        .count("points", space.len() as u64)
        .check(
            "d_monotone",
            worst_d <= 1e-12,
            worst_d.max(0.0),
            1e-12,
            "D+(x,t) ≤ D−(x,s) for t < s",
        )
        .check(
            "q_nonincreasing",
            worst_q <= 1e-12,
            worst_q.max(0.0),
            1e-12,
            "Q_s f ≤ Q_t f for t < s",
        );
    Ok(r)
}

/// Residual tolerance and pass quorum for the derivative law.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
pub const DERIVATIVE_QUORUM: f64 = 0.95;

/// Compares `(Q_{t+h} f − Q_{t−h} f)/(2h)` with `−(1/q)(D(x,t)/t)^p` at
/// points where `D+ = D−`.
pub fn check_time_derivative(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
    t: f64,
    h: f64,
) -> Result<Report> {
    if !(h > 0.0 && t > h) {
        return Err(Error::param("time derivative check needs t > h > 0"));
    }
    let mid = hopf_lax(space, f, p, t)?;
    let up = hopf_lax(space, f, p, t + h)?;
    let down = hopf_lax(space, f, p, t - h)?;
    let q = mid.q;
    let mut residuals = Vec::new();
    let mut skipped = 0u64;
    for x in 0..space.len() {
        if (mid.dplus[x] - mid.dminus[x]).abs() > EXCEPTION_TOLERANCE {
            skipped += 1;
            continue;
        }
        let fd = (up.values[x] - down.values[x]) / (2.0 * h);
        let law = -(mid.dplus[x] / t).powf(p) / q;
        residuals.push((fd - law).abs());
    }
    let good = residuals
        .iter()
        .filter(|r| **r <= DERIVATIVE_TOLERANCE)
        .count();
    let fraction = if residuals.is_empty() {
        1.0
    } else {
        good as f64 / residuals.len() as f64
    };
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let mut r = Report::new("hopf_lax_time_derivative");
    r.metric("p", p)
        .metric("t", t)
        .metric("h", h)
        .metric("max_residual", max)
        .metric("fraction_within_tolerance", fraction)
        .count("skipped_exceptional", skipped)
        .count("evaluated", residuals.len() as u64)
        .series("residuals", residuals)
        .check(
            "derivative_law",
            fraction >= DERIVATIVE_QUORUM,
            fraction,
            DERIVATIVE_QUORUM,
            "fraction of non-exceptional points with residual ≤ 1e-5",
        );
    Ok(r)
}

pub const SUBSOLUTION_TOLERANCE: f64 = 1e-2;
pub const SUBSOLUTION_QUORUM: f64 = 0.9;

/// `max(0, ∂_t Q_t f + (1/q) Lip(Q_t f, B(x, r))^q)` per point, with the
/// time derivative by central differences. The finite radius overestimates
/// the asymptotic Lipschitz constant, so residuals grow with `r`.
pub fn check_subsolution(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
    t: f64,
    h: f64,
    r: f64,
) -> Result<Report> {
    if !(h > 0.0 && t > h) {
        return Err(Error::param("subsolution check needs t > h > 0"));
    }
    let mid = hopf_lax(space, f, p, t)?;
    let up = hopf_lax(space, f, p, t + h)?;
    let down = hopf_lax(space, f, p, t - h)?;
    let lip = asymptotic_lip_estimate(space, &mid.field(space)?, r)?;
    let q = mid.q;
    let residuals: Vec<f64> = (0..space.len())
        .map(|x| {
            let fd = (up.values[x] - down.values[x]) / (2.0 * h);
            (fd + lip.values[x].powf(q) / q).max(0.0)
        })
        .collect();
    let good = residuals
        .iter()
        .filter(|v| **v <= SUBSOLUTION_TOLERANCE)
        .count();
    let fraction = good as f64 / residuals.len().max(1) as f64;
    let mut rep = Report::new("hopf_lax_subsolution");
    rep.metric("p", p)
        .metric("t", t)
        .metric("h", h)
        .metric("radius", r)
        .metric(
            "max_residual",
            residuals.iter().copied().fold(0.0, f64::max),
        )
        .metric("fraction_within_tolerance", fraction)
        .count("empty_balls", lip.empty as u64)
        .series("residuals", residuals)
        .check(
            "subsolution",
            fraction >= SUBSOLUTION_QUORUM,
            fraction,
            SUBSOLUTION_QUORUM,
            "fraction of points with residual ≤ 1e-2 at the given radius",
        );
    Ok(rep)
}

/// `Lip(Q_t f) / Lip(f) ≤ p` and `D+ ≤ t (p Lip f)^{1/(p−1)}` at every
/// grid time.
pub fn lipschitz_bound_check(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    p: f64,
    times: &[f64],
) -> Result<Report> {
    f.belongs_to(space)?;
    check_p(p)?;
    check_times(times)?;
    let lip_f = space.lipschitz_constant(f.values());
    let mut ratios = Vec::new();
    let mut d_excess = 0.0f64;
    for &t in times {
        let run = hopf_lax(space, f, p, t)?;
        let lip_q = space.lipschitz_constant(&run.values);
        ratios.push(if lip_f == 0.0 { 0.0 } else { lip_q / lip_f });
        let bound = t * (p * lip_f).powf(1.0 / (p - 1.0));
        for &d in &run.dplus {
            d_excess = d_excess.max(d - bound);
        }
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let mut r = Report::new("hopf_lax_lipschitz");
    r.metric("p", p)
        .metric("lip_f", lip_f)
        .series("times", times.to_vec())
        .series("lip_ratio", ratios)
        .check(
            "lipschitz_ratio",
            worst <= p + 1e-12,
            worst,
            p + 1e-12,
            "Lip(Q_t f)/Lip(f) ≤ p",
        )
        .check(
            "dplus_bound",
            d_excess <= 0.0,
            d_excess.max(0.0),
            0.0,
            "D+ ≤ t (p Lip f)^(1/(p−1))",
        );
    Ok(r)
}
