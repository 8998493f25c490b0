//! Maximal functions, Lebesgue-point profiles, doubling constants,
//! Poincaré constants and the telescoping estimate.
//!
//! All ball means are mass-weighted over open balls. A ball of zero mass has
//! no mean; such balls are flagged instead of contributing a zero.

use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{par, Error, Result};

/// A ball sample `B(point, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub point: usize,
    pub radius: f64,
}

/// Radii `diam/2, diam/4, …` down to (not below) the smallest positive
/// distance.
pub fn radius_ladder(space: &MetricMeasureSpace) -> Vec<f64> {
    let diam = space.diameter();
    let res = space.resolution();
    let mut radii = Vec::new();
    if !(diam > 0.0) {
        return radii;
    }
    let mut r = diam / 2.0;
    while r > res {
        radii.push(r);
        r /= 2.0;
    }
    radii
}

/// Every support point at every radius of [`radius_ladder`]. A space with a
/// single support point gets one probe of radius 1.
pub fn default_probe_grid(space: &MetricMeasureSpace) -> Vec<Probe> {
    let mut radii = radius_ladder(space);
    if radii.is_empty() {
        radii.push(1.0);
    }
    let support = space.support();
    radii
        .iter()
        .flat_map(|&r| {
            support.iter().map(move |&x| Probe {
                point: x,
                radius: r,
            })
        })
        .collect()
}

/// Parses a probe grid from CSV rows `point_id,radius` (a header row is
/// accepted if present).
pub fn probes_from_csv(space: &MetricMeasureSpace, text: &str) -> Result<Vec<Probe>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut probes = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!(
                "probe line {}: expected 2 columns",
                line + 1
            )));
        }
        let radius: f64 = match rec[1].parse() {
            Ok(r) => r,
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "probe line {}: bad radius `{}`",
                    line + 1,
                    &rec[1]
                )))
            }
        };
        if !(radius > 0.0) {
            return Err(Error::Parse(format!(
                "probe line {}: radius must be positive",
                line + 1
            )));
        }
        probes.push(Probe {
            point: space.index_of(&rec[0])?,
            radius,
        });
    }
    Ok(probes)
}

fn ball_mass(space: &MetricMeasureSpace, row: &[f64], r: f64) -> f64 {
    (0..space.len())
        .filter(|&y| row[y] < r)
        .map(|y| space.mass(y))
        .sum()
}

/// Distances from `x` sorted ascending, paired with point indices.
fn sorted_neighbors(space: &MetricMeasureSpace, x: usize) -> Vec<(f64, usize)> {
    let row = space.row(x);
    let mut v: Vec<(f64, usize)> = row.iter().copied().zip(0..).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v
}

/// `sup_{0<r≤eps}` of the mass-weighted mean of `|f|^q` over `B(x, r)`,
/// raised to `1/q`, from the distances to `x` in ascending order. Ball
/// prefixes of zero mass are skipped; if every admissible ball has zero
/// mass the value is 0.
fn maximal_sorted(
    space: &MetricMeasureSpace,
    sorted: &[(f64, usize)],
    f: &[f64],
    q: f64,
    eps: f64,
) -> f64 {
    let (mut m, mut s) = (0.0, 0.0);
    let mut best = 0.0f64;
    for (k, &(d, y)) in sorted.iter().enumerate() {
        if d >= eps {
            break;
        }
        m += space.mass(y);
        s += space.mass(y) * f[y].abs().powf(q);
        let closes_group = sorted.get(k + 1).is_none_or(|next| next.0 > d);
        if closes_group && m > 0.0 {
            best = best.max(s / m);
        }
    }
    best.powf(1.0 / q)
}

fn maximal_at(space: &MetricMeasureSpace, f: &[f64], q: f64, eps: f64, x: usize) -> f64 {
    maximal_sorted(space, &sorted_neighbors(space, x), f, q, eps)
}

/// Per-point distance orderings, reusable across many maximal-function
/// evaluations on one space.
pub struct BallIndex {
    sorted: Vec<Vec<(f64, usize)>>,
}

impl BallIndex {
    pub fn new(space: &MetricMeasureSpace) -> Self {
        BallIndex {
            sorted: par::map_range(space.len(), |x| sorted_neighbors(space, x)),
        }
    }

    pub fn maximal(
        &self,
        space: &MetricMeasureSpace,
        f: &ScalarField,
        q: f64,
        eps: f64,
    ) -> Result<ScalarField> {
        f.belongs_to(space)?;
        if self.sorted.len() != space.len() {
            return Err(Error::Mismatch("ball index was built on a different space"));
        }
        if !(q >= 1.0) {
            return Err(Error::param(format!(
                "maximal function needs q ≥ 1, got {q}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::param(format!("eps must be positive, got {eps}")));
        }
        let v = f.values();
        ScalarField::new(
            space,
            par::map_slice(&self.sorted, |sorted| {
                maximal_sorted(space, sorted, v, q, eps)
            }),
        )
    }
}

/// The ε-maximal function `M^ε_q f`.
pub fn maximal_function(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    q: f64,
    eps: f64,
) -> Result<ScalarField> {
    f.belongs_to(space)?;
    BallIndex::new(space).maximal(space, f, q, eps)
}

/// Mass-weighted mean of `|f(y) − f(x)|^q` over the given point set, or
/// `None` when the set has zero mass.
fn oscillation_mean(
    space: &MetricMeasureSpace,
    f: &[f64],
    q: f64,
    x: usize,
    set: &[usize],
) -> Option<f64> {
    let m: f64 = set.iter().map(|&y| space.mass(y)).sum();
    if !(m > 0.0) {
        return None;
    }
    let s: f64 = set
        .iter()
        .map(|&y| space.mass(y) * (f[y] - f[x]).abs().powf(q))
        .sum();
    Some(s / m)
}

/// `(1/m(B(x,r))) ∫_{B(x,r)} |f − f(x)|^q dm` per radius. Zero-mass balls
/// give `None`.
pub fn lebesgue_profile(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    q: f64,
    x: usize,
    radii: &[f64],
) -> Result<Vec<Option<f64>>> {
    f.belongs_to(space)?;
    space.check_index(x)?;
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param(
            "radii must be positive and strictly decreasing",
        ));
    }
    let row = space.row(x);
    Ok(radii
        .iter()
        .map(|&r| {
            let ball: Vec<usize> = (0..space.len()).filter(|&y| row[y] < r).collect();
            oscillation_mean(space, f.values(), q, x, &ball)
        })
        .collect())
}

/// Variant over arbitrary sets `E_n` (each expected to sit between a small
/// ball and `B(x, r_n)`). Zero-mass sets give `None`.
pub fn lebesgue_profile_sets(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    q: f64,
    x: usize,
    sets: &[Vec<usize>],
) -> Result<Vec<Option<f64>>> {
    f.belongs_to(space)?;
    space.check_index(x)?;
    for set in sets {
        for &y in set {
            space.check_index(y)?;
        }
    }
    Ok(sets
        .iter()
        .map(|set| oscillation_mean(space, f.values(), q, x, set))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    /// Greedy covering count, an upper bound for the covering number.
    pub c_d_metric: usize,
    pub c_d_measure: f64,
    /// `log2(c_d_measure)`.
    pub alpha: f64,
    /// `c_d_measure²`.
    pub beta: f64,
    pub samples: Vec<Probe>,
}

impl DoublingReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("doubling_constants");
        r.metric("c_d_metric", self.c_d_metric as f64)
            .metric("c_d_measure", self.c_d_measure)
            .metric("alpha", self.alpha)
            .metric("beta", self.beta)
            .count("probes", self.samples.len() as u64);
        r
    }
}

/// Number of `r/2`-balls needed to cover `B(x, r)`, as found by a greedy
/// rule: repeatedly take the uncovered member `y` farthest from `x`, center
/// a ball at the member within `r/2` of `y` that lies closest to `x`, and
/// remove what it covers; finally drop balls that the others already cover.
fn greedy_cover_count(space: &MetricMeasureSpace, x: usize, r: f64) -> usize {
    let row = space.row(x);
    let members: Vec<usize> = (0..space.len()).filter(|&y| row[y] < r).collect();
    let mut uncovered = members.clone();
    let mut centers = Vec::new();
    while !uncovered.is_empty() {
        let &y = uncovered
            .iter()
            .max_by(|&&a, &&b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
            .expect("nonempty");
        let yrow = space.row(y);
        let &c = members
            .iter()
            .filter(|&&z| yrow[z] < r / 2.0)
            .min_by(|&&a, &&b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
            .expect("y covers itself");
        let crow = space.row(c);
        uncovered.retain(|&y| crow[y] >= r / 2.0);
        centers.push(c);
    }
    let covers: Vec<Vec<bool>> = centers
        .iter()
        .map(|&c| {
            let crow = space.row(c);
            members.iter().map(|&y| crow[y] < r / 2.0).collect()
        })
        .collect();
    let mut multiplicity = vec![0usize; members.len()];
    for cov in &covers {
        for (k, &hit) in cov.iter().enumerate() {
            multiplicity[k] += hit as usize;
        }
    }
    let mut count = centers.len();
    for cov in &covers {
        let redundant = cov
            .iter()
            .zip(&multiplicity)
            .all(|(&hit, &m)| !hit || m >= 2);
        if redundant {
            for (k, &hit) in cov.iter().enumerate() {
                multiplicity[k] -= hit as usize;
            }
            count -= 1;
        }
    }
    count
}

pub fn doubling_constants(space: &MetricMeasureSpace, probes: &[Probe]) -> Result<DoublingReport> {
    if probes.is_empty() {
        return Err(Error::Empty("probe grid"));
    }
    for p in probes {
        space.check_index(p.point)?;
        if !(p.radius > 0.0) {
            return Err(Error::param(format!(
                "probe radius must be positive, got {}",
                p.radius
            )));
        }
    }
    let per_probe = par::map_slice(probes, |p| {
        let row = space.row(p.point);
        let inner = ball_mass(space, &row, p.radius);
        let outer = ball_mass(space, &row, 2.0 * p.radius);
        (greedy_cover_count(space, p.point, p.radius), inner, outer)
    });
    let mut c_metric = 1usize;
    let mut c_measure = 1.0f64;
    for (p, (cover, inner, outer)) in probes.iter().zip(per_probe) {
        if !(inner > 0.0) {
            return Err(Error::param(format!(
                "probe at point {} radius {} has an empty ball",
                p.point, p.radius
            )));
        }
        c_metric = c_metric.max(cover);
        c_measure = c_measure.max(outer / inner);
    }
    Ok(DoublingReport {
        c_d_metric: c_metric,
        c_d_measure: c_measure,
        alpha: c_measure.log2(),
        beta: c_measure * c_measure,
        samples: probes.to_vec(),
    })
}

/// Least-squares fit of `ln m(B(x, r))` against `ln r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub radii: Vec<f64>,
    /// Mean over the centers of `ln m(B(x, r))`, per radius.
    pub log_mass: Vec<f64>,
}

/// Fits the mass growth exponent over the given radii, averaging
/// `ln m(B(x, r))` over `centers`.
pub fn mass_scaling_slope(
    space: &MetricMeasureSpace,
    centers: &[usize],
    radii: &[f64],
) -> Result<ScalingFit> {
    if centers.is_empty() {
        return Err(Error::Empty("no centers for the scaling fit"));
    }
    if radii.len() < 2 {
        return Err(Error::param("the scaling fit needs at least two radii"));
    }
    for &c in centers {
        space.check_index(c)?;
    }
    let rows = par::map_slice(centers, |&c| space.row(c).into_owned());
    let mut log_mass = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut acc = 0.0;
        for row in &rows {
            let m = ball_mass(space, row, r);
            if !(m > 0.0) {
                return Err(Error::param(format!("zero-mass ball at radius {r}")));
            }
            acc += m.ln();
        }
        log_mass.push(acc / centers.len() as f64);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &log_mass);
    Ok(ScalingFit {
        slope,
        intercept,
        radii: radii.to_vec(),
        log_mass,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Middle half of a radius ladder: drops the first and last quarter.
pub fn middle_half(radii: &[f64]) -> Vec<f64> {
    let n = radii.len();
    let lo = n / 4;
    let hi = n - n / 4;
    radii[lo..hi].to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// Per probe; `f64::INFINITY` marks a positive oscillation with zero
    /// gradient mean.
    pub tau_required: Vec<f64>,
    pub tau_global: f64,
    /// Smallest positive finite per-probe value, 0 if none.
    pub tau_min_positive: f64,
    pub lambda: f64,
    pub infinite: usize,
    pub empty_balls: usize,
    pub probes: Vec<Probe>,
}

impl PoincareReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("poincare");
        r.metric("tau_global", self.tau_global)
            .metric("tau_min_positive", self.tau_min_positive)
            .metric("lambda", self.lambda)
            .count("infinite", self.infinite as u64)
            .count("empty_balls", self.empty_balls as u64)
            .count("probes", self.probes.len() as u64);
        r
    }

    /// Largest τ at each probe radius, in order of first appearance.
    pub fn tau_by_radius(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (p, &t) in self.probes.iter().zip(&self.tau_required) {
            match out.iter_mut().find(|(r, _)| *r == p.radius) {
                Some(entry) => entry.1 = entry.1.max(t),
                None => out.push((p.radius, t)),
            }
        }
        out
    }

    /// Ratio of the largest to the smallest positive per-radius τ; 1 if no
    /// radius has a positive τ.
    pub fn spread(&self) -> f64 {
        let taus: Vec<f64> = self
            .tau_by_radius()
            .into_iter()
            .map(|(_, t)| t)
            .filter(|t| *t > 0.0)
            .collect();
        if taus.is_empty() {
            return 1.0;
        }
        let hi = taus.iter().copied().fold(0.0, f64::max);
        let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

fn mean_over(
    space: &MetricMeasureSpace,
    row: &[f64],
    r: f64,
    f: impl Fn(usize) -> f64,
) -> Option<f64> {
    let (mut m, mut s) = (0.0, 0.0);
    for (y, &d) in row.iter().enumerate() {
        if d < r {
            m += space.mass(y);
            s += space.mass(y) * f(y);
        }
    }
    (m > 0.0).then(|| s / m)
}

/// Smallest τ with `⨍_{B(x,r)} |u − u_B| ≤ τ r (⨍_{B(x,Λr)} g^q)^{1/q}`
/// per probe.
pub fn poincare_check(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &ScalarField,
    q: f64,
    lambda: f64,
    probes: &[Probe],
) -> Result<PoincareReport> {
    u.belongs_to(space)?;
    g.belongs_to(space)?;
    if !(q >= 1.0) || !(lambda >= 1.0) {
        return Err(Error::param("poincare check needs q ≥ 1 and lambda ≥ 1"));
    }
    if g.values().iter().any(|v| *v < 0.0) {
        return Err(Error::param("gradient surrogate must be nonnegative"));
    }
    for p in probes {
        space.check_index(p.point)?;
    }
    let (uv, gv) = (u.values(), g.values());
    let taus: Vec<Option<f64>> = par::map_slice(probes, |p| {
        let row = space.row(p.point);
        let mean_u = mean_over(space, &row, p.radius, |y| uv[y])?;
        let lhs = mean_over(space, &row, p.radius, |y| (uv[y] - mean_u).abs())?;
        let grad = mean_over(space, &row, lambda * p.radius, |y| gv[y].powf(q))?.powf(1.0 / q);
        let rhs = p.radius * grad;
        Some(if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        })
    });
    let empty_balls = taus.iter().filter(|t| t.is_none()).count();
    let tau_required: Vec<f64> = taus.into_iter().map(|t| t.unwrap_or(0.0)).collect();
    let infinite = tau_required.iter().filter(|t| t.is_infinite()).count();
    let tau_global = tau_required.iter().copied().fold(0.0, f64::max);
    let tau_min_positive = tau_required
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && t.is_finite())
        .fold(f64::INFINITY, f64::min);
    Ok(PoincareReport {
        tau_required,
        tau_global,
        tau_min_positive: if tau_min_positive.is_finite() {
            tau_min_positive
        } else {
            0.0
        },
        lambda,
        infinite,
        empty_balls,
        probes: probes.to_vec(),
    })
}

/// Per pair, `|u(x) − u(y)| / (d(x,y)(M g(x) + M g(y)))` with the maximal
/// function taken at scale `2Λd(x,y)`; compared against
/// `C = 2·2^{1+α}·β·τ`.
#[allow(clippy::too_many_arguments)]
pub fn telescoping_check(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &ScalarField,
    q: f64,
    lambda: f64,
    pairs: &[(usize, usize)],
    doubling: &DoublingReport,
    tau: f64,
) -> Result<Report> {
    u.belongs_to(space)?;
    g.belongs_to(space)?;
    for &(x, y) in pairs {
        space.check_index(x)?;
        space.check_index(y)?;
        if space.dist(x, y) == 0.0 {
            return Err(Error::param(format!("pair ({x}, {y}) is at zero distance")));
        }
    }
    let (uv, gv) = (u.values(), g.values());
    let ratios = par::map_slice(pairs, |&(x, y)| {
        let d = space.dist(x, y);
        let eps = 2.0 * lambda * d;
        let denom = d * (maximal_at(space, gv, q, eps, x) + maximal_at(space, gv, q, eps, y));
        let num = (uv[x] - uv[y]).abs();
        if num == 0.0 {
            0.0
        } else if denom == 0.0 {
            f64::INFINITY
        } else {
            num / denom
        }
    });
    let c = 2.0 * 2f64.powf(1.0 + doubling.alpha) * doubling.beta * tau;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let violations = ratios.iter().filter(|r| **r > c).count();
    let mut r = Report::new("telescoping");
    r.metric("alpha", doubling.alpha)
        .metric("beta", doubling.beta)
        .metric("tau", tau)
        .metric("constant", c)
        .metric("max_ratio", worst)
        .count("pairs", pairs.len() as u64)
        .count("violations", violations as u64)
        .check(
            "telescoping_bound",
            violations == 0,
            worst,
            c,
            "max ratio ≤ 2·2^(1+α)·β·τ",
        );
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{interval, koch, random_cloud};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Scans every radius in `(0, eps]` by walking the distinct distances.
    fn brute_maximal(space: &MetricMeasureSpace, f: &[f64], q: f64, eps: f64, x: usize) -> f64 {
        let mut radii: Vec<f64> = (0..space.len()).map(|y| space.dist(x, y)).collect();
        radii.push(eps);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let mut best = 0.0f64;
        for &d in &radii {
            // a radius just above d, but no larger than eps
            let r = if d < eps {
                (d + 1e-15).max(d * (1.0 + 1e-12)).min(eps)
            } else {
                continue;
            };
            let ball: Vec<usize> = (0..space.len()).filter(|&y| space.dist(x, y) < r).collect();
            let m: f64 = ball.iter().map(|&y| space.mass(y)).sum();
            if m > 0.0 {
                let s: f64 = ball
                    .iter()
                    .map(|&y| space.mass(y) * f[y].abs().powf(q))
                    .sum();
                best = best.max(s / m);
            }
        }
        best.powf(1.0 / q)
    }

    #[test]
    fn maximal_of_constant() {
        let s = interval(21).unwrap();
        let f = ScalarField::constant(&s, 3.0).unwrap();
        for q in [1.0, 2.0, 3.5] {
            for eps in [0.01, 0.2, 2.0] {
                let m = maximal_function(&s, &f, q, eps).unwrap();
                assert!(m.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn maximal_of_indicator_matches_radius_scan() {
        let s = interval(101).unwrap();
        let f = ScalarField::from_fn(&s, |i| if s.abscissa(i) <= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let m = maximal_function(&s, &f, 1.0, 0.5).unwrap();
        let x = 50;
        let oracle = brute_maximal(&s, f.values(), 1.0, 0.5, x);
        assert!((m.values()[x] - oracle).abs() < 1e-12);
        // the smallest ball is {x} itself, where the indicator is 1
        assert!((m.values()[x] - 1.0).abs() < 1e-12);
        for x in [0, 37, 63, 100] {
            let oracle = brute_maximal(&s, f.values(), 1.0, 0.5, x);
            assert!((m.values()[x] - oracle).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn lebesgue_profile_linear_decreases() {
        let s = interval(1001).unwrap();
        let f = ScalarField::from_fn(&s, |i| s.abscissa(i)).unwrap();
        let p = lebesgue_profile(&s, &f, 1.0, 500, &[0.1, 0.05, 0.01]).unwrap();
        let v: Vec<f64> = p.into_iter().map(Option::unwrap).collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        // mean of |y − x| over a symmetric ball of radius r is about r/2
        assert!((v[0] - 0.05).abs() < 1e-3);
    }

    #[test]
    fn lebesgue_profile_jump_stays_away_from_zero() {
        let s = interval(1001).unwrap();
        let f = ScalarField::from_fn(&s, |i| if i < 500 { 0.0 } else { 1.0 }).unwrap();
        let p = lebesgue_profile(&s, &f, 1.0, 500, &[0.1, 0.05, 0.01]).unwrap();
        for v in p {
            assert!(v.unwrap() > 0.45);
        }
    }

    #[test]
    fn lebesgue_profile_sets_and_errors() {
        let s = interval(11).unwrap();
        let f = ScalarField::from_fn(&s, |i| s.abscissa(i)).unwrap();
        let v = lebesgue_profile_sets(&s, &f, 1.0, 5, &[vec![5, 6], vec![]]).unwrap();
        assert!((v[0].unwrap() - 0.05).abs() < 1e-12);
        assert!(v[1].is_none());
        assert!(lebesgue_profile(&s, &f, 1.0, 5, &[0.1, 0.2]).is_err());
        let zero = s.with_masses(vec![0.0; 11]).unwrap();
        let g = ScalarField::constant(&zero, 1.0).unwrap();
        assert_eq!(
            lebesgue_profile(&zero, &g, 1.0, 5, &[0.3]).unwrap(),
            vec![None]
        );
    }

    #[test]
    fn doubling_on_interval() {
        let s = interval(1001).unwrap();
        let probes: Vec<Probe> = [0.2, 0.1, 0.05]
            .iter()
            .flat_map(|&r| {
                (300..=700).step_by(50).map(move |x| Probe {
                    point: x,
                    radius: r,
                })
            })
            .collect();
        let d = doubling_constants(&s, &probes).unwrap();
        assert!((2..=3).contains(&d.c_d_metric), "{}", d.c_d_metric);
        assert!((d.c_d_measure - 2.0).abs() < 0.01, "{}", d.c_d_measure);
        assert!((d.alpha - d.c_d_measure.log2()).abs() < 1e-15);
        assert!((d.beta - d.c_d_measure.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn doubling_is_scale_stable_on_interval() {
        let s = interval(401).unwrap();
        for r in [0.2, 0.1, 0.05] {
            let at = |r: f64| {
                let probes: Vec<Probe> = (0..401)
                    .map(|x| Probe {
                        point: x,
                        radius: r,
                    })
                    .collect();
                doubling_constants(&s, &probes).unwrap()
            };
            let (a, b) = (at(r), at(r / 2.0));
            assert!(a.c_d_measure / b.c_d_measure <= 2.0 && b.c_d_measure / a.c_d_measure <= 2.0);
            assert!(a.c_d_metric <= 2 * b.c_d_metric && b.c_d_metric <= 2 * a.c_d_metric);
        }
    }

    #[test]
    fn doubling_single_point() {
        let s = interval(2).unwrap();
        let one =
            crate::space::MetricMeasureSpace::euclidean(vec![s.points()[0].clone()], vec![1.0])
                .unwrap();
        let d = doubling_constants(&one, &default_probe_grid(&one)).unwrap();
        assert_eq!(d.c_d_metric, 1);
        assert_eq!(d.c_d_measure, 1.0);
        assert!(doubling_constants(&one, &[]).is_err());
    }

    #[test]
    fn koch_scaling_interior() {
        let s = koch(5).unwrap();
        let ladder = radius_ladder(&s);
        let radii = middle_half(&ladder);
        let rmax = radii[0];
        let n = s.len();
        let centers: Vec<usize> = (0..n)
            .filter(|&x| s.dist(x, 0) >= rmax && s.dist(x, n - 1) >= rmax)
            .collect();
        let fit = mass_scaling_slope(&s, &centers, &radii).unwrap();
        let target = 4f64.ln() / 3f64.ln();
        assert!(
            ((fit.slope - target) / target).abs() < 0.05,
            "{}",
            fit.slope
        );
    }

    #[test]
    fn poincare_conventions() {
        let s = interval(101).unwrap();
        let probes = default_probe_grid(&s);
        let c = ScalarField::constant(&s, 4.0).unwrap();
        let g = ScalarField::constant(&s, 1.0).unwrap();
        let r = poincare_check(&s, &c, &g, 2.0, 1.0, &probes).unwrap();
        assert!(r.tau_required.iter().all(|t| *t == 0.0));

        let jump = ScalarField::from_fn(&s, |i| if i < 50 { 0.0 } else { 1.0 }).unwrap();
        let zero = ScalarField::constant(&s, 0.0).unwrap();
        let r = poincare_check(&s, &jump, &zero, 2.0, 1.0, &probes).unwrap();
        assert!(r.infinite > 0);
        assert!(r.tau_global.is_infinite());
    }

    #[test]
    fn poincare_linear_is_stable() {
        let s = interval(1001).unwrap();
        let u = ScalarField::from_fn(&s, |i| s.abscissa(i)).unwrap();
        let g = ScalarField::constant(&s, 1.0).unwrap();
        let r = poincare_check(&s, &u, &g, 2.0, 1.0, &default_probe_grid(&s)).unwrap();
        assert!(r.tau_global.is_finite());
        assert!(r.spread() <= 2.0, "{}", r.spread());
    }

    #[test]
    fn telescoping_linear() {
        let s = interval(201).unwrap();
        let u = ScalarField::from_fn(&s, |i| s.abscissa(i)).unwrap();
        let g = ScalarField::constant(&s, 1.0).unwrap();
        let probes = default_probe_grid(&s);
        let d = doubling_constants(&s, &probes).unwrap();
        let p = poincare_check(&s, &u, &g, 2.0, 1.0, &probes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<(usize, usize)> = (0..100)
            .map(|_| loop {
                let (a, b) = (rng.gen_range(0..201), rng.gen_range(0..201));
                if a != b {
                    break (a, b);
                }
            })
            .collect();
        let rep = telescoping_check(&s, &u, &g, 2.0, 1.0, &pairs, &d, p.tau_global).unwrap();
        assert!(rep.passed());
        assert!((rep.metrics["max_ratio"] - 0.5).abs() < 1e-12);

        let c = ScalarField::constant(&s, 1.0).unwrap();
        let rep = telescoping_check(&s, &c, &g, 2.0, 1.0, &pairs, &d, p.tau_global).unwrap();
        assert_eq!(rep.metrics["max_ratio"], 0.0);
        assert!(telescoping_check(&s, &u, &g, 2.0, 1.0, &[(3, 3)], &d, 1.0).is_err());
    }

    #[test]
    fn probe_csv() {
        let s = interval(5).unwrap();
        let p = probes_from_csv(&s, "point_id,radius\n0,0.5\n3, 0.25\n").unwrap();
        assert_eq!(
            p,
            vec![
                Probe {
                    point: 0,
                    radius: 0.5
                },
                Probe {
                    point: 3,
                    radius: 0.25
                }
            ]
        );
        assert!(probes_from_csv(&s, "9,0.5\n").is_err());
        assert!(probes_from_csv(&s, "0,-1\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn maximal_monotone_in_eps_and_q(seed in 0u64..1000, e1 in 0.01f64..0.5, de in 0.0f64..0.5) {
            let s = random_cloud(60, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let a = maximal_function(&s, &f, 1.0, e1).unwrap();
            let b = maximal_function(&s, &f, 1.0, e1 + de).unwrap();
            let c = maximal_function(&s, &f, 2.0, e1).unwrap();
            for x in 0..s.len() {
                prop_assert!(a.values()[x] <= b.values()[x]);
                prop_assert!(a.values()[x] <= c.values()[x] * (1.0 + 1e-12) + 1e-15);
            }
        }

        #[test]
        fn poincare_invariances(seed in 0u64..1000, shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
            let s = random_cloud(40, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let g = ScalarField::from_fn(&s, |_| rng.gen_range(0.1..1.0)).unwrap();
            let probes = default_probe_grid(&s);
            let base = poincare_check(&s, &u, &g, 2.0, 1.5, &probes).unwrap();
            let shifted = poincare_check(&s, &u.map(|v| v + shift), &g, 2.0, 1.5, &probes).unwrap();
            let scaled = poincare_check(&s, &u.map(|v| v * scale), &g.map(|v| v * scale), 2.0, 1.5, &probes).unwrap();
            for k in 0..probes.len() {
                let t = base.tau_required[k];
                prop_assert!((shifted.tau_required[k] - t).abs() <= 1e-9 * (1.0 + t));
                prop_assert!((scaled.tau_required[k] - t).abs() <= 1e-9 * (1.0 + t));
            }
        }
    }
}
