//! Finite-scale slope and asymptotic Lipschitz estimates, and upper-gradient
//! checks along discrete curves.

use serde::{Deserialize, Serialize};

use crate::curves::DiscreteCurve;
use crate::energy::{project_cells, CellGeometry};
use crate::partition::{NeighborGraph, Partition};
use crate::report::Report;
use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{par, Error, Result};

/// Per-point estimate at a fixed radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeField {
    pub values: Vec<f64>,
    pub radius: f64,
    /// Points whose ball held no other point.
    pub empty: usize,
}

impl SlopeField {
    pub fn to_field(&self, space: &MetricMeasureSpace) -> Result<ScalarField> {
        ScalarField::new(space, self.values.clone())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("radius must be positive, got {r}")))
    }
}

/// `max_{0 < d(x,y) < r} |f(y) − f(x)| / d(x,y)`, or 0 with no such `y`.
pub fn slope_estimate(space: &MetricMeasureSpace, f: &ScalarField, r: f64) -> Result<SlopeField> {
    f.belongs_to(space)?;
    check_radius(r)?;
    let v = f.values();
    let per_point = par::map_range(space.len(), |x| {
        let row = space.row(x);
        (0..space.len())
            .filter(|&y| y != x && row[y] < r)
            .map(|y| (v[y] - v[x]).abs() / row[y])
            .fold(None, |acc: Option<f64>, s| {
                Some(acc.map_or(s, |a| a.max(s)))
            })
    });
    Ok(SlopeField {
        empty: per_point.iter().filter(|s| s.is_none()).count(),
        values: per_point.into_iter().map(|s| s.unwrap_or(0.0)).collect(),
        radius: r,
    })
}

/// Lipschitz constant of `f` restricted to the open ball `B(x, r)`.
pub fn asymptotic_lip_estimate(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    r: f64,
) -> Result<SlopeField> {
    f.belongs_to(space)?;
    check_radius(r)?;
    let v = f.values();
    let per_point = par::map_range(space.len(), |x| {
        let row = space.row(x);
        let ball: Vec<usize> = (0..space.len()).filter(|&y| row[y] < r).collect();
        let mut best = 0.0f64;
        for (a, &y) in ball.iter().enumerate() {
            for &z in &ball[a + 1..] {
                best = best.max((v[y] - v[z]).abs() / space.dist(y, z));
            }
        }
        (best, ball.len() < 2)
    });
    Ok(SlopeField {
        empty: per_point.iter().filter(|p| p.1).count(),
        values: per_point.into_iter().map(|p| p.0).collect(),
        radius: r,
    })
}

/// `Σ_k (g(v_k)+g(v_{k+1}))/2 · len_k − |f(end) − f(start)|`; nonnegative
/// when `g` is an upper gradient of `f` along the curve.
pub fn curve_upper_gradient_check(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    g: &ScalarField,
    curve: &DiscreteCurve,
) -> Result<f64> {
    f.belongs_to(space)?;
    g.belongs_to(space)?;
    for &v in curve.vertices() {
        space.check_index(v)?;
    }
    let verts = curve.vertices();
    let df = (f.values()[verts[verts.len() - 1]] - f.values()[verts[0]]).abs();
    Ok(curve.integrate(|v| g.values()[v]) - df)
}

/// Largest segment length (relative to δ) for which the scale-δ/2
/// inequality with constant 4 is guaranteed on every sub-interval:
/// `(1 − 2^{-1/q})/2`.
pub fn wug_step_ratio(q: f64) -> f64 {
    0.5 * (1.0 - 2f64.powf(-1.0 / q))
}

/// For each curve and every vertex sub-interval `[a, b]` of length `> δ/2`,
/// evaluates `4·Σ_{[a,b]} |D_δ u| len − |P_δu(v_b) − P_δu(v_a)|` with the
/// trapezoid sum over cell values of the visited points. Curves of total
/// length `≤ δ/2` are skipped.
pub fn discrete_wug_check(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
    curves: &[DiscreteCurve],
) -> Result<Report> {
    if !(q > 1.0) {
        return Err(Error::param(format!("exponent q must exceed 1, got {q}")));
    }
    for c in curves {
        for &v in c.vertices() {
            space.check_index(v)?;
        }
    }
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    let grad = geo.gradient(cells.values(), q);
    let delta = partition.delta();
    let half = delta / 2.0;

    let results = par::map_slice(curves, |c| {
        if c.total_length() <= half {
            return None;
        }
        let verts = c.vertices();
        let uc: Vec<f64> = verts
            .iter()
            .map(|&v| cells.values()[partition.cell_of(v)])
            .collect();
        let gc: Vec<f64> = verts.iter().map(|&v| grad[partition.cell_of(v)]).collect();
        let k = verts.len();
        let mut len = vec![0.0; k];
        let mut int = vec![0.0; k];
        for (s, l) in c.segment_lengths().iter().enumerate() {
            len[s + 1] = len[s] + l;
            int[s + 1] = int[s] + 0.5 * (gc[s] + gc[s + 1]) * l;
        }
        let mut worst = f64::INFINITY;
        let mut checked = 0u64;
        let mut violations = 0u64;
        for a in 0..k {
            for b in a + 1..k {
                if len[b] - len[a] <= half {
                    continue;
                }
                checked += 1;
                let res = 4.0 * (int[b] - int[a]) - (uc[b] - uc[a]).abs();
                if res < -1e-12 {
                    violations += 1;
                }
                worst = worst.min(res);
            }
        }
        Some((worst, checked, violations, c.max_segment()))
    });

    let skipped = results.iter().filter(|r| r.is_none()).count();
    let done: Vec<_> = results.into_iter().flatten().collect();
    let worst = done.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let checked: u64 = done.iter().map(|r| r.1).sum();
    let violations: u64 = done.iter().map(|r| r.2).sum();
    let max_step = done.iter().map(|r| r.3).fold(0.0, f64::max);
    let worst = if worst.is_finite() { worst } else { 0.0 };

    let mut r = Report::new("discrete_wug");
    r.metric("delta", delta)
        .metric("q", q)
        .metric("min_residual", worst)
        .metric("max_segment_over_delta", max_step / delta)
        .metric("guaranteed_segment_over_delta", wug_step_ratio(q))
        .count("curves", curves.len() as u64)
        .count("skipped_short_curves", skipped as u64)
        .count("subintervals", checked)
        .count("violations", violations)
        .series("curve_min_residual", done.iter().map(|r| r.0).collect())
        .check(
            "wug_inequality",
            violations == 0,
            worst,
            -1e-12,
            "residual ≥ −1e-12 on every sub-interval longer than δ/2",
        );
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::monotone_paths;
    use crate::generate::{interval, random_cloud};
    use crate::partition::{build_partition, neighbor_graph};
    use crate::space::Point;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize, f: impl Fn(f64) -> f64) -> (MetricMeasureSpace, ScalarField) {
        let s = interval(n).unwrap();
        let u = ScalarField::from_fn(&s, |i| f(s.abscissa(i))).unwrap();
        (s, u)
    }

    #[test]
    fn slopes_of_linear_and_kink() {
        let (s, f) = line(101, |x| 2.0 * x);
        let sl = slope_estimate(&s, &f, 0.05).unwrap();
        for x in 1..100 {
            assert!((sl.values[x] - 2.0).abs() < 1e-12);
        }
        let lip = asymptotic_lip_estimate(&s, &f, 0.05).unwrap();
        assert!(lip.values.iter().all(|v| (v - 2.0).abs() < 1e-12));

        let (s, f) = line(101, |x| (x - 0.5).abs());
        let sl = slope_estimate(&s, &f, 0.05).unwrap();
        assert!(sl.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_balls_and_constants() {
        let (s, f) = line(11, |x| x);
        let sl = slope_estimate(&s, &f, 0.05).unwrap();
        assert_eq!(sl.empty, 11);
        assert!(sl.values.iter().all(|v| *v == 0.0));
        assert!(asymptotic_lip_estimate(&s, &f, 0.05)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        let c = ScalarField::constant(&s, 1.0).unwrap();
        assert!(slope_estimate(&s, &c, 0.5)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        assert!(slope_estimate(&s, &c, 0.0).is_err());
    }

    #[test]
    fn curve_upper_gradient() {
        let (s, f) = line(21, |x| x);
        let one = ScalarField::constant(&s, 1.0).unwrap();
        let zero = ScalarField::constant(&s, 0.0).unwrap();
        let c = DiscreteCurve::new(&s, (3..=17).collect()).unwrap();
        assert!(curve_upper_gradient_check(&s, &f, &one, &c).unwrap().abs() < 1e-12);
        let r = curve_upper_gradient_check(&s, &f, &zero, &c).unwrap();
        assert!((r + 0.7).abs() < 1e-12);
        let k = ScalarField::constant(&s, 5.0).unwrap();
        assert!(curve_upper_gradient_check(&s, &k, &zero, &c).unwrap() >= 0.0);
        let single = DiscreteCurve::new(&s, vec![4]).unwrap();
        assert_eq!(
            curve_upper_gradient_check(&s, &f, &zero, &single).unwrap(),
            0.0
        );
    }

    #[test]
    fn wug_on_interval() {
        let (s, u) = line(101, |x| x);
        let p = build_partition(&s, 0.1, None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let curves = monotone_paths(&s, 50, 6, &mut rng).unwrap();
        let r = discrete_wug_check(&s, &p, &g, &u, 2.0, &curves).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.counts["subintervals"] > 0);

        let c = ScalarField::constant(&s, 2.0).unwrap();
        let r = discrete_wug_check(&s, &p, &g, &c, 2.0, &curves).unwrap();
        assert!(r.passed());
        assert_eq!(r.metrics["min_residual"], 0.0);

        let short = vec![DiscreteCurve::new(&s, vec![10, 11, 12]).unwrap()];
        let r = discrete_wug_check(&s, &p, &g, &u, 2.0, &short).unwrap();
        assert_eq!(r.counts["skipped_short_curves"], 1);
    }

    #[test]
    fn long_jump_between_isolated_cells_fails() {
        // three singleton cells, none within δ of another: |D| vanishes
        let pts = vec![
            Point::at("a", 0.0, 0.0),
            Point::at("b", 0.5, 0.0),
            Point::at("c", 1.0, 0.0),
        ];
        let s = MetricMeasureSpace::euclidean(pts, vec![1.0; 3]).unwrap();
        let u = ScalarField::new(&s, vec![0.0, 0.0, 1.0]).unwrap();
        let p = build_partition(&s, 0.2, None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        let jump = vec![DiscreteCurve::new(&s, vec![0, 2]).unwrap()];
        let r = discrete_wug_check(&s, &p, &g, &u, 2.0, &jump).unwrap();
        assert!(!r.passed());
        assert_eq!(r.metrics["min_residual"], -1.0);
        assert!(r.metrics["max_segment_over_delta"] > r.metrics["guaranteed_segment_over_delta"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn estimate_chain(seed in 0u64..100_000, r1 in 0.05f64..0.5, dr in 0.0f64..0.5) {
            let s = random_cloud(40, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let sl = slope_estimate(&s, &f, r1).unwrap();
            let la = asymptotic_lip_estimate(&s, &f, r1).unwrap();
            let lb = asymptotic_lip_estimate(&s, &f, r1 + dr).unwrap();
            let global = s.lipschitz_constant(f.values());
            for x in 0..s.len() {
                prop_assert!(sl.values[x] <= la.values[x]);
                prop_assert!(la.values[x] <= lb.values[x]);
                prop_assert!(lb.values[x] <= global);
            }
        }
    }
}
