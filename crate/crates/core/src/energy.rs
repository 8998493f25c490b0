//! Cell projections, discrete gradients and the discrete Sobolev energies.
//!
//! For a partition at scale δ with neighbor graph `~`, the discrete gradient
//! of `u` on cell `i` is
//!
//! ```text
//! |D_δ u|(i) = ( δ^{-q} Σ_{j ~ i} |u_i − u_j|^q )^{1/q}
//! ```
//!
//! where `u_i` is the mass-weighted mean of `u` over cell `i`. The energy is
//! `F_{δ,q}(u) = Σ_i m(A_i) |D_δ u|(i)^q` and the norm is
//! `N_δ(u) = (Σ_i m(A_i)|u_i|^q + F_{δ,q}(u))^{1/q}`.

use libm::tgamma as gamma;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{doubling_constants, Probe};
use crate::io::csv_table;
use crate::partition::{build_partition, neighbor_graph, NeighborGraph, Partition, PartitionId};
use crate::report::Report;
use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{par, Error, Result};

/// One value per cell of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    values: Vec<f64>,
    partition_id: PartitionId,
}

impl CellField {
    pub fn new(partition: &Partition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::param(format!(
                "cell field has {} values, partition has {} cells",
                values.len(),
                partition.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("cell field values must be finite"));
        }
        Ok(CellField {
            values,
            partition_id: partition.id(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn partition_id(&self) -> PartitionId {
        self.partition_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn belongs_to(&self, partition: &Partition) -> Result<()> {
        if self.partition_id == partition.id() {
            Ok(())
        } else {
            Err(Error::Mismatch(
                "cell field belongs to a different partition",
            ))
        }
    }

    /// Piecewise-constant extension back to the points.
    pub fn to_points(
        &self,
        space: &MetricMeasureSpace,
        partition: &Partition,
    ) -> Result<ScalarField> {
        self.belongs_to(partition)?;
        partition.belongs_to(space)?;
        ScalarField::from_fn(space, |x| self.values[partition.cell_of(x)])
    }
}

/// Total mass per cell.
pub fn cell_masses(space: &MetricMeasureSpace, partition: &Partition) -> Vec<f64> {
    (0..partition.len())
        .map(|i| partition.cell_mass(space, i))
        .collect()
}

/// Mass-weighted cell means. Fails on a cell of zero mass.
pub fn project_cells(
    space: &MetricMeasureSpace,
    partition: &Partition,
    u: &ScalarField,
) -> Result<CellField> {
    partition.belongs_to(space)?;
    u.belongs_to(space)?;
    let v = u.values();
    let mut values = Vec::with_capacity(partition.len());
    for (i, cell) in partition.cells().iter().enumerate() {
        let m: f64 = cell.iter().map(|&x| space.mass(x)).sum();
        if !(m > 0.0) {
            return Err(Error::ZeroMassCell { cell: i });
        }
        values.push(cell.iter().map(|&x| space.mass(x) * v[x]).sum::<f64>() / m);
    }
    CellField::new(partition, values)
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("exponent q must exceed 1, got {q}")))
    }
}

/// Cell-level data shared by every energy evaluation: masses, neighbor
/// lists and the scale.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub masses: Vec<f64>,
    pub neighbors: Vec<Vec<usize>>,
    pub delta: f64,
    partition_id: Option<PartitionId>,
}

impl CellGeometry {
    pub fn new(
        space: &MetricMeasureSpace,
        partition: &Partition,
        graph: &NeighborGraph,
    ) -> Result<Self> {
        partition.belongs_to(space)?;
        graph.belongs_to(partition)?;
        Ok(CellGeometry {
            masses: cell_masses(space, partition),
            neighbors: (0..partition.len())
                .map(|i| graph.neighbors(i).to_vec())
                .collect(),
            delta: partition.delta(),
            partition_id: Some(partition.id()),
        })
    }

    /// Geometry given directly by cell masses and symmetric neighbor lists.
    pub fn from_parts(masses: Vec<f64>, neighbors: Vec<Vec<usize>>, delta: f64) -> Result<Self> {
        if masses.len() != neighbors.len() {
            return Err(Error::Mismatch("one neighbor list per cell"));
        }
        if !(delta > 0.0) {
            return Err(Error::param("delta must be positive"));
        }
        for (i, adj) in neighbors.iter().enumerate() {
            for &j in adj {
                if j >= masses.len() || j == i || !neighbors[j].contains(&i) {
                    return Err(Error::param(format!(
                        "neighbor lists are not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(CellGeometry {
            masses,
            neighbors,
            delta,
            partition_id: None,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn partition_id(&self) -> Option<PartitionId> {
        self.partition_id
    }

    /// `|D_δ u|(i)` for every cell.
    pub fn gradient(&self, u: &[f64], q: f64) -> Vec<f64> {
        let dq = self.delta.powf(-q);
        par::map_range(self.len(), |i| {
            let s: f64 = self.neighbors[i]
                .iter()
                .map(|&j| (u[i] - u[j]).abs().powf(q))
                .sum();
            (dq * s).powf(1.0 / q)
        })
    }

    /// `|D_δ u|_∞(i) = δ^{-1} max_{j ~ i} |u_i − u_j|`.
    pub fn gradient_sup(&self, u: &[f64]) -> Vec<f64> {
        par::map_range(self.len(), |i| {
            self.neighbors[i]
                .iter()
                .map(|&j| (u[i] - u[j]).abs())
                .fold(0.0, f64::max)
                / self.delta
        })
    }

    /// `F_{δ,q}` evaluated directly as `δ^{-q} Σ_i m_i Σ_{j~i} |u_i − u_j|^q`.
    pub fn energy(&self, u: &[f64], q: f64) -> f64 {
        let dq = self.delta.powf(-q);
        let per_cell = par::map_range(self.len(), |i| {
            self.masses[i]
                * self.neighbors[i]
                    .iter()
                    .map(|&j| (u[i] - u[j]).abs().powf(q))
                    .sum::<f64>()
        });
        dq * per_cell.iter().sum::<f64>()
    }

    pub fn energy_sup(&self, u: &[f64], q: f64) -> f64 {
        self.gradient_sup(u)
            .iter()
            .zip(&self.masses)
            .map(|(g, m)| m * g.powf(q))
            .sum()
    }

    /// `Σ_i m_i |u_i|^q`.
    pub fn lq_power(&self, u: &[f64], q: f64) -> f64 {
        u.iter()
            .zip(&self.masses)
            .map(|(v, m)| m * v.abs().powf(q))
            .sum()
    }

    pub fn norm(&self, u: &[f64], q: f64) -> f64 {
        (self.lq_power(u, q) + self.energy(u, q)).powf(1.0 / q)
    }

    /// Entries `m_i^{1/q} u_i` for every cell, then
    /// `m_i^{1/q} (u_i − u_j)/δ` over ordered neighbor pairs `(i, j)` in
    /// lexicographic order.
    pub fn phi(&self, u: &[f64], q: f64) -> Vec<f64> {
        let w: Vec<f64> = self.masses.iter().map(|m| m.powf(1.0 / q)).collect();
        let mut out: Vec<f64> = u.iter().zip(&w).map(|(v, w)| w * v).collect();
        for i in 0..self.len() {
            for &j in &self.neighbors[i] {
                out.push(w[i] * (u[i] - u[j]) / self.delta);
            }
        }
        out
    }
}

pub fn discrete_gradient_field(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
) -> Result<CellField> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    CellField::new(partition, geo.gradient(cells.values(), q))
}

pub fn energy_fq(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
) -> Result<f64> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    Ok(geo.energy(cells.values(), q))
}

pub fn energy_sup(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
) -> Result<f64> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    Ok(geo.energy_sup(cells.values(), q))
}

pub fn sobolev_norm(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
) -> Result<f64> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    Ok(geo.norm(cells.values(), q))
}

pub fn phi_embedding(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    q: f64,
) -> Result<Vec<f64>> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let cells = project_cells(space, partition, u)?;
    Ok(geo.phi(cells.values(), q))
}

pub fn lq_norm(values: &[f64], q: f64) -> f64 {
    values
        .iter()
        .map(|v| v.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Outcome of the Clarkson-type inequality for a pair `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClarksonResidual {
    /// Right side minus left side; nonnegative up to roundoff.
    pub inequality: f64,
    /// Magnitude against which `inequality` is judged.
    pub scale: f64,
    /// For `q = 2`: `F(u+v) + F(u−v) − 2F(u) − 2F(v)`.
    pub identity: Option<f64>,
    /// For `q = 2`: `2F(u) + 2F(v)`.
    pub identity_scale: Option<f64>,
}

/// For `q ≥ 2`:
/// `N^q((u+v)/2) + N^q((u−v)/2) ≤ (N^q(u) + N^q(v))/2`.
/// For `1 < q < 2`, with `p = q/(q−1)`:
/// `N^p((u+v)/2) + N^p((u−v)/2) ≤ (N^q(u)/2 + N^q(v)/2)^{1/(q−1)}`.
pub fn clarkson_residual(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    u: &ScalarField,
    v: &ScalarField,
    q: f64,
) -> Result<ClarksonResidual> {
    check_q(q)?;
    let geo = CellGeometry::new(space, partition, graph)?;
    let a = project_cells(space, partition, u)?;
    let b = project_cells(space, partition, v)?;
    Ok(clarkson_cells(&geo, a.values(), b.values(), q))
}

pub fn clarkson_cells(geo: &CellGeometry, u: &[f64], v: &[f64], q: f64) -> ClarksonResidual {
    let half_sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a + b) / 2.0).collect();
    let half_diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a - b) / 2.0).collect();
    let (nu, nv) = (geo.norm(u, q), geo.norm(v, q));
    let (ns, nd) = (geo.norm(&half_sum, q), geo.norm(&half_diff, q));
    let (inequality, scale) = if q >= 2.0 {
        let rhs = 0.5 * (nu.powf(q) + nv.powf(q));
        (rhs - ns.powf(q) - nd.powf(q), nu.powf(q) + nv.powf(q))
    } else {
        let p = q / (q - 1.0);
        let rhs = (0.5 * nu.powf(q) + 0.5 * nv.powf(q)).powf(1.0 / (q - 1.0));
        (rhs - ns.powf(p) - nd.powf(p), rhs)
    };
    let (identity, identity_scale) = if q == 2.0 {
        let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let (fu, fv) = (geo.energy(u, 2.0), geo.energy(v, 2.0));
        (
            Some(geo.energy(&sum, 2.0) + geo.energy(&diff, 2.0) - 2.0 * fu - 2.0 * fv),
            Some(2.0 * fu + 2.0 * fv),
        )
    } else {
        (None, None)
    };
    ClarksonResidual {
        inequality,
        scale,
        identity,
        identity_scale,
    }
}

/// Modulus of uniform convexity of `N_δ`:
/// `1 − (1 − r^q/2^q)^{1/q}` for `q ≥ 2`, `1 − (1 − (r/2)^p)^{1/p}` below.
pub fn convexity_modulus(q: f64, r: f64) -> f64 {
    if q >= 2.0 {
        1.0 - (1.0 - r.powf(q) / 2f64.powf(q)).max(0.0).powf(1.0 / q)
    } else {
        let p = q / (q - 1.0);
        1.0 - (1.0 - (r / 2.0).powf(p)).max(0.0).powf(1.0 / p)
    }
}

/// Normalizes `u` and `v` to unit norm and returns
/// `(N((u+v)/2), 1 − ω(N(u − v)))`. Zero inputs give `None`.
pub fn uniform_convexity_cells(
    geo: &CellGeometry,
    u: &[f64],
    v: &[f64],
    q: f64,
) -> Option<(f64, f64)> {
    let (nu, nv) = (geo.norm(u, q), geo.norm(v, q));
    if !(nu > 0.0 && nv > 0.0) {
        return None;
    }
    let a: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let b: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Some((
        geo.norm(&mid, q),
        1.0 - convexity_modulus(q, geo.norm(&diff, q)),
    ))
}

/// `∫_0^1 |d/dx sin(2πx)|^q dx = (2π)^q Γ((q+1)/2) / (√π Γ(q/2 + 1))`.
pub fn sine_reference_energy(q: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    two_pi.powf(q) * gamma((q + 1.0) / 2.0) / (std::f64::consts::PI.sqrt() * gamma(q / 2.0 + 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLadder {
    pub q: f64,
    pub deltas: Vec<f64>,
    pub energies: Vec<f64>,
    pub reference_energy: Option<f64>,
    pub ratios: Option<Vec<f64>>,
    pub isolated_fraction: Vec<f64>,
    pub cells: Vec<usize>,
    pub c_d_metric: usize,
    /// `[4^{-q}·0.9, 6^q·c_D³·1.1]`.
    pub bracket: (f64, f64),
    pub warnings: Vec<String>,
}

/// Relative slack applied to both ends of the sandwich bracket.
pub const SANDWICH_TOLERANCE: f64 = 0.1;

pub fn sandwich_bracket(q: f64, c_d_metric: usize) -> (f64, f64) {
    (
        4f64.powf(-q) * (1.0 - SANDWICH_TOLERANCE),
        6f64.powf(q) * (c_d_metric as f64).powi(3) * (1.0 + SANDWICH_TOLERANCE),
    )
}

impl EnergyLadder {
    /// True when every ratio lies in the bracket; vacuous without a
    /// reference.
    pub fn sandwich_holds(&self) -> bool {
        self.ratios.as_ref().is_none_or(|r| {
            r.iter()
                .all(|x| *x >= self.bracket.0 && *x <= self.bracket.1)
        })
    }

    pub fn to_csv(&self) -> String {
        csv_table(
            &["delta", "F", "ratio", "isolated_cell_fraction"],
            (0..self.deltas.len()).map(|k| {
                vec![
                    Some(self.deltas[k]),
                    Some(self.energies[k]),
                    self.ratios.as_ref().map(|r| r[k]),
                    Some(self.isolated_fraction[k]),
                ]
            }),
        )
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("energy_ladder");
        r.metric("q", self.q)
            .metric("c_d_metric", self.c_d_metric as f64)
            .metric("bracket_low", self.bracket.0)
            .metric("bracket_high", self.bracket.1)
            .series("delta", self.deltas.clone())
            .series("F", self.energies.clone())
            .series("isolated_cell_fraction", self.isolated_fraction.clone())
            .series("cells", self.cells.iter().map(|&c| c as f64).collect());
        if let Some(reference) = self.reference_energy {
            let ratios = self.ratios.clone().unwrap_or_default();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            r.metric("reference_energy", reference)
                .series("ratio", ratios)
                .check(
                    "sandwich_low",
                    lo >= self.bracket.0,
                    lo,
                    self.bracket.0,
                    "min ratio ≥ 0.9·4^-q",
                )
                .check(
                    "sandwich_high",
                    hi <= self.bracket.1,
                    hi,
                    self.bracket.1,
                    "max ratio ≤ 1.1·6^q·c_D³",
                );
        }
        for w in &self.warnings {
            r.note(w.clone());
        }
        r
    }
}

/// Rebuilds partition and neighbor graph for each δ and records
/// `F_{δ,q}(u)`. The metric doubling constant is estimated with probes at
/// radii `{4δ, 2δ, δ}` for every δ of the ladder, centered at up to 256
/// evenly strided support points.
pub fn energy_ladder(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    q: f64,
    deltas: &[f64],
    reference_energy: Option<f64>,
) -> Result<EnergyLadder> {
    check_q(q)?;
    u.belongs_to(space)?;
    if deltas.is_empty() {
        return Err(Error::Empty("delta list"));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param(
            "deltas must be positive and strictly decreasing",
        ));
    }
    if let Some(r) = reference_energy {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!(
                "reference energy must be positive, got {r}"
            )));
        }
    }
    let resolution = space.resolution();
    let mut warnings = Vec::new();
    let mut energies = Vec::new();
    let mut isolated_fraction = Vec::new();
    let mut cells = Vec::new();
    for &delta in deltas {
        if delta <= resolution {
            warnings.push(format!(
                "delta {delta} does not exceed the sample resolution {resolution}; cells are singletons"
            ));
        }
        let partition = build_partition(space, delta, None)?;
        let graph = neighbor_graph(space, &partition)?;
        energies.push(energy_fq(space, &partition, &graph, u, q)?);
        isolated_fraction.push(graph.isolated_fraction());
        cells.push(partition.len());
    }

    let support = space.support();
    let stride = support.len().div_ceil(256).max(1);
    let probes: Vec<Probe> = deltas
        .iter()
        .flat_map(|&d| [4.0 * d, 2.0 * d, d])
        .flat_map(|r| {
            support.iter().step_by(stride).map(move |&x| Probe {
                point: x,
                radius: r,
            })
        })
        .collect();
    let c_d_metric = doubling_constants(space, &probes)?.c_d_metric;

    Ok(EnergyLadder {
        q,
        deltas: deltas.to_vec(),
        ratios: reference_energy.map(|r| energies.iter().map(|f| f / r).collect()),
        energies,
        reference_energy,
        isolated_fraction,
        cells,
        c_d_metric,
        bracket: sandwich_bracket(q, c_d_metric),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{interval, random_cloud};
    use crate::space::Point;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Points 0, 0.5, 1 with unit masses; at δ = 0.6 the cells are
    /// {0, 0.5} and {1}, so cell masses are 2 and 1.
    fn two_cells() -> (MetricMeasureSpace, Partition, NeighborGraph, ScalarField) {
        let pts = [0.0, 0.5, 1.0]
            .iter()
            .enumerate()
            .map(|(i, x)| Point::at(i.to_string(), *x, 0.0))
            .collect();
        let s = MetricMeasureSpace::euclidean(pts, vec![1.0; 3]).unwrap();
        let p = build_partition(&s, 0.6, Some(0.075)).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        let u = ScalarField::new(&s, vec![0.0, 0.5, 1.0]).unwrap();
        (s, p, g, u)
    }

    /// Three mutually neighboring singleton cells with unit masses.
    fn triangle_cells(values: [f64; 3]) -> (CellGeometry, Vec<f64>) {
        let geo =
            CellGeometry::from_parts(vec![1.0; 3], vec![vec![1, 2], vec![0, 2], vec![0, 1]], 1.0)
                .unwrap();
        (geo, values.to_vec())
    }

    /// `Σ m(A_i) δ^{-q} Σ_j |Δu|^q` written out term by term.
    fn oracle_energy(
        masses: &[f64],
        pairs: &[(usize, usize)],
        u: &[f64],
        delta: f64,
        q: f64,
    ) -> f64 {
        let mut total = 0.0;
        for &(i, j) in pairs {
            let t = (u[i] - u[j]).abs().powf(q) / delta.powf(q);
            total += masses[i] * t + masses[j] * t;
        }
        total
    }

    #[test]
    fn projection_two_cells() {
        let (s, p, _, u) = two_cells();
        let c = project_cells(&s, &p, &u).unwrap();
        assert_eq!(c.values(), &[0.25, 1.0]);
        let k = ScalarField::constant(&s, 7.5).unwrap();
        assert_eq!(project_cells(&s, &p, &k).unwrap().values(), &[7.5, 7.5]);
    }

    #[test]
    fn projection_singletons_and_zero_mass() {
        let s = interval(5).unwrap();
        let p = build_partition(&s, 0.1, None).unwrap();
        let u = ScalarField::from_fn(&s, |i| (i * i) as f64).unwrap();
        assert_eq!(project_cells(&s, &p, &u).unwrap().values(), u.values());

        let z = s.with_masses(vec![1.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let p = build_partition(&z, 0.1, None).unwrap();
        let u = ScalarField::constant(&z, 1.0).unwrap();
        assert!(matches!(
            project_cells(&z, &p, &u),
            Err(Error::ZeroMassCell { cell: 1 })
        ));
    }

    #[test]
    fn two_cell_values() {
        let (s, p, g, u) = two_cells();
        let grad = discrete_gradient_field(&s, &p, &g, &u, 2.0).unwrap();
        for v in grad.values() {
            assert!((v - 1.25).abs() < 1e-12);
        }
        let f = energy_fq(&s, &p, &g, &u, 2.0).unwrap();
        assert!((f - 4.6875).abs() < 1e-12);
        let oracle = oracle_energy(&[2.0, 1.0], &[(0, 1)], &[0.25, 1.0], 0.6, 2.0);
        assert!((f - oracle).abs() < 1e-12);
        let f2 = energy_fq(&s, &p, &g, &u.map(|v| 2.0 * v), 2.0).unwrap();
        assert!((f2 - 18.75).abs() < 1e-12);
        let fs = energy_sup(&s, &p, &g, &u, 2.0).unwrap();
        assert!((fs - 4.6875).abs() < 1e-12);
        let n = sobolev_norm(&s, &p, &g, &u, 2.0).unwrap();
        assert!((n - 5.8125f64.sqrt()).abs() < 1e-12);
        assert!((n - 2.41091).abs() < 1e-5);
    }

    #[test]
    fn three_cell_sup_versus_sum() {
        let (geo, u) = triangle_cells([0.0, 1.0, 1.0]);
        assert!((geo.energy_sup(&u, 2.0) - 3.0).abs() < 1e-12);
        assert!((geo.energy(&u, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constants_and_empty_graph() {
        let s = interval(30).unwrap();
        let u = ScalarField::from_fn(&s, |i| (i as f64).sin()).unwrap();
        let c = ScalarField::constant(&s, 2.0).unwrap();
        let p = build_partition(&s, 0.2, None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        assert_eq!(energy_fq(&s, &p, &g, &c, 2.0).unwrap(), 0.0);
        assert_eq!(energy_sup(&s, &p, &g, &c, 3.0).unwrap(), 0.0);
        assert!(discrete_gradient_field(&s, &p, &g, &c, 2.0)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        assert_eq!(sobolev_norm(&s, &p, &g, &c.map(|_| 0.0), 2.0).unwrap(), 0.0);
        assert!(phi_embedding(&s, &p, &g, &c.map(|_| 0.0), 2.0)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));

        let p = build_partition(&s, 0.01, None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        assert!(g.pairs().is_empty());
        assert!(discrete_gradient_field(&s, &p, &g, &u, 2.0)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        assert!(energy_fq(&s, &p, &g, &u, 0.5).is_err());
    }

    #[test]
    fn parallelogram_with_zero() {
        let (s, p, g, u) = two_cells();
        let zero = u.map(|_| 0.0);
        let r = clarkson_residual(&s, &p, &g, &u, &zero, 2.0).unwrap();
        assert_eq!(r.identity, Some(0.0));
    }

    #[test]
    fn clarkson_on_interval() {
        let s = interval(50).unwrap();
        let p = build_partition(&s, 0.07, None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for q in [1.5, 2.0, 3.0] {
            for _ in 0..20 {
                let u = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
                let v = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
                let r = clarkson_residual(&s, &p, &g, &u, &v, q).unwrap();
                assert!(r.inequality >= -1e-10 * r.scale, "q = {q}: {r:?}");
                if let (Some(id), Some(sc)) = (r.identity, r.identity_scale) {
                    assert!(id.abs() <= 1e-9 * sc);
                }
            }
        }
    }

    #[test]
    fn sine_reference() {
        assert!((sine_reference_energy(2.0) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-10);
        // midpoint quadrature of |2π cos 2πx|^q
        for q in [1.5, 3.0] {
            let n = 200_000;
            let quad: f64 = (0..n)
                .map(|k| {
                    let x = (k as f64 + 0.5) / n as f64;
                    (2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos())
                        .abs()
                        .powf(q)
                })
                .sum::<f64>()
                / n as f64;
            assert!(
                (sine_reference_energy(q) - quad).abs() < 1e-6 * quad,
                "q = {q}"
            );
        }
    }

    #[test]
    fn modulus_values() {
        assert_eq!(convexity_modulus(2.0, 0.0), 0.0);
        assert!((convexity_modulus(2.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((convexity_modulus(2.0, 1.0) - (1.0 - 0.75f64.sqrt())).abs() < 1e-15);
        assert!(convexity_modulus(1.5, 1.0) > 0.0);
    }

    #[test]
    fn ladder_of_constant_and_errors() {
        let s = interval(200).unwrap();
        let c = ScalarField::constant(&s, 1.0).unwrap();
        let l = energy_ladder(&s, &c, 2.0, &[0.2, 0.1, 0.05], None).unwrap();
        assert!(l.energies.iter().all(|e| *e == 0.0));
        assert!(l.sandwich_holds());
        assert!(energy_ladder(&s, &c, 2.0, &[], None).is_err());
        assert!(energy_ladder(&s, &c, 2.0, &[0.1, 0.2], None).is_err());
        let l = energy_ladder(&s, &c, 2.0, &[0.2, 0.001], None).unwrap();
        assert_eq!(l.warnings.len(), 1);
        assert_eq!(l.to_csv().lines().count(), 3);
    }

    #[test]
    fn ladder_linear() {
        let s = interval(1000).unwrap();
        let u = ScalarField::from_fn(&s, |i| s.abscissa(i)).unwrap();
        let l = energy_ladder(&s, &u, 2.0, &[0.2, 0.1, 0.05, 0.02], Some(1.0)).unwrap();
        assert!(l.sandwich_holds(), "{:?} {:?}", l.ratios, l.bracket);
    }

    fn random_setup(seed: u64) -> (MetricMeasureSpace, Partition, NeighborGraph, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_cloud(rng.gen_range(5..80), seed).unwrap();
        let p = build_partition(&s, rng.gen_range(0.05..0.5), None).unwrap();
        let g = neighbor_graph(&s, &p).unwrap();
        (s, p, g, rng)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn energy_properties(seed in 0u64..100_000, q in 1.1f64..4.0, c in -3.0f64..3.0, lambda in -3.0f64..3.0) {
            let (s, p, g, mut rng) = random_setup(seed);
            let u = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let f = energy_fq(&s, &p, &g, &u, q).unwrap();
            let fc = energy_fq(&s, &p, &g, &u.map(|v| v + c), q).unwrap();
            prop_assert!((fc - f).abs() <= 1e-12 * (1.0 + f) * 10.0);
            let fl = energy_fq(&s, &p, &g, &u.map(|v| lambda * v), q).unwrap();
            prop_assert!((fl - lambda.abs().powf(q) * f).abs() <= 1e-12 * fl.max(1e-300) * 10.0 + 1e-300);
            prop_assert!(energy_sup(&s, &p, &g, &u, q).unwrap() <= f * (1.0 + 1e-12));

            let masses = cell_masses(&s, &p);
            let cells = project_cells(&s, &p, &u).unwrap();
            let oracle = oracle_energy(&masses, g.pairs(), cells.values(), p.delta(), q);
            prop_assert!((oracle - f).abs() <= 1e-12 * (1.0 + f));

            let proj: f64 = cells.values().iter().zip(&masses).map(|(v, m)| m * v.abs().powf(q)).sum();
            let full: f64 = u.values().iter().zip(s.masses()).map(|(v, m)| m * v.abs().powf(q)).sum();
            prop_assert!(proj <= full * (1.0 + 1e-12));

            let n = sobolev_norm(&s, &p, &g, &u, q).unwrap();
            let phi = phi_embedding(&s, &p, &g, &u, q).unwrap();
            prop_assert!((lq_norm(&phi, q) - n).abs() <= 1e-12 * n);
            let n2 = sobolev_norm(&s, &p, &g, &u.map(|v| 2.0 * v), q).unwrap();
            prop_assert!((n2 - 2.0 * n).abs() <= 1e-12 * n);
        }

        #[test]
        fn phi_is_linear(seed in 0u64..100_000, q in 1.1f64..4.0) {
            let (s, p, g, mut rng) = random_setup(seed);
            let u = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let v = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let sum = u.combine(1.0, &v, 1.0).unwrap();
            let (a, b, c) = (
                phi_embedding(&s, &p, &g, &u, q).unwrap(),
                phi_embedding(&s, &p, &g, &v, q).unwrap(),
                phi_embedding(&s, &p, &g, &sum, q).unwrap(),
            );
            for k in 0..a.len() {
                prop_assert!((c[k] - a[k] - b[k]).abs() <= 1e-12 * (1.0 + c[k].abs()) * 10.0);
            }
        }

        #[test]
        fn clarkson_and_modulus(seed in 0u64..100_000, q in prop::sample::select(vec![1.5, 2.0, 2.5, 3.0, 4.0])) {
            let (s, p, g, mut rng) = random_setup(seed);
            let u = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let v = ScalarField::from_fn(&s, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let r = clarkson_residual(&s, &p, &g, &u, &v, q).unwrap();
            prop_assert!(r.inequality >= -1e-10 * r.scale);
            let geo = CellGeometry::new(&s, &p, &g).unwrap();
            let (a, b) = (project_cells(&s, &p, &u).unwrap(), project_cells(&s, &p, &v).unwrap());
            if let Some((mid, bound)) = uniform_convexity_cells(&geo, a.values(), b.values(), q) {
                prop_assert!(mid <= bound + 1e-9);
            }
        }
    }
}
