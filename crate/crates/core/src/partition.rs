//! δ-scale set-point partitions and the neighbor relation between cells.
//!
//! Centers are chosen greedily in input-point order: a point becomes a new
//! center unless it lies in the *closed* δ-ball of an earlier center. Each
//! point is then assigned to the least center index among those that
//! minimize its distance up to an additive slack `eps`. With
//! `eps ≤ δ/8` this yields
//!
//! * `d(z_i, z_j) > δ` for distinct centers,
//! * `B(z_i, δ/3) ⊂ A_i ⊂ B(z_i, 5δ/4)` (open balls).
//!
//! Two cells are neighbors when their set distance is strictly below δ.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::diagnostics::{default_probe_grid, doubling_constants, Probe};
use crate::report::Report;
use crate::space::{MetricMeasureSpace, SpaceId};
use crate::{par, Error, Result};

static NEXT_PARTITION_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PartitionId(u64);

#[derive(Clone, Debug)]
pub struct Partition {
    id: PartitionId,
    space_id: SpaceId,
    delta: f64,
    eps: f64,
    centers: Vec<usize>,
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

/// Builds the δ-partition. `eps` defaults to `δ/8` and must lie in
/// `[0, δ/8]`.
pub fn build_partition(
    space: &MetricMeasureSpace,
    delta: f64,
    eps: Option<f64>,
) -> Result<Partition> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    let eps = eps.unwrap_or(delta / 8.0);
    if !(0.0..=delta / 8.0).contains(&eps) {
        return Err(Error::param(format!(
            "eps must lie in [0, delta/8] = [0, {}], got {eps}",
            delta / 8.0
        )));
    }
    let n = space.len();
    if n == 0 {
        return Err(Error::Empty("space has no points"));
    }

    // Greedy center selection. Exclusion uses the CLOSED ball d ≤ δ.
    let mut excluded = vec![false; n];
    let mut centers = Vec::new();
    for k in 0..n {
        if excluded[k] {
            continue;
        }
        centers.push(k);
        let row = space.row(k);
        for (y, ex) in excluded.iter_mut().enumerate() {
            if row[y] <= delta {
                *ex = true;
            }
        }
    }

    // Dual rule: k = min { i : d(x, z_i) ≤ d(x, z_j) + eps for all j }.
    let cell_of = par::map_range(n, |x| {
        let row = space.row(x);
        let dmin = centers
            .iter()
            .map(|&z| row[z])
            .fold(f64::INFINITY, f64::min);
        centers
            .iter()
            .position(|&z| row[z] <= dmin + eps)
            .expect("the minimizing center qualifies")
    });
    let mut cells = vec![Vec::new(); centers.len()];
    for (x, &c) in cell_of.iter().enumerate() {
        cells[c].push(x);
    }

    Ok(Partition {
        id: PartitionId(NEXT_PARTITION_ID.fetch_add(1, Ordering::Relaxed)),
        space_id: space.id(),
        delta,
        eps,
        centers,
        cells,
        cell_of,
    })
}

impl Partition {
    pub fn id(&self) -> PartitionId {
        self.id
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cell index of point `x`.
    pub fn cell_of(&self, x: usize) -> usize {
        self.cell_of[x]
    }

    pub fn cell_mass(&self, space: &MetricMeasureSpace, i: usize) -> f64 {
        self.cells[i].iter().map(|&x| space.mass(x)).sum()
    }

    pub(crate) fn belongs_to(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.space_id == space.id() {
            Ok(())
        } else {
            Err(Error::Mismatch("partition was built on a different space"))
        }
    }

    /// Exhaustive check of the partition invariants. Returns the report;
    /// every check must pass for partitions built by [`build_partition`].
    pub fn audit(&self, space: &MetricMeasureSpace) -> Report {
        let mut r = Report::new("partition_invariants");
        let d = self.delta;
        let n = space.len();

        let mut covered = vec![0usize; n];
        for cell in &self.cells {
            for &x in cell {
                covered[x] += 1;
            }
        }
        let misassigned = covered.iter().filter(|&&c| c != 1).count();

        let mut min_sep = f64::INFINITY;
        for (a, &za) in self.centers.iter().enumerate() {
            for &zb in &self.centers[a + 1..] {
                min_sep = min_sep.min(space.dist(za, zb));
            }
        }

        let mut max_reach = 0.0f64;
        let mut center_outside = 0;
        let mut third_ball_miss = 0;
        for (i, (&z, cell)) in self.centers.iter().zip(&self.cells).enumerate() {
            if self.cell_of[z] != i {
                center_outside += 1;
            }
            for &x in cell {
                max_reach = max_reach.max(space.dist(x, z));
            }
            let row = space.row(z);
            third_ball_miss += (0..n)
                .filter(|&x| row[x] < d / 3.0 && self.cell_of[x] != i)
                .count();
        }

        r.metric("delta", d)
            .metric("eps", self.eps)
            .count("cells", self.len() as u64)
            .check(
                "partition",
                misassigned == 0,
                misassigned as f64,
                0.0,
                "every point in exactly one cell",
            )
            .check(
                "separation",
                self.len() < 2 || min_sep > d,
                if self.len() < 2 { 0.0 } else { min_sep },
                d,
                "min center distance > delta",
            )
            .check(
                "containment",
                max_reach < 1.25 * d,
                max_reach,
                1.25 * d,
                "cells inside open B(z, 5δ/4)",
            )
            .check(
                "third_ball",
                third_ball_miss == 0,
                third_ball_miss as f64,
                0.0,
                "B(z, δ/3) inside the cell",
            )
            .check(
                "center_in_cell",
                center_outside == 0,
                center_outside as f64,
                0.0,
                "",
            );
        r
    }
}

/// Unordered cell pairs at set distance `< δ`.
#[derive(Clone, Debug)]
pub struct NeighborGraph {
    partition_id: PartitionId,
    pairs: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn partition_id(&self) -> PartitionId {
        self.partition_id
    }

    /// Sorted pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Sorted neighbor list of cell `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn isolated_fraction(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        self.adjacency.iter().filter(|a| a.is_empty()).count() as f64 / self.adjacency.len() as f64
    }

    pub(crate) fn belongs_to(&self, partition: &Partition) -> Result<()> {
        if self.partition_id == partition.id() {
            Ok(())
        } else {
            Err(Error::Mismatch(
                "neighbor graph was built on a different partition",
            ))
        }
    }
}

/// Set distances are computed exactly by scanning point pairs: cells `i`
/// and `j` are neighbors iff some `x ∈ A_i`, `y ∈ A_j` has `d(x, y) < δ`.
/// Distance exactly δ does not count.
pub fn neighbor_graph(space: &MetricMeasureSpace, partition: &Partition) -> Result<NeighborGraph> {
    partition.belongs_to(space)?;
    let n = space.len();
    let delta = partition.delta();
    let per_point = par::map_range(n, |x| {
        let row = space.row(x);
        let cx = partition.cell_of(x);
        let mut found: Vec<usize> = ((x + 1)..n)
            .filter(|&y| row[y] < delta)
            .map(|y| partition.cell_of(y))
            .filter(|&cy| cy != cx)
            .collect();
        found.sort_unstable();
        found.dedup();
        (cx, found)
    });
    let mut adjacency = vec![Vec::new(); partition.len()];
    for (cx, found) in per_point {
        for cy in found {
            adjacency[cx].push(cy);
            adjacency[cy].push(cx);
        }
    }
    let mut pairs = Vec::new();
    for (i, adj) in adjacency.iter_mut().enumerate() {
        adj.sort_unstable();
        adj.dedup();
        pairs.extend(adj.iter().filter(|&&j| j > i).map(|&j| (i, j)));
    }
    Ok(NeighborGraph {
        partition_id: partition.id(),
        pairs,
        adjacency,
    })
}

/// Neighbor-center distances against 4δ and the maximum degree against the
/// cube of the greedy covering estimate of the metric doubling constant.
///
/// `probes` defaults to every point at radii `{4δ, 2δ, δ}`, which are the
/// scales the covering argument for the degree bound passes through.
pub fn partition_diagnostics(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
    probes: Option<&[Probe]>,
) -> Result<Report> {
    partition.belongs_to(space)?;
    graph.belongs_to(partition)?;
    let d = partition.delta();
    let c = partition.centers();
    let max_center = graph
        .pairs()
        .iter()
        .map(|&(i, j)| space.dist(c[i], c[j]))
        .fold(0.0, f64::max);
    let owned;
    let probes = match probes {
        Some(p) => p,
        None => {
            owned = partition_probes(space, d);
            &owned
        }
    };
    let doubling = doubling_constants(space, probes)?;
    let cd = doubling.c_d_metric as f64;
    let max_deg = graph.max_degree();

    let mut r = Report::new("partition_diagnostics");
    r.metric("delta", d)
        .metric("max_neighbor_center_distance", max_center)
        .metric("c_d_metric", cd)
        .metric("isolated_cell_fraction", graph.isolated_fraction())
        .count("cells", partition.len() as u64)
        .count("neighbor_pairs", graph.pairs().len() as u64)
        .count("max_degree", max_deg as u64)
        .check(
            "neighbor_center_distance",
            max_center <= 4.0 * d,
            max_center,
            4.0 * d,
            "d(z_i, z_j) ≤ 4δ for neighbors",
        )
        .check(
            "degree_bound",
            max_deg as f64 <= cd.powi(3),
            max_deg as f64,
            cd.powi(3),
            "max degree ≤ c_D³",
        );
    Ok(r)
}

/// Every point at radii `{4δ, 2δ, δ}`.
pub fn partition_probes(space: &MetricMeasureSpace, delta: f64) -> Vec<Probe> {
    let support = space.support();
    let mut probes = Vec::with_capacity(3 * support.len());
    for r in [4.0 * delta, 2.0 * delta, delta] {
        probes.extend(support.iter().map(|&x| Probe {
            point: x,
            radius: r,
        }));
    }
    if probes.is_empty() {
        probes = default_probe_grid(space);
    }
    probes
}
