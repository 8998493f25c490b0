//! Finite metric measure spaces, scalar fields on them, and ball queries.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::Report;
use crate::{par, Error, Result};

/// Spaces up to this many points keep a full distance table.
pub const TABLE_LIMIT: usize = 4096;

/// Exhaustive triangle scans are done up to this many points; larger spaces
/// are checked on a seeded sample of triples.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 2000;

const TRIANGLE_SAMPLE: usize = 4_000_000;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceId(u64);

impl SpaceId {
    pub(crate) fn fresh() -> Self {
        SpaceId(NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub id: String,
    pub coords: Option<[f64; 2]>,
}

impl Point {
    pub fn new(id: impl Into<String>) -> Self {
        Point {
            id: id.into(),
            coords: None,
        }
    }

    pub fn at(id: impl Into<String>, x: f64, y: f64) -> Self {
        Point {
            id: id.into(),
            coords: Some([x, y]),
        }
    }
}

/// How the distance was specified. Saving uses this to pick the file form.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSource {
    Euclidean,
    /// Shortest-path metric of an undirected graph with positive lengths.
    Graph(Vec<(usize, usize, f64)>),
    Table,
    Oracle,
}

type OracleFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// A user-supplied metric callback with on-demand caching.
pub struct CachedOracle {
    f: Arc<OracleFn>,
    cache: RwLock<HashMap<(u32, u32), f64>>,
}

impl CachedOracle {
    fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        };
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return *v;
        }
        let v = (self.f)(key.0 as usize, key.1 as usize);
        self.cache.write().expect("cache lock").insert(key, v);
        v
    }
}

enum Storage {
    Table(Vec<f64>),
    Coordinates,
    Oracle(CachedOracle),
}

/// A finite metric measure space `(X, d, m)`.
///
/// Immutable after construction and safe to share between threads.
pub struct MetricMeasureSpace {
    id: SpaceId,
    points: Vec<Point>,
    mass: Vec<f64>,
    total_mass: f64,
    storage: Storage,
    source: MetricSource,
}

impl fmt::Debug for MetricMeasureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricMeasureSpace")
            .field("id", &self.id)
            .field("len", &self.len())
            .field("total_mass", &self.total_mass)
            .field("source", &self.source_kind())
            .finish()
    }
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn check_masses(mass: &[f64], n: usize) -> Result<f64> {
    if mass.len() != n {
        return Err(Error::param(format!(
            "expected {n} masses, got {}",
            mass.len()
        )));
    }
    if let Some((i, m)) = mass
        .iter()
        .enumerate()
        .find(|(_, m)| !m.is_finite() || **m < 0.0)
    {
        return Err(Error::param(format!("mass of point {i} is {m}")));
    }
    Ok(mass.iter().sum())
}

impl MetricMeasureSpace {
    fn assemble(
        points: Vec<Point>,
        mass: Vec<f64>,
        storage: Storage,
        source: MetricSource,
    ) -> Result<Self> {
        let total_mass = check_masses(&mass, points.len())?;
        Ok(MetricMeasureSpace {
            id: SpaceId::fresh(),
            points,
            mass,
            total_mass,
            storage,
            source,
        })
    }

    /// Builds a space from a row-major `n × n` distance table. The table is
    /// stored as given; call [`validate_metric`] to audit it.
    pub fn from_table(points: Vec<Point>, table: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if table.len() != n * n {
            return Err(Error::param(format!(
                "distance table has {} entries, expected {}",
                table.len(),
                n * n
            )));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite distance {v}")));
        }
        Self::assemble(points, mass, Storage::Table(table), MetricSource::Table)
    }

    /// Euclidean distance between planar coordinates.
    pub fn euclidean(points: Vec<Point>, mass: Vec<f64>) -> Result<Self> {
        let coords: Vec<[f64; 2]> = points
            .iter()
            .map(|p| {
                p.coords
                    .ok_or_else(|| Error::Parse(format!("point `{}` has no coordinates", p.id)))
            })
            .collect::<Result<_>>()?;
        if let Some(c) = coords.iter().flatten().find(|c| !c.is_finite()) {
            return Err(Error::param(format!("non-finite coordinate {c}")));
        }
        let n = points.len();
        let storage = if n <= TABLE_LIMIT {
            Storage::Table(symmetric_table(n, |i, j| euclid(coords[i], coords[j])))
        } else {
            Storage::Coordinates
        };
        Self::assemble(points, mass, storage, MetricSource::Euclidean)
    }

    /// Shortest-path metric of an undirected graph. Edge lengths must be
    /// positive and the graph connected.
    pub fn from_graph(
        points: Vec<Point>,
        edges: Vec<(usize, usize, f64)>,
        mass: Vec<f64>,
    ) -> Result<Self> {
        let n = points.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, len) in &edges {
            if a >= n || b >= n {
                return Err(Error::UnknownPoint {
                    index: a.max(b),
                    len: n,
                });
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::param(format!(
                    "edge ({}, {}) has non-positive length {len}",
                    points[a].id, points[b].id
                )));
            }
            if a == b {
                continue;
            }
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        let rows = par::map_range(n, |s| dijkstra(&adj, s));
        for (s, row) in rows.iter().enumerate() {
            if let Some(t) = row.iter().position(|d| d.is_infinite()) {
                return Err(Error::DisconnectedGraph {
                    from: points[s].id.clone(),
                    to: points[t].id.clone(),
                });
            }
        }
        // Mirror the upper triangle so the table is exactly symmetric.
        let table = symmetric_table(n, |i, j| rows[i][j]);
        Self::assemble(
            points,
            mass,
            Storage::Table(table),
            MetricSource::Graph(edges),
        )
    }

    /// Metric given by a callback, evaluated lazily and cached per pair.
    pub fn from_oracle<F>(points: Vec<Point>, mass: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        let oracle = CachedOracle {
            f: Arc::new(f),
            cache: RwLock::new(HashMap::new()),
        };
        Self::assemble(points, mass, Storage::Oracle(oracle), MetricSource::Oracle)
    }

    /// Same points and metric with a different measure.
    pub fn with_masses(&self, mass: Vec<f64>) -> Result<Self> {
        let storage = match &self.storage {
            Storage::Table(t) => Storage::Table(t.clone()),
            Storage::Coordinates => Storage::Coordinates,
            Storage::Oracle(o) => Storage::Oracle(CachedOracle {
                f: o.f.clone(),
                cache: RwLock::new(HashMap::new()),
            }),
        };
        Self::assemble(self.points.clone(), mass, storage, self.source.clone())
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn source(&self) -> &MetricSource {
        &self.source
    }

    fn source_kind(&self) -> &'static str {
        match self.source {
            MetricSource::Euclidean => "euclidean",
            MetricSource::Graph(_) => "graph",
            MetricSource::Table => "table",
            MetricSource::Oracle => "oracle",
        }
    }

    /// Indices of points with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.mass[i] > 0.0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Table(t) => t[i * self.points.len() + j],
            Storage::Coordinates => euclid(
                self.points[i].coords.expect("coordinates"),
                self.points[j].coords.expect("coordinates"),
            ),
            Storage::Oracle(o) => o.get(i, j),
        }
    }

    /// Distances from `i` to every point, in index order.
    pub fn row(&self, i: usize) -> std::borrow::Cow<'_, [f64]> {
        let n = self.len();
        match &self.storage {
            Storage::Table(t) => std::borrow::Cow::Borrowed(&t[i * n..(i + 1) * n]),
            _ => std::borrow::Cow::Owned((0..n).map(|j| self.dist(i, j)).collect()),
        }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint {
                index: i,
                len: self.len(),
            })
        }
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPointId(id.to_string()))
    }

    /// First coordinate, or distance to point 0 for spaces without
    /// coordinates. Used by the named analytic fields.
    pub fn abscissa(&self, i: usize) -> f64 {
        match self.points[i].coords {
            Some(c) => c[0],
            None => self.dist(0, i),
        }
    }

    pub fn diameter(&self) -> f64 {
        par::map_range(self.len(), |i| {
            self.row(i).iter().copied().fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Smallest positive distance between two points.
    pub fn resolution(&self) -> f64 {
        par::map_range(self.len(), |i| {
            self.row(i)
                .iter()
                .copied()
                .filter(|d| *d > 0.0)
                .fold(f64::INFINITY, f64::min)
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    /// Largest Lipschitz ratio `|f(x) − f(y)| / d(x, y)` over all pairs.
    pub fn lipschitz_constant(&self, values: &[f64]) -> f64 {
        par::map_range(self.len(), |i| {
            let row = self.row(i);
            let mut best = 0.0f64;
            for j in (i + 1)..self.len() {
                if row[j] > 0.0 {
                    best = best.max((values[i] - values[j]).abs() / row[j]);
                }
            }
            best
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn symmetric_table(n: usize, d: impl Fn(usize, usize) -> f64 + Sync + Send) -> Vec<f64> {
    let upper = par::map_range(n, |i| ((i + 1)..n).map(|j| d(i, j)).collect::<Vec<_>>());
    let mut t = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            t[i * n + j] = v;
            t[j * n + i] = v;
        }
    }
    t
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on distance, then index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

pub(crate) fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    dijkstra_with_parents(adj, source).0
}

pub(crate) fn dijkstra_with_parents(
    adj: &[Vec<(usize, f64)>],
    source: usize,
) -> (Vec<f64>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = std::collections::BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    while let Some(HeapEntry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, len) in &adj[u] {
            let nd = d + len;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = u;
                heap.push(HeapEntry(nd, v));
            }
        }
    }
    (dist, parent)
}

/// Values of a function on the points of one space.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    space_id: SpaceId,
}

impl ScalarField {
    pub fn new(space: &MetricMeasureSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::param(format!(
                "field has {} values, space has {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "field value at point {i} is {}",
                values[i]
            )));
        }
        Ok(ScalarField {
            values,
            space_id: space.id(),
        })
    }

    pub fn from_fn(space: &MetricMeasureSpace, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(space, (0..space.len()).map(f).collect())
    }

    pub fn constant(space: &MetricMeasureSpace, c: f64) -> Result<Self> {
        Self::from_fn(space, |_| c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn belongs_to(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.space_id == space.id() {
            Ok(())
        } else {
            Err(Error::Mismatch("field belongs to a different space"))
        }
    }

    /// `a·self + b·other`, pointwise.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        if self.space_id != other.space_id {
            return Err(Error::Mismatch("fields live on different spaces"));
        }
        Ok(ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            space_id: self.space_id,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|v| f(*v)).collect(),
            space_id: self.space_id,
        }
    }
}

/// An open ball `B(center, radius) = { y : d(center, y) < radius }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    pub mass: f64,
}

pub fn ball_query(space: &MetricMeasureSpace, center: usize, radius: f64) -> Result<Ball> {
    space.check_index(center)?;
    if !(radius > 0.0) {
        return Err(Error::param(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let row = space.row(center);
    let members: Vec<usize> = (0..space.len()).filter(|&j| row[j] < radius).collect();
    let mass = members.iter().map(|&j| space.mass(j)).sum();
    Ok(Ball {
        center,
        radius,
        members,
        mass,
    })
}

/// Maximum number of individual violations listed in a validation report.
const MAX_LISTED: usize = 32;

/// Audits symmetry, positivity and the triangle inequality.
///
/// The triangle scan is exhaustive for up to
/// [`EXHAUSTIVE_TRIANGLE_LIMIT`] points and covers a fixed-seed sample of
/// triples above that. A triangle violation is counted once per unordered
/// pair `{i, j}` and intermediate point `k` with
/// `d(i,j) > d(i,k) + d(k,j)` beyond a relative roundoff allowance of 1e-12.
pub fn validate_metric(space: &MetricMeasureSpace) -> Report {
    let n = space.len();
    let mut report = Report::new("validate_metric");
    let id = |i: usize| space.points()[i].id.as_str();

    let mut asym = 0u64;
    let mut nonpos = 0u64;
    let mut diag = 0u64;
    for i in 0..n {
        if space.dist(i, i) != 0.0 {
            diag += 1;
            if (diag as usize) <= MAX_LISTED {
                report.note(format!("d({0},{0}) = {1}", id(i), space.dist(i, i)));
            }
        }
        for j in (i + 1)..n {
            let (a, b) = (space.dist(i, j), space.dist(j, i));
            if a != b {
                asym += 1;
                if (asym as usize) <= MAX_LISTED {
                    report.note(format!("asymmetric pair ({},{}): {a} vs {b}", id(i), id(j)));
                }
            }
            if !(a > 0.0) {
                nonpos += 1;
                if (nonpos as usize) <= MAX_LISTED {
                    report.note(format!("non-positive distance ({},{}): {a}", id(i), id(j)));
                }
            }
        }
    }

    let exhaustive = n <= EXHAUSTIVE_TRIANGLE_LIMIT;
    let violations: Vec<(usize, usize, usize)> = if exhaustive {
        par::map_range(n, |i| {
            let ri = space.row(i);
            let mut found = Vec::new();
            for j in (i + 1)..n {
                let rj = space.row(j);
                let dij = ri[j];
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let via = ri[k] + rj[k];
                    if dij > via * (1.0 + 1e-12) {
                        found.push((i, j, k));
                    }
                }
            }
            found
        })
        .into_iter()
        .flatten()
        .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7121);
        let mut found = Vec::new();
        for _ in 0..TRIANGLE_SAMPLE {
            let (i, j, k) = (
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            );
            if i == j || j == k || i == k {
                continue;
            }
            let (i, j) = (i.min(j), i.max(j));
            if space.dist(i, j) > (space.dist(i, k) + space.dist(k, j)) * (1.0 + 1e-12) {
                found.push((i, j, k));
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    };
    for &(i, j, k) in violations.iter().take(MAX_LISTED) {
        report.note(format!(
            "triangle violation: d({},{}) = {} > d({},{}) + d({},{}) = {}",
            id(i),
            id(j),
            space.dist(i, j),
            id(i),
            id(k),
            id(k),
            id(j),
            space.dist(i, k) + space.dist(k, j)
        ));
    }

    report
        .count("points", n as u64)
        .count("exhaustive_triangle_scan", exhaustive as u64)
        .check("zero_diagonal", diag == 0, diag as f64, 0.0, "")
        .check("symmetry", asym == 0, asym as f64, 0.0, "")
        .check("positivity", nonpos == 0, nonpos as f64, 0.0, "")
        .check(
            "triangle",
            violations.is_empty(),
            violations.len() as f64,
            0.0,
            if exhaustive { "exhaustive" } else { "sampled" },
        );
    report
}

/// Turns the first violation of a metric into an error naming the offending
/// points. Used by loaders, which reject invalid metrics outright.
pub fn require_metric(space: &MetricMeasureSpace) -> Result<()> {
    let n = space.len();
    let id = |i: usize| space.points()[i].id.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (space.dist(i, j), space.dist(j, i));
            if a != b {
                return Err(Error::Asymmetric {
                    a: id(i),
                    b: id(j),
                    ab: a,
                    ba: b,
                });
            }
            if !(a > 0.0) {
                return Err(Error::NonPositive {
                    a: id(i),
                    b: id(j),
                    value: a,
                });
            }
        }
        if space.dist(i, i) != 0.0 {
            return Err(Error::NonPositive {
                a: id(i),
                b: id(i),
                value: space.dist(i, i),
            });
        }
    }
    let report = validate_metric(space);
    if report.get_check("triangle").is_some_and(|c| !c.passed) {
        // Re-locate the first violating triple for the error message.
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let via = space.dist(i, k) + space.dist(k, j);
                    if space.dist(i, j) > via * (1.0 + 1e-12) {
                        return Err(Error::Triangle {
                            a: id(i),
                            b: id(j),
                            c: id(k),
                            ab: space.dist(i, j),
                            via,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{self, Generator};
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> MetricMeasureSpace {
        let points = xs
            .iter()
            .enumerate()
            .map(|(i, x)| Point::at(i.to_string(), *x, 0.0))
            .collect();
        MetricMeasureSpace::euclidean(points, vec![1.0; xs.len()]).unwrap()
    }

    #[test]
    fn ball_on_interval_eleven() {
        let s = generate::generate(&Generator::Interval(11)).unwrap();
        let b = ball_query(&s, 5, 0.25).unwrap();
        let xs: Vec<f64> = b.members.iter().map(|&i| s.abscissa(i)).collect();
        assert_eq!(b.members, vec![3, 4, 5, 6, 7]);
        assert!((xs[0] - 0.3).abs() < 1e-15 && (xs[4] - 0.7).abs() < 1e-15);
        assert!((b.mass - 5.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn ball_extremes() {
        let s = line(&[0.0, 0.3, 1.0]);
        assert_eq!(ball_query(&s, 1, 5.0).unwrap().members, vec![0, 1, 2]);
        assert_eq!(ball_query(&s, 1, 0.1).unwrap().members, vec![1]);
        assert!(ball_query(&s, 7, 0.1).is_err());
        assert!(ball_query(&s, 0, 0.0).is_err());
    }

    #[test]
    fn interval_validates() {
        let s = generate::generate(&Generator::Interval(10)).unwrap();
        assert!(validate_metric(&s).passed());
    }

    #[test]
    fn single_point_validates() {
        let s = line(&[0.5]);
        assert!(validate_metric(&s).passed());
    }

    #[test]
    fn one_inflated_entry_is_one_violation() {
        // Four points on a line; inflate d(0,1) far beyond the detour via 2
        // but not via 3.
        let xs: [f64; 4] = [0.0, 1.0, 0.5, 5.0];
        let n = xs.len();
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[i * n + j] = (xs[i] - xs[j]).abs();
            }
        }
        t[1] = 1.5;
        t[n] = 1.5;
        let pts = (0..n).map(|i| Point::new(i.to_string())).collect();
        let s = MetricMeasureSpace::from_table(pts, t, vec![1.0; n]).unwrap();

        // oracle: exhaustive triple scan
        let mut expected = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k != i && k != j && s.dist(i, j) > s.dist(i, k) + s.dist(k, j) {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(expected, 1);
        let r = validate_metric(&s);
        assert_eq!(r.get_check("triangle").unwrap().observed, 1.0);
        assert!(matches!(require_metric(&s), Err(Error::Triangle { .. })));
    }

    #[test]
    fn asymmetry_is_named() {
        let pts = vec![Point::new("a"), Point::new("b")];
        let s =
            MetricMeasureSpace::from_table(pts, vec![0.0, 1.0, 2.0, 0.0], vec![1.0, 1.0]).unwrap();
        match require_metric(&s) {
            Err(Error::Asymmetric { a, b, .. }) => assert_eq!((a.as_str(), b.as_str()), ("a", "b")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_metric_matches_table() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i.to_string())).collect();
        let s =
            MetricMeasureSpace::from_oracle(pts, vec![0.2; 5], |i, j| (i as f64 - j as f64).abs())
                .unwrap();
        assert_eq!(s.dist(1, 4), 3.0);
        assert_eq!(s.dist(4, 1), 3.0);
        assert!(validate_metric(&s).passed());
    }

    #[test]
    fn support_excludes_zero_mass() {
        let s = line(&[0.0, 1.0, 2.0])
            .with_masses(vec![1.0, 0.0, 2.0])
            .unwrap();
        assert_eq!(s.support(), vec![0, 2]);
        assert_eq!(s.total_mass(), 3.0);
    }

    proptest! {
        #[test]
        fn ball_monotone_in_radius(seed in 0u64..500, r1 in 0.01f64..1.0, extra in 0.0f64..1.0) {
            let s = generate::random_cloud(40, seed).unwrap();
            let c = (seed as usize) % 40;
            let small = ball_query(&s, c, r1).unwrap();
            let large = ball_query(&s, c, r1 + extra).unwrap();
            prop_assert!(small.members.iter().all(|m| large.members.contains(m)));
        }
    }
}
