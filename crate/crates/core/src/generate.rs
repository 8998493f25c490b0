//! Test-space generators.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{MetricMeasureSpace, Point};
use crate::{Error, Result};

/// A named space generator.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// `n` equispaced points on `[0, 1]`, mass `1/n` each.
    Interval(usize),
    /// `n × n` grid on `[0, 1]²`, mass `1/n²` each. Point `row * n + col`
    /// sits at `(col, row) / (n − 1)`.
    Grid2d(usize),
    /// `n` equispaced points on a circle of unit circumference with the
    /// arc-length metric, mass `1/n` each.
    Circle(usize),
    /// Vertices of the Von Koch curve prefractal at the given refinement
    /// level (`4^level + 1` points), Euclidean metric, equal masses.
    Koch(usize),
    /// Shortest-path metric of a graph given by named edges, unit masses.
    Graph(Vec<(String, String, f64)>),
    /// `n` uniform random points in the unit square, mass `1/n` each.
    Cloud { n: usize, seed: u64 },
    /// Random connected graph on `n` nodes with lengths in `[0.1, 1]`.
    RandomGraph { n: usize, seed: u64 },
    /// `n × n` grid graph with edge lengths drawn from `[h/2, h]`,
    /// `h = 1/(n − 1)`, mass `1/n²` each.
    GridGraph { n: usize, seed: u64 },
}

fn need(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(msg))
    }
}

impl FromStr for Generator {
    type Err = Error;

    /// Parses `name:arg[:arg]`, e.g. `interval:2000`, `koch:5`,
    /// `cloud:100:7`, `graph:a-b:2,b-c:1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(':').collect()
        };
        let int = |k: usize| -> Result<i64> {
            args.get(k)
                .ok_or_else(|| Error::param(format!("generator `{s}` is missing argument {k}")))?
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::param(format!("generator `{s}`: {e}")))
        };
        let size = |k: usize, min: i64| -> Result<usize> {
            let v = int(k)?;
            if v < min {
                return Err(Error::param(format!(
                    "generator `{s}`: argument must be ≥ {min}"
                )));
            }
            Ok(v as usize)
        };
        let seed =
            |k: usize| -> Result<u64> { Ok(if args.len() > k { int(k)? as u64 } else { 0 }) };
        match name {
            "interval" => Ok(Generator::Interval(size(0, 2)?)),
            "grid2d" => Ok(Generator::Grid2d(size(0, 2)?)),
            "circle" => Ok(Generator::Circle(size(0, 2)?)),
            "koch" => Ok(Generator::Koch(size(0, 0)?)),
            "cloud" => Ok(Generator::Cloud {
                n: size(0, 1)?,
                seed: seed(1)?,
            }),
            "rgraph" => Ok(Generator::RandomGraph {
                n: size(0, 1)?,
                seed: seed(1)?,
            }),
            "gridgraph" => Ok(Generator::GridGraph {
                n: size(0, 2)?,
                seed: seed(1)?,
            }),
            "graph" => {
                let mut edges = Vec::new();
                for e in rest.split(',').filter(|e| !e.is_empty()) {
                    let (ends, len) = e
                        .rsplit_once(':')
                        .ok_or_else(|| Error::param(format!("edge `{e}` needs `a-b:len`")))?;
                    let (a, b) = ends
                        .split_once('-')
                        .ok_or_else(|| Error::param(format!("edge `{e}` needs `a-b:len`")))?;
                    let len: f64 = len
                        .parse()
                        .map_err(|err| Error::param(format!("edge `{e}`: {err}")))?;
                    edges.push((a.to_string(), b.to_string(), len));
                }
                Ok(Generator::Graph(edges))
            }
            other => Err(Error::param(format!("unknown space generator `{other}`"))),
        }
    }
}

pub fn generate(spec: &Generator) -> Result<MetricMeasureSpace> {
    match spec {
        Generator::Interval(n) => interval(*n),
        Generator::Grid2d(n) => grid2d(*n),
        Generator::Circle(n) => circle(*n),
        Generator::Koch(level) => koch(*level),
        Generator::Graph(edges) => named_graph(edges),
        Generator::Cloud { n, seed } => random_cloud(*n, *seed),
        Generator::RandomGraph { n, seed } => random_graph(*n, *seed),
        Generator::GridGraph { n, seed } => grid_graph(*n, *seed),
    }
}

pub fn interval(n: usize) -> Result<MetricMeasureSpace> {
    need(n >= 2, "interval needs n ≥ 2")?;
    let points = (0..n)
        .map(|i| Point::at(i.to_string(), i as f64 / (n - 1) as f64, 0.0))
        .collect();
    MetricMeasureSpace::euclidean(points, vec![1.0 / n as f64; n])
}

pub fn grid2d(n: usize) -> Result<MetricMeasureSpace> {
    need(n >= 2, "grid2d needs n ≥ 2")?;
    let h = 1.0 / (n - 1) as f64;
    let points = (0..n * n)
        .map(|k| {
            let (row, col) = (k / n, k % n);
            Point::at(format!("{row},{col}"), col as f64 * h, row as f64 * h)
        })
        .collect();
    MetricMeasureSpace::euclidean(points, vec![1.0 / (n * n) as f64; n * n])
}

pub fn circle(n: usize) -> Result<MetricMeasureSpace> {
    need(n >= 2, "circle needs n ≥ 2")?;
    let radius = 1.0 / (2.0 * std::f64::consts::PI);
    let points: Vec<Point> = (0..n)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Point::at(i.to_string(), radius * theta.cos(), radius * theta.sin())
        })
        .collect();
    let mut table = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i.abs_diff(j);
            table[i * n + j] = k.min(n - k) as f64 / n as f64;
        }
    }
    MetricMeasureSpace::from_table(points, table, vec![1.0 / n as f64; n])
}

/// Vertices of the Von Koch curve from `(0,0)` to `(1,0)`: each segment
/// `a → b` is replaced by `a, a + d, a + d + R₆₀ d, a + 2d, b` with
/// `d = (b − a)/3`.
pub fn koch_vertices(level: usize) -> Vec<[f64; 2]> {
    let (c, s) = (0.5f64, 3f64.sqrt() / 2.0);
    let mut pts = vec![[0.0, 0.0], [1.0, 0.0]];
    for _ in 0..level {
        let mut next = Vec::with_capacity(4 * pts.len());
        next.push(pts[0]);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + d[0], a[1] + d[1]];
            let p2 = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
            let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
            next.extend([p1, p2, p3, b]);
        }
        pts = next;
    }
    pts
}

pub fn koch(level: usize) -> Result<MetricMeasureSpace> {
    need(level <= 7, "koch level above 7 is not supported")?;
    let verts = koch_vertices(level);
    let n = verts.len();
    let points = verts
        .iter()
        .enumerate()
        .map(|(i, c)| Point::at(i.to_string(), c[0], c[1]))
        .collect();
    MetricMeasureSpace::euclidean(points, vec![1.0 / n as f64; n])
}

/// Graph from named edges; node order is first appearance.
pub fn named_graph(edges: &[(String, String, f64)]) -> Result<MetricMeasureSpace> {
    let mut ids: Vec<String> = Vec::new();
    let index = |id: &String, ids: &mut Vec<String>| -> usize {
        match ids.iter().position(|x| x == id) {
            Some(i) => i,
            None => {
                ids.push(id.clone());
                ids.len() - 1
            }
        }
    };
    let mut idx_edges = Vec::with_capacity(edges.len());
    for (a, b, len) in edges {
        let ia = index(a, &mut ids);
        let ib = index(b, &mut ids);
        idx_edges.push((ia, ib, *len));
    }
    need(!ids.is_empty(), "graph needs at least one edge")?;
    let n = ids.len();
    let points = ids.into_iter().map(Point::new).collect();
    MetricMeasureSpace::from_graph(points, idx_edges, vec![1.0; n])
}

pub fn random_cloud(n: usize, seed: u64) -> Result<MetricMeasureSpace> {
    need(n >= 1, "cloud needs n ≥ 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|i| Point::at(i.to_string(), rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    MetricMeasureSpace::euclidean(points, vec![1.0 / n as f64; n])
}

/// Random spanning tree plus about `n/2` extra edges. Nodes carry random
/// planar coordinates for display only.
pub fn random_graph(n: usize, seed: u64) -> Result<MetricMeasureSpace> {
    need(n >= 1, "rgraph needs n ≥ 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point> = (0..n)
        .map(|i| Point::at(i.to_string(), rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((i, j, rng.gen_range(0.1..1.0)));
    }
    if n > 2 {
        for _ in 0..n / 2 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.push((a, b, rng.gen_range(0.1..1.0)));
            }
        }
    }
    MetricMeasureSpace::from_graph(points, edges, vec![1.0; n])
}

pub fn grid_graph(n: usize, seed: u64) -> Result<MetricMeasureSpace> {
    need(n >= 2, "gridgraph needs n ≥ 2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / (n - 1) as f64;
    let points = (0..n * n)
        .map(|k| {
            Point::at(
                format!("{},{}", k / n, k % n),
                (k % n) as f64 * h,
                (k / n) as f64 * h,
            )
        })
        .collect();
    let mut edges = Vec::new();
    for row in 0..n {
        for col in 0..n {
            let k = row * n + col;
            if col + 1 < n {
                edges.push((k, k + 1, rng.gen_range(0.5 * h..=h)));
            }
            if row + 1 < n {
                edges.push((k, k + n, rng.gen_range(0.5 * h..=h)));
            }
        }
    }
    MetricMeasureSpace::from_graph(points, edges, vec![1.0 / (n * n) as f64; n * n])
}
