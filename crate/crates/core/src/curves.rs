//! Discrete curves (vertex paths) and curve-family generators.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::space::{dijkstra_with_parents, MetricMeasureSpace, MetricSource};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    vertices: Vec<usize>,
    segment_lengths: Vec<f64>,
    total_length: f64,
}

impl DiscreteCurve {
    /// Consecutive vertices must be distinct points.
    pub fn new(space: &MetricMeasureSpace, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Empty("curve has no vertices"));
        }
        for &v in &vertices {
            space.check_index(v)?;
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!(
                "curve repeats vertex {} consecutively",
                w[0]
            )));
        }
        let segment_lengths: Vec<f64> = vertices
            .windows(2)
            .map(|w| space.dist(w[0], w[1]))
            .collect();
        let total_length = segment_lengths.iter().sum();
        Ok(DiscreteCurve {
            vertices,
            segment_lengths,
            total_length,
        })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn max_segment(&self) -> f64 {
        self.segment_lengths.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_k (g(v_k) + g(v_{k+1}))/2 · len_k` for a per-vertex weight lookup.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.vertices
            .windows(2)
            .zip(&self.segment_lengths)
            .map(|(w, len)| 0.5 * (g(w[0]) + g(w[1])) * len)
            .sum()
    }
}

/// Paths through consecutive points in abscissa order, between two random
/// positions at least `min_span` points apart, in a random direction.
pub fn monotone_paths<R: Rng>(
    space: &MetricMeasureSpace,
    count: usize,
    min_span: usize,
    rng: &mut R,
) -> Result<Vec<DiscreteCurve>> {
    let n = space.len();
    if n < 2 || min_span >= n {
        return Err(Error::param("not enough points for monotone paths"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        space
            .abscissa(a)
            .total_cmp(&space.abscissa(b))
            .then(a.cmp(&b))
    });
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..n - min_span);
            let b = rng.gen_range(a + min_span..n);
            let mut verts = order[a..=b].to_vec();
            if rng.gen_bool(0.5) {
                verts.reverse();
            }
            DiscreteCurve::new(space, verts)
        })
        .collect()
}

/// Monotone lattice paths on an `n × n` grid with index `row·n + col`:
/// from a random start, a random shuffle of unit right/up moves (or
/// left/down) reaching a random end.
pub fn staircase_paths<R: Rng>(
    space: &MetricMeasureSpace,
    n: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DiscreteCurve>> {
    if n < 2 || space.len() != n * n {
        return Err(Error::param("staircase paths need an n × n grid"));
    }
    (0..count)
        .map(|_| {
            let (r0, c0) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let (r1, c1) = loop {
                let e = (rng.gen_range(0..n), rng.gen_range(0..n));
                if e != (r0, c0) {
                    break e;
                }
            };
            let mut moves: Vec<(isize, isize)> = Vec::new();
            let dr = if r1 >= r0 { 1 } else { -1 };
            let dc = if c1 >= c0 { 1 } else { -1 };
            moves.extend(std::iter::repeat_n((dr, 0), r1.abs_diff(r0)));
            moves.extend(std::iter::repeat_n((0, dc), c1.abs_diff(c0)));
            moves.shuffle(rng);
            let (mut r, mut c) = (r0 as isize, c0 as isize);
            let mut verts = vec![r0 * n + c0];
            for (a, b) in moves {
                r += a;
                c += b;
                verts.push(r as usize * n + c as usize);
            }
            DiscreteCurve::new(space, verts)
        })
        .collect()
}

/// Shortest paths between random vertex pairs of a graph space.
pub fn geodesic_paths<R: Rng>(
    space: &MetricMeasureSpace,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DiscreteCurve>> {
    let MetricSource::Graph(edges) = space.source() else {
        return Err(Error::param("geodesic paths need a graph space"));
    };
    let n = space.len();
    if n < 2 {
        return Err(Error::param("geodesic paths need two vertices"));
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b, w) in edges {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = loop {
                let b = rng.gen_range(0..n);
                if b != a {
                    break b;
                }
            };
            let (_, parent) = dijkstra_with_parents(&adj, a);
            let mut verts = vec![b];
            let mut at = b;
            while parent[at] != usize::MAX {
                at = parent[at];
                verts.push(at);
            }
            verts.reverse();
            DiscreteCurve::new(space, verts)
        })
        .collect()
}

/// Random walks of `steps` moves, each to a uniformly chosen other point
/// within distance `max_step`. A walk stops early at a point with no such
/// neighbor.
pub fn random_walks<R: Rng>(
    space: &MetricMeasureSpace,
    max_step: f64,
    steps: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DiscreteCurve>> {
    if !(max_step > 0.0) {
        return Err(Error::param("max_step must be positive"));
    }
    let n = space.len();
    let near: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            let row = space.row(x);
            (0..n).filter(|&y| y != x && row[y] <= max_step).collect()
        })
        .collect();
    (0..count)
        .map(|_| {
            let mut verts = vec![rng.gen_range(0..n)];
            for _ in 0..steps {
                let here = *verts.last().expect("nonempty");
                match near[here].choose(rng) {
                    Some(&next) => verts.push(next),
                    None => break,
                }
            }
            DiscreteCurve::new(space, verts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{grid2d, grid_graph, interval, random_cloud};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lengths_and_errors() {
        let s = interval(11).unwrap();
        let c = DiscreteCurve::new(&s, vec![0, 3, 1]).unwrap();
        assert!((c.total_length() - 0.5).abs() < 1e-15);
        assert!((c.max_segment() - 0.3).abs() < 1e-15);
        assert!(DiscreteCurve::new(&s, vec![2, 2]).is_err());
        assert!(DiscreteCurve::new(&s, vec![20]).is_err());
        assert!(DiscreteCurve::new(&s, vec![]).is_err());
        assert_eq!(DiscreteCurve::new(&s, vec![4]).unwrap().total_length(), 0.0);
        // trapezoid rule is exact for affine weights along a line
        let c = DiscreteCurve::new(&s, vec![0, 5, 10]).unwrap();
        assert!((c.integrate(|v| s.abscissa(v)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn generators_produce_valid_curves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = interval(50).unwrap();
        let h = 1.0 / 49.0;
        for c in monotone_paths(&s, 20, 5, &mut rng).unwrap() {
            assert!((c.max_segment() - h).abs() < 1e-12);
        }
        let g = grid2d(8).unwrap();
        for c in staircase_paths(&g, 8, 20, &mut rng).unwrap() {
            assert!(c.max_segment() <= 1.0 / 7.0 + 1e-12);
        }
        let gg = grid_graph(8, 3).unwrap();
        for c in geodesic_paths(&gg, 20, &mut rng).unwrap() {
            let first = c.vertices()[0];
            let last = *c.vertices().last().unwrap();
            assert!((c.total_length() - gg.dist(first, last)).abs() < 1e-12);
        }
        let cloud = random_cloud(80, 2).unwrap();
        for c in random_walks(&cloud, 0.2, 30, 10, &mut rng).unwrap() {
            assert!(c.max_segment() <= 0.2);
        }
        assert!(geodesic_paths(&s, 1, &mut rng).is_err());
    }
}
