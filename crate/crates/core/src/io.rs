//! File formats: space files, partition export, curve files, and the
//! canonical JSON writer used for every report.
//!
//! All floats are written with 17 significant digits, which round-trips an
//! `f64` exactly; object keys are sorted.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curves::DiscreteCurve;
use crate::partition::{NeighborGraph, Partition};
use crate::space::{require_metric, MetricMeasureSpace, MetricSource, Point};
use crate::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` as pretty JSON with sorted keys and 17-digit floats.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                out.push_str(&fmt_f64(n.as_f64().expect("json number")));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            // Arrays of scalars stay on one line.
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(out, &map[*key], level + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<[f64; 2]>,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MetricRecord {
    Named(String),
    Table { table: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    points: Vec<PointRecord>,
    metric: MetricRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(String, String, f64)>>,
}

/// Serializes a space in the JSON space-file format.
pub fn space_to_json(space: &MetricMeasureSpace) -> String {
    let points = space
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| PointRecord {
            id: p.id.clone(),
            coords: p.coords,
            mass: space.mass(i),
        })
        .collect();
    let n = space.len();
    let (metric, edges) = match space.source() {
        MetricSource::Euclidean => (MetricRecord::Named("euclidean".into()), None),
        MetricSource::Graph(edges) => {
            let ids = |i: usize| space.points()[i].id.clone();
            (
                MetricRecord::Named("graph".into()),
                Some(edges.iter().map(|&(a, b, l)| (ids(a), ids(b), l)).collect()),
            )
        }
        MetricSource::Table | MetricSource::Oracle => (
            MetricRecord::Table {
                table: (0..n).map(|i| space.row(i).into_owned()).collect(),
            },
            None,
        ),
    };
    canonical_json(&SpaceFile {
        points,
        metric,
        edges,
    })
    .expect("space serializes")
}

/// Parses a space file and rejects anything that is not a metric.
pub fn space_from_json(text: &str) -> Result<MetricMeasureSpace> {
    let file: SpaceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mass: Vec<f64> = file.points.iter().map(|p| p.mass).collect();
    let points: Vec<Point> = file
        .points
        .into_iter()
        .map(|p| Point {
            id: p.id,
            coords: p.coords,
        })
        .collect();
    {
        let mut seen = std::collections::HashSet::new();
        if let Some(p) = points.iter().find(|p| !seen.insert(p.id.as_str())) {
            return Err(Error::Parse(format!("duplicate point id `{}`", p.id)));
        }
    }
    let space = match file.metric {
        MetricRecord::Named(name) if name == "euclidean" => {
            MetricMeasureSpace::euclidean(points, mass)?
        }
        MetricRecord::Named(name) if name == "graph" => {
            let edges = file
                .edges
                .ok_or_else(|| Error::Parse("graph metric requires `edges`".into()))?;
            let idx = |id: &str| {
                points
                    .iter()
                    .position(|p| p.id == id)
                    .ok_or_else(|| Error::UnknownPointId(id.to_string()))
            };
            let edges = edges
                .iter()
                .map(|(a, b, l)| Ok((idx(a)?, idx(b)?, *l)))
                .collect::<Result<Vec<_>>>()?;
            MetricMeasureSpace::from_graph(points, edges, mass)?
        }
        MetricRecord::Named(other) => {
            return Err(Error::Parse(format!("unknown metric `{other}`")));
        }
        MetricRecord::Table { table } => {
            let n = points.len();
            if table.len() != n || table.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("distance table must be {n} × {n}")));
            }
            MetricMeasureSpace::from_table(points, table.into_iter().flatten().collect(), mass)?
        }
    };
    require_metric(&space)?;
    Ok(space)
}

pub fn load_space(path: &Path) -> Result<MetricMeasureSpace> {
    space_from_json(&read_text(path)?)
}

pub fn save_space(space: &MetricMeasureSpace, path: &Path) -> Result<()> {
    write_text(path, &space_to_json(space))
}

#[derive(Serialize, Deserialize)]
struct CellRecord {
    center: String,
    members: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    delta: f64,
    eps: f64,
    cells: Vec<CellRecord>,
    neighbors: Vec<[usize; 2]>,
}

pub fn partition_to_json(
    space: &MetricMeasureSpace,
    partition: &Partition,
    graph: &NeighborGraph,
) -> String {
    let id = |i: usize| space.points()[i].id.clone();
    let file = PartitionFile {
        delta: partition.delta(),
        eps: partition.eps(),
        cells: partition
            .centers()
            .iter()
            .zip(partition.cells())
            .map(|(&c, members)| CellRecord {
                center: id(c),
                members: members.iter().map(|&m| id(m)).collect(),
            })
            .collect(),
        neighbors: graph.pairs().iter().map(|&(i, j)| [i, j]).collect(),
    };
    canonical_json(&file).expect("partition serializes")
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    curves: Vec<Vec<String>>,
}

pub fn curves_from_json(space: &MetricMeasureSpace, text: &str) -> Result<Vec<DiscreteCurve>> {
    let file: CurveFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.curves
        .iter()
        .map(|ids| {
            let verts = ids
                .iter()
                .map(|id| space.index_of(id))
                .collect::<Result<Vec<_>>>()?;
            DiscreteCurve::new(space, verts)
        })
        .collect()
}

pub fn curves_to_json(space: &MetricMeasureSpace, curves: &[DiscreteCurve]) -> String {
    let file = CurveFile {
        curves: curves
            .iter()
            .map(|c| {
                c.vertices()
                    .iter()
                    .map(|&v| space.points()[v].id.clone())
                    .collect()
            })
            .collect(),
    };
    canonical_json(&file).expect("curves serialize")
}

/// Builds CSV text from a header and rows of floats (17 digits).
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        let cells: Vec<String> = row
            .into_iter()
            .map(|v| v.map(fmt_f64).unwrap_or_default())
            .collect();
        w.write_record(&cells).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
