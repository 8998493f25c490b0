//! Named experiment suites. Each run is a pure function of its
//! configuration, so a fixed seed reproduces byte-identical reports.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{self, DiscreteCurve};
use crate::diagnostics::{
    self, default_probe_grid, doubling_constants, middle_half, poincare_check, radius_ladder,
    telescoping_check, BallIndex, Probe,
};
use crate::energy::{
    self, clarkson_cells, energy_ladder, project_cells, sine_reference_energy,
    uniform_convexity_cells, CellGeometry,
};
use crate::fields::{build_field, field_from_json, FieldSpec};
use crate::flow::{flow_invariant_report, run_flow, FlowConfig};
use crate::generate::{self, Generator};
use crate::hopf_lax::{
    check_monotonicity, check_subsolution, check_time_derivative, lipschitz_bound_check,
};
use crate::io;
use crate::partition::{build_partition, neighbor_graph, partition_diagnostics};
use crate::report::Report;
use crate::slopes::{discrete_wug_check, slope_estimate, wug_step_ratio};
use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    PartitionAudit,
    EnergyLadder,
    ClarksonSuite,
    HopflaxSuite,
    WugAudit,
    DiagnosticsSuite,
    FlowRun,
    SnowflakeDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::PartitionAudit,
        Experiment::EnergyLadder,
        Experiment::ClarksonSuite,
        Experiment::HopflaxSuite,
        Experiment::WugAudit,
        Experiment::DiagnosticsSuite,
        Experiment::FlowRun,
        Experiment::SnowflakeDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PartitionAudit => "partition-audit",
            Experiment::EnergyLadder => "energy-ladder",
            Experiment::ClarksonSuite => "clarkson-suite",
            Experiment::HopflaxSuite => "hopflax-suite",
            Experiment::WugAudit => "wug-audit",
            Experiment::DiagnosticsSuite => "diagnostics-suite",
            Experiment::FlowRun => "flow-run",
            Experiment::SnowflakeDemo => "snowflake-demo",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::param(format!("unknown experiment `{s}`")))
    }
}

/// Settings for one experiment. Unset options take per-experiment
/// defaults; see [`run`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub space: Option<String>,
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    /// Number of instances (spaces, fields, curves) for suites that sample.
    #[serde(default)]
    pub count: Option<usize>,
    /// Number of random pairs for pair-based checks.
    #[serde(default)]
    pub pairs: Option<usize>,
    /// CSV probe grid (`point_id,radius`).
    #[serde(default)]
    pub probes: Option<PathBuf>,
    /// Curve file for the weak-upper-gradient audit.
    #[serde(default)]
    pub curves: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment: experiment.name().to_string(),
            ..Default::default()
        }
    }
}

/// A finished run: the main report plus auxiliary tables keyed by file
/// name.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub experiment: Experiment,
    pub report: Report,
    pub tables: Vec<(String, String)>,
}

/// Where a space comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSource {
    Generated(Generator),
    File(PathBuf),
}

impl FromStr for SpaceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Generator>() {
            Ok(g) => Ok(SpaceSource::Generated(g)),
            Err(e) => {
                if s.ends_with(".json") || s.contains('/') || Path::new(s).exists() {
                    Ok(SpaceSource::File(PathBuf::from(s)))
                } else {
                    Err(e)
                }
            }
        }
    }
}

impl SpaceSource {
    pub fn load(&self) -> Result<MetricMeasureSpace> {
        match self {
            SpaceSource::Generated(g) => generate::generate(g),
            SpaceSource::File(p) => io::load_space(p),
        }
    }
}

fn field_for(
    space: &MetricMeasureSpace,
    spec: &str,
    seed: u64,
) -> Result<(ScalarField, Option<FieldSpec>)> {
    match spec.parse::<FieldSpec>() {
        Ok(f) => Ok((build_field(space, &f, seed)?, Some(f))),
        Err(e) => {
            if Path::new(spec).exists() {
                Ok((
                    field_from_json(space, &io::read_text(Path::new(spec))?)?,
                    None,
                ))
            } else {
                Err(e)
            }
        }
    }
}

fn spaces_or(config: &ExperimentConfig, defaults: &[&str]) -> Result<Vec<(String, SpaceSource)>> {
    match &config.space {
        Some(s) => Ok(vec![(s.clone(), s.parse()?)]),
        None => defaults
            .iter()
            .map(|s| Ok((s.to_string(), s.parse()?)))
            .collect(),
    }
}

fn probes_or_default(config: &ExperimentConfig, space: &MetricMeasureSpace) -> Result<Vec<Probe>> {
    match &config.probes {
        Some(p) => diagnostics::probes_from_csv(space, &io::read_text(p)?),
        None => Ok(default_probe_grid(space)),
    }
}

fn check_exponent(name: &str, v: f64) -> Result<f64> {
    if v > 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(format!("{name} must exceed 1, got {v}")))
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let experiment: Experiment = config.experiment.parse()?;
    if let Some(q) = config.q {
        check_exponent("q", q)?;
    }
    if let Some(p) = config.p {
        check_exponent("p", p)?;
    }
    let (report, tables) = match experiment {
        Experiment::PartitionAudit => partition_audit(config)?,
        Experiment::EnergyLadder => energy_ladder_run(config)?,
        Experiment::ClarksonSuite => clarkson_suite(config)?,
        Experiment::HopflaxSuite => hopflax_suite(config)?,
        Experiment::WugAudit => wug_audit(config)?,
        Experiment::DiagnosticsSuite => diagnostics_suite(config)?,
        Experiment::FlowRun => flow_run(config)?,
        Experiment::SnowflakeDemo => snowflake_demo(config)?,
    };
    Ok(Outcome {
        experiment,
        report,
        tables,
    })
}

type Tables = Vec<(String, String)>;

/// Worst-case tallies over many partitions.
#[derive(Default)]
struct PartitionTally {
    partitions: u64,
    failed: u64,
    min_separation_ratio: f64,
    max_reach_ratio: f64,
    third_ball_misses: f64,
    misassigned: f64,
    max_neighbor_ratio: f64,
    max_degree_excess: f64,
    max_degree: f64,
    neighbor_pairs: u64,
}

impl PartitionTally {
    fn new() -> Self {
        PartitionTally {
            min_separation_ratio: f64::INFINITY,
            max_degree_excess: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    fn add(&mut self, space: &MetricMeasureSpace, delta: f64) -> Result<()> {
        let p = build_partition(space, delta, None)?;
        let g = neighbor_graph(space, &p)?;
        let audit = p.audit(space);
        let diag = partition_diagnostics(space, &p, &g, None)?;
        let obs = |r: &Report, n: &str| r.get_check(n).map(|c| c.observed).unwrap_or(0.0);
        self.partitions += 1;
        if !(audit.passed() && diag.passed()) {
            self.failed += 1;
        }
        if p.len() > 1 {
            self.min_separation_ratio = self
                .min_separation_ratio
                .min(obs(&audit, "separation") / delta);
        }
        self.max_reach_ratio = self.max_reach_ratio.max(obs(&audit, "containment") / delta);
        self.third_ball_misses += obs(&audit, "third_ball");
        self.misassigned += obs(&audit, "partition") + obs(&audit, "center_in_cell");
        self.max_neighbor_ratio = self
            .max_neighbor_ratio
            .max(obs(&diag, "neighbor_center_distance") / delta);
        let cd3 = diag
            .get_check("degree_bound")
            .map(|c| c.limit)
            .unwrap_or(1.0);
        let deg = obs(&diag, "degree_bound");
        self.max_degree = self.max_degree.max(deg);
        self.max_degree_excess = self.max_degree_excess.max(deg - cd3);
        self.neighbor_pairs += g.pairs().len() as u64;
        Ok(())
    }

    fn report(&self) -> Report {
        let sep = if self.min_separation_ratio.is_finite() {
            self.min_separation_ratio
        } else {
            f64::MAX
        };
        let mut r = Report::new("partition-audit");
        r.count("partitions", self.partitions)
            .count("failed_partitions", self.failed)
            .count("neighbor_pairs", self.neighbor_pairs)
            .metric("max_degree", self.max_degree)
            .check(
                "cells_partition_points",
                self.misassigned == 0.0,
                self.misassigned,
                0.0,
                "misassigned points and centers",
            )
            .check("separation", sep > 1.0, sep, 1.0, "min d(z_i, z_j)/δ > 1")
            .check(
                "containment",
                self.max_reach_ratio < 1.25,
                self.max_reach_ratio,
                1.25,
                "max d(x, z_i)/δ < 5/4",
            )
            .check(
                "third_ball",
                self.third_ball_misses == 0.0,
                self.third_ball_misses,
                0.0,
                "points of B(z_i, δ/3) outside cell i",
            )
            .check(
                "neighbor_center_distance",
                self.max_neighbor_ratio <= 4.0,
                self.max_neighbor_ratio,
                4.0,
                "max d(z_i, z_j)/δ over neighbors",
            )
            .check(
                "degree_bound",
                self.max_degree_excess <= 0.0,
                self.max_degree_excess,
                0.0,
                "max degree − c_D³",
            );
        r
    }
}

/// Default corpus: alternating point clouds and random graphs with
/// `20 ≤ n ≤ 300`; scales are `{0.05, 0.1, 0.2}·diameter` unless given.
fn partition_audit(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let mut tally = PartitionTally::new();
    let mut tables = Vec::new();
    let scales = |space: &MetricMeasureSpace| -> Vec<f64> {
        match &config.deltas {
            Some(d) => d.clone(),
            None => {
                let diam = space.diameter().max(f64::MIN_POSITIVE);
                vec![0.05 * diam, 0.1 * diam, 0.2 * diam]
            }
        }
    };
    match &config.space {
        Some(spec) => {
            let space = spec.parse::<SpaceSource>()?.load()?;
            let deltas = scales(&space);
            for &d in &deltas {
                tally.add(&space, d)?;
            }
            let p = build_partition(&space, deltas[0], None)?;
            let g = neighbor_graph(&space, &p)?;
            tables.push((
                "partition.json".to_string(),
                io::partition_to_json(&space, &p, &g),
            ));
        }
        None => {
            let count = config.count.unwrap_or(200);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            for k in 0..count {
                let n = rng.gen_range(20..=300);
                let s = config.seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
                let space = if k % 2 == 0 {
                    generate::random_cloud(n, s)?
                } else {
                    generate::random_graph(n, s)?
                };
                for d in scales(&space) {
                    tally.add(&space, d)?;
                }
            }
        }
    }
    Ok((tally.report(), tables))
}

fn reference_for(source: &SpaceSource, field: Option<&FieldSpec>, q: f64) -> Option<f64> {
    match (source, field?) {
        (SpaceSource::Generated(Generator::Interval(_)), FieldSpec::Sin) => {
            Some(sine_reference_energy(q))
        }
        (
            SpaceSource::Generated(Generator::Interval(_)),
            FieldSpec::Linear | FieldSpec::AbsKink,
        ) => Some(1.0),
        _ => None,
    }
}

fn energy_ladder_run(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spec = config
        .space
        .clone()
        .unwrap_or_else(|| "interval:2000".into());
    let source: SpaceSource = spec.parse()?;
    let space = source.load()?;
    let (u, fspec) = field_for(
        &space,
        config.field.as_deref().unwrap_or("sin"),
        config.seed,
    )?;
    let q = config.q.unwrap_or(2.0);
    let deltas = config
        .deltas
        .clone()
        .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.02]);
    let ladder = energy_ladder(
        &space,
        &u,
        q,
        &deltas,
        reference_for(&source, fspec.as_ref(), q),
    )?;
    let mut report = ladder.to_report();
    report.name = "energy-ladder".into();
    Ok((report, vec![("ladder.csv".into(), ladder.to_csv())]))
}

/// Projection contraction `‖P_δu‖_q ≤ ‖u‖_q` on random spaces with random
/// masses, scales, fields and exponents.
fn contraction_trials(seed: u64, trials: usize) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut violations = 0u64;
    for k in 0..trials {
        let n = rng.gen_range(2..=150);
        let base = generate::random_cloud(n, seed.wrapping_add(k as u64))?;
        let space = base.with_masses((0..n).map(|_| rng.gen_range(0.01..1.0)).collect())?;
        let p = build_partition(&space, rng.gen_range(0.02..0.8), None)?;
        let q = rng.gen_range(1.0..4.0);
        let u = ScalarField::from_fn(&space, |_| rng.gen_range(-2.0..2.0))?;
        let cells = project_cells(&space, &p, &u)?;
        let masses = energy::cell_masses(&space, &p);
        let proj: f64 = cells
            .values()
            .iter()
            .zip(&masses)
            .map(|(v, m)| m * v.abs().powf(q))
            .sum();
        let full: f64 = u
            .values()
            .iter()
            .zip(space.masses())
            .map(|(v, m)| m * v.abs().powf(q))
            .sum();
        let ratio = proj.powf(1.0 / q) / full.powf(1.0 / q);
        worst = worst.max(ratio);
        if ratio > 1.0 + 1e-12 {
            violations += 1;
        }
    }
    let mut r = Report::new("projection_contraction");
    r.count("trials", trials as u64)
        .count("violations", violations)
        .check(
            "contraction",
            violations == 0,
            worst,
            1.0 + 1e-12,
            "max ‖P_δu‖_q / ‖u‖_q",
        );
    Ok(r)
}

fn clarkson_suite(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spec = config
        .space
        .clone()
        .unwrap_or_else(|| "interval:200".into());
    let space = spec.parse::<SpaceSource>()?.load()?;
    let delta = config
        .deltas
        .as_ref()
        .and_then(|d| d.first().copied())
        .unwrap_or(0.05);
    let p = build_partition(&space, delta, None)?;
    let g = neighbor_graph(&space, &p)?;
    let geo = CellGeometry::new(&space, &p, &g)?;
    let qs = config.q.map_or_else(|| vec![1.5, 2.0, 3.0], |q| vec![q]);
    let pairs = config.pairs.unwrap_or(100);

    let mut report = Report::new("clarkson-suite");
    report
        .metric("delta", delta)
        .count("cells", p.len() as u64)
        .count("pairs_per_q", pairs as u64);
    for (qi, &q) in qs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(qi as u64));
        let mut worst = f64::INFINITY;
        let mut worst_identity = 0.0f64;
        let mut worst_modulus = f64::NEG_INFINITY;
        for _ in 0..pairs {
            let u = ScalarField::from_fn(&space, |_| rng.gen_range(-1.0..1.0))?;
            let v = ScalarField::from_fn(&space, |_| rng.gen_range(-1.0..1.0))?;
            let a = project_cells(&space, &p, &u)?;
            let b = project_cells(&space, &p, &v)?;
            let res = clarkson_cells(&geo, a.values(), b.values(), q);
            worst = worst.min(res.inequality / res.scale.max(f64::MIN_POSITIVE));
            if let (Some(id), Some(sc)) = (res.identity, res.identity_scale) {
                worst_identity = worst_identity.max(id.abs() / sc.max(f64::MIN_POSITIVE));
            }
            if q >= 2.0 {
                if let Some((mid, bound)) = uniform_convexity_cells(&geo, a.values(), b.values(), q)
                {
                    worst_modulus = worst_modulus.max(mid - bound);
                }
            }
        }
        let tag = format!("q={q}");
        report.check(
            format!("{tag}.clarkson"),
            worst >= -1e-10,
            worst,
            -1e-10,
            "min (RHS − LHS)/scale",
        );
        if q == 2.0 {
            report.check(
                format!("{tag}.parallelogram"),
                worst_identity <= 1e-9,
                worst_identity,
                1e-9,
                "max relative identity residual",
            );
        }
        if q >= 2.0 {
            report.check(
                format!("{tag}.uniform_convexity"),
                worst_modulus <= 1e-9,
                worst_modulus,
                1e-9,
                "max N((u+v)/2) − (1 − ω(N(u−v))) at unit norms",
            );
        }
    }
    let trials = config.count.unwrap_or(500);
    report.absorb("contraction", &contraction_trials(config.seed, trials)?);
    Ok((report, Vec::new()))
}

fn hopflax_suite(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spaces = spaces_or(config, &["interval:201", "grid2d:15"])?;
    let ps = config.p.map_or_else(|| vec![2.0, 3.0], |p| vec![p]);
    let times = config
        .times
        .clone()
        .unwrap_or_else(|| (1..=10).map(|k| k as f64 / 10.0).collect());
    let h = 1e-4;
    let t_mid = 0.5;
    let mut report = Report::new("hopflax-suite");
    for (name, source) in &spaces {
        let space = source.load()?;
        let default_field = match source {
            SpaceSource::Generated(Generator::Interval(_)) => "linear",
            _ => "random-lipschitz",
        };
        let (f, _) = field_for(
            &space,
            config.field.as_deref().unwrap_or(default_field),
            config.seed,
        )?;
        for &p in &ps {
            let tag = format!("{name}.p={p}");
            report.absorb(
                &format!("{tag}.monotonicity"),
                &check_monotonicity(&space, &f, p, &times)?,
            );
            let deriv = check_time_derivative(&space, &f, p, t_mid, h)?;
            report.absorb(&format!("{tag}.derivative"), &deriv);
            report.count(
                format!("{tag}.derivative.skipped"),
                deriv.counts["skipped_exceptional"],
            );
            report.absorb(
                &format!("{tag}.lipschitz"),
                &lipschitz_bound_check(&space, &f, p, &times)?,
            );
            // the finite-radius Lip_a surrogate is informational only
            let r = 1.2 * space.resolution();
            let sub = check_subsolution(&space, &f, p, t_mid, h, r)?;
            report.metric(format!("{tag}.subsolution.radius"), r);
            report.metric(
                format!("{tag}.subsolution.fraction"),
                sub.metrics["fraction_within_tolerance"],
            );
            report.metric(
                format!("{tag}.subsolution.max_residual"),
                sub.metrics["max_residual"],
            );
        }
    }
    Ok((report, Vec::new()))
}

/// Curve families with every segment no longer than the guaranteed step
/// `δ(1 − 2^{-1/q})/2`.
fn wug_audit(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let q = config.q.unwrap_or(2.0);
    let per_space = config.count.unwrap_or(250);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = Report::new("wug-audit");
    let mut tables = Vec::new();
    let field = config.field.as_deref().unwrap_or("random-lipschitz");

    let mut runs: Vec<(String, MetricMeasureSpace, f64, Vec<DiscreteCurve>)> = Vec::new();
    if let Some(spec) = &config.space {
        let space = spec.parse::<SpaceSource>()?.load()?;
        let delta = config
            .deltas
            .as_ref()
            .and_then(|d| d.first().copied())
            .unwrap_or(0.2);
        let curves = match &config.curves {
            Some(path) => io::curves_from_json(&space, &io::read_text(path)?)?,
            None => {
                curves::random_walks(&space, wug_step_ratio(q) * delta, 60, per_space, &mut rng)?
            }
        };
        runs.push((spec.clone(), space, delta, curves));
    } else {
        let step = wug_step_ratio(q);
        let interval = generate::interval(401)?;
        let delta_i = ((1.0 / 400.0) / step * 1.01).max(0.1);
        let c = curves::monotone_paths(&interval, per_space, 2, &mut rng)?;
        runs.push(("interval:401".into(), interval, delta_i, c));

        let grid = generate::grid2d(41)?;
        let delta_g = ((1.0 / 40.0) / step * 1.01).max(0.2);
        let c = curves::staircase_paths(&grid, 41, per_space, &mut rng)?;
        runs.push(("grid2d:41".into(), grid, delta_g, c));

        let gg = generate::grid_graph(41, config.seed)?;
        let c = curves::geodesic_paths(&gg, per_space, &mut rng)?;
        runs.push((format!("gridgraph:41:{}", config.seed), gg, delta_g, c));

        let cloud = generate::random_cloud(400, config.seed)?;
        let delta_c = 0.3;
        let c = curves::random_walks(&cloud, step * delta_c, 80, per_space, &mut rng)?;
        runs.push((format!("cloud:400:{}", config.seed), cloud, delta_c, c));
    }

    let mut total_curves = 0u64;
    let mut total_sub = 0u64;
    let mut total_viol = 0u64;
    let mut worst = f64::INFINITY;
    for (k, (name, space, delta, curves)) in runs.iter().enumerate() {
        let (u, _) = field_for(space, field, config.seed.wrapping_add(k as u64))?;
        let p = build_partition(space, *delta, None)?;
        let g = neighbor_graph(space, &p)?;
        let r = discrete_wug_check(space, &p, &g, &u, q, curves)?;
        total_curves += curves.len() as u64;
        total_sub += r.counts["subintervals"];
        total_viol += r.counts["violations"];
        worst = worst.min(r.metrics["min_residual"]);
        report.absorb(name, &r);
        if k == 0 {
            tables.push(("curves.json".into(), io::curves_to_json(space, curves)));
        }
    }
    report
        .count("curves", total_curves)
        .count("subintervals", total_sub)
        .count("violations", total_viol)
        .metric("min_residual", if worst.is_finite() { worst } else { 0.0 });
    Ok((report, tables))
}

/// Points whose ball of radius `r` has the largest mass found in the
/// space; on grids and intervals these are the points far from the
/// boundary.
fn full_ball_points(space: &MetricMeasureSpace, r: f64) -> Vec<usize> {
    let masses: Vec<f64> = (0..space.len())
        .map(|x| {
            let row = space.row(x);
            (0..space.len())
                .filter(|&y| row[y] < r)
                .map(|y| space.mass(y))
                .sum()
        })
        .collect();
    let best = masses.iter().copied().fold(0.0, f64::max);
    (0..space.len())
        .filter(|&x| masses[x] >= best * (1.0 - 1e-9))
        .collect()
}

fn diagnostics_suite(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spec = config
        .space
        .clone()
        .unwrap_or_else(|| "interval:1001".into());
    let space = spec.parse::<SpaceSource>()?.load()?;
    let q = config.q.unwrap_or(2.0);
    let lambda = 1.0;
    let (u, _) = field_for(
        &space,
        config.field.as_deref().unwrap_or("linear"),
        config.seed,
    )?;
    let mut report = Report::new("diagnostics-suite");

    let probes = probes_or_default(config, &space)?;
    let doubling = doubling_constants(&space, &probes)?;
    report.absorb("doubling", &doubling.to_report());

    // g ≡ the finite-scale slope of u just above the sample resolution
    let g = slope_estimate(&space, &u, 2.5 * space.resolution())?.to_field(&space)?;
    let poincare = poincare_check(&space, &u, &g, q, lambda, &probes)?;
    report.absorb("poincare", &poincare.to_report());
    report.check(
        "poincare.finite",
        poincare.infinite == 0,
        poincare.tau_global,
        f64::MAX,
        "no probe needs an infinite constant",
    );
    report.check(
        "poincare.stability",
        poincare.spread() <= 2.0,
        poincare.spread(),
        2.0,
        "max/min over radii of the largest τ at that radius",
    );

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = space.len();
    let pair_count = config.pairs.unwrap_or(500);
    let mut pairs = Vec::with_capacity(pair_count);
    while pairs.len() < pair_count && n > 1 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if space.dist(a, b) > 0.0 {
            pairs.push((a, b));
        }
    }
    if poincare.tau_global.is_finite() {
        let tele = telescoping_check(
            &space,
            &u,
            &g,
            q,
            lambda,
            &pairs,
            &doubling,
            poincare.tau_global,
        )?;
        report.absorb("telescoping", &tele);
        report.metric("telescoping.max_ratio", tele.metrics["max_ratio"]);
        report.metric("telescoping.constant", tele.metrics["constant"]);
    }

    // maximal function monotone in eps, pointwise, on seeded random fields
    let index = BallIndex::new(&space);
    let diam = space.diameter();
    let eps_ladder = [diam / 40.0, diam / 20.0, diam / 10.0, diam / 5.0];
    let fields = config.count.unwrap_or(100);
    let mut worst_drop = 0.0f64;
    for k in 0..fields {
        let f = build_field(
            &space,
            &FieldSpec::Random,
            config.seed.wrapping_add(1 + k as u64),
        )?;
        let maxes = eps_ladder
            .iter()
            .map(|&e| index.maximal(&space, &f, q, e))
            .collect::<Result<Vec<_>>>()?;
        for w in maxes.windows(2) {
            for x in 0..n {
                worst_drop = worst_drop.max(w[0].values()[x] - w[1].values()[x]);
            }
        }
    }
    report.count("maximal.fields", fields as u64).check(
        "maximal.monotone_in_eps",
        worst_drop <= 0.0,
        worst_drop,
        0.0,
        "max M^{ε₁} − M^{ε₂} for ε₁ < ε₂",
    );

    // Lebesgue profile of u at interior points
    let radii = [0.1 * diam, 0.05 * diam, 0.01 * diam];
    let interior = full_ball_points(&space, radii[0]);
    let mut not_decreasing = 0u64;
    let mut worst_ratio = 0.0f64;
    let mut flagged = 0u64;
    let mut mean_profile = [0.0; 3];
    for &x in &interior {
        let prof = diagnostics::lebesgue_profile(&space, &u, q, x, &radii)?;
        if prof.iter().any(Option::is_none) {
            flagged += 1;
            continue;
        }
        let v: Vec<f64> = prof.into_iter().map(Option::unwrap).collect();
        for k in 0..3 {
            mean_profile[k] += v[k] / interior.len() as f64;
        }
        if !(v[0] > v[1] && v[1] > v[2]) && v[0] > 0.0 {
            not_decreasing += 1;
        }
        if v[0] > 0.0 {
            worst_ratio = worst_ratio.max(v[2] / v[0]);
        }
    }
    report
        .count("lebesgue.points", interior.len() as u64)
        .count("lebesgue.flagged", flagged)
        .series("lebesgue.radii", radii.to_vec())
        .series("lebesgue.mean_profile", mean_profile.to_vec())
        .check(
            "lebesgue.decreasing",
            not_decreasing == 0,
            not_decreasing as f64,
            0.0,
            "interior points with a non-decreasing profile",
        )
        .check(
            "lebesgue.final_fraction",
            worst_ratio <= 0.1,
            worst_ratio,
            0.1,
            "max last/first profile entry",
        );
    Ok((report, Vec::new()))
}

fn flow_run(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spec = config
        .space
        .clone()
        .unwrap_or_else(|| "interval:200".into());
    let space = spec.parse::<SpaceSource>()?.load()?;
    let q = config.q.unwrap_or(2.0);
    let delta = config
        .deltas
        .as_ref()
        .and_then(|d| d.first().copied())
        .unwrap_or(0.05);
    let flow = FlowConfig {
        tau: config.tau.unwrap_or(0.01),
        q,
        steps: config.steps.unwrap_or(50),
        solver_tol: if q == 2.0 { 1e-10 } else { 1e-8 },
        max_inner_iterations: 200,
    };
    let p = build_partition(&space, delta, None)?;
    let g = neighbor_graph(&space, &p)?;
    let count = config.count.unwrap_or(1);
    let mut report = Report::new("flow-run");
    report
        .metric("delta", delta)
        .count("instances", count as u64)
        .count("cells", p.len() as u64);
    let mut tables = Vec::new();
    let mut failures = 0u64;
    for k in 0..count {
        let (f0, _) = field_for(
            &space,
            config.field.as_deref().unwrap_or("random"),
            config.seed.wrapping_add(k as u64),
        )?;
        let traj = run_flow(&space, &p, &g, &f0, &flow)?;
        let r = flow_invariant_report(&traj)?;
        if !r.passed() {
            failures += 1;
        }
        if k == 0 {
            report.absorb("instance0", &r);
            tables.push(("trajectory.csv".into(), traj.to_csv()));
        } else {
            for c in r.failures() {
                report.note(format!(
                    "instance {k}: {} observed {} limit {}",
                    c.name, c.observed, c.limit
                ));
            }
        }
    }
    report.check(
        "all_instances",
        failures == 0,
        failures as f64,
        0.0,
        "instances with a failed invariant",
    );
    Ok((report, tables))
}

fn snowflake_demo(config: &ExperimentConfig) -> Result<(Report, Tables)> {
    let spec = config.space.clone().unwrap_or_else(|| "koch:5".into());
    let space = spec.parse::<SpaceSource>()?.load()?;
    let ladder = radius_ladder(&space);
    let radii = middle_half(&ladder);
    if radii.len() < 2 {
        return Err(Error::param("space too small for a scaling fit"));
    }
    let rmax = radii[0];
    let n = space.len();
    // centers whose largest ball stays away from the two curve endpoints
    let centers: Vec<usize> = (0..n)
        .filter(|&x| space.dist(x, 0) >= rmax && space.dist(x, n - 1) >= rmax)
        .collect();
    let all: Vec<usize> = (0..n).collect();
    let fit = diagnostics::mass_scaling_slope(&space, &centers, &radii)?;
    let fit_all = diagnostics::mass_scaling_slope(&space, &all, &radii)?;
    let target = 4f64.ln() / 3f64.ln();
    let rel = (fit.slope - target).abs() / target;
    let mut r = Report::new("snowflake-demo");
    r.metric("slope", fit.slope)
        .metric("slope_all_centers", fit_all.slope)
        .metric("target", target)
        .count("centers", centers.len() as u64)
        .series("radii", fit.radii.clone())
        .series("mean_log_mass", fit.log_mass.clone())
        .check(
            "dimension",
            rel <= 0.05,
            rel,
            0.05,
            "relative error of the fitted mass exponent",
        );
    let csv = io::csv_table(
        &["radius", "mean_log_mass"],
        fit.radii
            .iter()
            .zip(&fit.log_mass)
            .map(|(r, m)| vec![Some(*r), Some(*m)]),
    );
    Ok((r, vec![("scaling.csv".into(), csv)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("bogus".parse::<Experiment>().is_err());
    }

    #[test]
    fn space_sources() {
        assert!(matches!(
            "interval:10".parse::<SpaceSource>().unwrap(),
            SpaceSource::Generated(_)
        ));
        assert!(matches!(
            "dir/space.json".parse::<SpaceSource>().unwrap(),
            SpaceSource::File(_)
        ));
        assert!("nonsense".parse::<SpaceSource>().is_err());
    }

    #[test]
    fn bad_exponent_is_a_config_error() {
        let mut c = ExperimentConfig::new(Experiment::EnergyLadder);
        c.q = Some(1.0);
        assert!(run(&c).is_err());
    }

    #[test]
    fn small_runs_are_deterministic() {
        let mut c = ExperimentConfig::new(Experiment::PartitionAudit);
        c.count = Some(4);
        c.seed = 3;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert!(a.report.passed());
        assert_eq!(a.report.to_json(), b.report.to_json());
    }
}
