//! Experiment driver: per-source SPT comparisons, group-size sweeps and
//! MC-count sweeps with seeded, order-independent randomness.
//!
//! Every random draw comes from its own ChaCha8 stream. The stream for a
//! draw is `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(id)`, where
//!
//! ```text
//! id = purpose << 56 | x << 40 | source << 20 | session_index
//! ```
//!
//! `purpose` is 1 for destination sets and 2 for MC placements, `x` is the
//! group size (destinations) or the MC count (MC placements). Work items can
//! therefore run in any order or on any number of threads and still see the
//! same numbers.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algorithms::{AlgorithmId, SPT_METRIC};
use crate::error::{Error, Result};
use crate::forest::{metrics, MetricsReport, MulticastSession};
use crate::network::{NetworkGraph, NodeId};
use crate::spt::{
    dijkstra_pro_spt, dijkstra_spt, mib_census, prune_spt, spt_link_stress, ProOptions, TieBreak,
};

const PURPOSE_DESTS: u64 = 1;
const PURPOSE_MC: u64 = 2;

fn stream(seed: u64, purpose: u64, x: usize, source: NodeId, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose << 56 | (x as u64) << 40 | u64::from(source.0) << 20 | index as u64);
    rng
}

/// Uniform sample of `k` nodes from `V \ {s}`, ascending.
fn sample_others(g: &NetworkGraph, s: NodeId, k: usize, rng: &mut ChaCha8Rng) -> BTreeSet<NodeId> {
    let others: Vec<NodeId> = g.node_ids().filter(|&v| v != s).collect();
    sample(rng, others.len(), k)
        .into_iter()
        .map(|i| others[i])
        .collect()
}

/// Each node in turn is the source of `per_source` sessions whose
/// destination sets are drawn uniformly without replacement from the other
/// nodes. Ordered by (source, session index).
pub fn generate_sessions(
    g: &NetworkGraph,
    group_size: usize,
    per_source: usize,
    seed: u64,
) -> Result<Vec<MulticastSession>> {
    if group_size == 0 || group_size >= g.node_count() {
        return Err(Error::Config(format!(
            "group size {group_size} must lie in 1..={}",
            g.node_count() - 1
        )));
    }
    let mut out = Vec::with_capacity(per_source * g.node_count());
    for s in g.node_ids() {
        for i in 0..per_source {
            let dests = sample_others(
                g,
                s,
                group_size,
                &mut stream(seed, PURPOSE_DESTS, group_size, s, i),
            );
            out.push(MulticastSession { source: s, dests });
        }
    }
    Ok(out)
}

/// MC placement: the source plus `count - 1` other nodes drawn uniformly.
pub fn random_mc_set(
    g: &NetworkGraph,
    s: NodeId,
    count: usize,
    seed: u64,
    index: usize,
) -> BTreeSet<NodeId> {
    let k = count.clamp(1, g.node_count()) - 1;
    let mut mc = sample_others(g, s, k, &mut stream(seed, PURPOSE_MC, count, s, index));
    mc.insert(s);
    mc
}

/// Where the splitters are. The source is always splitter-equipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum McPolicy {
    /// These nodes plus the source.
    Explicit(BTreeSet<NodeId>),
    /// Nodes of at least this degree plus the source.
    DegreeThreshold(usize),
    /// The source plus `count - 1` nodes drawn per session.
    UniformRandom(usize),
}

impl McPolicy {
    /// `source`, `explicit:<ids>` (or a bare id list), `degree:<k>`,
    /// `random:<count>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Config(format!("bad mc policy `{text}`"));
        if text == "source" {
            return Ok(McPolicy::Explicit(BTreeSet::new()));
        }
        let (kind, arg) = text.split_once(':').unwrap_or(("explicit", text));
        match kind.trim() {
            "explicit" => Ok(McPolicy::Explicit(
                parse_list(arg)?
                    .into_iter()
                    .map(|v| NodeId(v as u32))
                    .collect(),
            )),
            "degree" => arg
                .trim()
                .parse()
                .map(McPolicy::DegreeThreshold)
                .map_err(|_| bad()),
            "random" => arg
                .trim()
                .parse()
                .map(McPolicy::UniformRandom)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }

    /// The MC set of one session.
    pub fn mc_set(&self, g: &NetworkGraph, s: NodeId, seed: u64, index: usize) -> BTreeSet<NodeId> {
        let mut mc = match self {
            McPolicy::Explicit(set) => set.clone(),
            McPolicy::DegreeThreshold(k) => g.node_ids().filter(|&v| g.degree(v) >= *k).collect(),
            McPolicy::UniformRandom(count) => return random_mc_set(g, s, *count, seed, index),
        };
        mc.insert(s);
        mc
    }
}

impl fmt::Display for McPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McPolicy::Explicit(set) if set.is_empty() => f.write_str("source"),
            McPolicy::Explicit(set) => {
                let ids: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "explicit:{}", ids.join(","))
            }
            McPolicy::DegreeThreshold(k) => write!(f, "degree:{k}"),
            McPolicy::UniformRandom(c) => write!(f, "random:{c}"),
        }
    }
}

/// Comma-separated integers; `a-b` expands to an inclusive range.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    let bad = |p: &str| Error::Config(format!("bad list item `{p}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| bad(part))?;
            let b: usize = b.trim().parse().map_err(|_| bad(part))?;
            if a > b {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub topology: PathBuf,
    pub mc_policy: McPolicy,
    pub group_sizes: Vec<usize>,
    pub mc_counts: Vec<usize>,
    pub sessions_per_source: usize,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmId>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            topology: PathBuf::new(),
            mc_policy: McPolicy::Explicit(BTreeSet::new()),
            group_sizes: Vec::new(),
            mc_counts: Vec::new(),
            sessions_per_source: 100,
            seed: 0,
            algorithms: AlgorithmId::ALL.to_vec(),
            out: None,
        };
        let mut have_topology = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let value = value.trim();
            let num = |what: &str| {
                value.parse::<u64>().map_err(|_| {
                    Error::Config(format!("line {}: {what} must be an integer", i + 1))
                })
            };
            match key.trim() {
                "topology" => {
                    cfg.topology = PathBuf::from(value);
                    have_topology = true;
                }
                "seed" => cfg.seed = num("seed")?,
                "sessions_per_source" => {
                    cfg.sessions_per_source = num("sessions_per_source")? as usize
                }
                "group_sizes" => cfg.group_sizes = parse_list(value)?,
                "mc_counts" => cfg.mc_counts = parse_list(value)?,
                "mc_policy" => cfg.mc_policy = McPolicy::parse(value)?,
                "algorithms" => {
                    cfg.algorithms = value
                        .split(',')
                        .filter(|a| !a.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "out" => cfg.out = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        i + 1
                    )))
                }
            }
        }
        if !have_topology {
            return Err(Error::Config("missing `topology`".into()));
        }
        if cfg.sessions_per_source == 0 {
            return Err(Error::Config(
                "sessions_per_source must be at least 1".into(),
            ));
        }
        if cfg.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        Ok(cfg)
    }

    fn check_group_sizes(&self, g: &NetworkGraph) -> Result<()> {
        if self.group_sizes.is_empty() {
            return Err(Error::Config("group_sizes is empty".into()));
        }
        if let Some(&bad) = self
            .group_sizes
            .iter()
            .find(|&&k| k == 0 || k >= g.node_count())
        {
            return Err(Error::Config(format!(
                "group size {bad} must lie in 1..={}",
                g.node_count() - 1
            )));
        }
        Ok(())
    }

    fn echo(&self, x_axis: &str) -> Vec<String> {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let algos: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        vec![
            format!("topology = {}", self.topology.display()),
            format!("seed = {}", self.seed),
            format!("sessions_per_source = {}", self.sessions_per_source),
            format!("mc_policy = {}", self.mc_policy),
            format!("group_sizes = {}", list(&self.group_sizes)),
            format!("mc_counts = {}", list(&self.mc_counts)),
            format!("algorithms = {}", algos.join(",")),
            format!("x = {x_axis}"),
        ]
    }
}

/// Exact running sums plus extremes for one algorithm at one sweep point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accumulator {
    pub n: u64,
    pub stress: u64,
    pub cost: u64,
    pub aver_delay: Ratio<u128>,
    pub max_delay: u64,
    pub min: Option<MetricsReport>,
    pub max: Option<MetricsReport>,
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator {
            n: 0,
            stress: 0,
            cost: 0,
            aver_delay: Ratio::from_integer(0),
            max_delay: 0,
            min: None,
            max: None,
        }
    }
}

impl Accumulator {
    pub fn add(&mut self, m: &MetricsReport) {
        self.n += 1;
        self.stress += m.stress as u64;
        self.cost += m.total_cost;
        self.aver_delay += Ratio::new(
            u128::from(*m.aver_delay.numer()),
            u128::from(*m.aver_delay.denom()),
        );
        self.max_delay += m.max_delay;
        let merge = |slot: &mut Option<MetricsReport>,
                     pick: fn(u64, u64) -> u64,
                     pick_r: fn(Ratio<u64>, Ratio<u64>) -> Ratio<u64>| {
            *slot = Some(match slot.take() {
                None => m.clone(),
                Some(cur) => MetricsReport {
                    stress: pick(cur.stress as u64, m.stress as u64) as usize,
                    total_cost: pick(cur.total_cost, m.total_cost),
                    aver_delay: pick_r(cur.aver_delay, m.aver_delay),
                    max_delay: pick(cur.max_delay, m.max_delay),
                },
            });
        };
        merge(&mut self.min, u64::min, Ratio::min);
        merge(&mut self.max, u64::max, Ratio::max);
    }

    pub fn stats(&self, algorithm: AlgorithmId) -> AlgorithmStats {
        let n = self.n.max(1) as f64;
        let avg = self.aver_delay / Ratio::from_integer(u128::from(self.n.max(1)));
        AlgorithmStats {
            algorithm,
            mean_stress: self.stress as f64 / n,
            mean_cost: self.cost as f64 / n,
            mean_aver_delay: *avg.numer() as f64 / *avg.denom() as f64,
            mean_max_delay: self.max_delay as f64 / n,
            n: self.n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmStats {
    pub algorithm: AlgorithmId,
    pub mean_stress: f64,
    pub mean_cost: f64,
    pub mean_aver_delay: f64,
    pub mean_max_delay: f64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub x: usize,
    pub stats: Vec<AlgorithmStats>,
    pub accumulators: Vec<Accumulator>,
}

impl SweepRow {
    pub fn get(&self, a: AlgorithmId) -> Option<&AlgorithmStats> {
        self.stats.iter().find(|s| s.algorithm == a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub comments: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("x,algorithm,mean_stress,mean_cost,mean_aver_delay,mean_max_delay,n\n");
        for row in &self.rows {
            for s in &row.stats {
                let _ = writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{}",
                    row.x,
                    s.algorithm,
                    s.mean_stress,
                    s.mean_cost,
                    s.mean_aver_delay,
                    s.mean_max_delay,
                    s.n
                );
            }
        }
        out
    }
}

/// One evaluated session: the metrics of every requested algorithm.
pub type SessionOutcome = Vec<MetricsReport>;

/// Runs every algorithm on every (graph, session) item, validating each
/// forest. Results come back in input order whatever the thread count.
pub fn evaluate(
    items: &[(NetworkGraph, MulticastSession)],
    algorithms: &[AlgorithmId],
) -> Result<Vec<SessionOutcome>> {
    items
        .par_iter()
        .map(|(g, ms)| {
            algorithms
                .iter()
                .map(|&a| {
                    let f = a.run(g, ms)?;
                    f.validate(g).map_err(|e| {
                        Error::Invariant(format!("{a} on source {}: {e}", ms.source))
                    })?;
                    metrics(&f, g)
                })
                .collect()
        })
        .collect()
}

fn summarize(x: usize, outcomes: &[SessionOutcome], algorithms: &[AlgorithmId]) -> SweepRow {
    let mut accumulators = vec![Accumulator::default(); algorithms.len()];
    for outcome in outcomes {
        for (acc, m) in accumulators.iter_mut().zip(outcome) {
            acc.add(m);
        }
    }
    SweepRow {
        x,
        stats: accumulators
            .iter()
            .zip(algorithms)
            .map(|(acc, &a)| acc.stats(a))
            .collect(),
        accumulators,
    }
}

/// Runs `f` on a pool of `jobs` threads (0 = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Sessions of one sweep point paired with their per-session MC placement.
pub fn session_items(
    g: &NetworkGraph,
    group_size: usize,
    per_source: usize,
    seed: u64,
    policy: &McPolicy,
) -> Result<Vec<(NetworkGraph, MulticastSession)>> {
    let per_source_sessions = generate_sessions(g, group_size, per_source, seed)?;
    Ok(per_source_sessions
        .into_iter()
        .enumerate()
        .map(|(k, ms)| {
            let mc = policy.mc_set(g, ms.source, seed, k % per_source);
            (g.with_mc_set(&mc), ms)
        })
        .collect())
}

/// Performance against group size (destination count, source excluded).
pub fn sweep_group_size(cfg: &ExperimentConfig, g: &NetworkGraph) -> Result<SweepResult> {
    cfg.check_group_sizes(g)?;
    let mut rows = Vec::new();
    for &k in &cfg.group_sizes {
        let items = session_items(g, k, cfg.sessions_per_source, cfg.seed, &cfg.mc_policy)?;
        let outcomes = evaluate(&items, &cfg.algorithms)?;
        rows.push(summarize(k, &outcomes, &cfg.algorithms));
    }
    Ok(SweepResult {
        comments: cfg.echo("group size (number of destinations; source excluded)"),
        rows,
    })
}

/// Performance against the number of MC nodes (source included), MC
/// placements redrawn per session. Needs exactly one group size.
pub fn sweep_mc_count(cfg: &ExperimentConfig, g: &NetworkGraph) -> Result<SweepResult> {
    cfg.check_group_sizes(g)?;
    let [k] = cfg.group_sizes[..] else {
        return Err(Error::Config(
            "sweep-mc needs exactly one entry in group_sizes".into(),
        ));
    };
    if cfg.mc_counts.is_empty() {
        return Err(Error::Config("mc_counts is empty".into()));
    }
    if let Some(&bad) = cfg
        .mc_counts
        .iter()
        .find(|&&c| c == 0 || c > g.node_count())
    {
        return Err(Error::Config(format!(
            "mc count {bad} must lie in 1..={}",
            g.node_count()
        )));
    }
    let mut rows = Vec::new();
    for &count in &cfg.mc_counts {
        let items = session_items(
            g,
            k,
            cfg.sessions_per_source,
            cfg.seed,
            &McPolicy::UniformRandom(count),
        )?;
        let outcomes = evaluate(&items, &cfg.algorithms)?;
        rows.push(summarize(count, &outcomes, &cfg.algorithms));
    }
    Ok(SweepResult {
        comments: cfg.echo("number of MC nodes (source included)"),
        rows,
    })
}

/// MIB count `n` and link stress `s` of one pruned tree.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TreeFigures {
    pub n: usize,
    pub s: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SptComparisonRow {
    pub source: NodeId,
    pub dijkstra: TreeFigures,
    pub pro: TreeFigures,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SptComparison {
    pub rows: Vec<SptComparisonRow>,
}

impl SptComparison {
    /// Mean (N, S) for plain Dijkstra and for DijkstraPro.
    pub fn averages(&self) -> ((f64, f64), (f64, f64)) {
        let n = self.rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&SptComparisonRow) -> usize| {
            self.rows.iter().map(f).sum::<usize>() as f64 / n
        };
        (
            (mean(&|r| r.dijkstra.n), mean(&|r| r.dijkstra.s)),
            (mean(&|r| r.pro.n), mean(&|r| r.pro.s)),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,dijkstra_n,dijkstra_s,dijkstrapro_n,dijkstrapro_s\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.source, r.dijkstra.n, r.dijkstra.s, r.pro.n, r.pro.s
            );
        }
        let ((dn, ds), (pn, ps)) = self.averages();
        let _ = writeln!(out, "average,{dn:.4},{ds:.4},{pn:.4},{ps:.4}");
        out
    }
}

/// Builds the full shortest-path tree from every source with both
/// algorithms, prunes it to `members`, and reports MIB count and stress.
/// The MC set of each run is `policy`'s set for that source.
pub fn spt_comparison(
    g: &NetworkGraph,
    policy: &McPolicy,
    members: &BTreeSet<NodeId>,
) -> SptComparison {
    let rows = g
        .node_ids()
        .map(|s| {
            let gs = g.with_mc_set(&policy.mc_set(g, s, 0, 0));
            let dests: BTreeSet<NodeId> = members.iter().copied().filter(|&v| v != s).collect();
            let figures = |t| {
                let t = prune_spt(&t, &dests);
                TreeFigures {
                    n: mib_census(&t, &gs).count(),
                    s: spt_link_stress(&t, &gs, &dests),
                }
            };
            SptComparisonRow {
                source: s,
                dijkstra: figures(dijkstra_spt(&gs, s, SPT_METRIC, TieBreak::SmallestId)),
                pro: figures(dijkstra_pro_spt(
                    &gs,
                    s,
                    &dests,
                    SPT_METRIC,
                    ProOptions::default(),
                )),
            }
        })
        .collect();
    SptComparison { rows }
}
