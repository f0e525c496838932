//! Resilience sweeps, the random thinning adversary and the Chernoff
//! self-check.
//!
//! A sweep walks the grid `n × p × k × s × adversary × α × seed` in that
//! nesting order. Grid point `t` runs with seed `derive_seed(seed, t)`, so
//! results do not depend on the worker count. Records are written as CSV in
//! a fixed column order with `wall_ms` last (the only column that is not
//! reproducible). Embeddings, failure certificates and adversary
//! certificates go to a JSON sidecar next to the CSV.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    build_adversarial_instance_k, build_f, certify_rooted_absence, neighbourhood_clearing, RootedCertificate,
};
use crate::backbone::k_equitable_targets;
use crate::bandwidth::heuristic_labelling;
use crate::colouring::proper_colouring;
use crate::embed::{
    greedy_embed, pre_embed, sample_set, verify_total_embedding, EmbedResult, Embedding, FailureCert, GreedyConfig,
    PreEmbedConfig,
};
use crate::error::{Error, Result};
use crate::graph::{generate_gnp, GnpParams, Graph, GraphBuilder};
use crate::partition::{assign_h, build_cluster_partition};
use crate::regularity::{PairParams, PartitionConfig};
use crate::rng::{self, derive_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// Uniformly random deletions down to `δ ≥ αpn`.
    Random,
    /// Random thinning, then the neighbourhoods of `clearing_targets`
    /// vertices made independent.
    Clearing,
    /// The explicit construction around `X`; `α` is ignored.
    Counterexample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    HamiltonCycle,
    CycleSquare,
    /// `⌊n/11⌋` disjoint copies of F padded with isolated vertices.
    FCopies,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Greedy embedding straight into G.
    Direct,
    /// Partition G, assign H, pre-embed `V_0`, then embed greedily.
    Full,
}

fn default_budget() -> u64 {
    100_000
}
fn default_eps() -> f64 {
    0.3
}
fn default_d() -> f64 {
    0.3
}
fn default_xi() -> f64 {
    0.05
}
fn default_beta() -> f64 {
    0.01
}
fn default_mu() -> f64 {
    0.5
}
fn default_r0() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub ns: Vec<usize>,
    pub ps: Vec<f64>,
    pub ks: Vec<usize>,
    pub ss: Vec<usize>,
    pub adversaries: Vec<AdversaryKind>,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub pattern: PatternKind,
    pub pipeline: Pipeline,
    #[serde(default = "default_budget")]
    pub backtrack_budget: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_r0")]
    pub r0: usize,
    #[serde(default)]
    pub clearing_targets: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// 0 means one worker per core.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentSpec {
    /// A direct-pipeline spec over one `(n, p, k, s, α)` point.
    pub fn single(n: usize, p: f64, k: usize, alpha: f64, pattern: PatternKind, seeds: Vec<u64>) -> Self {
        ExperimentSpec {
            ns: vec![n],
            ps: vec![p],
            ks: vec![k],
            ss: vec![1],
            adversaries: vec![AdversaryKind::Random],
            alphas: vec![alpha],
            seeds,
            pattern,
            pipeline: Pipeline::Direct,
            backtrack_budget: default_budget(),
            eps: default_eps(),
            d: default_d(),
            xi: default_xi(),
            beta: default_beta(),
            mu: default_mu(),
            r0: default_r0(),
            clearing_targets: 0,
            output: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("every p must lie in [0, 1]");
        }
        if self.ks.iter().any(|&k| k < 1) || self.ss.iter().any(|&s| s < 1) {
            return bad("k and s must be at least 1");
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("every alpha must lie in [0, 1]");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return bad("seeds must be distinct");
        }
        PairParams::new(self.eps, self.d, 0.5)?;
        if !(self.xi > 0.0 && self.beta > 0.0 && self.mu > 0.0 && self.mu <= 1.0) {
            return bad("xi, beta and mu must be positive, mu at most 1");
        }
        Ok(())
    }

    /// All grid points in sweep order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &p in &self.ps {
                for &k in &self.ks {
                    for &s in &self.ss {
                        for &adversary in &self.adversaries {
                            for &alpha in &self.alphas {
                                for &seed in &self.seeds {
                                    let index = out.len();
                                    let run_seed = derive_seed(seed, index as u64);
                                    out.push(GridPoint { index, n, p, k, s, adversary, alpha, seed, run_seed });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub s: usize,
    pub adversary: AdversaryKind,
    pub alpha: f64,
    pub seed: u64,
    pub run_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Embedded,
    Failed,
    CertifiedAbsent,
    Error,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub s: usize,
    pub adversary: AdversaryKind,
    pub alpha: f64,
    pub seed: u64,
    pub run_seed: u64,
    pub min_degree: usize,
    pub v0: usize,
    pub special: usize,
    /// Vertices carrying a restriction record.
    pub restricted: usize,
    /// `Σ |I_y|` over restriction records.
    pub restriction_total: usize,
    pub backtracks: u64,
    pub outcome: Outcome,
    pub detail: String,
    pub wall_ms: u64,
}

pub const CSV_COLUMNS: [&str; 18] = [
    "index",
    "n",
    "p",
    "k",
    "s",
    "adversary",
    "alpha",
    "seed",
    "run_seed",
    "min_degree",
    "v0",
    "special",
    "restricted",
    "restriction_total",
    "backtracks",
    "outcome",
    "detail",
    "wall_ms",
];

/// Sidecar entry; exactly one of the payloads matches the outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunArtifact {
    pub index: usize,
    pub embedding: Option<Embedding>,
    pub failure: Option<FailureCert>,
    pub certificate: Option<RootedCertificate>,
}

impl RunArtifact {
    /// The stored payload agrees with `outcome`.
    pub fn consistent_with(&self, outcome: Outcome) -> bool {
        match outcome {
            Outcome::Embedded => self.embedding.is_some() && self.failure.is_none(),
            Outcome::Failed => self.failure.is_some() || self.certificate.as_ref().is_some_and(|c| !c.all_absent()),
            Outcome::CertifiedAbsent => self.certificate.as_ref().is_some_and(RootedCertificate::all_absent),
            Outcome::Error => self.embedding.is_none(),
        }
    }
}

/// Deletes uniformly random edges while both ends stay above `⌈αpn⌉`.
///
/// Edges are visited once in a seeded random order; an edge goes when both
/// endpoints still have degree above the target.
pub fn thin_to_min_degree(gamma: &Graph, alpha: f64, p: f64, seed: u64) -> Result<Graph> {
    let target = min_degree_target(alpha, p, gamma.n());
    let min_degree = gamma.min_degree();
    if target > min_degree {
        return Err(Error::InfeasibleTarget { target, min_degree });
    }
    let mut edges: Vec<(usize, usize)> = gamma.edges().collect();
    edges.shuffle(&mut rng::stream(seed));
    let mut b = GraphBuilder::from_graph(gamma);
    for (u, v) in edges {
        if b.degree(u) > target && b.degree(v) > target {
            b.remove_edge(u, v);
        }
    }
    Ok(b.build())
}

/// `⌈αpn⌉`, ignoring float noise just above an integer.
pub fn min_degree_target(alpha: f64, p: f64, n: usize) -> usize {
    (alpha * p * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// The target graph of a pattern kind on `n` vertices.
pub fn pattern_graph(kind: PatternKind, n: usize) -> Graph {
    match kind {
        PatternKind::HamiltonCycle => Graph::cycle(n),
        PatternKind::CycleSquare => Graph::cycle_power(n, 2),
        PatternKind::FCopies => {
            let f = build_f().copies(n / 11);
            f.disjoint_union(&Graph::empty(n - f.n()))
        }
    }
}

/// Γ, G and H of a grid point. Counterexample points return `None`.
pub struct Instance {
    pub gamma: Graph,
    pub g: Graph,
    pub h: Graph,
}

pub fn build_instance(spec: &ExperimentSpec, pt: &GridPoint) -> Result<Option<Instance>> {
    if pt.adversary == AdversaryKind::Counterexample {
        return Ok(None);
    }
    let gamma = generate_gnp(GnpParams::new(pt.n, pt.p, pt.run_seed)?);
    let mut g = thin_to_min_degree(&gamma, pt.alpha, pt.p, derive_seed(pt.run_seed, 1))?;
    if pt.adversary == AdversaryKind::Clearing && spec.clearing_targets > 0 {
        let targets = sample_set(pt.n, spec.clearing_targets.min(pt.n) as f64 / pt.n as f64, derive_seed(pt.run_seed, 2));
        g = neighbourhood_clearing(&gamma, &g, &targets)?.0;
    }
    Ok(Some(Instance { gamma, g, h: pattern_graph(spec.pattern, pt.n) }))
}

fn blank_record(pt: &GridPoint) -> RunRecord {
    RunRecord {
        index: pt.index,
        n: pt.n,
        p: pt.p,
        k: pt.k,
        s: pt.s,
        adversary: pt.adversary,
        alpha: pt.alpha,
        seed: pt.seed,
        run_seed: pt.run_seed,
        min_degree: 0,
        v0: 0,
        special: 0,
        restricted: 0,
        restriction_total: 0,
        backtracks: 0,
        outcome: Outcome::Error,
        detail: String::new(),
        wall_ms: 0,
    }
}

fn artifact(index: usize) -> RunArtifact {
    RunArtifact { index, embedding: None, failure: None, certificate: None }
}

/// Runs one grid point; errors end up in the record.
pub fn run_point(spec: &ExperimentSpec, pt: &GridPoint) -> (RunRecord, RunArtifact) {
    let t = Instant::now();
    let mut rec = blank_record(pt);
    let mut art = artifact(pt.index);
    if let Err(e) = run_point_inner(spec, pt, &mut rec, &mut art) {
        rec.outcome = Outcome::Error;
        rec.detail = e.to_string();
        art = artifact(pt.index);
    }
    rec.wall_ms = t.elapsed().as_millis() as u64;
    (rec, art)
}

fn run_point_inner(spec: &ExperimentSpec, pt: &GridPoint, rec: &mut RunRecord, art: &mut RunArtifact) -> Result<()> {
    let Some(inst) = build_instance(spec, pt)? else {
        let adv = build_adversarial_instance_k(pt.n, pt.p, spec.eps, pt.k, pt.run_seed)?;
        let parts = adv.parts();
        let cert = certify_rooted_absence(&adv.g, &adv.pattern(), &adv.x, Some(&parts), None)?;
        rec.min_degree = adv.g.min_degree();
        rec.special = adv.x.len();
        rec.outcome = if cert.all_absent() { Outcome::CertifiedAbsent } else { Outcome::Failed };
        rec.detail = format!("{} rooted searches, {} found, {} undecided", cert.searches, cert.found.len(), cert.undecided.len());
        art.certificate = Some(cert);
        return Ok(());
    };
    rec.min_degree = inst.g.min_degree();
    let lab = heuristic_labelling(&inst.h);
    let greedy = GreedyConfig { backtrack_budget: spec.backtrack_budget, seed: derive_seed(pt.run_seed, 3) };
    let result = match spec.pipeline {
        Pipeline::Direct => greedy_embed(&inst.h, &inst.g, &lab, None, &[], None, &greedy)?,
        Pipeline::Full => {
            let pp = PairParams::new(spec.eps, spec.d, pt.p)?;
            let cfg = PartitionConfig { seed: derive_seed(pt.run_seed, 4), ..PartitionConfig::default() };
            let (part, _) = build_cluster_partition(&inst.g, &inst.gamma, pt.k, spec.r0, pp, 0.0, 0, &cfg)?;
            rec.v0 = part.v0.len();
            let col = proper_colouring(&inst.h, pt.k, &lab)?;
            let m = k_equitable_targets(&part.sizes(), part.v0.len())?;
            let a = assign_h(&inst.h, &lab, &col, &part.reduced, &m, spec.xi, spec.beta)?;
            rec.special = a.special.len();
            let pcfg = PreEmbedConfig::new(pt.s, spec.mu, derive_seed(pt.run_seed, 5));
            let s_set = sample_set(pt.n, spec.mu, pcfg.seed);
            let pre = pre_embed(&inst.g, &inst.h, &part.v0, &s_set, &col, Some(&part), &pcfg)?;
            rec.restricted = pre.records.len();
            rec.restriction_total = pre.records.iter().map(|r| r.i.len()).sum();
            greedy_embed(&inst.h, &inst.g, &lab, Some((&a, &part)), &pre.records, Some(&pre.embedding), &greedy)?
        }
    };
    rec.backtracks = result.backtracks();
    match result {
        EmbedResult::Embedded { embedding, .. } => {
            if !verify_total_embedding(&inst.h, &inst.g, &embedding) {
                return Err(Error::AssertionFailed("embedder returned an invalid embedding".into()));
            }
            rec.outcome = Outcome::Embedded;
            art.embedding = Some(embedding);
        }
        EmbedResult::Failed(cert) => {
            rec.outcome = Outcome::Failed;
            rec.detail = format!("{} at H-vertex {} (depth {})", cert.reason, cert.vertex, cert.depth);
            art.failure = Some(cert);
        }
    }
    Ok(())
}

/// Runs the whole grid on `spec.workers` threads. Records come back in
/// grid order.
pub fn run_resilience_sweep(spec: &ExperimentSpec) -> Result<(Vec<RunRecord>, Vec<RunArtifact>)> {
    spec.validate()?;
    let grid = spec.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let out: Vec<(RunRecord, RunArtifact)> = pool.install(|| grid.par_iter().map(|pt| run_point(spec, pt)).collect());
    Ok(out.into_iter().unzip())
}

/// Writes the CSV header and one row per record.
pub fn write_records<W: std::io::Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// `<csv>.json` next to the CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the CSV and its sidecar.
pub fn write_sweep(path: &Path, records: &[RunRecord], artifacts: &[RunArtifact]) -> Result<()> {
    write_records(records, std::fs::File::create(path)?)?;
    serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(sidecar_path(path))?), artifacts)?;
    Ok(())
}

/// Rebuilds every grid point and rechecks the stored payloads: embeddings
/// against G and H, certificates against their outcome. Returns the
/// indices that did not recheck.
pub fn reverify(spec: &ExperimentSpec, records: &[RunRecord], artifacts: &[RunArtifact]) -> Result<Vec<usize>> {
    let grid = spec.grid();
    let mut bad = Vec::new();
    for (rec, art) in records.iter().zip(artifacts) {
        let pt =
            grid.get(rec.index).ok_or_else(|| Error::InvalidParameter(format!("record {} is outside the grid", rec.index)))?;
        let mut ok = art.index == rec.index && art.consistent_with(rec.outcome);
        if ok && rec.outcome == Outcome::Embedded {
            let inst = build_instance(spec, pt)?
                .ok_or_else(|| Error::InvalidParameter("embedded record on a counterexample point".into()))?;
            ok = art.embedding.as_ref().is_some_and(|e| verify_total_embedding(&inst.h, &inst.g, e));
        }
        if !ok {
            bad.push(rec.index);
        }
    }
    if records.len() != artifacts.len() {
        return Err(Error::InvalidParameter("records and sidecar differ in length".into()));
    }
    Ok(bad)
}

/// Edge-count concentration of `G(n, p)` against `2e^{−ε²E/3}` with ε = 0.1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub p: f64,
    pub runs: usize,
    pub expected: f64,
    pub eps: f64,
    pub bound: f64,
    pub exceedances: usize,
    pub empirical: f64,
    /// Standard deviation of the empirical rate if it equalled the bound.
    pub sigma: f64,
    pub max_relative_deviation: f64,
    pub pass: bool,
}

pub const CONCENTRATION_EPS: f64 = 0.1;

pub fn concentration_check(n: usize, p: f64, runs: usize, seed: u64) -> Result<ConcentrationReport> {
    GnpParams::new(n, p, seed)?;
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    let expected = pairs * p;
    let eps = CONCENTRATION_EPS;
    let bound = if expected > 0.0 { (2.0 * (-eps * eps * expected / 3.0).exp()).min(1.0) } else { 1.0 };
    let counts: Vec<usize> = (0..runs)
        .into_par_iter()
        .map(|i| generate_gnp(GnpParams { n, p, seed: derive_seed(seed, i as u64) }).edge_count())
        .collect();
    let dev = |c: usize| if expected > 0.0 { (c as f64 - expected).abs() / expected } else { c as f64 };
    let exceedances = counts.iter().filter(|&&c| (c as f64 - expected).abs() > eps * expected).count();
    let empirical = if runs == 0 { 0.0 } else { exceedances as f64 / runs as f64 };
    let sigma = if runs == 0 { 0.0 } else { (bound * (1.0 - bound) / runs as f64).sqrt() };
    Ok(ConcentrationReport {
        n,
        p,
        runs,
        expected,
        eps,
        bound,
        exceedances,
        empirical,
        sigma,
        max_relative_deviation: counts.iter().map(|&c| dev(c)).fold(0.0, f64::max),
        pass: empirical <= bound + 3.0 * sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_bounds() {
        let g = thin_to_min_degree(&Graph::complete(10), 0.5, 1.0, 3).unwrap();
        assert!(g.degrees().iter().all(|&d| (5..=9).contains(&d)));
        let gamma = generate_gnp(GnpParams { n: 500, p: 0.3, seed: 2 });
        let g = thin_to_min_degree(&gamma, 0.8, 0.3, 2).unwrap();
        assert!(g.min_degree() >= 120 && g.is_subgraph_of(&gamma));
        let tight = min_degree_target(1.0, 1.0, 9) as f64 / 10.0;
        assert_eq!(thin_to_min_degree(&Graph::complete(10), tight, 1.0, 1).unwrap(), Graph::complete(10));
        assert!(matches!(
            thin_to_min_degree(&Graph::cycle(10), 0.5, 1.0, 0),
            Err(Error::InfeasibleTarget { target: 5, min_degree: 2 })
        ));
    }

    #[test]
    fn grid_order_and_seeds() {
        let mut spec = ExperimentSpec::single(20, 1.0, 2, 0.6, PatternKind::HamiltonCycle, vec![1, 2, 3]);
        spec.ns = vec![20, 30];
        let grid = spec.grid();
        assert_eq!(grid.len(), 6);
        assert_eq!((grid[3].n, grid[3].seed), (30, 1));
        assert!(grid.iter().enumerate().all(|(i, g)| g.index == i && g.run_seed == derive_seed(g.seed, i as u64)));
        spec.seeds = vec![1, 1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let spec = ExperimentSpec::single(20, 1.0, 2, 0.6, PatternKind::HamiltonCycle, vec![]);
        let (recs, arts) = run_resilience_sweep(&spec).unwrap();
        assert!(recs.is_empty() && arts.is_empty());
        let mut buf = Vec::new();
        write_records(&recs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn errors_stay_in_their_record() {
        // α = 1 at p = 0.5 cannot be met by G(30, 0.5)
        let spec = ExperimentSpec::single(30, 0.5, 2, 1.0, PatternKind::HamiltonCycle, vec![4]);
        let (recs, _) = run_resilience_sweep(&spec).unwrap();
        assert_eq!(recs[0].outcome, Outcome::Error);
        assert!(recs[0].detail.contains("target minimum degree"));
    }

    #[test]
    fn concentration_trivial_and_dense() {
        let r = concentration_check(30, 0.0, 10, 1).unwrap();
        assert_eq!((r.exceedances, r.pass), (0, true));
        let r = concentration_check(50, 0.5, 100, 1).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn pattern_sizes() {
        for kind in [PatternKind::HamiltonCycle, PatternKind::CycleSquare, PatternKind::FCopies] {
            assert_eq!(pattern_graph(kind, 60).n(), 60);
        }
        assert_eq!(pattern_graph(PatternKind::FCopies, 60).edge_count(), 5 * 36);
    }
}
