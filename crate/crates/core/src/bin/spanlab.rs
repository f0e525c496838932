use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spanlab::adversary::{adversary_report, build_adversarial_instance_k, build_f_k};
use spanlab::backbone::{backbone_graph, k_equitable_targets, kkr_graph, IntegerPartition};
use spanlab::bandwidth::{exact_bandwidth, heuristic_labelling, planted_banded_graph};
use spanlab::colouring::proper_colouring;
use spanlab::embed::{greedy_embed, EmbedResult, GreedyConfig};
use spanlab::experiment::{
    concentration_check, read_records, reverify, run_resilience_sweep, sidecar_path, write_records, write_sweep, ExperimentSpec,
    RunArtifact,
};
use spanlab::graph::generate_gnp;
use spanlab::io::{self as sio, CellHeader};
use spanlab::partition::{assign_h, build_cluster_partition, verify_assignment};
use spanlab::regularity::{test_fully_regular, test_lower_regular, test_super_regular, PairParams, PartitionConfig, Witness};
use spanlab::{Colouring, Error, GnpParams, Graph, Labelling, Result};

#[derive(Parser)]
#[command(name = "spanlab", version, about = "Desk-scale tools for sparse spanning-subgraph embedding")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph as an edge list.
    #[command(subcommand)]
    Gen(Gen),
    /// Label a graph and report its bandwidth (CSV vertex,position).
    Bandwidth {
        graph: PathBuf,
        /// Exact branch and bound (at most 12 vertices).
        #[arg(long)]
        exact: bool,
    },
    /// Properly colour a graph with colours 0..=k (CSV vertex,colour).
    Colour {
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// vertex,position CSV; the heuristic labelling when absent.
        #[arg(long)]
        labelling: Option<PathBuf>,
    },
    /// Assign the vertices of H to backbone cells (CSV vertex,i,j).
    Assign(AssignArgs),
    /// Greedily embed H into G (CSV h_vertex,g_vertex).
    Embed {
        h: PathBuf,
        g: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long)]
        labelling: Option<PathBuf>,
    },
    /// Build the counterexample around X and certify it (JSON report).
    Adversary {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Test a pair of vertex sets for regularity (JSON verdict).
    Regcheck {
        graph: PathBuf,
        x: PathBuf,
        y: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value_t = Mode::Lower)]
        mode: Mode,
        /// Γ for super-regularity; the graph itself when absent.
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
    /// Resilience sweeps and self-checks.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand)]
enum Gen {
    /// G(n, p).
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Random graph of bounded bandwidth with a planted colouring.
    Banded {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        bandwidth: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.25)]
        q: f64,
        /// Vertices recoloured 0, placed at the start.
        #[arg(long, default_value_t = 0)]
        zeros: usize,
        /// Where to write the planted colouring.
        #[arg(long)]
        colouring_out: Option<PathBuf>,
    },
    /// Disjoint copies of F (or F_k).
    F {
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Power of a cycle.
    Cycle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        power: usize,
    },
    /// Backbone graph on r·k cells, or its clique factor with --cliques.
    Backbone {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        cliques: bool,
    },
}

#[derive(Args)]
struct AssignArgs {
    h: PathBuf,
    /// vertex,colour CSV with colours 0..=k.
    #[arg(long)]
    colouring: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    labelling: Option<PathBuf>,
    /// Partition this host graph and use its reduced graph and sizes.
    #[arg(long, conflicts_with = "r")]
    g: Option<PathBuf>,
    /// Γ for the partition; the host itself when absent.
    #[arg(long, requires = "g")]
    gamma: Option<PathBuf>,
    /// Use the backbone graph on r columns with equal targets.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long, default_value_t = 0.3)]
    d: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    r0: usize,
    /// Where to write the host partition (vertex,i,j; 0,0 is V_0).
    #[arg(long, requires = "g")]
    partition_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Run a sweep from a JSON spec; writes CSV plus a JSON sidecar.
    Sweep { spec: PathBuf },
    /// Edge-count concentration of G(n, p) against the Chernoff bound.
    Concentration {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        runs: usize,
    },
    /// Recheck a finished sweep against its spec.
    Reverify { spec: PathBuf, csv: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lower,
    Fully,
    Super,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn read_labelling(g: &Graph, path: &Option<PathBuf>) -> Result<Labelling> {
    match path {
        Some(p) => Labelling::from_positions(g, &sio::read_vertex_values(File::open(p)?)?),
        None => Ok(heuristic_labelling(g)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(io::BufReader::new(File::open(path)?))?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Gen(gen) => {
            let g = match gen {
                Gen::Gnp { n, p } => generate_gnp(GnpParams::new(n, p, seed)?),
                Gen::Banded { n, bandwidth, k, q, zeros, colouring_out } => {
                    let (g, col) = planted_banded_graph(n, bandwidth, k, q, zeros, 0..n, seed)?;
                    if let Some(p) = colouring_out {
                        sio::write_vertex_values(("vertex", "colour"), col.colours(), File::create(p)?)?;
                    }
                    g
                }
                Gen::F { copies, k } => build_f_k(k)?.copies(copies),
                Gen::Cycle { n, power } => Graph::cycle_power(n, power),
                Gen::Backbone { r, k, cliques } => {
                    if cliques {
                        kkr_graph(r, k)?
                    } else {
                        backbone_graph(r, k)?
                    }
                }
            };
            sio::write_edge_list(&g, sink(&cli.out)?)?;
        }
        Cmd::Bandwidth { graph, exact } => {
            let g = sio::read_graph(&graph)?;
            let lab = if exact { exact_bandwidth(&g)?.1 } else { heuristic_labelling(&g) };
            eprintln!("bandwidth {}", lab.bandwidth());
            sio::write_vertex_values(("vertex", "position"), lab.positions(), sink(&cli.out)?)?;
        }
        Cmd::Colour { graph, k, labelling } => {
            let g = sio::read_graph(&graph)?;
            let lab = read_labelling(&g, &labelling)?;
            let col = proper_colouring(&g, k, &lab)?;
            let zeros = col.colours().iter().filter(|&&c| c == 0).count();
            eprintln!("colours 0..={k}, {zeros} vertices coloured 0");
            sio::write_vertex_values(("vertex", "colour"), col.colours(), sink(&cli.out)?)?;
        }
        Cmd::Assign(a) => return assign(a, seed, &cli.out),
        Cmd::Embed { h, g, budget, labelling } => {
            let (h, g) = (sio::read_graph(&h)?, sio::read_graph(&g)?);
            let lab = read_labelling(&h, &labelling)?;
            let cfg = GreedyConfig { backtrack_budget: budget, seed };
            match greedy_embed(&h, &g, &lab, None, &[], None, &cfg)? {
                EmbedResult::Embedded { embedding, backtracks } => {
                    eprintln!("embedded {} vertices with {backtracks} backtracks", embedding.len());
                    sio::write_embedding(&embedding, sink(&cli.out)?)?;
                }
                EmbedResult::Failed(cert) => {
                    write_json(&cli.out, &cert)?;
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Cmd::Adversary { n, p, eps, k } => {
            let inst = build_adversarial_instance_k(n, p, eps, k, seed)?;
            let rep = adversary_report(&inst)?;
            let absent = rep.certified_absent;
            write_json(&cli.out, &rep)?;
            if !absent {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Regcheck { graph, x, y, eps, d, p, mode, gamma, trials } => {
            let g = sio::read_graph(&graph)?;
            let (x, y) = (sio::read_vertex_set(&x)?, sio::read_vertex_set(&y)?);
            let pp = PairParams::new(eps, d, p)?;
            let verdict = match mode {
                Mode::Lower => test_lower_regular(&g, &pp, &x, &y)?,
                Mode::Fully => test_fully_regular(&g, &pp, &x, &y, trials, seed)?,
                Mode::Super => {
                    let gamma = match gamma {
                        Some(path) => sio::read_graph(&path)?,
                        None => g.clone(),
                    };
                    test_super_regular(&g, &gamma, &pp, &x, &y)?
                }
            };
            let (sizes, density) = match &verdict.witness {
                Some(Witness::Sparse(w)) => (Some((w.x.len(), w.y.len())), Some(w.density)),
                Some(Witness::Spread { low, .. }) => (Some((low.x.len(), low.y.len())), Some(low.density)),
                Some(Witness::Vertex { .. }) => (Some((1, 0)), None),
                None => (None, None),
            };
            write_json(
                &cli.out,
                &serde_json::json!({
                    "kind": verdict.kind,
                    "witness_sizes": sizes,
                    "density_at_witness": density,
                    "trials": verdict.trials,
                    "witness": verdict.witness,
                }),
            )?;
        }
        Cmd::Experiment(Experiment::Sweep { spec }) => {
            let mut spec: ExperimentSpec = read_json(&spec)?;
            if cli.workers != 0 {
                spec.workers = cli.workers;
            }
            let (records, artifacts) = run_resilience_sweep(&spec)?;
            match cli.out.clone().or_else(|| spec.output.clone()) {
                Some(path) => {
                    write_sweep(&path, &records, &artifacts)?;
                    eprintln!("{} runs written to {}", records.len(), path.display());
                }
                None => write_records(&records, io::stdout().lock())?,
            }
        }
        Cmd::Experiment(Experiment::Concentration { n, p, runs }) => {
            let rep = concentration_check(n, p, runs, seed)?;
            eprintln!("{}", if rep.pass { "PASS" } else { "FAIL" });
            write_json(&cli.out, &rep)?;
        }
        Cmd::Experiment(Experiment::Reverify { spec, csv }) => {
            let spec: ExperimentSpec = read_json(&spec)?;
            let records = read_records(File::open(&csv)?)?;
            let artifacts: Vec<RunArtifact> = read_json(&sidecar_path(&csv))?;
            let bad = reverify(&spec, &records, &artifacts)?;
            write_json(&cli.out, &serde_json::json!({ "records": records.len(), "failed": bad }))?;
            if !bad.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn assign(a: AssignArgs, seed: u64, out: &Option<PathBuf>) -> Result<ExitCode> {
    let h = sio::read_graph(&a.h)?;
    let col = Colouring::new(sio::read_vertex_values(File::open(&a.colouring)?)?, a.k);
    col.check(&h)?;
    let lab = read_labelling(&h, &a.labelling)?;
    let (reduced, m, pp) = match (&a.g, a.r) {
        (Some(gpath), _) => {
            let g = sio::read_graph(gpath)?;
            let gamma = match &a.gamma {
                Some(p) => sio::read_graph(p)?,
                None => g.clone(),
            };
            let pp = PairParams::new(a.eps, a.d, a.p)?;
            let cfg = PartitionConfig { seed, ..PartitionConfig::default() };
            let (part, rep) = build_cluster_partition(&g, &gamma, a.k, a.r0, pp, 0.0, 0, &cfg)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(path) = &a.partition_out {
                let header =
                    CellHeader { r: part.r, k: part.k, eps: Some(pp.eps), d: Some(pp.d), p: Some(pp.p), special: vec![] };
                sio::write_cells(&header, &part.owners(g.n()), File::create(path)?)?;
            }
            let m = k_equitable_targets(&part.sizes(), part.v0.len())?;
            (part.reduced, m, Some(pp))
        }
        (None, Some(r)) => (backbone_graph(r, a.k)?, IntegerPartition::equal(r, a.k, h.n()), None),
        (None, None) => return Err(Error::InvalidParameter("give either --g or --r".into())),
    };
    if m.total() != h.n() {
        return Err(Error::InvalidParameter(format!("targets sum to {} but H has {} vertices", m.total(), h.n())));
    }
    let asg = assign_h(&h, &lab, &col, &reduced, &m, a.xi, a.beta)?;
    let report = verify_assignment(&h, &asg, &reduced, &m, a.xi, &lab, &col, a.beta);
    eprintln!("{}", serde_json::to_string(&report)?);
    let header = CellHeader {
        r: asg.r,
        k: asg.k,
        eps: pp.map(|p| p.eps),
        d: pp.map(|p| p.d),
        p: pp.map(|p| p.p),
        special: asg.special.clone(),
    };
    let cells: Vec<_> = asg.f.iter().map(|&c| Some(c)).collect();
    sio::write_cells(&header, &cells, sink(out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers != 0 {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
