use rand::Rng;

use spanlab::backbone::{backbone_graph, cell, clique_walk, is_walk_step, uncell, IntegerPartition, LabelledClique};
use spanlab::bandwidth::Labelling;
use spanlab::experiment::{
    read_records, reverify, run_resilience_sweep, write_records, write_sweep, AdversaryKind, ExperimentSpec, Outcome,
    PatternKind, Pipeline, RunArtifact,
};
use spanlab::partition::{verify_assignment, Assignment};
use spanlab::rng::stream;
use spanlab::{Colouring, Graph, GraphBuilder};

/// `segments` blocks of `k` vertices; each block is a clique coloured
/// `1..=k` and joined to the next block across different colours.
fn layered(segments: usize, k: usize) -> (Graph, Colouring) {
    let mut b = GraphBuilder::new(segments * k);
    for t in 0..segments {
        for a in 0..k {
            for c in a + 1..k {
                b.add_edge(t * k + a, t * k + c).unwrap();
            }
            if t + 1 < segments {
                for c in (0..k).filter(|&c| c != a) {
                    b.add_edge(t * k + a, (t + 1) * k + c).unwrap();
                }
            }
        }
    }
    let g = b.build();
    let col = Colouring::new((0..segments * k).map(|x| 1 + x % k).collect(), k);
    (g, col)
}

fn assignment_along(walk: &[LabelledClique], k: usize, r: usize) -> Assignment {
    let n = walk.len() * k;
    let f = (0..n).map(|x| uncell(walk[x / k].members[x % k], k)).collect();
    Assignment { r, k, f, special: (0..n).collect() }
}

#[test]
fn walk_assignment_maps_edges_into_reduced_graph() {
    let (r, k) = (3, 3);
    let mut checked = 0;
    for seed in 0..20 {
        let mut rng = stream(seed);
        let mut b = GraphBuilder::from_graph(&backbone_graph(r, k).unwrap());
        for u in 0..r * k {
            for v in u + 1..r * k {
                if rng.gen_bool(0.85) {
                    b.add_edge(u, v).unwrap();
                }
            }
        }
        let red = b.build();
        let start = LabelledClique::new((0..k).map(|j| cell(2, j, k)).collect());
        let end = LabelledClique::new((0..k).map(|j| cell(0, j, k)).collect());
        let Ok(walk) = clique_walk(&red, &start, &end, k) else { continue };
        let (h, col) = layered(walk.len(), k);
        let lab = Labelling::identity(&h);
        let m = IntegerPartition::uniform(r, k, 1);
        let a = assignment_along(&walk, k, r);
        let rep = verify_assignment(&h, &a, &red, &m, 1.0, &lab, &col, 1e-9);
        assert!(rep.h3_edges, "seed {seed}: {:?}", rep.violations);

        // jumping straight from start to end keeps H3 only if that is a walk step
        let jump = assignment_along(&[start.clone(), end.clone()], k, r);
        let (h2, col2) = layered(2, k);
        let rep = verify_assignment(&h2, &jump, &red, &m, 1.0, &Labelling::identity(&h2), &col2, 1e-9);
        assert_eq!(rep.h3_edges, is_walk_step(&red, &start, &end));
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} reduced graphs admitted a walk");
}

fn csv_without_wall_time(records: &[spanlab::experiment::RunRecord]) -> String {
    let mut buf = Vec::new();
    write_records(records, &mut buf).unwrap();
    String::from_utf8(buf).unwrap().lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect::<Vec<_>>().join("\n")
}

#[test]
fn sweeps_replay_across_worker_counts() {
    let mut spec = ExperimentSpec::single(40, 1.0, 2, 0.6, PatternKind::HamiltonCycle, vec![3, 1, 4]);
    spec.alphas = vec![0.55, 0.7];
    spec.ps = vec![0.9, 1.0];
    spec.workers = 1;
    let (a, arts) = run_resilience_sweep(&spec).unwrap();
    spec.workers = 4;
    let (b, _) = run_resilience_sweep(&spec).unwrap();
    assert_eq!(a.len(), 12);
    assert_eq!(csv_without_wall_time(&a), csv_without_wall_time(&b));
    assert!(a.iter().zip(&arts).all(|(r, x)| x.consistent_with(r.outcome)));
    assert!(reverify(&spec, &a, &arts).unwrap().is_empty());
}

#[test]
fn sweep_files_round_trip_and_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let spec = ExperimentSpec::single(30, 1.0, 2, 0.6, PatternKind::CycleSquare, vec![7, 8]);
    let (recs, arts) = run_resilience_sweep(&spec).unwrap();
    write_sweep(&path, &recs, &arts).unwrap();
    let back = read_records(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, recs);
    let sidecar: Vec<RunArtifact> =
        serde_json::from_reader(std::fs::File::open(spanlab::experiment::sidecar_path(&path)).unwrap()).unwrap();
    assert!(reverify(&spec, &back, &sidecar).unwrap().is_empty());

    // a partial embedding no longer rechecks
    let mut forged = sidecar.clone();
    let idx = back.iter().position(|r| r.outcome == Outcome::Embedded).expect("an embedded run");
    forged[idx].embedding.as_mut().unwrap().unassign(0);
    assert_eq!(reverify(&spec, &back, &forged).unwrap(), vec![back[idx].index]);
}

#[test]
fn dirac_sweep_meets_its_rate() {
    let spec = ExperimentSpec::single(60, 1.0, 2, 0.55, PatternKind::HamiltonCycle, (0..20).collect());
    let (recs, _) = run_resilience_sweep(&spec).unwrap();
    let embedded = recs.iter().filter(|r| r.outcome == Outcome::Embedded).count();
    assert!(embedded >= 19, "{embedded}/20");
}

#[test]
fn counterexample_points_certify_absence() {
    let mut spec = ExperimentSpec::single(1100, 0.3, 4, 0.0, PatternKind::FCopies, vec![1, 2, 3]);
    spec.adversaries = vec![AdversaryKind::Counterexample];
    let (recs, arts) = run_resilience_sweep(&spec).unwrap();
    assert!(recs.iter().all(|r| r.outcome == Outcome::CertifiedAbsent), "{recs:?}");
    assert!(arts.iter().all(|a| a.certificate.as_ref().is_some_and(|c| c.all_absent())));
}

#[test]
fn full_pipeline_runs_end_to_end() {
    let mut spec = ExperimentSpec::single(400, 0.5, 2, 0.85, PatternKind::HamiltonCycle, vec![0, 1]);
    spec.pipeline = Pipeline::Full;
    let (recs, arts) = run_resilience_sweep(&spec).unwrap();
    for r in &recs {
        assert!(r.outcome != Outcome::Error || !r.detail.is_empty());
    }
    assert!(recs.iter().any(|r| r.outcome == Outcome::Embedded && r.v0 > 0 && r.restricted > 0), "{recs:?}");
    assert!(reverify(&spec, &recs, &arts).unwrap().is_empty());
}

#[test]
fn clearing_adversary_empties_target_neighbourhoods() {
    let mut spec = ExperimentSpec::single(80, 0.8, 2, 0.6, PatternKind::HamiltonCycle, vec![5]);
    spec.adversaries = vec![AdversaryKind::Clearing];
    spec.clearing_targets = 3;
    let pt = spec.grid()[0];
    let inst = spanlab::experiment::build_instance(&spec, &pt).unwrap().unwrap();
    let cleared = (0..80).filter(|&v| inst.g.degree(v) > 0 && inst.g.edges_within(inst.g.neighbours(v)) == 0).count();
    assert!(cleared >= 3);
    let (recs, _) = run_resilience_sweep(&spec).unwrap();
    assert_eq!(recs.len(), 1);
}
