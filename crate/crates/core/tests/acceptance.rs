//! Acceptance suite. Every criterion writes one PASS/FAIL line to stderr
//! (bypassing libtest capture) before asserting.
//!
//! The desk-scale runs (criteria 5 to 7) share trained models, so the slow
//! part happens once per process.

mod common;

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use aignet::aig::aiger::{read_aig, write_aiger, AigerFormat};
use aignet::aig::{generate_corpus, generate_random_aig, Aig, RandomAigParams};
use aignet::error::ModelError;
use aignet::model::{GraphIndex, Model, ModelConfig};
use aignet::numerics::gradcheck::check_gradients;
use aignet::numerics::{LossKind, Tensor};
use aignet::sim::{
    derive_seed, sample_node_pairs, signal_probability_exact, signal_probability_mc, simulate_block, simulate_naive,
    truth_tables, CircuitLabels, PatternBlock, TableKind, TruthTable, DEFAULT_FALLBACK_PATTERNS, DEFAULT_MC_PATTERNS,
};
use aignet::train::{
    attach_labels, evaluate_spp, evaluate_ttdp, normalize_distances, spp_metrics, split_indices, train, ttdp_metrics,
    ttdp_residuals, MetricsReport, Sample, Task, TaskMetrics, TrainConfig,
};
use common::random_topo_perm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {id:>2} [{tag}] {title}: {detail}");
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn note(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn random_circuit(rng: &mut ChaCha8Rng, max_pis: usize, max_ands: usize) -> Aig {
    let pis = rng.gen_range(1..=max_pis);
    let ands = rng.gen_range(0..=max_ands);
    generate_random_aig(&RandomAigParams::new(pis, ands, rng.gen(), rng.gen_range(0.0..1.0))).unwrap()
}

#[test]
fn criterion_01_gradient_fidelity() {
    let start = Instant::now();
    let mut aig = generate_random_aig(&RandomAigParams::new(5, 14, 21, 0.5)).unwrap();
    let mut seed = 21;
    while aig.len() != 30 {
        seed += 1;
        aig = generate_random_aig(&RandomAigParams::new(5, 14, seed, 0.5)).unwrap();
    }
    let model = Model::new(ModelConfig { layers: 3, hidden: 8, seed: 1, ..ModelConfig::default() }).unwrap();
    let g = GraphIndex::new(&aig, false);
    let n = aig.len();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let target: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let pairs = sample_node_pairs(n, 40, 9).pairs;
    let (left, right): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    let dist_t: Vec<f64> = (0..pairs.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let dist_t = normalize_distances(&dist_t);

    // the joint training objective: L1 on probabilities plus L1 between
    // normalized distance families
    let report = check_gradients(&model.params, 1e-5, |tape, vars| {
        let num = |e: ModelError| match e {
            ModelError::Numerics(n) => n,
            other => panic!("{other}"),
        };
        let e = model.forward(tape, vars, &g).map_err(num)?;
        let y = model.readout_spp(tape, vars, e.z).map_err(num)?;
        let t = tape.constant(Tensor::column(&target));
        let spp = tape.loss(LossKind::L1, y, t)?;
        let zl = tape.gather_rows(e.z, left.clone().into())?;
        let zr = tape.gather_rows(e.z, right.clone().into())?;
        let dz = tape.cosine_distance_rows(zl, zr)?;
        let dz = tape.minmax_normalize(dz, vec![0; left.len()].into(), 1)?;
        let dt = tape.constant(Tensor::column(&dist_t));
        let ttdp = tape.loss(LossKind::L1, dz, dt)?;
        tape.add(spp, ttdp)
    })
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "gradient fidelity",
        report.max_rel_error <= 1e-4 && secs < 60.0,
        &format!(
            "{n}-node circuit, L=3, d=8, {} parameters: max relative error {:.2e} (limit 1e-4), {secs:.1} s (limit 60 s)",
            report.checked, report.max_rel_error
        ),
    );
}

#[test]
fn criterion_02_simulation_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0usize;
    for k in 0..100 {
        let g = random_circuit(&mut rng, 16, 200);
        let stim = PatternBlock::random(g.pis.len(), 256, k);
        let out = simulate_block(&g, &stim).unwrap();
        for p in 0..256 {
            let assignment: Vec<bool> = (0..g.pis.len()).map(|i| stim.get(i, p)).collect();
            let naive = simulate_naive(&g, &assignment).unwrap();
            mismatches += naive.iter().enumerate().filter(|&(v, &b)| out.get(v, p) != b).count();
        }
    }

    let (mut within, mut total) = (0usize, 0usize);
    let n = DEFAULT_MC_PATTERNS as f64;
    for k in 0..50 {
        let g = random_circuit(&mut rng, 12, 150);
        let exact = signal_probability_exact(&g, 12).unwrap();
        let mc = signal_probability_mc(&g, DEFAULT_MC_PATTERNS, derive_seed(3, k));
        for (m, e) in mc.iter().zip(&exact) {
            total += 1;
            if (m - e).abs() <= 3.0 * (e * (1.0 - e) / n).sqrt() {
                within += 1;
            }
        }
    }
    let frac = within as f64 / total as f64;
    verdict(
        2,
        "simulation oracle equivalence",
        mismatches == 0 && frac >= 0.99,
        &format!(
            "100 circuits x 256 patterns: {mismatches} bit mismatches; Monte-Carlo 2^15 within 3 sigma of exact on {within}/{total} nodes ({:.2}%, need 99%)",
            100.0 * frac
        ),
    );
}

#[test]
fn criterion_03_metric_fixtures() {
    let mut worst = 0.0f64;
    let mut check = |got: f64, want: f64| worst = worst.max((got - want).abs());

    // SPP on a four-node circuit: labels are the model's own predictions
    // shifted by known offsets
    let mut g = Aig::new("fixture");
    let a = g.add_pi();
    let b = g.add_pi();
    let x = g.add_and(a, b);
    let y = g.add_not(x);
    g.pos.push(y);
    let model = Model::new(ModelConfig { layers: 2, hidden: 8, seed: 3, ..ModelConfig::default() }).unwrap();
    let (_, pred) = model.predict_aig(&g).unwrap();
    let mut labels = CircuitLabels::compute(&g, 64, 12, 64, 0);
    labels.signal_prob = pred.clone();
    let exact = Sample::new(g.clone(), labels.clone()).unwrap();
    let m = evaluate_spp(&model, &[&exact]).unwrap();
    check(m.mae, 0.0);
    check(m.mse, 0.0);
    let offsets = [0.1, -0.2, 0.3, -0.4];
    labels.signal_prob = pred.iter().zip(offsets).map(|(p, d)| p + d).collect();
    let shifted = Sample::new(g.clone(), labels).unwrap();
    let m = evaluate_spp(&model, &[&shifted]).unwrap();
    check(m.mae, 0.25);
    check(m.mse, 0.075);
    let m = spp_metrics(&[0.0, 1.0], &[1.0, 0.0]);
    check(m.mae, 1.0);
    check(m.mse, 1.0);

    // TTDP: distance families already normalized
    let m = ttdp_metrics(&[0.0, 0.25, 1.0], &[0.0, 0.25, 1.0]);
    check(m.mae, 0.0);
    check(m.mse, 0.0);
    let m = ttdp_metrics(&[0.0, 1.0], &[1.0, 0.0]);
    check(m.mae, 1.0);
    check(m.mse, 1.0);

    // four nodes, all six pairs, worked by hand:
    // D^T = [2,1,4,1,2,3]/4, normalized [1/3, 0, 1, 0, 1/3, 2/3]
    // D^Z = [1, 1-1/s, 2, 1-1/s, 1, 1+1/s] with s = sqrt 2, normalized by (d - (1-1/s)) / (1+1/s)
    let tables: Vec<TruthTable> =
        ["0011", "0101", "0001", "1100"].iter().map(|s| TruthTable::from_bit_str(s, TableKind::Exact).unwrap()).collect();
    let z = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0]]).unwrap();
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let r = ttdp_residuals(&tables, &z, &pairs).unwrap();
    let s = 2f64.sqrt();
    let dt = [1.0 / 3.0, 0.0, 1.0, 0.0, 1.0 / 3.0, 2.0 / 3.0];
    let dz: Vec<f64> = [1.0, 1.0 - 1.0 / s, 2.0, 1.0 - 1.0 / s, 1.0, 1.0 + 1.0 / s]
        .iter()
        .map(|d| (d - (1.0 - 1.0 / s)) / (1.0 + 1.0 / s))
        .collect();
    let want: Vec<f64> = dt.iter().zip(&dz).map(|(t, z)| t - z).collect();
    for (got, want) in r.iter().zip(&want) {
        check(*got, *want);
    }
    let m = ttdp_metrics(&dt, &dz);
    check(m.mae, want.iter().map(|v| v.abs()).sum::<f64>() / 6.0);
    check(m.mse, want.iter().map(|v| v * v).sum::<f64>() / 6.0);

    // a circuit with a single node pair normalizes both families to zero
    let mut tiny = Aig::new("tiny");
    let p = tiny.add_pi();
    let q = tiny.add_not(p);
    tiny.pos.push(q);
    let l = CircuitLabels::compute(&tiny, 64, 12, 64, 0);
    let sample = Sample::new(tiny, l).unwrap();
    let m = evaluate_ttdp(&model, &[&sample], 100, 1).unwrap();
    check(m.mae, 0.0);
    check(m.mse, 0.0);

    verdict(3, "metric fixtures", worst <= 1e-12, &format!("largest deviation from hand values {worst:.2e} (limit 1e-12)"));
}

#[test]
fn criterion_04_basis_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for layers in 1..=3 {
        let g = random_circuit(&mut rng, 8, 80);
        let direct = Model::new(ModelConfig { layers, hidden: 16, no_basis_decomposition: true, seed: 10, ..ModelConfig::default() }).unwrap();
        let mut dec = Model::new(ModelConfig { layers, hidden: 16, seed: 11, ..ModelConfig::default() }).unwrap();
        assert_eq!(dec.config().bases, dec.config().relation_count());
        for name in dec.param_names().to_vec() {
            let src = if let Some(rest) = name.strip_suffix(".basis0") {
                format!("{rest}.rel_into_and")
            } else if let Some(rest) = name.strip_suffix(".basis1") {
                format!("{rest}.rel_into_not")
            } else if name.ends_with(".coef") {
                *dec.param_mut(&name).unwrap() = Tensor::identity(2);
                continue;
            } else {
                name.clone()
            };
            *dec.param_mut(&name).unwrap() = direct.param(&src).unwrap().clone();
        }
        let gi = GraphIndex::new(&g, false);
        let (za, ya) = dec.predict(&gi).unwrap();
        let (zb, yb) = direct.predict(&gi).unwrap();
        worst = worst.max(za.max_abs_diff(&zb));
        worst = worst.max(ya.iter().zip(&yb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    verdict(
        4,
        "basis-decomposition identity",
        worst <= 1e-12,
        &format!("B=|R|=2 with identity coefficients vs unrestricted weights, L=1..3: max difference {worst:.2e} (limit 1e-12)"),
    );
}

// ---------------------------------------------------------------------------
// desk-scale protocol

const DESK_SEED: u64 = 2024;
const DESK_EPOCHS: usize = 200;
const DESK_BATCH: usize = 10;

struct Desk {
    samples: Vec<Sample>,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl Desk {
    fn pick(&self, ix: &[usize]) -> Vec<&Sample> {
        ix.iter().map(|&i| &self.samples[i]).collect()
    }
}

fn label_all(circuits: &[Aig], seed: u64) -> Vec<CircuitLabels> {
    circuits.iter().map(|g| CircuitLabels::compute(g, DEFAULT_MC_PATTERNS, 12, DEFAULT_FALLBACK_PATTERNS, seed)).collect()
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let circuits = generate_corpus(500, 50..=300, DESK_SEED).unwrap();
        let labels = label_all(&circuits, DESK_SEED);
        let samples = attach_labels(circuits, labels).unwrap();
        let [train, val, test] = split_indices(samples.len(), &[0.1, 0.1, 0.8], DESK_SEED).unwrap();
        Desk { samples, train, val, test }
    })
}

struct DeskRun {
    spp: TaskMetrics,
    ttdp: TaskMetrics,
    untrained_ttdp: TaskMetrics,
    best_epoch: usize,
    epochs: usize,
    seconds: f64,
}

fn desk_run(model: ModelConfig) -> DeskRun {
    let d = desk();
    let (tr, va, te) = (d.pick(&d.train), d.pick(&d.val), d.pick(&d.test));
    let cfg = TrainConfig { epochs: DESK_EPOCHS, batch_size: DESK_BATCH, task: Task::Joint, seed: DESK_SEED, ..TrainConfig::default() };
    let eval_seed = derive_seed(DESK_SEED, 7);
    let untrained = Model::new(model.clone()).unwrap();
    let untrained_ttdp = evaluate_ttdp(&untrained, &te, cfg.pair_count, eval_seed).unwrap();
    let start = Instant::now();
    let out = train(untrained, &tr, &va, &cfg).unwrap();
    let run = DeskRun {
        spp: evaluate_spp(&out.model, &te).unwrap(),
        ttdp: evaluate_ttdp(&out.model, &te, cfg.pair_count, eval_seed).unwrap(),
        untrained_ttdp,
        best_epoch: out.best_epoch,
        epochs: out.history.len(),
        seconds: start.elapsed().as_secs_f64(),
    };
    note(&format!(
        "desk run {} L={}: test SPP MAE {:.4} MSE {:.4}, TTDP MAE {:.4} MSE {:.4} (untrained TTDP MAE {:.4}), best epoch {}/{}, {:.0} s",
        model.variant_name(),
        model.layers,
        run.spp.mae,
        run.spp.mse,
        run.ttdp.mae,
        run.ttdp.mse,
        run.untrained_ttdp.mae,
        run.best_epoch,
        run.epochs,
        run.seconds
    ));
    run
}

fn desk_model(layers: usize) -> ModelConfig {
    ModelConfig { layers, hidden: 64, seed: DESK_SEED, ..ModelConfig::default() }
}

fn full_l9() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| desk_run(desk_model(9)))
}

fn constant_baseline(samples: &[&Sample]) -> f64 {
    let (sum, n) = samples
        .iter()
        .flat_map(|s| s.labels.signal_prob.iter())
        .fold((0.0, 0usize), |(s, n), p| (s + (p - 0.5).abs(), n + 1));
    sum / n as f64
}

#[test]
fn criterion_05_desk_scale_learning() {
    let d = desk();
    let baseline = constant_baseline(&d.pick(&d.test));
    let run = full_l9();
    let spp_gain = 1.0 - run.spp.mae / baseline;
    let ttdp_gain = 1.0 - run.ttdp.mae / run.untrained_ttdp.mae;
    if let Ok(dir) = std::env::var("AIGNET_BENCHMARK_DIR") {
        exploratory_benchmark(Path::new(&dir));
    } else {
        note("acceptance  5 exploratory benchmark: skipped (set AIGNET_BENCHMARK_DIR to a directory of AIGER files)");
    }
    verdict(
        5,
        "desk-scale learning",
        run.spp.mae <= 0.08 && spp_gain >= 0.30 && ttdp_gain >= 0.20,
        &format!(
            "500 circuits, split 0.1/0.1/0.8, L=9, d=64, {DESK_EPOCHS} epochs: SPP MAE {:.4} (limit 0.08), {:.0}% better than constant 0.5 ({baseline:.4}, need 30%); TTDP MAE {:.4}, {:.0}% better than untrained ({:.4}, need 20%)",
            run.spp.mae,
            100.0 * spp_gain,
            run.ttdp.mae,
            100.0 * ttdp_gain,
            run.untrained_ttdp.mae
        ),
    );
}

/// Full protocol on user-supplied AIGER files, reported against the published
/// figures with a +-50% band. Informational only.
fn exploratory_benchmark(dir: &Path) {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .expect("benchmark directory readable")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| AigerFormat::from_extension(p).is_some())
        .collect();
    paths.sort();
    let circuits: Vec<Aig> = paths
        .iter()
        .filter_map(|p| {
            let name = p.file_stem()?.to_str()?.to_string();
            read_aig(&std::fs::read(p).ok()?, &name).map_err(|e| note(&format!("skipping {}: {e}", p.display()))).ok()
        })
        .collect();
    if circuits.len() < 3 {
        note(&format!("acceptance  5 exploratory benchmark: only {} readable circuits in {}", circuits.len(), dir.display()));
        return;
    }
    let samples = attach_labels(circuits.clone(), label_all(&circuits, DESK_SEED)).unwrap();
    let [tr, va, te] = split_indices(samples.len(), &[0.1, 0.1, 0.8], DESK_SEED).unwrap();
    let pick = |ix: &[usize]| ix.iter().map(|&i| &samples[i]).collect::<Vec<_>>();
    let cfg = TrainConfig { seed: DESK_SEED, ..TrainConfig::default() };
    let model = Model::new(ModelConfig { seed: DESK_SEED, ..ModelConfig::default() }).unwrap();
    let out = train(model, &pick(&tr), &pick(&va), &cfg).unwrap();
    let spp = evaluate_spp(&out.model, &pick(&te)).unwrap();
    let ttdp = evaluate_ttdp(&out.model, &pick(&te), cfg.pair_count, derive_seed(DESK_SEED, 7)).unwrap();
    for (what, got, target) in
        [("SPP MAE", spp.mae, 0.0077), ("SPP MSE", spp.mse, 0.0005), ("TTDP MAE", ttdp.mae, 0.1227), ("TTDP MSE", ttdp.mse, 0.0703)]
    {
        let band = if (got - target).abs() <= 0.5 * target { "within" } else { "outside" };
        note(&format!("acceptance  5 exploratory benchmark ({} circuits): {what} {got:.4} vs published {target} ({band} +-50%)", circuits.len()));
    }
}

#[test]
fn criterion_06_depth_trend() {
    let deep = full_l9();
    let shallow = desk_run(desk_model(3));
    verdict(
        6,
        "depth trend",
        deep.spp.mae <= shallow.spp.mae,
        &format!("test SPP MAE at L=9 {:.4} vs L=3 {:.4}", deep.spp.mae, shallow.spp.mae),
    );
}

#[test]
fn criterion_07_ablation_direction() {
    let full = full_l9();
    let sum = desk_run(ModelConfig { sum_aggregation: true, ..desk_model(9) });
    let single = desk_run(ModelConfig { single_embedding: true, ..desk_model(9) });
    let ok = |other: &DeskRun| full.spp.mae <= 1.05 * other.spp.mae;
    verdict(
        7,
        "ablation direction",
        ok(&sum) && ok(&single),
        &format!(
            "test SPP MAE full {:.4}, Sum_Agg {:.4} ({:+.1}%), Single_Emb {:.4} ({:+.1}%); full may trail by at most 5%",
            full.spp.mae,
            sum.spp.mae,
            100.0 * (full.spp.mae / sum.spp.mae - 1.0),
            single.spp.mae,
            100.0 * (full.spp.mae / single.spp.mae - 1.0)
        ),
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_08_parser_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut iso_fail, mut cross_fail) = (0usize, 0usize);
    for k in 0..1000u64 {
        let g = random_circuit(&mut rng, 20, 300);
        let ascii = read_aig(&write_aiger(&g, AigerFormat::Ascii).unwrap(), "a").unwrap();
        let binary = read_aig(&write_aiger(&g, AigerFormat::Binary).unwrap(), "b").unwrap();
        iso_fail += usize::from(!g.isomorphic(&ascii)) + usize::from(!g.isomorphic(&binary));
        // ASCII -> binary -> parse, compared by output truth tables
        let crossed = read_aig(&write_aiger(&ascii, AigerFormat::Binary).unwrap(), "c").unwrap();
        let ta = truth_tables(&ascii, 12, 512, k);
        let tc = truth_tables(&crossed, 12, 512, k);
        let same = ascii.pos.len() == crossed.pos.len()
            && ascii.pos.iter().zip(&crossed.pos).all(|(&x, &y)| ta[x] == tc[y]);
        cross_fail += usize::from(!same);
    }
    verdict(
        8,
        "parser round-trips",
        iso_fail == 0 && cross_fail == 0,
        &format!("1000 circuits: {iso_fail} non-isomorphic round-trips over both formats, {cross_fail} ASCII/binary truth-table mismatches"),
    );
}

#[test]
fn criterion_09_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = Model::new(ModelConfig { seed: 9, ..ModelConfig::default() }).unwrap();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let g = random_circuit(&mut rng, 12, 120);
        let perm = random_topo_perm(&g, k);
        let (z, y) = model.predict_aig(&g).unwrap();
        let (zp, yp) = model.predict_aig(&g.permuted(&perm).unwrap()).unwrap();
        for v in 0..g.len() {
            for (a, b) in z.row(v).iter().zip(zp.row(perm[v])) {
                worst = worst.max((a - b).abs());
            }
            worst = worst.max((y[v] - yp[perm[v]]).abs());
        }
    }
    verdict(
        9,
        "equivariance",
        worst <= 1e-12,
        &format!("50 circuits, L=12, d=64, random topological relabelings: max row-wise difference {worst:.2e} (limit 1e-12)"),
    );
}

/// Generate, label, split, train, checkpoint and evaluate; returns the
/// checkpoint files and the metrics text.
fn end_to_end(dir: &Path) -> (Vec<u8>, Vec<u8>, String) {
    let circuits = generate_corpus(30, 50..=120, 10).unwrap();
    let samples = attach_labels(circuits.clone(), label_all(&circuits, 10)).unwrap();
    let [tr, va, te] = split_indices(samples.len(), &[0.5, 0.2, 0.3], 10).unwrap();
    let pick = |ix: &[usize]| ix.iter().map(|&i| &samples[i]).collect::<Vec<_>>();
    let cfg = TrainConfig { epochs: 6, batch_size: 5, pair_count: 30, seed: 10, ..TrainConfig::default() };
    let model = Model::new(ModelConfig { layers: 3, hidden: 16, seed: 10, ..ModelConfig::default() }).unwrap();
    let out = train(model, &pick(&tr), &pick(&va), &cfg).unwrap();
    let manifest = dir.join("model.json");
    out.model.save(&manifest).unwrap();
    let report = MetricsReport {
        run: "determinism".into(),
        config_hash: out.model.to_checkpoint("model.bin").manifest.config_hash,
        task: cfg.task,
        spp: Some(evaluate_spp(&out.model, &pick(&te)).unwrap()),
        ttdp: Some(evaluate_ttdp(&out.model, &pick(&te), 30, 10).unwrap()),
        t_avg: None,
        epochs: out.history.len(),
        best_epoch: out.best_epoch,
        history: Vec::new(),
    };
    std::fs::write(dir.join("metrics.jsonl"), report.to_jsonl()).unwrap();
    let read = |f: &str| std::fs::read(dir.join(f)).unwrap();
    (read("model.json"), read("model.bin"), String::from_utf8(read("metrics.jsonl")).unwrap())
}

#[test]
fn criterion_10_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = end_to_end(a.path());
    let second = end_to_end(b.path());
    let same = first.0 == second.0 && first.1 == second.1 && first.2 == second.2;
    verdict(
        10,
        "determinism",
        same,
        &format!(
            "two seeded runs: manifest {} bytes, payload {} bytes, {} metric records, identical: {same}",
            first.0.len(),
            first.1.len(),
            first.2.lines().count()
        ),
    );
}
