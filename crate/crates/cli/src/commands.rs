use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use aignet::aig::aiger::{read_aig, write_aiger, AigerFormat};
use aignet::aig::{generate_random_aig, Aig, RandomAigParams};
use aignet::model::Model;
use aignet::numerics::config_hash;
use aignet::sim::{derive_seed, read_labels, write_labels, CircuitLabels, DEFAULT_FALLBACK_PATTERNS};
use aignet::train::{
    self, evaluate_spp, evaluate_ttdp, read_metrics, render_table, split_dataset, MetricsReport, Sample, TableRow, Task,
    TaskMetrics,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::settings::{Settings, SettingsArgs};
use crate::CliError;

/// Stream for the pair sampling of reported distance metrics.
const EVAL_STREAM: u64 = 0x6576_616c;

type Out<'a> = &'a mut dyn Write;

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn echo(out: Out, config: &Value) -> Result<(), CliError> {
    emit(out, &format!("config {config}\n"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Resolves settings and sizes the worker pool.
pub fn prepare(args: &SettingsArgs) -> Result<Settings, CliError> {
    let s = args.resolve()?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(s.threads).build_global() {
        log::debug!("thread pool already configured: {e}");
    }
    Ok(s)
}

fn settings_value(s: &Settings) -> Value {
    serde_json::to_value(s).expect("settings serialize")
}

/// Hash of the settings that influence results (the thread count does not).
fn settings_hash(s: &Settings) -> String {
    let mut v = settings_value(s);
    v.as_object_mut().expect("object").remove("threads");
    config_hash(&v)
}

pub fn convert(input: &Path, dst: &Path, out: Out) -> Result<(), CliError> {
    let format = AigerFormat::from_extension(dst)
        .ok_or_else(|| CliError::Usage(format!("{}: output must end in .aag or .aig", dst.display())))?;
    echo(out, &json!({ "verb": "convert", "input": input, "out": dst, "format": format.extension() }))?;
    let bytes = fs::read(input).map_err(|e| CliError::io(input, e))?;
    let aig = read_aig(&bytes, &stem(input))?;
    write_file(dst, &write_aiger(&aig, format)?)?;
    emit(out, &format!("converted {} ({} nodes) to {}\n", aig.name, aig.len(), dst.display()))
}

pub struct GenArgs {
    pub count: usize,
    pub pis: usize,
    pub ands: usize,
    pub seed: u64,
    pub not_prob: f64,
    pub format: String,
}

pub fn gen(a: &GenArgs, dir: &Path, out: Out) -> Result<(), CliError> {
    let format = match a.format.as_str() {
        "aag" => AigerFormat::Ascii,
        "aig" => AigerFormat::Binary,
        f => return Err(CliError::Usage(format!("unknown format {f:?} (expected aag or aig)"))),
    };
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&a.not_prob) {
        return Err(CliError::Usage(format!("--not-prob {} outside [0, 1]", a.not_prob)));
    }
    echo(
        out,
        &json!({ "verb": "gen", "count": a.count, "pis": a.pis, "ands": a.ands, "seed": a.seed,
                 "not_prob": a.not_prob, "format": a.format, "out": dir }),
    )?;
    create_dir(dir)?;
    let mut nodes = 0;
    for i in 0..a.count {
        let mut aig = generate_random_aig(&RandomAigParams::new(a.pis, a.ands, derive_seed(a.seed, i as u64), a.not_prob))?;
        aig.name = format!("gen_{i:04}");
        nodes += aig.len();
        write_file(&dir.join(format!("{}.{}", aig.name, format.extension())), &write_aiger(&aig, format)?)?;
    }
    emit(out, &format!("wrote {} circuits ({nodes} nodes) to {}\n", a.count, dir.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit").to_string()
}

/// All `.aag`/`.aig` files of `dir`, in file-name order.
fn load_corpus(dir: &Path) -> Result<Vec<Aig>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.is_file() && AigerFormat::from_extension(p).is_some())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("{}: no .aag or .aig files", dir.display())));
    }
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(paths.len());
    for p in &paths {
        let name = stem(p);
        if let Some(prev) = seen.insert(name.clone(), p.clone()) {
            return Err(CliError::Usage(format!("circuit name {name:?} used by {} and {}", prev.display(), p.display())));
        }
        let bytes = fs::read(p).map_err(|e| CliError::io(p, e))?;
        out.push(read_aig(&bytes, &name).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?);
    }
    Ok(out)
}

fn compute_labels(s: &Settings, circuits: &[Aig]) -> Vec<CircuitLabels> {
    circuits
        .par_iter()
        .map(|aig| CircuitLabels::compute(aig, s.patterns, s.truth_pis, DEFAULT_FALLBACK_PATTERNS, s.seed))
        .collect()
}

fn load_samples(s: &Settings, data: &Path, labels: Option<&Path>) -> Result<Vec<Sample>, CliError> {
    let circuits = load_corpus(data)?;
    let labels = match labels {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            read_labels(BufReader::new(file))?
        }
        None => compute_labels(s, &circuits),
    };
    Ok(train::attach_labels(circuits, labels)?)
}

pub fn label(s: &Settings, data: &Path, dst: &Path, out: Out) -> Result<(), CliError> {
    let mut config = settings_value(s);
    config["verb"] = "label".into();
    config["data"] = json!(data);
    config["out"] = json!(dst);
    echo(out, &config)?;
    let circuits = load_corpus(data)?;
    let labels = compute_labels(s, &circuits);
    let mut buf = Vec::new();
    write_labels(&mut buf, &labels).map_err(|e| CliError::io(dst, e))?;
    if let Some(parent) = dst.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(dst, &buf)?;
    let nodes: usize = labels.iter().map(CircuitLabels::len).sum();
    emit(out, &format!("labelled {} circuits ({nodes} nodes) to {}\n", labels.len(), dst.display()))
}

fn measure(model: &Model, samples: &[&Sample], s: &Settings) -> Result<(Option<TaskMetrics>, Option<TaskMetrics>), CliError> {
    let spp = if s.task.has_spp() { Some(evaluate_spp(model, samples)?) } else { None };
    let ttdp = if s.task.has_ttdp() {
        Some(evaluate_ttdp(model, samples, s.pairs, derive_seed(s.seed, EVAL_STREAM))?)
    } else {
        None
    };
    Ok((spp, ttdp))
}

fn print_report(out: Out, report: &MetricsReport) -> Result<(), CliError> {
    let jsonl = report.to_jsonl();
    emit(out, &jsonl)?;
    let records = read_metrics(jsonl.as_bytes()).map_err(CliError::Usage)?;
    for (task, on) in [("spp", report.spp.is_some()), ("ttdp", report.ttdp.is_some())] {
        if on {
            emit(out, &format!("\n{}\n{}", task.to_uppercase(), render_table(&TableRow::from_records(&records, task))))?;
        }
    }
    Ok(())
}

/// Splits `samples` by circuit name.
fn partition<'a>(samples: &'a [Sample], s: &Settings) -> Result<[Vec<&'a Sample>; 3], CliError> {
    let names: Vec<String> = samples.iter().map(|x| x.aig.name.clone()).collect();
    let split = split_dataset(&names, &s.split, s.seed)?;
    let by_name: HashMap<&str, &Sample> = samples.iter().map(|x| (x.aig.name.as_str(), x)).collect();
    let pick = |v: &[String]| v.iter().map(|n| by_name[n.as_str()]).collect::<Vec<_>>();
    Ok([pick(&split.train), pick(&split.val), pick(&split.test)])
}

pub fn train(
    s: &Settings,
    data: &Path,
    labels: Option<&Path>,
    dir: &Path,
    run: Option<String>,
    no_timing: bool,
    out: Out,
) -> Result<(), CliError> {
    let mut config = settings_value(s);
    config["verb"] = "train".into();
    config["data"] = json!(data);
    config["labels"] = json!(labels);
    config["out"] = json!(dir);
    echo(out, &config)?;
    let samples = load_samples(s, data, labels)?;
    let [tr, va, te] = partition(&samples, s)?;
    if tr.is_empty() || te.is_empty() {
        return Err(CliError::Usage(format!(
            "split {:?} of {} circuits leaves train={} test={}; both must be non-empty",
            s.split,
            samples.len(),
            tr.len(),
            te.len()
        )));
    }
    emit(out, &format!("split train={} val={} test={}\n", tr.len(), va.len(), te.len()))?;
    let model = Model::new(s.model_config())?;
    let mut outcome = train::train(model, &tr, &va, &s.train_config())?;
    if no_timing {
        outcome.history.iter_mut().for_each(|h| h.seconds = 0.0);
    }
    let (spp, ttdp) = measure(&outcome.model, &te, s)?;
    let report = MetricsReport {
        run: run.unwrap_or_else(|| s.model_config().variant_name()),
        config_hash: settings_hash(s),
        task: s.task,
        spp,
        ttdp,
        t_avg: (!no_timing).then_some(outcome.t_avg),
        epochs: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        history: outcome.history,
    };
    create_dir(dir)?;
    outcome.model.save(&dir.join("model.json"))?;
    write_file(&dir.join("metrics.jsonl"), report.to_jsonl().as_bytes())?;
    let full = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&dir.join("report.json"), (full + "\n").as_bytes())?;
    print_report(out, &report)
}

#[allow(clippy::too_many_arguments)]
pub fn eval(
    s: &Settings,
    data: &Path,
    labels: Option<&Path>,
    ckpt: &Path,
    all: bool,
    run: Option<String>,
    dst: Option<&Path>,
    out: Out,
) -> Result<(), CliError> {
    let model = Model::load(ckpt)?;
    let mut config = settings_value(s);
    config["verb"] = "eval".into();
    config["data"] = json!(data);
    config["labels"] = json!(labels);
    config["checkpoint"] = json!(ckpt);
    config["checkpoint_model"] = serde_json::to_value(model.config()).expect("config serializes");
    config["subset"] = if all { "all" } else { "test" }.into();
    echo(out, &config)?;
    let samples = load_samples(s, data, labels)?;
    let subset = if all { samples.iter().collect() } else { partition(&samples, s)?[2].clone() };
    if subset.is_empty() {
        return Err(CliError::Usage("nothing to evaluate: the test split is empty".into()));
    }
    let (spp, ttdp) = measure(&model, &subset, s)?;
    let report = MetricsReport {
        run: run.unwrap_or_else(|| model.config().variant_name()),
        config_hash: settings_hash(s),
        task: s.task,
        spp,
        ttdp,
        t_avg: None,
        epochs: 0,
        best_epoch: 0,
        history: Vec::new(),
    };
    if let Some(dst) = dst {
        write_file(dst, report.to_jsonl().as_bytes())?;
    }
    print_report(out, &report)
}

pub fn report(files: &[PathBuf], task: &str, out: Out) -> Result<(), CliError> {
    if task.parse::<Task>().map_or(true, |t| t == Task::Joint) {
        return Err(CliError::Usage(format!("--task {task:?}: expected spp or ttdp")));
    }
    echo(out, &json!({ "verb": "report", "files": files, "task": task }))?;
    let mut records = Vec::new();
    for f in files {
        let file = fs::File::open(f).map_err(|e| CliError::io(f, e))?;
        records.extend(read_metrics(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", f.display())))?);
    }
    let rows = TableRow::from_records(&records, task);
    if rows.is_empty() {
        return Err(CliError::Usage(format!("no {task} metrics in the given files")));
    }
    emit(out, &render_table(&rows))
}
