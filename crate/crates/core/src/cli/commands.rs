use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::{
    fill_synth_defaults, fill_train_defaults, root_seed, synth_kind, train_config, Ini, SynthKind, RUN_KEYS,
};
use crate::analysis::{
    error_agreement_matrix, oracle_upper_bound, potential_margin, reference, unique_correct_counts,
    write_accuracy_csv, write_agreement_csv, write_meta_csv, write_report, write_unique_csv, AccuracyRow,
    AgreementMode, ClassSaliency, MetaRow, RecordSet, ReportInputs,
};
use crate::autograd::{read_checkpoint, write_checkpoint, ParamStore};
use crate::data::{
    label_from_filename, load_dataset_dir, map_path, parse_raw_recording, phase_only_generate, preprocess,
    read_map_index, split, synth_recording, write_dataset_dir, write_manifest, write_map_index, Dataset,
    LabeledSample, ManifestEntry, MapIndexEntry, Subset, MANIFEST_FILE, MAPS_DIR, MAPS_INDEX_FILE,
};
use crate::error::{invalid, Error, Result};
use crate::nn::{write_pgm, MetaActivation, MetaInput, MetaModule, MultiDomainModel, SingleDomainModel, DOMAINS};
use crate::repr::{write_complex_map, ReprFormat};
use crate::seed::{content_hash, derive_seed, rng_from_seed};
use crate::train::{
    evaluate_clean_and_noisy, read_predictions_csv, train_meta, train_multi, train_single, write_metrics_csv,
    write_predictions_csv, EpochMetrics, EvalResult, MetaBase, MetaClassifier, MultiView, PredictionRecord,
    RunFiles, TrainConfig, META_EPOCHS, MULTI_EPOCHS, SINGLE_EPOCHS,
};
use crate::{CLASS_NAMES, NUM_CLASSES};

/// Precision used for every model the command line trains.
pub type Precision = f32;

/// Writes the resolved configuration to `dir/name` after creating `dir`.
pub fn write_resolved(ini: &Ini, dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, ini.to_text())?;
    Ok(path)
}

fn set_command(ini: &mut Ini, command: &str) -> Result<()> {
    ini.check_keys("run", RUN_KEYS)?;
    ini.set("run", "command", command);
    ini.set_default("run", "seed", 0);
    Ok(())
}

fn path_of(ini: &Ini, key: &str) -> Result<PathBuf> {
    ini.get("paths", key)
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidArgument(format!("[paths] {key} is missing")))
}

/// Noise seed of evaluations: derived from the run's root seed.
pub fn noise_seed(ini: &Ini) -> Result<u64> {
    Ok(derive_seed(root_seed(ini)?, "noise"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub files: Vec<PathBuf>,
}

/// Writes a synthetic dataset: `.rad` recordings for the pendulum model, or
/// a ready preprocessed dataset directory for the phase-only family.
pub fn cmd_synth(ini: &mut Ini, out: &Path) -> Result<SynthSummary> {
    set_command(ini, "synth")?;
    fill_synth_defaults(ini)?;
    let kind = synth_kind(ini)?;
    write_resolved(ini, out, "config.ini")?;
    let mut files = Vec::new();
    match kind {
        SynthKind::Pendulum(cfg) => {
            for label in 0..NUM_CLASSES {
                for i in 0..cfg.samples_per_class {
                    let rec = synth_recording(&cfg, label, i)?;
                    let path = out.join(format!("{}.rad", cfg.sample_id(label, i)));
                    fs::write(&path, crate::data::write_raw_recording(&rec))?;
                    files.push(path);
                }
            }
        }
        SynthKind::PhaseOnly(cfg) => {
            let samples = phase_only_generate(&cfg)?;
            let data = Dataset::new(samples, root_seed(ini)?)?;
            write_dataset_dir(&data, out, None)?;
            files = data.samples.iter().map(|s| out.join(map_path(&s.id))).collect();
        }
    }
    Ok(SynthSummary { files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub manifest: Vec<ManifestEntry>,
    /// Maps written in this invocation.
    pub written: usize,
    /// Maps whose source hash matched the cached entry.
    pub skipped: usize,
    /// `(file name, error)` for every recording that failed.
    pub failed: Vec<(String, String)>,
}

fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool> {
    if fs::read(path).map(|old| old == bytes).unwrap_or(false) {
        return Ok(false);
    }
    fs::write(path, bytes)?;
    Ok(true)
}

/// Preprocesses every `<class>_<id>.rad` file of the input directory into
/// cached complex maps plus a split manifest. Maps whose source content is
/// unchanged are not rewritten. Per-file failures are collected, not fatal.
pub fn cmd_preprocess(ini: &mut Ini, out: &Path) -> Result<PreprocessSummary> {
    set_command(ini, "preprocess")?;
    let input = path_of(ini, "input")?;
    write_resolved(ini, out, "config.ini")?;
    let mut names: Vec<String> = fs::read_dir(&input)
        .map_err(|e| Error::InvalidArgument(format!("cannot read input directory {}: {e}", input.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".rad"))
        .collect();
    names.sort();
    if names.is_empty() {
        return invalid(format!("no samples found in {}", input.display()));
    }
    fs::create_dir_all(out.join(MAPS_DIR))?;
    let cached: Vec<MapIndexEntry> = read_map_index(&out.join(MAPS_INDEX_FILE)).unwrap_or_default();
    let mut index = Vec::with_capacity(names.len());
    let mut labels = Vec::with_capacity(names.len());
    let (mut written, mut skipped, mut failed) = (0, 0, Vec::new());
    for name in &names {
        let id = name.trim_end_matches(".rad").to_string();
        let result = (|| -> Result<(MapIndexEntry, usize, bool)> {
            let label = label_from_filename(name)?;
            let bytes = fs::read(input.join(name))?;
            let hash = content_hash(&bytes);
            let map_file = out.join(map_path(&id));
            if let Some(e) = cached.iter().find(|e| e.id == id && e.source_hash == hash) {
                if map_file.exists() {
                    return Ok((e.clone(), label, false));
                }
            }
            let text = String::from_utf8(bytes).map_err(|_| Error::Format("recording is not UTF-8 text".into()))?;
            let dtm = preprocess(&parse_raw_recording(&text)?)?;
            let mut buf = Vec::new();
            write_complex_map(&dtm, &mut buf)?;
            fs::write(&map_file, buf)?;
            let entry = MapIndexEntry {
                id: id.clone(),
                source_hash: hash,
                duration_s: dtm.duration_s(),
                doppler_span_hz: dtm.doppler_span_hz(),
            };
            Ok((entry, label, true))
        })();
        match result {
            Ok((entry, label, fresh)) => {
                if fresh {
                    written += 1;
                } else {
                    skipped += 1;
                }
                index.push(entry);
                labels.push(label);
            }
            Err(e) => failed.push((name.clone(), e.to_string())),
        }
    }
    if index.len() < 4 {
        return invalid(format!("only {} recordings preprocessed; at least 4 are needed to split", index.len()));
    }
    let sp = split(index.len(), root_seed(ini)?, Some(&labels))?;
    let assignment = sp.assignment();
    let manifest: Vec<ManifestEntry> = index
        .iter()
        .zip(&labels)
        .zip(&assignment)
        .map(|((e, &label), s)| ManifestEntry {
            id: e.id.clone(),
            label,
            split: s.expect("split covers every sample"),
            path: map_path(&e.id),
        })
        .collect();
    let mut buf = Vec::new();
    write_map_index(&index, &out.join(MAPS_INDEX_FILE))?;
    write_manifest(&manifest, &mut buf)?;
    write_if_changed(&out.join(MANIFEST_FILE), &buf)?;
    Ok(PreprocessSummary { manifest, written, skipped, failed })
}

/// Which experiment `train` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainKind {
    Single,
    Multi,
    Meta,
}

impl TrainKind {
    pub fn name(self) -> &'static str {
        match self {
            TrainKind::Single => "single",
            TrainKind::Multi => "multi",
            TrainKind::Meta => "meta",
        }
    }

    pub fn default_epochs(self) -> usize {
        match self {
            TrainKind::Single => SINGLE_EPOCHS,
            TrainKind::Multi => MULTI_EPOCHS,
            TrainKind::Meta => META_EPOCHS,
        }
    }
}

impl FromStr for TrainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(TrainKind::Single),
            "multi" => Ok(TrainKind::Multi),
            "meta" => Ok(TrainKind::Meta),
            _ => invalid(format!("unknown run kind '{s}' (single|multi|meta)")),
        }
    }
}

/// A trained model restored from its run directory.
pub enum LoadedModel {
    Single(SingleDomainModel<Precision>),
    Multi(MultiDomainModel<Precision>),
    Meta { base: MetaBase<Precision>, meta: MetaModule<Precision> },
}

pub struct LoadedRun {
    pub dir: PathBuf,
    pub ini: Ini,
    pub kind: TrainKind,
    pub cfg: TrainConfig,
    pub model: LoadedModel,
}

fn load_store(path: &Path, store: &mut ParamStore<Precision>) -> Result<()> {
    let file = fs::File::open(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot open checkpoint {}: {e}", path.display())))?;
    read_checkpoint(std::io::BufReader::new(file))?.load_into(store)
}

fn save_store(path: &Path, store: &ParamStore<Precision>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(store, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn single_format(ini: &Ini) -> Result<ReprFormat> {
    ReprFormat::from_str(
        ini.get("train", "format")
            .ok_or_else(|| Error::InvalidArgument("[train] format is missing (e.g. --format magnitude)".into()))?,
    )
}

fn meta_settings(ini: &Ini) -> Result<(MetaInput, MetaActivation)> {
    ini.check_keys("meta", &["input", "activation", "base", "base_hash"])?;
    Ok((
        MetaInput::from_str(ini.get("meta", "input").unwrap_or("embeddings"))?,
        MetaActivation::from_str(ini.get("meta", "activation").unwrap_or("linear"))?,
    ))
}

fn base_dirs(ini: &Ini) -> Result<Vec<PathBuf>> {
    let s = ini
        .get("meta", "base")
        .ok_or_else(|| Error::InvalidArgument("[meta] base is missing (one multi run or five single runs)".into()))?;
    Ok(s.split(',').map(|p| PathBuf::from(p.trim())).filter(|p| !p.as_os_str().is_empty()).collect())
}

/// Builds the frozen meta base from one multi-domain run or five
/// single-domain runs (any order).
pub fn load_meta_base(dirs: &[PathBuf]) -> Result<MetaBase<Precision>> {
    let runs = dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
    match runs.len() {
        1 => match runs.into_iter().next().expect("one run").model {
            LoadedModel::Multi(m) => Ok(MetaBase::Multi(m)),
            _ => invalid("a single meta base run must be a multi-domain run"),
        },
        5 => {
            let mut singles: Vec<SingleDomainModel<Precision>> = runs
                .into_iter()
                .map(|r| match r.model {
                    LoadedModel::Single(m) => Ok(m),
                    _ => invalid(format!("meta base {} is not a single-domain run", r.dir.display())),
                })
                .collect::<Result<_>>()?;
            singles.sort_by_key(|m| DOMAINS.iter().position(|&d| ReprFormat::single(d) == m.format));
            MetaBase::singles(singles)
        }
        n => invalid(format!("meta base needs 1 multi-domain run or 5 single-domain runs, got {n}")),
    }
}

/// Restores the selected model of a run directory.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let files = RunFiles::new(dir);
    let ini = Ini::load(&files.config())?;
    let kind = TrainKind::from_str(
        ini.get("run", "kind")
            .ok_or_else(|| Error::InvalidArgument(format!("{} is not a training run", dir.display())))?,
    )?;
    let cfg = train_config(&ini)?;
    let mut rng = rng_from_seed(0);
    let model = match kind {
        TrainKind::Single => {
            let format = single_format(&ini)?;
            let mut m = SingleDomainModel::new(
                format,
                cfg.encoder_spec(format.channels()),
                cfg.head_bias,
                cfg.leaky_slope,
                &mut rng,
            )?;
            load_store(&files.checkpoint(), &mut m.store)?;
            LoadedModel::Single(m)
        }
        TrainKind::Multi => {
            let mut m = MultiDomainModel::new(cfg.encoder_spec(1), cfg.head_bias, cfg.leaky_slope, &mut rng)?;
            load_store(&files.checkpoint(), &mut m.store)?;
            LoadedModel::Multi(m)
        }
        TrainKind::Meta => {
            let (input, activation) = meta_settings(&ini)?;
            let base = load_meta_base(&base_dirs(&ini)?)?;
            if let Some(h) = ini.get("meta", "base_hash") {
                if h != base.param_hash() {
                    return Err(Error::InvalidState(format!(
                        "meta base parameters changed since {} was trained",
                        dir.display()
                    )));
                }
            }
            let mut meta = MetaModule::new(input, activation, base.embed_dim(), cfg.leaky_slope, &mut rng)?;
            load_store(&files.checkpoint(), &mut meta.store)?;
            LoadedModel::Meta { base, meta }
        }
    };
    Ok(LoadedRun { dir: dir.to_path_buf(), ini, kind, cfg, model })
}

/// Evaluates a restored model on `samples`: the single format, the eleven
/// domain subsets of a multi-domain model, or the meta classifier.
pub fn evaluate_model(model: &mut LoadedModel, samples: &[&LabeledSample], noise_seed: u64) -> Result<Vec<EvalResult>> {
    match model {
        LoadedModel::Single(m) => Ok(vec![evaluate_clean_and_noisy(m, samples, noise_seed)?]),
        LoadedModel::Multi(m) => ReprFormat::ALL
            .iter()
            .map(|&f| evaluate_clean_and_noisy(&mut MultiView::for_format(m, f)?, samples, noise_seed))
            .collect(),
        LoadedModel::Meta { base, meta } => {
            Ok(vec![evaluate_clean_and_noisy(&mut MetaClassifier { base, meta }, samples, noise_seed)?])
        }
    }
}

pub fn write_eval_csv<W: Write>(results: &[EvalResult], mut w: W) -> Result<()> {
    writeln!(w, "representation,accuracy_clean,accuracy_0db,snr_db,noise_seed,samples")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.representation,
            r.accuracy_clean,
            r.accuracy_noisy,
            r.snr_db,
            r.noise_seed,
            r.clean.len()
        )?;
    }
    Ok(())
}

/// Writes `eval.csv` and both prediction files into `dir`.
pub fn write_eval_outputs(dir: &Path, results: &[EvalResult]) -> Result<()> {
    let files = RunFiles::new(dir);
    let mut buf = Vec::new();
    write_eval_csv(results, &mut buf)?;
    fs::write(files.eval_summary(), buf)?;
    for noisy in [false, true] {
        let records: Vec<PredictionRecord> = results
            .iter()
            .flat_map(|r| if noisy { r.noisy.clone() } else { r.clean.clone() })
            .collect();
        let mut buf = Vec::new();
        write_predictions_csv(&records, &mut buf)?;
        fs::write(files.predictions(noisy), buf)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub evals: Vec<EvalResult>,
    /// Optimizer steps per domain of a multi-domain run.
    pub domain_steps: Option<([usize; 5], usize)>,
}

fn write_stores(files: &RunFiles, last: &ParamStore<Precision>, best: &ParamStore<Precision>, cfg: &TrainConfig) -> Result<()> {
    save_store(&files.final_checkpoint(), last)?;
    save_store(&files.best_checkpoint(), best)?;
    let selected = match cfg.selection {
        crate::train::ModelSelection::Final => last,
        crate::train::ModelSelection::BestValidation => best,
    };
    save_store(&files.checkpoint(), selected)
}

/// Trains one model, writes the run directory (config snapshot, metrics,
/// checkpoints, evaluation and predictions) and returns its summary.
pub fn cmd_train(ini: &mut Ini, kind: TrainKind, out: &Path) -> Result<TrainSummary> {
    set_command(ini, "train")?;
    ini.set("run", "kind", kind.name());
    fill_train_defaults(ini, kind.default_epochs());
    let cfg = train_config(ini)?;
    ini.check_keys("paths", &["data"])?;
    let data_dir = path_of(ini, "data")?;
    let data_dir = fs::canonicalize(&data_dir)
        .map_err(|e| Error::InvalidArgument(format!("dataset {}: {e}", data_dir.display())))?;
    ini.set("paths", "data", data_dir.display());
    let files = RunFiles::new(out);
    files.create()?;
    let (format, meta_base) = match kind {
        TrainKind::Single => (Some(single_format(ini)?), None),
        TrainKind::Multi => (None, None),
        TrainKind::Meta => {
            let (input, activation) = meta_settings(ini)?;
            ini.set("meta", "input", input.name());
            ini.set("meta", "activation", activation.name());
            let dirs: Vec<PathBuf> = base_dirs(ini)?
                .iter()
                .map(|d| fs::canonicalize(d).map_err(|e| Error::InvalidArgument(format!("meta base {}: {e}", d.display()))))
                .collect::<Result<_>>()?;
            let joined: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
            ini.set("meta", "base", joined.join(","));
            let base = load_meta_base(&dirs)?;
            ini.set("meta", "base_hash", base.param_hash());
            (None, Some((base, input, activation)))
        }
    };
    if kind != TrainKind::Single && ini.get("train", "format").is_some() {
        return invalid("[train] format only applies to single-domain runs");
    }
    write_resolved(ini, out, "config.ini")?;
    let data = load_dataset_dir(&data_dir)?;
    let test = data.subset(Subset::Test);
    let seed = noise_seed(ini)?;
    let (metrics, best_epoch, mut model, domain_steps) = match kind {
        TrainKind::Single => {
            let run = train_single::<Precision>(format.expect("single format"), &data, &cfg)?;
            write_stores(&files, &run.model.store, &run.best_store, &cfg)?;
            let m = run.selected(cfg.selection);
            (run.metrics, run.best_epoch, LoadedModel::Single(m), None)
        }
        TrainKind::Multi => {
            let run = train_multi::<Precision>(&data, &cfg)?;
            write_stores(&files, &run.model.store, &run.best_store, &cfg)?;
            let mut s = String::from("domain,steps,total_steps\n");
            for (d, n) in DOMAINS.iter().zip(run.domain_steps) {
                s.push_str(&format!("{},{n},{}\n", ReprFormat::single(*d).name(), run.steps));
            }
            fs::write(out.join("domain_steps.csv"), s)?;
            let m = run.selected(cfg.selection);
            (run.metrics, run.best_epoch, LoadedModel::Multi(m), Some((run.domain_steps, run.steps)))
        }
        TrainKind::Meta => {
            let (base, input, activation) = meta_base.expect("meta base loaded");
            let run = train_meta::<Precision>(base, input, activation, &data, &cfg)?;
            write_stores(&files, &run.meta.store, &run.best_store, &cfg)?;
            let meta = run.selected(cfg.selection);
            (run.metrics, run.best_epoch, LoadedModel::Meta { base: run.base, meta }, None)
        }
    };
    let mut buf = Vec::new();
    write_metrics_csv(&metrics, &mut buf)?;
    fs::write(files.metrics(), buf)?;
    let evals = evaluate_model(&mut model, &test, seed)?;
    write_eval_outputs(out, &evals)?;
    Ok(TrainSummary { dir: out.to_path_buf(), metrics, best_epoch, evals, domain_steps })
}

/// Re-evaluates a run directory on a dataset subset.
pub fn cmd_evaluate(ini: &mut Ini, out: &Path) -> Result<Vec<EvalResult>> {
    set_command(ini, "evaluate")?;
    ini.check_keys("paths", &["run", "data"])?;
    ini.check_keys("evaluate", &["subset"])?;
    let run_dir = path_of(ini, "run")?;
    ini.set_default("evaluate", "subset", "test");
    let subset = Subset::parse(ini.get("evaluate", "subset").expect("defaulted"))
        .ok_or_else(|| Error::InvalidArgument("[evaluate] subset must be train, val or test".into()))?;
    let mut run = load_run(&run_dir)?;
    let data_dir = match ini.get("paths", "data") {
        Some(p) => PathBuf::from(p),
        None => path_of(&run.ini, "data")?,
    };
    ini.set("paths", "data", data_dir.display());
    if fs::canonicalize(out).ok() == fs::canonicalize(&run_dir).ok() {
        return invalid("evaluate output must differ from the run directory");
    }
    write_resolved(ini, out, "config.ini")?;
    let data = load_dataset_dir(&data_dir)?;
    let results = evaluate_model(&mut run.model, &data.subset(subset), noise_seed(ini)?)?;
    write_eval_outputs(out, &results)?;
    Ok(results)
}

fn write_class_saliency(dir: &Path, s: &ClassSaliency, index: &mut String) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (c, name) in s.channel_names.iter().enumerate() {
        let stem = format!("{}_{}", CLASS_NAMES[s.class], name);
        for (suffix, map) in [("", &s.mean[c]), ("_thresholded", &s.thresholded[c])] {
            let path = dir.join(format!("{stem}{suffix}.pgm"));
            write_pgm(map, &path)?;
            out.push(path);
        }
        let max = s.mean[c].as_slice().iter().copied().fold(0.0, f64::max);
        index.push_str(&format!("{},{},{},{}\n", CLASS_NAMES[s.class], name, s.samples, max));
    }
    Ok(out)
}

/// Per-class mean saliency of one run's model on the test subset, written as
/// plain and thresholded PGM images plus a `saliency.csv` index.
pub fn saliency_for_run(run: &mut LoadedRun, data: &Dataset, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let test = data.subset(Subset::Test);
    let mut index = String::from("class,channel,samples,max\n");
    let mut paths = Vec::new();
    for class in 0..NUM_CLASSES {
        if !test.iter().any(|s| s.label == class) {
            continue;
        }
        let s = match &mut run.model {
            LoadedModel::Single(m) => crate::analysis::aggregate_saliency(m, &test, class)?,
            LoadedModel::Multi(m) => crate::analysis::aggregate_multi_saliency(m, &test, class, &DOMAINS)?,
            LoadedModel::Meta { .. } => return invalid("saliency is defined for single- and multi-domain runs"),
        };
        paths.extend(write_class_saliency(out, &s, &mut index)?);
    }
    fs::write(out.join("saliency.csv"), index)?;
    Ok(paths)
}

pub fn cmd_saliency(ini: &mut Ini, out: &Path) -> Result<Vec<PathBuf>> {
    set_command(ini, "saliency")?;
    ini.check_keys("paths", &["run", "data"])?;
    let run_dir = path_of(ini, "run")?;
    let mut run = load_run(&run_dir)?;
    let data_dir = match ini.get("paths", "data") {
        Some(p) => PathBuf::from(p),
        None => path_of(&run.ini, "data")?,
    };
    ini.set("paths", "data", data_dir.display());
    write_resolved(ini, out, "config.ini")?;
    saliency_for_run(&mut run, &load_dataset_dir(&data_dir)?, out)
}

/// Predictions of one run directory grouped by representation.
pub struct RunPredictions {
    pub dir: PathBuf,
    pub kind: TrainKind,
    pub ini: Ini,
    pub groups: Vec<(String, Vec<PredictionRecord>, Vec<PredictionRecord>)>,
}

fn group(records: Vec<PredictionRecord>) -> Vec<(String, Vec<PredictionRecord>)> {
    let mut out: Vec<(String, Vec<PredictionRecord>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(n, _)| *n == r.representation) {
            Some((_, v)) => v.push(r),
            None => out.push((r.representation.clone(), vec![r])),
        }
    }
    out
}

pub fn read_run_predictions(dir: &Path) -> Result<RunPredictions> {
    let files = RunFiles::new(dir);
    let ini = Ini::load(&files.config())?;
    let kind = TrainKind::from_str(
        ini.get("run", "kind")
            .ok_or_else(|| Error::InvalidArgument(format!("{} is not a training run", dir.display())))?,
    )?;
    let read = |noisy: bool| -> Result<Vec<PredictionRecord>> {
        let p = files.predictions(noisy);
        let text = fs::read_to_string(&p)
            .map_err(|e| Error::InvalidArgument(format!("missing prediction records {}: {e}", p.display())))?;
        read_predictions_csv(&text)
    };
    let clean = group(read(false)?);
    let noisy = group(read(true)?);
    if clean.len() != noisy.len() || clean.iter().zip(&noisy).any(|(a, b)| a.0 != b.0) {
        return Err(Error::Format(format!("{}: clean and 0 dB predictions cover different models", dir.display())));
    }
    let groups = clean.into_iter().zip(noisy).map(|((n, c), (_, z))| (n, c, z)).collect();
    Ok(RunPredictions { dir: dir.to_path_buf(), kind, ini, groups })
}

fn accuracy_row(name: &str, clean: &[PredictionRecord], noisy: &[PredictionRecord]) -> AccuracyRow {
    AccuracyRow {
        representation: name.to_string(),
        label: ReprFormat::from_str(name).map(|f| f.label().to_string()).unwrap_or_else(|_| name.to_string()),
        clean: crate::train::accuracy(clean),
        noisy: crate::train::accuracy(noisy),
    }
}

fn format_rank(name: &str) -> usize {
    reference::AGREEMENT_ORDER
        .iter()
        .position(|&n| n == name)
        .unwrap_or_else(|| 10 + ReprFormat::ALL.iter().position(|f| f.name() == name).unwrap_or(99))
}

#[derive(Debug, Clone)]
pub struct AnalyzeSummary {
    pub inputs: ReportInputs,
    pub record_set: Option<RecordSet>,
    pub files: Vec<PathBuf>,
}

fn save_csv(out: &Path, name: &str, files: &mut Vec<PathBuf>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let path = out.join(name);
    fs::write(&path, buf)?;
    files.push(path);
    Ok(())
}

/// Accuracy tables, error agreement, unique-correct counts, the oracle
/// upper bound, the potential margin, the meta table and the text report
/// over a set of run directories. With `[paths] data` set, also exports
/// per-class saliency of every single- and multi-domain run.
///
/// Error analyses use the single-domain runs when any are given, otherwise
/// the single-domain subsets of one multi-domain run.
pub fn cmd_analyze(ini: &mut Ini, runs: &[PathBuf], out: &Path) -> Result<AnalyzeSummary> {
    set_command(ini, "analyze")?;
    ini.check_keys("paths", &["runs", "data"])?;
    if runs.is_empty() {
        return invalid("analyze needs at least one run directory");
    }
    let joined: Vec<String> = runs.iter().map(|p| p.display().to_string()).collect();
    ini.set("paths", "runs", joined.join(","));
    write_resolved(ini, out, "config.ini")?;
    let preds = runs.iter().map(|d| read_run_predictions(d)).collect::<Result<Vec<_>>>()?;

    let mut inputs = ReportInputs::default();
    let mut single_groups: Vec<(String, Vec<PredictionRecord>)> = Vec::new();
    let mut multi_singletons: Option<Vec<(String, Vec<PredictionRecord>)>> = None;
    let mut multi_base: Option<f64> = None;
    for p in &preds {
        match p.kind {
            TrainKind::Single => {
                for (name, clean, noisy) in &p.groups {
                    if single_groups.iter().any(|(n, _)| n == name) {
                        return invalid(format!(
                            "representation '{name}' appears in more than one single-domain run ({})",
                            p.dir.display()
                        ));
                    }
                    inputs.single.push(accuracy_row(name, clean, noisy));
                    single_groups.push((name.clone(), clean.clone()));
                }
            }
            TrainKind::Multi => {
                if multi_singletons.is_some() {
                    return invalid("analyze accepts at most one multi-domain run");
                }
                let mut singletons = Vec::new();
                for (name, clean, noisy) in &p.groups {
                    inputs.multi.push(accuracy_row(name, clean, noisy));
                    if reference::AGREEMENT_ORDER.contains(&name.as_str()) {
                        singletons.push((name.clone(), clean.clone()));
                    }
                    if name == ReprFormat::Polar2U.name() {
                        multi_base = Some(crate::train::accuracy(clean));
                    }
                }
                multi_singletons = Some(singletons);
            }
            TrainKind::Meta => {
                let (input, activation) = meta_settings(&p.ini)?;
                for (_, clean, _) in &p.groups {
                    inputs.meta.push(MetaRow {
                        input: input.name().to_string(),
                        activation: activation.name().to_string(),
                        accuracy: crate::train::accuracy(clean),
                    });
                }
            }
        }
    }
    let by_rank = |v: &mut Vec<AccuracyRow>| v.sort_by_key(|r| ReprFormat::ALL.iter().position(|f| f.name() == r.representation));
    by_rank(&mut inputs.single);
    by_rank(&mut inputs.multi);

    let mut groups = if single_groups.is_empty() {
        inputs.notes.push("error analyses use the single-domain subsets of the multi-domain run".into());
        multi_singletons.unwrap_or_default()
    } else {
        inputs.notes.push("error analyses use the single-domain runs".into());
        single_groups
    };
    groups.sort_by_key(|(n, _)| format_rank(n));

    let mut files = Vec::new();
    let mut record_set = None;
    if !groups.is_empty() {
        let records: Vec<Vec<PredictionRecord>> = groups
            .into_iter()
            .map(|(name, recs)| recs.into_iter().map(|r| PredictionRecord { representation: name.clone(), ..r }).collect())
            .collect();
        let set = RecordSet::align(&records)?;
        let agreement = error_agreement_matrix(&set, AgreementMode::SameLabel);
        let both = error_agreement_matrix(&set, AgreementMode::BothWrong);
        let unique = unique_correct_counts(&set);
        let upper = oracle_upper_bound(&set);
        let base = if set.index_of("magnitude").is_some() { "magnitude".to_string() } else { set.representations[0].clone() };
        let margin = potential_margin(&set, &base)?;
        save_csv(out, "agreement.csv", &mut files, |b| write_agreement_csv(&agreement, b))?;
        save_csv(out, "agreement_both_wrong.csv", &mut files, |b| write_agreement_csv(&both, b))?;
        save_csv(out, "unique_correct.csv", &mut files, |b| write_unique_csv(&unique, b))?;
        save_csv(out, "upper_bound.csv", &mut files, |b| {
            writeln!(b, "correct_any,total,fraction")?;
            writeln!(b, "{},{},{}", upper.correct_any, upper.total, upper.fraction)?;
            Ok(())
        })?;
        save_csv(out, "margin.csv", &mut files, |b| {
            writeln!(b, "base,base_accuracy,recoverable,total,potential")?;
            writeln!(b, "{},{},{},{},{}", margin.base, margin.base_accuracy, margin.recoverable, margin.total, margin.potential)?;
            Ok(())
        })?;
        inputs.agreement = Some(agreement);
        inputs.agreement_both_wrong = Some(both);
        inputs.unique = Some(unique);
        inputs.upper = Some(upper);
        inputs.margin = Some(margin);
        record_set = Some(set);
    }
    if !inputs.single.is_empty() {
        save_csv(out, "accuracy_single.csv", &mut files, |b| write_accuracy_csv(&inputs.single, b))?;
    }
    if !inputs.multi.is_empty() {
        save_csv(out, "accuracy_multi.csv", &mut files, |b| write_accuracy_csv(&inputs.multi, b))?;
    }
    if !inputs.meta.is_empty() {
        let base = multi_base.map(|a| ("polar2-u", a));
        save_csv(out, "meta.csv", &mut files, |b| write_meta_csv(&inputs.meta, base, b))?;
    }
    if let Some(data_dir) = ini.get("paths", "data").map(PathBuf::from) {
        let data = load_dataset_dir(&data_dir)?;
        for p in preds.iter().filter(|p| p.kind != TrainKind::Meta) {
            let mut run = load_run(&p.dir)?;
            let name = p.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            files.extend(saliency_for_run(&mut run, &data, &out.join("saliency").join(name))?);
        }
    }
    save_csv(out, "report.txt", &mut files, |b| write_report(&inputs, b))?;
    Ok(AnalyzeSummary { inputs, record_set, files })
}
