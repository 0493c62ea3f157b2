//! Command-line front end.
//!
//! Every option can also come from a TOML file passed with `--config`; the
//! file uses the long flag names with underscores, and flags win.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::activity;
use crate::artifact::{Artifact, DtwArtifact, HmmArtifact, HmmTrainingInfo};
use crate::eval::{self, EvalError, Phase, Pipeline};
use crate::experiment::{self, DtwDetector, ExperimentConfig, FeatureOptions, HmmDetector};
use crate::hmm::Topology;
use crate::kinematics::{PlaneEstimation, DEFAULT_FLOOR};
use crate::motion::{self, FileFormat, Label, SkeletonSequence};
use crate::synth::{self, ActivityScript};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "gesture-gate", version, about = "Accept or reject therapy-exercise repetitions")]
pub struct Cli {
    /// TOML file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Write per-frame features of one recording.
    Extract(ExtractArgs),
    /// Train detectors on the correct repetitions of a dataset.
    Train(TrainArgs),
    /// Score a dataset against trained detectors.
    Evaluate(EvaluateArgs),
    /// Train and score every pipeline and write detection-rate tables.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub n_states: Option<usize>,
    /// left_right or ergodic.
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub k_sigma: Option<f64>,
    /// Floor plane `a,b,c,d` in sensor coordinates.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    pub floor_plane: Option<Vec<f64>>,
    /// per_frame or per_repetition.
    #[arg(long)]
    pub plane_estimation: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Activity id, or `all`.
    #[arg(long)]
    pub activity: Option<String>,
    #[arg(long)]
    pub correct: Option<usize>,
    #[arg(long)]
    pub errors: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Angle noise standard deviation, degrees.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Error deviation magnitude, degrees.
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Base repetition length, frames.
    #[arg(long)]
    pub duration: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Needed for CSV input, which carries no metadata.
    #[arg(long)]
    pub activity: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// File listing dataset files to leave out, one per line.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[arg(long)]
    pub pipeline: Option<String>,
    /// Restrict to one activity.
    #[arg(long)]
    pub activity: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Verdict CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Existing dataset; a synthetic one is generated when absent.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// File listing dataset files to leave out, one per line.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// Score the correct repetitions in place of the errors.
    #[arg(long)]
    pub null: bool,
    /// Comma-separated subset of pipelines.
    #[arg(long, value_delimiter = ',')]
    pub pipelines: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Restrict generated data to one activity.
    #[arg(long)]
    pub activity: Option<String>,
    #[arg(long)]
    pub correct: Option<usize>,
    #[arg(long)]
    pub errors: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub activity: Option<String>,
    pub correct: Option<usize>,
    pub errors: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub noise: Option<f64>,
    pub magnitude: Option<f64>,
    pub duration: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub exclude: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub pipeline: Option<String>,
    pub pipelines: Option<Vec<String>>,
    pub null: Option<bool>,
    pub n_states: Option<usize>,
    pub topology: Option<String>,
    pub k_sigma: Option<f64>,
    pub floor_plane: Option<[f64; 4]>,
    pub plane_estimation: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Error> {
    value.ok_or_else(|| usage(format!("missing required option --{flag}")))
}

fn existing_dir(path: PathBuf, flag: &str) -> Result<PathBuf, Error> {
    if path.is_dir() {
        Ok(path)
    } else {
        Err(usage(format!("--{flag} {} is not a directory", path.display())))
    }
}

fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid {what} `{value}`")))
}

fn check_activity(id: &str) -> Result<(), Error> {
    if activity::definition(id).is_some() {
        Ok(())
    } else {
        Err(usage(format!("unknown activity `{id}`")))
    }
}

/// Model and feature options after merging flags over the config file.
struct Resolved {
    n_states: usize,
    topology: Topology,
    k_sigma: f64,
    features: FeatureOptions,
}

fn resolve_model(args: &ModelArgs, file: &FileConfig) -> Result<Resolved, Error> {
    let topology = match args.topology.as_ref().or(file.topology.as_ref()) {
        Some(t) => parse(t, "topology")?,
        None => Topology::LeftRight,
    };
    let floor_plane = match (&args.floor_plane, file.floor_plane) {
        (Some(v), _) => [v[0], v[1], v[2], v[3]],
        (None, Some(f)) => f,
        (None, None) => DEFAULT_FLOOR,
    };
    let plane_estimation = match args.plane_estimation.as_deref().or(file.plane_estimation.as_deref()) {
        None | Some("per_frame") => PlaneEstimation::PerFrame,
        Some("per_repetition") => PlaneEstimation::PerRepetition,
        Some(other) => return Err(usage(format!("invalid plane estimation `{other}`"))),
    };
    let k_sigma = args.k_sigma.or(file.k_sigma).unwrap_or(eval::DEFAULT_K_SIGMA);
    if !(k_sigma > 0.0 && k_sigma.is_finite()) {
        return Err(usage(format!("--k-sigma must be > 0, got {k_sigma}")));
    }
    let n_states = args.n_states.or(file.n_states).unwrap_or(crate::hmm::DEFAULT_N_STATES);
    if n_states == 0 {
        return Err(usage("--n-states must be >= 1"));
    }
    Ok(Resolved {
        n_states,
        topology,
        k_sigma,
        features: FeatureOptions {
            floor_plane,
            plane_estimation,
        },
    })
}

/// Parses arguments and runs the selected command.
pub fn run(cli: Cli) -> Result<(), Error> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(a, &file),
        Command::Extract(a) => cmd_extract(a, &file),
        Command::Train(a) => cmd_train(a, &file),
        Command::Evaluate(a) => cmd_evaluate(a, &file),
        Command::Experiment(a) => cmd_experiment(a, &file),
    }
}

fn activity_scripts(
    activity: &str,
    noise: Option<f64>,
    magnitude: Option<f64>,
    duration: Option<usize>,
) -> Result<Vec<ActivityScript>, Error> {
    let mut scripts = if activity == "all" {
        ActivityScript::all_defaults()
    } else {
        check_activity(activity)?;
        vec![ActivityScript::defaults(activity)?]
    };
    for s in &mut scripts {
        if let Some(n) = noise {
            s.noise_std = n;
        }
        if let Some(m) = magnitude {
            s.deviation_magnitude = m;
        }
        if let Some(d) = duration {
            s.duration_frames = d;
        }
    }
    Ok(scripts)
}

fn cmd_synth(a: SynthArgs, file: &FileConfig) -> Result<(), Error> {
    let activity = required(a.activity.or(file.activity.clone()), "activity")?;
    let out = required(a.out.or(file.out.clone()), "out")?;
    let format: FileFormat = parse(
        a.format.as_deref().or(file.format.as_deref()).unwrap_or("csv"),
        "format",
    )?;
    let scripts = activity_scripts(
        &activity,
        a.noise.or(file.noise),
        a.magnitude.or(file.magnitude),
        a.duration.or(file.duration),
    )?;
    let n_correct = a.correct.or(file.correct).unwrap_or(synth::DEFAULT_N_CORRECT);
    let n_error = a.errors.or(file.errors).unwrap_or(synth::DEFAULT_N_ERROR);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let dataset = synth::generate_dataset(n_correct, n_error, &scripts, seed).map_err(|e| usage(e.to_string()))?;
    let manifest = synth::save_dataset(&dataset, &out, format)?;
    println!(
        "wrote {} sequences and {} to {}",
        manifest.entries.len(),
        synth::MANIFEST_FILE,
        out.display()
    );
    Ok(())
}

fn cmd_extract(a: ExtractArgs, file: &FileConfig) -> Result<(), Error> {
    let model = resolve_model(&a.model, file)?;
    let format = FileFormat::from_path(&a.input)
        .ok_or_else(|| usage(format!("{}: expected a .csv or .json file", a.input.display())))?;
    let seq = motion::load_sequence(&a.input, format)?;
    let activity_id = match a.activity.or(file.activity.clone()) {
        Some(id) => id,
        None if !seq.activity_id.is_empty() => seq.activity_id.clone(),
        None => return Err(usage("missing required option --activity")),
    };
    check_activity(&activity_id)?;
    let def = activity::definition(&activity_id).expect("checked");
    let features = experiment::extract(&seq, &def, &model.features)?;
    let mut csv = String::from("frame,t,x,y,z,frontal,sagittal,transverse,phase\n");
    for (i, frame) in seq.frames().iter().enumerate() {
        let c = features.coords.row(i);
        let g = features.angles.row(i);
        let phase = if i <= features.split_index { 1 } else { 2 };
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{},{phase}",
            frame.timestamp, c[0], c[1], c[2], g[0], g[1], g[2]
        );
    }
    match a.out.or(file.out.clone()) {
        Some(path) => motion::write_atomic(&path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn load_dataset(path: PathBuf, exclude: Option<PathBuf>) -> Result<Vec<SkeletonSequence>, Error> {
    let dir = existing_dir(path, "dataset")?;
    let exclude = match exclude {
        Some(list) => synth::read_exclude_list(&list)
            .map_err(|e| usage(format!("exclude list {}: {e}", list.display())))?,
        None => Default::default(),
    };
    Ok(synth::load_dataset_excluding(&dir, &exclude)?.1)
}

fn by_activity(seqs: Vec<SkeletonSequence>) -> BTreeMap<String, Vec<SkeletonSequence>> {
    let mut map: BTreeMap<String, Vec<SkeletonSequence>> = BTreeMap::new();
    for s in seqs {
        map.entry(s.activity_id.clone()).or_default().push(s);
    }
    map
}

/// Trains one pipeline for one activity and returns `(file name, artifact)`.
pub fn train_activity(
    activity_id: &str,
    correct: &[SkeletonSequence],
    pipeline: Pipeline,
    config: &ExperimentConfig,
) -> Result<Vec<(String, Artifact)>, Error> {
    let def = activity::definition(activity_id)
        .ok_or_else(|| EvalError::UnknownActivity(activity_id.to_string()))?;
    let features = correct
        .iter()
        .map(|s| experiment::extract(s, &def, &config.features))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for phase in Phase::BOTH {
        if pipeline.is_hmm() {
            for &c in experiment::characteristics(pipeline) {
                let key = experiment::model_key(activity_id, pipeline, phase, Some(c));
                let tracks: Vec<Vec<f64>> = features.iter().map(|f| f.phase_track(c, phase)).collect();
                let bw = config.baum_welch(&key);
                let detector = HmmDetector::train(&tracks, c, &bw, config.k_sigma)?;
                let info = HmmTrainingInfo {
                    activity: activity_id.to_string(),
                    phase,
                    pipeline,
                    characteristic: c,
                    n_sequences: tracks.len(),
                    seed: bw.seed,
                    iterations: detector.iterations,
                    converged: detector.converged,
                    coordinate_map: detector.coordinate_map,
                };
                out.push((format!("{key}.json"), Artifact::Hmm(HmmArtifact::from_detector(&detector, info))));
            }
        } else {
            let key = experiment::model_key(activity_id, pipeline, phase, None);
            let series: Vec<_> = features
                .iter()
                .map(|f| f.phase_series(pipeline.uses_angles(), phase))
                .collect();
            let detector = DtwDetector::train(&series, config.dtw_normalization, config.k_sigma, config.execution)?;
            out.push((
                format!("{key}.json"),
                Artifact::Dtw(DtwArtifact {
                    activity: activity_id.to_string(),
                    phase,
                    pipeline,
                    n_sequences: series.len(),
                    template: detector.template,
                    calibration: detector.interval,
                }),
            ));
        }
    }
    Ok(out)
}

fn experiment_config(model: &Resolved, seed: u64, pipelines: Vec<Pipeline>) -> ExperimentConfig {
    ExperimentConfig {
        pipelines,
        n_states: model.n_states,
        topology: model.topology,
        k_sigma: model.k_sigma,
        features: model.features,
        seed,
        ..ExperimentConfig::default()
    }
}

fn cmd_train(a: TrainArgs, file: &FileConfig) -> Result<(), Error> {
    let model = resolve_model(&a.model, file)?;
    let dataset = required(a.dataset.or(file.dataset.clone()), "dataset")?;
    let pipeline: Pipeline = parse(&required(a.pipeline.or(file.pipeline.clone()), "pipeline")?, "pipeline")?;
    let out = required(a.out.or(file.out.clone()), "out")?;
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let only = a.activity.or(file.activity.clone());
    if let Some(id) = &only {
        check_activity(id)?;
    }
    let config = experiment_config(&model, seed, vec![pipeline]);
    let correct: Vec<_> = load_dataset(dataset, a.exclude.or(file.exclude.clone()))?
        .into_iter()
        .filter(|s| s.label == Label::Correct)
        .filter(|s| only.as_ref().is_none_or(|id| &s.activity_id == id))
        .collect();
    let groups = by_activity(correct);
    if groups.is_empty() {
        return Err(Error::Eval(EvalError::InsufficientCalibration(0)));
    }
    let mut written = 0;
    for (id, seqs) in &groups {
        for (name, artifact) in train_activity(id, seqs, pipeline, &config)? {
            artifact.save(&out.join(name))?;
            written += 1;
        }
    }
    println!("wrote {written} artifacts to {}", out.display());
    Ok(())
}

fn load_artifacts(dir: &Path) -> Result<Vec<(String, Artifact)>, Error> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| usage(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, Artifact::load(&p)?))
        })
        .collect()
}

fn cmd_evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<(), Error> {
    let model = resolve_model(&a.model, file)?;
    let models = existing_dir(required(a.models.or(file.models.clone()), "models")?, "models")?;
    let dataset = required(a.dataset.or(file.dataset.clone()), "dataset")?;
    let artifacts = load_artifacts(&models)?;
    if artifacts.is_empty() {
        return Err(usage(format!("no artifacts in {}", models.display())));
    }
    let dir = existing_dir(dataset, "dataset")?;
    let (manifest, seqs) = synth::load_dataset(&dir)?;
    let mut csv = String::from("file,activity,label,phase,pipeline,characteristic,statistic,lo,hi,accepted\n");
    for (entry, seq) in manifest.entries.iter().zip(&seqs) {
        let relevant: Vec<&Artifact> = artifacts
            .iter()
            .map(|(_, a)| a)
            .filter(|a| a.activity() == seq.activity_id)
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let def = activity::definition(&seq.activity_id)
            .ok_or_else(|| EvalError::UnknownActivity(seq.activity_id.clone()))?;
        let features = experiment::extract(seq, &def, &model.features)?;
        // (phase, pipeline) -> per-characteristic verdicts, for the combined row.
        let mut hmm_groups: BTreeMap<(Phase, Pipeline), Vec<(String, eval::Verdict)>> = BTreeMap::new();
        let mut row = |characteristic: &str, v: &eval::Verdict| {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                entry.file,
                seq.activity_id,
                seq.label,
                v.phase,
                v.pipeline,
                characteristic,
                v.statistic,
                v.interval.lo,
                v.interval.hi,
                v.accepted
            );
        };
        for artifact in relevant {
            let (phase, pipeline) = (artifact.phase(), artifact.pipeline());
            match artifact {
                Artifact::Dtw(d) => {
                    let test = features.phase_series(pipeline.uses_angles(), phase);
                    row(experiment::DTW_CHARACTERISTIC, &d.detector().evaluate(&test, pipeline, phase)?);
                }
                Artifact::Hmm(h) => {
                    let detector = h.detector()?;
                    let track = features.phase_track(detector.characteristic, phase);
                    let v = detector.evaluate(&track, pipeline, phase)?;
                    row(detector.characteristic.as_str(), &v);
                    hmm_groups
                        .entry((phase, pipeline))
                        .or_default()
                        .push((detector.characteristic.as_str().to_string(), v));
                }
            }
        }
        for verdicts in hmm_groups.values() {
            if let Some(v) = eval::combine(verdicts) {
                row(experiment::ANY_SUMMARY, &v);
            }
        }
    }
    match a.out.or(file.out.clone()) {
        Some(path) => motion::write_atomic(&path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// File names written by `experiment`, besides the per-pipeline tables.
pub const RESULTS_CSV: &str = "results.csv";
pub const AVERAGES_TABLE: &str = "averages.txt";

fn cmd_experiment(a: ExperimentArgs, file: &FileConfig) -> Result<(), Error> {
    let model = resolve_model(&a.model, file)?;
    let out = required(a.out.or(file.out.clone()), "out")?;
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let pipelines = match a.pipelines.or(file.pipelines.clone()) {
        Some(list) => list
            .iter()
            .map(|p| parse::<Pipeline>(p, "pipeline"))
            .collect::<Result<Vec<_>, _>>()?,
        None => Pipeline::ALL.to_vec(),
    };
    let mut config = experiment_config(&model, seed, pipelines);
    if a.sequential {
        config.execution = crate::par::Execution::Sequential;
    }
    let sequences = match a.dataset.or(file.dataset.clone()) {
        Some(path) => load_dataset(path, a.exclude.or(file.exclude.clone()))?,
        None => {
            let activity = a.activity.or(file.activity.clone()).unwrap_or_else(|| "all".into());
            let scripts = activity_scripts(&activity, a.noise.or(file.noise), a.magnitude.or(file.magnitude), None)?;
            let n_correct = a.correct.or(file.correct).unwrap_or(synth::DEFAULT_N_CORRECT);
            let n_error = a.errors.or(file.errors).unwrap_or(synth::DEFAULT_N_ERROR);
            synth::generate_dataset_with(n_correct, n_error, &scripts, seed, config.execution)
                .map_err(|e| usage(e.to_string()))?
                .items
                .into_iter()
                .map(|g| g.sequence)
                .collect()
        }
    };
    let (correct, errors): (Vec<_>, Vec<_>) = sequences.into_iter().partition(|s| s.label == Label::Correct);
    let errors = if a.null || file.null.unwrap_or(false) {
        correct.clone()
    } else {
        errors
    };
    let table = experiment::run_experiment(&config, &correct, &errors)?;
    let mut files = table.text_tables();
    files.insert(AVERAGES_TABLE.into(), table.averages_table());
    files.insert(RESULTS_CSV.into(), table.to_csv());
    for (name, body) in &files {
        motion::write_atomic(&out.join(name), body.as_bytes())?;
    }
    print!("{}", table.averages_table());
    Ok(())
}
