//! Feature extraction, detector training and the detection-rate experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::activity;
use crate::dtw::{self, DtwNormalization, DtwTemplate, VectorSeries};
use crate::eval::{self, AcceptanceInterval, EvalError, Phase, Pipeline, StatisticKind, Verdict};
use crate::hmm::{self, BaumWelchConfig, HmmModel, Topology};
use crate::kinematics::{self, PlaneEstimation, DEFAULT_FLOOR};
use crate::motion::{self, ActivityDefinition, Label, SkeletonSequence};
use crate::par::{self, Execution};
use crate::quantize::{self, Characteristic, CoordinateMap, SymbolSequence};

/// Per-frame features of one repetition, with its phase split.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    /// Normalized trajectory of the tracked joint.
    pub coords: VectorSeries,
    /// Frontal, sagittal and transverse limb angles in degrees.
    pub angles: VectorSeries,
    pub split_index: usize,
}

impl Features {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    fn source(&self, angles: bool) -> &VectorSeries {
        if angles {
            &self.angles
        } else {
            &self.coords
        }
    }

    pub fn phase_series(&self, angles: bool, phase: Phase) -> VectorSeries {
        let (start, end) = phase.bounds(self.split_index, self.len());
        self.source(angles).slice(start, end)
    }

    /// One scalar track of a phase: a plane angle or a coordinate axis.
    pub fn phase_track(&self, characteristic: Characteristic, phase: Phase) -> Vec<f64> {
        let (start, end) = phase.bounds(self.split_index, self.len());
        let (series, col) = match (characteristic.plane(), characteristic.axis()) {
            (Some(plane), _) => (&self.angles, plane_column(plane)),
            (None, Some(axis)) => (&self.coords, axis),
            _ => unreachable!("every characteristic is a plane or an axis"),
        };
        (start..=end).map(|t| series.row(t)[col]).collect()
    }
}

fn plane_column(plane: motion::Plane) -> usize {
    match plane {
        motion::Plane::Frontal => 0,
        motion::Plane::Sagittal => 1,
        motion::Plane::Transverse => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub floor_plane: [f64; 4],
    pub plane_estimation: PlaneEstimation,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            floor_plane: DEFAULT_FLOOR,
            plane_estimation: PlaneEstimation::PerFrame,
        }
    }
}

pub fn extract(
    seq: &SkeletonSequence,
    def: &ActivityDefinition,
    opts: &FeatureOptions,
) -> Result<Features, EvalError> {
    seq.check_required(def)?;
    let norm = motion::normalize(seq, def)?;
    let angles =
        kinematics::angle_sequence_with(seq, def, opts.floor_plane, opts.plane_estimation)?;
    let split = eval::segment_phases(&angles, def)?.split_index;
    Ok(Features {
        coords: VectorSeries::new(3, norm.frames.iter().flat_map(|p| [p.x, p.y, p.z]).collect())?,
        angles: VectorSeries::new(3, angles.frames.iter().flat_map(|a| a.to_array()).collect())?,
        split_index: split,
    })
}

/// A DTW template with its acceptance interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwDetector {
    pub template: DtwTemplate,
    pub interval: AcceptanceInterval,
}

impl DtwDetector {
    pub fn train(
        training: &[VectorSeries],
        normalization: DtwNormalization,
        k_sigma: f64,
        exec: Execution,
    ) -> Result<Self, EvalError> {
        let template = dtw::select_template_with(training, normalization, exec)?;
        let interval = eval::calibrate(&template.training_distances, StatisticKind::DtwDistance, k_sigma)?;
        Ok(Self { template, interval })
    }

    pub fn evaluate(&self, test: &VectorSeries, pipeline: Pipeline, phase: Phase) -> Result<Verdict, EvalError> {
        eval::evaluate_dtw(test, &self.template, &self.interval, pipeline, phase)
    }
}

/// A discrete HMM over one characteristic with its acceptance interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmDetector {
    pub characteristic: Characteristic,
    pub model: HmmModel,
    pub interval: AcceptanceInterval,
    /// Present for coordinate characteristics.
    pub coordinate_map: Option<CoordinateMap>,
    pub iterations: usize,
    pub converged: bool,
}

impl HmmDetector {
    pub fn train(
        tracks: &[Vec<f64>],
        characteristic: Characteristic,
        config: &BaumWelchConfig,
        k_sigma: f64,
    ) -> Result<Self, EvalError> {
        let coordinate_map = match characteristic.axis() {
            Some(_) => Some(
                CoordinateMap::fit(tracks.iter().map(Vec::as_slice), CoordinateMap::DEFAULT_MARGIN)
                    .ok_or(EvalError::InsufficientCalibration(0))?,
            ),
            None => None,
        };
        let symbols = tracks
            .iter()
            .map(|t| symbolize(t, characteristic, coordinate_map.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let fit = hmm::fit(&symbols, config)?;
        let stats = symbols
            .iter()
            .map(|s| hmm::forward(&fit.model, s).map(|ll| ll.per_symbol))
            .collect::<Result<Vec<_>, _>>()?;
        let interval = eval::calibrate(&stats, StatisticKind::HmmPerSymbolLoglik, k_sigma)?;
        Ok(Self {
            characteristic,
            model: fit.model,
            interval,
            coordinate_map,
            iterations: fit.iterations,
            converged: fit.converged,
        })
    }

    pub fn symbolize(&self, track: &[f64]) -> Result<SymbolSequence, EvalError> {
        symbolize(track, self.characteristic, self.coordinate_map.as_ref())
    }

    pub fn evaluate(&self, track: &[f64], pipeline: Pipeline, phase: Phase) -> Result<Verdict, EvalError> {
        eval::evaluate_hmm(&self.symbolize(track)?, &self.model, &self.interval, pipeline, phase)
    }
}

fn symbolize(
    track: &[f64],
    characteristic: Characteristic,
    map: Option<&CoordinateMap>,
) -> Result<SymbolSequence, EvalError> {
    Ok(match map {
        Some(m) => m.quantize_track(track, characteristic)?,
        None => quantize::quantize_track(track, characteristic)?,
    })
}

/// Characteristics modeled by an HMM pipeline.
pub fn characteristics(pipeline: Pipeline) -> &'static [Characteristic] {
    if pipeline.uses_angles() {
        &Characteristic::PLANES
    } else {
        &Characteristic::AXES
    }
}

/// Stable per-model seed derived from the top-level seed and the model key.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pipelines: Vec<Pipeline>,
    pub n_states: usize,
    pub topology: Topology,
    pub k_sigma: f64,
    pub features: FeatureOptions,
    pub dtw_normalization: DtwNormalization,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pipelines: Pipeline::ALL.to_vec(),
            n_states: hmm::DEFAULT_N_STATES,
            topology: Topology::LeftRight,
            k_sigma: eval::DEFAULT_K_SIGMA,
            features: FeatureOptions::default(),
            dtw_normalization: DtwNormalization::PathLength,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.k_sigma > 0.0 && self.k_sigma.is_finite()) {
            return Err(EvalError::InvalidConfig(format!("k_sigma must be > 0, got {}", self.k_sigma)));
        }
        if self.n_states == 0 {
            return Err(EvalError::InvalidConfig("n_states must be >= 1".into()));
        }
        if self.pipelines.is_empty() {
            return Err(EvalError::InvalidConfig("no pipeline selected".into()));
        }
        Ok(())
    }

    pub fn baum_welch(&self, key: &str) -> BaumWelchConfig {
        BaumWelchConfig {
            n_states: self.n_states,
            topology: self.topology,
            seed: derive_seed(self.seed, key),
            ..BaumWelchConfig::default()
        }
    }
}

/// Summary characteristics reported alongside the per-characteristic rates
/// of HMM pipelines.
pub const MAX_SUMMARY: &str = "max";
pub const ANY_SUMMARY: &str = "any";
/// Characteristic name used for DTW rows.
pub const DTW_CHARACTERISTIC: &str = "vector";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultCell {
    pub activity: String,
    pub phase: u8,
    pub error_type: String,
    pub pipeline: Pipeline,
    pub characteristic: String,
    pub rejected: usize,
    pub total: usize,
    pub detection_rate_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub cells: Vec<ResultCell>,
}

fn rate(rejected: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * rejected as f64 / total as f64
    }
}

fn activity_rank(id: &str) -> usize {
    activity::ACTIVITY_IDS
        .iter()
        .position(|a| *a == id)
        .unwrap_or(activity::ACTIVITY_IDS.len())
}

fn characteristic_rank(name: &str) -> usize {
    [
        DTW_CHARACTERISTIC,
        "frontal",
        "sagittal",
        "transverse",
        "x",
        "y",
        "z",
        MAX_SUMMARY,
        ANY_SUMMARY,
    ]
    .iter()
    .position(|c| *c == name)
    .unwrap_or(usize::MAX)
}

impl ResultTable {
    fn sort(&mut self) {
        self.cells.sort_by(|a, b| {
            (activity_rank(&a.activity), &a.activity, a.phase, &a.error_type, a.pipeline)
                .cmp(&(activity_rank(&b.activity), &b.activity, b.phase, &b.error_type, b.pipeline))
                .then(characteristic_rank(&a.characteristic).cmp(&characteristic_rank(&b.characteristic)))
        });
    }

    pub fn get(
        &self,
        activity: &str,
        phase: u8,
        error_type: &str,
        pipeline: Pipeline,
        characteristic: &str,
    ) -> Option<&ResultCell> {
        self.cells.iter().find(|c| {
            c.activity == activity
                && c.phase == phase
                && c.error_type == error_type
                && c.pipeline == pipeline
                && c.characteristic == characteristic
        })
    }

    pub fn activities(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.activity) {
                seen.push(c.activity.clone());
            }
        }
        seen
    }

    pub fn error_types(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| c.error_type.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn pipelines(&self) -> Vec<Pipeline> {
        self.cells
            .iter()
            .map(|c| c.pipeline)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// The rate a pipeline is judged by: the vector rate for DTW and the
    /// best characteristic for HMM.
    pub fn headline(&self, activity: &str, phase: u8, error_type: &str, pipeline: Pipeline) -> Option<f64> {
        let ch = if pipeline.is_hmm() { MAX_SUMMARY } else { DTW_CHARACTERISTIC };
        self.get(activity, phase, error_type, pipeline, ch)
            .map(|c| c.detection_rate_pct)
    }

    /// Mean headline rate over activities.
    pub fn average(&self, phase: u8, error_type: &str, pipeline: Pipeline) -> Option<f64> {
        let rates: Vec<f64> = self
            .activities()
            .iter()
            .filter_map(|a| self.headline(a, phase, error_type, pipeline))
            .collect();
        if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("activity,phase,error_type,pipeline,characteristic,detection_rate_pct\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.2}",
                c.activity, c.phase, c.error_type, c.pipeline, c.characteristic, c.detection_rate_pct
            );
        }
        out
    }

    /// Rows are activities, columns phase × error type.
    pub fn dtw_table(&self, pipeline: Pipeline) -> String {
        let errors = self.error_types();
        let mut header = vec!["Activity".to_string()];
        for phase in [1, 2] {
            for e in &errors {
                header.push(format!("Phase {phase} {e}"));
            }
        }
        let rows = self
            .activities()
            .iter()
            .map(|a| {
                let mut row = vec![activity::display_name(a).to_string()];
                for phase in [1, 2] {
                    for e in &errors {
                        row.push(fmt_rate(self.get(a, phase, e, pipeline, DTW_CHARACTERISTIC)));
                    }
                }
                row
            })
            .collect();
        render(&format!("{pipeline}: detection rate (%)"), header, rows)
    }

    /// Rows are activities, columns error type × characteristic.
    pub fn hmm_table(&self, pipeline: Pipeline, phase: u8) -> String {
        let errors = self.error_types();
        let chars = characteristics(pipeline);
        let mut header = vec!["Activity".to_string()];
        for e in &errors {
            for c in chars {
                header.push(format!("{e} {}", c.as_str()));
            }
        }
        let rows = self
            .activities()
            .iter()
            .map(|a| {
                let mut row = vec![activity::display_name(a).to_string()];
                for e in &errors {
                    for c in chars {
                        row.push(fmt_rate(self.get(a, phase, e, pipeline, c.as_str())));
                    }
                }
                row
            })
            .collect();
        render(&format!("{pipeline}, phase {phase}: detection rate (%)"), header, rows)
    }

    /// Average headline rate per pipeline, phase and error type.
    pub fn averages_table(&self) -> String {
        let errors = self.error_types();
        let mut header = vec!["Technique".to_string()];
        for phase in [1, 2] {
            for e in &errors {
                header.push(format!("Phase {phase} {e}"));
            }
        }
        let rows = self
            .pipelines()
            .into_iter()
            .map(|p| {
                let mut row = vec![p.to_string()];
                for phase in [1, 2] {
                    for e in &errors {
                        row.push(match self.average(phase, e, p) {
                            Some(r) => format!("{r:.2}"),
                            None => "-".into(),
                        });
                    }
                }
                row
            })
            .collect();
        render("Average detection rate (%)", header, rows)
    }

    /// Every text table keyed by file name.
    pub fn text_tables(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for p in self.pipelines() {
            if p.is_hmm() {
                for phase in [1, 2] {
                    out.insert(format!("{p}_phase{phase}.txt"), self.hmm_table(p, phase));
                }
            } else {
                out.insert(format!("{p}.txt"), self.dtw_table(p));
            }
        }
        out
    }
}

fn fmt_rate(cell: Option<&ResultCell>) -> String {
    cell.map(|c| format!("{:.2}", c.detection_rate_pct))
        .unwrap_or_else(|| "-".into())
}

fn render(title: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = format!("{title}\n{}\n", line(&header));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for row in &rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out
}

struct ActivityData {
    def: ActivityDefinition,
    correct: Vec<Features>,
    /// Keyed by the label's name.
    errors: BTreeMap<String, Vec<Features>>,
}

fn group(
    correct: &[SkeletonSequence],
    errors: &[SkeletonSequence],
    opts: &FeatureOptions,
    exec: Execution,
) -> Result<Vec<ActivityData>, EvalError> {
    let mut ids: Vec<&str> = correct.iter().map(|s| s.activity_id.as_str()).collect();
    ids.sort_by_key(|id| (activity_rank(id), *id));
    ids.dedup();
    let mut out = Vec::new();
    for id in ids {
        let def = activity::definition(id).ok_or_else(|| EvalError::UnknownActivity(id.to_string()))?;
        let pick = |set: &[SkeletonSequence]| -> Vec<SkeletonSequence> {
            set.iter().filter(|s| s.activity_id == id).cloned().collect()
        };
        let correct_seqs = pick(correct);
        let error_seqs = pick(errors);
        if error_seqs.is_empty() {
            return Err(EvalError::MissingActivityData(id.to_string()));
        }
        let correct_features = par::try_map(exec, &correct_seqs, |s| extract(s, &def, opts))?;
        let error_features = par::try_map(exec, &error_seqs, |s| extract(s, &def, opts))?;
        let mut grouped: BTreeMap<String, Vec<Features>> = BTreeMap::new();
        for (s, f) in error_seqs.iter().zip(error_features) {
            grouped.entry(label_name(s.label)).or_default().push(f);
        }
        out.push(ActivityData {
            def,
            correct: correct_features,
            errors: grouped,
        });
    }
    Ok(out)
}

fn label_name(label: Label) -> String {
    label.as_str().to_string()
}

/// Model key used for seed derivation and artifact naming.
pub fn model_key(activity: &str, pipeline: Pipeline, phase: Phase, characteristic: Option<Characteristic>) -> String {
    match characteristic {
        Some(c) => format!("{activity}_{pipeline}_phase{phase}_{}", c.as_str()),
        None => format!("{activity}_{pipeline}_phase{phase}"),
    }
}

fn run_cell(
    data: &ActivityData,
    pipeline: Pipeline,
    phase: Phase,
    config: &ExperimentConfig,
) -> Result<Vec<ResultCell>, EvalError> {
    let activity = data.def.activity_id.clone();
    let mut cells = Vec::new();
    let mut push = |error_type: &str, characteristic: &str, rejected: usize, total: usize| {
        cells.push(ResultCell {
            activity: activity.clone(),
            phase: phase.number(),
            error_type: error_type.to_string(),
            pipeline,
            characteristic: characteristic.to_string(),
            rejected,
            total,
            detection_rate_pct: rate(rejected, total),
        });
    };
    if pipeline.is_hmm() {
        let chars = characteristics(pipeline);
        let detectors = par::try_map(config.execution, chars, |&c| {
            let tracks: Vec<Vec<f64>> = data.correct.iter().map(|f| f.phase_track(c, phase)).collect();
            let key = model_key(&data.def.activity_id, pipeline, phase, Some(c));
            HmmDetector::train(&tracks, c, &config.baum_welch(&key), config.k_sigma)
        })?;
        for (error_type, feats) in &data.errors {
            let mut per_char = vec![0usize; chars.len()];
            let mut any = 0;
            for f in feats {
                let mut rejected_any = false;
                for (k, d) in detectors.iter().enumerate() {
                    let v = d.evaluate(&f.phase_track(d.characteristic, phase), pipeline, phase)?;
                    if !v.accepted {
                        per_char[k] += 1;
                        rejected_any = true;
                    }
                }
                any += usize::from(rejected_any);
            }
            let total = feats.len();
            for (c, &r) in chars.iter().zip(&per_char) {
                push(error_type, c.as_str(), r, total);
            }
            let best = per_char.iter().copied().max().unwrap_or(0);
            push(error_type, MAX_SUMMARY, best, total);
            push(error_type, ANY_SUMMARY, any, total);
        }
    } else {
        let angles = pipeline.uses_angles();
        let training: Vec<VectorSeries> = data.correct.iter().map(|f| f.phase_series(angles, phase)).collect();
        let detector = DtwDetector::train(&training, config.dtw_normalization, config.k_sigma, config.execution)?;
        for (error_type, feats) in &data.errors {
            let verdicts = par::try_map(config.execution, feats, |f| {
                detector.evaluate(&f.phase_series(angles, phase), pipeline, phase)
            })?;
            let rejected = verdicts.iter().filter(|v| !v.accepted).count();
            push(error_type, DTW_CHARACTERISTIC, rejected, feats.len());
        }
    }
    Ok(cells)
}

/// Trains every selected pipeline per activity and phase on the correct
/// repetitions and reports the share of error repetitions rejected.
pub fn run_experiment(
    config: &ExperimentConfig,
    correct: &[SkeletonSequence],
    errors: &[SkeletonSequence],
) -> Result<ResultTable, EvalError> {
    config.validate()?;
    let data = group(correct, errors, &config.features, config.execution)?;
    let mut jobs = Vec::new();
    for (a, _) in data.iter().enumerate() {
        for &p in &config.pipelines {
            for phase in Phase::BOTH {
                jobs.push((a, p, phase));
            }
        }
    }
    let results = par::try_map(config.execution, &jobs, |&(a, p, phase)| run_cell(&data[a], p, phase, config))?;
    let mut table = ResultTable {
        cells: results.into_iter().flatten().collect(),
    };
    table.sort();
    Ok(table)
}
