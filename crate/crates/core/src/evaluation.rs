//! Training on synthetic scenes and the confusion-matrix evaluation harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{train_class_model, ClassModel, ObjectClass, ObjectDescriptor};
use crate::error::{Error, Result};
use crate::pipeline::{Perception, PipelineConfig, SceneObservation};
use crate::segmentation::{learn_color_ranges, ColorRangeModel, Detection, Mask, TrainingSample};
use crate::synthscene::{derive_seed, render, sample_scene, GroundTruth, RandomizerConfig, Rendering, SceneSpec};

/// Minimum mask IoU for a detection to count as a ground-truth object.
pub const MATCH_IOU: f64 = 0.5;

/// Greedy one-to-one matching by descending mask IoU.
///
/// Returns `(detection index, ground-truth id, iou)` triples.
pub fn match_detections(detections: &[Detection], truth: &GroundTruth, min_iou: f64) -> Vec<(usize, u16, f64)> {
    let mut gt_sizes: BTreeMap<u16, usize> = BTreeMap::new();
    for &l in truth.labels.iter().filter(|&&l| l != 0) {
        *gt_sizes.entry(l).or_default() += 1;
    }
    let mut candidates = Vec::new();
    for (i, det) in detections.iter().enumerate() {
        let mut inter: BTreeMap<u16, usize> = BTreeMap::new();
        for p in det.mask.indices() {
            let l = truth.labels[p];
            if l != 0 {
                *inter.entry(l).or_default() += 1;
            }
        }
        for (id, n) in inter {
            let union = det.pixel_count + gt_sizes[&id] - n;
            let iou = n as f64 / union as f64;
            if iou >= min_iou {
                candidates.push((i, id, iou));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_det = vec![false; detections.len()];
    let mut used_gt = Vec::new();
    let mut out = Vec::new();
    for (i, id, iou) in candidates {
        if !used_det[i] && !used_gt.contains(&id) {
            used_det[i] = true;
            used_gt.push(id);
            out.push((i, id, iou));
        }
    }
    out.sort_by_key(|m| m.1);
    out
}

/// Rows are actual classes (glass, dish, bowl, cutlery); columns add `unknown`,
/// which also receives ground-truth objects no detection matched.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 5]; 4],
    /// Detections that matched no ground-truth object.
    pub false_positives: u64,
    pub matched: u64,
}

const COLUMNS: [ObjectClass; 5] = [
    ObjectClass::Glass,
    ObjectClass::Dish,
    ObjectClass::Bowl,
    ObjectClass::Cutlery,
    ObjectClass::Unknown,
];

impl ConfusionMatrix {
    pub fn add(&mut self, actual: ObjectClass, predicted: ObjectClass) {
        if actual != ObjectClass::Unknown {
            self.counts[actual.index()][predicted.index()] += 1;
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for r in 0..4 {
            for c in 0..5 {
                self.counts[r][c] += other.counts[r][c];
            }
        }
        self.false_positives += other.false_positives;
        self.matched += other.matched;
    }

    pub fn row_total(&self, actual: ObjectClass) -> u64 {
        self.counts[actual.index()].iter().sum()
    }

    /// Fraction of `actual` objects predicted as `predicted`.
    pub fn rate(&self, actual: ObjectClass, predicted: ObjectClass) -> f64 {
        let total = self.row_total(actual);
        if total == 0 {
            0.0
        } else {
            self.counts[actual.index()][predicted.index()] as f64 / total as f64
        }
    }

    pub fn recall(&self, class: ObjectClass) -> f64 {
        self.rate(class, class)
    }

    fn csv(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut s = String::from("actual,glass,dish,bowl,cutlery,unknown\n");
        for (r, class) in ObjectClass::KNOWN.iter().enumerate() {
            s.push_str(class.as_str());
            for c in 0..5 {
                s.push(',');
                s.push_str(&cell(r, c));
            }
            s.push('\n');
        }
        s
    }

    /// Row-normalized percentages with two decimals.
    pub fn to_csv(&self) -> String {
        self.csv(|r, c| format!("{:.2}", 100.0 * self.rate(ObjectClass::KNOWN[r], COLUMNS[c])))
    }

    pub fn counts_csv(&self) -> String {
        self.csv(|r, c| self.counts[r][c].to_string())
    }

    /// Human-readable percentage table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<10}", "actual");
        for c in COLUMNS {
            let _ = write!(s, "{:>9}", c.as_str());
        }
        s.push_str(&format!("{:>8}\n", "n"));
        for class in ObjectClass::KNOWN {
            let _ = write!(s, "{:<10}", class.as_str());
            for c in COLUMNS {
                let _ = write!(s, "{:>8.2}%", 100.0 * self.rate(class, c));
            }
            let _ = writeln!(s, "{:>8}", self.row_total(class));
        }
        let _ = writeln!(s, "false positives: {}", self.false_positives);
        s
    }
}

/// Scores one observation against its ground truth.
pub fn score_observation(obs: &SceneObservation, spec: &SceneSpec, truth: &GroundTruth, min_iou: f64) -> ConfusionMatrix {
    let matches = match_detections(&obs.detections, truth, min_iou);
    let mut cm = ConfusionMatrix::default();
    for obj in &spec.objects {
        let predicted = matches
            .iter()
            .find(|m| m.1 == obj.id)
            .map(|m| obs.class_of(m.0).unwrap_or(ObjectClass::Unknown))
            .unwrap_or(ObjectClass::Unknown);
        cm.add(obj.class(), predicted);
    }
    cm.matched = matches.len() as u64;
    cm.false_positives = (obs.detections.len() - matches.len()) as u64;
    cm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub scenes: usize,
    pub seed: u64,
    pub color_margin: f64,
    pub class_margin: f64,
    pub randomizer: RandomizerConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            scenes: 160,
            seed: 1,
            color_margin: 0.15,
            class_margin: 0.15,
            randomizer: RandomizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub colors: ColorRangeModel,
    pub classes: ClassModel,
    pub warnings: Vec<String>,
    /// Descriptors matched to ground truth and used for the class model.
    pub examples: Vec<(ObjectDescriptor, ObjectClass)>,
}

/// A labelled scene: the rendering plus the spec it came from.
pub struct LabelledScene {
    pub spec: SceneSpec,
    pub rendering: Rendering,
}

pub fn render_training_scenes(config: &TrainingConfig) -> Result<Vec<LabelledScene>> {
    (0..config.scenes)
        .into_par_iter()
        .map(|i| {
            let spec = sample_scene(&config.randomizer, derive_seed(config.seed, i as u64))?;
            let rendering = render(&spec)?;
            Ok(LabelledScene { spec, rendering })
        })
        .collect()
}

/// Colour ranges from ground-truth masks, then class gates from pipeline
/// descriptors matched to ground truth.
pub fn train_models(scenes: &[LabelledScene], config: &TrainingConfig, pipeline: &PipelineConfig) -> Result<TrainedModels> {
    let masks: Vec<Vec<(Mask, String)>> = scenes
        .par_iter()
        .map(|s| {
            s.spec
                .objects
                .iter()
                .map(|o| (s.rendering.truth.mask(o.id), o.color_label()))
                .filter(|(m, _)| !m.is_empty())
                .collect()
        })
        .collect();
    let samples: Vec<TrainingSample<'_>> = scenes
        .iter()
        .zip(&masks)
        .flat_map(|(s, ms)| {
            ms.iter().map(move |(mask, label)| TrainingSample {
                frame: &s.rendering.frame,
                mask,
                label,
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    let colors = learn_color_ranges(&samples, config.color_margin)?;
    let perception = Perception::new(colors.clone(), None, pipeline.clone())?;

    let examples: Vec<Vec<(ObjectDescriptor, ObjectClass)>> = scenes
        .par_iter()
        .map(|s| {
            let obs = perception.observe(&s.rendering.frame, &s.spec.camera.intrinsics)?;
            let matches = match_detections(&obs.detections, &s.rendering.truth, MATCH_IOU);
            Ok(matches
                .into_iter()
                .filter_map(|(det, id, _)| {
                    let desc = obs.descriptors.iter().find(|d| d.id == det)?;
                    Some((desc.clone(), s.spec.object(id)?.class()))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let examples: Vec<_> = examples.into_iter().flatten().collect();
    let trained = train_class_model(&examples, pipeline.reference_depth, config.class_margin)?;
    Ok(TrainedModels {
        colors,
        classes: trained.model,
        warnings: trained.warnings,
        examples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub trials: usize,
    pub seed: u64,
    pub min_iou: f64,
    pub randomizer: RandomizerConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 1500,
            seed: 2,
            min_iou: MATCH_IOU,
            randomizer: RandomizerConfig::default(),
        }
    }
}

/// Runs `trials` random scenes through the pipeline. The result does not depend
/// on the number of worker threads.
pub fn evaluate(perception: &Perception, config: &EvalConfig) -> Result<ConfusionMatrix> {
    if perception.classes.is_none() {
        return Err(Error::invalid("evaluation needs a class model"));
    }
    let per_trial: Vec<ConfusionMatrix> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let spec = sample_scene(&config.randomizer, derive_seed(config.seed, t as u64))?;
            let r = render(&spec)?;
            let obs = perception.observe(&r.frame, &spec.camera.intrinsics)?;
            Ok(score_observation(&obs, &spec, &r.truth, config.min_iou))
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionMatrix::default();
    for cm in &per_trial {
        total.merge(cm);
    }
    if total.matched == 0 {
        return Err(Error::invalid("evaluation matched no objects"));
    }
    Ok(total)
}
