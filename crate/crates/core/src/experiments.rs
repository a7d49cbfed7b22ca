//! The attribution experiment matrix over real and synthetic document sets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    evaluate, extract_char_ngrams, grid_search, grid_search_counts, stratified_folds, ClassificationReport, CvRow,
    GridConfig, NgramCounts,
};
use crate::corpus::{Document, DocumentSet};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "a_w")]
    AlphaOmega,
    #[serde(rename = "w_a")]
    OmegaAlpha,
    #[serde(rename = "abar_abar")]
    AbarAbar,
    #[serde(rename = "abar_w")]
    AbarOmega,
    #[serde(rename = "w_abar")]
    OmegaAbar,
    #[serde(rename = "aug_w")]
    AugOmega,
}

impl ExperimentId {
    pub const REAL: [ExperimentId; 2] = [ExperimentId::AlphaOmega, ExperimentId::OmegaAlpha];
    pub const SYNTHETIC: [ExperimentId; 4] = [
        ExperimentId::AbarAbar,
        ExperimentId::AbarOmega,
        ExperimentId::OmegaAbar,
        ExperimentId::AugOmega,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::AlphaOmega => "a_w",
            ExperimentId::OmegaAlpha => "w_a",
            ExperimentId::AbarAbar => "abar_abar",
            ExperimentId::AbarOmega => "abar_w",
            ExperimentId::OmegaAbar => "w_abar",
            ExperimentId::AugOmega => "aug_w",
        }
    }

    pub fn is_real(self) -> bool {
        Self::REAL.contains(&self)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExperimentId> {
        Self::REAL
            .iter()
            .chain(&Self::SYNTHETIC)
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Real,
    #[serde(rename = "NGLM")]
    Nglm,
    #[serde(rename = "RNNLM")]
    Rnnlm,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Real => "Real",
            Source::Nglm => "NGLM",
            Source::Rnnlm => "RNNLM",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Source> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Source::Real),
            "nglm" => Ok(Source::Nglm),
            "rnnlm" => Ok(Source::Rnnlm),
            _ => Err(Error::InvalidParameter(format!("unknown source {s:?}"))),
        }
    }
}

/// Published reference scores `(source, id, F1, P, R)`, for annotation only.
pub const REFERENCE_SCORES: [(Source, ExperimentId, f64, f64, f64); 8] = [
    (Source::Real, ExperimentId::AlphaOmega, 0.833, 0.818, 0.869),
    (Source::Real, ExperimentId::OmegaAlpha, 0.811, 0.795, 0.853),
    (Source::Nglm, ExperimentId::AugOmega, 0.814, 0.809, 0.850),
    (Source::Nglm, ExperimentId::AbarOmega, 0.706, 0.744, 0.750),
    (Source::Nglm, ExperimentId::OmegaAbar, 0.837, 0.811, 0.881),
    (Source::Rnnlm, ExperimentId::AugOmega, 0.872, 0.878, 0.892),
    (Source::Rnnlm, ExperimentId::AbarOmega, 0.635, 0.701, 0.658),
    (Source::Rnnlm, ExperimentId::OmegaAbar, 0.724, 0.778, 0.775),
];

pub fn reference_scores(source: Source, id: ExperimentId) -> Option<(f64, f64, f64)> {
    REFERENCE_SCORES
        .iter()
        .find(|r| r.0 == source && r.1 == id)
        .map(|r| (r.2, r.3, r.4))
}

/// A test set that counts how often it is opened.
#[derive(Debug)]
pub struct SealedSet<'a> {
    set: &'a DocumentSet,
    reads: AtomicUsize,
}

impl<'a> SealedSet<'a> {
    pub fn new(set: &'a DocumentSet) -> SealedSet<'a> {
        SealedSet {
            set,
            reads: AtomicUsize::new(0),
        }
    }

    pub fn open(&self) -> &'a DocumentSet {
        self.reads.fetch_add(1, Ordering::SeqCst);
        self.set
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec<'a> {
    pub id: ExperimentId,
    pub source: Source,
    pub train_sets: Vec<&'a DocumentSet>,
    pub test_set: &'a DocumentSet,
}

/// Report with the chosen hyper-parameters and the number of test-set reads
/// that happened before training finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub report: ClassificationReport,
    pub best_features: usize,
    pub best_c: f64,
    pub cv_table: Vec<CvRow>,
    pub test_reads_during_training: usize,
}

fn check_roster(sets: &[&DocumentSet]) -> Result<()> {
    let rosters: Vec<BTreeSet<String>> = sets.iter().map(|s| s.authors()).collect();
    let union: BTreeSet<String> = rosters.iter().flatten().cloned().collect();
    let missing: Vec<String> = union
        .iter()
        .filter(|a| rosters.iter().any(|r| !r.contains(*a)))
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::RosterMismatch(missing))
    }
}

fn overlap(train: &DocumentSet, test: &DocumentSet) -> usize {
    let seen: HashSet<(&str, Vec<&str>)> = train.documents.iter().map(Document::fingerprint).collect();
    test.documents.iter().filter(|d| seen.contains(&d.fingerprint())).count()
}

/// Train on the concatenated training sets (grid search), then evaluate once
/// on the test set.
pub fn run_experiment(spec: &ExperimentSpec<'_>, grid: &GridConfig, seed: u64) -> Result<ExperimentOutcome> {
    let mut all = spec.train_sets.clone();
    all.push(spec.test_set);
    check_roster(&all)?;
    let train = DocumentSet::concat(spec.train_sets.iter().copied());
    let leaked = overlap(&train, spec.test_set);
    if leaked > 0 {
        return Err(Error::Leakage(leaked));
    }
    let test = SealedSet::new(spec.test_set);
    let result = grid_search(&train, grid, seed)?;
    let reads_during_training = test.reads();
    if reads_during_training > 0 {
        return Err(Error::Leakage(reads_during_training));
    }
    let report = evaluate(&result.attributor.model, &result.attributor.space, test.open())?;
    Ok(ExperimentOutcome {
        report,
        best_features: result.best_features,
        best_c: result.best_c,
        cv_table: result.cv_table,
        test_reads_during_training: reads_during_training,
    })
}

fn mode<T: Copy + PartialOrd>(values: &[T]) -> T {
    let mut best = values[0];
    let mut best_count = 0;
    for &v in values {
        let count = values.iter().filter(|&&x| x == v).count();
        if count > best_count || (count == best_count && v < best) {
            best = v;
            best_count = count;
        }
    }
    best
}

/// Stratified k-fold cross-validation over a single document set, with a
/// nested grid search per fold. Predictions are pooled before scoring.
/// The reported hyper-parameters are the most frequent per-fold choices.
pub fn auto_classification(docs: &DocumentSet, grid: &GridConfig, folds: usize, seed: u64) -> Result<ExperimentOutcome> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("folds must be at least 2, got {folds}")));
    }
    let labels: Vec<String> = docs.documents.iter().map(|d| d.author.clone()).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let assignment = stratified_folds(&label_refs, folds, derive_seed(seed, "outer/folds"))?;
    let mut classes = labels.clone();
    classes.sort();
    classes.dedup();
    let counts: Vec<NgramCounts> = docs.documents.par_iter().map(extract_char_ngrams).collect();

    let per_fold: Vec<(Vec<usize>, Vec<String>, usize, f64)> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..docs.len()).filter(|&i| assignment[i] != fold).collect();
            let test: Vec<usize> = (0..docs.len()).filter(|&i| assignment[i] == fold).collect();
            let train_counts: Vec<&NgramCounts> = train.iter().map(|&i| &counts[i]).collect();
            let train_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
            let result = grid_search_counts(&train_counts, &train_labels, grid, derive_seed(seed, &format!("fold/{fold}")))?;
            let predicted = test
                .iter()
                .map(|&i| result.attributor.predict_counts(&counts[i]).to_string())
                .collect();
            Ok((test, predicted, result.best_features, result.best_c))
        })
        .collect::<Result<_>>()?;

    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for (test, preds, _, _) in &per_fold {
        for (&i, p) in test.iter().zip(preds) {
            truth.push(labels[i].as_str());
            predicted.push(p.as_str());
        }
    }
    let report = ClassificationReport::from_predictions(&classes, &truth, &predicted)?;
    let sizes: Vec<usize> = per_fold.iter().map(|f| f.2).collect();
    let cs: Vec<f64> = per_fold.iter().map(|f| f.3).collect();
    Ok(ExperimentOutcome {
        report,
        best_features: mode(&sizes),
        best_c: mode(&cs),
        cv_table: Vec::new(),
        test_reads_during_training: 0,
    })
}

/// Selects one experiment; `source` is required for synthetic ids only when
/// it cannot be inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentSelector {
    pub source: Option<Source>,
    pub id: ExperimentId,
}

impl FromStr for ExperimentSelector {
    type Err = Error;

    /// `abar_w` or `nglm:abar_w`.
    fn from_str(s: &str) -> Result<ExperimentSelector> {
        match s.split_once(':') {
            Some((source, id)) => Ok(ExperimentSelector {
                source: Some(source.parse()?),
                id: id.parse()?,
            }),
            None => Ok(ExperimentSelector {
                source: None,
                id: s.parse()?,
            }),
        }
    }
}

/// Inputs of the experiment matrix. Synthetic sets are optional so the real
/// experiments can run before any generation.
#[derive(Debug, Clone, Copy)]
pub struct MatrixInputs<'a> {
    pub alpha: &'a DocumentSet,
    pub omega: &'a DocumentSet,
    pub abar_nglm: Option<&'a DocumentSet>,
    pub abar_rnnlm: Option<&'a DocumentSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatrixConfig {
    pub grid: GridConfig,
    /// Folds of the cross-validation used for `abar_abar`.
    pub auto_folds: usize,
    /// Share of each author's synthetic documents added in `aug_w`.
    pub augment_fraction: f64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            grid: GridConfig::default(),
            auto_folds: 5,
            augment_fraction: 1.0,
        }
    }
}

impl MatrixConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.auto_folds < 2 {
            return Err(Error::InvalidParameter("auto_folds must be at least 2".into()));
        }
        if !(self.augment_fraction > 0.0 && self.augment_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "augment_fraction {} not in (0, 1]",
                self.augment_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub source: Source,
    pub experiment_id: ExperimentId,
    pub macro_f1: f64,
    pub macro_p: f64,
    pub macro_r: f64,
    pub best_features: usize,
    pub best_c: f64,
    pub reference: Option<(f64, f64, f64)>,
    pub note: String,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

const CSV_HEADER: &str = "source,experiment_id,macro_f1,macro_p,macro_r,best_features,best_C,reference_f1,reference_p,reference_r,note";

impl ResultsTable {
    pub fn get(&self, source: Source, id: ExperimentId) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.source == source && r.experiment_id == id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let reference = |f: fn(&(f64, f64, f64)) -> f64| r.reference.as_ref().map(|v| format!("{:.3}", f(v))).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.source.as_str(),
                r.experiment_id,
                fmt_f64(r.macro_f1),
                fmt_f64(r.macro_p),
                fmt_f64(r.macro_r),
                r.best_features,
                r.best_c,
                reference(|v| v.0),
                reference(|v| v.1),
                reference(|v| v.2),
                r.note
            ));
        }
        out
    }

    /// `results_table.csv`, `results_table.json` and one confusion CSV per row.
    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::io::write_text(&dir.join("results_table.csv"), &self.to_csv())?;
        crate::io::write_json(&dir.join("results_table.json"), self)?;
        for r in &self.rows {
            let name = format!("confusion_{}_{}.csv", r.source.as_str().to_lowercase(), r.experiment_id);
            r.report.write_confusion_csv(&dir.join(name))?;
        }
        Ok(())
    }
}

fn truncate_per_author(set: &DocumentSet, fraction: f64) -> DocumentSet {
    let mut docs = Vec::new();
    for (_, author_docs) in set.by_author() {
        let keep = ((author_docs.len() as f64) * fraction).ceil() as usize;
        docs.extend(author_docs.into_iter().take(keep).cloned());
    }
    DocumentSet::new(docs)
}

fn note_for(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::AbarAbar => "cross-validated on synthetic data; no reference row",
        _ => "",
    }
}

/// Every planned (source, id) pair in table order, restricted to the
/// available synthetic sets and the optional selector.
pub fn planned_experiments(inputs: &MatrixInputs<'_>, only: Option<ExperimentSelector>) -> Result<Vec<(Source, ExperimentId)>> {
    let mut sources = vec![];
    if inputs.abar_nglm.is_some() {
        sources.push(Source::Nglm);
    }
    if inputs.abar_rnnlm.is_some() {
        sources.push(Source::Rnnlm);
    }
    let mut plan: Vec<(Source, ExperimentId)> = ExperimentId::REAL.iter().map(|&id| (Source::Real, id)).collect();
    for &source in &sources {
        plan.extend(ExperimentId::SYNTHETIC.iter().map(|&id| (source, id)));
    }
    let Some(selector) = only else {
        return Ok(plan);
    };
    let source = match (selector.id.is_real(), selector.source) {
        (true, _) => Source::Real,
        (false, Some(s)) => s,
        (false, None) => *sources.first().ok_or_else(|| {
            Error::InvalidParameter(format!("experiment {} needs a synthetic document set", selector.id))
        })?,
    };
    if plan.contains(&(source, selector.id)) {
        Ok(vec![(source, selector.id)])
    } else {
        Err(Error::InvalidParameter(format!(
            "experiment {}:{} needs the {} synthetic document set",
            source.as_str(),
            selector.id,
            source.as_str()
        )))
    }
}

/// Run the real experiments and the four synthetic ones per available
/// synthetic set.
pub fn run_matrix(
    inputs: &MatrixInputs<'_>,
    config: &MatrixConfig,
    seed: u64,
    only: Option<ExperimentSelector>,
) -> Result<ResultsTable> {
    config.validate()?;
    let mut sets = vec![inputs.alpha, inputs.omega];
    sets.extend(inputs.abar_nglm);
    sets.extend(inputs.abar_rnnlm);
    check_roster(&sets)?;
    let plan = planned_experiments(inputs, only)?;
    let rows = plan
        .par_iter()
        .map(|&(source, id)| -> Result<ResultRow> {
            let exp_seed = derive_seed(seed, &format!("{}/{}", source.as_str(), id));
            let abar = match source {
                Source::Real => None,
                Source::Nglm => inputs.abar_nglm,
                Source::Rnnlm => inputs.abar_rnnlm,
            };
            let outcome = match id {
                ExperimentId::AbarAbar => auto_classification(abar.expect("planned"), &config.grid, config.auto_folds, exp_seed)?,
                _ => {
                    let augmented;
                    let (train_sets, test_set): (Vec<&DocumentSet>, &DocumentSet) = match id {
                        ExperimentId::AlphaOmega => (vec![inputs.alpha], inputs.omega),
                        ExperimentId::OmegaAlpha => (vec![inputs.omega], inputs.alpha),
                        ExperimentId::AbarOmega => (vec![abar.expect("planned")], inputs.omega),
                        ExperimentId::OmegaAbar => (vec![inputs.omega], abar.expect("planned")),
                        ExperimentId::AugOmega => {
                            augmented = truncate_per_author(abar.expect("planned"), config.augment_fraction);
                            (vec![inputs.alpha, &augmented], inputs.omega)
                        }
                        ExperimentId::AbarAbar => unreachable!(),
                    };
                    let spec = ExperimentSpec {
                        id,
                        source,
                        train_sets,
                        test_set,
                    };
                    run_experiment(&spec, &config.grid, exp_seed)?
                }
            };
            info!(
                "{} {}: macro F1 {:.3} (features {}, C {})",
                source.as_str(),
                id,
                outcome.report.macro_f1,
                outcome.best_features,
                outcome.best_c
            );
            Ok(ResultRow {
                source,
                experiment_id: id,
                macro_f1: outcome.report.macro_f1,
                macro_p: outcome.report.macro_precision,
                macro_r: outcome.report.macro_recall,
                best_features: outcome.best_features,
                best_c: outcome.best_c,
                reference: reference_scores(source, id),
                note: note_for(id).to_string(),
                report: outcome.report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultsTable { rows })
}

/// Per-author document counts, for diagnostics.
pub fn roster_counts(set: &DocumentSet) -> BTreeMap<String, usize> {
    set.by_author().into_iter().map(|(a, d)| (a.to_string(), d.len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, Sentence};

    fn set(per_author: usize, offset: usize, provenance: Provenance) -> DocumentSet {
        let alphabets = [("p", "abcdef"), ("q", "ghijkl"), ("r", "mnopqr")];
        let mut docs = Vec::new();
        for (author, letters) in alphabets {
            let letters: Vec<char> = letters.chars().collect();
            for d in 0..per_author {
                let sentences = (0..3)
                    .map(|s| {
                        let words: Vec<String> = (0..4)
                            .map(|w| (0..3).map(|c| letters[(d * 7 + offset + s * 3 + w * 2 + c * 5) % 6]).collect())
                            .collect();
                        Sentence::new(format!("{} {d} {offset}", words.join(" ")))
                    })
                    .collect();
                docs.push(Document::new(author, provenance, sentences));
            }
        }
        DocumentSet::new(docs)
    }

    fn config() -> MatrixConfig {
        MatrixConfig {
            grid: GridConfig {
                feature_sizes: vec![50, 200],
                c_values: vec![1.0, 10.0],
                cv_folds: 3,
            },
            auto_folds: 5,
            augment_fraction: 1.0,
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::REAL.iter().chain(&ExperimentId::SYNTHETIC) {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), *id);
        }
        let sel: ExperimentSelector = "rnnlm:aug_w".parse().unwrap();
        assert_eq!((sel.source, sel.id), (Some(Source::Rnnlm), ExperimentId::AugOmega));
        assert!("x_y".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn full_matrix_has_ten_rows() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let omega = set(6, 100, Provenance::RealOmega);
        let abar = set(6, 200, Provenance::Synthetic);
        let inputs = MatrixInputs {
            alpha: &alpha,
            omega: &omega,
            abar_nglm: Some(&abar),
            abar_rnnlm: Some(&abar),
        };
        let table = run_matrix(&inputs, &config(), 1, None).unwrap();
        assert_eq!(table.rows.len(), 10);
        assert!(table.rows.iter().all(|r| r.macro_f1 == 1.0));
        let aw = table.get(Source::Real, ExperimentId::AlphaOmega).unwrap();
        assert_eq!(aw.reference.unwrap().0, 0.833);
        assert_eq!(table.get(Source::Nglm, ExperimentId::AbarAbar).unwrap().report.total(), 18);
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 11);
        assert_eq!(csv, run_matrix(&inputs, &config(), 1, None).unwrap().to_csv());
    }

    #[test]
    fn real_rows_need_no_synthetic_data() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let omega = set(6, 100, Provenance::RealOmega);
        let inputs = MatrixInputs {
            alpha: &alpha,
            omega: &omega,
            abar_nglm: None,
            abar_rnnlm: None,
        };
        let table = run_matrix(&inputs, &config(), 1, None).unwrap();
        assert_eq!(table.rows.len(), 2);
        let only = Some("abar_w".parse().unwrap());
        assert!(run_matrix(&inputs, &config(), 1, only).is_err());
    }

    #[test]
    fn only_selects_a_single_row() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let omega = set(6, 100, Provenance::RealOmega);
        let abar = set(6, 200, Provenance::Synthetic);
        let inputs = MatrixInputs {
            alpha: &alpha,
            omega: &omega,
            abar_nglm: Some(&abar),
            abar_rnnlm: Some(&abar),
        };
        let table = run_matrix(&inputs, &config(), 1, Some("abar_w".parse().unwrap())).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].source, Source::Nglm);
        let table = run_matrix(&inputs, &config(), 1, Some("rnnlm:abar_w".parse().unwrap())).unwrap();
        assert_eq!(table.rows[0].source, Source::Rnnlm);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let spec = ExperimentSpec {
            id: ExperimentId::AlphaOmega,
            source: Source::Real,
            train_sets: vec![&alpha],
            test_set: &alpha,
        };
        assert!(matches!(run_experiment(&spec, &config().grid, 0), Err(Error::Leakage(18))));
    }

    #[test]
    fn roster_mismatch_names_missing_authors() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let omega = set(6, 100, Provenance::RealOmega);
        let omega = DocumentSet::new(omega.documents.into_iter().filter(|d| d.author != "q").collect());
        let spec = ExperimentSpec {
            id: ExperimentId::AlphaOmega,
            source: Source::Real,
            train_sets: vec![&alpha],
            test_set: &omega,
        };
        assert!(matches!(
            run_experiment(&spec, &config().grid, 0),
            Err(Error::RosterMismatch(m)) if m == vec!["q".to_string()]
        ));
    }

    #[test]
    fn training_never_reads_the_test_set() {
        let alpha = set(6, 0, Provenance::RealAlpha);
        let omega = set(6, 100, Provenance::RealOmega);
        let spec = ExperimentSpec {
            id: ExperimentId::AlphaOmega,
            source: Source::Real,
            train_sets: vec![&alpha],
            test_set: &omega,
        };
        let outcome = run_experiment(&spec, &config().grid, 0).unwrap();
        assert_eq!(outcome.test_reads_during_training, 0);
        assert_eq!(outcome.report.total(), omega.len());
    }

    #[test]
    fn mode_prefers_smaller_on_ties() {
        assert_eq!(mode(&[30000, 5000, 30000, 5000, 10000]), 5000);
        assert_eq!(mode(&[10.0, 10.0, 1.0]), 10.0);
    }
}
