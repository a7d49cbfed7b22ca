//! Stage-per-command pipeline over an on-disk workspace.
//!
//! Layout under the workspace root:
//!
//! ```text
//! split/{alpha,omega}/<author>.jsonl   sentence pools
//! docs/{alpha,omega}.jsonl             real document sets
//! models/{nglm,rnnlm}/<author>.json    language models (+ <author>_trainlog.csv)
//! synthetic/{nglm,rnnlm}/abar.jsonl    synthetic document sets (+ generation.json)
//! results/                             results tables and confusion matrices
//! analysis/                            PCA and Jaccard CSVs
//! ```
//!
//! Every output directory carries a `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, GramKind};
use crate::corpus::{self, AssemblyConfig, DocumentSet, SentencePool, Split};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentSelector, MatrixConfig, MatrixInputs, ResultsTable, Source};
use crate::generator::{self, MaxCharsRule, ModelKind};
use crate::io::{read_json, sha256_file, sha256_hex, write_json};
use crate::lm::{GenParams, Vocabulary};
use crate::nglm::NgramModel;
use crate::rnnlm::{self, RnnlmModel, TrainConfig};
use crate::seeding::derive_seed;

pub const WORKSPACE_ENV: &str = "STYLOFORGE_WORKSPACE";
pub const MANIFEST: &str = "manifest.json";
/// Training logs carry wall-clock timings and stay out of manifests.
const TRAINLOG_SUFFIX: &str = "_trainlog.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub split: u64,
    pub assembly: u64,
    pub rnnlm: u64,
    pub generation: u64,
    pub attribution: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            split: 1,
            assembly: 2,
            rnnlm: 3,
            generation: 4,
            attribution: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub nglm_seed_reset: usize,
    pub rnnlm_seed_reset: usize,
    /// Fixed character cap; estimated per author from the alpha pool when absent.
    pub max_chars: Option<usize>,
    pub max_chars_rule: MaxCharsRule,
    /// Defaults to the assembly's `n_docs`.
    pub n_docs: Option<usize>,
    /// Defaults to the assembly's `min_words`.
    pub min_words: Option<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 1.0,
            nglm_seed_reset: 1,
            rnnlm_seed_reset: 10,
            max_chars: None,
            max_chars_rule: MaxCharsRule::Max,
            n_docs: None,
            min_words: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub chunk_words: usize,
    pub top_k: usize,
    pub components: usize,
    /// Authors kept in the analyses, by word count in alpha.
    pub roster_size: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            chunk_words: 2500,
            top_k: 150,
            components: 2,
            roster_size: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    /// Falls back to `STYLOFORGE_WORKSPACE`, then `./workspace`.
    pub workspace: Option<PathBuf>,
    pub min_docs: usize,
    /// Restrict the corpus to these authors.
    pub roster: Option<Vec<String>>,
    pub seeds: Seeds,
    pub assembly: AssemblyConfig,
    pub vocab_min_count: usize,
    pub nglm_order: usize,
    pub rnnlm: TrainConfig,
    pub generation: GenerationConfig,
    pub experiments: MatrixConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_root: PathBuf::from("corpus"),
            workspace: None,
            min_docs: 20,
            roster: None,
            seeds: Seeds::default(),
            assembly: AssemblyConfig::default(),
            vocab_min_count: 1,
            nglm_order: 6,
            rnnlm: TrainConfig::default(),
            generation: GenerationConfig::default(),
            experiments: MatrixConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        if !path.is_file() {
            return Err(Error::Config(vec![format!("config file {} not found", path.display())]));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))
    }

    /// Collect every field problem rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |field: &str, result: Result<()>| {
            if let Err(e) = result {
                problems.push(format!("{field}: {e}"));
            }
        };
        if self.min_docs < 2 {
            check("min_docs", Err(Error::InvalidParameter("must be at least 2".into())));
        }
        if self.assembly.n_docs == 0 || self.assembly.min_words == 0 {
            check("assembly", Err(Error::InvalidParameter("n_docs and min_words must be positive".into())));
        }
        if self.vocab_min_count == 0 {
            check("vocab_min_count", Err(Error::InvalidParameter("must be at least 1".into())));
        }
        if self.nglm_order == 0 {
            check("nglm_order", Err(Error::InvalidParameter("must be at least 1".into())));
        }
        check("rnnlm", self.rnnlm.validate());
        for (field, reset) in [
            ("generation.nglm_seed_reset", self.generation.nglm_seed_reset),
            ("generation.rnnlm_seed_reset", self.generation.rnnlm_seed_reset),
        ] {
            let params = GenParams {
                temperature: self.generation.temperature,
                seed_reset: reset,
                max_chars: self.generation.max_chars.unwrap_or(1),
            };
            check(field, params.validate());
        }
        if let MaxCharsRule::Percentile(p) = self.generation.max_chars_rule {
            if !(p > 0.0 && p <= 100.0) {
                check("generation.max_chars_rule", Err(Error::InvalidParameter(format!("percentile {p} not in (0, 100]"))));
            }
        }
        if self.generation.n_docs == Some(0) || self.generation.min_words == Some(0) {
            check("generation", Err(Error::InvalidParameter("n_docs and min_words must be positive".into())));
        }
        check("experiments", self.experiments.validate());
        let a = &self.analysis;
        if a.chunk_words == 0 || a.top_k == 0 || a.components == 0 || a.roster_size == 0 {
            check("analysis", Err(Error::InvalidParameter("all sizes must be positive".into())));
        }
        if let Some(roster) = &self.roster {
            if roster.len() < 2 {
                check("roster", Err(Error::InvalidParameter("at least two authors required".into())));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Hash of the canonical JSON form, ignoring where the workspace lives.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("workspace");
        }
        sha256_hex(value.to_string().as_bytes())
    }

    pub fn workspace_root(&self) -> PathBuf {
        self.workspace
            .clone()
            .or_else(|| std::env::var_os(WORKSPACE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("workspace"))
    }
}

/// Provenance record written next to every stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    /// Upstream files (or upstream manifests) and their hashes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Named document sets that analyses and experiments read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetName {
    Alpha,
    Omega,
    Nglm,
    Rnnlm,
}

impl SetName {
    pub fn as_str(self) -> &'static str {
        match self {
            SetName::Alpha => "alpha",
            SetName::Omega => "omega",
            SetName::Nglm => "nglm",
            SetName::Rnnlm => "rnnlm",
        }
    }

    pub fn model_kind(self) -> Option<ModelKind> {
        match self {
            SetName::Alpha | SetName::Omega => None,
            SetName::Nglm => Some(ModelKind::Nglm),
            SetName::Rnnlm => Some(ModelKind::Rnnlm),
        }
    }
}

impl std::str::FromStr for SetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<SetName> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" | "a" => Ok(SetName::Alpha),
            "omega" | "w" => Ok(SetName::Omega),
            "nglm" | "abar_nglm" => Ok(SetName::Nglm),
            "rnnlm" | "abar_rnnlm" => Ok(SetName::Rnnlm),
            _ => Err(Error::InvalidParameter(format!("unknown document set {s:?}"))),
        }
    }
}

impl From<ModelKind> for SetName {
    fn from(kind: ModelKind) -> SetName {
        match kind {
            ModelKind::Nglm => SetName::Nglm,
            ModelKind::Rnnlm => SetName::Rnnlm,
        }
    }
}

/// A workspace bound to one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    pub root: PathBuf,
}

fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some(extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Pipeline> {
        config.validate()?;
        let root = config.workspace_root();
        Ok(Pipeline { config, root })
    }

    pub fn split_dir(&self) -> PathBuf {
        self.root.join("split")
    }

    pub fn docs_dir(&self) -> PathBuf {
        self.root.join("docs")
    }

    pub fn models_dir(&self, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(kind.as_str())
    }

    pub fn synthetic_dir(&self, kind: ModelKind) -> PathBuf {
        self.root.join("synthetic").join(kind.as_str())
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join("results")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.root.join("analysis")
    }

    pub fn set_path(&self, set: SetName) -> PathBuf {
        match set {
            SetName::Alpha => self.docs_dir().join("alpha.jsonl"),
            SetName::Omega => self.docs_dir().join("omega.jsonl"),
            SetName::Nglm => self.synthetic_dir(ModelKind::Nglm).join("abar.jsonl"),
            SetName::Rnnlm => self.synthetic_dir(ModelKind::Rnnlm).join("abar.jsonl"),
        }
    }

    fn require(&self, path: &Path, what: &str, stage: &'static str) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::MissingArtifact {
                what: what.to_string(),
                path: path.to_path_buf(),
                stage,
            })
        }
    }

    fn manifest_hash(&self, dir: &Path) -> Result<(String, String)> {
        let path = dir.join(MANIFEST);
        let key = path.strip_prefix(&self.root).unwrap_or(&path).to_string_lossy().into_owned();
        Ok((key, sha256_file(&path)?))
    }

    fn write_manifest(&self, dir: &Path, stage: &str, seeds: &[(&str, u64)], inputs: BTreeMap<String, String>) -> Result<()> {
        let mut outputs = BTreeMap::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
                let path = entry.map_err(|e| Error::io(&d, e))?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.file_name().is_some_and(|n| n != MANIFEST && !n.to_string_lossy().ends_with(TRAINLOG_SUFFIX)) {
                    let key = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().into_owned();
                    outputs.insert(key, sha256_file(&path)?);
                }
            }
        }
        let manifest = Manifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config.hash(),
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            inputs,
            outputs,
        };
        write_json(&dir.join(MANIFEST), &manifest)
    }

    /// Authors with an alpha pool, sorted.
    pub fn authors(&self) -> Result<Vec<String>> {
        let dir = self.split_dir().join("alpha");
        self.require(&dir, "sentence pools", "split")?;
        Ok(list_files(&dir, "jsonl")?.iter().map(|p| stem(p)).collect())
    }

    pub fn pool(&self, author: &str, split: Split) -> Result<SentencePool> {
        let path = self.split_dir().join(split.as_str()).join(format!("{author}.jsonl"));
        self.require(&path, "sentence pool", "split")?;
        SentencePool::read_jsonl(&path, author, split)
    }

    pub fn document_set(&self, set: SetName) -> Result<DocumentSet> {
        let path = self.set_path(set);
        let stage = match set {
            SetName::Alpha | SetName::Omega => "build-docs",
            SetName::Nglm | SetName::Rnnlm => "generate",
        };
        self.require(&path, &format!("{} document set", set.as_str()), stage)?;
        DocumentSet::read_jsonl(&path)
    }

    /// Ingest the corpus and write the alpha/omega sentence pools.
    pub fn split(&self) -> Result<()> {
        let root = &self.config.corpus_root;
        if !root.is_dir() {
            return Err(Error::Config(vec![format!("corpus_root: {} is not a directory", root.display())]));
        }
        let mut raw = corpus::ingest(root, self.config.min_docs)?;
        if let Some(roster) = &self.config.roster {
            let missing: Vec<String> = roster
                .iter()
                .filter(|a| !raw.author_ids().contains(&a.as_str()))
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(Error::RosterMismatch(missing));
            }
            raw.restrict_to(roster);
        }
        let pools = corpus::split_alpha_omega(&raw, self.config.seeds.split)?;
        let dir = self.split_dir();
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        for (author, (alpha, omega)) in &pools {
            alpha.write_jsonl(&dir.join("alpha").join(format!("{author}.jsonl")))?;
            omega.write_jsonl(&dir.join("omega").join(format!("{author}.jsonl")))?;
            info!(
                "{author}: alpha {} sentences / {} words, omega {} sentences / {} words",
                alpha.sentences.len(),
                alpha.total_words(),
                omega.sentences.len(),
                omega.total_words()
            );
        }
        let mut inputs = BTreeMap::new();
        for author in &raw.authors {
            for (path, text) in author.source_paths.iter().zip(&author.texts) {
                let key = path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned();
                inputs.insert(key, sha256_hex(text.as_bytes()));
            }
        }
        self.write_manifest(&dir, "split", &[("split", self.config.seeds.split)], inputs)
    }

    /// Assemble the real alpha and omega document sets.
    pub fn build_docs(&self) -> Result<()> {
        let authors = self.authors()?;
        let dir = self.docs_dir();
        for split in [Split::Alpha, Split::Omega] {
            let sets = authors
                .iter()
                .map(|a| corpus::assemble_documents(&self.pool(a, split)?, &self.config.assembly, self.config.seeds.assembly))
                .collect::<Result<Vec<_>>>()?;
            DocumentSet::concat(&sets).write_jsonl(&dir.join(format!("{}.jsonl", split.as_str())))?;
        }
        let inputs = BTreeMap::from([self.manifest_hash(&self.split_dir())?]);
        self.write_manifest(&dir, "build-docs", &[("assembly", self.config.seeds.assembly)], inputs)
    }

    /// Seed used to train `author`'s RNNLM.
    pub fn rnnlm_seed(&self, author: &str) -> u64 {
        derive_seed(self.config.seeds.rnnlm, &format!("rnnlm/{author}"))
    }

    /// Fit one model per author (or only `author`) on the alpha pool.
    pub fn train(&self, kind: ModelKind, author: Option<&str>) -> Result<()> {
        let all = self.authors()?;
        let authors: Vec<String> = match author {
            Some(a) if all.iter().any(|x| x == a) => vec![a.to_string()],
            Some(a) => return Err(Error::RosterMismatch(vec![a.to_string()])),
            None => all,
        };
        let dir = self.models_dir(kind);
        authors.par_iter().try_for_each(|author| -> Result<()> {
            let pool = self.pool(author, Split::Alpha)?;
            let vocab = Vocabulary::build(&pool.sentences, self.config.vocab_min_count)?;
            let path = dir.join(format!("{author}.json"));
            match kind {
                ModelKind::Nglm => NgramModel::fit(&pool.sentences, vocab, self.config.nglm_order)?.save(&path)?,
                ModelKind::Rnnlm => {
                    let config = TrainConfig {
                        seed: self.rnnlm_seed(author),
                        ..self.config.rnnlm
                    };
                    let (model, log) = rnnlm::train_rnnlm(&pool.sentences, &vocab, &config)?;
                    model.save(&path)?;
                    log.write_csv(&dir.join(format!("{author}{TRAINLOG_SUFFIX}")))?;
                }
            }
            info!("trained {} for {author}", kind.as_str());
            Ok(())
        })?;
        let inputs = BTreeMap::from([self.manifest_hash(&self.split_dir())?]);
        self.write_manifest(&dir, &format!("train {}", kind.as_str()), &[("rnnlm", self.config.seeds.rnnlm)], inputs)
    }

    fn generation_params(&self, kind: ModelKind, pool: &SentencePool) -> Result<GenParams> {
        let g = &self.config.generation;
        let max_chars = match g.max_chars {
            Some(m) => m,
            None => generator::estimate_max_chars_with(pool, g.max_chars_rule)?,
        };
        Ok(GenParams {
            temperature: g.temperature,
            seed_reset: match kind {
                ModelKind::Nglm => g.nglm_seed_reset,
                ModelKind::Rnnlm => g.rnnlm_seed_reset,
            },
            max_chars,
        })
    }

    /// Generate the synthetic document set of one model family.
    pub fn generate(&self, kind: ModelKind) -> Result<()> {
        let authors = self.authors()?;
        let models_dir = self.models_dir(kind);
        let mut pools = BTreeMap::new();
        let mut params = BTreeMap::new();
        for author in &authors {
            self.require(&models_dir.join(format!("{author}.json")), &format!("{} model", kind.as_str()), "train")?;
            let pool = self.pool(author, Split::Alpha)?;
            params.insert(author.clone(), self.generation_params(kind, &pool)?);
            pools.insert(author.clone(), pool);
        }
        let n_docs = self.config.generation.n_docs.unwrap_or(self.config.assembly.n_docs);
        let min_words = self.config.generation.min_words.unwrap_or(self.config.assembly.min_words);
        let seed = derive_seed(self.config.seeds.generation, kind.as_str());
        let (set, metadata) = match kind {
            ModelKind::Nglm => {
                let models = authors
                    .iter()
                    .map(|a| Ok((a.clone(), NgramModel::load(&models_dir.join(format!("{a}.json")))?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                generator::generate_corpus(&models, &pools, n_docs, min_words, &params, seed)?
            }
            ModelKind::Rnnlm => {
                let models = authors
                    .iter()
                    .map(|a| Ok((a.clone(), RnnlmModel::load(&models_dir.join(format!("{a}.json")))?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                generator::generate_corpus(&models, &pools, n_docs, min_words, &params, seed)?
            }
        };
        let dir = self.synthetic_dir(kind);
        set.write_jsonl(&dir.join("abar.jsonl"))?;
        metadata.write(&dir.join("generation.json"))?;
        let inputs = BTreeMap::from([self.manifest_hash(&self.split_dir())?, self.manifest_hash(&models_dir)?]);
        self.write_manifest(&dir, &format!("generate {}", kind.as_str()), &[("generation", seed)], inputs)
    }

    /// Run the experiment matrix over `sources`, or the single selected
    /// experiment. Writes into `results/` (or `results/<source>_<id>/`).
    pub fn experiment(&self, sources: &[Source], only: Option<ExperimentSelector>) -> Result<ResultsTable> {
        let alpha = self.document_set(SetName::Alpha)?;
        let omega = self.document_set(SetName::Omega)?;
        let wanted: Vec<ModelKind> = match only {
            Some(ExperimentSelector { id, .. }) if id.is_real() => vec![],
            Some(ExperimentSelector { source: Some(Source::Nglm), .. }) => vec![ModelKind::Nglm],
            Some(ExperimentSelector { source: Some(Source::Rnnlm), .. }) => vec![ModelKind::Rnnlm],
            Some(_) => vec![[ModelKind::Nglm, ModelKind::Rnnlm]
                .into_iter()
                .find(|k| self.set_path((*k).into()).exists())
                .unwrap_or(ModelKind::Nglm)],
            None => [(Source::Nglm, ModelKind::Nglm), (Source::Rnnlm, ModelKind::Rnnlm)]
                .into_iter()
                .filter(|(s, _)| sources.contains(s))
                .map(|(_, k)| k)
                .collect(),
        };
        let mut synthetic: BTreeMap<ModelKind, DocumentSet> = BTreeMap::new();
        for kind in wanted {
            synthetic.insert(kind, self.document_set(kind.into())?);
        }
        let inputs = MatrixInputs {
            alpha: &alpha,
            omega: &omega,
            abar_nglm: synthetic.get(&ModelKind::Nglm),
            abar_rnnlm: synthetic.get(&ModelKind::Rnnlm),
        };
        let table = experiments::run_matrix(&inputs, &self.config.experiments, self.config.seeds.attribution, only)?;
        let dir = match (only, table.rows.first()) {
            (Some(_), Some(row)) => self
                .results_dir()
                .join(format!("{}_{}", row.source.as_str().to_lowercase(), row.experiment_id)),
            _ => self.results_dir(),
        };
        table.write(&dir)?;
        let mut manifest_inputs = BTreeMap::from([self.manifest_hash(&self.docs_dir())?]);
        for kind in synthetic.keys() {
            manifest_inputs.extend([self.manifest_hash(&self.synthetic_dir(*kind))?]);
        }
        self.write_manifest(&dir, "experiment", &[("attribution", self.config.seeds.attribution)], manifest_inputs)?;
        Ok(table)
    }

    fn analysis_roster(&self) -> Result<Vec<String>> {
        Ok(analysis::most_prolific(&self.document_set(SetName::Alpha)?, self.config.analysis.roster_size))
    }

    fn analysis_inputs(&self, sets: &[SetName]) -> Result<BTreeMap<String, String>> {
        let mut inputs = BTreeMap::from([self.manifest_hash(&self.docs_dir())?]);
        for kind in sets.iter().filter_map(|s| s.model_kind()) {
            inputs.extend([self.manifest_hash(&self.synthetic_dir(kind))?]);
        }
        Ok(inputs)
    }

    /// PCA over the chunked union of `sets`; returns the tag used in file names.
    pub fn analyze_pca(&self, sets: &[SetName], tag: Option<&str>) -> Result<String> {
        if sets.is_empty() {
            return Err(Error::InvalidParameter("pca needs at least one document set".into()));
        }
        let roster = self.analysis_roster()?;
        let loaded = sets.iter().map(|s| self.document_set(*s)).collect::<Result<Vec<_>>>()?;
        let mut docs = DocumentSet::concat(&loaded);
        docs.documents.retain(|d| roster.contains(&d.author));
        let a = &self.config.analysis;
        let (grams, profiles, pca) = analysis::pca_of_documents(&docs, a.chunk_words, a.top_k, a.components)?;
        let tag = tag.map(str::to_string).unwrap_or_else(|| sets.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("_"));
        let dir = self.analysis_dir();
        analysis::write_pca(&dir, &tag, &grams, &profiles, &pca)?;
        self.write_manifest(&dir, "analyze", &[], self.analysis_inputs(sets)?)?;
        Ok(tag)
    }

    /// Raw and mean-normalized Jaccard matrices between two sets.
    pub fn analyze_jaccard(&self, a: SetName, b: SetName, kind: GramKind, tag: Option<&str>) -> Result<analysis::JaccardMatrix> {
        let roster = self.analysis_roster()?;
        let raw = analysis::jaccard_matrix(&self.document_set(a)?, &self.document_set(b)?, &roster, kind)?;
        let normalized = analysis::mean_normalize(&raw)?;
        let tag = tag
            .map(str::to_string)
            .unwrap_or_else(|| format!("{}_{}_{}", a.as_str(), b.as_str(), kind.as_str()));
        let dir = self.analysis_dir();
        raw.write_csv(&dir.join(format!("jaccard_{tag}.csv")))?;
        normalized.write_csv(&dir.join(format!("jaccard_{tag}_normalized.csv")))?;
        info!(
            "jaccard {tag}: mean diagonal {:.4}, diagonal statistic {:.4}",
            raw.mean_diagonal(),
            raw.diagonal_statistic()
        );
        self.write_manifest(&dir, "analyze", &[], self.analysis_inputs(&[a, b])?)?;
        Ok(raw)
    }

    /// Every stage in order: split, documents, both model families,
    /// generation and the full experiment matrix.
    pub fn run_all(&self) -> Result<ResultsTable> {
        self.split()?;
        self.build_docs()?;
        for kind in [ModelKind::Nglm, ModelKind::Rnnlm] {
            self.train(kind, None)?;
            self.generate(kind)?;
        }
        self.experiment(&[Source::Real, Source::Nglm, Source::Rnnlm], None)
    }
}

/// Read a stage manifest.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    read_json(&dir.join(MANIFEST))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_round_trip() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        let partial: RunConfig = serde_json::from_str(r#"{"nglm_order": 3}"#).unwrap();
        assert_eq!(partial.nglm_order, 3);
        assert_eq!(partial.assembly, AssemblyConfig::default());
    }

    #[test]
    fn validation_lists_every_field() {
        let mut config = RunConfig {
            nglm_order: 0,
            ..RunConfig::default()
        };
        config.generation.temperature = -1.0;
        config.experiments.grid.cv_folds = 1;
        let Err(Error::Config(problems)) = config.validate() else {
            panic!("expected a config error");
        };
        assert!(problems.iter().any(|p| p.starts_with("nglm_order")));
        assert!(problems.iter().any(|p| p.starts_with("generation.nglm_seed_reset")));
        assert!(problems.iter().any(|p| p.starts_with("experiments")));
    }

    #[test]
    fn hash_ignores_workspace() {
        let a = RunConfig::default();
        let b = RunConfig {
            workspace: Some("elsewhere".into()),
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig {
            nglm_order: 5,
            ..RunConfig::default()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn missing_upstream_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let pipeline = Pipeline::new(RunConfig {
            workspace: Some(dir.path().to_path_buf()),
            ..RunConfig::default()
        })
        .unwrap();
        match pipeline.build_docs() {
            Err(Error::MissingArtifact { path, stage, .. }) => {
                assert_eq!(stage, "split");
                assert!(path.ends_with("split/alpha"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
