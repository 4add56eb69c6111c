use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::data::DatasetSpec;
use crate::diffusion::{Condition, DenoiserArch, DenoiserTrainConfig, NoiseSchedule};
use crate::error::{Error, Result};
use crate::generator::{GeneratorArch, PretrainConfig};
use crate::metrics::ClassifierConfig;
use crate::sds::{SdsConfig, Weighting};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderMode {
    Identity,
    Orthogonal,
}

/// Every tunable of a run. Stage seeds inside the nested configs are not
/// configured directly; they are derived from `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: String,
    pub classes: Vec<DatasetSpec>,
    pub samples_per_class: usize,
    pub source_class: usize,
    pub reference_samples: usize,
    pub schedule_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub denoiser_hidden: Vec<usize>,
    pub denoiser: DenoiserTrainConfig,
    pub generator: GeneratorArch,
    pub pretrain: PretrainConfig,
    pub encoder: EncoderMode,
    pub classifier: ClassifierConfig,
    pub sds: SdsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: "out".into(),
            classes: vec![
                DatasetSpec::isotropic(-2.0, 0.0, 0.25),
                DatasetSpec::isotropic(2.0, 0.0, 0.25),
            ],
            samples_per_class: 2000,
            source_class: 0,
            reference_samples: 512,
            schedule_steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            denoiser_hidden: vec![128, 128, 128],
            denoiser: DenoiserTrainConfig::default(),
            generator: GeneratorArch::default(),
            pretrain: PretrainConfig::default(),
            encoder: EncoderMode::Identity,
            classifier: ClassifierConfig::default(),
            sds: SdsConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "seed",
    "output.dir",
    "data.samples_per_class",
    "data.source_class",
    "data.reference_samples",
    "schedule.steps",
    "schedule.beta_start",
    "schedule.beta_end",
    "denoiser.hidden",
    "denoiser.steps",
    "denoiser.batch",
    "denoiser.lr",
    "denoiser.p_uncond",
    "generator.latent_dim",
    "generator.style_dim",
    "generator.map_hidden",
    "generator.layers",
    "generator.hidden",
    "generator.steps",
    "generator.batch",
    "generator.lr",
    "generator.bandwidth",
    "encoder",
    "classifier.hidden",
    "classifier.steps",
    "classifier.batch",
    "classifier.lr",
    "sds.s",
    "sds.t_min",
    "sds.t_max",
    "sds.lambda_dir",
    "sds.lambda_rec",
    "sds.lr",
    "sds.iters",
    "sds.batch",
    "sds.k",
    "sds.probe_iters",
    "sds.target",
    "sds.weighting",
    "sds.share_noise",
    "sds.eval_every",
    "sds.eval_samples",
];

const CLASS_PREFIX: &str = "data.class.";

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn list(v: &str) -> std::result::Result<Vec<usize>, String> {
    v.split(',').map(|p| num(p.trim())).collect()
}

impl ExperimentConfig {
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(self.schedule_steps, self.beta_start, self.beta_end)
    }

    pub fn denoiser_arch(&self) -> DenoiserArch {
        DenoiserArch {
            latent_dim: 2,
            classes: self.classes.len(),
            hidden: self.denoiser_hidden.clone(),
        }
    }

    pub fn target_class(&self) -> usize {
        match self.sds.target {
            Condition::Class(k) => k,
            Condition::Null => unreachable!("validated"),
        }
    }

    fn get(&self, key: &str) -> String {
        let sds = &self.sds;
        match key {
            "seed" => self.seed.to_string(),
            "output.dir" => self.output_dir.clone(),
            "data.samples_per_class" => self.samples_per_class.to_string(),
            "data.source_class" => self.source_class.to_string(),
            "data.reference_samples" => self.reference_samples.to_string(),
            "schedule.steps" => self.schedule_steps.to_string(),
            "schedule.beta_start" => self.beta_start.to_string(),
            "schedule.beta_end" => self.beta_end.to_string(),
            "denoiser.hidden" => {
                self.denoiser_hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")
            }
            "denoiser.steps" => self.denoiser.steps.to_string(),
            "denoiser.batch" => self.denoiser.batch.to_string(),
            "denoiser.lr" => self.denoiser.lr.to_string(),
            "denoiser.p_uncond" => self.denoiser.p_uncond.to_string(),
            "generator.latent_dim" => self.generator.latent_dim.to_string(),
            "generator.style_dim" => self.generator.style_dim.to_string(),
            "generator.map_hidden" => self.generator.map_hidden.to_string(),
            "generator.layers" => self.generator.layers.to_string(),
            "generator.hidden" => self.generator.hidden.to_string(),
            "generator.steps" => self.pretrain.steps.to_string(),
            "generator.batch" => self.pretrain.batch.to_string(),
            "generator.lr" => self.pretrain.lr.to_string(),
            "generator.bandwidth" => match self.pretrain.bandwidth {
                Some(h) => h.to_string(),
                None => "median".into(),
            },
            "encoder" => match self.encoder {
                EncoderMode::Identity => "identity".into(),
                EncoderMode::Orthogonal => "orthogonal".into(),
            },
            "classifier.hidden" => self.classifier.hidden.to_string(),
            "classifier.steps" => self.classifier.steps.to_string(),
            "classifier.batch" => self.classifier.batch.to_string(),
            "classifier.lr" => self.classifier.lr.to_string(),
            "sds.s" => sds.s.to_string(),
            "sds.t_min" => sds.t_min.to_string(),
            "sds.t_max" => sds.t_max.to_string(),
            "sds.lambda_dir" => sds.lambda_dir.to_string(),
            "sds.lambda_rec" => sds.lambda_rec.to_string(),
            "sds.lr" => sds.lr.to_string(),
            "sds.iters" => sds.iters.to_string(),
            "sds.batch" => sds.batch.to_string(),
            "sds.k" => sds.k.to_string(),
            "sds.probe_iters" => sds.probe_iters.to_string(),
            "sds.target" => self.target_class().to_string(),
            "sds.weighting" => match sds.weighting {
                Weighting::OneMinusAlphaBar => "one_minus_alpha_bar".into(),
                Weighting::Constant1 => "constant".into(),
            },
            "sds.share_noise" => sds.share_noise.to_string(),
            "sds.eval_every" => sds.eval_every.to_string(),
            "sds.eval_samples" => sds.eval_samples.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Assign one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let sds = &mut self.sds;
        match key {
            "seed" => self.seed = num(v)?,
            "output.dir" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.output_dir = v.to_string()
            }
            "data.samples_per_class" => self.samples_per_class = num(v)?,
            "data.source_class" => self.source_class = num(v)?,
            "data.reference_samples" => self.reference_samples = num(v)?,
            "schedule.steps" => self.schedule_steps = num(v)?,
            "schedule.beta_start" => self.beta_start = num(v)?,
            "schedule.beta_end" => self.beta_end = num(v)?,
            "denoiser.hidden" => self.denoiser_hidden = list(v)?,
            "denoiser.steps" => self.denoiser.steps = num(v)?,
            "denoiser.batch" => self.denoiser.batch = num(v)?,
            "denoiser.lr" => self.denoiser.lr = num(v)?,
            "denoiser.p_uncond" => self.denoiser.p_uncond = num(v)?,
            "generator.latent_dim" => self.generator.latent_dim = num(v)?,
            "generator.style_dim" => self.generator.style_dim = num(v)?,
            "generator.map_hidden" => self.generator.map_hidden = num(v)?,
            "generator.layers" => self.generator.layers = num(v)?,
            "generator.hidden" => self.generator.hidden = num(v)?,
            "generator.steps" => self.pretrain.steps = num(v)?,
            "generator.batch" => self.pretrain.batch = num(v)?,
            "generator.lr" => self.pretrain.lr = num(v)?,
            "generator.bandwidth" => {
                self.pretrain.bandwidth = if v == "median" { None } else { Some(num(v)?) }
            }
            "encoder" => {
                self.encoder = match v {
                    "identity" => EncoderMode::Identity,
                    "orthogonal" => EncoderMode::Orthogonal,
                    _ => return Err(format!("expected identity or orthogonal, got `{v}`")),
                }
            }
            "classifier.hidden" => self.classifier.hidden = num(v)?,
            "classifier.steps" => self.classifier.steps = num(v)?,
            "classifier.batch" => self.classifier.batch = num(v)?,
            "classifier.lr" => self.classifier.lr = num(v)?,
            "sds.s" => sds.s = num(v)?,
            "sds.t_min" => sds.t_min = num(v)?,
            "sds.t_max" => sds.t_max = num(v)?,
            "sds.lambda_dir" => sds.lambda_dir = num(v)?,
            "sds.lambda_rec" => sds.lambda_rec = num(v)?,
            "sds.lr" => sds.lr = num(v)?,
            "sds.iters" => sds.iters = num(v)?,
            "sds.batch" => sds.batch = num(v)?,
            "sds.k" => sds.k = num(v)?,
            "sds.probe_iters" => sds.probe_iters = num(v)?,
            "sds.target" => sds.target = Condition::Class(num(v)?),
            "sds.weighting" => {
                sds.weighting = match v {
                    "one_minus_alpha_bar" => Weighting::OneMinusAlphaBar,
                    "constant" => Weighting::Constant1,
                    _ => return Err(format!("expected one_minus_alpha_bar or constant, got `{v}`")),
                }
            }
            "sds.share_noise" => sds.share_noise = flag(v)?,
            "sds.eval_every" => sds.eval_every = num(v)?,
            "sds.eval_samples" => sds.eval_samples = num(v)?,
            _ => {
                if let Some(idx) = key.strip_prefix(CLASS_PREFIX) {
                    let idx: usize = idx.parse().map_err(|_| format!("unknown key `{key}`"))?;
                    let spec: DatasetSpec = v.parse()?;
                    match idx.cmp(&self.classes.len()) {
                        std::cmp::Ordering::Less => self.classes[idx] = spec,
                        std::cmp::Ordering::Equal => self.classes.push(spec),
                        std::cmp::Ordering::Greater => {
                            return Err(format!(
                                "classes must be numbered consecutively; next is {CLASS_PREFIX}{}",
                                self.classes.len()
                            ))
                        }
                    }
                } else {
                    return Err(format!("unknown key `{key}`"));
                }
            }
        }
        Ok(())
    }

    /// Cross-field checks. Errors start with the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if self.classes.len() < 2 {
            return bad("data.class.1", "at least two classes are required".into());
        }
        if self.source_class >= self.classes.len() {
            return bad("data.source_class", format!("no class {}", self.source_class));
        }
        if self.target_class() >= self.classes.len() {
            return bad("sds.target", format!("no class {}", self.target_class()));
        }
        if self.samples_per_class == 0 {
            return bad("data.samples_per_class", "must be positive".into());
        }
        if self.reference_samples < 3 {
            return bad("data.reference_samples", "needs at least 3 samples".into());
        }
        if let Err(e) = self.schedule() {
            return bad("schedule.steps", e.to_string());
        }
        if self.denoiser_hidden.is_empty() || self.denoiser_hidden.contains(&0) {
            return bad("denoiser.hidden", "widths must be positive".into());
        }
        if let Err(e) = self.denoiser.validate() {
            let key = match e.to_string() {
                m if m.contains("p_uncond") => "denoiser.p_uncond",
                m if m.contains("batch") => "denoiser.batch",
                _ => "denoiser.lr",
            };
            return bad(key, e.to_string());
        }
        let g = &self.generator;
        for (key, v) in [
            ("generator.latent_dim", g.latent_dim),
            ("generator.style_dim", g.style_dim),
            ("generator.map_hidden", g.map_hidden),
            ("generator.layers", g.layers),
            ("generator.hidden", g.hidden),
            ("classifier.hidden", self.classifier.hidden),
            ("classifier.batch", self.classifier.batch),
        ] {
            if v == 0 {
                return bad(key, "must be positive".into());
            }
        }
        if self.pretrain.batch < 2 {
            return bad("generator.batch", "must be at least 2".into());
        }
        for (key, v) in [("generator.lr", self.pretrain.lr), ("classifier.lr", self.classifier.lr)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        if let Some(h) = self.pretrain.bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return bad("generator.bandwidth", format!("must be positive or `median`, got {h}"));
            }
        }
        self.sds.validate(self.schedule_steps, g.layers)
    }

    /// Fully resolved `key = value` listing; parsing it yields an equal config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in &KEYS[..2] {
            writeln!(out, "{key} = {}", self.get(key)).unwrap();
        }
        for (i, spec) in self.classes.iter().enumerate() {
            writeln!(out, "{CLASS_PREFIX}{i} = {spec}").unwrap();
        }
        for key in &KEYS[2..] {
            writeln!(out, "{key} = {}", self.get(key)).unwrap();
        }
        out
    }
}

/// Parse flat `key = value` text with `#` comments; unset keys keep defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: "<config>".into(),
        line,
        msg,
    };
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        last = n;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(n, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(prev) = lines.get(key) {
            return Err(parse_err(n, format!("`{key}` already set on line {prev}")));
        }
        cfg.set(key, value).map_err(|m| parse_err(n, format!("{key}: {m}")))?;
        lines.insert(key.to_string(), n);
    }
    if let Err(e) = cfg.validate() {
        let msg = match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        let key = msg.split(':').next().unwrap_or("");
        let line = lines.get(key).copied().unwrap_or(last.max(1));
        return Err(parse_err(line, msg));
    }
    Ok(cfg)
}
