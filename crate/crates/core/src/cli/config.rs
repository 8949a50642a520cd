use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::data::{ClassParams, Envelope, PhaseOnlyConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::train::{ModelSelection, TrainConfig};
use crate::CLASS_NAMES;

/// Sectioned `key = value` configuration. Lines starting with `#` or `;`
/// are comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header '{line}'")))?
                    .trim();
                if name.is_empty() {
                    return Err(err("empty section name".into()));
                }
                section = Some(name.to_string());
                ini.sections.entry(name.to_string()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let sec = section
                .as_ref()
                .ok_or_else(|| err(format!("key '{}' appears before any section", k.trim())))?;
            let entries = ini.sections.get_mut(sec).expect("section created on header");
            if entries.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(err(format!("duplicate key '{}' in [{sec}]", k.trim())));
            }
        }
        Ok(ini)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Display) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    /// Sets `key` only when it is absent.
    pub fn set_default(&mut self, section: &str, key: &str, value: impl Display) {
        let entries = self.sections.entry(section.to_string()).or_default();
        entries.entry(key.to_string()).or_insert_with(|| value.to_string());
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn keys(&self, section: &str) -> Vec<&str> {
        self.sections
            .get(section)
            .map(|s| s.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Parsed value of `key`, `None` when absent.
    pub fn value<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidArgument(format!("[{section}] {key}: cannot parse '{s}'"))),
        }
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.value(section, key)?
            .ok_or_else(|| Error::InvalidArgument(format!("[{section}] {key} is missing")))
    }

    /// Rejects keys of `section` outside `known`.
    pub fn check_keys(&self, section: &str, known: &[&str]) -> Result<()> {
        for k in self.keys(section) {
            if !known.contains(&k) {
                return Err(Error::InvalidArgument(format!(
                    "unknown key '{k}' in [{section}]; expected one of {}",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            if entries.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn parse_bool(section: &str, key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("[{section}] {key}: expected true/false, got '{s}'"))),
    }
}

fn parse_list<T: FromStr, const N: usize>(section: &str, key: &str, s: &str) -> Result<[T; N]> {
    let bad = || Error::InvalidArgument(format!("[{section}] {key}: expected {N} comma-separated values, got '{s}'"));
    let items: Vec<T> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    items.try_into().map_err(|_| bad())
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub const RUN_KEYS: &[&str] = &["seed", "command", "kind"];

pub fn root_seed(ini: &Ini) -> Result<u64> {
    Ok(ini.value("run", "seed")?.unwrap_or(0))
}

pub const TRAIN_KEYS: &[&str] = &[
    "epochs",
    "batch_size",
    "lr",
    "plateau_factor",
    "plateau_patience",
    "leaky_slope",
    "deterministic",
    "head_bias",
    "selection",
    "widths",
    "embed_dim",
    "format",
];

/// Fills `[train]` with defaults; `epochs` defaults to `default_epochs`.
pub fn fill_train_defaults(ini: &mut Ini, default_epochs: usize) {
    let d = TrainConfig::default();
    ini.set_default("train", "epochs", default_epochs);
    ini.set_default("train", "batch_size", d.batch_size);
    ini.set_default("train", "lr", d.lr);
    ini.set_default("train", "plateau_factor", d.plateau_factor);
    ini.set_default("train", "plateau_patience", d.plateau_patience);
    ini.set_default("train", "leaky_slope", d.leaky_slope);
    ini.set_default("train", "deterministic", d.deterministic);
    ini.set_default("train", "head_bias", d.head_bias);
    ini.set_default("train", "selection", d.selection.name());
    ini.set_default("train", "widths", join(&d.widths));
    ini.set_default("train", "embed_dim", d.embed_dim);
}

pub fn train_config(ini: &Ini) -> Result<TrainConfig> {
    ini.check_keys("train", TRAIN_KEYS)?;
    let d = TrainConfig::default();
    let sel = match ini.get("train", "selection") {
        None => d.selection,
        Some(s) => ModelSelection::parse(s)
            .ok_or_else(|| Error::InvalidArgument(format!("[train] selection: unknown '{s}' (final|best)")))?,
    };
    let bool_or = |key: &str, def: bool| -> Result<bool> {
        ini.get("train", key).map(|s| parse_bool("train", key, s)).unwrap_or(Ok(def))
    };
    let cfg = TrainConfig {
        epochs: ini.value("train", "epochs")?.unwrap_or(d.epochs),
        batch_size: ini.value("train", "batch_size")?.unwrap_or(d.batch_size),
        lr: ini.value("train", "lr")?.unwrap_or(d.lr),
        plateau_factor: ini.value("train", "plateau_factor")?.unwrap_or(d.plateau_factor),
        plateau_patience: ini.value("train", "plateau_patience")?.unwrap_or(d.plateau_patience),
        seed: root_seed(ini)?,
        leaky_slope: ini.value("train", "leaky_slope")?.unwrap_or(d.leaky_slope),
        deterministic: bool_or("deterministic", d.deterministic)?,
        head_bias: bool_or("head_bias", d.head_bias)?,
        selection: sel,
        widths: match ini.get("train", "widths") {
            Some(s) => parse_list("train", "widths", s)?,
            None => d.widths,
        },
        embed_dim: ini.value("train", "embed_dim")?.unwrap_or(d.embed_dim),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub const SYNTH_KEYS: &[&str] = &[
    "kind",
    "samples_per_class",
    "noise_floor",
    "sample_rate_hz",
    "n_chirps",
    "samples_per_chirp",
    "center_freq_hz",
    "jitter",
    "offsets",
    "slope_jitter",
    "phase_noise",
    "magnitude_floor",
];

const CLASS_KEYS: &[&str] = &["torso_hz", "limb_rate_hz", "limb_extent_hz", "envelope"];

/// Synthetic generator family selected by `[synth] kind`.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthKind {
    /// Raw recordings from the pendulum-limb model.
    Pendulum(SynthConfig),
    /// Preprocessed maps whose classes differ only in phase.
    PhaseOnly(PhaseOnlyConfig),
}

pub fn fill_synth_defaults(ini: &mut Ini) -> Result<()> {
    ini.set_default("synth", "kind", "pendulum");
    match ini.get("synth", "kind") {
        Some("pendulum") => {
            let d = SynthConfig::default();
            ini.set_default("synth", "samples_per_class", d.samples_per_class);
            ini.set_default("synth", "noise_floor", d.noise_floor);
            ini.set_default("synth", "sample_rate_hz", d.sample_rate_hz);
            ini.set_default("synth", "n_chirps", d.n_chirps);
            ini.set_default("synth", "samples_per_chirp", d.samples_per_chirp);
            ini.set_default("synth", "center_freq_hz", d.center_freq_hz);
            ini.set_default("synth", "jitter", d.jitter);
            for (name, p) in CLASS_NAMES.iter().zip(&d.classes) {
                let sec = format!("synth.{name}");
                ini.set_default(&sec, "torso_hz", p.torso_hz);
                ini.set_default(&sec, "limb_rate_hz", p.limb_rate_hz);
                ini.set_default(&sec, "limb_extent_hz", p.limb_extent_hz);
                ini.set_default(&sec, "envelope", p.envelope.name());
            }
        }
        Some("phase-only") => {
            let d = PhaseOnlyConfig::default();
            ini.set_default("synth", "samples_per_class", d.samples_per_class);
            ini.set_default("synth", "offsets", join(&d.offsets));
            ini.set_default("synth", "slope_jitter", d.slope_jitter);
            ini.set_default("synth", "phase_noise", d.phase_noise);
            ini.set_default("synth", "magnitude_floor", d.magnitude_floor);
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "[synth] kind: expected pendulum or phase-only, got '{}'",
                other.unwrap_or("")
            )))
        }
    }
    Ok(())
}

pub fn synth_kind(ini: &Ini) -> Result<SynthKind> {
    ini.check_keys("synth", SYNTH_KEYS)?;
    let seed = root_seed(ini)?;
    match ini.get("synth", "kind").unwrap_or("pendulum") {
        "pendulum" => {
            let d = SynthConfig::default();
            let mut classes = Vec::with_capacity(CLASS_NAMES.len());
            for (name, def) in CLASS_NAMES.iter().zip(&d.classes) {
                let sec = format!("synth.{name}");
                ini.check_keys(&sec, CLASS_KEYS)?;
                let envelope = match ini.get(&sec, "envelope") {
                    None => def.envelope,
                    Some(s) => Envelope::parse(s)
                        .ok_or_else(|| Error::InvalidArgument(format!("[{sec}] envelope: unknown '{s}'")))?,
                };
                classes.push(ClassParams {
                    torso_hz: ini.value(&sec, "torso_hz")?.unwrap_or(def.torso_hz),
                    limb_rate_hz: ini.value(&sec, "limb_rate_hz")?.unwrap_or(def.limb_rate_hz),
                    limb_extent_hz: ini.value(&sec, "limb_extent_hz")?.unwrap_or(def.limb_extent_hz),
                    envelope,
                });
            }
            let cfg = SynthConfig {
                classes,
                samples_per_class: ini.value("synth", "samples_per_class")?.unwrap_or(d.samples_per_class),
                noise_floor: ini.value("synth", "noise_floor")?.unwrap_or(d.noise_floor),
                seed,
                sample_rate_hz: ini.value("synth", "sample_rate_hz")?.unwrap_or(d.sample_rate_hz),
                n_chirps: ini.value("synth", "n_chirps")?.unwrap_or(d.n_chirps),
                samples_per_chirp: ini.value("synth", "samples_per_chirp")?.unwrap_or(d.samples_per_chirp),
                center_freq_hz: ini.value("synth", "center_freq_hz")?.unwrap_or(d.center_freq_hz),
                jitter: ini.value("synth", "jitter")?.unwrap_or(d.jitter),
            };
            cfg.validate()?;
            Ok(SynthKind::Pendulum(cfg))
        }
        "phase-only" => {
            let d = PhaseOnlyConfig::default();
            let cfg = PhaseOnlyConfig {
                samples_per_class: ini.value("synth", "samples_per_class")?.unwrap_or(d.samples_per_class),
                seed,
                offsets: match ini.get("synth", "offsets") {
                    Some(s) => parse_list("synth", "offsets", s)?,
                    None => d.offsets,
                },
                slope_jitter: ini.value("synth", "slope_jitter")?.unwrap_or(d.slope_jitter),
                phase_noise: ini.value("synth", "phase_noise")?.unwrap_or(d.phase_noise),
                magnitude_floor: ini.value("synth", "magnitude_floor")?.unwrap_or(d.magnitude_floor),
                ..d
            };
            cfg.validate()?;
            Ok(SynthKind::PhaseOnly(cfg))
        }
        other => Err(Error::InvalidArgument(format!(
            "[synth] kind: expected pendulum or phase-only, got '{other}'"
        ))),
    }
}
