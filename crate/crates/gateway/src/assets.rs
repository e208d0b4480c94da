//! Loading of the vocabulary, exemplars and cue manifest from disk.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use tactile_core::environment::{build_profiles, parse_exemplars, vocabulary_from_exemplars};
use tactile_core::feedback::CueManifest;
use tactile_core::{ClassVocabulary, EnvironmentProfile};

#[derive(Debug, Clone)]
pub struct Assets {
    pub vocab: ClassVocabulary,
    pub profiles: Vec<EnvironmentProfile>,
    pub manifest: CueManifest,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Without an explicit vocabulary, classes are grouped by the environment
/// whose exemplars count them most. Without a manifest, every class cue is
/// its own name.
pub fn load_assets(
    exemplars: &Path,
    vocab: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<Assets> {
    let raw = parse_exemplars(&read(exemplars)?)
        .with_context(|| format!("parsing {}", exemplars.display()))?;
    let vocab = match vocab {
        Some(p) => ClassVocabulary::from_json(&read(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => vocabulary_from_exemplars(&raw)?,
    };
    let profiles = build_profiles(&vocab, &raw)?;
    let manifest = match manifest {
        Some(p) => CueManifest::from_json(&read(p)?, &vocab)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => CueManifest::default_for(&vocab),
    };
    Ok(Assets {
        vocab,
        profiles,
        manifest,
    })
}
