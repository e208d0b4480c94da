//! Environment recognition and the recognize/detect state machine.
//!
//! Detected objects are the features and environments are the target
//! classes: a window of frames is summarized as a per-class count histogram
//! and classified by kNN (cosine distance) against labelled exemplars. Once an
//! environment is committed, recognition is paused until either the camera
//! moves (`LocationChanged`) or too few of the environment's characteristic
//! classes are being seen.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scene::{lit, ClassVocabulary, Frame, Scalar};

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.2;

/// Per-class detection counts over a frame window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHistogram<T> {
    pub counts: Vec<T>,
}

impl<T: Scalar> FeatureHistogram<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            counts: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|c| c.is_zero())
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            counts: self.counts.iter().map(|&c| c * factor).collect(),
        }
    }

    fn norm(&self) -> T {
        self.counts
            .iter()
            .fold(T::zero(), |acc, &c| acc + c * c)
            .sqrt()
    }
}

/// Cosine distance `1 - a.b / (|a| |b|)`. Undefined (NaN) if either vector
/// is zero; callers reject zero vectors first.
pub fn cosine_distance<T: Scalar>(a: &FeatureHistogram<T>, b: &FeatureHistogram<T>) -> T {
    let dot = a
        .counts
        .iter()
        .zip(&b.counts)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    T::one() - dot / (a.norm() * b.norm())
}

/// Counts detections per class over `window` (frames are expected to be
/// confidence-gated already).
pub fn feature_histogram<'a, T, I>(window: I, dim: usize) -> Result<FeatureHistogram<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a Frame<T>>,
{
    let mut hist = FeatureHistogram::zeros(dim);
    let mut frames = 0usize;
    for frame in window {
        frames += 1;
        for det in &frame.detections {
            match hist.counts.get_mut(det.class_id) {
                Some(c) => *c = *c + T::one(),
                None => {
                    return Err(Error::Config(format!(
                        "class id {} outside histogram dimension {dim}",
                        det.class_id
                    )))
                }
            }
        }
    }
    if frames == 0 {
        return Err(Error::InsufficientData(
            "feature histogram of an empty window",
        ));
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentProfile<T> {
    pub label: String,
    /// Characteristic class ids of the environment.
    pub class_set: Vec<usize>,
    pub exemplars: Vec<FeatureHistogram<T>>,
}

impl<T: Scalar> EnvironmentProfile<T> {
    pub fn new(
        label: impl Into<String>,
        class_set: Vec<usize>,
        exemplars: Vec<FeatureHistogram<T>>,
    ) -> Result<Self> {
        let label = label.into();
        if class_set.is_empty() {
            return Err(Error::Config(format!("environment {label} has no classes")));
        }
        Ok(Self {
            label,
            class_set,
            exemplars,
        })
    }
}

/// Fraction of `active`'s characteristic classes seen at least once in
/// `window`. An empty window has zero coverage.
pub fn detection_coverage<'a, T, I>(window: I, active: &EnvironmentProfile<T>) -> T
where
    T: Scalar,
    I: IntoIterator<Item = &'a Frame<T>>,
{
    let wanted: HashSet<usize> = active.class_set.iter().copied().collect();
    let seen: HashSet<usize> = window
        .into_iter()
        .flat_map(|f| f.detections.iter().map(|d| d.class_id))
        .filter(|id| wanted.contains(id))
        .collect();
    lit::<T>(seen.len() as f64) / lit::<T>(wanted.len() as f64)
}

/// Majority label among the `k` exemplars nearest to `query`.
///
/// Neighbours are ranked by cosine distance, equal distances by label. A
/// vote tie goes to the label whose nearest exemplar is closest, then to the
/// lexicographically smallest label.
pub fn knn_classify<T: Scalar>(
    query: &FeatureHistogram<T>,
    profiles: &[EnvironmentProfile<T>],
    k: usize,
) -> Result<String> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let total: usize = profiles.iter().map(|p| p.exemplars.len()).sum();
    if k > total {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {total} available exemplars"
        )));
    }
    if query.is_zero() {
        return Err(Error::NoEvidence);
    }

    let mut neighbours: Vec<(T, &str)> = Vec::with_capacity(total);
    for profile in profiles {
        for exemplar in &profile.exemplars {
            if exemplar.dim() != query.dim() {
                return Err(Error::Config(format!(
                    "exemplar of {} has dimension {}, query has {}",
                    profile.label,
                    exemplar.dim(),
                    query.dim()
                )));
            }
            neighbours.push((cosine_distance(query, exemplar), profile.label.as_str()));
        }
    }
    neighbours.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });

    // label -> (votes, distance of its nearest neighbour)
    let mut votes: BTreeMap<&str, (usize, T)> = BTreeMap::new();
    for &(dist, label) in &neighbours[..k] {
        votes
            .entry(label)
            .and_modify(|(n, _)| *n += 1)
            .or_insert((1, dist));
    }

    let mut best: Option<(&str, usize, T)> = None;
    for (label, (n, nearest)) in votes {
        let better = match best {
            None => true,
            Some((_, bn, bd)) => n > bn || (n == bn && nearest < bd),
        };
        if better {
            best = Some((label, n, nearest));
        }
    }
    Ok(best.map(|(label, _, _)| label.to_owned()).expect("k >= 1"))
}

#[derive(Debug, Deserialize)]
struct ExemplarRecord {
    label: String,
    counts: BTreeMap<String, f64>,
}

/// One labelled exemplar as read from disk, before being bound to a
/// vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct RawExemplar {
    pub label: String,
    pub counts: BTreeMap<String, f64>,
}

/// Parses exemplar JSONL: `{"label": "office", "counts": {"laptop": 4}}`.
pub fn parse_exemplars(text: &str) -> Result<Vec<RawExemplar>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExemplarRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some((class, n)) = rec
            .counts
            .iter()
            .find(|(_, n)| !(n.is_finite() && **n >= 0.0))
        {
            return Err(Error::Schema {
                line: i + 1,
                message: format!("count for {class} must be a non-negative number, got {n}"),
            });
        }
        out.push(RawExemplar {
            label: rec.label,
            counts: rec.counts,
        });
    }
    Ok(out)
}

/// Derives a vocabulary when none is configured: each class belongs to the
/// environment whose exemplars count it most (ties to the smaller label).
pub fn vocabulary_from_exemplars(exemplars: &[RawExemplar]) -> Result<ClassVocabulary> {
    let mut totals: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for ex in exemplars {
        for (class, &n) in &ex.counts {
            *totals
                .entry(class.as_str())
                .or_default()
                .entry(ex.label.as_str())
                .or_default() += n;
        }
    }
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ex in exemplars {
        groups.entry(ex.label.as_str()).or_default();
    }
    for (class, per_env) in &totals {
        let mut owner: Option<(&str, f64)> = None;
        for (&env, &n) in per_env {
            if owner.is_none_or(|(_, best)| n > best) {
                owner = Some((env, n));
            }
        }
        if let Some((env, _)) = owner {
            groups.entry(env).or_default().push(class);
        }
    }
    groups.retain(|_, classes| !classes.is_empty());
    ClassVocabulary::from_groups(groups)
}

/// Binds raw exemplars to `vocab` and groups them into one profile per
/// vocabulary environment.
pub fn build_profiles<T: Scalar>(
    vocab: &ClassVocabulary,
    exemplars: &[RawExemplar],
) -> Result<Vec<EnvironmentProfile<T>>> {
    let envs = vocab.environments();
    let mut profiles: Vec<EnvironmentProfile<T>> = envs
        .iter()
        .map(|env| EnvironmentProfile::new(*env, vocab.classes_of(env), Vec::new()))
        .collect::<Result<_>>()?;
    for ex in exemplars {
        let Some(slot) = envs.iter().position(|e| *e == ex.label) else {
            return Err(Error::Config(format!(
                "exemplar label {:?} is not an environment of the vocabulary",
                ex.label
            )));
        };
        let mut hist = FeatureHistogram::zeros(vocab.len());
        for (class, &n) in &ex.counts {
            let id = vocab.id_of(class).ok_or_else(|| {
                Error::Config(format!("exemplar class {class:?} is not in the vocabulary"))
            })?;
            hist.counts[id] = lit(n);
        }
        profiles[slot].exemplars.push(hist);
    }
    Ok(profiles)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognizerConfig<T> {
    /// Frames per recognition / coverage window.
    pub window: usize,
    pub k: usize,
    /// Coverage below which recognition restarts.
    pub coverage_threshold: T,
}

impl<T: Scalar> Default for RecognizerConfig<T> {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            k: DEFAULT_K,
            coverage_threshold: lit(DEFAULT_COVERAGE_THRESHOLD),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Recognizing,
    Detecting(String),
}

impl Mode {
    pub fn environment(&self) -> Option<&str> {
        match self {
            Mode::Recognizing => None,
            Mode::Detecting(env) => Some(env),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState<T> {
    pub mode: Mode,
    pub window: VecDeque<Frame<T>>,
    /// Coverage of the active environment over `window`; meaningful only
    /// while detecting.
    pub coverage: T,
}

impl<T: Scalar> Default for EngineState<T> {
    fn default() -> Self {
        Self {
            mode: Mode::Recognizing,
            window: VecDeque::new(),
            coverage: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event<T> {
    NewFrame(Frame<T>),
    LocationChanged,
    Tick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    SwitchModel(String),
    RecognitionRestarted,
}

/// Environment profiles plus the state-machine parameters.
#[derive(Debug, Clone)]
pub struct Recognizer<T> {
    profiles: Vec<EnvironmentProfile<T>>,
    config: RecognizerConfig<T>,
}

impl<T: Scalar> Recognizer<T> {
    pub fn new(profiles: Vec<EnvironmentProfile<T>>, config: RecognizerConfig<T>) -> Result<Self> {
        if config.window == 0 {
            return Err(Error::Config("window must hold at least one frame".into()));
        }
        if config.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let t = config.coverage_threshold;
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Config(format!(
                "coverage threshold {t} outside [0, 1]"
            )));
        }
        let mut total = 0;
        let mut labels = HashSet::new();
        for p in &profiles {
            if !labels.insert(p.label.as_str()) {
                return Err(Error::Config(format!("duplicate environment {}", p.label)));
            }
            for ex in &p.exemplars {
                if ex.is_zero() {
                    return Err(Error::Config(format!(
                        "all-zero exemplar for environment {}",
                        p.label
                    )));
                }
            }
            total += p.exemplars.len();
        }
        if config.k > total {
            return Err(Error::Config(format!(
                "k = {} exceeds the {total} available exemplars",
                config.k
            )));
        }
        let dims: HashSet<usize> = profiles
            .iter()
            .flat_map(|p| p.exemplars.iter().map(FeatureHistogram::dim))
            .collect();
        if dims.len() > 1 {
            return Err(Error::Config("exemplars have mixed dimensions".into()));
        }
        Ok(Self { profiles, config })
    }

    pub fn profiles(&self) -> &[EnvironmentProfile<T>] {
        &self.profiles
    }

    pub fn profile(&self, label: &str) -> Option<&EnvironmentProfile<T>> {
        self.profiles.iter().find(|p| p.label == label)
    }

    pub fn config(&self) -> &RecognizerConfig<T> {
        &self.config
    }

    fn dim(&self) -> usize {
        self.profiles
            .iter()
            .flat_map(|p| p.exemplars.first())
            .map(FeatureHistogram::dim)
            .next()
            .unwrap_or(0)
    }

    /// Advances the state machine by one event. Total: every state/event
    /// pair yields a successor.
    pub fn step(
        &self,
        mut state: EngineState<T>,
        event: Event<T>,
    ) -> (EngineState<T>, Vec<Action>) {
        let mut actions = Vec::new();
        match event {
            Event::Tick => {}
            Event::LocationChanged => {
                state = EngineState::default();
                actions.push(Action::RecognitionRestarted);
            }
            Event::NewFrame(frame) => {
                state.window.push_back(frame);
                while state.window.len() > self.config.window {
                    state.window.pop_front();
                }
                let full = state.window.len() == self.config.window;
                match state.mode.clone() {
                    Mode::Recognizing => {
                        if full {
                            let label = feature_histogram(&state.window, self.dim())
                                .and_then(|h| knn_classify(&h, &self.profiles, self.config.k));
                            // no evidence yet: keep sliding the window
                            if let Ok(label) = label {
                                state = EngineState {
                                    mode: Mode::Detecting(label.clone()),
                                    window: VecDeque::new(),
                                    coverage: T::zero(),
                                };
                                actions.push(Action::SwitchModel(label));
                            }
                        }
                    }
                    Mode::Detecting(env) => {
                        state.coverage = match self.profile(&env) {
                            Some(p) => detection_coverage(&state.window, p),
                            None => T::zero(),
                        };
                        if full && state.coverage < self.config.coverage_threshold {
                            state = EngineState::default();
                            actions.push(Action::RecognitionRestarted);
                        }
                    }
                }
            }
        }
        (state, actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BoundingBox, Detection};

    // laptop, keyboard, mouse, tv, book, phone, desk | spoon, cup
    fn vocab() -> ClassVocabulary {
        ClassVocabulary::from_groups([
            (
                "office",
                vec!["laptop", "keyboard", "mouse", "tv", "book", "phone", "desk"],
            ),
            ("kitchen", vec!["spoon", "cup"]),
        ])
        .unwrap()
    }

    fn hist(pairs: &[(usize, f64)]) -> FeatureHistogram<f64> {
        let mut h = FeatureHistogram::zeros(9);
        for &(i, n) in pairs {
            h.counts[i] = n;
        }
        h
    }

    fn frame(id: u64, classes: &[usize]) -> Frame<f64> {
        Frame::new(id, id * 100, 640, 480).with_detections(
            classes
                .iter()
                .map(|&class_id| Detection {
                    class_id,
                    confidence: 0.9,
                    bbox: BoundingBox::full(),
                })
                .collect(),
        )
    }

    fn knn_fixture() -> Vec<EnvironmentProfile<f64>> {
        let v = vocab();
        vec![
            EnvironmentProfile::new(
                "office",
                v.classes_of("office"),
                vec![hist(&[(0, 2.0), (1, 1.0)])],
            )
            .unwrap(),
            EnvironmentProfile::new("kitchen", v.classes_of("kitchen"), vec![hist(&[(7, 3.0)])])
                .unwrap(),
        ]
    }

    #[test]
    fn histogram_counts_detections() {
        let h = feature_histogram(&[frame(1, &[0, 0, 1])], 9).unwrap();
        assert_eq!(h, hist(&[(0, 2.0), (1, 1.0)]));

        let h = feature_histogram(&[frame(1, &[2]), frame(2, &[2, 3])], 9).unwrap();
        assert_eq!(h, hist(&[(2, 2.0), (3, 1.0)]));

        let h = feature_histogram(&[frame(1, &[])], 9).unwrap();
        assert!(h.is_zero());
    }

    #[test]
    fn histogram_of_empty_window_is_an_error() {
        let window: [Frame<f64>; 0] = [];
        assert!(matches!(
            feature_histogram(&window, 9),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn knn_example_picks_office() {
        // d(office) = 1 - 3/(sqrt5*sqrt2) ~= 0.0513; d(kitchen) = 1
        let q = hist(&[(0, 1.0), (1, 1.0)]);
        let d_office = cosine_distance(&q, &knn_fixture()[0].exemplars[0]);
        assert!((d_office - (1.0 - 3.0 / (5f64.sqrt() * 2f64.sqrt()))).abs() < 1e-15);
        assert_eq!(knn_classify(&q, &knn_fixture(), 1).unwrap(), "office");
    }

    #[test]
    fn knn_exact_match_has_zero_distance() {
        let q = hist(&[(7, 3.0)]);
        assert!(cosine_distance(&q, &knn_fixture()[1].exemplars[0]).abs() < 1e-15);
        assert_eq!(knn_classify(&q, &knn_fixture(), 1).unwrap(), "kitchen");
    }

    #[test]
    fn knn_majority_beats_single_nearest() {
        // query along e0; distance to (cos t, sin t) is 1 - cos t
        let at = |d: f64| {
            let c = 1.0 - d;
            hist(&[(0, c), (1, (1.0 - c * c).sqrt())])
        };
        let q = hist(&[(0, 1.0)]);
        let profiles = vec![
            EnvironmentProfile::new("office", vec![0], vec![at(0.1), at(0.1)]).unwrap(),
            EnvironmentProfile::new("kitchen", vec![7], vec![at(0.05)]).unwrap(),
        ];
        assert_eq!(knn_classify(&q, &profiles, 3).unwrap(), "office");
        assert_eq!(knn_classify(&q, &profiles, 1).unwrap(), "kitchen");
    }

    #[test]
    fn knn_vote_tie_goes_to_closest_then_smallest_label() {
        let q = hist(&[(0, 1.0)]);
        let profiles = vec![
            EnvironmentProfile::new("b", vec![0], vec![hist(&[(0, 1.0), (1, 1.0)])]).unwrap(),
            EnvironmentProfile::new("a", vec![0], vec![hist(&[(0, 1.0), (1, 2.0)])]).unwrap(),
        ];
        assert_eq!(knn_classify(&q, &profiles, 2).unwrap(), "b");

        let same = vec![
            EnvironmentProfile::new("b", vec![0], vec![hist(&[(0, 1.0), (1, 1.0)])]).unwrap(),
            EnvironmentProfile::new("a", vec![0], vec![hist(&[(0, 2.0), (1, 2.0)])]).unwrap(),
        ];
        assert_eq!(knn_classify(&q, &same, 2).unwrap(), "a");
        assert_eq!(knn_classify(&q, &same, 1).unwrap(), "a");
    }

    #[test]
    fn knn_errors() {
        let profiles = knn_fixture();
        assert_eq!(
            knn_classify(&FeatureHistogram::zeros(9), &profiles, 1),
            Err(Error::NoEvidence)
        );
        assert!(matches!(
            knn_classify(&hist(&[(0, 1.0)]), &profiles, 3),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            knn_classify(&hist(&[(0, 1.0)]), &profiles, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn coverage_counts_distinct_classes() {
        let office = &knn_fixture()[0];
        let c = detection_coverage(&[frame(1, &[0, 0]), frame(2, &[0])], office);
        assert!((c - 1.0 / 7.0).abs() < 1e-15);
        let c = detection_coverage(&[frame(1, &[0, 1, 2, 3]), frame(2, &[4, 5, 6, 7])], office);
        assert_eq!(c, 1.0);
        assert_eq!(detection_coverage(&[frame(1, &[])], office), 0.0);
    }

    #[test]
    fn exemplar_file_round_trip() {
        let text = "{\"label\":\"office\",\"counts\":{\"laptop\":2,\"keyboard\":1}}\n\n{\"label\":\"kitchen\",\"counts\":{\"spoon\":3}}\n";
        let raw = parse_exemplars(text).unwrap();
        let profiles = build_profiles::<f64>(&vocab(), &raw).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].label, "office");
        assert_eq!(profiles[0].exemplars, vec![hist(&[(0, 2.0), (1, 1.0)])]);
        assert_eq!(profiles[1].exemplars, vec![hist(&[(7, 3.0)])]);
    }

    #[test]
    fn exemplar_errors() {
        assert!(matches!(
            parse_exemplars("{oops"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_exemplars("{\"label\":\"office\",\"counts\":{\"laptop\":-1}}"),
            Err(Error::Schema { .. })
        ));
        let raw = parse_exemplars("{\"label\":\"garage\",\"counts\":{\"laptop\":1}}").unwrap();
        assert!(build_profiles::<f64>(&vocab(), &raw).is_err());
        let raw = parse_exemplars("{\"label\":\"office\",\"counts\":{\"drill\":1}}").unwrap();
        assert!(build_profiles::<f64>(&vocab(), &raw).is_err());
    }

    #[test]
    fn vocabulary_derived_from_exemplars() {
        let raw = parse_exemplars(
            "{\"label\":\"office\",\"counts\":{\"laptop\":2,\"cup\":1}}\n{\"label\":\"kitchen\",\"counts\":{\"cup\":3,\"spoon\":1}}",
        )
        .unwrap();
        let v = vocabulary_from_exemplars(&raw).unwrap();
        assert_eq!(v.environment_of(v.id_of("cup").unwrap()), Some("kitchen"));
        assert_eq!(v.environment_of(v.id_of("laptop").unwrap()), Some("office"));
        assert_eq!(v.len(), 3);
    }

    fn recognizer(window: usize) -> Recognizer<f64> {
        let config = RecognizerConfig {
            window,
            k: 1,
            coverage_threshold: 0.2,
        };
        Recognizer::new(knn_fixture(), config).unwrap()
    }

    #[test]
    fn recognizer_rejects_bad_config() {
        let bad = |window, k, t| {
            Recognizer::new(
                knn_fixture(),
                RecognizerConfig {
                    window,
                    k,
                    coverage_threshold: t,
                },
            )
            .is_err()
        };
        assert!(bad(0, 1, 0.2));
        assert!(bad(3, 0, 0.2));
        assert!(bad(3, 3, 0.2));
        assert!(bad(3, 1, 1.5));
        let zero =
            vec![
                EnvironmentProfile::new("x", vec![0], vec![FeatureHistogram::<f64>::zeros(9)])
                    .unwrap(),
            ];
        assert!(Recognizer::new(zero, RecognizerConfig::default()).is_err());
    }

    #[test]
    fn recognizing_commits_once_window_is_full() {
        let r = recognizer(3);
        let mut state = EngineState::default();
        for id in 1..=2 {
            let (s, actions) = r.step(state, Event::NewFrame(frame(id, &[0, 0, 1])));
            assert_eq!(s.mode, Mode::Recognizing);
            assert!(actions.is_empty());
            state = s;
        }
        let (state, actions) = r.step(state, Event::NewFrame(frame(3, &[0, 0, 1])));
        assert_eq!(state.mode, Mode::Detecting("office".into()));
        assert_eq!(actions, vec![Action::SwitchModel("office".into())]);
        assert!(state.window.is_empty());
    }

    #[test]
    fn recognizing_without_evidence_keeps_sliding() {
        let r = recognizer(2);
        let mut state = EngineState::default();
        for id in 1..=5 {
            let (s, actions) = r.step(state, Event::NewFrame(frame(id, &[])));
            assert_eq!(s.mode, Mode::Recognizing);
            assert!(actions.is_empty());
            assert!(s.window.len() <= 2);
            state = s;
        }
    }

    #[test]
    fn low_coverage_restarts_recognition() {
        let r = recognizer(3);
        let mut state = EngineState {
            mode: Mode::Detecting("office".into()),
            window: (1..=3).map(|id| frame(id, &[0, 1, 2, 3])).collect(),
            coverage: 4.0 / 7.0,
        };
        let mut restarted_at = None;
        for id in 4..=6 {
            let (s, actions) = r.step(state, Event::NewFrame(frame(id, &[0])));
            if actions.contains(&Action::RecognitionRestarted) {
                assert_eq!(s.mode, Mode::Recognizing);
                restarted_at = Some(id);
                break;
            }
            assert_eq!(s.mode, Mode::Detecting("office".into()));
            state = s;
        }
        assert_eq!(restarted_at, Some(6));
    }

    #[test]
    fn location_change_restarts_immediately() {
        let r = recognizer(3);
        let state = EngineState {
            mode: Mode::Detecting("office".into()),
            window: (1..=3).map(|id| frame(id, &[0, 1])).collect(),
            coverage: 2.0 / 7.0,
        };
        let (s, actions) = r.step(state, Event::LocationChanged);
        assert_eq!(s.mode, Mode::Recognizing);
        assert!(s.window.is_empty());
        assert_eq!(actions, vec![Action::RecognitionRestarted]);
    }

    #[test]
    fn tick_is_a_no_op() {
        let r = recognizer(3);
        let state = EngineState {
            mode: Mode::Detecting("office".into()),
            window: VecDeque::from(vec![frame(1, &[0])]),
            coverage: 1.0 / 7.0,
        };
        let (s, actions) = r.step(state.clone(), Event::Tick);
        assert_eq!(s, state);
        assert!(actions.is_empty());
    }
}
