//! One language game: the speaker picks a distinctive description of the
//! latest ball movement, says it, and the hearer checks whether it makes
//! sense from where the speaker stands or from where the hearer stands.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arena::{self, ArenaConfig, BodyId, NoiseModel, SituationModel};
use crate::concepts::{rank_order, CategoryId, CategoryView, Ontology};
use crate::features::{self, ChannelScaler, RawFeatures, ScaledFeatures};
use crate::lexicon::{Candidate, EntryKey, LexEntry, Lexicon, Meaning, Parse, Predicate, INITIAL_ENTRY_SCORE};
use crate::perspective::transform_model;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Both agents see through the same camera.
    A,
    /// Each agent sees through its own camera; perspective is ignored.
    B,
    /// Own cameras plus perspective transform; perspective stays implicit.
    C,
    /// As C, but the chosen perspective is part of the expressed meaning.
    D,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::A, Condition::B, Condition::C, Condition::D];

    pub fn takes_perspective(self) -> bool {
        matches!(self, Condition::C | Condition::D)
    }

    pub fn marks_perspective(self) -> bool {
        self == Condition::D
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Condition::A),
            "b" => Ok(Condition::B),
            "c" => Ok(Condition::C),
            "d" => Ok(Condition::D),
            _ => Err(format!("unknown condition {s:?} (expected a, b, c or d)")),
        }
    }
}

/// Whose eyes a view represents, in terms of the current game roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Viewpoint {
    Speaker,
    Hearer,
}

impl Viewpoint {
    /// Perspective markers are deictic relative to the speaker.
    pub fn marker(self) -> Predicate {
        match self {
            Viewpoint::Speaker => Predicate::OwnPerspective,
            Viewpoint::Hearer => Predicate::OtherPerspective,
        }
    }

    pub fn from_marker(p: Predicate) -> Option<Viewpoint> {
        match p {
            Predicate::OwnPerspective => Some(Viewpoint::Speaker),
            Predicate::OtherPerspective => Some(Viewpoint::Hearer),
            Predicate::Category(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub arena: ArenaConfig,
    pub noise: NoiseModel,
    /// Events watched per game, topic included.
    pub context_size: usize,
    pub score_delta: f64,
    pub max_depth: u8,
    /// Condition D variant: mark perspective only when the chosen category
    /// would not also work from the other viewpoint.
    pub conditional_marking: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            arena: ArenaConfig::default(),
            noise: NoiseModel::default(),
            context_size: 2,
            score_delta: 0.05,
            max_depth: 4,
            conditional_marking: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.noise.validate()?;
        if self.context_size < 2 {
            return Err(Error::Config(format!(
                "context size must be >= 2 (topic plus one earlier event), got {}",
                self.context_size
            )));
        }
        if !(self.score_delta > 0.0 && self.score_delta <= 1.0) {
            return Err(Error::Config(format!("score delta must be in (0, 1], got {}", self.score_delta)));
        }
        if self.max_depth == 0 || self.max_depth > 30 {
            return Err(Error::Config(format!("max depth must be in 1..=30, got {}", self.max_depth)));
        }
        Ok(())
    }
}

/// A perceived event as remembered by an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub model: SituationModel,
    pub raw: RawFeatures,
}

/// Topic and context scaled from one viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub viewpoint: Viewpoint,
    pub topic: ScaledFeatures,
    pub context: Vec<ScaledFeatures>,
}

impl View {
    pub fn saliency(&self) -> [f64; features::CHANNEL_COUNT] {
        features::saliency(&self.topic, &self.context).expect("views always carry context")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub ontology: Ontology,
    pub lexicon: Lexicon,
    pub scaler: ChannelScaler,
    memory: VecDeque<Observation>,
    memory_size: usize,
}

impl Agent {
    pub fn new(id: usize, memory_size: usize) -> Self {
        Agent {
            id,
            ontology: Ontology::new(),
            lexicon: Lexicon::new(),
            scaler: ChannelScaler::new(),
            memory: VecDeque::with_capacity(memory_size),
            memory_size,
        }
    }

    pub fn memory(&self) -> impl Iterator<Item = &Observation> {
        self.memory.iter()
    }

    /// Record perceived events in order; the last becomes the topic.
    pub fn perceive(&mut self, models: &[SituationModel]) {
        for model in models {
            let raw = features::extract(model);
            self.scaler.observe(&raw);
            if self.memory.len() == self.memory_size {
                self.memory.pop_front();
            }
            self.memory.push_back(Observation { model: *model, raw });
        }
    }

    fn view_of(&self, viewpoint: Viewpoint, raws: Vec<RawFeatures>) -> Option<View> {
        let (topic, context) = raws.split_last()?;
        if context.is_empty() {
            return None;
        }
        Some(View {
            viewpoint,
            topic: self.scaler.scale(topic),
            context: context.iter().map(|r| self.scaler.scale(r)).collect(),
        })
    }

    /// The remembered events as this agent saw them.
    pub fn own_view(&self, viewpoint: Viewpoint) -> Option<View> {
        self.view_of(viewpoint, self.memory.iter().map(|o| o.raw).collect())
    }

    /// The remembered events re-expressed from where the interlocutor stands.
    pub fn transformed_view(&self, viewpoint: Viewpoint) -> Option<View> {
        let raws = self
            .memory
            .iter()
            .map(|o| features::extract(&transform_model(&o.model)))
            .collect();
        self.view_of(viewpoint, raws)
    }
}

/// An agent's lexicon and ontology in a serialisable, readable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub agent: usize,
    /// Best-scored first.
    pub lexicon: Vec<LexEntry>,
    pub ontology: Vec<CategoryView>,
}

impl Agent {
    pub fn snapshot(&self) -> AgentSnapshot {
        let mut lexicon: Vec<LexEntry> = self.lexicon.entries().collect();
        lexicon.sort_by(|a, b| rank_order(a.score, b.score).then_with(|| a.form.cmp(&b.form)));
        AgentSnapshot { agent: self.id, lexicon, ontology: self.ontology.snapshot() }
    }
}

/// A candidate meaning from conceptualisation.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMeaning {
    pub meaning: Meaning,
    pub category: CategoryId,
    pub viewpoint: Viewpoint,
    /// Saliency of the category's channel in its view.
    pub saliency: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conceptualization {
    /// Best first; empty if nothing discriminates even after refinement.
    pub ranked: Vec<RankedMeaning>,
    pub refined: bool,
}

/// Whether every category of `meaning` holds for the topic and together they
/// rule out each context event.
pub fn meaning_fits(ontology: &Ontology, meaning: &Meaning, view: &View) -> bool {
    let cats: Vec<CategoryId> = meaning.categories().collect();
    if cats.is_empty() {
        return false;
    }
    cats.iter().all(|&c| ontology.holds(c, &view.topic))
        && view
            .context
            .iter()
            .all(|e| cats.iter().any(|&c| !ontology.holds(c, e)))
}

fn rank_views(
    ontology: &Ontology,
    views: &[&View],
    marking: Marking,
) -> Vec<RankedMeaning> {
    let mut ranked = Vec::new();
    for view in views {
        for d in ontology.discriminate(&view.topic, &view.context, &view.saliency()) {
            let mut preds = vec![Predicate::Category(d.category)];
            let mark = match marking {
                Marking::Never => false,
                Marking::Always => true,
                Marking::WhenAmbiguous => {
                    // Mark only if the category fails from some other viewpoint.
                    let m = Meaning::new([Predicate::Category(d.category)]);
                    views
                        .iter()
                        .filter(|v| v.viewpoint != view.viewpoint)
                        .any(|v| !meaning_fits(ontology, &m, v))
                }
            };
            if mark {
                preds.push(view.viewpoint.marker());
            }
            ranked.push(RankedMeaning {
                meaning: Meaning::new(preds),
                category: d.category,
                viewpoint: view.viewpoint,
                combined: d.combined,
                saliency: d.saliency,
            });
        }
    }
    ranked.sort_by(|a, b| {
        rank_order(a.combined, b.combined)
            .then(a.viewpoint.cmp(&b.viewpoint))
            .then(a.category.cmp(&b.category))
    });
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marking {
    Never,
    Always,
    WhenAmbiguous,
}

/// Find ranked meanings over `views`. If none discriminates, refine the most
/// salient channel of the first view and try once more.
fn conceptualize(
    ontology: &mut Ontology,
    views: &[&View],
    marking: Marking,
    max_depth: u8,
) -> Conceptualization {
    let ranked = rank_views(ontology, views, marking);
    if !ranked.is_empty() {
        return Conceptualization { ranked, refined: false };
    }
    // Coarse distinctions first: split the shallowest leaf the topic sits in,
    // the most salient channel among those.
    let first = views[0];
    let sal = first.saliency();
    let depth = |c: features::Channel| ontology.leaf_depth(c, first.topic[c]);
    let mut channels = features::Channel::ALL;
    channels.sort_by(|a, b| {
        depth(*a)
            .cmp(&depth(*b))
            .then(sal[b.index()].total_cmp(&sal[a.index()]))
            .then(a.cmp(b))
    });
    let refined = ontology.refine(&first.topic, channels[0], max_depth).is_ok();
    let ranked = if refined { rank_views(ontology, views, marking) } else { Vec::new() };
    Conceptualization { ranked, refined }
}

/// The speaker's candidate meanings. `transformed` is the speaker's
/// reconstruction of the hearer's view and must be present exactly in
/// conditions C and D.
pub fn speaker_conceptualize(
    agent: &mut Agent,
    condition: Condition,
    own: &View,
    transformed: Option<&View>,
    config: &GameConfig,
) -> Conceptualization {
    assert_eq!(
        transformed.is_some(),
        condition.takes_perspective(),
        "transformed view must be supplied exactly in conditions C and D"
    );
    let mut views = vec![own];
    views.extend(transformed);
    let marking = match condition {
        Condition::D if config.conditional_marking => Marking::WhenAmbiguous,
        Condition::D => Marking::Always,
        _ => Marking::Never,
    };
    conceptualize(&mut agent.ontology, &views, marking, config.max_depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Success,
    Failure,
    UnknownWord,
    /// The speaker found nothing to say.
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub verdict: Verdict,
    /// Perspective transforms the hearer performed (0 or 1).
    pub effort: u8,
    pub parse: Parse,
    /// The reading that made sense, and from which viewpoint.
    pub accepted: Option<(Candidate, Viewpoint)>,
}

/// Interpret an utterance. `reconstructed` is the hearer's reconstruction of
/// the speaker's view, available in conditions C and D; it only counts as
/// effort when consulted.
pub fn hearer_interpret(
    agent: &Agent,
    utterance: &[String],
    condition: Condition,
    own: &View,
    reconstructed: Option<&View>,
) -> Interpretation {
    let parse = agent.lexicon.parse(utterance);
    let unknown_effort = u8::from(condition == Condition::C);
    if !parse.unknown.is_empty() {
        return Interpretation { verdict: Verdict::UnknownWord, effort: unknown_effort, parse, accepted: None };
    }
    let Some(top) = parse.candidates.first() else {
        return Interpretation { verdict: Verdict::Failure, effort: 0, parse, accepted: None };
    };
    let views: Vec<&View> = match (condition, reconstructed) {
        (Condition::A | Condition::B, _) | (_, None) => vec![own],
        (Condition::C, Some(r)) => vec![r, own],
        (Condition::D, Some(r)) => match top.meaning.marker().and_then(Viewpoint::from_marker) {
            Some(Viewpoint::Hearer) => vec![own],
            Some(Viewpoint::Speaker) => vec![r],
            None => vec![r, own],
        },
    };
    let effort = u8::from(views.iter().any(|v| v.viewpoint == Viewpoint::Speaker && condition.takes_perspective()));
    let accepted = parse.candidates.iter().find_map(|c| {
        views
            .iter()
            .find(|v| meaning_fits(&agent.ontology, &c.meaning, v))
            .map(|v| (c.clone(), v.viewpoint))
    });
    let verdict = if accepted.is_some() { Verdict::Success } else { Verdict::Failure };
    Interpretation { verdict, effort, parse, accepted }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub invented: bool,
    pub learned: bool,
    pub speaker_refined: bool,
    pub hearer_refined: bool,
    /// Transforms the speaker computed (not part of the effort metric).
    pub speaker_effort: u8,
    /// A ball start coincided with an observer's position.
    pub degenerate_bearing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub run: u32,
    pub game: u64,
    pub speaker: usize,
    pub hearer: usize,
    pub condition: Condition,
    pub verdict: Verdict,
    pub success: bool,
    pub hearer_effort: u8,
    pub utterance: Vec<String>,
    pub speaker_meaning: Vec<String>,
    pub speaker_viewpoint: Option<Viewpoint>,
    pub hearer_interpretation: Vec<String>,
    /// Population means after the game.
    pub lexicon_size: f64,
    pub ontology_size: f64,
    pub diagnostics: Diagnostics,
}

/// Play one game between `speaker` and `hearer`. The speaker stands in body
/// A, the hearer in body B.
pub fn play_game(
    speaker: &mut Agent,
    hearer: &mut Agent,
    condition: Condition,
    rng: &mut impl Rng,
    config: &GameConfig,
    game: u64,
) -> Result<GameRecord> {
    assert_ne!(speaker.id, hearer.id, "a game needs two distinct agents");
    let first_event = game * config.context_size as u64;
    let scene = arena::setup_scene(rng, &config.arena, config.context_size, first_event)?;
    let topic_event = scene.topic().event_id;

    if condition == Condition::A {
        let shared = arena::perceive(&scene, BodyId::A, &config.noise, rng);
        speaker.perceive(&shared);
        hearer.perceive(&shared);
    } else {
        let seen_by_speaker = arena::perceive(&scene, BodyId::A, &config.noise, rng);
        let seen_by_hearer = arena::perceive(&scene, BodyId::B, &config.noise, rng);
        speaker.perceive(&seen_by_speaker);
        hearer.perceive(&seen_by_hearer);
    }

    let mut diag = Diagnostics {
        degenerate_bearing: speaker.memory().chain(hearer.memory()).any(|o| o.raw.degenerate),
        ..Default::default()
    };
    let mut record = GameRecord {
        run: 0,
        game,
        speaker: speaker.id,
        hearer: hearer.id,
        condition,
        verdict: Verdict::Aborted,
        success: false,
        hearer_effort: 0,
        utterance: Vec::new(),
        speaker_meaning: Vec::new(),
        speaker_viewpoint: None,
        hearer_interpretation: Vec::new(),
        lexicon_size: 0.0,
        ontology_size: 0.0,
        diagnostics: Diagnostics::default(),
    };

    let speaker_own = speaker.own_view(Viewpoint::Speaker).expect("memory holds topic and context");
    let speaker_other = condition
        .takes_perspective()
        .then(|| speaker.transformed_view(Viewpoint::Hearer).expect("memory holds topic and context"));
    diag.speaker_effort = u8::from(speaker_other.is_some());

    let concept = speaker_conceptualize(speaker, condition, &speaker_own, speaker_other.as_ref(), config);
    diag.speaker_refined = concept.refined;
    let Some(chosen) = concept.ranked.into_iter().next() else {
        record.diagnostics = diag;
        fill_sizes(&mut record, speaker, hearer);
        return Ok(record);
    };
    record.speaker_meaning = chosen.meaning.render(topic_event);
    record.speaker_viewpoint = Some(chosen.viewpoint);

    let mut production = speaker.lexicon.produce(&chosen.meaning);
    if let Some(residual) = production.residual.take() {
        let form = speaker.lexicon.invent_word(rng);
        speaker.lexicon.insert(residual.clone(), &form, INITIAL_ENTRY_SCORE);
        production.used.push(EntryKey { form: form.clone(), meaning: residual });
        production.utterance.push(form);
        production.utterance.sort();
        diag.invented = true;
    }
    record.utterance = production.utterance.clone();

    let hearer_own = hearer.own_view(Viewpoint::Hearer).expect("memory holds topic and context");
    let hearer_recon = condition
        .takes_perspective()
        .then(|| hearer.transformed_view(Viewpoint::Speaker).expect("memory holds topic and context"));
    let interp = hearer_interpret(hearer, &production.utterance, condition, &hearer_own, hearer_recon.as_ref());
    let mut effort = interp.effort;
    let delta = config.score_delta;
    let speaker_cats: Vec<CategoryId> = chosen.meaning.categories().collect();

    match interp.verdict {
        Verdict::Success => {
            let (cand, _) = interp.accepted.as_ref().expect("success has a reading");
            speaker.lexicon.update_scores(&production.used, true, delta);
            speaker.ontology.update_scores(&speaker_cats, true, delta);
            hearer.lexicon.update_scores(&cand.senses, true, delta);
            let cats: Vec<CategoryId> = cand.meaning.categories().collect();
            hearer.ontology.update_scores(&cats, true, delta);
            record.hearer_interpretation = cand.meaning.render(topic_event);
        }
        Verdict::Failure => {
            speaker.lexicon.update_scores(&production.used, false, delta);
            speaker.ontology.update_scores(&speaker_cats, false, delta);
            // Every sense the hearer tried was involved in the failure.
            let mut tried: Vec<EntryKey> = Vec::new();
            for key in interp.parse.candidates.iter().flat_map(|c| &c.senses) {
                if !tried.contains(key) {
                    tried.push(key.clone());
                }
            }
            hearer.lexicon.update_scores(&tried, false, delta);
            if let Some(top) = interp.parse.candidates.first() {
                let cats: Vec<CategoryId> = top.meaning.categories().collect();
                hearer.ontology.update_scores(&cats, false, delta);
                record.hearer_interpretation = top.meaning.render(topic_event);
            }
        }
        Verdict::UnknownWord => {
            // Nothing was interpreted, so no entry or category was tried and
            // found wanting; the hearer just learns.
            if let [form] = interp.parse.unknown.as_slice() {
                let known = interp
                    .parse
                    .candidates
                    .first()
                    .map(|c| c.meaning.clone())
                    .unwrap_or_default();
                let (learned, learn_effort, refined, meaning) =
                    learn_from_scene(hearer, condition, &known, form, &hearer_own, hearer_recon.as_ref(), config);
                diag.learned = learned;
                diag.hearer_refined = refined;
                effort = effort.max(learn_effort);
                if let Some(m) = meaning {
                    record.hearer_interpretation = m.render(topic_event);
                }
            }
        }
        Verdict::Aborted => unreachable!("hearer never aborts"),
    }

    record.verdict = interp.verdict;
    record.success = interp.verdict == Verdict::Success;
    record.hearer_effort = effort;
    record.diagnostics = diag;
    fill_sizes(&mut record, speaker, hearer);
    Ok(record)
}

/// The hearer conceptualises the scene itself and ties the unexplained part
/// of its meaning to the unknown form. Returns (learned, effort, refined,
/// meaning used).
fn learn_from_scene(
    hearer: &mut Agent,
    condition: Condition,
    known: &Meaning,
    form: &str,
    own: &View,
    reconstructed: Option<&View>,
    config: &GameConfig,
) -> (bool, u8, bool, Option<Meaning>) {
    let (views, marking): (Vec<&View>, Marking) = match (condition, reconstructed) {
        (Condition::A | Condition::B, _) | (_, None) => (vec![own], Marking::Never),
        (Condition::C, Some(r)) => (vec![r, own], Marking::Never),
        (Condition::D, Some(r)) => {
            let views = match known.marker().and_then(Viewpoint::from_marker) {
                Some(Viewpoint::Hearer) => vec![own],
                Some(Viewpoint::Speaker) => vec![r],
                None => vec![r, own],
            };
            (views, Marking::Always)
        }
    };
    let effort = u8::from(
        condition.takes_perspective() && views.iter().any(|v| v.viewpoint == Viewpoint::Speaker),
    );
    let Conceptualization { mut ranked, refined } =
        conceptualize(&mut hearer.ontology, &views, marking, config.max_depth);
    // Guessing what someone else meant: saliency is shared between the two
    // agents, category scores are private, so rank by saliency alone.
    ranked.sort_by(|a, b| {
        rank_order(a.saliency, b.saliency)
            .then(a.viewpoint.cmp(&b.viewpoint))
            .then(a.category.cmp(&b.category))
    });
    let choice = ranked
        .iter()
        .find(|r| known.is_subset(&r.meaning))
        .or_else(|| ranked.first());
    let Some(choice) = choice else {
        return (false, effort, refined, None);
    };
    let residual = choice.meaning.difference(known);
    let learned = hearer.lexicon.learn_word(form, &residual) == crate::lexicon::LearnOutcome::Learned;
    (learned, effort, refined, Some(choice.meaning.clone()))
}

fn fill_sizes(record: &mut GameRecord, a: &Agent, b: &Agent) {
    record.lexicon_size = (a.lexicon.len() + b.lexicon.len()) as f64 / 2.0;
    record.ontology_size = (a.ontology.len() + b.ontology.len()) as f64 / 2.0;
}
