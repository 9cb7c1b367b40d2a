//! Scored bidirectional associations between meaning sets and word forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::{rank_order, step_score, CategoryId};

pub const INITIAL_ENTRY_SCORE: f64 = 0.5;

const CONSONANTS: &[u8] = b"bdfgklmnprstvwxz";
const VOWELS: &[u8] = b"aeiou";

/// A one-place predicate over the event being described.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Predicate {
    Category(CategoryId),
    /// The scene is described as the speaker sees it.
    OwnPerspective,
    /// The scene is described as the hearer sees it.
    OtherPerspective,
}

impl Predicate {
    pub fn is_marker(&self) -> bool {
        !matches!(self, Predicate::Category(_))
    }

    pub fn category(&self) -> Option<CategoryId> {
        match self {
            Predicate::Category(id) => Some(*id),
            _ => None,
        }
    }

    /// Prefix notation with the event bound, e.g. `(category-4 event-16462 t)`.
    pub fn render(&self, event_id: u64) -> String {
        format!("({self} event-{event_id} t)")
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Category(id) => id.fmt(f),
            Predicate::OwnPerspective => f.write_str("own-perspective"),
            Predicate::OtherPerspective => f.write_str("other-perspective"),
        }
    }
}

impl FromStr for Predicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "own-perspective" => Ok(Predicate::OwnPerspective),
            "other-perspective" => Ok(Predicate::OtherPerspective),
            _ => s
                .strip_prefix("category-")
                .and_then(|n| n.parse().ok())
                .map(|n| Predicate::Category(CategoryId(n)))
                .ok_or_else(|| format!("not a predicate: {s:?}")),
        }
    }
}

impl From<Predicate> for String {
    fn from(p: Predicate) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Predicate {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A set of predicates over one event variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Meaning(BTreeSet<Predicate>);

impl Meaning {
    pub fn new(predicates: impl IntoIterator<Item = Predicate>) -> Self {
        Meaning(predicates.into_iter().collect())
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.0.iter()
    }

    pub fn categories(&self) -> impl Iterator<Item = CategoryId> + '_ {
        self.0.iter().filter_map(Predicate::category)
    }

    pub fn marker(&self) -> Option<Predicate> {
        self.0.iter().copied().find(Predicate::is_marker)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Non-empty and carrying at most one perspective marker.
    pub fn is_well_formed(&self) -> bool {
        !self.is_empty() && self.0.iter().filter(|p| p.is_marker()).count() <= 1
    }

    pub fn contains(&self, p: &Predicate) -> bool {
        self.0.contains(p)
    }

    pub fn is_subset(&self, other: &Meaning) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &Meaning) -> Meaning {
        Meaning(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &Meaning) -> Meaning {
        Meaning(self.0.difference(&other.0).copied().collect())
    }

    pub fn render(&self, event_id: u64) -> Vec<String> {
        self.0.iter().map(|p| p.render(event_id)).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(Predicate::to_string).collect()
    }
}

impl fmt::Display for Meaning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            p.fmt(f)?;
        }
        f.write_str("}")
    }
}

/// Identifies one association: a form together with one of its meanings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    pub form: String,
    pub meaning: Meaning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub form: String,
    pub meaning: Meaning,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sense {
    meaning: Meaning,
    score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    by_form: BTreeMap<String, Vec<Sense>>,
}

/// Result of expressing a meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    /// Forms in canonical (sorted) order.
    pub utterance: Vec<String>,
    pub used: Vec<EntryKey>,
    /// Part of the meaning no entry covers; `None` for an exact cover.
    pub residual: Option<Meaning>,
}

/// One way of reading an utterance: one sense per known form.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub meaning: Meaning,
    pub senses: Vec<EntryKey>,
    /// Product of the sense scores.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parse {
    /// Best first.
    pub candidates: Vec<Candidate>,
    pub unknown: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnOutcome {
    Learned,
    /// The residual was empty.
    NothingToLearn,
    AlreadyKnown,
}

/// Keeps the reading cross product manageable for heavily ambiguous forms.
const MAX_SENSES_PER_FORM: usize = 16;
/// Predicates a single meaning may carry when producing (bitmask search).
const MAX_MEANING_SIZE: usize = 20;

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of (meaning, form) associations.
    pub fn len(&self) -> usize {
        self.by_form.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_form.is_empty()
    }

    pub fn knows_form(&self, form: &str) -> bool {
        self.by_form.contains_key(form)
    }

    pub fn score(&self, key: &EntryKey) -> Option<f64> {
        self.by_form
            .get(&key.form)?
            .iter()
            .find(|s| s.meaning == key.meaning)
            .map(|s| s.score)
    }

    pub fn entries(&self) -> impl Iterator<Item = LexEntry> + '_ {
        self.by_form.iter().flat_map(|(form, senses)| {
            senses.iter().map(move |s| LexEntry {
                form: form.clone(),
                meaning: s.meaning.clone(),
                score: s.score,
            })
        })
    }

    /// Every entry whose meaning equals `meaning`.
    pub fn forms_for(&self, meaning: &Meaning) -> Vec<LexEntry> {
        self.entries().filter(|e| &e.meaning == meaning).collect()
    }

    /// Insert an association. Returns `false` if the pair already exists.
    pub fn insert(&mut self, meaning: Meaning, form: &str, score: f64) -> bool {
        let senses = self.by_form.entry(form.to_owned()).or_default();
        if senses.iter().any(|s| s.meaning == meaning) {
            return false;
        }
        senses.push(Sense { meaning, score: score.clamp(0.0, 1.0) });
        senses.sort_by(|a, b| a.meaning.cmp(&b.meaning));
        true
    }

    /// The fewest entries whose meanings are subsets of `meaning` and whose
    /// union is all of it. Ties prefer the higher score sum, then the
    /// lexicographically smaller form list. Without an exact cover the largest
    /// partial cover is returned with the uncovered residual.
    pub fn produce(&self, meaning: &Meaning) -> Production {
        let target: Vec<Predicate> = meaning.predicates().copied().collect();
        let n = target.len();
        assert!(n <= MAX_MEANING_SIZE, "meaning too large to produce: {n} predicates");
        let full = (1usize << n) - 1;

        // Best entry per distinct sub-meaning.
        let mut options: BTreeMap<usize, (f64, &str, &Meaning)> = BTreeMap::new();
        for (form, senses) in &self.by_form {
            for s in senses {
                if s.meaning.is_empty() || !s.meaning.is_subset(meaning) {
                    continue;
                }
                let mask = target
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| s.meaning.contains(p))
                    .fold(0usize, |m, (i, _)| m | (1 << i));
                let better = match options.get(&mask) {
                    None => true,
                    Some(&(score, f, _)) => s.score > score || (s.score == score && form.as_str() < f),
                };
                if better {
                    options.insert(mask, (s.score, form.as_str(), &s.meaning));
                }
            }
        }

        #[derive(Clone)]
        struct Cover<'a> {
            score: f64,
            forms: Vec<&'a str>,
            picks: Vec<usize>,
        }
        let key_order = |a: &Cover, b: &Cover| {
            a.picks
                .len()
                .cmp(&b.picks.len())
                .then(rank_order(a.score, b.score))
                .then(a.forms.cmp(&b.forms))
        };
        let mut best: Vec<Option<Cover>> = vec![None; full + 1];
        best[0] = Some(Cover { score: 0.0, forms: Vec::new(), picks: Vec::new() });
        for state in 0..=full {
            let Some(cur) = best[state].clone() else { continue };
            for (&mask, &(score, form, _)) in &options {
                let next = state | mask;
                if next == state {
                    continue;
                }
                let mut forms = cur.forms.clone();
                let at = forms.partition_point(|f| *f <= form);
                forms.insert(at, form);
                let mut picks = cur.picks.clone();
                picks.push(mask);
                let cand = Cover { score: cur.score + score, forms, picks };
                let replace = match &best[next] {
                    None => true,
                    Some(old) => key_order(&cand, old).is_lt(),
                };
                if replace {
                    best[next] = Some(cand);
                }
            }
        }

        let (state, cover) = best
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.as_ref().map(|c| (s, c)))
            .min_by(|(sa, a), (sb, b)| {
                sb.count_ones().cmp(&sa.count_ones()).then(key_order(a, b))
            })
            .expect("empty cover always reachable");

        let used: Vec<EntryKey> = cover
            .picks
            .iter()
            .map(|m| {
                let (_, form, meaning) = options[m];
                EntryKey { form: form.to_owned(), meaning: meaning.clone() }
            })
            .collect();
        let residual = (state != full).then(|| {
            Meaning::new(
                target
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| state & (1 << i) == 0)
                    .map(|(_, p)| *p),
            )
        });
        let mut utterance: Vec<String> = used.iter().map(|k| k.form.clone()).collect();
        utterance.sort();
        Production { utterance, used, residual }
    }

    /// All readings of `utterance`, best first, plus the forms not in the lexicon.
    pub fn parse(&self, utterance: &[String]) -> Parse {
        let mut unknown = Vec::new();
        let mut per_form: Vec<Vec<(EntryKey, f64)>> = Vec::new();
        for form in utterance {
            match self.by_form.get(form) {
                None => unknown.push(form.clone()),
                Some(senses) => {
                    let mut options: Vec<(EntryKey, f64)> = senses
                        .iter()
                        .map(|s| (EntryKey { form: form.clone(), meaning: s.meaning.clone() }, s.score))
                        .collect();
                    options.sort_by(|a, b| rank_order(a.1, b.1).then(a.0.cmp(&b.0)));
                    options.truncate(MAX_SENSES_PER_FORM);
                    per_form.push(options);
                }
            }
        }
        let mut candidates = Vec::new();
        if !per_form.is_empty() {
            let mut partial = vec![Candidate { meaning: Meaning::default(), senses: Vec::new(), score: 1.0 }];
            for options in &per_form {
                let mut next = Vec::with_capacity(partial.len() * options.len());
                for c in &partial {
                    for (key, score) in options {
                        let mut senses = c.senses.clone();
                        senses.push(key.clone());
                        next.push(Candidate {
                            meaning: c.meaning.union(&key.meaning),
                            senses,
                            score: c.score * score,
                        });
                    }
                }
                partial = next;
            }
            candidates = partial;
            candidates.sort_by(|a, b| {
                rank_order(a.score, b.score)
                    .then(a.meaning.cmp(&b.meaning))
                    .then(a.senses.cmp(&b.senses))
            });
        }
        Parse { candidates, unknown }
    }

    /// Reinforce after a game. On success the used entries gain `delta` and
    /// other meanings of the same forms lose `delta`; on failure the used
    /// entries lose `delta`. Entries that reach zero are removed. Returns the
    /// number of entries pruned.
    pub fn update_scores(&mut self, used: &[EntryKey], success: bool, delta: f64) -> usize {
        for key in used {
            let Some(senses) = self.by_form.get_mut(&key.form) else { continue };
            for s in senses.iter_mut() {
                let is_used = used.iter().any(|k| k.form == key.form && k.meaning == s.meaning);
                if s.meaning == key.meaning {
                    s.score = step_score(s.score, if success { delta } else { -delta });
                } else if success && !is_used {
                    s.score = step_score(s.score, -delta);
                }
            }
        }
        self.prune()
    }

    fn prune(&mut self) -> usize {
        let before = self.len();
        for senses in self.by_form.values_mut() {
            senses.retain(|s| s.score > 0.0);
        }
        self.by_form.retain(|_, senses| !senses.is_empty());
        before - self.len()
    }

    /// Associate a newly heard form with the part of the meaning it must carry.
    pub fn learn_word(&mut self, form: &str, residual: &Meaning) -> LearnOutcome {
        if residual.is_empty() {
            return LearnOutcome::NothingToLearn;
        }
        if self.insert(residual.clone(), form, INITIAL_ENTRY_SCORE) {
            LearnOutcome::Learned
        } else {
            LearnOutcome::AlreadyKnown
        }
    }

    /// A fresh form of two or three consonant-vowel syllables not yet in this
    /// lexicon.
    pub fn invent_word(&self, rng: &mut impl Rng) -> String {
        loop {
            let syllables = rng.random_range(2..=3);
            let mut form = String::with_capacity(2 * syllables);
            for _ in 0..syllables {
                form.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
                form.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            }
            if !self.knows_form(&form) {
                return form;
            }
        }
    }
}

/// Whether `form` is two or three consonant-vowel syllables from the
/// invention inventory.
pub fn is_well_formed_word(form: &str) -> bool {
    let b = form.as_bytes();
    (b.len() == 4 || b.len() == 6)
        && b.chunks(2).all(|s| CONSONANTS.contains(&s[0]) && VOWELS.contains(&s[1]))
}
