//! Discrimination-tree ontology.
//!
//! Every feature channel owns a binary tree over `[0, 1]`. Each node below the
//! root is a category; refining a leaf halves its interval. Intervals are
//! dyadic (`[k/2^d, (k+1)/2^d)`), so bounds are exact in `f64` and the leaves
//! always partition the unit interval exactly. The topmost region is closed
//! at 1.0.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{Channel, ScaledFeatures, CHANNEL_COUNT};

pub const INITIAL_CATEGORY_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(pub u32);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "category-{}", self.0)
    }
}

/// `[index / 2^depth, (index + 1) / 2^depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub depth: u8,
    pub index: u32,
}

impl Interval {
    pub const UNIT: Interval = Interval { depth: 0, index: 0 };

    fn denom(&self) -> f64 {
        (1u64 << self.depth) as f64
    }

    pub fn lo(&self) -> f64 {
        self.index as f64 / self.denom()
    }

    pub fn hi(&self) -> f64 {
        (self.index + 1) as f64 / self.denom()
    }

    pub fn contains(&self, v: f64) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        (lo <= v && v < hi) || (v == 1.0 && hi == 1.0)
    }

    pub fn halves(&self) -> (Interval, Interval) {
        let depth = self.depth + 1;
        (
            Interval { depth, index: 2 * self.index },
            Interval { depth, index: 2 * self.index + 1 },
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.hi() == 1.0 { ']' } else { ')' };
        write!(f, "[{},{}{}", self.lo(), self.hi(), close)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: CategoryId,
    pub channel: Channel,
    pub interval: Interval,
    pub score: f64,
}

impl Category {
    pub fn depth(&self) -> u8 {
        self.interval.depth
    }

    pub fn contains(&self, features: &ScaledFeatures) -> bool {
        self.interval.contains(features[self.channel])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TreeNode {
    interval: Interval,
    /// `None` only for the root, which is not a category.
    category: Option<CategoryId>,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationTree {
    pub channel: Channel,
    nodes: Vec<TreeNode>,
}

impl DiscriminationTree {
    pub fn new(channel: Channel) -> Self {
        DiscriminationTree {
            channel,
            nodes: vec![TreeNode { interval: Interval::UNIT, category: None, children: None }],
        }
    }

    pub fn is_refined(&self) -> bool {
        self.nodes[0].children.is_some()
    }

    /// Node indices from the root down to the leaf containing `v`.
    fn path(&self, v: f64) -> Vec<usize> {
        let mut out = vec![0];
        let mut at = 0;
        while let Some((lo, hi)) = self.nodes[at].children {
            at = if self.nodes[lo].interval.contains(v) { lo } else { hi };
            out.push(at);
        }
        out
    }

    /// Categories whose region contains `v`, shallowest first.
    pub fn categories_containing(&self, v: f64) -> impl Iterator<Item = CategoryId> + '_ {
        self.path(v).into_iter().filter_map(|n| self.nodes[n].category)
    }

    /// The leaf category containing `v`; `None` while the tree is just its root.
    pub fn categorize(&self, v: f64) -> Option<CategoryId> {
        let leaf = *self.path(v).last().expect("path includes root");
        self.nodes[leaf].category
    }

    pub fn leaves(&self) -> impl Iterator<Item = (Interval, Option<CategoryId>)> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.children.is_none())
            .map(|n| (n.interval, n.category))
    }

    pub fn depth(&self) -> u8 {
        self.leaves().map(|(i, _)| i.depth).max().unwrap_or(0)
    }
}

/// A category that holds for the topic and for none of the context events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrimination {
    pub category: CategoryId,
    pub channel: Channel,
    pub saliency: f64,
    /// Mean of channel saliency and category score.
    pub combined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineError {
    MaxDepth { channel: Channel, depth: u8 },
}

impl fmt::Display for RefineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefineError::MaxDepth { channel, depth } => {
                write!(f, "{channel} already at maximum depth {depth}")
            }
        }
    }
}

/// All categories of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    trees: Vec<DiscriminationTree>,
    /// Indexed by `CategoryId`.
    categories: Vec<Category>,
}

impl Default for Ontology {
    fn default() -> Self {
        Self::new()
    }
}

impl Ontology {
    pub fn new() -> Self {
        Ontology {
            trees: Channel::ALL.into_iter().map(DiscriminationTree::new).collect(),
            categories: Vec::new(),
        }
    }

    pub fn tree(&self, channel: Channel) -> &DiscriminationTree {
        &self.trees[channel.index()]
    }

    pub fn category(&self, id: CategoryId) -> Option<&Category> {
        self.categories.get(id.0 as usize)
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn max_depth(&self) -> u8 {
        self.categories.iter().map(Category::depth).max().unwrap_or(0)
    }

    pub fn categorize(&self, channel: Channel, v: f64) -> Option<&Category> {
        self.tree(channel).categorize(v).and_then(|id| self.category(id))
    }

    /// Whether category `id` holds for `features`.
    pub fn holds(&self, id: CategoryId, features: &ScaledFeatures) -> bool {
        self.category(id).is_some_and(|c| c.contains(features))
    }

    /// Whether `id` holds for the topic and for no context event.
    pub fn discriminates(
        &self,
        id: CategoryId,
        topic: &ScaledFeatures,
        context: &[ScaledFeatures],
    ) -> bool {
        self.holds(id, topic) && context.iter().all(|c| !self.holds(id, c))
    }

    /// Discriminating categories for `topic` against `context`, best first.
    pub fn discriminate(
        &self,
        topic: &ScaledFeatures,
        context: &[ScaledFeatures],
        saliency: &[f64; CHANNEL_COUNT],
    ) -> Vec<Discrimination> {
        let mut channels = Channel::ALL;
        channels.sort_by(|a, b| saliency[b.index()].total_cmp(&saliency[a.index()]));
        let mut found = Vec::new();
        for channel in channels {
            let sal = saliency[channel.index()];
            for id in self.tree(channel).categories_containing(topic[channel]) {
                let cat = &self.categories[id.0 as usize];
                if context.iter().all(|c| !cat.contains(c)) {
                    found.push(Discrimination {
                        category: id,
                        channel,
                        saliency: sal,
                        combined: (sal + cat.score) / 2.0,
                    });
                }
            }
        }
        found.sort_by(|a, b| rank_order(a.combined, b.combined).then(a.category.cmp(&b.category)));
        found
    }

    /// Depth of the leaf containing `value` on `channel` (0 if unrefined).
    pub fn leaf_depth(&self, channel: Channel, value: f64) -> u8 {
        let tree = &self.trees[channel.index()];
        let leaf = *tree.path(value).last().expect("path includes root");
        tree.nodes[leaf].interval.depth
    }

    /// Split the leaf containing the topic's value on `channel` in two.
    pub fn refine(
        &mut self,
        topic: &ScaledFeatures,
        channel: Channel,
        max_depth: u8,
    ) -> Result<[CategoryId; 2], RefineError> {
        let tree = &self.trees[channel.index()];
        let leaf = *tree.path(topic[channel]).last().expect("path includes root");
        let interval = tree.nodes[leaf].interval;
        if interval.depth >= max_depth {
            return Err(RefineError::MaxDepth { channel, depth: interval.depth });
        }
        let (lo, hi) = interval.halves();
        let ids = [self.add_category(channel, lo), self.add_category(channel, hi)];
        let tree = &mut self.trees[channel.index()];
        let base = tree.nodes.len();
        tree.nodes.push(TreeNode { interval: lo, category: Some(ids[0]), children: None });
        tree.nodes.push(TreeNode { interval: hi, category: Some(ids[1]), children: None });
        tree.nodes[leaf].children = Some((base, base + 1));
        Ok(ids)
    }

    fn add_category(&mut self, channel: Channel, interval: Interval) -> CategoryId {
        let id = CategoryId(self.categories.len() as u32);
        self.categories.push(Category { id, channel, interval, score: INITIAL_CATEGORY_SCORE });
        id
    }

    /// Reward or punish the categories used in a game, clamped to `[0, 1]`.
    pub fn update_scores(&mut self, used: &[CategoryId], success: bool, delta: f64) {
        for id in used {
            if let Some(cat) = self.categories.get_mut(id.0 as usize) {
                cat.score = step_score(cat.score, if success { delta } else { -delta });
            }
        }
    }

    pub fn snapshot(&self) -> Vec<CategoryView> {
        self.categories
            .iter()
            .map(|c| CategoryView {
                id: c.id.to_string(),
                channel: c.channel,
                interval: [c.interval.lo(), c.interval.hi()],
                score: c.score,
            })
            .collect()
    }
}

/// Flat category listing for run snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryView {
    pub id: String,
    pub channel: Channel,
    pub interval: [f64; 2],
    pub score: f64,
}

/// Descending by score.
pub(crate) fn rank_order(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Add `delta` and clamp to `[0, 1]`, snapping float dust to the bounds.
pub(crate) fn step_score(score: f64, delta: f64) -> f64 {
    let s = score + delta;
    if s < 1e-9 {
        0.0
    } else if s > 1.0 - 1e-9 {
        1.0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn features_on(channel: Channel, v: f64) -> ScaledFeatures {
        let mut a = [0.5; CHANNEL_COUNT];
        a[channel.index()] = v;
        ScaledFeatures(a)
    }

    fn split_once(channel: Channel) -> (Ontology, [CategoryId; 2]) {
        let mut o = Ontology::new();
        let ids = o.refine(&features_on(channel, 0.3), channel, 4).unwrap();
        (o, ids)
    }

    #[test]
    fn unrefined_tree_has_no_category() {
        let o = Ontology::new();
        assert!(o.categorize(Channel::BallY2, 0.3).is_none());
        assert!(!o.tree(Channel::BallY2).is_refined());
    }

    #[test]
    fn first_split_halves_unit_interval() {
        let (o, [lo, hi]) = split_once(Channel::BallY2);
        let lo = o.category(lo).unwrap();
        let hi = o.category(hi).unwrap();
        assert_eq!((lo.interval.lo(), lo.interval.hi()), (0.0, 0.5));
        assert_eq!((hi.interval.lo(), hi.interval.hi()), (0.5, 1.0));
        assert_eq!(lo.score, 0.5);
        assert_eq!(lo.depth(), 1);
    }

    #[test]
    fn categorize_boundaries() {
        let (o, [lo, hi]) = split_once(Channel::BallY2);
        assert_eq!(o.categorize(Channel::BallY2, 0.3).unwrap().id, lo);
        assert_eq!(o.categorize(Channel::BallY2, 0.5).unwrap().id, hi);
        assert_eq!(o.categorize(Channel::BallY2, 1.0).unwrap().id, hi);
        assert_eq!(o.categorize(Channel::BallY2, 0.0).unwrap().id, lo);
    }

    #[test]
    fn second_split_quarters_the_topic_leaf() {
        let (mut o, _) = split_once(Channel::BallY2);
        let [a, b] = o.refine(&features_on(Channel::BallY2, 0.2), Channel::BallY2, 4).unwrap();
        assert_eq!(o.category(a).unwrap().interval.to_string(), "[0,0.25)");
        assert_eq!(o.category(b).unwrap().interval.to_string(), "[0.25,0.5)");
        assert_eq!(o.max_depth(), 2);
        assert_eq!(o.categorize(Channel::BallY2, 0.2).unwrap().id, a);
    }

    #[test]
    fn refine_stops_at_max_depth() {
        let mut o = Ontology::new();
        let f = features_on(Channel::DeltaX, 0.9);
        o.refine(&f, Channel::DeltaX, 1).unwrap();
        let err = o.refine(&f, Channel::DeltaX, 1).unwrap_err();
        assert_eq!(err, RefineError::MaxDepth { channel: Channel::DeltaX, depth: 1 });
        assert_eq!(o.len(), 2);
    }

    #[test]
    fn upper_half_discriminates_high_topic() {
        let (o, [_, hi]) = split_once(Channel::BallY2);
        let mut sal = [0.0; CHANNEL_COUNT];
        sal[Channel::BallY2.index()] = 0.5;
        let found = o.discriminate(
            &features_on(Channel::BallY2, 0.8),
            &[features_on(Channel::BallY2, 0.3)],
            &sal,
        );
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].category, hi);
        assert!((found[0].combined - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shared_leaves_discriminate_nothing() {
        let (o, _) = split_once(Channel::BallY2);
        let found = o.discriminate(
            &features_on(Channel::BallY2, 0.8),
            &[features_on(Channel::BallY2, 0.7)],
            &[0.1; CHANNEL_COUNT],
        );
        assert!(found.is_empty());
    }

    #[test]
    fn category_score_steps_and_clamps() {
        let (mut o, [a, b]) = split_once(Channel::BallX1);
        o.update_scores(&[a], true, 0.05);
        assert!((o.category(a).unwrap().score - 0.55).abs() < 1e-12);
        o.categories[b.0 as usize].score = 0.98;
        o.update_scores(&[b], true, 0.05);
        assert_eq!(o.category(b).unwrap().score, 1.0);
        o.categories[a.0 as usize].score = 0.03;
        o.update_scores(&[a], false, 0.05);
        assert_eq!(o.category(a).unwrap().score, 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let (o, _) = split_once(Channel::RollAngle);
        let json = serde_json::to_string(&o).unwrap();
        let back: Ontology = serde_json::from_str(&json).unwrap();
        assert_eq!(back, o);
        let snap = o.snapshot();
        assert_eq!(snap[0].id, "category-0");
        assert_eq!(snap[0].interval, [0.0, 0.5]);
    }

    /// Every leaf of every tree, sorted, must tile [0, 1] with no gaps.
    fn assert_partition(o: &Ontology) {
        for c in Channel::ALL {
            let mut leaves: Vec<Interval> = o.tree(c).leaves().map(|(i, _)| i).collect();
            leaves.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
            assert_eq!(leaves[0].lo(), 0.0);
            assert_eq!(leaves.last().unwrap().hi(), 1.0);
            for w in leaves.windows(2) {
                assert_eq!(w[0].hi(), w[1].lo(), "{c}: gap or overlap");
            }
            let total: f64 = leaves.iter().map(|i| i.hi() - i.lo()).sum();
            assert_eq!(total, 1.0);
        }
    }

    fn brute_force(
        o: &Ontology,
        topic: &ScaledFeatures,
        context: &[ScaledFeatures],
    ) -> Vec<CategoryId> {
        let mut ids: Vec<CategoryId> = o
            .categories()
            .iter()
            .filter(|c| {
                let lo = c.interval.index as f64 / (1u64 << c.interval.depth) as f64;
                let hi = (c.interval.index + 1) as f64 / (1u64 << c.interval.depth) as f64;
                let inside = |v: f64| (lo <= v && v < hi) || (v == 1.0 && hi == 1.0);
                inside(topic[c.channel]) && context.iter().all(|e| !inside(e[c.channel]))
            })
            .map(|c| c.id)
            .collect();
        ids.sort();
        ids
    }

    proptest! {
        #[test]
        fn refinement_keeps_exact_partition(
            steps in prop::collection::vec((0usize..CHANNEL_COUNT, 0.0..=1.0f64), 0..60),
        ) {
            let mut o = Ontology::new();
            for (ch, v) in steps {
                let channel = Channel::ALL[ch];
                let _ = o.refine(&features_on(channel, v), channel, 6);
                assert_partition(&o);
            }
            let mut ids: Vec<u32> = o.categories().iter().map(|c| c.id.0).collect();
            ids.dedup();
            prop_assert_eq!(ids.len(), o.len());
        }

        #[test]
        fn discriminate_matches_brute_force(
            refinements in prop::collection::vec((0usize..4, 0.0..=1.0f64), 0..20),
            topic in prop::array::uniform4(0.0..=1.0f64),
            context in prop::collection::vec(prop::array::uniform4(0.0..=1.0f64), 1..=3),
            sal in prop::array::uniform4(0.0..=1.0f64),
        ) {
            let widen = |v: [f64; 4]| {
                let mut a = [0.5; CHANNEL_COUNT];
                a[..4].copy_from_slice(&v);
                ScaledFeatures(a)
            };
            let mut o = Ontology::new();
            for (ch, v) in refinements {
                let channel = Channel::ALL[ch];
                let _ = o.refine(&features_on(channel, v), channel, 5);
            }
            let topic = widen(topic);
            let context: Vec<ScaledFeatures> = context.into_iter().map(widen).collect();
            let mut saliency = [0.0; CHANNEL_COUNT];
            saliency[..4].copy_from_slice(&sal);
            let found = o.discriminate(&topic, &context, &saliency);
            for w in found.windows(2) {
                prop_assert!(w[0].combined >= w[1].combined);
            }
            let mut got: Vec<CategoryId> = found.iter().map(|d| d.category).collect();
            got.sort();
            prop_assert_eq!(got, brute_force(&o, &topic, &context));
        }

        #[test]
        fn scores_stay_in_unit_interval(updates in prop::collection::vec(any::<bool>(), 0..80)) {
            let (mut o, ids) = split_once(Channel::DeltaA);
            for ok in updates {
                o.update_scores(&ids, ok, 0.05);
                for c in o.categories() {
                    prop_assert!((0.0..=1.0).contains(&c.score));
                }
            }
        }
    }
}
