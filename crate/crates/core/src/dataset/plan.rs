use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::degrade::{Category, DegradationKind};
use crate::rng::Rng;

/// Probability of picking each category, in `Category::ALL` order.
pub const CATEGORY_PROBS: [f64; 5] = [0.4, 0.125, 0.225, 0.125, 0.125];

/// Redraws allowed for one single-effect slot before falling back to an unused EQ kind.
pub const MAX_SINGLE_RETRIES: usize = 64;

/// Relative weight of a kind within its category.
pub fn kind_weight(kind: DegradationKind) -> f64 {
    use DegradationKind::*;
    match kind {
        Xband => 7.0,
        Mic => 5.0,
        Bright | Dark | Clarity | Mud | Warm => 3.0,
        Airy | Boom => 2.0,
        Vocal => 4.0,
        Comp => 2.5,
        Punch => 1.0,
        Small | Big => 0.15,
        Mix => 0.30,
        Real => 0.40,
        Clip => 3.0,
        Volume => 1.0,
        Stereo => 1.0,
    }
}

pub fn category_prob(cat: Category) -> f64 {
    CATEGORY_PROBS[Category::ALL.iter().position(|c| *c == cat).expect("listed")]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Single,
    Double,
    Triple,
}

impl Arity {
    pub fn len(self) -> usize {
        match self {
            Arity::Single => 1,
            Arity::Double => 2,
            Arity::Triple => 3,
        }
    }
}

/// Effects of one corrupted variant, kept in application order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantPlan {
    pub effects: Vec<DegradationKind>,
    pub arity: Arity,
}

impl VariantPlan {
    pub fn new(mut effects: Vec<DegradationKind>) -> Self {
        effects.sort_by_key(|k| k.category());
        let arity = match effects.len() {
            1 => Arity::Single,
            2 => Arity::Double,
            3 => Arity::Triple,
            n => panic!("a plan holds 1 to 3 effects, got {n}"),
        };
        Self { effects, arity }
    }

    pub fn categories(&self) -> Vec<Category> {
        self.effects.iter().map(|k| k.category()).collect()
    }

    pub fn has_distinct_categories(&self) -> bool {
        let mut cats = self.categories();
        cats.dedup();
        cats.len() == self.effects.len()
    }

    pub fn contains(&self, kind: DegradationKind) -> bool {
        self.effects.contains(&kind)
    }
}

fn sample_category(rng: &mut Rng, excluded: &[Category]) -> Category {
    let weights: Vec<f64> = Category::ALL
        .iter()
        .map(|c| if excluded.contains(c) { 0.0 } else { category_prob(*c) })
        .collect();
    Category::ALL[WeightedIndex::new(&weights).expect("some category left").sample(rng)]
}

pub(crate) fn sample_kind(rng: &mut Rng, cat: Category) -> DegradationKind {
    let kinds = cat.kinds();
    let weights: Vec<f64> = kinds.iter().map(|k| kind_weight(*k)).collect();
    kinds[WeightedIndex::new(&weights).expect("positive weights").sample(rng)]
}

fn sample_multi(rng: &mut Rng, n: usize, stereo_eligible: bool) -> VariantPlan {
    let mut excluded: Vec<Category> = Vec::new();
    if !stereo_eligible {
        excluded.push(Category::Stereo);
    }
    let mut effects = Vec::with_capacity(n);
    for _ in 0..n {
        let cat = sample_category(rng, &excluded);
        excluded.push(cat);
        effects.push(sample_kind(rng, cat));
    }
    VariantPlan::new(effects)
}

/// Four single, two double and one triple plan for one clip.
///
/// Single plans never repeat a kind: a repeated draw is redrawn from scratch, up to
/// `MAX_SINGLE_RETRIES` times, then replaced by the first unused EQ kind. Multi-effect plans
/// use at most one kind per category. When `stereo_eligible` is false the stereo category is
/// excluded and its probability mass is spread over the others.
pub fn sample_variant_plans(rng: &mut Rng, stereo_eligible: bool) -> [VariantPlan; 7] {
    let excluded: Vec<Category> = if stereo_eligible { vec![] } else { vec![Category::Stereo] };
    let mut singles: Vec<DegradationKind> = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut chosen = None;
        for _ in 0..MAX_SINGLE_RETRIES {
            let category = sample_category(rng, &excluded);
            let kind = sample_kind(rng, category);
            if !singles.contains(&kind) {
                chosen = Some(kind);
                break;
            }
        }
        let kind = chosen.unwrap_or_else(|| {
            *Category::Eq
                .kinds()
                .iter()
                .find(|k| !singles.contains(k))
                .expect("ten EQ kinds exceed four slots")
        });
        singles.push(kind);
    }
    let mut plans = singles.into_iter().map(|k| VariantPlan::new(vec![k]));
    [
        plans.next().expect("four singles"),
        plans.next().expect("four singles"),
        plans.next().expect("four singles"),
        plans.next().expect("four singles"),
        sample_multi(rng, 2, stereo_eligible),
        sample_multi(rng, 2, stereo_eligible),
        sample_multi(rng, 3, stereo_eligible),
    ]
}
