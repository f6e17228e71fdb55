//! Hand-written rule-based generators used as an ablation baseline.
//!
//! Patellar luxation: per affected side the knee joint is chronic or acute,
//! the hip joint on that side joins with probability 0.2, and 2 to 8 soft
//! tissue findings are drawn around the knee, upper thigh and lower leg.
//! Other diagnoses: 3 to 25 findings anywhere with any condition.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{ConditionIndex, RegionAtlas, RegionIndex, Side};
use crate::documentation::{Abnormality, DiagnosisSpec, Documentation, Location, Provenance};
use crate::metadata::{sample_metadata, BreedKnowledgeBase, KbError};
use crate::par::{map_range, Parallelism};
use crate::seed::{derive_seed, label_tag, rng_from_seed};

pub const HIP_PROBABILITY: f64 = 0.2;
pub const SOFT_TISSUE_RANGE: (usize, usize) = (2, 8);
pub const OTHER_RANGE: (usize, usize) = (3, 25);
pub const OTHER_DIAGNOSIS: &str = "other";

pub const KNEE_JOINT_TAG: &str = "knee_joint";
pub const HIP_JOINT_TAG: &str = "hip_joint";
pub const SOFT_TISSUE_TAGS: [&str; 3] = ["knee_area", "upper_thigh", "lower_leg"];
pub const CHRONIC_LABEL: &str = "chronic change";
pub const ACUTE_LABEL: &str = "acute inflammation";

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("atlas has {found} regions tagged {tag} on the {side} side, expected exactly one")]
    Joint { tag: &'static str, side: &'static str, found: usize },
    #[error("atlas has no condition labelled \"{0}\"")]
    MissingCondition(&'static str),
    #[error("{side} soft-tissue pool has {available} regions, {requested} requested")]
    PoolTooSmall { side: &'static str, available: usize, requested: usize },
    #[error("atlas has {available} regions, {requested} requested")]
    AtlasTooSmall { available: usize, requested: usize },
    #[error(transparent)]
    Metadata(#[from] KbError),
}

/// Which baseline to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineClass {
    Patellar,
    Other,
}

/// Choices for one affected side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidePlan {
    pub side: Side,
    pub knee: ConditionIndex,
    pub hip: Option<ConditionIndex>,
    pub soft_tissue: usize,
}

/// Every random choice of a patellar baseline record except the soft-tissue
/// regions and their conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatellarPlan {
    pub location: Location,
    pub sides: Vec<SidePlan>,
}

#[derive(Debug, Clone)]
struct SideRegions {
    knee: RegionIndex,
    hip: RegionIndex,
    pool: Vec<RegionIndex>,
}

/// Baseline generator bound to an atlas.
#[derive(Debug, Clone)]
pub struct Baseline<'a> {
    atlas: &'a RegionAtlas,
    left: SideRegions,
    right: SideRegions,
    chronic: ConditionIndex,
    acute: ConditionIndex,
}

fn single(atlas: &RegionAtlas, tag: &'static str, side: Side) -> Result<RegionIndex, BaselineError> {
    match atlas.tagged(tag, side).as_slice() {
        [r] => Ok(r.index),
        other => Err(BaselineError::Joint { tag, side: side.as_str(), found: other.len() }),
    }
}

fn side_regions(atlas: &RegionAtlas, side: Side) -> Result<SideRegions, BaselineError> {
    let knee = single(atlas, KNEE_JOINT_TAG, side)?;
    let hip = single(atlas, HIP_JOINT_TAG, side)?;
    let mut pool: Vec<RegionIndex> = atlas
        .regions()
        .iter()
        .filter(|r| r.side == side && SOFT_TISSUE_TAGS.iter().any(|t| r.has_tag(t)) && r.index != knee && r.index != hip)
        .map(|r| r.index)
        .collect();
    pool.sort_unstable();
    if pool.len() < SOFT_TISSUE_RANGE.1 {
        return Err(BaselineError::PoolTooSmall { side: side.as_str(), available: pool.len(), requested: SOFT_TISSUE_RANGE.1 });
    }
    Ok(SideRegions { knee, hip, pool })
}

impl<'a> Baseline<'a> {
    pub fn new(atlas: &'a RegionAtlas) -> Result<Self, BaselineError> {
        let condition = |label: &'static str| {
            atlas.condition_by_label(label).map(|c| c.index).ok_or(BaselineError::MissingCondition(label))
        };
        Ok(Baseline {
            atlas,
            left: side_regions(atlas, Side::Left)?,
            right: side_regions(atlas, Side::Right)?,
            chronic: condition(CHRONIC_LABEL)?,
            acute: condition(ACUTE_LABEL)?,
        })
    }

    fn regions(&self, side: Side) -> &SideRegions {
        match side {
            Side::Right => &self.right,
            _ => &self.left,
        }
    }

    /// Soft-tissue regions available on `side`.
    pub fn soft_tissue_pool(&self, side: Side) -> &[RegionIndex] {
        &self.regions(side).pool
    }

    pub fn knee_joint(&self, side: Side) -> RegionIndex {
        self.regions(side).knee
    }

    pub fn hip_joint(&self, side: Side) -> RegionIndex {
        self.regions(side).hip
    }

    fn chronic_or_acute<R: Rng + ?Sized>(&self, rng: &mut R) -> ConditionIndex {
        if rng.gen::<bool>() {
            self.chronic
        } else {
            self.acute
        }
    }

    pub fn sample_patellar_plan<R: Rng + ?Sized>(&self, rng: &mut R) -> PatellarPlan {
        let location = Location::ALL[rng.gen_range(0..Location::ALL.len())];
        let sides: &[Side] = match location {
            Location::Left => &[Side::Left],
            Location::Right => &[Side::Right],
            Location::Bilateral => &[Side::Left, Side::Right],
        };
        let sides = sides
            .iter()
            .map(|&side| SidePlan {
                side,
                knee: self.chronic_or_acute(rng),
                hip: rng.gen_bool(HIP_PROBABILITY).then(|| self.chronic_or_acute(rng)),
                soft_tissue: rng.gen_range(SOFT_TISSUE_RANGE.0..=SOFT_TISSUE_RANGE.1),
            })
            .collect();
        PatellarPlan { location, sides }
    }

    /// Turns a plan into abnormalities, drawing soft-tissue regions without
    /// replacement and their conditions uniformly.
    pub fn realize<R: Rng + ?Sized>(&self, plan: &PatellarPlan, rng: &mut R) -> Result<Vec<Abnormality>, BaselineError> {
        let n_conditions = self.atlas.conditions().len();
        let mut out = Vec::new();
        for sp in &plan.sides {
            let regions = self.regions(sp.side);
            out.push(Abnormality { region: regions.knee, condition: sp.knee });
            if let Some(c) = sp.hip {
                out.push(Abnormality { region: regions.hip, condition: c });
            }
            if sp.soft_tissue > regions.pool.len() {
                return Err(BaselineError::PoolTooSmall {
                    side: sp.side.as_str(),
                    available: regions.pool.len(),
                    requested: sp.soft_tissue,
                });
            }
            for i in index::sample(rng, regions.pool.len(), sp.soft_tissue) {
                let condition = self.atlas.conditions()[rng.gen_range(0..n_conditions)].index;
                out.push(Abnormality { region: regions.pool[i], condition });
            }
        }
        Ok(out)
    }

    pub fn patellar_abnormalities<R: Rng + ?Sized>(&self, rng: &mut R) -> (Location, Vec<Abnormality>) {
        let plan = self.sample_patellar_plan(rng);
        let abnormalities = self.realize(&plan, rng).expect("pool sizes checked at construction");
        (plan.location, abnormalities)
    }

    pub fn other_abnormalities<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Abnormality> {
        let regions = self.atlas.regions();
        let conditions = self.atlas.conditions();
        let count = rng.gen_range(OTHER_RANGE.0..=OTHER_RANGE.1).min(regions.len());
        index::sample(rng, regions.len(), count)
            .into_iter()
            .map(|i| Abnormality { region: regions[i].index, condition: conditions[rng.gen_range(0..conditions.len())].index })
            .collect()
    }

    /// One record seeded by `seed`. Metadata, when a knowledge base is given,
    /// comes from a separate stream so it does not change the findings.
    pub fn documentation(
        &self,
        class: BaselineClass,
        id: String,
        seed: u64,
        kb: Option<&BreedKnowledgeBase>,
    ) -> Result<Documentation, BaselineError> {
        let mut rng = rng_from_seed(seed);
        let (diagnosis, abnormalities) = match class {
            BaselineClass::Patellar => {
                let (location, abn) = self.patellar_abnormalities(&mut rng);
                (DiagnosisSpec::patellar(None, Some(location)), abn)
            }
            BaselineClass::Other => (DiagnosisSpec::named(OTHER_DIAGNOSIS), self.other_abnormalities(&mut rng)),
        };
        let metadata = kb
            .map(|kb| sample_metadata(kb, &mut rng_from_seed(derive_seed(seed, &[label_tag("metadata")]))))
            .transpose()?;
        Ok(Documentation { id, metadata, diagnosis, abnormalities, provenance: Provenance::RuleBased, seed })
    }

    /// `count` records; record `i` uses seed `derive_seed(master_seed, [i])`.
    pub fn batch(
        &self,
        class: BaselineClass,
        count: usize,
        master_seed: u64,
        id_prefix: &str,
        kb: Option<&BreedKnowledgeBase>,
        parallelism: Parallelism,
    ) -> Result<Vec<Documentation>, BaselineError> {
        map_range(count, parallelism, |i| {
            self.documentation(class, format!("{id_prefix}{i:06}"), derive_seed(master_seed, &[i as u64]), kb)
        })
        .into_iter()
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::validate_documentation;
    use crate::test_support::{shipped_atlas, shipped_kb};
    use std::collections::HashSet;

    fn baseline() -> Baseline<'static> {
        Baseline::new(shipped_atlas()).unwrap()
    }

    #[test]
    fn forced_plan_gives_three_findings() {
        let b = baseline();
        let chronic = shipped_atlas().condition_by_label(CHRONIC_LABEL).unwrap().index;
        let plan = PatellarPlan {
            location: Location::Left,
            sides: vec![SidePlan { side: Side::Left, knee: chronic, hip: None, soft_tissue: 2 }],
        };
        let abn = b.realize(&plan, &mut rng_from_seed(3)).unwrap();
        assert_eq!(abn.len(), 3);
        assert_eq!(abn[0], Abnormality { region: b.knee_joint(Side::Left), condition: chronic });
        assert!(abn[1..].iter().all(|a| b.soft_tissue_pool(Side::Left).contains(&a.region)));
        let too_many = PatellarPlan { sides: vec![SidePlan { soft_tissue: 99, ..plan.sides[0].clone() }], ..plan };
        assert!(matches!(b.realize(&too_many, &mut rng_from_seed(3)), Err(BaselineError::PoolTooSmall { .. })));
    }

    #[test]
    fn shipped_pools() {
        let b = baseline();
        assert_eq!(b.soft_tissue_pool(Side::Left).len(), 37);
        assert_eq!(b.soft_tissue_pool(Side::Right).len(), 37);
        assert_eq!(shipped_atlas().region(b.knee_joint(Side::Left)).unwrap().label, "left knee joint");
        assert_eq!(shipped_atlas().region(b.hip_joint(Side::Right)).unwrap().label, "right hip joint");
    }

    #[test]
    fn patellar_records_follow_the_rules() {
        let b = baseline();
        for i in 0..2000u64 {
            let doc = b.documentation(BaselineClass::Patellar, format!("p{i}"), i, None).unwrap();
            let n = doc.abnormalities.len();
            let loc = doc.diagnosis.location.unwrap();
            match loc {
                Location::Bilateral => assert!((6..=20).contains(&n), "{n}"),
                _ => assert!((3..=10).contains(&n), "{n}"),
            }
            let regions: HashSet<_> = doc.abnormalities.iter().map(|a| a.region).collect();
            assert_eq!(regions.len(), n);
            for side in [Side::Left, Side::Right] {
                let affected = loc == Location::Bilateral || (side == Side::Left) == (loc == Location::Left);
                assert_eq!(regions.contains(&b.knee_joint(side)), affected);
                if !affected {
                    assert!(!regions.contains(&b.hip_joint(side)));
                    assert!(b.soft_tissue_pool(side).iter().all(|r| !regions.contains(r)));
                }
            }
            assert_eq!(validate_documentation(doc.clone(), shipped_atlas()).unwrap().doc, doc);
        }
    }

    #[test]
    fn other_records_follow_the_rules() {
        let b = baseline();
        for i in 0..2000u64 {
            let doc = b.documentation(BaselineClass::Other, format!("o{i}"), i, Some(shipped_kb())).unwrap();
            assert!((3..=25).contains(&doc.abnormalities.len()));
            assert_eq!(doc.diagnosis.name, OTHER_DIAGNOSIS);
            assert!(doc.metadata.is_some());
            assert_eq!(validate_documentation(doc.clone(), shipped_atlas()).unwrap().doc, doc);
        }
    }

    #[test]
    fn metadata_does_not_change_findings() {
        let b = baseline();
        let plain = b.documentation(BaselineClass::Patellar, "a".into(), 5, None).unwrap();
        let with = b.documentation(BaselineClass::Patellar, "a".into(), 5, Some(shipped_kb())).unwrap();
        assert_eq!(plain.abnormalities, with.abnormalities);
    }

    #[test]
    fn batch_is_independent_of_parallelism() {
        let b = baseline();
        let seq = b.batch(BaselineClass::Other, 64, 9, "o-", None, Parallelism::Sequential).unwrap();
        let par = b.batch(BaselineClass::Other, 64, 9, "o-", None, Parallelism::Threads(4)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[3].id, "o-000003");
    }
}
