//! Local feature similarity matching: exhaustive 2-NN search, Lowe's ratio
//! test and the survivor count used as the halt signal.

use alloc::vec::Vec;

use crate::features::{detect_and_describe, Descriptor, Feature, FeatureParams};
use crate::image::{CropMask, CropRows, GrayImage};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatcherConfig {
    /// Neighbours per query; only 2 is supported.
    pub k: usize,
    pub ratio_threshold: f32,
    /// Halt when the score falls strictly below this count.
    pub sim_threshold: usize,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self { k: 2, ratio_threshold: 0.7, sim_threshold: 20 }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k != 2 {
            return Err(Error::InvalidConfig("k must be 2"));
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold < 1.0) {
            return Err(Error::InvalidConfig("ratio_threshold must be in (0, 1)"));
        }
        Ok(())
    }

    /// `true` when `score` is low enough to stop the robot.
    pub fn halts(&self, score: SimScore) -> bool {
        score.0 < self.sim_threshold
    }
}

/// Nearest and second-nearest neighbour of one query descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub query_index: usize,
    pub train_index: usize,
    pub distance: f32,
    pub second_distance: f32,
}

/// Number of matches that survived the ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimScore(pub usize);

impl SimScore {
    pub fn value(self) -> usize {
        self.0
    }
}

/// Brute-force 2-NN of every query among `train`, ordered by query index.
///
/// Queries get no pair when `train` holds fewer than two descriptors. Equal
/// distances resolve to the lower train index.
pub fn knn_match(query: &[Descriptor], train: &[Descriptor]) -> Vec<MatchPair> {
    if train.len() < 2 {
        return Vec::new();
    }
    query
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let (mut best, mut best_i, mut second) = (f32::INFINITY, 0usize, f32::INFINITY);
            for (ti, t) in train.iter().enumerate() {
                let Some(d) = distance_squared_below(q, t, second) else {
                    continue;
                };
                if d < best {
                    second = best;
                    best = d;
                    best_i = ti;
                } else if d < second {
                    second = d;
                }
            }
            MatchPair {
                query_index: qi,
                train_index: best_i,
                distance: libm::sqrtf(best),
                second_distance: libm::sqrtf(second),
            }
        })
        .collect()
}

/// Squared distance, or `None` once a partial sum shows it cannot be below
/// `bound`. Sums in the same order as [`Descriptor::distance_squared`].
#[inline]
fn distance_squared_below(a: &Descriptor, b: &Descriptor, bound: f32) -> Option<f32> {
    let mut acc = [0.0f32; 8];
    for (block, (a, b)) in a.0.chunks_exact(32).zip(b.0.chunks_exact(32)).enumerate() {
        for (a, b) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
            for i in 0..8 {
                let d = a[i] - b[i];
                acc[i] += d * d;
            }
        }
        // Partial sums only grow; the margin covers the different rounding of
        // the partial total. The last block falls through to the exact sum.
        if block < 3 && acc.iter().sum::<f32>() > bound * 1.000_01 {
            return None;
        }
    }
    Some(((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])))
}

/// Lowe's test: `distance < ratio · second_distance`, exact matches always kept.
#[inline]
pub fn passes_ratio(pair: &MatchPair, ratio_threshold: f32) -> bool {
    pair.distance == 0.0 || pair.distance < ratio_threshold * pair.second_distance
}

pub fn ratio_filter(matches: &[MatchPair], ratio_threshold: f32) -> Vec<MatchPair> {
    matches.iter().copied().filter(|m| passes_ratio(m, ratio_threshold)).collect()
}

/// Full matcher output for one image pair, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct LfsmReport {
    pub reference: Vec<Feature>,
    pub current: Vec<Feature>,
    pub matches: Vec<MatchPair>,
    pub score: SimScore,
}

impl LfsmReport {
    pub fn kept(&self, pair: &MatchPair, cfg: &MatcherConfig) -> bool {
        passes_ratio(pair, cfg.ratio_threshold)
    }
}

fn descriptors(features: &[Feature]) -> Vec<Descriptor> {
    features.iter().map(|f| f.descriptor).collect()
}

/// Score of precomputed reference features against the current features.
pub fn score_features(reference: &[Feature], current: &[Feature], cfg: &MatcherConfig) -> SimScore {
    let matches = knn_match(&descriptors(reference), &descriptors(current));
    SimScore(matches.iter().filter(|m| passes_ratio(m, cfg.ratio_threshold)).count())
}

/// Crops both images with `mask`, describes them and counts ratio-test survivors.
pub fn lfsm_score(
    img_ref: &GrayImage,
    img_cur: &GrayImage,
    mask: CropMask,
    params: &FeatureParams,
    cfg: &MatcherConfig,
) -> Result<SimScore> {
    Ok(lfsm_report(img_ref, img_cur, mask, params, cfg)?.score)
}

pub fn lfsm_report(
    img_ref: &GrayImage,
    img_cur: &GrayImage,
    mask: CropMask,
    params: &FeatureParams,
    cfg: &MatcherConfig,
) -> Result<LfsmReport> {
    cfg.validate()?;
    let reference = detect_and_describe(&img_ref.crop_rows(mask)?, params)?;
    let current = detect_and_describe(&img_cur.crop_rows(mask)?, params)?;
    let matches = knn_match(&descriptors(&reference), &descriptors(&current));
    let score = SimScore(matches.iter().filter(|m| passes_ratio(m, cfg.ratio_threshold)).count());
    Ok(LfsmReport { reference, current, matches, score })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DESCRIPTOR_LEN;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(rng: &mut ChaCha8Rng) -> Descriptor {
        let mut v = [0.0f32; DESCRIPTOR_LEN];
        v.iter_mut().for_each(|x| *x = rng.random::<f32>());
        let n = libm::sqrtf(v.iter().map(|x| x * x).sum());
        v.iter_mut().for_each(|x| *x /= n);
        Descriptor(v)
    }

    fn pair(d: f32, d2: f32) -> MatchPair {
        MatchPair { query_index: 0, train_index: 0, distance: d, second_distance: d2 }
    }

    #[test]
    fn ratio_rule_boundaries() {
        assert!(passes_ratio(&pair(0.3, 1.0), 0.7));
        assert!(!passes_ratio(&pair(0.7, 1.0), 0.7));
        assert!(passes_ratio(&pair(0.0, 0.0), 0.7));
        assert!(!passes_ratio(&pair(0.5, 0.5), 0.7));
    }

    #[test]
    fn self_match_finds_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d: Vec<Descriptor> = (0..40).map(|_| unit(&mut rng)).collect();
        let m = knn_match(&d, &d);
        assert_eq!(m.len(), 40);
        for p in &m {
            assert_eq!(p.train_index, p.query_index);
            assert_eq!(p.distance, 0.0);
            assert!(p.second_distance > 0.0);
        }
        assert_eq!(ratio_filter(&m, 0.7).len(), 40);
    }

    #[test]
    fn single_train_descriptor_yields_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q: Vec<Descriptor> = (0..5).map(|_| unit(&mut rng)).collect();
        assert!(knn_match(&q, &q[..1]).is_empty());
        assert!(knn_match(&q, &[]).is_empty());
    }

    #[test]
    fn ties_go_to_lower_train_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = unit(&mut rng);
        let b = unit(&mut rng);
        let train = vec![b, a, a, b];
        let m = knn_match(&[a], &train);
        assert_eq!(m[0].train_index, 1);
        assert_eq!(m[0].second_distance, 0.0);
        assert!(passes_ratio(&m[0], 0.7));
    }

    #[test]
    fn uniform_images_score_zero() {
        let img = GrayImage::filled(64, 64, 0.5);
        let s = lfsm_score(&img, &img, CropMask::full(64), &FeatureParams::default(), &MatcherConfig::default());
        assert_eq!(s.unwrap(), SimScore(0));
    }

    #[test]
    fn small_crop_propagates_image_too_small() {
        let img = GrayImage::filled(64, 64, 0.5);
        let s = lfsm_score(&img, &img, CropMask::new(50, 64), &FeatureParams::default(), &MatcherConfig::default());
        assert!(matches!(s, Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn halt_rule_is_strict() {
        let cfg = MatcherConfig::default();
        assert!(cfg.halts(SimScore(19)));
        assert!(!cfg.halts(SimScore(20)));
        assert!(!cfg.halts(SimScore(25)));
    }

    #[test]
    fn config_validation() {
        assert!(MatcherConfig::default().validate().is_ok());
        assert!(MatcherConfig { k: 3, ..Default::default() }.validate().is_err());
        assert!(MatcherConfig { ratio_threshold: 1.0, ..Default::default() }.validate().is_err());
    }
}
