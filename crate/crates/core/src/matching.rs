//! Local (per-region, sum-fused) and global (concatenated, modified Hausdorff) matching.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::landmarks::{Region, RegionFeatures};
use crate::sift::Keypoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingRegionPolicy {
    /// An empty region on either side is an error.
    #[default]
    Strict,
    /// Empty regions are skipped and the sum over the `k` remaining ones is rescaled by `4 / k`.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchOptions {
    pub policy: MissingRegionPolicy,
    /// When set, probe keypoints whose best/second-best distance ratio is not below this
    /// value do not contribute to directed distances.
    pub ratio_test: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    pub value: f64,
    pub kind: MatchKind,
    /// Per-region distances of a local match; absent entries were skipped.
    pub per_region: Option<BTreeMap<Region, f64>>,
}

/// Mean over `from` of the distance to its nearest descriptor in `to`.
fn directed(from: &[Keypoint], to: &[Keypoint], ratio_test: Option<f64>) -> f64 {
    let mut total = 0.0;
    let mut used = 0usize;
    let mut fallback = 0.0;
    for a in from {
        let mut best = f64::INFINITY;
        let mut second = f64::INFINITY;
        for b in to {
            let d = a.descriptor.squared_distance(&b.descriptor);
            if d < best {
                second = best;
                best = d;
            } else if d < second {
                second = d;
            }
        }
        let best = best.sqrt();
        fallback += best;
        match ratio_test {
            Some(r) if second.is_finite() && best >= r * second.sqrt() => {}
            _ => {
                total += best;
                used += 1;
            }
        }
    }
    if used == 0 {
        // nothing survived the ratio test
        return fallback / from.len() as f64;
    }
    total / used as f64
}

/// Mean over probe keypoints of the minimum descriptor distance into the gallery region.
pub fn region_distance(probe: &[Keypoint], gallery: &[Keypoint], options: &MatchOptions) -> Result<f64, Error> {
    if probe.is_empty() || gallery.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    Ok(directed(probe, gallery, options.ratio_test))
}

/// Sum of the four region distances.
pub fn local_match(probe: &RegionFeatures, gallery: &RegionFeatures, options: &MatchOptions) -> Result<MatchScore> {
    let mut per_region = BTreeMap::new();
    for region in Region::ALL {
        let (p, g) = (probe.get(region), gallery.get(region));
        if p.is_empty() || g.is_empty() {
            match options.policy {
                MissingRegionPolicy::Strict => return Err(Error::MissingRegion(region)),
                MissingRegionPolicy::Skip => continue,
            }
        }
        per_region.insert(region, directed(p, g, options.ratio_test));
    }
    if per_region.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let sum: f64 = per_region.values().sum();
    let value = if per_region.len() == Region::ALL.len() {
        sum
    } else {
        sum * Region::ALL.len() as f64 / per_region.len() as f64
    };
    Ok(MatchScore {
        value,
        kind: MatchKind::Local,
        per_region: Some(per_region),
    })
}

/// The four region lists appended in fixed order.
pub fn concat_features(regions: &RegionFeatures) -> Result<Vec<Keypoint>> {
    if regions.total() == 0 {
        return Err(Error::EmptyFeatureSet);
    }
    let mut out = Vec::with_capacity(regions.total());
    for region in Region::ALL {
        out.extend_from_slice(regions.get(region));
    }
    Ok(out)
}

/// `max(d(P -> G), d(G -> P))` with `d` the mean of nearest-descriptor distances.
pub fn global_match(probe: &[Keypoint], gallery: &[Keypoint], options: &MatchOptions) -> Result<MatchScore> {
    if probe.is_empty() || gallery.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let forward = directed(probe, gallery, options.ratio_test);
    let backward = directed(gallery, probe, options.ratio_test);
    Ok(MatchScore {
        value: forward.max(backward),
        kind: MatchKind::Global,
        per_region: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sift::{Descriptor, DESCRIPTOR_LEN};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn kp_with(values: [f32; DESCRIPTOR_LEN]) -> Keypoint {
        Keypoint {
            x: 0.0,
            y: 0.0,
            scale: 1.0,
            orientation: 0.0,
            descriptor: Descriptor::from_values(values),
            octave: 0,
            level: 1,
            response: 0.0,
        }
    }

    /// Unit vector along axis 0 rotated toward axis 1 so that pair distances are exact.
    fn on_circle(theta: f64) -> Keypoint {
        let mut v = [0.0f32; DESCRIPTOR_LEN];
        v[0] = theta.cos() as f32;
        v[1] = theta.sin() as f32;
        kp_with(v)
    }

    fn random_kp(rng: &mut StdRng) -> Keypoint {
        let mut v = [0.0f32; DESCRIPTOR_LEN];
        v.iter_mut().for_each(|x| *x = rng.gen::<f32>());
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        kp_with(v)
    }

    fn regions(lists: [Vec<Keypoint>; 4]) -> RegionFeatures {
        RegionFeatures::new(lists, [10.0; 4])
    }

    #[test]
    fn self_distance_is_zero() {
        let mut rng = StdRng::seed_from_u64(1);
        let set: Vec<_> = (0..6).map(|_| random_kp(&mut rng)).collect();
        let o = MatchOptions::default();
        assert!(region_distance(&set, &set, &o).unwrap().abs() < 1e-9);
        assert!(global_match(&set, &set, &o).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn region_distance_picks_nearest() {
        // chord length 2 sin(t/2): choose gallery angles giving distances 0.3 and 0.7
        let t = |d: f64| 2.0 * (d / 2.0).asin();
        let probe = vec![on_circle(0.0)];
        let gallery = vec![on_circle(t(0.3)), on_circle(-t(0.7))];
        let d = region_distance(&probe, &gallery, &MatchOptions::default()).unwrap();
        assert!((d - 0.3).abs() < 1e-6, "{d}");
    }

    #[test]
    fn empty_region_is_an_error() {
        let o = MatchOptions::default();
        assert!(region_distance(&[], &[on_circle(0.0)], &o).is_err());
        assert!(global_match(&[on_circle(0.0)], &[], &o).is_err());
    }

    #[test]
    fn local_sum_and_skip_policy() {
        let t = |d: f64| 2.0 * (d / 2.0).asin();
        let probe = regions([
            vec![on_circle(0.0)],
            vec![on_circle(0.0)],
            vec![on_circle(0.0)],
            vec![on_circle(0.0)],
        ]);
        let gallery = regions([
            vec![on_circle(t(0.1))],
            vec![on_circle(t(0.2))],
            vec![on_circle(t(0.3))],
            vec![on_circle(t(0.4))],
        ]);
        let s = local_match(&probe, &gallery, &MatchOptions::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-6);
        let per: f64 = s.per_region.as_ref().unwrap().values().sum();
        assert!((per - s.value).abs() < 1e-9);

        let mut missing_nose = gallery.clone();
        missing_nose = regions([
            missing_nose.get(Region::LeftEye).to_vec(),
            missing_nose.get(Region::RightEye).to_vec(),
            vec![],
            missing_nose.get(Region::Mouth).to_vec(),
        ]);
        assert!(matches!(
            local_match(&probe, &missing_nose, &MatchOptions::default()),
            Err(Error::MissingRegion(Region::Nose))
        ));
        let skip = MatchOptions {
            policy: MissingRegionPolicy::Skip,
            ..MatchOptions::default()
        };
        let s = local_match(&probe, &missing_nose, &skip).unwrap();
        assert!((s.value - 4.0 / 3.0 * 0.7).abs() < 1e-6, "{}", s.value);
        assert_eq!(s.per_region.unwrap().len(), 3);
    }

    #[test]
    fn concat_preserves_order_and_length() {
        let mk = |n: usize, tag: f64| (0..n).map(|i| on_circle(tag + i as f64 * 0.01)).collect::<Vec<_>>();
        let rf = regions([mk(3, 0.0), mk(4, 1.0), mk(2, 2.0), mk(5, 3.0)]);
        let all = concat_features(&rf).unwrap();
        assert_eq!(all.len(), 14);
        assert_eq!(all[3], rf.get(Region::RightEye)[0]);
        assert_eq!(all[13], rf.get(Region::Mouth)[4]);

        let mouth_only = regions([vec![], vec![], vec![], mk(2, 0.0)]);
        assert_eq!(concat_features(&mouth_only).unwrap().len(), 2);
        assert!(matches!(concat_features(&RegionFeatures::default()), Err(Error::EmptyFeatureSet)));
    }

    #[test]
    fn global_match_small_cases() {
        let o = MatchOptions::default();
        let (a, b) = (on_circle(0.0), on_circle(0.9));
        let single = global_match(std::slice::from_ref(&a), std::slice::from_ref(&b), &o).unwrap();
        assert_eq!(single.value, a.descriptor.distance(&b.descriptor));

        let t = |d: f64| 2.0 * (d / 2.0).asin();
        let probe = vec![on_circle(t(0.2)), on_circle(-t(0.6))];
        let gallery = vec![on_circle(0.0)];
        let s = global_match(&probe, &gallery, &o).unwrap();
        assert!((s.value - 0.4).abs() < 1e-6, "{}", s.value);
        let rev = global_match(&gallery, &probe, &o).unwrap();
        assert_eq!(s.value, rev.value);
    }

    #[test]
    fn ratio_test_filters_ambiguous_matches() {
        let probe = vec![on_circle(0.0), on_circle(1.0)];
        // first probe is ambiguous (two equidistant candidates), second is not
        let gallery = vec![on_circle(0.5), on_circle(-0.5), on_circle(1.05)];
        let plain = region_distance(&probe, &gallery, &MatchOptions::default()).unwrap();
        let filtered = region_distance(
            &probe,
            &gallery,
            &MatchOptions {
                ratio_test: Some(0.8),
                ..MatchOptions::default()
            },
        )
        .unwrap();
        assert!(filtered < plain);
    }

    #[test]
    fn local_match_is_monotone_in_region_distance() {
        let t = |d: f64| 2.0 * (d / 2.0).asin();
        let base = [0.2, 0.3, 0.4, 0.5];
        let probe = regions([0, 1, 2, 3].map(|_| vec![on_circle(0.0)]));
        let mut last = f64::NEG_INFINITY;
        for bump in [0.0, 0.1, 0.2, 0.4] {
            let gallery = regions([0, 1, 2, 3].map(|i| {
                vec![on_circle(t(if i == 2 { base[i] + bump } else { base[i] }))]
            }));
            let v = local_match(&probe, &gallery, &MatchOptions::default()).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }
}
