//! Figures of merit: average log-likelihood, reconstruction of clamped
//! images, probability mass on the dataset, and energy histograms of sample
//! batches.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::parallel::map_indexed;
use crate::rbm::{BinaryConfig, LogSumExp, RbmParams, ExactSampler, ENUMERATION_LIMIT};
use crate::rng::SeedTree;

/// Mean of `ln P(r)` over the dataset, with `ln Z` from exact enumeration.
pub fn log_likelihood_av(rbm: &RbmParams, dataset: &[Vec<u8>]) -> Result<f64> {
    let log_z = rbm.exact_log_partition()?;
    log_likelihood_with(rbm, dataset, log_z)
}

/// As [`log_likelihood_av`] with a precomputed `ln Z`.
pub fn log_likelihood_with(rbm: &RbmParams, dataset: &[Vec<u8>], log_z: f64) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut total = 0.0;
    for r in dataset {
        total += -rbm.free_energy(r)? - log_z;
    }
    Ok(total / dataset.len() as f64)
}

fn free_indices(n_v: usize, clamp: &BTreeSet<usize>) -> Result<Vec<usize>> {
    if let Some(&bad) = clamp.iter().find(|&&i| i >= n_v) {
        return Err(Error::param("clamp index", format!("{bad} out of range for {n_v} visible units")));
    }
    let free: Vec<usize> = (0..n_v).filter(|i| !clamp.contains(i)).collect();
    if free.is_empty() {
        return Err(Error::param("clamp", "every pixel is clamped, nothing to reconstruct"));
    }
    Ok(free)
}

/// Clamped Gibbs reconstruction: clamped pixels keep their true values, free
/// pixels start uniformly at random, and `n_g` rounds of (hidden, free
/// visible) updates follow. Returns the fraction of free pixels matching the
/// truth, averaged over pixels, trials and images.
pub fn reconstruction_score<R: Rng + ?Sized>(
    rbm: &RbmParams,
    dataset: &[Vec<u8>],
    clamp: &BTreeSet<usize>,
    n_g: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if n_g == 0 || trials == 0 {
        return Err(Error::param("n_g/trials", "must be at least 1"));
    }
    let free = free_indices(rbm.n_v(), clamp)?;
    for r in dataset {
        check_len("data vector", rbm.n_v(), r.len())?;
    }
    let base = SeedTree::new(rng.random::<u64>());
    let correct = map_indexed(dataset.len() * trials, |task| {
        let (img, trial) = (task / trials, task % trials);
        let mut trng = base.path(&[img as u64, trial as u64]).rng();
        let truth = &dataset[img];
        let mut v = truth.clone();
        for &i in &free {
            v[i] = trng.random::<bool>() as u8;
        }
        let mut h = vec![0u8; rbm.n_h()];
        for _ in 0..n_g {
            rbm.sample_hidden(&v, &mut trng, &mut h);
            let x = rbm.visible_input(&h);
            for &i in &free {
                v[i] = (trng.random::<f64>() < crate::rbm::logistic(x[i])) as u8;
            }
        }
        free.iter().filter(|&&i| v[i] == truth[i]).count()
    });
    let total: usize = correct.into_iter().sum();
    Ok(total as f64 / (dataset.len() * trials * free.len()) as f64)
}

/// The long-run limit of [`reconstruction_score`]: expected fraction of
/// correct free pixels under the exact clamped posterior `P(v_free | v_clamped)`.
pub fn reconstruction_exact(rbm: &RbmParams, dataset: &[Vec<u8>], clamp: &BTreeSet<usize>) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let free = free_indices(rbm.n_v(), clamp)?;
    if free.len() > ENUMERATION_LIMIT {
        return Err(Error::Intractable {
            states_log2: free.len(),
            limit_log2: ENUMERATION_LIMIT,
        });
    }
    let mut total = 0.0;
    for truth in dataset {
        check_len("data vector", rbm.n_v(), truth.len())?;
        let mut v = truth.clone();
        let mut lse = LogSumExp::default();
        let mut states = Vec::with_capacity(1 << free.len());
        for code in 0..(1usize << free.len()) {
            for (k, &i) in free.iter().enumerate() {
                v[i] = ((code >> k) & 1) as u8;
            }
            let lw = -rbm.free_energy(&v)?;
            let hits = free.iter().filter(|&&i| v[i] == truth[i]).count();
            lse.push(lw);
            states.push((lw, hits));
        }
        let norm = lse.value();
        let expected: f64 = states
            .iter()
            .map(|&(lw, hits)| (lw - norm).exp() * hits as f64)
            .sum();
        total += expected / free.len() as f64;
    }
    Ok(total / dataset.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaProbability {
    /// Model probability of the set of configurations whose visible part is a
    /// dataset image.
    pub total: f64,
    pub per_image: Vec<f64>,
    /// Sum of the `floor(N / 2)` smallest per-image probabilities.
    pub bottom_half: f64,
}

pub fn delta_probability(rbm: &RbmParams, dataset: &[Vec<u8>]) -> Result<DeltaProbability> {
    let log_z = rbm.exact_log_partition()?;
    delta_probability_with(rbm, dataset, log_z)
}

pub fn delta_probability_with(rbm: &RbmParams, dataset: &[Vec<u8>], log_z: f64) -> Result<DeltaProbability> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let per_image = dataset
        .iter()
        .map(|r| Ok((-rbm.free_energy(r)? - log_z).exp()))
        .collect::<Result<Vec<f64>>>()?;
    let total = per_image.iter().sum();
    let mut sorted = per_image.clone();
    sorted.sort_by(f64::total_cmp);
    let bottom_half = sorted[..dataset.len() / 2].iter().sum();
    Ok(DeltaProbability {
        total,
        per_image,
        bottom_half,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyHistogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
    /// Boltzmann probability of each bin at `T = 1`; `None` when the model is
    /// too large for the exact oracles.
    pub overlay: Option<Vec<f64>>,
    pub min_energy: f64,
}

impl EnergyHistogram {
    pub fn n_samples(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width
    }

    /// `bin_center,count,overlay` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,count,boltzmann\n");
        for (k, c) in self.counts.iter().enumerate() {
            let p = self
                .overlay
                .as_ref()
                .map(|o| format!("{:.6e}", o[k]))
                .unwrap_or_default();
            out.push_str(&format!("{:.6},{c},{p}\n", self.bin_center(k)));
        }
        out
    }
}

const OVERLAY_ENUMERATION_UNITS: usize = 24;
const OVERLAY_SAMPLES: usize = 100_000;

/// Histogram of RBM energies over a batch, with the exact energy law of the
/// model as an overlay: by full enumeration up to 24 units, otherwise from
/// `10^5` draws of the exact sampler (deterministic per parameter set).
pub fn energy_histogram<'a>(
    rbm: &RbmParams,
    configs: impl IntoIterator<Item = &'a BinaryConfig>,
    bins: usize,
) -> Result<EnergyHistogram> {
    if bins == 0 {
        return Err(Error::param("bins", "must be at least 1"));
    }
    let energies = configs
        .into_iter()
        .map(|c| rbm.energy(c))
        .collect::<Result<Vec<f64>>>()?;
    if energies.is_empty() {
        return Err(Error::Empty("sample batch"));
    }
    let min_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let max_energy = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (bins, width) = if max_energy > min_energy {
        (bins, (max_energy - min_energy) / bins as f64)
    } else {
        (1, 1.0)
    };
    let lo = if bins == 1 && max_energy == min_energy {
        min_energy - 0.5
    } else {
        min_energy
    };
    let bin_of = |e: f64| (((e - lo) / width).floor().max(0.0) as usize).min(bins - 1);
    let mut counts = vec![0; bins];
    for &e in &energies {
        counts[bin_of(e)] += 1;
    }
    let in_range = |e: f64| e >= lo && e <= lo + width * bins as f64;
    let overlay = boltzmann_energy_law(rbm).map(|law| {
        let mut o = vec![0.0; bins];
        for (e, p) in law {
            if in_range(e) {
                o[bin_of(e)] += p;
            }
        }
        o
    });
    Ok(EnergyHistogram {
        lo,
        width,
        counts,
        overlay,
        min_energy,
    })
}

/// `(energy, probability)` pairs describing the model's energy law.
fn boltzmann_energy_law(rbm: &RbmParams) -> Option<Vec<(f64, f64)>> {
    let n = rbm.n_v() + rbm.n_h();
    if n <= OVERLAY_ENUMERATION_UNITS {
        let log_z = rbm.exact_log_partition().ok()?;
        let law = (0..1u64 << n)
            .map(|idx| {
                let c = BinaryConfig::from_index(idx, rbm.n_v(), rbm.n_h());
                let e = rbm.energy_unchecked(&c.v, &c.h);
                (e, (-e - log_z).exp())
            })
            .collect();
        return Some(law);
    }
    let sampler = ExactSampler::new(rbm).ok()?;
    let mut rng = SeedTree::new(rbm.checksum()).rng();
    let p = 1.0 / OVERLAY_SAMPLES as f64;
    Some(
        (0..OVERLAY_SAMPLES)
            .map(|_| {
                let c = sampler.sample(&mut rng);
                (rbm.energy_unchecked(&c.v, &c.h), p)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bas::{clamp_mask, generate_bas, ClampRegion};
    use crate::rbm::test_support::{brute_force_joint, random_rbm};
    use crate::rng::stream;

    #[test]
    fn zero_model_log_likelihood() {
        let rbm = RbmParams::zeros(16, 16).unwrap();
        let data = generate_bas(4).unwrap().images;
        let ll = log_likelihood_av(&rbm, &data).unwrap();
        assert!((ll + 16.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn peaked_model_log_likelihood() {
        let img = vec![1, 0, 0, 1];
        let a = img.iter().map(|&x| if x == 1 { 30.0 } else { -30.0 }).collect();
        let rbm = RbmParams::from_parts(4, 2, vec![0.0; 8], a, vec![0.0; 2], None).unwrap();
        let ll = log_likelihood_av(&rbm, &[img]).unwrap();
        assert!(ll.abs() < 1e-9);
    }

    #[test]
    fn log_likelihood_matches_enumeration() {
        let rbm = random_rbm(4, 4, 1.5, 11);
        let data = generate_bas(2).unwrap().images;
        let joint = brute_force_joint(&rbm);
        let z: f64 = joint.iter().map(|(_, e)| (-e).exp()).sum();
        let oracle: f64 = data
            .iter()
            .map(|r| {
                let p: f64 = joint.iter().filter(|(c, _)| &c.v == r).map(|(_, e)| (-e).exp()).sum::<f64>() / z;
                p.ln()
            })
            .sum::<f64>()
            / data.len() as f64;
        let ll = log_likelihood_av(&rbm, &data).unwrap();
        assert!((ll - oracle).abs() < 1e-10 * oracle.abs());
    }

    #[test]
    fn delta_probability_oracles() {
        let data = generate_bas(4).unwrap().images;
        let d = delta_probability(&RbmParams::zeros(16, 16).unwrap(), &data).unwrap();
        assert!((d.total - 30.0 / 65536.0).abs() < 1e-15);
        assert!((d.per_image.iter().sum::<f64>() - d.total).abs() < 1e-18);
        assert!((d.bottom_half - 15.0 / 65536.0).abs() < 1e-15);

        let rbm = random_rbm(4, 4, 1.0, 5);
        let data = generate_bas(2).unwrap().images;
        let joint = brute_force_joint(&rbm);
        let z: f64 = joint.iter().map(|(_, e)| (-e).exp()).sum();
        let d = delta_probability(&rbm, &data).unwrap();
        for (r, p) in data.iter().zip(&d.per_image) {
            let oracle: f64 = joint.iter().filter(|(c, _)| &c.v == r).map(|(_, e)| (-e).exp()).sum::<f64>() / z;
            assert!((p - oracle).abs() < 1e-12);
        }
        let mut sorted = d.per_image.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((d.bottom_half - sorted[..3].iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn lowering_an_image_energy_raises_delta() {
        let data = generate_bas(2).unwrap().images;
        let rbm = random_rbm(4, 3, 1.0, 2);
        let before = delta_probability(&rbm, &data).unwrap().total;
        let mut moved = rbm.clone();
        // strengthen the bias towards the all-ones image
        for a in moved.visible_bias_mut() {
            *a += 0.3;
        }
        let after = delta_probability(&moved, &data[3..4]).unwrap().total;
        let before_one = delta_probability(&rbm, &data[3..4]).unwrap().total;
        assert!(after > before_one);
        assert!(before > 0.0 && before < 1.0);
    }

    #[test]
    fn reconstruction_of_pinned_image() {
        let data = generate_bas(4).unwrap().images;
        let img = data[7].clone();
        let a = img.iter().map(|&x| if x == 1 { 30.0 } else { -30.0 }).collect();
        let rbm = RbmParams::from_parts(16, 4, vec![0.0; 64], a, vec![0.0; 4], None).unwrap();
        let clamp = clamp_mask(4, &ClampRegion::OuterBorder).unwrap();
        let score = reconstruction_score(&rbm, &[img.clone()], &clamp, 10, 20, &mut stream(1)).unwrap();
        assert!(score > 0.999);
        assert!(reconstruction_exact(&rbm, &[img], &clamp).unwrap() > 0.999);
    }

    #[test]
    fn zero_model_reconstructs_at_chance() {
        let data = generate_bas(4).unwrap().images;
        let rbm = RbmParams::zeros(16, 16).unwrap();
        let clamp = clamp_mask(4, &ClampRegion::OuterBorder).unwrap();
        let score = reconstruction_score(&rbm, &data, &clamp, 5, 100, &mut stream(2)).unwrap();
        assert!((score - 0.5).abs() < 0.02);
        assert!((reconstruction_exact(&rbm, &data, &clamp).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_reconstruction_approaches_exact() {
        let data = generate_bas(3).unwrap().images;
        let rbm = random_rbm(9, 6, 1.5, 4);
        let clamp = clamp_mask(3, &ClampRegion::OuterBorder).unwrap();
        let exact = reconstruction_exact(&rbm, &data, &clamp).unwrap();
        let mc = reconstruction_score(&rbm, &data, &clamp, 50, 2000, &mut stream(5)).unwrap();
        assert!((mc - exact).abs() < 0.01, "{mc} vs {exact}");
    }

    #[test]
    fn fully_clamped_is_an_error() {
        let rbm = RbmParams::zeros(4, 2).unwrap();
        let clamp = clamp_mask(2, &ClampRegion::OuterBorder).unwrap();
        let data = generate_bas(2).unwrap().images;
        assert!(reconstruction_score(&rbm, &data, &clamp, 5, 5, &mut stream(0)).is_err());
        assert!(reconstruction_exact(&rbm, &data, &clamp).is_err());
    }

    #[test]
    fn single_configuration_histogram() {
        let rbm = random_rbm(3, 3, 1.0, 1);
        let batch = vec![BinaryConfig::zeros(3, 3); 5];
        let h = energy_histogram(&rbm, &batch, 10).unwrap();
        assert_eq!(h.counts, vec![5]);
        assert_eq!(h.min_energy, 0.0);
        assert!(h.lo <= 0.0 && 0.0 < h.lo + h.width);
        assert!(energy_histogram(&rbm, &[], 10).is_err());
    }

    #[test]
    fn exact_samples_fit_the_overlay() {
        let rbm = random_rbm(3, 3, 1.0, 7);
        let sampler = ExactSampler::new(&rbm).unwrap();
        let mut rng = stream(9);
        let batch: Vec<BinaryConfig> = (0..50_000).map(|_| sampler.sample(&mut rng)).collect();
        let h = energy_histogram(&rbm, &batch, 12).unwrap();
        let overlay = h.overlay.clone().unwrap();
        let n = h.n_samples() as f64;
        let mut chi2 = 0.0;
        let mut dof = 0;
        for (c, p) in h.counts.iter().zip(&overlay) {
            if p * n >= 5.0 {
                chi2 += (*c as f64 - p * n).powi(2) / (p * n);
                dof += 1;
            }
        }
        // generous bound: mean dof, sd sqrt(2 dof)
        assert!(chi2 < dof as f64 + 6.0 * (2.0 * dof as f64).sqrt(), "chi2 {chi2} dof {dof}");
    }

    #[test]
    fn large_model_overlay_from_exact_sampler() {
        let rbm = random_rbm(16, 16, 0.3, 3);
        let batch = vec![BinaryConfig::zeros(16, 16)];
        let h = energy_histogram(&rbm, &batch, 4).unwrap();
        assert!(h.overlay.is_some());
    }
}
