//! Rolling median-absolute-deviation rejection of erratic depth readings.

use alloc::vec::Vec;

use super::sample::{Quality, SensorKind, SensorSample};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OutlierFilter {
    /// Samples per window (odd).
    pub window: usize,
    /// Rejection threshold in robust standard deviations.
    pub threshold: f64,
    /// Converts a MAD into a standard deviation for Gaussian noise.
    pub mad_scale: f64,
}

impl Default for OutlierFilter {
    fn default() -> Self {
        OutlierFilter {
            window: 9,
            threshold: 4.0,
            mad_scale: 1.4826,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl OutlierFilter {
    /// Whether `x` is an outlier against the window contents `w`.
    pub fn is_outlier(&self, x: f64, w: &[f64]) -> bool {
        let mut buf: Vec<f64> = w.to_vec();
        let med = median(&mut buf);
        for v in buf.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median(&mut buf);
        (x - med).abs() > self.threshold * self.mad_scale * mad
    }

    /// Flags for a time-ordered series. Each value is tested against the
    /// `window` values centered on it, shifted inward at the ends. Series
    /// shorter than three values are passed through.
    pub fn flags(&self, values: &[f64]) -> Vec<bool> {
        let n = values.len();
        let w = self.window.max(3).min(n);
        if n < 3 {
            return alloc::vec![false; n];
        }
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(w / 2).min(n - w);
                self.is_outlier(values[i], &values[start..start + w])
            })
            .collect()
    }

    /// Returns the samples with depth outliers marked `Suspect`. Undefined
    /// readings are never part of a window; wind and current samples are
    /// passed through unchanged.
    pub fn apply(&self, samples: &[SensorSample]) -> Vec<SensorSample> {
        let mut out = samples.to_vec();
        let idx: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SensorKind::Depth && s.quality == Quality::Ok)
            .filter(|(_, s)| s.value().is_some_and(f64::is_finite))
            .map(|(i, _)| i)
            .collect();
        let values: Vec<f64> = idx.iter().map(|&i| samples[i].raw[0]).collect();
        for (k, flagged) in self.flags(&values).into_iter().enumerate() {
            if flagged {
                out[idx[k]].quality = Quality::Suspect;
            }
        }
        for s in out.iter_mut() {
            if s.kind == SensorKind::Depth
                && s.quality == Quality::Ok
                && !s.value().is_some_and(f64::is_finite)
            {
                s.quality = Quality::Undefined;
            }
        }
        out
    }
}

/// [`OutlierFilter::apply`] with the default nine-sample window.
pub fn filter_outliers(samples: &[SensorSample]) -> Vec<SensorSample> {
    OutlierFilter::default().apply(samples)
}
