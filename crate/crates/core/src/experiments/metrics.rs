//! Scalar summaries of sampled photon-number traces.

/// Index of the sample closest to `t`.
pub fn sample_index(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - t).abs().total_cmp(&(*b - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `|x(t_late) - x(t_early)| / |x(t_late)|`.
pub fn settle_ratio(times: &[f64], xs: &[f64], t_early: f64, t_late: f64) -> f64 {
    let late = xs[sample_index(times, t_late)];
    let early = xs[sample_index(times, t_early)];
    (late - early).abs() / late.abs()
}

/// `max - min` over samples with `t_from <= t <= t_to`.
pub fn peak_to_peak(times: &[f64], xs: &[f64], t_from: f64, t_to: f64) -> f64 {
    let slack = 1e-6 * (t_to - t_from).abs().max(f64::MIN_POSITIVE);
    let window = times
        .iter()
        .zip(xs)
        .filter(|(t, _)| **t >= t_from - slack && **t <= t_to + slack)
        .map(|(_, x)| *x);
    let (lo, hi) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Interior samples strictly above both neighbours.
pub fn local_maxima(xs: &[f64]) -> usize {
    xs.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxima_of_a_sampled_sine() {
        let xs: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.1 * std::f64::consts::PI).sin()).collect();
        // sin over 5 periods
        assert_eq!(local_maxima(&xs), 5);
        assert_eq!(local_maxima(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(local_maxima(&[0.0, 1.0]), 0);
    }

    #[test]
    fn windows_and_ratios() {
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 2e-9).collect();
        let xs: Vec<f64> = times.iter().map(|t| 1.0 - (-t / 5e-9).exp()).collect();
        assert_eq!(sample_index(&times, 50e-9), 25);
        assert!(settle_ratio(&times, &xs, 50e-9, 100e-9) < 1e-4);
        let ptp = peak_to_peak(&times, &xs, 0.0, 20e-9);
        assert!((ptp - (1.0 - (-4.0f64).exp())).abs() < 1e-12);
        assert_eq!(peak_to_peak(&times, &xs, 200e-9, 300e-9), 0.0);
    }
}
