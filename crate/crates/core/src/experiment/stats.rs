/// Quantile of sorted data by linear interpolation between order statistics
/// (position `q · (n − 1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// `(q1, median, q3)` of the finite values in `values`.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    Some((
        quantile_sorted(&v, 0.25)?,
        quantile_sorted(&v, 0.5)?,
        quantile_sorted(&v, 0.75)?,
    ))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quartiles(values).map(|q| q.1)
}

/// Largest learning rate of the first contiguous run of sweep points whose
/// converged fraction is at least one half.
///
/// `points` are `(η, converged_fraction)` in any order. Scanning upward in η,
/// the run starts at the first point at or above 0.5 and ends just before the
/// first point that falls below it. `None` if no point reaches 0.5.
pub fn max_eta(points: &[(f64, f64)]) -> Option<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for (eta, frac) in sorted {
        if frac >= 0.5 {
            best = Some(eta);
        } else if best.is_some() {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quartiles_match_hand_values() {
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]), Some((2.0, 3.0, 4.0)));
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]), Some((1.75, 2.5, 3.25)));
        assert_eq!(quartiles(&[7.0]), Some((7.0, 7.0, 7.0)));
        assert_eq!(quartiles(&[]), None);
        assert_eq!(median(&[f64::NAN, 2.0]), Some(2.0));
    }

    #[test]
    fn max_eta_takes_edge_of_first_plateau() {
        let pts = [(1.0, 0.9), (2.0, 0.8), (4.0, 0.5), (8.0, 0.2), (16.0, 0.6)];
        assert_eq!(max_eta(&pts), Some(4.0));
        // unsorted and with a failing low end
        let pts = [(8.0, 0.0), (0.1, 0.3), (2.0, 0.7), (1.0, 0.6)];
        assert_eq!(max_eta(&pts), Some(2.0));
        assert_eq!(max_eta(&[(1.0, 0.4)]), None);
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..50)) {
            let (q1, m, q3) = quartiles(&v).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= q1 && q1 <= m && m <= q3 && q3 <= hi);
        }
    }
}
