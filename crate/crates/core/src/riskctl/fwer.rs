/// Indices whose p-value is at most `δ / m`.
pub fn bonferroni(pvalues: &[f64], delta: f64) -> Vec<usize> {
    let m = pvalues.len() as f64;
    (0..pvalues.len()).filter(|&i| pvalues[i] <= delta / m).collect()
}

/// Fixed-sequence testing: hypotheses are tested in the given order and the
/// procedure stops at the first `p > δ`. Returns that index `J`; the
/// rejections are `0..J`.
pub fn fixed_sequence(pvalues: &[f64], delta: f64) -> usize {
    pvalues.iter().position(|&p| p > delta).unwrap_or(pvalues.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(bonferroni(&[0.01, 0.03, 0.2], 0.1), vec![0, 1]);
        assert_eq!(fixed_sequence(&[0.01, 0.05, 0.2, 0.01], 0.1), 2);
        assert_eq!(fixed_sequence(&[0.2], 0.1), 0);
        assert_eq!(fixed_sequence(&[0.1, 0.1], 0.1), 2);
    }

    proptest! {
        #[test]
        fn prefix_is_stable_under_appending(p in prop::collection::vec(0.0f64..1.0, 0..20), tail in prop::collection::vec(0.0f64..1.0, 0..10)) {
            let j = fixed_sequence(&p, 0.3);
            prop_assert!(p[..j].iter().all(|&x| x <= 0.3));
            if j < p.len() {
                let mut q = p.clone();
                q.extend(tail);
                prop_assert_eq!(fixed_sequence(&q, 0.3), j);
            }
        }
    }
}
