use std::cmp::Ordering;

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Indices (ascending) of the non-dominated points, all objectives minimised.
///
/// Points are visited in lexicographic order, so anything that dominates a
/// point is visited before it and a point only needs checking against the
/// front found so far. Identical points share a verdict.
pub fn pareto_front<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex(points[i].as_ref(), points[j].as_ref()).then(i.cmp(&j)));
    let mut front: Vec<usize> = Vec::new();
    let mut prev: Option<(usize, bool)> = None;
    let mut out = Vec::new();
    for &i in &order {
        let p = points[i].as_ref();
        let keep = match prev {
            Some((j, k)) if lex(points[j].as_ref(), p).is_eq() => k,
            _ => !front.iter().any(|&f| dominates(points[f].as_ref(), p)),
        };
        if keep {
            if prev.is_none_or(|(j, _)| !lex(points[j].as_ref(), p).is_eq()) {
                front.push(i);
            }
            out.push(i);
        }
        prev = Some((i, keep));
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute(points: &[Vec<f64>]) -> Vec<usize> {
        (0..points.len()).filter(|&i| (0..points.len()).all(|j| !dominates(&points[j], &points[i]))).collect()
    }

    #[test]
    fn examples() {
        let p = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        assert_eq!(pareto_front(&p), vec![0, 1]);
        let same = vec![vec![0.5, 0.5]; 4];
        assert_eq!(pareto_front(&same), vec![0, 1, 2, 3]);
        assert!(pareto_front::<Vec<f64>>(&[]).is_empty());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = crate::rng::rng_for(21, 0, 0);
        for case in 0..300 {
            let n = if case == 0 { 200 } else { rng.random_range(1..120) };
            let d = if case == 0 { 4 } else { rng.random_range(1..5) };
            let coarse = case % 2 == 0;
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| if coarse { rng.random_range(0..4) as f64 } else { rng.random_range(0.0..1.0) }).collect())
                .collect();
            assert_eq!(pareto_front(&pts), brute(&pts));
        }
    }
}
