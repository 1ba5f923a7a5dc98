use std::collections::HashMap;

use super::Partition;
use crate::{Error, Result};

/// Element-centric similarity of two flat partitions.
///
/// Element `i` in a cluster `C` has affinity `alpha / |C|` to every member
/// of `C`, plus `1 - alpha` to itself. The score of `i` is
/// `1 - ||a1_i - a2_i||_1 / (2 alpha)` and the similarity is the mean score.
///
/// The L1 distance only depends on the two cluster sizes and their overlap,
/// so the whole computation is linear in the number of elements.
pub fn element_centric_similarity(p1: &Partition, p2: &Partition, alpha: f64) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::invalid(format!(
            "partitions have different lengths ({} vs {})",
            p1.len(),
            p2.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let s1 = p1.community_sizes();
    let s2 = p2.community_sizes();
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
        *overlap.entry((a, b)).or_insert(0) += 1;
    }
    let mut total = 0.0;
    for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
        let n1 = s1[a] as f64;
        let n2 = s2[b] as f64;
        let k = overlap[&(a, b)] as f64;
        // shared members (i included) differ by alpha*|1/n1 - 1/n2| each;
        // members of only one cluster contribute alpha/n1 or alpha/n2
        let l1_over_alpha = k * (1.0 / n1 - 1.0 / n2).abs() + (n1 - k) / n1 + (n2 - k) / n2;
        total += 1.0 - 0.5 * l1_over_alpha;
    }
    Ok((total / p1.len() as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal evaluation of the affinity vectors.
    fn ecs_oracle(l1: &[usize], l2: &[usize], alpha: f64) -> f64 {
        let n = l1.len();
        let affinity = |l: &[usize], i: usize| -> Vec<f64> {
            let size = l.iter().filter(|&&c| c == l[i]).count() as f64;
            (0..n)
                .map(|j| {
                    let mut a = if l[j] == l[i] { alpha / size } else { 0.0 };
                    if j == i {
                        a += 1.0 - alpha;
                    }
                    a
                })
                .collect()
        };
        let mut s = 0.0;
        for i in 0..n {
            let (a, b) = (affinity(l1, i), affinity(l2, i));
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            s += 1.0 - d / (2.0 * alpha);
        }
        s / n as f64
    }

    fn p(l: &[usize]) -> Partition {
        Partition::from_labels(l).unwrap()
    }

    #[test]
    fn identical_and_relabelled() {
        let a = p(&[0, 0, 1, 2, 2, 2]);
        let b = p(&[5, 5, 9, 1, 1, 1]);
        assert_eq!(element_centric_similarity(&a, &a, 0.9).unwrap(), 1.0);
        assert_eq!(element_centric_similarity(&a, &b, 0.9).unwrap(), 1.0);
    }

    #[test]
    fn pairs_against_singletons() {
        let a = p(&[0, 0, 1, 1]);
        let s = Partition::singletons(4);
        let got = element_centric_similarity(&a, &s, 0.9).unwrap();
        let oracle = ecs_oracle(a.labels(), s.labels(), 0.9);
        // each element: 1 - (|0.45 - 0.9| + 0.45) / 1.8 = 0.5
        assert!((oracle - 0.5).abs() < 1e-15);
        assert!((got - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_oracle_on_mixed_partitions() {
        let cases: [(&[usize], &[usize]); 3] = [
            (&[0, 0, 0, 1, 1, 2, 2, 2, 2], &[0, 1, 0, 1, 1, 2, 3, 3, 2]),
            (&[0, 1, 2, 3, 4], &[0, 0, 0, 0, 0]),
            (&[0, 0, 1, 1, 1, 0], &[1, 1, 1, 0, 0, 0]),
        ];
        for (a, b) in cases {
            for alpha in [0.1, 0.5, 0.9] {
                let got = element_centric_similarity(&p(a), &p(b), alpha).unwrap();
                assert!((got - ecs_oracle(a, b, alpha)).abs() < 1e-12);
                let rev = element_centric_similarity(&p(b), &p(a), alpha).unwrap();
                assert!((got - rev).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(element_centric_similarity(&p(&[0, 1]), &p(&[0]), 0.9).is_err());
        assert!(element_centric_similarity(&p(&[0]), &p(&[0]), 1.0).is_err());
    }
}
