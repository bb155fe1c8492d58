//! Circle-method round-robin pairing.

/// Rounds of disjoint pairs covering every unordered pair of `0..n` exactly once.
///
/// Even `n` gives `n - 1` rounds, odd `n` gives `n` rounds with one item idle per round.
pub fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return Vec::new();
    }
    let m = if n % 2 == 0 { n } else { n + 1 };
    let mut ring: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m - 1);
    for _ in 0..m - 1 {
        let mut round = Vec::with_capacity(m / 2);
        for i in 0..m / 2 {
            let (a, b) = (ring[i], ring[m - 1 - i]);
            if a < n && b < n {
                round.push((a.min(b), a.max(b)));
            }
        }
        rounds.push(round);
        ring[1..].rotate_right(1);
    }
    rounds
}

/// The item left without a partner in each round (odd `n` only).
pub fn byes(n: usize, rounds: &[Vec<(usize, usize)>]) -> Vec<Option<usize>> {
    rounds
        .iter()
        .map(|r| {
            let mut seen = vec![false; n];
            for &(a, b) in r {
                seen[a] = true;
                seen[b] = true;
            }
            seen.iter().position(|s| !s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn check(n: usize) {
        let rounds = round_robin(n);
        let expected = if n % 2 == 0 { n - 1 } else { n };
        assert_eq!(rounds.len(), expected, "n={n}");
        let mut all = HashSet::new();
        for r in &rounds {
            let mut used = HashSet::new();
            for &(a, b) in r {
                assert!(a < b && b < n);
                assert!(used.insert(a) && used.insert(b));
                assert!(all.insert((a, b)), "pair repeated");
            }
            assert_eq!(r.len(), n / 2);
        }
        assert_eq!(all.len(), n * (n - 1) / 2);
    }

    #[test]
    fn small_cases() {
        assert_eq!(round_robin(2), vec![vec![(0, 1)]]);
        for n in 2..=20 {
            check(n);
        }
    }

    #[test]
    fn odd_byes_visit_everyone_once() {
        let rounds = round_robin(7);
        let mut b: Vec<usize> = byes(7, &rounds).into_iter().map(Option::unwrap).collect();
        b.sort();
        assert_eq!(b, (0..7).collect::<Vec<_>>());
        assert!(byes(6, &round_robin(6)).iter().all(Option::is_none));
    }
}
