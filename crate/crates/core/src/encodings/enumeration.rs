//! Factoradic numbering of permutations and the enumeration encoding.

use serde::{Deserialize, Serialize};

use super::instance::{Decoded, Route, TspInstance};
use super::problem::{Bits, EncodedProblem, EncodingKind, Layout};
use crate::error::{bail_arg, Result};

/// Largest `N` whose `N!` fits in a `u64`.
pub const MAX_ENUM_CITIES: usize = 20;

pub fn factorial(n: usize) -> Result<u64> {
    if n > MAX_ENUM_CITIES {
        bail_arg!("{n}! does not fit in 64 bits");
    }
    Ok((1..=n as u64).product())
}

/// Smallest `k` with `2^k ≥ x` (0 for `x ≤ 1`).
pub fn ceil_log2(x: u64) -> usize {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as usize
    }
}

/// Lexicographic rank `idx` → permutation of `0..n`.
///
/// Digit `d_i` (place value `(n-1-i)!`) picks the `d_i`-th smallest city not yet used.
pub fn index_to_permutation(idx: u64, n: usize) -> Result<Route> {
    let total = factorial(n)?;
    if idx >= total {
        bail_arg!("index {idx} out of range for {n}! = {total}");
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut rest = idx;
    for pos in 0..n {
        let place = factorial(n - 1 - pos)?;
        let digit = (rest / place) as usize;
        rest %= place;
        perm.push(remaining.remove(digit));
    }
    Ok(Route(perm))
}

/// Inverse of [`index_to_permutation`].
pub fn permutation_to_index(route: &Route) -> Result<u64> {
    let route = Route::new(route.0.clone())?;
    let n = route.len();
    let mut idx = 0u64;
    for pos in 0..n {
        let smaller_later = route.0[pos + 1..].iter().filter(|&&c| c < route.0[pos]).count();
        idx += smaller_later as u64 * factorial(n - 1 - pos)?;
    }
    Ok(idx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumLayout {
    pub n: usize,
    pub num_routes: u64,
    pub e_pen: f64,
}

/// Penalty energy for out-of-range codes: `1.01·B·N·max W`, or 1 when that is zero.
pub fn default_e_pen(inst: &TspInstance) -> f64 {
    let v = 1.01 * inst.b * inst.n as f64 * inst.max_w();
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// Enumeration encoding: `⌈log₂ N!⌉` qubits holding a permutation rank.
pub fn encode_enum(inst: &TspInstance, e_pen: Option<f64>) -> Result<EncodedProblem> {
    inst.validate()?;
    let n = inst.n;
    let num_routes = factorial(n)?;
    let e_pen = e_pen.unwrap_or_else(|| default_e_pen(inst));
    let (_, best) = inst.brute_force_optimum();
    if !(e_pen > inst.b * best) {
        bail_arg!("e_pen = {e_pen} must exceed the optimal energy {}", inst.b * best);
    }
    Ok(EncodedProblem {
        kind: EncodingKind::Enum,
        num_qubits: ceil_log2(num_routes),
        instance: inst.clone(),
        hamiltonian: None,
        layout: Layout::Enum(EnumLayout {
            n,
            num_routes,
            e_pen,
        }),
    })
}

fn code<B: Bits + ?Sized>(bits: &B, width: usize) -> u64 {
    (0..width).fold(0u64, |acc, i| acc | (bits.bit(i) as u64) << i)
}

pub(crate) fn energy<B: Bits + ?Sized>(p: &EncodedProblem, lay: &EnumLayout, bits: &B) -> f64 {
    match decode(p, lay, bits) {
        Decoded::Route(r) => p.instance.b * p.instance.cost(&r),
        Decoded::Infeasible => lay.e_pen,
    }
}

pub(crate) fn decode<B: Bits + ?Sized>(p: &EncodedProblem, lay: &EnumLayout, bits: &B) -> Decoded {
    let idx = code(bits, p.num_qubits);
    if idx < lay.num_routes {
        Decoded::Route(index_to_permutation(idx, lay.n).expect("in range"))
    } else {
        Decoded::Infeasible
    }
}

pub(crate) fn encode_route(p: &EncodedProblem, route: &Route) -> Result<Vec<bool>> {
    let idx = permutation_to_index(route)?;
    Ok((0..p.num_qubits).map(|i| idx >> i & 1 == 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::instance::random_instance;

    fn lexicographic(n: usize) -> Vec<Vec<usize>> {
        // Independent oracle: recursive enumeration in lexicographic order.
        fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for c in 0..n {
                if !prefix.contains(&c) {
                    prefix.push(c);
                    rec(prefix, n, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), n, &mut out);
        out
    }

    #[test]
    fn identity_at_zero() {
        for n in 1..8 {
            assert_eq!(index_to_permutation(0, n).unwrap().0, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn matches_lexicographic_order() {
        assert_eq!(index_to_permutation(3, 3).unwrap().0, vec![1, 2, 0]);
        for n in 1..=5 {
            for (k, perm) in lexicographic(n).into_iter().enumerate() {
                assert_eq!(index_to_permutation(k as u64, n).unwrap().0, perm);
            }
        }
    }

    #[test]
    fn round_trip_five() {
        for k in 0..120 {
            let r = index_to_permutation(k, 5).unwrap();
            assert_eq!(permutation_to_index(&r).unwrap(), k);
        }
    }

    #[test]
    fn out_of_range_index() {
        assert!(index_to_permutation(6, 3).is_err());
        assert!(permutation_to_index(&Route(vec![0, 0, 1])).is_err());
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(ceil_log2(24), 5);
        assert_eq!(ceil_log2(120), 7);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(4), 2);
        let p = encode_enum(&TspInstance::zero(4).unwrap(), None).unwrap();
        assert_eq!(p.num_qubits, 5);
    }

    #[test]
    fn out_of_range_code_gets_penalty() {
        let inst = TspInstance::zero(3).unwrap();
        let p = encode_enum(&inst, Some(7.0)).unwrap();
        let b = [false, true, true];
        assert_eq!(p.energy(&b[..]), 7.0);
        assert_eq!(p.decode(&b[..]), Decoded::Infeasible);
    }

    #[test]
    fn minimum_is_optimal_tour() {
        for seed in 0..10 {
            let inst = random_instance(3, seed).unwrap();
            let p = encode_enum(&inst, None).unwrap();
            let min = (0..8u64).map(|x| p.energy(&x)).fold(f64::INFINITY, f64::min);
            let (_, best) = inst.brute_force_optimum();
            assert!((min - inst.b * best).abs() < 1e-12);
        }
    }
}
