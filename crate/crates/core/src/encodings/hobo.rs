//! Binary (HOBO) encoding: each time slot holds a city number in `K = ⌈log₂ N⌉` bits.

use serde::{Deserialize, Serialize};

use super::enumeration::ceil_log2;
use super::instance::{Decoded, Route, TspInstance};
use super::problem::{Bits, EncodedProblem, EncodingKind, Layout};
use crate::error::{bail_arg, Result};
use crate::polynomial::{BinaryPolynomial, PolynomialBuilder};

pub fn bits_per_slot(n: usize) -> usize {
    ceil_log2(n as u64).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoboLayout {
    pub n: usize,
    pub k: usize,
}

impl HoboLayout {
    pub fn num_qubits(&self) -> usize {
        self.n * self.k
    }

    /// Qubit holding the `2^bit` place of slot `t`.
    pub fn qubit(&self, t: usize, bit: usize) -> usize {
        t * self.k + bit
    }

    pub fn code<B: Bits + ?Sized>(&self, bits: &B, t: usize) -> u64 {
        bits.field(t * self.k, self.k)
    }

    pub fn collections(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|t| (0..self.k).map(|b| self.qubit(t, b)).collect())
            .collect()
    }
}

/// Penalty over `K` bits that vanishes exactly on codes `< n`.
///
/// With `b̃` the bits of `n - 1` and `K₀` its zero positions, the polynomial is
/// `Σ_{k₀∈K₀} b_{k₀} Π_{k>k₀} (1 - (b_k - b̃_k)²)`; it equals 1 on every code `≥ n`.
pub fn h_valid_hobo(n: usize, k: usize) -> Result<BinaryPolynomial> {
    if n == 0 {
        bail_arg!("valid-range polynomial needs n ≥ 1");
    }
    if k >= 64 || (1u64 << k) < n as u64 {
        bail_arg!("{k} bits cannot hold {n} values");
    }
    let top = (n - 1) as u64;
    let mut out = PolynomialBuilder::new(k);
    for k0 in (0..k).filter(|&j| top >> j & 1 == 0) {
        let mut term = BinaryPolynomial::var(k, k0);
        for j in k0 + 1..k {
            let factor = if top >> j & 1 == 1 {
                BinaryPolynomial::var(k, j)
            } else {
                BinaryPolynomial::not_var(k, j)
            };
            term = term * factor;
        }
        out.add(&term, 1.0);
    }
    Ok(out.finish())
}

/// Integer value of [`h_valid_hobo`] at `code`.
pub fn h_valid_value(n: usize, k: usize, code: u64) -> u64 {
    let top = (n - 1) as u64;
    (0..k)
        .filter(|&k0| top >> k0 & 1 == 0 && code >> k0 & 1 == 1)
        .filter(|&k0| (k0 + 1..k).all(|j| (code >> j & 1) == (top >> j & 1)))
        .count() as u64
}

/// `Π_k (1 - (x_k - y_k)²)` over `2K` variables, `x` first.
pub fn equality_template(k: usize) -> BinaryPolynomial {
    let nv = 2 * k;
    let mut p = BinaryPolynomial::constant(nv, 1.0);
    for j in 0..k {
        let d = BinaryPolynomial::var(nv, j) - BinaryPolynomial::var(nv, k + j);
        p = p * (BinaryPolynomial::constant(nv, 1.0) - d.square());
    }
    p
}

/// Indicator that `K` bits spell `code`.
pub fn code_template(k: usize, code: u64) -> BinaryPolynomial {
    let mut p = BinaryPolynomial::constant(k, 1.0);
    for j in 0..k {
        let f = if code >> j & 1 == 1 {
            BinaryPolynomial::var(k, j)
        } else {
            BinaryPolynomial::not_var(k, j)
        };
        p = p * f;
    }
    p
}

pub fn encode_hobo(inst: &TspInstance) -> Result<EncodedProblem> {
    inst.validate()?;
    let n = inst.n;
    let k = bits_per_slot(n);
    let layout = HoboLayout { n, k };
    let nq = layout.num_qubits();
    let slot = |t: usize| -> Vec<u32> { (0..k).map(|b| layout.qubit(t, b) as u32).collect() };

    let mut h = PolynomialBuilder::new(nq);
    let valid = h_valid_hobo(n, k)?;
    for t in 0..n {
        h.add_mapped(&valid, &slot(t), inst.a1);
    }
    let eq = equality_template(k);
    for t in 0..n {
        for u in t + 1..n {
            let map: Vec<u32> = slot(t).into_iter().chain(slot(u)).collect();
            h.add_mapped(&eq, &map, inst.a2);
        }
    }
    let codes: Vec<BinaryPolynomial> = (0..n).map(|i| code_template(k, i as u64)).collect();
    for t in 0..n {
        let u = (t + 1) % n;
        for i in 0..n {
            let di = codes[i].relabel(&slot(t), nq)?;
            for j in 0..n {
                if i == j || inst.w[i][j] == 0.0 {
                    continue;
                }
                let dj = codes[j].relabel(&slot(u), nq)?;
                h.add(&(&di * &dj), inst.b * inst.w[i][j]);
            }
        }
    }
    Ok(EncodedProblem {
        kind: EncodingKind::Hobo,
        num_qubits: nq,
        instance: inst.clone(),
        hamiltonian: Some(h.finish()),
        layout: Layout::Hobo(layout),
    })
}

pub(crate) fn energy<B: Bits + ?Sized>(inst: &TspInstance, lay: &HoboLayout, bits: &B) -> f64 {
    let n = lay.n;
    let codes: Vec<u64> = (0..n).map(|t| lay.code(bits, t)).collect();
    let mut penalty = 0.0;
    for &c in &codes {
        penalty += inst.a1 * h_valid_value(n, lay.k, c) as f64;
    }
    for t in 0..n {
        for u in t + 1..n {
            if codes[t] == codes[u] {
                penalty += inst.a2;
            }
        }
    }
    let mut cost = 0.0;
    for t in 0..n {
        let (a, b) = (codes[t] as usize, codes[(t + 1) % n] as usize);
        if a < n && b < n && a != b {
            cost += inst.w[a][b];
        }
    }
    penalty + inst.b * cost
}

pub(crate) fn decode<B: Bits + ?Sized>(lay: &HoboLayout, bits: &B) -> Decoded {
    let n = lay.n;
    let mut used = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for t in 0..n {
        let c = lay.code(bits, t) as usize;
        if c >= n || used[c] {
            return Decoded::Infeasible;
        }
        used[c] = true;
        perm.push(c);
    }
    Decoded::Route(Route(perm))
}

pub(crate) fn encode_route(lay: &HoboLayout, route: &Route) -> Vec<bool> {
    let mut bits = vec![false; lay.num_qubits()];
    for (t, &c) in route.0.iter().enumerate() {
        for b in 0..lay.k {
            bits[lay.qubit(t, b)] = c >> b & 1 == 1;
        }
    }
    bits
}
