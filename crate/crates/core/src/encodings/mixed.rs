//! Mixed encoding: each time slot holds `L` bunches of `K` bits; exactly one bunch
//! is nonzero and its code `v ∈ 1..2^K-1` selects city `l·(2^K-1) + v - 1`.
//! Slack bits turn "at least one bit set" into an equality penalty.

use serde::{Deserialize, Serialize};

use super::enumeration::ceil_log2;
use super::hobo::{bits_per_slot, code_template, equality_template, h_valid_hobo, h_valid_value};
use super::instance::{Decoded, Route, TspInstance};
use super::problem::{Bits, EncodedProblem, EncodingKind, Layout};
use crate::error::{bail_arg, Result};
use crate::polynomial::{BinaryPolynomial, PolynomialBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedLayout {
    pub n: usize,
    /// Bits per bunch.
    pub k: usize,
    /// Bunches per time slot.
    pub l: usize,
    /// Slack bits per time slot, `⌈log₂(KL)⌉`.
    pub slack_bits: usize,
    /// Cities served by the last bunch.
    pub last_bunch_cities: usize,
    /// `K / log₂ N`.
    pub alpha: f64,
}

impl MixedLayout {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let kmax = bits_per_slot(n);
        if n < 2 || k == 0 || k > kmax {
            bail_arg!("K must lie in 1..={kmax} for N = {n}, got {k}");
        }
        let per = (1usize << k) - 1;
        let l = n.div_ceil(per);
        Ok(Self {
            n,
            k,
            l,
            slack_bits: ceil_log2((k * l) as u64),
            last_bunch_cities: n - (l - 1) * per,
            alpha: k as f64 / (n as f64).log2(),
        })
    }

    pub fn cities_per_bunch(&self) -> usize {
        (1 << self.k) - 1
    }

    pub fn slot_width(&self) -> usize {
        self.k * self.l
    }

    pub fn num_qubits(&self) -> usize {
        self.n * self.slot_width() + self.n * self.slack_bits
    }

    pub fn qubit(&self, t: usize, bunch: usize, bit: usize) -> usize {
        t * self.slot_width() + bunch * self.k + bit
    }

    pub fn slack_qubit(&self, t: usize, i: usize) -> usize {
        self.n * self.slot_width() + t * self.slack_bits + i
    }

    /// Bunch and in-bunch code of `city`.
    pub fn bunch_code(&self, city: usize) -> (usize, u64) {
        let per = self.cities_per_bunch();
        (city / per, (city % per + 1) as u64)
    }

    /// City addressed by `code` in `bunch`, if any.
    pub fn city(&self, bunch: usize, code: u64) -> Option<usize> {
        if code == 0 {
            return None;
        }
        let c = bunch * self.cities_per_bunch() + code as usize - 1;
        (c < self.n).then_some(c)
    }

    /// True when the last bunch has codes that map to no city.
    pub fn needs_guard(&self) -> bool {
        self.last_bunch_cities < self.cities_per_bunch()
    }

    fn slot_vars(&self, t: usize) -> Vec<u32> {
        let mut v: Vec<u32> = (0..self.slot_width())
            .map(|j| (t * self.slot_width() + j) as u32)
            .collect();
        v.extend((0..self.slack_bits).map(|i| self.slack_qubit(t, i) as u32));
        v
    }

    fn bunch_vars(&self, t: usize, bunch: usize) -> Vec<u32> {
        (0..self.k).map(|b| self.qubit(t, bunch, b) as u32).collect()
    }

    pub fn collections(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|t| self.slot_vars(t).into_iter().map(|q| q as usize).collect())
            .collect()
    }
}

/// Slot-local validity penalty over `KL` code bits followed by the slack bits.
fn valid_template(lay: &MixedLayout) -> Result<BinaryPolynomial> {
    let (k, l, s) = (lay.k, lay.l, lay.slack_bits);
    let w = k * l;
    let nv = w + s;
    let var = |i| BinaryPolynomial::var(nv, i);
    let mut inner = BinaryPolynomial::constant(nv, 1.0);
    for j in 0..w {
        inner = inner - var(j);
    }
    for i in 0..s {
        inner = inner + var(w + i) * (1u64 << i) as f64;
    }
    let mut out = PolynomialBuilder::new(nv);
    out.add(&inner.square(), 1.0);
    let bunch_sum = |b: usize| -> BinaryPolynomial { (0..k).map(|j| var(b * k + j)).sum() };
    for b in 0..l {
        let others: BinaryPolynomial = (0..l).filter(|&o| o != b).map(bunch_sum).sum();
        out.add(&(bunch_sum(b) * others), 1.0);
    }
    if lay.needs_guard() {
        let guard = h_valid_hobo(lay.last_bunch_cities + 1, k)?;
        let map: Vec<u32> = (0..k).map(|j| ((l - 1) * k + j) as u32).collect();
        out.add_mapped(&guard, &map, 1.0);
    }
    Ok(out.finish())
}

/// `(Σx + Σy) · Π(1 - (x - y)²)` over `2K` variables.
fn distinct_template(k: usize) -> BinaryPolynomial {
    let nv = 2 * k;
    let pop: BinaryPolynomial = (0..nv).map(|i| BinaryPolynomial::var(nv, i)).sum();
    pop * equality_template(k)
}

pub fn encode_mixed(inst: &TspInstance, k: usize) -> Result<EncodedProblem> {
    inst.validate()?;
    let n = inst.n;
    let lay = MixedLayout::new(n, k)?;
    let nq = lay.num_qubits();
    let mut h = PolynomialBuilder::new(nq);

    let valid = valid_template(&lay)?;
    for t in 0..n {
        h.add_mapped(&valid, &lay.slot_vars(t), inst.a1);
    }
    let distinct = distinct_template(k);
    for t in 0..n {
        for u in t + 1..n {
            for b in 0..lay.l {
                let map: Vec<u32> = lay.bunch_vars(t, b).into_iter().chain(lay.bunch_vars(u, b)).collect();
                h.add_mapped(&distinct, &map, inst.a2);
            }
        }
    }
    for t in 0..n {
        let u = (t + 1) % n;
        let deltas = |slot: usize| -> Result<Vec<BinaryPolynomial>> {
            (0..n)
                .map(|i| {
                    let (b, code) = lay.bunch_code(i);
                    code_template(k, code).relabel(&lay.bunch_vars(slot, b), nq)
                })
                .collect()
        };
        let (dt, du) = (deltas(t)?, deltas(u)?);
        for i in 0..n {
            for j in 0..n {
                if i != j && inst.w[i][j] != 0.0 {
                    h.add(&(&dt[i] * &du[j]), inst.b * inst.w[i][j]);
                }
            }
        }
    }
    Ok(EncodedProblem {
        kind: EncodingKind::Mixed,
        num_qubits: nq,
        instance: inst.clone(),
        hamiltonian: Some(h.finish()),
        layout: Layout::Mixed(lay),
    })
}

struct Slot {
    codes: Vec<u64>,
    pops: Vec<u32>,
    slack: u64,
}

fn read_slot<B: Bits + ?Sized>(lay: &MixedLayout, bits: &B, t: usize) -> Slot {
    let codes: Vec<u64> = (0..lay.l)
        .map(|b| bits.field(lay.qubit(t, b, 0), lay.k))
        .collect();
    let pops = codes.iter().map(|c| c.count_ones()).collect();
    let slack = if lay.slack_bits == 0 {
        0
    } else {
        bits.field(lay.slack_qubit(t, 0), lay.slack_bits)
    };
    Slot { codes, pops, slack }
}

pub(crate) fn energy<B: Bits + ?Sized>(inst: &TspInstance, lay: &MixedLayout, bits: &B) -> f64 {
    let n = lay.n;
    let slots: Vec<Slot> = (0..n).map(|t| read_slot(lay, bits, t)).collect();
    let mut penalty = 0.0;
    for s in &slots {
        let total: u32 = s.pops.iter().sum();
        let d = 1.0 - total as f64 + s.slack as f64;
        let mut v = d * d;
        for &p in &s.pops {
            v += (p * (total - p)) as f64;
        }
        if lay.needs_guard() {
            v += h_valid_value(lay.last_bunch_cities + 1, lay.k, s.codes[lay.l - 1]) as f64;
        }
        penalty += inst.a1 * v;
    }
    for t in 0..n {
        for u in t + 1..n {
            let mut v = 0u32;
            for b in 0..lay.l {
                if slots[t].codes[b] == slots[u].codes[b] {
                    v += slots[t].pops[b] + slots[u].pops[b];
                }
            }
            penalty += inst.a2 * v as f64;
        }
    }
    let cities: Vec<Vec<usize>> = slots
        .iter()
        .map(|s| {
            s.codes
                .iter()
                .enumerate()
                .filter_map(|(b, &c)| lay.city(b, c))
                .collect()
        })
        .collect();
    let mut cost = 0.0;
    for t in 0..n {
        for &i in &cities[t] {
            for &j in &cities[(t + 1) % n] {
                if i != j {
                    cost += inst.w[i][j];
                }
            }
        }
    }
    penalty + inst.b * cost
}

pub(crate) fn decode<B: Bits + ?Sized>(lay: &MixedLayout, bits: &B) -> Decoded {
    let n = lay.n;
    let mut used = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for t in 0..n {
        let s = read_slot(lay, bits, t);
        let mut nonzero = s.codes.iter().enumerate().filter(|(_, &c)| c != 0);
        let (b, &code) = match (nonzero.next(), nonzero.next()) {
            (Some(x), None) => x,
            _ => return Decoded::Infeasible,
        };
        if s.slack != (code.count_ones() - 1) as u64 {
            return Decoded::Infeasible;
        }
        match lay.city(b, code) {
            Some(c) if !used[c] => {
                used[c] = true;
                perm.push(c);
            }
            _ => return Decoded::Infeasible,
        }
    }
    Decoded::Route(Route(perm))
}

pub(crate) fn encode_route(lay: &MixedLayout, route: &Route) -> Vec<bool> {
    let mut bits = vec![false; lay.num_qubits()];
    for (t, &c) in route.0.iter().enumerate() {
        let (b, code) = lay.bunch_code(c);
        for j in 0..lay.k {
            bits[lay.qubit(t, b, j)] = code >> j & 1 == 1;
        }
        let slack = code.count_ones() as u64 - 1;
        for i in 0..lay.slack_bits {
            bits[lay.slack_qubit(t, i)] = slack >> i & 1 == 1;
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::hobo::encode_hobo;
    use crate::encodings::instance::random_instance;
    use crate::encodings::qubo::encode_qubo;

    #[test]
    fn layout_sizes() {
        let l = MixedLayout::new(6, 2).unwrap();
        assert_eq!((l.l, l.slack_bits, l.num_qubits()), (2, 2, 36));
        let l = MixedLayout::new(3, 1).unwrap();
        assert_eq!((l.l, l.slack_bits), (3, 2));
        assert!(MixedLayout::new(4, 3).is_err());
        assert!(MixedLayout::new(4, 0).is_err());
    }

    #[test]
    fn city_numbering() {
        let l = MixedLayout::new(7, 2).unwrap();
        assert_eq!(l.l, 3);
        assert_eq!(l.bunch_code(0), (0, 1));
        assert_eq!(l.bunch_code(2), (0, 3));
        assert_eq!(l.bunch_code(3), (1, 1));
        assert_eq!(l.city(2, 1), Some(6));
        assert_eq!(l.city(2, 2), None);
        assert!(l.needs_guard());
    }

    #[test]
    fn oracle_matches_polynomial() {
        for (n, k) in [(3, 1), (3, 2), (4, 1), (4, 2), (5, 2)] {
            let inst = random_instance(n, 5).unwrap();
            let p = encode_mixed(&inst, k).unwrap();
            let c = p.hamiltonian.as_ref().unwrap().compile().unwrap();
            let total = 1u64 << p.num_qubits;
            let step = (total / 50_000).max(1);
            let mut x = 0;
            while x < total {
                assert!((c.evaluate(x) - p.energy(&x)).abs() < 1e-9, "n={n} k={k} x={x}");
                x += step;
            }
        }
    }

    #[test]
    fn one_bit_bunches_behave_like_one_hot() {
        let inst = random_instance(3, 1).unwrap();
        let mix = encode_mixed(&inst, 1).unwrap();
        let qubo = encode_qubo(&inst, false).unwrap();
        let Layout::Mixed(lay) = &mix.layout else { unreachable!() };
        for x in 0..(1u64 << mix.num_qubits) {
            if let Decoded::Route(r) = mix.decode(&x) {
                let q = qubo.encode_route(&r).unwrap();
                let one_hot: Vec<bool> = (0..9).map(|i| x >> lay.qubit(i / 3, i % 3, 0) & 1 == 1).collect();
                assert_eq!(q, one_hot);
                assert_eq!(qubo.decode(&q), Decoded::Route(r));
            }
        }
        let feasible = (0..(1u64 << mix.num_qubits)).filter(|x| mix.decode(x).is_feasible()).count();
        assert_eq!(feasible, 6);
    }

    #[test]
    fn single_bunch_matches_binary_slots() {
        let inst = random_instance(3, 8).unwrap();
        let mix = encode_mixed(&inst, 2).unwrap();
        let hobo = encode_hobo(&inst).unwrap();
        for x in 0..64u64 {
            // Binary code c corresponds to bunch code c + 1.
            let codes: Vec<u64> = (0..3).map(|t| (x >> (2 * t) & 3) + 1).collect();
            if codes.iter().any(|&c| c > 3) {
                continue;
            }
            let mut y = 0u64;
            for (t, &c) in codes.iter().enumerate() {
                y |= c << (2 * t);
                y |= ((c.count_ones() - 1) as u64) << (6 + t);
            }
            assert_eq!(mix.decode(&y), hobo.decode(&x));
        }
    }

    #[test]
    fn route_round_trip_and_energy() {
        let inst = random_instance(6, 3).unwrap();
        let p = encode_mixed(&inst, 2).unwrap();
        let r = Route(vec![5, 2, 0, 4, 1, 3]);
        let b = p.encode_route(&r).unwrap();
        assert_eq!(p.decode(&b), Decoded::Route(r.clone()));
        assert_eq!(p.energy(&b), inst.b * inst.cost(&r));
    }
}
