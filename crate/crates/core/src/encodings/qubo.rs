//! One-hot (QUBO) encoding: `b_{t,i} = 1` iff city `i` is visited at time `t`.

use serde::{Deserialize, Serialize};

use super::instance::{Decoded, Route, TspInstance};
use super::problem::{Bits, EncodedProblem, EncodingKind, Layout};
use crate::error::Result;
use crate::polynomial::{BinaryPolynomial, PolynomialBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboLayout {
    pub n: usize,
    /// City 0 pinned to time 0; its row and column are removed.
    pub fix_first_city: bool,
}

/// Value of a one-hot slot: a qubit or a constant fixed by pinning city 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Qubit(usize),
    Fixed(bool),
}

impl QuboLayout {
    pub fn num_qubits(&self) -> usize {
        let m = if self.fix_first_city { self.n - 1 } else { self.n };
        m * m
    }

    pub fn cell(&self, t: usize, i: usize) -> Cell {
        let n = self.n;
        if !self.fix_first_city {
            return Cell::Qubit(t * n + i);
        }
        if t == 0 || i == 0 {
            Cell::Fixed(t == 0 && i == 0)
        } else {
            Cell::Qubit((t - 1) * (n - 1) + (i - 1))
        }
    }

    #[inline]
    fn x<B: Bits + ?Sized>(&self, bits: &B, t: usize, i: usize) -> bool {
        match self.cell(t, i) {
            Cell::Qubit(q) => bits.bit(q),
            Cell::Fixed(v) => v,
        }
    }

    pub fn collections(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        (0..n)
            .map(|t| {
                (0..n)
                    .filter_map(|i| match self.cell(t, i) {
                        Cell::Qubit(q) => Some(q),
                        Cell::Fixed(_) => None,
                    })
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect()
    }
}

pub fn encode_qubo(inst: &TspInstance, fix_first_city: bool) -> Result<EncodedProblem> {
    inst.validate()?;
    let n = inst.n;
    let layout = QuboLayout { n, fix_first_city };
    let nq = layout.num_qubits();
    let x = |t: usize, i: usize| match layout.cell(t, i) {
        Cell::Qubit(q) => BinaryPolynomial::var(nq, q),
        Cell::Fixed(v) => BinaryPolynomial::constant(nq, v as u8 as f64),
    };
    let one = BinaryPolynomial::constant(nq, 1.0);
    let mut h = PolynomialBuilder::new(nq);
    for t in 0..n {
        let row: BinaryPolynomial = (0..n).map(|i| x(t, i)).sum();
        h.add(&(one.clone() - row).square(), inst.a1);
    }
    for i in 0..n {
        let col: BinaryPolynomial = (0..n).map(|t| x(t, i)).sum();
        h.add(&(one.clone() - col).square(), inst.a2);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || inst.w[i][j] == 0.0 {
                continue;
            }
            for t in 0..n {
                h.add(&(x(t, i) * x((t + 1) % n, j)), inst.b * inst.w[i][j]);
            }
        }
    }
    Ok(EncodedProblem {
        kind: EncodingKind::Qubo,
        num_qubits: nq,
        instance: inst.clone(),
        hamiltonian: Some(h.finish()),
        layout: Layout::Qubo(layout),
    })
}

pub(crate) fn energy<B: Bits + ?Sized>(inst: &TspInstance, lay: &QuboLayout, bits: &B) -> f64 {
    let n = lay.n;
    let mut penalty = 0.0;
    for t in 0..n {
        let s = (0..n).filter(|&i| lay.x(bits, t, i)).count() as f64;
        penalty += inst.a1 * (1.0 - s) * (1.0 - s);
    }
    for i in 0..n {
        let s = (0..n).filter(|&t| lay.x(bits, t, i)).count() as f64;
        penalty += inst.a2 * (1.0 - s) * (1.0 - s);
    }
    let mut cost = 0.0;
    for t in 0..n {
        let u = (t + 1) % n;
        for i in (0..n).filter(|&i| lay.x(bits, t, i)) {
            for j in (0..n).filter(|&j| j != i && lay.x(bits, u, j)) {
                cost += inst.w[i][j];
            }
        }
    }
    penalty + inst.b * cost
}

pub(crate) fn decode<B: Bits + ?Sized>(lay: &QuboLayout, bits: &B) -> Decoded {
    let n = lay.n;
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for t in 0..n {
        let mut city = None;
        for i in 0..n {
            if lay.x(bits, t, i) {
                if city.is_some() || used[i] {
                    return Decoded::Infeasible;
                }
                city = Some(i);
            }
        }
        match city {
            Some(i) => {
                used[i] = true;
                perm.push(i);
            }
            None => return Decoded::Infeasible,
        }
    }
    Decoded::Route(Route(perm))
}

pub(crate) fn encode_route(lay: &QuboLayout, route: &Route) -> Result<Vec<bool>> {
    let mut bits = vec![false; lay.num_qubits()];
    for (t, &i) in route.0.iter().enumerate() {
        match lay.cell(t, i) {
            Cell::Qubit(q) => bits[q] = true,
            Cell::Fixed(true) => {}
            Cell::Fixed(false) => {
                return Err(crate::error::Error::InvalidArgument(
                    "route must start at city 0 when the first city is fixed".into(),
                ))
            }
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::instance::random_instance;

    fn bits(n: usize, x: u64) -> Vec<bool> {
        (0..n).map(|i| x >> i & 1 == 1).collect()
    }

    #[test]
    fn qubit_count() {
        let inst = TspInstance::zero(3).unwrap();
        assert_eq!(encode_qubo(&inst, false).unwrap().num_qubits, 9);
        assert_eq!(encode_qubo(&inst, true).unwrap().num_qubits, 4);
    }

    #[test]
    fn zero_cost_has_six_ground_states() {
        let p = encode_qubo(&TspInstance::zero(3).unwrap(), false).unwrap();
        let zeros: Vec<u64> = (0..512u64).filter(|x| p.energy(x) == 0.0).collect();
        assert_eq!(zeros.len(), 6);
        let mut routes: Vec<Vec<usize>> = zeros
            .iter()
            .map(|x| p.decode(x).route().unwrap().0.clone())
            .collect();
        routes.sort();
        routes.dedup();
        assert_eq!(routes.len(), 6);
    }

    #[test]
    fn structural_term_count() {
        for n in 3..=5 {
            let inst = random_instance(n, 9).unwrap();
            let p = encode_qubo(&inst, false).unwrap();
            let h = p.hamiltonian.as_ref().unwrap();
            assert_eq!(h.term_count(), 2 * n * n * n - n * n + 1);
            assert_eq!(h.order(), 2);
        }
    }

    #[test]
    fn oracle_matches_polynomial() {
        for fix in [false, true] {
            let inst = random_instance(3, 4).unwrap();
            let p = encode_qubo(&inst, fix).unwrap();
            let c = p.hamiltonian.as_ref().unwrap().compile().unwrap();
            for x in 0..(1u64 << p.num_qubits) {
                assert!((c.evaluate(x) - p.energy(&x)).abs() < 1e-9);
                assert!((p.energy(&x) - p.energy(&bits(p.num_qubits, x)[..])).abs() == 0.0);
            }
        }
    }

    #[test]
    fn fixed_first_city_counts() {
        let p = encode_qubo(&TspInstance::zero(4).unwrap(), true).unwrap();
        let zeros = (0..(1u64 << 9)).filter(|x| p.energy(x) == 0.0).count();
        assert_eq!(zeros, 6);
        let r = Route(vec![0, 2, 3, 1]);
        let b = p.encode_route(&r).unwrap();
        assert_eq!(p.decode(&b), Decoded::Route(r));
        assert!(p.encode_route(&Route(vec![1, 0, 2, 3])).is_err());
    }
}
