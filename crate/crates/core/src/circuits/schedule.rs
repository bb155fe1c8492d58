//! Layering of a diagonal Hamiltonian's Ising terms into rounds of commuting phase gates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::gray::gray_rank;
use super::round_robin::{byes, round_robin};
use crate::encodings::qubo::{Cell, QuboLayout};
use crate::encodings::{EncodedProblem, Layout};
use crate::error::{Error, Result};
use crate::polynomial::{IsingPolynomial, Monomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every term on its own, as a CNOT ladder around one rotation.
    PerTerm,
    /// Pairwise slot blocks, Gray-ordered, parity held on an ancilla.
    GrayAncilla,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-term" => Ok(Strategy::PerTerm),
            "gray-ancilla" => Ok(Strategy::GrayAncilla),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::PerTerm => "per-term",
            Strategy::GrayAncilla => "gray-ancilla",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthUnit {
    /// One round per layer of multi-qubit phase gates.
    PhaseGate,
    /// CNOTs and single-qubit rotations.
    CnotRotation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    MultiZ,
    CnotLadder,
    Ancilla,
}

/// `exp(-i θ c Z_S)` for support `S` and coefficient `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub angle_coeff: f64,
    pub kind: GateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<usize>,
    /// CNOTs updating the ancilla parity before the rotation.
    #[serde(skip_serializing_if = "is_zero")]
    pub toggles: usize,
    /// CNOTs clearing the ancilla after the rotation.
    #[serde(skip_serializing_if = "is_zero")]
    pub uncompute: usize,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

impl Gate {
    fn ladder(qubits: Vec<usize>, angle_coeff: f64) -> Self {
        let kind = if qubits.len() == 1 {
            GateKind::MultiZ
        } else {
            GateKind::CnotLadder
        };
        Gate {
            qubits,
            angle_coeff,
            kind,
            ancilla: None,
            toggles: 0,
            uncompute: 0,
        }
    }

    /// Every qubit the gate touches, ancilla included.
    pub fn footprint(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.iter().copied().chain(self.ancilla)
    }

    /// Depth of this gate in CNOT+rotation units.
    pub fn cnot_depth(&self) -> usize {
        match self.kind {
            GateKind::MultiZ => 1,
            GateKind::CnotLadder => 2 * (self.qubits.len() - 1) + 1,
            GateKind::Ancilla => self.toggles + 1 + self.uncompute,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub strategy: Strategy,
    pub num_qubits: usize,
    pub ancilla_count: usize,
    /// Constant term of the Ising Hamiltonian.
    pub global_phase: f64,
    pub rounds: Vec<Vec<Gate>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub strategy: Strategy,
    pub num_qubits: usize,
    pub ancilla_count: usize,
    pub gates: usize,
    pub depth_phase_gate: usize,
    pub depth_cnot_rotation: usize,
    pub volume_phase_gate: usize,
    pub volume_cnot_rotation: usize,
}

impl GateSchedule {
    pub fn empty(num_qubits: usize) -> Self {
        Self {
            strategy: Strategy::PerTerm,
            num_qubits,
            ancilla_count: 0,
            global_phase: 0.0,
            rounds: Vec::new(),
        }
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.rounds.iter().flatten()
    }

    pub fn depth(&self, unit: DepthUnit) -> usize {
        match unit {
            DepthUnit::PhaseGate => self.rounds.iter().filter(|r| !r.is_empty()).count(),
            DepthUnit::CnotRotation => self
                .rounds
                .iter()
                .map(|r| r.iter().map(Gate::cnot_depth).max().unwrap_or(0))
                .sum(),
        }
    }

    pub fn volume(&self, unit: DepthUnit) -> usize {
        self.depth(unit) * (self.num_qubits + self.ancilla_count)
    }

    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            strategy: self.strategy,
            num_qubits: self.num_qubits,
            ancilla_count: self.ancilla_count,
            gates: self.gates().count(),
            depth_phase_gate: self.depth(DepthUnit::PhaseGate),
            depth_cnot_rotation: self.depth(DepthUnit::CnotRotation),
            volume_phase_gate: self.volume(DepthUnit::PhaseGate),
            volume_cnot_rotation: self.volume(DepthUnit::CnotRotation),
        }
    }

    /// Fails if two gates in one round share a qubit or ancilla.
    pub fn check_disjoint(&self) -> Result<()> {
        let width = self.num_qubits + self.ancilla_count;
        for (r, round) in self.rounds.iter().enumerate() {
            let mut used = vec![false; width];
            for g in round {
                for q in g.footprint() {
                    if q >= width || used[q] {
                        return Err(Error::InvalidArgument(format!(
                            "round {r}: qubit {q} used twice or out of range"
                        )));
                    }
                    used[q] = true;
                }
            }
        }
        Ok(())
    }

    /// The Ising polynomial implemented by the schedule.
    pub fn to_ising(&self) -> Result<IsingPolynomial> {
        let mut terms: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), self.global_phase)];
        terms.extend(
            self.gates()
                .map(|g| (g.qubits.iter().map(|&q| q as u32).collect(), g.angle_coeff)),
        );
        IsingPolynomial::from_terms(self.num_qubits, terms)
    }
}

/// Compiles the encoding's Hamiltonian into a gate schedule.
pub fn schedule(problem: &EncodedProblem, strategy: Strategy) -> Result<GateSchedule> {
    let h = problem.hamiltonian.as_ref().ok_or_else(|| {
        Error::UnsupportedEncoding(format!("{} has no Hamiltonian to schedule", problem.kind))
    })?;
    let ising = h.to_ising();
    match strategy {
        Strategy::PerTerm => match &problem.layout {
            Layout::Qubo(lay) => Ok(qubo_layers(&ising, lay)),
            _ => Ok(greedy_layers(&ising)),
        },
        Strategy::GrayAncilla => {
            let collections = problem.collections().ok_or_else(|| {
                Error::UnsupportedEncoding(format!("{} has no time-slot structure", problem.kind))
            })?;
            gray_ancilla(&ising, &collections)
        }
    }
}

fn split_constant(ising: &IsingPolynomial) -> (f64, BTreeMap<Monomial, f64>) {
    let mut constant = 0.0;
    let mut rest = BTreeMap::new();
    for (m, c) in ising.terms() {
        if m.is_empty() {
            constant = c;
        } else {
            rest.insert(m.clone(), c);
        }
    }
    (constant, rest)
}

/// First-fit layering: each term goes into the earliest round where its qubits are free.
fn first_fit(terms: impl IntoIterator<Item = (Monomial, f64)>, num_qubits: usize) -> Vec<Vec<Gate>> {
    let mut rounds: Vec<Vec<Gate>> = Vec::new();
    let mut busy: Vec<Vec<bool>> = Vec::new();
    for (m, c) in terms {
        let qs: Vec<usize> = m.iter().map(|&q| q as usize).collect();
        let slot = busy.iter().position(|b| qs.iter().all(|&q| !b[q]));
        let r = match slot {
            Some(r) => r,
            None => {
                rounds.push(Vec::new());
                busy.push(vec![false; num_qubits]);
                rounds.len() - 1
            }
        };
        for &q in &qs {
            busy[r][q] = true;
        }
        rounds[r].push(Gate::ladder(qs, c));
    }
    rounds
}

fn greedy_layers(ising: &IsingPolynomial) -> GateSchedule {
    let (constant, rest) = split_constant(ising);
    let mut terms: Vec<(Monomial, f64)> = rest.into_iter().collect();
    // Wide terms first packs better.
    terms.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    GateSchedule {
        strategy: Strategy::PerTerm,
        num_qubits: ising.num_qubits(),
        ancilla_count: 0,
        global_phase: constant,
        rounds: first_fit(terms, ising.num_qubits()),
    }
}

/// Structured QUBO layering: 1-local terms, row pairs, column pairs, then the
/// neighbour-time terms grouped by cyclic city shift.
fn qubo_layers(ising: &IsingPolynomial, lay: &QuboLayout) -> GateSchedule {
    let (constant, mut rest) = split_constant(ising);
    let n = lay.n;
    let off = lay.fix_first_city as usize;
    let m = n - off;
    let q = |t: usize, i: usize| match lay.cell(t + off, i + off) {
        Cell::Qubit(q) => q,
        Cell::Fixed(_) => unreachable!("grid cells are qubits"),
    };
    let mut rounds: Vec<Vec<Gate>> = Vec::new();
    let mut take = |rest: &mut BTreeMap<Monomial, f64>, pairs: &[(usize, usize)]| {
        let mut round = Vec::new();
        for &(a, b) in pairs {
            let key = vec![a.min(b) as u32, a.max(b) as u32];
            if let Some(c) = rest.remove(&key) {
                round.push(Gate::ladder(vec![a.min(b), a.max(b)], c));
            }
        }
        rounds.push(round);
    };

    let singles: Vec<Monomial> = rest.keys().filter(|k| k.len() == 1).cloned().collect();
    let mut first = Vec::new();
    for k in singles {
        let c = rest.remove(&k).unwrap();
        first.push(Gate::ladder(vec![k[0] as usize], c));
    }
    let mut all = vec![first];

    let rr = round_robin(m);
    for r in &rr {
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|t| r.iter().map(move |&(i, j)| (t, i, j)))
            .map(|(t, i, j)| (q(t, i), q(t, j)))
            .collect();
        take(&mut rest, &pairs);
    }
    for r in &rr {
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| r.iter().map(move |&(t, u)| (i, t, u)))
            .map(|(i, t, u)| (q(t, i), q(u, i)))
            .collect();
        take(&mut rest, &pairs);
    }

    // Edges between consecutive time rows: a cycle over m rows, or a path when
    // the first city is pinned.
    let cyclic = !lay.fix_first_city;
    let edges: Vec<usize> = if cyclic { (0..m).collect() } else { (0..m.saturating_sub(1)).collect() };
    let shift_pairs = |e: usize, k: usize| -> Vec<(usize, usize)> {
        let u = (e + 1) % m;
        (0..m).map(|i| (q(e, i), q(u, (i + k) % m))).collect()
    };
    if !cyclic || m % 2 == 0 {
        for k in 1..m {
            for parity in 0..2 {
                let pairs: Vec<(usize, usize)> = edges
                    .iter()
                    .filter(|&&e| e % 2 == parity)
                    .flat_map(|&e| shift_pairs(e, k))
                    .collect();
                take(&mut rest, &pairs);
            }
        }
    } else if m >= 3 {
        // Odd cycle: drop one edge per shift so the rest is a 2-colourable path.
        // Dropped edges 0, 2, ..., m-3 are row-disjoint, so they fill two extra rounds.
        let half = (m - 1) / 2;
        let broken = |k: usize| 2 * ((k - 1) % half);
        for k in 1..m {
            let p = broken(k);
            for parity in 0..2 {
                let pairs: Vec<(usize, usize)> = (1..m)
                    .filter(|s| (s - 1) % 2 == parity)
                    .map(|s| (p + s) % m)
                    .flat_map(|e| shift_pairs(e, k))
                    .collect();
                take(&mut rest, &pairs);
            }
        }
        for block in [1..half + 1, half + 1..m] {
            let pairs: Vec<(usize, usize)> = block.flat_map(|k| shift_pairs(broken(k), k)).collect();
            take(&mut rest, &pairs);
        }
    }
    all.append(&mut rounds);
    // Anything outside the expected structure is packed at the end.
    all.extend(first_fit(rest, ising.num_qubits()));
    all.retain(|r| !r.is_empty());
    GateSchedule {
        strategy: Strategy::PerTerm,
        num_qubits: ising.num_qubits(),
        ancilla_count: 0,
        global_phase: constant,
        rounds: all,
    }
}

struct Block {
    qubits: Vec<usize>,
    ancilla: usize,
    terms: Vec<(Monomial, f64)>,
}

fn gray_ancilla(ising: &IsingPolynomial, collections: &[Vec<usize>]) -> Result<GateSchedule> {
    let (constant, rest) = split_constant(ising);
    let nq = ising.num_qubits();
    let nc = collections.len();
    let mut owner = vec![usize::MAX; nq];
    for (c, qs) in collections.iter().enumerate() {
        for &q in qs {
            owner[q] = c;
        }
    }
    let mut singles: Vec<Vec<(Monomial, f64)>> = vec![Vec::new(); nc];
    let mut pairs: BTreeMap<(usize, usize), Vec<(Monomial, f64)>> = BTreeMap::new();
    for (m, c) in rest {
        let mut owners: Vec<usize> = m.iter().map(|&q| owner[q as usize]).collect();
        owners.sort_unstable();
        owners.dedup();
        if owners.iter().any(|&o| o == usize::MAX) {
            return Err(Error::InvalidArgument(format!("term {m:?} touches an unassigned qubit")));
        }
        match owners.as_slice() {
            [a] => singles[*a].push((m, c)),
            [a, b] => pairs.entry((*a, *b)).or_default().push((m, c)),
            _ => {
                return Err(Error::UnsupportedEncoding(format!(
                    "term {m:?} spans more than two time slots"
                )))
            }
        }
    }

    let rr = round_robin(nc);
    let bye = byes(nc, &rr);
    let ancilla_count = nc.div_ceil(2);
    let mut blocks_per_round: Vec<Vec<Block>> = rr
        .iter()
        .enumerate()
        .map(|(r, round)| {
            let mut blocks: Vec<Block> = round
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| Block {
                    qubits: collections[a].iter().chain(&collections[b]).copied().collect(),
                    ancilla: nq + i,
                    terms: pairs.remove(&(a, b)).unwrap_or_default(),
                })
                .collect();
            if let Some(c) = bye[r] {
                blocks.push(Block {
                    qubits: collections[c].clone(),
                    ancilla: nq + round.len(),
                    terms: Vec::new(),
                });
            }
            blocks
        })
        .collect();

    if nc == 1 {
        blocks_per_round.push(vec![Block {
            qubits: collections[0].clone(),
            ancilla: nq,
            terms: Vec::new(),
        }]);
    }
    for (c, terms) in singles.into_iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        // The slot's idle round when there is one, else its least loaded pair block.
        let mut best: Option<(usize, usize, usize)> = None;
        for (r, blocks) in blocks_per_round.iter().enumerate() {
            for (i, b) in blocks.iter().enumerate() {
                if !b.qubits.contains(&collections[c][0]) {
                    continue;
                }
                let solo = b.qubits.len() == collections[c].len();
                let load = if solo { 0 } else { b.terms.len() + 1 };
                if best.map_or(true, |(_, _, l)| load < l) {
                    best = Some((r, i, load));
                }
            }
        }
        let (r, i, _) = best.expect("every slot appears in some block");
        blocks_per_round[r][i].terms.extend(terms);
    }

    let mut rounds = Vec::new();
    for blocks in blocks_per_round {
        let seqs: Vec<Vec<Gate>> = blocks.into_iter().map(block_gates).collect::<Result<_>>()?;
        let len = seqs.iter().map(Vec::len).max().unwrap_or(0);
        for s in 0..len {
            rounds.push(seqs.iter().filter_map(|g| g.get(s).cloned()).collect());
        }
    }
    Ok(GateSchedule {
        strategy: Strategy::GrayAncilla,
        num_qubits: nq,
        ancilla_count,
        global_phase: constant,
        rounds,
    })
}

/// Orders a block's terms by Gray rank of their local masks and records the
/// parity updates needed on the ancilla between consecutive terms.
fn block_gates(block: Block) -> Result<Vec<Gate>> {
    if block.qubits.len() > 63 {
        return Err(Error::Resource(format!(
            "block of {} qubits exceeds the 63-bit mask limit",
            block.qubits.len()
        )));
    }
    let pos: BTreeMap<usize, usize> = block.qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut masked: Vec<(u64, Monomial, f64)> = block
        .terms
        .into_iter()
        .map(|(m, c)| {
            let mask = m.iter().fold(0u64, |acc, &q| acc | 1 << pos[&(q as usize)]);
            (mask, m, c)
        })
        .collect();
    masked.sort_by_key(|(mask, _, _)| gray_rank(*mask));
    let mut prev = 0u64;
    let mut gates: Vec<Gate> = masked
        .into_iter()
        .map(|(mask, m, c)| {
            let toggles = (prev ^ mask).count_ones() as usize;
            prev = mask;
            Gate {
                qubits: m.iter().map(|&q| q as usize).collect(),
                angle_coeff: c,
                kind: GateKind::Ancilla,
                ancilla: Some(block.ancilla),
                toggles,
                uncompute: 0,
            }
        })
        .collect();
    if let Some(last) = gates.last_mut() {
        last.uncompute = prev.count_ones() as usize;
    }
    Ok(gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{encode_enum, encode_hobo, encode_mixed, encode_qubo, random_instance, TspInstance};

    fn check(problem: &EncodedProblem, s: &GateSchedule) {
        s.check_disjoint().unwrap();
        let expected = problem.hamiltonian.as_ref().unwrap().to_ising();
        assert_eq!(s.to_ising().unwrap(), expected);
    }

    #[test]
    fn empty_and_single() {
        let s = GateSchedule::empty(3);
        assert_eq!(s.depth(DepthUnit::PhaseGate), 0);
        assert_eq!(s.depth(DepthUnit::CnotRotation), 0);
        let mut s = GateSchedule::empty(1);
        s.rounds.push(vec![Gate::ladder(vec![0], 0.5)]);
        assert_eq!(s.depth(DepthUnit::CnotRotation), 1);
        assert_eq!(s.volume(DepthUnit::CnotRotation), 1);
    }

    #[test]
    fn qubo_depths() {
        for n in 3..=7 {
            for fix in [false, true] {
                let p = encode_qubo(&random_instance(n, 1).unwrap(), fix).unwrap();
                let s = schedule(&p, Strategy::PerTerm).unwrap();
                check(&p, &s);
                assert!(s.depth(DepthUnit::PhaseGate) <= 4 * n + 1, "n={n}");
                assert!(s.depth(DepthUnit::CnotRotation) <= 12 * n + 1, "n={n}");
                if !fix {
                    let expect = if n % 2 == 1 { 4 * n + 1 } else { 4 * n - 3 };
                    assert_eq!(s.depth(DepthUnit::PhaseGate), expect, "n={n}");
                }
            }
        }
    }

    #[test]
    fn hobo_gray_within_bound() {
        for n in 3..=5 {
            let p = encode_hobo(&random_instance(n, 2).unwrap()).unwrap();
            let s = schedule(&p, Strategy::GrayAncilla).unwrap();
            check(&p, &s);
            assert_eq!(s.ancilla_count, n.div_ceil(2));
            assert!(s.depth(DepthUnit::PhaseGate) <= 2 * n * n * n - 1);
        }
    }

    #[test]
    fn greedy_is_equivalent() {
        let inst = random_instance(4, 3).unwrap();
        for p in [encode_hobo(&inst).unwrap(), encode_mixed(&inst, 1).unwrap()] {
            let s = schedule(&p, Strategy::PerTerm).unwrap();
            check(&p, &s);
            let g = schedule(&p, Strategy::GrayAncilla).unwrap();
            check(&p, &g);
        }
    }

    #[test]
    fn full_block_toggles_one_control() {
        let qubits = vec![3, 7, 8, 11];
        let terms = (1u64..16)
            .map(|m| {
                let mono: Monomial = (0..4).filter(|j| m >> j & 1 == 1).map(|j| qubits[j] as u32).collect();
                (mono, 1.0)
            })
            .collect();
        let gates = block_gates(Block { qubits: qubits.clone(), ancilla: 20, terms }).unwrap();
        assert_eq!(gates.len(), 15);
        assert!(gates.iter().all(|g| g.toggles == 1));
        assert_eq!(gates.last().unwrap().uncompute, 1);
    }

    #[test]
    fn enum_is_rejected() {
        let p = encode_enum(&TspInstance::zero(3).unwrap(), None).unwrap();
        assert!(matches!(schedule(&p, Strategy::PerTerm), Err(Error::UnsupportedEncoding(_))));
    }
}
