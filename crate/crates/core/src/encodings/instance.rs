use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encodings::enumeration::index_to_permutation;
use crate::error::{bail_arg, Error, Result};

/// How default penalty weights are derived from the cost matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyPolicy {
    /// `A = 1.01·B·N·max W`: every infeasible state lies above every tour.
    Safe,
    /// `A = 1.01·B·max W`: the smallest margin above one cost entry.
    Minimal,
}

/// A symmetric TSP instance together with its penalty weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub n: usize,
    pub w: Vec<Vec<f64>>,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl TspInstance {
    /// Validates and builds an instance.
    pub fn new(w: Vec<Vec<f64>>, a1: f64, a2: f64, b: f64) -> Result<Self> {
        let inst = Self {
            n: w.len(),
            w,
            a1,
            a2,
            b,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance with `W ≡ 0` and unit weights.
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; n]; n], 1.0, 1.0, 1.0)
    }

    /// Builds an instance with penalties chosen by `policy` for weight `b`.
    pub fn with_policy(w: Vec<Vec<f64>>, b: f64, policy: PenaltyPolicy) -> Result<Self> {
        let n = w.len();
        let max_w = max_offdiag(&w);
        let a = default_penalty(n, max_w, b, policy);
        Self::new(w, a, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidInstance(format!("need at least 2 cities, got {n}")));
        }
        if self.w.len() != n || self.w.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance("cost matrix must be N×N".into()));
        }
        for i in 0..n {
            if self.w[i][i] != 0.0 {
                return Err(Error::InvalidInstance(format!("W[{i}][{i}] must be zero")));
            }
            for j in 0..n {
                let v = self.w[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "W[{i}][{j}] = {v} must be finite and nonnegative"
                    )));
                }
                if v != self.w[j][i] {
                    return Err(Error::InvalidInstance(format!("W is not symmetric at ({i},{j})")));
                }
            }
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::InvalidInstance(format!("B = {} must be nonnegative", self.b)));
        }
        let floor = self.b * self.max_w();
        for (name, a) in [("A1", self.a1), ("A2", self.a2)] {
            if !a.is_finite() || a <= floor || a <= 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "{name} = {a} must exceed B·max W = {floor} and be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn max_w(&self) -> f64 {
        max_offdiag(&self.w)
    }

    pub fn min_w(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.min(self.w[i][j]);
                }
            }
        }
        if m.is_finite() {
            m
        } else {
            0.0
        }
    }

    /// Cyclic tour length `Σ_t W[π_t, π_{t+1}]`, summed in time order.
    pub fn cost(&self, route: &Route) -> f64 {
        let p = &route.0;
        let n = p.len();
        (0..n).map(|t| self.w[p[t]][p[(t + 1) % n]]).sum()
    }

    /// Exhaustive optimal tour, with city 0 pinned at time 0.
    pub fn brute_force_optimum(&self) -> (Route, f64) {
        let n = self.n;
        let rest = n - 1;
        let count = (1..=rest as u64).product::<u64>();
        let mut best: Option<(Route, f64)> = None;
        for idx in 0..count {
            let tail = index_to_permutation(idx, rest).expect("index in range");
            let mut perm = Vec::with_capacity(n);
            perm.push(0);
            perm.extend(tail.0.iter().map(|&c| c + 1));
            let route = Route(perm);
            let c = self.cost(&route);
            if best.as_ref().map_or(true, |(_, bc)| c < *bc) {
                best = Some((route, c));
            }
        }
        best.expect("at least one tour")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: TspInstance =
            serde_json::from_str(s).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        if inst.n != inst.w.len() {
            return Err(Error::InvalidInstance(format!(
                "n = {} disagrees with {} matrix rows",
                inst.n,
                inst.w.len()
            )));
        }
        inst.validate()?;
        Ok(inst)
    }
}

fn max_offdiag(w: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j {
                m = m.max(v);
            }
        }
    }
    m
}

/// Penalty weight for `policy`; falls back to 1 when `max W = 0`.
pub fn default_penalty(n: usize, max_w: f64, b: f64, policy: PenaltyPolicy) -> f64 {
    let base = match policy {
        PenaltyPolicy::Safe => 1.01 * b * n as f64 * max_w,
        PenaltyPolicy::Minimal => 1.01 * b * max_w,
    };
    if base > 0.0 {
        base
    } else {
        1.0
    }
}

/// Symmetric cost matrix `X + Xᵀ` with `X` uniform on `[0, 1)`, zero diagonal.
pub fn random_cost_matrix(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i][j] = x[i][j] + x[j][i];
            }
        }
    }
    w
}

/// Random instance with safe penalties and `B = 1`.
pub fn random_instance(n: usize, seed: u64) -> Result<TspInstance> {
    if n < 2 {
        bail_arg!("random instance needs N ≥ 2, got {n}");
    }
    TspInstance::with_policy(random_cost_matrix(n, seed), 1.0, PenaltyPolicy::Safe)
}

/// Visit order: `route.0[t]` is the city visited at time `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route(pub Vec<usize>);

impl Route {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &c in &perm {
            if c >= n || seen[c] {
                bail_arg!("{perm:?} is not a permutation");
            }
            seen[c] = true;
        }
        Ok(Route(perm))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Result of decoding a bitstring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    Route(Route),
    Infeasible,
}

impl Decoded {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decoded::Route(_))
    }

    pub fn route(&self) -> Option<&Route> {
        match self {
            Decoded::Route(r) => Some(r),
            Decoded::Infeasible => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instance_is_deterministic() {
        assert_eq!(random_instance(5, 11).unwrap(), random_instance(5, 11).unwrap());
        assert_ne!(random_instance(5, 11).unwrap(), random_instance(5, 12).unwrap());
    }

    #[test]
    fn random_instances_are_symmetric_and_bounded() {
        for seed in 0..100 {
            let inst = random_instance(6, seed).unwrap();
            for i in 0..6 {
                assert_eq!(inst.w[i][i], 0.0);
                for j in 0..6 {
                    assert_eq!(inst.w[i][j], inst.w[j][i]);
                    assert!((0.0..=2.0).contains(&inst.w[i][j]));
                }
            }
        }
    }

    #[test]
    fn random_entries_spread_over_range() {
        let w = random_cost_matrix(40, 3);
        let vals: Vec<f64> = (0..40)
            .flat_map(|i| (0..40).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[i][j])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        assert!(vals.iter().any(|&v| v < 0.2) && vals.iter().any(|&v| v > 1.8));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(TspInstance::new(asym, 5.0, 5.0, 1.0).is_err());
        let diag = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(TspInstance::new(diag, 5.0, 5.0, 1.0).is_err());
        let ok = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(TspInstance::new(ok.clone(), 1.0, 5.0, 1.0).is_err());
        assert!(TspInstance::new(ok, 1.5, 1.5, 1.0).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let inst = random_instance(4, 1).unwrap();
        let back = TspInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert!(TspInstance::from_json(r#"{"n":3,"w":[[0,1],[1,0]],"a1":2,"a2":2,"b":1}"#).is_err());
    }

    #[test]
    fn brute_force_on_square() {
        // Four points on a unit square: perimeter 4 beats either diagonal tour.
        let d = 2f64.sqrt();
        let w = vec![
            vec![0.0, 1.0, d, 1.0],
            vec![1.0, 0.0, 1.0, d],
            vec![d, 1.0, 0.0, 1.0],
            vec![1.0, d, 1.0, 0.0],
        ];
        let inst = TspInstance::with_policy(w, 1.0, PenaltyPolicy::Safe).unwrap();
        let (route, cost) = inst.brute_force_optimum();
        assert!((cost - 4.0).abs() < 1e-12);
        assert_eq!(inst.cost(&route), cost);
    }
}
