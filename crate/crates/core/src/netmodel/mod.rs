//! Per-unit network model: buses, branches, generators and wind farms.
//!
//! Networks are built either from MATPOWER case text ([`parse_matpower_case`])
//! or from the canonical JSON dump produced by [`PowerNetwork::to_json`].
//! All electrical quantities are stored in per-unit on `base_mva`; angles are
//! in radians. Once constructed a network is immutable and can be shared
//! across threads.

mod coefficients;
mod matpower;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windcost::GmmModel;

pub use coefficients::{derive_branch_coefficients, BranchCoefficients};
pub use matpower::{parse_matpower_case, write_matpower_case, DEFAULT_ANGLE_LIMIT};

/// Resistance assigned to zero-resistance branches before coefficient derivation.
pub const DEFAULT_MIN_RESISTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusType {
    PQ,
    PV,
    /// Reference (slack) bus with fixed magnitude and zero angle.
    Ref,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub bus_type: BusType,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
    /// Voltage magnitude from the case file, used as a power-flow start value.
    pub vm: f64,
    pub va: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_ch: f64,
    pub tau: f64,
    pub shift: f64,
    /// Apparent-power rating; `None` when the case leaves the branch unlimited.
    pub s_max: Option<f64>,
    pub angle_min: f64,
    pub angle_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Cost coefficients in $/h per p.u.², $/h per p.u. and $/h.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub pg: f64,
    pub qg: f64,
    pub vg: f64,
}

impl Generator {
    pub fn cost(&self, p: f64) -> f64 {
        self.c2 * p * p + self.c1 * p + self.c0
    }
}

/// A wind farm attached to a bus. Power quantities are in MW, penalties in $/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub bus: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub power_factor: f64,
    pub k_l: f64,
    pub k_h: f64,
    pub gmm: GmmModel,
    pub pwl_segments: usize,
}

impl WindFarm {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_min_mw && self.p_min_mw <= self.p_max_mw) {
            return Err(Error::Validation(format!(
                "wind farm at bus {}: need 0 <= P_min <= P_max, got [{}, {}]",
                self.bus, self.p_min_mw, self.p_max_mw
            )));
        }
        if !(0.95..=1.0).contains(&self.power_factor) {
            return Err(Error::Validation(format!(
                "wind farm at bus {}: power factor {} outside [0.95, 1]",
                self.bus, self.power_factor
            )));
        }
        if self.k_l < 0.0 || self.k_h < 0.0 {
            return Err(Error::Validation(format!(
                "wind farm at bus {}: penalty coefficients must be nonnegative",
                self.bus
            )));
        }
        if self.pwl_segments < 2 {
            return Err(Error::Validation(format!(
                "wind farm at bus {}: at least 2 PWL segments required",
                self.bus
            )));
        }
        self.gmm.validate()
    }

    /// tan φ for the fixed power factor.
    pub fn q_ratio(&self) -> f64 {
        let pf = self.power_factor;
        (1.0 - pf * pf).max(0.0).sqrt() / pf
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkData {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    #[serde(default)]
    wind_farms: Vec<WindFarm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkData", into = "NetworkData")]
pub struct PowerNetwork {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    wind_farms: Vec<WindFarm>,
    slack: usize,
    index: HashMap<usize, usize>,
}

impl TryFrom<NetworkData> for PowerNetwork {
    type Error = Error;

    fn try_from(d: NetworkData) -> Result<Self> {
        PowerNetwork::new(d.base_mva, d.buses, d.branches, d.generators, d.wind_farms)
    }
}

impl From<PowerNetwork> for NetworkData {
    fn from(n: PowerNetwork) -> Self {
        NetworkData {
            base_mva: n.base_mva,
            buses: n.buses,
            branches: n.branches,
            generators: n.generators,
            wind_farms: n.wind_farms,
        }
    }
}

impl PowerNetwork {
    /// Builds and validates a network. Bus, generator and wind-farm references
    /// are by bus id.
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        wind_farms: Vec<WindFarm>,
    ) -> Result<Self> {
        if !(base_mva > 0.0) {
            return Err(Error::Validation(format!("baseMVA must be positive, got {base_mva}")));
        }
        if buses.is_empty() {
            return Err(Error::Validation("network has no buses".into()));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return Err(Error::Validation(format!("duplicate bus id {}", b.id)));
            }
            if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
                return Err(Error::Validation(format!(
                    "bus {}: need 0 < v_min <= v_max, got [{}, {}]",
                    b.id, b.v_min, b.v_max
                )));
            }
        }
        for (k, br) in branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(Error::Validation(format!(
                        "branch {k} references unknown bus {end}"
                    )));
                }
            }
            if br.from == br.to {
                return Err(Error::Validation(format!("branch {k} is a self-loop")));
            }
            if !(br.tau > 0.0) {
                return Err(Error::InvalidBranch { index: k, reason: format!("tap ratio {}", br.tau) });
            }
            if br.angle_min > br.angle_max {
                return Err(Error::InvalidBranch {
                    index: k,
                    reason: "angle_min > angle_max".into(),
                });
            }
        }
        for (k, g) in generators.iter().enumerate() {
            if !index.contains_key(&g.bus) {
                return Err(Error::Validation(format!(
                    "generator {k} references unknown bus {}",
                    g.bus
                )));
            }
            if g.p_min > g.p_max || g.q_min > g.q_max {
                return Err(Error::Validation(format!("generator {k}: inverted limits")));
            }
            if g.c2 < 0.0 {
                log::warn!("generator {k} has negative quadratic cost {}", g.c2);
            }
        }
        for w in &wind_farms {
            if !index.contains_key(&w.bus) {
                return Err(Error::Validation(format!("wind farm references unknown bus {}", w.bus)));
            }
            w.validate()?;
        }

        let refs: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.bus_type == BusType::Ref)
            .map(|(i, _)| i)
            .collect();
        let slack = match refs.as_slice() {
            [s] => *s,
            [] => return Err(Error::Validation("network has no reference bus".into())),
            _ => {
                return Err(Error::Validation(format!(
                    "network has {} reference buses, expected exactly one",
                    refs.len()
                )))
            }
        };
        let net = PowerNetwork { base_mva, buses, branches, generators, wind_farms, slack, index };
        if !net.is_connected() {
            log::warn!("network graph is not connected");
        }
        Ok(net)
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn wind_farms(&self) -> &[WindFarm] {
        &self.wind_farms
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Internal index of the reference bus.
    pub fn slack(&self) -> usize {
        self.slack
    }

    /// Internal (0-based) index of a bus id.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn idx(&self, id: usize) -> usize {
        self.index[&id]
    }

    /// Internal (from, to) indices of a branch.
    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        let br = &self.branches[k];
        (self.idx(br.from), self.idx(br.to))
    }

    /// Generator indices grouped by internal bus index.
    pub fn generators_by_bus(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.buses.len()];
        for (g, gen) in self.generators.iter().enumerate() {
            out[self.idx(gen.bus)].push(g);
        }
        out
    }

    pub fn wind_by_bus(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.buses.len()];
        for (w, farm) in self.wind_farms.iter().enumerate() {
            out[self.idx(farm.bus)].push(w);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for k in 0..self.branches.len() {
            let (f, t) = self.branch_ends(k);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }

    /// Returns a copy where every branch with `r == 0` carries `r_min`, plus the
    /// number of patched branches.
    pub fn patch_zero_resistance(&self, r_min: f64) -> (PowerNetwork, usize) {
        let mut out = self.clone();
        let mut count = 0;
        for br in &mut out.branches {
            if br.r == 0.0 {
                br.r = r_min;
                count += 1;
            }
        }
        (out, count)
    }

    /// Uniformly scales all bus demands.
    pub fn with_load_scale(&self, factor: f64) -> PowerNetwork {
        let mut out = self.clone();
        for b in &mut out.buses {
            b.pd *= factor;
            b.qd *= factor;
        }
        out
    }

    pub fn with_wind_farms(&self, farms: Vec<WindFarm>) -> Result<PowerNetwork> {
        PowerNetwork::new(
            self.base_mva,
            self.buses.clone(),
            self.branches.clone(),
            self.generators.clone(),
            farms,
        )
    }

    pub fn branch_coefficients(&self) -> Result<Vec<BranchCoefficients>> {
        self.branches
            .iter()
            .enumerate()
            .map(|(k, br)| {
                derive_branch_coefficients(br).map_err(|e| match e {
                    Error::InvalidBranch { reason, .. } => Error::InvalidBranch { index: k, reason },
                    other => other,
                })
            })
            .collect()
    }

    pub fn total_load(&self) -> (f64, f64) {
        self.buses.iter().fold((0.0, 0.0), |(p, q), b| (p + b.pd, q + b.qd))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PowerNetwork> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn case(name: &str) -> PowerNetwork {
        let path = format!("{}/../../data/matpower/{name}.m", env!("CARGO_MANIFEST_DIR"));
        parse_matpower_case(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    pub(crate) fn two_bus(r: f64, x: f64, load: f64) -> PowerNetwork {
        let bus = |id, t, pd| Bus {
            id,
            bus_type: t,
            pd,
            qd: 0.0,
            gs: 0.0,
            bs: 0.0,
            v_min: 0.9,
            v_max: 1.1,
            base_kv: 110.0,
            vm: 1.0,
            va: 0.0,
        };
        PowerNetwork::new(
            100.0,
            vec![bus(1, BusType::Ref, 0.0), bus(2, BusType::PQ, load)],
            vec![Branch {
                from: 1,
                to: 2,
                r,
                x,
                b_ch: 0.0,
                tau: 1.0,
                shift: 0.0,
                s_max: None,
                angle_min: -1.0,
                angle_max: 1.0,
            }],
            vec![Generator {
                bus: 1,
                p_min: 0.0,
                p_max: 5.0,
                q_min: -5.0,
                q_max: 5.0,
                c2: 0.0,
                c1: 1.0,
                c0: 0.0,
                pg: 0.0,
                qg: 0.0,
                vg: 1.0,
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn patch_only_touches_zero_resistance() {
        let net = two_bus(0.0, 0.1, 0.0);
        let (patched, count) = net.patch_zero_resistance(DEFAULT_MIN_RESISTANCE);
        assert_eq!(count, 1);
        assert_eq!(patched.branches()[0].r, 1e-4);

        let net = two_bus(0.02, 0.1, 0.0);
        let (patched, count) = net.patch_zero_resistance(DEFAULT_MIN_RESISTANCE);
        assert_eq!(count, 0);
        assert_eq!(patched, net);
    }

    #[test]
    fn rejects_unknown_bus() {
        let net = two_bus(0.01, 0.1, 0.0);
        let mut branches = net.branches().to_vec();
        branches[0].to = 7;
        let err = PowerNetwork::new(100.0, net.buses().to_vec(), branches, vec![], vec![]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_missing_slack() {
        let net = two_bus(0.01, 0.1, 0.0);
        let mut buses = net.buses().to_vec();
        buses[0].bus_type = BusType::PV;
        let err = PowerNetwork::new(100.0, buses, net.branches().to_vec(), vec![], vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let net = two_bus(0.0123456789, 0.1 / 3.0, 0.37);
        let back = PowerNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }
}
