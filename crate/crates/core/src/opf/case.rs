//! Network case data and its JSON schema.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OpfError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    #[serde(default)]
    pub is_ref: bool,
    /// Nominal active demand in MW; zero when the bus carries no load.
    #[serde(default)]
    pub pd: f64,
    // Reserved for an AC formulation; carried but unused by the DC oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: u32,
    /// Linear cost in $/MW.
    pub cost: f64,
    pub pmin: f64,
    pub pmax: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    /// Series susceptance in per unit; flow in MW is `base_mva · b · (θ_from − θ_to)`.
    pub b: f64,
    /// Thermal limit in MW, applied in both directions.
    pub rate: f64,
    #[serde(default = "default_angmin")]
    pub angmin: f64,
    #[serde(default = "default_angmax")]
    pub angmax: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

fn default_angmin() -> f64 {
    -FRAC_PI_2
}

fn default_angmax() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    #[serde(default)]
    name: String,
    base_mva: f64,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    branches: Vec<Branch>,
}

/// A validated network. Buses are kept sorted by id; all index lookups are by
/// position in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    branches: Vec<Branch>,
    position: BTreeMap<u32, usize>,
    ref_bus: usize,
    load_buses: Vec<usize>,
}

impl NetworkCase {
    pub fn from_json(text: &str) -> Result<Self, OpfError> {
        let file: CaseFile = serde_json::from_str(text)?;
        Self::new(file.name, file.base_mva, file.buses, file.generators, file.branches)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, OpfError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| OpfError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = CaseFile {
            name: self.name.clone(),
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            generators: self.generators.clone(),
            branches: self.branches.clone(),
        };
        serde_json::to_string_pretty(&file).expect("case serializes")
    }

    pub fn new(
        name: String,
        base_mva: f64,
        mut buses: Vec<Bus>,
        generators: Vec<Generator>,
        branches: Vec<Branch>,
    ) -> Result<Self, OpfError> {
        let invalid = |msg: String| Err(OpfError::InvalidCase(msg));
        if !(base_mva > 0.0) || !base_mva.is_finite() {
            return invalid(format!("base_mva must be positive, got {base_mva}"));
        }
        if buses.is_empty() {
            return invalid("case has no buses".into());
        }
        buses.sort_by_key(|b| b.id);
        let mut position = BTreeMap::new();
        for (i, b) in buses.iter().enumerate() {
            if position.insert(b.id, i).is_some() {
                return invalid(format!("duplicate bus id {}", b.id));
            }
            if !(b.pd >= 0.0) || !b.pd.is_finite() {
                return invalid(format!("bus {}: pd must be finite and non-negative", b.id));
            }
        }
        let refs: Vec<u32> = buses.iter().filter(|b| b.is_ref).map(|b| b.id).collect();
        let ref_bus = match refs.as_slice() {
            [id] => position[id],
            [] => return invalid("no reference bus (exactly one is_ref required)".into()),
            many => return invalid(format!("multiple reference buses {many:?}")),
        };
        for (k, g) in generators.iter().enumerate() {
            if !position.contains_key(&g.bus) {
                return invalid(format!("generator {k}: unknown bus {}", g.bus));
            }
            if !(g.pmin <= g.pmax) || !g.pmin.is_finite() || !g.pmax.is_finite() {
                return invalid(format!("generator {k}: need finite pmin <= pmax"));
            }
            if !g.cost.is_finite() {
                return invalid(format!("generator {k}: cost must be finite"));
            }
        }
        for (k, e) in branches.iter().enumerate() {
            for id in [e.from, e.to] {
                if !position.contains_key(&id) {
                    return invalid(format!("branch {k}: unknown bus {id}"));
                }
            }
            if e.from == e.to {
                return invalid(format!("branch {k}: self loop on bus {}", e.from));
            }
            if !(e.rate > 0.0) || !e.rate.is_finite() {
                return invalid(format!("branch {k}: rate must be positive and finite"));
            }
            if e.b == 0.0 || !e.b.is_finite() {
                return invalid(format!("branch {k}: susceptance must be finite and non-zero"));
            }
            if !(e.angmin <= e.angmax) || !e.angmin.is_finite() || !e.angmax.is_finite() {
                return invalid(format!("branch {k}: need finite angmin <= angmax"));
            }
        }

        // Connectivity by BFS from the reference bus.
        let mut adj = vec![Vec::new(); buses.len()];
        for e in &branches {
            let (i, j) = (position[&e.from], position[&e.to]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; buses.len()];
        let mut queue = VecDeque::from([ref_bus]);
        seen[ref_bus] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return invalid(format!(
                "network is disconnected: bus {} unreachable from reference",
                buses[i].id
            ));
        }

        let load_buses = (0..buses.len()).filter(|&i| buses[i].pd > 0.0).collect();
        Ok(Self {
            name,
            base_mva,
            buses,
            generators,
            branches,
            position,
            ref_bus,
            load_buses,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Position of the bus with `id` in [`NetworkCase::buses`].
    pub fn bus_position(&self, id: u32) -> Option<usize> {
        self.position.get(&id).copied()
    }

    pub fn ref_bus(&self) -> usize {
        self.ref_bus
    }

    /// Bus positions carrying load, in bus-id order. This is the demand vector layout.
    pub fn load_buses(&self) -> &[usize] {
        &self.load_buses
    }

    pub fn num_loads(&self) -> usize {
        self.load_buses.len()
    }

    /// Nominal demand `x0` in demand-vector layout.
    pub fn nominal_demand(&self) -> DemandVector {
        DemandVector(self.load_buses.iter().map(|&i| self.buses[i].pd).collect())
    }

    /// Number of inequality constraints indexed by an active set: `2·|G| + 4·|E|`.
    pub fn num_constraints(&self) -> usize {
        2 * self.generators.len() + 4 * self.branches.len()
    }

    /// Flow per radian of angle difference, `base_mva · b`.
    pub fn flow_factor(&self, branch: usize) -> f64 {
        self.base_mva * self.branches[branch].b
    }

    /// Solution vector length for a proxy: dispatch followed by bus angles.
    pub fn solution_dim(&self) -> usize {
        self.generators.len() + self.buses.len()
    }

    pub fn check_demand(&self, demand: &DemandVector) -> Result<(), OpfError> {
        if demand.len() != self.num_loads() {
            return Err(OpfError::DemandDimension {
                expected: self.num_loads(),
                got: demand.len(),
            });
        }
        if let Some(k) = demand.0.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(OpfError::InvalidDemand(format!(
                "entry {k} is {} (must be finite and non-negative)",
                demand.0[k]
            )));
        }
        Ok(())
    }
}

/// Per-load-bus active demand in MW, ordered by bus id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector(pub Vec<f64>);

impl DemandVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl From<Vec<f64>> for DemandVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"{
        "base_mva": 100,
        "buses": [{"id": 1, "is_ref": true, "pd": 30}],
        "generators": [{"bus": 1, "cost": 5, "pmin": 0, "pmax": 100}],
        "branches": []
    }"#;

    #[test]
    fn single_bus_is_valid() {
        let c = NetworkCase::from_json(SINGLE).unwrap();
        assert_eq!(c.buses().len(), 1);
        assert_eq!(c.branches().len(), 0);
        assert_eq!(c.num_constraints(), 2);
        assert_eq!(c.nominal_demand().values(), &[30.0]);
    }

    #[test]
    fn missing_generator_bus_names_field() {
        let text = SINGLE.replace(r#""bus": 1, "#, "");
        let err = NetworkCase::from_json(&text).unwrap_err();
        assert!(matches!(err, OpfError::Parse(_)));
        assert!(err.to_string().contains("`bus`"), "{err}");
    }

    #[test]
    fn reference_bus_count_enforced() {
        let none = SINGLE.replace("true", "false");
        assert!(NetworkCase::from_json(&none).unwrap_err().to_string().contains("no reference"));
        let two = r#"{"base_mva": 100,
            "buses": [{"id": 1, "is_ref": true}, {"id": 2, "is_ref": true, "pd": 1}],
            "generators": [], "branches": [{"from": 1, "to": 2, "b": 1, "rate": 10}]}"#;
        assert!(NetworkCase::from_json(two).unwrap_err().to_string().contains("multiple"));
    }

    #[test]
    fn disconnected_network_rejected() {
        let text = r#"{"base_mva": 100,
            "buses": [{"id": 1, "is_ref": true}, {"id": 2, "pd": 1}],
            "generators": [{"bus": 1, "cost": 1, "pmin": 0, "pmax": 10}], "branches": []}"#;
        let err = NetworkCase::from_json(text).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
    }

    #[test]
    fn generator_and_branch_limits_validated() {
        let bad_gen = SINGLE.replace(r#""pmax": 100"#, r#""pmax": -1"#);
        assert!(matches!(NetworkCase::from_json(&bad_gen), Err(OpfError::InvalidCase(_))));
        let bad_rate = r#"{"base_mva": 100,
            "buses": [{"id": 1, "is_ref": true}, {"id": 2, "pd": 1}],
            "generators": [], "branches": [{"from": 1, "to": 2, "b": 1, "rate": 0}]}"#;
        assert!(matches!(NetworkCase::from_json(bad_rate), Err(OpfError::InvalidCase(_))));
    }

    #[test]
    fn angle_bounds_default_to_quarter_turn() {
        let text = r#"{"base_mva": 100,
            "buses": [{"id": 2, "pd": 1}, {"id": 1, "is_ref": true}],
            "generators": [], "branches": [{"from": 1, "to": 2, "b": 1, "rate": 10}]}"#;
        let c = NetworkCase::from_json(text).unwrap();
        assert_eq!(c.branches()[0].angmax, FRAC_PI_2);
        assert_eq!(c.branches()[0].angmin, -FRAC_PI_2);
        // buses are re-sorted by id
        assert_eq!(c.buses()[0].id, 1);
        assert_eq!(c.ref_bus(), 0);
    }

    #[test]
    fn json_round_trip() {
        let c = NetworkCase::from_json(SINGLE).unwrap();
        assert_eq!(NetworkCase::from_json(&c.to_json()).unwrap(), c);
    }
}
