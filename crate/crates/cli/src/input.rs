//! The on-disk system description: a single JSON document with row-major
//! matrices. Unknown fields are rejected so typos fail loudly.

use nalgebra::DMatrix;
use netdetect::digraph::Digraph;
use netdetect::lti::{MeasurementChannel, Plant};
use netdetect::network::{CommScheme, ObserverNetwork};
use netdetect::synthesis::GainSet;
use netdetect::Tolerances;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    /// State dimension.
    pub n: usize,
    /// Number of observer nodes.
    #[serde(rename = "N")]
    pub num_nodes: usize,
    /// Plant state matrix, row-major `n x n`.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// One measurement matrix per node, each row-major with `n` columns.
    #[serde(rename = "C")]
    pub c: Vec<Vec<Vec<f64>>>,
    /// Communication matrix: either one shared matrix or one per node.
    #[serde(rename = "H")]
    pub h: CommField,
    /// Directed edges `[from, to]` with 1-based vertex labels.
    pub edges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gains: Option<GainsField>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommField {
    Shared(Vec<Vec<f64>>),
    PerNode(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsField {
    /// Measurement injection gains `L_i`, row-major `n x p_i`.
    #[serde(rename = "L")]
    pub measurement: Vec<Vec<Vec<f64>>>,
    /// Consensus injection gains `K_i`, row-major `n x r_i`.
    #[serde(rename = "K")]
    pub consensus: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_stab: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub margin: Option<f64>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>, String> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(format!(
                "{name}: row {} has {} entries, expected {}",
                i + 1,
                row.len(),
                ncols
            ));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

impl SystemDescription {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid system description: {e}"))
    }

    pub fn to_network(&self) -> Result<ObserverNetwork, String> {
        if self.a.len() != self.n {
            return Err(format!(
                "A has {} rows, expected n = {}",
                self.a.len(),
                self.n
            ));
        }
        let a = matrix_from_rows("A", &self.a, self.n)?;
        if self.c.len() != self.num_nodes {
            return Err(format!(
                "C lists {} matrices, expected N = {}",
                self.c.len(),
                self.num_nodes
            ));
        }
        let channels = self
            .c
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let m = matrix_from_rows(&format!("C[{}]", i + 1), rows, self.n)?;
                MeasurementChannel::new(m).map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, String>>()?;
        let comms = match &self.h {
            CommField::Shared(rows) => CommScheme::Shared(matrix_from_rows("H", rows, self.n)?),
            CommField::PerNode(list) => {
                if list.len() != self.num_nodes {
                    return Err(format!(
                        "H lists {} matrices, expected N = {}",
                        list.len(),
                        self.num_nodes
                    ));
                }
                CommScheme::PerNode(
                    list.iter()
                        .enumerate()
                        .map(|(i, rows)| matrix_from_rows(&format!("H[{}]", i + 1), rows, self.n))
                        .collect::<Result<Vec<_>, String>>()?,
                )
            }
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for [from, to] in &self.edges {
            if *from == 0 || *to == 0 || *from > self.num_nodes || *to > self.num_nodes {
                return Err(format!(
                    "edge [{from}, {to}] out of range for N = {}",
                    self.num_nodes
                ));
            }
            edges.push((from - 1, to - 1));
        }
        let graph = Digraph::new(self.num_nodes, edges).map_err(|e| e.to_string())?;
        let plant = Plant::new(a).map_err(|e| e.to_string())?;
        ObserverNetwork::new(plant, channels, comms, graph).map_err(|e| e.to_string())
    }

    pub fn gain_set(&self, net: &ObserverNetwork) -> Result<Option<GainSet>, String> {
        let Some(gains) = &self.gains else {
            return Ok(None);
        };
        let n = net.state_dim();
        let to_mats = |name: &str, list: &[Vec<Vec<f64>>], cols: Vec<usize>| {
            if list.len() != net.num_nodes() {
                return Err(format!(
                    "{name} lists {} matrices, expected N = {}",
                    list.len(),
                    net.num_nodes()
                ));
            }
            list.iter()
                .zip(cols)
                .enumerate()
                .map(|(i, (rows, ncols))| {
                    let m = matrix_from_rows(&format!("{name}[{}]", i + 1), rows, ncols)?;
                    if m.nrows() != n {
                        return Err(format!(
                            "{name}[{}] has {} rows, expected n = {}",
                            i + 1,
                            m.nrows(),
                            n
                        ));
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>, String>>()
        };
        let l_cols = net.channels().iter().map(|ch| ch.c().nrows()).collect();
        let k_cols = (0..net.num_nodes())
            .map(|i| net.comm_matrix(i).nrows())
            .collect();
        let measurement = to_mats("L", &gains.measurement, l_cols)?;
        let consensus = to_mats("K", &gains.consensus, k_cols)?;
        Ok(Some(GainSet::new(measurement, consensus)))
    }

    /// Resolved tolerances: defaults, then file values, then environment
    /// variables, then explicit flag overrides.
    pub fn resolve_tolerances(
        &self,
        flags: &ToleranceOverrides,
    ) -> Result<Tolerances, String> {
        let mut t = Tolerances::default();
        if let Some(file) = &self.tolerances {
            apply(&mut t, file);
        }
        let env = env_overrides()?;
        apply(&mut t, &env);
        apply(&mut t, flags);
        for v in [t.rank_tol, t.eps_stab, t.margin] {
            if !v.is_finite() || v < 0.0 {
                return Err("tolerances must be finite and nonnegative".into());
            }
        }
        Ok(t)
    }

    pub fn from_network(net: &ObserverNetwork) -> Self {
        let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        let h = match net.comms() {
            CommScheme::Shared(h) => CommField::Shared(to_rows(h)),
            CommScheme::PerNode(hs) => CommField::PerNode(hs.iter().map(&to_rows).collect()),
        };
        SystemDescription {
            n: net.state_dim(),
            num_nodes: net.num_nodes(),
            a: to_rows(net.plant().a()),
            c: net.channels().iter().map(|ch| to_rows(ch.c())).collect(),
            h,
            edges: net
                .graph()
                .edges()
                .map(|(from, to)| [from + 1, to + 1])
                .collect(),
            gains: None,
            tolerances: None,
        }
    }
}

fn apply(t: &mut Tolerances, o: &ToleranceOverrides) {
    if let Some(v) = o.rank_tol {
        t.rank_tol = v;
    }
    if let Some(v) = o.eps_stab {
        t.eps_stab = v;
    }
    if let Some(v) = o.margin {
        t.margin = v;
    }
}

fn env_overrides() -> Result<ToleranceOverrides, String> {
    let read = |key: &str| -> Result<Option<f64>, String> {
        match std::env::var(key) {
            Ok(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("{key} must be a number, got {s:?}")),
            Err(_) => Ok(None),
        }
    };
    Ok(ToleranceOverrides {
        rank_tol: read("NETDETECT_RANK_TOL")?,
        eps_stab: read("NETDETECT_EPS_STAB")?,
        margin: read("NETDETECT_MARGIN")?,
    })
}
