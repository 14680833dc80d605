//! Hidden Matching instances and the update streams built from them.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::rng::rng_from_seed;

/// Matching density `num/den`, restricted to `(0, 1/4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alpha {
    pub num: u64,
    pub den: u64,
}

impl Alpha {
    pub const QUARTER: Alpha = Alpha { num: 1, den: 4 };

    pub fn new(num: u64, den: u64) -> Result<Self, InstanceError> {
        let a = Alpha { num, den };
        if num == 0 || den == 0 || 4 * num > den {
            return Err(InstanceError::Domain(format!("alpha {a} must lie in (0, 1/4]")));
        }
        Ok(a)
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `αn`, if integral.
    pub fn edges_for(&self, n: u64) -> Option<u64> {
        let prod = u128::from(n) * u128::from(self.num);
        (prod % u128::from(self.den) == 0).then(|| (prod / u128::from(self.den)) as u64)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Alpha {
    type Err = InstanceError;

    /// Accepts `num/den`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| InstanceError::Domain(format!("alpha '{s}' must be written num/den")))?;
        let parse = |t: &str| {
            t.trim().parse::<u64>().map_err(|_| InstanceError::Domain(format!("alpha '{s}' must be written num/den")))
        };
        Alpha::new(parse(n)?, parse(d)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Yes,
    No,
}

impl FromStr for Case {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yes" => Ok(Case::Yes),
            "no" => Ok(Case::No),
            _ => Err(InstanceError::Domain(format!("case must be yes or no, got '{s}'"))),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Yes => "yes",
            Case::No => "no",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamUpdate {
    Vertex { v: u64, label: bool },
    Edge { u: u64, v: u64, label: bool },
    End,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("{0}")]
    Domain(String),
    #[error("instance violates {0}")]
    Invalid(Violation),
    #[error("instance file: {0}")]
    Format(String),
}

/// First broken invariant found by [`HmInstance::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    VertexCount(u64),
    Alpha(Alpha),
    EdgeCount { expected: u64, actual: u64 },
    LabelCount { expected: u64, actual: u64 },
    EdgeLabelCount { expected: usize, actual: usize },
    VertexRange { edge: usize, vertex: u64 },
    EdgeOrientation { edge: usize },
    Disjointness { vertex: u64 },
    CaseConsistency { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexCount(n) => write!(f, "vertex count: n = {n} is not a power of two ≥ 4"),
            Violation::Alpha(a) => write!(f, "alpha range: {a}"),
            Violation::EdgeCount { expected, actual } => write!(f, "edge count: expected {expected}, found {actual}"),
            Violation::LabelCount { expected, actual } => {
                write!(f, "vertex labels: expected {expected}, found {actual}")
            }
            Violation::EdgeLabelCount { expected, actual } => {
                write!(f, "edge labels: expected {expected}, found {actual}")
            }
            Violation::VertexRange { edge, vertex } => write!(f, "vertex range: edge {edge} uses vertex {vertex}"),
            Violation::EdgeOrientation { edge } => write!(f, "edge orientation: edge {edge} does not have u < v"),
            Violation::Disjointness { vertex } => write!(f, "disjointness: vertex {vertex} is matched twice"),
            Violation::CaseConsistency { edge } => write!(f, "case consistency at edge {edge}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmInstance {
    pub n: u64,
    pub alpha: Alpha,
    pub x: Vec<bool>,
    pub edges: Vec<(u64, u64)>,
    pub z: Vec<bool>,
    pub case: Case,
    pub seed: u64,
}

impl HmInstance {
    /// Uniform labels and a uniform partial matching of size `αn`.
    pub fn generate(n: u64, alpha: Alpha, case: Case, seed: u64) -> Result<Self, InstanceError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(InstanceError::Domain(format!("n = {n} must be a power of two ≥ 4")));
        }
        let alpha = Alpha::new(alpha.num, alpha.den)?;
        let m = alpha
            .edges_for(n)
            .ok_or_else(|| InstanceError::Domain(format!("alpha·n = {alpha}·{n} is not an integer")))?;
        let mut rng = rng_from_seed(seed);
        let x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let mut vertices: Vec<u64> = (0..n).collect();
        vertices.shuffle(&mut rng);
        let edges: Vec<(u64, u64)> =
            vertices[..2 * m as usize].chunks(2).map(|p| (p[0].min(p[1]), p[0].max(p[1]))).collect();
        let z = edges.iter().map(|&(u, v)| (x[u as usize] ^ x[v as usize]) ^ (case == Case::No)).collect();
        Ok(HmInstance { n, alpha, x, edges, z, case, seed })
    }

    pub fn num_edges(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn log_n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    pub fn validate(&self) -> Result<(), Violation> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Violation::VertexCount(self.n));
        }
        if Alpha::new(self.alpha.num, self.alpha.den).is_err() {
            return Err(Violation::Alpha(self.alpha));
        }
        let expected = self.alpha.edges_for(self.n).ok_or(Violation::Alpha(self.alpha))?;
        if self.num_edges() != expected {
            return Err(Violation::EdgeCount { expected, actual: self.num_edges() });
        }
        if self.x.len() as u64 != self.n {
            return Err(Violation::LabelCount { expected: self.n, actual: self.x.len() as u64 });
        }
        if self.z.len() != self.edges.len() {
            return Err(Violation::EdgeLabelCount { expected: self.edges.len(), actual: self.z.len() });
        }
        let mut used = vec![false; self.n as usize];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            for w in [u, v] {
                if w >= self.n {
                    return Err(Violation::VertexRange { edge: i, vertex: w });
                }
            }
            if u >= v {
                return Err(Violation::EdgeOrientation { edge: i });
            }
            for w in [u, v] {
                if std::mem::replace(&mut used[w as usize], true) {
                    return Err(Violation::Disjointness { vertex: w });
                }
            }
        }
        for (i, (&(u, v), &z)) in self.edges.iter().zip(&self.z).enumerate() {
            let parity = self.x[u as usize] ^ self.x[v as usize];
            if (parity == z) != (self.case == Case::Yes) {
                return Err(Violation::CaseConsistency { edge: i });
            }
        }
        Ok(())
    }

    /// Vertices in ascending order, then edges in matching order, then `End`.
    pub fn to_stream(&self) -> Vec<StreamUpdate> {
        let mut out = Vec::with_capacity(self.n as usize + self.edges.len() + 1);
        out.extend(self.x.iter().enumerate().map(|(v, &label)| StreamUpdate::Vertex { v: v as u64, label }));
        out.extend(self.edges.iter().zip(&self.z).map(|(&(u, v), &label)| StreamUpdate::Edge { u, v, label }));
        out.push(StreamUpdate::End);
        out
    }

    pub fn to_json_value(&self) -> Value {
        let x: String = self.x.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let edges: Vec<Value> =
            self.edges.iter().zip(&self.z).map(|(&(u, v), &z)| json!([u, v, u8::from(z)])).collect();
        json!({
            "alpha": [self.alpha.num, self.alpha.den],
            "case": self.case,
            "edges": edges,
            "n": self.n,
            "seed": self.seed,
            "x": x,
        })
    }

    /// Canonical pretty-printed JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            alpha: (u64, u64),
            case: Case,
            edges: Vec<(u64, u64, u8)>,
            n: u64,
            seed: u64,
            x: String,
        }
        let f: File = serde_json::from_str(text).map_err(|e| InstanceError::Format(e.to_string()))?;
        let x = f
            .x
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(InstanceError::Format(format!("x contains '{c}'"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut z = Vec::with_capacity(f.edges.len());
        for &(_, _, label) in &f.edges {
            if label > 1 {
                return Err(InstanceError::Format(format!("edge label {label} is not a bit")));
            }
            z.push(label == 1);
        }
        let inst = HmInstance {
            n: f.n,
            alpha: Alpha { num: f.alpha.0, den: f.alpha.1 },
            x,
            edges: f.edges.iter().map(|&(u, v, _)| (u, v)).collect(),
            z,
            case: f.case,
            seed: f.seed,
        };
        inst.validate().map_err(InstanceError::Invalid)?;
        Ok(inst)
    }
}

/// Rebuilds `(x, edges, z)` from a vertices-first stream.
pub fn parse_stream(n: u64, updates: &[StreamUpdate]) -> Result<(Vec<bool>, Vec<(u64, u64)>, Vec<bool>), InstanceError> {
    let mut x = vec![None; n as usize];
    let mut edges = Vec::new();
    let mut z = Vec::new();
    let mut ended = false;
    for u in updates {
        if ended {
            return Err(InstanceError::Format("update after End".into()));
        }
        match *u {
            StreamUpdate::Vertex { v, label } => {
                if !edges.is_empty() || v >= n || x[v as usize].replace(label).is_some() {
                    return Err(InstanceError::Format(format!("unexpected vertex update for {v}")));
                }
            }
            StreamUpdate::Edge { u, v, label } => {
                edges.push((u, v));
                z.push(label);
            }
            StreamUpdate::End => ended = true,
        }
    }
    let x = x.into_iter().collect::<Option<Vec<bool>>>().ok_or_else(|| InstanceError::Format("missing vertex".into()))?;
    Ok((x, edges, z))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SourceError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("stream exhausted")]
    Exhausted,
    #[error("protocol: {0}")]
    Protocol(String),
}

/// A single-pass producer of stream updates.
pub trait UpdateSource {
    fn n(&self) -> u64;
    fn num_edges(&self) -> u64;
    fn next_update(&mut self) -> Result<StreamUpdate, SourceError>;
}

/// In-process stream over an instance.
#[derive(Debug, Clone)]
pub struct LocalStream<'a> {
    instance: &'a HmInstance,
    cursor: usize,
}

impl<'a> LocalStream<'a> {
    pub fn new(instance: &'a HmInstance) -> Self {
        LocalStream { instance, cursor: 0 }
    }

    pub fn served(&self) -> usize {
        self.cursor
    }
}

impl UpdateSource for LocalStream<'_> {
    fn n(&self) -> u64 {
        self.instance.n
    }

    fn num_edges(&self) -> u64 {
        self.instance.num_edges()
    }

    fn next_update(&mut self) -> Result<StreamUpdate, SourceError> {
        let n = self.instance.n as usize;
        let m = self.instance.edges.len();
        let c = self.cursor;
        let item = if c < n {
            StreamUpdate::Vertex { v: c as u64, label: self.instance.x[c] }
        } else if c < n + m {
            let (u, v) = self.instance.edges[c - n];
            StreamUpdate::Edge { u, v, label: self.instance.z[c - n] }
        } else if c == n + m {
            StreamUpdate::End
        } else {
            return Err(SourceError::Exhausted);
        };
        self.cursor += 1;
        Ok(item)
    }
}
