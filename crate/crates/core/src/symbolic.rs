//! Edge-labeled Markov shifts: the base transformation, its Markov measure
//! and a one-step `S_n`-valued cocycle, all on one finite graph.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph;
use crate::perm::{Perm, PermError};

pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("system has no symbols")]
    Empty,
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("edge {0} -> {1} is listed twice")]
    DuplicateEdge(String, String),
    #[error("edge {from} -> {to}: label has degree {found}, expected {expected}")]
    LabelDegree {
        from: String,
        to: String,
        expected: usize,
        found: usize,
    },
    #[error("edge {from} -> {to}: probability {prob} outside [0, 1]")]
    ProbabilityRange {
        from: String,
        to: String,
        prob: Rational,
    },
    #[error("outgoing probabilities at {symbol:?} sum to {sum}, not 1")]
    ProbabilitySum { symbol: String, sum: Rational },
    #[error("support graph is not strongly connected")]
    Reducible,
    #[error("bad probability {0:?}")]
    BadProbability(String),
    #[error("{labels} labels but {probs} probabilities")]
    LengthMismatch { labels: usize, probs: usize },
    #[error("word is not a path: no edge {0} -> {1}")]
    NotAPath(String, String),
    #[error("vertex function is missing symbol {0:?}")]
    MissingVertex(String),
    #[error("vertex function has {found} values for {expected} symbols")]
    VertexCount { expected: usize, found: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("json: {0}")]
    Json(String),
}

/// Marks whether the labels are read as acting on `n` fiber points or on
/// the group itself. Purely descriptive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberKind {
    #[default]
    #[serde(rename = "n-point")]
    NPoint,
    #[serde(rename = "group")]
    Group,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub prob: Rational,
    pub label: Perm,
}

/// A finite irreducible transition graph with rational transition
/// probabilities and an `S_n` label on every edge. Leaving `u` along
/// `u -> v` multiplies the fiber coordinate on the left by the edge label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSystem {
    fiber_degree: usize,
    fiber_kind: FiberKind,
    symbols: Vec<String>,
    edges: Vec<Edge>,
    /// Support edges (positive probability) leaving each vertex, by index into `edges`.
    out: Vec<Vec<usize>>,
}

impl LabeledSystem {
    pub fn new(
        fiber_degree: usize,
        symbols: Vec<String>,
        edges: Vec<Edge>,
    ) -> Result<LabeledSystem, SystemError> {
        if fiber_degree == 0 {
            return Err(PermError::ZeroDegree.into());
        }
        if symbols.is_empty() {
            return Err(SystemError::Empty);
        }
        let mut names = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if names.insert(s.as_str(), i).is_some() {
                return Err(SystemError::DuplicateSymbol(s.clone()));
            }
        }
        let n = symbols.len();
        let mut out = vec![Vec::new(); n];
        let mut sums = vec![Rational::from_integer(0); n];
        let mut pairs = HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            if e.from >= n {
                return Err(SystemError::UnknownSymbol(format!("#{}", e.from)));
            }
            if e.to >= n {
                return Err(SystemError::UnknownSymbol(format!("#{}", e.to)));
            }
            let (from, to) = (&symbols[e.from], &symbols[e.to]);
            if pairs.insert((e.from, e.to), k).is_some() {
                return Err(SystemError::DuplicateEdge(from.clone(), to.clone()));
            }
            if e.label.degree() != fiber_degree {
                return Err(SystemError::LabelDegree {
                    from: from.clone(),
                    to: to.clone(),
                    expected: fiber_degree,
                    found: e.label.degree(),
                });
            }
            if *e.prob.numer() < 0 || e.prob > Rational::from_integer(1) {
                return Err(SystemError::ProbabilityRange {
                    from: from.clone(),
                    to: to.clone(),
                    prob: e.prob,
                });
            }
            sums[e.from] += e.prob;
            if *e.prob.numer() > 0 {
                out[e.from].push(k);
            }
        }
        for (v, sum) in sums.into_iter().enumerate() {
            if sum != Rational::from_integer(1) {
                return Err(SystemError::ProbabilitySum {
                    symbol: symbols[v].clone(),
                    sum,
                });
            }
        }
        let adj: Vec<Vec<usize>> = out
            .iter()
            .map(|es| es.iter().map(|&k| edges[k].to).collect())
            .collect();
        if !graph::is_strongly_connected(&adj) {
            return Err(SystemError::Reducible);
        }
        Ok(LabeledSystem {
            fiber_degree,
            fiber_kind: FiberKind::NPoint,
            symbols,
            edges,
            out,
        })
    }

    pub fn with_fiber_kind(mut self, kind: FiberKind) -> LabeledSystem {
        self.fiber_kind = kind;
        self
    }

    pub fn fiber_degree(&self) -> usize {
        self.fiber_degree
    }

    pub fn fiber_kind(&self) -> FiberKind {
        self.fiber_kind
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn vertex_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    /// All listed edges, including any of probability zero.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Positive-probability edges leaving `v`.
    pub fn support_out(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.out[v].iter().map(move |&k| &self.edges[k])
    }

    pub fn support_edges(&self) -> impl Iterator<Item = &Edge> {
        (0..self.vertex_count()).flat_map(move |v| self.support_out(v))
    }

    pub fn support_edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.support_out(from).find(|e| e.to == to)
    }

    /// Distinct labels on support edges, sorted.
    pub fn labels(&self) -> Vec<Perm> {
        let mut labels: Vec<Perm> = self.support_edges().map(|e| e.label.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Cocycle along a vertex path `x_0 x_1 ... x_k`: the ordered product
    /// `label(x_{k-1} -> x_k) ∘ ... ∘ label(x_0 -> x_1)`. Words of length
    /// zero or one have no steps and give the identity.
    pub fn word_cocycle(&self, word: &[usize]) -> Result<Perm, SystemError> {
        let mut acc = Perm::identity(self.fiber_degree);
        for step in word.windows(2) {
            let (u, v) = (step[0], step[1]);
            let name = |i: usize| {
                self.symbols
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("#{i}"))
            };
            let e = (u < self.vertex_count())
                .then(|| self.support_edge(u, v))
                .flatten()
                .ok_or_else(|| SystemError::NotAPath(name(u), name(v)))?;
            acc = &e.label * &acc;
        }
        Ok(acc)
    }

    /// Cohomologous relabeling: `u -> v` with label `l` becomes
    /// `alpha(v) ∘ l ∘ alpha(u)⁻¹`. Graph and probabilities are unchanged.
    pub fn twist(&self, alpha: &VertexFunction) -> Result<LabeledSystem, SystemError> {
        alpha.check_for(self)?;
        let mut twisted = self.clone();
        for e in &mut twisted.edges {
            e.label = &(&alpha.values[e.to] * &e.label) * &alpha.values[e.from].inverse();
        }
        Ok(twisted)
    }

    pub fn from_json_str(s: &str) -> Result<LabeledSystem, SystemError> {
        let file: SystemFile =
            serde_json::from_str(s).map_err(|e| SystemError::Json(e.to_string()))?;
        file.into_system()
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile::Graph {
            fiber_degree: self.fiber_degree,
            fiber_kind: self.fiber_kind,
            symbols: self.symbols.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        self.symbols[e.from].clone(),
                        self.symbols[e.to].clone(),
                        e.prob.to_string(),
                        e.label.clone(),
                    )
                })
                .collect(),
        }
    }
}

/// Full shift on `labels.len()` symbols named `"1"`, `"2"`, ...; the edge
/// `i -> j` has probability `probs[j]` and carries `labels[i]`, so the label
/// depends only on the current symbol.
pub fn full_shift(labels: &[Perm], probs: &[Rational]) -> Result<LabeledSystem, SystemError> {
    if labels.len() != probs.len() {
        return Err(SystemError::LengthMismatch {
            labels: labels.len(),
            probs: probs.len(),
        });
    }
    let degree = labels.first().ok_or(SystemError::Empty)?.degree();
    let k = labels.len();
    let symbols: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
    let mut edges = Vec::with_capacity(k * k);
    for (i, label) in labels.iter().enumerate() {
        for (j, p) in probs.iter().enumerate() {
            edges.push(Edge {
                from: i,
                to: j,
                prob: *p,
                label: label.clone(),
            });
        }
    }
    LabeledSystem::new(degree, symbols, edges)
}

pub fn uniform(k: usize) -> Vec<Rational> {
    vec![Rational::new(1, k as i128); k]
}

/// A permutation-valued function of the current symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexFunction {
    values: Vec<Perm>,
}

impl VertexFunction {
    /// Values indexed by vertex.
    pub fn new(values: Vec<Perm>) -> VertexFunction {
        VertexFunction { values }
    }

    pub fn identity(sys: &LabeledSystem) -> VertexFunction {
        VertexFunction {
            values: vec![Perm::identity(sys.fiber_degree()); sys.vertex_count()],
        }
    }

    pub fn from_map(
        sys: &LabeledSystem,
        map: &BTreeMap<String, Perm>,
    ) -> Result<VertexFunction, SystemError> {
        let values = sys
            .symbols()
            .iter()
            .map(|s| {
                map.get(s)
                    .cloned()
                    .ok_or_else(|| SystemError::MissingVertex(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let f = VertexFunction { values };
        f.check_for(sys)?;
        Ok(f)
    }

    pub fn values(&self) -> &[Perm] {
        &self.values
    }

    /// Pointwise `(other ∘ self)(v) = other(v) ∘ self(v)`: twisting by
    /// `self` and then by `other` equals twisting by this.
    pub fn then(&self, other: &VertexFunction) -> VertexFunction {
        VertexFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| b * a)
                .collect(),
        }
    }

    pub fn inverse(&self) -> VertexFunction {
        VertexFunction {
            values: self.values.iter().map(Perm::inverse).collect(),
        }
    }

    fn check_for(&self, sys: &LabeledSystem) -> Result<(), SystemError> {
        if self.values.len() != sys.vertex_count() {
            return Err(SystemError::VertexCount {
                expected: sys.vertex_count(),
                found: self.values.len(),
            });
        }
        if let Some(p) = self
            .values
            .iter()
            .find(|p| p.degree() != sys.fiber_degree())
        {
            return Err(PermError::DegreeMismatch(sys.fiber_degree(), p.degree()).into());
        }
        Ok(())
    }
}

/// On-disk system description: an explicit graph or the full-shift shorthand.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemFile {
    Graph {
        fiber_degree: usize,
        #[serde(default)]
        fiber_kind: FiberKind,
        symbols: Vec<String>,
        edges: Vec<(String, String, String, Perm)>,
    },
    FullShift {
        fiber_degree: usize,
        #[serde(default)]
        fiber_kind: FiberKind,
        labels: Vec<Perm>,
        probs: Vec<String>,
    },
}

fn parse_prob(s: &str) -> Result<Rational, SystemError> {
    s.trim()
        .parse::<Rational>()
        .map_err(|_| SystemError::BadProbability(s.to_string()))
}

impl SystemFile {
    pub fn into_system(self) -> Result<LabeledSystem, SystemError> {
        match self {
            SystemFile::Graph {
                fiber_degree,
                fiber_kind,
                symbols,
                edges,
            } => {
                let index = |name: &str| {
                    symbols
                        .iter()
                        .position(|s| s == name)
                        .ok_or_else(|| SystemError::UnknownSymbol(name.to_string()))
                };
                let edges = edges
                    .iter()
                    .map(|(u, v, p, label)| {
                        Ok(Edge {
                            from: index(u)?,
                            to: index(v)?,
                            prob: parse_prob(p)?,
                            label: label.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, SystemError>>()?;
                Ok(LabeledSystem::new(fiber_degree, symbols, edges)?.with_fiber_kind(fiber_kind))
            }
            SystemFile::FullShift {
                fiber_degree,
                fiber_kind,
                labels,
                probs,
            } => {
                let probs = probs
                    .iter()
                    .map(|p| parse_prob(p))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(l) = labels.iter().find(|l| l.degree() != fiber_degree) {
                    return Err(PermError::DegreeMismatch(fiber_degree, l.degree()).into());
                }
                Ok(full_shift(&labels, &probs)?.with_fiber_kind(fiber_kind))
            }
        }
    }
}
