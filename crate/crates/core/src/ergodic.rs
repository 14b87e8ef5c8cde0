//! Ergodic decomposition of the skew product over a [`LabeledSystem`].
//!
//! For an irreducible Markov base with a one-step cocycle, the skew product
//! `(x, g) ↦ (Tx, σ(x,1) g)` is itself a Markov shift on the lifted graph
//! `V × G`, and its ergodic components are the strongly connected components
//! of that graph. Everything here is exact reachability.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::graph;
use crate::perm::{conjugacy_class, ConjClass, Perm, PermError, PermGroup};
use crate::symbolic::LabeledSystem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ErgodicError {
    #[error("edge {from} -> {to}: label {label} is not in the ambient group")]
    LabelOutsideGroup {
        from: String,
        to: String,
        label: Perm,
    },
    #[error("ambient group has degree {found}, system has fiber degree {expected}")]
    AmbientDegree { expected: usize, found: usize },
    #[error("base vertex {0} out of range")]
    BaseVertex(usize),
    #[error("local group at vertex {0} is not closed under composition")]
    NotASubgroup(usize),
    #[error(transparent)]
    Perm(#[from] PermError),
}

/// The skew product as a graph on `V × G`. State `(v, g)` has index
/// `v * |G| + rank(g)`, where `rank` is the position of `g` in the sorted
/// element list of the ambient group.
#[derive(Clone, Debug)]
pub struct LiftedGraph {
    vertex_count: usize,
    ambient: PermGroup,
    arcs: Vec<Vec<usize>>,
}

impl LiftedGraph {
    pub fn ambient(&self) -> &PermGroup {
        &self.ambient
    }

    pub fn state_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn arcs(&self) -> &[Vec<usize>] {
        &self.arcs
    }

    pub fn state_index(&self, vertex: usize, g: &Perm) -> Option<usize> {
        let rank = self.ambient.index_of(g)?;
        (vertex < self.vertex_count).then(|| vertex * self.ambient.order() + rank)
    }

    pub fn state(&self, index: usize) -> (usize, &Perm) {
        let order = self.ambient.order();
        (index / order, &self.ambient.elements()[index % order])
    }
}

pub fn lift(sys: &LabeledSystem, ambient: &PermGroup) -> Result<LiftedGraph, ErgodicError> {
    if ambient.degree() != sys.fiber_degree() {
        return Err(ErgodicError::AmbientDegree {
            expected: sys.fiber_degree(),
            found: ambient.degree(),
        });
    }
    let order = ambient.order();
    let mut arcs = vec![Vec::new(); sys.vertex_count() * order];
    for e in sys.support_edges() {
        if !ambient.contains(&e.label) {
            return Err(ErgodicError::LabelOutsideGroup {
                from: sys.symbols()[e.from].clone(),
                to: sys.symbols()[e.to].clone(),
                label: e.label.clone(),
            });
        }
        for (rank, g) in ambient.elements().iter().enumerate() {
            let h = &e.label * g;
            let target = ambient.index_of(&h).expect("ambient group is closed");
            arcs[e.from * order + rank].push(e.to * order + target);
        }
    }
    for a in &mut arcs {
        a.sort_unstable();
    }
    Ok(LiftedGraph {
        vertex_count: sys.vertex_count(),
        ambient: ambient.clone(),
        arcs,
    })
}

/// Strongly connected components of the lift, each sorted, ordered by
/// smallest state index.
pub fn components(lifted: &LiftedGraph) -> Vec<Vec<usize>> {
    graph::strongly_connected_components(&lifted.arcs)
}

/// `{g : (base, e) and (base, g) share a component}`.
pub fn local_group_reach(
    sys: &LabeledSystem,
    ambient: &PermGroup,
    base_vertex: usize,
) -> Result<PermGroup, ErgodicError> {
    if base_vertex >= sys.vertex_count() {
        return Err(ErgodicError::BaseVertex(base_vertex));
    }
    let lifted = lift(sys, ambient)?;
    let id = Perm::identity(sys.fiber_degree());
    let start = lifted
        .state_index(base_vertex, &id)
        .expect("identity is in every group");
    let comp = components(&lifted)
        .into_iter()
        .find(|c| c.binary_search(&start).is_ok())
        .expect("every state lies in a component");
    let elements: Vec<Perm> = comp
        .into_iter()
        .map(|s| lifted.state(s))
        .filter(|&(v, _)| v == base_vertex)
        .map(|(_, g)| g.clone())
        .collect();
    PermGroup::from_elements(sys.fiber_degree(), elements)
        .map_err(|_| ErgodicError::NotASubgroup(base_vertex))
}

/// Breadth-first spanning tree from `base_vertex` over support edges; `t(v)`
/// is the product of labels along the tree path. Every non-tree edge
/// `u -> v` contributes the loop voltage `t(v)⁻¹ ∘ l ∘ t(u)`, and those
/// generate the local group at the root.
pub fn local_group_voltage(
    sys: &LabeledSystem,
    base_vertex: usize,
) -> Result<PermGroup, ErgodicError> {
    if base_vertex >= sys.vertex_count() {
        return Err(ErgodicError::BaseVertex(base_vertex));
    }
    let tree = tree_voltages(sys, base_vertex);
    let mut gens = Vec::new();
    for e in sys.support_edges() {
        let (Some(tu), Some(tv)) = (&tree.voltage[e.from], &tree.voltage[e.to]) else {
            continue;
        };
        if tree.parent_edge[e.to] == Some((e.from, e.to)) {
            continue;
        }
        let g = &(&tv.inverse() * &e.label) * tu;
        if !g.is_identity() {
            gens.push(g);
        }
    }
    gens.sort();
    gens.dedup();
    Ok(PermGroup::generate(sys.fiber_degree(), &gens)?)
}

struct TreeVoltages {
    voltage: Vec<Option<Perm>>,
    parent_edge: Vec<Option<(usize, usize)>>,
}

fn tree_voltages(sys: &LabeledSystem, root: usize) -> TreeVoltages {
    let n = sys.vertex_count();
    let mut voltage: Vec<Option<Perm>> = vec![None; n];
    let mut parent_edge = vec![None; n];
    voltage[root] = Some(Perm::identity(sys.fiber_degree()));
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let tu = voltage[u].clone().expect("queued vertices have voltages");
        for e in sys.support_out(u) {
            if voltage[e.to].is_none() {
                voltage[e.to] = Some(&e.label * &tu);
                parent_edge[e.to] = Some((u, e.to));
                queue.push_back(e.to);
            }
        }
    }
    TreeVoltages {
        voltage,
        parent_edge,
    }
}

/// One ergodic component, described by its slice over the base vertex: the
/// right coset `H g` of the local group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentDescriptor {
    pub vertex: usize,
    pub representative: Perm,
    pub coset: Vec<Perm>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GpResult {
    pub base_vertex: usize,
    pub ambient: PermGroup,
    pub local_group: PermGroup,
    pub klass: ConjClass,
    pub components: Vec<ComponentDescriptor>,
}

/// `gp(T, σ)`: lift over the group generated by the labels, take the local
/// group at the first vertex, and its conjugacy class in `S_n`.
pub fn gp_invariant(sys: &LabeledSystem) -> Result<GpResult, ErgodicError> {
    let n = sys.fiber_degree();
    let ambient = PermGroup::generate(n, &sys.labels())?;
    let base_vertex = 0;
    let local_group = local_group_reach(sys, &ambient, base_vertex)?;
    let klass = conjugacy_class(&local_group);

    let mut covered = vec![false; ambient.order()];
    let mut components = Vec::new();
    for (rank, g) in ambient.elements().iter().enumerate() {
        if covered[rank] {
            continue;
        }
        let mut coset: Vec<Perm> = local_group.elements().iter().map(|h| h * g).collect();
        coset.sort();
        for c in &coset {
            covered[ambient.index_of(c).expect("coset inside ambient")] = true;
        }
        components.push(ComponentDescriptor {
            vertex: base_vertex,
            representative: coset[0].clone(),
            coset,
        });
    }
    Ok(GpResult {
        base_vertex,
        ambient,
        local_group,
        klass,
        components,
    })
}

/// Whether `X × H` is a single ergodic component.
pub fn is_g_ergodic(sys: &LabeledSystem, h: &PermGroup) -> Result<bool, ErgodicError> {
    let lifted = lift(sys, h)?;
    Ok(graph::is_strongly_connected(&lifted.arcs))
}

/// Ergodicity of the `n`-point extension `(x, i) ↦ (Tx, σ(x,1)(i))`, decided
/// on the graph `V × {1..n}`.
pub fn fiber_transitive(sys: &LabeledSystem) -> bool {
    graph::is_strongly_connected(&fiber_lift(sys))
}

/// Arcs `(u, i) -> (v, l(i))`; state `(v, i)` has index `v * n + i`.
pub fn fiber_lift(sys: &LabeledSystem) -> Vec<Vec<usize>> {
    let n = sys.fiber_degree();
    let mut arcs = vec![Vec::new(); sys.vertex_count() * n];
    for e in sys.support_edges() {
        for i in 0..n {
            arcs[e.from * n + i].push(e.to * n + e.label.apply(i));
        }
    }
    arcs
}

/// The analysis report written by `skewlab analyze`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GpReport {
    pub local_group: PermGroup,
    pub class_size: usize,
    pub class_members: Vec<PermGroup>,
    pub components: usize,
    pub fiber_ergodic: bool,
}

impl GpReport {
    pub fn new(sys: &LabeledSystem, gp: &GpResult) -> GpReport {
        GpReport {
            local_group: gp.local_group.clone(),
            class_size: gp.klass.len(),
            class_members: gp.klass.members().to_vec(),
            components: gp.components.len(),
            fiber_ergodic: fiber_transitive(sys),
        }
    }
}
