//! Permutations of `{1..n}`, finite permutation groups and their conjugacy
//! classes inside the symmetric group.
//!
//! Points are stored 0-based; every external form (JSON, `Display`) is
//! 1-based one-line notation. Composition follows the left-multiplication
//! convention used throughout the crate: `a * b` applies `b` first.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Mul;

use itertools::Itertools;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("permutation degree must be positive")]
    ZeroDegree,
    #[error("{images:?} is not a permutation of 1..={degree}")]
    NotBijection { degree: usize, images: Vec<usize> },
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("invalid pair partition: {0}")]
    InvalidPartition(String),
}

/// A permutation in one-line notation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn identity(degree: usize) -> Perm {
        Perm {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from 0-based images.
    pub fn from_images(images: Vec<usize>) -> Result<Perm, PermError> {
        let degree = images.len();
        if degree == 0 {
            return Err(PermError::ZeroDegree);
        }
        let mut seen = vec![false; degree];
        for &i in &images {
            if i >= degree || seen[i] {
                return Err(PermError::NotBijection {
                    degree,
                    images: images.iter().map(|x| x + 1).collect(),
                });
            }
            seen[i] = true;
        }
        Ok(Perm { images })
    }

    /// Builds a permutation from 1-based one-line notation, e.g. `[2, 3, 1]`.
    pub fn from_one_based(images: &[usize]) -> Result<Perm, PermError> {
        if images.contains(&0) {
            return Err(PermError::NotBijection {
                degree: images.len(),
                images: images.to_vec(),
            });
        }
        Perm::from_images(images.iter().map(|x| x - 1).collect())
    }

    /// Builds a permutation of the given degree from 1-based disjoint cycles,
    /// so `from_cycles(3, &[&[1, 2, 3]])` is the 3-cycle `1 -> 2 -> 3 -> 1`.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Perm, PermError> {
        if degree == 0 {
            return Err(PermError::ZeroDegree);
        }
        let mut images: Vec<usize> = (0..degree).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for (k, &a) in cycle.iter().enumerate() {
                let b = cycle[(k + 1) % cycle.len()];
                if a == 0 || a > degree || b == 0 || b > degree || touched[a - 1] {
                    return Err(PermError::NotBijection {
                        degree,
                        images: cycle.to_vec(),
                    });
                }
                touched[a - 1] = true;
                images[a - 1] = b - 1;
            }
        }
        Perm::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a 0-based point.
    pub fn apply(&self, point: usize) -> usize {
        self.images[point]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|x| x + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Perm) -> Result<Perm, PermError> {
        if self.degree() != other.degree() {
            return Err(PermError::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(Perm {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x] = i;
        }
        Perm { images }
    }

    /// `xi ∘ self ∘ xi⁻¹`.
    pub fn conjugate_by(&self, xi: &Perm) -> Perm {
        &(xi * self) * &xi.inverse()
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut p = self.clone();
        while !p.is_identity() {
            p = self * &p;
            k += 1;
        }
        k
    }

    /// Disjoint cycles (0-based), fixed points omitted.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.images[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.images[x];
            }
            out.push(cycle);
        }
        out
    }
}

impl Mul for &Perm {
    type Output = Perm;

    /// Panics on a degree mismatch; use [`Perm::compose`] for checked input.
    fn mul(self, rhs: &Perm) -> Perm {
        self.compose(rhs)
            .expect("composing permutations of different degree")
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            write!(f, "({})", c.iter().map(|x| x + 1).join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Perm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Perm, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Perm::from_one_based(&images).map_err(D::Error::custom)
    }
}

/// Every element of `S_n` in lexicographic one-line order.
pub fn symmetric_elements(degree: usize) -> impl Iterator<Item = Perm> {
    (0..degree)
        .permutations(degree)
        .map(|images| Perm { images })
}

/// A finite subgroup of `S_n`, elements kept sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PermGroup {
    degree: usize,
    elements: Vec<Perm>,
}

impl PermGroup {
    pub fn trivial(degree: usize) -> PermGroup {
        PermGroup {
            degree,
            elements: vec![Perm::identity(degree)],
        }
    }

    pub fn symmetric(degree: usize) -> PermGroup {
        PermGroup {
            degree,
            elements: symmetric_elements(degree).collect(),
        }
    }

    /// Validates that `elements` already form a group.
    pub fn from_elements(degree: usize, elements: Vec<Perm>) -> Result<PermGroup, PermError> {
        if degree == 0 {
            return Err(PermError::ZeroDegree);
        }
        if let Some(p) = elements.iter().find(|p| p.degree() != degree) {
            return Err(PermError::DegreeMismatch(degree, p.degree()));
        }
        let elements: Vec<Perm> = elements
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let group = PermGroup { degree, elements };
        group.check_group()?;
        Ok(group)
    }

    /// Sorts but does not validate; for building deliberately broken
    /// certificates in tests.
    #[doc(hidden)]
    pub fn from_elements_unchecked(degree: usize, mut elements: Vec<Perm>) -> PermGroup {
        elements.sort();
        elements.dedup();
        PermGroup { degree, elements }
    }

    fn check_group(&self) -> Result<(), PermError> {
        if !self.contains(&Perm::identity(self.degree)) {
            return Err(PermError::NotAGroup("missing identity".into()));
        }
        for a in &self.elements {
            if !self.contains(&a.inverse()) {
                return Err(PermError::NotAGroup(format!("missing inverse of {a}")));
            }
            for b in &self.elements {
                if !self.contains(&(a * b)) {
                    return Err(PermError::NotAGroup(format!("{a}·{b} not in set")));
                }
            }
        }
        Ok(())
    }

    /// Closure of `gens` under composition. An empty generating set gives
    /// the trivial group of `degree`.
    pub fn generate(degree: usize, gens: &[Perm]) -> Result<PermGroup, PermError> {
        if degree == 0 {
            return Err(PermError::ZeroDegree);
        }
        if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
            return Err(PermError::DegreeMismatch(degree, g.degree()));
        }
        let id = Perm::identity(degree);
        let mut found: BTreeSet<Perm> = BTreeSet::from([id.clone()]);
        let mut frontier = vec![id];
        // In a finite group the generated semigroup is already the subgroup.
        while let Some(x) = frontier.pop() {
            for s in gens {
                let y = s * &x;
                if found.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        Ok(PermGroup {
            degree,
            elements: found.into_iter().collect(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    /// Position of `p` in the sorted element list.
    pub fn index_of(&self, p: &Perm) -> Option<usize> {
        self.elements.binary_search(p).ok()
    }

    pub fn is_subgroup_of(&self, other: &PermGroup) -> bool {
        self.degree == other.degree
            && self.order() <= other.order()
            && self.elements.iter().all(|p| other.contains(p))
    }

    /// `xi · self · xi⁻¹`.
    pub fn conjugate_by(&self, xi: &Perm) -> PermGroup {
        let xi_inv = xi.inverse();
        let mut elements: Vec<Perm> = self.elements.iter().map(|g| &(xi * g) * &xi_inv).collect();
        elements.sort();
        PermGroup {
            degree: self.degree,
            elements,
        }
    }

    /// Orbit of a 0-based point, sorted.
    pub fn orbit(&self, point: usize) -> Vec<usize> {
        self.elements
            .iter()
            .map(|g| g.apply(point))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_transitive(&self) -> bool {
        self.orbit(0).len() == self.degree
    }

    /// Multiset of element orders, sorted.
    pub fn element_orders(&self) -> Vec<usize> {
        self.elements.iter().map(Perm::order).sorted().collect()
    }
}

impl Serialize for PermGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.elements.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PermGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<PermGroup, D::Error> {
        let elements = Vec::<Perm>::deserialize(d)?;
        let degree = elements
            .first()
            .map(Perm::degree)
            .ok_or_else(|| D::Error::custom("a group needs at least its identity element"))?;
        PermGroup::from_elements(degree, elements).map_err(D::Error::custom)
    }
}

/// All conjugates of a subgroup inside `S_n`. The representative is the
/// least member under the sorted-element-list ordering.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ConjClass {
    degree: usize,
    representative: PermGroup,
    members: Vec<PermGroup>,
}

impl ConjClass {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn representative(&self) -> &PermGroup {
        &self.representative
    }

    pub fn members(&self) -> &[PermGroup] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: &PermGroup) -> bool {
        self.members.binary_search(g).is_ok()
    }

    /// Order of every member.
    pub fn group_order(&self) -> usize {
        self.representative.order()
    }
}

/// Enumerates `{xi H xi⁻¹ : xi ∈ S_n}`. Conjugators are walked one left
/// coset `xi H` at a time, since all of a coset yields the same conjugate.
pub fn conjugacy_class(h: &PermGroup) -> ConjClass {
    let mut covered: HashSet<Perm> = HashSet::new();
    let mut members: BTreeSet<PermGroup> = BTreeSet::new();
    for xi in symmetric_elements(h.degree) {
        if covered.contains(&xi) {
            continue;
        }
        for g in &h.elements {
            covered.insert(&xi * g);
        }
        members.insert(h.conjugate_by(&xi));
    }
    let members: Vec<PermGroup> = members.into_iter().collect();
    ConjClass {
        degree: h.degree,
        representative: members[0].clone(),
        members,
    }
}

/// Looks for `G1 ∈ c1`, `G2 ∈ c2` with `G2 ⊆ G1`. If one `G1` admits such a
/// `G2`, every member of `c1` does, so only the representative is searched.
pub fn contains_up_to_conjugacy(
    c1: &ConjClass,
    c2: &ConjClass,
) -> Result<Option<(PermGroup, PermGroup)>, PermError> {
    if c1.degree != c2.degree {
        return Err(PermError::DegreeMismatch(c1.degree, c2.degree));
    }
    if c2.group_order() > c1.group_order() || !c1.group_order().is_multiple_of(c2.group_order()) {
        return Ok(None);
    }
    let g1 = &c1.representative;
    Ok(c2
        .members
        .iter()
        .find(|g2| g2.is_subgroup_of(g1))
        .map(|g2| (g1.clone(), g2.clone())))
}

/// A partition of the window `{1..2m}` into two-element blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PairPartition {
    window: usize,
    blocks: Vec<[usize; 2]>,
}

impl PairPartition {
    /// Takes 1-based blocks; normalizes block and pair order.
    pub fn new(window: usize, blocks: &[[usize; 2]]) -> Result<PairPartition, PermError> {
        if window == 0 || !window.is_multiple_of(2) {
            return Err(PermError::InvalidPartition(format!(
                "window {window} is not a positive even number"
            )));
        }
        if blocks.len() * 2 != window {
            return Err(PermError::InvalidPartition(format!(
                "{} blocks cannot cover a window of {window}",
                blocks.len()
            )));
        }
        let mut seen = vec![false; window];
        let mut normalized = Vec::with_capacity(blocks.len());
        for &[a, b] in blocks {
            for x in [a, b] {
                if x == 0 || x > window || seen[x - 1] {
                    return Err(PermError::InvalidPartition(format!(
                        "point {x} repeated or outside 1..={window}"
                    )));
                }
                seen[x - 1] = true;
            }
            normalized.push([a.min(b) - 1, a.max(b) - 1]);
        }
        normalized.sort();
        Ok(PairPartition {
            window,
            blocks: normalized,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// 1-based blocks, sorted.
    pub fn blocks(&self) -> Vec<[usize; 2]> {
        self.blocks.iter().map(|&[a, b]| [a + 1, b + 1]).collect()
    }

    /// `xi P = {xi A : A ∈ P}`.
    pub fn image(&self, xi: &Perm) -> Result<PairPartition, PermError> {
        if xi.degree() != self.window {
            return Err(PermError::DegreeMismatch(self.window, xi.degree()));
        }
        let blocks: Vec<[usize; 2]> = self
            .blocks
            .iter()
            .map(|&[a, b]| [xi.apply(a) + 1, xi.apply(b) + 1])
            .collect();
        PairPartition::new(self.window, &blocks)
    }

    pub fn shares_no_block(&self, other: &PairPartition) -> bool {
        self.blocks.iter().all(|b| !other.blocks.contains(b))
    }
}

/// `G_P`: permutations carrying every block onto some block. Built directly
/// as block permutations combined with in-block flips, `2^m · m!` elements.
pub fn partition_group(p: &PairPartition) -> PermGroup {
    let m = p.blocks.len();
    let mut elements = Vec::with_capacity((1usize << m) * (1..=m).product::<usize>());
    for targets in (0..m).permutations(m) {
        for flips in 0..(1usize << m) {
            let mut images = vec![0; p.window];
            for (k, &t) in targets.iter().enumerate() {
                let [a, b] = p.blocks[k];
                let [c, d] = p.blocks[t];
                if flips >> k & 1 == 1 {
                    images[a] = d;
                    images[b] = c;
                } else {
                    images[a] = c;
                    images[b] = d;
                }
            }
            elements.push(Perm { images });
        }
    }
    elements.sort();
    PermGroup {
        degree: p.window,
        elements,
    }
}
