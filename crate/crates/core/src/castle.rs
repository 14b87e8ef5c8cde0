//! Rokhlin towers and castles over a finite cyclic point system.
//!
//! The base is a single `N`-cycle `x ↦ x + 1 mod N` with uniform measure,
//! carrying one permutation label per point. Tower and castle statements
//! that only hold up to small measure for aperiodic systems are exact here.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ergodic;
use crate::perm::{Perm, PermError, PermGroup};
use crate::symbolic::{Edge, LabeledSystem, Rational, SystemError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CastleError {
    #[error("point system has no points")]
    Empty,
    #[error("label at point {point} has degree {found}, expected {expected}")]
    LabelDegree {
        point: usize,
        expected: usize,
        found: usize,
    },
    #[error("tower height {height} not in 1..={size}")]
    Height { height: usize, size: usize },
    #[error("point {0} outside the system")]
    PointRange(usize),
    #[error("tower levels overlap at point {0}")]
    LevelOverlap(usize),
    #[error("towers overlap at point {0}")]
    TowerOverlap(usize),
    #[error("castles live on systems of different size: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("column classes do not partition the tower base: {0}")]
    BadClasses(String),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Points `0..N` on one cycle, with `labels[x]` consumed stepping `x -> x+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PointSystemFile", into = "PointSystemFile")]
pub struct FinitePointSystem {
    labels: Vec<Perm>,
}

#[derive(Serialize, Deserialize)]
struct PointSystemFile {
    labels: Vec<Perm>,
}

impl TryFrom<PointSystemFile> for FinitePointSystem {
    type Error = CastleError;
    fn try_from(f: PointSystemFile) -> Result<Self, CastleError> {
        FinitePointSystem::new(f.labels)
    }
}

impl From<FinitePointSystem> for PointSystemFile {
    fn from(s: FinitePointSystem) -> Self {
        PointSystemFile { labels: s.labels }
    }
}

impl FinitePointSystem {
    pub fn new(labels: Vec<Perm>) -> Result<FinitePointSystem, CastleError> {
        let degree = labels.first().ok_or(CastleError::Empty)?.degree();
        if let Some((point, l)) = labels
            .iter()
            .enumerate()
            .find(|(_, l)| l.degree() != degree)
        {
            return Err(CastleError::LabelDegree {
                point,
                expected: degree,
                found: l.degree(),
            });
        }
        Ok(FinitePointSystem { labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn degree(&self) -> usize {
        self.labels[0].degree()
    }

    pub fn labels(&self) -> &[Perm] {
        &self.labels
    }

    /// `T^n x`.
    pub fn step(&self, x: usize, n: u64) -> usize {
        ((x as u64 + n) % self.size() as u64) as usize
    }

    /// `σ(x, N)`, the product of all labels once around the cycle from `x`.
    pub fn holonomy(&self, x: usize) -> Perm {
        self.product_from(x, self.size())
    }

    fn product_from(&self, x: usize, steps: usize) -> Perm {
        let n = self.size();
        let mut acc = Perm::identity(self.degree());
        for k in 0..steps {
            acc = &self.labels[(x + k) % n] * &acc;
        }
        acc
    }

    /// `σ(x, n) = label(x+n-1) ∘ ... ∘ label(x)`. Whole turns around the
    /// cycle are folded into a power of the holonomy at `x`:
    /// `σ(x, qN + r) = σ(x, r) ∘ σ(x, N)^q`.
    pub fn cocycle_value(&self, x: usize, n: u64) -> Perm {
        let size = self.size() as u64;
        let (turns, rest) = (n / size, (n % size) as usize);
        let tail = self.product_from(x, rest);
        if turns == 0 {
            return tail;
        }
        let h = self.holonomy(x);
        let mut power = Perm::identity(self.degree());
        for _ in 0..turns % h.order() as u64 {
            power = &h * &power;
        }
        &tail * &power
    }

    /// Group generated by the labels.
    pub fn group(&self) -> PermGroup {
        PermGroup::generate(self.degree(), &self.labels).expect("labels share a degree")
    }

    /// The cycle as a one-vertex-per-point labeled system with deterministic
    /// transitions.
    pub fn as_labeled_system(&self) -> LabeledSystem {
        let n = self.size();
        let edges = (0..n)
            .map(|x| Edge {
                from: x,
                to: (x + 1) % n,
                prob: Rational::from_integer(1),
                label: self.labels[x].clone(),
            })
            .collect();
        LabeledSystem::new(
            self.degree(),
            (0..n).map(|x| x.to_string()).collect(),
            edges,
        )
        .expect("a single cycle is irreducible")
    }

    /// Whether the skew product over the label group is ergodic.
    pub fn lift_is_ergodic(&self) -> bool {
        ergodic::is_g_ergodic(&self.as_labeled_system(), &self.group())
            .expect("labels lie in the group they generate")
    }
}

/// Levels `base, T(base), ..., T^{h-1}(base)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    size: usize,
    base: Vec<usize>,
    height: usize,
}

impl Tower {
    pub fn new(size: usize, base: Vec<usize>, height: usize) -> Result<Tower, CastleError> {
        if height == 0 || height > size {
            return Err(CastleError::Height { height, size });
        }
        let mut base = base;
        base.sort_unstable();
        base.dedup();
        if let Some(&x) = base.iter().find(|&&x| x >= size) {
            return Err(CastleError::PointRange(x));
        }
        let t = Tower { size, base, height };
        let mut seen = BTreeSet::new();
        for x in t.support() {
            if !seen.insert(x) {
                return Err(CastleError::LevelOverlap(x));
            }
        }
        Ok(t)
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Level `i`, ordered by column (so `level(i)[c] = level(0)[c] + i`).
    pub fn level(&self, i: usize) -> Vec<usize> {
        self.base.iter().map(|&b| (b + i) % self.size).collect()
    }

    pub fn levels(&self) -> Vec<Vec<usize>> {
        (0..self.height).map(|i| self.level(i)).collect()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.height).flat_map(move |i| self.base.iter().map(move |&b| (b + i) % self.size))
    }

    /// `|base| / N`.
    pub fn width(&self) -> Rational {
        Rational::new(self.base.len() as i128, self.size as i128)
    }
}

/// Towers with pairwise disjoint supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Castle {
    size: usize,
    towers: Vec<Tower>,
}

impl Castle {
    pub fn new(size: usize, towers: Vec<Tower>) -> Result<Castle, CastleError> {
        let mut seen = BTreeSet::new();
        for t in &towers {
            if t.size != size {
                return Err(CastleError::SizeMismatch(size, t.size));
            }
            for x in t.support() {
                if !seen.insert(x) {
                    return Err(CastleError::TowerOverlap(x));
                }
            }
        }
        Ok(Castle { size, towers })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn towers(&self) -> &[Tower] {
        &self.towers
    }

    /// `|C|`.
    pub fn support(&self) -> BTreeSet<usize> {
        self.towers.iter().flat_map(Tower::support).collect()
    }

    /// `|C|°`: the support minus every tower's top level.
    pub fn interior(&self) -> BTreeSet<usize> {
        self.towers
            .iter()
            .flat_map(|t| (0..t.height - 1).flat_map(move |i| t.level(i)))
            .collect()
    }

    pub fn residual(&self) -> BTreeSet<usize> {
        let support = self.support();
        (0..self.size).filter(|x| !support.contains(x)).collect()
    }

    /// `L(C)`, every level as a point set.
    pub fn level_sets(&self) -> Vec<BTreeSet<usize>> {
        self.towers
            .iter()
            .flat_map(|t| t.levels().into_iter().map(|l| l.into_iter().collect()))
            .collect()
    }

    /// Drops the top level of every tower; towers of height one vanish.
    pub fn without_top_level(&self) -> Castle {
        Castle {
            size: self.size,
            towers: self
                .towers
                .iter()
                .filter(|t| t.height > 1)
                .map(|t| Tower {
                    size: t.size,
                    base: t.base.clone(),
                    height: t.height - 1,
                })
                .collect(),
        }
    }
}

/// Base `{0, h, 2h, ...}` with `floor(N/h)` columns.
pub fn build_tower(sys: &FinitePointSystem, height: usize) -> Result<Tower, CastleError> {
    let size = sys.size();
    if height == 0 || height > size {
        return Err(CastleError::Height { height, size });
    }
    Tower::new(
        size,
        (0..size / height).map(|k| k * height).collect(),
        height,
    )
}

/// Splits a tower into one tower per class of its base. Towers are ordered by
/// their smallest base point.
pub fn column_castle(
    sys: &FinitePointSystem,
    tower: &Tower,
    classes: &[Vec<usize>],
) -> Result<Castle, CastleError> {
    let base: BTreeSet<usize> = tower.base.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for &x in classes.iter().flatten() {
        if !base.contains(&x) {
            return Err(CastleError::BadClasses(format!("{x} is not a base point")));
        }
        if !seen.insert(x) {
            return Err(CastleError::BadClasses(format!("{x} appears twice")));
        }
    }
    if let Some(x) = base.difference(&seen).next() {
        return Err(CastleError::BadClasses(format!("{x} is in no class")));
    }
    let mut towers = classes
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| Tower::new(sys.size(), c.clone(), tower.height))
        .collect::<Result<Vec<_>, _>>()?;
    towers.sort_by_key(|t| t.base[0]);
    Castle::new(sys.size(), towers)
}

/// Groups base points by a key, classes ordered by smallest member.
pub fn classes_by_key<K: Ord>(base: &[usize], key: impl Fn(usize) -> K) -> Vec<Vec<usize>> {
    let mut by_key: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for &x in base {
        by_key.entry(key(x)).or_default().push(x);
    }
    let mut classes: Vec<Vec<usize>> = by_key.into_values().collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Column signature `(σ(x, 1), ..., σ(x, h-1))` of a base point.
pub fn signature(sys: &FinitePointSystem, x: usize, height: usize) -> Vec<Perm> {
    let mut out = Vec::with_capacity(height.saturating_sub(1));
    let mut acc = Perm::identity(sys.degree());
    for i in 0..height.saturating_sub(1) {
        acc = &sys.labels[(x + i) % sys.size()] * &acc;
        out.push(acc.clone());
    }
    out
}

/// A height-`h` castle on which the cocycle is exactly constant: for each
/// tower, `σ(T^i x, j - i)` does not depend on the base point `x`.
pub fn build_exact_castle(sys: &FinitePointSystem, height: usize) -> Result<Castle, CastleError> {
    let tower = build_tower(sys, height)?;
    let classes = classes_by_key(tower.base(), |x| signature(sys, x, height));
    column_castle(sys, &tower, &classes)
}

/// Whether the level sets of the given castles together separate every pair
/// of points.
pub fn levels_separate_points(size: usize, castles: &[Castle]) -> bool {
    let levels: Vec<BTreeSet<usize>> = castles.iter().flat_map(Castle::level_sets).collect();
    (0..size)
        .all(|x| (x + 1..size).all(|y| levels.iter().any(|l| l.contains(&x) != l.contains(&y))))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefineReport {
    pub holds: bool,
    /// `"(i)"`, `"(ii)"` or `"(iii)"` for the first failing condition.
    pub failed_condition: Option<&'static str>,
    pub detail: Option<String>,
}

impl RefineReport {
    fn fail(condition: &'static str, detail: String) -> RefineReport {
        RefineReport {
            holds: false,
            failed_condition: Some(condition),
            detail: Some(detail),
        }
    }
}

/// Checks `C1 ≤ C2`: `C2` arises from `C1` by cutting and stacking. The
/// candidate cut `Q` splits each base of `C1` by which level of which tower
/// of `C2` its points fall in; that is the only cut that can satisfy (ii).
///
/// (i) `|C1| ⊂ |C2|°`; (ii) every level of `(C1)_Q` is a level of `C2`;
/// (iii) every tower of `(C1)_Q` lies inside a single tower of `C2`.
pub fn refine_check(c1: &Castle, c2: &Castle) -> Result<RefineReport, CastleError> {
    if c1.size != c2.size {
        return Err(CastleError::SizeMismatch(c1.size, c2.size));
    }
    let interior = c2.interior();
    if let Some(x) = c1.support().into_iter().find(|x| !interior.contains(x)) {
        return Ok(RefineReport::fail(
            "(i)",
            format!("point {x} of C1 is not in the interior of C2"),
        ));
    }
    // point -> (tower, level) in C2
    let mut place = BTreeMap::new();
    for (j, t) in c2.towers.iter().enumerate() {
        for (m, level) in t.levels().into_iter().enumerate() {
            for x in level {
                place.insert(x, (j, m));
            }
        }
    }
    for (k, t1) in c1.towers.iter().enumerate() {
        let classes = classes_by_key(&t1.base, |x| place[&x]);
        for class in classes {
            let (j, m) = place[&class[0]];
            let t2 = &c2.towers[j];
            if m + t1.height > t2.height {
                return Ok(RefineReport::fail(
                    "(iii)",
                    format!("column of C1 tower {k} at level {m} overruns C2 tower {j}"),
                ));
            }
            for i in 0..t1.height {
                let level: BTreeSet<usize> = class.iter().map(|&x| (x + i) % c1.size).collect();
                let target: BTreeSet<usize> = t2.level(m + i).into_iter().collect();
                if level != target {
                    return Ok(RefineReport::fail(
                        "(ii)",
                        format!(
                            "level {i} of a column of C1 tower {k} is not level {} of C2 tower {j}",
                            m + i
                        ),
                    ));
                }
            }
        }
    }
    Ok(RefineReport {
        holds: true,
        failed_condition: None,
        detail: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDump {
    pub base: Vec<usize>,
    pub height: usize,
    /// Per column, its signature.
    pub signatures: Vec<Vec<Perm>>,
}

/// JSON dump of a castle: bases, heights and column signatures.
pub fn dump_castle(sys: &FinitePointSystem, castle: &Castle) -> Vec<TowerDump> {
    castle
        .towers
        .iter()
        .map(|t| TowerDump {
            base: t.base.clone(),
            height: t.height,
            signatures: t
                .base
                .iter()
                .map(|&x| signature(sys, x, t.height))
                .collect(),
        })
        .collect()
}
