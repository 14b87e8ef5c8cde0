//! Finite stages of the speedup construction for a discrete fiber group.
//!
//! With a discrete group every approximate cocycle match becomes an exact
//! one and the transfer functions are identically the identity, so a stage
//! is fully described by its level sets, the return-time tables `q` and the
//! speedup `p` they induce.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::castle::FinitePointSystem;
use crate::perm::Perm;
use crate::symbolic::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("skew product over the label group is not ergodic (holonomy does not generate it)")]
    NonErgodicLift,
    #[error("target {0} is not in the group generated by the labels")]
    TargetOutsideGroup(Perm),
    #[error("set {0} is empty")]
    EmptySet(&'static str),
    #[error("point {0} outside the system")]
    PointRange(usize),
    #[error("|A| = {a} but |B| = {b}")]
    Cardinality { a: usize, b: usize },
    #[error("no good pair found within {bound} steps")]
    NoLittlePush { bound: u64 },
    #[error("point {x} could not be pushed into B within {bound} steps")]
    Unreachable { x: usize, bound: u64 },
    #[error("infeasible widths: {0}")]
    InfeasibleWidths(String),
    #[error("bad target castle: {0}")]
    BadSpec(String),
    #[error("previous stage cannot be embedded in the new castle: {0}")]
    InconsistentPrevious(String),
}

/// A partial speedup `x ↦ T^{p(x)} x`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpeedupMap {
    p: BTreeMap<usize, u64>,
}

impl SpeedupMap {
    pub fn new() -> SpeedupMap {
        SpeedupMap::default()
    }

    pub fn insert(&mut self, x: usize, p: u64) {
        self.p.insert(x, p);
    }

    pub fn get(&self, x: usize) -> Option<u64> {
        self.p.get(&x).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.p.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.p.iter().map(|(&x, &p)| (x, p))
    }

    pub fn image(&self, sys: &FinitePointSystem, x: usize) -> Option<usize> {
        self.get(x).map(|p| sys.step(x, p))
    }
}

fn check_points(
    sys: &FinitePointSystem,
    set: &[usize],
    name: &'static str,
) -> Result<(), SynthError> {
    if set.is_empty() {
        return Err(SynthError::EmptySet(name));
    }
    match set.iter().find(|&&x| x >= sys.size()) {
        Some(&x) => Err(SynthError::PointRange(x)),
        None => Ok(()),
    }
}

fn check_ergodic(sys: &FinitePointSystem) -> Result<(), SynthError> {
    if sys.lift_is_ergodic() {
        Ok(())
    } else {
        Err(SynthError::NonErgodicLift)
    }
}

/// Smallest `n' ≥ 1` such that some points of `A` land in `B` after `n'`
/// steps with cocycle exactly `target`; returns all such points of `A`.
pub fn little_push(
    sys: &FinitePointSystem,
    a: &[usize],
    b: &[usize],
    target: &Perm,
) -> Result<(Vec<usize>, u64), SynthError> {
    check_points(sys, a, "A")?;
    check_points(sys, b, "B")?;
    check_ergodic(sys)?;
    let group = sys.group();
    if !group.contains(target) {
        return Err(SynthError::TargetOutsideGroup(target.clone()));
    }
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let bound = (sys.size() * group.order()) as u64;
    let mut walkers: Vec<(usize, Perm)> = a
        .iter()
        .map(|&x| (x, Perm::identity(sys.degree())))
        .collect();
    for n in 1..=bound {
        let mut good = Vec::new();
        for (x, acc) in &mut walkers {
            *acc = &sys.labels()[sys.step(*x, n - 1)] * acc;
            if b.contains(&sys.step(*x, n)) && acc == target {
                good.push(*x);
            }
        }
        if !good.is_empty() {
            return Ok((good, n));
        }
    }
    Err(SynthError::NoLittlePush { bound })
}

/// Return times `p` on `A` with `x ↦ T^{p(x)} x` a bijection `A → B`,
/// `σ(x, p(x)) = g(x)` exactly, and `p(x) > floor(x)` when a floor is given.
///
/// Greedy over time: at each `n = 1, 2, ...`, every still-unmatched `x`
/// (in increasing order) whose orbit sits at an unfilled point of `B` with
/// cocycle `g(x)` is matched there. With an ergodic lift each `x` meets
/// every `(b, g)` pair once per `N·|G|` steps, so the loop ends.
pub fn push_forward(
    sys: &FinitePointSystem,
    a: &[usize],
    b: &[usize],
    g: &dyn Fn(usize) -> Perm,
    floor: Option<&dyn Fn(usize) -> u64>,
) -> Result<SpeedupMap, SynthError> {
    if a.len() != b.len() {
        return Err(SynthError::Cardinality {
            a: a.len(),
            b: b.len(),
        });
    }
    check_points(sys, a, "A")?;
    check_points(sys, b, "B")?;
    let a: Vec<usize> = a
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let b_set: BTreeSet<usize> = b.iter().copied().collect();
    if a.len() != b_set.len() {
        return Err(SynthError::Cardinality {
            a: a.len(),
            b: b_set.len(),
        });
    }
    check_ergodic(sys)?;
    let group = sys.group();
    let targets: Vec<Perm> = a.iter().map(|&x| g(x)).collect();
    if let Some(t) = targets.iter().find(|t| !group.contains(t)) {
        return Err(SynthError::TargetOutsideGroup(t.clone()));
    }
    let floors: Vec<u64> = a.iter().map(|&x| floor.map_or(0, |f| f(x))).collect();

    let period = (sys.size() * group.order()) as u64;
    let bound = floors.iter().max().copied().unwrap_or(0) + period * (a.len() as u64 + 1);
    let mut cocycle: Vec<Perm> = vec![Perm::identity(sys.degree()); a.len()];
    let mut unmatched: Vec<usize> = (0..a.len()).collect();
    let mut filled: HashSet<usize> = HashSet::new();
    let mut out = SpeedupMap::new();
    let mut n = 0;
    while !unmatched.is_empty() {
        n += 1;
        if n > bound {
            return Err(SynthError::Unreachable {
                x: a[unmatched[0]],
                bound,
            });
        }
        unmatched.retain(|&k| {
            let x = a[k];
            cocycle[k] = &sys.labels()[sys.step(x, n - 1)] * &cocycle[k];
            let y = sys.step(x, n);
            if n > floors[k]
                && b_set.contains(&y)
                && !filled.contains(&y)
                && cocycle[k] == targets[k]
            {
                filled.insert(y);
                out.insert(x, n);
                false
            } else {
                true
            }
        });
    }
    Ok(out)
}

/// One tower of the target castle: `height` levels of `width · N` points
/// each, and the cocycle value `level_labels[i]` required when stepping
/// from level `i` to level `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetTower {
    pub height: usize,
    #[serde(with = "rational_string")]
    pub width: Rational,
    pub level_labels: Vec<Perm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCastleSpec {
    pub towers: Vec<TargetTower>,
}

mod rational_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::symbolic::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.trim()
            .parse()
            .map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
    }
}

impl TargetCastleSpec {
    /// Points per level of each tower, after checking the spec fits `N`.
    pub fn column_counts(&self, sys: &FinitePointSystem) -> Result<Vec<usize>, SynthError> {
        if self.towers.is_empty() {
            return Err(SynthError::BadSpec("no towers".into()));
        }
        let n = sys.size() as i128;
        let mut counts = Vec::with_capacity(self.towers.len());
        let mut mass = Rational::from_integer(0);
        for (j, t) in self.towers.iter().enumerate() {
            if t.height == 0 {
                return Err(SynthError::BadSpec(format!("tower {j} has height 0")));
            }
            if t.level_labels.len() + 1 != t.height {
                return Err(SynthError::BadSpec(format!(
                    "tower {j}: height {} needs {} level labels, got {}",
                    t.height,
                    t.height - 1,
                    t.level_labels.len()
                )));
            }
            if let Some(l) = t.level_labels.iter().find(|l| l.degree() != sys.degree()) {
                return Err(SynthError::BadSpec(format!(
                    "tower {j}: label {l} has degree {}, system has {}",
                    l.degree(),
                    sys.degree()
                )));
            }
            if *t.width.numer() <= 0 {
                return Err(SynthError::InfeasibleWidths(format!(
                    "tower {j}: width must be positive"
                )));
            }
            let points = t.width * Rational::from_integer(n);
            if !points.is_integer() {
                return Err(SynthError::InfeasibleWidths(format!(
                    "tower {j}: width {} is not a multiple of 1/{n}",
                    t.width
                )));
            }
            mass += t.width * Rational::from_integer(t.height as i128);
            counts.push(points.to_integer() as usize);
        }
        if mass > Rational::from_integer(1) {
            return Err(SynthError::InfeasibleWidths(format!(
                "total mass {mass} exceeds 1"
            )));
        }
        Ok(counts)
    }
}

/// Where a column of the previous stage sits inside a tower of this one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub previous_tower: usize,
    pub offset: usize,
}

/// A tower of the speedup: level `i + 1` is the image of level `i` under
/// the stage speedup, column by column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageTower {
    /// `levels[i][c]` is the point of column `c` at level `i`.
    pub levels: Vec<Vec<usize>>,
    /// `q[i][c]`: the source time from the column's base point to level `i`.
    pub q: Vec<Vec<u64>>,
    pub labels: Vec<Perm>,
    pub blocks: Vec<Block>,
}

impl StageTower {
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn columns(&self) -> usize {
        self.levels[0].len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl StageReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeedupStage {
    pub stage_index: usize,
    pub towers: Vec<StageTower>,
    pub speedup: SpeedupMap,
    /// Speedup of the stage this one was built on, if any.
    pub previous: Option<SpeedupMap>,
    pub report: StageReport,
}

impl SpeedupStage {
    /// Target level `(tower, level)` of a point of the castle.
    pub fn phi(&self, x: usize) -> Option<(usize, usize)> {
        self.towers
            .iter()
            .enumerate()
            .find_map(|(j, t)| t.levels.iter().position(|l| l.contains(&x)).map(|i| (j, i)))
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.towers
            .iter()
            .flat_map(|t| t.levels.iter().flatten().copied())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Segment {
    Fresh,
    Block(usize),
}

struct EmbedSearch<'a> {
    heights: Vec<usize>,
    counts: &'a [usize],
    labels: Vec<&'a [Perm]>,
    prev: Vec<(usize, &'a [Perm])>,
    budgets: Vec<usize>,
    fresh_left: usize,
    plan: Vec<Vec<Segment>>,
    failed: HashSet<(usize, usize, Vec<usize>, usize)>,
}

impl EmbedSearch<'_> {
    // Depth-first over (tower, level): prefer stacking a previous column at
    // the current level, otherwise use a fresh level.
    fn run(&mut self, j: usize, m: usize) -> bool {
        if j == self.heights.len() {
            return self.budgets.iter().all(|&b| b == 0);
        }
        if m == self.heights[j] {
            self.plan.push(Vec::new());
            if self.run(j + 1, 0) {
                return true;
            }
            self.plan.pop();
            return false;
        }
        let key = (j, m, self.budgets.clone(), self.fresh_left);
        if self.failed.contains(&key) {
            return false;
        }
        let c = self.counts[j];
        let h = self.heights[j];
        for k in 0..self.prev.len() {
            let (hk, lk) = self.prev[k];
            if self.budgets[k] < c || m + hk > h || self.labels[j][m..m + hk - 1] != *lk {
                continue;
            }
            self.budgets[k] -= c;
            self.current()
                .extend(std::iter::repeat_n(Segment::Block(k), hk));
            if self.run(j, m + hk) {
                return true;
            }
            let len = self.current().len();
            self.current().truncate(len - hk);
            self.budgets[k] += c;
        }
        if self.fresh_left >= c {
            self.fresh_left -= c;
            self.current().push(Segment::Fresh);
            if self.run(j, m + 1) {
                return true;
            }
            self.current().pop();
            self.fresh_left += c;
        }
        self.failed.insert(key);
        false
    }

    fn current(&mut self) -> &mut Vec<Segment> {
        if self.plan.is_empty() {
            self.plan.push(Vec::new());
        }
        self.plan.last_mut().expect("plan has a current tower")
    }
}

/// Places every column of the previous castle inside the new towers so that
/// the new level labels agree with the old ones along each placed column.
fn plan_embedding(
    spec: &TargetCastleSpec,
    counts: &[usize],
    prev: Option<&SpeedupStage>,
    fresh_available: usize,
) -> Result<Vec<Vec<Segment>>, SynthError> {
    let prev_towers: Vec<(usize, &[Perm])> = prev
        .map(|s| {
            s.towers
                .iter()
                .map(|t| (t.height(), t.labels.as_slice()))
                .collect()
        })
        .unwrap_or_default();
    let budgets: Vec<usize> = prev
        .map(|s| s.towers.iter().map(StageTower::columns).collect())
        .unwrap_or_default();
    let mut search = EmbedSearch {
        heights: spec.towers.iter().map(|t| t.height).collect(),
        counts,
        labels: spec
            .towers
            .iter()
            .map(|t| t.level_labels.as_slice())
            .collect(),
        prev: prev_towers,
        budgets,
        fresh_left: fresh_available,
        plan: vec![Vec::new()],
        failed: HashSet::new(),
    };
    if search.run(0, 0) {
        search.plan.truncate(spec.towers.len());
        Ok(search.plan)
    } else if prev.is_some() {
        Err(SynthError::InconsistentPrevious(
            "no placement of the previous columns matches the target labels and widths".into(),
        ))
    } else {
        Err(SynthError::InfeasibleWidths(
            "not enough points for the target castle".into(),
        ))
    }
}

/// Builds one stage. Without `prev`, every level is a fresh copy of the
/// target level placed on the lowest free points. With `prev`, each column
/// of the previous castle is stacked into a new tower; across those columns
/// the return times are inherited (`q_{m+1} = q_m + p_prev`), elsewhere
/// they come from [`push_forward`] with the accumulated target label.
pub fn build_stage(
    sys: &FinitePointSystem,
    spec: &TargetCastleSpec,
    prev: Option<&SpeedupStage>,
) -> Result<SpeedupStage, SynthError> {
    let counts = spec.column_counts(sys)?;
    check_ergodic(sys)?;
    let group = sys.group();
    for t in &spec.towers {
        if let Some(l) = t.level_labels.iter().find(|l| !group.contains(l)) {
            return Err(SynthError::TargetOutsideGroup(l.clone()));
        }
    }
    let reserved = prev.map(SpeedupStage::support).unwrap_or_default();
    let mut pool = (0..sys.size()).filter(|x| !reserved.contains(x));
    let fresh_available = sys.size() - reserved.len();
    let plan = plan_embedding(spec, &counts, prev, fresh_available)?;

    // Next unused column of each previous tower.
    let mut next_column = vec![0; prev.map_or(0, |s| s.towers.len())];
    let mut towers = Vec::with_capacity(spec.towers.len());
    let mut speedup = SpeedupMap::new();

    for (j, target) in spec.towers.iter().enumerate() {
        let c = counts[j];
        let h = target.height;
        let segments = &plan[j];

        // Point sets for levels that start something new: fresh levels and
        // the bottoms of stacked previous columns.
        let mut start_sets: Vec<Option<Vec<usize>>> = vec![None; h];
        let mut blocks = Vec::new();
        let mut m = 0;
        while m < h {
            match segments[m] {
                Segment::Fresh => {
                    start_sets[m] = Some(pool.by_ref().take(c).collect());
                    m += 1;
                }
                Segment::Block(k) => {
                    let prev_tower = &prev.expect("blocks need a previous stage").towers[k];
                    let cols = next_column[k]..next_column[k] + c;
                    next_column[k] += c;
                    start_sets[m] = Some(prev_tower.levels[0][cols].to_vec());
                    blocks.push(Block {
                        previous_tower: k,
                        offset: m,
                    });
                    m += prev_tower.height();
                }
            }
        }
        let block_start: Vec<bool> = (0..h)
            .map(|m| {
                m == 0 || segments[m] != segments[m - 1] || blocks.iter().any(|b| b.offset == m)
            })
            .collect();

        let base = start_sets[0]
            .clone()
            .expect("level 0 always starts a segment");
        let mut q: Vec<Vec<u64>> = vec![vec![0; c]];
        let mut levels: Vec<Vec<usize>> = vec![base.clone()];
        let mut accumulated = Perm::identity(sys.degree());
        for m in 0..h - 1 {
            accumulated = &target.level_labels[m] * &accumulated;
            let next_q: Vec<u64> =
                if let (Segment::Block(_), false) = (segments[m + 1], block_start[m + 1]) {
                    let p_prev = prev.expect("blocks need a previous stage");
                    levels[m]
                        .iter()
                        .zip(&q[m])
                        .map(|(&y, &qm)| {
                            let step = p_prev
                                .speedup
                                .get(y)
                                .expect("interior points of a previous column carry p");
                            qm + step
                        })
                        .collect()
                } else {
                    let b = start_sets[m + 1]
                        .as_ref()
                        .expect("segment start has a point set");
                    let qm: BTreeMap<usize, u64> =
                        base.iter().copied().zip(q[m].iter().copied()).collect();
                    let target_value = accumulated.clone();
                    let pushed =
                        push_forward(sys, &base, b, &|_| target_value.clone(), Some(&|x| qm[&x]))?;
                    base.iter()
                        .map(|&x| pushed.get(x).expect("push covers A"))
                        .collect()
                };
            let next_level: Vec<usize> = base
                .iter()
                .zip(&next_q)
                .map(|(&x, &t)| sys.step(x, t))
                .collect();
            for (col, &y) in levels[m].iter().enumerate() {
                speedup.insert(y, next_q[col] - q[m][col]);
            }
            q.push(next_q);
            levels.push(next_level);
        }
        towers.push(StageTower {
            levels,
            q,
            labels: target.level_labels.clone(),
            blocks,
        });
    }

    let mut stage = SpeedupStage {
        stage_index: prev.map_or(1, |s| s.stage_index + 1),
        towers,
        speedup,
        previous: prev.map(|s| s.speedup.clone()),
        report: StageReport::default(),
    };
    stage.report = verify_stage(sys, spec, &stage);
    Ok(stage)
}

/// Re-checks a stage from its level sets and speedup alone.
pub fn verify_stage(
    sys: &FinitePointSystem,
    spec: &TargetCastleSpec,
    stage: &SpeedupStage,
) -> StageReport {
    let mut checks = Vec::new();
    let mut record = |name: &'static str, result: Result<(), String>| {
        checks.push(Check {
            name,
            passed: result.is_ok(),
            detail: result.err(),
        });
    };
    record("levels", check_levels(sys, spec, stage));
    record("p_positive", check_positive(stage));
    record("domain", check_domain(stage));
    record("injective", check_injective(sys, stage));
    record("level_map", check_level_map(sys, stage));
    record("cocycle", check_cocycle(sys, spec, stage));
    record("speedup_cocycle_law", check_speedup_law(sys, stage));
    record("extension", check_extension(stage));
    StageReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn check_levels(
    sys: &FinitePointSystem,
    spec: &TargetCastleSpec,
    stage: &SpeedupStage,
) -> Result<(), String> {
    let counts = spec.column_counts(sys).map_err(|e| e.to_string())?;
    if stage.towers.len() != spec.towers.len() {
        return Err(format!(
            "{} towers, target has {}",
            stage.towers.len(),
            spec.towers.len()
        ));
    }
    let mut seen = BTreeSet::new();
    for (j, (t, target)) in stage.towers.iter().zip(&spec.towers).enumerate() {
        if t.height() != target.height {
            return Err(format!(
                "tower {j}: height {} but target {}",
                t.height(),
                target.height
            ));
        }
        for (i, level) in t.levels.iter().enumerate() {
            if level.len() != counts[j] {
                return Err(format!(
                    "tower {j} level {i}: {} points, target {}",
                    level.len(),
                    counts[j]
                ));
            }
            for &x in level {
                if x >= sys.size() || !seen.insert(x) {
                    return Err(format!("point {x} repeated or out of range"));
                }
            }
        }
    }
    Ok(())
}

fn check_positive(stage: &SpeedupStage) -> Result<(), String> {
    match stage.speedup.iter().find(|&(_, p)| p == 0) {
        Some((x, _)) => Err(format!("p({x}) = 0")),
        None => Ok(()),
    }
}

fn check_domain(stage: &SpeedupStage) -> Result<(), String> {
    let interior: BTreeSet<usize> = stage
        .towers
        .iter()
        .flat_map(|t| t.levels[..t.height() - 1].iter().flatten().copied())
        .collect();
    let domain: BTreeSet<usize> = stage.speedup.domain().collect();
    if let Some(x) = interior.symmetric_difference(&domain).next() {
        return Err(format!(
            "point {x} is in exactly one of the castle interior and the domain of p"
        ));
    }
    Ok(())
}

fn check_injective(sys: &FinitePointSystem, stage: &SpeedupStage) -> Result<(), String> {
    let mut hit: BTreeMap<usize, usize> = BTreeMap::new();
    for (x, p) in stage.speedup.iter() {
        let y = sys.step(x, p);
        if let Some(other) = hit.insert(y, x) {
            return Err(format!("points {other} and {x} both map to {y}"));
        }
    }
    Ok(())
}

fn check_level_map(sys: &FinitePointSystem, stage: &SpeedupStage) -> Result<(), String> {
    for (j, t) in stage.towers.iter().enumerate() {
        for i in 0..t.height() - 1 {
            for (col, &y) in t.levels[i].iter().enumerate() {
                let expected = t.levels[i + 1][col];
                match stage.speedup.image(sys, y) {
                    Some(z) if z == expected => {}
                    other => {
                        return Err(format!(
                            "tower {j} level {i}: point {y} maps to {other:?}, expected {expected}"
                        ))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Accumulated source time along a column from level `i` to level `k`.
fn span(stage: &SpeedupStage, t: &StageTower, col: usize, i: usize, k: usize) -> Option<u64> {
    (i..k).map(|m| stage.speedup.get(t.levels[m][col])).sum()
}

fn check_cocycle(
    sys: &FinitePointSystem,
    spec: &TargetCastleSpec,
    stage: &SpeedupStage,
) -> Result<(), String> {
    for (j, (t, target)) in stage.towers.iter().zip(&spec.towers).enumerate() {
        for i in 0..t.height() {
            let mut expected = Perm::identity(sys.degree());
            for k in i + 1..t.height() {
                expected = &target.level_labels[k - 1] * &expected;
                for col in 0..t.columns() {
                    let y = t.levels[i][col];
                    let Some(total) = span(stage, t, col, i, k) else {
                        return Err(format!(
                            "tower {j}, levels {i}..{k}: p undefined along column of {y}"
                        ));
                    };
                    if sys.cocycle_value(y, total) != expected {
                        return Err(format!(
                            "tower {j}, levels {i}..{k}: σ({y}, {total}) = {} but target is {expected}",
                            sys.cocycle_value(y, total)
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_speedup_law(sys: &FinitePointSystem, stage: &SpeedupStage) -> Result<(), String> {
    for t in &stage.towers {
        for col in 0..t.columns() {
            let start = t.levels[0][col];
            let mut x = start;
            let mut total = 0;
            let mut composed = Perm::identity(sys.degree());
            for _ in 0..t.height() - 1 {
                let Some(p) = stage.speedup.get(x) else {
                    return Err(format!("p undefined at {x}"));
                };
                composed = &sys.cocycle_value(x, p) * &composed;
                total += p;
                x = sys.step(x, p);
                if composed != sys.cocycle_value(start, total) {
                    return Err(format!(
                        "sped-up cocycle from {start} disagrees after total time {total}"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_extension(stage: &SpeedupStage) -> Result<(), String> {
    let Some(prev) = &stage.previous else {
        return Ok(());
    };
    for (x, p) in prev.iter() {
        match stage.speedup.get(x) {
            Some(q) if q == p => {}
            other => return Err(format!("previous p({x}) = {p}, now {other:?}")),
        }
    }
    Ok(())
}

#[derive(Serialize)]
pub struct StageTrace<'a> {
    pub stage: usize,
    pub towers: &'a [StageTower],
    /// `[x, p(x)]` pairs in increasing `x`.
    pub p: Vec<(usize, u64)>,
    pub report: &'a StageReport,
}

impl SpeedupStage {
    pub fn trace(&self) -> StageTrace<'_> {
        StageTrace {
            stage: self.stage_index,
            towers: &self.towers,
            p: self.speedup.iter().collect(),
            report: &self.report,
        }
    }
}
