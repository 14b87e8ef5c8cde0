//! Deciding whether one ergodic `n`-point extension has a relative speedup
//! that is relatively isomorphic to another. The answer is yes exactly when
//! some member of the second system's gp class sits inside a member of the
//! first system's class.

use serde::Serialize;
use thiserror::Error;

use crate::ergodic::{self, ErgodicError, GpReport, GpResult};
use crate::perm::{contains_up_to_conjugacy, PermGroup};
use crate::symbolic::LabeledSystem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("fiber degrees differ: {0} vs {1}")]
    FiberDegree(usize, usize),
    #[error("system {0}: the n-point extension is not ergodic")]
    NotErgodic(usize),
    #[error(transparent)]
    Ergodic(#[from] ErgodicError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub g1: PermGroup,
    pub g2: PermGroup,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeedupVerdict {
    pub answer: bool,
    pub witness: Option<Witness>,
    pub gp1: GpResult,
    pub gp2: GpResult,
    /// The relation also holds with the systems swapped.
    pub symmetric: bool,
}

/// Decides `U1 ⇝ U2`. Both extensions must be ergodic; that hypothesis is
/// checked, not assumed.
pub fn decide(sys1: &LabeledSystem, sys2: &LabeledSystem) -> Result<SpeedupVerdict, RelationError> {
    if sys1.fiber_degree() != sys2.fiber_degree() {
        return Err(RelationError::FiberDegree(
            sys1.fiber_degree(),
            sys2.fiber_degree(),
        ));
    }
    for (k, sys) in [(1, sys1), (2, sys2)] {
        if !ergodic::fiber_transitive(sys) {
            return Err(RelationError::NotErgodic(k));
        }
    }
    let gp1 = ergodic::gp_invariant(sys1)?;
    let gp2 = ergodic::gp_invariant(sys2)?;
    let forward = contains_up_to_conjugacy(&gp1.klass, &gp2.klass).map_err(ErgodicError::from)?;
    let backward = contains_up_to_conjugacy(&gp2.klass, &gp1.klass).map_err(ErgodicError::from)?;
    Ok(SpeedupVerdict {
        answer: forward.is_some(),
        witness: forward.map(|(g1, g2)| Witness { g1, g2 }),
        symmetric: backward.is_some(),
        gp1,
        gp2,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessFailure {
    #[error("verdict is \"no\" but carries a witness, or \"yes\" without one")]
    AnswerMismatch,
    #[error("G1 is not a member of gp1")]
    G1NotInClass,
    #[error("G2 is not a member of gp2")]
    G2NotInClass,
    #[error("G2 is not contained in G1")]
    NotContained,
}

/// Re-checks a yes-verdict's certificate from scratch.
pub fn verify_witness(v: &SpeedupVerdict) -> Result<(), WitnessFailure> {
    let w = match (&v.witness, v.answer) {
        (Some(w), true) => w,
        _ => return Err(WitnessFailure::AnswerMismatch),
    };
    if !v.gp1.klass.contains(&w.g1) {
        return Err(WitnessFailure::G1NotInClass);
    }
    if !v.gp2.klass.contains(&w.g2) {
        return Err(WitnessFailure::G2NotInClass);
    }
    if !w.g2.elements().iter().all(|g| w.g1.contains(g)) {
        return Err(WitnessFailure::NotContained);
    }
    Ok(())
}

/// Verdict JSON as printed by `skewlab compare`.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub relation: &'static str,
    pub witness: Option<Witness>,
    pub symmetric: bool,
    pub gp1: GpReport,
    pub gp2: GpReport,
}

impl VerdictReport {
    pub fn new(sys1: &LabeledSystem, sys2: &LabeledSystem, v: &SpeedupVerdict) -> VerdictReport {
        VerdictReport {
            relation: if v.answer { "yes" } else { "no" },
            witness: v.witness.clone(),
            symmetric: v.symmetric,
            gp1: GpReport::new(sys1, &v.gp1),
            gp2: GpReport::new(sys2, &v.gp2),
        }
    }
}
