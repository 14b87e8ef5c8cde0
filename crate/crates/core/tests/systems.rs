use proptest::prelude::*;

use skewlab_core::ergodic::{
    components, fiber_transitive, gp_invariant, is_g_ergodic, lift, local_group_reach,
    local_group_voltage,
};
use skewlab_core::perm::{conjugacy_class, PermGroup};
use skewlab_core::speeduprel::{decide, verify_witness};
use skewlab_core::symbolic::{LabeledSystem, VertexFunction};

mod common;
use common::{perm, system, system_of_degree};

fn system_with_alpha() -> impl Strategy<Value = (LabeledSystem, VertexFunction)> {
    system().prop_flat_map(|sys| {
        let alpha = prop::collection::vec(perm(sys.fiber_degree()), sys.vertex_count());
        (Just(sys), alpha.prop_map(VertexFunction::new))
    })
}

fn ambient(sys: &LabeledSystem) -> PermGroup {
    PermGroup::generate(sys.fiber_degree(), &sys.labels()).unwrap()
}

fn ergodic_system() -> impl Strategy<Value = LabeledSystem> {
    system().prop_filter("ergodic n-point extension", fiber_transitive)
}

fn ergodic_triple() -> impl Strategy<Value = (LabeledSystem, LabeledSystem, LabeledSystem)> {
    (1usize..=4).prop_flat_map(|d| {
        let s = system_of_degree(d)
            .prop_filter("ergodic n-point extension", fiber_transitive)
            .boxed();
        (s.clone(), s.clone(), s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reach_and_voltage_agree(sys in system()) {
        let g = ambient(&sys);
        for v in 0..sys.vertex_count() {
            prop_assert_eq!(local_group_reach(&sys, &g, v).unwrap(), local_group_voltage(&sys, v).unwrap());
        }
    }

    #[test]
    fn local_groups_at_other_vertices_are_conjugate(sys in system()) {
        let g = ambient(&sys);
        let h0 = local_group_reach(&sys, &g, 0).unwrap();
        let class = conjugacy_class(&h0);
        for v in 1..sys.vertex_count() {
            prop_assert!(class.contains(&local_group_reach(&sys, &g, v).unwrap()));
        }
    }

    #[test]
    fn components_are_cosets(sys in system()) {
        let gp = gp_invariant(&sys).unwrap();
        let lifted = lift(&sys, &gp.ambient).unwrap();
        let comps = components(&lifted);
        prop_assert_eq!(comps.len(), gp.components.len());
        prop_assert_eq!(gp.ambient.order(), gp.local_group.order() * comps.len());
        for c in &gp.components {
            prop_assert_eq!(c.coset.len(), gp.local_group.order());
        }
        prop_assert!(is_g_ergodic(&sys, &gp.ambient).unwrap() == (comps.len() == 1));
    }

    #[test]
    fn fiber_ergodicity_is_transitivity(sys in system()) {
        let gp = gp_invariant(&sys).unwrap();
        prop_assert_eq!(fiber_transitive(&sys), gp.local_group.is_transitive());
    }

    #[test]
    fn twist_preserves_gp((sys, alpha) in system_with_alpha()) {
        let twisted = sys.twist(&alpha).unwrap();
        prop_assert_eq!(gp_invariant(&twisted).unwrap().klass, gp_invariant(&sys).unwrap().klass);
        prop_assert_eq!(fiber_transitive(&twisted), fiber_transitive(&sys));
        prop_assert_eq!(twisted.twist(&alpha.inverse()).unwrap(), sys);
    }

    #[test]
    fn word_cocycle_splits(sys in system(), walk in prop::collection::vec(0usize..10, 1..12), cut in 0usize..12) {
        // random walk along support edges
        let mut path = vec![0];
        for step in walk {
            let here = *path.last().unwrap();
            let outs: Vec<usize> = sys.support_out(here).map(|e| e.to).collect();
            path.push(outs[step % outs.len()]);
        }
        let k = cut % path.len();
        let whole = sys.word_cocycle(&path).unwrap();
        let head = sys.word_cocycle(&path[..=k]).unwrap();
        let tail = sys.word_cocycle(&path[k..]).unwrap();
        prop_assert_eq!(whole, &tail * &head);
    }

    #[test]
    fn decide_reflexive(sys in ergodic_system()) {
        let v = decide(&sys, &sys).unwrap();
        prop_assert!(v.answer && v.symmetric);
        prop_assert_eq!(verify_witness(&v), Ok(()));
    }

    #[test]
    fn decide_transitive_and_antisymmetric((a, b, c) in ergodic_triple()) {
        let ab = decide(&a, &b).unwrap();
        let bc = decide(&b, &c).unwrap();
        let ac = decide(&a, &c).unwrap();
        if ab.answer && bc.answer {
            prop_assert!(ac.answer);
        }
        prop_assert_eq!(ab.answer && ab.symmetric, ab.gp1.klass == ab.gp2.klass);
        for v in [&ab, &bc, &ac] {
            if v.answer {
                prop_assert_eq!(verify_witness(v), Ok(()));
            }
        }
    }
}
