#![allow(dead_code)]

use proptest::prelude::*;

use skewlab_core::castle::FinitePointSystem;
use skewlab_core::perm::Perm;
use skewlab_core::symbolic::{Edge, LabeledSystem, Rational};

pub fn perm(degree: usize) -> impl Strategy<Value = Perm> {
    Just((0..degree).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|images| Perm::from_images(images).unwrap())
}

/// Spanning cycle plus extra arcs, at most 10 arcs, uniform probabilities.
pub fn build_system(
    vertices: usize,
    degree: usize,
    extra: &[(usize, usize)],
    labels: &[Perm],
) -> LabeledSystem {
    let mut pairs: Vec<(usize, usize)> = (0..vertices).map(|v| (v, (v + 1) % vertices)).collect();
    for &(u, v) in extra {
        if pairs.len() == 10 {
            break;
        }
        if !pairs.contains(&(u, v)) {
            pairs.push((u, v));
        }
    }
    let out_degree = |u: usize| pairs.iter().filter(|p| p.0 == u).count() as i128;
    let edges = pairs
        .iter()
        .zip(labels.iter().cycle())
        .map(|(&(from, to), label)| Edge {
            from,
            to,
            prob: Rational::new(1, out_degree(from)),
            label: label.clone(),
        })
        .collect();
    let symbols = (0..vertices).map(|v| format!("v{v}")).collect();
    LabeledSystem::new(degree, symbols, edges).unwrap()
}

pub fn system() -> impl Strategy<Value = LabeledSystem> {
    (1usize..=4).prop_flat_map(system_of_degree)
}

pub fn system_of_degree(degree: usize) -> BoxedStrategy<LabeledSystem> {
    (1usize..=5)
        .prop_flat_map(move |vertices| {
            (
                prop::collection::vec((0..vertices, 0..vertices), 0..=10),
                prop::collection::vec(perm(degree), 10),
            )
                .prop_map(move |(extra, labels)| build_system(vertices, degree, &extra, &labels))
        })
        .boxed()
}

/// Cyclic point system of size `n`: `gen` at the points in `marks`,
/// identity elsewhere.
pub fn cyclic_point_system(n: usize, generator: &Perm, marks: &[usize]) -> FinitePointSystem {
    let id = Perm::identity(generator.degree());
    let labels = (0..n)
        .map(|x| {
            if marks.contains(&x) {
                generator.clone()
            } else {
                id.clone()
            }
        })
        .collect();
    FinitePointSystem::new(labels).unwrap()
}
