//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Seeded, so every run checks the same instances.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use serde_json::Value;

use skewlab_core::castle::FinitePointSystem;
use skewlab_core::ergodic::{
    fiber_transitive, gp_invariant, local_group_reach, local_group_voltage,
};
use skewlab_core::perm::{
    conjugacy_class, contains_up_to_conjugacy, partition_group, symmetric_elements, PairPartition,
    Perm, PermGroup,
};
use skewlab_core::speeduprel::decide;
use skewlab_core::symbolic::{Edge, LabeledSystem, Rational, VertexFunction};
use skewlab_core::synth::{
    build_stage, little_push, push_forward, verify_stage, TargetCastleSpec, TargetTower,
};

const SEED: u64 = 0x5eed_0f6a;

struct Outcome {
    passed: bool,
    summary: String,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>) -> Outcome {
        Outcome {
            passed,
            summary: summary.into(),
        }
    }
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skewlab"));
    cmd.current_dir(env!("CARGO_MANIFEST_DIR"));
    cmd
}

fn random_perm(rng: &mut StdRng, degree: usize) -> Perm {
    let mut images: Vec<usize> = (0..degree).collect();
    images.shuffle(rng);
    Perm::from_images(images).unwrap()
}

fn cycles(degree: usize, c: &[&[usize]]) -> Perm {
    Perm::from_cycles(degree, c).unwrap()
}

/// Random irreducible system: a spanning cycle through a shuffled vertex
/// order plus extra arcs, labels drawn by `label`.
fn random_system(
    rng: &mut StdRng,
    degree: usize,
    mut label: impl FnMut(&mut StdRng) -> Perm,
) -> LabeledSystem {
    let vertices = rng.random_range(1..=5);
    let mut order: Vec<usize> = (0..vertices).collect();
    order.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = (0..vertices)
        .map(|i| (order[i], order[(i + 1) % vertices]))
        .collect();
    let target = rng.random_range(vertices..=10.min(vertices * vertices));
    while pairs.len() < target {
        let pair = (rng.random_range(0..vertices), rng.random_range(0..vertices));
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let out_degree = |u: usize| pairs.iter().filter(|p| p.0 == u).count() as i128;
    let edges = pairs
        .iter()
        .map(|&(from, to)| Edge {
            from,
            to,
            prob: Rational::new(1, out_degree(from)),
            label: label(rng),
        })
        .collect();
    let symbols = (0..vertices).map(|v| format!("s{v}")).collect();
    LabeledSystem::new(degree, symbols, edges).unwrap()
}

fn any_system(rng: &mut StdRng) -> LabeledSystem {
    let degree = rng.random_range(1..=4);
    random_system(rng, degree, |r| random_perm(r, degree))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let out = bin()
        .args(["gerber", "--json"])
        .output()
        .expect("spawn skewlab");
    let elapsed = start.elapsed();
    let v: Value = match serde_json::from_slice(&out.stdout) {
        Ok(v) => v,
        Err(e) => return Outcome::new(false, format!("unparseable output: {e}")),
    };
    let a3: Value = serde_json::json!([[1, 2, 3], [2, 3, 1], [3, 1, 2]]);
    let s3: Value = serde_json::json!([
        [1, 2, 3],
        [1, 3, 2],
        [2, 1, 3],
        [2, 3, 1],
        [3, 1, 2],
        [3, 2, 1]
    ]);
    let checks = [
        v["gp1"]["local_group"] == a3,
        v["gp1"]["class_size"] == 1,
        v["gp2"]["local_group"] == s3,
        v["gp2"]["class_size"] == 1,
        v["s2_to_s1"]["relation"] == "yes",
        v["s2_to_s1"]["witness"]["g1"] == s3,
        v["s2_to_s1"]["witness"]["g2"] == a3,
        v["s1_to_s2"]["relation"] == "no",
        out.status.success(),
        elapsed < Duration::from_secs(1),
    ];
    Outcome::new(
        checks.iter().all(|&c| c),
        format!(
            "gp(S1)={{A3}}, gp(S2)={{S3}}, S2->S1 yes with (S3, A3), S1->S2 no; {}/{} checks, {:.3} s",
            checks.iter().filter(|&&c| c).count(),
            checks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(rng: &mut StdRng) -> Outcome {
    let start = Instant::now();
    let cases = 250;
    let mut agree = 0;
    for _ in 0..cases {
        let sys = any_system(rng);
        let ambient = PermGroup::generate(sys.fiber_degree(), &sys.labels()).unwrap();
        let base = rng.random_range(0..sys.vertex_count());
        if local_group_reach(&sys, &ambient, base).unwrap()
            == local_group_voltage(&sys, base).unwrap()
        {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        agree == cases && elapsed < Duration::from_secs(30),
        format!(
            "reach and voltage local groups equal on {agree}/{cases} systems in {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3(rng: &mut StdRng) -> Outcome {
    let cases = 250;
    let mut same = 0;
    for _ in 0..cases {
        let sys = any_system(rng);
        let alpha = VertexFunction::new(
            (0..sys.vertex_count())
                .map(|_| random_perm(rng, sys.fiber_degree()))
                .collect(),
        );
        let twisted = sys.twist(&alpha).unwrap();
        if gp_invariant(&twisted).unwrap().klass == gp_invariant(&sys).unwrap().klass {
            same += 1;
        }
    }
    Outcome::new(
        same == cases,
        format!("gp class unchanged by twisting in {same}/{cases} cases"),
    )
}

fn naive_cocycle(sys: &FinitePointSystem, x: usize, n: u64) -> Perm {
    let mut acc = Perm::identity(sys.degree());
    for i in 0..n {
        acc = &sys.labels()[sys.step(x, i)] * &acc;
    }
    acc
}

fn criterion_4(rng: &mut StdRng) -> Outcome {
    let cases = 1200;
    let mut paths_ok = 0;
    for _ in 0..cases {
        let sys = any_system(rng);
        let len = rng.random_range(1..=16);
        let mut path = vec![rng.random_range(0..sys.vertex_count())];
        while path.len() < len {
            let outs: Vec<usize> = sys
                .support_out(*path.last().unwrap())
                .map(|e| e.to)
                .collect();
            path.push(outs[rng.random_range(0..outs.len())]);
        }
        let k = rng.random_range(0..path.len());
        let whole = sys.word_cocycle(&path).unwrap();
        let split =
            &sys.word_cocycle(&path[k..]).unwrap() * &sys.word_cocycle(&path[..=k]).unwrap();
        if whole == split {
            paths_ok += 1;
        }
    }
    let mut points_ok = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=40);
        let degree = rng.random_range(1..=4);
        let labels = (0..n).map(|_| random_perm(rng, degree)).collect();
        let sys = FinitePointSystem::new(labels).unwrap();
        let x = rng.random_range(0..n);
        let (m, k) = (rng.random_range(0..300u64), rng.random_range(0..300u64));
        let lhs = sys.cocycle_value(x, m + k);
        let rhs = &sys.cocycle_value(sys.step(x, k), m) * &sys.cocycle_value(x, k);
        if lhs == rhs && lhs == naive_cocycle(&sys, x, m + k) {
            points_ok += 1;
        }
    }
    Outcome::new(
        paths_ok == cases && points_ok == cases,
        format!("path splits {paths_ok}/{cases}, point splits (x,m,n) {points_ok}/{cases}"),
    )
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Generator of a cyclic subgroup of `S_5` of the given order (1..=6).
fn cyclic_generator(order: usize) -> Perm {
    match order {
        1 => Perm::identity(5),
        2 => cycles(5, &[&[1, 2]]),
        3 => cycles(5, &[&[1, 2, 3]]),
        4 => cycles(5, &[&[1, 2, 3, 4]]),
        5 => cycles(5, &[&[1, 2, 3, 4, 5]]),
        6 => cycles(5, &[&[1, 2], &[3, 4, 5]]),
        _ => unreachable!(),
    }
}

fn power(g: &Perm, k: usize) -> Perm {
    (0..k).fold(Perm::identity(g.degree()), |acc, _| g * &acc)
}

/// Ergodic cyclic instance: labels are powers of a generator whose exponent
/// sum around the cycle is prime to the order.
fn cyclic_instance(rng: &mut StdRng, min: usize, max: usize) -> (FinitePointSystem, Perm, usize) {
    let order = rng.random_range(1..=6);
    let g = cyclic_generator(order);
    loop {
        let n = rng.random_range(min..=max);
        let exps: Vec<usize> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0..order)
                } else {
                    0
                }
            })
            .collect();
        if gcd(exps.iter().sum::<usize>() % order, order) != 1 {
            continue;
        }
        let sys = FinitePointSystem::new(exps.iter().map(|&k| power(&g, k)).collect()).unwrap();
        assert!(sys.lift_is_ergodic());
        return (sys, g, order);
    }
}

fn disjoint_sets(rng: &mut StdRng, n: usize) -> (Vec<usize>, Vec<usize>) {
    let k = rng.random_range(1..=n / 2);
    let pts = index::sample(rng, n, 2 * k).into_vec();
    (pts[..k].to_vec(), pts[k..].to_vec())
}

fn criterion_5(rng: &mut StdRng) -> Outcome {
    let cases = 120;
    let mut ok = 0;
    let mut floored_ok = 0;
    for _ in 0..cases {
        let (sys, g, order) = cyclic_instance(rng, 4, 32);
        let (a, b) = disjoint_sets(rng, sys.size());
        let exps: Vec<usize> = (0..sys.size())
            .map(|_| rng.random_range(0..order))
            .collect();
        let floors: Vec<u64> = (0..sys.size()).map(|_| rng.random_range(0..50)).collect();
        let target = |x: usize| power(&g, exps[x]);
        let contract = |floor: Option<&dyn Fn(usize) -> u64>| -> bool {
            let Ok(p) = push_forward(&sys, &a, &b, &target, floor) else {
                return false;
            };
            let mut images: Vec<usize> = Vec::new();
            for &x in &a {
                let Some(px) = p.get(x) else { return false };
                if px < 1
                    || floor.is_some_and(|f| px <= f(x))
                    || sys.cocycle_value(x, px) != target(x)
                {
                    return false;
                }
                images.push(sys.step(x, px));
            }
            images.sort();
            let mut expected = b.clone();
            expected.sort();
            p.len() == a.len() && images == expected
        };
        ok += contract(None) as usize;
        floored_ok += contract(Some(&|x| floors[x])) as usize;
    }
    Outcome::new(
        ok == cases && floored_ok == cases,
        format!(
            "bijective, p >= 1, exact targets: {ok}/{cases}; with floors: {floored_ok}/{cases}"
        ),
    )
}

fn criterion_6(rng: &mut StdRng) -> Outcome {
    let cases = 120;
    let mut ok = 0;
    for _ in 0..cases {
        let (sys, g, order) = cyclic_instance(rng, 4, 32);
        let (a, b) = disjoint_sets(rng, sys.size());
        let target = power(&g, rng.random_range(0..order));
        let Ok((good, n)) = little_push(&sys, &a, &b, &target) else {
            continue;
        };
        let hits =
            |x: usize, m: u64| b.contains(&sys.step(x, m)) && naive_cocycle(&sys, x, m) == target;
        let mut exact: Vec<usize> = a.iter().copied().filter(|&x| hits(x, n)).collect();
        exact.sort();
        let mut sorted = good.clone();
        sorted.sort();
        let none_earlier = (1..n).all(|m| a.iter().all(|&x| !hits(x, m)));
        if n >= 1 && !good.is_empty() && sorted == exact && none_earlier {
            ok += 1;
        }
    }
    Outcome::new(
        ok == cases,
        format!("minimal n' confirmed by exhaustive scan in {ok}/{cases} instances"),
    )
}

fn random_spec(
    rng: &mut StdRng,
    sys: &FinitePointSystem,
    g: &Perm,
    order: usize,
) -> TargetCastleSpec {
    let n = sys.size();
    loop {
        let towers: Vec<(usize, usize)> = (0..rng.random_range(1..=3))
            .map(|_| (rng.random_range(1..=6), rng.random_range(1..=3)))
            .collect();
        if towers.iter().map(|(h, c)| h * c).sum::<usize>() > n {
            continue;
        }
        return TargetCastleSpec {
            towers: towers
                .into_iter()
                .map(|(h, c)| TargetTower {
                    height: h,
                    width: Rational::new(c as i128, n as i128),
                    level_labels: (1..h)
                        .map(|_| power(g, rng.random_range(0..order)))
                        .collect(),
                })
                .collect(),
        };
    }
}

/// One tower of width `1/N` stacking every column of `spec1`, each followed
/// by a spacer step with a random label.
fn stacking_spec(
    rng: &mut StdRng,
    spec1: &TargetCastleSpec,
    n: usize,
    g: &Perm,
    order: usize,
) -> TargetCastleSpec {
    let mut labels = Vec::new();
    for t in &spec1.towers {
        let columns = (t.width * Rational::from_integer(n as i128)).to_integer();
        for _ in 0..columns {
            labels.extend(t.level_labels.iter().cloned());
            labels.push(power(g, rng.random_range(0..order)));
        }
    }
    TargetCastleSpec {
        towers: vec![TargetTower {
            height: labels.len() + 1,
            width: Rational::new(1, n as i128),
            level_labels: labels,
        }],
    }
}

fn criterion_7(rng: &mut StdRng) -> Outcome {
    let cases = 60;
    let mut single_ok = 0;
    let mut chains = 0;
    let mut chains_ok = 0;
    for _ in 0..cases {
        let (sys, g, order) = cyclic_instance(rng, 8, 64);
        let spec1 = random_spec(rng, &sys, &g, order);
        let Ok(st1) = build_stage(&sys, &spec1, None) else {
            continue;
        };
        if verify_stage(&sys, &spec1, &st1).passed {
            single_ok += 1;
        }
        if st1.support().len() < sys.size() {
            chains += 1;
            let spec2 = stacking_spec(rng, &spec1, sys.size(), &g, order);
            if let Ok(st2) = build_stage(&sys, &spec2, Some(&st1)) {
                let extends = st1
                    .speedup
                    .iter()
                    .all(|(x, p)| st2.speedup.get(x) == Some(p));
                if verify_stage(&sys, &spec2, &st2).passed && extends {
                    chains_ok += 1;
                }
            }
        }
    }
    Outcome::new(
        single_ok == cases && chains_ok == chains && chains >= 20,
        format!("round trips pass {single_ok}/{cases}; 2-stage chains extend exactly {chains_ok}/{chains}"),
    )
}

fn transitive_groups() -> Vec<PermGroup> {
    let gen = |d: usize, gens: &[Perm]| PermGroup::generate(d, gens).unwrap();
    vec![
        PermGroup::symmetric(2),
        gen(3, &[cycles(3, &[&[1, 2, 3]])]),
        PermGroup::symmetric(3),
        gen(4, &[cycles(4, &[&[1, 2, 3, 4]])]),
        gen(
            4,
            &[
                cycles(4, &[&[1, 2], &[3, 4]]),
                cycles(4, &[&[1, 3], &[2, 4]]),
            ],
        ),
        gen(4, &[cycles(4, &[&[1, 2, 3, 4]]), cycles(4, &[&[1, 3]])]),
        gen(
            4,
            &[cycles(4, &[&[1, 2, 3]]), cycles(4, &[&[1, 2], &[3, 4]])],
        ),
        PermGroup::symmetric(4),
    ]
}

fn criterion_8(rng: &mut StdRng) -> Outcome {
    let groups = transitive_groups();
    let mut corpus: Vec<LabeledSystem> = Vec::new();
    while corpus.len() < 32 {
        let g = &groups[corpus.len() % groups.len()];
        let xi = random_perm(rng, g.degree());
        let g = g.conjugate_by(&xi);
        let sys = random_system(rng, g.degree(), |r| {
            g.elements()[r.random_range(0..g.order())].clone()
        });
        if fiber_transitive(&sys) {
            corpus.push(sys);
        }
    }
    let classes: Vec<_> = corpus
        .iter()
        .map(|s| gp_invariant(s).unwrap().klass)
        .collect();
    let distinct = {
        let mut c: Vec<_> = classes.iter().map(|k| k.members().to_vec()).collect();
        c.sort();
        c.dedup();
        c.len()
    };
    let m = corpus.len();
    let mut rel = vec![vec![None; m]; m];
    for i in 0..m {
        for j in 0..m {
            if corpus[i].fiber_degree() == corpus[j].fiber_degree() {
                rel[i][j] = Some(decide(&corpus[i], &corpus[j]).unwrap().answer);
            }
        }
    }
    let reflexive = (0..m).all(|i| rel[i][i] == Some(true));
    let mut transitive = true;
    let mut mutual = true;
    for i in 0..m {
        for j in 0..m {
            let Some(ij) = rel[i][j] else { continue };
            mutual &= (ij && rel[j][i] == Some(true)) == (classes[i] == classes[j]);
            for (jk, ik) in rel[j].iter().zip(&rel[i]) {
                if ij && *jk == Some(true) {
                    transitive &= *ik == Some(true);
                }
            }
        }
    }
    Outcome::new(
        reflexive && transitive && mutual,
        format!(
            "{m} systems, {distinct} gp classes: reflexive {reflexive}, transitive {transitive}, mutual iff equal class {mutual}"
        ),
    )
}

fn criterion_9(rng: &mut StdRng) -> Outcome {
    let p1 = PairPartition::new(6, &[[1, 2], [3, 4], [5, 6]]).unwrap();
    let p2 = PairPartition::new(6, &[[2, 3], [4, 5], [6, 1]]).unwrap();
    let g1 = partition_group(&p1);
    let g2 = partition_group(&p2);
    let order_ok = g1.order() == 48;
    let transitive = g1.is_transitive();
    let conj_ok = (0..50).all(|_| {
        let xi = random_perm(rng, 6);
        g1.conjugate_by(&xi) == partition_group(&p1.image(&xi).unwrap())
    });
    let disjoint = p1.shares_no_block(&p2);
    let brute = symmetric_elements(6).find(|xi| g2.conjugate_by(xi).is_subgroup_of(&g1));
    let via_classes =
        contains_up_to_conjugacy(&conjugacy_class(&g1), &conjugacy_class(&g2)).unwrap();
    let agree = brute.is_some() == via_classes.is_some();
    let finding = match &brute {
        Some(xi) => format!("G_P2 is conjugate into G_P1 (by {xi})"),
        None => "G_P2 is not conjugate into G_P1".to_string(),
    };
    Outcome::new(
        order_ok && transitive && conj_ok && disjoint && agree,
        format!(
            "|G_P| = {}, transitive {transitive}, conjugation law on 50 xi {conj_ok}; {{12,34,56}} vs {{23,45,61}}: {finding}",
            g1.order()
        ),
    )
}

fn criterion_10() -> Outcome {
    let runs: [&[&str]; 8] = [
        &["analyze", "data/gerber-s1.json"],
        &["analyze", "data/gerber-s2.json", "--json"],
        &["compare", "data/gerber-s2.json", "data/gerber-s1.json"],
        &[
            "compare",
            "data/gerber-s1.json",
            "data/gerber-s2.json",
            "--json",
        ],
        &[
            "synth",
            "data/demo-source.json",
            "data/demo-spec.json",
            "--stages",
            "1",
        ],
        &[
            "synth",
            "data/demo-source.json",
            "data/demo-spec.json",
            "--stages",
            "2",
        ],
        &["gerber"],
        &["gerber", "--json"],
    ];
    let mut same = 0;
    for args in runs {
        let a = bin().args(args).output().expect("spawn skewlab");
        let b = bin().args(args).output().expect("spawn skewlab");
        if a.status.success()
            && a.stdout == b.stdout
            && a.status == b.status
            && !a.stdout.is_empty()
        {
            same += 1;
        }
    }
    Outcome::new(
        same == runs.len(),
        format!(
            "byte-identical repeat output for {same}/{} invocations",
            runs.len()
        ),
    )
}

type Criterion = Box<dyn FnOnce(&mut StdRng) -> Outcome>;

fn main() -> ExitCode {
    let mut rng = StdRng::seed_from_u64(SEED);
    let criteria: Vec<(&str, Criterion)> = vec![
        ("gerber reproduction", Box::new(|_| criterion_1())),
        ("gp oracle equivalence", Box::new(criterion_2)),
        ("twist invariance", Box::new(criterion_3)),
        ("cocycle algebra", Box::new(criterion_4)),
        ("push_forward contract", Box::new(criterion_5)),
        ("little_push minimality", Box::new(criterion_6)),
        ("stage synthesis round trip", Box::new(criterion_7)),
        ("speedup order structure", Box::new(criterion_8)),
        ("finite window partitions", Box::new(criterion_9)),
        ("determinism", Box::new(|_| criterion_10())),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let outcome = run(&mut rng);
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, outcome.summary);
        failures += usize::from(!outcome.passed);
    }
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
