use std::io::Write;
use std::time::{Duration, Instant};

use bellcheck_core::checks::{
    ch_value, evaluate_quintuple, find_common_cause, singlet_ch_fixture, verify_local_causality_stochastic,
    verify_prop3, LocalCausalityOptions, PastKind, SearchMode,
};
use bellcheck_core::dynamics::{
    extend_backward, extend_backward_surface, extend_forward, forward_cell, trapezoid_layers, SpacelikeCoupled,
    TransitionTable,
};
use bellcheck_core::geometry::{causal_shadow, double_complement, join};
use bellcheck_core::qnet::{
    embed_qubit, identity, kron, pauli_x, pauli_z, verify_prop1, CMatrix, DensityState, FiniteNet, PartitionOfUnit,
    Projection, Subalgebra,
};
use bellcheck_core::{CauchySegment, ClassicalState, Error, MinimalCone, Region, Spin, Translation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let tag = if ok { "PASS" } else { "FAIL" };
    writeln!(out, "acceptance {n} [{tag}] {name}: {detail}").unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

fn v(t2: i32, i2: i32) -> MinimalCone {
    MinimalCone::new(t2, i2).unwrap()
}

fn reg(cs: &[(i32, i32)]) -> Region {
    cs.iter().map(|&(t, i)| v(t, i)).collect()
}

fn random_state<R: Rng>(domain: Region, rng: &mut R) -> ClassicalState {
    let w: Vec<f64> = (0..1usize << domain.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    ClassicalState::new(domain, w.iter().map(|x| x / s).collect()).unwrap()
}

#[test]
fn criterion_1_random_tables_screen_off() {
    let seg = CauchySegment::with_width(0, -3, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let opts = LocalCausalityOptions { collect_rows: false, ..Default::default() };
    let (mut worst, mut cases, mut failures) = (0.0f64, 0u64, 0usize);
    for k in 0..100 {
        let table = TransitionTable::random(&mut rng);
        let init = if k % 2 == 0 { ClassicalState::uniform(seg.cones()).unwrap() } else { random_state(seg.cones(), &mut rng) };
        let ext = extend_forward(&init, &seg, &table, 2).unwrap();
        let rep = verify_local_causality_stochastic(&ext.state, &opts).unwrap();
        worst = worst.max(rep.max_defect);
        cases += rep.cases;
        failures += rep.failures.len();
    }
    let elapsed = start.elapsed();
    let ok = failures == 0 && worst <= 1e-9 && elapsed < Duration::from_secs(300);
    verdict(1, "screening-off for 100 random tables", ok, &format!("{cases} cases, max defect {worst:.3e}, {elapsed:.1?}"));
}

/// Path-sum oracle: the weight of a full configuration is the initial weight
/// of its segment part times the transition probability of every grown cell.
fn path_sum(init: &ClassicalState, seg: &CauchySegment, table: &TransitionTable, domain: &Region, grown: &[MinimalCone]) -> Vec<f64> {
    let spin = |x: u64, c: MinimalCone| Spin::from_bit(x >> domain.index_of(c).unwrap() & 1 == 1);
    let seg_cones: Vec<MinimalCone> = seg.cones().iter().collect();
    (0..1u64 << domain.len())
        .map(|x| {
            let seg_bits = seg_cones.iter().enumerate().fold(0usize, |acc, (k, c)| acc | usize::from(spin(x, *c).is_minus()) << k);
            let mut p = init.weights()[seg_bits];
            for &cell in grown {
                let [l, r, b] = cell.shadow_cells();
                let plus = table.get(spin(x, l), spin(x, r), spin(x, b));
                p *= if spin(x, cell) == Spin::Plus { plus } else { 1.0 - plus };
            }
            p
        })
        .collect()
}

#[test]
fn criterion_2_forward_extension_matches_path_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut checked, mut largest) = (0.0f64, 0, 0);
    for width in 3..=8 {
        for layers in 1..=3 {
            let seg = CauchySegment::with_width(0, -(width as i32) / 2, width).unwrap();
            let grown: Vec<MinimalCone> = trapezoid_layers(&seg, layers).concat();
            let mut domain = seg.cones();
            domain.extend(grown.iter().copied());
            if domain.len() > 12 || trapezoid_layers(&seg, layers).iter().any(Vec::is_empty) {
                continue;
            }
            for _ in 0..5 {
                let table = TransitionTable::random(&mut rng);
                let init = random_state(seg.cones(), &mut rng);
                let ext = extend_forward(&init, &seg, &table, layers).unwrap();
                assert_eq!(*ext.state.domain(), domain);
                let oracle = path_sum(&init, &seg, &table, &domain, &grown);
                let d = ext.state.weights().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(d);
                checked += 1;
                largest = largest.max(domain.len());
            }
        }
    }
    let ok = worst <= 1e-12 && largest == 12;
    verdict(2, "forward extension vs path sum", ok, &format!("{checked} runs up to 2^{largest} configurations, max diff {worst:.3e}"));
}

#[test]
fn criterion_3_spacelike_coupling_is_detected() {
    let seg = CauchySegment::with_width(0, -3, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rule = SpacelikeCoupled { table: TransitionTable::random(&mut rng), coupling: 0.6 };
    let init = ClassicalState::uniform(seg.cones()).unwrap();
    let state = extend_forward(&init, &seg, &rule, 2).unwrap().state;
    let rep = verify_local_causality_stochastic(&state, &LocalCausalityOptions::default()).unwrap();
    let reproduced = rep
        .failures
        .iter()
        .all(|f| evaluate_quintuple(&state, &f.quintuple).map(|v| v == f.values).unwrap_or(false));
    let ok = !rep.failures.is_empty() && reproduced && rep.max_defect > 1e-9;
    verdict(
        3,
        "acausal fixture fails",
        ok,
        &format!("{} failing quintuples, max defect {:.3e}, all reproduced: {reproduced}", rep.failures.len(), rep.max_defect),
    );
}

#[test]
fn criterion_4_backward_extension() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut iff = true;
    for k in 0..10_000 {
        let (pp, pm) = (rng.random::<f64>(), if k % 10 == 0 { f64::NAN } else { rng.random::<f64>() });
        let pm = if pm.is_nan() { pp } else { pm };
        let (ep, em) = (rng.random::<f64>(), rng.random::<f64>());
        let (lp, lm) = forward_cell(ep, em, pp, pm);
        match extend_backward(lp, lm, pp, pm) {
            Ok((bp, bm)) => {
                iff &= pp != pm;
                worst = worst.max((bp - ep).abs().max((bm - em).abs()) / (1.0 + 1.0 / (pp - pm).abs()));
            }
            Err(Error::NotInvertible(_)) => iff &= pp == pm,
            Err(_) => iff = false,
        }
    }
    // whole surface round trip
    let earlier_seg = CauchySegment::new(-1, -2, 2).unwrap();
    let later_seg = CauchySegment::new(0, -2, 2).unwrap();
    let mut surface_worst = 0.0f64;
    for _ in 0..50 {
        let table = loop {
            let t = TransitionTable::random(&mut rng);
            let e = t.entries();
            if (0..4).all(|k| (e[2 * k] - e[2 * k + 1]).abs() > 0.05) {
                break t;
            }
        };
        let earlier = random_state(earlier_seg.cones(), &mut rng);
        let ext = extend_forward(&earlier, &earlier_seg, &table, 1).unwrap();
        let later = ext.state.marginal(&later_seg.cones()).unwrap();
        let (seg, back) = extend_backward_surface(&later, &later_seg, &table).unwrap();
        assert_eq!(seg, earlier_seg);
        surface_worst = surface_worst.max(back.max_abs_diff(&earlier).unwrap());
    }
    let ok = iff && worst <= 1e-12 && surface_worst <= 1e-9;
    verdict(
        4,
        "backward extension round trip",
        ok,
        &format!("cell error {worst:.3e}, surface error {surface_worst:.3e}, NotInvertible iff p+ = p-: {iff}"),
    );
}

struct NetFixture {
    name: &'static str,
    net: FiniteNet,
    va: Region,
    vb: Region,
    vc: Region,
}

fn fixtures() -> Vec<NetFixture> {
    let va = reg(&[(2, 0)]);
    let vc = reg(&[(1, -1), (1, 1), (0, 0)]);
    let vb = reg(&[(2, 6)]);
    let local = |k: usize, n: usize| -> Vec<CMatrix> { vec![embed_qubit(&pauli_x(), k, n), embed_qubit(&pauli_z(), k, n)] };
    let two = FiniteNet::new(4, vec![(va.clone(), local(0, 2)), (vc.clone(), local(0, 2)), (vb.clone(), local(1, 2))]).unwrap();
    let three = FiniteNet::new(
        8,
        vec![
            (va.clone(), local(0, 3)),
            (vc.clone(), [local(0, 3), local(2, 3)].concat()),
            (vb.clone(), local(1, 3)),
        ],
    )
    .unwrap();
    vec![
        NetFixture { name: "two qubits", net: two, va: va.clone(), vb: vb.clone(), vc: vc.clone() },
        NetFixture { name: "three qubits", net: three, va, vb, vc },
    ]
}

fn nontrivial_projection(alg: &Subalgebra, rng: &mut ChaCha8Rng) -> CMatrix {
    loop {
        let p = alg.random_projection(rng);
        let rank = p.trace().re;
        if rank > 0.5 && rank < p.nrows() as f64 - 0.5 {
            return p;
        }
    }
}

#[test]
fn criterion_5_quantum_screening() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lines = Vec::new();
    let mut ok = true;
    for f in fixtures() {
        let (mut worst, mut all_pre) = (0.0f64, true);
        for _ in 0..1000 {
            let phi = DensityState::random(f.net.dim(), &mut rng);
            let a = Projection::new(nontrivial_projection(f.net.algebra(&f.va).unwrap(), &mut rng), f.va.clone()).unwrap();
            let b = Projection::new(nontrivial_projection(f.net.algebra(&f.vb).unwrap(), &mut rng), f.vb.clone()).unwrap();
            let rep = verify_prop1(&f.net, &phi, &a, &b, &f.vc, &mut rng).unwrap();
            all_pre &= rep.preconditions();
            worst = worst.max(rep.max_defect);
        }
        ok &= all_pre && worst <= 1e-9;
        lines.push(format!("{}: max defect {worst:.3e}, preconditions {all_pre}", f.name));
    }
    verdict(5, "screening under minimal projections", ok, &lines.join("; "));
}

#[test]
fn criterion_6_ch_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut held, mut commuting, mut violated_original) = (0, 0, 0);
    let fixtures = fixtures();
    for k in 0..1000 {
        let f = &fixtures[k % 2];
        let d = f.net.dim();
        let phi = DensityState::random(d, &mut rng);
        let alg_a = f.net.algebra(&f.va).unwrap();
        let alg_b = f.net.algebra(&f.vb).unwrap();
        let alg_c = f.net.algebra(&f.vc).unwrap();
        let members = alg_c.random_minimal_projections(&mut rng);
        let (a1, a2) = if k % 4 < 2 {
            // sums of partition members commute with the partition
            let pick = |rng: &mut ChaCha8Rng| {
                let p = members.iter().filter(|_| rng.random::<bool>()).fold(CMatrix::zeros(d, d), |acc, m| acc + m);
                if alg_a.contains(&p) { p } else { nontrivial_projection(alg_a, rng) }
            };
            (pick(&mut rng), pick(&mut rng))
        } else {
            (nontrivial_projection(alg_a, &mut rng), nontrivial_projection(alg_a, &mut rng))
        };
        let (b1, b2) = (nontrivial_projection(alg_b, &mut rng), nontrivial_projection(alg_b, &mut rng));
        let part = PartitionOfUnit::new(members, f.vc.clone()).unwrap();
        let rep = verify_prop3(&phi, &a1, &a2, &b1, &b2, &part).unwrap();
        held += usize::from(rep.holds());
        commuting += usize::from(rep.fully_commuting());
        violated_original += usize::from(!rep.original_within);
    }
    let (phi, [a1, a2, b1, b2]) = singlet_ch_fixture();
    let singlet = ch_value(&phi, &a1, &a2, &b1, &b2);
    let ok = held == 1000 && commuting > 0 && (singlet - 0.2071).abs() <= 1e-3;
    verdict(
        6,
        "CH bound after the partition",
        ok,
        &format!("{held}/1000 hold ({commuting} commuting, {violated_original} original violations), singlet CH {singlet:.4}"),
    );
}

#[test]
fn criterion_7_maximal_partitions_screen() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut trials, mut found, mut worst, mut uncorrelated) = (0, 0, 0.0f64, 0);
    for f in fixtures().iter().cycle() {
        if trials == 1000 {
            break;
        }
        let phi = DensityState::random(f.net.dim(), &mut rng);
        let a = Projection::new(nontrivial_projection(f.net.algebra(&f.va).unwrap(), &mut rng), f.va.clone()).unwrap();
        let b = Projection::new(nontrivial_projection(f.net.algebra(&f.vb).unwrap(), &mut rng), f.vb.clone()).unwrap();
        match find_common_cause(&f.net, &phi, &a, &b, PastKind::Weak, SearchMode::MaximalAtomic, &mut rng) {
            Ok(sols) => {
                trials += 1;
                // every region of the weak past holds A or B in its algebra
                if [&f.va, &f.vb, &f.vc].iter().all(|r| sols.iter().any(|s| s.region == **r)) {
                    found += 1;
                }
                worst = sols.iter().map(|s| s.max_defect).fold(worst, f64::max);
            }
            Err(Error::NotCorrelated(_)) => uncorrelated += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let ok = trials == 1000 && found == trials && worst <= 1e-9;
    verdict(
        7,
        "maximal atomic partitions screen off",
        ok,
        &format!("{found}/{trials} trials found, {uncorrelated} uncorrelated draws, max defect {worst:.3e}"),
    );
}

#[test]
fn criterion_8_lattice_diamonds() {
    let lim = 10;
    let cones: Vec<MinimalCone> = (-lim..=lim)
        .flat_map(|t2| (-lim..=lim).filter_map(move |i2| MinimalCone::new(t2, i2).ok()))
        .collect();
    // continuum check: the point (t, i) lies in the closed diamond above a and below b
    let inside = |a: MinimalCone, b: MinimalCone, x: MinimalCone| {
        let below = |p: MinimalCone, q: MinimalCone| q.time() - p.time() >= (q.space() - p.space()).abs() - 1e-12;
        below(a, x) && below(x, b)
    };
    let mut mismatches = 0;
    let mut diamonds = 0;
    for &a in &cones {
        for &b in cones.iter().filter(|b| {
            let dt = b.time() - a.time();
            dt >= (b.space() - a.space()).abs()
        }) {
            diamonds += 1;
            let d = join(a, b).into_region();
            mismatches += cones.iter().filter(|&&x| d.contains(x) != inside(a, b, x)).count();
            if diamonds % 37 == 0 && double_complement(&d) != d {
                mismatches += 1;
            }
        }
    }
    let seg = CauchySegment::with_width(0, -3, 7).unwrap();
    let shadow = causal_shadow(&reg(&[(2, 0)]), &seg).unwrap();
    let ok = mismatches == 0 && shadow == reg(&[(1, -1), (1, 1), (0, 0)]);
    verdict(8, "lattice diamonds vs continuum", ok, &format!("{diamonds} diamonds, {mismatches} mismatches, shadow of V(2,0) = {shadow}"));
}

#[test]
fn criterion_9_net_axioms() {
    let sites = reg(&[(0, -2), (0, 0), (0, 2), (1, -1), (1, 1), (2, 0)]);
    let ising = FiniteNet::ising_double_cones(&sites).unwrap();
    let ising_ok = ising.check_isotony()
        && ising.check_microcausality()
        && ising.check_intersection_property()
        && ising.check_covariance(Translation::half()).unwrap()
        && ising.check_covariance(Translation::new(0, 1, false)).unwrap();
    let one = identity(2);
    let va = reg(&[(0, 0)]);
    let vb = reg(&[(0, 4)]);
    let two = FiniteNet::new(
        4,
        vec![(va, vec![kron(&pauli_x(), &one), kron(&pauli_z(), &one)]), (vb, vec![kron(&one, &pauli_x()), kron(&one, &pauli_z())])],
    )
    .unwrap();
    let haag = two.check_haag_duality().unwrap() && two.check_microcausality();
    let ok = ising_ok && haag;
    verdict(9, "net axioms", ok, &format!("ising net axioms {ising_ok}, two-qubit Haag duality {haag}"));
}
