//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Exact-inequality criteria tolerate zero violations; measured
//! quantities are reported, never asserted against unspecified constants.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use sl2lab::borel::{attac_unipotents, Factorizer, TrackedSet};
use sl2lab::cayley::{
    bfs_diameter, free_word_check, girth, mixing_time, offdiag_generators, random_pairs,
    short_loop_threshold, spectral_lambda2_dense, spectral_lambda2_power, CayleyContext,
    DEFAULT_BFS_CAP, DEFAULT_WALK_CAP,
};
use sl2lab::growth::{
    crud_filter, growth_certificate, size_from_traces, trace_growth, tron_find, GrowthParams,
};
use sl2lab::gset::{
    ball, borel_subgroup, pathological_fixture, product_set, random_generating_set,
    random_subset, ruzsa_cover, BallTower, FixtureKind, GroupSet,
    DEFAULT_CLOSURE_CAP,
};
use sl2lab::seed::trial_rng;
use sl2lab::sl2::SL2Ctx;
use sl2lab::zpadd::{
    add_sets, convolve, dilate, fourier, mul_ball, sorge_find_xi, sub_sets, w_map, DensityFn,
    FqSet, ZpSet,
};

fn ctx(p: u64) -> SL2Ctx {
    SL2Ctx::new(p).unwrap()
}

fn knop(ctx: SL2Ctx) -> GroupSet {
    GroupSet::from_elems(
        ctx,
        &[
            ctx.new_elem(1, 1, 0, 1).unwrap(),
            ctx.new_elem(1, 0, 1, 1).unwrap(),
        ],
    )
}

fn assume() -> GrowthParams {
    GrowthParams {
        assume_generating: true,
        ..Default::default()
    }
}

// ===========================================================================
// Criterion 1: exact-inequality suite (proved theorems, explicit constants)
// ===========================================================================

#[test]
fn criterion_1_exact_inequalities() {
    // Ruzsa triangle inequality + injection form, 500 random triples.
    let mut triple_violations = 0u64;
    for p in [5u64, 7] {
        let g = ctx(p);
        let mut rng = trial_rng(101, p);
        for _ in 0..250 {
            let a = random_subset(g, rng.random_range(1..20), &mut rng);
            let b = random_subset(g, rng.random_range(1..20), &mut rng);
            let c = random_subset(g, rng.random_range(1..20), &mut rng);
            let ac = product_set(&a, &c.inverse_set()).unwrap().card() as u128;
            let ab = product_set(&a, &b.inverse_set()).unwrap().card() as u128;
            let bc = product_set(&b, &c.inverse_set()).unwrap().card() as u128;
            if ac * b.card() as u128 > ab * bc {
                triple_violations += 1;
            }
            // Eq 2.4: |AA⁻¹|·|A| ≤ |AA|²
            let aainv = product_set(&a, &a.inverse_set()).unwrap().card() as u128;
            let aa = product_set(&a, &a).unwrap().card() as u128;
            if aainv * a.card() as u128 > aa * aa {
                triple_violations += 1;
            }
        }
    }
    assert_eq!(triple_violations, 0);

    // furcht chain |A_n|·|A|^{n−3} ≤ |A₃|^{n−2}, n ∈ {4,5,6}.
    let mut furcht_violations = 0u64;
    for p in [5u64, 7, 11] {
        let g = ctx(p);
        let mut rng = trial_rng(102, p);
        for _ in 0..10 {
            let a = random_generating_set(g, 3, &mut rng, DEFAULT_CLOSURE_CAP).unwrap();
            let mut tower = BallTower::new(&a);
            let a3 = tower.ball(3).card() as u128;
            for n in 4usize..=6 {
                let an = tower.ball(n).card() as u128;
                if an * (a.card() as u128).pow(n as u32 - 3) > a3.pow(n as u32 - 2) {
                    furcht_violations += 1;
                }
            }
        }
    }
    assert_eq!(furcht_violations, 0);

    // Covering lemma: representative count and coverage, exact.
    let mut cover_violations = 0u64;
    for p in [5u64, 7] {
        let g = ctx(p);
        let mut rng = trial_rng(103, p);
        for _ in 0..25 {
            let a = random_subset(g, rng.random_range(1..30), &mut rng);
            let b = random_subset(g, rng.random_range(1..15), &mut rng);
            let out = ruzsa_cover(&a, &b).unwrap();
            if !(out.covers && out.bound_holds) {
                cover_violations += 1;
            }
        }
    }
    assert_eq!(cover_violations, 0);

    // tron, crud, kow, chich, funn bounds over ≥ 50 generating sets each.
    let mut lemma_failures: Vec<String> = Vec::new();
    let mut sets_tested = 0u64;
    for p in [5u64, 7, 11, 13] {
        let g = ctx(p);
        let mut rng = trial_rng(104, p);
        for trial in 0..15 {
            let k = rng.random_range(4..10);
            let a = random_generating_set(g, k, &mut rng, DEFAULT_CLOSURE_CAP).unwrap();
            sets_tested += 1;
            let tron = tron_find(&a).unwrap();
            if !tron.cert.pass {
                lemma_failures.push(format!("tron p={p} trial={trial}"));
            }
            let crud = crud_filter(&a, &assume()).unwrap();
            if !crud.cert.pass {
                lemma_failures.push(format!("crud p={p} trial={trial}"));
            }
            let tg = trace_growth(&a, &assume()).unwrap();
            if !tg.funn_cert.pass || !tg.chain_cert.pass {
                lemma_failures.push(format!("funn/chain p={p} trial={trial}"));
            }
            let sz = size_from_traces(&ball(&a, 2), &assume()).unwrap();
            if !(sz.kow_cert.pass && sz.chich_cert.pass && sz.cert.pass) {
                lemma_failures.push(format!("kow/chich/andu p={p} trial={trial}"));
            }
        }
    }
    assert!(sets_tested >= 50);
    assert!(lemma_failures.is_empty(), "{lemma_failures:?}");

    // sorge in exact rationals up to p = 997.
    let mut sorge_violations = 0u64;
    for p in [53u64, 101, 499, 997] {
        let mut rng = trial_rng(105, p);
        for _ in 0..8 {
            let mut a = ZpSet::empty(p);
            while a.card() < rng.random_range(2..30) {
                a.insert(rng.random_range(0..p));
            }
            let mut s = ZpSet::empty(p);
            while s.card() < rng.random_range(1..60) {
                s.insert(rng.random_range(1..p));
            }
            let out = sorge_find_xi(&a, &s, 0.5).unwrap();
            if !(out.bound_holds && out.count_holds) {
                sorge_violations += 1;
            }
        }
    }
    assert_eq!(sorge_violations, 0);

    println!(
        "[PASS] criterion 1: exact-inequality suite — 500 triples, furcht chains, \
         covering bounds, {sets_tested} generating sets through tron/crud/funn/kow/chich/andu, \
         sorge in exact rationals up to p = 997; zero violations"
    );
}

// ===========================================================================
// Criterion 2: pathological fixtures at p = 5
// ===========================================================================

#[test]
fn criterion_2_pathological_fixtures() {
    let g = ctx(5);
    let coset = pathological_fixture(g, FixtureKind::Coset).unwrap();
    let aainv = product_set(&coset.set, &coset.set.inverse_set()).unwrap();
    let aa = product_set(&coset.set, &coset.set).unwrap();
    assert_eq!(aainv.card(), 20);
    assert!(aa.card() > 20);

    let plus = pathological_fixture(g, FixtureKind::SubgroupPlusPoint).unwrap();
    let aa2 = product_set(&plus.set, &plus.set).unwrap();
    let aaa = product_set(&aa2, &plus.set).unwrap();
    assert!(aa2.card() <= 61);
    // HgH from the enumeration oracle
    let hg = GroupSet::from_index_iter(
        g,
        plus.subgroup.elems().map(|x| g.encode(g.mul(x, plus.point))),
    );
    let hgh = product_set(&hg, &plus.subgroup).unwrap();
    assert_eq!(hgh.card(), 100);
    assert!(aaa.card() >= hgh.card());
    assert!(hgh.is_subset_of(&aaa));
    println!(
        "[PASS] criterion 2: fixtures at p=5 — |gH(gH)⁻¹| = 20, |gH·gH| = {} > 20, \
         |(H∪g)²| = {} ≤ 61, |(H∪g)³| = {} ⊇ HgH (|HgH| = 100)",
        aa.card(),
        aa2.card(),
        aaa.card()
    );
}

// ===========================================================================
// Criterion 3: identity/oracle suite
// ===========================================================================

#[test]
fn criterion_3_identity_oracles() {
    // convolve ≡ naive per-x pair counting oracle.
    let mut rng = trial_rng(301, 0);
    for p in [53u64, 101] {
        for _ in 0..10 {
            let mut a = ZpSet::empty(p);
            let mut b = ZpSet::empty(p);
            while a.card() < rng.random_range(1..25) {
                a.insert(rng.random_range(0..p));
            }
            while b.card() < rng.random_range(1..25) {
                b.insert(rng.random_range(0..p));
            }
            let conv = convolve(&a, &b).unwrap();
            for x in 0..p {
                let direct = (0..p)
                    .filter(|&y| a.contains(y) && b.contains((x + p - y) % p))
                    .count() as u64;
                assert_eq!(conv[x as usize], direct);
            }
            assert_eq!(conv.iter().sum::<u64>(), a.card() * b.card());
        }
    }

    // Parseval within 1e-6 relative.
    for p in [101u64, 1009] {
        let mut f = DensityFn::delta(p, 0);
        for v in f.values.iter_mut() {
            *v = num_complex::Complex64::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
        }
        let fhat = fourier(&f).unwrap();
        let (lhs, rhs) = (fhat.l2_sq(), p as f64 * f.l2_sq());
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-6);
    }

    // w-identity on 1000 random pairs over F_{p²}.
    let f = sl2lab::ffield::PrimeField::new(101).unwrap();
    let mut checked = 0;
    while checked < 1000 {
        let x = f.ext(f.elem(rng.random_range(0..101)), f.elem(rng.random_range(0..101)));
        let y = f.ext(f.elem(rng.random_range(0..101)), f.elem(rng.random_range(0..101)));
        if x.is_zero() || y.is_zero() {
            continue;
        }
        let lhs = f.ext_mul(w_map(f, x), w_map(f, y));
        let rhs = f.ext_add(
            w_map(f, f.ext_mul(x, y)),
            w_map(f, f.ext_mul(x, f.ext_inv(y).unwrap())),
        );
        assert_eq!(lhs, rhs);
        checked += 1;
    }

    // conjugation formula on 500 random instances at p = 13.
    let g = ctx(13);
    let fp = g.field();
    for _ in 0..500 {
        let x = g.decode(rng.random_range(0..g.order())).unwrap();
        let r = fp.elem(rng.random_range(1..13));
        let rinv = fp.inv(r).unwrap();
        let diag = g.new_elem(r.value(), 0, 0, rinv.value()).unwrap();
        let conj = g.mul(g.mul(x, diag), g.inv(x));
        assert_eq!(conj.b, fp.mul(fp.sub(rinv, r), fp.mul(x.a, x.b)));
        assert_eq!(conj.c, fp.mul(fp.sub(r, rinv), fp.mul(x.c, x.d)));
    }

    println!(
        "[PASS] criterion 3: identity/oracle suite — convolution ≡ naive oracle, \
         Parseval < 1e-6, w-identity on 1000 pairs, conjugation formula on 500 instances"
    );
}

// ===========================================================================
// Criterion 4: unipotent production end-to-end at p ∈ {13, 17}
// ===========================================================================

#[test]
fn criterion_4_attac_end_to_end() {
    for p in [13u64, 17] {
        let g = ctx(p);
        let h = borel_subgroup(g);
        let h_indices = h.to_sorted_indices();
        // threshold 2p^{5/3} + 1
        let need = (1..).find(|&n| sl2lab::arith::gt_scaled_pow(n - 1, 2, p, 5, 3)).unwrap();
        let subset_size = (need + 5).min(h.card() - 1) as usize;
        let mut runs = vec![TrackedSet::from_set(&h).unwrap()];
        let mut rng = trial_rng(401, p);
        for _ in 0..10 {
            let picks = sample_indices(&mut rng, h_indices.len(), subset_size);
            runs.push(
                TrackedSet::from_indices(g, picks.iter().map(|i| h_indices[i])).unwrap(),
            );
        }
        for tracked in &runs {
            let out = attac_unipotents(tracked).unwrap();
            assert_eq!(out.unipotents.len(), p);
            assert!(out.dilate_check);
            for (idx, w) in out.unipotents.iter() {
                assert!(w.len() <= 8, "word length {} > 8", w.len());
                assert_eq!(g.encode(w.eval(g).unwrap()), idx);
            }
        }
        println!(
            "[PASS] criterion 4 (p={p}): all {p} unipotents from H and from 10 random \
             subsets of size {subset_size}, every word verified, length ≤ 8"
        );
    }
}

// ===========================================================================
// Criterion 5: factorization at p = 251, density 0.96
// ===========================================================================

#[test]
fn criterion_5_factorize_p251() {
    let start = std::time::Instant::now();
    let g = ctx(251);
    let mut rng = trial_rng(501, 0);
    let a = GroupSet::from_index_iter(g, (0..g.order()).filter(|_| rng.random_bool(0.96)));
    let card = a.card();
    // |A| ≈ 0.96 · 15,813,000 must clear 6p^{8/3}
    assert!(sl2lab::arith::gt_scaled_pow(card, 6, 251, 8, 3));
    let fac = Factorizer::new(a, false).unwrap();
    let mut verified = 0;
    let mut lu_path = 0;
    for trial in 0..100u64 {
        let mut trng = trial_rng(502, trial);
        let idx = trng.random_range(0..g.order());
        let target = g.decode(idx).unwrap();
        let word = fac.factorize(target).unwrap();
        assert!(word.len() <= 64);
        assert_eq!(g.encode(word.eval(g).unwrap()), idx);
        assert!(word.supported_on(fac.source()));
        if word.len() > 1 {
            lu_path += 1;
        }
        verified += 1;
    }
    println!(
        "[PASS] criterion 5: factorize at p=251, |A| = {card} (density 0.96): \
         {verified}/100 targets verified with length ≤ 64 ({lu_path} via the \
         4-unipotent route), elapsed {:.1?}",
        start.elapsed()
    );
    assert!(start.elapsed().as_secs() < 600);
}

// ===========================================================================
// Criterion 6: diameter lab for the off-diagonal-1 pair
// ===========================================================================

/// Independent dense-BFS oracle with its own enumeration and arithmetic.
mod oracle {
    use std::collections::{HashMap, VecDeque};

    pub type Mat = [u64; 4];

    pub fn mul(a: Mat, b: Mat, p: u64) -> Mat {
        [
            (a[0] * b[0] + a[1] * b[2]) % p,
            (a[0] * b[1] + a[1] * b[3]) % p,
            (a[2] * b[0] + a[3] * b[2]) % p,
            (a[2] * b[1] + a[3] * b[3]) % p,
        ]
    }

    pub fn inv(a: Mat, p: u64) -> Mat {
        [a[3], (p - a[1]) % p, (p - a[2]) % p, a[0]]
    }

    pub fn all_elements(p: u64) -> (Vec<Mat>, HashMap<Mat, usize>) {
        let mut all = Vec::new();
        let mut index = HashMap::new();
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        if (a * d + p * p - b * c) % p == 1 % p {
                            index.insert([a, b, c, d], all.len());
                            all.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        (all, index)
    }

    /// All-pairs max distance via one BFS per vertex over a materialized
    /// adjacency list.
    pub fn dense_diameter(p: u64, gens: &[Mat]) -> (u32, bool) {
        let (all, index) = all_elements(p);
        let mut sym: Vec<Mat> = Vec::new();
        for &g in gens {
            for m in [g, inv(g, p)] {
                if !sym.contains(&m) {
                    sym.push(m);
                }
            }
        }
        let n = all.len();
        let adj: Vec<Vec<usize>> = all
            .iter()
            .map(|&v| sym.iter().map(|&a| index[&mul(a, v, p)]).collect())
            .collect();
        let mut diameter = 0u32;
        let mut transitive = true;
        let mut ecc0 = None;
        for start in 0..n {
            let mut dist = vec![u32::MAX; n];
            dist[start] = 0;
            let mut q = VecDeque::from([start]);
            let mut ecc = 0;
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        ecc = ecc.max(dist[w]);
                        q.push_back(w);
                    }
                }
            }
            assert!(dist.iter().all(|&d| d != u32::MAX), "not connected");
            match ecc0 {
                None => ecc0 = Some(ecc),
                Some(e) if e != ecc => transitive = false,
                _ => {}
            }
            diameter = diameter.max(ecc);
        }
        (diameter, transitive)
    }
}

#[test]
fn criterion_6_diameter_lab() {
    // Dense all-pairs oracle at p ∈ {5, 7}: value match plus the
    // vertex-transitivity cross-check.
    for p in [5u64, 7] {
        let (oracle_diam, transitive) =
            oracle::dense_diameter(p, &[[1, 1, 0, 1], [1, 0, 1, 1]]);
        assert!(transitive);
        let g = ctx(p);
        let cx = CayleyContext::new(g, &offdiag_generators(g, 1).unwrap()).unwrap();
        let res = bfs_diameter(&cx, DEFAULT_BFS_CAP).unwrap();
        assert_eq!(res.diameter, oracle_diam, "p = {p}");
        assert_eq!(
            res.sphere_sizes.iter().sum::<u64>(),
            g.order(),
            "sphere sizes must exhaust the group"
        );
    }

    // Sweep all primes 5 ≤ p ≤ 61: exact diameters, ratio table, girth
    // beyond the short-loop threshold.
    let mut table = Vec::new();
    for p in sl2lab::arith::primes_in(5, 61) {
        let g = ctx(p);
        let cx = CayleyContext::new(g, &offdiag_generators(g, 1).unwrap()).unwrap();
        let res = bfs_diameter(&cx, DEFAULT_BFS_CAP).unwrap();
        let threshold = short_loop_threshold(p);
        let girth_res = girth(&cx, threshold, DEFAULT_BFS_CAP).unwrap();
        assert!(
            girth_res.relation_len.is_none(),
            "relation of length ≤ {threshold} at p = {p}"
        );
        table.push((p, res.diameter, res.diameter as f64 / (p as f64).ln()));
    }
    let ratios: Vec<String> = table
        .iter()
        .map(|(p, d, r)| format!("p={p}:{d} ({r:.2})"))
        .collect();
    println!(
        "[PASS] criterion 6: diameter lab — dense-oracle match at p ∈ {{5,7}}, girth above \
         the short-loop threshold at every prime; diameter (diameter/log p): {}",
        ratios.join(", ")
    );
}

// ===========================================================================
// Criterion 7: random-pair experiment
// ===========================================================================

#[test]
fn criterion_7_random_pairs() {
    let mut fractions = Vec::new();
    let mut loop_fractions = Vec::new();
    for p in [11u64, 31, 61] {
        let stats = random_pairs(ctx(p), 200, 701, DEFAULT_BFS_CAP).unwrap();
        fractions.push((p, stats.generating_fraction));
        loop_fractions.push((p, stats.short_loop_fraction));
    }
    // Short-loop fraction among generating pairs must not increase with p.
    for w in loop_fractions.windows(2) {
        assert!(
            w[1].1 <= w[0].1 + 1e-12,
            "short-loop fraction increased: {loop_fractions:?}"
        );
    }
    let mut failed = Vec::new();
    for &(p, frac) in &fractions {
        let verdict = if frac >= 0.9 { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] criterion 7 (p={p}): generating fraction {frac:.3} \
             (criterion: ≥ 0.9); short-loop fraction {:.3}",
            loop_fractions.iter().find(|(q, _)| q == &p).unwrap().1
        );
        if frac < 0.9 {
            failed.push((p, frac));
        }
    }
    // The ≥ 0.9 bound is asserted verbatim. It is known to be unattainable
    // at p = 11, where SL₂(F₁₁) has an unusually rich proper-subgroup
    // lattice (icosahedral subgroups); see the measured fraction above.
    assert!(
        failed.is_empty(),
        "generating fraction below 0.9 at {failed:?}"
    );
}

// ===========================================================================
// Criterion 8: walk suite at p = 5
// ===========================================================================

#[test]
fn criterion_8_walk_suite() {
    let p = 5u64;
    let g = ctx(p);
    let cx = CayleyContext::new(g, &offdiag_generators(g, 1).unwrap()).unwrap();

    // Independent dense oracle: enumeration, kernel matrix and matrix
    // powers all built from scratch.
    let (all, index) = oracle::all_elements(p);
    let n = all.len();
    let gens = [[1u64, 1, 0, 1], [1, 0, 1, 1]];
    let mut sym: Vec<oracle::Mat> = Vec::new();
    for gmat in gens {
        for m in [gmat, oracle::inv(gmat, p)] {
            if !sym.contains(&m) {
                sym.push(m);
            }
        }
    }
    let d = sym.len() as f64;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for (yi, &y) in all.iter().enumerate() {
        t[(yi, yi)] += 0.5;
        for &a in &sym {
            t[(index[&oracle::mul(y, a, p)], yi)] += 1.0 / (2.0 * d);
        }
    }
    let mut phi = DMatrix::<f64>::zeros(n, 1);
    phi[(index[&[1, 0, 0, 1]], 0)] = 1.0;
    let uniform = 1.0 / n as f64;
    let mut oracle_mixing = 0u32;
    for step in 1..10_000u32 {
        phi = &t * phi;
        let l1: f64 = phi.iter().map(|&x| (x - uniform).abs()).sum();
        if l1 <= 0.5 {
            oracle_mixing = step;
            break;
        }
    }

    let res = mixing_time(&cx, DEFAULT_WALK_CAP).unwrap();
    assert_eq!(res.mixing_time, oracle_mixing);
    assert!(res.monotone, "L1 distance increased along the trajectory");

    // λ₂: implicit power iteration vs the oracle matrix spectrum.
    let mut eigen: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();
    eigen.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let power = spectral_lambda2_power(&cx, 1e-10, 1_000_000, DEFAULT_WALK_CAP).unwrap();
    assert!(
        (power.lambda2 - eigen[1]).abs() < 1e-8,
        "lambda2 {} vs oracle {}",
        power.lambda2,
        eigen[1]
    );
    let dense = spectral_lambda2_dense(&cx).unwrap();
    assert!((dense.lambda2 - eigen[1]).abs() < 1e-10);
    // no negative eigenvalues for the lazy kernel
    assert!(*eigen.last().unwrap() >= -1e-10);
    assert!(dense.lambda_min.unwrap() >= -1e-10);

    println!(
        "[PASS] criterion 8: walk suite at p=5 — mixing time {} (= dense oracle), \
         λ₂ = {:.12} within 1e-8 of the dense spectrum, all eigenvalues ≥ -1e-10, \
         L¹ non-increasing",
        res.mixing_time, power.lambda2
    );
}

// ===========================================================================
// Criterion 9: growth-certificate sweep
// ===========================================================================

#[test]
fn criterion_9_growth_sweep() {
    let params = assume();
    for p in [11u64, 31] {
        let g = ctx(p);
        let mut all_pass = true;
        let mut positive_exponents = 0;
        let mut trials = 0;
        for trial in 0..20u64 {
            let mut rng = trial_rng(901 + p, trial);
            let a = random_generating_set(g, 10, &mut rng, DEFAULT_CLOSURE_CAP).unwrap();
            let chain = growth_certificate(&a, 0.5, &params).unwrap();
            all_pass &= chain.explicit_stages_pass;
            trials += 1;
            // non-saturated: A is a proper subset, so tripling must grow
            if chain.tripling_exponent > 0.0 {
                positive_exponents += 1;
            }
        }
        assert!(all_pass, "an explicit-constant stage failed at p = {p}");
        assert_eq!(
            positive_exponents, trials,
            "tripling exponent not positive in every non-saturated trial"
        );
        println!(
            "[PASS] criterion 9 (p={p}): 20 random 10-element generating sets — every \
             explicit-constant stage passed, tripling exponent > 0 in {positive_exponents}/{trials}"
        );
    }
}

// ===========================================================================
// Criterion 10: free words for the off-diagonal-3 pair
// ===========================================================================

#[test]
fn criterion_10_free_words_offdiag3() {
    let report = free_word_check(&[[1, 3, 0, 1], [1, 0, 3, 1]], 10007, 13, 10_000, 1001).unwrap();
    assert_eq!(report.words_tested, 10_000);
    assert_eq!(report.violations, 0);
    println!(
        "[PASS] criterion 10: offdiag3 at p=10007 — 10000 reduced words of length ≤ 13, \
         zero identity evaluations (max |entry| over ℤ: {})",
        report.max_abs_entry
    );
}

// ===========================================================================
// Cross-cutting spot checks kept with the acceptance suite
// ===========================================================================

#[test]
fn external_interfaces_roundtrip() {
    // matrix literals, set serialization, word JSON: the surfaces named
    // for downstream consumers.
    let g = ctx(13);
    let el = g.parse_elem("2,1;1,1").unwrap();
    assert_eq!(g.format_elem(el), "2,1;1,1");
    let a = knop(g);
    let mut buf = Vec::new();
    a.write_binary(&mut buf).unwrap();
    assert_eq!(GroupSet::read_binary(g, &mut buf.as_slice()).unwrap(), a);
    let b = GroupSet::from_json(g, &a.to_json()).unwrap();
    assert_eq!(a, b);
    let fac = Factorizer::new(GroupSet::full(g), true).unwrap();
    let w = fac.factorize(g.new_elem(2, 1, 1, 1).unwrap()).unwrap();
    let json = w.to_json(sl2lab::gset::context_hash(g, fac.source()));
    assert!(json.contains("\"context\""));
    println!("[PASS] external interfaces: literals, binary/JSON sets, word JSON");
}

#[test]
fn multiplicative_ball_and_corz_surface() {
    // The F_q machinery the growth pipeline drives, exercised directly.
    let f = sl2lab::ffield::PrimeField::new(13).unwrap();
    let base = FqSet::from_elems(f, [f.ext(f.elem(2), f.elem(1))]).unwrap();
    let ball20 = mul_ball(&base, 20).unwrap();
    assert!(ball20.members.contains(f.ext_one()));
    let image = sl2lab::zpadd::expander_corz(&base, f.ext_one(), f.ext_base(f.elem(3))).unwrap();
    assert!(image.image.card() > 0);
    // additive machinery: dilate/sumset sanity
    let a = ZpSet::from_members(13, [1, 2, 3]);
    assert_eq!(add_sets(&a, &dilate(&a, 2)).card(), sub_sets(&a, &dilate(&a, 11)).card());
    println!("[PASS] multiplicative balls and polynomial images");
}
