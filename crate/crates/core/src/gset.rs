//! Finite-subset algebra over SL₂(𝔽_p): product sets, balls A_r, Ruzsa
//! distance, the covering lemma, closure under multiplication, the
//! pathological coset fixtures, and provenance words.
//!
//! Sets are stored densely as bitsets over canonical indices whenever the
//! universe p(p²−1) fits 2³⁰ bits (all desk-scale experiments), falling
//! back to a sorted index list otherwise. All operations are exact.

use crate::arith::fnv1a64;
use crate::bits::Bitset;
use crate::sl2::{SL2Ctx, SL2Elem, Sl2Error};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write as IoWrite};
use thiserror::Error;

/// Universe bound for dense bitset storage.
pub const DENSE_UNIVERSE_CAP: u64 = 1 << 30;

/// Default cap on the universe for closure/generation checks.
pub const DEFAULT_CLOSURE_CAP: u64 = 1 << 25;

#[derive(Debug, Error)]
pub enum GsetError {
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
    #[error("operands live over different primes ({0} vs {1})")]
    ContextMismatch(u64, u64),
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("closure undecided at this scale: universe {universe} exceeds cap {cap}")]
    ClosureUndecided { universe: u64, cap: u64 },
    #[error("fixture requires p >= 5, got {0}")]
    FixtureModulusTooSmall(u64),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed set serialization: {0}")]
    BadSerialization(String),
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Bitset),
    /// Sorted, deduplicated canonical indices.
    Sparse(Vec<u64>),
}

/// Immutable finite subset of SL₂(𝔽_p), addressed by canonical index.
#[derive(Clone, Debug)]
pub struct GroupSet {
    ctx: SL2Ctx,
    storage: Storage,
    card: u64,
}

impl PartialEq for GroupSet {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx
            && self.card == other.card
            && self.iter().zip(other.iter()).all(|(a, b)| a == b)
    }
}
impl Eq for GroupSet {}

impl GroupSet {
    pub fn empty(ctx: SL2Ctx) -> GroupSet {
        Self::from_index_iter(ctx, std::iter::empty())
    }

    pub fn full(ctx: SL2Ctx) -> GroupSet {
        Self::from_index_iter(ctx, 0..ctx.order())
    }

    pub fn from_index_iter(ctx: SL2Ctx, indices: impl IntoIterator<Item = u64>) -> GroupSet {
        let universe = ctx.order();
        if universe <= DENSE_UNIVERSE_CAP {
            let mut bits = Bitset::new(universe);
            for i in indices {
                debug_assert!(i < universe);
                bits.set(i);
            }
            let card = bits.count();
            GroupSet {
                ctx,
                storage: Storage::Dense(bits),
                card,
            }
        } else {
            let mut v: Vec<u64> = indices.into_iter().collect();
            v.sort_unstable();
            v.dedup();
            let card = v.len() as u64;
            GroupSet {
                ctx,
                storage: Storage::Sparse(v),
                card,
            }
        }
    }

    pub fn from_elems(ctx: SL2Ctx, elems: &[SL2Elem]) -> GroupSet {
        Self::from_index_iter(ctx, elems.iter().map(|&g| ctx.encode(g)))
    }

    #[inline]
    pub fn ctx(&self) -> SL2Ctx {
        self.ctx
    }

    #[inline]
    pub fn card(&self) -> u64 {
        debug_assert_eq!(
            self.card,
            match &self.storage {
                Storage::Dense(b) => b.count(),
                Storage::Sparse(v) => v.len() as u64,
            }
        );
        self.card
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn is_full(&self) -> bool {
        self.card == self.ctx.order()
    }

    #[inline]
    pub fn contains(&self, idx: u64) -> bool {
        match &self.storage {
            Storage::Dense(b) => b.get(idx),
            Storage::Sparse(v) => v.binary_search(&idx).is_ok(),
        }
    }

    pub fn contains_elem(&self, g: SL2Elem) -> bool {
        self.contains(self.ctx.encode(g))
    }

    /// Ascending canonical indices.
    pub fn iter(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.storage {
            Storage::Dense(b) => Box::new(b.iter_ones()),
            Storage::Sparse(v) => Box::new(v.iter().copied()),
        }
    }

    pub fn elems(&self) -> impl Iterator<Item = SL2Elem> + '_ {
        self.iter().map(move |i| self.ctx.decode_unchecked(i))
    }

    pub fn to_sorted_indices(&self) -> Vec<u64> {
        self.iter().collect()
    }

    /// Smallest canonical index, if any.
    pub fn min_index(&self) -> Option<u64> {
        self.iter().next()
    }

    pub fn inverse_set(&self) -> GroupSet {
        let ctx = self.ctx;
        GroupSet::from_index_iter(ctx, self.elems().map(|g| ctx.encode(ctx.inv(g))))
    }

    pub fn union(&self, other: &GroupSet) -> Result<GroupSet, GsetError> {
        check_ctx(self, other)?;
        Ok(GroupSet::from_index_iter(
            self.ctx,
            self.iter().chain(other.iter()),
        ))
    }

    pub fn with_elem(&self, g: SL2Elem) -> GroupSet {
        GroupSet::from_index_iter(
            self.ctx,
            self.iter().chain(std::iter::once(self.ctx.encode(g))),
        )
    }

    pub fn is_subset_of(&self, other: &GroupSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    /// A₁ = A ∪ A⁻¹ ∪ {1}.
    pub fn symmetrized_with_identity(&self) -> GroupSet {
        let ctx = self.ctx;
        let id = ctx.encode(ctx.identity());
        GroupSet::from_index_iter(
            ctx,
            self.iter()
                .chain(self.elems().map(|g| ctx.encode(ctx.inv(g))))
                .chain(std::iter::once(id)),
        )
    }

    // ------------------------------------------------------------------
    // Serialization: sorted canonical indices, binary and JSON forms.
    // Binary layout: little-endian u64 count, then that many u64 indices.
    // ------------------------------------------------------------------

    pub fn write_binary(&self, w: &mut impl IoWrite) -> Result<(), GsetError> {
        w.write_all(&self.card.to_le_bytes())?;
        for i in self.iter() {
            w.write_all(&i.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(ctx: SL2Ctx, r: &mut impl Read) -> Result<GroupSet, GsetError> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let count = u64::from_le_bytes(buf);
        let mut indices = Vec::with_capacity(count as usize);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            let idx = u64::from_le_bytes(buf);
            if idx >= ctx.order() {
                return Err(GsetError::BadSerialization(format!(
                    "index {idx} out of range for p = {}",
                    ctx.p()
                )));
            }
            indices.push(idx);
        }
        Ok(GroupSet::from_index_iter(ctx, indices))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_sorted_indices()).unwrap()
    }

    pub fn from_json(ctx: SL2Ctx, s: &str) -> Result<GroupSet, GsetError> {
        let v: Vec<u64> =
            serde_json::from_str(s).map_err(|e| GsetError::BadSerialization(e.to_string()))?;
        if let Some(&bad) = v.iter().find(|&&i| i >= ctx.order()) {
            return Err(GsetError::BadSerialization(format!(
                "index {bad} out of range for p = {}",
                ctx.p()
            )));
        }
        Ok(GroupSet::from_index_iter(ctx, v))
    }
}

fn check_ctx(a: &GroupSet, b: &GroupSet) -> Result<(), GsetError> {
    if a.ctx != b.ctx {
        return Err(GsetError::ContextMismatch(a.ctx.p(), b.ctx.p()));
    }
    Ok(())
}

// --------------------------------------------------------------------------
// Product sets and balls
// --------------------------------------------------------------------------

/// Exact {x·y : x ∈ A, y ∈ B}. Iterates the smaller operand against a
/// decoded cache of the larger; breaks out early once the result saturates
/// the full group.
pub fn product_set(a: &GroupSet, b: &GroupSet) -> Result<GroupSet, GsetError> {
    check_ctx(a, b)?;
    let ctx = a.ctx;
    if a.is_empty() || b.is_empty() {
        return Ok(GroupSet::empty(ctx));
    }
    if a.is_full() || b.is_full() {
        return Ok(GroupSet::full(ctx));
    }
    let universe = ctx.order();
    let mut bits = Bitset::new(universe);
    let (outer, inner, outer_is_a) = if a.card() <= b.card() {
        (a, b, true)
    } else {
        (b, a, false)
    };
    let inner_elems: Vec<SL2Elem> = inner.elems().collect();
    for x in outer.elems() {
        for &y in &inner_elems {
            let prod = if outer_is_a {
                ctx.mul(x, y)
            } else {
                ctx.mul(y, x)
            };
            bits.set(ctx.encode(prod));
        }
        if bits.count() == universe {
            break;
        }
    }
    let card = bits.count();
    Ok(GroupSet {
        ctx,
        storage: Storage::Dense(bits),
        card,
    })
}

/// A·A·A.
pub fn triple_product(a: &GroupSet) -> Result<GroupSet, GsetError> {
    product_set(&product_set(a, a)?, a)
}

/// Memoized tower of balls A_r; each level extends the previous by
/// multiplying only the new frontier with A₁, which is exact because
/// A_{r+1} = A_r · A₁ and A₁ contains the identity.
pub struct BallTower {
    ctx: SL2Ctx,
    a1: GroupSet,
    a1_elems: Vec<SL2Elem>,
    levels: Vec<GroupSet>,
    frontier: Vec<u64>,
    saturated_at: Option<usize>,
}

impl BallTower {
    pub fn new(a: &GroupSet) -> BallTower {
        let ctx = a.ctx;
        let a1 = a.symmetrized_with_identity();
        let a1_elems: Vec<SL2Elem> = a1.elems().collect();
        // a ball that already fills the group can never grow again
        let saturated_at = (a1.card() == ctx.order()).then_some(1);
        let frontier = if saturated_at.is_some() {
            Vec::new()
        } else {
            a1.to_sorted_indices()
        };
        BallTower {
            ctx,
            a1: a1.clone(),
            a1_elems,
            levels: vec![a1],
            frontier,
            saturated_at,
        }
    }

    pub fn a1(&self) -> &GroupSet {
        &self.a1
    }

    /// First radius at which the tower stopped growing, if reached.
    pub fn saturated_at(&self) -> Option<usize> {
        self.saturated_at
    }

    /// A_r for r ≥ 1.
    pub fn ball(&mut self, r: usize) -> &GroupSet {
        assert!(r >= 1, "balls are defined for r >= 1");
        while self.levels.len() < r {
            if self.saturated_at.is_some() {
                break;
            }
            let ctx = self.ctx;
            let prev = self.levels.last().unwrap();
            let mut bits = match &prev.storage {
                Storage::Dense(b) => b.clone(),
                Storage::Sparse(_) => {
                    let mut bs = Bitset::new(ctx.order());
                    for i in prev.iter() {
                        bs.set(i);
                    }
                    bs
                }
            };
            let mut new_frontier = Vec::new();
            let universe = ctx.order();
            for &fi in &self.frontier {
                let x = ctx.decode_unchecked(fi);
                for &y in &self.a1_elems {
                    let idx = ctx.encode(ctx.mul(x, y));
                    if bits.set(idx) {
                        new_frontier.push(idx);
                    }
                }
                // the level can saturate long before the frontier runs out
                if bits.count() == universe {
                    break;
                }
            }
            let card = bits.count();
            if new_frontier.is_empty() || card == ctx.order() {
                self.saturated_at = Some(self.levels.len());
                new_frontier.clear();
            }
            new_frontier.sort_unstable();
            self.frontier = new_frontier;
            self.levels.push(GroupSet {
                ctx,
                storage: Storage::Dense(bits),
                card,
            });
        }
        let idx = r.min(self.levels.len());
        &self.levels[idx - 1]
    }
}

/// One-shot ball A_r.
pub fn ball(a: &GroupSet, r: usize) -> GroupSet {
    let mut tower = BallTower::new(a);
    tower.ball(r).clone()
}

// --------------------------------------------------------------------------
// Ruzsa distance and covering
// --------------------------------------------------------------------------

/// d(A, B) = log(|AB⁻¹| / √(|A||B|)), natural log. Acceptance-grade
/// comparisons downstream always re-derive from the integer cardinalities.
pub fn ruzsa_distance(a: &GroupSet, b: &GroupSet) -> Result<f64, GsetError> {
    check_ctx(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(GsetError::EmptySet);
    }
    let abinv = product_set(a, &b.inverse_set())?;
    Ok((abinv.card() as f64).ln() - 0.5 * ((a.card() as f64).ln() + (b.card() as f64).ln()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverOutcome {
    /// Canonical indices of the chosen representatives a_j ∈ A.
    pub reps: Vec<u64>,
    /// |A·B|, for the ⌊|A·B|/|B|⌋ bound.
    pub product_card: u64,
    pub b_card: u64,
    /// count·|B| ≤ |A·B|, checked exactly.
    pub bound_holds: bool,
    /// A ⊆ ⋃ a_j B₂, checked exactly.
    pub covers: bool,
}

/// Greedy maximal disjoint-coset selection: representatives a_j ∈ A whose
/// cosets a_jB are pairwise disjoint; then A ⊆ ⋃ a_j B₂ with at most
/// ⌊|A·B|/|B|⌋ representatives.
pub fn ruzsa_cover(a: &GroupSet, b: &GroupSet) -> Result<CoverOutcome, GsetError> {
    check_ctx(a, b)?;
    if b.is_empty() {
        return Err(GsetError::EmptySet);
    }
    let ctx = a.ctx;
    // xB meets a_jB iff x ∈ a_j(BB⁻¹); BB⁻¹ is symmetric.
    let bbinv = product_set(b, &b.inverse_set())?;
    let bbinv_elems: Vec<SL2Elem> = bbinv.elems().collect();
    let mut blocked = Bitset::new(ctx.order());
    let mut reps = Vec::new();
    for xi in a.iter() {
        if blocked.get(xi) {
            continue;
        }
        reps.push(xi);
        let x = ctx.decode_unchecked(xi);
        for &y in &bbinv_elems {
            blocked.set(ctx.encode(ctx.mul(x, y)));
        }
    }
    // Verify both of the lemma's claims.
    let b2 = ball(b, 2);
    let b2_elems: Vec<SL2Elem> = b2.elems().collect();
    let mut covered = Bitset::new(ctx.order());
    for &ri in &reps {
        let rep = ctx.decode_unchecked(ri);
        for &y in &b2_elems {
            covered.set(ctx.encode(ctx.mul(rep, y)));
        }
    }
    let covers = a.iter().all(|i| covered.get(i));
    let product_card = product_set(a, b)?.card();
    let bound_holds = (reps.len() as u64) * b.card() <= product_card;
    Ok(CoverOutcome {
        reps,
        product_card,
        b_card: b.card(),
        bound_holds,
        covers,
    })
}

// --------------------------------------------------------------------------
// Closure and generation
// --------------------------------------------------------------------------

/// Closure of A under multiplication, by frontier BFS. In a finite group
/// this closure is the subgroup ⟨A⟩.
pub fn closure(a: &GroupSet, cap: u64) -> Result<GroupSet, GsetError> {
    let ctx = a.ctx;
    let universe = ctx.order();
    if universe > cap {
        return Err(GsetError::ClosureUndecided { universe, cap });
    }
    if a.is_empty() {
        return Ok(GroupSet::empty(ctx));
    }
    let gen_elems: Vec<SL2Elem> = a.elems().collect();
    let mut bits = Bitset::new(universe);
    let mut frontier: Vec<u64> = Vec::new();
    for i in a.iter() {
        if bits.set(i) {
            frontier.push(i);
        }
    }
    while !frontier.is_empty() && bits.count() < universe {
        let mut next = Vec::new();
        for &fi in &frontier {
            let x = ctx.decode_unchecked(fi);
            for &y in &gen_elems {
                let idx = ctx.encode(ctx.mul(x, y));
                if bits.set(idx) {
                    next.push(idx);
                }
            }
        }
        frontier = next;
    }
    let card = bits.count();
    Ok(GroupSet {
        ctx,
        storage: Storage::Dense(bits),
        card,
    })
}

/// True iff ⟨A⟩ = SL₂(𝔽_p); returns the closure as byproduct.
pub fn generates(a: &GroupSet, cap: u64) -> Result<(bool, GroupSet), GsetError> {
    let cl = closure(a, cap)?;
    let full = cl.card() == a.ctx.order();
    Ok((full, cl))
}

// --------------------------------------------------------------------------
// Pathological fixtures (the two non-abelian counterexamples)
// --------------------------------------------------------------------------

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixtureKind {
    /// gH for H the upper-triangular Borel and g outside its normalizer:
    /// |AA⁻¹| = |H| = |A| while |AA| = |HgH| is much larger.
    Coset,
    /// H ∪ {g}: |A·A| ≤ 3|H| + 1 < 3|A| while A·A·A ⊇ HgH.
    SubgroupPlusPoint,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub set: GroupSet,
    pub subgroup: GroupSet,
    pub point: SL2Elem,
}

/// Upper-triangular Borel subgroup, |H| = p(p−1).
pub fn borel_subgroup(ctx: SL2Ctx) -> GroupSet {
    let f = ctx.field();
    let p = ctx.p();
    let mut indices = Vec::with_capacity((p * (p - 1)) as usize);
    for r in 1..p {
        let rinv = f.inv(f.elem(r)).unwrap();
        for x in 0..p {
            let g = SL2Elem {
                a: f.elem(r),
                b: f.elem(x),
                c: f.zero(),
                d: rinv,
            };
            indices.push(ctx.encode(g));
        }
    }
    GroupSet::from_index_iter(ctx, indices)
}

pub fn pathological_fixture(ctx: SL2Ctx, kind: FixtureKind) -> Result<Fixture, GsetError> {
    if ctx.p() < 5 {
        return Err(GsetError::FixtureModulusTooSmall(ctx.p()));
    }
    let h = borel_subgroup(ctx);
    // The Borel is its own normalizer, so the antidiagonal involution is
    // outside it.
    let g = ctx.new_elem_i64(0, 1, -1, 0).unwrap();
    let set = match kind {
        FixtureKind::Coset => {
            GroupSet::from_index_iter(ctx, h.elems().map(|x| ctx.encode(ctx.mul(g, x))))
        }
        FixtureKind::SubgroupPlusPoint => h.with_elem(g),
    };
    Ok(Fixture {
        set,
        subgroup: h,
        point: g,
    })
}

// --------------------------------------------------------------------------
// Random sampling (seeded; used by experiments and tests)
// --------------------------------------------------------------------------

/// Uniform random subset of exactly k distinct elements.
pub fn random_subset(ctx: SL2Ctx, k: usize, rng: &mut impl Rng) -> GroupSet {
    let order = ctx.order();
    assert!(k as u64 <= order);
    let picks = sample_indices(rng, order as usize, k);
    GroupSet::from_index_iter(ctx, picks.iter().map(|i| i as u64))
}

/// Rejection-samples k-element subsets until one generates the full group.
pub fn random_generating_set(
    ctx: SL2Ctx,
    k: usize,
    rng: &mut impl Rng,
    cap: u64,
) -> Result<GroupSet, GsetError> {
    loop {
        let cand = random_subset(ctx, k, rng);
        if generates(&cand, cap)?.0 {
            return Ok(cand);
        }
    }
}

// --------------------------------------------------------------------------
// Words: provenance of constructed elements
// --------------------------------------------------------------------------

/// One factor: a canonical index into the group plus an inversion flag.
/// Words stay linear in output length no matter how large the source set
/// is.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFactor {
    pub index: u64,
    pub inverted: bool,
}

/// Signed sequence of generator references; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub factors: Vec<WordFactor>,
}

impl Word {
    pub fn empty() -> Word {
        Word::default()
    }

    pub fn single(index: u64, inverted: bool) -> Word {
        Word {
            factors: vec![WordFactor { index, inverted }],
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn eval(&self, ctx: SL2Ctx) -> Result<SL2Elem, Sl2Error> {
        let mut acc = ctx.identity();
        for f in &self.factors {
            let g = ctx.decode(f.index)?;
            acc = ctx.mul(acc, if f.inverted { ctx.inv(g) } else { g });
        }
        Ok(acc)
    }

    /// Reverse order, flip flags.
    pub fn inverse(&self) -> Word {
        Word {
            factors: self
                .factors
                .iter()
                .rev()
                .map(|f| WordFactor {
                    index: f.index,
                    inverted: !f.inverted,
                })
                .collect(),
        }
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Word>) -> Word {
        let mut factors = Vec::new();
        for w in parts {
            factors.extend_from_slice(&w.factors);
        }
        Word { factors }
    }

    /// Replaces every factor by a whole word: factor (i, false) becomes
    /// lookup(i), factor (i, true) becomes lookup(i)⁻¹.
    pub fn substitute(&self, mut lookup: impl FnMut(u64) -> Word) -> Word {
        let mut factors = Vec::new();
        for f in &self.factors {
            let w = lookup(f.index);
            if f.inverted {
                factors.extend(w.inverse().factors);
            } else {
                factors.extend(w.factors);
            }
        }
        Word { factors }
    }

    /// All referenced indices lie in the given source set.
    pub fn supported_on(&self, a: &GroupSet) -> bool {
        self.factors.iter().all(|f| a.contains(f.index))
    }

    /// JSON form: factor list plus the evaluation-context hash.
    pub fn to_json(&self, context_hash: u64) -> String {
        serde_json::to_string(&serde_json::json!({
            "context": format!("{context_hash:016x}"),
            "factors": self.factors,
        }))
        .unwrap()
    }
}

/// Hash identifying an evaluation context (prime plus source-set indices).
pub fn context_hash(ctx: SL2Ctx, source: &GroupSet) -> u64 {
    let mut bytes = Vec::with_capacity(8 + 8 * source.card() as usize);
    bytes.extend_from_slice(&ctx.p().to_le_bytes());
    for i in source.iter() {
        bytes.extend_from_slice(&i.to_le_bytes());
    }
    fnv1a64(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::trial_rng;
    use rand::Rng;
    use std::collections::HashSet;

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

    /// Independent enumeration oracle: product set via matrix hash-set.
    fn product_oracle(ctx: SL2Ctx, a: &GroupSet, b: &GroupSet) -> HashSet<SL2Elem> {
        let mut out = HashSet::new();
        for x in a.elems() {
            for y in b.elems() {
                out.insert(ctx.mul(x, y));
            }
        }
        out
    }

    /// Independent ball oracle straight from the definition.
    fn ball_oracle(ctx: SL2Ctx, a: &GroupSet, r: usize) -> HashSet<SL2Elem> {
        let mut a1: HashSet<SL2Elem> = a.elems().collect();
        a1.extend(a.elems().map(|g| ctx.inv(g)));
        a1.insert(ctx.identity());
        let mut cur = a1.clone();
        for _ in 1..r {
            let mut next = HashSet::new();
            for &x in &cur {
                for &y in &a1 {
                    next.insert(ctx.mul(x, y));
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn product_unipotent_addition() {
        let g = ctx(7);
        let u1 = GroupSet::from_elems(g, &[g.new_elem(1, 1, 0, 1).unwrap()]);
        let prod = product_set(&u1, &u1).unwrap();
        assert_eq!(prod.card(), 1);
        assert!(prod.contains_elem(g.new_elem(1, 2, 0, 1).unwrap()));
    }

    #[test]
    fn product_matches_oracle_random() {
        let g = ctx(7);
        let mut rng = trial_rng(11, 0);
        for _ in 0..20 {
            let a = random_subset(g, rng.random_range(1..20), &mut rng);
            let b = random_subset(g, rng.random_range(1..20), &mut rng);
            let prod = product_set(&a, &b).unwrap();
            let oracle = product_oracle(g, &a, &b);
            assert_eq!(prod.card() as usize, oracle.len());
            assert!(oracle.iter().all(|&m| prod.contains_elem(m)));
            assert!(prod.card() >= a.card().max(b.card()));
        }
    }

    #[test]
    fn coset_fixture_p5() {
        let g = ctx(5);
        let fix = pathological_fixture(g, FixtureKind::Coset).unwrap();
        assert_eq!(fix.set.card(), 20);
        let aainv = product_set(&fix.set, &fix.set.inverse_set()).unwrap();
        assert_eq!(aainv.card(), 20); // |A A⁻¹| = |H| = |A|
        let aa = product_set(&fix.set, &fix.set).unwrap();
        assert_eq!(aa.card(), 100); // |gH gH| = |HgH|, enumerated
        assert!(aa.card() > fix.set.card());
    }

    #[test]
    fn subgroup_plus_point_fixture_p5() {
        let g = ctx(5);
        let fix = pathological_fixture(g, FixtureKind::SubgroupPlusPoint).unwrap();
        assert_eq!(fix.set.card(), 21);
        let aa = product_set(&fix.set, &fix.set).unwrap();
        assert_eq!(aa.card(), 56);
        assert!(aa.card() <= 3 * fix.subgroup.card() + 1); // ≤ 61
        let aaa = product_set(&aa, &fix.set).unwrap();
        assert_eq!(aaa.card(), 120);
        // A·A·A ⊇ HgH, |HgH| = 100 by enumeration
        let hg = GroupSet::from_index_iter(
            g,
            fix.subgroup.elems().map(|x| g.encode(g.mul(x, fix.point))),
        );
        let hgh = product_set(&hg, &fix.subgroup).unwrap();
        assert_eq!(hgh.card(), 100);
        assert!(hgh.is_subset_of(&aaa));
    }

    #[test]
    fn ball_examples() {
        let g = ctx(5);
        let a = knop(g);
        let mut tower = BallTower::new(&a);
        let a1 = tower.ball(1).clone();
        // A₁ = A ∪ A⁻¹ ∪ {I}, exactly
        let expect = a.union(&a.inverse_set()).unwrap().with_elem(g.identity());
        assert_eq!(a1, expect);
        assert_eq!(a1.card(), 5);
        assert_eq!(tower.ball(2).card(), 17);
        assert_eq!(tower.ball(3).card(), 43);
        // oracle agreement
        let oracle = ball_oracle(g, &a, 2);
        assert_eq!(oracle.len(), 17);
    }

    #[test]
    fn ball_monotone_random_p7() {
        let g = ctx(7);
        let mut rng = trial_rng(12, 0);
        for _ in 0..5 {
            let a = random_subset(g, 3, &mut rng);
            let mut tower = BallTower::new(&a);
            for r in 1..6 {
                let cur = tower.ball(r).clone();
                let next = tower.ball(r + 1);
                assert!(cur.is_subset_of(next));
            }
            let oracle = ball_oracle(g, &a, 4);
            assert_eq!(tower.ball(4).card() as usize, oracle.len());
        }
    }

    #[test]
    fn ruzsa_distance_examples() {
        let g = ctx(5);
        let h = borel_subgroup(g);
        assert_eq!(ruzsa_distance(&h, &h).unwrap(), 0.0);
        let id = GroupSet::from_elems(g, &[g.identity()]);
        assert_eq!(ruzsa_distance(&id, &id).unwrap(), 0.0);
        assert!(ruzsa_distance(&GroupSet::empty(g), &h).is_err());
    }

    #[test]
    fn ruzsa_triangle_inequality_random_p7() {
        // d(A,C) ≤ d(A,B) + d(B,C) via the exact injection form
        // |AC⁻¹|·|B| ≤ |AB⁻¹|·|BC⁻¹|.
        let g = ctx(7);
        let mut rng = trial_rng(13, 0);
        for _ in 0..50 {
            let a = random_subset(g, rng.random_range(1..15), &mut rng);
            let b = random_subset(g, rng.random_range(1..15), &mut rng);
            let c = random_subset(g, rng.random_range(1..15), &mut rng);
            let ac = product_set(&a, &c.inverse_set()).unwrap().card();
            let ab = product_set(&a, &b.inverse_set()).unwrap().card();
            let bc = product_set(&b, &c.inverse_set()).unwrap().card();
            assert!(ac * b.card() <= ab * bc);
            let (da_c, da_b, db_c) = (
                ruzsa_distance(&a, &c).unwrap(),
                ruzsa_distance(&a, &b).unwrap(),
                ruzsa_distance(&b, &c).unwrap(),
            );
            assert!(da_c <= da_b + db_c + 1e-12);
        }
    }

    #[test]
    fn cover_subgroup_case() {
        // For B a subgroup, B₂ = B and the representatives enumerate the
        // cosets of B meeting A.
        let g = ctx(5);
        let b = borel_subgroup(g);
        let mut rng = trial_rng(14, 0);
        let a = random_subset(g, 30, &mut rng);
        let out = ruzsa_cover(&a, &b).unwrap();
        assert!(out.covers && out.bound_holds);
        let cosets: HashSet<Vec<u64>> = a
            .elems()
            .map(|x| {
                let mut coset: Vec<u64> = b.elems().map(|h| g.encode(g.mul(x, h))).collect();
                coset.sort_unstable();
                coset
            })
            .collect();
        assert_eq!(out.reps.len(), cosets.len());
    }

    #[test]
    fn cover_knop_ball_and_containment() {
        let g = ctx(7);
        let a2 = ball(&knop(g), 2);
        let out = ruzsa_cover(&a2, &a2).unwrap();
        assert!(out.covers);
        assert!(out.bound_holds);
        // A ⊆ B case: a single representative suffices
        let b = borel_subgroup(g);
        let ids: Vec<u64> = b.to_sorted_indices();
        let inside = GroupSet::from_index_iter(g, ids.iter().step_by(9).copied());
        let out2 = ruzsa_cover(&inside, &b).unwrap();
        assert_eq!(out2.reps.len(), 1);
        assert!(out2.covers && out2.bound_holds);
    }

    #[test]
    fn generates_examples() {
        let g = ctx(5);
        let (gen, cl) = generates(&knop(g), DEFAULT_CLOSURE_CAP).unwrap();
        assert!(gen);
        assert_eq!(cl.card(), 120);
        let (gen_h, _) = generates(&borel_subgroup(g), DEFAULT_CLOSURE_CAP).unwrap();
        assert!(!gen_h);
        let id_only = GroupSet::from_elems(g, &[g.identity()]);
        assert!(!generates(&id_only, DEFAULT_CLOSURE_CAP).unwrap().0);
        // cap exceeded is an explicit error
        assert!(matches!(
            closure(&knop(g), 10),
            Err(GsetError::ClosureUndecided { .. })
        ));
    }

    #[test]
    fn furcht_chain_random_generating() {
        // |A_n|/|A| ≤ (|A₃|/|A|)^{n−2} for n ∈ {4,5,6}, exact integers.
        for p in [5u64, 7, 11] {
            let g = ctx(p);
            let mut rng = trial_rng(16, p);
            for _ in 0..5 {
                let a = random_generating_set(g, 3, &mut rng, DEFAULT_CLOSURE_CAP).unwrap();
                let mut tower = BallTower::new(&a);
                let a3 = tower.ball(3).card() as u128;
                let base = a.card() as u128;
                for n in 4usize..=6 {
                    let an = tower.ball(n).card() as u128;
                    assert!(
                        an * base.pow(n as u32 - 3) <= a3.pow(n as u32 - 2),
                        "p={p} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn eq_2_4_random() {
        // d(A,A) ≤ 2 d(A,A⁻¹) ⟺ |AA⁻¹|·|A| ≤ |AA|².
        let g = ctx(7);
        let mut rng = trial_rng(17, 0);
        for _ in 0..50 {
            let a = random_subset(g, rng.random_range(1..25), &mut rng);
            let aainv = product_set(&a, &a.inverse_set()).unwrap().card() as u128;
            let aa = product_set(&a, &a).unwrap().card() as u128;
            assert!(aainv * a.card() as u128 <= aa * aa);
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let g = ctx(11);
        let mut rng = trial_rng(18, 0);
        let a = random_subset(g, 40, &mut rng);
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 40 * 8);
        let back = GroupSet::read_binary(g, &mut buf.as_slice()).unwrap();
        assert_eq!(a, back);
        let js = a.to_json();
        let back2 = GroupSet::from_json(g, &js).unwrap();
        assert_eq!(a, back2);
        assert!(GroupSet::from_json(g, "[999999999]").is_err());
    }

    #[test]
    fn word_eval_and_provenance() {
        let g = ctx(7);
        let x = g.new_elem(1, 1, 0, 1).unwrap();
        let y = g.new_elem(1, 0, 1, 1).unwrap();
        let w = Word {
            factors: vec![
                WordFactor {
                    index: g.encode(x),
                    inverted: false,
                },
                WordFactor {
                    index: g.encode(y),
                    inverted: true,
                },
            ],
        };
        assert_eq!(w.eval(g).unwrap(), g.mul(x, g.inv(y)));
        assert_eq!(w.inverse().eval(g).unwrap(), g.inv(w.eval(g).unwrap()));
        assert_eq!(Word::empty().eval(g).unwrap(), g.identity());
        let a = knop(g);
        assert!(w.supported_on(&a));
        let json = w.to_json(context_hash(g, &a));
        assert!(json.contains("factors"));
    }

    #[test]
    fn context_mismatch_detected() {
        let g5 = ctx(5);
        let g7 = ctx(7);
        let a = knop(g5);
        let b = knop(g7);
        assert!(matches!(
            product_set(&a, &b),
            Err(GsetError::ContextMismatch(5, 7))
        ));
    }
}
