//! Additive/multiplicative combinatorics over ℤ/pℤ and 𝔽_{p²}: Fourier
//! transform, exact convolution, sumsets, the dilate lemma, sum–product
//! measurement, and the expander-polynomial image sets.
//!
//! Fourier analysis is measurement-only; every certified inequality here
//! is evaluated in exact integer or rational arithmetic, so there are no
//! tolerance disputes on theorem checks.

use crate::arith::f64_to_dyadic;
use crate::bits::Bitset;
use crate::ffield::{Fq2Elem, PrimeField};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Direct-DFT cap; larger moduli are out of scope for this module.
pub const DFT_MODULUS_CAP: u64 = 4099;

/// Cap on p for dense 𝔽_{p²} work (tables of size p²).
pub const FQ_MODULUS_CAP: u64 = 1021;

#[derive(Debug, Error)]
pub enum ZpError {
    #[error("operands live over different moduli ({0} vs {1})")]
    ModulusMismatch(u64, u64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("modulus {0} exceeds the direct-DFT cap {DFT_MODULUS_CAP}")]
    DftModulusTooLarge(u64),
    #[error("modulus {0} exceeds the dense F_q cap {FQ_MODULUS_CAP}")]
    FqModulusTooLarge(u64),
}

// --------------------------------------------------------------------------
// ZpSet
// --------------------------------------------------------------------------

/// Subset of ℤ/pℤ as a membership bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZpSet {
    p: u64,
    bits: Bitset,
}

impl ZpSet {
    pub fn empty(p: u64) -> ZpSet {
        ZpSet {
            p,
            bits: Bitset::new(p),
        }
    }

    pub fn from_members(p: u64, members: impl IntoIterator<Item = u64>) -> ZpSet {
        let mut s = Self::empty(p);
        for m in members {
            s.bits.set(m % p);
        }
        s
    }

    /// 𝔽_p^* = {1, …, p−1}.
    pub fn full_star(p: u64) -> ZpSet {
        Self::from_members(p, 1..p)
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn card(&self) -> u64 {
        self.bits.count()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.card() == 0
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        self.bits.get(x % self.p)
    }

    pub fn insert(&mut self, x: u64) -> bool {
        self.bits.set(x % self.p)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones()
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }
}

fn check_p(a: &ZpSet, b: &ZpSet) -> Result<(), ZpError> {
    if a.p != b.p {
        return Err(ZpError::ModulusMismatch(a.p, b.p));
    }
    Ok(())
}

/// {a + b}.
pub fn add_sets(a: &ZpSet, b: &ZpSet) -> ZpSet {
    debug_assert_eq!(a.p, b.p);
    let p = a.p;
    let mut out = ZpSet::empty(p);
    for x in a.iter() {
        for y in b.iter() {
            out.insert(x + y);
        }
    }
    out
}

/// {a − b}.
pub fn sub_sets(a: &ZpSet, b: &ZpSet) -> ZpSet {
    debug_assert_eq!(a.p, b.p);
    let p = a.p;
    let mut out = ZpSet::empty(p);
    for x in a.iter() {
        for y in b.iter() {
            out.insert(x + p - y);
        }
    }
    out
}

/// {a · b mod p}.
pub fn mul_sets(a: &ZpSet, b: &ZpSet) -> ZpSet {
    debug_assert_eq!(a.p, b.p);
    let p = a.p;
    let mut out = ZpSet::empty(p);
    for x in a.iter() {
        for y in b.iter() {
            out.insert(x * y % p);
        }
    }
    out
}

/// ξ·A.
pub fn dilate(a: &ZpSet, xi: u64) -> ZpSet {
    let p = a.p;
    ZpSet::from_members(p, a.iter().map(|x| x * (xi % p) % p))
}

/// −A.
pub fn negate(a: &ZpSet) -> ZpSet {
    let p = a.p;
    ZpSet::from_members(p, a.iter().map(|x| (p - x) % p))
}

/// Exact integer convolution (A∗B)(x) = |{(y,z) ∈ A×B : y + z = x}|.
pub fn convolve(a: &ZpSet, b: &ZpSet) -> Result<Vec<u64>, ZpError> {
    check_p(a, b)?;
    let p = a.p as usize;
    let mut counts = vec![0u64; p];
    for x in a.iter() {
        for y in b.iter() {
            counts[((x + y) % a.p) as usize] += 1;
        }
    }
    Ok(counts)
}

// --------------------------------------------------------------------------
// Fourier transform (measurement only)
// --------------------------------------------------------------------------

/// Complex-valued density on ℤ/pℤ.
#[derive(Clone, Debug)]
pub struct DensityFn {
    pub p: u64,
    pub values: Vec<Complex64>,
}

impl DensityFn {
    pub fn from_set(a: &ZpSet) -> DensityFn {
        let mut values = vec![Complex64::new(0.0, 0.0); a.p as usize];
        for x in a.iter() {
            values[x as usize] = Complex64::new(1.0, 0.0);
        }
        DensityFn { p: a.p, values }
    }

    pub fn delta(p: u64, at: u64) -> DensityFn {
        let mut values = vec![Complex64::new(0.0, 0.0); p as usize];
        values[(at % p) as usize] = Complex64::new(1.0, 0.0);
        DensityFn { p, values }
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum()
    }

    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Direct DFT: f̂(y) = Σ_x f(x) e^{−2πixy/p}.
pub fn fourier(f: &DensityFn) -> Result<DensityFn, ZpError> {
    let p = f.p;
    if p > DFT_MODULUS_CAP {
        return Err(ZpError::DftModulusTooLarge(p));
    }
    let n = p as usize;
    // one table of p roots; exponent taken mod p
    let twiddle: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / p as f64))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (y, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, &v) in f.values.iter().enumerate() {
            acc += v * twiddle[(x * y) % n];
        }
        *slot = acc;
    }
    Ok(DensityFn { p, values: out })
}

// --------------------------------------------------------------------------
// Dilate lemma: existence of ξ ∈ S with |A + ξA| large
// --------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SorgeOutcome {
    /// Chosen ξ: maximizes |A + ξA| over S, ties broken by smallest ξ.
    pub xi: u64,
    pub sumset_card: u64,
    /// The bound (1/p + p/(|S||A|²))⁻¹ as the exact fraction num/den.
    pub bound_num: u64,
    pub bound_den: u64,
    /// sumset_card·den ≥ num, exactly.
    pub bound_holds: bool,
    /// Number of ξ ∈ S with |A + ξA| ≥ c·bound (exact dyadic c).
    pub qualifying: u64,
    pub s_card: u64,
    /// qualifying ≥ (1 − c)|S|, exactly.
    pub count_holds: bool,
}

/// Scans all ξ ∈ S, returns the maximizer of |A + ξA| plus the exact
/// certificate |A + ξA| ≥ (1/p + p/(|S||A|²))⁻¹ and the count of ξ
/// achieving the c-scaled bound (which must reach (1−c)|S|).
pub fn sorge_find_xi(a: &ZpSet, s: &ZpSet, c: f64) -> Result<SorgeOutcome, ZpError> {
    check_p(a, s)?;
    if a.is_empty() || s.is_empty() {
        return Err(ZpError::Hypothesis("A and S must be nonempty".into()));
    }
    if s.contains(0) {
        return Err(ZpError::Hypothesis("0 lies in S".into()));
    }
    let (cm, ce) =
        f64_to_dyadic(c).ok_or_else(|| ZpError::Hypothesis(format!("c = {c} not in (0,1]")))?;
    if c > 1.0 {
        return Err(ZpError::Hypothesis(format!("c = {c} not in (0,1]")));
    }
    let p = a.p as u128;
    let sa2 = s.card() as u128 * (a.card() as u128).pow(2);
    // bound = p·|S||A|² / (|S||A|² + p²)
    let bound_num = p * sa2;
    let bound_den = sa2 + p * p;

    let mut best: Option<(u64, u64)> = None; // (card, xi)
    let mut qualifying = 0u64;
    for xi in s.iter() {
        let card = add_sets(a, &dilate(a, xi)).card();
        // |X| ≥ c·num/den ⟺ |X|·den·2^{-ce} ≥ cm·num  (ce ≤ 0)
        let lhs = (card as u128 * bound_den).checked_shl((-ce) as u32);
        let qualifies = match lhs {
            Some(v) => v >= cm * bound_num,
            None => true, // astronomically small c: the scaled bound is < 1
        };
        if qualifies {
            qualifying += 1;
        }
        match best {
            Some((bc, _)) if bc >= card => {}
            _ => best = Some((card, xi)),
        }
    }
    let (sumset_card, xi) = best.unwrap();
    let bound_holds = sumset_card as u128 * bound_den >= bound_num;
    // qualifying ≥ (1−c)|S| ⟺ (|S| − qualifying)·2^{-ce} ≤ cm·|S|
    let misses = (s.card() - qualifying) as u128;
    let count_holds = match misses.checked_shl((-ce) as u32) {
        Some(v) => v <= cm * s.card() as u128,
        None => misses == 0,
    };
    Ok(SorgeOutcome {
        xi,
        sumset_card,
        bound_num: bound_num as u64,
        bound_den: bound_den as u64,
        bound_holds,
        qualifying,
        s_card: s.card(),
        count_holds,
    })
}

// --------------------------------------------------------------------------
// Sum–product measurement
// --------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SumProductStats {
    pub card: u64,
    pub sum_card: u64,
    pub prod_card: u64,
    /// log(max(|A+A|, |A·A|)) / log|A| − 1; measured, never asserted.
    pub exponent: f64,
}

pub fn sumproduct_stats(a: &ZpSet) -> Result<SumProductStats, ZpError> {
    if a.contains(0) {
        return Err(ZpError::Hypothesis("A must avoid 0".into()));
    }
    if a.card() < 2 {
        return Err(ZpError::Hypothesis("|A| must be at least 2".into()));
    }
    let sum_card = add_sets(a, a).card();
    let prod_card = mul_sets(a, a).card();
    let max = sum_card.max(prod_card) as f64;
    Ok(SumProductStats {
        card: a.card(),
        sum_card,
        prod_card,
        exponent: max.ln() / (a.card() as f64).ln() - 1.0,
    })
}

// --------------------------------------------------------------------------
// Dense subsets of 𝔽_q, q = p², and multiplicative balls
// --------------------------------------------------------------------------

/// Subset of 𝔽_{p²} as a bitset over packed indices x·p + y. Base-field
/// sets embed with zero ω-part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqSet {
    field: PrimeField,
    bits: Bitset,
}

impl FqSet {
    pub fn empty(field: PrimeField) -> Result<FqSet, ZpError> {
        let p = field.p();
        if p > FQ_MODULUS_CAP {
            return Err(ZpError::FqModulusTooLarge(p));
        }
        Ok(FqSet {
            field,
            bits: Bitset::new(p * p),
        })
    }

    pub fn from_elems(
        field: PrimeField,
        elems: impl IntoIterator<Item = Fq2Elem>,
    ) -> Result<FqSet, ZpError> {
        let mut s = Self::empty(field)?;
        for e in elems {
            s.insert(e);
        }
        Ok(s)
    }

    /// Embeds a base-field set.
    pub fn from_zpset(field: PrimeField, a: &ZpSet) -> Result<FqSet, ZpError> {
        Self::from_elems(field, a.iter().map(|x| field.ext_base(field.elem(x))))
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn card(&self) -> u64 {
        self.bits.count()
    }

    pub fn insert(&mut self, e: Fq2Elem) -> bool {
        self.bits.set(e.pack(self.field.p()))
    }

    pub fn contains(&self, e: Fq2Elem) -> bool {
        self.bits.get(e.pack(self.field.p()))
    }

    pub fn iter(&self) -> impl Iterator<Item = Fq2Elem> + '_ {
        let p = self.field.p();
        let f = self.field;
        self.bits
            .iter_ones()
            .map(move |i| f.ext(f.elem(i / p), f.elem(i % p)))
    }

    pub fn contains_zero(&self) -> bool {
        self.bits.get(0)
    }
}

/// Multiplicative ball: products of at most r elements of A ∪ A⁻¹; always
/// contains 1 and is closed under inversion.
#[derive(Clone, Debug)]
pub struct MulBall {
    pub base_card: u64,
    pub radius: usize,
    pub members: FqSet,
}

pub fn mul_ball(base: &FqSet, radius: usize) -> Result<MulBall, ZpError> {
    if base.contains_zero() {
        return Err(ZpError::Hypothesis("base set must lie in F_q^*".into()));
    }
    if base.card() == 0 {
        return Err(ZpError::Hypothesis("base set must be nonempty".into()));
    }
    let f = base.field;
    let mut m1: Vec<Fq2Elem> = vec![f.ext_one()];
    for e in base.iter() {
        m1.push(e);
        m1.push(f.ext_inv(e).unwrap());
    }
    let mut members = FqSet::from_elems(f, m1.iter().copied())?;
    let mut frontier: Vec<Fq2Elem> = members.iter().collect();
    for _ in 1..radius {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &x in &frontier {
            for &y in &m1 {
                let z = f.ext_mul(x, y);
                if members.insert(z) {
                    next.push(z);
                }
            }
        }
        frontier = next;
    }
    Ok(MulBall {
        base_card: base.card(),
        radius,
        members,
    })
}

/// Reads an 𝔽_q set that lies inside the embedded base field back into a
/// ZpSet; None if any element has a nonzero ω-part.
pub fn trace_like_set(s: &FqSet) -> Option<ZpSet> {
    let p = s.field().p();
    let mut out = ZpSet::empty(p);
    for e in s.iter() {
        if !e.is_base() {
            return None;
        }
        out.insert(e.x().value());
    }
    Some(out)
}

/// w(z) = z + z⁻¹, the trace-like map behind both polynomial families.
pub fn w_map(f: PrimeField, z: Fq2Elem) -> Fq2Elem {
    f.ext_add(z, f.ext_inv(z).expect("w_map requires nonzero input"))
}

#[derive(Clone, Debug)]
pub struct ExpanderImage {
    pub base_card: u64,
    pub ball_card: u64,
    pub image: FqSet,
    /// log|image| / log|A| − 1; measured, never asserted.
    pub exponent: f64,
}

/// {w(x)·w(y) : x, y ∈ A₂}. Decomposes as the product set of w(A₂) with
/// itself, since the two factors are uncoupled.
pub fn expander_amtar(base: &FqSet) -> Result<ExpanderImage, ZpError> {
    let f = base.field;
    let ball = mul_ball(base, 2)?;
    let w_vals: Vec<Fq2Elem> = {
        let mut set = FqSet::empty(f)?;
        for z in ball.members.iter() {
            set.insert(w_map(f, z));
        }
        set.iter().collect()
    };
    let mut image = FqSet::empty(f)?;
    for &u in &w_vals {
        for &v in &w_vals {
            image.insert(f.ext_mul(u, v));
        }
    }
    Ok(finish_image(base.card(), ball.members.card(), image))
}

/// {a₁(xy + x⁻¹y⁻¹) + a₂(x⁻¹y + xy⁻¹) : x, y ∈ A₂₀}, i.e.
/// a₁·w(xy) + a₂·w(x⁻¹y) over the coupled pair loop.
pub fn expander_corz(
    base: &FqSet,
    a1: Fq2Elem,
    a2: Fq2Elem,
) -> Result<ExpanderImage, ZpError> {
    if a1.is_zero() || a2.is_zero() {
        return Err(ZpError::Hypothesis("corz coefficients must be nonzero".into()));
    }
    let f = base.field;
    let p = f.p();
    let ball = mul_ball(base, 20)?;
    let elems: Vec<Fq2Elem> = ball.members.iter().collect();
    // a₁·w and a₂·w cached per ball element, addressed by packed index
    let mut a1w = vec![None; (p * p) as usize];
    let mut a2w = vec![None; (p * p) as usize];
    for &z in &elems {
        let w = w_map(f, z);
        a1w[z.pack(p) as usize] = Some(f.ext_mul(a1, w));
        a2w[z.pack(p) as usize] = Some(f.ext_mul(a2, w));
    }
    let mut image = FqSet::empty(f)?;
    for &x in &elems {
        let xinv = f.ext_inv(x).unwrap();
        for &y in &elems {
            let xy = f.ext_mul(x, y);
            let xinv_y = f.ext_mul(xinv, y);
            // xy and x⁻¹y stay inside the ball (radius 20 is closed under
            // one extra multiplication only up to 40, so compute directly
            // when the cache misses)
            let t1 = a1w[xy.pack(p) as usize]
                .unwrap_or_else(|| f.ext_mul(a1, w_map(f, xy)));
            let t2 = a2w[xinv_y.pack(p) as usize]
                .unwrap_or_else(|| f.ext_mul(a2, w_map(f, xinv_y)));
            image.insert(f.ext_add(t1, t2));
        }
    }
    Ok(finish_image(base.card(), ball.members.card(), image))
}

fn finish_image(base_card: u64, ball_card: u64, image: FqSet) -> ExpanderImage {
    let exponent = if base_card > 1 {
        (image.card() as f64).ln() / (base_card as f64).ln() - 1.0
    } else {
        0.0
    };
    ExpanderImage {
        base_card,
        ball_card,
        image,
        exponent,
    }
}
