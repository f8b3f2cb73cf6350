//! Exact arithmetic in 𝔽_p and its quadratic extension 𝔽_{p²}.
//!
//! The modulus lives in a [`PrimeField`] context rather than in each
//! element, so elements stay word-sized. 𝔽_{p²} is realized as
//! 𝔽_p(ω) with ω² = ν, ν the least quadratic non-residue mod p — a
//! deterministic choice, so eigendata downstream is reproducible.

use crate::arith::{is_prime_u64, mod_inv, mod_mul, mod_pow};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("modulus {0} exceeds the desk-scale cap 2^31")]
    ModulusTooLarge(u64),
    #[error("inverse of zero")]
    ZeroInverse,
}

/// Residue in [0, p). The modulus is carried by the [`PrimeField`] context.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FpElem(u64);

impl FpElem {
    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// x + yω with ω² = ν; closed under the field operations of 𝔽_{p²}.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fq2Elem {
    x: FpElem,
    y: FpElem,
}

impl Fq2Elem {
    #[inline]
    pub fn x(self) -> FpElem {
        self.x
    }

    #[inline]
    pub fn y(self) -> FpElem {
        self.y
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// True iff the element lies in the base field (zero ω-part).
    #[inline]
    pub fn is_base(self) -> bool {
        self.y.is_zero()
    }

    /// Packs (x, y) into a single index in [0, p²); used for dense sets.
    #[inline]
    pub fn pack(self, p: u64) -> u64 {
        self.x.0 * p + self.y.0
    }
}

/// Context for 𝔽_p and 𝔽_{p²}; immutable, `Copy`, and safe to share.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    nu: u64,
}

impl PrimeField {
    /// Validates that `p` is an odd prime below 2³¹ and locates the least
    /// quadratic non-residue ν by linear scan with Euler's criterion.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p >= 1 << 31 {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if p < 3 || !is_prime_u64(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        let mut nu = 2;
        while mod_pow(nu, (p - 1) / 2, p) == 1 {
            nu += 1;
        }
        Ok(PrimeField { p, nu })
    }

    #[inline]
    pub fn p(self) -> u64 {
        self.p
    }

    /// The least quadratic non-residue ν (= ω²).
    #[inline]
    pub fn nonresidue(self) -> FpElem {
        FpElem(self.nu)
    }

    #[inline]
    pub fn elem(self, v: u64) -> FpElem {
        FpElem(v % self.p)
    }

    #[inline]
    pub fn elem_i64(self, v: i64) -> FpElem {
        FpElem(v.rem_euclid(self.p as i64) as u64)
    }

    #[inline]
    pub fn zero(self) -> FpElem {
        FpElem(0)
    }

    #[inline]
    pub fn one(self) -> FpElem {
        FpElem(1)
    }

    #[inline]
    pub fn add(self, a: FpElem, b: FpElem) -> FpElem {
        let s = a.0 + b.0;
        FpElem(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(self, a: FpElem, b: FpElem) -> FpElem {
        FpElem(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    #[inline]
    pub fn neg(self, a: FpElem) -> FpElem {
        FpElem(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    #[inline]
    pub fn mul(self, a: FpElem, b: FpElem) -> FpElem {
        FpElem(mod_mul(a.0, b.0, self.p))
    }

    pub fn inv(self, a: FpElem) -> Result<FpElem, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(FpElem(mod_inv(a.0, self.p)))
    }

    pub fn pow(self, a: FpElem, e: u64) -> FpElem {
        FpElem(mod_pow(a.0, e, self.p))
    }

    /// Euler criterion: 0 for zero, 1 for residues, -1 for non-residues.
    pub fn legendre(self, a: FpElem) -> i32 {
        if a.0 == 0 {
            return 0;
        }
        if mod_pow(a.0, (self.p - 1) / 2, self.p) == 1 {
            1
        } else {
            -1
        }
    }

    /// Tonelli–Shanks square root; returns the canonical root, i.e. the
    /// smaller of {r, p−r}, or None for non-residues.
    pub fn sqrt(self, a: FpElem) -> Option<FpElem> {
        let p = self.p;
        if a.0 == 0 {
            return Some(FpElem(0));
        }
        if self.legendre(a) != 1 {
            return None;
        }
        let r = if p % 4 == 3 {
            mod_pow(a.0, (p + 1) / 4, p)
        } else {
            // Tonelli–Shanks, using the context's deterministic non-residue.
            let mut q = p - 1;
            let mut s = 0u32;
            while q % 2 == 0 {
                q /= 2;
                s += 1;
            }
            let mut m = s;
            let mut c = mod_pow(self.nu, q, p);
            let mut t = mod_pow(a.0, q, p);
            let mut r = mod_pow(a.0, (q + 1) / 2, p);
            while t != 1 {
                let mut i = 0u32;
                let mut t2 = t;
                while t2 != 1 {
                    t2 = mod_mul(t2, t2, p);
                    i += 1;
                }
                let b = mod_pow(c, 1 << (m - i - 1), p);
                m = i;
                c = mod_mul(b, b, p);
                t = mod_mul(t, c, p);
                r = mod_mul(r, b, p);
            }
            r
        };
        Some(FpElem(r.min(p - r)))
    }

    // ------------------------------------------------------------------
    // 𝔽_{p²} = 𝔽_p(ω), ω² = ν
    // ------------------------------------------------------------------

    #[inline]
    pub fn ext(self, x: FpElem, y: FpElem) -> Fq2Elem {
        Fq2Elem { x, y }
    }

    #[inline]
    pub fn ext_base(self, x: FpElem) -> Fq2Elem {
        Fq2Elem { x, y: FpElem(0) }
    }

    #[inline]
    pub fn ext_zero(self) -> Fq2Elem {
        self.ext_base(FpElem(0))
    }

    #[inline]
    pub fn ext_one(self) -> Fq2Elem {
        self.ext_base(FpElem(1))
    }

    /// ω itself.
    #[inline]
    pub fn omega(self) -> Fq2Elem {
        Fq2Elem {
            x: FpElem(0),
            y: FpElem(1),
        }
    }

    #[inline]
    pub fn ext_add(self, a: Fq2Elem, b: Fq2Elem) -> Fq2Elem {
        Fq2Elem {
            x: self.add(a.x, b.x),
            y: self.add(a.y, b.y),
        }
    }

    #[inline]
    pub fn ext_sub(self, a: Fq2Elem, b: Fq2Elem) -> Fq2Elem {
        Fq2Elem {
            x: self.sub(a.x, b.x),
            y: self.sub(a.y, b.y),
        }
    }

    #[inline]
    pub fn ext_neg(self, a: Fq2Elem) -> Fq2Elem {
        Fq2Elem {
            x: self.neg(a.x),
            y: self.neg(a.y),
        }
    }

    #[inline]
    pub fn ext_mul(self, a: Fq2Elem, b: Fq2Elem) -> Fq2Elem {
        // (x1 + y1ω)(x2 + y2ω) = x1x2 + ν y1y2 + (x1y2 + x2y1)ω
        let nu = FpElem(self.nu);
        Fq2Elem {
            x: self.add(self.mul(a.x, b.x), self.mul(nu, self.mul(a.y, b.y))),
            y: self.add(self.mul(a.x, b.y), self.mul(a.y, b.x)),
        }
    }

    /// Conjugate x − yω (the Frobenius z ↦ z^p).
    #[inline]
    pub fn ext_conj(self, a: Fq2Elem) -> Fq2Elem {
        Fq2Elem {
            x: a.x,
            y: self.neg(a.y),
        }
    }

    /// Norm z·z̄ = x² − νy², landing in the base field.
    #[inline]
    pub fn ext_norm(self, a: Fq2Elem) -> FpElem {
        let nu = FpElem(self.nu);
        self.sub(self.mul(a.x, a.x), self.mul(nu, self.mul(a.y, a.y)))
    }

    pub fn ext_inv(self, a: Fq2Elem) -> Result<Fq2Elem, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        // z⁻¹ = z̄ / N(z); N(z) ≠ 0 for z ≠ 0 since ν is a non-residue.
        let n_inv = self.inv(self.ext_norm(a))?;
        let conj = self.ext_conj(a);
        Ok(Fq2Elem {
            x: self.mul(conj.x, n_inv),
            y: self.mul(conj.y, n_inv),
        })
    }

    pub fn ext_pow(self, a: Fq2Elem, mut e: u64) -> Fq2Elem {
        let mut acc = self.ext_one();
        let mut base = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.ext_mul(acc, base);
            }
            base = self.ext_mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Square root in 𝔽_{p²}. A nonzero z is a square there iff N(z) is a
    /// residue in 𝔽_p; every base-field element qualifies. Returns the
    /// canonical root: the lexicographically smaller of {w, −w} by (x, y).
    pub fn ext_sqrt(self, z: Fq2Elem) -> Option<Fq2Elem> {
        if z.is_zero() {
            return Some(z);
        }
        let root = if z.y.is_zero() {
            // Base-field input: either sqrt in 𝔽_p, or (cω)² = c²ν with
            // c = sqrt(z/ν) (a residue exactly when z is not).
            match self.sqrt(z.x) {
                Some(r) => self.ext_base(r),
                None => {
                    let c = self
                        .sqrt(self.mul(z.x, self.inv(FpElem(self.nu)).unwrap()))
                        .expect("non-residue / non-residue is a residue");
                    self.ext(FpElem(0), c)
                }
            }
        } else {
            // w = u + vω with u² + νv² = x and 2uv = y. Then
            // u² = (x ± s)/2 with s = sqrt(N(z)); exactly one sign gives a
            // residue, because the two candidates multiply to νy²/4.
            let s = self.sqrt(self.ext_norm(z))?;
            let half = self.inv(FpElem(2)).unwrap();
            let cand1 = self.mul(self.add(z.x, s), half);
            let cand2 = self.mul(self.sub(z.x, s), half);
            let u = match self.sqrt(cand1) {
                Some(u) if !u.is_zero() => u,
                _ => self.sqrt(cand2)?,
            };
            let v = self.mul(z.y, self.inv(self.mul(FpElem(2), u)).ok()?);
            self.ext(u, v)
        };
        debug_assert_eq!(self.ext_mul(root, root), z);
        let neg = self.ext_neg(root);
        Some(if (root.x, root.y) <= (neg.x, neg.y) {
            root
        } else {
            neg
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_moduli() {
        assert_eq!(PrimeField::new(4), Err(FieldError::NotOddPrime(4)));
        assert_eq!(PrimeField::new(2), Err(FieldError::NotOddPrime(2)));
        assert!(PrimeField::new(1 << 31).is_err());
        assert!(PrimeField::new(5).is_ok());
    }

    #[test]
    fn inv_examples() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.inv(f.elem(3)).unwrap(), f.elem(5)); // 3·5 = 15 ≡ 1
        assert_eq!(f.inv(f.elem(1)).unwrap(), f.elem(1));
        assert_eq!(f.inv(f.elem(0)), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn inv_product_check_p1009() {
        let f = PrimeField::new(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = f.elem(rng.random_range(1..1009));
            let inv = f.inv(a).unwrap();
            assert_eq!(f.mul(a, inv), f.one());
            assert_eq!(f.inv(inv).unwrap(), a); // involution
        }
    }

    #[test]
    fn sqrt_examples() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.sqrt(f.elem(2)), Some(f.elem(3))); // 3² = 9 ≡ 2, 3 < 4
        assert_eq!(f.sqrt(f.elem(0)), Some(f.elem(0)));
        assert_eq!(f.sqrt(f.nonresidue()), None);
    }

    #[test]
    fn sqrt_euler_oracle_p1009() {
        // Euler criterion as the independent oracle for residue-ness.
        let f = PrimeField::new(1009).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let a = f.elem(rng.random_range(0..1009));
            let euler_is_square = a.is_zero() || f.legendre(a) == 1;
            match f.sqrt(a) {
                Some(r) => {
                    assert!(euler_is_square);
                    assert_eq!(f.mul(r, r), a);
                    assert!(r.value() <= 1009 - r.value() || a.is_zero());
                }
                None => assert!(!euler_is_square),
            }
        }
    }

    #[test]
    fn sqrt_of_square_is_canonical() {
        let f = PrimeField::new(101).unwrap();
        for a in 0..101u64 {
            let a = f.elem(a);
            let r = f.sqrt(f.mul(a, a)).unwrap();
            assert!(r == a || r == f.neg(a));
        }
    }

    #[test]
    fn ext_omega_squares_to_nu() {
        for p in [5u64, 7, 13, 101] {
            let f = PrimeField::new(p).unwrap();
            let w2 = f.ext_mul(f.omega(), f.omega());
            assert_eq!(w2, f.ext_base(f.nonresidue()));
        }
    }

    #[test]
    fn ext_inv_product_check_p101() {
        let f = PrimeField::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z = f.ext(f.elem(rng.random_range(0..101)), f.elem(rng.random_range(0..101)));
            if z.is_zero() {
                continue;
            }
            let inv = f.ext_inv(z).unwrap();
            assert_eq!(f.ext_mul(z, inv), f.ext_one());
        }
        assert!(f.ext_inv(f.ext_zero()).is_err());
    }

    #[test]
    fn ext_norm_multiplicative() {
        let f = PrimeField::new(53).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = f.ext(f.elem(rng.random_range(0..53)), f.elem(rng.random_range(0..53)));
            let b = f.ext(f.elem(rng.random_range(0..53)), f.elem(rng.random_range(0..53)));
            assert_eq!(
                f.ext_norm(f.ext_mul(a, b)),
                f.mul(f.ext_norm(a), f.ext_norm(b))
            );
            // norm(z) = z·conj(z)
            let zz = f.ext_mul(a, f.ext_conj(a));
            assert_eq!(zz, f.ext_base(f.ext_norm(a)));
        }
    }

    #[test]
    fn ext_sqrt_base_nonresidue_has_zero_x_part() {
        let f = PrimeField::new(13).unwrap();
        let a = f.ext_base(f.nonresidue());
        let r = f.ext_sqrt(a).unwrap();
        assert!(r.x().is_zero());
        assert_eq!(f.ext_mul(r, r), a);
    }

    #[test]
    fn ext_sqrt_everything_in_fp2_that_is_square() {
        // q = p², squares are exactly {z : N(z) is a residue}; check all of
        // F_49 exhaustively.
        let f = PrimeField::new(7).unwrap();
        for x in 0..7u64 {
            for y in 0..7u64 {
                let z = f.ext(f.elem(x), f.elem(y));
                let is_sq = z.is_zero() || f.legendre(f.ext_norm(z)) == 1;
                match f.ext_sqrt(z) {
                    Some(r) => {
                        assert!(is_sq);
                        assert_eq!(f.ext_mul(r, r), z);
                    }
                    None => assert!(!is_sq),
                }
            }
        }
    }
}
