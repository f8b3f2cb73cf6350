//! SL₂(𝔽_p): elements, group operations, traces, eigendata over 𝔽_{p²},
//! conjugacy-class identification, and a perfect index in [0, p(p²−1))
//! that makes bitset-backed subsets possible.

use crate::ffield::{FieldError, FpElem, Fq2Elem, PrimeField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Sl2Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("determinant is {0}, expected 1")]
    BadDeterminant(u64),
    #[error("canonical index {idx} out of range [0, {order})")]
    IndexOutOfRange { idx: u64, order: u64 },
    #[error("cannot parse {0:?} as a matrix literal \"a,b;c,d\"")]
    BadLiteral(String),
}

/// Row-major 2×2 matrix over 𝔽_p with determinant 1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SL2Elem {
    pub a: FpElem,
    pub b: FpElem,
    pub c: FpElem,
    pub d: FpElem,
}

/// Group context: wraps the field and provides all SL₂ operations.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SL2Ctx {
    f: PrimeField,
}

/// Eigenvalue structure classes of an SL₂ element.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElemKind {
    /// Distinct eigenvalues in 𝔽_p.
    Split,
    /// Distinct eigenvalues in 𝔽_{p²} \ 𝔽_p.
    NonSplit,
    /// Trace ±2, not ±I: a single projective eigenvector.
    Parabolic,
    /// ±I.
    Central,
}

/// Projective vector over 𝔽_{p²}, scaled so the first nonzero coordinate
/// is 1 — comparable across calls.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjVec {
    pub x: Fq2Elem,
    pub y: Fq2Elem,
}

/// Eigenvalues and canonical eigenvectors of an SL₂ element over 𝔽_{p²}.
/// For parabolic elements both slots hold the unique projective
/// eigenvector; for central elements they hold the standard basis.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EigenData {
    pub values: [Fq2Elem; 2],
    pub vectors: [ProjVec; 2],
    pub kind: ElemKind,
}

/// Refinement of the trace for the classes it does not separate.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassTag {
    /// Trace ∉ {±2}: the trace alone identifies the class.
    Regular,
    /// ±I.
    Central,
    /// Trace ±2, Jordan off-diagonal entry a quadratic residue.
    UnipotentResidue,
    /// Trace ±2, Jordan off-diagonal entry a non-residue.
    UnipotentNonResidue,
}

/// Conjugacy-class identifier: equal iff the elements are conjugate in
/// SL₂(𝔽_p).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConjClassId {
    pub trace: u64,
    pub tag: ClassTag,
}

impl SL2Ctx {
    pub fn new(p: u64) -> Result<Self, Sl2Error> {
        Ok(SL2Ctx {
            f: PrimeField::new(p)?,
        })
    }

    #[inline]
    pub fn field(self) -> PrimeField {
        self.f
    }

    #[inline]
    pub fn p(self) -> u64 {
        self.f.p()
    }

    /// |SL₂(𝔽_p)| = p(p² − 1).
    #[inline]
    pub fn order(self) -> u64 {
        let p = self.f.p();
        p * (p * p - 1)
    }

    #[inline]
    pub fn identity(self) -> SL2Elem {
        SL2Elem {
            a: self.f.one(),
            b: self.f.zero(),
            c: self.f.zero(),
            d: self.f.one(),
        }
    }

    pub fn det(self, g: SL2Elem) -> FpElem {
        self.f.sub(self.f.mul(g.a, g.d), self.f.mul(g.b, g.c))
    }

    /// Checked constructor from raw residues.
    pub fn new_elem(self, a: u64, b: u64, c: u64, d: u64) -> Result<SL2Elem, Sl2Error> {
        let g = SL2Elem {
            a: self.f.elem(a),
            b: self.f.elem(b),
            c: self.f.elem(c),
            d: self.f.elem(d),
        };
        let det = self.det(g);
        if det != self.f.one() {
            return Err(Sl2Error::BadDeterminant(det.value()));
        }
        Ok(g)
    }

    pub fn new_elem_i64(self, a: i64, b: i64, c: i64, d: i64) -> Result<SL2Elem, Sl2Error> {
        let f = self.f;
        self.new_elem(
            f.elem_i64(a).value(),
            f.elem_i64(b).value(),
            f.elem_i64(c).value(),
            f.elem_i64(d).value(),
        )
    }

    #[inline]
    pub fn mul(self, g: SL2Elem, h: SL2Elem) -> SL2Elem {
        let f = self.f;
        let r = SL2Elem {
            a: f.add(f.mul(g.a, h.a), f.mul(g.b, h.c)),
            b: f.add(f.mul(g.a, h.b), f.mul(g.b, h.d)),
            c: f.add(f.mul(g.c, h.a), f.mul(g.d, h.c)),
            d: f.add(f.mul(g.c, h.b), f.mul(g.d, h.d)),
        };
        debug_assert_eq!(self.det(r), f.one());
        r
    }

    /// inv([[a,b],[c,d]]) = [[d,−b],[−c,a]] for determinant 1.
    #[inline]
    pub fn inv(self, g: SL2Elem) -> SL2Elem {
        let f = self.f;
        SL2Elem {
            a: g.d,
            b: f.neg(g.b),
            c: f.neg(g.c),
            d: g.a,
        }
    }

    /// h g h⁻¹.
    #[inline]
    pub fn conj(self, g: SL2Elem, h: SL2Elem) -> SL2Elem {
        self.mul(self.mul(h, g), self.inv(h))
    }

    #[inline]
    pub fn neg(self, g: SL2Elem) -> SL2Elem {
        let f = self.f;
        SL2Elem {
            a: f.neg(g.a),
            b: f.neg(g.b),
            c: f.neg(g.c),
            d: f.neg(g.d),
        }
    }

    #[inline]
    pub fn transpose(self, g: SL2Elem) -> SL2Elem {
        SL2Elem {
            a: g.a,
            b: g.c,
            c: g.b,
            d: g.d,
        }
    }

    #[inline]
    pub fn trace(self, g: SL2Elem) -> FpElem {
        self.f.add(g.a, g.d)
    }

    pub fn is_central(self, g: SL2Elem) -> bool {
        g == self.identity() || g == self.neg(self.identity())
    }

    // ------------------------------------------------------------------
    // Perfect canonical index
    //
    // The first column (a, c) ≠ (0, 0) ranges over p²−1 options; for each,
    // the solutions (b, d) of ad − bc = 1 form a line: one particular
    // solution plus t·(a, c), t ∈ [0, p). idx = colIdx·p + t.
    // ------------------------------------------------------------------

    /// Particular solution (b₀, d₀) of a·d − b·c = 1 for (a, c) ≠ (0, 0).
    #[inline]
    fn particular(self, a: FpElem, c: FpElem) -> (FpElem, FpElem) {
        let f = self.f;
        if !a.is_zero() {
            (f.zero(), f.inv(a).unwrap())
        } else {
            (f.neg(f.inv(c).unwrap()), f.zero())
        }
    }

    #[inline]
    pub fn encode(self, g: SL2Elem) -> u64 {
        let p = self.f.p();
        let col_idx = g.a.value() * p + g.c.value() - 1;
        let (b0, d0) = self.particular(g.a, g.c);
        let f = self.f;
        let t = if !g.a.is_zero() {
            f.mul(f.sub(g.b, b0), f.inv(g.a).unwrap())
        } else {
            f.mul(f.sub(g.d, d0), f.inv(g.c).unwrap())
        };
        col_idx * p + t.value()
    }

    #[inline]
    pub fn decode(self, idx: u64) -> Result<SL2Elem, Sl2Error> {
        if idx >= self.order() {
            return Err(Sl2Error::IndexOutOfRange {
                idx,
                order: self.order(),
            });
        }
        Ok(self.decode_unchecked(idx))
    }

    #[inline]
    pub fn decode_unchecked(self, idx: u64) -> SL2Elem {
        let p = self.f.p();
        let f = self.f;
        let col_idx = idx / p + 1;
        let t = f.elem(idx % p);
        let a = f.elem(col_idx / p);
        let c = f.elem(col_idx % p);
        let (b0, d0) = self.particular(a, c);
        let g = SL2Elem {
            a,
            b: f.add(b0, f.mul(t, a)),
            c,
            d: f.add(d0, f.mul(t, c)),
        };
        debug_assert_eq!(self.det(g), f.one());
        g
    }

    // ------------------------------------------------------------------
    // Eigendata over 𝔽_{p²}
    // ------------------------------------------------------------------

    /// Scales a nonzero vector so its first nonzero coordinate is 1.
    pub fn proj_normalize(self, x: Fq2Elem, y: Fq2Elem) -> ProjVec {
        let f = self.f;
        debug_assert!(!(x.is_zero() && y.is_zero()));
        if !x.is_zero() {
            let s = f.ext_inv(x).unwrap();
            ProjVec {
                x: f.ext_one(),
                y: f.ext_mul(y, s),
            }
        } else {
            ProjVec {
                x: f.ext_zero(),
                y: f.ext_one(),
            }
        }
    }

    /// Solves λ² − tr(g)λ + 1 = 0 over 𝔽_{p²} and recovers canonical
    /// eigenvectors. λ order: the one whose sqrt-discriminant branch is
    /// the canonical root comes first.
    pub fn eigen(self, g: SL2Elem) -> EigenData {
        let f = self.f;
        let tau = self.trace(g);
        let two = f.elem(2);
        if self.is_central(g) {
            let lam = f.ext_base(g.a);
            return EigenData {
                values: [lam, lam],
                vectors: [
                    ProjVec {
                        x: f.ext_one(),
                        y: f.ext_zero(),
                    },
                    ProjVec {
                        x: f.ext_zero(),
                        y: f.ext_one(),
                    },
                ],
                kind: ElemKind::Central,
            };
        }
        if tau == two || tau == f.neg(two) {
            // Parabolic: λ = τ/2 = ±1, unique projective eigenvector.
            let lam = f.ext_base(f.mul(tau, f.inv(two).unwrap()));
            let v = self.eigenvector_for(g, lam);
            return EigenData {
                values: [lam, lam],
                vectors: [v, v],
                kind: ElemKind::Parabolic,
            };
        }
        // Discriminant Δ = τ² − 4; split iff Δ is a residue.
        let disc = f.sub(f.mul(tau, tau), f.elem(4));
        let (sqrt_disc, kind) = match f.sqrt(disc) {
            Some(r) => (f.ext_base(r), ElemKind::Split),
            None => {
                let c = f
                    .sqrt(f.mul(disc, f.inv(f.nonresidue()).unwrap()))
                    .expect("disc/nu is a residue when disc is not");
                (f.ext(f.zero(), c), ElemKind::NonSplit)
            }
        };
        let half = f.ext_base(f.inv(two).unwrap());
        let tau2 = f.ext_base(tau);
        let lam1 = f.ext_mul(f.ext_add(tau2, sqrt_disc), half);
        let lam2 = f.ext_mul(f.ext_sub(tau2, sqrt_disc), half);
        debug_assert_eq!(f.ext_mul(lam1, lam2), f.ext_one());
        EigenData {
            values: [lam1, lam2],
            vectors: [self.eigenvector_for(g, lam1), self.eigenvector_for(g, lam2)],
            kind,
        }
    }

    /// Canonical eigenvector for a known eigenvalue λ of g.
    fn eigenvector_for(self, g: SL2Elem, lam: Fq2Elem) -> ProjVec {
        let f = self.f;
        let b = f.ext_base(g.b);
        let c = f.ext_base(g.c);
        if !g.b.is_zero() {
            // (g − λI) (b, λ − a)ᵗ = 0
            self.proj_normalize(b, f.ext_sub(lam, f.ext_base(g.a)))
        } else if !g.c.is_zero() {
            self.proj_normalize(f.ext_sub(lam, f.ext_base(g.d)), c)
        } else {
            // Diagonal matrix: eigenvectors are the standard basis.
            if f.ext_base(g.a) == lam {
                ProjVec {
                    x: f.ext_one(),
                    y: f.ext_zero(),
                }
            } else {
                ProjVec {
                    x: f.ext_zero(),
                    y: f.ext_one(),
                }
            }
        }
    }

    /// Membership predicate for H_v = {g : v is an eigenvector of g}:
    /// g·v ∥ v over 𝔽_{p²}, i.e. the 2×2 determinant |g·v, v| vanishes.
    pub fn has_eigenvector(self, g: SL2Elem, v: ProjVec) -> bool {
        let f = self.f;
        let gv_x = f.ext_add(
            f.ext_mul(f.ext_base(g.a), v.x),
            f.ext_mul(f.ext_base(g.b), v.y),
        );
        let gv_y = f.ext_add(
            f.ext_mul(f.ext_base(g.c), v.x),
            f.ext_mul(f.ext_base(g.d), v.y),
        );
        f.ext_sub(f.ext_mul(gv_x, v.y), f.ext_mul(gv_y, v.x)).is_zero()
    }

    // ------------------------------------------------------------------
    // Conjugacy classes
    // ------------------------------------------------------------------

    /// Class function separating all conjugacy classes of SL₂(𝔽_p): the
    /// trace, refined at trace ±2 by {±I} vs the two unipotent classes
    /// per sign (residue class of the Jordan off-diagonal entry).
    pub fn conj_class_id(self, g: SL2Elem) -> ConjClassId {
        let f = self.f;
        let tau = self.trace(g);
        let two = f.elem(2);
        let tag = if tau == two || tau == f.neg(two) {
            if self.is_central(g) {
                ClassTag::Central
            } else {
                // u = ±g has trace 2; N = u − I is nilpotent of rank 1.
                // Jordan entry x: if N has lower-left γ ≠ 0, x ≡ −γ⁻¹
                // (mod squares), otherwise x = upper-right entry.
                let u = if tau == two { g } else { self.neg(g) };
                let x = if !u.c.is_zero() {
                    f.neg(f.inv(u.c).unwrap())
                } else {
                    u.b
                };
                debug_assert!(!x.is_zero());
                if f.legendre(x) == 1 {
                    ClassTag::UnipotentResidue
                } else {
                    ClassTag::UnipotentNonResidue
                }
            }
        } else {
            ClassTag::Regular
        };
        ConjClassId {
            trace: tau.value(),
            tag,
        }
    }

    // ------------------------------------------------------------------
    // Text format "a,b;c,d"
    // ------------------------------------------------------------------

    pub fn parse_elem(self, s: &str) -> Result<SL2Elem, Sl2Error> {
        let bad = || Sl2Error::BadLiteral(s.to_string());
        let (row0, row1) = s.split_once(';').ok_or_else(bad)?;
        let parse_row = |r: &str| -> Result<(u64, u64), Sl2Error> {
            let (x, y) = r.split_once(',').ok_or_else(bad)?;
            Ok((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        let (a, b) = parse_row(row0)?;
        let (c, d) = parse_row(row1)?;
        self.new_elem(a, b, c, d)
    }

    pub fn format_elem(self, g: SL2Elem) -> String {
        format!(
            "{},{};{},{}",
            g.a.value(),
            g.b.value(),
            g.c.value(),
            g.d.value()
        )
    }
}

// --------------------------------------------------------------------------
// 2×2 matrices over 𝔽_{p²}: the ambient space for escape arguments and
// eigenbasis changes.
// --------------------------------------------------------------------------

/// Row-major 2×2 matrix over 𝔽_{p²} (not necessarily invertible).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2q {
    pub e: [Fq2Elem; 4],
}

impl Mat2q {
    pub fn from_sl2(f: PrimeField, g: SL2Elem) -> Mat2q {
        Mat2q {
            e: [
                f.ext_base(g.a),
                f.ext_base(g.b),
                f.ext_base(g.c),
                f.ext_base(g.d),
            ],
        }
    }

    pub fn identity(f: PrimeField) -> Mat2q {
        Mat2q {
            e: [f.ext_one(), f.ext_zero(), f.ext_zero(), f.ext_one()],
        }
    }

    pub fn mul(f: PrimeField, m: Mat2q, n: Mat2q) -> Mat2q {
        let [a, b, c, d] = m.e;
        let [e, g, h, i] = n.e;
        Mat2q {
            e: [
                f.ext_add(f.ext_mul(a, e), f.ext_mul(b, h)),
                f.ext_add(f.ext_mul(a, g), f.ext_mul(b, i)),
                f.ext_add(f.ext_mul(c, e), f.ext_mul(d, h)),
                f.ext_add(f.ext_mul(c, g), f.ext_mul(d, i)),
            ],
        }
    }

    pub fn det(self, f: PrimeField) -> Fq2Elem {
        f.ext_sub(f.ext_mul(self.e[0], self.e[3]), f.ext_mul(self.e[1], self.e[2]))
    }

    pub fn inv(self, f: PrimeField) -> Option<Mat2q> {
        let det = self.det(f);
        let s = f.ext_inv(det).ok()?;
        Some(Mat2q {
            e: [
                f.ext_mul(self.e[3], s),
                f.ext_mul(f.ext_neg(self.e[1]), s),
                f.ext_mul(f.ext_neg(self.e[2]), s),
                f.ext_mul(self.e[0], s),
            ],
        })
    }
}

/// Basis matrix P = [v₁ | v₂] together with its inverse; conjugation by it
/// expresses group elements in the (v₁, v₂) coordinates.
#[derive(Copy, Clone, Debug)]
pub struct EigenBasis {
    pub v1: ProjVec,
    pub v2: ProjVec,
    pub p_mat: Mat2q,
    pub p_inv: Mat2q,
}

impl EigenBasis {
    /// None if v₁, v₂ are projectively dependent.
    pub fn new(f: PrimeField, v1: ProjVec, v2: ProjVec) -> Option<EigenBasis> {
        let p_mat = Mat2q {
            e: [v1.x, v2.x, v1.y, v2.y],
        };
        let p_inv = p_mat.inv(f)?;
        Some(EigenBasis { v1, v2, p_mat, p_inv })
    }

    /// P⁻¹ g P.
    pub fn express(self, f: PrimeField, g: SL2Elem) -> Mat2q {
        Mat2q::mul(f, Mat2q::mul(f, self.p_inv, Mat2q::from_sl2(f, g)), self.p_mat)
    }
}
