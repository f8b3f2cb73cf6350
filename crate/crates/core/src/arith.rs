//! Integer plumbing: deterministic primality, modular arithmetic on raw
//! words, exact k-th-root comparisons for hypothesis thresholds.

/// Deterministic Miller–Rabin for u64.
///
/// The base set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is known to be
/// exact for all n < 3.3·10²⁴, which covers the full u64 range.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_mul(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime_u64(n)).collect()
}

#[inline]
pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo prime `m` via extended Euclid. Caller guarantees
/// `a % m != 0`.
pub fn mod_inv(a: u64, m: u64) -> u64 {
    debug_assert!(a % m != 0);
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r.abs(), 1);
    let inv = old_s * old_r.signum();
    (inv.rem_euclid(m as i128)) as u64
}

/// Floor of the k-th root of n.
pub fn ikth_root(n: u128, k: u32) -> u128 {
    if n == 0 || k == 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u128;
    // float seed, then exact correction
    while r > 0 && checked_pow_u128(r, k).map_or(true, |v| v > n) {
        r -= 1;
    }
    while checked_pow_u128(r + 1, k).map_or(false, |v| v <= n) {
        r += 1;
    }
    r
}

pub fn checked_pow_u128(base: u128, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Exact test of `n > c · p^(num/den)` for nonnegative integers, i.e.
/// `n^den > c^den · p^num`, evaluated in u128. Panics on overflow, which
/// cannot occur at desk scale (p < 2³¹, den ≤ 3, num ≤ 8 with p ≤ ~10³).
pub fn gt_scaled_pow(n: u64, c: u64, p: u64, num: u32, den: u32) -> bool {
    let lhs = checked_pow_u128(n as u128, den).expect("lhs overflow in threshold check");
    let rhs = checked_pow_u128(c as u128, den)
        .and_then(|cd| cd.checked_mul(checked_pow_u128(p as u128, num).expect("p^num overflow")))
        .expect("rhs overflow in threshold check");
    lhs > rhs
}

/// Exact dyadic decomposition of a finite positive f64: returns (m, e)
/// with value = m·2^e. Lets real-valued parameters enter exact rational
/// inequalities without rounding.
pub fn f64_to_dyadic(v: f64) -> Option<(u128, i32)> {
    if !v.is_finite() || v <= 0.0 {
        return None;
    }
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = bits & ((1u64 << 52) - 1);
    Some(if exp == 0 {
        (mant as u128, -1074)
    } else {
        ((mant | (1 << 52)) as u128, exp - 1075)
    })
}

/// FNV-1a over a byte stream; used for provenance hashes (words, configs).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn floor_log2(n: u64) -> u32 {
    debug_assert!(n > 0);
    63 - n.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime_u64(10007));
        assert!(!is_prime_u64(10005));
        assert!(is_prime_u64(2147483647)); // 2^31 - 1
    }

    #[test]
    fn inverse_roundtrip() {
        for p in [3u64, 7, 1009, 2147483647] {
            for a in [1u64, 2, 5, p - 1, p / 2 + 1] {
                let inv = mod_inv(a, p);
                assert_eq!(mod_mul(a, inv, p), 1, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn kth_roots_exact_boundaries() {
        assert_eq!(ikth_root(8, 3), 2);
        assert_eq!(ikth_root(7, 3), 1);
        assert_eq!(ikth_root(9, 3), 2);
        assert_eq!(ikth_root(u64::MAX as u128, 2), u32::MAX as u128);
        // n > 2p^{5/3} at p = 13: 2*13^{5/3} = 143.73..., so 143 fails, 144 passes
        assert!(!gt_scaled_pow(143, 2, 13, 5, 3));
        assert!(gt_scaled_pow(144, 2, 13, 5, 3));
    }
}
