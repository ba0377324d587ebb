//! Arithmetic in GF(p^k) with a deterministic polynomial-basis representation.
//!
//! Elements are coefficient vectors `[c0, c1, ..., c_{k-1}]` (constant term
//! first) over the prime field, reduced modulo a fixed monic irreducible
//! polynomial of degree k.  The modulus is chosen canonically: the
//! lexicographically smallest monic irreducible, comparing coefficient
//! vectors constant-term first.  Two fields built with the same `(p, k)`
//! therefore agree element-for-element, which makes serialized matrices
//! portable without shipping the modulus.

use crate::{Error, Result};
use std::sync::Arc;

/// Largest supported extension degree.  Keeps on-stack scratch buffers small;
/// every case of interest here has k <= 5.
pub const MAX_K: usize = 12;

/// A finite field GF(p^k) in polynomial-basis form.
///
/// `p` must be prime and below 2^20 so that sums of a few million products of
/// residues stay inside `u64` (the matrix layer relies on this for delayed
/// reduction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    /// Characteristic (prime).
    pub p: u64,
    /// Extension degree over the prime field.
    pub k: usize,
    /// Monic irreducible modulus, constant term first, length `k + 1`.
    pub modulus: Vec<u64>,
    /// Field order p^k.
    pub order: u64,
}

/// Builds GF(p^k) with the canonical modulus.
pub fn make_field(p: u64, k: usize) -> Result<Arc<Field>> {
    if !is_prime(p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
    }
    if p >= (1 << 20) {
        return Err(Error::InvalidParameter(format!(
            "p = {p} too large (must be below 2^20)"
        )));
    }
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidParameter(format!(
            "extension degree k = {k} outside 1..={MAX_K}"
        )));
    }
    let order = (0..k).try_fold(1u64, |acc, _| acc.checked_mul(p)).ok_or_else(|| {
        Error::InvalidParameter(format!("field order p^k overflows u64 (p={p}, k={k})"))
    })?;
    let modulus = smallest_irreducible(p, k);
    Ok(Arc::new(Field { p, k, modulus, order }))
}

/// Finds the lexicographically smallest monic irreducible polynomial of
/// degree k over GF(p), comparing `(c0, c1, ..., c_{k-1})` left to right.
fn smallest_irreducible(p: u64, k: usize) -> Vec<u64> {
    if k == 1 {
        // Degree-1 moduli are all equivalent; x itself is the smallest.
        return vec![0, 1];
    }
    // Odometer over coefficient vectors with c0 most significant, so the
    // first hit is the lexicographic minimum.
    let mut c = vec![0u64; k];
    loop {
        // c0 = 0 would make the polynomial divisible by x.
        if c[0] != 0 {
            let mut f = c.clone();
            f.push(1);
            if poly_is_irreducible(&f, p) {
                return f;
            }
        }
        // Increment with the last coordinate fastest.
        let mut j = k;
        loop {
            debug_assert!(j > 0, "exhausted scan without finding an irreducible");
            j -= 1;
            c[j] += 1;
            if c[j] < p {
                break;
            }
            c[j] = 0;
        }
    }
}

/// Irreducibility over GF(p) by trial division: a reducible monic polynomial
/// of degree k has a monic factor of degree at most k/2.
fn poly_is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 1 {
        return true;
    }
    let mut g = vec![0u64; k / 2 + 2];
    for d in 1..=k / 2 {
        // All monic divisor candidates of degree d.
        let mut tail = vec![0u64; d];
        loop {
            g[..d].copy_from_slice(&tail);
            g[d] = 1;
            if poly_rem_is_zero(f, &g[..=d], p) {
                return false;
            }
            let mut j = d;
            let done = loop {
                if j == 0 {
                    break true;
                }
                j -= 1;
                tail[j] += 1;
                if tail[j] < p {
                    break false;
                }
                tail[j] = 0;
            };
            if done {
                break;
            }
        }
    }
    true
}

/// Whether the monic polynomial `g` divides `f` over GF(p).
fn poly_rem_is_zero(f: &[u64], g: &[u64], p: u64) -> bool {
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap() % p;
        if lead != 0 {
            let shift = r.len() - 1 - dg;
            for (j, &gc) in g.iter().enumerate() {
                let sub = (gc * lead) % p;
                r[shift + j] = (r[shift + j] + p - sub) % p;
            }
        }
        r.pop();
    }
    r.iter().all(|&c| c % p == 0)
}

impl Field {
    /// The additive identity.
    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.k]
    }

    /// The multiplicative identity.
    pub fn one(&self) -> Vec<u64> {
        let mut e = vec![0; self.k];
        e[0] = 1;
        e
    }

    /// Embeds a prime-field residue as a constant.
    pub fn scalar(&self, c: u64) -> Vec<u64> {
        let mut e = vec![0; self.k];
        e[0] = c % self.p;
        e
    }

    /// Whether `a` is the zero element.
    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    /// Whether `a` is the identity element.
    pub fn is_one(&self, a: &[u64]) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }

    /// out = a + b.
    pub fn add(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for i in 0..self.k {
            out[i] = (a[i] + b[i]) % self.p;
        }
    }

    /// out = a - b.
    pub fn sub(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for i in 0..self.k {
            out[i] = (a[i] + self.p - b[i]) % self.p;
        }
    }

    /// out = -a.
    pub fn neg(&self, a: &[u64], out: &mut [u64]) {
        for i in 0..self.k {
            out[i] = (self.p - a[i]) % self.p;
        }
    }

    /// out = a * b, reduced modulo the field modulus.
    pub fn mul(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let k = self.k;
        if k == 1 {
            out[0] = (a[0] * b[0]) % self.p;
            return;
        }
        let mut buf = [0u64; 2 * MAX_K];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                buf[i + j] = (buf[i + j] + ai * bj) % self.p;
            }
        }
        self.reduce(&mut buf, 2 * k - 1);
        out.copy_from_slice(&buf[..k]);
    }

    /// Reduces `buf[..len]` in place modulo the field modulus; afterwards only
    /// `buf[..k]` is meaningful.
    fn reduce(&self, buf: &mut [u64], len: usize) {
        let k = self.k;
        for i in (k..len).rev() {
            let c = buf[i];
            if c == 0 {
                continue;
            }
            // x^i = x^{i-k} * x^k and x^k = -(m_{k-1} x^{k-1} + ... + m_0).
            for j in 0..k {
                let m = self.modulus[j];
                if m != 0 {
                    buf[i - k + j] = (buf[i - k + j] + (self.p - m) * c) % self.p;
                }
            }
            buf[i] = 0;
        }
    }

    /// a^e by square-and-multiply.
    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut result = self.one();
        let mut base = a.to_vec();
        let mut tmp = self.zero();
        while e > 0 {
            if e & 1 == 1 {
                self.mul(&result, &base, &mut tmp);
                result.copy_from_slice(&tmp);
            }
            e >>= 1;
            if e > 0 {
                let b = base.clone();
                self.mul(&b, &b, &mut tmp);
                base.copy_from_slice(&tmp);
            }
        }
        result
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inv(&self, a: &[u64]) -> Result<Vec<u64>> {
        if self.is_zero(a) {
            return Err(Error::Singular("field inverse of zero".into()));
        }
        // The multiplicative group has order p^k - 1, so a^(p^k - 2) = a^-1.
        Ok(self.pow(a, self.order - 2))
    }

    /// The Frobenius image a^p.
    pub fn frobenius_elem(&self, a: &[u64]) -> Vec<u64> {
        self.pow(a, self.p)
    }

    /// Multiplicative order of a nonzero element.
    pub fn elem_order(&self, a: &[u64]) -> Result<u64> {
        if self.is_zero(a) {
            return Err(Error::InvalidParameter("order of zero element".into()));
        }
        let mut n = self.order - 1;
        for (q, _) in factorize(self.order - 1) {
            while n % q == 0 && self.is_one(&self.pow(a, n / q)) {
                n /= q;
            }
        }
        Ok(n)
    }

    /// The i-th element in lexicographic order (c0 most significant digit).
    pub fn lex_elem(&self, mut i: u64) -> Vec<u64> {
        let mut e = vec![0; self.k];
        for j in (0..self.k).rev() {
            e[j] = i % self.p;
            i /= self.p;
        }
        e
    }

    /// The first element in lexicographic order whose multiplicative order is
    /// p^k - 1.
    pub fn primitive_element(&self) -> Vec<u64> {
        let n = self.order - 1;
        let factors = factorize(n);
        'scan: for i in 0..self.order {
            let e = self.lex_elem(i);
            if self.is_zero(&e) {
                continue;
            }
            for &(q, _) in &factors {
                if self.is_one(&self.pow(&e, n / q)) {
                    continue 'scan;
                }
            }
            return e;
        }
        unreachable!("the multiplicative group of a finite field is cyclic");
    }

    /// Renders an element: a bare residue for prime fields, else coefficients
    /// joined by colons (`c0:c1:...`).
    pub fn format_elem(&self, a: &[u64]) -> String {
        if self.k == 1 {
            a[0].to_string()
        } else {
            a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":")
        }
    }

    /// Parses the format produced by [`Field::format_elem`].
    pub fn parse_elem(&self, s: &str) -> Result<Vec<u64>> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != self.k {
            return Err(Error::Parse(format!(
                "element '{s}' has {} coordinates, field needs {}",
                parts.len(),
                self.k
            )));
        }
        let mut e = vec![0; self.k];
        for (i, part) in parts.iter().enumerate() {
            let c: u64 = part
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient '{part}' in '{s}'")))?;
            if c >= self.p {
                return Err(Error::Parse(format!(
                    "coefficient {c} out of range for characteristic {}",
                    self.p
                )));
            }
            e[i] = c;
        }
        Ok(e)
    }
}

/// Finds the smallest pair `(a, b)` with `0 <= a <= b < p` and
/// `a^2 + b^2 = -1 (mod p)`, scanning `a` outermost.  Such a pair exists for
/// every odd prime.
pub fn solve_sum_of_squares(p: u64) -> Result<(u64, u64)> {
    if !is_prime(p) || p == 2 {
        return Err(Error::InvalidParameter(format!(
            "sum-of-squares decomposition needs an odd prime, got {p}"
        )));
    }
    for a in 0..p {
        for b in a..p {
            if (a * a + b * b + 1) % p == 0 {
                return Ok((a, b));
            }
        }
    }
    unreachable!("-1 is a sum of two squares modulo every odd prime");
}

/// Deterministic primality test by trial division with a 6k±1 wheel.
/// Intended for the small parameters this crate works with.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    if n % 3 == 0 {
        return n == 3;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        let mut e = 0;
        while *n % p == 0 {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        push(d, &mut n);
        push(d + 2, &mut n);
        d += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testrng::SplitMix64;

    #[test]
    fn canonical_moduli() {
        // Independently derived by exhaustive trial-division scan.
        let cases: &[(u64, usize, &[u64])] = &[
            (2, 2, &[1, 1, 1]),
            (2, 3, &[1, 0, 1, 1]),
            (2, 4, &[1, 0, 0, 1, 1]),
            (3, 2, &[1, 0, 1]),
            (3, 3, &[1, 0, 2, 1]),
            (3, 5, &[1, 0, 0, 0, 2, 1]),
            (5, 2, &[1, 1, 1]),
            (7, 2, &[1, 0, 1]),
        ];
        for &(p, k, want) in cases {
            let f = make_field(p, k).unwrap();
            assert_eq!(f.modulus, want, "modulus for ({p}, {k})");
        }
    }

    #[test]
    fn primitive_elements() {
        let cases: &[(u64, usize, &[u64])] = &[
            (7, 1, &[3]),
            (2, 2, &[0, 1]),
            (3, 2, &[1, 1]),
            (5, 2, &[1, 3]),
            (3, 3, &[0, 0, 2]),
            (3, 5, &[0, 0, 0, 0, 2]),
        ];
        for &(p, k, want) in cases {
            let f = make_field(p, k).unwrap();
            let g = f.primitive_element();
            assert_eq!(g, want, "primitive element of ({p}, {k})");
            assert_eq!(f.elem_order(&g).unwrap(), f.order - 1);
        }
    }

    #[test]
    fn sum_of_squares_pairs() {
        let cases: &[(u64, (u64, u64))] = &[
            (3, (1, 1)),
            (5, (0, 2)),
            (7, (2, 3)),
            (11, (1, 3)),
            (13, (0, 5)),
            (17, (0, 4)),
            (19, (1, 6)),
            (23, (2, 8)),
            (29, (0, 12)),
            (31, (4, 13)),
            (37, (0, 6)),
            (41, (0, 9)),
            (43, (1, 16)),
            (47, (2, 18)),
            (53, (0, 23)),
            (59, (1, 23)),
            (71, (4, 14)),
        ];
        for &(p, want) in cases {
            let (a, b) = solve_sum_of_squares(p).unwrap();
            assert_eq!((a, b), want, "pair for p = {p}");
            assert_eq!((a * a + b * b + 1) % p, 0);
        }
        assert!(solve_sum_of_squares(2).is_err());
        assert!(solve_sum_of_squares(9).is_err());
    }

    #[test]
    fn ring_axioms_randomized() {
        let mut rng = SplitMix64::new(0x5eed_0001);
        for &(p, k) in &[(7u64, 1usize), (3, 2), (5, 2), (3, 3), (2, 4)] {
            let f = make_field(p, k).unwrap();
            let rand_elem = |rng: &mut SplitMix64| -> Vec<u64> {
                (0..k).map(|_| rng.next() % p).collect()
            };
            for _ in 0..200 {
                let a = rand_elem(&mut rng);
                let b = rand_elem(&mut rng);
                let c = rand_elem(&mut rng);
                let mut ab = f.zero();
                let mut bc = f.zero();
                let mut l = f.zero();
                let mut r = f.zero();
                // Associativity of multiplication.
                f.mul(&a, &b, &mut ab);
                f.mul(&ab, &c, &mut l);
                f.mul(&b, &c, &mut bc);
                f.mul(&a, &bc, &mut r);
                assert_eq!(l, r, "assoc in ({p},{k})");
                // Distributivity.
                let mut bpc = f.zero();
                f.add(&b, &c, &mut bpc);
                f.mul(&a, &bpc, &mut l);
                let mut ac = f.zero();
                f.mul(&a, &b, &mut ab);
                f.mul(&a, &c, &mut ac);
                f.add(&ab, &ac, &mut r);
                assert_eq!(l, r, "distrib in ({p},{k})");
                // Inverse round-trip.
                if !f.is_zero(&a) {
                    let ai = f.inv(&a).unwrap();
                    f.mul(&a, &ai, &mut l);
                    assert!(f.is_one(&l), "inverse in ({p},{k})");
                }
            }
        }
    }

    #[test]
    fn frobenius_properties() {
        let mut rng = SplitMix64::new(0x5eed_0002);
        for &(p, k) in &[(3u64, 2usize), (3, 3), (2, 4), (5, 2)] {
            let f = make_field(p, k).unwrap();
            let rand_elem = |rng: &mut SplitMix64| -> Vec<u64> {
                (0..k).map(|_| rng.next() % p).collect()
            };
            for _ in 0..100 {
                let a = rand_elem(&mut rng);
                let b = rand_elem(&mut rng);
                // Additive and multiplicative.
                let mut apb = f.zero();
                f.add(&a, &b, &mut apb);
                let mut want = f.zero();
                f.add(&f.frobenius_elem(&a), &f.frobenius_elem(&b), &mut want);
                assert_eq!(f.frobenius_elem(&apb), want);
                let mut ab = f.zero();
                f.mul(&a, &b, &mut ab);
                f.mul(&f.frobenius_elem(&a), &f.frobenius_elem(&b), &mut want);
                assert_eq!(f.frobenius_elem(&ab), want);
                // Order k: applying it k times is the identity map.
                let mut it = a.clone();
                for _ in 0..k {
                    it = f.frobenius_elem(&it);
                }
                assert_eq!(it, a);
            }
            // Fixes exactly the prime subfield constants.
            for c in 0..p {
                let e = f.scalar(c);
                assert_eq!(f.frobenius_elem(&e), e);
            }
        }
    }

    #[test]
    fn format_parse_round_trip() {
        let f9 = make_field(3, 2).unwrap();
        let e = vec![2, 1];
        assert_eq!(f9.format_elem(&e), "2:1");
        assert_eq!(f9.parse_elem("2:1").unwrap(), e);
        assert!(f9.parse_elem("3:0").is_err());
        assert!(f9.parse_elem("1").is_err());
        assert!(f9.parse_elem("a:b").is_err());

        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.format_elem(&[5]), "5");
        assert_eq!(f7.parse_elem("5").unwrap(), vec![5]);
        assert!(f7.parse_elem("7").is_err());
    }

    #[test]
    fn element_orders() {
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(f7.elem_order(&[3]).unwrap(), 6);
        assert_eq!(f7.elem_order(&[2]).unwrap(), 3);
        assert_eq!(f7.elem_order(&[6]).unwrap(), 2);
        assert_eq!(f7.elem_order(&[1]).unwrap(), 1);
        let f4 = make_field(2, 2).unwrap();
        assert_eq!(f4.elem_order(&[0, 1]).unwrap(), 3);
        let f9 = make_field(3, 2).unwrap();
        assert_eq!(f9.elem_order(&[1, 1]).unwrap(), 8);
        assert!(f9.elem_order(&[0, 0]).is_err());
    }

    #[test]
    fn primality_and_factorization() {
        assert!(is_prime(2));
        assert!(is_prime(71));
        assert!(is_prime(1_000_003));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(!is_prime(91));
        assert!(!is_prime(121));
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(242), vec![(2, 1), (11, 2)]);
        assert_eq!(factorize(29040), vec![(2, 4), (3, 1), (5, 1), (11, 2)]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(make_field(4, 1).is_err());
        assert!(make_field(1, 2).is_err());
        assert!(make_field(3, 0).is_err());
        assert!(make_field(3, MAX_K + 1).is_err());
        assert!(make_field(1 << 20, 1).is_err());
        // p^k overflow.
        assert!(make_field(524_287, 12).is_err());
    }
}
