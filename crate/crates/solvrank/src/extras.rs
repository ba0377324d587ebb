//! Extraspecial-type matrix groups over finite fields and their normalizers
//! in the ambient general linear group.
//!
//! Three normalizer routes are provided: a lift construction that solves
//! intertwiner equations, one per outer symplectic action on the central
//! quotient; a streaming brute-force filter over the whole general linear
//! group; and transport wrappers that carry a normalizer along scalar
//! restriction (semilinear blowup) or along a tensor factor.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::engine::{gl_gens, gl_order, MatGroup};
use crate::gfarith::{self, Field};
use crate::matlin::{self, kernel_basis, Mat, RowSpace};
use crate::{Error, Result};

/// Isomorphism type of an extraspecial-type group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Central product of dihedral factors of order 8 only.
    Plus,
    /// Central product with exactly one quaternion factor.
    Minus,
    /// Odd-characteristic type: exponent q for odd q.
    Odd,
}

impl Kind {
    /// Short lowercase name, also accepted by the command-line interface.
    pub fn label(self) -> &'static str {
        match self {
            Kind::Plus => "plus",
            Kind::Minus => "minus",
            Kind::Odd => "odd",
        }
    }
}

/// An extraspecial-type subgroup E of GL(q^m, p^k): |E| = q^(2m+1), the
/// center is the scalar subgroup of order q, and E/Z(E) is elementary abelian
/// of rank 2m.
pub struct Extraspecial {
    /// The generated matrix group.
    pub group: MatGroup,
    /// The 2m distinguished non-central generators.
    pub gens: Vec<Mat>,
    /// Prime q with |E| = q^(2m+1); distinct from the field characteristic.
    pub q: u64,
    /// Half-rank m; the matrices have dimension q^m.
    pub m: usize,
    /// Isomorphism type.
    pub kind: Kind,
    /// Scalar generator of the center, of multiplicative order q.
    pub z: Mat,
}

/// The commutator a^-1 b^-1 a b.
pub(crate) fn commutator(a: &Mat, b: &Mat) -> Mat {
    let ai = a.inverse().expect("group element is invertible");
    let bi = b.inverse().expect("group element is invertible");
    ai.mul(&bi).mul(a).mul(b)
}

/// Applies the field Frobenius x -> x^p to every entry.
pub(crate) fn entrywise_frobenius(g: &Mat) -> Mat {
    let field = g.field.clone();
    let n = g.n;
    let mut out = Mat::zero(field.clone(), n);
    for r in 0..n {
        for c in 0..n {
            out.set_entry(r, c, &field.frobenius_elem(g.entry(r, c)));
        }
    }
    out
}

/// The lexicographically first field element of multiplicative order `ord`.
fn first_element_of_order(field: &Arc<Field>, ord: u64) -> Result<Vec<u64>> {
    for i in 1..field.order {
        let e = field.lex_elem(i);
        if field.elem_order(&e)? == ord {
            return Ok(e);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no element of multiplicative order {ord} in the field of order {}",
        field.order
    )))
}

/// Dihedral generator pair of order 8: the basis swap and diag(1, -1).
fn dihedral_pair(field: &Arc<Field>) -> (Mat, Mat) {
    let x = Mat::perm_mat(field.clone(), &[1, 0]);
    let one = field.one();
    let mut minus_one = field.zero();
    field.neg(&one, &mut minus_one);
    let y = Mat::diag(field.clone(), &[one, minus_one]);
    (x, y)
}

/// Quaternion generator pair of order 8: [[0,1],[-1,0]] and [[a,b],[b,-a]]
/// with a^2 + b^2 = -1 in the prime subfield.
fn quaternion_pair(field: &Arc<Field>) -> Result<(Mat, Mat)> {
    let (a, b) = gfarith::solve_sum_of_squares(field.p)?;
    let zero = field.zero();
    let one = field.one();
    let mut minus_one = field.zero();
    field.neg(&one, &mut minus_one);
    let ea = field.scalar(a);
    let eb = field.scalar(b);
    let mut nea = field.zero();
    field.neg(&ea, &mut nea);
    let i = Mat::from_entries(field.clone(), 2, &[zero.clone(), one, minus_one, zero])?;
    let j = Mat::from_entries(field.clone(), 2, &[ea, eb.clone(), eb, nea])?;
    Ok((i, j))
}

/// Builds an extraspecial-type subgroup of GL(q^m, p^k).
///
/// Supported parameters: q = 2 with m in {1, 2} and kind plus or minus
/// (field of odd characteristic), and q = 3 with m = 1 and kind odd (field
/// order congruent to 1 mod 3, characteristic not 3).
pub fn build_extraspecial(
    field: &Arc<Field>,
    q: u64,
    m: usize,
    kind: Kind,
) -> Result<Extraspecial> {
    match (q, m, kind) {
        (2, 1 | 2, Kind::Plus | Kind::Minus) => {
            if field.p == 2 {
                return Err(Error::InvalidParameter(
                    "a 2-group of scalar-free type needs odd field characteristic".into(),
                ));
            }
        }
        (3, 1, Kind::Odd) => {
            if field.p == 3 {
                return Err(Error::InvalidParameter(
                    "the exponent-3 group of order 27 needs characteristic different from 3"
                        .into(),
                ));
            }
            if (field.order - 1) % 3 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "field order {} is not 1 mod 3, so it has no primitive cube root of unity",
                    field.order
                )));
            }
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unsupported extraspecial parameters q={q} m={m} kind={}",
                kind.label()
            )));
        }
    }

    let gens: Vec<Mat> = match (q, m) {
        (2, 1) => match kind {
            Kind::Plus => {
                let (x, y) = dihedral_pair(field);
                vec![x, y]
            }
            Kind::Minus => {
                let (i, j) = quaternion_pair(field)?;
                vec![i, j]
            }
            Kind::Odd => unreachable!(),
        },
        (2, 2) => {
            let (x, y) = dihedral_pair(field);
            let id2 = Mat::identity(field.clone(), 2);
            let (s, t) = match kind {
                Kind::Plus => dihedral_pair(field),
                Kind::Minus => quaternion_pair(field)?,
                Kind::Odd => unreachable!(),
            };
            vec![x.kron(&id2), y.kron(&id2), id2.kron(&s), id2.kron(&t)]
        }
        (3, 1) => {
            let x = Mat::perm_mat(field.clone(), &[1, 2, 0]);
            let omega = first_element_of_order(field, 3)?;
            let mut omega2 = field.zero();
            field.mul(&omega, &omega, &mut omega2);
            let y = Mat::diag(field.clone(), &[field.one(), omega, omega2]);
            vec![x, y]
        }
        _ => unreachable!(),
    };

    let dim = gens[0].n;
    let z = commutator(&gens[0], &gens[1]);
    assert!(
        z.as_scalar().is_some() && z.multiplicative_order(q) == Some(q),
        "central commutator must be a scalar of order q"
    );
    let group = MatGroup::new(field.clone(), dim, gens.clone());
    let expected = (q as u128).pow(2 * m as u32 + 1);
    assert_eq!(group.order(), expected, "extraspecial group order");
    Ok(Extraspecial { group, gens, q, m, kind, z })
}

/// Structural facts recomputed from scratch for an extraspecial-type group.
pub struct ExtraReport {
    /// Group order (must be q^(2m+1)).
    pub order: u128,
    /// Order of the center (must be q).
    pub center_order: usize,
    /// Exponent of the group.
    pub exponent: u64,
    /// Isomorphism type detected from square counts (q = 2) or the exponent.
    pub kind_detected: Kind,
    /// Whether every commutator of two elements is scalar (central).
    pub commutators_central: bool,
}

/// Recomputes order, center, exponent, and isomorphism type by enumerating
/// the group's elements.
pub fn verify_extraspecial(e: &Extraspecial) -> Result<ExtraReport> {
    let elems = e.group.elements(4096)?;
    let order = elems.len() as u128;
    let center_order = elems
        .iter()
        .filter(|x| e.gens.iter().all(|g| x.mul(g) == g.mul(x)))
        .count();
    let mut exponent = 1u64;
    for x in &elems {
        let ord = x
            .multiplicative_order(64)
            .ok_or_else(|| Error::BudgetExceeded("element order above 64".into()))?;
        exponent = exponent / gcd(exponent, ord) * ord;
    }
    let square_roots_of_one = elems.iter().filter(|x| x.mul(x).is_identity()).count();
    let kind_detected = if e.q == 2 {
        let t = 1usize << e.m;
        if square_roots_of_one == t * (t + 1) {
            Kind::Plus
        } else if square_roots_of_one == t * (t - 1) {
            Kind::Minus
        } else {
            return Err(Error::InvalidParameter(format!(
                "unexpected involution count {square_roots_of_one}"
            )));
        }
    } else if exponent == e.q {
        Kind::Odd
    } else {
        return Err(Error::InvalidParameter(format!(
            "odd-type group has exponent {exponent}, expected {}",
            e.q
        )));
    };
    let commutators_central = elems
        .iter()
        .all(|a| elems.iter().all(|b| commutator(a, b).as_scalar().is_some()));
    Ok(ExtraReport {
        order,
        center_order,
        exponent,
        kind_detected,
        commutators_central,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// All `dim` x `dim` matrices S over Z/q (entries as residues, row-major)
/// with S^T J S = J, where `j` is a nondegenerate form matrix mod q.
/// Intended for the tiny cases q <= 3, dim <= 4.
pub fn sp_elements(j: &[Vec<u64>], dim: usize, q: u64) -> Vec<Vec<u64>> {
    let n2 = dim * dim;
    let total = q.pow(n2 as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut s = vec![0u64; n2];
        let mut c = code;
        for slot in s.iter_mut().rev() {
            *slot = c % q;
            c /= q;
        }
        if preserves_form(&s, j, dim, q) {
            out.push(s);
        }
    }
    out
}

fn preserves_form(s: &[u64], j: &[Vec<u64>], dim: usize, q: u64) -> bool {
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = 0u64;
            for i in 0..dim {
                for l in 0..dim {
                    acc = (acc + s[i * dim + a] * (j[i][l] % q) % q * s[l * dim + b]) % q;
                }
            }
            if acc != j[a][b] % q {
                return false;
            }
        }
    }
    true
}

/// A normalizer computation result.
pub struct NormalizerOutcome {
    /// The normalizer N of E in GL(d, p^k), scalars included.
    pub group: MatGroup,
    /// Number of outer symplectic actions realized by a conjugation
    /// (equivalently |N| / ((p^k - 1) q^(2m))).
    pub lifted: usize,
    /// Which route produced the group.
    pub method: &'static str,
}

/// Computes the full normalizer of E in GL(q^m, p^k) by lifting outer
/// actions.
///
/// The commutator pairing on E/Z(E) is a nondegenerate form J over Z/q; for
/// each form-preserving S the candidate images s_j of the generators g_j are
/// fixed, and S is realized by a conjugation exactly when the linear system
/// T g_j = s_j T has a nonzero solution T (then automatically invertible by
/// Schur's lemma, the representation being absolutely irreducible). The
/// normalizer is generated by the scalars, E itself, and one realizing T per
/// realized S; its order is checked against (p^k - 1) q^(2m) |lifts|.
pub fn lift_normalizer(e: &Extraspecial) -> Result<NormalizerOutcome> {
    let field = e.group.field.clone();
    let d = e.group.dim;
    let w = e.gens.len(); // 2m
    let q = e.q;

    let zpows: Vec<Mat> = (0..q).map(|t| e.z.pow(t)).collect();
    let mut j = vec![vec![0u64; w]; w];
    for a in 0..w {
        for b in 0..w {
            let comm = commutator(&e.gens[a], &e.gens[b]);
            j[a][b] = zpows
                .iter()
                .position(|zp| *zp == comm)
                .ok_or_else(|| {
                    Error::InvalidParameter("commutator outside the scalar center".into())
                })? as u64;
        }
    }
    // The pairing must be nondegenerate mod q.
    let fq = gfarith::make_field(q, 1)?;
    let jflat: Vec<u64> = j.iter().flat_map(|row| row.iter().copied()).collect();
    let jmat = Mat::from_residues(fq.clone(), w, &jflat)?;
    if fq.is_zero(&jmat.det()) {
        return Err(Error::InvalidParameter(
            "degenerate commutator pairing".into(),
        ));
    }

    let mut lifts: Vec<Mat> = Vec::new();
    for s in sp_elements(&j, w, q) {
        let images: Vec<Mat> = (0..w)
            .map(|col| {
                let mut acc = Mat::identity(field.clone(), d);
                for (i, g) in e.gens.iter().enumerate() {
                    let exp = s[i * w + col];
                    if exp > 0 {
                        acc = acc.mul(&g.pow(exp));
                    }
                }
                acc
            })
            .collect();
        if let Some(t) = intertwiner(&field, d, &e.gens, &images) {
            lifts.push(t);
        }
    }
    let lifted = lifts.len();

    let mut gens = vec![Mat::scalar_mat(
        field.clone(),
        d,
        &field.primitive_element(),
    )];
    gens.extend(e.gens.iter().cloned());
    gens.extend(lifts);
    // One lift per outer action can make this list long; shrink it so that
    // later chain and commutator computations stay small.
    let group = reduce_generators(&field, d, &gens);
    let expected =
        (field.order as u128 - 1) * (q as u128).pow(w as u32) * lifted as u128;
    assert_eq!(
        group.order(),
        expected,
        "normalizer order must equal (field order - 1) * q^(2m) * lift count"
    );
    Ok(NormalizerOutcome { group, lifted, method: "lift" })
}

/// Solves the joint system T g_j = images_j T; returns the (up to scalar
/// unique) nonzero solution, if any, as an invertible matrix.
fn intertwiner(field: &Arc<Field>, d: usize, gens: &[Mat], images: &[Mat]) -> Option<Mat> {
    let k = field.k;
    let p = field.p;
    let cols = d * d;
    let rows = gens.len() * cols;
    let mut data = vec![0u64; rows * cols * k];
    for (gi, (g, img)) in gens.iter().zip(images).enumerate() {
        for a in 0..d {
            for b in 0..d {
                let base = (gi * cols + a * d + b) * cols * k;
                // (T g)[a][b] contributes +g[c][b] at unknown T[a][c].
                for c in 0..d {
                    let u = a * d + c;
                    let slot = &mut data[base + u * k..base + u * k + k];
                    for (t, &v) in slot.iter_mut().zip(g.entry(c, b)) {
                        *t = (*t + v) % p;
                    }
                }
                // (img T)[a][b] contributes -img[a][r] at unknown T[r][b].
                for r in 0..d {
                    let u = r * d + b;
                    let slot = &mut data[base + u * k..base + u * k + k];
                    for (t, &v) in slot.iter_mut().zip(img.entry(a, r)) {
                        *t = (*t + p - v) % p;
                    }
                }
            }
        }
    }
    let basis = kernel_basis(field, rows, cols, &data);
    if basis.is_empty() {
        return None;
    }
    assert_eq!(
        basis.len(),
        1,
        "intertwiner space of an absolutely irreducible action must be a line"
    );
    let elems: Vec<Vec<u64>> = basis[0].chunks(k).map(|c| c.to_vec()).collect();
    let t = Mat::from_entries(field.clone(), d, &elems).expect("well-formed solution");
    assert!(t.inverse().is_ok(), "nonzero intertwiner must be invertible");
    Some(t)
}

/// Streams every invertible `n` x `n` matrix over the field through `pred`
/// and returns the accepted ones, in a deterministic order independent of
/// thread count. Fails up front if |GL(n, p^k)| exceeds `budget`.
pub fn stream_gl_filter<P>(
    field: &Arc<Field>,
    n: usize,
    budget: u128,
    pred: &P,
) -> Result<Vec<Mat>>
where
    P: Fn(&Mat) -> bool + Sync,
{
    let total = gl_order(n, field.order);
    if total > budget {
        return Err(Error::BudgetExceeded(format!(
            "general linear group of order {total} exceeds the streaming budget {budget}"
        )));
    }
    let k = field.k;
    let w = n * k;
    let vec_count = field.order.pow(n as u32);
    let decode_into = |idx: u64, buf: &mut [u64]| {
        let mut c = idx;
        for i in (0..n).rev() {
            let e = field.lex_elem(c % field.order);
            buf[i * k..(i + 1) * k].copy_from_slice(&e);
            c /= field.order;
        }
    };
    let firsts: Vec<u64> = (1..vec_count).collect();
    let chunks: Vec<Vec<Mat>> = firsts
        .par_iter()
        .map(|&f0| {
            let mut hits = Vec::new();
            let mut rows_data = vec![0u64; n * w];
            decode_into(f0, &mut rows_data[0..w]);
            let mut space = RowSpace::new(field.clone(), n);
            space.insert(&rows_data[0..w]);
            let mut scratch = vec![0u64; w];
            complete_rows(
                field,
                n,
                1,
                &mut rows_data,
                &space,
                &decode_into,
                &mut scratch,
                pred,
                &mut hits,
            );
            hits
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn complete_rows<P, D>(
    field: &Arc<Field>,
    n: usize,
    level: usize,
    rows_data: &mut Vec<u64>,
    space: &RowSpace,
    decode_into: &D,
    scratch: &mut Vec<u64>,
    pred: &P,
    hits: &mut Vec<Mat>,
) where
    P: Fn(&Mat) -> bool + Sync,
    D: Fn(u64, &mut [u64]),
{
    let k = field.k;
    let w = n * k;
    let vec_count = field.order.pow(n as u32);
    for idx in 0..vec_count {
        decode_into(idx, scratch);
        if space.contains(scratch) {
            continue;
        }
        rows_data[level * w..(level + 1) * w].copy_from_slice(scratch);
        if level + 1 == n {
            let elems: Vec<Vec<u64>> = rows_data.chunks(k).map(|c| c.to_vec()).collect();
            let m = Mat::from_entries(field.clone(), n, &elems).expect("well-formed rows");
            if pred(&m) {
                hits.push(m);
            }
        } else {
            let mut deeper = space.clone();
            deeper.insert(scratch);
            let mut scratch2 = vec![0u64; w];
            complete_rows(
                field,
                n,
                level + 1,
                rows_data,
                &deeper,
                decode_into,
                &mut scratch2,
                pred,
                hits,
            );
        }
    }
}

/// Brute-force normalizer of the subgroup generated by `sub_gens` inside
/// GL(n, p^k), streaming the whole general linear group. `sub_elems` must be
/// the complete element list of that subgroup.
pub fn brute_set_normalizer(
    field: &Arc<Field>,
    n: usize,
    budget: u128,
    sub_gens: &[Mat],
    sub_elems: &[Mat],
) -> Result<MatGroup> {
    let set: HashSet<Mat> = sub_elems.iter().cloned().collect();
    let hits = stream_gl_filter(field, n, budget, &|g: &Mat| {
        let ginv = match g.inverse() {
            Ok(v) => v,
            Err(_) => return false,
        };
        sub_gens.iter().all(|s| set.contains(&g.mul(s).mul(&ginv)))
    })?;
    Ok(reduce_generators(field, n, &hits))
}

/// Greedily reduces an element list to a short generating sequence of the
/// same group.
pub fn reduce_generators(field: &Arc<Field>, dim: usize, elems: &[Mat]) -> MatGroup {
    let mut gens: Vec<Mat> = Vec::new();
    let mut group = MatGroup::trivial(field.clone(), dim);
    for m in elems {
        if m.is_identity() || group.contains(m) {
            continue;
        }
        gens.push(m.clone());
        group = MatGroup::new(field.clone(), dim, gens.clone());
    }
    group
}

/// Restricts scalars: carries a Frobenius-stable subgroup of GL(d, p^k) with
/// k > 1 to GL(dk, p) by entrywise blowup, and adjoins the Frobenius
/// permutation. The result has order k * |inner|.
pub fn semilinear_normalizer(inner: &MatGroup) -> Result<MatGroup> {
    let field = &inner.field;
    if field.k == 1 {
        return Err(Error::InvalidParameter(
            "semilinear extension needs a proper extension field".into(),
        ));
    }
    for g in &inner.gens {
        if !inner.contains(&entrywise_frobenius(g)) {
            return Err(Error::InvalidParameter(
                "subgroup is not stable under the entrywise Frobenius map".into(),
            ));
        }
    }
    let phi = matlin::frobenius_perm(field, inner.dim);
    let pfield = phi.field.clone();
    let phi_inv = phi.inverse().expect("permutation matrix");
    let mut gens: Vec<Mat> = Vec::new();
    for g in &inner.gens {
        let blown = g.blowup();
        assert_eq!(
            phi.mul(&blown).mul(&phi_inv),
            entrywise_frobenius(g).blowup(),
            "Frobenius permutation must conjugate blowups to Frobenius-image blowups"
        );
        gens.push(blown);
    }
    gens.push(phi);
    let big = MatGroup::new(pfield, inner.dim * field.k, gens);
    assert_eq!(
        big.order(),
        inner.order() * field.k as u128,
        "semilinear extension order"
    );
    Ok(big)
}

/// Transports a normalizer N of an absolutely irreducible E <= GL(d, p^k) to
/// the normalizer of E tensor I_r in GL(dr, p^k): generated by g tensor I_r
/// for the generators g of N together with I_d tensor GL(r). By Schur's
/// lemma the centralizer of E tensor I_r is exactly I_d tensor GL(r), so this
/// is the full normalizer. The group is returned lazily (no order is
/// computed here).
pub fn tensor_normalizer(ne: &MatGroup, r: usize) -> MatGroup {
    let field = ne.field.clone();
    let idr = Mat::identity(field.clone(), r);
    let idd = Mat::identity(field.clone(), ne.dim);
    let mut gens: Vec<Mat> = ne.gens.iter().map(|g| g.kron(&idr)).collect();
    for h in gl_gens(&field, r) {
        gens.push(idd.kron(&h));
    }
    MatGroup::new(field, ne.dim * r, gens)
}

/// A nonabelian group of order 27 containing an element of order 9, realized
/// by the 27 x 27 permutation matrices of its regular action over GF(2):
/// generators a (order 9) and b (order 3) with b a b^-1 = a^4. Its elements
/// of order dividing 3 form an elementary abelian subgroup of order 9.
pub fn exponent_nine_counterexample() -> MatGroup {
    let field = gfarith::make_field(2, 1).expect("prime field of order 2");
    let point = |i: usize, j: usize| (i % 9) + 9 * (j % 3);
    let mut pa = vec![0usize; 27];
    let mut pb = vec![0usize; 27];
    for i in 0..9 {
        for j in 0..3 {
            pa[point(i, j)] = point(i + 1, j);
            pb[point(i, j)] = point(4 * i, j + 1);
        }
    }
    let a = Mat::perm_mat(field.clone(), &pa);
    let b = Mat::perm_mat(field.clone(), &pb);
    MatGroup::new(field, 27, vec![a, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfarith::make_field;

    fn minus_one_group(q: u64, m: usize, kind: Kind, p: u64, k: usize) -> Extraspecial {
        let field = make_field(p, k).unwrap();
        build_extraspecial(&field, q, m, kind).unwrap()
    }

    #[test]
    fn dihedral_and_quaternion_kinds() {
        for p in [3, 7] {
            let e = minus_one_group(2, 1, Kind::Plus, p, 1);
            let r = verify_extraspecial(&e).unwrap();
            assert_eq!(r.order, 8);
            assert_eq!(r.center_order, 2);
            assert_eq!(r.kind_detected, Kind::Plus);
            assert!(r.commutators_central);

            let e = minus_one_group(2, 1, Kind::Minus, p, 1);
            let r = verify_extraspecial(&e).unwrap();
            assert_eq!(r.order, 8);
            assert_eq!(r.center_order, 2);
            assert_eq!(r.kind_detected, Kind::Minus);
            assert!(r.commutators_central);
        }
    }

    #[test]
    fn width_two_central_products() {
        let e = minus_one_group(2, 2, Kind::Plus, 3, 1);
        let r = verify_extraspecial(&e).unwrap();
        assert_eq!(r.order, 32);
        assert_eq!(r.center_order, 2);
        assert_eq!(r.kind_detected, Kind::Plus);

        let e = minus_one_group(2, 2, Kind::Minus, 3, 1);
        let r = verify_extraspecial(&e).unwrap();
        assert_eq!(r.order, 32);
        assert_eq!(r.center_order, 2);
        assert_eq!(r.kind_detected, Kind::Minus);
    }

    #[test]
    fn order_27_exponent_3() {
        for (p, k) in [(2, 2), (7, 1)] {
            let e = minus_one_group(3, 1, Kind::Odd, p, k);
            let r = verify_extraspecial(&e).unwrap();
            assert_eq!(r.order, 27);
            assert_eq!(r.center_order, 3);
            assert_eq!(r.exponent, 3);
            assert_eq!(r.kind_detected, Kind::Odd);
            assert!(r.commutators_central);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let f2 = make_field(2, 1).unwrap();
        assert!(build_extraspecial(&f2, 2, 1, Kind::Minus).is_err());
        let f5 = make_field(5, 1).unwrap();
        assert!(build_extraspecial(&f5, 3, 1, Kind::Odd).is_err());
        let f3 = make_field(3, 1).unwrap();
        assert!(build_extraspecial(&f3, 3, 1, Kind::Odd).is_err());
        let f7 = make_field(7, 1).unwrap();
        assert!(build_extraspecial(&f7, 3, 2, Kind::Odd).is_err());
        assert!(build_extraspecial(&f7, 2, 1, Kind::Odd).is_err());
        assert!(build_extraspecial(&f7, 5, 1, Kind::Odd).is_err());
        assert!(build_extraspecial(&f7, 2, 3, Kind::Plus).is_err());
    }

    #[test]
    fn symplectic_isometry_counts() {
        let j2 = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(sp_elements(&j2, 2, 2).len(), 6);
        let j3 = vec![vec![0, 1], vec![2, 0]];
        assert_eq!(sp_elements(&j3, 2, 3).len(), 24);
        let j4 = vec![
            vec![0, 1, 0, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 0, 1],
            vec![0, 0, 1, 0],
        ];
        assert_eq!(sp_elements(&j4, 4, 2).len(), 720);
    }

    #[test]
    fn lift_normalizer_quaternion_orders() {
        for (p, k, want) in [
            (3, 1, 48u128),
            (5, 1, 96),
            (7, 1, 144),
            (3, 2, 192),
            (5, 2, 576),
            (3, 3, 624),
        ] {
            let e = minus_one_group(2, 1, Kind::Minus, p, k);
            let n = lift_normalizer(&e).unwrap();
            assert_eq!(n.lifted, 6, "p={p} k={k}");
            assert_eq!(n.group.order(), want, "p={p} k={k}");
        }
    }

    #[test]
    fn lift_normalizer_dihedral_orders() {
        for (p, want) in [(3, 16u128), (5, 32), (7, 48)] {
            let e = minus_one_group(2, 1, Kind::Plus, p, 1);
            let n = lift_normalizer(&e).unwrap();
            assert_eq!(n.lifted, 2, "p={p}");
            assert_eq!(n.group.order(), want, "p={p}");
        }
    }

    #[test]
    fn lift_normalizer_order_27() {
        for (p, k, want) in [(2, 2, 648u128), (7, 1, 1296)] {
            let e = minus_one_group(3, 1, Kind::Odd, p, k);
            let n = lift_normalizer(&e).unwrap();
            assert_eq!(n.lifted, 24, "p={p} k={k}");
            assert_eq!(n.group.order(), want, "p={p} k={k}");
        }
    }

    #[test]
    fn lift_normalizer_width_two() {
        let e = minus_one_group(2, 2, Kind::Minus, 3, 1);
        let n = lift_normalizer(&e).unwrap();
        assert_eq!(n.lifted, 120);
        assert_eq!(n.group.order(), 3840);
        assert!(!n.group.is_solvable());

        let e = minus_one_group(2, 2, Kind::Plus, 3, 1);
        let n = lift_normalizer(&e).unwrap();
        assert_eq!(n.lifted, 72);
        assert_eq!(n.group.order(), 2304);
        assert!(n.group.is_solvable());

        let e = minus_one_group(2, 2, Kind::Plus, 5, 1);
        let n = lift_normalizer(&e).unwrap();
        assert_eq!(n.lifted, 72);
        assert_eq!(n.group.order(), 4608);

        let e = minus_one_group(2, 2, Kind::Minus, 7, 1);
        let n = lift_normalizer(&e).unwrap();
        assert_eq!(n.lifted, 120);
        assert_eq!(n.group.order(), 11520);
    }

    #[test]
    fn stream_counts_whole_general_linear_group() {
        let f3 = make_field(3, 1).unwrap();
        let all = stream_gl_filter(&f3, 2, 1 << 20, &|_: &Mat| true).unwrap();
        assert_eq!(all.len(), 48);
        let f2 = make_field(2, 1).unwrap();
        let all = stream_gl_filter(&f2, 3, 1 << 20, &|_: &Mat| true).unwrap();
        assert_eq!(all.len(), 168);
        let f5 = make_field(5, 1).unwrap();
        let all = stream_gl_filter(&f5, 2, 1 << 20, &|_: &Mat| true).unwrap();
        assert_eq!(all.len(), 480);
        assert!(stream_gl_filter(&f5, 2, 10, &|_: &Mat| true).is_err());
    }

    #[test]
    fn brute_normalizer_of_split_torus_generator() {
        let f3 = make_field(3, 1).unwrap();
        let d = Mat::from_residues(f3.clone(), 2, &[1, 0, 0, 2]).unwrap();
        let sub = MatGroup::new(f3.clone(), 2, vec![d.clone()]);
        let elems = sub.elements(10).unwrap();
        let n = brute_set_normalizer(&f3, 2, 1 << 20, &[d], &elems).unwrap();
        assert_eq!(n.order(), 4);
    }

    #[test]
    fn lift_matches_brute_force() {
        let cases: Vec<(u64, usize, u64, usize, Kind)> = vec![
            (3, 1, 2, 1, Kind::Minus),
            (3, 1, 2, 1, Kind::Plus),
            (5, 1, 2, 1, Kind::Minus),
            (7, 1, 2, 1, Kind::Plus),
            (3, 2, 2, 1, Kind::Minus),
            (2, 2, 3, 1, Kind::Odd),
        ];
        for (p, k, q, m, kind) in cases {
            let field = make_field(p, k).unwrap();
            let e = build_extraspecial(&field, q, m, kind).unwrap();
            let lifted = lift_normalizer(&e).unwrap();
            let elems = e.group.elements(64).unwrap();
            let brute =
                brute_set_normalizer(&field, e.group.dim, 1 << 21, &e.gens, &elems).unwrap();
            assert_eq!(
                lifted.group.elements(4096).unwrap(),
                brute.elements(4096).unwrap(),
                "p={p} k={k} kind={}",
                kind.label()
            );
        }
    }

    #[test]
    fn semilinear_extension_orders() {
        let f9 = make_field(3, 2).unwrap();
        let e = build_extraspecial(&f9, 2, 1, Kind::Minus).unwrap();
        let n = lift_normalizer(&e).unwrap();
        let big = semilinear_normalizer(&n.group).unwrap();
        assert_eq!(big.order(), 384);
        assert_eq!(big.dim, 4);
        assert_eq!(big.field.p, 3);

        let f4 = make_field(2, 2).unwrap();
        let e = build_extraspecial(&f4, 3, 1, Kind::Odd).unwrap();
        let n = lift_normalizer(&e).unwrap();
        let big = semilinear_normalizer(&n.group).unwrap();
        assert_eq!(big.order(), 1296);
        assert_eq!(big.dim, 6);
        assert_eq!(big.field.p, 2);

        let f3 = make_field(3, 1).unwrap();
        let id = MatGroup::trivial(f3, 2);
        assert!(semilinear_normalizer(&id).is_err());
    }

    #[test]
    fn tensor_transport_order() {
        let f3 = make_field(3, 1).unwrap();
        let e = build_extraspecial(&f3, 2, 1, Kind::Minus).unwrap();
        let n = lift_normalizer(&e).unwrap();
        let big = tensor_normalizer(&n.group, 2);
        assert_eq!(big.dim, 4);
        assert_eq!(big.order(), 1152);
        // Every generator must normalize the tensored subgroup.
        let id2 = Mat::identity(f3.clone(), 2);
        let tensored: HashSet<Mat> = e
            .group
            .elements(10)
            .unwrap()
            .iter()
            .map(|x| x.kron(&id2))
            .collect();
        for g in &big.gens {
            let ginv = g.inverse().unwrap();
            for x in &tensored {
                assert!(tensored.contains(&g.mul(x).mul(&ginv)));
            }
        }
    }

    #[test]
    fn order_27_group_with_an_order_9_element() {
        let g = exponent_nine_counterexample();
        let elems = g.elements(64).unwrap();
        assert_eq!(elems.len(), 27);
        assert!(elems
            .iter()
            .any(|x| x.multiplicative_order(16) == Some(9)));
        let cubes_to_one: Vec<&Mat> = elems
            .iter()
            .filter(|x| x.pow(3).is_identity())
            .collect();
        assert_eq!(cubes_to_one.len(), 9);
        for a in &cubes_to_one {
            for b in &cubes_to_one {
                assert_eq!(a.mul(b), b.mul(a));
            }
            assert!(a.multiplicative_order(16).unwrap() <= 3);
        }
        let central = elems
            .iter()
            .filter(|x| g.gens.iter().all(|h| x.mul(h) == h.mul(x)))
            .count();
        assert_eq!(central, 3);
    }
}
