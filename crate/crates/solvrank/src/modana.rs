//! Module-theoretic analysis of matrix group actions.
//!
//! The natural module of a matrix group is inspected through cyclic
//! submodules ("spins"): the smallest invariant subspace containing a seed
//! vector.  On top of spins sit irreducibility, the minimal-submodule list,
//! homogeneity (all minimal submodules isomorphic and spanning), and the
//! quasi-primitivity test: every nontrivial normal subgroup must act
//! homogeneously.

use crate::engine::MatGroup;
use crate::gfarith::Field;
use crate::matlin::{kernel_basis, Mat, RowSpace};
use crate::Result;
use std::sync::Arc;

/// The smallest subspace containing `seed` and invariant under all `gens`.
pub fn spin(field: &Arc<Field>, dim: usize, gens: &[Mat], seed: &[u64]) -> RowSpace {
    let mut space = RowSpace::new(field.clone(), dim);
    if field.is_zero_vec(seed) {
        return space;
    }
    space.insert(seed);
    // Worklist of basis images; the canonical basis changes as rows are
    // inserted, so iterate over snapshots until stable.
    let mut frontier: Vec<Vec<u64>> = vec![seed.to_vec()];
    while let Some(v) = frontier.pop() {
        for g in gens {
            let img = g.mul_vec(&v);
            if !space.contains(&img) {
                space.insert(&img);
                frontier.push(img);
            }
        }
        if space.dim() == dim {
            break;
        }
    }
    space
}

/// The full space as a [`RowSpace`] (standard basis).
pub fn full_space(field: &Arc<Field>, dim: usize) -> RowSpace {
    let mut space = RowSpace::new(field.clone(), dim);
    let k = field.k;
    let mut e = vec![0u64; dim * k];
    for i in 0..dim {
        e[i * k] = 1;
        space.insert(&e);
        e[i * k] = 0;
    }
    space
}

/// Representatives of the one-dimensional subspaces of `space`: every
/// vector whose first nonzero coordinate (in the canonical basis) is 1.
pub fn lines_of(space: &RowSpace) -> Vec<Vec<u64>> {
    let f = space.field();
    let w = space.dim();
    let mut reps = Vec::new();
    if w == 0 {
        return reps;
    }
    let mut idx = vec![0u64; w];
    'odometer: loop {
        // Advance the odometer (last coordinate fastest).
        let mut j = w;
        loop {
            if j == 0 {
                break 'odometer;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < f.order {
                break;
            }
            idx[j] = 0;
        }
        let coords: Vec<Vec<u64>> = idx.iter().map(|&i| f.lex_elem(i)).collect();
        let first = coords.iter().find(|c| !f.is_zero(c));
        if let Some(first) = first {
            if f.is_one(first) {
                reps.push(space.vec_from_coords(&coords.concat()));
            }
        }
    }
    reps
}

/// Whether the group generated by `gens` acts irreducibly on its natural
/// module.
pub fn is_irreducible(field: &Arc<Field>, dim: usize, gens: &[Mat]) -> bool {
    if dim == 1 {
        return true;
    }
    let v = full_space(field, dim);
    lines_of(&v)
        .into_iter()
        .all(|line| spin(field, dim, gens, &line).dim() == dim)
}

/// All minimal nonzero submodules, as canonical row spaces sorted by their
/// dedupe keys.
///
/// Every minimal submodule is the spin of each of its lines, so collecting
/// the spins of all lines of the full space and discarding those that
/// strictly contain another collected spin is exhaustive.
pub fn minimal_submodules(field: &Arc<Field>, dim: usize, gens: &[Mat]) -> Vec<RowSpace> {
    let v = full_space(field, dim);
    let mut spins: Vec<RowSpace> = Vec::new();
    let mut keys: Vec<Vec<u64>> = Vec::new();
    for line in lines_of(&v) {
        let s = spin(field, dim, gens, &line);
        let key = s.key();
        if !keys.contains(&key) {
            keys.push(key);
            spins.push(s);
        }
    }
    let contains_space = |outer: &RowSpace, inner: &RowSpace| -> bool {
        inner.basis().iter().all(|row| outer.contains(row))
    };
    let mut minimal: Vec<RowSpace> = spins
        .iter()
        .filter(|s| {
            !spins
                .iter()
                .any(|t| t.dim() < s.dim() && contains_space(s, t))
        })
        .cloned()
        .collect();
    minimal.sort_by_key(|s| s.key());
    minimal
}

/// Matrices of the `gens` action restricted to an invariant subspace, in the
/// subspace's canonical basis; `None` if the subspace is not invariant.
pub fn action_on_subspace(gens: &[Mat], space: &RowSpace) -> Option<Vec<Mat>> {
    let f = space.field().clone();
    let w = space.dim();
    let mut out = Vec::with_capacity(gens.len());
    for g in gens {
        let mut m = Mat::zero(f.clone(), w);
        for (j, b) in space.basis().iter().enumerate() {
            let img = g.mul_vec(b);
            let coords = space.coords_of(&img)?;
            let k = f.k;
            for i in 0..w {
                m.set_entry(i, j, &coords[i * k..(i + 1) * k]);
            }
        }
        out.push(m);
    }
    Some(out)
}

/// Dimension of the space of module homomorphisms intertwining two actions
/// of the same abstract generators: matrices T with T * a_i = b_i * T.
pub fn hom_space_dim(a: &[Mat], b: &[Mat]) -> usize {
    assert_eq!(a.len(), b.len(), "actions must list the same generators");
    if a.is_empty() {
        // No constraints: all of Hom(V_a, V_b).
        unreachable!("homogeneity questions always carry at least one generator");
    }
    let f = a[0].field.clone();
    let k = f.k;
    let da = a[0].n; // T has shape db x da
    let db = b[0].n;
    let unknowns = da * db;
    let mut rows: Vec<u64> = Vec::new();
    let mut nrows = 0;
    let mut tmp = f.zero();
    for (ag, bg) in a.iter().zip(b) {
        // Constraint (i, j): sum_c T[i][c] a[c][j] - sum_r b[i][r] T[r][j] = 0.
        for i in 0..db {
            for j in 0..da {
                let mut row = vec![0u64; unknowns * k];
                for c in 0..da {
                    let u = i * da + c;
                    f.add(&row[u * k..(u + 1) * k].to_vec(), ag.entry(c, j), &mut tmp);
                    row[u * k..(u + 1) * k].copy_from_slice(&tmp);
                }
                for r in 0..db {
                    let u = r * da + j;
                    f.sub(&row[u * k..(u + 1) * k].to_vec(), bg.entry(i, r), &mut tmp);
                    row[u * k..(u + 1) * k].copy_from_slice(&tmp);
                }
                rows.extend_from_slice(&row);
                nrows += 1;
            }
        }
    }
    kernel_basis(&f, nrows, unknowns, &rows).len()
}

/// Whether the module of the group generated by `gens` is homogeneous: the
/// minimal submodules are pairwise isomorphic and together span the space.
pub fn is_homogeneous(field: &Arc<Field>, dim: usize, gens: &[Mat]) -> bool {
    if gens.is_empty() {
        // The trivial group: homogeneous (every line is a trivial module).
        return true;
    }
    let minimals = minimal_submodules(field, dim, gens);
    if minimals.is_empty() {
        return false;
    }
    // The minimal submodules must span.
    let mut sum = RowSpace::new(field.clone(), dim);
    for m in &minimals {
        for row in m.basis() {
            sum.insert(row);
        }
    }
    if sum.dim() != dim {
        return false;
    }
    // Pairwise isomorphism; it suffices to compare everything with the
    // first (isomorphism of irreducibles is transitive).
    let first = action_on_subspace(gens, &minimals[0]).expect("minimal submodule is invariant");
    for other in &minimals[1..] {
        if first[0].n != other.dim() {
            return false;
        }
        let act = action_on_subspace(gens, other).expect("minimal submodule is invariant");
        // A nonzero homomorphism between irreducible modules is invertible,
        // so hom-space dimension > 0 already certifies isomorphism.
        if hom_space_dim(&first, &act) == 0 {
            return false;
        }
    }
    true
}

/// Whether every nontrivial normal subgroup of `group` acts homogeneously on
/// the natural module.  `cap` bounds the element enumeration used for the
/// normal subgroup lattice.
pub fn is_quasiprimitive(group: &MatGroup, cap: u64) -> Result<bool> {
    let normals = group.normal_subgroups(cap)?;
    Ok(is_quasiprimitive_given(group, &normals))
}

/// Quasi-primitivity against a precomputed normal subgroup list.
pub fn is_quasiprimitive_given(group: &MatGroup, normals: &[MatGroup]) -> bool {
    for n in normals {
        if n.is_trivial() {
            continue;
        }
        // Scalar normal subgroups act homogeneously on everything.
        if n.gens.iter().all(|g| g.as_scalar().is_some()) {
            continue;
        }
        if !is_homogeneous(&group.field, group.dim, &n.gens) {
            return false;
        }
    }
    true
}

/// All submodules of exactly dimension `want` for the group generated by
/// `gens`, found as sums of cyclic submodules.  Errs when the vector count
/// or the closure size is out of budget.
fn submodules_of_dim(
    field: &Arc<Field>,
    dim: usize,
    gens: &[Mat],
    want: usize,
) -> Result<Vec<RowSpace>> {
    let total = (0..dim)
        .try_fold(1u64, |acc, _| acc.checked_mul(field.order))
        .filter(|&t| t <= 250_000)
        .ok_or_else(|| {
            crate::Error::BudgetExceeded("too many vectors for submodule enumeration".into())
        })?;
    let k = field.k;
    let mut distinct: Vec<RowSpace> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    for code in 1..total {
        let mut v = vec![0u64; dim * k];
        let mut rest = code;
        for chunk in v.chunks_mut(k) {
            chunk.copy_from_slice(&field.lex_elem(rest % field.order));
            rest /= field.order;
        }
        let s = spin(field, dim, gens, &v);
        if s.dim() > want {
            continue;
        }
        if seen.insert(s.key()) {
            distinct.push(s);
        }
    }
    // Close under sums, keeping only spaces that can still fit inside a
    // dimension-`want` submodule.
    let mut qi = 0;
    while qi < distinct.len() {
        let cur = distinct[qi].clone();
        qi += 1;
        for other_i in 0..qi.saturating_sub(1) {
            let mut sum = cur.clone();
            for row in distinct[other_i].basis() {
                sum.insert(row);
            }
            if sum.dim() > want || seen.contains(&sum.key()) {
                continue;
            }
            seen.insert(sum.key());
            distinct.push(sum);
            if distinct.len() > 20_000 {
                return Err(crate::Error::BudgetExceeded(
                    "submodule closure exceeded the cap".into(),
                ));
            }
        }
    }
    Ok(distinct.into_iter().filter(|s| s.dim() == want).collect())
}

/// Whether the natural module of the (irreducible) group admits an
/// invariant direct-sum decomposition into two or more blocks.  The blocks
/// of such a system are permuted transitively (the group is irreducible),
/// so they form one orbit of submodules of the kernel of the block action;
/// every normal subgroup is tried as that kernel, so `normals` must be the
/// complete normal subgroup list including the trivial group.
pub fn has_block_system(group: &MatGroup, normals: &[MatGroup]) -> Result<bool> {
    let d = group.dim;
    let f = &group.field;
    let g_order = group.order();
    for r in 2..=d {
        if d % r != 0 {
            continue;
        }
        let bd = d / r;
        let rfact: u128 = (1..=r as u128).product();
        for kn in normals {
            let index = g_order / kn.order();
            // The kernel of a faithful transitive action on r blocks has
            // index divisible by r and dividing r!.
            if index < 2 || index % (r as u128) != 0 || rfact % index != 0 {
                continue;
            }
            let subs = submodules_of_dim(f, d, &kn.gens, bd)?;
            if subs.len() < r {
                continue;
            }
            let index_of: std::collections::HashMap<Vec<u64>, usize> =
                subs.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
            let mut seen = vec![false; subs.len()];
            for start in 0..subs.len() {
                if seen[start] {
                    continue;
                }
                let mut orbit = vec![start];
                seen[start] = true;
                let mut qi = 0;
                while qi < orbit.len() {
                    let cur = orbit[qi];
                    qi += 1;
                    for g in &group.gens {
                        let mut img = RowSpace::new(f.clone(), d);
                        for row in subs[cur].basis() {
                            img.insert(&g.mul_vec(row));
                        }
                        let j = *index_of
                            .get(&img.key())
                            .expect("image of a kernel submodule is a kernel submodule");
                        if !seen[j] {
                            seen[j] = true;
                            orbit.push(j);
                        }
                    }
                }
                if orbit.len() == r {
                    let mut sum = RowSpace::new(f.clone(), d);
                    for &j in &orbit {
                        for row in subs[j].basis() {
                            sum.insert(row);
                        }
                    }
                    if sum.dim() == d {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{gl_gens, MatGroup};
    use crate::gfarith::make_field;

    #[test]
    fn spin_of_coordinate_line_under_torus() {
        let f = make_field(3, 1).unwrap();
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        let s = spin(&f, 2, &[d], &[1, 0]);
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&[2, 0]));
        assert!(!s.contains(&[0, 1]));
    }

    #[test]
    fn line_reps_counts() {
        let f3 = make_field(3, 1).unwrap();
        let v2 = full_space(&f3, 2);
        // (3^2 - 1) / 2 = 4 lines.
        assert_eq!(lines_of(&v2).len(), 4);
        let v3 = full_space(&f3, 3);
        assert_eq!(lines_of(&v3).len(), 13);
        let f4 = make_field(2, 2).unwrap();
        let w2 = full_space(&f4, 2);
        // (16 - 1) / 3 = 5 lines over GF(4).
        assert_eq!(lines_of(&w2).len(), 5);
    }

    #[test]
    fn irreducibility_cases() {
        let f = make_field(3, 1).unwrap();
        // The full linear group is irreducible.
        assert!(is_irreducible(&f, 2, &gl_gens(&f, 2)));
        // A split torus is not.
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        assert!(!is_irreducible(&f, 2, &[d]));
        // The companion matrix of an irreducible quadratic is.
        let c = Mat::from_residues(f.clone(), 2, &[0, 2, 1, 0]).unwrap();
        assert_eq!(c.pow(2), Mat::scalar_mat(f.clone(), 2, &[2]));
        assert!(is_irreducible(&f, 2, &[c]));
        // A transvection alone is not.
        let mut t = Mat::identity(f.clone(), 2);
        t.set_entry(0, 1, &[1]);
        assert!(!is_irreducible(&f, 2, &[t]));
    }

    #[test]
    fn minimal_submodules_of_scalars_and_torus() {
        let f = make_field(3, 1).unwrap();
        let minus = Mat::scalar_mat(f.clone(), 2, &[2]);
        // Scalars leave every line invariant: 4 minimal submodules.
        let mins = minimal_submodules(&f, 2, &[minus]);
        assert_eq!(mins.len(), 4);
        assert!(mins.iter().all(|m| m.dim() == 1));
        // A split torus with distinct characters: only the two coordinate
        // axes are minimal.
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        let mins = minimal_submodules(&f, 2, &[d]);
        assert_eq!(mins.len(), 2);
        // An irreducible action has the whole space as its only minimal.
        let c = Mat::from_residues(f.clone(), 2, &[0, 2, 1, 0]).unwrap();
        let mins = minimal_submodules(&f, 2, &[c]);
        assert_eq!(mins.len(), 1);
        assert_eq!(mins[0].dim(), 2);
    }

    #[test]
    fn homogeneity_cases() {
        let f = make_field(3, 1).unwrap();
        // Scalars: homogeneous.
        let minus = Mat::scalar_mat(f.clone(), 2, &[2]);
        assert!(is_homogeneous(&f, 2, &[minus]));
        // Distinct-character torus: not homogeneous.
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        assert!(!is_homogeneous(&f, 2, &[d]));
        // Irreducible: trivially homogeneous.
        let c = Mat::from_residues(f.clone(), 2, &[0, 2, 1, 0]).unwrap();
        assert!(is_homogeneous(&f, 2, &[c.clone()]));
        // Two copies of one irreducible module: homogeneous with several
        // minimal submodules.  The endomorphism field of the summand has 9
        // elements, so the copies are indexed by its projective line.
        let c2 = c.kron(&Mat::identity(f.clone(), 2));
        let mins = minimal_submodules(&f, 4, &[c2.clone()]);
        assert_eq!(mins.len(), 10);
        assert!(mins.iter().all(|m| m.dim() == 2));
        assert!(is_homogeneous(&f, 4, &[c2]));
        // A unipotent group has a unique minimal submodule that does not
        // span: not homogeneous.
        let mut t = Mat::identity(f.clone(), 2);
        t.set_entry(0, 1, &[1]);
        assert!(!is_homogeneous(&f, 2, &[t]));
    }

    #[test]
    fn hom_space_dimensions() {
        let f = make_field(3, 1).unwrap();
        let c = Mat::from_residues(f.clone(), 2, &[0, 2, 1, 0]).unwrap();
        // A module is isomorphic to itself; endomorphisms of this one form
        // GF(9), so the hom space has dimension 2.
        assert_eq!(hom_space_dim(&[c.clone()], &[c.clone()]), 2);
        // Against its inverse-transpose twin (the dual), still isomorphic
        // here or not; just check symmetry of the computation.
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        assert_eq!(hom_space_dim(&[d.clone()], &[d.clone()]), 2);
        // Two one-dimensional modules with different characters admit no
        // nonzero homomorphism.
        let a = Mat::from_residues(f.clone(), 1, &[1]).unwrap();
        let b = Mat::from_residues(f.clone(), 1, &[2]).unwrap();
        assert_eq!(hom_space_dim(&[a.clone()], &[b]), 0);
        assert_eq!(hom_space_dim(&[a.clone()], &[a]), 1);
    }

    #[test]
    fn quasiprimitivity_cases() {
        let f = make_field(3, 1).unwrap();
        // The full linear group: every normal subgroup acts homogeneously.
        let gl = MatGroup::new(f.clone(), 2, gl_gens(&f, 2));
        assert!(is_quasiprimitive(&gl, 100).unwrap());
        // The monomial group (torus plus coordinate swap) is irreducible but
        // its normal torus splits the module into distinct characters.
        let d = Mat::from_residues(f.clone(), 2, &[2, 0, 0, 1]).unwrap();
        let w = Mat::from_residues(f.clone(), 2, &[0, 1, 1, 0]).unwrap();
        let mono = MatGroup::new(f.clone(), 2, vec![d, w]);
        assert_eq!(mono.order(), 8);
        assert!(is_irreducible(&f, 2, &mono.gens));
        assert!(!is_quasiprimitive(&mono, 100).unwrap());
    }
}
