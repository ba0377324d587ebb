//! Finite matrix-group machinery.
//!
//! Groups are given by matrix generators over GF(p^k) acting on the integer
//! encoding of the underlying vector space (see [`crate::matlin`]).  A
//! deterministic stabilizer chain provides order and membership without
//! enumerating elements, so the same code handles both tiny groups and full
//! general linear groups over small domains.  Explicit element enumeration
//! is budgeted and used only where the algorithms genuinely need it
//! (centralizers, normalizers, subgroup searches).

use crate::gfarith::Field;
use crate::matlin::Mat;
use crate::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

/// A finite matrix group with lazily built stabilizer chain.
#[derive(Debug, Clone)]
pub struct MatGroup {
    /// Coefficient field of the matrices.
    pub field: Arc<Field>,
    /// Matrix dimension.
    pub dim: usize,
    /// Generators (identity generators are dropped).
    pub gens: Vec<Mat>,
    chain: OnceLock<StabChain>,
}

impl MatGroup {
    /// Builds a group from generators.
    pub fn new(field: Arc<Field>, dim: usize, gens: Vec<Mat>) -> MatGroup {
        let gens: Vec<Mat> = gens
            .into_iter()
            .inspect(|g| {
                assert!(
                    g.field == field && g.n == dim,
                    "generator dimension/field mismatch"
                );
            })
            .filter(|g| !g.is_identity())
            .collect();
        MatGroup { field, dim, gens, chain: OnceLock::new() }
    }

    /// The trivial group.
    pub fn trivial(field: Arc<Field>, dim: usize) -> MatGroup {
        MatGroup::new(field, dim, Vec::new())
    }

    /// Number of points of the permutation domain, p^(k * dim).
    pub fn domain_size(&self) -> u64 {
        (0..self.dim * self.field.k).fold(1u64, |acc, _| acc * self.field.p)
    }

    /// The identity element.
    pub fn identity(&self) -> Mat {
        Mat::identity(self.field.clone(), self.dim)
    }

    /// The stabilizer chain (built on first use).
    pub fn chain(&self) -> &StabChain {
        self.chain.get_or_init(|| StabChain::build(self.domain_size(), &self.gens))
    }

    /// Group order.
    pub fn order(&self) -> u128 {
        self.chain().order()
    }

    /// Membership test via sifting.
    pub fn contains(&self, m: &Mat) -> bool {
        if m.field != self.field || m.n != self.dim {
            return false;
        }
        let (residue, _) = self.chain().strip(m.clone());
        residue.is_identity()
    }

    /// Whether this group is the trivial group.
    pub fn is_trivial(&self) -> bool {
        self.gens.is_empty() || self.order() == 1
    }

    /// All elements in canonical sorted order; fails if the order exceeds
    /// `cap`.
    pub fn elements(&self, cap: u64) -> Result<Vec<Mat>> {
        let order = self.order();
        if order > cap as u128 {
            return Err(Error::BudgetExceeded(format!(
                "element enumeration of group of order {order} (cap {cap})"
            )));
        }
        let id = self.identity();
        let mut seen: HashSet<Mat> = HashSet::new();
        seen.insert(id.clone());
        let mut frontier = vec![id];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for m in &frontier {
                for g in &self.gens {
                    let prod = m.mul(g);
                    if seen.insert(prod.clone()) {
                        next.push(prod);
                    }
                }
            }
            frontier = next;
        }
        let mut elems: Vec<Mat> = seen.into_iter().collect();
        elems.sort_unstable();
        debug_assert_eq!(elems.len() as u128, order);
        Ok(elems)
    }

    /// The orbit of a point, in discovery order.
    pub fn orbit_of(&self, start: u64) -> Vec<u64> {
        let mut orbit = vec![start];
        let mut seen: HashSet<u64> = orbit.iter().copied().collect();
        let mut i = 0;
        while i < orbit.len() {
            let pt = orbit[i];
            i += 1;
            for g in &self.gens {
                let img = g.apply_to_point(pt);
                if seen.insert(img) {
                    orbit.push(img);
                }
            }
        }
        orbit
    }

    /// Number of orbits on the full domain (the zero vector included).
    ///
    /// For the affine action of V ⋊ G on V, this count is exactly the
    /// permutation rank: suborbits of the point stabilizer correspond to
    /// G-orbits on V.
    pub fn permutation_rank(&self) -> u64 {
        let dom = self.domain_size();
        let mut visited = vec![false; dom as usize];
        let mut count = 0u64;
        for start in 0..dom {
            if visited[start as usize] {
                continue;
            }
            count += 1;
            for pt in self.orbit_of(start) {
                visited[pt as usize] = true;
            }
        }
        count
    }

    /// Permutation rank by averaging fixed-point counts over the group
    /// (Burnside); needs full element enumeration, so it serves as an
    /// independent cross-check for [`MatGroup::permutation_rank`].
    pub fn permutation_rank_burnside(&self, cap: u64) -> Result<u64> {
        let elems = self.elements(cap)?;
        let id = self.identity();
        let mut total: u128 = 0;
        for g in &elems {
            // Fixed vectors of g = kernel of (g - I); count is |F|^nullity.
            let nullity = (self.dim - g.sub(&id).rank()) as u32;
            total += (self.field.order as u128).pow(nullity);
        }
        let order = elems.len() as u128;
        debug_assert_eq!(total % order, 0);
        Ok((total / order) as u64)
    }

    /// Normal closure of the given elements in this group.
    pub fn normal_closure(&self, seed: &[Mat]) -> MatGroup {
        // Reduce the seed to a short generating sequence first: chains are
        // rebuilt per addition below, so redundant generators are costly.
        let mut gens: Vec<Mat> = Vec::new();
        let mut sub = MatGroup::trivial(self.field.clone(), self.dim);
        for m in seed {
            if !m.is_identity() && !sub.contains(m) {
                gens.push(m.clone());
                sub = MatGroup::new(self.field.clone(), self.dim, gens.clone());
            }
        }
        loop {
            let mut grew = false;
            for g in &self.gens {
                let ginv = g.inverse().expect("group generators are invertible");
                for s in gens.clone() {
                    let conj = g.mul(&s).mul(&ginv);
                    if !sub.contains(&conj) {
                        gens.push(conj);
                        sub = MatGroup::new(self.field.clone(), self.dim, gens.clone());
                        grew = true;
                    }
                }
            }
            if !grew {
                return sub;
            }
        }
    }

    /// The derived subgroup: normal closure of the generator commutators.
    pub fn derived_subgroup(&self) -> MatGroup {
        let mut comms = Vec::new();
        for a in &self.gens {
            for b in &self.gens {
                let c = a
                    .inverse()
                    .expect("invertible")
                    .mul(&b.inverse().expect("invertible"))
                    .mul(a)
                    .mul(b);
                if !c.is_identity() {
                    comms.push(c);
                }
            }
        }
        self.normal_closure(&comms)
    }

    /// Orders along the derived series, ending at 1 for solvable groups and
    /// at the first repeated order otherwise.
    pub fn derived_series_orders(&self) -> Vec<u128> {
        let mut orders = vec![self.order()];
        let mut g = self.clone();
        loop {
            let d = g.derived_subgroup();
            let o = d.order();
            if o == *orders.last().unwrap() {
                // Perfect group reached; series stabilized above 1.
                break;
            }
            orders.push(o);
            if o == 1 {
                break;
            }
            g = d;
        }
        orders
    }

    /// Whether the group is solvable (derived series reaches the identity).
    pub fn is_solvable(&self) -> bool {
        *self.derived_series_orders().last().unwrap() == 1
    }

    /// Elements of this group commuting with every matrix in `targets`.
    pub fn centralizer_of_set(&self, cap: u64, targets: &[Mat]) -> Result<MatGroup> {
        let elems = self.elements(cap)?;
        let gens: Vec<Mat> = elems
            .into_iter()
            .filter(|m| targets.iter().all(|t| m.mul(t) == t.mul(m)))
            .collect();
        Ok(MatGroup::new(self.field.clone(), self.dim, gens))
    }

    /// The center of the group.
    pub fn center(&self, cap: u64) -> Result<MatGroup> {
        self.centralizer_of_set(cap, &self.gens)
    }

    /// Elements of this group normalizing the subgroup `sub`, by element
    /// filtering.
    pub fn normalizer_of(&self, cap: u64, sub: &MatGroup) -> Result<MatGroup> {
        let elems = self.elements(cap)?;
        let gens: Vec<Mat> = elems
            .into_iter()
            .filter(|m| {
                let minv = m.inverse().expect("group elements are invertible");
                sub.gens.iter().all(|s| sub.contains(&m.mul(s).mul(&minv)))
            })
            .collect();
        Ok(MatGroup::new(self.field.clone(), self.dim, gens))
    }

    /// Searches this group for an element conjugating the subgroup generated
    /// by `a_gens` onto `b`.
    pub fn conjugating_element(
        &self,
        cap: u64,
        a_gens: &[Mat],
        b: &MatGroup,
    ) -> Result<Option<Mat>> {
        let a = MatGroup::new(self.field.clone(), self.dim, a_gens.to_vec());
        if a.order() != b.order() {
            return Ok(None);
        }
        let elems = self.elements(cap)?;
        for m in elems {
            let minv = m.inverse().expect("invertible");
            if a_gens.iter().all(|s| b.contains(&m.mul(s).mul(&minv))) {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }

    /// Conjugacy classes of elements, each class sorted, classes ordered by
    /// their smallest member.  Needs element enumeration.
    pub fn element_conjugacy_classes(&self, cap: u64) -> Result<Vec<Vec<Mat>>> {
        let elems = self.elements(cap)?;
        let gen_invs: Vec<Mat> = self
            .gens
            .iter()
            .map(|g| g.inverse().expect("invertible"))
            .collect();
        let mut assigned: HashSet<Mat> = HashSet::new();
        let mut classes = Vec::new();
        for e in &elems {
            if assigned.contains(e) {
                continue;
            }
            // Closure of {e} under conjugation by generators.
            let mut class = vec![e.clone()];
            assigned.insert(e.clone());
            let mut i = 0;
            while i < class.len() {
                let cur = class[i].clone();
                i += 1;
                for (g, ginv) in self.gens.iter().zip(&gen_invs) {
                    let conj = g.mul(&cur).mul(ginv);
                    if assigned.insert(conj.clone()) {
                        class.push(conj);
                    }
                }
            }
            class.sort_unstable();
            classes.push(class);
        }
        Ok(classes)
    }

    /// All normal subgroups (the trivial and full group included), as the
    /// join-closure of normal closures of element conjugacy classes.  Every
    /// normal subgroup is a union of classes and equals the join of the
    /// closures of the classes it contains, so this enumeration is complete.
    pub fn normal_subgroups(&self, cap: u64) -> Result<Vec<MatGroup>> {
        let classes = self.element_conjugacy_classes(cap)?;
        let mut by_order: HashMap<Vec<Mat>, MatGroup> = HashMap::new();
        let mut atoms: Vec<MatGroup> = Vec::new();
        let key_of = |g: &MatGroup, cap: u64| -> Result<Vec<Mat>> { g.elements(cap) };
        // Normal closures of single classes.
        for class in &classes {
            let ncl = self.normal_closure(&[class[0].clone()]);
            let key = key_of(&ncl, cap)?;
            if !by_order.contains_key(&key) {
                by_order.insert(key, ncl.clone());
                atoms.push(ncl);
            }
        }
        // Close under pairwise joins.
        let mut all: Vec<(Vec<Mat>, MatGroup)> =
            by_order.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut frontier: Vec<(Vec<Mat>, MatGroup)> = all.clone();
        while let Some((_, g)) = frontier.pop() {
            for atom in &atoms {
                let mut gens = g.gens.clone();
                gens.extend(atom.gens.iter().cloned());
                let join = MatGroup::new(self.field.clone(), self.dim, gens);
                let key = key_of(&join, cap)?;
                if !by_order.contains_key(&key) {
                    by_order.insert(key.clone(), join.clone());
                    all.push((key.clone(), join.clone()));
                    frontier.push((key, join));
                }
            }
        }
        let mut result: Vec<MatGroup> = Vec::new();
        // Include the trivial group explicitly (empty class join base case).
        result.push(MatGroup::trivial(self.field.clone(), self.dim));
        let mut seen_orders: Vec<Vec<Mat>> = vec![result[0].elements(cap)?];
        all.sort_by(|(ka, _), (kb, _)| ka.len().cmp(&kb.len()).then_with(|| ka.cmp(kb)));
        for (key, g) in all {
            if !seen_orders.contains(&key) {
                seen_orders.push(key);
                result.push(g);
            }
        }
        Ok(result)
    }
}

/// Generators of GL(n, F): a primitive-scalar diagonal, an n-cycle
/// coordinate permutation, and one transvection.
pub fn gl_gens(field: &Arc<Field>, n: usize) -> Vec<Mat> {
    let prim = field.primitive_element();
    let mut gens = Vec::new();
    let mut diag_entries = vec![field.one(); n];
    diag_entries[0] = prim;
    gens.push(Mat::diag(field.clone(), &diag_entries));
    if n >= 2 {
        let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        gens.push(Mat::perm_mat(field.clone(), &perm));
        let mut t = Mat::identity(field.clone(), n);
        t.set_entry(0, 1, &field.one());
        gens.push(t);
    }
    gens
}

/// The order of GL(n, q) as a product formula, for cross-checks.
pub fn gl_order(n: usize, q: u64) -> u128 {
    let qn = (0..n).fold(1u128, |a, _| a * q as u128);
    (0..n)
        .map(|i| qn - (0..i).fold(1u128, |a, _| a * q as u128))
        .product()
}

/// A deterministic stabilizer chain (base, strong generators, transversals).
#[derive(Debug, Clone)]
pub struct StabChain {
    levels: Vec<Level>,
}

#[derive(Debug, Clone)]
struct Level {
    base: u64,
    gens: Vec<Mat>,
    orbit: Vec<u64>,
    transversal: HashMap<u64, Mat>,
}

impl StabChain {
    /// Builds the chain for the group generated by `gens` acting on
    /// `[0, domain)`.
    pub fn build(domain: u64, gens: &[Mat]) -> StabChain {
        let mut chain = StabChain { levels: Vec::new() };
        for g in gens {
            chain.add_generator(0, g.clone(), domain);
        }
        let mut l = chain.levels.len();
        while l > 0 {
            l -= 1;
            chain.complete(l, domain);
        }
        chain
    }

    /// Group order: product of orbit lengths.
    pub fn order(&self) -> u128 {
        self.levels.iter().map(|l| l.orbit.len() as u128).product()
    }

    /// Sifts `h` from the top of the chain; returns the residue and the
    /// level at which sifting stopped (== number of levels on success).
    pub fn strip(&self, h: Mat) -> (Mat, usize) {
        self.strip_from(0, h)
    }

    fn strip_from(&self, start: usize, mut h: Mat) -> (Mat, usize) {
        for (j, level) in self.levels.iter().enumerate().skip(start) {
            let img = h.apply_to_point(level.base);
            if img == level.base {
                continue;
            }
            match level.transversal.get(&img) {
                None => return (h, j),
                Some(u) => {
                    h = u.inverse().expect("transversal elements invertible").mul(&h);
                }
            }
        }
        (h, self.levels.len())
    }

    /// First domain point moved by `m`, if any (0 encodes the origin, which
    /// linear maps always fix, so the scan starts at 1).
    fn first_moved(m: &Mat, domain: u64) -> Option<u64> {
        (1..domain).find(|&pt| m.apply_to_point(pt) != pt)
    }

    fn add_generator(&mut self, level: usize, g: Mat, domain: u64) {
        if g.is_identity() {
            return;
        }
        if level == self.levels.len() {
            let base = Self::first_moved(&g, domain).expect("non-identity matrix moves a point");
            self.levels.push(Level {
                base,
                gens: Vec::new(),
                orbit: Vec::new(),
                transversal: HashMap::new(),
            });
        }
        if !self.levels[level].gens.contains(&g) {
            self.levels[level].gens.push(g);
        }
    }

    /// Recomputes the orbit and transversal of one level.
    fn rebuild_orbit(&mut self, l: usize) {
        let level = &mut self.levels[l];
        level.orbit.clear();
        level.transversal.clear();
        let id = level.gens[0].field.clone();
        let id = Mat::identity(id, level.gens[0].n);
        level.orbit.push(level.base);
        level.transversal.insert(level.base, id);
        let mut i = 0;
        while i < level.orbit.len() {
            let pt = level.orbit[i];
            i += 1;
            let u = level.transversal[&pt].clone();
            for gi in 0..level.gens.len() {
                let img = level.gens[gi].apply_to_point(pt);
                if !level.transversal.contains_key(&img) {
                    let rep = level.gens[gi].mul(&u);
                    level.orbit.push(img);
                    level.transversal.insert(img, rep);
                }
            }
        }
    }

    /// Ensures every Schreier generator of level `l` sifts to the identity
    /// through the deeper levels, adding residues (and levels) as needed.
    fn complete(&mut self, l: usize, domain: u64) {
        loop {
            self.rebuild_orbit(l);
            let orbit = self.levels[l].orbit.clone();
            let gens = self.levels[l].gens.clone();
            let mut dirty = false;
            'scan: for &beta in &orbit {
                let u_beta = self.levels[l].transversal[&beta].clone();
                for s in &gens {
                    let img = s.apply_to_point(beta);
                    let u_img = self.levels[l].transversal[&img].clone();
                    // Schreier generator for (beta, s); it fixes this base.
                    let z = u_img
                        .inverse()
                        .expect("invertible")
                        .mul(s)
                        .mul(&u_beta);
                    if z.is_identity() {
                        continue;
                    }
                    let (residue, j) = self.strip_from(l + 1, z);
                    if residue.is_identity() {
                        continue;
                    }
                    // Install the residue in levels l+1 ..= j, then restore
                    // the completeness invariant bottom-up.
                    for t in l + 1..=j {
                        self.add_generator(t, residue.clone(), domain);
                    }
                    let mut t = j.min(self.levels.len() - 1);
                    while t > l {
                        self.complete(t, domain);
                        t -= 1;
                    }
                    dirty = true;
                    break 'scan;
                }
            }
            if !dirty {
                return;
            }
        }
    }
}

/// A multiplication table over an explicit element list, for fast subgroup
/// manipulation inside a fixed ambient group.
///
/// Elements are referred to by their index in the canonical sorted element
/// order, so index sets are stable across runs.
pub struct CayleyTable {
    /// Elements in canonical sorted order.
    pub elems: Vec<Mat>,
    index: HashMap<Mat, u32>,
    mul: Vec<u32>,
    inv: Vec<u32>,
    /// Index of the identity.
    pub id: u32,
}

impl CayleyTable {
    /// Builds the table from a group's sorted element list.
    pub fn build(elems: Vec<Mat>) -> Result<CayleyTable> {
        let n = elems.len();
        if n > 5000 {
            return Err(Error::BudgetExceeded(format!(
                "multiplication table for {n} elements"
            )));
        }
        let index: HashMap<Mat, u32> = elems
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();
        let mut mul = vec![0u32; n * n];
        let mut inv = vec![0u32; n];
        let mut id = None;
        for (i, a) in elems.iter().enumerate() {
            if a.is_identity() {
                id = Some(i as u32);
            }
            for (j, b) in elems.iter().enumerate() {
                let prod = a.mul(b);
                let pk = *index
                    .get(&prod)
                    .ok_or_else(|| Error::InvalidParameter("element list not closed".into()))?;
                mul[i * n + j] = pk;
                if prod.is_identity() {
                    inv[i] = j as u32;
                }
            }
        }
        let id = id.ok_or_else(|| Error::InvalidParameter("identity missing".into()))?;
        Ok(CayleyTable { elems, index, mul, inv, id })
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    /// Whether the table is empty (never true for a valid group).
    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Product of two element indices.
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.elems.len() + b as usize]
    }

    /// Inverse of an element index.
    pub fn inv(&self, a: u32) -> u32 {
        self.inv[a as usize]
    }

    /// Conjugate g^-1 * a * g.
    pub fn conj(&self, a: u32, g: u32) -> u32 {
        self.mul(self.mul(self.inv(g), a), g)
    }

    /// Index of a matrix, if present.
    pub fn index_of(&self, m: &Mat) -> Option<u32> {
        self.index.get(m).copied()
    }

    /// Closure of a seed set as a sorted index list.
    pub fn closure(&self, seed: &[u32]) -> Vec<u32> {
        let mut in_set = vec![false; self.elems.len()];
        in_set[self.id as usize] = true;
        let mut members = vec![self.id];
        let mut frontier = vec![self.id];
        let seed: Vec<u32> = seed.iter().copied().filter(|&s| s != self.id).collect();
        for &s in &seed {
            if !in_set[s as usize] {
                in_set[s as usize] = true;
                members.push(s);
                frontier.push(s);
            }
        }
        while let Some(x) = frontier.pop() {
            for &s in &seed {
                let y = self.mul(x, s);
                if !in_set[y as usize] {
                    in_set[y as usize] = true;
                    members.push(y);
                    frontier.push(y);
                }
            }
        }
        members.sort_unstable();
        members
    }

    /// Order of the element at an index.
    pub fn elem_order(&self, a: u32) -> u64 {
        let mut x = a;
        let mut n = 1;
        while x != self.id {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }
}
