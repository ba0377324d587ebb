//! Dense linear algebra over GF(p^k).
//!
//! A [`Mat`] is a square matrix stored as a flat vector of prime-field
//! residues: entry `(r, c)` occupies the `k` residues starting at
//! `((r * n + c) * k)`, constant coefficient first.  Vectors over the field
//! use the same flat layout (coordinate-major, coefficient-minor), which
//! makes the integer encoding of points — coordinate `i`, coefficient `j`
//! contributing `digit * p^(i*k + j)` — agree between a matrix over GF(p^k)
//! and its restriction of scalars to GF(p).

use crate::gfarith::{make_field, Field};
use crate::{Error, Result};
use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// A square matrix over a finite field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    /// The coefficient field.
    pub field: Arc<Field>,
    /// Side length.
    pub n: usize,
    /// `n * n * k` residues, row-major, `k` residues per entry.
    pub entries: Vec<u64>,
}

impl Hash for Mat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.p.hash(state);
        self.field.k.hash(state);
        self.n.hash(state);
        self.entries.hash(state);
    }
}

impl PartialOrd for Mat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mat {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.field.p, self.field.k, self.n)
            .cmp(&(other.field.p, other.field.k, other.n))
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl Mat {
    /// The zero matrix.
    pub fn zero(field: Arc<Field>, n: usize) -> Mat {
        let entries = vec![0; n * n * field.k];
        Mat { field, n, entries }
    }

    /// The identity matrix.
    pub fn identity(field: Arc<Field>, n: usize) -> Mat {
        let mut m = Mat::zero(field, n);
        for i in 0..n {
            let k = m.field.k;
            m.entries[(i * n + i) * k] = 1;
        }
        m
    }

    /// A scalar matrix `e * I`.
    pub fn scalar_mat(field: Arc<Field>, n: usize, e: &[u64]) -> Mat {
        let mut m = Mat::zero(field, n);
        for i in 0..n {
            m.set_entry(i, i, e);
        }
        m
    }

    /// A diagonal matrix from the given diagonal entries.
    pub fn diag(field: Arc<Field>, entries: &[Vec<u64>]) -> Mat {
        let n = entries.len();
        let mut m = Mat::zero(field, n);
        for (i, e) in entries.iter().enumerate() {
            m.set_entry(i, i, e);
        }
        m
    }

    /// The permutation matrix sending basis vector `j` to basis vector
    /// `perm[j]`.
    pub fn perm_mat(field: Arc<Field>, perm: &[usize]) -> Mat {
        let n = perm.len();
        let mut m = Mat::zero(field, n);
        let one = m.field.one();
        for (j, &i) in perm.iter().enumerate() {
            m.set_entry(i, j, &one);
        }
        m
    }

    /// Builds a matrix from `n * n` field elements in row-major order.
    pub fn from_entries(field: Arc<Field>, n: usize, elems: &[Vec<u64>]) -> Result<Mat> {
        if elems.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries, got {}",
                n * n,
                elems.len()
            )));
        }
        let mut m = Mat::zero(field, n);
        for (i, e) in elems.iter().enumerate() {
            if e.len() != m.field.k {
                return Err(Error::InvalidParameter(
                    "entry coefficient count does not match the field".into(),
                ));
            }
            let k = m.field.k;
            m.entries[i * k..(i + 1) * k].copy_from_slice(e);
        }
        Ok(m)
    }

    /// Convenience constructor for prime-field matrices from bare residues.
    pub fn from_residues(field: Arc<Field>, n: usize, vals: &[u64]) -> Result<Mat> {
        if field.k != 1 {
            return Err(Error::InvalidParameter(
                "from_residues needs a prime field".into(),
            ));
        }
        let elems: Vec<Vec<u64>> = vals.iter().map(|&v| vec![v % field.p]).collect();
        Mat::from_entries(field, n, &elems)
    }

    /// Entry `(r, c)` as a field-element slice.
    pub fn entry(&self, r: usize, c: usize) -> &[u64] {
        let k = self.field.k;
        &self.entries[(r * self.n + c) * k..(r * self.n + c + 1) * k]
    }

    /// Overwrites entry `(r, c)`.
    pub fn set_entry(&mut self, r: usize, c: usize, e: &[u64]) {
        let k = self.field.k;
        self.entries[(r * self.n + c) * k..(r * self.n + c + 1) * k].copy_from_slice(e);
    }

    fn check_compatible(&self, other: &Mat, what: &str) {
        assert!(
            self.field == other.field && self.n == other.n,
            "{what}: incompatible operands ({}^{} dim {} vs {}^{} dim {})",
            self.field.p,
            self.field.k,
            self.n,
            other.field.p,
            other.field.k,
            other.n
        );
    }

    /// Matrix sum.
    pub fn add(&self, other: &Mat) -> Mat {
        self.check_compatible(other, "add");
        let p = self.field.p;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        Mat { field: self.field.clone(), n: self.n, entries }
    }

    /// Matrix difference.
    pub fn sub(&self, other: &Mat) -> Mat {
        self.check_compatible(other, "sub");
        let p = self.field.p;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a + p - b) % p)
            .collect();
        Mat { field: self.field.clone(), n: self.n, entries }
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Mat) -> Mat {
        self.check_compatible(other, "mul");
        let n = self.n;
        let k = self.field.k;
        let p = self.field.p;
        let mut out = Mat::zero(self.field.clone(), n);
        if k == 1 {
            // Delayed reduction: products stay below p^2 < 2^40 and row sums
            // below n * p^2, well inside u64.
            for r in 0..n {
                let arow = &self.entries[r * n..(r + 1) * n];
                let orow = &mut out.entries[r * n..(r + 1) * n];
                for (l, &a) in arow.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    let brow = &other.entries[l * n..(l + 1) * n];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
                for o in orow {
                    *o %= p;
                }
            }
            return out;
        }
        let f = &self.field;
        let mut acc = vec![0u64; 2 * k];
        for r in 0..n {
            for c in 0..n {
                acc.iter_mut().for_each(|x| *x = 0);
                for l in 0..n {
                    let a = self.entry(r, l);
                    if f.is_zero(a) {
                        continue;
                    }
                    let b = other.entry(l, c);
                    for (i, &ai) in a.iter().enumerate() {
                        if ai == 0 {
                            continue;
                        }
                        for (j, &bj) in b.iter().enumerate() {
                            acc[i + j] = (acc[i + j] + ai * bj) % p;
                        }
                    }
                }
                // Reduce the degree-(2k-2) accumulator once per output entry.
                field_reduce(f, &mut acc);
                out.set_entry(r, c, &acc[..k]);
            }
        }
        out
    }

    /// Matrix-vector product; `v` is `n * k` residues in the flat layout.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        let n = self.n;
        let k = self.field.k;
        let p = self.field.p;
        let mut out = vec![0u64; n * k];
        if k == 1 {
            for r in 0..n {
                let mut s = 0u64;
                for c in 0..n {
                    s += self.entries[r * n + c] * v[c];
                }
                out[r] = s % p;
            }
            return out;
        }
        let f = &self.field;
        let mut acc = vec![0u64; 2 * k];
        for r in 0..n {
            acc.iter_mut().for_each(|x| *x = 0);
            for c in 0..n {
                let a = self.entry(r, c);
                let b = &v[c * k..(c + 1) * k];
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0 {
                        continue;
                    }
                    for (j, &bj) in b.iter().enumerate() {
                        acc[i + j] = (acc[i + j] + ai * bj) % p;
                    }
                }
            }
            field_reduce(f, &mut acc);
            out[r * k..(r + 1) * k].copy_from_slice(&acc[..k]);
        }
        out
    }

    /// Matrix power by square-and-multiply.
    pub fn pow(&self, mut e: u64) -> Mat {
        let mut result = Mat::identity(self.field.clone(), self.n);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Transpose.
    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zero(self.field.clone(), self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                out.set_entry(c, r, self.entry(r, c));
            }
        }
        out
    }

    /// Multiplies every entry by the field element `e`.
    pub fn scale(&self, e: &[u64]) -> Mat {
        let f = &self.field;
        let mut out = Mat::zero(self.field.clone(), self.n);
        let mut tmp = f.zero();
        for r in 0..self.n {
            for c in 0..self.n {
                f.mul(self.entry(r, c), e, &mut tmp);
                out.set_entry(r, c, &tmp);
            }
        }
        out
    }

    /// Whether this is the identity matrix.
    pub fn is_identity(&self) -> bool {
        let f = &self.field;
        for r in 0..self.n {
            for c in 0..self.n {
                let e = self.entry(r, c);
                if r == c {
                    if !f.is_one(e) {
                        return false;
                    }
                } else if !f.is_zero(e) {
                    return false;
                }
            }
        }
        true
    }

    /// If this is `e * I`, returns `e`.
    pub fn as_scalar(&self) -> Option<Vec<u64>> {
        let f = &self.field;
        let d = self.entry(0, 0).to_vec();
        for r in 0..self.n {
            for c in 0..self.n {
                let e = self.entry(r, c);
                if r == c {
                    if e != &d[..] {
                        return None;
                    }
                } else if !f.is_zero(e) {
                    return None;
                }
            }
        }
        Some(d)
    }

    /// Multiplicative order, or `None` if it exceeds `cap` (or the matrix is
    /// singular).
    pub fn multiplicative_order(&self, cap: u64) -> Option<u64> {
        let mut acc = self.clone();
        for ord in 1..=cap {
            if acc.is_identity() {
                return Some(ord);
            }
            acc = acc.mul(self);
        }
        None
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n;
        let k = self.field.k;
        let f = self.field.clone();
        // Augmented system [self | I], row-reduced in place.
        let mut a = self.entries.clone();
        let mut b = Mat::identity(f.clone(), n).entries;
        let row = |data: &[u64], r: usize| -> Vec<u64> { data[r * n * k..(r + 1) * n * k].to_vec() };
        for col in 0..n {
            // Find a pivot row at or below `col`.
            let mut piv = None;
            for r in col..n {
                if !f.is_zero(&a[(r * n + col) * k..(r * n + col + 1) * k]) {
                    piv = Some(r);
                    break;
                }
            }
            let piv = piv.ok_or_else(|| Error::Singular(format!("inverse of {n}x{n} matrix")))?;
            if piv != col {
                for j in 0..n * k {
                    a.swap(col * n * k + j, piv * n * k + j);
                    b.swap(col * n * k + j, piv * n * k + j);
                }
            }
            let pinv = f.inv(&a[(col * n + col) * k..(col * n + col + 1) * k])?;
            scale_row(&f, &mut a[col * n * k..(col + 1) * n * k], &pinv);
            scale_row(&f, &mut b[col * n * k..(col + 1) * n * k], &pinv);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let c = a[(r * n + col) * k..(r * n + col + 1) * k].to_vec();
                if f.is_zero(&c) {
                    continue;
                }
                let arow = row(&a, col);
                let brow = row(&b, col);
                axpy_row(&f, &mut a[r * n * k..(r + 1) * n * k], &arow, &c);
                axpy_row(&f, &mut b[r * n * k..(r + 1) * n * k], &brow, &c);
            }
        }
        Ok(Mat { field: f, n, entries: b })
    }

    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> Vec<u64> {
        let n = self.n;
        let k = self.field.k;
        let f = &self.field;
        let mut a = self.entries.clone();
        let mut det = f.one();
        let mut tmp = f.zero();
        for col in 0..n {
            let mut piv = None;
            for r in col..n {
                if !f.is_zero(&a[(r * n + col) * k..(r * n + col + 1) * k]) {
                    piv = Some(r);
                    break;
                }
            }
            let piv = match piv {
                Some(r) => r,
                None => return f.zero(),
            };
            if piv != col {
                for j in 0..n * k {
                    a.swap(col * n * k + j, piv * n * k + j);
                }
                // A row swap negates the determinant.
                let d = det.clone();
                f.neg(&d, &mut det);
            }
            let pval = a[(col * n + col) * k..(col * n + col + 1) * k].to_vec();
            f.mul(&det.clone(), &pval, &mut tmp);
            det.copy_from_slice(&tmp);
            let pinv = f.inv(&pval).expect("pivot is nonzero");
            scale_row(f, &mut a[col * n * k..(col + 1) * n * k], &pinv);
            for r in col + 1..n {
                let c = a[(r * n + col) * k..(r * n + col + 1) * k].to_vec();
                if f.is_zero(&c) {
                    continue;
                }
                let prow = a[col * n * k..(col + 1) * n * k].to_vec();
                axpy_row(f, &mut a[r * n * k..(r + 1) * n * k], &prow, &c);
            }
        }
        det
    }

    /// Rank over the field.
    pub fn rank(&self) -> usize {
        let mut space = RowSpace::new(self.field.clone(), self.n);
        for r in 0..self.n {
            let k = self.field.k;
            space.insert(&self.entries[r * self.n * k..(r + 1) * self.n * k]);
        }
        space.dim()
    }

    /// Basis of the right kernel `{v : self * v = 0}`, each vector in the
    /// flat layout.
    pub fn nullspace(&self) -> Vec<Vec<u64>> {
        kernel_basis(&self.field, self.n, self.n, &self.entries)
    }

    /// Kronecker product; the right factor acts on the low-significance
    /// block of the composite coordinate index.
    pub fn kron(&self, other: &Mat) -> Mat {
        assert!(
            self.field == other.field,
            "kron: operands over different fields"
        );
        let f = &self.field;
        let n = self.n * other.n;
        let mut out = Mat::zero(self.field.clone(), n);
        let mut tmp = f.zero();
        for ra in 0..self.n {
            for ca in 0..self.n {
                let a = self.entry(ra, ca);
                if f.is_zero(a) {
                    continue;
                }
                for rb in 0..other.n {
                    for cb in 0..other.n {
                        let b = other.entry(rb, cb);
                        if f.is_zero(b) {
                            continue;
                        }
                        f.mul(a, b, &mut tmp);
                        out.set_entry(ra * other.n + rb, ca * other.n + cb, &tmp);
                    }
                }
            }
        }
        out
    }

    /// Restriction of scalars: rewrites a matrix over GF(p^k) as an
    /// `n*k` by `n*k` matrix over GF(p), using the polynomial basis.  The
    /// flat point encoding is preserved: both matrices move the same integer
    /// points the same way.
    pub fn blowup(&self) -> Mat {
        let k = self.field.k;
        let f = &self.field;
        let prime = make_field(f.p, 1).expect("p is already validated");
        let n = self.n;
        let mut out = Mat::zero(prime, n * k);
        let mut img = f.zero();
        for r in 0..n {
            for c in 0..n {
                let a = self.entry(r, c);
                if f.is_zero(a) {
                    continue;
                }
                // Column t of the block is a * x^t in coefficient form.
                let mut xt = f.one();
                for t in 0..k {
                    f.mul(a, &xt, &mut img);
                    for s in 0..k {
                        out.set_entry(r * k + s, c * k + t, &[img[s]]);
                    }
                    if t + 1 < k {
                        // Multiply by x: shift coefficients up and reduce.
                        let mut buf = vec![0u64; k + 1];
                        buf[1..=k].copy_from_slice(&xt);
                        field_reduce(f, &mut buf);
                        xt.copy_from_slice(&buf[..k]);
                    }
                }
            }
        }
        out
    }

    /// The size of the point domain this matrix acts on, `p^(k*n)`.
    pub fn domain_size(&self) -> u64 {
        let f = &self.field;
        (0..self.n * f.k).fold(1u64, |acc, _| acc * f.p)
    }

    /// Applies the matrix to an integer-encoded point.
    pub fn apply_to_point(&self, idx: u64) -> u64 {
        let v = point_to_coords(&self.field, self.n, idx);
        let w = self.mul_vec(&v);
        coords_to_point(&self.field, self.n, &w)
    }

    /// Renders the matrix as `n` lines of `n` whitespace-separated entries.
    pub fn render_plain(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n {
            let cells: Vec<String> = (0..self.n)
                .map(|c| self.field.format_elem(self.entry(r, c)))
                .collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`Mat::render_plain`].
    pub fn parse_plain(field: Arc<Field>, n: usize, lines: &[&str]) -> Result<Mat> {
        if lines.len() != n {
            return Err(Error::Parse(format!(
                "expected {n} matrix rows, got {}",
                lines.len()
            )));
        }
        let mut elems = Vec::with_capacity(n * n);
        for line in lines {
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != n {
                return Err(Error::Parse(format!(
                    "expected {n} entries per row, got {} in '{line}'",
                    cells.len()
                )));
            }
            for cell in cells {
                elems.push(field.parse_elem(cell)?);
            }
        }
        Mat::from_entries(field, n, &elems)
    }
}

/// Reduces a degree-(len-1) coefficient buffer modulo the field modulus in
/// place; afterwards only the first `k` coefficients are meaningful.
fn field_reduce(f: &Field, buf: &mut [u64]) {
    let k = f.k;
    for i in (k..buf.len()).rev() {
        let c = buf[i];
        if c == 0 {
            continue;
        }
        for j in 0..k {
            let m = f.modulus[j];
            if m != 0 {
                buf[i - k + j] = (buf[i - k + j] + (f.p - m) * c) % f.p;
            }
        }
        buf[i] = 0;
    }
}

/// row *= e (entry-wise field multiplication).
fn scale_row(f: &Field, row: &mut [u64], e: &[u64]) {
    let k = f.k;
    let mut tmp = f.zero();
    for chunk in row.chunks_mut(k) {
        f.mul(chunk, e, &mut tmp);
        chunk.copy_from_slice(&tmp);
    }
}

/// row -= c * src (entry-wise).
fn axpy_row(f: &Field, row: &mut [u64], src: &[u64], c: &[u64]) {
    let k = f.k;
    let mut tmp = f.zero();
    let mut diff = f.zero();
    for (chunk, s) in row.chunks_mut(k).zip(src.chunks(k)) {
        f.mul(s, c, &mut tmp);
        f.sub(chunk, &tmp, &mut diff);
        chunk.copy_from_slice(&diff);
    }
}

/// The k-by-k matrix of the Frobenius map x -> x^p of GF(p^k) over GF(p),
/// with respect to the polynomial basis `1, x, ..., x^(k-1)`.
pub fn frobenius_matrix(field: &Arc<Field>) -> Mat {
    let k = field.k;
    let prime = make_field(field.p, 1).expect("p is already validated");
    let mut out = Mat::zero(prime, k);
    for t in 0..k {
        // Column t is (x^t)^p in coefficient form.
        let mut xt = field.zero();
        xt[t] = 1;
        let img = field.frobenius_elem(&xt);
        for s in 0..k {
            out.set_entry(s, t, &[img[s]]);
        }
    }
    out
}

/// The block-diagonal matrix applying the Frobenius of GF(p^k) to each of
/// `d` coordinate blocks of a blown-up vector: conjugation by it maps
/// `blowup(A)` to `blowup(A^phi)` with `phi` applied entry-wise.
pub fn frobenius_perm(field: &Arc<Field>, d: usize) -> Mat {
    let f = frobenius_matrix(field);
    let prime = f.field.clone();
    Mat::identity(prime, d).kron(&f)
}

/// Decodes an integer point into the flat coordinate layout (`n * k`
/// residues, coordinate-major).
pub fn point_to_coords(field: &Field, n: usize, mut idx: u64) -> Vec<u64> {
    let mut v = vec![0u64; n * field.k];
    for digit in v.iter_mut() {
        *digit = idx % field.p;
        idx /= field.p;
    }
    v
}

/// Inverse of [`point_to_coords`].
pub fn coords_to_point(field: &Field, n: usize, v: &[u64]) -> u64 {
    let mut idx = 0u64;
    for &digit in v[..n * field.k].iter().rev() {
        idx = idx * field.p + digit;
    }
    idx
}

/// Basis of the right kernel of a rectangular matrix given as
/// `rows * cols * k` flat residues.
pub fn kernel_basis(field: &Arc<Field>, rows: usize, cols: usize, data: &[u64]) -> Vec<Vec<u64>> {
    let k = field.k;
    let mut space = RowSpace::new(field.clone(), cols);
    for r in 0..rows {
        space.insert(&data[r * cols * k..(r + 1) * cols * k]);
    }
    // Read the kernel off the reduced row echelon form: one basis vector per
    // free column.
    let f = field;
    let pivots = &space.pivots;
    let is_pivot = |c: usize| pivots.contains(&c);
    let mut basis = Vec::new();
    for free in 0..cols {
        if is_pivot(free) {
            continue;
        }
        let mut v = vec![0u64; cols * k];
        v[free * k] = 1;
        for (ri, &pc) in pivots.iter().enumerate() {
            // Pivot coordinate = -(row entry at the free column).
            let e = &space.rows[ri][free * k..(free + 1) * k];
            let mut ne = f.zero();
            f.neg(e, &mut ne);
            v[pc * k..(pc + 1) * k].copy_from_slice(&ne);
        }
        basis.push(v);
    }
    basis
}

/// An incrementally maintained row space in reduced row echelon form.
///
/// Rows are vectors of `cols` field elements in the flat layout.  The basis
/// kept here is canonical for the subspace: it does not depend on the order
/// in which spanning vectors were inserted.
#[derive(Debug, Clone)]
pub struct RowSpace {
    field: Arc<Field>,
    cols: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl RowSpace {
    /// An empty space of vectors with `cols` coordinates.
    pub fn new(field: Arc<Field>, cols: usize) -> RowSpace {
        RowSpace { field, cols, rows: Vec::new(), pivots: Vec::new() }
    }

    /// Current dimension.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// The coefficient field.
    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    /// The ambient coordinate count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The vector with the given coordinates (`dim()` field elements flat)
    /// with respect to the canonical basis.
    pub fn vec_from_coords(&self, coords: &[u64]) -> Vec<u64> {
        let f = &self.field;
        let k = f.k;
        let mut v = vec![0u64; self.cols * k];
        let mut tmp = f.zero();
        let mut sum = f.zero();
        for (j, row) in self.rows.iter().enumerate() {
            let c = &coords[j * k..(j + 1) * k];
            if f.is_zero(c) {
                continue;
            }
            for (vc, rc) in v.chunks_mut(k).zip(row.chunks(k)) {
                f.mul(rc, c, &mut tmp);
                f.add(vc, &tmp, &mut sum);
                vc.copy_from_slice(&sum);
            }
        }
        v
    }

    /// The canonical (RREF) basis.
    pub fn basis(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// A stable fingerprint of the subspace, usable as a dedupe key.
    pub fn key(&self) -> Vec<u64> {
        let mut key = Vec::with_capacity(self.rows.len() * self.cols * self.field.k);
        for r in &self.rows {
            key.extend_from_slice(r);
        }
        key
    }

    /// Reduces `v` against the current basis, returning the residue.
    fn residue(&self, v: &[u64]) -> Vec<u64> {
        let f = &self.field;
        let k = f.k;
        let mut w = v.to_vec();
        for (ri, &pc) in self.pivots.iter().enumerate() {
            let c = w[pc * k..(pc + 1) * k].to_vec();
            if !f.is_zero(&c) {
                axpy_row(f, &mut w, &self.rows[ri], &c);
            }
        }
        w
    }

    /// Whether `v` already lies in the space.
    pub fn contains(&self, v: &[u64]) -> bool {
        self.field.is_zero_vec(&self.residue(v))
    }

    /// Coordinates of `v` with respect to the canonical basis, or `None` if
    /// `v` is outside the space.  Returns `dim()` field elements flat.
    pub fn coords_of(&self, v: &[u64]) -> Option<Vec<u64>> {
        let f = &self.field;
        let k = f.k;
        let mut w = v.to_vec();
        let mut coords = vec![0u64; self.rows.len() * k];
        for (ri, &pc) in self.pivots.iter().enumerate() {
            let c = w[pc * k..(pc + 1) * k].to_vec();
            if !f.is_zero(&c) {
                coords[ri * k..(ri + 1) * k].copy_from_slice(&c);
                axpy_row(f, &mut w, &self.rows[ri], &c);
            }
        }
        if f.is_zero_vec(&w) {
            Some(coords)
        } else {
            None
        }
    }

    /// Inserts a vector; returns true if it enlarged the space.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        debug_assert_eq!(v.len(), self.cols * self.field.k);
        let f = self.field.clone();
        let k = f.k;
        let mut w = self.residue(v);
        // Find the leading coordinate.
        let lead = (0..self.cols).find(|&c| !f.is_zero(&w[c * k..(c + 1) * k]));
        let lead = match lead {
            Some(c) => c,
            None => return false,
        };
        let linv = f.inv(&w[lead * k..(lead + 1) * k]).expect("leading entry nonzero");
        scale_row(&f, &mut w, &linv);
        // Eliminate the new pivot from existing rows to restore RREF.
        for row in self.rows.iter_mut() {
            let c = row[lead * k..(lead + 1) * k].to_vec();
            if !f.is_zero(&c) {
                axpy_row(&f, row, &w, &c);
            }
        }
        // Keep rows sorted by pivot column.
        let pos = self.pivots.partition_point(|&pc| pc < lead);
        self.pivots.insert(pos, lead);
        self.rows.insert(pos, w);
        true
    }
}

impl Field {
    /// Whether a flat vector is entirely zero.
    pub fn is_zero_vec(&self, v: &[u64]) -> bool {
        v.iter().all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfarith::make_field;
    use crate::testrng::SplitMix64;

    fn rand_mat(field: &Arc<Field>, n: usize, rng: &mut SplitMix64) -> Mat {
        let k = field.k;
        let mut m = Mat::zero(field.clone(), n);
        for e in m.entries.iter_mut() {
            *e = rng.next() % field.p;
        }
        let _ = k;
        m
    }

    fn rand_invertible(field: &Arc<Field>, n: usize, rng: &mut SplitMix64) -> Mat {
        loop {
            let m = rand_mat(field, n, rng);
            if !field.is_zero_vec(&m.det()) {
                return m;
            }
        }
    }

    #[test]
    fn mul_assoc_and_identity() {
        let mut rng = SplitMix64::new(0x11);
        for &(p, k, n) in &[(7u64, 1usize, 3usize), (3, 2, 2), (2, 2, 3)] {
            let f = make_field(p, k).unwrap();
            let id = Mat::identity(f.clone(), n);
            for _ in 0..25 {
                let a = rand_mat(&f, n, &mut rng);
                let b = rand_mat(&f, n, &mut rng);
                let c = rand_mat(&f, n, &mut rng);
                assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                assert_eq!(a.mul(&id), a);
                assert_eq!(id.mul(&a), a);
                assert_eq!(a.mul(&b).transpose(), b.transpose().mul(&a.transpose()));
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = SplitMix64::new(0x22);
        for &(p, k, n) in &[(7u64, 1usize, 3usize), (3, 2, 2), (5, 1, 4), (2, 2, 3)] {
            let f = make_field(p, k).unwrap();
            let id = Mat::identity(f.clone(), n);
            for _ in 0..20 {
                let a = rand_invertible(&f, n, &mut rng);
                let ai = a.inverse().unwrap();
                assert_eq!(a.mul(&ai), id);
                assert_eq!(ai.mul(&a), id);
            }
        }
        // Singular matrices are rejected.
        let f = make_field(3, 1).unwrap();
        let z = Mat::zero(f, 2);
        assert!(z.inverse().is_err());
    }

    #[test]
    fn determinant_properties() {
        let f7 = make_field(7, 1).unwrap();
        let m = Mat::from_residues(f7.clone(), 2, &[1, 2, 3, 4]).unwrap();
        // 1*4 - 2*3 = -2 = 5 mod 7.
        assert_eq!(m.det(), vec![5]);
        let mut rng = SplitMix64::new(0x33);
        for &(p, k, n) in &[(5u64, 1usize, 3usize), (3, 2, 2)] {
            let f = make_field(p, k).unwrap();
            for _ in 0..20 {
                let a = rand_mat(&f, n, &mut rng);
                let b = rand_mat(&f, n, &mut rng);
                let mut ab = f.zero();
                f.mul(&a.det(), &b.det(), &mut ab);
                assert_eq!(a.mul(&b).det(), ab);
            }
        }
        // Rank-deficient matrix has zero determinant.
        let m = Mat::from_residues(f7, 2, &[1, 2, 2, 4]).unwrap();
        assert_eq!(m.det(), vec![0]);
        assert_eq!(m.rank(), 1);
        assert_eq!(m.nullspace().len(), 1);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = SplitMix64::new(0x44);
        let f = make_field(3, 1).unwrap();
        for _ in 0..10 {
            let a = rand_mat(&f, 2, &mut rng);
            let b = rand_mat(&f, 3, &mut rng);
            let c = rand_mat(&f, 2, &mut rng);
            let d = rand_mat(&f, 3, &mut rng);
            assert_eq!(a.kron(&b).mul(&c.kron(&d)), a.mul(&c).kron(&b.mul(&d)));
        }
        let id2 = Mat::identity(f.clone(), 2);
        let id3 = Mat::identity(f.clone(), 3);
        assert_eq!(id2.kron(&id3), Mat::identity(f, 6));
    }

    #[test]
    fn blowup_is_multiplicative_and_matches_mult_by_x() {
        // Multiplication by x on GF(4) in the polynomial basis.
        let f4 = make_field(2, 2).unwrap();
        let x = Mat::from_entries(f4.clone(), 1, &[vec![0, 1]]).unwrap();
        let bx = x.blowup();
        assert_eq!(bx.entries, vec![0, 1, 1, 1], "rows (0,1),(1,1)");
        let mut rng = SplitMix64::new(0x55);
        for &(p, k, n) in &[(2u64, 2usize, 2usize), (3, 2, 2), (3, 3, 2)] {
            let f = make_field(p, k).unwrap();
            for _ in 0..10 {
                let a = rand_mat(&f, n, &mut rng);
                let b = rand_mat(&f, n, &mut rng);
                assert_eq!(a.blowup().mul(&b.blowup()), a.mul(&b).blowup());
            }
            assert!(Mat::identity(f, n).blowup().is_identity());
        }
    }

    #[test]
    fn frobenius_matrices_match_frozen() {
        let cases: &[(u64, usize, &[u64])] = &[
            (2, 2, &[1, 1, 0, 1]),
            (3, 2, &[1, 0, 0, 2]),
            (5, 2, &[1, 4, 0, 4]),
            (3, 3, &[1, 2, 0, 0, 0, 2, 0, 1, 2]),
            (
                3,
                5,
                &[
                    1, 0, 2, 2, 2, //
                    0, 0, 2, 2, 1, //
                    0, 0, 0, 2, 0, //
                    0, 1, 0, 2, 2, //
                    0, 0, 1, 0, 0,
                ],
            ),
        ];
        for &(p, k, want) in cases {
            let f = make_field(p, k).unwrap();
            let fr = frobenius_matrix(&f);
            assert_eq!(fr.entries, want, "frobenius matrix for ({p},{k})");
            // The Frobenius generates the full Galois group, so its matrix
            // has order exactly k.
            assert_eq!(fr.multiplicative_order(100), Some(k as u64));
        }
    }

    #[test]
    fn semilinear_conjugation_identity() {
        // Conjugating a blown-up matrix by the coordinate-wise Frobenius
        // yields the blowup of the entry-wise Frobenius image.
        let mut rng = SplitMix64::new(0x66);
        for &(p, k, n) in &[(2u64, 2usize, 2usize), (3, 2, 2), (3, 2, 3), (3, 3, 2)] {
            let f = make_field(p, k).unwrap();
            let phi = frobenius_perm(&f, n);
            let phi_inv = phi.inverse().unwrap();
            for _ in 0..10 {
                let a = rand_mat(&f, n, &mut rng);
                let mut a_frob = Mat::zero(f.clone(), n);
                for r in 0..n {
                    for c in 0..n {
                        a_frob.set_entry(r, c, &f.frobenius_elem(a.entry(r, c)));
                    }
                }
                assert_eq!(phi.mul(&a.blowup()).mul(&phi_inv), a_frob.blowup());
            }
            // The coordinate-wise Frobenius has order k.
            assert_eq!(phi.multiplicative_order(100), Some(k as u64));
        }
    }

    #[test]
    fn point_encoding_consistency() {
        let mut rng = SplitMix64::new(0x77);
        for &(p, k, n) in &[(3u64, 1usize, 3usize), (3, 2, 2), (2, 2, 3)] {
            let f = make_field(p, k).unwrap();
            let dom = (0..n * k).fold(1u64, |a, _| a * p);
            for _ in 0..20 {
                let m = rand_mat(&f, n, &mut rng);
                let idx = rng.next() % dom;
                // Matrix-vector agreement.
                let v = point_to_coords(&f, n, idx);
                assert_eq!(coords_to_point(&f, n, &v), idx);
                assert_eq!(
                    m.apply_to_point(idx),
                    coords_to_point(&f, n, &m.mul_vec(&v))
                );
                // A matrix and its blowup move the same integer points the
                // same way.
                if k > 1 {
                    assert_eq!(m.apply_to_point(idx), m.blowup().apply_to_point(idx));
                }
            }
        }
    }

    #[test]
    fn perm_mat_composition() {
        let f = make_field(3, 1).unwrap();
        // Cyclic shift e0 -> e1 -> e2 -> e0.
        let c = Mat::perm_mat(f.clone(), &[1, 2, 0]);
        assert_eq!(c.multiplicative_order(10), Some(3));
        assert!(c.pow(3).is_identity());
        // It moves the encoded basis points accordingly: e0 = 1 -> e1 = 3.
        assert_eq!(c.apply_to_point(1), 3);
        assert_eq!(c.apply_to_point(3), 9);
        assert_eq!(c.apply_to_point(9), 1);
    }

    #[test]
    fn row_space_canonical() {
        let f = make_field(5, 1).unwrap();
        let mut a = RowSpace::new(f.clone(), 3);
        let mut b = RowSpace::new(f.clone(), 3);
        // Same plane, two insertion orders.
        let v1 = [1u64, 2, 3];
        let v2 = [0u64, 1, 4];
        let v3 = [1u64, 3, 2]; // v1 + v2
        a.insert(&v1);
        a.insert(&v2);
        a.insert(&v3);
        b.insert(&v3);
        b.insert(&v1);
        assert_eq!(a.dim(), 2);
        assert_eq!(b.dim(), 2);
        assert_eq!(a.key(), b.key());
        assert!(a.contains(&v3));
        // The span is the plane x1 + x2 = 0 (cross product of v1, v2 is
        // (0,1,1)), so e2 lies outside it.
        assert!(!a.contains(&[0, 0, 1]));
    }

    #[test]
    fn kernel_matches_rank() {
        let mut rng = SplitMix64::new(0x88);
        for &(p, k, n) in &[(5u64, 1usize, 4usize), (3, 2, 3)] {
            let f = make_field(p, k).unwrap();
            for _ in 0..20 {
                let m = rand_mat(&f, n, &mut rng);
                let ns = m.nullspace();
                assert_eq!(ns.len(), n - m.rank());
                for v in &ns {
                    assert!(f.is_zero_vec(&m.mul_vec(v)), "kernel vector maps to zero");
                }
            }
        }
    }

    #[test]
    fn render_parse_round_trip() {
        let f9 = make_field(3, 2).unwrap();
        let mut rng = SplitMix64::new(0x99);
        let m = rand_mat(&f9, 3, &mut rng);
        let text = m.render_plain();
        let lines: Vec<&str> = text.lines().collect();
        let back = Mat::parse_plain(f9, 3, &lines).unwrap();
        assert_eq!(m, back);

        let f7 = make_field(7, 1).unwrap();
        let m = Mat::from_residues(f7.clone(), 2, &[1, 2, 3, 4]).unwrap();
        assert_eq!(m.render_plain(), "1 2\n3 4\n");
        assert!(Mat::parse_plain(f7.clone(), 2, &["1 2", "3"]).is_err());
        assert!(Mat::parse_plain(f7, 2, &["1 2", "3 9"]).is_err());
    }

    #[test]
    fn scalar_and_identity_predicates() {
        let f = make_field(3, 2).unwrap();
        let id = Mat::identity(f.clone(), 3);
        assert!(id.is_identity());
        assert_eq!(id.as_scalar(), Some(f.one()));
        let s = Mat::scalar_mat(f.clone(), 3, &[2, 1]);
        assert!(!s.is_identity());
        assert_eq!(s.as_scalar(), Some(vec![2, 1]));
        let mut m = id.clone();
        m.set_entry(0, 1, &f.one());
        assert_eq!(m.as_scalar(), None);
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let mut rng = SplitMix64::new(0xaa);
        let f = make_field(5, 1).unwrap();
        let m = rand_mat(&f, 3, &mut rng);
        let mut acc = Mat::identity(f, 3);
        for e in 0..8 {
            assert_eq!(m.pow(e), acc);
            acc = acc.mul(&m);
        }
    }
}
