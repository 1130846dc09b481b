//! Dense complex kernels used by every layer computation.
//!
//! Matrices are stored row-major, and vectors are flattened row-major as
//! well: `vec(M)[i * n + j] = M[i, j]`. With that convention
//! `(A ⊗ B) vec(M) = vec(A M Bᵀ)`, so `(W ⊗ W*) vec(I) = vec(W W†)` holds
//! without any transposes.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A dense complex vector; layer outputs are of this type.
pub type ComplexVector = Vec<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative pivot threshold used by [`qr_thin`].
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row slices; handy in tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::new(r, c, data)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * alpha).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    ///
    /// Panics if `v.len() != self.cols()`.
    pub fn mul_vec(&self, v: &[C64]) -> ComplexVector {
        assert_eq!(v.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols.min(i)).all(|j| self[(i, j)].norm() <= tol))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product: `(A ⊗ B)[i p + r, j q + s] = A[i, j] B[r, s]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * p, a.cols * q, |row, col| {
        a[(row / p, col / q)] * b[(row % p, col % q)]
    })
}

/// Kronecker product of vectors: `(u ⊗ v)[i len(v) + j] = u_i v_j`.
pub fn kron_vec(u: &[C64], v: &[C64]) -> ComplexVector {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        out.extend(v.iter().map(|b| a * b));
    }
    out
}

/// `v ⊗ v*`, the flattening of the rank-one matrix `v v†`.
pub fn self_conjugate_kron(v: &[C64]) -> ComplexVector {
    let mut out = Vec::with_capacity(v.len() * v.len());
    for a in v {
        out.extend(v.iter().map(|b| a * b.conj()));
    }
    out
}

/// Row-wise Kronecker (face-splitting) product: row `i` of the result is
/// `A[i, :] ⊗ B[i, :]`.
pub fn face_split(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows != b.rows {
        return Err(Error::Shape(format!(
            "face-splitting product needs equal row counts, got {} and {}",
            a.rows, b.rows
        )));
    }
    let r = b.cols;
    Ok(ComplexMatrix::from_fn(a.rows, a.cols * r, |i, col| {
        a[(i, col / r)] * b[(i, col % r)]
    }))
}

/// Row-major flattening of the `k x k` identity.
pub fn vec_identity(k: usize) -> ComplexVector {
    let mut out = vec![ZERO; k * k];
    for i in 0..k {
        out[i * k + i] = ONE;
    }
    out
}

/// `(W ⊗ W*) x` without materializing the Kronecker product.
///
/// `x` is read as the flattening of a `cols x cols` matrix `M`; the result is
/// `vec(W M W†)`, computed with the same number of multiply-adds as the
/// materialized product would need.
pub fn apply_kron_conj(w: &ComplexMatrix, x: &[C64]) -> ComplexVector {
    let (k1, k2) = (w.rows, w.cols);
    assert_eq!(x.len(), k2 * k2, "squared input has the wrong length");
    let mut out = vec![ZERO; k1 * k1];
    for a in 0..k1 {
        let wa = w.row(a);
        for b in 0..k1 {
            let wb = w.row(b);
            let mut acc = ZERO;
            for (c, wac) in wa.iter().enumerate() {
                let xrow = &x[c * k2..(c + 1) * k2];
                for (d, wbd) in wb.iter().enumerate() {
                    acc += wac * wbd.conj() * xrow[d];
                }
            }
            out[a * k1 + b] = acc;
        }
    }
    out
}

/// A bijection on `[0, n)`; `image[i]` is the destination of source entry `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &i in &image {
            if i >= image.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Shape(format!("{image:?} is not a permutation")));
            }
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Moves `x[i]` to position `image[i]`.
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.image.len(), "permutation length mismatch");
        let mut out = vec![T::default(); x.len()];
        for (src, &dst) in self.image.iter().enumerate() {
            out[dst] = x[src];
        }
        out
    }

    /// The 0/1 matrix `P` with `P x = self.apply(x)`.
    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.image.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (src, &dst) in self.image.iter().enumerate() {
            m[(dst, src)] = ONE;
        }
        m
    }
}

/// Permutation taking `(a ⊗ a*) ⊗ (b ⊗ b*)` to `(a ⊗ b) ⊗ (a ⊗ b)*` for
/// `a ∈ C^k1`, `b ∈ C^k2`: it swaps the middle two factors of the index
/// tuple `(i, i', j, j') -> (i, j, i', j')`.
pub fn kron_square_perm(k1: usize, k2: usize) -> Permutation {
    let mut image = Vec::with_capacity(k1 * k1 * k2 * k2);
    for i in 0..k1 {
        for ip in 0..k1 {
            for j in 0..k2 {
                for jp in 0..k2 {
                    image.push(((i * k2 + j) * k1 + ip) * k2 + jp);
                }
            }
        }
    }
    Permutation { image }
}

/// True iff `‖W W† − I‖_max ≤ tol`. Wide or square matrices only.
pub fn is_semi_unitary(w: &ComplexMatrix, tol: f64) -> Result<bool> {
    if w.rows > w.cols {
        return Err(Error::Shape(format!(
            "a {}x{} matrix cannot have orthonormal rows",
            w.rows, w.cols
        )));
    }
    Ok(unitarity_defect(w) <= tol)
}

/// `‖W W† − I‖_max`.
pub fn unitarity_defect(w: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..w.rows {
        for b in 0..w.rows {
            let dot: C64 = w
                .row(a)
                .iter()
                .zip(w.row(b))
                .map(|(x, y)| x * y.conj())
                .sum();
            let target = if a == b { ONE } else { ZERO };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Thin QR factors of an `n x k` matrix.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    /// Complex multiply-adds spent in the factorization.
    pub ops: u64,
}

/// Thin Householder QR of a tall matrix, `A = Q R`.
///
/// `Q` is `n x k` with orthonormal columns and `R` is `k x k` upper
/// triangular with a real, non-negative diagonal. Fails with
/// [`Error::Singular`] when a pivot drops below `1e-12 · ‖A‖_F`.
pub fn qr_thin(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    qr_thin_counted(a).map(|f| (f.q, f.r))
}

pub fn qr_thin_counted(a: &ComplexMatrix) -> Result<QrFactors> {
    let (n, k) = (a.rows, a.cols);
    if n < k {
        return Err(Error::Shape(format!(
            "thin QR needs rows >= cols, got {n}x{k}"
        )));
    }
    let threshold = RANK_TOLERANCE * a.frobenius_norm();
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut diag = Vec::with_capacity(k);
    let mut ops = 0u64;

    for j in 0..k {
        let xnorm = (j..n).map(|i| r[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm <= threshold || xnorm == 0.0 {
            return Err(Error::Singular {
                column: j,
                pivot: xnorm,
                threshold,
            });
        }
        let x0 = r[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v: Vec<C64> = (j..n).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= vnorm;
        }
        for c in j..k {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * r[(j + t, c)])
                .sum();
            for (t, vi) in v.iter().enumerate() {
                r[(j + t, c)] -= 2.0 * vi * s;
            }
        }
        ops += 2 * ((n - j) * (k - j)) as u64;
        r[(j, j)] = alpha;
        for i in j + 1..n {
            r[(i, j)] = ZERO;
        }
        diag.push(alpha);
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{k-1} [I_k; 0]
    let mut q = ComplexMatrix::zeros(n, k);
    for i in 0..k {
        q[(i, i)] = ONE;
    }
    for j in (0..k).rev() {
        let v = &reflectors[j];
        for c in j..k {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * q[(j + t, c)])
                .sum();
            for (t, vi) in v.iter().enumerate() {
                q[(j + t, c)] -= 2.0 * vi * s;
            }
        }
        ops += 2 * ((n - j) * (k - j)) as u64;
    }

    // Move the diagonal phases from R into Q.
    let mut rr = ComplexMatrix::zeros(k, k);
    for (j, d) in diag.iter().enumerate() {
        let phase = d / d.norm();
        for c in j..k {
            rr[(j, c)] = phase.conj() * r[(j, c)];
        }
        rr[(j, j)] = C64::new(d.norm(), 0.0);
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ops += (k * (k + 1) / 2 + n * k) as u64;

    Ok(QrFactors { q, r: rr, ops })
}
