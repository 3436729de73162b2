//! Exact constant matrices over the Gaussian rationals, flags of subspaces,
//! and the small factorization routines the bundle layers need: Bruhat cells
//! through the standard Borel, transvection factorizations, and Sylvester
//! solves.

use crate::error::{Error, Result};
use crate::scalar::GaussianRational;

/// Dense matrix over `Q(i)`, row major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<GaussianRational>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{}  ", self.at(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![GaussianRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = GaussianRational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> GaussianRational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols));
        let data = rows.into_iter().flatten().collect();
        Mat { rows: 0, cols, data }.with_rows_fixed(cols)
    }

    fn with_rows_fixed(mut self, cols: usize) -> Self {
        self.rows = self.data.len() / cols.max(1);
        self
    }

    /// Convenience: integer entries, row major.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Mat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&n| GaussianRational::from_int(n)).collect())
                .collect(),
        )
    }

    pub fn diag(entries: Vec<GaussianRational>) -> Self {
        let n = entries.len();
        let mut m = Mat::zero(n, n);
        for (i, e) in entries.into_iter().enumerate() {
            *m.at_mut(i, i) = e;
        }
        m
    }

    pub fn from_cols(cols: Vec<Mat>) -> Self {
        assert!(!cols.is_empty());
        let rows = cols[0].rows;
        let mut m = Mat::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.rows, rows);
            assert_eq!(c.cols, 1);
            for i in 0..rows {
                *m.at_mut(i, j) = c.at(i, 0).clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &GaussianRational {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut GaussianRational {
        &mut self.data[i * self.cols + j]
    }

    pub fn col(&self, j: usize) -> Mat {
        Mat::from_fn(self.rows, 1, |i, _| self.at(i, j).clone())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j).clone()
            } else {
                other.at(i, j - self.cols).clone()
            }
        })
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + other.at(i, j))
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - other.at(i, j))
    }

    pub fn neg(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| -self.at(i, j))
    }

    pub fn scale(&self, c: &GaussianRational) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) * c)
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Mat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if !b.is_zero() {
                        *out.at_mut(i, j) += &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.at(i, j).is_one()
                    } else {
                        self.at(i, j).is_zero()
                    }
                })
            })
    }

    /// Reduced row echelon form in place; returns pivot column indices.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.at(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(r * self.cols + j, p * self.cols + j);
                }
            }
            let inv = self.at(r, c).inv().unwrap();
            for j in c..self.cols {
                let v = self.at(r, j) * &inv;
                *self.at_mut(r, j) = v;
            }
            for i in 0..self.rows {
                if i != r && !self.at(i, c).is_zero() {
                    let f = self.at(i, c).clone();
                    for j in c..self.cols {
                        let v = self.at(i, j) - &(&f * self.at(r, j));
                        *self.at_mut(i, j) = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    pub fn det(&self) -> GaussianRational {
        assert!(self.rows == self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = GaussianRational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.at(i, c).is_zero()) else {
                return GaussianRational::zero();
            };
            if p != c {
                for j in 0..n {
                    m.data.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            det = &det * m.at(c, c);
            let inv = m.at(c, c).inv().unwrap();
            for i in c + 1..n {
                if !m.at(i, c).is_zero() {
                    let f = m.at(i, c) * &inv;
                    for j in c..n {
                        let v = m.at(i, j) - &(&f * m.at(c, j));
                        *m.at_mut(i, j) = v;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<Mat> {
        assert!(self.rows == self.cols);
        let n = self.rows;
        let mut aug = self.hstack(&Mat::identity(n));
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots.iter().enumerate().any(|(k, &c)| c != k) {
            return Err(Error::NonUnit("singular constant matrix".into()));
        }
        Ok(Mat::from_fn(n, n, |i, j| aug.at(i, n + j).clone()))
    }

    /// Basis of the right kernel, as columns.
    pub fn kernel_basis(&self) -> Mat {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Mat::zero(self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            *out.at_mut(fc, k) = GaussianRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                *out.at_mut(pc, k) = -m.at(r, fc).clone();
            }
        }
        out
    }

    /// One solution of `self · x = b`, if any.
    pub fn solve(&self, b: &Mat) -> Option<Mat> {
        assert_eq!(b.rows, self.rows);
        let mut aug = self.hstack(b);
        let pivots = aug.rref_in_place();
        // Any pivot in the b-block means inconsistency.
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Mat::zero(self.cols, b.cols);
        for (r, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                *x.at_mut(pc, j) = aug.at(r, self.cols + j).clone();
            }
        }
        Some(x)
    }

    /// Canonical basis of the column space (columns, echelonized).
    pub fn col_space_basis(&self) -> Mat {
        let mut t = self.transpose();
        let pivots = t.rref_in_place();
        let k = pivots.len();
        Mat::from_fn(self.rows, k, |i, j| t.at(j, i).clone())
    }

    /// Does the column span of `self` contain the column span of `other`?
    pub fn span_contains(&self, other: &Mat) -> bool {
        assert_eq!(self.rows, other.rows);
        if other.cols == 0 {
            return true;
        }
        self.solve(other).is_some()
    }

    pub fn span_eq(&self, other: &Mat) -> bool {
        self.span_contains(other) && other.span_contains(self)
    }

    /// Basis of the intersection of two column spans.
    pub fn span_intersect(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        if self.cols == 0 || other.cols == 0 {
            return Mat::zero(self.rows, 0);
        }
        let stacked = self.hstack(other);
        let ker = stacked.kernel_basis();
        // each kernel column (x; y) gives self·x = -other·y in the intersection
        let mut cols = Vec::new();
        for k in 0..ker.cols {
            let x = Mat::from_fn(self.cols, 1, |i, _| ker.at(i, k).clone());
            cols.push(self.mul(&x));
        }
        if cols.is_empty() {
            return Mat::zero(self.rows, 0);
        }
        let all = cols
            .into_iter()
            .reduce(|a, b| a.hstack(&b))
            .unwrap();
        all.col_space_basis()
    }

    pub fn span_sum(&self, other: &Mat) -> Mat {
        self.hstack(other).col_space_basis()
    }

    pub fn span_dim(&self) -> usize {
        self.rank()
    }

    /// Characteristic-polynomial-free similarity helper: `p^{-1}·self·p`.
    pub fn conjugate_by(&self, p: &Mat) -> Result<Mat> {
        Ok(p.inverse()?.mul(self).mul(p))
    }

    pub fn trace(&self) -> GaussianRational {
        assert!(self.rows == self.cols);
        let mut t = GaussianRational::zero();
        for i in 0..self.rows {
            t += self.at(i, i);
        }
        t
    }
}

/// Permutations are images: `w[j]` is where index `j` goes.
pub type Perm = Vec<usize>;

pub fn perm_identity(n: usize) -> Perm {
    (0..n).collect()
}

pub fn perm_inverse(w: &Perm) -> Perm {
    let mut inv = vec![0; w.len()];
    for (j, &i) in w.iter().enumerate() {
        inv[i] = j;
    }
    inv
}

/// Matrix of `w`: column `j` has a 1 in row `w[j]`, so `P_w e_j = e_{w(j)}`.
pub fn perm_matrix(w: &Perm) -> Mat {
    let n = w.len();
    let mut m = Mat::zero(n, n);
    for (j, &i) in w.iter().enumerate() {
        *m.at_mut(i, j) = GaussianRational::one();
    }
    m
}

/// Applies `w` to a sequence of values: result at `w(j)` is `v[j]`.
pub fn perm_apply<T: Clone>(w: &Perm, v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    for (j, &i) in w.iter().enumerate() {
        out[i] = v[j].clone();
    }
    out
}

/// Bruhat decomposition through the standard (upper) Borel:
/// `a = q · P_w · q'^{-1}` with `q`, `q'` invertible upper triangular.
/// The cell label `w` is canonical; the factors are a deterministic choice.
pub fn bruhat_decompose(a: &Mat) -> Result<(Perm, Mat, Mat)> {
    let n = a.rows();
    assert!(a.cols() == n);
    let mut m = a.clone();
    // Left ops: row_i += c row_k with i < k (upper). Right ops: col_k += c col_j
    // with j < k (upper). Track accumulated inverses.
    let mut linv = Mat::identity(n); // accumulates L^{-1} so that a = linv · m_current · rinv
    let mut rinv = Mat::identity(n);
    let mut w: Perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for j in 0..n {
        let Some(ij) = (0..n).rev().find(|&i| !used[i] && !m.at(i, j).is_zero()) else {
            return Err(Error::NonUnit("bruhat: singular input".into()));
        };
        used[ij] = true;
        w[j] = ij;
        let pivinv = m.at(ij, j).inv()?;
        // clear above the pivot in column j (unused rows only; used rows are 0 here)
        for i in 0..ij {
            if !used[i] && !m.at(i, j).is_zero() {
                let f = m.at(i, j) * &pivinv;
                // row_i -= f row_ij ; E = I - f e_{i,ij}; linv := linv · E^{-1}
                for jj in 0..n {
                    let v = m.at(i, jj) - &(&f * m.at(ij, jj));
                    *m.at_mut(i, jj) = v;
                }
                for r in 0..n {
                    let v = linv.at(r, ij) + &(&f * linv.at(r, i));
                    *linv.at_mut(r, ij) = v;
                }
            }
        }
        // clear to the right of the pivot in row ij
        for k in j + 1..n {
            if !m.at(ij, k).is_zero() {
                let f = m.at(ij, k) * &pivinv;
                // col_k -= f col_j ; E = I - f e_{j,k}; rinv := E^{-1} · rinv
                for i in 0..n {
                    let v = m.at(i, k) - &(&f * m.at(i, j));
                    *m.at_mut(i, k) = v;
                }
                for c in 0..n {
                    let v = rinv.at(j, c) + &(&f * rinv.at(k, c));
                    *rinv.at_mut(j, c) = v;
                }
            }
        }
    }
    // m is now the scaled permutation P_w · D with D_jj the pivot values.
    let d = Mat::from_fn(n, n, |i, j| if i == j { m.at(w[j], j).clone() } else { GaussianRational::zero() });
    let q = linv;
    // a = q · (P_w D) · rinv  =>  q' := rinv^{-1} · D^{-1}; return q' with a = q P_w q'^{-1}
    let qp = rinv.inverse()?.mul(&d.inverse()?);
    Ok((w, q, qp))
}

/// Writes an invertible matrix with determinant 1 as an ordered product of
/// transvections `I + λ E_{ab}`. Returns the list of `(a, b, λ)`.
pub fn transvection_factor(m: &Mat) -> Result<Vec<(usize, usize, GaussianRational)>> {
    let n = m.rows();
    assert!(m.cols() == n);
    if !(m.det() - GaussianRational::one()).is_zero() {
        return Err(Error::DeterminantMismatch("transvection factorization needs det 1".into()));
    }
    if n == 1 {
        return Ok(vec![]);
    }
    // Reduce a to the identity by left transvections, collecting inverses.
    let mut a = m.clone();
    let mut ops: Vec<(usize, usize, GaussianRational)> = Vec::new(); // applied left ops in order
    let apply = |a: &mut Mat, ops: &mut Vec<(usize, usize, GaussianRational)>, i: usize, k: usize, lam: GaussianRational| {
        if lam.is_zero() {
            return;
        }
        for j in 0..n {
            let v = a.at(i, j) + &(&lam * a.at(k, j));
            *a.at_mut(i, j) = v;
        }
        ops.push((i, k, lam));
    };
    for c in 0..n {
        if a.at(c, c).is_zero() {
            let src = (0..n).filter(|&i| i != c).find(|&i| !a.at(i, c).is_zero());
            let Some(src) = src else {
                return Err(Error::NonUnit("transvection: singular".into()));
            };
            apply(&mut a, &mut ops, c, src, GaussianRational::one());
        }
        let pivinv = a.at(c, c).inv()?;
        for i in 0..n {
            if i != c && !a.at(i, c).is_zero() {
                let lam = -(a.at(i, c) * &pivinv);
                apply(&mut a, &mut ops, i, c, lam);
            }
        }
    }
    // a is now diagonal with det 1: clear it pairwise with h(x) = w(x)·w(-1),
    // w(x) = T12(x) T21(-1/x) T12(x) acting on rows (j, j+1).
    for j in 0..n - 1 {
        let x = a.at(j, j).clone();
        if x.is_one() {
            continue;
        }
        // Applying this sequence forward accumulates the left factor
        // w(1)^{-1}·w(x) = diag(1/x, x) on rows (j, j+1), pushing the
        // diagonal defect to the right.
        let seq = [
            (j, j + 1, x.clone()),
            (j + 1, j, -x.inv()?),
            (j, j + 1, x.clone()),
            (j, j + 1, -GaussianRational::one()),
            (j + 1, j, GaussianRational::one()),
            (j, j + 1, -GaussianRational::one()),
        ];
        for (r, s, lam) in seq {
            apply(&mut a, &mut ops, r, s, lam);
        }
    }
    if !a.is_identity() {
        return Err(Error::NonUnit("transvection reduction failed".into()));
    }
    // (o_k ··· o_1) · m = I, so m = o_1^{-1} · o_2^{-1} ··· o_k^{-1}: invert
    // each op, keeping the application order.
    let factors: Vec<(usize, usize, GaussianRational)> =
        ops.into_iter().map(|(i, k, lam)| (i, k, -lam)).collect();
    Ok(factors)
}

/// Solves the Sylvester-type equation `Φ_{U,V}(X) = X·U − V·X = C` exactly.
/// `None` when the operator is singular (spectra of `U` and `V` meet).
pub fn sylvester_solve(u: &Mat, v: &Mat, c: &Mat) -> Option<Mat> {
    let n = v.rows();
    let m = u.rows();
    assert!(u.cols() == m && v.cols() == n);
    assert!(c.rows == n && c.cols == m);
    // unknown X is n×m; vectorize row-major: idx(i,j) = i*m+j
    let dim = n * m;
    let mut sys = Mat::zero(dim, dim);
    let mut rhs = Mat::zero(dim, 1);
    for i in 0..n {
        for j in 0..m {
            let row = i * m + j;
            *rhs.at_mut(row, 0) = c.at(i, j).clone();
            // (XU)_{ij} = Σ_k X_{ik} U_{kj}
            for k in 0..m {
                *sys.at_mut(row, i * m + k) += u.at(k, j);
            }
            // -(VX)_{ij} = -Σ_k V_{ik} X_{kj}
            for k in 0..n {
                *sys.at_mut(row, k * m + j) -= v.at(i, k);
            }
        }
    }
    if sys.rank() < dim {
        return None;
    }
    let x = sys.solve(&rhs)?;
    Some(Mat::from_fn(n, m, |i, j| x.at(i * m + j, 0).clone()))
}

/// A flag of subspaces `0 ⊂ F_1 ⊂ … ⊂ F_s = V`, each step as a column basis.
#[derive(Clone)]
pub struct Flag {
    n: usize,
    steps: Vec<Mat>,
}

impl std::fmt::Debug for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Flag(dims {:?})", self.step_dims())
    }
}

impl Flag {
    /// Validates strict ascent and final step equal to the ambient space.
    pub fn from_steps(n: usize, steps: Vec<Mat>) -> Result<Flag> {
        if steps.is_empty() {
            return Err(Error::InvalidInput("flag needs at least one step".into()));
        }
        let mut canon = Vec::with_capacity(steps.len());
        let mut prev_dim = 0;
        for (k, s) in steps.iter().enumerate() {
            if s.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "flag step {k} lives in dimension {}, ambient is {n}",
                    s.rows()
                )));
            }
            let b = s.col_space_basis();
            if b.cols() <= prev_dim {
                return Err(Error::InvalidInput(format!(
                    "flag step {k} does not strictly increase"
                )));
            }
            if k > 0 {
                let prev: &Mat = &canon[k - 1];
                if !b.span_contains(prev) {
                    return Err(Error::InvalidInput(format!("flag step {k} does not contain step {}", k - 1)));
                }
            }
            prev_dim = b.cols();
            canon.push(b);
        }
        if prev_dim != n {
            return Err(Error::InvalidInput("last flag step must be the full space".into()));
        }
        Ok(Flag { n, steps: canon })
    }

    /// The trivial flag `0 ⊂ V`.
    pub fn trivial(n: usize) -> Flag {
        Flag { n, steps: vec![Mat::identity(n)] }
    }

    /// The standard coordinate flag with the given signature.
    pub fn coordinate(n: usize, signature: &[usize]) -> Flag {
        assert_eq!(signature.iter().sum::<usize>(), n);
        let mut steps = Vec::new();
        let mut d = 0;
        for &s in signature {
            d += s;
            steps.push(Mat::from_fn(n, d, |i, j| {
                if i == j {
                    GaussianRational::one()
                } else {
                    GaussianRational::zero()
                }
            }));
        }
        Flag { n, steps }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, k: usize) -> &Mat {
        &self.steps[k]
    }

    pub fn steps(&self) -> &[Mat] {
        &self.steps
    }

    pub fn step_dims(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.cols()).collect()
    }

    pub fn signature(&self) -> Vec<usize> {
        let dims = self.step_dims();
        let mut sig = Vec::with_capacity(dims.len());
        let mut prev = 0;
        for d in dims {
            sig.push(d - prev);
            prev = d;
        }
        sig
    }

    pub fn eq_flag(&self, other: &Flag) -> bool {
        self.n == other.n
            && self.step_dims() == other.step_dims()
            && self
                .steps
                .iter()
                .zip(other.steps.iter())
                .all(|(a, b)| a.span_eq(b))
    }

    /// Is every component invariant under the endomorphism?
    pub fn is_stable_under(&self, f: &Mat) -> bool {
        self.steps.iter().all(|s| s.span_contains(&f.mul(s)))
    }

    /// `F'_i ⊕ F_{s-i} = V` for all `i` (requires mirrored signatures).
    pub fn is_transversal_to(&self, other: &Flag) -> bool {
        if self.n != other.n || self.num_steps() != other.num_steps() {
            return false;
        }
        let s = self.num_steps();
        for i in 1..s {
            // other_i ⊕ self_{s-i} = V
            let a = &other.steps[i - 1];
            let b = &self.steps[s - i - 1];
            if a.cols() + b.cols() != self.n || a.span_intersect(b).cols() != 0 {
                return false;
            }
        }
        true
    }

    /// A basis whose first `dim F_k` columns span `F_k` for every `k`.
    pub fn respecting_basis(&self) -> Mat {
        let mut cols: Vec<Mat> = Vec::new();
        let mut current = Mat::zero(self.n, 0);
        for s in &self.steps {
            for j in 0..s.cols() {
                let v = s.col(j);
                if !current.span_contains(&v) {
                    current = current.hstack(&v);
                    cols.push(v);
                }
            }
        }
        Mat::from_cols(cols)
    }

    /// Basis adapted to the flag and a subspace `W`: within each flag block,
    /// vectors lying in `W` come first. Used by the adjacent-modification
    /// pipeline.
    pub fn respecting_basis_with_subspace(&self, w: &Mat) -> Mat {
        let mut cols: Vec<Mat> = Vec::new();
        let mut current = Mat::zero(self.n, 0);
        for s in &self.steps {
            // first the new directions of F_k ∩ W
            let fw = s.span_intersect(w);
            for j in 0..fw.cols() {
                let v = fw.col(j);
                if !current.span_contains(&v) {
                    current = current.hstack(&v);
                    cols.push(v);
                }
            }
            for j in 0..s.cols() {
                let v = s.col(j);
                if !current.span_contains(&v) {
                    current = current.hstack(&v);
                    cols.push(v);
                }
            }
        }
        Mat::from_cols(cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    #[test]
    fn inverse_and_det() {
        let m = Mat::from_rows(vec![
            vec![q(1, 1), q(2, 1)],
            vec![q(3, 1), qi(1, 1, 1, 1)],
        ]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(!m.det().is_zero());
    }

    #[test]
    fn kernel_and_solve() {
        let m = Mat::from_int_rows(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = m.kernel_basis();
        assert_eq!(k.cols(), 2);
        assert!(m.mul(&k).is_zero());
        let b = Mat::from_int_rows(&[&[6], &[12]]);
        let x = m.solve(&b).unwrap();
        assert_eq!(m.mul(&x), b);
    }

    #[test]
    fn span_operations() {
        let a = Mat::from_int_rows(&[&[1, 0], &[0, 1], &[0, 0]]);
        let b = Mat::from_int_rows(&[&[0, 0], &[1, 0], &[0, 1]]);
        let i = a.span_intersect(&b);
        assert_eq!(i.cols(), 1);
        let s = a.span_sum(&b);
        assert_eq!(s.cols(), 3);
    }

    #[test]
    fn bruhat_identity_cell() {
        let m = Mat::from_int_rows(&[&[1, 2], &[0, 3]]);
        let (w, qm, qp) = bruhat_decompose(&m).unwrap();
        assert_eq!(w, vec![0, 1]);
        let rebuilt = qm.mul(&perm_matrix(&w)).mul(&qp.inverse().unwrap());
        assert_eq!(rebuilt, m);
    }

    #[test]
    fn bruhat_antidiagonal() {
        let m = Mat::from_int_rows(&[&[0, 1], &[1, 0]]);
        let (w, qm, qp) = bruhat_decompose(&m).unwrap();
        assert_eq!(w, vec![1, 0]);
        let rebuilt = qm.mul(&perm_matrix(&w)).mul(&qp.inverse().unwrap());
        assert_eq!(rebuilt, m);
    }

    #[test]
    fn bruhat_generic() {
        let m = Mat::from_int_rows(&[&[1, 1, 2], &[1, 2, 1], &[2, 1, 1]]);
        let (w, qm, qp) = bruhat_decompose(&m).unwrap();
        let rebuilt = qm.mul(&perm_matrix(&w)).mul(&qp.inverse().unwrap());
        assert_eq!(rebuilt, m);
        // factors upper triangular
        for i in 0..3 {
            for j in 0..i {
                assert!(qm.at(i, j).is_zero());
                assert!(qp.at(i, j).is_zero());
            }
        }
    }

    #[test]
    fn transvections_rebuild() {
        let m = Mat::from_rows(vec![
            vec![q(2, 1), q(1, 1)],
            vec![q(3, 1), q(2, 1)],
        ]);
        assert!((m.det() - GaussianRational::one()).is_zero());
        let fs = transvection_factor(&m).unwrap();
        let mut acc = Mat::identity(2);
        for (a, b, lam) in &fs {
            let mut t = Mat::identity(2);
            *t.at_mut(*a, *b) = lam.clone();
            acc = acc.mul(&t);
        }
        assert_eq!(acc, m);
    }

    #[test]
    fn sylvester() {
        let u = Mat::from_int_rows(&[&[0, 0], &[0, 0]]);
        let v = Mat::from_int_rows(&[&[1, 0], &[0, 1]]);
        // X·0 - I·X = C  =>  X = -C
        let c = Mat::from_int_rows(&[&[1, 2], &[3, 4]]);
        let x = sylvester_solve(&u, &v, &c).unwrap();
        assert_eq!(x, c.neg());
        // singular when spectra meet
        assert!(sylvester_solve(&v, &v, &c).is_none());
    }

    #[test]
    fn flag_basics() {
        let f = Flag::coordinate(3, &[1, 2]);
        assert_eq!(f.signature(), vec![1, 2]);
        let nilp = Mat::from_int_rows(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]]);
        // span(e1) invariant under this nilpotent
        assert!(f.is_stable_under(&nilp));
        let b = f.respecting_basis();
        assert_eq!(b.rank(), 3);
    }

    #[test]
    fn flag_with_subspace_ordering() {
        let f = Flag::trivial(2);
        let w = Mat::from_int_rows(&[&[0], &[1]]);
        let b = f.respecting_basis_with_subspace(&w);
        // first column must span W
        assert!(w.span_eq(&b.col(0)));
    }
}
