//! Lattices in `V = K^n` over the valuation ring `h = C[[z]]`: Smith
//! decompositions and elementary divisors, the building distance and index,
//! module sums and intersections, quotient spaces with their nilpotent
//! `z`-action, and the relative flag of a lattice.
//!
//! A lattice is the `h`-span of the columns of an invertible series matrix.
//! Two bases span the same lattice exactly when the basis-change matrix is a
//! lattice gauge (`GL_n(h)`), which is decidable at finite precision.

use crate::building::AdmissiblePair;
use crate::cmat::{Flag, Mat};
use crate::error::{Error, Result};
use crate::scalar::GaussianRational;
use crate::smat::SeriesMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    basis: SeriesMatrix,
}

impl Lattice {
    /// Lattice spanned over `h` by the columns of `basis`.
    pub fn new(basis: SeriesMatrix) -> Result<Lattice> {
        if basis.rows() != basis.cols() {
            return Err(Error::DimensionMismatch("lattice basis must be square".into()));
        }
        let det = basis.det()?;
        if det.valuation().is_none() {
            return Err(if det.is_exact_zero() {
                Error::NonUnit("lattice basis is singular".into())
            } else {
                Error::PrecisionExhausted("lattice basis determinant hidden below precision".into())
            });
        }
        Ok(Lattice { basis })
    }

    /// The standard lattice `h^n`.
    pub fn standard(n: usize) -> Lattice {
        Lattice { basis: SeriesMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &SeriesMatrix {
        &self.basis
    }

    /// Homothety `z^k · λ`.
    pub fn shift(&self, k: i64) -> Lattice {
        let n = self.dim();
        let mut b = self.basis.clone();
        for i in 0..n {
            for j in 0..n {
                *b.at_mut(i, j) = self.basis.at(i, j).shift(k);
            }
        }
        Lattice { basis: b }
    }

    /// Basis-change matrix expressing `other`'s basis in `self`'s basis.
    pub fn relative_gauge(&self, other: &Lattice) -> Result<SeriesMatrix> {
        Ok(self.basis.inverse()?.mul(&other.basis))
    }

    /// Lattice equality: the relative gauge lies in `GL_n(h)`.
    pub fn equals(&self, other: &Lattice) -> Result<bool> {
        self.relative_gauge(other)?.is_lattice_gauge()
    }

    /// `other ⊆ self`: every column of `other` has integral coordinates.
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        let g = self.relative_gauge(other)?;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let s = g.at(i, j);
                match s.valuation() {
                    Some(v) if v < 0 => return Ok(false),
                    Some(_) => {}
                    None => {
                        if let Some(p) = s.precision() {
                            if p < 0 {
                                return Err(Error::Undecidable(
                                    "containment unknown at this precision".into(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// `v_λ(M) = k_1`, the smallest elementary divisor, computed as the
    /// matrix valuation of the relative gauge.
    pub fn v_of(&self, other: &Lattice) -> Result<i64> {
        self.relative_gauge(other)?.matrix_valuation()
    }

    /// Valuation `v_λ(x) = min{k : z^k x ∈ λ}` of a vector.
    pub fn v_of_vector(&self, x: &SeriesMatrix) -> Result<i64> {
        let y = self.basis.inverse()?.mul(x);
        Ok(-y.matrix_valuation()?)
    }

    /// Dual lattice (inverse-transpose basis).
    pub fn dual(&self) -> Result<Lattice> {
        Ok(Lattice { basis: self.basis.inverse()?.transpose() })
    }

    /// Lattice generated by the columns of `gens` (must have full rank).
    pub fn from_generators(gens: &SeriesMatrix) -> Result<Lattice> {
        let n = gens.rows();
        let m = gens.cols();
        if m < n {
            return Err(Error::DimensionMismatch("not enough generators".into()));
        }
        let mut a = gens.clone();
        // column Hermite reduction over h: after step i, columns > i vanish in rows ≤ i
        for i in 0..n {
            let mut piv: Option<(usize, i64)> = None;
            for j in i..m {
                if let Some(v) = a.at(i, j).valuation() {
                    if piv.map_or(true, |(_, pv)| v < pv) {
                        piv = Some((j, v));
                    }
                }
            }
            let Some((pj, _)) = piv else {
                return Err(if (i..m).all(|j| a.at(i, j).is_exact_zero()) {
                    Error::NonUnit("generators do not span a full-rank lattice".into())
                } else {
                    Error::PrecisionExhausted(format!(
                        "generator reduction pivot in row {i} hidden below precision"
                    ))
                });
            };
            if pj != i {
                for r in 0..n {
                    let tmp = a.at(r, i).clone();
                    *a.at_mut(r, i) = a.at(r, pj).clone();
                    *a.at_mut(r, pj) = tmp;
                }
            }
            let pinv = a.at(i, i).inv()?;
            for j in i + 1..m {
                if !a.at(i, j).is_zero_at_precision() {
                    let f = a.at(i, j) * &pinv;
                    for r in 0..n {
                        let v = a.at(r, j) - &(&f * a.at(r, i));
                        *a.at_mut(r, j) = v;
                    }
                }
            }
        }
        let basis = SeriesMatrix::from_fn(n, n, |r, c| a.at(r, c).clone());
        Lattice::new(basis)
    }

    /// Module sum `self + other`.
    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        Lattice::from_generators(&self.basis.hstack(&other.basis))
    }

    /// Module intersection, computed through duals: `(λ ∩ M)* = λ* + M*`.
    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        self.dual()?.sum(&other.dual()?)?.dual()
    }
}

/// Smith data of a pair of lattices: the elementary divisors `κ` of `M` in
/// `λ` and a Smith basis, i.e. an `h`-basis `(e)` of `λ` such that
/// `(z^{k_i} e_i)` is an `h`-basis of `M`.
#[derive(Clone, Debug)]
pub struct SmithData {
    /// Nondecreasing elementary divisors.
    pub kappa: Vec<i64>,
    /// Columns: the Smith basis of `λ` for `M`, in ambient coordinates.
    pub smith_basis: SeriesMatrix,
    /// Right gauge `W ∈ GL_n(h)` with `M_basis = smith_basis · z^κ · W`.
    pub right_gauge: SeriesMatrix,
}

impl SmithData {
    /// Distinct divisor values with multiplicities.
    pub fn multiplicities(&self) -> Vec<(i64, usize)> {
        let mut out: Vec<(i64, usize)> = Vec::new();
        for &k in &self.kappa {
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    pub fn v(&self) -> i64 {
        self.kappa[0]
    }

    pub fn distance(&self) -> i64 {
        self.kappa[self.kappa.len() - 1] - self.kappa[0]
    }

    pub fn index(&self) -> i64 {
        let k1 = self.kappa[0];
        self.kappa.iter().map(|k| k - k1).sum()
    }
}

/// Smith decomposition of the pair `(λ, M)`.
///
/// Pivoting is deterministic: the entry of lowest valuation wins, ties broken
/// by smallest row index then column index, so the returned Smith basis is
/// reproducible.
pub fn smith_decomposition(lam: &Lattice, m: &Lattice) -> Result<SmithData> {
    let g = lam.relative_gauge(m)?;
    let n = g.rows();
    let mut a = g.clone();
    let mut linv = SeriesMatrix::identity(n);
    let mut rinv = SeriesMatrix::identity(n);
    let mut kappa = Vec::with_capacity(n);
    for step in 0..n {
        let mut piv: Option<(usize, usize, i64)> = None;
        for i in step..n {
            for j in step..n {
                if let Some(v) = a.at(i, j).valuation() {
                    let better = match piv {
                        None => true,
                        Some((pi, pj, pv)) => v < pv || (v == pv && (i, j) < (pi, pj)),
                    };
                    if better {
                        piv = Some((i, j, v));
                    }
                }
            }
        }
        let Some((pi, pj, pv)) = piv else {
            return Err(if (step..n).all(|i| (step..n).all(|j| a.at(i, j).is_exact_zero())) {
                Error::NonUnit("relative gauge is singular".into())
            } else {
                Error::PrecisionExhausted(format!(
                    "smith pivot at step {step} hidden below precision"
                ))
            });
        };
        if pi != step {
            for j in 0..n {
                let tmp = a.at(step, j).clone();
                *a.at_mut(step, j) = a.at(pi, j).clone();
                *a.at_mut(pi, j) = tmp;
            }
            for r in 0..n {
                let tmp = linv.at(r, step).clone();
                *linv.at_mut(r, step) = linv.at(r, pi).clone();
                *linv.at_mut(r, pi) = tmp;
            }
        }
        if pj != step {
            for i in 0..n {
                let tmp = a.at(i, step).clone();
                *a.at_mut(i, step) = a.at(i, pj).clone();
                *a.at_mut(i, pj) = tmp;
            }
            for c in 0..n {
                let tmp = rinv.at(step, c).clone();
                *rinv.at_mut(step, c) = rinv.at(pj, c).clone();
                *rinv.at_mut(pj, c) = tmp;
            }
        }
        kappa.push(pv);
        let pinv = a.at(step, step).inv()?;
        for r in step + 1..n {
            if !a.at(r, step).is_zero_at_precision() {
                let f = a.at(r, step) * &pinv;
                for j in step..n {
                    let v = a.at(r, j) - &(&f * a.at(step, j));
                    *a.at_mut(r, j) = v;
                }
                for rr in 0..n {
                    let v = linv.at(rr, step) + &(&f * linv.at(rr, r));
                    *linv.at_mut(rr, step) = v;
                }
            }
        }
        for c in step + 1..n {
            if !a.at(step, c).is_zero_at_precision() {
                let f = a.at(step, c) * &pinv;
                for i in step..n {
                    let v = a.at(i, c) - &(&f * a.at(i, step));
                    *a.at_mut(i, c) = v;
                }
                for cc in 0..n {
                    let v = rinv.at(step, cc) + &(&f * rinv.at(c, cc));
                    *rinv.at_mut(step, cc) = v;
                }
            }
        }
    }
    // a is diagonal diag(u_i z^{κ_i}); push the units into the left gauge
    let mut units = SeriesMatrix::identity(n);
    for i in 0..n {
        *units.at_mut(i, i) = a.at(i, i).shift(-kappa[i]);
    }
    let u = linv.mul(&units);
    let smith_basis = lam.basis().mul(&u);
    Ok(SmithData { kappa, smith_basis, right_gauge: rinv })
}

/// Building distance, index, and valuation of the pair `(λ, M)`.
///
/// Cross-checks `d = k_n − k_1` against `d = −v_λ(M) − v_M(λ)`.
pub fn distance_index(lam: &Lattice, m: &Lattice) -> Result<(i64, i64, i64)> {
    let s = smith_decomposition(lam, m)?;
    let d = s.distance();
    let v_lm = lam.v_of(m)?;
    let v_ml = m.v_of(lam)?;
    if d != -v_lm - v_ml {
        return Err(Error::PrecisionExhausted(format!(
            "distance cross-check failed: {d} vs {}",
            -v_lm - v_ml
        )));
    }
    Ok((d, s.index(), s.v()))
}

/// The finite-dimensional quotient `λ/λ'` for nested lattices `λ' ⊆ λ`,
/// as an exact vector space with its nilpotent `z`-action.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    /// Inverse of the Smith basis of `λ` for `λ'`, for coordinate reads.
    smith_basis_inv: SeriesMatrix,
    /// Divisors of `λ'` in `λ` (all ≥ 0).
    pub kappa: Vec<i64>,
    /// Coordinate labels: class of `z^power · e_col`.
    pub labels: Vec<(usize, i64)>,
    /// Nilpotent matrix of multiplication by `z`.
    pub z_action: Mat,
}

impl QuotientSpace {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Image of an ambient vector (given in `V`-coordinates) in the quotient.
    pub fn project(&self, x: &SeriesMatrix) -> Result<Mat> {
        let y = self.smith_basis_inv.mul(x);
        let mut out = Mat::zero(self.dim(), 1);
        for (idx, &(col, pow)) in self.labels.iter().enumerate() {
            let c = y.at(col, 0).coeff(pow).ok_or_else(|| {
                Error::PrecisionExhausted("quotient projection below precision".into())
            })?;
            *out.at_mut(idx, 0) = c;
        }
        Ok(out)
    }

    /// Image subspace `Ψ_{λ,λ'}(N) = ((N + λ') ∩ λ)/λ'` of a lattice.
    pub fn project_lattice(&self, lam: &Lattice, lamp: &Lattice, n_lat: &Lattice) -> Result<Mat> {
        let clipped = n_lat.sum(lamp)?.intersect(lam)?;
        let mut cols: Vec<Mat> = Vec::new();
        let maxk = self.kappa.iter().copied().max().unwrap_or(0);
        for j in 0..clipped.dim() {
            let mut v = self.project(&clipped.basis().col(j))?;
            cols.push(v.clone());
            for _ in 1..maxk {
                v = self.z_action.mul(&v);
                cols.push(v.clone());
            }
        }
        let all = cols.into_iter().reduce(|a, b| a.hstack(&b)).unwrap();
        Ok(all.col_space_basis())
    }
}

/// Builds the quotient space `λ/λ'`; requires `λ' ⊆ λ`.
pub fn quotient_space(lam: &Lattice, lamp: &Lattice) -> Result<QuotientSpace> {
    let s = smith_decomposition(lam, lamp)?;
    if s.kappa.iter().any(|&k| k < 0) {
        return Err(Error::NotNested(format!(
            "divisors {:?} contain a negative entry",
            s.kappa
        )));
    }
    let mut labels = Vec::new();
    for (col, &k) in s.kappa.iter().enumerate() {
        for pow in 0..k {
            labels.push((col, pow));
        }
    }
    let dim = labels.len();
    let mut z_action = Mat::zero(dim, dim);
    for (idx, &(col, pow)) in labels.iter().enumerate() {
        if let Some(target) = labels.iter().position(|&(c, p)| c == col && p == pow + 1) {
            *z_action.at_mut(target, idx) = GaussianRational::one();
        }
    }
    let smith_basis_inv = s.smith_basis.inverse()?;
    Ok(QuotientSpace { smith_basis_inv, kappa: s.kappa, labels, z_action })
}

/// `Ψ_{λ,λ'}(N)` as a subspace of the quotient `λ/λ'`.
pub fn quotient_psi(
    lam: &Lattice,
    lamp: &Lattice,
    n_lat: &Lattice,
) -> Result<(QuotientSpace, Mat)> {
    let q = quotient_space(lam, lamp)?;
    let sub = q.project_lattice(lam, lamp, n_lat)?;
    Ok((q, sub))
}

/// The relative flag `F_λ(M)` in `λ/𝔪λ` together with the elementary
/// divisors: the admissible pair `Φ_λ(M)`.
///
/// Coordinates in the quotient are classes of `λ`'s own basis columns.
pub fn relative_flag(lam: &Lattice, m: &Lattice) -> Result<AdmissiblePair> {
    let s = smith_decomposition(lam, m)?;
    let n = lam.dim();
    // images of the Smith basis vectors: constant term of the gauge from λ's
    // basis to the Smith basis
    let u = lam.basis().inverse()?.mul(&s.smith_basis);
    let u0 = u.constant_term()?;
    let mult = s.multiplicities();
    let mut steps = Vec::new();
    let mut upto = 0;
    for (_, count) in &mult {
        upto += count;
        steps.push(Mat::from_fn(n, upto, |i, j| u0.at(i, j).clone()));
    }
    let flag = Flag::from_steps(n, steps)?;
    AdmissiblePair::new(flag, s.kappa.clone())
}

/// Normalizes a pair: replaces `M` by `z^{-v_λ(M)}·M` so the divisors start
/// at 0, returning the shift applied.
pub fn normalize_pair(lam: &Lattice, m: &Lattice) -> Result<(Lattice, i64)> {
    let v = lam.v_of(m)?;
    Ok((m.shift(-v), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LaurentSeries;

    fn zs(k: i64) -> LaurentSeries {
        LaurentSeries::monomial(GaussianRational::one(), k)
    }

    fn lattice_from(entries: Vec<Vec<LaurentSeries>>) -> Lattice {
        let n = entries.len();
        let m = SeriesMatrix::from_fn(n, n, |i, j| entries[i][j].clone());
        Lattice::new(m).unwrap()
    }

    #[test]
    fn diagonal_smith() {
        // λ = h², M spanned by (z e₁, z^{-1} e₂): κ = (−1, 1), d = 2, index = 2
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![zs(1), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(-1)],
        ]);
        let s = smith_decomposition(&lam, &m).unwrap();
        assert_eq!(s.kappa, vec![-1, 1]);
        assert_eq!(s.distance(), 2);
        assert_eq!(s.index(), 2);
        let (d, idx, v) = distance_index(&lam, &m).unwrap();
        assert_eq!((d, idx, v), (2, 2, -1));
    }

    #[test]
    fn same_lattice_zero_divisors() {
        let lam = Lattice::standard(3);
        let s = smith_decomposition(&lam, &lam).unwrap();
        assert_eq!(s.kappa, vec![0, 0, 0]);
    }

    #[test]
    fn column_reduction_case() {
        // M spanned by columns of [[1, 0],[1, z²]] in h²: κ = (0, 2)
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![LaurentSeries::one(), LaurentSeries::zero()],
            vec![LaurentSeries::one(), zs(2)],
        ]);
        let s = smith_decomposition(&lam, &m).unwrap();
        assert_eq!(s.kappa, vec![0, 2]);
        // reconstruction: smith_basis · z^κ · W = M's basis
        let rebuilt = s
            .smith_basis
            .mul(&SeriesMatrix::z_pow(&s.kappa))
            .mul(&s.right_gauge);
        let m2 = Lattice::new(rebuilt).unwrap();
        assert!(m.equals(&m2).unwrap());
        // smith basis itself spans λ
        let sb = Lattice::new(s.smith_basis.clone()).unwrap();
        assert!(lam.equals(&sb).unwrap());
    }

    #[test]
    fn kappa_invariant_under_gauge() {
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![zs(1), LaurentSeries::one()],
            vec![LaurentSeries::zero(), zs(-2)],
        ]);
        let s1 = smith_decomposition(&lam, &m).unwrap();
        // change both bases by lattice gauges
        let g1 = {
            let mut g = SeriesMatrix::identity(2);
            *g.at_mut(0, 1) = zs(1);
            g
        };
        let g2 = {
            let mut g = SeriesMatrix::identity(2);
            *g.at_mut(1, 0) = &zs(2) + &LaurentSeries::one();
            g
        };
        let lam2 = Lattice::new(lam.basis().mul(&g1)).unwrap();
        let m2 = Lattice::new(m.basis().mul(&g2)).unwrap();
        let s2 = smith_decomposition(&lam2, &m2).unwrap();
        assert_eq!(s1.kappa, s2.kappa);
    }

    #[test]
    fn homothety_distance_zero() {
        let lam = Lattice::standard(2);
        let m = lam.shift(3);
        let (d, idx, v) = distance_index(&lam, &m).unwrap();
        assert_eq!((d, idx, v), (0, 0, 3));
    }

    #[test]
    fn sum_and_intersection() {
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![zs(1), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(-1)],
        ]);
        let s = lam.sum(&m).unwrap();
        let i = lam.intersect(&m).unwrap();
        // sum has divisors min(0,κ), intersection max(0,κ) relative to λ
        let ds = smith_decomposition(&lam, &s).unwrap();
        assert_eq!(ds.kappa, vec![-1, 0]);
        let di = smith_decomposition(&lam, &i).unwrap();
        assert_eq!(di.kappa, vec![0, 1]);
        // containments
        assert!(s.contains(&lam).unwrap());
        assert!(s.contains(&m).unwrap());
        assert!(lam.contains(&i).unwrap());
        assert!(m.contains(&i).unwrap());
    }

    #[test]
    fn quotient_full_and_zero() {
        let lam = Lattice::standard(2);
        let lamp = lam.shift(1); // 𝔪λ
        let (qs, full) = quotient_psi(&lam, &lamp, &lam).unwrap();
        assert_eq!(qs.dim(), 2);
        assert_eq!(full.cols(), 2);
        let (_, zero) = quotient_psi(&lam, &lamp, &lamp).unwrap();
        assert_eq!(zero.cols(), 0);
    }

    #[test]
    fn quotient_adjacent_line() {
        // λ = h², λ' = 𝔪λ, N spanned by (e₁, z e₂): image is the line of ē₁
        let lam = Lattice::standard(2);
        let lamp = lam.shift(1);
        let n = lattice_from(vec![
            vec![LaurentSeries::one(), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(1)],
        ]);
        let (_, sub) = quotient_psi(&lam, &lamp, &n).unwrap();
        assert_eq!(sub.cols(), 1);
        assert!(!sub.at(0, 0).is_zero());
        assert!(sub.at(1, 0).is_zero());
    }

    #[test]
    fn quotient_monotone() {
        let lam = Lattice::standard(2);
        let lamp = lam.shift(2);
        let n1 = lattice_from(vec![
            vec![zs(1), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(2)],
        ]);
        let n2 = lattice_from(vec![
            vec![zs(1), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(1)],
        ]);
        let q = quotient_space(&lam, &lamp).unwrap();
        let s1 = q.project_lattice(&lam, &lamp, &n1).unwrap();
        let s2 = q.project_lattice(&lam, &lamp, &n2).unwrap();
        assert!(s2.span_contains(&s1));
    }

    #[test]
    fn relative_flag_diagonal() {
        // M = z^{(0,2)}·λ: flag 0 ⊂ span(ē₁) ⊂ λ/𝔪λ, signature (1,1)
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![LaurentSeries::one(), LaurentSeries::zero()],
            vec![LaurentSeries::zero(), zs(2)],
        ]);
        let pair = relative_flag(&lam, &m).unwrap();
        assert_eq!(pair.kappa(), &[0, 2]);
        assert_eq!(pair.flag().signature(), vec![1, 1]);
        let e1 = Mat::from_int_rows(&[&[1], &[0]]);
        assert!(pair.flag().step(0).span_eq(&e1));
    }

    #[test]
    fn relative_flag_trivial_and_n3() {
        let lam = Lattice::standard(2);
        let pair = relative_flag(&lam, &lam).unwrap();
        assert_eq!(pair.flag().num_steps(), 1);
        assert_eq!(pair.flag().signature(), vec![2]);

        let lam3 = Lattice::standard(3);
        let m = Lattice::new(SeriesMatrix::z_pow(&[0, 0, 2])).unwrap();
        let pair3 = relative_flag(&lam3, &m).unwrap();
        assert_eq!(pair3.flag().signature(), vec![2, 1]);
        let e12 = Mat::from_int_rows(&[&[1, 0], &[0, 1], &[0, 0]]);
        assert!(pair3.flag().step(0).span_eq(&e12));
    }

    #[test]
    fn off_diagonal_divisors() {
        // [[1, z^{-1}],[0, 1]]·h² relative to h²: divisors (−1, 1)
        let lam = Lattice::standard(2);
        let m = lattice_from(vec![
            vec![LaurentSeries::one(), zs(-1)],
            vec![LaurentSeries::zero(), LaurentSeries::one()],
        ]);
        let s = smith_decomposition(&lam, &m).unwrap();
        assert_eq!(s.kappa, vec![-1, 1]);
    }
}
