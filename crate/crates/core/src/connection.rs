//! Local meromorphic connections in a chosen basis: gauge transforms,
//! residues and Poincaré rank, logarithmic lattice tests, construction of
//! logarithmic lattices from residue-stable flags, and the Gantmacher
//! recursion producing the gauge to a constant (Birkhoff) normal form.
//!
//! Matrices are taken with respect to the logarithmic derivation `θ = z·d/dz`,
//! so a germ is logarithmic exactly when its matrix has nonnegative
//! valuation, and its residue is then the constant term.

use crate::building::{AdmissiblePair, Form};
use crate::cmat::{sylvester_solve, Flag, Mat};
use crate::eigen::{eigen_data, EigenData};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::GaussianRational;
use crate::series::LaurentSeries;
use crate::smat::SeriesMatrix;
use std::sync::Arc;

/// A connection germ: the matrix of `∇_θ` in the basis of `base_lattice`.
#[derive(Clone, Debug)]
pub struct ConnectionGerm {
    theta_matrix: SeriesMatrix,
    base_lattice: Lattice,
}

impl ConnectionGerm {
    pub fn new(theta_matrix: SeriesMatrix, base_lattice: Lattice) -> Result<ConnectionGerm> {
        if theta_matrix.rows() != base_lattice.dim() || theta_matrix.cols() != base_lattice.dim() {
            return Err(Error::DimensionMismatch("germ matrix vs base lattice".into()));
        }
        Ok(ConnectionGerm { theta_matrix, base_lattice })
    }

    /// Germ in the standard lattice's basis.
    pub fn in_standard(theta_matrix: SeriesMatrix) -> Result<ConnectionGerm> {
        let n = theta_matrix.rows();
        ConnectionGerm::new(theta_matrix, Lattice::standard(n))
    }

    /// Constant germ `A₀·dz/z`.
    pub fn constant(residue: &Mat) -> ConnectionGerm {
        ConnectionGerm {
            theta_matrix: SeriesMatrix::from_mat(residue),
            base_lattice: Lattice::standard(residue.rows()),
        }
    }

    pub fn dim(&self) -> usize {
        self.base_lattice.dim()
    }

    pub fn theta_matrix(&self) -> &SeriesMatrix {
        &self.theta_matrix
    }

    pub fn base_lattice(&self) -> &Lattice {
        &self.base_lattice
    }

    /// Poincaré rank `max(0, −v(L))`.
    pub fn poincare_rank(&self) -> i64 {
        match self.theta_matrix.matrix_valuation() {
            Ok(v) => (-v).max(0),
            Err(_) => 0,
        }
    }

    pub fn is_logarithmic(&self) -> bool {
        self.poincare_rank() == 0
    }

    /// Residue: the constant term, defined for logarithmic germs.
    pub fn residue(&self) -> Result<Mat> {
        if !self.is_logarithmic() {
            return Err(Error::InvalidInput("residue of a non-logarithmic germ".into()));
        }
        self.theta_matrix.constant_term()
    }

    /// Gauge transform `A ↦ P^{-1}AP − P^{-1}θP`, re-based onto the lattice
    /// spanned by the transformed basis.
    pub fn gauge_transform(&self, p: &SeriesMatrix) -> Result<ConnectionGerm> {
        let pinv = p.inverse()?;
        let theta_p = SeriesMatrix::from_fn(p.rows(), p.cols(), |i, j| p.at(i, j).theta());
        let new_matrix = pinv.mul(&self.theta_matrix).mul(p).sub(&pinv.mul(&theta_p));
        let new_basis = self.base_lattice.basis().mul(p);
        ConnectionGerm::new(new_matrix, Lattice::new(new_basis)?)
    }

    /// Expresses the germ in a basis of the lattice `m` and reports whether
    /// the matrix stays logarithmic there, together with the transformed
    /// matrix as witness.
    pub fn on_lattice(&self, m: &Lattice) -> Result<ConnectionGerm> {
        let p = self.base_lattice.basis().inverse()?.mul(m.basis());
        self.gauge_transform(&p)
    }

    /// Eigen data of the residue.
    pub fn residue_eigen(&self) -> Result<Arc<EigenData>> {
        eigen_data(&self.residue()?)
    }

    /// Residue eigenvalue real parts in `[0, 1)`; with `Q(i)` eigenvalues
    /// this also rules out resonance.
    pub fn is_deligne_normalized(&self) -> Result<bool> {
        let e = self.residue_eigen()?;
        Ok(e.eigenvalues.iter().all(|(l, _)| {
            use num_traits::{One, Signed, Zero};
            let re = &l.re;
            !(re.is_negative()) && (re - num_rational::BigRational::one()).is_negative()
                || re.is_zero()
        }))
    }
}

/// Is `M` a logarithmic lattice for the germ? Returns the transformed matrix
/// as witness when it is.
pub fn is_logarithmic_lattice(
    a: &ConnectionGerm,
    m: &Lattice,
) -> Result<(bool, SeriesMatrix)> {
    let transformed = a.on_lattice(m)?;
    let log = match transformed.theta_matrix.matrix_valuation() {
        Ok(v) => v >= 0,
        Err(_) => true,
    };
    Ok((log, transformed.theta_matrix))
}

/// For a logarithmic germ and an adjacent candidate described by a subspace
/// `W` of the residue fiber: `W`-stability under the residue decides the
/// logarithmic property of the corresponding lattice.
pub fn adjacent_log_subspace_test(a: &ConnectionGerm, w: &Mat) -> Result<bool> {
    let r = a.residue()?;
    Ok(w.span_contains(&r.mul(w)))
}

/// The adjacent lattice determined by a subspace `W ⊆ λ/𝔪λ` (coordinates of
/// the base lattice's basis): `W`-lift plus `𝔪λ`.
pub fn adjacent_lattice_from_subspace(base: &Lattice, w: &Mat) -> Result<Lattice> {
    let n = base.dim();
    if w.rows() != n {
        return Err(Error::DimensionMismatch("subspace in the wrong fiber".into()));
    }
    let lift = base.basis().mul(&SeriesMatrix::from_mat(w));
    let shifted = base.shift(1);
    let gens = lift.hstack(shifted.basis());
    Lattice::from_generators(&gens)
}

/// Gantmacher recursion: the unique gauge `P = I + P₁z + …` with
/// `A_[P] ≡ A₀ (mod z^N)`. Fails with `ResonantResidue` when a Sylvester
/// step is singular, i.e. two residue eigenvalues differ by a nonzero
/// integer.
pub fn birkhoff_gauge(a: &ConnectionGerm, order: i64) -> Result<SeriesMatrix> {
    if !a.is_logarithmic() {
        return Err(Error::InvalidInput("birkhoff gauge needs a logarithmic germ".into()));
    }
    if order < 1 {
        return Err(Error::InvalidInput("order must be ≥ 1".into()));
    }
    if let Some(p) = a.theta_matrix.precision() {
        if p < order {
            return Err(Error::PrecisionExhausted(format!(
                "germ known modulo z^{p}, gauge requested modulo z^{order}"
            )));
        }
    }
    let n = a.dim();
    let a0 = a.residue()?;
    let coeff = |k: i64| -> Mat {
        a.theta_matrix.coeff_matrix(k).expect("precision checked above")
    };
    let mut p_coeffs: Vec<Mat> = vec![Mat::identity(n)];
    for k in 1..order {
        let mut q = Mat::zero(n, n);
        for i in 1..=k {
            let ai = coeff(i);
            if !ai.is_zero() {
                q = q.add(&ai.mul(&p_coeffs[(k - i) as usize]));
            }
        }
        let mut a0_shift = a0.clone();
        for d in 0..n {
            *a0_shift.at_mut(d, d) -= &GaussianRational::from_int(k);
        }
        let pk = sylvester_solve(&a0, &a0_shift, &q).ok_or_else(|| {
            Error::ResonantResidue(format!(
                "residue eigenvalues differ by the integer {k}"
            ))
        })?;
        p_coeffs.push(pk);
    }
    let mut gauge = SeriesMatrix::zero(n, n);
    for (k, pk) in p_coeffs.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if !pk.at(i, j).is_zero() {
                    let term = LaurentSeries::monomial(pk.at(i, j).clone(), k as i64);
                    let v = gauge.at(i, j) + &term;
                    *gauge.at_mut(i, j) = v;
                }
            }
        }
    }
    Ok(gauge.truncate(order))
}

/// Coordinate-change gauge between Birkhoff forms: the unique `P̃` with
/// `P̃₀ = I` transforming `A₀·u·dt/t` into `A₀·dt/t`, with coefficients
/// polynomial in `A₀`: `P̃_k = (1/k) Σ u_i A₀ P̃_{k−i}`.
pub fn birkhoff_coordinate_change(a0: &Mat, u: &LaurentSeries, order: i64) -> Result<SeriesMatrix> {
    if u.coeff(0).map_or(true, |c| !c.is_one()) {
        return Err(Error::InvalidInput("u must be a unit with constant term 1".into()));
    }
    if let Some(p) = u.precision() {
        if p < order {
            return Err(Error::PrecisionExhausted(format!(
                "u known modulo t^{p}, gauge requested modulo t^{order}"
            )));
        }
    }
    let n = a0.rows();
    let mut coeffs: Vec<Mat> = vec![Mat::identity(n)];
    for k in 1..order {
        let mut acc = Mat::zero(n, n);
        for i in 1..=k {
            let ui = u.coeff(i).unwrap_or_else(GaussianRational::zero);
            if ui.is_zero() {
                continue;
            }
            acc = acc.add(&a0.scale(&ui).mul(&coeffs[(k - i) as usize]));
        }
        coeffs.push(acc.scale(&GaussianRational::from_ratio(1, k)));
    }
    let mut gauge = SeriesMatrix::zero(n, n);
    for (k, pk) in coeffs.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if !pk.at(i, j).is_zero() {
                    let term = LaurentSeries::monomial(pk.at(i, j).clone(), k as i64);
                    let v = gauge.at(i, j) + &term;
                    *gauge.at_mut(i, j) = v;
                }
            }
        }
    }
    Ok(gauge.truncate(order))
}

/// Builds the logarithmic lattice attached to a residue-stable admissible
/// pair over a form `Y`, through the truncated Birkhoff gauge
/// `Q = (I + P₁z + … + P_{d−1}z^{d−1})·z^κ` of a flag-respecting basis.
pub fn log_lattice_from_flag(
    a: &ConnectionGerm,
    pair: &AdmissiblePair,
    y: &Form,
) -> Result<Lattice> {
    if !a.is_logarithmic() {
        return Err(Error::InvalidInput("germ must be logarithmic".into()));
    }
    let residue = a.residue()?;
    for (k, step) in pair.flag().steps().iter().enumerate() {
        if !step.span_contains(&residue.mul(step)) {
            return Err(Error::FlagNotStable {
                component: k,
                detail: "flag component not invariant under the residue".into(),
            });
        }
    }
    let d = pair.delta();
    // flag-respecting basis lifted into the form Y
    let respecting = pair.flag().respecting_basis();
    let classes = y.fiber_classes()?;
    let x = classes.inverse()?.mul(&respecting);
    let c = y.basis().mul(&SeriesMatrix::from_mat(&x));
    // germ in the basis (c)
    let p_to_c = a.base_lattice().basis().inverse()?.mul(&c);
    let germ_c = a.gauge_transform(&p_to_c)?;
    // truncated Birkhoff gauge of that germ
    let trunc_order = d.max(1);
    let p_g = birkhoff_gauge(&germ_c, trunc_order + 2)?;
    let q = p_g.truncate_poly(trunc_order);
    let basis = c.mul(&q).mul(&SeriesMatrix::z_pow(pair.kappa()));
    Lattice::new(basis)
}

/// Componentwise invariance of a flag under an endomorphism.
pub fn is_stable_flag(f: &Mat, flag: &Flag) -> bool {
    flag.is_stable_under(f)
}

/// Subspaces spanned by Jordan-basis chain prefixes: `𝔫`-closed and
/// `𝔡`-compatible, so each is invariant. A sample of, not the whole,
/// invariant-subspace variety.
pub fn jordan_stable_subspaces(f: &Mat) -> Result<Vec<Mat>> {
    let e = eigen_data(f)?;
    let n = f.rows();
    // chain layout: offsets into the jordan basis
    let mut chains: Vec<(usize, usize)> = Vec::new(); // (offset, len)
    let mut off = 0;
    for (_, len) in &e.chains {
        chains.push((off, *len));
        off += len;
    }
    let mut depth = vec![0usize; chains.len()];
    let mut out = Vec::new();
    loop {
        // build subspace from current depths
        let mut cols: Vec<Mat> = Vec::new();
        for (ci, &(o, _)) in chains.iter().enumerate() {
            for k in 0..depth[ci] {
                cols.push(e.jordan_basis.col(o + k));
            }
        }
        let sub = if cols.is_empty() {
            Mat::zero(n, 0)
        } else {
            Mat::from_cols(cols).col_space_basis()
        };
        out.push(sub);
        // bump multi-index
        let mut i = 0;
        loop {
            if i == chains.len() {
                // dedupe by span and return
                let mut uniq: Vec<Mat> = Vec::new();
                for s in out {
                    if !uniq.iter().any(|u| u.span_eq(&s)) {
                        uniq.push(s);
                    }
                }
                uniq.sort_by_key(|s| s.cols());
                return Ok(uniq);
            }
            if depth[i] < chains[i].1 {
                depth[i] += 1;
                break;
            }
            depth[i] = 0;
            i += 1;
        }
        if out.len() > 4096 {
            return Err(Error::CombinatorialBlowup(
                "too many jordan-derived subspaces".into(),
            ));
        }
    }
}

/// Stable flags assembled from Jordan-derived subspaces, filtered by
/// signature. A sample of the stable-flag variety.
pub fn jordan_stable_flags(f: &Mat, signature: &[usize]) -> Result<Vec<Flag>> {
    let n = f.rows();
    if signature.iter().sum::<usize>() != n {
        return Err(Error::SignatureMismatch("signature must sum to the dimension".into()));
    }
    let subs = jordan_stable_subspaces(f)?;
    let mut dims_wanted = Vec::new();
    let mut acc = 0;
    for s in signature {
        acc += s;
        dims_wanted.push(acc);
    }
    let mut flags = Vec::new();
    let mut stack: Vec<Vec<Mat>> = vec![vec![]];
    while let Some(chain) = stack.pop() {
        let level = chain.len();
        if level == dims_wanted.len() {
            if let Ok(fl) = Flag::from_steps(n, chain) {
                if !flags.iter().any(|g: &Flag| g.eq_flag(&fl)) {
                    flags.push(fl);
                }
            }
            continue;
        }
        for cand in &subs {
            if cand.cols() != dims_wanted[level] {
                continue;
            }
            if let Some(prev) = chain.last() {
                if !cand.span_contains(prev) {
                    continue;
                }
            }
            let mut next = chain.clone();
            next.push(cand.clone());
            stack.push(next);
        }
        if flags.len() > 4096 {
            return Err(Error::CombinatorialBlowup("too many stable flags".into()));
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::relative_flag;
    use crate::scalar::q;

    fn zs(k: i64) -> LaurentSeries {
        LaurentSeries::monomial(GaussianRational::one(), k)
    }

    #[test]
    fn gauge_identity_and_composition() {
        let mut m = SeriesMatrix::from_mat(&Mat::from_int_rows(&[&[0, 1], &[0, 0]]));
        *m.at_mut(1, 0) = zs(1);
        let a = ConnectionGerm::in_standard(m.truncate(12)).unwrap();
        let id = SeriesMatrix::identity(2);
        let same = a.gauge_transform(&id).unwrap();
        assert!(same.theta_matrix() == a.theta_matrix());
        // composition law (A_[P])_[Q] = A_[PQ]
        let mut p = SeriesMatrix::identity(2);
        *p.at_mut(0, 1) = zs(1);
        let mut qm = SeriesMatrix::identity(2);
        *qm.at_mut(1, 0) = LaurentSeries::poly(vec![q(0, 1), q(2, 1)]);
        let lhs = a.gauge_transform(&p).unwrap().gauge_transform(&qm).unwrap();
        let rhs = a.gauge_transform(&p.mul(&qm)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(lhs
                    .theta_matrix()
                    .at(i, j)
                    .decide_eq_to(rhs.theta_matrix().at(i, j), 8)
                    .unwrap());
            }
        }
    }

    #[test]
    fn scalar_gauge_example() {
        // a(z) = cz, P = 1 + cz: new matrix c²z²/(1+cz), valuation 2
        let c = q(3, 1);
        let a = ConnectionGerm::in_standard(SeriesMatrix::from_fn(1, 1, |_, _| {
            LaurentSeries::monomial(c.clone(), 1)
        }))
        .unwrap();
        let p = SeriesMatrix::from_fn(1, 1, |_, _| {
            LaurentSeries::poly(vec![GaussianRational::one(), c.clone()]).truncate(10)
        });
        let out = a.gauge_transform(&p).unwrap();
        let s = out.theta_matrix().at(0, 0);
        assert_eq!(s.valuation(), Some(2));
        assert_eq!(s.coeff(2).unwrap(), &c * &c);
    }

    #[test]
    fn zero_connection_shear() {
        // A = 0, P = z^κ: A_[P] = −κ constant diagonal
        let a = ConnectionGerm::in_standard(SeriesMatrix::zero(2, 2)).unwrap();
        let out = a.gauge_transform(&SeriesMatrix::z_pow(&[2, -1])).unwrap();
        let r = out.residue().unwrap();
        assert_eq!(r, Mat::from_int_rows(&[&[-2, 0], &[0, 1]]));
    }

    #[test]
    fn log_lattice_tests() {
        // diagonal residue diag(0, 1/2): the shift z^{(0,1)} stays logarithmic
        let a = ConnectionGerm::constant(&Mat::from_rows(vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(0, 1), q(1, 2)],
        ]));
        let m = Lattice::new(SeriesMatrix::z_pow(&[0, 1])).unwrap();
        let (ok, _) = is_logarithmic_lattice(&a, &m).unwrap();
        assert!(ok);
        // nilpotent residue J₂(0): shifting the first coordinate moves onto
        // the unstable line, and the off-diagonal term drops to a
        // second-order pole (valuation −1 in θ-form); the image line stays
        // logarithmic
        let b = ConnectionGerm::constant(&Mat::from_int_rows(&[&[0, 1], &[0, 0]]));
        let m10 = Lattice::new(SeriesMatrix::z_pow(&[1, 0])).unwrap();
        let (ok2, w) = is_logarithmic_lattice(&b, &m10).unwrap();
        assert!(!ok2);
        assert_eq!(w.matrix_valuation().unwrap(), -1);
        let (ok3, _) = is_logarithmic_lattice(&b, &m).unwrap();
        assert!(ok3);
    }

    #[test]
    fn adjacent_subspace_agrees_with_lattice_test() {
        // residue J₂(0): image line is stable, other lines are not
        let res = Mat::from_int_rows(&[&[0, 1], &[0, 0]]);
        let a = ConnectionGerm::constant(&res);
        let full = Mat::identity(2);
        let zero = Mat::zero(2, 0);
        assert!(adjacent_log_subspace_test(&a, &full).unwrap());
        assert!(adjacent_log_subspace_test(&a, &zero).unwrap());
        let image = Mat::from_int_rows(&[&[1], &[0]]);
        assert!(adjacent_log_subspace_test(&a, &image).unwrap());
        let other = Mat::from_int_rows(&[&[1], &[1]]);
        assert!(!adjacent_log_subspace_test(&a, &other).unwrap());
        // agreement with the direct lattice test over a small line sample
        let pool = [q(0, 1), q(1, 1), q(-1, 1), q(2, 1)];
        for num in &pool {
            for den in &pool {
                if num.is_zero() && den.is_zero() {
                    continue;
                }
                let line = Mat::from_rows(vec![vec![num.clone()], vec![den.clone()]]);
                let m = adjacent_lattice_from_subspace(a.base_lattice(), &line).unwrap();
                let (direct, _) = is_logarithmic_lattice(&a, &m).unwrap();
                assert_eq!(direct, adjacent_log_subspace_test(&a, &line).unwrap());
            }
        }
    }

    #[test]
    fn gantmacher_scalar_exponential() {
        // a = cz over A₀ = 0: P_k = c^k/k!
        let c = q(2, 1);
        let a = ConnectionGerm::in_standard(SeriesMatrix::from_fn(1, 1, |_, _| {
            LaurentSeries::monomial(c.clone(), 1)
        }))
        .unwrap();
        let g = birkhoff_gauge(&a, 13).unwrap();
        let mut fact = GaussianRational::one();
        for k in 1..13i64 {
            fact = &fact * &GaussianRational::from_int(k);
            let expect = &c.pow(k as u32) / &fact;
            assert_eq!(g.at(0, 0).coeff(k).unwrap(), expect);
        }
        // A_[P] is constant (zero) mod z^13
        let out = a.gauge_transform(&g).unwrap();
        assert!(out.theta_matrix().at(0, 0).decide_zero_to(12).unwrap());
    }

    #[test]
    fn gantmacher_matrix_case() {
        // A₀ = diag(0, 1/2), A₁ generic: A_[P] constant mod z^N
        let a0 = Mat::from_rows(vec![vec![q(0, 1), q(0, 1)], vec![q(0, 1), q(1, 2)]]);
        let a1 = Mat::from_int_rows(&[&[1, 2], &[3, 4]]);
        let mut m = SeriesMatrix::from_mat(&a0);
        for i in 0..2 {
            for j in 0..2 {
                let v = m.at(i, j) + &LaurentSeries::monomial(a1.at(i, j).clone(), 1);
                *m.at_mut(i, j) = v;
            }
        }
        let a = ConnectionGerm::in_standard(m.truncate(8)).unwrap();
        let g = birkhoff_gauge(&a, 8).unwrap();
        assert!(g.constant_term().unwrap().is_identity());
        let out = a.gauge_transform(&g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let diff = out.theta_matrix().at(i, j) - &SeriesMatrix::from_mat(&a0).at(i, j).clone();
                assert!(diff.decide_zero_to(7).unwrap(), "entry ({i},{j}) = {}", diff);
            }
        }
        // uniqueness with constant term I: applying the recursion to the
        // already-constant germ returns the identity gauge
        let constant = ConnectionGerm::constant(&a0);
        let g2 = birkhoff_gauge(&constant, 8).unwrap();
        assert!(g2.constant_term().unwrap().is_identity());
        for i in 0..2 {
            for j in 0..2 {
                if i != j {
                    assert!(g2.at(i, j).decide_zero_to(8).unwrap());
                }
            }
        }
    }

    #[test]
    fn gantmacher_resonant() {
        // eigenvalues 0 and 1 differ by an integer: resonance at k = 1
        let a0 = Mat::from_int_rows(&[&[0, 0], &[0, 1]]);
        let mut m = SeriesMatrix::from_mat(&a0);
        *m.at_mut(0, 1) = &m.at(0, 1).clone() + &zs(1);
        let a = ConnectionGerm::in_standard(m.truncate(6)).unwrap();
        assert!(matches!(birkhoff_gauge(&a, 6), Err(Error::ResonantResidue(_))));
    }

    #[test]
    fn coordinate_change_recursion() {
        // u = 1: identity; A₀ = 0: identity; A₀ = diag(1,2), u = 1+t: P̃₁ = A₀
        let a0 = Mat::from_int_rows(&[&[1, 0], &[0, 2]]);
        let u = LaurentSeries::poly(vec![q(1, 1), q(1, 1)]).truncate(8);
        let g = birkhoff_coordinate_change(&a0, &u, 8).unwrap();
        assert_eq!(g.coeff_matrix(1).unwrap(), a0);
        let g_id = birkhoff_coordinate_change(&a0, &LaurentSeries::one(), 8).unwrap();
        assert!(g_id.coeff_matrix(1).unwrap().is_zero());
        let g0 = birkhoff_coordinate_change(&Mat::zero(2, 2), &u, 8).unwrap();
        assert!(g0.coeff_matrix(1).unwrap().is_zero());
        // the gauge transforms A₀·u·dt/t into A₀·dt/t (mod t^6)
        let mut theta = SeriesMatrix::zero(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                *theta.at_mut(i, j) = &u * &SeriesMatrix::from_mat(&a0).at(i, j).clone();
            }
        }
        let germ = ConnectionGerm::in_standard(theta).unwrap();
        let out = germ.gauge_transform(&g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let target = SeriesMatrix::from_mat(&a0).at(i, j).clone();
                let diff = out.theta_matrix().at(i, j) - &target;
                assert!(diff.decide_zero_to(6).unwrap());
            }
        }
    }

    #[test]
    fn log_lattice_from_stable_flag() {
        // residue J₂(0), flag 0 ⊂ im(J) ⊂ all, κ = (0,1)
        let res = Mat::from_int_rows(&[&[0, 1], &[0, 0]]);
        let a = ConnectionGerm::constant(&res);
        let flag = Flag::from_steps(2, vec![Mat::from_int_rows(&[&[1], &[0]]), Mat::identity(2)])
            .unwrap();
        let pair = AdmissiblePair::new(flag, vec![0, 1]).unwrap();
        let y = Form::standard(2);
        let m = log_lattice_from_flag(&a, &pair, &y).unwrap();
        let (ok, _) = is_logarithmic_lattice(&a, &m).unwrap();
        assert!(ok);
        // round-trip: relative flag and divisors recover the pair
        let rt = relative_flag(a.base_lattice(), &m).unwrap();
        assert_eq!(rt.kappa(), pair.kappa());
        assert!(rt.flag().eq_flag(pair.flag()));
        // unstable flag rejected
        let bad_flag =
            Flag::from_steps(2, vec![Mat::from_int_rows(&[&[1], &[1]]), Mat::identity(2)]).unwrap();
        let bad_pair = AdmissiblePair::new(bad_flag, vec![0, 1]).unwrap();
        assert!(matches!(
            log_lattice_from_flag(&a, &bad_pair, &y),
            Err(Error::FlagNotStable { component: 0, .. })
        ));
        // trivial flag with κ = 0: the base (Deligne) lattice itself
        let triv = AdmissiblePair::new(Flag::trivial(2), vec![0, 0]).unwrap();
        let m0 = log_lattice_from_flag(&a, &triv, &y).unwrap();
        assert!(m0.equals(a.base_lattice()).unwrap());
    }

    #[test]
    fn stable_flag_enumeration() {
        // distinct diagonal: complete stable flags are the 3! coordinate flags
        let f = Mat::from_rows(vec![
            vec![q(1, 1), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(2, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(7, 2)],
        ]);
        let flags = jordan_stable_flags(&f, &[1, 1, 1]).unwrap();
        assert_eq!(flags.len(), 6);
        for fl in &flags {
            assert!(fl.is_stable_under(&f));
        }
        // identity: every flag stable, samples are coordinate-like
        let flags_id = jordan_stable_flags(&Mat::identity(2), &[1, 1]).unwrap();
        assert!(!flags_id.is_empty());
        // J₃(0): unique complete stable flag (the kernel chain)
        let j3 = Mat::from_int_rows(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let flags_j3 = jordan_stable_flags(&j3, &[1, 1, 1]).unwrap();
        assert_eq!(flags_j3.len(), 1);
        assert!(flags_j3[0].is_stable_under(&j3));
    }

    #[test]
    fn geodesic_convexity_of_log_lattices() {
        // two logarithmic lattices from stable pairs; every geodesic vertex
        // stays logarithmic
        let res = Mat::from_rows(vec![vec![q(0, 1), q(0, 1)], vec![q(0, 1), q(1, 2)]]);
        let a = ConnectionGerm::constant(&res);
        let y = Form::standard(2);
        let flag = Flag::coordinate(2, &[1, 1]);
        let p1 = AdmissiblePair::new(flag.clone(), vec![0, 2]).unwrap();
        let p2 = AdmissiblePair::new(flag, vec![-1, 1]).unwrap();
        let m1 = log_lattice_from_flag(&a, &p1, &y).unwrap();
        let m2 = log_lattice_from_flag(&a, &p2, &y).unwrap();
        let g = crate::building::geodesic(&m1, &m2).unwrap();
        for v in &g.vertices {
            let (ok, _) = is_logarithmic_lattice(&a, v).unwrap();
            assert!(ok, "geodesic vertex left the logarithmic set");
        }
    }

    #[test]
    fn deligne_lattice_uniqueness_among_small_shifts() {
        // trivial monodromy model: holomorphic germ (residue 0); only the
        // base lattice keeps the matrix holomorphic among small diagonal
        // modifications
        let mut m = SeriesMatrix::zero(2, 2);
        *m.at_mut(0, 1) = zs(1);
        *m.at_mut(1, 0) = zs(2);
        let a = ConnectionGerm::in_standard(m.truncate(10)).unwrap();
        assert!(a.theta_matrix().matrix_valuation().unwrap() >= 1);
        for k1 in -1..=1i64 {
            for k2 in -1..=1i64 {
                let cand = Lattice::new(SeriesMatrix::z_pow(&[k1, k2])).unwrap();
                let (_, witness) = is_logarithmic_lattice(&a, &cand).unwrap();
                let holomorphic = witness
                    .matrix_valuation()
                    .map(|v| v >= 1)
                    .unwrap_or(true);
                assert_eq!(holomorphic, k1 == 0 && k2 == 0, "shift ({k1},{k2})");
            }
        }
    }

    #[test]
    fn deligne_normalization_predicate() {
        let ok = ConnectionGerm::constant(&Mat::from_rows(vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(0, 1), q(1, 2)],
        ]));
        assert!(ok.is_deligne_normalized().unwrap());
        let bad = ConnectionGerm::constant(&Mat::from_int_rows(&[&[1, 0], &[0, 0]]));
        assert!(!bad.is_deligne_normalized().unwrap());
        let neg = ConnectionGerm::constant(&Mat::from_rows(vec![
            vec![q(-1, 2), q(0, 1)],
            vec![q(0, 1), q(0, 1)],
        ]));
        assert!(!neg.is_deligne_normalized().unwrap());
    }
}
