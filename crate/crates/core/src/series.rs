//! Truncated formal Laurent series over the Gaussian rationals.
//!
//! A series is stored as a coefficient window starting at its valuation
//! offset together with a precision: the series is known modulo `z^prec`.
//! Exact series (Laurent polynomials) carry no precision bound. Arithmetic
//! propagates the weakest resulting precision; a series whose known
//! coefficients all vanish is *zero at precision*, which is distinct from the
//! exact zero. Questions that would need coefficients beyond the precision
//! surface as `Undecidable` or `PrecisionExhausted` errors, never as a
//! silent guess.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::GaussianRational;

/// Default relative precision used when inverting exact units.
pub const DEFAULT_REL_PREC: i64 = 32;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentSeries {
    /// Exponent of `coeffs[0]`.
    off: i64,
    /// Coefficient window; first and last entries are nonzero.
    coeffs: Vec<GaussianRational>,
    /// Known modulo `z^prec`; `None` means exact.
    prec: Option<i64>,
}

impl LaurentSeries {
    /// Builds a series from a coefficient window, normalizing the
    /// representation (trim zeros, clip at precision).
    pub fn new(off: i64, coeffs: Vec<GaussianRational>, prec: Option<i64>) -> Self {
        let mut s = LaurentSeries { off, coeffs, prec };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        if let Some(p) = self.prec {
            let len = self.coeffs.len() as i64;
            if self.off + len > p {
                let keep = (p - self.off).max(0) as usize;
                self.coeffs.truncate(keep);
            }
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.off += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.off = 0;
        }
    }

    pub fn zero() -> Self {
        LaurentSeries { off: 0, coeffs: vec![], prec: None }
    }

    /// The series indistinguishable from zero modulo `z^prec`.
    pub fn zero_at(prec: i64) -> Self {
        LaurentSeries { off: 0, coeffs: vec![], prec: Some(prec) }
    }

    pub fn one() -> Self {
        LaurentSeries::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        LaurentSeries::new(0, vec![c], None)
    }

    /// `c·z^k`.
    pub fn monomial(c: GaussianRational, k: i64) -> Self {
        LaurentSeries::new(k, vec![c], None)
    }

    /// Exact polynomial with `coeffs[j]` the coefficient of `z^j`.
    pub fn poly(coeffs: Vec<GaussianRational>) -> Self {
        LaurentSeries::new(0, coeffs, None)
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    pub fn precision(&self) -> Option<i64> {
        self.prec
    }

    /// True valuation, reported only when a nonzero coefficient is known.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.off)
        }
    }

    /// Lower bound on the valuation: the valuation itself, the precision for
    /// a zero-at-precision series, `None` for the exact zero (bound `+∞`).
    pub fn valuation_bound(&self) -> Option<i64> {
        if !self.coeffs.is_empty() {
            Some(self.off)
        } else {
            self.prec
        }
    }

    /// Largest exponent with a (known) nonzero coefficient.
    pub fn top_degree(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.off + self.coeffs.len() as i64 - 1)
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    /// No known nonzero coefficient (exact zero or zero at precision).
    pub fn is_zero_at_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `z^k`; `None` when `k` lies at or beyond the precision.
    pub fn coeff(&self, k: i64) -> Option<GaussianRational> {
        if let Some(p) = self.prec {
            if k >= p {
                return None;
            }
        }
        let idx = k - self.off;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            Some(GaussianRational::zero())
        } else {
            Some(self.coeffs[idx as usize].clone())
        }
    }

    /// Leading coefficient when the series is known nonzero.
    pub fn leading(&self) -> Option<&GaussianRational> {
        self.coeffs.first()
    }

    /// Decides `self ≡ 0 mod z^order`. Errs when the answer would need
    /// coefficients beyond the precision.
    pub fn decide_zero_to(&self, order: i64) -> Result<bool> {
        if let Some(v) = self.valuation() {
            if v < order {
                return Ok(false);
            }
        }
        match self.prec {
            None => Ok(true),
            Some(p) if p >= order => Ok(true),
            Some(p) => Err(Error::Undecidable(format!(
                "zero test to order {order} with precision {p}"
            ))),
        }
    }

    /// Decides equality modulo `z^order`.
    pub fn decide_eq_to(&self, other: &LaurentSeries, order: i64) -> Result<bool> {
        (self - other).decide_zero_to(order)
    }

    /// Equality of all coefficients below the common precision. Total, but
    /// only meaningful when the caller knows the common precision suffices.
    pub fn eq_at_common_precision(&self, other: &LaurentSeries) -> bool {
        let d = self - other;
        d.coeffs.is_empty()
    }

    pub fn shift(&self, k: i64) -> LaurentSeries {
        LaurentSeries {
            off: self.off + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|p| p + k),
        }
    }

    pub fn truncate(&self, order: i64) -> LaurentSeries {
        let prec = Some(match self.prec {
            None => order,
            Some(p) => p.min(order),
        });
        LaurentSeries::new(self.off, self.coeffs.clone(), prec)
    }

    /// Keeps only exponents `< order` but treats the result as exact: the
    /// literal truncated polynomial.
    pub fn truncate_poly(&self, order: i64) -> LaurentSeries {
        let keep = ((order - self.off).max(0) as usize).min(self.coeffs.len());
        LaurentSeries::new(self.off, self.coeffs[..keep].to_vec(), None)
    }

    pub fn scale(&self, c: &GaussianRational) -> LaurentSeries {
        if c.is_zero() {
            return match self.prec {
                None => LaurentSeries::zero(),
                Some(p) => LaurentSeries::zero_at(p),
            };
        }
        LaurentSeries::new(
            self.off,
            self.coeffs.iter().map(|a| a * c).collect(),
            self.prec,
        )
    }

    /// `z·d/dz`.
    pub fn theta(&self) -> LaurentSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * &GaussianRational::from_int(self.off + j as i64))
            .collect();
        LaurentSeries::new(self.off, coeffs, self.prec)
    }

    /// Multiplicative inverse. The operand must be a unit: its leading
    /// coefficient must be visible at the current precision.
    pub fn inv(&self) -> Result<LaurentSeries> {
        self.inv_rel(DEFAULT_REL_PREC)
    }

    /// Inverse with an explicit relative precision for exact operands.
    pub fn inv_rel(&self, rel: i64) -> Result<LaurentSeries> {
        if self.coeffs.is_empty() {
            return if self.prec.is_none() {
                Err(Error::NonUnit("inverse of exact zero".into()))
            } else {
                Err(Error::PrecisionExhausted(
                    "inverse of a series indistinguishable from zero".into(),
                ))
            };
        }
        let v = self.off;
        let c0 = &self.coeffs[0];
        let c0inv = c0.inv()?;
        if self.coeffs.len() == 1 {
            // Monomial: inverse is exact.
            return Ok(LaurentSeries::new(-v, vec![c0inv], self.prec.map(|p| p - 2 * v)));
        }
        let rel_out = match self.prec {
            Some(p) => p - v,
            None => rel,
        };
        // u = 1 + e, invert by the standard recurrence.
        let n = rel_out.max(1) as usize;
        let mut e = vec![GaussianRational::zero(); n];
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            if (j as i64) < rel_out {
                e[j] = c * &c0inv;
            }
        }
        let mut w = vec![GaussianRational::zero(); n];
        w[0] = GaussianRational::one();
        for k in 1..n {
            let mut acc = GaussianRational::zero();
            for j in 1..=k {
                if !e[j].is_zero() && !w[k - j].is_zero() {
                    acc += &(&e[j] * &w[k - j]);
                }
            }
            w[k] = -acc;
        }
        for wk in w.iter_mut() {
            *wk = &*wk * &c0inv;
        }
        Ok(LaurentSeries::new(-v, w, Some(-v + rel_out)))
    }

    /// Evaluates an exact Laurent polynomial at a point.
    pub fn evaluate(&self, x: &GaussianRational) -> Result<GaussianRational> {
        if !self.is_exact() {
            return Err(Error::InvalidInput(
                "only exact series can be evaluated at a point".into(),
            ));
        }
        if self.coeffs.is_empty() {
            return Ok(GaussianRational::zero());
        }
        if self.off < 0 && x.is_zero() {
            return Err(Error::NonUnit("evaluation of a pole at 0".into()));
        }
        // Horner on the polynomial part, then the power of x for the offset.
        let mut acc = GaussianRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * x + c;
        }
        let p = if self.off >= 0 {
            x.pow(self.off as u32)
        } else {
            x.inv()?.pow((-self.off) as u32)
        };
        Ok(&acc * &p)
    }

    /// Substitutes `z ← c·z` (unit scalar `c`).
    pub fn rescale_variable(&self, c: &GaussianRational) -> Result<LaurentSeries> {
        if c.is_zero() {
            return Err(Error::NonUnit("variable rescale by zero".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let k = self.off + j as i64;
                let p = if k >= 0 { c.pow(k as u32) } else { c.inv().unwrap().pow((-k) as u32) };
                a * &p
            })
            .collect();
        Ok(LaurentSeries::new(self.off, coeffs, self.prec))
    }

    /// Exponent/coefficient pairs of the known window.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &GaussianRational)> {
        self.coeffs.iter().enumerate().map(move |(j, c)| (self.off + j as i64, c))
    }
}

impl Add<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        let prec = match (self.prec, rhs.prec) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(p), None) | (None, Some(p)) => Some(p),
            (None, None) => None,
        };
        if self.coeffs.is_empty() && rhs.coeffs.is_empty() {
            return LaurentSeries { off: 0, coeffs: vec![], prec };
        }
        let off = match (self.valuation(), rhs.valuation()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!(),
        };
        let hi = self
            .top_degree()
            .unwrap_or(off)
            .max(rhs.top_degree().unwrap_or(off));
        let mut coeffs = vec![GaussianRational::zero(); (hi - off + 1) as usize];
        for (k, c) in self.terms() {
            coeffs[(k - off) as usize] += c;
        }
        for (k, c) in rhs.terms() {
            coeffs[(k - off) as usize] += c;
        }
        LaurentSeries::new(off, coeffs, prec)
    }
}

impl Sub<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        self + &(-rhs)
    }
}

impl Mul<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        // Precision of the product: min over the cross error terms.
        let mut prec: Option<i64> = None;
        let mut upd = |q: Option<i64>| {
            prec = match (prec, q) {
                (None, x) => x,
                (x, None) => x,
                (Some(a), Some(b)) => Some(a.min(b)),
            }
        };
        if let Some(pb) = rhs.prec {
            if let Some(va) = self.valuation() {
                upd(Some(va + pb));
            }
        }
        if let Some(pa) = self.prec {
            if let Some(vb) = rhs.valuation() {
                upd(Some(pa + vb));
            }
        }
        if let (Some(pa), Some(pb)) = (self.prec, rhs.prec) {
            upd(Some(pa + pb));
        }
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return match prec {
                None => LaurentSeries::zero(),
                Some(p) => LaurentSeries::zero_at(p),
            };
        }
        let off = self.off + rhs.off;
        let full = self.coeffs.len() + rhs.coeffs.len() - 1;
        let len = match prec {
            Some(p) => ((p - off).max(0) as usize).min(full),
            None => full,
        };
        let mut coeffs = vec![GaussianRational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            let jmax = (len - i).min(rhs.coeffs.len());
            for (j, b) in rhs.coeffs.iter().enumerate().take(jmax) {
                if !b.is_zero() {
                    coeffs[i + j] += &(a * b);
                }
            }
        }
        LaurentSeries::new(off, coeffs, prec)
    }
}

impl Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        LaurentSeries {
            off: self.off,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            prec: self.prec,
        }
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            write!(f, "0")?;
        } else {
            let mut first = true;
            for (k, c) in self.terms() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                match k {
                    0 => write!(f, "({c})")?,
                    1 => write!(f, "({c})z")?,
                    _ => write!(f, "({c})z^{k}")?,
                }
            }
            if first {
                write!(f, "0")?;
            }
        }
        if let Some(p) = self.prec {
            write!(f, " + O(z^{p})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn zpow(k: i64) -> LaurentSeries {
        LaurentSeries::monomial(GaussianRational::one(), k)
    }

    #[test]
    fn geometric_inverse() {
        // inv(1 + z mod z^4) = 1 - z + z^2 - z^3 mod z^4
        let s = LaurentSeries::poly(vec![q(1, 1), q(1, 1)]).truncate(4);
        let inv = s.inv().unwrap();
        let expect = LaurentSeries::poly(vec![q(1, 1), q(-1, 1), q(1, 1), q(-1, 1)]).truncate(4);
        assert_eq!(inv, expect);
        let prod = &s * &inv;
        assert!(prod.decide_eq_to(&LaurentSeries::one(), 4).unwrap());
    }

    #[test]
    fn valuation_offsets_cancel() {
        let a = zpow(-1);
        let b = zpow(1);
        assert_eq!(&a * &b, LaurentSeries::one());
    }

    #[test]
    fn zero_at_precision_is_not_exact_zero() {
        let z = LaurentSeries::zero_at(5);
        assert!(z.is_zero_at_precision());
        assert!(!z.is_exact_zero());
        assert!(z.valuation().is_none());
        assert_eq!(z.valuation_bound(), Some(5));
        // Deciding zero beyond the precision is refused.
        assert!(z.decide_zero_to(6).is_err());
        assert!(z.decide_zero_to(5).unwrap());
    }

    #[test]
    fn precision_tracks_through_mul() {
        // (z^-2 + ...) known mod z^3, times exact z: valuation shifts.
        let a = LaurentSeries::new(-2, vec![q(1, 1)], Some(3));
        let b = zpow(1);
        let p = &a * &b;
        assert_eq!(p.valuation(), Some(-1));
        assert_eq!(p.precision(), Some(4));
        // Multiplying two truncated series: min of cross terms.
        let c = LaurentSeries::poly(vec![q(1, 1), q(1, 1)]).truncate(4); // v=0, N=4
        let d = LaurentSeries::new(2, vec![q(1, 1)], Some(7)); // v=2, N=7
        let e = &c * &d;
        assert_eq!(e.precision(), Some(6)); // min(0+7, 2+4) = 6
    }

    #[test]
    fn inverse_of_monomial_is_exact() {
        let m = LaurentSeries::monomial(q(2, 3), -4);
        let i = m.inv().unwrap();
        assert!(i.is_exact());
        assert_eq!(&m * &i, LaurentSeries::one());
    }

    #[test]
    fn evaluate_poly() {
        let p = LaurentSeries::poly(vec![q(1, 1), q(0, 1), q(3, 1)]); // 1 + 3z^2
        assert_eq!(p.evaluate(&q(2, 1)).unwrap(), q(13, 1));
    }

    #[test]
    fn undecidable_propagates() {
        let a = LaurentSeries::one().truncate(2);
        let b = LaurentSeries::one();
        assert!(a.decide_eq_to(&b, 2).unwrap());
        assert!(a.decide_eq_to(&b, 3).is_err());
    }
}
