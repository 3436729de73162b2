//! Exact eigen data over `Q(i)`: characteristic polynomial, its roots in
//! `Q(i)` when it splits, Jordan chains, and the additive Jordan
//! decomposition of a constant matrix.
//!
//! Root finding is by the Gaussian-integer rational-root theorem: after
//! clearing denominators the monic polynomial has `Z[i]` coefficients, so
//! every `Q(i)` root is a Gaussian-integer divisor of the constant term (up
//! to units). The norm of the constant term is factored by trial division
//! plus Pollard rho; inputs whose norms resist that are outside desk scale
//! and are reported as such rather than guessed at.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::cmat::Mat;
use crate::error::{Error, Result};
use crate::scalar::GaussianRational;

/// Monic characteristic polynomial of a square matrix; `coeffs[k]` is the
/// coefficient of `X^k`. Computed by the Faddeev-LeVerrier recurrence.
pub fn charpoly(a: &Mat) -> Vec<GaussianRational> {
    let n = a.rows();
    assert!(a.cols() == n);
    let mut coeffs = vec![GaussianRational::zero(); n + 1];
    coeffs[n] = GaussianRational::one();
    let mut b = Mat::identity(n);
    for k in 1..=n {
        let ab = a.mul(&b);
        let c = -(&ab.trace() * &GaussianRational::from_ratio(1, k as i64));
        coeffs[n - k] = c.clone();
        b = ab;
        for i in 0..n {
            *b.at_mut(i, i) += &c;
        }
    }
    coeffs
}

/// Evaluates a polynomial (coeffs[k]·X^k) at a point.
pub fn poly_eval(coeffs: &[GaussianRational], x: &GaussianRational) -> GaussianRational {
    let mut acc = GaussianRational::zero();
    for c in coeffs.iter().rev() {
        acc = &acc * x + c;
    }
    acc
}

// ---- Gaussian integers, internal helpers for root finding ----

#[derive(Clone, PartialEq, Eq, Debug)]
struct Gi {
    re: BigInt,
    im: BigInt,
}

impl Gi {
    fn new(re: BigInt, im: BigInt) -> Self {
        Gi { re, im }
    }
    fn one() -> Self {
        Gi::new(BigInt::one(), BigInt::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }
    fn mul(&self, o: &Gi) -> Gi {
        Gi::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    fn sub(&self, o: &Gi) -> Gi {
        Gi::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn conj(&self) -> Gi {
        Gi::new(self.re.clone(), -self.im.clone())
    }
    /// Euclidean division with nearest rounding.
    fn divmod(&self, d: &Gi) -> (Gi, Gi) {
        let n = d.norm();
        let num = self.mul(&d.conj());
        let round_div = |a: &BigInt, b: &BigInt| -> BigInt {
            // nearest integer to a/b for positive b
            let r = BigRational::new(a.clone(), b.clone());
            (r + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
        };
        let q = Gi::new(round_div(&num.re, &n), round_div(&num.im, &n));
        let r = self.sub(&d.mul(&q));
        (q, r)
    }
    fn divexact(&self, d: &Gi) -> Option<Gi> {
        let (q, r) = self.divmod(d);
        if r.is_zero() {
            Some(q)
        } else {
            None
        }
    }
    fn gcd(&self, o: &Gi) -> Gi {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        a
    }
    fn to_scalar(&self) -> GaussianRational {
        GaussianRational::new(
            BigRational::from(self.re.clone()),
            BigRational::from(self.im.clone()),
        )
    }
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    if let Some(prod) = a.checked_mul(b) {
        return prod % m;
    }
    let mut result = 0u128;
    let mut a = a % m;
    let mut b = b;
    while b > 0 {
        if b & 1 == 1 {
            result = (result + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    result
}

fn powmod(mut base: u128, mut exp: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime_u128(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn pollard_rho(n: u128) -> Option<u128> {
    if n % 2 == 0 {
        return Some(2);
    }
    let mut c = 1u128;
    while c < 64 {
        let f = |v: u128| (mulmod(v, v, n) + c) % n;
        let mut x = 2u128;
        let mut y = 2u128;
        let mut d = 1u128;
        let mut steps = 0u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            let diff = if x > y { x - y } else { y - x };
            d = gcd_u128(diff, n);
            steps += 1;
            if steps > 1 << 22 {
                break;
            }
        }
        if d != 1 && d != n {
            return Some(d);
        }
        c += 1;
    }
    None
}

/// Prime factorization of a positive integer at desk scale.
fn factor_u128(mut n: u128) -> Result<Vec<(u128, u32)>> {
    let mut out: Vec<(u128, u32)> = Vec::new();
    fn push(p: u128, out: &mut Vec<(u128, u32)>) {
        if let Some(e) = out.iter_mut().find(|(q, _)| *q == p) {
            e.1 += 1;
        } else {
            out.push((p, 1));
        }
    }
    for p in [2u128, 3, 5, 7, 11, 13] {
        while n % p == 0 {
            push(p, &mut out);
            n /= p;
        }
    }
    let mut d = 17u128;
    while d * d <= n && d < 1 << 16 {
        while n % d == 0 {
            push(d, &mut out);
            n /= d;
        }
        d += 2;
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u128(m) {
            push(m, &mut out);
            continue;
        }
        let Some(f) = pollard_rho(m) else {
            return Err(Error::DeskScaleExceeded(format!(
                "cannot factor {m} while splitting a characteristic polynomial"
            )));
        };
        stack.push(f);
        stack.push(m / f);
    }
    out.sort();
    Ok(out)
}

/// A Gaussian prime above the rational prime `p ≡ 1 (mod 4)`.
fn split_prime(p: u128) -> Gi {
    // find x with x² ≡ -1 mod p via a quadratic non-residue
    let mut a = 2u128;
    let x = loop {
        let s = powmod(a, (p - 1) / 2, p);
        if s == p - 1 {
            break powmod(a, (p - 1) / 4, p);
        }
        a += 1;
    };
    let g = Gi::new(BigInt::from(p), BigInt::zero());
    let cand = Gi::new(BigInt::from(x), BigInt::one());
    g.gcd(&cand)
}

/// Divisors of `g` up to units.
fn gaussian_divisors(g: &Gi, limit: usize) -> Result<Vec<Gi>> {
    let norm = g.norm();
    let n_u: u128 = norm
        .to_u128()
        .ok_or_else(|| Error::DeskScaleExceeded("constant-term norm exceeds 128 bits".into()))?;
    let rational_factors = factor_u128(n_u)?;
    let mut primes: Vec<(Gi, u32)> = Vec::new();
    for (p, _) in &rational_factors {
        let gprimes: Vec<Gi> = if *p == 2 {
            vec![Gi::new(BigInt::one(), BigInt::one())]
        } else if p % 4 == 3 {
            vec![Gi::new(BigInt::from(*p), BigInt::zero())]
        } else {
            let pi = split_prime(*p);
            vec![pi.clone(), pi.conj()]
        };
        for gp in gprimes {
            let mut e = 0u32;
            let mut cur = g.clone();
            while let Some(q) = cur.divexact(&gp) {
                e += 1;
                cur = q;
                if e > 512 {
                    break;
                }
            }
            if e > 0 {
                primes.push((gp, e));
            }
        }
    }
    let mut divisors = vec![Gi::one()];
    for (gp, e) in &primes {
        let mut next = Vec::with_capacity(divisors.len() * (*e as usize + 1));
        for d in &divisors {
            let mut cur = d.clone();
            next.push(cur.clone());
            for _ in 0..*e {
                cur = cur.mul(gp);
                next.push(cur.clone());
            }
        }
        divisors = next;
        if divisors.len() > limit {
            return Err(Error::DeskScaleExceeded(format!(
                "more than {limit} divisor candidates for eigenvalues"
            )));
        }
    }
    Ok(divisors)
}

/// All roots of a monic polynomial over `Q(i)` that lie in `Q(i)`, with
/// multiplicities. Errs with `CharPolyDoesNotSplit` when a nontrivial factor
/// remains rootless.
pub fn split_roots(coeffs: &[GaussianRational]) -> Result<Vec<(GaussianRational, usize)>> {
    let n = coeffs.len() - 1;
    assert!(coeffs[n].is_one(), "polynomial must be monic");
    let mut work: Vec<GaussianRational> = coeffs.to_vec();
    let mut roots: Vec<(GaussianRational, usize)> = Vec::new();

    let mut zero_mult = 0;
    while work.len() > 1 && work[0].is_zero() {
        work.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((GaussianRational::zero(), zero_mult));
    }
    if work.len() == 1 {
        return Ok(roots);
    }

    // clear denominators: with Y = c·X, q(Y) = c^deg · p(Y/c) is monic over Z[i]
    let mut c = BigInt::one();
    for a in &work {
        c = num_integer::lcm(c.clone(), a.re.denom().clone());
        c = num_integer::lcm(c, a.im.denom().clone());
    }
    let cq = GaussianRational::new(BigRational::from(c.clone()), BigRational::zero());
    let deg = work.len() - 1;
    let q: Vec<GaussianRational> = work
        .iter()
        .enumerate()
        .map(|(k, a)| a * &cq.pow((deg - k) as u32))
        .collect();
    let g0 = Gi::new(q[0].re.to_integer(), q[0].im.to_integer());
    let divisors = gaussian_divisors(&g0, 200_000)?;
    let units = [
        Gi::one(),
        Gi::new(BigInt::zero(), BigInt::one()),
        Gi::new(-BigInt::one(), BigInt::zero()),
        Gi::new(BigInt::zero(), -BigInt::one()),
    ];
    let mut poly = q;
    let cinv = cq.inv().unwrap();
    for d in &divisors {
        for u in &units {
            if poly.len() == 1 {
                break;
            }
            let lam = d.mul(u).to_scalar();
            let mut mult = 0;
            while poly.len() > 1 && poly_eval(&poly, &lam).is_zero() {
                // synthetic division by (Y - lam)
                let mut next = vec![GaussianRational::zero(); poly.len() - 1];
                let mut carry = GaussianRational::zero();
                for k in (0..poly.len() - 1).rev() {
                    carry = &poly[k + 1] + &(&carry * &lam);
                    next[k] = carry.clone();
                }
                poly = next;
                mult += 1;
            }
            if mult > 0 {
                roots.push((&lam * &cinv, mult));
            }
        }
    }
    if poly.len() > 1 {
        return Err(Error::CharPolyDoesNotSplit(format!(
            "a degree-{} factor has no Q(i) roots",
            poly.len() - 1
        )));
    }
    Ok(roots)
}

/// Exact eigen data: eigenvalues with multiplicities, Jordan chains, a
/// Jordan basis, and the additive decomposition `A = 𝔡 + 𝔫`.
#[derive(Clone, Debug)]
pub struct EigenData {
    /// Distinct eigenvalues with algebraic multiplicities, sorted.
    pub eigenvalues: Vec<(GaussianRational, usize)>,
    /// Columns form the Jordan basis; chains laid out consecutively,
    /// lowest vector (the eigenvector) first.
    pub jordan_basis: Mat,
    /// For each chain: (index into `eigenvalues`, chain length).
    pub chains: Vec<(usize, usize)>,
    /// Semisimple part.
    pub semisimple: Mat,
    /// Nilpotent part `A - 𝔡`.
    pub nilpotent: Mat,
}

impl EigenData {
    pub fn is_semisimple(&self) -> bool {
        self.nilpotent.is_zero()
    }

    /// Geometric eigenspace of the `which`-th eigenvalue.
    pub fn eigenspace(&self, which: usize) -> Mat {
        let n = self.jordan_basis.rows();
        let mut cols = Vec::new();
        let mut offset = 0;
        for (ei, len) in &self.chains {
            if *ei == which {
                cols.push(self.jordan_basis.col(offset));
            }
            offset += len;
        }
        if cols.is_empty() {
            Mat::zero(n, 0)
        } else {
            Mat::from_cols(cols)
        }
    }

    /// The spectrum as rational integers, when it is one.
    pub fn integer_spectrum(&self) -> Option<Vec<(i64, usize)>> {
        self.eigenvalues
            .iter()
            .map(|(l, m)| l.as_integer().map(|v| (v, *m)))
            .collect()
    }
}

fn jordan_chains(a: &Mat, lam: &GaussianRational, mult: usize) -> Vec<Vec<Mat>> {
    let n = a.rows();
    let mut b = a.clone();
    for i in 0..n {
        *b.at_mut(i, i) -= lam;
    }
    let mut kernels: Vec<Mat> = vec![Mat::zero(n, 0)];
    let mut pw = Mat::identity(n);
    loop {
        pw = b.mul(&pw);
        let k = pw.kernel_basis().col_space_basis();
        let done = k.cols() == mult;
        kernels.push(k);
        if done {
            break;
        }
        assert!(kernels.len() <= n + 1, "kernel chain failed to stabilize");
    }
    let s = kernels.len() - 1;
    let mut chains: Vec<Vec<Mat>> = Vec::new();
    let mut carried: Vec<Mat> = Vec::new();
    for j in (1..=s).rev() {
        let lower = &kernels[j - 1];
        let mut span_basis = lower.clone();
        for c in &carried {
            span_basis = span_basis.hstack(c);
        }
        let mut span_basis = span_basis.col_space_basis();
        let kj = &kernels[j];
        let mut new_tops = Vec::new();
        for cidx in 0..kj.cols() {
            let v = kj.col(cidx);
            if !span_basis.span_contains(&v) {
                span_basis = span_basis.hstack(&v).col_space_basis();
                new_tops.push(v);
            }
        }
        let mut next_carried: Vec<Mat> = carried.iter().map(|t| b.mul(t)).collect();
        for t in new_tops {
            let mut chain = vec![t.clone()];
            let mut cur = t.clone();
            for _ in 1..j {
                cur = b.mul(&cur);
                chain.push(cur.clone());
            }
            chain.reverse();
            next_carried.push(b.mul(&t));
            chains.push(chain);
        }
        carried = next_carried;
    }
    chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    chains
}

fn eigen_data_uncached(a: &Mat) -> Result<EigenData> {
    let n = a.rows();
    assert!(a.cols() == n);
    let cp = charpoly(a);
    let mut roots = split_roots(&cp)?;
    let total: usize = roots.iter().map(|(_, m)| m).sum();
    if total != n {
        return Err(Error::CharPolyDoesNotSplit(format!(
            "only {total} of {n} eigenvalues lie in Q(i)"
        )));
    }
    roots.sort_by(|x, y| {
        (x.0.re.clone(), x.0.im.clone()).cmp(&(y.0.re.clone(), y.0.im.clone()))
    });
    let mut basis_cols: Vec<Mat> = Vec::new();
    let mut chains: Vec<(usize, usize)> = Vec::new();
    let mut diag: Vec<GaussianRational> = Vec::new();
    for (ei, (lam, mult)) in roots.iter().enumerate() {
        for chain in jordan_chains(a, lam, *mult) {
            chains.push((ei, chain.len()));
            for v in chain {
                basis_cols.push(v);
                diag.push(lam.clone());
            }
        }
    }
    let jordan_basis = Mat::from_cols(basis_cols);
    let pinv = jordan_basis
        .inverse()
        .map_err(|_| Error::CharPolyDoesNotSplit("jordan basis construction failed".into()))?;
    let semisimple = jordan_basis.mul(&Mat::diag(diag)).mul(&pinv);
    let nilpotent = a.sub(&semisimple);
    Ok(EigenData { eigenvalues: roots, jordan_basis, chains, semisimple, nilpotent })
}

static EIGEN_MEMO: OnceLock<Mutex<HashMap<Mat, Arc<EigenData>>>> = OnceLock::new();

/// Exact eigen data, memoized per matrix value. The memo is shared across
/// threads; entries are immutable once inserted.
pub fn eigen_data(a: &Mat) -> Result<Arc<EigenData>> {
    let memo = EIGEN_MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = memo.lock().unwrap().get(a) {
        return Ok(hit.clone());
    }
    let data = Arc::new(eigen_data_uncached(a)?);
    let mut guard = memo.lock().unwrap();
    if guard.len() > 4096 {
        guard.clear();
    }
    guard.insert(a.clone(), data.clone());
    Ok(data)
}
