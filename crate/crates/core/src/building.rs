//! Geometry of the affine building: admissible pairs, geodesic paths and
//! elementary splittings, forms and the z-distance, apartments, and the
//! abacus combinatorics of twisted divisor sequences.

use crate::cmat::{Flag, Mat};
use crate::error::{Error, Result};
use crate::lattice::{smith_decomposition, Lattice};
use crate::smat::SeriesMatrix;

/// A flag together with an admissible integer sequence: constant on the flag
/// steps, strictly increasing across them, multiplicities matching the
/// signature.
#[derive(Clone, Debug)]
pub struct AdmissiblePair {
    flag: Flag,
    kappa: Vec<i64>,
}

impl AdmissiblePair {
    pub fn new(flag: Flag, kappa: Vec<i64>) -> Result<AdmissiblePair> {
        if kappa.len() != flag.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "sequence length {} vs ambient dimension {}",
                kappa.len(),
                flag.ambient_dim()
            )));
        }
        let sig = flag.signature();
        let mut idx = 0;
        let mut prev: Option<i64> = None;
        for (step, &n_j) in sig.iter().enumerate() {
            let block = &kappa[idx..idx + n_j];
            if block.iter().any(|&k| k != block[0]) {
                return Err(Error::SignatureMismatch(format!(
                    "sequence not constant on flag step {step}"
                )));
            }
            if let Some(p) = prev {
                if block[0] <= p {
                    return Err(Error::SignatureMismatch(
                        "sequence must strictly increase across flag steps".into(),
                    ));
                }
            }
            prev = Some(block[0]);
            idx += n_j;
        }
        Ok(AdmissiblePair { flag, kappa })
    }

    pub fn flag(&self) -> &Flag {
        &self.flag
    }

    pub fn kappa(&self) -> &[i64] {
        &self.kappa
    }

    /// `Δκ = max κ − min κ`.
    pub fn delta(&self) -> i64 {
        delta(&self.kappa)
    }

    /// `i(κ) = Σ_j (max κ − κ_j)`.
    pub fn triviality_index(&self) -> i64 {
        triviality_index(&self.kappa)
    }
}

pub fn delta(kappa: &[i64]) -> i64 {
    let max = *kappa.iter().max().unwrap();
    let min = *kappa.iter().min().unwrap();
    max - min
}

pub fn triviality_index(kappa: &[i64]) -> i64 {
    let max = *kappa.iter().max().unwrap();
    kappa.iter().map(|k| max - k).sum()
}

/// The geodesic path between two lattice classes, as normalised
/// representatives `L_k = λ' + 𝔪^k λ`.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    /// Normalised vertices, `vertices[0]` homothetic to the start lattice.
    pub vertices: Vec<Lattice>,
    /// Elementary splitting: 0/1 sequences, `splitting[k-1]` is `T_k`.
    pub splitting: Vec<Vec<i64>>,
    /// Homothety shift applied to the endpoint to normalise `v_λ(M) = 0`.
    pub shift: i64,
}

impl GeodesicPath {
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Computes the geodesic from `[L]` to `[L']` (Prop. on minimal paths): the
/// vertices are `λ' + 𝔪^k λ`, realized on a common Smith basis.
pub fn geodesic(l: &Lattice, lp: &Lattice) -> Result<GeodesicPath> {
    let v = l.v_of(lp)?;
    let m = lp.shift(-v);
    let s = smith_decomposition(l, &m)?;
    debug_assert_eq!(s.kappa[0], 0);
    let d = s.distance();
    let mut vertices = Vec::with_capacity(d as usize + 1);
    for k in 0..=d {
        let capped: Vec<i64> = s.kappa.iter().map(|&ki| ki.min(k)).collect();
        let basis = s.smith_basis.mul(&SeriesMatrix::z_pow(&capped));
        vertices.push(Lattice::new(basis)?);
    }
    let splitting = elementary_splitting(&s.kappa)?;
    Ok(GeodesicPath { vertices, splitting, shift: v })
}

/// Elementary splitting `κ = T_1 + … + T_d` of a normalized nondecreasing
/// sequence: `T_k` is the 0/1 indicator of `κ_i ≥ k`.
pub fn elementary_splitting(kappa: &[i64]) -> Result<Vec<Vec<i64>>> {
    if kappa.iter().min() != Some(&0) {
        return Err(Error::NotNormalized(format!(
            "sequence {kappa:?} must have minimum 0"
        )));
    }
    if kappa.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::NotNormalized(format!(
            "sequence {kappa:?} must be nondecreasing"
        )));
    }
    let d = *kappa.iter().max().unwrap();
    let mut out = Vec::with_capacity(d as usize);
    for k in 1..=d {
        out.push(kappa.iter().map(|&ki| i64::from(ki >= k)).collect());
    }
    Ok(out)
}

/// A form in a lattice: the constant-span of an `h`-basis.
#[derive(Clone, Debug)]
pub struct Form {
    lattice: Lattice,
    basis: SeriesMatrix,
}

impl Form {
    /// Builds a form from a basis matrix; the lattice is its `h`-span.
    pub fn from_basis(basis: SeriesMatrix) -> Result<Form> {
        let lattice = Lattice::new(basis.clone())?;
        Ok(Form { lattice, basis })
    }

    /// A form inside a given lattice; the basis must span that lattice.
    pub fn in_lattice(lattice: &Lattice, basis: SeriesMatrix) -> Result<Form> {
        let g = lattice.basis().inverse()?.mul(&basis);
        if !g.is_lattice_gauge()? {
            return Err(Error::InvalidInput(
                "form basis does not span the ambient lattice".into(),
            ));
        }
        Ok(Form { lattice: lattice.clone(), basis })
    }

    pub fn standard(n: usize) -> Form {
        Form { lattice: Lattice::standard(n), basis: SeriesMatrix::identity(n) }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn basis(&self) -> &SeriesMatrix {
        &self.basis
    }

    /// Classes of the form basis in `λ/𝔪λ`, in the coordinates of the
    /// lattice's own basis. Always invertible.
    pub fn fiber_classes(&self) -> Result<Mat> {
        let g = self.lattice.basis().inverse()?.mul(&self.basis);
        g.constant_term()
    }

    /// The unique lattice `Ψ_Y(F, κ) = ⊕ z^{k_i}·C·f_i` over a basis `(f)`
    /// of the form respecting the flag.
    pub fn lift_pair(&self, pair: &AdmissiblePair) -> Result<Lattice> {
        if pair.flag().ambient_dim() != self.lattice.dim() {
            return Err(Error::DimensionMismatch("flag lives in the wrong fiber".into()));
        }
        let respecting = pair.flag().respecting_basis();
        let classes = self.fiber_classes()?;
        let x = classes.inverse()?.mul(&respecting);
        let lifted = self.basis.mul(&SeriesMatrix::from_mat(&x));
        Lattice::new(lifted.mul(&SeriesMatrix::z_pow(pair.kappa())))
    }

    /// z-distance between two forms: `min(deg P, deg P^{-1})` over the gauge
    /// between bases; `None` encodes `∞` (gauge not polynomial either way).
    pub fn z_distance(&self, other: &Form) -> Result<Option<i64>> {
        let p = self.basis.inverse()?.mul(&other.basis);
        let pinv = other.basis.inverse()?.mul(&self.basis);
        let deg = |m: &SeriesMatrix| -> Option<i64> {
            if !m.is_exact() {
                return None;
            }
            let mut d = 0;
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    if let Some(t) = m.at(i, j).top_degree() {
                        d = d.max(t);
                    }
                }
            }
            Some(d)
        };
        Ok(match (deg(&p), deg(&pinv)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        })
    }
}

/// A Smith form for `M` at z-distance at most `d − 1` from `Y`, obtained by
/// truncating the gauge from `Y` to a Smith form at degree `d − 1`.
pub fn truncated_smith_form(y: &Form, m: &Lattice) -> Result<Form> {
    let lam = y.lattice();
    let s = smith_decomposition(lam, m)?;
    let d = s.distance();
    if d == 0 {
        return Ok(y.clone());
    }
    if let Some(p) = y.basis().precision() {
        if p < d {
            return Err(Error::PrecisionExhausted(format!(
                "need precision {d} to truncate the Smith gauge, have {p}"
            )));
        }
    }
    let gauge = y.basis().inverse()?.mul(&s.smith_basis);
    let truncated = gauge.truncate_poly(d);
    let new_basis = y.basis().mul(&truncated);
    Form::in_lattice(lam, new_basis)
}

/// One abacus diagram: a choice of box rows per column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbacusDiagram {
    /// For each column (starting with the fixed first column), the set of
    /// occupied rows.
    pub columns: Vec<Vec<usize>>,
    /// Row counts: the twisted sequence `w(κ)` read off the diagram.
    pub row_counts: Vec<i64>,
    /// `Δ` of the row counts.
    pub delta: i64,
    /// `i` of the row counts.
    pub index: i64,
}

#[derive(Clone, Debug)]
pub struct AbacusReport {
    pub diagrams: Vec<AbacusDiagram>,
    pub delta_kappa: i64,
    pub index_kappa: i64,
}

/// Enumerates the abacus of `κ`: all diagrams obtained from the Young
/// diagram of `κ` by moving boxes vertically within their column, the first
/// column kept fixed. Diagrams are produced in lexicographic order of box
/// positions; `dedupe_rows` collapses diagrams sharing a row-count sequence.
pub fn abacus(kappa: &[i64], dedupe_rows: bool, limit: usize) -> Result<AbacusReport> {
    abacus_with(kappa, dedupe_rows, false, limit)
}

/// Abacus enumeration with a movable first column. The fixed-column set is
/// what the twisted-divisor correspondence matches; moving the first column
/// as well enumerates the full orbit.
pub fn abacus_with(
    kappa: &[i64],
    dedupe_rows: bool,
    move_first: bool,
    limit: usize,
) -> Result<AbacusReport> {
    if kappa.iter().min() != Some(&0) {
        return Err(Error::NotNormalized(format!(
            "sequence {kappa:?} must have minimum 0"
        )));
    }
    let n = kappa.len();
    let mut desc: Vec<i64> = kappa.to_vec();
    desc.sort_unstable_by(|a, b| b.cmp(a));
    let d = desc[0];
    let col_sizes: Vec<usize> = (1..=d)
        .map(|i| desc.iter().filter(|&&r| r >= i).count())
        .collect();
    // enumeration size check: product of per-column binomials
    let mut count: u128 = 1;
    for (i, &b) in col_sizes.iter().enumerate() {
        if i == 0 && !move_first {
            continue;
        }
        count = count.saturating_mul(binomial(n, b));
        if count > limit as u128 {
            return Err(Error::CombinatorialBlowup(format!(
                "abacus of {kappa:?} has more than {limit} diagrams"
            )));
        }
    }
    let mut diagrams = Vec::new();
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    enumerate_columns(n, &col_sizes, 0, move_first, &mut chosen, &mut diagrams);
    if dedupe_rows {
        let mut seen: Vec<Vec<i64>> = Vec::new();
        diagrams.retain(|dg| {
            if seen.contains(&dg.row_counts) {
                false
            } else {
                seen.push(dg.row_counts.clone());
                true
            }
        });
    }
    Ok(AbacusReport {
        diagrams,
        delta_kappa: delta(kappa),
        index_kappa: triviality_index(kappa),
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn enumerate_columns(
    n: usize,
    col_sizes: &[usize],
    col: usize,
    move_first: bool,
    chosen: &mut Vec<Vec<usize>>,
    out: &mut Vec<AbacusDiagram>,
) {
    if col == col_sizes.len() {
        let mut row_counts = vec![0i64; n];
        for c in chosen.iter() {
            for &r in c {
                row_counts[r] += 1;
            }
        }
        let max = *row_counts.iter().max().unwrap_or(&0);
        let min = *row_counts.iter().min().unwrap_or(&0);
        let index = row_counts.iter().map(|t| max - t).sum();
        out.push(AbacusDiagram {
            columns: chosen.clone(),
            row_counts,
            delta: max - min,
            index,
        });
        return;
    }
    let b = col_sizes[col];
    if col == 0 && !move_first {
        // first column fixed at the top rows
        chosen.push((0..b).collect());
        enumerate_columns(n, col_sizes, col + 1, move_first, chosen, out);
        chosen.pop();
        return;
    }
    // all b-subsets of 0..n in lexicographic order
    let mut subset: Vec<usize> = (0..b).collect();
    loop {
        chosen.push(subset.clone());
        enumerate_columns(n, col_sizes, col + 1, move_first, chosen, out);
        chosen.pop();
        // next combination
        let mut i = b;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if subset[i] != i + n - b {
                break;
            }
            if i == 0 {
                return;
            }
        }
        subset[i] += 1;
        for j in i + 1..b {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// A frame: `n` independent `K`-lines, spanning an apartment.
#[derive(Clone, Debug)]
pub struct Frame {
    /// Spanning vector of each line, as an `n×1` series matrix.
    pub lines: Vec<SeriesMatrix>,
}

impl Frame {
    pub fn from_basis(m: &SeriesMatrix) -> Frame {
        Frame { lines: (0..m.cols()).map(|j| m.col(j)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.lines.len()
    }

    /// The largest sublattice of `λ` lying in the apartment:
    /// `λ_Φ = ⊕ (λ ∩ d_i)`.
    pub fn projection(&self, lam: &Lattice) -> Result<Lattice> {
        let n = self.dim();
        let mut cols = SeriesMatrix::zero(lam.dim(), n);
        for (j, u) in self.lines.iter().enumerate() {
            let v = lam.v_of_vector(u)?;
            let g = SeriesMatrix::from_fn(lam.dim(), 1, |i, _| u.at(i, 0).shift(v));
            for i in 0..lam.dim() {
                *cols.at_mut(i, j) = g.at(i, 0).clone();
            }
        }
        Lattice::new(cols)
    }

    /// Membership of `λ` in the apartment: `λ = ⊕ (λ ∩ d_i)`.
    pub fn contains_lattice(&self, lam: &Lattice) -> Result<bool> {
        let proj = self.projection(lam)?;
        lam.equals(&proj)
    }
}
