//! Exact symbolic arithmetic: sparse multivariate polynomials over the
//! rationals, polynomials in the differential operator `D = d/dt`, and
//! determinants of operator matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::model::{Param, SymbolicMatrix};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("matrix index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("permutation-sum determinant limited to dimension {cap}, got {n}")]
    DimensionCap { n: usize, cap: usize },
    #[error("parameter {0} has no image under the bijection")]
    UnmappedVar(String),
}

/// A polynomial variable with a canonical total order and a printable symbol.
pub trait Var: Clone + Ord + Eq + std::hash::Hash + fmt::Debug {
    fn symbol(&self) -> String;
}

/// Power product of variables; factors are sorted by the variable order and
/// exponents are nonzero.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial<V: Var> {
    factors: Vec<(V, u32)>,
}

impl<V: Var> Monomial<V> {
    pub fn one() -> Self {
        Monomial {
            factors: Vec::new(),
        }
    }

    pub fn var(v: V) -> Self {
        Monomial {
            factors: vec![(v, 1)],
        }
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut map: BTreeMap<V, u32> = BTreeMap::new();
        for (v, e) in powers {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Monomial {
            factors: map.into_iter().collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: &V) -> u32 {
        self.factors
            .iter()
            .find(|(w, _)| w == v)
            .map_or(0, |(_, e)| *e)
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<V, u32> = self.factors.iter().cloned().collect();
        for (v, e) in &other.factors {
            *map.entry(v.clone()).or_insert(0) += e;
        }
        Monomial {
            factors: map.into_iter().collect(),
        }
    }

    /// Componentwise division; `None` when some exponent would go negative.
    pub fn try_div(&self, other: &Self) -> Option<Self> {
        let mut map: BTreeMap<V, u32> = self.factors.iter().cloned().collect();
        for (v, e) in &other.factors {
            let have = map.get_mut(v)?;
            if *have < *e {
                return None;
            }
            *have -= *e;
            if *have == 0 {
                map.remove(v);
            }
        }
        Some(Monomial {
            factors: map.into_iter().collect(),
        })
    }

    pub fn lcm(&self, other: &Self) -> Self {
        let mut map: BTreeMap<V, u32> = self.factors.iter().cloned().collect();
        for (v, e) in &other.factors {
            let slot = map.entry(v.clone()).or_insert(0);
            *slot = (*slot).max(*e);
        }
        Monomial {
            factors: map.into_iter().collect(),
        }
    }

    pub fn is_coprime_with(&self, other: &Self) -> bool {
        self.factors.iter().all(|(v, _)| other.exponent(v) == 0)
    }
}

/// Graded reverse lexicographic order over the canonical variable order:
/// higher total degree first; on ties, the monomial with the smaller exponent
/// at the greatest differing variable is the larger one.
pub fn grevlex<V: Var>(a: &Monomial<V>, b: &Monomial<V>) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match a.degree().cmp(&b.degree()) {
        Ordering::Equal => {}
        ord => return ord,
    }
    let mut ia = a.factors.iter().rev();
    let mut ib = b.factors.iter().rev();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            // a ran out of high variables: its exponent there is 0, smaller,
            // so a is the larger monomial.
            (None, Some(_)) => return Ordering::Greater,
            (Some(_), None) => return Ordering::Less,
            (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                Ordering::Less => return Ordering::Greater, // b has the higher var
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match ea.cmp(eb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {}
                },
            },
        }
    }
}

impl<V: Var> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: Var> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        grevlex(self, other)
    }
}

/// Sparse multivariate polynomial with exact rational coefficients. Terms are
/// kept in canonical (grevlex) order with no zero coefficients, so equality
/// is representation equality.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MPoly<V: Var> {
    terms: BTreeMap<Monomial<V>, BigRational>,
}

impl<V: Var> MPoly<V> {
    pub fn zero() -> Self {
        MPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(Monomial::one(), q);
        }
        MPoly { terms }
    }

    pub fn from_int(k: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn var(v: V) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v), BigRational::one());
        MPoly { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial<V>, BigRational)>) -> Self {
        let mut p = MPoly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial<V>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Monomial::one()).is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
            || (self.terms.len() == 1 && self.terms.contains_key(&Monomial::one()))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in descending canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &BigRational)> {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, m: &Monomial<V>) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Leading term in the canonical order.
    pub fn leading(&self) -> Option<(&Monomial<V>, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn variables(&self) -> BTreeSet<V> {
        self.terms
            .keys()
            .flat_map(|m| m.factors.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>, q: &BigRational) -> Self {
        if q.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (mm.mul(m), c * q))
                .collect(),
        }
    }

    /// Exact division: `Some(q)` with `q * rhs == self`, or `None` when `rhs`
    /// does not divide exactly.
    pub fn exact_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        let (lt_m, lt_c) = rhs.leading().unwrap();
        let mut rem = self.clone();
        let mut quot = MPoly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let m = rm.try_div(lt_m)?;
            let c = rc / lt_c;
            let piece = rhs.mul_monomial(&m, &c);
            quot.add_term(m, c);
            rem -= piece;
        }
        Some(quot)
    }

    /// Substitute variables through `f`; collisions are impossible for a
    /// bijection but sums merge correctly regardless.
    pub fn map_vars<W: Var>(&self, f: impl Fn(&V) -> W) -> MPoly<W> {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let image = Monomial::from_powers(m.factors.iter().map(|(v, e)| (f(v), *e)));
            out.add_term(image, c.clone());
        }
        out
    }

    /// Like `map_vars`, failing on any variable without an image.
    pub fn try_map_vars<W: Var>(&self, f: impl Fn(&V) -> Option<W>) -> Result<MPoly<W>, PolyError> {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut powers = Vec::with_capacity(m.factors.len());
            for (v, e) in &m.factors {
                let w = f(v).ok_or_else(|| PolyError::UnmappedVar(v.symbol()))?;
                powers.push((w, *e));
            }
            out.add_term(Monomial::from_powers(powers), c.clone());
        }
        Ok(out)
    }

    pub fn eval(&self, assignment: &BTreeMap<V, BigRational>) -> BigRational {
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in &m.factors {
                let val = assignment
                    .get(v)
                    .unwrap_or_else(|| panic!("no value for {:?}", v));
                for _ in 0..*e {
                    term *= val;
                }
            }
            total += term;
        }
        total
    }

    pub fn partial_derivative(&self, v: &V) -> Self {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let lowered = Monomial::from_powers(
                m.factors
                    .iter()
                    .map(|(w, k)| (w.clone(), if w == v { k - 1 } else { *k })),
            );
            out.add_term(lowered, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }
}

impl<V: Var> Add for MPoly<V> {
    type Output = MPoly<V>;
    fn add(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<V: Var> AddAssign for MPoly<V> {
    fn add_assign(&mut self, rhs: Self) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl<V: Var> Sub for MPoly<V> {
    type Output = MPoly<V>;
    fn sub(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
        self
    }
}

impl<V: Var> SubAssign for MPoly<V> {
    fn sub_assign(&mut self, rhs: Self) {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
    }
}

impl<V: Var> Neg for MPoly<V> {
    type Output = MPoly<V>;
    fn neg(self) -> Self {
        MPoly {
            terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect(),
        }
    }
}

impl<V: Var> Mul for MPoly<V> {
    type Output = MPoly<V>;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<V: Var> Mul for &MPoly<V> {
    type Output = MPoly<V>;
    fn mul(self, rhs: &MPoly<V>) -> MPoly<V> {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl<V: Var> fmt::Display for MPoly<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str("-")?;
            } else {
                f.write_str("+")?;
            }
            let mut pieces: Vec<String> = Vec::new();
            if !abs.is_one() || m.is_one() {
                pieces.push(fmt_rational(&abs));
            }
            for (v, e) in m.factors() {
                if *e == 1 {
                    pieces.push(v.symbol());
                } else {
                    pieces.push(format!("{}^{}", v.symbol(), e));
                }
            }
            f.write_str(&pieces.join("*"))?;
        }
        Ok(())
    }
}

/// Polynomial in the differential operator `D` whose coefficients are
/// polynomials in the rate parameters. Coefficient `k` multiplies `D^k`; the
/// top coefficient is nonzero unless the polynomial is zero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OperatorPoly {
    coeffs: Vec<MPoly<Param>>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        OperatorPoly {
            coeffs: vec![MPoly::one()],
        }
    }

    /// The bare operator `D`.
    pub fn d() -> Self {
        OperatorPoly {
            coeffs: vec![MPoly::zero(), MPoly::one()],
        }
    }

    pub fn constant(p: MPoly<Param>) -> Self {
        OperatorPoly { coeffs: vec![p] }.trimmed()
    }

    /// `D + p`, the pervasive diagonal shape.
    pub fn d_plus(p: MPoly<Param>) -> Self {
        OperatorPoly {
            coeffs: vec![p, MPoly::one()],
        }
    }

    pub fn from_coeffs(coeffs: Vec<MPoly<Param>>) -> Self {
        OperatorPoly { coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(MPoly::is_zero) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in `D`; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `D^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> MPoly<Param> {
        self.coeffs.get(k).cloned().unwrap_or_else(MPoly::zero)
    }

    pub fn coeffs(&self) -> &[MPoly<Param>] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> Option<&MPoly<Param>> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff().is_some_and(MPoly::is_one)
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        OperatorPoly {
            coeffs: self.coeffs.iter().map(|c| c.scale(q)).collect(),
        }
        .trimmed()
    }

    pub fn map_params(&self, f: impl Fn(&Param) -> Param + Copy) -> Self {
        OperatorPoly {
            coeffs: self.coeffs.iter().map(|c| c.map_vars(f)).collect(),
        }
        .trimmed()
    }

    /// Exact division in the operator ring; `None` when not exact.
    pub fn exact_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        let mut rem = self.clone();
        let dr = rhs.degree().unwrap();
        let lead = rhs.leading_coeff().unwrap();
        let mut quot = vec![MPoly::zero(); self.coeffs.len().saturating_sub(dr)];
        while let Some(d) = rem.degree() {
            if d < dr {
                return None;
            }
            let q = rem.coeffs[d].exact_div(lead)?;
            let shift = d - dr;
            let mut piece = vec![MPoly::zero(); shift];
            piece.extend(rhs.coeffs.iter().map(|c| c * &q));
            rem = rem - OperatorPoly::from_coeffs(piece);
            quot[shift] = q;
        }
        Some(OperatorPoly::from_coeffs(quot))
    }
}

impl Add for OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: Self) -> Self {
        let mut coeffs = self.coeffs;
        if coeffs.len() < rhs.coeffs.len() {
            coeffs.resize(rhs.coeffs.len(), MPoly::zero());
        }
        for (k, c) in rhs.coeffs.into_iter().enumerate() {
            coeffs[k] += c;
        }
        OperatorPoly { coeffs }.trimmed()
    }
}

impl Sub for OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> Self {
        OperatorPoly {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: &OperatorPoly) -> OperatorPoly {
        if self.is_zero() || rhs.is_zero() {
            return OperatorPoly::zero();
        }
        let mut coeffs = vec![MPoly::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        OperatorPoly { coeffs }.trimmed()
    }
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut pieces = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let d = match k {
                0 => String::new(),
                1 => "D".to_string(),
                _ => format!("D^{k}"),
            };
            let piece = if d.is_empty() {
                format!("({c})")
            } else if c.is_one() {
                d
            } else {
                format!("({c}) {d}")
            };
            pieces.push(piece);
        }
        f.write_str(&pieces.join(" + "))
    }
}

/// Square matrix of operator polynomials.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OpMatrix {
    n: usize,
    entries: Vec<OperatorPoly>, // row-major
}

impl OpMatrix {
    pub fn from_entries(n: usize, entries: Vec<OperatorPoly>) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must be n*n");
        OpMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at row `r`, column `c` (1-based).
    pub fn entry(&self, r: usize, c: usize) -> &OperatorPoly {
        &self.entries[(r - 1) * self.n + (c - 1)]
    }

    /// `D I - A` for a state matrix A.
    pub fn d_identity_minus(a: &SymbolicMatrix) -> OpMatrix {
        let n = a.n();
        let mut entries = Vec::with_capacity(n * n);
        for r in 1..=n {
            for c in 1..=n {
                let neg = -a.entry(r, c).clone();
                let e = if r == c {
                    OperatorPoly::d_plus(neg)
                } else {
                    OperatorPoly::constant(neg)
                };
                entries.push(e);
            }
        }
        OpMatrix { n, entries }
    }

    /// `D I` scaled identity of dimension n.
    pub fn d_identity(n: usize) -> OpMatrix {
        let mut entries = vec![OperatorPoly::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = OperatorPoly::d();
        }
        OpMatrix { n, entries }
    }

    /// Matrix with row `r` and column `c` removed (1-based).
    pub fn minor(&self, r: usize, c: usize) -> Result<OpMatrix, PolyError> {
        if r < 1 || r > self.n || c < 1 || c > self.n {
            return Err(PolyError::IndexOutOfRange {
                row: r,
                col: c,
                n: self.n,
            });
        }
        let mut entries = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for rr in 1..=self.n {
            if rr == r {
                continue;
            }
            for cc in 1..=self.n {
                if cc == c {
                    continue;
                }
                entries.push(self.entry(rr, cc).clone());
            }
        }
        Ok(OpMatrix {
            n: self.n - 1,
            entries,
        })
    }

    pub fn transpose(&self) -> OpMatrix {
        let mut entries = Vec::with_capacity(self.n * self.n);
        for r in 1..=self.n {
            for c in 1..=self.n {
                entries.push(self.entry(c, r).clone());
            }
        }
        OpMatrix { n: self.n, entries }
    }

    /// Exact determinant by cofactor expansion along the sparsest row or
    /// column, memoized on the surviving (row set, column set) pair. The
    /// empty matrix has determinant 1.
    pub fn det(&self) -> OperatorPoly {
        assert!(self.n <= 32, "bitmask-based expansion capped at 32");
        let full: u64 = (1u64 << self.n) - 1;
        let mut memo: std::collections::HashMap<(u64, u64), OperatorPoly> =
            std::collections::HashMap::new();
        self.det_rec(full, full, &mut memo)
    }

    fn det_rec(
        &self,
        rows: u64,
        cols: u64,
        memo: &mut std::collections::HashMap<(u64, u64), OperatorPoly>,
    ) -> OperatorPoly {
        if rows == 0 {
            return OperatorPoly::one();
        }
        if let Some(hit) = memo.get(&(rows, cols)) {
            return hit.clone();
        }
        let active_rows: Vec<usize> = (0..self.n).filter(|i| rows >> i & 1 == 1).collect();
        let active_cols: Vec<usize> = (0..self.n).filter(|j| cols >> j & 1 == 1).collect();

        // Pick the line (row or column) with the fewest nonzero entries.
        let mut best: (bool, usize, usize) = (true, active_rows[0], usize::MAX);
        for &r in &active_rows {
            let nz = active_cols
                .iter()
                .filter(|&&c| !self.entry(r + 1, c + 1).is_zero())
                .count();
            if nz < best.2 {
                best = (true, r, nz);
            }
        }
        for &c in &active_cols {
            let nz = active_rows
                .iter()
                .filter(|&&r| !self.entry(r + 1, c + 1).is_zero())
                .count();
            if nz < best.2 {
                best = (false, c, nz);
            }
        }
        if best.2 == 0 {
            memo.insert((rows, cols), OperatorPoly::zero());
            return OperatorPoly::zero();
        }

        let mut acc = OperatorPoly::zero();
        let (along_row, line, _) = best;
        if along_row {
            let r = line;
            let ri = active_rows.iter().position(|&x| x == r).unwrap();
            for (ci, &c) in active_cols.iter().enumerate() {
                let e = self.entry(r + 1, c + 1);
                if e.is_zero() {
                    continue;
                }
                let sub = self.det_rec(rows & !(1 << r), cols & !(1 << c), memo);
                let signed = if (ri + ci) % 2 == 0 {
                    e * &sub
                } else {
                    -(e * &sub)
                };
                acc = acc + signed;
            }
        } else {
            let c = line;
            let ci = active_cols.iter().position(|&x| x == c).unwrap();
            for (ri, &r) in active_rows.iter().enumerate() {
                let e = self.entry(r + 1, c + 1);
                if e.is_zero() {
                    continue;
                }
                let sub = self.det_rec(rows & !(1 << r), cols & !(1 << c), memo);
                let signed = if (ri + ci) % 2 == 0 {
                    e * &sub
                } else {
                    -(e * &sub)
                };
                acc = acc + signed;
            }
        }
        memo.insert((rows, cols), acc.clone());
        acc
    }

    /// Testing oracle: the Leibniz permutation sum. Factorial cost, so the
    /// dimension is capped at 8.
    pub fn det_leibniz(&self) -> Result<OperatorPoly, PolyError> {
        const CAP: usize = 8;
        if self.n > CAP {
            return Err(PolyError::DimensionCap {
                n: self.n,
                cap: CAP,
            });
        }
        if self.n == 0 {
            return Ok(OperatorPoly::one());
        }
        let mut acc = OperatorPoly::zero();
        let mut perm: Vec<usize> = (0..self.n).collect();
        permute(&mut perm, 0, true, &mut |perm, even| {
            let mut prod = OperatorPoly::one();
            for (r, &c) in perm.iter().enumerate() {
                let e = self.entry(r + 1, c + 1);
                if e.is_zero() {
                    return;
                }
                prod = &prod * e;
            }
            acc = if even {
                std::mem::take(&mut acc) + prod
            } else {
                std::mem::take(&mut acc) - prod
            };
        });
        Ok(acc)
    }

    /// Fraction-free Bareiss elimination; agrees with `det` and serves as a
    /// second exact backend.
    pub fn det_bareiss(&self) -> OperatorPoly {
        let n = self.n;
        if n == 0 {
            return OperatorPoly::one();
        }
        let mut m: Vec<Vec<OperatorPoly>> = (1..=n)
            .map(|r| (1..=n).map(|c| self.entry(r, c).clone()).collect())
            .collect();
        let mut sign_flip = false;
        let mut prev = OperatorPoly::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        sign_flip = !sign_flip;
                    }
                    None => return OperatorPoly::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k];
                    let sub = &m[i][k] * &m[k][j];
                    m[i][j] = (num - sub)
                        .exact_div(&prev)
                        .expect("Bareiss division is exact");
                }
            }
            prev = m[k][k].clone();
        }
        let det = m[n - 1][n - 1].clone();
        if sign_flip {
            -det
        } else {
            det
        }
    }
}

/// Heap's algorithm with parity tracking.
fn permute(perm: &mut Vec<usize>, k: usize, even: bool, visit: &mut impl FnMut(&[usize], bool)) {
    let n = perm.len();
    if k == n {
        visit(perm, even);
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        let flipped = if i == k { even } else { !even };
        permute(perm, k + 1, flipped, visit);
        perm.swap(k, i);
    }
}
