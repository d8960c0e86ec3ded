//! Buchberger's algorithm under a block elimination order, used to find the
//! algebraic dependency relations satisfied by coefficient-map components.
//!
//! The variable universe splits into model parameters (the block to be
//! eliminated) and fresh coefficient symbols `c1..ck`. Monomials compare by
//! the parameter part first (grevlex), then the coefficient part (grevlex),
//! so basis elements free of parameters generate the elimination ideal.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::model::Param;
use crate::poly::{grevlex, MPoly, Monomial, Var};

/// Fresh symbol for the k-th coefficient-map component (1-based display).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct CoeffSym(pub usize);

impl Var for CoeffSym {
    fn symbol(&self) -> String {
        format!("c{}", self.0 + 1)
    }
}

impl fmt::Display for CoeffSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

/// Mixed variable: a coefficient symbol or a model parameter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum RelVar {
    Coeff(CoeffSym),
    Par(Param),
}

impl Var for RelVar {
    fn symbol(&self) -> String {
        match self {
            RelVar::Coeff(c) => c.symbol(),
            RelVar::Par(p) => p.symbol(),
        }
    }
}

fn is_param(v: &RelVar) -> bool {
    matches!(v, RelVar::Par(_))
}

/// Grevlex restricted to the factors selected by `pred`.
fn grevlex_filtered(
    a: &Monomial<RelVar>,
    b: &Monomial<RelVar>,
    pred: fn(&RelVar) -> bool,
) -> Ordering {
    let deg = |m: &Monomial<RelVar>| -> u32 {
        m.factors()
            .iter()
            .filter(|(v, _)| pred(v))
            .map(|(_, e)| e)
            .sum()
    };
    match deg(a).cmp(&deg(b)) {
        Ordering::Equal => {}
        ord => return ord,
    }
    let mut ia = a.factors().iter().rev().filter(|(v, _)| pred(v));
    let mut ib = b.factors().iter().rev().filter(|(v, _)| pred(v));
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Greater,
            (Some(_), None) => return Ordering::Less,
            (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                Ordering::Less => return Ordering::Greater,
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

/// Block elimination order: parameter block first, coefficient block second.
fn block_cmp(a: &Monomial<RelVar>, b: &Monomial<RelVar>) -> Ordering {
    grevlex_filtered(a, b, is_param).then_with(|| grevlex_filtered(a, b, |v| !is_param(v)))
}

/// Polynomial with terms sorted descending in the block order and a monic
/// leading coefficient (maintained by the algorithm).
#[derive(Clone, Debug, PartialEq, Eq)]
struct GPoly {
    terms: Vec<(Monomial<RelVar>, BigRational)>,
}

impl GPoly {
    fn from_mpoly(p: &MPoly<RelVar>) -> GPoly {
        let mut terms: Vec<(Monomial<RelVar>, BigRational)> =
            p.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
        terms.sort_by(|(a, _), (b, _)| block_cmp(b, a));
        GPoly { terms }
    }

    fn to_mpoly(&self) -> MPoly<RelVar> {
        MPoly::from_terms(self.terms.iter().cloned())
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lt(&self) -> &(Monomial<RelVar>, BigRational) {
        &self.terms[0]
    }

    fn make_monic(mut self) -> GPoly {
        if let Some((_, c)) = self.terms.first() {
            let inv = c.clone();
            if !inv.is_one() {
                for (_, coeff) in &mut self.terms {
                    *coeff /= &inv;
                }
            }
        }
        self
    }

    /// `self - coeff * x^shift * other`, merging the sorted term lists.
    fn sub_scaled(&self, shift: &Monomial<RelVar>, coeff: &BigRational, other: &GPoly) -> GPoly {
        let scaled: Vec<(Monomial<RelVar>, BigRational)> = other
            .terms
            .iter()
            .map(|(m, c)| (m.mul(shift), c * coeff))
            .collect();
        let mut out = Vec::with_capacity(self.terms.len() + scaled.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.terms.len() || j < scaled.len() {
            let take_left = match (self.terms.get(i), scaled.get(j)) {
                (Some((ma, _)), Some((mb, _))) => match block_cmp(ma, mb) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        let c = &self.terms[i].1 - &scaled[j].1;
                        if !c.is_zero() {
                            out.push((ma.clone(), c));
                        }
                        i += 1;
                        j += 1;
                        continue;
                    }
                },
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_left {
                out.push(self.terms[i].clone());
                i += 1;
            } else {
                let (m, c) = &scaled[j];
                out.push((m.clone(), -c.clone()));
                j += 1;
            }
        }
        GPoly { terms: out }
    }
}

/// Full normal form of `p` with respect to `basis` (monic divisors).
fn normal_form(mut p: GPoly, basis: &[GPoly], skip: Option<usize>) -> GPoly {
    let mut remainder: Vec<(Monomial<RelVar>, BigRational)> = Vec::new();
    'outer: while !p.is_zero() {
        let (m, c) = p.lt().clone();
        for (k, g) in basis.iter().enumerate() {
            if Some(k) == skip || g.is_zero() {
                continue;
            }
            if let Some(q) = m.try_div(&g.lt().0) {
                p = p.sub_scaled(&q, &c, g);
                continue 'outer;
            }
        }
        remainder.push((m, c));
        p.terms.remove(0);
    }
    GPoly { terms: remainder }
}

fn s_poly(f: &GPoly, g: &GPoly) -> GPoly {
    let lcm = f.lt().0.lcm(&g.lt().0);
    let mf = lcm.try_div(&f.lt().0).unwrap();
    let mg = lcm.try_div(&g.lt().0).unwrap();
    let one = BigRational::one();
    let left = GPoly {
        terms: f
            .terms
            .iter()
            .map(|(m, c)| (m.mul(&mf), c.clone()))
            .collect(),
    };
    left.sub_scaled(&mg, &one, g)
}

/// Reduced Groebner basis of the ideal generated by `gens` under the block
/// elimination order.
fn buchberger(gens: &[MPoly<RelVar>]) -> Vec<GPoly> {
    let mut basis: Vec<GPoly> = gens
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| GPoly::from_mpoly(p).make_monic())
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in 0..i {
            pairs.push((j, i));
        }
    }
    while !pairs.is_empty() {
        // Normal selection: smallest lcm first.
        let best = pairs
            .iter()
            .enumerate()
            .min_by(|(_, &(i, j)), (_, &(k, l))| {
                let lcm_a = basis[i].lt().0.lcm(&basis[j].lt().0);
                let lcm_b = basis[k].lt().0.lcm(&basis[l].lt().0);
                block_cmp(&lcm_a, &lcm_b)
            })
            .map(|(idx, _)| idx)
            .unwrap();
        let (i, j) = pairs.swap_remove(best);
        if basis[i].lt().0.is_coprime_with(&basis[j].lt().0) {
            continue;
        }
        let s = s_poly(&basis[i], &basis[j]);
        let r = normal_form(s, &basis, None);
        if !r.is_zero() {
            let r = r.make_monic();
            for k in 0..basis.len() {
                pairs.push((k, basis.len()));
            }
            basis.push(r);
        }
    }

    // Inter-reduce to the reduced basis.
    loop {
        let mut changed = false;
        for k in 0..basis.len() {
            let current = basis[k].clone();
            if current.is_zero() {
                continue;
            }
            let reduced = normal_form(current.clone(), &basis, Some(k));
            if reduced != current {
                basis[k] = reduced.make_monic();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    basis.retain(|g| !g.is_zero());
    basis.sort_by(|a, b| block_cmp(&a.lt().0, &b.lt().0));
    basis
}

/// Generators of the elimination ideal `<gens> ∩ Q[c1..ck]`: the reduced
/// Groebner basis elements free of parameters, normalized to primitive
/// integer coefficients with a positive leading coefficient and sorted
/// canonically.
pub fn elimination_ideal(gens: &[MPoly<RelVar>]) -> Vec<MPoly<CoeffSym>> {
    let basis = buchberger(gens);
    let mut out: Vec<MPoly<CoeffSym>> = Vec::new();
    for g in &basis {
        let p = g.to_mpoly();
        if p.variables().iter().any(is_param) {
            continue;
        }
        let lowered = p
            .try_map_vars(|v| match v {
                RelVar::Coeff(c) => Some(*c),
                RelVar::Par(_) => None,
            })
            .expect("parameter-free by construction");
        out.push(normalize_generator(lowered));
    }
    out.sort_by(|a, b| {
        let la = a
            .leading()
            .map(|(m, _)| m.clone())
            .unwrap_or_else(Monomial::one);
        let lb = b
            .leading()
            .map(|(m, _)| m.clone())
            .unwrap_or_else(Monomial::one);
        grevlex(&la, &lb).then_with(|| format!("{a}").cmp(&format!("{b}")))
    });
    out
}

/// Scale to primitive integer coefficients with positive leading sign.
fn normalize_generator(p: MPoly<CoeffSym>) -> MPoly<CoeffSym> {
    if p.is_zero() {
        return p;
    }
    let mut denom_lcm = BigInt::one();
    let mut numer_gcd = BigInt::zero();
    for (_, c) in p.terms() {
        denom_lcm = denom_lcm.lcm(c.denom());
        numer_gcd = numer_gcd.gcd(c.numer());
    }
    let mut scale = BigRational::new(denom_lcm, numer_gcd);
    if p.leading().is_some_and(|(_, c)| (c * &scale).is_negative()) {
        scale = -scale;
    }
    p.scale(&scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(k: usize) -> MPoly<RelVar> {
        MPoly::var(RelVar::Coeff(CoeffSym(k)))
    }

    fn par(p: Param) -> MPoly<RelVar> {
        MPoly::var(RelVar::Par(p))
    }

    #[test]
    fn eliminates_a_parametrized_parabola() {
        // c1 = t, c2 = t^2  =>  c1^2 - c2 = 0.
        let t = Param::Leak(1);
        let gens = vec![c(0) - par(t), c(1) - par(t).clone() * par(t)];
        let rels = elimination_ideal(&gens);
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].to_string(), "c1^2-c2");
    }

    #[test]
    fn independent_coordinates_have_no_relations() {
        // c1 = s, c2 = t: the image is the whole plane.
        let s = Param::Leak(1);
        let t = Param::Leak(2);
        let gens = vec![c(0) - par(s), c(1) - par(t)];
        assert!(elimination_ideal(&gens).is_empty());
    }

    #[test]
    fn symmetric_functions_relation() {
        // c1 = s + t, c2 = s t, c3 = s^2 + t^2  =>  c1^2 - 2 c2 - c3 = 0.
        let s = Param::Leak(1);
        let t = Param::Leak(2);
        let gens = vec![
            c(0) - (par(s) + par(t)),
            c(1) - par(s) * par(t),
            c(2) - (par(s) * par(s) + par(t) * par(t)),
        ];
        let rels = elimination_ideal(&gens);
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].to_string(), "c1^2-2*c2-c3");
    }

    /// Every relation vanishes identically after substituting the
    /// parametrization back in.
    #[test]
    fn relations_vanish_on_the_parametrization() {
        let s = Param::Leak(1);
        let t = Param::Leak(2);
        let f = [
            par(s) + par(t),
            par(s) * par(t),
            par(s) * par(s) * par(t),
            par(s) + par(s) * par(t),
        ];
        let gens: Vec<MPoly<RelVar>> = f
            .iter()
            .enumerate()
            .map(|(k, fk)| c(k) - fk.clone())
            .collect();
        let rels = elimination_ideal(&gens);
        assert!(!rels.is_empty());
        for rel in &rels {
            let lifted = rel.map_vars(|v| RelVar::Coeff(*v));
            let substituted = substitute(&lifted, &f);
            assert!(substituted.is_zero(), "{rel} does not vanish");
        }
    }

    fn substitute(rel: &MPoly<RelVar>, images: &[MPoly<RelVar>]) -> MPoly<RelVar> {
        let mut acc = MPoly::zero();
        for (m, coeff) in rel.terms() {
            let mut term = MPoly::constant(coeff.clone());
            for (v, e) in m.factors() {
                let image = match v {
                    RelVar::Coeff(CoeffSym(k)) => images[*k].clone(),
                    RelVar::Par(p) => MPoly::var(RelVar::Par(*p)),
                };
                for _ in 0..*e {
                    term = term * image.clone();
                }
            }
            acc += term;
        }
        acc
    }
}
