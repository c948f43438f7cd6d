//! Schmidt rank and nc-rank: certified upper bounds from explicit
//! decompositions, lower bounds from analytic rank, Gram matrices or
//! completed exhaustive searches.

use std::collections::HashMap;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{Budget, DomainSpec, Ring};
use crate::error::{Error, Result};
use crate::harmonic::{bias, multilinear_analytic_rank, value_histogram};
use crate::linalg::{solve, Matrix};
use crate::poly::{directional_derivative, monomials_up_to, multilinear_form, Exponents, MultiPoly, PolyCollection};

/// `P = sum_i Q_i R_i`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Decomposition {
    pub pairs: Vec<(MultiPoly, MultiPoly)>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sum(&self, ring: &Ring, n: usize) -> MultiPoly {
        self.pairs
            .iter()
            .fold(MultiPoly::zero(ring, n), |acc, (q, r)| &acc + &(q * r))
    }
}

/// Checks `P = sum Q_i R_i` symbolically with every factor of degree `< deg P`.
pub fn verify_decomposition(p: &MultiPoly, d: &Decomposition) -> bool {
    let bound = p.degree();
    let lower = |f: &MultiPoly| match (f.degree(), bound) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(a), Some(b)) => a < b,
    };
    d.pairs.iter().all(|(q, r)| {
        q.nvars() == p.nvars() && r.nvars() == p.nvars() && q.ring() == p.ring() && r.ring() == p.ring() && lower(q) && lower(r)
    }) && d.sum(p.ring(), p.nvars()) == *p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerSource {
    /// Analytic rank of a multilinear form.
    Analytic,
    /// Half the rank of the Gram (or alternating) matrix of a quadratic.
    GramMatrix,
    /// A completed exhaustive search excluded every smaller decomposition.
    Exhaustive,
    /// Nonzero polynomials of degree at least 2 have rank at least 1.
    Trivial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankEstimate {
    pub lower: f64,
    pub source: LowerSource,
    pub upper: Option<usize>,
    pub certificate: Option<Decomposition>,
    /// `ceil(lower) == upper`.
    pub exact: bool,
    /// Degree `<= 1` inputs, where rank is fixed by convention.
    pub degenerate: bool,
    /// For collections: the combination attaining the reported bounds.
    pub minimizer: Option<Vec<u32>>,
}

const RANK_SLACK: f64 = 1e-9;

impl RankEstimate {
    /// Builds an estimate, re-verifying the certificate against `target`.
    pub fn new(target: &MultiPoly, lower: f64, source: LowerSource, certificate: Option<Decomposition>) -> Result<Self> {
        if let Some(c) = &certificate {
            if !verify_decomposition(target, c) {
                return Err(Error::IdentityViolation("rank certificate does not reproduce the polynomial".into()));
            }
            if lower > c.len() as f64 + RANK_SLACK {
                return Err(Error::IdentityViolation(format!(
                    "lower bound {lower} exceeds certified rank {}",
                    c.len()
                )));
            }
        }
        let upper = certificate.as_ref().map(Decomposition::len);
        Ok(RankEstimate {
            lower,
            source,
            upper,
            exact: upper.is_some_and(|u| ceil_bound(lower) == u),
            certificate,
            degenerate: false,
            minimizer: None,
        })
    }

    pub fn degenerate(rank: usize) -> Self {
        RankEstimate {
            lower: rank as f64,
            source: LowerSource::Trivial,
            upper: Some(rank),
            certificate: None,
            exact: true,
            degenerate: true,
            minimizer: None,
        }
    }

    /// Integer lower bound implied by `lower`.
    pub fn lower_int(&self) -> usize {
        ceil_bound(self.lower)
    }
}

fn ceil_bound(x: f64) -> usize {
    if x.is_infinite() {
        usize::MAX
    } else {
        (x - RANK_SLACK).ceil().max(0.0) as usize
    }
}

/// Outcome of [`decomposition_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Decomposition),
    /// The searched stages found nothing; this is not a lower bound.
    NoneFound,
    /// A complete search showed that no decomposition with `max_r` pairs exists.
    ProvenImpossible,
}

/// Coefficient vectors over `monos` whose first nonzero entry is 1.
fn normalized_polys(ring: &Ring, monos: &[Exponents], min_degree: usize) -> Vec<MultiPoly> {
    let q = ring.order() as u64;
    let k = monos.first().map_or(0, Vec::len);
    let space = DomainSpec::new(ring.clone(), monos.len());
    let total = q.pow(monos.len() as u32);
    let mut out = Vec::new();
    space.for_each_in_range(0..total, |v| {
        if v.iter().find(|&&c| c != 0) != Some(&1) {
            return;
        }
        let p = MultiPoly::from_terms(ring, k, monos.iter().cloned().zip(v.iter().copied()));
        if p.degree().unwrap_or(0) >= min_degree {
            out.push(p);
        }
    });
    out
}

fn saturating_pow(q: u64, e: usize) -> u64 {
    (0..e).try_fold(1u64, |acc, _| acc.checked_mul(q)).unwrap_or(u64::MAX)
}

fn multiset_count(n: u64, r: usize) -> u64 {
    // C(n + r - 1, r)
    let mut acc: u128 = 1;
    for i in 0..r as u64 {
        acc = acc * (n as u128 + i as u128) / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Stage 1: `P = Q R` with `deg Q <= d/2`. Complete when it returns `Ok`.
fn trial_division(p: &MultiPoly, d: usize, budget: &Budget) -> Option<Option<(MultiPoly, MultiPoly)>> {
    let q = p.ring().order() as u64;
    let monos = monomials_up_to(p.nvars(), d / 2);
    let work = saturating_pow(q, monos.len()).saturating_mul(p.num_terms() as u64);
    if work > budget.max_points {
        return None;
    }
    let candidates = normalized_polys(p.ring(), &monos, 1);
    let found = candidates.par_iter().find_map_first(|f| {
        p.divide_exact(f)
            .filter(|g| g.degree().is_some_and(|e| e < d))
            .map(|g| (f.clone(), g))
    });
    Some(found)
}

/// Stage 2: repeatedly split off `L * (P - P|_{L=0}) / L` for the linear
/// form `L` that leaves the smallest remainder.
fn greedy_peel(p: &MultiPoly, d: usize) -> Decomposition {
    let ring = p.ring();
    let n = p.nvars();
    let mut rest = p.clone();
    let mut pairs = Vec::new();
    while rest.degree().is_some_and(|e| e >= d) {
        let support = rest.support();
        let mut best: Option<((i64, usize), MultiPoly, MultiPoly)> = None;
        let mut consider = |k: usize, j: Option<(usize, u32)>| {
            let mut images: Vec<MultiPoly> = (0..n).map(|i| MultiPoly::var(ring, n, i)).collect();
            let mut coeffs = vec![0u32; n];
            coeffs[k] = 1;
            images[k] = match j {
                None => MultiPoly::zero(ring, n),
                Some((j, c)) => {
                    coeffs[j] = c;
                    MultiPoly::var(ring, n, j).scale(ring.neg(c))
                }
            };
            let r = rest.substitute(&images);
            let key = (r.degree().map_or(-1, |e| e as i64), r.num_terms());
            if best.as_ref().is_none_or(|b| key < b.0) {
                best = Some((key, MultiPoly::linear(ring, &coeffs, 0), r));
            }
        };
        for &k in &support {
            consider(k, None);
        }
        if support.len() <= 16 {
            for (a, &k) in support.iter().enumerate() {
                for &j in &support[a + 1..] {
                    for c in 1..ring.order() {
                        consider(k, Some((j, c)));
                    }
                }
            }
        }
        let (_, l, r) = best.expect("a polynomial of positive degree has support");
        let quotient = (&rest - &r).divide_exact(&l).expect("L divides P - P|_{L=0}");
        pairs.push((l, quotient));
        rest = r;
    }
    if !rest.is_zero() {
        pairs.push((rest, MultiPoly::constant(ring, n, 1)));
    }
    Decomposition { pairs }
}

/// Stage 3: every multiset of `r` normalized `Q_i` of degree `< d`, solving
/// a linear system for the `R_i`. `None` when the search exceeds the budget.
fn exhaustive(p: &MultiPoly, d: usize, r: usize, budget: &Budget) -> Option<Option<Decomposition>> {
    let ring = p.ring();
    let k = p.nvars();
    let q = ring.order() as u64;
    let monos = monomials_up_to(k, d - 1);
    let m = monos.len();
    let n_cand = saturating_pow(q, m).saturating_sub(1) / (q - 1);
    let eq_monos = monomials_up_to(k, 2 * d - 2);
    let work = multiset_count(n_cand, r)
        .saturating_mul(eq_monos.len() as u64)
        .saturating_mul((r * m) as u64);
    if n_cand > 1 << 20 || work > budget.max_points {
        return None;
    }
    let candidates = normalized_polys(ring, &monos, 0);
    let index: HashMap<&Exponents, usize> = eq_monos.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut target = vec![0u32; eq_monos.len()];
    for (e, c) in p.terms() {
        target[index[e]] = c;
    }
    let try_tuple = |tuple: &[usize]| -> Option<Decomposition> {
        let mut a = Matrix::zeros(eq_monos.len(), r * m);
        for (t, &ci) in tuple.iter().enumerate() {
            for (mi, mu) in monos.iter().enumerate() {
                for (e, c) in candidates[ci].terms() {
                    let sum: Exponents = e.iter().zip(mu).map(|(x, y)| x + y).collect();
                    let row = index[&sum];
                    a.set(row, t * m + mi, ring.add(a.get(row, t * m + mi), c));
                }
            }
        }
        let x = solve(&a, &target, ring)?;
        let pairs = tuple
            .iter()
            .enumerate()
            .map(|(t, &ci)| {
                let rt = MultiPoly::from_terms(ring, k, monos.iter().cloned().zip(x[t * m..(t + 1) * m].iter().copied()));
                (candidates[ci].clone(), rt)
            })
            .filter(|(_, rt)| !rt.is_zero())
            .collect();
        Some(Decomposition { pairs })
    };
    fn rec(start: usize, n: usize, tuple: &mut Vec<usize>, r: usize, f: &dyn Fn(&[usize]) -> Option<Decomposition>) -> Option<Decomposition> {
        if tuple.len() == r {
            return f(tuple);
        }
        for i in start..n {
            tuple.push(i);
            if let Some(d) = rec(i, n, tuple, r, f) {
                return Some(d);
            }
            tuple.pop();
        }
        None
    }
    let n = candidates.len();
    let found = (0..n).into_par_iter().find_map_first(|first| {
        let mut tuple = vec![first];
        rec(first, n, &mut tuple, r, &try_tuple)
    });
    Some(found)
}

/// Searches for `P = sum_{i <= max_r} Q_i R_i` with affine-or-higher factors
/// of degree `< deg P`: trial division for one pair, then a greedy peel by
/// linear forms, then an exhaustive search when it fits in the budget.
pub fn decomposition_search(p: &MultiPoly, max_r: usize, budget: &Budget) -> Result<SearchOutcome> {
    if !p.ring().is_field() {
        return Err(Error::precondition("rank search needs a field"));
    }
    let Some(d) = p.degree() else {
        return Ok(SearchOutcome::Found(Decomposition::default()));
    };
    if d <= 1 || max_r == 0 {
        return Ok(SearchOutcome::ProvenImpossible);
    }
    let n = p.nvars();
    let support = p.support();
    let local = p.project(&support);
    let lift = |dec: Decomposition| Decomposition {
        pairs: dec
            .pairs
            .into_iter()
            .map(|(q, r)| (q.lift(&support, n), r.lift(&support, n)))
            .collect(),
    };

    let division = trial_division(&local, d, budget);
    if let Some(Some((q, r))) = &division {
        return Ok(SearchOutcome::Found(lift(Decomposition {
            pairs: vec![(q.clone(), r.clone())],
        })));
    }
    if max_r == 1 && division.is_some() {
        return Ok(SearchOutcome::ProvenImpossible);
    }
    let greedy = greedy_peel(&local, d);
    if greedy.len() <= max_r {
        return Ok(SearchOutcome::Found(lift(greedy)));
    }
    match exhaustive(&local, d, max_r, budget) {
        Some(Some(dec)) => Ok(SearchOutcome::Found(lift(dec))),
        Some(None) => Ok(SearchOutcome::ProvenImpossible),
        None => Ok(SearchOutcome::NoneFound),
    }
}

/// Tries to lower a certified upper bound, and to prove it tight, by
/// searching for a decomposition with one pair fewer.
fn refine(p: &MultiPoly, mut lower: f64, mut source: LowerSource, mut cert: Decomposition, budget: &Budget) -> Result<RankEstimate> {
    while cert.len() > ceil_bound(lower) {
        match decomposition_search(p, cert.len() - 1, budget)? {
            SearchOutcome::Found(better) => cert = better,
            SearchOutcome::ProvenImpossible => {
                lower = cert.len() as f64;
                source = LowerSource::Exhaustive;
            }
            SearchOutcome::NoneFound => break,
        }
    }
    RankEstimate::new(p, lower, source, Some(cert))
}

/// Diagonalizes the top form of a quadratic in odd characteristic:
/// returns `(c_k, l_k)` with `top = sum c_k L_k^2`, the `L_k` independent.
fn diagonalize(p: &MultiPoly) -> Vec<(u32, Vec<u32>)> {
    let ring = p.ring();
    let n = p.nvars();
    let half = ring.inv(ring.from_int(2)).expect("odd characteristic");
    let mut s = Matrix::zeros(n, n);
    for (e, c) in p.homogeneous_part(2).terms() {
        let vars: Vec<usize> = (0..n).filter(|&i| e[i] > 0).collect();
        match vars[..] {
            [i] => s.set(i, i, c),
            [i, j] => {
                s.set(i, j, ring.mul(c, half));
                s.set(j, i, ring.mul(c, half));
            }
            _ => unreachable!("quadratic monomial"),
        }
    }
    let mut out = Vec::new();
    loop {
        let mut u = vec![0u32; n];
        if let Some(i) = (0..n).find(|&i| s.get(i, i) != 0) {
            u[i] = 1;
        } else if let Some((i, j)) = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| s.get(i, j) != 0)
        {
            u[i] = 1;
            u[j] = 1;
        } else {
            break;
        }
        let su = s.mul_vec(ring, &u);
        let c = u.iter().zip(&su).fold(0, |acc, (&a, &b)| ring.add(acc, ring.mul(a, b)));
        let cinv = ring.inv(c).expect("chosen with Q(u) != 0");
        let l: Vec<u32> = su.iter().map(|&x| ring.mul(x, cinv)).collect();
        for i in 0..n {
            for j in 0..n {
                let v = ring.sub(s.get(i, j), ring.mul(c, ring.mul(l[i], l[j])));
                s.set(i, j, v);
            }
        }
        out.push((c, l));
    }
    out
}

fn linear_part(p: &MultiPoly) -> Vec<u32> {
    let n = p.nvars();
    (0..n)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 1;
            p.coeff(&e)
        })
        .collect()
}

/// Rank of a degree-2 polynomial. The lower bound is half the rank of the
/// Gram matrix of the top form (of the alternating form in characteristic 2);
/// in odd characteristic the upper bound comes from a diagonalization whose
/// squares are paired into products where possible.
pub fn quadratic_rank(p: &MultiPoly, budget: &Budget) -> Result<RankEstimate> {
    if p.degree() != Some(2) {
        return Err(Error::precondition("quadratic_rank needs a polynomial of degree 2"));
    }
    let ring = p.ring();
    if !ring.is_field() {
        return Err(Error::precondition("rank needs a field"));
    }
    let n = p.nvars();
    if ring.p() == 2 {
        let form = multilinear_form(p)?;
        let mut b = Matrix::zeros(n, n);
        for (e, c) in form.poly().terms() {
            let i = (0..n).find(|&i| e[i] > 0).expect("first block");
            let j = (n..2 * n).find(|&j| e[j] > 0).expect("second block") - n;
            b.set(i, j, c);
        }
        let m = b.rank(ring);
        let lower = m.div_ceil(2).max(1) as f64;
        return match decomposition_search(p, n + 1, budget)? {
            SearchOutcome::Found(dec) => refine(p, lower, LowerSource::GramMatrix, dec, budget),
            _ => RankEstimate::new(p, lower, LowerSource::GramMatrix, None),
        };
    }

    let diag = diagonalize(p);
    let m = diag.len();
    let lin = |c: u32, l: &[u32]| MultiPoly::linear(ring, &l.iter().map(|&x| ring.mul(c, x)).collect::<Vec<_>>(), 0);
    let mut used = vec![false; m];
    let mut pairs: Vec<(MultiPoly, MultiPoly)> = Vec::new();
    for i in 0..m {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (ci, li) = &diag[i];
        let partner = (i + 1..m).find_map(|j| {
            let ratio = ring.neg(ring.mul(diag[j].0, ring.inv(*ci).unwrap()));
            (!used[j]).then(|| ring.sqrt(ratio)).flatten().map(|alpha| (j, alpha))
        });
        match partner {
            Some((j, alpha)) => {
                used[j] = true;
                let lj = &diag[j].1;
                let plus: Vec<u32> = li.iter().zip(lj).map(|(&a, &b)| ring.add(a, ring.mul(alpha, b))).collect();
                let minus: Vec<u32> = li.iter().zip(lj).map(|(&a, &b)| ring.sub(a, ring.mul(alpha, b))).collect();
                pairs.push((lin(*ci, &plus), lin(1, &minus)));
            }
            None => pairs.push((lin(*ci, li), lin(1, li))),
        }
    }
    let products = Decomposition { pairs: pairs.clone() }.sum(ring, n);
    let rem = p - &products;
    if !rem.is_zero() {
        // (Q + b)(R + a) = QR + aQ + bR + ab absorbs linear parts in the span.
        let lambda = linear_part(&rem);
        let mut cols = Matrix::zeros(n, 2 * pairs.len());
        for (k, (qk, rk)) in pairs.iter().enumerate() {
            for (i, (&a, &b)) in linear_part(qk).iter().zip(&linear_part(rk)).enumerate() {
                cols.set(i, k, a);
                cols.set(i, pairs.len() + k, b);
            }
        }
        match solve(&cols, &lambda, ring) {
            Some(x) => {
                let np = pairs.len();
                for (k, (qk, rk)) in pairs.iter_mut().enumerate() {
                    let (alpha, beta) = (x[k], x[np + k]);
                    *qk = &*qk + &MultiPoly::constant(ring, n, beta);
                    *rk = &*rk + &MultiPoly::constant(ring, n, alpha);
                }
                let leftover = p - &Decomposition { pairs: pairs.clone() }.sum(ring, n);
                if !leftover.is_zero() {
                    pairs.push((leftover, MultiPoly::constant(ring, n, 1)));
                }
            }
            None => pairs.push((rem, MultiPoly::constant(ring, n, 1))),
        }
    }
    refine(p, m.div_ceil(2) as f64, LowerSource::GramMatrix, Decomposition { pairs }, budget)
}

/// Bounds on the rank of a single polynomial. Degree 0 and 1 are degenerate:
/// the zero polynomial has rank 0 and nonzero polynomials of degree at most
/// 1 are assigned rank 1 by convention.
pub fn rank_bounds(p: &MultiPoly, budget: &Budget) -> Result<RankEstimate> {
    match p.degree() {
        None => RankEstimate::new(p, 0.0, LowerSource::Trivial, Some(Decomposition::default())),
        Some(0) | Some(1) => Ok(RankEstimate::degenerate(1)),
        Some(2) => quadratic_rank(p, budget),
        Some(_) => match decomposition_search(p, usize::MAX, budget)? {
            SearchOutcome::Found(dec) => refine(p, 1.0, LowerSource::Trivial, dec, budget),
            _ => RankEstimate::new(p, 1.0, LowerSource::Trivial, None),
        },
    }
}

/// Bounds on the nc-rank, the rank of the multilinear form `P~`. The lower
/// bound is the analytic rank of `P~`; polynomials of degree `<= 1` are
/// reported as degenerate with rank 0.
pub fn nc_rank_bounds(p: &MultiPoly, budget: &Budget) -> Result<RankEstimate> {
    if p.degree().unwrap_or(0) <= 1 {
        return Ok(RankEstimate::degenerate(0));
    }
    let form = multilinear_form(p)?;
    let target = form.poly();
    if target.is_zero() {
        return RankEstimate::new(target, 0.0, LowerSource::Trivial, Some(Decomposition::default()));
    }
    let analytic = multilinear_analytic_rank(&form, budget)?;
    let (lower, source) = if analytic >= 1.0 {
        (analytic, LowerSource::Analytic)
    } else {
        (1.0, LowerSource::Trivial)
    };
    match decomposition_search(target, usize::MAX, budget)? {
        SearchOutcome::Found(dec) => refine(target, lower, source, dec, budget),
        _ => RankEstimate::new(target, lower, source, None),
    }
}

/// Minimum of [`rank_bounds`] over the nonzero combinations `P_a`.
pub fn collection_rank_bounds(c: &PolyCollection, budget: &Budget) -> Result<RankEstimate> {
    let q = c.ring().order() as u64;
    let size = saturating_pow(q, c.len());
    if size > 10_000 {
        return Err(Error::precondition("collection rank needs q^c <= 10^4"));
    }
    let dual = DomainSpec::new(c.ring().clone(), c.len());
    let mut best: Option<RankEstimate> = None;
    for idx in 1..size {
        let a = dual.point_at(idx);
        let mut est = rank_bounds(&c.combination(&a), budget)?;
        est.minimizer = Some(a);
        let key = |e: &RankEstimate| (e.upper.unwrap_or(usize::MAX), e.lower_int());
        if best.as_ref().is_none_or(|b| key(&est) < key(b)) {
            best = Some(est);
        }
    }
    Ok(best.expect("c >= 1"))
}

/// A sampled extension `(P, dP_i/dv_i, dP_i/dw_i)` and its score: the
/// minimum analytic rank of the nonzero combinations of the extension.
#[derive(Clone, Debug)]
pub struct Enrichment {
    pub v: Vec<Vec<u32>>,
    pub w: Vec<Vec<u32>>,
    pub extended: PolyCollection,
    pub estimate: RankEstimate,
}

pub fn derivative_enrichment_search(c: &PolyCollection, trials: usize, budget: &Budget, seed: u64) -> Result<Enrichment> {
    if trials == 0 {
        return Err(Error::precondition("enrichment needs at least one trial"));
    }
    let ring = c.ring();
    let n = c.nvars();
    let max_d = c.max_degree();
    if ring.characteristic() <= max_d as u64 {
        return Err(Error::UnsupportedCharacteristic {
            characteristic: ring.characteristic(),
            degree: max_d,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Enrichment)> = None;
    for _ in 0..trials {
        let mut draw = || -> Vec<u32> { (0..n).map(|_| rng.gen_range(0..ring.order())).collect() };
        let v: Vec<Vec<u32>> = (0..c.len()).map(|_| draw()).collect();
        let w: Vec<Vec<u32>> = (0..c.len()).map(|_| draw()).collect();
        let mut polys = c.polys().to_vec();
        let mut degrees = c.degrees().to_vec();
        for (dirs, _) in [(&v, 0), (&w, 1)] {
            for (i, p) in c.polys().iter().enumerate() {
                polys.push(directional_derivative(p, &dirs[i])?);
                degrees.push(c.degrees()[i].saturating_sub(1));
            }
        }
        let extended = PolyCollection::with_degrees(polys, degrees)?;
        let h = value_histogram(&extended, budget)?;
        let dual = DomainSpec::new(ring.clone(), extended.len());
        let total = saturating_pow(ring.order() as u64, extended.len());
        let score = (1..total)
            .map(|idx| bias(&h, &dual.point_at(idx)).analytic_rank())
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            let estimate = RankEstimate {
                lower: score,
                source: LowerSource::Analytic,
                upper: None,
                certificate: None,
                exact: false,
                degenerate: false,
                minimizer: None,
            };
            best = Some((score, Enrichment { v, w, extended, estimate }));
        }
    }
    Ok(best.expect("trials >= 1").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use crate::harmonic::analytic_rank;
    use crate::poly::{build_qm, parse_poly};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn poly(ring: &str, n: usize, text: &str) -> MultiPoly {
        parse_poly(text, &ring_from_text(ring).unwrap(), n).unwrap()
    }

    #[test]
    fn verify_examples() {
        let p = poly("GF(2)", 2, "x1*x2");
        let dec = Decomposition { pairs: vec![(poly("GF(2)", 2, "x1"), poly("GF(2)", 2, "x2"))] };
        assert!(verify_decomposition(&p, &dec));
        assert!(!verify_decomposition(&poly("GF(2)", 4, "x1*x2+x3*x4"), &Decomposition {
            pairs: vec![(poly("GF(2)", 4, "x1"), poly("GF(2)", 4, "x2"))]
        }));
        let p = poly("GF(5)", 1, "x1^2+x1");
        let dec = Decomposition { pairs: vec![(poly("GF(5)", 1, "x1"), poly("GF(5)", 1, "x1+1"))] };
        assert!(verify_decomposition(&p, &dec));
        // a factor of full degree is rejected
        let dec = Decomposition { pairs: vec![(p.clone(), poly("GF(5)", 1, "1"))] };
        assert!(!verify_decomposition(&p, &dec));
    }

    #[test]
    fn quadratic_examples() {
        let b = Budget::default();
        let e = quadratic_rank(&poly("GF(3)", 2, "x1*x2"), &b).unwrap();
        assert!(e.exact && e.upper == Some(1));
        let e = quadratic_rank(&poly("GF(3)", 4, "x1*x3+x2*x4"), &b).unwrap();
        assert_eq!((e.lower, e.upper, e.exact), (2.0, Some(2), true));
        let e = quadratic_rank(&poly("GF(5)", 1, "x1^2"), &b).unwrap();
        assert!(e.exact && e.upper == Some(1));
        let e = quadratic_rank(&poly("GF(2)", 2, "x1*x2"), &b).unwrap();
        assert!(e.exact && e.upper == Some(1));
        let e = quadratic_rank(&poly("GF(5)", 1, "x1^2 + x1 + 3"), &b).unwrap();
        assert!(e.upper.unwrap() <= 2);
        assert!(quadratic_rank(&poly("GF(5)", 1, "x1^3"), &b).is_err());
    }

    #[test]
    fn quadratic_with_affine_parts() {
        let b = Budget::default();
        for (ring, n, text) in [
            ("GF(3)", 3, "x1^2 + 2*x2^2 + x1 + x2 + 1"),
            ("GF(5)", 3, "x1*x2 + x3 + 2"),
            ("GF(7)", 4, "3*x1^2 + x2*x3 + 5*x4^2 + x4 + 6"),
            ("GF(9)", 2, "(t)*x1^2 + x2^2 + x1"),
        ] {
            let p = poly(ring, n, text);
            let e = quadratic_rank(&p, &b).unwrap();
            assert!(e.lower <= e.upper.unwrap() as f64, "{text}");
        }
    }

    #[test]
    fn nc_rank_examples() {
        let b = Budget::default();
        let e = nc_rank_bounds(&poly("GF(5)", 1, "x1^2"), &b).unwrap();
        assert!(e.exact && e.upper == Some(1));
        let e = nc_rank_bounds(&poly("GF(3)", 2, "x1 + 2*x2"), &b).unwrap();
        assert!(e.degenerate && e.upper == Some(0));
    }

    #[test]
    fn search_examples() {
        let b = Budget::default();
        match decomposition_search(&poly("GF(2)", 4, "x1*x2+x3*x4"), 2, &b).unwrap() {
            SearchOutcome::Found(d) => {
                assert_eq!(d.len(), 2);
                assert_eq!(d.pairs[0], (poly("GF(2)", 4, "x1"), poly("GF(2)", 4, "x2")));
                assert_eq!(d.pairs[1], (poly("GF(2)", 4, "x3"), poly("GF(2)", 4, "x4")));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            decomposition_search(&poly("GF(3)", 2, "x1^2+x2^2+1"), 1, &b).unwrap(),
            SearchOutcome::ProvenImpossible
        );
        let q2 = build_qm(3, 2, &ring_from_text("GF(2)").unwrap());
        assert_eq!(decomposition_search(&q2, 1, &b).unwrap(), SearchOutcome::ProvenImpossible);
        match decomposition_search(&q2, 2, &b).unwrap() {
            SearchOutcome::Found(d) => assert!(verify_decomposition(&q2, &d)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conic_rank_is_two() {
        let b = Budget::default();
        let p = poly("GF(3)", 2, "x1^2+x2^2+1");
        let e = rank_bounds(&p, &b).unwrap();
        assert!(e.exact);
        assert_eq!(e.upper, Some(2));
    }

    #[test]
    fn collection_examples() {
        let b = Budget::default();
        let r = ring_from_text("GF(2)").unwrap();
        let c = PolyCollection::new(vec![
            parse_poly("x1*x2", &r, 4).unwrap(),
            parse_poly("x1*x2+x3*x4", &r, 4).unwrap(),
        ])
        .unwrap();
        let e = collection_rank_bounds(&c, &b).unwrap();
        assert_eq!(e.upper, Some(1));
        assert!(e.minimizer == Some(vec![0, 1]) || e.minimizer == Some(vec![1, 0]) || e.minimizer == Some(vec![1, 1]));
        let c = PolyCollection::new(vec![parse_poly("x1", &r, 2).unwrap(), parse_poly("x2", &r, 2).unwrap()]).unwrap();
        let e = collection_rank_bounds(&c, &b).unwrap();
        assert!(e.degenerate && e.upper == Some(1));
        let p = parse_poly("x1*x2+x3*x4", &r, 4).unwrap();
        let single = collection_rank_bounds(&PolyCollection::single(p.clone()), &b).unwrap();
        assert_eq!(single.upper, rank_bounds(&p, &b).unwrap().upper);
    }

    #[test]
    fn enrichment_examples() {
        let b = Budget::default();
        let r = ring_from_text("GF(5)").unwrap();
        let c = PolyCollection::single(parse_poly("x1*x4+x2*x5+x3*x6", &r, 6).unwrap());
        let e = derivative_enrichment_search(&c, 20, &b, 7).unwrap();
        assert!(e.estimate.lower >= 1.0);
        assert_eq!(e.extended.len(), 3);
        let c = PolyCollection::single(parse_poly("x1^2", &r, 1).unwrap());
        let e = derivative_enrichment_search(&c, 20, &b, 7).unwrap();
        assert!(e.estimate.lower <= 1.0);
        assert!(derivative_enrichment_search(&c, 0, &b, 7).is_err());
        let r2 = ring_from_text("GF(2)").unwrap();
        let c = PolyCollection::single(parse_poly("x1*x2", &r2, 2).unwrap());
        assert!(matches!(
            derivative_enrichment_search(&c, 3, &b, 7),
            Err(Error::UnsupportedCharacteristic { .. })
        ));
    }

    /// Independent rank oracle: breadth-first sums of products of factors of
    /// degree `< d`, as dense coefficient vectors.
    fn oracle_rank(p: &MultiPoly, max_r: usize) -> Option<usize> {
        let ring = p.ring();
        let n = p.nvars();
        let d = p.degree()?;
        let monos = monomials_up_to(n, d - 1);
        let big = monomials_up_to(n, 2 * d - 2);
        let idx: HashMap<Exponents, usize> = big.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let dense = |f: &MultiPoly| {
            let mut v = vec![0u32; big.len()];
            for (e, c) in f.terms() {
                v[idx[e]] = c;
            }
            v
        };
        let all: Vec<MultiPoly> = DomainSpec::new(ring.clone(), monos.len())
            .enumerate(&Budget::default())
            .unwrap()
            .map(|v| MultiPoly::from_terms(ring, n, monos.iter().cloned().zip(v)))
            .collect();
        let mut products: HashSet<Vec<u32>> = HashSet::new();
        for a in &all {
            for b in &all {
                products.insert(dense(&(a * b)));
            }
        }
        let target = dense(p);
        let mut reach: HashSet<Vec<u32>> = HashSet::from([vec![0u32; big.len()]]);
        for r in 1..=max_r {
            let mut next = HashSet::new();
            for s in &reach {
                for t in &products {
                    next.insert(s.iter().zip(t).map(|(&x, &y)| ring.add(x, y)).collect::<Vec<u32>>());
                }
            }
            reach = next;
            if reach.contains(&target) {
                return Some(r);
            }
        }
        None
    }

    #[test]
    fn oracle_agrees_on_small_quadratics() {
        let b = Budget::default();
        for (ring, n, text, rank) in [
            ("GF(2)", 3, "x1*x2 + x3^2", 2),
            ("GF(2)", 3, "x1*x2 + x2*x3 + x1*x3", 2),
            ("GF(2)", 3, "x1^2 + x2^2 + x3", 2),
            ("GF(2)", 3, "x1^2 + x2^2 + x1 + x2", 1),
            ("GF(3)", 2, "x1^2 + x2^2", 2),
            ("GF(3)", 2, "x1^2 + 2*x2^2 + 1", 2),
            ("GF(3)", 2, "x1*x2 + x1 + 1", 2),
        ] {
            let p = poly(ring, n, text);
            assert_eq!(oracle_rank(&p, 3), Some(rank), "{text}");
            let e = rank_bounds(&p, &b).unwrap();
            assert!(e.lower_int() <= rank && e.upper.unwrap() >= rank, "{text}: {e:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn search_sound_and_sandwiched(seed in any::<u64>(), gf3 in any::<bool>()) {
            let (ring, n) = if gf3 { ("GF(3)", 2) } else { ("GF(2)", 3) };
            let r = ring_from_text(ring).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 2, 0.5, &mut rng);
            prop_assume!(p.degree() == Some(2));
            let b = Budget::default();
            let truth = oracle_rank(&p, 3).expect("small quadratics have rank <= 3");
            let e = rank_bounds(&p, &b).unwrap();
            prop_assert!(e.lower_int() <= truth);
            prop_assert!(e.upper.unwrap() >= truth);
            for max_r in 1..=2 {
                match decomposition_search(&p, max_r, &b).unwrap() {
                    SearchOutcome::Found(d) => {
                        prop_assert!(verify_decomposition(&p, &d));
                        prop_assert!(d.len() <= max_r);
                    }
                    SearchOutcome::ProvenImpossible => prop_assert!(truth > max_r),
                    SearchOutcome::NoneFound => {}
                }
            }
        }

        #[test]
        fn analytic_rank_below_certified_rank(seed in any::<u64>(), gf3 in any::<bool>(), r in 1usize..4) {
            // bilinear sum of r products of random linear forms in two blocks
            let ring = ring_from_text(if gf3 { "GF(3)" } else { "GF(2)" }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4;
            let mut pairs = Vec::new();
            for _ in 0..r {
                let a: Vec<u32> = (0..2 * n).map(|i| if i < n { rng.gen_range(0..ring.order()) } else { 0 }).collect();
                let c: Vec<u32> = (0..2 * n).map(|i| if i >= n { rng.gen_range(0..ring.order()) } else { 0 }).collect();
                pairs.push((MultiPoly::linear(&ring, &a, 0), MultiPoly::linear(&ring, &c, 0)));
            }
            let dec = Decomposition { pairs };
            let p = dec.sum(&ring, 2 * n);
            let a = analytic_rank(&p, &Budget::default()).unwrap();
            prop_assert!(a <= r as f64 + 1e-9);
        }

        #[test]
        fn quadratic_upper_in_range(seed in any::<u64>(), desc in prop::sample::select(vec!["GF(3)", "GF(5)", "GF(7)"])) {
            let ring = ring_from_text(desc).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&ring, 4, 2, 0.6, &mut rng);
            prop_assume!(p.degree() == Some(2));
            let e = quadratic_rank(&p, &Budget::new(100_000)).unwrap();
            let m = diagonalize(&p).len();
            prop_assert!(e.upper.unwrap() <= m + 1);
            if m == 4 {
                prop_assert!(e.upper.unwrap() as f64 >= 2.0 && e.upper.unwrap() <= 6);
            }
        }
    }
}
