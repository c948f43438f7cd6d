//! Degree-bounded ideal membership and a probe comparing it with vanishing
//! on the rational points of the zero set.

use std::collections::HashMap;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Budget, DomainSpec};
use crate::error::{Error, Result};
use crate::geometry::fiber_points;
use crate::linalg::{solve, Matrix, RowBasis};
use crate::poly::{monomials_up_to, Exponents, MultiPoly, PolyCollection};
use crate::rank::{collection_rank_bounds, RankEstimate};

/// `Q = sum R_i P_i` with `deg R_i <= degbound - d_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipCertificate {
    pub cofactors: Vec<MultiPoly>,
    pub degbound: usize,
}

impl MembershipCertificate {
    pub fn verify(&self, q: &MultiPoly, c: &PolyCollection) -> bool {
        let sum = self
            .cofactors
            .iter()
            .zip(c.polys())
            .fold(MultiPoly::zero(q.ring(), q.nvars()), |acc, (r, p)| &acc + &(r * p));
        let degrees_ok = self
            .cofactors
            .iter()
            .zip(c.degrees())
            .all(|(r, &d)| r.degree().is_none_or(|e| e + d <= self.degbound));
        degrees_ok && sum == *q
    }
}

/// Whether `Q` vanishes at every rational point of `{P = 0}`.
pub fn vanishes_on_points(q: &MultiPoly, c: &PolyCollection, budget: &Budget) -> Result<bool> {
    let compiled = c.compile();
    let qc = q.compile();
    let domain = DomainSpec::new(c.ring().clone(), c.nvars());
    domain.fold_shards(
        budget,
        || true,
        |ok, pt| {
            if *ok && compiled.iter().all(|p| p.eval(pt) == 0) && qc.eval(pt) != 0 {
                *ok = false;
            }
        },
        |a, b| a && b,
    )
}

/// Solves for cofactors of degree `<= degbound - d_i`. `None` means no
/// certificate exists at this degree bound; a larger bound may still succeed.
pub fn ideal_membership(q: &MultiPoly, c: &PolyCollection, degbound: usize, budget: &Budget) -> Result<Option<MembershipCertificate>> {
    let ring = c.ring();
    if !ring.is_field() {
        return Err(Error::precondition("ideal membership needs a field"));
    }
    let needed = q.degree().unwrap_or(0).max(c.max_degree());
    if degbound < needed {
        return Err(Error::precondition(format!("degree bound {degbound} is below {needed}")));
    }
    let n = c.nvars();
    let rows = monomials_up_to(n, degbound);
    let row_of: HashMap<&Exponents, usize> = rows.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let blocks: Vec<Vec<Exponents>> = c.degrees().iter().map(|&d| monomials_up_to(n, degbound - d)).collect();
    let unknowns: usize = blocks.iter().map(Vec::len).sum();
    let size = (rows.len() as u64).saturating_mul(unknowns as u64);
    if size > budget.max_points {
        return Err(Error::BudgetExceeded {
            cardinality: size.into(),
            budget: budget.max_points,
        });
    }
    let mut a = Matrix::zeros(rows.len(), unknowns);
    let mut col = 0;
    for (p, block) in c.polys().iter().zip(&blocks) {
        for mu in block {
            for (e, v) in p.terms() {
                let s: Exponents = e.iter().zip(mu).map(|(x, y)| x + y).collect();
                let r = row_of[&s];
                a.set(r, col, ring.add(a.get(r, col), v));
            }
            col += 1;
        }
    }
    let mut b = vec![0u32; rows.len()];
    for (e, v) in q.terms() {
        b[row_of[e]] = v;
    }
    let Some(x) = solve(&a, &b, ring) else {
        return Ok(None);
    };
    let mut offset = 0;
    let cofactors = blocks
        .iter()
        .map(|block| {
            let r = MultiPoly::from_terms(ring, n, block.iter().cloned().zip(x[offset..offset + block.len()].iter().copied()));
            offset += block.len();
            r
        })
        .collect();
    let cert = MembershipCertificate { cofactors, degbound };
    if !cert.verify(q, c) {
        return Err(Error::IdentityViolation("membership certificate failed to verify".into()));
    }
    Ok(Some(cert))
}

#[derive(Clone, Debug)]
pub struct NullstellensatzReport {
    pub a: usize,
    pub degbound: usize,
    pub zero_set_size: u64,
    pub monomials: usize,
    /// Basis of the polynomials of degree `<= a` vanishing on `X(F_q)`.
    pub kernel: Vec<MultiPoly>,
    pub certified: usize,
    /// `certified / kernel.len()`, or 1 when the kernel is trivial.
    pub fraction_certified: f64,
    pub vacuous: bool,
    /// Random kernel elements tested, and how many were certified.
    pub trials: usize,
    pub trials_certified: usize,
    pub rank: Option<RankEstimate>,
}

/// Computes the degree-`a` polynomials vanishing on the zero set of `C`
/// and tests each for ideal membership. Requires `a D < q`.
pub fn nullstellensatz_probe(
    c: &PolyCollection,
    a: usize,
    trials: usize,
    extra_degree: usize,
    budget: &Budget,
    seed: u64,
) -> Result<NullstellensatzReport> {
    let ring = c.ring().clone();
    let q = ring.order() as u64;
    let d = c.degree_product();
    if (a as u64).saturating_mul(d) >= q {
        return Err(Error::precondition(format!(
            "probe needs a < q/D, got a = {a}, q = {q}, D = {d}"
        )));
    }
    let n = c.nvars();
    let monos = monomials_up_to(n, a);
    let evals: Vec<crate::poly::CompiledPoly> = monos
        .iter()
        .map(|e| MultiPoly::monomial(&ring, e.clone(), 1).compile())
        .collect();
    let zero = vec![0u32; c.len()];
    let count = fiber_points(c, &zero, budget, 0)?.count;
    let compiled = c.compile();
    let basis = DomainSpec::new(ring.clone(), n).fold_shards(
        budget,
        || RowBasis::new(monos.len()),
        |rb, pt| {
            if rb.rank() < monos.len() && compiled.iter().all(|p| p.eval(pt) == 0) {
                let row: Vec<u32> = evals.iter().map(|m| m.eval(pt)).collect();
                rb.insert(&ring, &row);
            }
        },
        |mut x, y| {
            let m = y.to_matrix();
            for i in 0..m.rows() {
                x.insert(&ring, m.row(i));
            }
            x
        },
    )?;
    let kernel: Vec<MultiPoly> = basis
        .to_matrix()
        .kernel(&ring)
        .into_iter()
        .map(|v| MultiPoly::from_terms(&ring, n, monos.iter().cloned().zip(v)))
        .collect();
    let degbound = a.max(c.max_degree()) + extra_degree;
    let mut certified = 0;
    for k in &kernel {
        if ideal_membership(k, c, degbound, budget)?.is_some() {
            certified += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials_certified = 0;
    let trials = if kernel.is_empty() { 0 } else { trials };
    for _ in 0..trials {
        let combo = kernel.iter().fold(MultiPoly::zero(&ring, n), |acc, k| {
            &acc + &k.scale(rng.gen_range(0..ring.order()))
        });
        if ideal_membership(&combo, c, degbound, budget)?.is_some() {
            trials_certified += 1;
        }
    }
    let rank = match collection_rank_bounds(c, budget) {
        Ok(r) => Some(r),
        Err(e) if e.is_budget() => None,
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    let vacuous = kernel.is_empty();
    Ok(NullstellensatzReport {
        a,
        degbound,
        zero_set_size: count,
        monomials: monos.len(),
        fraction_certified: if vacuous { 1.0 } else { certified as f64 / kernel.len() as f64 },
        kernel,
        certified,
        vacuous,
        trials,
        trials_certified,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use crate::poly::parse_poly;
    use proptest::prelude::*;

    fn coll(ring: &str, n: usize, polys: &[&str]) -> PolyCollection {
        let r = ring_from_text(ring).unwrap();
        PolyCollection::new(polys.iter().map(|s| parse_poly(s, &r, n).unwrap()).collect()).unwrap()
    }

    #[test]
    fn vanishing_examples() {
        let b = Budget::default();
        let c = coll("GF(3)", 2, &["x1"]);
        assert!(vanishes_on_points(&parse_poly("x1*x2", c.ring(), 2).unwrap(), &c, &b).unwrap());
        let c = coll("GF(3)", 1, &["x1^2"]);
        assert!(vanishes_on_points(&parse_poly("x1", c.ring(), 1).unwrap(), &c, &b).unwrap());
        assert!(!vanishes_on_points(&parse_poly("1", c.ring(), 1).unwrap(), &c, &b).unwrap());
    }

    #[test]
    fn membership_examples() {
        let b = Budget::default();
        let c = coll("GF(3)", 2, &["x1"]);
        let cert = ideal_membership(&parse_poly("x1*x2", c.ring(), 2).unwrap(), &c, 2, &b).unwrap().unwrap();
        assert_eq!(cert.cofactors, vec![parse_poly("x2", c.ring(), 2).unwrap()]);
        let c = coll("GF(3)", 1, &["x1^2"]);
        let x = parse_poly("x1", c.ring(), 1).unwrap();
        for bound in 2..=5 {
            assert!(ideal_membership(&x, &c, bound, &b).unwrap().is_none());
        }
        assert!(ideal_membership(&x, &c, 1, &b).is_err());
        let c = coll("GF(5)", 4, &["x1*x3+x2*x4"]);
        let r = parse_poly("x2+1", c.ring(), 4).unwrap();
        let q = &r * &c.polys()[0];
        let cert = ideal_membership(&q, &c, 3, &b).unwrap().unwrap();
        assert_eq!(cert.cofactors, vec![r]);
    }

    #[test]
    fn probe_examples() {
        let b = Budget::default();
        let rep = nullstellensatz_probe(&coll("GF(7)", 6, &["x1*x4+x2*x5+x3*x6"]), 1, 5, 0, &b, 1).unwrap();
        assert!(rep.vacuous);
        assert_eq!(rep.fraction_certified, 1.0);
        let rep = nullstellensatz_probe(&coll("GF(5)", 1, &["x1^2"]), 1, 5, 0, &b, 1).unwrap();
        assert_eq!(rep.kernel, vec![parse_poly("x1", &ring_from_text("GF(5)").unwrap(), 1).unwrap()]);
        assert_eq!(rep.fraction_certified, 0.0);
        let rep = nullstellensatz_probe(&coll("GF(3)", 2, &["x1"]), 1, 5, 0, &b, 1).unwrap();
        assert_eq!(rep.kernel.len(), 1);
        assert_eq!(rep.fraction_certified, 1.0);
        assert_eq!(rep.trials_certified, rep.trials);
        assert!(nullstellensatz_probe(&coll("GF(5)", 1, &["x1^2"]), 3, 5, 0, &b, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_membership(seed in any::<u64>(), gf in prop::sample::select(vec!["GF(3)", "GF(5)", "GF(4)"])) {
            let ring = ring_from_text(gf).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let p1 = MultiPoly::random(&ring, n, 2, 0.5, &mut rng);
            let p2 = MultiPoly::random(&ring, n, 2, 0.5, &mut rng);
            prop_assume!(p1.degree() == Some(2) && p2.degree() == Some(2));
            let c = PolyCollection::new(vec![p1, p2]).unwrap();
            let a = 3;
            let r1 = MultiPoly::random(&ring, n, 1, 0.6, &mut rng);
            let r2 = MultiPoly::random(&ring, n, 1, 0.6, &mut rng);
            let q = &(&r1 * &c.polys()[0]) + &(&r2 * &c.polys()[1]);
            let b = Budget::default();
            let cert = ideal_membership(&q, &c, a, &b).unwrap();
            prop_assert!(cert.as_ref().is_some_and(|x| x.verify(&q, &c)));
            prop_assert!(vanishes_on_points(&q, &c, &b).unwrap());
        }
    }
}
