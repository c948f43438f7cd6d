//! Fibers of polynomial maps: point counts over extension fields, Jacobian
//! rank at rational points, and the degree bound on fiber sizes.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{Budget, DomainSpec, Ring, RingSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{CompiledPoly, PolyCollection};

/// Exact size of a fiber and its first points in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberSample {
    pub t: Vec<u32>,
    pub count: u64,
    pub sample: Vec<Vec<u32>>,
}

fn check_value(c: &PolyCollection, t: &[u32]) -> Result<()> {
    if t.len() != c.len() || t.iter().any(|&x| x >= c.ring().order()) {
        return Err(Error::precondition("fiber value must be a point of R^c"));
    }
    Ok(())
}

fn on_fiber(compiled: &[CompiledPoly], t: &[u32], pt: &[u32]) -> bool {
    compiled.iter().zip(t).all(|(p, &v)| p.eval(pt) == v)
}

pub fn fiber_points(c: &PolyCollection, t: &[u32], budget: &Budget, sample_cap: usize) -> Result<FiberSample> {
    check_value(c, t)?;
    let compiled = c.compile();
    let domain = DomainSpec::new(c.ring().clone(), c.nvars());
    let (count, sample) = domain.fold_shards(
        budget,
        || (0u64, Vec::new()),
        |acc: &mut (u64, Vec<Vec<u32>>), pt| {
            if on_fiber(&compiled, t, pt) {
                acc.0 += 1;
                if acc.1.len() < sample_cap {
                    acc.1.push(pt.to_vec());
                }
            }
        },
        |mut a, b| {
            a.0 += b.0;
            let room = sample_cap - a.1.len();
            a.1.extend(b.1.into_iter().take(room));
            a
        },
    )?;
    Ok(FiberSample {
        t: t.to_vec(),
        count,
        sample,
    })
}

/// `tau_l = |X(F_{p^l})| / p^{(n-c) l}` for `l = 1..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct TauSequence {
    pub p: u32,
    pub n: usize,
    pub c: usize,
    pub counts: Vec<u64>,
    pub ratios: Vec<BigRational>,
}

/// Point counts of the fiber over `t` in the extensions `F_{p^l}`, each
/// built with its least irreducible modulus.
pub fn tau_sequence(c: &PolyCollection, t: &[u32], levels: usize, budget: &Budget) -> Result<TauSequence> {
    check_value(c, t)?;
    let p = match c.ring().spec() {
        RingSpec::Prime { p } => *p,
        _ => return Err(Error::precondition("tau sequences need a prime base field")),
    };
    let (n, cc) = (c.nvars(), c.len());
    let mut counts = Vec::with_capacity(levels);
    let mut ratios = Vec::with_capacity(levels);
    for l in 1..=levels {
        budget.admit_power(p as u64, l * n)?;
        let field = Ring::extension_field(p, l as u32)?;
        // prime field elements are the constants 0..p of every extension
        let lifted: Vec<CompiledPoly> = c.polys().iter().map(|f| f.map_coeffs(&field, |x| x).compile()).collect();
        let count = DomainSpec::new(field, n).fold_shards(
            budget,
            || 0u64,
            |acc, pt| {
                if on_fiber(&lifted, t, pt) {
                    *acc += 1;
                }
            },
            |a, b| a + b,
        )?;
        let den = BigInt::from(p).pow(((n - cc.min(n)) * l) as u32);
        counts.push(count);
        ratios.push(BigRational::new(BigInt::from(count), den));
    }
    Ok(TauSequence { p, n, c: cc, counts, ratios })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothnessSample {
    pub t: Vec<u32>,
    pub inspected: usize,
    pub full_rank: usize,
    pub deficient: usize,
    /// Inspected points where the Jacobian rank is below `c`.
    pub singular_points: Vec<Vec<u32>>,
}

/// Jacobian rank at the first `sample_size` points of the fiber over `t`.
pub fn jacobian_smoothness(c: &PolyCollection, t: &[u32], sample_size: usize, budget: &Budget) -> Result<SmoothnessSample> {
    let ring = c.ring().clone();
    let max_d = c.max_degree();
    if ring.characteristic() <= max_d as u64 {
        return Err(Error::UnsupportedCharacteristic {
            characteristic: ring.characteristic(),
            degree: max_d,
        });
    }
    let fiber = fiber_points(c, t, budget, sample_size)?;
    let n = c.nvars();
    let partials: Vec<Vec<CompiledPoly>> = c
        .polys()
        .iter()
        .map(|f| (0..n).map(|j| f.partial(j).compile()).collect())
        .collect();
    let mut out = SmoothnessSample {
        t: t.to_vec(),
        inspected: 0,
        full_rank: 0,
        deficient: 0,
        singular_points: Vec::new(),
    };
    for pt in fiber.sample {
        let rows: Vec<Vec<u32>> = partials.iter().map(|row| row.iter().map(|g| g.eval(&pt)).collect()).collect();
        let rank = Matrix::from_rows(rows, n).rank(&ring);
        out.inspected += 1;
        if rank == c.len() {
            out.full_rank += 1;
        } else {
            out.deficient += 1;
            out.singular_points.push(pt);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberBound {
    pub t: Vec<u32>,
    pub count: u64,
    /// `q^{n-c} D - count`, negative on a violation.
    pub margin: i128,
    /// `tau_1 <= D`.
    pub tau1_within_d: bool,
    /// `tau_2 <= D` over `F_{q^2}`, when that count fits the budget.
    pub tau2_within_d: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BezoutReport {
    pub bound: u64,
    pub degree_product: u64,
    pub fibers: Vec<FiberBound>,
    /// Fibers whose dimension is evidenced as `n - c` yet exceed the bound.
    pub violations: Vec<Vec<u32>>,
}

/// Checks `|F_t| <= q^{n-c} D` for every `t`. The dimension hypothesis of the
/// bound is evidenced by `tau_2 <= D` when the quadratic extension fits the
/// budget and by `tau_1 <= D` otherwise.
pub fn bezout_rough_bound_check(c: &PolyCollection, budget: &Budget) -> Result<BezoutReport> {
    let ring = c.ring().clone();
    if !ring.is_field() {
        return Err(Error::precondition("the degree bound needs a field"));
    }
    let q = ring.order() as u64;
    let (n, cc) = (c.nvars(), c.len());
    if cc > n {
        return Err(Error::precondition("more equations than variables"));
    }
    let d = c.degree_product();
    let base = q.pow((n - cc) as u32);
    let bound = base * d;
    let hist = crate::harmonic::value_histogram(c, budget)?;
    let prime_base = matches!(ring.spec(), RingSpec::Prime { .. });
    let second_level = prime_base && budget.admit_power(q, 2 * n).is_ok();
    let dual = DomainSpec::new(ring.clone(), cc);
    let mut fibers = Vec::with_capacity(hist.counts().len());
    let mut violations = Vec::new();
    for (idx, &count) in hist.counts().iter().enumerate() {
        let t = dual.point_at(idx as u64);
        let tau2_within_d = if second_level {
            let level2 = tau_sequence(c, &t, 2, budget)?.counts[1];
            Some(level2 <= base * base * d)
        } else {
            None
        };
        let fb = FiberBound {
            margin: bound as i128 - count as i128,
            tau1_within_d: count <= bound,
            tau2_within_d,
            count,
            t: t.clone(),
        };
        if tau2_within_d.unwrap_or(fb.tau1_within_d) && fb.margin < 0 {
            violations.push(t);
        }
        fibers.push(fb);
    }
    Ok(BezoutReport {
        bound,
        degree_product: d,
        fibers,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use crate::harmonic::nu_table;
    use crate::poly::parse_poly;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coll(ring: &str, n: usize, polys: &[&str]) -> PolyCollection {
        let r = ring_from_text(ring).unwrap();
        PolyCollection::new(polys.iter().map(|s| parse_poly(s, &r, n).unwrap()).collect()).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn fiber_examples() {
        let b = Budget::default();
        let f = fiber_points(&coll("GF(2)", 2, &["x1*x2"]), &[1], &b, 10).unwrap();
        assert_eq!((f.count, f.sample), (1, vec![vec![1, 1]]));
        assert_eq!(fiber_points(&coll("GF(3)", 2, &["x1"]), &[0], &b, 0).unwrap().count, 3);
        assert_eq!(fiber_points(&coll("GF(3)", 1, &["x1^2+1"]), &[0], &b, 5).unwrap().count, 0);
    }

    #[test]
    fn sample_is_first_in_order_for_any_shards() {
        let c = coll("GF(3)", 3, &["x1*x2 + x3"]);
        let one = fiber_points(&c, &[1], &Budget::default(), 4).unwrap();
        let many = fiber_points(&c, &[1], &Budget::default().with_shards(5), 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn tau_examples() {
        let b = Budget::default();
        let t = tau_sequence(&coll("GF(2)", 2, &["x1*x2"]), &[0], 3, &b).unwrap();
        assert_eq!(t.ratios, vec![rat(3, 2), rat(7, 4), rat(15, 8)]);
        let t = tau_sequence(&coll("GF(3)", 2, &["x1"]), &[0], 3, &b).unwrap();
        assert!(t.ratios.iter().all(|r| *r == rat(1, 1)));
        let t = tau_sequence(&coll("GF(3)", 4, &["x1*x3+x2*x4"]), &[1], 3, &b).unwrap();
        for (l, r) in t.ratios.iter().enumerate() {
            let q = 3f64.powi(l as i32 + 1);
            let v = r.numer().to_string().parse::<f64>().unwrap() / r.denom().to_string().parse::<f64>().unwrap();
            assert!((v - 1.0).abs() <= 2.0 / q);
        }
        assert!(tau_sequence(&coll("GF(4)", 1, &["x1"]), &[0], 1, &b).is_err());
    }

    #[test]
    fn smoothness_examples() {
        let b = Budget::default();
        let s = jacobian_smoothness(&coll("GF(3)", 2, &["x1"]), &[1], 100, &b).unwrap();
        assert_eq!(s.deficient, 0);
        let s = jacobian_smoothness(&coll("GF(3)", 2, &["x1*x2"]), &[0], 100, &b).unwrap();
        assert_eq!((s.inspected, s.deficient), (5, 1));
        assert_eq!(s.singular_points, vec![vec![0, 0]]);
        let s = jacobian_smoothness(&coll("GF(3)", 4, &["x1*x3+x2*x4"]), &[0], 1000, &b).unwrap();
        assert_eq!((s.inspected, s.deficient), (33, 1));
        assert!(jacobian_smoothness(&coll("GF(2)", 2, &["x1*x2"]), &[0], 10, &b).is_err());
    }

    #[test]
    fn bezout_examples() {
        let b = Budget::default();
        let r = bezout_rough_bound_check(&coll("GF(2)", 2, &["x1*x2"]), &b).unwrap();
        assert_eq!(r.bound, 4);
        assert_eq!(r.fibers[0].count, 3);
        assert!(r.violations.is_empty());
        let r = bezout_rough_bound_check(&coll("GF(5)", 2, &["x1"]), &b).unwrap();
        assert!(r.fibers.iter().all(|f| f.margin == 0));
        let r = bezout_rough_bound_check(&coll("GF(3)", 3, &["x1^2+x2^2+1", "x3"]), &b).unwrap();
        assert_eq!(r.bound, 6);
        assert!(r.fibers.iter().all(|f| f.count <= 6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fibers_partition_and_tau_matches_nu(seed in any::<u64>(), gf in prop::sample::select(vec!["GF(2)", "GF(3)", "GF(5)"])) {
            let r = ring_from_text(gf).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = crate::poly::MultiPoly::random(&r, 3, 2, 0.5, &mut rng);
            let c = PolyCollection::single(p);
            let b = Budget::default();
            let nu = nu_table(&c, &b).unwrap();
            let mut total = 0;
            for t in 0..r.order() {
                let f = fiber_points(&c, &[t], &b, 0).unwrap();
                total += f.count;
                let tau = tau_sequence(&c, &[t], 1, &b).unwrap();
                prop_assert_eq!(&tau.ratios[0], &nu.nu[t as usize]);
            }
            prop_assert_eq!(total, (r.order() as u64).pow(3));
        }

        #[test]
        fn pair_of_lines_closed_form(gf in prop::sample::select(vec![2u32, 3])) {
            let r = Ring::prime_field(gf).unwrap();
            let c = PolyCollection::single(parse_poly("x1*x2", &r, 2).unwrap());
            let t = tau_sequence(&c, &[0], 3, &Budget::default()).unwrap();
            for (l, ratio) in t.ratios.iter().enumerate() {
                let ql = BigInt::from(gf).pow(l as u32 + 1);
                prop_assert_eq!(ratio, &BigRational::new(BigInt::from(2) * &ql - 1, ql));
            }
        }
    }
}
