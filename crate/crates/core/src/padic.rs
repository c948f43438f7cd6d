//! Characters of `A_l = Z/p^l`, bias against them, depth-weighted
//! uniformity, one Cauchy-Schwarz step of the bias bound for mixed levels,
//! and point counts modulo `p^m`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{Budget, DomainSpec, Ring, RingSpec};
use crate::error::{Error, Result};
use crate::harmonic::{bias, multilinear_analytic_rank, poly_bias, poly_histogram, uniformity_from_histogram, BiasValue};
use crate::poly::{iterated_difference, multilinear_form, reduce_mod_p, MultiPoly, MultilinearForm};

/// `l - v_p(c)`, and 0 for `c = 0`.
pub fn char_depth(c: u64, p: u64, l: u32) -> u32 {
    if c == 0 {
        return 0;
    }
    let mut v = 0;
    let mut c = c;
    while c.is_multiple_of(p) {
        c /= p;
        v += 1;
    }
    l.saturating_sub(v)
}

fn prime_power_parts(ring: &Ring) -> Result<(u32, u32)> {
    match ring.spec() {
        RingSpec::PrimePower { p, l } => Ok((*p, *l)),
        _ => Err(Error::precondition("expected a ring Z/p^l")),
    }
}

/// `chi_c(x) = e(c x / p^l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadicCharacter {
    pub p: u32,
    pub l: u32,
    pub c: u32,
    pub depth: u32,
}

impl PadicCharacter {
    pub fn new(p: u32, l: u32, c: u32) -> Self {
        let modulus = (p as u64).pow(l);
        let c = (c as u64 % modulus) as u32;
        PadicCharacter {
            p,
            l,
            c,
            depth: char_depth(c as u64, p as u64, l),
        }
    }

    /// All `p^l` characters in order of `c`.
    pub fn all(p: u32, l: u32) -> Vec<Self> {
        (0..p.pow(l)).map(|c| Self::new(p, l, c)).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.c == 0
    }

    pub fn modulus(&self) -> u64 {
        (self.p as u64).pow(self.l)
    }

    pub fn eval(&self, x: u32) -> num_complex::Complex64 {
        let m = self.modulus();
        crate::algebra::root_of_unity(self.c as u64 * x as u64 % m, m)
    }
}

/// `b(P; chi) = q^{-nl} sum_v chi(P(v))`.
pub fn padic_bias(p: &MultiPoly, chi: &PadicCharacter, budget: &Budget) -> Result<BiasValue> {
    let (prime, l) = prime_power_parts(p.ring())?;
    if (prime, l) != (chi.p, chi.l) {
        return Err(Error::precondition("character and polynomial live on different rings"));
    }
    Ok(bias(&poly_histogram(p, budget)?, &[chi.c]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterBias {
    pub character: PadicCharacter,
    pub magnitude: f64,
    pub is_zero: bool,
    /// `q^{-s d(chi)}`.
    pub threshold: f64,
    /// `|b| < threshold`.
    pub below: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PadicUniformityReport {
    pub s: i64,
    pub characters: Vec<CharacterBias>,
    pub nu: Vec<BigRational>,
    pub deviation: BigRational,
    /// Every nontrivial character satisfies `|b| < q^{-s d(chi)}`.
    pub hypothesis_holds: bool,
    /// `deviation <= q^{-(s-2)}`, asserted when the hypothesis holds.
    pub conclusion_holds: bool,
}

fn threshold(q: u32, s: i64, depth: u32) -> f64 {
    (q as f64).powf(-(s as f64) * depth as f64)
}

/// Tests the depth-weighted bias hypothesis over the nontrivial characters
/// of `A_l` and compares with the exact deviation of `nu` from 1.
pub fn padic_uniformity(p: &MultiPoly, s: i64, budget: &Budget) -> Result<PadicUniformityReport> {
    let (prime, l) = prime_power_parts(p.ring())?;
    let h = poly_histogram(p, budget)?;
    let characters: Vec<CharacterBias> = PadicCharacter::all(prime, l)
        .into_iter()
        .map(|chi| {
            let b = bias(&h, &[chi.c]);
            let t = threshold(prime, s, chi.depth);
            CharacterBias {
                character: chi,
                magnitude: b.magnitude,
                is_zero: b.is_zero,
                threshold: t,
                below: b.is_zero || b.magnitude * (1.0 + 1e-12) < t,
            }
        })
        .collect();
    let uni = uniformity_from_histogram(h);
    let hypothesis_holds = characters.iter().filter(|c| !c.character.is_trivial()).all(|c| c.below);
    let bound = if s >= 2 {
        BigRational::new(BigInt::one(), BigInt::from(prime).pow((s - 2) as u32))
    } else {
        BigRational::from_integer(BigInt::from(prime).pow((2 - s) as u32))
    };
    let conclusion_holds = uni.deviation <= bound;
    if hypothesis_holds && !conclusion_holds {
        return Err(Error::IdentityViolation(format!(
            "bias hypothesis holds at s = {s} but the deviation is {}",
            uni.deviation
        )));
    }
    Ok(PadicUniformityReport {
        s,
        characters,
        nu: uni.nu,
        deviation: uni.deviation,
        hypothesis_holds,
        conclusion_holds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MainpEntry {
    pub poly: MultiPoly,
    /// Analytic rank of the reduction of `P~` mod `p`, a lower bound for its rank.
    pub rank_lower: f64,
    /// `max_{chi != 1} |b(P; chi)| q^{s d(chi)}`.
    pub max_normalized_bias: f64,
    /// The reduction of `P~` vanishes.
    pub degenerate: bool,
    /// `p <= deg P`.
    pub low_characteristic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MainpReport {
    pub s: i64,
    pub entries: Vec<MainpEntry>,
    /// For each rank lower bound `r` seen, the largest normalized bias among
    /// nondegenerate instances with rank lower bound `>= r`.
    pub frontier: Vec<(f64, f64)>,
}

/// Pairs the rank of the reduced multilinear form with the normalized
/// biases over all nontrivial characters, for a batch of polynomials.
pub fn mainp_probe(batch: &[MultiPoly], s: i64, budget: &Budget) -> Result<MainpReport> {
    let mut entries = Vec::with_capacity(batch.len());
    for p in batch {
        let (prime, l) = prime_power_parts(p.ring())?;
        let d = p.degree().unwrap_or(0);
        let (rank_lower, degenerate) = if d == 0 {
            (0.0, true)
        } else {
            let form = multilinear_form(p)?;
            let reduced = reduce_mod_p(form.poly())?;
            if reduced.is_zero() {
                (0.0, true)
            } else {
                let hat = MultilinearForm::from_blocks(reduced, d, p.nvars())?;
                (multilinear_analytic_rank(&hat, budget)?, false)
            }
        };
        let h = poly_histogram(p, budget)?;
        let max_normalized_bias = PadicCharacter::all(prime, l)
            .iter()
            .filter(|c| !c.is_trivial())
            .map(|c| bias(&h, &[c.c]).magnitude / threshold(prime, s, c.depth))
            .fold(0.0, f64::max);
        entries.push(MainpEntry {
            poly: p.clone(),
            rank_lower,
            max_normalized_bias,
            degenerate,
            low_characteristic: (prime as usize) <= d,
        });
    }
    let mut ranks: Vec<f64> = entries.iter().filter(|e| !e.degenerate).map(|e| e.rank_lower).collect();
    ranks.sort_by(f64::total_cmp);
    ranks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let frontier = ranks
        .into_iter()
        .map(|r| {
            let worst = entries
                .iter()
                .filter(|e| !e.degenerate && e.rank_lower >= r - 1e-9)
                .map(|e| e.max_normalized_bias)
                .fold(0.0, f64::max);
            (r, worst)
        })
        .collect();
    Ok(MainpReport { s, entries, frontier })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsStepReport {
    /// `|E_x e(R~(x)/p^l + S(x)/p^m)|`.
    pub lhs: f64,
    /// `E_{y, x_1, t} e((T(x_1 + t, y) - T(x_1, y))/p^l)` with `T = R~ + p^{l-m} S`.
    pub rhs: f64,
    pub holds: bool,
    /// `R~(x_1 + t, y) - R~(x_1, y) = R~(t, y)` as polynomials.
    pub shift_identity: bool,
}

/// The first Cauchy-Schwarz step in the first block of `V_l^d`:
/// `|E e(R~/p^l + S/p^m)|^2 <= E_y |E_{x_1} e(...)|^2`, with every variable
/// ranging over `A_l`. `r` has degree at most `d`; `s` lives on `d` blocks
/// of `n` variables and must have degree `< d`.
pub fn proposition_b_cs_step(r: &MultiPoly, s: &MultiPoly, d: usize, m: u32, budget: &Budget) -> Result<CsStepReport> {
    let ring = r.ring().clone();
    let (prime, l) = prime_power_parts(&ring)?;
    let n = r.nvars();
    if d == 0 || r.degree().is_some_and(|e| e > d) {
        return Err(Error::precondition("R must have degree at most d, with d >= 1"));
    }
    if s.nvars() != d * n || s.ring() != &ring || s.degree().is_some_and(|e| e >= d) {
        return Err(Error::precondition("S must be a polynomial of degree < d on d blocks"));
    }
    if m > l {
        return Err(Error::precondition("level m must not exceed l"));
    }
    budget.admit_power(ring.order() as u64, (d + 1) * n)?;
    let tilde = iterated_difference(r, d)
        .restrict_vars(n..(d + 1) * n)
        .ok_or_else(|| Error::IdentityViolation("d-th difference depends on x".into()))?;
    let lift = ring.from_u128((prime as u128).pow(l - m));
    let t_poly = &tilde + &s.scale(lift);
    let lhs = poly_bias(&t_poly, budget)?.magnitude;

    // variables: x_1 (n), y ((d-1) n), t (n)
    let total = (d + 1) * n;
    let shift_images = |p: &MultiPoly| {
        let images: Vec<MultiPoly> = (0..total)
            .map(|i| {
                let v = MultiPoly::var(&ring, total, i);
                if i < n {
                    &v + &MultiPoly::var(&ring, total, d * n + i)
                } else {
                    v
                }
            })
            .collect();
        let base = p.embed(total, 0);
        (&base.substitute(&images) - &base, base)
    };
    let (diff_t, _) = shift_images(&t_poly);
    let rhs_value = poly_bias(&diff_t, budget)?;
    if rhs_value.value.im.abs() > 1e-9 || rhs_value.value.re < -1e-9 {
        return Err(Error::IdentityViolation("Cauchy-Schwarz average is not a non-negative real".into()));
    }
    let rhs = rhs_value.value.re.max(0.0);

    let (diff_r, _) = shift_images(&tilde);
    let moved: Vec<MultiPoly> = (0..d * n)
        .map(|i| MultiPoly::var(&ring, total, if i < n { d * n + i } else { i }))
        .collect();
    let shift_identity = diff_r == tilde.substitute(&moved);
    let holds = lhs * lhs <= rhs + 1e-9;
    if !holds || !shift_identity {
        return Err(Error::IdentityViolation(format!(
            "Cauchy-Schwarz step failed: lhs^2 = {}, rhs = {rhs}, shift identity {shift_identity}",
            lhs * lhs
        )));
    }
    Ok(CsStepReport {
        lhs,
        rhs,
        holds,
        shift_identity,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityLevel {
    pub m: u32,
    pub count: u64,
    /// `p^{m(n-1)}`.
    pub target: u64,
    /// `count - target`.
    pub deviation: i128,
    /// `|count - target| <= p^{m(n-1) - 1/2}`, decided in integers.
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityReport {
    pub p: u32,
    pub levels: Vec<SingularityLevel>,
    pub all_pass: bool,
}

/// Counts zeros of `P` modulo `p^m` for `m = 1..=m_max`. `P` is given over
/// `Z/p^L` with `L >= m_max`, which determines every count.
pub fn rational_singularity_check(p: &MultiPoly, m_max: u32, budget: &Budget) -> Result<SingularityReport> {
    let (prime, big_l) = prime_power_parts(p.ring())?;
    if m_max == 0 || m_max > big_l {
        return Err(Error::precondition(format!("levels 1..={m_max} need a ring Z/p^L with L >= {m_max}")));
    }
    let d = p.degree().unwrap_or(0);
    if prime as usize <= d {
        return Err(Error::UnsupportedCharacteristic {
            characteristic: prime as u64,
            degree: d,
        });
    }
    let n = p.nvars();
    if n == 0 {
        return Err(Error::precondition("need at least one variable"));
    }
    let mut levels = Vec::new();
    for m in 1..=m_max {
        let ring = Ring::prime_power(prime, m)?;
        let modulus = ring.order();
        let reduced = p.map_coeffs(&ring, |c| c % modulus);
        let compiled = reduced.compile();
        let count = DomainSpec::new(ring, n).fold_shards(
            budget,
            || 0u64,
            |acc, pt| {
                if compiled.eval(pt) == 0 {
                    *acc += 1;
                }
            },
            |a, b| a + b,
        )?;
        let target_big = BigUint::from(prime).pow(m * (n as u32 - 1));
        let target = target_big.to_u64().expect("within budget");
        let deviation = count as i128 - target as i128;
        let lhs = BigInt::from(deviation).abs().pow(2) * BigInt::from(prime);
        let rhs = BigInt::from(target_big.pow(2));
        levels.push(SingularityLevel {
            m,
            count,
            target,
            deviation,
            passes: lhs <= rhs,
        });
    }
    Ok(SingularityReport {
        p: prime,
        all_pass: levels.iter().all(|l| l.passes),
        levels,
    })
}

/// Exact value of `|b|` as `p^{-k}` when the bias is a power of `p`; used in
/// reports.
pub fn bias_exponent(value: f64, p: u32) -> Option<i64> {
    let k = -value.ln() / (p as f64).ln();
    let r = k.round();
    ((k - r).abs() < 1e-9).then_some(r as i64)
}

impl PadicUniformityReport {
    pub fn deviation_f64(&self) -> f64 {
        self.deviation.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn is_exactly_uniform(&self) -> bool {
        self.deviation.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use crate::poly::parse_poly;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poly(ring: &str, n: usize, text: &str) -> MultiPoly {
        parse_poly(text, &ring_from_text(ring).unwrap(), n).unwrap()
    }

    #[test]
    fn depth_examples() {
        assert_eq!(char_depth(0, 3, 2), 0);
        assert_eq!(char_depth(1, 3, 2), 2);
        assert_eq!(char_depth(3, 3, 2), 1);
    }

    #[test]
    fn depth_is_minimal_trivializing_level() {
        for (p, l) in [(2u32, 5u32), (3, 4), (5, 3), (7, 2)] {
            let m = p.pow(l);
            for chi in PadicCharacter::all(p, l) {
                let trivial_on = |d: u32| (0..m).step_by(p.pow(d) as usize).all(|x| (chi.eval(x) - 1.0).norm() < 1e-9);
                assert!(trivial_on(chi.depth));
                if chi.depth > 0 {
                    assert!(!trivial_on(chi.depth - 1));
                }
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        for (p, l) in [(2u32, 3u32), (3, 2), (5, 2)] {
            let m = p.pow(l);
            let chars = PadicCharacter::all(p, l);
            for a in &chars {
                for b in &chars {
                    let s: num_complex::Complex64 = (0..m).map(|x| a.eval(x) * b.eval(x).conj()).sum();
                    let expected = if a == b { m as f64 } else { 0.0 };
                    assert!((s - expected).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn bias_examples() {
        let b = Budget::default();
        let z9 = ring_from_text("Z/9").unwrap();
        let x = poly("Z/9", 1, "x1");
        assert!(padic_bias(&x, &PadicCharacter::new(3, 2, 1), &b).unwrap().is_zero);
        let xy = poly("Z/9", 2, "x1*x2");
        assert!((padic_bias(&xy, &PadicCharacter::new(3, 2, 1), &b).unwrap().magnitude - 1.0 / 9.0).abs() < 1e-12);
        let c = MultiPoly::constant(&z9, 2, 4);
        assert!((padic_bias(&c, &PadicCharacter::new(3, 2, 5), &b).unwrap().magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniformity_examples() {
        let b = Budget::default();
        let rep = padic_uniformity(&poly("Z/9", 1, "x1"), 3, &b).unwrap();
        assert!(rep.is_exactly_uniform() && rep.hypothesis_holds);
        let rep = padic_uniformity(&poly("Z/9", 4, "x1*x3 + x2*x4"), 2, &b).unwrap();
        // |b| = 3^{-2 d(chi)} meets the threshold with equality, so the strict hypothesis fails
        assert!(!rep.hypothesis_holds);
        for c in rep.characters.iter().filter(|c| !c.character.is_trivial()) {
            assert!((c.magnitude - c.threshold).abs() < 1e-12);
        }
        assert!(padic_uniformity(&poly("Z/9", 4, "x1*x3 + x2*x4"), 1, &b).unwrap().hypothesis_holds);
        let rep = padic_uniformity(&poly("Z/9", 2, "x1*x2"), 2, &b).unwrap();
        assert!(!rep.hypothesis_holds);
    }

    #[test]
    fn mainp_examples() {
        let b = Budget::default();
        let batch = vec![
            poly("Z/9", 2, "x1*x2"),
            poly("Z/9", 4, "x1*x3+x2*x4"),
            poly("Z/9", 6, "x1*x4+x2*x5+x3*x6"),
            poly("Z/9", 2, "3*x1*x2"),
            poly("Z/4", 1, "x1^2"),
        ];
        let rep = mainp_probe(&batch, 1, &b).unwrap();
        let v: Vec<f64> = rep.entries[..3].iter().map(|e| e.max_normalized_bias).collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!((v[2] - 1.0 / 9.0).abs() < 1e-12);
        assert!(rep.entries[3].degenerate && rep.entries[3].rank_lower == 0.0);
        assert!(rep.entries[4].low_characteristic);
        assert!(rep.frontier.iter().all(|(r, _)| *r > 0.0 || rep.entries.iter().any(|e| !e.degenerate && e.rank_lower == 0.0)));
    }

    #[test]
    fn cs_step_examples() {
        let b = Budget::default();
        let r = poly("Z/9", 1, "x1^2");
        let s = MultiPoly::zero(r.ring(), 2);
        let rep = proposition_b_cs_step(&r, &s, 2, 2, &b).unwrap();
        assert!(rep.holds && rep.shift_identity);
        let zero = MultiPoly::zero(r.ring(), 1);
        let s = poly("Z/9", 2, "x1 + 3*x2");
        let rep = proposition_b_cs_step(&zero, &s, 2, 1, &b).unwrap();
        let direct = poly_bias(&s.scale(3), &b).unwrap().magnitude;
        assert!((rep.lhs - direct).abs() < 1e-12);
        let r = poly("Z/9", 2, "x1*x2");
        let s = poly("Z/9", 4, "x1");
        let rep = proposition_b_cs_step(&r, &s, 2, 1, &b).unwrap();
        assert!(rep.lhs * rep.lhs < rep.rhs - 1e-12);
    }

    #[test]
    fn singularity_examples() {
        let b = Budget::default();
        for (ring, n) in [("Z/27", 2), ("Z/125", 2), ("Z/27", 3)] {
            let rep = rational_singularity_check(&poly(ring, n, "x1"), 3, &b).unwrap();
            assert!(rep.all_pass);
            assert!(rep.levels.iter().all(|l| l.deviation == 0));
        }
        let rep = rational_singularity_check(&poly("Z/25", 3, "x1^2+x2^2+x3^2"), 2, &b).unwrap();
        let brute = |m: u32| {
            let md = 5u64.pow(m);
            let mut c = 0;
            for a in 0..md {
                for bb in 0..md {
                    for cc in 0..md {
                        if (a * a + bb * bb + cc * cc) % md == 0 {
                            c += 1;
                        }
                    }
                }
            }
            c
        };
        assert_eq!(rep.levels[0].count, brute(1));
        assert_eq!(rep.levels[1].count, brute(2));
        let rep = rational_singularity_check(&poly("Z/9", 2, "x1*x2"), 2, &b).unwrap();
        assert_eq!(rep.levels.iter().map(|l| l.count).collect::<Vec<_>>(), vec![5, 21]);
        assert!(!rep.all_pass);
        assert!(rational_singularity_check(&poly("Z/4", 1, "x1^2"), 2, &b).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn level_consistency_and_depth_one(seed in any::<u64>(), pl in prop::sample::select(vec![(2u32, 3u32), (3, 2), (5, 2)])) {
            let (p, l) = pl;
            let ring = Ring::prime_power(p, l).unwrap();
            let lower = Ring::prime_power(p, l - 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2;
            let f = MultiPoly::random(&ring, n, 3, 0.5, &mut rng);
            let b = Budget::default();
            let h = poly_histogram(&f, &b).unwrap();
            let m = lower.order();
            let hl = poly_histogram(&f.map_coeffs(&lower, |c| c % m), &b).unwrap();
            for (a, &cnt) in hl.counts().iter().enumerate() {
                let pushed: u64 = h.counts().iter().enumerate().filter(|(i, _)| *i as u32 % m == a as u32).map(|(_, &c)| c).sum();
                prop_assert_eq!(pushed, (p as u64).pow(n as u32) * cnt);
            }
            let field = Ring::prime_field(p).unwrap();
            let fhat = f.map_coeffs(&field, |c| c % p);
            let hf = poly_histogram(&fhat, &b).unwrap();
            for c1 in 1..p {
                let chi = PadicCharacter::new(p, l, c1 * p.pow(l - 1));
                prop_assert_eq!(chi.depth, 1);
                let lhs = bias(&h, &[chi.c]).value;
                let rhs = bias(&hf, &[c1]).value;
                prop_assert!((lhs - rhs).norm() < 1e-9);
            }
        }

        #[test]
        fn claim_implication(seed in any::<u64>(), pl in prop::sample::select(vec![(2u32, 2u32), (3, 2), (2, 3)]), s in 1i64..4) {
            let (p, l) = pl;
            let ring = Ring::prime_power(p, l).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = MultiPoly::random(&ring, 3, 2, 0.6, &mut rng);
            let rep = padic_uniformity(&f, s, &Budget::default()).unwrap();
            if rep.hypothesis_holds {
                prop_assert!(rep.conclusion_holds);
            }
        }
    }
}
