//! Exact value histograms and the character sums derived from them: bias,
//! analytic rank, normalized fiber sizes, Fourier inversion, Gowers norms.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{root_of_unity, Budget, DomainSpec, Ring};
use crate::error::{Error, Result};
use crate::poly::{iterated_difference, MultiPoly, MultilinearForm, PolyCollection};

/// Largest codomain `q^c` a histogram may index.
pub const MAX_CODOMAIN: u64 = 1 << 22;

/// Exact fiber counts of a map `R^n -> R^c`. Codomain points are indexed
/// lexicographically, first coordinate most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueHistogram {
    ring: Ring,
    c: usize,
    n: usize,
    counts: Vec<u64>,
}

impl ValueHistogram {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn codomain_dim(&self) -> usize {
        self.c
    }

    pub fn domain_dim(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn domain_cardinality(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn index_of(&self, t: &[u32]) -> usize {
        let q = self.ring.order() as usize;
        t.iter().fold(0, |acc, &x| acc * q + x as usize)
    }

    pub fn point_of(&self, index: usize) -> Vec<u32> {
        DomainSpec::new(self.ring.clone(), self.c).point_at(index as u64)
    }

    pub fn count(&self, t: &[u32]) -> u64 {
        self.counts[self.index_of(t)]
    }

    /// Phase counts `M_j = #{v : phase(<a, P(v)>) = j}`.
    pub fn phase_counts(&self, a: &[u32]) -> Vec<u64> {
        assert_eq!(a.len(), self.c);
        let r = &self.ring;
        let mut m = vec![0u64; r.phase_modulus() as usize];
        let mut t = vec![0u32; self.c];
        for (idx, &cnt) in self.counts.iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            decode(idx, r.order(), &mut t);
            let s = a.iter().zip(&t).fold(0, |acc, (&ai, &ti)| r.add(acc, r.mul(ai, ti)));
            m[r.phase(s) as usize] += cnt;
        }
        m
    }
}

fn decode(mut idx: usize, q: u32, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % q as usize) as u32;
        idx /= q as usize;
    }
}

pub fn value_histogram(c: &PolyCollection, budget: &Budget) -> Result<ValueHistogram> {
    let ring = c.ring().clone();
    let q = ring.order() as u64;
    let size = (q as u128).checked_pow(c.len() as u32).filter(|&s| s <= MAX_CODOMAIN as u128);
    let size = size.ok_or_else(|| Error::precondition("codomain too large for a histogram"))? as usize;
    let compiled = c.compile();
    let domain = DomainSpec::new(ring.clone(), c.nvars());
    let counts = domain.fold_shards(
        budget,
        || vec![0u64; size],
        |acc, pt| {
            let idx = compiled.iter().fold(0usize, |i, p| i * q as usize + p.eval(pt) as usize);
            acc[idx] += 1;
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )?;
    Ok(ValueHistogram {
        ring,
        c: c.len(),
        n: c.nvars(),
        counts,
    })
}

pub fn poly_histogram(p: &MultiPoly, budget: &Budget) -> Result<ValueHistogram> {
    value_histogram(&PolyCollection::single(p.clone()), budget)
}

/// Whether `sum_j m_j zeta^j = 0` for a primitive `N`-th root of unity
/// `zeta`, `N` a power of the prime `p`. This holds exactly when each
/// residue class `j mod N/p` carries a constant value.
pub fn cyclotomic_sum_is_zero(m: &[i128], p: u32) -> bool {
    let step = m.len() / p as usize;
    (0..step).all(|r| (1..p as usize).all(|i| m[r + i * step] == m[r]))
}

/// A normalized character sum `|V|^{-1} sum_v psi(f(v))` with the exact
/// phase counts it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasValue {
    pub value: Complex64,
    pub magnitude: f64,
    /// Exact vanishing, decided from the phase counts.
    pub is_zero: bool,
    pub phase_counts: Vec<u64>,
    pub domain_size: u64,
    /// Logarithm base for the analytic rank.
    pub base: u32,
}

impl BiasValue {
    pub fn from_phase_counts(phase_counts: Vec<u64>, p: u32, base: u32) -> Self {
        let n = phase_counts.len() as u64;
        let domain_size: u64 = phase_counts.iter().sum();
        let signed: Vec<i128> = phase_counts.iter().map(|&x| x as i128).collect();
        let is_zero = cyclotomic_sum_is_zero(&signed, p);
        let sum = phase_counts
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (j, &m)| acc + root_of_unity(j as u64, n) * m as f64);
        let value = if is_zero { Complex64::new(0.0, 0.0) } else { sum / domain_size as f64 };
        BiasValue {
            value,
            magnitude: value.norm(),
            is_zero,
            phase_counts,
            domain_size,
            base,
        }
    }

    /// `-log_base |value|`, infinite when the sum vanishes.
    pub fn analytic_rank(&self) -> f64 {
        if self.is_zero {
            f64::INFINITY
        } else {
            (-self.magnitude.ln() / (self.base as f64).ln()).max(0.0)
        }
    }
}

/// Bias of `<a, P>` read off a histogram.
pub fn bias(h: &ValueHistogram, a: &[u32]) -> BiasValue {
    BiasValue::from_phase_counts(h.phase_counts(a), h.ring.p(), h.ring.order())
}

pub fn poly_bias(p: &MultiPoly, budget: &Budget) -> Result<BiasValue> {
    Ok(bias(&poly_histogram(p, budget)?, &[1]))
}

pub fn analytic_rank(p: &MultiPoly, budget: &Budget) -> Result<f64> {
    Ok(poly_bias(p, budget)?.analytic_rank())
}

/// Normalized fiber sizes `nu(t) = N_t q^{c-n}` and their distance from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    pub histogram: ValueHistogram,
    pub nu: Vec<BigRational>,
    /// `max_t |nu(t) - 1|`.
    pub deviation: BigRational,
    /// Largest integer `s` with `deviation <= q^{-s}`; `None` when the
    /// deviation is zero.
    pub best_s: Option<i64>,
}

fn rational_pow(q: u32, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(q).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        b
    } else {
        b.recip()
    }
}

/// Largest integer `s` with `x <= q^{-s}`, for `0 < x`.
pub fn best_exponent(x: &BigRational, q: u32) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let mut s: i64 = 0;
    while x > &rational_pow(q, -s) {
        s -= 1;
    }
    while x <= &rational_pow(q, -(s + 1)) {
        s += 1;
    }
    Some(s)
}

pub fn uniformity_from_histogram(h: ValueHistogram) -> UniformityReport {
    let q = h.ring.order();
    let scale = rational_pow(q, h.c as i64 - h.n as i64);
    let nu: Vec<BigRational> = h
        .counts
        .iter()
        .map(|&n| BigRational::from_integer(BigInt::from(n)) * &scale)
        .collect();
    let deviation = nu
        .iter()
        .map(|v| (v - BigRational::one()).abs())
        .max()
        .unwrap_or_else(BigRational::zero);
    let best_s = best_exponent(&deviation, q);
    UniformityReport {
        histogram: h,
        nu,
        deviation,
        best_s,
    }
}

pub fn nu_table(c: &PolyCollection, budget: &Budget) -> Result<UniformityReport> {
    Ok(uniformity_from_histogram(value_histogram(c, budget)?))
}

/// One Fourier coefficient `nu^(chi_a)` computed from the fiber table and,
/// independently, from the histogram of `P_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficient {
    pub a: Vec<u32>,
    pub from_table: Complex64,
    pub from_combination: BiasValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierReport {
    pub uniformity: UniformityReport,
    pub coefficients: Vec<FourierCoefficient>,
    /// `max_a |route (i) - route (ii)|`.
    pub max_discrepancy: f64,
    /// Floating point reconstruction error of `nu` from the coefficients.
    pub reconstruction_error: f64,
    /// The reconstruction identity, checked in the cyclotomic integers.
    pub reconstruction_exact: bool,
    /// `sum_{a != 0} |nu^(a)|`.
    pub deviation_bound: f64,
    /// `max_{a != 0} |bias(P_a)|`, exactly zero when every sum vanishes.
    pub max_nontrivial_bias: f64,
    pub all_nontrivial_vanish: bool,
    /// Largest integer `s` with `max_nontrivial_bias <= q^{-s}`.
    pub lemma_s: Option<i64>,
    /// `deviation <= q^{-(s - c)}` for `s = lemma_s`.
    pub lemma_holds: bool,
}

pub const FOURIER_TOLERANCE: f64 = 1e-9;

/// Computes every Fourier coefficient of `nu` two ways and checks inversion
/// and the deviation bound. Violated identities are reported as errors.
pub fn fourier_check(c: &PolyCollection, budget: &Budget) -> Result<FourierReport> {
    let ring = c.ring().clone();
    let q = ring.order();
    let cc = c.len();
    if cc > 4 || (q as u64).pow(cc as u32) > 10_000 {
        return Err(Error::precondition("fourier check needs c <= 4 and q^c <= 10^4"));
    }
    let uniformity = nu_table(c, budget)?;
    let h = &uniformity.histogram;
    let n_phase = ring.phase_modulus() as u64;
    let qc = (q as u64).pow(cc as u32);
    let nu_f: Vec<f64> = uniformity.nu.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let dual = DomainSpec::new(ring.clone(), cc);
    let mut coefficients = Vec::with_capacity(qc as usize);
    for idx in 0..qc {
        let a = dual.point_at(idx);
        let mut t = vec![0u32; cc];
        let mut from_table = Complex64::new(0.0, 0.0);
        for (ti, &v) in nu_f.iter().enumerate() {
            decode(ti, q, &mut t);
            let s = inner(&ring, &a, &t);
            from_table += root_of_unity(ring.phase(s) as u64, n_phase) * v;
        }
        from_table /= qc as f64;
        let combo = poly_histogram(&c.combination(&a), budget)?;
        coefficients.push(FourierCoefficient {
            a,
            from_table,
            from_combination: bias(&combo, &[1]),
        });
    }
    let max_discrepancy = coefficients
        .iter()
        .map(|f| (f.from_table - f.from_combination.value).norm())
        .fold(0.0, f64::max);
    if max_discrepancy > FOURIER_TOLERANCE {
        return Err(Error::IdentityViolation(format!(
            "fourier routes disagree by {max_discrepancy:e}"
        )));
    }

    // nu(t) q^{n-c} q^c = sum_a sum_j M^a_j zeta^{j - phase<a,t>}, compared in Z[zeta].
    let mut reconstruction_exact = true;
    let mut reconstruction_error: f64 = 0.0;
    let mut t = vec![0u32; cc];
    for (ti, &count) in h.counts.iter().enumerate() {
        decode(ti, q, &mut t);
        let mut acc = vec![0i128; n_phase as usize];
        let mut approx = Complex64::new(0.0, 0.0);
        for f in &coefficients {
            let shift = ring.phase(inner(&ring, &f.a, &t)) as u64;
            for (j, &m) in f.from_combination.phase_counts.iter().enumerate() {
                acc[((j as u64 + n_phase - shift) % n_phase) as usize] += m as i128;
            }
            approx += root_of_unity(n_phase - shift, n_phase) * f.from_combination.value;
        }
        acc[0] -= count as i128 * qc as i128;
        if !cyclotomic_sum_is_zero(&acc, ring.p()) {
            reconstruction_exact = false;
        }
        reconstruction_error = reconstruction_error.max((approx.re - nu_f[ti]).abs().max(approx.im.abs()));
    }
    if !reconstruction_exact || reconstruction_error > FOURIER_TOLERANCE {
        return Err(Error::IdentityViolation("fourier inversion of nu failed".into()));
    }

    let nontrivial = &coefficients[1..];
    let deviation_bound: f64 = nontrivial.iter().map(|f| f.from_combination.magnitude).sum();
    let deviation = uniformity.deviation.to_f64().unwrap_or(f64::INFINITY);
    if deviation > deviation_bound + FOURIER_TOLERANCE {
        return Err(Error::IdentityViolation(format!(
            "deviation {deviation} exceeds the Fourier bound {deviation_bound}"
        )));
    }
    let all_nontrivial_vanish = nontrivial.iter().all(|f| f.from_combination.is_zero);
    let max_nontrivial_bias = nontrivial.iter().map(|f| f.from_combination.magnitude).fold(0.0, f64::max);
    let lemma_s = if all_nontrivial_vanish {
        None
    } else {
        Some(float_best_exponent(max_nontrivial_bias, q))
    };
    let lemma_holds = match lemma_s {
        None => uniformity.deviation.is_zero(),
        Some(s) => deviation <= (q as f64).powi(-(s as i32 - cc as i32)) + FOURIER_TOLERANCE,
    };
    Ok(FourierReport {
        uniformity,
        coefficients,
        max_discrepancy,
        reconstruction_error,
        reconstruction_exact,
        deviation_bound,
        max_nontrivial_bias,
        all_nontrivial_vanish,
        lemma_s,
        lemma_holds,
    })
}

/// Largest integer `s` with `x <= q^{-s}` up to a relative slack of 1e-12.
pub fn float_best_exponent(x: f64, q: u32) -> i64 {
    let mut s = (-x.ln() / (q as f64).ln()).floor() as i64;
    while x > (q as f64).powi(-(s as i32)) * (1.0 + 1e-12) {
        s -= 1;
    }
    while x <= (q as f64).powi(-(s as i32 + 1)) * (1.0 + 1e-12) {
        s += 1;
    }
    s
}

fn inner(ring: &Ring, a: &[u32], t: &[u32]) -> u32 {
    a.iter().zip(t).fold(0, |acc, (&x, &y)| ring.add(acc, ring.mul(x, y)))
}

/// `E_{x, h_1..h_m} psi(Delta_{h_1}..Delta_{h_m} P(x))`, real and non-negative.
pub fn gowers_average(p: &MultiPoly, m: usize, budget: &Budget) -> Result<f64> {
    if m == 0 {
        return Err(Error::precondition("Gowers norms need m >= 1"));
    }
    budget.admit_power(p.ring().order() as u64, (m + 1) * p.nvars())?;
    let diff = iterated_difference(p, m);
    let b = poly_bias(&diff, budget)?;
    if b.value.im.abs() > 1e-9 || b.value.re < -1e-9 {
        return Err(Error::IdentityViolation(format!(
            "Gowers average {} is not a non-negative real",
            b.value
        )));
    }
    Ok(b.value.re.max(0.0))
}

/// `||e(P)||_{U_m}`.
pub fn gowers_norm(p: &MultiPoly, m: usize, budget: &Budget) -> Result<f64> {
    Ok(gowers_average(p, m, budget)?.powf(1.0 / (1u64 << m) as f64))
}

/// Exact bias of a multilinear form. The sum over the last block vanishes
/// unless the induced linear form is zero, so
/// `bias = q^{-(d-2)n} sum_{h_1..h_{d-2}} q^{-rank M(h)}` where `M(h)` is the
/// bilinear form left in the last two blocks. Needs `q^{(d-2)n}` in budget.
pub fn multilinear_bias(form: &MultilinearForm, budget: &Budget) -> Result<BigRational> {
    let ring = form.poly().ring().clone();
    if !ring.is_field() {
        return Err(Error::precondition("multilinear bias needs a field"));
    }
    let d = form.degree();
    let n = form.block_size();
    let q = ring.order();
    if d == 1 {
        let v = if form.poly().is_zero() { 1 } else { 0 };
        return Ok(BigRational::from_integer(BigInt::from(v)));
    }
    // Each term: coefficient, prefix variables (flat indices), last-two-block indices.
    let terms: Vec<(u32, Vec<usize>, usize, usize)> = form
        .poly()
        .terms()
        .map(|(e, c)| {
            let vars: Vec<usize> = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, _)| i).collect();
            let (prefix, last) = vars.split_at(d - 2);
            (c, prefix.to_vec(), last[0] - (d - 2) * n, last[1] - (d - 1) * n)
        })
        .collect();
    let prefix = DomainSpec::new(ring.clone(), (d - 2) * n);
    let hist = prefix.fold_shards(
        budget,
        || vec![0u64; n + 1],
        |acc, pt| {
            let mut m = crate::linalg::Matrix::zeros(n, n);
            for (c, pre, i, j) in &terms {
                let v = pre.iter().fold(*c, |t, &k| ring.mul(t, pt[k]));
                if v != 0 {
                    m.set(*i, *j, ring.add(m.get(*i, *j), v));
                }
            }
            acc[m.rank(&ring)] += 1;
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )?;
    let mut num = BigUint::zero();
    for (rank, &count) in hist.iter().enumerate() {
        num += BigUint::from(count) * BigUint::from(q).pow((n - rank) as u32);
    }
    let den = BigUint::from(q).pow(((d - 1) * n) as u32);
    Ok(BigRational::new(num.into(), den.into()))
}

/// `-log_q` of [`multilinear_bias`].
pub fn multilinear_analytic_rank(form: &MultilinearForm, budget: &Budget) -> Result<f64> {
    let b = multilinear_bias(form, budget)?;
    let q = form.poly().ring().order() as f64;
    Ok(log_rational(&b) / -q.ln())
}

/// Natural logarithm of a positive rational, accurate for huge parts.
pub fn log_rational(x: &BigRational) -> f64 {
    fn ln_big(v: &BigInt) -> f64 {
        let bits = v.bits();
        if bits < 1000 {
            v.to_f64().unwrap().ln()
        } else {
            let shift = bits - 900;
            (v >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
    ln_big(x.numer()) - ln_big(x.denom())
}
