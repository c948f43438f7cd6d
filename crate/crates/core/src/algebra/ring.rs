//! Coefficient rings: prime fields, extension fields and `Z/p^l`.
//!
//! Elements are canonical residues stored as `u32`. Extension-field elements
//! are coefficient vectors over `F_p` packed base `p` (digit `i` is the
//! coefficient of `t^i`), so the integer order of encodings is the
//! lexicographic order of coefficient vectors read from the top coefficient.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u64 = 1 << 20;
/// Largest supported exponent in `Z/p^l`.
pub const MAX_PRIME_POWER_LEVEL: u32 = 6;
const MAX_RESIDUE_MODULUS: u64 = 1 << 31;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingSpec {
    Prime { p: u32 },
    /// `F_{p^k}` as `F_p[t]/(modulus)`; `modulus` holds `k + 1` coefficients,
    /// low degree first, with a leading 1.
    Extension { p: u32, k: u32, modulus: Vec<u32> },
    PrimePower { p: u32, l: u32 },
}

impl RingSpec {
    pub fn p(&self) -> u32 {
        match *self {
            RingSpec::Prime { p } | RingSpec::Extension { p, .. } | RingSpec::PrimePower { p, .. } => p,
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingSpec::Prime { p } => write!(f, "GF({p})"),
            RingSpec::Extension { p, k, modulus } => {
                write!(f, "GF({p}^{k}, {})", format_univariate(modulus, "t"))
            }
            RingSpec::PrimePower { p, l } => write!(f, "Z/{p}^{l}"),
        }
    }
}

struct ExtTables {
    k: u32,
    /// `p^i` for `i <= k`.
    pow_p: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    /// `Tr(t^i)` for the power basis.
    trace_basis: Vec<u32>,
}

struct RingInner {
    spec: RingSpec,
    p: u32,
    order: u32,
    ext: Option<ExtTables>,
}

/// A validated coefficient ring. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Ring(Arc<RingInner>);

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}
impl Eq for Ring {}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ring({})", self.0.spec)
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.spec {
            RingSpec::Extension { p, k, .. } => write!(f, "GF({p}^{k})"),
            other => write!(f, "{other}"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Writes `n = p^e` if `n` is a prime power.
fn prime_power_parts(n: u64) -> Option<(u32, u32)> {
    if n < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= n && !n.is_multiple_of(p) {
        p += 1;
    }
    if !n.is_multiple_of(p) {
        p = n;
    }
    let mut m = n;
    let mut e = 0;
    while m.is_multiple_of(p) {
        m /= p;
        e += 1;
    }
    (m == 1).then_some((p as u32, e))
}

impl Ring {
    pub fn prime_field(p: u32) -> Result<Ring> {
        Ring::new(RingSpec::Prime { p })
    }

    /// `F_{p^k}` with the default modulus.
    pub fn extension_field(p: u32, k: u32) -> Result<Ring> {
        if k == 1 {
            return Ring::prime_field(p);
        }
        check_field_size(p, k)?;
        let modulus = least_irreducible(p, k);
        Ring::new(RingSpec::Extension { p, k, modulus })
    }

    pub fn prime_power(p: u32, l: u32) -> Result<Ring> {
        Ring::new(RingSpec::PrimePower { p, l })
    }

    /// Validates a ring description and builds its arithmetic tables.
    pub fn new(spec: RingSpec) -> Result<Ring> {
        let p = spec.p();
        if !is_prime(p as u64) {
            return Err(Error::InvalidRing(format!("{p} is not prime")));
        }
        let (order, ext) = match &spec {
            RingSpec::Prime { p } => {
                check_field_size(*p, 1)?;
                (*p, None)
            }
            RingSpec::Extension { p, k, modulus } => {
                let (p, k) = (*p, *k);
                if k < 2 {
                    return Err(Error::InvalidRing("extension degree must be at least 2".into()));
                }
                check_field_size(p, k)?;
                if modulus.len() != k as usize + 1 || modulus[k as usize] != 1 {
                    return Err(Error::InvalidRing(format!(
                        "modulus must be monic of degree {k}"
                    )));
                }
                if modulus.iter().any(|&c| c >= p) {
                    return Err(Error::InvalidRing("modulus coefficients must be reduced".into()));
                }
                if !is_irreducible(modulus, p) {
                    return Err(Error::InvalidRing(format!(
                        "{} is reducible over GF({p})",
                        format_univariate(modulus, "t")
                    )));
                }
                let tables = ExtTables::build(p, k, modulus);
                (p.pow(k), Some(tables))
            }
            RingSpec::PrimePower { p, l } => {
                if *l == 0 || *l > MAX_PRIME_POWER_LEVEL {
                    return Err(Error::InvalidRing(format!(
                        "level {l} outside supported range 1..={MAX_PRIME_POWER_LEVEL}"
                    )));
                }
                let n = (*p as u64).pow(*l);
                if n > MAX_RESIDUE_MODULUS {
                    return Err(Error::InvalidRing(format!("{p}^{l} is too large")));
                }
                (n as u32, None)
            }
        };
        Ok(Ring(Arc::new(RingInner { spec, p, order, ext })))
    }

    pub fn spec(&self) -> &RingSpec {
        &self.0.spec
    }

    /// Residue characteristic `p`.
    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }

    pub fn is_field(&self) -> bool {
        !matches!(self.0.spec, RingSpec::PrimePower { .. })
    }

    pub fn is_extension(&self) -> bool {
        self.0.ext.is_some()
    }

    /// Level `l` for `Z/p^l`, extension degree `k` for fields (1 for prime fields).
    pub fn level(&self) -> u32 {
        match self.0.spec {
            RingSpec::Prime { .. } => 1,
            RingSpec::Extension { k, .. } => k,
            RingSpec::PrimePower { l, .. } => l,
        }
    }

    /// Additive order of 1.
    pub fn characteristic(&self) -> u64 {
        match self.0.spec {
            RingSpec::PrimePower { .. } => self.0.order as u64,
            _ => self.0.p as u64,
        }
    }

    #[inline]
    pub fn zero(&self) -> u32 {
        0
    }

    #[inline]
    pub fn one(&self) -> u32 {
        1
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.0.order
    }

    pub fn from_int(&self, v: i64) -> u32 {
        let m = self.0.ext.as_ref().map_or(self.0.order, |_| self.0.p) as i64;
        v.rem_euclid(m) as u32
    }

    /// Image of a non-negative integer.
    pub fn from_u128(&self, v: u128) -> u32 {
        let m = self.0.ext.as_ref().map_or(self.0.order, |_| self.0.p) as u128;
        (v % m) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        match &self.0.ext {
            None => {
                let s = a as u64 + b as u64;
                let n = self.0.order as u64;
                (if s >= n { s - n } else { s }) as u32
            }
            Some(t) => {
                let p = self.0.p;
                if p == 2 {
                    return a ^ b;
                }
                let (mut a, mut b, mut r) = (a, b, 0u32);
                for i in 0..t.k as usize {
                    let d = (a % p + b % p) % p;
                    r += d * t.pow_p[i];
                    a /= p;
                    b /= p;
                }
                r
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        match &self.0.ext {
            None => {
                if a == 0 {
                    0
                } else {
                    self.0.order - a
                }
            }
            Some(t) => {
                let p = self.0.p;
                if p == 2 {
                    return a;
                }
                let (mut a, mut r) = (a, 0u32);
                for i in 0..t.k as usize {
                    let d = (p - a % p) % p;
                    r += d * t.pow_p[i];
                    a /= p;
                }
                r
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match &self.0.ext {
            None => ((a as u64 * b as u64) % self.0.order as u64) as u32,
            Some(t) => {
                if a == 0 || b == 0 {
                    return 0;
                }
                let m = self.0.order as usize - 1;
                let s = t.log[a as usize] as usize + t.log[b as usize] as usize;
                t.exp[if s >= m { s - m } else { s }]
            }
        }
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn is_unit(&self, a: u32) -> bool {
        match self.0.spec {
            RingSpec::PrimePower { p, .. } => !a.is_multiple_of(p),
            _ => a != 0,
        }
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if !self.is_unit(a) {
            return None;
        }
        match &self.0.ext {
            Some(t) => {
                let m = self.0.order - 1;
                Some(t.exp[((m - t.log[a as usize]) % m) as usize])
            }
            None => {
                let n = self.0.order as i64;
                let (mut r0, mut r1) = (n, a as i64);
                let (mut s0, mut s1) = (0i64, 1i64);
                while r1 != 0 {
                    let q = r0 / r1;
                    (r0, r1) = (r1, r0 - q * r1);
                    (s0, s1) = (s1, s0 - q * s1);
                }
                Some(s0.rem_euclid(n) as u32)
            }
        }
    }

    /// Square root in a field, if one exists.
    pub fn sqrt(&self, a: u32) -> Option<u32> {
        self.elements().find(|&x| self.mul(x, x) == a)
    }

    /// Coefficients of an extension element over `F_p`, low degree first.
    /// Prime fields and `Z/p^l` return the residue itself.
    pub fn digits(&self, a: u32) -> Vec<u32> {
        match &self.0.ext {
            None => vec![a],
            Some(t) => (0..t.k as usize).map(|i| (a / t.pow_p[i]) % self.0.p).collect(),
        }
    }

    pub fn from_digits(&self, digits: &[u32]) -> u32 {
        match &self.0.ext {
            None => digits.first().copied().unwrap_or(0) % self.0.order,
            Some(t) => digits
                .iter()
                .take(t.k as usize)
                .enumerate()
                .map(|(i, d)| (d % self.0.p) * t.pow_p[i])
                .sum(),
        }
    }

    /// Absolute trace to the prime field. Identity on prime fields and `Z/p^l`.
    pub fn trace_to_prime(&self, a: u32) -> u32 {
        match &self.0.ext {
            None => a,
            Some(t) => {
                let p = self.0.p as u64;
                let mut acc = 0u64;
                let mut a = a;
                for i in 0..t.k as usize {
                    acc += (a % self.0.p) as u64 * t.trace_basis[i] as u64;
                    a /= self.0.p;
                }
                (acc % p) as u32
            }
        }
    }

    /// `sum_{i<k} a^{p^i}`, computed with Frobenius powers.
    pub fn frobenius_trace(&self, a: u32) -> u32 {
        let k = self.level();
        let mut acc = 0;
        let mut x = a;
        for _ in 0..k {
            acc = self.add(acc, x);
            x = self.pow(x, self.0.p as u64);
        }
        acc
    }

    /// Denominator `N` of the standard additive character `psi(x) = e(phase(x)/N)`.
    pub fn phase_modulus(&self) -> u32 {
        match self.0.spec {
            RingSpec::PrimePower { .. } => self.0.order,
            _ => self.0.p,
        }
    }

    /// Numerator of the standard additive character: the trace for fields,
    /// the residue itself for `Z/p^l`.
    #[inline]
    pub fn phase(&self, a: u32) -> u32 {
        match &self.0.ext {
            Some(_) => self.trace_to_prime(a),
            None => a,
        }
    }

    pub fn psi(&self, a: u32) -> Complex64 {
        root_of_unity(self.phase(a) as u64, self.phase_modulus() as u64)
    }

    /// Reduction `Z/p^l -> F_p`; identity on fields.
    pub fn residue_field(&self) -> Result<Ring> {
        match self.0.spec {
            RingSpec::PrimePower { p, .. } => Ring::prime_field(p),
            _ => Ok(self.clone()),
        }
    }

    pub fn format_elem(&self, a: u32) -> String {
        match &self.0.ext {
            Some(_) if a >= self.0.p => format_univariate(&self.digits(a), "t"),
            _ => a.to_string(),
        }
    }
}

/// `e^{2 pi i num / den}`.
pub fn root_of_unity(num: u64, den: u64) -> Complex64 {
    let num = num % den;
    if num == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * num == den {
        return Complex64::new(-1.0, 0.0);
    }
    let theta = 2.0 * std::f64::consts::PI * num as f64 / den as f64;
    Complex64::new(theta.cos(), theta.sin())
}

fn check_field_size(p: u32, k: u32) -> Result<()> {
    let q = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
    if q > MAX_FIELD_ORDER {
        return Err(Error::InvalidRing(format!(
            "field of order {p}^{k} exceeds the supported maximum 2^20"
        )));
    }
    Ok(())
}

// Univariate polynomials over F_p, low degree first.

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn upoly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let p64 = p as u64;
    let mut r = trim(a.to_vec());
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    let lead_inv = modinv(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let factor = (r[dr] as u64 * lead_inv as u64) % p64;
        for (i, &bc) in b.iter().enumerate() {
            let idx = dr - db + i;
            r[idx] = ((r[idx] as u64 + p64 * p64 - factor * bc as u64) % p64) as u32;
        }
        r = trim(r);
    }
    r
}

fn upoly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|v| v as u32).collect();
    upoly_rem(&prod, modulus, p)
}

fn modinv(a: u32, p: u32) -> u32 {
    let mut acc = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p as u64 - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

/// Irreducibility over `F_p` by trial division with every monic polynomial
/// of degree at most half the degree.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let f = trim(f.to_vec());
    if f.len() < 2 {
        return false;
    }
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for enc in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut e = enc;
            for _ in 0..d {
                g.push((e % p as u64) as u32);
                e /= p as u64;
            }
            g.push(1);
            if upoly_rem(&f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The monic irreducible polynomial of degree `k` whose lower coefficients,
/// read as a base-`p` number with the constant term least significant, are smallest.
pub fn least_irreducible(p: u32, k: u32) -> Vec<u32> {
    let count = (p as u64).pow(k);
    for enc in 0..count {
        let mut f = Vec::with_capacity(k as usize + 1);
        let mut e = enc;
        for _ in 0..k {
            f.push((e % p as u64) as u32);
            e /= p as u64;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl ExtTables {
    fn build(p: u32, k: u32, modulus: &[u32]) -> ExtTables {
        let q = p.pow(k) as usize;
        let pow_p: Vec<u32> = (0..=k).map(|i| p.pow(i)).collect();
        let to_digits = |x: usize| -> Vec<u32> {
            (0..k as usize).map(|i| ((x as u32) / pow_p[i]) % p).collect()
        };
        let encode = |d: &[u32]| -> u32 { d.iter().enumerate().map(|(i, &c)| c * pow_p[i]).sum() };
        let upow = |base: &[u32], mut e: u64| -> Vec<u32> {
            let mut acc = vec![1u32];
            let mut b = base.to_vec();
            while e > 0 {
                if e & 1 == 1 {
                    acc = upoly_mulmod(&acc, &b, modulus, p);
                }
                b = upoly_mulmod(&b, &b, modulus, p);
                e >>= 1;
            }
            acc
        };
        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let generator = (2..q)
            .map(to_digits)
            .find(|g| factors.iter().all(|r| trim(upow(g, order / r)) != vec![1]))
            .expect("multiplicative group is cyclic");

        let mut exp = vec![0u32; q - 1];
        let mut log = vec![0u32; q];
        let mut cur = vec![1u32];
        for (i, slot) in exp.iter_mut().enumerate() {
            let mut d = trim(cur.clone());
            d.resize(k as usize, 0);
            let e = encode(&d);
            *slot = e;
            log[e as usize] = i as u32;
            cur = upoly_mulmod(&cur, &generator, modulus, p);
        }

        let mut tables = ExtTables {
            k,
            pow_p,
            exp,
            log,
            trace_basis: Vec::new(),
        };
        tables.trace_basis = (0..k as usize)
            .map(|i| {
                let basis = tables.pow_p[i];
                let t = tables.frobenius_sum(basis, p, q as u32);
                debug_assert!(t < p, "trace must lie in the prime field");
                t
            })
            .collect();
        tables
    }

    fn frobenius_sum(&self, a: u32, p: u32, q: u32) -> u32 {
        let m = q - 1;
        let add = |x: u32, y: u32| -> u32 {
            if p == 2 {
                return x ^ y;
            }
            let (mut x, mut y, mut r) = (x, y, 0);
            for i in 0..self.k as usize {
                r += ((x % p + y % p) % p) * self.pow_p[i];
                x /= p;
                y /= p;
            }
            r
        };
        let mut acc = 0;
        let mut x = a;
        for _ in 0..self.k {
            acc = add(acc, x);
            x = if x == 0 {
                0
            } else {
                self.exp[((self.log[x as usize] as u64 * p as u64) % m as u64) as usize]
            };
        }
        acc
    }
}

pub fn format_univariate(coeffs: &[u32], var: &str) -> String {
    let mut parts = Vec::new();
    for (e, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let mono = match e {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{e}"),
        };
        parts.push(match (c, mono.is_empty()) {
            (_, true) => c.to_string(),
            (1, false) => mono,
            (_, false) => format!("{c}*{mono}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// Parses a univariate polynomial in `var` with integer coefficients reduced mod `p`.
pub fn parse_univariate(text: &str, var: char, p: u32) -> Result<Vec<u32>> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::parse(0, "empty polynomial"));
    }
    let mut coeffs: Vec<i64> = Vec::new();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let mut sign = 1i64;
        if bytes[i] == '+' || bytes[i] == '-' {
            if bytes[i] == '-' {
                sign = -1;
            }
            i += 1;
        } else if i != 0 {
            return Err(Error::parse(i, "expected '+' or '-'"));
        }
        let mut coef: Option<i64> = None;
        let num_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i > num_start {
            let digits: String = bytes[num_start..i].iter().collect();
            coef = Some(digits.parse().map_err(|_| Error::parse(num_start, "bad integer"))?);
            if i < bytes.len() && bytes[i] == '*' {
                i += 1;
            }
        }
        let mut exp = 0usize;
        if i < bytes.len() && bytes[i] == var {
            i += 1;
            exp = 1;
            if i < bytes.len() && bytes[i] == '^' {
                i += 1;
                let es = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if es == i {
                    return Err(Error::parse(es, "malformed exponent"));
                }
                let digits: String = bytes[es..i].iter().collect();
                exp = digits.parse().map_err(|_| Error::parse(es, "malformed exponent"))?;
            }
        } else if coef.is_none() {
            return Err(Error::parse(start, format!("expected a coefficient or '{var}'")));
        }
        if coeffs.len() <= exp {
            coeffs.resize(exp + 1, 0);
        }
        coeffs[exp] += sign * coef.unwrap_or(1);
    }
    Ok(trim(
        coeffs
            .into_iter()
            .map(|c| c.rem_euclid(p as i64) as u32)
            .collect(),
    ))
}

/// Parses `GF(p)`, `GF(q)`, `GF(p^k)`, `GF(p^k, <modulus in t>)`, `Z/n` or `Z/p^l`.
pub fn ring_from_text(text: &str) -> Result<Ring> {
    let s = text.trim();
    let parse_power = |body: &str| -> Result<(u32, u32)> {
        let body = body.trim();
        if let Some((base, exp)) = body.split_once('^') {
            let p: u64 = base.trim().parse().map_err(|_| Error::InvalidRing(format!("bad base in {s:?}")))?;
            let e: u32 = exp.trim().parse().map_err(|_| Error::InvalidRing(format!("bad exponent in {s:?}")))?;
            if !is_prime(p) {
                return Err(Error::InvalidRing(format!("{p} is not prime")));
            }
            if e == 0 {
                return Err(Error::InvalidRing("exponent must be positive".into()));
            }
            Ok((p as u32, e))
        } else {
            let n: u64 = body.parse().map_err(|_| Error::InvalidRing(format!("bad size in {s:?}")))?;
            let (p, e) = prime_power_parts(n)
                .ok_or_else(|| Error::InvalidRing(format!("{n} is not a prime power")))?;
            if e > 1 && n > u32::MAX as u64 {
                return Err(Error::InvalidRing(format!("{n} is too large")));
            }
            Ok((p, e))
        }
    };
    if let Some(rest) = s.strip_prefix("GF(").and_then(|r| r.strip_suffix(')')) {
        let (size, modulus) = match rest.split_once(',') {
            Some((a, b)) => (a, Some(b)),
            None => (rest, None),
        };
        let (p, k) = parse_power(size)?;
        if k > 20 {
            return Err(Error::InvalidRing(format!("extension degree {k} too large")));
        }
        return match (k, modulus) {
            (1, None) => Ring::prime_field(p),
            (1, Some(_)) => Err(Error::InvalidRing("prime fields take no modulus".into())),
            (_, None) => Ring::extension_field(p, k),
            (_, Some(m)) => {
                check_field_size(p, k)?;
                let mut modulus = parse_univariate(m, 't', p)?;
                if modulus.len() != k as usize + 1 {
                    return Err(Error::InvalidRing(format!("modulus must have degree {k}")));
                }
                let lead_inv = modinv(modulus[k as usize], p);
                for c in modulus.iter_mut() {
                    *c = ((*c as u64 * lead_inv as u64) % p as u64) as u32;
                }
                Ring::new(RingSpec::Extension { p, k, modulus })
            }
        };
    }
    if let Some(rest) = s.strip_prefix("Z/") {
        let (p, l) = parse_power(rest)?;
        return Ring::prime_power(p, l);
    }
    Err(Error::InvalidRing(format!(
        "{s:?} does not match GF(p), GF(p^k) or Z/p^l"
    )))
}
