//! Sparse multivariate polynomials and the difference calculus on them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};


use crate::algebra::{parse_univariate, Ring, RingSpec};
use crate::error::{Error, Result};

/// Exponent vector, one entry per variable.
pub type Exponents = Vec<u16>;

/// A polynomial in `n` variables over `ring`, stored as a map from exponent
/// vectors to nonzero coefficients. The map is ordered lexicographically
/// with `x1` most significant.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    ring: Ring,
    n: usize,
    terms: BTreeMap<Exponents, u32>,
}

fn total(e: &[u16]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

impl MultiPoly {
    pub fn zero(ring: &Ring, n: usize) -> Self {
        MultiPoly {
            ring: ring.clone(),
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: &Ring, n: usize, c: u32) -> Self {
        let mut p = Self::zero(ring, n);
        if c != 0 {
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    /// The variable `x_{i+1}` (zero-based index `i`).
    pub fn var(ring: &Ring, n: usize, i: usize) -> Self {
        assert!(i < n, "variable index out of range");
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(ring, e, 1)
    }

    pub fn monomial(ring: &Ring, exps: Exponents, c: u32) -> Self {
        let n = exps.len();
        let mut p = Self::zero(ring, n);
        if c != 0 {
            p.terms.insert(exps, c);
        }
        p
    }

    /// Builds a polynomial from terms, merging repeated monomials.
    pub fn from_terms(ring: &Ring, n: usize, terms: impl IntoIterator<Item = (Exponents, u32)>) -> Self {
        let mut p = Self::zero(ring, n);
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: u32) {
        if c == 0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = self.ring.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// `sum_i coeffs[i] x_{i+1} + constant`.
    pub fn linear(ring: &Ring, coeffs: &[u32], constant: u32) -> Self {
        let n = coeffs.len();
        let mut p = Self::constant(ring, n, constant);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, c);
        }
        p
    }

    /// Keeps only the variables listed in `vars`, which must cover the support.
    pub fn project(&self, vars: &[usize]) -> Self {
        let mut out = Self::zero(&self.ring, vars.len());
        for (e, &c) in &self.terms {
            debug_assert!(e.iter().enumerate().all(|(i, &k)| k == 0 || vars.contains(&i)));
            out.terms.insert(vars.iter().map(|&i| e[i]).collect(), c);
        }
        out
    }

    /// Inverse of [`MultiPoly::project`]: variable `j` becomes `x_{vars[j]+1}` of `n`.
    pub fn lift(&self, vars: &[usize], n: usize) -> Self {
        let mut out = Self::zero(&self.ring, n);
        for (e, &c) in &self.terms {
            let mut ne = vec![0; n];
            for (j, &k) in e.iter().enumerate() {
                ne[vars[j]] = k;
            }
            out.terms.insert(ne, c);
        }
        out
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponents, u32)> + '_ {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` stands for the degree of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| total(e)).max()
    }

    pub fn coeff(&self, exps: &[u16]) -> u32 {
        self.terms.get(exps).copied().unwrap_or(0)
    }

    /// Constant term.
    pub fn constant_term(&self) -> u32 {
        self.coeff(&vec![0; self.n])
    }

    /// Largest monomial in lexicographic order, with its coefficient.
    pub fn leading_term(&self) -> Option<(&Exponents, u32)> {
        self.terms.iter().next_back().map(|(e, &c)| (e, c))
    }

    pub fn homogeneous_part(&self, d: usize) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| total(e) == d);
        MultiPoly {
            ring: self.ring.clone(),
            n: self.n,
            terms: terms.map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }

    /// Indices of variables that occur in some term.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.terms.keys().any(|e| e[i] > 0))
            .collect()
    }

    pub fn scale(&self, c: u32) -> Self {
        let mut out = Self::zero(&self.ring, self.n);
        if c == 0 {
            return out;
        }
        for (e, &v) in &self.terms {
            out.add_term(e.clone(), self.ring.mul(v, c));
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(&self.ring, self.n, 1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn evaluate(&self, point: &[u32]) -> u32 {
        assert_eq!(point.len(), self.n, "point dimension");
        let r = &self.ring;
        self.terms.iter().fold(0, |acc, (e, &c)| {
            let t = e
                .iter()
                .zip(point)
                .filter(|(&k, _)| k > 0)
                .fold(c, |t, (&k, &x)| r.mul(t, r.pow(x, k as u64)));
            r.add(acc, t)
        })
    }

    /// Substitutes `x_i -> images[i]`; all images share one variable count.
    pub fn substitute(&self, images: &[MultiPoly]) -> Self {
        assert_eq!(images.len(), self.n, "one image per variable");
        let target_n = images.first().map_or(0, |p| p.n);
        let max_exp: Vec<u16> = (0..self.n)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<MultiPoly>> = images
            .iter()
            .zip(&max_exp)
            .map(|(img, &m)| {
                let mut v = vec![Self::constant(&self.ring, target_n, 1)];
                for k in 1..=m as usize {
                    let next = &v[k - 1] * img;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(&self.ring, target_n);
        for (e, &c) in &self.terms {
            let mut t = Self::constant(&self.ring, target_n, c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[i][k as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Re-indexes into `new_n` variables, sending `x_i` to `x_{i+offset}`.
    pub fn embed(&self, new_n: usize, offset: usize) -> Self {
        assert!(offset + self.n <= new_n);
        let mut out = Self::zero(&self.ring, new_n);
        for (e, &c) in &self.terms {
            let mut ne = vec![0; new_n];
            ne[offset..offset + self.n].copy_from_slice(e);
            out.terms.insert(ne, c);
        }
        out
    }

    /// Keeps variables `range`, which must contain every occurring variable.
    pub fn restrict_vars(&self, range: std::ops::Range<usize>) -> Option<Self> {
        let mut out = Self::zero(&self.ring, range.len());
        for (e, &c) in &self.terms {
            if e.iter().enumerate().any(|(i, &k)| k > 0 && !range.contains(&i)) {
                return None;
            }
            out.terms.insert(e[range.clone()].to_vec(), c);
        }
        Some(out)
    }

    /// Formal partial derivative in `x_{i+1}`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.ring, self.n);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] -= 1;
            let k = self.ring.from_int(e[i] as i64);
            out.add_term(ne, self.ring.mul(c, k));
        }
        out
    }

    /// Coefficientwise image under a ring map.
    pub fn map_coeffs(&self, target: &Ring, f: impl Fn(u32) -> u32) -> Self {
        let mut out = Self::zero(target, self.n);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Exact quotient `self / divisor` if it exists. Uses lexicographic
    /// division; the divisor's leading coefficient must be a unit.
    pub fn divide_exact(&self, divisor: &MultiPoly) -> Option<MultiPoly> {
        let (lm, lc) = divisor.leading_term()?;
        let lc_inv = self.ring.inv(lc)?;
        let lm = lm.clone();
        let mut rem = self.clone();
        let mut quot = Self::zero(&self.ring, self.n);
        while let Some((m, c)) = rem.leading_term() {
            if m.iter().zip(&lm).any(|(a, b)| a < b) {
                return None;
            }
            let e: Exponents = m.iter().zip(&lm).map(|(a, b)| a - b).collect();
            let t = Self::monomial(&self.ring, e, self.ring.mul(c, lc_inv));
            rem = &rem - &(&t * divisor);
            quot = &quot + &t;
        }
        Some(quot)
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, &c)| {
                    let factors = e
                        .iter()
                        .enumerate()
                        .filter(|(_, &k)| k > 0)
                        .map(|(i, &k)| (i, k as u64))
                        .collect();
                    (c, factors)
                })
                .collect(),
        }
    }

    /// Random polynomial with every monomial of degree `<= max_degree`
    /// present independently with probability `density`.
    pub fn random<R: rand::Rng>(ring: &Ring, n: usize, max_degree: usize, density: f64, rng: &mut R) -> Self {
        let mut out = Self::zero(ring, n);
        for e in monomials_up_to(n, max_degree) {
            if rng.gen_bool(density) {
                out.add_term(e, rng.gen_range(1..ring.order()));
            }
        }
        out
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n, rhs.n, "variable count mismatch");
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.map_coeffs(&self.ring, |c| self.ring.neg(c))
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n, rhs.n, "variable count mismatch");
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), self.ring.neg(c));
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n, rhs.n, "variable count mismatch");
        let r = &self.ring;
        let mut out = MultiPoly::zero(r, self.n);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, r.mul(ca, cb));
            }
        }
        out
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}; {}]({})", self.ring, self.n, self)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Exponents, u32)> = self.terms.iter().map(|(e, &c)| (e, c)).collect();
        ordered.sort_by(|a, b| total(b.0).cmp(&total(a.0)).then_with(|| b.0.cmp(a.0)));
        let mut first = true;
        for (e, c) in ordered {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, k) })
                .collect();
            let coeff = if self.ring.is_extension() && c >= self.ring.p() {
                format!("({})", self.ring.format_elem(c))
            } else {
                c.to_string()
            };
            match (factors.is_empty(), c) {
                (true, _) => write!(f, "{coeff}")?,
                (false, 1) => write!(f, "{}", factors.join("*"))?,
                (false, _) => write!(f, "{coeff}*{}", factors.join("*"))?,
            }
        }
        Ok(())
    }
}

/// A polynomial flattened for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    ring: Ring,
    terms: Vec<(u32, Vec<(usize, u64)>)>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, point: &[u32]) -> u32 {
        let r = &self.ring;
        let mut acc = 0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(i, k) in factors {
                let x = point[i];
                t = r.mul(t, if k == 1 { x } else { r.pow(x, k) });
            }
            acc = r.add(acc, t);
        }
        acc
    }
}

/// All exponent vectors in `n` variables of total degree `<= d`, ordered by
/// degree and then lexicographically (`x1` first).
pub fn monomials_up_to(n: usize, d: usize) -> Vec<Exponents> {
    fn rec(n: usize, left: usize, cur: &mut Exponents, out: &mut Vec<Exponents>) {
        if cur.len() == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k as u16);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=d {
        rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// Parses `x1*x2 + 2*x3^2 - x4`. A term is a `*`-separated product of
/// integers, variables `x<i>` with optional `^e`, and, for extension fields,
/// parenthesised field elements written in `t`.
pub fn parse_poly(text: &str, ring: &Ring, n: usize) -> Result<MultiPoly> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let read_int = |pos: &mut usize| -> Option<u64> {
        let start = *pos;
        while *pos < chars.len() && chars[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return None;
        }
        chars[start..*pos].iter().collect::<String>().parse().ok()
    };
    let reduce_int = |v: u64| -> u32 { ring.from_u128(v as u128) };

    let mut out = MultiPoly::zero(ring, n);
    skip_ws(&mut pos);
    if pos == chars.len() {
        return Err(Error::parse(0, "empty polynomial"));
    }
    let mut first = true;
    loop {
        skip_ws(&mut pos);
        if pos == chars.len() {
            break;
        }
        let mut negate = false;
        match chars[pos] {
            '+' => pos += 1,
            '-' => {
                negate = true;
                pos += 1;
            }
            _ if first => {}
            c => return Err(Error::parse(pos, format!("expected '+' or '-', found {c:?}"))),
        }
        first = false;
        let mut coeff = 1u32;
        let mut exps: Exponents = vec![0; n];
        loop {
            skip_ws(&mut pos);
            if pos == chars.len() {
                return Err(Error::parse(pos, "expected a factor"));
            }
            let c = chars[pos];
            if c.is_ascii_digit() {
                let at = pos;
                let v = read_int(&mut pos).ok_or_else(|| Error::parse(at, "integer too large"))?;
                coeff = ring.mul(coeff, reduce_int(v));
            } else if c == 'x' {
                let at = pos;
                pos += 1;
                let idx = read_int(&mut pos).ok_or_else(|| Error::parse(pos, "expected variable index"))?;
                if idx == 0 || idx as usize > n {
                    return Err(Error::parse(at, format!("unknown variable x{idx} (have {n})")));
                }
                let mut e = 1u64;
                skip_ws(&mut pos);
                if pos < chars.len() && chars[pos] == '^' {
                    pos += 1;
                    skip_ws(&mut pos);
                    e = read_int(&mut pos).ok_or_else(|| Error::parse(pos, "malformed exponent"))?;
                    if e > u16::MAX as u64 / 2 {
                        return Err(Error::parse(pos, "exponent too large"));
                    }
                }
                exps[idx as usize - 1] += e as u16;
            } else if c == '(' && ring.is_extension() {
                let at = pos;
                let close = chars[pos..]
                    .iter()
                    .position(|&ch| ch == ')')
                    .ok_or_else(|| Error::parse(at, "unclosed '('"))?;
                let inner: String = chars[pos + 1..pos + close].iter().collect();
                let digits = parse_univariate(&inner, 't', ring.p()).map_err(|e| match e {
                    Error::Parse { position, message } => Error::parse(at + 1 + position, message),
                    other => other,
                })?;
                if digits.len() > ring.level() as usize {
                    return Err(Error::parse(at, "field element must be reduced below the modulus degree"));
                }
                coeff = ring.mul(coeff, ring.from_digits(&digits));
                pos += close + 1;
            } else {
                return Err(Error::parse(pos, format!("unexpected character {c:?}")));
            }
            skip_ws(&mut pos);
            if pos < chars.len() && chars[pos] == '*' {
                pos += 1;
                continue;
            }
            break;
        }
        if negate {
            coeff = ring.neg(coeff);
        }
        out.add_term(exps, coeff);
    }
    Ok(out)
}

/// `P(x + h) - P(x)`.
pub fn delta(p: &MultiPoly, h: &[u32]) -> MultiPoly {
    assert_eq!(h.len(), p.n);
    let images: Vec<MultiPoly> = (0..p.n)
        .map(|i| &MultiPoly::var(&p.ring, p.n, i) + &MultiPoly::constant(&p.ring, p.n, h[i]))
        .collect();
    &p.substitute(&images) - p
}

/// `Delta_{h_1} ... Delta_{h_m} P(x)` as a polynomial in `(m + 1) n`
/// variables: `x` first, then the blocks `h_1, ..., h_m`.
pub fn iterated_difference(p: &MultiPoly, m: usize) -> MultiPoly {
    let n = p.n;
    let total_n = (m + 1) * n;
    let mut cur = p.embed(total_n, 0);
    for j in 1..=m {
        let images: Vec<MultiPoly> = (0..total_n)
            .map(|i| {
                let v = MultiPoly::var(&p.ring, total_n, i);
                if i < n {
                    &v + &MultiPoly::var(&p.ring, total_n, j * n + i)
                } else {
                    v
                }
            })
            .collect();
        cur = &cur.substitute(&images) - &cur;
    }
    cur
}

/// The symmetric multilinear form `P~(h_1..h_d) = Delta_{h_1}..Delta_{h_d} P`,
/// stored as a polynomial in `d` blocks of `n` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearForm {
    poly: MultiPoly,
    d: usize,
    n: usize,
}

impl MultilinearForm {
    /// Wraps a polynomial already laid out in `d` blocks of `n` variables.
    pub fn from_blocks(poly: MultiPoly, d: usize, n: usize) -> Result<Self> {
        if poly.nvars() != d * n {
            return Err(Error::precondition("form must have d*n variables"));
        }
        let form = MultilinearForm { poly, d, n };
        if !form.is_multilinear() {
            return Err(Error::precondition("polynomial is not multilinear in its blocks"));
        }
        Ok(form)
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn into_poly(self) -> MultiPoly {
        self.poly
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Each monomial uses exactly one variable, to the first power, from every block.
    pub fn is_multilinear(&self) -> bool {
        self.poly.terms().all(|(e, _)| {
            (0..self.d).all(|b| {
                let block = &e[b * self.n..(b + 1) * self.n];
                block.iter().filter(|&&k| k == 1).count() == 1 && block.iter().all(|&k| k <= 1)
            })
        })
    }

    pub fn evaluate_blocks(&self, blocks: &[Vec<u32>]) -> u32 {
        assert_eq!(blocks.len(), self.d);
        let flat: Vec<u32> = blocks.iter().flatten().copied().collect();
        self.poly.evaluate(&flat)
    }
}

pub fn multilinear_form(p: &MultiPoly) -> Result<MultilinearForm> {
    let d = p
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::precondition("multilinear form needs degree >= 1"))?;
    let n = p.n;
    let full = iterated_difference(p, d);
    let poly = full.restrict_vars(n..(d + 1) * n).ok_or_else(|| {
        Error::IdentityViolation("d-th iterated difference still depends on x".into())
    })?;
    Ok(MultilinearForm { poly, d, n })
}

/// Coefficientwise reduction `Z/p^l -> F_p`.
pub fn reduce_mod_p(p: &MultiPoly) -> Result<MultiPoly> {
    match p.ring.spec() {
        RingSpec::PrimePower { p: prime, .. } => {
            let prime = *prime;
            let field = Ring::prime_field(prime)?;
            Ok(p.map_coeffs(&field, |c| c % prime))
        }
        _ => Err(Error::precondition("reduction mod p needs a Z/p^l polynomial")),
    }
}

/// `sum_j v_j dP/dx_j`.
pub fn directional_derivative(p: &MultiPoly, v: &[u32]) -> Result<MultiPoly> {
    assert_eq!(v.len(), p.n);
    let degree = p.degree().unwrap_or(0);
    let characteristic = p.ring.characteristic();
    if characteristic <= degree as u64 {
        return Err(Error::UnsupportedCharacteristic { characteristic, degree });
    }
    Ok((0..p.n).fold(MultiPoly::zero(&p.ring, p.n), |acc, j| {
        &acc + &p.partial(j).scale(v[j])
    }))
}

/// `Q_m = sum_{i<m} prod_{j<d} x_{i d + j + 1}` in `d m` variables.
pub fn build_qm(d: usize, m: usize, ring: &Ring) -> MultiPoly {
    let n = d * m;
    MultiPoly::from_terms(
        ring,
        n,
        (0..m).map(|i| {
            let mut e = vec![0; n];
            e[i * d..(i + 1) * d].iter_mut().for_each(|k| *k = 1);
            (e, 1)
        }),
    )
}

/// A tuple `(P_1, ..., P_c)` viewed as a map `R^n -> R^c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyCollection {
    polys: Vec<MultiPoly>,
    degrees: Vec<usize>,
}

impl PolyCollection {
    /// Collection with degree vector equal to the actual degrees.
    pub fn new(polys: Vec<MultiPoly>) -> Result<Self> {
        let degrees = polys.iter().map(|p| p.degree().unwrap_or(0)).collect();
        Self::with_degrees(polys, degrees)
    }

    pub fn with_degrees(polys: Vec<MultiPoly>, degrees: Vec<usize>) -> Result<Self> {
        let first = polys
            .first()
            .ok_or_else(|| Error::precondition("a collection needs at least one polynomial"))?;
        if degrees.len() != polys.len() {
            return Err(Error::precondition("one degree per polynomial"));
        }
        for (p, &d) in polys.iter().zip(&degrees) {
            if p.ring() != first.ring() || p.nvars() != first.nvars() {
                return Err(Error::precondition("polynomials must share ring and variable count"));
            }
            if p.degree().unwrap_or(0) > d {
                return Err(Error::precondition(format!("{p} exceeds its declared degree {d}")));
            }
        }
        Ok(PolyCollection { polys, degrees })
    }

    pub fn single(p: MultiPoly) -> Self {
        Self::new(vec![p]).expect("one polynomial")
    }

    pub fn polys(&self) -> &[MultiPoly] {
        &self.polys
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Whether each polynomial attains its declared degree.
    pub fn exact_degrees(&self) -> Vec<bool> {
        self.polys
            .iter()
            .zip(&self.degrees)
            .map(|(p, &d)| p.degree().unwrap_or(0) == d)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn ring(&self) -> &Ring {
        self.polys[0].ring()
    }

    pub fn nvars(&self) -> usize {
        self.polys[0].nvars()
    }

    /// `D = prod d_i`.
    pub fn degree_product(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).product()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// `P_a = sum_i a_i P_i`.
    pub fn combination(&self, a: &[u32]) -> MultiPoly {
        assert_eq!(a.len(), self.polys.len());
        self.polys
            .iter()
            .zip(a)
            .fold(MultiPoly::zero(self.ring(), self.nvars()), |acc, (p, &c)| &acc + &p.scale(c))
    }

    pub fn compile(&self) -> Vec<CompiledPoly> {
        self.polys.iter().map(MultiPoly::compile).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(s: &str) -> Ring {
        ring_from_text(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        let r = gf("GF(3)");
        assert_eq!(parse_poly("x1*x2 + 2*x3^2", &r, 3).unwrap().num_terms(), 2);
        assert!(parse_poly("3*x1", &r, 3).unwrap().is_zero());
        let p = parse_poly("x1*x1", &r, 1).unwrap();
        assert_eq!(p.coeff(&[2]), 1);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(parse_poly("-x1 + 1", &r, 1).unwrap().coeff(&[1]), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        let r = gf("GF(5)");
        match parse_poly("x1 + x4", &r, 3) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_poly("x1^", &r, 1), Err(Error::Parse { .. })));
        assert!(matches!(parse_poly("x1 x2", &r, 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_poly("", &r, 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_poly("y1", &r, 2), Err(Error::Parse { .. })));
    }

    #[test]
    fn extension_coefficients_round_trip() {
        let r = gf("GF(4)");
        let p = parse_poly("(t+1)*x1^2 + (t)*x2 + 1", &r, 2).unwrap();
        let q = parse_poly(&p.to_string(), &r, 2).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn evaluate_examples() {
        let r2 = gf("GF(2)");
        assert_eq!(parse_poly("x1*x2", &r2, 2).unwrap().evaluate(&[1, 1]), 1);
        let r3 = gf("GF(3)");
        assert_eq!(parse_poly("x1^2", &r3, 1).unwrap().evaluate(&[2]), 1);
        let p = parse_poly("x1*x2+2*x3^2*x4", &r3, 4).unwrap();
        assert_eq!(p.evaluate(&[1, 2, 1, 1]), 1);
    }

    #[test]
    fn delta_examples() {
        let r5 = gf("GF(5)");
        let p = parse_poly("x1^2", &r5, 1).unwrap();
        assert_eq!(delta(&p, &[1]), parse_poly("2*x1 + 1", &r5, 1).unwrap());
        let lin = parse_poly("3*x1 + 2*x2 + 4", &r5, 2).unwrap();
        let d = delta(&lin, &[2, 3]);
        assert_eq!(d, MultiPoly::constant(&r5, 2, lin.evaluate(&[2, 3]) + 5 - lin.evaluate(&[0, 0])).scale(1));
        let r7 = gf("GF(7)");
        let p = parse_poly("x1*x2*x3", &r7, 3).unwrap();
        assert_eq!(delta(&p, &[1, 0, 0]), parse_poly("x2*x3", &r7, 3).unwrap());
    }

    #[test]
    fn multilinear_form_examples() {
        let r5 = gf("GF(5)");
        let f = multilinear_form(&parse_poly("x1^2", &r5, 1).unwrap()).unwrap();
        assert_eq!(f.poly(), &parse_poly("2*x1*x2", &r5, 2).unwrap());
        let f = multilinear_form(&parse_poly("x1*x2", &r5, 2).unwrap()).unwrap();
        // blocks (h1_1, h1_2, h2_1, h2_2) = (x1, x2, x3, x4)
        assert_eq!(f.poly(), &parse_poly("x1*x4 + x2*x3", &r5, 4).unwrap());
        let g = multilinear_form(&parse_poly("x1^2 + x1", &r5, 1).unwrap()).unwrap();
        assert_eq!(g, multilinear_form(&parse_poly("x1^2", &r5, 1).unwrap()).unwrap());
        assert!(multilinear_form(&MultiPoly::constant(&r5, 2, 3)).is_err());
    }

    #[test]
    fn reduce_examples() {
        let z9 = gf("Z/9");
        let f3 = gf("GF(3)");
        assert_eq!(reduce_mod_p(&parse_poly("3*x1 + 1", &z9, 1).unwrap()).unwrap(), MultiPoly::constant(&f3, 1, 1));
        assert!(reduce_mod_p(&MultiPoly::zero(&z9, 1)).unwrap().is_zero());
        let z4 = gf("Z/4");
        let f2 = gf("GF(2)");
        assert_eq!(
            reduce_mod_p(&parse_poly("x1^2 + 4*x1", &z4, 1).unwrap()).unwrap(),
            parse_poly("x1^2", &f2, 1).unwrap()
        );
        assert!(reduce_mod_p(&MultiPoly::zero(&f2, 1)).is_err());
    }

    #[test]
    fn directional_derivative_examples() {
        let r5 = gf("GF(5)");
        assert_eq!(
            directional_derivative(&parse_poly("x1^2", &r5, 1).unwrap(), &[1]).unwrap(),
            parse_poly("2*x1", &r5, 1).unwrap()
        );
        assert_eq!(
            directional_derivative(&parse_poly("x1*x2", &r5, 2).unwrap(), &[0, 1]).unwrap(),
            parse_poly("x1", &r5, 2).unwrap()
        );
        let r7 = gf("GF(7)");
        assert_eq!(
            directional_derivative(&parse_poly("x1^3+x2^3", &r7, 2).unwrap(), &[1, 1]).unwrap(),
            parse_poly("3*x1^2+3*x2^2", &r7, 2).unwrap()
        );
        let r2 = gf("GF(2)");
        assert!(matches!(
            directional_derivative(&parse_poly("x1^2", &r2, 1).unwrap(), &[1]),
            Err(Error::UnsupportedCharacteristic { .. })
        ));
    }

    #[test]
    fn qm_examples() {
        let r = gf("GF(5)");
        assert_eq!(build_qm(2, 1, &r), parse_poly("x1*x2", &r, 2).unwrap());
        assert_eq!(build_qm(3, 2, &r), parse_poly("x1*x2*x3 + x4*x5*x6", &r, 6).unwrap());
        assert_eq!(build_qm(1, 2, &r), parse_poly("x1 + x2", &r, 2).unwrap());
    }

    #[test]
    fn exact_division() {
        let r = gf("GF(3)");
        let a = parse_poly("x1 + 2*x2 + 1", &r, 3).unwrap();
        let b = parse_poly("x1*x3 + x2^2 + 2", &r, 3).unwrap();
        assert_eq!((&a * &b).divide_exact(&a), Some(b.clone()));
        assert!((&(&a * &b) + &MultiPoly::constant(&r, 3, 1)).divide_exact(&a).is_none());
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials_up_to(3, 2).len(), 10);
        assert_eq!(monomials_up_to(2, 0), vec![vec![0, 0]]);
    }

    fn arb_case() -> impl Strategy<Value = (&'static str, u64, usize)> {
        (prop::sample::select(vec!["GF(2)", "GF(3)", "GF(5)", "GF(4)", "Z/9", "Z/4"]), any::<u64>(), 1usize..4)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delta_commutes((desc, seed, n) in arb_case()) {
            let r = gf(desc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 3, 0.4, &mut rng);
            let h: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            let g: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            prop_assert_eq!(delta(&delta(&p, &h), &g), delta(&delta(&p, &g), &h));
            if let Some(d) = p.degree() {
                prop_assert!(delta(&p, &h).degree().is_none_or(|e| e < d));
            }
        }

        #[test]
        fn delta_matches_pointwise_difference((desc, seed, n) in arb_case()) {
            let r = gf(desc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 3, 0.5, &mut rng);
            let h: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            let xh: Vec<u32> = x.iter().zip(&h).map(|(&a, &b)| r.add(a, b)).collect();
            prop_assert_eq!(delta(&p, &h).evaluate(&x), r.sub(p.evaluate(&xh), p.evaluate(&x)));
        }

        #[test]
        fn reduction_commutes_with_delta(seed in any::<u64>(), n in 1usize..4, l in 1u32..4) {
            let r = Ring::prime_power(3, l).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 3, 0.5, &mut rng);
            let h: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            let h_mod: Vec<u32> = h.iter().map(|&v| v % 3).collect();
            prop_assert_eq!(
                reduce_mod_p(&delta(&p, &h)).unwrap(),
                delta(&reduce_mod_p(&p).unwrap(), &h_mod)
            );
        }

        #[test]
        fn compiled_eval_matches((desc, seed, n) in arb_case()) {
            let r = gf(desc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 4, 0.5, &mut rng);
            let c = p.compile();
            let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r.order())).collect();
            prop_assert_eq!(c.eval(&x), p.evaluate(&x));
        }

        #[test]
        fn display_round_trips((desc, seed, n) in arb_case()) {
            let r = gf(desc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MultiPoly::random(&r, n, 3, 0.5, &mut rng);
            prop_assert_eq!(parse_poly(&p.to_string(), &r, n).unwrap(), p);
        }
    }
}
