//! Affine pullbacks between polynomials, weakly polynomial functions on
//! subsets of `K^n`, and the comparison between weakly polynomial and
//! global polynomial functions on a fiber.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{Budget, DomainSpec, Ring};
use crate::error::{Error, Result};
use crate::geometry::fiber_points;
use crate::linalg::{solve, Matrix, RowBasis};
use crate::poly::{monomials_up_to, Exponents, MultiPoly, PolyCollection};

/// `y -> A y + b` from `K^m` to `K^n`; `a` has `n` rows and `m` columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub ring: Ring,
    pub a: Matrix,
    pub b: Vec<u32>,
}

impl AffineMap {
    pub fn new(ring: &Ring, a: Matrix, b: Vec<u32>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::precondition("translation length must match the target dimension"));
        }
        Ok(AffineMap { ring: ring.clone(), a, b })
    }

    /// Decodes `[A_11..A_1m, b_1, A_21.., b_2, ...]`.
    fn from_flat(ring: &Ring, n: usize, m: usize, flat: &[u32]) -> Self {
        let rows: Vec<Vec<u32>> = flat.chunks(m + 1).map(|c| c[..m].to_vec()).collect();
        let b = flat.chunks(m + 1).map(|c| c[m]).collect();
        debug_assert_eq!(rows.len(), n);
        AffineMap {
            ring: ring.clone(),
            a: Matrix::from_rows(rows, m),
            b,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn apply(&self, y: &[u32]) -> Vec<u32> {
        let r = &self.ring;
        self.a.mul_vec(r, y).into_iter().zip(&self.b).map(|(v, &b)| r.add(v, b)).collect()
    }

    /// The coordinate images `x_i = sum_j A_ij y_j + b_i`.
    pub fn images(&self) -> Vec<MultiPoly> {
        (0..self.target_dim())
            .map(|i| MultiPoly::linear(&self.ring, self.a.row(i), self.b[i]))
            .collect()
    }

    /// `(phi^* P)(y) = P(A y + b)`.
    pub fn pullback(&self, p: &MultiPoly) -> MultiPoly {
        assert_eq!(p.nvars(), self.target_dim());
        p.substitute(&self.images())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PullbackStage {
    /// Each `x_i` sent to a single `y_j` or to 0.
    Structured,
    Exhaustive,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PullbackOutcome {
    Found { map: AffineMap, stage: PullbackStage },
    /// Every affine map `K^m -> K^n` was tried.
    ProvenNonexistent,
    NoneFound,
}

struct PullbackTarget<'a> {
    p: &'a MultiPoly,
    q: &'a MultiPoly,
    compiled: crate::poly::CompiledPoly,
    probes: Vec<(Vec<u32>, u32)>,
}

impl PullbackTarget<'_> {
    fn check(&self, map: &AffineMap) -> bool {
        self.probes.iter().all(|(y, v)| self.compiled.eval(&map.apply(y)) == *v) && map.pullback(self.p) == *self.q
    }
}

const PROBES: usize = 64;
const RANDOM_TRIALS: u64 = 1 << 16;

/// Searches for an affine `phi: K^m -> K^n` with `phi^* P = Q`. Every map
/// returned has been checked symbolically.
pub fn affine_pullback_search(p: &MultiPoly, q: &MultiPoly, budget: &Budget, seed: u64) -> Result<PullbackOutcome> {
    let ring = p.ring().clone();
    if q.ring() != &ring {
        return Err(Error::precondition("P and Q must share a ring"));
    }
    if q.degree().unwrap_or(0) > p.degree().unwrap_or(0) && !q.is_zero() {
        return Err(Error::precondition("deg Q must not exceed deg P"));
    }
    let (n, m) = (p.nvars(), q.nvars());
    let order = ring.order() as u64;
    let probe_domain = DomainSpec::new(ring.clone(), m);
    let probe_count = BigUint::from(order).pow(m as u32).min(BigUint::from(PROBES as u64));
    let probes = (0..probe_count.to_u64_digits().first().copied().unwrap_or(0))
        .map(|i| {
            let y = probe_domain.point_at(i);
            let v = q.evaluate(&y);
            (y, v)
        })
        .collect();
    let target = PullbackTarget {
        p,
        q,
        compiled: p.compile(),
        probes,
    };

    // coordinate slots: x_i -> y_j (choice j < m) or 0 (choice m)
    if budget.admit_power(m as u64 + 1, n).is_ok() {
        let total = (m as u64 + 1).pow(n as u32);
        let found = (0..total).find_map(|index| {
            let choice = mixed_radix(index, m as u64 + 1, n);
            let mut a = Matrix::zeros(n, m);
            for (i, &j) in choice.iter().enumerate() {
                if (j as usize) < m {
                    a.set(i, j as usize, 1);
                }
            }
            let map = AffineMap::new(&ring, a, vec![0; n]).expect("shape");
            target.check(&map).then_some(map)
        });
        if let Some(map) = found {
            return Ok(PullbackOutcome::Found {
                map,
                stage: PullbackStage::Structured,
            });
        }
    }

    let maps = DomainSpec::new(ring.clone(), (m + 1) * n);
    if budget.admit(&maps.cardinality()).is_ok() {
        let found = first_match(&maps, budget, |flat| {
            let map = AffineMap::from_flat(&ring, n, m, flat);
            target.check(&map).then_some(map)
        })?;
        return Ok(match found {
            Some(map) => PullbackOutcome::Found {
                map,
                stage: PullbackStage::Exhaustive,
            },
            None => PullbackOutcome::ProvenNonexistent,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_TRIALS.min(budget.max_points) {
        let flat: Vec<u32> = (0..(m + 1) * n).map(|_| rng.gen_range(0..ring.order())).collect();
        let map = AffineMap::from_flat(&ring, n, m, &flat);
        if target.check(&map) {
            return Ok(PullbackOutcome::Found {
                map,
                stage: PullbackStage::Random,
            });
        }
    }
    Ok(PullbackOutcome::NoneFound)
}

/// Digits of `index` in base `radix`, most significant first.
fn mixed_radix(mut index: u64, radix: u64, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % radix) as u32;
        index /= radix;
    }
    out
}

/// First point of the domain, in enumeration order, where `f` succeeds.
fn first_match<T: Send>(domain: &DomainSpec, budget: &Budget, f: impl Fn(&[u32]) -> Option<T> + Sync) -> Result<Option<T>> {
    domain.fold_shards(
        budget,
        || None,
        |acc, pt| {
            if acc.is_none() {
                *acc = f(pt);
            }
        },
        |a, b| a.or(b),
    )
}

/// A function on an explicit finite subset of `K^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    ring: Ring,
    n: usize,
    points: Vec<Vec<u32>>,
    values: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
}

impl FunctionTable {
    pub fn new(ring: &Ring, n: usize, points: Vec<Vec<u32>>, values: Vec<u32>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::precondition("one value per point"));
        }
        let q = ring.order();
        if values.iter().any(|&v| v >= q) || points.iter().any(|p| p.len() != n || p.iter().any(|&x| x >= q)) {
            return Err(Error::precondition("points and values must lie in the ring"));
        }
        let mut index = HashMap::with_capacity(points.len());
        for (i, pt) in points.iter().enumerate() {
            if index.insert(pt.clone(), i).is_some() {
                return Err(Error::precondition("domain points must be distinct"));
            }
        }
        Ok(FunctionTable {
            ring: ring.clone(),
            n,
            points,
            values,
            index,
        })
    }

    pub fn from_fn(ring: &Ring, n: usize, points: Vec<Vec<u32>>, f: impl Fn(&[u32]) -> u32) -> Result<Self> {
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(ring, n, points, values)
    }

    /// `G|_X`.
    pub fn restriction(g: &MultiPoly, points: Vec<Vec<u32>>) -> Result<Self> {
        Self::from_fn(g.ring(), g.nvars(), points, |p| g.evaluate(p))
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Vec<u32>] {
        &self.points
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn value_at(&self, pt: &[u32]) -> Option<u32> {
        self.index.get(pt).map(|&i| self.values[i])
    }

    pub fn position(&self, pt: &[u32]) -> Option<usize> {
        self.index.get(pt).copied()
    }

    fn with_values(&self, values: Vec<u32>) -> Self {
        FunctionTable { values, ..self.clone() }
    }
}

/// `base + span(directions)`, parametrized in lexicographic order of the
/// coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    pub base: Vec<u32>,
    pub directions: Vec<Vec<u32>>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn point(&self, ring: &Ring, params: &[u32]) -> Vec<u32> {
        let mut x = self.base.clone();
        for (&s, v) in params.iter().zip(&self.directions) {
            for (xi, &vi) in x.iter_mut().zip(v) {
                *xi = ring.add(*xi, ring.mul(s, vi));
            }
        }
        x
    }

    pub fn points(&self, ring: &Ring) -> Vec<(Vec<u32>, Vec<u32>)> {
        let params = DomainSpec::new(ring.clone(), self.dim());
        let total = (ring.order() as u64).pow(self.dim() as u32);
        (0..total)
            .map(|i| {
                let s = params.point_at(i);
                let x = self.point(ring, &s);
                (s, x)
            })
            .collect()
    }
}

fn require_degree_range(ring: &Ring, a: usize) -> Result<()> {
    if !ring.is_field() {
        return Err(Error::InvalidRing("weak polynomiality needs a field".into()));
    }
    if a + 2 > ring.order() as usize {
        return Err(Error::precondition(format!(
            "degree {a} is vacuous on lines over a field of order {}",
            ring.order()
        )));
    }
    Ok(())
}

fn normalize(ring: &Ring, v: &mut [u32]) -> bool {
    let Some(&lead) = v.iter().find(|&&x| x != 0) else {
        return false;
    };
    let inv = ring.inv(lead).expect("field");
    for x in v.iter_mut() {
        *x = ring.mul(*x, inv);
    }
    true
}

/// Nonzero vectors of `K^n` with leading coordinate 1.
fn projective_directions(ring: &Ring, n: usize, budget: &Budget) -> Result<Vec<Vec<u32>>> {
    let domain = DomainSpec::new(ring.clone(), n);
    domain.fold_shards(
        budget,
        Vec::new,
        |acc, pt| {
            if pt.iter().find(|&&x| x != 0) == Some(&1) {
                acc.push(pt.to_vec());
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Lines (and planes when `cap >= 2`) contained in the point set, each listed
/// once with its lexicographically least point as base.
pub fn contained_subspaces(ring: &Ring, n: usize, points: &[Vec<u32>], cap: usize, budget: &Budget) -> Result<Vec<Subspace>> {
    if !ring.is_field() {
        return Err(Error::InvalidRing("affine subspaces need a field".into()));
    }
    let set: HashSet<&[u32]> = points.iter().map(Vec::as_slice).collect();
    let dirs = projective_directions(ring, n, budget)?;
    let q = ring.order() as u64;
    budget.admit(&(BigUint::from(points.len()) * dirs.len() * q))?;
    let mut sorted: Vec<&Vec<u32>> = points.iter().collect();
    sorted.sort();
    let elems: Vec<u32> = ring.elements().collect();
    let on_line = |x: &[u32], v: &[u32]| -> Option<bool> {
        let mut least = true;
        for &t in &elems[1..] {
            let y: Vec<u32> = x.iter().zip(v).map(|(&a, &b)| ring.add(a, ring.mul(t, b))).collect();
            if !set.contains(y.as_slice()) {
                return None;
            }
            least &= x < y.as_slice();
        }
        Some(least)
    };
    let per_point: Vec<Vec<Subspace>> = sorted
        .par_iter()
        .map(|x| {
            let mut found = Vec::new();
            let mut through: Vec<&Vec<u32>> = Vec::new();
            for v in &dirs {
                if let Some(least) = on_line(x, v) {
                    through.push(v);
                    if least {
                        found.push(Subspace {
                            base: x.to_vec(),
                            directions: vec![v.clone()],
                        });
                    }
                }
            }
            if cap >= 2 {
                let through_set: HashSet<&[u32]> = through.iter().map(|v| v.as_slice()).collect();
                let mut seen = BTreeSet::new();
                for (i, u) in through.iter().enumerate() {
                    for v in &through[i + 1..] {
                        let spans = elems.iter().all(|&lambda| {
                            let mut w: Vec<u32> = u.iter().zip(v.iter()).map(|(&a, &b)| ring.add(a, ring.mul(lambda, b))).collect();
                            normalize(ring, &mut w) && through_set.contains(w.as_slice())
                        });
                        if !spans {
                            continue;
                        }
                        let mut basis = Matrix::from_rows(vec![u.to_vec(), v.to_vec()], n);
                        basis.rref(ring);
                        let key = (basis.row(0).to_vec(), basis.row(1).to_vec());
                        if !seen.insert(key.clone()) {
                            continue;
                        }
                        let plane = Subspace {
                            base: x.to_vec(),
                            directions: vec![key.0, key.1],
                        };
                        if plane.points(ring).iter().skip(1).all(|(_, y)| x.as_slice() < y.as_slice()) {
                            found.push(plane);
                        }
                    }
                }
            }
            found
        })
        .collect();
    Ok(per_point.into_iter().flatten().collect())
}

/// `e_k(s) = [k = 0] - s^{q-1-k}` with `0^0 = 1`: the coefficient of `t^k`
/// in the indicator `1 - (t - s)^{q-1}`.
fn indicator_coeff(ring: &Ring, k: usize, s: u32) -> u32 {
    let q = ring.order() as u64;
    let e = q - 1 - k as u64;
    let power = if e == 0 { 1 } else { ring.pow(s, e) };
    let delta = if k == 0 { 1 } else { 0 };
    ring.sub(delta, power)
}

/// Linear constraints on the values over a subspace saying that the reduced
/// interpolation polynomial has degree `<= a`. Each constraint is a list of
/// `(parameter index, coefficient)`.
fn degree_constraints(ring: &Ring, dim: usize, a: usize) -> Vec<Vec<(usize, u32)>> {
    let q = ring.order() as usize;
    let params = DomainSpec::new(ring.clone(), dim);
    let total = q.pow(dim as u32);
    let mut out = Vec::new();
    for ei in 0..total as u64 {
        let e = mixed_radix(ei, q as u64, dim);
        if e.iter().map(|&k| k as usize).sum::<usize>() <= a {
            continue;
        }
        let row = (0..total)
            .filter_map(|pi| {
                let s = params.point_at(pi as u64);
                let c = e.iter().zip(&s).fold(1, |acc, (&k, &si)| ring.mul(acc, indicator_coeff(ring, k as usize, si)));
                (c != 0).then_some((pi, c))
            })
            .collect();
        out.push(row);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakReport {
    pub holds: bool,
    pub witness: Option<Subspace>,
    pub lines_checked: usize,
    pub planes_checked: usize,
}

/// Checks that `f` restricts to a polynomial of degree `<= a` on every line,
/// and every plane when `cap >= 2`, contained in its domain.
pub fn is_weakly_polynomial(f: &FunctionTable, a: usize, cap: usize, budget: &Budget) -> Result<WeakReport> {
    let ring = f.ring();
    require_degree_range(ring, a)?;
    let subspaces = contained_subspaces(ring, f.nvars(), f.points(), cap, budget)?;
    let constraints: Vec<_> = (1..=cap.min(2)).map(|k| degree_constraints(ring, k, a)).collect();
    let mut report = WeakReport {
        holds: true,
        witness: None,
        lines_checked: 0,
        planes_checked: 0,
    };
    for s in subspaces {
        match s.dim() {
            1 => report.lines_checked += 1,
            _ => report.planes_checked += 1,
        }
        let values: Vec<u32> = s.points(ring).iter().map(|(_, x)| f.value_at(x).expect("contained")).collect();
        let ok = constraints[s.dim() - 1]
            .iter()
            .all(|row| row.iter().fold(0, |acc, &(i, c)| ring.add(acc, ring.mul(c, values[i]))) == 0);
        if !ok {
            report.holds = false;
            report.witness = Some(s);
            break;
        }
    }
    Ok(report)
}

fn reduced_monomials(ring: &Ring, n: usize, a: usize) -> Vec<Exponents> {
    let q = ring.order() as u16;
    monomials_up_to(n, a)
        .into_iter()
        .filter(|e| !ring.is_field() || e.iter().all(|&k| k < q))
        .collect()
}

fn evaluation_matrix(ring: &Ring, points: &[Vec<u32>], monos: &[Exponents], budget: &Budget) -> Result<Matrix> {
    budget.admit(&(BigUint::from(points.len()) * monos.len()))?;
    let rows = points
        .iter()
        .map(|x| {
            monos
                .iter()
                .map(|e| e.iter().zip(x).fold(1, |acc, (&k, &xi)| ring.mul(acc, ring.pow(xi, k as u64))))
                .collect()
        })
        .collect();
    Ok(Matrix::from_rows(rows, monos.len()))
}

/// A polynomial `G` of degree `<= a` with `G|_X = f`, free coefficients set
/// to zero, or `None` if the linear system is inconsistent.
pub fn extend_weakly_polynomial(f: &FunctionTable, a: usize, budget: &Budget) -> Result<Option<MultiPoly>> {
    let ring = f.ring();
    let monos = reduced_monomials(ring, f.nvars(), a);
    let e = evaluation_matrix(ring, f.points(), &monos, budget)?;
    let Some(coeffs) = solve(&e, f.values(), ring) else {
        return Ok(None);
    };
    let g = MultiPoly::from_terms(ring, f.nvars(), monos.into_iter().zip(coeffs));
    if f.points().iter().zip(f.values()).any(|(x, &v)| g.evaluate(x) != v) {
        return Err(Error::IdentityViolation("extension does not restrict to f".into()));
    }
    Ok(Some(g))
}

/// Whether `q = 1 mod e` for `e = a * d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Admissibility {
    pub e: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarReport {
    pub points: usize,
    pub subspace_cap: usize,
    pub dim_global: usize,
    /// Dimension of the functions passing every line (and plane) constraint;
    /// an upper bound for the weakly polynomial space.
    pub dim_weak_upper: usize,
    pub equal: bool,
    /// Weak functions independent from the global ones, at most `GAP_LIMIT`.
    pub gap: Vec<FunctionTable>,
    pub admissibility: Option<Admissibility>,
}

pub const GAP_LIMIT: usize = 16;

/// Compares the global and the (upper bound for the) weakly polynomial
/// degree `<= a` function spaces on an explicit point set.
pub fn star_a_on_points(ring: &Ring, n: usize, points: Vec<Vec<u32>>, a: usize, cap: usize, budget: &Budget) -> Result<StarReport> {
    require_degree_range(ring, a)?;
    let zero = vec![0; points.len()];
    let table = FunctionTable::new(ring, n, points, zero)?;
    let monos = reduced_monomials(ring, n, a);
    let eval = evaluation_matrix(ring, table.points(), &monos, budget)?;
    let mut global = RowBasis::new(table.len());
    for col in 0..eval.cols() {
        let column: Vec<u32> = (0..eval.rows()).map(|r| eval.get(r, col)).collect();
        global.insert(ring, &column);
    }
    let dim_global = global.rank();

    let subspaces = contained_subspaces(ring, n, table.points(), cap, budget)?;
    let constraints: Vec<_> = (1..=cap.clamp(1, 2)).map(|k| degree_constraints(ring, k, a)).collect();
    let mut imposed = RowBasis::new(table.len());
    for s in &subspaces {
        let idx: Vec<usize> = s
            .points(ring)
            .iter()
            .map(|(_, x)| table.position(x).expect("contained"))
            .collect();
        for row in &constraints[s.dim() - 1] {
            let mut dense = vec![0; table.len()];
            for &(i, c) in row {
                dense[idx[i]] = ring.add(dense[idx[i]], c);
            }
            imposed.insert(ring, &dense);
        }
    }
    let weak_basis = if imposed.rank() == 0 {
        (0..table.len())
            .map(|i| {
                let mut v = vec![0; table.len()];
                v[i] = 1;
                v
            })
            .collect()
    } else {
        imposed.to_matrix().kernel(ring)
    };
    let dim_weak_upper = weak_basis.len();
    if dim_weak_upper < dim_global {
        return Err(Error::IdentityViolation(format!(
            "global space of dimension {dim_global} exceeds the weak space of dimension {dim_weak_upper}"
        )));
    }
    let mut gap = Vec::new();
    for v in weak_basis {
        if gap.len() >= GAP_LIMIT {
            break;
        }
        if global.insert(ring, &v) {
            gap.push(table.with_values(v));
        }
    }
    Ok(StarReport {
        points: table.len(),
        subspace_cap: cap.clamp(1, 2),
        dim_global,
        dim_weak_upper,
        equal: dim_weak_upper == dim_global,
        gap,
        admissibility: None,
    })
}

/// [`star_a_on_points`] on the fiber `C = t`, with the admissibility check
/// `q = 1 mod a d` for the largest degree `d`.
pub fn star_a_dimension_compare(c: &PolyCollection, t: &[u32], a: usize, cap: usize, budget: &Budget) -> Result<StarReport> {
    let fiber = fiber_points(c, t, budget, usize::MAX)?;
    let mut report = star_a_on_points(c.ring(), c.nvars(), fiber.sample, a, cap, budget)?;
    let e = a * c.max_degree();
    report.admissibility = Some(Admissibility {
        e,
        holds: e > 0 && (c.ring().order() as usize - 1).is_multiple_of(e),
    });
    Ok(report)
}
