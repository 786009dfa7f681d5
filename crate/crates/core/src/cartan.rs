//! Cartan datum, weight arithmetic, and the parameter axioms.
//!
//! Weights are stored through coroot pairings only: a weight is the integer
//! vector `(⟨i,λ⟩)_{i∈I}`, so the fundamental weight for color `i` is the i-th
//! unit vector and adding a simple root `α_j` shifts by the j-th column of the
//! Cartan matrix. Bubble parameters are resolved against a stored list of
//! coset representatives via the compatibility recursion.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, Zero};

use crate::scalars::{Scalar, ScalarError, Sym};

/// Finite Cartan datum: ordered index set, symmetrizable Cartan matrix, and
/// symmetrizers. `labels[k]` is the external name of internal color `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanDatum {
    labels: Vec<u8>,
    a: Vec<Vec<i64>>,
    d: Vec<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {}", v)?;
            }
            Ok(())
        }
    }
}

impl CartanDatum {
    pub fn new(labels: Vec<u8>, a: Vec<Vec<i64>>, d: Vec<i64>) -> CartanDatum {
        CartanDatum { labels, a, d }
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> u8 {
        self.labels[idx]
    }

    pub fn index_of_label(&self, label: u8) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Cartan matrix entry `⟨i, α_j⟩`.
    pub fn a(&self, i: usize, j: usize) -> i64 {
        self.a[i][j]
    }

    pub fn d(&self, i: usize) -> i64 {
        self.d[i]
    }

    /// `d_ij = -⟨i, α_j⟩` for `i != j`.
    pub fn d_off(&self, i: usize, j: usize) -> i64 {
        assert_ne!(i, j);
        -self.a[i][j]
    }

    /// `(α_i, α_j) = d_i ⟨i, α_j⟩`.
    pub fn root_form(&self, i: usize, j: usize) -> i64 {
        self.d[i] * self.a[i][j]
    }

    /// `⟨i, λ⟩`.
    pub fn pairing(&self, i: usize, lambda: &Weight) -> i64 {
        lambda.coords[i]
    }

    /// `(λ, α_i) = d_i ⟨i, λ⟩`.
    pub fn weight_root_form(&self, i: usize, lambda: &Weight) -> i64 {
        self.d[i] * lambda.coords[i]
    }

    pub fn zero_weight(&self) -> Weight {
        Weight::new(vec![0; self.rank()])
    }

    /// λ + n·α_j expressed in coroot coordinates.
    pub fn add_root(&self, lambda: &Weight, j: usize, n: i64) -> Weight {
        let mut coords = lambda.coords.clone();
        for i in 0..self.rank() {
            coords[i] += n * self.a[i][j];
        }
        Weight::new(coords)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let n = self.rank();
        rep.check(self.a.len() == n && self.a.iter().all(|r| r.len() == n), || {
            "cartan matrix shape must match the index set".into()
        });
        rep.check(self.d.len() == n, || "one symmetrizer per index required".into());
        {
            let mut seen = std::collections::BTreeSet::new();
            rep.check(self.labels.iter().all(|l| seen.insert(*l)), || {
                "index labels must be distinct".into()
            });
        }
        if !rep.is_valid() {
            return rep;
        }
        for i in 0..n {
            rep.check(self.a[i][i] == 2, || format!("a[{0}][{0}] must be 2", self.labels[i]));
            rep.check(self.d[i] >= 1, || {
                format!("symmetrizer d_{} must be a positive integer", self.labels[i])
            });
            for j in 0..n {
                if i != j {
                    rep.check(self.a[i][j] <= 0, || {
                        format!(
                            "off-diagonal must be <= 0: a[{}][{}] = {}",
                            self.labels[i], self.labels[j], self.a[i][j]
                        )
                    });
                }
                rep.check(self.d[i] * self.a[i][j] == self.d[j] * self.a[j][i], || {
                    format!(
                        "symmetrizability fails at ({},{}): d_i*a_ij = {} but d_j*a_ji = {}",
                        self.labels[i],
                        self.labels[j],
                        self.d[i] * self.a[i][j],
                        self.d[j] * self.a[j][i]
                    )
                });
            }
        }
        rep
    }

    /// Admissible `(p,q)` for a nonzero `s_ij^{pq}`: the declared index range
    /// intersected with the degree-homogeneity constraint
    /// `d_i p + d_j q = d_i d_ij` forced by the double-crossing relation.
    pub fn admissible_s(&self, i: usize, j: usize) -> Vec<(u8, u8)> {
        if i == j || self.a[i][j] >= 0 {
            return Vec::new();
        }
        let dij = self.d_off(i, j);
        let dji = self.d_off(j, i);
        let mut out = Vec::new();
        for p in 0..dij {
            for q in 0..dji {
                if self.d[i] * p + self.d[j] * q == self.d[i] * dij {
                    out.push((p as u8, q as u8));
                }
            }
        }
        out
    }

    // -- standard data used throughout the tests and configs --

    pub fn sl2() -> CartanDatum {
        CartanDatum::new(vec![1], vec![vec![2]], vec![1])
    }

    pub fn a2() -> CartanDatum {
        CartanDatum::new(vec![1, 2], vec![vec![2, -1], vec![-1, 2]], vec![1, 1])
    }

    /// B2-type datum with a long first root: d = (2,1), a_12 = -1, a_21 = -2.
    pub fn b2() -> CartanDatum {
        CartanDatum::new(vec![1, 2], vec![vec![2, -1], vec![-2, 2]], vec![2, 1])
    }

    /// Affine-sl2-type datum (a_12 = a_21 = -2, d = (1,1)); the only rank-2
    /// datum in the test fleet with an admissible s-parameter, s_12^{11}.
    pub fn affine_a1() -> CartanDatum {
        CartanDatum::new(vec![1, 2], vec![vec![2, -2], vec![-2, 2]], vec![1, 1])
    }
}

/// A weight stored as its coroot pairing vector `(⟨i,λ⟩)_i`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Weight {
    pub coords: Vec<i64>,
}

impl Weight {
    pub fn new(coords: Vec<i64>) -> Weight {
        Weight { coords }
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}

/// The parameters `t_ij` and `s_ij^{pq}` of the calculus.
#[derive(Clone, Debug)]
pub struct ScalarChoice {
    /// t[i][j]; t[i][i] is always 1.
    t: Vec<Vec<Scalar>>,
    /// Sparse s-values keyed by (i, j, p, q); entries outside the declared
    /// range are zero and never stored.
    s: BTreeMap<(usize, usize, u8, u8), Scalar>,
}

impl ScalarChoice {
    pub fn new(t: Vec<Vec<Scalar>>, s: BTreeMap<(usize, usize, u8, u8), Scalar>) -> ScalarChoice {
        ScalarChoice { t, s }
    }

    /// Fully symbolic choice: `t_ij` a fresh symbol for i ≠ j (respecting
    /// `t_ij = t_ji` when `d_ij = 0`), and a fresh symbol for every admissible
    /// `s_ij^{pq}`.
    pub fn generic(datum: &CartanDatum) -> ScalarChoice {
        let n = datum.rank();
        let mut t = vec![vec![Scalar::one(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = if datum.a(i, j) == 0 && i > j { (j, i) } else { (i, j) };
                t[i][j] = Scalar::sym(Sym::t(datum.label(a), datum.label(b)));
            }
        }
        let mut s = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for (p, q) in datum.admissible_s(i, j) {
                    let sym = Sym::s(datum.label(i), datum.label(j), p, q);
                    s.insert((i, j, p, q), Scalar::sym(sym));
                }
            }
        }
        ScalarChoice { t, s }
    }

    /// The choice with all `t_ij = 1` and all `s = 0`.
    pub fn trivial(datum: &CartanDatum) -> ScalarChoice {
        ScalarChoice {
            t: vec![vec![Scalar::one(); datum.rank()]; datum.rank()],
            s: BTreeMap::new(),
        }
    }

    pub fn t(&self, i: usize, j: usize) -> &Scalar {
        &self.t[i][j]
    }

    pub fn t_inv(&self, i: usize, j: usize) -> Scalar {
        self.t[i][j]
            .try_invert()
            .expect("validated scalar choices have invertible t")
    }

    pub fn s(&self, i: usize, j: usize, p: i64, q: i64) -> Scalar {
        if p < 0 || q < 0 || p > u8::MAX as i64 || q > u8::MAX as i64 {
            return Scalar::zero();
        }
        self.s
            .get(&(i, j, p as u8, q as u8))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn s_entries(&self) -> impl Iterator<Item = (&(usize, usize, u8, u8), &Scalar)> {
        self.s.iter()
    }

    pub fn set_t(&mut self, i: usize, j: usize, v: Scalar) {
        self.t[i][j] = v;
    }

    pub fn set_s(&mut self, i: usize, j: usize, p: u8, q: u8, v: Scalar) {
        self.s.insert((i, j, p, q), v);
    }

    pub fn validate(&self, datum: &CartanDatum) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let n = datum.rank();
        rep.check(self.t.len() == n && self.t.iter().all(|r| r.len() == n), || {
            "t must be an IxI table".into()
        });
        if !rep.is_valid() {
            return rep;
        }
        for i in 0..n {
            rep.check(self.t[i][i].is_one(), || {
                format!("t_ii must be 1 (i = {})", datum.label(i))
            });
            for j in 0..n {
                if i == j {
                    continue;
                }
                rep.check(self.t[i][j].is_unit(), || {
                    format!("t_ij must be invertible: t({},{})", datum.label(i), datum.label(j))
                });
                if datum.d_off(i, j) == 0 {
                    rep.check(self.t[i][j] == self.t[j][i], || {
                        format!(
                            "t_ij = t_ji required when d_ij = 0: ({},{})",
                            datum.label(i),
                            datum.label(j)
                        )
                    });
                }
            }
        }
        for (&(i, j, p, q), v) in &self.s {
            let in_range = i != j
                && datum.a(i, j) < 0
                && (p as i64) < datum.d_off(i, j)
                && (q as i64) < datum.d_off(j, i);
            rep.check(in_range || v.is_zero(), || {
                format!(
                    "s({},{};{},{}) lies outside 0 <= p < d_ij, 0 <= q < d_ji and must vanish",
                    datum.label(i),
                    datum.label(j),
                    p,
                    q
                )
            });
            rep.check(self.s(j, i, q as i64, p as i64) == *v, || {
                format!(
                    "s symmetry fails: s({},{};{},{}) != s({},{};{},{})",
                    datum.label(i),
                    datum.label(j),
                    p,
                    q,
                    datum.label(j),
                    datum.label(i),
                    q,
                    p
                )
            });
        }
        rep
    }

    /// The double-crossing value `Q_ij(u, v)` as coefficients on `u^p v^q`.
    /// Cases: `i = j` gives zero, `(α_i,α_j) = 0` gives the constant `t_ij`,
    /// and `(α_i,α_j) < 0` gives `t_ij u^{d_ij} + t_ji v^{d_ji} + Σ s_ij^{pq} u^p v^q`.
    pub fn q_poly(&self, datum: &CartanDatum, i: usize, j: usize) -> Vec<(i64, i64, Scalar)> {
        if i == j {
            return Vec::new();
        }
        if datum.a(i, j) == 0 {
            return vec![(0, 0, self.t(i, j).clone())];
        }
        let mut out = vec![
            (datum.d_off(i, j), 0, self.t(i, j).clone()),
            (0, datum.d_off(j, i), self.t(j, i).clone()),
        ];
        for (&(a, b, p, q), v) in &self.s {
            if a == i && b == j && !v.is_zero() {
                out.push((p as i64, q as i64, v.clone()));
            }
        }
        out
    }
}

/// Bubble parameters: base units on stored coset representatives, extended to
/// reachable weights by `c_{i,λ+α_j} = t_ij · c_{i,λ}`.
#[derive(Clone, Debug)]
pub struct BubbleParams {
    reps: Vec<Weight>,
    /// base[(color, rep index)] — an invertible Scalar.
    base: BTreeMap<(usize, usize), Scalar>,
    /// Test hook: direct value overrides keyed by (color, weight). A normal
    /// parameter set has none; the Grassmannian sanity test plants a non-unit
    /// here to simulate corrupted parameters.
    overrides: BTreeMap<(usize, Weight), Scalar>,
}

impl BubbleParams {
    pub fn new(reps: Vec<Weight>, base: BTreeMap<(usize, usize), Scalar>) -> BubbleParams {
        BubbleParams {
            reps,
            base,
            overrides: BTreeMap::new(),
        }
    }

    /// Symbolic parameters with one fresh base symbol `c(label_i, k)` per
    /// color and root-lattice coset. For an invertible Cartan matrix the
    /// representative list is a full transversal of the quotient, so every
    /// weight is reachable; degenerate matrices fall back to the zero coset
    /// (more representatives can be added explicitly).
    pub fn generic(datum: &CartanDatum) -> BubbleParams {
        let mut params = BubbleParams::new(Vec::new(), BTreeMap::new());
        params.add_rep(datum, datum.zero_weight());
        let n = datum.rank();
        let det = int_det(&(0..n)
            .map(|i| (0..n).map(|j| datum.a(i, j)).collect::<Vec<_>>())
            .collect::<Vec<_>>());
        if det != 0 {
            let d = det.unsigned_abs() as i64;
            let mut cursor = vec![0i64; n];
            loop {
                let w = Weight::new(cursor.clone());
                let covered = params.reps.iter().any(|r| {
                    let diff: Vec<i64> = w.coords.iter().zip(&r.coords).map(|(a, b)| a - b).collect();
                    Self::root_coordinates(datum, &diff).is_some()
                });
                if !covered {
                    params.add_rep(datum, w);
                }
                // advance the mixed-radix counter over {0..d-1}^n
                let mut k = 0;
                loop {
                    if k == n {
                        return params;
                    }
                    cursor[k] += 1;
                    if cursor[k] < d {
                        break;
                    }
                    cursor[k] = 0;
                    k += 1;
                }
            }
        }
        params
    }

    pub fn add_rep(&mut self, datum: &CartanDatum, rep: Weight) -> usize {
        let idx = self.reps.len();
        for i in 0..datum.rank() {
            self.base
                .insert((i, idx), Scalar::sym(Sym::c(datum.label(i), idx as u32)));
        }
        self.reps.push(rep);
        idx
    }

    pub fn override_value(&mut self, i: usize, lambda: Weight, v: Scalar) {
        self.overrides.insert((i, lambda), v);
    }

    pub fn validate(&self, datum: &CartanDatum) -> ValidationReport {
        let mut rep = ValidationReport::default();
        for (&(i, k), v) in &self.base {
            rep.check(v.is_unit(), || {
                format!("c base value for color {} rep {} must be a unit", datum.label(i), k)
            });
        }
        rep.check(!self.reps.is_empty(), || "at least one coset representative required".into());
        rep.check(
            self.reps.iter().all(|r| r.coords.len() == datum.rank()),
            || "representative weights must match the datum rank".into(),
        );
        rep
    }

    /// Solve `diff = A·n` over the integers. Requires the Cartan matrix to be
    /// invertible over the rationals (true for the finite-type test data);
    /// returns None when the system has no integral solution.
    fn root_coordinates(datum: &CartanDatum, diff: &[i64]) -> Option<Vec<i64>> {
        let n = datum.rank();
        let mut m: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| BigRational::from(BigInt::from(datum.a(i, j))))
                    .collect()
            })
            .collect();
        let mut rhs: Vec<BigRational> = diff
            .iter()
            .map(|&v| BigRational::from(BigInt::from(v)))
            .collect();
        // Gaussian elimination with partial pivoting by nonzero entry.
        let mut row = 0;
        let mut pivots = Vec::new();
        for col in 0..n {
            let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(row, p);
            rhs.swap(row, p);
            let inv = m[row][col].recip();
            for c in col..n {
                let v = &m[row][c] * &inv;
                m[row][c] = v;
            }
            rhs[row] = &rhs[row] * &inv;
            for r in 0..n {
                if r != row && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for c in col..n {
                        let v = &m[r][c] - &f * &m[row][c];
                        m[r][c] = v;
                    }
                    let v = &rhs[r] - &f * &rhs[row];
                    rhs[r] = v;
                }
            }
            pivots.push((row, col));
            row += 1;
            if row == n {
                break;
            }
        }
        for r in row..n {
            if !rhs[r].is_zero() {
                return None;
            }
        }
        let mut sol = vec![BigRational::zero(); n];
        for &(r, c) in &pivots {
            sol[c] = rhs[r].clone();
        }
        let mut out = Vec::with_capacity(n);
        for v in sol {
            if !v.is_integer() {
                return None;
            }
            let big = v.to_integer();
            out.push(i64::try_from(&big).ok()?);
        }
        Some(out)
    }

    /// `c_{i,λ}` as the monomial `∏_j t_ij^{n_j} · c_{i,λ₀}` over the first
    /// representative whose coset contains λ.
    pub fn value(
        &self,
        datum: &CartanDatum,
        q: &ScalarChoice,
        i: usize,
        lambda: &Weight,
    ) -> Result<Scalar, ScalarError> {
        if let Some(v) = self.overrides.get(&(i, lambda.clone())) {
            return Ok(v.clone());
        }
        for (k, rep) in self.reps.iter().enumerate() {
            let diff: Vec<i64> = lambda
                .coords
                .iter()
                .zip(&rep.coords)
                .map(|(a, b)| a - b)
                .collect();
            if let Some(n) = Self::root_coordinates(datum, &diff) {
                let mut acc = self
                    .base
                    .get(&(i, k))
                    .cloned()
                    .ok_or_else(|| ScalarError::Unassigned(format!("c base ({},{})", i, k)))?;
                for (j, &nj) in n.iter().enumerate() {
                    if j == i || nj == 0 {
                        continue;
                    }
                    acc = acc.mul(&q.t(i, j).clone().unit_pow(nj as i32)?);
                }
                return Ok(acc);
            }
        }
        Err(ScalarError::Unassigned(format!(
            "c({},{}): weight not reachable from any stored coset representative",
            datum.label(i),
            lambda
        )))
    }

    /// `c_{i,λ}^{-1}`.
    pub fn value_inv(
        &self,
        datum: &CartanDatum,
        q: &ScalarChoice,
        i: usize,
        lambda: &Weight,
    ) -> Result<Scalar, ScalarError> {
        self.value(datum, q, i, lambda)?.try_invert()
    }
}

/// Integer determinant by fraction-free elimination (small matrices only).
fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

/// A validated bundle of datum, scalar choice, and bubble parameters; the
/// ambient theory every engine operation runs in.
#[derive(Clone, Debug)]
pub struct Theory {
    pub datum: CartanDatum,
    pub q: ScalarChoice,
    pub c: BubbleParams,
}

impl Theory {
    pub fn new(datum: CartanDatum, q: ScalarChoice, c: BubbleParams) -> Result<Theory, ValidationReport> {
        let mut rep = datum.validate();
        rep.violations.extend(q.validate(&datum).violations);
        rep.violations.extend(c.validate(&datum).violations);
        if !rep.is_valid() {
            return Err(rep);
        }
        Ok(Theory { datum, q, c })
    }

    /// Fully symbolic theory over a datum.
    pub fn generic(datum: CartanDatum) -> Theory {
        let q = ScalarChoice::generic(&datum);
        let c = BubbleParams::generic(&datum);
        Theory::new(datum, q, c).expect("generic choices satisfy the axioms")
    }

    pub fn pairing(&self, i: usize, lambda: &Weight) -> i64 {
        self.datum.pairing(i, lambda)
    }

    /// `c_{i,λ}` resolved through the compatibility recursion.
    pub fn c_value(&self, i: usize, lambda: &Weight) -> Result<Scalar, ScalarError> {
        self.c.value(&self.datum, &self.q, i, lambda)
    }

    pub fn c_value_inv(&self, i: usize, lambda: &Weight) -> Result<Scalar, ScalarError> {
        self.c.value_inv(&self.datum, &self.q, i, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_standard_data() {
        assert!(CartanDatum::sl2().validate().is_valid());
        assert!(CartanDatum::a2().validate().is_valid());
        assert!(CartanDatum::b2().validate().is_valid());
        assert!(CartanDatum::affine_a1().validate().is_valid());
    }

    #[test]
    fn reject_positive_off_diagonal() {
        let bad = CartanDatum::new(vec![1, 2], vec![vec![2, 1], vec![1, 2]], vec![1, 1]);
        let rep = bad.validate();
        assert!(!rep.is_valid());
        assert!(rep.violations.iter().any(|v| v.contains("off-diagonal must be <= 0")));
    }

    #[test]
    fn pairing_examples() {
        let a2 = CartanDatum::a2();
        let lam = Weight::new(vec![2, -1]);
        assert_eq!(a2.pairing(0, &lam), 2);

        let sl2 = CartanDatum::sl2();
        assert_eq!(sl2.weight_root_form(0, &Weight::new(vec![3])), 3);

        let b2 = CartanDatum::b2();
        assert_eq!(b2.root_form(0, 1), -2);
        assert_eq!(b2.root_form(0, 1), b2.root_form(1, 0));
    }

    #[test]
    fn pairing_is_linear() {
        let b2 = CartanDatum::b2();
        let lam = Weight::new(vec![2, -3]);
        let mu = Weight::new(vec![-1, 5]);
        for i in 0..2 {
            assert_eq!(
                b2.pairing(i, &lam.add(&mu)),
                b2.pairing(i, &lam) + b2.pairing(i, &mu)
            );
        }
    }

    #[test]
    fn scalar_choice_validation() {
        let a2 = CartanDatum::a2();
        assert!(ScalarChoice::trivial(&a2).validate(&a2).is_valid());
        assert!(ScalarChoice::generic(&a2).validate(&a2).is_valid());

        let mut bad = ScalarChoice::generic(&a2);
        bad.set_t(0, 1, Scalar::zero());
        let rep = bad.validate(&a2);
        assert!(rep.violations.iter().any(|v| v.contains("must be invertible")));

        let mut asym = ScalarChoice::generic(&CartanDatum::affine_a1());
        asym.set_s(0, 1, 1, 1, Scalar::int(7));
        let rep = asym.validate(&CartanDatum::affine_a1());
        assert!(rep.violations.iter().any(|v| v.contains("s symmetry")));
    }

    #[test]
    fn admissible_s_sets() {
        assert!(CartanDatum::sl2().admissible_s(0, 0).is_empty());
        assert!(CartanDatum::a2().admissible_s(0, 1).is_empty());
        assert!(CartanDatum::b2().admissible_s(0, 1).is_empty());
        assert_eq!(CartanDatum::affine_a1().admissible_s(0, 1), vec![(1, 1)]);
    }

    #[test]
    fn bubble_param_recursion() {
        let a2 = CartanDatum::a2();
        let q = ScalarChoice::generic(&a2);
        let c = BubbleParams::generic(&a2);
        let lam0 = a2.zero_weight();

        // Constant along the sl2-string.
        let v0 = c.value(&a2, &q, 0, &lam0).unwrap();
        let v_alpha_i = c.value(&a2, &q, 0, &a2.add_root(&lam0, 0, 5)).unwrap();
        assert_eq!(v0, v_alpha_i);

        // One α_j step multiplies by t_ij.
        let v_alpha_j = c.value(&a2, &q, 0, &a2.add_root(&lam0, 1, 1)).unwrap();
        assert_eq!(v_alpha_j, v0.mul(q.t(0, 1)));

        // Two α_2 steps: t_12^2 · c_{1,λ₀}.
        let v2 = c.value(&a2, &q, 0, &a2.add_root(&lam0, 1, 2)).unwrap();
        assert_eq!(v2, v0.mul(&q.t(0, 1).pow(2)));

        // Ratio normalizes to t_ij exactly.
        let ratio = v_alpha_j.mul(&v0.try_invert().unwrap());
        assert!(ratio.sub(q.t(0, 1)).is_zero());
    }

    #[test]
    fn bubble_param_unreachable_weight() {
        // In A2 the root lattice has index 3 in the weight lattice; [1,0] is
        // not reachable from the zero representative alone.
        let a2 = CartanDatum::a2();
        let q = ScalarChoice::generic(&a2);
        let mut c = BubbleParams::new(Vec::new(), BTreeMap::new());
        c.add_rep(&a2, a2.zero_weight());
        assert!(c.value(&a2, &q, 0, &Weight::new(vec![1, 0])).is_err());

        c.add_rep(&a2, Weight::new(vec![1, 0]));
        assert!(c.value(&a2, &q, 0, &Weight::new(vec![1, 0])).is_ok());
        // [1,0] + α_1 reachable from the new representative.
        assert!(c
            .value(&a2, &q, 0, &a2.add_root(&Weight::new(vec![1, 0]), 0, 1))
            .is_ok());
    }

    #[test]
    fn generic_params_cover_all_small_weights() {
        for datum in [CartanDatum::sl2(), CartanDatum::a2(), CartanDatum::b2()] {
            let q = ScalarChoice::generic(&datum);
            let c = BubbleParams::generic(&datum);
            let n = datum.rank();
            let mut coords = vec![-4i64; n];
            loop {
                let w = Weight::new(coords.clone());
                for i in 0..n {
                    assert!(c.value(&datum, &q, i, &w).is_ok(), "unreachable {:?}", w);
                }
                let mut k = 0;
                loop {
                    if k == n {
                        return;
                    }
                    coords[k] += 1;
                    if coords[k] <= 4 {
                        break;
                    }
                    coords[k] = -4;
                    k += 1;
                }
            }
        }
    }
}
