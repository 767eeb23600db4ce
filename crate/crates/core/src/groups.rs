//! Compact groups and their Haar probability schemes.
//!
//! Finite groups carry an exhaustively checked Cayley table and exact
//! uniform Haar weights. The circle `U(1)` and `SU(2)` (and finite products
//! of any of these) carry quadrature schemes: the trapezoid rule on the
//! circle, and an Euler-angle product rule on `SU(2)`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::gauss_legendre;
use crate::rng::SeededStream;

/// Grid used for memoization keys and canonical snapping of coordinates.
pub const KEY_GRID: f64 = 1e-12;
/// Axioms are checked exhaustively up to this order.
pub const EXHAUSTIVE_CHECK_ORDER: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    Finite(usize),
    /// U(1): one angle in `[0, 2π)`; SU(2): unit quaternion `(w, x, y, z)`;
    /// products: the factors' coordinates concatenated (finite factors
    /// contribute their index).
    Coords(Vec<f64>),
}

impl GroupElement {
    pub fn index(&self) -> Option<usize> {
        match self {
            GroupElement::Finite(i) => Some(*i),
            GroupElement::Coords(_) => None,
        }
    }

    pub fn angle(theta: f64) -> GroupElement {
        GroupElement::Coords(vec![theta.rem_euclid(TAU)])
    }

    pub fn quaternion(q: [f64; 4]) -> GroupElement {
        GroupElement::Coords(normalize_quaternion(q).to_vec())
    }
}

impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupElement::Finite(i) => write!(f, "{i}"),
            GroupElement::Coords(c) => {
                write!(f, "(")?;
                for (k, x) in c.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:.6}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Formats a tuple of elements for diagnostics.
pub fn tuple_label(tuple: &[GroupElement]) -> String {
    let parts: Vec<String> = tuple.iter().map(|g| g.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    table: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates the table as a group law. Closure, identity and inverses are
    /// always checked; associativity is checked on every triple up to order
    /// [`EXHAUSTIVE_CHECK_ORDER`] and on a deterministic sample beyond.
    pub fn from_cayley(name: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let order = table.len();
        if order == 0 {
            return Err(Error::GroupAxiom("empty Cayley table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return Err(Error::GroupAxiom(format!(
                    "row {i} has {} entries, expected {order}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= order {
                    return Err(Error::GroupAxiom(format!(
                        "closure fails: {i}·{j} = {v} is out of range"
                    )));
                }
                flat.push(v);
            }
        }
        let at = |a: usize, b: usize| flat[a * order + b];
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| at(e, x) == x && at(x, e) == x))
            .ok_or_else(|| Error::GroupAxiom("identity: no two-sided identity element".into()))?;
        let mut inverse = vec![0; order];
        for (x, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..order)
                .find(|&y| at(x, y) == identity && at(y, x) == identity)
                .ok_or_else(|| {
                    Error::GroupAxiom(format!("inverse: element {x} has no two-sided inverse"))
                })?;
        }
        let check = |a: usize, b: usize, c: usize| -> Result<()> {
            if at(at(a, b), c) != at(a, at(b, c)) {
                return Err(Error::GroupAxiom(format!(
                    "associativity fails on triple ({a}, {b}, {c})"
                )));
            }
            Ok(())
        };
        if order <= EXHAUSTIVE_CHECK_ORDER {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        check(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng = SeededStream::new(0x5eed, 0);
            for _ in 0..200_000 {
                check(rng.below(order), rng.below(order), rng.below(order))?;
            }
        }
        Ok(FiniteGroup {
            name: name.into(),
            order,
            table: flat,
            inverse,
            identity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn cayley_rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    /// Elements commuting with everything.
    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&z| (0..self.order).all(|g| self.mul(z, g) == self.mul(g, z)))
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.center().len() == self.order
    }
}

fn from_law(
    name: String,
    order: usize,
    law: impl Fn(usize, usize) -> usize,
) -> Result<FiniteGroup> {
    let table = (0..order)
        .map(|a| (0..order).map(|b| law(a, b)).collect())
        .collect();
    FiniteGroup::from_cayley(name, table)
}

/// `C_n` with elements the residues `0..n` and `i·j = (i + j) mod n`.
pub fn build_cyclic(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::Invalid("cyclic group needs n ≥ 1".into()));
    }
    from_law(format!("C{n}"), n, |a, b| (a + b) % n)
}

/// `D_n` of order `2n`: indices `0..n` are the rotations `rᵏ`, indices
/// `n..2n` the reflections `rᵏs`, with `s r s = r⁻¹`.
pub fn build_dihedral(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::Invalid("dihedral group needs n ≥ 1".into()));
    }
    from_law(format!("D{n}"), 2 * n, |a, b| {
        let (ra, fa) = (a % n, a >= n);
        let (rb, fb) = (b % n, b >= n);
        // rᵃ sᶠᵃ · rᵇ sᶠᵇ = r^(a ± b) s^(fa xor fb)
        let r = if fa { (ra + n - rb) % n } else { (ra + rb) % n };
        if fa ^ fb {
            n + r
        } else {
            r
        }
    })
}

/// Permutations of `0..n` in lexicographic order; the product is
/// composition, `(στ)(i) = σ(τ(i))`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// `S_n` for `n ≤ 5`, elements the lexicographically ordered permutations.
pub fn build_symmetric(n: usize) -> Result<FiniteGroup> {
    if n == 0 || n > 5 {
        return Err(Error::Invalid(format!(
            "symmetric group supported for 1 ≤ n ≤ 5, got {n}"
        )));
    }
    let perms = permutations(n);
    let index: HashMap<Vec<usize>, usize> = perms
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    from_law(format!("S{n}"), perms.len(), |a, b| {
        let comp: Vec<usize> = (0..n).map(|i| perms[a][perms[b][i]]).collect();
        index[&comp]
    })
}

/// `Q₈` in the order `{1, −1, i, −i, j, −j, k, −k}`.
pub fn build_quaternion8() -> Result<FiniteGroup> {
    // Unit products: (unit_a · unit_b) = sign · unit, units 0..4 = 1, i, j, k.
    const UNIT: [[(bool, usize); 4]; 4] = [
        [(false, 0), (false, 1), (false, 2), (false, 3)],
        [(false, 1), (true, 0), (false, 3), (true, 2)],
        [(false, 2), (true, 3), (true, 0), (false, 1)],
        [(false, 3), (false, 2), (true, 1), (true, 0)],
    ];
    from_law("Q8".into(), 8, |a, b| {
        let (ua, na) = (a / 2, a % 2 == 1);
        let (ub, nb) = (b / 2, b % 2 == 1);
        let (neg, u) = UNIT[ua][ub];
        2 * u + usize::from(neg ^ na ^ nb)
    })
}

/// Validates a user-supplied table.
pub fn build_from_cayley(table: Vec<Vec<usize>>) -> Result<FiniteGroup> {
    FiniteGroup::from_cayley("cayley", table)
}

/// `A × B` with element `(a, b)` at index `a·|B| + b`.
pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Result<FiniteGroup> {
    let nb = b.order();
    from_law(
        format!("{}x{}", a.name(), b.name()),
        a.order() * nb,
        |x, y| a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Su2Resolution {
    /// Trapezoid nodes for the first Euler angle over `[0, 4π)`.
    pub alpha: usize,
    /// Gauss–Legendre nodes in `cos β`.
    pub beta: usize,
    /// Trapezoid nodes for the third Euler angle over `[0, 4π)`.
    pub gamma: usize,
}

impl Default for Su2Resolution {
    fn default() -> Self {
        Su2Resolution {
            alpha: 4,
            beta: 16,
            gamma: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompactGroup {
    Finite(FiniteGroup),
    /// The circle group with an `nodes`-point trapezoid rule.
    U1 {
        nodes: usize,
    },
    Su2(Su2Resolution),
    Product(Vec<CompactGroup>),
}

/// Haar probability weights on a finite node set.
#[derive(Clone, Debug)]
pub struct HaarScheme {
    pub nodes: Vec<(GroupElement, f64)>,
}

impl HaarScheme {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    pub fn integrate(&self, f: impl Fn(&GroupElement) -> f64) -> f64 {
        self.nodes.iter().map(|(s, w)| w * f(s)).sum()
    }
}

impl CompactGroup {
    pub fn is_finite(&self) -> bool {
        matches!(self, CompactGroup::Finite(_))
    }

    pub fn finite(&self) -> Option<&FiniteGroup> {
        match self {
            CompactGroup::Finite(g) => Some(g),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<usize> {
        self.finite().map(FiniteGroup::order)
    }

    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        self.finite()
            .map(|g| (0..g.order()).map(GroupElement::Finite).collect())
    }

    fn coord_len(&self) -> usize {
        match self {
            CompactGroup::Finite(_) | CompactGroup::U1 { .. } => 1,
            CompactGroup::Su2(_) => 4,
            CompactGroup::Product(fs) => fs.iter().map(CompactGroup::coord_len).sum(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            CompactGroup::Finite(g) => GroupElement::Finite(g.identity()),
            CompactGroup::U1 { .. } => GroupElement::Coords(vec![0.0]),
            CompactGroup::Su2(_) => GroupElement::Coords(vec![1.0, 0.0, 0.0, 0.0]),
            CompactGroup::Product(fs) => {
                let mut c = Vec::new();
                for f in fs {
                    push_coords(&mut c, f.identity());
                }
                GroupElement::Coords(c)
            }
        }
    }

    /// Checks that `s` is an element of this group.
    pub fn validate(&self, s: &GroupElement) -> Result<()> {
        match (self, s) {
            (CompactGroup::Finite(g), GroupElement::Finite(i)) if *i < g.order() => Ok(()),
            (CompactGroup::Finite(g), GroupElement::Finite(i)) => {
                Err(Error::KindMismatch(format!(
                    "index {i} outside group {} of order {}",
                    g.name(),
                    g.order()
                )))
            }
            (CompactGroup::Finite(_), _) | (_, GroupElement::Finite(_)) => Err(
                Error::KindMismatch("element kind does not match group kind".into()),
            ),
            (_, GroupElement::Coords(c)) if c.len() != self.coord_len() => {
                Err(Error::KindMismatch(format!(
                    "element has {} coordinates, group expects {}",
                    c.len(),
                    self.coord_len()
                )))
            }
            (_, GroupElement::Coords(c)) if c.iter().any(|x| !x.is_finite()) => {
                Err(Error::KindMismatch("non-finite coordinate".into()))
            }
            _ => Ok(()),
        }
    }

    /// Splits a product element into factor elements.
    fn split(&self, c: &[f64]) -> Vec<GroupElement> {
        let CompactGroup::Product(fs) = self else {
            unreachable!()
        };
        let mut out = Vec::with_capacity(fs.len());
        let mut at = 0;
        for f in fs {
            let len = f.coord_len();
            let part = &c[at..at + len];
            out.push(match f {
                CompactGroup::Finite(_) => GroupElement::Finite(part[0] as usize),
                _ => GroupElement::Coords(part.to_vec()),
            });
            at += len;
        }
        out
    }

    /// Group law. Angles add mod 2π; quaternion products are renormalized.
    pub fn mul(&self, s: &GroupElement, t: &GroupElement) -> Result<GroupElement> {
        self.validate(s)?;
        self.validate(t)?;
        Ok(self.mul_unchecked(s, t))
    }

    pub(crate) fn mul_unchecked(&self, s: &GroupElement, t: &GroupElement) -> GroupElement {
        match (self, s, t) {
            (CompactGroup::Finite(g), GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(g.mul(*a, *b))
            }
            (CompactGroup::U1 { .. }, GroupElement::Coords(a), GroupElement::Coords(b)) => {
                GroupElement::angle(a[0] + b[0])
            }
            (CompactGroup::Su2(_), GroupElement::Coords(a), GroupElement::Coords(b)) => {
                GroupElement::quaternion(quaternion_mul(
                    [a[0], a[1], a[2], a[3]],
                    [b[0], b[1], b[2], b[3]],
                ))
            }
            (CompactGroup::Product(fs), GroupElement::Coords(a), GroupElement::Coords(b)) => {
                let (xs, ys) = (self.split(a), self.split(b));
                let mut c = Vec::new();
                for ((f, x), y) in fs.iter().zip(&xs).zip(&ys) {
                    push_coords(&mut c, f.mul_unchecked(x, y));
                }
                GroupElement::Coords(c)
            }
            _ => unreachable!("validated element kinds"),
        }
    }

    pub fn inv(&self, s: &GroupElement) -> Result<GroupElement> {
        self.validate(s)?;
        Ok(self.inv_unchecked(s))
    }

    pub(crate) fn inv_unchecked(&self, s: &GroupElement) -> GroupElement {
        match (self, s) {
            (CompactGroup::Finite(g), GroupElement::Finite(a)) => GroupElement::Finite(g.inv(*a)),
            (CompactGroup::U1 { .. }, GroupElement::Coords(a)) => {
                if a[0] == 0.0 {
                    GroupElement::Coords(vec![0.0])
                } else {
                    GroupElement::angle(TAU - a[0])
                }
            }
            (CompactGroup::Su2(_), GroupElement::Coords(a)) => {
                GroupElement::quaternion([a[0], -a[1], -a[2], -a[3]])
            }
            (CompactGroup::Product(fs), GroupElement::Coords(a)) => {
                let mut c = Vec::new();
                for (f, x) in fs.iter().zip(self.split(a)) {
                    push_coords(&mut c, f.inv_unchecked(&x));
                }
                GroupElement::Coords(c)
            }
            _ => unreachable!("validated element kinds"),
        }
    }

    /// Memoization key: coordinates quantized on a `1e-12` grid after
    /// canonical reduction (angles into `[0, 2π)`, quaternions normalized).
    /// SU(2) keeps the quaternion sign.
    pub fn key(&self, s: &GroupElement) -> Vec<i64> {
        let mut out = Vec::new();
        self.push_key(s, &mut out);
        out
    }

    fn push_key(&self, s: &GroupElement, out: &mut Vec<i64>) {
        match (self, s) {
            (_, GroupElement::Finite(i)) => out.push(*i as i64),
            (CompactGroup::U1 { .. }, GroupElement::Coords(a)) => {
                let full = (TAU / KEY_GRID).round() as i64;
                let k = (a[0].rem_euclid(TAU) / KEY_GRID).round() as i64;
                out.push(if k >= full { 0 } else { k });
            }
            (CompactGroup::Su2(_), GroupElement::Coords(a)) => {
                let q = normalize_quaternion([a[0], a[1], a[2], a[3]]);
                out.extend(q.iter().map(|x| (x / KEY_GRID).round() as i64));
            }
            (CompactGroup::Product(fs), GroupElement::Coords(a)) => {
                for (f, x) in fs.iter().zip(self.split(a)) {
                    f.push_key(&x, out);
                }
            }
            _ => out.extend(coords_fallback(s)),
        }
    }

    /// The canonical representative of a key: the element the memoized
    /// evaluators actually evaluate at.
    pub fn from_key(&self, key: &[i64]) -> GroupElement {
        match self {
            CompactGroup::Finite(_) => GroupElement::Finite(key[0] as usize),
            CompactGroup::U1 { .. } => GroupElement::Coords(vec![key[0] as f64 * KEY_GRID]),
            CompactGroup::Su2(_) => {
                let q = [0, 1, 2, 3].map(|i| key[i] as f64 * KEY_GRID);
                GroupElement::Coords(normalize_quaternion(q).to_vec())
            }
            CompactGroup::Product(fs) => {
                let mut c = Vec::new();
                let mut at = 0;
                for f in fs {
                    let len = match f {
                        CompactGroup::Su2(_) => 4,
                        CompactGroup::Product(_) => f.key_len(),
                        _ => 1,
                    };
                    let part = f.from_key(&key[at..at + len]);
                    push_coords(&mut c, part);
                    at += len;
                }
                GroupElement::Coords(c)
            }
        }
    }

    fn key_len(&self) -> usize {
        match self {
            CompactGroup::Su2(_) => 4,
            CompactGroup::Product(fs) => fs.iter().map(CompactGroup::key_len).sum(),
            _ => 1,
        }
    }

    pub fn snap(&self, s: &GroupElement) -> GroupElement {
        match s {
            GroupElement::Finite(_) => s.clone(),
            GroupElement::Coords(_) => self.from_key(&self.key(s)),
        }
    }

    /// A Haar-distributed random element.
    pub fn sample(&self, rng: &mut SeededStream) -> GroupElement {
        match self {
            CompactGroup::Finite(g) => GroupElement::Finite(rng.below(g.order())),
            CompactGroup::U1 { .. } => GroupElement::angle(TAU * rng.uniform()),
            CompactGroup::Su2(_) => {
                let q = [
                    rng.gaussian(),
                    rng.gaussian(),
                    rng.gaussian(),
                    rng.gaussian(),
                ];
                GroupElement::quaternion(q)
            }
            CompactGroup::Product(fs) => {
                let mut c = Vec::new();
                for f in fs {
                    push_coords(&mut c, f.sample(rng));
                }
                GroupElement::Coords(c)
            }
        }
    }

    /// The Haar scheme of this group at its configured resolution.
    ///
    /// Finite: every element with weight `1/|G|`. U(1): the angles `2πk/N`
    /// with weight `1/N`. SU(2): `q = e^{αk/2} e^{βj/2} e^{γk/2}` with
    /// trapezoid nodes in `α, γ ∈ [0, 4π)` and Gauss–Legendre nodes in
    /// `cos β`, coincident nodes merged, then symmetrized under inversion.
    /// Products: tensor products of the factor schemes.
    pub fn haar_scheme(&self) -> HaarScheme {
        let nodes = match self {
            CompactGroup::Finite(g) => {
                let w = 1.0 / g.order() as f64;
                (0..g.order())
                    .map(|i| (GroupElement::Finite(i), w))
                    .collect()
            }
            CompactGroup::U1 { nodes } => {
                let n = (*nodes).max(1);
                (0..n)
                    .map(|k| {
                        (
                            GroupElement::Coords(vec![TAU * k as f64 / n as f64]),
                            1.0 / n as f64,
                        )
                    })
                    .collect()
            }
            CompactGroup::Su2(res) => self.symmetrize(su2_euler_nodes(res)),
            CompactGroup::Product(fs) => {
                let mut acc: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
                for f in fs {
                    let scheme = f.haar_scheme();
                    let mut next = Vec::with_capacity(acc.len() * scheme.len());
                    for (c, w) in &acc {
                        for (s, ws) in &scheme.nodes {
                            let mut c2 = c.clone();
                            push_coords(&mut c2, s.clone());
                            next.push((c2, w * ws));
                        }
                    }
                    acc = next;
                }
                acc.into_iter()
                    .map(|(c, w)| (GroupElement::Coords(c), w))
                    .collect()
            }
        };
        HaarScheme {
            nodes: normalize_weights(nodes),
        }
    }

    fn symmetrize(&self, nodes: Vec<(GroupElement, f64)>) -> Vec<(GroupElement, f64)> {
        let mut order: Vec<Vec<i64>> = Vec::new();
        let mut merged: HashMap<Vec<i64>, (GroupElement, f64)> = HashMap::new();
        let mut add = |g: GroupElement, w: f64, order: &mut Vec<Vec<i64>>| {
            let k = self.key(&g);
            match merged.get_mut(&k) {
                Some(entry) => entry.1 += w,
                None => {
                    order.push(k.clone());
                    merged.insert(k, (g, w));
                }
            }
        };
        for (g, w) in &nodes {
            add(g.clone(), 0.5 * w, &mut order);
            add(self.inv_unchecked(g), 0.5 * w, &mut order);
        }
        order
            .into_iter()
            .map(|k| merged.remove(&k).unwrap())
            .collect()
    }
}

fn coords_fallback(s: &GroupElement) -> Vec<i64> {
    match s {
        GroupElement::Finite(i) => vec![*i as i64],
        GroupElement::Coords(c) => c.iter().map(|x| (x / KEY_GRID).round() as i64).collect(),
    }
}

fn push_coords(out: &mut Vec<f64>, g: GroupElement) {
    match g {
        GroupElement::Finite(i) => out.push(i as f64),
        GroupElement::Coords(c) => out.extend(c),
    }
}

fn normalize_weights(nodes: Vec<(GroupElement, f64)>) -> Vec<(GroupElement, f64)> {
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    nodes.into_iter().map(|(g, w)| (g, w / total)).collect()
}

fn su2_euler_nodes(res: &Su2Resolution) -> Vec<(GroupElement, f64)> {
    let (xs, ws) = gauss_legendre(res.beta.max(1));
    let a = res.alpha.max(1);
    let c = res.gamma.max(1);
    let mut out = Vec::with_capacity(a * xs.len() * c);
    for i in 0..a {
        let alpha = 2.0 * TAU * i as f64 / a as f64 + 0.5 * PI;
        for (x, w) in xs.iter().zip(&ws) {
            let beta = x.clamp(-1.0, 1.0).acos();
            for k in 0..c {
                let gamma = 2.0 * TAU * k as f64 / c as f64 + 0.5 * PI;
                out.push((
                    GroupElement::quaternion(euler_to_quaternion(alpha, beta, gamma)),
                    *w,
                ));
            }
        }
    }
    // Nodes coinciding as group elements (the Euler box covers SU(2) twice)
    // merge their weights.
    let g = CompactGroup::Su2(res.clone());
    let mut order: Vec<Vec<i64>> = Vec::new();
    let mut merged: HashMap<Vec<i64>, (GroupElement, f64)> = HashMap::new();
    for (e, w) in out {
        let k = g.key(&e);
        match merged.get_mut(&k) {
            Some(entry) => entry.1 += w,
            None => {
                order.push(k.clone());
                merged.insert(k, (e, w));
            }
        }
    }
    order
        .into_iter()
        .map(|k| merged.remove(&k).unwrap())
        .collect()
}

/// `e^{αk/2} e^{βj/2} e^{γk/2}` as `(w, x, y, z)`.
pub fn euler_to_quaternion(alpha: f64, beta: f64, gamma: f64) -> [f64; 4] {
    let qa = [(0.5 * alpha).cos(), 0.0, 0.0, (0.5 * alpha).sin()];
    let qb = [(0.5 * beta).cos(), 0.0, (0.5 * beta).sin(), 0.0];
    let qc = [(0.5 * gamma).cos(), 0.0, 0.0, (0.5 * gamma).sin()];
    quaternion_mul(quaternion_mul(qa, qb), qc)
}

pub fn quaternion_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn normalize_quaternion(q: [f64; 4]) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n == 0.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    q.map(|x| x / n)
}

/// The defining representation `w + xi + yj + zk ↦ [[w + ix, y + iz], [−y + iz, w − ix]]`.
pub fn su2_matrix(q: &[f64]) -> Matrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Matrix::new(
        2,
        2,
        vec![c(q[0], q[1]), c(q[2], q[3]), c(-q[2], q[3]), c(q[0], -q[1])],
    )
    .expect("finite quaternion")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_builtin() -> Vec<FiniteGroup> {
        let mut gs = vec![];
        for n in 1..=6 {
            gs.push(build_cyclic(n).unwrap());
        }
        for n in 2..=5 {
            gs.push(build_dihedral(n).unwrap());
        }
        for n in 1..=4 {
            gs.push(build_symmetric(n).unwrap());
        }
        gs.push(build_quaternion8().unwrap());
        gs
    }

    #[test]
    fn builder_examples() {
        let c2 = build_cyclic(2).unwrap();
        assert_eq!(c2.order(), 2);
        assert_eq!(c2.cayley_rows(), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(build_symmetric(3).unwrap().order(), 6);
        assert_eq!(build_symmetric(5).unwrap().order(), 120);
        assert_eq!(build_dihedral(4).unwrap().order(), 8);
        assert!(build_symmetric(6).is_err());
    }

    #[test]
    fn quaternion_group_has_center_of_size_two() {
        // Brute-force center over all 64 pairs.
        let q8 = build_quaternion8().unwrap();
        assert_eq!(q8.order(), 8);
        let center: Vec<usize> = (0..8)
            .filter(|&z| (0..8).all(|g| q8.mul(z, g) == q8.mul(g, z)))
            .collect();
        assert_eq!(center, vec![0, 1]);
        // i·j = k, j·i = −k, i² = −1
        assert_eq!(q8.mul(2, 4), 6);
        assert_eq!(q8.mul(4, 2), 7);
        assert_eq!(q8.mul(2, 2), 1);
    }

    #[test]
    fn dihedral_relations() {
        let n = 5;
        let d = build_dihedral(n).unwrap();
        let (r, s) = (1, n);
        assert_eq!(d.mul(s, s), 0);
        // s r s = r⁻¹
        assert_eq!(d.mul(d.mul(s, r), s), d.inv(r));
        assert!(!d.is_abelian());
    }

    #[test]
    fn corrupted_tables_name_the_axiom() {
        let mut t = build_cyclic(3).unwrap().cayley_rows();
        t[1][2] = 1;
        let err = build_from_cayley(t).unwrap_err().to_string();
        assert!(
            err.contains("inverse") || err.contains("associativity"),
            "{err}"
        );
        let err = build_from_cayley(vec![vec![0, 1], vec![1, 2]])
            .unwrap_err()
            .to_string();
        assert!(err.contains("closure"), "{err}");
        let err = build_from_cayley(vec![vec![1, 0], vec![0, 0]])
            .unwrap_err()
            .to_string();
        assert!(err.contains("identity"), "{err}");
        // A Latin square with identity that is not associative.
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let err = build_from_cayley(t).unwrap_err().to_string();
        assert!(err.contains("associativity fails on triple"), "{err}");
    }

    #[test]
    fn mul_and_inverse_examples() {
        let u1 = CompactGroup::U1 { nodes: 8 };
        let p = u1
            .mul(&GroupElement::angle(PI / 2.0), &GroupElement::angle(PI))
            .unwrap();
        assert!(matches!(p, GroupElement::Coords(ref c) if (c[0] - 1.5 * PI).abs() < 1e-15));
        let inv = u1.inv(&GroupElement::angle(1.0)).unwrap();
        assert!(matches!(inv, GroupElement::Coords(ref c) if (c[0] - (TAU - 1.0)).abs() < 1e-15));
        assert_eq!(u1.inv(&u1.identity()).unwrap(), u1.identity());
        let c4 = CompactGroup::Finite(build_cyclic(4).unwrap());
        assert_eq!(
            c4.mul(&GroupElement::Finite(1), &GroupElement::Finite(3))
                .unwrap(),
            GroupElement::Finite(0)
        );
        assert_eq!(
            c4.inv(&GroupElement::Finite(1)).unwrap(),
            GroupElement::Finite(3)
        );
        assert!(c4
            .mul(&GroupElement::Finite(4), &GroupElement::Finite(0))
            .is_err());
        assert!(c4
            .mul(&GroupElement::angle(0.0), &GroupElement::Finite(0))
            .is_err());
    }

    #[test]
    fn lie_inverse_and_associativity() {
        let mut rng = SeededStream::new(9, 0);
        for g in [
            CompactGroup::U1 { nodes: 4 },
            CompactGroup::Su2(Su2Resolution::default()),
            CompactGroup::Product(vec![
                CompactGroup::U1 { nodes: 4 },
                CompactGroup::Su2(Su2Resolution::default()),
            ]),
        ] {
            for _ in 0..50 {
                let (a, b, c) = (g.sample(&mut rng), g.sample(&mut rng), g.sample(&mut rng));
                let e = g.mul(&a, &g.inv(&a).unwrap()).unwrap();
                assert!(coord_dist(&g, &e, &g.identity()) < 1e-12);
                let l = g.mul(&g.mul(&a, &b).unwrap(), &c).unwrap();
                let r = g.mul(&a, &g.mul(&b, &c).unwrap()).unwrap();
                assert!(coord_dist(&g, &l, &r) < 1e-12);
            }
        }
    }

    fn coord_dist(g: &CompactGroup, a: &GroupElement, b: &GroupElement) -> f64 {
        let (GroupElement::Coords(x), GroupElement::Coords(y)) = (a, b) else {
            panic!()
        };
        let _ = g;
        x.iter()
            .zip(y)
            .map(|(p, q)| {
                let d = (p - q).abs();
                d.min((TAU - d).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn su2_matrix_is_a_homomorphism() {
        let mut rng = SeededStream::new(5, 1);
        let g = CompactGroup::Su2(Su2Resolution::default());
        for _ in 0..20 {
            let (a, b) = (g.sample(&mut rng), g.sample(&mut rng));
            let ab = g.mul(&a, &b).unwrap();
            let (GroupElement::Coords(x), GroupElement::Coords(y), GroupElement::Coords(z)) =
                (&a, &b, &ab)
            else {
                panic!()
            };
            let prod = &su2_matrix(x) * &su2_matrix(y);
            assert!(prod.max_abs_diff(&su2_matrix(z)) < 1e-14);
        }
    }

    #[test]
    fn haar_scheme_examples() {
        let c3 = CompactGroup::Finite(build_cyclic(3).unwrap()).haar_scheme();
        assert_eq!(c3.len(), 3);
        assert!(c3.nodes.iter().all(|(_, w)| (w - 1.0 / 3.0).abs() < 1e-16));
        let u4 = CompactGroup::U1 { nodes: 4 }.haar_scheme();
        let angles: Vec<f64> = u4
            .nodes
            .iter()
            .map(|(g, _)| {
                if let GroupElement::Coords(c) = g {
                    c[0]
                } else {
                    panic!()
                }
            })
            .collect();
        for (a, want) in angles.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert!((a - want).abs() < 1e-15);
        }
        assert!(u4.nodes.iter().all(|(_, w)| *w == 0.25));
    }

    #[test]
    fn trapezoid_integrates_character_to_zero() {
        // Closed form: ∫ e^{iθ} dθ/2π = 0.
        let s = CompactGroup::U1 { nodes: 8 }.haar_scheme();
        let re = s.integrate(|g| {
            if let GroupElement::Coords(c) = g {
                c[0].cos()
            } else {
                0.0
            }
        });
        let im = s.integrate(|g| {
            if let GroupElement::Coords(c) = g {
                c[0].sin()
            } else {
                0.0
            }
        });
        assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one_and_nodes_closed_under_inverse() {
        let groups = vec![
            CompactGroup::Finite(build_symmetric(3).unwrap()),
            CompactGroup::U1 { nodes: 16 },
            CompactGroup::Su2(Su2Resolution::default()),
            CompactGroup::Su2(Su2Resolution {
                alpha: 3,
                beta: 5,
                gamma: 2,
            }),
            CompactGroup::Product(vec![
                CompactGroup::U1 { nodes: 3 },
                CompactGroup::U1 { nodes: 5 },
            ]),
        ];
        for g in groups {
            let s = g.haar_scheme();
            assert!((s.total_weight() - 1.0).abs() < 1e-14, "{g:?}");
            let index: HashMap<Vec<i64>, f64> =
                s.nodes.iter().map(|(e, w)| (g.key(e), *w)).collect();
            assert_eq!(index.len(), s.len());
            for (e, w) in &s.nodes {
                let wi = index.get(&g.key(&g.inv(e).unwrap())).copied();
                assert_eq!(wi, Some(*w), "{g:?}: inverse of {e} missing or reweighted");
            }
        }
    }

    #[test]
    fn default_su2_scheme_has_128_nodes() {
        assert_eq!(
            CompactGroup::Su2(Su2Resolution::default())
                .haar_scheme()
                .len(),
            128
        );
    }

    #[test]
    fn haar_invariance_on_matrix_coefficients() {
        // Entries of the defining representation and of products of two of
        // them (degree ≤ 2 in the matrix coefficients).
        let su2 = CompactGroup::Su2(Su2Resolution::default());
        let scheme = su2.haar_scheme();
        let coeff = |g: &GroupElement, a: usize, b: usize| {
            let GroupElement::Coords(q) = g else { panic!() };
            let m = su2_matrix(q);
            (m[(a / 2, a % 2)] * m[(b / 2, b % 2)]).re
        };
        let mut rng = SeededStream::new(2, 2);
        for _ in 0..5 {
            let t = su2.sample(&mut rng);
            for a in 0..4 {
                for b in 0..4 {
                    let base = scheme.integrate(|s| coeff(s, a, b));
                    let shifted = scheme.integrate(|s| coeff(&su2.mul(&t, s).unwrap(), a, b));
                    assert!(
                        (base - shifted).abs() < 1e-12,
                        "{a} {b}: {base} vs {shifted}"
                    );
                }
            }
        }
        // Finite groups: exact invariance for any function.
        let s3 = CompactGroup::Finite(build_symmetric(3).unwrap());
        let sch = s3.haar_scheme();
        let f = |g: &GroupElement| (g.index().unwrap() as f64 * 1.7).sin();
        for t in 0..6 {
            let shifted = sch.integrate(|s| f(&s3.mul(&GroupElement::Finite(t), s).unwrap()));
            assert!((shifted - sch.integrate(f)).abs() < 1e-15);
        }
        // U(1): trigonometric polynomials of degree < N.
        let u1 = CompactGroup::U1 { nodes: 8 };
        let sch = u1.haar_scheme();
        let f = |g: &GroupElement| {
            let GroupElement::Coords(c) = g else { panic!() };
            (3.0 * c[0]).cos() + 0.5 * (7.0 * c[0]).sin()
        };
        for _ in 0..5 {
            let t = u1.sample(&mut rng);
            let shifted = sch.integrate(|s| f(&u1.mul(&t, s).unwrap()));
            assert!((shifted - sch.integrate(f)).abs() < 1e-12);
        }
    }

    #[test]
    fn keys_collapse_roundoff_and_wrap() {
        let u1 = CompactGroup::U1 { nodes: 4 };
        assert_eq!(
            u1.key(&GroupElement::Coords(vec![TAU - 1e-15])),
            u1.key(&GroupElement::Coords(vec![0.0]))
        );
        assert_eq!(
            u1.key(&GroupElement::angle(1.0)),
            u1.key(&GroupElement::angle(1.0 + 1e-16))
        );
        let su2 = CompactGroup::Su2(Su2Resolution::default());
        let q = GroupElement::quaternion([0.5, 0.5, 0.5, 0.5]);
        let mq = GroupElement::quaternion([-0.5, -0.5, -0.5, -0.5]);
        assert_ne!(su2.key(&q), su2.key(&mq));
        assert_eq!(su2.key(&su2.snap(&q)), su2.key(&q));
    }

    #[test]
    fn direct_product_of_c2() {
        let c2 = build_cyclic(2).unwrap();
        let k = direct_product(&c2, &c2).unwrap();
        assert_eq!(k.order(), 4);
        assert!(k.is_abelian());
        assert!((0..4).all(|g| k.mul(g, g) == 0));
    }

    #[test]
    fn all_builtins_pass_axioms_and_identity_first() {
        for g in all_builtin() {
            assert_eq!(g.identity(), 0, "{}", g.name());
        }
    }
}
