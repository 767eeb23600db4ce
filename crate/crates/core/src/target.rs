//! Target groups `U`, their Lie algebras, and actions of `G` on them.
//!
//! Matrix targets are `GL_n(ℝ)`, `GL_n(ℂ)` and `U(n)` with the spectral norm
//! (bracket constant 2). Abelian targets are `ℝᵈ` with the Euclidean norm,
//! where the exponential chart is the identity.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{CompactGroup, GroupElement};
use crate::linalg::{expm, logm, Field, Matrix};
use crate::rng::SeededStream;

/// Unitary membership tolerance on `‖u*u − I‖`.
pub const UNITARY_TOL: f64 = 1e-10;

/// A point of `U` or of its Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Matrix(Matrix),
    Vector(Vec<f64>),
}

impl Value {
    pub fn matrix(&self) -> Option<&Matrix> {
        match self {
            Value::Matrix(m) => Some(m),
            Value::Vector(_) => None,
        }
    }

    pub fn vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Matrix(_) => None,
        }
    }

    /// Spectral norm for matrices, Euclidean norm for vectors.
    pub fn norm(&self) -> f64 {
        match self {
            Value::Matrix(m) => m.spectral(),
            Value::Vector(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Matrix(a), Value::Matrix(b)) => Value::Matrix(a + b),
            (Value::Vector(a), Value::Vector(b)) => {
                Value::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => panic!("adding values of different kinds"),
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Value {
        match self {
            Value::Matrix(a) => Value::Matrix(a.scale_real(c)),
            Value::Vector(a) => Value::Vector(a.iter().map(|x| c * x).collect()),
        }
    }

    /// Accumulates `self += c·other` in place.
    pub fn axpy(&mut self, c: f64, other: &Value) {
        *self = self.add(&other.scale(c));
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Matrix(m) => m.is_finite(),
            Value::Vector(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    pub fn max_abs_diff(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Matrix(a), Value::Matrix(b)) => a.max_abs_diff(b),
            (Value::Vector(a), Value::Vector(b)) => a
                .iter()
                .zip(b)
                .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSubtype {
    GeneralLinear,
    Unitary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetGroup {
    Matrix {
        dim: usize,
        field: Field,
        subtype: MatrixSubtype,
    },
    Abelian {
        dim: usize,
    },
}

impl TargetGroup {
    pub fn general_linear(dim: usize, field: Field) -> TargetGroup {
        TargetGroup::Matrix {
            dim,
            field,
            subtype: MatrixSubtype::GeneralLinear,
        }
    }

    pub fn unitary(dim: usize) -> TargetGroup {
        TargetGroup::Matrix {
            dim,
            field: Field::Complex,
            subtype: MatrixSubtype::Unitary,
        }
    }

    pub fn abelian(dim: usize) -> TargetGroup {
        TargetGroup::Abelian { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetGroup::Matrix { dim, .. } | TargetGroup::Abelian { dim } => *dim,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self, TargetGroup::Abelian { .. })
    }

    /// The constant `C` in `‖[x, y]‖ ≤ C‖x‖‖y‖`.
    pub fn bracket_constant(&self) -> f64 {
        match self {
            TargetGroup::Matrix { .. } => 2.0,
            TargetGroup::Abelian { .. } => 0.0,
        }
    }

    pub fn identity(&self) -> Value {
        match self {
            TargetGroup::Matrix { dim, .. } => Value::Matrix(Matrix::identity(*dim)),
            TargetGroup::Abelian { dim } => Value::Vector(vec![0.0; *dim]),
        }
    }

    pub fn zero_algebra(&self) -> Value {
        match self {
            TargetGroup::Matrix { dim, .. } => Value::Matrix(Matrix::zeros(*dim, *dim)),
            TargetGroup::Abelian { dim } => Value::Vector(vec![0.0; *dim]),
        }
    }

    /// Shape and field check shared by group and algebra values.
    pub fn check_shape(&self, v: &Value) -> Result<()> {
        match (self, v) {
            (TargetGroup::Matrix { dim, field, .. }, Value::Matrix(m)) => {
                if m.rows() != *dim || m.cols() != *dim {
                    return Err(Error::Dimension(format!(
                        "expected {dim}x{dim} matrix, got {}x{}",
                        m.rows(),
                        m.cols()
                    )));
                }
                if *field == Field::Real && m.field() == Field::Complex {
                    return Err(Error::KindMismatch(
                        "complex entries in a real target".into(),
                    ));
                }
                Ok(())
            }
            (TargetGroup::Abelian { dim }, Value::Vector(x)) if x.len() == *dim => Ok(()),
            (TargetGroup::Abelian { dim }, Value::Vector(x)) => Err(Error::Dimension(format!(
                "expected vector of length {dim}, got {}",
                x.len()
            ))),
            _ => Err(Error::KindMismatch(
                "value kind does not match target kind".into(),
            )),
        }
    }

    /// Membership of a group value: invertible, and unitary for `U(n)`.
    pub fn check_point(&self, v: &Value) -> Result<()> {
        self.check_shape(v)?;
        if let (TargetGroup::Matrix { subtype, .. }, Value::Matrix(m)) = (self, v) {
            m.inv()?;
            if *subtype == MatrixSubtype::Unitary {
                let r = (&(&m.adjoint() * m) - &Matrix::identity(m.rows())).spectral();
                if r > UNITARY_TOL {
                    return Err(Error::Invalid(format!(
                        "matrix is not unitary: ‖u*u − I‖ = {r:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Group law of `U`.
    pub fn mul(&self, a: &Value, b: &Value) -> Value {
        match (a, b) {
            (Value::Matrix(x), Value::Matrix(y)) => Value::Matrix(x * y),
            _ => a.add(b),
        }
    }

    pub fn inv(&self, a: &Value) -> Result<Value> {
        match a {
            Value::Matrix(x) => Ok(Value::Matrix(self.matrix_inverse(x)?)),
            Value::Vector(x) => Ok(Value::Vector(x.iter().map(|v| -v).collect())),
        }
    }

    /// Unitary targets invert by the adjoint.
    pub fn matrix_inverse(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            TargetGroup::Matrix {
                subtype: MatrixSubtype::Unitary,
                ..
            } => Ok(x.adjoint()),
            _ => x.inv(),
        }
    }

    pub fn exp(&self, x: &Value) -> Result<Value> {
        match x {
            Value::Matrix(m) => {
                let e = expm(m)?;
                Ok(Value::Matrix(if self.is_real() {
                    e.realify(0.0)
                } else {
                    e
                }))
            }
            Value::Vector(_) => Ok(x.clone()),
        }
    }

    /// Principal logarithm; a branch-cut failure means the point lies outside
    /// the chart.
    pub fn log(&self, u: &Value) -> Result<Value> {
        match u {
            Value::Matrix(m) => Ok(Value::Matrix(logm(m)?)),
            Value::Vector(_) => Ok(u.clone()),
        }
    }

    fn is_real(&self) -> bool {
        matches!(
            self,
            TargetGroup::Matrix {
                field: Field::Real,
                ..
            }
        )
    }

    /// Upper bound `‖u‖‖u⁻¹‖` for the operator norm of `Ad(u)`.
    pub fn ad_operator_norm(&self, u: &Value) -> Result<f64> {
        match u {
            Value::Matrix(m) => Ok(m.spectral() * m.inv()?.spectral()),
            Value::Vector(_) => Ok(1.0),
        }
    }

    /// A random algebra element of unit norm: Gaussian entries, projected to
    /// skew-Hermitian for unitary targets, real for real targets.
    pub fn random_direction(&self, rng: &mut SeededStream) -> Value {
        let raw = match self {
            TargetGroup::Matrix {
                dim,
                field,
                subtype,
            } => {
                let n = *dim;
                let mut data = Vec::with_capacity(n * n);
                for _ in 0..n * n {
                    let re = rng.gaussian();
                    let im = if *field == Field::Complex {
                        rng.gaussian()
                    } else {
                        0.0
                    };
                    data.push(Complex64::new(re, im));
                }
                let m = Matrix::new(n, n, data).expect("finite gaussian entries");
                let m = if *field == Field::Real {
                    m.realify(0.0)
                } else {
                    m
                };
                Value::Matrix(match subtype {
                    MatrixSubtype::Unitary => skew_hermitian_part(&m),
                    MatrixSubtype::GeneralLinear => m,
                })
            }
            TargetGroup::Abelian { dim } => {
                Value::Vector((0..*dim).map(|_| rng.gaussian()).collect())
            }
        };
        let n = raw.norm();
        if n == 0.0 {
            return self.zero_algebra();
        }
        raw.scale(1.0 / n)
    }
}

impl fmt::Display for TargetGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetGroup::Matrix {
                dim,
                field: Field::Real,
                subtype: MatrixSubtype::GeneralLinear,
            } => {
                write!(f, "GL{dim}(R)")
            }
            TargetGroup::Matrix {
                dim,
                subtype: MatrixSubtype::GeneralLinear,
                ..
            } => write!(f, "GL{dim}(C)"),
            TargetGroup::Matrix { dim, .. } => write!(f, "U({dim})"),
            TargetGroup::Abelian { dim } => write!(f, "R^{dim}"),
        }
    }
}

/// `(x − x*)/2`.
pub fn skew_hermitian_part(x: &Matrix) -> Matrix {
    (x - &x.adjoint()).scale_real(0.5)
}

type MatrixFn = Arc<dyn Fn(&GroupElement) -> Matrix + Send + Sync>;

/// A homomorphism `π: G → GL_m`, tabulated for finite groups or given by a
/// pure function for Lie groups. Each value is stored with its inverse.
#[derive(Clone)]
pub enum Representation {
    Table(Arc<Vec<(Matrix, Matrix)>>),
    Function {
        name: String,
        f: MatrixFn,
        inverse: MatrixFn,
    },
}

impl Representation {
    pub fn from_table(mats: Vec<Matrix>) -> Result<Representation> {
        let pairs = mats
            .into_iter()
            .map(|m| {
                let inv = m.inv()?;
                Ok((m, inv))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Representation::Table(Arc::new(pairs)))
    }

    pub fn function(
        name: impl Into<String>,
        f: impl Fn(&GroupElement) -> Matrix + Send + Sync + 'static,
        inverse: impl Fn(&GroupElement) -> Matrix + Send + Sync + 'static,
    ) -> Representation {
        Representation::Function {
            name: name.into(),
            f: Arc::new(f),
            inverse: Arc::new(inverse),
        }
    }

    pub fn at(&self, s: &GroupElement) -> Matrix {
        match (self, s) {
            (Representation::Table(t), GroupElement::Finite(i)) => t[*i].0.clone(),
            (Representation::Function { f, .. }, _) => f(s),
            _ => panic!("tabulated representation evaluated at a Lie group element"),
        }
    }

    pub fn inverse_at(&self, s: &GroupElement) -> Matrix {
        match (self, s) {
            (Representation::Table(t), GroupElement::Finite(i)) => t[*i].1.clone(),
            (Representation::Function { inverse, .. }, _) => inverse(s),
            _ => panic!("tabulated representation evaluated at a Lie group element"),
        }
    }

    fn pair(&self, s: &GroupElement) -> (Matrix, Matrix) {
        (self.at(s), self.inverse_at(s))
    }

    pub fn table(&self) -> Option<Vec<Matrix>> {
        match self {
            Representation::Table(t) => Some(t.iter().map(|(m, _)| m.clone()).collect()),
            Representation::Function { .. } => None,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Representation::Function { name, .. } => Some(name),
            Representation::Table(_) => None,
        }
    }

    pub fn dim(&self, g: &CompactGroup) -> usize {
        self.at(&g.identity()).rows()
    }

    /// Checks `π(e) = I` within `1e-12` and `π(st) = π(s)π(t)` within
    /// `1e-10` on all pairs (finite) or on seeded samples (Lie).
    pub fn validate(&self, g: &CompactGroup) -> Result<()> {
        if let (Representation::Table(t), Some(order)) = (self, g.order()) {
            if t.len() != order {
                return Err(Error::Dimension(format!(
                    "action table has {} entries, group order is {order}",
                    t.len()
                )));
            }
        }
        let e = self.at(&g.identity());
        if !e.is_square() || e.max_abs_diff(&Matrix::identity(e.rows())) > 1e-12 {
            return Err(Error::Invalid(
                "action does not send the identity to I".into(),
            ));
        }
        let pairs: Vec<(GroupElement, GroupElement)> = match g.elements() {
            Some(els) => els
                .iter()
                .flat_map(|s| els.iter().map(move |t| (s.clone(), t.clone())))
                .collect(),
            None => {
                let mut rng = SeededStream::new(0xac7, 0);
                (0..64)
                    .map(|_| (g.sample(&mut rng), g.sample(&mut rng)))
                    .collect()
            }
        };
        for (s, t) in pairs {
            let m = self.at(&s);
            if m.rows() != e.rows() || !m.is_square() {
                return Err(Error::Dimension(format!(
                    "action matrix at {s} has the wrong shape"
                )));
            }
            let st = g.mul(&s, &t)?;
            let r = (&m * &self.at(&t)).max_abs_diff(&self.at(&st));
            if r > 1e-10 {
                return Err(Error::Invalid(format!(
                    "action is not a homomorphism at ({s}, {t}): residual {r:e}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Table(t) => write!(f, "Table({} matrices)", t.len()),
            Representation::Function { name, .. } => write!(f, "Function({name})"),
        }
    }
}

/// The action `(s, x) ↦ ˢx` of `G` on `U` by automorphisms.
#[derive(Clone, Debug)]
pub enum GAction {
    Trivial,
    /// `ˢu = π(s)·u·π(s)⁻¹` on a matrix target.
    Conjugation(Representation),
    /// `ˢv = π(s)·v` on a vector target, `π` orthogonal.
    Linear(Representation),
}

impl GAction {
    pub fn is_trivial(&self) -> bool {
        matches!(self, GAction::Trivial)
    }

    /// Checks the action against the group and target: homomorphism,
    /// matching dimension, orthogonal for vectors, unitary for `U(n)`.
    pub fn validate(&self, g: &CompactGroup, target: &TargetGroup) -> Result<()> {
        let (rep, need_real) = match (self, target) {
            (GAction::Trivial, _) => return Ok(()),
            (GAction::Conjugation(rep), TargetGroup::Matrix { .. }) => (rep, false),
            (GAction::Linear(rep), TargetGroup::Abelian { .. }) => (rep, true),
            (GAction::Conjugation(_), _) => {
                return Err(Error::KindMismatch(
                    "conjugation action needs a matrix target".into(),
                ))
            }
            (GAction::Linear(_), _) => {
                return Err(Error::KindMismatch(
                    "linear action needs a vector target".into(),
                ))
            }
        };
        rep.validate(g)?;
        if rep.dim(g) != target.dim() {
            return Err(Error::Dimension(format!(
                "action has dimension {}, target has dimension {}",
                rep.dim(g),
                target.dim()
            )));
        }
        let samples: Vec<GroupElement> = match g.elements() {
            Some(els) => els,
            None => g
                .haar_scheme()
                .nodes
                .into_iter()
                .map(|(s, _)| s)
                .take(64)
                .collect(),
        };
        for s in samples {
            let m = rep.at(&s);
            if need_real && m.field() == Field::Complex {
                return Err(Error::KindMismatch(format!(
                    "linear action at {s} has complex entries"
                )));
            }
            let needs_isometry = need_real
                || matches!(
                    target,
                    TargetGroup::Matrix {
                        subtype: MatrixSubtype::Unitary,
                        ..
                    }
                );
            if needs_isometry {
                let r = (&(&m.adjoint() * &m) - &Matrix::identity(m.rows())).spectral();
                if r > 1e-10 {
                    return Err(Error::Invalid(format!(
                        "action at {s} is not an isometry: residual {r:e}"
                    )));
                }
            }
            if let TargetGroup::Matrix {
                field: Field::Real, ..
            } = target
            {
                if m.field() == Field::Complex {
                    return Err(Error::KindMismatch(format!(
                        "conjugation at {s} does not preserve real matrices"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `ˢu` on group values.
    pub fn act(&self, s: &GroupElement, u: &Value) -> Value {
        match (self, u) {
            (GAction::Trivial, _) => u.clone(),
            (GAction::Conjugation(rep), Value::Matrix(m)) => {
                let (p, pinv) = rep.pair(s);
                Value::Matrix(&(&p * m) * &pinv)
            }
            (GAction::Linear(rep), Value::Vector(v)) => Value::Vector(mat_vec(&rep.at(s), v)),
            _ => panic!("action kind does not match value kind"),
        }
    }

    /// The induced action on the Lie algebra. Both actions are linear in the
    /// matrix entries, so this is the same map.
    pub fn act_alg(&self, s: &GroupElement, x: &Value) -> Value {
        self.act(s, x)
    }
}

pub(crate) fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)].re * v[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_cyclic, build_symmetric};
    use crate::linalg::C64;

    fn real(rows: usize, data: &[f64]) -> Matrix {
        Matrix::real(rows, data.len() / rows, data).unwrap()
    }

    fn rotation_rep(n: usize) -> Representation {
        let mats = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                real(2, &[a.cos(), -a.sin(), a.sin(), a.cos()])
            })
            .collect();
        Representation::from_table(mats).unwrap()
    }

    fn random_matrix(rng: &mut SeededStream, n: usize, complex: bool) -> Matrix {
        let data = (0..n * n)
            .map(|_| C64::new(rng.gaussian(), if complex { rng.gaussian() } else { 0.0 }))
            .collect();
        Matrix::new(n, n, data).unwrap()
    }

    #[test]
    fn conjugation_by_hand() {
        let c2 = CompactGroup::Finite(build_cyclic(2).unwrap());
        let rep =
            Representation::from_table(vec![Matrix::identity(2), Matrix::diag_real(&[1.0, -1.0])])
                .unwrap();
        let a = GAction::Conjugation(rep);
        a.validate(&c2, &TargetGroup::general_linear(2, Field::Real))
            .unwrap();
        let u = Value::Matrix(real(2, &[0.0, 1.0, 0.0, 0.0]));
        let out = a.act(&GroupElement::Finite(1), &u);
        assert_eq!(out, Value::Matrix(real(2, &[0.0, -1.0, 0.0, 0.0])));
        assert_eq!(GAction::Trivial.act(&GroupElement::Finite(1), &u), u);
        let id =
            GAction::Conjugation(Representation::from_table(vec![Matrix::identity(2); 2]).unwrap());
        assert_eq!(id.act(&GroupElement::Finite(1), &u), u);
    }

    #[test]
    fn action_composes_and_is_an_automorphism() {
        let c4 = CompactGroup::Finite(build_cyclic(4).unwrap());
        let a = GAction::Conjugation(rotation_rep(4));
        let mut rng = SeededStream::new(3, 0);
        for s in 0..4 {
            for t in 0..4 {
                let (s, t) = (GroupElement::Finite(s), GroupElement::Finite(t));
                let st = c4.mul(&s, &t).unwrap();
                let u = Value::Matrix(random_matrix(&mut rng, 2, false));
                let v = Value::Matrix(random_matrix(&mut rng, 2, false));
                assert!(a.act(&st, &u).max_abs_diff(&a.act(&s, &a.act(&t, &u))) < 1e-10);
                let lhs = a.act(
                    &s,
                    &Value::Matrix(u.matrix().unwrap() * v.matrix().unwrap()),
                );
                let (x, y) = (a.act(&s, &u), a.act(&s, &v));
                let rhs = Value::Matrix(x.matrix().unwrap() * y.matrix().unwrap());
                assert!(lhs.max_abs_diff(&rhs) < 1e-10);
                // Brackets are preserved.
                let br = Value::Matrix(u.matrix().unwrap().commutator(v.matrix().unwrap()));
                let br2 = Value::Matrix(x.matrix().unwrap().commutator(y.matrix().unwrap()));
                assert!(a.act_alg(&s, &br).max_abs_diff(&br2) < 1e-12);
                // Naturality of exp.
                let t2 = TargetGroup::general_linear(2, Field::Real);
                let small = u.scale(0.3 / u.norm());
                let l = t2.exp(&a.act_alg(&s, &small)).unwrap();
                let r = a.act(&s, &t2.exp(&small).unwrap());
                assert!(l.max_abs_diff(&r) < 1e-11);
            }
        }
    }

    #[test]
    fn exp_log_charts() {
        let u2 = TargetGroup::unitary(2);
        let mut rng = SeededStream::new(4, 0);
        for _ in 0..20 {
            let x = u2.random_direction(&mut rng).scale(0.8);
            let e = u2.exp(&x).unwrap();
            u2.check_point(&e).unwrap();
            assert!(u2.log(&e).unwrap().max_abs_diff(&x) < 1e-12);
        }
        assert_eq!(u2.exp(&u2.zero_algebra()).unwrap(), u2.identity());
        let r3 = TargetGroup::abelian(3);
        let v = Value::Vector(vec![1.0, -2.0, 0.5]);
        assert_eq!(r3.exp(&v).unwrap(), v);
        assert_eq!(r3.log(&v).unwrap(), v);
        assert_eq!(r3.log(&r3.identity()).unwrap(), r3.zero_algebra());
    }

    #[test]
    fn ad_norm_examples() {
        let gl = TargetGroup::general_linear(2, Field::Real);
        assert!((gl.ad_operator_norm(&gl.identity()).unwrap() - 1.0).abs() < 1e-15);
        let d = Value::Matrix(Matrix::diag_real(&[10.0, 0.1]));
        assert!((gl.ad_operator_norm(&d).unwrap() - 100.0).abs() < 1e-10);
        let u2 = TargetGroup::unitary(2);
        let mut rng = SeededStream::new(1, 1);
        let u = u2.exp(&u2.random_direction(&mut rng)).unwrap();
        assert!((u2.ad_operator_norm(&u).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            TargetGroup::abelian(2)
                .ad_operator_norm(&Value::Vector(vec![3.0, 4.0]))
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn validation_rejects_bad_actions() {
        let c4 = CompactGroup::Finite(build_cyclic(4).unwrap());
        let gl = TargetGroup::general_linear(2, Field::Real);
        assert!(GAction::Conjugation(rotation_rep(4))
            .validate(&c4, &gl)
            .is_ok());
        // Rotation by a quarter turn on C₃ is not a homomorphism.
        let c3 = CompactGroup::Finite(build_cyclic(3).unwrap());
        let bad =
            Representation::from_table(rotation_rep(4).table().unwrap()[..3].to_vec()).unwrap();
        assert!(GAction::Conjugation(bad).validate(&c3, &gl).is_err());
        assert!(GAction::Linear(rotation_rep(4)).validate(&c4, &gl).is_err());
        assert!(GAction::Linear(rotation_rep(4))
            .validate(&c4, &TargetGroup::abelian(2))
            .is_ok());
        assert!(GAction::Linear(rotation_rep(4))
            .validate(&c4, &TargetGroup::abelian(3))
            .is_err());
        let s3 = CompactGroup::Finite(build_symmetric(3).unwrap());
        assert!(GAction::Linear(rotation_rep(4))
            .validate(&s3, &TargetGroup::abelian(2))
            .is_err());
    }

    #[test]
    fn membership_checks() {
        let u2 = TargetGroup::unitary(2);
        assert!(u2
            .check_point(&Value::Matrix(Matrix::diag_real(&[2.0, 1.0])))
            .is_err());
        assert!(u2.check_point(&Value::Matrix(Matrix::zeros(2, 2))).is_err());
        let gl = TargetGroup::general_linear(2, Field::Real);
        assert!(gl
            .check_point(&Value::Matrix(Matrix::diag_real(&[2.0, 1.0])))
            .is_ok());
        assert!(gl.check_point(&Value::Matrix(Matrix::zeros(2, 2))).is_err());
        assert!(gl.check_point(&Value::Vector(vec![1.0, 2.0])).is_err());
    }
}
