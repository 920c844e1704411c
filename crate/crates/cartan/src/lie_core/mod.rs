//! Matrix Lie group and Lie algebra kernels.
//!
//! Groups are realized as real n x n matrix groups; algebra elements are
//! ambient matrices kept in the span of a fixed basis. Tangent vectors at a
//! group element are plain ambient matrices, validated on trivialization.

mod expm;
mod spec;

pub use expm::{expm_pade, log_near_identity, matrix_norm_one};
pub use spec::{GroupKind, LieGroupSpec};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tol;

/// An element of the group: an ambient matrix satisfying the group constraint.
#[derive(Debug, Clone)]
pub struct GroupElement {
    matrix: DMatrix<f64>,
    spec: Arc<LieGroupSpec>,
}

/// An element of the Lie algebra: an ambient matrix in the basis span.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    matrix: DMatrix<f64>,
    spec: Arc<LieGroupSpec>,
}

fn check_same_spec(a: &Arc<LieGroupSpec>, b: &Arc<LieGroupSpec>) -> Result<()> {
    if a.name() != b.name() {
        return Err(Error::SpecMismatch(
            a.name().to_string(),
            b.name().to_string(),
        ));
    }
    Ok(())
}

impl GroupElement {
    /// Construct with the constraint check at the default tolerance.
    pub fn new(spec: Arc<LieGroupSpec>, matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(spec, matrix, tol::CONSTRUCTION)
    }

    pub fn with_tolerance(
        spec: Arc<LieGroupSpec>,
        matrix: DMatrix<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("group element"));
        }
        let residual = spec.constraint_residual(&matrix);
        if residual > tolerance {
            return Err(Error::ConstraintViolation {
                residual,
                tol: tolerance,
            });
        }
        Ok(Self { matrix, spec })
    }

    /// Construct without the residual check: for results of operations whose
    /// contracts already bound the residual.
    pub(crate) fn unchecked(spec: Arc<LieGroupSpec>, matrix: DMatrix<f64>) -> Self {
        Self { matrix, spec }
    }

    pub fn identity(spec: &Arc<LieGroupSpec>) -> Self {
        Self::unchecked(spec.clone(), DMatrix::identity(spec.ambient_dim(), spec.ambient_dim()))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &Arc<LieGroupSpec> {
        &self.spec
    }

    pub fn constraint_residual(&self) -> f64 {
        self.spec.constraint_residual(&self.matrix)
    }

    /// Frobenius distance to another element.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn is_identity(&self, tolerance: f64) -> bool {
        let n = self.spec.ambient_dim();
        (&self.matrix - DMatrix::<f64>::identity(n, n)).norm() <= tolerance
    }
}

impl AlgebraElement {
    /// Construct with the span check at the default tolerance.
    pub fn new(spec: Arc<LieGroupSpec>, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("algebra element"));
        }
        let dist = spec.span_distance(&matrix);
        if dist > tol::ALGEBRA_PROJECTION * (1.0 + matrix.norm()) {
            return Err(Error::NotInAlgebra { residual: dist });
        }
        Ok(Self {
            matrix: spec.project(&matrix),
            spec,
        })
    }

    pub(crate) fn unchecked(spec: Arc<LieGroupSpec>, matrix: DMatrix<f64>) -> Self {
        Self { matrix, spec }
    }

    pub fn zero(spec: &Arc<LieGroupSpec>) -> Self {
        Self::unchecked(spec.clone(), DMatrix::zeros(spec.ambient_dim(), spec.ambient_dim()))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &Arc<LieGroupSpec> {
        &self.spec
    }

    /// Coordinates in the algebra basis (Gram solve).
    pub fn coords(&self) -> nalgebra::DVector<f64> {
        self.spec.coords(&self.matrix)
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::unchecked(self.spec.clone(), &self.matrix * s)
    }

    pub fn add(&self, other: &AlgebraElement) -> Self {
        Self::unchecked(self.spec.clone(), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Self {
        Self::unchecked(self.spec.clone(), &self.matrix - &other.matrix)
    }

    pub fn distance(&self, other: &AlgebraElement) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// Group multiplication g.h.
pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    check_same_spec(g.spec(), h.spec())?;
    Ok(GroupElement::unchecked(
        g.spec.clone(),
        &g.matrix * &h.matrix,
    ))
}

/// Group inversion, with closed forms where the constraint gives one.
pub fn invert(g: &GroupElement) -> Result<GroupElement> {
    let m = &g.matrix;
    let inv = match g.spec.kind() {
        GroupKind::So3 => m.transpose(),
        GroupKind::Se3 => {
            let r = m.view((0, 0), (3, 3));
            let p = m.view((0, 3), (3, 1));
            let rt = r.transpose();
            let tp = -(&rt * p);
            let mut out = DMatrix::identity(4, 4);
            out.view_mut((0, 0), (3, 3)).copy_from(&rt);
            out.view_mut((0, 3), (3, 1)).copy_from(&tp);
            out
        }
        GroupKind::Rplus => {
            let x = m[(0, 0)];
            if x <= 0.0 {
                return Err(Error::Singular);
            }
            DMatrix::from_element(1, 1, 1.0 / x)
        }
        GroupKind::Heisenberg3 => {
            // unipotent: (I + N)^{-1} = I - N + N^2 with N^3 = 0
            let n_mat = m - DMatrix::<f64>::identity(3, 3);
            DMatrix::identity(3, 3) - &n_mat + &n_mat * &n_mat
        }
        _ => m.clone().try_inverse().ok_or(Error::Singular)?,
    };
    Ok(GroupElement::unchecked(g.spec.clone(), inv))
}

/// Lie bracket [X, Y] = XY - YX, re-projected onto the basis span.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_same_spec(x.spec(), y.spec())?;
    let comm = &x.matrix * &y.matrix - &y.matrix * &x.matrix;
    let dist = x.spec.span_distance(&comm);
    if dist > tol::ALGEBRA_PROJECTION * (1.0 + comm.norm()) {
        return Err(Error::NotInAlgebra { residual: dist });
    }
    Ok(AlgebraElement::unchecked(
        x.spec.clone(),
        x.spec.project(&comm),
    ))
}

/// ad(X)Y, an alias of the bracket.
pub fn ad(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    bracket(x, y)
}

/// Adjoint action Ad(g)X = g X g^{-1}, projected to the algebra.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    check_same_spec(g.spec(), x.spec())?;
    let ginv = invert(g)?;
    let m = &g.matrix * &x.matrix * &ginv.matrix;
    let dist = g.spec.span_distance(&m);
    if dist > tol::ALGEBRA_PROJECTION * (1.0 + m.norm()) {
        return Err(Error::NotInAlgebra { residual: dist });
    }
    Ok(AlgebraElement::unchecked(g.spec.clone(), g.spec.project(&m)))
}

/// Matrix exponential with per-group dispatch.
pub fn exp(x: &AlgebraElement) -> Result<GroupElement> {
    if !x.matrix.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("exp argument"));
    }
    let m = exp_matrix(&x.spec, &x.matrix);
    Ok(GroupElement::unchecked(x.spec.clone(), m))
}

/// Exponential on raw matrices (used in integrator hot loops).
pub(crate) fn exp_matrix(spec: &LieGroupSpec, x: &DMatrix<f64>) -> DMatrix<f64> {
    match spec.kind() {
        GroupKind::So3 => rodrigues(x),
        GroupKind::Heisenberg3 => {
            DMatrix::identity(3, 3) + x + (x * x).scale(0.5)
        }
        GroupKind::Rplus => DMatrix::from_element(1, 1, x[(0, 0)].exp()),
        _ => expm_pade(x),
    }
}

fn rodrigues(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (w1, w2, w3) = (x[(2, 1)], x[(0, 2)], x[(1, 0)]);
    let theta2 = w1 * w1 + w2 * w2 + w3 * w3;
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    DMatrix::identity(3, 3) + x.scale(a) + (x * x).scale(b)
}

pub(crate) const BERNOULLI_OVER_FACTORIAL: [f64; 9] = [
    1.0,
    -0.5,
    1.0 / 12.0,
    0.0,
    -1.0 / 720.0,
    0.0,
    1.0 / 30240.0,
    0.0,
    -1.0 / 1209600.0,
];

/// Truncated inverse of the differential of exp:
/// dexpinv(X, Y) = sum_k B_k/k! ad_X^k Y up to `order` bracket applications.
pub fn dexpinv(x: &AlgebraElement, y: &AlgebraElement, order: usize) -> Result<AlgebraElement> {
    check_same_spec(x.spec(), y.spec())?;
    let m = dexpinv_matrix(&x.spec, &x.matrix, &y.matrix, order);
    Ok(AlgebraElement::unchecked(x.spec.clone(), m))
}

pub(crate) fn dexpinv_matrix(
    spec: &LieGroupSpec,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    order: usize,
) -> DMatrix<f64> {
    let order = order.min(BERNOULLI_OVER_FACTORIAL.len() - 1);
    let mut acc = y.clone();
    let mut term = y.clone();
    for coeff in BERNOULLI_OVER_FACTORIAL.iter().take(order + 1).skip(1) {
        term = spec.project(&(x * &term - &term * x));
        if *coeff != 0.0 {
            acc += term.scale(*coeff);
        }
    }
    acc
}

/// Right Maurer-Cartan trivialization of a tangent matrix v at g: v g^{-1}.
pub fn kappa_right(g: &GroupElement, v: &DMatrix<f64>) -> Result<AlgebraElement> {
    if !v.iter().all(|val| val.is_finite()) {
        return Err(Error::NonFinite("tangent matrix"));
    }
    let ginv = invert(g)?;
    let m = v * &ginv.matrix;
    trivialized(&g.spec, m)
}

/// Left Maurer-Cartan trivialization: g^{-1} v.
pub fn kappa_left(g: &GroupElement, v: &DMatrix<f64>) -> Result<AlgebraElement> {
    if !v.iter().all(|val| val.is_finite()) {
        return Err(Error::NonFinite("tangent matrix"));
    }
    let ginv = invert(g)?;
    let m = &ginv.matrix * v;
    trivialized(&g.spec, m)
}

fn trivialized(spec: &Arc<LieGroupSpec>, m: DMatrix<f64>) -> Result<AlgebraElement> {
    let dist = spec.span_distance(&m);
    if dist > tol::CONSTRUCTION * (1.0 + m.norm()) {
        return Err(Error::NotTangent { residual: dist });
    }
    Ok(AlgebraElement::unchecked(spec.clone(), spec.project(&m)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Discrete logarithmic derivative of a sampled curve.
///
/// Central differences at interior nodes, one-sided at the endpoints,
/// trivialized by the chosen Maurer-Cartan form.
pub fn log_derivative_sampled(
    samples: &[(f64, GroupElement)],
    side: Side,
) -> Result<Vec<(f64, AlgebraElement)>> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::NonFinite("sample times must strictly increase"));
        }
    }
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let dt = samples[hi].0 - samples[lo].0;
        let v = (samples[hi].1.matrix() - samples[lo].1.matrix()).scale(1.0 / dt);
        // discrete derivatives are only O(dt)-tangent; project without the
        // strict kappa residual check
        let ginv = invert(&samples[i].1)?;
        let m = match side {
            Side::Right => &v * &ginv.matrix,
            Side::Left => &ginv.matrix * &v,
        };
        let spec = samples[i].1.spec();
        let x = AlgebraElement::unchecked(spec.clone(), spec.project(&m));
        out.push((samples[i].0, x));
    }
    Ok(out)
}
