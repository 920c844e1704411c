//! Generic 4th-order Runge-Kutta-Munthe-Kaas driver.
//!
//! The driver is written once over a small group interface so that the
//! semidirect-product integrator performs, on its base-group component,
//! exactly the same floating-point operations as the plain matrix-group
//! integrator.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::lie_core::{dexpinv_matrix, exp_matrix, LieGroupSpec};

/// Minimal group interface needed by the Lie-group integrator.
pub trait EvolGroup {
    type Point: Clone;
    type Vel: Clone;

    fn identity(&self) -> Self::Point;
    fn exp(&self, v: &Self::Vel) -> Self::Point;
    fn mul(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    fn dexpinv(&self, x: &Self::Vel, y: &Self::Vel, order: usize) -> Self::Vel;
    fn scale(&self, v: &Self::Vel, s: f64) -> Self::Vel;
    fn add(&self, a: &Self::Vel, b: &Self::Vel) -> Self::Vel;
    fn negate(&self, v: &Self::Vel) -> Self::Vel {
        self.scale(v, -1.0)
    }
}

/// Which side the equation is trivialized on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolSide {
    /// g' = X(t) . g, stepped as g <- exp(Omega) . g
    Right,
    /// g' = g . X(t), stepped as g <- g . exp(Omega)
    Left,
}

/// One RKMK4 step of size h from time t.
fn rkmk4_step<G, F>(
    group: &G,
    g: &G::Point,
    t: f64,
    h: f64,
    rhs: &F,
    order: usize,
    side: EvolSide,
) -> Result<G::Point>
where
    G: EvolGroup,
    F: Fn(f64) -> Result<G::Vel>,
{
    // For the right equation the step generator Omega solves
    // Omega' = dexpinv(Omega, X); for the left equation the sign of the
    // first dexpinv argument flips.
    let sign = match side {
        EvolSide::Right => 1.0,
        EvolSide::Left => -1.0,
    };
    let k1 = rhs(t)?;
    let mid = rhs(t + 0.5 * h)?;
    let k2 = group.dexpinv(&group.scale(&k1, sign * 0.5 * h), &mid, order);
    let k3 = group.dexpinv(&group.scale(&k2, sign * 0.5 * h), &mid, order);
    let k4 = group.dexpinv(&group.scale(&k3, sign * h), &rhs(t + h)?, order);
    let sum = group.add(
        &group.add(&k1, &group.scale(&k2, 2.0)),
        &group.add(&group.scale(&k3, 2.0), &k4),
    );
    let omega = group.scale(&sum, h / 6.0);
    let step = group.exp(&omega);
    Ok(match side {
        EvolSide::Right => group.mul(&step, g),
        EvolSide::Left => group.mul(g, &step),
    })
}

/// Integrate from the identity over [0, t_end] with `steps` uniform steps,
/// returning the full sampled curve (steps + 1 points).
pub fn rkmk4_curve<G, F>(
    group: &G,
    rhs: &F,
    t_end: f64,
    steps: usize,
    order: usize,
    side: EvolSide,
) -> Result<Vec<(f64, G::Point)>>
where
    G: EvolGroup,
    F: Fn(f64) -> Result<G::Vel>,
{
    assert!(steps >= 1);
    let h = t_end / steps as f64;
    let mut g = group.identity();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, g.clone()));
    for k in 0..steps {
        let t = k as f64 * h;
        g = rkmk4_step(group, &g, t, h, rhs, order, side)?;
        out.push((t + h, g.clone()));
    }
    Ok(out)
}

/// Endpoint-only variant of [`rkmk4_curve`].
pub fn rkmk4_end<G, F>(
    group: &G,
    rhs: &F,
    t_end: f64,
    steps: usize,
    order: usize,
    side: EvolSide,
) -> Result<G::Point>
where
    G: EvolGroup,
    F: Fn(f64) -> Result<G::Vel>,
{
    assert!(steps >= 1);
    let h = t_end / steps as f64;
    let mut g = group.identity();
    for k in 0..steps {
        let t = k as f64 * h;
        g = rkmk4_step(group, &g, t, h, rhs, order, side)?;
    }
    Ok(g)
}

/// The plain matrix group as an integrator group.
pub struct MatrixGroup<'a> {
    pub spec: &'a LieGroupSpec,
}

impl EvolGroup for MatrixGroup<'_> {
    type Point = DMatrix<f64>;
    type Vel = DMatrix<f64>;

    fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.spec.ambient_dim(), self.spec.ambient_dim())
    }

    fn exp(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        exp_matrix(self.spec, v)
    }

    fn mul(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b
    }

    fn dexpinv(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, order: usize) -> DMatrix<f64> {
        dexpinv_matrix(self.spec, x, y, order)
    }

    fn scale(&self, v: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
        v.scale(s)
    }

    fn add(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a + b
    }
}

/// Classical RK4 on the ambient matrix ODE g' = X(t) g (right) or
/// g' = g X(t) (left), with no reprojection onto the group.
pub fn rk4_ambient_curve<F>(
    spec: &LieGroupSpec,
    rhs: &F,
    t_end: f64,
    steps: usize,
    side: EvolSide,
) -> Result<Vec<(f64, DMatrix<f64>)>>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    assert!(steps >= 1);
    let n = spec.ambient_dim();
    let h = t_end / steps as f64;
    let mut g = DMatrix::<f64>::identity(n, n);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, g.clone()));
    let field = |t: f64, g: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let x = rhs(t)?;
        Ok(match side {
            EvolSide::Right => &x * g,
            EvolSide::Left => g * &x,
        })
    };
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = field(t, &g)?;
        let k2 = field(t + 0.5 * h, &(&g + k1.scale(0.5 * h)))?;
        let k3 = field(t + 0.5 * h, &(&g + k2.scale(0.5 * h)))?;
        let k4 = field(t + h, &(&g + k3.scale(h)))?;
        g += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        out.push((t + h, g.clone()));
    }
    Ok(out)
}
