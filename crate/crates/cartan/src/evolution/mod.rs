//! The 1-D evolution operator and the development of flat forms.
//!
//! Development integrates each grid point independently along the radial
//! segment from the base point, which both parallelizes trivially and
//! matches the star-shaped-chart construction that makes the developed map
//! well defined on simply connected domains.

pub mod integrator;

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{Grid, OneForm};
use crate::lie_core::{
    adjoint, invert, kappa_left, AlgebraElement, GroupElement, GroupKind, LieGroupSpec,
};
use crate::tol;

use integrator::{rk4_ambient_curve, rkmk4_curve, rkmk4_end, EvolSide, MatrixGroup};

/// A smooth algebra-valued curve on [0, T].
#[derive(Clone)]
pub struct AlgebraCurve {
    pub spec: Arc<LieGroupSpec>,
    f: Arc<dyn Fn(f64) -> Result<AlgebraElement> + Send + Sync>,
}

impl AlgebraCurve {
    pub fn new(
        spec: Arc<LieGroupSpec>,
        f: Arc<dyn Fn(f64) -> Result<AlgebraElement> + Send + Sync>,
    ) -> Self {
        Self { spec, f }
    }

    pub fn constant(a: AlgebraElement) -> Self {
        let spec = a.spec().clone();
        Self::new(spec, Arc::new(move |_t| Ok(a.clone())))
    }

    pub fn zero(spec: &Arc<LieGroupSpec>) -> Self {
        Self::constant(AlgebraElement::zero(spec))
    }

    pub fn eval(&self, t: f64) -> Result<AlgebraElement> {
        (self.f)(t)
    }

    /// t -> c1 X(t) + c2 Y(t).
    pub fn linear_combination(x: &AlgebraCurve, c1: f64, y: &AlgebraCurve, c2: f64) -> Self {
        let (x, y) = (x.clone(), y.clone());
        Self::new(
            x.spec.clone(),
            Arc::new(move |t| Ok(x.eval(t)?.scale(c1).add(&y.eval(t)?.scale(c2)))),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rkmk4,
    Rk4Ambient,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolConfig {
    pub integrator: Integrator,
    pub steps: usize,
    pub dexpinv_order: usize,
}

impl Default for EvolConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rkmk4,
            steps: 256,
            dexpinv_order: 4,
        }
    }
}

impl EvolConfig {
    pub fn rkmk4(steps: usize) -> Self {
        Self {
            integrator: Integrator::Rkmk4,
            steps,
            dexpinv_order: 4,
        }
    }

    pub fn rk4_ambient(steps: usize) -> Self {
        Self {
            integrator: Integrator::Rk4Ambient,
            steps,
            dexpinv_order: 4,
        }
    }
}

fn raw_rhs(x: &AlgebraCurve) -> impl Fn(f64) -> Result<DMatrix<f64>> + '_ {
    move |t| Ok(x.eval(t)?.matrix().clone())
}

fn evolve_matrix(
    spec: &Arc<LieGroupSpec>,
    rhs: &dyn Fn(f64) -> Result<DMatrix<f64>>,
    t_end: f64,
    cfg: &EvolConfig,
    side: EvolSide,
) -> Result<DMatrix<f64>> {
    match cfg.integrator {
        Integrator::Rkmk4 => rkmk4_end(
            &MatrixGroup { spec },
            &rhs,
            t_end,
            cfg.steps,
            cfg.dexpinv_order,
            side,
        ),
        Integrator::Rk4Ambient => Ok(rk4_ambient_curve(spec, &rhs, t_end, cfg.steps, side)?
            .pop()
            .expect("curve is nonempty")
            .1),
    }
}

/// Solve g' = X(t) g, g(0) = e up to time T.
pub fn evol_right(x: &AlgebraCurve, t_end: f64, cfg: &EvolConfig) -> Result<GroupElement> {
    let m = evolve_matrix(&x.spec, &raw_rhs(x), t_end, cfg, EvolSide::Right)?;
    Ok(GroupElement::unchecked(x.spec.clone(), m))
}

/// The sampled solution curve of g' = X(t) g on [0, T] (steps + 1 points).
pub fn evol_right_curve(
    x: &AlgebraCurve,
    t_end: f64,
    cfg: &EvolConfig,
) -> Result<Vec<(f64, GroupElement)>> {
    let raw = match cfg.integrator {
        Integrator::Rkmk4 => rkmk4_curve(
            &MatrixGroup { spec: &x.spec },
            &raw_rhs(x),
            t_end,
            cfg.steps,
            cfg.dexpinv_order,
            EvolSide::Right,
        )?,
        Integrator::Rk4Ambient => {
            rk4_ambient_curve(&x.spec, &raw_rhs(x), t_end, cfg.steps, EvolSide::Right)?
        }
    };
    Ok(raw
        .into_iter()
        .map(|(t, m)| (t, GroupElement::unchecked(x.spec.clone(), m)))
        .collect())
}

/// Solve g' = g X(t), g(0) = e up to time T.
pub fn evol_left(x: &AlgebraCurve, t_end: f64, cfg: &EvolConfig) -> Result<GroupElement> {
    let m = evolve_matrix(&x.spec, &raw_rhs(x), t_end, cfg, EvolSide::Left)?;
    Ok(GroupElement::unchecked(x.spec.clone(), m))
}

/// Right-hand side for an evolution reparameterized by f: t -> f'(t) X(f(t)).
pub fn reparam_rhs(
    x: &AlgebraCurve,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
) -> AlgebraCurve {
    let x = x.clone();
    AlgebraCurve::new(
        x.spec.clone(),
        Arc::new(move |t| Ok(x.eval(f(t))?.scale(f_prime(t)))),
    )
}

/// Max constraint residual along the solution curve (drift diagnostic).
pub fn constraint_drift(x: &AlgebraCurve, t_end: f64, cfg: &EvolConfig) -> Result<f64> {
    Ok(evol_right_curve(x, t_end, cfg)?
        .iter()
        .map(|(_, g)| g.constraint_residual())
        .fold(0.0, f64::max))
}

/// The radial algebra curve t -> xi_{t x}(x) whose evolution develops xi at x.
pub fn radial_curve(xi: &OneForm, x: &[f64]) -> AlgebraCurve {
    let xi = xi.clone();
    let x = x.to_vec();
    AlgebraCurve::new(
        xi.spec.clone(),
        Arc::new(move |t| {
            let point: Vec<f64> = x.iter().map(|xi| t * xi).collect();
            xi.eval(&point, &x)
        }),
    )
}

/// Develop xi at a single point along the radial segment from the origin.
pub fn develop_at(xi: &OneForm, x: &[f64], cfg: &EvolConfig) -> Result<GroupElement> {
    if !xi.domain.contains(x) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    evol_right(&radial_curve(xi, x), 1.0, cfg)
}

#[derive(Debug, Clone)]
pub struct DevelopDiagnostics {
    pub max_constraint_residual: f64,
    pub basepoint_error: f64,
    /// Maurer-Cartan residual of the input if the flatness check failed.
    pub flat_warning: Option<f64>,
}

/// The developed map on a grid, with per-run diagnostics.
#[derive(Debug, Clone)]
pub struct DevelopedMap {
    pub grid: Grid,
    pub values: Vec<GroupElement>,
    pub diagnostics: DevelopDiagnostics,
}

impl DevelopedMap {
    pub fn value(&self, index: usize) -> &GroupElement {
        &self.values[index]
    }
}

/// Develop a flat form over a whole grid (one independent radial solve per
/// point). Non-flat input downgrades to a recorded warning so that negative
/// controls stay runnable.
pub fn develop(xi: &OneForm, grid: &Grid, cfg: &EvolConfig) -> Result<DevelopedMap> {
    let flat_warning = match xi.flatness(5, tol::FLATNESS) {
        Ok(report) if !report.flat => Some(report.max_residual),
        _ => None,
    };
    let values: Vec<GroupElement> = (0..grid.len())
        .into_par_iter()
        .map(|i| develop_at(xi, &grid.point(i), cfg))
        .collect::<Result<_>>()?;
    let max_constraint_residual = values
        .iter()
        .map(|g| g.constraint_residual())
        .fold(0.0, f64::max);
    let basepoint_error = grid
        .points()
        .position(|x| x.iter().all(|v| *v == 0.0))
        .map(|i| {
            let n = xi.spec.ambient_dim();
            (values[i].matrix() - DMatrix::<f64>::identity(n, n)).norm()
        })
        .unwrap_or(0.0);
    Ok(DevelopedMap {
        grid: grid.clone(),
        values,
        diagnostics: DevelopDiagnostics {
            max_constraint_residual,
            basepoint_error,
            flat_warning,
        },
    })
}

/// A piecewise-C1 path in the domain, parameterized over [0, 1].
#[derive(Clone)]
pub enum PathCurve {
    Smooth {
        point: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
        velocity: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    },
    Polyline {
        vertices: Vec<Vec<f64>>,
    },
}

impl PathCurve {
    pub fn polyline(vertices: Vec<Vec<f64>>) -> Self {
        assert!(vertices.len() >= 2);
        Self::Polyline { vertices }
    }

    /// Straight segment from the origin to x.
    pub fn radial(x: &[f64]) -> Self {
        Self::polyline(vec![vec![0.0; x.len()], x.to_vec()])
    }

    /// Axis-parallel staircase from the origin to x (one leg per axis).
    pub fn staircase(x: &[f64]) -> Self {
        let mut vertices = vec![vec![0.0; x.len()]];
        let mut cur = vec![0.0; x.len()];
        for (i, xi) in x.iter().enumerate() {
            cur[i] = *xi;
            vertices.push(cur.clone());
        }
        Self::polyline(vertices)
    }

    /// Square loop with corner at the origin and side length `side` in the
    /// (axis1, axis2) plane.
    pub fn square_loop(dim: usize, axis1: usize, axis2: usize, side: f64) -> Self {
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        let mut c = vec![0.0; dim];
        a[axis1] = side;
        b[axis1] = side;
        b[axis2] = side;
        c[axis2] = side;
        Self::polyline(vec![vec![0.0; dim], a, b, c, vec![0.0; dim]])
    }

    pub fn start(&self) -> Vec<f64> {
        match self {
            Self::Smooth { point, .. } => point(0.0),
            Self::Polyline { vertices } => vertices[0].clone(),
        }
    }

    pub fn end(&self) -> Vec<f64> {
        match self {
            Self::Smooth { point, .. } => point(1.0),
            Self::Polyline { vertices } => vertices[vertices.len() - 1].clone(),
        }
    }
}

/// Transport along a path: the evolution of t -> xi_{c(t)}(c'(t)).
///
/// Polylines are integrated segment by segment so the corner kinks do not
/// degrade the integrator order.
pub fn develop_path(xi: &OneForm, path: &PathCurve, cfg: &EvolConfig) -> Result<GroupElement> {
    match path {
        PathCurve::Smooth { point, velocity } => {
            let xi2 = xi.clone();
            let (point, velocity) = (point.clone(), velocity.clone());
            let curve = AlgebraCurve::new(
                xi.spec.clone(),
                Arc::new(move |t| {
                    let x = point(t);
                    if !xi2.domain.contains(&x) {
                        return Err(Error::PathExitsDomain(t));
                    }
                    xi2.eval(&x, &velocity(t))
                }),
            );
            evol_right(&curve, 1.0, cfg)
        }
        PathCurve::Polyline { vertices } => {
            let mut g = GroupElement::identity(&xi.spec);
            for pair in vertices.windows(2) {
                let (a, b) = (pair[0].clone(), pair[1].clone());
                if !xi.domain.contains(&a) || !xi.domain.contains(&b) {
                    return Err(Error::PathExitsDomain(0.0));
                }
                let v: Vec<f64> = b.iter().zip(&a).map(|(bi, ai)| bi - ai).collect();
                let xi2 = xi.clone();
                let (a2, v2) = (a.clone(), v.clone());
                let curve = AlgebraCurve::new(
                    xi.spec.clone(),
                    Arc::new(move |t| {
                        let x: Vec<f64> =
                            a2.iter().zip(&v2).map(|(ai, vi)| ai + t * vi).collect();
                        xi2.eval(&x, &v2)
                    }),
                );
                // transport composes on the left along the concatenation
                g = crate::lie_core::compose(&evol_right(&curve, 1.0, cfg)?, &g)?;
            }
            Ok(g)
        }
    }
}

/// Transport around a closed loop. Identity iff the form is flat (on a
/// simply connected domain).
pub fn holonomy(xi: &OneForm, path: &PathCurve, cfg: &EvolConfig) -> Result<GroupElement> {
    let start = path.start();
    let end = path.end();
    let gap = start
        .iter()
        .zip(&end)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if gap > 1e-9 {
        return Err(Error::LoopNotClosed(gap));
    }
    develop_path(xi, path, cfg)
}

/// The principal connection form of xi evaluated at (x, g) on the pair
/// (Y, V): kappa_l(g, V) - Ad(g^{-1}) xi_x(Y).
pub fn connection_omega(
    xi: &OneForm,
    x: &[f64],
    g: &GroupElement,
    y_dir: &[f64],
    v: &DMatrix<f64>,
) -> Result<AlgebraElement> {
    let vertical = kappa_left(g, v)?;
    let pulled = adjoint(&invert(g)?, &xi.eval(x, y_dir)?)?;
    Ok(vertical.sub(&pulled))
}

/// Supported group homomorphisms for naturality checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hom {
    /// det: GL(n) -> (R+, .) with derivative the trace.
    Det,
    /// inclusion SO(3) -> GL(3) with identity derivative.
    InclusionSo3Gl3,
}

impl Hom {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "det" => Ok(Self::Det),
            "inclusion-so3-gl3" => Ok(Self::InclusionSo3Gl3),
            other => Err(Error::UnsupportedHom(other.to_string())),
        }
    }

    fn target(&self) -> Arc<LieGroupSpec> {
        match self {
            Self::Det => LieGroupSpec::rplus(),
            Self::InclusionSo3Gl3 => LieGroupSpec::gl(3),
        }
    }

    fn apply_group(&self, g: &GroupElement) -> Result<GroupElement> {
        let target = self.target();
        match self {
            Self::Det => {
                let d = g.matrix().determinant();
                GroupElement::new(target, DMatrix::from_element(1, 1, d))
            }
            Self::InclusionSo3Gl3 => {
                GroupElement::new(target, g.matrix().clone())
            }
        }
    }

    fn apply_algebra(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        let target = self.target();
        match self {
            Self::Det => Ok(AlgebraElement::unchecked(
                target,
                DMatrix::from_element(1, 1, x.matrix().trace()),
            )),
            Self::InclusionSo3Gl3 => AlgebraElement::new(target, x.matrix().clone()),
        }
    }

    fn check_source(&self, spec: &LieGroupSpec) -> Result<()> {
        let ok = match self {
            Self::Det => matches!(spec.kind(), GroupKind::Gl(_)),
            Self::InclusionSo3Gl3 => spec.kind() == GroupKind::So3,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedHom(format!(
                "{self:?} does not apply to {}",
                spec.name()
            )))
        }
    }
}

/// Max deviation over the grid between phi(Evol_G(xi)) and Evol_H(phi' o xi).
pub fn naturality_check(xi: &OneForm, hom: Hom, grid: &Grid, cfg: &EvolConfig) -> Result<f64> {
    hom.check_source(&xi.spec)?;
    let target = hom.target();
    let mapped = xi.map_algebra(
        target,
        {
            let hom = hom;
            Arc::new(move |a: &AlgebraElement| hom.apply_algebra(a))
        },
        "hom",
    );
    let source_dev = develop(xi, grid, cfg)?;
    let target_dev = develop(&mapped, grid, cfg)?;
    let mut max_dev: f64 = 0.0;
    for i in 0..grid.len() {
        let lhs = hom.apply_group(source_dev.value(i))?;
        max_dev = max_dev.max(lhs.distance(target_dev.value(i)));
    }
    Ok(max_dev)
}

/// Max deviation of Evol(h^* xi) = Evol(xi) o h over the grid, for the
/// diagonal-affine chart map h(y) = scales .* y.
pub fn domain_reparam_check(
    xi: &OneForm,
    scales: &[f64],
    grid: &Grid,
    cfg: &EvolConfig,
) -> Result<f64> {
    let pulled = xi.pullback_affine_diag(scales, grid.domain.clone());
    let dev = develop(&pulled, grid, cfg)?;
    let mut max_dev: f64 = 0.0;
    for i in 0..grid.len() {
        let y = grid.point(i);
        let hx: Vec<f64> = y.iter().zip(scales).map(|(yi, s)| yi * s).collect();
        let direct = develop_at(xi, &hx, cfg)?;
        max_dev = max_dev.max(dev.value(i).distance(&direct));
    }
    Ok(max_dev)
}

/// Max deviation of the 1-D reparameterization law
/// Evol(X)(f(t)) = Evol(f'.(X o f))(t) . Evol(X)(f(0)) over sample times.
pub fn reparam_law_deviation(
    x: &AlgebraCurve,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    cfg: &EvolConfig,
) -> Result<f64> {
    let rhs = reparam_rhs(x, f.clone(), f_prime);
    let base_at_f0 = evol_right(x, f(0.0), cfg)?;
    let mut max_dev: f64 = 0.0;
    for t in [0.25, 0.5, 0.75, 1.0] {
        let lhs = evol_right(x, f(t), cfg)?;
        let rhs_val = crate::lie_core::compose(&evol_right(&rhs, t, cfg)?, &base_at_f0)?;
        max_dev = max_dev.max(lhs.distance(&rhs_val));
    }
    Ok(max_dev)
}

/// Least-squares slope of log(error) against log(1/steps).
pub fn convergence_slope(errors: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .map(|(n, e)| ((1.0 / *n as f64).ln(), e.max(1e-300).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
