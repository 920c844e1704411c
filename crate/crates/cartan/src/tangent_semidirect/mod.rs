//! The tangent group as a semidirect product.
//!
//! Right trivialization identifies TG with pairs (X, g) in g x G carrying
//! the semidirect product, and its Lie algebra with pairs (X, Y) in g x g.
//! The same generic integrator that drives the plain matrix evolution runs
//! on the pair group, so the G-component of every pair computation repeats
//! the base computation operation for operation.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::integrator::{rkmk4_end, EvolGroup, EvolSide};
use crate::evolution::{evol_right, evol_right_curve, AlgebraCurve, EvolConfig};
use crate::flat_group::linearized_flatness;
use crate::forms::{Grid, OneForm};
use crate::lie_core::{
    adjoint, bracket, compose, dexpinv_matrix, exp, exp_matrix, invert, AlgebraElement,
    GroupElement, LieGroupSpec,
};
use crate::quadrature::gauss_legendre_01;
use crate::tol;

/// Budget for the agreement of the two evol_sd routes.
pub const ROUTE_TOL: f64 = 1e-6;
/// Quadrature nodes for sd_exp.
pub const SD_EXP_NODES: usize = 32;

/// A point (X, g) of the pair group g x G.
#[derive(Debug, Clone)]
pub struct SemidirectElement {
    pub lin: AlgebraElement,
    pub grp: GroupElement,
}

impl SemidirectElement {
    pub fn new(lin: AlgebraElement, grp: GroupElement) -> Result<Self> {
        if lin.spec().name() != grp.spec().name() {
            return Err(Error::SpecMismatch(
                lin.spec().name().to_string(),
                grp.spec().name().to_string(),
            ));
        }
        Ok(Self { lin, grp })
    }

    pub fn identity(spec: &Arc<LieGroupSpec>) -> Self {
        Self {
            lin: AlgebraElement::zero(spec),
            grp: GroupElement::identity(spec),
        }
    }

    pub fn distance(&self, other: &SemidirectElement) -> f64 {
        self.lin.sub(&other.lin).norm() + self.grp.distance(&other.grp)
    }

    pub fn is_identity(&self, tolerance: f64) -> bool {
        self.lin.norm() <= tolerance && self.grp.is_identity(tolerance)
    }
}

/// An element (X, Y) of the pair algebra g x g.
#[derive(Debug, Clone)]
pub struct SemidirectAlgebra {
    pub lin: AlgebraElement,
    pub base: AlgebraElement,
}

impl SemidirectAlgebra {
    pub fn new(lin: AlgebraElement, base: AlgebraElement) -> Result<Self> {
        if lin.spec().name() != base.spec().name() {
            return Err(Error::SpecMismatch(
                lin.spec().name().to_string(),
                base.spec().name().to_string(),
            ));
        }
        Ok(Self { lin, base })
    }

    pub fn zero(spec: &Arc<LieGroupSpec>) -> Self {
        Self {
            lin: AlgebraElement::zero(spec),
            base: AlgebraElement::zero(spec),
        }
    }

    pub fn norm(&self) -> f64 {
        self.lin.norm() + self.base.norm()
    }

    pub fn sub(&self, other: &SemidirectAlgebra) -> SemidirectAlgebra {
        SemidirectAlgebra {
            lin: self.lin.sub(&other.lin),
            base: self.base.sub(&other.base),
        }
    }
}

fn check_pair_specs(a: &Arc<LieGroupSpec>, b: &Arc<LieGroupSpec>) -> Result<()> {
    if a.name() != b.name() {
        return Err(Error::SpecMismatch(
            a.name().to_string(),
            b.name().to_string(),
        ));
    }
    Ok(())
}

/// (X, g) . (Y, h) = (X + Ad(g) Y, g h).
pub fn sd_multiply(a: &SemidirectElement, b: &SemidirectElement) -> Result<SemidirectElement> {
    check_pair_specs(a.grp.spec(), b.grp.spec())?;
    Ok(SemidirectElement {
        lin: a.lin.add(&adjoint(&a.grp, &b.lin)?),
        grp: compose(&a.grp, &b.grp)?,
    })
}

/// (X, g)^{-1} = (-Ad(g^{-1}) X, g^{-1}).
pub fn sd_invert(a: &SemidirectElement) -> Result<SemidirectElement> {
    let ginv = invert(&a.grp)?;
    Ok(SemidirectElement {
        lin: adjoint(&ginv, &a.lin)?.scale(-1.0),
        grp: ginv,
    })
}

/// Ad_{(X, g)} (Y, Z) = (Ad(g) Y - [Ad(g) Z, X], Ad(g) Z).
pub fn sd_adjoint(a: &SemidirectElement, v: &SemidirectAlgebra) -> Result<SemidirectAlgebra> {
    check_pair_specs(a.grp.spec(), v.base.spec())?;
    let ad_base = adjoint(&a.grp, &v.base)?;
    let ad_lin = adjoint(&a.grp, &v.lin)?;
    Ok(SemidirectAlgebra {
        lin: ad_lin.sub(&bracket(&ad_base, &a.lin)?),
        base: ad_base,
    })
}

/// [(X1, Y1), (X2, Y2)] = ([Y1, X2] - [Y2, X1], [Y1, Y2]).
pub fn sd_bracket(u: &SemidirectAlgebra, v: &SemidirectAlgebra) -> Result<SemidirectAlgebra> {
    check_pair_specs(u.base.spec(), v.base.spec())?;
    Ok(SemidirectAlgebra {
        lin: bracket(&u.base, &v.lin)?.sub(&bracket(&v.base, &u.lin)?),
        base: bracket(&u.base, &v.base)?,
    })
}

/// exp(X, Y) = (int_0^1 Ad(exp(s Y)) X ds, exp Y).
pub fn sd_exp(v: &SemidirectAlgebra) -> Result<SemidirectElement> {
    let mut acc = AlgebraElement::zero(v.lin.spec());
    for (s, w) in gauss_legendre_01(SD_EXP_NODES) {
        let g = exp(&v.base.scale(s))?;
        acc = acc.add(&adjoint(&g, &v.lin)?.scale(w));
    }
    if !acc.matrix().iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("sd_exp quadrature"));
    }
    Ok(SemidirectElement {
        lin: acc,
        grp: exp(&v.base)?,
    })
}

/// The pair group as an integrator group. `dexpinv` on the G-component
/// repeats the matrix-group series term for term, which is what makes the
/// base component of pair evolutions bit-identical to the plain evolution.
pub struct SemidirectGroup<'a> {
    pub spec: &'a Arc<LieGroupSpec>,
}

impl EvolGroup for SemidirectGroup<'_> {
    type Point = (DMatrix<f64>, DMatrix<f64>);
    type Vel = (DMatrix<f64>, DMatrix<f64>);

    fn identity(&self) -> Self::Point {
        let n = self.spec.ambient_dim();
        (DMatrix::zeros(n, n), DMatrix::identity(n, n))
    }

    fn exp(&self, v: &Self::Vel) -> Self::Point {
        let base = exp_matrix(self.spec, &v.1);
        let mut acc = DMatrix::zeros(v.0.nrows(), v.0.ncols());
        for (s, w) in gauss_legendre_01(SD_EXP_NODES) {
            let g = exp_matrix(self.spec, &v.1.scale(s));
            let ginv = g
                .clone()
                .try_inverse()
                .expect("exponential is invertible");
            acc += self.spec.project(&(&g * &v.0 * ginv)).scale(w);
        }
        (acc, base)
    }

    fn mul(&self, a: &Self::Point, b: &Self::Point) -> Self::Point {
        let ginv = a.1.clone().try_inverse().expect("group element");
        let ad = self.spec.project(&(&a.1 * &b.0 * ginv));
        (&a.0 + ad, &a.1 * &b.1)
    }

    fn dexpinv(&self, x: &Self::Vel, y: &Self::Vel, order: usize) -> Self::Vel {
        // pair-bracket Bernoulli series; the base column is the matrix
        // series verbatim
        let base = dexpinv_matrix(self.spec, &x.1, &y.1, order);
        let coeffs = crate::lie_core::BERNOULLI_OVER_FACTORIAL;
        let order = order.min(coeffs.len() - 1);
        let mut acc_lin = y.0.clone();
        let mut term = (y.0.clone(), y.1.clone());
        for coeff in coeffs.iter().take(order + 1).skip(1) {
            let lin = self
                .spec
                .project(&(&x.1 * &term.0 - &term.0 * &x.1 + (&x.0 * &term.1 - &term.1 * &x.0)));
            let b = self.spec.project(&(&x.1 * &term.1 - &term.1 * &x.1));
            term = (lin, b);
            if *coeff != 0.0 {
                acc_lin += term.0.scale(*coeff);
            }
        }
        (acc_lin, base)
    }

    fn scale(&self, v: &Self::Vel, s: f64) -> Self::Vel {
        (v.0.scale(s), v.1.scale(s))
    }

    fn add(&self, a: &Self::Vel, b: &Self::Vel) -> Self::Vel {
        (&a.0 + &b.0, &a.1 + &b.1)
    }
}

/// int_0^1 Ad(Evol(X)(s)^{-1}) Y(s) ds by composite Simpson over the stored
/// evolution curve (the left-trivialized derivative of evol at X applied
/// to Y).
pub fn tangent_evol(x: &AlgebraCurve, y: &AlgebraCurve, cfg: &EvolConfig) -> Result<AlgebraElement> {
    let mut cfg = *cfg;
    if cfg.steps % 2 == 1 {
        cfg.steps += 1;
    }
    let curve = evol_right_curve(x, 1.0, &cfg)?;
    let h = 1.0 / cfg.steps as f64;
    let mut acc = AlgebraElement::zero(&x.spec);
    for (k, (s, g)) in curve.iter().enumerate() {
        let weight = if k == 0 || k == cfg.steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let val = adjoint(&invert(g)?, &y.eval(*s)?)?;
        acc = acc.add(&val.scale(weight * h / 3.0));
    }
    Ok(acc)
}

/// Evolution on the pair group, computed two ways: the closed formula
/// (Ad(evol(X)) tangent_evol(X, Y), evol(X)) and the generic pair-group
/// integration. Returns the closed-formula value together with the
/// deviation between the routes; disagreement beyond [`ROUTE_TOL`] is an
/// error signalling an insufficient step budget.
pub fn evol_sd(
    y: &AlgebraCurve,
    x: &AlgebraCurve,
    cfg: &EvolConfig,
) -> Result<(SemidirectElement, f64)> {
    let spec = x.spec.clone();
    // route (a): closed formula over the stored base evolution
    let end = evol_right(x, 1.0, cfg)?;
    let integral = tangent_evol(x, y, cfg)?;
    let closed = SemidirectElement {
        lin: adjoint(&end, &integral)?,
        grp: end,
    };
    // route (b): generic integration on the pair group
    let group = SemidirectGroup { spec: &spec };
    let rhs = |t: f64| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((y.eval(t)?.matrix().clone(), x.eval(t)?.matrix().clone()))
    };
    let (lin, grp) = rkmk4_end(&group, &rhs, 1.0, cfg.steps, cfg.dexpinv_order, EvolSide::Right)?;
    let generic = SemidirectElement {
        lin: AlgebraElement::unchecked(spec.clone(), lin),
        grp: GroupElement::unchecked(spec, grp),
    };
    let deviation = closed.distance(&generic);
    if deviation > ROUTE_TOL {
        return Err(Error::RouteDisagreement {
            deviation,
            tol: ROUTE_TOL,
        });
    }
    Ok((closed, deviation))
}

/// The developed map of a pair form (eta, xi) over a grid.
#[derive(Debug, Clone)]
pub struct TangentDevelopedMap {
    pub grid: Grid,
    pub values: Vec<SemidirectElement>,
}

impl TangentDevelopedMap {
    pub fn value(&self, index: usize) -> &SemidirectElement {
        &self.values[index]
    }
}

/// Develop the pair form (eta, xi) over the pair group: the base component
/// reproduces develop(xi) and the linear component is the right-trivialized
/// derivative of the development in the direction eta.
///
/// Precondition: eta satisfies the linearized flatness equation at xi.
pub fn tangent_develop(
    xi: &OneForm,
    eta: &OneForm,
    grid: &Grid,
    cfg: &EvolConfig,
) -> Result<TangentDevelopedMap> {
    let residual = linearized_flatness(xi, eta, 5)?;
    if residual > tol::FLATNESS {
        return Err(Error::NotLinearizedFlat {
            residual,
            tol: tol::FLATNESS,
        });
    }
    let spec = xi.spec.clone();
    let values: Vec<SemidirectElement> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            if !xi.domain.contains(&x) {
                return Err(Error::OutsideDomain(x.clone()));
            }
            let group = SemidirectGroup { spec: &spec };
            let rhs = |t: f64| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
                let point: Vec<f64> = x.iter().map(|xj| t * xj).collect();
                Ok((
                    eta.eval(&point, &x)?.matrix().clone(),
                    xi.eval(&point, &x)?.matrix().clone(),
                ))
            };
            let (lin, grp) =
                rkmk4_end(&group, &rhs, 1.0, cfg.steps, cfg.dexpinv_order, EvolSide::Right)?;
            Ok(SemidirectElement {
                lin: AlgebraElement::unchecked(spec.clone(), lin),
                grp: GroupElement::unchecked(spec.clone(), grp),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TangentDevelopedMap {
        grid: grid.clone(),
        values,
    })
}

#[cfg(test)]
mod tests;
