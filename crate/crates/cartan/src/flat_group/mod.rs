//! The group structure on flat 1-forms.
//!
//! Flat forms multiply by `star`, invert by `star_inverse`, and the closed
//! forms carry a Lie bracket built from the radial antiderivative
//! `poincare_inverse`. The `variation_form`/`reconstruct_h` pair converts
//! between tangent forms at a flat form and pointed algebra-valued functions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::evolution::{develop_at, EvolConfig};
use crate::forms::{ComponentFn, GFunction, Grid, OneForm};
use crate::lie_core::{adjoint, bracket, invert, AlgebraElement, GroupElement};
use crate::quadrature::gauss_legendre_01;
use crate::tol;

/// Quadrature nodes for the radial antiderivative.
pub const DEFAULT_QUAD_NODES: usize = 32;
/// Grid resolution used for flatness/closedness certification.
pub const CERT_RESOLUTION: usize = 5;

/// Memoized per-point development of a fixed form.
///
/// The star product and its relatives need `develop_at(xi, x)` at whatever
/// points a caller later evaluates the resulting form on; the cache keyed on
/// the coordinate bit patterns keeps repeated evaluations (finite
/// differences, certification sweeps) from re-running the radial solve.
/// Concurrent fills are idempotent: the solve is deterministic, so a racing
/// insert writes the same value.
#[derive(Clone)]
pub struct DevelopCache {
    xi: OneForm,
    cfg: EvolConfig,
    cache: Arc<Mutex<HashMap<Vec<u64>, GroupElement>>>,
}

impl DevelopCache {
    pub fn new(xi: OneForm, cfg: EvolConfig) -> Self {
        Self {
            xi,
            cfg,
            cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<GroupElement> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(g) = self.cache.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let g = develop_at(&self.xi, x, &self.cfg)?;
        self.cache.lock().unwrap().insert(key, g.clone());
        Ok(g)
    }
}

/// Hard flatness gate: the group operations are only defined on flat forms.
fn require_flat(xi: &OneForm) -> Result<()> {
    let report = xi.flatness(CERT_RESOLUTION, tol::FLATNESS)?;
    if report.flat {
        Ok(())
    } else {
        Err(Error::NotFlat {
            residual: report.max_residual,
            tol: report.tolerance,
        })
    }
}

/// (xi * eta)(x) = xi(x) + Ad(f_xi(x)) eta(x), where f_xi develops xi.
pub fn star(xi: &OneForm, eta: &OneForm, cfg: &EvolConfig) -> Result<OneForm> {
    require_flat(xi)?;
    require_flat(eta)?;
    let f = DevelopCache::new(xi.clone(), *cfg);
    let d = xi.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let (xi, eta, f) = (xi.clone(), eta.clone(), f.clone());
            Arc::new(move |x: &[f64]| {
                let g = f.eval(x)?;
                Ok(xi.component(i, x)?.add(&adjoint(&g, &eta.component(i, x)?)?))
            }) as ComponentFn
        })
        .collect();
    Ok(OneForm::new(
        xi.spec.clone(),
        xi.domain.clone(),
        comps,
        format!("({})*({})", xi.metadata, eta.metadata),
    ))
}

/// xi^{-1}(x) = -Ad(f_xi(x)^{-1}) xi(x).
pub fn star_inverse(xi: &OneForm, cfg: &EvolConfig) -> Result<OneForm> {
    require_flat(xi)?;
    let f = DevelopCache::new(xi.clone(), *cfg);
    let d = xi.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let (xi, f) = (xi.clone(), f.clone());
            Arc::new(move |x: &[f64]| {
                let g_inv = invert(&f.eval(x)?)?;
                Ok(adjoint(&g_inv, &xi.component(i, x)?)?.scale(-1.0))
            }) as ComponentFn
        })
        .collect();
    Ok(OneForm::new(
        xi.spec.clone(),
        xi.domain.clone(),
        comps,
        format!("({})^-1", xi.metadata),
    ))
}

/// A 1-form with a recorded closedness certificate.
#[derive(Clone)]
pub struct ClosedOneForm {
    pub form: OneForm,
    /// Max exterior-derivative norm found during certification.
    pub max_d_residual: f64,
    /// Tolerance the certificate was issued at.
    pub tolerance: f64,
}

impl ClosedOneForm {
    /// Certify closedness on an interior grid sweep.
    pub fn certify(form: OneForm, grid_resolution: usize, tolerance: f64) -> Result<Self> {
        let max_d_residual = form.closedness(grid_resolution)?;
        if max_d_residual <= tolerance {
            Ok(Self {
                form,
                max_d_residual,
                tolerance,
            })
        } else {
            Err(Error::NotClosed {
                residual: max_d_residual,
                tol: tolerance,
            })
        }
    }
}

/// Radial antiderivative of a closed form: h(x) = int_0^1 beta_{tx}(x) dt,
/// so h(0) = 0 and dh = beta on the star-shaped domain.
pub fn poincare_inverse(beta: &ClosedOneForm, quad_nodes: usize) -> GFunction {
    let nodes = gauss_legendre_01(quad_nodes);
    let form = beta.form.clone();
    let spec = form.spec.clone();
    let value: ComponentFn = Arc::new(move |x: &[f64]| {
        let mut acc = AlgebraElement::zero(&form.spec);
        for (t, w) in &nodes {
            let tx: Vec<f64> = x.iter().map(|xi| t * xi).collect();
            acc = acc.add(&form.eval(&tx, x)?.scale(*w));
        }
        if !acc.matrix().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("poincare_inverse quadrature"));
        }
        Ok(acc)
    });
    GFunction::new(spec, beta.form.domain.clone(), value)
}

/// Bracket on closed forms:
/// [b1, b2](v)(x) = [b1_x(v), h2(x)] + [h1(x), b2_x(v)] with h_i the radial
/// antiderivatives. The output is re-certified closed; a failed certificate
/// means the quadrature or finite-difference budget is too small.
pub fn flat_bracket(b1: &ClosedOneForm, b2: &ClosedOneForm) -> Result<ClosedOneForm> {
    let h1 = poincare_inverse(b1, DEFAULT_QUAD_NODES);
    let h2 = poincare_inverse(b2, DEFAULT_QUAD_NODES);
    let d = b1.form.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let (f1, f2) = (b1.form.clone(), b2.form.clone());
            let (h1, h2) = (h1.clone(), h2.clone());
            Arc::new(move |x: &[f64]| {
                let a = bracket(&f1.component(i, x)?, &h2.eval(x)?)?;
                let b = bracket(&h1.eval(x)?, &f2.component(i, x)?)?;
                Ok(a.add(&b))
            }) as ComponentFn
        })
        .collect();
    let out = OneForm::new(
        b1.form.spec.clone(),
        b1.form.domain.clone(),
        comps,
        format!("[{},{}]", b1.form.metadata, b2.form.metadata),
    );
    // budget for FD noise on top of the input certificates
    let tolerance = (10.0 * b1.tolerance.max(b2.tolerance)).max(1e-6);
    ClosedOneForm::certify(out, CERT_RESOLUTION, tolerance)
}

/// The tangent form at xi generated by h: components Ad(f_xi(x)) d_i h(x).
pub fn variation_form(xi: &OneForm, h: &GFunction, cfg: &EvolConfig) -> Result<OneForm> {
    require_flat(xi)?;
    let f = DevelopCache::new(xi.clone(), *cfg);
    let d = xi.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let (h, f) = (h.clone(), f.clone());
            Arc::new(move |x: &[f64]| adjoint(&f.eval(x)?, &h.partial(i, x)?))
                as ComponentFn
        })
        .collect();
    Ok(OneForm::new(
        xi.spec.clone(),
        xi.domain.clone(),
        comps,
        format!("var({})", xi.metadata),
    ))
}

/// Max linearized flatness residual of eta at xi over an interior grid.
pub fn linearized_flatness(xi: &OneForm, eta: &OneForm, grid_resolution: usize) -> Result<f64> {
    let d = xi.domain.dim();
    if d < 2 {
        return Ok(0.0);
    }
    let grid = Grid::uniform(xi.domain.clone(), grid_resolution);
    let margin = (0..d).map(|j| xi.domain.fd_step(j)).fold(0.0, f64::max);
    let mut max: f64 = 0.0;
    for x in grid.interior_points(margin * 1.5) {
        for i in 0..d {
            for j in (i + 1)..d {
                max = max.max(xi.linearized_mc_residual(eta, &x, i, j)?.norm());
            }
        }
    }
    Ok(max)
}

/// Invert `variation_form`: the unique pointed h with dh = Ad(f_xi^{-1}) eta.
///
/// Preconditions: xi flat and eta a tangent form at xi (linearized residual
/// within tolerance); the transported form Ad(f^{-1}) eta must certify closed.
pub fn reconstruct_h(xi: &OneForm, eta: &OneForm, cfg: &EvolConfig) -> Result<GFunction> {
    require_flat(xi)?;
    let residual = linearized_flatness(xi, eta, CERT_RESOLUTION)?;
    if residual > tol::FLATNESS {
        return Err(Error::NotLinearizedFlat {
            residual,
            tol: tol::FLATNESS,
        });
    }
    let f = DevelopCache::new(xi.clone(), *cfg);
    let d = xi.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let (eta, f) = (eta.clone(), f.clone());
            Arc::new(move |x: &[f64]| {
                adjoint(&invert(&f.eval(x)?)?, &eta.component(i, x)?)
            }) as ComponentFn
        })
        .collect();
    let transported = OneForm::new(
        xi.spec.clone(),
        xi.domain.clone(),
        comps,
        "reconstruct-dh",
    );
    let certified = ClosedOneForm::certify(transported, CERT_RESOLUTION, tol::FLATNESS)?;
    Ok(poincare_inverse(&certified, DEFAULT_QUAD_NODES))
}
