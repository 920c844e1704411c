//! Lie-algebra-valued 1-forms on a star-shaped box chart.
//!
//! Forms are stored by their frame components in the standard basis of the
//! chart: xi_i(x) = xi_x(e_i). The exterior derivative and the wedge-bracket
//! are then elementary, with analytic partials used when a preset supplies
//! them and central differences otherwise.

mod presets;

pub use presets::{preset_form, preset_map};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie_core::{adjoint, bracket, invert, AlgebraElement, GroupElement, LieGroupSpec};
use crate::tol;

/// Box [-w_i, w_i]^d around the base point 0; star-shaped by construction.
#[derive(Debug, Clone)]
pub struct Domain {
    half_widths: Vec<f64>,
}

impl Domain {
    pub fn new(half_widths: Vec<f64>) -> Self {
        assert!(
            (1..=3).contains(&half_widths.len()),
            "supported domain dimensions are 1..=3"
        );
        assert!(half_widths.iter().all(|w| *w > 0.0));
        Self { half_widths }
    }

    /// The symmetric box [-w, w]^d.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::new(vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.half_widths)
                .all(|(xi, w)| xi.abs() <= w * (1.0 + 1e-12) + 1e-300)
    }

    /// Finite-difference step along an axis, scaled by the half-width.
    pub fn fd_step(&self, axis: usize) -> f64 {
        tol::FORM_FD_STEP * self.half_widths[axis]
    }

    /// True if x stays inside the box with the given absolute margin per axis.
    pub fn is_interior(&self, x: &[f64], margin: f64) -> bool {
        x.iter()
            .zip(&self.half_widths)
            .all(|(xi, w)| xi.abs() + margin <= *w)
    }
}

/// Uniform lattice over a domain, endpoints included, row-major order.
#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(domain: Domain, resolution: Vec<usize>) -> Self {
        assert_eq!(domain.dim(), resolution.len());
        assert!(resolution.iter().all(|r| *r >= 2));
        Self { domain, resolution }
    }

    pub fn uniform(domain: Domain, res: usize) -> Self {
        let d = domain.dim();
        Self::new(domain, vec![res; d])
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let d = self.domain.dim();
        let mut x = vec![0.0; d];
        for axis in (0..d).rev() {
            let r = self.resolution[axis];
            let i = index % r;
            index /= r;
            let w = self.domain.half_widths()[axis];
            x[axis] = -w + 2.0 * w * (i as f64) / ((r - 1) as f64);
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Lattice points at least `margin` away from the boundary.
    pub fn interior_points(&self, margin: f64) -> Vec<Vec<f64>> {
        self.points()
            .filter(|x| self.domain.is_interior(x, margin))
            .collect()
    }
}

pub type ComponentFn = Arc<dyn Fn(&[f64]) -> Result<AlgebraElement> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;
pub type GroupFn = Arc<dyn Fn(&[f64]) -> Result<GroupElement> + Send + Sync>;

/// A g-valued 1-form given by d component functions.
#[derive(Clone)]
pub struct OneForm {
    pub spec: Arc<LieGroupSpec>,
    pub domain: Domain,
    components: Vec<ComponentFn>,
    /// partials[i][j] = d_j xi_i, when known analytically
    analytic_partials: Option<Vec<Vec<ComponentFn>>>,
    pub metadata: String,
}

impl std::fmt::Debug for OneForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneForm")
            .field("spec", &self.spec.name())
            .field("dim", &self.domain.dim())
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl OneForm {
    pub fn new(
        spec: Arc<LieGroupSpec>,
        domain: Domain,
        components: Vec<ComponentFn>,
        metadata: impl Into<String>,
    ) -> Self {
        assert_eq!(components.len(), domain.dim());
        Self {
            spec,
            domain,
            components,
            analytic_partials: None,
            metadata: metadata.into(),
        }
    }

    pub fn with_partials(mut self, partials: Vec<Vec<ComponentFn>>) -> Self {
        assert_eq!(partials.len(), self.domain.dim());
        self.analytic_partials = Some(partials);
        self
    }

    pub fn zero(spec: Arc<LieGroupSpec>, domain: Domain) -> Self {
        let d = domain.dim();
        let s = spec.clone();
        let comp: ComponentFn = Arc::new(move |_x| Ok(AlgebraElement::zero(&s)));
        let partials = vec![vec![comp.clone(); d]; d];
        Self::new(spec, domain, vec![comp; d], "zero").with_partials(partials)
    }

    /// Constant form sum_i A_i dx^i.
    pub fn constant(spec: Arc<LieGroupSpec>, domain: Domain, coeffs: Vec<AlgebraElement>) -> Self {
        assert_eq!(coeffs.len(), domain.dim());
        let d = domain.dim();
        let s = spec.clone();
        let zero: ComponentFn = Arc::new(move |_x| Ok(AlgebraElement::zero(&s)));
        let comps: Vec<ComponentFn> = coeffs
            .into_iter()
            .map(|a| {
                let a = a.clone();
                Arc::new(move |_x: &[f64]| Ok(a.clone())) as ComponentFn
            })
            .collect();
        Self::new(spec, domain, comps, "const").with_partials(vec![vec![zero; d]; d])
    }

    pub fn component(&self, i: usize, x: &[f64]) -> Result<AlgebraElement> {
        (self.components[i])(x)
    }

    /// xi_x(v) = sum_i v_i xi_i(x).
    pub fn eval(&self, x: &[f64], v: &[f64]) -> Result<AlgebraElement> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        let mut acc = AlgebraElement::zero(&self.spec);
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                acc = acc.add(&self.component(i, x)?.scale(*vi));
            }
        }
        Ok(acc)
    }

    /// d_j xi_i at x: analytic when available, else central differences.
    pub fn partial(&self, i: usize, j: usize, x: &[f64]) -> Result<AlgebraElement> {
        if let Some(p) = &self.analytic_partials {
            return (p[i][j])(x);
        }
        let h = self.domain.fd_step(j);
        if !self.domain.is_interior(x, h) {
            return Err(Error::BoundaryProximity(h));
        }
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        Ok(self
            .component(i, &xp)?
            .sub(&self.component(i, &xm)?)
            .scale(0.5 / h))
    }

    /// d xi (e_i, e_j) = d_i xi_j - d_j xi_i.
    pub fn exterior_derivative(&self, x: &[f64], i: usize, j: usize) -> Result<AlgebraElement> {
        assert_ne!(i, j);
        Ok(self.partial(j, i, x)?.sub(&self.partial(i, j, x)?))
    }

    /// Maurer-Cartan residual d xi(e_i, e_j) - [xi_i(x), xi_j(x)].
    pub fn mc_residual(&self, x: &[f64], i: usize, j: usize) -> Result<AlgebraElement> {
        let d = self.exterior_derivative(x, i, j)?;
        let comm = bracket(&self.component(i, x)?, &self.component(j, x)?)?;
        Ok(d.sub(&comm))
    }

    /// Tangent condition at xi: d eta(e_i, e_j) - ([xi_i, eta_j] - [xi_j, eta_i]).
    pub fn linearized_mc_residual(
        &self,
        eta: &OneForm,
        x: &[f64],
        i: usize,
        j: usize,
    ) -> Result<AlgebraElement> {
        let d = eta.exterior_derivative(x, i, j)?;
        let a = bracket(&self.component(i, x)?, &eta.component(j, x)?)?;
        let b = bracket(&self.component(j, x)?, &eta.component(i, x)?)?;
        Ok(d.sub(&a).add(&b))
    }

    /// Max Maurer-Cartan residual over interior grid points and axis pairs.
    pub fn flatness(&self, grid_resolution: usize, tolerance: f64) -> Result<FlatReport> {
        assert!(tolerance > 0.0);
        let d = self.domain.dim();
        let grid = Grid::uniform(self.domain.clone(), grid_resolution);
        let margin = (0..d).map(|j| self.domain.fd_step(j)).fold(0.0, f64::max);
        let mut max_residual: f64 = 0.0;
        if d >= 2 {
            for x in grid.interior_points(margin * 1.5) {
                for i in 0..d {
                    for j in (i + 1)..d {
                        let r = self.mc_residual(&x, i, j)?.norm();
                        max_residual = max_residual.max(r);
                    }
                }
            }
        }
        Ok(FlatReport {
            max_residual,
            tolerance,
            flat: max_residual <= tolerance,
        })
    }

    /// Max ||d xi|| over interior grid points and axis pairs (closedness).
    pub fn closedness(&self, grid_resolution: usize) -> Result<f64> {
        let d = self.domain.dim();
        if d < 2 {
            return Ok(0.0);
        }
        let grid = Grid::uniform(self.domain.clone(), grid_resolution);
        let margin = (0..d).map(|j| self.domain.fd_step(j)).fold(0.0, f64::max);
        let mut max: f64 = 0.0;
        for x in grid.interior_points(margin * 1.5) {
            for i in 0..d {
                for j in (i + 1)..d {
                    max = max.max(self.exterior_derivative(&x, i, j)?.norm());
                }
            }
        }
        Ok(max)
    }

    /// Pullback along the diagonal-affine map h(y) = scales .* y.
    ///
    /// The result lives on `new_domain` and satisfies
    /// (h^* xi)_i(y) = scales_i * xi_i(h(y)).
    pub fn pullback_affine_diag(&self, scales: &[f64], new_domain: Domain) -> OneForm {
        assert_eq!(scales.len(), self.domain.dim());
        let d = self.domain.dim();
        let scales = scales.to_vec();
        let comps: Vec<ComponentFn> = (0..d)
            .map(|i| {
                let inner = self.components[i].clone();
                let scales = scales.clone();
                Arc::new(move |y: &[f64]| {
                    let x: Vec<f64> = y.iter().zip(&scales).map(|(yi, s)| yi * s).collect();
                    Ok(inner(&x)?.scale(scales[i]))
                }) as ComponentFn
            })
            .collect();
        OneForm::new(
            self.spec.clone(),
            new_domain,
            comps,
            format!("{}|affine", self.metadata),
        )
    }

    /// Image of the form under an algebra homomorphism phi'.
    pub fn map_algebra(
        &self,
        target: Arc<LieGroupSpec>,
        phi_prime: Arc<dyn Fn(&AlgebraElement) -> Result<AlgebraElement> + Send + Sync>,
        label: &str,
    ) -> OneForm {
        let comps: Vec<ComponentFn> = (0..self.domain.dim())
            .map(|i| {
                let inner = self.components[i].clone();
                let phi = phi_prime.clone();
                Arc::new(move |x: &[f64]| phi(&inner(x)?)) as ComponentFn
            })
            .collect();
        OneForm::new(
            target,
            self.domain.clone(),
            comps,
            format!("{}|{label}", self.metadata),
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlatReport {
    pub max_residual: f64,
    pub tolerance: f64,
    pub flat: bool,
}

/// Wedge-bracket of two 1-forms evaluated on a pair of vectors:
/// [phi, psi]_^(u, v) = [phi(u), psi(v)] - [phi(v), psi(u)].
pub fn wedge_bracket(
    phi: &OneForm,
    psi: &OneForm,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<AlgebraElement> {
    let a = bracket(&phi.eval(x, u)?, &psi.eval(x, v)?)?;
    let b = bracket(&phi.eval(x, v)?, &psi.eval(x, u)?)?;
    Ok(a.sub(&b))
}

/// A smooth g-valued function on the domain.
#[derive(Clone)]
pub struct GFunction {
    pub spec: Arc<LieGroupSpec>,
    pub domain: Domain,
    value: ComponentFn,
    analytic_partials: Option<Vec<ComponentFn>>,
}

impl GFunction {
    pub fn new(spec: Arc<LieGroupSpec>, domain: Domain, value: ComponentFn) -> Self {
        Self {
            spec,
            domain,
            value,
            analytic_partials: None,
        }
    }

    pub fn with_partials(mut self, partials: Vec<ComponentFn>) -> Self {
        assert_eq!(partials.len(), self.domain.dim());
        self.analytic_partials = Some(partials);
        self
    }

    pub fn eval(&self, x: &[f64]) -> Result<AlgebraElement> {
        (self.value)(x)
    }

    pub fn partial(&self, i: usize, x: &[f64]) -> Result<AlgebraElement> {
        if let Some(p) = &self.analytic_partials {
            return (p[i])(x);
        }
        let h = self.domain.fd_step(i);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        Ok(self.eval(&xp)?.sub(&self.eval(&xm)?).scale(0.5 / h))
    }

    /// The exact 1-form dh.
    pub fn differential(&self) -> OneForm {
        let d = self.domain.dim();
        let comps: Vec<ComponentFn> = (0..d)
            .map(|i| {
                let f = self.clone();
                Arc::new(move |x: &[f64]| f.partial(i, x)) as ComponentFn
            })
            .collect();
        OneForm::new(self.spec.clone(), self.domain.clone(), comps, "exact")
    }
}

/// A smooth G-valued map on the domain.
#[derive(Clone)]
pub struct GMap {
    pub spec: Arc<LieGroupSpec>,
    pub domain: Domain,
    value: GroupFn,
    /// ambient-matrix partials d_i F, when known analytically
    analytic_partials: Option<Vec<MatrixFn>>,
    pub metadata: String,
}

impl GMap {
    pub fn new(
        spec: Arc<LieGroupSpec>,
        domain: Domain,
        value: GroupFn,
        metadata: impl Into<String>,
    ) -> Self {
        Self {
            spec,
            domain,
            value,
            analytic_partials: None,
            metadata: metadata.into(),
        }
    }

    pub fn with_partials(mut self, partials: Vec<MatrixFn>) -> Self {
        assert_eq!(partials.len(), self.domain.dim());
        self.analytic_partials = Some(partials);
        self
    }

    pub fn constant(spec: Arc<LieGroupSpec>, domain: Domain, g: GroupElement) -> Self {
        let d = domain.dim();
        let n = spec.ambient_dim();
        let zero: MatrixFn = Arc::new(move |_x| Ok(DMatrix::zeros(n, n)));
        let val: GroupFn = Arc::new(move |_x| Ok(g.clone()));
        Self::new(spec, domain, val, "const-map").with_partials(vec![zero; d])
    }

    pub fn eval(&self, x: &[f64]) -> Result<GroupElement> {
        (self.value)(x)
    }

    pub fn partial(&self, i: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(p) = &self.analytic_partials {
            return (p[i])(x);
        }
        let h = self.domain.fd_step(i);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        Ok((self.eval(&xp)?.matrix() - self.eval(&xm)?.matrix()).scale(0.5 / h))
    }

    /// Pointwise product (F . G2)(x), with the product rule for partials
    /// when both factors are analytic.
    pub fn product(&self, other: &GMap) -> GMap {
        let f = self.clone();
        let g = other.clone();
        let val: GroupFn = Arc::new(move |x: &[f64]| {
            crate::lie_core::compose(&f.eval(x)?, &g.eval(x)?)
        });
        let mut out = GMap::new(
            self.spec.clone(),
            self.domain.clone(),
            val,
            format!("({})*({})", self.metadata, other.metadata),
        );
        if self.analytic_partials.is_some() && other.analytic_partials.is_some() {
            let d = self.domain.dim();
            let partials: Vec<MatrixFn> = (0..d)
                .map(|i| {
                    let f = self.clone();
                    let g = other.clone();
                    Arc::new(move |x: &[f64]| {
                        let df = f.partial(i, x)?;
                        let dg = g.partial(i, x)?;
                        Ok(&df * g.eval(x)?.matrix() + f.eval(x)?.matrix() * &dg)
                    }) as MatrixFn
                })
                .collect();
            out = out.with_partials(partials);
        }
        out
    }

    /// Pointwise inverse x -> F(x)^{-1}.
    pub fn inverse(&self) -> GMap {
        let f = self.clone();
        let val: GroupFn = Arc::new(move |x: &[f64]| invert(&f.eval(x)?));
        // d_i (F^{-1}) = -F^{-1} (d_i F) F^{-1}
        let mut out = GMap::new(
            self.spec.clone(),
            self.domain.clone(),
            val,
            format!("inv({})", self.metadata),
        );
        if self.analytic_partials.is_some() {
            let d = self.domain.dim();
            let partials: Vec<MatrixFn> = (0..d)
                .map(|i| {
                    let f = self.clone();
                    Arc::new(move |x: &[f64]| {
                        let finv = invert(&f.eval(x)?)?;
                        let df = f.partial(i, x)?;
                        Ok(-(finv.matrix() * df * finv.matrix()))
                    }) as MatrixFn
                })
                .collect();
            out = out.with_partials(partials);
        }
        out
    }

    /// Precompose with the diagonal-affine map h(y) = scales .* y.
    pub fn compose_affine_diag(&self, scales: &[f64], new_domain: Domain) -> GMap {
        let scales = scales.to_vec();
        let f = self.clone();
        let sc = scales.clone();
        let val: GroupFn = Arc::new(move |y: &[f64]| {
            let x: Vec<f64> = y.iter().zip(&sc).map(|(yi, s)| yi * s).collect();
            f.eval(&x)
        });
        let mut out = GMap::new(
            self.spec.clone(),
            new_domain,
            val,
            format!("{}|affine", self.metadata),
        );
        if self.analytic_partials.is_some() {
            let d = self.domain.dim();
            let partials: Vec<MatrixFn> = (0..d)
                .map(|i| {
                    let f = self.clone();
                    let scales = scales.clone();
                    Arc::new(move |y: &[f64]| {
                        let x: Vec<f64> =
                            y.iter().zip(&scales).map(|(yi, s)| yi * s).collect();
                        Ok(f.partial(i, &x)?.scale(scales[i]))
                    }) as MatrixFn
                })
                .collect();
            out = out.with_partials(partials);
        }
        out
    }
}

/// Right logarithmic derivative of F as a 1-form: components (d_i F) F^{-1}.
pub fn pullback_form(map: &GMap) -> OneForm {
    let d = map.domain.dim();
    let comps: Vec<ComponentFn> = (0..d)
        .map(|i| {
            let f = map.clone();
            Arc::new(move |x: &[f64]| {
                let df = f.partial(i, x)?;
                let finv = invert(&f.eval(x)?)?;
                let m = &df * finv.matrix();
                let dist = f.spec.span_distance(&m);
                if dist > tol::PULLBACK_PROJECTION * (1.0 + m.norm()) {
                    return Err(Error::NotTangent { residual: dist });
                }
                Ok(AlgebraElement::unchecked(f.spec.clone(), f.spec.project(&m)))
            }) as ComponentFn
        })
        .collect();
    OneForm::new(
        map.spec.clone(),
        map.domain.clone(),
        comps,
        format!("pullback({})", map.metadata),
    )
}

/// Max deviation of the Leibniz rule for the right logarithmic derivative:
/// delta^r(F.G2) = delta^r F + Ad(F) delta^r G2, over the grid.
pub fn leibniz_check(f: &GMap, g2: &GMap, grid: &Grid) -> Result<f64> {
    let product = f.product(g2);
    let lhs = pullback_form(&product);
    let df = pullback_form(f);
    let dg = pullback_form(g2);
    let d = grid.domain.dim();
    let margin = (0..d).map(|j| grid.domain.fd_step(j)).fold(0.0, f64::max);
    let mut max_dev: f64 = 0.0;
    for x in grid.interior_points(margin * 1.5) {
        let fx = f.eval(&x)?;
        for i in 0..d {
            let want = df
                .component(i, &x)?
                .add(&adjoint(&fx, &dg.component(i, &x)?)?);
            let got = lhs.component(i, &x)?;
            max_dev = max_dev.max(got.distance(&want));
        }
    }
    Ok(max_dev)
}
