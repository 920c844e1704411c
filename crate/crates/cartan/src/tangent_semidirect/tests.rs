use super::*;
use crate::evolution::{develop, EvolConfig};

/// Central-difference step for the derivative oracles.
const FD_STEP: f64 = 1e-5;
use crate::forms::{preset_form, Domain, Grid, OneForm};
use crate::lie_core::{kappa_left, kappa_right};

fn so3() -> Arc<LieGroupSpec> {
    LieGroupSpec::so3()
}

fn sample_element(spec: &Arc<LieGroupSpec>, seed: u64) -> SemidirectElement {
    let s = seed as f64;
    let x = spec.from_coords(&[(s * 0.9).sin(), (s * 0.4).cos() * 0.7, 0.3 - 0.1 * s]);
    let g = exp(&spec.from_coords(&[0.5 * s.sin(), -0.3, 0.2 * s.cos()])).unwrap();
    SemidirectElement::new(x, g).unwrap()
}

fn sample_vector(spec: &Arc<LieGroupSpec>, seed: u64) -> SemidirectAlgebra {
    let s = seed as f64 + 0.5;
    SemidirectAlgebra::new(
        spec.from_coords(&[(1.1 * s).sin(), 0.4 * s.cos(), -0.6]),
        spec.from_coords(&[0.8, (0.7 * s).sin(), (0.2 * s).cos()]),
    )
    .unwrap()
}

#[test]
fn multiply_unit_inverse_associativity() {
    let spec = so3();
    let e = SemidirectElement::identity(&spec);
    let a = sample_element(&spec, 1);
    let b = sample_element(&spec, 2);
    let c = sample_element(&spec, 3);

    assert!(sd_multiply(&a, &e).unwrap().distance(&a) < 1e-15);
    assert!(sd_multiply(&e, &a).unwrap().distance(&a) < 1e-15);
    assert!(sd_multiply(&a, &sd_invert(&a).unwrap())
        .unwrap()
        .is_identity(1e-12));
    assert!(sd_multiply(&sd_invert(&a).unwrap(), &a)
        .unwrap()
        .is_identity(1e-12));
    assert!(sd_invert(&sd_invert(&a).unwrap())
        .unwrap()
        .distance(&a)
        < 1e-12);
    assert!(sd_invert(&e).unwrap().is_identity(0.0));

    let ab_c = sd_multiply(&sd_multiply(&a, &b).unwrap(), &c).unwrap();
    let a_bc = sd_multiply(&a, &sd_multiply(&b, &c).unwrap()).unwrap();
    assert!(ab_c.distance(&a_bc) < 1e-12);
}

#[test]
fn multiply_matches_fd_of_curve_products() {
    // right-trivialized derivative at s=0 of s -> (exp(sX) g)(exp(sY) h)
    let spec = so3();
    let a = sample_element(&spec, 4);
    let b = sample_element(&spec, 5);
    let prod = |s: f64| {
        let left = compose(&exp(&a.lin.scale(s)).unwrap(), &a.grp).unwrap();
        let right = compose(&exp(&b.lin.scale(s)).unwrap(), &b.grp).unwrap();
        compose(&left, &right).unwrap()
    };
    let h = 1e-5;
    let diff = (prod(h).matrix() - prod(-h).matrix()).scale(0.5 / h);
    let fd = kappa_right(&prod(0.0), &diff).unwrap();
    let want = sd_multiply(&a, &b).unwrap().lin;
    assert!(fd.sub(&want).norm() < 1e-5, "{}", fd.sub(&want).norm());
}

#[test]
fn adjoint_unit_homomorphism_and_fd() {
    let spec = so3();
    let e = SemidirectElement::identity(&spec);
    let a = sample_element(&spec, 6);
    let b = sample_element(&spec, 7);
    let v = sample_vector(&spec, 1);

    let idv = sd_adjoint(&e, &v).unwrap();
    assert!(idv.sub(&v).norm() < 1e-15);

    let lhs = sd_adjoint(&sd_multiply(&a, &b).unwrap(), &v).unwrap();
    let rhs = sd_adjoint(&a, &sd_adjoint(&b, &v).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).norm() < 1e-10, "{}", lhs.sub(&rhs).norm());

    // FD conjugation oracle: derivative at t=0 of a (tX, exp(tY)) a^{-1}
    let h = 1e-5;
    let conj = |t: f64| {
        let c = SemidirectElement::new(v.lin.scale(t), exp(&v.base.scale(t)).unwrap()).unwrap();
        sd_multiply(&sd_multiply(&a, &c).unwrap(), &sd_invert(&a).unwrap()).unwrap()
    };
    let (cp, cm) = (conj(h), conj(-h));
    let fd_lin = cp.lin.sub(&cm.lin).scale(0.5 / h);
    let fd_base_raw = (cp.grp.matrix() - cm.grp.matrix()).scale(0.5 / h);
    let fd_base = kappa_right(&conj(0.0).grp, &fd_base_raw).unwrap();
    let want = sd_adjoint(&a, &v).unwrap();
    assert!(fd_lin.sub(&want.lin).norm() < 1e-5);
    assert!(fd_base.sub(&want.base).norm() < 1e-5);
}

#[test]
fn bracket_antisymmetry_jacobi_and_adjoint_derivative() {
    let spec = so3();
    let u = sample_vector(&spec, 2);
    let v = sample_vector(&spec, 3);
    let w = sample_vector(&spec, 4);

    assert_eq!(sd_bracket(&u, &u).unwrap().norm(), 0.0);

    let j1 = sd_bracket(&sd_bracket(&u, &v).unwrap(), &w).unwrap();
    let j2 = sd_bracket(&sd_bracket(&v, &w).unwrap(), &u).unwrap();
    let j3 = sd_bracket(&sd_bracket(&w, &u).unwrap(), &v).unwrap();
    let total = j1.lin.add(&j2.lin).add(&j3.lin).norm()
        + j1.base.add(&j2.base).add(&j3.base).norm();
    assert!(total < 1e-12, "{total}");

    // derivative of the adjoint action: d/dt|0 Ad((tX', exp(tY'))) u = [v', u]
    let h = 1e-5;
    let ad_t = |t: f64| {
        let a = SemidirectElement::new(v.lin.scale(t), exp(&v.base.scale(t)).unwrap()).unwrap();
        sd_adjoint(&a, &u).unwrap()
    };
    let (p, m) = (ad_t(h), ad_t(-h));
    let fd = SemidirectAlgebra::new(
        p.lin.sub(&m.lin).scale(0.5 / h),
        p.base.sub(&m.base).scale(0.5 / h),
    )
    .unwrap();
    let want = sd_bracket(&v, &u).unwrap();
    assert!(fd.sub(&want).norm() < 1e-5, "{}", fd.sub(&want).norm());
}

#[test]
fn exponential_cases() {
    let spec = so3();
    assert!(sd_exp(&SemidirectAlgebra::zero(&spec))
        .unwrap()
        .is_identity(0.0));

    // commuting pair: both components along the same axis
    let x = spec.from_coords(&[0.0, 0.0, 0.8]);
    let y = spec.from_coords(&[0.0, 0.0, -1.3]);
    let got = sd_exp(&SemidirectAlgebra::new(x.clone(), y.clone()).unwrap()).unwrap();
    assert!(got.lin.sub(&x).norm() < 1e-14);
    assert!(got.grp.distance(&exp(&y).unwrap()) < 1e-14);

    // certified against the constant-input evolution on the pair group
    let v = sample_vector(&spec, 5);
    let (evolved, _) = evol_sd(
        &AlgebraCurve::constant(v.lin.clone()),
        &AlgebraCurve::constant(v.base.clone()),
        &EvolConfig::rkmk4(256),
    )
    .unwrap();
    let direct = sd_exp(&v).unwrap();
    assert!(
        direct.distance(&evolved) < 1e-8,
        "{}",
        direct.distance(&evolved)
    );
}

fn smooth_curve(spec: &Arc<LieGroupSpec>, seed: u64) -> AlgebraCurve {
    let spec2 = spec.clone();
    let phase = seed as f64 * 0.6;
    AlgebraCurve::new(
        spec.clone(),
        Arc::new(move |t| {
            Ok(spec2.from_coords(&[
                (1.2 * t + phase).sin(),
                0.7 * (t - phase).cos(),
                t * t - 0.3,
            ]))
        }),
    )
}

#[test]
fn evol_sd_trivial_cases() {
    let spec = so3();
    let cfg = EvolConfig::rkmk4(128);
    let x = smooth_curve(&spec, 1);
    let zero = AlgebraCurve::zero(&spec);

    let (got, _) = evol_sd(&zero, &x, &cfg).unwrap();
    assert!(got.lin.norm() < 1e-12);
    assert!(got.grp.distance(&evol_right(&x, 1.0, &cfg).unwrap()) < 1e-12);

    // X = 0: the pair evolution reduces to the plain integral of Y
    let y = smooth_curve(&spec, 2);
    let (got, _) = evol_sd(&y, &zero, &cfg).unwrap();
    let integral: AlgebraElement = crate::quadrature::gauss_legendre_01(32)
        .into_iter()
        .fold(AlgebraElement::zero(&spec), |acc, (s, w)| {
            acc.add(&y.eval(s).unwrap().scale(w))
        });
    assert!(got.lin.sub(&integral).norm() < 1e-10);
    assert!(got.grp.is_identity(1e-13));
}

#[test]
fn evol_sd_routes_agree() {
    let spec = so3();
    let x = smooth_curve(&spec, 3);
    let y = smooth_curve(&spec, 4);
    let (_, deviation) = evol_sd(&y, &x, &EvolConfig::rkmk4(256)).unwrap();
    assert!(deviation < 1e-7, "{deviation}");
}

#[test]
fn tangent_evol_cases() {
    let spec = so3();
    let cfg = EvolConfig::rkmk4(256);
    let x = smooth_curve(&spec, 5);
    let zero = AlgebraCurve::zero(&spec);

    assert!(tangent_evol(&x, &zero, &cfg).unwrap().norm() < 1e-15);

    let y = smooth_curve(&spec, 6);
    let integral: AlgebraElement = crate::quadrature::gauss_legendre_01(32)
        .into_iter()
        .fold(AlgebraElement::zero(&spec), |acc, (s, w)| {
            acc.add(&y.eval(s).unwrap().scale(w))
        });
    assert!(
        tangent_evol(&zero, &y, &cfg).unwrap().sub(&integral).norm() < 1e-10
    );

    // central-difference oracle through the endpoint evolution
    let got = tangent_evol(&x, &y, &cfg).unwrap();
    let s = FD_STEP;
    let plus = evol_right(&AlgebraCurve::linear_combination(&x, 1.0, &y, s), 1.0, &cfg).unwrap();
    let minus = evol_right(&AlgebraCurve::linear_combination(&x, 1.0, &y, -s), 1.0, &cfg).unwrap();
    let diff = (plus.matrix() - minus.matrix()).scale(0.5 / s);
    let fd = kappa_left(&evol_right(&x, 1.0, &cfg).unwrap(), &diff).unwrap();
    assert!(fd.sub(&got).norm() < 1e-4, "{}", fd.sub(&got).norm());
}

#[test]
fn tangent_develop_of_zero_direction() {
    let spec = so3();
    let dom = Domain::cube(2, 1.0);
    let xi = preset_form(&spec, "pullback-expxy:L1,L2", &dom).unwrap();
    let eta = OneForm::zero(spec, dom.clone());
    let grid = Grid::uniform(dom, 3);
    let cfg = EvolConfig::rkmk4(64);
    let pairs = tangent_develop(&xi, &eta, &grid, &cfg).unwrap();
    let base = develop(&xi, &grid, &cfg).unwrap();
    for i in 0..grid.len() {
        assert_eq!(pairs.value(i).lin.norm(), 0.0);
        // the base component is the plain development, bit for bit
        assert_eq!(
            pairs.value(i).grp.matrix().as_slice(),
            base.value(i).matrix().as_slice()
        );
    }
}

#[test]
fn tangent_develop_base_component_is_plain_development() {
    let spec = so3();
    let dom = Domain::cube(2, 1.0);
    let xi = preset_form(&spec, "pullback-expxy:L1,L2", &dom).unwrap();
    let h0 = {
        let a = spec.basis_element(2);
        let val: crate::forms::ComponentFn = {
            let a = a.clone();
            Arc::new(move |x: &[f64]| Ok(a.scale(x[0] * x[1])))
        };
        let p0: crate::forms::ComponentFn = {
            let a = a.clone();
            Arc::new(move |x: &[f64]| Ok(a.scale(x[1])))
        };
        let p1: crate::forms::ComponentFn = Arc::new(move |x: &[f64]| Ok(a.scale(x[0])));
        crate::forms::GFunction::new(spec.clone(), dom.clone(), val).with_partials(vec![p0, p1])
    };
    let cfg = EvolConfig::rkmk4(64);
    let eta = crate::flat_group::variation_form(&xi, &h0, &cfg).unwrap();
    let grid = Grid::uniform(dom, 3);
    let pairs = tangent_develop(&xi, &eta, &grid, &cfg).unwrap();
    let base = develop(&xi, &grid, &cfg).unwrap();
    for i in 0..grid.len() {
        assert_eq!(
            pairs.value(i).grp.matrix().as_slice(),
            base.value(i).matrix().as_slice()
        );
    }
}

#[test]
fn tangent_develop_of_closed_form_at_zero_base() {
    let spec = so3();
    let dom = Domain::cube(2, 1.0);
    let xi = OneForm::zero(spec.clone(), dom.clone());
    let a = spec.from_coords(&[0.4, -0.2, 0.9]);
    let b = spec.from_coords(&[0.1, 0.8, -0.5]);
    let eta = OneForm::constant(spec.clone(), dom.clone(), vec![a.clone(), b.clone()]);
    let grid = Grid::uniform(dom, 3);
    let pairs = tangent_develop(&xi, &eta, &grid, &EvolConfig::rkmk4(64)).unwrap();
    for (i, x) in grid.points().enumerate() {
        // per-ray quadrature of the closed direction: here just x1 A + x2 B
        let want = a.scale(x[0]).add(&b.scale(x[1]));
        assert!(pairs.value(i).lin.sub(&want).norm() < 1e-12);
        assert!(pairs.value(i).grp.is_identity(1e-14));
    }
}

#[test]
fn tangent_develop_matches_fd_of_development() {
    let spec = so3();
    let dom = Domain::cube(2, 1.0);
    let xi = preset_form(&spec, "pullback-expxy:L1,L2", &dom).unwrap();
    let h0 = {
        let a = spec.basis_element(2);
        let b = spec.basis_element(0);
        let val: crate::forms::ComponentFn = {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |x: &[f64]| Ok(a.scale(x[0]).add(&b.scale(x[1] * x[1]))))
        };
        let p0: crate::forms::ComponentFn = Arc::new(move |_x: &[f64]| Ok(a.clone()));
        let p1: crate::forms::ComponentFn =
            Arc::new(move |x: &[f64]| Ok(b.scale(2.0 * x[1])));
        crate::forms::GFunction::new(spec.clone(), dom.clone(), val).with_partials(vec![p0, p1])
    };
    let cfg = EvolConfig::rkmk4(256);
    let eta = crate::flat_group::variation_form(&xi, &h0, &cfg).unwrap();
    let grid = Grid::uniform(dom.clone(), 3);
    let pairs = tangent_develop(&xi, &eta, &grid, &cfg).unwrap();
    let s = FD_STEP;
    for (i, x) in grid.points().enumerate() {
        // perturbed forms xi + s eta evaluated directly per radial ray
        let dev = |sign: f64| {
            let (xi, eta, xv) = (xi.clone(), eta.clone(), x.clone());
            let curve = AlgebraCurve::new(
                spec.clone(),
                Arc::new(move |t: f64| {
                    let p: Vec<f64> = xv.iter().map(|xj| t * xj).collect();
                    Ok(xi.eval(&p, &xv)?.add(&eta.eval(&p, &xv)?.scale(sign * s)))
                }),
            );
            evol_right(&curve, 1.0, &cfg).unwrap()
        };
        let diff = (dev(1.0).matrix() - dev(-1.0).matrix()).scale(0.5 / s);
        let fd = kappa_right(&pairs.value(i).grp, &diff).unwrap();
        let d = fd.sub(&pairs.value(i).lin).norm();
        assert!(d < 1e-4, "at {x:?}: {d}");
    }
}

#[test]
fn tangent_develop_rejects_non_tangent_direction() {
    let spec = so3();
    let dom = Domain::cube(2, 1.0);
    let xi = preset_form(&spec, "pullback-expxy:L1,L2", &dom).unwrap();
    let bad = preset_form(&spec, "const:L1,L2", &dom).unwrap();
    let grid = Grid::uniform(dom, 3);
    assert!(matches!(
        tangent_develop(&xi, &bad, &grid, &EvolConfig::rkmk4(16)),
        Err(Error::NotLinearizedFlat { .. })
    ));
}

#[test]
fn spec_mismatch_is_rejected() {
    let a = sample_element(&so3(), 1);
    let other = SemidirectElement::identity(&LieGroupSpec::gl(3));
    assert!(matches!(
        sd_multiply(&a, &other),
        Err(Error::SpecMismatch(_, _))
    ));
}
