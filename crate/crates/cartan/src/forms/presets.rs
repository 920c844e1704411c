//! Named form and map presets, addressable from CLI configs.
//!
//! Ids:
//!   "zero"                       zero form / constant-identity map
//!   "const:A,B[,C]"              constant form, one algebra element per axis
//!   "pullback-expxy:A,B"         F(x,y) = exp(x A) exp(y B) and its pullback
//!   "su2-zcc:a,b"                exp(x a E1) exp(y b E2) zero-curvature family
//!   "polynomial:k,c0,c1,..."     F = exp(p(x) E_k), form = dp (x) E_k, with
//!                                p = c0 + sum_i c_{1+i} x_i + sum_i c_{1+d+i} x_i^2
//!
//! Algebra elements are written as sums of scaled basis elements, e.g.
//! "L1", "0.5*L2", "L1+2*L3".

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{ComponentFn, Domain, GMap, GroupFn, MatrixFn, OneForm};
use crate::lie_core::{adjoint, bracket, exp, AlgebraElement, GroupElement, LieGroupSpec};

/// Parse an algebra element expression like "L1+0.5*L3".
pub fn parse_algebra(spec: &Arc<LieGroupSpec>, text: &str) -> Result<AlgebraElement> {
    let bad = |msg: &str| Error::BadPreset(text.to_string(), msg.to_string());
    let mut coords = vec![0.0; spec.algebra_dim()];
    for term in text.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(bad("empty term"));
        }
        let (coeff, base) = match term.split_once('*') {
            Some((c, b)) => (
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| bad("bad coefficient"))?,
                b.trim(),
            ),
            None => {
                if let Some(stripped) = term.strip_prefix('-') {
                    (-1.0, stripped.trim())
                } else {
                    (1.0, term)
                }
            }
        };
        let idx: usize = base
            .strip_prefix('L')
            .ok_or_else(|| bad("basis elements are L1..Lm"))?
            .parse()
            .map_err(|_| bad("bad basis index"))?;
        if idx == 0 || idx > spec.algebra_dim() {
            return Err(bad("basis index out of range"));
        }
        coords[idx - 1] += coeff;
    }
    Ok(spec.from_coords(&coords))
}

fn split_id(id: &str) -> (&str, Vec<String>) {
    match id.split_once(':') {
        Some((name, args)) => (
            name,
            args.split(',').map(|s| s.trim().to_string()).collect(),
        ),
        None => (id, Vec::new()),
    }
}

struct Quadratic {
    c0: f64,
    lin: Vec<f64>,
    quad: Vec<f64>,
}

impl Quadratic {
    fn parse(id: &str, args: &[String], dim: usize) -> Result<(usize, Self)> {
        if args.is_empty() {
            return Err(Error::BadPreset(id.to_string(), "missing arguments".into()));
        }
        let k: usize = args[0]
            .parse()
            .map_err(|_| Error::BadPreset(id.to_string(), "bad basis index".into()))?;
        let coeffs: Vec<f64> = args[1..]
            .iter()
            .map(|a| a.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::BadPreset(id.to_string(), "bad coefficient".into()))?;
        let get = |i: usize| coeffs.get(i).copied().unwrap_or(0.0);
        Ok((
            k,
            Self {
                c0: get(0),
                lin: (0..dim).map(|i| get(1 + i)).collect(),
                quad: (0..dim).map(|i| get(1 + dim + i)).collect(),
            },
        ))
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut p = self.c0;
        for (i, xi) in x.iter().enumerate() {
            p += self.lin[i] * xi + self.quad[i] * xi * xi;
        }
        p
    }

    fn gradient(&self, i: usize, x: &[f64]) -> f64 {
        self.lin[i] + 2.0 * self.quad[i] * x[i]
    }
}

fn exp_pair_factors(
    spec: &Arc<LieGroupSpec>,
    id: &str,
    args: &[String],
) -> Result<(AlgebraElement, AlgebraElement)> {
    match split_id(id).0 {
        "pullback-expxy" => {
            if args.len() != 2 {
                return Err(Error::BadPreset(id.to_string(), "need two elements".into()));
            }
            Ok((parse_algebra(spec, &args[0])?, parse_algebra(spec, &args[1])?))
        }
        "su2-zcc" => {
            if args.len() != 2 || spec.algebra_dim() < 2 {
                return Err(Error::BadPreset(id.to_string(), "need two scalars".into()));
            }
            let a: f64 = args[0]
                .parse()
                .map_err(|_| Error::BadPreset(id.to_string(), "bad scalar".into()))?;
            let b: f64 = args[1]
                .parse()
                .map_err(|_| Error::BadPreset(id.to_string(), "bad scalar".into()))?;
            Ok((spec.basis_element(0).scale(a), spec.basis_element(1).scale(b)))
        }
        _ => unreachable!(),
    }
}

/// Instantiate a G-valued map preset.
pub fn preset_map(spec: &Arc<LieGroupSpec>, id: &str, domain: &Domain) -> Result<GMap> {
    let (name, args) = split_id(id);
    match name {
        "zero" => Ok(GMap::constant(
            spec.clone(),
            domain.clone(),
            GroupElement::identity(spec),
        )),
        "pullback-expxy" | "su2-zcc" => {
            if domain.dim() < 2 {
                return Err(Error::BadPreset(id.to_string(), "needs a 2-D domain".into()));
            }
            let (a, b) = exp_pair_factors(spec, id, &args)?;
            let (a2, b2) = (a.clone(), b.clone());
            let val: GroupFn = Arc::new(move |x: &[f64]| {
                crate::lie_core::compose(&exp(&a2.scale(x[0]))?, &exp(&b2.scale(x[1]))?)
            });
            let d = domain.dim();
            let mut partials: Vec<MatrixFn> = Vec::with_capacity(d);
            for i in 0..d {
                let a = a.clone();
                let b = b.clone();
                partials.push(Arc::new(move |x: &[f64]| {
                    let ga = exp(&a.scale(x[0]))?;
                    let gb = exp(&b.scale(x[1]))?;
                    let f = ga.matrix() * gb.matrix();
                    Ok(match i {
                        0 => a.matrix() * &f,
                        1 => ga.matrix() * b.matrix() * gb.matrix(),
                        _ => f.scale(0.0),
                    })
                }) as MatrixFn);
            }
            Ok(GMap::new(spec.clone(), domain.clone(), val, id).with_partials(partials))
        }
        "polynomial" => {
            let (k, p) = Quadratic::parse(id, &args, domain.dim())?;
            if k == 0 || k > spec.algebra_dim() {
                return Err(Error::BadPreset(id.to_string(), "basis index out of range".into()));
            }
            let gen = spec.basis_element(k - 1);
            let p = Arc::new(p);
            let (g2, p2) = (gen.clone(), p.clone());
            let val: GroupFn = Arc::new(move |x: &[f64]| exp(&g2.scale(p2.value(x))));
            let d = domain.dim();
            let partials: Vec<MatrixFn> = (0..d)
                .map(|i| {
                    let gen = gen.clone();
                    let p = p.clone();
                    Arc::new(move |x: &[f64]| {
                        let f = exp(&gen.scale(p.value(x)))?;
                        Ok((gen.matrix() * f.matrix()).scale(p.gradient(i, x)))
                    }) as MatrixFn
                })
                .collect();
            Ok(GMap::new(spec.clone(), domain.clone(), val, id).with_partials(partials))
        }
        _ => Err(Error::UnknownPreset(id.to_string())),
    }
}

/// Instantiate a 1-form preset.
pub fn preset_form(spec: &Arc<LieGroupSpec>, id: &str, domain: &Domain) -> Result<OneForm> {
    let (name, args) = split_id(id);
    match name {
        "zero" => Ok(OneForm::zero(spec.clone(), domain.clone())),
        "const" => {
            if args.len() != domain.dim() {
                return Err(Error::BadPreset(
                    id.to_string(),
                    "need one element per axis".into(),
                ));
            }
            let coeffs = args
                .iter()
                .map(|a| parse_algebra(spec, a))
                .collect::<Result<Vec<_>>>()?;
            Ok(OneForm::constant(spec.clone(), domain.clone(), coeffs))
        }
        "pullback-expxy" | "su2-zcc" => {
            if domain.dim() < 2 {
                return Err(Error::BadPreset(id.to_string(), "needs a 2-D domain".into()));
            }
            let (a, b) = exp_pair_factors(spec, id, &args)?;
            let d = domain.dim();
            let zero_comp: ComponentFn = {
                let s = spec.clone();
                Arc::new(move |_x| Ok(AlgebraElement::zero(&s)))
            };
            // component 1 is the constant A; component 2 is Ad(exp(x1 A)) B
            let comp0: ComponentFn = {
                let a = a.clone();
                Arc::new(move |_x: &[f64]| Ok(a.clone()))
            };
            let comp1: ComponentFn = {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |x: &[f64]| adjoint(&exp(&a.scale(x[0]))?, &b))
            };
            let mut comps = vec![comp0, comp1];
            comps.resize(d, zero_comp.clone());
            // d_1 of component 2 is [A, Ad(exp(x1 A)) B]; everything else vanishes
            let d1_comp1: ComponentFn = {
                let (a, b) = (a.clone(), b.clone());
                Arc::new(move |x: &[f64]| {
                    bracket(&a, &adjoint(&exp(&a.scale(x[0]))?, &b)?)
                })
            };
            let mut partials = vec![vec![zero_comp.clone(); d]; d];
            partials[1][0] = d1_comp1;
            Ok(OneForm::new(spec.clone(), domain.clone(), comps, id).with_partials(partials))
        }
        "polynomial" => {
            let (k, p) = Quadratic::parse(id, &args, domain.dim())?;
            if k == 0 || k > spec.algebra_dim() {
                return Err(Error::BadPreset(id.to_string(), "basis index out of range".into()));
            }
            let gen = spec.basis_element(k - 1);
            let p = Arc::new(p);
            let d = domain.dim();
            let comps: Vec<ComponentFn> = (0..d)
                .map(|i| {
                    let gen = gen.clone();
                    let p = p.clone();
                    Arc::new(move |x: &[f64]| Ok(gen.scale(p.gradient(i, x)))) as ComponentFn
                })
                .collect();
            let partials: Vec<Vec<ComponentFn>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let gen = gen.clone();
                            let p = p.clone();
                            Arc::new(move |_x: &[f64]| {
                                Ok(if i == j {
                                    gen.scale(2.0 * p.quad[i])
                                } else {
                                    AlgebraElement::zero(gen.spec())
                                })
                            }) as ComponentFn
                        })
                        .collect()
                })
                .collect();
            Ok(OneForm::new(spec.clone(), domain.clone(), comps, id).with_partials(partials))
        }
        _ => Err(Error::UnknownPreset(id.to_string())),
    }
}
