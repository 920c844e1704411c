//! Scenario-driven front end: JSON configuration, check orchestration, and
//! bit-stable CSV/JSON emission.
//!
//! Everything here is deterministic for a fixed config: randomness flows
//! from the single `seed` through xoshiro256**, check rows keep insertion
//! order, and floating-point output is fixed-width scientific text, so two
//! runs of the same scenario produce byte-identical artifacts regardless of
//! the worker-thread count.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    convergence_slope, develop, develop_at, develop_path, domain_reparam_check, evol_left,
    evol_right, holonomy, naturality_check, reparam_law_deviation, AlgebraCurve, EvolConfig,
    Hom, Integrator, PathCurve,
};
use crate::flat_group::{
    flat_bracket, linearized_flatness, poincare_inverse, reconstruct_h, star, star_inverse,
    variation_form, ClosedOneForm, DEFAULT_QUAD_NODES,
};
use crate::forms::{
    leibniz_check, preset_form, preset_map, ComponentFn, Domain, GFunction, Grid, OneForm,
};
use crate::lie_core::{
    compose, exp, invert, log_near_identity, AlgebraElement, LieGroupSpec,
};
use crate::tangent_semidirect::{
    evol_sd, sd_adjoint, sd_bracket, sd_invert, sd_multiply, tangent_develop, tangent_evol,
    SemidirectAlgebra, SemidirectElement,
};
use crate::tol;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    pub half_widths: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 9,
            half_widths: vec![1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolSettings {
    pub integrator: String,
    pub steps: usize,
    pub dexpinv_order: usize,
}

impl Default for EvolSettings {
    fn default() -> Self {
        Self {
            integrator: "rkmk4".to_string(),
            steps: 256,
            dexpinv_order: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub group: String,
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form2: Option<String>,
    /// Polyline vertices for `develop-path`; a staircase to the grid corner
    /// midpoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub evol: EvolSettings,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.resolution < 2 {
            return Err(Error::Config("grid.resolution must be >= 2".into()));
        }
        if !(1..=3).contains(&self.grid.half_widths.len()) {
            return Err(Error::Config("grid.half_widths needs 1 to 3 axes".into()));
        }
        if self.grid.half_widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("grid.half_widths must be positive".into()));
        }
        if self.evol.steps < 1 {
            return Err(Error::Config("evol.steps must be >= 1".into()));
        }
        if !matches!(self.evol.integrator.as_str(), "rkmk4" | "rk4") {
            return Err(Error::Config(format!(
                "unknown integrator `{}` (expected rkmk4 or rk4)",
                self.evol.integrator
            )));
        }
        for (name, value) in &self.tolerances {
            if !(*value > 0.0) {
                return Err(Error::Config(format!("tolerance `{name}` must be > 0")));
            }
        }
        for fmt in &self.output.formats {
            if !matches!(fmt.as_str(), "csv" | "json") {
                return Err(Error::Config(format!("unknown output format `{fmt}`")));
            }
        }
        if let Some(path) = &self.path {
            if path.len() < 2 || path.iter().any(|v| v.len() != self.grid.half_widths.len()) {
                return Err(Error::Config(
                    "path needs >= 2 vertices of the grid dimension".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<Arc<LieGroupSpec>> {
        LieGroupSpec::from_name(&self.group)
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.grid.half_widths.clone())
    }

    pub fn make_grid(&self) -> Grid {
        Grid::uniform(self.domain(), self.grid.resolution)
    }

    pub fn evol_config(&self) -> EvolConfig {
        EvolConfig {
            integrator: match self.evol.integrator.as_str() {
                "rkmk4" => Integrator::Rkmk4,
                _ => Integrator::Rk4Ambient,
            },
            steps: self.evol.steps,
            dexpinv_order: self.evol.dexpinv_order,
        }
    }

    pub fn form(&self) -> Result<OneForm> {
        preset_form(&self.spec()?, &self.form, &self.domain())
    }

    pub fn form2(&self) -> Result<OneForm> {
        match &self.form2 {
            Some(id) => preset_form(&self.spec()?, id, &self.domain()),
            None => Ok(OneForm::zero(self.spec()?, self.domain())),
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub subcommand: String,
    pub scenario: ScenarioConfig,
    pub checks: Vec<CheckRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coverage: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Report {
    fn new(subcommand: &str, cfg: &ScenarioConfig) -> Self {
        // the echoed scenario omits the output directory so reports land
        // byte-identical wherever they are written
        let mut scenario = cfg.clone();
        scenario.output.dir = None;
        Self {
            subcommand: subcommand.to_string(),
            scenario,
            checks: Vec::new(),
            coverage: Vec::new(),
            details: None,
        }
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64) {
        self.checks.push(CheckRow {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Grid CSV: header `x1[,x2[,x3]],m00,m01,...`, one row-major row per grid
/// point, 17-significant-digit scientific notation.
pub fn emit_csv(grid: &Grid, values: &[DMatrix<f64>], path: &Path) -> Result<()> {
    let dim = grid.domain.dim();
    let n = values.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = String::new();
    for i in 0..dim {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("x{}", i + 1));
    }
    for r in 0..n {
        for c in 0..n {
            out.push_str(&format!(",m{r}{c}"));
        }
    }
    out.push('\n');
    for (k, m) in values.iter().enumerate() {
        let x = grid.point(k);
        for (i, xi) in x.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{xi:.16e}"));
        }
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push_str(&format!(",{:.16e}", m[(r, c)]));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// seeded inputs
// ---------------------------------------------------------------------------

fn rng_for(cfg: &ScenarioConfig) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(cfg.seed)
}

fn random_coords(rng: &mut Xoshiro256StarStar, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_algebra(spec: &Arc<LieGroupSpec>, rng: &mut Xoshiro256StarStar) -> AlgebraElement {
    spec.from_coords(&random_coords(rng, spec.algebra_dim()))
}

/// A smooth algebra curve with seeded trigonometric coefficients.
fn random_curve(spec: &Arc<LieGroupSpec>, rng: &mut Xoshiro256StarStar) -> AlgebraCurve {
    let a = random_coords(rng, spec.algebra_dim());
    let b = random_coords(rng, spec.algebra_dim());
    let spec2 = spec.clone();
    AlgebraCurve::new(
        spec.clone(),
        Arc::new(move |t| {
            let coords: Vec<f64> = a
                .iter()
                .zip(&b)
                .enumerate()
                .map(|(k, (ak, bk))| ak * ((k + 1) as f64 * t).sin() + bk * (k as f64 * t).cos())
                .collect();
            Ok(spec2.from_coords(&coords))
        }),
    )
}

/// A pointed polynomial g-valued function with analytic partials:
/// h(x) = sum_j (sum_i c_{ji} x_i + q_j x_1 x_d) L_j, h(0) = 0.
fn random_pointed_function(
    spec: &Arc<LieGroupSpec>,
    domain: &Domain,
    rng: &mut Xoshiro256StarStar,
) -> GFunction {
    let d = domain.dim();
    let m = spec.algebra_dim();
    let lin: Vec<Vec<f64>> = (0..m).map(|_| random_coords(rng, d)).collect();
    let quad: Vec<f64> = random_coords(rng, m);
    let value: ComponentFn = {
        let (spec, lin, quad) = (spec.clone(), lin.clone(), quad.clone());
        Arc::new(move |x: &[f64]| {
            let coords: Vec<f64> = lin
                .iter()
                .zip(&quad)
                .map(|(c, q)| {
                    c.iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>() + q * x[0] * x[d - 1]
                })
                .collect();
            Ok(spec.from_coords(&coords))
        })
    };
    let partials: Vec<ComponentFn> = (0..d)
        .map(|axis| {
            let (spec, lin, quad) = (spec.clone(), lin.clone(), quad.clone());
            Arc::new(move |x: &[f64]| {
                let coords: Vec<f64> = lin
                    .iter()
                    .zip(&quad)
                    .map(|(c, q)| {
                        let mut v = c[axis];
                        if axis == 0 {
                            v += q * x[d - 1];
                        }
                        if axis == d - 1 {
                            v += q * x[0];
                        }
                        v
                    })
                    .collect();
                Ok(spec.from_coords(&coords))
            }) as ComponentFn
        })
        .collect();
    GFunction::new(spec.clone(), domain.clone(), value).with_partials(partials)
}

fn sample_points(domain: &Domain, rng: &mut Xoshiro256StarStar, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            domain
                .half_widths()
                .iter()
                .map(|w| rng.gen_range(-0.9 * w..0.9 * w))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// check implementations
// ---------------------------------------------------------------------------

fn form_sup_at(form: &OneForm, points: &[Vec<f64>]) -> Result<f64> {
    let mut max: f64 = 0.0;
    for x in points {
        for i in 0..form.domain.dim() {
            max = max.max(form.component(i, x)?.norm());
        }
    }
    Ok(max)
}

fn check_flat(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let xi = cfg.form()?;
    let res = cfg.grid.resolution.min(7);
    let flat = xi.flatness(res, cfg.tolerance("flatness", tol::FLATNESS))?;
    report.push("max_mc_residual", flat.max_residual, flat.tolerance);
    Ok(())
}

fn check_develop(report: &mut Report, cfg: &ScenarioConfig) -> Result<Vec<DMatrix<f64>>> {
    let xi = cfg.form()?;
    let grid = cfg.make_grid();
    let evol = cfg.evol_config();
    let map = develop(&xi, &grid, &evol)?;
    report.push(
        "basepoint_error",
        map.diagnostics.basepoint_error,
        cfg.tolerance("basepoint", 1e-12),
    );
    report.push(
        "max_constraint_residual",
        map.diagnostics.max_constraint_residual,
        cfg.tolerance("constraint", 1e-8),
    );
    // round trip against the generating map when the preset has one
    if let Ok(f) = preset_map(&xi.spec, &cfg.form, &xi.domain) {
        let f0inv = invert(&f.eval(&vec![0.0; grid.domain.dim()])?)?;
        let mut max: f64 = 0.0;
        for (i, x) in grid.points().enumerate() {
            let want = compose(&f.eval(&x)?, &f0inv)?;
            max = max.max(map.value(i).distance(&want));
        }
        report.push("round_trip", max, cfg.tolerance("round_trip", 1e-6));
    }
    Ok(map.values.iter().map(|g| g.matrix().clone()).collect())
}

fn default_path(cfg: &ScenarioConfig) -> PathCurve {
    match &cfg.path {
        Some(vertices) => PathCurve::polyline(vertices.clone()),
        None => {
            let target: Vec<f64> = cfg.grid.half_widths.iter().map(|w| 0.5 * w).collect();
            PathCurve::staircase(&target)
        }
    }
}

fn check_develop_path(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let xi = cfg.form()?;
    let evol = cfg.evol_config();
    let path = default_path(cfg);
    let transported = develop_path(&xi, &path, &evol)?;
    let radial = develop_at(&xi, &path.end(), &evol)?;
    report.push(
        "path_vs_radial",
        transported.distance(&radial),
        cfg.tolerance("path_independence", 1e-6),
    );
    Ok(())
}

const HOLONOMY_SIDES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn check_holonomy_scan(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let xi = cfg.form()?;
    let evol = cfg.evol_config();
    let dim = xi.domain.dim();
    if dim < 2 {
        return Err(Error::Config("holonomy-scan needs a 2-D or 3-D grid".into()));
    }
    let flat = xi.flatness(cfg.grid.resolution.min(5), tol::FLATNESS)?;
    let mut defects = Vec::new();
    for side in HOLONOMY_SIDES {
        let h = holonomy(&xi, &PathCurve::square_loop(dim, 0, 1, side), &evol)?;
        defects.push((side, log_near_identity(h.matrix())?.norm()));
    }
    report.details = Some(serde_json::json!({
        "loop_defects": defects
            .iter()
            .map(|(s, v)| serde_json::json!({"side": s, "log_holonomy": v}))
            .collect::<Vec<_>>(),
    }));
    if flat.flat {
        let max = defects.iter().map(|d| d.1).fold(0.0, f64::max);
        report.push("max_loop_defect", max, cfg.tolerance("holonomy", 1e-7));
    } else {
        // curvature makes the loop defect scale with the enclosed area
        let pts: Vec<(f64, f64)> = defects.iter().map(|(s, v)| (s.ln(), v.ln())).collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        report.push(
            "slope_deviation",
            (slope - 2.0).abs(),
            cfg.tolerance("slope", 0.2),
        );
    }
    Ok(())
}

fn check_evolve(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let spec = cfg.spec()?;
    let mut rng = rng_for(cfg);
    let x = random_curve(&spec, &mut rng);
    let evol = cfg.evol_config();

    let drift = crate::evolution::constraint_drift(&x, 1.0, &evol)?;
    match evol.integrator {
        Integrator::Rkmk4 => {
            report.push("constraint_drift", drift, cfg.tolerance("drift", 1e-10));
            let reference = evol_right(&x, 1.0, &EvolConfig::rkmk4(4096))?;
            let errs: Vec<(usize, f64)> = [32usize, 64, 128, 256]
                .iter()
                .map(|n| {
                    Ok((
                        *n,
                        evol_right(&x, 1.0, &EvolConfig::rkmk4(*n))?.distance(&reference),
                    ))
                })
                .collect::<Result<_>>()?;
            report.details = Some(serde_json::json!({
                "convergence_errors": errs
                    .iter()
                    .map(|(n, e)| serde_json::json!({"steps": n, "error": e}))
                    .collect::<Vec<_>>(),
            }));
            report.push(
                "convergence_slope_deviation",
                (convergence_slope(&errs) - 4.0).abs(),
                cfg.tolerance("order", 0.3),
            );
        }
        Integrator::Rk4Ambient => {
            // informational contrast row: ambient stepping drifts off the group
            report.push("ambient_drift", drift, cfg.tolerance("ambient_drift", 1.0));
        }
    }

    // one-dimensional evolution laws
    let cfg512 = EvolConfig::rkmk4(512);
    let neg = AlgebraCurve::linear_combination(&x, -1.0, &x, 0.0);
    let lr = evol_left(&x, 1.0, &cfg512)?.distance(&invert(&evol_right(&neg, 1.0, &cfg512)?)?);
    report.push("left_right_law", lr, cfg.tolerance("laws", 1e-7));
    let rep = reparam_law_deviation(
        &x,
        Arc::new(|t: f64| t * t),
        Arc::new(|t: f64| 2.0 * t),
        &cfg512,
    )?;
    report.push("reparam_law", rep, cfg.tolerance("laws", 1e-7));
    Ok(())
}

/// FD group-commutator oracle residual for the bracket on closed forms.
fn bracket_oracle_residual(
    spec: &Arc<LieGroupSpec>,
    domain: &Domain,
    rng: &mut Xoshiro256StarStar,
    pairs: usize,
) -> Result<f64> {
    let evol = EvolConfig::rkmk4(32);
    let d = domain.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let f1 = OneForm::constant(
            spec.clone(),
            domain.clone(),
            (0..d).map(|_| random_algebra(spec, rng)).collect(),
        );
        let f2 = OneForm::constant(
            spec.clone(),
            domain.clone(),
            (0..d).map(|_| random_algebra(spec, rng)).collect(),
        );
        let want = flat_bracket(
            &ClosedOneForm::certify(f1.clone(), 5, 1e-10)?,
            &ClosedOneForm::certify(f2.clone(), 5, 1e-10)?,
        )?;
        let scale = |f: &OneForm, c: f64| {
            f.map_algebra(f.spec.clone(), Arc::new(move |a| Ok(a.scale(c))), "scaled")
        };
        let commutator = |s: f64, t: f64| -> Result<OneForm> {
            let p = scale(&f1, s);
            let q = scale(&f2, t);
            let pq = star(&p, &q, &evol)?;
            let pqp = star(&pq, &star_inverse(&p, &evol)?, &evol)?;
            star(&pqp, &star_inverse(&q, &evol)?, &evol)
        };
        let h = 1e-3;
        let (cpp, cpm, cmp, cmm) = (
            commutator(h, h)?,
            commutator(h, -h)?,
            commutator(-h, h)?,
            commutator(-h, -h)?,
        );
        let x = sample_points(domain, rng, 1).pop().expect("one point");
        for i in 0..d {
            let mixed = cpp
                .component(i, &x)?
                .sub(&cpm.component(i, &x)?)
                .sub(&cmp.component(i, &x)?)
                .add(&cmm.component(i, &x)?)
                .scale(0.25 / (h * h));
            worst = worst.max(mixed.sub(&want.form.component(i, &x)?).norm());
        }
    }
    Ok(worst)
}

fn jacobi_residual(
    spec: &Arc<LieGroupSpec>,
    domain: &Domain,
    rng: &mut Xoshiro256StarStar,
) -> Result<f64> {
    let d = domain.dim();
    let mk = |rng: &mut Xoshiro256StarStar| -> Result<ClosedOneForm> {
        ClosedOneForm::certify(
            OneForm::constant(
                spec.clone(),
                domain.clone(),
                (0..d).map(|_| random_algebra(spec, rng)).collect(),
            ),
            5,
            1e-10,
        )
    };
    let (u, v, w) = (mk(rng)?, mk(rng)?, mk(rng)?);
    let j1 = flat_bracket(&flat_bracket(&u, &v)?, &w)?;
    let j2 = flat_bracket(&flat_bracket(&v, &w)?, &u)?;
    let j3 = flat_bracket(&flat_bracket(&w, &u)?, &v)?;
    let points = sample_points(domain, rng, 3);
    let mut worst: f64 = 0.0;
    for x in &points {
        for i in 0..d {
            worst = worst.max(
                j1.form
                    .component(i, x)?
                    .add(&j2.form.component(i, x)?)
                    .add(&j3.form.component(i, x)?)
                    .norm(),
            );
        }
    }
    Ok(worst)
}

fn check_group_law(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let spec = cfg.spec()?;
    let domain = cfg.domain();
    let xi = cfg.form()?;
    let eta = cfg.form2()?;
    let evol = cfg.evol_config();
    let mut rng = rng_for(cfg);
    let points = sample_points(&domain, &mut rng, 5);

    let prod = star(&xi, &eta, &evol)?;
    let mut star_residual: f64 = 0.0;
    for x in &points {
        let lhs = develop_at(&prod, x, &evol)?;
        let rhs = compose(&develop_at(&xi, x, &evol)?, &develop_at(&eta, x, &evol)?)?;
        star_residual = star_residual.max(lhs.distance(&rhs));
    }
    report.push("star_residual", star_residual, cfg.tolerance("star", 1e-6));

    let inv = star_inverse(&xi, &evol)?;
    let unit = star(&xi, &inv, &evol)?;
    let mut inverse_residual = form_sup_at(&unit, &points)?;
    for x in &points {
        let dev = develop_at(&unit, x, &evol)?;
        let n = spec.ambient_dim();
        inverse_residual =
            inverse_residual.max((dev.matrix() - DMatrix::<f64>::identity(n, n)).norm());
    }
    report.push(
        "inverse_residual",
        inverse_residual,
        cfg.tolerance("inverse", 1e-6),
    );

    report.push(
        "bracket_vs_oracle",
        bracket_oracle_residual(&spec, &domain, &mut rng, 3)?,
        cfg.tolerance("bracket", 1e-4),
    );
    report.push(
        "jacobi_residual",
        jacobi_residual(&spec, &domain, &mut rng)?,
        cfg.tolerance("jacobi", 1e-4),
    );
    Ok(())
}

fn check_poincare(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let spec = cfg.spec()?;
    let domain = cfg.domain();
    let mut rng = rng_for(cfg);
    let h0 = random_pointed_function(&spec, &domain, &mut rng);
    let beta = ClosedOneForm::certify(h0.differential(), 5, 1e-8)?;
    let h = poincare_inverse(&beta, DEFAULT_QUAD_NODES);
    let points = sample_points(&domain, &mut rng, 5);
    let mut round_trip: f64 = 0.0;
    let mut differential: f64 = 0.0;
    for x in &points {
        round_trip = round_trip.max(h.eval(x)?.sub(&h0.eval(x)?).norm());
        for i in 0..domain.dim() {
            differential =
                differential.max(h.partial(i, x)?.sub(&beta.form.component(i, x)?).norm());
        }
    }
    report.push(
        "poincare_round_trip",
        round_trip,
        cfg.tolerance("poincare_round_trip", 1e-10),
    );
    report.push(
        "poincare_differential",
        differential,
        cfg.tolerance("poincare_differential", 1e-6),
    );
    Ok(())
}

fn check_variation(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let spec = cfg.spec()?;
    let domain = cfg.domain();
    let xi = cfg.form()?;
    let evol = cfg.evol_config();
    let mut rng = rng_for(cfg);
    let h0 = random_pointed_function(&spec, &domain, &mut rng);
    let eta = variation_form(&xi, &h0, &evol)?;
    report.push(
        "linearized_residual",
        linearized_flatness(&xi, &eta, 5)?,
        cfg.tolerance("linearized", 1e-4),
    );
    let h = reconstruct_h(&xi, &eta, &evol)?;
    let mut round_trip: f64 = 0.0;
    for x in sample_points(&domain, &mut rng, 5) {
        round_trip = round_trip.max(h.eval(&x)?.sub(&h0.eval(&x)?).norm());
    }
    report.push(
        "variation_round_trip",
        round_trip,
        cfg.tolerance("variation", 1e-5),
    );
    Ok(())
}

fn sd_axiom_residual(spec: &Arc<LieGroupSpec>, rng: &mut Xoshiro256StarStar) -> Result<f64> {
    let mk_el = |rng: &mut Xoshiro256StarStar| -> Result<SemidirectElement> {
        SemidirectElement::new(random_algebra(spec, rng), exp(&random_algebra(spec, rng))?)
    };
    let mk_vec = |rng: &mut Xoshiro256StarStar| -> Result<SemidirectAlgebra> {
        SemidirectAlgebra::new(random_algebra(spec, rng), random_algebra(spec, rng))
    };
    let (a, b, c) = (mk_el(rng)?, mk_el(rng)?, mk_el(rng)?);
    let (u, v) = (mk_vec(rng)?, mk_vec(rng)?);
    let mut worst = sd_multiply(&sd_multiply(&a, &b)?, &c)?
        .distance(&sd_multiply(&a, &sd_multiply(&b, &c)?)?);
    worst = worst.max(sd_multiply(&a, &sd_invert(&a)?)?.distance(&SemidirectElement::identity(spec)));
    worst = worst.max(
        sd_adjoint(&sd_multiply(&a, &b)?, &u)?
            .sub(&sd_adjoint(&a, &sd_adjoint(&b, &u)?)?)
            .norm(),
    );
    // Ad is a bracket homomorphism
    worst = worst.max(
        sd_adjoint(&a, &sd_bracket(&u, &v)?)?
            .sub(&sd_bracket(&sd_adjoint(&a, &u)?, &sd_adjoint(&a, &v)?)?)
            .norm(),
    );
    Ok(worst)
}

fn check_tangent(
    report: &mut Report,
    cfg: &ScenarioConfig,
) -> Result<Option<(Grid, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)>> {
    let spec = cfg.spec()?;
    let mut rng = rng_for(cfg);
    let x = random_curve(&spec, &mut rng);
    let y = random_curve(&spec, &mut rng);
    let evol = EvolConfig::rkmk4(cfg.evol.steps.max(256));

    let (_, deviation) = evol_sd(&y, &x, &evol)?;
    report.push("diagram2_deviation", deviation, cfg.tolerance("diagram2", 1e-7));

    let got = tangent_evol(&x, &y, &evol)?;
    let s = 1e-5;
    let plus = evol_right(&AlgebraCurve::linear_combination(&x, 1.0, &y, s), 1.0, &evol)?;
    let minus = evol_right(&AlgebraCurve::linear_combination(&x, 1.0, &y, -s), 1.0, &evol)?;
    let diff = (plus.matrix() - minus.matrix()).scale(0.5 / s);
    let fd = crate::lie_core::kappa_left(&evol_right(&x, 1.0, &evol)?, &diff)?;
    report.push(
        "tangent_vs_fd",
        fd.sub(&got).norm(),
        cfg.tolerance("tangent_fd", 1e-4),
    );

    report.push(
        "sd_axiom_residuals",
        sd_axiom_residual(&spec, &mut rng)?,
        cfg.tolerance("sd_axioms", 1e-10),
    );

    // pair development: the base column must be the plain development bit
    // for bit
    let domain = cfg.domain();
    let xi = cfg.form()?;
    let h0 = random_pointed_function(&spec, &domain, &mut rng);
    let eta = variation_form(&xi, &h0, &cfg.evol_config())?;
    let grid = Grid::uniform(domain, cfg.grid.resolution.min(5));
    let pairs = tangent_develop(&xi, &eta, &grid, &cfg.evol_config())?;
    let base = develop(&xi, &grid, &cfg.evol_config())?;
    let identical = (0..grid.len())
        .all(|i| pairs.value(i).grp.matrix().as_slice() == base.value(i).matrix().as_slice());
    report.push(
        "base_component_mismatch",
        if identical { 0.0 } else { 1.0 },
        0.0,
    );
    let lin: Vec<DMatrix<f64>> = pairs.values.iter().map(|p| p.lin.matrix().clone()).collect();
    let grp: Vec<DMatrix<f64>> = pairs.values.iter().map(|p| p.grp.matrix().clone()).collect();
    Ok(Some((grid, lin, grp)))
}

fn check_naturality(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    // fixed canonical instances: these verify laws of the operators, not
    // properties of the configured scenario
    let evol = EvolConfig::rkmk4(256);
    let dom = Domain::cube(2, 1.0);
    let gl3 = LieGroupSpec::gl(3);
    let xi = preset_form(&gl3, "pullback-expxy:L1+0.5*L2,L5+0.3*L7+L9", &dom)?;
    let grid = Grid::uniform(dom.clone(), 4);
    report.push(
        "naturality_det",
        naturality_check(&xi, Hom::Det, &grid, &evol)?,
        cfg.tolerance("naturality", 1e-8),
    );
    let so3 = LieGroupSpec::so3();
    let rot = preset_form(&so3, "pullback-expxy:L1,L2", &dom)?;
    report.push(
        "naturality_inclusion",
        naturality_check(&rot, Hom::InclusionSo3Gl3, &grid, &evol)?,
        cfg.tolerance("naturality", 1e-8),
    );
    report.push(
        "domain_reparam",
        domain_reparam_check(&rot, &[0.5, 0.5], &grid, &evol)?,
        cfg.tolerance("reparam", 1e-9),
    );
    let f = preset_map(&so3, "pullback-expxy:L1,L2", &dom)?;
    let g2 = preset_map(&so3, "pullback-expxy:L3,L2", &dom)?;
    report.push(
        "leibniz_rule",
        leibniz_check(&f, &g2, &Grid::uniform(dom, 4))?,
        cfg.tolerance("leibniz", 1e-5),
    );
    Ok(())
}

fn check_path_independence(report: &mut Report, cfg: &ScenarioConfig) -> Result<()> {
    let xi = cfg.form()?;
    let evol = cfg.evol_config();
    let mut rng = rng_for(cfg);
    let mut worst: f64 = 0.0;
    for x in sample_points(&cfg.domain(), &mut rng, 10) {
        let radial = develop_path(&xi, &PathCurve::radial(&x), &evol)?;
        let stairs = develop_path(&xi, &PathCurve::staircase(&x), &evol)?;
        worst = worst.max(radial.distance(&stairs));
    }
    report.push(
        "path_independence",
        worst,
        cfg.tolerance("path_independence", 1e-6),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

pub const SUBCOMMANDS: [&str; 9] = [
    "check-flat",
    "develop",
    "develop-path",
    "holonomy-scan",
    "evolve",
    "group-law",
    "variation",
    "tangent",
    "verify-all",
];

/// Behavior-level coverage of the verification suite.
pub const COVERAGE: [&str; 10] = [
    "evolution-laws",
    "development-round-trip",
    "path-independence",
    "convergence-order",
    "flat-group-law",
    "poincare-inverse",
    "variation-reconstruction",
    "tangent-group",
    "naturality",
    "leibniz-rule",
];

pub fn run(subcommand: &str, cfg: &ScenarioConfig) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new(subcommand, cfg);
    let mut csv_artifacts: Vec<(String, Grid, Vec<DMatrix<f64>>)> = Vec::new();
    match subcommand {
        "check-flat" => check_flat(&mut report, cfg)?,
        "develop" => {
            let values = check_develop(&mut report, cfg)?;
            csv_artifacts.push(("develop.csv".into(), cfg.make_grid(), values));
        }
        "develop-path" => check_develop_path(&mut report, cfg)?,
        "holonomy-scan" => check_holonomy_scan(&mut report, cfg)?,
        "evolve" => check_evolve(&mut report, cfg)?,
        "group-law" => check_group_law(&mut report, cfg)?,
        "variation" => {
            check_poincare(&mut report, cfg)?;
            check_variation(&mut report, cfg)?;
        }
        "tangent" => {
            if let Some((grid, lin, grp)) = check_tangent(&mut report, cfg)? {
                csv_artifacts.push(("tangent_lin.csv".into(), grid.clone(), lin));
                csv_artifacts.push(("tangent_base.csv".into(), grid, grp));
            }
        }
        "verify-all" => {
            check_evolve(&mut report, cfg)?;
            let values = check_develop(&mut report, cfg)?;
            csv_artifacts.push(("develop.csv".into(), cfg.make_grid(), values));
            check_path_independence(&mut report, cfg)?;
            check_group_law(&mut report, cfg)?;
            check_poincare(&mut report, cfg)?;
            check_variation(&mut report, cfg)?;
            check_tangent(&mut report, cfg)?;
            check_naturality(&mut report, cfg)?;
            report.coverage = COVERAGE.iter().map(|s| s.to_string()).collect();
        }
        other => {
            return Err(Error::Config(format!(
                "unknown subcommand `{other}` (expected one of {SUBCOMMANDS:?})"
            )))
        }
    }

    if let Some(dir) = &cfg.output.dir {
        let dir = Path::new(dir);
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        if cfg.output.formats.iter().any(|f| f == "json") {
            write_text(&dir.join("report.json"), &report.to_json())?;
        }
        if cfg.output.formats.iter().any(|f| f == "csv") {
            for (name, grid, values) in &csv_artifacts {
                emit_csv(grid, values, &dir.join(name))?;
            }
        }
    }
    Ok(report)
}

/// Exit code contract: 0 all checks pass, 1 check failure, 2 config error.
pub fn exit_code_for(result: &Result<Report>) -> i32 {
    match result {
        Ok(report) => {
            if report.all_pass() {
                0
            } else {
                1
            }
        }
        Err(
            Error::Config(_)
            | Error::UnknownGroup(_)
            | Error::UnknownPreset(_)
            | Error::BadPreset(_, _)
            | Error::Io { .. },
        ) => 2,
        Err(_) => 1,
    }
}
