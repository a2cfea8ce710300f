//! Scenario ingestion and the experiment pipeline: a JSON description of a
//! structure plus problem data runs geometry -> mesh -> assembly -> solve,
//! emits CSV/VTK artifacts, and reports a machine-readable summary with the
//! key metrics and the outcome of any embedded assertions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{
    assemble_mass, assemble_stiffness, class_means, AssemblyError, CoefficientMatrixB,
};
use crate::expr::{EvalContext, Expression, ParseError};
use crate::geometry::{validate_structure, ComponentShape, GeometryError, ShapeKind};
use crate::linalg::{smallest_eigenpairs, LinalgError};
use crate::meshing::{build_mesh, interpolate, mesh_quality, DiscreteField, Mesh, MeshError};
use crate::solvers::{
    boundary_flux, l2_error_against, poincare_constants, run_parabolic_assembled, solve_stationary,
    ParabolicProblem, SolverError, StationaryProblem,
};
use crate::vec3::Vec3;
use crate::vtk::emit_vtk;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario validation: {0}")]
    Invalid(String),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("meshing: {0}")]
    Mesh(#[from] MeshError),
    #[error("assembly: {0}")]
    Assembly(#[from] AssemblyError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("linear algebra: {0}")]
    Linalg(#[from] LinalgError),
    #[error("expression: {0}")]
    Expr(#[from] ParseError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub components: Vec<ShapeKind>,
}

impl StructureSpec {
    pub fn to_components(&self) -> Vec<ComponentShape> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, kind)| ComponentShape {
                id: i,
                kind: kind.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Stationary,
    Parabolic,
    Poincare,
    Spectrum,
    Validate,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Stationary => "stationary",
            ProblemKind::Parabolic => "parabolic",
            ProblemKind::Poincare => "poincare",
            ProblemKind::Spectrum => "spectrum",
            ProblemKind::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BSpec {
    Identity,
    Constant([[f64; 3]; 3]),
    /// Expression entries evaluated in ambient coordinates (x, y, z, t).
    Entries(Box<[[Expression; 3]; 3]>),
}

impl Default for BSpec {
    fn default() -> Self {
        BSpec::Identity
    }
}

impl BSpec {
    pub fn build(&self) -> Result<CoefficientMatrixB, ScenarioError> {
        match self {
            BSpec::Identity => Ok(CoefficientMatrixB::identity()),
            BSpec::Constant(m) => Ok(CoefficientMatrixB::constant(*m)?),
            BSpec::Entries(entries) => {
                let entries = entries.clone();
                // floor estimated by sampling Rayleigh quotients on a coarse
                // grid; assembly re-checks at every quadrature point.
                let eval = move |p: Vec3| -> [[f64; 3]; 3] {
                    let ctx = EvalContext::ambient(p, 0.0);
                    let mut m = [[0.0; 3]; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            m[i][j] = entries[i][j].eval(&ctx);
                        }
                    }
                    m
                };
                let mut floor = f64::MAX;
                for ix in -4..=4 {
                    for iy in -4..=4 {
                        for iz in -4..=4 {
                            let p = [ix as f64 / 4.0, iy as f64 / 4.0, iz as f64 / 4.0];
                            let m = eval(p);
                            let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
                            let (eigs, _) = crate::linalg::dense::jacobi_eigen(&rows);
                            floor = floor.min(eigs[0]);
                        }
                    }
                }
                if floor <= 0.0 {
                    return Err(ScenarioError::Invalid(format!(
                        "coefficient entries sample a non-elliptic matrix (min eigenvalue {:.3e})",
                        floor
                    )));
                }
                Ok(CoefficientMatrixB::from_fn(eval, floor))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    /// Uniform random nodal values in [-amplitude, amplitude], then the
    /// mu-mean of every kernel class is removed.
    RandomZeroMean { amplitude: f64 },
    Expressions { values: BTreeMap<String, Expression> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Exact solution per component, in local coordinates.
    ClosedForm { u: BTreeMap<String, Expression> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vtk: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_market: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub structure: StructureSpec,
    pub problem: ProblemKind,
    #[serde(default)]
    pub b_matrix: BSpec,
    /// Per-component forcing expressions (component id as string key).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub f: BTreeMap<String, Expression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<InitialSpec>,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Canonical serialization (pretty JSON plus trailing newline); files
    /// stored in this form round-trip byte-identically.
    pub fn canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    fn component_expression<'a>(
        map: &'a BTreeMap<String, Expression>,
        comp: usize,
    ) -> Option<&'a Expression> {
        map.get(&comp.to_string())
    }

    fn validate_expressions(
        &self,
        n_components: usize,
    ) -> Result<(), ScenarioError> {
        for key in self.f.keys() {
            let id: usize = key
                .parse()
                .map_err(|_| ScenarioError::Invalid(format!("f key {:?} is not a component id", key)))?;
            if id >= n_components {
                return Err(ScenarioError::Invalid(format!(
                    "f references component {} of {}",
                    id, n_components
                )));
            }
        }
        if let Some(InitialSpec::Expressions { values }) = &self.u0 {
            for key in values.keys() {
                let id: usize = key.parse().map_err(|_| {
                    ScenarioError::Invalid(format!("u0 key {:?} is not a component id", key))
                })?;
                if id >= n_components {
                    return Err(ScenarioError::Invalid(format!(
                        "u0 references component {} of {}",
                        id, n_components
                    )));
                }
            }
        }
        if let Some(OracleSpec::ClosedForm { u }) = &self.oracle {
            for key in u.keys() {
                let id: usize = key.parse().map_err(|_| {
                    ScenarioError::Invalid(format!("oracle key {:?} is not a component id", key))
                })?;
                if id >= n_components {
                    return Err(ScenarioError::Invalid(format!(
                        "oracle references component {} of {}",
                        id, n_components
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    pub value: f64,
    pub passed: bool,
    pub requirement: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub name: String,
    pub problem: String,
    pub h: f64,
    pub n_dofs: usize,
    pub d: usize,
    pub metrics: BTreeMap<String, f64>,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
    pub outputs: Vec<String>,
}

fn eval_context(local: [f64; 2], t: f64) -> EvalContext {
    EvalContext {
        x: local[0],
        y: local[1],
        z: 0.0,
        r: (local[0] * local[0] + local[1] * local[1]).sqrt(),
        phi: local[1].atan2(local[0]),
        t,
    }
}

fn build_u0(
    mesh: &Mesh,
    mass: &crate::sparse::SparseMatrixSym,
    spec: &Option<InitialSpec>,
    seed: u64,
) -> Result<DiscreteField, ScenarioError> {
    match spec {
        None | Some(InitialSpec::Zero) => Ok(DiscreteField::zeros(mesh.n_dofs)),
        Some(InitialSpec::RandomZeroMean { amplitude }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u = DiscreteField(
                (0..mesh.n_dofs)
                    .map(|_| rng.gen_range(-amplitude..*amplitude))
                    .collect(),
            );
            let means = class_means(mesh, mass, &u);
            let cls = mesh.dof_classes();
            for (d, v) in u.0.iter_mut().enumerate() {
                *v -= means[cls[d]];
            }
            Ok(u)
        }
        Some(InitialSpec::Expressions { values }) => {
            let f = |comp: usize, local: [f64; 2], _pos: Vec3| -> f64 {
                match Scenario::component_expression(values, comp) {
                    Some(e) => e.eval(&eval_context(local, 0.0)),
                    None => 0.0,
                }
            };
            Ok(interpolate(mesh, &f)?)
        }
    }
}

/// Run the full pipeline for one scenario, writing any requested artifacts
/// under `out_dir`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<Summary, ScenarioError> {
    let components = scenario.structure.to_components();
    scenario.validate_expressions(components.len())?;
    let structure = validate_structure(components)?;

    let mut metrics: BTreeMap<String, f64> = BTreeMap::new();
    let mut outputs: Vec<String> = Vec::new();
    metrics.insert("n_components".into(), structure.components.len() as f64);
    metrics.insert("n_junctions".into(), structure.junctions.len() as f64);
    metrics.insert(
        "n_coupled_junctions".into(),
        structure.junctions.iter().filter(|j| j.coupled).count() as f64,
    );
    metrics.insert("total_measure".into(), structure.total_measure);

    let (n_dofs, d) = match scenario.problem {
        ProblemKind::Validate => {
            let classes = crate::geometry::coupling_classes(&structure);
            metrics.insert("d".into(), classes.d() as f64);
            (0usize, classes.d())
        }
        _ => {
            let mesh = build_mesh(&structure, scenario.h)?;
            let q = mesh_quality(&mesh);
            if let Some(a) = q.min_angle_deg {
                metrics.insert("min_angle_deg".into(), a);
            }
            metrics.insert("max_aspect".into(), q.max_aspect);
            metrics.insert("h_max".into(), q.h_max);
            metrics.insert("d".into(), mesh.classes.d() as f64);
            let d = mesh.classes.d();
            let n = mesh.n_dofs;
            run_meshed(scenario, &mesh, &mut metrics, &mut outputs, out_dir)?;
            (n, d)
        }
    };

    let mut assertions = Vec::new();
    let mut passed = true;
    for a in &scenario.assertions {
        let value = *metrics.get(&a.metric).unwrap_or(&f64::NAN);
        let tol = a.tolerance.unwrap_or(0.0);
        let mut ok = value.is_finite();
        let mut requirement = Vec::new();
        if let Some(max) = a.max {
            ok = ok && value <= max + tol;
            requirement.push(format!("<= {:e}", max));
        }
        if let Some(min) = a.min {
            ok = ok && value >= min - tol;
            requirement.push(format!(">= {:e}", min));
        }
        if let Some(eq) = a.equals {
            ok = ok && (value - eq).abs() <= tol;
            requirement.push(format!("== {:e} (tol {:e})", eq, tol));
        }
        passed = passed && ok;
        assertions.push(AssertionResult {
            metric: a.metric.clone(),
            value,
            passed: ok,
            requirement: requirement.join(" and "),
        });
    }

    Ok(Summary {
        name: scenario.name.clone(),
        problem: scenario.problem.name().to_string(),
        h: scenario.h,
        n_dofs,
        d,
        metrics,
        assertions,
        passed,
        outputs,
    })
}

fn run_meshed(
    scenario: &Scenario,
    mesh: &Mesh,
    metrics: &mut BTreeMap<String, f64>,
    outputs: &mut Vec<String>,
    out_dir: &Path,
) -> Result<(), ScenarioError> {
    let coefficient = scenario.b_matrix.build()?;
    let f_map = scenario.f.clone();
    let force = move |comp: usize, local: [f64; 2], _pos: Vec3, t: f64| -> f64 {
        match Scenario::component_expression(&f_map, comp) {
            Some(e) => e.eval(&eval_context(local, t)),
            None => 0.0,
        }
    };
    let force_time_dependent = scenario.f.values().any(|e| e.uses_time());
    let mass = assemble_mass(mesh);

    let out_path = |name: &str| -> PathBuf { out_dir.join(name) };
    let output = scenario.output.clone().unwrap_or_default();

    match scenario.problem {
        ProblemKind::Validate => unreachable!("handled by caller"),
        ProblemKind::Stationary => {
            let sol = solve_stationary(&StationaryProblem {
                mesh,
                coefficient: &coefficient,
                force: &force,
                tol: scenario.tol,
            })?;
            metrics.insert("iterations".into(), sol.report.iterations as f64);
            metrics.insert("final_residual".into(), sol.report.final_residual);
            let flux = boundary_flux(mesh, &coefficient, &sol.field);
            metrics.insert(
                "boundary_flux_max".into(),
                flux.iter().cloned().fold(0.0, f64::max),
            );
            let means = class_means(mesh, &sol.mass, &sol.field);
            metrics.insert(
                "class_mean_abs_max".into(),
                means.iter().map(|m| m.abs()).fold(0.0, f64::max),
            );
            if let Some(OracleSpec::ClosedForm { u }) = &scenario.oracle {
                let exact = |comp: usize, local: [f64; 2]| -> f64 {
                    match Scenario::component_expression(u, comp) {
                        Some(e) => e.eval(&eval_context(local, 0.0)),
                        None => 0.0,
                    }
                };
                metrics.insert(
                    "l2_error".into(),
                    l2_error_against(mesh, &sol.field, &exact),
                );
            }
            if let Some(name) = &output.vtk {
                let path = out_path(name);
                emit_vtk(mesh, &[("u", &sol.field)], &path)?;
                outputs.push(path.display().to_string());
            }
            if let Some(name) = &output.matrix_market {
                let path = out_path(name);
                let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
                sol.stiffness.write_matrix_market(&mut w)?;
                outputs.push(path.display().to_string());
            }
        }
        ProblemKind::Parabolic => {
            let dt = scenario
                .dt
                .ok_or_else(|| ScenarioError::Invalid("parabolic scenario needs dt".into()))?;
            let t_final = scenario.t_final.ok_or_else(|| {
                ScenarioError::Invalid("parabolic scenario needs t_final".into())
            })?;
            let theta = scenario.theta.unwrap_or(1.0);
            let stiffness = assemble_stiffness(mesh, &coefficient)?;
            let u0 = build_u0(mesh, &mass, &scenario.u0, scenario.seed)?;

            // With a compatible time-independent force the equilibrium is
            // the stationary solution shifted by the class means of u0.
            let target = if !force_time_dependent {
                let stat = solve_stationary(&StationaryProblem {
                    mesh,
                    coefficient: &coefficient,
                    force: &force,
                    tol: scenario.tol,
                });
                match stat {
                    Ok(sol) => {
                        let means = class_means(mesh, &mass, &u0);
                        let cls = mesh.dof_classes();
                        let mut star = sol.field;
                        for (dof, v) in star.0.iter_mut().enumerate() {
                            *v += means[cls[dof]];
                        }
                        Some(star)
                    }
                    Err(SolverError::IncompatibleData { .. }) => None,
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };

            let traj = run_parabolic_assembled(
                &ParabolicProblem {
                    mesh,
                    coefficient: &coefficient,
                    force: &force,
                    force_time_dependent,
                    u0,
                    t_final,
                    dt,
                    theta,
                    target: target.clone(),
                    snapshot_every: scenario.snapshot_every,
                },
                &mass,
                &stiffness,
            )?;

            metrics.insert("l2_final".into(), *traj.l2_norm.last().unwrap());
            metrics.insert("energy_final".into(), *traj.energy.last().unwrap());
            metrics.insert(
                "incompatible_forcing".into(),
                if traj.incompatible_forcing { 1.0 } else { 0.0 },
            );
            let series = if target.is_some() {
                &traj.dist_l2
            } else {
                &traj.l2_norm
            };
            let monotone = series.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
            metrics.insert("monotone_decay".into(), if monotone { 1.0 } else { 0.0 });
            if target.is_some() {
                metrics.insert("dist_l2_initial".into(), traj.dist_l2[0]);
                metrics.insert("dist_l2_final".into(), *traj.dist_l2.last().unwrap());
                metrics.insert("dist_h1_final".into(), *traj.dist_h1.last().unwrap());
            }
            if let Some(rate) = traj.fitted_decay_rate(1e-5, 1e-2) {
                metrics.insert("measured_rate".into(), rate);
            }
            // spectral gap of the pencil for the decay-rate comparison
            let pairs = smallest_eigenpairs(&stiffness, &mass, mesh.classes.d() + 1, 1e-8)?;
            let lambda2 = pairs[mesh.classes.d()].value;
            metrics.insert("lambda2".into(), lambda2);
            if let Some(rate) = metrics.get("measured_rate").copied() {
                metrics.insert("rate_rel_err".into(), (rate - lambda2).abs() / lambda2);
            }
            if let Some(name) = &output.csv {
                let path = out_path(name);
                let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
                traj.write_csv(&mut w)?;
                outputs.push(path.display().to_string());
            }
            if let Some(name) = &output.vtk {
                let path = out_path(name);
                emit_vtk(mesh, &[("u", &traj.final_field)], &path)?;
                outputs.push(path.display().to_string());
                // snapshot series next to the final field
                let stem = name.strip_suffix(".vtk").unwrap_or(name);
                for (step, field) in &traj.snapshots {
                    let spath = out_path(&format!("{}_{:06}.vtk", stem, step));
                    emit_vtk(mesh, &[("u", field)], &spath)?;
                    outputs.push(spath.display().to_string());
                }
            }
        }
        ProblemKind::Poincare => {
            let stiffness = assemble_stiffness(mesh, &coefficient)?;
            let consts = poincare_constants(mesh, &stiffness, &mass, 1e-9)?;
            for c in &consts {
                metrics.insert(format!("c_{}", c.class), c.constant);
                metrics.insert(format!("lambda2_{}", c.class), c.lambda2);
                metrics.insert(format!("residual_{}", c.class), c.residual);
            }
            if let Some(name) = &output.csv {
                let path = out_path(name);
                let mut w = String::from("class,poincare_constant,lambda2,residual\n");
                for c in &consts {
                    w.push_str(&format!(
                        "{},{:.16e},{:.16e},{:.16e}\n",
                        c.class, c.constant, c.lambda2, c.residual
                    ));
                }
                fs::write(&path, w)?;
                outputs.push(path.display().to_string());
            }
        }
        ProblemKind::Spectrum => {
            let stiffness = assemble_stiffness(mesh, &coefficient)?;
            let count = scenario.eigen_count.unwrap_or(6).min(mesh.n_dofs);
            let pairs = smallest_eigenpairs(&stiffness, &mass, count, 1e-8)?;
            for (i, p) in pairs.iter().enumerate() {
                metrics.insert(format!("lambda_{}", i), p.value);
            }
            if let Some(name) = &output.csv {
                let path = out_path(name);
                let mut w = String::from("index,lambda,residual\n");
                for (i, p) in pairs.iter().enumerate() {
                    w.push_str(&format!("{},{:.16e},{:.16e}\n", i, p.value, p.residual));
                }
                fs::write(&path, w)?;
                outputs.push(path.display().to_string());
            }
            if let Some(name) = &output.vtk {
                let path = out_path(name);
                let fields: Vec<(String, DiscreteField)> = pairs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (format!("mode_{}", i), DiscreteField(p.vector.clone())))
                    .collect();
                let refs: Vec<(&str, &DiscreteField)> = fields
                    .iter()
                    .map(|(n, f)| (n.as_str(), f))
                    .collect();
                emit_vtk(mesh, &refs, &path)?;
                outputs.push(path.display().to_string());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crossing_segments_scenario() -> Scenario {
        serde_json::from_value(serde_json::json!({
            "name": "test_crossing_segments",
            "structure": {"components": [
                {"kind": "segment", "p0": [-1.0, 0.0, 0.0], "p1": [1.0, 0.0, 0.0]},
                {"kind": "segment", "p0": [0.0, -1.0, 0.0], "p1": [0.0, 1.0, 0.0]}
            ]},
            "problem": "stationary",
            "f": {"0": "x", "1": "0"},
            "h": 0.03125,
            "oracle": {"kind": "closed_form", "u": {"0": "-x^3/6 + x/2", "1": "0"}},
            "assertions": [{"metric": "l2_error", "max": 5e-4}]
        }))
        .unwrap()
    }

    #[test]
    fn stationary_scenario_passes_its_assertions() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_scenario(&crossing_segments_scenario(), dir.path()).unwrap();
        assert!(summary.passed, "{:?}", summary.assertions);
        assert!(summary.metrics["l2_error"] < 5e-4);
        assert_eq!(summary.d, 1);
    }

    #[test]
    fn canonical_json_roundtrips() {
        let s = crossing_segments_scenario();
        let text = s.canonical_json();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!(text, back.canonical_json());
    }

    #[test]
    fn validate_problem_reports_counts() {
        let s: Scenario = serde_json::from_value(serde_json::json!({
            "name": "v",
            "structure": {"components": [
                {"kind": "disc", "center": [0.0,0.0,0.0], "radius": 1.0,
                 "frame": [[1.0,0.0,0.0],[0.0,1.0,0.0]]},
                {"kind": "segment", "p0": [0.0,0.0,-1.0], "p1": [0.0,0.0,1.0]}
            ]},
            "problem": "validate",
            "h": 0.1
        }))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_scenario(&s, dir.path()).unwrap();
        assert_eq!(summary.metrics["d"], 2.0);
        assert_eq!(summary.metrics["n_junctions"], 1.0);
        assert_eq!(summary.metrics["n_coupled_junctions"], 0.0);
    }

    #[test]
    fn unknown_component_reference_is_rejected() {
        let mut s = crossing_segments_scenario();
        s.f.insert("7".into(), Expression::parse("x").unwrap());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_scenario(&s, dir.path()),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn parabolic_snapshots_form_a_vtk_series() {
        let s: Scenario = serde_json::from_value(serde_json::json!({
            "name": "snaps",
            "structure": {"components": [
                {"kind": "segment", "p0": [-1.0, 0.0, 0.0], "p1": [1.0, 0.0, 0.0]},
                {"kind": "segment", "p0": [0.0, -1.0, 0.0], "p1": [0.0, 1.0, 0.0]}
            ]},
            "problem": "parabolic",
            "u0": {"kind": "random_zero_mean", "amplitude": 1.0},
            "h": 0.25,
            "dt": 0.05,
            "t_final": 0.2,
            "theta": 1.0,
            "snapshot_every": 2,
            "output": {"vtk": "snaps.vtk"}
        }))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        run_scenario(&s, dir.path()).unwrap();
        assert!(dir.path().join("snaps.vtk").exists());
        for step in [0, 2, 4] {
            assert!(
                dir.path().join(format!("snaps_{:06}.vtk", step)).exists(),
                "missing snapshot {}",
                step
            );
        }
    }

    #[test]
    fn parabolic_scenario_emits_deterministic_csv() {
        let s: Scenario = serde_json::from_value(serde_json::json!({
            "name": "p",
            "structure": {"components": [
                {"kind": "segment", "p0": [-1.0, 0.0, 0.0], "p1": [1.0, 0.0, 0.0]},
                {"kind": "segment", "p0": [0.0, -1.0, 0.0], "p1": [0.0, 1.0, 0.0]}
            ]},
            "problem": "parabolic",
            "u0": {"kind": "random_zero_mean", "amplitude": 1.0},
            "h": 0.125,
            "dt": 0.01,
            "t_final": 0.3,
            "theta": 1.0,
            "seed": 7,
            "output": {"csv": "traj.csv"}
        }))
        .unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let sum_a = run_scenario(&s, dir_a.path()).unwrap();
        let sum_b = run_scenario(&s, dir_b.path()).unwrap();
        let csv_a = fs::read(dir_a.path().join("traj.csv")).unwrap();
        let csv_b = fs::read(dir_b.path().join("traj.csv")).unwrap();
        assert!(!csv_a.is_empty());
        assert_eq!(csv_a, csv_b);
        assert_eq!(sum_a.metrics["monotone_decay"], 1.0);
        assert_eq!(sum_b.metrics["monotone_decay"], 1.0);
        let header = String::from_utf8(csv_a.clone()).unwrap();
        assert!(header.starts_with("time,l2_norm,energy,dist_l2,dist_h1,class_mean_0"));
    }
}
