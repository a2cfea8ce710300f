//! Stationary heat solves with kernel deflation, theta-scheme time
//! stepping for the weak parabolic problem, per-class Poincare constants,
//! and the diagnostic quantities driving the decay analysis (energy,
//! distance to equilibrium, class means).

use std::io::{self, Write};

use thiserror::Error;

use crate::assembly::{
    assemble_load, assemble_mass, assemble_stiffness, class_means, AssemblyError,
    CoefficientMatrixB,
};
use crate::linalg::{cg_solve, smallest_eigenpairs, Deflation, InnerProduct, LinalgError, SolveReport};
use crate::meshing::{DiscreteField, Element, Mesh};
use crate::sparse::SparseMatrixSym;
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("force term has nonzero mean {mean:.3e} on kernel class {class} (relative {relative:.3e})")]
    IncompatibleData {
        class: usize,
        mean: f64,
        relative: f64,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Scalar data sampled in component-local coordinates plus ambient position
/// and time.
pub type SpaceTimeFn<'a> = &'a (dyn Fn(usize, [f64; 2], Vec3, f64) -> f64 + 'a);

pub struct StationaryProblem<'a> {
    pub mesh: &'a Mesh,
    pub coefficient: &'a CoefficientMatrixB,
    pub force: SpaceTimeFn<'a>,
    /// Relative CG tolerance (1e-10 unless a caller tightens it).
    pub tol: f64,
}

pub struct StationarySolution {
    /// Zero mean on every kernel class.
    pub field: DiscreteField,
    pub report: SolveReport,
    pub mass: SparseMatrixSym,
    pub stiffness: SparseMatrixSym,
}

fn kernel_deflation(mesh: &Mesh) -> Deflation<'static> {
    let vecs: Vec<Vec<f64>> = (0..mesh.classes.d())
        .map(|k| mesh.class_indicator(k).0)
        .collect();
    Deflation::new(&vecs, InnerProduct::Euclidean)
}

/// Solve the stationary heat balance K u = load with the natural (weak)
/// Neumann condition, returning the zero-class-mean representative.
pub fn solve_stationary(p: &StationaryProblem) -> Result<StationarySolution, SolverError> {
    let mesh = p.mesh;
    let mass = assemble_mass(mesh);
    let stiffness = assemble_stiffness(mesh, p.coefficient)?;
    let load = assemble_load(mesh, p.force, 0.0);

    // Compatibility: zero mu-mean of f on every kernel class. The discrete
    // class mean carries the O(h^2) quadrature consistency error of the
    // load, so the gate cannot be tighter than that; genuinely incompatible
    // data shows up at O(1).
    let b_norm = crate::sparse::norm2(&load.0);
    let gate = 1e-8f64.max(mesh.h * mesh.h);
    if b_norm > 1e-300 {
        let cls = mesh.dof_classes();
        for k in 0..mesh.classes.d() {
            let chi = mesh.class_indicator(k);
            let mean: f64 = load.0.iter().zip(&chi.0).map(|(a, b)| a * b).sum();
            let nk = cls.iter().filter(|&&c| c == k).count() as f64;
            let relative = mean.abs() / (b_norm * nk.sqrt());
            if relative > gate {
                return Err(SolverError::IncompatibleData {
                    class: k,
                    mean,
                    relative,
                });
            }
        }
    }

    let deflation = kernel_deflation(mesh);
    let (x, report) = cg_solve(&stiffness, &load.0, p.tol, Some(&deflation), false)?;
    let mut field = DiscreteField(x);
    // normalize to zero mu-mean per class
    let means = class_means(mesh, &mass, &field);
    let cls = mesh.dof_classes();
    for (d, v) in field.0.iter_mut().enumerate() {
        *v -= means[cls[d]];
    }
    Ok(StationarySolution {
        field,
        report,
        mass,
        stiffness,
    })
}

/// Dirichlet energy u^T K u.
pub fn energy(stiffness: &SparseMatrixSym, u: &DiscreteField) -> f64 {
    stiffness.quadratic_form(&u.0)
}

/// L2_mu distance between a discrete field and a per-component exact
/// function of the local coordinates, by elementwise quadrature exact well
/// beyond P1 (4-point Gauss on segments, a degree-3 rule on triangles).
pub fn l2_error_against(
    mesh: &Mesh,
    u: &DiscreteField,
    exact: &dyn Fn(usize, [f64; 2]) -> f64,
) -> f64 {
    let gl_x = [
        -0.8611363115940526,
        -0.3399810435848563,
        0.3399810435848563,
        0.8611363115940526,
    ];
    let gl_w = [
        0.3478548451374538,
        0.6521451548625461,
        0.6521451548625461,
        0.3478548451374538,
    ];
    let mut acc = 0.0;
    for (c, comp) in mesh.components.iter().enumerate() {
        for el in &comp.elements {
            match el {
                Element::Line([a, b]) => {
                    let (la, lb) = (comp.local[*a][0], comp.local[*b][0]);
                    let l = (lb - la).abs();
                    let (ua, ub) = (u.0[mesh.dof[c][*a]], u.0[mesh.dof[c][*b]]);
                    for (x, w) in gl_x.iter().zip(gl_w) {
                        let pa = 0.5 * (1.0 - x);
                        let pb = 0.5 * (1.0 + x);
                        let s = pa * la + pb * lb;
                        let diff = pa * ua + pb * ub - exact(comp.component_id, [s, 0.0]);
                        acc += 0.5 * l * w * diff * diff;
                    }
                }
                Element::Tri([a, b, c_]) => {
                    let pts = [comp.local[*a], comp.local[*b], comp.local[*c_]];
                    let vals = [
                        u.0[mesh.dof[c][*a]],
                        u.0[mesh.dof[c][*b]],
                        u.0[mesh.dof[c][*c_]],
                    ];
                    let area = 0.5
                        * ((pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1])
                            - (pts[1][1] - pts[0][1]) * (pts[2][0] - pts[0][0]));
                    for qp in [
                        [0.6, 0.2, 0.2],
                        [0.2, 0.6, 0.2],
                        [0.2, 0.2, 0.6],
                        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                    ] {
                        let w = if qp[0] == qp[1] && qp[1] == qp[2] {
                            -27.0 / 48.0
                        } else {
                            25.0 / 48.0
                        };
                        let mut local = [0.0, 0.0];
                        let mut uh = 0.0;
                        for (lam, (p, v)) in qp.iter().zip(pts.iter().zip(vals)) {
                            local[0] += lam * p[0];
                            local[1] += lam * p[1];
                            uh += lam * v;
                        }
                        let diff = uh - exact(comp.component_id, local);
                        acc += area * w * diff * diff;
                    }
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}

pub fn m_norm(mass: &SparseMatrixSym, u: &[f64]) -> f64 {
    mass.quadratic_form(u).max(0.0).sqrt()
}

/// One-parameter implicit time discretization of u' + M^-1 K u = M^-1 load:
/// (M + theta dt K) u_next = (M - (1-theta) dt K) u_n
///                           + dt (theta load_next + (1-theta) load_n).
pub struct ThetaStepper<'a> {
    mesh: &'a Mesh,
    mass: &'a SparseMatrixSym,
    stiffness: &'a SparseMatrixSym,
    pub dt: f64,
    pub theta: f64,
    lhs: SparseMatrixSym,
    rhs_mat: SparseMatrixSym,
    class_mass: Vec<f64>,
    dof_classes: Vec<usize>,
    tol: f64,
}

impl<'a> ThetaStepper<'a> {
    pub fn new(
        mesh: &'a Mesh,
        mass: &'a SparseMatrixSym,
        stiffness: &'a SparseMatrixSym,
        dt: f64,
        theta: f64,
    ) -> Self {
        assert!(dt > 0.0, "dt must be positive");
        assert!(
            (0.5..=1.0).contains(&theta),
            "theta restricted to the unconditionally stable range [1/2, 1]"
        );
        let lhs = mass.add_scaled(stiffness, theta * dt);
        let rhs_mat = mass.add_scaled(stiffness, -(1.0 - theta) * dt);
        let dof_classes = mesh.dof_classes();
        let mut class_mass = vec![0.0; mesh.classes.d()];
        let m_ones = mass.matvec(&vec![1.0; mesh.n_dofs]);
        for (d, &c) in dof_classes.iter().enumerate() {
            class_mass[c] += m_ones[d];
        }
        ThetaStepper {
            mesh,
            mass,
            stiffness,
            dt,
            theta,
            lhs,
            rhs_mat,
            class_mass,
            dof_classes,
            tol: 1e-12,
        }
    }

    pub fn step(
        &self,
        u: &DiscreteField,
        load_n: &DiscreteField,
        load_next: &DiscreteField,
    ) -> Result<DiscreteField, SolverError> {
        let mut rhs = self.rhs_mat.matvec(&u.0);
        for i in 0..rhs.len() {
            rhs[i] += self.dt
                * (self.theta * load_next.0[i] + (1.0 - self.theta) * load_n.0[i]);
        }
        let (x, _report) = cg_solve(&self.lhs, &rhs, self.tol, None, false)?;
        let mut next = DiscreteField(x);

        // The exact step conserves class means up to the forcing
        // contribution (chi^T K = 0); pin them to remove solver noise.
        let d = self.class_mass.len();
        let mu = self.mass.matvec(&u.0);
        let mnext = self.mass.matvec(&next.0);
        let mut target = vec![0.0; d];
        let mut actual = vec![0.0; d];
        for (i, &c) in self.dof_classes.iter().enumerate() {
            let forcing =
                self.dt * (self.theta * load_next.0[i] + (1.0 - self.theta) * load_n.0[i]);
            target[c] += mu[i] + forcing;
            actual[c] += mnext[i];
        }
        for (i, &c) in self.dof_classes.iter().enumerate() {
            next.0[i] += (target[c] - actual[c]) / self.class_mass[c];
        }
        Ok(next)
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn stiffness(&self) -> &SparseMatrixSym {
        self.stiffness
    }
}

/// Single theta step as a free operation.
#[allow(clippy::too_many_arguments)]
pub fn step_theta(
    mesh: &Mesh,
    mass: &SparseMatrixSym,
    stiffness: &SparseMatrixSym,
    u_n: &DiscreteField,
    load_n: &DiscreteField,
    load_next: &DiscreteField,
    dt: f64,
    theta: f64,
) -> Result<DiscreteField, SolverError> {
    ThetaStepper::new(mesh, mass, stiffness, dt, theta).step(u_n, load_n, load_next)
}

pub struct ParabolicProblem<'a> {
    pub mesh: &'a Mesh,
    pub coefficient: &'a CoefficientMatrixB,
    pub force: SpaceTimeFn<'a>,
    /// Set when `force` depends on t; constant forces are assembled once.
    pub force_time_dependent: bool,
    pub u0: DiscreteField,
    pub t_final: f64,
    pub dt: f64,
    pub theta: f64,
    /// Stationary target u* for distance diagnostics.
    pub target: Option<DiscreteField>,
    /// Record a full field snapshot every k steps (0-th step included).
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub l2_norm: Vec<f64>,
    pub energy: Vec<f64>,
    /// Per-time mu-means over each kernel class.
    pub class_means: Vec<Vec<f64>>,
    /// Distances to the target in the L2_mu and H1_mu norms (NaN without a
    /// target).
    pub dist_l2: Vec<f64>,
    pub dist_h1: Vec<f64>,
    pub snapshots: Vec<(usize, DiscreteField)>,
    /// Set when the forcing has a nonzero class mean (class means of the
    /// solution then drift linearly; they are reported, not suppressed).
    pub incompatible_forcing: bool,
    pub final_field: DiscreteField,
}

impl Trajectory {
    /// CSV with the header
    /// `time,l2_norm,energy,dist_l2,dist_h1,class_mean_0..`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let d = self.class_means.first().map_or(0, |m| m.len());
        write!(w, "time,l2_norm,energy,dist_l2,dist_h1")?;
        for k in 0..d {
            write!(w, ",class_mean_{}", k)?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            write!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.l2_norm[i], self.energy[i], self.dist_l2[i], self.dist_h1[i]
            )?;
            for k in 0..d {
                write!(w, ",{:.16e}", self.class_means[i][k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Least-squares exponential decay rate of dist_l2 (falling back to
    /// l2_norm without a target), fitted over samples whose value lies in
    /// [lo, hi] relative to the first sample.
    pub fn fitted_decay_rate(&self, lo: f64, hi: f64) -> Option<f64> {
        let series = if self.dist_l2[0].is_nan() {
            &self.l2_norm
        } else {
            &self.dist_l2
        };
        let v0 = series[0];
        if !(v0 > 0.0) {
            return None;
        }
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(series)
            .filter(|(_, &v)| v > lo * v0 && v < hi * v0)
            .map(|(&t, &v)| (t, v.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        Some(-slope)
    }
}

/// Run the theta scheme from u0 to t_final, recording diagnostics at every
/// step (including the initial state).
pub fn run_parabolic(p: &ParabolicProblem<'_>) -> Result<Trajectory, SolverError> {
    let mesh = p.mesh;
    let mass = assemble_mass(mesh);
    let stiffness = assemble_stiffness(mesh, p.coefficient)?;
    run_parabolic_assembled(p, &mass, &stiffness)
}

pub fn run_parabolic_assembled(
    p: &ParabolicProblem<'_>,
    mass: &SparseMatrixSym,
    stiffness: &SparseMatrixSym,
) -> Result<Trajectory, SolverError> {
    let mesh = p.mesh;
    let stepper = ThetaStepper::new(mesh, mass, stiffness, p.dt, p.theta);
    let n_steps = (p.t_final / p.dt).round().max(1.0) as usize;
    let d = mesh.classes.d();

    let mut load_n = assemble_load(mesh, p.force, 0.0);
    // forcing compatibility (warned, not enforced)
    let mut incompatible = false;
    {
        let total: f64 = load_n.0.iter().map(|v| v.abs()).sum();
        for k in 0..d {
            let chi = mesh.class_indicator(k);
            let mean: f64 = load_n.0.iter().zip(&chi.0).map(|(a, b)| a * b).sum();
            if mean.abs() > 1e-8 * total.max(1e-300) {
                incompatible = true;
            }
        }
    }

    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        l2_norm: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        class_means: Vec::with_capacity(n_steps + 1),
        dist_l2: Vec::with_capacity(n_steps + 1),
        dist_h1: Vec::with_capacity(n_steps + 1),
        snapshots: Vec::new(),
        incompatible_forcing: incompatible,
        final_field: DiscreteField::zeros(mesh.n_dofs),
    };
    let h1_mat = mass.add_scaled(stiffness, 1.0);

    let mut u = p.u0.clone();
    let record = |traj: &mut Trajectory, step: usize, u: &DiscreteField| {
        let t = step as f64 * p.dt;
        traj.times.push(t);
        traj.l2_norm.push(m_norm(mass, &u.0));
        traj.energy.push(stiffness.quadratic_form(&u.0));
        traj.class_means.push(class_means(mesh, mass, u));
        match &p.target {
            Some(star) => {
                let diff: Vec<f64> = u.0.iter().zip(&star.0).map(|(a, b)| a - b).collect();
                traj.dist_l2.push(m_norm(mass, &diff));
                traj.dist_h1.push(h1_mat.quadratic_form(&diff).max(0.0).sqrt());
            }
            None => {
                traj.dist_l2.push(f64::NAN);
                traj.dist_h1.push(f64::NAN);
            }
        }
    };
    record(&mut traj, 0, &u);
    if let Some(k) = p.snapshot_every {
        if k > 0 {
            traj.snapshots.push((0, u.clone()));
        }
    }

    for step in 1..=n_steps {
        let t_next = step as f64 * p.dt;
        let load_next = if p.force_time_dependent {
            assemble_load(mesh, p.force, t_next)
        } else {
            load_n.clone()
        };
        u = stepper.step(&u, &load_n, &load_next)?;
        record(&mut traj, step, &u);
        if let Some(k) = p.snapshot_every {
            if k > 0 && step % k == 0 {
                traj.snapshots.push((step, u.clone()));
            }
        }
        load_n = load_next;
    }
    traj.final_field = u;
    Ok(traj)
}

/// ||P^(a+b) u0 - P^a (P^b u0)||_M for the one-step propagator P of the
/// homogeneous theta scheme.
#[allow(clippy::too_many_arguments)]
pub fn propagator_composition_check(
    mesh: &Mesh,
    mass: &SparseMatrixSym,
    stiffness: &SparseMatrixSym,
    dt: f64,
    theta: f64,
    steps_a: usize,
    steps_b: usize,
    u0: &DiscreteField,
) -> Result<f64, SolverError> {
    let stepper = ThetaStepper::new(mesh, mass, stiffness, dt, theta);
    let zero = DiscreteField::zeros(mesh.n_dofs);
    let mut joint = u0.clone();
    for _ in 0..steps_a + steps_b {
        joint = stepper.step(&joint, &zero, &zero)?;
    }
    let mut split = u0.clone();
    for _ in 0..steps_b {
        split = stepper.step(&split, &zero, &zero)?;
    }
    for _ in 0..steps_a {
        split = stepper.step(&split, &zero, &zero)?;
    }
    let diff: Vec<f64> = joint.0.iter().zip(&split.0).map(|(a, b)| a - b).collect();
    Ok(m_norm(mass, &diff))
}

#[derive(Debug, Clone)]
pub struct PoincareConstant {
    pub class: usize,
    /// C_k = 1 / lambda_2 of the class-restricted pencil.
    pub constant: f64,
    pub lambda2: f64,
    /// Relative eigen residual reported by the iteration.
    pub residual: f64,
}

/// Per-class Poincare constants C_k = 1/lambda_2(K_k, M_k) over the DOFs of
/// each kernel class.
pub fn poincare_constants(
    mesh: &Mesh,
    stiffness: &SparseMatrixSym,
    mass: &SparseMatrixSym,
    tol: f64,
) -> Result<Vec<PoincareConstant>, SolverError> {
    let cls = mesh.dof_classes();
    let mut out = Vec::with_capacity(mesh.classes.d());
    for k in 0..mesh.classes.d() {
        let keep: Vec<bool> = cls.iter().map(|&c| c == k).collect();
        let (kk, _) = stiffness.restrict(&keep);
        let (mk, _) = mass.restrict(&keep);
        let pairs = smallest_eigenpairs(&kk, &mk, 2, tol)?;
        let lambda2 = pairs[1].value;
        out.push(PoincareConstant {
            class: k,
            constant: 1.0 / lambda2,
            lambda2,
            residual: pairs[1].residual,
        });
    }
    Ok(out)
}

/// Maximum boundary flux magnitude |(B grad u) . n| per component: the
/// a-posteriori check of the natural Neumann condition (O(h) for weak
/// solutions).
pub fn boundary_flux(mesh: &Mesh, b: &CoefficientMatrixB, u: &DiscreteField) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.components.len());
    for (c, comp) in mesh.components.iter().enumerate() {
        let shape = mesh.structure.component(comp.component_id);
        let mut worst: f64 = 0.0;
        match &shape.kind {
            crate::geometry::ShapeKind::Segment { p0, p1 } => {
                let tangent = vec3::normalize(vec3::sub(*p1, *p0));
                for &end in &comp.boundary_nodes {
                    // element adjacent to the endpoint
                    let el = comp
                        .elements
                        .iter()
                        .find_map(|e| match e {
                            Element::Line([a, b2]) if *a == end || *b2 == end => Some((*a, *b2)),
                            _ => None,
                        })
                        .expect("boundary node without element");
                    let (a, b2) = el;
                    let l = comp.local[b2][0] - comp.local[a][0];
                    let du = (u.0[mesh.dof[c][b2]] - u.0[mesh.dof[c][a]]) / l;
                    let coeff = if b.is_identity() {
                        1.0
                    } else {
                        let mid = vec3::scale(
                            vec3::add(comp.nodes_r3[a], comp.nodes_r3[b2]),
                            0.5,
                        );
                        let bm = b.evaluate(mid);
                        let mut acc = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                acc += tangent[i] * bm[i][j] * tangent[j];
                            }
                        }
                        acc
                    };
                    worst = worst.max((coeff * du).abs());
                }
            }
            crate::geometry::ShapeKind::Disc { frame, .. } => {
                let on_boundary: std::collections::BTreeSet<usize> =
                    comp.boundary_nodes.iter().copied().collect();
                for el in &comp.elements {
                    let [i, j, k] = match el {
                        Element::Tri(t) => *t,
                        _ => unreachable!(),
                    };
                    let verts = [i, j, k];
                    for e in 0..3 {
                        let (a, b2) = (verts[e], verts[(e + 1) % 3]);
                        if !(on_boundary.contains(&a) && on_boundary.contains(&b2)) {
                            continue;
                        }
                        let opp = verts[(e + 2) % 3];
                        let (pa, pb, pc) = (comp.local[a], comp.local[b2], comp.local[opp]);
                        let area = 0.5
                            * ((pb[0] - pa[0]) * (pc[1] - pa[1])
                                - (pb[1] - pa[1]) * (pc[0] - pa[0]));
                        if area.abs() < 1e-300 {
                            continue;
                        }
                        // P1 gradient on the triangle
                        let vals = [
                            u.0[mesh.dof[c][a]],
                            u.0[mesh.dof[c][b2]],
                            u.0[mesh.dof[c][opp]],
                        ];
                        let pts = [pa, pb, pc];
                        let mut grad = [0.0f64; 2];
                        for v in 0..3 {
                            let (p1, p2) = (pts[(v + 1) % 3], pts[(v + 2) % 3]);
                            grad[0] += vals[v] * (p1[1] - p2[1]) / (2.0 * area);
                            grad[1] += vals[v] * (p2[0] - p1[0]) / (2.0 * area);
                        }
                        // outward normal of the boundary edge
                        let edge = [pb[0] - pa[0], pb[1] - pa[1]];
                        let len = (edge[0] * edge[0] + edge[1] * edge[1]).sqrt();
                        let mut n2 = [edge[1] / len, -edge[0] / len];
                        let centroid = [
                            (pa[0] + pb[0] + pc[0]) / 3.0,
                            (pa[1] + pb[1] + pc[1]) / 3.0,
                        ];
                        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                        if (mid[0] - centroid[0]) * n2[0] + (mid[1] - centroid[1]) * n2[1] < 0.0 {
                            n2 = [-n2[0], -n2[1]];
                        }
                        let flux = if b.is_identity() {
                            grad[0] * n2[0] + grad[1] * n2[1]
                        } else {
                            let mid3 = vec3::scale(
                                vec3::add(comp.nodes_r3[a], comp.nodes_r3[b2]),
                                0.5,
                            );
                            let bm = b.evaluate(mid3);
                            // tangential coefficient applied to the frame
                            // representation of grad and n
                            let mut local = [[0.0f64; 2]; 2];
                            for (ii, ei) in frame.iter().enumerate() {
                                for (jj, ej) in frame.iter().enumerate() {
                                    let mut acc = 0.0;
                                    for a3 in 0..3 {
                                        for b3 in 0..3 {
                                            acc += ei[a3] * bm[a3][b3] * ej[b3];
                                        }
                                    }
                                    local[ii][jj] = acc;
                                }
                            }
                            (local[0][0] * grad[0] + local[0][1] * grad[1]) * n2[0]
                                + (local[1][0] * grad[0] + local[1][1] * grad[1]) * n2[1]
                        };
                        worst = worst.max(flux.abs());
                    }
                }
            }
        }
        out.push(worst);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate_structure, ComponentShape};
    use crate::meshing::{build_mesh, interpolate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crossing_segments(h: f64) -> Mesh {
        let s = validate_structure(vec![
            ComponentShape::segment(0, [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ComponentShape::segment(1, [0.0, -1.0, 0.0], [0.0, 1.0, 0.0]),
        ])
        .unwrap();
        build_mesh(&s, h).unwrap()
    }

    fn interval_mesh(h: f64) -> Mesh {
        let s = validate_structure(vec![ComponentShape::segment(
            0,
            [-1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        )])
        .unwrap();
        build_mesh(&s, h).unwrap()
    }

    fn forcing_example_51(comp: usize, local: [f64; 2], _p: Vec3, _t: f64) -> f64 {
        if comp == 0 {
            local[0]
        } else {
            0.0
        }
    }

    fn exact_example_51(comp: usize, x: f64) -> f64 {
        if comp == 0 {
            -x * x * x / 6.0 + x / 2.0
        } else {
            0.0
        }
    }

    use super::l2_error_against as l2_error;

    #[test]
    fn stationary_crossing_segments_matches_closed_form() {
        let mesh = crossing_segments(2.0 / 64.0);
        let b = CoefficientMatrixB::identity();
        let sol = solve_stationary(&StationaryProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &forcing_example_51,
            tol: 1e-12,
        })
        .unwrap();
        let err = l2_error(&mesh, &sol.field, &|c, l| exact_example_51(c, l[0]));
        assert!(err < 5e-4, "L2 error {}", err);
        // zero class mean
        let means = class_means(&mesh, &sol.mass, &sol.field);
        assert!(means[0].abs() < 1e-12);
        // natural boundary condition O(h)
        let flux = boundary_flux(&mesh, &b, &sol.field);
        assert!(flux[0] < 0.05, "endpoint flux {}", flux[0]);
    }

    #[test]
    fn stationary_zero_force_is_zero() {
        let mesh = crossing_segments(0.125);
        let b = CoefficientMatrixB::identity();
        let sol = solve_stationary(&StationaryProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &|_, _, _, _| 0.0,
            tol: 1e-12,
        })
        .unwrap();
        assert!(sol.field.0.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn stationary_rejects_incompatible_force() {
        let mesh = crossing_segments(0.125);
        let b = CoefficientMatrixB::identity();
        let err = solve_stationary(&StationaryProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &|_, _, _, _| 1.0,
            tol: 1e-10,
        });
        assert!(matches!(err, Err(SolverError::IncompatibleData { .. })));
    }

    #[test]
    fn stationary_agrees_with_dense_oracle() {
        let mesh = crossing_segments(2.0 / 32.0);
        let b = CoefficientMatrixB::identity();
        let sol = solve_stationary(&StationaryProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &forcing_example_51,
            tol: 1e-12,
        })
        .unwrap();
        let load = assemble_load(&mesh, &forcing_example_51, 0.0);
        let kernel: Vec<Vec<f64>> = (0..mesh.classes.d())
            .map(|k| mesh.class_indicator(k).0)
            .collect();
        let dense = crate::linalg::dense::solve_psd_with_kernel(
            &sol.stiffness.to_dense(),
            &load.0,
            &kernel,
        )
        .unwrap();
        // compare after class-mean normalization
        let mut dense_field = DiscreteField(dense);
        let means = class_means(&mesh, &sol.mass, &dense_field);
        let cls = mesh.dof_classes();
        for (d, v) in dense_field.0.iter_mut().enumerate() {
            *v -= means[cls[d]];
        }
        for (a, b) in sol.field.0.iter().zip(&dense_field.0) {
            assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }

    #[test]
    fn theta_step_is_spectral_on_eigenvectors() {
        let mesh = interval_mesh(2.0 / 32.0);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let pairs = smallest_eigenpairs(&stiffness, &mass, 3, 1e-10).unwrap();
        let (lambda, v) = (pairs[1].value, pairs[1].vector.clone());
        let dt = 0.05;
        let u = DiscreteField(v.clone());
        let zero = DiscreteField::zeros(mesh.n_dofs);
        let next = step_theta(&mesh, &mass, &stiffness, &u, &zero, &zero, dt, 1.0).unwrap();
        let factor = 1.0 / (1.0 + dt * lambda);
        for (a, b) in next.0.iter().zip(&v) {
            assert!((a - factor * b).abs() < 1e-7, "{} vs {}", a, factor * b);
        }
    }

    #[test]
    fn theta_step_contracts_and_conserves_means() {
        let mesh = crossing_segments(0.125);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0 = DiscreteField(
            (0..mesh.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let zero = DiscreteField::zeros(mesh.n_dofs);
        for theta in [0.5, 0.75, 1.0] {
            let u1 =
                step_theta(&mesh, &mass, &stiffness, &u0, &zero, &zero, 0.02, theta).unwrap();
            assert!(m_norm(&mass, &u1.0) <= m_norm(&mass, &u0.0) * (1.0 + 1e-12));
            let m0 = class_means(&mesh, &mass, &u0);
            let m1 = class_means(&mesh, &mass, &u1);
            for (a, b) in m0.iter().zip(&m1) {
                assert!((a - b).abs() <= 1e-12, "mean drift {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn implicit_euler_energy_identity() {
        let mesh = crossing_segments(0.125);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0 = DiscreteField(
            (0..mesh.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let zero = DiscreteField::zeros(mesh.n_dofs);
        let dt = 0.01;
        let u1 = step_theta(&mesh, &mass, &stiffness, &u0, &zero, &zero, dt, 1.0).unwrap();
        // (u1 - u0)^T M u1 + dt u1^T K u1 = 0
        let diff: Vec<f64> = u1.0.iter().zip(&u0.0).map(|(a, b)| a - b).collect();
        let lhs = mass.bilinear_form(&diff, &u1.0) + dt * stiffness.quadratic_form(&u1.0);
        assert!(lhs.abs() < 1e-9, "energy identity defect {}", lhs);
    }

    #[test]
    fn parabolic_decay_is_monotone() {
        let mesh = crossing_segments(0.125);
        let b = CoefficientMatrixB::identity();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mass = assemble_mass(&mesh);
        let mut u0 = DiscreteField(
            (0..mesh.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let means = class_means(&mesh, &mass, &u0);
        let cls = mesh.dof_classes();
        for (d, v) in u0.0.iter_mut().enumerate() {
            *v -= means[cls[d]];
        }
        for theta in [0.5, 1.0] {
            let traj = run_parabolic(&ParabolicProblem {
                mesh: &mesh,
                coefficient: &b,
                force: &|_, _, _, _| 0.0,
                force_time_dependent: false,
                u0: u0.clone(),
                t_final: 0.5,
                dt: 0.01,
                theta,
                target: None,
                snapshot_every: None,
            })
            .unwrap();
            for w in traj.l2_norm.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            for w in traj.energy.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
            }
            assert!(!traj.incompatible_forcing);
        }
    }

    #[test]
    fn constant_initial_state_stays_constant() {
        let mesh = crossing_segments(0.25);
        let b = CoefficientMatrixB::identity();
        let traj = run_parabolic(&ParabolicProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &|_, _, _, _| 0.0,
            force_time_dependent: false,
            u0: DiscreteField(vec![1.0; mesh.n_dofs]),
            t_final: 0.2,
            dt: 0.02,
            theta: 1.0,
            target: None,
            snapshot_every: None,
        })
        .unwrap();
        for v in &traj.final_field.0 {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for e in &traj.energy {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn energy_examples() {
        let mesh = crossing_segments(0.0625);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        // class indicator has zero energy
        let chi = mesh.class_indicator(0);
        assert!(energy(&stiffness, &chi).abs() < 1e-12);
        // u = arclength on the first segment (continuous through the origin)
        let u = interpolate(&mesh, &|c, l, _| if c == 0 { l[0] } else { 0.0 }).unwrap();
        let e = energy(&stiffness, &u);
        assert!((e - 2.0).abs() < 1e-10, "energy {}", e);
        // nonzero for non-constant fields
        assert!(energy(&stiffness, &u) > 0.0);
    }

    #[test]
    fn propagator_composition_is_exact_for_kernel_and_tight_generally() {
        let mesh = crossing_segments(0.125);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let chi = mesh.class_indicator(0);
        let dev = propagator_composition_check(
            &mesh, &mass, &stiffness, 0.01, 1.0, 1, 1, &chi,
        )
        .unwrap();
        assert!(dev <= 1e-14, "kernel deviation {}", dev);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u0 = DiscreteField(
            (0..mesh.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let dev =
            propagator_composition_check(&mesh, &mass, &stiffness, 0.01, 1.0, 1, 1, &u0)
                .unwrap();
        assert!(dev <= 1e-10, "deviation {}", dev);
    }

    #[test]
    fn incompatible_forcing_drifts_linearly_and_is_flagged() {
        // f with nonzero class mean: the class mean of u grows linearly at
        // rate (chi' load)/mu_k; the run reports it instead of failing.
        let mesh = crossing_segments(0.25);
        let b = CoefficientMatrixB::identity();
        let mass = assemble_mass(&mesh);
        let load = assemble_load(&mesh, &|_, _, _, _| 1.0, 0.0);
        let chi = mesh.class_indicator(0);
        let rate = crate::sparse::dot(&chi.0, &load.0) / mass.quadratic_form(&chi.0);
        let traj = run_parabolic(&ParabolicProblem {
            mesh: &mesh,
            coefficient: &b,
            force: &|_, _, _, _| 1.0,
            force_time_dependent: false,
            u0: DiscreteField::zeros(mesh.n_dofs),
            t_final: 1.0,
            dt: 0.05,
            theta: 1.0,
            target: None,
            snapshot_every: None,
        })
        .unwrap();
        assert!(traj.incompatible_forcing);
        for (t, means) in traj.times.iter().zip(&traj.class_means) {
            assert!(
                (means[0] - rate * t).abs() <= 1e-10 * (1.0 + t),
                "mean {} at t {} vs linear {}",
                means[0],
                t,
                rate * t
            );
        }
    }

    #[test]
    fn interval_poincare_constant_matches_neumann_gap() {
        let mesh = interval_mesh(2.0 / 256.0);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let consts = poincare_constants(&mesh, &stiffness, &mass, 1e-9).unwrap();
        assert_eq!(consts.len(), 1);
        let want = 4.0 / std::f64::consts::PI.powi(2);
        let got = consts[0].constant;
        assert!(
            (got - want).abs() < 0.01 * want,
            "C = {} want {} (1%)",
            got,
            want
        );
    }

    #[test]
    fn poincare_inequality_is_sharp_on_random_fields() {
        let mesh = crossing_segments(0.125);
        let mass = assemble_mass(&mesh);
        let stiffness =
            assemble_stiffness(&mesh, &CoefficientMatrixB::identity()).unwrap();
        let consts = poincare_constants(&mesh, &stiffness, &mass, 1e-9).unwrap();
        let c0 = consts[0].constant;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let u = DiscreteField(
                (0..mesh.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let proj = crate::assembly::class_mean_project(&mesh, &mass, &u);
            let diff: Vec<f64> = u.0.iter().zip(&proj.0).map(|(a, b)| a - b).collect();
            let lhs = mass.quadratic_form(&diff);
            let rhs = stiffness.quadratic_form(&u.0);
            assert!(
                lhs <= c0 * (1.0 + 1e-8) * rhs,
                "poincare violated: {} > {} * {}",
                lhs,
                c0,
                rhs
            );
        }
    }
}
