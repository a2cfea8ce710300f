//! Measure-weighted P1 assembly: mass and stiffness operators over the
//! junction-coupled space, load vectors, and the per-class mean
//! projections.
//!
//! Stiffness integrates (B grad u, grad v) with the coefficient compressed
//! onto each component's tangent plane (effective coefficient F^T B F for
//! the component frame F). Quadrature: midpoint on segments, the 3-point
//! centroid-symmetric rule on triangles; the mass matrix uses the exact P1
//! formulas, which the same rules reproduce.

use thiserror::Error;

use crate::meshing::{DiscreteField, Element, Mesh};
use crate::sparse::{SparseMatrixSym, SymBuilder};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Error)]
pub enum AssemblyError {
    #[error("coefficient matrix not elliptic at {position:?}: tangential eigenvalue {min_eig:.3e} below floor {floor:.3e}")]
    NonElliptic {
        position: Vec3,
        min_eig: f64,
        floor: f64,
    },
    #[error("coefficient matrix not symmetric at {position:?} (defect {defect:.3e})")]
    NonSymmetricB { position: Vec3, defect: f64 },
}

type BMatrix = [[f64; 3]; 3];

/// Symmetric elliptic coefficient field B(x).
pub struct CoefficientMatrixB {
    kind: BKind,
    pub ellipticity_floor: f64,
}

enum BKind {
    Identity,
    Constant(BMatrix),
    Function(Box<dyn Fn(Vec3) -> BMatrix + Send + Sync>),
}

impl CoefficientMatrixB {
    pub fn identity() -> Self {
        CoefficientMatrixB {
            kind: BKind::Identity,
            ellipticity_floor: 1.0,
        }
    }

    /// Constant coefficient; the floor is its smallest eigenvalue.
    pub fn constant(m: BMatrix) -> Result<Self, AssemblyError> {
        let defect = sym_defect(&m);
        if defect > 1e-12 {
            return Err(AssemblyError::NonSymmetricB {
                position: [0.0; 3],
                defect,
            });
        }
        let rows: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
        let (eigs, _) = crate::linalg::dense::jacobi_eigen(&rows);
        let min_eig = eigs[0];
        if min_eig <= 0.0 {
            return Err(AssemblyError::NonElliptic {
                position: [0.0; 3],
                min_eig,
                floor: 0.0,
            });
        }
        Ok(CoefficientMatrixB {
            kind: BKind::Constant(m),
            ellipticity_floor: min_eig,
        })
    }

    /// Position-dependent coefficient with a caller-asserted ellipticity
    /// floor; symmetry and the floor are checked at every quadrature point.
    pub fn from_fn(
        f: impl Fn(Vec3) -> BMatrix + Send + Sync + 'static,
        ellipticity_floor: f64,
    ) -> Self {
        CoefficientMatrixB {
            kind: BKind::Function(Box::new(f)),
            ellipticity_floor,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, BKind::Identity)
    }

    pub fn evaluate(&self, x: Vec3) -> BMatrix {
        match &self.kind {
            BKind::Identity => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            BKind::Constant(m) => *m,
            BKind::Function(f) => f(x),
        }
    }
}

fn sym_defect(m: &BMatrix) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            d = d.max((m[i][j] - m[j][i]).abs());
        }
    }
    d
}

fn check_b_sample(
    b: &CoefficientMatrixB,
    m: &BMatrix,
    position: Vec3,
    tangential_min_eig: f64,
) -> Result<(), AssemblyError> {
    let defect = sym_defect(m);
    if defect > 1e-12 {
        return Err(AssemblyError::NonSymmetricB { position, defect });
    }
    let floor = b.ellipticity_floor * (1.0 - 1e-9) - 1e-14;
    if tangential_min_eig < floor {
        return Err(AssemblyError::NonElliptic {
            position,
            min_eig: tangential_min_eig,
            floor: b.ellipticity_floor,
        });
    }
    Ok(())
}

// 3-point centroid-symmetric triangle rule (degree 2): barycentric
// permutations of (2/3, 1/6, 1/6) with equal weights.
const TRI_QP: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

fn tri_area_local(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]))
}

/// Consistent mass matrix; 1^T M 1 equals the structure measure to
/// rounding because segment nodes partition the exact length and disc
/// meshes are area-compensated.
pub fn assemble_mass(mesh: &Mesh) -> SparseMatrixSym {
    let mut builder = SymBuilder::new(mesh.n_dofs);
    for (c, comp) in mesh.components.iter().enumerate() {
        for el in &comp.elements {
            match el {
                Element::Line([a, b]) => {
                    let l = (comp.local[*b][0] - comp.local[*a][0]).abs();
                    let (ga, gb) = (mesh.dof[c][*a], mesh.dof[c][*b]);
                    builder.add(ga, ga, l / 3.0);
                    builder.add(gb, gb, l / 3.0);
                    builder.add(ga, gb, l / 6.0);
                }
                Element::Tri([a, b, c_]) => {
                    let area = tri_area_local([comp.local[*a], comp.local[*b], comp.local[*c_]]);
                    let g = [mesh.dof[c][*a], mesh.dof[c][*b], mesh.dof[c][*c_]];
                    for i in 0..3 {
                        for j in i..3 {
                            let v = if i == j { area / 6.0 } else { area / 12.0 };
                            builder.add(g[i], g[j], v);
                        }
                    }
                }
            }
        }
    }
    builder.build()
}

/// Stiffness matrix for the tangential form (B grad u, grad v).
pub fn assemble_stiffness(
    mesh: &Mesh,
    b: &CoefficientMatrixB,
) -> Result<SparseMatrixSym, AssemblyError> {
    let mut builder = SymBuilder::new(mesh.n_dofs);
    for (c, comp) in mesh.components.iter().enumerate() {
        let shape = mesh.structure.component(comp.component_id);
        match &shape.kind {
            crate::geometry::ShapeKind::Segment { p0, p1 } => {
                let tangent = vec3::normalize(vec3::sub(*p1, *p0));
                for el in &comp.elements {
                    let (a, bb) = match el {
                        Element::Line([a, b]) => (*a, *b),
                        _ => unreachable!(),
                    };
                    let l = (comp.local[bb][0] - comp.local[a][0]).abs();
                    let coeff = if b.is_identity() {
                        1.0
                    } else {
                        let mid = vec3::scale(vec3::add(comp.nodes_r3[a], comp.nodes_r3[bb]), 0.5);
                        let bm = b.evaluate(mid);
                        let tangential = quad_form(&bm, tangent);
                        check_b_sample(b, &bm, mid, tangential)?;
                        tangential
                    };
                    let (ga, gb) = (mesh.dof[c][a], mesh.dof[c][bb]);
                    let k = coeff / l;
                    builder.add(ga, ga, k);
                    builder.add(gb, gb, k);
                    builder.add(ga, gb, -k);
                }
            }
            crate::geometry::ShapeKind::Disc { frame, .. } => {
                for el in &comp.elements {
                    let [a, bb, cc] = match el {
                        Element::Tri(t) => *t,
                        _ => unreachable!(),
                    };
                    let p = [comp.local[a], comp.local[bb], comp.local[cc]];
                    let area = tri_area_local(p);
                    // constant P1 gradients in frame coordinates
                    let grads = [
                        [p[1][1] - p[2][1], p[2][0] - p[1][0]],
                        [p[2][1] - p[0][1], p[0][0] - p[2][0]],
                        [p[0][1] - p[1][1], p[1][0] - p[0][0]],
                    ]
                    .map(|g| [g[0] / (2.0 * area), g[1] / (2.0 * area)]);
                    // quadrature average of the tangential coefficient
                    let mut beff = [[0.0f64; 2]; 2];
                    if b.is_identity() {
                        beff = [[1.0, 0.0], [0.0, 1.0]];
                    } else {
                        let nodes = [comp.nodes_r3[a], comp.nodes_r3[bb], comp.nodes_r3[cc]];
                        for qp in TRI_QP {
                            let mut x = [0.0; 3];
                            for (w, node) in qp.iter().zip(nodes) {
                                x = vec3::add(x, vec3::scale(node, *w));
                            }
                            let bm = b.evaluate(x);
                            let mut local = [[0.0f64; 2]; 2];
                            for (i, ei) in frame.iter().enumerate() {
                                for (j, ej) in frame.iter().enumerate() {
                                    local[i][j] = bilinear(&bm, *ei, *ej);
                                }
                            }
                            let tangential_min = min_eig_2x2(local);
                            check_b_sample(b, &bm, x, tangential_min)?;
                            for i in 0..2 {
                                for j in 0..2 {
                                    beff[i][j] += local[i][j] / 3.0;
                                }
                            }
                        }
                        // enforce exact symmetry of the averaged coefficient
                        let avg = 0.5 * (beff[0][1] + beff[1][0]);
                        beff[0][1] = avg;
                        beff[1][0] = avg;
                    }
                    let g = [mesh.dof[c][a], mesh.dof[c][bb], mesh.dof[c][cc]];
                    for i in 0..3 {
                        for j in i..3 {
                            let gi = grads[i];
                            let gj = grads[j];
                            let v = area
                                * (gi[0] * (beff[0][0] * gj[0] + beff[0][1] * gj[1])
                                    + gi[1] * (beff[1][0] * gj[0] + beff[1][1] * gj[1]));
                            builder.add(g[i], g[j], v);
                        }
                    }
                }
            }
        }
    }
    Ok(builder.build())
}

fn quad_form(m: &BMatrix, v: Vec3) -> f64 {
    bilinear(m, v, v)
}

fn bilinear(m: &BMatrix, a: Vec3, b: Vec3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += a[i] * m[i][j] * b[j];
        }
    }
    acc
}

fn min_eig_2x2(m: [[f64; 2]; 2]) -> f64 {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let b = 0.5 * (m[0][1] + m[1][0]);
    let det_part = (0.25 * (m[0][0] - m[1][1]).powi(2) + b * b).sqrt();
    half_trace - det_part
}

/// Load vector with entries int f phi_j dmu; 2-point Gauss on segments and
/// the triangle rule above (the rules that reproduce the mass matrix).
pub fn assemble_load(
    mesh: &Mesh,
    f: &dyn Fn(usize, [f64; 2], Vec3, f64) -> f64,
    time: f64,
) -> DiscreteField {
    let mut out = vec![0.0; mesh.n_dofs];
    let gauss = 1.0 / 3f64.sqrt();
    for (c, comp) in mesh.components.iter().enumerate() {
        for el in &comp.elements {
            match el {
                Element::Line([a, b]) => {
                    let (la, lb) = (comp.local[*a][0], comp.local[*b][0]);
                    let l = (lb - la).abs();
                    let (ra, rb) = (comp.nodes_r3[*a], comp.nodes_r3[*b]);
                    for xi in [-gauss, gauss] {
                        let w = 0.5 * l;
                        let (pa, pb) = (0.5 * (1.0 - xi), 0.5 * (1.0 + xi));
                        let local = [pa * la + pb * lb, 0.0];
                        let pos = vec3::add(vec3::scale(ra, pa), vec3::scale(rb, pb));
                        let fv = f(comp.component_id, local, pos, time);
                        out[mesh.dof[c][*a]] += w * fv * pa;
                        out[mesh.dof[c][*b]] += w * fv * pb;
                    }
                }
                Element::Tri([a, b, c_]) => {
                    let idx = [*a, *b, *c_];
                    let p = [comp.local[*a], comp.local[*b], comp.local[*c_]];
                    let nodes = [comp.nodes_r3[*a], comp.nodes_r3[*b], comp.nodes_r3[*c_]];
                    let area = tri_area_local(p);
                    let w = area / 3.0;
                    for qp in TRI_QP {
                        let mut local = [0.0, 0.0];
                        let mut pos = [0.0; 3];
                        for (lam, (pl, node)) in qp.iter().zip(p.iter().zip(nodes)) {
                            local[0] += lam * pl[0];
                            local[1] += lam * pl[1];
                            pos = vec3::add(pos, vec3::scale(node, *lam));
                        }
                        let fv = f(comp.component_id, local, pos, time);
                        for (lam, i) in qp.iter().zip(idx) {
                            out[mesh.dof[c][i]] += w * fv * lam;
                        }
                    }
                }
            }
        }
    }
    DiscreteField(out)
}

/// mu-weighted means of `u` over each kernel class.
pub fn class_means(mesh: &Mesh, mass: &SparseMatrixSym, u: &DiscreteField) -> Vec<f64> {
    let mu = mass.matvec(&u.0);
    let cls = mesh.dof_classes();
    let mut sums = vec![0.0; mesh.classes.d()];
    let mut measures = vec![0.0; mesh.classes.d()];
    let ones = vec![1.0; mesh.n_dofs];
    let mones = mass.matvec(&ones);
    for d in 0..mesh.n_dofs {
        sums[cls[d]] += mu[d];
        measures[cls[d]] += mones[d];
    }
    sums.iter().zip(&measures).map(|(s, m)| s / m).collect()
}

/// Sum of the class projections: the field that is the mu-mean of `u` on
/// each kernel class. Idempotent; fixes per-class constants.
pub fn class_mean_project(
    mesh: &Mesh,
    mass: &SparseMatrixSym,
    u: &DiscreteField,
) -> DiscreteField {
    let means = class_means(mesh, mass, u);
    let cls = mesh.dof_classes();
    DiscreteField((0..mesh.n_dofs).map(|d| means[cls[d]]).collect())
}

/// u minus its class means (the zero-mean representative).
pub fn remove_class_means(mesh: &Mesh, mass: &SparseMatrixSym, u: &DiscreteField) -> DiscreteField {
    let means = class_means(mesh, mass, u);
    let cls = mesh.dof_classes();
    DiscreteField(
        u.0.iter()
            .enumerate()
            .map(|(d, v)| v - means[cls[d]])
            .collect(),
    )
}
