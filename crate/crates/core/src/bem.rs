//! Constant-element boundary element baseline.
//!
//! Piecewise-constant densities with midpoint (2D) or centroid (3D)
//! collocation, assembled through the exact same code paths as the
//! random-feature method — the trace basis is [`IndicatorBasis`] instead of
//! a feature expansion, and the square system is solved by dense LU instead
//! of least squares.  Reconstruction and error metrics are shared too, so
//! baseline comparisons differ only in the trace representation.

use nalgebra::{DVector, Vector2};

use crate::assembly::{
    assemble_burton_miller, assemble_exterior_dirichlet_elementwise, assemble_interior_mixed,
    DirichletData2d, IndicatorBasis, NeumannData2d, PlaneWave3d, ProblemKind,
};
use crate::geometry::{Boundary2d, Orientation, TriMesh};
use crate::kernels::KernelKind;
use crate::solver::{
    reconstruct_cauchy_2d, reconstruct_field_2d, solve_square_lu, FieldSolution,
};
use crate::{Cplx, Result};

/// Per-element constant values of the unknown trace component: the normal
/// derivative on Dirichlet elements, the trace value on Neumann elements,
/// and the total-field trace for Burton-Miller scattering.
#[derive(Debug, Clone)]
pub struct PanelDensities {
    pub values: DVector<Cplx>,
}

impl PanelDensities {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Constant-element collocation BEM in 2D.
///
/// Interior-oriented boundaries solve the mixed Dirichlet/Neumann problem;
/// exterior-oriented boundaries solve the all-Dirichlet radiating problem.
/// One unknown per panel, collocated at panel midpoints; dense LU solve.
pub fn bem_solve_2d(
    boundary: &Boundary2d,
    kind: KernelKind,
    g: DirichletData2d,
    q: NeumannData2d,
    n_gauss: usize,
) -> Result<PanelDensities> {
    let basis = IndicatorBasis {
        n_elements: boundary.len(),
    };
    let system = match boundary.orientation {
        Orientation::Interior => {
            assemble_interior_mixed(kind, boundary, &basis, g, q, n_gauss)?
        }
        Orientation::Exterior => {
            // Classical element form H g = G q: the known Dirichlet trace is
            // collapsed to its per-panel midpoint samples before it ever
            // touches a kernel, matching the space that carries the unknown.
            let trace = DVector::from_iterator(
                boundary.len(),
                boundary.collocation_points().iter().map(|c| g(&c.point)),
            );
            assemble_exterior_dirichlet_elementwise(kind, boundary, &basis, &trace, n_gauss)?
        }
    };
    let values = solve_square_lu(&system)?;
    Ok(PanelDensities { values })
}

/// Field reconstruction for the constant-element solution.
///
/// Interior mixed problems use the shared representation-formula path with
/// the analytic data closures on the known trace components.  Exterior
/// Dirichlet problems reconstruct from the scheme's own Cauchy pair: the
/// Dirichlet trace enters as its per-panel midpoint samples — all a
/// constant-element discretization retains of the data — so the field
/// carries the element space's sampling error alongside the solved flux.
#[allow(clippy::too_many_arguments)]
pub fn bem_reconstruct_2d(
    boundary: &Boundary2d,
    densities: &PanelDensities,
    kind: KernelKind,
    n_gauss: usize,
    points: &[Vector2<f64>],
    g: DirichletData2d,
    q: NeumannData2d,
) -> Result<FieldSolution> {
    let basis = IndicatorBasis {
        n_elements: boundary.len(),
    };
    match boundary.orientation {
        Orientation::Interior => reconstruct_field_2d(
            boundary,
            &basis,
            &densities.values,
            kind,
            n_gauss,
            points,
            ProblemKind::InteriorMixed,
            g,
            q,
        ),
        Orientation::Exterior => {
            let trace = DVector::from_iterator(
                boundary.len(),
                boundary.collocation_points().iter().map(|c| g(&c.point)),
            );
            reconstruct_cauchy_2d(
                boundary,
                &basis,
                &trace,
                &densities.values,
                kind,
                n_gauss,
                points,
            )
        }
    }
}

/// Constant-element Burton-Miller BEM for sound-hard scattering: one
/// total-field trace unknown per triangle, centroid collocation, LU solve.
pub fn bem_solve_3d_burton_miller(
    mesh: &TriMesh,
    kind: KernelKind,
    incident: &PlaneWave3d,
    mu: Cplx,
) -> Result<PanelDensities> {
    let basis = IndicatorBasis {
        n_elements: mesh.len(),
    };
    let system = assemble_burton_miller(kind, mesh, &basis, incident, mu)?;
    let values = solve_square_lu(&system)?;
    Ok(PanelDensities { values })
}
