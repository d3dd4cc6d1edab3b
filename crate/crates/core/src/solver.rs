//! Least-squares solve for trace coefficients, field reconstruction at
//! evaluation points, and error metrics.
//!
//! # Solve
//!
//! Collocation systems are complex and generally rectangular.  They are
//! solved through the real embedding
//!
//! ```text
//! [ Re A  -Im A ] [ Re x ]   [ Re b ]
//! [ Im A   Re A ] [ Im x ] = [ Im b ]
//! ```
//!
//! whose least-squares minimizers coincide with the complex ones and whose
//! Euclidean norm equals the complex norm, so one real SVD path serves the
//! Laplace and Helmholtz cases alike.  Singular values below
//! `rcond * sigma_max` are truncated and the minimum-norm minimizer is
//! returned.  Square boundary-element systems use dense LU instead
//! ([`solve_square_lu`]).
//!
//! # Reconstruction
//!
//! Fields are rebuilt from the representation formulas, with known boundary
//! data substituted on the tagged parts and the solved trace expansion
//! elsewhere (interior mixed: `u = S[q] - W[u]`; exterior Dirichlet:
//! `u = W[u] - S[q]`; scattering: `phi = phi_inc + W[u]`).  Because the
//! discrete reconstruction is a finite combination of fundamental solutions
//! centered at quadrature nodes, it satisfies the PDE exactly away from the
//! boundary; its only defect is the quadrature error in the coefficients.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rayon::prelude::*;

use crate::assembly::{
    nodes_for_target, BiSystem, BoundaryBasis, DirichletData2d, NeumannData2d, PlaneWave3d,
    ProblemKind,
};
use crate::geometry::{BcTag, Boundary2d, Orientation, TriMesh};
use crate::kernels::{self, KernelKind};
use crate::quadrature::{gauss_legendre, triangle_nodes_near, triangle_rule_7};
use crate::{Cplx, Error, Result};

/// Default relative singular-value cutoff for the least-squares solve.
pub const DEFAULT_RCOND: f64 = 1e-12;

/// Default evaluation-grid standoff as a fraction of the boundary diameter.
pub const DEFAULT_STANDOFF_FRACTION: f64 = 0.02;

/// Minimum admissible distance between an evaluation point and the boundary.
pub const MIN_EVAL_DISTANCE: f64 = 1e-6;

/// Outcome of the least-squares solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Trace coefficients (length = number of basis functions).
    pub coefficients: DVector<Cplx>,
    /// Final residual `|| A beta - b ||` of the complex system.
    pub residual_norm: f64,
    /// Number of retained singular directions, counted in complex terms
    /// (each complex direction appears twice in the real embedding).
    pub effective_rank: usize,
    /// Largest retained singular value (0 if nothing was retained).
    pub sigma_max: f64,
    /// Smallest retained singular value (0 if nothing was retained).
    pub sigma_min: f64,
}

/// Minimum-norm least-squares solve of a collocation system.
///
/// Singular values of the real embedding below `rcond * sigma_max` are
/// discarded; among all residual minimizers the one of smallest norm is
/// returned.
pub fn solve_least_squares(system: &BiSystem, rcond: f64) -> Result<SolveReport> {
    let n = system.n_rows();
    let m = system.n_cols();
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(
            "least-squares solve needs at least one row and one column".into(),
        ));
    }
    if !(0.0..1.0).contains(&rcond) {
        return Err(Error::InvalidConfig(format!(
            "rcond must lie in [0, 1), got {rcond}"
        )));
    }
    system.check_finite()?;

    // Real embedding.
    let a = &system.matrix;
    let b = &system.rhs;
    let mut ar = DMatrix::<f64>::zeros(2 * n, 2 * m);
    for i in 0..n {
        for j in 0..m {
            let z = a[(i, j)];
            ar[(i, j)] = z.re;
            ar[(i, j + m)] = -z.im;
            ar[(i + n, j)] = z.im;
            ar[(i + n, j + m)] = z.re;
        }
    }
    let mut br = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        br[i] = b[i].re;
        br[i + n] = b[i].im;
    }

    let svd = nalgebra::SVD::try_new(ar, true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let sigma = &svd.singular_values;

    let sigma_top = sigma.iter().fold(0.0_f64, |acc, &s| acc.max(s));
    let threshold = rcond * sigma_top;
    let mut utb = u.transpose() * &br;
    let mut retained = 0usize;
    let mut smin = f64::INFINITY;
    let mut smax = 0.0_f64;
    for (i, &s) in sigma.iter().enumerate() {
        if s > threshold && s > 0.0 {
            utb[i] /= s;
            retained += 1;
            smin = smin.min(s);
            smax = smax.max(s);
        } else {
            utb[i] = 0.0;
        }
    }
    let xr = v_t.transpose() * utb;

    let coefficients =
        DVector::from_fn(m, |j, _| Cplx::new(xr[j], xr[j + m]));
    let residual_norm = (a * &coefficients - b).norm();

    Ok(SolveReport {
        coefficients,
        residual_norm,
        // complex rank: retained real directions come in conjugate pairs
        effective_rank: retained.div_ceil(2),
        sigma_max: smax,
        sigma_min: if retained == 0 { 0.0 } else { smin },
    })
}

/// Dense LU solve for square (boundary-element) collocation systems.
///
/// Fails with [`Error::SingularSystem`] when an LU pivot magnitude falls
/// below `1e-14`.
pub fn solve_square_lu(system: &BiSystem) -> Result<DVector<Cplx>> {
    let n = system.n_rows();
    if n != system.n_cols() {
        return Err(Error::InvalidConfig(format!(
            "LU solve needs a square system, got {}x{}",
            n,
            system.n_cols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("empty system".into()));
    }
    system.check_finite()?;
    let lu = system.matrix.clone().lu();
    let upper = lu.u();
    for i in 0..n {
        if upper[(i, i)].norm() < 1e-14 {
            return Err(Error::SingularSystem);
        }
    }
    lu.solve(&system.rhs).ok_or(Error::SingularSystem)
}

// ---------------------------------------------------------------------------
// Field reconstruction
// ---------------------------------------------------------------------------

/// A reconstructed field over a set of evaluation points, optionally paired
/// with reference values and per-point absolute errors.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    /// Evaluation points, padded to three components (z = 0 in 2D).
    pub points: Vec<[f64; 3]>,
    /// Spatial dimension the points live in (2 or 3).
    pub dim: usize,
    /// Predicted complex field values, one per point.
    pub predicted: Vec<Cplx>,
    /// Reference values, when a reference solution is known.
    pub reference: Option<Vec<Cplx>>,
    /// Per-point absolute errors `|predicted - reference|`.
    pub abs_error: Option<Vec<f64>>,
}

impl FieldSolution {
    pub fn from_2d(points: &[Vector2<f64>], predicted: Vec<Cplx>) -> Self {
        assert_eq!(points.len(), predicted.len());
        FieldSolution {
            points: points.iter().map(|p| [p.x, p.y, 0.0]).collect(),
            dim: 2,
            predicted,
            reference: None,
            abs_error: None,
        }
    }

    pub fn from_3d(points: &[Vector3<f64>], predicted: Vec<Cplx>) -> Self {
        assert_eq!(points.len(), predicted.len());
        FieldSolution {
            points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            dim: 3,
            predicted,
            reference: None,
            abs_error: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Attach reference values and compute per-point absolute errors.
    pub fn attach_reference(&mut self, reference: Vec<Cplx>) -> Result<()> {
        if reference.len() != self.predicted.len() {
            return Err(Error::InvalidConfig(format!(
                "reference length {} does not match {} evaluation points",
                reference.len(),
                self.predicted.len()
            )));
        }
        self.abs_error = Some(
            self.predicted
                .iter()
                .zip(&reference)
                .map(|(p, r)| (p - r).norm())
                .collect(),
        );
        self.reference = Some(reference);
        Ok(())
    }

    /// Relative L2 error against the attached reference.
    pub fn relative_l2(&self) -> Result<f64> {
        let reference = self.reference.as_ref().ok_or_else(|| {
            Error::InvalidConfig("no reference attached to the field solution".into())
        })?;
        relative_l2_error(&self.predicted, reference)
    }
}

/// Discrete relative L2 error `||predicted - reference|| / ||reference||`
/// over an evaluation set, with complex modulus per entry.
pub fn relative_l2_error(predicted: &[Cplx], reference: &[Cplx]) -> Result<f64> {
    if predicted.len() != reference.len() || predicted.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "error metric needs equal nonzero lengths, got {} and {}",
            predicted.len(),
            reference.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, r) in predicted.iter().zip(reference) {
        num += (p - r).norm_sqr();
        den += r.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Rebuild the 2D field from the representation formula at off-boundary
/// points, substituting known data (`g` on Dirichlet panels, `q` on Neumann
/// panels) and the solved trace expansion for the remaining traces.
///
/// Points must keep a distance of at least [`MIN_EVAL_DISTANCE`] from the
/// boundary.  Evaluation is point-parallel and deterministic.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_field_2d<B: BoundaryBasis<2>>(
    boundary: &Boundary2d,
    basis: &B,
    coefficients: &DVector<Cplx>,
    kind: KernelKind,
    n_gauss: usize,
    points: &[Vector2<f64>],
    problem: ProblemKind,
    g: DirichletData2d,
    q: NeumannData2d,
) -> Result<FieldSolution> {
    if kind.dim() != 2 {
        return Err(Error::InvalidConfig(
            "2D reconstruction needs a 2D kernel".into(),
        ));
    }
    if basis.len() != coefficients.len() {
        return Err(Error::InvalidConfig(format!(
            "basis has {} functions but {} coefficients were supplied",
            basis.len(),
            coefficients.len()
        )));
    }
    match problem {
        ProblemKind::InteriorMixed => {
            if boundary.orientation != Orientation::Interior {
                return Err(Error::InvalidConfig(
                    "interior reconstruction needs an interior-oriented boundary".into(),
                ));
            }
        }
        ProblemKind::ExteriorDirichlet => {
            if boundary.orientation != Orientation::Exterior {
                return Err(Error::InvalidConfig(
                    "exterior reconstruction needs an exterior-oriented boundary".into(),
                ));
            }
        }
        ProblemKind::BurtonMiller => {
            return Err(Error::InvalidConfig(
                "Burton-Miller reconstruction is three-dimensional".into(),
            ))
        }
    }
    let rule = gauss_legendre(n_gauss)?;
    for x in points {
        if boundary.distance(x) < MIN_EVAL_DISTANCE {
            return Err(Error::PointOnBoundary);
        }
    }
    let beta = coefficients.as_slice();

    let predicted: Vec<Cplx> = points
        .par_iter()
        .map(|x| -> Result<Cplx> {
            let mut acc = Cplx::new(0.0, 0.0);
            for (e, panel) in boundary.panels.iter().enumerate() {
                let nodes = nodes_for_target(panel, &rule, x);
                for ((y, ny), w) in nodes
                    .points
                    .iter()
                    .zip(&nodes.normals)
                    .zip(&nodes.weights)
                {
                    let phi = kernels::fundamental::<2>(kind, x, y)?;
                    let dphi = kernels::normal_derivative_y::<2>(kind, x, y, ny)?;
                    let term = match (problem, panel.bc) {
                        // u = S[q] - W[u]: trace known on Dirichlet panels,
                        // flux known on Neumann panels.
                        (ProblemKind::InteriorMixed, BcTag::Dirichlet) => {
                            phi * basis.normal_deriv_dot(e, y, ny, beta) - dphi * g(y)
                        }
                        (ProblemKind::InteriorMixed, BcTag::Neumann) => {
                            phi * q(y, ny) - dphi * basis.value_dot(e, y, beta)
                        }
                        // u = W[u] - S[q] with u = g given everywhere.
                        (ProblemKind::ExteriorDirichlet, BcTag::Dirichlet) => {
                            dphi * g(y) - phi * basis.normal_deriv_dot(e, y, ny, beta)
                        }
                        (ProblemKind::ExteriorDirichlet, BcTag::Neumann) => {
                            return Err(Error::InvalidConfig(
                                "exterior reconstruction expects all-Dirichlet panels".into(),
                            ))
                        }
                        (ProblemKind::BurtonMiller, _) => unreachable!(),
                    };
                    acc += term * *w;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FieldSolution::from_2d(points, predicted))
}

/// Field of a boundary Cauchy pair expanded in one shared basis:
/// `u = S[flux] - W[trace]` on interior-oriented boundaries and
/// `u = W[trace] - S[flux]` on exterior-oriented ones.
///
/// This is the direct representation formula with *both* traces drawn from
/// the discretization's own function space.  Element-type methods
/// reconstruct through this path so the field inherits exactly the accuracy
/// of the element space — a constant-element trace of smooth data keeps its
/// midpoint-sampling error rather than being silently replaced by the
/// analytic data.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_cauchy_2d<B: BoundaryBasis<2>>(
    boundary: &Boundary2d,
    basis: &B,
    trace_coeffs: &DVector<Cplx>,
    flux_coeffs: &DVector<Cplx>,
    kind: KernelKind,
    n_gauss: usize,
    points: &[Vector2<f64>],
) -> Result<FieldSolution> {
    if kind.dim() != 2 {
        return Err(Error::InvalidConfig(
            "2D reconstruction needs a 2D kernel".into(),
        ));
    }
    if basis.len() != trace_coeffs.len() || basis.len() != flux_coeffs.len() {
        return Err(Error::InvalidConfig(format!(
            "basis has {} functions but {} trace and {} flux coefficients were supplied",
            basis.len(),
            trace_coeffs.len(),
            flux_coeffs.len()
        )));
    }
    let rule = gauss_legendre(n_gauss)?;
    for x in points {
        if boundary.distance(x) < MIN_EVAL_DISTANCE {
            return Err(Error::PointOnBoundary);
        }
    }
    let sign = match boundary.orientation {
        Orientation::Interior => 1.0,
        Orientation::Exterior => -1.0,
    };
    let trace = trace_coeffs.as_slice();
    let flux = flux_coeffs.as_slice();

    let predicted: Vec<Cplx> = points
        .par_iter()
        .map(|x| -> Result<Cplx> {
            let mut acc = Cplx::new(0.0, 0.0);
            for (e, panel) in boundary.panels.iter().enumerate() {
                let nodes = nodes_for_target(panel, &rule, x);
                for ((y, ny), w) in nodes
                    .points
                    .iter()
                    .zip(&nodes.normals)
                    .zip(&nodes.weights)
                {
                    let phi = kernels::fundamental::<2>(kind, x, y)?;
                    let dphi = kernels::normal_derivative_y::<2>(kind, x, y, ny)?;
                    let term = phi * basis.value_dot(e, y, flux)
                        - dphi * basis.value_dot(e, y, trace);
                    acc += term * *w * sign;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FieldSolution::from_2d(points, predicted))
}

/// Rebuild the 3D scattered-plus-incident field `phi = phi_inc + W[u]` from
/// the solved total-field trace expansion.
pub fn reconstruct_scattered_3d<B: BoundaryBasis<3>>(
    mesh: &TriMesh,
    basis: &B,
    coefficients: &DVector<Cplx>,
    kind: KernelKind,
    incident: &PlaneWave3d,
    points: &[Vector3<f64>],
) -> Result<FieldSolution> {
    if !matches!(kind, KernelKind::Helmholtz3d { .. }) {
        return Err(Error::InvalidConfig(
            "3D reconstruction needs the 3D Helmholtz kernel".into(),
        ));
    }
    if basis.len() != coefficients.len() {
        return Err(Error::InvalidConfig(format!(
            "basis has {} functions but {} coefficients were supplied",
            basis.len(),
            coefficients.len()
        )));
    }
    for x in points {
        if mesh.distance(x) < MIN_EVAL_DISTANCE {
            return Err(Error::PointOnBoundary);
        }
    }
    let rule = triangle_rule_7();
    let beta = coefficients.as_slice();

    let predicted: Vec<Cplx> = points
        .par_iter()
        .map(|x| -> Result<Cplx> {
            let mut acc = incident.value(x);
            for e in 0..mesh.len() {
                let corners = mesh.corners(e);
                let ne = mesh.normal(e);
                let nodes = triangle_nodes_near(&corners, &rule, x);
                for (y, w) in nodes.points.iter().zip(&nodes.weights) {
                    let dphi = kernels::normal_derivative_y::<3>(kind, x, y, &ne)?;
                    acc += dphi * basis.value_dot(e, y, beta) * *w;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FieldSolution::from_3d(points, predicted))
}

// ---------------------------------------------------------------------------
// Evaluation grids
// ---------------------------------------------------------------------------

fn resolve_standoff(standoff: Option<f64>, diameter: f64) -> f64 {
    standoff.unwrap_or(DEFAULT_STANDOFF_FRACTION * diameter)
}

/// Uniform grid over the bounding box, restricted to interior points at
/// least `standoff` (default 2% of the diameter) away from the boundary.
pub fn interior_grid(
    boundary: &Boundary2d,
    resolution: usize,
    standoff: Option<f64>,
) -> Result<Vec<Vector2<f64>>> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be >= 2".into()));
    }
    let standoff = resolve_standoff(standoff, boundary.diameter());
    let (lo, hi) = boundary.bounding_box();
    let mut out = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            let s = i as f64 / (resolution - 1) as f64;
            let t = j as f64 / (resolution - 1) as f64;
            let p = Vector2::new(lo.x + s * (hi.x - lo.x), lo.y + t * (hi.y - lo.y));
            if boundary.contains(&p) && boundary.distance(&p) >= standoff {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Uniform grid over the disk of radius `outer_radius` around the boundary's
/// bounding-box center, restricted to exterior points at least `standoff`
/// away from the boundary.
pub fn exterior_grid(
    boundary: &Boundary2d,
    resolution: usize,
    outer_radius: f64,
    standoff: Option<f64>,
) -> Result<Vec<Vector2<f64>>> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be >= 2".into()));
    }
    if outer_radius <= 0.0 {
        return Err(Error::NonPositiveArgument("exterior grid radius"));
    }
    let standoff = resolve_standoff(standoff, boundary.diameter());
    let (lo, hi) = boundary.bounding_box();
    let center = 0.5 * (lo + hi);
    let mut out = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            let s = -1.0 + 2.0 * i as f64 / (resolution - 1) as f64;
            let t = -1.0 + 2.0 * j as f64 / (resolution - 1) as f64;
            let p = center + outer_radius * Vector2::new(s, t);
            if (p - center).norm() <= outer_radius
                && !boundary.contains(&p)
                && boundary.distance(&p) >= standoff
            {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Evaluation points on the three coordinate planes through the origin for
/// sphere scattering: per plane a uniform grid over `[-outer, outer]^2`,
/// excluding the ball of radius `sphere_radius + standoff`.
pub fn scattering_plane_grid(
    sphere_radius: f64,
    outer: f64,
    resolution: usize,
    standoff: Option<f64>,
) -> Result<Vec<Vector3<f64>>> {
    if resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be >= 2".into()));
    }
    if sphere_radius <= 0.0 {
        return Err(Error::NonPositiveArgument("sphere radius"));
    }
    if outer <= sphere_radius {
        return Err(Error::InvalidConfig(
            "outer grid extent must exceed the sphere radius".into(),
        ));
    }
    let standoff = resolve_standoff(standoff, 2.0 * sphere_radius);
    let cut = sphere_radius + standoff;
    let mut out = Vec::new();
    let coord = |i: usize| -outer + 2.0 * outer * i as f64 / (resolution - 1) as f64;
    for i in 0..resolution {
        for j in 0..resolution {
            let (a, b) = (coord(i), coord(j));
            for p in [
                Vector3::new(0.0, a, b), // Y-Z plane
                Vector3::new(a, 0.0, b), // X-Z plane
                Vector3::new(a, b, 0.0), // X-Y plane
            ] {
                if p.norm() >= cut {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_interior_mixed, ConstantTrace, ExactMieTrace, ExactTrace2d, RowMeta,
    };
    use crate::geometry::{make_boundary, sphere_mesh, unit_square_mixed, Shape2d};
    use crate::reference::{MieSphere, Reference2d};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn system_from(matrix: DMatrix<Cplx>, rhs: DVector<Cplx>) -> BiSystem {
        let rows = (0..matrix.nrows())
            .map(|_| RowMeta {
                point: [0.0; 3],
                normal: [0.0; 3],
                bc: BcTag::Dirichlet,
            })
            .collect();
        BiSystem {
            matrix,
            rhs,
            rows,
            problem: ProblemKind::InteriorMixed,
        }
    }

    fn random_complex_matrix(rng: &mut ChaCha12Rng, n: usize, m: usize) -> DMatrix<Cplx> {
        DMatrix::from_fn(n, m, |_, _| {
            Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_system_returns_rhs() {
        let n = 5;
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            Cplx::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let rhs = DVector::from_fn(n, |i, _| Cplx::new(i as f64, -(i as f64)));
        let report = solve_least_squares(&system_from(matrix, rhs.clone()), DEFAULT_RCOND)
            .unwrap();
        assert!((report.coefficients - rhs).norm() < 1e-13);
        assert!(report.residual_norm < 1e-13);
        assert_eq!(report.effective_rank, n);
        assert_relative_eq!(report.sigma_max, 1.0, max_relative = 1e-12);
        assert_relative_eq!(report.sigma_min, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_column_mean_and_residual() {
        let matrix = DMatrix::from_fn(2, 1, |_, _| Cplx::new(1.0, 0.0));
        let rhs = DVector::from_vec(vec![Cplx::new(1.0, 0.0), Cplx::new(3.0, 0.0)]);
        let report = solve_least_squares(&system_from(matrix, rhs), DEFAULT_RCOND).unwrap();
        assert!((report.coefficients[0] - Cplx::new(2.0, 0.0)).norm() < 1e-14);
        assert_relative_eq!(report.residual_norm, 2f64.sqrt(), max_relative = 1e-13);
        assert_eq!(report.effective_rank, 1);
    }

    /// Full-rank overdetermined complex system against an explicit
    /// normal-equations pseudoinverse on the real embedding.
    #[test]
    fn random_system_matches_pinv_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (n, m) = (60, 40);
        let a = random_complex_matrix(&mut rng, n, m);
        let b = DVector::from_fn(n, |_, _| {
            Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let report =
            solve_least_squares(&system_from(a.clone(), b.clone()), DEFAULT_RCOND).unwrap();

        // oracle: x = (Ar^T Ar)^{-1} Ar^T br on the real embedding
        let mut ar = DMatrix::<f64>::zeros(2 * n, 2 * m);
        for i in 0..n {
            for j in 0..m {
                let z = a[(i, j)];
                ar[(i, j)] = z.re;
                ar[(i, j + m)] = -z.im;
                ar[(i + n, j)] = z.im;
                ar[(i + n, j + m)] = z.re;
            }
        }
        let mut br = DVector::<f64>::zeros(2 * n);
        for i in 0..n {
            br[i] = b[i].re;
            br[i + n] = b[i].im;
        }
        let gram = ar.transpose() * &ar;
        let xr = gram.try_inverse().unwrap() * (ar.transpose() * &br);
        let oracle = DVector::from_fn(m, |j, _| Cplx::new(xr[j], xr[j + m]));

        let rel = (&report.coefficients - &oracle).norm() / oracle.norm();
        assert!(rel <= 1e-8, "pinv oracle mismatch {rel:.3e}");
        assert_eq!(report.effective_rank, m);
        let oracle_residual = (&a * &oracle - &b).norm();
        assert_relative_eq!(report.residual_norm, oracle_residual, max_relative = 1e-10);

        // residual optimality: no perturbation of scale 1e-3 does better
        for _ in 0..20 {
            let delta = DVector::from_fn(m, |_, _| {
                Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let delta = delta * Cplx::new(1e-3, 0.0);
            let perturbed = (&a * (&report.coefficients + delta) - &b).norm();
            assert!(perturbed >= report.residual_norm * (1.0 - 1e-12));
        }
    }

    /// Rank-deficient system: normal equations hold, the solution is
    /// orthogonal to the null space (minimum norm), and the effective rank
    /// matches the construction.
    #[test]
    fn rank_deficient_system_min_norm_solution() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let (n, m, r) = (30, 40, 12);
        let bfac = random_complex_matrix(&mut rng, n, r);
        let cfac = random_complex_matrix(&mut rng, r, m);
        let a = &bfac * &cfac;
        let b = DVector::from_fn(n, |_, _| {
            Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let report =
            solve_least_squares(&system_from(a.clone(), b.clone()), DEFAULT_RCOND).unwrap();
        assert_eq!(report.effective_rank, r);

        // normal equations: A^H (A beta - b) = 0
        let resid = &a * &report.coefficients - &b;
        let grad = a.adjoint() * &resid;
        assert!(
            grad.norm() <= 1e-10 * a.norm() * b.norm(),
            "normal equations violated: {:.3e}",
            grad.norm()
        );

        // minimum norm: beta orthogonal to null(A) = null(C)
        let cct = &cfac * cfac.adjoint();
        let cct_inv = cct.try_inverse().unwrap();
        for _ in 0..5 {
            let v = DVector::from_fn(m, |_, _| {
                Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let z = &v - cfac.adjoint() * (&cct_inv * (&cfac * &v));
            assert!((&a * &z).norm() <= 1e-10 * a.norm() * z.norm());
            let ip: Cplx = report.coefficients.dotc(&z);
            assert!(
                ip.norm() <= 1e-9 * report.coefficients.norm() * z.norm(),
                "solution has a null-space component: {:.3e}",
                ip.norm()
            );
        }
    }

    #[test]
    fn truncation_drops_tiny_singular_values() {
        let matrix = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Cplx::new(if i == 0 { 1.0 } else { 1e-16 }, 0.0)
            } else {
                Cplx::new(0.0, 0.0)
            }
        });
        let rhs = DVector::from_vec(vec![Cplx::new(1.0, 0.0), Cplx::new(1.0, 0.0)]);
        let report = solve_least_squares(&system_from(matrix, rhs), 1e-12).unwrap();
        assert_eq!(report.effective_rank, 1);
        assert!((report.coefficients[0] - Cplx::new(1.0, 0.0)).norm() < 1e-14);
        assert!(report.coefficients[1].norm() < 1e-14);
        assert_relative_eq!(report.sigma_min, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn lu_solves_square_systems_and_rejects_singular_ones() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_complex_matrix(&mut rng, 12, 12);
        let x = DVector::from_fn(12, |_, _| {
            Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let b = &a * &x;
        let solved = solve_square_lu(&system_from(a, b)).unwrap();
        assert!((solved - x).norm() < 1e-10);

        let zero = DMatrix::from_element(3, 3, Cplx::new(0.0, 0.0));
        let rhs = DVector::from_element(3, Cplx::new(1.0, 0.0));
        assert!(matches!(
            solve_square_lu(&system_from(zero, rhs)),
            Err(Error::SingularSystem)
        ));

        let rect = DMatrix::from_element(3, 2, Cplx::new(1.0, 0.0));
        let rhs = DVector::from_element(3, Cplx::new(1.0, 0.0));
        assert!(solve_square_lu(&system_from(rect, rhs)).is_err());
    }

    #[test]
    fn relative_error_basic_identities() {
        let r: Vec<Cplx> = (1..5).map(|i| Cplx::new(i as f64, -0.5)).collect();
        assert_eq!(relative_l2_error(&r, &r).unwrap(), 0.0);
        let zero = vec![Cplx::new(0.0, 0.0); r.len()];
        assert_relative_eq!(relative_l2_error(&zero, &r).unwrap(), 1.0);
        let scaled: Vec<Cplx> = r.iter().map(|z| 1.1 * z).collect();
        assert_relative_eq!(
            relative_l2_error(&scaled, &r).unwrap(),
            0.1,
            epsilon = 1e-15
        );
        assert!(matches!(
            relative_l2_error(&r, &zero),
            Err(Error::ZeroReference)
        ));
        assert!(relative_l2_error(&r[..2], &r).is_err());
    }

    #[test]
    fn interior_grid_respects_standoff() {
        let b = unit_square_mixed(10, [BcTag::Dirichlet; 4]).unwrap();
        let pts = interior_grid(&b, 10, Some(0.05)).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.len() <= 100);
        for p in &pts {
            assert!(b.contains(p));
            assert!(b.distance(p) >= 0.05);
        }
        assert!(interior_grid(&b, 1, None).is_err());
    }

    #[test]
    fn exterior_grid_avoids_the_obstacle() {
        let b = make_boundary(Shape2d::Circle { radius: 1.0 }, 60, Orientation::Exterior)
            .unwrap();
        let pts = exterior_grid(&b, 24, 3.0, None).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.len() <= 24 * 24);
        let standoff = DEFAULT_STANDOFF_FRACTION * b.diameter();
        for p in &pts {
            assert!(p.norm() >= 1.0, "point {p:?} inside the unit disk");
            assert!(p.norm() <= 3.0 + 1e-12);
            assert!(b.distance(p) >= standoff);
        }
    }

    #[test]
    fn scattering_grid_covers_three_planes() {
        let pts = scattering_plane_grid(1.0, 3.0, 11, None).unwrap();
        assert!(pts.len() <= 3 * 11 * 11);
        let mut on_each_plane = [false; 3];
        for p in &pts {
            assert!(p.norm() >= 1.0 + 0.02 * 2.0 - 1e-12);
            if p.x == 0.0 {
                on_each_plane[0] = true;
            }
            if p.y == 0.0 {
                on_each_plane[1] = true;
            }
            if p.z == 0.0 {
                on_each_plane[2] = true;
            }
        }
        assert!(on_each_plane.iter().all(|&b| b));
        assert!(scattering_plane_grid(1.0, 0.5, 11, None).is_err());
    }

    fn data_from(
        field: &Reference2d,
    ) -> (
        impl Fn(&Vector2<f64>) -> Cplx + Sync + '_,
        impl Fn(&Vector2<f64>, &Vector2<f64>) -> Cplx + Sync + '_,
    ) {
        (
            move |x: &Vector2<f64>| field.value(x).expect("reference value"),
            move |x: &Vector2<f64>, n: &Vector2<f64>| {
                field.normal_derivative(x, n).expect("reference flux")
            },
        )
    }

    /// Green's representation with exact traces reproduces the harmonic
    /// reference pointwise in the interior.
    #[test]
    fn exact_trace_reconstruction_matches_harmonic_field() {
        let field = Reference2d::Harmonic;
        let boundary = unit_square_mixed(
            10,
            [BcTag::Dirichlet, BcTag::Neumann, BcTag::Dirichlet, BcTag::Neumann],
        )
        .unwrap();
        let basis = ExactTrace2d { field: &field };
        let coeffs = DVector::from_element(1, Cplx::new(1.0, 0.0));
        let (g, q) = data_from(&field);
        let pts: Vec<_> = interior_grid(&boundary, 10, Some(0.1))
            .unwrap()
            .into_iter()
            .take(50)
            .collect();
        assert_eq!(pts.len(), 50);
        let mut sol = reconstruct_field_2d(
            &boundary,
            &basis,
            &coeffs,
            KernelKind::Laplace2d,
            12,
            &pts,
            ProblemKind::InteriorMixed,
            &g,
            &q,
        )
        .unwrap();
        let reference: Vec<Cplx> = pts.iter().map(|p| field.value(p).unwrap()).collect();
        sol.attach_reference(reference).unwrap();
        let worst = sol
            .abs_error
            .as_ref()
            .unwrap()
            .iter()
            .fold(0.0_f64, |a, &e| a.max(e));
        assert!(worst <= 1e-5, "worst pointwise error {worst:.3e}");
    }

    /// The discrete reconstruction is a combination of fundamental
    /// solutions, so a five-point stencil of the Helmholtz operator applied
    /// to it vanishes to finite-difference accuracy.
    #[test]
    fn reconstruction_satisfies_the_pde() {
        let k = 3.0;
        let field = Reference2d::plane_wave(k).unwrap();
        let boundary = unit_square_mixed(
            12,
            [BcTag::Neumann, BcTag::Dirichlet, BcTag::Neumann, BcTag::Dirichlet],
        )
        .unwrap();
        let basis = ExactTrace2d { field: &field };
        let coeffs = DVector::from_element(1, Cplx::new(1.0, 0.0));
        let (g, q) = data_from(&field);
        let kind = KernelKind::helmholtz2d(k).unwrap();

        let centers: Vec<_> = interior_grid(&boundary, 7, Some(0.25)).unwrap();
        assert!(centers.len() >= 4);
        let h = 1e-3;
        let mut probes = Vec::new();
        for c in &centers {
            probes.push(*c);
            probes.push(c + Vector2::new(h, 0.0));
            probes.push(c - Vector2::new(h, 0.0));
            probes.push(c + Vector2::new(0.0, h));
            probes.push(c - Vector2::new(0.0, h));
        }
        let sol = reconstruct_field_2d(
            &boundary,
            &basis,
            &coeffs,
            kind,
            10,
            &probes,
            ProblemKind::InteriorMixed,
            &g,
            &q,
        )
        .unwrap();
        for (i, _) in centers.iter().enumerate() {
            let u0 = sol.predicted[5 * i];
            let stencil: Cplx = sol.predicted[5 * i + 1]
                + sol.predicted[5 * i + 2]
                + sol.predicted[5 * i + 3]
                + sol.predicted[5 * i + 4]
                - 4.0 * u0;
            let residual = stencil / (h * h) + k * k * u0;
            assert!(
                residual.norm() <= 1e-3 * u0.norm(),
                "PDE residual {:.3e} at point {i} (|u| = {:.3e})",
                residual.norm(),
                u0.norm()
            );
        }
    }

    #[test]
    fn reconstruction_rejects_on_boundary_points() {
        let field = Reference2d::Harmonic;
        let boundary = unit_square_mixed(4, [BcTag::Dirichlet; 4]).unwrap();
        let basis = ExactTrace2d { field: &field };
        let coeffs = DVector::from_element(1, Cplx::new(1.0, 0.0));
        let (g, q) = data_from(&field);
        let on_edge = vec![Vector2::new(0.5, 0.0)];
        let err = reconstruct_field_2d(
            &boundary,
            &basis,
            &coeffs,
            KernelKind::Laplace2d,
            8,
            &on_edge,
            ProblemKind::InteriorMixed,
            &g,
            &q,
        );
        assert!(matches!(err, Err(Error::PointOnBoundary)));
    }

    #[test]
    fn zero_data_reconstruction_is_zero() {
        let boundary = unit_square_mixed(6, [BcTag::Dirichlet; 4]).unwrap();
        let basis = ConstantTrace;
        let coeffs = DVector::from_element(1, Cplx::new(0.0, 0.0));
        let zero_g = |_: &Vector2<f64>| Cplx::new(0.0, 0.0);
        let zero_q = |_: &Vector2<f64>, _: &Vector2<f64>| Cplx::new(0.0, 0.0);
        let pts = vec![Vector2::new(0.4, 0.6), Vector2::new(0.7, 0.2)];
        let sol = reconstruct_field_2d(
            &boundary,
            &basis,
            &coeffs,
            KernelKind::Laplace2d,
            8,
            &pts,
            ProblemKind::InteriorMixed,
            &zero_g,
            &zero_q,
        )
        .unwrap();
        for v in &sol.predicted {
            assert!(v.norm() == 0.0);
        }
    }

    /// With zero density the scattering reconstruction reduces to the
    /// incident wave; with the exact Mie trace it approximates the total
    /// field to the flat-facet accuracy ceiling.
    #[test]
    fn scattering_reconstruction_reduces_and_matches_mie() {
        let k = 4.0;
        let mesh = sphere_mesh(1.0, 18, 19).unwrap();
        let kind = KernelKind::helmholtz3d(k).unwrap();
        let incident = PlaneWave3d::new(1.0, k, Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let pts = vec![
            Vector3::new(0.0, 0.0, 2.5),
            Vector3::new(2.0, 0.0, -1.0),
            Vector3::new(0.0, -1.8, 0.7),
            Vector3::new(1.2, 1.2, 1.2),
        ];

        let zeros = DVector::from_element(1, Cplx::new(0.0, 0.0));
        let sol = reconstruct_scattered_3d(&mesh, &ConstantTrace, &zeros, kind, &incident, &pts)
            .unwrap();
        for (p, v) in pts.iter().zip(&sol.predicted) {
            assert!((v - incident.value(p)).norm() < 1e-15);
        }

        let mie = MieSphere::new(k, 1.0).unwrap();
        let basis = ExactMieTrace { field: &mie };
        let ones = DVector::from_element(1, Cplx::new(1.0, 0.0));
        let mut sol =
            reconstruct_scattered_3d(&mesh, &basis, &ones, kind, &incident, &pts).unwrap();
        let reference: Vec<Cplx> = pts.iter().map(|p| mie.total(p).unwrap()).collect();
        sol.attach_reference(reference).unwrap();
        let rel = sol.relative_l2().unwrap();
        assert!(rel <= 7e-2, "Mie-trace reconstruction error {rel:.3e}");
    }

    /// Reconstruction agrees between a solved interior system and the
    /// analytic solution: end-to-end sanity for solve + reconstruct with a
    /// genuine feature basis.
    #[test]
    fn solve_and_reconstruct_interior_laplace() {
        use crate::assembly::FeatureTrace;
        use crate::features::{FeatureBasis, SamplerConfig};

        let field = Reference2d::Harmonic;
        let boundary = unit_square_mixed(
            15,
            [BcTag::Dirichlet, BcTag::Neumann, BcTag::Dirichlet, BcTag::Neumann],
        )
        .unwrap();
        let fb = FeatureBasis::sample(
            &SamplerConfig::Tanh { range: 1.0 },
            40,
            2,
            42,
        )
        .unwrap();
        let basis = FeatureTrace(&fb);
        let (g, q) = data_from(&field);
        let sys = assemble_interior_mixed(KernelKind::Laplace2d, &boundary, &basis, &g, &q, 10)
            .unwrap();
        let report = solve_least_squares(&sys, DEFAULT_RCOND).unwrap();
        let pts = interior_grid(&boundary, 12, None).unwrap();
        let mut sol = reconstruct_field_2d(
            &boundary,
            &basis,
            &report.coefficients,
            KernelKind::Laplace2d,
            10,
            &pts,
            ProblemKind::InteriorMixed,
            &g,
            &q,
        )
        .unwrap();
        let reference: Vec<Cplx> = pts.iter().map(|p| field.value(p).unwrap()).collect();
        sol.attach_reference(reference).unwrap();
        let rel = sol.relative_l2().unwrap();
        assert!(rel <= 1e-4, "interior Laplace field error {rel:.3e}");
    }
}
