//! Collocation assembly of dense boundary-integral systems.
//!
//! Three problem families are assembled into `A beta = b`:
//!
//! * interior mixed Dirichlet/Neumann problems in 2D (Laplace or Helmholtz),
//! * exterior Dirichlet problems in 2D (radiating Helmholtz),
//! * exterior sound-hard scattering in 3D via the Burton-Miller combined
//!   equation.
//!
//! # Sign conventions
//!
//! With the fundamental solutions of [`crate::kernels`] (e.g. `-ln r / 2pi`
//! in 2D) and outward unit normals, define the layer potentials
//!
//! ```text
//! S[h](x) = int_G  Phi(x,y)          h(y) dS_y      (single layer)
//! W[h](x) = int_G  dPhi/dn_y (x,y)   h(y) dS_y      (double layer)
//! ```
//!
//! A solution of the PDE in the interior domain satisfies
//! `u(x) = S[du/dn](x) - W[u](x)`; a radiating exterior solution satisfies
//! `u(x) = W[u](x) - S[du/dn](x)`.  The double layer jumps by `-h/2` when
//! the target approaches the boundary from inside and by `+h/2` from
//! outside (`W[1]` is `-1` inside, `-1/2` on, and `0` outside a closed
//! boundary).  Taking boundary limits yields the collocation rows below;
//! the row/rhs signs are locked by consistency tests that substitute exact
//! analytic traces and check that every row residual vanishes at quadrature
//! accuracy.
//!
//! # Quadrature dispatch
//!
//! Each collocation point is the midpoint (2D) or centroid (3D) of exactly
//! one element.  That element's integrals use the dedicated singular rules
//! (log-subtraction nodes in 2D, centroid-split Duffy nodes in 3D); other
//! elements use regular Gauss rules upgraded to graded/subdivided variants
//! when the target is closer than half an element size.

use nalgebra::{DMatrix, DVector, SVector, Vector2, Vector3};
use rayon::prelude::*;

use crate::features::FeatureBasis;
use crate::geometry::{BcTag, Boundary2d, Orientation, Panel2d, TriMesh};
use crate::kernels::{self, KernelKind};
use crate::quadrature::{
    self, duffy_nodes, gauss_legendre, panel_nodes, panel_nodes_near, panel_nodes_singular,
    triangle_nodes_near, triangle_rule_7, GaussRule, PanelQuad,
};
use crate::reference::{MieSphere, Reference2d};
use crate::{Cplx, Error, Result};

/// Duffy order for the weakly singular Helmholtz-minus-static difference
/// kernel on the self triangle (magnitude ~ k^2/8pi r).
const BM_DIFF_DUFFY: usize = 10;

/// Dirichlet boundary data: complex trace value at a boundary point.
pub type DirichletData2d<'a> = &'a (dyn Fn(&Vector2<f64>) -> Cplx + Sync);
/// Neumann boundary data: complex normal derivative at a boundary point
/// with given outward unit normal.
pub type NeumannData2d<'a> = &'a (dyn Fn(&Vector2<f64>, &Vector2<f64>) -> Cplx + Sync);

// ---------------------------------------------------------------------------
// Boundary trace bases
// ---------------------------------------------------------------------------

/// A finite family of candidate boundary traces `phi_j`.
///
/// Assembly needs, for every element and quadrature node, the values and
/// normal derivatives of all members; reconstruction needs the single
/// coefficient-weighted combination.  The `element` argument identifies the
/// panel/triangle the node lies on so that element-supported bases (constant
/// boundary elements) can be expressed; global bases ignore it.
pub trait BoundaryBasis<const D: usize>: Sync {
    /// Number of basis functions (columns of the assembled system).
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write `phi_j(y)` for all j into `out` (length `len()`).
    fn values_into(&self, element: usize, y: &SVector<f64, D>, out: &mut [Cplx]);

    /// Write `dphi_j/dn (y)` for all j into `out` (length `len()`).
    fn normal_derivs_into(
        &self,
        element: usize,
        y: &SVector<f64, D>,
        normal: &SVector<f64, D>,
        out: &mut [Cplx],
    );

    /// `sum_j coeffs[j] phi_j(y)` without temporary storage.
    fn value_dot(&self, element: usize, y: &SVector<f64, D>, coeffs: &[Cplx]) -> Cplx;

    /// `sum_j coeffs[j] dphi_j/dn (y)` without temporary storage.
    fn normal_deriv_dot(
        &self,
        element: usize,
        y: &SVector<f64, D>,
        normal: &SVector<f64, D>,
        coeffs: &[Cplx],
    ) -> Cplx;
}

/// Random-feature trace: `phi_j(x) = sigma(<w_j, x> + b_j)` everywhere on
/// the boundary, independent of the element.
pub struct FeatureTrace<'a>(pub &'a FeatureBasis);

impl<const D: usize> BoundaryBasis<D> for FeatureTrace<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn values_into(&self, _element: usize, y: &SVector<f64, D>, out: &mut [Cplx]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = Cplx::new(self.0.value(j, y), 0.0);
        }
    }

    fn normal_derivs_into(
        &self,
        _element: usize,
        y: &SVector<f64, D>,
        normal: &SVector<f64, D>,
        out: &mut [Cplx],
    ) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = Cplx::new(self.0.normal_deriv(j, y, normal), 0.0);
        }
    }

    fn value_dot(&self, _element: usize, y: &SVector<f64, D>, coeffs: &[Cplx]) -> Cplx {
        let mut acc = Cplx::new(0.0, 0.0);
        for (j, c) in coeffs.iter().enumerate() {
            acc += c * self.0.value(j, y);
        }
        acc
    }

    fn normal_deriv_dot(
        &self,
        _element: usize,
        y: &SVector<f64, D>,
        normal: &SVector<f64, D>,
        coeffs: &[Cplx],
    ) -> Cplx {
        let mut acc = Cplx::new(0.0, 0.0);
        for (j, c) in coeffs.iter().enumerate() {
            acc += c * self.0.normal_deriv(j, y, normal);
        }
        acc
    }
}

/// Piecewise-constant trace basis: `phi_j = 1` on element j, `0` elsewhere.
///
/// With this basis the generic assembly reduces exactly to the classical
/// constant-element collocation BEM: each element carries one unknown (the
/// trace component its boundary condition leaves free), so both the value
/// and the normal-derivative query return the indicator of the element —
/// the boundary-condition tag decides which one a given integral uses.
pub struct IndicatorBasis {
    pub n_elements: usize,
}

impl<const D: usize> BoundaryBasis<D> for IndicatorBasis {
    fn len(&self) -> usize {
        self.n_elements
    }

    fn values_into(&self, element: usize, _y: &SVector<f64, D>, out: &mut [Cplx]) {
        out.fill(Cplx::new(0.0, 0.0));
        out[element] = Cplx::new(1.0, 0.0);
    }

    fn normal_derivs_into(
        &self,
        element: usize,
        _y: &SVector<f64, D>,
        _normal: &SVector<f64, D>,
        out: &mut [Cplx],
    ) {
        out.fill(Cplx::new(0.0, 0.0));
        out[element] = Cplx::new(1.0, 0.0);
    }

    fn value_dot(&self, element: usize, _y: &SVector<f64, D>, coeffs: &[Cplx]) -> Cplx {
        coeffs[element]
    }

    fn normal_deriv_dot(
        &self,
        element: usize,
        _y: &SVector<f64, D>,
        _normal: &SVector<f64, D>,
        coeffs: &[Cplx],
    ) -> Cplx {
        coeffs[element]
    }
}

/// Single-member basis carrying the exact trace of an analytic 2D field.
///
/// With coefficient vector `[1]` the assembled system must be satisfied up
/// to quadrature error, which pins every sign in the collocation rows; the
/// same trace reproduces the field inside the domain through the
/// representation formula.
pub struct ExactTrace2d<'a> {
    pub field: &'a Reference2d,
}

impl BoundaryBasis<2> for ExactTrace2d<'_> {
    fn len(&self) -> usize {
        1
    }

    fn values_into(&self, _element: usize, y: &Vector2<f64>, out: &mut [Cplx]) {
        out[0] = self
            .field
            .value(y)
            .expect("reference field undefined at a boundary point");
    }

    fn normal_derivs_into(
        &self,
        _element: usize,
        y: &Vector2<f64>,
        normal: &Vector2<f64>,
        out: &mut [Cplx],
    ) {
        out[0] = self
            .field
            .normal_derivative(y, normal)
            .expect("reference field undefined at a boundary point");
    }

    fn value_dot(&self, element: usize, y: &Vector2<f64>, coeffs: &[Cplx]) -> Cplx {
        let mut v = [Cplx::new(0.0, 0.0)];
        self.values_into(element, y, &mut v);
        coeffs[0] * v[0]
    }

    fn normal_deriv_dot(
        &self,
        element: usize,
        y: &Vector2<f64>,
        normal: &Vector2<f64>,
        coeffs: &[Cplx],
    ) -> Cplx {
        let mut v = [Cplx::new(0.0, 0.0)];
        self.normal_derivs_into(element, y, normal, &mut v);
        coeffs[0] * v[0]
    }
}

/// Single-member basis carrying the exact sound-hard total trace on a
/// sphere.  Mesh points are radially projected onto the true sphere, so the
/// trace is exact even though the flat-triangle surface sits slightly
/// inside it; the normal derivative vanishes (sound-hard condition).
pub struct ExactMieTrace<'a> {
    pub field: &'a MieSphere,
}

impl BoundaryBasis<3> for ExactMieTrace<'_> {
    fn len(&self) -> usize {
        1
    }

    fn values_into(&self, _element: usize, y: &Vector3<f64>, out: &mut [Cplx]) {
        let r = y.norm();
        let on_sphere = y * (self.field.radius / r);
        out[0] = self
            .field
            .total(&on_sphere)
            .expect("scattering series undefined at a surface point");
    }

    fn normal_derivs_into(
        &self,
        _element: usize,
        _y: &Vector3<f64>,
        _normal: &Vector3<f64>,
        out: &mut [Cplx],
    ) {
        out[0] = Cplx::new(0.0, 0.0);
    }

    fn value_dot(&self, element: usize, y: &Vector3<f64>, coeffs: &[Cplx]) -> Cplx {
        let mut v = [Cplx::new(0.0, 0.0)];
        self.values_into(element, y, &mut v);
        coeffs[0] * v[0]
    }

    fn normal_deriv_dot(
        &self,
        _element: usize,
        _y: &Vector3<f64>,
        _normal: &Vector3<f64>,
        _coeffs: &[Cplx],
    ) -> Cplx {
        Cplx::new(0.0, 0.0)
    }
}

/// Single-member basis with trace 1 and normal derivative 0 (the constant
/// solution of the Laplace equation); used by flux-identity tests.
pub struct ConstantTrace;

impl<const D: usize> BoundaryBasis<D> for ConstantTrace {
    fn len(&self) -> usize {
        1
    }

    fn values_into(&self, _element: usize, _y: &SVector<f64, D>, out: &mut [Cplx]) {
        out[0] = Cplx::new(1.0, 0.0);
    }

    fn normal_derivs_into(
        &self,
        _element: usize,
        _y: &SVector<f64, D>,
        _normal: &SVector<f64, D>,
        out: &mut [Cplx],
    ) {
        out[0] = Cplx::new(0.0, 0.0);
    }

    fn value_dot(&self, _element: usize, _y: &SVector<f64, D>, coeffs: &[Cplx]) -> Cplx {
        coeffs[0]
    }

    fn normal_deriv_dot(
        &self,
        _element: usize,
        _y: &SVector<f64, D>,
        _normal: &SVector<f64, D>,
        _coeffs: &[Cplx],
    ) -> Cplx {
        Cplx::new(0.0, 0.0)
    }
}

// ---------------------------------------------------------------------------
// Assembled system
// ---------------------------------------------------------------------------

/// Which boundary-value problem a system discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    InteriorMixed,
    ExteriorDirichlet,
    BurtonMiller,
}

/// Per-row collocation metadata (3D layout; 2D rows use z = 0).
#[derive(Debug, Clone, Copy)]
pub struct RowMeta {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub bc: BcTag,
}

/// Dense collocation system `A beta = b`.
pub struct BiSystem {
    pub matrix: DMatrix<Cplx>,
    pub rhs: DVector<Cplx>,
    pub rows: Vec<RowMeta>,
    pub problem: ProblemKind,
}

impl BiSystem {
    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Error out if any matrix or right-hand-side entry is non-finite.
    pub fn check_finite(&self) -> Result<()> {
        let ok = self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.rhs.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::NumericalFailure(
                "assembled system contains a non-finite entry".into(),
            ))
        }
    }

    fn into_checked(self) -> Result<Self> {
        self.check_finite()?;
        Ok(self)
    }

    /// Plain-text dump of `A` and `b` in a matrix-market-style format:
    /// an `array complex general` block for the matrix (column-major),
    /// followed by a comment line and the right-hand side.
    pub fn write_matrix_market(&self, path: &std::path::Path) -> Result<()> {
        use std::fmt::Write as _;
        let (n, m) = (self.n_rows(), self.n_cols());
        let mut text = String::new();
        text.push_str("%%MatrixMarket matrix array complex general\n");
        text.push_str("% collocation matrix (column-major), rhs appended after the '% rhs' line\n");
        let _ = writeln!(text, "{n} {m}");
        for j in 0..m {
            for i in 0..n {
                let z = self.matrix[(i, j)];
                let _ = writeln!(text, "{:.17e} {:.17e}", z.re, z.im);
            }
        }
        text.push_str("% rhs\n");
        for i in 0..n {
            let z = self.rhs[i];
            let _ = writeln!(text, "{:.17e} {:.17e}", z.re, z.im);
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// 2D assembly
// ---------------------------------------------------------------------------

/// Nodes on `panel` for a target point that does not lie on the panel:
/// graded toward the closest point when the target is within half a panel
/// length, plain Gauss otherwise.
pub(crate) fn nodes_for_target(
    panel: &Panel2d,
    rule: &GaussRule,
    x: &Vector2<f64>,
) -> PanelQuad {
    if quadrature::is_near_panel(panel, x) {
        panel_nodes_near(panel, rule, x)
    } else {
        panel_nodes(panel, rule)
    }
}

fn row_meta_2d(point: &Vector2<f64>, normal: &Vector2<f64>, bc: BcTag) -> RowMeta {
    RowMeta {
        point: [point.x, point.y, 0.0],
        normal: [normal.x, normal.y, 0.0],
        bc,
    }
}

/// Interior mixed Dirichlet/Neumann collocation system.
///
/// Unknown trace: `du/dn ~ sum_j beta_j dphi_j/dn` on Dirichlet panels and
/// `u ~ sum_j beta_j phi_j` on Neumann panels.  Row at a collocation point
/// `x_i` (outward normal `n_i`, `S_e`/`W_e` denoting per-panel layer
/// integrals):
///
/// ```text
/// sum_j beta_j [ sum_{e in D} S_e[dphi_j/dn](x_i) - sum_{e in N} W_e[phi_j](x_i)
///                - (1/2) phi_j(x_i) if x_i Neumann ]
///   = (1/2) g(x_i) if x_i Dirichlet
///     + sum_{e in D} W_e[g](x_i) - sum_{e in N} S_e[q](x_i)
/// ```
pub fn assemble_interior_mixed<B: BoundaryBasis<2>>(
    kind: KernelKind,
    boundary: &Boundary2d,
    basis: &B,
    g: DirichletData2d,
    q: NeumannData2d,
    n_gauss: usize,
) -> Result<BiSystem> {
    if kind.dim() != 2 {
        return Err(Error::InvalidConfig(
            "interior mixed assembly requires a 2D kernel".into(),
        ));
    }
    if boundary.orientation != Orientation::Interior {
        return Err(Error::InvalidConfig(
            "interior mixed assembly requires an interior-oriented boundary".into(),
        ));
    }
    let m = basis.len();
    if m == 0 {
        return Err(Error::InvalidConfig("empty trace basis".into()));
    }
    let rule = gauss_legendre(n_gauss)?;
    let log_coeff = kind.log_coefficient();
    let cps = boundary.collocation_points();
    let n = cps.len();

    let mut matrix = DMatrix::from_element(n, m, Cplx::new(0.0, 0.0));
    let mut rhs = DVector::from_element(n, Cplx::new(0.0, 0.0));
    let mut rows = Vec::with_capacity(n);
    let mut scratch = vec![Cplx::new(0.0, 0.0); m];
    let mut mid = vec![Cplx::new(0.0, 0.0); m];

    for (i, cp) in cps.iter().enumerate() {
        rows.push(row_meta_2d(&cp.point, &cp.normal, cp.bc));
        let mut row = vec![Cplx::new(0.0, 0.0); m];
        let mut b = Cplx::new(0.0, 0.0);
        if cp.bc == BcTag::Dirichlet {
            b += 0.5 * g(&cp.point);
        }

        for (e, panel) in boundary.panels.iter().enumerate() {
            // The own-panel singular rule is keyed by panel index: anchored
            // chords still integrate as if collocated at the chord center,
            // keeping the principal value and the 1/2 jump a consistent
            // pair, while the anchor only displaces the smooth couplings.
            let self_panel = e == cp.panel;
            match panel.bc {
                // LHS  + S_e[dphi_j/dn],  RHS  + W_e[g]
                BcTag::Dirichlet => {
                    if self_panel {
                        let sq = panel_nodes_singular(panel, &rule);
                        basis.normal_derivs_into(e, &cp.point, &cp.normal, &mut mid);
                        for (idx, w) in sq.quad.weights.iter().enumerate() {
                            let y = &sq.quad.points[idx];
                            let nv = &sq.quad.normals[idx];
                            let phi = kind.phi(sq.r_chord[idx]);
                            let sub = log_coeff * sq.rho[idx].ln();
                            basis.normal_derivs_into(e, y, nv, &mut scratch);
                            for j in 0..m {
                                row[j] += w * (phi * scratch[j] - sub * mid[j]);
                            }
                            let wker = kind.phi_deriv(sq.r_chord[idx]) * (-sq.dn_over_r[idx]);
                            b += w * wker * g(y);
                        }
                        let tail = log_coeff * sq.log_moment;
                        for j in 0..m {
                            row[j] += tail * mid[j];
                        }
                    } else {
                        let nodes = nodes_for_target(panel, &rule, &cp.point);
                        for (idx, w) in nodes.weights.iter().enumerate() {
                            let y = &nodes.points[idx];
                            let nv = &nodes.normals[idx];
                            let phi = kernels::fundamental::<2>(kind, &cp.point, y)?;
                            let wker =
                                kernels::normal_derivative_y::<2>(kind, &cp.point, y, nv)?;
                            basis.normal_derivs_into(e, y, nv, &mut scratch);
                            let wphi = phi * *w;
                            for j in 0..m {
                                row[j] += wphi * scratch[j];
                            }
                            b += w * wker * g(y);
                        }
                    }
                }
                // LHS  - W_e[phi_j],  RHS  - S_e[q]
                BcTag::Neumann => {
                    if self_panel {
                        let sq = panel_nodes_singular(panel, &rule);
                        let q0 = q(&cp.point, &cp.normal);
                        for (idx, w) in sq.quad.weights.iter().enumerate() {
                            let y = &sq.quad.points[idx];
                            let nv = &sq.quad.normals[idx];
                            let wker = kind.phi_deriv(sq.r_chord[idx]) * (-sq.dn_over_r[idx]);
                            basis.values_into(e, y, &mut scratch);
                            let ww = wker * *w;
                            for j in 0..m {
                                row[j] -= ww * scratch[j];
                            }
                            let phi = kind.phi(sq.r_chord[idx]);
                            let sub = log_coeff * sq.rho[idx].ln();
                            b -= w * (phi * q(y, nv) - sub * q0);
                        }
                        b -= log_coeff * sq.log_moment * q0;
                    } else {
                        let nodes = nodes_for_target(panel, &rule, &cp.point);
                        for (idx, w) in nodes.weights.iter().enumerate() {
                            let y = &nodes.points[idx];
                            let nv = &nodes.normals[idx];
                            let phi = kernels::fundamental::<2>(kind, &cp.point, y)?;
                            let wker =
                                kernels::normal_derivative_y::<2>(kind, &cp.point, y, nv)?;
                            basis.values_into(e, y, &mut scratch);
                            let ww = wker * *w;
                            for j in 0..m {
                                row[j] -= ww * scratch[j];
                            }
                            b -= w * phi * q(y, nv);
                        }
                    }
                }
            }
        }

        if cp.bc == BcTag::Neumann {
            basis.values_into(cp.panel, &cp.point, &mut scratch);
            for j in 0..m {
                row[j] -= 0.5 * scratch[j];
            }
        }

        for j in 0..m {
            matrix[(i, j)] = row[j];
        }
        rhs[i] = b;
    }

    BiSystem {
        matrix,
        rhs,
        rows,
        problem: ProblemKind::InteriorMixed,
    }
    .into_checked()
}

/// Exterior Dirichlet collocation system (radiating Helmholtz).
///
/// Unknown trace: `q = du/dn ~ sum_j beta_j dphi_j/dn` on the whole
/// boundary.  Row at `x_i`:
///
/// ```text
/// sum_j beta_j [ -S[dphi_j/dn](x_i) ] = (1/2) g(x_i) - W[g](x_i)
/// ```
pub fn assemble_exterior_dirichlet<B: BoundaryBasis<2>>(
    kind: KernelKind,
    boundary: &Boundary2d,
    basis: &B,
    g: DirichletData2d,
    n_gauss: usize,
) -> Result<BiSystem> {
    exterior_dirichlet_core(kind, boundary, basis, |_, y| g(y), n_gauss)
}

/// Exterior Dirichlet system with the known trace supplied as one constant
/// per panel instead of a closure.
///
/// This is the classical element form `H g = G q`: the given boundary data
/// enters the rows through the same piecewise-constant space that carries the
/// unknown, so its sampling error is part of the discretization rather than
/// being integrated away.  Element solvers use this; closure-based trial
/// spaces keep [`assemble_exterior_dirichlet`].
pub fn assemble_exterior_dirichlet_elementwise<B: BoundaryBasis<2>>(
    kind: KernelKind,
    boundary: &Boundary2d,
    basis: &B,
    trace: &DVector<Cplx>,
    n_gauss: usize,
) -> Result<BiSystem> {
    if trace.len() != boundary.len() {
        return Err(Error::InvalidConfig(format!(
            "elementwise trace has {} entries for {} panels",
            trace.len(),
            boundary.len()
        )));
    }
    exterior_dirichlet_core(kind, boundary, basis, |e, _| trace[e], n_gauss)
}

fn exterior_dirichlet_core<B: BoundaryBasis<2>>(
    kind: KernelKind,
    boundary: &Boundary2d,
    basis: &B,
    trace_at: impl Fn(usize, &Vector2<f64>) -> Cplx,
    n_gauss: usize,
) -> Result<BiSystem> {
    match kind {
        KernelKind::Helmholtz2d { .. } => {}
        _ => {
            return Err(Error::InvalidConfig(
                "exterior Dirichlet assembly requires a radiating 2D Helmholtz kernel".into(),
            ))
        }
    }
    if boundary.orientation != Orientation::Exterior {
        return Err(Error::InvalidConfig(
            "exterior assembly requires an exterior-oriented boundary".into(),
        ));
    }
    if boundary.panels.iter().any(|p| p.bc != BcTag::Dirichlet) {
        return Err(Error::InvalidConfig(
            "exterior Dirichlet assembly requires every panel tagged Dirichlet".into(),
        ));
    }
    let m = basis.len();
    if m == 0 {
        return Err(Error::InvalidConfig("empty trace basis".into()));
    }
    let rule = gauss_legendre(n_gauss)?;
    let log_coeff = kind.log_coefficient();
    let cps = boundary.collocation_points();
    let n = cps.len();

    let mut matrix = DMatrix::from_element(n, m, Cplx::new(0.0, 0.0));
    let mut rhs = DVector::from_element(n, Cplx::new(0.0, 0.0));
    let mut rows = Vec::with_capacity(n);
    let mut scratch = vec![Cplx::new(0.0, 0.0); m];
    let mut mid = vec![Cplx::new(0.0, 0.0); m];

    for (i, cp) in cps.iter().enumerate() {
        rows.push(row_meta_2d(&cp.point, &cp.normal, cp.bc));
        let mut row = vec![Cplx::new(0.0, 0.0); m];
        let mut b = 0.5 * trace_at(cp.panel, &cp.point);

        for (e, panel) in boundary.panels.iter().enumerate() {
            if e == cp.panel {
                let sq = panel_nodes_singular(panel, &rule);
                basis.normal_derivs_into(e, &cp.point, &cp.normal, &mut mid);
                for (idx, w) in sq.quad.weights.iter().enumerate() {
                    let y = &sq.quad.points[idx];
                    let nv = &sq.quad.normals[idx];
                    let phi = kind.phi(sq.r_chord[idx]);
                    let sub = log_coeff * sq.rho[idx].ln();
                    basis.normal_derivs_into(e, y, nv, &mut scratch);
                    for j in 0..m {
                        row[j] -= w * (phi * scratch[j] - sub * mid[j]);
                    }
                    let wker = kind.phi_deriv(sq.r_chord[idx]) * (-sq.dn_over_r[idx]);
                    b -= w * wker * trace_at(e, y);
                }
                let tail = log_coeff * sq.log_moment;
                for j in 0..m {
                    row[j] -= tail * mid[j];
                }
            } else {
                let nodes = nodes_for_target(panel, &rule, &cp.point);
                for (idx, w) in nodes.weights.iter().enumerate() {
                    let y = &nodes.points[idx];
                    let nv = &nodes.normals[idx];
                    let phi = kernels::fundamental::<2>(kind, &cp.point, y)?;
                    let wker = kernels::normal_derivative_y::<2>(kind, &cp.point, y, nv)?;
                    basis.normal_derivs_into(e, y, nv, &mut scratch);
                    let wphi = phi * *w;
                    for j in 0..m {
                        row[j] -= wphi * scratch[j];
                    }
                    b -= w * wker * trace_at(e, y);
                }
            }
        }

        for j in 0..m {
            matrix[(i, j)] = row[j];
        }
        rhs[i] = b;
    }

    BiSystem {
        matrix,
        rhs,
        rows,
        problem: ProblemKind::ExteriorDirichlet,
    }
    .into_checked()
}

// ---------------------------------------------------------------------------
// 3D Burton-Miller assembly
// ---------------------------------------------------------------------------

/// Incident plane wave `A exp(i k d.x)` with unit direction `d`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave3d {
    pub amplitude: f64,
    pub k: f64,
    pub dir: Vector3<f64>,
}

impl PlaneWave3d {
    pub fn new(amplitude: f64, k: f64, dir: Vector3<f64>) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::NonPositiveArgument("plane wave wavenumber"));
        }
        let norm = dir.norm();
        if norm < 1e-14 {
            return Err(Error::DegenerateGeometry("zero plane-wave direction"));
        }
        Ok(PlaneWave3d {
            amplitude,
            k,
            dir: dir / norm,
        })
    }

    pub fn value(&self, x: &Vector3<f64>) -> Cplx {
        self.amplitude * (Cplx::I * self.k * self.dir.dot(x)).exp()
    }

    pub fn gradient(&self, x: &Vector3<f64>) -> [Cplx; 3] {
        let v = Cplx::I * self.k * self.value(x);
        [v * self.dir.x, v * self.dir.y, v * self.dir.z]
    }

    pub fn normal_derivative(&self, x: &Vector3<f64>, n: &Vector3<f64>) -> Cplx {
        Cplx::I * self.k * self.dir.dot(n) * self.value(x)
    }
}

/// Customary Burton-Miller coupling parameter `i / (k + 1)`.
pub fn burton_miller_mu(k: f64) -> Cplx {
    Cplx::I / (k + 1.0)
}

/// Hadamard finite part of the static hypersingular kernel over a flat
/// triangle, evaluated at the triangle's own centroid.
///
/// On the self-triangle both `(x - y) . n` factors vanish, so the static
/// kernel reduces to `1/(4 pi r^3)`.  In polar coordinates around the
/// centroid the finite part of the radial integral is `-1/R(theta)`, giving
///
/// ```text
/// fp = -(1/4pi) * integral_0^{2pi} dtheta / R(theta)
/// ```
///
/// where `R(theta)` is the centroid-to-edge distance in direction `theta`.
/// Each edge contributes `(sin a_2 - sin a_1)/d` with `d` the perpendicular
/// distance to the edge line and `a_1, a_2` the signed angles of the edge
/// endpoints about the perpendicular foot.
pub fn flat_triangle_finite_part(corners: &[Vector3<f64>; 3]) -> Result<f64> {
    let c = (corners[0] + corners[1] + corners[2]) / 3.0;
    let mut angular = 0.0;
    for e in 0..3 {
        let a = corners[e] - c;
        let b = corners[(e + 1) % 3] - c;
        let edge = b - a;
        let len2 = edge.norm_squared();
        if len2 == 0.0 {
            return Err(Error::DegenerateGeometry("zero-length triangle edge"));
        }
        // Perpendicular foot from the centroid onto the edge line, and the
        // signed endpoint coordinates along the edge with origin at the foot.
        let t_foot = -a.dot(&edge) / len2;
        let d = (a + t_foot * edge).norm();
        if d < 1e-300 {
            return Err(Error::DegenerateGeometry("centroid on triangle edge"));
        }
        let el = len2.sqrt();
        let ta = -t_foot * el;
        let tb = (1.0 - t_foot) * el;
        angular += (tb / tb.hypot(d) - ta / ta.hypot(d)) / d;
    }
    Ok(-angular / (4.0 * std::f64::consts::PI))
}

/// Burton-Miller collocation system for sound-hard scattering.
///
/// Unknown: total-field surface trace `u ~ sum_j beta_j phi_j`.  With the
/// double-layer operator `M_k`, hypersingular operator `N_k`, and centroid
/// collocation, row i is
///
/// ```text
/// sum_j beta_j [ (M_k phi_j)(x_i) - (1/2) phi_j(x_i) + mu (N_k phi_j)(x_i) ]
///   = -phi_inc(x_i) - mu v_inc(x_i),        v_inc = dphi_inc/dn
/// ```
///
/// Self-triangle treatment: the `M_k` term vanishes exactly on a flat
/// triangle; the `N_k` term splits into the static part, taken as the exact
/// Hadamard finite part of the flat-triangle kernel at the centroid (closed
/// form, see [`flat_triangle_finite_part`]), plus a Duffy-rule integral of
/// the weakly singular Helmholtz-minus-static kernel difference.  The static
/// finite part is pinned by the identity `N_0[1] = 0` on any closed surface:
/// per row it must cancel the punched sum of the off-diagonal static
/// entries.
pub fn assemble_burton_miller<B: BoundaryBasis<3>>(
    kind: KernelKind,
    mesh: &TriMesh,
    basis: &B,
    incident: &PlaneWave3d,
    mu: Cplx,
) -> Result<BiSystem> {
    let k = match kind {
        KernelKind::Helmholtz3d { k } => k,
        _ => {
            return Err(Error::InvalidConfig(
                "Burton-Miller assembly requires a 3D Helmholtz kernel".into(),
            ))
        }
    };
    if (k - incident.k).abs() > 1e-12 * k.max(1.0) {
        return Err(Error::InvalidConfig(
            "incident wavenumber must match the kernel wavenumber".into(),
        ));
    }
    if mu.norm() == 0.0 {
        return Err(Error::InvalidConfig(
            "Burton-Miller coupling parameter must be nonzero".into(),
        ));
    }
    let m = basis.len();
    if m == 0 {
        return Err(Error::InvalidConfig("empty trace basis".into()));
    }
    let static_kind = KernelKind::Laplace3d;
    let rule = triangle_rule_7();
    let n = mesh.len();

    // Finite-part diagonal of the static hypersingular operator.
    let fp_static: Vec<f64> = (0..n)
        .map(|e| flat_triangle_finite_part(&mesh.corners(e)))
        .collect::<Result<Vec<_>>>()?;

    let assembled: Vec<(Vec<Cplx>, Cplx)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<Cplx>, Cplx)> {
            let xi = mesh.centroid(i);
            let ni = mesh.normal(i);
            let mut row = vec![Cplx::new(0.0, 0.0); m];
            let mut scratch = vec![Cplx::new(0.0, 0.0); m];

            for e in 0..n {
                let corners = mesh.corners(e);
                let ne = mesh.normal(e);
                if e == i {
                    // M_k self term: (x_i - y).n_e = 0 on the flat triangle.
                    // N_k self term: finite part + weakly singular difference.
                    basis.values_into(e, &xi, &mut scratch);
                    let fp = mu * fp_static[e];
                    for j in 0..m {
                        row[j] += fp * scratch[j];
                    }
                    let dq = duffy_nodes(&corners, BM_DIFF_DUFFY)?;
                    for (y, w) in dq.points.iter().zip(&dq.weights) {
                        let kk = kernels::hypersingular::<3>(kind, &xi, &ni, y, &ne)?;
                        let k0 = kernels::hypersingular::<3>(static_kind, &xi, &ni, y, &ne)?;
                        basis.values_into(e, y, &mut scratch);
                        let c = mu * *w * (kk - k0);
                        for j in 0..m {
                            row[j] += c * scratch[j];
                        }
                    }
                } else {
                    let nodes = triangle_nodes_near(&corners, &rule, &xi);
                    for (y, w) in nodes.points.iter().zip(&nodes.weights) {
                        let mker = kernels::normal_derivative_y::<3>(kind, &xi, y, &ne)?;
                        let nker = kernels::hypersingular::<3>(kind, &xi, &ni, y, &ne)?;
                        basis.values_into(e, y, &mut scratch);
                        let c = (mker + mu * nker) * *w;
                        for j in 0..m {
                            row[j] += c * scratch[j];
                        }
                    }
                }
            }

            basis.values_into(i, &xi, &mut scratch);
            for j in 0..m {
                row[j] -= 0.5 * scratch[j];
            }

            let phi_inc = incident.value(&xi);
            let v_inc = incident.normal_derivative(&xi, &ni);
            Ok((row, -phi_inc - mu * v_inc))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut matrix = DMatrix::from_element(n, m, Cplx::new(0.0, 0.0));
    let mut rhs = DVector::from_element(n, Cplx::new(0.0, 0.0));
    let mut rows = Vec::with_capacity(n);
    for (i, (row, b)) in assembled.into_iter().enumerate() {
        for j in 0..m {
            matrix[(i, j)] = row[j];
        }
        rhs[i] = b;
        let c = mesh.centroid(i);
        let nv = mesh.normal(i);
        rows.push(RowMeta {
            point: [c.x, c.y, c.z],
            normal: [nv.x, nv.y, nv.z],
            bc: BcTag::Neumann,
        });
    }

    BiSystem {
        matrix,
        rhs,
        rows,
        problem: ProblemKind::BurtonMiller,
    }
    .into_checked()
}
