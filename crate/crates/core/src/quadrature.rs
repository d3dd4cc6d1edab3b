//! Quadrature rules: Gauss-Legendre on panels (regular, graded near-singular
//! and log-singular variants) and degree-5 triangle rules with a Duffy
//! transform for weakly singular self-integrals.

use crate::geometry::{Panel2d, TriMesh};
use crate::{Error, Result};
use nalgebra::{Vector2, Vector3};

/// Maximum supported Gauss-Legendre order.
pub const MAX_GAUSS_ORDER: usize = 64;

/// Geometric refinement levels used for on-panel (log-singular) integrals.
/// The innermost sub-interval has relative length 2^-34, far below any
/// integrand feature, while keeping quadrature nodes clear of the exact
/// singular point.
const SINGULAR_LEVELS: usize = 34;

/// Subdivision depth bound for near-singular triangle quadrature.
const TRI_NEAR_MAX_DEPTH: usize = 4;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre rule of order n (exact for polynomials of degree 2n-1),
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    if n == 0 || n > MAX_GAUSS_ORDER {
        return Err(Error::InvalidConfig(format!(
            "Gauss-Legendre order must be in 1..={MAX_GAUSS_ORDER}, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th root (descending order)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_and_deriv(n, x);
                x -= p2 / d2;
                dp = legendre_and_deriv(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussRule { nodes, weights })
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature nodes on a panel: points, outward normals and surface-measure
/// weights (summing to the panel arc length).
#[derive(Debug, Clone)]
pub struct PanelQuad {
    pub points: Vec<Vector2<f64>>,
    pub normals: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
}

impl PanelQuad {
    fn with_capacity(n: usize) -> Self {
        PanelQuad {
            points: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        }
    }

    fn push_interval(&mut self, panel: &Panel2d, rule: &GaussRule, lo: f64, hi: f64) {
        let jac = panel.jacobian();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = 0.5 * ((hi - lo) * x + hi + lo);
            self.points.push(panel.point(t));
            self.normals.push(panel.normal(t));
            self.weights.push(0.5 * (hi - lo) * w * jac);
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Regular quadrature over the whole panel.
pub fn panel_nodes(panel: &Panel2d, rule: &GaussRule) -> PanelQuad {
    let mut q = PanelQuad::with_capacity(rule.len());
    q.push_interval(panel, rule, -1.0, 1.0);
    q
}

/// Intervals of [a, b] refined geometrically (ratio 1/2) toward b.
fn graded_toward(a: f64, b: f64, levels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(levels + 1);
    let mut lo = a;
    for _ in 0..levels {
        let mid = b - 0.5 * (b - lo);
        out.push((lo, mid));
        lo = mid;
    }
    out.push((lo, b));
    out
}

/// Graded quadrature refined toward parameter `t_star` from both sides.
pub fn panel_nodes_graded(
    panel: &Panel2d,
    rule: &GaussRule,
    t_star: f64,
    levels: usize,
) -> PanelQuad {
    let t_star = t_star.clamp(-1.0, 1.0);
    let mut q = PanelQuad::with_capacity(2 * (levels + 1) * rule.len());
    if t_star + 1.0 > 1e-13 {
        for (lo, hi) in graded_toward(-1.0, t_star, levels) {
            q.push_interval(panel, rule, lo, hi);
        }
    }
    if 1.0 - t_star > 1e-13 {
        for (lo, hi) in graded_toward(1.0, t_star, levels) {
            // intervals come back with lo > hi on this side; normalize
            q.push_interval(panel, rule, hi.min(lo), hi.max(lo));
        }
    }
    q
}

/// Quadrature for a target point near (but off) the panel: graded toward the
/// closest parameter, with depth matched to the target distance.
pub fn panel_nodes_near(panel: &Panel2d, rule: &GaussRule, x0: &Vector2<f64>) -> PanelQuad {
    let t_star = panel.closest_parameter(x0);
    let len = panel.length();
    let d = panel.distance(x0).max(1e-13 * len);
    let levels = ((len / d).log2().ceil() as isize + 4).clamp(8, SINGULAR_LEVELS as isize);
    panel_nodes_graded(panel, rule, t_star, levels as usize)
}

/// Whether a target point should use the near-singular panel rule.
pub fn is_near_panel(panel: &Panel2d, x0: &Vector2<f64>) -> bool {
    panel.distance(x0) < 0.5 * panel.length()
}

/// Node set for integrands singular at the panel midpoint, with the data
/// needed for stable evaluation there.
///
/// Single layer (logarithmic singularity) by log subtraction:
///
///   int k(x0, y) f(y) dS
///     = int [ k(x0, y) f(y) - c ln(rho(y)) f(x0) ] dS  +  c f(x0) Lambda
///
/// where rho is the arc-length (geodesic) distance from the midpoint, c is
/// the kernel's log coefficient, and Lambda = int ln(rho) dS has the closed
/// form L (ln(L/2) - 1). The bracketed integrand is continuous and is
/// integrated on the graded nodes.
///
/// Double layer: the kernel is phi'(r) * (-(x0 - y).n / r). Both r and the
/// projection factor are supplied per node in closed form, because forming
/// (x0 - y).n from coordinates loses all significant digits as y -> x0 on
/// curved panels (the true value ~ r^2 drowns in rounding noise ~ 1e-17
/// amplified by phi' ~ 1/r).
#[derive(Debug, Clone)]
pub struct SingularPanelQuad {
    pub quad: PanelQuad,
    /// Geodesic distance from the panel midpoint to each node.
    pub rho: Vec<f64>,
    /// Euclidean (chord) distance from the midpoint to each node:
    /// rho for straight panels, 2 R sin(rho / 2R) for arcs.
    pub r_chord: Vec<f64>,
    /// Exact value of (x0 - y).n_y / r at each node: 0 on straight panels,
    /// -sign(sweep) sin(rho / 2R) on arcs.
    pub dn_over_r: Vec<f64>,
    /// Exact value of `int ln(rho) dS` over the panel.
    pub log_moment: f64,
}

/// Graded nodes for an integrand singular at the panel midpoint.
pub fn panel_nodes_singular(panel: &Panel2d, rule: &GaussRule) -> SingularPanelQuad {
    let jac = panel.jacobian();
    let n_nodes = 2 * (SINGULAR_LEVELS + 1) * rule.len();
    let mut quad = PanelQuad::with_capacity(n_nodes);
    let mut rho = Vec::with_capacity(n_nodes);
    let mut r_chord = Vec::with_capacity(n_nodes);
    let mut dn_over_r = Vec::with_capacity(n_nodes);
    let arc = panel.arc_radius().zip(panel.arc_sweep_sign());
    for side in [-1.0, 1.0] {
        for (a, b) in graded_toward(side, 0.0, SINGULAR_LEVELS) {
            let (lo, hi) = (a.min(b), a.max(b));
            quad.push_interval(panel, rule, lo, hi);
            for x in &rule.nodes {
                let t = 0.5 * ((hi - lo) * x + hi + lo);
                let p = jac * t.abs();
                rho.push(p);
                match arc {
                    None => {
                        r_chord.push(p);
                        dn_over_r.push(0.0);
                    }
                    Some((radius, sign)) => {
                        let half = 0.5 * p / radius;
                        r_chord.push(2.0 * radius * half.sin());
                        dn_over_r.push(-sign * half.sin());
                    }
                }
            }
        }
    }
    debug_assert_eq!(rho.len(), quad.len());
    let len = panel.length();
    let log_moment = len * ((0.5 * len).ln() - 1.0);
    SingularPanelQuad {
        quad,
        rho,
        r_chord,
        dn_over_r,
        log_moment,
    }
}

/// Symmetric quadrature rule on a triangle in barycentric coordinates;
/// weights sum to one, so integrals are `area * sum(w_i f(x_i))`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Seven-point degree-5 rule (centroid plus two symmetric orbits).
pub fn triangle_rule_7() -> TriangleRule {
    let s15 = 15.0_f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w0 = 9.0 / 40.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let mut bary = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![w0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        bary.push([b, a, a]);
        bary.push([a, b, a]);
        bary.push([a, a, b]);
        weights.push(w);
        weights.push(w);
        weights.push(w);
    }
    TriangleRule { bary, weights }
}

/// Quadrature nodes on a 3D triangle: points and surface-measure weights
/// (summing to the triangle area).
#[derive(Debug, Clone)]
pub struct TriQuad {
    pub points: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl TriQuad {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn tri_area(c: &[Vector3<f64>; 3]) -> f64 {
    0.5 * (c[1] - c[0]).cross(&(c[2] - c[0])).norm()
}

fn emit_rule(corners: &[Vector3<f64>; 3], rule: &TriangleRule, out: &mut TriQuad) {
    let area = tri_area(corners);
    for (b, w) in rule.bary.iter().zip(&rule.weights) {
        out.points
            .push(b[0] * corners[0] + b[1] * corners[1] + b[2] * corners[2]);
        out.weights.push(w * area);
    }
}

/// Regular rule on one triangle.
pub fn triangle_nodes(corners: &[Vector3<f64>; 3], rule: &TriangleRule) -> TriQuad {
    let mut q = TriQuad {
        points: Vec::with_capacity(rule.bary.len()),
        weights: Vec::with_capacity(rule.bary.len()),
    };
    emit_rule(corners, rule, &mut q);
    q
}

/// Nodes over a whole mesh triangle.
pub fn mesh_triangle_nodes(mesh: &TriMesh, i: usize, rule: &TriangleRule) -> TriQuad {
    triangle_nodes(&mesh.corners(i), rule)
}

/// Adaptive rule for a target close to (but off) the triangle: quarter the
/// triangle recursively while the target sits within 1.5 diameters of a
/// sub-triangle's centroid, then apply the base rule on each leaf.
pub fn triangle_nodes_near(
    corners: &[Vector3<f64>; 3],
    rule: &TriangleRule,
    x0: &Vector3<f64>,
) -> TriQuad {
    let mut q = TriQuad {
        points: Vec::new(),
        weights: Vec::new(),
    };
    subdivide_near(corners, rule, x0, 0, &mut q);
    q
}

fn subdivide_near(
    c: &[Vector3<f64>; 3],
    rule: &TriangleRule,
    x0: &Vector3<f64>,
    depth: usize,
    out: &mut TriQuad,
) {
    let centroid = (c[0] + c[1] + c[2]) / 3.0;
    let diam = (c[1] - c[0])
        .norm()
        .max((c[2] - c[1]).norm())
        .max((c[0] - c[2]).norm());
    if depth >= TRI_NEAR_MAX_DEPTH || (x0 - centroid).norm() >= 1.5 * diam {
        emit_rule(c, rule, out);
        return;
    }
    let m01 = 0.5 * (c[0] + c[1]);
    let m12 = 0.5 * (c[1] + c[2]);
    let m20 = 0.5 * (c[2] + c[0]);
    for sub in [
        [c[0], m01, m20],
        [m01, c[1], m12],
        [m20, m12, c[2]],
        [m01, m12, m20],
    ] {
        subdivide_near(&sub, rule, x0, depth + 1, out);
    }
}

/// Duffy-transformed nodes for integrands with a 1/r singularity at the
/// triangle centroid: split into three sub-triangles at the centroid and map
/// each with y(u, v) = c + u ((1-v) P + v Q - c), dS = 2 A u du dv, which
/// cancels the singularity exactly. Tensor Gauss with order n radially and
/// 2n along the edge: after the transform the radial direction is smooth,
/// while the edge direction keeps complex singularities at a Bernstein
/// ellipse of size ~ sqrt(3) (error ~ 3^-n_v), so it needs the doubling.
pub fn duffy_nodes(corners: &[Vector3<f64>; 3], n: usize) -> Result<TriQuad> {
    let rule_u = gauss_legendre(n)?;
    let rule_v = gauss_legendre((2 * n).min(MAX_GAUSS_ORDER))?;
    let centroid = (corners[0] + corners[1] + corners[2]) / 3.0;
    let mut q = TriQuad {
        points: Vec::with_capacity(3 * rule_u.len() * rule_v.len()),
        weights: Vec::with_capacity(3 * rule_u.len() * rule_v.len()),
    };
    for e in 0..3 {
        let p = corners[e];
        let r = corners[(e + 1) % 3];
        let two_area = (p - centroid).cross(&(r - centroid)).norm();
        for (xu, wu) in rule_u.nodes.iter().zip(&rule_u.weights) {
            let u = 0.5 * (xu + 1.0);
            for (xv, wv) in rule_v.nodes.iter().zip(&rule_v.weights) {
                let v = 0.5 * (xv + 1.0);
                let edge_pt = (1.0 - v) * p + v * r;
                q.points.push(centroid + u * (edge_pt - centroid));
                q.weights.push(two_area * u * 0.25 * wu * wv);
            }
        }
    }
    Ok(q)
}
