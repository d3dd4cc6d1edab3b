//! Boundary geometry: 2D curves discretized into panels (straight segments
//! or exact circular arcs) and closed 3D triangle meshes.
//!
//! Conventions used throughout the crate:
//! * closed 2D boundaries are traversed counterclockwise, so the outward
//!   normal is the tangent rotated by -90 degrees;
//! * collocation points are panel midpoints `panel.point(0.0)`;
//! * triangle meshes are closed and consistently oriented with outward
//!   normals, collocation at centroids.

use crate::{Error, Result};
use nalgebra::{Vector2, Vector3};
use std::f64::consts::{PI, TAU};

/// Boundary condition tag carried by each panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcTag {
    Dirichlet,
    Neumann,
}

/// Which side of the boundary the PDE domain occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Interior,
    Exterior,
}

#[derive(Debug, Clone)]
enum PanelShape {
    /// Straight segment with a fixed unit normal (normally the rotated
    /// tangent; polar-curve chords may carry the analytic curve normal).
    Straight { normal: Vector2<f64> },
    /// Circular arc, parametrized by angle from `theta0` (t = -1) to
    /// `theta1` (t = +1). A positive sweep is counterclockwise.
    Arc {
        center: Vector2<f64>,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

/// One boundary panel of a 2D curve, parametrized over t in [-1, 1].
#[derive(Debug, Clone)]
pub struct Panel2d {
    pub start: Vector2<f64>,
    pub end: Vector2<f64>,
    pub bc: BcTag,
    shape: PanelShape,
    /// Collocation point override: chords that stand in for a segment of a
    /// smooth curve anchor their collocation at the curve's own midpoint,
    /// which sits off the chord by the sag.  None means the panel's own
    /// parametric midpoint.
    anchor: Option<Vector2<f64>>,
}

impl Panel2d {
    pub fn straight(start: Vector2<f64>, end: Vector2<f64>, bc: BcTag) -> Result<Self> {
        let d = end - start;
        let len = d.norm();
        if len < 1e-14 {
            return Err(Error::DegenerateGeometry("zero-length panel"));
        }
        let normal = Vector2::new(d[1], -d[0]) / len;
        Ok(Panel2d {
            start,
            end,
            bc,
            shape: PanelShape::Straight { normal },
            anchor: None,
        })
    }

    /// Straight panel with an externally supplied unit normal.
    pub fn straight_with_normal(
        start: Vector2<f64>,
        end: Vector2<f64>,
        normal: Vector2<f64>,
        bc: BcTag,
    ) -> Result<Self> {
        if (end - start).norm() < 1e-14 {
            return Err(Error::DegenerateGeometry("zero-length panel"));
        }
        if (normal.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::DegenerateGeometry("panel normal must be unit length"));
        }
        Ok(Panel2d {
            start,
            end,
            bc,
            shape: PanelShape::Straight { normal },
            anchor: None,
        })
    }

    /// Straight chord standing in for a segment of a smooth curve: the
    /// collocation point and outward normal are the curve's own, taken at
    /// the segment's parameter midpoint, while integration runs over the
    /// chord.  This is the usual engineering discretization of a curved
    /// boundary by flat elements with geometry-exact collocation: the
    /// anchor sits off the chord by the sag, and that geometric
    /// inconsistency -- not the trace space -- sets the attainable field
    /// accuracy on such boundaries.
    pub fn chord_of_curve(
        start: Vector2<f64>,
        end: Vector2<f64>,
        anchor: Vector2<f64>,
        normal: Vector2<f64>,
        bc: BcTag,
    ) -> Result<Self> {
        let mut panel = Self::straight_with_normal(start, end, normal, bc)?;
        if !anchor.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateGeometry("non-finite panel anchor"));
        }
        panel.anchor = Some(anchor);
        Ok(panel)
    }

    pub fn arc(
        center: Vector2<f64>,
        radius: f64,
        theta0: f64,
        theta1: f64,
        bc: BcTag,
    ) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::NonPositiveArgument("arc radius"));
        }
        if (theta1 - theta0).abs() < 1e-14 || (theta1 - theta0).abs() > TAU {
            return Err(Error::DegenerateGeometry("arc sweep out of range"));
        }
        let at = |th: f64| center + radius * Vector2::new(th.cos(), th.sin());
        Ok(Panel2d {
            start: at(theta0),
            end: at(theta1),
            bc,
            shape: PanelShape::Arc {
                center,
                radius,
                theta0,
                theta1,
            },
            anchor: None,
        })
    }

    /// Arc length of the panel.
    pub fn length(&self) -> f64 {
        match &self.shape {
            PanelShape::Straight { .. } => (self.end - self.start).norm(),
            PanelShape::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }

    /// |dy/dt|, constant over the panel for both shapes (= length / 2).
    pub fn jacobian(&self) -> f64 {
        0.5 * self.length()
    }

    /// Point on the panel at parameter t in [-1, 1].
    pub fn point(&self, t: f64) -> Vector2<f64> {
        match &self.shape {
            PanelShape::Straight { .. } => {
                0.5 * ((1.0 - t) * self.start + (1.0 + t) * self.end)
            }
            PanelShape::Arc { center, radius, theta0, theta1 } => {
                let th = 0.5 * ((1.0 - t) * theta0 + (1.0 + t) * theta1);
                center + *radius * Vector2::new(th.cos(), th.sin())
            }
        }
    }

    /// Outward unit normal at parameter t.
    pub fn normal(&self, t: f64) -> Vector2<f64> {
        match &self.shape {
            PanelShape::Straight { normal } => *normal,
            PanelShape::Arc { center, radius, theta0, theta1 } => {
                let sign = (theta1 - theta0).signum();
                sign * (self.point(t) - center) / *radius
            }
        }
    }

    /// Collocation point of the panel: the anchor when the panel carries
    /// one, otherwise the parametric midpoint.
    pub fn midpoint(&self) -> Vector2<f64> {
        self.anchor.unwrap_or_else(|| self.point(0.0))
    }

    /// Whether the collocation point lies on the panel itself.  Anchored
    /// chords collocate off the panel (at the generating curve's midpoint),
    /// so their own-panel integrals are near-singular rather than singular.
    pub fn collocation_on_panel(&self) -> bool {
        self.anchor.is_none()
    }

    pub fn is_arc(&self) -> bool {
        matches!(self.shape, PanelShape::Arc { .. })
    }

    /// Arc radius, or None for straight panels.
    pub fn arc_radius(&self) -> Option<f64> {
        match &self.shape {
            PanelShape::Straight { .. } => None,
            PanelShape::Arc { radius, .. } => Some(*radius),
        }
    }

    /// Sign of the arc sweep (+1 counterclockwise), or None for straight
    /// panels.
    pub fn arc_sweep_sign(&self) -> Option<f64> {
        match &self.shape {
            PanelShape::Straight { .. } => None,
            PanelShape::Arc { theta0, theta1, .. } => Some((theta1 - theta0).signum()),
        }
    }

    /// Parameter of the point on the panel closest to x, clamped to [-1, 1].
    pub fn closest_parameter(&self, x: &Vector2<f64>) -> f64 {
        match &self.shape {
            PanelShape::Straight { .. } => {
                let d = self.end - self.start;
                let s = (x - self.start).dot(&d) / d.norm_squared(); // in [0,1]
                (2.0 * s - 1.0).clamp(-1.0, 1.0)
            }
            PanelShape::Arc { center, theta0, theta1, .. } => {
                let v = x - center;
                if v.norm() < 1e-14 {
                    return 0.0;
                }
                let phi = v[1].atan2(v[0]);
                let mid = 0.5 * (theta0 + theta1);
                let half = 0.5 * (theta1 - theta0);
                // angular offset from the arc midpoint, wrapped to (-pi, pi]
                let mut d = phi - mid;
                while d > PI {
                    d -= TAU;
                }
                while d <= -PI {
                    d += TAU;
                }
                (d / half).clamp(-1.0, 1.0)
            }
        }
    }

    /// Euclidean distance from x to the panel.
    pub fn distance(&self, x: &Vector2<f64>) -> f64 {
        let t = self.closest_parameter(x);
        (x - self.point(t)).norm()
    }
}

/// Closed 2D boundary made of consistently oriented panels.
#[derive(Debug, Clone)]
pub struct Boundary2d {
    pub panels: Vec<Panel2d>,
    pub orientation: Orientation,
}

/// Collocation data extracted from one panel.
#[derive(Debug, Clone, Copy)]
pub struct Collocation2d {
    pub panel: usize,
    pub point: Vector2<f64>,
    pub normal: Vector2<f64>,
    pub bc: BcTag,
}

impl Boundary2d {
    pub fn new(panels: Vec<Panel2d>, orientation: Orientation) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::InvalidConfig("boundary needs at least one panel".into()));
        }
        Ok(Boundary2d { panels, orientation })
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.panels.iter().map(Panel2d::length).sum()
    }

    pub fn tag_all(&mut self, bc: BcTag) {
        for p in &mut self.panels {
            p.bc = bc;
        }
    }

    pub fn collocation_points(&self) -> Vec<Collocation2d> {
        self.panels
            .iter()
            .enumerate()
            .map(|(i, p)| Collocation2d {
                panel: i,
                point: p.midpoint(),
                normal: p.normal(0.0),
                bc: p.bc,
            })
            .collect()
    }

    /// Dense polyline sampling of the whole curve (`sub` samples per panel,
    /// endpoints included) used for containment and diameter queries.
    fn polyline(&self, sub: usize) -> Vec<Vector2<f64>> {
        let mut pts = Vec::with_capacity(self.panels.len() * sub);
        for p in &self.panels {
            for j in 0..sub {
                let t = -1.0 + 2.0 * j as f64 / sub as f64;
                pts.push(p.point(t));
            }
        }
        pts
    }

    /// Winding number test against a dense polyline approximation.
    pub fn contains(&self, x: &Vector2<f64>) -> bool {
        let poly = self.polyline(20);
        let mut angle = 0.0;
        for i in 0..poly.len() {
            let a = poly[i] - x;
            let b = poly[(i + 1) % poly.len()] - x;
            angle += (a[0] * b[1] - a[1] * b[0]).atan2(a.dot(&b));
        }
        (angle / TAU).round() as i64 != 0
    }

    /// Exact Euclidean distance from x to the discretized boundary.
    pub fn distance(&self, x: &Vector2<f64>) -> f64 {
        self.panels
            .iter()
            .map(|p| p.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest pairwise extent of the curve.
    pub fn diameter(&self) -> f64 {
        let pts = self.polyline(4);
        let mut d2: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d2 = d2.max((pts[i] - pts[j]).norm_squared());
            }
        }
        d2.sqrt()
    }

    /// Signed area enclosed by the curve (positive for counterclockwise).
    pub fn signed_area(&self) -> f64 {
        let poly = self.polyline(20);
        let mut a = 0.0;
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    }

    pub fn bounding_box(&self) -> (Vector2<f64>, Vector2<f64>) {
        let pts = self.polyline(8);
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

/// Built-in boundary shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape2d {
    /// Axis-aligned unit square [0,1]^2.
    UnitSquare,
    /// Circle of the given radius centered at the origin.
    Circle { radius: f64 },
    /// Regular pentagon of side 2 with an outward semicircle of radius 1 on
    /// each edge; five exact-arc lobes, so the panel count must be a
    /// multiple of 5.
    Flower,
    /// Polar curve r = 1 + 0.2 cos(5 theta) discretized by straight chords
    /// carrying the analytic curve normal at the chord parameter midpoint.
    Star,
}

/// Discretize a built-in shape into `n_panels` panels, all Dirichlet-tagged.
pub fn make_boundary(shape: Shape2d, n_panels: usize, orientation: Orientation) -> Result<Boundary2d> {
    if n_panels == 0 {
        return Err(Error::InvalidConfig("panel count must be positive".into()));
    }
    let panels = match shape {
        Shape2d::UnitSquare => unit_square_panels(n_panels, [BcTag::Dirichlet; 4])?,
        Shape2d::Circle { radius } => circle_panels(radius, n_panels)?,
        Shape2d::Flower => flower_panels(n_panels)?,
        Shape2d::Star => star_panels(n_panels)?,
    };
    Boundary2d::new(panels, orientation)
}

/// Unit square boundary with per-side tags (bottom, right, top, left).
/// Panels never straddle corners; sides are split as evenly as possible.
pub fn unit_square_mixed(n_panels: usize, side_tags: [BcTag; 4]) -> Result<Boundary2d> {
    Boundary2d::new(unit_square_panels(n_panels, side_tags)?, Orientation::Interior)
}

fn unit_square_panels(n_panels: usize, side_tags: [BcTag; 4]) -> Result<Vec<Panel2d>> {
    if n_panels < 4 {
        return Err(Error::InvalidConfig("unit square needs at least 4 panels".into()));
    }
    let corners = [
        Vector2::new(0.0, 0.0),
        Vector2::new(1.0, 0.0),
        Vector2::new(1.0, 1.0),
        Vector2::new(0.0, 1.0),
    ];
    let base = n_panels / 4;
    let extra = n_panels % 4;
    let mut panels = Vec::with_capacity(n_panels);
    for side in 0..4 {
        let m = base + usize::from(side < extra);
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        for j in 0..m {
            let s0 = j as f64 / m as f64;
            let s1 = (j + 1) as f64 / m as f64;
            panels.push(Panel2d::straight(
                a + s0 * (b - a),
                a + s1 * (b - a),
                side_tags[side],
            )?);
        }
    }
    Ok(panels)
}

fn circle_panels(radius: f64, n: usize) -> Result<Vec<Panel2d>> {
    if radius <= 0.0 {
        return Err(Error::NonPositiveArgument("circle radius"));
    }
    (0..n)
        .map(|i| {
            let t0 = TAU * i as f64 / n as f64;
            let t1 = TAU * (i + 1) as f64 / n as f64;
            Panel2d::arc(Vector2::zeros(), radius, t0, t1, BcTag::Dirichlet)
        })
        .collect()
}

fn flower_panels(n: usize) -> Result<Vec<Panel2d>> {
    if n % 5 != 0 {
        return Err(Error::InvalidConfig(
            "flower panel count must be a multiple of 5".into(),
        ));
    }
    let per_lobe = n / 5;
    let circumradius = 1.0 / (PI / 5.0).sin(); // pentagon of side 2
    let vertex = |k: usize| {
        let th = 0.5 * PI + TAU * (k % 5) as f64 / 5.0;
        circumradius * Vector2::new(th.cos(), th.sin())
    };
    let mut panels = Vec::with_capacity(n);
    for k in 0..5 {
        let a = vertex(k);
        let b = vertex(k + 1);
        let center = 0.5 * (a + b);
        let v = a - center; // radius-1 vector to the lobe start
        let theta_start = v[1].atan2(v[0]);
        // sweep pi counterclockwise: passes through the outward bulge
        for j in 0..per_lobe {
            let t0 = theta_start + PI * j as f64 / per_lobe as f64;
            let t1 = theta_start + PI * (j + 1) as f64 / per_lobe as f64;
            panels.push(Panel2d::arc(center, 1.0, t0, t1, BcTag::Dirichlet)?);
        }
    }
    Ok(panels)
}

/// Radius of the star curve r(theta) = 1 + 0.2 cos(5 theta).
pub fn star_radius(theta: f64) -> f64 {
    1.0 + 0.2 * (5.0 * theta).cos()
}

/// Point on the star curve at parameter theta.
pub fn star_point(theta: f64) -> Vector2<f64> {
    star_radius(theta) * Vector2::new(theta.cos(), theta.sin())
}

/// Analytic outward normal of the star curve at parameter theta.
pub fn star_normal(theta: f64) -> Vector2<f64> {
    let r = star_radius(theta);
    let dr = -(5.0 * theta).sin(); // d/dtheta of 0.2 cos(5 theta) times 5
    let (s, c) = theta.sin_cos();
    let tangent = Vector2::new(dr * c - r * s, dr * s + r * c);
    Vector2::new(tangent[1], -tangent[0]).normalize()
}

fn star_panels(n: usize) -> Result<Vec<Panel2d>> {
    if n < 10 {
        return Err(Error::InvalidConfig("star needs at least 10 panels".into()));
    }
    // Straight chords between equal-parameter curve points, collocated at
    // the curve's own midpoint of each parameter interval with the analytic
    // curve normal there. The anchor sits off the chord by the sag
    // (up to ~3e-3 at 100 panels), a fixed geometric inconsistency between
    // collocation and integration geometry that dominates the field error of
    // every trace space on this boundary; solver comparisons on the star
    // therefore share the same floor.
    (0..n)
        .map(|i| {
            let t0 = TAU * i as f64 / n as f64;
            let t1 = TAU * (i + 1) as f64 / n as f64;
            let tm = 0.5 * (t0 + t1);
            Panel2d::chord_of_curve(
                star_point(t0),
                star_point(t1),
                star_point(tm),
                star_normal(tm),
                BcTag::Dirichlet,
            )
        })
        .collect()
}

/// Fill distance of a collocation set: the largest geodesic (arc-length)
/// distance from any boundary point to its nearest collocation point,
/// estimated on a 10x refined parameter sampling of the curve.
pub fn fill_distance(boundary: &Boundary2d, points: &[Vector2<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    // dense samples with their arc-length coordinates (11 per panel: the 10x
    // refinement of the per-panel parametrization, endpoints included)
    let mut samples = Vec::new();
    let mut offset = 0.0;
    for p in &boundary.panels {
        let len = p.length();
        for j in 0..=10 {
            let t = -1.0 + 0.2 * j as f64;
            samples.push((p.point(t), offset + 0.5 * (t + 1.0) * len));
        }
        offset += len;
    }
    let total = offset;
    // arc-length coordinate of each collocation point = nearest dense sample
    let coords: Vec<f64> = points
        .iter()
        .map(|q| {
            samples
                .iter()
                .min_by(|a, b| {
                    (a.0 - q).norm_squared().total_cmp(&(b.0 - q).norm_squared())
                })
                .map(|s| s.1)
                .unwrap()
        })
        .collect();
    let geodesic = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(total - d)
    };
    let mut sup: f64 = 0.0;
    for (_, s) in &samples {
        let nearest = coords
            .iter()
            .map(|c| geodesic(*s, *c))
            .fold(f64::INFINITY, f64::min);
        sup = sup.max(nearest);
    }
    Ok(sup)
}

/// Closed triangle mesh with outward orientation.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidConfig("mesh has no triangles".into()));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= self.vertices.len() {
                    return Err(Error::OpenSurface(format!(
                        "triangle {i} references missing vertex {v}"
                    )));
                }
            }
            if self.area(i) < 1e-14 {
                return Err(Error::DegenerateGeometry("zero-area triangle"));
            }
        }
        // closed + consistently oriented: every directed edge appears exactly
        // once, hence every undirected edge exactly twice
        let mut directed = std::collections::HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                if directed.insert((a, b), ()).is_some() {
                    return Err(Error::OpenSurface(format!(
                        "directed edge ({a}, {b}) repeated: inconsistent orientation"
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::OpenSurface(format!(
                    "edge ({a}, {b}) has no partner: surface not closed"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, i: usize) -> [Vector3<f64>; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn centroid(&self, i: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(i);
        (a + b + c) / 3.0
    }

    pub fn area(&self, i: usize) -> f64 {
        let [a, b, c] = self.corners(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the vertex orientation.
    pub fn normal(&self, i: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(i);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.len()).map(|i| self.area(i)).sum()
    }

    /// Longest edge over the mesh.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for i in 0..self.len() {
            let [a, b, c] = self.corners(i);
            h = h.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }
        h
    }

    /// Euclidean distance from a point to the triangulated surface.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        (0..self.len())
            .map(|i| point_triangle_distance(p, &self.corners(i)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Serialize in OFF format.
    pub fn to_off_string(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    /// Parse an OFF file: header "OFF", a counts line "V F E", V vertex
    /// lines, then F faces "3 i j k" (0-based). '#' comments are skipped and
    /// normals are recomputed from vertex order.
    pub fn from_off_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or(Error::MeshParse {
            line: 0,
            msg: "empty file".into(),
        })?;
        if header != "OFF" {
            return Err(Error::MeshParse {
                line: ln,
                msg: format!("expected OFF header, found '{header}'"),
            });
        }
        let (ln, counts) = lines.next().ok_or(Error::MeshParse {
            line: ln,
            msg: "missing counts line".into(),
        })?;
        let parts: Vec<usize> = counts
            .split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|_| Error::MeshParse {
                    line: ln,
                    msg: format!("bad count '{tok}'"),
                })
            })
            .collect::<Result<_>>()?;
        if parts.len() != 3 {
            return Err(Error::MeshParse {
                line: ln,
                msg: "counts line must have three fields".into(),
            });
        }
        let (nv, nf) = (parts[0], parts[1]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or(Error::MeshParse {
                line: 0,
                msg: "unexpected end of vertex list".into(),
            })?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| Error::MeshParse {
                        line: ln,
                        msg: format!("bad coordinate '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if xs.len() != 3 {
                return Err(Error::MeshParse {
                    line: ln,
                    msg: "vertex line must have three coordinates".into(),
                });
            }
            vertices.push(Vector3::new(xs[0], xs[1], xs[2]));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (ln, l) = lines.next().ok_or(Error::MeshParse {
                line: 0,
                msg: "unexpected end of face list".into(),
            })?;
            let toks: Vec<usize> = l
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| Error::MeshParse {
                        line: ln,
                        msg: format!("bad face index '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if toks.len() != 4 || toks[0] != 3 {
                return Err(Error::MeshParse {
                    line: ln,
                    msg: "only triangular faces are supported".into(),
                });
            }
            triangles.push([toks[1], toks[2], toks[3]]);
        }
        TriMesh::new(vertices, triangles)
    }

    pub fn read_off(path: &std::path::Path) -> Result<Self> {
        Self::from_off_str(&std::fs::read_to_string(path)?)
    }
}

/// Distance from a point to a (filled) triangle, via the closest point on
/// the triangle: project onto the plane, then clamp to the nearest edge or
/// vertex region using barycentric-style dot products.
pub fn point_triangle_distance(p: &Vector3<f64>, tri: &[Vector3<f64>; 3]) -> f64 {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm(); // vertex a
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm(); // vertex b
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - v * ab).norm(); // edge ab
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm(); // vertex c
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - w * ac).norm(); // edge ac
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - w * (c - b)).norm(); // edge bc
    }
    // interior: distance to the supporting plane
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - v * ab - w * ac).norm()
}

/// UV sphere of radius `a`: `slices` longitude divisions and `stacks`
/// latitude bands, giving exactly 2 * slices * (stacks - 1) triangles.
pub fn sphere_mesh(a: f64, slices: usize, stacks: usize) -> Result<TriMesh> {
    if a <= 0.0 {
        return Err(Error::NonPositiveArgument("sphere radius"));
    }
    if slices < 3 || stacks < 3 {
        return Err(Error::InvalidConfig("sphere needs slices >= 3 and stacks >= 3".into()));
    }
    let mut vertices = vec![Vector3::new(0.0, 0.0, a)];
    for j in 1..stacks {
        let theta = PI * j as f64 / stacks as f64;
        for i in 0..slices {
            let phi = TAU * i as f64 / slices as f64;
            vertices.push(a * Vector3::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, -a));
    let south = vertices.len() - 1;
    let ring = |j: usize, i: usize| 1 + (j - 1) * slices + (i % slices);

    let mut triangles = Vec::with_capacity(2 * slices * (stacks - 1));
    for i in 0..slices {
        triangles.push([0, ring(1, i), ring(1, i + 1)]);
    }
    for j in 1..stacks - 1 {
        for i in 0..slices {
            triangles.push([ring(j, i), ring(j + 1, i), ring(j + 1, i + 1)]);
            triangles.push([ring(j, i), ring(j + 1, i + 1), ring(j, i + 1)]);
        }
    }
    for i in 0..slices {
        triangles.push([south, ring(stacks - 1, i + 1), ring(stacks - 1, i)]);
    }
    TriMesh::new(vertices, triangles)
}
