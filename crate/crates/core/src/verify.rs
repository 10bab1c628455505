//! Geometric checks on an integrated patch.
//!
//! Wherever possible each quantity is computed twice: once from the closed
//! forms in the Gauss maps and once from finite differences of the
//! integrated positions alone.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussmap::Ambient;
use crate::grid::{
    mixed_dz_dzbar, wirtinger_dz, Axis, ComplexField, ComplexGrid, Domain, Field, GridError,
    RealField,
};
use crate::immersion::{dot, Frame, ImmersionPatch, VectorField};
use crate::nullcurve::{NullCurveField, R3_SLOTS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("check needs an R^3 patch")]
    NotR3,
    #[error("metric is degenerate at every node")]
    Degenerate,
    #[error("points are collinear; no finite circle fits them")]
    Collinear,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    ClosedForm,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub h: VectorField,
    pub e4_perp: VectorField,
    pub translator_residual: RealField,
    pub method: CurvatureMethod,
}

fn norm4(a: &[f64; 4]) -> f64 {
    dot(a, a).sqrt()
}

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// The normal part of `-e4` in closed form.
pub fn e4_perp_at(g1: Complex64, g2: Complex64) -> [f64; 4] {
    let (a1, a2) = (g1.norm_sqr(), g2.norm_sqr());
    let cross = g1.conj() * g2;
    let s = 1.0 / ((1.0 + a1) * (1.0 + a2));
    [
        s * ((1.0 - a2) * g1.im + (1.0 - a1) * g2.im),
        -s * ((1.0 - a2) * g1.re + (1.0 - a1) * g2.re),
        s * 2.0 * cross.im,
        -s * (1.0 - 2.0 * cross.re + a1 * a2),
    ]
}

/// `-e4` minus its projection onto the span of `xu, xv`.
pub fn frame_normal_part(w: &[f64; 4], xu: &[f64; 4], xv: &[f64; 4]) -> [f64; 4] {
    let (e, f, g) = (dot(xu, xu), dot(xu, xv), dot(xv, xv));
    let det = e * g - f * f;
    let (bu, bv) = (dot(w, xu), dot(w, xv));
    let cu = (g * bu - f * bv) / det;
    let cv = (e * bv - f * bu) / det;
    [0, 1, 2, 3].map(|k| w[k] - cu * xu[k] - cv * xv[k])
}

const MINUS_E4: [f64; 4] = [0.0, 0.0, 0.0, -1.0];

fn nondegenerate(grid: &Arc<ComplexGrid>, lambda2: &RealField) -> Result<Arc<ComplexGrid>, VerifyError> {
    let scale = lambda2.max_abs();
    let g = grid.restricted(|i, j| {
        let l = lambda2.at(i, j);
        l.is_finite() && l > 1e-14 * scale
    });
    if g.active_count() == 0 {
        return Err(VerifyError::Degenerate);
    }
    Ok(Arc::new(g))
}

/// Per-component `X_z` of a patch.
pub fn patch_dz(patch: &ImmersionPatch) -> Result<[ComplexField; 4], GridError> {
    let mut out = Vec::with_capacity(4);
    for k in 0..4 {
        out.push(wirtinger_dz(&patch.component(k).to_complex())?);
    }
    Ok(out.try_into().expect("four components"))
}

pub fn mean_curvature(
    patch: &ImmersionPatch,
    ncf: &NullCurveField,
    method: CurvatureMethod,
) -> Result<CurvatureReport, VerifyError> {
    let (h, e4_perp) = match method {
        CurvatureMethod::ClosedForm => {
            let grid = nondegenerate(ncf.grid(), &patch.lambda2)?;
            let h = VectorField::from_nodes(grid.clone(), |i, j| {
                let s = 4.0 / patch.lambda2.at(i, j);
                [0, 1, 2, 3].map(|k| s * ncf.phi_zbar_closed[k].at(i, j))
            });
            let e = VectorField::from_nodes(grid, |i, j| e4_perp_at(ncf.g1.at(i, j), ncf.g2.at(i, j)));
            (h, e)
        }
        CurvatureMethod::FiniteDifference => {
            let zeta = patch_dz(patch)?;
            let lambda2_fd =
                RealField::from_nodes(patch.grid().clone(), |i, j| 2.0 * (0..4).map(|k| zeta[k].at(i, j).norm_sqr()).sum::<f64>());
            let grid = nondegenerate(patch.grid(), &lambda2_fd)?;
            let mut lap = Vec::with_capacity(4);
            for k in 0..4 {
                lap.push(mixed_dz_dzbar(&patch.component(k))?);
            }
            let frame = Frame::of(patch)?;
            let h = VectorField::from_nodes(grid.clone(), |i, j| {
                let s = 4.0 / lambda2_fd.at(i, j);
                [0, 1, 2, 3].map(|k| s * lap[k].at(i, j))
            });
            let e = VectorField::from_nodes(grid, |i, j| {
                let (xu, xv) = frame.at(i, j);
                frame_normal_part(&MINUS_E4, &xu, &xv)
            });
            (h, e)
        }
    };
    let translator_residual = h.zip_map(&e4_perp, |a, b| norm4(&sub4(&a, &b)))?;
    Ok(CurvatureReport {
        h,
        e4_perp,
        translator_residual,
        method,
    })
}

/// Largest `|V . X_u| / (|V| |X_u|)` (and the same for `X_v`) over nodes
/// where `V` is not negligible.
pub fn normality_defect(patch: &ImmersionPatch, field: &VectorField) -> Result<f64, GridError> {
    let frame = Frame::of(patch)?;
    let scale = field.active_values().map(|v| norm4(&v)).fold(0.0, f64::max);
    Ok(field
        .grid()
        .active_nodes()
        .filter_map(|(i, j)| {
            let v = field.at(i, j);
            let n = norm4(&v);
            if n <= 1e-8 * scale {
                return None;
            }
            let (xu, xv) = frame.at(i, j);
            Some((dot(&v, &xu).abs() / (n * norm4(&xu))).max(dot(&v, &xv).abs() / (n * norm4(&xv))))
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct E4Projection {
    pub closed: VectorField,
    pub frame: VectorField,
    pub disagreement: RealField,
}

pub fn e4_normal_projection(patch: &ImmersionPatch, ncf: &NullCurveField) -> Result<E4Projection, VerifyError> {
    let closed = mean_curvature(patch, ncf, CurvatureMethod::ClosedForm)?.e4_perp;
    let fd = Frame::of(patch)?;
    let frame = VectorField::from_nodes(closed.grid().clone(), |i, j| {
        let (xu, xv) = fd.at(i, j);
        frame_normal_part(&MINUS_E4, &xu, &xv)
    });
    let disagreement = closed.zip_map(&frame, |a, b| norm4(&sub4(&a, &b)))?;
    Ok(E4Projection {
        closed,
        frame,
        disagreement,
    })
}

/// Max and L2 norms of a residual field, plus the node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
    pub nodes: usize,
}

impl Norms {
    pub fn of(field: &RealField) -> Self {
        Self {
            max: field.max_abs(),
            l2: field.l2(),
            nodes: field.grid().active_count(),
        }
    }
}

pub fn translator_residual(report: &CurvatureReport) -> Norms {
    Norms::of(&report.translator_residual)
}

#[derive(Debug, Clone)]
pub struct ProjectiveGaussMap {
    /// `X_z` by finite differences.
    pub zeta: [ComplexField; 4],
    pub recovered_g1: ComplexField,
    pub recovered_g2: ComplexField,
    /// Nodes where `zeta_1 - i zeta_2` vanished relative to `|zeta|`.
    pub chart_failures: Vec<(usize, usize)>,
}

const CHART_EPS: f64 = 1e-10;

pub fn recover_gauss_map(patch: &ImmersionPatch) -> Result<ProjectiveGaussMap, VerifyError> {
    let zeta = patch_dz(patch)?;
    let i = Complex64::i();
    let grid = patch.grid();
    let z_at = |a: usize, b: usize| [0, 1, 2, 3].map(|k| zeta[k].at(a, b));
    let chart = |z: &[Complex64; 4]| {
        let d = z[0] - i * z[1];
        let size = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        (d, d.norm() > CHART_EPS * size)
    };
    let chart_failures: Vec<_> = grid.active_nodes().filter(|&(a, b)| !chart(&z_at(a, b)).1).collect();
    let good = Arc::new(grid.restricted(|a, b| chart(&z_at(a, b)).1));
    let recovered_g1 = ComplexField::from_nodes(good.clone(), |a, b| {
        let z = z_at(a, b);
        (z[2] + i * z[3]) / chart(&z).0
    });
    let recovered_g2 = ComplexField::from_nodes(good, |a, b| {
        let z = z_at(a, b);
        -(z[2] - i * z[3]) / chart(&z).0
    });
    Ok(ProjectiveGaussMap {
        zeta,
        recovered_g1,
        recovered_g2,
        chart_failures,
    })
}

/// Max `|recovered - prescribed|` for `g1` and `g2`.
pub fn round_trip_error(pgm: &ProjectiveGaussMap, ncf: &NullCurveField) -> Result<(RealField, RealField), GridError> {
    let grid = Arc::new(
        pgm.recovered_g1
            .grid()
            .restricted(|i, j| ncf.grid().is_active(i, j)),
    );
    let e1 = RealField::from_nodes(grid.clone(), |i, j| (pgm.recovered_g1.at(i, j) - ncf.g1.at(i, j)).norm());
    let e2 = RealField::from_nodes(grid, |i, j| (pgm.recovered_g2.at(i, j) - ncf.g2.at(i, j)).norm());
    Ok((e1, e2))
}

/// `|zeta . zeta| / |zeta|^2` per node.
pub fn q2_membership(pgm: &ProjectiveGaussMap) -> RealField {
    RealField::from_nodes(pgm.zeta[0].grid().clone(), |i, j| {
        let z = [0, 1, 2, 3].map(|k| pgm.zeta[k].at(i, j));
        z.iter().map(|x| x * x).sum::<Complex64>().norm() / z.iter().map(|x| x.norm_sqr()).sum::<f64>()
    })
}

/// Unit normal of an R^3 patch from the cross product of its discrete frame.
pub fn unit_normal_r3(patch: &ImmersionPatch) -> Result<Field<[f64; 3]>, VerifyError> {
    if patch.ambient != Ambient::R3 {
        return Err(VerifyError::NotR3);
    }
    let frame = Frame::of(patch)?;
    Ok(Field::from_nodes(patch.grid().clone(), |i, j| {
        let (xu, xv) = frame.at(i, j);
        let a = R3_SLOTS.map(|k| xu[k]);
        let b = R3_SLOTS.map(|k| xv[k]);
        let n = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        n.map(|c| c / len)
    }))
}

/// Stereographic projection from the north pole.
pub fn stereographic(n: [f64; 3]) -> Complex64 {
    Complex64::new(n[0], n[1]) / (1.0 - n[2])
}

/// `|(N1 + i N2)/(1 - N3) - G|` with `G = -i g1` the recovered R^3 Gauss map.
pub fn stereographic_normal_defect(patch: &ImmersionPatch, pgm: &ProjectiveGaussMap) -> Result<RealField, VerifyError> {
    let normal = unit_normal_r3(patch)?;
    let g1 = &pgm.recovered_g1;
    Ok(RealField::from_nodes(g1.grid().clone(), |i, j| {
        (stereographic(normal.at(i, j)) + Complex64::i() * g1.at(i, j)).norm()
    }))
}

/// A height function `x3 = F(x1, x2)` sampled on a rectangle; the grid's
/// `(u, v)` play the role of `(x1, x2)`.
#[derive(Debug, Clone)]
pub struct HeightField(pub RealField);

impl HeightField {
    pub fn from_fn(domain: Domain, h: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        let grid = Arc::new(ComplexGrid::with_spacing(domain, h)?);
        let field = RealField::from_fn(grid, f);
        field.check_finite()?;
        Ok(Self(field))
    }
}

/// Pointwise residual of `div(grad F / W) + 1/W`, `W = sqrt(1 + |grad F|^2)`,
/// in non-divergence form with central differences, on nodes whose full
/// 3x3 neighbourhood is active.
pub fn graphical_pde_residual(hf: &HeightField) -> Result<RealField, GridError> {
    let f = &hf.0;
    let grid = f.grid();
    let (h1, h2) = (grid.h_u(), grid.h_v());
    let inner = Arc::new(grid.eroded(1));
    if inner.active_count() == 0 {
        return Err(GridError::Invalid("height field too small for a 3x3 stencil".into()));
    }
    Ok(RealField::from_nodes(inner, |i, j| {
        let at = |di: isize, dj: isize| f.at((i as isize + di) as usize, (j as isize + dj) as usize);
        let f1 = (at(1, 0) - at(-1, 0)) / (2.0 * h1);
        let f2 = (at(0, 1) - at(0, -1)) / (2.0 * h2);
        let f11 = (at(1, 0) - 2.0 * at(0, 0) + at(-1, 0)) / (h1 * h1);
        let f22 = (at(0, 1) - 2.0 * at(0, 0) + at(0, -1)) / (h2 * h2);
        let f12 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h1 * h2);
        let w2 = 1.0 + f1 * f1 + f2 * f2;
        let w = w2.sqrt();
        (f11 * (1.0 + f2 * f2) + f22 * (1.0 + f1 * f1) - 2.0 * f1 * f2 * f12) / (w2 * w) + 1.0 / w
    }))
}

/// Conformal Laplace-Beltrami operator `(4 / Lambda^2) d_z d_zbar`.
pub fn laplace_beltrami(scalar: &RealField, lambda2: &RealField) -> Result<RealField, GridError> {
    let lap = mixed_dz_dzbar(scalar)?;
    let grid = Arc::new(scalar.grid().restricted(|i, j| lambda2.grid().is_active(i, j)));
    Ok(RealField::from_nodes(grid, |i, j| 4.0 * lap.at(i, j) / lambda2.at(i, j)))
}

/// Continuous branch of `arg w` along the row-major spanning tree from
/// `anchor`, starting from the principal value there.
pub fn unwrap_phase(w: &ComplexField, anchor: (usize, usize)) -> RealField {
    let grid = w.grid().clone();
    let mut values = vec![f64::NAN; grid.len()];
    if grid.is_active(anchor.0, anchor.1) {
        values[grid.index(anchor.0, anchor.1)] = w.at(anchor.0, anchor.1).arg();
    }
    for edge in grid.spanning_edges(anchor, Axis::V) {
        let (p, c) = (edge.parent, edge.child);
        let step = (w.at(c.0, c.1) / w.at(p.0, p.1)).arg();
        values[grid.index(c.0, c.1)] = values[grid.index(p.0, p.1)] + step;
    }
    // Nodes off the anchor's component stay NaN; drop them.
    let reached = Arc::new(grid.restricted(|i, j| values[grid.index(i, j)].is_finite()));
    RealField::from_nodes(reached, |i, j| values[grid.index(i, j)])
}

/// Lagrangian angle `theta` with `i g1 = e^{i theta}`.
pub fn lagrangian_angle(g1: &ComplexField, anchor: (usize, usize)) -> RealField {
    unwrap_phase(&g1.map(|g| Complex64::i() * g), anchor)
}

/// `|(x3)_z + theta_z|` per node; vanishes on Lagrangian translators.
pub fn lagrangian_phase_defect(patch: &ImmersionPatch, theta: &RealField) -> Result<RealField, GridError> {
    let grid = Arc::new(patch.grid().restricted(|i, j| theta.grid().is_active(i, j)));
    let x3 = patch.component(2).restrict(grid.clone())?.to_complex();
    let th = theta.restrict(grid)?.to_complex();
    let (a, b) = (wirtinger_dz(&x3)?, wirtinger_dz(&th)?);
    a.zip_map(&b, |p, q| (p + q).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFit {
    pub center: Complex64,
    pub radius: f64,
    /// `max | |p - center| - radius |`.
    pub max_residual: f64,
}

/// Algebraic least-squares circle through planar points.
pub fn fit_circle(points: &[Complex64]) -> Result<CircleFit, VerifyError> {
    if points.len() < 3 {
        return Err(VerifyError::TooFewPoints {
            need: 3,
            got: points.len(),
        });
    }
    // Centre the data for conditioning.
    let n = points.len() as f64;
    let mean = points.iter().sum::<Complex64>() / n;
    let scale = points.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(VerifyError::Collinear);
    }
    // Minimise sum (x^2 + y^2 + a x + b y + c)^2.
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for p in points {
        let q = (p - mean) / scale;
        let row = [q.re, q.im, 1.0];
        let t = -(q.norm_sqr());
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] += row[r] * row[s];
            }
            rhs[r] += row[r] * t;
        }
    }
    let sol = solve3(m, rhs).ok_or(VerifyError::Collinear)?;
    let c = Complex64::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = c.norm_sqr() - sol[2];
    if r2.is_nan() || r2 <= 0.0 || r2.sqrt() > 1e8 {
        return Err(VerifyError::Collinear);
    }
    let center = mean + c * scale;
    let radius = r2.sqrt() * scale;
    let max_residual = points
        .iter()
        .map(|p| ((p - center).norm() - radius).abs())
        .fold(0.0, f64::max);
    Ok(CircleFit {
        center,
        radius,
        max_residual,
    })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let size = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-12 * size.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

/// Per node, the largest of `|X_u - 2 Re phi|` and `|X_v + 2 Im phi|` over
/// components.
pub fn tangent_consistency(patch: &ImmersionPatch, ncf: &NullCurveField) -> Result<RealField, GridError> {
    let frame = Frame::of(patch)?;
    Ok(RealField::from_nodes(patch.grid().clone(), |i, j| {
        let (xu, xv) = frame.at(i, j);
        (0..4)
            .map(|k| {
                let p = ncf.phi[k].at(i, j);
                (xu[k] - 2.0 * p.re).abs().max((xv[k] + 2.0 * p.im).abs())
            })
            .fold(0.0, f64::max)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmap::{compatibility_f, r3_lift, DiscMode, GaussMapPair, Tolerances};
    use crate::immersion::{integrate_immersion, IntegrationOptions};
    use crate::nullcurve::build_null_curve;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square(h: f64) -> Arc<ComplexGrid> {
        Arc::new(ComplexGrid::with_spacing(Domain::new(-2.0, 2.0, -2.0, 2.0), h).unwrap())
    }

    fn pipeline(pair: &GaussMapPair) -> (NullCurveField, ImmersionPatch) {
        let cp = compatibility_f(pair, &Tolerances::default()).unwrap();
        let ncf = build_null_curve(pair, &cp.f_cap).unwrap();
        let anchor = ncf.grid().nearest_node(0.0, 0.0);
        let patch = integrate_immersion(&ncf, anchor, [0.0; 4], IntegrationOptions::forced()).unwrap();
        (ncf, patch)
    }

    fn grim(h: f64) -> (NullCurveField, ImmersionPatch) {
        let g = ComplexField::from_fn(square(h), |u, _| c(u.tanh(), 0.0));
        pipeline(&r3_lift(&g, DiscMode::StrictDisc).unwrap())
    }

    fn lagrangian(h: f64) -> (NullCurveField, ImmersionPatch) {
        let grid = Arc::new(ComplexGrid::with_spacing(Domain::new(-3.0, 0.5, -2.0, 2.0), h).unwrap());
        let g1 = ComplexField::from_fn(grid.clone(), |_, v| Complex64::from_polar(1.0, v));
        let g2 = ComplexField::from_fn(grid, |u, v| (u + 1.0) / (u - 1.0) * Complex64::from_polar(1.0, v));
        pipeline(&GaussMapPair::new(g1, g2, DiscMode::ExtendedPlane).unwrap())
    }

    #[test]
    fn closed_form_curvature_at_known_points() {
        let (ncf, patch) = grim(0.02);
        let r = mean_curvature(&patch, &ncf, CurvatureMethod::ClosedForm).unwrap();
        let (i, j) = ncf.grid().nearest_node(0.0, 0.0);
        let hv = r.h.at(i, j);
        let coords: Vec<f64> = R3_SLOTS.iter().map(|&k| hv[k]).collect();
        for (a, b) in coords.iter().zip([0.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-3, "{coords:?}");
        }
        assert!(r.translator_residual.max_abs() < 1e-13);

        let (ncf, patch) = lagrangian(0.02);
        let r = mean_curvature(&patch, &ncf, CurvatureMethod::ClosedForm).unwrap();
        let (i, j) = ncf.grid().nearest_node(0.0, 0.0);
        let hv = r.h.at(i, j);
        for (a, b) in hv.iter().zip([0.0, 0.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-3, "{hv:?}");
        }
    }

    #[test]
    fn e4_perp_closed_form_special_values() {
        assert_eq!(e4_perp_at(c(0.0, 0.0), c(0.0, 0.0)), [0.0, 0.0, 0.0, -1.0]);
        // |g1| = 1 reduces the fourth slot.
        for (g1, g2) in [(c(0.6, 0.8), c(0.3, -1.7)), (c(0.0, -1.0), c(2.0, 0.5))] {
            let expect = -(1.0 - 2.0 * (g1.conj() * g2).re + g2.norm_sqr()) / (2.0 * (1.0 + g2.norm_sqr()));
            assert!((e4_perp_at(g1, g2)[3] - expect).abs() < 1e-15);
        }
        // Projection of a unit vector is no longer than it.
        for (g1, g2) in [(c(0.3, 0.2), c(-0.5, 0.1)), (c(2.0, -1.0), c(0.1, 0.9))] {
            assert!(norm4(&e4_perp_at(g1, g2)) <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn frame_projection_matches_closed_form() {
        let mut gaps = Vec::new();
        for h in [0.04, 0.02] {
            let (ncf, patch) = grim(h);
            let p = e4_normal_projection(&patch, &ncf).unwrap();
            let (i, j) = ncf.grid().nearest_node(0.5f64.atanh(), 0.3);
            assert!(p.disagreement.at(i, j) < 10.0 * h * h);
            gaps.push(p.disagreement.max_abs());
            assert!(normality_defect(&patch, &p.closed).unwrap() < 10.0 * h * h);
        }
        let ratio = gaps[0] / gaps[1];
        assert!((3.5..=4.5).contains(&ratio), "{gaps:?}");
    }

    #[test]
    fn finite_difference_curvature_converges() {
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let (ncf, patch) = grim(h);
            let fd = mean_curvature(&patch, &ncf, CurvatureMethod::FiniteDifference).unwrap();
            let cf = mean_curvature(&patch, &ncf, CurvatureMethod::ClosedForm).unwrap();
            let gap = fd
                .h
                .zip_map(&cf.h, |a, b| norm4(&sub4(&a, &b)))
                .unwrap()
                .max_abs();
            errs.push((translator_residual(&fd).max, gap));
        }
        let r = errs[0].0 / errs[1].0;
        assert!((3.5..=4.5).contains(&r), "{errs:?}");
        let r = errs[0].1 / errs[1].1;
        assert!((3.5..=4.5).contains(&r), "{errs:?}");
    }

    #[test]
    fn flat_plane_is_not_a_translator() {
        let grid = square(0.1);
        let x = VectorField::from_fn(grid.clone(), |u, v| [u, v, 0.0, 0.0]);
        let patch = ImmersionPatch {
            x,
            anchor: (0, 0),
            anchor_pos: [-2.0, -2.0, 0.0, 0.0],
            lambda2: RealField::from_fn(grid, |_, _| 1.0),
            ambient: Ambient::R3,
        };
        let zeta = patch_dz(&patch).unwrap();
        assert!((zeta[0].at(3, 3) - c(0.5, 0.0)).norm() < 1e-14);
        // Only the frame route applies: there is no null curve behind a plane.
        let fd = Frame::of(&patch).unwrap();
        for (i, j) in patch.grid().active_nodes() {
            let (xu, xv) = fd.at(i, j);
            let e = frame_normal_part(&MINUS_E4, &xu, &xv);
            assert!((norm4(&e) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_map_round_trip_and_quadric() {
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let (ncf, patch) = grim(h);
            let pgm = recover_gauss_map(&patch).unwrap();
            assert!(pgm.chart_failures.is_empty());
            let (e1, e2) = round_trip_error(&pgm, &ncf).unwrap();
            let q = q2_membership(&pgm).max_abs();
            errs.push((e1.max_abs().max(e2.max_abs()), q));
            let rec_diff = pgm
                .recovered_g1
                .zip_map(&pgm.recovered_g2, |a, b| (a - b).norm())
                .unwrap()
                .max_abs();
            assert!(rec_diff < 10.0 * h * h);
            assert!(stereographic_normal_defect(&patch, &pgm).unwrap().max_abs() < 10.0 * h * h);
        }
        for k in 0..2 {
            let r = [errs[0].0 / errs[1].0, errs[0].1 / errs[1].1][k];
            assert!((3.5..=4.5).contains(&r), "{errs:?}");
        }
    }

    #[test]
    fn stereographic_of_grim_normal() {
        let u: f64 = 0.4;
        let s = (2.0 * u).cosh();
        let n = [(2.0 * u).tanh(), 0.0, -1.0 / s];
        assert!((stereographic(n) - c(u.tanh(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn graphical_pde_examples() {
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let hf = HeightField::from_fn(Domain::new(-1.4, 1.4, -1.0, 1.0), h, |x, _| x.cos().ln()).unwrap();
            errs.push(graphical_pde_residual(&hf).unwrap().max_abs());
        }
        assert!((3.5..=4.5).contains(&(errs[0] / errs[1])), "{errs:?}");
        let flat = HeightField::from_fn(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1, |_, _| 0.0).unwrap();
        let r = graphical_pde_residual(&flat).unwrap();
        r.active_values().for_each(|x| assert!((x - 1.0).abs() < 1e-10));
        // A vertical slope: F = 3 x2 is not a translator either.
        let tilted = HeightField::from_fn(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1, |_, y| 3.0 * y).unwrap();
        let r = graphical_pde_residual(&tilted).unwrap();
        r.active_values().for_each(|x| assert!((x - 10f64.sqrt().recip()).abs() < 1e-12));
    }

    #[test]
    fn laplace_beltrami_examples() {
        let grid = square(0.1);
        let lambda = RealField::from_fn(grid.clone(), |u, _| 1.0 + u * u);
        let theta = RealField::from_fn(grid.clone(), |_, v| PI / 2.0 + v);
        assert!(laplace_beltrami(&theta, &lambda).unwrap().max_abs() < 1e-12);
        let flat = RealField::from_fn(grid.clone(), |_, _| 1.0);
        let sq = RealField::from_fn(grid, |u, _| u * u);
        let lb = laplace_beltrami(&sq, &flat).unwrap();
        lb.active_values().for_each(|x| assert!((x - 2.0).abs() < 1e-10));
    }

    #[test]
    fn lagrangian_angle_is_harmonic_and_matches_height() {
        let h = 0.02;
        let (ncf, patch) = lagrangian(h);
        let pgm = recover_gauss_map(&patch).unwrap();
        let anchor = patch.grid().nearest_node(0.0, 0.0);
        let theta = lagrangian_angle(&pgm.recovered_g1, anchor);
        let g = theta.grid();
        for (i, j) in g.active_nodes() {
            assert!((theta.at(i, j) - (PI / 2.0 + g.v(j))).abs() < 10.0 * h * h);
        }
        let lambda = patch.lambda2.restrict(theta.grid().clone()).unwrap();
        assert!(laplace_beltrami(&theta, &lambda).unwrap().max_abs() < 100.0 * h * h);
        assert!(lagrangian_phase_defect(&patch, &theta).unwrap().max_abs() < 10.0 * h * h);
        let _ = ncf;
    }

    #[test]
    fn unwrap_follows_winding_phase() {
        let grid = square(0.05);
        let w = ComplexField::from_fn(grid.clone(), |u, v| Complex64::from_polar(1.0 + u * u, 3.0 * v + u));
        let (i0, j0) = grid.nearest_node(0.0, 0.0);
        let t = unwrap_phase(&w, (i0, j0));
        for (i, j) in grid.active_nodes() {
            assert!((t.at(i, j) - (3.0 * grid.v(j) + grid.u(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_fit_recovers_known_circle() {
        let (c0, r) = (c(0.3, -2.0), 1.7);
        let pts: Vec<_> = (0..20).map(|k| c0 + Complex64::from_polar(r, 0.1 * k as f64)).collect();
        let fit = fit_circle(&pts).unwrap();
        assert!((fit.center - c0).norm() < 1e-12 && (fit.radius - r).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
        let line: Vec<_> = (0..10).map(|k| c(k as f64, 2.0 * k as f64)).collect();
        assert_eq!(fit_circle(&line).unwrap_err(), VerifyError::Collinear);
    }

    #[test]
    fn tangent_consistency_is_second_order() {
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let (ncf, patch) = grim(h);
            errs.push(tangent_consistency(&patch, &ncf).unwrap().max_abs());
        }
        assert!((3.5..=4.5).contains(&(errs[0] / errs[1])), "{errs:?}");
    }
}
