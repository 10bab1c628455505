//! Integration of `X_z = phi` over the sampled domain.
//!
//! Since `X` is real, `X_z = phi` is the pair `X_u = 2 Re phi`,
//! `X_v = -2 Im phi`. The patch is assembled by the trapezoidal rule along a
//! deterministic axis-aligned spanning tree rooted at the anchor node. Path
//! independence needs `Im(phi_zbar) = 0`; the loop-closure residual measures
//! how far the sampled `phi` is from that.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::gaussmap::Ambient;
use crate::grid::{partial_u, partial_v, wirtinger_dzbar, Axis, ComplexGrid, Field, GridError, RealField};
use crate::nullcurve::NullCurveField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImmersionError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("active region has a hole; the domain is not simply connected")]
    NotSimplyConnected,
    #[error("active region has {0} disconnected components")]
    Disconnected(usize),
    #[error("anchor node ({0}, {1}) is not active")]
    AnchorInactive(usize, usize),
    #[error("loop-closure residual {residual:.3e} exceeds {threshold:.3e}; phi is not integrable (use force to override)")]
    Refused { residual: f64, threshold: f64 },
}

/// Which axis the spanning tree walks first from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathOrder {
    /// Along the anchor's column first, then along rows.
    #[default]
    RowMajor,
    /// Along the anchor's row first, then along columns.
    ColumnMajor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub order: PathOrder,
    /// Refuse when the loop-closure residual exceeds this; `None` forces.
    pub refusal_threshold: Option<f64>,
}

impl IntegrationOptions {
    /// Default refusal at `factor * h^2`.
    pub fn with_refusal(grid: &ComplexGrid, factor: f64) -> Self {
        Self {
            order: PathOrder::RowMajor,
            refusal_threshold: Some(factor * grid.h() * grid.h()),
        }
    }

    pub fn forced() -> Self {
        Self {
            order: PathOrder::RowMajor,
            refusal_threshold: None,
        }
    }
}

pub type VectorField = Field<[f64; 4]>;

#[derive(Debug, Clone)]
pub struct ImmersionPatch {
    /// Positions in the four-slot layout; R^3 patches keep slot 2 at zero.
    pub x: VectorField,
    pub anchor: (usize, usize),
    pub anchor_pos: [f64; 4],
    /// Conformal factor `4|f|^2 (1 + |g1|^2)(1 + |g2|^2)`.
    pub lambda2: RealField,
    pub ambient: Ambient,
}

impl ImmersionPatch {
    pub fn grid(&self) -> &Arc<ComplexGrid> {
        self.x.grid()
    }

    /// Component `k` of the position as a scalar field.
    pub fn component(&self, k: usize) -> RealField {
        self.x.map(|p| p[k])
    }

    /// Position in output coordinates (3 or 4 entries).
    pub fn coords(&self, i: usize, j: usize) -> Vec<f64> {
        let p = self.x.at(i, j);
        match self.ambient {
            Ambient::R3 => crate::nullcurve::R3_SLOTS.iter().map(|&k| p[k]).collect(),
            Ambient::R4 => p.to_vec(),
        }
    }
}

fn gradient(phi: &[Complex64; 4]) -> ([f64; 4], [f64; 4]) {
    (phi.map(|p| 2.0 * p.re), phi.map(|p| -2.0 * p.im))
}

fn check_topology(grid: &ComplexGrid) -> Result<(), ImmersionError> {
    let components = grid.active_components();
    if components > 1 {
        return Err(ImmersionError::Disconnected(components));
    }
    if grid.has_holes() {
        return Err(ImmersionError::NotSimplyConnected);
    }
    Ok(())
}

/// Integrates `X_z = phi` with `X(anchor) = anchor_pos`.
pub fn integrate_immersion(
    ncf: &NullCurveField,
    anchor: (usize, usize),
    anchor_pos: [f64; 4],
    opts: IntegrationOptions,
) -> Result<ImmersionPatch, ImmersionError> {
    let grid = ncf.grid().clone();
    check_topology(&grid)?;
    if anchor.0 >= grid.n_u() || anchor.1 >= grid.n_v() || !grid.is_active(anchor.0, anchor.1) {
        return Err(ImmersionError::AnchorInactive(anchor.0, anchor.1));
    }
    if let Some(threshold) = opts.refusal_threshold {
        let residual = loop_closure_residual(ncf);
        if residual > threshold {
            return Err(ImmersionError::Refused { residual, threshold });
        }
    }
    let first = match opts.order {
        PathOrder::RowMajor => Axis::V,
        PathOrder::ColumnMajor => Axis::U,
    };
    let (hu, hv) = (grid.h_u(), grid.h_v());
    let mut values = vec![[f64::NAN; 4]; grid.len()];
    values[grid.index(anchor.0, anchor.1)] = anchor_pos;
    for edge in grid.spanning_edges(anchor, first) {
        let (pi, pj) = edge.parent;
        let (ci, cj) = edge.child;
        let (pu, pv) = gradient(&ncf.phi_at(pi, pj));
        let (cu, cv) = gradient(&ncf.phi_at(ci, cj));
        // signed step along the axis
        let (step, a, b) = match edge.axis {
            Axis::U => ((ci as f64 - pi as f64) * hu, pu, cu),
            Axis::V => ((cj as f64 - pj as f64) * hv, pv, cv),
        };
        let prev = values[grid.index(pi, pj)];
        values[grid.index(ci, cj)] = [0, 1, 2, 3].map(|k| prev[k] + 0.5 * step * (a[k] + b[k]));
    }
    let x = Field::new(grid.clone(), values)?;
    Ok(ImmersionPatch {
        x,
        anchor,
        anchor_pos,
        lambda2: induced_metric(ncf)?.lambda2,
        ambient: ncf.ambient,
    })
}

/// Normalised circulation of `(X_u, X_v) = (2 Re phi, -2 Im phi)` around
/// every grid cell with four active corners, maxed over components.
pub fn loop_closure_cells(ncf: &NullCurveField) -> RealField {
    let grid = ncf.grid().clone();
    let (hu, hv) = (grid.h_u(), grid.h_v());
    // Cells are indexed by their lower-left corner.
    let cell_grid = Arc::new(grid.restricted(|i, j| {
        i + 1 < grid.n_u()
            && j + 1 < grid.n_v()
            && grid.is_active(i + 1, j)
            && grid.is_active(i, j + 1)
            && grid.is_active(i + 1, j + 1)
    }));
    RealField::from_nodes(cell_grid, |i, j| {
        let g00 = gradient(&ncf.phi_at(i, j));
        let g10 = gradient(&ncf.phi_at(i + 1, j));
        let g01 = gradient(&ncf.phi_at(i, j + 1));
        let g11 = gradient(&ncf.phi_at(i + 1, j + 1));
        (0..4)
            .map(|k| {
                let bottom = 0.5 * (g00.0[k] + g10.0[k]) * hu;
                let right = 0.5 * (g10.1[k] + g11.1[k]) * hv;
                let top = 0.5 * (g01.0[k] + g11.0[k]) * hu;
                let left = 0.5 * (g00.1[k] + g01.1[k]) * hv;
                (((bottom - top) + (right - left)) / (hu * hv)).abs()
            })
            .fold(0.0, f64::max)
    })
}

pub fn loop_closure_residual(ncf: &NullCurveField) -> f64 {
    loop_closure_cells(ncf).max_abs()
}

#[derive(Debug, Clone)]
pub struct InducedMetric {
    /// `4|f|^2 (1 + |g1|^2)(1 + |g2|^2)`.
    pub lambda2: RealField,
    /// Relative disagreement among the three expressions for the metric
    /// (the product form and the two `16|(g)_zbar|^2 ...` forms).
    pub alt_forms_gap: RealField,
}

pub fn induced_metric(ncf: &NullCurveField) -> Result<InducedMetric, GridError> {
    let grid = ncf.grid().clone();
    let lambda2 = RealField::from_nodes(grid.clone(), |i, j| {
        4.0 * ncf.f.at(i, j).norm_sqr() * (1.0 + ncf.g1.at(i, j).norm_sqr()) * (1.0 + ncf.g2.at(i, j).norm_sqr())
    });
    let d1 = wirtinger_dzbar(&ncf.g1)?;
    let d2 = wirtinger_dzbar(&ncf.g2)?;
    let alt_forms_gap = RealField::from_nodes(grid.clone(), |i, j| {
            let (g1, g2) = (ncf.g1.at(i, j), ncf.g2.at(i, j));
            let (a1, a2) = (1.0 + g1.norm_sqr(), 1.0 + g2.norm_sqr());
            let m0 = lambda2.at(i, j);
            let m1 = 16.0 * d1.at(i, j).norm_sqr() / (1.0 - g1 * g2.conj()).norm_sqr() * a2 / a1;
            let m2 = 16.0 * d2.at(i, j).norm_sqr() / (1.0 - g1.conj() * g2).norm_sqr() * a1 / a2;
            ((m0 - m1).abs().max((m0 - m2).abs()).max((m1 - m2).abs())) / m0
    });
    Ok(InducedMetric {
        lambda2,
        alt_forms_gap,
    })
}

/// Discrete tangent frame `(X_u, X_v)` of a patch, one field per component.
#[derive(Debug, Clone)]
pub struct Frame {
    pub xu: [RealField; 4],
    pub xv: [RealField; 4],
}

impl Frame {
    pub fn of(patch: &ImmersionPatch) -> Result<Self, GridError> {
        let comps = [0, 1, 2, 3].map(|k| patch.component(k));
        let mut xu = Vec::with_capacity(4);
        let mut xv = Vec::with_capacity(4);
        for c in &comps {
            xu.push(partial_u(c)?);
            xv.push(partial_v(c)?);
        }
        let arr = |v: Vec<RealField>| -> [RealField; 4] { v.try_into().expect("four components") };
        Ok(Self { xu: arr(xu), xv: arr(xv) })
    }

    pub fn at(&self, i: usize, j: usize) -> ([f64; 4], [f64; 4]) {
        ([0, 1, 2, 3].map(|k| self.xu[k].at(i, j)), [0, 1, 2, 3].map(|k| self.xv[k].at(i, j)))
    }
}

pub(crate) fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per node, the larger of `| |X_u|^2 - |X_v|^2 | / Lambda^2` and
/// `|X_u . X_v| / Lambda^2`, with `Lambda^2` the mean of `|X_u|^2, |X_v|^2`.
pub fn conformality(patch: &ImmersionPatch) -> Result<RealField, GridError> {
    let frame = Frame::of(patch)?;
    Ok(RealField::from_nodes(patch.grid().clone(), |i, j| {
        let (xu, xv) = frame.at(i, j);
        let (uu, vv) = (dot(&xu, &xu), dot(&xv, &xv));
        let l2 = 0.5 * (uu + vv);
        ((uu - vv).abs() / l2).max(dot(&xu, &xv).abs() / l2)
    }))
}
