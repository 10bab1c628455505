//! Construct, integrate and verify one example, collecting named residuals.
//!
//! The verify stage covers the Gauss-map conditions and the null curve; the
//! integrate stage adds the patch and every geometric check on it.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::catalog::{CatalogError, ExampleSpec, Generator};
use crate::gaussmap::{
    compatibility_f, equivalence_field, fz_identity_residual, integrability_residuals,
    translator_equation_residual_r3, Ambient, Compatibility, ConditionResiduals, GaussMapError, GaussMapPair,
    Tolerances,
};
use crate::grid::{ComplexGrid, Domain, GridError, RealField};
use crate::immersion::{
    conformality, induced_metric, integrate_immersion, loop_closure_cells, ImmersionError, ImmersionPatch,
    IntegrationOptions,
};
use crate::nullcurve::{build_null_curve, integrability_residual, norm_identity_residual, nullity_residual, NullCurveError, NullCurveField};
use crate::report::ResidualReport;
use crate::verify::{
    e4_normal_projection, fit_circle, lagrangian_angle, lagrangian_phase_defect, laplace_beltrami, mean_curvature,
    q2_membership, recover_gauss_map, round_trip_error, stereographic_normal_defect, tangent_consistency,
    CurvatureMethod, CurvatureReport, Norms, VerifyError,
};

pub type Residuals = BTreeMap<String, Norms>;

/// Width of the boundary strip left out of the `_interior` residuals. Fixed
/// in physical units so every level of a convergence study takes its max over
/// the same region.
pub const INTERIOR_MARGIN: f64 = 0.1;

/// Rings of nodes to skip for checks that difference a field which was
/// itself differenced twice upstream (g to phi, X to zeta). Outside this band
/// every stencil in the chain is central.
pub const CENTRAL_CHAIN_RINGS: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    GaussMap(#[from] GaussMapError),
    #[error(transparent)]
    NullCurve(#[from] NullCurveError),
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl PipelineError {
    /// Failures that come from the numbers rather than from the inputs.
    pub fn is_numerical_refusal(&self) -> bool {
        matches!(
            self,
            PipelineError::Immersion(ImmersionError::Refused { .. })
                | PipelineError::GaussMap(GaussMapError::Holomorphic { .. })
                | PipelineError::GaussMap(GaussMapError::OutsideDisc { .. })
                | PipelineError::GaussMap(GaussMapError::Empty)
                | PipelineError::NullCurve(NullCurveError::Empty)
                | PipelineError::Verify(VerifyError::Degenerate)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub h: f64,
    /// Defaults to the example's domain.
    pub domain: Option<Domain>,
    /// Parameter point mapped to `anchor_pos`; the nearest node is used.
    pub anchor: (f64, f64),
    /// Defaults to the closed-form position at the anchor when there is
    /// one, else the origin.
    pub anchor_pos: Option<[f64; 4]>,
    pub tolerances: Tolerances,
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            h: 0.02,
            domain: None,
            anchor: (0.0, 0.0),
            anchor_pos: None,
            tolerances: Tolerances::default(),
            force: false,
        }
    }
}

impl RunOptions {
    pub fn with_h(h: f64) -> Self {
        Self {
            h,
            ..Self::default()
        }
    }
}

/// Report label: the catalog name plus its parameter, if any.
pub fn label(spec: &ExampleSpec) -> String {
    match spec.generator {
        Generator::TiltedReaper { theta } => format!("{}:theta={theta}", spec.name),
        _ => spec.name.to_string(),
    }
}

pub struct VerifyStage {
    pub spec: ExampleSpec,
    pub pair: GaussMapPair,
    pub compat: Compatibility,
    pub conditions: ConditionResiduals,
    pub ncf: NullCurveField,
    pub residuals: Residuals,
}

impl VerifyStage {
    pub fn report(&self) -> ResidualReport {
        ResidualReport::new(label(&self.spec), self.pair.grid(), self.residuals.clone())
    }
}

fn put(r: &mut Residuals, name: &str, field: &RealField) {
    r.insert(name.to_string(), Norms::of(field));
}

pub fn verify_stage(spec: &ExampleSpec, opts: &RunOptions) -> Result<VerifyStage, PipelineError> {
    let tol = &opts.tolerances;
    let domain = opts.domain.unwrap_or(spec.default_domain);
    let grid = Arc::new(ComplexGrid::with_spacing(domain, opts.h)?);
    let pair = spec.pair_on(grid)?;
    pair.check_nowhere_holomorphic(tol.eps_hol)?;
    let compat = compatibility_f(&pair, tol)?;
    let conditions = integrability_residuals(&pair, &compat, tol)?;
    let ncf = build_null_curve(&pair, &compat.f_cap)?;

    let mut r = Residuals::new();
    put(&mut r, "cp", &conditions.cp_residual);
    put(&mut r, "l_condition", &conditions.l_residual);
    put(&mut r, "r_condition", &conditions.r_residual);
    put(&mut r, "l_r_equivalence", &equivalence_field(&conditions, &pair, tol)?);
    put(&mut r, "fz_identity", &fz_identity_residual(&pair, &compat.f_cap)?);
    if pair.ambient == Ambient::R3 {
        let g = pair.g1.map(|x| -Complex64::i() * x);
        put(&mut r, "gauss_equation", &translator_equation_residual_r3(&g, tol)?.residual);
    }
    put(&mut r, "nullity", &nullity_residual(&ncf));
    put(&mut r, "norm_identity", &norm_identity_residual(&ncf));
    let integ = integrability_residual(&ncf)?;
    put(&mut r, "phi_zbar", &integ.residual);
    put(&mut r, "phi_zbar_imag", &integ.imag);
    put(&mut r, "loop_closure", &loop_closure_cells(&ncf));
    put(&mut r, "metric_alt_forms", &induced_metric(&ncf)?.alt_forms_gap);
    Ok(VerifyStage {
        spec: spec.clone(),
        pair,
        compat,
        conditions,
        ncf,
        residuals: r,
    })
}

pub struct IntegrateStage {
    pub verify: VerifyStage,
    pub patch: ImmersionPatch,
    pub curvature: CurvatureReport,
    pub residuals: Residuals,
}

impl IntegrateStage {
    pub fn report(&self) -> ResidualReport {
        ResidualReport::new(label(&self.verify.spec), self.patch.grid(), self.residuals.clone())
    }
}

/// `| |g| - 1 |` stays at rounding level on every node.
fn unimodular(field: &crate::grid::ComplexField) -> bool {
    field.active_values().all(|g| (g.norm() - 1.0).abs() < 1e-12)
}

pub fn integrate_stage(vs: VerifyStage, opts: &RunOptions) -> Result<IntegrateStage, PipelineError> {
    let ncf = &vs.ncf;
    let grid = ncf.grid().clone();
    let anchor = grid.nearest_node(opts.anchor.0, opts.anchor.1);
    let anchor_pos = opts.anchor_pos.unwrap_or_else(|| {
        vs.spec
            .closed_form_x(grid.u(anchor.0), grid.v(anchor.1))
            .unwrap_or([0.0; 4])
    });
    let iopts = if opts.force {
        IntegrationOptions::forced()
    } else {
        IntegrationOptions::with_refusal(&grid, opts.tolerances.refusal_factor)
    };
    let patch = integrate_immersion(ncf, anchor, anchor_pos, iopts)?;

    let mut r = vs.residuals.clone();
    if vs.spec.closed_form_x(0.0, 0.0).is_some() {
        let err = RealField::from_nodes(grid.clone(), |i, j| {
            let exact = vs.spec.closed_form_x(grid.u(i), grid.v(j)).expect("closed form");
            let p = patch.x.at(i, j);
            (0..4).map(|k| (p[k] - exact[k]).abs()).fold(0.0, f64::max)
        });
        put(&mut r, "x_closed_form", &err);
    }
    if vs.spec.closed_form_metric(0.0, 0.0).is_some() {
        let err = RealField::from_nodes(grid.clone(), |i, j| {
            let exact = vs.spec.closed_form_metric(grid.u(i), grid.v(j)).expect("closed form");
            (patch.lambda2.at(i, j) - exact).abs() / exact
        });
        put(&mut r, "metric_closed_form", &err);
    }
    put(&mut r, "tangent", &tangent_consistency(&patch, ncf)?);
    put(&mut r, "conformality", &conformality(&patch)?);

    let closed = mean_curvature(&patch, ncf, CurvatureMethod::ClosedForm)?;
    let fd = mean_curvature(&patch, ncf, CurvatureMethod::FiniteDifference)?;
    put(&mut r, "translator_closed_form", &closed.translator_residual);
    put(&mut r, "translator", &fd.translator_residual);
    let inner = Arc::new(fd.translator_residual.grid().inset(INTERIOR_MARGIN));
    put(&mut r, "translator_interior", &fd.translator_residual.restrict(inner)?);
    let paths = fd.h.zip_map(&closed.h.restrict(fd.h.grid().clone())?, |a, b| {
        (0..4).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
    })?;
    put(&mut r, "curvature_paths", &paths);
    put(&mut r, "e4_projection", &e4_normal_projection(&patch, ncf)?.disagreement);

    let pgm = recover_gauss_map(&patch)?;
    let (e1, e2) = round_trip_error(&pgm, ncf)?;
    put(&mut r, "gauss_map_round_trip", &e1.zip_map(&e2, f64::max)?);
    put(&mut r, "q2_membership", &q2_membership(&pgm));
    if patch.ambient == Ambient::R3 {
        put(&mut r, "stereographic_normal", &stereographic_normal_defect(&patch, &pgm)?);
    }
    if let Generator::TiltedReaper { theta } = vs.spec.generator {
        if theta != 0.0 {
            // G = -i g1 traces an arc of a circle.
            let pts: Vec<Complex64> = pgm.recovered_g1.active_values().map(|g| -Complex64::i() * g).collect();
            let fit = fit_circle(&pts)?;
            let field = pgm
                .recovered_g1
                .map(|g| ((-Complex64::i() * g - fit.center).norm() - fit.radius).abs());
            put(&mut r, "gauss_circle", &field);
        }
    }
    if unimodular(&ncf.g1) {
        let theta = lagrangian_angle(&pgm.recovered_g1, anchor);
        let lambda = patch.lambda2.restrict(theta.grid().clone())?;
        let lap = laplace_beltrami(&theta, &lambda)?;
        let band = Arc::new(lap.grid().eroded(CENTRAL_CHAIN_RINGS));
        put(&mut r, "lagrangian_harmonicity", &lap.restrict(band)?);
        put(&mut r, "lagrangian_phase", &lagrangian_phase_defect(&patch, &theta)?);
    }
    Ok(IntegrateStage {
        verify: vs,
        patch,
        curvature: fd,
        residuals: r,
    })
}

/// Both stages in sequence.
pub fn run(spec: &ExampleSpec, opts: &RunOptions) -> Result<IntegrateStage, PipelineError> {
    integrate_stage(verify_stage(spec, opts)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, CatalogParams};

    #[test]
    fn grim_reaper_residual_names() {
        let spec = catalog("grim_reaper", &CatalogParams::default()).unwrap();
        let out = run(&spec, &RunOptions::with_h(0.05)).unwrap();
        let names: Vec<&str> = out.residuals.keys().map(|s| s.as_str()).collect();
        for n in ["cp", "gauss_equation", "nullity", "translator", "stereographic_normal", "x_closed_form"] {
            assert!(names.contains(&n), "{names:?}");
        }
        assert!(!names.contains(&"lagrangian_harmonicity"));
        assert!(out.residuals["nullity"].max < 1e-12);
        assert_eq!(out.report().example, "grim_reaper");
    }

    #[test]
    fn lagrangian_gets_angle_checks() {
        let spec = catalog("lagrangian_castro_lerma", &CatalogParams::default()).unwrap();
        let out = run(&spec, &RunOptions::with_h(0.05)).unwrap();
        assert!(out.residuals.contains_key("lagrangian_harmonicity"));
        assert!(!out.residuals.contains_key("gauss_equation"));
    }

    #[test]
    fn refusal_is_classified() {
        let spec = catalog(
            "custom_expression",
            &CatalogParams {
                expr_g1: Some("0.5*tanh(u)*(cos(u) + i*sin(u))".into()),
                expr_g2: Some("0.5*tanh(u)*(cos(u) + i*sin(u))".into()),
                ..Default::default()
            },
        )
        .unwrap();
        let err = run(&spec, &RunOptions::with_h(0.01)).err().unwrap();
        assert!(err.is_numerical_refusal(), "{err}");
        let forced = RunOptions {
            force: true,
            ..RunOptions::with_h(0.05)
        };
        assert!(run(&spec, &forced).is_ok());
    }
}
