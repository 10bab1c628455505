//! Closed-form translators used as ground truth.
//!
//! `grim_reaper` and `tilted_reaper` are R^3 examples given by a single
//! Gauss map `G` (lifted to `(iG, iG)`), `lagrangian_castro_lerma` is an
//! R^4 pair with `|g1| = 1`, and `custom_expression` takes two parsed
//! expressions in `u` and `v`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::gaussmap::{r3_lift, Ambient, DiscMode, GaussMapError, GaussMapPair};
use crate::grid::{partial_u, ComplexField, ComplexGrid, Domain, GridError, RealField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown example `{0}` (expected one of: grim_reaper, tilted_reaper, lagrangian_castro_lerma, custom_expression)")]
    UnknownName(String),
    #[error("theta must be finite, got {0}")]
    BadTheta(f64),
    #[error("custom_expression needs both g1 and g2 expressions")]
    MissingExpression,
    #[error("expression for {which}: {source}")]
    Expression {
        which: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("expression for {which} is not finite at (u, v) = ({u}, {v})")]
    NonFinite { which: &'static str, u: f64, v: f64 },
    #[error("u-interval [{0}, {1}] contains the pole u = 1")]
    PoleInInterval(f64, f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    GaussMap(#[from] GaussMapError),
}

pub const NAMES: [&str; 4] = ["grim_reaper", "tilted_reaper", "lagrangian_castro_lerma", "custom_expression"];

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    GrimReaper,
    TiltedReaper { theta: f64 },
    Lagrangian,
    Custom { g1: Expr, g2: Expr },
}

/// Optional inputs to [`catalog`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    pub theta: Option<f64>,
    pub expr_g1: Option<String>,
    pub expr_g2: Option<String>,
    pub mode: Option<DiscMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub generator: Generator,
    pub default_domain: Domain,
    pub mode: DiscMode,
    pub ambient: Ambient,
}

pub fn catalog(name: &str, params: &CatalogParams) -> Result<ExampleSpec, CatalogError> {
    let square = Domain::new(-2.0, 2.0, -2.0, 2.0);
    let spec = |name, generator, default_domain, mode, ambient| ExampleSpec {
        name,
        generator,
        default_domain,
        mode,
        ambient,
    };
    match name {
        "grim_reaper" => Ok(spec(
            "grim_reaper",
            Generator::GrimReaper,
            square,
            params.mode.unwrap_or_default(),
            Ambient::R3,
        )),
        "tilted_reaper" => {
            let theta = params.theta.unwrap_or(0.0);
            if !theta.is_finite() {
                return Err(CatalogError::BadTheta(theta));
            }
            Ok(spec(
                "tilted_reaper",
                Generator::TiltedReaper { theta },
                square,
                params.mode.unwrap_or_default(),
                Ambient::R3,
            ))
        }
        // |g2| > 1 on part of the domain and |g1| = 1 everywhere.
        "lagrangian_castro_lerma" => Ok(spec(
            "lagrangian_castro_lerma",
            Generator::Lagrangian,
            Domain::new(-3.0, 0.5, -2.0, 2.0),
            params.mode.unwrap_or(DiscMode::ExtendedPlane),
            Ambient::R4,
        )),
        "custom_expression" => {
            let (Some(a), Some(b)) = (&params.expr_g1, &params.expr_g2) else {
                return Err(CatalogError::MissingExpression);
            };
            let parse = |which, s: &str| Expr::parse(s).map_err(|source| CatalogError::Expression { which, source });
            Ok(spec(
                "custom_expression",
                Generator::Custom {
                    g1: parse("g1", a)?,
                    g2: parse("g2", b)?,
                },
                square,
                params.mode.unwrap_or_default(),
                Ambient::R4,
            ))
        }
        other => Err(CatalogError::UnknownName(other.to_string())),
    }
}

pub fn grim_g(u: f64) -> Complex64 {
    Complex64::new(u.tanh(), 0.0)
}

pub fn tilted_g(theta: f64, u: f64) -> Complex64 {
    let (c, s) = (theta.cosh(), theta.sinh());
    Complex64::new(c * (2.0 * u).sinh(), s) / (1.0 + c * (2.0 * u).cosh())
}

/// The canonical solution `(u + 1)/(u - 1)` of the Lagrangian profile ODE.
pub fn lagrangian_profile(u: f64) -> f64 {
    (u + 1.0) / (u - 1.0)
}

impl ExampleSpec {
    /// The R^3 Gauss map `G`, for R^3 examples.
    pub fn r3_gauss_map(&self, u: f64, _v: f64) -> Option<Complex64> {
        match self.generator {
            Generator::GrimReaper => Some(grim_g(u)),
            Generator::TiltedReaper { theta } => Some(tilted_g(theta, u)),
            _ => None,
        }
    }

    /// `(g1, g2)` at one point.
    pub fn pair_at(&self, u: f64, v: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        match &self.generator {
            Generator::GrimReaper | Generator::TiltedReaper { .. } => {
                let g = self.r3_gauss_map(u, v).expect("R^3 example");
                (i * g, i * g)
            }
            Generator::Lagrangian => {
                let e = Complex64::from_polar(1.0, v);
                (e, lagrangian_profile(u) * e)
            }
            Generator::Custom { g1, g2 } => (g1.eval(u, v), g2.eval(u, v)),
        }
    }

    pub fn pair_on(&self, grid: Arc<ComplexGrid>) -> Result<GaussMapPair, CatalogError> {
        if let Generator::Custom { .. } = self.generator {
            for (i, j) in grid.active_nodes() {
                let (u, v) = (grid.u(i), grid.v(j));
                let (a, b) = self.pair_at(u, v);
                for (which, x) in [("g1", a), ("g2", b)] {
                    if !(x.re.is_finite() && x.im.is_finite()) {
                        return Err(CatalogError::NonFinite { which, u, v });
                    }
                }
            }
        }
        let pair = match self.ambient {
            Ambient::R3 => {
                let g = ComplexField::from_fn(grid, |u, v| self.r3_gauss_map(u, v).expect("R^3 example"));
                r3_lift(&g, self.mode)?
            }
            Ambient::R4 => {
                let g1 = ComplexField::from_fn(grid.clone(), |u, v| self.pair_at(u, v).0);
                let g2 = ComplexField::from_fn(grid, |u, v| self.pair_at(u, v).1);
                GaussMapPair::new(g1, g2, self.mode)?
            }
        };
        Ok(pair.with_tag(self.name))
    }

    /// Exact position in the four-slot layout, when known. The integration
    /// constant puts the origin of the parameter domain at the origin.
    pub fn closed_form_x(&self, u: f64, v: f64) -> Option<[f64; 4]> {
        let lc = (2.0 * u).cosh().ln();
        match self.generator {
            Generator::GrimReaper => Some([-2.0 * u.tanh().atan(), 2.0 * v, 0.0, -lc]),
            Generator::TiltedReaper { theta } => {
                let (c, s) = (theta.cosh(), theta.sinh());
                Some([-2.0 * c * u.tanh().atan(), s * lc + 2.0 * v, 0.0, -lc + 2.0 * v * s])
            }
            Generator::Lagrangian => Some([u * v.sin(), -u * v.cos(), -v, -u * u / 2.0]),
            Generator::Custom { .. } => None,
        }
    }

    pub fn closed_form_metric(&self, u: f64, _v: f64) -> Option<f64> {
        match self.generator {
            Generator::GrimReaper => Some(4.0),
            Generator::TiltedReaper { theta } => Some(4.0 * theta.cosh().powi(2)),
            Generator::Lagrangian => Some(1.0 + u * u),
            Generator::Custom { .. } => None,
        }
    }
}

/// Pointwise `|1/2 - (G - G')/(1 + G^2)|` on `n` nodes of `[u_min, u_max]`,
/// with `G'` by second-order finite differences.
pub fn lagrangian_ode_residual(
    profile: impl Fn(f64) -> f64,
    u_min: f64,
    u_max: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), CatalogError> {
    if u_min <= 1.0 && 1.0 <= u_max {
        return Err(CatalogError::PoleInInterval(u_min, u_max));
    }
    // A thin strip in v lets the grid derivative do the work.
    let grid = Arc::new(ComplexGrid::new(Domain::new(u_min, u_max, 0.0, 1.0), n, 5)?);
    let g = RealField::from_fn(grid.clone(), |u, _| profile(u));
    g.check_finite()?;
    let dg = partial_u(&g)?;
    let us: Vec<f64> = (0..n).map(|i| grid.u(i)).collect();
    let res = (0..n)
        .map(|i| {
            let (x, dx) = (g.at(i, 0), dg.at(i, 0));
            (0.5 - (x - dx) / (1.0 + x * x)).abs()
        })
        .collect();
    Ok((us, res))
}

/// The orthonormal frame adapted to a tilted grim reaper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedFrame {
    pub theta: f64,
    pub u1: [f64; 3],
    pub u2: [f64; 3],
    pub u3: [f64; 3],
}

pub fn tilted_frame(theta: f64) -> Result<TiltedFrame, CatalogError> {
    if !theta.is_finite() {
        return Err(CatalogError::BadTheta(theta));
    }
    let (c, t) = (theta.cosh(), theta.tanh());
    Ok(TiltedFrame {
        theta,
        u1: [1.0, 0.0, 0.0],
        u2: [0.0, -t, 1.0 / c],
        u3: [0.0, 1.0 / c, t],
    })
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl TiltedFrame {
    /// `max |<U_a, U_b> - delta_ab|`.
    pub fn gram_error(&self) -> f64 {
        let v = [self.u1, self.u2, self.u3];
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot3(&v[a], &v[b]) - target).abs());
            }
        }
        worst
    }

    /// Width of the strip over which the surface is a graph.
    pub fn strip_width(&self) -> f64 {
        PI * self.theta.cosh()
    }

    /// Scaled grim reaper profile `cosh(theta) ln cos(t / cosh(theta))`.
    pub fn profile(&self, t: f64) -> f64 {
        let c = self.theta.cosh();
        c * (t / c).cos().ln()
    }

    /// The coordinate along `U3` of a point `(x1, x2, x3)`.
    pub fn x0(&self, p: [f64; 3]) -> f64 {
        dot3(&self.u3, &p)
    }

    /// Point of the ruled surface `x1 U1 + T(x1) U2 + x0 U3`.
    pub fn repatch(&self, x1: f64, x0: f64) -> [f64; 3] {
        let t = self.profile(x1);
        [0, 1, 2].map(|k| x1 * self.u1[k] + t * self.u2[k] + x0 * self.u3[k])
    }

    /// Height function `cosh(theta) T(x1) + sinh(theta) x2` of the graph.
    pub fn height(&self, x1: f64, x2: f64) -> f64 {
        self.theta.cosh() * self.profile(x1) + self.theta.sinh() * x2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(theta: f64) -> CatalogParams {
        CatalogParams {
            theta: Some(theta),
            ..Default::default()
        }
    }

    #[test]
    fn names_and_errors() {
        for n in NAMES.iter().take(3) {
            assert_eq!(catalog(n, &params(0.5)).unwrap().name, *n);
        }
        assert!(matches!(catalog("scherk", &CatalogParams::default()), Err(CatalogError::UnknownName(_))));
        assert!(matches!(catalog("tilted_reaper", &params(f64::NAN)), Err(CatalogError::BadTheta(_))));
        assert!(matches!(catalog("tilted_reaper", &params(f64::INFINITY)), Err(CatalogError::BadTheta(_))));
        assert_eq!(catalog("custom_expression", &CatalogParams::default()).unwrap_err(), CatalogError::MissingExpression);
        let bad = CatalogParams {
            expr_g1: Some("tanh(u".into()),
            expr_g2: Some("u".into()),
            ..Default::default()
        };
        assert!(matches!(catalog("custom_expression", &bad), Err(CatalogError::Expression { which: "g1", .. })));
    }

    #[test]
    fn tilted_at_zero_is_grim_reaper() {
        let grim = catalog("grim_reaper", &CatalogParams::default()).unwrap();
        let tilt = catalog("tilted_reaper", &params(0.0)).unwrap();
        let grid = Arc::new(ComplexGrid::with_spacing(grim.default_domain, 0.05).unwrap());
        let (a, b) = (grim.pair_on(grid.clone()).unwrap(), tilt.pair_on(grid.clone()).unwrap());
        for (i, j) in grid.active_nodes() {
            assert!((a.g1.at(i, j) - b.g1.at(i, j)).norm() < 1e-15);
            assert!((a.g2.at(i, j) - b.g2.at(i, j)).norm() < 1e-15);
            let (u, v) = (grid.u(i), grid.v(j));
            let (p, q) = (grim.closed_form_x(u, v).unwrap(), tilt.closed_form_x(u, v).unwrap());
            assert_eq!(p, q);
        }
    }

    #[test]
    fn closed_forms_at_the_origin() {
        let lag = catalog("lagrangian_castro_lerma", &CatalogParams::default()).unwrap();
        assert_eq!(lag.closed_form_x(0.0, 0.0), Some([0.0, -0.0, -0.0, -0.0]));
        assert_eq!(lag.closed_form_metric(2.0, 1.0), Some(5.0));
        let (g1, g2) = lag.pair_at(0.0, 0.0);
        assert_eq!((g1, g2), (Complex64::new(1.0, 0.0), Complex64::new(-1.0, -0.0)));
        assert_eq!(lag.mode, DiscMode::ExtendedPlane);
        let grim = catalog("grim_reaper", &CatalogParams::default()).unwrap();
        assert_eq!(grim.closed_form_x(0.0, 0.0), Some([0.0, 0.0, 0.0, -0.0]));
        assert_eq!(grim.closed_form_metric(0.0, 0.0), Some(4.0));
        let custom = catalog(
            "custom_expression",
            &CatalogParams {
                expr_g1: Some("0.5*tanh(u)".into()),
                expr_g2: Some("0.5*tanh(u)".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(custom.closed_form_x(0.1, 0.2), None);
        assert!((custom.pair_at(1.0, 0.0).0.re - 0.5 * 1f64.tanh()).abs() < 1e-16);
    }

    #[test]
    fn tilted_g_stays_in_disc_and_on_a_circle() {
        for theta in [0.3, 0.7, 1.2] {
            let (centre, radius) = (Complex64::new(0.0, -1.0 / f64::sinh(theta)), 1.0 / f64::tanh(theta));
            for k in -20..=20 {
                let g = tilted_g(theta, 0.1 * k as f64);
                assert!(g.norm() < 1.0);
                assert!(((g - centre).norm() - radius).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lagrangian_ode() {
        // G' = -2/(u-1)^2, G - G' = (u^2+1)/(u-1)^2, 1 + G^2 = 2(u^2+1)/(u-1)^2.
        let u: f64 = -1.7;
        let (g, dg) = (lagrangian_profile(u), -2.0 / (u - 1.0).powi(2));
        assert!(((g - dg) / (1.0 + g * g) - 0.5).abs() < 1e-15);
        let mut errs = Vec::new();
        for n in [101, 201] {
            let (_, r) = lagrangian_ode_residual(lagrangian_profile, -3.0, 0.0, n).unwrap();
            errs.push(r.iter().cloned().fold(0.0, f64::max));
        }
        assert!((3.5..=4.5).contains(&(errs[0] / errs[1])), "{errs:?}");
        let (_, r) = lagrangian_ode_residual(|u| u, -3.0, 0.0, 101).unwrap();
        assert!(r.iter().cloned().fold(f64::INFINITY, f64::min) > 0.1);
        assert_eq!(
            lagrangian_ode_residual(lagrangian_profile, 0.0, 2.0, 11).unwrap_err(),
            CatalogError::PoleInInterval(0.0, 2.0)
        );
    }

    #[test]
    fn frame_properties() {
        let f0 = tilted_frame(0.0).unwrap();
        assert_eq!((f0.u2, f0.u3), ([0.0, -0.0, 1.0], [0.0, 1.0, 0.0]));
        for theta in [0.3, 0.7, 1.2, -2.0] {
            assert!(tilted_frame(theta).unwrap().gram_error() < 1e-14);
        }
        let t = tilted_frame(1.5f64.acosh()).unwrap();
        assert!((t.strip_width() - 1.5 * PI).abs() < 1e-12);
        assert!(tilted_frame(f64::NAN).is_err());
    }

    #[test]
    fn repatch_reproduces_closed_form() {
        for theta in [0.3, 0.7, 1.2] {
            let spec = catalog("tilted_reaper", &params(theta)).unwrap();
            let frame = tilted_frame(theta).unwrap();
            for (u, v) in [(0.0, 0.0), (0.7, -1.1), (-1.5, 1.9)] {
                let x = spec.closed_form_x(u, v).unwrap();
                let p = [x[0], x[1], x[3]];
                let q = frame.repatch(p[0], frame.x0(p));
                for k in 0..3 {
                    assert!((p[k] - q[k]).abs() < 1e-12, "{theta} {p:?} {q:?}");
                }
                // The surface is the graph of the height function.
                assert!((frame.height(p[0], p[1]) - p[2]).abs() < 1e-12);
            }
        }
    }
}
