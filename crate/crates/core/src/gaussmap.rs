//! Prescribed complexified Gauss maps `(g1, g2)` and the residuals of the
//! compatibility and integrability conditions they must satisfy before a
//! translator can be built from them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    mixed_dz_dzbar, wirtinger_dz, wirtinger_dzbar, ComplexField, ComplexGrid, GridError,
    RealField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussMapError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("|{which}| = {modulus} >= 1 at node ({i}, {j}) in strict-disc mode")]
    OutsideDisc {
        which: &'static str,
        modulus: f64,
        i: usize,
        j: usize,
    },
    #[error("{which} is holomorphic somewhere: min |d/dzbar| = {floor:.3e} below {eps:.3e}")]
    Holomorphic {
        which: &'static str,
        floor: f64,
        eps: f64,
    },
    #[error("no active nodes left after masking")]
    Empty,
}

/// Where the Gauss map is allowed to take values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscMode {
    /// `|g1|, |g2| < 1` everywhere.
    #[default]
    StrictDisc,
    /// Values anywhere in the plane; branch points where `conj(g1) g2 = 1`
    /// are masked.
    ExtendedPlane,
}

/// Dimension of the ambient space the surface lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    R3,
    R4,
}

impl Ambient {
    pub fn dim(self) -> usize {
        match self {
            Ambient::R3 => 3,
            Ambient::R4 => 4,
        }
    }
}

/// Numerical floors and thresholds shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative floor for `|d g/dzbar|`, scaled by the field magnitude.
    pub eps_hol: f64,
    /// Nodes with `|1 - g1 conj(g2)| < eps_branch` are masked.
    pub eps_branch: f64,
    /// Integration is refused when the loop residual exceeds
    /// `refusal_factor * h^2`.
    pub refusal_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_hol: 1e-8,
            eps_branch: 1e-6,
            refusal_factor: 1e3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussMapPair {
    pub g1: ComplexField,
    pub g2: ComplexField,
    pub mode: DiscMode,
    pub family_tag: Option<String>,
    pub ambient: Ambient,
}

impl GaussMapPair {
    pub fn new(g1: ComplexField, g2: ComplexField, mode: DiscMode) -> Result<Self, GaussMapError> {
        if g1.grid() != g2.grid() {
            return Err(GridError::GridMismatch.into());
        }
        g1.check_finite()?;
        g2.check_finite()?;
        if mode == DiscMode::StrictDisc {
            for (which, g) in [("g1", &g1), ("g2", &g2)] {
                let grid = g.grid();
                if let Some((i, j)) = grid.active_nodes().find(|&(i, j)| g.at(i, j).norm() >= 1.0) {
                    return Err(GaussMapError::OutsideDisc {
                        which,
                        modulus: g.at(i, j).norm(),
                        i,
                        j,
                    });
                }
            }
        }
        Ok(Self {
            g1,
            g2,
            mode,
            family_tag: None,
            ambient: Ambient::R4,
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.family_tag = Some(tag.into());
        self
    }

    pub fn grid(&self) -> &Arc<ComplexGrid> {
        self.g1.grid()
    }

    /// Same pair, sampled only on `grid`'s active nodes.
    pub fn restrict(&self, grid: Arc<ComplexGrid>) -> Result<Self, GaussMapError> {
        Ok(Self {
            g1: self.g1.restrict(grid.clone())?,
            g2: self.g2.restrict(grid)?,
            mode: self.mode,
            family_tag: self.family_tag.clone(),
            ambient: self.ambient,
        })
    }

    /// Largest `|g1|`, `|g2|` on the active set, or 1 when both vanish.
    pub fn field_scale(&self) -> f64 {
        let s = self.g1.max_abs().max(self.g2.max_abs());
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// `min over active nodes of min(|(g1)_zbar|, |(g2)_zbar|)`.
    pub fn holomorphy_floor(&self) -> Result<f64, GaussMapError> {
        let d1 = wirtinger_dzbar(&self.g1)?;
        let d2 = wirtinger_dzbar(&self.g2)?;
        Ok(d1
            .active_values()
            .chain(d2.active_values())
            .map(|x| x.norm())
            .fold(f64::INFINITY, f64::min))
    }

    /// Errors when either map is (numerically) holomorphic at some node.
    pub fn check_nowhere_holomorphic(&self, eps_hol: f64) -> Result<f64, GaussMapError> {
        let eps = eps_hol * self.field_scale();
        for (which, g) in [("g1", &self.g1), ("g2", &self.g2)] {
            let floor = wirtinger_dzbar(g)?
                .active_values()
                .map(|x| x.norm())
                .fold(f64::INFINITY, f64::min);
            if floor < eps {
                return Err(GaussMapError::Holomorphic { which, floor, eps });
            }
        }
        self.holomorphy_floor()
    }
}

/// Output of [`compatibility_f`].
#[derive(Debug, Clone)]
pub struct Compatibility {
    /// Average of the two sides of the compatibility condition.
    pub f_cap: ComplexField,
    /// Modulus of the difference of the two sides.
    pub cp_residual: RealField,
    /// Nodes masked as branch-point candidates.
    pub branch_nodes: Vec<(usize, usize)>,
}

/// The two expressions whose equality is the compatibility condition:
/// `(g1)_zbar / ((1 - g1 conj g2)(1 + |g1|^2))` and
/// `(g2)_zbar / ((1 - conj g1 g2)(1 + |g2|^2))`.
fn cp_sides(g1: Complex64, g2: Complex64, d1: Complex64, d2: Complex64) -> (Complex64, Complex64) {
    let a = d1 / ((1.0 - g1 * g2.conj()) * (1.0 + g1.norm_sqr()));
    let b = d2 / ((1.0 - g1.conj() * g2) * (1.0 + g2.norm_sqr()));
    (a, b)
}

pub fn compatibility_f(pair: &GaussMapPair, tol: &Tolerances) -> Result<Compatibility, GaussMapError> {
    let grid = pair.grid();
    let d1 = wirtinger_dzbar(&pair.g1)?;
    let d2 = wirtinger_dzbar(&pair.g2)?;
    let branch_nodes: Vec<(usize, usize)> = grid
        .active_nodes()
        .filter(|&(i, j)| (1.0 - pair.g1.at(i, j) * pair.g2.at(i, j).conj()).norm() < tol.eps_branch)
        .collect();
    let out_grid = if branch_nodes.is_empty() {
        grid.clone()
    } else {
        let mut branch = vec![false; grid.len()];
        for &(i, j) in &branch_nodes {
            branch[grid.index(i, j)] = true;
        }
        Arc::new(grid.restricted(|i, j| !branch[grid.index(i, j)]))
    };
    if out_grid.active_count() == 0 {
        return Err(GaussMapError::Empty);
    }
    let sides = |i: usize, j: usize| cp_sides(pair.g1.at(i, j), pair.g2.at(i, j), d1.at(i, j), d2.at(i, j));
    let f_cap = ComplexField::from_nodes(out_grid.clone(), |i, j| {
        let (a, b) = sides(i, j);
        0.5 * (a + b)
    });
    let cp_residual = RealField::from_nodes(out_grid, |i, j| {
        let (a, b) = sides(i, j);
        (a - b).norm()
    });
    Ok(Compatibility {
        f_cap,
        cp_residual,
        branch_nodes,
    })
}

/// Pointwise residuals of both integrability conditions.
#[derive(Debug, Clone)]
pub struct ConditionResiduals {
    pub cp_residual: RealField,
    /// The first integrability expression (complex, not its modulus).
    pub l_value: ComplexField,
    /// The second integrability expression.
    pub r_value: ComplexField,
    pub l_residual: RealField,
    pub r_residual: RealField,
    /// `min(|(g1)_zbar|, |(g2)_zbar|)` over the evaluated nodes.
    pub holo_floor: f64,
    /// Max of `|L/(g1)_zbar - R/(g2)_zbar|` over nodes above the floor.
    pub ratio_gap: f64,
    /// Nodes dropped because no stencil was available.
    pub dropped: usize,
}

struct Derivatives {
    dz: ComplexField,
    dzbar: ComplexField,
    mixed: ComplexField,
}

fn derivatives(g: &ComplexField) -> Result<Derivatives, GridError> {
    Ok(Derivatives {
        dz: wirtinger_dz(g)?,
        dzbar: wirtinger_dzbar(g)?,
        mixed: mixed_dz_dzbar(g)?,
    })
}

fn l_expr(g1: Complex64, g2: Complex64, d: (Complex64, Complex64, Complex64)) -> Complex64 {
    let (dz, dzbar, mixed) = d;
    let n1 = 1.0 + g1.norm_sqr();
    mixed
        + (g2.conj() / (1.0 - g1 * g2.conj()) - g1.conj() / n1) * dz * dzbar
        + (g1 + g2) / ((1.0 - g1.conj() * g2) * n1) * dzbar.norm_sqr()
}

fn r_expr(g1: Complex64, g2: Complex64, d: (Complex64, Complex64, Complex64)) -> Complex64 {
    let (dz, dzbar, mixed) = d;
    let n2 = 1.0 + g2.norm_sqr();
    mixed
        + (g1.conj() / (1.0 - g1.conj() * g2) - g2.conj() / n2) * dz * dzbar
        + (g1 + g2) / ((1.0 - g1 * g2.conj()) * n2) * dzbar.norm_sqr()
}

/// Evaluates both integrability expressions on the active nodes of
/// `f_cap`'s grid (the pair's grid minus branch points), after pruning nodes
/// without second-order stencils.
pub fn integrability_residuals(
    pair: &GaussMapPair,
    compat: &Compatibility,
    tol: &Tolerances,
) -> Result<ConditionResiduals, GaussMapError> {
    let (pruned, dropped) = pair.grid().prune_for_stencils();
    let pruned = Arc::new(pruned);
    let g1 = pair.g1.restrict(pruned.clone())?;
    let g2 = pair.g2.restrict(pruned.clone())?;
    let a = derivatives(&g1)?;
    let b = derivatives(&g2)?;
    let eval_grid = Arc::new(
        compat
            .f_cap
            .grid()
            .restricted(|i, j| pruned.is_active(i, j)),
    );
    if eval_grid.active_count() == 0 {
        return Err(GaussMapError::Empty);
    }
    let at = |d: &Derivatives, i, j| (d.dz.at(i, j), d.dzbar.at(i, j), d.mixed.at(i, j));
    let l_value = ComplexField::from_nodes(eval_grid.clone(), |i, j| {
        l_expr(g1.at(i, j), g2.at(i, j), at(&a, i, j))
    });
    let r_value = ComplexField::from_nodes(eval_grid.clone(), |i, j| {
        r_expr(g1.at(i, j), g2.at(i, j), at(&b, i, j))
    });
    let holo_floor = eval_grid
        .active_nodes()
        .map(|(i, j)| a.dzbar.at(i, j).norm().min(b.dzbar.at(i, j).norm()))
        .fold(f64::INFINITY, f64::min);
    let mut res = ConditionResiduals {
        cp_residual: compat.cp_residual.restrict(eval_grid.clone())?,
        l_residual: l_value.abs(),
        r_residual: r_value.abs(),
        l_value,
        r_value,
        holo_floor,
        ratio_gap: 0.0,
        dropped,
    };
    res.ratio_gap = ratio_gap(&res, &a.dzbar, &b.dzbar, tol.eps_hol * pair.field_scale());
    Ok(res)
}

fn ratio_gap_field(res: &ConditionResiduals, d1: &ComplexField, d2: &ComplexField, floor: f64) -> RealField {
    let grid = res.l_value.grid();
    let kept = Arc::new(grid.restricted(|i, j| d1.at(i, j).norm() >= floor && d2.at(i, j).norm() >= floor));
    RealField::from_nodes(kept, |i, j| {
        (res.l_value.at(i, j) / d1.at(i, j) - res.r_value.at(i, j) / d2.at(i, j)).norm()
    })
}

fn ratio_gap(res: &ConditionResiduals, d1: &ComplexField, d2: &ComplexField, floor: f64) -> f64 {
    ratio_gap_field(res, d1, d2, floor).max_abs()
}

/// Pointwise `|L/(g1)_zbar - R/(g2)_zbar|`; the two integrability
/// conditions are equivalent whenever the compatibility condition holds, so
/// this is small for every compatible pair, integrable or not. Nodes where
/// either `|(g)_zbar|` falls below the holomorphy floor are skipped.
pub fn equivalence_field(
    res: &ConditionResiduals,
    pair: &GaussMapPair,
    tol: &Tolerances,
) -> Result<RealField, GaussMapError> {
    let grid = res.l_value.grid().clone();
    let d1 = wirtinger_dzbar(&pair.g1)?.restrict(grid.clone())?;
    let d2 = wirtinger_dzbar(&pair.g2)?.restrict(grid)?;
    Ok(ratio_gap_field(res, &d1, &d2, tol.eps_hol * pair.field_scale()))
}

/// Max of [`equivalence_field`].
pub fn equivalence_check_l_r(
    res: &ConditionResiduals,
    pair: &GaussMapPair,
    tol: &Tolerances,
) -> Result<f64, GaussMapError> {
    Ok(equivalence_field(res, pair, tol)?.max_abs())
}

/// The pair `(iG, iG)` whose translator lives in the hyperplane orthogonal
/// to the third axis.
pub fn r3_lift(g: &ComplexField, mode: DiscMode) -> Result<GaussMapPair, GaussMapError> {
    let ig = g.map(|x| Complex64::i() * x);
    let mut pair = GaussMapPair::new(ig.clone(), ig, mode)?;
    pair.ambient = Ambient::R3;
    Ok(pair)
}

#[derive(Debug, Clone)]
pub struct GaussResidual {
    pub residual: RealField,
    /// Nodes masked because `1 - |G|^4` degenerates.
    pub masked: usize,
}

/// Pointwise modulus of
/// `G_{z zbar} + 2 conj(G)|G|^2/(1-|G|^4) G_z G_zbar + 2 G/(1-|G|^4) |G_zbar|^2`.
pub fn translator_equation_residual_r3(
    g: &ComplexField,
    tol: &Tolerances,
) -> Result<GaussResidual, GaussMapError> {
    let (pruned, _) = g.grid().prune_for_stencils();
    let pruned = Arc::new(pruned);
    let g = g.restrict(pruned.clone())?;
    let d = derivatives(&g)?;
    let eval = Arc::new(pruned.restricted(|i, j| 1.0 - g.at(i, j).norm_sqr().powi(2) >= tol.eps_branch));
    let masked = pruned.active_count() - eval.active_count();
    let residual = RealField::from_nodes(eval, |i, j| {
        let x = g.at(i, j);
        let m2 = x.norm_sqr();
        let den = 1.0 - m2 * m2;
        let (dz, dzbar, mixed) = (d.dz.at(i, j), d.dzbar.at(i, j), d.mixed.at(i, j));
        (mixed + 2.0 * x.conj() * m2 / den * dz * dzbar + 2.0 * x / den * dzbar.norm_sqr()).norm()
    });
    Ok(GaussResidual { residual, masked })
}

/// `|F_z + |F|^2 [g1(1-|g2|^2) + g2(1-|g1|^2)]|`, which vanishes on
/// integrable pairs.
pub fn fz_identity_residual(pair: &GaussMapPair, f_cap: &ComplexField) -> Result<RealField, GaussMapError> {
    let (pruned, _) = f_cap.grid().prune_for_stencils();
    let f_cap = f_cap.restrict(Arc::new(pruned))?;
    let fz = wirtinger_dz(&f_cap)?;
    Ok(RealField::from_nodes(f_cap.grid().clone(), |i, j| {
        let (g1, g2) = (pair.g1.at(i, j), pair.g2.at(i, j));
        let bracket = g1 * (1.0 - g2.norm_sqr()) + g2 * (1.0 - g1.norm_sqr());
        (fz.at(i, j) + f_cap.at(i, j).norm_sqr() * bracket).norm()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(d: Domain, h: f64) -> Arc<ComplexGrid> {
        Arc::new(ComplexGrid::with_spacing(d, h).unwrap())
    }

    fn tanh_g(h: f64) -> ComplexField {
        ComplexField::from_fn(grid(Domain::new(-2.0, 2.0, -2.0, 2.0), h), |u, _| c(u.tanh(), 0.0))
    }

    /// A pair satisfying the compatibility condition identically but not the
    /// integrability condition: real g1 = tanh(u)/2 and g2 with
    /// atan(g2) = atan(g1) + 0.3.
    fn arctan_pair(h: f64) -> GaussMapPair {
        let g = grid(Domain::new(-2.0, 2.0, -2.0, 2.0), h);
        let a = |u: f64| 0.5 * u.tanh();
        let g1 = ComplexField::from_fn(g.clone(), move |u, _| c(a(u), 0.0));
        let g2 = ComplexField::from_fn(g, move |u, _| c((a(u).atan() + 0.3).tan(), 0.0));
        GaussMapPair::new(g1, g2, DiscMode::StrictDisc).unwrap()
    }

    #[test]
    fn strict_disc_rejects_unit_modulus() {
        let g = grid(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1);
        let big = ComplexField::from_fn(g.clone(), |u, _| c(u, 0.0));
        assert!(matches!(
            GaussMapPair::new(big.clone(), big.clone(), DiscMode::StrictDisc),
            Err(GaussMapError::OutsideDisc { .. })
        ));
        assert!(GaussMapPair::new(big.clone(), big, DiscMode::ExtendedPlane).is_ok());
    }

    #[test]
    fn holomorphic_maps_are_flagged() {
        let g = grid(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1);
        let z = ComplexField::from_fn(g, |u, v| c(0.3 * u, 0.3 * v));
        let pair = GaussMapPair::new(z.clone(), z, DiscMode::StrictDisc).unwrap();
        assert!(matches!(
            pair.check_nowhere_holomorphic(1e-8),
            Err(GaussMapError::Holomorphic { .. })
        ));
    }

    #[test]
    fn symmetric_pair_has_zero_cp_residual() {
        let g = grid(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.05);
        let f = ComplexField::from_fn(g, |u, v| 0.4 * c(u.sin(), v * u).tanh());
        let pair = GaussMapPair::new(f.clone(), f, DiscMode::StrictDisc).unwrap();
        let cp = compatibility_f(&pair, &Tolerances::default()).unwrap();
        assert_eq!(cp.cp_residual.max_abs(), 0.0);
    }

    #[test]
    fn grim_reaper_f_at_origin() {
        let pair = r3_lift(&tanh_g(0.01), DiscMode::StrictDisc).unwrap();
        let cp = compatibility_f(&pair, &Tolerances::default()).unwrap();
        let (i, j) = pair.grid().nearest_node(0.0, 0.0);
        let h = 0.01;
        assert!((cp.f_cap.at(i, j) - c(0.0, 0.5)).norm() < h * h);
        // Closed form i / (2 (1 + tanh^2 u)) everywhere.
        let g = pair.grid();
        let err = g
            .active_nodes()
            .map(|(i, j)| {
                let t = g.u(i).tanh();
                (cp.f_cap.at(i, j) - c(0.0, 0.5 / (1.0 + t * t))).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 10.0 * h * h, "{err}");
    }

    #[test]
    fn lagrangian_f_at_origin() {
        let h = 0.01;
        let g = grid(Domain::new(-0.5, 0.5, -0.5, 0.5), h);
        let g1 = ComplexField::from_fn(g.clone(), |_, v| Complex64::from_polar(1.0, v));
        let g2 = ComplexField::from_fn(g, |u, v| (u + 1.0) / (u - 1.0) * Complex64::from_polar(1.0, v));
        let pair = GaussMapPair::new(g1, g2, DiscMode::ExtendedPlane).unwrap();
        let cp = compatibility_f(&pair, &Tolerances::default()).unwrap();
        let (i, j) = pair.grid().nearest_node(0.0, 0.0);
        assert!((cp.f_cap.at(i, j) - c(-0.125, 0.0)).norm() < h * h);
        assert!(cp.cp_residual.max_abs() < 10.0 * h * h);
    }

    #[test]
    fn branch_points_are_masked() {
        let g = grid(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1);
        // g1 = 1 + u (1+i)/4, g2 = 1: conj(g1) g2 = 1 exactly on u = 0.
        let g1 = ComplexField::from_fn(g.clone(), |u, _| c(1.0 + 0.25 * u, 0.25 * u));
        let g2 = ComplexField::from_fn(g.clone(), |_, v| c(1.0, 0.1 * v));
        let pair = GaussMapPair::new(g1, g2, DiscMode::ExtendedPlane).unwrap();
        let cp = compatibility_f(&pair, &Tolerances::default()).unwrap();
        let (i0, _) = g.nearest_node(0.0, 0.0);
        let (_, j0) = g.nearest_node(0.0, 0.0);
        assert_eq!(cp.branch_nodes, vec![(i0, j0)]);
        assert!(!cp.f_cap.grid().is_active(i0, j0));
        cp.f_cap.check_finite().unwrap();
    }

    #[test]
    fn grim_reaper_satisfies_both_conditions() {
        let h = 0.01;
        let tol = Tolerances::default();
        let g = tanh_g(h);
        let pair = r3_lift(&g, DiscMode::StrictDisc).unwrap();
        let cp = compatibility_f(&pair, &tol).unwrap();
        let res = integrability_residuals(&pair, &cp, &tol).unwrap();
        assert!(res.l_residual.max_abs() < 50.0 * h * h, "{}", res.l_residual.max_abs());
        assert!(res.r_residual.max_abs() < 50.0 * h * h);
        assert!(res.ratio_gap < 100.0 * h * h);
        // Symmetric pair: the two ratios coincide bit for bit.
        assert_eq!(equivalence_check_l_r(&res, &pair, &tol).unwrap(), 0.0);
        let gauss = translator_equation_residual_r3(&g, &tol).unwrap();
        assert!(gauss.residual.max_abs() < 50.0 * h * h);
    }

    #[test]
    fn lifted_l_equals_i_times_gauss_residual() {
        // Reduction consistency: |L(iG, iG)| = |Gauss residual(G)| pointwise,
        // for solutions and non-solutions alike.
        let tol = Tolerances::default();
        let g = grid(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.05);
        for field in [
            ComplexField::from_fn(g.clone(), |u, _| c(u.tanh(), 0.0)),
            ComplexField::from_fn(g.clone(), |u, v| c(0.3 * u, -0.3 * v)),
            ComplexField::from_fn(g.clone(), |u, v| 0.5 * c(u.sin() * v, u * u)),
        ] {
            let pair = r3_lift(&field, DiscMode::StrictDisc).unwrap();
            let cp = compatibility_f(&pair, &tol).unwrap();
            let res = integrability_residuals(&pair, &cp, &tol).unwrap();
            let gauss = translator_equation_residual_r3(&field, &tol).unwrap();
            let diff = res
                .l_residual
                .zip_map(&gauss.residual, |a, b| (a - b).abs())
                .unwrap()
                .max_abs();
            assert!(diff < 1e-12 * (1.0 + gauss.residual.max_abs()), "{diff}");
        }
    }

    #[test]
    fn compatible_non_integrable_pair_keeps_ratio_identity() {
        let tol = Tolerances::default();
        for h in [0.02, 0.01] {
            let pair = arctan_pair(h);
            let cp = compatibility_f(&pair, &tol).unwrap();
            assert!(cp.cp_residual.max_abs() < 10.0 * h * h);
            let res = integrability_residuals(&pair, &cp, &tol).unwrap();
            assert!(res.l_residual.max_abs() > 1e-2, "{}", res.l_residual.max_abs());
            let gap = equivalence_check_l_r(&res, &pair, &tol).unwrap();
            assert!(gap < 100.0 * h * h, "gap {gap} at h {h}");
        }
    }

    #[test]
    fn negative_control_stays_away_from_zero() {
        let tol = Tolerances::default();
        for h in [0.04, 0.02, 0.01] {
            let g = grid(Domain::new(-2.0, 2.0, -2.0, 2.0), h);
            let f = ComplexField::from_fn(g, |u, _| 0.5 * u.tanh() * Complex64::from_polar(1.0, u));
            let pair = GaussMapPair::new(f.clone(), f, DiscMode::StrictDisc).unwrap();
            let cp = compatibility_f(&pair, &tol).unwrap();
            let res = integrability_residuals(&pair, &cp, &tol).unwrap();
            assert!(res.l_residual.max_abs() > 0.2);
        }
        let g = grid(Domain::new(-2.0, 2.0, -2.0, 2.0), 0.02);
        let zbar = ComplexField::from_fn(g, |u, v| c(0.3 * u, -0.3 * v));
        let gauss = translator_equation_residual_r3(&zbar, &tol).unwrap();
        assert!(gauss.residual.max_abs() > 0.1);
    }

    #[test]
    fn conjugated_compatibility_and_fz_identity() {
        let h = 0.01;
        let tol = Tolerances::default();
        let pair = r3_lift(&tanh_g(h), DiscMode::StrictDisc).unwrap();
        let cp = compatibility_f(&pair, &tol).unwrap();
        // conj(F) = (conj g2)_z / ((1 - g1 conj g2)(1 + |g2|^2))
        let dz_conj_g2 = wirtinger_dz(&pair.g2.conj()).unwrap();
        let g = cp.f_cap.grid();
        let err = g
            .active_nodes()
            .map(|(i, j)| {
                let (g1, g2) = (pair.g1.at(i, j), pair.g2.at(i, j));
                let rhs = dz_conj_g2.at(i, j) / ((1.0 - g1 * g2.conj()) * (1.0 + g2.norm_sqr()));
                (cp.f_cap.at(i, j).conj() - rhs).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 10.0 * h * h, "{err}");
        let fz = fz_identity_residual(&pair, &cp.f_cap).unwrap();
        assert!(fz.max_abs() < 50.0 * h * h, "{}", fz.max_abs());
    }
}
