//! The complex null curve `phi = f (1 + g1 g2, i(1 - g1 g2), g1 - g2, -i(g1 + g2))`
//! with `f = -2i conj(F)`, and the identities it satisfies.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::gaussmap::{Ambient, GaussMapPair};
use crate::grid::{wirtinger_dzbar, ComplexField, GridError, RealField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NullCurveError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("no active nodes left after masking zeros of F")]
    Empty,
}

/// Slots `(x1, x2, x3)` of an R^3 surface inside the R^4 slot layout: the
/// third R^4 slot (`g1 - g2`) vanishes identically for lifted pairs.
pub const R3_SLOTS: [usize; 3] = [0, 1, 3];

#[derive(Debug, Clone)]
pub struct NullCurveField {
    pub g1: ComplexField,
    pub g2: ComplexField,
    pub f: ComplexField,
    pub phi: [ComplexField; 4],
    /// Closed-form `d phi_k / d zbar`, which is real.
    pub phi_zbar_closed: [RealField; 4],
    pub ambient: Ambient,
    /// Nodes where `F` vanished.
    pub zero_nodes: Vec<(usize, usize)>,
    /// Nodes dropped for lack of a stencil after masking.
    pub dropped: usize,
}

impl NullCurveField {
    pub fn grid(&self) -> &Arc<crate::grid::ComplexGrid> {
        self.f.grid()
    }

    /// Indices of the meaningful slots in output order.
    pub fn slots(&self) -> &'static [usize] {
        match self.ambient {
            Ambient::R3 => &R3_SLOTS,
            Ambient::R4 => &[0, 1, 2, 3],
        }
    }

    pub fn phi_at(&self, i: usize, j: usize) -> [Complex64; 4] {
        [0, 1, 2, 3].map(|k| self.phi[k].at(i, j))
    }
}

/// Components of `phi / f`.
pub fn null_direction(g1: Complex64, g2: Complex64) -> [Complex64; 4] {
    let i = Complex64::i();
    let p = g1 * g2;
    [1.0 + p, i * (1.0 - p), g1 - g2, -i * (g1 + g2)]
}

/// The four real closed-form values of `phi_zbar` at one node.
pub fn phi_zbar_at(g1: Complex64, g2: Complex64, f: Complex64) -> [f64; 4] {
    let f2 = f.norm_sqr();
    let (a1, a2) = (g1.norm_sqr(), g2.norm_sqr());
    let cross = g1.conj() * g2;
    [
        f2 * ((1.0 - a2) * g1.im + (1.0 - a1) * g2.im),
        -f2 * ((1.0 - a2) * g1.re + (1.0 - a1) * g2.re),
        2.0 * f2 * cross.im,
        -f2 * (1.0 - 2.0 * cross.re + a1 * a2),
    ]
}

pub fn phi_zbar_closed_form(g1: &ComplexField, g2: &ComplexField, f: &ComplexField) -> [RealField; 4] {
    [0, 1, 2, 3].map(|k| {
        RealField::from_nodes(f.grid().clone(), |i, j| {
            phi_zbar_at(g1.at(i, j), g2.at(i, j), f.at(i, j))[k]
        })
    })
}

pub fn build_null_curve(pair: &GaussMapPair, f_cap: &ComplexField) -> Result<NullCurveField, NullCurveError> {
    let grid = f_cap.grid();
    let scale = f_cap.max_abs();
    let zero_nodes: Vec<(usize, usize)> = grid
        .active_nodes()
        .filter(|&(i, j)| f_cap.at(i, j).norm() <= f64::EPSILON * scale)
        .collect();
    let masked = grid.restricted(|i, j| f_cap.at(i, j).norm() > f64::EPSILON * scale);
    let (pruned, dropped) = masked.prune_for_stencils();
    if pruned.active_count() == 0 {
        return Err(NullCurveError::Empty);
    }
    let grid = Arc::new(pruned);
    let g1 = pair.g1.restrict(grid.clone())?;
    let g2 = pair.g2.restrict(grid.clone())?;
    let f = f_cap.restrict(grid.clone())?.map(|x| Complex64::new(0.0, -2.0) * x.conj());
    let phi = [0, 1, 2, 3].map(|k| {
        ComplexField::from_nodes(grid.clone(), |i, j| {
            f.at(i, j) * null_direction(g1.at(i, j), g2.at(i, j))[k]
        })
    });
    let phi_zbar_closed = phi_zbar_closed_form(&g1, &g2, &f);
    Ok(NullCurveField {
        g1,
        g2,
        f,
        phi,
        phi_zbar_closed,
        ambient: pair.ambient,
        zero_nodes,
        dropped,
    })
}

/// `|phi . phi| / |phi|^2` per node (complex bilinear dot product).
pub fn nullity_residual(ncf: &NullCurveField) -> RealField {
    RealField::from_nodes(ncf.grid().clone(), |i, j| {
        let p = ncf.phi_at(i, j);
        let dot: Complex64 = p.iter().map(|x| x * x).sum();
        let norm: f64 = p.iter().map(|x| x.norm_sqr()).sum();
        dot.norm() / norm
    })
}

/// Relative defect of `|phi|^2 = 2|f|^2 (1 + |g1|^2)(1 + |g2|^2)`.
pub fn norm_identity_residual(ncf: &NullCurveField) -> RealField {
    RealField::from_nodes(ncf.grid().clone(), |i, j| {
        let norm: f64 = ncf.phi_at(i, j).iter().map(|x| x.norm_sqr()).sum();
        let rhs = 2.0
            * ncf.f.at(i, j).norm_sqr()
            * (1.0 + ncf.g1.at(i, j).norm_sqr())
            * (1.0 + ncf.g2.at(i, j).norm_sqr());
        (norm - rhs).abs() / norm
    })
}

#[derive(Debug, Clone)]
pub struct IntegrabilityResidual {
    /// `max_k |fd(phi_k)_zbar - closed_k|` per node.
    pub residual: RealField,
    /// `max_k |Im fd(phi_k)_zbar|` per node.
    pub imag: RealField,
}

pub fn integrability_residual(ncf: &NullCurveField) -> Result<IntegrabilityResidual, NullCurveError> {
    let fd: Vec<ComplexField> = ncf
        .phi
        .iter()
        .map(wirtinger_dzbar)
        .collect::<Result<_, _>>()?;
    let grid = ncf.grid().clone();
    let residual = RealField::from_nodes(grid.clone(), |i, j| {
        (0..4)
            .map(|k| (fd[k].at(i, j) - ncf.phi_zbar_closed[k].at(i, j)).norm())
            .fold(0.0, f64::max)
    });
    let imag = RealField::from_nodes(grid, |i, j| {
        (0..4).map(|k| fd[k].at(i, j).im.abs()).fold(0.0, f64::max)
    });
    Ok(IntegrabilityResidual { residual, imag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmap::{compatibility_f, r3_lift, DiscMode, Tolerances};
    use crate::grid::{wirtinger_dz, ComplexGrid, Domain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn build(pair: &GaussMapPair) -> NullCurveField {
        let cp = compatibility_f(pair, &Tolerances::default()).unwrap();
        build_null_curve(pair, &cp.f_cap).unwrap()
    }

    fn grim(h: f64) -> (ComplexField, GaussMapPair) {
        let g = Arc::new(ComplexGrid::with_spacing(Domain::new(-2.0, 2.0, -2.0, 2.0), h).unwrap());
        let big_g = ComplexField::from_fn(g, |u, _| c(u.tanh(), 0.0));
        let pair = r3_lift(&big_g, DiscMode::StrictDisc).unwrap();
        (big_g, pair)
    }

    fn lagrangian(h: f64) -> GaussMapPair {
        let g = Arc::new(ComplexGrid::with_spacing(Domain::new(-0.5, 0.5, -0.5, 0.5), h).unwrap());
        let g1 = ComplexField::from_fn(g.clone(), |_, v| Complex64::from_polar(1.0, v));
        let g2 = ComplexField::from_fn(g, |u, v| (u + 1.0) / (u - 1.0) * Complex64::from_polar(1.0, v));
        GaussMapPair::new(g1, g2, DiscMode::ExtendedPlane).unwrap()
    }

    #[test]
    fn grim_reaper_at_origin() {
        let h = 0.01;
        let ncf = build(&grim(h).1);
        let (i, j) = ncf.grid().nearest_node(0.0, 0.0);
        assert!((ncf.f.at(i, j) - c(-1.0, 0.0)).norm() < h * h);
        let want = [c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (k, w) in want.iter().enumerate() {
            assert!((ncf.phi[k].at(i, j) - w).norm() < h * h, "slot {k}");
        }
        assert!(ncf.phi[2].active_values().all(|x| x == c(0.0, 0.0)));
    }

    #[test]
    fn lagrangian_at_origin() {
        let h = 0.01;
        let ncf = build(&lagrangian(h));
        let (i, j) = ncf.grid().nearest_node(0.0, 0.0);
        assert!((ncf.f.at(i, j) - c(0.0, 0.25)).norm() < h * h);
        let want = [c(0.0, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)];
        for (k, w) in want.iter().enumerate() {
            assert!((ncf.phi[k].at(i, j) - w).norm() < h * h, "slot {k}");
        }
        // Slot 4 of the closed form: -|f|^2 (1 + 2 + 1) = -1/4.
        assert!((ncf.phi_zbar_closed[3].at(i, j) + 0.25).abs() < h * h);
    }

    #[test]
    fn closed_form_slots_for_special_inputs() {
        // g1 = g2 = iG with G real: slot 3 vanishes, slot 4 = -|f|^2 (1 - G^2)^2.
        let f = c(0.3, -0.7);
        for g in [-0.8, -0.1, 0.0, 0.45] {
            let s = phi_zbar_at(c(0.0, g), c(0.0, g), f);
            assert_eq!(s[2], 0.0);
            let want = -f.norm_sqr() * (1.0 - g * g).powi(2);
            assert!((s[3] - want).abs() < 1e-15);
        }
        let s = phi_zbar_at(c(0.0, 0.0), c(0.0, 0.0), f);
        assert_eq!(s, [0.0, 0.0, 0.0, -f.norm_sqr()]);
        let s = phi_zbar_at(c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.25));
        assert!((s[3] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn grim_reaper_matches_r3_formula() {
        // phi_G = 2 conj(G)_z / (|G|^4 - 1) (1 - G^2, i(1 + G^2), 2G) in slots (0, 1, 3).
        let (big_g, pair) = grim(0.05);
        let ncf = build(&pair);
        let dz_conj = wirtinger_dz(&big_g.conj()).unwrap();
        let grid = ncf.grid();
        for (i, j) in grid.active_nodes() {
            let gv = big_g.at(i, j);
            let pre = 2.0 * dz_conj.at(i, j) / (gv.norm_sqr().powi(2) - 1.0);
            let want = [pre * (1.0 - gv * gv), pre * c(0.0, 1.0) * (1.0 + gv * gv), pre * 2.0 * gv];
            for (slot, w) in R3_SLOTS.iter().zip(want) {
                assert!((ncf.phi[*slot].at(i, j) - w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn integrability_is_second_order() {
        let mut errs = Vec::new();
        for h in [0.04, 0.02, 0.01] {
            let ncf = build(&grim(h).1);
            let r = integrability_residual(&ncf).unwrap();
            assert!(r.residual.max_abs() < 100.0 * h * h);
            errs.push(r.residual.max_abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "{errs:?}");
        }
        let h = 0.01;
        let r = integrability_residual(&build(&lagrangian(h))).unwrap();
        assert!(r.residual.max_abs() < 100.0 * h * h);
        assert!(r.imag.max_abs() < 100.0 * h * h);
    }

    #[test]
    fn non_integrable_pair_has_imaginary_phi_zbar() {
        for h in [0.04, 0.02, 0.01] {
            let g = Arc::new(ComplexGrid::with_spacing(Domain::new(-2.0, 2.0, -2.0, 2.0), h).unwrap());
            let f = ComplexField::from_fn(g, |u, _| 0.5 * u.tanh() * Complex64::from_polar(1.0, u));
            let pair = GaussMapPair::new(f.clone(), f, DiscMode::StrictDisc).unwrap();
            let r = integrability_residual(&build(&pair)).unwrap();
            assert!(r.imag.max_abs() > 0.05, "{}", r.imag.max_abs());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn nullity_and_norm_identity_hold_pointwise(
                a in -0.9..0.9f64, b in -0.7..0.7f64, k in 0.2..2.0f64, w in -2.0..2.0f64,
            ) {
                let g = Arc::new(ComplexGrid::with_spacing(Domain::new(-1.0, 1.0, -1.0, 1.0), 0.1).unwrap());
                let g1 = ComplexField::from_fn(g.clone(), move |u, v| 0.9 * c(a * (k * u).sin(), b * v).tanh());
                let g2 = ComplexField::from_fn(g, move |u, v| 0.5 * Complex64::from_polar((b * u).tanh().abs(), w * v + u));
                let pair = GaussMapPair::new(g1, g2, DiscMode::StrictDisc).unwrap();
                let cp = compatibility_f(&pair, &Tolerances::default()).unwrap();
                let ncf = build_null_curve(&pair, &cp.f_cap).unwrap();
                prop_assert!(nullity_residual(&ncf).max_abs() < 1e-12);
                prop_assert!(norm_identity_residual(&ncf).max_abs() < 1e-12);
            }
        }
    }
}
