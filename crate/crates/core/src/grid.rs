//! Rectangular sampling domains in the `z = u + iv` plane and discrete
//! Wirtinger calculus on them.
//!
//! Nodes are indexed `(i, j)` with `i` running along `u` and `j` along `v`;
//! storage is row-major (`index = j * n_u + i`). Every node carries an
//! activity flag. Differential operators only ever read active nodes: they
//! use second-order central stencils where both neighbours are active and
//! second-order one-sided stencils otherwise. A node with no admissible
//! stencil is a [`GridError::Stencil`] error; [`ComplexGrid::prune_for_stencils`]
//! removes such nodes up front.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum node count along either axis.
pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    U,
    V,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::U => write!(f, "u"),
            Axis::V => write!(f, "v"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("no second-order {axis} stencil at node ({i}, {j})")]
    Stencil { i: usize, j: usize, axis: Axis },
    #[error("value at active node ({i}, {j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("fields are sampled on different grids")]
    GridMismatch,
    #[error("field has {got} values, grid has {expected} nodes")]
    Length { expected: usize, got: usize },
}

/// Axis-aligned rectangle `[u_min, u_max] x [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Domain {
    pub const fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            u_min,
            u_max,
            v_min,
            v_max,
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }
}

/// Uniform node lattice over a [`Domain`] with a per-node activity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    domain: Domain,
    n_u: usize,
    n_v: usize,
    mask: Vec<bool>,
}

impl ComplexGrid {
    pub fn new(domain: Domain, n_u: usize, n_v: usize) -> Result<Self, GridError> {
        let Domain {
            u_min,
            u_max,
            v_min,
            v_max,
        } = domain;
        if ![u_min, u_max, v_min, v_max].iter().all(|x| x.is_finite()) {
            return Err(GridError::Invalid("domain bounds must be finite".into()));
        }
        if u_min >= u_max || v_min >= v_max {
            return Err(GridError::Invalid(format!(
                "empty domain [{u_min}, {u_max}] x [{v_min}, {v_max}]"
            )));
        }
        if n_u < MIN_NODES || n_v < MIN_NODES {
            return Err(GridError::Invalid(format!(
                "need at least {MIN_NODES} nodes per axis, got {n_u} x {n_v}"
            )));
        }
        Ok(Self {
            domain,
            n_u,
            n_v,
            mask: vec![true; n_u * n_v],
        })
    }

    /// Grid whose spacing is as close as possible to `h` on both axes.
    pub fn with_spacing(domain: Domain, h: f64) -> Result<Self, GridError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::Invalid(format!("spacing must be positive, got {h}")));
        }
        let n_u = ((domain.u_max - domain.u_min) / h).round() as usize + 1;
        let n_v = ((domain.v_max - domain.v_min) / h).round() as usize + 1;
        Self::new(domain, n_u, n_v)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self, GridError> {
        if mask.len() != self.len() {
            return Err(GridError::Length {
                expected: self.len(),
                got: mask.len(),
            });
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_u(&self) -> f64 {
        (self.domain.u_max - self.domain.u_min) / (self.n_u - 1) as f64
    }

    pub fn h_v(&self) -> f64 {
        (self.domain.v_max - self.domain.v_min) / (self.n_v - 1) as f64
    }

    /// The coarser of the two spacings; residual tolerances scale with `h()^2`.
    pub fn h(&self) -> f64 {
        self.h_u().max(self.h_v())
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_u + i
    }

    #[inline]
    pub fn node(&self, index: usize) -> (usize, usize) {
        (index % self.n_u, index / self.n_u)
    }

    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        self.domain.u_min + i as f64 * self.h_u()
    }

    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        self.domain.v_min + j as f64 * self.h_v()
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.u(i), self.v(j))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    /// Activity lookup with signed offsets; out-of-range is inactive.
    #[inline]
    fn active_at(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.n_u
            && (j as usize) < self.n_v
            && self.mask[j as usize * self.n_u + i as usize]
    }

    pub fn set_active(&mut self, i: usize, j: usize, active: bool) {
        let k = self.index(i, j);
        self.mask[k] = active;
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&a| a).count()
    }

    /// Active nodes in row-major order.
    pub fn active_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_v)
            .flat_map(move |j| (0..self.n_u).map(move |i| (i, j)))
            .filter(move |&(i, j)| self.is_active(i, j))
    }

    pub fn nearest_node(&self, u: f64, v: f64) -> (usize, usize) {
        let i = ((u - self.domain.u_min) / self.h_u()).round();
        let j = ((v - self.domain.v_min) / self.h_v()).round();
        let clamp = |x: f64, n: usize| x.max(0.0).min((n - 1) as f64) as usize;
        (clamp(i, self.n_u), clamp(j, self.n_v))
    }

    /// Same lattice, mask replaced by `self.mask AND keep`.
    pub fn restricted(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        for j in 0..self.n_v {
            for i in 0..self.n_u {
                let k = self.index(i, j);
                out.mask[k] = self.mask[k] && keep(i, j);
            }
        }
        out
    }

    pub fn same_lattice(&self, other: &Self) -> bool {
        self.domain == other.domain && self.n_u == other.n_u && self.n_v == other.n_v
    }

    fn has_second_stencil(&self, i: usize, j: usize, axis: Axis) -> bool {
        let (i, j) = (i as isize, j as isize);
        let at = |k: isize| match axis {
            Axis::U => self.active_at(i + k, j),
            Axis::V => self.active_at(i, j + k),
        };
        (at(-1) && at(1)) || (1..=4).all(at) || (1..=4).all(|k| at(-k))
    }

    /// Deactivates nodes lacking a second-order stencil (first and second
    /// derivatives, both axes) until every remaining node has one.
    /// Returns the pruned grid and the number of nodes dropped.
    pub fn prune_for_stencils(&self) -> (Self, usize) {
        let mut out = self.clone();
        let mut dropped = 0;
        loop {
            let doomed: Vec<usize> = out
                .active_nodes()
                .filter(|&(i, j)| {
                    !(out.has_second_stencil(i, j, Axis::U) && out.has_second_stencil(i, j, Axis::V))
                })
                .map(|(i, j)| out.index(i, j))
                .collect();
            if doomed.is_empty() {
                return (out, dropped);
            }
            dropped += doomed.len();
            for k in doomed {
                out.mask[k] = false;
            }
        }
    }

    /// Deactivates every node within `margin` nodes (Chebyshev distance) of
    /// an inactive node or of the lattice edge.
    pub fn eroded(&self, margin: usize) -> Self {
        let m = margin as isize;
        let mut out = self.clone();
        for j in 0..self.n_v {
            for i in 0..self.n_u {
                if !self.is_active(i, j) {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let interior = (-m..=m)
                    .all(|dj| (-m..=m).all(|di| self.active_at(ii + di, jj + dj)));
                if !interior {
                    out.set_active(i, j, false);
                }
            }
        }
        out
    }

    /// Keeps active nodes at physical distance at least `margin` from the
    /// edge of the domain rectangle. The kept set is the same region of the
    /// plane at every spacing.
    pub fn inset(&self, margin: f64) -> Self {
        let d = self.domain;
        let tol = 1e-9 * self.h();
        self.restricted(|i, j| {
            let (u, v) = (self.u(i), self.v(j));
            u - d.u_min >= margin - tol
                && d.u_max - u >= margin - tol
                && v - d.v_min >= margin - tol
                && d.v_max - v >= margin - tol
        })
    }

    /// Number of edge-connected (4-neighbour) components of the active set.
    pub fn active_components(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut components = 0;
        let mut stack = Vec::new();
        for (i, j) in self.active_nodes() {
            let k = self.index(i, j);
            if seen[k] {
                continue;
            }
            components += 1;
            seen[k] = true;
            stack.push((i as isize, j as isize));
            while let Some((a, b)) = stack.pop() {
                for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (na, nb) = (a + da, b + db);
                    if self.active_at(na, nb) {
                        let nk = self.index(na as usize, nb as usize);
                        if !seen[nk] {
                            seen[nk] = true;
                            stack.push((na, nb));
                        }
                    }
                }
            }
        }
        components
    }

    /// True when the inactive nodes form no hole: every inactive node is
    /// 8-connected (through inactive nodes) to the outside of the lattice.
    pub fn has_holes(&self) -> bool {
        // Flood the complement from a one-node ring around the lattice.
        let (w, hgt) = (self.n_u as isize + 2, self.n_v as isize + 2);
        let outside = |a: isize, b: isize| !self.active_at(a - 1, b - 1);
        let mut seen = vec![false; (w * hgt) as usize];
        let mut stack = vec![(0isize, 0isize)];
        seen[0] = true;
        while let Some((a, b)) = stack.pop() {
            for db in -1..=1 {
                for da in -1..=1 {
                    let (na, nb) = (a + da, b + db);
                    if na < 0 || nb < 0 || na >= w || nb >= hgt {
                        continue;
                    }
                    let k = (nb * w + na) as usize;
                    if !seen[k] && outside(na, nb) {
                        seen[k] = true;
                        stack.push((na, nb));
                    }
                }
            }
        }
        (0..self.n_v).any(|j| {
            (0..self.n_u).any(|i| {
                !self.is_active(i, j) && !seen[((j as isize + 1) * w + i as isize + 1) as usize]
            })
        })
    }
}

/// One edge of an axis-aligned spanning tree: `child` is reached from its
/// lattice neighbour `parent` by a single step along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeEdge {
    pub parent: (usize, usize),
    pub child: (usize, usize),
    pub axis: Axis,
}

impl ComplexGrid {
    /// Deterministic spanning tree of the active component containing
    /// `root`, listed parent-before-child.
    ///
    /// The first sweep runs along `first` through `root` only; then whole
    /// sweeps alternate between the other axis and `first`, each extending
    /// every reached node through contiguous unreached active nodes. On a
    /// full rectangle with `first = Axis::V` every node is reached by an
    /// L-path: up or down the root's column, then along its row.
    pub fn spanning_edges(&self, root: (usize, usize), first: Axis) -> Vec<TreeEdge> {
        let mut reached = vec![false; self.len()];
        let mut edges = Vec::with_capacity(self.active_count());
        if !self.is_active(root.0, root.1) {
            return edges;
        }
        reached[self.index(root.0, root.1)] = true;
        let line_len = |axis: Axis| match axis {
            Axis::U => self.n_u,
            Axis::V => self.n_v,
        };
        let node = |axis: Axis, line: usize, p: usize| match axis {
            Axis::U => (p, line),
            Axis::V => (line, p),
        };
        let mut sweep = |axis: Axis, lines: &mut dyn Iterator<Item = usize>, edges: &mut Vec<TreeEdge>| {
            let n = line_len(axis);
            let mut grew = false;
            for line in lines {
                for p in 0..n {
                    let start = node(axis, line, p);
                    if !reached[self.index(start.0, start.1)] {
                        continue;
                    }
                    for dir in [1isize, -1] {
                        let mut prev = start;
                        let mut q = p as isize + dir;
                        while q >= 0 && (q as usize) < n {
                            let next = node(axis, line, q as usize);
                            let k = self.index(next.0, next.1);
                            if !self.mask[k] || reached[k] {
                                break;
                            }
                            reached[k] = true;
                            edges.push(TreeEdge {
                                parent: prev,
                                child: next,
                                axis,
                            });
                            grew = true;
                            prev = next;
                            q += dir;
                        }
                    }
                }
            }
            grew
        };
        let root_line = match first {
            Axis::U => root.1,
            Axis::V => root.0,
        };
        sweep(first, &mut std::iter::once(root_line), &mut edges);
        let second = match first {
            Axis::U => Axis::V,
            Axis::V => Axis::U,
        };
        let lines = |axis: Axis| match axis {
            Axis::U => 0..self.n_v,
            Axis::V => 0..self.n_u,
        };
        loop {
            let a = sweep(second, &mut lines(second), &mut edges);
            let b = sweep(first, &mut lines(first), &mut edges);
            if !a && !b {
                return edges;
            }
        }
    }
}

/// Value written to inactive nodes so that any accidental read shows up as
/// NaN downstream.
pub trait Poison: Copy {
    fn poison() -> Self;
}

impl Poison for f64 {
    fn poison() -> Self {
        f64::NAN
    }
}

impl Poison for Complex64 {
    fn poison() -> Self {
        Complex64::new(f64::NAN, f64::NAN)
    }
}

impl<T: Poison, const N: usize> Poison for [T; N] {
    fn poison() -> Self {
        [T::poison(); N]
    }
}

/// Values sampled on the nodes of a grid. Inactive nodes hold poison.
#[derive(Debug, Clone)]
pub struct Field<T> {
    grid: Arc<ComplexGrid>,
    values: Vec<T>,
}

pub type ComplexField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Poison> Field<T> {
    pub fn new(grid: Arc<ComplexGrid>, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(u, v)` at every active node.
    pub fn from_fn(grid: Arc<ComplexGrid>, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut values = vec![T::poison(); grid.len()];
        for (i, j) in grid.active_nodes() {
            values[grid.index(i, j)] = f(grid.u(i), grid.v(j));
        }
        Self { grid, values }
    }

    /// Evaluates `f(i, j)` at every active node.
    pub fn from_nodes(grid: Arc<ComplexGrid>, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = vec![T::poison(); grid.len()];
        for (i, j) in grid.active_nodes() {
            values[grid.index(i, j)] = f(i, j);
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<ComplexGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn active_values(&self) -> impl Iterator<Item = T> + '_ {
        self.grid.active_nodes().map(move |(i, j)| self.at(i, j))
    }

    pub fn map<U: Poison>(&self, mut f: impl FnMut(T) -> U) -> Field<U> {
        Field::from_nodes(self.grid.clone(), |i, j| f(self.at(i, j)))
    }

    /// Pointwise combination; the result lives on `self`'s grid.
    pub fn zip_map<S: Poison, U: Poison>(
        &self,
        other: &Field<S>,
        mut f: impl FnMut(T, S) -> U,
    ) -> Result<Field<U>, GridError> {
        if !self.grid.same_lattice(&other.grid) {
            return Err(GridError::GridMismatch);
        }
        Ok(Field::from_nodes(self.grid.clone(), |i, j| {
            f(self.at(i, j), other.at(i, j))
        }))
    }

    /// Re-homes the field onto `grid` (same lattice, typically a sub-mask).
    pub fn restrict(&self, grid: Arc<ComplexGrid>) -> Result<Self, GridError> {
        if !self.grid.same_lattice(&grid) {
            return Err(GridError::GridMismatch);
        }
        Ok(Field::from_nodes(grid, |i, j| self.at(i, j)))
    }
}

impl Field<f64> {
    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.grid.active_nodes().find(|&(i, j)| !self.at(i, j).is_finite()) {
            Some((i, j)) => Err(GridError::NonFinite { i, j }),
            None => Ok(()),
        }
    }

    /// Max of `|value|` over active nodes (0 on an empty set).
    pub fn max_abs(&self) -> f64 {
        // NaN propagates instead of being skipped by f64::max.
        self.active_values().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
    }

    /// Discrete L2 norm `sqrt(h_u h_v sum value^2)`.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.active_values().map(|x| x * x).sum();
        (s * self.grid.h_u() * self.grid.h_v()).sqrt()
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|x| Complex64::new(x, 0.0))
    }
}

impl Field<Complex64> {
    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.grid.active_nodes().find(|&(i, j)| !self.at(i, j).is_finite()) {
            Some((i, j)) => Err(GridError::NonFinite { i, j }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.active_values().fold(0.0, |m, x| {
            let n = x.norm();
            if n.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(n)
            }
        })
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn re(&self) -> RealField {
        self.map(|x| x.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|x| x.im)
    }

    pub fn abs(&self) -> RealField {
        self.map(|x| x.norm())
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self, GridError> {
        self.zip_map(other, |x, y| a * x + b * y)
    }
}

/// Values the finite-difference stencils can act on.
pub trait Stencil: Poison + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Stencil for T where T: Poison + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

fn first_derivative<T: Stencil>(f: &Field<T>, axis: Axis) -> Result<Field<T>, GridError> {
    let grid = f.grid();
    let h = match axis {
        Axis::U => grid.h_u(),
        Axis::V => grid.h_v(),
    };
    let mut values = vec![T::poison(); grid.len()];
    for (i, j) in grid.active_nodes() {
        let (ii, jj) = (i as isize, j as isize);
        let at = |k: isize| match axis {
            Axis::U => grid.active_at(ii + k, jj),
            Axis::V => grid.active_at(ii, jj + k),
        };
        let val = |k: isize| match axis {
            Axis::U => f.at((ii + k) as usize, j),
            Axis::V => f.at(i, (jj + k) as usize),
        };
        // One-sided stencils reproduce the central stencil's truncation
        // error through O(h^3) (or through O(h^2) when the line is too
        // short), so the error stays smooth up to the boundary and survives
        // further differentiation at O(h^2).
        let d = if at(-1) && at(1) {
            (val(1) - val(-1)) * (0.5 / h)
        } else if (1..=4).all(at) {
            (val(1) * 11.0 - val(0) * 5.0 - val(2) * 10.0 + val(3) * 5.0 - val(4)) * (0.5 / h)
        } else if (1..=4).all(|k| at(-k)) {
            (val(0) * 5.0 - val(-1) * 11.0 + val(-2) * 10.0 - val(-3) * 5.0 + val(-4)) * (0.5 / h)
        } else if (1..=3).all(at) {
            (val(1) * 7.0 - val(0) * 4.0 - val(2) * 4.0 + val(3)) * (0.5 / h)
        } else if (1..=3).all(|k| at(-k)) {
            (val(0) * 4.0 - val(-1) * 7.0 + val(-2) * 4.0 - val(-3)) * (0.5 / h)
        } else {
            return Err(GridError::Stencil { i, j, axis });
        };
        values[grid.index(i, j)] = d;
    }
    Ok(Field {
        grid: grid.clone(),
        values,
    })
}

fn second_derivative<T: Stencil>(f: &Field<T>, axis: Axis) -> Result<Field<T>, GridError> {
    let grid = f.grid();
    let h = match axis {
        Axis::U => grid.h_u(),
        Axis::V => grid.h_v(),
    };
    let inv_h2 = 1.0 / (h * h);
    let mut values = vec![T::poison(); grid.len()];
    for (i, j) in grid.active_nodes() {
        let (ii, jj) = (i as isize, j as isize);
        let at = |k: isize| match axis {
            Axis::U => grid.active_at(ii + k, jj),
            Axis::V => grid.active_at(ii, jj + k),
        };
        let val = |k: isize| match axis {
            Axis::U => f.at((ii + k) as usize, j),
            Axis::V => f.at(i, (jj + k) as usize),
        };
        let d = if at(-1) && at(1) {
            (val(1) + val(-1) - val(0) * 2.0) * inv_h2
        } else if (1..=5).all(at) {
            (val(0) * 4.0 - val(1) * 14.0 + val(2) * 20.0 - val(3) * 15.0 + val(4) * 6.0 - val(5)) * inv_h2
        } else if (1..=5).all(|k| at(-k)) {
            (val(0) * 4.0 - val(-1) * 14.0 + val(-2) * 20.0 - val(-3) * 15.0 + val(-4) * 6.0 - val(-5)) * inv_h2
        } else if (1..=4).all(at) {
            (val(0) * 3.0 - val(1) * 9.0 + val(2) * 10.0 - val(3) * 5.0 + val(4)) * inv_h2
        } else if (1..=4).all(|k| at(-k)) {
            (val(0) * 3.0 - val(-1) * 9.0 + val(-2) * 10.0 - val(-3) * 5.0 + val(-4)) * inv_h2
        } else {
            return Err(GridError::Stencil { i, j, axis });
        };
        values[grid.index(i, j)] = d;
    }
    Ok(Field {
        grid: grid.clone(),
        values,
    })
}

pub fn partial_u<T: Stencil>(f: &Field<T>) -> Result<Field<T>, GridError> {
    first_derivative(f, Axis::U)
}

pub fn partial_v<T: Stencil>(f: &Field<T>) -> Result<Field<T>, GridError> {
    first_derivative(f, Axis::V)
}

pub fn partial_uu<T: Stencil>(f: &Field<T>) -> Result<Field<T>, GridError> {
    second_derivative(f, Axis::U)
}

pub fn partial_vv<T: Stencil>(f: &Field<T>) -> Result<Field<T>, GridError> {
    second_derivative(f, Axis::V)
}

/// `d/dz = (d/du - i d/dv) / 2`.
pub fn wirtinger_dz(f: &ComplexField) -> Result<ComplexField, GridError> {
    let du = partial_u(f)?;
    let dv = partial_v(f)?;
    du.lin_comb(Complex64::new(0.5, 0.0), &dv, Complex64::new(0.0, -0.5))
}

/// `d/dzbar = (d/du + i d/dv) / 2`.
pub fn wirtinger_dzbar(f: &ComplexField) -> Result<ComplexField, GridError> {
    let du = partial_u(f)?;
    let dv = partial_v(f)?;
    du.lin_comb(Complex64::new(0.5, 0.0), &dv, Complex64::new(0.0, 0.5))
}

/// `d^2/(dz dzbar)`, i.e. a quarter of the flat Laplacian.
pub fn mixed_dz_dzbar<T: Stencil>(f: &Field<T>) -> Result<Field<T>, GridError> {
    let uu = partial_uu(f)?;
    let vv = partial_vv(f)?;
    uu.zip_map(&vv, |a, b| (a + b) * 0.25)
}
