//! Periodicity cell, computational grid, and node classification.
//!
//! The cell `Π` lives between the lines `x1 = 0` and `x1 = d`. For
//! `|x2| > x2_inf` it has two straight outlets of unit width,
//! `a± < x1 < a± + 1`; for `|x2| < x2_zero` its boundary is formed by the
//! two vertical segments `x1 = 0` and `x1 = d`. In the transition band
//! `x2_zero <= |x2| <= x2_inf` the boundary is a user-supplied staircase
//! (axis-aligned slabs). Cells are coupled through small windows
//! `|x2| < eps` on the shared vertical line, which the discretization
//! represents as seam nodes at `x1 = 0` carrying the Bloch phase.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// One staircase slab of the transition band: for heights
/// `x2_lo <= |x2| <= x2_hi` the open cross-section is `left < x1 < right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSlab {
    pub x2_lo: f64,
    pub x2_hi: f64,
    pub left: f64,
    pub right: f64,
}

/// The periodicity cell `Π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    /// Cell width `d` (period of the waveguide).
    pub d: f64,
    /// Lower-outlet offset: `Π ∩ {x2 < -x2_inf} = {a_minus < x1 < a_minus + 1}`.
    pub a_minus: f64,
    /// Upper-outlet offset.
    pub a_plus: f64,
    /// Flat-wall half-height: boundary is vertical for `|x2| < x2_zero`.
    pub x2_zero: f64,
    /// Outlet half-height: domain is a straight unit strip for `|x2| > x2_inf`.
    pub x2_inf: f64,
    /// Staircase profile for `x2_zero <= x2 <= x2_inf` (upper transition band).
    pub upper_profile: Vec<ProfileSlab>,
    /// Staircase profile for `x2_zero <= -x2 <= x2_inf`, parameterized by `|x2|`.
    pub lower_profile: Vec<ProfileSlab>,
}

fn validate_profile(
    slabs: &[ProfileSlab],
    which: &str,
    x2_zero: f64,
    x2_inf: f64,
    d: f64,
    outlet: (f64, f64),
) -> Result<()> {
    let bad = |k: usize, msg: &str| {
        Err(CoreError::Geometry(format!(
            "{which} profile slab {k}: {msg}"
        )))
    };
    if slabs.is_empty() {
        return Err(CoreError::Geometry(format!(
            "{which} profile is empty but x2_zero < x2_inf; the transition band needs slabs"
        )));
    }
    for (k, s) in slabs.iter().enumerate() {
        if !(s.x2_lo < s.x2_hi) {
            return bad(k, "degenerate height range");
        }
        if !(s.left < s.right) {
            return bad(k, "degenerate cross-section interval");
        }
        if s.left < 0.0 || s.right > d {
            return bad(k, "cross-section leaves [0, d]");
        }
    }
    if (slabs[0].x2_lo - x2_zero).abs() > 1e-12 {
        return bad(0, "first slab must start at x2_zero");
    }
    if (slabs[slabs.len() - 1].x2_hi - x2_inf).abs() > 1e-12 {
        return bad(slabs.len() - 1, "last slab must end at x2_inf");
    }
    for k in 1..slabs.len() {
        if (slabs[k].x2_lo - slabs[k - 1].x2_hi).abs() > 1e-12 {
            return bad(k, "slabs must tile the transition band without gaps or overlap");
        }
        let lo = slabs[k].left.max(slabs[k - 1].left);
        let hi = slabs[k].right.min(slabs[k - 1].right);
        if !(lo < hi) {
            return bad(k, "cross-section does not overlap the previous slab (domain disconnects)");
        }
    }
    // the flat-wall section (0, d) overlaps the first slab automatically;
    // the last slab must open into the outlet
    let last = slabs[slabs.len() - 1];
    if !(last.left.max(outlet.0) < last.right.min(outlet.1)) {
        return bad(
            slabs.len() - 1,
            "cross-section does not overlap the outlet (domain disconnects)",
        );
    }
    Ok(())
}

impl CellGeometry {
    /// Validate and build a cell.
    pub fn new(
        d: f64,
        a_minus: f64,
        a_plus: f64,
        x2_zero: f64,
        x2_inf: f64,
        upper_profile: Vec<ProfileSlab>,
        lower_profile: Vec<ProfileSlab>,
    ) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(CoreError::Geometry(format!("cell width d = {d} must be positive")));
        }
        for (name, a) in [("a_minus", a_minus), ("a_plus", a_plus)] {
            if !(0.0..=d - 1.0).contains(&a) {
                return Err(CoreError::Geometry(format!(
                    "{name} = {a} violates 0 <= {name} <= d - 1 = {} (outlet must fit in the cell)",
                    d - 1.0
                )));
            }
        }
        if !(x2_zero > 0.0) {
            return Err(CoreError::Geometry(format!(
                "x2_zero = {x2_zero} must be positive"
            )));
        }
        if x2_zero > x2_inf {
            return Err(CoreError::Geometry(format!(
                "x2_zero = {x2_zero} exceeds x2_inf = {x2_inf}"
            )));
        }
        let flat = x2_inf - x2_zero < 1e-12;
        if flat {
            if !upper_profile.is_empty() || !lower_profile.is_empty() {
                return Err(CoreError::Geometry(
                    "x2_zero == x2_inf leaves no transition band; profiles must be empty".into(),
                ));
            }
            // walls at x1 in {0, d} must continue straight into the unit outlets
            if a_minus.abs() > 1e-12 || a_plus.abs() > 1e-12 || (d - 1.0).abs() > 1e-12 {
                return Err(CoreError::Geometry(
                    "without a transition band the outlets must coincide with the cell: d = 1, a_pm = 0".into(),
                ));
            }
        } else {
            validate_profile(&upper_profile, "upper", x2_zero, x2_inf, d, (a_plus, a_plus + 1.0))?;
            validate_profile(&lower_profile, "lower", x2_zero, x2_inf, d, (a_minus, a_minus + 1.0))?;
        }
        Ok(Self {
            d,
            a_minus,
            a_plus,
            x2_zero,
            x2_inf,
            upper_profile,
            lower_profile,
        })
    }

    /// The straight strip `(0, 1) x R`.
    pub fn straight_strip() -> Self {
        Self {
            d: 1.0,
            a_minus: 0.0,
            a_plus: 0.0,
            x2_zero: 1.0,
            x2_inf: 1.0,
            upper_profile: Vec::new(),
            lower_profile: Vec::new(),
        }
    }

    /// Open cross-section `left < x1 < right` of `Π` at height `x2`.
    ///
    /// At a slab interface the open set's section is the intersection of the
    /// adjacent sections, which is what this returns.
    pub fn section(&self, x2: f64) -> (f64, f64) {
        let (abs, profile, outlet) = if x2 >= 0.0 {
            (x2, &self.upper_profile, (self.a_plus, self.a_plus + 1.0))
        } else {
            (-x2, &self.lower_profile, (self.a_minus, self.a_minus + 1.0))
        };
        let at = |h: f64| -> (f64, f64) {
            if h < self.x2_zero {
                (0.0, self.d)
            } else if h > self.x2_inf {
                outlet
            } else {
                for s in profile {
                    if h >= s.x2_lo && h <= s.x2_hi {
                        return (s.left, s.right);
                    }
                }
                // flat geometry (no band): wall section continues into the outlet
                (0.0, self.d)
            }
        };
        // intersect sections just below and just above to handle interface heights
        let eps = 1e-12 * (1.0 + abs);
        let (l1, r1) = at(abs - eps);
        let (l2, r2) = at(abs + eps);
        (l1.max(l2), r1.min(r2))
    }

    /// Point membership in the open cell `Π`.
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let (l, r) = self.section(x2);
        x1 > l && x1 < r
    }

    /// Membership in the closed cell (interior plus boundary).
    pub fn contains_closed(&self, x1: f64, x2: f64) -> bool {
        let (abs, profile, outlet) = if x2 >= 0.0 {
            (x2, &self.upper_profile, (self.a_plus, self.a_plus + 1.0))
        } else {
            (-x2, &self.lower_profile, (self.a_minus, self.a_minus + 1.0))
        };
        let tol = 1e-12 * (1.0 + abs);
        let mut sections: Vec<(f64, f64)> = Vec::new();
        if abs <= self.x2_zero + tol {
            sections.push((0.0, self.d));
        }
        if abs >= self.x2_inf - tol {
            sections.push(outlet);
        }
        for s in profile {
            if abs >= s.x2_lo - tol && abs <= s.x2_hi + tol {
                sections.push((s.left, s.right));
            }
        }
        sections
            .iter()
            .any(|&(l, r)| x1 >= l - tol && x1 <= r + tol)
    }

    /// True when `(x1, x2)` lies on the boundary of `Π`.
    pub fn on_wall(&self, x1: f64, x2: f64) -> bool {
        self.contains_closed(x1, x2) && !self.contains(x1, x2)
    }
}

/// Uniform tensor grid on `[0, d] x [-x_max, x_max]`.
///
/// Columns sit at `x1 = i * h1`, `i = 0..=n1`; rows at `x2 = j * h2`,
/// `j = -n2_half..=n2_half`, so `x2 = 0` is always a grid row and the total
/// row-interval count is `n2 = 2 * n2_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub h1: f64,
    pub x_max: f64,
    pub n2_half: usize,
    pub h2: f64,
}

impl Grid {
    pub fn new(d: f64, n1: usize, x_max: f64, n2_half: usize) -> Result<Self> {
        if n1 < 2 || n2_half < 2 {
            return Err(CoreError::Grid(format!(
                "need n1 >= 2 and n2_half >= 2, got n1 = {n1}, n2_half = {n2_half}"
            )));
        }
        if !(d > 0.0) || !(x_max > 0.0) {
            return Err(CoreError::Grid("d and x_max must be positive".into()));
        }
        Ok(Self {
            n1,
            h1: d / n1 as f64,
            x_max,
            n2_half,
            h2: x_max / n2_half as f64,
        })
    }

    /// Grid over the same cell with the truncation height doubled
    /// (same spacings, twice the rows). Used by virtual-level refinement.
    pub fn doubled_height(&self) -> Self {
        Self {
            n1: self.n1,
            h1: self.h1,
            x_max: 2.0 * self.x_max,
            n2_half: 2 * self.n2_half,
            h2: self.h2,
        }
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.h1
    }

    pub fn x2(&self, j: isize) -> f64 {
        j as f64 * self.h2
    }

    /// Total row interval count `N2`.
    pub fn n2(&self) -> usize {
        2 * self.n2_half
    }
}

/// Classification of one grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Strictly inside `Π`; an unknown.
    Interior,
    /// On the seam line `x1 = 0` with `|x2| < eps`; an unknown coupled by the Bloch phase.
    WindowSeam,
    /// On the wall, outside, or eliminated (the `x1 = d` column aliases the seam).
    Dirichlet,
    /// On the truncation line `x2 = +x_max` inside the upper outlet.
    OutletTop,
    /// On the truncation line `x2 = -x_max` inside the lower outlet.
    OutletBottom,
}

/// Node classification plus the dense unknown numbering.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub grid: Grid,
    pub eps: f64,
    class: Vec<NodeClass>,
    index: Vec<Option<usize>>,
    /// Unknown -> (column i, signed row j).
    pub unknowns: Vec<(usize, isize)>,
    /// Signed rows j whose `|x2| < eps` (window rows).
    pub window_rows: Vec<isize>,
}

impl NodeSet {
    fn flat(&self, i: usize, j: isize) -> usize {
        let jj = (j + self.grid.n2_half as isize) as usize;
        jj * (self.grid.n1 + 1) + i
    }

    pub fn class(&self, i: usize, j: isize) -> NodeClass {
        self.class[self.flat(i, j)]
    }

    /// Unknown index of node `(i, j)`, if it is an unknown.
    pub fn unknown(&self, i: usize, j: isize) -> Option<usize> {
        self.index[self.flat(i, j)]
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn seam_count(&self) -> usize {
        self.window_rows.len()
    }
}

/// Classify every node of `grid` against the cell and the window half-width `eps`.
///
/// Windows are open: a seam node requires `|x2| < eps` strictly. The window
/// must be resolved beyond the centerline row (`h2 < eps`), otherwise the
/// assembly refuses with the minimal `n2_half` that fixes it.
pub fn classify_nodes(geom: &CellGeometry, grid: &Grid, eps: f64) -> Result<NodeSet> {
    if eps < 0.0 {
        return Err(CoreError::Geometry(format!("eps = {eps} must be >= 0")));
    }
    if eps > 0.0 && eps > geom.x2_zero {
        return Err(CoreError::Geometry(format!(
            "window half-width eps = {eps} exceeds the flat-wall height x2_zero = {}",
            geom.x2_zero
        )));
    }
    if grid.x_max <= geom.x2_inf {
        return Err(CoreError::Grid(format!(
            "truncation height x_max = {} must exceed x2_inf = {}",
            grid.x_max, geom.x2_inf
        )));
    }
    if (grid.h1 * grid.n1 as f64 - geom.d).abs() > 1e-9 * geom.d {
        return Err(CoreError::Grid(format!(
            "grid spans x1 in [0, {}] but the cell has width d = {}",
            grid.h1 * grid.n1 as f64,
            geom.d
        )));
    }
    if eps > 0.0 && grid.h2 >= eps {
        let min_n2_half = (grid.x_max / eps).floor() as usize + 1;
        return Err(CoreError::EmptyWindow {
            eps,
            x_max: grid.x_max,
            min_n2_half,
        });
    }

    let n1 = grid.n1;
    let nh = grid.n2_half as isize;
    let mut class = vec![NodeClass::Dirichlet; (n1 + 1) * (2 * grid.n2_half + 1)];
    let mut index = vec![None; class.len()];
    let mut unknowns = Vec::new();
    let mut window_rows = Vec::new();

    let flat = |i: usize, j: isize| -> usize {
        let jj = (j + nh) as usize;
        jj * (n1 + 1) + i
    };

    for j in -nh..=nh {
        let x2 = grid.x2(j);
        let in_window = eps > 0.0 && x2.abs() < eps;
        if in_window {
            window_rows.push(j);
        }
        for i in 0..=n1 {
            let x1 = grid.x1(i);
            let c = if j == nh || j == -nh {
                if geom.contains(x1, x2) {
                    if j == nh {
                        NodeClass::OutletTop
                    } else {
                        NodeClass::OutletBottom
                    }
                } else {
                    NodeClass::Dirichlet
                }
            } else if i == 0 {
                if in_window {
                    NodeClass::WindowSeam
                } else {
                    NodeClass::Dirichlet
                }
            } else if i == n1 {
                // column eliminated through the Bloch identification with i = 0
                NodeClass::Dirichlet
            } else if geom.contains(x1, x2) {
                NodeClass::Interior
            } else {
                NodeClass::Dirichlet
            };
            class[flat(i, j)] = c;
        }
    }

    // consecutive unknown numbering, row-major from the bottom, column fastest
    for j in (-nh + 1)..nh {
        for i in 0..n1 {
            let c = class[flat(i, j)];
            if c == NodeClass::Interior || c == NodeClass::WindowSeam {
                index[flat(i, j)] = Some(unknowns.len());
                unknowns.push((i, j));
            }
        }
    }

    Ok(NodeSet {
        grid: *grid,
        eps,
        class,
        index,
        unknowns,
        window_rows,
    })
}
