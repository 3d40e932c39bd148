//! Threshold problem on the decoupled cell: virtual levels and their data.
//!
//! A virtual level is a bounded, non-decaying solution of
//! `(-Δ + V - pi^2) psi = 0` with Dirichlet walls — not an L^2 eigenfunction.
//! Numerically it shows up as an eigenvalue of the `k = 0` mode-matched
//! operator pinned to the discrete threshold. Two kinds of impostors appear
//! in the same spectral window and have to be filtered out:
//!
//! * discretized-continuum box modes (their mode-1 amplitude oscillates in
//!   `x2` along the outlets, a genuine resonance is flat there), and
//! * near-threshold shifts that drift like `1/x_max` under truncation
//!   (a genuine resonance's defect is exponentially small in `x_max`).
//!
//! Detection therefore combines a profile-flatness test with a defect
//! comparison across truncation heights `x_max` and `2 x_max`. Borderline
//! potentials are flagged rather than silently decided.

use crate::eigensolver::{shift_invert_eigs, EigenOpts, EigenResult};
use crate::error::{CoreError, Result};
use crate::geometry::{classify_nodes, CellGeometry, Grid, NodeSet};
use crate::operator::{assemble_decoupled, BcKind, DiscreteOperator, ModeDecayRates};
use crate::potential::PotentialSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Detection knobs.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdConfig {
    /// Spectral window half-width is `window_scale / x_max`.
    pub window_scale: f64,
    /// Defect acceptance floor is `floor_mult * max(h1, h2)^2`.
    pub floor_mult: f64,
    /// Defect must shrink at least this much when `x_max` doubles
    /// (unless it is below the floor on both grids).
    pub shrink_ratio: f64,
    /// Mode-1 profile variation allowed along the outlet for a resonance.
    pub flatness: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { window_scale: 1.0, floor_mult: 50.0, shrink_ratio: 0.3, flatness: 0.5 }
    }
}

/// One accepted threshold solution, normalized so `|c_plus|^2 + |c_minus|^2 = 1`.
#[derive(Debug, Clone)]
pub struct ResonanceSolution {
    pub field: Vec<Complex64>,
    pub lambda: f64,
    /// `|lambda - threshold_h|` on the refined (doubled) grid.
    pub defect: f64,
    /// Outlet amplitudes of the first transverse mode.
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    /// Residual higher-mode content at the measurement rows, relative to the
    /// first mode; bounded by `e^{-sqrt(3) pi (x_max - x2_inf)}` for a true
    /// resonance.
    pub higher_mode_ratio: f64,
    pub grid: Grid,
    pub nodes: Arc<NodeSet>,
}

/// Output of `solve_threshold`.
#[derive(Debug, Clone)]
pub struct ThresholdDetection {
    pub solutions: Vec<ResonanceSolution>,
    /// True when acceptance leaned on the defect floor rather than a clear
    /// shrink — borderline potentials land here.
    pub borderline: bool,
    /// Spectral window used, `window_scale / x_max`.
    pub window: f64,
    /// Defects at the two truncation heights for each accepted solution.
    pub defect_pairs: Vec<(f64, f64)>,
}

/// Corner derivatives and outlet amplitudes feeding the asymptotic formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceData {
    pub multiplicity: usize,
    pub d: f64,
    /// `dpsi/dx1` at the corner (0, 0), one entry per solution.
    pub a_minus: Vec<Complex64>,
    /// `dpsi/dx1` at the corner (d, 0).
    pub a_plus: Vec<Complex64>,
    /// `d^2 psi / dx1 dx2` at (0, 0).
    pub m_minus: Vec<Complex64>,
    /// `d^2 psi / dx1 dx2` at (d, 0).
    pub m_plus: Vec<Complex64>,
    /// Outlet amplitude pairs `(c_minus, c_plus)`.
    pub amplitudes: Vec<(Complex64, Complex64)>,
}

fn mode1_amplitude(
    sol: &[Complex64],
    nodes: &NodeSet,
    grid: &Grid,
    offset: f64,
    j: isize,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=grid.n1 {
        if let Some(a) = nodes.unknown(i, j) {
            let t = grid.x1(i) - offset;
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                acc += sol[a] * (std::f64::consts::PI * t).sin();
            }
        }
    }
    acc * 2.0 * grid.h1
}

/// Mode-1 amplitude flatness ratio along the outlet rows.
fn outlet_flatness(
    sol: &[Complex64],
    nodes: &NodeSet,
    grid: &Grid,
    geom: &CellGeometry,
    top: bool,
) -> f64 {
    let nh = grid.n2_half as isize;
    let offset = if top { geom.a_plus } else { geom.a_minus };
    let j_lo = ((geom.x2_inf / grid.h2).ceil() as isize + 1).min(nh - 2);
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for jj in j_lo..nh {
        let j = if top { jj } else { -jj };
        let m = mode1_amplitude(sol, nodes, grid, offset, j).norm();
        max = max.max(m);
        min = min.min(m);
    }
    if max > 0.0 {
        (max - min) / max
    } else {
        1.0
    }
}

fn higher_mode_ratio(
    sol: &[Complex64],
    nodes: &NodeSet,
    grid: &Grid,
    geom: &CellGeometry,
    top: bool,
) -> f64 {
    let nh = grid.n2_half as isize;
    let j = if top { nh - 1 } else { -(nh - 1) };
    let offset = if top { geom.a_plus } else { geom.a_minus };
    let c1 = mode1_amplitude(sol, nodes, grid, offset, j);
    let mut res = 0.0;
    let mut tot = 0.0;
    for i in 0..=grid.n1 {
        if let Some(a) = nodes.unknown(i, j) {
            let t = grid.x1(i) - offset;
            if (-1e-12..=1.0 + 1e-12).contains(&t) {
                let m1 = c1 * (std::f64::consts::PI * t).sin();
                res += (sol[a] - m1).norm_sqr();
                tot += sol[a].norm_sqr();
            }
        }
    }
    if tot > 0.0 {
        (res / tot).sqrt()
    } else {
        0.0
    }
}

struct Candidate {
    pair: EigenResult,
    defect: f64,
}

fn window_candidates(
    op: &DiscreteOperator,
    window: f64,
    cfg: &ThresholdConfig,
    opts: &EigenOpts,
) -> Result<Vec<Candidate>> {
    let thr = op.threshold_h;
    let count = 6.min(op.n() - 1);
    let pairs = shift_invert_eigs(op, thr + 1e-9, count, opts)?;
    let mut out = Vec::new();
    for p in pairs {
        let defect = (p.lambda - thr).abs();
        if defect > window {
            continue;
        }
        let flat_top = outlet_flatness(&p.vector, &op.nodes, &op.grid, &op.geom, true);
        let flat_bot = outlet_flatness(&p.vector, &op.nodes, &op.grid, &op.geom, false);
        if flat_top.min(flat_bot) > cfg.flatness {
            // oscillating along both outlets: a discretized continuum mode
            continue;
        }
        out.push(Candidate { pair: p, defect });
    }
    Ok(out)
}

/// Solve the decoupled-cell threshold problem and decide whether virtual
/// levels exist. Returns 0, 1, or 2 accepted solutions, refined on the
/// doubled truncation height and normalized per `|c_+|^2 + |c_-|^2 = 1`
/// (orthonormalized amplitude vectors when the multiplicity is 2).
pub fn solve_threshold(
    geom: &Arc<CellGeometry>,
    potential: &Arc<PotentialSpec>,
    grid: &Grid,
    cfg: &ThresholdConfig,
    opts: &EigenOpts,
) -> Result<ThresholdDetection> {
    let bc = BcKind::ModeMatchedRobin { k: 0.0, modes: ModeDecayRates::default() };
    let op1 = assemble_decoupled(geom, potential, grid, bc)?;
    let window = cfg.window_scale / grid.x_max;
    let cands1 = window_candidates(&op1, window, cfg, opts)?;
    if cands1.len() > 2 {
        return Err(CoreError::UnexpectedMultiplicity { found: cands1.len() });
    }
    let grid2 = grid.doubled_height();
    let op2 = assemble_decoupled(geom, potential, &grid2, bc)?;
    let window2 = cfg.window_scale / grid2.x_max;
    let cands2 = window_candidates(&op2, window2, cfg, opts)?;
    if cands2.len() > 2 {
        return Err(CoreError::UnexpectedMultiplicity { found: cands2.len() });
    }

    let floor = cfg.floor_mult * grid.h1.max(grid.h2).powi(2);
    let mut accepted: Vec<(EigenResult, f64, f64)> = Vec::new();
    let mut borderline = false;
    let mut used2 = vec![false; cands2.len()];
    for c1 in &cands1 {
        let mut best: Option<(usize, f64)> = None;
        for (k, c2) in cands2.iter().enumerate() {
            if used2[k] {
                continue;
            }
            let dist = (c2.pair.lambda - c1.pair.lambda).abs();
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((k, dist));
            }
        }
        let Some((k2, _)) = best else {
            // vanished under refinement
            continue;
        };
        let c2 = &cands2[k2];
        let shrunk = c2.defect <= cfg.shrink_ratio * c1.defect;
        let under_floor = c2.defect <= floor;
        if shrunk || under_floor {
            used2[k2] = true;
            if !shrunk && c2.defect > 0.5 * floor {
                borderline = true;
            }
            accepted.push((c2.pair.clone(), c1.defect, c2.defect));
        }
    }
    if accepted.is_empty() && !cands1.is_empty() && cands2.iter().any(|c| c.defect <= floor) {
        return Err(CoreError::UnstableDetection(
            "window candidates do not persist across truncation heights".into(),
        ));
    }

    let nodes2 = Arc::new(classify_nodes(geom, &grid2, 0.0)?);
    let mut fields: Vec<Vec<Complex64>> =
        accepted.iter().map(|(p, _, _)| p.vector.clone()).collect();

    // orthonormalize the amplitude vectors (linear combinations of solutions
    // stay solutions)
    let amp = |f: &[Complex64]| -> (Complex64, Complex64) {
        let nh = grid2.n2_half as isize;
        let cm = mode1_amplitude(f, &nodes2, &grid2, geom.a_minus, -(nh - 1));
        let cp = mode1_amplitude(f, &nodes2, &grid2, geom.a_plus, nh - 1);
        (cm, cp)
    };
    if fields.len() == 2 {
        let (am, ap) = amp(&fields[0]);
        let n0 = am.norm_sqr() + ap.norm_sqr();
        if n0 > 0.0 {
            let f0 = fields[0].clone();
            let (bm, bp) = amp(&fields[1]);
            let inner = (am.conj() * bm + ap.conj() * bp) / n0;
            for (x, y) in fields[1].iter_mut().zip(&f0) {
                *x -= inner * y;
            }
        }
    }

    let mut solutions = Vec::new();
    let mut defect_pairs = Vec::new();
    for ((pair, d1, d2), mut field) in accepted.into_iter().zip(fields.into_iter()) {
        let (cm, cp) = amp(&field);
        let scale = (cm.norm_sqr() + cp.norm_sqr()).sqrt();
        if scale < 1e-12 {
            return Err(CoreError::ResonanceData(
                "threshold solution carries no first-mode outlet amplitude".into(),
            ));
        }
        // normalization and a deterministic phase (c_minus real positive)
        let phase_src = if cm.norm() > 1e-8 { cm } else { cp };
        let phase = phase_src / phase_src.norm();
        let factor = phase.conj() / scale;
        for x in &mut field {
            *x *= factor;
        }
        let (cm, cp) = amp(&field);
        let hm_top = higher_mode_ratio(&field, &nodes2, &grid2, geom, true);
        let hm_bot = higher_mode_ratio(&field, &nodes2, &grid2, geom, false);
        solutions.push(ResonanceSolution {
            field,
            lambda: pair.lambda,
            defect: d2,
            c_plus: cp,
            c_minus: cm,
            higher_mode_ratio: hm_top.max(hm_bot),
            grid: grid2,
            nodes: Arc::clone(&nodes2),
        });
        defect_pairs.push((d1, d2));
    }
    solutions.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(ThresholdDetection { solutions, borderline, window, defect_pairs })
}

/// One-sided second-order corner derivatives of the accepted solutions.
///
/// The corners `(0, 0)` and `(d, 0)` sit on two Dirichlet walls, so the
/// corner value 0 serves as one stencil point:
/// `dpsi/dx1(0,0) = (4 psi(h) - psi(2h)) / (2h)`. The mixed derivative
/// applies the same stencil to centered `x2` differences.
pub fn extract_resonance_data(
    solutions: &[ResonanceSolution],
    geom: &CellGeometry,
) -> Result<ResonanceData> {
    if solutions.is_empty() {
        return Ok(ResonanceData {
            multiplicity: 0,
            d: geom.d,
            a_minus: vec![],
            a_plus: vec![],
            m_minus: vec![],
            m_plus: vec![],
            amplitudes: vec![],
        });
    }
    for (x1, name) in [(0.0, "(0, 0)"), (geom.d, "(d, 0)")] {
        if !geom.on_wall(x1, 0.0) {
            return Err(CoreError::ResonanceData(format!(
                "corner {name} does not lie on the cell boundary; corner derivatives are undefined"
            )));
        }
    }
    let mut data = ResonanceData {
        multiplicity: solutions.len(),
        d: geom.d,
        a_minus: vec![],
        a_plus: vec![],
        m_minus: vec![],
        m_plus: vec![],
        amplitudes: vec![],
    };
    for sol in solutions {
        let grid = &sol.grid;
        let nodes = &sol.nodes;
        let val = |i: usize, j: isize| -> Complex64 {
            nodes.unknown(i, j).map_or(Complex64::new(0.0, 0.0), |a| sol.field[a])
        };
        let h1 = grid.h1;
        let n1 = grid.n1;
        let a_minus = (val(1, 0) * 4.0 - val(2, 0)) / (2.0 * h1);
        let a_plus = (val(n1 - 2, 0) - val(n1 - 1, 0) * 4.0) / (2.0 * h1);
        let dx2 = |i: usize| (val(i, 1) - val(i, -1)) / (2.0 * grid.h2);
        let m_minus = (dx2(1) * 4.0 - dx2(2)) / (2.0 * h1);
        let m_plus = (dx2(n1 - 2) - dx2(n1 - 1) * 4.0) / (2.0 * h1);
        data.a_minus.push(a_minus);
        data.a_plus.push(a_plus);
        data.m_minus.push(m_minus);
        data.m_plus.push(m_plus);
        data.amplitudes.push((sol.c_minus, sol.c_plus));
    }
    Ok(data)
}

/// `ell_tau` for one solution's corner derivatives under a sign convention:
/// `A_- + sign * A_+ * e^{-i tau d}`.
pub(crate) fn ell_of(
    a_minus: Complex64,
    a_plus: Complex64,
    tau: f64,
    d: f64,
    sign: f64,
) -> Complex64 {
    a_minus + a_plus * sign * Complex64::from_polar(1.0, -tau * d)
}

/// Unitary rotation of a multiplicity-2 pair making `ell_tau` vanish for the
/// second solution (and `|ell_tau(first)| = ||L_tau||`).
pub fn rotate_pair(data: &ResonanceData, tau: f64, plus_sign: bool) -> Result<ResonanceData> {
    if data.multiplicity != 2 {
        return Err(CoreError::ResonanceData(format!(
            "rotate_pair needs multiplicity 2, got {}",
            data.multiplicity
        )));
    }
    let sign = if plus_sign { 1.0 } else { -1.0 };
    let l1 = ell_of(data.a_minus[0], data.a_plus[0], tau, data.d, sign);
    let l2 = ell_of(data.a_minus[1], data.a_plus[1], tau, data.d, sign);
    let norm = (l1.norm_sqr() + l2.norm_sqr()).sqrt();
    let scale = data.a_minus[0].norm() + data.a_plus[0].norm() + data.a_minus[1].norm();
    if norm <= 1e-12 * scale.max(1.0) {
        return Err(CoreError::VanishingLTau);
    }
    // rows of the unitary: (conj l1, conj l2) / ||L|| and (l2, -l1) / ||L||
    let u11 = l1.conj() / norm;
    let u12 = l2.conj() / norm;
    let u21 = l2 / norm;
    let u22 = -l1 / norm;
    let rot2 = |x: &[Complex64; 2]| [u11 * x[0] + u12 * x[1], u21 * x[0] + u22 * x[1]];
    let am = rot2(&[data.a_minus[0], data.a_minus[1]]);
    let ap = rot2(&[data.a_plus[0], data.a_plus[1]]);
    let mm = rot2(&[data.m_minus[0], data.m_minus[1]]);
    let mp = rot2(&[data.m_plus[0], data.m_plus[1]]);
    let cm = rot2(&[data.amplitudes[0].0, data.amplitudes[1].0]);
    let cp = rot2(&[data.amplitudes[0].1, data.amplitudes[1].1]);
    Ok(ResonanceData {
        multiplicity: 2,
        d: data.d,
        a_minus: am.to_vec(),
        a_plus: ap.to_vec(),
        m_minus: mm.to_vec(),
        m_plus: mp.to_vec(),
        amplitudes: vec![(cm[0], cp[0]), (cm[1], cp[1])],
    })
}

// ---------------------------------------------------------------------------
// plain-text record
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RecordForm {
    multiplicity: usize,
    d: f64,
    a_minus: Vec<[f64; 2]>,
    a_plus: Vec<[f64; 2]>,
    m_minus: Vec<[f64; 2]>,
    m_plus: Vec<[f64; 2]>,
    c_minus: Vec<[f64; 2]>,
    c_plus: Vec<[f64; 2]>,
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl ResonanceData {
    /// Serialize as a small TOML record so the asymptotics stage can run
    /// standalone on exported or synthetic data.
    pub fn to_record(&self) -> String {
        let form = RecordForm {
            multiplicity: self.multiplicity,
            d: self.d,
            a_minus: to_pairs(&self.a_minus),
            a_plus: to_pairs(&self.a_plus),
            m_minus: to_pairs(&self.m_minus),
            m_plus: to_pairs(&self.m_plus),
            c_minus: self.amplitudes.iter().map(|(cm, _)| [cm.re, cm.im]).collect(),
            c_plus: self.amplitudes.iter().map(|(_, cp)| [cp.re, cp.im]).collect(),
        };
        toml::to_string(&form).expect("resonance record serializes")
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let form: RecordForm =
            toml::from_str(text).map_err(|e| CoreError::ResonanceData(e.to_string()))?;
        let m = form.multiplicity;
        for (name, len) in [
            ("a_minus", form.a_minus.len()),
            ("a_plus", form.a_plus.len()),
            ("m_minus", form.m_minus.len()),
            ("m_plus", form.m_plus.len()),
            ("c_minus", form.c_minus.len()),
            ("c_plus", form.c_plus.len()),
        ] {
            if len != m {
                return Err(CoreError::ResonanceData(format!(
                    "field {name} has {len} entries for multiplicity {m}"
                )));
            }
        }
        Ok(ResonanceData {
            multiplicity: m,
            d: form.d,
            a_minus: from_pairs(&form.a_minus),
            a_plus: from_pairs(&form.a_plus),
            m_minus: from_pairs(&form.m_minus),
            m_plus: from_pairs(&form.m_plus),
            amplitudes: form
                .c_minus
                .iter()
                .zip(&form.c_plus)
                .map(|(cm, cp)| (Complex64::new(cm[0], cm[1]), Complex64::new(cp[0], cp[1])))
                .collect(),
        })
    }

    /// Analytic data of the straight strip (for tests and synthetic runs):
    /// `psi_0 = sin(pi x1) / sqrt(2)`.
    pub fn straight_strip_analytic() -> Self {
        let pi = std::f64::consts::PI;
        let s = 1.0 / 2.0f64.sqrt();
        ResonanceData {
            multiplicity: 1,
            d: 1.0,
            a_minus: vec![Complex64::new(pi * s, 0.0)],
            a_plus: vec![Complex64::new(-pi * s, 0.0)],
            m_minus: vec![Complex64::new(0.0, 0.0)],
            m_plus: vec![Complex64::new(0.0, 0.0)],
            amplitudes: vec![(Complex64::new(s, 0.0), Complex64::new(s, 0.0))],
        }
    }
}

/// Orthonormality defect of the amplitude vectors for multiplicity 2.
pub fn amplitude_gram_defect(data: &ResonanceData) -> f64 {
    if data.multiplicity != 2 {
        return 0.0;
    }
    let (am, ap) = data.amplitudes[0];
    let (bm, bp) = data.amplitudes[1];
    (am.conj() * bm + ap.conj() * bp).norm()
}

/// `|A_-| != |A_+|` check with a relative-difference threshold; the formulas
/// still evaluate when this fails (the straight strip is exactly the
/// equality case), so callers only warn.
pub fn derivative_moduli_distinct(data: &ResonanceData, j: usize, rel_tol: f64) -> bool {
    let am = data.a_minus[j].norm();
    let ap = data.a_plus[j].norm();
    (am - ap).abs() > rel_tol * am.max(ap).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn strip_has_one_virtual_level() {
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::Zero);
        let grid = Grid::new(1.0, 32, 4.0, 64).unwrap();
        let det = solve_threshold(&geom, &pot, &grid, &ThresholdConfig::default(), &EigenOpts::default()).unwrap();
        assert_eq!(det.solutions.len(), 1, "strip must carry exactly one virtual level");
        let sol = &det.solutions[0];
        let s = 1.0 / 2.0f64.sqrt();
        assert!((sol.c_minus.re - s).abs() < 1e-6, "c_minus = {}", sol.c_minus);
        assert!((sol.c_plus.re - s).abs() < 1e-6, "c_plus = {}", sol.c_plus);
        assert!((sol.c_minus.norm_sqr() + sol.c_plus.norm_sqr() - 1.0).abs() < 1e-8);
        assert!(sol.defect < 1e-9, "defect {}", sol.defect);
        assert!(sol.higher_mode_ratio < 1e-8);
    }

    #[test]
    fn repulsive_bump_destroys_virtual_level() {
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::gaussian(6.0, 0.5, 0.0, 0.25, 0.4, 1.0, 1.0).unwrap());
        let grid = Grid::new(1.0, 24, 4.0, 48).unwrap();
        let det = solve_threshold(&geom, &pot, &grid, &ThresholdConfig::default(), &EigenOpts::default()).unwrap();
        assert_eq!(det.solutions.len(), 0, "repulsive potential must kill the virtual level");
    }

    #[test]
    fn extraction_matches_analytic_strip() {
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::Zero);
        let grid = Grid::new(1.0, 64, 3.0, 96).unwrap();
        let det = solve_threshold(&geom, &pot, &grid, &ThresholdConfig::default(), &EigenOpts::default()).unwrap();
        let data = extract_resonance_data(&det.solutions, &geom).unwrap();
        assert_eq!(data.multiplicity, 1);
        let want = PI / 2.0f64.sqrt();
        let rel = (data.a_minus[0].re - want).abs() / want;
        assert!(rel < 1e-2, "A_- = {} vs {want} (rel {rel})", data.a_minus[0]);
        let rel = (data.a_plus[0].re + want).abs() / want;
        assert!(rel < 1e-2, "A_+ = {}", data.a_plus[0]);
        assert!(data.m_minus[0].norm() < 1e-6);
        assert!(data.m_plus[0].norm() < 1e-6);
    }

    #[test]
    fn extraction_second_order_in_h() {
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::Zero);
        let want = PI / 2.0f64.sqrt();
        let mut errs = Vec::new();
        for n1 in [16usize, 32, 64] {
            let grid = Grid::new(1.0, n1, 3.0, 3 * n1).unwrap();
            let det = solve_threshold(&geom, &pot, &grid, &ThresholdConfig::default(), &EigenOpts::default()).unwrap();
            let data = extract_resonance_data(&det.solutions, &geom).unwrap();
            errs.push((data.a_minus[0].re - want).abs());
        }
        let slope1 = (errs[0] / errs[1]).log2();
        let slope2 = (errs[1] / errs[2]).log2();
        for s in [slope1, slope2] {
            assert!((s - 2.0).abs() < 0.3, "Richardson slope {s}, errors {errs:?}");
        }
    }

    #[test]
    fn multiplicity_zero_data() {
        let geom = CellGeometry::straight_strip();
        let data = extract_resonance_data(&[], &geom).unwrap();
        assert_eq!(data.multiplicity, 0);
        assert!(data.a_minus.is_empty());
    }

    fn synthetic_pair() -> ResonanceData {
        ResonanceData {
            multiplicity: 2,
            d: 1.0,
            a_minus: vec![c(1.0, 0.2), c(-0.3, 0.9)],
            a_plus: vec![c(0.4, -1.1), c(0.8, 0.1)],
            m_minus: vec![c(0.2, 0.0), c(0.5, -0.2)],
            m_plus: vec![c(-0.1, 0.3), c(0.0, 0.7)],
            amplitudes: vec![(c(0.6, 0.0), c(0.8, 0.0)), (c(0.8, 0.0), c(-0.6, 0.0))],
        }
    }

    #[test]
    fn rotation_zeroes_second_ell() {
        let data = synthetic_pair();
        let tau = 0.8;
        let rot = rotate_pair(&data, tau, true).unwrap();
        let l1 = ell_of(rot.a_minus[0], rot.a_plus[0], tau, 1.0, 1.0);
        let l2 = ell_of(rot.a_minus[1], rot.a_plus[1], tau, 1.0, 1.0);
        assert!(l2.norm() < 1e-12, "ell(second) = {l2}");
        assert!(l1.norm() > 0.1);
        let before = (ell_of(data.a_minus[0], data.a_plus[0], tau, 1.0, 1.0).norm_sqr()
            + ell_of(data.a_minus[1], data.a_plus[1], tau, 1.0, 1.0).norm_sqr())
        .sqrt();
        assert!((l1.norm() - before).abs() < 1e-12);
    }

    #[test]
    fn rotation_identity_when_second_already_zero() {
        let mut data = synthetic_pair();
        data.a_minus[1] = c(1.0, 0.0);
        data.a_plus[1] = c(-1.0, 0.0);
        let rot = rotate_pair(&data, 0.0, true).unwrap();
        let l2 = ell_of(rot.a_minus[1], rot.a_plus[1], 0.0, 1.0, 1.0);
        assert!(l2.norm() < 1e-12);
    }

    #[test]
    fn rotation_of_equal_ells_is_45_degrees() {
        let data = ResonanceData {
            multiplicity: 2,
            d: 1.0,
            a_minus: vec![c(1.0, 0.0), c(1.0, 0.0)],
            a_plus: vec![c(0.0, 0.0), c(0.0, 0.0)],
            m_minus: vec![c(0.0, 0.0); 2],
            m_plus: vec![c(0.0, 0.0); 2],
            amplitudes: vec![(c(1.0, 0.0), c(0.0, 0.0)); 2],
        };
        let rot = rotate_pair(&data, 0.0, true).unwrap();
        let l1 = ell_of(rot.a_minus[0], rot.a_plus[0], 0.0, 1.0, 1.0);
        let l2 = ell_of(rot.a_minus[1], rot.a_plus[1], 0.0, 1.0, 1.0);
        assert!((l1.norm() - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(l2.norm() < 1e-12);
    }

    #[test]
    fn vanishing_l_tau_is_an_error() {
        let data = ResonanceData {
            multiplicity: 2,
            d: 1.0,
            a_minus: vec![c(0.0, 0.0); 2],
            a_plus: vec![c(0.0, 0.0); 2],
            m_minus: vec![c(0.0, 0.0); 2],
            m_plus: vec![c(0.0, 0.0); 2],
            amplitudes: vec![(c(1.0, 0.0), c(0.0, 0.0)); 2],
        };
        assert!(matches!(rotate_pair(&data, 0.3, true), Err(CoreError::VanishingLTau)));
    }

    #[test]
    fn record_round_trip() {
        let data = synthetic_pair();
        let text = data.to_record();
        let back = ResonanceData::from_record(&text).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn strip_benchmark_ell_modulus() {
        // |ell_tau|^2 = pi^2 |1 - e^{-i tau}|^2 / 2 from extracted data, to O(h^2)
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::Zero);
        let grid = Grid::new(1.0, 64, 3.0, 96).unwrap();
        let det = solve_threshold(&geom, &pot, &grid, &ThresholdConfig::default(), &EigenOpts::default()).unwrap();
        let data = extract_resonance_data(&det.solutions, &geom).unwrap();
        for tau in [0.0, 0.7, 2.2, PI] {
            let ell = ell_of(data.a_minus[0], data.a_plus[0], tau, 1.0, 1.0);
            let want = PI * PI * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -tau)).norm_sqr() / 2.0;
            assert!(
                (ell.norm_sqr() - want).abs() < 2e-2 * want.max(1.0),
                "tau = {tau}: {} vs {want}",
                ell.norm_sqr()
            );
        }
    }
}
