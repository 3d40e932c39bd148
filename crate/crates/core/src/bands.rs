//! Brillouin-zone sweeps, band functions, and the validation studies.
//!
//! Band functions are tracked across `tau` by eigenvalue order (both
//! below-threshold eigenvalues are simple, and their mutual distance scale
//! dwarfs the tracking noise). Sweeps exploit `lambda(tau) = lambda(-tau)`
//! and sample `[0, pi/d]`, mirroring for output.

use crate::asymptotics::{boundary_functionals, SignConvention};
use crate::eigensolver::{below_threshold_eigs, resolve, sobolev_norm, EigenOpts};
use crate::error::{CoreError, Result};
use crate::geometry::{classify_nodes, CellGeometry, Grid, NodeSet};
use crate::operator::{assemble_decoupled, assemble_fiber, BcKind, ModeDecayRates};
use crate::potential::PotentialSpec;
use crate::threshold::ResonanceData;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// One sampled fiber.
#[derive(Debug, Clone)]
pub struct BandSample {
    pub tau: f64,
    /// Below-threshold eigenvalue, absent when the fiber has none.
    pub lambda: Option<f64>,
    pub residual: Option<f64>,
    /// Solver failure (distinct from "no eigenvalue below threshold").
    pub failed: bool,
}

/// Where an extremum sits inside the Brillouin zone `[-pi/d, pi/d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationClass {
    LeftEdge,
    Center,
    Interior,
    RightEdge,
}

/// One refined extremum.
#[derive(Debug, Clone, Copy)]
pub struct Extremum {
    pub tau: f64,
    pub value: f64,
    pub class: LocationClass,
    pub is_minimum: bool,
}

/// A sampled band function over the full zone.
#[derive(Debug, Clone)]
pub struct BandFunction {
    /// Samples over `[-pi/d, pi/d]`, mirrored from the `[0, pi/d]` sweep.
    pub samples: Vec<BandSample>,
    pub extrema: Vec<Extremum>,
    /// `[min lambda, max lambda]` over the refined extrema and samples.
    pub interval: Option<(f64, f64)>,
    /// Discrete threshold of the sweep's operators.
    pub threshold_h: f64,
}

/// Classify `tau` relative to the zone edges and center.
pub fn classify_location(tau: f64, d: f64, delta: f64) -> LocationClass {
    let edge = PI / d;
    let tol = 3.0 * delta;
    if (tau + edge).abs() <= tol {
        LocationClass::LeftEdge
    } else if (tau - edge).abs() <= tol {
        LocationClass::RightEdge
    } else if tau.abs() <= tol {
        LocationClass::Center
    } else {
        LocationClass::Interior
    }
}

/// Sweep configuration: which boundary condition backs the fibers.
#[derive(Debug, Clone, Copy)]
pub enum SweepBc {
    Dirichlet,
    /// Mode-matched with the self-consistent decay parameter seeded at the
    /// previous fiber's value.
    ModeMatched,
}

fn fiber_lowest(
    geom: &Arc<CellGeometry>,
    pot: &Arc<PotentialSpec>,
    grid: &Grid,
    nodes: &Arc<NodeSet>,
    eps: f64,
    tau: f64,
    bc: SweepBc,
    opts: &EigenOpts,
) -> Result<Vec<(f64, f64)>> {
    match bc {
        SweepBc::Dirichlet => {
            let op =
                assemble_fiber(geom, pot, grid, nodes, eps, tau, BcKind::DirichletTruncation)?;
            let pairs = below_threshold_eigs(&op, 2, opts)?;
            Ok(pairs.into_iter().map(|p| (p.lambda, p.residual)).collect())
        }
        SweepBc::ModeMatched => {
            let template = assemble_fiber(
                geom,
                pot,
                grid,
                nodes,
                eps,
                tau,
                BcKind::ModeMatchedRobin { k: 0.0, modes: ModeDecayRates::default() },
            )?;
            match crate::eigensolver::threshold_eigs_fixed_point(&template, 0.0, 1e-9, opts) {
                Ok((pair, _k)) => Ok(vec![(pair.lambda, pair.residual)]),
                Err(CoreError::NoEigenvalueBelowThreshold) => Ok(vec![]),
                Err(e) => Err(e),
            }
        }
    }
}

/// Sweep the Brillouin zone at window half-width `eps`.
///
/// Returns up to two band functions (eigenvalue-ordered). `tau_count` is the
/// number of samples on `[0, pi/d]`; the returned samples cover the full
/// zone by reflection. Individual fiber failures are recorded and skipped;
/// more than half failing aborts the sweep.
pub fn sweep(
    geom: &Arc<CellGeometry>,
    pot: &Arc<PotentialSpec>,
    grid: &Grid,
    eps: f64,
    tau_count: usize,
    bc: SweepBc,
    opts: &EigenOpts,
) -> Result<Vec<BandFunction>> {
    if tau_count < 3 {
        return Err(CoreError::Sweep(format!("tau_count = {tau_count} < 3")));
    }
    let nodes = Arc::new(classify_nodes(geom, grid, eps)?);
    let d = geom.d;
    let dtau = PI / d / (tau_count - 1) as f64;
    let taus: Vec<f64> = (0..tau_count).map(|i| i as f64 * dtau).collect();

    let results: Vec<(f64, Result<Vec<(f64, f64)>>)> = taus
        .par_iter()
        .map(|&tau| (tau, fiber_lowest(geom, pot, grid, &nodes, eps, tau, bc, opts)))
        .collect();

    let threshold_h = {
        let op = assemble_fiber(geom, pot, grid, &nodes, eps, 0.0, BcKind::DirichletTruncation)?;
        op.threshold_h
    };

    let failures = results.iter().filter(|(_, r)| r.is_err()).count();
    if failures * 2 > tau_count {
        return Err(CoreError::Sweep(format!(
            "{failures} of {tau_count} fibers failed"
        )));
    }

    let max_bands = results
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().map(|v| v.len()))
        .max()
        .unwrap_or(0);

    let mut bands = Vec::new();
    for b in 0..max_bands {
        let mut half: Vec<BandSample> = Vec::with_capacity(tau_count);
        for (tau, r) in &results {
            match r {
                Ok(list) => half.push(BandSample {
                    tau: *tau,
                    lambda: list.get(b).map(|&(l, _)| l),
                    residual: list.get(b).map(|&(_, r)| r),
                    failed: false,
                }),
                Err(_) => {
                    half.push(BandSample { tau: *tau, lambda: None, residual: None, failed: true })
                }
            }
        }

        // refine extrema over the sampled half-zone
        let value_at = |tau: f64| -> Option<f64> {
            fiber_lowest(geom, pot, grid, &nodes, eps, tau, bc, opts)
                .ok()
                .and_then(|v| v.get(b).map(|&(l, _)| l))
        };
        let mut extrema = Vec::new();
        let present: Vec<(f64, f64)> =
            half.iter().filter_map(|s| s.lambda.map(|l| (s.tau, l))).collect();
        if !present.is_empty() {
            // endpoint extrema (center and zone edge) come for free
            for (t, l) in [*present.first().unwrap(), *present.last().unwrap()] {
                let is_min = present.iter().all(|&(_, v)| l <= v + 1e-14);
                let is_max = present.iter().all(|&(_, v)| l >= v - 1e-14);
                if is_min || is_max {
                    extrema.push(Extremum {
                        tau: t,
                        value: l,
                        class: classify_location(t, d, dtau),
                        is_minimum: is_min,
                    });
                }
            }
            // interior bracketed extrema refined by golden section
            for w in present.windows(3) {
                let [(t0, l0), (t1, l1), (t2, l2)] = [w[0], w[1], w[2]];
                let bracket_min = l1 < l0 && l1 < l2;
                let bracket_max = l1 > l0 && l1 > l2;
                if bracket_min || bracket_max {
                    if let Some((t_ref, l_ref)) =
                        golden_refine(&value_at, t0, t2, bracket_min, 48)
                    {
                        extrema.push(Extremum {
                            tau: t_ref,
                            value: l_ref,
                            class: classify_location(t_ref, d, dtau),
                            is_minimum: bracket_min,
                        });
                    }
                }
            }
        }

        // mirror to the full zone
        let mut samples: Vec<BandSample> = half
            .iter()
            .skip(1)
            .rev()
            .map(|s| BandSample { tau: -s.tau, ..s.clone() })
            .collect();
        samples.extend(half.iter().cloned());

        let interval = {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &samples {
                if let Some(l) = s.lambda {
                    lo = lo.min(l);
                    hi = hi.max(l);
                }
            }
            for e in &extrema {
                lo = lo.min(e.value);
                hi = hi.max(e.value);
            }
            if lo.is_finite() {
                Some((lo, hi))
            } else {
                None
            }
        };

        bands.push(BandFunction { samples, extrema, interval, threshold_h });
    }
    Ok(bands)
}

/// Golden-section refinement of a bracketed extremum of a function that may
/// fail (absent eigenvalue near the bracket edge aborts the refinement).
fn golden_refine(
    f: &dyn Fn(f64) -> Option<f64>,
    mut a: f64,
    mut b: f64,
    minimize: bool,
    iters: usize,
) -> Option<(f64, f64)> {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let sgn = if minimize { 1.0 } else { -1.0 };
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = sgn * f(c)?;
    let mut fd = sgn * f(d)?;
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sgn * f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sgn * f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Some((t, f(t)?))
}

// ---------------------------------------------------------------------------
// scaling-law adjudication
// ---------------------------------------------------------------------------

/// Verdict of a power-law fit against named prefactor hypotheses.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    /// `(eps, value)` pairs the fit ran on.
    pub pairs: Vec<(f64, f64)>,
    pub exponent: f64,
    pub prefactor: f64,
    /// `(name, hypothesis value, |fit/hypothesis - 1|)`.
    pub hypotheses: Vec<(String, f64, f64)>,
    /// Name of the matching hypothesis, or "inconclusive".
    pub verdict: String,
    pub details: String,
}

/// Least-squares power-law fit `value ~ C eps^p` on log-log data.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pairs.len() < 2 || pairs.iter().any(|&(e, v)| e <= 0.0 || v <= 0.0) {
        return None;
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, v) in pairs {
        let x = e.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let p = (n * sxy - sx * sy) / denom;
    let lnc = (sy - p * sx) / n;
    Some((p, lnc.exp()))
}

/// Fit `pi^2 - lambda_eps(tau) ~ C eps^p` and compare `C` against the two
/// rival prefactors `pi^2 |ell_tau|^2` and `pi^2 |ell_tau|^4`.
///
/// `gaps` are `(eps, threshold - lambda)` pairs at a fixed `tau`;
/// the boundary functional is evaluated from `data` under `convention`.
pub fn adjudicate_asymptotics(
    gaps: &[(f64, f64)],
    data: &ResonanceData,
    tau: f64,
    convention: SignConvention,
) -> Result<ScalingFit> {
    if gaps.len() < 3 {
        return Err(CoreError::Sweep(format!(
            "adjudication needs at least 3 epsilon values, got {}",
            gaps.len()
        )));
    }
    let mut sorted: Vec<(f64, f64)> = gaps.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let usable: Vec<(f64, f64)> = sorted.iter().cloned().filter(|&(_, g)| g > 0.0).collect();

    let funcs = boundary_functionals(data, tau, convention);
    let ell2 = funcs.l_norm_sqr();
    let pi2 = PI * PI;
    let hyp = vec![
        ("pi^2 |ell|^2".to_string(), pi2 * ell2),
        ("pi^2 |ell|^4".to_string(), pi2 * ell2 * ell2),
    ];

    let monotone = usable.len() == sorted.len()
        && usable.windows(2).all(|w| w[1].1 > w[0].1);
    let fit = if monotone { fit_power_law(&usable) } else { None };

    let Some((p, c)) = fit else {
        return Ok(ScalingFit {
            pairs: sorted,
            exponent: f64::NAN,
            prefactor: f64::NAN,
            hypotheses: hyp.into_iter().map(|(n, v)| (n, v, f64::NAN)).collect(),
            verdict: "inconclusive".into(),
            details: "gap data empty or not monotone in eps".into(),
        });
    };

    let hypotheses: Vec<(String, f64, f64)> = hyp
        .into_iter()
        .map(|(n, v)| {
            let rel = if v > 0.0 { (c / v - 1.0).abs() } else { f64::INFINITY };
            (n, v, rel)
        })
        .collect();
    // closest in log distance
    let mut verdict = "inconclusive".to_string();
    let mut best = f64::INFINITY;
    for (n, v, _) in &hypotheses {
        if *v > 0.0 {
            let dist = (c / v).ln().abs();
            if dist < best {
                best = dist;
                verdict = n.clone();
            }
        }
    }
    let details = format!(
        "fit C = {:.6e}, p = {:.4}; hypothesis ratio |ell|^2 = {:.4}",
        c, p, ell2
    );
    Ok(ScalingFit { pairs: sorted, exponent: p, prefactor: c, hypotheses, verdict, details })
}

// ---------------------------------------------------------------------------
// interior extremum scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExtremumReport {
    pub minimum: Option<Extremum>,
    pub maximum: Option<Extremum>,
    /// The sampled function is constant to rounding; no extremum to report.
    pub degenerate: bool,
}

/// Locate the extrema of a sampled function of `tau` (typically `mu(tau)`)
/// over the Brillouin zone with local golden refinement, and classify the
/// location as interior versus edge/center.
pub fn interior_extremum_scan(
    f: &dyn Fn(f64) -> f64,
    d: f64,
    samples: usize,
) -> ExtremumReport {
    let lo = -PI / d;
    let hi = PI / d;
    let n = samples.max(16);
    let step = (hi - lo) / n as f64;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    let mut tmin = lo;
    let mut tmax = lo;
    for i in 0..=n {
        let t = lo + i as f64 * step;
        let v = f(t);
        if v < vmin {
            vmin = v;
            tmin = t;
        }
        if v > vmax {
            vmax = v;
            tmax = t;
        }
    }
    let scale = vmax.abs().max(vmin.abs()).max(1e-300);
    if (vmax - vmin) / scale < 1e-12 {
        return ExtremumReport { minimum: None, maximum: None, degenerate: true };
    }
    let lift = |t: f64, minimize: bool| -> Extremum {
        let g = |x: f64| Some(f(x));
        let (tr, vr) = golden_refine(&g, t - step, t + step, minimize, 64).unwrap();
        // wrap into the zone
        let mut tw = tr;
        if tw < lo {
            tw += 2.0 * PI / d;
        }
        if tw >= hi {
            tw -= 2.0 * PI / d;
        }
        Extremum {
            tau: tw,
            value: vr,
            class: classify_location(tw, d, step),
            is_minimum: minimize,
        }
    };
    ExtremumReport {
        minimum: Some(lift(tmin, true)),
        maximum: Some(lift(tmax, false)),
        degenerate: false,
    }
}

// ---------------------------------------------------------------------------
// resolvent convergence study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ResolventStudy {
    /// `(eps, ||u_eps - u_0||_W1, ratio r = norm / (eps sqrt(|ln eps|)))`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Consistency verdict: max r / min r < 5 over the dyadic range.
    pub consistent: bool,
    /// Fraction of the squared W^1 difference within 10 eps of a window
    /// corner, per eps (locality diagnostic).
    pub locality: Vec<f64>,
}

/// Fiber-wise check of the resolvent convergence rate: computes
/// `u_eps = (H_eps(tau) - i)^{-1} f` and `u_0 = (H^Pi - i)^{-1} f`, then
/// reports `r(eps) = ||u_eps - u_0||_{W^1} / (eps |ln eps|^{1/2})`.
pub fn resolvent_convergence_study(
    geom: &Arc<CellGeometry>,
    pot: &Arc<PotentialSpec>,
    grid: &Grid,
    source: &dyn Fn(f64, f64) -> f64,
    eps_list: &[f64],
    tau: f64,
    tol: f64,
) -> Result<ResolventStudy> {
    // validate the support condition
    let nh = grid.n2_half as isize;
    for j in -nh..=nh {
        let x2 = grid.x2(j);
        if x2.abs() >= geom.x2_inf {
            for i in 0..=grid.n1 {
                if source(grid.x1(i), x2) != 0.0 {
                    return Err(CoreError::Sweep(format!(
                        "test source must vanish for |x2| >= x2_inf, found value at ({}, {})",
                        grid.x1(i),
                        x2
                    )));
                }
            }
        }
    }
    let z = Complex64::new(0.0, 1.0);
    let nodes0 = Arc::new(classify_nodes(geom, grid, 0.0)?);
    let op0 = assemble_decoupled(geom, pot, grid, BcKind::DirichletTruncation)?;
    let f0: Vec<Complex64> = nodes0
        .unknowns
        .iter()
        .map(|&(i, j)| Complex64::new(source(grid.x1(i), grid.x2(j)), 0.0))
        .collect();
    let u0 = resolve(&op0, z, &f0, tol)?;

    let mut rows = Vec::new();
    let mut locality = Vec::new();
    for &eps in eps_list {
        let nodes = Arc::new(classify_nodes(geom, grid, eps)?);
        let op = assemble_fiber(geom, pot, grid, &nodes, eps, tau, BcKind::DirichletTruncation)?;
        let f: Vec<Complex64> = nodes
            .unknowns
            .iter()
            .map(|&(i, j)| Complex64::new(source(grid.x1(i), grid.x2(j)), 0.0))
            .collect();
        let ue = resolve(&op, z, &f, tol)?;
        // difference on the eps operator's unknowns; u_0 vanishes on the seam
        let mut diff = ue.field.clone();
        for (a, &(i, j)) in nodes.unknowns.iter().enumerate() {
            let u0v = nodes0.unknown(i, j).map_or(Complex64::new(0.0, 0.0), |b| u0.field[b]);
            diff[a] -= u0v;
        }
        let norm = sobolev_norm(&diff, grid, &nodes);
        let r = norm / (eps * eps.ln().abs().sqrt());
        rows.push((eps, norm, r));

        // locality: share of the squared W^1 norm within 10 eps of a corner
        let mut masked = diff.clone();
        for (a, &(i, j)) in nodes.unknowns.iter().enumerate() {
            let (x1, x2) = (grid.x1(i), grid.x2(j));
            let dm = (x1.powi(2) + x2.powi(2)).sqrt();
            let dp = ((x1 - geom.d).powi(2) + x2.powi(2)).sqrt();
            if dm.min(dp) > 10.0 * eps {
                masked[a] = Complex64::new(0.0, 0.0);
            }
        }
        let nm = sobolev_norm(&masked, grid, &nodes);
        locality.push(if norm > 0.0 { (nm / norm).powi(2) } else { 0.0 });
    }
    let rs: Vec<f64> = rows.iter().map(|&(_, _, r)| r).collect();
    let rmax = rs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rmin = rs.iter().cloned().fold(f64::INFINITY, f64::min);
    let consistent = rmin > 0.0 && rmax / rmin < 5.0;
    Ok(ResolventStudy { rows, consistent, locality })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_fit_recovers_synthetic() {
        let pairs: Vec<(f64, f64)> =
            [0.4, 0.3, 0.2, 0.1].iter().map(|&e: &f64| (e, 3.7 * e.powi(4))).collect();
        let (p, c) = fit_power_law(&pairs).unwrap();
        assert!((p - 4.0).abs() < 1e-12);
        assert!((c - 3.7).abs() < 1e-12);
    }

    #[test]
    fn adjudication_self_consistency() {
        // synthetic data generated from form A is attributed to form A
        let data = ResonanceData::straight_strip_analytic();
        let tau = 0.0;
        let conv = SignConvention::Minus; // |ell_0|^2 = 2 pi^2 under minus
        let funcs = boundary_functionals(&data, tau, conv);
        let c_a = PI * PI * funcs.l_norm_sqr();
        let gaps: Vec<(f64, f64)> =
            [0.4, 0.3, 0.2, 0.15].iter().map(|&e: &f64| (e, c_a * e.powi(4))).collect();
        let fit = adjudicate_asymptotics(&gaps, &data, tau, conv).unwrap();
        assert_eq!(fit.verdict, "pi^2 |ell|^2");
        assert!(fit.hypotheses[0].2 < 1e-6, "prefactor error {}", fit.hypotheses[0].2);
        assert!((fit.exponent - 4.0).abs() < 1e-9);
    }

    #[test]
    fn adjudication_flags_nonmonotone() {
        let data = ResonanceData::straight_strip_analytic();
        let gaps = vec![(0.1, 1e-3), (0.2, 5e-4), (0.3, 2e-3)];
        let fit = adjudicate_asymptotics(&gaps, &data, 0.0, SignConvention::Minus).unwrap();
        assert_eq!(fit.verdict, "inconclusive");
    }

    #[test]
    fn extremum_scan_degenerate_and_center() {
        let flat = interior_extremum_scan(&|_| 1.0, 1.0, 256);
        assert!(flat.degenerate);

        // maximum forced to tau = 0 by construction
        let f = |tau: f64| 2.0 - (1.0 - tau.cos()).powi(2);
        let rep = interior_extremum_scan(&f, 1.0, 256);
        let max = rep.maximum.unwrap();
        assert_eq!(max.class, LocationClass::Center);
        assert!((max.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn extremum_scan_interior() {
        // synthetic mu with interior extrema: mu = sin^2(tau) peaks at ±pi/2
        let f = |tau: f64| tau.sin().powi(2);
        let rep = interior_extremum_scan(&f, 1.0, 512);
        let max = rep.maximum.unwrap();
        assert_eq!(max.class, LocationClass::Interior);
        assert!((max.tau.abs() - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn mu_scan_on_synthetic_pair() {
        // L_tau = (1 + 0.5 e^{-i tau}, 0.3), L'_tau = (0.2, 1 - 0.4 e^{-i tau})
        let mu = |tau: f64| {
            let ph = Complex64::from_polar(1.0, -tau);
            let l = [Complex64::new(1.0, 0.0) + ph * 0.5, Complex64::new(0.3, 0.0)];
            let lp = [Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0) - ph * 0.4];
            let l2 = l[0].norm_sqr() + l[1].norm_sqr();
            let lp2 = lp[0].norm_sqr() + lp[1].norm_sqr();
            let cross = (l[0].conj() * lp[0] + l[1].conj() * lp[1]).norm_sqr();
            let gram = l2 * lp2 - cross;
            PI * PI / 16.0 * gram * gram / (l2 * l2)
        };
        let rep = interior_extremum_scan(&mu, 1.0, 1024);
        assert!(!rep.degenerate);
        let (mn, mx) = (rep.minimum.unwrap(), rep.maximum.unwrap());
        assert!(mn.value < mx.value);
        // brute-force confirmation on a finer grid
        let mut brute_max = f64::NEG_INFINITY;
        for i in 0..20000 {
            let t = -PI + 2.0 * PI * i as f64 / 20000.0;
            brute_max = brute_max.max(mu(t));
        }
        assert!((brute_max - mx.value).abs() < 1e-6 * brute_max);
    }

    #[test]
    fn zero_source_gives_zero_study() {
        let geom = Arc::new(CellGeometry::straight_strip());
        let pot = Arc::new(PotentialSpec::Zero);
        let grid = Grid::new(1.0, 12, 2.0, 24).unwrap();
        let st = resolvent_convergence_study(
            &geom,
            &pot,
            &grid,
            &|_, _| 0.0,
            &[0.4, 0.2],
            0.0,
            1e-10,
        )
        .unwrap();
        for &(_, norm, _) in &st.rows {
            assert_eq!(norm, 0.0);
        }
    }
}
