//! Closed-form asymptotic quantities built from resonance data.
//!
//! Everything here is pure arithmetic on the corner derivatives `A_±`,
//! `M_±` of the threshold solutions:
//!
//! * boundary functionals `ell_tau = A_- ± A_+ e^{-i tau d}` (both sign
//!   conventions are exposed: the theorem statements carry a plus, the
//!   solvability-derivation end product carries a minus; the band engine
//!   adjudicates numerically which one the PDE follows),
//! * the expansion coefficients `k2 = pi |ell|^2`, `k41 = (3/4) k2`,
//!   `k4^(2) = (pi/4)(|L|^2 |L'|^2 - |(L, L')|^2)/|L|^2` and
//!   `mu = (pi^2/16)(|L|^2 |L'|^2 - |(L, L')|^2)^2 / |L|^4 = (k4^(2))^2`,
//! * predicted eigenvalues in the two rival forms (the theorem-statement
//!   form `pi^2 - pi^2 |ell|^2 e^4` versus the derivation form
//!   `pi^2 - (e^2 k2 + e^4 k41 ln e)^2`, which differ in power and
//!   prefactor — both are returned),
//! * band-edge factors, and
//! * the leading inner-expansion field `phi_1` near a window.

use crate::error::{CoreError, Result};
use crate::threshold::ResonanceData;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Sign placed on the `A_+ e^{-i tau d}` term of `ell_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// The convention of the theorem statements.
    Plus,
    /// The convention inside the derivation's final formula.
    Minus,
}

impl SignConvention {
    pub fn sign(self) -> f64 {
        match self {
            SignConvention::Plus => 1.0,
            SignConvention::Minus => -1.0,
        }
    }
}

/// `ell_tau` and `ell'_tau` for each threshold solution.
#[derive(Debug, Clone)]
pub struct BoundaryFunctionals {
    pub tau: f64,
    pub d: f64,
    pub convention: SignConvention,
    /// `A_-^(j) + sign A_+^(j) e^{-i tau d}`, one entry per solution.
    pub ell: Vec<Complex64>,
    /// Same with the mixed derivatives `M_±`.
    pub ell_prime: Vec<Complex64>,
}

impl BoundaryFunctionals {
    /// `||L_tau||^2` (equals `|ell_tau|^2` for multiplicity 1).
    pub fn l_norm_sqr(&self) -> f64 {
        self.ell.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn lp_norm_sqr(&self) -> f64 {
        self.ell_prime.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `(L_tau, L'_tau)` in C^m.
    pub fn cross(&self) -> Complex64 {
        self.ell.iter().zip(&self.ell_prime).map(|(a, b)| a * b.conj()).sum()
    }
}

/// Evaluate the boundary functionals of `data` at quasimomentum `tau`.
pub fn boundary_functionals(
    data: &ResonanceData,
    tau: f64,
    convention: SignConvention,
) -> BoundaryFunctionals {
    let phase = Complex64::from_polar(1.0, -tau * data.d) * convention.sign();
    let ell = data
        .a_minus
        .iter()
        .zip(&data.a_plus)
        .map(|(am, ap)| am + ap * phase)
        .collect();
    let ell_prime = data
        .m_minus
        .iter()
        .zip(&data.m_plus)
        .map(|(mm, mp)| mm + mp * phase)
        .collect();
    BoundaryFunctionals { tau, d: data.d, convention, ell, ell_prime }
}

/// Expansion coefficients at one quasimomentum.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticCoefficients {
    pub multiplicity: usize,
    pub tau: f64,
    /// `||L_tau||^2` (or `|ell_tau|^2` for multiplicity 1).
    pub l_norm_sqr: f64,
    /// `pi ||L_tau||^2`, the leading coefficient of the first solution;
    /// the rotated second solution has `k2 = 0`.
    pub k2: f64,
    /// `(3/4) k2`.
    pub k41: f64,
    /// `k4^(2)`; zero for multiplicity 1.
    pub k4_second: f64,
    /// `mu(tau) = (k4^(2))^2`; zero for multiplicity 1.
    pub mu: f64,
}

/// Compute the coefficients from boundary functionals.
///
/// For multiplicity 2 the `k4^(2)`/`mu` combination
/// `|L|^2 |L'|^2 - |(L, L')|^2` is invariant under the unitary pair
/// rotation, so rotated and unrotated functionals give the same values.
pub fn coefficients(
    funcs: &BoundaryFunctionals,
    multiplicity: usize,
) -> Result<AsymptoticCoefficients> {
    let l2 = funcs.l_norm_sqr();
    let k2 = PI * l2;
    let k41 = 0.75 * k2;
    let (k4_second, mu) = if multiplicity >= 2 {
        if l2 <= 0.0 {
            return Err(CoreError::VanishingLTau);
        }
        let lp2 = funcs.lp_norm_sqr();
        let cross = funcs.cross().norm_sqr();
        let gram = (l2 * lp2 - cross).max(0.0);
        let k4 = 0.25 * PI * gram / l2;
        let mu = PI * PI / 16.0 * gram * gram / (l2 * l2);
        (k4, mu)
    } else {
        (0.0, 0.0)
    };
    Ok(AsymptoticCoefficients {
        multiplicity,
        tau: funcs.tau,
        l_norm_sqr: l2,
        k2,
        k41,
        k4_second,
        mu,
    })
}

/// Predicted eigenvalue for solution `j` (1-based) at window half-width
/// `eps`, in both rival forms `(lambda_theorem, lambda_derivation)`.
///
/// Theorem form: `pi^2 - pi^2 ||L||^2 e^4` for `j = 1` and
/// `pi^2 - mu e^8 ln^2 e` for `j = 2`. Derivation form: `pi^2 - k_e^2`
/// with `k_e = e^2 k2 + e^4 k41 ln e` for `j = 1` (the non-log `k4^(1)`
/// has no closed form and is omitted) and `k_e = e^4 k4^(2)` for `j = 2`
/// (its log coefficient `(3/4) k2^(2)` vanishes identically).
pub fn predict_lambda(c: &AsymptoticCoefficients, j: usize, eps: f64) -> (f64, f64) {
    let pi2 = PI * PI;
    let e2 = eps * eps;
    let e4 = e2 * e2;
    let ln = eps.ln();
    match j {
        1 => {
            let theorem = pi2 - pi2 * c.l_norm_sqr * e4;
            let k_eps = e2 * c.k2 + e4 * c.k41 * ln;
            (theorem, pi2 - k_eps * k_eps)
        }
        2 => {
            let theorem = pi2 - c.mu * e4 * e4 * ln * ln;
            let k_eps = e4 * c.k4_second;
            (theorem, pi2 - k_eps * k_eps)
        }
        _ => (pi2, pi2),
    }
}

/// Band-edge factors of the leading band.
#[derive(Debug, Clone, Copy)]
pub struct BandPrediction {
    /// `min_tau |ell_tau|^2`-type factor: `(|A_-| - |A_+|)^2` for one
    /// solution, `||p1||^2 + ||p2||^2 - 2 |(p1, p2)|` for two.
    pub factor_min: f64,
    /// The corresponding maximum.
    pub factor_max: f64,
    /// True when the band stays separated from the threshold
    /// (`factor_min > 0`).
    pub separated: bool,
}

impl BandPrediction {
    /// Leading-order band interval `[pi^2 - pi^2 f_max e^4, pi^2 - pi^2 f_min e^4]`.
    pub fn interval(&self, eps: f64) -> (f64, f64) {
        let pi2 = PI * PI;
        let e4 = eps.powi(4);
        (pi2 - pi2 * self.factor_max * e4, pi2 - pi2 * self.factor_min * e4)
    }
}

/// Band edges from resonance data (leading band).
pub fn band_edges(data: &ResonanceData) -> BandPrediction {
    let (lo, hi) = match data.multiplicity {
        0 => (0.0, 0.0),
        1 => {
            let am = data.a_minus[0].norm();
            let ap = data.a_plus[0].norm();
            ((am - ap) * (am - ap), (am + ap) * (am + ap))
        }
        _ => {
            // p1, p2 collect the corner derivatives across solutions
            let p1 = [data.a_minus[0], data.a_minus[1]];
            let p2 = [data.a_plus[0], data.a_plus[1]];
            let n1 = p1[0].norm_sqr() + p1[1].norm_sqr();
            let n2 = p2[0].norm_sqr() + p2[1].norm_sqr();
            let cross = (p1[0].conj() * p2[0] + p1[1].conj() * p2[1]).norm();
            (n1 + n2 - 2.0 * cross, n1 + n2 + 2.0 * cross)
        }
    };
    let scale = hi.max(1e-300);
    BandPrediction { factor_min: lo, factor_max: hi, separated: lo > 1e-12 * scale }
}

/// Extrema of `|A_- + sign A_+ e^{-i tau d}|^2` over the Brillouin zone:
/// a dense scan refined by golden-section search. The analytic values are
/// `(|A_-| ± |A_+|)^2`; this numerical route exists so the two can be
/// cross-checked.
pub fn ell_modulus_extrema(
    a_minus: Complex64,
    a_plus: Complex64,
    d: f64,
    sign: f64,
    samples: usize,
) -> (f64, f64) {
    let f = |tau: f64| -> f64 {
        (a_minus + a_plus * sign * Complex64::from_polar(1.0, -tau * d)).norm_sqr()
    };
    let lo = -PI / d;
    let hi = PI / d;
    let n = samples.max(8);
    let step = (hi - lo) / n as f64;
    let mut min_i = 0;
    let mut max_i = 0;
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(lo + i as f64 * step);
        if v < fmin {
            fmin = v;
            min_i = i;
        }
        if v > fmax {
            fmax = v;
            max_i = i;
        }
    }
    let golden = |mut a: f64, mut b: f64, maximize: bool| -> f64 {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut dd = a + phi * (b - a);
        for _ in 0..90 {
            let fc = if maximize { -f(c) } else { f(c) };
            let fd = if maximize { -f(dd) } else { f(dd) };
            if fc < fd {
                b = dd;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            dd = a + phi * (b - a);
        }
        f(0.5 * (a + b))
    };
    let refine = |i: usize, maximize: bool| -> f64 {
        let t = lo + i as f64 * step;
        golden(t - step, t + step, maximize)
    };
    (refine(min_i, false), refine(max_i, true))
}

// ---------------------------------------------------------------------------
// inner expansion field
// ---------------------------------------------------------------------------

/// `sqrt(z^2 - 1)` on the branch cut along `[-1, 1]` with `sqrt(1) = 1`:
/// the product `sqrt(z - 1) sqrt(z + 1)` of principal square roots has
/// exactly this cut (the half-line cuts of the factors cancel on
/// `(-inf, -1)`).
pub fn sqrt_z2_minus_1(z: Complex64) -> Complex64 {
    (z - 1.0).sqrt() * (z + 1.0).sqrt()
}

/// Chart of the inner field: around the seam corner at `x1 = 0` (minus) or
/// `x1 = d` (plus).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartSide {
    Minus,
    Plus,
}

fn beta_coefficients(
    side: ChartSide,
    tau: f64,
    d: f64,
    alpha_minus0: Complex64,
    alpha_plus0: Complex64,
) -> (Complex64, Complex64) {
    match side {
        ChartSide::Minus => {
            let ph = Complex64::from_polar(1.0, -tau * d);
            ((alpha_minus0 - alpha_plus0 * ph) * 0.5, (alpha_minus0 + alpha_plus0 * ph) * 0.5)
        }
        ChartSide::Plus => {
            let ph = Complex64::from_polar(1.0, tau * d);
            ((alpha_plus0 - alpha_minus0 * ph) * 0.5, (alpha_plus0 + alpha_minus0 * ph) * 0.5)
        }
    }
}

/// Leading inner-expansion field around a window in scaled coordinates,
/// on the chart of the given side:
/// `phi_1(zeta) = beta^(1) zeta_2 + beta^(2) Im sqrt(z^2 - 1)`,
/// `z = zeta_1 + i zeta_2`. The alpha inputs are the corner Taylor
/// coefficients `alpha^(0)_± = ∓ dpsi/dx1(corner_±)`.
pub fn inner_field_phi1_chart(
    side: ChartSide,
    zeta: [f64; 2],
    tau: f64,
    d: f64,
    alpha_minus0: Complex64,
    alpha_plus0: Complex64,
) -> Complex64 {
    debug_assert!(zeta[1] >= 0.0, "the inner chart lives in the upper half-plane");
    let (b1, b2) = beta_coefficients(side, tau, d, alpha_minus0, alpha_plus0);
    let z = Complex64::new(zeta[0], zeta[1]);
    b1 * zeta[1] + b2 * sqrt_z2_minus_1(z).im
}

/// The minus-side chart (the window at `x1 = 0`).
pub fn inner_field_phi1(
    zeta: [f64; 2],
    tau: f64,
    d: f64,
    alpha_minus0: Complex64,
    alpha_plus0: Complex64,
) -> Complex64 {
    inner_field_phi1_chart(ChartSide::Minus, zeta, tau, d, alpha_minus0, alpha_plus0)
}

/// `d phi_1 / d zeta_2` in closed form:
/// `beta^(1) + beta^(2) Re(z / sqrt(z^2 - 1))`.
pub fn inner_field_phi1_dz2(
    side: ChartSide,
    zeta: [f64; 2],
    tau: f64,
    d: f64,
    alpha_minus0: Complex64,
    alpha_plus0: Complex64,
) -> Complex64 {
    let (b1, b2) = beta_coefficients(side, tau, d, alpha_minus0, alpha_plus0);
    let z = Complex64::new(zeta[0], zeta[1]);
    b1 + b2 * (z / sqrt_z2_minus_1(z)).re
}
