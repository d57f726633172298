// Coefficient tables are quoted verbatim from the literature.
#![allow(clippy::excessive_precision)]

//! Gamma-family special functions restricted to positive real arguments.
//!
//! `log_gamma` is a Lanczos approximation ("An Analysis of the Lanczos Gamma
//! Approximation", Glendon Ralph Pugh, 2004, p. 116); `digamma` follows
//! Algorithm AS 103 (Jose Bernardo, Applied Statistics 25(3), 1976). Both are
//! accurate well beyond the crate's contracts: relative error <= 1e-13 for
//! `log_gamma` on [1e-3, 1e6] and absolute error <= 1e-10 for `digamma` on
//! [1e-2, 1e6]. Everything downstream (moment formulas, Chebyshev levels)
//! reduces to sums of these two functions.

use crate::{Error, Result};

/// Euler's constant gamma.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082402431;

const LN_2_PI: f64 = 1.837877066409345483560659472811235279;

/// Lanczos shift parameter.
const LANCZOS_R: f64 = 10.900511;

/// Lanczos series coefficients.
const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

// ln(2 sqrt(e / pi))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620782237635245222345518445781647212;

fn check_positive(name: &'static str, z: f64) -> Result<()> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::Domain {
            name,
            value: z,
            requirement: "finite and > 0",
        });
    }
    Ok(())
}

/// Natural logarithm of the gamma function for z > 0.
pub fn log_gamma(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok(log_gamma_unchecked(z))
}

#[inline]
pub(crate) fn log_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // Reflection through Gamma(z)Gamma(1-z) = pi / sin(pi z).
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |acc, (i, &c)| acc + c / (i as f64 - z));
        std::f64::consts::PI.ln()
            - (std::f64::consts::PI * z).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - z) * ((0.5 - z + LANCZOS_R) / std::f64::consts::E).ln()
    } else {
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |acc, (i, &c)| acc + c / (z + i as f64 - 1.0));
        s.ln() + LN_2_SQRT_E_OVER_PI + (z - 0.5) * ((z - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
    }
}

/// Digamma (logarithmic derivative of gamma) for z > 0.
pub fn digamma(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok(digamma_unchecked(z))
}

pub(crate) fn digamma_unchecked(z: f64) -> f64 {
    // AS 103: shift the argument above 12, then use the asymptotic series.
    const SHIFT: f64 = 12.0;
    const S3: f64 = 1.0 / 12.0;
    const S4: f64 = 1.0 / 120.0;
    const S5: f64 = 1.0 / 252.0;
    const S6: f64 = 1.0 / 240.0;
    const S7: f64 = 1.0 / 132.0;

    if z <= 1e-6 {
        // psi(z) = -1/z - gamma + (pi^2/6) z + O(z^2)
        return -EULER_GAMMA - 1.0 / z + 1.644934066848226436472415166646 * z;
    }

    let mut result = 0.0;
    let mut x = z;
    while x < SHIFT {
        result -= 1.0 / x;
        x += 1.0;
    }
    let mut r = 1.0 / x;
    result += x.ln() - 0.5 * r;
    r *= r;
    result -= r * (S3 - r * (S4 - r * (S5 - r * (S6 - r * S7))));
    result
}

/// Relative deviation of gamma from its two-term asymptotic expansion,
/// `Gamma(z) / (e^{-z} z^{z-1/2} sqrt(2 pi) (1 + 1/(12 z))) - 1`,
/// computed in log space. Decays like z^{-2}.
pub fn stirling_remainder(z: f64) -> Result<f64> {
    if !z.is_finite() || z < 1.0 {
        return Err(Error::Domain {
            name: "z",
            value: z,
            requirement: "finite and >= 1",
        });
    }
    // ln_1p keeps ln(1 + 1/(12z)) accurate when z is large.
    let log_expansion = -z + (z - 0.5) * z.ln() + 0.5 * LN_2_PI + (1.0 / (12.0 * z)).ln_1p();
    Ok((log_gamma_unchecked(z) - log_expansion).exp_m1())
}

/// Bundled evaluation of log-gamma and digamma at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEval {
    pub z: f64,
    pub log_gamma: f64,
    pub digamma: f64,
}

impl GammaEval {
    pub fn at(z: f64) -> Result<Self> {
        check_positive("z", z)?;
        Ok(Self {
            z,
            log_gamma: log_gamma_unchecked(z),
            digamma: digamma_unchecked(z),
        })
    }
}

/// The constants the concentration statements are phrased around. All derived
/// quantities are computed, not hardcoded.
#[derive(Debug, Clone, Copy)]
pub struct Constants {
    /// Euler's constant.
    pub euler_gamma: f64,
    /// e^{-gamma}: the equal-weights concentration center, ~0.5615.
    pub exp_neg_gamma: f64,
    /// sqrt(2) exp(psi(1/2)/2): the Euclidean-sphere center, ~0.5298.
    pub euclidean_center: f64,
}

impl Constants {
    pub fn compute() -> Self {
        let euler_gamma = EULER_GAMMA;
        let exp_neg_gamma = (-euler_gamma).exp();
        let euclidean_center = std::f64::consts::SQRT_2 * (digamma_unchecked(0.5) / 2.0).exp();
        Self {
            euler_gamma,
            exp_neg_gamma,
            euclidean_center,
        }
    }
}

/// e^{-gamma}, the equal-weights center.
pub fn exp_neg_gamma() -> f64 {
    (-EULER_GAMMA).exp()
}

/// sqrt(2) exp(psi(1/2)/2), the Euclidean-sphere center.
pub fn euclidean_center() -> f64 {
    Constants::compute().euclidean_center
}
