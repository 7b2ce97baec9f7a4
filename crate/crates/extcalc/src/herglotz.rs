//! The Weyl-Titchmarsh function `M` of the pair, the Livsic function
//! `s = (M - i)/(M + i)`, an independent inner-product route to `s`, the
//! analytic-criterion diagnostic, and pointwise Stieltjes inversion of
//! boundary densities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{herglotz_kernel_integral, resolvent_inner_product, Measure};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Evaluator of the Herglotz-class function represented by a normalized
/// measure. Pure and freely shareable across threads.
#[derive(Clone, Copy, Debug)]
pub struct HerglotzEvaluator<'a> {
    measure: &'a Measure,
}

impl<'a> HerglotzEvaluator<'a> {
    pub fn new(measure: &'a Measure) -> Self {
        HerglotzEvaluator { measure }
    }

    pub fn measure(&self) -> &'a Measure {
        self.measure
    }

    /// The Weyl-Titchmarsh function. Evaluated by the kernel integral in the
    /// closed upper half-plane (real points must lie off the support) and by
    /// Schwarz reflection `M(z) = conj(M(conj z))` below the real axis.
    pub fn weyl_m(&self, z: Complex64) -> Result<Complex64> {
        if z.im < 0.0 {
            Ok(herglotz_kernel_integral(self.measure, z.conj())?.conj())
        } else {
            herglotz_kernel_integral(self.measure, z)
        }
    }

    /// The Livsic function `s(z) = (M(z) - i)/(M(z) + i)`, defined on the
    /// open upper half-plane only. There is no canonical reflection for this
    /// Schur-class function, so points with `Im z <= 0` are rejected.
    pub fn livsic_s(&self, z: Complex64) -> Result<Complex64> {
        require_upper(z)?;
        let m = self.weyl_m(z)?;
        // Im M > 0, so M + i never vanishes here.
        Ok((m - I) / (m + I))
    }

    /// The same function computed from deficiency-element inner products,
    /// `s(z) = ((z-i)/(z+i)) (g_z, g_-)/(g_z, g_+)` with
    /// `g_z(lambda) = 1/(lambda - z)`. Independent of `weyl_m`, so agreement
    /// of the two routes is a genuine check of the Cayley identity.
    pub fn livsic_s_via_ratio(&self, z: Complex64) -> Result<Complex64> {
        require_upper(z)?;
        let num = resolvent_inner_product(self.measure, z, -I)?;
        let den = resolvent_inner_product(self.measure, z, I)?;
        if den.norm() < 1e-150 {
            return Err(Error::DegenerateRatio { modulus: den.norm() });
        }
        Ok((z - I) / (z + I) * num / den)
    }
}

fn require_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::NotUpperHalfPlane { z })
    }
}

// ---------------------------------------------------------------------------
// analytic-criterion diagnostic
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

/// Samples of `|z (s(z) - e^{2 i alpha})|` along one nontangential ray.
#[derive(Clone, Debug)]
pub struct RayGrowth {
    pub alpha: f64,
    pub ray_angle: f64,
    pub samples: Vec<f64>,
}

/// Finite-sample diagnostic of the two analytic conditions a Schur-class
/// function must satisfy to arise from a densely defined symmetric operator:
/// `s(i) = 0`, and `|z (s(z) - e^{2 i alpha})| -> infinity` along every
/// nontangential ray for every unimodular direction.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub s_at_i: Complex64,
    pub ray_growth: Vec<RayGrowth>,
    pub verdict: CriterionVerdict,
}

/// Tolerance on `|s(i)|` for the first criterion condition.
const S_AT_I_TOL: f64 = 1e-7;

impl<'a> HerglotzEvaluator<'a> {
    pub fn livsic_criterion_diagnostic(
        &self,
        rays: &[f64],
        radii: &[f64],
    ) -> Result<CriterionReport> {
        livsic_criterion_diagnostic(|z| self.livsic_s(z), rays, radii)
    }
}

/// Diagnostic over an arbitrary Schur-class evaluator. The limit condition is
/// not decidable from finitely many samples, so the verdict is `consistent`
/// or `inconsistent` only when the sampled growth is unambiguous and honest
/// `inconclusive` otherwise.
pub fn livsic_criterion_diagnostic<F>(
    s_eval: F,
    rays: &[f64],
    radii: &[f64],
) -> Result<CriterionReport>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    use std::f64::consts::PI;

    for &theta in rays {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::TangentialRay(theta));
        }
    }
    if radii.len() < 3 || !radii.windows(2).all(|w| w[1] > w[0] && w[0] > 0.0) {
        return Err(Error::BadSchedule);
    }

    let s_at_i = s_eval(I)?;

    // Fixed alpha grid, plus the empirical limit direction of s along each
    // ray: a flat-or-decaying probe can only occur where s approaches the
    // unimodular value e^{2 i alpha}, so the observed direction arg(s)/2 at
    // the farthest radius is the one worth probing for a definite failure.
    // The empirical probes count toward `inconsistent` only; the
    // `consistent` determination uses the fixed grid, since a fitted alpha
    // always dips at the fitting radius.
    let mut alphas: Vec<(f64, bool)> = (0..16).map(|k| (PI * k as f64 / 16.0, false)).collect();
    for &theta in rays {
        let far = Complex64::from_polar(*radii.last().expect("nonempty"), theta);
        if let Ok(s_far) = s_eval(far) {
            if s_far.norm() > 0.5 {
                alphas.push(((s_far.arg() / 2.0).rem_euclid(PI), true));
            }
        }
    }

    let mut ray_growth = Vec::new();
    let mut any_stalled = false;
    let mut all_growing = true;
    for &(alpha, empirical) in &alphas {
        let target = Complex64::from_polar(1.0, 2.0 * alpha);
        for &theta in rays {
            let samples: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    let z = Complex64::from_polar(r, theta);
                    s_eval(z).map(|s| (z * (s - target)).norm())
                })
                .collect::<Result<_>>()?;

            let growing = samples.windows(2).all(|w| w[1] > w[0] * (1.0 - 1e-12))
                && samples.last() > samples.first();
            let non_increasing = samples.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            if non_increasing {
                any_stalled = true;
            }
            if !growing && !empirical {
                all_growing = false;
            }
            ray_growth.push(RayGrowth {
                alpha,
                ray_angle: theta,
                samples,
            });
        }
    }

    let verdict = if s_at_i.norm() > S_AT_I_TOL || any_stalled {
        CriterionVerdict::Inconsistent
    } else if all_growing {
        CriterionVerdict::Consistent
    } else {
        CriterionVerdict::Inconclusive
    };

    Ok(CriterionReport {
        s_at_i,
        ray_growth,
        verdict,
    })
}

pub fn default_rays() -> Vec<f64> {
    use std::f64::consts::PI;
    vec![PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
}

pub fn default_radii() -> Vec<f64> {
    (0..=20).map(|k| (2.0f64).powi(k)).collect()
}

// ---------------------------------------------------------------------------
// Stieltjes inversion
// ---------------------------------------------------------------------------

/// Pointwise boundary density with its extrapolation spread.
#[derive(Clone, Copy, Debug)]
pub struct DensityEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Recover the Radon-Nikodym boundary density of a Herglotz function at a
/// real point: `f(lambda0) = (1/pi) lim_{eps -> 0} Im F(lambda0 + i eps)`,
/// accelerated by one Richardson step over the epsilon schedule. The error
/// estimate is the spread of the last two extrapolants; a schedule whose
/// extrapolants do not settle is reported as an error carrying the estimate.
pub fn boundary_density<F>(
    evaluator: F,
    lambda0: f64,
    epsilon_schedule: &[f64],
) -> Result<DensityEstimate>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    use std::f64::consts::PI;

    if epsilon_schedule.len() < 3
        || !epsilon_schedule
            .windows(2)
            .all(|w| w[0] > w[1] && w[1] > 0.0)
    {
        return Err(Error::BadSchedule);
    }

    let values: Vec<f64> = epsilon_schedule
        .iter()
        .map(|&eps| evaluator(Complex64::new(lambda0, eps)).map(|v| v.im / PI))
        .collect::<Result<_>>()?;

    // first-order elimination: each pair of (eps, value) samples is
    // interpolated linearly to eps = 0
    let extrapolants: Vec<f64> = values
        .windows(2)
        .zip(epsilon_schedule.windows(2))
        .map(|(v, e)| (e[0] * v[1] - e[1] * v[0]) / (e[0] - e[1]))
        .collect();

    let n = extrapolants.len();
    let value = extrapolants[n - 1];
    let spread = (extrapolants[n - 1] - extrapolants[n - 2]).abs();
    if spread > 1e-7 * value.abs().max(1.0) {
        return Err(Error::ExtrapolationDiverged {
            estimate: value,
            spread,
        });
    }
    Ok(DensityEstimate {
        value,
        error_estimate: spread,
    })
}

/// Default schedule `0.1 * 2^{-k}`, k = 0..=20.
pub fn default_epsilon_schedule() -> Vec<f64> {
    (0..=20).map(|k| 0.1 * (2.0f64).powi(-k)).collect()
}
