//! The dissipative triple and its function calculus: the characteristic
//! function `S`, the dissipative Weyl-Titchmarsh function `calM`, the linear
//! relation tying them together, invariant recovery from `S`, and pointwise
//! equivalence checking.
//!
//! A triple is represented by its complete invariant: the measure of the
//! underlying pair plus the von Neumann parameter `kappa`, `|kappa| < 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herglotz::HerglotzEvaluator;
use crate::measure::{Measure, Tolerances};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A symmetric operator, its reference self-adjoint extension, and a maximal
/// dissipative extension, encoded by `(measure, kappa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativeTriple {
    measure: Measure,
    #[serde(with = "crate::cjson")]
    kappa: Complex64,
}

impl DissipativeTriple {
    /// Requires `|kappa| < 1`: the strictly dissipative, non-self-adjoint
    /// case. Unimodular `kappa` (self-adjoint extensions) is admitted only by
    /// the resolvent-formula entry points.
    pub fn new(measure: Measure, kappa: Complex64) -> Result<Self> {
        if kappa.norm() >= 1.0 {
            return Err(Error::KappaNotContractive {
                modulus: kappa.norm(),
            });
        }
        Ok(DissipativeTriple { measure, kappa })
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn evaluator(&self) -> HerglotzEvaluator<'_> {
        HerglotzEvaluator::new(&self.measure)
    }

    /// The characteristic function of the triple,
    /// `S(z) = (s(z) - kappa) / (conj(kappa) s(z) - 1)`, `Im z > 0`.
    /// `|S| <= 1`, and `S(i) = kappa`.
    pub fn characteristic(&self, z: Complex64) -> Result<Complex64> {
        let s = self.evaluator().livsic_s(z)?;
        Ok(mobius_char(s, self.kappa))
    }

    /// The Weyl-Titchmarsh function of the dissipative extension,
    /// `calM(z) = i (1 + conj(kappa) s(z)) / (1 - conj(kappa) s(z))`.
    /// Its range is confined to the disk `range_disk(kappa)`.
    pub fn dissipative_m(&self, z: Complex64) -> Result<Complex64> {
        let s = self.evaluator().livsic_s(z)?;
        let ks = self.kappa.conj() * s;
        // |conj(kappa) s| < 1, so the denominator cannot vanish
        Ok(I * (1.0 + ks) / (1.0 - ks))
    }

    /// Residual of the linear transformation relating `S` and `calM`:
    /// `conj(kappa) S(z) = ((|kappa|^2 - 1)/(2i)) calM(z) + (|kappa|^2 + 1)/2`,
    /// with each side computed through its own evaluation path.
    pub fn linear_relation_residual(&self, z: Complex64) -> Result<f64> {
        let k2 = self.kappa.norm_sqr();
        let lhs = self.kappa.conj() * self.characteristic(z)?;
        let rhs = Complex64::new(k2 - 1.0, 0.0) / (2.0 * I) * self.dissipative_m(z)?
            + Complex64::new((k2 + 1.0) / 2.0, 0.0);
        Ok((lhs - rhs).norm())
    }
}

/// `S = (s - kappa)/(conj(kappa) s - 1)`. This Moebius map is an involution:
/// applying it twice with the same `kappa` returns `s` exactly.
pub(crate) fn mobius_char(s: Complex64, kappa: Complex64) -> Complex64 {
    (s - kappa) / (kappa.conj() * s - 1.0)
}

/// The disk containing the range of `calM`: center `i (1+|kappa|^2)/(1-|kappa|^2)`,
/// radius `2|kappa|/(1-|kappa|^2)`. Degenerates to `{i}` at `kappa = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeDisk {
    pub center: Complex64,
    pub radius: f64,
}

impl RangeDisk {
    pub fn contains(&self, w: Complex64, slack: f64) -> bool {
        (w - self.center).norm() <= self.radius + slack
    }

    /// Bounds `(1-|kappa|)/(1+|kappa|) <= Im calM <= (1+|kappa|)/(1-|kappa|)`
    /// implied by the disk.
    pub fn imaginary_bounds(&self) -> (f64, f64) {
        (self.center.im - self.radius, self.center.im + self.radius)
    }
}

pub fn range_disk(kappa: Complex64) -> Result<RangeDisk> {
    let k = kappa.norm();
    if k >= 1.0 {
        return Err(Error::KappaNotContractive { modulus: k });
    }
    let denom = 1.0 - k * k;
    Ok(RangeDisk {
        center: Complex64::new(0.0, (1.0 + k * k) / denom),
        radius: 2.0 * k / denom,
    })
}

// ---------------------------------------------------------------------------
// invariant recovery
// ---------------------------------------------------------------------------

/// Per-grid-point record produced while validating a recovery; `m` is absent
/// where the recovered Weyl-Titchmarsh function has a pole (`s(z) = 1`).
#[derive(Clone, Copy, Debug)]
pub struct RecoveryPoint {
    pub z: Complex64,
    pub s: Complex64,
    pub m: Option<Complex64>,
}

/// The von Neumann parameter and the function calculus recovered from a
/// characteristic-function evaluator alone: `kappa = S(i)`,
/// `s = (S - kappa)/(conj(kappa) S - 1)`, `M = (1/i)(s+1)/(s-1)` with
/// Schwarz reflection below the axis.
pub struct RecoveredInvariants<F>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    characteristic: F,
    kappa: Complex64,
    pub diagnostics: Vec<RecoveryPoint>,
}

impl<F> RecoveredInvariants<F>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn livsic_s(&self, z: Complex64) -> Result<Complex64> {
        if z.im <= 0.0 {
            return Err(Error::NotUpperHalfPlane { z });
        }
        let big_s = (self.characteristic)(z)?;
        Ok(mobius_char(big_s, self.kappa))
    }

    pub fn weyl_m(&self, z: Complex64) -> Result<Complex64> {
        if z.im < 0.0 {
            return Ok(self.weyl_m(z.conj())?.conj());
        }
        if z.im == 0.0 {
            return Err(Error::RequiresNonreal { z });
        }
        let s = self.livsic_s(z)?;
        m_from_s(s).ok_or(Error::RecoveredPole { z })
    }
}

fn m_from_s(s: Complex64) -> Option<Complex64> {
    let denom = s - 1.0;
    if denom.norm() < 1e-14 {
        return None;
    }
    Some((s + 1.0) / denom / I)
}

/// Recover `(kappa, s, M)` from a characteristic-function evaluator,
/// validating it on the given grid. `|S(i)| >= 1` is fatal (no dissipative
/// triple has such a characteristic function); a pole of the recovered `M` at
/// a grid point is recorded per-point, not fatal.
pub fn recover_invariants<F>(
    characteristic: F,
    grid: &[Complex64],
) -> Result<RecoveredInvariants<F>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let kappa = characteristic(I)?;
    if kappa.norm() >= 1.0 {
        return Err(Error::InvalidCharacteristicAtI {
            modulus: kappa.norm(),
        });
    }
    let mut diagnostics = Vec::with_capacity(grid.len());
    for &z in grid {
        if z.im <= 0.0 {
            return Err(Error::NotUpperHalfPlane { z });
        }
        let s = mobius_char(characteristic(z)?, kappa);
        diagnostics.push(RecoveryPoint {
            z,
            s,
            m: m_from_s(s),
        });
    }
    Ok(RecoveredInvariants {
        characteristic,
        kappa,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// equivalence
// ---------------------------------------------------------------------------

/// Outcome of a grid comparison of two characteristic functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Equivalence {
    Equivalent,
    Distinct { max_deviation: f64, at: Complex64 },
}

/// Grid-pointwise coincidence of characteristic functions. Coincidence of
/// `S` is a complete unitary invariant of prime triples, so agreement on the
/// grid is the strongest conclusion a numerical check can report.
pub fn equivalence_check(
    a: &DissipativeTriple,
    b: &DissipativeTriple,
    grid: &[Complex64],
    tol: f64,
) -> Result<Equivalence> {
    if grid.is_empty() {
        return Err(Error::InvalidRegion("equivalence grid is empty".into()));
    }
    let mut max_dev = 0.0;
    let mut arg_max = grid[0];
    for &z in grid {
        if z.im <= 0.0 {
            return Err(Error::NotUpperHalfPlane { z });
        }
        let dev = (a.characteristic(z)? - b.characteristic(z)?).norm();
        if dev > max_dev {
            max_dev = dev;
            arg_max = z;
        }
    }
    if max_dev <= tol {
        Ok(Equivalence::Equivalent)
    } else {
        Ok(Equivalence::Distinct {
            max_deviation: max_dev,
            at: arg_max,
        })
    }
}

/// Parse a triple from `{ "measure": <measure spec>, "kappa": {"re": r, "im": r} }`.
pub fn load_triple(json: &str, tol: Tolerances) -> Result<DissipativeTriple> {
    #[derive(Deserialize)]
    struct TripleSpec {
        measure: serde_json::Value,
        #[serde(with = "crate::cjson")]
        kappa: Complex64,
    }
    let spec: TripleSpec = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let measure = crate::measure::load_measure(&spec.measure.to_string(), tol)?;
    DissipativeTriple::new(measure, spec.kappa)
}
