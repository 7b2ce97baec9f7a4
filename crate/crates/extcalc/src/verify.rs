//! Seeded verification suites exercising the identities that tie the
//! function families together. Each suite reports its worst residual against
//! a pinned tolerance; all sampling is deterministic in the seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::herglotz::{boundary_density, default_epsilon_schedule, HerglotzEvaluator};
use crate::measure::Measure;
use crate::model::{vector_norm, deficiency_element, ModelVector};
use crate::resolvent::{apply_resolvent_with, deficiency_norm, dissipative_m_via_resolvent};
use crate::triple::{range_disk, DissipativeTriple};
use crate::quad;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Cayley,
    DissipativeWt,
    LinearRelation,
    Resolvent,
    Disk,
    Density,
    Norms,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Cayley => "cayley",
            Suite::DissipativeWt => "dissipative_wt",
            Suite::LinearRelation => "linear_relation",
            Suite::Resolvent => "resolvent",
            Suite::Disk => "disk",
            Suite::Density => "density",
            Suite::Norms => "norms",
        }
    }

    pub fn all() -> [Suite; 7] {
        [
            Suite::Cayley,
            Suite::DissipativeWt,
            Suite::LinearRelation,
            Suite::Resolvent,
            Suite::Disk,
            Suite::Density,
            Suite::Norms,
        ]
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cayley" => Ok(Suite::Cayley),
            "dissipative_wt" => Ok(Suite::DissipativeWt),
            "linear_relation" => Ok(Suite::LinearRelation),
            "resolvent" => Ok(Suite::Resolvent),
            "disk" => Ok(Suite::Disk),
            "density" => Ok(Suite::Density),
            "norms" => Ok(Suite::Norms),
            other => Err(Error::Parse(format!("unknown suite {other:?}"))),
        }
    }
}

/// Fixture to run a suite against; `Default` draws seeded random fixtures.
pub enum SuiteInput {
    Default,
    Measure(Measure),
    Triple(DissipativeTriple),
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseRecord {
    pub label: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub surrogate: bool,
    pub records: Vec<CaseRecord>,
}

fn finish(suite: Suite, tolerance: f64, surrogate: bool, records: Vec<CaseRecord>) -> VerifyReport {
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    VerifyReport {
        suite: suite.name().to_string(),
        cases: records.len(),
        max_residual,
        tolerance,
        passed: max_residual <= tolerance,
        surrogate,
        records,
    }
}

/// Random purely atomic normalized measure with up to `max_atoms` atoms.
pub fn random_atomic_measure<R: Rng>(rng: &mut R, max_atoms: usize) -> Measure {
    loop {
        let n = rng.random_range(1..=max_atoms);
        let raw: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-5.0..5.0), rng.random_range(0.05..1.0)))
            .collect();
        if let Ok(mu) = Measure::normalized_atoms(&raw) {
            return mu;
        }
    }
}

/// Random von Neumann parameter with `|kappa| <= 0.9`.
pub fn random_kappa<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(
        rng.random_range(0.0..0.9),
        rng.random_range(0.0..std::f64::consts::TAU),
    )
}

/// Random point of the upper half-plane within moderate bounds.
pub fn random_upper<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-8.0..8.0), rng.random_range(0.1..5.0))
}

pub fn run_suite(
    suite: Suite,
    input: SuiteInput,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match suite {
        Suite::Cayley => cayley(input, samples, &mut rng),
        Suite::DissipativeWt => dissipative_wt(input, samples, &mut rng),
        Suite::LinearRelation => linear_relation(input, samples, &mut rng),
        Suite::Resolvent => resolvent_suite(input, samples, &mut rng),
        Suite::Disk => disk(input, samples, &mut rng),
        Suite::Density => density(input, samples),
        Suite::Norms => norms(input, samples, &mut rng),
    }
}

/// `|s - s_by_ratio|` over random points: the Cayley identity tying the
/// Weyl-Titchmarsh route to the inner-product route.
fn cayley(input: SuiteInput, samples: usize, rng: &mut ChaCha12Rng) -> Result<VerifyReport> {
    let measures: Vec<Measure> = match input {
        SuiteInput::Measure(mu) => vec![mu],
        SuiteInput::Triple(t) => vec![t.measure().clone()],
        SuiteInput::Default => (0..20).map(|_| random_atomic_measure(rng, 50)).collect(),
    };
    let surrogate = measures.iter().any(Measure::is_surrogate);
    let mut records = Vec::new();
    for (mi, mu) in measures.iter().enumerate() {
        let h = HerglotzEvaluator::new(mu);
        for k in 0..samples {
            let z = random_upper(rng);
            let a = h.livsic_s(z)?;
            let b = h.livsic_s_via_ratio(z)?;
            records.push(CaseRecord {
                label: format!("measure {mi} point {k} z {z}"),
                residual: (a - b).norm(),
            });
        }
    }
    Ok(finish(Suite::Cayley, 1e-8, surrogate, records))
}

fn default_triples(rng: &mut ChaCha12Rng, count: usize, max_atoms: usize) -> Vec<DissipativeTriple> {
    (0..count)
        .map(|_| {
            let mu = random_atomic_measure(rng, max_atoms);
            let kappa = random_kappa(rng);
            DissipativeTriple::new(mu, kappa).expect("|kappa| < 1 by construction")
        })
        .collect()
}

/// Livsic route vs adjoint-resolvent route to the dissipative
/// Weyl-Titchmarsh function.
fn dissipative_wt(
    input: SuiteInput,
    samples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<VerifyReport> {
    let triples = match input {
        SuiteInput::Triple(t) => vec![t],
        SuiteInput::Measure(mu) => {
            let kappa = random_kappa(rng);
            vec![DissipativeTriple::new(mu, kappa)?]
        }
        SuiteInput::Default => default_triples(rng, 10, 50),
    };
    let surrogate = triples.iter().any(|t| t.measure().is_surrogate());
    let mut records = Vec::new();
    for (ti, t) in triples.iter().enumerate() {
        for k in 0..samples {
            let z = random_upper(rng);
            let a = t.dissipative_m(z)?;
            let b = dissipative_m_via_resolvent(t, z)?;
            records.push(CaseRecord {
                label: format!("triple {ti} point {k} z {z}"),
                residual: (a - b).norm(),
            });
        }
    }
    Ok(finish(Suite::DissipativeWt, 1e-9, surrogate, records))
}

/// Residual of the linear transformation between the characteristic function
/// and the dissipative Weyl-Titchmarsh function.
fn linear_relation(
    input: SuiteInput,
    samples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<VerifyReport> {
    let triples = match input {
        SuiteInput::Triple(t) => vec![t],
        SuiteInput::Measure(mu) => {
            let kappa = random_kappa(rng);
            vec![DissipativeTriple::new(mu, kappa)?]
        }
        SuiteInput::Default => default_triples(rng, 10, 50),
    };
    let surrogate = triples.iter().any(|t| t.measure().is_surrogate());
    let mut records = Vec::new();
    for (ti, t) in triples.iter().enumerate() {
        for k in 0..samples {
            let z = random_upper(rng);
            records.push(CaseRecord {
                label: format!("triple {ti} point {k} z {z}"),
                residual: t.linear_relation_residual(z)?,
            });
        }
    }
    Ok(finish(Suite::LinearRelation, 1e-10, surrogate, records))
}

/// Defining identity of the resolvent: `(B - z)(R(z) h) = h` and membership
/// of `R(z) h` in the extension domain.
fn resolvent_suite(
    input: SuiteInput,
    samples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<VerifyReport> {
    let triples = match input {
        SuiteInput::Triple(t) => vec![t],
        SuiteInput::Measure(mu) => {
            let kappa = random_kappa(rng);
            vec![DissipativeTriple::new(mu, kappa)?]
        }
        SuiteInput::Default => default_triples(rng, 6, 200),
    };
    let surrogate = triples.iter().any(|t| t.measure().is_surrogate());
    let mut records = Vec::new();
    for (ti, t) in triples.iter().enumerate() {
        let mu = t.measure();
        let atoms = mu.as_finite_atomic()?;
        let n = atoms.len();
        for k in 0..samples {
            let h = ModelVector::new(
                (0..n)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            );
            let hnorm = vector_norm(mu, &h)?.max(f64::MIN_POSITIVE);
            // both half-planes are resolvent set (upper: away from the at
            // most finitely many eigenvalues, resampled on a hit)
            let z = loop {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let cand = Complex64::new(
                    rng.random_range(-6.0..6.0),
                    sign * rng.random_range(0.3..3.0),
                );
                match apply_resolvent_with(mu, t.kappa(), cand, &h) {
                    Ok(_) => break cand,
                    Err(Error::Eigenvalue { .. }) => continue,
                    Err(e) => return Err(e),
                }
            };
            let u = apply_resolvent_with(mu, t.kappa(), z, &h)?;
            let decomposition = crate::model::decompose_dissipative_domain(t, &u)?;
            let image = crate::model::apply_dissipative(t, &u)?;
            let mut dev2 = 0.0;
            for ((atom, (img, uv)), hv) in atoms
                .iter()
                .zip(image.values.iter().zip(&u.values))
                .zip(&h.values)
            {
                dev2 += atom.weight * (img - z * uv - hv).norm_sqr();
            }
            let identity_residual = dev2.sqrt() / hnorm;
            records.push(CaseRecord {
                label: format!("triple {ti} case {k} z {z} identity"),
                residual: identity_residual,
            });
            records.push(CaseRecord {
                label: format!("triple {ti} case {k} z {z} decomposition"),
                residual: decomposition.residual,
            });
        }
    }
    Ok(finish(Suite::Resolvent, 1e-9, surrogate, records))
}

/// Containment of the dissipative Weyl-Titchmarsh values in the predicted
/// disk, plus the implied bounds on the imaginary part.
fn disk(input: SuiteInput, samples: usize, rng: &mut ChaCha12Rng) -> Result<VerifyReport> {
    let triples = match input {
        SuiteInput::Triple(t) => vec![t],
        SuiteInput::Measure(mu) => {
            let kappas = [
                Complex64::new(0.1, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::from_polar(0.9, std::f64::consts::PI / 3.0),
            ];
            kappas
                .into_iter()
                .map(|k| DissipativeTriple::new(mu.clone(), k))
                .collect::<Result<_>>()?
        }
        SuiteInput::Default => {
            let kappas = [
                Complex64::new(0.1, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::from_polar(0.9, std::f64::consts::PI / 3.0),
            ];
            kappas
                .into_iter()
                .map(|k| {
                    let mu = random_atomic_measure(rng, 30);
                    DissipativeTriple::new(mu, k)
                })
                .collect::<Result<_>>()?
        }
    };
    let surrogate = triples.iter().any(|t| t.measure().is_surrogate());
    let mut records = Vec::new();
    for (ti, t) in triples.iter().enumerate() {
        let disk = range_disk(t.kappa())?;
        let k = t.kappa().norm();
        let (lo, hi) = ((1.0 - k) / (1.0 + k), (1.0 + k) / (1.0 - k));
        for c in 0..samples {
            let z = random_upper(rng);
            let m = t.dissipative_m(z)?;
            let outside = ((m - disk.center).norm() - disk.radius).max(0.0);
            let below = (lo - m.im).max(0.0);
            let above = (m.im - hi).max(0.0);
            records.push(CaseRecord {
                label: format!("kappa {ti} point {c} z {z}"),
                residual: outside.max(below).max(above),
            });
        }
    }
    Ok(finish(Suite::Disk, 1e-10, surrogate, records))
}

/// Epsilon schedule for Stieltjes inversion at `lambda0`, floored so the
/// Poisson feature at `lambda0 + i eps` stays resolvable by quadrature in
/// the compactified variable (feature width `eps/(1+lambda0^2)`).
pub fn scaled_epsilon_schedule(lambda0: f64) -> Vec<f64> {
    let floor = 1e-12 * (1.0 + lambda0 * lambda0);
    let schedule: Vec<f64> = default_epsilon_schedule()
        .into_iter()
        .filter(|&e| e >= floor)
        .collect();
    if schedule.len() >= 3 {
        schedule
    } else {
        (0..=6).map(|k| floor * (2.0f64).powi(7 - k)).collect()
    }
}

/// Recovered boundary density of the triple's dissipative Weyl-Titchmarsh
/// function at a real point.
pub fn recovered_density(triple: &DissipativeTriple, lambda0: f64) -> Result<f64> {
    let schedule = scaled_epsilon_schedule(lambda0);
    Ok(boundary_density(|z| triple.dissipative_m(z), lambda0, &schedule)?.value)
}

/// `int f(lambda)/(1+lambda^2) dlambda` of the recovered density: adaptive
/// quadrature of `f(tan u)` over a central window plus midpoint-rule tails,
/// which keeps the probed real points within the numerically usable range.
pub fn recovered_density_normalization(triple: &DissipativeTriple) -> Result<f64> {
    let u_max = (50.0f64).atan();
    let central = quad::adaptive(
        &|u: f64| Complex64::new(recovered_density(triple, u.tan()).unwrap_or(f64::NAN), 0.0),
        -u_max,
        u_max,
        1e-8,
        1e-9,
    );
    if !central.value.re.is_finite() || central.error > 1e-7 {
        return Err(Error::QuadratureNonConvergence {
            achieved: central.error,
            requested: 1e-7,
        });
    }
    let mut total = central.value.re;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let n_tail = 32;
    let h = (half_pi - u_max) / n_tail as f64;
    for side in [-1.0, 1.0] {
        for j in 0..n_tail {
            let u = side * (u_max + (j as f64 + 0.5) * h);
            total += h * recovered_density(triple, u.tan())?;
        }
    }
    Ok(total)
}

/// Boundary density of the dissipative Weyl-Titchmarsh function: pointwise
/// containment in the predicted band and the normalization of the recovered
/// density.
fn density(input: SuiteInput, samples: usize) -> Result<VerifyReport> {
    let triple = match input {
        SuiteInput::Triple(t) => t,
        SuiteInput::Measure(mu) => DissipativeTriple::new(mu, Complex64::new(0.5, 0.0))?,
        SuiteInput::Default => DissipativeTriple::new(
            Measure::lebesgue_over_pi(),
            Complex64::new(0.5, 0.0),
        )?,
    };
    let surrogate = triple.measure().is_surrogate();
    let k = triple.kappa().norm();
    let pi = std::f64::consts::PI;
    let (lo, hi) = ((1.0 - k) / (1.0 + k) / pi, (1.0 + k) / (1.0 - k) / pi);

    let mut records = Vec::new();
    let points = samples.clamp(1, 40);
    for j in 0..points {
        let lambda0 = -3.0 + 6.0 * (j as f64 + 0.5) / points as f64;
        let value = recovered_density(&triple, lambda0)?;
        let residual = (lo - value).max(value - hi).max(0.0);
        records.push(CaseRecord {
            label: format!("band lambda0 {lambda0}"),
            residual,
        });
    }

    let total = recovered_density_normalization(&triple)?;
    records.push(CaseRecord {
        label: "normalization integral".into(),
        residual: (total - 1.0).abs(),
    });

    Ok(finish(Suite::Density, 1e-6, surrogate, records))
}

/// Agreement of the deficiency-element normalization with the model-vector
/// norm, and the unit normalization at `z = i`.
fn norms(input: SuiteInput, samples: usize, rng: &mut ChaCha12Rng) -> Result<VerifyReport> {
    let measures: Vec<Measure> = match input {
        SuiteInput::Measure(mu) => vec![mu],
        SuiteInput::Triple(t) => vec![t.measure().clone()],
        SuiteInput::Default => (0..10).map(|_| random_atomic_measure(rng, 50)).collect(),
    };
    let surrogate = measures.iter().any(Measure::is_surrogate);
    let all_atomic = measures.iter().all(|m| m.as_finite_atomic().is_ok());
    let tolerance = if all_atomic { 1e-12 } else { 1e-9 };
    let mut records = Vec::new();
    for (mi, mu) in measures.iter().enumerate() {
        records.push(CaseRecord {
            label: format!("measure {mi} unit norm at i"),
            residual: (deficiency_norm(mu, I)? - 1.0).abs(),
        });
        if mu.as_finite_atomic().is_ok() {
            for k in 0..samples.max(1) {
                let z = random_upper(rng);
                let via_integral = deficiency_norm(mu, z)?;
                let via_vector = vector_norm(mu, &deficiency_element(mu, z)?)?;
                records.push(CaseRecord {
                    label: format!("measure {mi} point {k} z {z}"),
                    residual: (via_integral - via_vector).abs(),
                });
            }
        }
    }
    Ok(finish(Suite::Norms, tolerance, surrogate, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse_and_run_small() {
        for suite in Suite::all() {
            let parsed: Suite = suite.name().parse().unwrap();
            assert_eq!(parsed, suite);
        }
        assert!("bogus".parse::<Suite>().is_err());

        // small smoke runs; full-size runs live in the acceptance suite
        for suite in [Suite::Cayley, Suite::LinearRelation, Suite::Disk, Suite::Norms] {
            let report = run_suite(suite, SuiteInput::Default, 3, 11).unwrap();
            assert!(report.passed, "{} failed: {:?}", report.suite, report.max_residual);
        }
    }

    #[test]
    fn suites_are_deterministic_in_the_seed() {
        let a = run_suite(Suite::Cayley, SuiteInput::Default, 2, 42).unwrap();
        let b = run_suite(Suite::Cayley, SuiteInput::Default, 2, 42).unwrap();
        assert_eq!(a.max_residual, b.max_residual);
        assert_eq!(a.cases, b.cases);
        let c = run_suite(Suite::Cayley, SuiteInput::Default, 2, 43).unwrap();
        assert!(a.max_residual != c.max_residual || a.records[0].label != c.records[0].label);
    }

    #[test]
    fn dissipative_wt_and_resolvent_suites_pass() {
        let report = run_suite(Suite::DissipativeWt, SuiteInput::Default, 5, 3).unwrap();
        assert!(report.passed, "max residual {}", report.max_residual);
        let report = run_suite(Suite::Resolvent, SuiteInput::Default, 4, 3).unwrap();
        assert!(report.passed, "max residual {}", report.max_residual);
    }
}
