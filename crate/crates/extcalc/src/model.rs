//! The multiplication-operator model on `L^2(R; dmu)` for finite atomic
//! measures: vectors are finite lists of values on the atoms, so every
//! operator action below is an exact finite computation.
//!
//! The symmetric restriction acts on zero-mean vectors; the dissipative
//! extension acts on `Dom = {zero mean} + span{g_+ - kappa g_-}` where
//! `g_{\pm}(lambda) = 1/(lambda \mp i)`. On a decomposition
//! `f = f_0 + K (g_+ - kappa g_-)` the extension acts pointwise as
//! `lambda f(lambda) - K (1 - kappa)`: plain multiplication is wrong on the
//! deficiency span, where the adjoint sends `g_{\pm}` to `\pm i g_{\pm}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Atom, Measure};
use crate::triple::DissipativeTriple;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An element of `L^2(R; dmu)` over a finite atomic measure: one value per
/// atom, in the measure's atom order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelVector {
    #[serde(with = "crate::cjson::vec")]
    pub values: Vec<Complex64>,
}

impl ModelVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        ModelVector { values }
    }

    pub fn zeros(len: usize) -> Self {
        ModelVector {
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn atoms_for<'a>(mu: &'a Measure, f: &ModelVector) -> Result<&'a [Atom]> {
    let atoms = mu.as_finite_atomic()?;
    if atoms.len() != f.len() {
        return Err(Error::VectorLengthMismatch {
            got: f.len(),
            expected: atoms.len(),
        });
    }
    Ok(atoms)
}

/// `||f||^2 = sum w_k |f(lambda_k)|^2`, square-rooted.
pub fn vector_norm(mu: &Measure, f: &ModelVector) -> Result<f64> {
    let atoms = atoms_for(mu, f)?;
    Ok(atoms
        .iter()
        .zip(&f.values)
        .map(|(a, v)| a.weight * v.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `(f, g) = sum w_k f(lambda_k) conj(g(lambda_k))`.
pub fn inner_product(mu: &Measure, f: &ModelVector, g: &ModelVector) -> Result<Complex64> {
    let atoms = atoms_for(mu, f)?;
    if g.len() != f.len() {
        return Err(Error::VectorLengthMismatch {
            got: g.len(),
            expected: f.len(),
        });
    }
    Ok(atoms
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(a, (x, y))| a.weight * x * y.conj())
        .sum())
}

/// The mean functional `l(f) = sum w_k f(lambda_k)` whose kernel is the
/// domain of the symmetric restriction.
pub fn mean_functional(mu: &Measure, f: &ModelVector) -> Result<Complex64> {
    let atoms = atoms_for(mu, f)?;
    Ok(atoms
        .iter()
        .zip(&f.values)
        .map(|(a, v)| a.weight * v)
        .sum())
}

/// The deficiency element `g_z(lambda) = 1/(lambda - z)` as a model vector.
pub fn deficiency_element(mu: &Measure, z: Complex64) -> Result<ModelVector> {
    let atoms = mu.as_finite_atomic()?;
    if z.im == 0.0 && atoms.iter().any(|a| a.location == z.re) {
        return Err(Error::PoleOnSupport { z });
    }
    Ok(ModelVector::new(
        atoms.iter().map(|a| 1.0 / (a.location - z)).collect(),
    ))
}

/// Membership verdict for the symmetric restriction's domain, with the
/// defect value `|l(f)|`. (Square-integrability of `lambda f` is automatic
/// over a finite atomic measure.)
#[derive(Clone, Copy, Debug)]
pub struct DomainMembership {
    pub in_domain: bool,
    pub defect: f64,
}

pub fn in_symmetric_domain(mu: &Measure, f: &ModelVector, tol: f64) -> Result<DomainMembership> {
    let defect = mean_functional(mu, f)?.norm();
    Ok(DomainMembership {
        in_domain: defect <= tol,
        defect,
    })
}

/// `f = f_0 + K (g_+ - kappa g_-)` with `l(f_0) = 0`.
#[derive(Clone, Debug)]
pub struct DomainDecomposition {
    pub zero_mean_part: ModelVector,
    pub coefficient: Complex64,
    pub residual: f64,
}

/// Relative scale for domain-membership tolerances: `||f|| * max(1, |lambda|)`.
fn membership_scale(mu: &Measure, f: &ModelVector) -> Result<f64> {
    let atoms = mu.as_finite_atomic()?;
    let lam_max = atoms.iter().map(|a| a.location.abs()).fold(1.0, f64::max);
    Ok(vector_norm(mu, f)?.max(f64::MIN_POSITIVE) * lam_max)
}

const MEMBERSHIP_RTOL: f64 = 1e-10;

pub(crate) fn deficiency_combination(
    mu: &Measure,
    kappa: Complex64,
) -> Result<(ModelVector, Complex64)> {
    let g_plus = deficiency_element(mu, I)?;
    let g_minus = deficiency_element(mu, -I)?;
    let combo = ModelVector::new(
        g_plus
            .values
            .iter()
            .zip(&g_minus.values)
            .map(|(p, m)| p - kappa * m)
            .collect(),
    );
    let mean = mean_functional(mu, &combo)?;
    Ok((combo, mean))
}

pub(crate) fn decompose_with_kappa(
    mu: &Measure,
    kappa: Complex64,
    f: &ModelVector,
) -> Result<DomainDecomposition> {
    let atoms = atoms_for(mu, f)?;
    let (combo, combo_mean) = deficiency_combination(mu, kappa)?;
    let scale = membership_scale(mu, f)?;
    if combo_mean.norm() < 1e-14 * combo.values.iter().map(|v| v.norm()).fold(0.0, f64::max) {
        // the deficiency combination itself has zero mean: on this surrogate
        // the decomposition is not direct
        return Err(Error::DegenerateDecomposition);
    }
    let coefficient = mean_functional(mu, f)? / combo_mean;
    let zero_mean_part = ModelVector::new(
        f.values
            .iter()
            .zip(&combo.values)
            .map(|(v, c)| v - coefficient * c)
            .collect(),
    );
    let residual = mean_functional(mu, &zero_mean_part)?.norm();
    debug_assert_eq!(zero_mean_part.len(), atoms.len());
    let _ = atoms;
    Ok(DomainDecomposition {
        zero_mean_part,
        coefficient,
        residual: residual / scale.max(f64::MIN_POSITIVE),
    })
}

/// Split `f` into its zero-mean part and the deficiency-span component of
/// the dissipative extension's domain.
pub fn decompose_dissipative_domain(
    t: &DissipativeTriple,
    f: &ModelVector,
) -> Result<DomainDecomposition> {
    decompose_with_kappa(t.measure(), t.kappa(), f)
}

pub(crate) fn apply_with_kappa(
    mu: &Measure,
    kappa: Complex64,
    f: &ModelVector,
) -> Result<ModelVector> {
    let atoms = atoms_for(mu, f)?;
    let decomposition = decompose_with_kappa(mu, kappa, f)?;
    if decomposition.residual > MEMBERSHIP_RTOL {
        return Err(Error::NotInDomain {
            residual: decomposition.residual,
        });
    }
    let shift = decomposition.coefficient * (1.0 - kappa);
    Ok(ModelVector::new(
        atoms
            .iter()
            .zip(&f.values)
            .map(|(a, v)| a.location * v - shift)
            .collect(),
    ))
}

/// Apply the dissipative extension: `lambda f(lambda) - K (1 - kappa)` where
/// `K` is the deficiency-span coefficient of `f`.
pub fn apply_dissipative(t: &DissipativeTriple, f: &ModelVector) -> Result<ModelVector> {
    apply_with_kappa(t.measure(), t.kappa(), f)
}

/// Relative residual `||B f - z0 f|| / ||f||` for the candidate eigenfunction
/// `f = g_{z0}`. Vanishes exactly when the characteristic function of the
/// triple vanishes at `z0`.
pub fn eigenfunction_residual(t: &DissipativeTriple, z0: Complex64) -> Result<f64> {
    if z0.im <= 0.0 {
        return Err(Error::NotUpperHalfPlane { z: z0 });
    }
    let mu = t.measure();
    let f = deficiency_element(mu, z0)?;
    let image = apply_dissipative(t, &f)?;
    let diff = ModelVector::new(
        image
            .values
            .iter()
            .zip(&f.values)
            .map(|(b, v)| b - z0 * v)
            .collect(),
    );
    Ok(vector_norm(mu, &diff)? / vector_norm(mu, &f)?)
}

/// Parse a model vector from `{ "values": [{"re": r, "im": r}, ...] }`.
pub fn load_vector(json: &str) -> Result<ModelVector> {
    serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Tolerances;
    use crate::resolvent_inner_product;

    fn two_atoms() -> Measure {
        Measure::from_parts(
            vec![
                Atom { location: -1.0, weight: 1.0 },
                Atom { location: 1.0, weight: 1.0 },
            ],
            Vec::new(),
            Vec::new(),
            false,
            Tolerances::default(),
        )
        .unwrap()
    }

    fn third_triple() -> DissipativeTriple {
        DissipativeTriple::new(two_atoms(), Complex64::new(1.0 / 3.0, 0.0)).unwrap()
    }

    #[test]
    fn deficiency_element_values_and_norm() {
        let mu = two_atoms();
        let z = Complex64::new(0.0, 2.0);
        let g = deficiency_element(&mu, z).unwrap();
        assert!((g.values[0] - Complex64::new(-0.2, 0.4)).norm() < 1e-15);
        assert!((g.values[1] - Complex64::new(0.2, 0.4)).norm() < 1e-15);

        // ||g_z||^2 equals the resolvent inner product at (z, z)
        let n2 = vector_norm(&mu, &g).unwrap().powi(2);
        let ip = resolvent_inner_product(&mu, z, z).unwrap();
        assert!((n2 - 0.4).abs() < 1e-15);
        assert!((n2 - ip.re).abs() < 1e-15);

        assert!(deficiency_element(&mu, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn symmetric_domain_membership() {
        let mu = two_atoms();
        let antisym = ModelVector::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]);
        let m = in_symmetric_domain(&mu, &antisym, 1e-12).unwrap();
        assert!(m.in_domain);
        assert_eq!(m.defect, 0.0);

        let sym = ModelVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let m = in_symmetric_domain(&mu, &sym, 1e-12).unwrap();
        assert!(!m.in_domain);
        assert_eq!(m.defect, 2.0);

        // g_+ - g_- = 2i/(1+lambda^2) has values (i, i): mean 2i, so it sits
        // outside the symmetric domain even though it belongs to the
        // reference extension's domain
        let g_plus = deficiency_element(&mu, I).unwrap();
        let g_minus = deficiency_element(&mu, -I).unwrap();
        let gap = ModelVector::new(
            g_plus
                .values
                .iter()
                .zip(&g_minus.values)
                .map(|(p, m)| p - m)
                .collect(),
        );
        assert!((gap.values[0] - I).norm() < 1e-15);
        assert!((gap.values[1] - I).norm() < 1e-15);
        let m = in_symmetric_domain(&mu, &gap, 1e-12).unwrap();
        assert!(!m.in_domain);
        assert!((m.defect - 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_deficiency_difference_is_cauchy_weight() {
        // (1/2i)(g_+ - g_-)(lambda) = 1/(1 + lambda^2) pointwise
        let mu = Measure::normalized_atoms(&[(0.4, 1.0), (-2.0, 2.0), (5.5, 0.3)]).unwrap();
        let g_plus = deficiency_element(&mu, I).unwrap();
        let g_minus = deficiency_element(&mu, -I).unwrap();
        for (atom, (p, m)) in mu
            .atoms()
            .iter()
            .zip(g_plus.values.iter().zip(&g_minus.values))
        {
            let lhs = (p - m) / (2.0 * I);
            let rhs = 1.0 / (1.0 + atom.location * atom.location);
            assert!((lhs - rhs).norm() < 1e-16 * 4.0);
        }
    }

    #[test]
    fn decomposition_cases() {
        let t = third_triple();
        let mu = t.measure();
        let (combo, _) = deficiency_combination(mu, t.kappa()).unwrap();

        let d = decompose_dissipative_domain(&t, &combo).unwrap();
        assert!((d.coefficient - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(d.zero_mean_part.values.iter().all(|v| v.norm() < 1e-15));

        let zero_mean = ModelVector::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]);
        let d = decompose_dissipative_domain(&t, &zero_mean).unwrap();
        assert_eq!(d.coefficient, Complex64::new(0.0, 0.0));
        assert_eq!(d.zero_mean_part, zero_mean);

        // fixture: f = (1, 0) has mean 1; the combination has mean 4i/3, so
        // K = 3/(4i) = -3i/4
        let f = ModelVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let d = decompose_dissipative_domain(&t, &f).unwrap();
        assert!((d.coefficient - Complex64::new(0.0, -0.75)).norm() < 1e-15);
        assert!(d.residual < 1e-15);
    }

    #[test]
    fn degenerate_combination_reported() {
        // kappa = -1 makes g_+ + g_- = 2 lambda/(1+lambda^2), whose mean over
        // the symmetric two-atom measure vanishes
        let mu = two_atoms();
        let f = ModelVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let err = decompose_with_kappa(&mu, Complex64::new(-1.0, 0.0), &f).unwrap_err();
        assert!(matches!(err, Error::DegenerateDecomposition));
    }

    #[test]
    fn action_on_deficiency_combination() {
        // B(g_+ - kappa g_-) = i(g_+ + kappa g_-)
        let t = third_triple();
        let mu = t.measure();
        let kappa = t.kappa();
        let (combo, _) = deficiency_combination(mu, kappa).unwrap();
        let image = apply_dissipative(&t, &combo).unwrap();
        let g_plus = deficiency_element(mu, I).unwrap();
        let g_minus = deficiency_element(mu, -I).unwrap();
        for ((img, p), m) in image
            .values
            .iter()
            .zip(&g_plus.values)
            .zip(&g_minus.values)
        {
            let want = I * (p + kappa * m);
            assert!((img - want).norm() < 1e-14);
        }
    }

    #[test]
    fn action_on_zero_mean_is_multiplication() {
        let t = third_triple();
        let f = ModelVector::new(vec![
            Complex64::new(2.0, 1.0),
            Complex64::new(-2.0, -1.0),
        ]);
        let image = apply_dissipative(&t, &f).unwrap();
        assert!((image.values[0] - (-1.0) * f.values[0]).norm() < 1e-14);
        assert!((image.values[1] - 1.0 * f.values[1]).norm() < 1e-14);
    }

    #[test]
    fn eigenfunction_residuals() {
        let t = third_triple();
        // s(z) = kappa at z = (+-sqrt(3) + i)/2
        let root = Complex64::new(3.0f64.sqrt() / 2.0, 0.5);
        assert!(eigenfunction_residual(&t, root).unwrap() < 1e-10);
        let root = Complex64::new(-(3.0f64.sqrt()) / 2.0, 0.5);
        assert!(eigenfunction_residual(&t, root).unwrap() < 1e-10);

        // away from the roots the residual is order one (exact value 3/sqrt(5)
        // at z = 2i)
        let r = eigenfunction_residual(&t, Complex64::new(0.0, 2.0)).unwrap();
        assert!((r - 3.0 / 5.0f64.sqrt()).abs() < 1e-12);
        assert!(r > 0.1);

        // z = i is an eigenvalue only when kappa = 0
        let r = eigenfunction_residual(&t, I).unwrap();
        assert!(r > 0.1);
        let t0 = DissipativeTriple::new(two_atoms(), Complex64::new(0.0, 0.0)).unwrap();
        assert!(eigenfunction_residual(&t0, I).unwrap() < 1e-14);
    }

    #[test]
    fn deficiency_identities() {
        // ((B +- i) f, g_+-) = l(f) for arbitrary f
        let mu = Measure::normalized_atoms(&[(0.5, 1.0), (-1.5, 0.7), (3.0, 0.4)]).unwrap();
        let f = ModelVector::new(vec![
            Complex64::new(0.3, -1.0),
            Complex64::new(2.0, 0.4),
            Complex64::new(-0.2, 0.9),
        ]);
        let ell = mean_functional(&mu, &f).unwrap();
        for sign in [1.0, -1.0] {
            let g = deficiency_element(&mu, Complex64::new(0.0, sign)).unwrap();
            let shifted = ModelVector::new(
                mu.atoms()
                    .iter()
                    .zip(&f.values)
                    .map(|(a, v)| (a.location + sign * I) * v)
                    .collect(),
            );
            let ip = inner_product(&mu, &shifted, &g).unwrap();
            assert!((ip - ell).norm() < 1e-14);
        }
    }

    #[test]
    fn vector_json_format() {
        let v = load_vector(r#"{"values": [{"re": 0.0, "im": 0.0}, {"re": 1.0, "im": -2.0}]}"#)
            .unwrap();
        assert_eq!(v.values[1], Complex64::new(1.0, -2.0));
    }
}
