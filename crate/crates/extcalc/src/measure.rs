//! Lebesgue-Stieltjes measures built from point masses, absolutely continuous
//! pieces, and two analytic infinite atom families, together with the three
//! quadrature kernels every other module consumes:
//!
//! * the normalization integral `int dmu / (1 + lambda^2)`,
//! * the Herglotz kernel `int (1/(lambda - z) - lambda/(1 + lambda^2)) dmu`,
//! * the resolvent inner product `int dmu / ((lambda - z) conj(lambda - w))`.
//!
//! A measure is accepted only if the normalization integral equals 1 within
//! `norm_tol`. Measures with finite total mass are valid computational
//! surrogates (every identity in this crate is an exact finite-sum statement
//! for them) but are tagged so reports can carry the caveat.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOutcome};

pub const DEFAULT_NORM_TOL: f64 = 1e-9;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Accuracy targets: `norm_tol` bounds the accepted normalization defect,
/// `quad_tol` is the relative target for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub norm_tol: f64,
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm_tol: DEFAULT_NORM_TOL,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }
}

/// A point mass: `weight > 0` at a real `location`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(deserialize_with = "de_flex_f64", serialize_with = "ser_finite_f64")]
    pub location: f64,
    #[serde(deserialize_with = "de_flex_f64", serialize_with = "ser_finite_f64")]
    pub weight: f64,
}

/// Density descriptor of an absolutely continuous piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Density {
    /// Constant density `value > 0`.
    Constant { value: f64 },
    /// Ratio of two real polynomials, coefficients in ascending order.
    Rational { numerator: Vec<f64>, denominator: Vec<f64> },
    /// Piecewise-linear interpolation of `(x, y)` samples, zero outside the
    /// sampled span.
    Table { points: Vec<(f64, f64)> },
}

/// An absolutely continuous piece: a density on an interval whose endpoints
/// may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    #[serde(deserialize_with = "de_interval", serialize_with = "ser_interval")]
    pub interval: (f64, f64),
    pub density: Density,
}

/// Analytically described infinite families of atoms. Weights are fixed by
/// the family so that its normalization integral is exactly `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AtomFamily {
    /// Equal-weight atoms at `spacing * n + offset` for every integer n.
    /// Total mass is infinite; kernel sums have cotangent closed forms.
    IntegerLattice {
        spacing: f64,
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Atoms at 1/n, n >= 1, with weights proportional to 1/n^2. The support
    /// accumulates at 0; total mass is finite.
    ReciprocalCluster {
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A validated measure. Immutable after construction; all evaluations are
/// pure functions of `(Measure, arguments)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    atoms: Vec<Atom>,
    pieces: Vec<DensityPiece>,
    families: Vec<AtomFamily>,
    declared_infinite: bool,
    defect: f64,
    tol: Tolerances,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct MeasureSpec {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    pieces: Vec<DensityPiece>,
    #[serde(default)]
    families: Vec<AtomFamily>,
    #[serde(default)]
    infinite: bool,
}

impl Measure {
    /// Build a measure from its parts, validating every invariant and the
    /// normalization integral.
    pub fn from_parts(
        atoms: Vec<Atom>,
        pieces: Vec<DensityPiece>,
        families: Vec<AtomFamily>,
        declared_infinite: bool,
        tol: Tolerances,
    ) -> Result<Measure> {
        let mut mu = Measure {
            atoms,
            pieces,
            families,
            declared_infinite,
            defect: f64::NAN,
            tol,
        };
        mu.validate_parts()?;
        let defect = normalization_defect(&mu)?;
        if defect > tol.norm_tol {
            return Err(Error::NotNormalized {
                defect,
                tol: tol.norm_tol,
            });
        }
        mu.defect = defect;
        Ok(mu)
    }

    /// Purely atomic measure from `(location, raw_weight)` pairs, with the
    /// weights rescaled by a common factor so the normalization integral is
    /// exactly 1.
    pub fn normalized_atoms(raw: &[(f64, f64)]) -> Result<Measure> {
        let mut sum = 0.0;
        for &(loc, w) in raw {
            if !(w > 0.0) {
                return Err(Error::NonpositiveWeight {
                    location: loc,
                    weight: w,
                });
            }
            sum += w / (1.0 + loc * loc);
        }
        if sum <= 0.0 {
            return Err(Error::Parse("no atoms to normalize".into()));
        }
        let atoms = raw
            .iter()
            .map(|&(loc, w)| Atom {
                location: loc,
                weight: w / sum,
            })
            .collect();
        Measure::from_parts(atoms, Vec::new(), Vec::new(), false, Tolerances::default())
    }

    /// The canonical absolutely continuous member of the admissible class:
    /// density 1/pi on the whole line.
    pub fn lebesgue_over_pi() -> Measure {
        Measure::from_parts(
            Vec::new(),
            vec![DensityPiece {
                interval: (f64::NEG_INFINITY, f64::INFINITY),
                density: Density::Constant {
                    value: std::f64::consts::FRAC_1_PI,
                },
            }],
            Vec::new(),
            true,
            Tolerances::default(),
        )
        .expect("constant 1/pi density is normalized")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn families(&self) -> &[AtomFamily] {
        &self.families
    }

    /// True when the measure has finite total mass and is therefore only a
    /// computational surrogate for the infinite-measure class.
    pub fn is_surrogate(&self) -> bool {
        !self.declared_infinite
    }

    /// Normalization defect computed at construction time.
    pub fn stored_defect(&self) -> f64 {
        self.defect
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// The atom list, provided the measure is finite and purely atomic.
    /// Model-vector machinery is defined only for such measures.
    pub fn as_finite_atomic(&self) -> Result<&[Atom]> {
        if self.pieces.is_empty() && self.families.is_empty() && !self.atoms.is_empty() {
            Ok(&self.atoms)
        } else {
            Err(Error::NotAtomic)
        }
    }

    fn validate_parts(&self) -> Result<()> {
        for atom in &self.atoms {
            if !(atom.weight > 0.0) || !atom.weight.is_finite() {
                return Err(Error::NonpositiveWeight {
                    location: atom.location,
                    weight: atom.weight,
                });
            }
            if !atom.location.is_finite() {
                return Err(Error::Parse(format!(
                    "atom location must be finite, got {}",
                    atom.location
                )));
            }
        }
        let mut locs: Vec<f64> = self.atoms.iter().map(|a| a.location).collect();
        locs.sort_by(f64::total_cmp);
        for pair in locs.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateAtom(pair[0]));
            }
        }

        for piece in &self.pieces {
            validate_piece(piece)?;
        }
        let mut ivals: Vec<(f64, f64)> = self.pieces.iter().map(|p| p.interval).collect();
        ivals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for pair in ivals.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::OverlappingIntervals {
                    a0: pair[0].0,
                    b0: pair[0].1,
                    a1: pair[1].0,
                    b1: pair[1].1,
                });
            }
        }

        for family in &self.families {
            match *family {
                AtomFamily::IntegerLattice { spacing, scale, .. } => {
                    if !(spacing > 0.0) || !spacing.is_finite() {
                        return Err(Error::NonpositiveSpacing(spacing));
                    }
                    if !(scale > 0.0) {
                        return Err(Error::NonpositiveScale(scale));
                    }
                }
                AtomFamily::ReciprocalCluster { scale } => {
                    if !(scale > 0.0) {
                        return Err(Error::NonpositiveScale(scale));
                    }
                }
            }
        }

        let provably_infinite = self.has_infinite_mass();
        if self.declared_infinite && !provably_infinite {
            return Err(Error::FiniteMassDeclaredInfinite);
        }
        if !self.declared_infinite && provably_infinite {
            return Err(Error::Unsupported(
                "measure contains an infinite-mass part but is declared finite".into(),
            ));
        }
        Ok(())
    }

    fn has_infinite_mass(&self) -> bool {
        let family_infinite = self
            .families
            .iter()
            .any(|f| matches!(f, AtomFamily::IntegerLattice { .. }));
        let piece_infinite = self.pieces.iter().any(|p| {
            let unbounded = p.interval.0.is_infinite() || p.interval.1.is_infinite();
            unbounded
                && match &p.density {
                    Density::Constant { .. } => true,
                    // mass is finite only when the density decays faster than
                    // 1/lambda, i.e. denominator degree exceeds numerator
                    // degree by at least two
                    Density::Rational { numerator, denominator } => {
                        poly_degree(numerator) + 1 >= poly_degree(denominator)
                    }
                    Density::Table { .. } => false,
                }
        });
        family_infinite || piece_infinite
    }

    /// Whether a real point lies in the closed support of the measure.
    pub fn on_closed_support(&self, x: f64) -> bool {
        if self.atoms.iter().any(|a| a.location == x) {
            return true;
        }
        for piece in &self.pieces {
            for (u, v) in positive_spans(piece) {
                if x >= u && x <= v {
                    return true;
                }
            }
        }
        for family in &self.families {
            match *family {
                AtomFamily::IntegerLattice { spacing, offset, .. } => {
                    let n = ((x - offset) / spacing).round();
                    if spacing * n + offset == x {
                        return true;
                    }
                }
                AtomFamily::ReciprocalCluster { .. } => {
                    if x == 0.0 {
                        return true;
                    }
                    if x > 0.0 {
                        let n = (1.0 / x).round();
                        if n >= 1.0 && 1.0 / n == x {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Whether the punctured neighborhood `(c-eps, c) U (c, c+eps)` carries
    /// positive mass. Decided exactly from the structure of the measure.
    pub fn punctured_neighborhood_has_mass(&self, c: f64, eps: f64) -> bool {
        debug_assert!(eps > 0.0);
        if self
            .atoms
            .iter()
            .any(|a| a.location != c && (a.location - c).abs() < eps)
        {
            return true;
        }
        for piece in &self.pieces {
            for (u, v) in positive_spans(piece) {
                // overlap of (c-eps, c+eps) with [u, v], excluding the point c,
                // has positive length iff the open intervals intersect
                if open_overlaps(c - eps, c + eps, u, v) {
                    return true;
                }
            }
        }
        for family in &self.families {
            match *family {
                AtomFamily::IntegerLattice { spacing, offset, .. } => {
                    let lo = ((c - eps - offset) / spacing).floor() as i64;
                    let hi = ((c + eps - offset) / spacing).ceil() as i64;
                    for n in lo..=hi {
                        let p = spacing * n as f64 + offset;
                        if p != c && (p - c).abs() < eps {
                            return true;
                        }
                    }
                }
                AtomFamily::ReciprocalCluster { .. } => {
                    // points 1/n for n >= 1; find n with lo < 1/n < hi, 1/n != c
                    let lo = c - eps;
                    let hi = c + eps;
                    if hi <= 0.0 {
                        continue;
                    }
                    // smallest n with 1/n < hi
                    let n_start = if hi > 1.0 { 1u64 } else { (1.0 / hi).floor() as u64 + 1 };
                    if lo <= 0.0 {
                        // infinitely many candidates accumulate above lo;
                        // at most one can coincide with c
                        return true;
                    }
                    let n_end = (1.0 / lo).ceil() as u64 - 1; // largest n with 1/n > lo
                    for n in n_start..=n_end.min(n_start + 8) {
                        let p = 1.0 / n as f64;
                        if p > lo && p < hi && p != c {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Supremum of eps with mass-free punctured neighborhood of `c`
    /// (`f64::INFINITY` when no other support exists, `0.0` when the support
    /// accumulates at `c`).
    pub fn mass_free_radius(&self, c: f64) -> f64 {
        let mut sup = f64::INFINITY;
        for a in &self.atoms {
            if a.location != c {
                sup = sup.min((a.location - c).abs());
            }
        }
        for piece in &self.pieces {
            for (u, v) in positive_spans(piece) {
                if c > u && c < v {
                    return 0.0;
                }
                // distance to the closed span; a boundary point of the span is
                // an accumulation point of its mass
                let d = if c <= u { u - c } else { c - v };
                sup = sup.min(d);
            }
        }
        for family in &self.families {
            match *family {
                AtomFamily::IntegerLattice { spacing, offset, .. } => {
                    let n = ((c - offset) / spacing).round();
                    for k in -1..=1 {
                        let p = spacing * (n + k as f64) + offset;
                        if p != c {
                            sup = sup.min((p - c).abs());
                        }
                    }
                }
                AtomFamily::ReciprocalCluster { .. } => {
                    if c == 0.0 {
                        return 0.0;
                    }
                    // distance to {0} U {1/n}
                    if c < 0.0 {
                        sup = sup.min(-c);
                    } else if c > 1.0 {
                        sup = sup.min(c - 1.0);
                    } else {
                        let n = (1.0 / c).round().max(1.0);
                        for k in -1..=1 {
                            let m = n + k as f64;
                            if m >= 1.0 {
                                let p = 1.0 / m;
                                if p != c {
                                    sup = sup.min((p - c).abs());
                                }
                            }
                        }
                        sup = sup.min(c); // distance to the accumulation point 0
                    }
                }
            }
        }
        sup
    }

    fn check_off_support(&self, z: Complex64) -> Result<()> {
        if z.im == 0.0 && self.on_closed_support(z.re) {
            return Err(Error::PoleOnSupport { z });
        }
        Ok(())
    }
}

fn open_overlaps(a0: f64, b0: f64, a1: f64, b1: f64) -> bool {
    a0.max(a1) < b0.min(b1)
}

fn poly_degree(coeffs: &[f64]) -> i64 {
    coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .map(|d| d as i64)
        .unwrap_or(-1)
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Constant { value } => *value,
            Density::Rational { numerator, denominator } => {
                poly_eval(numerator, x) / poly_eval(denominator, x)
            }
            Density::Table { points } => {
                let n = points.len();
                if n == 0 || x < points[0].0 || x > points[n - 1].0 {
                    return 0.0;
                }
                let idx = points.partition_point(|p| p.0 <= x);
                if idx == 0 {
                    return points[0].1;
                }
                if idx == n {
                    return points[n - 1].1;
                }
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

fn validate_piece(piece: &DensityPiece) -> Result<()> {
    let (a, b) = piece.interval;
    if !(a < b) {
        return Err(Error::EmptyInterval { a, b });
    }
    match &piece.density {
        Density::Constant { value } => {
            if !(*value > 0.0) || !value.is_finite() {
                return Err(Error::NegativeDensity { at: a });
            }
        }
        Density::Rational { numerator, denominator } => {
            if poly_degree(denominator) < 0 {
                return Err(Error::DensityPole { at: a });
            }
            if (a.is_infinite() || b.is_infinite()) && poly_degree(numerator) > poly_degree(denominator)
            {
                return Err(Error::NonIntegrableDensity);
            }
            // Scan for sign problems and denominator roots on the interval.
            // Exact polynomial root isolation is out of scope; a dense scan in
            // the compactified variable catches the practical cases.
            let lo = a.atan();
            let hi = b.atan();
            let samples = 4096;
            let mut prev_den = f64::NAN;
            for k in 0..=samples {
                let th = lo + (hi - lo) * (k as f64 + 0.5) / (samples as f64 + 1.0);
                let x = th.tan();
                let den = poly_eval(denominator, x);
                let num = poly_eval(numerator, x);
                if den == 0.0 || (prev_den.is_finite() && den.signum() != prev_den.signum()) {
                    return Err(Error::DensityPole { at: x });
                }
                prev_den = den;
                let val = num / den;
                if val < -1e-12 || !val.is_finite() {
                    return Err(Error::NegativeDensity { at: x });
                }
            }
        }
        Density::Table { points } => {
            if points.len() < 2 {
                return Err(Error::TableTooShort);
            }
            for pair in points.windows(2) {
                if !(pair[0].0 < pair[1].0) {
                    return Err(Error::TableNotIncreasing);
                }
            }
            for &(x, y) in points {
                if y < 0.0 || !y.is_finite() || !x.is_finite() {
                    return Err(Error::NegativeDensity { at: x });
                }
            }
        }
    }
    Ok(())
}

/// Closure of the set where the piece's density is positive, as a list of
/// disjoint closed spans inside the piece interval.
fn positive_spans(piece: &DensityPiece) -> Vec<(f64, f64)> {
    let (a, b) = piece.interval;
    match &piece.density {
        Density::Constant { .. } => vec![(a, b)],
        Density::Rational { numerator, .. } => {
            if poly_degree(numerator) < 0 {
                Vec::new()
            } else {
                // nonnegativity is validated, and a not-identically-zero
                // polynomial has isolated zeros, so the density is positive
                // a.e. on the whole interval
                vec![(a, b)]
            }
        }
        Density::Table { points } => {
            let mut spans: Vec<(f64, f64)> = Vec::new();
            for w in points.windows(2) {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                let span = if y0 > 0.0 && y1 > 0.0 {
                    Some((x0, x1))
                } else if y0 > 0.0 {
                    Some((x0, crossing(x0, y0, x1, y1)))
                } else if y1 > 0.0 {
                    Some((crossing(x0, y0, x1, y1), x1))
                } else {
                    None
                };
                if let Some((u, v)) = span {
                    let u = u.max(a);
                    let v = v.min(b);
                    if u < v {
                        match spans.last_mut() {
                            Some(last) if last.1 >= u => last.1 = v,
                            _ => spans.push((u, v)),
                        }
                    }
                }
            }
            spans
        }
    }
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    x0 + (x1 - x0) * (0.0 - y0) / (y1 - y0)
}

// ---------------------------------------------------------------------------
// kernel integrals
// ---------------------------------------------------------------------------

/// Convergence verdict at the level of a whole kernel integral: the summed
/// error estimate must meet the relative target for the combined value.
fn check_converged(value: Complex64, error: f64, quad_tol: f64) -> Result<Complex64> {
    let target = (quad_tol * value.norm()).max(quad_tol * 1e-2);
    if error > target {
        return Err(Error::QuadratureNonConvergence {
            achieved: error,
            requested: target,
        });
    }
    Ok(value)
}

/// `| int dmu/(1+lambda^2) - 1 |`, by exact sums over atoms and families and
/// adaptive quadrature over pieces.
pub fn normalization_defect(mu: &Measure) -> Result<f64> {
    let mut total = 0.0;
    let mut error = 0.0;
    for a in &mu.atoms {
        total += a.weight / (1.0 + a.location * a.location);
    }
    for family in &mu.families {
        // family weights are defined so this holds exactly
        total += family_scale(family);
    }
    for piece in &mu.pieces {
        let out = piece_integral(piece, mu.tol.quad_tol, &[], &|x: f64| {
            Complex64::new(piece.density.eval(x) / (1.0 + x * x), 0.0)
        });
        total += out.value.re;
        error += out.error;
    }
    check_converged(Complex64::new(total, 0.0), error, mu.tol.quad_tol)?;
    Ok((total - 1.0).abs())
}

fn family_scale(family: &AtomFamily) -> f64 {
    match *family {
        AtomFamily::IntegerLattice { scale, .. } => scale,
        AtomFamily::ReciprocalCluster { scale } => scale,
    }
}

/// `int (1/(lambda - z) - lambda/(1 + lambda^2)) dmu(lambda)`.
///
/// Exact sums over atoms, cotangent closed forms over lattices, adaptive
/// quadrature over pieces. `z` must avoid the closed support when real.
pub fn herglotz_kernel_integral(mu: &Measure, z: Complex64) -> Result<Complex64> {
    mu.check_off_support(z)?;
    let mut total = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for a in &mu.atoms {
        total += a.weight * herglotz_kernel(a.location, z);
    }
    let breaks = pole_breakpoints(&[z]);
    for piece in &mu.pieces {
        let out = piece_integral(piece, mu.tol.quad_tol, &breaks, &|x: f64| {
            piece.density.eval(x) * herglotz_kernel(x, z)
        });
        total += out.value;
        error += out.error;
    }
    for family in &mu.families {
        let (value, err) = family_herglotz(family, z);
        total += value;
        error += err;
    }
    check_converged(total, error, mu.tol.quad_tol)
}

/// The combined kernel `(1 + lambda z) / ((lambda - z)(1 + lambda^2))`,
/// algebraically equal to `1/(lambda-z) - lambda/(1+lambda^2)` but free of
/// cancellation for large `lambda`.
fn herglotz_kernel(lambda: f64, z: Complex64) -> Complex64 {
    (1.0 + lambda * z) / ((lambda - z) * (1.0 + lambda * lambda))
}

/// `int dmu(lambda) / ((lambda - z) * conj(lambda - w))`, the inner product
/// of the deficiency elements `g_z` and `g_w`. Hermitian in `(z, w)`.
pub fn resolvent_inner_product(mu: &Measure, z: Complex64, w: Complex64) -> Result<Complex64> {
    mu.check_off_support(z)?;
    mu.check_off_support(w)?;
    let v = w.conj();
    let mut total = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for a in &mu.atoms {
        let lam = a.location;
        total += a.weight / ((lam - z) * (lam - v));
    }
    let breaks = pole_breakpoints(&[z, v]);
    for piece in &mu.pieces {
        let out = piece_integral(piece, mu.tol.quad_tol, &breaks, &|x: f64| {
            piece.density.eval(x) / ((x - z) * (x - v))
        });
        total += out.value;
        error += out.error;
    }
    for family in &mu.families {
        let (value, err) = family_second_order(family, z, v);
        total += value;
        error += err;
    }
    check_converged(total, error, mu.tol.quad_tol)
}

/// Panel edges seeded around the rational kernels' poles. For a pole hugging
/// the real axis this is a dyadic cascade centered at its real part, so each
/// panel sees an analytically tame piece of the near-singularity and the
/// achieved error estimates stay at the rounding level.
fn pole_breakpoints(poles: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::new();
    for &p in poles {
        out.push(p.re);
        if p.im.abs() < 0.05 {
            let mut d = p.im.abs().max(1e-13 * (1.0 + p.re.abs()));
            for _ in 0..100 {
                out.push(p.re - d);
                out.push(p.re + d);
                d *= 2.0;
                if d > 1e17 {
                    break;
                }
            }
        }
    }
    out
}

/// Integrate a complex integrand (density already folded in) over the piece
/// interval. Unbounded or wide intervals go through `lambda = tan(theta)`;
/// tabulated densities integrate knot segment by knot segment. `breaks` are
/// additional panel edges in lambda space (pole cascades), which keeps the
/// adaptive refinement convergent for evaluation points hugging the axis.
fn piece_integral(
    piece: &DensityPiece,
    rel_tol: f64,
    breaks: &[f64],
    g: &dyn Fn(f64) -> Complex64,
) -> QuadOutcome {
    let (a, b) = piece.interval;
    // per-segment targets sit well below the operation-level tolerance so
    // that summed estimates across a pole cascade still meet it
    let rel_tol = rel_tol * 1e-2;
    let abs_floor = rel_tol * 1e-1;

    let segment = |u: f64, v: f64| -> QuadOutcome {
        let mut edges = vec![u];
        for &brk in breaks {
            if brk > u && brk < v {
                edges.push(brk);
            }
        }
        edges.push(v);
        edges.sort_by(f64::total_cmp);
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        for pair in edges.windows(2) {
            // the tan substitution only where the interval demands it: near a
            // pole the direct variable keeps `lambda - z` fully precise
            let transform =
                pair[0].is_infinite() || pair[1].is_infinite() || pair[1] - pair[0] > 50.0;
            let out = if transform {
                quad::adaptive(
                    &|th: f64| {
                        let t = th.tan();
                        g(t) * (1.0 + t * t)
                    },
                    pair[0].atan(),
                    pair[1].atan(),
                    rel_tol,
                    abs_floor,
                )
            } else {
                quad::adaptive(&g, pair[0], pair[1], rel_tol, abs_floor)
            };
            if std::env::var("EXTCALC_QUAD_TRACE").is_ok() && out.error > 1e-12 {
                eprintln!(
                    "trace: segment [{:.6e}, {:.6e}] value {:.6e} err {:.3e}",
                    pair[0],
                    pair[1],
                    out.value.norm(),
                    out.error
                );
            }
            value += out.value;
            error += out.error;
        }
        QuadOutcome { value, error }
    };

    match &piece.density {
        Density::Table { points } => {
            let mut value = Complex64::new(0.0, 0.0);
            let mut error = 0.0;
            for w in points.windows(2) {
                let u = w[0].0.max(a);
                let v = w[1].0.min(b);
                if u < v {
                    let out = segment(u, v);
                    value += out.value;
                    error += out.error;
                }
            }
            QuadOutcome { value, error }
        }
        _ => segment(a, b),
    }
}

// ---------------------------------------------------------------------------
// analytic family sums
// ---------------------------------------------------------------------------

/// Stable complex cotangent: `cot w = i (q + 1)/(q - 1)` with `q = e^{2iw}`,
/// evaluated in the half-plane where `q` decays.
fn complex_cot(w: Complex64) -> Complex64 {
    if w.im < 0.0 {
        return complex_cot(w.conj()).conj();
    }
    let q = (Complex64::new(0.0, 2.0) * w).exp();
    Complex64::new(0.0, 1.0) * (q + 1.0) / (q - 1.0)
}

/// Stable `1/sin^2 w = -4 q / (q - 1)^2` with `q = e^{2iw}`.
fn complex_inv_sin_sq(w: Complex64) -> Complex64 {
    if w.im < 0.0 {
        return complex_inv_sin_sq(w.conj()).conj();
    }
    let q = (Complex64::new(0.0, 2.0) * w).exp();
    let d = q - 1.0;
    -4.0 * q / (d * d)
}

/// Symmetric principal value of `sum_n 1/(spacing*n + offset - c)`.
fn lattice_inverse_sum(spacing: f64, offset: f64, c: Complex64) -> Complex64 {
    let x = (offset - c) / spacing * std::f64::consts::PI;
    std::f64::consts::PI / spacing * complex_cot(x)
}

/// `sum_n 1/(spacing*n + offset - c)^2`.
fn lattice_inverse_sq_sum(spacing: f64, offset: f64, c: Complex64) -> Complex64 {
    let x = (offset - c) / spacing * std::f64::consts::PI;
    let p = std::f64::consts::PI / spacing;
    p * p * complex_inv_sin_sq(x)
}

/// Per-atom weight of the integer lattice making its normalization integral
/// exactly `scale`: `sum_n 1/(1+(s n + o)^2)` has the closed form
/// `(pi/s) sinh(2 pi/s) / (cosh(2 pi/s) - cos(2 pi o/s))`.
fn lattice_weight(spacing: f64, offset: f64, scale: f64) -> f64 {
    let x = 2.0 * std::f64::consts::PI / spacing;
    let y = 2.0 * std::f64::consts::PI * offset / spacing;
    // sinh x / (cosh x - cos y) written via e^{-x} to survive large x
    let e = (-x).exp();
    let ratio = (1.0 - e * e) / (1.0 + e * e - 2.0 * e * y.cos());
    let norm_sum = std::f64::consts::PI / spacing * ratio;
    scale / norm_sum
}

fn family_herglotz(family: &AtomFamily, z: Complex64) -> (Complex64, f64) {
    match *family {
        AtomFamily::IntegerLattice { spacing, offset, scale } => {
            let w = lattice_weight(spacing, offset, scale);
            let i = Complex64::new(0.0, 1.0);
            let s_z = lattice_inverse_sum(spacing, offset, z);
            // lambda/(1+lambda^2) = (1/2)(1/(lambda-i) + 1/(lambda+i))
            let s_reg = lattice_inverse_sum(spacing, offset, i);
            let value = w * (s_z - Complex64::new(s_reg.re, 0.0));
            (value, value.norm() * f64::EPSILON * 16.0)
        }
        AtomFamily::ReciprocalCluster { scale } => {
            reciprocal_sum(scale, &|lam: f64| herglotz_kernel(lam, z))
        }
    }
}

fn family_second_order(family: &AtomFamily, z: Complex64, v: Complex64) -> (Complex64, f64) {
    match *family {
        AtomFamily::IntegerLattice { spacing, offset, scale } => {
            let w = lattice_weight(spacing, offset, scale);
            let value = if z == v {
                w * lattice_inverse_sq_sum(spacing, offset, z)
            } else {
                // 1/((lambda-z)(lambda-v)) = (1/(z-v)) (1/(lambda-z) - 1/(lambda-v))
                let s = lattice_inverse_sum(spacing, offset, z)
                    - lattice_inverse_sum(spacing, offset, v);
                w * s / (z - v)
            };
            (value, value.norm() * f64::EPSILON * 16.0)
        }
        AtomFamily::ReciprocalCluster { scale } => {
            reciprocal_sum(scale, &|lam: f64| 1.0 / ((lam - z) * (lam - v)))
        }
    }
}

/// `sum_{n>=1} (c/n^2) K(1/n)` for a kernel analytic near 0, by direct
/// summation to N plus a three-term Taylor/Euler-Maclaurin tail correction.
/// The weights `c/n^2` with `c = scale * 2/(pi coth pi - 1)` make the family
/// normalization exactly `scale`.
fn reciprocal_sum(scale: f64, kernel: &dyn Fn(f64) -> Complex64) -> (Complex64, f64) {
    let pi = std::f64::consts::PI;
    let coth_pi = 1.0 / pi.tanh();
    let c = scale * 2.0 / (pi * coth_pi - 1.0);

    const N: usize = 100_000;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in (1..=N).rev() {
        let lam = 1.0 / n as f64;
        sum += kernel(lam) / (n as f64 * n as f64);
    }

    // Taylor data of K at 0 from centered differences.
    let h = 1e-4;
    let k0 = kernel(0.0);
    let kp = kernel(h);
    let km = kernel(-h);
    let k1 = (kp - km) / (2.0 * h);
    let k2 = (kp - 2.0 * k0 + km) / (h * h);
    let k3 = {
        let kp2 = kernel(2.0 * h);
        let km2 = kernel(-2.0 * h);
        ((kp2 - km2) - 2.0 * (kp - km)) / (2.0 * h * h * h)
    };

    let nf = N as f64;
    // tails of sum n^{-k} for k = 2, 3, 4 (Euler-Maclaurin)
    let a2 = 1.0 / nf - 0.5 / (nf * nf) + 1.0 / (6.0 * nf * nf * nf);
    let a3 = 0.5 / (nf * nf) - 0.5 / (nf * nf * nf) + 0.25 / (nf * nf * nf * nf);
    let a4 = 1.0 / (3.0 * nf * nf * nf) - 0.5 / (nf * nf * nf * nf);
    let tail = k0 * a2 + k1 * a3 + 0.5 * k2 * a4;

    let value = c * (sum + tail);
    let err = c * (k3.norm() / 6.0 + k2.norm()) / (nf * nf * nf * nf) * 2.0
        + value.norm() * f64::EPSILON * 64.0;
    (value, err)
}

// ---------------------------------------------------------------------------
// file format
// ---------------------------------------------------------------------------

/// Parse a measure from its JSON description:
/// `{ "atoms": [{"location": r, "weight": r}, ...],
///    "pieces": [{"interval": [a, b], "density": {...}}, ...],
///    "families": [...], "infinite": true|false }`.
/// Numbers may be given as JSON numbers or as decimal strings; interval
/// endpoints admit `"-inf"` / `"inf"`.
pub fn load_measure(json: &str, tol: Tolerances) -> Result<Measure> {
    let spec: MeasureSpec =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    Measure::from_parts(spec.atoms, spec.pieces, spec.families, spec.infinite, tol)
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureSpec {
            atoms: self.atoms.clone(),
            pieces: self.pieces.clone(),
            families: self.families.clone(),
            infinite: self.declared_infinite,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = MeasureSpec::deserialize(deserializer)?;
        Measure::from_parts(
            spec.atoms,
            spec.pieces,
            spec.families,
            spec.infinite,
            Tolerances::default(),
        )
        .map_err(D::Error::custom)
    }
}

fn de_flex_f64<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flex {
        Num(f64),
        Str(String),
    }
    match Flex::deserialize(deserializer)? {
        Flex::Num(x) => Ok(x),
        Flex::Str(s) => parse_extended_f64(&s).map_err(D::Error::custom),
    }
}

fn parse_extended_f64(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}")),
    }
}

fn ser_finite_f64<S: Serializer>(x: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    serializer.serialize_f64(*x)
}

fn de_interval<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<(f64, f64), D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum End {
        Num(f64),
        Str(String),
    }
    let ends: Vec<End> = Deserialize::deserialize(deserializer)?;
    if ends.len() != 2 {
        return Err(D::Error::custom("interval must have exactly two endpoints"));
    }
    let mut vals = [0.0; 2];
    for (i, e) in ends.into_iter().enumerate() {
        vals[i] = match e {
            End::Num(x) => x,
            End::Str(s) => parse_extended_f64(&s).map_err(D::Error::custom)?,
        };
    }
    Ok((vals[0], vals[1]))
}

fn ser_interval<S: Serializer>(
    interval: &(f64, f64),
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = serializer.serialize_seq(Some(2))?;
    for &e in [interval.0, interval.1].iter() {
        if e == f64::INFINITY {
            seq.serialize_element("inf")?;
        } else if e == f64::NEG_INFINITY {
            seq.serialize_element("-inf")?;
        } else {
            seq.serialize_element(&e)?;
        }
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn symmetric_two_atom_measure_is_normalized() {
        let mu = two_atoms();
        assert_eq!(mu.stored_defect(), 0.0);
        assert!(mu.is_surrogate());
    }

    #[test]
    fn lebesgue_over_pi_defect_within_tolerance() {
        // oracle: (1/pi) * int dx/(1+x^2) = (1/pi)(atan(inf) - atan(-inf)) = 1
        let mu = Measure::lebesgue_over_pi();
        assert!(mu.stored_defect() <= 1e-9, "defect {}", mu.stored_defect());
        assert!(!mu.is_surrogate());
    }

    #[test]
    fn misnormalized_atom_is_rejected_with_defect() {
        let err = Measure::from_parts(
            vec![Atom { location: 0.0, weight: 2.0 }],
            Vec::new(),
            Vec::new(),
            false,
            Tolerances::default(),
        )
        .unwrap_err();
        match err {
            Error::NotNormalized { defect, .. } => assert!((defect - 1.0).abs() < 1e-15),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unit_atom_at_origin_is_normalized() {
        let mu = Measure::from_parts(
            vec![Atom { location: 0.0, weight: 1.0 }],
            Vec::new(),
            Vec::new(),
            false,
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(mu.stored_defect(), 0.0);
    }

    #[test]
    fn kernel_two_atoms_at_2i() {
        // oracle: M(z) = 2z/(1 - z^2), so M(2i) = 4i/5
        let mu = two_atoms();
        let v = herglotz_kernel_integral(&mu, Complex64::new(0.0, 2.0)).unwrap();
        assert!((v - Complex64::new(0.0, 0.8)).norm() < 1e-14);
    }

    #[test]
    fn kernel_at_i_is_i_for_normalized_measures() {
        for mu in [
            two_atoms(),
            Measure::lebesgue_over_pi(),
            Measure::normalized_atoms(&[(0.3, 0.2), (-2.5, 1.0), (7.0, 3.0)]).unwrap(),
        ] {
            let v = herglotz_kernel_integral(&mu, Complex64::new(0.0, 1.0)).unwrap();
            assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn kernel_lebesgue_over_pi_at_half_i() {
        let mu = Measure::lebesgue_over_pi();
        let v = herglotz_kernel_integral(&mu, Complex64::new(0.0, 0.5)).unwrap();
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-9, "got {v}");
    }

    #[test]
    fn inner_product_two_atoms() {
        let mu = two_atoms();
        let z = Complex64::new(0.0, 2.0);
        // 1/|1-2i|^2 + 1/|-1-2i|^2 = 2/5
        let v = resolvent_inner_product(&mu, z, z).unwrap();
        assert!((v - Complex64::new(0.4, 0.0)).norm() < 1e-15);

        let i = Complex64::new(0.0, 1.0);
        let v = resolvent_inner_product(&mu, i, i).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // int dmu/(lambda-i)^2 = 1/(-2i) + 1/(2i) = 0
        let v = resolvent_inner_product(&mu, i, -i).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn inner_product_hermitian_symmetry() {
        let mu = Measure::normalized_atoms(&[(0.0, 1.0), (2.0, 0.5), (-3.0, 2.0)]).unwrap();
        let z = Complex64::new(0.7, 1.3);
        let w = Complex64::new(-0.4, 0.6);
        let a = resolvent_inner_product(&mu, z, w).unwrap();
        let b = resolvent_inner_product(&mu, w, z).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn kernel_schwarz_symmetry_and_positivity() {
        let mu = two_atoms();
        let z = Complex64::new(0.3, 0.9);
        let a = herglotz_kernel_integral(&mu, z).unwrap();
        let b = herglotz_kernel_integral(&mu, z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        assert!(a.im > 0.0);
    }

    #[test]
    fn evaluation_on_atom_is_rejected() {
        let mu = two_atoms();
        let err = herglotz_kernel_integral(&mu, Complex64::new(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::PoleOnSupport { .. }));
    }

    #[test]
    fn real_point_inside_density_is_rejected_and_gap_is_fine() {
        // constant c on (0,1): int c/(1+x^2) = c * atan(1) = c*pi/4 = 1 => c = 4/pi
        let mu = Measure::from_parts(
            Vec::new(),
            vec![DensityPiece {
                interval: (0.0, 1.0),
                density: Density::Constant { value: 4.0 / std::f64::consts::PI },
            }],
            Vec::new(),
            false,
            Tolerances::default(),
        )
        .unwrap();
        assert!(herglotz_kernel_integral(&mu, Complex64::new(0.5, 0.0)).is_err());
        assert!(herglotz_kernel_integral(&mu, Complex64::new(2.0, 0.0)).is_ok());
    }

    #[test]
    fn integer_lattice_matches_cotangent_oracle() {
        let mu = Measure::from_parts(
            Vec::new(),
            Vec::new(),
            vec![AtomFamily::IntegerLattice { spacing: 1.0, offset: 0.0, scale: 1.0 }],
            true,
            Tolerances::default(),
        )
        .unwrap();
        assert!(mu.stored_defect() < 1e-12);

        // independent oracle: M(z) = -tanh(pi) cot(pi z)
        let z = Complex64::new(0.37, 1.21);
        let got = herglotz_kernel_integral(&mu, z).unwrap();
        let pi = std::f64::consts::PI;
        let want = -pi.tanh() * (pi * z).cos() / (pi * z).sin();
        assert!((got - want).norm() < 1e-12, "got {got}, want {want}");

        let at_i = herglotz_kernel_integral(&mu, Complex64::new(0.0, 1.0)).unwrap();
        assert!((at_i - Complex64::new(0.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn integer_lattice_truncated_sum_cross_check() {
        // brute-force oracle: symmetric partial sums of the kernel
        let mu = Measure::from_parts(
            Vec::new(),
            Vec::new(),
            vec![AtomFamily::IntegerLattice { spacing: 1.0, offset: 0.25, scale: 1.0 }],
            true,
            Tolerances::default(),
        )
        .unwrap();
        let z = Complex64::new(-0.4, 0.8);
        let got = herglotz_kernel_integral(&mu, z).unwrap();

        let w = lattice_weight(1.0, 0.25, 1.0);
        let mut brute = Complex64::new(0.0, 0.0);
        for n in -2_000_000i64..=2_000_000 {
            let lam = n as f64 + 0.25;
            brute += w * herglotz_kernel(lam, z);
        }
        assert!((got - brute).norm() < 1e-6, "got {got}, brute {brute}");
    }

    #[test]
    fn reciprocal_cluster_support_geometry() {
        let mu = Measure::from_parts(
            Vec::new(),
            Vec::new(),
            vec![AtomFamily::ReciprocalCluster { scale: 1.0 }],
            false,
            Tolerances::default(),
        )
        .unwrap();
        assert!(mu.stored_defect() < 1e-12);
        assert_eq!(mu.mass_free_radius(0.0), 0.0);
        assert!(mu.on_closed_support(0.0));
        assert!(mu.on_closed_support(0.5));
        assert!(mu.punctured_neighborhood_has_mass(0.0, 1e-6));
        // 1/3 is isolated: nearest neighbors are 1/2 and 1/4
        let r = mu.mass_free_radius(1.0 / 3.0);
        assert!((r - (1.0 / 3.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_cluster_kernel_cross_check() {
        let mu = Measure::from_parts(
            Vec::new(),
            Vec::new(),
            vec![AtomFamily::ReciprocalCluster { scale: 1.0 }],
            false,
            Tolerances::default(),
        )
        .unwrap();
        let z = Complex64::new(0.0, 1.0);
        let got = herglotz_kernel_integral(&mu, z).unwrap();
        assert!((got - Complex64::new(0.0, 1.0)).norm() < 1e-9, "got {got}");
    }

    #[test]
    fn table_density_spans_and_mass() {
        let piece = DensityPiece {
            interval: (0.0, 4.0),
            density: Density::Table {
                points: vec![(0.0, 1.0), (1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)],
            },
        };
        let spans = positive_spans(&piece);
        assert_eq!(spans, vec![(0.0, 1.0), (2.0, 4.0)]);
    }

    #[test]
    fn json_round_trip_and_flexible_numbers() {
        let json = r#"{
            "atoms": [{"location": "-1.0", "weight": 1}, {"location": 1.0, "weight": "1"}],
            "pieces": [],
            "infinite": false
        }"#;
        let mu = load_measure(json, Tolerances::default()).unwrap();
        assert_eq!(mu.atoms().len(), 2);

        let json = r#"{
            "pieces": [{"interval": ["-inf", "inf"], "density": {"type": "constant", "value": 0.3183098861837907}}],
            "infinite": true
        }"#;
        let mu = load_measure(json, Tolerances::default()).unwrap();
        assert_eq!(mu.pieces().len(), 1);
        let out = serde_json::to_string(&mu).unwrap();
        assert!(out.contains("\"-inf\""));
        let back: Measure = serde_json::from_str(&out).unwrap();
        assert_eq!(back.pieces()[0].interval, (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let err = Measure::from_parts(
            Vec::new(),
            vec![
                DensityPiece { interval: (0.0, 2.0), density: Density::Constant { value: 0.1 } },
                DensityPiece { interval: (1.0, 3.0), density: Density::Constant { value: 0.1 } },
            ],
            Vec::new(),
            false,
            Tolerances { norm_tol: 1e9, quad_tol: 1e-10 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::OverlappingIntervals { .. }));
    }

    #[test]
    fn declared_infinite_requires_infinite_mass() {
        let err = Measure::from_parts(
            vec![Atom { location: 0.0, weight: 1.0 }],
            Vec::new(),
            Vec::new(),
            true,
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::FiniteMassDeclaredInfinite));
    }
}
