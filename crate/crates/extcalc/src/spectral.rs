//! Point spectrum of the dissipative extension, located as the zeros of its
//! characteristic function in the upper half-plane by the argument
//! principle: winding-number counts over rectangle boundaries, recursive
//! quadrisection until cells isolate single zeros, Newton refinement with a
//! centered-difference derivative. Multiple zeros that never separate are
//! reported with their winding multiplicity.
//!
//! Also classifies real points as quasi-regular or spectral-core points of
//! the model symmetric operator, decided exactly from the support geometry
//! of the measure.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::triple::DissipativeTriple;

/// Rectangle in the open upper half-plane to search, with refinement
/// controls. The bottom edge is kept strictly above the real axis: the
/// characteristic function lives on `C+` only, and root finding degenerates
/// at the boundary.
#[derive(Clone, Copy, Debug)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub max_depth: u32,
    pub refine_tol: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let region = SearchRegion {
            re_min,
            re_max,
            im_min,
            im_max,
            max_depth: 48,
            refine_tol: 1e-10,
        };
        region.validate()?;
        Ok(region)
    }

    fn validate(&self) -> Result<()> {
        if !(self.im_min > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "bottom edge must lie strictly above the real axis, got {}",
                self.im_min
            )));
        }
        if !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::InvalidRegion("empty rectangle".into()));
        }
        Ok(())
    }
}

/// A located zero of the characteristic function: an eigenvalue of the
/// dissipative extension. `multiplicity` is the winding multiplicity of the
/// isolating cell; `boundary_suspect` flags roots close to the bottom edge,
/// where further zeros may hide below `im_min`.
#[derive(Clone, Copy, Debug)]
pub struct FoundRoot {
    pub location: Complex64,
    pub multiplicity: u32,
    pub char_abs: f64,
    pub boundary_suspect: bool,
}

/// Result of a spectrum search. When `kappa = 0` and the Livsic function
/// vanishes identically, every point of the upper half-plane is an
/// eigenvalue; that degenerate situation is detected and reported instead of
/// enumerated.
#[derive(Clone, Debug)]
pub enum Spectrum {
    Roots(Vec<FoundRoot>),
    FillsUpperHalfPlane,
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn diag(&self) -> f64 {
        ((self.x1 - self.x0).powi(2) + (self.y1 - self.y0).powi(2)).sqrt()
    }

    fn contains_inflated(&self, z: Complex64, slack: f64) -> bool {
        let dx = slack * (self.x1 - self.x0);
        let dy = slack * (self.y1 - self.y0);
        z.re >= self.x0 - dx && z.re <= self.x1 + dx && z.im >= self.y0 - dy && z.im <= self.y1 + dy
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.x0 + fx * (self.x1 - self.x0);
        let ym = self.y0 + fy * (self.y1 - self.y0);
        [
            Rect { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Rect { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
            Rect { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
        ]
    }
}

/// Counterclockwise boundary samples, `n` per edge.
fn boundary_points(rect: &Rect, n: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(4 * n);
    for k in 0..n {
        let t = k as f64 / n as f64;
        pts.push(Complex64::new(rect.x0 + t * (rect.x1 - rect.x0), rect.y0));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        pts.push(Complex64::new(rect.x1, rect.y0 + t * (rect.y1 - rect.y0)));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        pts.push(Complex64::new(rect.x1 - t * (rect.x1 - rect.x0), rect.y1));
    }
    for k in 0..n {
        let t = k as f64 / n as f64;
        pts.push(Complex64::new(rect.x0, rect.y1 - t * (rect.y1 - rect.y0)));
    }
    pts
}

const BOUNDARY_ZERO_FLOOR: f64 = 1e-13;

/// Winding number of `f` around 0 along the rectangle boundary. Sampling
/// starts at 64 points and doubles until every consecutive argument
/// increment is below pi/2; a near-zero boundary value aborts with an
/// instability error so the caller can re-split elsewhere.
fn winding<F>(f: &F, rect: &Rect) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut per_edge = 16usize;
    loop {
        let pts = boundary_points(rect, per_edge);
        let mut vals = Vec::with_capacity(pts.len());
        for &p in &pts {
            let v = f(p)?;
            if v.norm() < BOUNDARY_ZERO_FLOOR {
                return Err(Error::WindingUnstable(format!(
                    "characteristic function vanishes on the cell boundary near {p}"
                )));
            }
            vals.push(v);
        }

        let mut total = 0.0;
        let mut resolved = true;
        for k in 0..vals.len() {
            let a = vals[k];
            let b = vals[(k + 1) % vals.len()];
            let inc = (b / a).arg();
            if inc.abs() > std::f64::consts::FRAC_PI_2 {
                resolved = false;
                break;
            }
            total += inc;
        }
        if resolved {
            let w = total / std::f64::consts::TAU;
            let rounded = w.round();
            if (w - rounded).abs() < 0.25 {
                return Ok(rounded as i64);
            }
        }
        per_edge *= 2;
        if per_edge > 16_384 {
            return Err(Error::WindingUnstable(
                "argument increments did not resolve under sampling refinement".into(),
            ));
        }
    }
}

fn derivative<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok((f(z + h)? - f(z - h)?) / (2.0 * h))
}

fn second_derivative<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok((f(z + h)? - 2.0 * f(z)? + f(z - h)?) / (h * h))
}

/// Newton iteration for a simple zero seeded at the cell center. `None`
/// means the iteration escaped the (slightly inflated) cell or failed to
/// meet the tolerance, in which case the caller keeps subdividing.
fn refine_simple<F>(f: &F, rect: &Rect, refine_tol: f64) -> Result<Option<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = 1e-7 * (1.0 + rect.diag());
    let mut z = rect.center();
    for _ in 0..60 {
        let fz = f(z)?;
        let d = derivative(f, z, h)?;
        if d.norm() < 1e-300 {
            return Ok(None);
        }
        let step = fz / d;
        z -= step;
        if z.im <= 0.0 || !rect.contains_inflated(z, 0.15) {
            return Ok(None);
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    if f(z)?.norm() <= refine_tol {
        Ok(Some(z))
    } else {
        Ok(None)
    }
}

/// Refinement for a zero of known multiplicity `m >= 2`: the modified Newton
/// step `z - m f/f'` restores quadratic convergence, and for `m = 2` the
/// position is polished as the simple zero of `f'`, which is far less
/// noise-limited than `|f| <= tol` at a flat double zero.
fn refine_multiple<F>(
    f: &F,
    seed: Complex64,
    multiplicity: u32,
    refine_tol: f64,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let m = multiplicity as f64;
    let h = 1e-6;
    let mut z = seed;
    for _ in 0..80 {
        let fz = f(z)?;
        let d = derivative(f, z, h)?;
        if d.norm() < 1e-300 {
            break;
        }
        let step = m * fz / d;
        z -= step;
        if z.im <= 0.0 {
            return Err(Error::RefinementFailed {
                z: seed,
                detail: "iteration left the upper half-plane".into(),
            });
        }
        if step.norm() < 1e-12 {
            break;
        }
    }
    if multiplicity == 2 {
        let hp = 1e-5;
        for _ in 0..40 {
            let g = derivative(f, z, hp)?;
            let gp = second_derivative(f, z, hp)?;
            if gp.norm() < 1e-300 {
                break;
            }
            let step = g / gp;
            z -= step;
            if step.norm() < 1e-13 {
                break;
            }
        }
    }
    let residual = f(z)?.norm();
    if residual <= refine_tol {
        Ok(z)
    } else {
        Err(Error::RefinementFailed {
            z,
            detail: format!("|S| = {residual:.3e} above refine_tol"),
        })
    }
}

fn recurse_cell<F>(
    f: &F,
    rect: Rect,
    w: i64,
    depth: u32,
    region: &SearchRegion,
    cluster_floor: f64,
    out: &mut Vec<(Complex64, u32)>,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if w == 0 {
        return Ok(());
    }
    if w == 1 {
        if let Some(z) = refine_simple(f, &rect, region.refine_tol)? {
            out.push((z, 1));
            return Ok(());
        }
    }
    if w >= 2 && rect.diag() < cluster_floor {
        // a cluster that never separates: treat as one zero of winding
        // multiplicity
        let z = refine_multiple(f, rect.center(), w as u32, region.refine_tol)?;
        out.push((z, w as u32));
        return Ok(());
    }
    if depth >= region.max_depth {
        return Err(Error::WindingUnstable(format!(
            "maximum subdivision depth reached with winding {w} in a cell near {}",
            rect.center()
        )));
    }

    // quadrisect; nudge the split point when a child boundary grazes a zero
    'fractions: for &(fx, fy) in &[(0.5, 0.5), (0.53, 0.51), (0.47, 0.49), (0.51, 0.55)] {
        let children = rect.split(fx, fy);
        let mut ws = [0i64; 4];
        for (k, child) in children.iter().enumerate() {
            match winding(f, child) {
                Ok(wc) => ws[k] = wc,
                Err(Error::WindingUnstable(_)) => continue 'fractions,
                Err(e) => return Err(e),
            }
        }
        if ws.iter().sum::<i64>() != w {
            continue 'fractions;
        }
        for (child, &wc) in children.iter().zip(&ws) {
            recurse_cell(f, *child, wc, depth + 1, region, cluster_floor, out)?;
        }
        return Ok(());
    }
    Err(Error::WindingUnstable(format!(
        "could not split a cell near {} without grazing a zero",
        rect.center()
    )))
}

/// All zeros of the characteristic function of `t` inside the region, i.e.
/// the point spectrum of the dissipative extension there. Results are sorted
/// by (re, im); each satisfies `|S(z0)| <= refine_tol`.
pub fn find_eigenvalues(t: &DissipativeTriple, region: &SearchRegion) -> Result<Spectrum> {
    region.validate()?;
    let f = |z: Complex64| t.characteristic(z);

    // kappa = 0 with identically vanishing Livsic function: the whole upper
    // half-plane is point spectrum
    if t.kappa().norm() < 1e-13 {
        let probes = [
            Complex64::new(0.5 * (region.re_min + region.re_max), 0.5 * (region.im_min + region.im_max)),
            Complex64::new(region.re_min + 0.3 * (region.re_max - region.re_min), region.im_min + 0.7 * (region.im_max - region.im_min)),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.7, 2.3),
            Complex64::new(-1.3, 0.4),
        ];
        let mut all_zero = true;
        for p in probes {
            if f(p)?.norm() >= 1e-12 {
                all_zero = false;
                break;
            }
        }
        if all_zero {
            return Ok(Spectrum::FillsUpperHalfPlane);
        }
    }

    let rect = Rect {
        x0: region.re_min,
        x1: region.re_max,
        y0: region.im_min,
        y1: region.im_max,
    };
    let cluster_floor = 1e-6 * (1.0 + rect.diag());
    let w = winding(&f, &rect)?;
    let mut raw: Vec<(Complex64, u32)> = Vec::new();
    recurse_cell(&f, rect, w, 0, region, cluster_floor, &mut raw)?;

    raw.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then_with(|| a.0.im.total_cmp(&b.0.im))
    });
    // merge numerically identical locations, accumulating multiplicity
    let mut merged: Vec<(Complex64, u32)> = Vec::new();
    for (z, m) in raw {
        match merged.last_mut() {
            Some((prev, pm)) if (*prev - z).norm() < 1e-9 * (1.0 + z.norm()) => *pm += m,
            _ => merged.push((z, m)),
        }
    }

    let band = 0.05 * (region.im_max - region.im_min);
    let mut roots = Vec::with_capacity(merged.len());
    for (z, m) in merged {
        roots.push(FoundRoot {
            location: z,
            multiplicity: m,
            char_abs: f(z)?.norm(),
            boundary_suspect: z.im < region.im_min + band,
        });
    }
    Ok(Spectrum::Roots(roots))
}

// ---------------------------------------------------------------------------
// quasi-regular / core classification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointVerdict {
    QuasiRegular,
    Core,
}

/// Classification of a real point for the model symmetric operator:
/// quasi-regular iff some punctured neighborhood carries no mass, i.e. the
/// point is not a non-isolated point of the support.
#[derive(Clone, Copy, Debug)]
pub struct SpectralPointClass {
    pub point: f64,
    pub epsilon_found: Option<f64>,
    pub verdict: PointVerdict,
}

/// Decides the verdict exactly from the measure description (interval
/// arithmetic on atoms, density spans, and families); the epsilon grid only
/// selects the reported witness radius.
pub fn classify_spectral_point(
    mu: &Measure,
    lambda0: f64,
    epsilon_grid: &[f64],
) -> SpectralPointClass {
    let sup = mu.mass_free_radius(lambda0);
    if sup == 0.0 {
        return SpectralPointClass {
            point: lambda0,
            epsilon_found: None,
            verdict: PointVerdict::Core,
        };
    }
    // an epsilon qualifies iff the open punctured neighborhood misses all
    // mass, which for open intervals is exactly eps <= sup
    let witness = epsilon_grid
        .iter()
        .copied()
        .filter(|&e| e > 0.0 && e <= sup)
        .fold(f64::NEG_INFINITY, f64::max);
    let epsilon_found = if witness > 0.0 {
        Some(witness)
    } else if sup.is_finite() {
        Some(sup)
    } else {
        Some(epsilon_grid.first().copied().unwrap_or(1.0))
    };
    SpectralPointClass {
        point: lambda0,
        epsilon_found,
        verdict: PointVerdict::QuasiRegular,
    }
}

/// Default witness grid `2^{-k}`, k = 0..=40.
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..=40).map(|k| (2.0f64).powi(-k)).collect()
}
