//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands on a
//! finite interval. Callers handle unbounded intervals by substituting
//! `lambda = tan(theta)` first, which turns the rational kernels used in this
//! crate into smooth bounded integrands on (-pi/2, pi/2).

use num_complex::Complex64;

// 21-point Gauss-Kronrod pair (QUADPACK QK21 abscissae and weights).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Clone, Copy, Debug)]
pub(crate) struct QuadOutcome {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut kronrod = f_center * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut resabs = f_center.norm() * WGK[10];
    let mut samples = [Complex64::new(0.0, 0.0); 21];
    samples[20] = f_center;

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[2 * j] = f1;
        samples[2 * j + 1] = f2;
        let sum = f1 + f2;
        kronrod += WGK[j] * sum;
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }

    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (f_center - mean).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((samples[2 * j] - mean).norm() + (samples[2 * j + 1] - mean).norm());
    }

    let raw_err = ((kronrod - gauss) * half).norm();
    resabs *= half.abs();
    resasc *= half.abs();

    let mut error = raw_err;
    if resasc != 0.0 && raw_err != 0.0 {
        error = resasc * (200.0 * raw_err / resasc).powf(1.5).min(1.0);
    }
    error = error.max(50.0 * f64::EPSILON * resabs);

    Panel {
        a,
        b,
        value: kronrod * half,
        error,
    }
}

/// Integrate `f` over the finite interval `[a, b]`, subdividing the worst
/// panel until the summed error estimate meets the target
/// `max(rel_tol * |value|, abs_floor)` or no further improvement is
/// possible. Best effort: the achieved error estimate is always reported and
/// the caller decides whether it suffices at the level of the full
/// operation.
pub(crate) fn adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> QuadOutcome {
    const MAX_PANELS: usize = 4096;

    if a == b {
        return QuadOutcome {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        };
    }

    let mut panels = vec![gk21(f, a, b)];
    loop {
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for p in &panels {
            total += p.value;
            err += p.error;
        }
        let target = (rel_tol * total.norm()).max(abs_floor);
        if err <= target || panels.len() >= MAX_PANELS {
            return QuadOutcome { value: total, error: err };
        }

        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("panel list is nonempty");
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval no longer splittable in f64
            return QuadOutcome { value: total, error: err };
        }
        panels[worst] = gk21(f, a, mid);
        panels.push(gk21(f, mid, b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let out = adaptive(&|x| Complex64::new(x * x * x - x, 2.0 * x), 0.0, 2.0, 1e-12, 1e-15);
        assert!((out.value.re - 2.0).abs() < 1e-13);
        assert!((out.value.im - 4.0).abs() < 1e-13);
    }

    #[test]
    fn arctan_derivative_integrates_to_pi_over_two() {
        // Slowly decaying tail on a huge interval still converges, just less
        // precisely.
        let out = adaptive(&|x| Complex64::new(1.0 / (1.0 + x * x), 0.0), 0.0, 1e8, 1e-10, 1e-13);
        assert!((out.value.re - (std::f64::consts::FRAC_PI_2 - 1e-8)).abs() < 1e-7);
    }

    #[test]
    fn oscillatory_kernel() {
        let out = adaptive(
            &|x| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            1e-12,
            1e-14,
        );
        // integral of e^{ix} over [0, pi] is 2i
        assert!((out.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(out.error < 1e-12);
    }
}
