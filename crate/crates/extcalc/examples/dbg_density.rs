use num_complex::Complex64;
use extcalc::measure::Measure;

fn main() {
    let leb = Measure::lebesgue_over_pi();
    let z = Complex64::new(5.0, 9.5367431640625e-8);
    match extcalc::herglotz_kernel_integral(&leb, z) {
        Ok(v) => println!("M = {v}"),
        Err(e) => println!("ERR {e}"),
    }
}
