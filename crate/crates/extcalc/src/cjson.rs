//! Serde adapters mapping complex scalars to the `{"re": r, "im": r}` object
//! shape used by every file format in this crate.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct ReIm {
    re: f64,
    im: f64,
}

pub(crate) fn serialize<S: Serializer>(
    c: &Complex64,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    ReIm { re: c.re, im: c.im }.serialize(serializer)
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> Result<Complex64, D::Error> {
    let v = ReIm::deserialize(deserializer)?;
    Ok(Complex64::new(v.re, v.im))
}

pub(crate) mod vec {
    use super::*;

    pub(crate) fn serialize<S: Serializer>(
        values: &[Complex64],
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let shim: Vec<ReIm> = values.iter().map(|c| ReIm { re: c.re, im: c.im }).collect();
        shim.serialize(serializer)
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<Complex64>, D::Error> {
        let shim: Vec<ReIm> = Vec::deserialize(deserializer)?;
        Ok(shim.into_iter().map(|v| Complex64::new(v.re, v.im)).collect())
    }
}
