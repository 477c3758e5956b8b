use crate::error::{Error, Result};
use crate::quality::QualityVector;

/// Whether the last `w` entries before `series[t−1]` all lie within mean
/// relative deviation `epsilon` of it. Returns `false` when fewer than `w + 1`
/// entries exist.
pub fn converged(series: &[QualityVector], w: usize, epsilon: f64) -> Result<bool> {
    let t = series.len();
    if t < 2 || w >= t {
        return Ok(false);
    }
    let reference = &series[t - 1].values;
    if let Some(i) = reference.iter().position(|&z| z == 0.0) {
        return Err(Error::ZeroReferenceComponent(i));
    }
    let d = reference.len() as f64;
    for past in &series[t - 1 - w..t - 1] {
        if past.values.len() != reference.len() {
            return Err(Error::QualityMismatch("series dimensions differ".into()));
        }
        let dev: f64 =
            past.values.iter().zip(reference).map(|(z, r)| (z - r).abs() / r.abs()).sum::<f64>() / d;
        if dev > epsilon {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Engine-side policy: an all-zero window counts as converged, any other zero
/// reference does not.
pub(crate) fn stabilized(series: &[QualityVector], w: usize, epsilon: f64) -> bool {
    match converged(series, w, epsilon) {
        Ok(v) => v,
        Err(_) => {
            let t = series.len();
            let reference = &series[t - 1].values;
            series[t - 1 - w..t].iter().all(|q| &q.values == reference)
        }
    }
}
