//! CSV and JSON encoders for run artifacts.
//!
//! Floats in CSV are written as `{:.16e}`, i.e. 17 significant digits, which round-trips
//! every `f64` and keeps files byte-stable across runs.

use gelfand_core::bifurcation::BifurcationCurve;
use gelfand_core::singular::TransformedTrajectory;
use serde::Serialize;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with a mandatory header row.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("writing to memory");
    for row in rows {
        writer.write_record(&row).expect("writing to memory");
    }
    writer.into_inner().expect("flushing to memory")
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

/// Plot data for a bifurcation curve.
///
/// Columns `alpha, lambda, slope_sign, annotation`. Sample rows have an empty annotation;
/// they are followed by annotation rows for fold brackets (`turn_low`, `turn_high` at the
/// extremal `λ`), crossings of `λ*` (`crossing`) and the two end points of the `λ*`
/// reference line (`lambda_star`). An empty curve gives a header-only file.
pub fn curve_csv(curve: &BifurcationCurve) -> Vec<u8> {
    let mut rows: Vec<Vec<String>> = curve
        .slope_signs()
        .into_iter()
        .map(|(a, l, s)| vec![float(a), float(l), s.to_string(), String::new()])
        .collect();
    if !curve.samples.is_empty() {
        let note = |a: f64, l: f64, what: &str| vec![float(a), float(l), String::new(), what.to_string()];
        for t in &curve.turning_points {
            rows.push(note(t.alpha_low, t.lambda, "turn_low"));
            rows.push(note(t.alpha_high, t.lambda, "turn_high"));
        }
        if let Some(star) = curve.lambda_star_ref {
            for &c in &curve.crossings {
                rows.push(note(c, star, "crossing"));
            }
            rows.push(note(curve.samples[0].alpha, star, "lambda_star"));
            rows.push(note(curve.explored_alpha_max(), star, "lambda_star"));
        }
    }
    csv(&["alpha", "lambda", "slope_sign", "annotation"], rows)
}

/// The transformed trajectory exactly as integrated: `t`, the branch variable and its
/// derivative, and `φ(V)`.
pub fn trajectory_csv(trajectory: &TransformedTrajectory) -> Vec<u8> {
    let rows = (0..trajectory.t_grid.len()).map(|i| {
        vec![
            float(trajectory.t_grid[i]),
            float(trajectory.values[i]),
            float(trajectory.derivatives[i]),
            float(trajectory.phi[i]),
        ]
    });
    csv(&["t", "value", "derivative", "phi"], rows)
}

/// Radial samples under the given three column names, e.g. `r, v, v_prime`.
pub fn profile_csv(header: [&str; 3], r: &[f64], v: &[f64], v_prime: &[f64]) -> Vec<u8> {
    let rows = r.iter().zip(v).zip(v_prime).map(|((&r, &v), &d)| vec![float(r), float(v), float(d)]);
    csv(&header, rows)
}

/// Two-column series.
pub fn pairs_csv(x_name: &str, y_name: &str, pairs: &[(f64, f64)]) -> Vec<u8> {
    csv(&[x_name, y_name], pairs.iter().map(|&(x, y)| vec![float(x), float(y)]))
}
