//! Stiffness from a static force-displacement test.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticMeasurement {
    /// Compression, m.
    pub displacement: f64,
    /// Applied force, N.
    pub force: f64,
}

impl StaticMeasurement {
    pub fn new(displacement: f64, force: f64) -> Result<Self> {
        if !(displacement.is_finite() && displacement >= 0.0) {
            return Err(invalid(format!(
                "displacement must be >= 0, got {displacement}"
            )));
        }
        if !(force.is_finite() && force >= 0.0) {
            return Err(invalid(format!("force must be >= 0, got {force}")));
        }
        Ok(Self {
            displacement,
            force,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StiffnessFit {
    pub k: f64,
    /// Force at zero displacement, pinned to the structure's weight.
    pub intercept: f64,
    pub rmse: f64,
}

/// Least-squares slope of `F = W + k·x` with the intercept held at `weight`.
pub fn fit_stiffness(data: &[StaticMeasurement], weight: f64) -> Result<StiffnessFit> {
    if data.is_empty() {
        return Err(Error::DegenerateData("no static measurements".into()));
    }
    if !weight.is_finite() {
        return Err(invalid("weight is not finite"));
    }
    let (num, den) = data.iter().fold((0.0, 0.0), |(num, den), m| {
        (
            num + (m.force - weight) * m.displacement,
            den + m.displacement * m.displacement,
        )
    });
    if den == 0.0 {
        return Err(Error::DegenerateData(
            "all displacements are zero; the slope is undetermined".into(),
        ));
    }
    let k = num / den;
    if k.is_nan() || k <= 0.0 {
        return Err(Error::DegenerateData(format!(
            "fitted stiffness {k} N/m is not positive"
        )));
    }
    let sse: f64 = data
        .iter()
        .map(|m| (m.force - (weight + k * m.displacement)).powi(2))
        .sum();
    Ok(StiffnessFit {
        k,
        intercept: weight,
        rmse: (sse / data.len() as f64).sqrt(),
    })
}

#[derive(Deserialize)]
struct Row {
    displacement_mm: f64,
    #[serde(rename = "force_N")]
    force_n: f64,
}

/// Reads a `displacement_mm,force_N` CSV; `#` lines are comments.
pub fn read_static_csv<R: Read>(reader: R) -> Result<Vec<StaticMeasurement>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["displacement_mm", "force_N"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header 'displacement_mm,force_N', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    rdr.deserialize::<Row>()
        .map(|row| {
            let row = row?;
            StaticMeasurement::new(row.displacement_mm / 1000.0, row.force_n)
        })
        .collect()
}
