//! β / m_v antenna filtering and circle-layer export.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ingest::{AntennaId, AntennaRegistry};
use crate::risk::{AntennaIndicators, Indicators};
use crate::zone::GeoPoint;

#[derive(Debug, Error, PartialEq)]
pub enum HeatmapError {
    #[error("beta {0} outside [0, 1]")]
    BetaOutOfRange(f64),
    #[error("radius constant must be positive, got {0}")]
    BadRadiusConstant(f64),
    #[error("antenna #{0} is not in the registry")]
    UnresolvableAntenna(u32),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Plotting filters: keep antennas with `V/N > beta` and `N > min_volume`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub beta: f64,
    pub min_volume: u64,
}

impl FilterParams {
    pub fn new(beta: f64, min_volume: u64) -> Result<Self, HeatmapError> {
        let p = Self { beta, min_volume };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HeatmapError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(HeatmapError::BetaOutOfRange(self.beta));
        }
        Ok(())
    }

    /// Both comparisons are strict; unpopulated antennas never pass.
    pub fn keeps(&self, ind: &AntennaIndicators) -> bool {
        ind.n_residents > self.min_volume
            && ind.vulnerable_fraction().is_some_and(|f| f > self.beta)
    }
}

/// Named filter regimes for the Argentine and Mexican maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ArgentinaNational,
    ArgentinaBroad,
    Amba,
    Mexico,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::ArgentinaNational, Preset::ArgentinaBroad, Preset::Amba, Preset::Mexico];

    pub fn params(self) -> FilterParams {
        match self {
            Preset::ArgentinaNational => FilterParams { beta: 0.15, min_volume: 50 },
            Preset::ArgentinaBroad => FilterParams { beta: 0.01, min_volume: 50 },
            // only beta is stated for the Buenos Aires close-up; m_v follows the other Argentine maps
            Preset::Amba => FilterParams { beta: 0.02, min_volume: 50 },
            Preset::Mexico => FilterParams { beta: 0.50, min_volume: 80 },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::ArgentinaNational => "argentina-national",
            Preset::ArgentinaBroad => "argentina-broad",
            Preset::Amba => "amba",
            Preset::Mexico => "mexico",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = HeatmapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HeatmapError::UnknownPreset(s.to_string()))
    }
}

/// Antennas passing both filters, in antenna order.
pub fn filter_antennas(ind: &Indicators, params: &FilterParams) -> Vec<AntennaIndicators> {
    ind.values().filter(|i| params.keeps(i)).copied().collect()
}

/// One plotted antenna: area grows with population, colour with the
/// vulnerable share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapCircle {
    pub antenna_id: String,
    pub center: GeoPoint,
    /// `k * sqrt(population)`.
    pub radius_scale: f64,
    /// `vulnerable / population`.
    pub intensity: f64,
    pub population: u64,
    pub vulnerable: u64,
}

/// One circle per kept antenna. Antennas with no residents are skipped.
pub fn build_circles(
    kept: &[AntennaIndicators],
    registry: &AntennaRegistry,
    k: f64,
) -> Result<Vec<HeatmapCircle>, HeatmapError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(HeatmapError::BadRadiusConstant(k));
    }
    let mut circles = Vec::with_capacity(kept.len());
    for ind in kept {
        let Some(intensity) = ind.vulnerable_fraction() else { continue };
        let a = registry.get(ind.antenna).ok_or(HeatmapError::UnresolvableAntenna(ind.antenna.0))?;
        circles.push(HeatmapCircle {
            antenna_id: a.id.clone(),
            center: GeoPoint::new(a.lat, a.lon),
            radius_scale: k * (ind.n_residents as f64).sqrt(),
            intensity,
            population: ind.n_residents,
            vulnerable: ind.n_vulnerable,
        });
    }
    circles.sort_by(|a, b| a.antenna_id.cmp(&b.antenna_id));
    Ok(circles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerFormat {
    GeoJson,
    Csv,
}

/// Renders a layer. Output is byte-deterministic for a given circle list.
pub fn export_layer(circles: &[HeatmapCircle], format: LayerFormat) -> Vec<u8> {
    let mut sorted: Vec<&HeatmapCircle> = circles.iter().collect();
    sorted.sort_by(|a, b| a.antenna_id.cmp(&b.antenna_id));
    match format {
        LayerFormat::GeoJson => {
            let features: Vec<Value> = sorted
                .iter()
                .map(|c| {
                    json!({
                        "type": "Feature",
                        "id": c.antenna_id,
                        "geometry": { "type": "Point", "coordinates": [c.center.lon, c.center.lat] },
                        "properties": {
                            "population": c.population,
                            "vulnerable": c.vulnerable,
                            "intensity": c.intensity,
                            "radius_scale": c.radius_scale,
                        },
                    })
                })
                .collect();
            let mut out = serde_json::to_vec_pretty(&json!({ "type": "FeatureCollection", "features": features }))
                .expect("layer serializes");
            out.push(b'\n');
            out
        }
        LayerFormat::Csv => {
            let mut out = String::from("antenna_id,lat,lon,N,V,intensity,radius_scale\n");
            for c in sorted {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.antenna_id, c.center.lat, c.center.lon, c.population, c.vulnerable, c.intensity, c.radius_scale
                ));
            }
            out.into_bytes()
        }
    }
}

/// The kept antenna ids for `params`; convenient for set comparisons.
pub fn kept_ids(ind: &Indicators, params: &FilterParams) -> Vec<AntennaId> {
    filter_antennas(ind, params).into_iter().map(|i| i.antenna).collect()
}
