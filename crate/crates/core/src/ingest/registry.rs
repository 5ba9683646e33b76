use std::collections::HashMap;
use std::io::Read;

use super::IngestError;

/// Dense index of an antenna in an [`AntennaRegistry`], ordered like the ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AntennaId(pub u32);

impl AntennaId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Antenna {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

/// Antenna id to coordinates, sorted by id.
#[derive(Debug, Clone, Default)]
pub struct AntennaRegistry {
    entries: Vec<Antenna>,
    index: HashMap<String, AntennaId>,
}

impl AntennaRegistry {
    /// Builds a registry, rejecting duplicate ids and out-of-range
    /// coordinates. Line numbers in errors are 1-based positions in `entries`.
    pub fn from_entries(entries: impl IntoIterator<Item = Antenna>) -> Result<Self, IngestError> {
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut list = Vec::new();
        for (i, a) in entries.into_iter().enumerate() {
            let line = i + 1;
            if !valid_coordinates(a.lat, a.lon) {
                return Err(IngestError::CoordinateOutOfRange { line, id: a.id, lat: a.lat, lon: a.lon });
            }
            if seen.insert(a.id.clone(), line).is_some() {
                return Err(IngestError::DuplicateAntenna { line, id: a.id });
            }
            list.push(a);
        }
        list.sort_by(|a, b| a.id.cmp(&b.id));
        let index = list
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), AntennaId(i as u32)))
            .collect();
        Ok(Self { entries: list, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Option<AntennaId> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: AntennaId) -> Option<&Antenna> {
        self.entries.get(id.index())
    }

    /// Panics if `id` did not come from this registry.
    pub fn antenna(&self, id: AntennaId) -> &Antenna {
        &self.entries[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (AntennaId, &Antenna)> + '_ {
        self.entries.iter().enumerate().map(|(i, a)| (AntennaId(i as u32), a))
    }

    pub fn ids(&self) -> impl Iterator<Item = AntennaId> {
        (0..self.entries.len() as u32).map(AntennaId)
    }

    /// Serializes back to the `antenna_id,latitude,longitude` format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.entries {
            out.push_str(&format!("{},{},{}\n", a.id, a.lat, a.lon));
        }
        out
    }
}

fn valid_coordinates(lat: f64, lon: f64) -> bool {
    lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)
}

/// Reads an `antenna_id,latitude,longitude` file into a registry.
pub fn load_antennas<R: Read>(mut source: R) -> Result<AntennaRegistry, IngestError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Io { path: "<antennas>".into(), source })?;
    parse_antennas(&text)
}

pub(crate) fn parse_antennas(text: &str) -> Result<AntennaRegistry, IngestError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(IngestError::MalformedAntenna {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(IngestError::MalformedAntenna { line, reason: "empty antenna id".into() });
        }
        let coord = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|_| IngestError::MalformedAntenna {
                line,
                reason: format!("invalid {what} {s:?}"),
            })
        };
        let lat = coord(fields[1], "latitude")?;
        let lon = coord(fields[2], "longitude")?;
        if !valid_coordinates(lat, lon) {
            return Err(IngestError::CoordinateOutOfRange { line, id: id.to_string(), lat, lon });
        }
        if seen.insert(id, line).is_some() {
            return Err(IngestError::DuplicateAntenna { line, id: id.to_string() });
        }
        entries.push(Antenna { id: id.to_string(), lat, lon });
    }
    AntennaRegistry::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let reg = load_antennas("A1,-27.45,-58.98\n".as_bytes()).unwrap();
        assert_eq!(reg.len(), 1);
        let a = reg.antenna(reg.lookup("A1").unwrap());
        assert_eq!((a.lat, a.lon), (-27.45, -58.98));
    }

    #[test]
    fn duplicate_names_the_id() {
        let err = load_antennas("A1,1,2\nA2,3,4\nA1,5,6\n".as_bytes()).unwrap_err();
        assert!(matches!(&err, IngestError::DuplicateAntenna { line: 3, id } if id == "A1"));
        assert!(err.to_string().contains("A1"));
    }

    #[test]
    fn out_of_range_and_malformed() {
        assert!(matches!(
            load_antennas("A1,91,0\n".as_bytes()),
            Err(IngestError::CoordinateOutOfRange { .. })
        ));
        assert!(matches!(
            load_antennas("A1,0,-180.5\n".as_bytes()),
            Err(IngestError::CoordinateOutOfRange { .. })
        ));
        assert!(matches!(
            load_antennas("A1,zero,1\n".as_bytes()),
            Err(IngestError::MalformedAntenna { line: 1, .. })
        ));
        assert!(matches!(
            load_antennas("A1,1\n".as_bytes()),
            Err(IngestError::MalformedAntenna { line: 1, .. })
        ));
    }

    #[test]
    fn registry_sorted_by_id() {
        let reg = load_antennas("B,0,0\nA,1,1\nC,2,2\n".as_bytes()).unwrap();
        let ids: Vec<_> = reg.iter().map(|(_, a)| a.id.as_str()).collect();
        assert_eq!(ids, ["A", "B", "C"]);
        assert_eq!(reg.to_csv(), "A,1,1\nB,0,0\nC,2,2\n");
    }
}
