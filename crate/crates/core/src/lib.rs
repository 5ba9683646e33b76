//! Call-detail-record analytics for mapping social exposure to an endemic
//! disease zone.
//!
//! The crate turns raw call records and an antenna registry into per-antenna
//! risk indicators and filtered, map-ready circle layers:
//!
//! 1. [`ingest`] parses CDR and antenna files and applies the monthly
//!    activity filter that defines the operator's client set.
//! 2. [`graph`] collapses client-to-client calls into a boolean, undirected
//!    social graph.
//! 3. [`homes`] assigns each client a home antenna from weekday-night calls.
//! 4. [`zone`] and [`risk`] find endemic-zone residents, tag their graph
//!    neighbours as vulnerable and aggregate `<N, V, C, VC>` per antenna.
//! 5. [`heatmap`] filters antennas by vulnerable share and population and
//!    exports GeoJSON/CSV circle layers.
//!
//! [`synth`] generates seeded datasets with a ground-truth manifest,
//! [`oracle`] holds brute-force reference implementations used by
//! [`validate`] and the test suites, and [`pipeline`] wires everything
//! together behind a TOML config with content-hash caching.

pub mod graph;
pub mod heatmap;
pub mod homes;
pub mod ingest;
pub mod oracle;
pub mod pipeline;
pub mod risk;
pub mod synth;
pub mod users;
pub mod validate;
pub mod zone;

pub use graph::{build_graph, SocialGraph};
pub use heatmap::{build_circles, export_layer, filter_antennas, FilterParams, HeatmapCircle, LayerFormat, Preset};
pub use homes::{detect_homes, is_weekday_night, HomeAssignment, NightWindowConfig};
pub use ingest::{
    filter_users_by_activity, load_antennas, parse_cdr_stream, ActivityFilterConfig, AntennaId, AntennaRegistry,
    CallLog, CallRecord, Direction, IngestError, IngestReport, ParseMode, ParseOptions,
};
pub use risk::{compute_indicators, residents_of_zone, tag_vulnerable, AntennaIndicators};
pub use users::{UserId, UserTable};
pub use zone::{point_in_zone, EndemicZone, GeoPoint};
