//! CSV ingestion for AIS and IoT exports, and the synthetic traffic generator.

mod csv_io;
mod synth;

pub use csv_io::{
    parse_ais_csv, parse_iot_csv, write_ais_csv, write_iot_csv, IngestError, ParseMode, Parsed,
    RowError,
};
pub use synth::{
    default_route_templates, generate_traffic, speed_multiplier, Arrival, SynthConfig, SynthError,
    Traffic, PORT_OF_BUSAN,
};
