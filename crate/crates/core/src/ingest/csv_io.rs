use std::io::{Read, Write};

use thiserror::Error;

use crate::model::{
    validate_ais_record, validate_iot_record, AisRecord, FieldMap, IotRecord, ValidationError,
    AIS_COLUMNS, IOT_COLUMNS,
};

/// Strict parsing stops at the first bad row; lenient parsing collects row errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {cause}")]
pub struct RowError {
    pub line: u64,
    pub cause: ValidationError,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error(transparent)]
    Row(#[from] RowError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    /// Always empty in strict mode.
    pub row_errors: Vec<RowError>,
}

fn parse_table<R: Read, T>(
    mut input: R,
    columns: &[&str],
    mode: ParseMode,
    validate: impl Fn(&FieldMap) -> Result<T, ValidationError>,
) -> Result<Parsed<T>, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first_line = text.lines().next().unwrap_or_default();
    let delimiter = if first_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.iter().map(String::as_str).ne(columns.iter().copied()) {
        return Err(IngestError::HeaderMismatch {
            expected: columns.iter().map(|s| s.to_string()).collect(),
            found: header,
        });
    }

    let mut out = Parsed {
        records: Vec::new(),
        row_errors: Vec::new(),
    };
    for row in reader.records() {
        let row = row?;
        if row.iter().all(str::is_empty) {
            continue;
        }
        let line = row.position().map_or(0, |p| p.line());
        let map: FieldMap = columns
            .iter()
            .zip(row.iter())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        match validate(&map) {
            Ok(rec) => out.records.push(rec),
            Err(cause) => {
                let err = RowError { line, cause };
                match mode {
                    ParseMode::Strict => return Err(err.into()),
                    ParseMode::Lenient => out.row_errors.push(err),
                }
            }
        }
    }
    Ok(out)
}

/// Parses an AIS export whose header is exactly [`AIS_COLUMNS`]. Comma or tab
/// delimited.
pub fn parse_ais_csv<R: Read>(input: R, mode: ParseMode) -> Result<Parsed<AisRecord>, IngestError> {
    parse_table(input, &AIS_COLUMNS, mode, validate_ais_record)
}

pub fn parse_iot_csv<R: Read>(input: R, mode: ParseMode) -> Result<Parsed<IotRecord>, IngestError> {
    parse_table(input, &IOT_COLUMNS, mode, validate_iot_record)
}

fn write_table<W: Write>(
    out: W,
    columns: &[&str],
    rows: impl Iterator<Item = FieldMap>,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for map in rows {
        w.write_record(columns.iter().map(|c| map[*c].as_str()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ais_csv<W: Write>(out: W, records: &[AisRecord]) -> Result<(), IngestError> {
    write_table(out, &AIS_COLUMNS, records.iter().map(AisRecord::to_field_map))
}

pub fn write_iot_csv<W: Write>(out: W, records: &[IotRecord]) -> Result<(), IngestError> {
    write_table(out, &IOT_COLUMNS, records.iter().map(IotRecord::to_field_map))
}
