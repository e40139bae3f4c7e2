//! Register CSV log: `time_s,lat_deg,lon_deg,speed_kmh,fax,fay,faz,fgx,fgy,fgz,label`.
//!
//! Numbers are written with 6 decimals; `label` is `CON`, `NOR`, `AGG`
//! or empty for unlabeled registers.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::record::{Dataset, DrivingStyle, Provenance, RecordError, Register};

pub const LOG_HEADER: &str = "time_s,lat_deg,lon_deg,speed_kmh,fax,fay,faz,fgx,fgy,fgz,label";
const COLUMNS: [&str; 11] =
    ["time_s", "lat_deg", "lon_deg", "speed_kmh", "fax", "fay", "faz", "fgx", "fgy", "fgz", "label"];

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}, column {column}: {reason} (`{text}`)")]
    Parse { line: u64, column: usize, text: String, reason: String },
}

/// Streaming reader over register CSV rows.
pub struct LogReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    header_checked: bool,
}

impl<R: Read> LogReader<R> {
    pub fn new(reader: R) -> Self {
        let records = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader)
            .into_records();
        Self { records, header_checked: false }
    }
}

impl<R: Read> Iterator for LogReader<R> {
    type Item = Result<Register, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(record) => record,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Some(Err(match e.into_kind() {
                    csv::ErrorKind::Io(io) => LogError::Io(io),
                    other => LogError::Parse { line, column: 0, text: String::new(), reason: format!("{other:?}") },
                }));
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if !self.header_checked {
            self.header_checked = true;
            if record.iter().ne(COLUMNS) {
                return Some(Err(LogError::Parse {
                    line,
                    column: 1,
                    text: record.iter().collect::<Vec<_>>().join(","),
                    reason: format!("expected header `{LOG_HEADER}`"),
                }));
            }
            return self.next();
        }
        Some(parse_row(&record, line))
    }
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<Register, LogError> {
    let err =
        |column: usize, text: &str, reason: String| LogError::Parse { line, column, text: text.to_string(), reason };
    if record.len() != COLUMNS.len() {
        return Err(err(
            record.len().min(COLUMNS.len()),
            &record.iter().collect::<Vec<_>>().join(","),
            format!("expected {} columns, found {}", COLUMNS.len(), record.len()),
        ));
    }
    let mut values = [0.0f64; 10];
    for (i, slot) in values.iter_mut().enumerate() {
        let text = &record[i];
        *slot = text.parse().map_err(|_| err(i + 1, text, format!("`{}` is not a number", COLUMNS[i])))?;
    }
    let label = match &record[10] {
        "" => None,
        "CON" => Some(DrivingStyle::Con),
        "NOR" => Some(DrivingStyle::Nor),
        "AGG" => Some(DrivingStyle::Agg),
        other => return Err(err(11, other, "label must be CON, NOR, AGG or empty".into())),
    };
    let register = Register {
        time_of_day: values[0],
        latitude: values[1],
        longitude: values[2],
        velocity: values[3],
        fa: [values[4], values[5], values[6]],
        fg: [values[7], values[8], values[9]],
        label,
    };
    register.validate().map_err(|e| {
        let RecordError::FieldOutOfRange(name) = e else { unreachable!("validate only reports ranges") };
        let column = match name {
            "time" => 1,
            "latitude" => 2,
            "longitude" => 3,
            "velocity" => 4,
            other => 5 + ["fax", "fay", "faz", "fgx", "fgy", "fgz"].iter().position(|&c| c == other).unwrap_or(0),
        };
        err(column, &record[column - 1], format!("{name} out of range"))
    })
}

pub fn read_log_from<R: Read>(reader: R, provenance: Provenance) -> Result<Dataset, LogError> {
    let registers = LogReader::new(reader).collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(registers, provenance))
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Dataset, LogError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_log_from(file, Provenance::Ingested { source: path.display().to_string() })
}

pub fn write_log_to<W: Write>(data: &Dataset, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{LOG_HEADER}")?;
    for r in &data.registers {
        writeln!(
            w,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.time_of_day,
            r.latitude,
            r.longitude,
            r.velocity,
            r.fa[0],
            r.fa[1],
            r.fa[2],
            r.fg[0],
            r.fg[1],
            r.fg[2],
            r.label.map_or("", DrivingStyle::tag),
        )?;
    }
    w.flush()
}

pub fn write_log(data: &Dataset, path: impl AsRef<Path>) -> io::Result<()> {
    write_log_to(data, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str) -> Result<Dataset, LogError> {
        read_log_from(text.as_bytes(), Provenance::Derived("test".into()))
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read(&format!("{LOG_HEADER}\n")).unwrap().is_empty());
        assert!(read("").unwrap().is_empty());
    }

    #[test]
    fn labeled_row() {
        let text = format!("{LOG_HEADER}\n36000,39.35,-0.45,68.5,0.1,0.2,9.8,0.5,-0.5,1.5,AGG\n");
        let data = read(&text).unwrap();
        assert_eq!(data.registers[0].label, Some(DrivingStyle::Agg));
        assert_eq!(data.registers[0].fg, [0.5, -0.5, 1.5]);
    }

    #[test]
    fn short_row_is_a_parse_error() {
        let text = format!("{LOG_HEADER}\n36000,39.35,-0.45,68.5,0.1,0.2,9.8,0.5,-0.5,1.5\n1,2\n");
        match read(&text) {
            Err(LogError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_report_their_column() {
        let text = format!("{LOG_HEADER}\n36000,95.0,-0.45,68.5,0.1,0.2,9.8,0.5,-0.5,1.5,\n");
        assert!(matches!(read(&text), Err(LogError::Parse { line: 2, column: 2, .. })));
        let text = format!("{LOG_HEADER}\n36000,39.0,-0.45,fast,0.1,0.2,9.8,0.5,-0.5,1.5,\n");
        assert!(matches!(read(&text), Err(LogError::Parse { column: 4, .. })));
        let text = format!("{LOG_HEADER}\n36000,39.0,-0.45,5,0.1,0.2,9.8,0.5,-0.5,1.5,FAST\n");
        assert!(matches!(read(&text), Err(LogError::Parse { column: 11, .. })));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(read("a,b,c\n"), Err(LogError::Parse { line: 1, .. })));
    }

    prop_compose! {
        fn arb_register()(
            t in 0.0..86_399.0f64,
            lat in -90.0..90.0f64,
            lon in -180.0..180.0f64,
            v in 0.0..250.0f64,
            fa in prop::array::uniform3(-30.0..30.0f64),
            fg in prop::array::uniform3(-250.0..250.0f64),
            code in prop::option::of(0u8..3),
        ) -> Register {
            Register { time_of_day: t, latitude: lat, longitude: lon, velocity: v, fa, fg, label: code.and_then(DrivingStyle::from_code) }
        }
    }

    proptest! {
        #[test]
        fn write_then_read_round_trips(regs in prop::collection::vec(arb_register(), 0..30)) {
            let data = Dataset::new(regs, Provenance::Derived("p".into()));
            let mut buf = Vec::new();
            write_log_to(&data, &mut buf).unwrap();
            let back = read_log_from(buf.as_slice(), Provenance::Derived("p".into())).unwrap();
            prop_assert_eq!(back.len(), data.len());
            for (a, b) in data.registers.iter().zip(&back.registers) {
                prop_assert_eq!(a.label, b.label);
                let pairs = [
                    (a.time_of_day, b.time_of_day), (a.latitude, b.latitude), (a.longitude, b.longitude),
                    (a.velocity, b.velocity), (a.fa[0], b.fa[0]), (a.fa[1], b.fa[1]), (a.fa[2], b.fa[2]),
                    (a.fg[0], b.fg[0]), (a.fg[1], b.fg[1]), (a.fg[2], b.fg[2]),
                ];
                for (x, y) in pairs {
                    prop_assert!((x - y).abs() <= 5.0e-7 + 1e-12 * x.abs(), "{x} vs {y}");
                }
            }
        }
    }
}
