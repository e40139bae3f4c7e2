use std::io::BufRead;

use thiserror::Error;

pub const KNOTS_TO_KMH: f64 = 1.852;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NmeaError {
    #[error("checksum mismatch: sentence says {expected:02X}, computed {computed:02X}")]
    BadChecksum { expected: u8, computed: u8 },
    #[error("unsupported sentence `{0}`")]
    UnsupportedSentence(String),
    #[error("malformed field `{0}`")]
    MalformedField(&'static str),
}

/// A decoded RMC fix.
///
/// Position and speed are NaN when the receiver left them empty, which
/// only happens on void (`V`) fixes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmeaFix {
    /// UTC seconds since midnight.
    pub utc_time: f64,
    pub latitude: f64,
    pub longitude: f64,
    /// Speed over ground, km/h.
    pub speed_kmh: f64,
    pub valid: bool,
}

/// XOR of every byte in `body` (the text between `$` and `*`).
pub fn nmea_checksum(body: &str) -> u8 {
    body.bytes().fold(0, |acc, b| acc ^ b)
}

/// Parses a `$--RMC` sentence (any talker id), verifying its checksum.
pub fn parse_rmc(sentence: &str) -> Result<NmeaFix, NmeaError> {
    let line = sentence.trim();
    let rest = line.strip_prefix('$').ok_or(NmeaError::MalformedField("start"))?;
    let (body, checksum) = rest.split_once('*').ok_or(NmeaError::MalformedField("checksum"))?;
    let expected = parse_hex_byte(checksum.trim()).ok_or(NmeaError::MalformedField("checksum"))?;
    let computed = nmea_checksum(body);
    if expected != computed {
        return Err(NmeaError::BadChecksum { expected, computed });
    }

    let fields: Vec<&str> = body.split(',').collect();
    let address = fields[0];
    if address.len() != 5 || !address.ends_with("RMC") {
        return Err(NmeaError::UnsupportedSentence(address.to_string()));
    }
    if fields.len() < 10 {
        return Err(NmeaError::MalformedField("field count"));
    }

    let utc_time = parse_utc(fields[1])?;
    let valid = match fields[2] {
        "A" => true,
        "V" => false,
        _ => return Err(NmeaError::MalformedField("status")),
    };
    let latitude = parse_coordinate(fields[3], fields[4], 2, ('N', 'S'), 90.0, valid, "latitude")?;
    let longitude = parse_coordinate(fields[5], fields[6], 3, ('E', 'W'), 180.0, valid, "longitude")?;
    let speed_kmh = match fields[7] {
        "" if !valid => f64::NAN,
        s => {
            let knots: f64 = s.parse().map_err(|_| NmeaError::MalformedField("speed"))?;
            if !knots.is_finite() || knots < 0.0 {
                return Err(NmeaError::MalformedField("speed"));
            }
            knots * KNOTS_TO_KMH
        }
    };

    Ok(NmeaFix { utc_time, latitude, longitude, speed_kmh, valid })
}

fn parse_hex_byte(s: &str) -> Option<u8> {
    if s.len() != 2 {
        return None;
    }
    u8::from_str_radix(s, 16).ok()
}

fn parse_utc(field: &str) -> Result<f64, NmeaError> {
    let err = NmeaError::MalformedField("utc time");
    if field.len() < 6 || !field.as_bytes()[..6].iter().all(u8::is_ascii_digit) {
        return Err(err);
    }
    let hours: u32 = field[0..2].parse().map_err(|_| err.clone())?;
    let minutes: u32 = field[2..4].parse().map_err(|_| err.clone())?;
    let seconds: f64 = field[4..].parse().map_err(|_| err.clone())?;
    if hours > 23 || minutes > 59 || !(0.0..60.0).contains(&seconds) {
        return Err(err);
    }
    Ok(f64::from(hours * 3600 + minutes * 60) + seconds)
}

/// `(d)ddmm.mmmm` plus hemisphere letter to signed decimal degrees.
fn parse_coordinate(
    value: &str,
    hemisphere: &str,
    degree_digits: usize,
    (positive, negative): (char, char),
    limit: f64,
    valid: bool,
    name: &'static str,
) -> Result<f64, NmeaError> {
    if value.is_empty() && !valid {
        return Ok(f64::NAN);
    }
    let err = NmeaError::MalformedField(name);
    let point = value.find('.').unwrap_or(value.len());
    if point != degree_digits + 2 || !value.as_bytes()[..point].iter().all(u8::is_ascii_digit) {
        return Err(err);
    }
    let degrees: f64 = value[..degree_digits].parse().map_err(|_| err.clone())?;
    let minutes: f64 = value[degree_digits..].parse().map_err(|_| err.clone())?;
    if minutes >= 60.0 {
        return Err(err);
    }
    let magnitude = degrees + minutes / 60.0;
    if magnitude > limit {
        return Err(err);
    }
    let mut hemi = hemisphere.chars();
    match (hemi.next(), hemi.next()) {
        (Some(c), None) if c == positive => Ok(magnitude),
        (Some(c), None) if c == negative => Ok(-magnitude),
        _ => Err(NmeaError::MalformedField(if name == "latitude" {
            "latitude hemisphere"
        } else {
            "longitude hemisphere"
        })),
    }
}

/// Result of scanning an NMEA text stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NmeaScan {
    /// Every parsed RMC fix, valid or not, in input order.
    pub fixes: Vec<NmeaFix>,
    pub bad_checksum: usize,
    /// Non-RMC sentences (GGA, GSV, ...), ignored.
    pub unsupported: usize,
    pub malformed: usize,
}

/// Parses every line of an NMEA capture; bad lines are counted, not fatal.
pub fn scan_nmea<R: BufRead>(reader: R) -> std::io::Result<NmeaScan> {
    let mut scan = NmeaScan::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_rmc(&line) {
            Ok(fix) => scan.fixes.push(fix),
            Err(NmeaError::BadChecksum { .. }) => scan.bad_checksum += 1,
            Err(NmeaError::UnsupportedSentence(_)) => scan.unsupported += 1,
            Err(NmeaError::MalformedField(_)) => scan.malformed += 1,
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_checksum(body: &str) -> String {
        format!("${}*{:02X}", body, nmea_checksum(body))
    }

    #[test]
    fn known_sentence_checksum() {
        // Widely circulated example from receiver documentation.
        let s = "$GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W*6A";
        let fix = parse_rmc(s).unwrap();
        assert!(fix.valid);
        assert_eq!(fix.utc_time, 12.0 * 3600.0 + 35.0 * 60.0 + 19.0);
        assert!((fix.latitude - (48.0 + 7.038 / 60.0)).abs() < 1e-12);
        assert!((fix.longitude - (11.0 + 31.0 / 60.0)).abs() < 1e-12);
        assert!((fix.speed_kmh - 22.4 * 1.852).abs() < 1e-12);
    }

    #[test]
    fn latitude_minutes_conversion() {
        let s = with_checksum("GPRMC,101500.00,A,3937.3035,N,00027.0000,W,10.0,0.0,010122,,,A");
        let fix = parse_rmc(&s).unwrap();
        assert!((fix.latitude - 39.621725).abs() < 1e-9);
        assert!((fix.longitude + 0.45).abs() < 1e-9);
        assert!((fix.speed_kmh - 18.52).abs() < 1e-9);
    }

    #[test]
    fn checksum_mismatch() {
        let good = with_checksum("GPRMC,101500.00,A,3937.3035,N,00027.0000,W,10.0,0.0,010122,,,A");
        let bad = good.replace("10.0,0.0", "11.0,0.0");
        assert!(matches!(parse_rmc(&bad), Err(NmeaError::BadChecksum { .. })));
    }

    #[test]
    fn void_fix_with_empty_fields() {
        let s = with_checksum("GPRMC,101500.00,V,,,,,,,010122,,,N");
        let fix = parse_rmc(&s).unwrap();
        assert!(!fix.valid);
        assert!(fix.latitude.is_nan());
    }

    #[test]
    fn other_sentences_are_unsupported() {
        let s = with_checksum("GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,");
        assert_eq!(parse_rmc(&s), Err(NmeaError::UnsupportedSentence("GPGGA".into())));
    }

    #[test]
    fn gnrmc_talker_accepted() {
        let s = with_checksum("GNRMC,000001,A,0000.0000,S,00000.0000,E,0.0,0.0,010122,,,A");
        assert_eq!(parse_rmc(&s).unwrap().utc_time, 1.0);
    }

    #[test]
    fn malformed_fields() {
        let cases = [
            ("GPRMC,1015,A,3937.3035,N,00027.0000,W,10.0,0.0,010122,,,A", "utc time"),
            ("GPRMC,101500,X,3937.3035,N,00027.0000,W,10.0,0.0,010122,,,A", "status"),
            ("GPRMC,101500,A,393.73035,N,00027.0000,W,10.0,0.0,010122,,,A", "latitude"),
            ("GPRMC,101500,A,3937.3035,Q,00027.0000,W,10.0,0.0,010122,,,A", "latitude hemisphere"),
            ("GPRMC,101500,A,3937.3035,N,00027.0000,W,abc,0.0,010122,,,A", "speed"),
            ("GPRMC,101500,A,3937.3035,N", "field count"),
        ];
        for (body, field) in cases {
            assert_eq!(parse_rmc(&with_checksum(body)), Err(NmeaError::MalformedField(field)), "{body}");
        }
        assert_eq!(parse_rmc("GPRMC,101500,A"), Err(NmeaError::MalformedField("start")));
        assert_eq!(parse_rmc("$GPRMC,101500,A"), Err(NmeaError::MalformedField("checksum")));
    }

    #[test]
    fn scan_counts_each_failure_kind() {
        let good = with_checksum("GPRMC,101500.00,A,3937.3035,N,00027.0000,W,10.0,0.0,010122,,,A");
        let corrupted = good.replace("3937", "3938");
        let gga = with_checksum("GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,");
        let text = format!("{good}\n{corrupted}\n\n{gga}\ngarbage\n");
        let scan = scan_nmea(text.as_bytes()).unwrap();
        assert_eq!(scan.fixes.len(), 1);
        assert_eq!((scan.bad_checksum, scan.unsupported, scan.malformed), (1, 1, 1));
    }

    proptest! {
        #[test]
        fn accepted_sentences_reproduce_their_checksum(
            h in 0u32..24, m in 0u32..60, s in 0u32..60,
            lat_deg in 0u32..90, lat_min in 0.0..59.9999f64,
            lon_deg in 0u32..180, lon_min in 0.0..59.9999f64,
            knots in 0.0..150.0f64,
            north: bool, east: bool,
        ) {
            let body = format!(
                "GPRMC,{h:02}{m:02}{s:02}.000,A,{lat_deg:02}{lat_min:07.4},{},{lon_deg:03}{lon_min:07.4},{},{knots:.2},0.0,010122,,,A",
                if north { 'N' } else { 'S' },
                if east { 'E' } else { 'W' },
            );
            let sentence = with_checksum(&body);
            prop_assert!(parse_rmc(&sentence).is_ok());
            let (inner, suffix) = sentence[1..].split_once('*').unwrap();
            prop_assert_eq!(format!("{:02X}", nmea_checksum(inner)), suffix);
        }
    }
}
