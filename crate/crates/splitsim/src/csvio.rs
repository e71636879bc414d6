//! CSV output. Floats are written as plain decimals with nine significant
//! digits so files diff cleanly and compare byte for byte.

use std::io::Write;
use std::path::Path;

use splitsim_core::pam4::{Calibration, EyeHistogram, RateEstimate};

use crate::sweep::{Fig3Row, Fig4Row};

pub const FIG3_HEADER: [&str; 7] = ["bitrate_mbps", "variant", "per", "ci_low", "ci_high", "sent", "errored"];
pub const FIG4_HEADER: [&str; 7] = ["bitrate_mbps", "jitter_ms", "per", "ci_low", "ci_high", "sent", "errored"];
pub const EYE_HEADER: [&str; 3] = ["phase_bin", "amplitude_bin", "count"];
pub const BER_HEADER: [&str; 4] = ["stream", "ber", "ci_low", "ci_high"];

/// `x` with nine significant digits in positional notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Round first, then read the exponent of the rounded value.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (8 - exp).max(0) as usize;
    let mantissa: f64 = sci.parse().expect("round trip");
    format!("{mantissa:.decimals$}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_fig3<W: Write>(w: W, rows: &[Fig3Row]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(FIG3_HEADER)?;
    for r in rows {
        let (lo, hi) = r.stats.ci();
        out.write_record([
            sig9(r.stats.bitrate_bps / 1e6),
            r.variant.label().to_string(),
            sig9(r.stats.per()),
            sig9(lo),
            sig9(hi),
            r.stats.sent.to_string(),
            r.stats.errored.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_fig4<W: Write>(w: W, rows: &[Fig4Row]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(FIG4_HEADER)?;
    for r in rows {
        let (lo, hi) = r.stats.ci();
        out.write_record([
            sig9(r.stats.bitrate_bps / 1e6),
            sig9(r.jitter_std.as_ms_f64()),
            sig9(r.stats.per()),
            sig9(lo),
            sig9(hi),
            r.stats.sent.to_string(),
            r.stats.errored.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_eye<W: Write>(w: W, eye: &EyeHistogram) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(EYE_HEADER)?;
    for (phase, bin, count) in eye.cells() {
        out.write_record([phase.to_string(), bin.to_string(), count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ber<W: Write>(w: W, cal: &Calibration) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(BER_HEADER)?;
    let row = |name: &str, r: &RateEstimate| [name.to_string(), sig9(r.rate), sig9(r.ci_low), sig9(r.ci_high)];
    out.write_record(row("msb", &cal.msb))?;
    out.write_record(row("lsb", &cal.lsb))?;
    out.write_record(row("symbol", &cal.symbol))?;
    out.flush()?;
    Ok(())
}

/// Renders in memory first, so a failed render leaves no partial file.
pub fn write_file<F>(path: &Path, body: F) -> std::io::Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    body(&mut buf).map_err(std::io::Error::other)?;
    std::fs::write(path, buf)
}

/// A CSV file read back as strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table { headers, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{Fig3Variant, PointStats};

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(150.0), "150.000000");
        assert_eq!(sig9(0.009554), "0.00955400000");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(20.0 + 130.0 / 6.0), "41.6666667");
        assert_eq!(sig9(9.999999999), "10.0000000");
        assert_eq!(sig9(123456789012.0), "123456789000");
        assert_eq!(sig9(-2.5), "-2.50000000");
    }

    #[test]
    fn fig3_layout() {
        let rows = [Fig3Row {
            variant: Fig3Variant::Pam4Msb,
            stats: PointStats {
                bitrate_bps: 20e6,
                sent: 1000,
                errored: 8,
            },
        }];
        let mut buf = Vec::new();
        write_fig3(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), FIG3_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("20.0000000,pam4-msb,0.00800000000,"));
    }
}
