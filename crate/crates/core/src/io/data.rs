//! CSV schemas at the IO boundary. Values are in the units named by each
//! column; conversion to SI happens in the command layer.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::readout::QubitState;

/// Formats `x` with 9 significant digits, fixed-point for moderate
/// exponents and scientific otherwise. Trailing zeros are dropped so the
/// text is stable under parse/format round trips.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header-indexed view of one CSV record.
pub struct Cells<'a> {
    record: &'a csv::StringRecord,
    columns: &'a HashMap<String, usize>,
    line: usize,
}

impl Cells<'_> {
    fn raw(&self, name: &str) -> Option<&str> {
        self.columns
            .get(name)
            .and_then(|&i| self.record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn error(&self, message: String) -> Error {
        Error::Parse {
            line: self.line,
            message,
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        self.raw(name).ok_or_else(|| self.error(format!("missing value for `{name}`")))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        let s = self.text(name)?;
        s.parse().map_err(|_| self.error(format!("`{name}`: cannot parse {s:?} as a number")))
    }

    pub fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        match self.raw(name) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| self.error(format!("`{name}`: cannot parse {s:?} as a number"))),
        }
    }

    pub fn u32(&self, name: &str) -> Result<u32> {
        let s = self.text(name)?;
        s.parse().map_err(|_| self.error(format!("`{name}`: cannot parse {s:?} as an integer")))
    }

    pub fn opt_bool(&self, name: &str) -> Result<Option<bool>> {
        match self.raw(name) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(s) => Err(self.error(format!("`{name}`: expected true or false, got {s:?}"))),
        }
    }
}

/// One row of a CSV schema.
pub trait CsvRow: Sized {
    const HEADER: &'static [&'static str];
    /// Columns that may be absent from the header or empty in a row.
    const OPTIONAL: &'static [&'static str] = &[];

    fn to_cells(&self) -> Vec<String>;
    fn from_cells(cells: &Cells) -> Result<Self>;
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

fn opt_bool_cell(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

pub fn write_rows<R: CsvRow>(mut out: impl Write, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.write_record(row.to_cells())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_rows(std::io::BufWriter::new(file), rows)
}

pub fn read_rows<R: CsvRow>(input: impl std::io::Read) -> Result<Vec<R>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let mut columns = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        if !R::HEADER.contains(&name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected column `{name}`; expected {}", R::HEADER.join(", ")),
            });
        }
        if columns.insert(name.to_string(), i).is_some() {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
    }
    for name in R::HEADER {
        if !columns.contains_key(*name) && !R::OPTIONAL.contains(name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(R::from_cells(&Cells {
            record: &record,
            columns: &columns,
            line,
        })?);
    }
    Ok(rows)
}

/// Reads a schema file; errors name the path and, for content errors, the line.
pub fn read_csv<R: CsvRow>(path: &Path) -> Result<Vec<R>> {
    let file = File::open(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_rows(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Input {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        },
        other => other,
    })
}

macro_rules! f64_row {
    ($(#[$meta:meta])* $name:ident { $($field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name {
            $(pub $field: f64,)+
        }

        impl CsvRow for $name {
            const HEADER: &'static [&'static str] = &[$(stringify!($field)),+];

            fn to_cells(&self) -> Vec<String> {
                vec![$(fmt_sig(self.$field)),+]
            }

            fn from_cells(cells: &Cells) -> Result<Self> {
                Ok(Self { $($field: cells.f64(stringify!($field))?,)+ })
            }
        }
    };
}

f64_row!(
    /// Measured lumped-resonator frequencies.
    MeasuredResonatorRow { spiral_length_um, f_measured_ghz }
);
f64_row!(KappaDistanceRow { d_um, kappa_per_s });
f64_row!(RingdownRow { t_s, v_amplitude });
f64_row!(SnrSweepRow { tau_ns, snr_eq1, snr_mc, fidelity });
f64_row!(LkExtractionRow { f_measured_ghz, lk_ph_per_sq });
f64_row!(BudgetRowCsv {
    f_q_ghz,
    t1_diel_us,
    t1_purcell_us,
    t1_total_us,
    t2_limit_us,
});

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceRow {
    pub f_q_ghz: f64,
    pub t1_us: f64,
    pub t1_spread_us: Option<f64>,
    pub t2e_us: Option<f64>,
}

impl CsvRow for CoherenceRow {
    const HEADER: &'static [&'static str] = &["f_q_ghz", "t1_us", "t1_spread_us", "t2e_us"];
    const OPTIONAL: &'static [&'static str] = &["t1_spread_us", "t2e_us"];

    fn to_cells(&self) -> Vec<String> {
        vec![
            fmt_sig(self.f_q_ghz),
            fmt_sig(self.t1_us),
            opt_cell(self.t1_spread_us),
            opt_cell(self.t2e_us),
        ]
    }

    fn from_cells(cells: &Cells) -> Result<Self> {
        Ok(Self {
            f_q_ghz: cells.f64("f_q_ghz")?,
            t1_us: cells.f64("t1_us")?,
            t1_spread_us: cells.opt_f64("t1_spread_us")?,
            t2e_us: cells.opt_f64("t2e_us")?,
        })
    }
}

/// One IQ shot, normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRow {
    pub state: QubitState,
    pub i: f64,
    pub q: f64,
}

impl CsvRow for ShotRow {
    const HEADER: &'static [&'static str] = &["state", "i", "q"];

    fn to_cells(&self) -> Vec<String> {
        vec![self.state.label().to_string(), fmt_sig(self.i), fmt_sig(self.q)]
    }

    fn from_cells(cells: &Cells) -> Result<Self> {
        let state = match cells.text("state")? {
            "g" => QubitState::Ground,
            "e" => QubitState::Excited,
            other => return Err(cells.error(format!("`state` must be g or e, got {other:?}"))),
        };
        Ok(Self {
            state,
            i: cells.f64("i")?,
            q: cells.f64("q")?,
        })
    }
}

/// Spiral sweep output: predicted band per length, with the measured
/// frequency when one was supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralSweepRow {
    pub spiral_length_um: f64,
    pub turns: u32,
    pub f_low_ghz: f64,
    pub f_nominal_ghz: f64,
    pub f_high_ghz: f64,
    pub f_measured_ghz: Option<f64>,
}

impl CsvRow for SpiralSweepRow {
    const HEADER: &'static [&'static str] = &[
        "spiral_length_um",
        "turns",
        "f_low_ghz",
        "f_nominal_ghz",
        "f_high_ghz",
        "f_measured_ghz",
    ];
    const OPTIONAL: &'static [&'static str] = &["f_measured_ghz"];

    fn to_cells(&self) -> Vec<String> {
        vec![
            fmt_sig(self.spiral_length_um),
            self.turns.to_string(),
            fmt_sig(self.f_low_ghz),
            fmt_sig(self.f_nominal_ghz),
            fmt_sig(self.f_high_ghz),
            opt_cell(self.f_measured_ghz),
        ]
    }

    fn from_cells(cells: &Cells) -> Result<Self> {
        Ok(Self {
            spiral_length_um: cells.f64("spiral_length_um")?,
            turns: cells.u32("turns")?,
            f_low_ghz: cells.f64("f_low_ghz")?,
            f_nominal_ghz: cells.f64("f_nominal_ghz")?,
            f_high_ghz: cells.f64("f_high_ghz")?,
            f_measured_ghz: cells.opt_f64("f_measured_ghz")?,
        })
    }
}

/// Generic named result with optional uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityRow {
    pub quantity: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub unit: String,
}

impl QuantityRow {
    pub fn new(quantity: &str, value: f64, unit: &str) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            std_error: None,
            unit: unit.into(),
        }
    }

    pub fn with_error(mut self, err: f64) -> Self {
        self.std_error = Some(err);
        self
    }
}

impl CsvRow for QuantityRow {
    const HEADER: &'static [&'static str] = &["quantity", "value", "std_error", "unit"];
    const OPTIONAL: &'static [&'static str] = &["std_error", "unit"];

    fn to_cells(&self) -> Vec<String> {
        vec![
            self.quantity.clone(),
            fmt_sig(self.value),
            opt_cell(self.std_error),
            self.unit.clone(),
        ]
    }

    fn from_cells(cells: &Cells) -> Result<Self> {
        Ok(Self {
            quantity: cells.text("quantity")?.to_string(),
            value: cells.f64("value")?,
            std_error: cells.opt_f64("std_error")?,
            unit: cells.raw("unit").unwrap_or("").to_string(),
        })
    }
}

/// Per-qubit comparison of measured coherence against the fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceModelRow {
    pub f_q_ghz: f64,
    pub t1_us: f64,
    pub t1_model_us: f64,
    pub t2e_us: Option<f64>,
    pub t2_ratio: Option<f64>,
    pub t2_pass: Option<bool>,
}

impl CsvRow for CoherenceModelRow {
    const HEADER: &'static [&'static str] = &["f_q_ghz", "t1_us", "t1_model_us", "t2e_us", "t2_ratio", "t2_pass"];
    const OPTIONAL: &'static [&'static str] = &["t2e_us", "t2_ratio", "t2_pass"];

    fn to_cells(&self) -> Vec<String> {
        vec![
            fmt_sig(self.f_q_ghz),
            fmt_sig(self.t1_us),
            fmt_sig(self.t1_model_us),
            opt_cell(self.t2e_us),
            opt_cell(self.t2_ratio),
            opt_bool_cell(self.t2_pass),
        ]
    }

    fn from_cells(cells: &Cells) -> Result<Self> {
        Ok(Self {
            f_q_ghz: cells.f64("f_q_ghz")?,
            t1_us: cells.f64("t1_us")?,
            t1_model_us: cells.f64("t1_model_us")?,
            t2e_us: cells.opt_f64("t2e_us")?,
            t2_ratio: cells.opt_f64("t2_ratio")?,
            t2_pass: cells.opt_bool("t2_pass")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bytes<R: CsvRow>(rows: &[R]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_rows(&mut buf, rows).unwrap();
        buf
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(5.0), "5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-0.666666667");
        assert_eq!(fmt_sig(123_456_789.4), "123456789");
        assert_eq!(fmt_sig(1_234_567_891.0), "1.23456789e9");
        assert_eq!(fmt_sig(3.333_333_333_3e6), "3333333.33");
        assert_eq!(fmt_sig(2.151_973_671e-17), "2.15197367e-17");
        assert_eq!(fmt_sig(0.000_012_345_678_91), "0.0000123456789");
        assert_eq!(fmt_sig(9.999_999_999_6), "10");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn formatting_is_a_fixed_point(mantissa in -1.0e3f64..1.0e3, exp in -30i32..30) {
            let x = mantissa * 10f64.powi(exp);
            let s = fmt_sig(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(fmt_sig(y), s);
            if x != 0.0 {
                prop_assert!(((y - x) / x).abs() <= 5.1e-9);
            }
        }
    }

    #[test]
    fn coherence_optional_columns() {
        let text = "f_q_ghz,t1_us,t1_spread_us,t2e_us\n4.1,25,3,\n4.4, 22 ,,41\n";
        let rows: Vec<CoherenceRow> = read_rows(text.as_bytes()).unwrap();
        assert_eq!(rows[0].t1_spread_us, Some(3.0));
        assert_eq!(rows[0].t2e_us, None);
        assert_eq!(rows[1].t1_us, 22.0);
        assert_eq!(rows[1].t2e_us, Some(41.0));

        let short: Vec<CoherenceRow> = read_rows("f_q_ghz,t1_us\n4.1,25\n".as_bytes()).unwrap();
        assert_eq!(short[0].t1_spread_us, None);
    }

    #[test]
    fn header_errors() {
        let missing = read_rows::<RingdownRow>("t_s\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(missing, Error::Parse { line: 1, .. }));
        let extra = read_rows::<RingdownRow>("t_s,v_amplitude,x\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(extra, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_cell_reports_line() {
        let text = "d_um,kappa_per_s\n1,2e6\n2,abc\n";
        match read_rows::<KappaDistanceRow>(text.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("kappa_per_s"));
            }
            other => panic!("{other}"),
        }
        let ragged = "d_um,kappa_per_s\n1,2e6,5\n";
        assert!(matches!(
            read_rows::<KappaDistanceRow>(ragged.as_bytes()).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn every_schema_round_trips() {
        fn check<R: CsvRow + PartialEq + std::fmt::Debug>(rows: Vec<R>) {
            let first = bytes(&rows);
            let back: Vec<R> = read_rows(first.as_slice()).unwrap();
            assert_eq!(back.len(), rows.len());
            assert_eq!(bytes(&back), first);
        }
        check(vec![MeasuredResonatorRow { spiral_length_um: 812.5, f_measured_ghz: 6.123_456_789_12 }]);
        check(vec![KappaDistanceRow { d_um: 10.0, kappa_per_s: 3.333_333_33e6 }]);
        check(vec![RingdownRow { t_s: 1e-9 / 3.0, v_amplitude: -0.01 }]);
        check(vec![SnrSweepRow { tau_ns: 700.0, snr_eq1: 5.0, snr_mc: 4.98, fidelity: 0.999_593_047_98 }]);
        check(vec![LkExtractionRow { f_measured_ghz: 5.5, lk_ph_per_sq: 2.000_000_01 }]);
        check(vec![BudgetRowCsv {
            f_q_ghz: 4.45,
            t1_diel_us: 26.68,
            t1_purcell_us: f64::INFINITY,
            t1_total_us: 26.68,
            t2_limit_us: 53.36,
        }]);
        check(vec![
            CoherenceRow { f_q_ghz: 4.1, t1_us: 25.0, t1_spread_us: None, t2e_us: Some(47.0) },
            CoherenceRow { f_q_ghz: 4.2, t1_us: 24.0, t1_spread_us: Some(2.5), t2e_us: None },
        ]);
        check(vec![
            ShotRow { state: QubitState::Ground, i: 0.1, q: -2.5 },
            ShotRow { state: QubitState::Excited, i: 1.0 / 7.0, q: 3.0 },
        ]);
        check(vec![SpiralSweepRow {
            spiral_length_um: 900.0,
            turns: 4,
            f_low_ghz: 5.9,
            f_nominal_ghz: 6.1,
            f_high_ghz: 6.2,
            f_measured_ghz: None,
        }]);
        check(vec![QuantityRow::new("kappa", 3.3e6, "1/s").with_error(1e4), QuantityRow::new("n", 10.0, "")]);
        check(vec![CoherenceModelRow {
            f_q_ghz: 4.0,
            t1_us: 30.0,
            t1_model_us: 29.7,
            t2e_us: Some(50.0),
            t2_ratio: Some(50.0 / 60.0),
            t2_pass: Some(true),
        }]);
    }

    #[test]
    fn file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t_s,v_amplitude\n0,1\nx,2\n").unwrap();
        match read_csv::<RingdownRow>(&path).unwrap_err() {
            Error::Input { path: p, message } => {
                assert_eq!(p, path);
                assert!(message.starts_with("line 3"), "{message}");
            }
            other => panic!("{other}"),
        }
    }
}
