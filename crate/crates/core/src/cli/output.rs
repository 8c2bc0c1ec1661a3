//! Number formatting, run manifests and table writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Config;
use super::CliError;

/// `%.{digits}g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp >= -5 && exp < digits as i32 {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Twelve significant digits, the precision of every data file.
pub fn fmt12(x: f64) -> String {
    fmt_sig(x, 12)
}

/// Provenance of a run: resolved inputs and outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Option<String>,
    pub freq_hz: f64,
    pub kappa_hz: f64,
    pub gamma_hz: f64,
    pub cutoff_hz: f64,
    pub coupling_c_hz: f64,
    pub settings: Vec<(String, String)>,
    pub outputs: Vec<String>,
    /// Only written to the sidecar so data files stay byte-stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &Config) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: cfg.source.as_ref().map(|p| p.display().to_string()),
            freq_hz: cfg.freq_hz,
            kappa_hz: cfg.kappa_hz,
            gamma_hz: cfg.gamma_hz,
            cutoff_hz: cfg.cutoff_hz,
            coupling_c_hz: crate::model::rad_to_hz(cfg.system.g_c()),
            settings: Vec::new(),
            outputs: Vec::new(),
            timestamp: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.settings.push((key.to_string(), value.into()));
    }

    /// `# `-prefixed lines heading every data file.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
        s += &format!("# config: {}\n", self.config.as_deref().unwrap_or("(defaults)"));
        s += &format!(
            "# mechanics.freq_hz = {}\n# cavity.kappa_hz = {}\n# mechanics.gamma_hz = {}\n# bath.cutoff_hz = {}\n# g_c_hz = {} (derived)\n",
            fmt12(self.freq_hz),
            fmt12(self.kappa_hz),
            fmt12(self.gamma_hz),
            fmt12(self.cutoff_hz),
            fmt12(self.coupling_c_hz)
        );
        for (k, v) in &self.settings {
            s += &format!("# {k}: {v}\n");
        }
        s
    }
}

/// A rectangular table of preformatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Comment lines appended after the rows.
    pub footer: Vec<String>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, manifest: &RunManifest, w: &mut dyn Write) -> Result<(), CliError> {
        w.write_all(manifest.comment_block().as_bytes())?;
        {
            let mut csv = csv::WriterBuilder::new().from_writer(&mut *w);
            csv.write_record(&self.header).map_err(csv_err)?;
            for row in &self.rows {
                csv.write_record(row).map_err(csv_err)?;
            }
            csv.flush()?;
        }
        for line in &self.footer {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn json_twin_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    manifest: &'a RunManifest,
    data: &'a T,
}

/// Writes the table (and optional JSON twin plus timestamped sidecar) to
/// `out`, or the table or JSON to `stdout` when there is no path.
pub fn emit<T: Serialize>(
    table: &Table,
    json: &T,
    manifest: &mut RunManifest,
    out: Option<&Path>,
    want_json: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match out {
        None => {
            if want_json {
                serde_json::to_writer_pretty(&mut *stdout, &JsonDoc { manifest, data: json })?;
                writeln!(stdout)?;
            } else {
                table.write_csv(manifest, stdout)?;
            }
        }
        Some(path) => {
            manifest.outputs.push(path.display().to_string());
            if want_json {
                manifest.outputs.push(json_twin_path(path).display().to_string());
            }
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            table.write_csv(manifest, &mut f)?;
            f.flush()?;
            if want_json {
                let mut f = std::io::BufWriter::new(std::fs::File::create(json_twin_path(path))?);
                serde_json::to_writer_pretty(&mut f, &JsonDoc { manifest, data: json })?;
                writeln!(f)?;
                f.flush()?;
            }
            let mut stamped = manifest.clone();
            stamped.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&stamped)? + "\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt12(48.75), "48.75");
        assert_eq!(fmt12(-1000.0), "-1000");
        assert_eq!(fmt12(49.37501085439698), "49.3750108544");
        assert_eq!(fmt12(-998.6850325947269), "-998.685032595");
        assert_eq!(fmt12(1.8e14), "1.8e14");
        assert_eq!(fmt12(1.0025001299), "1.0025001299");
        assert_eq!(fmt12(2.5e-7), "2.5e-7");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(f64::NAN), "nan");
        assert_eq!(fmt_sig(9.9999999999996, 12), "10");
        assert_eq!(fmt_sig(49.37501085439698, 10), "49.37501085");
        assert_eq!(fmt_sig(-998.6850325947269, 10), "-998.6850326");
        assert_eq!(fmt_sig(123456789012345.0, 12), "1.23456789012e14");
    }

    #[test]
    fn round_trip_precision() {
        for x in [1.0 / 3.0, -2.0f64.sqrt() * 1e5, 6.02214076e23, 1.602e-19] {
            let y: f64 = fmt12(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 1e-11);
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = Config::default();
        let mut m = RunManifest::new("eigs", &cfg);
        m.set("grid", "g_khz 40..60 (2 points)");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        t.footer.push("done".into());
        let mut buf = Vec::new();
        t.write_csv(&m, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# eprenorm "));
        assert!(s.contains("# grid: g_khz 40..60 (2 points)\na,b\n1,2\n# done\n"));
        assert!(!s.contains("timestamp"));
    }
}
