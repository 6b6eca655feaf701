use std::io::Write;
use std::path::Path;

use cartanflow::{Error, SpaceDescriptor};
use serde::Serialize;

/// Library error or a failure to write the result.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(Error::Consistency(_)) => 3,
            CliError::Lib(_) => 2,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(Error::Contract(_)) => "contract",
            CliError::Lib(Error::Validation(_)) => "validation",
            CliError::Lib(Error::Degenerate(_)) => "degenerate",
            CliError::Lib(Error::Consistency(_)) => "consistency",
            CliError::Lib(Error::Unsupported(_)) => "unsupported",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json_line(&self) -> String {
        let message = match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Io(m) => m.clone(),
        };
        serde_json::json!({ "error": self.kind(), "code": self.exit_code(), "message": message }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Provenance block attached to every result file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub class: String,
    pub m: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Meta {
    pub fn new(space: &SpaceDescriptor, seed: Option<u64>) -> Self {
        Meta {
            tool: "cartanflow",
            version: env!("CARGO_PKG_VERSION"),
            class: space.kind().to_string(),
            m: space.m(),
            n: space.n(),
            seed,
        }
    }

    /// `# key=value` comment line heading a CSV file.
    pub fn csv_comment(&self) -> String {
        let mut s = format!("# tool={} version={} class={} m={} n={}", self.tool, self.version, self.class, self.m, self.n);
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s.push('\n');
        s
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    emit(path, s.as_bytes())
}

/// CSV with a metadata comment line. `None` cells are left blank.
pub fn emit_csv(path: Option<&Path>, meta: &Meta, header: &[String], rows: &[Vec<Option<f64>>]) -> CliResult<()> {
    let mut buf = meta.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default())).map_err(io)?;
        }
        w.flush()?;
    }
    emit(path, &buf)
}
