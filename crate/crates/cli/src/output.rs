use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use npcrank_core::criteria::CriterionError;
use npcrank_core::data::DataError;
use npcrank_core::metrics::MetricsError;
use npcrank_core::simulate::SimulationError;
use npcrank_core::umbrella::UmbrellaError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input; exit status 2.
    Invalid(String),
    /// Failure while computing; exit status 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(2),
            CliError::Compute(_) => ExitCode::from(1),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Compute(m) => m,
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Compute(format!("i/o error: {e}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn is_input_problem(e: &CriterionError) -> bool {
    match e {
        CriterionError::Data(_)
        | CriterionError::InvalidSplitCount(_)
        | CriterionError::InvalidPriorRatio(_)
        | CriterionError::MissingNpParameters
        | CriterionError::Umbrella(
            UmbrellaError::InvalidAlpha(_) | UmbrellaError::InvalidDelta(_),
        ) => true,
        CriterionError::Feature { source, .. } => is_input_problem(source),
        _ => false,
    }
}

impl From<CriterionError> for CliError {
    fn from(e: CriterionError) -> Self {
        if is_input_problem(&e) {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::SampleTooSmall(_) | SimulationError::NoReps => {
                CliError::Invalid(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Criterion(c) => c.into(),
            MetricsError::Data(d) => d.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// The command-line spelling of an enum flag value.
pub fn value_name<V: clap::ValueEnum>(v: V) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// `%g`-style formatting with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        trim_zeros(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `# key=value` lines describing a run.
#[derive(Debug, Default)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Self::default();
        h.push("command", command);
        h.push("version", env!("CARGO_PKG_VERSION"));
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            writeln!(out, "# {k}={v}").expect("write to string");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| invalid(format!("cannot create {}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}
