//! Run configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    JEval,
    Rate,
    Simulate,
    Verify,
    Spinglass,
    Denoise,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::JEval, Command::Rate, Command::Simulate, Command::Verify, Command::Spinglass, Command::Denoise];

    pub fn name(self) -> &'static str {
        match self {
            Command::JEval => "j-eval",
            Command::Rate => "rate",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Spinglass => "spinglass",
            Command::Denoise => "denoise",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
}

const RESERVED: [&str; 4] = ["command", "seed", "output", "format"];

/// A parsed configuration file; every entry remembers its line.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    pub name: String,
    pub entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(name: &str, text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("{name}:{line_no}: expected 'key = value', got '{line}'")));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("{name}:{line_no}: empty key")));
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value.trim().to_string(), line_no)) {
                return Err(CliError::Config(format!("{name}:{line_no}: duplicate key '{key}' (first set on line {first})")));
            }
        }
        Ok(Self { name: name.to_string(), entries })
    }

    pub fn origin(&self, key: &str) -> Option<String> {
        self.entries.get(key).map(|(_, line)| format!("{}:{line}", self.name))
    }

    fn reserved<T: FromStr<Err = String>>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| CliError::Config(format!("{}:{line}: {e}", self.name))),
        }
    }
}

/// Where each parameter came from, for error messages.
pub type Origins = BTreeMap<String, String>;

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub format: Option<Format>,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    /// Merges a file (if any) with command-line overrides, which win.
    pub fn resolve(file: Option<&ConfigFile>, over: Overrides) -> Result<(Self, Origins), CliError> {
        let empty = ConfigFile::default();
        let file = file.unwrap_or(&empty);
        let command = match (over.command, file.reserved::<Command>("command")?) {
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(CliError::Config("no command given".into())),
        };
        let seed = match over.seed {
            Some(s) => s,
            None => match file.entries.get("seed") {
                Some((v, line)) => v
                    .parse()
                    .map_err(|_| CliError::Config(format!("{}:{line}: seed must be a non-negative integer, got '{v}'", file.name)))?,
                None => 0,
            },
        };
        let output_path = over.output.or_else(|| file.entries.get("output").map(|(v, _)| v.clone()));
        let format = match over.format {
            Some(f) => f,
            None => file.reserved::<Format>("format")?.unwrap_or_default(),
        };
        let mut params = BTreeMap::new();
        let mut origins = Origins::new();
        for (k, (v, _)) in &file.entries {
            if RESERVED.contains(&k.as_str()) {
                continue;
            }
            params.insert(k.clone(), v.clone());
            origins.insert(k.clone(), file.origin(k).expect("present"));
        }
        for (k, v) in over.params {
            origins.insert(k.clone(), format!("--{k}"));
            params.insert(k, v);
        }
        Ok((Self { command, params, seed, output_path, format }, origins))
    }

    /// The flat file form; [`RunConfig::from_ini`] reads it back unchanged.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("command = {}\n", self.command));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("format = {}\n", self.format));
        if let Some(o) = &self.output_path {
            s.push_str(&format!("output = {o}\n"));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn from_ini(name: &str, text: &str) -> Result<(Self, Origins), CliError> {
        let file = ConfigFile::parse(name, text)?;
        Self::resolve(Some(&file), Overrides::default())
    }
}
