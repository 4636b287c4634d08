//! Typed access to the string parameters of a run.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use sphint_core::randmat::Edge;
use sphint_core::{Beta, DMatrix, EntryLaw, Measure};

use crate::config::Origins;
use crate::CliError;

/// Grids longer than this are almost certainly a typo in the step.
const MAX_GRID: usize = 1_000_000;

pub struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    origins: &'a Origins,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Params<'a> {
    pub fn new(map: &'a BTreeMap<String, String>, origins: &'a Origins) -> Self {
        Self { map, origins, used: RefCell::default() }
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let at = self.origins.get(key).cloned().unwrap_or_else(|| format!("--{key}"));
        CliError::Config(format!("{at}: {key}: {msg}"))
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn required(&self, key: &str) -> Result<&'a str, CliError> {
        self.raw(key).ok_or_else(|| CliError::Config(format!("missing required parameter '{key}'")))
    }

    fn number(&self, key: &str, s: &str) -> Result<f64, CliError> {
        s.trim().parse::<f64>().map_err(|_| self.err(key, format!("'{}' is not a number", s.trim())))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let s = self.required(key)?;
        self.number(key, s)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            Some(s) => self.number(key, s),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            Some(s) => s.trim().parse().map_err(|_| self.err(key, format!("'{s}' is not a non-negative integer"))),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key).map(str::trim) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(s) => Err(self.err(key, format!("'{s}' is not a boolean"))),
        }
    }

    pub fn choice<'c>(&self, key: &str, options: &[&'c str], default: Option<&'c str>) -> Result<&'c str, CliError> {
        match self.raw(key) {
            None => default.ok_or_else(|| {
                CliError::Config(format!("missing required parameter '{key}' (one of {})", options.join(", ")))
            }),
            Some(s) => options
                .iter()
                .find(|o| **o == s.trim())
                .copied()
                .ok_or_else(|| self.err(key, format!("'{s}' is not one of {}", options.join(", ")))),
        }
    }

    fn list_of(&self, key: &str, s: &str) -> Result<Vec<f64>, CliError> {
        let v: Vec<f64> = s.split(',').map(|x| self.number(key, x)).collect::<Result<_, _>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(self.err(key, "values must be finite"));
        }
        Ok(v)
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let s = self.required(key)?;
        self.list_of(key, s)
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            Some(s) => self.list_of(key, s),
            None => Ok(default.to_vec()),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let s = self.required(key)?;
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| self.err(key, format!("'{}' is not a non-negative integer", x.trim()))))
            .collect()
    }

    /// `a:b:step` (both ends included) or a comma-separated list.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let s = self.required(key)?;
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => self.list_of(key, s),
            3 => {
                let (a, b, h) = (self.number(key, parts[0])?, self.number(key, parts[1])?, self.number(key, parts[2])?);
                if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(self.err(key, "grid a:b:step needs finite a <= b and step > 0"));
                }
                // tolerate rounding in (b - a) / step so the end point is kept
                let steps = ((b - a) / h + 1e-9).floor();
                if steps >= MAX_GRID as f64 {
                    return Err(self.err(key, format!("grid has more than {MAX_GRID} points")));
                }
                Ok((0..=steps as usize).map(|i| a + i as f64 * h).collect())
            }
            _ => Err(self.err(key, format!("'{s}' is neither a list nor a:b:step"))),
        }
    }

    pub fn beta(&self) -> Result<Beta, CliError> {
        Ok(match self.choice("beta", &["1", "2"], Some("1"))? {
            "1" => Beta::Real,
            _ => Beta::Complex,
        })
    }

    pub fn law(&self) -> Result<EntryLaw, CliError> {
        Ok(match self.choice("law", &["gaussian", "rademacher", "uniform"], Some("gaussian"))? {
            "gaussian" => EntryLaw::Gaussian,
            "rademacher" => EntryLaw::Rademacher,
            _ => EntryLaw::UniformSym,
        })
    }

    /// `semicircle`, `dirac:x`, `atoms:x@w,...`, `uniform:x,...` or a JSON object.
    pub fn measure(&self, key: &str, default: Option<&str>) -> Result<Measure, CliError> {
        let s = match (self.raw(key), default) {
            (Some(s), _) | (None, Some(s)) => s.trim(),
            (None, None) => return Err(CliError::Config(format!("missing required parameter '{key}'"))),
        };
        let bad = |e: sphint_core::Error| self.err(key, e);
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| self.err(key, e));
        }
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "semicircle" if body.is_empty() => Ok(Measure::Semicircle),
            "dirac" => Ok(Measure::dirac(self.number(key, body)?)),
            "uniform" => Measure::uniform(&self.list_of(key, body)?).map_err(bad),
            "atoms" => {
                let atoms = body
                    .split(',')
                    .map(|a| {
                        let (x, w) = a.split_once('@').ok_or_else(|| self.err(key, format!("atom '{a}' is not x@w")))?;
                        Ok((self.number(key, x)?, self.number(key, w)?))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Measure::atoms(atoms).map_err(bad)
            }
            _ => Err(self.err(key, format!("unknown measure '{s}'"))),
        }
    }

    /// Rows separated by `;`, entries by `,`.
    pub fn matrix(&self, key: &str) -> Result<DMatrix<f64>, CliError> {
        let s = self.required(key)?;
        let rows: Vec<Vec<f64>> = s.split(';').map(|r| self.list_of(key, r)).collect::<Result<_, _>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(self.err(key, "matrix must be square"));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `top:x,bottom:y,...`.
    pub fn planted(&self, key: &str) -> Result<Vec<(Edge, f64)>, CliError> {
        let Some(s) = self.raw(key) else { return Ok(Vec::new()) };
        s.split(',')
            .map(|p| {
                let (edge, x) = p.split_once(':').ok_or_else(|| self.err(key, format!("'{p}' is not top:x or bottom:x")))?;
                let edge = match edge.trim() {
                    "top" => Edge::Top,
                    "bottom" => Edge::Bottom,
                    e => return Err(self.err(key, format!("unknown edge '{e}'"))),
                };
                Ok((edge, self.number(key, x)?))
            })
            .collect()
    }

    /// Wraps a core error raised while validating a parameter.
    pub fn invalid(&self, key: &str, e: sphint_core::Error) -> CliError {
        self.used.borrow_mut().insert(key.to_string());
        self.err(key, e)
    }

    /// Rejects parameters the command never looked at.
    pub fn finish(self) -> Result<(), CliError> {
        let used = self.used.borrow().clone();
        match self.map.keys().find(|k| !used.contains(*k)) {
            None => Ok(()),
            Some(k) => Err(self.err(k, "unknown parameter for this command")),
        }
    }
}
