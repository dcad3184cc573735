//! Config-file layer and grid parsing. Explicit flags always win over the
//! file; the file's `[command]` table wins over its top-level keys.

use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Evenly spaced points `lo, ..., hi`, written `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(format!("grid bounds must be finite (got {lo}:{hi})"));
        }
        if lo >= hi {
            return Err(format!("grid needs lo < hi (got {lo}:{hi})"));
        }
        if n < 2 {
            return Err(format!("grid needs n >= 2 (got {n})"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, got '{s}'"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
        let n = n.trim().parse::<usize>().map_err(|_| format!("'{n}' is not a point count"))?;
        Grid::new(num(lo)?, num(hi)?, n)
    }
}

const COMMANDS: [&str; 7] = [
    "density",
    "potential",
    "stationary",
    "value",
    "simulate",
    "exit-lt",
    "validate",
];

/// Keys from a TOML config file, already narrowed to one command.
#[derive(Debug, Default)]
pub struct Layer {
    table: toml::Table,
}

impl Layer {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut root: toml::Table = text
            .parse()
            .map_err(|e| CliError::Args(format!("config {}: {e}", path.display())))?;
        let section = root.remove(command);
        // Other commands' sections are irrelevant here.
        root.retain(|k, _| !COMMANDS.contains(&k));
        match section {
            Some(toml::Value::Table(t)) => root.extend(t),
            Some(_) => return Err(CliError::Args(format!("config key '{command}' must be a table"))),
            None => {}
        }
        Ok(Self { table: root })
    }

    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(key)
            .or_else(|| self.table.get(&key.replace('-', "_")))
    }

    fn number(key: &str, v: &toml::Value) -> Result<f64, CliError> {
        match v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            _ => Err(CliError::Args(format!("config key '{key}' must be a number"))),
        }
    }

    pub fn opt_f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        match (flag, self.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(v)) => Self::number(key, v).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn f64(&self, flag: Option<f64>, key: &str) -> Result<f64, CliError> {
        self.opt_f64(flag, key)?
            .ok_or_else(|| CliError::Args(format!("missing --{key}")))
    }

    pub fn opt_u64(&self, flag: Option<u64>, key: &str) -> Result<Option<u64>, CliError> {
        match (flag, self.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(toml::Value::Integer(i))) if *i >= 0 => Ok(Some(*i as u64)),
            (None, Some(_)) => Err(CliError::Args(format!(
                "config key '{key}' must be a non-negative integer"
            ))),
            (None, None) => Ok(None),
        }
    }

    pub fn opt_string(&self, flag: Option<String>, key: &str) -> Result<Option<String>, CliError> {
        match (flag, self.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(toml::Value::String(s))) => Ok(Some(s.clone())),
            (None, Some(_)) => Err(CliError::Args(format!("config key '{key}' must be a string"))),
            (None, None) => Ok(None),
        }
    }

    /// A list of values: a flag list, or a number or array in the file.
    pub fn opt_list(&self, flag: Option<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| Self::number(key, v))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Self::number(key, v).map(|x| Some(vec![x])),
        }
    }

    pub fn list(&self, flag: Option<Vec<f64>>, key: &str) -> Result<Vec<f64>, CliError> {
        self.opt_list(flag, key)?
            .ok_or_else(|| CliError::Args(format!("missing --{key}")))
    }

    fn opt_grid(&self, flag: Option<Grid>, key: &str) -> Result<Option<Grid>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        let bad = |msg: String| CliError::Args(format!("config key '{key}': {msg}"));
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => s.parse().map(Some).map_err(bad),
            Some(toml::Value::Table(t)) => {
                let field = |name: &str| {
                    t.get(name)
                        .ok_or_else(|| bad(format!("missing '{name}'")))
                        .and_then(|v| Self::number(key, v))
                };
                let n = field("n")?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(bad(format!("n must be a whole number (got {n})")));
                }
                Grid::new(field("lo")?, field("hi")?, n as usize).map(Some).map_err(bad)
            }
            Some(_) => Err(bad("expected \"lo:hi:n\" or {lo, hi, n}".into())),
        }
    }

    /// Points from either `--<name>-grid lo:hi:n` or `--<name> v1,v2,...`.
    /// A flag of either kind beats both file keys.
    pub fn points(
        &self,
        grid: Option<Grid>,
        list: Option<Vec<f64>>,
        name: &str,
    ) -> Result<Vec<f64>, CliError> {
        let grid_key = format!("{name}-grid");
        if grid.is_some() && list.is_some() {
            return Err(CliError::Args(format!("give either --{grid_key} or --{name}, not both")));
        }
        if let Some(g) = grid {
            return Ok(g.points());
        }
        if let Some(l) = list {
            return Ok(l);
        }
        match (self.opt_grid(None, &grid_key)?, self.opt_list(None, name)?) {
            (Some(_), Some(_)) => Err(CliError::Args(format!(
                "config gives both '{grid_key}' and '{name}'"
            ))),
            (Some(g), None) => Ok(g.points()),
            (None, Some(l)) => Ok(l),
            (None, None) => Err(CliError::Args(format!("missing --{grid_key} or --{name}"))),
        }
    }
}
