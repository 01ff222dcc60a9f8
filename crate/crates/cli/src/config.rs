//! Optional TOML config files: flat `key = value` pairs, either at the top
//! level or under a `[subcommand]` table, the latter taking precedence.
//! Keys use the long flag names; command-line flags override both.

use std::path::Path;

use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Default)]
pub struct Config {
    values: Table,
}

impl Config {
    pub fn load(path: Option<&Path>, section: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, section, allowed)
    }

    pub fn parse(text: &str, section: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let table: Table = text
            .parse()
            .map_err(|e| CliError::Invalid(format!("config: {e}")))?;
        let mut values = Table::new();
        let mut scoped = None;
        for (key, value) in table {
            match value {
                Value::Table(t) if key == section => scoped = Some(t),
                // sections for other subcommands
                Value::Table(_) => {}
                v => {
                    values.insert(key, v);
                }
            }
        }
        if let Some(t) = scoped {
            values.extend(t);
        }
        for key in values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Invalid(format!("config: unknown key {key:?} for {section}")));
            }
        }
        Ok(Self { values })
    }

    fn invalid(key: &str, want: &str) -> CliError {
        CliError::Invalid(format!("config: {key} must be {want}"))
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(Value::Float(f)) => Ok(Some(f.to_string())),
            Some(_) => Err(Self::invalid(key, "a string")),
        }
    }

    pub fn uint<T: TryFrom<i64>>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => T::try_from(*i).map(Some).map_err(|_| Self::invalid(key, "a nonnegative integer in range")),
            Some(_) => Err(Self::invalid(key, "an integer")),
        }
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Self::invalid(key, "a number")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.values.get(key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Self::invalid(key, "true or false")),
        }
    }
}
