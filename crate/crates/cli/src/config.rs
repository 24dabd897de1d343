//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Subcommand {
    Flow,
    Soliton,
    Bounds,
    Ode,
    Holder,
    Measure,
    Sweep,
}

impl Subcommand {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcommand::Flow => "flow",
            Subcommand::Soliton => "soliton",
            Subcommand::Bounds => "bounds",
            Subcommand::Ode => "ode",
            Subcommand::Holder => "holder",
            Subcommand::Measure => "measure",
            Subcommand::Sweep => "sweep",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Subcommand::Flow => &[
                "n", "alpha", "p", "field", "body", "nodes", "t_end", "snapshots", "safety",
                "radius_tol", "extinction_tol",
            ],
            Subcommand::Soliton => &["n", "alpha", "p", "body", "nodes", "t_end", "snapshots", "deviation_tol"],
            Subcommand::Bounds => &["n", "alpha", "p", "field", "body", "nodes", "snapshots", "ratio_cap"],
            Subcommand::Ode => &["n", "p", "m", "r0", "tol", "nodes", "residual_tol"],
            Subcommand::Holder => &[
                "source", "n", "p", "m", "r0", "tol", "nodes", "expect_slope", "slope_tol",
                "residual_threshold", "r_lo", "r_hi", "samples",
            ],
            Subcommand::Measure => &[
                "n", "p", "m", "r0", "tol", "nodes", "cap_start", "cap_count", "mass_fraction",
                "density_tol",
            ],
            Subcommand::Sweep => &["target", "workers"],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as clap::ValueEnum>::from_str(s.trim(), false)
            .map_err(|_| CliError::config(format!("unknown subcommand `{s}`")))
    }
}

const COMMON_KEYS: &[&str] = &["out", "plots"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    values: BTreeMap<String, String>,
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_assignment(line).map_err(|e| CliError::config(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.to_string(), v.to_string()))
}

impl RunConfig {
    /// File contents first, then overrides; later assignments win.
    pub fn parse(subcommand: Subcommand, text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, v) in parse_pairs(text)?.into_iter().chain(overrides.iter().cloned()) {
            values.insert(k, v);
        }
        let cfg = Self { subcommand, values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_map(subcommand: Subcommand, values: BTreeMap<String, String>) -> Result<Self, CliError> {
        let cfg = Self { subcommand, values };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::config("empty config"));
        }
        let allowed = |sub: Subcommand, k: &str| COMMON_KEYS.contains(&k) || sub.keys().contains(&k);
        if self.subcommand == Subcommand::Sweep {
            let target = self.target()?;
            for k in self.values.keys() {
                let base = k.strip_prefix("sweep.").unwrap_or(k);
                if !(allowed(Subcommand::Sweep, k) || allowed(target, base)) {
                    return Err(CliError::config(format!("unknown key `{k}` for sweep over {target}")));
                }
            }
            if !self.values.keys().any(|k| k.starts_with("sweep.")) {
                return Err(CliError::config("sweep declares no `sweep.<key>` grid"));
            }
            return Ok(());
        }
        if let Some(k) = self.values.keys().find(|k| !allowed(self.subcommand, k)) {
            return Err(CliError::config(format!("unknown key `{k}` for {}", self.subcommand)));
        }
        self.check_consistency()
    }

    /// p = 1 − 1/α when both are present; m = n + p − 1 likewise.
    fn check_consistency(&self) -> Result<(), CliError> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if let (Some(alpha), Some(p)) = (self.opt_f64("alpha")?, self.opt_f64("p")?) {
            if !close(p, 1.0 - 1.0 / alpha) {
                return Err(CliError::config(format!(
                    "alpha = {alpha} and p = {p} are inconsistent (p must be 1 - 1/alpha)"
                )));
            }
        }
        if let (Some(m), Some(p)) = (self.opt_f64("m")?, self.opt_f64("p")?) {
            let n = self.usize_or("n", 2)? as f64;
            if !close(m, n + p - 1.0) {
                return Err(CliError::config(format!(
                    "m = {m} and p = {p} are inconsistent for n = {n} (m must be n + p - 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::config(format!("cannot parse `{key} = {v}`")))
            })
            .transpose()
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.opt::<f64>(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.opt::<usize>(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        Ok(self.opt::<bool>(key)?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Flow exponent from `alpha`, or from `p` via α = 1/(1−p).
    pub fn alpha(&self, default: f64) -> Result<f64, CliError> {
        match (self.opt_f64("alpha")?, self.opt_f64("p")?) {
            (Some(a), _) => Ok(a),
            (None, Some(p)) if p < 1.0 => Ok(1.0 / (1.0 - p)),
            (None, Some(p)) => Err(CliError::config(format!("p = {p} gives no positive alpha"))),
            (None, None) => Ok(default),
        }
    }

    /// ODE exponent p, from `p` or from `m` via p = m + 1 − n.
    pub fn ode_p(&self, n: usize, default: f64) -> Result<f64, CliError> {
        match (self.opt_f64("p")?, self.opt_f64("m")?) {
            (Some(p), _) => Ok(p),
            (None, Some(m)) => Ok(m + 1.0 - n as f64),
            (None, None) => Ok(default),
        }
    }

    pub fn target(&self) -> Result<Subcommand, CliError> {
        let t: Subcommand = self
            .get("target")
            .ok_or_else(|| CliError::config("sweep needs `target`"))?
            .parse()?;
        if t == Subcommand::Sweep {
            return Err(CliError::config("sweep target cannot be sweep"));
        }
        Ok(t)
    }

    /// Cells of a sweep: the cartesian product of every `sweep.<key> = a, b, ...`
    /// list, each as (sorted cell key, config of the target subcommand).
    pub fn sweep_cells(&self) -> Result<Vec<(String, BTreeMap<String, String>)>, CliError> {
        let mut base = BTreeMap::new();
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for (k, v) in &self.values {
            if let Some(key) = k.strip_prefix("sweep.") {
                let items: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                if items.is_empty() {
                    return Err(CliError::config(format!("sweep axis `{key}` is empty")));
                }
                axes.push((key.to_string(), items));
            } else if k != "target" && k != "workers" && k != "out" {
                base.insert(k.clone(), v.clone());
            }
        }
        let mut cells = vec![(Vec::<(String, String)>::new(), base)];
        for (key, items) in &axes {
            let mut next = Vec::with_capacity(cells.len() * items.len());
            for (label, map) in &cells {
                for item in items {
                    let mut label = label.clone();
                    label.push((key.clone(), item.clone()));
                    let mut map = map.clone();
                    map.insert(key.clone(), item.clone());
                    next.push((label, map));
                }
            }
            cells = next;
        }
        let mut out: Vec<(String, BTreeMap<String, String>)> = cells
            .into_iter()
            .map(|(label, map)| {
                let key = label.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
                (key, map)
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn later_wins() {
        let cfg = RunConfig::parse(Subcommand::Flow, "n = 1\nalpha = 0.5 # comment\nalpha = 1\n", &ov(&[("n", "2")])).unwrap();
        assert_eq!(cfg.get("n"), Some("2"));
        assert_eq!(cfg.alpha(0.3).unwrap(), 1.0);
    }

    #[test]
    fn rejections() {
        assert!(matches!(RunConfig::parse(Subcommand::Flow, "# nothing\n", &[]), Err(CliError::Config(_))));
        assert!(RunConfig::parse(Subcommand::Flow, "bogus = 1", &[]).is_err());
        assert!(RunConfig::parse(Subcommand::Flow, "no equals sign", &[]).is_err());
        assert!(RunConfig::parse(Subcommand::Flow, "alpha = 2\np = 0.25", &[]).is_err());
        assert!(RunConfig::parse(Subcommand::Flow, "alpha = 2\np = 0.5", &[]).is_ok());
        assert!(RunConfig::parse(Subcommand::Ode, "n = 2\nm = 1\np = 0.5", &[]).is_err());
        assert!(RunConfig::parse(Subcommand::Sweep, "target = ode", &[]).is_err());
    }

    #[test]
    fn sweep_grid_is_sorted_product() {
        let cfg = RunConfig::parse(Subcommand::Sweep, "target = holder\nsweep.m = 2, 0.5\nsweep.n = 2,3\nr0 = 0.5", &[]).unwrap();
        let cells = cfg.sweep_cells().unwrap();
        let keys: Vec<&str> = cells.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(keys, ["m=0.5,n=2", "m=0.5,n=3", "m=2,n=2", "m=2,n=3"]);
        assert_eq!(cells[0].1.get("r0").map(String::as_str), Some("0.5"));
    }
}
