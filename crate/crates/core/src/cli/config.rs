use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::control::LabelSet;
use crate::error::{ConfigIssue, Result, SlipError};
use crate::grid::GridSpec;
use crate::slip::SlipConfig;
use crate::subproblem::BnbOptions;

/// Where the tracking target comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSource {
    /// Nodal state values on the state grid.
    File(PathBuf),
    /// A control whose state becomes the target.
    ReferenceControl(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialControl {
    File(PathBuf),
    Constant(i64),
}

/// A validated run configuration. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub control_grid: GridSpec,
    pub state_grid: GridSpec,
    pub eps: f64,
    pub velocity: [f64; 2],
    pub labels: LabelSet,
    pub alpha: f64,
    pub slip: SlipConfig,
    pub target: TargetSource,
    pub initial: InitialControl,
    pub seed: u64,
    /// The configuration text as read, copied into every run directory.
    pub source: String,
}

const REQUIRED: [&str; 12] = [
    "grid.nx",
    "grid.ny",
    "state.nx",
    "state.ny",
    "pde.eps",
    "pde.bx",
    "pde.by",
    "labels",
    "alpha",
    "delta0",
    "sigma",
    "seed",
];

const OPTIONAL: [&str; 7] = [
    "delta_min",
    "max_outer",
    "node_limit",
    "ydata.path",
    "ydata.reference_control.path",
    "v0.path",
    "v0.constant",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn issue(&mut self, key: &str, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            key: key.to_string(),
            line,
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<(usize, String)> {
        self.map.get(key).cloned()
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<(usize, T)> {
        let (line, text) = self.raw(key)?;
        match text.parse::<T>() {
            Ok(v) => Some((line, v)),
            Err(_) => {
                self.issue(key, Some(line), format!("expected {what}, got '{text}'"));
                None
            }
        }
    }

    fn positive_int(&mut self, key: &str) -> Option<usize> {
        let (line, v) = self.parsed::<usize>(key, "a positive integer")?;
        if v == 0 {
            self.issue(key, Some(line), "must be positive");
            return None;
        }
        Some(v)
    }

    fn real(&mut self, key: &str, check: impl Fn(f64) -> bool, range: &str) -> Option<f64> {
        let (line, v) = self.parsed::<f64>(key, "a number")?;
        if !v.is_finite() || !check(v) {
            self.issue(key, Some(line), format!("{key} must {range}"));
            return None;
        }
        Some(v)
    }
}

fn split_lines(text: &str) -> Entries {
    let mut entries = Entries {
        map: BTreeMap::new(),
        issues: Vec::new(),
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            entries.issue(content, Some(line), "expected 'key = value'");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            entries.issue(key, Some(line), "unknown key");
            continue;
        }
        if let Some((first, _)) = entries.map.get(key) {
            let message = format!("duplicate key (first set on line {first})");
            entries.issue(key, Some(line), message);
            continue;
        }
        entries.map.insert(key.to_string(), (line, value.to_string()));
    }
    entries
}

/// Parses and validates a configuration, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

/// As [`parse_config`], resolving relative paths against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let mut e = split_lines(text);
    for key in REQUIRED {
        if !e.map.contains_key(key) {
            e.issue(key, None, "missing required key");
        }
    }

    let nx = e.positive_int("grid.nx");
    let ny = e.positive_int("grid.ny");
    let snx = e.positive_int("state.nx");
    let sny = e.positive_int("state.ny");
    let eps = e.real("pde.eps", |v| v > 0.0, "be positive");
    let bx = e.real("pde.bx", |_| true, "be finite");
    let by = e.real("pde.by", |_| true, "be finite");
    let alpha = e.real("alpha", |v| v > 0.0, "be positive");
    let delta0 = e.real("delta0", |v| v > 0.0, "be positive");
    let sigma = e.real("sigma", |v| v > 0.0 && v < 1.0, "lie in (0,1)");
    let seed = e.parsed::<u64>("seed", "a nonnegative integer").map(|(_, v)| v);

    let labels = e.raw("labels").and_then(|(line, text)| {
        let parsed: std::result::Result<Vec<i64>, _> = text.split(',').map(|s| s.trim().parse::<i64>()).collect();
        match parsed.map_err(|_| "expected comma-separated integers".to_string()).and_then(|v| {
            LabelSet::new(v).map_err(|err| err.to_string())
        }) {
            Ok(l) => Some(l),
            Err(msg) => {
                e.issue("labels", Some(line), msg);
                None
            }
        }
    });

    let delta_min = if e.map.contains_key("delta_min") {
        e.real("delta_min", |v| v > 0.0, "be positive")
    } else {
        // One cell of the control grid.
        nx.zip(ny).map(|(a, b)| 1.0 / (a * b) as f64)
    };
    let max_outer = if e.map.contains_key("max_outer") {
        e.positive_int("max_outer")
    } else {
        Some(200)
    };
    let node_limit = if e.map.contains_key("node_limit") {
        e.positive_int("node_limit")
    } else {
        Some(BnbOptions::default().node_limit)
    };

    let resolve = |p: &str| {
        let path = PathBuf::from(p);
        if path.is_absolute() {
            path
        } else {
            base.join(path)
        }
    };
    let target = match (e.raw("ydata.path"), e.raw("ydata.reference_control.path")) {
        (Some(_), Some((line, _))) => {
            e.issue(
                "ydata.reference_control.path",
                Some(line),
                "give either ydata.path or ydata.reference_control.path, not both",
            );
            None
        }
        (Some((_, p)), None) => Some(TargetSource::File(resolve(&p))),
        (None, Some((_, p))) => Some(TargetSource::ReferenceControl(resolve(&p))),
        (None, None) => {
            e.issue("ydata.path", None, "missing required key (or ydata.reference_control.path)");
            None
        }
    };
    let initial = match (e.raw("v0.path"), e.raw("v0.constant")) {
        (Some(_), Some((line, _))) => {
            e.issue("v0.constant", Some(line), "give either v0.path or v0.constant, not both");
            None
        }
        (Some((_, p)), None) => Some(InitialControl::File(resolve(&p))),
        (None, Some(_)) => {
            let (line, v) = e.parsed::<i64>("v0.constant", "an integer").unzip();
            match (&labels, v) {
                (Some(l), Some(v)) if !l.contains(v) => {
                    e.issue("v0.constant", line, format!("{v} is not one of the labels"));
                    None
                }
                (_, v) => v.map(InitialControl::Constant),
            }
        }
        (None, None) => labels.as_ref().map(|l| InitialControl::Constant(l.min())),
    };

    let control_grid = nx.zip(ny).and_then(|(a, b)| GridSpec::unit(a, b).ok());
    let state_grid = match snx.zip(sny) {
        Some((a, b)) if a < 2 || b < 2 => {
            e.issue("state.nx", e.raw("state.nx").map(|r| r.0), "state grid needs at least 2 intervals per side");
            None
        }
        Some((a, b)) => GridSpec::unit(a, b).ok(),
        None => None,
    };

    if !e.issues.is_empty() {
        e.issues.sort_by_key(|i| (i.line.unwrap_or(0), i.key.clone()));
        return Err(SlipError::Config(e.issues));
    }
    let slip = SlipConfig {
        delta0: delta0.unwrap(),
        sigma: sigma.unwrap(),
        delta_min: delta_min.unwrap(),
        max_outer: max_outer.unwrap(),
        node_limit: node_limit.unwrap(),
        seed: seed.unwrap(),
    };
    Ok(RunConfig {
        control_grid: control_grid.unwrap(),
        state_grid: state_grid.unwrap(),
        eps: eps.unwrap(),
        velocity: [bx.unwrap(), by.unwrap()],
        labels: labels.unwrap(),
        alpha: alpha.unwrap(),
        slip,
        target: target.unwrap(),
        initial: initial.unwrap(),
        seed: seed.unwrap(),
        source: text.to_string(),
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SlipError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
grid.nx = 4
grid.ny = 4
state.nx = 16
state.ny = 16
pde.eps = 0.015
pde.bx = 0.9951847266721969
pde.by = 0.0980171403295606
labels = 0, 1, 2
alpha = 1e-4
delta0 = 0.125
sigma = 1e-4
seed = 3
ydata.reference_control.path = ref.csv   # relative to the config
";

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(SlipError::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn valid_config_with_defaults() {
        let c = parse_config_in(GOOD, Path::new("/cfg")).unwrap();
        assert_eq!(c.slip.delta_min, 1.0 / 16.0);
        assert_eq!(c.slip.max_outer, 200);
        assert_eq!(c.initial, InitialControl::Constant(0));
        assert_eq!(c.target, TargetSource::ReferenceControl(PathBuf::from("/cfg/ref.csv")));
        assert_eq!(c.labels.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn sigma_out_of_range() {
        let text = GOOD.replace("sigma = 1e-4", "sigma = 1.5");
        let v = issues(&text);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "sigma");
        assert_eq!(v[0].line, Some(11));
        assert!(v[0].message.contains("sigma must lie in (0,1)"));
    }

    #[test]
    fn empty_file_names_every_required_key() {
        let v = issues("");
        for key in REQUIRED {
            assert!(v.iter().any(|i| i.key == key), "{key} not reported");
        }
        assert!(v.iter().any(|i| i.key == "ydata.path"));
    }

    #[test]
    fn all_problems_are_reported() {
        let text = GOOD
            .replace("grid.nx = 4", "grid.nx = four")
            .replace("alpha = 1e-4", "alpha = -1")
            + "colour = blue\nseed = 4\nnot a pair\n";
        let v = issues(&text);
        let keys: Vec<&str> = v.iter().map(|i| i.key.as_str()).collect();
        assert!(keys.contains(&"grid.nx"));
        assert!(keys.contains(&"alpha"));
        assert!(keys.contains(&"colour"));
        assert!(keys.contains(&"seed"));
        assert!(keys.contains(&"not a pair"));
    }

    #[test]
    fn exclusive_sources() {
        let text = format!("{GOOD}ydata.path = y.csv\nv0.constant = 7\n");
        let v = issues(&text);
        assert!(v.iter().any(|i| i.key == "ydata.reference_control.path"));
        assert!(v.iter().any(|i| i.key == "v0.constant" && i.message.contains("not one of")));
    }
}
