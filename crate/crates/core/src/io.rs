//! File formats: mechanism parameter JSON, trajectory CSV, target and layout
//! files, fixtures and atomic writes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{Branch, ParamVector, Topology, Vec2};
use crate::rtclm::Derived;
use crate::target::{cycloid_bt_target, CycloidSpec};
use crate::trajectory::{LegLayout, Trajectory};

/// Version written into every JSON document.
pub const SCHEMA: u32 = 1;
pub const UNITS: &str = "mm-rad";

/// Environment variable that overrides the fixture directory.
pub const FIXTURES_ENV: &str = "CLM_FIXTURES";

fn schema_one() -> u32 {
    SCHEMA
}

fn units() -> String {
    UNITS.into()
}

/// Mechanism parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismFile {
    #[serde(default = "schema_one")]
    pub schema: u32,
    pub topology: Topology,
    pub params: BTreeMap<String, f64>,
    #[serde(default = "units")]
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<Branch>>,
    /// Metric values published alongside the design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub suspect: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suspect_fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub out_of_bounds: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<Derived>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MechanismFile {
    pub fn new(params: &ParamVector, branches: Option<&[Branch]>) -> Self {
        Self {
            schema: SCHEMA,
            topology: params.topology,
            params: params
                .topology
                .param_names()
                .iter()
                .zip(&params.values)
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
            units: UNITS.into(),
            branches: branches.map(|b| b.to_vec()),
            reported: None,
            suspect: false,
            suspect_fields: Vec::new(),
            out_of_bounds: Vec::new(),
            derived: None,
            note: None,
        }
    }

    pub fn param_vector(&self) -> Result<ParamVector> {
        if self.schema != SCHEMA {
            return Err(Error::InvalidParams(format!(
                "unsupported schema {}",
                self.schema
            )));
        }
        if self.units != UNITS {
            return Err(Error::InvalidParams(format!(
                "units must be {UNITS:?}, got {:?}",
                self.units
            )));
        }
        let names = self.topology.param_names();
        if let Some(extra) = self.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::InvalidParams(format!(
                "{} has no parameter {extra:?}",
                self.topology
            )));
        }
        let values = names
            .iter()
            .map(|n| {
                self.params
                    .get(*n)
                    .copied()
                    .ok_or_else(|| Error::InvalidParams(format!("missing parameter {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ParamVector::new(self.topology, values)
    }

    /// Declared branches, or `+1` for every dyad.
    pub fn branches(&self) -> Vec<Branch> {
        self.branches
            .clone()
            .unwrap_or_else(|| vec![Branch::Positive; self.topology.dyad_count()])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text, "mechanism file")
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }
}

/// Deserialises `text`, reporting line and column on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        what: what.into(),
        message: format!(
            "{} at line {} column {}",
            classify(&e),
            e.line(),
            e.column()
        ),
    })
}

fn classify(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    // serde_json appends its own position; keep only the description.
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_mechanism(path: &Path) -> Result<MechanismFile> {
    let text = read_text(path)?;
    MechanismFile::from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            what: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Writes through a sibling temporary file and a rename, so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParams(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

/// `t,x,y` rows; open trajectories carry a `# phase=swing` comment.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    if !traj.closed {
        out.push_str("# phase=swing\n");
    }
    out.push_str("t,x,y\n");
    for (i, p) in traj.points.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i as f64 * traj.dt, p.x, p.y));
    }
    out
}

/// Parses [`trajectory_to_csv`] output. Closed curves take their period
/// from the sample spacing; swing windows cover half a period.
pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let err = |line: usize, msg: String| Error::Parse {
        what: "trajectory csv".into(),
        message: format!("line {line}: {msg}"),
    };
    let mut swing = false;
    let mut header = false;
    let mut ts = Vec::new();
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            swing |= c.trim() == "phase=swing";
            continue;
        }
        if !header {
            if line.replace(' ', "") != "t,x,y" {
                return Err(err(i + 1, format!("expected header t,x,y, got {line:?}")));
            }
            header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(err(
                i + 1,
                format!("expected 3 columns, got {}", cols.len()),
            ));
        }
        let v = cols
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| err(i + 1, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        ts.push(v[0]);
        points.push(Vec2::new(v[1], v[2]));
    }
    if points.len() < 2 {
        return Err(err(0, "fewer than two samples".into()));
    }
    let dt = ts[1] - ts[0];
    if !(dt > 0.0) {
        return Err(err(0, "time column must increase".into()));
    }
    if swing {
        Trajectory::open(points.clone(), dt, 2.0 * dt * (points.len() - 1) as f64)
    } else {
        let n = points.len() as f64;
        Trajectory::closed(points, dt * n)
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    trajectory_from_csv(&read_text(path)?)
}

/// Target file: a cycloid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFile {
    #[serde(default = "schema_one")]
    pub schema: u32,
    #[serde(default = "cycloid_kind")]
    pub kind: String,
    #[serde(flatten)]
    pub cycloid: CycloidSpec,
}

fn cycloid_kind() -> String {
    "cycloid".into()
}

impl Default for TargetFile {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            kind: cycloid_kind(),
            cycloid: CycloidSpec::default(),
        }
    }
}

/// Loads a target as a closed curve with `n` samples: a `.csv` trajectory is
/// used as is, anything else is read as a [`TargetFile`].
pub fn load_target(path: &Path, n: usize) -> Result<Trajectory> {
    let text = read_text(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        return trajectory_from_csv(&text);
    }
    let t: TargetFile = parse_json(&text, &path.display().to_string())?;
    if t.kind != "cycloid" {
        return Err(Error::InvalidParams(format!(
            "unknown target kind {:?}",
            t.kind
        )));
    }
    cycloid_bt_target(&t.cycloid, n)
}

pub fn read_layout(path: &Path) -> Result<LegLayout> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

/// Fixture directory: `$CLM_FIXTURES` or the repository's `fixtures/`.
pub fn fixtures_dir() -> PathBuf {
    match std::env::var_os(FIXTURES_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

/// Loads `<fixtures>/<name>.json`.
pub fn load_fixture(name: &str) -> Result<MechanismFile> {
    read_mechanism(&fixtures_dir().join(format!("{name}.json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mechanism_round_trip() {
        let p = ParamVector::new(
            Topology::FourBar,
            vec![0.1, 3.0, 0.0, 0.0, 30.0, 90.0, 80.0, 100.0, 40.0, -5.0],
        )
        .unwrap();
        let f = MechanismFile::new(&p, Some(&[Branch::Negative]));
        let back = MechanismFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back.param_vector().unwrap(), p);
        assert_eq!(back.branches(), vec![Branch::Negative]);
    }

    #[test]
    fn malformed_json_reports_position() {
        let e = MechanismFile::from_json("{\n  \"topology\": \"four_bar\",\n  \"params\": {,}\n}")
            .unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn missing_and_unknown_names_are_rejected() {
        let mut f = MechanismFile::new(
            &ParamVector::new(
                Topology::FourBar,
                vec![0.1, 3.0, 0.0, 0.0, 30.0, 90.0, 80.0, 100.0, 40.0, -5.0],
            )
            .unwrap(),
            None,
        );
        f.params.remove("r6");
        assert!(f.param_vector().is_err());
        f.params.insert("r6".into(), 1.0);
        f.params.insert("r7".into(), 1.0);
        assert!(f.param_vector().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let bt = cycloid_bt_target(&CycloidSpec::default(), 64).unwrap();
        let back = trajectory_from_csv(&trajectory_to_csv(&bt)).unwrap();
        assert!(back.closed);
        assert!((back.period - bt.period).abs() < 1e-12);
        for (a, b) in back.points.iter().zip(&bt.points) {
            assert_eq!(a, b);
        }
        let wt = Trajectory::open(bt.points[..33].to_vec(), bt.dt, bt.period).unwrap();
        let back = trajectory_from_csv(&trajectory_to_csv(&wt)).unwrap();
        assert!(!back.closed);
        assert!((back.period - bt.period).abs() < 1e-12);
    }

    #[test]
    fn every_fixture_parses() {
        let dir = fixtures_dir();
        let mut count = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "json") {
                let f = read_mechanism(&path).unwrap();
                assert_eq!(f.params.len(), f.topology.arity(), "{}", path.display());
                count += 1;
            }
        }
        assert!(count >= 60);
    }
}
