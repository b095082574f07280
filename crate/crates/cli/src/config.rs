use std::path::Path;

use fctl_core::{AllocationMethod, FctlError, IntersectionSpec, RoundingPolicy};
use serde::Deserialize;

use crate::CliError;

fn yes() -> bool {
    true
}

/// One JSON run description. Command-line flags override the optional fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub intersection: IntersectionSpec,
    /// Green times to evaluate; allocated with `method` when absent.
    #[serde(default)]
    pub greens: Option<Vec<f64>>,
    #[serde(default)]
    pub method: Option<AllocationMethod>,
    #[serde(default)]
    pub rounding: Option<RoundingPolicy>,
    /// Cap on contour quadrature points.
    #[serde(default)]
    pub quadrature_max: Option<usize>,
    /// Compute exact values next to the approximations.
    #[serde(default = "yes")]
    pub exact: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            );
            // a well-formed but overloaded intersection is a model problem, not a schema one
            if inner.to_string().starts_with("infeasible:") {
                CliError::Core(FctlError::Infeasible(msg))
            } else {
                CliError::Config(msg)
            }
        })?;
        if let Some(greens) = &config.greens {
            let n = config.intersection.lanes().len();
            if greens.len() != n {
                return Err(CliError::Config(format!(
                    "greens: {} values given for {n} lanes",
                    greens.len()
                )));
            }
            if let Some(i) = greens.iter().position(|g| !(*g > 0.0)) {
                return Err(CliError::Config(format!(
                    "greens[{i}]: green time {} must be positive",
                    greens[i]
                )));
            }
        }
        if config.quadrature_max == Some(0) {
            return Err(CliError::Config("quadrature_max must be positive".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            CliError::Core(FctlError::Infeasible(msg)) => {
                CliError::Core(FctlError::Infeasible(format!("{}: {msg}", path.display())))
            }
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LANE: &str = r#"{
        "intersection": {
            "cycle": 100, "lost_time": 5,
            "lanes": [
                {"arrival": {"kind": "poisson", "mean": 0.4}},
                {"arrival": {"kind": "geometric", "mean": 0.4}}
            ]
        },
        "method": "refined"
    }"#;

    #[test]
    fn parses_defaults() {
        let c = RunConfig::from_json(TWO_LANE).unwrap();
        assert_eq!(c.method, Some(AllocationMethod::Refined));
        assert!(c.exact && c.greens.is_none());
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let bad = TWO_LANE.replace("\"mean\": 0.4}}\n", "\"mean\": 0.4, \"rate\": 1}}\n");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("intersection.lanes[1].arrival"), "{err}");
        assert!(err.contains("line"), "{err}");
        let bad = TWO_LANE.replace("\"method\"", "\"methd\"");
        assert!(RunConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("methd"));
    }

    #[test]
    fn greens_must_match_lanes() {
        let bad = TWO_LANE.replace("\"method\": \"refined\"", "\"greens\": [40]");
        assert!(matches!(
            RunConfig::from_json(&bad),
            Err(CliError::Config(_))
        ));
    }
}
