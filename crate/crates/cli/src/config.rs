//! Experiment configuration. Every struct rejects unknown keys; parse errors carry the
//! JSON-pointer path of the offending value.

use std::fmt;
use std::path::{Path, PathBuf};

use centered_md::adversaries::AdversaryConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PfStatic,
    Dynamic,
    ScaleFree,
    ImplicitOptimistic,
    /// Lazy interval wrapper around `algorithm_params.base`.
    Lazy,
    /// Magnitude (1-D pf_static) times direction (`base` projected onto the unit ball).
    Onedim,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PfStatic => "pf_static",
            Algorithm::Dynamic => "dynamic",
            Algorithm::ScaleFree => "scale_free",
            Algorithm::ImplicitOptimistic => "implicit_optimistic",
            Algorithm::Lazy => "lazy",
            Algorithm::Onedim => "onedim",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintKind {
    Zero,
    #[default]
    PreviousGradient,
    /// `ℓ̂(w) = c‖w‖` with `c = hint_scale`.
    Norm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Uniform(usize),
    /// Inclusive `[start, end]` pairs, contiguous from round 1.
    Intervals(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmParams {
    /// Lipschitz bound; defaults to the adversary's.
    #[serde(rename = "G")]
    pub g_bound: Option<f64>,
    pub eps: Option<f64>,
    pub k: Option<f64>,
    /// Horizon for the dynamic grid; defaults to the adversary's.
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub hint: Option<HintKind>,
    pub hint_scale: Option<f64>,
    pub schedule: Option<ScheduleSpec>,
    pub base: Option<Algorithm>,
    /// Project every play onto the ball of this radius.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComparatorSpec {
    Fixed {
        u: Vec<f64>,
    },
    Piecewise {
        switch_points: Vec<usize>,
        values: Vec<Vec<f64>>,
    },
    /// The comparators that come with a lower-bound adversary.
    Companion,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    CenteredMd,
    Stability,
    StabilitySum,
    Bound,
    IntegralLemmas,
    RangeRatio,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::CenteredMd => "centered_md",
            Check::Stability => "stability",
            Check::StabilitySum => "stability_sum",
            Check::Bound => "bound",
            Check::IntegralLemmas => "integral_lemmas",
            Check::RangeRatio => "range_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub algorithm_params: AlgorithmParams,
    pub adversary: AdversaryConfig,
    pub comparators: Option<ComparatorSpec>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub verify: Vec<Check>,
    /// Sweep group label; runs sharing a label are compared against each other.
    pub group: Option<String>,
}

/// A configuration error located by a JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "invalid config at {at}: {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn new(pointer: &str, message: impl Into<String>) -> Self {
        Self {
            pointer: pointer.to_string(),
            message: message.into(),
        }
    }
}

/// Converts serde_path_to_error's dotted path into a JSON pointer.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let message = e.inner().to_string();
            let mut at = pointer(e.path());
            // Tagged enums buffer their content, so the path stops at the parent object.
            if let Some(key) = message
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
            {
                if !at.ends_with(&format!("/{key}")) {
                    at.push('/');
                    at.push_str(&key.replace('~', "~0").replace('/', "~1"));
                }
            }
            ConfigError::new(&at, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative output paths are resolved against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let mut config = Self::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.outputs.trace, &mut config.outputs.report]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(config)
    }

    /// Semantic checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.algorithm_params;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::new(
                &format!("/algorithm_params/{name}"),
                format!("must be positive and finite, got {x}"),
            )),
            _ => Ok(()),
        };
        positive("G", p.g_bound)?;
        positive("eps", p.eps)?;
        positive("k", p.k)?;
        positive("hint_scale", p.hint_scale)?;
        positive("radius", p.radius)?;
        if self.adversary.horizon() == 0 {
            return Err(ConfigError::new("/adversary/T", "must be at least 1"));
        }
        if p.horizon == Some(0) {
            return Err(ConfigError::new(
                "/algorithm_params/T",
                "must be at least 1",
            ));
        }

        let wrapper = matches!(self.algorithm, Algorithm::Lazy | Algorithm::Onedim);
        match (wrapper, p.base) {
            (true, Some(Algorithm::Lazy | Algorithm::Onedim)) => {
                return Err(ConfigError::new(
                    "/algorithm_params/base",
                    "wrappers cannot be nested",
                ))
            }
            (false, Some(_)) => {
                return Err(ConfigError::new(
                    "/algorithm_params/base",
                    format!(
                        "only used by lazy and onedim, not {}",
                        self.algorithm.name()
                    ),
                ))
            }
            _ => {}
        }
        match (self.algorithm, &p.schedule) {
            (Algorithm::Lazy, None) => {
                return Err(ConfigError::new(
                    "/algorithm_params/schedule",
                    "required for lazy",
                ))
            }
            (Algorithm::Lazy, _) | (_, None) => {}
            (_, Some(_)) => {
                return Err(ConfigError::new(
                    "/algorithm_params/schedule",
                    "only used by lazy",
                ))
            }
        }
        if (p.hint.is_some() || p.hint_scale.is_some())
            && self.algorithm != Algorithm::ImplicitOptimistic
        {
            return Err(ConfigError::new(
                "/algorithm_params/hint",
                "only used by implicit_optimistic",
            ));
        }

        if let Some(ComparatorSpec::Companion) = self.comparators {
            if !matches!(
                self.adversary,
                AdversaryConfig::ConstrainedLb { .. } | AdversaryConfig::UnconstrainedLb { .. }
            ) {
                return Err(ConfigError::new(
                    "/comparators/kind",
                    "companion comparators need a lower-bound adversary",
                ));
            }
        }

        for (i, check) in self.verify.iter().enumerate() {
            if let Some(reason) = self.unsupported(*check) {
                return Err(ConfigError::new(&format!("/verify/{i}"), reason));
            }
        }
        Ok(())
    }

    fn fixed_comparator(&self) -> bool {
        matches!(self.comparators, None | Some(ComparatorSpec::Fixed { .. }))
    }

    fn unsupported(&self, check: Check) -> Option<String> {
        use Algorithm::*;
        let alg = self.algorithm;
        let traced = matches!(alg, PfStatic | Dynamic | ScaleFree | ImplicitOptimistic)
            && self.algorithm_params.radius.is_none();
        let ok = match check {
            Check::CenteredMd | Check::Stability => traced,
            Check::StabilitySum => alg == PfStatic && traced,
            Check::Bound => match alg {
                Dynamic => traced,
                PfStatic | ScaleFree | ImplicitOptimistic => traced && self.fixed_comparator(),
                Lazy | Onedim => false,
            },
            Check::IntegralLemmas => true,
            Check::RangeRatio => alg == ScaleFree,
        };
        (!ok).then(|| {
            format!(
                "check {} is not available for algorithm {} with these parameters",
                check.name(),
                alg.name()
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> ConfigError {
        ExperimentConfig::from_json(text).unwrap_err()
    }

    const ADV: &str = r#""adversary":{"kind":"rademacher","T":100,"seed":1}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c =
            ExperimentConfig::from_json(&format!(r#"{{"algorithm":"scale_free",{ADV}}}"#)).unwrap();
        assert_eq!(c.algorithm, Algorithm::ScaleFree);
        assert_eq!(c.algorithm_params, AlgorithmParams::default());
        assert!(c.verify.is_empty() && c.comparators.is_none() && c.group.is_none());
    }

    #[test]
    fn unknown_keys_report_their_pointer() {
        let e = err(&format!(r#"{{"algorithm":"pf_static",{ADV},"extra":1}}"#));
        assert_eq!(e.pointer, "/extra");
        let e =
            err(r#"{"algorithm":"pf_static","adversary":{"kind":"constant","T":3,"g":[1],"h":2}}"#);
        assert_eq!(e.pointer, "/adversary/h");
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"algorithm_params":{{"eta":1}}}}"#
        ));
        assert_eq!(e.pointer, "/algorithm_params/eta");
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"verify":["bound","nope"]}}"#
        ));
        assert_eq!(e.pointer, "/verify/1");
        assert!(e.to_string().starts_with("invalid config at /verify/1:"));
    }

    #[test]
    fn semantic_errors() {
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"algorithm_params":{{"eps":0}}}}"#
        ));
        assert_eq!(e.pointer, "/algorithm_params/eps");
        let e = err(&format!(r#"{{"algorithm":"lazy",{ADV}}}"#));
        assert_eq!(e.pointer, "/algorithm_params/schedule");
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"algorithm_params":{{"schedule":{{"uniform":2}}}}}}"#
        ));
        assert_eq!(e.pointer, "/algorithm_params/schedule");
        let e = err(&format!(
            r#"{{"algorithm":"onedim",{ADV},"algorithm_params":{{"base":"lazy"}}}}"#
        ));
        assert_eq!(e.pointer, "/algorithm_params/base");
        let e = err(&format!(
            r#"{{"algorithm":"dynamic",{ADV},"algorithm_params":{{"hint":"zero"}}}}"#
        ));
        assert_eq!(e.pointer, "/algorithm_params/hint");
        let e = err(&format!(
            r#"{{"algorithm":"dynamic",{ADV},"comparators":{{"kind":"companion"}}}}"#
        ));
        assert_eq!(e.pointer, "/comparators/kind");
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"verify":["range_ratio"]}}"#
        ));
        assert_eq!(e.pointer, "/verify/0");
        let e = err(&format!(
            r#"{{"algorithm":"pf_static",{ADV},"algorithm_params":{{"radius":2}},"verify":["centered_md"]}}"#
        ));
        assert_eq!(e.pointer, "/verify/0");
        let e = err(r#"{"algorithm":"pf_static","adversary":{"kind":"constrained_lb","T":0}}"#);
        assert_eq!(e.pointer, "/adversary/T");
    }

    #[test]
    fn bound_needs_fixed_comparator_except_dynamic() {
        let piecewise =
            r#""comparators":{"kind":"piecewise","switch_points":[50],"values":[[1],[-1]]}"#;
        assert!(ExperimentConfig::from_json(&format!(
            r#"{{"algorithm":"dynamic",{ADV},{piecewise},"verify":["bound"]}}"#
        ))
        .is_ok());
        assert!(ExperimentConfig::from_json(&format!(
            r#"{{"algorithm":"pf_static",{ADV},{piecewise},"verify":["bound"]}}"#
        ))
        .is_err());
    }

    #[test]
    fn relative_outputs_follow_the_config_file() {
        let dir = std::env::temp_dir().join(format!("cmd-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(
            &path,
            format!(r#"{{"algorithm":"pf_static",{ADV},"outputs":{{"trace":"out/t.csv","report":"/abs/r.json"}}}}"#),
        )
        .unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.outputs.trace.unwrap(), dir.join("out/t.csv"));
        assert_eq!(c.outputs.report.unwrap(), PathBuf::from("/abs/r.json"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
