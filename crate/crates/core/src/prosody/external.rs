use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ProsodyConstraints, ProsodyContext, ProsodyError, ProsodyTargets};
use crate::audio::HOP_SECONDS;
use crate::pitch::{PitchContour, PitchGrid};
use crate::process::{run_with_timeout, CommandSpec, ProcessError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalPins {
    pub pinned_durations: BTreeMap<usize, f64>,
    pub pinned_pitch: BTreeMap<usize, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalContext {
    pub before: ProsodyContext,
    pub after: ProsodyContext,
}

/// Written as JSON to the generator's stdin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalRequest {
    pub phonemes: Vec<String>,
    pub constraints: ExternalPins,
    pub context: ExternalContext,
    pub hop: f64,
}

impl ExternalRequest {
    pub fn new(region: &[String], constraints: &ProsodyConstraints) -> Self {
        Self {
            phonemes: region.to_vec(),
            constraints: ExternalPins {
                pinned_durations: constraints.pinned_durations.clone(),
                pinned_pitch: constraints.pinned_pitch.clone(),
            },
            context: ExternalContext {
                before: constraints.context_before.clone(),
                after: constraints.context_after.clone(),
            },
            hop: HOP_SECONDS,
        }
    }
}

/// Expected on the generator's stdout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalResponse {
    pub durations: Vec<f64>,
    pub f0: Vec<Option<f64>>,
    pub voiced: Vec<bool>,
}

/// Runs an external generator and accepts its output only if it honours every
/// target invariant and pin.
pub fn external_generator(
    command: &CommandSpec,
    region: &[String],
    constraints: &ProsodyConstraints,
    grid: &PitchGrid,
    timeout: Duration,
) -> Result<ProsodyTargets, ProsodyError> {
    constraints.validate(region.len(), grid)?;
    let request = serde_json::to_vec(&ExternalRequest::new(region, constraints)).expect("request serializes");
    let stdout = run_with_timeout(command, &request, timeout).map_err(|e| match e {
        ProcessError::Timeout(t) => ProsodyError::Timeout(t),
        other => ProsodyError::Process(other),
    })?;
    let response: ExternalResponse =
        serde_json::from_slice(&stdout).map_err(|e| ProsodyError::Schema(e.to_string()))?;
    if response.durations.len() != region.len() {
        return Err(ProsodyError::Schema(format!(
            "{} durations for {} phonemes",
            response.durations.len(),
            region.len()
        )));
    }
    let pitch = PitchContour::from_parts(HOP_SECONDS, response.f0, &response.voiced)
        .map_err(|e| ProsodyError::Schema(e.to_string()))?;
    let targets = ProsodyTargets {
        durations: response.durations,
        pitch,
    };
    targets.check_invariants().map_err(ProsodyError::ConstraintViolation)?;
    targets
        .check_pins(constraints, grid)
        .map_err(ProsodyError::ConstraintViolation)?;
    Ok(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::DEFAULT_TIMEOUT;

    fn grid() -> PitchGrid {
        PitchGrid::new(200f64.log2(), 0.25).unwrap()
    }

    fn region() -> Vec<String> {
        vec!["AA".into(), "S".into()]
    }

    fn stub(response: &str) -> CommandSpec {
        CommandSpec::shell(format!("cat > /dev/null; printf '%s' '{response}'"))
    }

    const VALID: &str = r#"{"durations":[0.02,0.01],"f0":[200.0,210.0,null],"voiced":[true,true,false]}"#;

    #[test]
    fn valid_output_is_accepted_verbatim() {
        let t = external_generator(&stub(VALID), &region(), &Default::default(), &grid(), DEFAULT_TIMEOUT).unwrap();
        assert_eq!(t.durations, vec![0.02, 0.01]);
        assert_eq!(t.pitch.f0, vec![Some(200.0), Some(210.0), None]);
    }

    #[test]
    fn request_reaches_stdin() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("req.json");
        let cmd = CommandSpec::shell(format!("cat > {}; printf '%s' '{VALID}'", path.display()));
        let mut c = ProsodyConstraints::default();
        c.pinned_durations.insert(0, 0.02);
        external_generator(&cmd, &region(), &c, &grid(), DEFAULT_TIMEOUT).unwrap();
        let req: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(req["phonemes"], serde_json::json!(["AA", "S"]));
        assert_eq!(req["hop"], serde_json::json!(0.01));
        assert_eq!(req["constraints"]["pinned_durations"]["0"], serde_json::json!(0.02));
        assert!(req["context"]["before"].is_object());
    }

    #[test]
    fn error_kinds_are_distinct() {
        let g = grid();
        let none = ProsodyConstraints::default();
        let long = r#"{"durations":[0.9,0.01],"f0":[],"voiced":[]}"#;
        assert!(matches!(
            external_generator(&stub(long), &region(), &none, &g, DEFAULT_TIMEOUT),
            Err(ProsodyError::ConstraintViolation(m)) if m.contains("0.9")
        ));
        let mut pinned = ProsodyConstraints::default();
        pinned.pinned_pitch.insert(1, Some(250.0));
        match external_generator(&stub(VALID), &region(), &pinned, &g, DEFAULT_TIMEOUT) {
            Err(ProsodyError::ConstraintViolation(m)) => assert!(m.contains("frame 1"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            external_generator(&stub("not json"), &region(), &none, &g, DEFAULT_TIMEOUT),
            Err(ProsodyError::Schema(_))
        ));
        assert!(matches!(
            external_generator(&CommandSpec::shell("exit 1"), &region(), &none, &g, DEFAULT_TIMEOUT),
            Err(ProsodyError::Process(ProcessError::Failed { .. }))
        ));
        assert!(matches!(
            external_generator(&CommandSpec::shell("sleep 5"), &region(), &none, &g, Duration::from_millis(200)),
            Err(ProsodyError::Timeout(_))
        ));
        let wrong_frames = r#"{"durations":[0.02,0.01],"f0":[200.0],"voiced":[true]}"#;
        assert!(matches!(
            external_generator(&stub(wrong_frames), &region(), &none, &g, DEFAULT_TIMEOUT),
            Err(ProsodyError::ConstraintViolation(_))
        ));
    }
}
