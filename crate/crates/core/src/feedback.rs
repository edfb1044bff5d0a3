//! Post-grasp verification: the grasp failed if an object of the same class and
//! colour is still close to where the target was.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::classification::ObjectDescriptor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackParams {
    /// Table-plane XY distance (meters) within which a leftover object matches.
    pub dist_tol: f64,
    /// Per-channel mean RGB difference allowed for a colour match.
    pub color_tol: f64,
    pub max_attempts: usize,
}

impl Default for FeedbackParams {
    fn default() -> Self {
        Self {
            dist_tol: 0.10,
            color_tol: 30.0,
            max_attempts: 3,
        }
    }
}

impl FeedbackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dist_tol > 0.0 && self.color_tol > 0.0) {
            return Err(Error::invalid("feedback tolerances must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub success: bool,
    /// Id of the leftover object that made the attempt fail.
    pub matched_id: Option<usize>,
}

pub fn colors_match(a: &[f64; 3], b: &[f64; 3], color_tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= color_tol)
}

/// Checks whether the target is gone from `post_scene`.
pub fn verify_grasp(
    target: &ObjectDescriptor,
    post_scene: &[ObjectDescriptor],
    dist_tol: f64,
    color_tol: f64,
) -> Verification {
    let leftover = post_scene.iter().find(|o| {
        o.class == target.class
            && colors_match(&o.mean_color, &target.mean_color, color_tol)
            && (o.centroid.x - target.centroid.x).hypot(o.centroid.y - target.centroid.y) <= dist_tol
    });
    Verification {
        success: leftover.is_none(),
        matched_id: leftover.map(|o| o.id),
    }
}

/// What the grasp callback is told about the current attempt.
#[derive(Debug, Clone, Copy)]
pub struct GraspAttemptRecord<'a> {
    pub target: &'a ObjectDescriptor,
    /// 1-based.
    pub attempt_index: usize,
    pub max_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptOutcome {
    pub success: bool,
    pub attempts: usize,
    pub log: Vec<VerificationRecord>,
}

/// One JSON line per verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub target_id: usize,
    pub attempt: usize,
    pub result: VerificationResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_id: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationResult {
    Success,
    Failure,
}

impl VerificationRecord {
    pub fn new(target_id: usize, attempt: usize, v: Verification) -> Self {
        Self {
            target_id,
            attempt,
            result: if v.success {
                VerificationResult::Success
            } else {
                VerificationResult::Failure
            },
            matched_id: v.matched_id,
        }
    }
}

/// Grasp, re-observe, verify; repeat on failure up to `params.max_attempts`.
pub fn attempt_loop<O, G, E>(
    target: &ObjectDescriptor,
    mut observe: O,
    mut grasp: G,
    params: &FeedbackParams,
) -> Result<AttemptOutcome>
where
    O: FnMut() -> std::result::Result<Vec<ObjectDescriptor>, E>,
    G: FnMut(&GraspAttemptRecord<'_>),
    E: Display,
{
    params.validate()?;
    let mut log = Vec::new();
    for attempt in 1..=params.max_attempts {
        grasp(&GraspAttemptRecord {
            target,
            attempt_index: attempt,
            max_attempts: params.max_attempts,
        });
        let scene = observe().map_err(|e| Error::Observation {
            attempts: attempt,
            message: e.to_string(),
        })?;
        let v = verify_grasp(target, &scene, params.dist_tol, params.color_tol);
        log.push(VerificationRecord::new(target.id, attempt, v));
        if v.success {
            return Ok(AttemptOutcome {
                success: true,
                attempts: attempt,
                log,
            });
        }
    }
    Ok(AttemptOutcome {
        success: false,
        attempts: params.max_attempts,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classification::ObjectClass;
    use crate::linalg::Vec3;
    use std::cell::Cell;

    fn obj(id: usize, class: ObjectClass, x: f64, color: [f64; 3]) -> ObjectDescriptor {
        let mut d = ObjectDescriptor::synthetic(class, Vec3::new(x, 0.5, 0.01));
        d.id = id;
        d.mean_color = color;
        d
    }

    const RED: [f64; 3] = [200.0, 30.0, 30.0];

    #[test]
    fn rule_cases() {
        let t = obj(1, ObjectClass::Cutlery, 0.2, RED);
        assert!(verify_grasp(&t, &[], 0.1, 30.0).success);
        let same = verify_grasp(&t, &[t.clone()], 0.1, 30.0);
        assert!(!same.success);
        assert_eq!(same.matched_id, Some(1));
        let other = obj(2, ObjectClass::Dish, 0.2, RED);
        assert!(verify_grasp(&t, &[other], 0.1, 30.0).success);
        let recolored = obj(3, ObjectClass::Cutlery, 0.2, [30.0, 30.0, 200.0]);
        assert!(verify_grasp(&t, &[recolored], 0.1, 30.0).success);
        let moved = obj(4, ObjectClass::Cutlery, 0.5, RED);
        assert!(verify_grasp(&t, &[moved.clone()], 0.1, 30.0).success);
        assert!(!verify_grasp(&t, &[moved], 0.31, 30.0).success);
    }

    #[test]
    fn z_is_ignored() {
        let t = obj(1, ObjectClass::Glass, 0.2, RED);
        let mut lifted = t.clone();
        lifted.centroid.z = 0.5;
        assert!(!verify_grasp(&t, &[lifted], 0.1, 30.0).success);
    }

    fn run(fail_first: usize, max_attempts: usize) -> (AttemptOutcome, usize) {
        let t = obj(7, ObjectClass::Cutlery, 0.2, RED);
        let grasps = Cell::new(0usize);
        let params = FeedbackParams {
            max_attempts,
            ..FeedbackParams::default()
        };
        let out = attempt_loop(
            &t,
            || -> std::result::Result<_, String> {
                Ok(if grasps.get() <= fail_first {
                    vec![t.clone()]
                } else {
                    vec![]
                })
            },
            |_| grasps.set(grasps.get() + 1),
            &params,
        )
        .unwrap();
        (out, grasps.get())
    }

    #[test]
    fn attempt_patterns() {
        let (o, g) = run(0, 3);
        assert_eq!((o.success, o.attempts, g), (true, 1, 1));
        let (o, g) = run(1, 3);
        assert_eq!((o.success, o.attempts, g), (true, 2, 2));
        let (o, g) = run(usize::MAX, 3);
        assert_eq!((o.success, o.attempts, g), (false, 3, 3));
        assert_eq!(o.log.len(), 3);
        assert_eq!(o.log[2].result, VerificationResult::Failure);
    }

    #[test]
    fn observation_error_carries_attempts() {
        let t = obj(7, ObjectClass::Glass, 0.2, RED);
        let calls = Cell::new(0);
        let err = attempt_loop(
            &t,
            || {
                calls.set(calls.get() + 1);
                if calls.get() == 2 {
                    Err("camera offline")
                } else {
                    Ok(vec![t.clone()])
                }
            },
            |_| {},
            &FeedbackParams::default(),
        )
        .unwrap_err();
        match err {
            Error::Observation { attempts, message } => {
                assert_eq!(attempts, 2);
                assert!(message.contains("camera offline"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn record_json() {
        let r = VerificationRecord::new(
            3,
            1,
            Verification {
                success: false,
                matched_id: Some(5),
            },
        );
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"target_id":3,"attempt":1,"result":"failure","matched_id":5}"#);
        let ok = VerificationRecord::new(
            3,
            2,
            Verification {
                success: true,
                matched_id: None,
            },
        );
        assert_eq!(
            serde_json::to_string(&ok).unwrap(),
            r#"{"target_id":3,"attempt":2,"result":"success"}"#
        );
    }
}
