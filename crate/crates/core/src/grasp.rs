//! Target selection, class-specific end-effector orientation and approach
//! trajectories. All geometry is in the table-plane frame (x, y on the table,
//! z along its normal); output is Cartesian waypoints plus roll/pitch/yaw.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::classification::{ObjectClass, ObjectDescriptor, PerClass};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scene::TablePlane;

/// Manipulation preference per class; higher ranks are taken first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityTable(pub PerClass<u8>);

impl Default for PriorityTable {
    fn default() -> Self {
        PriorityTable(PerClass {
            dish: 1,
            cutlery: 2,
            bowl: 3,
            glass: 4,
        })
    }
}

impl PriorityTable {
    pub fn new(ranks: PerClass<u8>) -> Result<Self> {
        let mut seen: Vec<u8> = ranks.iter().map(|(_, r)| *r).collect();
        seen.sort_unstable();
        if seen != [1, 2, 3, 4] {
            return Err(Error::invalid(format!(
                "priority ranks must be a permutation of 1..=4, got {seen:?}"
            )));
        }
        Ok(PriorityTable(ranks))
    }

    /// `0` for unknown objects.
    pub fn rank(&self, class: ObjectClass) -> u8 {
        self.0.get(class).copied().unwrap_or(0)
    }
}

/// Picks the next object to manipulate.
///
/// Score is `weight · rank − distance`; an infinite `weight` means priority first
/// with distance as the tie-break. Remaining ties go to the smallest centroid
/// (x, then y, then z). Unknown objects are skipped.
pub fn select_target<'a>(
    descriptors: &'a [ObjectDescriptor],
    robot_position: &Vec3,
    weight: f64,
    priorities: &PriorityTable,
) -> Result<&'a ObjectDescriptor> {
    let key = |d: &ObjectDescriptor| {
        let rank = priorities.rank(d.class) as f64;
        let dist = (d.centroid - robot_position).norm();
        if weight.is_infinite() {
            (rank, -dist)
        } else {
            (weight * rank - dist, 0.0)
        }
    };
    descriptors
        .iter()
        .filter(|d| d.class != ObjectClass::Unknown)
        .max_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then_with(|| {
                    // Smaller centroid wins, so it must compare as "greater".
                    b.centroid
                        .x
                        .total_cmp(&a.centroid.x)
                        .then(b.centroid.y.total_cmp(&a.centroid.y))
                        .then(b.centroid.z.total_cmp(&a.centroid.z))
                })
        })
        .ok_or(Error::NoTarget)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Roll that aligns the gripper with a planar axis, folded into `(−π/2, π/2]`.
///
/// The axis is sign-ambiguous, so it is first flipped into the half-plane
/// `x > 0` (or `y > 0` when `x == 0`).
pub fn axis_roll(ex: f64, ey: f64) -> Result<f64> {
    let norm = ex.hypot(ey);
    if !(norm >= 1e-6) {
        return Err(Error::DegenerateAxis(norm));
    }
    let (x, y) = if ex < 0.0 || (ex == 0.0 && ey < 0.0) {
        (-ex, -ey)
    } else {
        (ex, ey)
    };
    Ok(y.atan2(x))
}

/// End-effector orientation for a classified object.
pub fn compute_grasp_orientation(desc: &ObjectDescriptor) -> Result<Orientation> {
    match desc.class {
        ObjectClass::Glass => Ok(Orientation {
            roll: 0.0,
            pitch: 0.0,
            yaw: FRAC_PI_2,
        }),
        ObjectClass::Dish | ObjectClass::Bowl => Ok(Orientation {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        }),
        ObjectClass::Cutlery => {
            let e1 = desc.eigenvectors[0];
            Ok(Orientation {
                roll: axis_roll(e1.x, e1.y)?,
                pitch: 0.0,
                yaw: 0.0,
            })
        }
        ObjectClass::Unknown => Err(Error::UnsupportedClass(desc.class)),
    }
}

/// Fraction of the object's height, measured down from its top, that counts as rim.
const RIM_BAND: f64 = 0.2;

/// Grasp point on the rim of a dish or bowl: the point in the top band of the
/// object's height that is nearest to the robot in XY.
pub fn select_edge_point(desc: &ObjectDescriptor, robot_position: &Vec3) -> Result<Vec3> {
    if !matches!(desc.class, ObjectClass::Dish | ObjectClass::Bowl) {
        return Err(Error::UnsupportedClass(desc.class));
    }
    if desc.points.is_empty() {
        return Ok(desc.nearest_point);
    }
    let xy_dist = |p: &Vec3| (p.x - robot_position.x).hypot(p.y - robot_position.y);
    let closest = |it: &mut dyn Iterator<Item = &Vec3>| {
        it.min_by(|a, b| xy_dist(a).total_cmp(&xy_dist(b))).copied()
    };
    let top = desc
        .points
        .iter()
        .map(|p| p.z.max(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom = desc
        .points
        .iter()
        .map(|p| p.z.max(0.0))
        .fold(f64::INFINITY, f64::min);
    let floor = top - RIM_BAND * (top - bottom);
    let band = closest(&mut desc.points.iter().filter(|p| p.z.max(0.0) >= floor));
    Ok(band
        .or_else(|| closest(&mut desc.points.iter()))
        .expect("non-empty point set"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspStrategy {
    /// Move parallel to the table towards the centroid.
    Lateral,
    /// Descend along the normal onto a rim point.
    TopEdge,
    /// Descend along the normal onto the centroid.
    TopCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspParams {
    /// Approach height above the table for top grasps (meters).
    pub safe_height: f64,
    /// Distance behind the centroid where lateral approaches start.
    pub standoff: f64,
    pub descent_step: f64,
    /// Gap kept between the gripper and the goal point, and below a glass rim.
    pub clearance: f64,
    pub robot_position: Vec3,
    /// Weight of the priority rank against distance; `None` ranks by priority
    /// first and distance second.
    pub selection_weight: Option<f64>,
}

impl GraspParams {
    pub fn weight(&self) -> f64 {
        self.selection_weight.unwrap_or(f64::INFINITY)
    }
}

impl Default for GraspParams {
    fn default() -> Self {
        Self {
            safe_height: 0.25,
            standoff: 0.15,
            descent_step: 0.02,
            clearance: 0.02,
            robot_position: Vec3::zeros(),
            selection_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    pub target_id: usize,
    pub class: ObjectClass,
    pub strategy: GraspStrategy,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Ordered approach waypoints in the table-plane frame.
    pub waypoints: Vec<Vec3>,
    /// The same waypoints in camera coordinates.
    pub camera_waypoints: Vec<Vec3>,
    pub safe_height: f64,
    pub descent_step: f64,
}

/// Heights from `start` down to `goal` in `step` decrements, ending exactly at `goal`.
fn descent(start: f64, goal: f64, step: f64) -> Vec<f64> {
    let mut zs = Vec::new();
    let mut k = 0usize;
    loop {
        let z = start - k as f64 * step;
        if z - goal <= 1e-9 {
            break;
        }
        zs.push(z);
        k += 1;
    }
    zs.push(goal);
    zs
}

/// Builds the class-specific approach for `desc`.
pub fn compute_trajectory(
    desc: &ObjectDescriptor,
    orientation: Orientation,
    plane: &TablePlane,
    params: &GraspParams,
) -> Result<GraspPlan> {
    if !(params.standoff > 0.0 && params.descent_step > 0.0 && params.clearance >= 0.0) {
        return Err(Error::invalid(
            "standoff and descent step must be positive, clearance non-negative",
        ));
    }
    let robot = params.robot_position;
    let (strategy, waypoints) = match desc.class {
        ObjectClass::Glass => {
            // Below the rim but above the table.
            let z = params
                .safe_height
                .min((desc.height - params.clearance).max(params.clearance));
            if !(z > 0.0) {
                return Err(Error::UnsafeClearance {
                    height: z,
                    limit: 0.0,
                });
            }
            let goal = Vec3::new(desc.centroid.x, desc.centroid.y, z);
            let mut dir = Vec3::new(goal.x - robot.x, goal.y - robot.y, 0.0);
            if dir.norm() < 1e-9 {
                dir = Vec3::y();
            }
            let dir = dir.normalize();
            let start = goal - dir * params.standoff;
            let segments = (params.standoff / params.descent_step).ceil().max(1.0) as usize;
            let pts: Vec<Vec3> = (0..=segments)
                .map(|i| {
                    if i == segments {
                        goal
                    } else {
                        let t = i as f64 / segments as f64;
                        Vec3::new(start.x + (goal.x - start.x) * t, start.y + (goal.y - start.y) * t, z)
                    }
                })
                .collect();
            (GraspStrategy::Lateral, pts)
        }
        ObjectClass::Dish | ObjectClass::Bowl | ObjectClass::Cutlery => {
            if params.safe_height <= desc.height {
                return Err(Error::UnsafeClearance {
                    height: params.safe_height,
                    limit: desc.height,
                });
            }
            let (strategy, target) = if desc.class == ObjectClass::Cutlery {
                (GraspStrategy::TopCenter, desc.centroid)
            } else {
                (GraspStrategy::TopEdge, select_edge_point(desc, &robot)?)
            };
            let goal_z = target.z.max(0.0) + params.clearance;
            if params.safe_height <= goal_z {
                return Err(Error::UnsafeClearance {
                    height: params.safe_height,
                    limit: goal_z,
                });
            }
            let pts = descent(params.safe_height, goal_z, params.descent_step)
                .into_iter()
                .map(|z| Vec3::new(target.x, target.y, z))
                .collect();
            (strategy, pts)
        }
        ObjectClass::Unknown => return Err(Error::UnsupportedClass(desc.class)),
    };
    let camera_waypoints = waypoints.iter().map(|p| plane.from_plane(p)).collect();
    Ok(GraspPlan {
        target_id: desc.id,
        class: desc.class,
        strategy,
        roll: orientation.roll,
        pitch: orientation.pitch,
        yaw: orientation.yaw,
        waypoints,
        camera_waypoints,
        safe_height: params.safe_height,
        descent_step: params.descent_step,
    })
}

/// Orientation plus trajectory for one descriptor.
pub fn plan_grasp(desc: &ObjectDescriptor, plane: &TablePlane, params: &GraspParams) -> Result<GraspPlan> {
    let orientation = compute_grasp_orientation(desc)?;
    compute_trajectory(desc, orientation, plane, params)
}

/// JSON wire form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPlanRecord {
    pub target_id: usize,
    pub strategy: GraspStrategy,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub waypoints: Vec<[f64; 3]>,
    pub frame: String,
}

impl GraspPlan {
    pub fn record(&self, degrees: bool) -> GraspPlanRecord {
        let a = |v: f64| if degrees { v.to_degrees() } else { v };
        GraspPlanRecord {
            target_id: self.target_id,
            strategy: self.strategy,
            roll: a(self.roll),
            pitch: a(self.pitch),
            yaw: a(self.yaw),
            waypoints: self.waypoints.iter().map(|p| [p.x, p.y, p.z]).collect(),
            frame: "table_plane".to_string(),
        }
    }
}
