//! Joint-torque and external-wrench estimation from embedded six-axis
//! force/torque sensors.
//!
//! Each sensor cuts the kinematic tree at its joint. The pieces left after
//! all cuts are the sub-models; within one sub-model the measured sensor
//! wrenches are boundary conditions of a Newton-Euler balance, and whatever
//! the balance leaves unexplained is attributed to the single contact
//! hypothesized there. Sub-models are solved independently.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DVector, Isometry3, Translation3, UnitQuaternion, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::inverse::{body_forces, external_forces, project, world_inertias};
use crate::dynamics::kinematics::Kinematics;
use crate::dynamics::spatial::{ang, force_at, lin, V6};
use crate::dynamics::{Axes, DynamicsError, FloatingBaseState, SpatialWrench};
use crate::model::RobotModel;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("sensor `{sensor}` is mounted on unknown joint `{joint}`")]
    UnknownJoint { sensor: String, joint: String },
    #[error("two sensors are mounted on joint `{0}`")]
    SharedJoint(String),
    #[error("no reading for sensor `{0}`")]
    MissingReading(String),
    #[error("unknown hypothesis frame `{0}`")]
    UnknownFrame(String),
    #[error("hypothesis `{0}` is not in a sub-model bounded by force/torque sensors")]
    Unbounded(String),
    #[error("hypotheses `{0}` and `{1}` share a sub-model")]
    SharedSubModel(String, String),
    #[error("sensor `{sensor}`: {reason}")]
    Sensor { sensor: String, reason: String },
    #[error("force/torque csv: {0}")]
    Csv(String),
}

/// A six-axis force/torque sensor mounted on a joint.
///
/// Readings are the wrench the parent side exerts on the child side, in the
/// measurement frame's own axes and about its origin. The measurement frame
/// is placed relative to the joint's child link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtSensorSpec {
    pub name: String,
    pub joint: String,
    /// Measurement frame origin in the child link, m.
    #[serde(default)]
    pub xyz: [f64; 3],
    /// Measurement frame orientation in the child link, fixed-axis roll/pitch/yaw.
    #[serde(default)]
    pub rpy: [f64; 3],
    /// Per-axis standard deviation of synthetic noise: three in N, then three in N·m.
    #[serde(default)]
    pub noise_sigma: [f64; 6],
}

impl FtSensorSpec {
    /// Sensor at the child link origin with no noise.
    pub fn at_joint(name: impl Into<String>, joint: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            joint: joint.into(),
            xyz: [0.0; 3],
            rpy: [0.0; 3],
            noise_sigma: [0.0; 6],
        }
    }

    pub fn with_noise(mut self, force_sigma: f64, torque_sigma: f64) -> Self {
        self.noise_sigma = [
            force_sigma,
            force_sigma,
            force_sigma,
            torque_sigma,
            torque_sigma,
            torque_sigma,
        ];
        self
    }

    pub fn measurement_pose(&self) -> Isometry3<f64> {
        let [r, p, y] = self.rpy;
        Isometry3::from_parts(
            Translation3::from(Vector3::from(self.xyz)),
            UnitQuaternion::from_euler_angles(r, p, y),
        )
    }

    fn child_link(&self, model: &RobotModel) -> Result<usize, EstimationError> {
        model
            .joint_child(&self.joint)
            .ok_or_else(|| EstimationError::UnknownJoint {
                sensor: self.name.clone(),
                joint: self.joint.clone(),
            })
    }

    fn check(&self) -> Result<(), EstimationError> {
        let bad = |reason: &str| EstimationError::Sensor {
            sensor: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.xyz.iter().chain(&self.rpy).any(|v| !v.is_finite()) {
            return Err(bad("non-finite measurement frame"));
        }
        if self.noise_sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(bad("noise sigma must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    /// Force through the frame origin: three unknowns.
    PureForce,
    /// Force and torque at the frame: six unknowns.
    FullWrench,
}

/// Where a contact is believed to act, e.g. from a tactile skin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactHypothesis {
    pub frame: String,
    pub kind: HypothesisKind,
}

impl ContactHypothesis {
    pub fn pure_force(frame: impl Into<String>) -> Self {
        Self {
            frame: frame.into(),
            kind: HypothesisKind::PureForce,
        }
    }

    pub fn full_wrench(frame: impl Into<String>) -> Self {
        Self {
            frame: frame.into(),
            kind: HypothesisKind::FullWrench,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    /// Estimated joint torques, N·m, one per joint coordinate.
    pub joint_torques: DVector<f64>,
    /// One mixed-representation wrench per hypothesis, in input order.
    pub wrenches: Vec<SpatialWrench>,
    /// Per sensor-bounded sub-model, keyed by its root link: the part of
    /// the measured boundary wrenches the model and the estimated contact
    /// cannot explain. Expressed at the hypothesis frame when there is one,
    /// else at the root link; zero for full-wrench hypotheses.
    pub residuals: BTreeMap<String, SpatialWrench>,
}

/// Partition of the links by the sensor cuts.
struct Partition {
    /// Sub-model index of every link.
    of_link: Vec<usize>,
    /// Root link of every sub-model.
    roots: Vec<usize>,
    /// Sensor index keyed by its child link.
    cut_at: BTreeMap<usize, usize>,
}

impl Partition {
    fn new(model: &RobotModel, sensors: &[FtSensorSpec]) -> Result<Self, EstimationError> {
        let mut cut_at = BTreeMap::new();
        for (k, s) in sensors.iter().enumerate() {
            s.check()?;
            if cut_at.insert(s.child_link(model)?, k).is_some() {
                return Err(EstimationError::SharedJoint(s.joint.clone()));
            }
        }
        let mut of_link = vec![0; model.links().len()];
        let mut roots = vec![0];
        // Topological order: parents are assigned before children.
        for i in 1..of_link.len() {
            if cut_at.contains_key(&i) {
                of_link[i] = roots.len();
                roots.push(i);
            } else {
                of_link[i] = of_link[model.parent_link(i).expect("non-base link has a parent")];
            }
        }
        Ok(Self { of_link, roots, cut_at })
    }

    /// Sub-models whose boundary is made of sensors only. The root piece of
    /// a fixed-base model also touches the unknown mount reaction.
    fn bounded(&self, model: &RobotModel, sub: usize) -> bool {
        sub != 0 || !model.is_fixed_base()
    }
}

/// Root link of the sensor-delimited sub-model containing `frame`.
pub fn sub_model_root(model: &RobotModel, sensors: &[FtSensorSpec], frame: &str) -> Result<String, EstimationError> {
    let part = Partition::new(model, sensors)?;
    let f = model
        .frame(frame)
        .map_err(|_| EstimationError::UnknownFrame(frame.to_string()))?;
    Ok(model.links()[part.roots[part.of_link[f.link]]].name.clone())
}

/// Measured sensor wrench as a world-origin spatial force acting on the
/// child side.
fn boundary_force(kin: &Kinematics, sensor: &FtSensorSpec, child: usize, reading: &SpatialWrench) -> V6 {
    let pose = kin.pose[child] * sensor.measurement_pose();
    let (f, n_o) = SpatialWrench::new("", Axes::Local, reading.force, reading.torque).world_components(&pose);
    force_at(&Vector3::zeros(), &f, &n_o)
}

/// Estimate the contact wrenches and joint torques.
///
/// `readings` maps sensor names to their measured wrenches (force and
/// torque in the measurement frame, as produced by
/// [`synthesize_ft_reading`]). Every hypothesis must sit in a distinct
/// sub-model bounded by sensors only.
pub fn estimate(
    model: &RobotModel,
    state: &FloatingBaseState,
    nudot: &DVector<f64>,
    gravity: &Vector3<f64>,
    sensors: &[FtSensorSpec],
    readings: &BTreeMap<String, SpatialWrench>,
    hypotheses: &[ContactHypothesis],
) -> Result<EstimationResult, EstimationError> {
    state.check(model)?;
    if nudot.len() != model.nv() {
        return Err(DynamicsError::Dimension {
            what: "nudot",
            expected: model.nv(),
            got: nudot.len(),
        }
        .into());
    }
    let part = Partition::new(model, sensors)?;
    let kin = Kinematics::new(model, state);
    let acc = kin.accelerations(model, state, Some(nudot), gravity);
    let inertias = world_inertias(model, &kin);
    let body = body_forces(&inertias, &kin, &acc, &vec![V6::zeros(); inertias.len()]);

    let mut measured = vec![V6::zeros(); sensors.len()];
    for (&child, &k) in &part.cut_at {
        let reading = readings
            .get(&sensors[k].name)
            .ok_or_else(|| EstimationError::MissingReading(sensors[k].name.clone()))?;
        measured[k] = boundary_force(&kin, &sensors[k], child, reading);
    }

    // Net wrench each sub-model needs from outside its sensor boundary.
    let mut demand = vec![V6::zeros(); part.roots.len()];
    for (i, b) in body.iter().enumerate() {
        demand[part.of_link[i]] += b;
    }
    for (&child, &k) in &part.cut_at {
        demand[part.of_link[child]] -= measured[k];
        let parent = model.parent_link(child).expect("sensor child has a parent");
        demand[part.of_link[parent]] += measured[k];
    }

    let mut owner: Vec<Option<usize>> = vec![None; part.roots.len()];
    let mut wrenches = Vec::with_capacity(hypotheses.len());
    let mut residuals = BTreeMap::new();
    for (h, hyp) in hypotheses.iter().enumerate() {
        let frame = model
            .frame(&hyp.frame)
            .map_err(|_| EstimationError::UnknownFrame(hyp.frame.clone()))?;
        let sub = part.of_link[frame.link];
        if !part.bounded(model, sub) {
            return Err(EstimationError::Unbounded(hyp.frame.clone()));
        }
        if let Some(other) = owner[sub] {
            return Err(EstimationError::SharedSubModel(
                hypotheses[other].frame.clone(),
                hyp.frame.clone(),
            ));
        }
        owner[sub] = Some(h);

        // About the hypothesis point, the demand splits into a force and a
        // torque; a pure force can only explain the former.
        let p = kin.frame_pose(&frame).translation.vector;
        let force = lin(&demand[sub]);
        let torque = ang(&demand[sub]) - p.cross(&force);
        let (explained, left) = match hyp.kind {
            HypothesisKind::FullWrench => (torque, Vector3::zeros()),
            HypothesisKind::PureForce => (Vector3::zeros(), torque),
        };
        wrenches.push(SpatialWrench::mixed(hyp.frame.clone(), force, explained));
        residuals.insert(
            model.links()[part.roots[sub]].name.clone(),
            SpatialWrench::mixed(hyp.frame.clone(), Vector3::zeros(), left),
        );
    }
    for (sub, &root) in part.roots.iter().enumerate() {
        if owner[sub].is_none() && part.bounded(model, sub) {
            let pose = kin.pose[root];
            let force = lin(&demand[sub]);
            let torque = ang(&demand[sub]) - pose.translation.vector.cross(&force);
            let name = model.links()[root].name.clone();
            residuals.insert(name.clone(), SpatialWrench::mixed(name, force, torque));
        }
    }

    // Inward recursion with the estimated contacts; across a sensor cut the
    // measured wrench replaces the model's prediction.
    let ext = external_forces(model, &kin, &wrenches)?;
    let mut f: Vec<V6> = body.iter().zip(&ext).map(|(b, e)| b - e).collect();
    for i in (1..f.len()).rev() {
        if let Some(&k) = part.cut_at.get(&i) {
            f[i] = measured[k];
        }
        let p = model.parent_link(i).expect("non-base link has a parent");
        let fi = f[i];
        f[p] += fi;
    }
    let tau = project(model, &kin, &f);
    Ok(EstimationResult {
        joint_torques: tau.rows(6, model.n()).into_owned(),
        wrenches,
        residuals,
    })
}

/// Exact wrench a sensor would read for the given motion and external
/// wrenches, plus Gaussian noise of the sensor's declared sigma drawn from
/// `rng`.
pub fn synthesize_ft_reading_with(
    model: &RobotModel,
    state: &FloatingBaseState,
    nudot: &DVector<f64>,
    gravity: &Vector3<f64>,
    externals: &[SpatialWrench],
    sensor: &FtSensorSpec,
    rng: &mut ChaCha8Rng,
) -> Result<SpatialWrench, EstimationError> {
    state.check(model)?;
    sensor.check()?;
    let child = sensor.child_link(model)?;
    let kin = Kinematics::new(model, state);
    let acc = kin.accelerations(model, state, Some(nudot), gravity);
    let inertias = world_inertias(model, &kin);
    let ext = external_forces(model, &kin, externals)?;
    let body = body_forces(&inertias, &kin, &acc, &ext);
    let transmitted: V6 = (child..body.len())
        .filter(|&i| model.in_subtree(child, i))
        .map(|i| body[i])
        .sum();
    let pose = kin.pose[child] * sensor.measurement_pose();
    let wrench = SpatialWrench::new("", Axes::World, lin(&transmitted), ang(&transmitted));
    // Re-express about the measurement origin in its own axes.
    let origin = Isometry3::identity();
    let local = wrench.transformed(&origin, sensor.name.clone(), &pose, Axes::Local);
    let mut v = local.to_vector();
    for (x, &sigma) in v.iter_mut().zip(&sensor.noise_sigma) {
        if sigma > 0.0 {
            *x += Normal::new(0.0, sigma).expect("sigma checked").sample(rng);
        }
    }
    Ok(SpatialWrench::new(
        sensor.name.clone(),
        Axes::Local,
        v.fixed_rows::<3>(0).into_owned(),
        v.fixed_rows::<3>(3).into_owned(),
    ))
}

/// [`synthesize_ft_reading_with`] seeded from `seed`.
pub fn synthesize_ft_reading(
    model: &RobotModel,
    state: &FloatingBaseState,
    nudot: &DVector<f64>,
    gravity: &Vector3<f64>,
    externals: &[SpatialWrench],
    sensor: &FtSensorSpec,
    seed: u64,
) -> Result<SpatialWrench, EstimationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthesize_ft_reading_with(model, state, nudot, gravity, externals, sensor, &mut rng)
}

/// Readings of all sensors, drawn in order from one generator.
pub fn synthesize_readings(
    model: &RobotModel,
    state: &FloatingBaseState,
    nudot: &DVector<f64>,
    gravity: &Vector3<f64>,
    externals: &[SpatialWrench],
    sensors: &[FtSensorSpec],
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<String, SpatialWrench>, EstimationError> {
    sensors
        .iter()
        .map(|s| {
            synthesize_ft_reading_with(model, state, nudot, gravity, externals, s, rng).map(|w| (s.name.clone(), w))
        })
        .collect()
}

/// One row of a sensor trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtRecord {
    pub time: f64,
    pub sensor: String,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl FtRecord {
    pub fn new(time: f64, reading: &SpatialWrench) -> Self {
        let (f, t) = (reading.force, reading.torque);
        Self {
            time,
            sensor: reading.frame.clone(),
            fx: f.x,
            fy: f.y,
            fz: f.z,
            tx: t.x,
            ty: t.y,
            tz: t.z,
        }
    }

    pub fn wrench(&self) -> SpatialWrench {
        SpatialWrench::new(
            self.sensor.clone(),
            Axes::Local,
            Vector3::new(self.fx, self.fy, self.fz),
            Vector3::new(self.tx, self.ty, self.tz),
        )
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        self.wrench().to_vector()
    }
}

/// Write a sensor trace with header `time,sensor,fx,fy,fz,tx,ty,tz`.
pub fn write_ft_csv<W: Write>(w: W, records: &[FtRecord]) -> Result<(), EstimationError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).map_err(|e| EstimationError::Csv(e.to_string()))?;
    }
    out.flush().map_err(|e| EstimationError::Csv(e.to_string()))
}

pub fn read_ft_csv<R: Read>(r: R) -> Result<Vec<FtRecord>, EstimationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    rdr.deserialize()
        .enumerate()
        .map(|(row, rec)| rec.map_err(|e| EstimationError::Csv(format!("row {}: {e}", row + 1))))
        .collect()
}
