//! Robot description: kinematic tree, link inertias, contact frames and
//! actuator parameters.
//!
//! A [`RobotDescription`] is plain data and may be invalid; [`validate_model`]
//! reports every violated invariant. A [`RobotModel`] can only be built from a
//! description that validates, and carries the resolved tree topology used by
//! the dynamics kernel.

mod urdf;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{Isometry3, Matrix3, Rotation3, SymmetricEigen, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::motor::MotorModelParams;

pub use urdf::{load_model, load_model_file, parse_description, serialize_model};

/// Axis-norm tolerance for revolute joints.
pub const AXIS_UNIT_TOL: f64 = 1e-9;
/// Coplanarity tolerance for surface-contact vertices, metres.
pub const COPLANAR_TOL: f64 = 1e-9;
/// Default number of friction-cone facets when a contact omits `facets`.
pub const DEFAULT_CONE_FACETS: usize = 8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column} ({field}): {message}")]
    Parse {
        line: u32,
        column: u32,
        field: String,
        message: String,
    },
    #[error("invalid model: {}", first_error(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn first_error(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .find(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .unwrap_or_default()
}

/// Position + roll/pitch/yaw (fixed-axis XYZ, i.e. `Rz(yaw) Ry(pitch) Rx(roll)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub xyz: Vector3<f64>,
    pub rpy: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            xyz: Vector3::zeros(),
            rpy: Vector3::zeros(),
        }
    }

    pub fn from_xyz(xyz: Vector3<f64>) -> Self {
        Self {
            xyz,
            rpy: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.rpy.x, self.rpy.y, self.rpy.z)
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.xyz),
            UnitQuaternion::from_rotation_matrix(&self.rotation()),
        )
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Centre of mass in the link frame, m.
    pub com: Vector3<f64>,
    /// Rotational inertia about the CoM, link-frame axes, kg·m².
    pub inertia: Matrix3<f64>,
}

impl LinkSpec {
    pub fn new(name: impl Into<String>, mass: f64, com: Vector3<f64>, inertia: Matrix3<f64>) -> Self {
        Self {
            name: name.into(),
            mass,
            com,
            inertia,
        }
    }

    pub fn massless(name: impl Into<String>) -> Self {
        Self::new(name, 0.0, Vector3::zeros(), Matrix3::zeros())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointType {
    Revolute,
    Fixed,
}

impl JointType {
    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Revolute => "revolute",
            JointType::Fixed => "fixed",
        }
    }
}

/// Absent limits are unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointLimits {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub velocity: Option<f64>,
    pub effort: Option<f64>,
}

impl JointLimits {
    /// Midpoint of the position range, or 0 when either side is unbounded.
    pub fn midpoint(&self) -> f64 {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            _ => 0.0,
        }
    }

    pub fn contains(&self, q: f64) -> bool {
        self.lower.is_none_or(|lo| q >= lo) && self.upper.is_none_or(|hi| q <= hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorSpec {
    pub params: MotorModelParams,
    /// Motor-to-joint reduction; motor velocity is `gear * joint-side rate`.
    pub gear: f64,
}

/// Series elastic element between motor and link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeaSpec {
    /// N·m/rad
    pub stiffness: f64,
    /// N·m·s/rad
    pub damping: f64,
    /// Rotor inertia reflected to the joint side, kg·m².
    pub motor_inertia: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    /// Joint frame in the parent link frame.
    pub origin: Pose,
    pub axis: Vector3<f64>,
    pub limits: JointLimits,
    pub motor: Option<MotorSpec>,
    pub sea: Option<SeaSpec>,
}

impl JointSpec {
    pub fn revolute(
        name: impl Into<String>,
        parent: impl Into<String>,
        child: impl Into<String>,
        origin: Pose,
        axis: Vector3<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            joint_type: JointType::Revolute,
            parent: parent.into(),
            child: child.into(),
            origin,
            axis,
            limits: JointLimits::default(),
            motor: None,
            sea: None,
        }
    }

    pub fn fixed(name: impl Into<String>, parent: impl Into<String>, child: impl Into<String>, origin: Pose) -> Self {
        Self {
            joint_type: JointType::Fixed,
            axis: Vector3::z(),
            ..Self::revolute(name, parent, child, origin, Vector3::z())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContactKind {
    Point,
    /// Vertices in the contact frame; they must lie in its xy-plane.
    Surface {
        vertices: Vec<Vector3<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactFrameSpec {
    pub name: String,
    pub link: String,
    /// Contact frame in the link frame; its z-axis is the contact normal.
    pub origin: Pose,
    pub kind: ContactKind,
    pub mu: f64,
    pub cone_facets: usize,
}

impl ContactFrameSpec {
    pub fn point(name: impl Into<String>, link: impl Into<String>, origin: Pose, mu: f64) -> Self {
        Self {
            name: name.into(),
            link: link.into(),
            origin,
            kind: ContactKind::Point,
            mu,
            cone_facets: DEFAULT_CONE_FACETS,
        }
    }
}

/// Unvalidated robot description, as read from a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotDescription {
    pub name: String,
    pub base_link: String,
    /// Base welded to the world (fixed-base manipulators).
    pub fixed_base: bool,
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    pub contacts: Vec<ContactFrameSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub entity: String,
    pub message: String,
}

impl Diagnostic {
    fn error(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            entity: entity.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.entity, self.message)
    }
}

/// Check every structural and physical invariant of a description.
///
/// Returns an empty list iff the description can be turned into a
/// [`RobotModel`].
pub fn validate_model(desc: &RobotDescription) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut link_names = BTreeSet::new();
    for link in &desc.links {
        if !link_names.insert(link.name.as_str()) {
            out.push(Diagnostic::error(&link.name, "duplicate link name"));
        }
    }
    let mut joint_names = BTreeSet::new();
    for joint in &desc.joints {
        if !joint_names.insert(joint.name.as_str()) {
            out.push(Diagnostic::error(&joint.name, "duplicate joint name"));
        }
    }

    if !link_names.contains(desc.base_link.as_str()) {
        out.push(Diagnostic::error(&desc.base_link, "base link does not exist"));
    }

    // Parent joint per child link, child joints per parent link.
    let mut parent_of: BTreeMap<&str, Vec<&JointSpec>> = BTreeMap::new();
    let mut children_of: BTreeMap<&str, usize> = BTreeMap::new();
    for joint in &desc.joints {
        for (role, name) in [("parent", &joint.parent), ("child", &joint.child)] {
            if !link_names.contains(name.as_str()) {
                out.push(Diagnostic::error(
                    &joint.name,
                    format!("{role} link `{name}` does not exist"),
                ));
            }
        }
        parent_of.entry(joint.child.as_str()).or_default().push(joint);
        *children_of.entry(joint.parent.as_str()).or_default() += 1;

        if joint.joint_type == JointType::Revolute {
            let norm = joint.axis.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > AXIS_UNIT_TOL {
                out.push(Diagnostic::error(&joint.name, format!("axis not unit (norm {norm})")));
            }
        }
        if let (Some(lo), Some(hi)) = (joint.limits.lower, joint.limits.upper) {
            if lo > hi {
                out.push(Diagnostic::error(&joint.name, "limit lower > upper"));
            }
        }
        for (what, v) in [("velocity", joint.limits.velocity), ("effort", joint.limits.effort)] {
            if let Some(v) = v {
                if v < 0.0 {
                    out.push(Diagnostic::error(&joint.name, format!("negative {what} limit")));
                }
            }
        }
        if let Some(motor) = &joint.motor {
            if let Err(msg) = motor.params.check() {
                out.push(Diagnostic::error(&joint.name, format!("motor: {msg}")));
            }
            if !(motor.gear > 0.0) {
                out.push(Diagnostic::error(&joint.name, "motor: gear must be positive"));
            }
        }
        if let Some(sea) = &joint.sea {
            if joint.joint_type != JointType::Revolute {
                out.push(Diagnostic::error(&joint.name, "sea on a non-revolute joint"));
            }
            if !(sea.stiffness > 0.0) {
                out.push(Diagnostic::error(&joint.name, "sea: stiffness must be positive"));
            }
            if !(sea.damping >= 0.0) {
                out.push(Diagnostic::error(&joint.name, "sea: damping must be non-negative"));
            }
            if !(sea.motor_inertia > 0.0) {
                out.push(Diagnostic::error(&joint.name, "sea: motor_inertia must be positive"));
            }
        }
    }

    for (child, joints) in &parent_of {
        if joints.len() > 1 {
            out.push(Diagnostic::error(*child, "link has more than one parent joint"));
        }
        if *child == desc.base_link {
            out.push(Diagnostic::error(*child, "base link has a parent joint"));
        }
    }

    // Cycle check over the parent graph (child -> parent).
    let mut cyclic = BTreeSet::new();
    for link in &desc.links {
        let mut seen = BTreeSet::new();
        let mut cur = link.name.as_str();
        seen.insert(cur);
        while let Some(j) = parent_of.get(cur).and_then(|v| v.first()) {
            cur = j.parent.as_str();
            if !seen.insert(cur) {
                cyclic.insert(cur.to_string());
                break;
            }
        }
    }
    if !cyclic.is_empty() {
        let names: Vec<_> = cyclic.into_iter().collect();
        out.push(Diagnostic::error(names.join(","), "kinematic graph has cycle"));
    } else {
        // Every link must reach the base.
        for link in &desc.links {
            let mut cur = link.name.as_str();
            while let Some(j) = parent_of.get(cur).and_then(|v| v.first()) {
                cur = j.parent.as_str();
            }
            if cur != desc.base_link && link_names.contains(desc.base_link.as_str()) {
                out.push(Diagnostic::error(&link.name, "link not connected to base link"));
            }
        }
    }

    for link in &desc.links {
        check_link(
            link,
            children_of.get(link.name.as_str()).copied().unwrap_or(0),
            &mut out,
        );
    }

    let mut contact_names = BTreeSet::new();
    for c in &desc.contacts {
        if !contact_names.insert(c.name.as_str()) || link_names.contains(c.name.as_str()) {
            out.push(Diagnostic::error(&c.name, "duplicate frame name"));
        }
        if !link_names.contains(c.link.as_str()) {
            out.push(Diagnostic::error(
                &c.name,
                format!("contact link `{}` does not exist", c.link),
            ));
        }
        if !(c.mu > 0.0) {
            out.push(Diagnostic::error(&c.name, "friction coefficient must be positive"));
        }
        if c.cone_facets < 4 {
            out.push(Diagnostic::error(&c.name, "cone needs at least 4 facets"));
        }
        if let ContactKind::Surface { vertices } = &c.kind {
            check_surface(&c.name, vertices, &mut out);
        }
    }

    out
}

fn check_link(link: &LinkSpec, n_children: usize, out: &mut Vec<Diagnostic>) {
    if !link.mass.is_finite() || link.mass < 0.0 {
        out.push(Diagnostic::error(&link.name, "mass must be finite and non-negative"));
        return;
    }
    let i = &link.inertia;
    if i.iter().any(|v| !v.is_finite()) || link.com.iter().any(|v| !v.is_finite()) {
        out.push(Diagnostic::error(&link.name, "non-finite inertial data"));
        return;
    }
    if link.mass == 0.0 {
        if n_children > 0 {
            out.push(Diagnostic::error(&link.name, "massless link is not a leaf frame"));
        }
        if i.abs().max() > 0.0 {
            out.push(Diagnostic::error(
                &link.name,
                "massless link carries rotational inertia",
            ));
        }
        return;
    }
    let scale = i.abs().max().max(1e-300);
    if (i - i.transpose()).abs().max() > 1e-12 * scale {
        out.push(Diagnostic::error(&link.name, "inertia not symmetric"));
        return;
    }
    let eig = SymmetricEigen::new(0.5 * (i + i.transpose()));
    let p = eig.eigenvalues;
    let tol = 1e-12 * scale;
    if p.iter().any(|&v| v < -tol) {
        out.push(Diagnostic::error(&link.name, "inertia not positive semidefinite"));
        return;
    }
    if p[0] + p[1] < p[2] - tol || p[1] + p[2] < p[0] - tol || p[0] + p[2] < p[1] - tol {
        out.push(Diagnostic::error(&link.name, "triangle inequality violated"));
    }
}

fn check_surface(name: &str, vertices: &[Vector3<f64>], out: &mut Vec<Diagnostic>) {
    if vertices.len() < 3 {
        out.push(Diagnostic::error(name, "surface contact needs at least 3 vertices"));
        return;
    }
    let z0 = vertices[0].z;
    if vertices.iter().any(|v| (v.z - z0).abs() > COPLANAR_TOL) {
        out.push(Diagnostic::error(
            name,
            "surface vertices not coplanar with the contact plane",
        ));
    }
    let a = vertices[0];
    let spans = vertices
        .iter()
        .flat_map(|b| vertices.iter().map(move |c| (b - a).cross(&(c - a)).norm()))
        .fold(0.0_f64, f64::max);
    if spans <= COPLANAR_TOL {
        out.push(Diagnostic::error(name, "surface vertices are collinear"));
    }
}

/// A contact point after surface decomposition: each surface vertex becomes
/// one point sharing the surface normal.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPoint {
    /// `contact` for point contacts, `contact/k` for surface vertex `k`.
    pub name: String,
    /// Index into [`RobotModel::contacts`].
    pub contact: usize,
    pub link: usize,
    /// Point pose in the link frame; z-axis is the normal.
    pub local: Isometry3<f64>,
    pub mu: f64,
    pub facets: usize,
}

/// Resolved frame: a link plus a rigid offset from its origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRef {
    pub link: usize,
    pub local: Isometry3<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct TreeNode {
    pub parent: Option<usize>,
    /// Joint connecting this link to its parent (None for the base).
    pub joint: Option<usize>,
    /// Generalized-coordinate index of the joint, for revolute joints.
    pub dof: Option<usize>,
    /// Parent frame -> joint frame at zero joint angle.
    pub origin: Isometry3<f64>,
    pub axis: Vector3<f64>,
    pub children: Vec<usize>,
}

/// Immutable, validated robot model.
///
/// Links are stored in topological order with the base first, so every
/// parent index is smaller than its children's.
#[derive(Clone, Debug)]
pub struct RobotModel {
    desc: RobotDescription,
    nodes: Vec<TreeNode>,
    /// dof index -> joint index
    dof_joints: Vec<usize>,
    contact_points: Vec<ContactPoint>,
    link_index: BTreeMap<String, usize>,
    total_mass: f64,
}

impl PartialEq for RobotModel {
    fn eq(&self, other: &Self) -> bool {
        self.desc == other.desc
    }
}

impl RobotModel {
    /// Validate and build. Links are reordered topologically (breadth-first
    /// from the base, siblings in joint declaration order); joints are
    /// reordered to follow their child links.
    pub fn from_description(desc: RobotDescription) -> Result<Self, ModelError> {
        let diags = validate_model(&desc);
        if diags.iter().any(|d| d.severity == Severity::Error) {
            return Err(ModelError::Invalid(diags));
        }

        let by_name: BTreeMap<&str, &LinkSpec> = desc.links.iter().map(|l| (l.name.as_str(), l)).collect();
        let mut order: Vec<&str> = vec![desc.base_link.as_str()];
        let mut joint_order: Vec<&JointSpec> = Vec::new();
        let mut head = 0;
        while head < order.len() {
            let cur = order[head];
            for j in desc.joints.iter().filter(|j| j.parent == cur) {
                order.push(j.child.as_str());
                joint_order.push(j);
            }
            head += 1;
        }

        let links: Vec<LinkSpec> = order.iter().map(|n| by_name[n].clone()).collect();
        let joints: Vec<JointSpec> = joint_order.into_iter().cloned().collect();
        let link_index: BTreeMap<String, usize> = links.iter().enumerate().map(|(i, l)| (l.name.clone(), i)).collect();

        let mut nodes = vec![TreeNode {
            parent: None,
            joint: None,
            dof: None,
            origin: Isometry3::identity(),
            axis: Vector3::zeros(),
            children: Vec::new(),
        }];
        let mut dof_joints = Vec::new();
        for (ji, j) in joints.iter().enumerate() {
            let parent = link_index[&j.parent];
            let child = link_index[&j.child];
            debug_assert_eq!(child, ji + 1);
            let dof = match j.joint_type {
                JointType::Revolute => {
                    dof_joints.push(ji);
                    Some(dof_joints.len() - 1)
                }
                JointType::Fixed => None,
            };
            nodes.push(TreeNode {
                parent: Some(parent),
                joint: Some(ji),
                dof,
                origin: j.origin.isometry(),
                axis: j.axis,
                children: Vec::new(),
            });
            nodes[parent].children.push(child);
        }

        let mut contact_points = Vec::new();
        for (ci, c) in desc.contacts.iter().enumerate() {
            let link = link_index[&c.link];
            let frame = c.origin.isometry();
            match &c.kind {
                ContactKind::Point => contact_points.push(ContactPoint {
                    name: c.name.clone(),
                    contact: ci,
                    link,
                    local: frame,
                    mu: c.mu,
                    facets: c.cone_facets,
                }),
                ContactKind::Surface { vertices } => {
                    for (k, v) in vertices.iter().enumerate() {
                        let at = frame * Isometry3::translation(v.x, v.y, v.z);
                        contact_points.push(ContactPoint {
                            name: format!("{}/{k}", c.name),
                            contact: ci,
                            link,
                            local: at,
                            mu: c.mu,
                            facets: c.cone_facets,
                        });
                    }
                }
            }
        }

        let total_mass = links.iter().map(|l| l.mass).sum();
        Ok(Self {
            desc: RobotDescription { links, joints, ..desc },
            nodes,
            dof_joints,
            contact_points,
            link_index,
            total_mass,
        })
    }

    pub fn description(&self) -> &RobotDescription {
        &self.desc
    }

    pub fn name(&self) -> &str {
        &self.desc.name
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.desc.links
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.desc.joints
    }

    pub fn contacts(&self) -> &[ContactFrameSpec] {
        &self.desc.contacts
    }

    pub fn base_link(&self) -> &str {
        &self.desc.base_link
    }

    pub fn is_fixed_base(&self) -> bool {
        self.desc.fixed_base
    }

    /// Number of actuated (revolute) joints.
    pub fn n(&self) -> usize {
        self.dof_joints.len()
    }

    /// Dimension of the generalized velocity, `6 + n`.
    pub fn nv(&self) -> usize {
        6 + self.n()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Links in topological order (parents before children).
    pub fn topological_order(&self) -> Vec<&str> {
        self.desc.links.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.link_index.get(name).copied()
    }

    /// Joint driving generalized coordinate `dof`.
    pub fn dof_joint(&self, dof: usize) -> &JointSpec {
        &self.desc.joints[self.dof_joints[dof]]
    }

    /// Generalized-coordinate index of a named revolute joint.
    pub fn joint_dof(&self, joint: &str) -> Option<usize> {
        self.dof_joints.iter().position(|&j| self.desc.joints[j].name == joint)
    }

    /// Link index of the child of a named joint.
    pub fn joint_child(&self, joint: &str) -> Option<usize> {
        let ji = self.desc.joints.iter().position(|j| j.name == joint)?;
        self.nodes.iter().position(|n| n.joint == Some(ji))
    }

    pub fn contact_points(&self) -> &[ContactPoint] {
        &self.contact_points
    }

    /// Contact points belonging to a named contact frame.
    pub fn contact_points_of(&self, contact: &str) -> Vec<&ContactPoint> {
        self.contact_points
            .iter()
            .filter(|p| self.desc.contacts[p.contact].name == contact)
            .collect()
    }

    /// Resolve a link name, contact-frame name or contact-point name.
    pub fn frame(&self, name: &str) -> Result<FrameRef, ModelError> {
        if let Some(link) = self.link_index(name) {
            return Ok(FrameRef {
                link,
                local: Isometry3::identity(),
            });
        }
        if let Some(c) = self.desc.contacts.iter().find(|c| c.name == name) {
            return Ok(FrameRef {
                link: self.link_index[&c.link],
                local: c.origin.isometry(),
            });
        }
        if let Some(p) = self.contact_points.iter().find(|p| p.name == name) {
            return Ok(FrameRef {
                link: p.link,
                local: p.local,
            });
        }
        Err(ModelError::UnknownFrame(name.to_string()))
    }

    /// True when link `descendant` lies in the subtree rooted at `ancestor`.
    pub fn in_subtree(&self, ancestor: usize, descendant: usize) -> bool {
        let mut cur = Some(descendant);
        while let Some(i) = cur {
            if i == ancestor {
                return true;
            }
            cur = self.nodes[i].parent;
        }
        false
    }

    pub fn parent_link(&self, link: usize) -> Option<usize> {
        self.nodes[link].parent
    }

    pub(crate) fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_model(&self.desc)
    }
}

/// Symmetric inertia tensor from its six unique entries.
pub fn inertia_tensor(ixx: f64, ixy: f64, ixz: f64, iyy: f64, iyz: f64, izz: f64) -> Matrix3<f64> {
    Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz)
}
