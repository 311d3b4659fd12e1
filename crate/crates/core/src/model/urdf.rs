//! Model file reader/writer: a subset of URDF extended with `<contact>`,
//! `<motor>` and `<sea>` elements. The grammar is documented in
//! `docs/model-format.md`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use roxmltree::{Document, Node};

use super::{
    inertia_tensor, ContactFrameSpec, ContactKind, JointLimits, JointSpec, JointType, LinkSpec, ModelError, MotorSpec,
    Pose, RobotDescription, RobotModel, SeaSpec, DEFAULT_CONE_FACETS,
};
use crate::motor::MotorModelParams;

/// Parse and validate a model file's contents.
pub fn load_model(source: &str) -> Result<RobotModel, ModelError> {
    RobotModel::from_description(parse_description(source)?)
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<RobotModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_model(&text)
}

struct Ctx<'a> {
    doc: &'a Document<'a>,
}

impl<'a> Ctx<'a> {
    fn err(&self, node: Node, field: &str, message: impl Into<String>) -> ModelError {
        let pos = self.doc.text_pos_at(node.range().start);
        ModelError::Parse {
            line: pos.row,
            column: pos.col,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn attr<'n>(&self, node: Node<'n, 'n>, name: &str) -> Result<&'n str, ModelError> {
        node.attribute(name).ok_or_else(|| {
            self.err(
                node,
                name,
                format!("missing attribute `{name}` on <{}>", node.tag_name().name()),
            )
        })
    }

    fn float(&self, node: Node, name: &str) -> Result<f64, ModelError> {
        let raw = self.attr(node, name)?;
        parse_f64(raw).ok_or_else(|| self.err(node, name, format!("`{raw}` is not a number")))
    }

    fn opt_float(&self, node: Node, name: &str) -> Result<Option<f64>, ModelError> {
        match node.attribute(name) {
            None => Ok(None),
            Some(_) => self.float(node, name).map(Some),
        }
    }

    fn vec3(&self, node: Node, name: &str) -> Result<Vector3<f64>, ModelError> {
        let raw = self.attr(node, name)?;
        let parts: Option<Vec<f64>> = raw.split_whitespace().map(parse_f64).collect();
        match parts {
            Some(v) if v.len() == 3 => Ok(Vector3::new(v[0], v[1], v[2])),
            _ => Err(self.err(node, name, format!("expected three numbers, got `{raw}`"))),
        }
    }

    fn pose(&self, parent: Node) -> Result<Pose, ModelError> {
        match child(parent, "origin") {
            None => Ok(Pose::identity()),
            Some(o) => Ok(Pose {
                xyz: if o.has_attribute("xyz") {
                    self.vec3(o, "xyz")?
                } else {
                    Vector3::zeros()
                },
                rpy: if o.has_attribute("rpy") {
                    self.vec3(o, "rpy")?
                } else {
                    Vector3::zeros()
                },
            }),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

fn child<'a, 'input>(node: Node<'a, 'input>, tag: &str) -> Option<Node<'a, 'input>> {
    node.children().find(|c| c.is_element() && c.has_tag_name(tag))
}

/// Parse a model file into an unvalidated description.
pub fn parse_description(source: &str) -> Result<RobotDescription, ModelError> {
    let doc = Document::parse(source).map_err(|e| {
        let pos = e.pos();
        ModelError::Parse {
            line: pos.row,
            column: pos.col,
            field: "xml".into(),
            message: e.to_string(),
        }
    })?;
    let cx = Ctx { doc: &doc };
    let root = doc.root_element();
    if !root.has_tag_name("robot") {
        return Err(cx.err(root, "robot", "root element must be <robot>"));
    }
    let name = cx.attr(root, "name")?.to_string();
    let fixed_base = match root.attribute("fixed_base") {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(cx.err(root, "fixed_base", format!("expected true/false, got `{other}`"))),
    };

    let mut links = Vec::new();
    let mut joints = Vec::new();
    let mut contacts = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => links.push(parse_link(&cx, node)?),
            "joint" => joints.push(parse_joint(&cx, node)?),
            "contact" => contacts.push(parse_contact(&cx, node)?),
            _ => {}
        }
    }

    let base_link = match root.attribute("base_link") {
        Some(b) => b.to_string(),
        None => {
            let roots: Vec<&LinkSpec> = links
                .iter()
                .filter(|l| !joints.iter().any(|j: &JointSpec| j.child == l.name))
                .collect();
            match roots.as_slice() {
                [only] => only.name.clone(),
                [] => links.first().map(|l| l.name.clone()).unwrap_or_default(),
                _ => return Err(cx.err(root, "base_link", "several root links; set the `base_link` attribute")),
            }
        }
    };

    Ok(RobotDescription {
        name,
        base_link,
        fixed_base,
        links,
        joints,
        contacts,
    })
}

fn parse_link(cx: &Ctx, node: Node) -> Result<LinkSpec, ModelError> {
    let name = cx.attr(node, "name")?.to_string();
    let Some(inertial) = child(node, "inertial") else {
        return Ok(LinkSpec::massless(name));
    };
    let origin = cx.pose(inertial)?;
    let mass_node = child(inertial, "mass").ok_or_else(|| cx.err(inertial, "mass", "<inertial> without <mass>"))?;
    let mass = cx.float(mass_node, "value")?;
    let inertia = match child(inertial, "inertia") {
        None => nalgebra::Matrix3::zeros(),
        Some(i) => inertia_tensor(
            cx.float(i, "ixx")?,
            cx.opt_float(i, "ixy")?.unwrap_or(0.0),
            cx.opt_float(i, "ixz")?.unwrap_or(0.0),
            cx.float(i, "iyy")?,
            cx.opt_float(i, "iyz")?.unwrap_or(0.0),
            cx.float(i, "izz")?,
        ),
    };
    // Inertia is given in the inertial frame; store it in link axes.
    let r = origin.rotation();
    let inertia = if origin.rpy == Vector3::zeros() {
        inertia
    } else {
        r.matrix() * inertia * r.matrix().transpose()
    };
    Ok(LinkSpec {
        name,
        mass,
        com: origin.xyz,
        inertia,
    })
}

fn parse_joint(cx: &Ctx, node: Node) -> Result<JointSpec, ModelError> {
    let name = cx.attr(node, "name")?.to_string();
    let joint_type = match cx.attr(node, "type")? {
        "revolute" | "continuous" => JointType::Revolute,
        "fixed" => JointType::Fixed,
        other => return Err(cx.err(node, "type", format!("unsupported joint type `{other}`"))),
    };
    let parent_node = child(node, "parent").ok_or_else(|| cx.err(node, "parent", "joint without <parent>"))?;
    let child_node = child(node, "child").ok_or_else(|| cx.err(node, "child", "joint without <child>"))?;
    let axis = match child(node, "axis") {
        Some(a) => cx.vec3(a, "xyz")?,
        None => Vector3::x(),
    };
    let limits = match child(node, "limit") {
        None => JointLimits::default(),
        Some(l) => JointLimits {
            lower: cx.opt_float(l, "lower")?,
            upper: cx.opt_float(l, "upper")?,
            velocity: cx.opt_float(l, "velocity")?,
            effort: cx.opt_float(l, "effort")?,
        },
    };
    let motor = match child(node, "motor") {
        None => None,
        Some(m) => Some(MotorSpec {
            params: MotorModelParams {
                k_t: cx.float(m, "kt")?,
                k_vp: cx.opt_float(m, "kvp")?.unwrap_or(0.0),
                k_vn: cx.opt_float(m, "kvn")?.unwrap_or(0.0),
                k_cp: cx.opt_float(m, "kcp")?.unwrap_or(0.0),
                k_cn: cx.opt_float(m, "kcn")?.unwrap_or(0.0),
            },
            gear: cx.opt_float(m, "gear")?.unwrap_or(1.0),
        }),
    };
    let sea = match child(node, "sea") {
        None => None,
        Some(s) => Some(SeaSpec {
            stiffness: cx.float(s, "stiffness")?,
            damping: cx.opt_float(s, "damping")?.unwrap_or(0.0),
            motor_inertia: cx.float(s, "motor_inertia")?,
        }),
    };
    Ok(JointSpec {
        name,
        joint_type,
        parent: cx.attr(parent_node, "link")?.to_string(),
        child: cx.attr(child_node, "link")?.to_string(),
        origin: cx.pose(node)?,
        axis,
        limits,
        motor,
        sea,
    })
}

fn parse_contact(cx: &Ctx, node: Node) -> Result<ContactFrameSpec, ModelError> {
    let facets = match node.attribute("facets") {
        None => DEFAULT_CONE_FACETS,
        Some(raw) => raw
            .trim()
            .parse::<usize>()
            .map_err(|_| cx.err(node, "facets", format!("`{raw}` is not a non-negative integer")))?,
    };
    let kind = match child(node, "vertices") {
        None => ContactKind::Point,
        Some(v) => {
            let text = v.text().unwrap_or("");
            let nums: Option<Vec<f64>> = text.split_whitespace().map(parse_f64).collect();
            let nums = nums.ok_or_else(|| cx.err(v, "vertices", "vertex list contains a non-number"))?;
            if nums.len() % 3 != 0 {
                return Err(cx.err(v, "vertices", "vertex list length is not a multiple of 3"));
            }
            ContactKind::Surface {
                vertices: nums.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect(),
            }
        }
    };
    Ok(ContactFrameSpec {
        name: cx.attr(node, "name")?.to_string(),
        link: cx.attr(node, "link")?.to_string(),
        origin: cx.pose(node)?,
        kind,
        mu: cx.float(node, "mu")?,
        cone_facets: facets,
    })
}

fn v3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

/// Write a description back to the model file format. Inertias are written
/// in link axes (zero `rpy`), so parsing the output reproduces the
/// description field by field.
pub fn serialize_model(desc: &RobotDescription) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<robot name="{}" base_link="{}"{}>"#,
        desc.name,
        desc.base_link,
        if desc.fixed_base { r#" fixed_base="true""# } else { "" }
    );
    for l in &desc.links {
        if l.mass == 0.0 && l.inertia == nalgebra::Matrix3::zeros() && l.com == Vector3::zeros() {
            let _ = writeln!(s, r#"  <link name="{}"/>"#, l.name);
            continue;
        }
        let i = &l.inertia;
        let _ = writeln!(s, r#"  <link name="{}">"#, l.name);
        let _ = writeln!(s, "    <inertial>");
        let _ = writeln!(s, r#"      <origin xyz="{}" rpy="0 0 0"/>"#, v3(&l.com));
        let _ = writeln!(s, r#"      <mass value="{}"/>"#, l.mass);
        let _ = writeln!(
            s,
            r#"      <inertia ixx="{}" ixy="{}" ixz="{}" iyy="{}" iyz="{}" izz="{}"/>"#,
            i[(0, 0)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 1)],
            i[(1, 2)],
            i[(2, 2)]
        );
        let _ = writeln!(s, "    </inertial>");
        let _ = writeln!(s, "  </link>");
    }
    for j in &desc.joints {
        let _ = writeln!(s, r#"  <joint name="{}" type="{}">"#, j.name, j.joint_type.as_str());
        let _ = writeln!(s, r#"    <parent link="{}"/>"#, j.parent);
        let _ = writeln!(s, r#"    <child link="{}"/>"#, j.child);
        let _ = writeln!(
            s,
            r#"    <origin xyz="{}" rpy="{}"/>"#,
            v3(&j.origin.xyz),
            v3(&j.origin.rpy)
        );
        let _ = writeln!(s, r#"    <axis xyz="{}"/>"#, v3(&j.axis));
        let lim = &j.limits;
        if lim != &JointLimits::default() {
            let mut attrs = String::new();
            for (k, v) in [
                ("lower", lim.lower),
                ("upper", lim.upper),
                ("velocity", lim.velocity),
                ("effort", lim.effort),
            ] {
                if let Some(v) = v {
                    let _ = write!(attrs, r#" {k}="{v}""#);
                }
            }
            let _ = writeln!(s, "    <limit{attrs}/>");
        }
        if let Some(m) = &j.motor {
            let p = &m.params;
            let _ = writeln!(
                s,
                r#"    <motor kt="{}" kvp="{}" kvn="{}" kcp="{}" kcn="{}" gear="{}"/>"#,
                p.k_t, p.k_vp, p.k_vn, p.k_cp, p.k_cn, m.gear
            );
        }
        if let Some(e) = &j.sea {
            let _ = writeln!(
                s,
                r#"    <sea stiffness="{}" damping="{}" motor_inertia="{}"/>"#,
                e.stiffness, e.damping, e.motor_inertia
            );
        }
        let _ = writeln!(s, "  </joint>");
    }
    for c in &desc.contacts {
        let _ = writeln!(
            s,
            r#"  <contact name="{}" link="{}" mu="{}" facets="{}">"#,
            c.name, c.link, c.mu, c.cone_facets
        );
        let _ = writeln!(
            s,
            r#"    <origin xyz="{}" rpy="{}"/>"#,
            v3(&c.origin.xyz),
            v3(&c.origin.rpy)
        );
        if let ContactKind::Surface { vertices } = &c.kind {
            let list: Vec<String> = vertices.iter().map(v3).collect();
            let _ = writeln!(s, "    <vertices>{}</vertices>", list.join("  "));
        }
        let _ = writeln!(s, "  </contact>");
    }
    s.push_str("</robot>\n");
    s
}
