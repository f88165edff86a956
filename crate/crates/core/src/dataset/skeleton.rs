use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Joint layout of a pose: names, the root (pelvis), the joints used for
/// body-orientation statistics, and the bone tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    name: String,
    joint_names: Vec<String>,
    root_index: usize,
    left_hip_index: usize,
    right_hip_index: usize,
    torso_index: usize,
    edges: Vec<(usize, usize)>,
    /// Parent-to-child bone vector of each joint in a neutral standing pose,
    /// body frame with x to the subject's left, y down, z toward the back.
    /// Zero for the root.
    rest_offsets: Vec<Vector3<f64>>,
}

const H36M_JOINTS: [(&str, Option<usize>, [f64; 3]); 17] = [
    ("pelvis", None, [0.0, 0.0, 0.0]),
    ("right_hip", Some(0), [-0.13, 0.0, 0.0]),
    ("right_knee", Some(1), [0.0, 0.45, 0.0]),
    ("right_ankle", Some(2), [0.0, 0.44, 0.0]),
    ("left_hip", Some(0), [0.13, 0.0, 0.0]),
    ("left_knee", Some(4), [0.0, 0.45, 0.0]),
    ("left_ankle", Some(5), [0.0, 0.44, 0.0]),
    ("spine", Some(0), [0.0, -0.23, 0.0]),
    ("thorax", Some(7), [0.0, -0.25, 0.0]),
    ("neck", Some(8), [0.0, -0.11, 0.0]),
    ("head", Some(9), [0.0, -0.12, 0.0]),
    ("left_shoulder", Some(8), [0.15, 0.0, 0.0]),
    ("left_elbow", Some(11), [0.0, 0.28, 0.0]),
    ("left_wrist", Some(12), [0.0, 0.25, 0.0]),
    ("right_shoulder", Some(8), [-0.15, 0.0, 0.0]),
    ("right_elbow", Some(14), [0.0, 0.28, 0.0]),
    ("right_wrist", Some(15), [0.0, 0.25, 0.0]),
];

impl Skeleton {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        joint_names: Vec<String>,
        root_index: usize,
        left_hip_index: usize,
        right_hip_index: usize,
        torso_index: usize,
        edges: Vec<(usize, usize)>,
        rest_offsets: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            joint_names,
            root_index,
            left_hip_index,
            right_hip_index,
            torso_index,
            edges,
            rest_offsets,
        };
        s.validate()?;
        Ok(s)
    }

    /// The 17-joint Human3.6M layout.
    pub fn h36m17() -> Self {
        let mut edges = Vec::new();
        for (child, (_, parent, _)) in H36M_JOINTS.iter().enumerate() {
            if let Some(p) = parent {
                edges.push((*p, child));
            }
        }
        Self::new(
            "h36m17",
            H36M_JOINTS.iter().map(|(n, _, _)| n.to_string()).collect(),
            0,
            4,
            1,
            7,
            edges,
            H36M_JOINTS.iter().map(|(_, _, o)| Vector3::from(*o)).collect(),
        )
        .expect("built-in skeleton is valid")
    }

    /// Looks up a built-in skeleton.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "h36m17" | "h36m" => Ok(Self::h36m17()),
            other => Err(Error::InvalidSkeleton(format!(
                "unknown skeleton '{other}' (known: h36m17)"
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        let j = self.joint_names.len();
        let bad = |m: String| Err(Error::InvalidSkeleton(m));
        if j == 0 {
            return bad("no joints".into());
        }
        let special = [
            self.root_index,
            self.left_hip_index,
            self.right_hip_index,
            self.torso_index,
        ];
        if let Some(i) = special.iter().find(|&&i| i >= j) {
            return bad(format!("index {i} out of range for {j} joints"));
        }
        for a in 0..4 {
            for b in a + 1..4 {
                if special[a] == special[b] {
                    return bad("root, hips and torso must be distinct joints".into());
                }
            }
        }
        if self.rest_offsets.len() != j {
            return bad(format!(
                "{} rest offsets for {j} joints",
                self.rest_offsets.len()
            ));
        }
        if self.edges.len() != j - 1 {
            return bad(format!("a tree over {j} joints needs {} edges", j - 1));
        }
        let mut parent = vec![None; j];
        for &(p, c) in &self.edges {
            if p >= j || c >= j {
                return bad(format!("edge ({p}, {c}) out of range"));
            }
            if c == self.root_index || parent[c].is_some() {
                return bad(format!("joint {c} has more than one parent or is the root"));
            }
            parent[c] = Some(p);
        }
        if self.traversal_order().len() != j {
            return bad("edges do not connect every joint to the root".into());
        }
        Ok(())
    }

    /// Joints in breadth-first order from the root; parents precede children.
    pub fn traversal_order(&self) -> Vec<usize> {
        let mut order = vec![self.root_index];
        let mut next = 0;
        while next < order.len() {
            let p = order[next];
            for &(a, c) in &self.edges {
                if a == p && !order.contains(&c) {
                    order.push(c);
                }
            }
            next += 1;
        }
        order
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.edges.iter().find(|(_, c)| *c == joint).map(|(p, _)| *p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn left_hip_index(&self) -> usize {
        self.left_hip_index
    }

    pub fn right_hip_index(&self) -> usize {
        self.right_hip_index
    }

    pub fn torso_index(&self) -> usize {
        self.torso_index
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn rest_offsets(&self) -> &[Vector3<f64>] {
        &self.rest_offsets
    }
}
