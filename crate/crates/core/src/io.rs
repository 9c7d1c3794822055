//! JSON documents exchanged by the command line tool: instances, angle data,
//! verdicts and solutions.
//!
//! An instance file describes the complex as a list of half-edges:
//!
//! ```json
//! {
//!   "surface": {"genus": 1, "boundary_components": 0},
//!   "vertices": [0, 1, 2, 3],
//!   "half_edges": [{"origin": 0, "next": 1, "twin": 5}, ...],
//!   "face_labels": {"0": "outer"},
//!   "angles": {"geometry": "euclidean", "theta": "pi*1/2", "kappa": {"0": 0, ...}}
//! }
//! ```
//!
//! Vertex entries are either ids (ignored beyond their count) or string
//! labels. The `angles` block is optional and may be given as a separate
//! file instead. Angle maps accept a single value applied everywhere, a list
//! in id order, or an object keyed by id; each value is a number of radians
//! or a symbolic multiple of π such as `"pi*1/2"` or `"2*pi/3"`.
//!
//! Floats are written with 17 significant digits so that re-runs produce
//! byte-identical output; non-finite values are written as `null`.

use crate::angle::Angle;
use crate::complex::{CellComplex, ComplexError, HalfEdge, SurfaceType};
use crate::conditions::{AngleData, FramedReading, Geometry, Rejection, Verdict};
use crate::reconstruct::{FramedPattern, Pattern, VerifyReport};
use crate::solver::{EdgeClass, SolveReport};
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("{0}")]
    Invalid(String),
}

impl IoError {
    pub fn name(&self) -> &'static str {
        match self {
            IoError::Json(_) => "MalformedJson",
            IoError::Complex(_) => "InvalidComplex",
            IoError::Invalid(_) => "InvalidInput",
        }
    }
}

// ---------------------------------------------------------------------------
// Float formatting

/// Pretty JSON formatter writing every float with 17 significant digits.
struct PreciseFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` as indented JSON with 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let fmt = PreciseFormatter { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| IoError::Invalid(e.to_string()))
}

/// Reads a float written by [`to_json`], mapping `null` back to NaN.
pub fn nullable_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub fn nullable_f64_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

// ---------------------------------------------------------------------------
// Instances

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexEntry {
    Id(u64),
    Label(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceType>,
    pub vertices: Vec<Option<VertexEntry>>,
    pub half_edges: Vec<HalfEdge>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub face_labels: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<AngleFile>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<InstanceFile, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validates the rotation system.
    pub fn complex(&self) -> Result<CellComplex, IoError> {
        let labels = self
            .vertices
            .iter()
            .map(|v| match v {
                Some(VertexEntry::Label(s)) => Some(s.clone()),
                _ => None,
            })
            .collect();
        let cx = CellComplex::build(self.vertices.len(), self.half_edges.clone(), self.surface)?;
        if let Some(&f) = self.face_labels.keys().find(|&&f| f >= cx.num_faces()) {
            return Err(IoError::Invalid(format!("label for missing face {f}")));
        }
        Ok(cx.with_labels(labels, self.face_labels.clone()))
    }

    pub fn from_complex(cx: &CellComplex, name: Option<String>, data: Option<&AngleData>) -> InstanceFile {
        let vertices = cx
            .vertex_labels()
            .iter()
            .enumerate()
            .map(|(i, l)| Some(l.clone().map(VertexEntry::Label).unwrap_or(VertexEntry::Id(i as u64))))
            .collect();
        InstanceFile {
            name,
            surface: Some(cx.surface_type()),
            vertices,
            half_edges: cx.half_edges().to_vec(),
            face_labels: cx.face_labels().clone(),
            angles: data.map(AngleFile::from_data),
        }
    }
}

/// Angles on a family of cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleMap {
    Uniform(Angle),
    List(Vec<Angle>),
    /// Keyed by cell id (JSON object keys are strings).
    ById(BTreeMap<String, Angle>),
}

impl AngleMap {
    /// Expands to one angle per cell `0..n`; every cell must be covered.
    pub fn resolve(&self, n: usize, what: &str) -> Result<Vec<Angle>, IoError> {
        match self {
            AngleMap::Uniform(a) => Ok(vec![*a; n]),
            AngleMap::List(v) if v.len() == n => Ok(v.clone()),
            AngleMap::List(v) => Err(IoError::Invalid(format!("{what}: expected {n} values, found {}", v.len()))),
            AngleMap::ById(m) => {
                let mut out = vec![None; n];
                for (k, a) in m {
                    let id: usize = k.trim().parse().map_err(|_| IoError::Invalid(format!("{what}: bad id {k:?}")))?;
                    let slot = out.get_mut(id).ok_or_else(|| IoError::Invalid(format!("{what}: id {id} out of range")))?;
                    if slot.replace(*a).is_some() {
                        return Err(IoError::Invalid(format!("{what}: id {id} given twice")));
                    }
                }
                out.into_iter()
                    .enumerate()
                    .map(|(i, a)| a.ok_or_else(|| IoError::Invalid(format!("{what}: no value for id {i}"))))
                    .collect()
            }
        }
    }
}

/// The angle data of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    /// Intersection angles, by edge of Γ.
    pub theta: AngleMap,
    /// Singular curvatures, by face of Γ.
    pub kappa: AngleMap,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub framed: bool,
    /// Framed patterns: angle with the boundary, by boundary vertex.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub boundary_angles: BTreeMap<usize, Angle>,
    /// Framed patterns: polygon angle, by boundary edge.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub polygonal_angles: BTreeMap<usize, Angle>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub forced_ideal: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framed_reading: Option<FramedReading>,
}

impl AngleFile {
    pub fn parse(text: &str) -> Result<AngleFile, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_data(d: &AngleData) -> AngleFile {
        AngleFile {
            geometry: Some(d.geometry),
            theta: AngleMap::List(d.theta.clone()),
            kappa: AngleMap::List(d.kappa.clone()),
            framed: d.framed,
            boundary_angles: d.boundary_angles.clone(),
            polygonal_angles: d.polygonal_angles.clone(),
            forced_ideal: d.forced_ideal.clone(),
            framed_reading: (d.framed_reading != FramedReading::default()).then_some(d.framed_reading),
        }
    }

    pub fn to_data(&self, cx: &CellComplex) -> Result<AngleData, IoError> {
        let data = AngleData {
            theta: self.theta.resolve(cx.num_edges(), "theta")?,
            kappa: self.kappa.resolve(cx.num_faces(), "kappa")?,
            geometry: self.geometry.unwrap_or_default(),
            framed: self.framed,
            boundary_angles: self.boundary_angles.clone(),
            polygonal_angles: self.polygonal_angles.clone(),
            forced_ideal: self.forced_ideal.clone(),
            framed_reading: self.framed_reading.unwrap_or_default(),
        };
        if let Some(&f) = data.forced_ideal.iter().find(|&&f| f >= cx.num_faces()) {
            return Err(IoError::Invalid(format!("forced_ideal: face {f} out of range")));
        }
        if data.framed && !cx.has_boundary() {
            return Err(IoError::Invalid("framed data on a closed surface".into()));
        }
        Ok(data)
    }
}

/// A complex together with its angle data.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: Option<String>,
    pub complex: CellComplex,
    pub data: AngleData,
}

impl Instance {
    /// Parses an instance file; the angle data comes from `angles` if given,
    /// otherwise from the instance's own `angles` block.
    pub fn parse(instance: &str, angles: Option<&str>) -> Result<Instance, IoError> {
        let file = InstanceFile::parse(instance)?;
        let complex = file.complex()?;
        let angle_file = match angles {
            Some(text) => AngleFile::parse(text)?,
            None => file.angles.clone().ok_or_else(|| IoError::Invalid("instance has no angle data".into()))?,
        };
        let data = angle_file.to_data(&complex)?;
        Ok(Instance { name: file.name, complex, data })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile::from_complex(&self.complex, self.name.clone(), Some(&self.data))
    }
}

// ---------------------------------------------------------------------------
// Verdicts

/// Cells of the offending object of a rejection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Witness {
    pub fn of(reason: &Rejection, cx: &CellComplex) -> Witness {
        match reason {
            Rejection::DomainViolation { domain, .. } => {
                let mut faces: BTreeSet<usize> = domain.contained_faces.iter().copied().collect();
                faces.extend(domain.pieces.iter().map(|p| p.face));
                Witness { faces: faces.into_iter().collect(), edges: domain.edge_multiplicity.keys().copied().collect() }
            }
            Rejection::ThetaOutOfRange { edge, .. } => Witness { faces: vec![], edges: vec![*edge] },
            Rejection::KappaOutOfRange { face, .. }
            | Rejection::DegenerateFace { face, .. }
            | Rejection::ForcedIdealNotTight { face, .. } => Witness { faces: vec![*face], edges: vec![] },
            Rejection::GaussBonnetMismatch { .. } => Witness { faces: (0..cx.num_faces()).collect(), edges: vec![] },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub accepted: bool,
    pub geometry: Geometry,
    pub euler_characteristic: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub verdict: Verdict,
}

impl VerdictFile {
    pub fn new(inst: &Instance, verdict: &Verdict) -> VerdictFile {
        VerdictFile {
            name: inst.name.clone(),
            accepted: verdict.is_accepted(),
            geometry: inst.data.geometry,
            euler_characteristic: inst.complex.euler_characteristic(),
            rejection: verdict.rejection().map(|r| r.name().to_string()),
            witness: verdict.rejection().map(|r| Witness::of(r, &inst.complex)),
            verdict: verdict.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Solutions

/// Agreed length of an edge of the cone complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeLength {
    pub id: usize,
    #[serde(flatten)]
    pub class: EdgeClass,
    #[serde(deserialize_with = "nullable_f64")]
    pub length: f64,
}

/// The interior dihedral angles of one tetrahedron of the cone complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetAngles {
    pub pyramid: usize,
    /// Faces of Γ over the three base vertices.
    pub faces: [usize; 3],
    /// Cone-complex edge ids, in the slot order of `angles`.
    pub edges: [usize; 6],
    pub angles: [f64; 6],
}

/// Everything `solve` writes. The pattern fields sit at the top level so that
/// `render` can read them back directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub ideal_faces: BTreeSet<usize>,
    pub theta_star: Vec<TetAngles>,
    pub edge_lengths: Vec<EdgeLength>,
    pub solver: SolveReport,
    #[serde(flatten)]
    pub pattern: Pattern,
    pub verification: VerifyReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framed: Option<FramedPattern>,
}

/// Reads the pattern out of a solution document (or a bare pattern).
pub fn parse_pattern(text: &str) -> Result<Pattern, IoError> {
    let p: Pattern = serde_json::from_str(text)?;
    let nf = p.dual_circles.len();
    let nv = p.charts.len();
    if p.principal_circles.len() != nv {
        return Err(IoError::Invalid("principal circles do not match the charts".into()));
    }
    for c in &p.charts {
        let d = c.corners.len();
        if c.points.len() != d || c.dual_radii.len() != d || c.corners.iter().any(|&f| f >= nf) {
            return Err(IoError::Invalid(format!("chart of vertex {} is inconsistent", c.vertex)));
        }
    }
    for d in &p.dual_circles {
        if d.chart >= nv {
            return Err(IoError::Invalid(format!("dual circle of face {} refers to a missing chart", d.face)));
        }
    }
    for c in &p.principal_circles {
        if c.chart >= nv {
            return Err(IoError::Invalid(format!("principal circle of vertex {} refers to a missing chart", c.vertex)));
        }
    }
    for a in &p.adjacencies {
        if a.left.0 >= nv || a.right.0 >= nv {
            return Err(IoError::Invalid(format!("adjacency across edge {} refers to a missing chart", a.edge)));
        }
    }
    Ok(p)
}
