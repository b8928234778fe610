use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Quaternion;
use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyDef, PropertyType,
    ScalarType,
};
use ply_rs::writer::Writer;

use crate::error::{Error, Result};
use crate::geometry::{CoverageField, Vec3};
use crate::splat::{Gaussian3D, GaussianSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyEncoding {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

impl From<PlyEncoding> for Encoding {
    fn from(e: PlyEncoding) -> Self {
        match e {
            PlyEncoding::Ascii => Encoding::Ascii,
            PlyEncoding::BinaryLittleEndian => Encoding::BinaryLittleEndian,
        }
    }
}

/// Point positions with optional linear RGB colors in `[0, 1]` and normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub colors: Option<Vec<Vec3>>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn get(e: &DefaultElement, name: &str, path: &Path, index: usize) -> Result<f64> {
    e.get(name).and_then(scalar).ok_or_else(|| {
        Error::parse(
            path,
            format!("vertex {index}: missing scalar property {name:?}"),
        )
    })
}

fn read_ply(path: &Path) -> Result<Ply<DefaultElement>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    Parser::<DefaultElement>::new()
        .read_ply(&mut r)
        .map_err(|e| Error::parse(path, e.to_string()))
}

fn vertices<'a>(ply: &'a Ply<DefaultElement>, path: &Path) -> Result<&'a [DefaultElement]> {
    ply.payload
        .get("vertex")
        .map(Vec::as_slice)
        .ok_or_else(|| Error::parse(path, "no vertex element"))
}

fn has(ply: &Ply<DefaultElement>, names: &[&str]) -> bool {
    ply.header
        .elements
        .get("vertex")
        .is_some_and(|e| names.iter().all(|n| e.properties.contains_key(*n)))
}

fn is_integer_color(ply: &Ply<DefaultElement>) -> bool {
    ply.header
        .elements
        .get("vertex")
        .and_then(|e| e.properties.get("red"))
        .is_some_and(|p| {
            !matches!(
                p.data_type,
                PropertyType::Scalar(ScalarType::Float | ScalarType::Double)
            )
        })
}

/// Reads vertex positions, plus `red/green/blue` (8-bit or float) and
/// `nx/ny/nz` when present. Faces of a mesh are ignored.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let ply = read_ply(path)?;
    let verts = vertices(&ply, path)?;
    let v3 = |e: &DefaultElement, i: usize, n: [&str; 3]| -> Result<Vec3> {
        Ok(Vec3::new(
            get(e, n[0], path, i)?,
            get(e, n[1], path, i)?,
            get(e, n[2], path, i)?,
        ))
    };
    let mut cloud = PointCloud::default();
    for (i, e) in verts.iter().enumerate() {
        cloud.positions.push(v3(e, i, ["x", "y", "z"])?);
    }
    if has(&ply, &["red", "green", "blue"]) {
        let div = if is_integer_color(&ply) { 255.0 } else { 1.0 };
        cloud.colors = Some(
            verts
                .iter()
                .enumerate()
                .map(|(i, e)| v3(e, i, ["red", "green", "blue"]).map(|c| c / div))
                .collect::<Result<_>>()?,
        );
    }
    if has(&ply, &["nx", "ny", "nz"]) {
        cloud.normals = Some(
            verts
                .iter()
                .enumerate()
                .map(|(i, e)| v3(e, i, ["nx", "ny", "nz"]))
                .collect::<Result<_>>()?,
        );
    }
    Ok(cloud)
}

fn vertex_element(props: &[(&str, ScalarType)], count: usize) -> ElementDef {
    let mut el = ElementDef::new("vertex".into());
    for (name, ty) in props {
        el.properties.add(PropertyDef::new(
            (*name).into(),
            PropertyType::Scalar(ty.clone()),
        ));
    }
    el.count = count;
    el
}

fn write_ply(
    path: &Path,
    encoding: PlyEncoding,
    element: ElementDef,
    rows: Vec<DefaultElement>,
) -> Result<()> {
    let mut ply = Ply::<DefaultElement>::new();
    ply.header.encoding = encoding.into();
    ply.header.elements.add(element);
    ply.payload.insert("vertex".into(), rows);
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    Writer::new()
        .write_ply(&mut w, &mut ply)
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Positions as float; colors as 8-bit `red/green/blue`.
pub fn write_point_cloud(path: &Path, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    let n = cloud.len();
    if cloud.colors.as_ref().is_some_and(|c| c.len() != n)
        || cloud.normals.as_ref().is_some_and(|c| c.len() != n)
    {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} colors and normals"),
            found: "attribute arrays of another length".into(),
        });
    }
    let mut props = vec![
        ("x", ScalarType::Float),
        ("y", ScalarType::Float),
        ("z", ScalarType::Float),
    ];
    if cloud.normals.is_some() {
        props.extend([
            ("nx", ScalarType::Float),
            ("ny", ScalarType::Float),
            ("nz", ScalarType::Float),
        ]);
    }
    if cloud.colors.is_some() {
        props.extend([
            ("red", ScalarType::UChar),
            ("green", ScalarType::UChar),
            ("blue", ScalarType::UChar),
        ]);
    }
    let rows = (0..n)
        .map(|i| {
            let mut e = DefaultElement::new();
            let p = cloud.positions[i];
            for (k, v) in ["x", "y", "z"].iter().zip(p.iter()) {
                e.insert((*k).into(), Property::Float(*v as f32));
            }
            if let Some(nrm) = &cloud.normals {
                for (k, v) in ["nx", "ny", "nz"].iter().zip(nrm[i].iter()) {
                    e.insert((*k).into(), Property::Float(*v as f32));
                }
            }
            if let Some(c) = &cloud.colors {
                for (k, v) in ["red", "green", "blue"].iter().zip(c[i].iter()) {
                    e.insert((*k).into(), Property::UChar(to_u8(*v)));
                }
            }
            e
        })
        .collect();
    write_ply(path, encoding, vertex_element(&props, n), rows)
}

const GAUSSIAN_PROPS: [&str; 14] = [
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3", "opacity",
    "red", "green", "blue",
];

/// Gaussians as binary PLY with double properties: position, log-scales,
/// quaternion `(w, x, y, z)`, opacity logit and linear RGB.
pub fn write_gaussians(path: &Path, set: &GaussianSet) -> Result<()> {
    let props: Vec<(&str, ScalarType)> = GAUSSIAN_PROPS
        .iter()
        .map(|n| (*n, ScalarType::Double))
        .collect();
    let rows = set
        .gaussians
        .iter()
        .map(|g| {
            let mut p = [0.0; 14];
            g.write_params(&mut p);
            let mut e = DefaultElement::new();
            for (k, v) in GAUSSIAN_PROPS.iter().zip(p) {
                e.insert((*k).into(), Property::Double(v));
            }
            e
        })
        .collect();
    write_ply(
        path,
        PlyEncoding::BinaryLittleEndian,
        vertex_element(&props, set.len()),
        rows,
    )
}

pub fn read_gaussians(path: &Path) -> Result<GaussianSet> {
    let ply = read_ply(path)?;
    let verts = vertices(&ply, path)?;
    let mut out = Vec::with_capacity(verts.len());
    for (i, e) in verts.iter().enumerate() {
        let mut p = [0.0; 14];
        for (slot, name) in p.iter_mut().zip(GAUSSIAN_PROPS) {
            *slot = get(e, name, path, i)?;
        }
        if Quaternion::new(p[6], p[7], p[8], p[9]).norm() < 1e-12 {
            return Err(Error::parse(
                path,
                format!("vertex {i}: zero rotation quaternion"),
            ));
        }
        out.push(Gaussian3D::from_params(&p));
    }
    Ok(GaussianSet::new(out))
}

pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];
pub const GRAY: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageClass {
    /// Seen by at least one input camera.
    Input,
    /// Seen only after adding planned cameras.
    Planned,
    Unseen,
}

impl CoverageClass {
    pub fn color(self) -> [u8; 3] {
        match self {
            CoverageClass::Input => RED,
            CoverageClass::Planned => GREEN,
            CoverageClass::Unseen => GRAY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub position: Vec3,
    pub class: CoverageClass,
}

/// Classifies every sample point given the field seen by the input cameras
/// and the field seen by the whole trajectory.
pub fn coverage_points(input: &CoverageField, full: &CoverageField) -> Result<Vec<CoveragePoint>> {
    if input.spheres().len() != full.spheres().len()
        || input.samples_per_sphere() != full.samples_per_sphere()
    {
        return Err(Error::DimensionMismatch {
            expected: format!(
                "{} spheres x {}",
                input.spheres().len(),
                input.samples_per_sphere()
            ),
            found: format!(
                "{} spheres x {}",
                full.spheres().len(),
                full.samples_per_sphere()
            ),
        });
    }
    let mut out = Vec::with_capacity(full.total_samples());
    for (i, sphere) in full.spheres().iter().enumerate() {
        for (k, p) in sphere.samples.iter().enumerate() {
            let class = if input.seen()[i].get(k) {
                CoverageClass::Input
            } else if full.seen()[i].get(k) {
                CoverageClass::Planned
            } else {
                CoverageClass::Unseen
            };
            out.push(CoveragePoint {
                position: *p,
                class,
            });
        }
    }
    Ok(out)
}

pub fn write_coverage_ply(
    path: &Path,
    points: &[CoveragePoint],
    encoding: PlyEncoding,
) -> Result<()> {
    let cloud = PointCloud {
        positions: points.iter().map(|p| p.position).collect(),
        colors: Some(
            points
                .iter()
                .map(|p| {
                    let [r, g, b] = p.class.color();
                    Vec3::new(r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0)
                })
                .collect(),
        ),
        normals: None,
    };
    write_point_cloud(path, &cloud, encoding)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud() -> PointCloud {
        PointCloud {
            positions: vec![Vec3::new(0.5, 1.25, -2.0), Vec3::new(3.0, 0.0, 1.0)],
            colors: Some(vec![
                Vec3::new(1.0, 0.0, 128.0 / 255.0),
                Vec3::new(0.0, 1.0, 0.0),
            ]),
            normals: Some(vec![Vec3::z(), Vec3::x()]),
        }
    }

    #[test]
    fn point_cloud_roundtrip_both_encodings() {
        let dir = tempfile::tempdir().unwrap();
        for enc in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
            let p = dir.path().join(format!("{enc:?}.ply"));
            write_point_cloud(&p, &cloud(), enc).unwrap();
            assert_eq!(read_point_cloud(&p).unwrap(), cloud());
        }
    }

    #[test]
    fn gaussians_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut g = Gaussian3D::isotropic(
            Vec3::new(0.1, 0.2, 0.3),
            0.07,
            0.61,
            Vec3::new(0.9, 0.1, 1.0 / 3.0),
        );
        g.rotation = Quaternion::new(0.3, -0.2, 0.5, 0.9);
        let set = GaussianSet::new(vec![g; 3]);
        let p = dir.path().join("g.ply");
        write_gaussians(&p, &set).unwrap();
        assert_eq!(read_gaussians(&p).unwrap(), set);
    }

    #[test]
    fn malformed_ascii_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ply");
        std::fs::write(
            &p,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 oops 2\n",
        )
        .unwrap();
        let e = read_point_cloud(&p).unwrap_err().to_string();
        assert!(e.contains("Line"), "{e}");
    }
}
