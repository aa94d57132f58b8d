//! JSON file formats for datasets, models, solutions and scenario scripts,
//! plus SVG figures.
//!
//! Every document is written in one canonical form: object keys sorted,
//! no insignificant whitespace, and floating-point numbers printed in
//! scientific notation with 17 significant digits. Loading and saving a
//! canonical document reproduces it byte for byte.

mod dataset;
mod model;
mod solution;
pub mod svg;

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

pub use dataset::{
    dataset_from_file, dataset_to_file, load_dataset, parse_dataset, save_dataset, DatasetFile, GeometryDto,
    GroupDto, PhaseDto, SceneDto, SceneObjectDto, TrajectoryDto, VocabularyDto,
};
pub(crate) use dataset::scene_from_dtos;
pub use model::{load_model, model_from_file, model_to_file, parse_model, save_model, ModelFile};
pub use solution::{load_solution, parse_solution, save_solution, solution_from_file, solution_to_file, SolutionFile};

/// Version written into, and required from, every document.
pub const FORMAT_VERSION: u32 = 1;

struct Canonical;

impl Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Canonical text of any serializable value, newline-terminated. Maps and
/// structs come out with sorted keys.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::schema("$", e))?;
    check_finite(&v, "$")?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Canonical);
    v.serialize(&mut ser).map_err(|e| Error::schema("$", e))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

// serde_json turns non-finite floats into null on the way into a Value.
fn check_finite(v: &serde_json::Value, path: &str) -> Result<()> {
    match v {
        serde_json::Value::Null => Err(Error::schema(path, "non-finite or missing number")),
        serde_json::Value::Array(a) => {
            a.iter().enumerate().try_for_each(|(i, x)| check_finite(x, &format!("{path}[{i}]")))
        }
        serde_json::Value::Object(m) => m.iter().try_for_each(|(k, x)| check_finite(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

/// Deserializes `text`, reporting failures with the JSON path of the
/// offending field.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(if path == "." { "$".to_string() } else { path }, e.into_inner())
    })?;
    Ok(value)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&std::fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_canonical_string(value)?)?;
    Ok(())
}

pub(crate) fn check_version(version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::schema("version", format!("unsupported version {version}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn floats_and_key_order() {
        let mut m = BTreeMap::new();
        m.insert("b", vec![0.1, 2.0, -0.0]);
        m.insert("a", vec![1e-300]);
        let s = to_canonical_string(&m).unwrap();
        assert_eq!(
            s,
            "{\"a\":[1.0000000000000000e-300],\"b\":[1.0000000000000001e-1,2.0000000000000000e0,-0.0000000000000000e0]}\n"
        );
        let back: BTreeMap<String, Vec<f64>> = from_json_str(&s).unwrap();
        assert_eq!(back["b"], vec![0.1, 2.0, -0.0]);
        assert_eq!(to_canonical_string(&back).unwrap(), s);
    }

    #[test]
    fn non_finite_is_rejected() {
        let err = to_canonical_string(&vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "$[1]"), "{err}");
    }

    #[test]
    fn error_names_the_path() {
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct Inner {
            x: f64,
        }
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct Outer {
            items: Vec<Inner>,
        }
        let err = from_json_str::<Outer>(r#"{"items":[{"x":1},{"x":"no"}]}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "items[1].x"), "{err}");
    }
}
