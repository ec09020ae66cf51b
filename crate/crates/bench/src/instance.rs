//! Instance files: `{family, N, M?, eta?, seed, dims, data}`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nsdp_core::problems::{Family, GeneratedInstance, InstanceData, InstanceSpec, TestProblem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    /// Written for readers; checked against the family and size on load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Dims>,
    pub data: InstanceData,
}

impl InstanceFile {
    pub fn generate(spec: &InstanceSpec) -> Result<Self> {
        let inst = GeneratedInstance::generate(spec)?;
        let (n, m, d) = spec.dims();
        Ok(Self {
            spec: inst.spec,
            dims: Some(Dims { n, m, d }),
            data: inst.data,
        })
    }

    pub fn problem(&self) -> Result<TestProblem> {
        if let Some(dims) = self.dims {
            let (n, m, d) = self.spec.dims();
            if dims != (Dims { n, m, d }) {
                bail!("dims {dims:?} do not match the instance (n={n}, m={m}, d={d})");
            }
        }
        Ok(TestProblem::from_data(&self.spec, &self.data)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing instance {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text)?;
        raw.spec.validate()?;
        let data = parse_data(raw.spec.family, raw.data).context("field `data`")?;
        Ok(Self {
            spec: raw.spec,
            dims: raw.dims,
            data,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Reading goes through the family so that errors name the missing field.
#[derive(Deserialize)]
struct RawFile {
    #[serde(flatten)]
    spec: InstanceSpec,
    #[serde(default)]
    dims: Option<Dims>,
    data: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct P1Data {
    #[serde(rename = "C")]
    c: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct P2Data {
    alpha: Vec<f64>,
    b: Vec<f64>,
    #[serde(rename = "V")]
    v: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct P3Data {
    a: Vec<f64>,
    r: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct P4Data {
    #[serde(rename = "A")]
    a: Vec<f64>,
}

fn parse_data(family: Family, value: serde_json::Value) -> Result<InstanceData> {
    Ok(match family {
        Family::P1 => {
            let P1Data { c } = serde_json::from_value(value)?;
            InstanceData::P1 { c }
        }
        Family::P2 => {
            let P2Data { alpha, b, v } = serde_json::from_value(value)?;
            InstanceData::P2 { alpha, b, v }
        }
        Family::P3 => {
            let P3Data { a, r } = serde_json::from_value(value)?;
            InstanceData::P3 { a, r }
        }
        Family::P4 => {
            let P4Data { a } = serde_json::from_value(value)?;
            InstanceData::P4 { a }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_instance_reads_back() {
        let inst = InstanceFile::generate(&InstanceSpec::p2(6, 3, 11)).unwrap();
        let back = InstanceFile::parse(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.dims, Some(Dims { n: 21, m: 3, d: 6 }));
    }

    #[test]
    fn missing_data_field_is_named() {
        let text = r#"{"family":"p2","N":3,"M":1,"seed":0,"data":{"alpha":[0,0,0],"b":[0]}}"#;
        let err = format!("{:#}", InstanceFile::parse(text).unwrap_err());
        assert!(err.contains("missing field `V`"), "{err}");
        assert!(err.contains("`data`"), "{err}");
    }

    #[test]
    fn missing_spec_field_is_named() {
        let err = format!("{:#}", InstanceFile::parse(r#"{"family":"p4","seed":0,"data":{"A":[1]}}"#).unwrap_err());
        assert!(err.contains("`N`"), "{err}");
    }

    #[test]
    fn wrong_length_is_rejected() {
        let text = r#"{"family":"p4","N":2,"eta":0.001,"seed":0,"data":{"A":[1,0,0]}}"#;
        assert!(InstanceFile::parse(text).unwrap().problem().is_err());
    }

    #[test]
    fn stale_dims_are_rejected() {
        let mut inst = InstanceFile::generate(&InstanceSpec::p4(3, 1e-3, 0)).unwrap();
        inst.dims = Some(Dims { n: 6, m: 3, d: 4 });
        assert!(inst.problem().is_err());
    }
}
