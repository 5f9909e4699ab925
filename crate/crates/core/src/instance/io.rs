//! TOML instance files.
//!
//! An instance file has four tables, `topology`, `catalog`, `demand` and
//! `params`, whose keys are the field names of [`Topology`],
//! [`VariantCatalog`], [`DemandMatrix`] and [`Params`]. Communication latencies
//! and tangent lines are derived on load and never stored. See
//! `docs/file-formats.md` for a complete example.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_instance, DemandMatrix, Instance, Params, Topology, VariantCatalog};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    topology: Topology,
    catalog: VariantCatalog,
    #[serde(default)]
    demand: DemandMatrix,
    params: Params,
}

pub(crate) fn toml_error(text: &str, err: &toml::de::Error) -> Error {
    let line = err
        .span()
        .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::parse(line, err.message().trim().to_string())
}

/// Parses and validates an instance document.
pub fn from_toml(text: &str) -> Result<Instance> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    build_instance(file.topology, file.catalog, file.demand, file.params)
}

pub fn to_toml(instance: &Instance) -> String {
    let file = InstanceFile {
        topology: instance.topology().clone(),
        catalog: instance.catalog().clone(),
        demand: instance.demand().clone(),
        params: instance.params().clone(),
    };
    toml::to_string(&file).expect("instance serializes")
}

pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_toml(&text)
}

pub fn save(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_toml(instance)).map_err(|e| Error::io(path, e))
}
