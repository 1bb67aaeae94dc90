//! Detector cost catalog files.
//!
//! ```json
//! {"detectors": [{"name": "yolov3-spp", "input_size": 416, "gflops": 66.4}]}
//! ```

use std::fs;
use std::path::Path;

use roifuse_core::detector::CatalogEntry;
use roifuse_core::FlopsCatalog;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SchemaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    detectors: Vec<CatalogEntry>,
}

pub fn catalog_from_json(text: &str, path: &Path) -> Result<FlopsCatalog> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: CatalogFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Json {
                path: path.to_path_buf(),
                source: inner,
            }
        } else {
            SchemaError::new(None, field, inner.to_string()).into()
        }
    })?;
    Ok(FlopsCatalog::from_entries(file.detectors)?)
}

pub fn load_catalog(path: &Path) -> Result<FlopsCatalog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    catalog_from_json(&text, path)
}

pub fn catalog_to_json(catalog: &FlopsCatalog) -> String {
    let file = CatalogFile {
        detectors: catalog.entries().to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("catalog serializes");
    s.push('\n');
    s
}
