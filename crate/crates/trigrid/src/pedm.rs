//! Reading and writing packed EDM dumps.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use trigrid_core::edm::PackedEdm;

#[derive(Debug, Error)]
pub enum PedmError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: trigrid_core::Error,
    },
}

pub fn write_pedm(m: &PackedEdm, path: &Path) -> Result<(), PedmError> {
    fs::write(path, m.to_bytes()).map_err(|source| PedmError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_pedm(path: &Path) -> Result<PackedEdm, PedmError> {
    let bytes = fs::read(path).map_err(|source| PedmError::Io {
        path: path.to_owned(),
        source,
    })?;
    PackedEdm::from_bytes(&bytes).map_err(|source| PedmError::Format {
        path: path.to_owned(),
        source,
    })
}
