//! CSV reports of benchmark records.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bench::BenchRecord;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Header line, in column order.
pub const CSV_HEADER: &str = "strategy,N,rho,d,kernel,repetition,wall_time_ns,blocks_launched,blocks_discarded,threads_discarded,I_measured,verified";

/// Writes the header and one row per record.
pub fn write_records<W: Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<(), ReportError> {
    let file = File::create(path).map_err(|source| ReportError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    write_records(records, &mut out).map_err(|source| ReportError::Csv {
        path: path.to_owned(),
        source,
    })?;
    out.flush().map_err(|source| ReportError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>, ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(csv_err)
}
