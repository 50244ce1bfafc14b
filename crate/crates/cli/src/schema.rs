//! JSON document schemas and their conversion to library types.

use std::fs;
use std::path::Path;

use kentropy::coarse::FiberMap;
use kentropy::lift::MarkovChannel;
use kentropy::taskgain::DistanceMatrix;
use kentropy::{JointPmf, Pmf, SimilarityMatrix, SymmetricMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfDoc {
    pub n: usize,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    pub nx: usize,
    pub ny: usize,
    pub mass: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub n: usize,
    pub m: usize,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub nx: usize,
    pub ny: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistDoc {
    pub n: usize,
    pub d: Vec<Vec<f64>>,
}

pub fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn check_len(what: &str, declared: usize, found: usize) -> Result<(), CliError> {
    if declared == found {
        Ok(())
    } else {
        Err(CliError::dimension(format!(
            "{what}: declared {declared}, found {found}"
        )))
    }
}

fn check_square(what: &str, n: usize, rows: &[Vec<f64>]) -> Result<(), CliError> {
    check_len(what, n, rows.len())?;
    for (i, row) in rows.iter().enumerate() {
        check_len(&format!("{what} row {i}"), n, row.len())?;
    }
    Ok(())
}

impl KernelDoc {
    pub fn from_kernel(k: &SimilarityMatrix) -> Self {
        Self {
            n: k.n(),
            entries: k.to_rows(),
        }
    }

    pub fn from_symmetric(k: &SymmetricMatrix) -> Self {
        Self {
            n: k.n(),
            entries: k.to_rows(),
        }
    }

    pub fn to_kernel(&self) -> Result<SimilarityMatrix, CliError> {
        check_square("kernel", self.n, &self.entries)?;
        Ok(SimilarityMatrix::from_rows(&self.entries)?)
    }
}

impl PmfDoc {
    pub fn from_pmf(p: &Pmf) -> Self {
        Self {
            n: p.n(),
            p: p.weights().to_vec(),
        }
    }

    pub fn to_pmf(&self) -> Result<Pmf, CliError> {
        check_len("pmf", self.n, self.p.len())?;
        Ok(Pmf::new(self.p.clone())?)
    }
}

impl JointDoc {
    pub fn to_joint(&self) -> Result<JointPmf, CliError> {
        check_len("joint rows", self.nx, self.mass.len())?;
        for (i, row) in self.mass.iter().enumerate() {
            check_len(&format!("joint row {i}"), self.ny, row.len())?;
        }
        Ok(JointPmf::from_rows(&self.mass)?)
    }
}

impl MapDoc {
    pub fn to_map(&self) -> Result<FiberMap, CliError> {
        check_len("map", self.n, self.labels.len())?;
        Ok(FiberMap::new(self.labels.clone(), self.m)?)
    }
}

impl ChannelDoc {
    pub fn to_channel(&self) -> Result<MarkovChannel, CliError> {
        check_len("channel rows", self.nx, self.rows.len())?;
        for (i, row) in self.rows.iter().enumerate() {
            check_len(&format!("channel row {i}"), self.ny, row.len())?;
        }
        Ok(MarkovChannel::from_rows(&self.rows)?)
    }
}

impl DistDoc {
    pub fn to_dist(&self) -> Result<DistanceMatrix, CliError> {
        check_square("dist", self.n, &self.d)?;
        Ok(DistanceMatrix::from_rows(&self.d)?)
    }
}
