//! Dataset descriptors and tensor ingestion.
//!
//! A descriptor is a JSON document naming the dataset, its mode labels,
//! optional aux metadata, and a data file. Data is either long-format CSV
//! records `time_label,instance_label,variable_label,value` (an optional
//! header row is skipped) or a binary block: three little-endian `u64`
//! lengths `T, N, D` followed by `T*N*D` little-endian `f64` values in
//! `(t, n, d)` row-major order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{AuxMetadata, Mode, Tensor3};

const MAX_REPORTED_MISSING: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Long,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub time_labels: Vec<String>,
    pub instance_labels: Vec<String>,
    pub variable_labels: Vec<String>,
    #[serde(default)]
    pub aux: AuxMetadata,
    /// Data file, relative to the descriptor's directory.
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
}

impl DatasetDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let desc: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidDataset(format!("descriptor: {e}")))?;
        desc.validate()?;
        Ok(desc)
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.time_labels.len(),
            self.instance_labels.len(),
            self.variable_labels.len(),
        ]
    }

    pub fn labels(&self, mode: Mode) -> &[String] {
        match mode {
            Mode::Time => &self.time_labels,
            Mode::Instance => &self.instance_labels,
            Mode::Variable => &self.variable_labels,
        }
    }

    pub fn data_format(&self) -> DataFormat {
        self.format.unwrap_or_else(|| {
            match self.data.extension().and_then(|e| e.to_str()) {
                Some("bin") => DataFormat::Binary,
                _ => DataFormat::Long,
            }
        })
    }

    fn validate(&self) -> Result<()> {
        for mode in Mode::ALL {
            let labels = self.labels(mode);
            if labels.len() < 2 {
                return Err(Error::InvalidDataset(format!(
                    "{mode} mode declares {} label(s), at least 2 required",
                    labels.len()
                )));
            }
            let mut seen = HashMap::new();
            for (i, l) in labels.iter().enumerate() {
                if let Some(prev) = seen.insert(l.as_str(), i) {
                    return Err(Error::InvalidDataset(format!(
                        "{mode} label '{l}' repeated at positions {prev} and {i}"
                    )));
                }
            }
            if let Some(meta) = self.aux.get(mode) {
                if meta.len() != labels.len() {
                    return Err(Error::InvalidDataset(format!(
                        "{mode} aux has {} entries for {} labels",
                        meta.len(),
                        labels.len()
                    )));
                }
            }
        }
        if let Some(dates) = &self.aux.time {
            for d in dates {
                NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| {
                    Error::InvalidDataset(format!("time aux '{d}' is not an ISO-8601 date: {e}"))
                })?;
            }
        }
        Ok(())
    }
}

/// A loaded dataset: its name plus the tensor.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub tensor: Tensor3,
}

/// Reads a descriptor file and the data file it points to.
pub fn load_dataset(descriptor_path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(descriptor_path).map_err(|e| {
        Error::InvalidDataset(format!("cannot read {}: {e}", descriptor_path.display()))
    })?;
    let desc = DatasetDescriptor::from_json(&text)?;
    let base = descriptor_path.parent().unwrap_or_else(|| Path::new("."));
    let data_path = base.join(&desc.data);
    let file = File::open(&data_path).map_err(|e| {
        Error::InvalidDataset(format!("cannot open {}: {e}", data_path.display()))
    })?;
    let reader = BufReader::new(file);
    let tensor = match desc.data_format() {
        DataFormat::Long => load_tensor(&desc, reader)?,
        DataFormat::Binary => load_binary(&desc, reader)?,
    };
    Ok(Dataset {
        name: desc.name,
        tensor,
    })
}

/// Builds a dense tensor from long-format records.
pub fn load_tensor<R: Read>(desc: &DatasetDescriptor, data: R) -> Result<Tensor3> {
    let index: Vec<HashMap<&str, usize>> = Mode::ALL
        .iter()
        .map(|&m| {
            desc.labels(m)
                .iter()
                .enumerate()
                .map(|(i, l)| (l.as_str(), i))
                .collect()
        })
        .collect();
    let [t_len, n_len, d_len] = desc.dims();
    let mut values = Array3::<f64>::zeros((t_len, n_len, d_len));
    let mut filled = Array3::<bool>::from_elem((t_len, n_len, d_len), false);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(data);
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("record {}: {e}", line + 1)))?;
        if record.len() != 4 {
            return Err(Error::Parse(format!(
                "record {}: expected 4 fields, found {}",
                line + 1,
                record.len()
            )));
        }
        let raw_value = &record[3];
        let value: f64 = match raw_value.parse() {
            Ok(v) => v,
            Err(_) if line == 0 => continue, // header row
            Err(_) => {
                return Err(Error::Parse(format!(
                    "record {}: '{raw_value}' is not a number",
                    line + 1
                )))
            }
        };
        let mut coord = [0usize; 3];
        for mode in Mode::ALL {
            let label = &record[mode.axis()];
            coord[mode.axis()] = *index[mode.axis()].get(label).ok_or_else(|| {
                Error::InvalidDataset(format!(
                    "record {}: unknown {mode} label '{label}'",
                    line + 1
                ))
            })?;
        }
        if !value.is_finite() {
            return Err(Error::NonFinite {
                value,
                location: format!("record {} ({}, {}, {})", line + 1, &record[0], &record[1], &record[2]),
            });
        }
        if filled[coord] {
            return Err(Error::DuplicateCell {
                time: record[0].to_string(),
                instance: record[1].to_string(),
                variable: record[2].to_string(),
            });
        }
        filled[coord] = true;
        values[coord] = value;
    }

    let missing: Vec<_> = filled
        .indexed_iter()
        .filter(|(_, f)| !**f)
        .map(|(c, _)| c)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCells {
            count: missing.len(),
            first: missing
                .iter()
                .take(MAX_REPORTED_MISSING)
                .map(|(t, n, d)| format!("(t={t},n={n},d={d})"))
                .collect(),
        });
    }
    build(desc, values)
}

/// Builds a dense tensor from the binary block format.
pub fn load_binary<R: Read>(desc: &DatasetDescriptor, mut data: R) -> Result<Tensor3> {
    let mut header = [0u8; 24];
    data.read_exact(&mut header)
        .map_err(|e| Error::Parse(format!("binary header: {e}")))?;
    let lens: Vec<usize> = header
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let dims = desc.dims();
    if lens != dims {
        return Err(Error::InvalidDataset(format!(
            "binary block declares {lens:?}, descriptor declares {dims:?}"
        )));
    }
    let count = dims.iter().product::<usize>();
    let mut bytes = Vec::with_capacity(count * 8);
    data.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::LengthMismatch {
            expected: count * 8,
            actual: bytes.len(),
        });
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array3::from_shape_vec((dims[0], dims[1], dims[2]), flat)
        .expect("length checked above");
    build(desc, values)
}

fn build(desc: &DatasetDescriptor, values: Array3<f64>) -> Result<Tensor3> {
    Tensor3::new(
        values,
        desc.time_labels.clone(),
        desc.instance_labels.clone(),
        desc.variable_labels.clone(),
    )?
    .with_aux(desc.aux.clone())
}

/// Writes long-format records with round-trip float formatting.
pub fn write_long<W: Write>(tensor: &Tensor3, out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(out);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    for ((t, n, d), v) in tensor.values().indexed_iter() {
        writer
            .write_record([
                tensor.labels(Mode::Time)[t].as_str(),
                tensor.labels(Mode::Instance)[n].as_str(),
                tensor.labels(Mode::Variable)[d].as_str(),
                &format!("{v:?}"),
            ])
            .map_err(to_io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(tensor: &Tensor3, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for len in tensor.dims() {
        out.write_all(&(len as u64).to_le_bytes())?;
    }
    for v in tensor.values().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Descriptor matching `tensor`'s labels, pointing at `data`.
pub fn descriptor_for(name: &str, tensor: &Tensor3, data: impl Into<PathBuf>) -> DatasetDescriptor {
    DatasetDescriptor {
        name: name.to_string(),
        time_labels: tensor.labels(Mode::Time).to_vec(),
        instance_labels: tensor.labels(Mode::Instance).to_vec(),
        variable_labels: tensor.labels(Mode::Variable).to_vec(),
        aux: tensor.aux().clone(),
        data: data.into(),
        format: None,
    }
}

/// Writes `<dir>/<name>.json` plus its data file; returns the descriptor path.
pub fn save_dataset(dir: &Path, name: &str, tensor: &Tensor3, format: DataFormat) -> Result<PathBuf> {
    let data_name = match format {
        DataFormat::Long => format!("{name}.csv"),
        DataFormat::Binary => format!("{name}.bin"),
    };
    let file = File::create(dir.join(&data_name))?;
    match format {
        DataFormat::Long => write_long(tensor, BufWriter::new(file))?,
        DataFormat::Binary => write_binary(tensor, file)?,
    }
    let mut desc = descriptor_for(name, tensor, data_name);
    desc.format = Some(format);
    let path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&desc).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(path)
}
