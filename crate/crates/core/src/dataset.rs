//! Manifest loading, train/test splitting and Min-Max scaling.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// The eight instrument classes, in label-index order.
pub const INSTRUMENT_CLASSES: [&str; 8] = [
    "clarinet",
    "distorted electric guitar",
    "female singer",
    "flute",
    "piano",
    "tenor saxophone",
    "trumpet",
    "violin",
];

/// Case-insensitive lookup of a class name.
pub fn class_index(class_names: &[String], label: &str) -> Option<usize> {
    let label = label.trim();
    class_names.iter().position(|c| c.eq_ignore_ascii_case(label))
}

pub fn default_class_names() -> Vec<String> {
    INSTRUMENT_CLASSES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub uuid: String,
    pub label: usize,
    pub clip_path: PathBuf,
    /// Optional split assignment carried by the manifest itself.
    pub subset: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, ratio: f64, seed: u64) -> Result<SplitAssignment> {
        split_train_test(self.entries.len(), ratio, seed)
    }
}

/// Reads a comma-separated manifest.
///
/// Required columns are `uuid` (or `uuid4`), `instrument` and `path`. When
/// `path` is absent but `subset` and `instrument_id` are present, the file
/// name follows the Medley-solos-DB convention
/// `Medley-solos-DB_{subset}-{instrument_id}_{uuid}.wav`. Relative paths
/// resolve against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(file, &base)
}

pub fn read_manifest<R: std::io::Read>(input: R, base_dir: &Path) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: HashMap<String, usize> = reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_ascii_lowercase(), i))
        .collect();
    let col = |names: &[&str]| names.iter().find_map(|n| header.get(*n).copied());
    let uuid_col = col(&["uuid", "uuid4"]).ok_or_else(|| Error::MissingColumn("uuid".into()))?;
    let label_col = col(&["instrument"]).ok_or_else(|| Error::MissingColumn("instrument".into()))?;
    let path_col = col(&["path"]);
    let subset_col = col(&["subset"]);
    let instrument_id_col = col(&["instrument_id"]);
    if path_col.is_none() && (subset_col.is_none() || instrument_id_col.is_none()) {
        return Err(Error::MissingColumn("path".into()));
    }

    let class_names = default_class_names();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let get = |c: usize| record.get(c).unwrap_or("").to_string();
        let uuid = get(uuid_col);
        let label_text = get(label_col);
        let label = class_index(&class_names, &label_text).ok_or(Error::UnknownLabel {
            row,
            label: label_text.clone(),
        })?;
        let subset = subset_col.map(get).filter(|s| !s.is_empty());
        let rel = match path_col {
            Some(c) => PathBuf::from(get(c)),
            None => PathBuf::from(format!(
                "Medley-solos-DB_{}-{}_{}.wav",
                subset.as_deref().unwrap_or(""),
                get(instrument_id_col.expect("checked above")),
                uuid
            )),
        };
        if rel.as_os_str().is_empty() {
            return Err(Error::Parse(format!("row {row}: empty path")));
        }
        entries.push(ManifestEntry {
            uuid,
            label,
            clip_path: if rel.is_absolute() { rel } else { base_dir.join(rel) },
            subset,
        });
    }
    if entries.is_empty() {
        return Err(Error::Empty("manifest has no entries"));
    }
    Ok(DatasetManifest {
        entries,
        class_names,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    /// Ascending indices into the source list.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Seeded uniform shuffle of `0..count`; the first `round(ratio · count)`
/// indices train and the rest test. Both sides keep at least one index.
/// Depends only on `(count, ratio, seed)`.
pub fn split_train_test(count: usize, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    if count < 2 {
        return Err(Error::invalid("splitting needs at least 2 entries"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratio * count as f64).round() as usize).clamp(1, count - 1);
    let mut train_indices = order[..n_train].to_vec();
    let mut test_indices = order[n_train..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(SplitAssignment {
        train_indices,
        test_indices,
        seed,
        ratio,
    })
}

/// Split taken from the manifest's `subset` column: rows marked `test` go
/// to the test side, everything else trains.
pub fn split_by_subset(subsets: &[Option<&str>]) -> Result<SplitAssignment> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..subsets.len())
        .partition(|&i| subsets[i].is_some_and(|s| s.eq_ignore_ascii_case("test")));
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("subset column must mark both train and test rows"));
    }
    let ratio = train.len() as f64 / subsets.len() as f64;
    Ok(SplitAssignment {
        train_indices: train,
        test_indices: test,
        seed: 0,
        ratio,
    })
}

/// Per-column `(x - min) / (max - min)` fit on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(train: &DenseMatrix) -> Result<Self> {
        if train.rows() == 0 {
            return Err(Error::Empty("scaler fit matrix"));
        }
        let mut min = vec![f64::INFINITY; train.cols()];
        let mut max = vec![f64::NEG_INFINITY; train.cols()];
        for row in train.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dimension(&self) -> usize {
        self.min.len()
    }

    fn check(&self, m: &DenseMatrix) -> Result<()> {
        if m.cols() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: m.cols(),
            });
        }
        Ok(())
    }

    /// Constant columns map to 0; values outside the fitted range are not
    /// clipped.
    pub fn transform(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(features)?;
        let mut out = features.clone();
        for r in 0..out.rows() {
            for j in 0..out.cols() {
                let range = self.max[j] - self.min[j];
                let v = if range > 0.0 {
                    (out.get(r, j) - self.min[j]) / range
                } else {
                    0.0
                };
                out.set(r, j, v);
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let m = DenseMatrix::new(row.to_vec(), 1, row.len())?;
        Ok(self.transform(&m)?.row(0).to_vec())
    }

    pub fn inverse_transform(&self, scaled: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(scaled)?;
        let mut out = scaled.clone();
        for r in 0..out.rows() {
            for j in 0..out.cols() {
                out.set(r, j, self.min[j] + out.get(r, j) * (self.max[j] - self.min[j]));
            }
        }
        Ok(out)
    }

    /// Two comma-separated rows: minima, then maxima.
    pub fn to_csv(&self) -> String {
        let row = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        format!("{}\n{}\n", row(&self.min), row(&self.max))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = text.lines().filter(|l| !l.trim().is_empty()).map(|l| {
            l.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad scaler value {v:?}")))
                })
                .collect::<Result<Vec<_>>>()
        });
        let min = rows.next().ok_or(Error::Parse("scaler file is empty".into()))??;
        let max = rows.next().ok_or(Error::Parse("scaler file lacks a max row".into()))??;
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                found: max.len(),
            });
        }
        if min.iter().zip(&max).any(|(a, b)| a > b) {
            return Err(Error::Parse("scaler min exceeds max".into()));
        }
        Ok(Self { min, max })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_in_order() {
        let text = "uuid,instrument,path\na,flute,a.wav\nb,Piano,sub/b.wav\nc,violin,/abs/c.wav\n";
        let m = read_manifest(text.as_bytes(), Path::new("/data")).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries[0].uuid, "a");
        assert_eq!(m.entries[0].label, 3);
        assert_eq!(m.entries[1].label, 4);
        assert_eq!(m.entries[1].clip_path, PathBuf::from("/data/sub/b.wav"));
        assert_eq!(m.entries[2].clip_path, PathBuf::from("/abs/c.wav"));
    }

    #[test]
    fn manifest_errors() {
        let bad = "uuid,instrument,path\na,flute,a.wav\nb,harp,b.wav\n";
        match read_manifest(bad.as_bytes(), Path::new(".")) {
            Err(Error::UnknownLabel { row: 2, label }) => assert_eq!(label, "harp"),
            other => panic!("unexpected {other:?}"),
        }
        let missing = "uuid,path\na,a.wav\n";
        assert!(matches!(
            read_manifest(missing.as_bytes(), Path::new(".")),
            Err(Error::MissingColumn(c)) if c == "instrument"
        ));
        assert!(read_manifest("".as_bytes(), Path::new(".")).is_err());
        assert!(read_manifest("uuid,instrument,path\n".as_bytes(), Path::new(".")).is_err());
    }

    #[test]
    fn medley_metadata_layout() {
        let text = "subset,instrument,instrument_id,song_id,uuid4\n\
                    training,clarinet,0,0,0e4371ac-1c6a-51ab-fdb7-f8abd5fbf1a3\n";
        let m = read_manifest(text.as_bytes(), Path::new("/m")).unwrap();
        assert_eq!(
            m.entries[0].clip_path,
            PathBuf::from("/m/Medley-solos-DB_training-0_0e4371ac-1c6a-51ab-fdb7-f8abd5fbf1a3.wav")
        );
        assert_eq!(m.entries[0].subset.as_deref(), Some("training"));
    }

    #[test]
    fn split_sizes() {
        let s = split_train_test(10, 0.7, 1).unwrap();
        assert_eq!(s.train_indices.len(), 7);
        assert_eq!(s.test_indices.len(), 3);
        assert!(s.train_indices.iter().all(|i| !s.test_indices.contains(i)));
        assert_eq!(s, split_train_test(10, 0.7, 1).unwrap());
        assert!(split_train_test(1, 0.7, 1).is_err());
        assert!(split_train_test(10, 1.0, 1).is_err());
    }

    #[test]
    fn subset_split() {
        let s = split_by_subset(&[Some("training"), Some("test"), Some("validation"), None]).unwrap();
        assert_eq!(s.train_indices, vec![0, 2, 3]);
        assert_eq!(s.test_indices, vec![1]);
    }

    #[test]
    fn scaler_cases() {
        let one = DenseMatrix::from_rows(&[[1.0, -2.0]]).unwrap();
        let s = MinMaxScaler::fit(&one).unwrap();
        assert_eq!(s.min, vec![1.0, -2.0]);
        assert_eq!(s.max, vec![1.0, -2.0]);
        assert_eq!(s.transform(&one).unwrap().row(0), &[0.0, 0.0]);

        let col = DenseMatrix::from_rows(&[[0.0], [5.0], [10.0]]).unwrap();
        let s = MinMaxScaler::fit(&col).unwrap();
        assert_eq!((s.min[0], s.max[0]), (0.0, 10.0));
        assert_eq!(s.transform_row(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(s.transform_row(&[10.0]).unwrap(), vec![1.0]);
        assert_eq!(s.transform_row(&[15.0]).unwrap(), vec![1.5]);
        assert!(s.transform_row(&[1.0, 2.0]).is_err());
        assert!(MinMaxScaler::fit(&DenseMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn scaler_csv_round_trip() {
        let s = MinMaxScaler {
            min: vec![0.1, -3.0],
            max: vec![0.7, 2.5e-9],
        };
        assert_eq!(MinMaxScaler::from_csv(&s.to_csv()).unwrap(), s);
        assert!(MinMaxScaler::from_csv("1,2\n0,0\n").is_err());
    }
}
