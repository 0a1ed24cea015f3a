//! Dataset ingestion: the built-in alligator sample, generic CSV files with
//! a `y,x1,...,xd` header, and the UCI glass identification file.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{Dataset, Observation, Response, ResponseSpace};

/// Primary food choice (I invertebrates, F fish, O other) and length in
/// metres of 39 male alligators from Lake George, Florida.
#[rustfmt::skip]
const ALLIGATOR: [(f64, &str); 39] = [
    (1.30, "I"), (1.32, "F"), (1.32, "F"), (1.40, "F"), (1.42, "I"), (1.42, "F"),
    (1.47, "I"), (1.47, "F"), (1.50, "I"), (1.52, "I"), (1.63, "I"), (1.65, "O"),
    (1.65, "O"), (1.65, "I"), (1.65, "F"), (1.68, "F"), (1.70, "I"), (1.73, "O"),
    (1.78, "F"), (1.78, "O"), (1.80, "F"), (1.85, "F"), (1.93, "I"), (1.93, "F"),
    (1.98, "I"), (2.03, "F"), (2.03, "F"), (2.31, "F"), (2.36, "F"), (2.46, "F"),
    (3.25, "O"), (3.28, "O"), (3.33, "F"), (3.56, "F"), (3.58, "F"), (3.66, "F"),
    (3.68, "O"), (3.71, "F"), (3.89, "F"),
];

pub const BUILTIN_NAMES: [(&str, &str); 2] = [
    (
        "alligator",
        "39 male alligators: length (m) -> primary food choice {I, F, O}; compiled in",
    ),
    (
        "glass",
        "UCI glass identification, 214 rows, 9 features, 6 classes; pass glass=PATH",
    ),
];

/// The built-in alligator dataset with label alphabet `[I, F, O]`.
pub fn alligator() -> Dataset {
    let space = ResponseSpace::labels(["I", "F", "O"]).expect("static alphabet");
    Dataset::from_labelled(space, ALLIGATOR.iter().map(|&(x, y)| (vec![x], y)))
        .expect("static data is valid")
}

/// How to interpret the response column of a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Classification if any response fails to parse as a number.
    Auto,
    Regression,
    Classification,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::BadCsv(format!("{}: {e}", path.display())),
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::BadCsv(e.to_string())
}

fn parse_feature(cell: &str, row: usize, col: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::BadCsv(format!("row {row}, column {col}: not a number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(Error::BadCsv(format!(
            "row {row}, column {col}: non-finite value"
        )));
    }
    Ok(v)
}

/// Builds a dataset from raw feature rows and response strings.
fn assemble(features: Vec<Vec<f64>>, responses: Vec<String>, task: Task) -> Result<Dataset> {
    let numeric: Option<Vec<f64>> = responses
        .iter()
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let classify = match task {
        Task::Classification => true,
        Task::Regression => false,
        Task::Auto => numeric.is_none(),
    };
    if classify {
        let mut alphabet: Vec<String> = Vec::new();
        for r in &responses {
            let r = r.trim();
            if !alphabet.iter().any(|a| a == r) {
                alphabet.push(r.to_string());
            }
        }
        if alphabet.is_empty() {
            return Err(Error::BadCsv("no rows".into()));
        }
        let space = ResponseSpace::labels(alphabet)?;
        let rows: Vec<(Vec<f64>, String)> = features
            .into_iter()
            .zip(responses)
            .map(|(x, y)| (x, y.trim().to_string()))
            .collect();
        Dataset::from_labelled(space, rows)
    } else {
        let ys = numeric
            .ok_or_else(|| Error::BadCsv("non-numeric response in regression data".into()))?;
        Dataset::from_real(features.into_iter().zip(ys))
    }
}

/// Reads a CSV with a mandatory header naming a `y` column and feature
/// columns `x1..xd`.
pub fn read_csv<R: Read>(reader: R, task: Task) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Error::BadCsv("missing response column `y`".into()))?;
    let mut x_cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .map(|d| (d, i))
        })
        .collect();
    x_cols.sort_unstable();
    if x_cols.is_empty() || x_cols.iter().enumerate().any(|(k, (d, _))| *d != k + 1) {
        return Err(Error::BadCsv("feature columns must be named x1..xd".into()));
    }
    let mut features = Vec::new();
    let mut responses = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let x = x_cols
            .iter()
            .map(|&(d, i)| parse_feature(rec.get(i).unwrap_or(""), row + 1, &format!("x{d}")))
            .collect::<Result<Vec<_>>>()?;
        features.push(x);
        responses.push(rec.get(y_col).unwrap_or("").to_string());
    }
    assemble(features, responses, task)
}

pub fn load_csv(path: &Path, task: Task) -> Result<Dataset> {
    read_csv(open(path)?, task)
}

/// Writes `y,x1..xd`. Reals use the shortest round-tripping representation.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = d.dim().unwrap_or(0);
    let mut header = vec!["y".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for o in &d.observations {
        let mut rec = vec![match o.y {
            Response::Real(v) => format!("{v:?}"),
            Response::Label(i) => d.space.label_name(i).unwrap_or_default().to_string(),
        }];
        rec.extend(o.x.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::BadCsv(e.to_string()))?;
    Ok(())
}

/// Reads the UCI `glass.data` layout: no header, nine numeric oxide
/// features and a class code, with an optional leading row id (11 columns).
pub fn read_glass<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut features = Vec::new();
    let mut responses = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        // Tolerate a header line.
        if row == 0 && rec.get(1).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let cells: Vec<&str> = match rec.len() {
            11 => rec.iter().skip(1).collect(),
            10 => rec.iter().collect(),
            k => {
                return Err(Error::BadCsv(format!(
                    "row {}: expected 10 or 11 columns, got {k}",
                    row + 1
                )))
            }
        };
        let x = cells[..9]
            .iter()
            .enumerate()
            .map(|(k, c)| parse_feature(c, row + 1, &format!("x{}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        features.push(x);
        responses.push(cells[9].to_string());
    }
    assemble(features, responses, Task::Classification)
}

pub fn load_glass(path: &Path) -> Result<Dataset> {
    read_glass(open(path)?)
}

/// Resolves a data argument: a built-in name, `glass=PATH`, or a CSV path.
pub fn load_dataset(spec: &str, task: Task) -> Result<Dataset> {
    match spec {
        "alligator" => Ok(alligator()),
        "glass" => Err(Error::InvalidArgument(
            "the glass data is not bundled; pass glass=PATH to the UCI glass.data file".into(),
        )),
        _ => {
            if let Some(path) = spec
                .strip_prefix("glass=")
                .or_else(|| spec.strip_prefix("glass:"))
            {
                load_glass(Path::new(path))
            } else {
                load_csv(Path::new(spec), task)
            }
        }
    }
}

/// Random half/half split number `split` under `seed`: the first
/// `len / 2` shuffled rows train, the rest test. Each split has its own
/// random stream, so split `s` does not depend on how many precede it.
pub fn random_halves(d: &Dataset, seed: u64, split: u64) -> (Dataset, Dataset) {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split);
    idx.shuffle(&mut rng);
    let half = d.len() / 2;
    (d.select(&idx[..half]), d.select(&idx[half..]))
}

/// Standardises every feature column to mean 0 and unit variance using the
/// statistics of `reference`. Constant columns are only centred.
pub fn standardize(reference: &Dataset, targets: &mut [&mut Dataset]) {
    let Some(dim) = reference.dim() else { return };
    let n = reference.len() as f64;
    let mut mean = vec![0.0; dim];
    for o in &reference.observations {
        for (m, v) in mean.iter_mut().zip(&o.x) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for o in &reference.observations {
        for ((s, v), m) in sd.iter_mut().zip(&o.x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut sd {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    for d in targets.iter_mut() {
        for o in &mut d.observations {
            for ((v, m), s) in o.x.iter_mut().zip(&mean).zip(&sd) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// Applies the same transform as [`standardize`] to one query point.
pub fn standardize_point(reference: &Dataset, x: &[f64]) -> Vec<f64> {
    let mut probe = Dataset::new(
        reference.space.clone(),
        vec![Observation::new(
            x.to_vec(),
            reference
                .observations
                .first()
                .map(|o| o.y)
                .unwrap_or(Response::Real(0.0)),
        )],
    );
    standardize(reference, &mut [&mut probe]);
    probe.observations.remove(0).x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alligator_shape() {
        let d = alligator();
        assert_eq!(d.len(), 39);
        assert_eq!(d.space.label_names(), ["I", "F", "O"]);
        assert_eq!(d.labels_in_order(), ["I", "F", "O"]);
        let counts: Vec<usize> = (0..3)
            .map(|l| {
                d.observations
                    .iter()
                    .filter(|o| o.y == Response::Label(l))
                    .count()
            })
            .collect();
        assert_eq!(counts, vec![10, 22, 7]);
    }

    #[test]
    fn csv_missing_response_column() {
        let err = read_csv("x1,x2\n1,2\n".as_bytes(), Task::Auto).unwrap_err();
        assert!(matches!(err, Error::BadCsv(_)));
    }

    #[test]
    fn csv_non_numeric_feature() {
        let err = read_csv("y,x1\nI,abc\n".as_bytes(), Task::Auto).unwrap_err();
        assert!(matches!(err, Error::BadCsv(_)));
    }

    #[test]
    fn csv_auto_task() {
        let reg = read_csv("y,x1\n1.5,0\n2,1\n".as_bytes(), Task::Auto).unwrap();
        assert!(!reg.space.is_finite());
        let cls = read_csv("x1,y\n0,b\n1,a\n2,b\n".as_bytes(), Task::Auto).unwrap();
        assert_eq!(cls.space.label_names(), ["b", "a"]);
        let forced = read_csv("y,x1\n1,0\n2,1\n".as_bytes(), Task::Classification).unwrap();
        assert!(forced.space.is_finite());
    }

    #[test]
    fn csv_round_trip() {
        let d = alligator();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), Task::Auto).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn glass_with_and_without_id() {
        let with_id = "1,1.52101,13.64,4.49,1.10,71.78,0.06,8.75,0.00,0.00,1\n2,1.51761,13.89,3.60,1.36,72.73,0.48,7.83,0.00,0.00,2\n";
        let d = read_glass(with_id.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), Some(9));
        assert_eq!(d.space.label_names(), ["1", "2"]);
        let without = "1.52101,13.64,4.49,1.10,71.78,0.06,8.75,0.00,0.00,1\n";
        assert_eq!(read_glass(without.as_bytes()).unwrap().dim(), Some(9));
        assert!(read_glass("1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn halves_partition_the_rows() {
        let d = alligator();
        let (a, b) = random_halves(&d, 9, 3);
        assert_eq!((a.len(), b.len()), (19, 20));
        assert_eq!(random_halves(&d, 9, 3), (a.clone(), b));
        assert_ne!(random_halves(&d, 9, 4).0, a);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_dataset("/nonexistent/file.csv", Task::Auto),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn standardize_centres_and_scales() {
        let mut d = Dataset::from_real(vec![(vec![1.0, 5.0], 0.0), (vec![3.0, 5.0], 1.0)]).unwrap();
        let reference = d.clone();
        standardize(&reference, &mut [&mut d]);
        assert_eq!(d.observations[0].x, vec![-1.0, 0.0]);
        assert_eq!(d.observations[1].x, vec![1.0, 0.0]);
        assert_eq!(standardize_point(&reference, &[2.0, 6.0]), vec![0.0, 1.0]);
    }
}
