//! CSV ingestion and emission.
//!
//! The first line holds headers; the last column is the response. A column
//! is numeric when every non-missing cell parses as a finite number, unless
//! a types file says otherwise.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::data::{build_dataset, Dataset, Predictor, PredictorKind, Schema, Value};
use crate::error::{Error, Result};

pub const WRITE_MISSING: &str = "NA";

pub fn default_missing_tokens() -> HashSet<String> {
    ["", "NA"].into_iter().map(String::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Numeric,
    Categorical,
}

/// Headers and raw records, unparsed.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table_from(file)
}

pub fn read_table_from(reader: impl std::io::Read) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::format(1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if headers.len() < 2 {
        return Err(Error::Data("need at least one predictor and a response column".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(i + 2, e.to_string()))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok(RawTable { headers, rows })
}

/// Parses a types file: one `name numeric|categorical` pair per line, `#`
/// starting a comment.
pub fn parse_types(text: &str) -> Result<HashMap<String, ColumnType>> {
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(n + 1, "expected `name numeric|categorical`"));
        };
        let kind = match kind {
            "numeric" => ColumnType::Numeric,
            "categorical" => ColumnType::Categorical,
            other => return Err(Error::format(n + 1, format!("unknown column type {other:?}"))),
        };
        out.insert(name.to_string(), kind);
    }
    Ok(out)
}

fn parses_numeric(s: &str) -> bool {
    s.parse::<f64>().is_ok_and(f64::is_finite)
}

/// Schema inferred from a table. Categories and classes are sorted.
pub fn infer_schema(
    table: &RawTable,
    types: &HashMap<String, ColumnType>,
    missing: &HashSet<String>,
) -> Result<Schema> {
    let m = table.headers.len() - 1;
    for name in types.keys() {
        if !table.headers[..m].contains(name) {
            return Err(Error::Schema(format!("types file names unknown column {name:?}")));
        }
    }
    for (i, r) in table.rows.iter().enumerate() {
        if r.len() != m + 1 {
            return Err(Error::Data(format!("row {i} has {} cells, expected {}", r.len(), m + 1)));
        }
    }
    let mut predictors = Vec::with_capacity(m);
    for (j, name) in table.headers[..m].iter().enumerate() {
        let cells = || table.rows.iter().map(|r| r[j].as_str()).filter(|c| !missing.contains(*c));
        let kind = match types.get(name) {
            Some(k) => *k,
            None if cells().all(parses_numeric) => ColumnType::Numeric,
            None => ColumnType::Categorical,
        };
        predictors.push(match kind {
            ColumnType::Numeric => Predictor::numeric(name.clone()),
            ColumnType::Categorical => {
                let levels: BTreeSet<&str> = cells().collect();
                if levels.is_empty() {
                    return Err(Error::Schema(format!("categorical column {name:?} has no observed values")));
                }
                Predictor::categorical(name.clone(), levels)
            }
        });
    }
    let classes: BTreeSet<&str> = table.rows.iter().map(|r| r[m].as_str()).collect();
    Schema::new(predictors, classes.into_iter().map(String::from).collect())
}

/// Reads a training CSV, inferring the schema.
pub fn load_training(path: &Path, types: &HashMap<String, ColumnType>) -> Result<(Dataset, String)> {
    let table = read_table(path)?;
    let missing = default_missing_tokens();
    let schema = infer_schema(&table, types, &missing)?;
    let response = table.headers.last().cloned().unwrap_or_default();
    Ok((build_dataset(&table.rows, schema, &missing)?, response))
}

/// Reads a CSV against a known schema. Predictor columns are matched by
/// name; the response column is optional. Without one, every row gets the
/// first class as a placeholder and the flag is false.
pub fn load_with_schema(path: &Path, schema: &Schema) -> Result<(Dataset, bool)> {
    table_with_schema(&read_table(path)?, schema)
}

pub fn table_with_schema(table: &RawTable, schema: &Schema) -> Result<(Dataset, bool)> {
    let idx: Vec<usize> = schema
        .predictors()
        .iter()
        .map(|p| {
            table
                .headers
                .iter()
                .position(|h| *h == p.name)
                .ok_or_else(|| Error::Schema(format!("column {:?} is missing from the input", p.name)))
        })
        .collect::<Result<_>>()?;
    let extra: Vec<usize> = (0..table.headers.len()).filter(|c| !idx.contains(c)).collect();
    let response = match extra.as_slice() {
        [] => None,
        [c] => Some(*c),
        _ => return Err(Error::Schema(format!("expected at most one column besides the {} predictors", idx.len()))),
    };
    let placeholder = schema.classes()[0].clone();
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != table.headers.len() {
                return Err(Error::Data(format!("row {i} has {} cells, expected {}", r.len(), table.headers.len())));
            }
            let mut out: Vec<String> = idx.iter().map(|&c| r[c].clone()).collect();
            out.push(response.map_or_else(|| placeholder.clone(), |c| r[c].clone()));
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((build_dataset(&rows, schema.clone(), &default_missing_tokens())?, response.is_some()))
}

fn cell_text(schema: &Schema, j: usize, v: Option<Value>) -> String {
    match (v, &schema.predictor(j).kind) {
        (None, _) => WRITE_MISSING.to_string(),
        (Some(Value::Numeric(x)), _) => format!("{x}"),
        (Some(Value::Category(c)), PredictorKind::Categorical { categories }) => categories[c as usize].clone(),
        (Some(Value::Category(c)), PredictorKind::Numeric) => c.to_string(),
    }
}

/// Writes `ds` with masked cells as `NA`. Numbers use the shortest text
/// that parses back to the same float.
pub fn write_dataset(ds: &Dataset, response_name: &str, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let schema = ds.schema();
    let to_err = |e: csv::Error| Error::Data(format!("cannot write csv: {e}"));
    let mut header: Vec<&str> = schema.predictors().iter().map(|p| p.name.as_str()).collect();
    header.push(response_name);
    w.write_record(&header).map_err(to_err)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = (0..ds.n_predictors()).map(|j| cell_text(schema, j, ds.value(j, i))).collect();
        rec.push(schema.classes()[ds.response(i) as usize].clone());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("cannot write csv: {e}")))?;
    Ok(())
}

pub fn write_dataset_file(ds: &Dataset, response_name: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, response_name, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "x,colour,grade,y\n1.5,red,3,A\nNA,blue,,B\n-2e-3,,4,A\n0.1,red,5,B\n";

    fn table() -> RawTable {
        read_table_from(SAMPLE.as_bytes()).unwrap()
    }

    #[test]
    fn infers_kinds_and_levels() {
        let s = infer_schema(&table(), &HashMap::new(), &default_missing_tokens()).unwrap();
        assert!(s.predictor(0).kind.is_numeric());
        assert_eq!(s.predictor(1).categories().unwrap(), ["blue", "red"]);
        assert!(s.predictor(2).kind.is_numeric());
        assert_eq!(s.classes(), ["A", "B"]);
    }

    #[test]
    fn types_file_overrides() {
        let types = parse_types("# override\ngrade categorical\n").unwrap();
        let s = infer_schema(&table(), &types, &default_missing_tokens()).unwrap();
        assert_eq!(s.predictor(2).categories().unwrap(), ["3", "4", "5"]);
        assert!(parse_types("grade integer").is_err());
        let bad = parse_types("nope numeric").unwrap();
        assert!(infer_schema(&table(), &bad, &default_missing_tokens()).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let t = table();
        let s = infer_schema(&t, &HashMap::new(), &default_missing_tokens()).unwrap();
        let ds = build_dataset(&t.rows, s.clone(), &default_missing_tokens()).unwrap();
        assert_eq!(ds.missing_count(0), 1);
        let mut buf = Vec::new();
        write_dataset(&ds, "y", &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("NA,blue,NA"));
        let (back, has_y) = table_with_schema(&read_table_from(buf.as_slice()).unwrap(), &s).unwrap();
        assert!(has_y);
        assert_eq!(back, ds);
        assert_eq!(back.numeric(0, 2).unwrap().to_bits(), (-2e-3f64).to_bits());
    }

    #[test]
    fn schema_load_reorders_and_allows_missing_response() {
        let t = table();
        let s = infer_schema(&t, &HashMap::new(), &default_missing_tokens()).unwrap();
        let shuffled = read_table_from("grade,x,colour\n3,1.5,red\n".as_bytes()).unwrap();
        let (ds, has_y) = table_with_schema(&shuffled, &s).unwrap();
        assert!(!has_y);
        assert_eq!(ds.numeric(0, 0), Some(1.5));
        assert_eq!(ds.numeric(2, 0), Some(3.0));
        let missing_col = read_table_from("x,y\n1,A\n".as_bytes()).unwrap();
        assert!(matches!(table_with_schema(&missing_col, &s), Err(Error::Schema(_))));
        let unknown = read_table_from("x,colour,grade,y\n1,green,3,A\n".as_bytes()).unwrap();
        assert!(matches!(table_with_schema(&unknown, &s), Err(Error::Data(_))));
    }

    #[test]
    fn missing_file_is_io() {
        let err = read_table(Path::new("/nonexistent/train.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/train.csv"));
    }
}
