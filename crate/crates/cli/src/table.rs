//! CSV ingestion. A data file has one row per unit with the required columns
//! `unit_id`, `attribute`, `group_id` and `outcome`; every other column is
//! kept as a named covariate.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use groupperm_core::{AttributeCode, AttributeVector, GroupLabels, OutcomeVector};

use crate::error::CliError;

pub const REQUIRED_COLUMNS: [&str; 4] = ["unit_id", "attribute", "group_id", "outcome"];

/// A validated experiment table. Group ids are re-indexed `0..K` in order of
/// first appearance; `group_ids[k]` keeps the original label of group `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub unit_ids: Vec<String>,
    pub attributes: AttributeVector,
    pub labels: GroupLabels,
    pub group_ids: Vec<String>,
    pub outcomes: OutcomeVector,
    pub covariates: BTreeMap<String, Vec<String>>,
}

impl ExperimentTable {
    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.labels.num_groups()
    }

    fn column(&self, name: &str) -> Result<&[String], CliError> {
        self.covariates.get(name).map(Vec::as_slice).ok_or_else(|| {
            CliError::validation(format!("no covariate column '{name}' in the data"))
        })
    }

    /// A covariate column read as non-negative integer codes.
    pub fn code_column(&self, name: &str) -> Result<Vec<AttributeCode>, CliError> {
        self.column(name)?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.trim().parse().map_err(|_| {
                    CliError::validation(format!(
                        "row {}: column '{name}': '{v}' is not an integer code",
                        i + 1
                    ))
                })
            })
            .collect()
    }

    /// A covariate column read as real numbers.
    pub fn real_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.column(name)?
            .iter()
            .enumerate()
            .map(|(i, v)| match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(CliError::validation(format!(
                    "row {}: column '{name}': '{v}' is not a finite number",
                    i + 1
                ))),
            })
            .collect()
    }

    /// A covariate column kept as raw strings.
    pub fn text_column(&self, name: &str) -> Result<&[String], CliError> {
        self.column(name)
    }
}

/// Loads a data file. `levels` is the declared attribute alphabet; when absent
/// the alphabet is the set of codes present in the file.
pub fn load_csv(
    path: &Path,
    levels: Option<&[AttributeCode]>,
) -> Result<ExperimentTable, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, levels)
}

/// Row numbers in messages count data rows from 1, excluding the header.
pub fn read_csv<R: Read>(
    input: R,
    levels: Option<&[AttributeCode]>,
) -> Result<ExperimentTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| CliError::validation(format!("cannot read header: {e}")))?
        .clone();
    if header.is_empty() {
        return Err(CliError::validation("no data rows"));
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("missing required column '{name}'")))
    };
    let [unit_col, attr_col, group_col, outcome_col] = [
        position(REQUIRED_COLUMNS[0])?,
        position(REQUIRED_COLUMNS[1])?,
        position(REQUIRED_COLUMNS[2])?,
        position(REQUIRED_COLUMNS[3])?,
    ];
    let extra: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| ![unit_col, attr_col, group_col, outcome_col].contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let declared: Option<HashSet<AttributeCode>> = levels.map(|l| l.iter().copied().collect());

    let mut unit_ids = Vec::new();
    let mut seen = HashSet::new();
    let mut attributes = Vec::new();
    let mut group_raw = Vec::new();
    let mut outcomes = Vec::new();
    let mut covariates: Vec<Vec<String>> = vec![Vec::new(); extra.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let unit = record[unit_col].to_string();
        if unit.is_empty() {
            return Err(CliError::validation(format!("row {row}: empty unit_id")));
        }
        if !seen.insert(unit.clone()) {
            return Err(CliError::validation(format!(
                "row {row}: duplicate unit_id '{unit}'"
            )));
        }
        let code: AttributeCode = record[attr_col].parse().map_err(|_| {
            CliError::validation(format!(
                "row {row}: attribute '{}' is not an integer code",
                &record[attr_col]
            ))
        })?;
        if let Some(set) = &declared {
            if !set.contains(&code) {
                return Err(CliError::validation(format!(
                    "row {row}: unknown attribute code {code} (declared levels: {})",
                    join(levels.unwrap_or_default())
                )));
            }
        }
        let group = record[group_col].to_string();
        if group.is_empty() {
            return Err(CliError::validation(format!("row {row}: empty group_id")));
        }
        let outcome: f64 = match record[outcome_col].parse::<f64>() {
            Ok(y) if y.is_finite() => y,
            _ => {
                return Err(CliError::validation(format!(
                    "row {row}: outcome '{}' is not a finite number",
                    &record[outcome_col]
                )))
            }
        };
        for (slot, (col, _)) in covariates.iter_mut().zip(&extra) {
            slot.push(record[*col].to_string());
        }
        unit_ids.push(unit);
        attributes.push(code);
        group_raw.push(group);
        outcomes.push(outcome);
    }
    if unit_ids.is_empty() {
        return Err(CliError::validation("no data rows"));
    }

    let labels = GroupLabels::from_ids(&group_raw);
    let mut group_ids = vec![String::new(); labels.num_groups()];
    for (g, raw) in labels.labels().iter().zip(group_raw) {
        group_ids[*g] = raw;
    }
    let attributes = match levels {
        Some(l) => AttributeVector::new(attributes, l)?,
        None => AttributeVector::from_codes(attributes)?,
    };
    Ok(ExperimentTable {
        unit_ids,
        attributes,
        labels,
        group_ids,
        outcomes: OutcomeVector::new(outcomes)?,
        covariates: extra
            .into_iter()
            .map(|(_, name)| name)
            .zip(covariates)
            .collect(),
    })
}

pub(crate) fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIGURE_1: &str = "unit_id,attribute,group_id,outcome\n\
        1,1,a,0.5\n2,0,a,1.0\n3,1,b,1.5\n4,1,b,2.0\n5,0,c,2.5\n6,0,c,3.0\n7,1,c,3.5\n";

    #[test]
    fn figure_one_table_loads() {
        let t = read_csv(FIGURE_1.as_bytes(), Some(&[0, 1])).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.num_groups(), 3);
        assert_eq!(t.labels.labels(), &[0, 0, 1, 1, 2, 2, 2]);
        assert_eq!(t.group_ids, vec!["a", "b", "c"]);
        assert_eq!(t.attributes.values(), &[1, 0, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn empty_file_has_no_data_rows() {
        for input in ["", "unit_id,attribute,group_id,outcome\n"] {
            let err = read_csv(input.as_bytes(), None).unwrap_err();
            assert_eq!(err.to_string(), "no data rows");
        }
    }

    #[test]
    fn errors_carry_row_numbers() {
        let dup = "unit_id,attribute,group_id,outcome\n1,0,a,1\n1,1,a,2\n";
        assert!(read_csv(dup.as_bytes(), None)
            .unwrap_err()
            .to_string()
            .contains("row 2: duplicate unit_id"));
        let bad_y = "unit_id,attribute,group_id,outcome\n1,0,a,1\n2,1,a,x\n";
        assert!(read_csv(bad_y.as_bytes(), None)
            .unwrap_err()
            .to_string()
            .contains("row 2: outcome"));
        let bad_a = "unit_id,attribute,group_id,outcome\n1,0,a,1\n2,1,a,2\n3,2,b,2\n";
        let err = read_csv(bad_a.as_bytes(), Some(&[0, 1]))
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3: unknown attribute code 2"), "{err}");
        let missing = "unit_id,attribute,outcome\n1,0,1\n";
        assert!(read_csv(missing.as_bytes(), None)
            .unwrap_err()
            .to_string()
            .contains("group_id"));
    }

    #[test]
    fn covariates_are_kept_by_name() {
        let input = "unit_id,attribute,group_id,outcome,x,score\n1,0,a,1,1,0.5\n2,1,a,2,0,1.5\n";
        let t = read_csv(input.as_bytes(), None).unwrap();
        assert_eq!(t.code_column("x").unwrap(), vec![1, 0]);
        assert_eq!(t.real_column("score").unwrap(), vec![0.5, 1.5]);
        assert!(t.code_column("score").is_err());
        assert!(t.code_column("missing").is_err());
    }
}
