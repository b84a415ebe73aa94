use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryKind {
    /// Per-category scores in [1, 4].
    Scored,
    /// 0/1 content indicators, at least one set per image.
    OneHot,
}

/// Per-image category values keyed by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTable {
    pub category_names: Vec<String>,
    pub kind: CategoryKind,
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl CategoryTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.category_names.iter().position(|c| c == name)
    }

    pub fn value(&self, id: &str, column: usize) -> Option<f64> {
        self.rows.get(id).map(|r| r[column])
    }
}

/// Parses a header row of category names (first column holds the image id)
/// followed by one row per image.
pub fn parse_category_text(text: &str, kind: CategoryKind) -> Result<CategoryTable, DataError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let csv_err =
        |e: csv::Error| DataError::Parse { line: e.position().map_or(0, |p| p.line() as usize), reason: e.to_string() };
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 {
        return Err(DataError::Parse { line: 1, reason: "header needs an id column and at least one category".into() });
    }
    let category_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();

    let mut rows = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record[0].to_string();
        let mut values = Vec::with_capacity(category_names.len());
        for (name, field) in category_names.iter().zip(record.iter().skip(1)) {
            let v: f64 = field
                .parse()
                .map_err(|_| DataError::Parse { line, reason: format!("{name}: {field:?} is not a number") })?;
            let ok = match kind {
                CategoryKind::Scored => (1.0..=4.0).contains(&v),
                CategoryKind::OneHot => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(DataError::Range {
                    id,
                    category: name.clone(),
                    value: v,
                    allowed: match kind {
                        CategoryKind::Scored => "[1, 4]",
                        CategoryKind::OneHot => "{0, 1}",
                    },
                });
            }
            values.push(v);
        }
        if kind == CategoryKind::OneHot && values.iter().sum::<f64>() < 1.0 {
            return Err(DataError::EmptyOneHot { id });
        }
        if rows.contains_key(&id) {
            return Err(DataError::DuplicateId(id));
        }
        rows.insert(id, values);
    }
    Ok(CategoryTable { category_names, kind, rows })
}

pub fn parse_category_csv(path: &Path, kind: CategoryKind) -> Result<CategoryTable, DataError> {
    parse_category_text(&std::fs::read_to_string(path)?, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scored_table() {
        let text = "id,visual,composition,quality,semantic\na,1,2.5,4,3\nb,2,2,2,1\n";
        let t = parse_category_text(text, CategoryKind::Scored).unwrap();
        assert_eq!(t.category_names, ["visual", "composition", "quality", "semantic"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.value("a", 1), Some(2.5));
        assert_eq!(t.column("quality"), Some(2));
    }

    #[test]
    fn one_hot_table() {
        let text = "id,animals,scenes,human\na,1,0,0\nb,0,0,1\nc,0,1,0\n";
        let t = parse_category_text(text, CategoryKind::OneHot).unwrap();
        assert_eq!(t.kind, CategoryKind::OneHot);
        assert_eq!(t.value("b", 2), Some(1.0));
        let empty = "id,animals,scenes\na,0,0\n";
        assert!(matches!(parse_category_text(empty, CategoryKind::OneHot), Err(DataError::EmptyOneHot { .. })));
    }

    #[test]
    fn range_and_duplicates() {
        let text = "id,visual\na,5.0\n";
        assert!(matches!(
            parse_category_text(text, CategoryKind::Scored),
            Err(DataError::Range { value, .. }) if value == 5.0
        ));
        let text = "id,visual\na,0.5\n";
        assert!(parse_category_text(text, CategoryKind::OneHot).is_err());
        let text = "id,visual\na,2\na,3\n";
        assert!(matches!(
            parse_category_text(text, CategoryKind::Scored),
            Err(DataError::DuplicateId(id)) if id == "a"
        ));
        let text = "id,visual\na,2,3\n";
        assert!(matches!(parse_category_text(text, CategoryKind::Scored), Err(DataError::Parse { .. })));
    }
}
