//! Tabular ingestion: ARFF and CSV parsing, serialization, and imputation of
//! missing cells.
//!
//! Cells are `Option<f64>`; `None` is the missing marker (`?` in ARFF, `?` or
//! an empty cell in CSV).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single table cell. `None` marks a missing value.
pub type Cell = Option<f64>;

/// Parsed tabular data, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    column_names: Vec<String>,
    cells: Vec<Cell>,
    n_rows: usize,
}

impl RawTable {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        check_unique(&column_names)?;
        let n_cols = column_names.len();
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::ArityMismatch {
                    line: i + 1,
                    expected: n_cols,
                    found: row.len(),
                });
            }
            cells.extend(row);
        }
        Ok(Self {
            column_names,
            cells,
            n_rows,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let n = self.n_cols();
        &self.cells[row * n..(row + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cell]> {
        // chunks_exact on an empty slice with zero width would panic
        let n = self.n_cols().max(1);
        self.cells.chunks_exact(n)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_rows).map(move |r| self.get(r, col))
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateColumn(n.clone()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ARFF

#[derive(Debug, Clone, Copy, PartialEq)]
enum AttrKind {
    Numeric,
    /// Nominal `{0,1}` class attribute, coerced to numeric.
    Binary,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Splits `@attribute <name> <type>` into name and type, honouring quoted names.
fn split_attribute(rest: &str) -> Option<(&str, &str)> {
    let rest = rest.trim_start();
    let first = rest.chars().next()?;
    if first == '\'' || first == '"' {
        let end = rest[1..].find(first)? + 1;
        Some((&rest[1..end], rest[end + 1..].trim()))
    } else {
        let end = rest.find(char::is_whitespace)?;
        Some((&rest[..end], rest[end..].trim()))
    }
}

fn keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    if line.len() >= kw.len() && line[..kw.len()].eq_ignore_ascii_case(kw) {
        let rest = &line[kw.len()..];
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            return Some(rest);
        }
    }
    None
}

fn parse_attr_kind(line_no: usize, name: &str, ty: &str) -> Result<AttrKind> {
    let lower = ty.to_ascii_lowercase();
    match lower.as_str() {
        "numeric" | "real" | "integer" => return Ok(AttrKind::Numeric),
        _ => {}
    }
    let unsupported = || Error::UnsupportedAttributeType {
        line: line_no,
        name: name.to_string(),
        kind: ty.to_string(),
    };
    if lower.starts_with('{') && lower.ends_with('}') {
        let values: Vec<&str> = lower[1..lower.len() - 1].split(',').map(unquote).collect();
        if !values.is_empty() && values.iter().all(|v| *v == "0" || *v == "1") {
            return Ok(AttrKind::Binary);
        }
    }
    Err(unsupported())
}

/// Parses an ARFF document with numeric attributes and an optional final
/// `{0,1}` class attribute.
pub fn parse_arff(text: &str) -> Result<RawTable> {
    let mut saw_relation = false;
    let mut attrs: Vec<(String, AttrKind)> = Vec::new();
    let mut lines = text.lines().enumerate();
    let mut in_data = false;

    for (idx, raw) in lines.by_ref() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(_name) = keyword(line, "@relation") {
            saw_relation = true;
        } else if let Some(rest) = keyword(line, "@attribute") {
            if !saw_relation {
                return Err(Error::MalformedHeader(format!(
                    "line {line_no}: @attribute before @relation"
                )));
            }
            let (name, ty) = split_attribute(rest).ok_or_else(|| {
                Error::MalformedHeader(format!("line {line_no}: cannot parse attribute"))
            })?;
            let kind = parse_attr_kind(line_no, name, ty)?;
            if let Some((prev, AttrKind::Binary)) = attrs.last() {
                return Err(Error::UnsupportedAttributeType {
                    line: line_no,
                    name: prev.clone(),
                    kind: "nominal attribute that is not the final (class) attribute".into(),
                });
            }
            attrs.push((name.to_string(), kind));
        } else if keyword(line, "@data").is_some() {
            if !saw_relation {
                return Err(Error::MalformedHeader("missing @relation".into()));
            }
            in_data = true;
            break;
        } else {
            return Err(Error::MalformedHeader(format!(
                "line {line_no}: unexpected header line {line:?}"
            )));
        }
    }
    if !saw_relation {
        return Err(Error::MalformedHeader("missing @relation".into()));
    }
    if !in_data {
        return Err(Error::MalformedHeader("missing @data".into()));
    }
    if attrs.is_empty() {
        return Err(Error::MalformedHeader("no attributes declared".into()));
    }

    let names: Vec<String> = attrs.iter().map(|(n, _)| n.clone()).collect();
    check_unique(&names)?;
    let n_cols = attrs.len();
    let mut cells = Vec::new();
    let mut n_rows = 0;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('{') {
            return Err(Error::MalformedHeader(format!(
                "line {line_no}: sparse ARFF rows are not supported"
            )));
        }
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != n_cols {
            return Err(Error::ArityMismatch {
                line: line_no,
                expected: n_cols,
                found: tokens.len(),
            });
        }
        for (j, tok) in tokens.iter().enumerate() {
            let tok = unquote(tok);
            let cell = if tok == "?" {
                None
            } else {
                let v: f64 = tok.parse().map_err(|_| Error::NonNumericCell {
                    line: line_no,
                    column: j + 1,
                    token: tok.to_string(),
                })?;
                if attrs[j].1 == AttrKind::Binary && v != 0.0 && v != 1.0 {
                    return Err(Error::NonNumericCell {
                        line: line_no,
                        column: j + 1,
                        token: tok.to_string(),
                    });
                }
                Some(v)
            };
            cells.push(cell);
        }
        n_rows += 1;
    }
    Ok(RawTable {
        column_names: names,
        cells,
        n_rows,
    })
}

fn format_cell(c: Cell) -> String {
    match c {
        Some(v) => format!("{v}"),
        None => "?".to_string(),
    }
}

/// Serializes a table as ARFF. When `class_column` is given, that column is
/// declared as the nominal `{0,1}` class attribute and must be the last one.
pub fn write_arff(table: &RawTable, relation: &str, class_column: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(&format!("@relation {relation}\n\n"));
    for name in &table.column_names {
        let is_class = class_column.is_some_and(|c| c == name);
        let ty = if is_class { "{0,1}" } else { "numeric" };
        if name.contains(char::is_whitespace) {
            out.push_str(&format!("@attribute '{name}' {ty}\n"));
        } else {
            out.push_str(&format!("@attribute {name} {ty}\n"));
        }
    }
    out.push_str("\n@data\n");
    for row in table.rows() {
        let line: Vec<String> = row.iter().map(|c| format_cell(*c)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// CSV

/// Parses comma-separated numeric data. Empty cells and `?` are missing.
pub fn parse_csv(text: &str, has_header: bool) -> Result<RawTable> {
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let mut names: Option<Vec<String>> = None;
    if has_header {
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::MalformedHeader("empty CSV input".into()))?;
        let parsed: Vec<String> = header.split(',').map(|s| unquote(s).to_string()).collect();
        check_unique(&parsed)?;
        names = Some(parsed);
    }

    let mut cells = Vec::new();
    let mut n_rows = 0;
    let mut n_cols = names.as_ref().map(Vec::len);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let tokens: Vec<&str> = line.split(',').collect();
        let expected = *n_cols.get_or_insert(tokens.len());
        if tokens.len() != expected {
            return Err(Error::ArityMismatch {
                line: line_no,
                expected,
                found: tokens.len(),
            });
        }
        for (j, tok) in tokens.iter().enumerate() {
            let tok = tok.trim();
            let cell = if tok.is_empty() || tok == "?" {
                None
            } else {
                Some(tok.parse::<f64>().map_err(|_| Error::NonNumericCell {
                    line: line_no,
                    column: j + 1,
                    token: tok.to_string(),
                })?)
            };
            cells.push(cell);
        }
        n_rows += 1;
    }
    let n_cols = n_cols.unwrap_or(0);
    let column_names = names.unwrap_or_else(|| (0..n_cols).map(|j| format!("col{j}")).collect());
    Ok(RawTable {
        column_names,
        cells,
        n_rows,
    })
}

/// Serializes a table as CSV with a header row; missing cells are left empty.
pub fn write_csv(table: &RawTable) -> String {
    let mut out = table.column_names.join(",");
    out.push('\n');
    for row in table.rows() {
        let line: Vec<String> = row
            .iter()
            .map(|c| c.map(|v| format!("{v}")).unwrap_or_default())
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Imputation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    Median,
    Mean,
    DropRows,
}

impl std::str::FromStr for ImputeStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "median" => Ok(Self::Median),
            "mean" => Ok(Self::Mean),
            "drop" | "drop_rows" => Ok(Self::DropRows),
            other => Err(format!("unknown imputation strategy {other:?}")),
        }
    }
}

impl std::fmt::Display for ImputeStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Median => "median",
            Self::Mean => "mean",
            Self::DropRows => "drop",
        })
    }
}

/// Record of an imputation pass. `per_column_fill` is reused to impute test
/// data with values fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationStats {
    pub strategy: ImputeStrategy,
    /// Fill value per column; `None` when the column had no observed values
    /// (or the strategy is `drop_rows`).
    pub per_column_fill: Vec<Option<f64>>,
    pub n_cells_imputed: usize,
    pub n_rows_dropped: usize,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn fit_fill(table: &RawTable, strategy: ImputeStrategy) -> Vec<Option<f64>> {
    (0..table.n_cols())
        .map(|j| {
            let mut observed: Vec<f64> = table.column(j).flatten().collect();
            match strategy {
                ImputeStrategy::Median => median(&mut observed),
                ImputeStrategy::Mean if !observed.is_empty() => {
                    Some(observed.iter().sum::<f64>() / observed.len() as f64)
                }
                _ => None,
            }
        })
        .collect()
}

/// Fills or drops missing cells. When `fit_stats` is given its strategy and
/// fill values are reused instead of being estimated from `table`.
pub fn impute_missing(
    table: &RawTable,
    strategy: ImputeStrategy,
    fit_stats: Option<&ImputationStats>,
) -> Result<(RawTable, ImputationStats)> {
    let strategy = fit_stats.map_or(strategy, |s| s.strategy);

    if strategy == ImputeStrategy::DropRows {
        let kept: Vec<&[Cell]> = table
            .rows()
            .filter(|r| r.iter().all(Option::is_some))
            .collect();
        let dropped = table.n_rows() - kept.len();
        if kept.is_empty() && table.n_rows() > 0 {
            return Err(Error::EmptyResult);
        }
        let cells = kept.concat();
        let out = RawTable {
            column_names: table.column_names.clone(),
            n_rows: kept.len(),
            cells,
        };
        let stats = ImputationStats {
            strategy,
            per_column_fill: vec![None; table.n_cols()],
            n_cells_imputed: 0,
            n_rows_dropped: dropped,
        };
        return Ok((out, stats));
    }

    let fill = match fit_stats {
        Some(s) => {
            if s.per_column_fill.len() != table.n_cols() {
                return Err(Error::DimensionMismatch(format!(
                    "imputation stats cover {} columns, table has {}",
                    s.per_column_fill.len(),
                    table.n_cols()
                )));
            }
            s.per_column_fill.clone()
        }
        None => fit_fill(table, strategy),
    };

    let n_cols = table.n_cols();
    let mut imputed = 0;
    let mut cells = table.cells.clone();
    for (k, cell) in cells.iter_mut().enumerate() {
        if cell.is_none() {
            let j = k % n_cols;
            match fill[j] {
                Some(v) => {
                    *cell = Some(v);
                    imputed += 1;
                }
                None => return Err(Error::AllMissingColumn(table.column_names[j].clone())),
            }
        }
    }
    let out = RawTable {
        column_names: table.column_names.clone(),
        cells,
        n_rows: table.n_rows,
    };
    let stats = ImputationStats {
        strategy,
        per_column_fill: fill,
        n_cells_imputed: imputed,
        n_rows_dropped: 0,
    };
    Ok((out, stats))
}
