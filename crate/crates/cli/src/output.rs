//! Tabular output as CSV (with a `#` comment header) or JSON.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    S(String),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => json!(x.to_string()),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reproducibility header written before every table.
#[derive(Clone, Debug)]
pub struct Meta {
    pub program: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub eps_tail: f64,
    pub params: Vec<(String, String)>,
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| Cell::F(x)).collect());
    }
}

pub fn render(meta: &Meta, table: &Table, format: Format) -> String {
    match format {
        Format::Csv => render_csv(meta, table),
        Format::Json => render_json(meta, table, None),
    }
}

fn render_csv(meta: &Meta, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", meta.program, meta.version);
    let _ = writeln!(out, "# command = {}", meta.command);
    match meta.seed {
        Some(s) => {
            let _ = writeln!(out, "# seed = {s}");
        }
        None => out.push_str("# seed = none\n"),
    }
    let _ = writeln!(out, "# eps-tail = {:e}", meta.eps_tail);
    for (k, v) in &meta.params {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// JSON object {meta, columns, rows[, extra]} with rows as named-field objects.
pub fn render_json(meta: &Meta, table: &Table, extra: Option<(&str, Value)>) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            for (c, v) in table.columns.iter().zip(r) {
                m.insert((*c).to_string(), v.json());
            }
            Value::Object(m)
        })
        .collect();
    let params: Map<String, Value> = meta
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    let mut root = Map::new();
    root.insert(
        "meta".into(),
        json!({
            "program": meta.program,
            "version": meta.version,
            "command": meta.command,
            "seed": meta.seed,
            "eps_tail": meta.eps_tail,
            "params": params,
        }),
    );
    root.insert("columns".into(), json!(table.columns));
    root.insert("rows".into(), Value::Array(rows));
    if let Some((k, v)) = extra {
        root.insert(k.into(), v);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Meta {
        Meta {
            program: "workchar".into(),
            version: "0.1.0".into(),
            command: "sweep-chi".into(),
            seed: None,
            eps_tail: 1e-12,
            params: vec![("nbar".into(), "1.5".into())],
        }
    }

    #[test]
    fn csv_round_trips_doubles() {
        let mut t = Table::new(&["u", "re"]);
        t.push_f64(&[0.1, 1.0 / 3.0]);
        let s = render(&meta(), &t, Format::Csv);
        let last = s.lines().last().unwrap();
        let vals: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(vals, vec![0.1, 1.0 / 3.0]);
        assert!(s.starts_with("# workchar 0.1.0\n"));
        assert!(s.contains("# nbar = 1.5\n"));
        assert!(s.contains("\nu,re\n"));
    }

    #[test]
    fn json_rows_are_named() {
        let mut t = Table::new(&["u", "re"]);
        t.push_f64(&[2.0, -1.0]);
        let v: Value = serde_json::from_str(&render(&meta(), &t, Format::Json)).unwrap();
        assert_eq!(v["rows"][0]["re"], json!(-1.0));
        assert_eq!(v["meta"]["params"]["nbar"], json!("1.5"));
    }
}
