//! JSON quadrilateral parsing and round-trip-exact CSV tables.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geometry::{GeometryError, Point2, Quadrilateral};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("expected a JSON object with fields a, b, c, d")]
    NotAnObject,
    #[error("missing vertex {0}")]
    MissingVertex(char),
    #[error("vertex {0} must be a pair [x, y] of finite numbers")]
    BadVertex(char),
    #[error("unexpected field {0:?}")]
    UnknownField(String),
    #[error("invalid quadrilateral: {0}")]
    Invalid(#[from] GeometryError),
    #[error("field {field}: {msg}")]
    Field { field: String, msg: String },
    #[error("CSV: {0}")]
    Csv(String),
}

fn point_from_value(v: &Value, name: char) -> Result<Point2, ParseError> {
    let arr = v.as_array().ok_or(ParseError::BadVertex(name))?;
    if arr.len() != 2 {
        return Err(ParseError::BadVertex(name));
    }
    let x = arr[0].as_f64().ok_or(ParseError::BadVertex(name))?;
    let y = arr[1].as_f64().ok_or(ParseError::BadVertex(name))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(ParseError::BadVertex(name));
    }
    Ok(Point2::new(x, y))
}

/// Parses `{"a": [x, y], "b": ..., "c": ..., "d": ...}` and validates it.
pub fn parse_quad(text: &str) -> Result<Quadrilateral, ParseError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    quad_from_value(&v)
}

pub fn quad_from_value(v: &Value) -> Result<Quadrilateral, ParseError> {
    let obj = v.as_object().ok_or(ParseError::NotAnObject)?;
    if let Some(k) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "a" | "b" | "c" | "d"))
    {
        return Err(ParseError::UnknownField(k.clone()));
    }
    let mut pts = [Point2::ORIGIN; 4];
    for (i, name) in ['a', 'b', 'c', 'd'].into_iter().enumerate() {
        let field = obj
            .get(&name.to_string())
            .ok_or(ParseError::MissingVertex(name))?;
        pts[i] = point_from_value(field, name)?;
    }
    Ok(Quadrilateral::from_array(pts)?)
}

pub fn point_json(p: Point2) -> Value {
    json!([p.x, p.y])
}

/// `{"a": [x, y], ...}` with keys in vertex order.
pub fn quad_to_value(q: &Quadrilateral) -> Value {
    let mut m = Map::new();
    for (name, p) in ["a", "b", "c", "d"].iter().zip(q.vertices()) {
        m.insert((*name).to_string(), point_json(p));
    }
    Value::Object(m)
}

pub fn quad_to_json(q: &Quadrilateral) -> String {
    quad_to_value(q).to_string()
}

/// Fetches a required finite number from a JSON object.
pub fn get_f64(obj: &Value, field: &str) -> Result<f64, ParseError> {
    let v = obj.get(field).ok_or_else(|| ParseError::Field {
        field: field.into(),
        msg: "missing".into(),
    })?;
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ParseError::Field {
            field: field.into(),
            msg: "must be a finite number".into(),
        })
}

pub fn get_point(obj: &Value, field: &str) -> Result<Point2, ParseError> {
    let v = obj.get(field).ok_or_else(|| ParseError::Field {
        field: field.into(),
        msg: "missing".into(),
    })?;
    let arr = v.as_array().filter(|a| a.len() == 2);
    let xy = arr.and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
    xy.filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| Point2::new(x, y))
        .ok_or_else(|| ParseError::Field {
            field: field.into(),
            msg: "must be [x, y]".into(),
        })
}

/// 17 significant digits: parses back to the identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| ParseError::Csv("empty input".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let row = row.map_err(|e| ParseError::Csv(format!("row {}: {e}", n + 1)))?;
            if row.len() != header.len() {
                return Err(ParseError::Csv(format!(
                    "row {} has {} cells",
                    n + 1,
                    row.len()
                )));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }
}
