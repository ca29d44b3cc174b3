//! JSON encoding of numeric data.
//!
//! Complex numbers are `[re, im]` (a bare number is read as a real value),
//! matrices are row-major arrays of rows. Every read carries a JSON pointer so
//! data errors can name the offending location.

use picklab::{ComplexMatrix, C64};
use serde_json::{json, Value};

/// A failure attributable to the input document.
#[derive(Debug, Clone, PartialEq)]
pub struct DataError {
    pub code: &'static str,
    pub message: String,
    /// JSON pointer into the request document.
    pub path: String,
}

impl DataError {
    pub fn new(code: &'static str, message: impl Into<String>, path: impl Into<String>) -> Self {
        DataError { code, message: message.into(), path: path.into() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "code": self.code, "message": self.message, "path": self.path })
    }
}

pub type WireResult<T> = std::result::Result<T, DataError>;

/// A JSON value together with its location.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    pub value: &'a Value,
    path: &'a str,
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node { value, path: "" }
    }

    /// A node whose error paths are prefixed by `path`, a JSON pointer into the enclosing document.
    pub fn at(value: &'a Value, path: &'a str) -> Self {
        Node { value, path }
    }

    pub fn path(&self) -> &str {
        if self.path.is_empty() {
            "/"
        } else {
            self.path
        }
    }

    fn err(&self, message: impl Into<String>) -> DataError {
        DataError::new("schema", message, self.path())
    }

    /// Read a required field through `f`.
    pub fn field<T>(&self, name: &str, f: impl FnOnce(Node<'_>) -> WireResult<T>) -> WireResult<T> {
        let obj = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        let cur = format!("{}/{}", self.path, name);
        match obj.get(name) {
            Some(v) => f(Node { value: v, path: &cur }),
            None => Err(DataError::new("schema", format!("missing field `{name}`"), cur.clone())),
        }
    }

    /// Read an optional field through `f`; `null` counts as absent.
    pub fn opt_field<T>(&self, name: &str, f: impl FnOnce(Node<'_>) -> WireResult<T>) -> WireResult<Option<T>> {
        let obj = self.value.as_object().ok_or_else(|| self.err("expected an object"))?;
        let cur = format!("{}/{}", self.path, name);
        match obj.get(name) {
            Some(Value::Null) | None => Ok(None),
            Some(v) => f(Node { value: v, path: &cur }).map(Some),
        }
    }

    pub fn has(&self, name: &str) -> bool {
        self.value.get(name).is_some_and(|v| !v.is_null())
    }

    /// Map `f` over the elements of an array.
    pub fn list<T>(&self, mut f: impl FnMut(Node<'_>) -> WireResult<T>) -> WireResult<Vec<T>> {
        let arr = self.value.as_array().ok_or_else(|| self.err("expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(k, v)| {
                let cur = format!("{}/{k}", self.path);
                f(Node { value: v, path: &cur })
            })
            .collect()
    }

    pub fn str(&self) -> WireResult<&'a str> {
        self.value.as_str().ok_or_else(|| self.err("expected a string"))
    }

    pub fn f64(&self) -> WireResult<f64> {
        let v = self.value.as_f64().ok_or_else(|| self.err("expected a number"))?;
        if !v.is_finite() {
            return Err(self.err("number is not finite"));
        }
        Ok(v)
    }

    pub fn usize(&self) -> WireResult<usize> {
        self.value
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| self.err("expected a non-negative integer"))
    }

    pub fn u64(&self) -> WireResult<u64> {
        self.value.as_u64().ok_or_else(|| self.err("expected a non-negative integer"))
    }

    pub fn complex(&self) -> WireResult<C64> {
        if let Some(re) = self.value.as_f64() {
            return Ok(C64::new(re, 0.0));
        }
        match self.value.as_array().map(Vec::as_slice) {
            Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                (Some(re), Some(im)) if re.is_finite() && im.is_finite() => Ok(C64::new(re, im)),
                _ => Err(self.err("complex entries must be finite numbers")),
            },
            _ => Err(self.err("expected a complex number [re, im]")),
        }
    }

    pub fn complexes(&self) -> WireResult<Vec<C64>> {
        self.list(|n| n.complex())
    }

    pub fn matrix(&self) -> WireResult<ComplexMatrix> {
        let rows = self.list(|r| r.complexes())?;
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(k) = rows.iter().position(|r| r.len() != cols) {
            return Err(DataError::new(
                "schema",
                format!("row {k} has {} entries, row 0 has {cols}", rows[k].len()),
                format!("{}/{k}", self.path),
            ));
        }
        if cols == 0 && !rows.is_empty() {
            return Err(self.err("matrix rows must be non-empty"));
        }
        Ok(ComplexMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
    }

    pub fn matrices(&self) -> WireResult<Vec<ComplexMatrix>> {
        self.list(|n| n.matrix())
    }

    pub fn usizes(&self) -> WireResult<Vec<usize>> {
        self.list(|n| n.usize())
    }
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect())).collect(),
    )
}

/// A flattened block matrix with its block sizes.
pub fn block_matrix_json(m: &ComplexMatrix, block_sizes: &[usize]) -> Value {
    json!({ "block_sizes": block_sizes, "rows": matrix_json(m) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = ComplexMatrix::from_fn(2, 3, |r, c| C64::new(r as f64, c as f64 - 0.5));
        let v = matrix_json(&m);
        assert_eq!(Node::root(&v).matrix().unwrap(), m);
    }

    #[test]
    fn errors_carry_pointers() {
        let v: Value = serde_json::from_str(r#"{"x": [[[1, 0]], [[1, 0], [2, 0]]]}"#).unwrap();
        let e = Node::root(&v).field("x", |n| n.matrix()).unwrap_err();
        assert_eq!(e.path, "/x/1");
        let e = Node::root(&v).field("y", |n| n.matrix()).unwrap_err();
        assert_eq!((e.path.as_str(), e.code), ("/y", "schema"));
        let v: Value = serde_json::from_str(r#"{"p": [0.5, [1, 2, 3]]}"#).unwrap();
        let e = Node::root(&v).field("p", |n| n.complexes()).unwrap_err();
        assert_eq!(e.path, "/p/1");
    }

    #[test]
    fn bare_numbers_are_real() {
        let v: Value = serde_json::from_str("[[0.25, [0, 1]]]").unwrap();
        let m = Node::root(&v).matrix().unwrap();
        assert_eq!(m[(0, 0)], C64::new(0.25, 0.0));
        assert_eq!(m[(0, 1)], C64::new(0.0, 1.0));
    }
}
