use hermitia::curvature::CurvatureTensor;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

pub fn cx(v: Complex64) -> Value {
    json!({ "re": v.re, "im": v.im })
}

pub fn point(z: &[Complex64]) -> Value {
    Value::Array(z.iter().map(|v| cx(*v)).collect())
}

pub fn matrix(m: &DMatrix<Complex64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cx(m[(i, j)])).collect())).collect())
}

/// Nested `[i][j][k][l]` array of `R_{i j̄ k l̄}`.
pub fn tensor(t: &CurvatureTensor) -> Value {
    let n = t.n;
    let level = |f: &dyn Fn(usize) -> Value| Value::Array((0..n).map(f).collect());
    level(&|i| level(&|j| level(&|k| level(&|l| cx(t.get(i, j, k, l))))))
}

/// Long-format CSV rows `point, quantity, index, re, im`.
pub fn matrix_rows(rows: &mut Vec<Vec<String>>, p: usize, name: &str, m: &DMatrix<Complex64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            rows.push(vec![p.to_string(), name.into(), format!("{i}.{j}"), v.re.to_string(), v.im.to_string()]);
        }
    }
}

pub fn tensor_rows(rows: &mut Vec<Vec<String>>, p: usize, name: &str, t: &CurvatureTensor) {
    let n = t.n;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = t.get(i, j, k, l);
                    rows.push(vec![p.to_string(), name.into(), format!("{i}.{j}.{k}.{l}"), v.re.to_string(), v.im.to_string()]);
                }
            }
        }
    }
}

pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    /// `Some` for commands whose exit status reports a verdict.
    pub passed: Option<bool>,
    pub result: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn json(&self) -> String {
        let mut top = Map::new();
        top.insert("tool".into(), json!("hermitia"));
        top.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        top.insert("command".into(), json!(self.command));
        top.insert("config".into(), self.config.clone());
        top.insert("seed".into(), json!(self.seed));
        if let Some(p) = self.passed {
            top.insert("passed".into(), json!(p));
        }
        top.insert("result".into(), self.result.clone());
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn csv(&self) -> String {
        let mut out = format!("# hermitia {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        out.push_str(&format!("# config {}\n", self.config));
        match self.seed {
            Some(s) => out.push_str(&format!("# seed {s}\n")),
            None => out.push_str("# seed none\n"),
        }
        if let Some(p) = self.passed {
            out.push_str(&format!("# passed {p}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}
