//! Result tables in the fixed CSV schema.

use fliplab::Complex64;

pub const HEADER: [&str; 7] = [
    "experiment",
    "params",
    "n",
    "estimate",
    "stderr",
    "target",
    "abs_error",
];

/// One table row; `stderr` is 0 exactly when the value was computed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub params: String,
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub abs_error: f64,
}

impl ResultRow {
    pub fn new(
        experiment: &str,
        params: &str,
        n: usize,
        estimate: f64,
        stderr: f64,
        target: f64,
    ) -> Self {
        ResultRow {
            experiment: experiment.to_string(),
            params: params.to_string(),
            n,
            estimate,
            stderr,
            target,
            abs_error: (estimate - target).abs(),
        }
    }

    pub fn exact(experiment: &str, params: &str, n: usize, estimate: f64, target: f64) -> Self {
        Self::new(experiment, params, n, estimate, 0.0, target)
    }

    /// Real part of a complex estimate; the imaginary part is kept in the
    /// error column.
    pub fn complex(
        experiment: &str,
        params: &str,
        n: usize,
        estimate: Complex64,
        stderr: f64,
        target: Complex64,
    ) -> Self {
        let mut row = Self::new(experiment, params, n, estimate.re, stderr, target.re);
        row.abs_error = (estimate - target).norm();
        row
    }
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# ` comment lines followed by the header and the rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.experiment.clone(),
                r.params.clone(),
                r.n.to_string(),
                fmt_float(r.estimate),
                fmt_float(r.stderr),
                fmt_float(r.target),
                fmt_float(r.abs_error),
            ])
            .expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(bytes).expect("utf-8 fields"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::default();
        t.comment("ball_xi2(2) = 47/6");
        t.push(ResultRow::exact("xi", "q=2", 2, 5.0 / 6.0, 5.0 / 6.0));
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# ball_xi2(2) = 47/6");
        assert_eq!(
            lines[1],
            "experiment,params,n,estimate,stderr,target,abs_error"
        );
        assert_eq!(
            lines[2],
            "xi,q=2,2,8.3333333333333337e-1,0.0000000000000000e0,8.3333333333333337e-1,0.0000000000000000e0"
        );
    }

    #[test]
    fn seventeen_digits_roundtrip() {
        for x in [1.0 / 3.0, std::f64::consts::PI, 1e-300, 6.02e23] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
