//! CSV schema shared by `estimate` and `bench`.
//!
//! Header: `method,kind,n,tolerance,eps,delta,trial,k,m,matvecs,relative_error,wall_time`.
//! Bench output prepends `suite,p`. Trial rows carry integer `k`, `m` and
//! `matvecs`; the closing `mean` row carries their means as floats. Every
//! float is written as `{:.16e}` (17 significant digits).

use std::io::Write;

use diagest::bounds::Tolerance;

pub const HEADER: [&str; 12] = [
    "method",
    "kind",
    "n",
    "tolerance",
    "eps",
    "delta",
    "trial",
    "k",
    "m",
    "matvecs",
    "relative_error",
    "wall_time",
];

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub kind: String,
    pub n: usize,
    pub tolerance: Tolerance,
    pub delta: f64,
    pub trial: usize,
    pub k: usize,
    pub m: usize,
    pub matvecs: u64,
    pub relative_error: f64,
    /// Seconds; zero unless timing was requested.
    pub wall_time: f64,
}

fn tolerance_fields(t: Tolerance) -> [String; 2] {
    match t {
        Tolerance::Relative(e) => ["relative".into(), float(e)],
        Tolerance::Absolute(e) => ["absolute".into(), float(e)],
    }
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        let [tol, eps] = tolerance_fields(self.tolerance);
        vec![
            self.method.clone(),
            self.kind.clone(),
            self.n.to_string(),
            tol,
            eps,
            float(self.delta),
            self.trial.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.matvecs.to_string(),
            float(self.relative_error),
            float(self.wall_time),
        ]
    }
}

/// The `mean` row over `rows`, which must share method, kind and tolerance.
pub fn mean_record(rows: &[ResultRow]) -> Option<Vec<String>> {
    let first = rows.first()?;
    let c = rows.len() as f64;
    let avg = |f: &dyn Fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / c;
    let [tol, eps] = tolerance_fields(first.tolerance);
    Some(vec![
        first.method.clone(),
        first.kind.clone(),
        first.n.to_string(),
        tol,
        eps,
        float(first.delta),
        "mean".into(),
        float(avg(&|r| r.k as f64)),
        float(avg(&|r| r.m as f64)),
        float(avg(&|r| r.matvecs as f64)),
        float(avg(&|r| r.relative_error)),
        float(avg(&|r| r.wall_time)),
    ])
}

/// Rows of one run group followed by their mean, optionally prefixed.
pub fn write_group<W: Write>(
    out: &mut csv::Writer<W>,
    prefix: &[String],
    rows: &[ResultRow],
) -> csv::Result<()> {
    for r in rows {
        out.write_record(prefix.iter().cloned().chain(r.record()))?;
    }
    if let Some(mean) = mean_record(rows) {
        out.write_record(prefix.iter().cloned().chain(mean))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, err: f64) -> ResultRow {
        ResultRow {
            method: "bekas".into(),
            kind: "flat".into(),
            n: 10,
            tolerance: Tolerance::Relative(0.25),
            delta: 0.01,
            trial,
            k: 0,
            m: 4,
            matvecs: 4,
            relative_error: err,
            wall_time: 0.0,
        }
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn mean_row_averages() {
        let m = mean_record(&[row(0, 1.0), row(1, 2.0)]).unwrap();
        assert_eq!(m[6], "mean");
        assert_eq!(m[10], float(1.5));
        assert!(mean_record(&[]).is_none());
    }

    #[test]
    fn record_matches_header_width() {
        assert_eq!(row(0, 0.5).record().len(), HEADER.len());
    }
}
