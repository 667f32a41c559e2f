use std::io::Write;

use crate::hamiltonian::HamiltonianParams;
use crate::scalar::Real;

/// Sample at which a check is tightest (or violated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness<S> {
    pub x: [S; 2],
    pub p: [S; 2],
    pub m: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord<S> {
    pub check_id: String,
    /// Smallest admissible constant over the lattice; infinite when the
    /// worst-case ratio diverges.
    pub estimated_c: S,
    /// Fitted slopes and auxiliary constants, in a fixed order.
    pub fitted: Vec<(String, S)>,
    pub pass: bool,
    pub witness: Option<Witness<S>>,
    pub note: String,
}

impl<S: Real> CheckRecord<S> {
    pub fn fitted_value(&self, name: &str) -> Option<S> {
        self.fitted.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<S> {
    pub params: HamiltonianParams<S>,
    pub records: Vec<CheckRecord<S>>,
    /// Informational; never affects [`Self::pass`].
    pub lions: bool,
}

impl<S: Real> AssumptionReport<S> {
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn record(&self, id: &str) -> Option<&CheckRecord<S>> {
        self.records.iter().find(|r| r.check_id == id)
    }

    pub const CSV_HEADER: &'static str =
        "check_id,estimated_C,slopes,pass,witness_x0,witness_x1,witness_p0,witness_p1,witness_m,note";

    /// One row per check, plus an informational `lions` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let slopes: Vec<String> = r
                .fitted
                .iter()
                .map(|(k, v)| format!("{k}={}", fmt_num(v.as_f64())))
                .collect();
            let w = match &r.witness {
                Some(w) => [w.x[0], w.x[1], w.p[0], w.p[1], w.m]
                    .iter()
                    .map(|v| fmt_num(v.as_f64()))
                    .collect::<Vec<_>>()
                    .join(","),
                None => ",,,,".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.check_id,
                fmt_num(r.estimated_c.as_f64()),
                slopes.join(";"),
                r.pass,
                w,
                csv_escape(&r.note)
            )?;
        }
        let ta = self.params.tau() * self.params.alpha_conj();
        writeln!(
            out,
            "lions,,tau_alpha_conj={},{},,,,,,informational",
            fmt_num(ta.as_f64()),
            self.lions
        )
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub(crate) fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
