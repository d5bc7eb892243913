//! CSV serialization of iteration traces.
//!
//! Header `iter,x_0,…,x_{n-1},d_step,d_ref`; `d_step` is `D_f(x_k, x_{k+1})`
//! and is empty on the last row, `d_ref` is empty without a reference point.

use std::io::{Read, Write};

use bregcirc::IterationTrace;

use crate::error::CliError;
use crate::format::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub x: Vec<f64>,
    pub d_step: Option<f64>,
    pub d_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub dim: usize,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn from_trace(trace: &IterationTrace) -> Self {
        let rows = trace
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| TraceRow {
                iter: k,
                x: p.iter().copied().collect(),
                d_step: trace.step_div.get(k).copied(),
                d_ref: trace.ref_div.as_ref().map(|r| r[k]),
            })
            .collect();
        Self {
            dim: trace.points[0].len(),
            rows,
        }
    }

    pub fn header(dim: usize) -> Vec<String> {
        let mut h = vec!["iter".to_string()];
        h.extend((0..dim).map(|i| format!("x_{i}")));
        h.push("d_step".into());
        h.push("d_ref".into());
        h
    }

    /// Writes and flushes the table.
    pub fn write<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::header(self.dim))?;
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.iter.to_string()];
            rec.extend(row.x.iter().map(|&v| fmt_f64(v)));
            rec.push(cell(row.d_step));
            rec.push(cell(row.d_ref));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ASCII"))
    }

    pub fn read<R: Read>(r: R) -> Result<Self, CliError> {
        let mut input = csv::Reader::from_reader(r);
        let header = input.headers()?.clone();
        if header.len() < 3 {
            return Err(CliError::usage("trace header too short"));
        }
        let dim = header.len() - 3;
        let expected = Self::header(dim);
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(CliError::usage(format!("unexpected trace header `{}`", header.iter().collect::<Vec<_>>().join(","))));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::usage(format!("`{s}` is not a number")))
        };
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        let mut rows = Vec::new();
        for rec in input.records() {
            let rec = rec?;
            let iter = rec[0]
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("`{}` is not an iteration index", &rec[0])))?;
            let x = (1..=dim).map(|i| num(&rec[i])).collect::<Result<Vec<_>, _>>()?;
            rows.push(TraceRow {
                iter,
                x,
                d_step: opt(&rec[dim + 1])?,
                d_ref: opt(&rec[dim + 2])?,
            });
        }
        Ok(Self { dim, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bregcirc::{run, LegendreFunction, MethodConfig, OperatorFamily, Point};

    fn trace(reference: bool) -> IterationTrace {
        let f = LegendreFunction::fermi_dirac(2);
        let s = OperatorFamily::parse(&["flip:1"], 2).unwrap();
        let cfg = MethodConfig {
            reference_point: reference.then(|| Point::from_column_slice(&[0.5, 0.4])),
            ..Default::default()
        };
        run(&f, &s, &Point::from_column_slice(&[0.3, 0.4]), &cfg).unwrap()
    }

    #[test]
    fn layout() {
        let csv = TraceTable::from_trace(&trace(false)).to_csv_string().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,x_0,x_1,d_step,d_ref");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "1,0.5,0.4,,");
        assert!(lines[1].starts_with("0,0.3,0.4,") && lines[1].ends_with(','));
    }

    #[test]
    fn round_trip_exact() {
        for reference in [false, true] {
            let table = TraceTable::from_trace(&trace(reference));
            let back = TraceTable::read(table.to_csv_string().unwrap().as_bytes()).unwrap();
            assert_eq!(back, table);
        }
    }

    #[test]
    fn malformed_input() {
        assert!(TraceTable::read("iter,x_0,d_step\n".as_bytes()).is_err());
        assert!(TraceTable::read("iter,x_0,d_step,d_ref\n0,abc,,\n".as_bytes()).is_err());
        assert!(TraceTable::read("iter,y,d_step,d_ref\n".as_bytes()).is_err());
    }
}
