/*
  Copyright 2026 The binpick Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// A row with a fixed column order. Column names carry their unit suffix.
pub trait Tabular {
    fn columns() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// `x` rounded to six significant digits, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = |v: f64| v.abs().log10().floor() as i32;
    let mut e = exp(x);
    let scale = 10f64.powi(5 - e);
    let rounded = (x * scale).round() / scale;
    // rounding can carry into the next decade (9.999996 -> 10)
    if rounded != 0.0 {
        e = exp(rounded);
    }
    if !(-5..15).contains(&e) {
        return format!("{rounded:.5e}");
    }
    let decimals = (5 - e).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub(crate) fn opt_sig(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

/// Writes `rows` to `path`. CSV has a header row even when `rows` is empty;
/// JSON keeps full float precision so it reads back value-identical.
pub fn emit_report<T: Tabular + Serialize>(rows: &[T], format: ReportFormat, path: &Path) -> Result<(), BenchError> {
    let io = |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(T::columns())?;
            for r in rows {
                w.write_record(r.cells())?;
            }
            w.flush().map_err(io)?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
