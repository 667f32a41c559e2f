//! Textual field container: one JSON header line followed by row-major CSV.
//!
//! Values are written with 17 significant digits, so `f64` fields survive a
//! write/read cycle bit for bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GridError, GridSpec, Result, ScalarField};
use crate::scalar::Real;

const FORMAT_TAG: &str = "mfg-lab-field";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl FieldHeader {
    fn for_grid<S: Real>(grid: &GridSpec<S>) -> Self {
        let g = grid.to_f64();
        Self {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            dim: g.dim(),
            shape: g.shape().to_vec(),
            spacing: g.spacing().to_vec(),
            origin: g.origin().to_vec(),
        }
    }
}

pub fn write_field_csv<S: Real, W: Write>(field: &ScalarField<S>, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| GridError::Io(e.to_string());
    let header = FieldHeader::for_grid(field.grid());
    let line = serde_json::to_string(&header).map_err(|e| GridError::Format(e.to_string()))?;
    writeln!(out, "{line}").map_err(io)?;
    let cols = if field.grid().dim() == 2 {
        field.grid().shape()[1]
    } else {
        1
    };
    let mut row = String::new();
    for chunk in field.values().chunks(cols) {
        row.clear();
        for (k, v) in chunk.iter().enumerate() {
            if k > 0 {
                row.push(',');
            }
            row.push_str(&format!("{:.16e}", v.as_f64()));
        }
        writeln!(out, "{row}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_field_csv<S: Real, R: BufRead>(input: R) -> Result<ScalarField<S>> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| GridError::Format("empty field file".into()))?
        .map_err(|e| GridError::Io(e.to_string()))?;
    let header: FieldHeader =
        serde_json::from_str(&first).map_err(|e| GridError::Format(format!("header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(GridError::Format(format!("unknown format tag {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(GridError::Format(format!("unsupported version {}", header.version)));
    }
    let spacing: Vec<S> = header.spacing.iter().map(|&v| S::lit(v)).collect();
    let origin: Vec<S> = header.origin.iter().map(|&v| S::lit(v)).collect();
    let grid = GridSpec::new(header.dim, &header.shape, &spacing, &origin)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| GridError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| {
                GridError::Format(format!("line {}: bad number {tok:?}", lineno + 2))
            })?;
            values.push(S::lit(v));
        }
    }
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(field: &ScalarField<f64>) -> ScalarField<f64> {
        let mut buf = Vec::new();
        write_field_csv(field, &mut buf).unwrap();
        read_field_csv(&buf[..]).unwrap()
    }

    proptest! {
        #[test]
        fn textual_roundtrip_is_bit_exact(
            vals in proptest::collection::vec(-1e300f64..1e300, 12),
            h in 1e-6f64..10.0,
            o in -100.0f64..100.0,
        ) {
            let g = GridSpec::new(2, &[3, 4], &[h, h * 0.5], &[o, -o]).unwrap();
            let f = ScalarField::new(g, vals).unwrap();
            let back = roundtrip(&f);
            prop_assert_eq!(back.grid(), f.grid());
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn one_dimensional_layout_is_one_value_per_line() {
        let g = GridSpec::new(1, &[3], &[0.5], &[0.0]).unwrap();
        let f = ScalarField::new(g, vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(roundtrip(&f), f);
    }

    #[test]
    fn rejects_wrong_length_and_tag() {
        let bad = "{\"format\":\"mfg-lab-field\",\"version\":1,\"dim\":1,\"shape\":[3],\"spacing\":[1.0],\"origin\":[0.0]}\n1.0\n2.0\n";
        assert!(matches!(
            read_field_csv::<f64, _>(bad.as_bytes()),
            Err(GridError::LengthMismatch { .. })
        ));
        let tag = "{\"format\":\"other\",\"version\":1,\"dim\":1,\"shape\":[1],\"spacing\":[1.0],\"origin\":[0.0]}\n1.0\n";
        assert!(matches!(
            read_field_csv::<f64, _>(tag.as_bytes()),
            Err(GridError::Format(_))
        ));
    }
}
