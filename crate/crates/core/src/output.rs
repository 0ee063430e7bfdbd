//! Deterministic output formatting: fixed 12-significant-digit numbers,
//! content hashes, and the CSV / JSON-lines writers shared by the CLI.

use std::io::Write;

use sha2::{Digest, Sha256};

/// Format a number with exactly 12 significant digits. All numeric output
/// goes through this so that identical configurations produce byte-identical
/// files.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        // normalize -0.0
        return format!("{:.11e}", 0.0f64);
    }
    format!("{:.11e}", x)
}

/// SHA-256 hex digest of a text blob.
pub fn digest_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for byte in out {
        s.push_str(&format!("{byte:02x}"));
    }
    s
}

/// Write a CSV table: `# key: value` comment headers, one column-name row,
/// then the data rows at 12 significant digits.
pub fn write_csv<W: Write>(
    w: &mut W,
    comments: &[(&str, String)],
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    for (key, value) in comments {
        writeln!(w, "# {key}: {value}")?;
    }
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_sig).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Append one JSON record as a line.
pub fn write_jsonl<W: Write, T: serde::Serialize>(w: &mut W, record: &T) -> std::io::Result<()> {
    let line = serde_json::to_string(record)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    writeln!(w, "{line}")
}

/// Render a trajectory to the canonical CSV layout
/// (`t, h, h_minus_ct, h_minus_c0t, sup_u, front_slope, interior_gap`).
/// Missing quantities print as NaN.
pub fn render_trajectory_csv(
    trajectory: &crate::stefan::Trajectory,
    comments: &[(&str, String)],
) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(
        &mut buf,
        comments,
        &[
            "t",
            "h",
            "h_minus_ct",
            "h_minus_c0t",
            "sup_u",
            "front_slope",
            "interior_gap",
        ],
        trajectory.samples.iter().enumerate().map(|(i, s)| {
            vec![
                s.t,
                s.h,
                trajectory.gap_shift(i),
                trajectory.gap_critical(i).unwrap_or(f64::NAN),
                s.sup_u,
                s.front_slope,
                s.interior_gap.unwrap_or(f64::NAN),
            ]
        }),
    )?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(-0.0), "0.00000000000e0");
        assert_eq!(fmt_sig(123.456), "1.23456000000e2");
        assert_eq!(fmt_sig(-1.0 / 3.0), "-3.33333333333e-1");
    }

    #[test]
    fn digest_is_stable() {
        let h = digest_hex("reference");
        assert_eq!(h.len(), 64);
        assert_eq!(h, digest_hex("reference"));
        assert_ne!(h, digest_hex("reference "));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &[("config_hash", "abc".to_string())],
            &["x", "v"],
            vec![vec![0.0, 1.0]].into_iter(),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# config_hash: abc\nx,v\n0.00000000000e0,1.00000000000e0\n"
        );
    }
}
