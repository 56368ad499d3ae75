//! Deterministic text output.
//!
//! Every float that reaches a file goes through [`fmt_f64`], which prints 17
//! significant digits. That many digits round-trips any `f64` exactly, so a
//! rerun of the same study produces byte-identical files and downstream
//! parsers recover the original bits.

use std::io::Write;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::Result;

/// 17-significant-digit scientific notation, the round-trip-exact format.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write one CSV row of floats after a fixed prefix of plain fields.
pub(crate) fn write_csv_row<W: Write>(
    out: &mut W,
    prefix: &[String],
    floats: &[f64],
) -> Result<()> {
    let mut fields: Vec<String> = prefix.to_vec();
    fields.extend(floats.iter().copied().map(fmt_f64));
    writeln!(out, "{}", fields.join(","))?;
    Ok(())
}

/// serde_json formatter that prints every float through [`fmt_f64`]. The
/// default formatter prints shortest-round-trip digits, which is also exact
/// but varies in width; a fixed style keeps diffs and goldens stable.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize to pretty-printed JSON with exact floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        serde_json::ser::PrettyFormatter::with_indent(b"  "),
    );
    value.serialize(&mut ser)?;
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    Ok(s)
}

/// Serialize with [`fmt_f64`] floats; used where fixed-width output matters
/// more than pretty printing.
pub fn to_json_string_exact<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips_awkward_values() {
        for x in [
            0.1,
            1.0 / 3.0,
            2.0f64.sqrt(),
            6.02e23,
            5e-324,
            -0.918558653543692,
        ] {
            let printed = fmt_f64(x);
            assert_eq!(printed.parse::<f64>().unwrap(), x, "{printed}");
        }
    }

    #[test]
    fn fmt_is_fixed_width_in_the_mantissa() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn exact_json_prints_floats_through_the_formatter() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
        }
        let s = to_json_string_exact(&Row { t: 0.1 }).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }

    #[test]
    fn csv_row_joins_prefix_and_floats() {
        let mut buf = Vec::new();
        write_csv_row(&mut buf, &["3".to_string()], &[1.0, 0.5]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "3,1.0000000000000000e0,5.0000000000000000e-1\n"
        );
    }
}
