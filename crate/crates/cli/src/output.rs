//! JSON and CSV emission with 17 significant digits per float.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// `v` with 17 significant digits, trailing zeros trimmed, in positional
/// notation for exponents in `-4..17` and scientific notation otherwise.
/// Whole numbers keep a `.0` so they read back as floats.
pub fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}.0e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}.0", "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// The default formatter's compact layout with [`fmt_f64`] floats.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        // non-finite values never reach here: serde_json writes them as null
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// One line of compact JSON.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser).expect("report types serialize");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(2.0), "2.0");
        assert_eq!(fmt_f64(-0.5), "-0.5");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_f64(1e-300), "1.0e-300");
        assert_eq!(fmt_f64(1.5e20), "1.5e20");
        assert_eq!(fmt_f64(123456.0), "123456.0");
        assert_eq!(fmt_f64(0.0), "0.0");
        assert_eq!(fmt_f64(1e16), "10000000000000000.0");
        assert_eq!(fmt_f64(2.5e-5), "2.5000000000000001e-5");
        assert_eq!(fmt_f64(2.5e-4), "0.00025000000000000001");
    }

    #[test]
    fn every_value_reads_back_exactly() {
        for v in [
            0.1,
            2f64.sqrt(),
            1e-300,
            -7.25e123,
            f64::MAX,
            f64::MIN_POSITIVE,
            123.456,
        ] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_uses_the_float_format_and_null_for_non_finite() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
            c: f64,
        }
        let s = to_json(&R {
            a: 2.0,
            b: vec![0.1, f64::NAN],
            c: f64::INFINITY,
        });
        assert_eq!(s, r#"{"a":2.0,"b":[0.10000000000000001,null],"c":null}"#);
    }
}
