//! Rendering. Every float is written with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly; non-finite values become
//! `null` in JSON and `nan`/`inf`/`-inf` in CSV.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with fixed-width float formatting.
struct Sig17(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Sig17 {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// CSV with a header row; fields are already formatted.
pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("fields are UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits() {
        assert_eq!(number(5.0), "5.0000000000000000e0");
        assert_eq!(number(-45.0), "-4.5000000000000000e1");
        assert_eq!(number(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 0.7598356856515925;
        assert_eq!(number(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn json_uses_fixed_digits() {
        #[derive(Serialize)]
        struct T {
            n: usize,
            x: Vec<f64>,
            y: f64,
        }
        let s = to_json(&T {
            n: 2,
            x: vec![0.5],
            y: f64::NAN,
        });
        assert!(
            s.contains("\"n\": 2")
                && s.contains("5.0000000000000000e-1")
                && s.contains("\"y\": null")
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"][0].as_f64(), Some(0.5));
    }
}
