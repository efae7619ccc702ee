use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// Writes every float as 17 significant digits in lowercase scientific form.
struct Sci;

impl Formatter for Sci {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

pub fn to_string<T: Serialize>(v: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, Sci);
    v.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("json is utf-8")
}
