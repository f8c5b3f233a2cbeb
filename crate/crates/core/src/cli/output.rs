use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::grid::FlowPoint;
use crate::sharp_constant::DeltaLimit;

/// Pretty JSON with every float written to 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with 17 significant digits; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Traces that can be written as plot data.
#[derive(Debug, Clone, Copy)]
pub enum Trace<'a> {
    Flow(&'a [FlowPoint]),
    Delta(&'a DeltaLimit),
}

fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// CSV with a header row and one row per step.
pub fn emit_plotdata(trace: Trace<'_>) -> Result<String> {
    let mut out = String::new();
    match trace {
        Trace::Flow(points) => {
            if points.is_empty() {
                return Err(Error::Invalid("empty trace".into()));
            }
            out.push_str("step,entropy,w2,var,deficit\n");
            for p in points {
                let w2 = p.w2.map(cell).unwrap_or_default();
                out.push_str(&format!("{},{},{},{},{}\n", p.step, cell(p.entropy), w2, cell(p.var), cell(p.deficit)));
            }
        }
        Trace::Delta(d) => {
            if d.deltas.is_empty() {
                return Err(Error::Invalid("empty trace".into()));
            }
            out.push_str("step,delta,value\n");
            for (k, (delta, value)) in d.deltas.iter().zip(&d.values).enumerate() {
                out.push_str(&format!("{k},{},{}\n", cell(*delta), cell(*value)));
            }
        }
    }
    Ok(out)
}
