//! Shared CSV formatting: 17 significant digits so every value round-trips.

use std::io::{self, Write};

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Writes `# key=value key=value ...` describing how a file was produced.
pub fn comment_line<W: Write>(w: &mut W, fields: &[(&str, String)]) -> io::Result<()> {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# {}", body.join(" "))
}
