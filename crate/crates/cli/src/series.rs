use std::path::Path;

use crate::failure::{numeric, Failure};

/// Reads observations from either a headerless single column of decimals or a
/// CSV with a header containing an `x` column. Lines starting with `#` are skipped.
pub fn load_series(path: &Path) -> Result<Vec<f64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| numeric(format!("cannot open {}: {e}", path.display())))?;
    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(|e| numeric(format!("{}: {e}", path.display())))?,
        None => return Err(numeric(format!("{}: no data rows", path.display()))),
    };
    let headerless = first.len() == 1 && first[0].parse::<f64>().is_ok();
    let column = if headerless {
        0
    } else {
        first
            .iter()
            .position(|h| h == "x")
            .ok_or_else(|| numeric(format!("{}: header has no `x` column", path.display())))?
    };

    let mut values = Vec::new();
    let parse = |rec: &csv::StringRecord, values: &mut Vec<f64>| -> Result<(), Failure> {
        let line = rec.position().map_or(0, |p| p.line());
        let field = rec
            .get(column)
            .ok_or_else(|| numeric(format!("row {line}: missing column {}", column + 1)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| numeric(format!("row {line}, column {}: `{field}` is not a number", column + 1)))?;
        if !v.is_finite() {
            return Err(numeric(format!("row {line}, column {}: non-finite value", column + 1)));
        }
        values.push(v);
        Ok(())
    };
    if headerless {
        parse(&first, &mut values)?;
    }
    for rec in records {
        let rec = rec.map_err(|e| numeric(format!("{}: {e}", path.display())))?;
        parse(&rec, &mut values)?;
    }
    if values.is_empty() {
        return Err(numeric(format!("{}: no data rows", path.display())));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn headerless_column() {
        let f = file("1.5\n-2\n3e-1\n");
        assert_eq!(load_series(f.path()).unwrap(), vec![1.5, -2.0, 0.3]);
    }

    #[test]
    fn simulator_layout() {
        let f = file("# seed=1\nt,x,sigma,eps\n1,0.5,1,0.5\n2,-0.25,1.1,-0.2\n");
        assert_eq!(load_series(f.path()).unwrap(), vec![0.5, -0.25]);
    }

    #[test]
    fn simulator_output_round_trips() {
        let theta = larch::Theta::new(0.2, 0.2, 1.0);
        let sample = larch::simulate(
            &larch::CoeffSpec::power_law(100),
            &theta,
            &larch::SimConfig::new(250, 4).with_burn_in(100),
        )
        .unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        larch::csvfmt::comment_line(&mut f, &[("seed", "4".into())]).unwrap();
        sample.write_csv(&mut f).unwrap();
        assert_eq!(load_series(f.path()).unwrap(), sample.observations());
    }

    #[test]
    fn failures_carry_locations() {
        assert!(load_series(file("").path()).is_err());
        let e = load_series(file("t,x\n1,0.5\n2,abc\n").path()).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("row 3"), "{}", e.message);
        assert!(load_series(file("1\nNaN\n").path()).is_err());
        assert!(load_series(file("a,b\n1,2\n").path()).is_err());
    }
}
