//! CSV dumps of the intermediate fields.

use std::fs;
use std::path::Path;

use cocycle_core::assembly::HermitianField;
use cocycle_core::cocycle::UnitaryCocycleField;
use cocycle_core::space::PartitionOfUnity;
use cocycle_core::CMatrix;

use crate::pipeline::Run;
use crate::RunError;

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, RunError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| RunError::io(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_matrix(w: &mut csv::Writer<fs::File>, prefix: &[String], m: &CMatrix) -> Result<(), RunError> {
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            let mut rec = prefix.to_vec();
            rec.extend([r.to_string(), c.to_string(), z.re.to_string(), z.im.to_string()]);
            w.write_record(&rec)?;
        }
    }
    Ok(())
}

/// `point, chart, phi` and `point, chart, inside`.
pub fn write_partition(dir: &Path, pou: &PartitionOfUnity) -> Result<(), RunError> {
    let cov = pou.covering();
    let mut phi = writer(dir, "phi.csv")?;
    let mut masks = writer(dir, "masks.csv")?;
    phi.write_record(["point", "chart", "phi"])?;
    masks.write_record(["point", "chart", "inside"])?;
    for p in 0..cov.grid().len() {
        for chart in 0..cov.chart_count() {
            phi.write_record([p.to_string(), chart.to_string(), pou.phi(chart, p).to_string()])?;
            masks.write_record([p.to_string(), chart.to_string(), u8::from(cov.contains(chart, p)).to_string()])?;
        }
    }
    phi.flush().and(masks.flush()).map_err(|e| RunError::io(dir, e))
}

/// `family, alpha, beta, point, row, col, re, im` on every nonempty overlap.
pub fn write_cocycles(dir: &Path, plus: &UnitaryCocycleField, minus: &UnitaryCocycleField) -> Result<(), RunError> {
    let mut w = writer(dir, "cocycles.csv")?;
    w.write_record(["family", "alpha", "beta", "point", "row", "col", "re", "im"])?;
    let m = plus.chart_count();
    for (name, field) in [("plus", plus), ("minus", minus)] {
        for a in 0..m {
            for b in 0..m {
                for p in 0..field.covering().grid().len() {
                    if let Some(g) = field.get(a, b, p) {
                        let prefix = [name.to_string(), a.to_string(), b.to_string(), p.to_string()];
                        write_matrix(&mut w, &prefix, g)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| RunError::io(dir, e))
}

/// `point, row, col, re, im`.
pub fn write_field(dir: &Path, name: &str, field: &HermitianField) -> Result<(), RunError> {
    let mut w = writer(dir, name)?;
    w.write_record(["point", "row", "col", "re", "im"])?;
    for p in 0..field.len() {
        write_matrix(&mut w, &[p.to_string()], field.at(p).as_matrix())?;
    }
    w.flush().map_err(|e| RunError::io(dir, e))
}

/// Everything a run produced, under `dir`.
pub fn write_all(dir: &Path, run: &Run) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    write_partition(dir, &run.setup.pou)?;
    write_cocycles(dir, &run.setup.pair.plus, &run.setup.pair.minus)?;
    let s = &run.stages;
    for (name, f) in [
        ("a_plus.csv", &s.a_plus),
        ("a_minus.csv", &s.a_minus),
        ("b_plus.csv", &s.b_plus),
        ("b_minus.csv", &s.b_minus),
        ("q.csv", &s.q),
    ] {
        write_field(dir, name, f)?;
    }
    if let Some(xi) = &run.xi {
        write_field(dir, "projection.csv", xi.projection.as_field())?;
    }
    Ok(())
}
