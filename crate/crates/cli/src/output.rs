//! CSV and JSON renderings of result rows. Both carry the same fields in the
//! same order; missing values are empty cells or `null`.

use std::io::Write;

use crate::runner::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> anyhow::Result<()> {
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
}

fn write_csv<W: Write>(rows: &[Row], out: W) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write>(rows: &[Row], mut out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub const COLUMNS: [&str; 9] =
    ["scenario", "g", "method", "re_value", "im_value", "acceptance", "std_error", "bound", "diverged"];

pub fn render(rows: &[Row], format: Format) -> String {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("writers emit UTF-8")
}
