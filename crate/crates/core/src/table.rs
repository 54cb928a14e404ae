//! Minimal tabular output shared by the report writers.

use std::fmt::Write as _;
use std::io;

/// A rectangular text table rendered as CSV or GitHub-flavoured Markdown.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Lines emitted above the table. CSV prefixes them with `# `.
    pub preamble: Vec<String>,
}

/// Output flavour for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(format!("unknown format '{other}' (expected csv or md)")),
        }
    }
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            preamble: Vec::new(),
        }
    }

    pub fn push_row<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Markdown => self.to_markdown(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in &self.preamble {
            let _ = writeln!(out, "# {line}");
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // Writing to a Vec cannot fail.
        writer.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory csv");
        }
        let bytes = writer.into_inner().expect("in-memory csv");
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for line in &self.preamble {
            let _ = writeln!(out, "{line}");
        }
        if !self.preamble.is_empty() {
            out.push('\n');
        }
        let escape = |cell: &str| cell.replace('|', "\\|");
        let _ = writeln!(
            out,
            "| {} |",
            self.headers
                .iter()
                .map(|h| escape(h))
                .collect::<Vec<_>>()
                .join(" | ")
        );
        let _ = writeln!(
            out,
            "|{}",
            self.headers.iter().map(|_| "---|").collect::<String>()
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "| {} |",
                row.iter()
                    .map(|c| escape(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            );
        }
        out
    }

    pub fn write_to<W: io::Write>(&self, mut w: W, format: Format) -> io::Result<()> {
        w.write_all(self.render(format).as_bytes())
    }
}

/// Fixed-precision float cell. Negative zero prints as zero.
pub(crate) fn fmt_f64(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}
