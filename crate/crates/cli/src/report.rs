//! Report structure and CSV emission. Metadata travels as `#`-prefixed
//! comment lines; data rows carry integers verbatim and measurements as
//! 17-significant-digit scientific notation so doubles round-trip exactly.

use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColKind {
    Int,
    Float,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub task: String,
    pub columns: Vec<(&'static str, ColKind)>,
    pub rows: Vec<Vec<f64>>,
    pub summary: String,
    pub seed: u64,
    pub config_echo: String,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# cubelab {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# task: {}", self.task)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# config: {}", self.config_echo)?;
        writeln!(w, "# wall_clock_s: {:.3}", self.wall_clock_s)?;
        let header: Vec<&str> = self.columns.iter().map(|(name, _)| *name).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut line = String::new();
            for (i, (value, (_, kind))) in row.iter().zip(self.columns.iter()).enumerate() {
                if i > 0 {
                    line.push(',');
                }
                match kind {
                    ColKind::Int => line.push_str(&format!("{}", *value as i64)),
                    ColKind::Float => line.push_str(&format!("{value:.16e}")),
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let report = Report {
            task: "avg".into(),
            columns: vec![("N", ColKind::Int), ("re", ColKind::Float)],
            rows: vec![vec![16.0, 1.0], vec![32.0, 0.5]],
            summary: "ok".into(),
            seed: 42,
            config_echo: "{}".into(),
            wall_clock_s: 0.0,
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# cubelab"));
        assert!(text.contains("\nN,re\n"));
        assert!(text.contains("\n16,1.0000000000000000e0\n"));
    }
}
