use std::path::Path;

/// One row per subinterval start, plus a closing row at the horizon.
/// `lambda` is taken from `z_tt(t+)` except on the closing row (`t-`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub lambda: f64,
    pub g_bar: f64,
    pub energy: f64,
    pub jump_l2: f64,
    /// Fixed-point iterations on the subinterval. Not written to CSV.
    pub iterations: usize,
}

#[derive(Clone, Debug, Default)]
pub struct PenaltyLedger {
    pub rows: Vec<LedgerRow>,
}

pub const LEDGER_COLUMNS: [&str; 5] = ["t", "lambda", "g_bar", "energy", "jump_l2"];

impl PenaltyLedger {
    pub fn max_lambda(&self) -> f64 {
        self.rows.iter().map(|r| r.lambda).fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.rows.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    /// CSV with 17 significant digits per value.
    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(LEDGER_COLUMNS)?;
        for r in &self.rows {
            w.write_record([r.t, r.lambda, r.g_bar, r.energy, r.jump_l2].map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect();
            if v.len() != LEDGER_COLUMNS.len() {
                return Err(csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, "ledger row width")));
            }
            rows.push(LedgerRow { t: v[0], lambda: v[1], g_bar: v[2], energy: v[3], jump_l2: v[4], iterations: 0 });
        }
        Ok(Self { rows })
    }
}
