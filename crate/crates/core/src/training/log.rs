use std::io::Write;

/// Metrics captured at one periodic evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    /// Mean discriminator loss on real pairs since the previous record.
    pub d_loss_real: Option<f64>,
    pub d_loss_fake: Option<f64>,
    /// Mean generator (or MSE) loss since the previous record.
    pub g_loss: f64,
    pub val_mae: f64,
    pub jsd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
    /// Step of the returned (best-validation) parameters.
    pub best_step: usize,
    pub best_val_mae: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

impl TrainLog {
    pub const CSV_HEADER: [&'static str; 6] = ["step", "d_loss_real", "d_loss_fake", "g_loss", "val_mae", "jsd"];

    pub fn steps(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.step).collect()
    }

    pub fn last(&self) -> Option<&TrainRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.step.to_string(),
                opt(r.d_loss_real),
                opt(r.d_loss_fake),
                format!("{:e}", r.g_loss),
                format!("{:e}", r.val_mae),
                opt(r.jsd),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
