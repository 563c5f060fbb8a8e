use std::io::Write;

/// One evaluated point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    /// Mean per-sample MSE over the whole dataset.
    pub cost: f64,
    pub accuracy: f64,
    pub g_norm: f64,
    pub checksum: u64,
}

/// Strided record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    stride: u64,
    records: Vec<TraceRecord>,
}

impl TrainingTrace {
    pub fn new(stride: u64) -> Self {
        TrainingTrace {
            stride: stride.max(1),
            records: Vec::new(),
        }
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub(crate) fn push(&mut self, rec: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.step < rec.step));
        self.records.push(rec);
    }

    /// First recorded step whose cost is below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.cost < threshold)
            .map(|r| r.step)
    }

    /// CSV with header `step,cost,accuracy,g_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,cost,accuracy,g_norm")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.step, r.cost, r.accuracy, r.g_norm)?;
        }
        Ok(())
    }
}
