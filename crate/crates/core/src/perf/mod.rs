//! Roofline bounds, CPR records and the benchmark grid.
//!
//! CPR (cycles per row) is wall time converted to cycles at the descriptor's
//! nominal clock, divided by evaluations times rows. No hardware counters
//! are read.

mod grid;

use std::io::Write;

pub use grid::{parse_grid_config, run_grid, GridConfig};

use crate::Result;

/// Machine parameters behind the roofline bounds. The default is a
/// dual-socket 8-core 2.6 GHz part with 256-bit FMA units and four DDR3-1600
/// channels per socket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareDescriptor {
    pub cpu_clock_ghz: f64,
    pub sockets: u32,
    pub cores_per_socket: u32,
    pub vector_bits: u32,
    pub flops_per_lane_per_clock: u32,
    pub mem_channels_per_socket: u32,
    pub bytes_per_channel_per_mem_clock: u32,
    pub mem_clock_ghz: f64,
}

impl Default for HardwareDescriptor {
    fn default() -> Self {
        Self {
            cpu_clock_ghz: 2.6,
            sockets: 2,
            cores_per_socket: 8,
            vector_bits: 256,
            flops_per_lane_per_clock: 2,
            mem_channels_per_socket: 4,
            bytes_per_channel_per_mem_clock: 8,
            mem_clock_ghz: 1.6,
        }
    }
}

impl HardwareDescriptor {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            self.sockets,
            self.cores_per_socket,
            self.vector_bits,
            self.flops_per_lane_per_clock,
            self.mem_channels_per_socket,
            self.bytes_per_channel_per_mem_clock,
        ];
        if ints.contains(&0) || !(self.cpu_clock_ghz > 0.0) || !(self.mem_clock_ghz > 0.0) {
            return Err(crate::Error::InvalidArgument("hardware descriptor fields must be positive".into()));
        }
        Ok(())
    }

    /// Peak double-precision flops per clock across the machine.
    pub fn peak_flops_per_clock(&self) -> f64 {
        self.flops_per_lane_per_clock as f64
            * (self.vector_bits as f64 / 64.0)
            * self.cores_per_socket as f64
            * self.sockets as f64
    }

    /// Peak memory bandwidth in bytes per second.
    pub fn peak_bandwidth(&self) -> f64 {
        self.bytes_per_channel_per_mem_clock as f64
            * self.mem_channels_per_socket as f64
            * self.sockets as f64
            * self.mem_clock_ghz
            * 1e9
    }
}

/// Compute-bound minimum CPR: `2K` flops per row at peak flop rate.
pub fn compute_min_cpr(hw: &HardwareDescriptor, k: usize) -> f64 {
    2.0 * k as f64 / hw.peak_flops_per_clock()
}

/// Memory-bound minimum CPR: `8(K+1)` bytes per row at peak bandwidth.
pub fn memory_min_cpr(hw: &HardwareDescriptor, k: usize) -> f64 {
    hw.cpu_clock_ghz * 1e9 * 8.0 * (k as f64 + 1.0) / hw.peak_bandwidth()
}

/// One timed benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub label: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub workers: usize,
    pub n_chunks: usize,
    pub cpr: f64,
    pub wall_seconds: f64,
    pub evals: u64,
    /// Set when the cell failed; timing fields are then NaN / zero.
    pub error: Option<String>,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str = "label,n_rows,n_cols,workers,n_chunks,cpr,wall_seconds,evals";

    /// Builds a record with `cpr = clock * wall / (evals * n_rows)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_timing(
        label: impl Into<String>,
        n_rows: usize,
        n_cols: usize,
        workers: usize,
        n_chunks: usize,
        wall_seconds: f64,
        evals: u64,
        hw: &HardwareDescriptor,
    ) -> Self {
        // A zero-length timing would give cpr = 0; clamp to one clock tick.
        let wall_seconds = wall_seconds.max(1e-9 / hw.cpu_clock_ghz);
        let cpr = hw.cpu_clock_ghz * 1e9 * wall_seconds / (evals.max(1) as f64 * n_rows.max(1) as f64);
        Self {
            label: label.into(),
            n_rows,
            n_cols,
            workers,
            n_chunks,
            cpr,
            wall_seconds,
            evals: evals.max(1),
            error: None,
        }
    }

    pub fn failed(label: impl Into<String>, n_rows: usize, n_cols: usize, workers: usize, n_chunks: usize, err: String) -> Self {
        Self {
            label: label.into(),
            n_rows,
            n_cols,
            workers,
            n_chunks,
            cpr: f64::NAN,
            wall_seconds: f64::NAN,
            evals: 0,
            error: Some(err),
        }
    }

    pub fn csv_row(&self) -> String {
        let label = match &self.error {
            None => self.label.clone(),
            Some(e) => format!("{}:FAILED({})", self.label, e.replace([',', '\n'], ";")),
        };
        format!(
            "{},{},{},{},{},{:.6},{:.9},{}",
            label, self.n_rows, self.n_cols, self.workers, self.n_chunks, self.cpr, self.wall_seconds, self.evals
        )
    }
}

pub fn write_records<W: Write>(records: &[BenchRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", BenchRecord::CSV_HEADER)?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Roofline sidecar: one `k,compute_min_cpr,memory_min_cpr` line per K.
pub fn write_roofline<W: Write>(hw: &HardwareDescriptor, ks: &[usize], mut out: W) -> Result<()> {
    writeln!(out, "k,compute_min_cpr,memory_min_cpr")?;
    for &k in ks {
        writeln!(out, "{k},{:.6},{:.6}", compute_min_cpr(hw, k), memory_min_cpr(hw, k))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_vector_width_doubles_compute_bound() {
        let hw = HardwareDescriptor::default();
        let narrow = HardwareDescriptor {
            vector_bits: 128,
            ..hw
        };
        assert!((compute_min_cpr(&narrow, 40) - 2.0 * compute_min_cpr(&hw, 40)).abs() < 1e-15);
    }

    #[test]
    fn record_arithmetic() {
        let hw = HardwareDescriptor::default();
        let r = BenchRecord::from_timing("x", 1000, 10, 1, 1, 0.002, 4, &hw);
        assert_eq!(r.cpr, 2.6e9 * 0.002 / 4000.0);
        assert_eq!(r.csv_row().split(',').count(), 8);
        let f = BenchRecord::failed("y", 1, 1, 1, 1, "boom, bad".into());
        assert!(f.csv_row().starts_with("y:FAILED(boom; bad),"));
    }

    #[test]
    fn descriptor_validation() {
        let hw = HardwareDescriptor {
            sockets: 0,
            ..Default::default()
        };
        assert!(hw.validate().is_err());
        assert!(HardwareDescriptor::default().validate().is_ok());
    }
}
