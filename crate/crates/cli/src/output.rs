//! Deterministic file writers: raster CSV, trajectory CSV, report JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use synsync_core::ifsim::RasterEvent;
use synsync_core::odesim::OdeTrajectory;

use crate::error::CliError;

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = BufWriter::new(File::create(path)?);
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// `neuron_id,cycle,time`, one row per spike in the given order.
pub fn write_raster(path: &Path, raster: &[RasterEvent]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["neuron_id", "cycle", "time"])?;
    for e in raster {
        w.write_record([e.neuron.to_string(), e.cycle.to_string(), e.time.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `time,x_0,v_0,x_1,v_1,…` for every stored sample.
pub fn write_trajectory(path: &Path, traj: &OdeTrajectory) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let n = traj.x.len();
    let mut header = vec!["time".to_string()];
    for i in 0..n {
        header.push(format!("x_{i}"));
        header.push(format!("v_{i}"));
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(2 * n + 1);
    for (k, t) in traj.times.iter().enumerate() {
        row.clear();
        row.push(t.to_string());
        for i in 0..n {
            row.push(traj.x[i][k].to_string());
            row.push(traj.v[i][k].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline. Non-finite numbers become
/// `null`.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<(), CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, report)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

/// ODE spikes as raster rows; `cycle` is the per-neuron spike ordinal.
pub fn ode_raster(traj: &OdeTrajectory) -> Vec<RasterEvent> {
    let mut count = vec![0usize; traj.x.len()];
    traj.spikes
        .iter()
        .map(|s| {
            let cycle = count[s.neuron];
            count[s.neuron] += 1;
            RasterEvent {
                neuron: s.neuron,
                cycle,
                time: s.time,
            }
        })
        .collect()
}
