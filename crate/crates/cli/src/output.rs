//! Report files, written through a temporary file and renamed into place.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use bellcheck_core::checks::DefectRow;
use bellcheck_core::{ClassicalState, Region};
use serde::Serialize;
use tempfile::NamedTempFile;

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

pub const DEFECT_HEADER: [&str; 9] = ["case_index", "vA", "vB", "vC", "atom", "p_AB_C", "p_A_C", "p_B_C", "defect"];

pub fn defects_csv(rows: &[DefectRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DEFECT_HEADER)?;
    for r in rows {
        w.write_record([
            r.case_index.to_string(),
            r.va.to_string(),
            r.vb.to_string(),
            r.vc.to_string(),
            r.atom.clone(),
            r.p_ab_c.to_string(),
            r.p_a_c.to_string(),
            r.p_b_c.to_string(),
            r.defect.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Single-cone marginals: `cone, t2, i2, p_plus, p_minus`.
pub fn marginals_csv(state: &ClassicalState) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cone", "t2", "i2", "p_plus", "p_minus"])?;
    for c in state.domain().iter() {
        let m = state.marginal_weights(&Region::single(c))?;
        w.write_record([c.to_string(), c.t2().to_string(), c.i2().to_string(), m[0].to_string(), m[1].to_string()])?;
    }
    Ok(w.into_inner()?)
}

#[derive(Serialize)]
pub struct StateFile<'a> {
    pub domain: &'a Region,
    /// Weight of each configuration; bit `k` set means cone `k` is `-1`.
    pub weights: &'a [f64],
}
