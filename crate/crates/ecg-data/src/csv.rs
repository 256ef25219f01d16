use crate::lead::{check_permutation, LeadId, LeadMatrix, NUM_LEADS};
use crate::record::EcgRecord;
use crate::{EcgDataError, Result};

/// Convert CSV text (header row of lead names, one column per lead,
/// one sample per row) into a record. Empty cells and literal
/// `nan`/`NaN` parse to NaN so imputation can run downstream.
pub fn record_from_csv(
    text: &str,
    subject_id: &str,
    record_id: &str,
    fs: u32,
) -> Result<EcgRecord> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| EcgDataError::BadCsv("empty file".into()))?;
    let lead_order: Vec<LeadId> = header
        .split(',')
        .map(|name| LeadId::parse(name))
        .collect::<Result<_>>()?;
    check_permutation(&lead_order)?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); NUM_LEADS];
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != NUM_LEADS {
            return Err(EcgDataError::BadCsv(format!(
                "row {} has {} cells, expected {}",
                lineno + 2,
                cells.len(),
                NUM_LEADS
            )));
        }
        for (col, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| {
                    EcgDataError::BadCsv(format!("row {}: bad number {cell:?}", lineno + 2))
                })?
            };
            columns[col].push(value);
        }
    }

    let signal = LeadMatrix::from_rows(columns)?;
    let mut record = EcgRecord::new(subject_id, record_id, fs, signal)?;
    record.lead_order = lead_order;
    record.canonicalize()?;
    Ok(record)
}
