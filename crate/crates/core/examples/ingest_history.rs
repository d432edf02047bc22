// Per-regime statistics of a daily CDS history split at given breakpoints.

use std::path::PathBuf;

use scoco::ingest::{ingest, write_regime_table, HistoricalSeries, IngestedRegime, RegimeBreakpoints};

pub fn run_example() -> Vec<IngestedRegime> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let series = HistoricalSeries::read_csv(dir.join("greece_cds.csv"), "Greece").unwrap();
    let breaks = RegimeBreakpoints::read_csv(dir.join("greece_cds_regimes.csv")).unwrap();
    let rows = ingest(&series, &breaks).unwrap();
    write_regime_table(&rows, std::io::stdout()).unwrap();
    rows
}

fn main() {
    run_example();
}
