// Generates the synthetic CDS and yield histories in `fixtures/`.
//
// Each series is an SRMR path that switches regime on fixed dates, with
// per-regime targets taken from published regime statistics.
//
//     cargo run --example synthetic_history -- fixtures

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;
use scoco::ingest::{HistoricalSeries, RegimeBreakpoints, Segment};
use scoco::rng::{stream, Factor};
use scoco::srmr::{step, MomentTargets, RegimeCalibration, SrmrState};

pub struct Fixture {
    pub name: &'static str,
    pub series: HistoricalSeries,
    pub breakpoints: RegimeBreakpoints,
}

struct Regime {
    start: &'static str,
    label: &'static str,
    mean: f64,
    stdev: f64,
    /// daily percent
    return_stdev: f64,
}

const fn r(start: &'static str, label: &'static str, mean: f64, stdev: f64, return_stdev: f64) -> Regime {
    Regime { start, label, mean, stdev, return_stdev }
}

const SMOOTHNESS_RATIO: f64 = 0.5;

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

fn weekdays(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    from.iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

fn history(name: &'static str, regimes: &[Regime], end: &str, shift: f64, decimals: i32, seed: u64) -> Fixture {
    let dates = weekdays(date(regimes[0].start), date(end));
    let cals: Vec<RegimeCalibration> = regimes
        .iter()
        .map(|g| {
            let vr = (g.return_stdev / 100.0).powi(2);
            RegimeCalibration::new(MomentTargets {
                s_hat: g.mean + shift,
                sigma_s_hat: g.stdev,
                sigma_r_hat: g.return_stdev / 100.0,
                s2_hat: SMOOTHNESS_RATIO * vr,
                s0: g.mean + shift,
            })
            .unwrap()
        })
        .collect();
    let starts: Vec<NaiveDate> = regimes.iter().map(|g| date(g.start)).collect();
    let mut rng = stream(seed, 0, 0, Factor::Generic);
    let mut k = 0;
    let mut state = SrmrState::start(cals[0].targets.s0);
    let mut params = cals[0].params;
    let scale = 10f64.powi(decimals);
    let mut values = Vec::with_capacity(dates.len());
    for (i, d) in dates.iter().enumerate() {
        if k + 1 < starts.len() && *d >= starts[k + 1] {
            k += 1;
            state = state.rebased();
            params = cals[k].params_from(state.level);
        }
        if i > 0 {
            state = step(&state, &params, 1.0, rng.sample(StandardNormal));
        }
        values.push(((state.level - shift) * scale).round() / scale);
    }
    let segments = regimes
        .iter()
        .map(|g| Segment { start: date(g.start), label: g.label.to_string() })
        .collect();
    Fixture {
        name,
        series: HistoricalSeries::new(name, dates, values).unwrap(),
        breakpoints: RegimeBreakpoints::new(segments).unwrap(),
    }
}

pub fn run_example() -> Vec<Fixture> {
    let greece = [
        r("2007-12-14", "tranquil", 146.09, 103.90, 4.45),
        r("2010-04-21", "turbulent", 980.27, 363.36, 5.20),
        r("2011-07-07", "crisis", 5770.43, 2917.45, 8.05),
    ];
    let italy = [
        r("2007-12-14", "2007-2010", 79.71, 45.48, 5.01),
        r("2010-03-30", "2010-2011", 137.69, 28.54, 6.51),
        r("2011-07-08", "2011-2012", 361.94, 68.99, 4.94),
        r("2012-10-03", "2012-2013", 203.73, 26.66, 2.91),
        r("2013-12-30", "2013-2016", 97.31, 15.82, 3.67),
    ];
    let germany = [
        r("2007-12-21", "2007-2009", 22.22, 23.54, 5.48),
        r("2009-03-16", "2009-2011", 31.69, 8.85, 5.48),
        r("2011-06-21", "2011-2012", 45.60, 13.98, 6.24),
        r("2012-09-13", "2012-2014", 14.64, 3.73, 3.95),
        r("2014-12-03", "2014-2016", 8.25, 1.93, 6.31),
    ];
    // 1-month AAA yield in percent; return statistics refer to the yield plus one point
    let eaaa = [
        r("2007-02-01", "pre-2009", 3.9, 0.40, 0.9),
        r("2009-01-02", "post-2009", 0.75, 0.45, 1.2),
    ];
    vec![
        history("greece_cds", &greece, "2012-02-22", 0.0, 2, 101),
        history("italy_cds", &italy, "2016-03-18", 0.0, 2, 102),
        history("germany_cds", &germany, "2016-03-18", 0.0, 2, 103),
        history("eaaa_1m", &eaaa, "2016-03-18", 1.0, 3, 104),
    ]
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    std::fs::create_dir_all(&dir).unwrap();
    for f in run_example() {
        let path = format!("{dir}/{}.csv", f.name);
        f.series.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
        let bp = format!("{dir}/{}_regimes.csv", f.name);
        f.breakpoints.write_csv(std::fs::File::create(&bp).unwrap()).unwrap();
        println!("{path}: {} observations, {} regimes", f.series.len(), f.breakpoints.segments.len());
    }
}
