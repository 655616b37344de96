//! Historical hourly price data: ingestion, trimmed nominal/deviation
//! statistics, rolling train/test windows and a synthetic generator.
//!
//! Price files are comma-separated text with header
//! `date,hour,zone,price_eur_mwh` (ISO-8601 dates, hours 1..24, prices with
//! a dot decimal separator). Writer and reader round-trip bit-exactly.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const HOURS_PER_DAY: usize = 24;

/// One observed market price.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecord {
    pub date: NaiveDate,
    /// Trading hour, 1..=24.
    pub hour: u8,
    pub zone: String,
    /// EUR/MWh; non-negative (the market floor is zero).
    pub price: f64,
}

/// An ordered collection of hourly prices, possibly spanning several zones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceSeries {
    records: Vec<PriceRecord>,
}

#[derive(Debug, Error)]
pub enum PriceDataError {
    #[error("duplicate record for {zone} {date} hour {hour}")]
    Duplicate {
        date: NaiveDate,
        hour: u8,
        zone: String,
    },
    #[error("hour {0} out of range 1..=24")]
    HourOutOfRange(u8),
    #[error("negative price {price} for {zone} {date} hour {hour}")]
    NegativePrice {
        date: NaiveDate,
        hour: u8,
        zone: String,
        price: f64,
    },
}

impl PriceSeries {
    /// Builds a series from records, enforcing hour bounds, the zero price
    /// floor and at most one record per (date, hour, zone). Records are
    /// sorted by (zone, date, hour).
    pub fn from_records(mut records: Vec<PriceRecord>) -> Result<Self, PriceDataError> {
        for r in &records {
            if !(1..=24).contains(&r.hour) {
                return Err(PriceDataError::HourOutOfRange(r.hour));
            }
            if r.price < 0.0 {
                return Err(PriceDataError::NegativePrice {
                    date: r.date,
                    hour: r.hour,
                    zone: r.zone.clone(),
                    price: r.price,
                });
            }
        }
        records.sort_by(|a, b| (&a.zone, a.date, a.hour).cmp(&(&b.zone, b.date, b.hour)));
        for pair in records.windows(2) {
            if pair[0].zone == pair[1].zone
                && pair[0].date == pair[1].date
                && pair[0].hour == pair[1].hour
            {
                return Err(PriceDataError::Duplicate {
                    date: pair[0].date,
                    hour: pair[0].hour,
                    zone: pair[0].zone.clone(),
                });
            }
        }
        Ok(PriceSeries { records })
    }

    pub fn records(&self) -> &[PriceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct zone identifiers, sorted.
    pub fn zones(&self) -> Vec<String> {
        let mut zones: Vec<String> = self.records.iter().map(|r| r.zone.clone()).collect();
        zones.sort();
        zones.dedup();
        zones
    }

    /// Sub-series containing only the given zone.
    pub fn only_zone(&self, zone: &str) -> PriceSeries {
        PriceSeries {
            records: self
                .records
                .iter()
                .filter(|r| r.zone == zone)
                .cloned()
                .collect(),
        }
    }

    /// Price for a (date, hour) in the given zone, if present.
    pub fn price_at(&self, zone: &str, date: NaiveDate, hour: u8) -> Option<f64> {
        self.records
            .binary_search_by(|r| (r.zone.as_str(), r.date, r.hour).cmp(&(zone, date, hour)))
            .ok()
            .map(|i| self.records[i].price)
    }

    /// 24 realized prices of one day in one zone, in hour order.
    pub fn day_prices(&self, zone: &str, date: NaiveDate) -> Option<Vec<f64>> {
        let mut day = Vec::with_capacity(HOURS_PER_DAY);
        for hour in 1..=HOURS_PER_DAY as u8 {
            day.push(self.price_at(zone, date, hour)?);
        }
        Some(day)
    }

    /// Serializes to the documented CSV format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,hour,zone,price_eur_mwh")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.date, r.hour, r.zone, r.price)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

#[derive(Debug, Error)]
pub enum PriceFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: missing or malformed header (expected `date,hour,zone,price_eur_mwh`)")]
    BadHeader { path: String },
    #[error("{path}:{line}: {message}")]
    BadRow {
        path: String,
        line: usize,
        message: String,
    },
}

/// Parses the documented CSV price format, rejecting malformed rows,
/// duplicates and negative prices with line-anchored errors.
pub fn parse_prices<R: BufRead>(reader: R, origin: &str) -> Result<PriceSeries, PriceFileError> {
    let bad_row = |line: usize, message: String| PriceFileError::BadRow {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == "date,hour,zone,price_eur_mwh" => {}
        _ => {
            return Err(PriceFileError::BadHeader {
                path: origin.to_string(),
            })
        }
    }
    let mut records = Vec::new();
    let mut seen: HashSet<(NaiveDate, u8, String)> = HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| bad_row(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad_row(
                line_no,
                format!("expected 4 comma-separated fields, found {}", fields.len()),
            ));
        }
        let date = fields[0]
            .parse::<NaiveDate>()
            .map_err(|e| bad_row(line_no, format!("bad date `{}`: {e}", fields[0])))?;
        let hour = fields[1]
            .parse::<u8>()
            .map_err(|e| bad_row(line_no, format!("bad hour `{}`: {e}", fields[1])))?;
        if !(1..=24).contains(&hour) {
            return Err(bad_row(line_no, format!("hour {hour} out of range 1..=24")));
        }
        let zone = fields[2].to_string();
        let price = fields[3]
            .parse::<f64>()
            .map_err(|e| bad_row(line_no, format!("bad price `{}`: {e}", fields[3])))?;
        if !price.is_finite() || price < 0.0 {
            return Err(bad_row(
                line_no,
                format!("price {price} must be finite and >= 0"),
            ));
        }
        if !seen.insert((date, hour, zone.clone())) {
            return Err(bad_row(
                line_no,
                format!("duplicate record for {zone} {date} hour {hour}"),
            ));
        }
        records.push(PriceRecord {
            date,
            hour,
            zone,
            price,
        });
    }
    PriceSeries::from_records(records).map_err(|e| PriceFileError::BadRow {
        path: origin.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

/// Reads a price file in the documented CSV format.
pub fn read_prices(path: &Path) -> Result<PriceSeries, PriceFileError> {
    let file = std::fs::File::open(path).map_err(|source| PriceFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_prices(BufReader::new(file), &path.display().to_string())
}

/// Writes a price file in the documented CSV format.
pub fn write_prices(series: &PriceSeries, path: &Path) -> Result<(), PriceFileError> {
    let mut file = std::fs::File::create(path).map_err(|source| PriceFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    series
        .write_csv(&mut file)
        .map_err(|source| PriceFileError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Per-hour nominal price, trimmed worst observation and deviation derived
/// from historical observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceStats {
    /// Nominal price per hour: the mean of all observations (EUR/MWh).
    pub nominal: Vec<f64>,
    /// The (J+1)-th smallest observation per hour (EUR/MWh).
    pub trimmed_worst: Vec<f64>,
    /// Worst downward deviation per hour, clamped at zero (EUR/MWh).
    pub deviation: Vec<f64>,
    /// Observation count per hour (I).
    pub observations: usize,
    /// Number of smallest observations excluded (J).
    pub trimmed: usize,
    /// 1-based hours where the raw deviation was negative and clamped to 0.
    pub clamped_hours: Vec<usize>,
}

impl PriceStats {
    /// Percentage of observations excluded, as used in backtest reports.
    pub fn exclusion_percent(&self) -> f64 {
        100.0 * self.trimmed as f64 / self.observations as f64
    }
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("hour {hour}: {have} observations, need at least {need}")]
    InsufficientObservations {
        hour: usize,
        have: usize,
        need: usize,
    },
    #[error("hour {hour}: {have} observations but other hours have {expected}")]
    RaggedObservations {
        hour: usize,
        have: usize,
        expected: usize,
    },
    #[error("no observation for {date} hour {hour}")]
    MissingObservation { date: NaiveDate, hour: u8 },
    #[error("statistics need a single-zone series; found zones {0:?}")]
    MultipleZones(Vec<String>),
    #[error("no observations")]
    Empty,
}

/// Trimmed statistics from explicit per-hour observation lists.
///
/// Every hour must carry the same number `I` of observations and
/// `0 <= J < I`. The nominal value is the mean over all `I` observations;
/// the deviation is `max(0, nominal - (J+1)-th smallest)`.
pub fn trimmed_stats_from_observations(
    observations: &[Vec<f64>],
    trim: usize,
) -> Result<PriceStats, StatsError> {
    let count = observations.first().ok_or(StatsError::Empty)?.len();
    for (i, obs) in observations.iter().enumerate() {
        if obs.len() != count {
            return Err(StatsError::RaggedObservations {
                hour: i + 1,
                have: obs.len(),
                expected: count,
            });
        }
    }
    if count < trim + 1 {
        return Err(StatsError::InsufficientObservations {
            hour: 1,
            have: count,
            need: trim + 1,
        });
    }
    let mut nominal = Vec::with_capacity(observations.len());
    let mut trimmed_worst = Vec::with_capacity(observations.len());
    let mut deviation = Vec::with_capacity(observations.len());
    let mut clamped_hours = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        let mean = obs.iter().sum::<f64>() / count as f64;
        let mut sorted = obs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let worst = sorted[trim];
        let raw = mean - worst;
        if raw < 0.0 {
            clamped_hours.push(i + 1);
        }
        nominal.push(mean);
        trimmed_worst.push(worst);
        deviation.push(raw.max(0.0));
    }
    Ok(PriceStats {
        nominal,
        trimmed_worst,
        deviation,
        observations: count,
        trimmed: trim,
        clamped_hours,
    })
}

/// Trimmed statistics over the training dates of a single-zone series.
pub fn trimmed_stats(
    series: &PriceSeries,
    training_dates: &[NaiveDate],
    trim: usize,
) -> Result<PriceStats, StatsError> {
    let zones = series.zones();
    if zones.len() != 1 {
        return Err(StatsError::MultipleZones(zones));
    }
    let zone = &zones[0];
    let mut observations = vec![Vec::with_capacity(training_dates.len()); HOURS_PER_DAY];
    for &date in training_dates {
        for hour in 1..=HOURS_PER_DAY as u8 {
            let price = series
                .price_at(zone, date, hour)
                .ok_or(StatsError::MissingObservation { date, hour })?;
            observations[hour as usize - 1].push(price);
        }
    }
    trimmed_stats_from_observations(&observations, trim)
}

/// One rolling train/test window: four training weeks of weekdays followed
/// by one evaluation week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktestWindow {
    /// 1-based window index.
    pub index: usize,
    /// 20 weekdays: Monday..Friday of four consecutive ISO weeks.
    pub training_dates: Vec<NaiveDate>,
    /// 5 weekdays of the week immediately following the training weeks.
    pub evaluation_dates: Vec<NaiveDate>,
}

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("ISO week {week} does not exist in {year}")]
    BadWeek { year: i32, week: u32 },
    #[error("series lacks data for zone {zone} on {date} hour {hour} (window {window})")]
    MissingData {
        zone: String,
        date: NaiveDate,
        hour: u8,
        window: usize,
    },
    #[error("series has no zones")]
    EmptySeries,
}

pub const ROLLING_WINDOW_COUNT: usize = 24;
pub const TRAINING_WEEKS: u32 = 4;

fn weekdays_of_iso_week(year: i32, week: u32) -> Result<Vec<NaiveDate>, WindowError> {
    [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
    ]
    .iter()
    .map(|&wd| {
        NaiveDate::from_isoywd_opt(year, week, wd).ok_or(WindowError::BadWeek { year, week })
    })
    .collect()
}

/// Builds the 24 rolling windows of the evaluation protocol over the ISO
/// weeks of `year`: window `w` trains on the weekdays of weeks `w..w+3`
/// and evaluates on the weekdays of week `w+4`. Saturdays and Sundays are
/// excluded throughout.
///
/// Every zone of the series must cover all 24 hours of every involved
/// date. Note that ISO week 1 can start in the previous December; the
/// series must include those days too.
pub fn rolling_windows(
    series: &PriceSeries,
    year: i32,
) -> Result<Vec<BacktestWindow>, WindowError> {
    let zones = series.zones();
    if zones.is_empty() {
        return Err(WindowError::EmptySeries);
    }
    let mut windows = Vec::with_capacity(ROLLING_WINDOW_COUNT);
    for w in 1..=ROLLING_WINDOW_COUNT {
        let mut training_dates = Vec::with_capacity(20);
        for week in w as u32..w as u32 + TRAINING_WEEKS {
            training_dates.extend(weekdays_of_iso_week(year, week)?);
        }
        let evaluation_dates = weekdays_of_iso_week(year, w as u32 + TRAINING_WEEKS)?;
        for zone in &zones {
            for &date in training_dates.iter().chain(&evaluation_dates) {
                for hour in 1..=HOURS_PER_DAY as u8 {
                    if series.price_at(zone, date, hour).is_none() {
                        return Err(WindowError::MissingData {
                            zone: zone.clone(),
                            date,
                            hour,
                            window: w,
                        });
                    }
                }
            }
        }
        windows.push(BacktestWindow {
            index: w,
            training_dates,
            evaluation_dates,
        });
    }
    Ok(windows)
}

/// Shape and noise parameters of the synthetic price generator.
///
/// Prices follow a deterministic daily double-peak shape (modulated by a
/// seasonal sinusoid and a weekend factor) multiplied by mean-one
/// lognormal noise that is AR(1)-correlated within a day. A small share of
/// days are "trough" days whose midday hours collapse to a fraction of the
/// shape, pushing prices below typical marginal costs.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProfile {
    pub base_level: f64,
    pub morning_peak: f64,
    pub morning_hour: f64,
    pub morning_width: f64,
    pub evening_peak: f64,
    pub evening_hour: f64,
    pub evening_width: f64,
    /// Relative amplitude of the seasonal modulation (winter high).
    pub seasonal_amplitude: f64,
    /// Multiplier applied on Saturdays and Sundays.
    pub weekend_factor: f64,
    /// Stationary standard deviation of the log-noise.
    pub noise_sigma: f64,
    /// Hour-to-hour AR(1) coefficient of the log-noise.
    pub noise_ar: f64,
    /// Probability that a day is a low-price trough day.
    pub trough_probability: f64,
    /// Shape multiplier applied in trough hours of trough days.
    pub trough_factor: f64,
    /// Inclusive 1-based hour range affected by troughs.
    pub trough_hours: (u8, u8),
    /// Relative price offset between consecutive zones.
    pub zone_spread: f64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        SyntheticProfile {
            base_level: 45.0,
            morning_peak: 18.0,
            morning_hour: 9.0,
            morning_width: 2.0,
            evening_peak: 25.0,
            evening_hour: 20.0,
            evening_width: 2.5,
            seasonal_amplitude: 0.10,
            weekend_factor: 0.85,
            noise_sigma: 0.15,
            noise_ar: 0.7,
            trough_probability: 0.03,
            trough_factor: 0.08,
            trough_hours: (10, 17),
            zone_spread: 0.03,
        }
    }
}

impl SyntheticProfile {
    /// Deterministic double-peak base profile (EUR/MWh) for hour 1..=24.
    pub fn base_profile(&self, hour: u8) -> f64 {
        let h = f64::from(hour);
        let bump = |peak: f64, center: f64, width: f64| {
            peak * (-(h - center) * (h - center) / (2.0 * width * width)).exp()
        };
        self.base_level
            + bump(self.morning_peak, self.morning_hour, self.morning_width)
            + bump(self.evening_peak, self.evening_hour, self.evening_width)
    }

    /// Seasonal multiplier for a date (winter high, summer low).
    pub fn seasonal_factor(&self, date: NaiveDate) -> f64 {
        let doy = date.ordinal() as f64;
        1.0 + self.seasonal_amplitude * (2.0 * std::f64::consts::PI * (doy - 15.0) / 365.0).cos()
    }

    pub fn weekend_multiplier(&self, date: NaiveDate) -> f64 {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => self.weekend_factor,
            _ => 1.0,
        }
    }

    pub fn zone_multiplier(&self, zone_index: usize) -> f64 {
        1.0 + self.zone_spread * zone_index as f64
    }

    fn in_trough(&self, hour: u8) -> bool {
        (self.trough_hours.0..=self.trough_hours.1).contains(&hour)
    }

    /// Noiseless shape for a (date, hour, zone), before trough damping.
    pub fn shape(&self, date: NaiveDate, hour: u8, zone_index: usize) -> f64 {
        self.base_profile(hour)
            * self.seasonal_factor(date)
            * self.weekend_multiplier(date)
            * self.zone_multiplier(zone_index)
    }
}

fn zone_name(index: usize) -> String {
    format!("Z{:02}", index + 1)
}

/// Generates a deterministic synthetic price year.
///
/// Covers every day of `year` with 24 hourly prices per zone. The same
/// seed always yields a bit-identical series; distinct zones use distinct
/// RNG streams.
pub fn synthetic_series(
    seed: u64,
    year: i32,
    zones: usize,
    profile: &SyntheticProfile,
) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    let end = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year");
    let sigma = profile.noise_sigma;
    let phi = profile.noise_ar.clamp(-0.999, 0.999);
    let innovation_sigma = sigma * (1.0 - phi * phi).sqrt();
    let mut records = Vec::new();
    for zone_index in 0..zones {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(zone_index as u64);
        let zone = zone_name(zone_index);
        let mut date = start;
        while date <= end {
            let trough_day = rng.gen_bool(profile.trough_probability);
            let mut eps = 0.0;
            for hour in 1..=HOURS_PER_DAY as u8 {
                let normal: f64 = rng.sample(StandardNormal);
                eps = if hour == 1 {
                    sigma * normal
                } else {
                    phi * eps + innovation_sigma * normal
                };
                let mut shape = profile.shape(date, hour, zone_index);
                if trough_day && profile.in_trough(hour) {
                    shape *= profile.trough_factor;
                }
                // Mean-one lognormal noise keeps E[price] equal to the shape.
                let price = shape * (eps - 0.5 * sigma * sigma).exp();
                records.push(PriceRecord {
                    date,
                    hour,
                    zone: zone.clone(),
                    price: price.max(0.0),
                });
            }
            date = date.succ_opt().expect("date within range");
        }
    }
    PriceSeries::from_records(records).expect("generator produces unique non-negative records")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const YEAR: i32 = 2018; // starts on a Monday, non-leap: ISO week 1 = Jan 1..7

    #[test]
    fn trimmed_stats_examples() {
        let obs = vec![vec![40.0, 42.0, 50.0, 58.0, 60.0]];
        let s = trimmed_stats_from_observations(&obs, 2).unwrap();
        assert_eq!(
            (s.nominal[0], s.trimmed_worst[0], s.deviation[0]),
            (50.0, 50.0, 0.0)
        );
        let s = trimmed_stats_from_observations(&obs, 0).unwrap();
        assert_eq!(
            (s.nominal[0], s.trimmed_worst[0], s.deviation[0]),
            (50.0, 40.0, 10.0)
        );
    }

    #[test]
    fn exclusion_percentages_map_to_trim_counts() {
        // 20 observations: excluding 0/10/20 percent trims 0/2/4 of them.
        for (percent, expected_j) in [(0.0f64, 0usize), (10.0, 2), (20.0, 4)] {
            let j = (percent / 100.0 * 20.0).round() as usize;
            assert_eq!(j, expected_j);
            let obs = vec![(1..=20).map(f64::from).collect::<Vec<_>>()];
            let s = trimmed_stats_from_observations(&obs, j).unwrap();
            assert_eq!(s.exclusion_percent(), percent);
            assert_eq!(s.trimmed_worst[0], (j + 1) as f64);
        }
    }

    #[test]
    fn trimmed_stats_rejects_insufficient_observations() {
        let obs = vec![vec![40.0, 42.0]];
        assert!(matches!(
            trimmed_stats_from_observations(&obs, 2),
            Err(StatsError::InsufficientObservations { .. })
        ));
    }

    #[test]
    fn negative_deviation_is_clamped_and_flagged() {
        // With J = 3 the 4th smallest (58) exceeds the mean (50).
        let obs = vec![vec![40.0, 42.0, 50.0, 58.0, 60.0]];
        let s = trimmed_stats_from_observations(&obs, 3).unwrap();
        assert_eq!(s.deviation[0], 0.0);
        assert_eq!(s.clamped_hours, vec![1]);
    }

    proptest! {
        #[test]
        fn trimmed_stats_is_permutation_invariant(
            mut obs in proptest::collection::vec(0.0..200.0f64, 8),
            j in 0usize..6,
        ) {
            let s1 = trimmed_stats_from_observations(&[obs.clone()], j).unwrap();
            obs.reverse();
            obs.swap(1, 5);
            let s2 = trimmed_stats_from_observations(&[obs], j).unwrap();
            prop_assert!((s1.nominal[0] - s2.nominal[0]).abs() < 1e-9);
            prop_assert_eq!(s1.trimmed_worst[0], s2.trimmed_worst[0]);
            prop_assert!((s1.deviation[0] - s2.deviation[0]).abs() < 1e-9);
        }

        #[test]
        fn deviation_never_increases_with_trim(
            obs in proptest::collection::vec(0.0..200.0f64, 10),
        ) {
            let mut last = f64::INFINITY;
            for j in 0..obs.len() {
                let s = trimmed_stats_from_observations(&[obs.clone()], j).unwrap();
                prop_assert!(s.deviation[0] >= 0.0);
                prop_assert!(s.deviation[0] <= last + 1e-12);
                last = s.deviation[0];
            }
        }

        #[test]
        fn csv_round_trip_is_bit_exact(
            prices in proptest::collection::vec(0.0..500.0f64, 1..40),
        ) {
            let records: Vec<PriceRecord> = prices
                .iter()
                .enumerate()
                .map(|(i, &price)| PriceRecord {
                    date: NaiveDate::from_ymd_opt(YEAR, 3, 1 + (i / 24) as u32).unwrap(),
                    hour: (i % 24) as u8 + 1,
                    zone: "Z01".to_string(),
                    price,
                })
                .collect();
            let series = PriceSeries::from_records(records).unwrap();
            let csv = series.to_csv_string();
            let parsed = parse_prices(csv.as_bytes(), "mem").unwrap();
            prop_assert_eq!(&parsed, &series);
            prop_assert_eq!(parsed.to_csv_string(), csv);
        }
    }

    #[test]
    fn parse_rejects_malformed_rows_with_line_numbers() {
        let two_rows =
            "date,hour,zone,price_eur_mwh\n2018-01-01,1,Z01,40.5\n2018-01-01,2,Z01,41.0\n";
        assert_eq!(parse_prices(two_rows.as_bytes(), "mem").unwrap().len(), 2);

        let bad_hour = "date,hour,zone,price_eur_mwh\n2018-01-01,25,Z01,40.5\n";
        let err = parse_prices(bad_hour.as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("mem:2"), "{err}");
        assert!(err.to_string().contains("25"), "{err}");

        let dup = "date,hour,zone,price_eur_mwh\n2018-01-01,1,Z01,40.5\n2018-01-01,1,Z01,39.0\n";
        let err = parse_prices(dup.as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let negative = "date,hour,zone,price_eur_mwh\n2018-01-01,1,Z01,-4.0\n";
        let err = parse_prices(negative.as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains(">= 0"), "{err}");

        let err = parse_prices("hello\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, PriceFileError::BadHeader { .. }));
    }

    #[test]
    fn synthetic_year_has_8760_records_and_is_deterministic() {
        let profile = SyntheticProfile::default();
        let a = synthetic_series(42, YEAR, 1, &profile);
        assert_eq!(a.len(), 365 * 24);
        let b = synthetic_series(42, YEAR, 1, &profile);
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        let c = synthetic_series(43, YEAR, 1, &profile);
        assert_ne!(a.to_csv_string(), c.to_csv_string());
        assert!(a.records().iter().all(|r| r.price >= 0.0));
    }

    #[test]
    fn synthetic_zones_use_distinct_streams() {
        let profile = SyntheticProfile::default();
        let two = synthetic_series(7, YEAR, 2, &profile);
        assert_eq!(two.zones(), vec!["Z01".to_string(), "Z02".to_string()]);
        assert_eq!(two.len(), 2 * 365 * 24);
        let date = NaiveDate::from_ymd_opt(YEAR, 6, 5).unwrap();
        let d1 = two.day_prices("Z01", date).unwrap();
        let d2 = two.day_prices("Z02", date).unwrap();
        assert_ne!(d1, d2);
    }

    /// Independent oracle for the generator: the analytic per-hour mean and
    /// standard deviation implied by the profile, derived from the
    /// lognormal-noise construction (mean-one noise, exp(sigma^2) second
    /// moment) and the trough Bernoulli mixing.
    fn analytic_hourly_moments(profile: &SyntheticProfile, year: i32, hour: u8) -> (f64, f64) {
        let start = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(year, 12, 31).unwrap();
        let p = profile.trough_probability;
        let tf = profile.trough_factor;
        let (trough_m1, trough_m2) = if profile.in_trough(hour) {
            (1.0 - p + p * tf, 1.0 - p + p * tf * tf)
        } else {
            (1.0, 1.0)
        };
        let noise_m2 = (profile.noise_sigma * profile.noise_sigma).exp();
        let mut days = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let mut date = start;
        while date <= end {
            let shape = profile.shape(date, hour, 0);
            m1 += shape * trough_m1;
            m2 += shape * shape * trough_m2 * noise_m2;
            days += 1.0;
            date = date.succ_opt().unwrap();
        }
        let mean = m1 / days;
        // Variance of a single day's price around the yearly hourly mean,
        // including the deterministic day-to-day shape variation.
        let var = m2 / days - mean * mean;
        (mean, var.max(0.0).sqrt())
    }

    #[test]
    fn synthetic_hourly_means_follow_the_configured_profile() {
        let profile = SyntheticProfile::default();
        let series = synthetic_series(42, YEAR, 1, &profile);
        let n_days = 365.0;
        for hour in 1..=24u8 {
            let (expected, sd) = analytic_hourly_moments(&profile, YEAR, hour);
            let sum: f64 = series
                .records()
                .iter()
                .filter(|r| r.hour == hour)
                .map(|r| r.price)
                .sum();
            let empirical = sum / n_days;
            let tol = 3.0 * sd / n_days.sqrt();
            assert!(
                (empirical - expected).abs() <= tol,
                "hour {hour}: empirical {empirical:.3} vs expected {expected:.3} (tol {tol:.3})"
            );
        }
    }

    #[test]
    fn windows_follow_the_rolling_protocol() {
        let series = synthetic_series(1, YEAR, 1, &SyntheticProfile::default());
        let windows = rolling_windows(&series, YEAR).unwrap();
        assert_eq!(windows.len(), 24);
        for w in &windows {
            assert_eq!(w.training_dates.len(), 20);
            assert_eq!(w.evaluation_dates.len(), 5);
            for d in w.training_dates.iter().chain(&w.evaluation_dates) {
                assert!(!matches!(d.weekday(), Weekday::Sat | Weekday::Sun));
            }
            // Evaluation week immediately follows the training weeks.
            let last_training = *w.training_dates.last().unwrap();
            let first_eval = w.evaluation_dates[0];
            assert_eq!(first_eval, last_training + chrono::Duration::days(3));
            assert!(w
                .training_dates
                .iter()
                .all(|d| !w.evaluation_dates.contains(d)));
        }
        // Evaluation weeks cover ISO weeks 5..=28 with no overlap.
        let eval_weeks: Vec<u32> = windows
            .iter()
            .map(|w| w.evaluation_dates[0].iso_week().week())
            .collect();
        assert_eq!(eval_weeks, (5..=28).collect::<Vec<_>>());
    }

    #[test]
    fn windows_demand_full_coverage() {
        let series = synthetic_series(1, YEAR, 1, &SyntheticProfile::default());
        let truncated = PriceSeries::from_records(
            series
                .records()
                .iter()
                .filter(|r| r.date < NaiveDate::from_ymd_opt(YEAR, 3, 1).unwrap())
                .cloned()
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            rolling_windows(&truncated, YEAR),
            Err(WindowError::MissingData { .. })
        ));
    }

    #[test]
    fn trimmed_stats_over_training_window() {
        let series = synthetic_series(11, YEAR, 1, &SyntheticProfile::default());
        let windows = rolling_windows(&series, YEAR).unwrap();
        let stats = trimmed_stats(&series, &windows[0].training_dates, 2).unwrap();
        assert_eq!(stats.observations, 20);
        assert_eq!(stats.trimmed, 2);
        assert_eq!(stats.nominal.len(), 24);
        assert!(stats.deviation.iter().all(|&d| d >= 0.0));
    }
}
