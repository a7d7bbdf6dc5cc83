//! Exponential growth rates fitted by least squares on `log2(value)` against
//! calendar year, reported as a multiplicative factor per two years.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware_file::{csv_error, line_at};
use crate::scalar::Real;

const BUNDLED_TRENDS: &str = include_str!("../data/trends.csv");

/// Observations of a single metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSeries<T> {
    metric_name: String,
    points: Vec<(T, T)>,
}

impl<T: Real> TrendSeries<T> {
    /// `points` are `(year, value)` pairs; every value must be positive.
    pub fn new(metric_name: impl Into<String>, points: Vec<(T, T)>) -> Result<Self> {
        let metric_name = metric_name.into();
        for &(year, value) in &points {
            if !year.is_finite() || !value.is_finite() || value <= T::zero() {
                return Err(Error::Validation(format!(
                    "{metric_name}: point ({year}, {value}) needs a finite year and positive value"
                )));
            }
        }
        Ok(Self { metric_name, points })
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit<T> {
    /// Growth factor per two years, `2^(2 * slope_log2_per_year)`.
    pub rate_per_2yr: T,
    pub slope_log2_per_year: T,
    /// `log2(value)` predicted at year 0.
    pub intercept_log2: T,
    /// Coefficient of determination in log space.
    pub r_squared: T,
}

pub fn fit_rate<T: Real>(series: &TrendSeries<T>) -> Result<TrendFit<T>> {
    let degenerate = || Error::DegenerateFit {
        metric: series.metric_name.clone(),
    };
    let points = &series.points;
    let first_year = points.first().ok_or_else(degenerate)?.0;
    if points.iter().all(|&(year, _)| year == first_year) {
        return Err(degenerate());
    }

    let n = T::from_count(points.len() as u64);
    let logs: Vec<(T, T)> = points.iter().map(|&(x, v)| (x, v.log2())).collect();
    let mean_x = logs.iter().fold(T::zero(), |acc, &(x, _)| acc + x) / n;
    let mean_y = logs.iter().fold(T::zero(), |acc, &(_, y)| acc + y) / n;

    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in &logs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_res = logs.iter().fold(T::zero(), |acc, &(x, y)| {
        let r = (y - mean_y) - slope * (x - mean_x);
        acc + r * r
    });
    // A flat series is fitted exactly by a zero slope.
    let r_squared = if syy <= T::epsilon() * T::epsilon() {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };

    Ok(TrendFit {
        rate_per_2yr: (slope * T::lit(2.0)).exp2(),
        slope_log2_per_year: slope,
        intercept_log2: intercept,
        r_squared,
    })
}

/// Total growth implied by `fit` over `years`.
pub fn factor_over<T: Real>(fit: &TrendFit<T>, years: T) -> T {
    fit.rate_per_2yr.powf(years / T::lit(2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlineRate<T> {
    pub metric_name: String,
    pub fit: Result<TrendFit<T>>,
}

/// Fits every series independently; a degenerate series does not affect the
/// others.
pub fn headline_rates<T: Real>(database: &[TrendSeries<T>]) -> Result<Vec<HeadlineRate<T>>> {
    if database.is_empty() {
        return Err(Error::Validation("no trend series to fit".into()));
    }
    Ok(database
        .iter()
        .map(|series| HeadlineRate {
            metric_name: series.metric_name.clone(),
            fit: fit_rate(series),
        })
        .collect())
}

/// One row of a trend CSV (`metric,year,value[,tag]`).
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrendRecord<T> {
    pub metric: String,
    pub year: T,
    pub value: T,
    #[serde(default)]
    pub tag: Option<String>,
}

/// Row selection applied before grouping records into series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesFilter<T> {
    pub metric: Option<String>,
    pub from_year: Option<T>,
    pub to_year: Option<T>,
    pub exclude_tags: Vec<String>,
}

impl<T: Real> SeriesFilter<T> {
    pub fn all() -> Self {
        Self {
            metric: None,
            from_year: None,
            to_year: None,
            exclude_tags: Vec::new(),
        }
    }

    pub fn metric(mut self, name: impl Into<String>) -> Self {
        self.metric = Some(name.into());
        self
    }

    pub fn years(mut self, from: Option<T>, to: Option<T>) -> Self {
        self.from_year = from;
        self.to_year = to;
        self
    }

    pub fn exclude_tag(mut self, tag: impl Into<String>) -> Self {
        self.exclude_tags.push(tag.into());
        self
    }

    fn keeps(&self, record: &TrendRecord<T>) -> bool {
        if let Some(metric) = &self.metric {
            if &record.metric != metric {
                return false;
            }
        }
        if self.from_year.is_some_and(|from| record.year < from) {
            return false;
        }
        if self.to_year.is_some_and(|to| record.year > to) {
            return false;
        }
        match &record.tag {
            Some(tag) => !self.exclude_tags.iter().any(|t| t == tag),
            None => true,
        }
    }
}

/// Parsed trend CSV, rows kept in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable<T> {
    records: Vec<TrendRecord<T>>,
}

impl<T: Real + DeserializeOwned> TrendTable<T> {
    /// Lines starting with `#` are comments. Errors carry the 1-based line
    /// number of the offending row.
    pub fn parse(source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(source.as_bytes());
        let headers = reader.headers().map_err(|e| csv_error(source, e))?.clone();
        let expected = ["metric", "year", "value"];
        if headers.len() < 3 || headers.iter().take(3).ne(expected.iter().copied()) {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header `metric,year,value[,tag]`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }

        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| csv_error(source, e))?;
            let line = row.position().map(|p| line_at(source, p.byte())).unwrap_or(0);
            let mut record: TrendRecord<T> = row
                .deserialize(Some(&headers))
                .map_err(|e| Error::Csv {
                    line,
                    message: match e.kind() {
                        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                        _ => e.to_string(),
                    },
                })?;
            if record.tag.as_deref() == Some("") {
                record.tag = None;
            }
            if !record.year.is_finite() || !record.value.is_finite() || record.value <= T::zero() {
                return Err(Error::Csv {
                    line,
                    message: format!("value must be positive and finite, got {}", record.value),
                });
            }
            records.push(record);
        }
        Ok(Self { records })
    }
}

impl<T: Real> TrendTable<T> {
    pub fn records(&self) -> &[TrendRecord<T>] {
        &self.records
    }

    /// Distinct metric names in order of first appearance.
    pub fn metrics(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.records {
            if !names.contains(&r.metric.as_str()) {
                names.push(&r.metric);
            }
        }
        names
    }

    /// Groups filtered rows into one series per metric. An unknown metric
    /// name is an error; a metric left with no rows by the year/tag filter
    /// still yields an (empty, degenerate) series.
    pub fn series(&self, filter: &SeriesFilter<T>) -> Result<Vec<TrendSeries<T>>> {
        let metrics: Vec<&str> = match &filter.metric {
            Some(name) => {
                if !self.records.iter().any(|r| &r.metric == name) {
                    return Err(Error::Validation(format!("unknown metric `{name}`")));
                }
                vec![name.as_str()]
            }
            None => self.metrics(),
        };
        metrics
            .into_iter()
            .map(|metric| {
                let points = self
                    .records
                    .iter()
                    .filter(|r| r.metric == metric && filter.keeps(r))
                    .map(|r| (r.year, r.value))
                    .collect();
                TrendSeries::new(metric, points)
            })
            .collect()
    }
}

/// Curated hardware and model history shipped with the crate.
pub fn bundled_trends() -> TrendTable<f64> {
    TrendTable::parse(BUNDLED_TRENDS).expect("bundled trend table is valid")
}

pub fn bundled_trends_csv() -> &'static str {
    BUNDLED_TRENDS
}
