// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV ingestion for wide (`date,<id>,<id>,...`) and long (`date,id,value`)
//! panel layouts.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{Frequency, Series};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvLayout {
    Wide,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub layout: CsvLayout,
    pub frequency: Frequency,
}

/// Longest gap tolerated between consecutive daily observations
/// (weekends plus exchange holidays).
const MAX_DAILY_GAP: i64 = 7;

pub fn load_panel_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Vec<Series>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_panel_csv(file, schema)
}

pub fn read_panel_csv<R: Read>(reader: R, schema: CsvSchema) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.first().map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
        return Err(Error::ParseError {
            row: 1,
            column: headers.first().cloned().unwrap_or_default(),
            message: "first column must be `date`".into(),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push((line, record));
    }
    match schema.layout {
        CsvLayout::Wide => parse_wide(&headers, &rows, schema.frequency),
        CsvLayout::Long => parse_long(&headers, &rows, schema.frequency),
    }
}

fn csv_error(err: csv::Error, fallback_row: usize) -> Error {
    let row = err
        .position()
        .map_or(fallback_row, |p| p.line() as usize);
    Error::ParseError {
        row,
        column: String::new(),
        message: err.to_string(),
    }
}

fn parse_date(cell: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell, "%Y-%m-%d").map_err(|e| Error::ParseError {
        row,
        column: "date".into(),
        message: format!("invalid ISO-8601 date `{cell}`: {e}"),
    })
}

fn parse_value(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::ParseError {
        row,
        column: column.to_string(),
        message: format!("`{cell}` is not a number"),
    })
}

/// Integer period index of a date at the given frequency.
pub(crate) fn period_index(date: NaiveDate, frequency: Frequency) -> i64 {
    let year = i64::from(date.year());
    let month0 = i64::from(date.month0());
    match frequency {
        Frequency::Annual => year,
        Frequency::Quarterly => year * 4 + month0 / 3,
        Frequency::Monthly => year * 12 + month0,
        Frequency::Daily => i64::from(date.num_days_from_ce()),
    }
}

/// Calendar date of the `offset`-th observation of a series starting at
/// period `start`. Daily series step over business days.
pub fn period_date(start: i64, offset: usize, frequency: Frequency) -> Option<NaiveDate> {
    let ym = |index: i64, months_per: i64| {
        let months = index * months_per;
        NaiveDate::from_ymd_opt(months.div_euclid(12) as i32, months.rem_euclid(12) as u32 + 1, 1)
    };
    match frequency {
        Frequency::Annual => NaiveDate::from_ymd_opt((start + offset as i64) as i32, 1, 1),
        Frequency::Quarterly => ym(start + offset as i64, 3),
        Frequency::Monthly => ym(start + offset as i64, 1),
        Frequency::Daily => {
            let mut date = NaiveDate::from_num_days_from_ce_opt(start as i32)?;
            let mut left = offset;
            while left > 0 {
                date = date.checked_add_days(Days::new(1))?;
                if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
                    left -= 1;
                }
            }
            Some(date)
        }
    }
}

/// Wide CSV (`date,<id>,...`) of series sharing one frequency. Series may
/// start and end at different periods; absent cells are left empty.
pub fn render_wide_csv(series: &[Series]) -> Result<String> {
    let first = series.first().ok_or(Error::EmptyPanel)?;
    let frequency = first.frequency();
    if frequency == Frequency::Daily && series.iter().any(|s| s.start() != first.start()) {
        return Err(Error::InvalidParameter(
            "daily series must share a start date to be written side by side".into(),
        ));
    }
    let origin = series.iter().map(Series::start).min().unwrap_or(0);
    let end = series
        .iter()
        .map(|s| s.start() + s.len() as i64)
        .max()
        .unwrap_or(origin);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.id().to_string()));
    wtr.write_record(&header).map_err(io)?;
    for offset in 0..(end - origin) as usize {
        let date = period_date(origin, offset, frequency)
            .ok_or_else(|| Error::InvalidParameter("date out of range".into()))?;
        let mut row = vec![date.format("%Y-%m-%d").to_string()];
        let period = origin + offset as i64;
        for s in series {
            let idx = period - s.start();
            row.push(if idx >= 0 && (idx as usize) < s.len() {
                s.values()[idx as usize].to_string()
            } else {
                String::new()
            });
        }
        wtr.write_record(&row).map_err(io)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn check_spacing(
    id: &str,
    dates: &[(usize, NaiveDate)],
    frequency: Frequency,
) -> Result<()> {
    for pair in dates.windows(2) {
        let (_, prev) = pair[0];
        let (row, next) = pair[1];
        let step = period_index(next, frequency) - period_index(prev, frequency);
        let ok = match frequency {
            Frequency::Daily => (1..=MAX_DAILY_GAP).contains(&step),
            _ => step == 1,
        };
        if !ok {
            return Err(Error::Spacing {
                id: id.to_string(),
                row,
                message: format!(
                    "{prev} -> {next} is not a single {frequency} step"
                ),
            });
        }
    }
    Ok(())
}

fn parse_wide(
    headers: &[String],
    rows: &[(usize, csv::StringRecord)],
    frequency: Frequency,
) -> Result<Vec<Series>> {
    let ids = &headers[1..];
    if ids.is_empty() {
        return Err(Error::ParseError {
            row: 1,
            column: String::new(),
            message: "no series columns".into(),
        });
    }
    let mut seen = HashMap::new();
    for id in ids {
        if seen.insert(id.as_str(), ()).is_some() {
            return Err(Error::DuplicateSeriesId(id.clone()));
        }
    }

    let mut dates = Vec::with_capacity(rows.len());
    for (line, record) in rows {
        if record.len() != headers.len() {
            return Err(Error::ParseError {
                row: *line,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        dates.push((*line, parse_date(&record[0], *line)?));
    }
    check_spacing("date", &dates, frequency)?;

    let mut out = Vec::with_capacity(ids.len());
    for (col, id) in ids.iter().enumerate() {
        let cells: Vec<&str> = rows.iter().map(|(_, r)| &r[col + 1]).collect();
        let first = cells.iter().position(|c| !c.is_empty());
        let last = cells.iter().rposition(|c| !c.is_empty());
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::EmptySeries { id: id.clone() });
        };
        let mut values = Vec::with_capacity(last - first + 1);
        for (offset, cell) in cells[first..=last].iter().enumerate() {
            let line = rows[first + offset].0;
            if cell.is_empty() {
                return Err(Error::ParseError {
                    row: line,
                    column: id.clone(),
                    message: "missing interior value".into(),
                });
            }
            values.push(parse_value(cell, line, id)?);
        }
        let start = period_index(dates[first].1, frequency);
        out.push(Series::new(id.clone(), frequency, start, values)?);
    }
    Ok(out)
}

fn parse_long(
    headers: &[String],
    rows: &[(usize, csv::StringRecord)],
    frequency: Frequency,
) -> Result<Vec<Series>> {
    let expected = ["date", "id", "value"];
    if headers.len() != 3
        || !headers
            .iter()
            .zip(expected)
            .all(|(h, e)| h.eq_ignore_ascii_case(e))
    {
        return Err(Error::ParseError {
            row: 1,
            column: headers.join(","),
            message: "long layout requires header `date,id,value`".into(),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, BTreeMap<NaiveDate, (usize, f64)>> = HashMap::new();
    for (line, record) in rows {
        if record.len() != 3 {
            return Err(Error::ParseError {
                row: *line,
                column: String::new(),
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let date = parse_date(&record[0], *line)?;
        let id = record[1].to_string();
        if id.is_empty() {
            return Err(Error::ParseError {
                row: *line,
                column: "id".into(),
                message: "empty series id".into(),
            });
        }
        if record[2].is_empty() {
            return Err(Error::ParseError {
                row: *line,
                column: "value".into(),
                message: format!("missing value for `{id}`"),
            });
        }
        let value = parse_value(&record[2], *line, "value")?;
        let group = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            BTreeMap::new()
        });
        if group.insert(date, (*line, value)).is_some() {
            return Err(Error::DuplicateSeriesId(format!("{id} on {date}")));
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let group = &groups[&id];
        let dates: Vec<(usize, NaiveDate)> = group.iter().map(|(d, (l, _))| (*l, *d)).collect();
        check_spacing(&id, &dates, frequency)?;
        let start = period_index(dates[0].1, frequency);
        let values = group.values().map(|(_, v)| *v).collect();
        out.push(Series::new(id, frequency, start, values)?);
    }
    Ok(out)
}
