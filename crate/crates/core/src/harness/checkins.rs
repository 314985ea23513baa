//! Check-in CSV ingestion (`user_id,latitude,longitude,unix_time`).

use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::model::{Location, Task, Worker};

use super::workload::{truncated_gaussian, ArrivalStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckinRole {
    Worker,
    Task,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckinLoad {
    pub stream: ArrivalStream,
    pub skipped: usize,
}

struct Record {
    lat: f64,
    lon: f64,
    time: f64,
}

fn parse_row(row: &csv::StringRecord) -> Option<Record> {
    if row.len() < 4 {
        return None;
    }
    let num = |i: usize| row.get(i)?.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    Some(Record {
        lat: num(1)?,
        lon: num(2)?,
        time: num(3)?,
    })
}

fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Parses check-ins from any reader. Longitude maps to x and latitude to y,
/// both min-max normalized; the time span is cut into `instances` equal parts.
pub fn parse_checkins<R: Read>(input: R, role: CheckinRole, instances: usize, config: &SimConfig, seed: u64) -> Result<(ArrivalStream, usize)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = Vec::new();
    let mut skipped = 0;
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let header = k == 0 && row.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err());
        if header {
            continue;
        }
        match parse_row(&row) {
            Some(r) => records.push(r),
            None => skipped += 1,
        }
    }
    let instances = instances.max(1);
    let mut stream = ArrivalStream::empty(instances);
    if records.is_empty() {
        return Ok((stream, skipped));
    }
    let fold = |f: fn(&Record) -> f64| {
        records
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (lat0, lat1) = fold(|r| r.lat);
    let (lon0, lon1) = fold(|r| r.lon);
    let (t0, t1) = fold(|r| r.time);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, r) in records.iter().enumerate() {
        let p = if t1 > t0 {
            (((r.time - t0) / (t1 - t0) * instances as f64).floor() as usize + 1).min(instances)
        } else {
            1
        };
        let loc = Location::new(normalize(r.lon, lon0, lon1), normalize(r.lat, lat0, lat1));
        let id = k as u32 + 1;
        let now = p as f64;
        let a = &mut stream.instances[p - 1];
        match role {
            CheckinRole::Worker => a.workers.push(Worker::new(id, loc, truncated_gaussian(config.velocity, &mut rng), now)),
            CheckinRole::Task => {
                let offset = rand::Rng::random_range(&mut rng, config.deadline.lo()..=config.deadline.hi());
                a.tasks.push(Task::new(id, loc, now + offset, now));
            }
        }
    }
    Ok((stream, skipped))
}

/// Loads a check-in file. Malformed rows are skipped and counted; a file
/// without any valid row is an error.
pub fn load_checkins(path: &Path, role: CheckinRole, instances: usize, config: &SimConfig, seed: u64) -> Result<CheckinLoad> {
    let file = std::fs::File::open(path)?;
    let (stream, skipped) = parse_checkins(file, role, instances, config, seed)?;
    if stream.num_workers() + stream.num_tasks() == 0 {
        return Err(Error::NoCheckins {
            path: path.to_path_buf(),
            skipped,
        });
    }
    Ok(CheckinLoad { stream, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(text: &str, role: CheckinRole, r: usize) -> (ArrivalStream, usize) {
        parse_checkins(text.as_bytes(), role, r, &SimConfig::default(), 1).unwrap()
    }

    #[test]
    fn two_rows_two_instances() {
        let (s, skipped) = parse("u,lat,lon,t\n1,10.0,20.0,100\n2,11.0,22.0,200\n", CheckinRole::Worker, 2);
        assert_eq!(skipped, 0);
        assert_eq!(s.at(1).workers.len(), 1);
        assert_eq!(s.at(2).workers.len(), 1);
        assert_eq!(s.at(1).workers[0].loc, Location::new(0.0, 0.0));
        assert_eq!(s.at(2).workers[0].loc, Location::new(1.0, 1.0));
    }

    #[test]
    fn single_timestamp_goes_to_first_instance() {
        let (s, _) = parse("1,1,1,5\n2,2,2,5\n3,3,3,5\n", CheckinRole::Task, 4);
        assert_eq!(s.at(1).tasks.len(), 3);
        assert_eq!(s.num_tasks(), 3);
    }

    #[test]
    fn malformed_rows_are_counted() {
        let (s, skipped) = parse("1,abc,1,5\n2,2,2,5\n3,3\n", CheckinRole::Task, 1);
        assert_eq!((s.num_tasks(), skipped), (1, 2));
    }

    #[test]
    fn empty_file_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "user_id,latitude,longitude,unix_time").unwrap();
        writeln!(f, "1,x,y,z").unwrap();
        let err = load_checkins(f.path(), CheckinRole::Worker, 3, &SimConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::NoCheckins { skipped: 1, .. }));
    }
}
