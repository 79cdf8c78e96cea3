//! CSV helpers shared by the simulator outputs and the CLI.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::engine::{DegreeHistogram, TimeSeries};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Reads a `sweep,mean_w` file back into a [`TimeSeries`].
///
/// Sweeps must be uniformly spaced.
pub fn read_timeseries(path: &Path) -> Result<TimeSeries> {
    let file = File::open(path)?;
    parse_timeseries(BufReader::new(file))
}

pub fn parse_timeseries<R: BufRead>(reader: R) -> Result<TimeSeries> {
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "sweep,mean_w" => {}
        Some((_, Ok(h))) => {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected header 'sweep,mean_w', found '{h}'"),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => {
            return Err(Error::Parse {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut sweeps = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(s), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                line: lineno,
                reason: "expected two fields".into(),
            });
        };
        let s: u64 = s.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            reason: format!("bad sweep '{s}'"),
        })?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            reason: format!("bad value '{v}'"),
        })?;
        sweeps.push(s);
        values.push(v);
    }
    if sweeps.is_empty() {
        return Err(Error::InsufficientData("time series has no samples".into()));
    }
    let period = if sweeps.len() > 1 { sweeps[1].saturating_sub(sweeps[0]) } else { 1 };
    if period == 0 {
        return Err(Error::Parse {
            line: 3,
            reason: "sweeps must be strictly increasing".into(),
        });
    }
    for (i, w) in sweeps.windows(2).enumerate() {
        if w[1] != w[0] + period {
            return Err(Error::Parse {
                line: i + 3,
                reason: "sweeps are not uniformly spaced".into(),
            });
        }
    }
    Ok(TimeSeries {
        sample_period_sweeps: period,
        start_sweep: sweeps[0],
        values,
    })
}

/// Reads a `k,count,n_snapshots` file back into a [`DegreeHistogram`].
pub fn read_degree_histogram(path: &Path) -> Result<DegreeHistogram> {
    let file = File::open(path)?;
    parse_degree_histogram(BufReader::new(file))
}

pub fn parse_degree_histogram<R: BufRead>(reader: R) -> Result<DegreeHistogram> {
    let mut hist = DegreeHistogram::default();
    let mut snapshots = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != "k,count,n_snapshots" {
                return Err(Error::Parse {
                    line: 1,
                    reason: format!("expected header 'k,count,n_snapshots', found '{line}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<u64>> = fields.iter().map(|f| f.parse().ok()).collect();
        let Some([k, count, n]) = parsed.as_deref().and_then(|v| <[u64; 3]>::try_from(v).ok()) else {
            return Err(Error::Parse {
                line: lineno,
                reason: "expected three nonnegative integers".into(),
            });
        };
        if *snapshots.get_or_insert(n) != n {
            return Err(Error::Parse {
                line: lineno,
                reason: "n_snapshots differs between rows".into(),
            });
        }
        let k = k as usize;
        if k < hist.counts.len() {
            return Err(Error::Parse {
                line: lineno,
                reason: "degrees must be strictly increasing".into(),
            });
        }
        hist.counts.resize(k + 1, 0);
        hist.counts[k] = count;
    }
    hist.n_snapshots = snapshots.unwrap_or(0);
    if hist.total() == 0 {
        return Err(Error::InsufficientData("degree histogram is empty".into()));
    }
    Ok(hist)
}
