use std::collections::HashMap;
use std::io::{Read, Write};

use super::{Episode, TrajectorySample};
use crate::error::{Error, Result};

pub const EPISODE_HEADER: [&str; 6] = ["episode_id", "t", "v_f", "v_l", "range", "event"];

const KMH_PER_MS: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedUnits {
    #[default]
    Si,
    Kmh,
}

impl SpeedUnits {
    pub fn to_ms(self, v: f64) -> f64 {
        match self {
            SpeedUnits::Si => v,
            SpeedUnits::Kmh => v / KMH_PER_MS,
        }
    }
}

impl std::str::FromStr for SpeedUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "si" => Ok(SpeedUnits::Si),
            "kmh" | "kmh-speeds" => Ok(SpeedUnits::Kmh),
            other => Err(Error::InvalidInput(format!("unknown units '{other}'"))),
        }
    }
}

/// Event windows for episodes whose rows carry no `event=1` flag.
pub type EventManifest = HashMap<String, (f64, f64)>;

struct Pending {
    id: String,
    samples: Vec<TrajectorySample>,
    event: Option<(f64, f64)>,
}

fn field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<&str> {
    rec.get(i).ok_or_else(|| Error::MalformedRow {
        line,
        message: format!("missing column {}", EPISODE_HEADER[i]),
    })
}

fn number(rec: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    let raw = field(rec, i, line)?;
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MalformedRow {
            line,
            message: format!("bad {} value '{raw}'", EPISODE_HEADER[i]),
        }),
    }
}

/// Parses the episode CSV format into episodes in order of first appearance.
pub fn parse_episode_csv<R: Read>(
    input: R,
    units: SpeedUnits,
    manifest: Option<&EventManifest>,
) -> Result<Vec<Episode>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().ne(EPISODE_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header '{}'", EPISODE_HEADER.join(",")),
        });
    }

    let mut order: Vec<Pending> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = field(&rec, 0, line)?.to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty episode_id".into(),
            });
        }
        let t = number(&rec, 1, line)?;
        let v_f = units.to_ms(number(&rec, 2, line)?);
        let v_l = units.to_ms(number(&rec, 3, line)?);
        let range = number(&rec, 4, line)?;
        let event = match field(&rec, 5, line)?.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("event must be 0 or 1, got '{other}'"),
                })
            }
        };
        if range < 0.0 {
            return Err(Error::NegativeGap { line, gap: range });
        }
        if v_f < 0.0 || v_l < 0.0 {
            return Err(Error::MalformedRow {
                line,
                message: "negative speed".into(),
            });
        }

        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push(Pending {
                id: id.clone(),
                samples: Vec::new(),
                event: None,
            });
            order.len() - 1
        });
        let ep = &mut order[slot];
        if let Some(prev) = ep.samples.last() {
            if t <= prev.t {
                return Err(Error::NonMonotoneTime {
                    line,
                    episode: id,
                    prev: prev.t,
                    t,
                });
            }
        }
        ep.samples.push(TrajectorySample::new(t, v_f, v_l, range));
        if event {
            ep.event = Some(match ep.event {
                None => (t, t),
                Some((start, _)) => (start, t),
            });
        }
    }

    order
        .into_iter()
        .map(|p| {
            let (start, end) = match p
                .event
                .or_else(|| manifest.and_then(|m| m.get(&p.id).copied()))
            {
                Some(w) => w,
                None => return Err(Error::MissingEvent(p.id)),
            };
            Episode::new(p.id, p.samples, start, end)
        })
        .collect()
}

/// Writes episodes in the episode CSV format with SI speeds.
pub fn write_episode_csv<W: Write>(episodes: &[Episode], out: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", EPISODE_HEADER.join(","))?;
    for ep in episodes {
        for s in &ep.samples {
            let event = u8::from(s.t >= ep.event_start && s.t <= ep.event_end);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                ep.episode_id, s.t, s.v_f, s.v_l, s.delta_x, event
            )?;
        }
    }
    w.flush()
}
