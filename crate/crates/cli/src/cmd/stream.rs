use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rcw_core::classifiers::{Classifier, Model, ModelFile};
use rcw_core::evaluation::median;
use rcw_core::features::FeatureEncoding;
use rcw_core::trajdata::{SpeedUnits, TrajectorySample};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{load_model, model_encoding};

pub const INPUT_HEADER: &str = "t,v_f,v_l,range";
pub const OUTPUT_HEADER: &str = "t,warning,latency_us";

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Model file to serve.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamVerdict {
    /// The input time field, echoed.
    pub t: String,
    pub warning: bool,
    /// Feature extraction plus prediction, microseconds.
    pub latency_us: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamSummary {
    pub samples: usize,
    pub malformed: usize,
    pub latencies_us: Vec<f64>,
}

impl StreamSummary {
    pub fn median_latency_us(&self) -> f64 {
        median(&self.latencies_us)
    }
}

pub struct StreamEngine {
    model: Model,
    encoding: FeatureEncoding,
    units: SpeedUnits,
}

fn parse_field(raw: &str, name: &str) -> Result<f64, String> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("bad {name} '{}'", raw.trim())),
    }
}

impl StreamEngine {
    pub fn new(file: ModelFile, units: SpeedUnits) -> CliResult<Self> {
        let encoding = model_encoding(&file)?;
        Ok(StreamEngine {
            model: file.model,
            encoding,
            units,
        })
    }

    /// Classifies one `t,v_f,v_l,range` line.
    pub fn verdict(&self, line: &str) -> Result<StreamVerdict, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!("expected 4 fields, found {}", fields.len()));
        }
        let t = parse_field(fields[0], "t")?;
        let v_f = self.units.to_ms(parse_field(fields[1], "v_f")?);
        let v_l = self.units.to_ms(parse_field(fields[2], "v_l")?);
        let range = parse_field(fields[3], "range")?;

        let start = Instant::now();
        let x = self
            .encoding
            .sample_features(&TrajectorySample::new(t, v_f, v_l, range))
            .map_err(|e| e.to_string())?;
        let warning = self.model.predict(&x).label.is_warning();
        let nanos = start.elapsed().as_nanos().max(1);
        Ok(StreamVerdict {
            t: fields[0].trim().to_string(),
            warning,
            latency_us: nanos as f64 / 1000.0,
        })
    }

    /// Reads samples until end of input, writing and flushing one verdict
    /// per valid line. Malformed lines are reported on `err` and skipped.
    pub fn run<R: BufRead, W: Write, E: Write>(
        &self,
        input: R,
        mut out: W,
        mut err: E,
    ) -> std::io::Result<StreamSummary> {
        let mut summary = StreamSummary::default();
        writeln!(out, "{OUTPUT_HEADER}")?;
        out.flush()?;
        for (i, line) in input.lines().enumerate() {
            let line = match line {
                Ok(l) => l,
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    summary.malformed += 1;
                    writeln!(err, "line {}: not UTF-8", i + 1)?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let trimmed = line.trim();
            if trimmed.is_empty()
                || (summary.samples == 0 && summary.malformed == 0 && trimmed == INPUT_HEADER)
            {
                continue;
            }
            match self.verdict(trimmed) {
                Ok(v) => {
                    summary.samples += 1;
                    summary.latencies_us.push(v.latency_us);
                    writeln!(out, "{},{},{:.3}", v.t, u8::from(v.warning), v.latency_us)?;
                    out.flush()?;
                }
                Err(m) => {
                    summary.malformed += 1;
                    writeln!(err, "line {}: {m}", i + 1)?;
                }
            }
        }
        Ok(summary)
    }
}

pub fn run(args: &StreamArgs, cfg: &RunConfig) -> CliResult<()> {
    let engine = StreamEngine::new(load_model(&args.model)?, cfg.units.into())?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let summary = engine
        .run(stdin.lock(), stdout.lock(), stderr.lock())
        .map_err(|e| CliError::Data(format!("stream: {e}")))?;
    eprintln!(
        "stream: {} samples, {} malformed, median latency {:.3} us",
        summary.samples,
        summary.malformed,
        summary.median_latency_us()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcw_core::classifiers::{train_c45, C45Params, LabeledInstance};
    use rcw_core::trajdata::ClassLabel;

    fn engine() -> StreamEngine {
        // warn when TTC is at most 4 s
        let data: Vec<LabeledInstance> = (0..200)
            .map(|i| {
                let ttc = i as f64 * 0.1;
                LabeledInstance::new(
                    [50.0, 10.0, -1.0, 1.0, ttc],
                    if ttc <= 4.0 {
                        ClassLabel::Warning
                    } else {
                        ClassLabel::Safe
                    },
                )
            })
            .collect();
        let tree = train_c45(&data, &C45Params::default()).unwrap();
        StreamEngine::new(ModelFile::new(Model::Tree(tree)), SpeedUnits::Si).unwrap()
    }

    #[test]
    fn closing_and_opening_pairs() {
        let e = engine();
        // 10 m gap closing at 5 m/s: TTC 2 s
        assert!(e.verdict("1.0,20,15,10").unwrap().warning);
        // leader pulling away
        assert!(!e.verdict("1.1,15,20,40").unwrap().warning);
        assert!(e.verdict("2,20,15,10").unwrap().latency_us > 0.0);
    }

    #[test]
    fn malformed_lines_are_counted_not_fatal() {
        let input =
            "t,v_f,v_l,range\n0.0,20,15,10\nnonsense\n0.1,20,15\n0.2,20,15,-3\n\n0.3,15,20,40\n";
        let mut out = Vec::new();
        let mut err = Vec::new();
        let s = engine().run(input.as_bytes(), &mut out, &mut err).unwrap();
        assert_eq!((s.samples, s.malformed), (2, 3));
        let out = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], OUTPUT_HEADER);
        assert!(lines[1].starts_with("0.0,1,"));
        assert!(lines[2].starts_with("0.3,0,"));
        assert_eq!(String::from_utf8(err).unwrap().lines().count(), 3);
        assert!(s.median_latency_us() > 0.0);
    }

    #[test]
    fn kmh_input_is_converted() {
        let mut e = engine();
        e.units = SpeedUnits::Kmh;
        // 72 and 54 km/h are 20 and 15 m/s
        assert!(e.verdict("0,72,54,10").unwrap().warning);
        assert!(!e.verdict("0,72,54,100").unwrap().warning);
    }
}
