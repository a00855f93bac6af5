//! File formats: encoding-record CSV, descriptor JSON, power-trace and
//! measurement-series CSV.

use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptors::DescriptorSet;
use crate::error::{Error, Result};
use crate::estimation::{descriptor_table, DescriptorTable};
use crate::models::{default_n_intra, EncodingRecord};
use crate::power::{PowerTrace, TraceLabel};
use crate::y4m::Rational;

pub const RECORD_HEADER: [&str; 12] = [
    "sequence_id",
    "class_id",
    "width",
    "height",
    "n_frames",
    "fps_num",
    "fps_den",
    "preset",
    "crf",
    "n_intra",
    "time_s",
    "energy_j",
];

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    sequence_id: String,
    class_id: String,
    width: usize,
    height: usize,
    n_frames: usize,
    fps_num: u32,
    fps_den: u32,
    preset: u32,
    crf: u32,
    n_intra: Option<u32>,
    time_s: f64,
    energy_j: Option<f64>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn check_header(headers: &csv::StringRecord, required: &[&str], what: &str) -> Result<()> {
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|col| !headers.iter().any(|h| h.trim() == *col))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::format(
            None,
            format!("{what} CSV lacks column(s): {}", missing.join(", ")),
        ))
    }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

/// Parses encoding records. A blank `n_intra` falls back to one intra frame per ~5 s GOP.
pub fn read_records<R: Read>(r: R) -> Result<Vec<EncodingRecord>> {
    let mut reader = csv_reader(r);
    check_header(reader.headers()?, &RECORD_HEADER, "records")?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RecordRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::format(None, format!("records CSV line {line}: {e}")))?;
        let frame_rate = Rational::new(row.fps_num, row.fps_den)
            .map_err(|e| Error::format(None, format!("records CSV line {line}: {e}")))?;
        let record = EncodingRecord {
            n_intra: row.n_intra.unwrap_or_else(|| default_n_intra(row.n_frames, frame_rate)),
            sequence_id: row.sequence_id,
            class_id: row.class_id,
            width: row.width,
            height: row.height,
            n_frames: row.n_frames,
            frame_rate,
            preset: row.preset,
            crf: row.crf,
            time_s: row.time_s,
            energy_j: row.energy_j,
        };
        record
            .validate()
            .map_err(|e| Error::format(None, format!("records CSV line {line}: {e}")))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("records CSV has no rows".into()));
    }
    Ok(out)
}

pub fn read_records_path(path: &Path) -> Result<Vec<EncodingRecord>> {
    read_records(BufReader::new(open(path)?))
}

pub fn write_records<W: Write>(w: W, records: &[EncodingRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(RecordRow {
            sequence_id: r.sequence_id.clone(),
            class_id: r.class_id.clone(),
            width: r.width,
            height: r.height,
            n_frames: r.n_frames,
            fps_num: r.frame_rate.num,
            fps_den: r.frame_rate.den,
            preset: r.preset,
            crf: r.crf,
            n_intra: Some(r.n_intra),
            time_s: r.time_s,
            energy_j: r.energy_j,
        })?;
    }
    writer.flush()?;
    Ok(())
}

/// File name used for a sequence's descriptor JSON.
pub fn descriptor_file_name(sequence_id: &str) -> String {
    let safe: String = sequence_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}.json")
}

pub fn read_descriptor_set(path: &Path) -> Result<DescriptorSet> {
    let d: DescriptorSet = serde_json::from_reader(BufReader::new(open(path)?))
        .map_err(|e| Error::format(None, format!("{}: {e}", path.display())))?;
    if d.schema_version != crate::descriptors::SCHEMA_VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "{}: descriptor schema version {}",
            path.display(),
            d.schema_version
        )));
    }
    Ok(d)
}

/// JSON files directly inside `dir`, sorted by name.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in
        fs::read_dir(dir).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?
    {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads one descriptor file or every `*.json` in a directory.
pub fn read_descriptors(path: &Path) -> Result<DescriptorTable> {
    let files = if path.is_dir() {
        json_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no descriptor files in {}", path.display())));
    }
    descriptor_table(
        files
            .iter()
            .map(|f| read_descriptor_set(f))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Reads a `t_s,power_w` trace and rebases it to start at 0 s.
pub fn read_trace<R: Read>(r: R, label: TraceLabel) -> Result<PowerTrace> {
    #[derive(Deserialize)]
    struct Row {
        t_s: f64,
        power_w: f64,
    }
    let mut reader = csv_reader(r);
    check_header(reader.headers()?, &["t_s", "power_w"], "trace")?;
    let mut samples = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::format(None, format!("{label} trace CSV line {}: {e}", i + 2)))?;
        samples.push((row.t_s, row.power_w));
    }
    Ok(PowerTrace::new(label, samples)?.rebased())
}

pub fn read_trace_path(path: &Path, label: TraceLabel) -> Result<PowerTrace> {
    read_trace(BufReader::new(open(path)?), label)
}

/// Reads an `energy_j` column of repeated measurements.
pub fn read_series<R: Read>(r: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        energy_j: f64,
    }
    let mut reader = csv_reader(r);
    check_header(reader.headers()?, &["energy_j"], "series")?;
    reader
        .deserialize::<Row>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|r| r.energy_j)
                .map_err(|e| Error::format(None, format!("series CSV line {}: {e}", i + 2)))
        })
        .collect()
}

pub fn read_series_path(path: &Path) -> Result<Vec<f64>> {
    read_series(BufReader::new(open(path)?))
}

/// Reads `sequence_id,time_s` rows of preset-13 encode times.
pub fn read_ultrafast_times<R: Read>(r: R) -> Result<std::collections::BTreeMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        sequence_id: String,
        time_s: f64,
    }
    let mut reader = csv_reader(r);
    check_header(reader.headers()?, &["sequence_id", "time_s"], "ultrafast times")?;
    let mut out = std::collections::BTreeMap::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::format(None, format!("ultrafast times CSV line {}: {e}", i + 2)))?;
        if out.insert(row.sequence_id.clone(), row.time_s).is_some() {
            return Err(Error::format(
                None,
                format!("duplicate ultrafast time for {:?}", row.sequence_id),
            ));
        }
    }
    Ok(out)
}

pub fn read_ultrafast_times_path(path: &Path) -> Result<std::collections::BTreeMap<String, f64>> {
    read_ultrafast_times(BufReader::new(open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "sequence_id,class_id,width,height,n_frames,fps_num,fps_den,preset,crf,n_intra,time_s,energy_j
a,A,64,48,300,30,1,4,32,,12.5,
b,B,64,48,10,25,1,13,63,2,0.75,3.5
";

    #[test]
    fn records_round_trip() {
        let recs = read_records(CSV.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        // 300 frames at 30 fps with a 150-frame GOP
        assert_eq!(recs[0].n_intra, 2);
        assert_eq!(recs[0].energy_j, None);
        assert_eq!(recs[1].energy_j, Some(3.5));
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&RECORD_HEADER.join(",")));
        assert_eq!(read_records(text.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn record_errors_name_the_line() {
        let missing = "sequence_id,class_id,width\na,A,64\n";
        assert!(matches!(read_records(missing.as_bytes()), Err(Error::Format { .. })));
        let bad = CSV.replace("12.5", "-1");
        let err = read_records(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let header_only = CSV.lines().next().unwrap();
        assert!(matches!(
            read_records(header_only.as_bytes()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn traces_and_series() {
        let t = read_trace(
            "t_s,power_w\n1000.0,30\n1005.0,30\n1010.0,30\n".as_bytes(),
            TraceLabel::Total,
        )
        .unwrap();
        assert_eq!((t.start(), t.end()), (0.0, 10.0));
        assert!(read_trace("t,p\n0,1\n".as_bytes(), TraceLabel::Idle).is_err());
        assert!(read_trace("t_s,power_w\n0,1\n0,1\n".as_bytes(), TraceLabel::Idle).is_err());
        assert_eq!(read_series("energy_j\n1.5\n2\n".as_bytes()).unwrap(), vec![1.5, 2.0]);
        let uf = read_ultrafast_times("sequence_id,time_s\na,2.5\n".as_bytes()).unwrap();
        assert_eq!(uf["a"], 2.5);
        assert!(read_ultrafast_times("sequence_id,time_s\na,1\na,2\n".as_bytes()).is_err());
    }

    #[test]
    fn safe_file_names() {
        assert_eq!(descriptor_file_name("clip A/1"), "clip_A_1.json");
    }
}
