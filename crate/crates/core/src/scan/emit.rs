use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{LineClass, ResonanceLine, ScanConfig, ScanOutput, VerifiedPoint};
use crate::error::{Error, Result};
use crate::estimate::StabilityRecord;

const TAIL: [&str; 13] = ["status", "J", "K", "s0", "ell", "alpha", "M", "E", "calE", "r", "r_backtransformed", "T", "notes"];

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("bad number {s:?}")))
}

fn header(n: usize) -> Vec<String> {
    let mut h = vec!["z".to_string()];
    h.extend((1..=n).map(|i| format!("omega_{i}")));
    h.extend((1..=n).map(|i| format!("p0_{i}")));
    h.extend(TAIL.iter().map(|s| s.to_string()));
    h
}

/// Records as CSV with `n` omega and p0 columns.
pub fn write_csv<W: Write>(w: W, records: &[StabilityRecord], n: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(n))?;
    for r in records {
        if r.omega.len() != n || r.p0.len() != n {
            return Err(Error::DimensionMismatch(n, r.omega.len()));
        }
        let mut row = vec![r.z.to_string()];
        row.extend(r.omega.iter().map(|&x| num(x)));
        row.extend(r.p0.iter().map(|&x| num(x)));
        row.push(r.status.to_string());
        row.push(r.j.to_string());
        for x in [r.k, r.s0, r.ell, r.alpha, r.m, r.e, r.cal_e, r.r, r.r_backtransformed, r.t] {
            row.push(num(x));
        }
        row.push(r.notes.clone());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<StabilityRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let cols = rd.headers()?.len();
    if cols < 1 + TAIL.len() || !(cols - 1 - TAIL.len()).is_multiple_of(2) {
        return Err(Error::Config(format!("unexpected column count {cols}")));
    }
    let n = (cols - 1 - TAIL.len()) / 2;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| parse(&row[i]);
        let o = 1 + 2 * n;
        out.push(StabilityRecord {
            z: row[0].parse().map_err(|_| Error::Config(format!("bad z {:?}", &row[0])))?,
            omega: (1..=n).map(f).collect::<Result<_>>()?,
            p0: (1 + n..o).map(f).collect::<Result<_>>()?,
            status: row[o].parse()?,
            j: row[o + 1].parse().map_err(|_| Error::Config(format!("bad J {:?}", &row[o + 1])))?,
            k: f(o + 2)?,
            s0: f(o + 3)?,
            ell: f(o + 4)?,
            alpha: f(o + 5)?,
            m: f(o + 6)?,
            e: f(o + 7)?,
            cal_e: f(o + 8)?,
            r: f(o + 9)?,
            r_backtransformed: f(o + 10)?,
            t: f(o + 11)?,
            notes: row[o + 12].to_string(),
        });
    }
    Ok(out)
}

/// Lines as CSV: k_i, action_i, halfwidth, class.
pub fn write_lines_csv<W: Write>(w: W, lines: &[ResonanceLine], n: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut h: Vec<String> = (1..=n).map(|i| format!("k_{i}")).collect();
    h.extend((1..=n).map(|i| format!("action_{i}")));
    h.push("halfwidth".into());
    h.push("class".into());
    out.write_record(h)?;
    for l in lines {
        let mut row: Vec<String> = l.k.iter().map(|k| k.to_string()).collect();
        row.extend(l.action.iter().map(|&x| num(x)));
        row.push(num(l.halfwidth));
        row.push(l.class.to_string());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_lines_csv<R: Read>(r: R) -> Result<Vec<ResonanceLine>> {
    let mut rd = csv::Reader::from_reader(r);
    let cols = rd.headers()?.len();
    if cols < 2 || (cols - 2) % 2 != 0 {
        return Err(Error::Config(format!("unexpected column count {cols}")));
    }
    let n = (cols - 2) / 2;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let k = (0..n)
            .map(|i| row[i].parse().map_err(|_| Error::Config(format!("bad index {:?}", &row[i]))))
            .collect::<Result<_>>()?;
        let action = (n..2 * n).map(|i| parse(&row[i])).collect::<Result<_>>()?;
        let class: LineClass = row[2 * n + 1].parse()?;
        out.push(ResonanceLine::new(k, action, parse(&row[2 * n])?, class));
    }
    Ok(out)
}

fn write_verified<W: Write>(w: W, v: &[VerifiedPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "z", "bound", "horizon", "max_deviation", "within_bound", "energy_drift", "reliable"])?;
    for p in v {
        out.write_record([
            p.index.to_string(),
            p.z.to_string(),
            num(p.bound),
            num(p.horizon),
            num(p.result.max_deviation),
            p.result.within_bound.to_string(),
            num(p.result.energy_drift),
            p.result.reliable.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonOut<'a> {
    config: &'a ScanConfig,
    records: &'a [StabilityRecord],
    lines: &'a [ResonanceLine],
    verified: &'a [VerifiedPoint],
}

pub fn write_json<W: Write>(w: W, cfg: &ScanConfig, out: &ScanOutput) -> Result<()> {
    let doc = JsonOut {
        config: cfg,
        records: &out.records,
        lines: &out.lines,
        verified: &out.verified,
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    timestamp_unix: u64,
    normalization: super::Normalization,
    r0: String,
    eccentricity: f64,
    points: usize,
    config: &'a ScanConfig,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Writes every output named in the configuration. Only the metadata file
/// carries a timestamp.
pub fn write_outputs(cfg: &ScanConfig, out: &ScanOutput) -> Result<()> {
    let n = cfg.model.n();
    let o = &cfg.output;
    if let Some(p) = &o.csv {
        write_csv(create(p)?, &out.records, n)?;
    }
    if let Some(p) = &o.json {
        write_json(create(p)?, cfg, out)?;
    }
    if let Some(p) = &o.lines {
        write_lines_csv(create(p)?, &out.lines, n)?;
    }
    if let Some(p) = &o.verify {
        write_verified(create(p)?, &out.verified)?;
    }
    if let Some(p) = &o.meta {
        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let meta = Meta {
            timestamp_unix: ts,
            normalization: cfg.normalization,
            r0: cfg.r0.map_or("half the distance to the nearest denominator zero".into(), |r| r.to_string()),
            eccentricity: match &cfg.model {
                crate::models::Model::SpinOrbit { e, .. } => *e,
                crate::models::Model::SpinSpinOrbit(p) => p.e,
            },
            points: out.records.len(),
            config: cfg,
        };
        serde_json::to_writer_pretty(create(p)?, &meta)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Status;

    fn same(a: f64, b: f64) -> bool {
        a.to_bits() == b.to_bits()
    }

    fn records() -> Vec<StabilityRecord> {
        let mut ok = StabilityRecord::failed(3, vec![0.1 + 0.2, 1.0], vec![1.0 / 3.0, 0.0], 2, Status::Success, "a;b".into());
        ok.k = 23.5;
        ok.s0 = 0.8123456789012345;
        ok.ell = 2.0_f64.sqrt();
        ok.alpha = 1e-3 / 7.0;
        ok.m = 1.0;
        ok.e = 3.14e-9;
        ok.cal_e = 5.0e-8;
        ok.r = 1.0e-3 / 3.0;
        ok.r_backtransformed = 4.0e-3 / 9.0;
        ok.t = f64::INFINITY;
        let bad = StabilityRecord::failed(-4, vec![0.5, 1.0], vec![0.5, 0.0], 2, Status::FailNorm, "quote \"x\", comma".into());
        vec![ok, bad]
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[], 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("z,omega_1,omega_2,p0_1,p0_2,status,J,K,s0,ell,alpha,M,E,calE,r,r_backtransformed,T,notes"));
    }

    #[test]
    fn csv_round_trip() {
        let recs = records();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs, 2).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!((a.z, a.status, a.j, &a.notes), (b.z, b.status, b.j, &b.notes));
            let fa = [a.k, a.s0, a.ell, a.alpha, a.m, a.e, a.cal_e, a.r, a.r_backtransformed, a.t];
            let fb = [b.k, b.s0, b.ell, b.alpha, b.m, b.e, b.cal_e, b.r, b.r_backtransformed, b.t];
            assert!(fa.iter().zip(&fb).all(|(x, y)| same(*x, *y)));
            assert!(a.omega.iter().chain(&a.p0).zip(b.omega.iter().chain(&b.p0)).all(|(x, y)| same(*x, *y)));
        }
    }

    #[test]
    fn lines_round_trip() {
        let lines = vec![
            ResonanceLine::new(vec![2, -2], vec![1.0, 0.0], 0.045, LineClass::Main),
            ResonanceLine::new(vec![4, -5], vec![1.25, 0.0], f64::NAN, LineClass::Secondary2),
        ];
        let mut buf = Vec::new();
        write_lines_csv(&mut buf, &lines, 2).unwrap();
        let back = read_lines_csv(&buf[..]).unwrap();
        assert_eq!(back[0], lines[0]);
        assert_eq!(back[1].class, LineClass::Secondary2);
        assert!(back[1].halfwidth.is_nan());
    }

    #[test]
    fn dimension_checked() {
        assert!(write_csv(Vec::new(), &records(), 3).is_err());
    }
}
