//! Plain-text sample archives.
//!
//! ```text
//! # betalab-samples 1
//! # model_hash <hex>
//! # seed <u64>
//! # beta <f64>
//! # n <usize>
//! # burn_in <usize>
//! # thinning <usize>
//! <λ_1> <λ_2> … <λ_N>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading an
//! archive back reproduces every bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &str = "# betalab-samples 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub model_hash: String,
    pub seed: u64,
    pub beta: f64,
    pub n: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

pub fn write_archive(header: &ArchiveHeader, samples: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "# model_hash {}", header.model_hash);
    let _ = writeln!(out, "# seed {}", header.seed);
    let _ = writeln!(out, "# beta {:?}", header.beta);
    let _ = writeln!(out, "# n {}", header.n);
    let _ = writeln!(out, "# burn_in {}", header.burn_in);
    let _ = writeln!(out, "# thinning {}", header.thinning);
    for s in samples {
        let line: Vec<String> = s.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn header_value<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("archive header ends before `{key}`")))?;
    line.strip_prefix("# ")
        .and_then(|rest| rest.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Parse(format!("expected `# {key} …`, found `{line}`")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}: `{s}`")))
}

pub fn read_archive(text: &str) -> Result<(ArchiveHeader, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::Parse("not a betalab sample archive".into()));
    }
    let header = ArchiveHeader {
        model_hash: header_value(&mut lines, "model_hash")?.to_string(),
        seed: parse(header_value(&mut lines, "seed")?, "seed")?,
        beta: parse(header_value(&mut lines, "beta")?, "beta")?,
        n: parse(header_value(&mut lines, "n")?, "n")?,
        burn_in: parse(header_value(&mut lines, "burn_in")?, "burn_in")?,
        thinning: parse(header_value(&mut lines, "thinning")?, "thinning")?,
    };
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| parse::<f64>(t, "position"))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.n {
            return Err(Error::Parse(format!(
                "sample {k} has {} positions, header says {}",
                row.len(),
                header.n
            )));
        }
        samples.push(row);
    }
    Ok((header, samples))
}
