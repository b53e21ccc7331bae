//! Mean opinion scores from 1–5 ratings, teacher/student comparison, and
//! correlation of MOS with SSIM.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Student,
    Teacher,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Student => "student",
            Group::Teacher => "teacher",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "student" => Ok(Group::Student),
            "teacher" => Ok(Group::Teacher),
            other => Err(format!("unknown group `{other}` (expected student or teacher)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub image_id: String,
    pub rater_id: String,
    pub group: Group,
    pub score: u8,
}

impl RatingRecord {
    pub fn new(
        image_id: impl Into<String>,
        rater_id: impl Into<String>,
        group: Group,
        score: u8,
    ) -> Result<Self> {
        if !(1..=5).contains(&score) {
            return Err(Error::param(format!("score {score} outside 1..=5")));
        }
        Ok(Self {
            image_id: image_id.into(),
            rater_id: rater_id.into(),
            group,
            score,
        })
    }
}

#[derive(Deserialize)]
struct RawRow {
    image_id: String,
    rater_id: String,
    group: String,
    score: String,
}

/// Reads `image_id,rater_id,group,score` rows. Errors name the 1-based file line.
pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Record {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["image_id", "rater_id", "group", "score"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Record {
            line: 1,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.deserialize::<RawRow>() {
        let row = row.map_err(|e| Error::Record {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        // header is line 1
        let line = out.len() as u64 + 2;
        let bad = |message: String| Error::Record { line, message };
        let group = row.group.parse::<Group>().map_err(bad)?;
        let score: u8 = row
            .score
            .parse()
            .ok()
            .filter(|s| (1..=5).contains(s))
            .ok_or_else(|| bad(format!("score `{}` is not an integer in 1..=5", row.score)))?;
        if row.image_id.is_empty() || row.rater_id.is_empty() {
            return Err(bad("image_id and rater_id must be non-empty".into()));
        }
        if !seen.insert((row.image_id.clone(), row.rater_id.clone())) {
            return Err(bad(format!(
                "duplicate rating of `{}` by `{}`",
                row.image_id, row.rater_id
            )));
        }
        out.push(RatingRecord {
            image_id: row.image_id,
            rater_id: row.rater_id,
            group,
            score,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SsimRow {
    image_id: String,
    ssim: String,
}

/// Reads an `image_id,ssim` table. Errors name the 1-based file line.
pub fn read_ssim_table<R: Read>(reader: R) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Record {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["image_id", "ssim"] {
        return Err(Error::Record {
            line: 1,
            message: "header must be `image_id,ssim`".into(),
        });
    }
    let mut out: Vec<(String, f64)> = Vec::new();
    for row in rdr.deserialize::<SsimRow>() {
        let row = row.map_err(|e| Error::Record {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let value: f64 = row
            .ssim
            .parse()
            .ok()
            .filter(|v: &f64| (-1.0..=1.0).contains(v))
            .ok_or_else(|| Error::Record {
                line,
                message: format!("ssim `{}` is not a number in [-1, 1]", row.ssim),
            })?;
        if out.iter().any(|(id, _)| *id == row.image_id) {
            return Err(Error::Record {
                line,
                message: format!("duplicate image `{}`", row.image_id),
            });
        }
        out.push((row.image_id, value));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mos {
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub count: usize,
}

fn summarize(scores: impl Iterator<Item = f64>) -> Option<Mos> {
    let v: Vec<f64> = scores.collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Some(Mos {
        mean,
        stddev: var.sqrt(),
        count: v.len(),
    })
}

/// MOS for one image, within one group or pooled.
pub fn mos(records: &[RatingRecord], image_id: &str, group: Option<Group>) -> Result<Mos> {
    summarize(
        records
            .iter()
            .filter(|r| r.image_id == image_id && group.is_none_or(|g| r.group == g))
            .map(|r| f64::from(r.score)),
    )
    .ok_or_else(|| {
        Error::Lookup(match group {
            Some(g) => format!("image `{image_id}` in group {g}"),
            None => format!("image `{image_id}`"),
        })
    })
}

/// One `mos.csv` row; `group` is `student`, `teacher` or `all`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MosRow {
    pub image_id: String,
    pub group: String,
    pub mean: f64,
    pub stddev: f64,
    pub n: usize,
}

/// Per-image rows for each present group plus the pooled row, sorted by image.
pub fn mos_table(records: &[RatingRecord]) -> Vec<MosRow> {
    let images: BTreeSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    let mut rows = Vec::new();
    for img in images {
        for (label, group) in [
            ("student", Some(Group::Student)),
            ("teacher", Some(Group::Teacher)),
            ("all", None),
        ] {
            if let Ok(m) = mos(records, img, group) {
                rows.push(MosRow {
                    image_id: img.to_string(),
                    group: label.to_string(),
                    mean: m.mean,
                    stddev: m.stddev,
                    n: m.count,
                });
            }
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupDelta {
    /// Teacher MOS minus student MOS, per image.
    pub per_image: BTreeMap<String, f64>,
    pub mean_delta: f64,
    /// Images lacking one of the groups.
    pub skipped: Vec<String>,
}

pub fn group_delta(records: &[RatingRecord]) -> Result<GroupDelta> {
    let images: BTreeSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    let mut per_image = BTreeMap::new();
    let mut skipped = Vec::new();
    for img in images {
        match (
            mos(records, img, Some(Group::Teacher)),
            mos(records, img, Some(Group::Student)),
        ) {
            (Ok(t), Ok(s)) => {
                per_image.insert(img.to_string(), t.mean - s.mean);
            }
            _ => skipped.push(img.to_string()),
        }
    }
    if per_image.is_empty() {
        return Err(Error::Analysis("no image was rated by both groups".into()));
    }
    let mean_delta = per_image.values().sum::<f64>() / per_image.len() as f64;
    Ok(GroupDelta {
        per_image,
        mean_delta,
        skipped,
    })
}

/// Correlation coefficients; `None` where a series is constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn correlate(mos: &[f64], ssim: &[f64]) -> Result<Correlation> {
    if mos.len() != ssim.len() {
        return Err(Error::param(format!(
            "series lengths differ: {} vs {}",
            mos.len(),
            ssim.len()
        )));
    }
    if mos.len() < 3 {
        return Err(Error::param("correlation needs at least 3 images"));
    }
    Ok(Correlation {
        n: mos.len(),
        pearson_r: pearson(mos, ssim),
        spearman_rho: pearson(&average_ranks(mos), &average_ranks(ssim)),
    })
}
