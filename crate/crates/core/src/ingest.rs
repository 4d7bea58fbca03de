//! Delimited-text ingestion and export of cohorts.
//!
//! A cohort on disk is a directory holding three files:
//!
//! * `subjects.csv` with header `id,treatment,followup,event,<covariates...>`
//! * `mediators.csv` with header `id,time,value`
//! * `config.toml` declaring the schedule, covariate columns and gap mode
//!
//! [`write_dataset`] emits exactly what [`load_dataset`] reads back.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schedule, SubjectRecord};
use crate::error::{Error, Result};

pub const SUBJECTS_FILE: &str = "subjects.csv";
pub const MEDIATORS_FILE: &str = "mediators.csv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapMode {
    /// Any subject alive at a schedule time without a measurement is an error.
    #[default]
    Strict,
    /// Gaps after the first measurement are filled with the previous value.
    CarryForward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub mode: GapMode,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl IngestConfig {
    pub fn new(schedule: Vec<f64>, covariates: Vec<String>) -> Self {
        IngestConfig {
            schedule,
            covariates,
            mode: GapMode::Strict,
            delimiter: ',',
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

fn reader(text: &str, delimiter: char) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, table: &'static str, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MalformedRow {
            table,
            line: 1,
            reason: format!("missing column `{name}`"),
        })
}

fn parse_f64(field: &str, table: &'static str, line: usize, what: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MalformedRow {
            table,
            line,
            reason: format!("{what} `{field}` is not a finite number"),
        }),
    }
}

/// Parses the subject and mediator tables into a validated [`Dataset`].
pub fn load_dataset(
    subjects_table: &str,
    mediators_table: &str,
    config: &IngestConfig,
) -> Result<Dataset> {
    const SUBJ: &str = "subjects";
    const MED: &str = "mediators";
    let schedule = Schedule::new(config.schedule.clone())?;
    let k_len = schedule.len();

    let mut rdr = reader(subjects_table, config.delimiter);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, SUBJ, "id")?;
    let a_col = column(&headers, SUBJ, "treatment")?;
    let f_col = column(&headers, SUBJ, "followup")?;
    let e_col = column(&headers, SUBJ, "event")?;
    let cov_cols = config
        .covariates
        .iter()
        .map(|c| column(&headers, SUBJ, c))
        .collect::<Result<Vec<_>>>()?;

    let mut subjects = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            table: SUBJ,
            line,
            reason: e.to_string(),
        })?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let id = field(id_col).to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                table: SUBJ,
                line,
                reason: "empty id".into(),
            });
        }
        let treatment = parse_f64(field(a_col), SUBJ, line, "treatment")?;
        let followup = parse_f64(field(f_col), SUBJ, line, "followup")?;
        let event = match field(e_col) {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::MalformedRow {
                    table: SUBJ,
                    line,
                    reason: format!("event `{other}` must be 0 or 1"),
                })
            }
        };
        let baseline = cov_cols
            .iter()
            .zip(&config.covariates)
            .map(|(&c, name)| parse_f64(field(c), SUBJ, line, name))
            .collect::<Result<Vec<_>>>()?;
        if by_id.insert(id.clone(), subjects.len()).is_some() {
            return Err(Error::DuplicateSubject(id));
        }
        subjects.push((
            SubjectRecord {
                id,
                treatment,
                baseline,
                mediators: Vec::new(),
                followup,
                event,
            },
            vec![None; k_len],
        ));
    }

    let mut rdr = reader(mediators_table, config.delimiter);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, MED, "id")?;
    let t_col = column(&headers, MED, "time")?;
    let v_col = column(&headers, MED, "value")?;
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            table: MED,
            line,
            reason: e.to_string(),
        })?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let id = field(id_col);
        let time = parse_f64(field(t_col), MED, line, "time")?;
        let value = parse_f64(field(v_col), MED, line, "value")?;
        let &idx = by_id
            .get(id)
            .ok_or_else(|| Error::UnknownSubject(id.to_string()))?;
        let (subject, slots) = &mut subjects[idx];
        let k = schedule.position(time).ok_or_else(|| Error::OffSchedule {
            id: id.to_string(),
            time,
        })?;
        if time > subject.followup {
            return Err(Error::MediatorAfterFollowup {
                id: id.to_string(),
                time,
                followup: subject.followup,
            });
        }
        if slots[k].replace(value).is_some() {
            return Err(Error::DuplicateMeasurement {
                id: id.to_string(),
                time,
            });
        }
    }

    let mut filled = 0usize;
    let mut records = Vec::with_capacity(subjects.len());
    for (mut subject, slots) in subjects {
        let needed = schedule.count_through(subject.followup);
        let mut values = Vec::with_capacity(needed);
        for (k, slot) in slots.iter().take(needed).enumerate() {
            match (slot, config.mode, values.last()) {
                (Some(v), _, _) => values.push(*v),
                (None, GapMode::CarryForward, Some(&prev)) => {
                    values.push(prev);
                    filled += 1;
                }
                (None, _, _) => {
                    return Err(Error::MissingMediator {
                        id: subject.id,
                        time: schedule.times()[k],
                    })
                }
            }
        }
        subject.mediators = values;
        records.push(subject);
    }

    Ok(Dataset::new(schedule, config.covariates.clone(), records)?.with_carried_forward(filled))
}

/// Reads `config.toml`, `subjects.csv` and `mediators.csv` from `dir`.
/// `config_override` replaces the directory's config file when given.
pub fn load_dir(dir: &Path, config_override: Option<&IngestConfig>) -> Result<Dataset> {
    let config = match config_override {
        Some(c) => c.clone(),
        None => IngestConfig::from_toml(&fs::read_to_string(dir.join(CONFIG_FILE))?)?,
    };
    let subjects = fs::read_to_string(dir.join(SUBJECTS_FILE))?;
    let mediators = fs::read_to_string(dir.join(MEDIATORS_FILE))?;
    load_dataset(&subjects, &mediators, &config)
}

/// Renders the two tables and the ingestion config for `dataset`.
pub fn render_dataset(dataset: &Dataset) -> (String, String, String) {
    let mut subjects = String::from("id,treatment,followup,event");
    for name in dataset.covariate_names() {
        subjects.push(',');
        subjects.push_str(name);
    }
    subjects.push('\n');
    let mut mediators = String::from("id,time,value\n");
    let times = dataset.schedule().times();
    for s in dataset.subjects() {
        subjects.push_str(&format!(
            "{},{},{},{}",
            s.id,
            s.treatment,
            s.followup,
            u8::from(s.event)
        ));
        for c in &s.baseline {
            subjects.push_str(&format!(",{c}"));
        }
        subjects.push('\n');
        for (t, m) in times.iter().zip(&s.mediators) {
            mediators.push_str(&format!("{},{t},{m}\n", s.id));
        }
    }
    let config = IngestConfig::new(times.to_vec(), dataset.covariate_names().to_vec());
    (subjects, mediators, config.to_toml())
}

pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (subjects, mediators, config) = render_dataset(dataset);
    fs::write(dir.join(SUBJECTS_FILE), subjects)?;
    fs::write(dir.join(MEDIATORS_FILE), mediators)?;
    fs::write(dir.join(CONFIG_FILE), config)?;
    Ok(())
}
