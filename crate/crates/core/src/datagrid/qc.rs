//! Record-level quality control.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::areas::AreaTable;
use super::flags::harmonize_flag;
use super::types::{FlagClass, Record, Variable};

/// Replacement range for one variable inside one area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeOverride {
    pub area_id: usize,
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QcConfig {
    pub accepted: BTreeSet<FlagClass>,
    pub year_start: i32,
    pub year_end: i32,
    /// Empty by default; regional exceptions have no published replacement ranges.
    pub range_overrides: Vec<RangeOverride>,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            accepted: BTreeSet::from([FlagClass::Good]),
            year_start: 1920,
            year_end: 2023,
            range_overrides: Vec::new(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    BadFlag,
    OutOfRange,
    BadCoordinates,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

fn coordinates_ok(r: &Record, config: &QcConfig) -> bool {
    (-180.0..180.0).contains(&r.lon)
        && (-90.0..=90.0).contains(&r.lat)
        && r.depth >= 0.0
        && r.depth.is_finite()
        && r.year >= config.year_start
        && r.year <= config.year_end
}

fn range_for(r: &Record, config: &QcConfig, areas: &AreaTable) -> (f64, f64) {
    if config.range_overrides.iter().any(|o| o.variable == r.variable) {
        let area = areas.assign_area(r.lon, r.lat);
        if let Some(o) = config
            .range_overrides
            .iter()
            .find(|o| o.variable == r.variable && o.area_id == area)
        {
            return (o.min, o.max);
        }
    }
    r.variable.valid_range()
}

/// Checks coordinates first, then the harmonized flag, then the value range.
pub fn validate_record(record: &Record, config: &QcConfig, areas: &AreaTable) -> Verdict {
    if !coordinates_ok(record, config) || record.variable.is_derived() {
        return Verdict::Reject(RejectReason::BadCoordinates);
    }
    if !config.accepted.contains(&harmonize_flag(record.source_db, &record.raw_flag)) {
        return Verdict::Reject(RejectReason::BadFlag);
    }
    let (lo, hi) = range_for(record, config, areas);
    if !(record.value >= lo && record.value <= hi) {
        return Verdict::Reject(RejectReason::OutOfRange);
    }
    Verdict::Accept
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QcReport {
    pub accepted: usize,
    pub bad_flag: usize,
    pub out_of_range: usize,
    pub bad_coordinates: usize,
}

/// Splits records into the accepted list and a per-reason tally.
pub fn filter_records(records: Vec<Record>, config: &QcConfig, areas: &AreaTable) -> (Vec<Record>, QcReport) {
    let mut report = QcReport::default();
    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        match validate_record(&r, config, areas) {
            Verdict::Accept => {
                report.accepted += 1;
                kept.push(r);
            }
            Verdict::Reject(RejectReason::BadFlag) => report.bad_flag += 1,
            Verdict::Reject(RejectReason::OutOfRange) => report.out_of_range += 1,
            Verdict::Reject(RejectReason::BadCoordinates) => report.bad_coordinates += 1,
        }
    }
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagrid::types::SourceDb;

    fn rec(variable: Variable, value: f64, flag: &str) -> Record {
        Record {
            source_db: SourceDb::Wod,
            lon: 10.0,
            lat: 10.0,
            depth: 100.0,
            year: 2000,
            variable,
            value,
            raw_flag: flag.into(),
        }
    }

    #[test]
    fn range_and_flag_rules() {
        let (c, a) = (QcConfig::default(), AreaTable::default());
        assert_eq!(validate_record(&rec(Variable::Oxygen, 300.0, "0"), &c, &a), Verdict::Accept);
        assert_eq!(
            validate_record(&rec(Variable::Oxygen, 600.0, "0"), &c, &a),
            Verdict::Reject(RejectReason::OutOfRange)
        );
        assert_eq!(
            validate_record(&rec(Variable::Oxygen, 300.0, "3"), &c, &a),
            Verdict::Reject(RejectReason::BadFlag)
        );
        assert_eq!(
            validate_record(&rec(Variable::Phosphate, 5.5, "0"), &c, &a),
            Verdict::Reject(RejectReason::OutOfRange)
        );
    }

    #[test]
    fn override_widens_range_in_its_area_only() {
        let a = AreaTable::default();
        let r = rec(Variable::Phosphate, 5.5, "0");
        let mut c = QcConfig::default();
        c.range_overrides.push(RangeOverride {
            area_id: a.assign_area(r.lon, r.lat),
            variable: Variable::Phosphate,
            min: 0.0,
            max: 8.0,
        });
        assert!(validate_record(&r, &c, &a).is_accept());
        let mut far = r.clone();
        far.lon = -140.0;
        far.lat = -40.0;
        assert!(!validate_record(&far, &c, &a).is_accept());
    }

    #[test]
    fn coordinates_checked_before_flags() {
        let (c, a) = (QcConfig::default(), AreaTable::default());
        let mut r = rec(Variable::Oxygen, 300.0, "9");
        r.lon = 180.0;
        assert_eq!(validate_record(&r, &c, &a), Verdict::Reject(RejectReason::BadCoordinates));
        r.lon = 0.0;
        r.year = 1800;
        assert_eq!(validate_record(&r, &c, &a), Verdict::Reject(RejectReason::BadCoordinates));
    }
}
