//! School calendars: which dates are school days and the school hours used
//! for day-type assignment and the after-school window.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayType {
    School,
    NonSchool,
}

impl DayType {
    pub fn name(&self) -> &'static str {
        match self {
            DayType::School => "school",
            DayType::NonSchool => "non_school",
        }
    }
}

/// One school calendar: weekday pattern, holiday exceptions, school hours in
/// minutes past local midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolCalendar {
    /// ISO weekday numbers that are school days (1 = Monday .. 7 = Sunday).
    pub school_weekdays: Vec<u8>,
    #[serde(default)]
    pub holidays: Vec<NaiveDate>,
    pub school_start_min: u32,
    pub school_end_min: u32,
}

impl SchoolCalendar {
    pub fn validate(&self) -> Result<()> {
        if self.school_weekdays.iter().any(|d| !(1..=7).contains(d)) {
            return Err(Error::validation("school_weekdays must be 1..=7"));
        }
        if self.school_start_min >= self.school_end_min || self.school_end_min >= 24 * 60 {
            return Err(Error::validation("school hours must satisfy start < end < 24:00"));
        }
        Ok(())
    }

    pub fn is_school_day(&self, date: NaiveDate) -> bool {
        let wd = date.weekday().number_from_monday() as u8;
        self.school_weekdays.contains(&wd) && !self.holidays.contains(&date)
    }

    pub fn day_type(&self, date: NaiveDate) -> DayType {
        if self.is_school_day(date) {
            DayType::School
        } else {
            DayType::NonSchool
        }
    }
}

/// Calendars keyed by id, as stored in the calendars JSON document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CalendarSet {
    pub calendars: BTreeMap<String, SchoolCalendar>,
}

impl CalendarSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: CalendarSet =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        for (id, cal) in &set.calendars {
            cal.validate()
                .map_err(|e| Error::validation(format!("calendar {id}: {e}")))?;
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> Result<&SchoolCalendar> {
        self.calendars
            .get(id)
            .ok_or_else(|| Error::validation(format!("unknown school calendar {id:?}")))
    }
}
