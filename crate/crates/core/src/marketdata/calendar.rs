use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::IngestError;

/// Last Friday of a calendar month, the default contract expiry.
pub fn last_friday(year: i32, month: u32) -> Result<NaiveDate, IngestError> {
    let invalid = IngestError::InvalidContractMonth { year, month };
    if !(1..=12).contains(&month) {
        return Err(invalid);
    }
    let (ny, nm) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    let month_end = NaiveDate::from_ymd_opt(ny, nm, 1)
        .and_then(|d| d.pred_opt())
        .ok_or(invalid)?;
    let back = (month_end.weekday().num_days_from_monday() + 7
        - Weekday::Fri.num_days_from_monday())
        % 7;
    Ok(month_end - Duration::days(back as i64))
}

pub fn is_weekday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// First weekday strictly after `date`.
pub fn next_weekday(date: NaiveDate) -> NaiveDate {
    let mut d = date.succ_opt().expect("date in range");
    while !is_weekday(d) {
        d = d.succ_opt().expect("date in range");
    }
    d
}

/// The `n` weekdays ending at `end` (inclusive when `end` is a weekday),
/// in ascending order.
pub fn weekdays_ending_at(end: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = end;
    while out.len() < n {
        if is_weekday(d) {
            out.push(d);
        }
        d = d.pred_opt().expect("date in range");
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cited_months() {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
        assert_eq!(last_friday(2018, 3).unwrap(), d(2018, 3, 30));
        assert_eq!(last_friday(2021, 9).unwrap(), d(2021, 9, 24));
        assert_eq!(last_friday(2021, 12).unwrap(), d(2021, 12, 31));
    }

    #[test]
    fn bad_month() {
        assert!(last_friday(2020, 0).is_err());
        assert!(last_friday(2020, 13).is_err());
    }

    #[test]
    fn weekday_walks() {
        let fri = NaiveDate::from_ymd_opt(2018, 3, 30).unwrap();
        let w = weekdays_ending_at(fri, 6);
        assert_eq!(w.len(), 6);
        assert_eq!(w[0], NaiveDate::from_ymd_opt(2018, 3, 23).unwrap());
        assert!(w.iter().all(|d| is_weekday(*d)));
        assert_eq!(next_weekday(fri), NaiveDate::from_ymd_opt(2018, 4, 2).unwrap());
    }
}
