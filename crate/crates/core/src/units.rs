//! dBm ↔ mW conversion. Metric arithmetic stays in milliwatts; these are used
//! only when reporting.

/// Value written for non-positive powers when a dB figure is required.
pub const DEFAULT_DBM_FLOOR: f64 = -100.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// `None` for non-positive (or NaN) powers, which have no dB value.
pub fn mw_to_dbm(mw: f64) -> Option<f64> {
    (mw > 0.0).then(|| 10.0 * mw.log10())
}

/// Like [`mw_to_dbm`] but clamps to `floor` instead of failing.
pub fn mw_to_dbm_floored(mw: f64, floor: f64) -> f64 {
    mw_to_dbm(mw).map_or(floor, |v| v.max(floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_dbm() {
        assert!((dbm_to_mw(15.0) - 31.622_776_601_683_8).abs() < 1e-12);
        assert!((mw_to_dbm(31.622_776_601_683_8).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_has_no_db() {
        assert_eq!(mw_to_dbm(0.0), None);
        assert_eq!(mw_to_dbm(-1.0), None);
        assert_eq!(mw_to_dbm_floored(-1.0, DEFAULT_DBM_FLOOR), -100.0);
        assert_eq!(mw_to_dbm_floored(1e-30, DEFAULT_DBM_FLOOR), -100.0);
    }
}
