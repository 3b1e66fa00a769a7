use serde::{Deserialize, Serialize};

use super::EtaError;
use crate::geo::{route_remaining_nm, LatLon};
use crate::model::{Timestamp, Voyage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RtaStatus {
    OnTime,
    /// The promised ETA cannot be met even at the feasible speed bound.
    RtaDetected {
        /// knots; infinite once the promised ETA has passed
        required_speed: f64,
        deficit_minutes: f64,
    },
}

impl RtaStatus {
    pub fn is_detected(&self) -> bool {
        matches!(self, RtaStatus::RtaDetected { .. })
    }
}

/// [`detect_rta_with_bound`] using the voyage's maximum speed as the bound.
pub fn detect_rta(pos: LatLon<f64>, now: Timestamp, voyage: &Voyage) -> Result<RtaStatus, EtaError> {
    detect_rta_with_bound(pos, now, voyage, voyage.max_speed)
}

/// On time iff `remaining / time_left <= bound_knots`.
pub fn detect_rta_with_bound(
    pos: LatLon<f64>,
    now: Timestamp,
    voyage: &Voyage,
    bound_knots: f64,
) -> Result<RtaStatus, EtaError> {
    let remaining = route_remaining_nm(&voyage.route, pos)?;
    if remaining <= 0.0 {
        return Ok(RtaStatus::OnTime);
    }
    let at_bound_min = remaining / bound_knots * 60.0;
    let left_min = (voyage.promised_eta - now).num_microseconds().unwrap_or(i64::MAX) as f64 / 6.0e7;
    if left_min <= 0.0 {
        return Ok(RtaStatus::RtaDetected {
            required_speed: f64::INFINITY,
            deficit_minutes: at_bound_min,
        });
    }
    let required = remaining / (left_min / 60.0);
    if required <= bound_knots {
        Ok(RtaStatus::OnTime)
    } else {
        Ok(RtaStatus::RtaDetected {
            required_speed: required,
            deficit_minutes: at_bound_min - left_min,
        })
    }
}
