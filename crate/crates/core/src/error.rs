use core::fmt;

use crate::pam4::Pam4Error;
use crate::time::SimTime;

/// Contract violations and invalid inputs detected by the model.
#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    /// An event was scheduled before the current simulation time.
    ScheduleInPast { now: SimTime, requested: SimTime },
    /// `run_until` was asked to move the clock backwards.
    RunBackwards { now: SimTime, requested: SimTime },
    /// PDCP encapsulation was called out of `user_seq` order.
    OutOfOrderEncapsulation { last: u64, got: u64 },
    /// The UE sink received a sequence number that is not strictly increasing.
    DeliveryOrder { last: u64, got: u64 },
    /// A parameter is outside its documented domain.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// The PHY model was rejected.
    Phy(Pam4Error),
}

impl SimError {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        SimError::InvalidParameter { name, reason }
    }

    /// True for errors caused by bad inputs rather than a broken run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, SimError::InvalidParameter { .. } | SimError::Phy(_))
    }
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::ScheduleInPast { now, requested } => {
                write!(f, "event scheduled in the past: now {now}, requested {requested}")
            }
            SimError::RunBackwards { now, requested } => {
                write!(f, "run_until({requested}) is before the current time {now}")
            }
            SimError::OutOfOrderEncapsulation { last, got } => {
                write!(f, "PDCP encapsulation out of order: user_seq {got} after {last}")
            }
            SimError::DeliveryOrder { last, got } => {
                write!(f, "UE sink received count {got} after {last}")
            }
            SimError::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            SimError::Phy(e) => write!(f, "PHY model: {e}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<Pam4Error> for SimError {
    fn from(e: Pam4Error) -> Self {
        SimError::Phy(e)
    }
}
