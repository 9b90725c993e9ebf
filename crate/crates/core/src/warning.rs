use std::fmt;

/// Non-fatal conditions attached to estimation results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Finite-sample plug-in `β̂` exceeds 1, outside the range the limit
    /// theory covers.
    BetaAboveOne(f64),
    /// The adapted estimate came out negative; it is reported unclamped.
    NegativeEstimate(f64),
    /// Plug-in variance reduction `1 - 1/Ĥ⁻¹₁₁` falls outside [0, 1].
    ReductionOutOfRange(f64),
    /// No related-variable-only observations, so only the Hill estimate exists.
    NoExtraObservations,
    /// Estimation at this `k` failed; the message carries the reason.
    EstimationFailed { k: usize, reason: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::BetaAboveOne(b) => write!(f, "beta_hat={b} exceeds 1"),
            Warning::NegativeEstimate(g) => write!(f, "negative adapted estimate {g}"),
            Warning::ReductionOutOfRange(r) => {
                write!(f, "plug-in variance reduction {r} outside [0,1]")
            }
            Warning::NoExtraObservations => {
                write!(
                    f,
                    "no extra related observations (m=0); adapted estimate unavailable"
                )
            }
            Warning::EstimationFailed { k, reason } => write!(f, "k={k}: {reason}"),
        }
    }
}
