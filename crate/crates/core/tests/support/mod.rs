//! Helpers shared by the integration suites.

use su11::fock::{self, Representation};
use su11::moments::Family;
use su11::states::{self, AnalyticState, EigenvalueSign, StateError};

pub const REPS: [Representation; 2] = [Representation::Even, Representation::Odd];

/// Builds a family eigenstate through the closed-form constructors, doubling
/// the cutoff until the tail certifies. Panics on anything but a truncation
/// shortfall, since the grids in these suites stay well inside the admissible
/// parameter ranges.
pub fn family_state(family: Family, rep: Representation, l: u32) -> AnalyticState {
    let mut cap = fock::DEFAULT_N_MAX;
    loop {
        let built = match family {
            Family::K3MinusChiKPlus { chi } => {
                states::build_state_beta_plus_zero(-chi, l, rep, cap)
            }
            _ => states::build_state_general(&family.beta(), l, EigenvalueSign::Plus, rep, cap),
        };
        match built {
            Ok(st) => return st,
            Err(StateError::Fock(fock::FockError::TruncationTooSmall { .. }))
                if cap < fock::MAX_N_MAX =>
            {
                cap = (2 * cap).min(fock::MAX_N_MAX);
            }
            Err(e) => panic!("state build failed for {} at l = {l}: {e}", family.label()),
        }
    }
}
