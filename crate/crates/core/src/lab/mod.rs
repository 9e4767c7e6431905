//! Symmetry verification: invariancy measures for learned networks and
//! exhaustive theorem checks on the C4 gridworld.

mod invariancy;
mod mdp;
mod theorems;

pub use invariancy::{
    actor_rotation_invariancy, actor_translation_invariancy, critic_rotation_invariancy, critic_translation_invariancy,
    invariancy_report, rotation_angles_deg, translation_list, ActorFn, CriticFn, EmergenceTracker, InvariancyReport, Measure,
    NAV_MAP_SIZE,
};
pub use mdp::{policy_evaluation, value_iteration, Solution, TabularMdp};
pub use theorems::{
    invariant_optimal_policy, verify_homomorphism_lifting, verify_theorem1_tabular, Check, HomomorphismReport, Quotient,
    Theorem1Report, TABULAR_GAMMA,
};
