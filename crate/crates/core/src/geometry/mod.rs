//! Planar rigid-body geometry of the object and the two-finger hand.

pub mod finger;
pub mod hand;
pub mod profile;
pub mod rolling;

pub use finger::{support_contact, ContactKind, Facing, FingerLine, Pose, SupportContact};
pub use hand::{grasp, roll_step, GraspState, HandGeometry, Side, MAX_STEP_RAD};
pub use profile::{ConvexProfile, ProfileKind, Support};
pub use rolling::{
    contact_arc_length, measure_contact, place_on_finger, solve_roll, ContactState,
    PrescribedFinger, PushFinger, RollSolution, RollingContact, RotaryFinger,
};
