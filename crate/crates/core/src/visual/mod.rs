//! Visual identification and rendering.

mod ids;
mod mesh;
mod palette;
mod svg;
mod sweep;

pub use ids::{
    assign_visual_ids, capitalize, resolve_visual_joint_ref, Entity, EntityKind, StyledEntity,
    TokenError, VisualMap,
};
pub use mesh::{to_obj, to_stl};
pub use palette::{Style, Texture, CAPACITY, COLORS};
pub use svg::{
    fmt_num, render_view, render_view_with_banner, Camera, Projection, ViewSpec, FACE_OPACITY,
    LABEL_CLEARANCE, MARGIN,
};
pub use sweep::{failure_banner, render_outcome, render_sweep, solve_view, Sweep, SweepFrame};
