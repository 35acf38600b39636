//! The bidirectional point-cloud/image mapping: position-to-color encoding,
//! pinhole rasterization to multi-view images, and unprojection with
//! camera-pixel ray alignment.

mod camera;
mod color;
mod image_io;
mod raster;

pub use camera::{make_camera_ring, CameraModel, CameraRingParams};
pub use color::{color_to_pos, pos_to_color, ColorCode};
pub use image_io::{load_view_png, save_view_png};
pub use raster::{rasterize, render_views, unproject, RenderedView};
