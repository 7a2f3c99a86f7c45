//! File codecs: PLY clouds, portable pixmaps, calibration JSON and `u,v` CSV.

mod calib;
mod csv;
mod pixmap;
mod ply;

pub use calib::{read_calibration, write_calibration};
pub use csv::{parse_csv, points_to_csv, read_csv, write_csv, CSV_HEADER};
pub use pixmap::{decode_pixmap, encode_pixmap, read_pixmap, write_pixmap, PixmapEncoding};
pub use ply::{ply_bytes, read_ply, read_ply_from, write_ply, PlyFormat, PlyScalar};
