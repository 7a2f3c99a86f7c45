use std::path::Path;

use crate::camera::{CameraRig, Calibration};
use crate::error::{Error, Result};

pub fn read_calibration(path: impl AsRef<Path>) -> Result<CameraRig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Calibration::from_json(&text)
}

pub fn write_calibration(rig: &CameraRig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, rig.to_calibration().to_json() + "\n").map_err(|e| Error::io(path, e))
}
