//! Scene description files (TOML).
//!
//! ```toml
//! room_dims = [6.0, 6.0, 2.5]
//! order = 2                  # or omit and give t60_ms
//! absorption = 0.6           # derived from t60_ms via Sabine when omitted
//! array_center = [3.0, 3.0, 1.25]
//! array = { preset = "icosahedron", radius_m = 0.06 }   # or { file = "array.toml" } / { positions = [...] }
//! sources = [{ az_deg = 30.0, el_deg = 80.0 }]
//! snr_db = 15.0              # omit for a clean render
//! sample_rate = 16000
//! duration_s = 2.0
//! seed = 7
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{MicArrayGeometry, Room, SceneSpec, Vec3};
use crate::doa::{Doa, DoaDegrees};
use crate::error::{Error, Result};

const DEFAULT_ORDER: u32 = 2;
const DEFAULT_ABSORPTION: f64 = 0.6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    room_dims: Vec3,
    order: Option<u32>,
    absorption: Option<f64>,
    t60_ms: Option<f64>,
    array: ArrayRef,
    array_center: Vec3,
    sources: Vec<DoaDegrees>,
    source_range_m: Option<f64>,
    snr_db: Option<f64>,
    sample_rate: u32,
    duration_s: f64,
    seed: u64,
    k_max: Option<usize>,
    min_separation_deg: Option<f64>,
    speed_of_sound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ArrayRef {
    Preset { preset: String, radius_m: f64 },
    File { file: String },
    Inline { positions: Vec<Vec3> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayFile {
    positions: Vec<Vec3>,
}

/// Parse an array geometry file: `positions = [[x, y, z], ...]` in metres.
pub fn parse_array_str(text: &str) -> Result<MicArrayGeometry> {
    let f: ArrayFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    MicArrayGeometry::new(f.positions)
}

/// Parse a scene description. Array file references are resolved against
/// `base_dir`; without one they are rejected.
pub fn parse_scene_str(text: &str, base_dir: Option<&Path>) -> Result<SceneSpec> {
    let f: SceneFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let array = match f.array {
        ArrayRef::Preset { preset, radius_m } => match preset.as_str() {
            "icosahedron" if radius_m > 0.0 && radius_m.is_finite() => MicArrayGeometry::icosahedron(radius_m),
            _ => return Err(Error::Parse(format!("unknown array preset {preset:?} or bad radius"))),
        },
        ArrayRef::Inline { positions } => MicArrayGeometry::new(positions)?,
        ArrayRef::File { file } => {
            let base = base_dir.ok_or_else(|| Error::Parse("array file reference without a base directory".into()))?;
            parse_array_str(&std::fs::read_to_string(base.join(file))?)?
        }
    };
    let absorption = match (f.absorption, f.t60_ms) {
        (Some(a), _) => a,
        (None, Some(t)) => super::sabine_absorption(f.room_dims, t / 1000.0)?,
        (None, None) => DEFAULT_ABSORPTION,
    };
    let sources = f.sources.into_iter().map(Doa::try_from).collect::<Result<Vec<_>>>()?;
    let spec = SceneSpec {
        room: Room { dims: f.room_dims, order: f.order.unwrap_or(DEFAULT_ORDER), absorption },
        t60_label_ms: f.t60_ms,
        array_center: f.array_center,
        array,
        k_max: f.k_max.unwrap_or(sources.len().max(1)),
        sources,
        source_range: f.source_range_m.unwrap_or(super::DEFAULT_SOURCE_RANGE),
        snr_db: f.snr_db,
        sample_rate: f.sample_rate,
        duration: f.duration_s,
        seed: f.seed,
        min_separation_deg: f.min_separation_deg.unwrap_or(super::DEFAULT_MIN_SEPARATION_DEG),
        speed_of_sound: f.speed_of_sound.unwrap_or(super::DEFAULT_SPEED_OF_SOUND),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_scene_file(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_scene_str(&text, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = r#"
room_dims = [6.0, 6.0, 2.5]
t60_ms = 400.0
array_center = [3.0, 3.0, 1.25]
array = { preset = "icosahedron", radius_m = 0.06 }
sources = [{ az_deg = 30.0, el_deg = 80.0 }, { az_deg = -60.0, el_deg = 110.0 }]
snr_db = 15.0
sample_rate = 16000
duration_s = 1.0
seed = 7
k_max = 3
"#;

    #[test]
    fn parses_scene() {
        let s = parse_scene_str(SCENE, None).unwrap();
        assert_eq!(s.sources.len(), 2);
        assert_eq!(s.room.order, 2);
        assert!((super::super::sabine_t60(s.room.dims, s.room.absorption) - 0.4).abs() < 1e-12);
        assert_eq!(s.array.len(), 12);
    }

    #[test]
    fn array_file_reference() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.toml"), "positions = [[0.05,0,0],[-0.05,0,0],[0,0.05,0]]").unwrap();
        let text = SCENE.replace(r#"{ preset = "icosahedron", radius_m = 0.06 }"#, r#"{ file = "a.toml" }"#);
        std::fs::write(dir.path().join("scene.toml"), &text).unwrap();
        let s = read_scene_file(&dir.path().join("scene.toml")).unwrap();
        assert_eq!(s.array.len(), 3);
        assert!(parse_scene_str(&text, None).is_err());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_scene_str("room_dims = 3", None), Err(Error::Parse(_))));
        let close = SCENE.replace("el_deg = 110.0", "el_deg = 85.0");
        assert!(matches!(parse_scene_str(&close, None), Err(Error::InvalidScene(_))));
        assert!(parse_array_str("positions = [[0,0,0]]").is_err());
    }
}
