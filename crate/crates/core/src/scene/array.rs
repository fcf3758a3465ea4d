use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Microphone positions in metres, relative to the array centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayRepr", into = "ArrayRepr")]
pub struct MicArrayGeometry {
    positions: Vec<Vec3>,
}

#[derive(Serialize, Deserialize)]
struct ArrayRepr {
    positions: Vec<Vec3>,
}

impl TryFrom<ArrayRepr> for MicArrayGeometry {
    type Error = Error;
    fn try_from(r: ArrayRepr) -> Result<Self> {
        MicArrayGeometry::new(r.positions)
    }
}

impl From<MicArrayGeometry> for ArrayRepr {
    fn from(a: MicArrayGeometry) -> Self {
        ArrayRepr { positions: a.positions }
    }
}

impl MicArrayGeometry {
    pub fn new(positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidScene("array needs at least two microphones".into()));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScene("non-finite microphone position".into()));
        }
        for i in 0..positions.len() {
            for j in 0..i {
                if distance(&positions[i], &positions[j]) <= 0.0 {
                    return Err(Error::InvalidScene(format!(
                        "microphones {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(MicArrayGeometry { positions })
    }

    /// Twelve microphones on the vertices of a regular icosahedron: a
    /// pseudo-spherical layout.
    pub fn icosahedron(radius: f64) -> Self {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let norm = (1.0 + g * g).sqrt();
        let mut positions = Vec::with_capacity(12);
        for &a in &[-1.0, 1.0] {
            for &b in &[-g, g] {
                positions.push([0.0, a, b]);
                positions.push([a, b, 0.0]);
                positions.push([b, 0.0, a]);
            }
        }
        for p in positions.iter_mut() {
            for v in p.iter_mut() {
                *v *= radius / norm;
            }
        }
        MicArrayGeometry { positions }
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of unordered pairs, `M(M-1)/2`.
    pub fn num_pairs(&self) -> usize {
        self.len() * (self.len() - 1) / 2
    }

    pub fn translated(&self, offset: Vec3) -> Vec<Vec3> {
        self.positions
            .iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
            .collect()
    }
}

pub(crate) fn distance(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_is_on_sphere() {
        let a = MicArrayGeometry::icosahedron(0.05);
        assert_eq!(a.len(), 12);
        assert_eq!(a.num_pairs(), 66);
        for p in a.positions() {
            assert!((distance(p, &[0.0; 3]) - 0.05).abs() < 1e-12);
        }
        assert!(MicArrayGeometry::new(a.positions().to_vec()).is_ok());
    }

    #[test]
    fn rejects_degenerate_arrays() {
        assert!(MicArrayGeometry::new(vec![[0.0; 3]]).is_err());
        assert!(MicArrayGeometry::new(vec![[0.0; 3], [0.0; 3]]).is_err());
    }
}
