use nalgebra::Vector3;
use rayon::prelude::*;

const PARALLEL_EPS: f64 = 1e-6;

/// Orthonormal local axes at a node: the tangent plane is spanned by
/// `tangent` (the projected up direction) and `bitangent = normal x tangent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub normal: Vector3<f64>,
    pub tangent: Vector3<f64>,
    pub bitangent: Vector3<f64>,
}

impl Frame {
    /// Gram-Schmidt of `up` against `normal`. When `up` is parallel to the normal the
    /// fallbacks `+z` and then `+x` are tried.
    pub fn from_normal(normal: Vector3<f64>, up: Vector3<f64>) -> Frame {
        let normal = normal.normalize();
        let tangent = [up, Vector3::z(), Vector3::x()]
            .into_iter()
            .find_map(|u| {
                let t = u - normal * u.dot(&normal);
                let len = t.norm();
                (len >= PARALLEL_EPS).then(|| t / len)
            })
            // +z and +x cannot both be parallel to a unit normal.
            .expect("fallback up vectors exhausted");
        let bitangent = normal.cross(&tangent);
        Frame {
            normal,
            tangent,
            bitangent,
        }
    }

    /// Coordinates of `v` in the tangent plane, `(along tangent, along bitangent)`.
    pub fn project(&self, v: &Vector3<f64>) -> (f64, f64) {
        (v.dot(&self.tangent), v.dot(&self.bitangent))
    }
}

pub fn build_frames(normals: &[Vector3<f64>], up: Vector3<f64>) -> Vec<Frame> {
    normals
        .par_iter()
        .map(|&n| Frame::from_normal(n, up))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vector3<f64>, b: Vector3<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn already_orthogonal_up() {
        let f = Frame::from_normal(Vector3::z(), Vector3::y());
        assert!(close(f.tangent, Vector3::y()));
        assert!(close(f.bitangent, -Vector3::x()));
    }

    #[test]
    fn parallel_up_uses_fallback() {
        let f = Frame::from_normal(Vector3::y(), Vector3::y());
        assert!(close(f.tangent, Vector3::z()));
        assert!(close(f.bitangent, Vector3::x()));

        // Both up and the first fallback parallel to the normal.
        let f = Frame::from_normal(Vector3::z(), Vector3::z());
        assert!(close(f.tangent, Vector3::x()));
    }

    proptest::proptest! {
        #[test]
        fn frames_are_orthonormal(
            n in proptest::array::uniform3(-1.0..1.0f64),
            u in proptest::array::uniform3(-1.0..1.0f64),
        ) {
            let n = Vector3::from(n);
            let u = Vector3::from(u);
            proptest::prop_assume!(n.norm() > 1e-3 && u.norm() > 1e-3);
            let f = Frame::from_normal(n, u.normalize());
            for v in [f.normal, f.tangent, f.bitangent] {
                proptest::prop_assert!((v.norm() - 1.0).abs() < 1e-6);
            }
            proptest::prop_assert!(f.normal.dot(&f.tangent).abs() < 1e-6);
            proptest::prop_assert!(f.normal.dot(&f.bitangent).abs() < 1e-6);
            proptest::prop_assert!(f.tangent.dot(&f.bitangent).abs() < 1e-6);
            proptest::prop_assert!((f.normal.cross(&f.tangent) - f.bitangent).norm() < 1e-6);
        }
    }
}
