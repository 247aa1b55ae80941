use serde::{Deserialize, Serialize};

use super::BoxModelError;
use crate::linalg::Vec3;
use crate::scalar::{cast, Real};

/// Six-parameter description of a cardboard box. Lengths in meters,
/// angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoxParams<T: Real> {
    /// Outer body dimensions along X, Y and Z.
    pub size: Vec3<T>,
    pub flap_length: T,
    /// Inset of each flap tip corner toward the flap centerline.
    pub flap_taper: T,
    /// Per-flap opening angle, measured from the wall's vertical
    /// continuation: 0 upright, π/2 horizontal outward, π folded flat
    /// against the outer wall. Flap `i` hangs on wall `i` (walls -Y, +X,
    /// +Y, -X).
    pub open: [T; 4],
    pub thickness: T,
    pub bevel_radius: T,
    pub bevel_segments: u32,
}

impl<T: Real> BoxParams<T> {
    /// Flapless, sharp, zero-thickness box.
    pub fn open_box(size: Vec3<T>) -> Self {
        Self {
            size,
            flap_length: T::zero(),
            flap_taper: T::zero(),
            open: [T::zero(); 4],
            thickness: T::zero(),
            bevel_radius: T::zero(),
            bevel_segments: 1,
        }
    }

    pub fn cast<U: Real>(&self) -> BoxParams<U> {
        BoxParams {
            size: self.size.cast(),
            flap_length: cast(self.flap_length),
            flap_taper: cast(self.flap_taper),
            open: self.open.map(cast),
            thickness: cast(self.thickness),
            bevel_radius: cast(self.bevel_radius),
            bevel_segments: self.bevel_segments,
        }
    }

    pub fn has_flaps(&self) -> bool {
        self.flap_length > T::zero()
    }

    pub fn validate(&self) -> Result<(), BoxModelError> {
        let invalid = |field: &'static str, reason: String| Err(BoxModelError::InvalidParams { field, reason });
        let s = self.size;
        if !s.is_finite() || s.x <= T::zero() || s.y <= T::zero() || s.z <= T::zero() {
            return invalid("size", format!("all components must be finite and > 0, got {:?}", s.to_f64()));
        }
        let min_xy = s.x.min(s.y);
        let min_all = min_xy.min(s.z);
        let two = T::two();
        if !self.thickness.is_finite() || self.thickness < T::zero() || self.thickness >= min_xy / two {
            return invalid(
                "thickness",
                format!("must lie in [0, min(size_x, size_y)/2), got {}", self.thickness),
            );
        }
        if !self.bevel_radius.is_finite() || self.bevel_radius < T::zero() || self.bevel_radius >= min_all / two {
            return invalid(
                "bevel_radius",
                format!("must lie in [0, min(size)/2), got {}", self.bevel_radius),
            );
        }
        if !self.flap_length.is_finite() || self.flap_length < T::zero() {
            return invalid("flap_length", format!("must be >= 0, got {}", self.flap_length));
        }
        if !self.flap_taper.is_finite() || self.flap_taper < T::zero() || self.flap_taper > min_xy / two {
            return invalid(
                "flap_taper",
                format!("must lie in [0, min(size_x, size_y)/2], got {}", self.flap_taper),
            );
        }
        for a in self.open {
            if !a.is_finite() || a < T::zero() || a > T::PI() {
                return invalid("open", format!("every angle must lie in [0, π], got {a}"));
            }
        }
        if self.bevel_segments == 0 {
            return invalid("bevel_segments", "must be a positive count".to_string());
        }
        Ok(())
    }

    /// Radius of the outer fillet used on the box creases. The inner
    /// surface of a solidified box then keeps a fillet of `bevel_radius`,
    /// so the offset never inverts the rounded edges.
    pub fn outer_bevel_radius(&self) -> T {
        if self.bevel_radius <= T::zero() {
            return T::zero();
        }
        let segment = T::FRAC_PI_2() / T::lit(self.bevel_segments as f64);
        self.bevel_radius + self.thickness / (segment / T::two()).cos()
    }

    /// Distance from each wall corner to the start of the flap hinge. The
    /// hinge starts past the corner fillet plus one material thickness (or
    /// one bevel radius when that is larger), and at least one thickness
    /// inside the neighbouring wall's inner face, so flaps never touch the
    /// rounded corner or the neighbouring wall. Zero for a sharp
    /// zero-thickness box, where flaps hang on the full wall.
    pub fn hinge_inset(&self) -> T {
        let past_fillet = self.outer_bevel_radius() + self.thickness.max(self.bevel_radius);
        past_fillet.max(T::two() * self.thickness)
    }
}

impl Default for BoxParams<f64> {
    fn default() -> Self {
        Self {
            size: Vec3::new(0.25, 0.25, 0.25),
            flap_length: 0.12,
            flap_taper: 0.02,
            open: [0.9; 4],
            thickness: 0.003,
            bevel_radius: 0.004,
            bevel_segments: 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(p: &BoxParams<f64>) -> &'static str {
        match p.validate() {
            Err(BoxModelError::InvalidParams { field, .. }) => field,
            other => panic!("expected invalid params, got {other:?}"),
        }
    }

    #[test]
    fn default_is_valid() {
        BoxParams::default().validate().unwrap();
    }

    #[test]
    fn names_violated_field() {
        let mut p = BoxParams::default();
        p.size.y = 0.0;
        assert_eq!(field_of(&p), "size");

        let mut p = BoxParams::default();
        p.thickness = 0.2;
        assert_eq!(field_of(&p), "thickness");

        let mut p = BoxParams::default();
        p.bevel_radius = 0.13;
        assert_eq!(field_of(&p), "bevel_radius");

        let mut p = BoxParams::default();
        p.flap_length = -0.1;
        assert_eq!(field_of(&p), "flap_length");

        let mut p = BoxParams::default();
        p.flap_taper = 0.2;
        assert_eq!(field_of(&p), "flap_taper");

        let mut p = BoxParams::default();
        p.open[2] = 3.2;
        assert_eq!(field_of(&p), "open");

        let mut p = BoxParams::default();
        p.bevel_segments = 0;
        assert_eq!(field_of(&p), "bevel_segments");
    }

    #[test]
    fn json_roundtrip() {
        let p = BoxParams::default();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"size\":[0.25,0.25,0.25]"));
        let back: BoxParams<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
