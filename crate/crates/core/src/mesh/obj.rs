use std::io::{self, Write};

use super::TriMesh;
use crate::scalar::Real;

/// Formats like C's `%.9g`.
pub(crate) fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes Wavefront OBJ with `v`, `vt` (one per triangle corner) and `f`
/// records, coordinates at 9 significant digits.
pub fn write_obj<T: Real, W: Write>(mesh: &TriMesh<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "# boxscan mesh: {} vertices, {} triangles", mesh.positions.len(), mesh.triangles.len())?;
    for p in &mesh.positions {
        writeln!(
            out,
            "v {} {} {}",
            fmt_g9(p.x.as_f64()),
            fmt_g9(p.y.as_f64()),
            fmt_g9(p.z.as_f64())
        )?;
    }
    for corners in &mesh.uv {
        for uv in corners {
            writeln!(out, "vt {} {}", fmt_g9(uv.x.as_f64()), fmt_g9(uv.y.as_f64()))?;
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let vt = 3 * t + 1;
        writeln!(
            out,
            "f {}/{} {}/{} {}/{}",
            tri[0] + 1,
            vt,
            tri[1] + 1,
            vt + 1,
            tri[2] + 1,
            vt + 2
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_meshes::unit_quad;

    #[test]
    fn g9_matches_printf() {
        assert_eq!(fmt_g9(0.3), "0.3");
        assert_eq!(fmt_g9(-0.15), "-0.15");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(0.0001), "0.0001");
        assert_eq!(fmt_g9(0.00001234), "1.234e-05");
        assert_eq!(fmt_g9(2.0), "2");
    }

    #[test]
    fn obj_records() {
        let mut buf = Vec::new();
        write_obj(&unit_quad(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(text.lines().filter(|l| l.starts_with("vt ")).count(), 6);
        assert!(text.contains("f 1/1 2/2 3/3"));
        assert!(text.contains("v 1 1 0"));
    }
}
